// mdbook cannot run listings that depend on external crates, so each
// chapter is pulled in as a module doc and `cargo test --doc` runs its
// code blocks against the real library. A failing doctest names the
// module, which names the chapter.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/filtrations.md")]
pub mod filtrations {}
#[doc = include_str!("../../../book/src/persistence.md")]
pub mod persistence {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/betti-vectors.md")]
pub mod betti_vectors {}
#[doc = include_str!("../../../book/src/boosted-trees.md")]
pub mod boosted_trees {}
#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
