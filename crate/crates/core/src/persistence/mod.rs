//! Persistence diagrams of pixel filtrations.
//!
//! Pixels are closed unit squares (the top-cell, or T-, construction), so
//! active pixels that share only a corner are connected. Vertices and edges
//! enter the filtration with their first incident pixel.
//!
//! * Dimension 0 is a union-find sweep over pixels in ascending activation,
//!   merging 8-neighbours and pairing by the elder rule.
//! * Dimension 1 uses planar duality: a hole of the active set is a bounded
//!   4-connected component of the inactive set. Sweeping pixels in
//!   descending activation with a virtual outside node, every merge of a
//!   bounded inactive component at value `v` into an older one marks a hole
//!   born at `v` that dies at the component's maximum.
//!
//! Both sweeps are `O(n log n)` in the number of pixels, dominated by the
//! sort.

mod diagram;
mod union_find;

pub use diagram::{
    bars_alive_at, diagrams_from_json, diagrams_to_json, exact_unscaled, parse_exact_unscaled, to_records, Bar,
    BarRecord, DiagramParseError, PersistenceDiagram,
};
pub use union_find::UnionFind;

use crate::filtration::FiltrationField;

/// Pixel indices ordered by `(activation, row-major index)`.
fn ascending_order(f: &FiltrationField) -> Vec<u32> {
    let mut keys: Vec<u64> = f
        .activation()
        .iter()
        .enumerate()
        .map(|(i, &v)| ((v as u64) << 32) | i as u64)
        .collect();
    keys.sort_unstable();
    keys.into_iter().map(|k| k as u32).collect()
}

/// Dimension-0 and dimension-1 diagrams of an ascending activation field.
pub fn compute_pd(f: &FiltrationField) -> (PersistenceDiagram, PersistenceDiagram) {
    let order = ascending_order(f);
    (
        PersistenceDiagram::new(0, components_sweep(f, &order)),
        PersistenceDiagram::new(1, holes_sweep(f, &order)),
    )
}

pub fn compute_pd0(f: &FiltrationField) -> PersistenceDiagram {
    PersistenceDiagram::new(0, components_sweep(f, &ascending_order(f)))
}

pub fn compute_pd1(f: &FiltrationField) -> PersistenceDiagram {
    PersistenceDiagram::new(1, holes_sweep(f, &ascending_order(f)))
}

const NEIGHBOURS_8: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];
const NEIGHBOURS_4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

fn components_sweep(f: &FiltrationField, order: &[u32]) -> Vec<Bar> {
    let (rows, cols) = (f.rows() as isize, f.cols() as isize);
    let act = f.activation();
    let n = act.len();
    let mut uf = UnionFind::new(n);
    // For each root: birth value and the index of the pixel that created it.
    let mut birth = vec![0u16; n];
    let mut origin = vec![0u32; n];
    let mut seen = vec![false; n];
    let mut bars = Vec::new();

    for &p in order {
        let p = p as usize;
        let v = act[p];
        birth[p] = v;
        origin[p] = p as u32;
        seen[p] = true;
        let (r, c) = ((p / cols as usize) as isize, (p % cols as usize) as isize);
        for (dr, dc) in NEIGHBOURS_8 {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nr >= rows || nc < 0 || nc >= cols {
                continue;
            }
            let q = (nr * cols + nc) as usize;
            if !seen[q] {
                continue;
            }
            let (a, b) = (uf.find(p), uf.find(q));
            if a == b {
                continue;
            }
            let (elder, younger) = if (birth[a], origin[a]) <= (birth[b], origin[b]) {
                (a, b)
            } else {
                (b, a)
            };
            if birth[younger] < v {
                bars.push(Bar::finite(birth[younger], v));
            }
            let (eb, eo) = (birth[elder], origin[elder]);
            let root = uf.link(a, b);
            birth[root] = eb;
            origin[root] = eo;
        }
    }
    if let Some(&first) = order.first() {
        bars.push(Bar::essential(act[first as usize]));
    }
    bars
}

fn holes_sweep(f: &FiltrationField, order: &[u32]) -> Vec<Bar> {
    let (rows, cols) = (f.rows() as isize, f.cols() as isize);
    let act = f.activation();
    let n = act.len();
    let outside = n;
    let mut uf = UnionFind::new(n + 1);
    // Component "birth" in the descending sweep is its largest activation;
    // the outside is older than everything.
    let mut top = vec![0u32; n + 1];
    top[outside] = u32::MAX;
    let mut seen = vec![false; n + 1];
    seen[outside] = true;
    let mut bars = Vec::new();

    for &p in order.iter().rev() {
        let p = p as usize;
        let v = act[p];
        top[p] = v as u32;
        seen[p] = true;
        let (r, c) = ((p / cols as usize) as isize, (p % cols as usize) as isize);
        let mut merge = |uf: &mut UnionFind, q: usize, top: &mut Vec<u32>| {
            let (a, b) = (uf.find(p), uf.find(q));
            if a == b {
                return;
            }
            let (elder, younger) = if top[a] >= top[b] { (a, b) } else { (b, a) };
            let dying = top[younger];
            if (v as u32) < dying {
                bars.push(Bar::finite(v, dying as u16));
            }
            let t = top[elder];
            let root = uf.link(a, b);
            top[root] = t;
        };
        for (dr, dc) in NEIGHBOURS_4 {
            let (nr, nc) = (r + dr, c + dc);
            let q = if nr < 0 || nr >= rows || nc < 0 || nc >= cols {
                outside
            } else {
                (nr * cols + nc) as usize
            };
            if seen[q] {
                merge(&mut uf, q, &mut top);
            }
        }
    }
    bars
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::{binary_slice, Direction};
    use crate::verification::betti_by_counting;

    fn field(rows: usize, cols: usize, values: &[u16]) -> FiltrationField {
        FiltrationField::from_activations(rows, cols, values.to_vec()).unwrap()
    }

    #[test]
    fn constant_field() {
        let (pd0, pd1) = compute_pd(&field(4, 3, &[210; 12]));
        assert_eq!(pd0.bars(), &[Bar::essential(210)]);
        assert!(pd1.is_empty());
    }

    #[test]
    fn ring_with_bright_centre() {
        let (pd0, pd1) = compute_pd(&field(3, 3, &[0, 0, 0, 0, 765, 0, 0, 0, 0]));
        assert_eq!(pd0.bars(), &[Bar::essential(0)]);
        assert_eq!(pd1.bars(), &[Bar::finite(0, 765)]);
    }

    #[test]
    fn diagonal_pixels_connect_at_the_corner() {
        // 0 at the diagonal, 9 off it: the diagonal is one component.
        let (pd0, pd1) = compute_pd(&field(2, 2, &[0, 9, 9, 0]));
        assert_eq!(pd0.bars(), &[Bar::essential(0)]);
        assert!(pd1.is_empty());
    }

    #[test]
    fn two_minima_separated_by_a_ridge() {
        let (pd0, _) = compute_pd(&field(1, 3, &[1, 7, 3]));
        assert_eq!(pd0.bars(), &[Bar::essential(1), Bar::finite(3, 7)]);
    }

    #[test]
    fn elder_rule_tie_break_keeps_lowest_index() {
        // Two components born at 5 merge at 8; one dies, one is essential.
        let (pd0, _) = compute_pd(&field(1, 3, &[5, 8, 5]));
        assert_eq!(pd0.bars(), &[Bar::finite(5, 8), Bar::essential(5)]);
    }

    #[test]
    fn two_holes_fill_at_different_times() {
        #[rustfmt::skip]
        let values = [
            0, 0, 0, 0, 0,
            0, 4, 0, 6, 0,
            0, 0, 0, 0, 0,
        ];
        let (pd0, pd1) = compute_pd(&field(3, 5, &values));
        assert_eq!(pd0.bars(), &[Bar::essential(0)]);
        assert_eq!(pd1.bars(), &[Bar::finite(0, 4), Bar::finite(0, 6)]);
    }

    #[test]
    fn betti_numbers_match_counting_on_a_small_field() {
        #[rustfmt::skip]
        let values = [
            5, 1, 5, 9,
            1, 9, 1, 2,
            5, 1, 5, 9,
        ];
        let f = field(3, 4, &values);
        let (pd0, pd1) = compute_pd(&f);
        for t in 0..=10 {
            let (b0, b1) = betti_by_counting(&binary_slice(&f, t).unwrap());
            assert_eq!((bars_alive_at(&pd0, t), bars_alive_at(&pd1, t)), (b0, b1), "t={t}");
        }
    }

    #[test]
    fn superlevel_of_channel() {
        let ch = crate::image_io::ChannelMatrix::from_scaled(1, 3, vec![600, 0, 700]).unwrap();
        let f = crate::filtration::build_filtration(&ch, Direction::Superlevel, None);
        let (pd0, _) = compute_pd(&f);
        assert_eq!(pd0.bars(), &[Bar::essential(65), Bar::finite(165, 765)]);
    }
}
