//! Betti-curve vectorization.
//!
//! A diagram is sampled on an increasing threshold grid: entry `k` of the
//! Betti vector is the number of bars alive at `grid[k]`. The image feature
//! vector concatenates these samples for every channel and dimension in a
//! fixed order, described by [`FeatureLayout`].

mod bands;
mod svg;

pub use bands::{class_band_curves, inverse_cdf_quantile, BandCurves, ClassBand};
pub use svg::{emit_betti_svg, render_betti_svg};

use std::ops::Range;

use thiserror::Error;

use crate::filtration::{build_filtration, threshold_grid, Direction, DEFAULT_GRID_SIZE};
use crate::image_io::{extract_channel, Channel, RgbImage};
use crate::persistence::{bars_alive_at, compute_pd, PersistenceDiagram};

#[derive(Debug, Error)]
pub enum VectorizeError {
    #[error("class {0:?} has no samples")]
    EmptyClass(String),
    #[error("no samples to summarize")]
    NoSamples,
    #[error("unsupported homology dimension {0} (expected 0 or 1)")]
    UnknownDim(u8),
    #[error("layout has no {direction} block for channel {channel}")]
    UnknownBlock { channel: Channel, direction: Direction },
    #[error("band fraction {0} must lie strictly between 0 and 1")]
    BadBand(f64),
    #[error("row {row} has {found} features, layout expects {expected}")]
    RowLength { row: usize, found: usize, expected: usize },
    #[error("{rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Betti numbers of one diagram sampled on a threshold grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BettiVector {
    pub dim: u8,
    pub channel: Option<Channel>,
    pub values: Vec<u32>,
    pub thresholds: Vec<u16>,
}

/// Samples `pd` at every grid threshold. `grid` must be strictly increasing.
pub fn betti_vector(pd: &PersistenceDiagram, grid: &[u16]) -> BettiVector {
    assert!(
        grid.windows(2).all(|w| w[0] < w[1]),
        "threshold grid must be strictly increasing"
    );
    BettiVector {
        dim: pd.dim(),
        channel: None,
        values: grid.iter().map(|&t| bars_alive_at(pd, t as u32) as u32).collect(),
        thresholds: grid.to_vec(),
    }
}

/// One position of the feature vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureSlot {
    pub direction: Direction,
    pub channel: Channel,
    pub dim: u8,
    /// Position in the threshold grid.
    pub step: usize,
    pub threshold: u16,
}

/// Order of the feature vector: for each direction, for each channel in
/// R, G, B, Gray order, the β0 block then the β1 block, each block in
/// threshold order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureLayout {
    grid: Vec<u16>,
    directions: Vec<Direction>,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        Self::standard()
    }
}

impl FeatureLayout {
    /// 50 thresholds, sublevel filtrations only: 400 features.
    pub fn standard() -> Self {
        Self::new(DEFAULT_GRID_SIZE, &[Direction::Sublevel])
    }

    /// The standard layout followed by the same 400 slots for superlevel
    /// filtrations.
    pub fn with_superlevel() -> Self {
        Self::new(DEFAULT_GRID_SIZE, &[Direction::Sublevel, Direction::Superlevel])
    }

    pub fn new(grid_size: usize, directions: &[Direction]) -> Self {
        assert!(!directions.is_empty(), "layout needs at least one direction");
        Self {
            grid: threshold_grid(grid_size).expect("grid size >= 2"),
            directions: directions.to_vec(),
        }
    }

    pub fn grid(&self) -> &[u16] {
        &self.grid
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len() * Channel::ALL.len() * 2 * self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn block_len(&self) -> usize {
        self.grid.len()
    }

    pub fn block_range(&self, direction: Direction, channel: Channel, dim: u8) -> Option<Range<usize>> {
        let d = self.directions.iter().position(|&x| x == direction)?;
        if dim > 1 {
            return None;
        }
        let block = (d * Channel::ALL.len() + channel.index()) * 2 + dim as usize;
        let start = block * self.block_len();
        Some(start..start + self.block_len())
    }

    pub fn slot(&self, index: usize) -> Option<FeatureSlot> {
        if index >= self.len() {
            return None;
        }
        let step = index % self.block_len();
        let block = index / self.block_len();
        let dim = (block % 2) as u8;
        let channel = Channel::ALL[(block / 2) % Channel::ALL.len()];
        let direction = self.directions[block / (2 * Channel::ALL.len())];
        Some(FeatureSlot {
            direction,
            channel,
            dim,
            step,
            threshold: self.grid[step],
        })
    }

    /// Column name of a feature: `f000`, `f001`, ...
    pub fn feature_name(index: usize) -> String {
        format!("f{index:03}")
    }
}

/// The concatenated Betti vectors of one image.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TopoFeatureVector {
    values: Vec<u32>,
}

impl TopoFeatureVector {
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn block<'a>(
        &'a self,
        layout: &FeatureLayout,
        direction: Direction,
        channel: Channel,
        dim: u8,
    ) -> Option<&'a [u32]> {
        layout.block_range(direction, channel, dim).map(|r| &self.values[r])
    }

    pub fn into_values(self) -> Vec<u32> {
        self.values
    }
}

/// The 400-dimensional sublevel feature vector of an image.
pub fn topo_feature_vector(img: &RgbImage) -> TopoFeatureVector {
    feature_vector_with_layout(img, &FeatureLayout::standard())
}

pub fn feature_vector_with_layout(img: &RgbImage, layout: &FeatureLayout) -> TopoFeatureVector {
    let mut values = Vec::with_capacity(layout.len());
    for &direction in layout.directions() {
        for channel in Channel::ALL {
            let field = build_filtration(&extract_channel(img, channel), direction, Some(channel));
            let (pd0, pd1) = compute_pd(&field);
            values.extend(betti_vector(&pd0, layout.grid()).values);
            values.extend(betti_vector(&pd1, layout.grid()).values);
        }
    }
    debug_assert_eq!(values.len(), layout.len());
    TopoFeatureVector { values }
}
