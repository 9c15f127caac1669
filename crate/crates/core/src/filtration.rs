//! Sublevel and superlevel filtrations of a channel.
//!
//! Both directions are expressed as an ascending *activation* field: a pixel
//! belongs to the binary image at threshold `t` iff its activation is `<= t`.
//! Superlevel activation is `765 - value`, so one ascending persistence
//! engine serves both.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image_io::{Channel, ChannelMatrix, SCALED_MAX};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FiltrationError {
    #[error("threshold {0} outside 0..={SCALED_MAX}")]
    ThresholdOutOfRange(u32),
    #[error("a threshold grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("activation {value} at index {index} exceeds {SCALED_MAX}")]
    ActivationOutOfRange { index: usize, value: u16 },
    #[error("field of {rows}x{cols} cannot hold {len} values")]
    Shape { rows: usize, cols: usize, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Sublevel,
    Superlevel,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Sublevel => "sublevel",
            Direction::Superlevel => "superlevel",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sublevel" => Ok(Direction::Sublevel),
            "superlevel" => Ok(Direction::Superlevel),
            _ => Err(format!("unknown direction {s:?}")),
        }
    }
}

/// Per-pixel activation values, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiltrationField {
    rows: usize,
    cols: usize,
    activation: Vec<u16>,
    direction: Direction,
    channel: Option<Channel>,
}

impl FiltrationField {
    /// A sublevel field over raw activation values, not tied to any channel.
    pub fn from_activations(rows: usize, cols: usize, activation: Vec<u16>) -> Result<Self, FiltrationError> {
        if rows == 0 || cols == 0 || activation.len() != rows * cols {
            return Err(FiltrationError::Shape {
                rows,
                cols,
                len: activation.len(),
            });
        }
        if let Some(index) = activation.iter().position(|&v| v > SCALED_MAX) {
            return Err(FiltrationError::ActivationOutOfRange {
                index,
                value: activation[index],
            });
        }
        Ok(Self {
            rows,
            cols,
            activation,
            direction: Direction::Sublevel,
            channel: None,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.activation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.activation.is_empty()
    }

    pub fn activation(&self) -> &[u16] {
        &self.activation
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.activation[row * self.cols + col]
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn channel(&self) -> Option<Channel> {
        self.channel
    }

    /// The field with every activation replaced by `765 - activation`.
    pub fn inverted(&self) -> Self {
        Self {
            activation: self.activation.iter().map(|&v| SCALED_MAX - v).collect(),
            direction: match self.direction {
                Direction::Sublevel => Direction::Superlevel,
                Direction::Superlevel => Direction::Sublevel,
            },
            ..self.clone()
        }
    }
}

pub fn build_filtration(ch: &ChannelMatrix, direction: Direction, channel: Option<Channel>) -> FiltrationField {
    let activation = match direction {
        Direction::Sublevel => ch.values().to_vec(),
        Direction::Superlevel => ch.values().iter().map(|&v| SCALED_MAX - v).collect(),
    };
    FiltrationField {
        rows: ch.rows(),
        cols: ch.cols(),
        activation,
        direction,
        channel,
    }
}

/// The set of active pixels at one threshold.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryImage {
    rows: usize,
    cols: usize,
    active: Vec<bool>,
}

impl BinaryImage {
    pub fn new(rows: usize, cols: usize, active: Vec<bool>) -> Self {
        assert_eq!(active.len(), rows * cols, "binary image shape mismatch");
        Self { rows, cols, active }
    }

    /// Parses rows of `0`/`1` (or `.`/`#`) characters; whitespace is ignored.
    pub fn from_rows(rows: &[&str]) -> Self {
        let parsed: Vec<Vec<bool>> = rows
            .iter()
            .map(|r| {
                r.chars()
                    .filter(|c| !c.is_whitespace())
                    .map(|c| matches!(c, '1' | '#'))
                    .collect()
            })
            .collect();
        let cols = parsed.first().map_or(0, Vec::len);
        assert!(parsed.iter().all(|r| r.len() == cols), "ragged binary image");
        Self::new(parsed.len(), cols, parsed.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn is_active(&self, row: usize, col: usize) -> bool {
        self.active[row * self.cols + col]
    }

    pub fn count_active(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// `true` if every pixel active here is also active in `other`.
    pub fn is_subset_of(&self, other: &BinaryImage) -> bool {
        self.active.iter().zip(&other.active).all(|(&a, &b)| !a || b)
    }
}

pub fn binary_slice(f: &FiltrationField, t: u32) -> Result<BinaryImage, FiltrationError> {
    if t > SCALED_MAX as u32 {
        return Err(FiltrationError::ThresholdOutOfRange(t));
    }
    Ok(BinaryImage {
        rows: f.rows,
        cols: f.cols,
        active: f.activation.iter().map(|&v| (v as u32) <= t).collect(),
    })
}

/// Evenly spaced thresholds over `0..=765`, endpoints included:
/// `t_k = round(765 * k / (n - 1))` for `k = 0..n`.
pub fn threshold_grid(n: usize) -> Result<Vec<u16>, FiltrationError> {
    if n < 2 {
        return Err(FiltrationError::GridTooSmall(n));
    }
    let span = SCALED_MAX as u64;
    let denom = (n - 1) as u64;
    // Integer round-half-up of span * k / denom.
    Ok((0..n as u64)
        .map(|k| ((2 * span * k + denom) / (2 * denom)) as u16)
        .collect())
}

/// Number of thresholds used by the default feature pipeline.
pub const DEFAULT_GRID_SIZE: usize = 50;

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matrix(rows: usize, cols: usize, values: Vec<u16>) -> ChannelMatrix {
        ChannelMatrix::from_scaled(rows, cols, values).unwrap()
    }

    #[test]
    fn sublevel_is_identity_and_superlevel_inverts() {
        let ch = matrix(1, 2, vec![0, 765]);
        assert_eq!(build_filtration(&ch, Direction::Sublevel, None).activation(), &[0, 765]);
        assert_eq!(
            build_filtration(&ch, Direction::Superlevel, None).activation(),
            &[765, 0]
        );
    }

    #[test]
    fn constant_matrix_gives_constant_field() {
        let ch = matrix(3, 2, vec![300; 6]);
        for dir in [Direction::Sublevel, Direction::Superlevel] {
            let f = build_filtration(&ch, dir, None);
            assert!(f.activation().windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn slices() {
        let f = FiltrationField::from_activations(2, 2, vec![0, 300, 600, 765]).unwrap();
        assert_eq!(binary_slice(&f, 300).unwrap().count_active(), 2);
        assert_eq!(binary_slice(&f, 765).unwrap().count_active(), 4);
        let g = FiltrationField::from_activations(1, 2, vec![10, 20]).unwrap();
        assert_eq!(binary_slice(&g, 9).unwrap().count_active(), 0);
        assert_eq!(binary_slice(&f, 766), Err(FiltrationError::ThresholdOutOfRange(766)));
    }

    #[test]
    fn grid_values() {
        assert_eq!(threshold_grid(2).unwrap(), vec![0, 765]);
        let g = threshold_grid(50).unwrap();
        assert_eq!(g.len(), 50);
        assert_eq!((g[0], g[1], g[49]), (0, 16, 765));
        assert_eq!(threshold_grid(1), Err(FiltrationError::GridTooSmall(1)));
        // Float reference for the rounding formula.
        for n in 2..200 {
            let g = threshold_grid(n).unwrap();
            for (k, &t) in g.iter().enumerate() {
                let exact = 765.0 * k as f64 / (n - 1) as f64;
                assert_eq!(t as f64, (exact + 0.5).floor(), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn field_rejects_out_of_range() {
        assert!(FiltrationField::from_activations(1, 1, vec![766]).is_err());
        assert!(FiltrationField::from_activations(1, 2, vec![1]).is_err());
    }

    proptest! {
        #[test]
        fn grid_strictly_increasing(n in 2usize..766) {
            let g = threshold_grid(n).unwrap();
            prop_assert!(g.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(g[0], 0);
            prop_assert_eq!(*g.last().unwrap(), 765);
        }

        #[test]
        fn slices_are_nested(values in proptest::collection::vec(0u16..=765, 12), a in 0u32..=765, b in 0u32..=765) {
            let f = FiltrationField::from_activations(3, 4, values).unwrap();
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assert!(binary_slice(&f, lo).unwrap().is_subset_of(&binary_slice(&f, hi).unwrap()));
        }

        #[test]
        fn superlevel_equals_sublevel_of_inverted(values in proptest::collection::vec(0u16..=765, 9), t in 0u32..=765) {
            let ch = matrix(3, 3, values.clone());
            let inv = matrix(3, 3, values.iter().map(|v| 765 - v).collect());
            let sup = build_filtration(&ch, Direction::Superlevel, None);
            let sub_inv = build_filtration(&inv, Direction::Sublevel, None);
            prop_assert_eq!(binary_slice(&sup, t).unwrap(), binary_slice(&sub_inv, t).unwrap());
        }
    }
}
