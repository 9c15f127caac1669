use std::collections::BTreeMap;

use serde::Serialize;

use super::{FeatureLayout, VectorizeError};
use crate::filtration::Direction;
use crate::image_io::Channel;

/// Median and band curves of one class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassBand {
    pub label: String,
    pub samples: usize,
    pub median: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

/// Per-class summaries of one Betti block across a sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BandCurves {
    pub channel: Channel,
    pub dim: u8,
    pub band: f64,
    /// Scaled thresholds (`0..=765`).
    pub thresholds: Vec<u16>,
    /// Classes in label order.
    pub classes: Vec<ClassBand>,
}

/// Inverse empirical CDF: the smallest sample `x` with `F(x) >= q`.
///
/// `sorted` must be non-empty and ascending.
pub fn inverse_cdf_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    // Guard against q * n landing a hair above an integer.
    let rank = (q * n as f64 - 1e-9).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Median and `band`-wide central quantile range of the `(channel, dim)`
/// sublevel block, per class. With `band = 0.4` the band spans the 0.30 and
/// 0.70 quantiles.
pub fn class_band_curves(
    rows: &[Vec<f64>],
    labels: &[String],
    layout: &FeatureLayout,
    channel: Channel,
    dim: u8,
    band: f64,
) -> Result<BandCurves, VectorizeError> {
    if !(band > 0.0 && band < 1.0) {
        return Err(VectorizeError::BadBand(band));
    }
    if dim > 1 {
        return Err(VectorizeError::UnknownDim(dim));
    }
    if rows.len() != labels.len() {
        return Err(VectorizeError::LabelCount {
            rows: rows.len(),
            labels: labels.len(),
        });
    }
    if rows.is_empty() {
        return Err(VectorizeError::NoSamples);
    }
    let range = layout
        .block_range(Direction::Sublevel, channel, dim)
        .ok_or(VectorizeError::UnknownBlock {
            channel,
            direction: Direction::Sublevel,
        })?;
    let mut by_class: BTreeMap<&str, Vec<&[f64]>> = BTreeMap::new();
    for (i, (row, label)) in rows.iter().zip(labels).enumerate() {
        if row.len() != layout.len() {
            return Err(VectorizeError::RowLength {
                row: i,
                found: row.len(),
                expected: layout.len(),
            });
        }
        by_class.entry(label.as_str()).or_default().push(&row[range.clone()]);
    }

    let (q_lo, q_hi) = ((1.0 - band) / 2.0, (1.0 + band) / 2.0);
    let classes = by_class
        .into_iter()
        .map(|(label, curves)| {
            if curves.is_empty() {
                return Err(VectorizeError::EmptyClass(label.to_string()));
            }
            let steps = range.len();
            let mut out = ClassBand {
                label: label.to_string(),
                samples: curves.len(),
                median: Vec::with_capacity(steps),
                lower: Vec::with_capacity(steps),
                upper: Vec::with_capacity(steps),
            };
            let mut column = Vec::with_capacity(curves.len());
            for k in 0..steps {
                column.clear();
                column.extend(curves.iter().map(|c| c[k]));
                column.sort_by(f64::total_cmp);
                out.median.push(inverse_cdf_quantile(&column, 0.5));
                out.lower.push(inverse_cdf_quantile(&column, q_lo));
                out.upper.push(inverse_cdf_quantile(&column, q_hi));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(BandCurves {
        channel,
        dim,
        band,
        thresholds: layout.grid().to_vec(),
        classes,
    })
}
