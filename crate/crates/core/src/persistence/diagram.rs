use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image_io::SCALE;

/// A persistence interval `[birth, death)` in scaled units.
/// `death == None` marks an essential (infinite) bar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Bar {
    pub birth: u16,
    pub death: Option<u16>,
}

impl Bar {
    pub fn finite(birth: u16, death: u16) -> Self {
        Self {
            birth,
            death: Some(death),
        }
    }

    pub fn essential(birth: u16) -> Self {
        Self { birth, death: None }
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_none()
    }

    /// `birth <= t < death`, with an infinite death exceeding every `t`.
    pub fn is_alive_at(&self, t: u32) -> bool {
        self.birth as u32 <= t && self.death.is_none_or(|d| t < d as u32)
    }
}

impl Ord for Bar {
    fn cmp(&self, other: &Self) -> Ordering {
        let key = |b: &Bar| (b.birth, b.death.map_or(u32::MAX, u32::from));
        key(self).cmp(&key(other))
    }
}

impl PartialOrd for Bar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Bar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.death {
            Some(d) => write!(f, "({}, {})", self.birth, d),
            None => write!(f, "({}, inf)", self.birth),
        }
    }
}

/// A multiset of bars for one homology dimension.
///
/// Bars are kept sorted and zero-length bars are dropped on construction,
/// so `==` is multiset equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PersistenceDiagram {
    dim: u8,
    bars: Vec<Bar>,
}

impl PersistenceDiagram {
    pub fn new(dim: u8, bars: impl IntoIterator<Item = Bar>) -> Self {
        let mut bars: Vec<Bar> = bars
            .into_iter()
            .filter(|b| b.death.is_none_or(|d| b.birth < d))
            .collect();
        bars.sort_unstable();
        Self { dim, bars }
    }

    pub fn empty(dim: u8) -> Self {
        Self { dim, bars: Vec::new() }
    }

    pub fn dim(&self) -> u8 {
        self.dim
    }

    pub fn bars(&self) -> &[Bar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn essential_count(&self) -> usize {
        self.bars.iter().filter(|b| b.is_essential()).count()
    }

    /// Applies `map` to every birth and finite death. `map` should be
    /// increasing: bars whose mapped birth is not below their mapped death
    /// are dropped like any other zero-length bar.
    pub fn map_values(&self, mut map: impl FnMut(u16) -> u16) -> Self {
        Self::new(
            self.dim,
            self.bars.iter().map(|b| Bar {
                birth: map(b.birth),
                death: b.death.map(&mut map),
            }),
        )
    }
}

impl fmt::Display for PersistenceDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PD{} {{", self.dim)?;
        for (i, b) in self.bars.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{b}")?;
        }
        f.write_str("}")
    }
}

pub fn bars_alive_at(pd: &PersistenceDiagram, t: u32) -> usize {
    pd.bars.iter().filter(|b| b.is_alive_at(t)).count()
}

/// One serialized bar. Values are in unscaled `[0, 255]` units; `*_exact`
/// carries the exact rational (`"85"` or `"100/3"`), `birth`/`death` a float.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarRecord {
    pub dim: u8,
    pub birth: f64,
    pub birth_exact: String,
    pub death: Option<f64>,
    pub death_exact: Option<String>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DiagramParseError {
    #[error("invalid exact value {0:?}")]
    BadExact(String),
    #[error("invalid JSON: {0}")]
    Json(String),
}

/// Renders a scaled value as an exact unscaled rational.
pub fn exact_unscaled(v: u16) -> String {
    if v.is_multiple_of(SCALE) {
        (v / SCALE).to_string()
    } else {
        format!("{v}/{SCALE}")
    }
}

/// Inverse of [`exact_unscaled`].
pub fn parse_exact_unscaled(s: &str) -> Result<u16, DiagramParseError> {
    let bad = || DiagramParseError::BadExact(s.to_string());
    match s.split_once('/') {
        None => s.parse::<u16>().ok().and_then(|v| v.checked_mul(SCALE)).ok_or_else(bad),
        Some((num, den)) => {
            if den.parse::<u16>().ok() != Some(SCALE) {
                return Err(bad());
            }
            num.parse::<u16>().map_err(|_| bad())
        }
    }
}

pub fn to_records(diagrams: &[&PersistenceDiagram]) -> Vec<BarRecord> {
    diagrams
        .iter()
        .flat_map(|pd| {
            pd.bars.iter().map(move |b| BarRecord {
                dim: pd.dim,
                birth: b.birth as f64 / SCALE as f64,
                birth_exact: exact_unscaled(b.birth),
                death: b.death.map(|d| d as f64 / SCALE as f64),
                death_exact: b.death.map(exact_unscaled),
            })
        })
        .collect()
}

pub fn diagrams_to_json(diagrams: &[&PersistenceDiagram]) -> String {
    serde_json::to_string_pretty(&to_records(diagrams)).expect("records serialize")
}

/// Parses a JSON bar array back into diagrams for dimensions 0 and 1,
/// using the exact fields only.
pub fn diagrams_from_json(json: &str) -> Result<(PersistenceDiagram, PersistenceDiagram), DiagramParseError> {
    let records: Vec<BarRecord> = serde_json::from_str(json).map_err(|e| DiagramParseError::Json(e.to_string()))?;
    let mut bars = [Vec::new(), Vec::new()];
    for r in records {
        let birth = parse_exact_unscaled(&r.birth_exact)?;
        let death = r.death_exact.as_deref().map(parse_exact_unscaled).transpose()?;
        let slot = bars
            .get_mut(r.dim as usize)
            .ok_or_else(|| DiagramParseError::Json(format!("unsupported dimension {}", r.dim)))?;
        slot.push(Bar { birth, death });
    }
    let [b0, b1] = bars;
    Ok((PersistenceDiagram::new(0, b0), PersistenceDiagram::new(1, b1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn worked_pd0() -> PersistenceDiagram {
        PersistenceDiagram::new(
            0,
            [
                Bar::essential(1),
                Bar::finite(1, 2),
                Bar::finite(1, 2),
                Bar::finite(1, 3),
            ],
        )
    }

    fn worked_pd1() -> PersistenceDiagram {
        PersistenceDiagram::new(1, [Bar::finite(2, 4), Bar::finite(3, 5), Bar::finite(4, 5)])
    }

    #[test]
    fn alive_counts_on_worked_example() {
        assert_eq!(bars_alive_at(&worked_pd0(), 1), 4);
        assert_eq!(bars_alive_at(&worked_pd1(), 3), 2);
        assert_eq!(bars_alive_at(&worked_pd0(), 0), 0);
        assert_eq!(bars_alive_at(&worked_pd1(), 1), 0);
    }

    #[test]
    fn zero_length_bars_are_dropped() {
        let pd = PersistenceDiagram::new(0, [Bar::finite(4, 4), Bar::finite(2, 5)]);
        assert_eq!(pd.bars(), &[Bar::finite(2, 5)]);
    }

    #[test]
    fn essential_sorts_last() {
        let pd = PersistenceDiagram::new(0, [Bar::essential(1), Bar::finite(1, 700)]);
        assert_eq!(pd.bars()[1], Bar::essential(1));
    }

    #[test]
    fn exact_strings() {
        assert_eq!(exact_unscaled(100), "100/3");
        assert_eq!(exact_unscaled(255), "85");
        assert_eq!(parse_exact_unscaled("100/3"), Ok(100));
        assert_eq!(parse_exact_unscaled("85"), Ok(255));
        assert!(parse_exact_unscaled("1/2").is_err());
    }

    #[test]
    fn json_layout() {
        let pd0 = PersistenceDiagram::new(0, [Bar::essential(0), Bar::finite(100, 300)]);
        let json = diagrams_to_json(&[&pd0]);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert!(v[0]["death"].is_null());
        assert_eq!(v[0]["dim"], 0);
        assert_eq!(v[1]["birth_exact"], "100/3");
        assert_eq!(v[1]["death_exact"], "100");
        assert_eq!(v[1]["death"], 100.0);
    }

    proptest! {
        #[test]
        fn json_round_trip(bars in proptest::collection::vec((0u16..=765, proptest::option::of(0u16..=765)), 0..20)) {
            let bars: Vec<Bar> = bars.into_iter().map(|(b, d)| Bar { birth: b, death: d.map(|d| d.max(b)) }).collect();
            let pd0 = PersistenceDiagram::new(0, bars.clone());
            let pd1 = PersistenceDiagram::new(1, bars);
            let (a, b) = diagrams_from_json(&diagrams_to_json(&[&pd0, &pd1])).unwrap();
            prop_assert_eq!(a, pd0);
            prop_assert_eq!(b, pd1);
        }
    }
}
