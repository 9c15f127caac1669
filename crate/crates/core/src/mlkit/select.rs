use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{feature_importance, predict_proba, train_gbt, FeatureMatrix, GbtHyperparams, GbtModel, MlError};

/// The columns kept by top-k selection, in ranking order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSelection {
    pub source_width: usize,
    pub indices: Vec<usize>,
}

impl FeatureSelection {
    pub fn project(&self, x: &FeatureMatrix) -> Result<FeatureMatrix, MlError> {
        if x.cols() != self.source_width {
            return Err(MlError::FeatureCount {
                expected: self.source_width,
                found: x.cols(),
            });
        }
        x.select_columns(&self.indices)
    }
}

/// Keeps the `k` best-ranked columns of `x`, reordered by rank.
pub fn select_top_k(
    ranking: &[(usize, f64)],
    x: &FeatureMatrix,
    k: usize,
) -> Result<(FeatureMatrix, FeatureSelection), MlError> {
    if k > x.cols() {
        return Err(MlError::TooManyFeatures { k, available: x.cols() });
    }
    if k == 0 {
        return Err(MlError::Empty);
    }
    let mut seen = vec![false; x.cols()];
    for &(f, _) in ranking {
        if f >= x.cols() || std::mem::replace(&mut seen[f], true) {
            return Err(MlError::BadRanking(f));
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(MlError::BadRanking(missing));
    }
    let selection = FeatureSelection {
        source_width: x.cols(),
        indices: ranking[..k].iter().map(|r| r.0).collect(),
    };
    Ok((selection.project(x)?, selection))
}

/// Writes a ranking as CSV `rank,feature,gain` with 1-based ranks.
pub fn write_ranking_csv(ranking: &[(usize, f64)], out: impl Write) -> Result<(), MlError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| MlError::Csv(e.to_string());
    w.write_record(["rank", "feature", "gain"]).map_err(err)?;
    for (i, (f, g)) in ranking.iter().enumerate() {
        w.write_record([(i + 1).to_string(), f.to_string(), g.to_string()])
            .map_err(err)?;
    }
    w.flush().map_err(|e| MlError::Csv(e.to_string()))
}

pub fn read_ranking_csv(input: impl Read) -> Result<Vec<(usize, f64)>, MlError> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| MlError::Csv(e.to_string()))?;
        let field = |j: usize| {
            rec.get(j)
                .ok_or_else(|| MlError::Csv(format!("row {} is short", i + 1)))
        };
        let rank: usize = field(0)?
            .parse()
            .map_err(|_| MlError::Csv(format!("bad rank on row {}", i + 1)))?;
        if rank != i + 1 {
            return Err(MlError::Csv(format!("rank {rank} out of sequence")));
        }
        let f = field(1)?
            .parse()
            .map_err(|_| MlError::Csv(format!("bad feature on row {}", i + 1)))?;
        let g = field(2)?
            .parse()
            .map_err(|_| MlError::Csv(format!("bad gain on row {}", i + 1)))?;
        out.push((f, g));
    }
    Ok(out)
}

/// A model trained on a top-k projection of the full feature vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKClassifier {
    /// Ranking from the full-width model the selection was taken from.
    pub ranking: Vec<(usize, f64)>,
    pub selection: FeatureSelection,
    pub model: GbtModel,
}

impl TopKClassifier {
    /// Ranks features with a full-width model, keeps the top `k` and
    /// retrains on them.
    pub fn fit<S: AsRef<str>>(x: &FeatureMatrix, y: &[S], k: usize, hp: &GbtHyperparams) -> Result<Self, MlError> {
        let full = train_gbt(x, y, hp)?;
        let ranking = feature_importance(&full);
        Self::fit_with_ranking(x, y, ranking, k, hp)
    }

    pub fn fit_with_ranking<S: AsRef<str>>(
        x: &FeatureMatrix,
        y: &[S],
        ranking: Vec<(usize, f64)>,
        k: usize,
        hp: &GbtHyperparams,
    ) -> Result<Self, MlError> {
        let (reduced, selection) = select_top_k(&ranking, x, k)?;
        let model = train_gbt(&reduced, y, hp)?;
        Ok(Self {
            ranking,
            selection,
            model,
        })
    }

    /// Probabilities for full-width rows.
    pub fn predict_proba(&self, x: &FeatureMatrix) -> Result<Vec<Vec<f64>>, MlError> {
        predict_proba(&self.model, &self.selection.project(x)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix() -> FeatureMatrix {
        FeatureMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap()
    }

    const RANKING: [(usize, f64); 3] = [(2, 9.0), (0, 4.0), (1, 0.0)];

    #[test]
    fn full_k_is_a_permutation() {
        let (m, sel) = select_top_k(&RANKING, &matrix(), 3).unwrap();
        assert_eq!(sel.indices, vec![2, 0, 1]);
        assert_eq!(m.row(0), &[3.0, 1.0, 2.0]);
    }

    #[test]
    fn k_one_keeps_the_top_column() {
        let (m, _) = select_top_k(&RANKING, &matrix(), 1).unwrap();
        assert_eq!(m.column(0), vec![3.0, 6.0]);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            select_top_k(&RANKING, &matrix(), 4),
            Err(MlError::TooManyFeatures { .. })
        ));
        assert!(matches!(
            select_top_k(&RANKING[..2], &matrix(), 1),
            Err(MlError::BadRanking(1))
        ));
        assert!(matches!(
            select_top_k(&[(0, 1.0), (0, 1.0), (1, 0.0)], &matrix(), 1),
            Err(MlError::BadRanking(0))
        ));
        let (_, sel) = select_top_k(&RANKING, &matrix(), 2).unwrap();
        let narrow = FeatureMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(matches!(sel.project(&narrow), Err(MlError::FeatureCount { .. })));
    }

    #[test]
    fn ranking_csv_round_trip() {
        let ranking = vec![(7, 12.5), (3, 0.1 + 0.2), (0, 0.0)];
        let mut buf = Vec::new();
        write_ranking_csv(&ranking, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("rank,feature,gain\n1,7,12.5\n"));
        assert_eq!(read_ranking_csv(buf.as_slice()).unwrap(), ranking);
    }
}
