//! Logistic and softmax losses with their first and (diagonal) second
//! derivatives with respect to the raw scores.

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable `ln(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Binary cross-entropy of a raw score against `y ∈ {0, 1}`.
pub fn logistic_loss(score: f64, y: f64) -> f64 {
    // -y ln σ(s) - (1-y) ln(1-σ(s)) = softplus(s) - y s
    softplus(score) - y * score
}

/// `(gradient, hessian)` of [`logistic_loss`] in the score.
pub fn logistic_grad_hess(score: f64, y: f64) -> (f64, f64) {
    let p = sigmoid(score);
    (p - y, p * (1.0 - p))
}

/// Softmax probabilities, shifted by the maximum score for stability.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Multiclass cross-entropy of raw scores against class `y`.
pub fn softmax_loss(scores: &[f64], y: usize) -> f64 {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scores.iter().map(|&s| (s - max).exp()).sum::<f64>().ln();
    lse - scores[y]
}

/// Per-class `(gradient, diagonal hessian)` of [`softmax_loss`].
pub fn softmax_grad_hess(scores: &[f64], y: usize) -> Vec<(f64, f64)> {
    softmax(scores)
        .into_iter()
        .enumerate()
        .map(|(k, p)| (p - if k == y { 1.0 } else { 0.0 }, p * (1.0 - p)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_symmetric_and_finite() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
    }

    #[test]
    fn losses_at_known_points() {
        assert!((logistic_loss(0.0, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((softmax_loss(&[0.0; 5], 3) - 5f64.ln()).abs() < 1e-15);
        assert!(logistic_loss(800.0, 0.0).is_finite());
        let p = softmax(&[1.0, 2.0, 3.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
