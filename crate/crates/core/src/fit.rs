//! Small least-squares fits used for exponent extraction.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("non-finite sample")]
    NonFinite,
}

/// Coefficients, standard errors and residual RMS of a least-squares fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coef: Vec<f64>,
    pub std_err: Vec<f64>,
    pub rms: f64,
}

/// Solves min |A c - y| with A given column by column (modified Gram–Schmidt QR).
pub fn least_squares(columns: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares, FitError> {
    let m = y.len();
    let n = columns.len();
    if m < n + 1 {
        return Err(FitError::TooFewSamples { needed: n + 1, got: m });
    }
    if y.iter().any(|v| !v.is_finite()) || columns.iter().flatten().any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let mut q: Vec<Vec<f64>> = columns.to_vec();
    let mut r = vec![vec![0.0; n]; n];
    for j in 0..n {
        assert_eq!(q[j].len(), m);
        let orig = norm(&columns[j]);
        for i in 0..j {
            let d = dot(&q[i], &q[j]);
            r[i][j] = d;
            let qi = q[i].clone();
            for (a, b) in q[j].iter_mut().zip(&qi) {
                *a -= d * b;
            }
        }
        let nrm = norm(&q[j]);
        if nrm <= 1e-13 * orig.max(f64::MIN_POSITIVE) {
            return Err(FitError::RankDeficient);
        }
        r[j][j] = nrm;
        for a in q[j].iter_mut() {
            *a /= nrm;
        }
    }
    // re-orthogonalize the right-hand side against the basis
    let mut res = y.to_vec();
    let mut qty = vec![0.0; n];
    for j in 0..n {
        let d = dot(&q[j], &res);
        qty[j] = d;
        for (a, b) in res.iter_mut().zip(&q[j]) {
            *a -= d * b;
        }
    }
    let mut coef = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = qty[i];
        for k in i + 1..n {
            s -= r[i][k] * coef[k];
        }
        coef[i] = s / r[i][i];
    }
    let sse: f64 = res.iter().map(|v| v * v).sum();
    let rms = (sse / m as f64).sqrt();
    let sigma2 = sse / (m - n) as f64;
    // diag of (R^T R)^{-1} = row norms of R^{-1}
    let mut rinv = vec![vec![0.0; n]; n];
    for j in 0..n {
        rinv[j][j] = 1.0 / r[j][j];
        for i in (0..j).rev() {
            let mut s = 0.0;
            for k in i + 1..=j {
                s += r[i][k] * rinv[k][j];
            }
            rinv[i][j] = -s / r[i][i];
        }
    }
    let std_err = (0..n)
        .map(|i| (sigma2 * rinv[i].iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();
    Ok(LeastSquares { coef, std_err, rms })
}

/// Straight-line fit y = slope * x + intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub rms: f64,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit, FitError> {
    let ls = least_squares(&[x.to_vec(), vec![1.0; x.len()]], y)?;
    Ok(LineFit {
        slope: ls.coef[0],
        intercept: ls.coef[1],
        slope_se: ls.std_err[0],
        rms: ls.rms,
    })
}

/// Log–log slope of positive samples.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<LineFit, FitError> {
    if x.iter().chain(y).any(|v| *v <= 0.0) {
        return Err(FitError::NonFinite);
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    line_fit(&lx, &ly)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let f = line_fit(&x, &y).unwrap();
        assert!((f.slope - 2.5).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!(f.rms < 1e-12);
    }

    #[test]
    fn quadratic_recovered() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 - v + 0.25 * v * v).collect();
        let ls = least_squares(&[vec![1.0; 20], x.clone(), x.iter().map(|v| v * v).collect()], &y)
            .unwrap();
        assert!((ls.coef[0] - 1.0).abs() < 1e-12);
        assert!((ls.coef[1] + 1.0).abs() < 1e-12);
        assert!((ls.coef[2] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn standard_error_matches_textbook_formula() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [0.1, 0.9, 2.2, 2.8, 4.1, 5.0];
        let f = line_fit(&x, &y).unwrap();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        let sse: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - f.slope * a - f.intercept).powi(2))
            .sum();
        let se = (sse / (n - 2.0) / sxx).sqrt();
        assert!((f.slope_se - se).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(matches!(line_fit(&[1.0, 2.0], &[1.0, 2.0]), Err(FitError::TooFewSamples { .. })));
        assert_eq!(line_fit(&[1.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]), Err(FitError::RankDeficient));
    }
}
