//! Tridiagonal matrices, Thomas solves and M-matrix checks.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TridiagError {
    #[error("dimension mismatch: matrix has {expected} rows, vector has {found}")]
    Dimension { expected: usize, found: usize },
    #[error("zero pivot at row {row}")]
    ZeroPivot { row: usize },
    #[error("not an M-matrix at row {row}: {reason}")]
    NotMMatrix { row: usize, reason: &'static str },
}

/// Square tridiagonal matrix. `lower[0]` and `upper[n-1]` are unused and kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        let n = self.len();
        let mut s = self.diag[i];
        if i > 0 {
            s += self.lower[i];
        }
        if i + 1 < n {
            s += self.upper[i];
        }
        s
    }

    /// `I - dt * self`.
    pub fn implicit_matrix(&self, dt: f64) -> Tridiagonal {
        Tridiagonal {
            lower: self.lower.iter().map(|a| -dt * a).collect(),
            diag: self.diag.iter().map(|a| 1.0 - dt * a).collect(),
            upper: self.upper.iter().map(|a| -dt * a).collect(),
        }
    }

    /// Subtracts `d` from the diagonal.
    pub fn minus_diag(&self, d: &[f64]) -> Tridiagonal {
        assert_eq!(d.len(), self.len());
        let mut out = self.clone();
        for (a, b) in out.diag.iter_mut().zip(d) {
            *a -= b;
        }
        out
    }

    /// Positive diagonal, nonpositive off-diagonals, weak row diagonal dominance.
    pub fn check_m_matrix(&self) -> Result<(), TridiagError> {
        let n = self.len();
        for i in 0..n {
            let lo = if i > 0 { self.lower[i] } else { 0.0 };
            let up = if i + 1 < n { self.upper[i] } else { 0.0 };
            if self.diag[i] <= 0.0 || !self.diag[i].is_finite() {
                return Err(TridiagError::NotMMatrix { row: i, reason: "nonpositive diagonal" });
            }
            if lo > 0.0 || up > 0.0 {
                return Err(TridiagError::NotMMatrix { row: i, reason: "positive off-diagonal" });
            }
            if self.diag[i] + lo + up < -1e-12 * self.diag[i] {
                return Err(TridiagError::NotMMatrix { row: i, reason: "not diagonally dominant" });
            }
        }
        Ok(())
    }

    /// Nonnegative off-diagonals and nonpositive row sums.
    pub fn is_sub_markov_generator(&self, tol: f64) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let lo_ok = i == 0 || self.lower[i] >= 0.0;
            let up_ok = i + 1 == n || self.upper[i] >= 0.0;
            let scale = self.diag[i].abs().max(1.0);
            lo_ok && up_ok && self.row_sum(i) <= tol * scale
        })
    }

    pub fn factor(&self) -> Result<Factored, TridiagError> {
        let n = self.len();
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let mut denom = self.diag.first().copied().unwrap_or(1.0);
        for i in 0..n {
            if i > 0 {
                denom = self.diag[i] - self.lower[i] * cp[i - 1];
            }
            if denom == 0.0 || !denom.is_finite() {
                return Err(TridiagError::ZeroPivot { row: i });
            }
            inv[i] = 1.0 / denom;
            if i + 1 < n {
                cp[i] = self.upper[i] * inv[i];
            }
        }
        Ok(Factored {
            lower: self.lower.clone(),
            cp,
            inv,
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>, TridiagError> {
        if rhs.len() != self.len() {
            return Err(TridiagError::Dimension { expected: self.len(), found: rhs.len() });
        }
        let f = self.factor()?;
        let mut x = rhs.to_vec();
        f.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Thomas elimination factors, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct Factored {
    lower: Vec<f64>,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

impl Factored {
    pub fn len(&self) -> usize {
        self.inv.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inv.is_empty()
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.len();
        assert_eq!(x.len(), n);
        if n == 0 {
            return;
        }
        x[0] *= self.inv[0];
        for i in 1..n {
            x[i] = (x[i] - self.lower[i] * x[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.cp[i] * x[i + 1];
        }
    }
}
