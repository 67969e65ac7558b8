//! Radial potential families and the exponent algebra α(ω), p*(ω), P, Q.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("discriminant (N-2)^2 + 4ω = {0} is negative")]
    NegativeDiscriminant(f64),
    #[error("dimension must be at least 3, got {0}")]
    InvalidDimension(usize),
    #[error("p must exceed 1, got {0}")]
    InvalidExponent(f64),
    #[error("invalid potential parameter: {0}")]
    InvalidParameter(String),
    #[error("radius must be nonnegative, got {0}")]
    NegativeRadius(f64),
}

/// Larger root of α(α + N − 2) = ω.
pub fn alpha_of_omega(n: usize, omega: f64) -> Result<f64, PotentialError> {
    if n < 3 {
        return Err(PotentialError::InvalidDimension(n));
    }
    let b = n as f64 - 2.0;
    let disc = b * b + 4.0 * omega;
    if disc < 0.0 || disc.is_nan() {
        return Err(PotentialError::NegativeDiscriminant(disc));
    }
    let s = disc.sqrt();
    // stable form of (-b + s)/2 when b > 0 and ω small
    Ok(if b > 0.0 && omega.abs() < 0.25 * b * b {
        2.0 * omega / (b + s)
    } else {
        0.5 * (s - b)
    })
}

/// p*(ω) = 1 + 2/(N + α(ω)).
pub fn fujita_exponent_theory(n: usize, omega: f64) -> Result<f64, PotentialError> {
    let a = alpha_of_omega(n, omega)?;
    Ok(1.0 + 2.0 / (n as f64 + a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    /// ω/(1 + r^b).
    InversePower { omega: f64, b: f64 },
    /// (ω/r²)(1 + r^{-θ}) for r ≥ 1, a C¹ cubic cap on [0, 1].
    RegularizedInverseSquare { omega: f64, theta: f64 },
    /// (α(ω)N + ωr²)/(1 + r²)².
    HardyExample { dim: usize, omega: f64 },
    /// Piecewise linear through (radius, value) pairs, constant outside.
    Tabulated { radii: Vec<f64>, values: Vec<f64> },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<(), PotentialError> {
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::InversePower { omega, b } => {
                if !(*b > 0.0) || !omega.is_finite() {
                    return Err(PotentialError::InvalidParameter(format!(
                        "inverse power needs b > 0 and finite ω, got b={b}, ω={omega}"
                    )));
                }
                Ok(())
            }
            PotentialSpec::RegularizedInverseSquare { omega, theta } => {
                if !(*omega >= 0.0) || !(*theta > 0.0) {
                    return Err(PotentialError::InvalidParameter(format!(
                        "regularized inverse square needs ω >= 0 and θ > 0, got ω={omega}, θ={theta}"
                    )));
                }
                Ok(())
            }
            PotentialSpec::HardyExample { dim, omega } => {
                let b = *dim as f64 - 2.0;
                if !(*omega >= -0.25 * b * b && *omega < 0.0) {
                    return Err(PotentialError::InvalidParameter(format!(
                        "Hardy example needs ω in [-(N-2)²/4, 0), got {omega}"
                    )));
                }
                alpha_of_omega(*dim, *omega).map(|_| ())
            }
            PotentialSpec::Tabulated { radii, values } => {
                if radii.len() != values.len() || radii.len() < 2 {
                    return Err(PotentialError::InvalidParameter(
                        "tabulated potential needs matching radii/values of length >= 2".into(),
                    ));
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 {
                    return Err(PotentialError::InvalidParameter(
                        "tabulated radii must be nonnegative and strictly increasing".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(PotentialError::InvalidParameter("non-finite tabulated value".into()));
                }
                Ok(())
            }
        }
    }

    /// V(r).
    pub fn eval(&self, r: f64) -> Result<f64, PotentialError> {
        if r < 0.0 || r.is_nan() {
            return Err(PotentialError::NegativeRadius(r));
        }
        Ok(self.value(r))
    }

    /// V(r) without the domain check; r is assumed nonnegative.
    pub fn value(&self, r: f64) -> f64 {
        match self {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::InversePower { omega, b } => omega / (1.0 + r.powf(*b)),
            PotentialSpec::RegularizedInverseSquare { omega, theta } => {
                if r >= 1.0 {
                    omega / (r * r) * (1.0 + r.powf(-theta))
                } else {
                    // Hermite cubic c2 r² + c3 r³ matching value and slope at r = 1
                    let v1 = 2.0 * omega;
                    let d1 = -omega * (4.0 + theta);
                    let c2 = 3.0 * v1 - d1;
                    let c3 = d1 - 2.0 * v1;
                    r * r * (c2 + c3 * r)
                }
            }
            PotentialSpec::HardyExample { dim, omega } => {
                let a = alpha_of_omega(*dim, *omega).unwrap_or(f64::NAN);
                let q = 1.0 + r * r;
                (a * *dim as f64 + omega * r * r) / (q * q)
            }
            PotentialSpec::Tabulated { radii, values } => {
                let n = radii.len();
                if r <= radii[0] {
                    return values[0];
                }
                if r >= radii[n - 1] {
                    return values[n - 1];
                }
                let i = radii.partition_point(|x| *x <= r);
                let (x0, x1) = (radii[i - 1], radii[i]);
                let t = (r - x0) / (x1 - x0);
                values[i - 1] * (1.0 - t) + values[i] * t
            }
        }
    }

    /// Closed-form ground state h with Δh = Vh on ℝ^N, when known.
    pub fn closed_form_h(&self) -> Option<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
        match self {
            PotentialSpec::Zero => Some(Box::new(|_| 1.0)),
            PotentialSpec::HardyExample { dim, omega } => {
                let a = alpha_of_omega(*dim, *omega).ok()?;
                Some(Box::new(move |r: f64| (1.0 + r * r).powf(0.5 * a)))
            }
            _ => None,
        }
    }

    /// Theory exponent p*(ω) attached to the family on ℝ^N, when one is known.
    pub fn theory_exponent(&self, n: usize) -> Option<f64> {
        match self {
            PotentialSpec::Zero => fujita_exponent_theory(n, 0.0).ok(),
            PotentialSpec::HardyExample { dim, omega } if *dim == n => {
                fujita_exponent_theory(n, *omega).ok()
            }
            PotentialSpec::RegularizedInverseSquare { omega, .. } => {
                fujita_exponent_theory(n, *omega).ok()
            }
            _ => None,
        }
    }

    /// Asymptotic growth exponent of the ground state h ≍ r^α, when known.
    pub fn expected_h_exponent(&self, n: usize) -> Option<f64> {
        match self {
            PotentialSpec::Zero => Some(0.0),
            PotentialSpec::HardyExample { dim, omega } => alpha_of_omega(*dim, *omega).ok(),
            PotentialSpec::RegularizedInverseSquare { omega, .. } => alpha_of_omega(n, *omega).ok(),
            PotentialSpec::InversePower { b, .. } if *b > 2.0 => Some(0.0),
            _ => None,
        }
    }
}

/// p together with P = 2/(p−1), Q = 1/(p−1) and optionally α(ω), p*(ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentBundle {
    pub p: f64,
    #[serde(rename = "P")]
    pub big_p: f64,
    #[serde(rename = "Q")]
    pub big_q: f64,
    pub alpha: Option<f64>,
    pub p_star: Option<f64>,
}

impl ExponentBundle {
    pub fn new(p: f64) -> Result<Self, PotentialError> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(PotentialError::InvalidExponent(p));
        }
        Ok(Self {
            p,
            big_p: 2.0 / (p - 1.0),
            big_q: 1.0 / (p - 1.0),
            alpha: None,
            p_star: None,
        })
    }

    pub fn with_potential(p: f64, n: usize, omega: f64) -> Result<Self, PotentialError> {
        let mut b = Self::new(p)?;
        let a = alpha_of_omega(n, omega)?;
        b.alpha = Some(a);
        b.p_star = Some(1.0 + 2.0 / (n as f64 + a));
        Ok(b)
    }
}

/// Whether the volume law `r^α ln^{α/2} r` sits under `r^P ln^Q r`, decided on exponents.
pub fn log_volume_within_sharp_law(alpha: f64, bundle: &ExponentBundle) -> bool {
    alpha < bundle.big_p || (alpha == bundle.big_p && 0.5 * alpha <= bundle.big_q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_of_omega(3, 0.0).unwrap(), 0.0);
        assert!((alpha_of_omega(4, 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((alpha_of_omega(3, -0.25).unwrap() + 0.5).abs() < 1e-15);
        assert!(matches!(alpha_of_omega(3, -0.3), Err(PotentialError::NegativeDiscriminant(_))));
        assert!(alpha_of_omega(2, 0.0).is_err());
    }

    #[test]
    fn p_star_examples() {
        assert!((fujita_exponent_theory(3, 0.0).unwrap() - 5.0 / 3.0).abs() < 1e-15);
        assert!((fujita_exponent_theory(4, 3.0).unwrap() - 1.4).abs() < 1e-15);
        assert!((fujita_exponent_theory(3, -0.25).unwrap() - 1.8).abs() < 1e-15);
    }

    #[test]
    fn eval_examples() {
        assert_eq!(PotentialSpec::Zero.eval(3.0).unwrap(), 0.0);
        let ip = PotentialSpec::InversePower { omega: 1.0, b: 3.0 };
        assert_eq!(ip.eval(0.0).unwrap(), 1.0);
        let hardy = PotentialSpec::HardyExample { dim: 3, omega: -0.25 };
        assert!((hardy.eval(1.0).unwrap() + 7.0 / 16.0).abs() < 1e-15);
        assert!(ip.eval(-1.0).is_err());
    }

    #[test]
    fn regularized_cap_is_c1_and_positive() {
        let v = PotentialSpec::RegularizedInverseSquare { omega: 1.0, theta: 1.0 };
        let f = |r: f64| v.value(r);
        assert!((f(1.0 - 1e-12) - f(1.0 + 1e-12)).abs() < 1e-9);
        let d = |r: f64| (f(r + 1e-7) - f(r - 1e-7)) / 2e-7;
        assert!((d(1.0 - 1e-5) - d(1.0 + 1e-5)).abs() < 1e-3);
        assert_eq!(f(0.0), 0.0);
        assert!(d(1e-4).abs() < 1e-2);
        for i in 1..100 {
            assert!(f(i as f64 * 0.01) > 0.0);
        }
        // ω = 1, θ = 1 gives 11 r² − 9 r³
        assert!((f(0.5) - (11.0 * 0.25 - 9.0 * 0.125)).abs() < 1e-14);
    }

    #[test]
    fn tabulated_interpolates_and_clamps() {
        let v = PotentialSpec::Tabulated { radii: vec![0.0, 1.0, 3.0], values: vec![1.0, 3.0, -1.0] };
        v.validate().unwrap();
        assert_eq!(v.value(0.5), 2.0);
        assert_eq!(v.value(2.0), 1.0);
        assert_eq!(v.value(10.0), -1.0);
        let bad = PotentialSpec::Tabulated { radii: vec![0.0, 0.0], values: vec![1.0, 1.0] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn hardy_closed_form_solves_radial_equation() {
        // h'' + (N-1)/r h' = V h checked by finite differences
        let spec = PotentialSpec::HardyExample { dim: 3, omega: -0.25 };
        let h = spec.closed_form_h().unwrap();
        for r in [0.3, 1.0, 2.5, 7.0] {
            let e = 1e-4;
            let d2 = (h(r + e) - 2.0 * h(r) + h(r - e)) / (e * e);
            let d1 = (h(r + e) - h(r - e)) / (2.0 * e);
            let lhs = d2 + 2.0 / r * d1;
            assert!((lhs - spec.value(r) * h(r)).abs() < 1e-6, "r={r}");
        }
    }

    #[test]
    fn inverse_power_positive_for_positive_omega() {
        let v = PotentialSpec::InversePower { omega: 0.7, b: 2.5 };
        for i in 0..200 {
            assert!(v.value(i as f64 * 0.5) > 0.0);
        }
    }

    #[test]
    fn exponent_bundle() {
        let b = ExponentBundle::new(2.0).unwrap();
        assert_eq!((b.big_p, b.big_q), (2.0, 1.0));
        assert!(matches!(ExponentBundle::new(1.0), Err(PotentialError::InvalidExponent(_))));
        let b = ExponentBundle::with_potential(2.0, 3, -0.25).unwrap();
        assert_eq!(b.alpha, Some(-0.5));
        assert!((b.p_star.unwrap() - 1.8).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn alpha_round_trip(n in 3usize..12, t in 0.0f64..1.0, scale in 0.0f64..50.0) {
            let b = n as f64 - 2.0;
            let omega = -0.25 * b * b * (1.0 - t) + t * scale;
            let a = alpha_of_omega(n, omega).unwrap();
            let back = a * (a + b);
            prop_assert!((back - omega).abs() <= 1e-12 * omega.abs().max(1e-300) + 1e-13 * b * b);
        }

        #[test]
        fn p_star_decreasing_in_omega(n in 3usize..9, w0 in -0.2f64..20.0, dw in 1e-3f64..5.0) {
            let lo = -0.25 * (n as f64 - 2.0).powi(2);
            let w0 = w0.max(lo);
            prop_assert!(fujita_exponent_theory(n, w0 + dw).unwrap() < fujita_exponent_theory(n, w0).unwrap());
        }

        #[test]
        fn sharp_law_equivalence(alpha in 0.1f64..8.0, p in 1.01f64..6.0) {
            let bundle = ExponentBundle::new(p).unwrap();
            let crit = 2.0 / alpha;
            prop_assume!((p - 1.0 - crit).abs() > 1e-9);
            let by_exponents = alpha <= bundle.big_p && 0.5 * alpha <= bundle.big_q;
            prop_assert_eq!(by_exponents, p - 1.0 <= crit);
            prop_assert_eq!(log_volume_within_sharp_law(alpha, &bundle), by_exponents);
        }
    }
}
