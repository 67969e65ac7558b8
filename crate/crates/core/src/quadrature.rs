//! Gauss–Legendre rules and composite panel integration.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over [a, b].
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

static RULES: [OnceLock<GaussRule>; 4] = [
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
    OnceLock::new(),
];

/// Cached rule for n in {8, 16, 32, 64}. Panics for other sizes.
pub fn rule(n: usize) -> &'static GaussRule {
    let slot = match n {
        8 => 0,
        16 => 1,
        32 => 2,
        64 => 3,
        _ => panic!("no cached Gauss rule with {n} nodes"),
    };
    RULES[slot].get_or_init(|| GaussRule::new(n))
}

/// Sum of n-point Gauss–Legendre integrals over consecutive breakpoint panels.
pub fn composite<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], n: usize) -> f64 {
    let g = rule(n);
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| g.integrate(&mut f, w[0], w[1]))
        .sum()
}

/// Breakpoints from `a` to `b` with panel widths shrinking geometrically toward `b`.
///
/// Widths halve until the last panel is below `tiny * (b - a)`.
pub fn graded_toward_end(a: f64, b: f64, tiny: f64) -> Vec<f64> {
    let len = b - a;
    let mut out = vec![a];
    let mut w = 0.5 * len;
    let mut x = a;
    while w > tiny * len {
        x = b - w;
        out.push(x);
        w *= 0.5;
    }
    if x < b {
        out.push(b);
    }
    out
}

/// Breakpoints from `a` to `b` with panel widths shrinking geometrically toward `a`.
pub fn graded_toward_start(a: f64, b: f64, tiny: f64) -> Vec<f64> {
    let mut v: Vec<f64> = graded_toward_end(-b, -a, tiny).into_iter().map(|x| -x).collect();
    v.reverse();
    v
}

/// `n + 1` logarithmically spaced points from `a` to `b` (both positive).
pub fn geomspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..=n)
        .map(|k| {
            if k == 0 {
                a
            } else if k == n {
                b
            } else {
                (la + (lb - la) * k as f64 / n as f64).exp()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 8, 16, 32, 64] {
            let g = GaussRule::new(n);
            let s: f64 = g.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        let g = rule(16);
        let v = g.integrate(|x| x.powi(30) + 3.0 * x.powi(7), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-14);
        let v = g.integrate(|x| x * x, 0.0, 3.0);
        assert!((v - 9.0).abs() < 1e-12);
    }

    #[test]
    fn graded_breaks_resolve_endpoint_singularity() {
        let b = graded_toward_end(0.0, 1.0, 1e-14);
        let v = composite(|x| (1.0 - x).ln(), &b, 16);
        assert!((v + 1.0).abs() < 1e-10, "{v}");
        let b = graded_toward_start(0.0, 1.0, 1e-14);
        let v = composite(|x| x.powf(-0.5), &b, 16);
        assert!((v - 2.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn geomspace_endpoints() {
        let g = geomspace(1e-2, 1e3, 10);
        assert_eq!(g.len(), 11);
        assert_eq!(g[10], 1e3);
        assert!((g[0] - 1e-2).abs() < 1e-18);
        assert!((g[2] / g[1] - g[1] / g[0]).abs() < 1e-12);
    }
}
