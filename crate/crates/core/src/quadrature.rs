//! Gauss–Legendre quadrature on compact intervals.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Node count used for second-order expectations.
pub const DEFAULT_NODES: usize = 64;

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the `n`-point rule by Newton iteration on the three-term
    /// Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Tricomi's initial guess for the i-th largest root.
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
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

    /// The cached 64-node rule.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(DEFAULT_NODES))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, f: F) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(mid + half * t)).sum::<f64>() * half
    }

    /// Composite rule: splits `[lo, hi]` into `panels` equal pieces and
    /// returns every `(point, weight)` pair, with weights summing to `hi - lo`.
    pub fn composite(&self, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
        let panels = panels.max(1);
        let width = (hi - lo) / panels as f64;
        let mut out = Vec::with_capacity(panels * self.len());
        for k in 0..panels {
            let a = lo + width * k as f64;
            let half = 0.5 * width;
            let mid = a + half;
            for (&t, &w) in self.nodes.iter().zip(&self.weights) {
                out.push((mid + half * t, w * half));
            }
        }
        out
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 16, 64] {
            let rule = GaussLegendre::new(n);
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "n = {n}: {total}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(8);
        // integral of x^15 + 3 x^14 over [0, 1] = 1/16 + 3/15
        let v = rule.integrate(0.0, 1.0, |x| x.powi(15) + 3.0 * x.powi(14));
        assert!((v - (1.0 / 16.0 + 0.2)).abs() < 1e-14);
    }

    #[test]
    fn standard_rule_integrates_exponential() {
        let v = GaussLegendre::standard().integrate(0.1, 0.8, |x| (-3.0 * x).exp());
        let exact = ((-0.3f64).exp() - (-2.4f64).exp()) / 3.0;
        assert!((v - exact).abs() < 1e-15);
    }

    #[test]
    fn composite_handles_peaked_integrands() {
        let k = 4000.0;
        let exact = ((-k * 0.1f64).exp() - (-k * 0.8f64).exp()) / k;
        let pts = GaussLegendre::standard().composite(0.1, 0.8, 60);
        let v: f64 = pts.iter().map(|&(x, w)| w * (-k * x).exp()).sum();
        assert!(((v - exact) / exact).abs() < 1e-12);
        let wsum: f64 = pts.iter().map(|&(_, w)| w).sum();
        assert!((wsum - 0.7).abs() < 1e-14);
    }
}
