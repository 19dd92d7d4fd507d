//! Gauss-Legendre quadrature, plus the `rho = R sin(theta)` substitution
//! used for radial integrals whose integrand blows up like
//! `(R^2 - rho^2)^beta`, `beta in (-1, 0)`, at the outer radius.

use std::f64::consts::PI;
use std::sync::OnceLock;

#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
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

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn integrate_panels<F: Fn(f64) -> f64>(&self, a: f64, b: f64, panels: usize, f: F) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + h * k as f64;
                let hi = if k + 1 == panels { b } else { lo + h };
                self.integrate(lo, hi, &f)
            })
            .sum()
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
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

const PANEL_NODES: usize = 64;
const PANELS: usize = 4;

fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(PANEL_NODES))
}

/// Integrates `f(rho, outer^2 - rho^2)` over `[a, b]`, `0 <= a <= b <= outer`,
/// after the substitution `rho = outer * sin(theta)`. The Jacobian
/// `outer * cos(theta)` cancels a `(outer^2 - rho^2)^(-1/2)` singularity at
/// `rho = outer`, and the gap is passed as `(outer * cos(theta))^2` so it keeps
/// full relative precision near the edge. 4 panels of 64 nodes.
pub fn sin_substituted<F: Fn(f64, f64) -> f64>(outer: f64, a: f64, b: f64, f: F) -> f64 {
    debug_assert!(outer > 0.0 && a >= 0.0 && a <= b && b <= outer * (1.0 + 1e-15));
    let ta = (a / outer).clamp(0.0, 1.0).asin();
    let tb = (b / outer).clamp(0.0, 1.0).asin();
    if tb <= ta {
        return 0.0;
    }
    panel_rule().integrate_panels(ta, tb, PANELS, |theta| {
        let (s, c) = theta.sin_cos();
        let oc = outer * c;
        f(outer * s, oc * oc) * oc
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_symmetric() {
        for n in [1, 2, 5, 64, 200] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} sum={s}");
            for i in 0..n {
                assert!((rule.nodes[i] + rule.nodes[n - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        let rule = GaussLegendre::new(5);
        // x^9 odd, x^8 integrates to 2/9 on [-1,1]
        assert!(rule.integrate(-1.0, 1.0, |x| x.powi(9)).abs() < 1e-15);
        assert!((rule.integrate(-1.0, 1.0, |x| x.powi(8)) - 2.0 / 9.0).abs() < 1e-14);
        assert!((rule.integrate(0.0, 2.0, |x| x * x * x) - 4.0).abs() < 1e-13);
    }

    #[test]
    fn sin_substitution_handles_inverse_sqrt_edge() {
        // integral_0^1 rho / sqrt(1 - rho^2) = 1
        let v = sin_substituted(1.0, 0.0, 1.0, |r, gap| r / gap.sqrt());
        assert!((v - 1.0).abs() < 1e-12, "{v}");
        // integral_0^1 1/sqrt(1-rho^2) = pi/2
        let v = sin_substituted(1.0, 0.0, 1.0, |_, gap| 1.0 / gap.sqrt());
        assert!((v - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn smooth_exponential() {
        let v = panel_rule().integrate_panels(0.0, 3.0, 4, f64::exp);
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-12);
    }
}
