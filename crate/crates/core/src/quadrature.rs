//! Gauss-Hermite quadrature nodes and weights.
//!
//! The rule integrates `∫ e^{-x²} f(x) dx` over the real line. Nodes are found
//! by Newton iteration on the orthonormal Hermite recurrence, starting from the
//! usual asymptotic guesses, and mirrored about zero.

use std::f64::consts::PI;

use crate::{Error, Result};

const MAX_NEWTON_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Builds an `n`-point rule. `n` must be between 1 and 300; beyond that the
    /// weights underflow in double precision.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || n > 300 {
            return Err(Error::Configuration(format!(
                "Gauss-Hermite order must be in 1..=300, got {n}"
            )));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let pim4 = PI.powf(-0.25);
        let half = n.div_ceil(2);
        let nf = n as f64;
        let mut z = 0.0_f64;
        for i in 0..half {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut converged = false;
            for _ in 0..MAX_NEWTON_ITERATIONS {
                let (p, pd) = orthonormal_hermite(n, z, pim4);
                let step = p / pd;
                z -= step;
                if step.abs() <= 1e-14 * z.abs().max(1.0) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::Configuration(format!(
                    "Gauss-Hermite node {i} of {n} did not converge"
                )));
            }
            let (_, pd) = orthonormal_hermite(n, z, pim4);
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            weights[i] = 2.0 / (pd * pd);
            weights[n - 1 - i] = weights[i];
        }
        nodes.reverse();
        weights.reverse();
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Nodes in increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Value and derivative of the orthonormal Hermite polynomial of degree `n` at `z`.
fn orthonormal_hermite(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
    }
    let pd = (2.0 * n as f64).sqrt() * p2;
    (p1, pd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for n in [1, 2, 5, 16, 32, 64, 128] {
            let rule = GaussHermite::new(n).unwrap();
            let total: f64 = rule.weights().iter().sum();
            assert_abs_diff_eq!(total, PI.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn two_point_rule_is_exact() {
        let rule = GaussHermite::new(2).unwrap();
        let x = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(rule.nodes()[0], -x, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.nodes()[1], x, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.weights()[0], PI.sqrt() / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn even_moments_match_closed_form() {
        // ∫ x^{2k} e^{-x²} dx = Γ(k + 1/2)
        let rule = GaussHermite::new(32).unwrap();
        let mut gamma = PI.sqrt();
        for k in 0..20 {
            let got = rule.integrate(|x| x.powi(2 * k));
            assert!(
                ((got - gamma) / gamma).abs() < 1e-10,
                "k={k}: {got} vs {gamma}"
            );
            gamma *= k as f64 + 0.5;
        }
        assert_abs_diff_eq!(rule.integrate(|x| x.powi(7)), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn cosine_integral() {
        let rule = GaussHermite::new(20).unwrap();
        let want = PI.sqrt() * (-0.25f64).exp();
        assert_abs_diff_eq!(rule.integrate(f64::cos), want, epsilon = 1e-14);
    }

    #[test]
    fn nodes_sorted_and_symmetric() {
        let rule = GaussHermite::new(33).unwrap();
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
        assert_abs_diff_eq!(rule.nodes()[16], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(rule.nodes()[0], -rule.nodes()[32], epsilon = 0.0);
    }

    #[test]
    fn rejects_bad_order() {
        assert!(GaussHermite::new(0).is_err());
        assert!(GaussHermite::new(301).is_err());
    }
}
