//! Rational filters from quadrature of the Cauchy integral on the circle
//! through `α` and `β`.
//!
//! With `z(θ) = c + r e^{iθ}` the spectral projector's scalar symbol is
//! `(1/2π) ∫ r e^{iθ} / (z(θ) − λ) dθ`. Discretizing and folding conjugate
//! nodes gives `ρ(λ) = 2 Re Σ ω_ℓ / (λ − ζ_ℓ)` over the upper half-plane nodes,
//! with `ω = −r e^{iθ} Δθ / 2π` for a node of angular weight `Δθ`.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadratureRule {
    Midpoint,
    GaussLegendre,
}

impl std::str::FromStr for QuadratureRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(Self::Midpoint),
            "gauss-legendre" | "gauss" => Ok(Self::GaussLegendre),
            other => Err(Error::InvalidArgument(format!(
                "unknown quadrature rule '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalFilter {
    pub alpha: f64,
    pub beta: f64,
    pub rule: QuadratureRule,
    /// Upper half-plane poles `ζ_ℓ`; conjugates are implicit.
    pub poles: Vec<Complex64>,
    pub weights: Vec<Complex64>,
}

fn check_interval(alpha: f64, beta: f64, nc: usize) -> Result<()> {
    if !(alpha < beta) || !alpha.is_finite() || !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "degenerate interval [{alpha}, {beta}]"
        )));
    }
    if nc == 0 {
        return Err(Error::InvalidArgument("N_c must be at least 1".into()));
    }
    Ok(())
}

/// Midpoint rule with `2 N_c` equispaced angles `(2k − 1)π / 2N_c`; the `N_c`
/// nodes with positive imaginary part are kept.
pub fn midpoint_filter(alpha: f64, beta: f64, nc: usize) -> Result<RationalFilter> {
    check_interval(alpha, beta, nc)?;
    let c = 0.5 * (alpha + beta);
    let r = 0.5 * (beta - alpha);
    let (poles, weights) = (1..=nc)
        .map(|k| {
            let e = Complex64::from_polar(1.0, (2 * k - 1) as f64 * PI / (2 * nc) as f64);
            (c + r * e, -r * e / (2 * nc) as f64)
        })
        .unzip();
    Ok(RationalFilter {
        alpha,
        beta,
        rule: QuadratureRule::Midpoint,
        poles,
        weights,
    })
}

/// Gauss-Legendre rule on the upper arc `θ = (π/2)(1 − t)`, `t ∈ [−1, 1]`.
pub fn gauss_legendre_filter(alpha: f64, beta: f64, nc: usize) -> Result<RationalFilter> {
    check_interval(alpha, beta, nc)?;
    let c = 0.5 * (alpha + beta);
    let r = 0.5 * (beta - alpha);
    let (poles, weights) = legendre_nodes(nc)
        .into_iter()
        .map(|(t, w)| {
            let e = Complex64::from_polar(1.0, 0.5 * PI * (1.0 - t));
            (c + r * e, -r * w * e / 4.0)
        })
        .unzip();
    Ok(RationalFilter {
        alpha,
        beta,
        rule: QuadratureRule::GaussLegendre,
        poles,
        weights,
    })
}

/// Gauss-Legendre nodes and weights on `[−1, 1]` by Newton iteration on
/// `P_n`, ascending in the node.
pub fn legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 1..=n {
        let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_eval(n, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

impl RationalFilter {
    pub fn new(alpha: f64, beta: f64, nc: usize, rule: QuadratureRule) -> Result<Self> {
        match rule {
            QuadratureRule::Midpoint => midpoint_filter(alpha, beta, nc),
            QuadratureRule::GaussLegendre => gauss_legendre_filter(alpha, beta, nc),
        }
    }

    pub fn nc(&self) -> usize {
        self.poles.len()
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.beta - self.alpha)
    }

    /// `ρ(x) = 2 Re Σ ω_ℓ / (x − ζ_ℓ)`.
    pub fn eval(&self, x: f64) -> f64 {
        let s: Complex64 = self
            .poles
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w / (x - z))
            .sum();
        2.0 * s.re
    }

    /// The full `2 N_c`-term sum including conjugate nodes; real up to rounding.
    pub fn eval_full(&self, x: Complex64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w / (x - z) + w.conj() / (x - z.conj()))
            .sum()
    }

    /// `ρ` rescaled so that its value at the interval ends is `1/2`, for plots.
    pub fn eval_scaled(&self, x: f64) -> f64 {
        let edge = 0.5 * (self.eval(self.alpha) + self.eval(self.beta));
        0.5 * self.eval(x) / edge
    }

    /// `(x, |ρ(x)|)` at `count` equispaced points on `[lo, hi]`.
    pub fn sample(&self, lo: f64, hi: f64, count: usize, scaled: bool) -> Vec<(f64, f64)> {
        (0..count)
            .map(|k| {
                let x = if count == 1 {
                    lo
                } else {
                    lo + (hi - lo) * k as f64 / (count - 1) as f64
                };
                let v = if scaled {
                    self.eval_scaled(x)
                } else {
                    self.eval(x)
                };
                (x, v.abs())
            })
            .collect()
    }
}
