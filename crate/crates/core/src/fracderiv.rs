//! Quadrature of `D^α[φ](ξ) = d_α ∫_{−∞}^ξ φ′(y)(ξ−y)^{−α} dy` on a sampled
//! history.
//!
//! The history is split at `ξ₀ = xi_start`. Left of `ξ₀` the profile is the
//! exponential tail `φ₋ + b e^{λξ}`, whose contribution `W(ξ)` is an
//! incomplete gamma function. Right of `ξ₀` one integration by parts gives
//!
//! ```text
//! d_α/(1−α) · [ ψ(ξ₀)(ξ−ξ₀)^{1−α} + ∫_{ξ₀}^ξ ψ′(y)(ξ−y)^{1−α} dy ]
//! ```
//!
//! with a bounded integrand. The remaining integral is evaluated with
//! product-trapezoid weights: `ψ′` is interpolated linearly between nodes and
//! each piece is integrated exactly against `(ξ−y)^{1−α}`, which is second
//! order in `dx` for every `α`.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::special::{gamma, upper_gamma_scaled};

/// Switch from direct differences to series expansions of the weights.
const SERIES_FROM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    pub alpha: f64,
    /// `1/Γ(1−α)`
    pub d_alpha: f64,
}

impl FracParams {
    pub fn new(alpha: f64) -> Self {
        Self { alpha, d_alpha: 1.0 / gamma(1.0 - alpha) }
    }

    /// `C_α = d_α · 2(2α)^{−α} / (1−α)`.
    pub fn interpolation_constant(&self) -> f64 {
        let a = self.alpha;
        self.d_alpha * 2.0 * (2.0 * a).powf(-a) / (1.0 - a)
    }
}

/// `φ = φ₋ + b e^{λξ}` for `ξ ≤ xi_start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tail {
    pub b: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryGrid {
    pub xi_start: f64,
    pub dx: f64,
    pub phi_minus: f64,
    pub psi_samples: Vec<f64>,
    pub psi_prime_samples: Vec<f64>,
    pub tail: Tail,
}

impl HistoryGrid {
    pub fn new(xi_start: f64, dx: f64, phi_minus: f64, tail: Tail) -> Self {
        Self { xi_start, dx, phi_minus, psi_samples: Vec::new(), psi_prime_samples: Vec::new(), tail }
    }

    pub fn len(&self) -> usize {
        self.psi_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi_samples.is_empty()
    }

    pub fn xi(&self, k: usize) -> f64 {
        self.xi_start + k as f64 * self.dx
    }

    pub fn push(&mut self, psi: f64, psi_prime: f64) {
        self.psi_samples.push(psi);
        self.psi_prime_samples.push(psi_prime);
    }

    /// `φ − φ₋` at every node: tail value at `ξ₀` plus the trapezoid sum of `ψ`.
    pub fn fluctuation(&self) -> Vec<f64> {
        let mut g = Vec::with_capacity(self.len());
        let mut acc = self.tail.b * (self.tail.lambda * self.xi_start).exp();
        for (k, &psi) in self.psi_samples.iter().enumerate() {
            if k > 0 {
                acc += 0.5 * self.dx * (self.psi_samples[k - 1] + psi);
            }
            g.push(acc);
        }
        g
    }
}

/// Product-trapezoid weights for `∫₀^{kh} ψ′(y)(kh−y)^β dy`, `β = 1 − α`,
/// in units of `h^{β+1}`, all divided by `(β+1)(β+2)`.
#[derive(Debug, Clone)]
pub struct MemoryWeights {
    pub alpha: f64,
    pub dx: f64,
    beta: f64,
    /// `d_α h^{2−α} / (1−α)`
    pub scale: f64,
    /// `d_α / (1−α)`, multiplier of the boundary term.
    pub boundary: f64,
    /// Weight of the newest node.
    pub newest: f64,
    /// `interior[m]`: weight of a node at distance `m ≥ 1` that is not node 0.
    interior: Vec<f64>,
    /// `start[k]`: weight of node 0 when evaluating at node `k ≥ 1`.
    start: Vec<f64>,
}

fn binomial_coeffs(gamma: f64, count: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(count);
    let mut v = 1.0;
    for j in 0..count {
        c.push(v);
        v *= (gamma - j as f64) / (j as f64 + 1.0);
    }
    c
}

impl MemoryWeights {
    pub fn new(fp: &FracParams, dx: f64) -> Self {
        let beta = 1.0 - fp.alpha;
        Self {
            alpha: fp.alpha,
            dx,
            beta,
            scale: fp.d_alpha * dx.powf(2.0 - fp.alpha) / (1.0 - fp.alpha),
            boundary: fp.d_alpha / (1.0 - fp.alpha),
            newest: 1.0 / ((beta + 1.0) * (beta + 2.0)),
            interior: vec![f64::NAN],
            start: vec![f64::NAN],
        }
    }

    /// Extends the tables so that evaluation at node `k` is possible.
    pub fn ensure(&mut self, k: usize) {
        if self.interior.len() > k {
            return;
        }
        let beta = self.beta;
        let g = beta + 2.0;
        let norm = 1.0 / ((beta + 1.0) * (beta + 2.0));
        let binom = binomial_coeffs(g, 24);
        for m in self.interior.len()..=k {
            let mf = m as f64;
            let c = if m < SERIES_FROM {
                (mf + 1.0).powf(g) - 2.0 * mf.powf(g) + (mf - 1.0).powf(g)
            } else {
                // m^g [(1+1/m)^g − 2 + (1−1/m)^g] = 2 m^g Σ_{j≥1} C(g,2j) m^{−2j}
                let x2 = 1.0 / (mf * mf);
                let mut sum = 0.0;
                let mut p = x2;
                for j in 1..12 {
                    sum += binom[2 * j] * p;
                    p *= x2;
                }
                2.0 * mf.powf(g) * sum
            };
            let e = if m < SERIES_FROM {
                (mf - 1.0).powf(g) - (mf - g) * mf.powf(beta + 1.0)
            } else {
                // k^g [(1−x)^g − 1 + g x] = k^g Σ_{j≥2} C(g,j)(−x)^j
                let x = -1.0 / mf;
                let mut sum = 0.0;
                let mut p = x * x;
                for coeff in binom.iter().skip(2) {
                    sum += coeff * p;
                    p *= x;
                }
                mf.powf(g) * sum
            };
            self.interior.push(c * norm);
            self.start.push(e * norm);
        }
    }

    pub fn interior(&self, m: usize) -> f64 {
        self.interior[m]
    }

    pub fn start(&self, k: usize) -> f64 {
        self.start[k]
    }

    /// Grid part at node `k` without the contribution of node `k` itself:
    /// boundary term plus all weights on `ψ′₀ … ψ′_{k−1}`.
    /// `psi_prime` must hold at least `k` entries.
    pub fn history_part(&self, psi0: f64, psi_prime: &[f64], k: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        debug_assert!(self.interior.len() > k);
        let boundary = self.boundary * psi0 * (k as f64 * self.dx).powf(self.beta);
        let mut lanes = [0.0f64; 8];
        let pp = &psi_prime[1..k];
        let w = &self.interior[1..k];
        // ψ′_j pairs with interior[k − j]
        let chunks = pp.len() / 8;
        for c in 0..chunks {
            for l in 0..8 {
                let j = c * 8 + l;
                lanes[l] += pp[j] * w[k - 2 - j];
            }
        }
        let mut sum: f64 = lanes.iter().sum();
        for j in chunks * 8..pp.len() {
            sum += pp[j] * w[k - 2 - j];
        }
        sum += self.start[k] * psi_prime[0];
        boundary + self.scale * sum
    }

    /// Coefficient of `ψ′_k` in the grid part at node `k`.
    pub fn newest_coefficient(&self) -> f64 {
        self.scale * self.newest
    }
}

/// Grid part of `D^α` at node `k` of `hist`.
pub fn caputo_grid_eval(hist: &HistoryGrid, k: usize, fp: &FracParams) -> f64 {
    assert!(k < hist.len(), "node {k} outside a history of {} nodes", hist.len());
    let mut w = MemoryWeights::new(fp, hist.dx);
    w.ensure(k);
    w.history_part(hist.psi_samples[0], &hist.psi_prime_samples, k)
        + w.newest_coefficient() * if k > 0 { hist.psi_prime_samples[k] } else { 0.0 }
}

/// `W(ξ) = b λ^α e^{λξ} Q(1−α, λ(ξ−ξ₀))`, the exact contribution of the
/// exponential tail on `(−∞, ξ₀]`.
pub fn tail_contribution(tail: Tail, xi_start: f64, xi: f64, fp: &FracParams) -> f64 {
    if tail.b == 0.0 {
        return 0.0;
    }
    let s = 1.0 - fp.alpha;
    let x = tail.lambda * (xi - xi_start);
    // e^{λξ} e^{−x} = e^{λξ₀}
    tail.b * tail.lambda.powf(fp.alpha) * (tail.lambda * xi_start).exp() * upper_gamma_scaled(s, x)
        * fp.d_alpha
}

/// Full operator at node `k`: tail plus grid part.
pub fn dalpha_at(hist: &HistoryGrid, k: usize, fp: &FracParams) -> f64 {
    tail_contribution(hist.tail, hist.xi_start, hist.xi(k), fp) + caputo_grid_eval(hist, k, fp)
}

/// Interpolation bound `C_α ‖g‖^{1−α} ‖g′‖^α` for given suprema.
pub fn interpolation_bound(sup_g: f64, sup_dg: f64, fp: &FracParams) -> f64 {
    fp.interpolation_constant() * sup_g.powf(1.0 - fp.alpha) * sup_dg.powf(fp.alpha)
}

/// Whether `value` respects the interpolation bound with suprema over the
/// fluctuation `φ − φ₋` and `ψ` on the whole history, tail included.
pub fn bound_check(hist: &HistoryGrid, value: f64, fp: &FracParams) -> bool {
    let tail_g = (hist.tail.b * (hist.tail.lambda * hist.xi_start).exp()).abs();
    let sup_g = hist.fluctuation().iter().fold(tail_g, |m, g| m.max(g.abs()));
    let sup_psi = hist.psi_samples.iter().fold(tail_g * hist.tail.lambda, |m, p| m.max(p.abs()));
    value.abs() <= interpolation_bound(sup_g, sup_psi, fp)
}

/// Fourier symbol `(cos(απ/2) + i sin(απ/2) sgn k)|k|^α`.
pub fn symbol_eval(k: f64, fp: &FracParams) -> Complex64 {
    let half = fp.alpha * PI / 2.0;
    Complex64::new(half.cos(), half.sin() * k.signum()) * k.abs().powf(fp.alpha)
        * if k == 0.0 { 0.0 } else { 1.0 }
}
