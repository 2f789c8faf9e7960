//! Fundamental solution `v(η; τ)` of `τv″ + D₀^α[v] + a v = 0`, `v(0) = 1`,
//! `v′(0) = 0`.
//!
//! Inverting `V(s) = (τs + s^{α−1}) / (τs² + s^α + a)` along the Hankel
//! contour gives a real-axis integral plus the residues at `s₁, s̄₁`:
//!
//! ```text
//! v⁽ᵏ⁾(η) = (−1)ᵏ (a sin απ / π) ∫₀^∞ e^{−ηr} r^{α−1+k} K̃(r) dr + 2 Re(s₁ᵏ e^{s₁η} R)
//! K̃(r)   = 1 / ((τr² + a)² + 2(τr² + a) r^α cos απ + r^{2α})
//! R       = a / (2a + (2−α) s₁^α)
//! ```
//!
//! `R` is the residue `(τs₁ + s₁^{α−1}) / (2τs₁ + αs₁^{α−1})` rewritten with
//! `τs₁² + s₁^α = −a`.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::charroots::{complex_pair_right, cpow};
use crate::error::{Error, Result};
use crate::quad::integrate_panels;

const REL_TOL: f64 = 1e-13;
const ABS_TOL: f64 = 1e-16;
const MAX_PANELS: usize = 4000;
const FAIL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleData {
    pub s1: Complex64,
    pub p: f64,
    pub q: f64,
    /// `Re R`
    pub c1: f64,
    /// `−Im R`, so that `Re(e^{s₁η} R) = e^{pη}(C₁ cos qη + C₂ sin qη)`.
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelEval {
    pub eta: f64,
    pub tau: f64,
    pub a: f64,
    pub v: f64,
    pub v_prime: f64,
    pub v_second: f64,
    /// Real-axis term of `v`, prefactor `a sin απ / π` included.
    pub integral_part: f64,
    /// Residue term of `v`.
    pub pole_part: f64,
    /// Sum of quadrature and truncation error estimates over the three values.
    pub quad_error_est: f64,
}

/// `v`, `v′` and `v″` for fixed `(τ, a, α)`.
#[derive(Debug, Clone, Copy)]
pub struct Kernel {
    pub tau: f64,
    pub a: f64,
    pub alpha: f64,
    pub pole: PoleData,
    residue: Complex64,
    prefactor: f64,
    cos_ap: f64,
    sin_ap: f64,
}

/// One term of the decomposition with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Part {
    pub integral: f64,
    pub pole: f64,
    pub error: f64,
}

impl Part {
    pub fn value(&self) -> f64 {
        self.integral + self.pole
    }
}

impl Kernel {
    pub fn new(tau: f64, a: f64, alpha: f64) -> Result<Self> {
        let s1 = complex_pair_right(tau, 1.0, a, alpha)?;
        let residue = a / (2.0 * a + (2.0 - alpha) * cpow(s1, alpha));
        Ok(Self {
            tau,
            a,
            alpha,
            pole: PoleData { s1, p: s1.re, q: s1.im, c1: residue.re, c2: -residue.im },
            residue,
            prefactor: a * (alpha * PI).sin() / PI,
            cos_ap: (alpha * PI).cos(),
            sin_ap: (alpha * PI).sin(),
        })
    }

    fn k_tilde(&self, r: f64) -> f64 {
        let p = self.tau * r * r + self.a;
        let ra = r.powf(self.alpha);
        1.0 / (p * p + 2.0 * p * ra * self.cos_ap + ra * ra)
    }

    /// `∫₀^∞ e^{−ηr} r^{α−1+k} K̃(r) dr` and its error estimate, `η > 0`.
    fn moment(&self, eta: f64, k: i32) -> Result<(f64, f64)> {
        let alpha = self.alpha;
        // [0, 1] in u = r^α, where r^{α−1} dr = du / α
        let inner = |u: f64| {
            let r = u.powf(1.0 / alpha);
            (-eta * r).exp() * r.powi(k) * self.k_tilde(r) / alpha
        };
        let mut breaks_u = vec![0.0];
        if eta > 1.0 {
            let mut r = 1.0 / eta;
            while r < 1.0 {
                breaks_u.push(r.powf(alpha));
                r *= 4.0;
            }
        }
        breaks_u.push(1.0);
        let low = integrate_panels(&inner, &breaks_u, ABS_TOL, REL_TOL, MAX_PANELS);

        // [1, R] on geometric panels, remainder bounded analytically
        let outer = |r: f64| (-eta * r).exp() * r.powf(alpha - 1.0 + k as f64) * self.k_tilde(r);
        let r_max = (50.0 / eta).max(50.0);
        let mut breaks_r = vec![1.0];
        while *breaks_r.last().unwrap() * 2.0 < r_max {
            breaks_r.push(breaks_r.last().unwrap() * 2.0);
        }
        breaks_r.push(r_max);
        let high = integrate_panels(&outer, &breaks_r, ABS_TOL, REL_TOL, MAX_PANELS);
        let power = alpha + k as f64 - 4.0;
        let remainder = (-eta * r_max).exp() * r_max.powf(power)
            / ((-power) * self.tau * self.tau * self.sin_ap * self.sin_ap);

        let value = low.value + high.value;
        let error = low.error + high.error + remainder;
        if error > FAIL_TOL * value.abs().max(1.0) {
            return Err(Error::QuadratureFailure { estimate: error, tolerance: FAIL_TOL * value.abs().max(1.0) });
        }
        Ok((value, error))
    }

    fn pole_term(&self, eta: f64, k: i32) -> f64 {
        let s = self.pole.s1;
        2.0 * (s.powi(k) * (s * eta).exp() * self.residue).re
    }

    /// `k`-th derivative of `v` at `η` (`k ∈ {0, 1, 2}`).
    pub fn part(&self, eta: f64, k: i32) -> Result<Part> {
        assert!((0..=2).contains(&k));
        if eta < 0.0 || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("eta = {eta} must be finite and non-negative")));
        }
        if eta == 0.0 {
            let limit = [1.0, 0.0, -self.a / self.tau][k as usize];
            return Ok(Part { integral: limit - self.pole_term(0.0, k), pole: self.pole_term(0.0, k), error: 0.0 });
        }
        let (m, err) = self.moment(eta, k)?;
        let sign = if k == 1 { -1.0 } else { 1.0 };
        Ok(Part {
            integral: sign * self.prefactor * m,
            pole: self.pole_term(eta, k),
            error: self.prefactor * err,
        })
    }

    pub fn v(&self, eta: f64) -> Result<f64> {
        Ok(self.part(eta, 0)?.value())
    }

    pub fn v_prime(&self, eta: f64) -> Result<f64> {
        Ok(self.part(eta, 1)?.value())
    }

    pub fn v_second(&self, eta: f64) -> Result<f64> {
        Ok(self.part(eta, 2)?.value())
    }

    pub fn eval(&self, eta: f64) -> Result<KernelEval> {
        let p0 = self.part(eta, 0)?;
        let p1 = self.part(eta, 1)?;
        let p2 = self.part(eta, 2)?;
        Ok(KernelEval {
            eta,
            tau: self.tau,
            a: self.a,
            v: p0.value(),
            v_prime: p1.value(),
            v_second: p2.value(),
            integral_part: p0.integral,
            pole_part: p0.pole,
            quad_error_est: p0.error + p1.error + p2.error,
        })
    }

    /// Leading large-`η` terms of `v`:
    /// `(1/a) Σ_{n≥1} (−1)^{n+1} η^{−nα} / (aⁿ⁻¹ Γ(1−nα))`, three terms.
    pub fn far_field(&self, eta: f64) -> f64 {
        let rgamma = |x: f64| {
            if x <= 0.0 && x == x.floor() {
                0.0
            } else {
                1.0 / crate::special::gamma(x)
            }
        };
        (1..=3)
            .map(|n| {
                let nf = n as f64;
                let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
                sign * eta.powf(-nf * self.alpha) * rgamma(1.0 - nf * self.alpha) / self.a.powi(n)
            })
            .sum()
    }
}

pub fn eval_v(eta: f64, tau: f64, a: f64, alpha: f64) -> Result<KernelEval> {
    Kernel::new(tau, a, alpha)?.eval(eta)
}

pub fn eval_v_derivs(eta: f64, tau: f64, a: f64, alpha: f64) -> Result<(f64, f64)> {
    let k = Kernel::new(tau, a, alpha)?;
    Ok((k.v_prime(eta)?, k.v_second(eta)?))
}

/// First zero of `v″`, bracketed by a geometric scan starting well below
/// `(2−α)^{1/(2−α)} τ^{1/(2−α)}` and refined by bisection.
pub fn inflection_locate(tau: f64, a: f64, alpha: f64) -> Result<f64> {
    let k = Kernel::new(tau, a, alpha)?;
    let seed = ((2.0 - alpha) * tau).powf(1.0 / (2.0 - alpha));
    let (scan_lo, scan_hi) = (seed * 1e-2, seed * 1e2);
    let mut lo = scan_lo;
    if k.v_second(lo)? >= 0.0 {
        return Err(Error::NoSignChange { lo: scan_lo, hi: scan_hi });
    }
    let mut hi = lo;
    loop {
        hi *= 2f64.sqrt();
        if hi > scan_hi {
            return Err(Error::NoSignChange { lo: scan_lo, hi: scan_hi });
        }
        if k.v_second(hi)? >= 0.0 {
            break;
        }
        lo = hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if k.v_second(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `ψ(η) = ψ(0)v(η) − (τ/a)ψ′(0)v′(η) − (1/a)∫₀^η v′(y)Q(η−y)dy` on the grid
/// `η_k = k·d_eta`, trapezoid rule for the convolution.
pub fn variation_of_constants(
    phi0: f64,
    dphi0: f64,
    q_samples: &[f64],
    tau: f64,
    a: f64,
    alpha: f64,
    d_eta: f64,
) -> Result<Vec<f64>> {
    let k = Kernel::new(tau, a, alpha)?;
    let n = q_samples.len();
    let mut v = Vec::with_capacity(n);
    let mut vp = Vec::with_capacity(n);
    for i in 0..n {
        let eta = i as f64 * d_eta;
        v.push(k.v(eta)?);
        vp.push(k.v_prime(eta)?);
    }
    Ok((0..n)
        .map(|i| {
            let conv = if i == 0 {
                0.0
            } else {
                let inner: f64 = (1..i).map(|j| vp[j] * q_samples[i - j]).sum();
                d_eta * (inner + 0.5 * (vp[0] * q_samples[i] + vp[i] * q_samples[0]))
            };
            phi0 * v[i] - tau / a * dphi0 * vp[i] - conv / a
        })
        .collect())
}
