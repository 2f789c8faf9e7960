//! Cubic flux `h`, its potential `H`, the capped flux `h̃`, and the
//! admissibility predicates on the far-field pair `(φ₋, φ₊)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Far-field states, wave speed and fractional order of one travelling-wave problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WaveConfig {
    pub phi_minus: f64,
    pub phi_plus: f64,
    /// Middle root `−φ₋ − φ₊`.
    pub phi_c: f64,
    /// Rankine–Hugoniot speed.
    pub c: f64,
    pub alpha: f64,
    /// Linear coefficient of `H`: `c φ₋ − φ₋³`.
    pub a_lin: f64,
}

/// Rankine–Hugoniot speed `φ₊² + φ₋² + φ₋φ₊`.
pub fn wave_speed(phi_minus: f64, phi_plus: f64) -> Result<f64> {
    if phi_minus == phi_plus {
        return Err(Error::DegenerateStates(phi_minus));
    }
    Ok(phi_plus * phi_plus + phi_minus * phi_minus + phi_minus * phi_plus)
}

impl WaveConfig {
    pub fn new(phi_minus: f64, phi_plus: f64, alpha: f64) -> Result<Self> {
        if !(phi_minus.is_finite() && phi_plus.is_finite()) {
            return Err(Error::InvalidParameter("far-field states must be finite".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} is not in (0, 1)")));
        }
        let c = wave_speed(phi_minus, phi_plus)?;
        Ok(Self {
            phi_minus,
            phi_plus,
            phi_c: -(phi_minus + phi_plus),
            c,
            alpha,
            a_lin: c * phi_minus - phi_minus.powi(3),
        })
    }

    /// `φ₊ < φ_c < φ₋`.
    pub fn is_ordered(&self) -> bool {
        self.phi_plus < self.phi_c && self.phi_c < self.phi_minus
    }

    /// `h(φ) = −c(φ − φ₋) + φ³ − φ₋³`.
    #[inline]
    pub fn h(&self, phi: f64) -> f64 {
        -self.c * (phi - self.phi_minus) + phi * phi * phi - self.phi_minus.powi(3)
    }

    #[inline]
    pub fn h_prime(&self, phi: f64) -> f64 {
        -self.c + 3.0 * phi * phi
    }

    /// `H(φ) = ∫₀^φ h = −cφ²/2 + φ⁴/4 + Aφ`.
    #[inline]
    pub fn potential(&self, phi: f64) -> f64 {
        -self.c * phi * phi / 2.0 + phi.powi(4) / 4.0 + self.a_lin * phi
    }

    /// Local maximum of `h`, where the quartic cap is attached.
    pub fn junction(&self) -> f64 {
        -(self.c / 3.0).sqrt()
    }
}

pub fn h_eval(phi: f64, cfg: &WaveConfig) -> f64 {
    cfg.h(phi)
}

pub fn potential_h(phi: f64, cfg: &WaveConfig) -> f64 {
    cfg.potential(phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AdmissibilityReport {
    /// `φ₊ < φ_c < φ₋`
    pub ordering_ok: bool,
    /// `c < 3 min(φ₋², φ₊²)`: the Lax condition fails.
    pub lax_violated: bool,
    /// `φ₋ + φ₊ > 0`
    pub sum_positive: bool,
    /// `c < φ₋²`, equivalently `H(φ₊) > H(φ₋)` under the ordering.
    pub h_plus_minus_positive: bool,
}

impl AdmissibilityReport {
    pub fn all(&self) -> bool {
        self.ordering_ok && self.lax_violated && self.sum_positive && self.h_plus_minus_positive
    }
}

pub fn admissibility_report(phi_minus: f64, phi_plus: f64) -> AdmissibilityReport {
    let c = phi_plus * phi_plus + phi_minus * phi_minus + phi_minus * phi_plus;
    let phi_c = -(phi_minus + phi_plus);
    AdmissibilityReport {
        ordering_ok: phi_plus < phi_c && phi_c < phi_minus,
        lax_violated: c < 3.0 * (phi_minus * phi_minus).min(phi_plus * phi_plus),
        sum_positive: phi_minus + phi_plus > 0.0,
        h_plus_minus_positive: c < phi_minus * phi_minus,
    }
}

/// Constants of the cubic bounds `2φ³ ≤ h(φ) ≤ C_h φ³`, `H(φ) − H(φ₋) < C_H φ⁴`
/// valid for `φ ≤ −φ₋`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorBounds {
    pub c_h: f64,
    pub c_cap_h: f64,
}

pub fn taylor_bound_constants(cfg: &WaveConfig) -> TaylorBounds {
    let (pm, pp) = (cfg.phi_minus, cfg.phi_plus);
    TaylorBounds {
        c_h: -2.0 * (pm + pp) * pp / (pm * pm),
        c_cap_h: 2.0,
    }
}

/// User-facing parameters of the quartic cap `P_c = Aφ⁴ + Bφ³ + Cφ² + Dφ + E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CapParams {
    pub a: f64,
    pub b: f64,
}

impl Default for CapParams {
    fn default() -> Self {
        Self { a: 1.0, b: -10.0 }
    }
}

/// `h̃`: equal to `h` above the junction `−√(c/3)`, a positive quartic below it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModifiedFlux {
    pub base: WaveConfig,
    pub junction: f64,
    /// `[A, B, C, D, E]` of the cap actually used.
    pub quartic_coeffs: [f64; 5],
    /// Cap parameters as requested.
    pub requested: CapParams,
    /// Zero of `H̃(φ) − H̃(φ₋)` below `φ_c`.
    pub phi_bar: f64,
}

const MAX_LEADING_DOUBLINGS: i32 = 60;

fn quartic(coeffs: &[f64; 5], phi: f64) -> f64 {
    let [a, b, c, d, e] = *coeffs;
    (((a * phi + b) * phi + c) * phi + d) * phi + e
}

fn quartic_antiderivative(coeffs: &[f64; 5], phi: f64) -> f64 {
    let [a, b, c, d, e] = *coeffs;
    ((((a / 5.0 * phi + b / 4.0) * phi + c / 3.0) * phi + d / 2.0) * phi + e) * phi
}

/// Matches value, slope and curvature of `h` at `j` for the given `A, B`.
fn matched_coeffs(cfg: &WaveConfig, j: f64, a: f64, b: f64) -> [f64; 5] {
    let c = 3.0 * j - 6.0 * a * j * j - 3.0 * b * j;
    let d = -(4.0 * a * j.powi(3) + 3.0 * b * j * j + 2.0 * c * j);
    let e = cfg.h(j) - (a * j.powi(4) + b * j.powi(3) + c * j * j + d * j);
    [a, b, c, d, e]
}

/// Minimum of the cap on `φ ≤ j`. In `t = φ − j` the cap reads
/// `h(j) + 3j t² + B' t³ + A t⁴`, whose only critical point with `t < 0`
/// is a local minimum.
fn cap_minimum(cfg: &WaveConfig, j: f64, a: f64, b: f64) -> f64 {
    let b_local = b + 4.0 * a * j;
    let disc = 9.0 * b_local * b_local - 96.0 * a * j;
    let t_min = (-3.0 * b_local - disc.sqrt()) / (8.0 * a);
    let p = |t: f64| cfg.h(j) + 3.0 * j * t * t + b_local * t.powi(3) + a * t.powi(4);
    p(t_min).min(cfg.h(j))
}

pub fn build_modified_flux(cfg: &WaveConfig, cap: CapParams) -> Result<ModifiedFlux> {
    if cfg.c <= 0.0 {
        return Err(Error::InvalidParameter(format!("wave speed c = {} must be positive", cfg.c)));
    }
    if !(cap.a > 0.0 && cap.a.is_finite() && cap.b.is_finite()) {
        return Err(Error::CapNotPositive { a: cap.a, b: cap.b });
    }
    let j = cfg.junction();
    let mut a = cap.a;
    let mut found = None;
    for _ in 0..=MAX_LEADING_DOUBLINGS {
        if cap_minimum(cfg, j, a, cap.b) > 0.0 {
            found = Some(a);
            break;
        }
        a *= 2.0;
    }
    let a = found.ok_or(Error::CapNotPositive { a: cap.a, b: cap.b })?;
    let mut flux = ModifiedFlux {
        base: *cfg,
        junction: j,
        quartic_coeffs: matched_coeffs(cfg, j, a, cap.b),
        requested: cap,
        phi_bar: f64::NAN,
    };
    flux.phi_bar = flux.locate_phi_bar();
    Ok(flux)
}

impl ModifiedFlux {
    #[inline]
    pub fn h(&self, phi: f64) -> f64 {
        if phi >= self.junction {
            self.base.h(phi)
        } else {
            quartic(&self.quartic_coeffs, phi)
        }
    }

    pub fn h_prime(&self, phi: f64) -> f64 {
        if phi >= self.junction {
            self.base.h_prime(phi)
        } else {
            let [a, b, c, d, _] = self.quartic_coeffs;
            ((4.0 * a * phi + 3.0 * b) * phi + 2.0 * c) * phi + d
        }
    }

    pub fn h_second(&self, phi: f64) -> f64 {
        if phi >= self.junction {
            6.0 * phi
        } else {
            let [a, b, c, _, _] = self.quartic_coeffs;
            (12.0 * a * phi + 6.0 * b) * phi + 2.0 * c
        }
    }

    /// `H̃(φ) = ∫₀^φ h̃`.
    pub fn potential(&self, phi: f64) -> f64 {
        if phi >= self.junction {
            self.base.potential(phi)
        } else {
            self.base.potential(self.junction) + quartic_antiderivative(&self.quartic_coeffs, phi)
                - quartic_antiderivative(&self.quartic_coeffs, self.junction)
        }
    }

    fn locate_phi_bar(&self) -> f64 {
        let target = self.potential(self.base.phi_minus);
        let g = |phi: f64| self.potential(phi) - target;
        let mut hi = self.base.phi_c;
        let mut lo = -10.0 * self.base.phi_minus.abs();
        while g(lo) > 0.0 {
            lo *= 2.0;
            if !lo.is_finite() {
                return f64::NAN;
            }
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Flux used by the integrator.
#[derive(Debug, Clone, PartialEq)]
pub enum Flux {
    Original(WaveConfig),
    Modified(ModifiedFlux),
}

impl Flux {
    pub fn config(&self) -> &WaveConfig {
        match self {
            Flux::Original(cfg) => cfg,
            Flux::Modified(m) => &m.base,
        }
    }

    #[inline]
    pub fn h(&self, phi: f64) -> f64 {
        match self {
            Flux::Original(cfg) => cfg.h(phi),
            Flux::Modified(m) => m.h(phi),
        }
    }

    #[inline]
    pub fn potential(&self, phi: f64) -> f64 {
        match self {
            Flux::Original(cfg) => cfg.potential(phi),
            Flux::Modified(m) => m.potential(phi),
        }
    }

    pub fn cap(&self) -> Option<&ModifiedFlux> {
        match self {
            Flux::Original(_) => None,
            Flux::Modified(m) => Some(m),
        }
    }
}
