//! Roots of the characteristic functions `τz² + b z^α − a` (left far field)
//! and `τz² + b z^α + a` (right far field) on the principal branch of `z^α`.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};

const LEFT_BISECTION_TOL: f64 = 1e-8;
const MAX_NEWTON: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootKind {
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharRoots {
    pub kind: RootKind,
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub lambda: Option<f64>,
    pub s1: Option<Complex64>,
    /// `|characteristic(root)|` divided by `τ|z|² + b|z|^α + a`, the size of
    /// the terms that cancel; rounding alone puts the unscaled value near
    /// `ε·τ|z|²`, which is large when `τ` is small.
    pub residual: f64,
    /// Unscaled `|characteristic(root)|`.
    pub abs_residual: f64,
}

impl CharRoots {
    pub fn left(tau: f64, b: f64, a: f64, alpha: f64) -> Result<Self> {
        let lambda = positive_root_left(tau, b, a, alpha)?;
        Ok(Self {
            kind: RootKind::Left,
            tau,
            a,
            b,
            alpha,
            lambda: Some(lambda),
            s1: None,
            residual: (tau * lambda * lambda + b * lambda.powf(alpha) - a).abs()
                / (tau * lambda * lambda + b * lambda.powf(alpha) + a),
            abs_residual: (tau * lambda * lambda + b * lambda.powf(alpha) - a).abs(),
        })
    }

    pub fn right(tau: f64, b: f64, a: f64, alpha: f64) -> Result<Self> {
        let s1 = complex_pair_right(tau, b, a, alpha)?;
        Ok(Self {
            kind: RootKind::Right,
            tau,
            a,
            b,
            alpha,
            lambda: None,
            s1: Some(s1),
            residual: right_characteristic(s1, tau, b, a, alpha).norm() / term_scale(s1, tau, b, a, alpha),
            abs_residual: right_characteristic(s1, tau, b, a, alpha).norm(),
        })
    }

    /// The conjugate partner of `s1`.
    pub fn s2(&self) -> Option<Complex64> {
        self.s1.map(|s| s.conj())
    }
}

/// Principal-branch power `exp(α (ln|z| + i arg z))`.
pub fn cpow(z: Complex64, alpha: f64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    Complex64::from_polar(z.norm().powf(alpha), alpha * z.arg())
}

fn term_scale(z: Complex64, tau: f64, b: f64, a: f64, alpha: f64) -> f64 {
    tau * z.norm_sqr() + b * z.norm().powf(alpha) + a
}

pub fn right_characteristic(z: Complex64, tau: f64, b: f64, a: f64, alpha: f64) -> Complex64 {
    tau * z * z + b * cpow(z, alpha) + a
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {value} must be positive and finite")))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} is not in (0, 1)")))
    }
}

/// Unique `λ > 0` with `τλ² + bλ^α = a`.
pub fn positive_root_left(tau: f64, b: f64, a: f64, alpha: f64) -> Result<f64> {
    check_positive("a", a)?;
    check_positive("b", b)?;
    check_alpha(alpha)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("tau = {tau} must be non-negative")));
    }
    if tau == 0.0 {
        return Ok((a / b).powf(1.0 / alpha));
    }
    let f = |z: f64| tau * z * z + b * z.powf(alpha) - a;
    let df = |z: f64| 2.0 * tau * z + alpha * b * z.powf(alpha - 1.0);

    // f(0) = −a < 0 and f(hi) ≥ a(2^α − 1) > 0
    let mut lo = 0.0;
    let mut hi = 2.0 * (a / b).powf(1.0 / alpha);
    let mut iterations = 0;
    while hi - lo > LEFT_BISECTION_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > 400 {
            return Err(Error::NoConvergence { what: "left root bisection", iterations });
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..50 {
        let step = f(z) / df(z);
        let next = (z - step).clamp(lo, hi);
        let done = (next - z).abs() <= 1e-15 * z;
        z = next;
        if done {
            break;
        }
    }
    if f(z).abs() > 1e-12 * a.max(1.0) {
        return Err(Error::NoConvergence { what: "left root polish", iterations: 50 });
    }
    Ok(z)
}

/// Two-term small-`τ` expansion of the upper complex root of `τz² + bz^α + a`:
/// `z₀ = (b/τ)^{1/(2−α)} e^{iπ/(2−α)}`, corrected by one Newton step from `z₀`
/// on the full characteristic with `z₀` annihilating its two leading terms.
pub fn small_tau_expansion_right(tau: f64, b: f64, a: f64, alpha: f64) -> Complex64 {
    let theta = PI / (2.0 - alpha);
    let z0 = Complex64::from_polar((b / tau).powf(1.0 / (2.0 - alpha)), theta);
    let denom = 2.0 * tau * z0 + alpha * b * cpow(z0, alpha - 1.0);
    z0 - a / denom
}

fn quadratic_seed(tau: f64, b: f64, a: f64) -> Complex64 {
    let disc = 4.0 * tau * a - b * b;
    if disc > 0.0 {
        Complex64::new(-b, disc.sqrt()) / (2.0 * tau)
    } else {
        let re = -b / (2.0 * tau);
        Complex64::new(re, 0.1 * re.abs().max(1e-3))
    }
}

/// Damped Newton iteration kept strictly inside the upper half plane, so no
/// iterate crosses the cut of `z^α` on the negative real axis.
fn newton_upper(seed: Complex64, tau: f64, b: f64, a: f64, alpha: f64) -> Result<Complex64> {
    let mut z = seed;
    if !(z.im > 0.0) {
        return Err(Error::BranchViolation { arg: z.arg() });
    }
    for it in 0..MAX_NEWTON {
        let f = right_characteristic(z, tau, b, a, alpha);
        let df = 2.0 * tau * z + alpha * b * cpow(z, alpha - 1.0);
        let step = f / df;
        if !step.re.is_finite() || !step.im.is_finite() {
            return Err(Error::NoConvergence { what: "right root Newton", iterations: it });
        }
        let mut damping = 1.0;
        let mut next = z - step;
        let mut halvings = 0;
        while !(next.im > 0.0) {
            damping *= 0.5;
            next = z - step * damping;
            halvings += 1;
            if halvings > 60 {
                return Err(Error::BranchViolation { arg: (z - step).arg() });
            }
        }
        let moved = (next - z).norm();
        z = next;
        if moved <= 4.0 * f64::EPSILON * z.norm() {
            return Ok(z);
        }
        let scale = term_scale(z, tau, b, a, alpha);
        if damping == 1.0 && right_characteristic(z, tau, b, a, alpha).norm() <= 1e-15 * scale {
            return Ok(z);
        }
    }
    Err(Error::NoConvergence { what: "right root Newton", iterations: MAX_NEWTON })
}

fn accept(z: Complex64, tau: f64, b: f64, a: f64, alpha: f64) -> bool {
    let scale = term_scale(z, tau, b, a, alpha);
    z.im > 0.0 && z.re < 0.0 && right_characteristic(z, tau, b, a, alpha).norm() <= 1e-12 * scale
}

/// Upper root `s₁` (Im > 0, Re < 0) of `τz² + bz^α + a`.
pub fn complex_pair_right(tau: f64, b: f64, a: f64, alpha: f64) -> Result<Complex64> {
    check_positive("tau", tau)?;
    check_positive("a", a)?;
    check_positive("b", b)?;
    check_alpha(alpha)?;
    let primary = if tau <= 1.0 {
        small_tau_expansion_right(tau, b, a, alpha)
    } else {
        quadratic_seed(tau, b, a)
    };
    let mut last_err = None;
    let mut seeds = vec![primary, quadratic_seed(tau, b, a), small_tau_expansion_right(tau, b, a, alpha)];
    let radii = [(a / tau).sqrt(), (a / b).powf(1.0 / alpha), (b / tau).powf(1.0 / (2.0 - alpha))];
    for r in radii {
        for k in 1..10 {
            let theta = PI * (0.5 + 0.05 * k as f64);
            for m in [0.25, 1.0, 4.0] {
                seeds.push(Complex64::from_polar(r * m, theta));
            }
        }
    }
    for seed in seeds {
        if !(seed.im > 0.0) || !seed.re.is_finite() {
            continue;
        }
        match newton_upper(seed, tau, b, a, alpha) {
            Ok(z) if accept(z, tau, b, a, alpha) => return Ok(z),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or(Error::NoConvergence { what: "right root Newton", iterations: MAX_NEWTON }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn left_root_examples() {
        let lam = positive_root_left(0.0, 1.0, 2.24, 0.5).unwrap();
        assert!((lam - 5.0176).abs() < 1e-12);
        let lam = positive_root_left(1.0, 1.0, 1.0, 0.5).unwrap();
        // independent bisection on z² + √z − 1
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m * m + m.sqrt() - 1.0 < 0.0 {
                lo = m
            } else {
                hi = m
            }
        }
        assert!((lam - lo).abs() < 1e-13);
        assert!((lam - 0.5249).abs() < 1e-4);
    }

    #[test]
    fn right_root_near_quadratic_limit() {
        let s = complex_pair_right(1.0, 1.0, 1.0, 0.999).unwrap();
        let q = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
        assert!((s - q).norm() < 1e-2, "{s}");
    }

    #[test]
    fn right_root_matches_expansion_at_small_tau() {
        for (tau, tol) in [(1e-6, 1e-2), (1e-8, 1e-3)] {
            let s = complex_pair_right(tau, 1.0, 1.0, 0.5).unwrap();
            let e = small_tau_expansion_right(tau, 1.0, 1.0, 0.5);
            assert!((s - e).norm() / s.norm() <= tol, "tau={tau}: {s} vs {e}");
        }
    }

    #[test]
    fn expansion_modulus_scaling() {
        let alpha = 0.5;
        let taus = [1e-4, 1e-6, 1e-8];
        for w in taus.windows(2) {
            let r0 = small_tau_expansion_right(w[0], 1.0, 1.0, alpha).norm();
            let r1 = small_tau_expansion_right(w[1], 1.0, 1.0, alpha).norm();
            let slope = (r1 / r0).ln() / (w[1] / w[0]).ln();
            assert!((slope + 1.0 / (2.0 - alpha)).abs() < 0.01, "{slope}");
        }
    }

    #[test]
    fn expansion_has_negative_real_part() {
        for alpha in [0.3, 0.5, 0.9] {
            assert!(small_tau_expansion_right(1e-3, 1.0, 1.0, alpha).re < 0.0);
        }
    }

    #[test]
    fn expansion_error_shrinks_with_tau() {
        let mut prev = f64::INFINITY;
        for tau in [1e-2, 1e-4, 1e-6, 1e-8] {
            let s = complex_pair_right(tau, 1.0, 1.0, 0.5).unwrap();
            let e = small_tau_expansion_right(tau, 1.0, 1.0, 0.5);
            let rel = (s - e).norm() / s.norm();
            assert!(rel < prev, "tau={tau}: {rel} !< {prev}");
            prev = rel;
        }
    }

    #[test]
    fn principal_power_branch() {
        let z = Complex64::new(-1.0, 1e-300);
        let p = cpow(z, 0.5);
        assert!((p - Complex64::new(0.0, 1.0)).norm() < 1e-12);
        let w = cpow(z.conj(), 0.5);
        assert!((w - p.conj()).norm() < 1e-12);
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(positive_root_left(1.0, 1.0, -1.0, 0.5).is_err());
        assert!(complex_pair_right(0.0, 1.0, 1.0, 0.5).is_err());
        assert!(complex_pair_right(1.0, 1.0, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn left_residual_and_uniqueness(
            tau in prop_oneof![Just(0.0), 1e-6f64..1e2],
            b in 0.1f64..10.0,
            a in 0.1f64..10.0,
            alpha in 0.05f64..0.95,
        ) {
            let r = CharRoots::left(tau, b, a, alpha).unwrap();
            let lam = r.lambda.unwrap();
            prop_assert!(lam > 0.0);
            prop_assert!(r.abs_residual <= 1e-12 * a.max(1.0));
            prop_assert!(r.residual <= 1e-12);
            // monotone characteristic: negative just below, positive just above
            let f = |z: f64| tau * z * z + b * z.powf(alpha) - a;
            prop_assert!(f(lam * (1.0 - 1e-6)) < 0.0 && f(lam * (1.0 + 1e-6)) > 0.0);
        }

        #[test]
        fn right_pair_in_left_half_plane(
            log_tau in -8.0f64..2.0,
            b in 0.1f64..10.0,
            a in 0.1f64..10.0,
            alpha_idx in 1usize..10,
        ) {
            let tau = 10f64.powf(log_tau);
            let alpha = alpha_idx as f64 / 10.0;
            let r = CharRoots::right(tau, b, a, alpha).unwrap();
            let s = r.s1.unwrap();
            prop_assert!(s.re < 0.0 && s.im > 0.0);
            prop_assert!(r.residual <= 1e-10, "residual {}", r.residual);
            let conj = right_characteristic(r.s2().unwrap(), tau, b, a, alpha).norm();
            prop_assert!((conj - r.abs_residual).abs() <= 1e-12 * (1.0 + r.abs_residual));
        }
    }
}
