//! Gamma-function helpers.
//!
//! The complete gamma function comes from `statrs`; the upper incomplete
//! gamma function is evaluated here with a power series below `x = 1` and a
//! Lentz continued fraction above, in the exponentially scaled form
//! `e^x Γ(a, x)` so that the tail of the memory integral never overflows.

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// Γ(x).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `e^x · Γ(a, x)` for `a > 0`, `x ≥ 0`.
pub fn upper_gamma_scaled(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return gamma(a);
    }
    if x < 1.0 {
        // Γ(a, x) = Γ(a) − γ(a, x), γ(a, x) = e^{−x} x^a Σ x^n / (a (a+1) … (a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        for n in 1..MAX_ITER {
            term *= x / (a + n as f64);
            sum += term;
            if term.abs() < sum.abs() * EPS {
                break;
            }
        }
        x.exp() * gamma(a) - x.powf(a) * sum
    } else {
        // Modified Lentz on Γ(a, x) = e^{−x} x^a / (x+1−a− 1(1−a)/(x+3−a− …))
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                break;
            }
        }
        x.powf(a) * h
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    (-x).exp() * upper_gamma_scaled(a, x) / gamma(a)
}
