//! Trajectory classification and the bisection in `τ` for the
//! undercompressive wave.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flux::{build_modified_flux, CapParams, Flux, WaveConfig};
use crate::integrator::{integrate, IntegrateOptions, Termination, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Classical,
    Undercompressive,
    Unbounded,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Mean of `φ` over the last tenth of the nodes.
    pub tail_mean: f64,
    pub tail_dist_c: f64,
    pub tail_dist_plus: f64,
    pub xi_star: Option<f64>,
}

/// `0.05 |φ₋ − φ₊|`.
pub fn default_tail_tol(cfg: &WaveConfig) -> f64 {
    0.05 * (cfg.phi_minus - cfg.phi_plus).abs()
}

pub fn classify(traj: &Trajectory, tail_tol: f64) -> Classification {
    let n = traj.len();
    let window = &traj.phi_samples[n - (n / 10).max(1)..];
    let tail_mean = window.iter().sum::<f64>() / window.len() as f64;
    let tail_dist_c = (tail_mean - traj.cfg.phi_c).abs();
    let tail_dist_plus = (tail_mean - traj.cfg.phi_plus).abs();
    let (verdict, xi_star) = match traj.terminated {
        Termination::BlowDownDetected { xi_star, .. } => (Verdict::Unbounded, xi_star),
        Termination::NumericalFailure { .. } => (Verdict::Undecided, None),
        Termination::ReachedXiMax => {
            let v = if tail_dist_c <= tail_tol && tail_dist_c <= tail_dist_plus {
                Verdict::Classical
            } else if tail_dist_plus <= tail_tol {
                Verdict::Undercompressive
            } else {
                Verdict::Undecided
            };
            (v, None)
        }
    };
    Classification { verdict, tail_mean, tail_dist_c, tail_dist_plus, xi_star }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootOptions {
    pub integrate: IntegrateOptions,
    /// Defaults to [`default_tail_tol`].
    pub tail_tol: Option<f64>,
    /// Defaults to `max(1e−14, 1e−12 τ)` at the current midpoint.
    pub stop_tol: Option<f64>,
    pub max_iterations: usize,
    /// Worker threads for the bracket scan.
    pub jobs: usize,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { integrate: IntegrateOptions::default(), tail_tol: None, stop_tol: None, max_iterations: 60, jobs: 1 }
    }
}

impl ShootOptions {
    fn tail_tol(&self, cfg: &WaveConfig) -> f64 {
        self.tail_tol.unwrap_or_else(|| default_tail_tol(cfg))
    }

    fn stop_tol(&self, tau: f64) -> f64 {
        self.stop_tol.unwrap_or_else(|| (1e-12 * tau).max(1e-14))
    }
}

/// One classified run, with the domain length that produced the verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub tau: f64,
    pub length: f64,
    pub classification: Classification,
}

/// Integrates and classifies; a verdict that is neither classical nor
/// unbounded is retried once on a domain twice as long.
pub fn evaluate(cfg: &WaveConfig, tau: f64, opts: &ShootOptions) -> Result<Evaluation> {
    let tol = opts.tail_tol(cfg);
    let flux = Flux::Original(*cfg);
    let mut iopts = opts.integrate;
    let mut classification = classify(&integrate(&flux, tau, &iopts)?, tol);
    if matches!(classification.verdict, Verdict::Undecided | Verdict::Undercompressive) {
        iopts.length *= 2.0;
        classification = classify(&integrate(&flux, tau, &iopts)?, tol);
    }
    Ok(Evaluation { tau, length: iopts.length, classification })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bracket {
    pub tau_c: f64,
    pub tau_u: f64,
    pub history: Vec<(f64, Verdict)>,
}

const SCAN_MAX_EXP: i32 = 20;

fn evaluate_batch(cfg: &WaveConfig, taus: &[f64], opts: &ShootOptions, pool: &rayon::ThreadPool) -> Result<Vec<Evaluation>> {
    pool.install(|| taus.par_iter().map(|&t| evaluate(cfg, t, opts)).collect())
}

/// Scans `τ = 2^k` outward from `τ = 1` within `[2⁻²⁰, 2²⁰]` for a classical
/// value directly below an unbounded one.
pub fn bracket_search(cfg: &WaveConfig, opts: &ShootOptions) -> Result<Bracket> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    let batch = opts.jobs.max(1);
    let mut history = Vec::new();

    let up: Vec<f64> = (0..=SCAN_MAX_EXP).map(|k| 2f64.powi(k)).collect();
    let mut last_classical: Option<f64> = None;
    let mut first_unbounded: Option<f64> = None;
    'up: for chunk in up.chunks(batch) {
        for ev in evaluate_batch(cfg, chunk, opts, &pool)? {
            history.push((ev.tau, ev.classification.verdict));
            match ev.classification.verdict {
                Verdict::Classical => last_classical = Some(ev.tau),
                Verdict::Unbounded => {
                    first_unbounded = Some(ev.tau);
                    break 'up;
                }
                _ => {}
            }
        }
    }
    let tau_u = first_unbounded.ok_or(Error::NoBracket)?;
    if let Some(tau_c) = last_classical {
        return Ok(Bracket { tau_c, tau_u, history });
    }
    let down: Vec<f64> = (1..=SCAN_MAX_EXP).map(|k| 2f64.powi(-k)).collect();
    let mut tau_u = tau_u;
    for chunk in down.chunks(batch) {
        for ev in evaluate_batch(cfg, chunk, opts, &pool)? {
            history.push((ev.tau, ev.classification.verdict));
            match ev.classification.verdict {
                Verdict::Classical => return Ok(Bracket { tau_c: ev.tau, tau_u, history }),
                Verdict::Unbounded => tau_u = ev.tau,
                _ => {}
            }
        }
    }
    Err(Error::NoBracket)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopReason {
    /// Bracket narrower than the stopping tolerance.
    Tolerance,
    /// A midpoint stayed near `φ₊` over the extended domain.
    Undercompressive,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShootResult {
    pub tau_star: f64,
    pub bracket_final: (f64, f64),
    pub iterations: usize,
    pub history: Vec<(f64, Verdict)>,
    pub stop_reason: StopReason,
}

/// Bisection on a `(Classical, Unbounded)` bracket.
pub fn bisect_tau(bracket: (f64, f64), cfg: &WaveConfig, opts: &ShootOptions) -> Result<ShootResult> {
    let (mut tau_c, mut tau_u) = bracket;
    if !(tau_c > 0.0 && tau_u > 0.0 && tau_c != tau_u) {
        return Err(Error::InvalidParameter(format!("bracket ({tau_c}, {tau_u}) is not usable")));
    }
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut stop_reason = StopReason::MaxIterations;
    while iterations < opts.max_iterations {
        let mid = 0.5 * (tau_c + tau_u);
        if (tau_u - tau_c).abs() <= opts.stop_tol(mid) {
            stop_reason = StopReason::Tolerance;
            break;
        }
        iterations += 1;
        let ev = evaluate(cfg, mid, opts)?;
        history.push((mid, ev.classification.verdict));
        match ev.classification.verdict {
            Verdict::Classical => tau_c = mid,
            Verdict::Unbounded => tau_u = mid,
            Verdict::Undercompressive => {
                return Ok(ShootResult {
                    tau_star: mid,
                    bracket_final: (tau_c, tau_u),
                    iterations,
                    history,
                    stop_reason: StopReason::Undercompressive,
                })
            }
            Verdict::Undecided => {
                return Err(Error::BracketBroken {
                    tau: mid,
                    reason: format!(
                        "undecided after extending the domain to {} (tail mean {})",
                        ev.length, ev.classification.tail_mean
                    ),
                })
            }
        }
    }
    if stop_reason == StopReason::MaxIterations && (tau_u - tau_c).abs() <= opts.stop_tol(0.5 * (tau_c + tau_u)) {
        stop_reason = StopReason::Tolerance;
    }
    Ok(ShootResult {
        tau_star: 0.5 * (tau_c + tau_u),
        bracket_final: (tau_c, tau_u),
        iterations,
        history,
        stop_reason,
    })
}

/// Bracket search followed by bisection; the scan verdicts are prepended to
/// the history.
pub fn shoot(cfg: &WaveConfig, opts: &ShootOptions) -> Result<ShootResult> {
    let bracket = bracket_search(cfg, opts)?;
    let mut result = bisect_tau((bracket.tau_c, bracket.tau_u), cfg, opts)?;
    let mut history = bracket.history;
    history.append(&mut result.history);
    result.history = history;
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub tau: f64,
    pub junction: f64,
    pub original: Termination,
    pub modified: Termination,
    /// Largest `|φ_orig − φ_mod|` over the common nodes.
    pub sup_difference: f64,
    pub min_phi_original: f64,
    pub min_phi_modified: f64,
    pub cap: CapParams,
}

impl WitnessReport {
    pub fn coincide(&self, tol: f64) -> bool {
        self.original == self.modified && self.sup_difference <= tol
    }

    pub fn stays_above_junction(&self) -> bool {
        self.min_phi_original > self.junction
    }
}

/// Runs the original and the capped flux at the same `τ` and compares them.
pub fn membership_witness(cfg: &WaveConfig, tau: f64, opts: &IntegrateOptions, cap: CapParams) -> Result<WitnessReport> {
    let modified = build_modified_flux(cfg, cap)?;
    let junction = modified.junction;
    let a = integrate(&Flux::Original(*cfg), tau, opts)?;
    let b = integrate(&Flux::Modified(modified), tau, opts)?;
    let sup_difference = a
        .phi_samples
        .iter()
        .zip(&b.phi_samples)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(WitnessReport {
        tau,
        junction,
        original: a.terminated,
        modified: b.terminated,
        sup_difference,
        min_phi_original: a.min_phi(),
        min_phi_modified: b.min_phi(),
        cap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracderiv::{HistoryGrid, Tail};

    fn synthetic(cfg: WaveConfig, phi: Vec<f64>, terminated: Termination) -> Trajectory {
        let n = phi.len();
        let mut grid = HistoryGrid::new(0.0, 0.01, cfg.phi_minus, Tail { b: -1.0, lambda: 1.0 });
        for _ in 0..n {
            grid.push(0.0, 0.0);
        }
        Trajectory {
            cfg,
            tau: 1.0,
            flux: Flux::Original(cfg),
            opts: IntegrateOptions::default(),
            grid,
            phi_samples: phi,
            dalpha_samples: vec![0.0; n],
            energy_residuals: vec![0.0; n],
            terminated,
            bound_violations: 0,
        }
    }

    #[test]
    fn synthetic_verdicts() {
        let cfg = WaveConfig::new(1.0, -0.6, 0.9).unwrap();
        let tol = default_tail_tol(&cfg);
        assert!((tol - 0.08).abs() < 1e-15);
        let plus = synthetic(cfg, vec![-0.6; 100], Termination::ReachedXiMax);
        assert_eq!(classify(&plus, tol).verdict, Verdict::Undercompressive);
        let c = synthetic(cfg, vec![-0.41; 100], Termination::ReachedXiMax);
        assert_eq!(classify(&c, tol).verdict, Verdict::Classical);
        let mid = synthetic(cfg, vec![-0.5; 100], Termination::ReachedXiMax);
        assert_eq!(classify(&mid, tol).verdict, Verdict::Undecided);
        let down = synthetic(cfg, vec![-0.4; 100], Termination::BlowDownDetected { xi: 1.0, xi_star: Some(1.1) });
        let cl = classify(&down, tol);
        assert_eq!(cl.verdict, Verdict::Unbounded);
        assert_eq!(cl.xi_star, Some(1.1));
        let nan = synthetic(cfg, vec![-0.4; 100], Termination::NumericalFailure { xi: 1.0 });
        assert_eq!(classify(&nan, tol).verdict, Verdict::Undecided);
    }

    #[test]
    fn bisection_halves_width() {
        let cfg = WaveConfig::new(1.0, -0.6, 0.9).unwrap();
        let opts = ShootOptions {
            integrate: IntegrateOptions { dx: 0.02, length: 100.0, ..Default::default() },
            max_iterations: 6,
            ..Default::default()
        };
        let r = bisect_tau((1.0, 16.0), &cfg, &opts).unwrap();
        assert_eq!(r.stop_reason, StopReason::MaxIterations);
        assert_eq!(r.iterations, 6);
        let width = r.bracket_final.1 - r.bracket_final.0;
        assert!((width - 15.0 / 64.0).abs() < 1e-12);
        assert!(r.bracket_final.0 < r.tau_star && r.tau_star < r.bracket_final.1);
        // no classical verdict above an unbounded one
        let max_c = r.history.iter().filter(|h| h.1 == Verdict::Classical).map(|h| h.0).fold(0.0, f64::max);
        let min_u = r.history.iter().filter(|h| h.1 == Verdict::Unbounded).map(|h| h.0).fold(f64::INFINITY, f64::min);
        assert!(max_c < min_u);
    }

    #[test]
    fn inadmissible_states_give_no_bracket() {
        let cfg = WaveConfig::new(1.0, -1.2, 0.9).unwrap();
        let opts = ShootOptions {
            integrate: IntegrateOptions { dx: 0.05, length: 50.0, ..Default::default() },
            jobs: 4,
            ..Default::default()
        };
        assert_eq!(bracket_search(&cfg, &opts), Err(Error::NoBracket));
    }
}
