//! Heun predictor–corrector march of `φ′ = ψ`, `τψ′ = h(φ) − D^α[φ]` from the
//! linearised tail at `ξ → −∞`.

use serde::Serialize;

use crate::charroots::positive_root_left;
use crate::error::{Error, Result};
use crate::flux::{Flux, WaveConfig};
use crate::fracderiv::{interpolation_bound, tail_contribution, FracParams, HistoryGrid, MemoryWeights, Tail};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrateOptions {
    pub dx: f64,
    /// Length of the integration interval measured from `ξ_start`.
    pub length: f64,
    pub blowdown_floor: f64,
    /// Distance `φ₋ − φ(ξ_start)` of the initial point.
    pub epsilon: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { dx: 0.01, length: 500.0, blowdown_floor: -10.0, epsilon: 1e-4 }
    }
}

impl IntegrateOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {v} must be positive")))
            }
        };
        positive("dx", self.dx)?;
        positive("length", self.length)?;
        positive("epsilon", self.epsilon)?;
        if !(self.blowdown_floor < 0.0) {
            return Err(Error::InvalidParameter(format!(
                "blowdown_floor = {} must be negative",
                self.blowdown_floor
            )));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.length / self.dx).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Termination {
    ReachedXiMax,
    /// `φ` fell below the floor at `xi`; `xi_star` is the fitted pole.
    BlowDownDetected { xi: f64, xi_star: Option<f64> },
    NumericalFailure { xi: f64 },
}

/// Seed of a trajectory at `ξ_start`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InitialState {
    pub xi_start: f64,
    pub phi: f64,
    pub psi: f64,
    pub lambda: f64,
    /// Tail amplitude `b` in `φ = φ₋ + b e^{λξ}`.
    pub b: f64,
}

/// Start on the decreasing exponential branch with `φ(ξ_start) = φ₋ − ε`,
/// `ξ_start = ln ε / λ_τ`.
pub fn init_segment(cfg: &WaveConfig, tau: f64, epsilon: f64) -> Result<InitialState> {
    let slope = cfg.h_prime(cfg.phi_minus);
    if !(slope > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "h'(phi_minus) = {slope} must be positive for a decaying left tail"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    let lambda = positive_root_left(tau, 1.0, slope, cfg.alpha)?;
    let xi_start = epsilon.ln() / lambda;
    Ok(InitialState {
        xi_start,
        phi: cfg.phi_minus - epsilon,
        psi: -epsilon * lambda,
        lambda,
        b: -epsilon * (-lambda * xi_start).exp(),
    })
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub cfg: WaveConfig,
    pub tau: f64,
    pub flux: Flux,
    pub opts: IntegrateOptions,
    pub grid: HistoryGrid,
    pub phi_samples: Vec<f64>,
    pub dalpha_samples: Vec<f64>,
    pub energy_residuals: Vec<f64>,
    pub terminated: Termination,
    /// Nodes where `|D^α|` exceeded the interpolation bound.
    pub bound_violations: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.phi_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi_samples.is_empty()
    }

    pub fn xi(&self, k: usize) -> f64 {
        self.grid.xi(k)
    }

    pub fn psi(&self) -> &[f64] {
        &self.grid.psi_samples
    }

    pub fn min_phi(&self) -> f64 {
        self.phi_samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Energy residual normalised by `max(1, |H(φ) − H(φ₋)|)` at every node.
    pub fn relative_energy_residuals(&self) -> Vec<f64> {
        let h_minus = self.flux.potential(self.cfg.phi_minus);
        self.energy_residuals
            .iter()
            .zip(&self.phi_samples)
            .map(|(r, &phi)| r.abs() / (self.flux.potential(phi) - h_minus).abs().max(1.0))
            .collect()
    }
}

/// Accepted state at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub xi: f64,
    pub phi: f64,
    pub psi: f64,
    pub psi_prime: f64,
    pub dalpha: f64,
}

/// Stepper owning one growing trajectory.
#[derive(Debug, Clone)]
pub struct Integrator {
    flux: Flux,
    tau: f64,
    fp: FracParams,
    weights: MemoryWeights,
    grid: HistoryGrid,
    phi: Vec<f64>,
    dalpha: Vec<f64>,
    energy: Vec<f64>,
    energy_integral: f64,
    h_minus: f64,
    sup_g: f64,
    sup_psi: f64,
    bound_violations: usize,
}

impl Integrator {
    /// Starts from an arbitrary seed; `D^α` and `ψ′` at the seed come from the
    /// tail and the equation.
    pub fn from_state(flux: Flux, tau: f64, dx: f64, init: InitialState) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau = {tau} must be positive")));
        }
        let cfg = *flux.config();
        let fp = FracParams::new(cfg.alpha);
        let tail = Tail { b: init.b, lambda: init.lambda };
        let mut grid = HistoryGrid::new(init.xi_start, dx, cfg.phi_minus, tail);
        let d0 = tail_contribution(tail, init.xi_start, init.xi_start, &fp);
        let psi_prime0 = (flux.h(init.phi) - d0) / tau;
        grid.push(init.psi, psi_prime0);
        let g0 = init.b * (init.lambda * init.xi_start).exp();
        let energy_integral = 0.5 * g0 * g0 * init.lambda.powf(cfg.alpha);
        let h_minus = flux.potential(cfg.phi_minus);
        let residual =
            0.5 * tau * init.psi * init.psi + energy_integral - (flux.potential(init.phi) - h_minus);
        let mut weights = MemoryWeights::new(&fp, dx);
        weights.ensure(1);
        Ok(Self {
            flux,
            tau,
            fp,
            weights,
            grid,
            phi: vec![init.phi],
            dalpha: vec![d0],
            energy: vec![residual],
            energy_integral,
            h_minus,
            sup_g: g0.abs().max((init.phi - cfg.phi_minus).abs()),
            sup_psi: (g0 * init.lambda).abs().max(init.psi.abs()),
            bound_violations: 0,
        })
    }

    pub fn new(flux: Flux, tau: f64, opts: &IntegrateOptions) -> Result<Self> {
        opts.validate()?;
        let init = init_segment(flux.config(), tau, opts.epsilon)?;
        let mut it = Self::from_state(flux, tau, opts.dx, init)?;
        it.weights.ensure(opts.steps() + 1);
        Ok(it)
    }

    pub fn last(&self) -> NodeState {
        let k = self.phi.len() - 1;
        NodeState {
            xi: self.grid.xi(k),
            phi: self.phi[k],
            psi: self.grid.psi_samples[k],
            psi_prime: self.grid.psi_prime_samples[k],
            dalpha: self.dalpha[k],
        }
    }

    pub fn nodes(&self) -> usize {
        self.phi.len()
    }

    /// One Heun step. The memory sum over accepted nodes is shared by the
    /// predictor and the corrector; the weight on the new node makes `ψ′`
    /// implicit, which is solved exactly since `D^α` is linear in it.
    pub fn step_heun(&mut self) -> Result<NodeState> {
        let k = self.phi.len() - 1;
        let next = k + 1;
        let dx = self.grid.dx;
        let cur = self.last();
        self.weights.ensure(next);
        let xi_next = self.grid.xi(next);
        let d_hist = tail_contribution(self.grid.tail, self.grid.xi_start, xi_next, &self.fp)
            + self.weights.history_part(self.grid.psi_samples[0], &self.grid.psi_prime_samples, next);
        let kappa = self.weights.newest_coefficient();
        let solve = |phi: f64| (self.flux.h(phi) - d_hist) / (self.tau + kappa);

        let phi_pred = cur.phi + dx * cur.psi;
        let psi_pred = cur.psi + dx * cur.psi_prime;
        let psi_prime_pred = solve(phi_pred);

        let phi = cur.phi + 0.5 * dx * (cur.psi + psi_pred);
        let psi = cur.psi + 0.5 * dx * (cur.psi_prime + psi_prime_pred);
        let psi_prime = solve(phi);
        let dalpha = d_hist + kappa * psi_prime;
        if !(phi.is_finite() && psi.is_finite() && psi_prime.is_finite() && dalpha.is_finite()) {
            return Err(Error::NonFinite { xi: xi_next });
        }

        self.grid.push(psi, psi_prime);
        self.phi.push(phi);
        self.dalpha.push(dalpha);
        self.energy_integral += 0.5 * dx * (cur.psi * cur.dalpha + psi * dalpha);
        let residual = 0.5 * self.tau * psi * psi + self.energy_integral
            - (self.flux.potential(phi) - self.h_minus);
        self.energy.push(residual);

        self.sup_g = self.sup_g.max((phi - self.grid.phi_minus).abs());
        self.sup_psi = self.sup_psi.max(psi.abs());
        if dalpha.abs() > interpolation_bound(self.sup_g, self.sup_psi, &self.fp) {
            self.bound_violations += 1;
        }
        Ok(NodeState { xi: xi_next, phi, psi, psi_prime, dalpha })
    }

    fn finish(self, opts: IntegrateOptions, terminated: Termination) -> Trajectory {
        Trajectory {
            cfg: *self.flux.config(),
            tau: self.tau,
            flux: self.flux,
            opts,
            grid: self.grid,
            phi_samples: self.phi,
            dalpha_samples: self.dalpha,
            energy_residuals: self.energy,
            terminated,
            bound_violations: self.bound_violations,
        }
    }
}

/// Marches until the end of the domain, until `φ` drops below the floor, or
/// until a non-finite value appears.
pub fn integrate(flux: &Flux, tau: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
    let mut it = Integrator::new(flux.clone(), tau, opts)?;
    let mut terminated = Termination::ReachedXiMax;
    for _ in 0..opts.steps() {
        match it.step_heun() {
            Ok(node) if node.phi < opts.blowdown_floor => {
                terminated = Termination::BlowDownDetected { xi: node.xi, xi_star: None };
                break;
            }
            Ok(_) => {}
            Err(Error::NonFinite { xi }) => {
                terminated = Termination::NumericalFailure { xi };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut traj = it.finish(*opts, terminated);
    if let Termination::BlowDownDetected { xi, .. } = traj.terminated {
        let xi_star = blowdown_diagnostic(&traj).ok().map(|f| f.xi_star);
        traj.terminated = Termination::BlowDownDetected { xi, xi_star };
    }
    Ok(traj)
}

/// Pole law `φ(ξ) ≈ −√τ C / (ξ* − ξ)` fitted near the end of a blow-down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlowDownFit {
    pub xi_star: f64,
    /// `C` with the `√τ` factor removed.
    pub c_fit: f64,
    /// Root-mean-square misfit of `1/φ` over the window.
    pub rms: f64,
    pub nodes: usize,
}

pub const MIN_FIT_NODES: usize = 10;

/// Least-squares line through `1/φ = (ξ − ξ*)/(√τ C)` on nodes with
/// `φ ≤ floor/2`.
pub fn blowdown_diagnostic(traj: &Trajectory) -> Result<BlowDownFit> {
    fit_pole(traj, 0.5 * traj.opts.blowdown_floor)
}

/// As [`blowdown_diagnostic`] with an explicit window threshold.
pub fn fit_pole(traj: &Trajectory, threshold: f64) -> Result<BlowDownFit> {
    let pts: Vec<(f64, f64)> = traj
        .phi_samples
        .iter()
        .enumerate()
        .filter(|(_, &phi)| phi <= threshold && phi.is_finite())
        .map(|(k, &phi)| (traj.xi(k), 1.0 / phi))
        .collect();
    if pts.len() < MIN_FIT_NODES {
        return Err(Error::InsufficientData { nodes: pts.len() });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (pts.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok(BlowDownFit {
        xi_star: -intercept / slope,
        c_fit: 1.0 / (slope * traj.tau.sqrt()),
        rms,
        nodes: pts.len(),
    })
}
