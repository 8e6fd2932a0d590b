//! Time integrators: the convex-splitting scheme for fractional
//! Cahn-Hilliard (original and modified), and implicit Euler for fractional
//! Allen-Cahn and porous-medium / fast-diffusion flows.
//!
//! Conventions shared by all integrators:
//!
//! * linear pairings use the consistent mass `M_c`, the nonlinearity is
//!   lumped (`M_L = h I`);
//! * the energy is `½ uᵀA_σu + Σ h β̂(u_i) − (λ/2) uᵀM_c u`, so the
//!   concave part is measured in the same norm as the explicit term
//!   `λ M_c u_{n−1}` of the scheme;
//! * `w_0` is stored as zero, since the scheme defines `w_n` for `n ≥ 1`.

mod diagnostics;
mod step;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fracop::{dual_norm_sq_vec, FracOperator};
use crate::grid::{lp_norm_values, Field};
use crate::potential::PotentialParams;

pub use diagnostics::{
    apriori_monitor, beta_bound_check, check_energy_identity_gap, cumulative_slack, energy_table,
    trajectory_table, AprioriMonitor, IdentityGapReport, ENERGY_HEADER,
};
use step::{Flow, Scheme};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tau: f64,
    pub t_final: f64,
    /// Target for `(Σ g_i²/h)^{1/2}`, the `M_L`-scaled gradient norm.
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Backtracking factor.
    pub shrink: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
}

impl SolverSettings {
    pub fn new(tau: f64, t_final: f64) -> Result<Self> {
        let s = Self { tau, t_final, newton_tol: 1e-10, newton_max: 100, shrink: 0.5, armijo: 1e-4 };
        s.validate()?;
        Ok(s)
    }

    pub fn with_newton_tol(mut self, tol: f64) -> Result<Self> {
        self.newton_tol = tol;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.t_final > 0.0 && self.tau <= self.t_final) {
            return Err(Error::OutOfRange(format!("need 0 < tau <= T, got tau = {}, T = {}", self.tau, self.t_final)));
        }
        if !(self.newton_tol > 0.0) || self.newton_max == 0 {
            return Err(Error::OutOfRange("newton_tol and newton_max must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0 && self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::OutOfRange("line-search parameters must lie in (0,1)".into()));
        }
        Ok(())
    }

    /// Number of steps, `round(T/τ)`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.tau).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub iterations: usize,
    /// Final scaled gradient norm.
    pub residual: f64,
    pub backtracks: usize,
    /// Scaled residual of the chemical-potential equation with the
    /// recovered `w_n`.
    pub consistency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub t: f64,
    /// Original energy (`λ = 1`).
    pub e_sigma: f64,
    /// Energy with the run's concave weight.
    pub e_tilde: f64,
    pub gagliardo_s_of_w: f64,
    pub dual_norm_u: f64,
    pub l2_u: f64,
    pub lp_u: f64,
    pub step_slack: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyTrace {
    pub rows: Vec<EnergyRow>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub u: Vec<Field>,
    pub w: Vec<Field>,
    /// One entry per step, `stats[n-1]` for step `n`.
    pub stats: Vec<StepStats>,
    pub trace: EnergyTrace,
    /// Concave weight used in the splitting.
    pub lambda: f64,
    pub tau: f64,
}

impl Trajectory {
    pub fn last(&self) -> &Field {
        self.u.last().expect("trajectories hold u_0")
    }

    pub fn min_slack(&self) -> f64 {
        self.trace.rows.iter().skip(1).map(|r| r.step_slack).fold(f64::INFINITY, f64::min)
    }
}

/// Result of a single implicit step.
#[derive(Debug, Clone)]
pub struct Step {
    pub u: Field,
    pub w: Field,
    pub stats: StepStats,
}

fn check(op: &FracOperator, u: &Field) -> Result<()> {
    u.check_domain(op.domain())?;
    if !u.is_finite() {
        return Err(Error::OutOfRange("field has non-finite values".into()));
    }
    Ok(())
}

fn convex_energy(op_sigma: Option<&FracOperator>, params: &PotentialParams, h: f64, u: &DVector<f64>) -> f64 {
    let quad = op_sigma.map_or(0.0, |op| 0.5 * op.energy_norm_sq(u));
    quad + h * u.iter().map(|&v| params.energy_beta_hat(v)).sum::<f64>()
}

/// `E_σ(u) = ½ uᵀA_σu + Σ h β̂(u_i) − (λ/2) uᵀM_c u` with `λ = params.lambda`.
pub fn energy(op_sigma: &FracOperator, params: &PotentialParams, u: &Field) -> Result<f64> {
    energy_modified(op_sigma, params, params.lambda, u)
}

/// The energy with concave weight `lambda1_sigma`.
pub fn energy_modified(op_sigma: &FracOperator, params: &PotentialParams, lambda1_sigma: f64, u: &Field) -> Result<f64> {
    u.check_domain(op_sigma.domain())?;
    let v = u.values();
    let h = op_sigma.domain().h();
    Ok(convex_energy(Some(op_sigma), params, h, v) - 0.5 * lambda1_sigma * op_sigma.mass_norm_sq(v))
}

/// One convex-splitting step of the Cahn-Hilliard scheme with concave
/// weight `params.lambda`.
pub fn ch_step(
    op_s: &FracOperator,
    op_sigma: &FracOperator,
    params: &PotentialParams,
    u_prev: &Field,
    tau: f64,
) -> Result<Step> {
    check(op_s, u_prev)?;
    let scheme = Scheme::new(Flow::CahnHilliard, Some(op_s), Some(op_sigma), *params, params.lambda, tau)?;
    let settings = SolverSettings::new(tau, tau)?;
    let (u, w, stats) = scheme.step(u_prev.values(), &settings, 1)?;
    let d = *op_s.domain();
    Ok(Step { u: Field::from_values(d, u)?, w: Field::from_values(d, w)?, stats })
}

pub fn ch_evolve(
    op_s: &FracOperator,
    op_sigma: &FracOperator,
    params: &PotentialParams,
    u0: &Field,
    settings: &SolverSettings,
) -> Result<Trajectory> {
    check(op_s, u0)?;
    let scheme = Scheme::new(Flow::CahnHilliard, Some(op_s), Some(op_sigma), *params, params.lambda, settings.tau)?;
    evolve(&scheme, u0, settings)
}

/// Cahn-Hilliard with the concave term weighted by `lambda1_sigma`.
/// Requires `p > 2N/(N + 2s)`.
pub fn ch_evolve_modified(
    op_s: &FracOperator,
    op_sigma: &FracOperator,
    params: &PotentialParams,
    lambda1_sigma: f64,
    u0: &Field,
    settings: &SolverSettings,
) -> Result<Trajectory> {
    let bound = PotentialParams::compatibility_bound(1, op_s.order());
    if !(params.p > bound) {
        return Err(Error::CompatibilityViolation { p: params.p, bound });
    }
    let modified = params.with_lambda(lambda1_sigma);
    ch_evolve(op_s, op_sigma, &modified, u0, settings)
}

/// Allen-Cahn: `M_c(u_n − u_{n−1})/τ + A_σu_n + M_Lβ(u_n) − λM_c u_{n−1} = 0`.
pub fn ac_evolve(op_sigma: &FracOperator, params: &PotentialParams, u0: &Field, settings: &SolverSettings) -> Result<Trajectory> {
    check(op_sigma, u0)?;
    let scheme = Scheme::new(Flow::AllenCahn, None, Some(op_sigma), *params, params.lambda, settings.tau)?;
    evolve(&scheme, u0, settings)
}

/// Porous medium (`p > 2`) or fast diffusion (`p < 2`) as an implicit
/// gradient flow of `Σ h β̂(u_i)` in the dual norm of `A_s`.
pub fn pm_evolve(op_s: &FracOperator, params: &PotentialParams, u0: &Field, settings: &SolverSettings) -> Result<Trajectory> {
    check(op_s, u0)?;
    let scheme = Scheme::new(Flow::PorousMedium, Some(op_s), None, *params, 0.0, settings.tau)?;
    evolve(&scheme, u0, settings)
}

fn evolve(scheme: &Scheme<'_>, u0: &Field, settings: &SolverSettings) -> Result<Trajectory> {
    settings.validate()?;
    let domain = *u0.domain();
    let steps = settings.steps();
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        w: Vec::with_capacity(steps + 1),
        stats: Vec::with_capacity(steps),
        trace: EnergyTrace::default(),
        lambda: scheme.lambda,
        tau: settings.tau,
    };
    let zero = DVector::zeros(domain.m());
    traj.times.push(0.0);
    traj.trace.rows.push(trace_row(scheme, 0.0, u0.values(), &zero, None)?);
    traj.u.push(u0.clone());
    traj.w.push(Field::zeros(domain));
    for n in 1..=steps {
        let prev = traj.u[n - 1].values();
        let (u, w, stats) = scheme.step(prev, settings, n)?;
        let t = n as f64 * settings.tau;
        traj.trace.rows.push(trace_row(scheme, t, &u, &w, Some(prev))?);
        traj.times.push(t);
        traj.u.push(Field::from_values(domain, u)?);
        traj.w.push(Field::from_values(domain, w)?);
        traj.stats.push(stats);
    }
    Ok(traj)
}

fn trace_row(
    scheme: &Scheme<'_>,
    t: f64,
    u: &DVector<f64>,
    w: &DVector<f64>,
    prev: Option<&DVector<f64>>,
) -> Result<EnergyRow> {
    let op_sigma = match scheme.flow {
        Flow::PorousMedium => None,
        _ => scheme.op_sigma,
    };
    let op_dual = scheme.op_s.or(scheme.op_sigma).expect("scheme has an operator");
    let h = op_dual.domain().h();
    let params = &scheme.params;
    let mass = scheme.mass();
    let mass_sq = |v: &DVector<f64>| v.dot(&(mass * v));
    let concave = if op_sigma.is_some() { 0.5 * mass_sq(u) } else { 0.0 };
    let convex = convex_energy(op_sigma, params, h, u);
    let step_slack = match prev {
        None => 0.0,
        Some(prev) => {
            let delta = u - prev;
            let released = if op_sigma.is_some() { 0.5 * scheme.lambda * (mass_sq(u) - mass_sq(prev)) } else { 0.0 };
            released - scheme.dissipation(&delta) - (convex - convex_energy(op_sigma, params, h, prev))
        }
    };
    Ok(EnergyRow {
        t,
        e_sigma: convex - concave,
        e_tilde: convex - scheme.lambda * concave,
        gagliardo_s_of_w: op_dual.energy_norm_sq(w),
        dual_norm_u: dual_norm_sq_vec(op_dual, u)?.sqrt(),
        l2_u: lp_norm_values(u.as_slice(), h, 2.0),
        lp_u: lp_norm_values(u.as_slice(), h, params.p),
        step_slack,
    })
}
