//! Stationary states: critical points of
//! `E(u) = ½ uᵀA_σu + Σ h β̂(u_i) − (λ/2) uᵀM_c u` for `p > 2`.
//!
//! Local descent uses Barzilai-Borwein steps preconditioned by `M_L⁻¹` with
//! a nonmonotone line search, then Newton on the gradient once the Hessian
//! is positive definite.

use std::fmt;

use nalgebra::{Cholesky, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::csv::{float, Table};
use crate::fracop::{assemble_with, FracOperator, OperatorOptions};
use crate::grid::{lp_norm_values, lp_pow_values, Domain1D, Field};
use crate::potential::PotentialParams;
use crate::spectral::first_eigenpair;

pub const STAT_TOL: f64 = 1e-9;
/// Sup-norm below which a converged state counts as trivial.
pub const TRIVIAL_TOL: f64 = 1e-6;
const DESCENT_MAX: usize = 200_000;
const NEWTON_SWITCH: f64 = 1e-4;
const START_EPS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Classification {
    NontrivialNegative,
    NontrivialPositive,
    Trivial,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::NontrivialNegative => "nontrivial-negative",
            Self::NontrivialPositive => "nontrivial-positive",
            Self::Trivial => "trivial",
        }
    }

    fn of(u: &DVector<f64>) -> Self {
        if u.amax() <= TRIVIAL_TOL {
            Self::Trivial
        } else if u.sum() > 0.0 {
            Self::NontrivialPositive
        } else {
            Self::NontrivialNegative
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct StationaryResult {
    pub u_star: Field,
    pub energy: f64,
    /// `(Σ g_i²/h)^{1/2}` with `g = A_σu + M_Lβ(u) − λM_c u`.
    pub residual: f64,
    pub lambda1_sigma: f64,
    pub classification: Classification,
}

impl StationaryResult {
    /// Lumped `L²` norm of `u*`.
    pub fn norm(&self) -> f64 {
        let h = self.u_star.domain().h();
        lp_norm_values(self.u_star.values().as_slice(), h, 2.0)
    }

    /// Relative defect in `E(u*) + (1/2 − 1/p) ‖u*‖_p^p = 0`, which holds at
    /// every critical point.
    pub fn identity_defect(&self, params: &PotentialParams) -> f64 {
        let h = self.u_star.domain().h();
        let lp = lp_pow_values(self.u_star.values().as_slice(), h, params.p);
        (self.energy + (0.5 - 1.0 / params.p) * lp).abs() / self.energy.abs().max(1.0)
    }

    /// Strictly one-signed on interior nodes.
    pub fn is_one_signed(&self) -> bool {
        let v = self.u_star.values();
        v.iter().all(|&x| x > 0.0) || v.iter().all(|&x| x < 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nontriviality {
    ExistsNontrivial,
    OnlyTrivial,
}

/// Nontrivial stationary states exist iff `λ1(σ) < 1`.
pub fn nontriviality_predicate(lambda1_sigma: f64) -> Nontriviality {
    if lambda1_sigma < 1.0 {
        Nontriviality::ExistsNontrivial
    } else {
        Nontriviality::OnlyTrivial
    }
}

/// `((p/2) |Ω|^{(p−2)/2} (1 − λ1))^{1/(p−2)}`, an upper bound on the
/// `L²` norm of any nontrivial stationary state.
pub fn smallness_bound(params: &PotentialParams, lambda1_sigma: f64, vol_omega: f64) -> Result<f64> {
    if !(lambda1_sigma < 1.0) {
        return Err(Error::OutOfRange(format!("lambda1 = {lambda1_sigma} must be below 1")));
    }
    if !(params.p > 2.0) {
        return Err(Error::OutOfRange(format!("p = {} must exceed 2", params.p)));
    }
    let p = params.p;
    Ok((0.5 * p * vol_omega.powf(0.5 * (p - 2.0)) * (1.0 - lambda1_sigma)).powf(1.0 / (p - 2.0)))
}

/// `0`, `±ε e1` and a seeded random field with values in `[-1, 1]`.
pub fn default_starts(op_sigma: &FracOperator, seed: u64) -> Result<Vec<Field>> {
    let d = *op_sigma.domain();
    let e1 = first_eigenpair(op_sigma)?.e1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = Field::from_vec(d, (0..d.m()).map(|_| rng.random_range(-1.0..=1.0)).collect())?;
    Ok(vec![Field::zeros(d), e1.scaled(START_EPS), e1.scaled(-START_EPS), random])
}

struct Problem<'a> {
    op: &'a FracOperator,
    params: PotentialParams,
    h: f64,
    tol: f64,
}

impl Problem<'_> {
    fn energy(&self, u: &DVector<f64>) -> f64 {
        0.5 * self.op.energy_norm_sq(u) + self.h * u.iter().map(|&v| self.params.beta_hat(v)).sum::<f64>()
            - 0.5 * self.params.lambda * self.op.mass_norm_sq(u)
    }

    fn gradient(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut g = self.op.stiffness() * u - self.op.mass() * u * self.params.lambda;
        for (gi, &ui) in g.iter_mut().zip(u.iter()) {
            *gi += self.h * self.params.beta(ui);
        }
        g
    }

    fn scaled(&self, g: &DVector<f64>) -> f64 {
        (g.norm_squared() / self.h).sqrt()
    }

    /// Local descent from `u0`; returns the point and its residual.
    fn descend(&self, u0: &DVector<f64>) -> (DVector<f64>, f64) {
        let mut u = u0.clone();
        let mut g = self.gradient(&u);
        let mut res = self.scaled(&g);
        let mut e = self.energy(&u);
        let mut history = vec![e];
        let diag = self.op.stiffness().diagonal().max() / self.h;
        let mut alpha = 1.0 / (diag + self.params.lambda + 1.0);
        for _ in 0..DESCENT_MAX {
            if res <= self.tol {
                break;
            }
            if res <= NEWTON_SWITCH {
                if let Some((v, r)) = self.polish(&u) {
                    return (v, r);
                }
            }
            // nonmonotone Armijo against the worst of the last 10 energies
            let reference = history.iter().rev().take(10).cloned().fold(f64::NEG_INFINITY, f64::max);
            let gg = g.norm_squared() / self.h;
            let mut step = alpha;
            let mut next;
            loop {
                next = &u - &g * (step / self.h);
                let en = self.energy(&next);
                if en.is_finite() && en <= reference - 1e-4 * step * gg {
                    e = en;
                    break;
                }
                step *= 0.5;
                if step < 1e-300 {
                    return (u, res);
                }
            }
            let g_next = self.gradient(&next);
            let s = &next - &u;
            let y = &g_next - &g;
            let sy = s.dot(&y);
            alpha = if sy > 0.0 { (self.h * s.norm_squared() / sy).clamp(1e-12, 1e6) } else { (2.0 * step).min(1e6) };
            u = next;
            g = g_next;
            res = self.scaled(&g);
            history.push(e);
        }
        (u, res)
    }

    /// Newton on the gradient while the Hessian stays positive definite.
    fn polish(&self, u0: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
        let mut u = u0.clone();
        let mut g = self.gradient(&u);
        let mut res = self.scaled(&g);
        for _ in 0..50 {
            if res <= self.tol {
                return Some((u, res));
            }
            let mut hess = self.op.stiffness() - self.op.mass() * self.params.lambda;
            for i in 0..u.len() {
                hess[(i, i)] += self.h * (self.params.p - 1.0) * u[i].abs().powf(self.params.p - 2.0);
            }
            let dir = -Cholesky::new(hess)?.solve(&g);
            let mut t = 1.0;
            loop {
                let trial = &u + &dir * t;
                let gt = self.gradient(&trial);
                let rt = self.scaled(&gt);
                if rt < res {
                    u = trial;
                    g = gt;
                    res = rt;
                    break;
                }
                t *= 0.5;
                if t < 1e-8 {
                    return (res <= self.tol).then_some((u, res));
                }
            }
        }
        (res <= self.tol).then_some((u, res))
    }
}

/// Multi-start local minimisation of the energy; the lowest converged
/// energy wins, ties broken by the classification name.
pub fn minimize_energy(op_sigma: &FracOperator, params: &PotentialParams, starts: &[Field]) -> Result<StationaryResult> {
    minimize_energy_with(op_sigma, params, starts, STAT_TOL)
}

/// As [`minimize_energy`] with residual target `stat_tol`.
pub fn minimize_energy_with(
    op_sigma: &FracOperator,
    params: &PotentialParams,
    starts: &[Field],
    stat_tol: f64,
) -> Result<StationaryResult> {
    if !(params.p > 2.0) {
        return Err(Error::OutOfRange(format!("stationary states need p > 2, got {}", params.p)));
    }
    for s in starts {
        s.check_domain(op_sigma.domain())?;
    }
    let lambda1 = first_eigenpair(op_sigma)?.lambda1;
    let problem = Problem { op: op_sigma, params: *params, h: op_sigma.domain().h(), tol: stat_tol };
    let runs: Vec<(DVector<f64>, f64)> = starts.par_iter().map(|s| problem.descend(s.values())).collect();
    let best_residual = runs.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    let mut candidates: Vec<(f64, Classification, DVector<f64>, f64)> = runs
        .into_iter()
        .filter(|(_, r)| *r <= stat_tol)
        .map(|(u, r)| (problem.energy(&u), Classification::of(&u), u, r))
        .collect();
    if candidates.is_empty() {
        return Err(Error::StationaryNoConvergence { residual: best_residual });
    }
    let lowest = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let tie = 1e-10 * lowest.abs().max(1.0);
    candidates.retain(|c| c.0 <= lowest + tie);
    candidates.sort_by(|a, b| a.1.as_str().cmp(b.1.as_str()));
    let (energy, classification, u, residual) = candidates.swap_remove(0);
    Ok(StationaryResult {
        u_star: Field::from_values(*op_sigma.domain(), u)?,
        energy,
        residual,
        lambda1_sigma: lambda1,
        classification,
    })
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub sigma: f64,
    pub lambda1: f64,
    pub norm_u: f64,
    /// `None` when `λ1 ≥ 1`, where no bound applies.
    pub bound: Option<f64>,
    pub energy: f64,
    pub classification: Classification,
    /// See [`StationaryResult::identity_defect`]; not exported to CSV.
    pub identity_defect: f64,
}

pub const SWEEP_HEADER: [&str; 6] = ["sigma", "lambda1", "norm_u", "bound", "energy", "classification"];

/// Stationary states along `sigmas`. Rows with `λ1^h ≥ 1` must come out
/// trivial; their bound column is empty.
pub fn stationary_sigma_sweep(domain: &Domain1D, params: &PotentialParams, sigmas: &[f64], seed: u64) -> Result<Vec<SweepRow>> {
    stationary_sigma_sweep_with(domain, params, sigmas, seed, &OperatorOptions::default(), STAT_TOL)
}

pub fn stationary_sigma_sweep_with(
    domain: &Domain1D,
    params: &PotentialParams,
    sigmas: &[f64],
    seed: u64,
    options: &OperatorOptions,
    stat_tol: f64,
) -> Result<Vec<SweepRow>> {
    sigmas
        .par_iter()
        .map(|&sigma| {
            let op = assemble_with(*domain, sigma, *options)?;
            let starts = default_starts(&op, seed)?;
            let res = minimize_energy_with(&op, params, &starts, stat_tol)?;
            let bound = match nontriviality_predicate(res.lambda1_sigma) {
                Nontriviality::ExistsNontrivial => Some(smallness_bound(params, res.lambda1_sigma, domain.length())?),
                Nontriviality::OnlyTrivial => None,
            };
            Ok(SweepRow {
                sigma,
                lambda1: res.lambda1_sigma,
                norm_u: res.norm(),
                bound,
                energy: res.energy,
                classification: res.classification,
                identity_defect: res.identity_defect(params),
            })
        })
        .collect()
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(SWEEP_HEADER);
    for r in rows {
        t.push(vec![
            float(r.sigma),
            float(r.lambda1),
            float(r.norm_u),
            r.bound.map(float).unwrap_or_default(),
            float(r.energy),
            r.classification.to_string(),
        ]);
    }
    t
}

/// Halves the interval (about its left end) until `λ1^h(σ) ≥ 1`.
pub fn shrink_until_trivial(domain: &Domain1D, sigma: f64, options: &OperatorOptions) -> Result<(Domain1D, f64)> {
    let mut d = *domain;
    for _ in 0..60 {
        let op = assemble_with(d, sigma, *options)?;
        let l1 = first_eigenpair(&op)?.lambda1;
        if l1 >= 1.0 {
            return Ok((d, l1));
        }
        d = Domain1D::new(d.a(), d.a() + 0.5 * d.length(), d.m())?;
    }
    Err(Error::InvalidDomain("no interval with lambda1 >= 1 found".into()))
}
