//! Singular-limit experiments: `σ ↘ 0` (Cahn-Hilliard to porous medium or
//! fast diffusion) and `s ↘ 0` (Cahn-Hilliard to Allen-Cahn), measured as
//! trajectory distances to a directly computed reference.

use nalgebra::Cholesky;
use rayon::prelude::*;

use crate::dynamics::{ac_evolve, ch_evolve, ch_evolve_modified, pm_evolve, SolverSettings, Trajectory};
use crate::error::{Error, Result};
use crate::experiments::csv::{float, Table};
use crate::fracop::{assemble_with, OperatorOptions};
use crate::grid::{lp_norm_values, Domain1D, Field};
use crate::potential::PotentialParams;
use crate::spectral::first_eigenpair;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    PorousMedium,
    FastDiffusion,
    AllenCahn,
}

impl Reference {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::PorousMedium => "porous-medium",
            Self::FastDiffusion => "fast-diffusion",
            Self::AllenCahn => "allen-cahn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub parameter_sequence: Vec<f64>,
    pub distances: Vec<f64>,
    /// `λ1^h(σ_k)`, recorded for the fast-diffusion limit.
    pub lambda1: Option<Vec<f64>>,
    pub reference: Reference,
    /// Distances strictly decreasing.
    pub monotone: bool,
    /// `d_last / d_first` (0 when every distance is 0).
    pub reduction_factor: f64,
}

impl LimitReport {
    fn new(parameter_sequence: Vec<f64>, distances: Vec<f64>, lambda1: Option<Vec<f64>>, reference: Reference) -> Self {
        let monotone = distances.windows(2).all(|w| w[1] < w[0]);
        let first = distances[0];
        let last = distances[distances.len() - 1];
        let reduction_factor = if first == 0.0 && last == 0.0 { 0.0 } else { last / first };
        Self { parameter_sequence, distances, lambda1, reference, monotone, reduction_factor }
    }

    /// `d_{k+1} ≤ slack · d_k` for all consecutive entries.
    pub fn decreasing_within(&self, slack: f64) -> bool {
        self.distances.windows(2).all(|w| w[1] <= slack * w[0])
    }
}

pub const REPORT_HEADER: [&str; 3] = ["param", "distance", "lambda1"];

pub fn report_table(report: &LimitReport) -> Table {
    let mut t = Table::new(REPORT_HEADER);
    for (k, (p, d)) in report.parameter_sequence.iter().zip(&report.distances).enumerate() {
        let l = report.lambda1.as_ref().map(|l| float(l[k])).unwrap_or_default();
        t.push(vec![float(*p), float(*d), l]);
    }
    t
}

fn check_sequence(seq: &[f64]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::InvalidSequence("empty parameter sequence".into()));
    }
    if seq.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::InvalidSequence("parameters must lie in (0,1)".into()));
    }
    if seq.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidSequence("parameters must be strictly decreasing".into()));
    }
    Ok(())
}

fn check_pair(a: &Trajectory, b: &Trajectory) -> Result<()> {
    if a.u.len() != b.u.len() || a.tau != b.tau || a.u[0].domain() != b.u[0].domain() {
        return Err(Error::DomainMismatch);
    }
    Ok(())
}

/// `(Σ_{n≥1} τ Σ_i h (a_{n,i} − b_{n,i})²)^{1/2}`.
pub fn space_time_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    check_pair(a, b)?;
    let h = a.u[0].domain().h();
    let sum: f64 = a.u.iter().zip(&b.u).skip(1).map(|(x, y)| a.tau * h * (x.values() - y.values()).norm_squared()).sum();
    Ok(sum.sqrt())
}

/// `max_n ‖a_n − b_n‖_{L²}` with the lumped norm.
pub fn max_time_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    check_pair(a, b)?;
    let h = a.u[0].domain().h();
    Ok(a.u
        .iter()
        .zip(&b.u)
        .map(|(x, y)| lp_norm_values((x.values() - y.values()).as_slice(), h, 2.0))
        .fold(0.0, f64::max))
}

/// Cahn-Hilliard at each `σ_k` against the porous-medium flow (`p > 2`).
pub fn limit_sigma_to_pm(
    domain: &Domain1D,
    s: f64,
    p: f64,
    u0: &Field,
    sigmas: &[f64],
    settings: &SolverSettings,
) -> Result<LimitReport> {
    limit_sigma_to_pm_with(domain, s, p, u0, sigmas, settings, &OperatorOptions::default())
}

pub fn limit_sigma_to_pm_with(
    domain: &Domain1D,
    s: f64,
    p: f64,
    u0: &Field,
    sigmas: &[f64],
    settings: &SolverSettings,
    options: &OperatorOptions,
) -> Result<LimitReport> {
    if !(p > 2.0) {
        return Err(Error::OutOfRange(format!("porous-medium limit needs p > 2, got {p}")));
    }
    check_sequence(sigmas)?;
    let params = PotentialParams::new(p)?;
    let op_s = assemble_with(*domain, s, *options)?;
    let reference = pm_evolve(&op_s, &params, u0, settings)?;
    let distances = sigmas
        .par_iter()
        .map(|&sigma| {
            let op_sigma = assemble_with(*domain, sigma, *options)?;
            space_time_distance(&ch_evolve(&op_s, &op_sigma, &params, u0, settings)?, &reference)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitReport::new(sigmas.to_vec(), distances, None, Reference::PorousMedium))
}

/// Modified Cahn-Hilliard with `λ1^h(σ_k)` against fast diffusion
/// (`2N/(N+2s) < p < 2`).
pub fn limit_sigma_to_fd(
    domain: &Domain1D,
    s: f64,
    p: f64,
    u0: &Field,
    sigmas: &[f64],
    settings: &SolverSettings,
) -> Result<LimitReport> {
    limit_sigma_to_fd_with(domain, s, p, u0, sigmas, settings, &OperatorOptions::default())
}

pub fn limit_sigma_to_fd_with(
    domain: &Domain1D,
    s: f64,
    p: f64,
    u0: &Field,
    sigmas: &[f64],
    settings: &SolverSettings,
    options: &OperatorOptions,
) -> Result<LimitReport> {
    let bound = PotentialParams::compatibility_bound(1, s);
    if !(p > bound) {
        return Err(Error::CompatibilityViolation { p, bound });
    }
    if !(p < 2.0) {
        return Err(Error::OutOfRange(format!("fast-diffusion limit needs p < 2, got {p}")));
    }
    check_sequence(sigmas)?;
    let params = PotentialParams::new(p)?;
    let op_s = assemble_with(*domain, s, *options)?;
    let reference = pm_evolve(&op_s, &params, u0, settings)?;
    let rows = sigmas
        .par_iter()
        .map(|&sigma| {
            let op_sigma = assemble_with(*domain, sigma, *options)?;
            let l1 = first_eigenpair(&op_sigma)?.lambda1;
            let traj = ch_evolve_modified(&op_s, &op_sigma, &params, l1, u0, settings)?;
            Ok((space_time_distance(&traj, &reference)?, l1))
        })
        .collect::<Result<Vec<_>>>()?;
    let (distances, lambda1) = rows.into_iter().unzip();
    Ok(LimitReport::new(sigmas.to_vec(), distances, Some(lambda1), Reference::FastDiffusion))
}

/// Cahn-Hilliard at each `s_k` against Allen-Cahn, in the max-in-time norm.
pub fn limit_s_to_ac(
    domain: &Domain1D,
    sigma: f64,
    p: f64,
    u0: &Field,
    ss: &[f64],
    settings: &SolverSettings,
) -> Result<LimitReport> {
    limit_s_to_ac_with(domain, sigma, p, u0, ss, settings, &OperatorOptions::default())
}

pub fn limit_s_to_ac_with(
    domain: &Domain1D,
    sigma: f64,
    p: f64,
    u0: &Field,
    ss: &[f64],
    settings: &SolverSettings,
    options: &OperatorOptions,
) -> Result<LimitReport> {
    check_sequence(ss)?;
    let params = PotentialParams::new(p)?;
    let op_sigma = assemble_with(*domain, sigma, *options)?;
    let reference = ac_evolve(&op_sigma, &params, u0, settings)?;
    let distances = ss
        .par_iter()
        .map(|&s| {
            let op_s = assemble_with(*domain, s, *options)?;
            max_time_distance(&ch_evolve(&op_s, &op_sigma, &params, u0, settings)?, &reference)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitReport::new(ss.to_vec(), distances, None, Reference::AllenCahn))
}

/// Rows `(r, ‖M_c⁻¹A_r v − v‖ / ‖v‖)` in the lumped `L²` norm.
pub fn operator_identity_limit(domain: &Domain1D, v: &Field, rs: &[f64]) -> Result<Vec<(f64, f64)>> {
    operator_identity_limit_with(domain, v, rs, &OperatorOptions::default())
}

pub fn operator_identity_limit_with(
    domain: &Domain1D,
    v: &Field,
    rs: &[f64],
    options: &OperatorOptions,
) -> Result<Vec<(f64, f64)>> {
    check_sequence(rs)?;
    v.check_domain(domain)?;
    let h = domain.h();
    let vn = lp_norm_values(v.values().as_slice(), h, 2.0);
    if vn == 0.0 {
        return Err(Error::OutOfRange("operator limit needs a nonzero field".into()));
    }
    rs.par_iter()
        .map(|&r| {
            let op = assemble_with(*domain, r, *options)?;
            let mc = Cholesky::new(op.mass().clone()).ok_or(Error::NotSpd)?;
            let x = mc.solve(&(op.stiffness() * v.values()));
            Ok((r, lp_norm_values((x - v.values()).as_slice(), h, 2.0) / vn))
        })
        .collect()
}

pub fn operator_limit_table(rows: &[(f64, f64)]) -> Table {
    let mut t = Table::new(["r", "gap"]);
    for &(r, g) in rows {
        t.push_floats(&[r, g]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracop::assemble;
    use crate::grid::{bump, make_domain};

    #[test]
    fn sequence_validation() {
        assert!(check_sequence(&[0.4, 0.2]).is_ok());
        assert!(check_sequence(&[0.2, 0.4]).is_err());
        assert!(check_sequence(&[1.2, 0.4]).is_err());
        assert!(check_sequence(&[]).is_err());
    }

    #[test]
    fn zero_datum_gives_zero_distances() {
        let d = make_domain(0.0, 1.0, 16).unwrap();
        let st = SolverSettings::new(1e-2, 0.05).unwrap();
        let z = Field::zeros(d);
        let r = limit_sigma_to_pm(&d, 0.5, 3.0, &z, &[0.4, 0.2], &st).unwrap();
        assert_eq!(r.distances, vec![0.0, 0.0]);
        assert_eq!(r.reduction_factor, 0.0);
        let r = limit_s_to_ac(&d, 0.5, 4.0, &z, &[0.4, 0.2], &st).unwrap();
        assert_eq!(r.distances, vec![0.0, 0.0]);
    }

    #[test]
    fn reference_against_itself() {
        let d = make_domain(0.0, 1.0, 16).unwrap();
        let st = SolverSettings::new(1e-2, 0.05).unwrap();
        let op = assemble(d, 0.5).unwrap();
        let params = PotentialParams::new(3.0).unwrap();
        let pm = pm_evolve(&op, &params, &bump(d, 1.0), &st).unwrap();
        assert_eq!(space_time_distance(&pm, &pm).unwrap(), 0.0);
        assert_eq!(max_time_distance(&pm, &pm).unwrap(), 0.0);
    }

    #[test]
    fn fd_compatibility() {
        let d = make_domain(0.0, 1.0, 8).unwrap();
        let st = SolverSettings::new(1e-2, 0.02).unwrap();
        let err = limit_sigma_to_fd(&d, 0.75, 0.7, &Field::zeros(d), &[0.4], &st).unwrap_err();
        assert!(matches!(err, Error::CompatibilityViolation { .. }));
    }

    #[test]
    fn operator_gap_shrinks() {
        let d = make_domain(0.0, 1.0, 64).unwrap();
        let rows = operator_identity_limit(&d, &bump(d, 1.0), &[0.4, 0.2, 0.1]).unwrap();
        assert!(rows.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn report_csv() {
        let rep = LimitReport::new(vec![0.4, 0.2], vec![2.0, 1.0], Some(vec![1.5, 1.2]), Reference::FastDiffusion);
        assert!(rep.monotone);
        assert_eq!(rep.reduction_factor, 0.5);
        let text = report_table(&rep).to_string();
        assert!(text.starts_with("param,distance,lambda1\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
