//! First eigenpair of `A x = λ M_c x` and analytic eigenvalue bounds.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::csv::{float, Table};
use crate::fracop::{assemble_with, FracOperator, OperatorOptions};
use crate::grid::{Domain1D, Field};

pub const EIG_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub r: f64,
    pub lambda1: f64,
    /// `M_c`-normalised, positive.
    pub e1: Field,
    /// `‖A e1 − λ1 M_c e1‖ / (λ1 ‖M_c e1‖)`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenBounds {
    pub r: f64,
    pub lower: f64,
    pub upper: f64,
    pub kappa: f64,
}

/// Inverse power iteration to the operator's `eig_tol`.
pub fn first_eigenpair(op: &FracOperator) -> Result<EigenPair> {
    let tol = op.options().eig_tol;
    let m = op.domain().m();
    let start = DVector::from_element(m, 1.0);
    let (lambda, mut x, residual) = inverse_iteration(op, start, None, tol)?;
    if x.sum() < 0.0 {
        x.neg_mut();
    }
    Ok(EigenPair { r: op.order(), lambda1: lambda, e1: Field::from_values(*op.domain(), x)?, residual })
}

/// Second-smallest eigenvalue by inverse iteration deflated against `e1`.
pub fn second_eigenvalue(op: &FracOperator, first: &EigenPair) -> Result<f64> {
    let tol = op.options().eig_tol;
    let m = op.domain().m();
    // odd start: orthogonal to the even e1 up to roundoff
    let start = DVector::from_fn(m, |i, _| (i as f64 + 1.0) - 0.5 * (m as f64 + 1.0));
    let (lambda, _, _) = inverse_iteration(op, start, Some(first.e1.values()), tol)?;
    Ok(lambda)
}

fn inverse_iteration(
    op: &FracOperator,
    mut x: DVector<f64>,
    deflate: Option<&DVector<f64>>,
    tol: f64,
) -> Result<(f64, DVector<f64>, f64)> {
    let mass = op.mass();
    let project = |v: &mut DVector<f64>| {
        if let Some(e) = deflate {
            let c = e.dot(&(mass * &*v));
            v.axpy(-c, e, 1.0);
        }
    };
    let normalise = |v: &mut DVector<f64>| {
        let n = v.dot(&(mass * &*v)).sqrt();
        *v /= n;
    };
    project(&mut x);
    normalise(&mut x);
    let mut residual = f64::INFINITY;
    for _ in 0..EIG_MAX_ITER {
        let mx = mass * &x;
        let mut y = op.factor().solve(&mx);
        project(&mut y);
        normalise(&mut y);
        x = y;
        let ax = op.stiffness() * &x;
        let mx = mass * &x;
        let lambda = x.dot(&ax) / x.dot(&mx);
        residual = (&ax - &mx * lambda).norm() / (lambda * mx.norm());
        if residual <= tol {
            return Ok((lambda, x, residual));
        }
    }
    Err(Error::NoConvergence { iterations: EIG_MAX_ITER, residual })
}

/// Volume of the unit ball in `ℝ^N` for `N ∈ {1, 2}`.
fn unit_ball_volume(n: usize) -> Result<f64> {
    match n {
        1 => Ok(2.0),
        2 => Ok(std::f64::consts::PI),
        _ => Err(Error::OutOfRange(format!("unit ball volume supplied for N = 1, 2 only, got {n}"))),
    }
}

/// `κ(N, α) = α^{-α/(α+N)} (α+N) N^{-N/(N+α)} d^{α/(N+α)}`.
pub fn kappa(n: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::OutOfRange(format!("alpha = {alpha} must be positive")));
    }
    let d = unit_ball_volume(n)?;
    let nf = n as f64;
    let s = alpha + nf;
    // (d/α)^{α/(α+N)} groups the two powers sharing an exponent
    Ok((d / alpha).powf(alpha / s) * s * nf.powf(-nf / s))
}

/// `κ(N,2r)^{-(N+2r)/N} ((2π)^N/|Ω|)^{2r/N}`.
pub fn lambda1_lower_bound(r: f64, n: usize, vol_omega: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange(format!("r = {r} must lie in (0,1)")));
    }
    if !(vol_omega > 0.0) {
        return Err(Error::OutOfRange(format!("|Ω| = {vol_omega} must be positive")));
    }
    let nf = n as f64;
    let k = kappa(n, 2.0 * r)?;
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(k.powf(-(nf + 2.0 * r) / nf) * (two_pi.powf(nf) / vol_omega).powf(2.0 * r / nf))
}

/// First Dirichlet eigenvalue of `-d²/dx²` on an interval of length `len`.
pub fn dirichlet_lambda1(len: f64) -> f64 {
    (std::f64::consts::PI / len).powi(2)
}

pub fn eigen_bounds(domain: &Domain1D, r: f64) -> Result<EigenBounds> {
    Ok(EigenBounds {
        r,
        lower: lambda1_lower_bound(r, 1, domain.length())?,
        upper: dirichlet_lambda1(domain.length()).powf(r),
        kappa: kappa(1, 2.0 * r)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub m: usize,
    pub lambda1: f64,
    pub lower: f64,
    pub upper: f64,
    pub residual: f64,
}

pub const SWEEP_HEADER: [&str; 6] = ["r", "M", "lambda1", "lower", "upper", "residual"];

/// Eigensolves over `rs × refinements`, in parallel, rows ordered by `r`
/// then `M` as given.
pub fn lambda1_sweep(domain: &Domain1D, rs: &[f64], refinements: &[usize]) -> Result<Vec<SweepRow>> {
    lambda1_sweep_with(domain, rs, refinements, &OperatorOptions::default())
}

pub fn lambda1_sweep_with(
    domain: &Domain1D,
    rs: &[f64],
    refinements: &[usize],
    options: &OperatorOptions,
) -> Result<Vec<SweepRow>> {
    let jobs: Vec<(f64, usize)> = rs.iter().flat_map(|&r| refinements.iter().map(move |&m| (r, m))).collect();
    jobs.par_iter()
        .map(|&(r, m)| {
            let d = domain.refined(m)?;
            let op = assemble_with(d, r, *options)?;
            let pair = first_eigenpair(&op)?;
            let b = eigen_bounds(&d, r)?;
            Ok(SweepRow { r, m, lambda1: pair.lambda1, lower: b.lower, upper: b.upper, residual: pair.residual })
        })
        .collect()
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(SWEEP_HEADER);
    for row in rows {
        t.push(vec![
            float(row.r),
            row.m.to_string(),
            float(row.lambda1),
            float(row.lower),
            float(row.upper),
            float(row.residual),
        ]);
    }
    t
}
