//! The weak fractional Laplacian with solid Dirichlet exterior condition.
//!
//! A [`FracOperator`] holds the Galerkin stiffness `A` of the Gagliardo form
//! `(C(r)/2) ∬ |x-y|^{-1-2r} (v(x)-v(y))(φ(x)-φ(y))` on the hat basis, the
//! consistent mass `M_c`, the lumped mass weight `h`, and a cached Cholesky
//! factor of `A`. It is immutable after assembly.

mod assembly;
mod kernel;

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::experiments::csv::float;
use crate::grid::{Domain1D, Field};

pub use kernel::{kernel_constant, KernelConstant};

/// Tolerances used during assembly and linear solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorOptions {
    /// Relative quadrature tolerance; also the slack for sign checks.
    pub quad_tol: f64,
    /// Relative residual target for elliptic solves.
    pub lin_tol: f64,
    /// Relative residual target for eigensolves.
    pub eig_tol: f64,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self { quad_tol: 1e-8, lin_tol: 1e-10, eig_tol: 1e-10 }
    }
}

#[derive(Clone)]
pub struct FracOperator {
    domain: Domain1D,
    r: f64,
    kernel: KernelConstant,
    stiffness: DMatrix<f64>,
    mass: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    options: OperatorOptions,
}

impl std::fmt::Debug for FracOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FracOperator")
            .field("domain", &self.domain)
            .field("r", &self.r)
            .field("kernel", &self.kernel.value)
            .finish_non_exhaustive()
    }
}

/// Assembles the operator with default tolerances.
pub fn assemble(domain: Domain1D, r: f64) -> Result<FracOperator> {
    assemble_with(domain, r, OperatorOptions::default())
}

pub fn assemble_with(domain: Domain1D, r: f64, options: OperatorOptions) -> Result<FracOperator> {
    let kernel = kernel_constant(r, 1)?;
    let m = domain.m();
    let h = domain.h();
    let (unit, discrepancy) = assembly::unit_form(m, r);
    if !(discrepancy <= options.quad_tol) {
        return Err(Error::AssemblyFailure { tol: options.quad_tol, discrepancy });
    }
    let stiffness = unit * (0.5 * kernel.value * h.powf(1.0 - 2.0 * r));
    let mass = consistent_mass(m, h);
    let factor = Cholesky::new(stiffness.clone()).ok_or(Error::NotSpd)?;
    Ok(FracOperator { domain, r, kernel, stiffness, mass, factor, options })
}

/// Piecewise-linear consistent mass `h/6 · tridiag(1, 4, 1)`.
pub fn consistent_mass(m: usize, h: f64) -> DMatrix<f64> {
    let mut mass = DMatrix::zeros(m, m);
    for i in 0..m {
        mass[(i, i)] = 4.0 * h / 6.0;
        if i + 1 < m {
            mass[(i, i + 1)] = h / 6.0;
            mass[(i + 1, i)] = h / 6.0;
        }
    }
    mass
}

impl FracOperator {
    pub fn domain(&self) -> &Domain1D {
        &self.domain
    }

    /// Fractional order `r`.
    pub fn order(&self) -> f64 {
        self.r
    }

    pub fn kernel(&self) -> KernelConstant {
        self.kernel
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    /// Consistent mass matrix `M_c`.
    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// Diagonal entry of the lumped mass `M_L = h I`.
    pub fn lumped_weight(&self) -> f64 {
        self.domain.h()
    }

    pub fn options(&self) -> OperatorOptions {
        self.options
    }

    pub fn factor(&self) -> &Cholesky<f64, Dyn> {
        &self.factor
    }

    /// `vᵀ A v = ‖v‖²_{X_{r,0}}` of the interpolant.
    pub fn energy_norm_sq(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.stiffness * v))
    }

    /// `vᵀ M_c v`, the exact `L²` norm squared of the interpolant.
    pub fn mass_norm_sq(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.mass * v))
    }

    /// Solves `A x = b` with the cached factor, refined by conjugate
    /// gradients if the residual misses `lin_tol`.
    pub fn solve_vec(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let bnorm = b.norm();
        if bnorm == 0.0 {
            return Ok(DVector::zeros(b.len()));
        }
        let mut x = self.factor.solve(b);
        let mut res = b - &self.stiffness * &x;
        if res.norm() <= self.options.lin_tol * bnorm {
            return Ok(x);
        }
        // conjugate-gradient polish, warm-started from the direct solve
        let mut p = res.clone();
        let mut rr = res.dot(&res);
        for _ in 0..(10 * b.len()).max(100) {
            let ap = &self.stiffness * &p;
            let alpha = rr / p.dot(&ap);
            x.axpy(alpha, &p, 1.0);
            res.axpy(-alpha, &ap, 1.0);
            let rr_new = res.dot(&res);
            if rr_new.sqrt() <= self.options.lin_tol * bnorm {
                return Ok(x);
            }
            p = &res + &p * (rr_new / rr);
            rr = rr_new;
        }
        Err(Error::SolverDivergence { residual: rr.sqrt() / bnorm })
    }
}

/// `A v`, the discrete pairing `⟨𝔄_r v, φ_i⟩`.
pub fn apply(op: &FracOperator, v: &Field) -> Result<DVector<f64>> {
    v.check_domain(op.domain())?;
    Ok(op.stiffness() * v.values())
}

/// Solves the discrete elliptic problem `A u = M_c f`.
pub fn solve(op: &FracOperator, f: &Field) -> Result<Field> {
    f.check_domain(op.domain())?;
    let rhs = op.mass() * f.values();
    let u = op.solve_vec(&rhs)?;
    Field::from_values(*op.domain(), u)
}

/// `‖v‖²_{X'_{r,0}} = (M_c v)ᵀ A⁻¹ (M_c v)`.
pub fn dual_norm_sq(op: &FracOperator, v: &Field) -> Result<f64> {
    v.check_domain(op.domain())?;
    dual_norm_sq_vec(op, v.values())
}

pub(crate) fn dual_norm_sq_vec(op: &FracOperator, v: &DVector<f64>) -> Result<f64> {
    let mv = op.mass() * v;
    let x = op.solve_vec(&mv)?;
    Ok(mv.dot(&x).max(0.0))
}

/// Analytic lower bound on the Rayleigh quotient of `A` with respect to the
/// `L²` norm, from `[v]² ≥ |B_{R+1} \ Ω| / (2R+2)^{N+2r} ‖v‖²` where `B_R`
/// is the smallest ball around the midpoint containing `Ω`.
pub fn poincare_lower_bound(domain: &Domain1D, r: f64) -> Result<f64> {
    let c = kernel_constant(r, 1)?;
    let radius = 0.5 * domain.length();
    let annulus = 2.0 * (radius + 1.0) - domain.length();
    Ok(0.5 * c.value * annulus / (2.0 * radius + 2.0).powf(1.0 + 2.0 * r))
}

/// Writes `i,j,A_ij` triplets (0-based indices).
pub fn write_operator_csv(op: &FracOperator, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "i,j,a_ij")?;
    let a = op.stiffness();
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            writeln!(out, "{i},{j},{}", float(a[(i, j)]))?;
        }
    }
    Ok(())
}
