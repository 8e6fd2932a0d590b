//! One implicit step for the three gradient flows, all of the form
//!
//! ```text
//! F(u) = (1/2τ) δᵀQδ + ½ uᵀKu + Σ h β̂_δ(u_i) − λ uᵀ M_c u_prev,   δ = u − u_prev
//! ```
//!
//! with `Q = M_c A_s⁻¹ M_c` (Cahn-Hilliard, porous medium) or `Q = M_c`
//! (Allen-Cahn), and `K = A_σ` or `0` (porous medium). `F` is strictly
//! convex, so Newton with Armijo backtracking converges from `u_prev`.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{SolverSettings, StepStats};
use crate::error::{Error, Result};
use crate::fracop::FracOperator;
use crate::potential::PotentialParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Flow {
    CahnHilliard,
    AllenCahn,
    PorousMedium,
}

/// Matrices of the per-step functional, built once per evolution.
pub(crate) struct Scheme<'a> {
    pub flow: Flow,
    pub op_s: Option<&'a FracOperator>,
    pub op_sigma: Option<&'a FracOperator>,
    pub params: PotentialParams,
    /// Weight of the explicit concave term.
    pub lambda: f64,
    pub tau: f64,
    mass: DMatrix<f64>,
    h: f64,
    q: DMatrix<f64>,
    base_hessian: DMatrix<f64>,
}

impl<'a> Scheme<'a> {
    pub fn new(
        flow: Flow,
        op_s: Option<&'a FracOperator>,
        op_sigma: Option<&'a FracOperator>,
        params: PotentialParams,
        lambda: f64,
        tau: f64,
    ) -> Result<Self> {
        let any = op_s.or(op_sigma).expect("a scheme needs at least one operator");
        if let (Some(a), Some(b)) = (op_s, op_sigma) {
            if a.domain() != b.domain() {
                return Err(Error::DomainMismatch);
            }
        }
        if !(tau > 0.0) {
            return Err(Error::OutOfRange(format!("tau = {tau} must be positive")));
        }
        let mass = any.mass().clone();
        let h = any.domain().h();
        let q = match flow {
            Flow::AllenCahn => mass.clone(),
            Flow::CahnHilliard | Flow::PorousMedium => {
                let op = op_s.expect("dual-norm flows need op_s");
                let x = op.factor().solve(&mass);
                let d = &mass * x;
                // symmetrise away roundoff so Cholesky sees an exact SPD matrix
                (&d + d.transpose()) * 0.5
            }
        };
        let mut base_hessian = &q / tau;
        if flow != Flow::PorousMedium {
            base_hessian += op_sigma.expect("stiffness flows need op_sigma").stiffness();
        }
        let lambda = if flow == Flow::PorousMedium { 0.0 } else { lambda };
        Ok(Self { flow, op_s, op_sigma, params, lambda, tau, mass, h, q, base_hessian })
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    /// `δᵀQδ/τ`, the dissipation of one step.
    pub fn dissipation(&self, delta: &DVector<f64>) -> f64 {
        delta.dot(&(&self.q * delta)) / self.tau
    }

    fn objective(&self, u: &DVector<f64>, u_prev: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let delta = u - u_prev;
        let mut f = 0.5 * delta.dot(&(&self.q * &delta)) / self.tau - u.dot(b);
        if let Some(op) = self.stiffness_op() {
            f += 0.5 * op.energy_norm_sq(u);
        }
        f + self.h * u.iter().map(|&v| self.params.solver_beta_hat(v)).sum::<f64>()
    }

    fn gradient(&self, u: &DVector<f64>, u_prev: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let delta = u - u_prev;
        let mut g = &self.q * &delta / self.tau - b;
        if let Some(op) = self.stiffness_op() {
            g += op.stiffness() * u;
        }
        for (gi, &ui) in g.iter_mut().zip(u.iter()) {
            *gi += self.h * self.params.solver_beta(ui);
        }
        g
    }

    fn stiffness_op(&self) -> Option<&FracOperator> {
        match self.flow {
            Flow::PorousMedium => None,
            _ => self.op_sigma,
        }
    }

    /// `‖M_L⁻¹ g‖_{M_L} = (Σ g_i² / h)^{1/2}`.
    fn scaled_norm(&self, g: &DVector<f64>) -> f64 {
        (g.norm_squared() / self.h).sqrt()
    }

    /// Minimises `F` from `u_prev`; returns `u_n`, `w_n` and statistics.
    pub fn step(
        &self,
        u_prev: &DVector<f64>,
        settings: &SolverSettings,
        step_index: usize,
    ) -> Result<(DVector<f64>, DVector<f64>, StepStats)> {
        let b = &self.mass * u_prev * self.lambda;
        let mut u = u_prev.clone();
        let mut f = self.objective(&u, u_prev, &b);
        let mut g = self.gradient(&u, u_prev, &b);
        let mut res = self.scaled_norm(&g);
        let mut iterations = 0;
        let mut backtracks = 0;
        while res > settings.newton_tol {
            if iterations == settings.newton_max || !res.is_finite() {
                return Err(Error::NewtonDivergence { step: step_index, residual: res });
            }
            iterations += 1;
            let mut hess = self.base_hessian.clone();
            for i in 0..u.len() {
                hess[(i, i)] += self.h * self.params.solver_beta_prime(u[i]);
            }
            let chol = Cholesky::new(hess).ok_or(Error::NewtonDivergence { step: step_index, residual: res })?;
            let dir = -chol.solve(&g);
            let slope = g.dot(&dir);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..60 {
                let trial = &u + &dir * alpha;
                let ft = self.objective(&trial, u_prev, &b);
                // near the minimiser F is flat to roundoff; a full step that
                // reduces the gradient is then accepted instead
                let flat = alpha == 1.0
                    && -slope <= 1e-13 * (1.0 + f.abs())
                    && self.scaled_norm(&self.gradient(&trial, u_prev, &b)) < res;
                if ft <= f + settings.armijo * alpha * slope || flat {
                    u = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
                alpha *= settings.shrink;
                backtracks += 1;
            }
            if !accepted {
                return Err(Error::NewtonDivergence { step: step_index, residual: res });
            }
            g = self.gradient(&u, u_prev, &b);
            res = self.scaled_norm(&g);
        }
        let delta = &u - u_prev;
        let w = match self.flow {
            Flow::AllenCahn => -&delta / self.tau,
            _ => {
                let op = self.op_s.expect("dual-norm flows need op_s");
                let rhs = &self.mass * &delta / self.tau;
                -op.solve_vec(&rhs)?
            }
        };
        let consistency = self.scaled_norm(&self.chemical_residual(&u, &w, u_prev));
        Ok((u, w, StepStats { iterations, residual: res, backtracks, consistency }))
    }

    /// Residual of the chemical-potential equation
    /// `M_c w = A_σ u + M_L β(u) − λ M_c u_prev` (Allen-Cahn: same with
    /// `w = −δ/τ`; porous medium: `M_c w = M_L β(u)`).
    fn chemical_residual(&self, u: &DVector<f64>, w: &DVector<f64>, u_prev: &DVector<f64>) -> DVector<f64> {
        let mut r = &self.mass * w + &self.mass * u_prev * self.lambda;
        if let Some(op) = self.stiffness_op() {
            r -= op.stiffness() * u;
        }
        for (ri, &ui) in r.iter_mut().zip(u.iter()) {
            *ri -= self.h * self.params.solver_beta(ui);
        }
        r
    }
}
