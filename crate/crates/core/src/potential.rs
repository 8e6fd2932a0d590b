//! Power-law double-well potential `W(v) = |v|^p/p - (λ/2) v²` and the
//! monotone nonlinearity `β(v) = |v|^{p-1} sign v`.
//!
//! For `p < 2`, `β'` blows up at the origin; solvers use the smoothed
//! `β_δ(v) = (v² + δ²)^{(p-2)/2} v` with primitive
//! `((v² + δ²)^{p/2} - δ^p)/p`, while energies and diagnostics use the
//! exact `β̂`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    /// Exponent of the convex part, `p ∈ (1, ∞) \ {2}`.
    pub p: f64,
    /// Coefficient of the concave part.
    pub lambda: f64,
    /// Smoothing used by solvers when `p < 2`.
    pub delta: f64,
    pub epsilon_yosida: f64,
    /// Drops the `β` terms entirely, leaving a quadratic problem.
    pub linear: bool,
}

pub const DEFAULT_DELTA: f64 = 1e-8;

impl PotentialParams {
    /// `p` with `λ = 1` and default regularisation.
    pub fn new(p: f64) -> Result<Self> {
        Self::with(p, 1.0, DEFAULT_DELTA, 1.0)
    }

    pub fn with(p: f64, lambda: f64, delta: f64, epsilon_yosida: f64) -> Result<Self> {
        if !(p > 1.0) || p == 2.0 || !p.is_finite() {
            return Err(Error::OutOfRange(format!("p = {p} must lie in (1,∞) without 2")));
        }
        if !(lambda >= 0.0) {
            return Err(Error::OutOfRange(format!("lambda = {lambda} must be nonnegative")));
        }
        if !(delta >= 0.0) || (delta == 0.0 && p < 2.0) {
            return Err(Error::OutOfRange(format!("delta = {delta} must be positive when p < 2")));
        }
        if !(epsilon_yosida > 0.0) {
            return Err(Error::OutOfRange(format!("epsilon_yosida = {epsilon_yosida} must be positive")));
        }
        Ok(Self { p, lambda, delta, epsilon_yosida, linear: false })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_yosida(mut self, eps: f64) -> Self {
        self.epsilon_yosida = eps;
        self
    }

    /// Same parameters with the nonlinearity switched off.
    pub fn linearized(mut self) -> Self {
        self.linear = true;
        self
    }

    /// `β(v) = |v|^{p-1} sign v`.
    pub fn beta(&self, v: f64) -> f64 {
        v.abs().powf(self.p - 1.0).copysign(v)
    }

    /// `β̂(v) = |v|^p / p`.
    pub fn beta_hat(&self, v: f64) -> f64 {
        v.abs().powf(self.p) / self.p
    }

    /// `W(v) = β̂(v) - (λ/2) v²`.
    pub fn w(&self, v: f64) -> f64 {
        self.beta_hat(v) - 0.5 * self.lambda * v * v
    }

    fn smoothed(&self) -> bool {
        self.p < 2.0 && self.delta > 0.0
    }

    /// Nonlinearity consumed by the solvers.
    pub fn solver_beta(&self, v: f64) -> f64 {
        if self.linear {
            0.0
        } else if self.smoothed() {
            (v * v + self.delta * self.delta).powf(0.5 * (self.p - 2.0)) * v
        } else {
            self.beta(v)
        }
    }

    /// Derivative of [`Self::solver_beta`].
    pub fn solver_beta_prime(&self, v: f64) -> f64 {
        if self.linear {
            0.0
        } else if self.smoothed() {
            let s = v * v + self.delta * self.delta;
            s.powf(0.5 * (self.p - 4.0)) * ((self.p - 1.0) * v * v + self.delta * self.delta)
        } else {
            (self.p - 1.0) * v.abs().powf(self.p - 2.0)
        }
    }

    /// Primitive of [`Self::solver_beta`] vanishing at zero.
    pub fn solver_beta_hat(&self, v: f64) -> f64 {
        if self.linear {
            0.0
        } else if self.smoothed() {
            let s = v * v + self.delta * self.delta;
            (s.powf(0.5 * self.p) - self.delta.powf(self.p)) / self.p
        } else {
            self.beta_hat(v)
        }
    }

    /// Exact `β̂` unless the nonlinearity is switched off.
    pub fn energy_beta_hat(&self, v: f64) -> f64 {
        if self.linear {
            0.0
        } else {
            self.beta_hat(v)
        }
    }

    /// Yosida approximation `β_ε(x) = (x - j)/ε` with `j + ε β(j) = x`.
    pub fn yosida_beta(&self, x: f64) -> f64 {
        let eps = self.epsilon_yosida;
        let j = self.resolvent(x);
        (x - j) / eps
    }

    /// `j = (1 + εβ)^{-1} x` by bisection, polished with Newton steps that
    /// stay inside the bracket.
    pub fn resolvent(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let eps = self.epsilon_yosida;
        let g = |j: f64| j + eps * self.beta(j) - x;
        // the root lies between 0 and x
        let (mut lo, mut hi) = if x > 0.0 { (0.0, x) } else { (x, 0.0) };
        let tol = 1e-12 * x.abs().max(1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-3 * tol.max(1e-12) {
                break;
            }
        }
        let mut j = 0.5 * (lo + hi);
        for _ in 0..8 {
            let d = 1.0 + eps * (self.p - 1.0) * j.abs().powf(self.p - 2.0);
            let next = j - g(j) / d;
            if !(next > lo && next < hi) {
                break;
            }
            let done = (next - j).abs() < 1e-16 * j.abs().max(1e-300);
            j = next;
            if done {
                break;
            }
        }
        j
    }

    /// `β` clamped at the levels `β(±1/eps)`.
    pub fn truncate_beta(&self, eps: f64, x: f64) -> f64 {
        let cap = 1.0 / eps;
        self.beta(x.clamp(-cap, cap))
    }

    /// `2N/(N + 2s)`, the lower bound on `p` for the modified system.
    pub fn compatibility_bound(n: usize, s: f64) -> f64 {
        2.0 * n as f64 / (n as f64 + 2.0 * s)
    }
}
