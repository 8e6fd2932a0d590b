//! Normalising constant of the integral fractional Laplacian.

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

/// `C(r, N) = (∫ (1 - cos ζ₁) / |ζ|^{N+2r} dζ)^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelConstant {
    pub r: f64,
    pub n: usize,
    pub value: f64,
}

/// Integrations by parts applied to the oscillatory tail. More steps
/// speed up decay but amplify the panel error by `q(q+1)…`.
const TAIL_IBP: usize = 1;
/// Upper limit of the numerically integrated remainder, in half-periods.
const TAIL_PANELS: usize = 8000;

/// Evaluates `C(r, 1)` by quadrature of the defining integral.
///
/// The integral over `ℝ` is `2 ∫_0^∞ (1 - cos ζ) ζ^{-1-2r} dζ`, split at
/// `ζ = 1`. The inner part is summed term by term from the Taylor series of
/// `1 - cos`. The outer part is `1/(2r)` minus the oscillatory integral
/// `Re ∫_1^∞ e^{iζ} ζ^{-1-2r} dζ`, which is integrated by parts a few times
/// and then summed over Gauss panels of length `π`.
pub fn kernel_constant(r: f64, n: usize) -> Result<KernelConstant> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::OutOfRange(format!("kernel order r = {r} must lie in (0,1)")));
    }
    if n != 1 {
        return Err(Error::OutOfRange(format!("kernel constant is implemented for N = 1 only, got N = {n}")));
    }
    let half_integral = near_part(r) + far_part(r);
    Ok(KernelConstant { r, n, value: 1.0 / (2.0 * half_integral) })
}

/// `∫_0^1 (1 - cos ζ) ζ^{-1-2r} dζ = Σ_{k≥1} (-1)^{k+1} / ((2k)! (2k - 2r))`.
fn near_part(r: f64) -> f64 {
    let mut sum = 0.0;
    let mut fact = 1.0;
    for k in 1..30 {
        let kf = k as f64;
        fact *= (2.0 * kf - 1.0) * (2.0 * kf);
        let term = 1.0 / (fact * (2.0 * kf - 2.0 * r));
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < 1e-20 {
            break;
        }
    }
    sum
}

/// `∫_1^∞ (1 - cos ζ) ζ^{-1-2r} dζ`.
fn far_part(r: f64) -> f64 {
    let q = 1.0 + 2.0 * r;
    1.0 / (2.0 * r) - oscillatory_tail(q).re
}

/// `I(q) = ∫_1^∞ e^{iζ} ζ^{-q} dζ` via `I(q) = i e^{i} - i q I(q+1)`.
fn oscillatory_tail(q: f64) -> Complex<f64> {
    let i = Complex::new(0.0, 1.0);
    let boundary = i * Complex::new(1.0f64.cos(), 1.0f64.sin());
    let mut coeff = Complex::new(1.0, 0.0);
    let mut acc = Complex::new(0.0, 0.0);
    let mut qq = q;
    for _ in 0..TAIL_IBP {
        acc += coeff * boundary;
        coeff *= -i * qq;
        qq += 1.0;
    }
    acc + coeff * remainder(qq)
}

/// Direct quadrature of `∫_1^∞ e^{iζ} ζ^{-q} dζ` for a rapidly decaying `q`.
fn remainder(q: f64) -> Complex<f64> {
    let gl = GaussLegendre::new(16);
    let step = std::f64::consts::PI;
    let mut re = 0.0;
    let mut im = 0.0;
    for k in 0..TAIL_PANELS {
        let lo = 1.0 + k as f64 * step;
        for (x, w) in gl.mapped(lo, lo + step) {
            let mag = w * x.powf(-q);
            re += mag * x.cos();
            im += mag * x.sin();
        }
    }
    // two asymptotic terms of the truncated remainder: e^{iz} (i z^{-q} + q z^{-q-1})
    let z = 1.0 + TAIL_PANELS as f64 * step;
    let zq = z.powf(-q);
    let tail = Complex::new(z.cos(), z.sin()) * Complex::new(q * zq / z, zq);
    Complex::new(re, im) + tail
}
