//! Helpers shared by integration tests.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// `(1/2π) ∫ |ξ|^{2r} |v̂(ξ)|² dξ` for the zero-extended piecewise-linear
/// interpolant of nodal values `v` on a grid of spacing `h`.
///
/// `v̂(ξ) = h sinc²(ξh/2) V(ξ)` with `V(ξ) = Σ_j v_j e^{-iξ x_j}`, which is
/// `2π/h`-periodic. `V` is sampled by a zero-padded FFT and the integral is
/// a trapezoid sum over many periods.
pub fn fourier_seminorm(v: &[f64], h: f64, r: f64) -> f64 {
    const PAD: usize = 64;
    const PERIODS: usize = 400;
    let n = PAD * (v.len() + 1);
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); n];
    for (j, &x) in v.iter().enumerate() {
        buf[j] = Complex::new(x, 0.0);
    }
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|c| c.norm_sqr()).collect();
    let dxi = 2.0 * PI / (n as f64 * h);
    let mut sum = 0.0;
    for k in 1..PERIODS * n {
        let xi = k as f64 * dxi;
        let half = 0.5 * xi * h;
        let sinc2 = (half.sin() / half).powi(2);
        sum += xi.powf(2.0 * r) * (h * sinc2).powi(2) * power[k % n];
    }
    // both half-lines, trapezoid weight dξ, and the 1/2π of Plancherel
    2.0 * sum * dxi / (2.0 * PI)
}
