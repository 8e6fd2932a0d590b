//! Galerkin assembly of the Gagliardo form for piecewise-linear hat
//! functions on a uniform grid.
//!
//! With `Ω = (a, b)` and zero extension, the form over `ℝ × ℝ` splits into
//! the `Ω × Ω` part and twice the `Ω × Ωᶜ` part. The latter reduces to
//! `∫_Ω φ_i φ_j κ(x) dx` with `κ(x) = ((x-a)^{-2r} + (b-x)^{-2r}) / (2r)`.
//!
//! Everything is computed on the unit grid (`h = 1`) and scaled by
//! `h^{1-2r}` afterwards. The `Ω × Ω` part is a sum over element pairs
//! whose local blocks depend only on the element distance `d`:
//!
//! * `d = 0`: hat differences are `±(x - y)`, integrated exactly;
//! * `d = 1`: the shared vertex is handled by a Duffy split, which leaves a
//!   smooth one-dimensional integral;
//! * `d ≥ 2`: tensor Gauss-Legendre.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::quadrature::GaussLegendre;

const PAIR_LO: usize = 10;
const PAIR_HI: usize = 16;
const TAIL_LO: usize = 16;
const TAIL_HI: usize = 24;
const DUFFY_POINTS: usize = 24;

/// Local contribution of one element pair: global node offsets relative to
/// the left element's first node, and a dense symmetric block.
#[derive(Debug, Clone)]
struct PairBlock {
    offsets: Vec<usize>,
    block: Vec<f64>,
}

impl PairBlock {
    fn size(&self) -> usize {
        self.offsets.len()
    }

    fn get(&self, a: usize, b: usize) -> f64 {
        self.block[a * self.size() + b]
    }
}

/// Unit-grid Gagliardo form `∬_{ℝ²} |x-y|^{-1-2r} (φ_i(x)-φ_i(y))(φ_j(x)-φ_j(y))`
/// for the `m` interior hats of a grid with `m + 1` unit elements.
///
/// Returns the matrix and the largest discrepancy observed between the low-
/// and high-order quadrature rules, relative to the largest entry.
pub(crate) fn unit_form(m: usize, r: f64) -> (DMatrix<f64>, f64) {
    let elements = m + 1;
    let lo = GaussLegendre::new(PAIR_LO);
    let hi = GaussLegendre::new(PAIR_HI);
    let duffy = GaussLegendre::new(DUFFY_POINTS);

    let blocks: Vec<(PairBlock, f64)> = (0..elements)
        .into_par_iter()
        .map(|d| match d {
            0 => (same_element(r), 0.0),
            1 => (touching(r, &duffy), 0.0),
            _ => {
                let fine = separated(d, r, &hi);
                let coarse = separated(d, r, &lo);
                let diff = fine
                    .block
                    .iter()
                    .zip(&coarse.block)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                (fine, diff)
            }
        })
        .collect();

    let mut form = DMatrix::<f64>::zeros(m, m);
    let mut discrepancy: f64 = 0.0;
    for (d, (pb, diff)) in blocks.iter().enumerate() {
        discrepancy = discrepancy.max(*diff);
        // pairs (k, k+d) and (k+d, k) contribute equally
        let weight = if d == 0 { 1.0 } else { 2.0 };
        for k in 0..(elements - d) {
            for a in 0..pb.size() {
                let Some(ga) = interior(k + pb.offsets[a], m) else { continue };
                for b in a..pb.size() {
                    let Some(gb) = interior(k + pb.offsets[b], m) else { continue };
                    let v = weight * pb.get(a, b);
                    // upper triangle only, mirrored below
                    let (i, j) = if ga <= gb { (ga, gb) } else { (gb, ga) };
                    form[(i, j)] += v;
                }
            }
        }
    }

    let (tail, tail_diff) = unit_tail(m, r);
    for i in 0..m {
        form[(i, i)] += tail.0[i] / r;
        if i + 1 < m {
            form[(i, i + 1)] += tail.1[i] / r;
        }
    }
    discrepancy = discrepancy.max(tail_diff / r);

    for i in 0..m {
        for j in 0..i {
            form[(i, j)] = form[(j, i)];
        }
    }
    let scale = form.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    (form, discrepancy / scale)
}

/// Maps a grid node (0..=m+1) to its interior unknown index.
fn interior(node: usize, m: usize) -> Option<usize> {
    (node >= 1 && node <= m).then(|| node - 1)
}

/// `d = 0`: `∬_{[0,1]²} |x-y|^{1-2r}` times `[[1,-1],[-1,1]]`.
fn same_element(r: f64) -> PairBlock {
    let c = 2.0 / ((2.0 - 2.0 * r) * (3.0 - 2.0 * r));
    PairBlock { offsets: vec![0, 1], block: vec![c, -c, -c, c] }
}

/// `d = 1`: elements `[0,1]` and `[1,2]`, nodes 0, 1, 2.
///
/// With `s = 1 - x`, `t = y - 1` every hat difference is a linear form in
/// `(s, t)`, so each product is a quadratic form `α s² + β st + γ t²` and the
/// integral against `(s + t)^{-1-2r}` collapses to moments of
/// `(1 + u)^{-1-2r}` on `[0, 1]`.
fn touching(r: f64, gl: &GaussLegendre) -> PairBlock {
    let e = -1.0 - 2.0 * r;
    let mu: Vec<f64> = (0..3).map(|j| gl.integrate(0.0, 1.0, |u| u.powi(j) * (1.0 + u).powf(e))).collect();
    let j = |alpha: f64, beta: f64, gamma: f64| ((alpha + gamma) * (mu[0] + mu[2]) + 2.0 * beta * mu[1]) / (3.0 - 2.0 * r);
    // differences: D0 = s, D1 = t - s, D2 = -t
    let d00 = j(1.0, 0.0, 0.0);
    let d01 = j(-1.0, 1.0, 0.0);
    let d02 = j(0.0, -1.0, 0.0);
    let d11 = j(1.0, -2.0, 1.0);
    let d12 = j(0.0, 1.0, -1.0);
    let d22 = j(0.0, 0.0, 1.0);
    PairBlock { offsets: vec![0, 1, 2], block: vec![d00, d01, d02, d01, d11, d12, d02, d12, d22] }
}

/// `d ≥ 2`: elements `[0,1]` and `[d,d+1]`, nodes 0, 1, d, d+1.
fn separated(d: usize, r: f64, gl: &GaussLegendre) -> PairBlock {
    let e = -1.0 - 2.0 * r;
    let df = d as f64;
    let mut block = vec![0.0; 16];
    for (x, wx) in gl.mapped(0.0, 1.0) {
        for (t, wt) in gl.mapped(0.0, 1.0) {
            let y = df + t;
            let k = wx * wt * (y - x).powf(e);
            let diffs = [1.0 - x, x, -(1.0 - t), -t];
            for a in 0..4 {
                for b in a..4 {
                    block[a * 4 + b] += k * diffs[a] * diffs[b];
                }
            }
        }
    }
    for a in 0..4 {
        for b in 0..a {
            block[a * 4 + b] = block[b * 4 + a];
        }
    }
    PairBlock { offsets: vec![0, 1, d, d + 1], block }
}

type TailBands = (Vec<f64>, Vec<f64>);

/// `∫ φ_i φ_j (ξ^{-2r} + (L-ξ)^{-2r}) dξ` on the unit grid, `L = m + 1`,
/// returned as (diagonal, super-diagonal) plus a quadrature discrepancy.
fn unit_tail(m: usize, r: f64) -> (TailBands, f64) {
    let fine = tail_with(m, r, &GaussLegendre::new(TAIL_HI));
    let coarse = tail_with(m, r, &GaussLegendre::new(TAIL_LO));
    let diff = fine
        .0
        .iter()
        .zip(&coarse.0)
        .chain(fine.1.iter().zip(&coarse.1))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (fine, diff)
}

fn tail_with(m: usize, r: f64, gl: &GaussLegendre) -> TailBands {
    let len = (m + 1) as f64;
    let e = -2.0 * r;
    // ∫_0^1 ξ² ξ^{-2r} dξ for the singular end of a boundary element
    let exact_end = 1.0 / (3.0 - 2.0 * r);
    let mut diag = vec![0.0; m];
    let mut sup = vec![0.0; m.saturating_sub(1)];
    for el in 0..=m {
        let lo = el as f64;
        let hi = lo + 1.0;
        // local hats: left node `el`, right node `el + 1`
        let left = interior(el, m);
        let right = interior(el + 1, m);
        let (mut ll, mut lr, mut rr) = (0.0, 0.0, 0.0);
        for (x, w) in gl.mapped(lo, hi) {
            let mut k = 0.0;
            if el != 0 {
                k += x.powf(e);
            }
            if el != m {
                k += (len - x).powf(e);
            }
            let pl = hi - x;
            let pr = x - lo;
            ll += w * k * pl * pl;
            lr += w * k * pl * pr;
            rr += w * k * pr * pr;
        }
        if el == 0 {
            rr += exact_end;
        }
        if el == m {
            ll += exact_end;
        }
        if let Some(i) = left {
            diag[i] += ll;
        }
        if let Some(j) = right {
            diag[j] += rr;
        }
        if let (Some(i), Some(_)) = (left, right) {
            sup[i] += lr;
        }
    }
    (diag, sup)
}
