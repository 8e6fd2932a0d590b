//! Uniform interior-node grids on `(a, b)` and nodal fields that vanish
//! identically outside the interval.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Uniform discretisation of `(a, b)` with `m` interior nodes.
///
/// Boundary nodes `x_0 = a` and `x_{m+1} = b` are implicit and always carry
/// the value zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain1D {
    a: f64,
    b: f64,
    m: usize,
}

impl Domain1D {
    pub fn new(a: f64, b: f64, m: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidDomain(format!("need a < b, got ({a}, {b})")));
        }
        if m < 2 {
            return Err(Error::InvalidDomain(format!("need at least 2 interior nodes, got {m}")));
        }
        Ok(Self { a, b, m })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Number of interior nodes.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Mesh size `(b - a) / (m + 1)`.
    pub fn h(&self) -> f64 {
        (self.b - self.a) / (self.m as f64 + 1.0)
    }

    /// Lebesgue measure of the domain.
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.a + self.b)
    }

    /// Interior node `i` for `i in 1..=m`.
    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (1..=self.m).map(|i| self.node(i)).collect()
    }

    /// Same interval, different resolution.
    pub fn refined(&self, m: usize) -> Result<Self> {
        Self::new(self.a, self.b, m)
    }
}

/// Shorthand for [`Domain1D::new`].
pub fn make_domain(a: f64, b: f64, m: usize) -> Result<Domain1D> {
    Domain1D::new(a, b, m)
}

/// Nodal values at the interior nodes of a [`Domain1D`].
///
/// The represented function is the piecewise-linear interpolant through the
/// interior values with zeros at both endpoints, extended by zero to the
/// whole real line.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    domain: Domain1D,
    values: DVector<f64>,
}

impl Field {
    pub fn zeros(domain: Domain1D) -> Self {
        Self { domain, values: DVector::zeros(domain.m()) }
    }

    pub fn from_values(domain: Domain1D, values: DVector<f64>) -> Result<Self> {
        if values.len() != domain.m() {
            return Err(Error::DomainMismatch);
        }
        Ok(Self { domain, values })
    }

    pub fn from_vec(domain: Domain1D, values: Vec<f64>) -> Result<Self> {
        Self::from_values(domain, DVector::from_vec(values))
    }

    pub fn domain(&self) -> &Domain1D {
        &self.domain
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }

    /// Evaluates the zero-extended interpolant at an arbitrary point.
    pub fn eval(&self, x: f64) -> f64 {
        let d = &self.domain;
        if !(x > d.a() && x < d.b()) {
            return 0.0;
        }
        let t = (x - d.a()) / d.h();
        let k = (t.floor() as usize).min(d.m());
        let frac = t - k as f64;
        let left = if k == 0 { 0.0 } else { self.values[k - 1] };
        let right = if k == d.m() { 0.0 } else { self.values[k] };
        left * (1.0 - frac) + right * frac
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { domain: self.domain, values: &self.values * c }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_domain(&self, other: &Domain1D) -> Result<()> {
        if &self.domain == other {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }
}

/// Samples `f` at the interior nodes.
pub fn sample(domain: Domain1D, f: impl Fn(f64) -> f64) -> Result<Field> {
    let mut values = DVector::zeros(domain.m());
    for i in 0..domain.m() {
        let x = domain.node(i + 1);
        let y = f(x);
        if !y.is_finite() {
            return Err(Error::NonFiniteSample { x });
        }
        values[i] = y;
    }
    Ok(Field { domain, values })
}

/// Lumped-quadrature `L^p` norm `(Σ h |v_i|^p)^{1/p}`.
pub fn lp_norm(field: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm requires p >= 1");
    lp_norm_values(field.values().as_slice(), field.domain().h(), p)
}

pub(crate) fn lp_norm_values(values: &[f64], h: f64, p: f64) -> f64 {
    let sum: f64 = values.iter().map(|v| v.abs().powf(p)).sum();
    (h * sum).powf(1.0 / p)
}

/// `Σ h |v_i|^p`, the lumped `‖v‖_p^p`.
pub(crate) fn lp_pow_values(values: &[f64], h: f64, p: f64) -> f64 {
    h * values.iter().map(|v| v.abs().powf(p)).sum::<f64>()
}

/// Smooth bump `amp · exp(1 - 1/(1 - z²))` supported on the middle 60% of
/// the interval. Used as the default initial datum.
pub fn bump(domain: Domain1D, amplitude: f64) -> Field {
    let c = domain.midpoint();
    let w = 0.3 * domain.length();
    sample(domain, |x| {
        let z = (x - c) / w;
        if z.abs() < 1.0 {
            amplitude * (1.0 - 1.0 / (1.0 - z * z)).exp()
        } else {
            0.0
        }
    })
    .expect("bump is finite")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mesh_size_and_nodes() {
        let d = make_domain(0.0, 1.0, 3).unwrap();
        assert_eq!(d.h(), 0.25);
        assert_eq!(d.nodes(), vec![0.25, 0.5, 0.75]);
        let d = make_domain(0.0, 10.0, 99).unwrap();
        assert!(close(d.h(), 0.1, 1e-15));
    }

    #[test]
    fn rejects_bad_domains() {
        assert!(matches!(make_domain(1.0, 0.0, 8), Err(Error::InvalidDomain(_))));
        assert!(matches!(make_domain(0.0, 1.0, 1), Err(Error::InvalidDomain(_))));
        assert!(matches!(make_domain(0.0, 0.0, 4), Err(Error::InvalidDomain(_))));
    }

    #[test]
    fn sampling() {
        let d = make_domain(0.0, 1.0, 3).unwrap();
        let z = sample(d, |_| 0.0).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
        let s = sample(d, |x| (std::f64::consts::PI * x).sin()).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.values()[0], r, 1e-15));
        assert!(close(s.values()[1], 1.0, 1e-15));
        assert!(close(s.values()[2], r, 1e-15));
        // nodes are interior, so 1/x stays finite
        let inv = sample(d, |x| 1.0 / x).unwrap();
        assert!(inv.is_finite());
        assert!(matches!(sample(d, |x| if x > 0.6 { f64::NAN } else { 1.0 }), Err(Error::NonFiniteSample { .. })));
    }

    #[test]
    fn lumped_norms() {
        let d = make_domain(0.0, 1.0, 9).unwrap();
        assert_eq!(lp_norm(&Field::zeros(d), 2.0), 0.0);
        let one = sample(d, |_| 1.0).unwrap();
        assert!(close(lp_norm(&one, 2.0), 0.9f64.sqrt(), 1e-14));

        let d = make_domain(0.0, 1.0, 255).unwrap();
        let s = sample(d, |x| (std::f64::consts::PI * x).sin()).unwrap();
        assert!(close(lp_norm(&s, 2.0), 0.5f64.sqrt(), 1e-3));
    }

    #[test]
    fn zero_extension() {
        let d = make_domain(-1.0, 2.0, 5).unwrap();
        let f = sample(d, |x| 1.0 + x * x).unwrap();
        for x in [-5.0, -1.0, 2.0, 2.5, 100.0] {
            assert_eq!(f.eval(x), 0.0);
        }
        assert!(close(f.eval(d.node(3)), 1.0 + d.node(3).powi(2), 1e-14));
        let mid = 0.5 * (d.node(2) + d.node(3));
        assert!(close(f.eval(mid), 0.5 * (f.values()[1] + f.values()[2]), 1e-14));
    }
}
