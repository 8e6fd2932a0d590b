//! Structural invariants of the discrete operator, the potential and the
//! energies, checked on random fields.

use fracfield::dynamics::{energy, energy_modified};
use fracfield::fracop::{apply, assemble, dual_norm_sq, solve};
use fracfield::grid::{lp_norm, make_domain, Field};
use fracfield::spectral::first_eigenpair;
use fracfield::PotentialParams;
use proptest::prelude::*;

fn field(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn beta_is_monotone_for_the_operator(v in field(24), r in 0.05f64..0.95, p in 1.2f64..5.0) {
        prop_assume!((p - 2.0).abs() > 1e-3);
        let d = make_domain(0.0, 1.0, 24).unwrap();
        let op = assemble(d, r).unwrap();
        let params = PotentialParams::new(p).unwrap();
        let f = Field::from_vec(d, v.clone()).unwrap();
        let av = apply(&op, &f).unwrap();
        let pairing: f64 = v.iter().zip(av.iter()).map(|(x, a)| params.beta(*x) * a).sum();
        prop_assert!(pairing >= -1e-8, "pairing {pairing}");
    }

    #[test]
    fn poincare_with_first_eigenvalue(v in field(20), r in 0.1f64..0.9) {
        let d = make_domain(-1.0, 2.0, 20).unwrap();
        let op = assemble(d, r).unwrap();
        let l1 = first_eigenpair(&op).unwrap().lambda1;
        let f = Field::from_vec(d, v).unwrap();
        let e = op.energy_norm_sq(f.values());
        prop_assert!(e >= l1 * op.mass_norm_sq(f.values()) * (1.0 - 1e-9) - 1e-12);
    }

    #[test]
    fn solve_and_dual_norm_agree(v in field(16), r in 0.1f64..0.9) {
        let d = make_domain(0.0, 1.0, 16).unwrap();
        let op = assemble(d, r).unwrap();
        let f = Field::from_vec(d, v).unwrap();
        // u solves A u = M_c f, so A u − M_c f vanishes and fᵀM_c u is the dual norm
        let u = solve(&op, &f).unwrap();
        let residual = apply(&op, &u).unwrap() - op.mass() * f.values();
        prop_assert!(residual.amax() <= 1e-9 * (op.mass() * f.values()).amax().max(1e-300));
        let dn = dual_norm_sq(&op, &f).unwrap();
        let pairing = (op.mass() * f.values()).dot(u.values());
        prop_assert!((dn - pairing).abs() <= 1e-10 * pairing.abs().max(1e-300));
        prop_assert!(dn >= 0.0);
    }

    #[test]
    fn lp_norm_is_homogeneous(v in field(12), c in -5.0f64..5.0, p in 1.0f64..6.0) {
        let d = make_domain(0.0, 3.0, 12).unwrap();
        let f = Field::from_vec(d, v).unwrap();
        let lhs = lp_norm(&f.scaled(c), p);
        let rhs = c.abs() * lp_norm(&f, p);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn modified_energy_is_coercive(v in field(16), sigma in 0.1f64..0.9, p in 1.3f64..5.0) {
        prop_assume!((p - 2.0).abs() > 1e-3);
        let d = make_domain(0.0, 4.0, 16).unwrap();
        let op = assemble(d, sigma).unwrap();
        let l1 = first_eigenpair(&op).unwrap().lambda1;
        let params = PotentialParams::new(p).unwrap().with_delta(0.0);
        let f = Field::from_vec(d, v).unwrap();
        let e = energy_modified(&op, &params, l1, &f).unwrap();
        let lp = lp_norm(&f, p).powf(p) / p;
        prop_assert!(e >= lp - 1e-9 * (1.0 + lp), "E = {e}, ‖u‖_p^p/p = {lp}");
    }

    #[test]
    fn energy_is_even(v in field(10), sigma in 0.1f64..0.9) {
        let d = make_domain(0.0, 1.0, 10).unwrap();
        let op = assemble(d, sigma).unwrap();
        let params = PotentialParams::new(3.0).unwrap();
        let f = Field::from_vec(d, v).unwrap();
        let a = energy(&op, &params, &f).unwrap();
        let b = energy(&op, &params, &f.scaled(-1.0)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn stiffness_sign_structure() {
    for r in [0.25, 0.5, 0.75] {
        let d = make_domain(0.0, 1.0, 48).unwrap();
        let a = assemble(d, r).unwrap().stiffness().clone();
        for i in 0..48 {
            let mut row = 0.0;
            for j in 0..48 {
                row += a[(i, j)];
                if i != j {
                    assert!(a[(i, j)] <= 1e-8, "off-diagonal ({i},{j}) = {}", a[(i, j)]);
                }
                assert_eq!(a[(i, j)], a[(j, i)]);
            }
            assert!(row >= -1e-8, "row {i} sums to {row}");
        }
    }
}

#[test]
fn stiffness_scales_with_interval_length() {
    // on (0, L) the matrix is L^{1−2r} times the unit-interval one
    let r = 0.3;
    let a1 = assemble(make_domain(0.0, 1.0, 16).unwrap(), r).unwrap();
    let a3 = assemble(make_domain(5.0, 8.0, 16).unwrap(), r).unwrap();
    let scaled = a1.stiffness() * 3f64.powf(1.0 - 2.0 * r);
    assert!((a3.stiffness() - &scaled).amax() <= 1e-12 * scaled.amax());
}
