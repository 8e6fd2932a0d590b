//! Behaviour of the time-stepping schemes: consistency in τ, contraction,
//! determinism and τ-uniform a-priori bounds.

use fracfield::dynamics::{
    ac_evolve, apriori_monitor, beta_bound_check, ch_evolve, ch_evolve_modified, energy_table, pm_evolve, trajectory_table,
    SolverSettings,
};
use fracfield::fracop::{assemble, dual_norm_sq};
use fracfield::grid::{bump, lp_norm, make_domain, sample, Field};
use fracfield::limits::{max_time_distance, space_time_distance};
use fracfield::PotentialParams;
use proptest::prelude::*;

fn lumped_l2(a: &Field, b: &Field) -> f64 {
    let h = a.domain().h();
    ((a.values() - b.values()).norm_squared() * h).sqrt()
}

#[test]
fn backward_euler_is_first_order_in_tau() {
    let d = make_domain(0.0, 1.0, 32).unwrap();
    let op_s = assemble(d, 0.5).unwrap();
    let op_sigma = assemble(d, 0.75).unwrap();
    let params = PotentialParams::new(4.0).unwrap();
    let u0 = bump(d, 1.0);
    let end = |tau: f64| {
        let traj = ch_evolve(&op_s, &op_sigma, &params, &u0, &SolverSettings::new(tau, 0.1).unwrap()).unwrap();
        traj.last().clone()
    };
    let (a, b, c, fine) = (end(1e-2), end(5e-3), end(2.5e-3), end(3.125e-4));
    let errs = [lumped_l2(&a, &fine), lumped_l2(&b, &fine), lumped_l2(&c, &fine)];
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 1.6 && ratio < 2.6, "error ratio {ratio}, errors {errs:?}");
    }
}

#[test]
fn porous_medium_steps_contract_in_the_dual_norm() {
    // implicit steps of a monotone flow are nonexpansive in its metric
    let d = make_domain(0.0, 1.0, 32).unwrap();
    let op = assemble(d, 0.5).unwrap();
    let settings = SolverSettings::new(1e-2, 0.2).unwrap();
    for p in [1.5, 3.0] {
        let params = PotentialParams::new(p).unwrap();
        let u = pm_evolve(&op, &params, &bump(d, 1.0), &settings).unwrap();
        let v0 = sample(d, |x| (std::f64::consts::PI * x).sin() * 0.7).unwrap();
        let v = pm_evolve(&op, &params, &v0, &settings).unwrap();
        let gaps: Vec<f64> = u
            .u
            .iter()
            .zip(&v.u)
            .map(|(a, b)| dual_norm_sq(&op, &Field::from_values(d, a.values() - b.values()).unwrap()).unwrap().sqrt())
            .collect();
        for w in gaps.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-7) + 1e-12, "p = {p}: {} > {}", w[1], w[0]);
        }
    }
}

#[test]
fn runs_are_bit_reproducible() {
    let d = make_domain(0.0, 2.0, 24).unwrap();
    let op_s = assemble(d, 0.4).unwrap();
    let op_sigma = assemble(d, 0.6).unwrap();
    let params = PotentialParams::new(3.0).unwrap();
    let settings = SolverSettings::new(5e-3, 0.05).unwrap();
    let run = || {
        let t = ch_evolve(&op_s, &op_sigma, &params, &bump(d, 1.0), &settings).unwrap();
        (trajectory_table(&t).to_string(), energy_table(&t.trace).to_string())
    };
    assert_eq!(run(), run());
}

#[test]
fn apriori_quantities_are_uniform_in_tau() {
    let d = make_domain(0.0, 1.0, 32).unwrap();
    let op = assemble(d, 0.5).unwrap();
    let params = PotentialParams::new(4.0).unwrap();
    let u0 = bump(d, 1.0);
    let monitors: Vec<_> = [2e-2, 1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&tau| {
            let t = ch_evolve(&op, &op, &params, &u0, &SolverSettings::new(tau, 0.2).unwrap()).unwrap();
            assert!(beta_bound_check(&t, &params) <= 1e-8);
            apriori_monitor(&t, &op, &params)
        })
        .collect();
    // the bounds depend on the datum only, so each quantity stays within a
    // fixed multiple of its value at the initial time or the coarsest step
    let e0 = op.energy_norm_sq(u0.values()) + lp_norm(&u0, 4.0).powi(4);
    let first = monitors[0];
    for m in &monitors {
        assert!(m.max_dual_sq <= 1.0001 * dual_norm_sq(&op, &u0).unwrap());
        assert!(m.max_u_energy <= 1.05 * e0, "{} vs {e0}", m.max_u_energy);
        assert!(m.sum_w_energy <= 2.0 * first.sum_w_energy);
        assert!(m.sum_u_energy <= 1.5 * first.sum_u_energy);
    }
}

#[test]
fn modified_scheme_with_unit_weight_is_the_plain_scheme() {
    let d = make_domain(0.0, 1.0, 16).unwrap();
    let op_s = assemble(d, 0.75).unwrap();
    let op_sigma = assemble(d, 0.25).unwrap();
    let params = PotentialParams::new(1.5).unwrap();
    let settings = SolverSettings::new(1e-2, 0.05).unwrap();
    let u0 = bump(d, 0.5);
    let a = ch_evolve(&op_s, &op_sigma, &params, &u0, &settings).unwrap();
    let b = ch_evolve_modified(&op_s, &op_sigma, &params, 1.0, &u0, &settings).unwrap();
    assert_eq!(trajectory_table(&a).to_string(), trajectory_table(&b).to_string());
    // p must exceed 2N/(N+2s) = 0.8 at s = 0.75; at s = 0.1 the bound is 1.67
    let op_small = assemble(d, 0.1).unwrap();
    assert!(ch_evolve_modified(&op_small, &op_sigma, &params, 1.0, &u0, &settings).is_err());
}

#[test]
fn reference_distances_vanish_against_themselves() {
    let d = make_domain(0.0, 1.0, 16).unwrap();
    let op = assemble(d, 0.5).unwrap();
    let params = PotentialParams::new(3.0).unwrap();
    let settings = SolverSettings::new(1e-2, 0.05).unwrap();
    let ac = ac_evolve(&op, &params, &bump(d, 1.0), &settings).unwrap();
    let pm = pm_evolve(&op, &params, &bump(d, 1.0), &settings).unwrap();
    assert_eq!(space_time_distance(&pm, &pm).unwrap(), 0.0);
    assert_eq!(max_time_distance(&ac, &ac).unwrap(), 0.0);
    assert!(space_time_distance(&ac, &pm).unwrap() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn energy_inequality_holds_for_random_data(
        v in prop::collection::vec(-1.5f64..1.5, 16),
        s in 0.2f64..0.8,
        sigma in 0.2f64..0.8,
        p in prop::sample::select(vec![1.5, 3.0, 4.0]),
    ) {
        let d = make_domain(0.0, 1.0, 16).unwrap();
        let op_s = assemble(d, s).unwrap();
        let op_sigma = assemble(d, sigma).unwrap();
        let params = PotentialParams::new(p).unwrap();
        let u0 = Field::from_vec(d, v).unwrap();
        let t = ch_evolve(&op_s, &op_sigma, &params, &u0, &SolverSettings::new(1e-2, 0.05).unwrap()).unwrap();
        prop_assert!(t.min_slack() >= -1e-9, "min slack {}", t.min_slack());
    }
}
