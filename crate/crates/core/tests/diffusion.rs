use elastodamp::diffusion::*;
use elastodamp::linalg::{self, CMat6};
use elastodamp::model::{make_params, DataProfile, ModelParams};
use elastodamp::propagator::{evolve_mode, micro_energy, mode_from_profiles, rk4_linear};
use elastodamp::symbol::build_symbol;
use num_complex::Complex;
use proptest::prelude::*;

type C = Complex<f64>;

fn params(a2: f64, b2: f64, th: f64) -> ModelParams<f64> {
    make_params(a2, b2, th).unwrap()
}

fn data() -> (DataProfile<f64>, DataProfile<f64>) {
    (
        DataProfile::gaussian(1.0, 1.0, [1.0, 0.3, 0.2]).with_riesz(1.0),
        DataProfile::gaussian(0.7, 1.0, [0.2, -0.5, 1.0]),
    )
}

fn residual_to_identity(m: &CMat6<f64>) -> f64 {
    linalg::max_abs(&linalg::add(m, &linalg::scale(&linalg::identity(), C::new(-1.0, 0.0))))
}

#[test]
fn half_is_rejected_with_rationale() {
    let err = build_reference(&params(1.0, 4.0, 0.5)).unwrap_err();
    assert!(err.to_string().contains("no improvement"));
}

#[test]
fn printed_reference_exponents() {
    let r = 0.01;
    let p0 = params(1.0, 4.0, 0.0);
    let mu = build_reference(&p0).unwrap().mu_tilde(r);
    for l in 3..6 {
        assert_eq!(mu[l], C::new(1.0, 0.0));
    }
    assert!((mu[2].re - 4.0 * r * r).abs() < 1e-18);

    let p = params(1.0, 4.0, 0.25);
    let reference = build_reference(&p).unwrap();
    assert_eq!(reference.regime, ReferenceRegime::DoubleDiffusion);
    let mu = reference.mu_tilde(r);
    assert!((mu[0] - C::new(r.powf(1.5), 0.0)).norm() < 1e-15);
    assert!((mu[4] - C::new(r.powf(0.5), 0.0)).norm() < 1e-15);

    let p = params(1.0, 4.0, 0.75);
    let mu = build_reference(&p).unwrap().mu_tilde(r);
    let expect = C::new(0.5 * r.powf(1.5), -r);
    assert!((mu[0] - expect).norm() < 1e-15);
    assert!((mu[5] - C::new(0.5 * r.powf(1.5), 2.0 * r)).norm() < 1e-15);
}

#[test]
fn predicted_gaps() {
    assert_eq!(predicted_gap(0.0), 0.5);
    assert!((predicted_gap(0.75) - 1.0 / 3.0).abs() < 1e-15);
    assert!(predicted_gap(0.5 - 1e-9) < 1e-8);
    let diff0 = -(predicted_solution_exponent(0.0, 1.0, 0.0) + predicted_gap(0.0));
    assert!((diff0 + 1.25).abs() < 1e-15);
}

#[test]
fn multipliers_invert_at_half_epsilon() {
    for th in [0.0, 0.1, 0.25, 0.4, 0.6, 0.75, 1.0] {
        let p = params(1.0, 4.0, th);
        let reference = build_reference(&p).unwrap();
        let r = p.epsilon / 2.0;
        let (l, h) = reference.multipliers(r).unwrap();
        assert!(residual_to_identity(&linalg::mul(&l, &h)) < 1e-13, "theta {th}");
        assert!(linalg::condition(&l) < MAX_CONDITION);
    }
}

// ∂_t W = G W and W ≈ L e^{-μ̃t} H W₀ require G L ≈ -L diag(μ̃). The relative
// residual must vanish as |ξ| → 0.
#[test]
fn reference_columns_approximately_diagonalize_the_generator() {
    for th in [0.0, 0.25, 0.75, 1.0] {
        let p = params(1.0, 4.0, th);
        let reference = build_reference(&p).unwrap();
        let sym = build_symbol(&p, [0.0, 0.0, 1.0]).unwrap();
        let rel = |r: f64| {
            let g = sym.generator(r);
            let l = reference.l_matrix(r);
            let mu = reference.mu_tilde(r);
            let mut d = linalg::zeros();
            for k in 0..6 {
                d[k][k] = mu[k];
            }
            let res = linalg::add(&linalg::mul(&g, &l), &linalg::mul(&l, &d));
            let scale = mu.iter().fold(0.0f64, |m, z| m.max(z.norm()));
            linalg::max_abs(&res) / scale
        };
        let r = p.epsilon / 4.0;
        let (hi, lo) = (rel(r), rel(r / 100.0));
        assert!(lo < hi / 3.0 && lo < 0.05, "theta {th}: {hi:e} -> {lo:e}");
    }
}

#[test]
fn micro_propagator_agrees_with_rk4_and_mode_evolution() {
    let p = params(0.25, 0.5, 0.3);
    let (u0, u1) = data();
    let xi = [0.03, -0.02, 0.05];
    let r = (xi.iter().map(|x| x * x).sum::<f64>()).sqrt();
    let state = mode_from_profiles(&u0, &u1, xi);
    let w0 = micro_energy(&p, &state).unwrap().w;
    let t = 7.5;
    let e = micro_propagator(&p, r, t);
    let w = linalg::mul_vec(&e, &w0);
    let exact = micro_energy(&p, &evolve_mode(&p, &state, t)).unwrap().w;
    let g = build_symbol(&p, xi.map(|x| x / r)).unwrap().generator(r);
    let rk = rk4_linear(&g, &w0, t, 4000);
    for k in 0..6 {
        assert!((w[k] - exact[k]).norm() < 1e-12 * (1.0 + exact[k].norm()));
        assert!((w[k] - rk[k]).norm() < 1e-9);
    }
}

#[test]
fn friction_second_block_decays_like_exp_minus_t() {
    let p = params(1.0, 4.0, 0.0);
    let reference = build_reference(&p).unwrap();
    let w0 = [C::new(1.0, 0.0); 6];
    let r_int = reference.params.epsilon / 2.0;
    for k in 1..=50 {
        let r = r_int * k as f64 / 50.0;
        let h = reference.h_matrix(r).unwrap();
        let hw = linalg::mul_vec(&h, &w0);
        for t in [0.5, 3.0, 20.0] {
            let w = reference.evolve(r, t, &w0).unwrap();
            for l in 3..6 {
                assert!((w[l] - hw[l] * (-t).exp()).norm() <= 1e-14 * hw[l].norm());
            }
        }
    }
}

#[test]
fn reference_vanishes_outside_twice_inverse_epsilon() {
    let p = params(1.0, 4.0, 0.75);
    let reference = build_reference(&p).unwrap();
    let w = reference.evolve(2.5 / p.epsilon, 1.0, &[C::new(1.0, 0.0); 6]).unwrap();
    assert!(w.iter().all(|z| z.norm() == 0.0));
}

#[test]
fn conditioning_guard_trips_far_outside_the_interior_zone() {
    let p = params(1.0, 4.0, 0.25);
    let reference = build_reference(&p).unwrap();
    // z₆(a) has a pole at a|ξ|^{1-2θ} = 1.
    assert!(reference.multipliers(1.0).is_err());
    assert!(reference.multipliers(1.0 + 1e-9).is_err());
}

#[test]
fn difference_decays_faster_on_oscillatory_side() {
    let p = params(0.25, 0.5, 0.75);
    let reference = build_reference(&p).unwrap();
    let (u0, u1) = data();
    let grid = interior_grid(&p, 1e-9);
    let m = gap_decay(&reference, &u0, &u1, 0.0, 1.0, (1e2, 1e4), 20, &grid).unwrap();
    assert!((m.solution.slope + 1.0).abs() < 0.05, "{}", m.solution.slope);
    assert!(m.holds(0.1), "gap {}", m.measured_gap);
    assert!(m.difference.slope <= m.predicted_difference_slope + 0.05);
    assert!(m.to_csv().lines().count() == 21);
}

#[test]
fn zero_data_is_rejected() {
    let p = params(0.25, 0.5, 0.0);
    let reference = build_reference(&p).unwrap();
    let z = DataProfile::zero();
    let grid = interior_grid(&p, 1e-9);
    assert!(gap_decay(&reference, &z, &z, 0.0, 1.0, (1e2, 1e4), 20, &grid).is_err());
    let p = params(0.25, 0.5, 0.25);
    let reference = build_reference(&p).unwrap();
    assert!(double_diffusion_split(&reference, &z, &z, (1e2, 1e4), 20, &grid).is_err());
}

#[test]
fn double_diffusion_blocks() {
    let p = params(0.25, 0.5, 0.25);
    let reference = build_reference(&p).unwrap();
    let (u0, u1) = data();
    let grid = interior_grid(&p, 1e-16);
    let d = double_diffusion_split(&reference, &u0, &u1, (1e2, 1e4), 20, &grid).unwrap();
    assert_eq!(d.expected, (-1.0, -3.0));
    assert!(
        (d.heat_block.slope - d.expected.0).abs() < 0.05,
        "{}",
        d.heat_block.slope
    );
    assert!(
        (d.damped_block.slope - d.expected.1).abs() < 0.05,
        "{}",
        d.damped_block.slope
    );
    // The |ξ|^{2θ} block is the faster one for θ < 1/2.
    assert!(d.damped_block.slope < d.heat_block.slope);

    let osc = build_reference(&params(0.25, 0.5, 0.75)).unwrap();
    assert!(double_diffusion_split(&osc, &u0, &u1, (1e2, 1e4), 20, &grid).is_err());
}

#[test]
fn block_exponents_merge_at_half() {
    let th: f64 = 0.5 - 1e-9;
    let heat = -0.75 * 2.0 / (2.0 - 2.0 * th);
    let damped = -0.75 * 2.0 / (2.0 * th);
    assert!((heat - damped).abs() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reconstruction_is_exact_at_time_zero(
        th in prop_oneof![0.0..0.45f64, 0.55..=1.0f64],
        frac in 0.01..1.0f64,
        a2 in 0.1..2.0f64,
        gap in 0.1..3.0f64,
    ) {
        let p = params(a2, a2 + gap, th);
        let reference = build_reference(&p).unwrap();
        let r = frac * p.epsilon;
        let w0 = [C::new(1.0, 0.5), C::new(-0.3, 0.0), C::new(0.2, 0.1),
                  C::new(0.0, 1.0), C::new(0.7, -0.2), C::new(0.1, 0.1)];
        let (l, _) = reference.multipliers(r).unwrap();
        let back = linalg::mul_vec(&l, &reference.evolve(r, 0.0, &w0).unwrap());
        for k in 0..6 {
            prop_assert!((back[k] - w0[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn micro_propagator_semigroup(
        th in 0.0..=1.0f64,
        r in 1e-4..2.0f64,
        s in 0.0..5.0f64,
        t in 0.0..5.0f64,
    ) {
        let p = params(1.0, 4.0, th);
        let ab = linalg::mul(&micro_propagator(&p, r, t), &micro_propagator(&p, r, s));
        let direct = micro_propagator(&p, r, s + t);
        let scale = 1.0 + linalg::max_abs(&direct);
        let d = linalg::add(&ab, &linalg::scale(&direct, C::new(-1.0, 0.0)));
        prop_assert!(linalg::max_abs(&d) < 1e-9 * scale);
    }
}
