use elastodamp::linalg::{self, vec_norm};
use elastodamp::model::{make_params, Branch, ModelParams, Zone};
use elastodamp::propagator::rk4_linear;
use elastodamp::symbol::*;
use elastodamp::Wide;
use num_complex::Complex;
use proptest::prelude::*;

fn params(a2: f64, b2: f64, th: f64) -> ModelParams<f64> {
    make_params(a2, b2, th).unwrap()
}

fn wide_fit(a2: f64, b2: f64, theta: f64, zone: Zone, branch: Option<Branch>) -> ErrorOrderFit {
    let w = Wide::from_f64;
    let p = ModelParams::new(w(a2), w(b2), w(theta)).unwrap();
    let eps = p.epsilon;
    let (lo, hi) = match zone {
        Zone::Int => (eps / w(200.0), eps / w(2.0)),
        _ => (w(2.0) / eps, w(200.0) / eps),
    };
    asymptotic_error_order(&p, zone, branch, &geometric(lo, hi, 12)).unwrap()
}

#[test]
fn error_order_examples() {
    assert!(wide_fit(1.0, 4.0, 0.0, Zone::Int, None).order >= 6.0);
    assert!(wide_fit(1.0, 4.0, 1.0, Zone::Int, None).order >= 4.0);
    assert!(wide_fit(1.0, 4.0, 0.25, Zone::Int, None).order >= 4.0);
}

#[test]
fn error_orders_meet_claims_on_both_zones() {
    for th in [0.0, 0.1, 0.25, 0.4, 0.6, 0.75, 0.9, 1.0] {
        for zone in [Zone::Int, Zone::Ext] {
            for br in [Some(Branch::Transverse), Some(Branch::Longitudinal)] {
                let f = wide_fit(1.0, 4.0, th, zone, br);
                assert!(f.meets_claim(0.3), "theta {th} {zone:?} {br:?}: {f:?}");
            }
        }
    }
}

#[test]
fn error_order_rejects_bad_samples() {
    let p = params(1.0, 4.0, 0.25);
    let narrow = geometric(1e-3, 5e-3, 10);
    assert!(asymptotic_error_order(&p, Zone::Int, None, &narrow).is_err());
    let outside = geometric(1e-4, 1.0, 10);
    assert!(asymptotic_error_order(&p, Zone::Int, None, &outside).is_err());
    let half = params(1.0, 4.0, 0.5);
    assert!(asymptotic_error_order(&half, Zone::Int, None, &geometric(1e-4, 1e-2, 10)).is_err());
}

#[test]
fn gevrey_examples() {
    let xs = geometric(1e2, 1e4, 20);
    let g = gevrey_probe(&params(1.0, 4.0, 0.25), &xs).unwrap();
    assert!((g.exponent - 0.5).abs() < 0.02 && (g.gevrey_order - 2.0).abs() < 0.1);
    assert!((g.expected_order - 2.0).abs() < 1e-12);
    let g = gevrey_probe(&params(1.0, 4.0, 0.75), &xs).unwrap();
    assert!((g.exponent - 0.5).abs() < 0.02);
    let g = gevrey_probe(&params(1.0, 4.0, 0.5), &xs).unwrap();
    assert!((g.exponent - 1.0).abs() < 0.02);
    assert!(gevrey_probe(&params(1.0, 4.0, 0.0), &xs).is_err());
}

fn rk4_half(p: &ModelParams<f64>, r: f64, w0: &[Complex<f64>; 6], t: f64) -> [Complex<f64>; 6] {
    let g = linalg::scale(&half_system_matrix(p), Complex::new(0.0, r));
    let steps = 10_000;
    rk4_linear(&g, w0, t, steps)
}

#[test]
fn half_solution_matches_rk4_in_all_cases() {
    let w0 = [
        Complex::new(0.3, -0.1),
        Complex::new(-0.2, 0.5),
        Complex::new(0.7, 0.0),
        Complex::new(0.1, 0.2),
        Complex::new(0.0, -0.4),
        Complex::new(-0.6, 0.3),
    ];
    for (a2, b2) in [(0.04, 0.09), (1.0, 4.0), (0.1, 0.25), (0.25, 1.0), (0.2, 0.3)] {
        let p = params(a2, b2, 0.5);
        for (r, t) in [(0.5, 3.0), (2.0, 1.5)] {
            let exact = half_exact_solution(&p, r, &w0, t).unwrap();
            let rk = rk4_half(&p, r, &w0, t);
            let d: Vec<_> = exact.iter().zip(&rk).map(|(a, b)| a - b).collect();
            let d: [Complex<f64>; 6] = d.try_into().unwrap();
            assert!(vec_norm(&d) < 1e-6 * vec_norm(&rk), "a2={a2} b2={b2}");
        }
    }
}

#[test]
fn realized_jordan_structure() {
    let s = jordan_spectrum(&params(0.25, 1.0, 0.5)).unwrap();
    let sizes: Vec<usize> = s.realized.iter().map(|b| b.size).collect();
    assert_eq!(sizes, vec![2, 2, 1, 1]);
    assert_eq!(s.realized_degree, 1);
    let s = jordan_spectrum(&params(1.0, 4.0, 0.5)).unwrap();
    assert!(s.realized.iter().all(|b| b.size == 1));
    assert_eq!(s.block_structure, vec![2, 2, 1, 1]);
    // Basis check: T^{-1} P T is the realized Jordan form.
    for (a2, b2) in [(0.25, 1.0), (0.1, 0.25), (1.0, 4.0)] {
        let p = params(a2, b2, 0.5);
        let s = jordan_spectrum(&p).unwrap();
        let t = realized_jordan_basis(&p);
        let j = linalg::mul(&linalg::inverse(&t).unwrap(), &linalg::mul(&half_system_matrix(&p), &t));
        let mut off = 0;
        let mut expect = linalg::zeros::<f64, 6>();
        for b in &s.realized {
            for k in 0..b.size {
                expect[off + k][off + k] = b.lambda;
                if k + 1 < b.size {
                    expect[off + k][off + k + 1] = Complex::new(1.0, 0.0);
                }
            }
            off += b.size;
        }
        let e = linalg::add(&j, &linalg::scale(&expect, Complex::new(-1.0, 0.0)));
        assert!(linalg::max_abs(&e) < 1e-12, "a2={a2} b2={b2}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_and_product_identities(th in 0.0f64..1.0, lr in -4.0f64..4.0, a2 in 0.05f64..3.0, gap in 0.01f64..3.0) {
        let p = params(a2, a2 + gap, th);
        let r = 10f64.powf(lr);
        let mu = exact_six(&p, r);
        let q = p.damping(r);
        let re: f64 = mu.iter().map(|z| z.re).sum();
        let im: f64 = mu.iter().map(|z| z.im).sum();
        prop_assert!((re - 3.0 * q).abs() <= 1e-12 * 3.0 * q);
        prop_assert!(im.abs() <= 1e-12 * mu.iter().map(|z| z.norm()).sum::<f64>());
        for y2 in [p.a2, p.b2] {
            let m = exact_mode_roots(&p, y2, r);
            let prod = m.mu_plus * m.mu_minus;
            let target = y2 * r * r;
            prop_assert!((prod.re - target).abs() <= 4e-16 * target.max(q * q));
        }
    }

    #[test]
    fn oscillatory_roots_are_conjugate(th in 0.0f64..1.0, lr in -3.0f64..3.0) {
        let p = params(1.0, 4.0, th);
        let r = 10f64.powf(lr);
        for y2 in [p.a2, p.b2] {
            let m = exact_mode_roots(&p, y2, r);
            if m.mu_plus.im != 0.0 {
                prop_assert_eq!(m.mu_plus, m.mu_minus.conj());
            }
        }
        if let Ok(e) = asymptotic_eigs(&p, r, Zone::Ext) {
            if !e.regime.is_parabolic() {
                for l in 0..3 {
                    prop_assert!((e.mu[l] - e.mu[l + 3].conj()).norm() < 1e-12 * e.mu[l].norm());
                }
            }
        }
    }

    #[test]
    fn characteristic_identity(a2 in 0.05f64..2.0, gap in 0.01f64..2.0, re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let p = params(a2, a2 + gap, 0.5);
        let res = characteristic_residual(&p, Complex::new(re, im));
        prop_assert!(res < 1e-12);
    }

    #[test]
    fn jordan_eigenvalues_are_roots(a2 in 0.05f64..2.0, gap in 0.01f64..2.0) {
        let p = params(a2, a2 + gap, 0.5);
        let s = jordan_spectrum(&p).unwrap();
        for l in &s.lambdas {
            let i = Complex::new(0.0, 1.0);
            let fa = l * l - i * l - a2;
            let fb = l * l - i * l - (a2 + gap);
            prop_assert!((fa * fb).norm() < 1e-12);
        }
    }

    #[test]
    fn m_eta_diagonalizes(x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
        let n = (x * x + y * y + z * z).sqrt();
        prop_assume!(n > 0.1 && x.abs() / n > 0.05 && z.abs() / n > 0.05);
        let p = params(1.0, 4.0, 0.3);
        let res = validate_m_eta(&p, [x / n, y / n, z / n]).unwrap();
        prop_assert!(res < 1e-10);
    }
}
