mod common;

use common::*;
use gridcert::cert::*;
use gridcert::tf::*;
use proptest::prelude::*;
use rand::Rng;

fn random_biquad<R: Rng>(r: &mut R) -> ([f64; 3], [f64; 3]) {
    let a = [r.gen_range(-0.2..2.0), r.gen_range(-0.2..2.0), r.gen_range(-0.2..2.0)];
    let b = [r.gen_range(0.05..2.0), r.gen_range(0.05..2.0), r.gen_range(0.05..2.0)];
    (a, b)
}

/// Sign of the real part on a dense grid; `None` inside the boundary band.
fn grid_sign(a: [f64; 3], b: [f64; 3]) -> Option<bool> {
    let re = |w: f64| {
        let x = w * w;
        ((a[0] - a[2] * x) * (b[0] - b[2] * x) + a[1] * b[1] * x) / ((b[0] - b[2] * x).powi(2) + b[1] * b[1] * x)
    };
    let mut m = re(0.0).min(a[2] / b[2]);
    for w in log_points(1e-4, 1e4, 100_000) {
        m = m.min(re(w));
    }
    if m.abs() < 1e-9 {
        None
    } else {
        Some(m > 0.0)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn membership_is_monotone_in_gamma(seed in seeds()) {
        let mut r = rng(seed);
        let p = random_stable(&mut r, 1..=4, false);
        let h = random_multiplier(&mut r, 2);
        let opts = CertOptions::default();
        let gamma = 10f64.powf(r.gen_range(-1.0..2.0));
        if let Ok(rep) = ph_membership(&p, &h, gamma, &opts) {
            if rep.member {
                for _ in 0..5 {
                    let g2 = gamma * r.gen_range(0.0..1.0f64).max(1e-6);
                    prop_assert!(ph_membership(&p, &h, g2, &opts).unwrap().member, "gamma {} ok but {} not", gamma, g2);
                }
            }
        }
    }

    #[test]
    fn gamma_star_bracket_is_valid(seed in seeds()) {
        let mut r = rng(seed);
        let p = random_stable(&mut r, 1..=4, false);
        let h = random_multiplier(&mut r, 2);
        let opts = CertOptions::default();
        let gs = gamma_star(&p, &h, &opts).unwrap();
        if !gs.capped && gs.value > 0.0 {
            let (lo, hi) = gs.bracket;
            prop_assert!(ph_membership(&p, &h, lo, &opts).unwrap().member);
            prop_assert!(!ph_membership(&p, &h, hi, &opts).unwrap().member);
            prop_assert!(hi / lo <= 1.0 + opts.tol_rel * 1.0001);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn grid_and_state_space_agree(seed in seeds()) {
        let mut r = rng(seed);
        let p = random_stable(&mut r, 0..=6, false);
        let h = random_multiplier(&mut r, 2);
        let gamma = 10f64.powf(r.gen_range(-1.0..1.0));
        let grid = ph_membership(&p, &h, gamma, &CertOptions::default()).unwrap();
        let ss = ph_membership(&p, &h, gamma, &CertOptions::default().with_method(Method::StateSpace)).unwrap();
        if grid.margin.abs() > 1e-6 {
            prop_assert_eq!(grid.member, ss.member);
        }
        prop_assert!((grid.margin - ss.margin).abs() < 1e-5, "grid {} vs ss {}", grid.margin, ss.margin);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn biquad_test_matches_dense_grid(seed in seeds()) {
        let mut r = rng(seed);
        let (a, b) = random_biquad(&mut r);
        if let Some(sign) = grid_sign(a, b) {
            prop_assert_eq!(pr_test_biquad(a, b).unwrap(), sign, "a={:?} b={:?}", a, b);
        }
    }
}

#[test]
fn plain_functions_agree_across_backends() {
    let mut r = rng(11);
    for _ in 0..200 {
        let d0 = r.gen_range(0.1..2.0);
        let g = random_with_feedthrough(&mut r, 1..=6, d0);
        let grid = espr_margin_grid(&g, &FrequencyGrid::default().widened(1e-4, 1e4)).unwrap();
        let ss = espr_check_state_space(&realize_state_space(&g).unwrap()).unwrap();
        assert!((grid.epsilon_margin - ss.epsilon_margin).abs() < 1e-5, "{g:?}: {} vs {}", grid.epsilon_margin, ss.epsilon_margin);
    }
}

#[test]
fn state_space_survives_stalled_schur() {
    // the Hamiltonian here made plain Francis QR cycle
    let p = RationalFunction::from_coeffs(&[0.27537469417084776, 0.5377688262969538], &[0.19240665079202166, 1.0]).unwrap();
    let h = Multiplier::new(5.39044063034924, vec![(0.24159123652639788, 0.23194320540708518)]).unwrap();
    let gamma = 0.217436410531377;
    let grid = ph_membership(&p, &h, gamma, &CertOptions::default()).unwrap();
    let ss = ph_membership(&p, &h, gamma, &CertOptions::default().with_method(Method::StateSpace)).unwrap();
    assert_eq!(grid.member, ss.member);
    assert!((grid.margin - ss.margin).abs() < 1e-5, "grid {} vs ss {}", grid.margin, ss.margin);
}
