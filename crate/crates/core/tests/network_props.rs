mod common;

use common::*;
use gridcert::cert::{AutoSearch, CertOptions};
use gridcert::linalg::symmetric_eigenvalues;
use gridcert::network::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn certify_auto(spec: &NetworkSpec) -> CertificateReport {
    certify_network(spec, &MultiplierSpec::Auto(AutoSearch::default()), &CertOptions::default()).unwrap()
}

/// Schur complement through an explicit inverse, independent of the Cholesky path.
fn schur_by_inverse(l: &DMatrix<f64>, keep: &[usize]) -> DMatrix<f64> {
    let n = l.nrows();
    let elim: Vec<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    let sub = |r: &[usize], c: &[usize]| DMatrix::from_fn(r.len(), c.len(), |a, b| l[(r[a], c[b])]);
    let inv = sub(&elim, &elim).try_inverse().unwrap();
    sub(keep, keep) - sub(keep, &elim) * inv * sub(&elim, keep)
}

fn in_unit_band(m: &DMatrix<f64>) -> bool {
    symmetric_eigenvalues(m).iter().all(|&e| (-1e-10..=1.0 + 1e-10).contains(&e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn laplacian_invariants(seed in seeds()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=10);
        let spec = random_network(&mut r, n, &RandomNetworkOptions::default()).unwrap();
        let l = build_laplacian(n, &spec.lines, &spec.operating_point_or_default()).unwrap();
        prop_assert!((&l - l.transpose()).abs().max() < 1e-14);
        for i in 0..n {
            prop_assert!(l.row(i).sum().abs() < 1e-12);
        }
        prop_assert!(symmetric_eigenvalues(&l)[0] >= -1e-10);

        let scaling = gamma_bounds(n, &spec.lines, &spec.limits).unwrap();
        let all: Vec<usize> = (0..n).collect();
        prop_assert!(in_unit_band(&scaled_laplacian(&l, &scaling, &all)));

        let keep = random_keep(&mut r, n);
        let red = kron_reduce(&l, &keep).unwrap();
        prop_assert!((&red - schur_by_inverse(&l, &keep)).abs().max() < 1e-9 * l.abs().max());
        for i in 0..keep.len() {
            prop_assert!(red.row(i).sum().abs() < 1e-10);
        }
        prop_assert!(in_unit_band(&scaled_laplacian(&red, &scaling, &keep)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn certified_networks_are_stable_under_reduction(seed in seeds()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=8);
        let spec = random_network(&mut r, n, &RandomNetworkOptions::default()).unwrap();
        let rep = certify_auto(&spec);
        if rep.certified {
            let gs = bus_rationals(&spec);
            let l = build_laplacian(n, &spec.lines, &spec.operating_point_or_default()).unwrap();
            prop_assert!(closed_loop_oracle_with(&gs, &l).unwrap().is_stable());
            for _ in 0..3 {
                let keep = random_keep(&mut r, n);
                let red = kron_reduce(&l, &keep).unwrap();
                let sub: Vec<_> = keep.iter().map(|&i| gs[i].clone()).collect();
                let v = closed_loop_oracle_with(&sub, &red).unwrap();
                prop_assert!(v.is_stable(), "keep {:?}: {:?}", keep, v);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn certificate_ignores_operating_angles(seed in seeds()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=6);
        let spec = random_network(&mut r, n, &RandomNetworkOptions::default()).unwrap();
        let rep = certify_auto(&spec);
        let fixed = MultiplierSpec::Fixed(rep.multiplier.clone());
        for _ in 0..50 {
            let moved = redraw_angles(&mut r, &spec);
            let again = certify_network(&moved, &fixed, &CertOptions::default()).unwrap();
            prop_assert_eq!(again.certified, rep.certified);
            prop_assert_eq!(&again.per_bus, &rep.per_bus);
            if rep.certified {
                prop_assert!(closed_loop_oracle(&moved).unwrap().is_stable());
            }
        }
    }

    #[test]
    fn zero_disturbance_stays_at_rest(seed in seeds()) {
        let mut r = rng(seed);
        let n = r.gen_range(2..=5);
        let spec = random_network(&mut r, n, &RandomNetworkOptions::default()).unwrap();
        let opts = SimulationOptions { dt: 1e-3, t_end: 1.0, sample_every: 50 };
        let tr = simulate(&spec, &Disturbance::default(), &opts).unwrap();
        prop_assert!(tr.theta_dot.iter().chain(&tr.p_n).chain(&tr.line_flows).flatten().all(|x| *x == 0.0));
    }
}
