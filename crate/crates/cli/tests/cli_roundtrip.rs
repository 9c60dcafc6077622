use gridcert::models::DroopDelayParams;
use gridcert::network::{random_network, BusModel, NetworkSpec, RandomNetworkOptions};
use gridcert::tf::{Polynomial, RationalFunction, TransferMatrix2x2};
use gridcert_cli::output::to_json_string;
use gridcert_cli::spec_io::{emit_spec, parse_spec_str};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_tf<R: Rng>(r: &mut R) -> RationalFunction {
    let den: Vec<f64> = (0..r.gen_range(1..=3)).map(|_| r.gen_range(0.1..5.0)).chain([1.0]).collect();
    let num: Vec<f64> = (0..den.len() - 1).map(|_| r.gen_range(-2.0..2.0)).collect();
    RationalFunction::new(Polynomial::from_slice(&num), Polynomial::from_slice(&den)).unwrap()
}

/// Random network with every bus kind represented.
fn mixed_spec(seed: u64) -> NetworkSpec {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n = r.gen_range(3..=7);
    let mut spec = random_network(&mut r, n, &RandomNetworkOptions::default()).unwrap();
    spec.buses[0] = BusModel::DroopDelay(
        DroopDelayParams::new(r.gen_range(0.1..0.5), r.gen_range(0.0..0.1), r.gen_range(0.5..3.0), r.gen_range(0.0..0.2))
            .unwrap(),
    );
    spec.buses[1] = BusModel::Custom {
        plant: TransferMatrix2x2::new(random_tf(&mut r), random_tf(&mut r), random_tf(&mut r), random_tf(&mut r)),
        controller: random_tf(&mut r),
    };
    if r.gen_bool(0.5) {
        spec.operating_point = None;
    }
    spec
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parse_inverts_emit(seed in any::<u64>()) {
        let spec = mixed_spec(seed);
        let text = to_json_string(&emit_spec(&spec));
        let back = parse_spec_str(&text).unwrap();
        prop_assert_eq!(back, spec);
    }
}
