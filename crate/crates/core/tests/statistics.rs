mod common;

use common::{check_coherent, check_identities, random_state};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn small_state() -> impl Strategy<Value = (Vec<usize>, Vec<(f64, f64)>)> {
    prop::collection::vec(1usize..=4, 1..=3).prop_flat_map(|dims| {
        let len = 2 * dims.iter().map(|n| n + 1).product::<usize>();
        (Just(dims), prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn statistics_identities_hold((dims, raw) in small_state()) {
        prop_assume!(raw.iter().any(|(r, i)| r.abs() + i.abs() > 1e-3));
        let state = random_state(&dims, &raw);
        prop_assert!(check_identities(&state).is_ok(), "{:?}", check_identities(&state));
    }

    #[test]
    fn coherent_states_sit_at_the_vacuum_ellipse(
        alphas in prop::collection::vec((0.0f64..1.5, -3.2f64..3.2), 1..=2),
    ) {
        let alphas: Vec<C64> = alphas.iter().map(|&(r, p)| C64::from_polar(r, p)).collect();
        let res = check_coherent(&alphas, 40);
        prop_assert!(res.is_ok(), "{:?}", res);
    }
}

#[test]
fn vacuum_sits_at_the_vacuum_ellipse() {
    check_coherent(&[C64::new(0.0, 0.0); 3], 3).unwrap();
}
