mod oracles;

use jscds::divergence::{jsd, kl, softmax, ProbabilityVector};
use oracles::{jsd_oracle, kl_oracle, random_distribution, softmax_oracle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pv(v: Vec<f64>) -> ProbabilityVector {
    ProbabilityVector::new(v).unwrap()
}

#[test]
fn jsd_matches_closed_form_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let d = rng.random_range(2..=256);
        let p = random_distribution(&mut rng, d);
        let q = random_distribution(&mut rng, d);
        let got = jsd(&pv(p.clone()), &pv(q.clone())).unwrap();
        assert!((got - jsd_oracle(&p, &q)).abs() <= 1e-9);
        assert!((-1e-12..=std::f64::consts::LN_2 + 1e-9).contains(&got));
        let swapped = jsd(&pv(q), &pv(p)).unwrap();
        assert!((got - swapped).abs() <= 1e-12);
    }
}

#[test]
fn kl_matches_oracle_and_is_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..500 {
        let d = rng.random_range(2..=64);
        let p = random_distribution(&mut rng, d);
        let q = random_distribution(&mut rng, d);
        let got = kl(&pv(p.clone()), &pv(q.clone())).unwrap();
        assert!(got >= -1e-12);
        assert!((got - kl_oracle(&p, &q)).abs() <= 1e-9 * got.max(1.0));
    }
}

proptest! {
    #[test]
    fn softmax_is_shift_invariant(v in prop::collection::vec(-50.0f64..50.0, 1..40), c in -100.0f64..100.0) {
        let a = softmax(&v).unwrap();
        let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
        let b = softmax(&shifted).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn softmax_matches_oracle(v in prop::collection::vec(-10.0f64..10.0, 1..40)) {
        let got = softmax(&v).unwrap();
        let sum: f64 = got.as_slice().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        for (x, y) in got.as_slice().iter().zip(softmax_oracle(&v)) {
            prop_assert!(*x > 0.0);
            prop_assert!((x - y).abs() <= 1e-14);
        }
    }

    #[test]
    fn jsd_of_self_is_zero(v in prop::collection::vec(-10.0f64..10.0, 2..64)) {
        let p = softmax(&v).unwrap();
        prop_assert!(jsd(&p, &p).unwrap().abs() <= 1e-12);
        prop_assert!(kl(&p, &p).unwrap().abs() <= 1e-12);
    }
}
