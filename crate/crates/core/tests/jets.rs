mod common;

use osculum::jets::{IndexTable, Jet};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn leibniz_rule(vars in 1usize..4, order in 0usize..6, seed in any::<u64>()) {
        let t = IndexTable::shared(vars, order);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_jet(&t, &mut rng);
        let b = common::random_jet(&t, &mut rng);
        prop_assert!(common::leibniz_error(&a, &b) < 1e-12);
    }

    #[test]
    fn chain_rule(vars in 1usize..4, order in 0usize..6, seed in any::<u64>()) {
        let t = IndexTable::shared(vars, order);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_jet(&t, &mut rng);
        let b = common::random_jet(&t, &mut rng);
        prop_assert!(common::chain_error(&a, &b) < 1e-12);
    }

    #[test]
    fn product_commutes_and_distributes(vars in 1usize..4, order in 0usize..5, seed in any::<u64>()) {
        let t = IndexTable::shared(vars, order);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = common::random_jet(&t, &mut rng);
        let b = common::random_jet(&t, &mut rng);
        let c = common::random_jet(&t, &mut rng);
        let lhs = &a * &(&b + &c);
        let rhs = &(&a * &b) + &(&c * &a);
        for (x, y) in lhs.coeffs().iter().zip(rhs.coeffs()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn trig_identity_holds_to_high_order() {
    let t = IndexTable::shared(2, 8);
    let x = Jet::variable(&t, 0, 0.7);
    let y = Jet::variable(&t, 1, -0.2);
    let u = &x * &y;
    let one = &(&u.sin() * &u.sin()) + &(&u.cos() * &u.cos());
    assert!((one.value() - 1.0).abs() < 1e-15);
    assert!(one.coeffs()[1..].iter().all(|c| c.abs() < 1e-13));
}
