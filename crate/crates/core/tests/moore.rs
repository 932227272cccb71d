use std::time::Instant;

use nalgebra::DVector;
use osculum::bilinear::{moore_check, regular_element, BilinearForm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn thousand_random_forms_have_the_moore_property() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..1000 {
        let dims = (rng.random_range(1..=6), rng.random_range(1..=6), rng.random_range(1..=6));
        let rank = rng.random_bool(0.5).then(|| rng.random_range(1..=4));
        let form = BilinearForm::random(dims.0, dims.1, dims.2, rank, &mut rng);
        let reg = regular_element(&form, 24, i);
        let r = moore_check(&form, &reg.z);
        assert!(r < 1e-10, "form {i} {dims:?} rank {rank:?}: residual {r:e}");
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn a_non_regular_element_can_break_the_property() {
    // β(v, u) = (v_1 u_1, v_2 u_2): Z = e_1 has rank 1 while Z = e_1 + e_2 has rank 2.
    let form = BilinearForm::from_fn(2, 2, 2, |i, j| {
        let mut w = DVector::zeros(2);
        if i == j {
            w[i] = 1.0;
        }
        w
    })
    .unwrap();
    let z = DVector::from_vec(vec![1.0, 0.0]);
    assert!(moore_check(&form, &z) > 0.1);
    let reg = regular_element(&form, 8, 1);
    assert_eq!(reg.rank, 2);
    assert!(moore_check(&form, &reg.z) < 1e-12);
}
