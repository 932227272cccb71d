
use nalgebra::DVector;
use osculum::subspaces::{
    intersection, max_angle, principal_angles, same_subspace, span_of, sum, DEFAULT_RANK_TOL,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_vectors(count: usize, ambient: usize, rng: &mut ChaCha8Rng) -> Vec<DVector<f64>> {
    (0..count)
        .map(|_| DVector::from_fn(ambient, |_, _| StandardNormal.sample(rng)))
        .collect()
}

/// Two generic subspaces that share `shared` random directions.
fn overlapping(
    ambient: usize,
    shared: usize,
    only_a: usize,
    only_b: usize,
    seed: u64,
) -> (Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common = random_vectors(shared, ambient, &mut rng);
    let mut a = common.clone();
    a.extend(random_vectors(only_a, ambient, &mut rng));
    let mut b = common;
    b.extend(random_vectors(only_b, ambient, &mut rng));
    (a, b)
}

proptest! {
    #[test]
    fn dimension_formula(
        ambient in 2usize..10,
        shared in 0usize..4,
        only_a in 0usize..4,
        only_b in 0usize..4,
        seed in any::<u64>(),
    ) {
        prop_assume!(shared + only_a + only_b <= ambient);
        let (a, b) = overlapping(ambient, shared, only_a, only_b, seed);
        let a = span_of(&a, ambient, DEFAULT_RANK_TOL).unwrap();
        let b = span_of(&b, ambient, DEFAULT_RANK_TOL).unwrap();
        let s = sum(&a, &b, DEFAULT_RANK_TOL).unwrap();
        let i = intersection(&a, &b, 1e-6).unwrap();
        prop_assert_eq!(s.dim() + i.dim(), a.dim() + b.dim());
        prop_assert_eq!(i.dim(), shared);
    }

    #[test]
    fn span_is_idempotent(ambient in 1usize..10, count in 0usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vs = random_vectors(count, ambient, &mut rng);
        let s = span_of(&vs, ambient, DEFAULT_RANK_TOL).unwrap();
        let again = span_of(&s.vectors(), ambient, DEFAULT_RANK_TOL).unwrap();
        prop_assert_eq!(s.dim(), count.min(ambient));
        prop_assert!(same_subspace(&s, &again, 1e-10));
    }

    #[test]
    fn complement_is_orthogonal(ambient in 1usize..10, count in 0usize..8, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = span_of(&random_vectors(count, ambient, &mut rng), ambient, DEFAULT_RANK_TOL).unwrap();
        let c = s.orthogonal_complement();
        prop_assert_eq!(s.dim() + c.dim(), ambient);
        prop_assert!((s.basis().transpose() * c.basis()).amax() < 1e-12);
    }
}

#[test]
fn angles_between_coordinate_and_tilted_lines() {
    let theta: f64 = 0.3;
    let a = span_of(&[DVector::from_vec(vec![1.0, 0.0])], 2, DEFAULT_RANK_TOL).unwrap();
    let b = span_of(&[DVector::from_vec(vec![theta.cos(), theta.sin()])], 2, DEFAULT_RANK_TOL).unwrap();
    let angles = principal_angles(&a, &b).unwrap();
    assert!((angles[0] - theta).abs() < 1e-14);
    assert!((max_angle(&a, &b) - theta).abs() < 1e-14);
}
