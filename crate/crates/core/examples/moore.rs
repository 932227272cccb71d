//! Regular elements of bilinear forms and the Moore inclusion `β(V, ker β_Z) ⊂ β_Z(U)`.

use osculum::bilinear::{moore_check, regular_element, BilinearForm};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (dims, rank) in [((3, 4, 2), None), ((4, 4, 5), Some(2)), ((5, 3, 6), Some(3))] {
        let form = BilinearForm::random(dims.0, dims.1, dims.2, rank, &mut rng);
        let reg = regular_element(&form, 32, 1);
        println!(
            "dims {dims:?}, built from {rank:?} rank-one terms: regular rank {}, Moore residual {:.2e}",
            reg.rank,
            moore_check(&form, &reg.z)
        );
    }
}
