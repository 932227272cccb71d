//! Builds the ruled extension `F(x, λ) = f(x) + Σ λ_a Λ_a(x)` and checks it.

use std::collections::BTreeMap;

use osculum::catalog;
use osculum::ruled::{build_extension, gamma_tensor, lambda_delta, verify_extension_at, SplittingSpec};
use osculum::subspaces::DEFAULT_RANK_TOL;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> osculum::Result<()> {
    let entry = catalog::build("helix-product", &BTreeMap::new())?;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let x = entry.sample(&mut rng);
    let spec = SplittingSpec::new(entry.chart.clone(), DEFAULT_RANK_TOL, 1e-3);

    let gd = gamma_tensor(&spec, &x)?;
    let ld = lambda_delta(&gd)?;
    let (lo, hi) = gd.band();
    println!("dim Gamma = {} within [{lo}, {hi}], r = dim Lambda = {}", gd.k, ld.r);
    println!("Lambda meets TM at angle {:.3}", ld.transversality);

    let probes: Vec<Vec<f64>> = (0..4).map(|_| entry.sample(&mut rng)).collect();
    let ext = build_extension(&spec, &x, &probes, 0.1)?;
    println!("extension of dimension {} with fiber radius {}", ext.dim(), ext.radius);
    let check = verify_extension_at(&ext, &x, 1)?;
    println!("{check:#?}");
    Ok(())
}
