//! Straight normal fibers over a holomorphic curve: `𝒮` has rank two and is
//! constant along the rulings, which are not in the relative nullity.

use std::collections::BTreeMap;

use osculum::catalog;
use osculum::nonparallel::nonparallel_at;
use osculum::ruled::{gamma_tensor, SplittingSpec};
use osculum::subspaces::DEFAULT_RANK_TOL;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> osculum::Result<()> {
    let params = BTreeMap::from([("shear".to_string(), "0.5".to_string())]);
    let entry = catalog::build("section4-ruled", &params)?;
    let cp = osculum::catalog::CheckParams { tol: DEFAULT_RANK_TOL, h: 1e-3 };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let x = entry.sample(&mut rng);
        let (_, nd) = nonparallel_at(&entry.chart, &x, DEFAULT_RANK_TOL)?;
        let spec = SplittingSpec::new(entry.chart.clone(), DEFAULT_RANK_TOL, 1e-3);
        let k = gamma_tensor(&spec, &x)?.k;
        println!("x = {x:.3?}");
        println!("  p = {}, s = {}, dim D = {}, nu = {}, dim Gamma = {k}", nd.p, nd.s, nd.d(), nd.nu);
        for c in &entry.checks {
            if let osculum::catalog::CheckKind::PerPoint(f) = &c.kind {
                println!("  {:<48} {:.2e}", c.invariant, f(&x, &cp)?);
            }
        }
    }
    Ok(())
}
