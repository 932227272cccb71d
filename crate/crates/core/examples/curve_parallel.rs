//! A flat submanifold swept by a curve's parallel normal frame: `p = s = 1`, `ν = n − 1`.

use std::collections::BTreeMap;

use osculum::catalog;
use osculum::geometry::sectional;
use osculum::nonparallel::nonparallel_at;
use osculum::subspaces::DEFAULT_RANK_TOL;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> osculum::Result<()> {
    let params = BTreeMap::from([("n".to_string(), "3".to_string()), ("N".to_string(), "8".to_string())]);
    let entry = catalog::build("curve-parallel", &params)?;
    let cp = catalog::CheckParams { tol: DEFAULT_RANK_TOL, h: 1e-3 };
    for c in &entry.checks {
        if let catalog::CheckKind::Once(f) = &c.kind {
            println!("{}: {:.2e}", c.invariant, f(&cp)?);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..3 {
        let x = entry.sample(&mut rng);
        let (geom, nd) = nonparallel_at(&entry.chart, &x, DEFAULT_RANK_TOL)?;
        let worst = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .filter(|(a, b)| a < b)
            .map(|(a, b)| sectional(&geom, a, b).abs())
            .fold(0.0, f64::max);
        println!("p = {}, s = {}, nu = {}, max |K| = {worst:.1e}", nd.p, nd.s, nd.nu);
    }
    Ok(())
}
