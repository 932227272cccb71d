//! The tensor `φ`, its span `𝒮`, the distribution `D` and the case label on helix products.

use std::collections::BTreeMap;

use osculum::catalog;
use osculum::nonparallel::{classify_case, nonparallel_at};
use osculum::ruled::{gamma_tensor, SplittingSpec};
use osculum::subspaces::DEFAULT_RANK_TOL;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> osculum::Result<()> {
    for (h, j, l) in [(2, 1, 0), (1, 1, 1), (2, 1, 1)] {
        let params = BTreeMap::from([
            ("helices".to_string(), h.to_string()),
            ("flat".to_string(), j.to_string()),
            ("parabolas".to_string(), l.to_string()),
        ]);
        let entry = catalog::build("helix-product", &params)?;
        let x = entry.sample(&mut ChaCha8Rng::seed_from_u64(4));
        let (_, nd) = nonparallel_at(&entry.chart, &x, DEFAULT_RANK_TOL)?;
        let k = if nd.s > 1 && nd.s < nd.p {
            let spec = SplittingSpec::new(entry.chart.clone(), DEFAULT_RANK_TOL, 1e-3);
            Some(gamma_tensor(&spec, &x)?.k)
        } else {
            None
        };
        let class = classify_case(&nd, k)?;
        println!(
            "helix-product({h},{j},{l}): n={} p={} s={} dim D={} nu={} k={k:?} -> {}",
            nd.n,
            nd.p,
            nd.s,
            nd.d(),
            nd.nu,
            class.label
        );
        for c in &class.claims {
            println!("    {} [{}]", c.claim, if c.passed { "ok" } else { "violated" });
        }
    }
    Ok(())
}
