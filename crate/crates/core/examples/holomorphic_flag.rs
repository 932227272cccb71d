//! Higher normal spaces of a holomorphic curve: every `N_k` is a plane.

use std::collections::BTreeMap;

use osculum::catalog;
use osculum::geometry::{geometry_residuals, point_geometry};
use osculum::subspaces::DEFAULT_RANK_TOL;

fn main() -> osculum::Result<()> {
    let params = BTreeMap::from([("m".to_string(), "3".to_string())]);
    let entry = catalog::build("holomorphic-curve", &params)?;
    let x = [0.21, -0.34];
    let geom = point_geometry(&entry.chart, &x, 5, DEFAULT_RANK_TOL)?;
    println!("{} in R^{} at {x:?}", entry.name, geom.ambient_dim());
    println!("normal flag dimensions: {:?}", geom.flag_dims());
    let res = geometry_residuals(&geom);
    println!("{res:#?}");
    Ok(())
}
