//! Monodromy of the Fermat quartic around the edge cluster of the amoeba on
//! the edge `{mu_0 = mu_1 = 0}`, by fibre continuation and by chart
//! combinatorics.

use std::time::Instant;

use gsl_fibration::atlas::{edge_loop, monodromy, monodromy_combinatorial, AtlasConfig};
use gsl_fibration::family::GlobalFamily;

fn main() -> gsl_fibration::Result<()> {
    let t: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1e-3);
    let per_segment: usize = std::env::args().nth(2).and_then(|a| a.parse().ok()).unwrap_or(4);
    let family = GlobalFamily::fermat(3)?;
    let cfg = AtlasConfig {
        grid_size: Some(32),
        ..AtlasConfig::default()
    };
    let points = edge_loop(&family, (0, 1), 3, t, &cfg, per_segment)?;
    println!("{} base points on the loop", points.len());
    let comb = monodromy_combinatorial(&family, &points, t)?;
    println!("chart combinatorics: {:?}", comb.matrix);
    let start = Instant::now();
    let cont = monodromy(&family, &points, t, &cfg)?;
    println!(
        "continuation:        {:?}  (det {}, max deviation {:.1e}, {:.1} s)",
        cont.matrix,
        cont.determinant,
        cont.max_deviation,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}
