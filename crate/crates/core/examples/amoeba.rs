//! Moment image of the singular set of `X_0` for the Fermat quartic; the
//! cubic's is empty.

use gsl_fibration::atlas::{amoeba, amoeba_clusters};
use gsl_fibration::family::GlobalFamily;

fn main() -> gsl_fibration::Result<()> {
    let density = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(4);
    let t = 1e-3;
    for degree in [2, 3] {
        let family = GlobalFamily::fermat(degree)?;
        let pts = amoeba(&family, t, density);
        let clusters = amoeba_clusters(&pts, 1e-9);
        println!("{}: {} points in {} clusters", family.name, pts.len(), clusters.len());
        for (centre, count) in clusters.iter().take(6) {
            let c: Vec<String> = centre.iter().map(|v| format!("{v:.4}")).collect();
            println!("  [{}] x {count}", c.join(", "));
        }
    }
    Ok(())
}
