//! Matches a top fibre and a vertex fibre of the Fermat cubic over the same
//! overlap base point.

use gsl_fibration::atlas::{reconcile_overlap, solve_fibre, AtlasConfig, BasePoint, FibreKind};
use gsl_fibration::family::GlobalFamily;

fn main() -> gsl_fibration::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().ok());
    let t = args.next().flatten().unwrap_or(1e-3);
    let radius = args.next().flatten().unwrap_or(0.2);
    let family = GlobalFamily::fermat(2)?;
    let cfg = AtlasConfig::default();
    let base = BasePoint::from_radii(0, 1, &[radius], t, &cfg.regions)?;
    println!("base region: {:?}", base.region);
    let top = solve_fibre(&family, &base, FibreKind::Top, t, &cfg)?;
    let ver = solve_fibre(&family, &base, FibreKind::Vertex, t, &cfg)?;
    println!("top: residual {:.2e}, end-check {:?}", top.residual, top.end_check);
    println!("ver: residual {:.2e}, end-check {:?}", ver.residual, ver.end_check);
    let m = reconcile_overlap(&family, &top, &ver, &cfg, 1e-6, 10.0)?;
    println!(
        "dlog r = {:?}  distance = {:.2e}  t_hat = {:.3e}  iterations = {}  success = {}",
        m.dlog_r, m.distance, m.t_hat, m.iterations, m.success
    );
    Ok(())
}
