//! Measures how well the transport flow preserves the Kähler form on pairs of
//! tangent vectors near a top fibre of the quartic.

use gsl_fibration::atlas::{fibre_problem, AtlasConfig, BasePoint, FibreKind};
use gsl_fibration::family::GlobalFamily;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> gsl_fibration::Result<()> {
    let t = 1e-3;
    let cfg = AtlasConfig::default();
    let family = GlobalFamily::fermat(3)?;
    let base = BasePoint::from_radii(3, 0, &[0.6, 0.8], t, &cfg.regions)?;
    let (problem, u) = fibre_problem(&family, &base, FibreKind::Top, t, &cfg)?;
    let problem = problem.with_fixed_steps(cfg.grid(2), u, 1e-12)?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let theta: Vec<f64> = (0..2).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
        let a: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (src, tgt) = problem.symplectic_pair(&theta, &problem.reference.mu0, &a, &b, u, 1e-4)?;
        println!("omega before {src:+.10e}  after {tgt:+.10e}  relative change {:.1e}", ((tgt - src) / src).abs());
    }
    Ok(())
}
