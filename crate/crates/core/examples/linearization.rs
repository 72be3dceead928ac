//! Compares the analytic linearization of the phase operator with central
//! differences on a random graph over a top fibre of the cubic.

use gsl_fibration::atlas::{fibre_problem, AtlasConfig, BasePoint, FibreKind};
use gsl_fibration::family::GlobalFamily;
use gsl_fibration::solver::{assemble_f, linearization_coefficients, random_field};
use gsl_fibration::transport::LagrangianGraph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> gsl_fibration::Result<()> {
    let t = 1e-3;
    let cfg = AtlasConfig::default();
    let family = GlobalFamily::fermat(2)?;
    let base = BasePoint::from_radii(2, 0, &[0.6], t, &cfg.regions)?;
    let (problem, u) = fibre_problem(&family, &base, FibreKind::Top, t, &cfg)?;
    let grid = cfg.grid(1);
    let problem = problem.with_fixed_steps(grid, u, 1e-10)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let graph = LagrangianGraph::new(problem.reference.clone(), random_field(grid, 0.02, &mut rng))?;
    let v = random_field(grid, 1.0, &mut rng);
    let analytic = linearization_coefficients(&problem, &graph, u, None)?.apply(&v);
    for eps in [1e-3, 1e-4, 1e-5, 1e-6] {
        let shifted = |s: f64| LagrangianGraph {
            reference: graph.reference.clone(),
            h: graph.h.axpy(s, &v),
        };
        let fp = assemble_f(&problem, &shifted(eps), u)?;
        let fm = assemble_f(&problem, &shifted(-eps), u)?;
        let fd: Vec<f64> = fp.values.iter().zip(&fm.values).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let err = analytic.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        println!("eps = {eps:.0e}  relative error {:.2e}", err / scale);
    }
    Ok(())
}
