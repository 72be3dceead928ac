//! The toric local model `prod z_k = -t`: its standard tori are already
//! special Lagrangian, so the phase residual of the flat graph vanishes.

use gsl_fibration::atlas::{fibre_problem, AtlasConfig, BasePoint, FibreKind, MetricChoice};
use gsl_fibration::family::GlobalFamily;
use gsl_fibration::solver::assemble_f;
use gsl_fibration::transport::LagrangianGraph;

fn main() -> gsl_fibration::Result<()> {
    let t = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1e-3);
    for n in 1..=3usize {
        let family = GlobalFamily::local_model(n + 1)?;
        for metric in [MetricChoice::Euclidean, MetricChoice::FubiniStudy] {
            let cfg = AtlasConfig {
                grid_size: Some(if n == 3 { 16 } else { 64 }),
                metric,
                ..AtlasConfig::default()
            };
            let radii: Vec<f64> = (0..n).map(|k| 0.3 + 0.1 * k as f64).collect();
            let base = BasePoint::from_radii(n + 1, 0, &radii, t, &cfg.regions)?;
            let (problem, u) = fibre_problem(&family, &base, FibreKind::Vertex, t, &cfg)?;
            let graph = LagrangianGraph::flat(problem.reference.clone(), cfg.grid(n));
            let residual = assemble_f(&problem, &graph, u)?.sup_norm();
            println!("n = {n}  metric = {metric:?}  |F(0, 1)| = {residual:.2e}");
        }
    }
    Ok(())
}
