//! Solves one vertex-region fibre of the Fermat cubic by the homotopy in `s`
//! from the toric local model.

use gsl_fibration::family::GlobalFamily;
use gsl_fibration::solver::{continuation, ContinuationPolicy, SolverOptions};
use gsl_fibration::spectral::Grid;
use gsl_fibration::toric::ToricKahlerPotential;
use gsl_fibration::transport::{default_delta_sing, FibreProblem, FlowSettings, LagrangianGraph, ReferenceTorus, StepMode};

fn main() -> gsl_fibration::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<f64>().ok());
    let t = args.next().flatten().unwrap_or(1e-3);
    let radius = args.next().flatten().unwrap_or(0.2);
    let family = GlobalFamily::fermat(2)?;
    let chart = family.chart(0)?;
    let metric = ToricKahlerPotential::fubini_study(2);
    let reference = ReferenceTorus::vertex(&metric, 0, t * chart.t_scale, &[radius])?;
    let settings = FlowSettings {
        mode: StepMode::Adaptive { tol: 1e-10 },
        delta_sing: default_delta_sing(t, 1),
    };
    let problem = FibreProblem::new(chart, metric, reference.clone(), settings)?;
    let graph = LagrangianGraph::flat(reference, Grid::new(1, 128));
    let path = continuation(&problem, &graph, 1.0, &SolverOptions::default(), &ContinuationPolicy::default())?;
    let t_hat = t / (radius * radius);
    println!("t_hat = {t_hat:.3e}");
    for step in &path {
        println!(
            "s = {:.4}  iterations = {}  residual = {:.2e}  |h|_C1 = {:.3e}  theta1 = {:+.6}",
            step.u,
            step.report.newton_iterations,
            step.report.residual_history.last().unwrap(),
            step.report.norms.c1_norm(),
            step.report.theta1
        );
    }
    Ok(())
}
