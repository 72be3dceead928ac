//! Solves one top-face fibre of the Fermat cubic by continuation in `t`.

use gsl_fibration::family::GlobalFamily;
use gsl_fibration::solver::{continuation, ContinuationPolicy, SolverOptions};
use gsl_fibration::spectral::Grid;
use gsl_fibration::toric::ToricKahlerPotential;
use gsl_fibration::transport::{default_delta_sing, FibreProblem, FlowSettings, LagrangianGraph, ReferenceTorus, StepMode};

fn main() -> gsl_fibration::Result<()> {
    let t: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1e-3);
    let radius: f64 = std::env::args().nth(2).and_then(|a| a.parse().ok()).unwrap_or(1.0);
    let family = GlobalFamily::fermat(2)?;
    let chart = family.chart(0)?;
    let metric = ToricKahlerPotential::fubini_study(2);
    let reference = ReferenceTorus::top(&metric, 0, &[radius])?;
    let settings = FlowSettings {
        mode: StepMode::Adaptive { tol: 1e-10 },
        delta_sing: default_delta_sing(t, 1),
    };
    let problem = FibreProblem::new(chart, metric, reference.clone(), settings)?;
    let graph = LagrangianGraph::flat(reference, Grid::new(1, 128));
    let path = continuation(&problem, &graph, t, &SolverOptions::default(), &ContinuationPolicy::default())?;
    for step in &path {
        println!(
            "u = {:.3e}  iterations = {}  residual = {:.2e}  |h|_C1 = {:.3e}  theta1 = {:+.6}",
            step.u,
            step.report.newton_iterations,
            step.report.residual_history.last().unwrap(),
            step.report.norms.c1_norm(),
            step.report.theta1
        );
    }
    let last = path.last().unwrap();
    println!("r0 = {:.3e}, C_est = {:.3e}", last.report.r0, last.report.c_est);
    Ok(())
}
