//! Command-line front end: `gslfib <subcommand> --config run.toml`.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gsl_fibration::cli::{
    cmd_amoeba, cmd_build_fibration, cmd_monodromy, cmd_solve_fibre, cmd_verify, exit_code, Overrides, RunConfig,
    Session,
};

#[derive(Parser)]
#[command(version, about = "Special Lagrangian torus fibres near the large complex limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `t` (and any `t_list`) of the config.
    #[arg(long, global = true)]
    t: Option<f64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write chart coordinates of the solved fibres as CSV.
    #[arg(long, global = true)]
    plot_data: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the fibre over the `[base]` point.
    SolveFibre,
    /// Sample the boundary of the simplex and solve every top and vertex fibre.
    BuildFibration,
    /// Monodromy of the `[monodromy]` loop.
    Monodromy,
    /// Moment image of the singular set.
    Amoeba,
    /// Run the invariant suite.
    Verify,
}

fn run(cli: &Cli, out: &mut dyn Write) -> gsl_fibration::Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| gsl_fibration::Error::config("--config", "required"))?;
    let ov = Overrides {
        t: cli.t,
        out: cli.out.clone(),
        jobs: cli.jobs,
        seed: cli.seed,
        plot_data: cli.plot_data,
    };
    let session = Session::new(RunConfig::load(path)?, &ov)?;
    match cli.command {
        Command::SolveFibre => cmd_solve_fibre(&session, out),
        Command::BuildFibration => cmd_build_fibration(&session, out),
        Command::Monodromy => cmd_monodromy(&session, out),
        Command::Amoeba => cmd_amoeba(&session, out),
        Command::Verify => cmd_verify(&session, out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli, &mut std::io::stdout().lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
