//! Builds the sampled fibration described by a run config and prints the
//! coverage of the regular region.

use std::path::PathBuf;

use gsl_fibration::cli::{build_fibration, Overrides, RunConfig, Session};

fn main() -> gsl_fibration::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/fermat-cubic.toml"));
    let session = Session::new(RunConfig::load(&path)?, &Overrides::default())?;
    for t in session.config.ts() {
        let (summary, _, _) = session.install(|| build_fibration(&session, t))??;
        println!(
            "t = {t:.1e}: {} sampled, {} top, {} vertex, {} overlap ({} matched), {} excluded",
            summary.sampled, summary.top, summary.ver, summary.overlap, summary.matched, summary.excluded
        );
        println!(
            "  coverage {:.1}%  failures {}  max |h| {:.2e}",
            100.0 * summary.coverage(),
            summary.failures,
            summary.max_h
        );
    }
    Ok(())
}
