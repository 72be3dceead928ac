//! Lattice periods of the Fermat cubic from a closed circle of fibres, with
//! the modular invariant compared against the Hesse pencil.

use gsl_fibration::atlas::{base_circle_loop, elliptic_periods, solve_fibre, AtlasConfig};
use gsl_fibration::family::GlobalFamily;
use gsl_fibration::linalg::C64;

/// `j(tau)` from the q-expansions of `E_4` and the discriminant.
fn j_invariant(tau: C64) -> C64 {
    let q = (C64::new(0.0, std::f64::consts::TAU) * tau).exp();
    let mut e4 = C64::new(1.0, 0.0);
    let mut delta = q;
    let mut qn = C64::new(1.0, 0.0);
    for n in 1..40u32 {
        qn *= q;
        let sigma3: f64 = (1..=n).filter(|d| n % d == 0).map(|d| (d as f64).powi(3)).sum();
        e4 += qn * (240.0 * sigma3);
        delta *= (C64::new(1.0, 0.0) - qn).powi(24);
    }
    e4 * e4 * e4 / delta
}

fn main() -> gsl_fibration::Result<()> {
    let t: f64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1e-3);
    let per_segment: usize = std::env::args().nth(2).and_then(|a| a.parse().ok()).unwrap_or(6);
    let family = GlobalFamily::fermat(2)?;
    let cfg = AtlasConfig::default();
    let points = base_circle_loop(&family, t, &cfg, per_segment)?;
    let records = points
        .iter()
        .map(|p| solve_fibre(&family, &p.base, p.kind, t, &cfg))
        .collect::<gsl_fibration::Result<Vec<_>>>()?;
    let per = elliptic_periods(&family, &records, &cfg)?;
    println!("{} fibres", records.len());
    println!("pi_1 = {:.15e} {:+.3e}i", per.pi1.re, per.pi1.im);
    println!("pi_2 = {:.15e} {:+.15e}i", per.pi2.re, per.pi2.im);
    println!("tau  = {:.12} {:+.12}i", per.tau.re, per.tau.im);
    let spread = per
        .fibre_periods
        .iter()
        .map(|p| (p - per.pi1).norm() / per.pi1.norm())
        .fold(0.0, f64::max);
    println!("fibre period spread {spread:.2e}");
    let lambda = -1.0 / (3.0 * t);
    let l3 = lambda.powi(3);
    let j_hesse = 27.0 * l3 * (l3 + 8.0).powi(3) / (l3 - 1.0).powi(3);
    let j = j_invariant(per.tau);
    println!("j(tau) = {:.10e} {:+.3e}i   Hesse j = {:.10e}", j.re, j.im, j_hesse);
    Ok(())
}
