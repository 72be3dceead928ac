//! Periods of a one-dimensional fibration: the fibre period `pi_1` and the
//! period `pi_2` of a transversal closing over the base circle.

use serde::{Deserialize, Serialize};

use super::fibre::{record_torus, AtlasConfig, FibreRecord};
use super::monodromy::{measured_windings, transition};
use crate::error::{Error, Result};
use crate::family::chart::normalized_form_from_gradient;
use crate::family::{FamilyChart, GlobalFamily};
use crate::linalg::C64;
use crate::spectral::spectrum;
use crate::transport::{form_values, TransportedTorus};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticPeriods {
    /// `pi_1 = oint e^{-i theta_1} Omega_t` over the first fibre.
    pub pi1: C64,
    /// Transversal period in the same normalization, with `Im(pi_2 / pi_1) > 0`.
    pub pi2: C64,
    pub tau: C64,
    /// The fibre period measured on every fibre of the loop.
    pub fibre_periods: Vec<C64>,
}

const GAUSS_NODES: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

/// `oint t Omega_t` along the fibre circle in the direction of its angle.
fn fibre_integral(chart: &FamilyChart, torus: &TransportedTorus) -> Result<C64> {
    let vals = form_values(chart, torus)?;
    let n = vals.len() as f64;
    Ok(vals.iter().sum::<C64>() * (std::f64::consts::TAU / n))
}

/// `int_0^theta t Omega_t` along the fibre, spectrally.
fn fibre_partial_integral(chart: &FamilyChart, torus: &TransportedTorus, theta: f64) -> Result<C64> {
    let vals = form_values(chart, torus)?;
    let grid = torus.grid;
    let c = spectrum(grid, &vals);
    let mut acc = c[0] * theta;
    for (i, ci) in c.iter().enumerate().skip(1) {
        let m = grid.freq(grid.multi_index(i)[0]) as f64;
        if grid.is_nyquist(&grid.multi_index(i)) {
            continue;
        }
        acc += ci * (C64::from_polar(1.0, m * theta) - 1.0) / C64::new(0.0, m);
    }
    Ok(acc)
}

/// Pushes a chart-`a` point and tangent vector to chart `b`.
fn change_chart(family: &GlobalFamily, a: usize, b: usize, z: &[C64], v: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let x = family.to_homogeneous(a, z);
    let mut dx = family.to_homogeneous(a, v);
    dx[a] = C64::new(0.0, 0.0);
    let zb = family.to_chart(b, &x);
    let vb = (0..x.len())
        .filter(|&k| k != b)
        .map(|k| dx[k] / x[b] - x[k] * dx[b] / (x[b] * x[b]))
        .collect();
    (zb, vb)
}

fn tangent(chart: &FamilyChart, z: &[C64], t: f64, s: f64, k: usize, vk: C64) -> Vec<C64> {
    let (_, grad) = chart.evaluate_defining(z, t, s);
    let m = 1 - k;
    let mut v = vec![C64::new(0.0, 0.0); 2];
    v[k] = vk;
    v[m] = -grad[k] * vk / grad[m];
    v
}

/// `int t Omega_t` along a path on the curve from `a` to `b` (both in the
/// chart), parametrized log-linearly in the better-conditioned coordinate.
fn segment_integral(chart: &FamilyChart, a: &[C64], b: &[C64], t: f64, s: f64, pieces: usize) -> Result<C64> {
    let (_, grad) = chart.evaluate_defining(a, t, s);
    // solve for m, march in k
    let m = FamilyChart::residue_index(&grad);
    let k = 1 - m;
    let la = a[k].ln();
    let mut lb = b[k].ln();
    lb.im = la.im + (lb.im - la.im + std::f64::consts::PI).rem_euclid(std::f64::consts::TAU) - std::f64::consts::PI;
    let dl = lb - la;
    let mut z = a.to_vec();
    let mut total = C64::new(0.0, 0.0);
    let h = 1.0 / pieces as f64;
    let solve_at = |lam: f64, z: &mut Vec<C64>| -> Result<()> {
        z[k] = (la + dl * lam).exp();
        for _ in 0..30 {
            let (p, g) = chart.evaluate_defining(z, t, s);
            let d = p / g[m];
            z[m] -= d;
            if d.norm() <= 1e-15 * z[m].norm().max(t) {
                return Ok(());
            }
        }
        Err(Error::OpenPath("transversal left the curve".into()))
    };
    for piece in 0..pieces {
        let lo = piece as f64 * h;
        for (x, w) in GAUSS_NODES {
            let lam = lo + 0.5 * h * (x + 1.0);
            solve_at(lam, &mut z)?;
            let v = tangent(chart, &z, t, s, k, z[k] * dl);
            let (_, g) = chart.evaluate_defining(&z, t, s);
            total += normalized_form_from_gradient(&g, &[v], None)? * (0.5 * h * w);
        }
    }
    solve_at(1.0, &mut z)?;
    let miss = (z[m] - b[m]).norm() / b[m].norm().max(t);
    if miss > 1e-6 {
        return Err(Error::OpenPath(format!("transversal switched branch (mismatch {miss:.1e})")));
    }
    Ok(total)
}

/// Periods of a closed loop of solved one-dimensional fibres, listed in
/// loop order; the loop returns from the last record to the first.
pub fn elliptic_periods(family: &GlobalFamily, records: &[FibreRecord], cfg: &AtlasConfig) -> Result<EllipticPeriods> {
    if family.fibre_dim() != 1 {
        return Err(Error::config("family", "periods need one-dimensional fibres"));
    }
    if records.len() < 3 {
        return Err(Error::OpenPath("fewer than three fibres".into()));
    }
    let t = records[0].t;
    let mut tori = Vec::with_capacity(records.len());
    let mut charts = Vec::with_capacity(records.len());
    for r in records {
        let (_, torus) = record_torus(family, r, cfg)?;
        tori.push(torus);
        charts.push(family.chart(r.base.chart)?);
    }
    // the fibration must close with trivial monodromy
    let windings: Vec<_> = tori.iter().zip(records).map(|(tr, r)| measured_windings(tr, r.base.chart)).collect();
    let mut mono = 1.0;
    for p in 0..records.len() {
        let (x, _) = transition(&windings[p], &windings[(p + 1) % records.len()], p)
            .map_err(|e| Error::OpenPath(format!("fibres {p} and {} do not connect: {e}", p + 1)))?;
        mono *= x[(0, 0)];
    }
    if mono != 1.0 {
        return Err(Error::OpenPath(format!("monodromy {mono} around the base circle")));
    }
    let fibre_periods: Vec<C64> = records
        .iter()
        .zip(&tori)
        .zip(&charts)
        .map(|((r, tr), ch)| Ok(fibre_integral(ch, tr)? * C64::from_polar(1.0 / t, -r.theta1)))
        .collect::<Result<_>>()?;
    let pi1 = fibre_periods[0];

    // transversal: nearest grid points on consecutive fibres
    let len = records.len();
    let mut idx = 0usize;
    let mut sigma = C64::new(1.0, 0.0);
    let mut total = C64::new(0.0, 0.0);
    for p in 0..len {
        let q = (p + 1) % len;
        let (ap, aq) = (records[p].base.chart, records[q].base.chart);
        let start = tori[p].psi[idx].clone();
        let mapped: Vec<Vec<C64>> = tori[q]
            .psi
            .iter()
            .map(|z| family.to_chart(ap, &family.to_homogeneous(aq, z)))
            .collect();
        let dist = |z: &Vec<C64>| z.iter().zip(&start).map(|(a, b)| (a.ln() - b.ln()).norm_sqr()).sum::<f64>();
        let next = (0..mapped.len())
            .min_by(|&a, &b| dist(&mapped[a]).partial_cmp(&dist(&mapped[b])).unwrap())
            .unwrap();
        let (tp, sp) = (tori[p].t, tori[p].s);
        total += sigma * segment_integral(&charts[p], &start, &mapped[next], tp, sp, 16)? / t;
        if ap != aq {
            // relate the residue forms of the two charts on one tangent vector
            let z = &mapped[next];
            let v = tangent(&charts[p], z, tp, sp, 0, C64::new(1.0, 0.0));
            let (zq, vq) = change_chart(family, ap, aq, z, &v);
            let (_, gp) = charts[p].evaluate_defining(z, tp, sp);
            let (_, gq) = charts[q].evaluate_defining(&zq, tori[q].t, tori[q].s);
            let ratio = normalized_form_from_gradient(&gp, &[v], None)? / normalized_form_from_gradient(&gq, &[vq], None)?;
            if (ratio.norm() - 1.0).abs() > 1e-8 {
                return Err(Error::Invariant(format!("residue forms differ by {ratio} between charts")));
            }
            sigma *= ratio;
        }
        idx = next;
    }
    if (sigma - 1.0).norm() > 1e-8 {
        return Err(Error::Invariant(format!("chart factors do not close: {sigma}")));
    }
    // closing arc on the first fibre back to grid point 0
    let theta = tori[0].grid.theta(idx)[0];
    total -= fibre_partial_integral(&charts[0], &tori[0], theta)? / t;
    let mut pi2 = total * C64::from_polar(1.0, -records[0].theta1);
    if (pi2 / pi1).im < 0.0 {
        pi2 = -pi2;
    }
    Ok(EllipticPeriods {
        pi1,
        pi2,
        tau: pi2 / pi1,
        fibre_periods,
    })
}
