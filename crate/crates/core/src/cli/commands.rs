//! The five subcommands. Each writes its record streams under the output
//! directory and a human-readable report to the given writer.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;

use super::config::RunConfig;
use super::records::{write_csv, Header, RecordStream};
use crate::atlas::{
    amoeba, build_top_fibration, build_vertex_fibration, fibre_problem, monodromy, monodromy_combinatorial,
    reconcile_overlap, record_torus, solve_fibre, AtlasConfig, BasePoint, FibreKind, FibreRecord, LoopPoint,
    MatchReport, RegionTag,
};
use crate::error::{Error, Result};
use crate::family::GlobalFamily;
use crate::solver::linearization_coefficients;
use crate::solver::FlatPreconditioner;
use crate::spectral::FourierField;
use crate::transport::LagrangianGraph;

/// Process exit code of a failure: 1 for bad input, 2 for numerical
/// failures, 3 for violated invariants.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::Io(_) => 1,
        Error::Invariant(_) => 3,
        _ => 2,
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub t: Option<f64>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub plot_data: bool,
}

/// A validated configuration with its family and hash.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: RunConfig,
    pub family: GlobalFamily,
    pub hash: String,
    pub plot_data: bool,
}

impl Session {
    pub fn new(mut config: RunConfig, ov: &Overrides) -> Result<Self> {
        if let Some(t) = ov.t {
            config.t = Some(t);
            config.t_list.clear();
        }
        if let Some(out) = &ov.out {
            config.out = Some(out.clone());
        }
        if let Some(j) = ov.jobs {
            config.jobs = Some(j);
        }
        if let Some(seed) = ov.seed {
            config.seed = Some(seed);
        }
        if let Some(seed) = config.seed {
            config.atlas.solver.seed = seed;
        }
        if config.jobs == Some(0) {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        let family = config.validate()?;
        let hash = config.hash();
        Ok(Session {
            config,
            family,
            hash,
            plot_data: ov.plot_data,
        })
    }

    fn atlas(&self) -> &AtlasConfig {
        &self.config.atlas
    }

    fn header(&self, t: f64) -> Header<'_> {
        Header {
            kind: "header",
            config_hash: &self.hash,
            version: env!("CARGO_PKG_VERSION"),
            family: &self.family.name,
            metric: serde_json::to_value(self.atlas().metric)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            t,
        }
    }

    /// `out/<stem>.<ext>`, with the parameter appended when several `t` run.
    fn path(&self, stem: &str, ext: &str, t: f64) -> PathBuf {
        let name = if self.config.ts().len() > 1 {
            format!("{stem}_t{t:e}.{ext}")
        } else {
            format!("{stem}.{ext}")
        };
        self.config.out_dir().join(name)
    }

    /// Runs `f` on a pool of `jobs` threads, or the global pool.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.config.jobs {
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::config("jobs", e.to_string()))?;
                Ok(pool.install(f))
            }
            None => Ok(f()),
        }
    }
}

fn report_line(r: &FibreRecord) -> String {
    format!(
        "{:>6} face {} chart {} radii {:?} region {:?}: t_hat {:.3e}, residual {:.3e} after {} Newton steps, |h|_C1 {:.3e}, theta_1 {:+.9}, end-check {} (phase {:.1e}, symplectic {:.1e})",
        format!("{:?}", r.kind).to_lowercase(),
        r.base.face,
        r.base.chart,
        r.base.radii.iter().map(|v| (v * 1e6).round() / 1e6).collect::<Vec<_>>(),
        r.base.region,
        r.t_hat,
        r.residual,
        r.report.newton_iterations,
        r.report.norms.c1_norm(),
        r.theta1,
        if r.end_check.passed { "passed" } else { "FAILED" },
        r.end_check.phase_deviation,
        r.end_check.lagrangian_defect,
    )
}

/// Chart coordinates of the transported tori, one row per grid point.
fn write_plot_data(s: &Session, t: f64, records: &[&FibreRecord]) -> Result<()> {
    let dim = s.family.ambient_dim();
    let mut header = vec!["record".to_string(), "point".to_string(), "chart".to_string()];
    for k in 0..dim {
        header.push(format!("re_z{k}"));
        header.push(format!("im_z{k}"));
    }
    let mut rows = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let (_, torus) = record_torus(&s.family, r, s.atlas())?;
        for (p, z) in torus.psi.iter().enumerate() {
            let mut row = vec![i.to_string(), p.to_string(), r.base.chart.to_string()];
            for c in z {
                row.push(format!("{:.16e}", c.re));
                row.push(format!("{:.16e}", c.im));
            }
            rows.push(row);
        }
    }
    write_csv(&s.path("fibre_points", "csv", t), &header, &rows)
}

/// Solves the fibre over the configured base point.
pub fn cmd_solve_fibre(s: &Session, out: &mut dyn Write) -> Result<()> {
    let spec = s
        .config
        .base
        .as_ref()
        .ok_or_else(|| Error::config("base", "solve-fibre needs a [base] table"))?;
    for t in s.config.ts() {
        let base = spec.base_point(t, s.atlas())?;
        let rec = s.install(|| solve_fibre(&s.family, &base, spec.kind, t, s.atlas()))??;
        let mut stream = RecordStream::create(&s.path("fibre", "jsonl", t), &s.header(t))?;
        stream.fibre(&rec)?;
        stream.finish()?;
        writeln!(out, "t = {t:e}")?;
        writeln!(out, "{}", report_line(&rec))?;
        if s.plot_data {
            write_plot_data(s, t, &[&rec])?;
        }
        if rec.residual > s.atlas().solver.tol {
            return Err(Error::Diverged {
                iterations: rec.report.newton_iterations,
                residual: rec.residual,
            });
        }
        if !rec.end_check.passed {
            return Err(Error::Invariant(format!(
                "end-check failed: phase deviation {:.3e}, symplectic defect {:.3e}",
                rec.end_check.phase_deviation, rec.end_check.lagrangian_defect
            )));
        }
    }
    Ok(())
}

/// A sampled point of a top face and its region.
#[derive(Debug, Clone)]
pub struct SampledPoint {
    pub face: usize,
    pub moment: Vec<f64>,
    pub base: Option<BasePoint>,
    pub region: RegionTag,
}

fn compositions(parts: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if parts == 1 {
        if total >= 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
        }
        return;
    }
    for k in 1..total {
        prefix.push(k);
        compositions(parts - 1, total - k, prefix, out);
        prefix.pop();
    }
}

/// Interior lattice points `i / samples` of every top face, classified.
/// Vertex points whose fibre would reach a graph radius `t / prod r` above
/// the smallest base radius count as excluded.
pub fn sample_faces(family: &GlobalFamily, t: f64, samples: usize, cfg: &AtlasConfig) -> Vec<SampledPoint> {
    let dim = family.ambient_dim();
    let mut out = Vec::new();
    for face in 0..=dim {
        let mut lattice = Vec::new();
        compositions(dim, samples, &mut Vec::new(), &mut lattice);
        for c in lattice {
            let mut moment = Vec::with_capacity(dim + 1);
            let mut it = c.iter();
            for k in 0..=dim {
                moment.push(if k == face { 0.0 } else { *it.next().unwrap() as f64 / samples as f64 });
            }
            let (base, region) = match BasePoint::new(&moment, face, t, &cfg.regions) {
                Ok(b) => {
                    let prod: f64 = b.radii.iter().product();
                    let rmin = b.radii.iter().copied().fold(f64::INFINITY, f64::min);
                    let region = if b.region == RegionTag::Ver && t / prod >= rmin {
                        RegionTag::Excluded
                    } else {
                        b.region
                    };
                    (Some(b), region)
                }
                Err(_) => (None, RegionTag::Excluded),
            };
            out.push(SampledPoint {
                face,
                moment,
                base,
                region,
            });
        }
    }
    out
}

/// Outcome of one build over a parameter value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BuildSummary {
    pub t: f64,
    pub sampled: usize,
    pub top: usize,
    pub ver: usize,
    pub overlap: usize,
    pub excluded: usize,
    /// Points of `U_t` with at least one accepted fibre.
    pub solved: usize,
    pub matched: usize,
    pub failures: usize,
    pub residuals: Vec<f64>,
    pub max_h: f64,
}

impl BuildSummary {
    /// Solved fraction of the sampled points of `U_t`.
    pub fn coverage(&self) -> f64 {
        let u = self.sampled - self.excluded;
        if u == 0 {
            0.0
        } else {
            self.solved as f64 / u as f64
        }
    }

    /// Fraction of the sampled boundary that lies in `U_t`.
    pub fn area_fraction(&self) -> f64 {
        (self.sampled - self.excluded) as f64 / self.sampled.max(1) as f64
    }

    fn quantile(&self, q: f64) -> f64 {
        if self.residuals.is_empty() {
            return f64::NAN;
        }
        let mut v = self.residuals.clone();
        v.sort_by(|a, b| a.total_cmp(b));
        v[((v.len() - 1) as f64 * q).round() as usize]
    }
}

fn good(rec: &FibreRecord, tol: f64) -> bool {
    rec.residual <= tol && rec.end_check.passed
}

fn accepted(r: &Result<FibreRecord>, tol: f64) -> bool {
    matches!(r, Ok(rec) if good(rec, tol))
}

/// Samples every top face, solves top and vertex fibres and reconciles them
/// on the overlap.
pub fn build_fibration(s: &Session, t: f64) -> Result<(BuildSummary, Vec<SampledPoint>, Vec<PointResult>)> {
    let fam = &s.family;
    let cfg = s.atlas();
    let pts = sample_faces(fam, t, s.config.fibration.samples, cfg);
    let bases: Vec<BasePoint> = pts
        .iter()
        .filter(|p| p.region != RegionTag::Excluded)
        .filter_map(|p| p.base.clone())
        .collect();
    let (tops, vers) = s.install(|| {
        (
            build_top_fibration(fam, &bases, t, cfg),
            build_vertex_fibration(fam, &bases, t, cfg),
        )
    })?;
    let mut tops = tops.into_iter();
    let mut vers = vers.into_iter();
    let mut results: Vec<PointResult> = pts
        .iter()
        .map(|p| {
            let active = p.region != RegionTag::Excluded && p.base.is_some();
            PointResult {
                top: if active && p.region.allows_top() { tops.next().map(|x| x.1) } else { None },
                ver: if active && p.region.allows_vertex() { vers.next().map(|x| x.1) } else { None },
                overlap: None,
            }
        })
        .collect();
    let tol = cfg.solver.tol;
    let spec = s.config.fibration;
    let matches: Vec<Option<Result<MatchReport>>> = s.install(|| {
        results
            .par_iter()
            .map(|r| match (&r.top, &r.ver) {
                (Some(Ok(a)), Some(Ok(b))) if good(a, tol) && good(b, tol) => {
                    Some(reconcile_overlap(fam, a, b, cfg, spec.match_tol, spec.k_shift))
                }
                _ => None,
            })
            .collect()
    })?;
    for (r, m) in results.iter_mut().zip(matches) {
        r.overlap = m;
    }
    let mut sum = BuildSummary {
        t,
        sampled: pts.len(),
        ..Default::default()
    };
    for (p, r) in pts.iter().zip(&results) {
        match p.region {
            RegionTag::Top => sum.top += 1,
            RegionTag::Ver => sum.ver += 1,
            RegionTag::Overlap => sum.overlap += 1,
            RegionTag::Excluded => sum.excluded += 1,
        }
        let mut any = false;
        for rec in [&r.top, &r.ver].into_iter().flatten() {
            match rec {
                Ok(x) => {
                    sum.residuals.push(x.residual);
                    sum.max_h = sum.max_h.max(x.h.sup_norm());
                    any |= accepted(rec, tol);
                }
                Err(_) => sum.failures += 1,
            }
        }
        if any {
            sum.solved += 1;
        }
        if matches!(&r.overlap, Some(Ok(m)) if m.success) {
            sum.matched += 1;
        }
    }
    Ok((sum, pts, results))
}

/// Fibres over one sampled point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub top: Option<Result<FibreRecord>>,
    pub ver: Option<Result<FibreRecord>>,
    pub overlap: Option<Result<MatchReport>>,
}

pub fn cmd_build_fibration(s: &Session, out: &mut dyn Write) -> Result<()> {
    for t in s.config.ts() {
        let (sum, pts, results) = build_fibration(s, t)?;
        let mut stream = RecordStream::create(&s.path("fibration", "jsonl", t), &s.header(t))?;
        let dim = s.family.ambient_dim();
        let mut header = vec!["face".to_string()];
        header.extend((0..=dim).map(|k| format!("mu_{k}")));
        header.extend(["region", "top", "vertex", "overlap"].map(String::from));
        let mut rows = Vec::new();
        let mut plotted = Vec::new();
        let status = |r: &Option<Result<FibreRecord>>| match r {
            None => "-",
            Some(r) if accepted(r, s.atlas().solver.tol) => "ok",
            Some(_) => "failed",
        };
        for (p, r) in pts.iter().zip(&results) {
            for (rec, kind) in [(&r.top, FibreKind::Top), (&r.ver, FibreKind::Vertex)] {
                match rec {
                    Some(Ok(x)) => {
                        stream.fibre(x)?;
                        plotted.push(x);
                    }
                    Some(Err(e)) => stream.failure(p.base.as_ref().expect("solved points have a base"), kind, e)?,
                    None => {}
                }
            }
            if let (Some(m), Some(b)) = (&r.overlap, &p.base) {
                match m {
                    Ok(m) => stream.overlap(b, m)?,
                    Err(e) => stream.failure(b, FibreKind::Top, e)?,
                }
            }
            let mut row = vec![p.face.to_string()];
            row.extend(p.moment.iter().map(|m| format!("{m:.16e}")));
            row.push(format!("{:?}", p.region).to_lowercase());
            row.push(status(&r.top).into());
            row.push(status(&r.ver).into());
            row.push(
                match &r.overlap {
                    None => "-",
                    Some(Ok(m)) if m.success => "matched",
                    Some(_) => "failed",
                }
                .into(),
            );
            rows.push(row);
        }
        stream.finish()?;
        write_csv(&s.path("coverage", "csv", t), &header, &rows)?;
        if s.plot_data {
            write_plot_data(s, t, &plotted)?;
        }
        writeln!(out, "t = {t:e}: {} sampled boundary points", sum.sampled)?;
        writeln!(out, "  region     points")?;
        writeln!(out, "  top        {:>6}", sum.top)?;
        writeln!(out, "  ver        {:>6}", sum.ver)?;
        writeln!(out, "  overlap    {:>6}", sum.overlap)?;
        writeln!(out, "  excluded   {:>6}", sum.excluded)?;
        writeln!(
            out,
            "  residual quantiles: min {:.2e}  median {:.2e}  p90 {:.2e}  max {:.2e}",
            sum.quantile(0.0),
            sum.quantile(0.5),
            sum.quantile(0.9),
            sum.quantile(1.0)
        )?;
        writeln!(out, "  overlap matches: {}/{}", sum.matched, sum.overlap)?;
        writeln!(out, "  failed fibres: {}", sum.failures)?;
        writeln!(
            out,
            "  coverage: {:.1}% of U_t solved; U_t is {:.1}% of the sampled boundary",
            100.0 * sum.coverage(),
            100.0 * sum.area_fraction()
        )?;
    }
    Ok(())
}

fn format_matrix(m: &[Vec<i64>]) -> String {
    format!("{m:?}")
}

/// Monodromy of the configured loop by continuation and by chart combinatorics.
pub fn cmd_monodromy(s: &Session, out: &mut dyn Write) -> Result<()> {
    let spec = s
        .config
        .monodromy
        .as_ref()
        .ok_or_else(|| Error::config("monodromy", "monodromy needs a [monodromy] table"))?;
    for t in s.config.ts() {
        let points: Vec<LoopPoint> = spec.points(&s.family, t, s.atlas())?;
        let comb = monodromy_combinatorial(&s.family, &points, t)?;
        let cont = s.install(|| monodromy(&s.family, &points, t, s.atlas()))??;
        let mut stream = RecordStream::create(&s.path("monodromy", "jsonl", t), &s.header(t))?;
        stream.monodromy(&comb)?;
        stream.monodromy(&cont)?;
        stream.finish()?;
        writeln!(out, "t = {t:e}: loop of {} fibres", points.len())?;
        writeln!(out, "  chart combinatorics: {}", format_matrix(&comb.matrix))?;
        writeln!(
            out,
            "  continuation:        {} (det {}, max deviation {:.1e})",
            format_matrix(&cont.matrix),
            cont.determinant,
            cont.max_deviation
        )?;
        if comb.matrix != cont.matrix {
            return Err(Error::Invariant("the two monodromy methods disagree".into()));
        }
    }
    Ok(())
}

/// Moment image of the singular set as a CSV point cloud.
pub fn cmd_amoeba(s: &Session, out: &mut dyn Write) -> Result<()> {
    let dim = s.family.ambient_dim();
    for t in s.config.ts() {
        let pts = amoeba(&s.family, t, s.config.amoeba.density);
        let mut header = vec!["stratum_i".to_string(), "stratum_j".to_string()];
        header.extend((0..=dim).map(|k| format!("mu_{k}")));
        let rows: Vec<Vec<String>> = pts
            .iter()
            .map(|p| {
                let mut row = vec![p.stratum.0.to_string(), p.stratum.1.to_string()];
                row.extend(p.moment.iter().map(|m| format!("{m:.16e}")));
                row
            })
            .collect();
        write_csv(&s.path("amoeba", "csv", t), &header, &rows)?;
        let mut stream = RecordStream::create(&s.path("amoeba", "jsonl", t), &s.header(t))?;
        for p in &pts {
            stream.amoeba(p)?;
        }
        stream.finish()?;
        writeln!(out, "t = {t:e}: {} points of the singular set", pts.len())?;
    }
    Ok(())
}

/// One line of the invariant suite.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        passed,
        detail,
    }
}

fn fibre_checks(s: &Session, kind: FibreKind, base: &BasePoint, t: f64, checks: &mut Vec<Check>) -> Option<FibreRecord> {
    let label = format!("{:?}", kind).to_lowercase();
    match solve_fibre(&s.family, base, kind, t, s.atlas()) {
        Ok(r) => {
            let tol = s.atlas().solver.tol;
            checks.push(check(
                &format!("{label} fibre residual"),
                r.residual <= tol,
                format!("{:.2e} <= {tol:.0e}", r.residual),
            ));
            checks.push(check(
                &format!("{label} fibre mean-zero h"),
                r.h.mean().abs() <= 1e-14,
                format!("mean {:.1e}", r.h.mean()),
            ));
            checks.push(check(
                &format!("{label} fibre end-check"),
                r.end_check.passed,
                format!("phase deviation {:.1e}", r.end_check.phase_deviation),
            ));
            checks.push(check(
                &format!("{label} fibre symplectic"),
                r.end_check.lagrangian_defect <= 1e-6,
                format!("omega defect {:.1e}", r.end_check.lagrangian_defect),
            ));
            if s.family.local_model {
                checks.push(check(
                    &format!("{label} fibre local-model exactness"),
                    r.h.sup_norm() <= 1e-10,
                    format!("|h| {:.1e}", r.h.sup_norm()),
                ));
            }
            Some(r)
        }
        Err(e) => {
            checks.push(check(&format!("{label} fibre"), false, e.to_string()));
            None
        }
    }
}

/// Runs the invariant suite on the configured family at the first `t`.
pub fn verify(s: &Session) -> Result<Vec<Check>> {
    let t = s.config.ts()[0];
    let cfg = s.atlas();
    let fam = &s.family;
    let n = fam.fibre_dim();
    let mut checks = Vec::new();
    let top_base = BasePoint::from_radii(n + 1, 0, &vec![1.0; n], t, &cfg.regions)?;
    let vr = 0.5 * cfg.regions.vertex_radius(t, n);
    let ver_base = BasePoint::from_radii(n + 1, 0, &vec![vr; n], t, &cfg.regions)?;

    // flat operator: the linearization at h = 0, u = 0 is diagonal in Fourier modes
    let (problem, _) = fibre_problem(fam, &top_base, FibreKind::Top, t, cfg)?;
    let grid = cfg.grid(n);
    let graph = LagrangianGraph::flat(problem.reference.clone(), grid);
    let lin = linearization_coefficients(&problem, &graph, 0.0, None)?;
    let pre = FlatPreconditioner::from_reference(&problem.reference, grid)?;
    let mut worst: f64 = 0.0;
    for m in 1..=4i64 {
        let mut mode = vec![0i64; n];
        mode[0] = m;
        let v = FourierField::from_modes(grid, &[(mode.clone(), 1.0, 0.0)]);
        let lam = pre.eigenvalue(&mode);
        let applied = lin.apply(&v);
        for (a, b) in applied.iter().zip(v.to_grid()) {
            worst = worst.max((a - lam * b).abs() / lam);
        }
    }
    checks.push(check("flat operator eigenvalues", worst <= 1e-8, format!("relative error {worst:.1e}")));

    if t > 0.0 && top_base.region.allows_top() {
        fibre_checks(s, FibreKind::Top, &top_base, t, &mut checks);
    }
    if t > 0.0 {
        if let Some(r) = fibre_checks(s, FibreKind::Vertex, &ver_base, t, &mut checks) {
            let pts = vec![LoopPoint {
                kind: r.kind,
                base: r.base.clone(),
            }];
            let mono = monodromy(fam, &pts, t, cfg);
            let identity: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as i64).collect()).collect();
            checks.push(match mono {
                Ok(m) => check("trivial loop", m.matrix == identity, format!("{:?}", m.matrix)),
                Err(e) => check("trivial loop", false, e.to_string()),
            });
        }
        let a = amoeba(fam, t, s.config.amoeba.density);
        let b = amoeba(fam, t / 10.0, s.config.amoeba.density);
        checks.push(check("amoeba independent of t", a == b, format!("{} points", a.len())));
    }
    Ok(checks)
}

pub fn cmd_verify(s: &Session, out: &mut dyn Write) -> Result<()> {
    let checks = s.install(|| verify(s))??;
    for c in &checks {
        writeln!(out, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Error::Invariant(format!("{failed} of {} checks failed", checks.len())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_of_the_cubic_faces() {
        let f = GlobalFamily::fermat(2).unwrap();
        let pts = sample_faces(&f, 1e-3, 8, &AtlasConfig::default());
        assert_eq!(pts.len(), 3 * 7);
        assert!(pts.iter().all(|p| p.moment[p.face] == 0.0));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::config("x", "y")), 1);
        assert_eq!(exit_code(&Error::StallAtU { frontier: 0.0, target: 1.0 }), 2);
        assert_eq!(exit_code(&Error::Invariant("x".into())), 3);
    }
}
