//! Monodromy of the fibration around loops of base points.
//!
//! A fibre's first homology is marked by the angles of its non-graph chart
//! coordinates (the grid axes). Each fibre also carries the windings of the
//! homogeneous coordinates along those axes; they are locally constant under
//! transport as long as the coordinate does not vanish on the fibre, so the
//! integer change of basis between consecutive fibres is read off from the
//! coordinates that stay away from zero on both.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fibre::{record_torus, solve_fibre, AtlasConfig, FibreKind};
use super::region::BasePoint;
use crate::error::{Error, Result};
use crate::family::GlobalFamily;
use crate::spectral::Grid;
use crate::transport::TransportedTorus;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonodromyMethod {
    Continuation,
    ChartCombinatorics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopPoint {
    pub kind: FibreKind,
    pub base: BasePoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyResult {
    pub points: Vec<LoopPoint>,
    /// Action on `H_1` of the first fibre: column `i` is the image of the
    /// `i`-th angle cycle.
    pub matrix: Vec<Vec<i64>>,
    pub method: MonodromyMethod,
    pub determinant: i64,
    /// Largest distance of a transition entry from the nearest integer.
    pub max_deviation: f64,
}

/// Windings of the homogeneous coordinates `x_k / x_chart` along the grid
/// axes; `None` where the coordinate comes close to zero on the fibre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FibreWindings {
    pub chart: usize,
    pub rows: Vec<Option<Vec<f64>>>,
}

/// Loop radii as a fraction of the vertex radius `c_v t^{1/(n+1)}`.
pub const LOOP_RADIUS_FRACTION: f64 = 0.5;

/// Smallest admissible `min |x| / max |x|` of a usable coordinate.
pub const USABLE_RATIO: f64 = 0.05;
const MAX_INCREMENT: f64 = 0.45 * std::f64::consts::PI;

fn wrap(d: f64) -> f64 {
    d - std::f64::consts::TAU * (d / std::f64::consts::TAU).round()
}

fn coordinate_winding(grid: Grid, values: &[crate::linalg::C64]) -> Option<Vec<f64>> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(v.norm()), h.max(v.norm())));
    if !(hi > 0.0) || lo < USABLE_RATIO * hi {
        return None;
    }
    let n = grid.dim;
    let step = |p: usize, a: usize| -> usize {
        let mut m = grid.multi_index(p);
        m[a] = (m[a] + 1) % grid.size;
        grid.flat_index(&m)
    };
    let inc = |p: usize, q: usize| wrap(values[q].arg() - values[p].arg());
    let mut row = vec![0.0; n];
    for a in 0..n {
        let mut total = None;
        for p in 0..grid.len() {
            let d = inc(p, step(p, a));
            if d.abs() > MAX_INCREMENT {
                return None;
            }
            if grid.multi_index(p)[a] == 0 {
                // one full line through p
                let mut q = p;
                let mut sum = 0.0;
                for _ in 0..grid.size {
                    let r = step(q, a);
                    sum += inc(q, r);
                    q = r;
                }
                let w = sum / std::f64::consts::TAU;
                match total {
                    None => total = Some(w),
                    Some(prev) if (prev - w).abs() > 0.5 => return None,
                    _ => {}
                }
            }
        }
        row[a] = total.unwrap_or(0.0).round();
    }
    // a zero inside a grid cell shows up as a nonzero plaquette winding
    for a in 0..n {
        for b in a + 1..n {
            for p in 0..grid.len() {
                let pa = step(p, a);
                let pab = step(pa, b);
                let pb = step(p, b);
                let circ = inc(p, pa) + inc(pa, pab) + inc(pab, pb) + inc(pb, p);
                if circ.abs() > 1.0 {
                    return None;
                }
            }
        }
    }
    Some(row)
}

/// Windings measured on a transported torus in chart `chart`.
pub fn measured_windings(torus: &TransportedTorus, chart: usize) -> FibreWindings {
    let dim = torus.psi.first().map(|z| z.len()).unwrap_or(0) + 1;
    let rows = (0..dim)
        .map(|k| {
            if k == chart {
                return Some(vec![0.0; torus.grid.dim]);
            }
            let c = GlobalFamily::chart_index(chart, k);
            let vals: Vec<_> = torus.psi.iter().map(|z| z[c]).collect();
            coordinate_winding(torus.grid, &vals)
        })
        .collect();
    FibreWindings { chart, rows }
}

/// Windings predicted from the dominant monomial of `1 + pcheck` at the
/// fibre's radii: the graph coordinate is `-t (1 + pcheck) / prod(others)`.
pub fn predicted_windings(family: &GlobalFamily, point: &LoopPoint, t: f64) -> Result<FibreWindings> {
    let b = &point.base;
    let chart = family.chart(b.chart)?;
    let n = chart.n;
    let g = b.graph_index;
    let axis = |i: usize| if i < g { i } else { i - 1 };
    let mut rho = vec![0.0; n + 1];
    for i in 0..=n {
        if i != g {
            rho[i] = b.radii[axis(i)];
        }
    }
    rho[g] = match point.kind {
        FibreKind::Top => 0.0,
        FibreKind::Vertex => t * chart.t_scale / b.radii.iter().product::<f64>(),
    };
    let mut terms: Vec<(Vec<u32>, f64)> = vec![(vec![0; n + 1], 1.0)];
    for m in &chart.p_check.terms {
        let size = m.coeff.norm()
            * m.exponent
                .iter()
                .zip(&rho)
                .map(|(&e, r)| r.powi(e as i32))
                .product::<f64>();
        terms.push((m.exponent.clone(), size));
    }
    let total: f64 = terms.iter().map(|(_, s)| s).sum();
    let dom = (0..terms.len()).fold(0, |best, k| if terms[k].1 > terms[best].1 { k } else { best });
    let big = terms[dom].1;
    let usable_graph = big > total - big && terms[dom].0[g] == 0;
    let mut chart_rows: Vec<Option<Vec<f64>>> = vec![None; n + 1];
    for i in 0..=n {
        if i != g {
            let mut r = vec![0.0; n];
            r[axis(i)] = 1.0;
            chart_rows[i] = Some(r);
        }
    }
    if usable_graph {
        let mut r = vec![0.0; n];
        for i in 0..=n {
            if i != g {
                r[axis(i)] += terms[dom].0[i] as f64 - 1.0;
            }
        }
        chart_rows[g] = Some(r);
    }
    let rows = (0..=n + 1)
        .map(|k| {
            if k == b.chart {
                Some(vec![0.0; n])
            } else {
                chart_rows[GlobalFamily::chart_index(b.chart, k)].clone()
            }
        })
        .collect();
    Ok(FibreWindings { chart: b.chart, rows })
}

fn relative(w: &FibreWindings, c: usize) -> Option<Vec<Option<Vec<f64>>>> {
    let base = w.rows[c].clone()?;
    Some(
        w.rows
            .iter()
            .map(|r| r.as_ref().map(|v| v.iter().zip(&base).map(|(a, b)| a - b).collect()))
            .collect(),
    )
}

/// Integer matrix `X` with `W_next X = W_prev` on the coordinates usable on
/// both fibres: column `i` expresses the `i`-th cycle of `prev` in the basis
/// of `next`. Returns the matrix and the largest deviation from integers.
pub fn transition(prev: &FibreWindings, next: &FibreWindings, step: usize) -> Result<(DMatrix<f64>, f64)> {
    let n = prev.rows.iter().flatten().next().map(|r| r.len()).unwrap_or(0);
    let candidates = [prev.chart, next.chart];
    let c = candidates
        .iter()
        .copied()
        .chain(0..prev.rows.len())
        .find(|&c| prev.rows[c].is_some() && next.rows[c].is_some())
        .ok_or_else(|| Error::ContinuationBreak {
            step,
            reason: "no coordinate usable on both fibres".into(),
        })?;
    let (a, b) = (relative(next, c).unwrap(), relative(prev, c).unwrap());
    let common: Vec<usize> = (0..prev.rows.len())
        .filter(|&k| k != c && a[k].is_some() && b[k].is_some())
        .collect();
    let m = common.len();
    let amat = DMatrix::from_fn(m, n, |r, j| a[common[r]].as_ref().unwrap()[j]);
    let bmat = DMatrix::from_fn(m, n, |r, j| b[common[r]].as_ref().unwrap()[j]);
    let svd = amat.clone().svd(true, true);
    let smin = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if m < n || !(smin > 0.5) {
        return Err(Error::ContinuationBreak {
            step,
            reason: format!("usable coordinates span rank < {n}"),
        });
    }
    let mut x = DMatrix::zeros(n, n);
    for j in 0..n {
        let col = svd
            .solve(&DVector::from_iterator(m, bmat.column(j).iter().copied()), 1e-12)
            .map_err(|e| Error::Invariant(format!("winding solve failed: {e}")))?;
        x.set_column(j, &col);
    }
    let resid = (&amat * &x - &bmat).abs().max();
    let dev = x.iter().map(|v| (v - v.round()).abs()).fold(resid, f64::max);
    if dev > 0.1 {
        return Err(Error::NonInteger { deviation: dev });
    }
    Ok((x.map(|v| v.round()), dev))
}

fn compose(points: &[LoopPoint], windings: &[FibreWindings], method: MonodromyMethod) -> Result<MonodromyResult> {
    let len = windings.len();
    if len == 0 {
        return Err(Error::config("loop", "empty loop"));
    }
    let n = points[0].base.radii.len();
    let mut m = DMatrix::<f64>::identity(n, n);
    let mut worst: f64 = 0.0;
    for p in 0..len {
        let (x, dev) = transition(&windings[p], &windings[(p + 1) % len], p)?;
        m = x * m;
        worst = worst.max(dev);
    }
    let det = m.determinant().round() as i64;
    if det.abs() != 1 {
        return Err(Error::Invariant(format!("monodromy determinant {det}")));
    }
    Ok(MonodromyResult {
        points: points.to_vec(),
        matrix: (0..n).map(|r| (0..n).map(|c| m[(r, c)] as i64).collect()).collect(),
        method,
        determinant: det,
        max_deviation: worst,
    })
}

/// Monodromy by composing transitions predicted from dominant monomials.
pub fn monodromy_combinatorial(family: &GlobalFamily, points: &[LoopPoint], t: f64) -> Result<MonodromyResult> {
    let w = points
        .iter()
        .map(|p| predicted_windings(family, p, t))
        .collect::<Result<Vec<_>>>()?;
    compose(points, &w, MonodromyMethod::ChartCombinatorics)
}

/// Monodromy by solving every fibre on the loop and measuring windings on
/// the transported tori. The loop closes back to its first point.
pub fn monodromy(family: &GlobalFamily, points: &[LoopPoint], t: f64, cfg: &AtlasConfig) -> Result<MonodromyResult> {
    let w = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let broken = |e: Error| Error::ContinuationBreak {
                step: i,
                reason: e.to_string(),
            };
            let rec = solve_fibre(family, &p.base, p.kind, t, cfg).map_err(broken)?;
            let (_, torus) = record_torus(family, &rec, cfg).map_err(broken)?;
            Ok(measured_windings(&torus, p.base.chart))
        })
        .collect::<Result<Vec<_>>>()?;
    compose(points, &w, MonodromyMethod::Continuation)
}

/// Base points along the top face `{mu_g = 0}` from near vertex `i` to near
/// vertex `j`, the remaining coordinates held at relative radius `r`.
/// The first point and the chart switch `mu_i = mu_j` are included, the last
/// point is not; `count` is rounded up to an even number.
pub fn face_segment(
    family: &GlobalFamily,
    g: usize,
    i: usize,
    j: usize,
    r: f64,
    count: usize,
    t: f64,
    cfg: &AtlasConfig,
) -> Result<Vec<LoopPoint>> {
    let nn = family.ambient_dim();
    let q0 = 2.0 * r.ln();
    let half = count.div_ceil(2).max(1);
    (0..2 * half)
        .map(|s| {
            let q = q0 * (1.0 - s as f64 / half as f64);
            let (mi, mj) = if q <= 0.0 { (1.0, q.exp()) } else { ((-q).exp(), 1.0) };
            let mut mu = vec![r * r; nn + 1];
            mu[g] = 0.0;
            mu[i] = mi;
            mu[j] = mj;
            Ok(LoopPoint {
                kind: FibreKind::Top,
                base: BasePoint::new(&mu, g, t, &cfg.regions)?,
            })
        })
        .collect()
}

/// Vertex fibres in chart `v` of the local-model family of tori, moving the
/// small coordinate from `x_g` to `x_h` with all other radii fixed at `r`.
/// The first point is included, the last is not.
pub fn vertex_segment(
    family: &GlobalFamily,
    v: usize,
    g: usize,
    h: usize,
    r: f64,
    count: usize,
    t: f64,
    cfg: &AtlasConfig,
) -> Result<Vec<LoopPoint>> {
    let nn = family.ambient_dim();
    let chart = family.chart(v)?;
    let lt = (t * chart.t_scale).ln();
    let others = (nn - 2) as f64;
    // log|z_g| + log|z_h| = sum
    let sum = lt - others * r.ln();
    let (start, end) = (r.ln(), sum - r.ln());
    (0..count)
        .map(|s| {
            let lh = start + (end - start) * s as f64 / count as f64;
            let lg = sum - lh;
            let (graph, other, lother) = if lg <= lh { (g, h, lh) } else { (h, g, lg) };
            let gi = GlobalFamily::chart_index(v, graph);
            let radii: Vec<f64> = (0..nn)
                .filter(|&c| c != gi)
                .map(|c| {
                    if GlobalFamily::homogeneous_index(v, c) == other {
                        lother.exp()
                    } else {
                        r
                    }
                })
                .collect();
            Ok(LoopPoint {
                kind: FibreKind::Vertex,
                base: BasePoint::from_radii(graph, v, &radii, t, &cfg.regions)?,
            })
        })
        .collect()
}

/// Loop around the edge `{mu_g = mu_h = 0}` of the simplex in `P^3`, based at
/// the vertex fibre of chart `j` over face `g`: through vertex `j` to face `h`,
/// along face `h` to vertex `i`, back to face `g` and along it to the start.
pub fn edge_loop(
    family: &GlobalFamily,
    edge: (usize, usize),
    j: usize,
    t: f64,
    cfg: &AtlasConfig,
    per_segment: usize,
) -> Result<Vec<LoopPoint>> {
    if family.ambient_dim() != 3 {
        return Err(Error::config("loop", "edge loops are defined for P^3"));
    }
    let (g, h) = edge;
    if g == h || g > 3 || h > 3 || j > 3 || j == g || j == h {
        return Err(Error::config("loop", "edge and vertex must be distinct indices of P^3"));
    }
    let i = (0..4).find(|&k| k != g && k != h && k != j).unwrap();
    let n = family.fibre_dim();
    let r = LOOP_RADIUS_FRACTION * cfg.regions.vertex_radius(t, n);
    let mut pts = vertex_segment(family, j, g, h, r, per_segment, t, cfg)?;
    pts.extend(face_segment(family, h, j, i, r, per_segment, t, cfg)?);
    pts.extend(vertex_segment(family, i, h, g, r, per_segment, t, cfg)?);
    pts.extend(face_segment(family, g, i, j, r, per_segment, t, cfg)?);
    Ok(pts)
}

/// The base circle of a one-dimensional fibration in `P^2`: along every
/// face and through every vertex region, starting on face 0 near vertex 2.
pub fn base_circle_loop(family: &GlobalFamily, t: f64, cfg: &AtlasConfig, per_segment: usize) -> Result<Vec<LoopPoint>> {
    if family.ambient_dim() != 2 {
        return Err(Error::config("loop", "the base circle is defined for P^2"));
    }
    let r = LOOP_RADIUS_FRACTION * cfg.regions.vertex_radius(t, 1);
    let mut pts = Vec::new();
    // (vertex, from face, to face), then the face walked next, toward the next vertex
    for (v, f0, f1, next) in [(2, 0, 1, 0), (0, 1, 2, 1), (1, 2, 0, 2)] {
        pts.extend(vertex_segment(family, v, f0, f1, r, per_segment, t, cfg)?);
        pts.extend(face_segment(family, f1, v, next, r, per_segment, t, cfg)?);
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winding_of_monomials() {
        let grid = Grid::new(2, 16);
        let vals: Vec<_> = (0..grid.len())
            .map(|p| {
                let th = grid.theta(p);
                crate::linalg::C64::from_polar(1.0, 3.0 * th[0] - th[1])
            })
            .collect();
        assert_eq!(coordinate_winding(grid, &vals), Some(vec![3.0, -1.0]));
        // 1 + z1 z2^{-1}... vanishing on the torus
        let zero: Vec<_> = (0..grid.len())
            .map(|p| {
                let th = grid.theta(p);
                crate::linalg::C64::new(1.0, 0.0) + crate::linalg::C64::from_polar(1.0, th[0] + 0.1)
            })
            .collect();
        assert_eq!(coordinate_winding(grid, &zero), None);
    }

    #[test]
    fn quartic_edge_loop_combinatorics() {
        let f = GlobalFamily::fermat(3).unwrap();
        let cfg = AtlasConfig::default();
        let t = 1e-3;
        let pts = edge_loop(&f, (0, 1), 3, t, &cfg, 5).unwrap();
        let m = monodromy_combinatorial(&f, &pts, t).unwrap();
        assert_eq!(m.determinant, 1);
        let d = DMatrix::from_fn(2, 2, |r, c| m.matrix[r][c] as f64) - DMatrix::identity(2, 2);
        assert_eq!(m.matrix, vec![vec![1, 4], vec![0, 1]]);
        assert!(d.abs().max() > 0.5, "{:?}", m.matrix);
        assert!((&d * &d).abs().max() == 0.0, "not unipotent: {:?}", m.matrix);
    }

    #[test]
    fn cubic_base_circle_is_trivial() {
        let cfg = AtlasConfig::default();
        let f = GlobalFamily::fermat(2).unwrap();
        let pts = base_circle_loop(&f, 1e-3, &cfg, 5).unwrap();
        let m = monodromy_combinatorial(&f, &pts, 1e-3).unwrap();
        assert_eq!(m.matrix, vec![vec![1]]);
    }

    #[test]
    fn loop_inside_one_chart_is_trivial() {
        // the local model is only a family chart by chart
        let cfg = AtlasConfig::default();
        for q in [GlobalFamily::local_model(3).unwrap(), GlobalFamily::fermat(3).unwrap()] {
            let mut pts = vertex_segment(&q, 3, 0, 1, 0.5, 4, 1e-3, &cfg).unwrap();
            pts.extend(vertex_segment(&q, 3, 1, 0, 0.5, 4, 1e-3, &cfg).unwrap());
            let m = monodromy_combinatorial(&q, &pts, 1e-3).unwrap();
            assert_eq!(m.matrix, vec![vec![1, 0], vec![0, 1]]);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
            (0..a.len())
                .map(|r| (0..b[0].len()).map(|c| (0..b.len()).map(|k| a[r][k] * b[k][c]).sum()).collect())
                .collect()
        }

        fn reversed(pts: &[LoopPoint]) -> Vec<LoopPoint> {
            let mut r = vec![pts[0].clone()];
            r.extend(pts[1..].iter().rev().cloned());
            r
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn monodromy_is_a_homomorphism(
                edge in prop::sample::select(vec![(0usize, 1usize), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
                j_pick: prop::sample::Index,
                per_segment in 3usize..6,
                word in prop::collection::vec(any::<bool>(), 1..4),
            ) {
                let f = GlobalFamily::fermat(3).unwrap();
                let cfg = AtlasConfig::default();
                let t = 1e-3;
                let free: Vec<usize> = (0..4).filter(|v| *v != edge.0 && *v != edge.1).collect();
                let j = free[j_pick.index(free.len())];
                let fwd = edge_loop(&f, edge, j, t, &cfg, per_segment).unwrap();
                let back = reversed(&fwd);
                let m = monodromy_combinatorial(&f, &fwd, t).unwrap();
                let mi = monodromy_combinatorial(&f, &back, t).unwrap();
                prop_assert!(m.determinant.abs() == 1);
                prop_assert_eq!(mul(&m.matrix, &mi.matrix), vec![vec![1, 0], vec![0, 1]]);
                let mut joined = Vec::new();
                let mut product = vec![vec![1, 0], vec![0, 1]];
                for &forward in &word {
                    let (pts, mat) = if forward { (&fwd, &m.matrix) } else { (&back, &mi.matrix) };
                    joined.extend(pts.iter().cloned());
                    product = mul(mat, &product);
                }
                let composed = monodromy_combinatorial(&f, &joined, t).unwrap();
                prop_assert_eq!(composed.matrix, product);
                prop_assert!(composed.determinant.abs() == 1);
            }
        }
    }
}
