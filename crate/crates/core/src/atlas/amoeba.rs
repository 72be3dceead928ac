//! Moment image of the singular set `C = X_t ∩ Sing(X_0)` on the boundary
//! of the simplex: the locus the fibration leaves out.

use serde::{Deserialize, Serialize};

use crate::family::{fs_moment, singular_set_samples, GlobalFamily};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmoebaPoint {
    pub stratum: (usize, usize),
    /// Fubini–Study moment coordinates, summing to one.
    pub moment: Vec<f64>,
}

/// `Γ̃`: moment images of the sampled singular set. `C` does not depend on
/// `t`, so neither does the cloud; `t` is checked only for positivity.
pub fn amoeba(family: &GlobalFamily, t: f64, density: usize) -> Vec<AmoebaPoint> {
    if !(t > 0.0) {
        return Vec::new();
    }
    let mut pts: Vec<AmoebaPoint> = singular_set_samples(family, t, density)
        .into_iter()
        .map(|s| AmoebaPoint {
            stratum: s.stratum,
            moment: fs_moment(&s.x),
        })
        .collect();
    pts.sort_by(|a, b| {
        a.stratum
            .cmp(&b.stratum)
            .then_with(|| a.moment.partial_cmp(&b.moment).unwrap_or(std::cmp::Ordering::Equal))
    });
    pts
}

/// Distinct image locations, merging points closer than `tol`, with their
/// multiplicities.
pub fn amoeba_clusters(points: &[AmoebaPoint], tol: f64) -> Vec<(Vec<f64>, usize)> {
    let mut out: Vec<(Vec<f64>, usize)> = Vec::new();
    for p in points {
        let hit = out.iter_mut().find(|(c, _)| {
            c.iter().zip(&p.moment).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= tol
        });
        match hit {
            Some((_, k)) => *k += 1,
            None => out.push((p.moment.clone(), 1)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_edge_midpoints() {
        let f = GlobalFamily::fermat(3).unwrap();
        let pts = amoeba(&f, 1e-3, 4);
        assert_eq!(pts.len(), 24);
        let clusters = amoeba_clusters(&pts, 1e-9);
        assert_eq!(clusters.len(), 6);
        for (c, k) in clusters {
            assert_eq!(k, 4);
            let mut v = c.clone();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert!(v[0].abs() < 1e-12 && v[1].abs() < 1e-12);
            assert!((v[2] - 0.5).abs() < 1e-12 && (v[3] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn independent_of_t() {
        let f = GlobalFamily::fermat(3).unwrap();
        assert_eq!(amoeba(&f, 1e-2, 4), amoeba(&f, 1e-3, 4));
        assert!(amoeba(&GlobalFamily::fermat(2).unwrap(), 1e-3, 4).is_empty());
    }
}
