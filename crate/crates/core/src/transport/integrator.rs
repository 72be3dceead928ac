//! Dormand–Prince 5(4) integration of the Hamiltonian-gradient flow with
//! projection back onto the moving hypersurface after every step.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{FamilyChart, Param};
use crate::linalg::C64;
use crate::toric::ToricKahlerPotential;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepMode {
    /// Embedded error control with mixed absolute/relative tolerance.
    Adaptive { tol: f64 },
    /// Uniform steps; the flow map is then a smooth function of its start point.
    Fixed { steps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSettings {
    pub mode: StepMode,
    /// Radius of the excluded neighbourhood of `Sing(X_0)` in coordinate size.
    pub delta_sing: f64,
}

/// One-parameter path through the two-parameter family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    pub param: Param,
    /// The parameter held fixed: `s` when `t` flows, `t` when `s` flows.
    pub fixed: f64,
}

impl FlowPath {
    /// `(t, s)` at parameter value `u`.
    pub fn state(&self, u: f64) -> (f64, f64) {
        match self.param {
            Param::T => (u, self.fixed),
            Param::S => (self.fixed, u),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowStats {
    pub accepted: usize,
    pub rejected: usize,
    pub min_step: f64,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Second-smallest coordinate modulus: small values mean two coordinates
/// nearly vanish, i.e. the point is near the singular strata of `X_0`.
pub fn singular_proximity(z: &[C64]) -> f64 {
    let mut r: Vec<f64> = z.iter().map(|v| v.norm()).collect();
    r.sort_by(|a, b| a.partial_cmp(b).unwrap());
    r[1.min(r.len() - 1)]
}

/// Default `delta_sing = t^{1/(n+1)} / 4`.
pub fn default_delta_sing(t: f64, n: usize) -> f64 {
    t.abs().powf(1.0 / (n as f64 + 1.0)) / 4.0
}

pub struct Flow<'a> {
    pub chart: &'a FamilyChart,
    pub metric: &'a ToricKahlerPotential,
    pub path: FlowPath,
}

impl<'a> Flow<'a> {
    fn rhs(&self, z: &[C64], u: f64) -> Result<Vec<C64>> {
        let (t, s) = self.path.state(u);
        self.chart
            .flow_field(z, t, s, self.path.param, self.metric)
            .map_err(|e| match e {
                Error::SingularPoint { .. } => Error::SingularApproach { u },
                other => other,
            })
    }

    fn dopri_step(&self, z: &[C64], u: f64, h: f64) -> Result<(Vec<C64>, Vec<C64>)> {
        let d = z.len();
        let mut k: Vec<Vec<C64>> = Vec::with_capacity(7);
        for stage in 0..7 {
            let mut y = z.to_vec();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    for i in 0..d {
                        y[i] += kj[i] * (h * a);
                    }
                }
            }
            k.push(self.rhs(&y, u + C[stage] * h)?);
        }
        let mut y5 = z.to_vec();
        let mut err = vec![C64::new(0.0, 0.0); d];
        for (s, ks) in k.iter().enumerate() {
            for i in 0..d {
                y5[i] += ks[i] * (h * B5[s]);
                err[i] += ks[i] * (h * (B5[s] - B4[s]));
            }
        }
        Ok((y5, err))
    }

    fn after_step(&self, z: &mut [C64], u: f64, settings: &FlowSettings) -> Result<()> {
        let (t, s) = self.path.state(u);
        self.chart.project(z, t, s, 2);
        if z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::SingularApproach { u });
        }
        if singular_proximity(z) < settings.delta_sing {
            return Err(Error::SingularApproach { u });
        }
        Ok(())
    }

    /// Flows `z0` (a point of the family at parameter `u0`) to `u1`.
    pub fn integrate(
        &self,
        z0: &[C64],
        u0: f64,
        u1: f64,
        settings: &FlowSettings,
    ) -> Result<(Vec<C64>, FlowStats)> {
        let mut z = z0.to_vec();
        let mut stats = FlowStats {
            min_step: f64::INFINITY,
            ..Default::default()
        };
        let span = u1 - u0;
        if span == 0.0 || (self.path.param == Param::S && self.chart.p_check.is_zero()) {
            // with pcheck = 0 the s-flow field vanishes identically
            return Ok((z, stats));
        }
        match settings.mode {
            StepMode::Fixed { steps } => {
                let steps = steps.max(1);
                let h = span / steps as f64;
                for i in 0..steps {
                    let u = u0 + h * i as f64;
                    let (y, _) = self.dopri_step(&z, u, h)?;
                    z = y;
                    let un = if i + 1 == steps { u1 } else { u + h };
                    self.after_step(&mut z, un, settings)?;
                }
                stats.accepted = steps;
                stats.min_step = h.abs();
            }
            StepMode::Adaptive { tol } => {
                let dir = span.signum();
                let mut u = u0;
                let mut h = span / 8.0;
                let floor = 1e-14 * span.abs();
                while (u1 - u) * dir > 0.0 {
                    if (u + h - u1) * dir > 0.0 {
                        h = u1 - u;
                    }
                    let (y, err) = self.dopri_step(&z, u, h)?;
                    let en = err
                        .iter()
                        .zip(&y)
                        .map(|(e, v)| e.norm() / (tol * (1.0 + v.norm())))
                        .fold(0.0, f64::max);
                    if en <= 1.0 {
                        u = if ((u + h) - u1) * dir >= 0.0 { u1 } else { u + h };
                        z = y;
                        self.after_step(&mut z, u, settings)?;
                        stats.accepted += 1;
                        stats.min_step = stats.min_step.min(h.abs());
                    } else {
                        stats.rejected += 1;
                    }
                    let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
                    h *= fac;
                    if h.abs() < floor && (u1 - u) * dir > floor {
                        return Err(Error::StepUnderflow { u });
                    }
                }
            }
        }
        Ok((z, stats))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::SparsePoly;

    #[test]
    fn zero_span_returns_start() {
        let ch = FamilyChart::local_model(1);
        let m = ToricKahlerPotential::fubini_study(2);
        let f = Flow {
            chart: &ch,
            metric: &m,
            path: FlowPath { param: Param::T, fixed: 1.0 },
        };
        let z0 = vec![C64::new(0.0, 0.0), C64::new(0.5, 0.1)];
        let s = FlowSettings { mode: StepMode::Adaptive { tol: 1e-10 }, delta_sing: 0.0 };
        let (z, _) = f.integrate(&z0, 0.0, 0.0, &s).unwrap();
        assert_eq!(z, z0);
    }

    #[test]
    fn local_model_t_flow_stays_on_hypersurface() {
        let ch = FamilyChart::local_model(1);
        let m = ToricKahlerPotential::euclidean(2);
        let f = Flow {
            chart: &ch,
            metric: &m,
            path: FlowPath { param: Param::T, fixed: 1.0 },
        };
        let z0 = vec![C64::new(0.0, 0.0), C64::from_polar(0.7, 0.3)];
        let s = FlowSettings { mode: StepMode::Adaptive { tol: 1e-10 }, delta_sing: 0.0 };
        let (z, st) = f.integrate(&z0, 0.0, 0.01, &s).unwrap();
        assert!(ch.defect(&z, 0.01, 1.0) < 1e-12);
        assert!(st.accepted > 0);
        // toric symmetry: the angle of z1 is preserved by the flow
        assert!((z[1].arg() - 0.3).abs() < 1e-10);
    }

    #[test]
    fn fixed_and_adaptive_agree() {
        let ch = FamilyChart::new(1, SparsePoly::fermat(2, 3)).unwrap();
        let m = ToricKahlerPotential::fubini_study(2);
        let f = Flow {
            chart: &ch,
            metric: &m,
            path: FlowPath { param: Param::T, fixed: 1.0 },
        };
        let z0 = vec![C64::new(0.0, 0.0), C64::from_polar(0.6, 1.1)];
        let a = FlowSettings { mode: StepMode::Adaptive { tol: 1e-12 }, delta_sing: 0.0 };
        let b = FlowSettings { mode: StepMode::Fixed { steps: 40 }, delta_sing: 0.0 };
        let (za, _) = f.integrate(&z0, 0.0, 0.01, &a).unwrap();
        let (zb, _) = f.integrate(&z0, 0.0, 0.01, &b).unwrap();
        assert!(za.iter().zip(&zb).all(|(x, y)| (x - y).norm() < 1e-11));
    }
}
