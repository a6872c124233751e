//! Fixed-step RK4 integration and trajectory diagnostics.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::manifold::CentreManifoldMap;
use crate::poly::PolyMap;
use crate::spectral::SpectralSplit;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 20.0;
pub const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// `times[i] = i * dt`.
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn last(&self) -> Option<(f64, &[f64])> {
        Some((*self.times.last()?, self.states.last()?.as_slice()))
    }

    /// The same samples in coordinates `M x`.
    pub fn map_linear(&self, m: &DMatrix<f64>, labels: Vec<String>) -> Result<Trajectory> {
        if m.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                left: self.dim(),
                right: m.ncols(),
            });
        }
        let states = self
            .states
            .iter()
            .map(|x| {
                (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * x[j]).sum())
                    .collect()
            })
            .collect();
        Ok(Trajectory {
            times: self.times.clone(),
            states,
            labels,
        })
    }

    /// Header `t,<labels>`, then one row per sample with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(std::iter::once("t").chain(self.labels.iter().map(String::as_str)))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            w.write_record(std::iter::once(t).chain(x).map(|v| format!("{v:.16e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn axpy(x: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Classical RK4 with step `dt` up to `round(t_end / dt)` steps.
pub fn integrate(field: &PolyMap, x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    integrate_labeled(field, x0, t_end, dt, default_labels(x0.len()))
}

pub fn integrate_labeled(
    field: &PolyMap,
    x0: &[f64],
    t_end: f64,
    dt: f64,
    labels: Vec<String>,
) -> Result<Trajectory> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidStep(format!("dt must be positive, got {dt}")));
    }
    if !t_end.is_finite() || t_end < dt {
        return Err(Error::InvalidStep(format!("t_end must be at least dt, got {t_end}")));
    }
    let n = x0.len();
    if field.len() != n || field.nvars() != n {
        return Err(Error::DimensionMismatch {
            left: field.len(),
            right: n,
        });
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            left: labels.len(),
            right: n,
        });
    }
    let steps = (t_end / dt).round() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.to_vec());

    let mut x = x0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    for i in 1..=steps {
        field.eval_into(&x, &mut k1);
        axpy(&x, 0.5 * dt, &k1, &mut tmp);
        field.eval_into(&tmp, &mut k2);
        axpy(&x, 0.5 * dt, &k2, &mut tmp);
        field.eval_into(&tmp, &mut k3);
        axpy(&x, dt, &k3, &mut tmp);
        field.eval_into(&tmp, &mut k4);
        for j in 0..n {
            x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        let t = i as f64 * dt;
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            return Err(Error::Divergence { time: t, norm });
        }
        times.push(t);
        states.push(x.clone());
    }
    Ok(Trajectory {
        times,
        states,
        labels,
    })
}

/// Distance from the manifold graph at each sample,
/// `max_j |v_j(t) - h_j(u(t))|`, for a trajectory in eigen-coordinates.
pub fn manifold_residual(traj: &Trajectory, split: &SpectralSplit, h: &CentreManifoldMap) -> Result<Vec<f64>> {
    if traj.dim() != split.dim() {
        return Err(Error::DimensionMismatch {
            left: traj.dim(),
            right: split.dim(),
        });
    }
    let c = split.centre_dim;
    Ok(traj
        .states
        .iter()
        .map(|s| {
            let hv = h.eval(&s[..c]);
            s[c..]
                .iter()
                .zip(&hv)
                .fold(0.0f64, |m, (v, hv)| m.max((v - hv).abs()))
        })
        .collect())
}

/// `(t, sqrt(x_i^2 + x_j^2))` per sample.
pub fn amplitude_series(traj: &Trajectory, (i, j): (usize, usize)) -> Vec<(f64, f64)> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (*t, s[i].hypot(s[j])))
        .collect()
}

/// `(t, atan2(x_j, x_i))` per sample, unwrapped to be continuous.
pub fn angle_series(traj: &Trajectory, (i, j): (usize, usize)) -> Vec<(f64, f64)> {
    let tau = std::f64::consts::TAU;
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(traj.len());
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let mut a = s[j].atan2(s[i]);
        if let Some(&(_, prev)) = out.last() {
            a += tau * ((prev - a) / tau).round();
        }
        out.push((*t, a));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::manifold::{reduce, solve_centre_manifold};
    use crate::poly::Polynomial;
    use crate::spectral::{
        coordinate_names, eigen_split, linear_part, to_eigenbasis, DEFAULT_ZERO_TOL,
    };
    use crate::sysdsl::parse_system;
    use std::f64::consts::{PI, SQRT_2};

    fn field(src: &str) -> PolyMap {
        parse_system(src).unwrap().field
    }

    fn decay() -> PolyMap {
        field("vars x\ndx/dt = -x")
    }

    #[test]
    fn exponential_decay() {
        let tr = integrate(&decay(), &[1.0], 1.0, 1e-3).unwrap();
        assert_eq!(tr.len(), 1001);
        let (t, x) = tr.last().unwrap();
        assert!((t - 1.0).abs() < 1e-12);
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-9);
        for (i, t) in tr.times.iter().enumerate() {
            assert!((t - i as f64 * 1e-3).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_field_is_constant() {
        let f = PolyMap::zero(2, 2);
        let tr = integrate(&f, &[0.3, -2.0], 2.0, 0.1).unwrap();
        assert!(tr.states.iter().all(|s| s == &[0.3, -2.0]));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |dt: f64| {
            let tr = integrate(&decay(), &[1.0], 2.0, dt).unwrap();
            tr.times
                .iter()
                .zip(&tr.states)
                .fold(0.0f64, |m, (t, x)| m.max((x[0] - (-t).exp()).abs()))
        };
        let (coarse, fine) = (err(0.1), err(0.05));
        assert!(coarse / fine >= 12.0, "ratio {}", coarse / fine);
    }

    #[test]
    fn shifted_radial_equation_matches_closed_form() {
        let l = 1.0;
        let s2l = SQRT_2 * l;
        // r'' = (r' + sqrt2 l) r' / sqrt2
        let f = PolyMap::new(
            1,
            vec![Polynomial::from_terms(1, [(vec![2], 1.0 / SQRT_2), (vec![1], l)])],
        )
        .unwrap();
        let r0 = -0.1;
        let k = 1.0 + s2l / r0;
        let tr = integrate(&f, &[r0], 10.0, 1e-3).unwrap();
        for (t, x) in tr.times.iter().zip(&tr.states) {
            let exact = s2l / (k * (-l * t).exp() - 1.0);
            assert!((x[0] - exact).abs() <= 1e-6, "t={t}");
        }
        let (_, end) = tr.last().unwrap();
        assert!((end[0] + s2l).abs() < 1e-3);
    }

    #[test]
    fn blow_up_reports_time() {
        let f = field("vars x\ndx/dt = x^2");
        match integrate(&f, &[1.0], 5.0, 1e-3) {
            Err(Error::Divergence { time, .. }) => assert!((time - 1.0).abs() < 1e-2, "{time}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_steps_rejected() {
        assert!(matches!(integrate(&decay(), &[1.0], 1.0, 0.0), Err(Error::InvalidStep(_))));
        assert!(matches!(integrate(&decay(), &[1.0], 1e-4, 1e-3), Err(Error::InvalidStep(_))));
        assert!(matches!(integrate(&decay(), &[1.0, 2.0], 1.0, 0.1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn csv_layout() {
        let tr = integrate(&decay(), &[1.0], 0.2, 0.1).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,x1");
        assert_eq!(lines[1], "0.0000000000000000e0,1.0000000000000000e0");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn angle_unwrapping() {
        let tr = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            states: vec![vec![-1.0, 0.1], vec![-1.0, -0.1], vec![1.0, 0.0]],
            labels: vec!["a".into(), "b".into()],
        };
        let a = angle_series(&tr, (0, 1));
        assert!(a[1].1 > PI && a[1].1 < PI + 0.2);
        assert!((a[2].1 - 2.0 * PI).abs() < 1e-12);
    }

    fn eigen_pipeline(src: &str) -> (crate::spectral::TransformedSystem, CentreManifoldMap) {
        let spec = parse_system(src).unwrap();
        let split = eigen_split(&linear_part(&spec).unwrap(), DEFAULT_ZERO_TOL).unwrap();
        let sys = to_eigenbasis(&spec, &split).unwrap();
        let h = solve_centre_manifold(&sys, 2).unwrap();
        (sys, h)
    }

    #[test]
    fn start_on_manifold_has_zero_residual() {
        let (sys, h) = eigen_pipeline(cases::GENERIC3D);
        let u0 = [0.05, -0.02];
        let v0 = h.eval(&u0)[0];
        let tr = integrate(&sys.field(), &[u0[0], u0[1], v0], 1.0, 1e-3).unwrap();
        let res = manifold_residual(&tr, &sys.split, &h).unwrap();
        assert_eq!(res[0], 0.0);
    }

    #[test]
    fn generic3d_is_attracted_to_manifold() {
        let (sys, h) = eigen_pipeline(cases::GENERIC3D);
        let tr = integrate(&sys.field(), &[0.05, 0.0, 0.02], 10.0, 1e-3).unwrap();
        let res = manifold_residual(&tr, &sys.split, &h).unwrap();
        assert!(res[res.len() - 1] < res[0]);
    }

    #[test]
    fn linear_residual_follows_stable_decay() {
        let (sys, h) = eigen_pipeline("vars x y z\ndx/dt = y\ndy/dt = -x\ndz/dt = -2*z");
        let tr = integrate(&sys.field(), &[0.3, 0.1, 0.5], 3.0, 1e-3).unwrap();
        let res = manifold_residual(&tr, &sys.split, &h).unwrap();
        for w in res.windows(2) {
            assert!(w[1] < w[0]);
        }
        for (t, r) in tr.times.iter().zip(&res) {
            assert!((r - 0.5 * (-2.0 * t).exp()).abs() < 1e-10);
        }
        assert_eq!(coordinate_names(&sys.split), ["u1", "u2", "v1"]);
    }

    #[test]
    fn amplitude_of_rotation_and_origin() {
        let f = field("vars x y\ndx/dt = y\ndy/dt = -x");
        let tr = integrate(&f, &[0.6, 0.0], 10.0, 1e-3).unwrap();
        assert!(amplitude_series(&tr, (0, 1)).iter().all(|(_, r)| (r - 0.6).abs() < 1e-6));
        let tr = integrate(&f, &[0.0, 0.0], 1.0, 1e-3).unwrap();
        assert!(amplitude_series(&tr, (0, 1)).iter().all(|(_, r)| *r == 0.0));
    }

    fn all_ones_reduced() -> PolyMap {
        let (sys, h) = eigen_pipeline(cases::GENERIC3D);
        reduce(&sys, &h).field
    }

    #[test]
    fn reduced_all_ones_orbit_neither_decays_nor_escapes() {
        // The reduced planar flow is reversible under (x, y, t) -> (-y, -x, -t),
        // so orbits near the origin are closed: the amplitude oscillates
        // instead of decaying.
        let th = 7.0 * PI / 4.0;
        let x0 = [0.5 * th.cos(), 0.5 * th.sin()];
        let tr = integrate(&all_ones_reduced(), &x0, 20.0, 1e-3).unwrap();
        let amp = amplitude_series(&tr, (0, 1));
        let lo = amp.iter().fold(f64::INFINITY, |m, (_, r)| m.min(*r));
        let hi = amp.iter().fold(0.0f64, |m, (_, r)| m.max(*r));
        assert!(lo > 0.15 && hi < 0.5 + 1e-9, "{lo} {hi}");
        assert!(amp.last().unwrap().1 > 0.05);
    }

    #[test]
    fn reduced_all_ones_spirals_clockwise() {
        let tr = integrate(&all_ones_reduced(), &[0.01, 0.0], 20.0, 1e-3).unwrap();
        let ang = angle_series(&tr, (0, 1));
        assert!(ang.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn protein_reduced_flow_grows_for_positive_u() {
        let spec = parse_system(cases::PROTEIN).unwrap();
        let lin = linear_part(&spec).unwrap();
        let split = crate::spectral::split_with_basis(&lin, spec.basis.as_ref().unwrap(), DEFAULT_ZERO_TOL).unwrap();
        let sys = to_eigenbasis(&spec, &split).unwrap();
        let red = reduce(&sys, &solve_centre_manifold(&sys, 2).unwrap());
        let tr = integrate(&red.field, &[0.1], 10.0, 1e-3).unwrap();
        assert!(tr.states.windows(2).all(|w| w[1][0] > w[0][0]));
        // u = u0 / (1 - gamma u0 t)
        let (t, u) = tr.last().unwrap();
        assert!((u[0] - 0.1 / (1.0 - 0.05 * t)).abs() < 1e-9);
    }
}
