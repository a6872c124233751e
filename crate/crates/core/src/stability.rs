//! Stability of the origin from the reduced flow: leading-term analysis on a
//! one-dimensional centre, polar analysis on a two-dimensional one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::manifold::ReducedSystem;
use crate::poly::{PolyMap, Polynomial};

/// Coefficients below this count as zero when looking for a leading term.
pub const LEADING_TOL: f64 = 1e-10;
pub const DEFAULT_THETA_SAMPLES: usize = 360;
pub const MIN_THETA_SAMPLES: usize = 8;
const ROOT_GRID: usize = 2048;
const SIGN_PROBE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Stable,
    Unstable,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub kind: VerdictKind,
    pub mechanism: String,
    /// 0 when no term survives.
    pub leading_degree: u32,
    pub leading_coefficient: f64,
}

fn require_centre_dim(red: &ReducedSystem, expected: usize) -> Result<()> {
    if red.dim() == expected {
        Ok(())
    } else {
        Err(Error::CentreDimension {
            expected,
            found: red.dim(),
        })
    }
}

/// `u' = gamma u^m + ...`: even `m` means the sign of `u'` is fixed near 0,
/// so the origin repels on one side.
pub fn classify_1d(red: &ReducedSystem) -> Result<StabilityVerdict> {
    require_centre_dim(red, 1)?;
    let p = red.field.component(0);
    let leading = p
        .terms()
        .find(|(m, v)| m.degree() >= 1 && v.abs() > LEADING_TOL)
        .map(|(m, v)| (m.degree(), v));
    let verdict = match leading {
        None => StabilityVerdict {
            kind: VerdictKind::Inconclusive,
            mechanism: "no-terms-up-to-order".into(),
            leading_degree: 0,
            leading_coefficient: 0.0,
        },
        Some((m, g)) => {
            let (kind, mechanism) = if m % 2 == 0 {
                (VerdictKind::Unstable, "even-leading-term")
            } else if g < 0.0 {
                (VerdictKind::Stable, "odd-leading-negative")
            } else {
                (VerdictKind::Unstable, "odd-leading-positive")
            };
            StabilityVerdict {
                kind,
                mechanism: mechanism.into(),
                leading_degree: m,
                leading_coefficient: g,
            }
        }
    };
    Ok(verdict)
}

/// `sum coeffs[k] r^k`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialPoly {
    pub coeffs: Vec<f64>,
}

impl RadialPoly {
    pub fn eval(&self, r: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * r + c)
    }

    /// Lowest power with a coefficient above `tol`.
    pub fn leading(&self, tol: f64) -> Option<(usize, f64)> {
        self.coeffs
            .iter()
            .enumerate()
            .find(|(_, c)| c.abs() > tol)
            .map(|(k, c)| (k, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == 0.0)
    }
}

/// Per-degree values of each component on the ray `(cos t, sin t)`:
/// `out[i][d]` is the degree-`d` part of component `i` at `r = 1`.
fn ray_profile(field: &PolyMap, theta: f64) -> Vec<Vec<f64>> {
    let (s, c) = theta.sin_cos();
    let top = field.degree().unwrap_or(0) as usize;
    field
        .components()
        .iter()
        .map(|p| {
            let mut by_degree = vec![0.0; top + 1];
            for (m, v) in p.terms() {
                let e = m.exponents();
                by_degree[m.degree() as usize] += v * c.powi(e[0] as i32) * s.powi(e[1] as i32);
            }
            by_degree
        })
        .collect()
}

/// `r' = (x x' + y y') / r` on the ray at angle `theta`. The numerator is
/// formed as a polynomial first so an antisymmetric linear part cancels
/// exactly.
pub fn radial_dynamics(red: &ReducedSystem, theta: f64) -> Result<RadialPoly> {
    require_centre_dim(red, 2)?;
    let f = red.field.components();
    let x = Polynomial::var(2, 0);
    let y = Polynomial::var(2, 1);
    let num = &(&x * &f[0]) + &(&y * &f[1]);
    let numerator = PolyMap::new(2, vec![num]).expect("planar");
    let prof = ray_profile(&numerator, theta);
    // degree d + 1 in (x, y) is degree d in r after dividing by r
    let coeffs = prof[0].iter().skip(1).copied().collect();
    Ok(RadialPoly { coeffs })
}

/// Growth of the amplitude read off one Cartesian component along the ray:
/// `r' = x' / cos(theta)` when `|cos| >= |sin|`, else `y' / sin(theta)`.
/// Unlike [`radial_dynamics`] this keeps the linear rotation term, which is
/// what gives the nonzero fixed points seen on individual rays.
pub fn ray_dynamics(red: &ReducedSystem, theta: f64) -> Result<RadialPoly> {
    require_centre_dim(red, 2)?;
    let (s, c) = theta.sin_cos();
    let prof = ray_profile(&red.field, theta);
    let (comp, div) = if c.abs() + 1e-12 >= s.abs() { (0, c) } else { (1, s) };
    let coeffs = prof[comp].iter().map(|v| v / div).collect();
    Ok(RadialPoly { coeffs })
}

/// `theta' = (x y' - y x') / r^2` at the point `(r cos theta, r sin theta)`.
pub fn angular_dynamics(red: &ReducedSystem, r: f64, theta: f64) -> Result<f64> {
    require_centre_dim(red, 2)?;
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::NonPositiveRadius(r));
    }
    let (s, c) = theta.sin_cos();
    let v = red.field.eval(&[r * c, r * s]);
    Ok((c * v[1] - s * v[0]) / r)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FixedPointClass {
    Sink,
    Source,
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedPoint {
    pub r: f64,
    pub class: FixedPointClass,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ray {
    pub theta: f64,
    pub radial_poly: RadialPoly,
    /// `r = 0` first, then nonzero roots in increasing order.
    pub fixed_points: Vec<FixedPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RadialAnalysis {
    pub r_max: f64,
    pub rays: Vec<Ray>,
}

impl RadialAnalysis {
    /// The sampled ray closest to `theta` (mod 2 pi).
    pub fn nearest_ray(&self, theta: f64) -> Option<&Ray> {
        let tau = std::f64::consts::TAU;
        let dist = |t: f64| {
            let d = (t - theta).rem_euclid(tau);
            d.min(tau - d)
        };
        self.rays.iter().min_by(|a, b| dist(a.theta).total_cmp(&dist(b.theta)))
    }
}

/// `10 (max |eig A| + 1)`.
pub fn default_r_max(red: &ReducedSystem) -> f64 {
    let a = &red.centre_block;
    let eig = crate::spectral::eigen::eigenvalues(a)
        .map(|v| v.iter().fold(0.0f64, |m, z| m.max(z.norm())))
        .unwrap_or_else(|_| crate::linalg::tol_scale(a));
    10.0 * (eig + 1.0)
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

fn bisect(p: &RadialPoly, mut lo: f64, mut hi: f64) -> f64 {
    let s_lo = sign(p.eval(lo));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = sign(p.eval(mid));
        if s == 0 {
            return mid;
        }
        if s == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn classify_root(p: &RadialPoly, r: f64) -> FixedPointClass {
    let d = SIGN_PROBE.min(0.5 * r);
    match (sign(p.eval(r - d)), sign(p.eval(r + d))) {
        (-1, 1) => FixedPointClass::Source,
        (1, -1) => FixedPointClass::Sink,
        _ => FixedPointClass::Degenerate,
    }
}

/// Fixed points of `r' = p(r)` on `[0, r_max]`. The origin is classified by
/// the sign of `p` just above zero; nonzero roots by the sign change of `p`.
pub fn ray_fixed_points(p: &RadialPoly, r_max: f64) -> Vec<FixedPoint> {
    let scale = p.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let origin = match p.leading(1e-12 * scale) {
        Some((_, c)) if c < 0.0 => FixedPointClass::Sink,
        Some(_) => FixedPointClass::Source,
        None => FixedPointClass::Degenerate,
    };
    let mut out = vec![FixedPoint { r: 0.0, class: origin }];
    if p.is_zero() || r_max <= 0.0 {
        return out;
    }
    let mut roots: Vec<f64> = Vec::new();
    let grid = |i: usize| r_max * i as f64 / ROOT_GRID as f64;
    let mut prev = (grid(1), p.eval(grid(1)));
    if prev.1 == 0.0 {
        roots.push(prev.0);
    }
    for i in 2..=ROOT_GRID {
        let r = grid(i);
        let v = p.eval(r);
        if v == 0.0 {
            roots.push(r);
        } else if sign(v) * sign(prev.1) < 0 {
            roots.push(bisect(p, prev.0, r));
        }
        prev = (r, v);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);
    out.extend(roots.into_iter().map(|r| FixedPoint {
        r,
        class: classify_root(p, r),
    }));
    out
}

fn theta_grid(samples: usize) -> Result<Vec<f64>> {
    if samples < MIN_THETA_SAMPLES {
        return Err(Error::RaySampling(samples));
    }
    Ok((0..samples)
        .map(|k| std::f64::consts::TAU * k as f64 / samples as f64)
        .collect())
}

/// Per-ray fixed points of [`ray_dynamics`] on `theta_k = 2 pi k / samples`.
pub fn radial_fixed_points(red: &ReducedSystem, theta_samples: usize, r_max: f64) -> Result<RadialAnalysis> {
    require_centre_dim(red, 2)?;
    if r_max.is_nan() || r_max <= 0.0 {
        return Err(Error::NonPositiveRadius(r_max));
    }
    let rays = theta_grid(theta_samples)?
        .into_iter()
        .map(|theta| {
            let radial_poly = ray_dynamics(red, theta)?;
            let fixed_points = ray_fixed_points(&radial_poly, r_max);
            Ok(Ray {
                theta,
                radial_poly,
                fixed_points,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RadialAnalysis { r_max, rays })
}

/// Planar verdict from the leading power of the true radial projection over
/// all sampled directions: one sign everywhere decides, mixed signs do not.
pub fn classify_2d(red: &ReducedSystem, theta_samples: usize) -> Result<StabilityVerdict> {
    require_centre_dim(red, 2)?;
    let polys = theta_grid(theta_samples)?
        .into_iter()
        .map(|t| radial_dynamics(red, t))
        .collect::<Result<Vec<_>>>()?;
    let top = polys.iter().map(|p| p.coeffs.len()).max().unwrap_or(0);
    for d in 1..top {
        let vals: Vec<f64> = polys.iter().map(|p| p.coeffs.get(d).copied().unwrap_or(0.0)).collect();
        if vals.iter().all(|v| v.abs() <= LEADING_TOL) {
            continue;
        }
        let (kind, mechanism, coeff) = if vals.iter().all(|v| *v < -LEADING_TOL) {
            let worst = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (VerdictKind::Stable, "radial-leading-negative", worst)
        } else if vals.iter().all(|v| *v > LEADING_TOL) {
            let worst = vals.iter().copied().fold(f64::INFINITY, f64::min);
            (VerdictKind::Unstable, "radial-leading-positive", worst)
        } else {
            let big = vals.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            (VerdictKind::Inconclusive, "radial-sign-indefinite", big)
        };
        return Ok(StabilityVerdict {
            kind,
            mechanism: mechanism.into(),
            leading_degree: d as u32,
            leading_coefficient: coeff,
        });
    }
    Ok(StabilityVerdict {
        kind: VerdictKind::Inconclusive,
        mechanism: "no-radial-terms-up-to-order".into(),
        leading_degree: 0,
        leading_coefficient: 0.0,
    })
}
