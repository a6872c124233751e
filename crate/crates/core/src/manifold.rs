//! Order-by-order solution of the centre manifold invariance equation
//!
//! `Dh(x) (A x + f(x, h(x))) = B h(x) + g(x, h(x))`
//!
//! for a polynomial graph `y = h(x)` over the centre coordinates.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::condition_number;
use crate::poly::{Monomial, Parity, PolyMap, Polynomial};
use crate::spectral::TransformedSystem;

pub const MIN_ORDER: u32 = 2;
pub const MAX_ORDER: u32 = 4;
pub const RESONANCE_CONDITION: f64 = 1e10;
/// Degree-2 coefficients below this are set to exactly zero.
pub const LEADING_SNAP: f64 = 1e-10;
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct CentreManifoldMap {
    pub order: u32,
    /// One component per stable coordinate, over the centre coordinates.
    pub h: PolyMap,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifoldCoefficient {
    pub degree: u32,
    pub exponents: Vec<u32>,
    pub component: usize,
    pub value: f64,
}

impl CentreManifoldMap {
    /// Nonzero coefficients ordered by component, then ascending monomial.
    pub fn coefficients(&self) -> Vec<ManifoldCoefficient> {
        self.h
            .components()
            .iter()
            .enumerate()
            .flat_map(|(k, p)| {
                p.terms().map(move |(m, v)| ManifoldCoefficient {
                    degree: m.degree(),
                    exponents: m.exponents().to_vec(),
                    component: k,
                    value: v,
                })
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.h.eval(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedSystem {
    /// `A x + f(x, h(x))` truncated at the manifold order.
    pub field: PolyMap,
    pub centre_block: DMatrix<f64>,
    pub order: u32,
}

impl ReducedSystem {
    pub fn dim(&self) -> usize {
        self.field.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictedParity {
    Even,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ParityReport {
    pub f_parity: Parity,
    pub g_parity: Parity,
    pub predicted_h_parity: PredictedParity,
    pub observed_odd_mass: f64,
}

fn check_order(order: u32) -> Result<()> {
    if (MIN_ORDER..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange(order))
    }
}

/// Substitution list `(x_1..x_c, h_1..h_s)` as polynomials in `x`.
fn graph_substitutes(c: usize, h: &PolyMap) -> Vec<Polynomial> {
    (0..c)
        .map(|i| Polynomial::var(c, i))
        .chain(h.components().iter().cloned())
        .collect()
}

/// `Dh . v`, componentwise, truncated.
fn directional(h: &PolyMap, v: &[Polynomial], max_degree: u32) -> Vec<Polynomial> {
    let c = h.nvars();
    h.components()
        .iter()
        .map(|hk| {
            let mut acc = Polynomial::zero(c);
            for (j, vj) in v.iter().enumerate() {
                let d = hk.partial(j);
                if !d.is_zero() {
                    acc = &acc + &d.mul_truncated(vj, Some(max_degree));
                }
            }
            acc
        })
        .collect()
}

fn matvec(m: &DMatrix<f64>, v: &[Polynomial], nvars: usize) -> Vec<Polynomial> {
    (0..m.nrows())
        .map(|i| {
            v.iter().enumerate().fold(Polynomial::zero(nvars), |acc, (j, p)| {
                let a = m[(i, j)];
                if a == 0.0 {
                    acc
                } else {
                    &acc + &p.scale(a)
                }
            })
        })
        .collect()
}

/// `Dh (A x + f(x, h)) - (B h + g(x, h))`, truncated at `order`.
pub fn invariance_residual(sys: &TransformedSystem, h: &CentreManifoldMap, order: u32) -> PolyMap {
    residual_map(sys, &h.h, order)
}

fn residual_map(sys: &TransformedSystem, h: &PolyMap, order: u32) -> PolyMap {
    let c = sys.split.centre_dim;
    let subs = graph_substitutes(c, h);
    let composed = sys
        .nonlinear
        .compose(&subs, Some(order))
        .expect("substitution list matches the eigen-coordinates");
    let x: Vec<Polynomial> = (0..c).map(|i| Polynomial::var(c, i)).collect();
    let ax = matvec(&sys.split.centre_block, &x, c);
    let flow: Vec<Polynomial> = ax
        .iter()
        .zip(&composed.components()[..c])
        .map(|(a, f)| a + f)
        .collect();
    let transport = directional(h, &flow, order);
    let bh = matvec(&sys.split.stable_block, h.components(), c);
    let comps = transport
        .iter()
        .zip(&bh)
        .zip(&composed.components()[c..])
        .map(|((t, b), g)| (&(t - b) - g).truncate(order))
        .collect();
    PolyMap::new(c, comps).expect("all components over the centre coordinates")
}

/// Solves degree `2..=order` in turn. At each degree the unknown
/// coefficients enter only through `Dh_d A x - B h_d`, so every step is a
/// square linear solve.
pub fn solve_centre_manifold(sys: &TransformedSystem, order: u32) -> Result<CentreManifoldMap> {
    check_order(order)?;
    let c = sys.split.centre_dim;
    let s = sys.split.stable_dim;
    let mut h = PolyMap::zero(s, c);
    if c == 0 || s == 0 {
        return Ok(CentreManifoldMap { order, h });
    }
    let a = &sys.split.centre_block;
    let b = &sys.split.stable_block;
    let x: Vec<Polynomial> = (0..c).map(|i| Polynomial::var(c, i)).collect();
    let ax = matvec(a, &x, c);

    for d in MIN_ORDER..=order {
        let monos = Monomial::all_of_degree(c, d);
        let md = monos.len();
        let size = s * md;
        let index = |m: &Monomial| monos.binary_search(m).expect("homogeneous degree d");

        let mut op = DMatrix::zeros(size, size);
        for (mi, m) in monos.iter().enumerate() {
            let mono = Polynomial::from_terms(c, [(m.exponents().to_vec(), 1.0)]);
            // Lie derivative of the monomial along A x
            let mut lie = Polynomial::zero(c);
            for (i, axi) in ax.iter().enumerate() {
                let dm = mono.partial(i);
                if !dm.is_zero() {
                    lie = &lie + &(&dm * axi);
                }
            }
            for j in 0..s {
                let col = j * md + mi;
                for (mono_out, v) in lie.terms() {
                    op[(j * md + index(mono_out), col)] += v;
                }
                for k in 0..s {
                    op[(k * md + mi, col)] -= b[(k, j)];
                }
            }
        }
        let condition = condition_number(&op);
        if condition > RESONANCE_CONDITION {
            return Err(Error::Resonance { degree: d, condition });
        }

        let r = residual_map(sys, &h, d).homogeneous(d);
        let rhs = DVector::from_fn(size, |row, _| {
            let (k, mi) = (row / md, row % md);
            -r.component(k).coeff(monos[mi].exponents())
        });
        let sol = op
            .lu()
            .solve(&rhs)
            .ok_or(Error::Resonance { degree: d, condition })?;

        let snap = d == MIN_ORDER && sol.iter().all(|v| v.abs() < LEADING_SNAP);
        let comps = h
            .components()
            .iter()
            .enumerate()
            .map(|(k, hk)| {
                if snap {
                    return hk.clone();
                }
                let terms = monos
                    .iter()
                    .enumerate()
                    .map(|(mi, m)| (m.exponents().to_vec(), sol[k * md + mi]));
                hk + &Polynomial::from_terms(c, terms)
            })
            .collect();
        h = PolyMap::new(c, comps)?;
    }
    Ok(CentreManifoldMap { order, h })
}

/// The flow restricted to the manifold: `A x + f(x, h(x))` up to the order of `h`.
pub fn reduce(sys: &TransformedSystem, h: &CentreManifoldMap) -> ReducedSystem {
    let c = sys.split.centre_dim;
    let centre_block = sys.split.centre_block.clone();
    let x: Vec<Polynomial> = (0..c).map(|i| Polynomial::var(c, i)).collect();
    let ax = matvec(&centre_block, &x, c);
    let field = if c == 0 {
        PolyMap::zero(0, 0)
    } else {
        let f = sys
            .centre_nonlinear()
            .compose(&graph_substitutes(c, &h.h), Some(h.order))
            .expect("substitution list matches the eigen-coordinates");
        let comps = ax.iter().zip(f.components()).map(|(a, f)| a + f).collect();
        PolyMap::new(c, comps).expect("centre coordinates")
    };
    ReducedSystem {
        field,
        centre_block,
        order: h.order,
    }
}

pub fn parity_check(sys: &TransformedSystem, h: &CentreManifoldMap) -> ParityReport {
    let f_parity = sys.centre_nonlinear().parity();
    let g_parity = sys.stable_nonlinear().parity();
    let predicted_h_parity = if f_parity == Parity::Even && g_parity == Parity::Even {
        PredictedParity::Even
    } else {
        PredictedParity::Unknown
    };
    ParityReport {
        f_parity,
        g_parity,
        predicted_h_parity,
        observed_odd_mass: h.h.max_abs_where(|d| d % 2 == 1),
    }
}

/// Degree of the lowest term of `h` whose coefficient exceeds `threshold`.
pub fn leading_degree(h: &CentreManifoldMap, threshold: f64) -> Option<u32> {
    h.h.components()
        .iter()
        .flat_map(|p| p.terms())
        .filter(|(_, v)| v.abs() > threshold)
        .map(|(m, _)| m.degree())
        .min()
}
