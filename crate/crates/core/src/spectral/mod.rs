//! Linear part at the origin, centre/stable splitting and the change to
//! block-diagonal eigen-coordinates.

pub mod eigen;

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{block_diag, condition_number, max_abs, tol_scale};
use crate::poly::{PolyMap, Polynomial, PRUNE_TOL};
use crate::sysdsl::{SystemSpec, EQUILIBRIUM_TOL};

pub const DEFAULT_ZERO_TOL: f64 = 1e-9;
/// Relative tolerance for block-diagonality and low-degree leftovers.
pub const BLOCK_TOL: f64 = 1e-9;
pub const DEFECT_CONDITION: f64 = 1e8;
/// Multiple roots of the characteristic polynomial split by roughly
/// `eps^(1/k)`; cluster means are accurate again.
const IMAG_SNAP: f64 = 1e-5;
const CLUSTER_TOL: f64 = 1e-5;
const NULL_TOL: f64 = 1e-7;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearPart {
    pub matrix: DMatrix<f64>,
}

impl LinearPart {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn linear_part(spec: &SystemSpec) -> Result<LinearPart> {
    check_constants(&spec.field)?;
    Ok(LinearPart {
        matrix: spec.field.linear_matrix(),
    })
}

fn check_constants(field: &PolyMap) -> Result<()> {
    let constants = field.constants();
    if constants.iter().any(|c| c.abs() > EQUILIBRIUM_TOL) {
        return Err(Error::NonzeroConstant { constants });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SubspaceKind {
    Centre,
    Stable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    pub kind: SubspaceKind,
}

#[derive(Clone, Debug)]
pub struct SpectralSplit {
    pub centre_dim: usize,
    pub stable_dim: usize,
    /// Centre eigenvalues first, conjugate pairs adjacent (`+im` first).
    pub eigenvalues: Vec<Eigenvalue>,
    pub basis: DMatrix<f64>,
    pub basis_inv: DMatrix<f64>,
    pub centre_block: DMatrix<f64>,
    pub stable_block: DMatrix<f64>,
    pub zero_tol: f64,
    /// True when `basis` was supplied by the user rather than computed.
    pub basis_override: bool,
}

impl SpectralSplit {
    pub fn dim(&self) -> usize {
        self.centre_dim + self.stable_dim
    }

    pub fn block_diagonal(&self) -> DMatrix<f64> {
        block_diag(&self.centre_block, &self.stable_block)
    }

    /// `max |P P^-1 - I|`.
    pub fn reconstruction_error(&self) -> f64 {
        let n = self.dim();
        max_abs(&(&self.basis * &self.basis_inv - DMatrix::identity(n, n)))
    }

    /// `max |P^-1 J P - diag(A, B)|`.
    pub fn block_error(&self, j: &DMatrix<f64>) -> f64 {
        max_abs(&(&self.basis_inv * j * &self.basis - self.block_diagonal()))
    }
}

fn classify(re: f64, im: f64, zero_tol: f64) -> Result<SubspaceKind> {
    if re > zero_tol {
        Err(Error::UnsupportedSpectrum { re, im })
    } else if re > -zero_tol {
        Ok(SubspaceKind::Centre)
    } else {
        Ok(SubspaceKind::Stable)
    }
}

/// A group of numerically equal eigenvalues; complex clusters store the
/// member with positive imaginary part and stand for the conjugates too.
#[derive(Clone, Debug)]
struct Cluster {
    re: f64,
    im: f64,
    mult: usize,
    kind: SubspaceKind,
}

fn cluster(values: &[Complex<f64>], scale: f64, zero_tol: f64) -> Result<Vec<Cluster>> {
    let mut upper: Vec<Complex<f64>> = values
        .iter()
        .map(|z| {
            if z.im.abs() <= IMAG_SNAP * scale {
                Complex::new(z.re, 0.0)
            } else {
                *z
            }
        })
        .filter(|z| z.im >= 0.0)
        .collect();
    upper.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));

    let mut groups: Vec<Vec<Complex<f64>>> = Vec::new();
    for z in upper {
        let joined = groups.iter_mut().find(|g| {
            let c = g[0];
            (c.im == 0.0) == (z.im == 0.0) && (c - z).norm() <= CLUSTER_TOL * scale
        });
        match joined {
            Some(g) => g.push(z),
            None => groups.push(vec![z]),
        }
    }
    let mut out = groups
        .into_iter()
        .map(|g| {
            let k = g.len() as f64;
            let re = g.iter().map(|z| z.re).sum::<f64>() / k;
            let im = g.iter().map(|z| z.im).sum::<f64>() / k;
            let kind = classify(re, im, zero_tol)?;
            Ok(Cluster {
                re: re + 0.0,
                im,
                mult: g.len(),
                kind,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| {
        let rank = |k: SubspaceKind| (k == SubspaceKind::Stable) as u8;
        rank(a.kind)
            .cmp(&rank(b.kind))
            .then(b.re.total_cmp(&a.re))
            .then(a.im.total_cmp(&b.im))
    });
    Ok(out)
}

/// The `mult` right-singular vectors of smallest singular value, checked to
/// be a genuine null space.
fn real_null_space(m: &DMatrix<f64>, mult: usize, scale: f64) -> Result<Vec<DVector<f64>>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let worst = svd.singular_values[idx[mult - 1]];
    if worst > NULL_TOL * scale {
        return Err(Error::Defective {
            condition: scale / svd.singular_values[idx[0]].max(f64::MIN_POSITIVE),
        });
    }
    Ok(idx[..mult]
        .iter()
        .map(|&i| v_t.row(i).transpose())
        .collect())
}

fn complex_null_space(
    m: &DMatrix<Complex<f64>>,
    mult: usize,
    scale: f64,
) -> Result<Vec<DVector<Complex<f64>>>> {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let worst = svd.singular_values[idx[mult - 1]];
    if worst > NULL_TOL * scale {
        return Err(Error::Defective {
            condition: scale / svd.singular_values[idx[0]].max(f64::MIN_POSITIVE),
        });
    }
    Ok(idx[..mult]
        .iter()
        .map(|&i| v_t.row(i).transpose().map(|z| z.conj()))
        .collect())
}

/// Unit norm, first significant entry positive.
fn normalize_real(mut v: DVector<f64>) -> DVector<f64> {
    v /= v.norm();
    let big = v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * big) {
        if *first < 0.0 {
            v = -v;
        }
    }
    v.map(|x| if x.abs() < PRUNE_TOL { 0.0 } else { x })
}

/// Reduced row echelon form of the span, so repeated eigenvalues get a
/// basis that does not depend on SVD internals.
fn canonical_span(vectors: Vec<DVector<f64>>) -> Vec<DVector<f64>> {
    let m = vectors.len();
    let n = vectors[0].len();
    let mut rows = DMatrix::from_fn(m, n, |i, j| vectors[i][j]);
    let mut r = 0;
    for col in 0..n {
        if r == m {
            break;
        }
        let (piv, val) = (r..m)
            .map(|i| (i, rows[(i, col)].abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if val < 1e-8 {
            continue;
        }
        rows.swap_rows(r, piv);
        let p = rows[(r, col)];
        for j in 0..n {
            rows[(r, j)] /= p;
        }
        for i in 0..m {
            if i != r {
                let f = rows[(i, col)];
                if f != 0.0 {
                    for j in 0..n {
                        rows[(i, j)] -= f * rows[(r, j)];
                    }
                }
            }
        }
        r += 1;
    }
    (0..m)
        .map(|i| normalize_real(rows.row(i).transpose()))
        .collect()
}

/// `||w|| = sqrt(2)`, first significant entry real and positive; returns the
/// real and imaginary parts.
fn normalize_complex(w: DVector<Complex<f64>>) -> (DVector<f64>, DVector<f64>) {
    let mut w = w.unscale(w.norm()).scale(std::f64::consts::SQRT_2);
    let big = w.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if let Some(first) = w.iter().find(|z| z.norm() > 1e-8 * big) {
        let phase = first.conj() / first.norm();
        w = w.map(|z| z * phase);
    }
    let clean = |x: f64| if x.abs() < PRUNE_TOL { 0.0 } else { x };
    (w.map(|z| clean(z.re)), w.map(|z| clean(z.im)))
}

/// Eigen-decomposition of the linear part into centre and stable parts,
/// with a computed, normalized basis.
pub fn eigen_split(lin: &LinearPart, zero_tol: f64) -> Result<SpectralSplit> {
    let j = &lin.matrix;
    let n = lin.dim();
    let scale = tol_scale(j);
    let values = eigen::eigenvalues(j)?;
    let clusters = cluster(&values, scale, zero_tol)?;

    let mut columns: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut centre_entries: Vec<(f64, f64, usize)> = Vec::new();
    let mut stable_entries: Vec<(f64, f64, usize)> = Vec::new();
    for cl in &clusters {
        let re_block = if cl.kind == SubspaceKind::Centre {
            0.0
        } else {
            cl.re
        };
        let entries = match cl.kind {
            SubspaceKind::Centre => &mut centre_entries,
            SubspaceKind::Stable => &mut stable_entries,
        };
        if cl.im == 0.0 {
            let shifted = j - DMatrix::identity(n, n) * cl.re;
            let vs = real_null_space(&shifted, cl.mult, scale)?;
            let vs = if cl.mult == 1 {
                vec![normalize_real(vs.into_iter().next().unwrap())]
            } else {
                canonical_span(vs)
            };
            for v in vs {
                columns.push(v);
                entries.push((re_block, 0.0, 1));
                eigenvalues.push(Eigenvalue {
                    re: cl.re,
                    im: 0.0,
                    kind: cl.kind,
                });
            }
        } else {
            let lambda = Complex::new(cl.re, cl.im);
            let shifted = DMatrix::from_fn(n, n, |r, c| {
                let d = if r == c {
                    lambda
                } else {
                    Complex::new(0.0, 0.0)
                };
                Complex::new(j[(r, c)], 0.0) - d
            });
            for w in complex_null_space(&shifted, cl.mult, scale)? {
                let (p, q) = normalize_complex(w);
                columns.push(p);
                columns.push(q);
                entries.push((re_block, cl.im, 2));
                eigenvalues.push(Eigenvalue {
                    re: cl.re,
                    im: cl.im,
                    kind: cl.kind,
                });
                eigenvalues.push(Eigenvalue {
                    re: cl.re,
                    im: -cl.im,
                    kind: cl.kind,
                });
            }
        }
    }
    if columns.len() != n {
        return Err(Error::Defective {
            condition: f64::INFINITY,
        });
    }
    let basis = DMatrix::from_columns(&columns);
    let condition = condition_number(&basis);
    if condition > DEFECT_CONDITION {
        return Err(Error::Defective { condition });
    }
    let basis_inv = basis
        .clone()
        .try_inverse()
        .ok_or(Error::Defective { condition })?;

    let split = SpectralSplit {
        centre_dim: centre_entries.iter().map(|e| e.2).sum(),
        stable_dim: stable_entries.iter().map(|e| e.2).sum(),
        eigenvalues,
        basis,
        basis_inv,
        centre_block: realified_block(&centre_entries),
        stable_block: realified_block(&stable_entries),
        zero_tol,
        basis_override: false,
    };
    let err = split.block_error(j);
    if err > BLOCK_TOL * scale {
        return Err(Error::InconsistentSplit { size: err });
    }
    Ok(split)
}

/// Diagonal entries for real eigenvalues and `[[a, b], [-b, a]]` for each
/// complex pair `a +- ib`.
fn realified_block(entries: &[(f64, f64, usize)]) -> DMatrix<f64> {
    let size = entries.iter().map(|e| e.2).sum();
    let mut m = DMatrix::zeros(size, size);
    let mut k = 0;
    for &(re, im, width) in entries {
        if width == 1 {
            m[(k, k)] = re;
        } else {
            m[(k, k)] = re;
            m[(k + 1, k + 1)] = re;
            m[(k, k + 1)] = im;
            m[(k + 1, k)] = -im;
        }
        k += width;
    }
    m
}

/// Splits using a caller-supplied basis, taken verbatim. Its first columns
/// must span the centre subspace and the rest the stable subspace.
pub fn split_with_basis(
    lin: &LinearPart,
    basis: &DMatrix<f64>,
    zero_tol: f64,
) -> Result<SpectralSplit> {
    let j = &lin.matrix;
    let n = lin.dim();
    if basis.nrows() != n || basis.ncols() != n {
        return Err(Error::InvalidBasis(format!(
            "expected a {n}x{n} matrix, got {}x{}",
            basis.nrows(),
            basis.ncols()
        )));
    }
    let scale = tol_scale(j);
    let values = eigen::eigenvalues(j)?;
    let clusters = cluster(&values, scale, zero_tol)?;
    let mut eigenvalues = Vec::with_capacity(n);
    for cl in &clusters {
        for _ in 0..cl.mult {
            eigenvalues.push(Eigenvalue {
                re: cl.re,
                im: cl.im,
                kind: cl.kind,
            });
            if cl.im != 0.0 {
                eigenvalues.push(Eigenvalue {
                    re: cl.re,
                    im: -cl.im,
                    kind: cl.kind,
                });
            }
        }
    }
    let c = eigenvalues
        .iter()
        .filter(|e| e.kind == SubspaceKind::Centre)
        .count();
    let s = n - c;

    let condition = condition_number(basis);
    let basis_inv = match basis.clone().try_inverse() {
        Some(inv) if condition <= DEFECT_CONDITION => inv,
        _ => {
            return Err(Error::InvalidBasis(format!(
                "matrix is singular or ill-conditioned (condition number {condition:e})"
            )))
        }
    };
    let m = &basis_inv * j * basis;
    let off = max_abs(&m.view((0, c), (c, s)).into_owned())
        .max(max_abs(&m.view((c, 0), (s, c)).into_owned()));
    if off > BLOCK_TOL * scale {
        return Err(Error::InvalidBasis(format!(
            "P^-1 J P is not block diagonal with a {c}x{c} centre block (off-block entry {off:e})"
        )));
    }
    let clean = |x: f64| if x.abs() < PRUNE_TOL * scale { 0.0 } else { x };
    let centre_block = m.view((0, 0), (c, c)).map(clean);
    let stable_block = m.view((c, c), (s, s)).map(clean);
    for (block, want) in [
        (&centre_block, SubspaceKind::Centre),
        (&stable_block, SubspaceKind::Stable),
    ] {
        for z in eigen::eigenvalues(block)? {
            if classify(z.re, z.im, zero_tol)? != want {
                return Err(Error::InvalidBasis(
                    "columns must list centre directions first, then stable ones".into(),
                ));
            }
        }
    }
    Ok(SpectralSplit {
        centre_dim: c,
        stable_dim: s,
        eigenvalues,
        basis: basis.clone(),
        basis_inv,
        centre_block,
        stable_block,
        zero_tol,
        basis_override: true,
    })
}

/// The system in eigen-coordinates `u`: `u' = diag(A, B) u + nonlinear(u)`.
#[derive(Clone, Debug)]
pub struct TransformedSystem {
    pub split: SpectralSplit,
    pub nonlinear: PolyMap,
}

impl TransformedSystem {
    /// Nonlinear part of the centre equations.
    pub fn centre_nonlinear(&self) -> PolyMap {
        let c = self.split.centre_dim;
        PolyMap::new(
            self.nonlinear.nvars(),
            self.nonlinear.components()[..c].to_vec(),
        )
        .expect("same variable space")
    }

    /// Nonlinear part of the stable equations.
    pub fn stable_nonlinear(&self) -> PolyMap {
        let c = self.split.centre_dim;
        PolyMap::new(
            self.nonlinear.nvars(),
            self.nonlinear.components()[c..].to_vec(),
        )
        .expect("same variable space")
    }

    /// Full vector field in eigen-coordinates.
    pub fn field(&self) -> PolyMap {
        PolyMap::linear(&self.split.block_diagonal())
            .checked_add(&self.nonlinear)
            .expect("same shape")
    }

    /// The field mapped back to the original coordinates.
    pub fn to_original(&self) -> Result<PolyMap> {
        self.field()
            .compose_linear(&self.split.basis_inv)?
            .left_mul(&self.split.basis)
    }
}

/// Conventional coordinate names: `u1..uc` for centre, `v1..vs` for stable.
pub fn coordinate_names(split: &SpectralSplit) -> Vec<String> {
    (1..=split.centre_dim)
        .map(|i| format!("u{i}"))
        .chain((1..=split.stable_dim).map(|i| format!("v{i}")))
        .collect()
}

/// Rewrites the field as `P^-1 f(P u)` and keeps its degree >= 2 part.
pub fn to_eigenbasis(spec: &SystemSpec, split: &SpectralSplit) -> Result<TransformedSystem> {
    check_constants(&spec.field)?;
    let n = spec.dim();
    if split.dim() != n {
        return Err(Error::DimensionMismatch {
            left: n,
            right: split.dim(),
        });
    }
    let composed = spec
        .field
        .compose_linear(&split.basis)?
        .left_mul(&split.basis_inv)?;
    let scale = tol_scale(&spec.field.linear_matrix());
    let lin_err = max_abs(&(composed.linear_matrix() - split.block_diagonal()));
    let const_err = composed
        .constants()
        .iter()
        .fold(0.0f64, |m, c| m.max(c.abs()));
    let size = lin_err.max(const_err);
    if lin_err > BLOCK_TOL * scale || const_err > EQUILIBRIUM_TOL {
        return Err(Error::InconsistentSplit { size });
    }
    let nonlinear = composed.map(|p: &Polynomial| p.filter_degree(|d| d >= 2));
    Ok(TransformedSystem {
        split: split.clone(),
        nonlinear,
    })
}
