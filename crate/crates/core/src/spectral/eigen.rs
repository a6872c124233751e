//! Eigenvalues of small dense real matrices.
//!
//! Up to 3x3 the characteristic polynomial is formed explicitly and its roots
//! are polished with Newton steps. Larger matrices go through a Hessenberg
//! reduction followed by Francis double-shift QR sweeps with deflation.

use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

const MAX_QR_ITERS: usize = 60;

pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    assert!(m.is_square(), "eigenvalues of a non-square matrix");
    if m.nrows() <= 3 {
        Ok(char_poly_eigenvalues(m))
    } else {
        qr_eigenvalues(m)
    }
}

/// Monic characteristic polynomial coefficients `[c_{n-1}, ..., c_0]` of
/// `lambda^n + c_{n-1} lambda^{n-1} + ... + c_0`, for `n <= 3`.
pub fn char_poly(m: &DMatrix<f64>) -> Vec<f64> {
    match m.nrows() {
        0 => vec![],
        1 => vec![-m[(0, 0)]],
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            vec![-tr, det]
        }
        3 => {
            let tr = m[(0, 0)] + m[(1, 1)] + m[(2, 2)];
            let minor = |i: usize, j: usize| m[(i, i)] * m[(j, j)] - m[(i, j)] * m[(j, i)];
            let m2 = minor(0, 1) + minor(0, 2) + minor(1, 2);
            let det = m[(0, 0)] * minor(1, 2)
                - m[(0, 1)] * (m[(1, 0)] * m[(2, 2)] - m[(1, 2)] * m[(2, 0)])
                + m[(0, 2)] * (m[(1, 0)] * m[(2, 1)] - m[(1, 1)] * m[(2, 0)]);
            vec![-tr, m2, -det]
        }
        n => panic!("explicit characteristic polynomial only for n <= 3, got {n}"),
    }
}

pub fn char_poly_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let c = char_poly(m);
    let mut roots = match c.len() {
        0 => vec![],
        1 => vec![Complex::new(-c[0], 0.0)],
        2 => quadratic_roots(c[0], c[1]),
        3 => cubic_roots(c[0], c[1], c[2]),
        _ => unreachable!(),
    };
    for r in roots.iter_mut() {
        *r = polish(&c, *r);
    }
    roots
}

/// Roots of `x^2 + b x + c`.
fn quadratic_roots(b: f64, c: f64) -> Vec<Complex<f64>> {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return vec![Complex::new(0.0, 0.0); 2];
        }
        vec![Complex::new(q, 0.0), Complex::new(c / q, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        vec![Complex::new(-0.5 * b, im), Complex::new(-0.5 * b, -im)]
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().fold(1.0, |acc, &k| acc * x + k)
}

/// Roots of `x^3 + a x^2 + b x + c`: one real root by safeguarded
/// bisection, then the deflated quadratic.
fn cubic_roots(a: f64, b: f64, c: f64) -> Vec<Complex<f64>> {
    let coeffs = [a, b, c];
    let bound = 1.0 + a.abs().max(b.abs()).max(c.abs());
    let (mut lo, mut hi) = (-bound, bound);
    let real = if c == 0.0 {
        0.0
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if horner(&coeffs, mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    // x^3 + a x^2 + b x + c = (x - r)(x^2 + p x + q)
    let p = a + real;
    let q = b + real * p;
    let mut out = vec![Complex::new(real, 0.0)];
    out.extend(quadratic_roots(p, q));
    out
}

fn eval_complex(c: &[f64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(1.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &k in c {
        dp = dp * z + p;
        p = p * z + k;
    }
    (p, dp)
}

fn polish(c: &[f64], mut z: Complex<f64>) -> Complex<f64> {
    let (mut best, _) = eval_complex(c, z);
    for _ in 0..8 {
        let (p, dp) = eval_complex(c, z);
        if dp.norm() == 0.0 || p.norm() == 0.0 {
            break;
        }
        let next = z - p / dp;
        let (pn, _) = eval_complex(c, next);
        if pn.norm() < best.norm() {
            best = pn;
            z = next;
        } else {
            break;
        }
    }
    if z.im.abs() < 1e-300 {
        z.im = 0.0;
    }
    z
}

/// Francis double-shift QR on the upper Hessenberg form.
pub fn qr_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(vec![]);
    }
    let mut a = m.clone().hessenberg().h();
    let eps = f64::EPSILON;
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }
    let mut out = vec![Complex::new(0.0, 0.0); n];
    let mut nn = n as isize - 1;
    let mut shift = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l > 0 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nu, nu)];
            if l == nu {
                out[nu] = Complex::new(x + shift, 0.0);
                nn -= 1;
            } else {
                let mut y = a[(nu - 1, nu - 1)];
                let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
                if l == nu - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let z = q.abs().sqrt();
                    x += shift;
                    if q >= 0.0 {
                        let z = p + z.copysign(p);
                        out[nu - 1] = Complex::new(x + z, 0.0);
                        out[nu] = out[nu - 1];
                        if z != 0.0 {
                            out[nu] = Complex::new(x - w / z, 0.0);
                        }
                    } else {
                        out[nu] = Complex::new(x + p, -z);
                        out[nu - 1] = Complex::new(x + p, z);
                    }
                    nn -= 2;
                } else {
                    if its == MAX_QR_ITERS {
                        return Err(Error::EigenConvergence);
                    }
                    if its == 10 || its == 20 || its == 40 {
                        // exceptional shift
                        shift += x;
                        for i in 0..=nu {
                            a[(i, i)] -= x;
                        }
                        let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    francis_step(&mut a, l, nu, x, y, w);
                }
            }
            if l as isize + 1 >= nn {
                break;
            }
        }
    }
    Ok(out)
}

fn francis_step(a: &mut DMatrix<f64>, l: usize, nn: usize, x: f64, y: f64, w: f64) {
    let eps = f64::EPSILON;
    let (mut p, mut q, mut r): (f64, f64, f64);
    let mut m = nn - 2;
    loop {
        let z = a[(m, m)];
        let rr = x - z;
        let s = y - z;
        p = (rr * s - w) / a[(m + 1, m)] + a[(m, m + 1)];
        q = a[(m + 1, m + 1)] - z - rr - s;
        r = a[(m + 2, m + 1)];
        let s = p.abs() + q.abs() + r.abs();
        p /= s;
        q /= s;
        r /= s;
        if m == l {
            break;
        }
        let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
        let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
        if u <= eps * v {
            break;
        }
        m -= 1;
    }
    for i in m..nn - 1 {
        a[(i + 2, i)] = 0.0;
        if i != m {
            a[(i + 2, i - 1)] = 0.0;
        }
    }
    let mut xs = 0.0;
    for k in m..nn {
        if k != m {
            p = a[(k, k - 1)];
            q = a[(k + 1, k - 1)];
            r = if k + 1 != nn { a[(k + 2, k - 1)] } else { 0.0 };
            xs = p.abs() + q.abs() + r.abs();
            if xs != 0.0 {
                p /= xs;
                q /= xs;
                r /= xs;
            }
        }
        let s = (p * p + q * q + r * r).sqrt().copysign(p);
        if s == 0.0 {
            continue;
        }
        if k == m {
            if l != m {
                a[(k, k - 1)] = -a[(k, k - 1)];
            }
        } else {
            a[(k, k - 1)] = -s * xs;
        }
        p += s;
        let hx = p / s;
        let hy = q / s;
        let hz = r / s;
        q /= p;
        r /= p;
        for j in k..=nn {
            let mut t = a[(k, j)] + q * a[(k + 1, j)];
            if k + 1 != nn {
                t += r * a[(k + 2, j)];
                a[(k + 2, j)] -= t * hz;
            }
            a[(k + 1, j)] -= t * hy;
            a[(k, j)] -= t * hx;
        }
        let mmin = nn.min(k + 3);
        for i in l..=mmin {
            let mut t = hx * a[(i, k)] + hy * a[(i, k + 1)];
            if k + 1 != nn {
                t += hz * a[(i, k + 2)];
                a[(i, k + 2)] -= t * r;
            }
            a[(i, k + 1)] -= t * q;
            a[(i, k)] -= t;
        }
    }
}

/// Sorts by real part, then imaginary part (both ascending).
pub fn sort_eigenvalues(v: &mut [Complex<f64>]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
