//! Floating-point eigenvectors of a small real matrix.
//!
//! Nothing here needs to be accurate: the basis only has to be invertible,
//! and its inverse is enclosed rigorously elsewhere. The method is a
//! Householder reduction to Hessenberg form followed by Wilkinson-shifted QR
//! sweeps with deflation, giving a real Schur form `Z T Zᵀ`. Eigenvectors are
//! then read off `T` by back-substitution. When `T` keeps a 2×2 block with
//! complex eigenvalues, or the sweeps do not settle, the orthogonal Schur
//! basis `Z` is returned instead.

#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

type Mat = Vec<Vec<f64>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Eigenvectors,
    Schur,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealBasis {
    /// Basis vectors stored as the columns of this row-major matrix.
    pub matrix: Mat,
    /// Diagonal of the final quasi-triangular form.
    pub diagonal: Vec<f64>,
    pub kind: BasisKind,
}

const MAX_SWEEPS: usize = 200;

fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

fn hessenberg(h: &mut Mat, z: &mut Mat) {
    let n = h.len();
    for k in 0..n.saturating_sub(2) {
        let alpha: f64 = (k + 1..n).map(|i| h[i][k] * h[i][k]).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = (0..n).map(|i| if i > k { h[i][k] } else { 0.0 }).collect();
        v[k + 1] += alpha.copysign(h[k + 1][k]);
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        // H <- P H P, Z <- Z P with P = I - 2 v vᵀ / vᵀv
        for j in 0..n {
            let s = 2.0 * (k + 1..n).map(|i| v[i] * h[i][j]).sum::<f64>() / vv;
            for i in k + 1..n {
                h[i][j] -= s * v[i];
            }
        }
        for row in h.iter_mut().chain(z.iter_mut()) {
            let s = 2.0 * (k + 1..n).map(|i| row[i] * v[i]).sum::<f64>() / vv;
            for i in k + 1..n {
                row[i] -= s * v[i];
            }
        }
        for i in k + 2..n {
            h[i][k] = 0.0;
        }
    }
}

/// Apply the rotation `[c s; -s c]` to rows `p, p+1` of `h` (columns
/// `from..`) and its transpose to columns `p, p+1` of `h` (rows `..=to`) and `z`.
fn rotate(h: &mut Mat, z: &mut Mat, p: usize, c: f64, s: f64, from: usize, to: usize) {
    let n = h.len();
    for j in from..n {
        let (x, y) = (h[p][j], h[p + 1][j]);
        h[p][j] = c * x + s * y;
        h[p + 1][j] = -s * x + c * y;
    }
    for row in h.iter_mut().take(to + 1).chain(z.iter_mut()) {
        let (x, y) = (row[p], row[p + 1]);
        row[p] = c * x + s * y;
        row[p + 1] = -s * x + c * y;
    }
}

fn eig2(a: f64, b: f64, c: f64, d: f64) -> Option<(f64, f64)> {
    let m = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    (disc >= 0.0).then(|| (m + disc.sqrt(), m - disc.sqrt()))
}

fn shifted_sweep(h: &mut Mat, z: &mut Mat, lo: usize, hi: usize, mu: f64) {
    for k in lo..=hi {
        h[k][k] -= mu;
    }
    let mut rots = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let (x, y) = (h[k][k], h[k + 1][k]);
        let r = x.hypot(y);
        let (c, s) = if r == 0.0 { (1.0, 0.0) } else { (x / r, y / r) };
        let n = h.len();
        for j in k..n {
            let (p, q) = (h[k][j], h[k + 1][j]);
            h[k][j] = c * p + s * q;
            h[k + 1][j] = -s * p + c * q;
        }
        rots.push((k, c, s));
    }
    for (k, c, s) in rots {
        for row in h.iter_mut().take(hi + 1).chain(z.iter_mut()) {
            let (p, q) = (row[k], row[k + 1]);
            row[k] = c * p + s * q;
            row[k + 1] = -s * p + c * q;
        }
    }
    for k in lo..=hi {
        h[k][k] += mu;
    }
}

/// Real Schur form `(T, Z, converged, has_complex_block)`.
fn schur(a: &Mat) -> (Mat, Mat, bool, bool) {
    let n = a.len();
    let mut h = a.clone();
    let mut z = identity(n);
    hessenberg(&mut h, &mut z);
    let norm = h.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut complex = false;
    let mut hi = n as isize - 1;
    let mut sweeps = 0;
    while hi >= 0 {
        let top = hi as usize;
        let mut l = top;
        while l > 0 {
            let scale = (h[l][l].abs() + h[l - 1][l - 1].abs()).max(norm * f64::EPSILON);
            if h[l][l - 1].abs() <= f64::EPSILON * scale {
                h[l][l - 1] = 0.0;
                break;
            }
            l -= 1;
        }
        if l == top {
            hi -= 1;
            sweeps = 0;
            continue;
        }
        if l + 1 == top {
            let (a11, a12, a21, a22) = (h[l][l], h[l][top], h[top][l], h[top][top]);
            match eig2(a11, a12, a21, a22) {
                Some((lam, _)) => {
                    // rotate the block to upper-triangular form
                    let (vx, vy) = if (lam - a22).hypot(a21) > a12.hypot(lam - a11) {
                        (lam - a22, a21)
                    } else {
                        (a12, lam - a11)
                    };
                    let r = vx.hypot(vy);
                    if r > 0.0 {
                        rotate(&mut h, &mut z, l, vx / r, vy / r, l, top);
                    }
                    h[top][l] = 0.0;
                }
                None => complex = true,
            }
            hi -= 2;
            sweeps = 0;
            continue;
        }
        sweeps += 1;
        if sweeps > MAX_SWEEPS {
            return (h, z, false, complex);
        }
        let (a11, a12, a21, a22) = (h[top - 1][top - 1], h[top - 1][top], h[top][top - 1], h[top][top]);
        let mu = if sweeps % 11 == 0 {
            a22 + h[top][top - 1].abs()
        } else {
            match eig2(a11, a12, a21, a22) {
                Some((p, q)) => {
                    if (p - a22).abs() < (q - a22).abs() {
                        p
                    } else {
                        q
                    }
                }
                None => 0.5 * (a11 + a22),
            }
        };
        shifted_sweep(&mut h, &mut z, l, top, mu);
    }
    (h, z, true, complex)
}

/// Column normalisation applied to the basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ColumnNorm {
    /// Unit Euclidean length.
    #[default]
    Euclidean,
    /// Largest entry of magnitude one.
    Max,
}

fn normalise(m: &mut Mat, norm: ColumnNorm) {
    let n = m.len();
    for j in 0..n {
        let s = match norm {
            ColumnNorm::Euclidean => (0..n).map(|i| m[i][j] * m[i][j]).sum::<f64>().sqrt(),
            ColumnNorm::Max => (0..n).map(|i| m[i][j].abs()).fold(0.0, f64::max),
        };
        if s > 0.0 {
            for row in m.iter_mut() {
                row[j] /= s;
            }
        }
    }
}

/// Eigenvector basis of `a` (or its real Schur basis), with columns scaled
/// by `norm`.
pub fn real_basis(a: &[Vec<f64>], norm: ColumnNorm) -> RealBasis {
    let n = a.len();
    let (t, z, converged, complex) = schur(&a.to_vec());
    let diagonal: Vec<f64> = (0..n).map(|i| t[i][i]).collect();
    if !converged || complex {
        let mut matrix = z;
        normalise(&mut matrix, norm);
        return RealBasis {
            matrix,
            diagonal,
            kind: BasisKind::Schur,
        };
    }
    let scale = t.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tiny = scale * f64::EPSILON;
    let mut matrix = vec![vec![0.0; n]; n];
    for k in 0..n {
        let mut y = vec![0.0; n];
        y[k] = 1.0;
        for j in (0..k).rev() {
            let s: f64 = (j + 1..=k).map(|m| t[j][m] * y[m]).sum();
            let mut den = t[j][j] - t[k][k];
            if den.abs() < tiny {
                den = tiny;
            }
            y[j] = -s / den;
        }
        for i in 0..n {
            matrix[i][k] = (0..=k).map(|m| z[i][m] * y[m]).sum();
        }
    }
    normalise(&mut matrix, norm);
    RealBasis {
        matrix,
        diagonal,
        kind: BasisKind::Eigenvectors,
    }
}

/// The orthogonal Schur basis of `a`, with columns scaled by `norm`.
pub fn schur_vectors(a: &[Vec<f64>], norm: ColumnNorm) -> Mat {
    let (_, mut z, _, _) = schur(&a.to_vec());
    normalise(&mut z, norm);
    z
}
