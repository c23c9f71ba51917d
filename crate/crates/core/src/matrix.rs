//! Dense linear algebra for the small (2x2 and 3x3) matrices that appear as
//! coefficient values, frames and second-moment matrices.
//!
//! Eigen-decomposition of symmetric matrices uses cyclic Jacobi rotations,
//! which converges unconditionally at these sizes and covers both dimensions
//! with one code path.

use crate::error::{Error, Result};

/// Maximum ambient dimension handled by the crate (n+1 <= 3).
pub const MAX_DIM: usize = 3;

/// A dense `n x n` matrix with `n <= 3`, stored in a fixed array.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmallMat {
    n: usize,
    a: [[f64; 3]; 3],
}

impl SmallMat {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_DIM);
        SmallMat { n, a: [[0.0; 3]; 3] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn diagonal(n: usize, d: &[f64]) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i][i] = d[i];
        }
        m
    }

    pub fn from_rows(n: usize, rows: &[&[f64]]) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i][j] = rows[i][j];
            }
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i][j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.a[i][j] = self.a[j][i];
            }
        }
        t
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut s = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                s.a[i][j] += other.a[i][j];
            }
        }
        s
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut s = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                s.a[i][j] -= other.a[i][j];
            }
        }
        s
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut s = *self;
        for i in 0..self.n {
            for j in 0..self.n {
                s.a[i][j] *= c;
            }
        }
        s
    }

    pub fn mat_mul(&self, other: &Self) -> Self {
        let mut p = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                let mut s = 0.0;
                for k in 0..self.n {
                    s += self.a[i][k] * other.a[k][j];
                }
                p.a[i][j] = s;
            }
        }
        p
    }

    #[inline]
    pub fn mul_vec(&self, v: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for i in 0..self.n {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.a[i][j] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// `<M v, v>` over the first `n` components.
    #[inline]
    pub fn quad_form(&self, v: &[f64; 3]) -> f64 {
        let mv = self.mul_vec(v);
        dot(&mv, v, self.n)
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.a[i][i]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                m = m.max(self.a[i][j].abs());
            }
        }
        m
    }

    /// Largest deviation from symmetry, `max |a_ij - a_ji|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut d = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                d = d.max((self.a[i][j] - self.a[j][i]).abs());
            }
        }
        d
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.sub(&Self::identity(self.n)).max_abs() <= tol
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    ///
    /// Returns eigenvalues in ascending order and the matrix whose columns
    /// are the corresponding orthonormal eigenvectors. The strictly lower
    /// part of the input is ignored (the matrix is assumed symmetric).
    pub fn jacobi_eigen(&self) -> ([f64; 3], SmallMat) {
        let n = self.n;
        let mut a = *self;
        // symmetrize to guard against last-bit asymmetry in callers
        for i in 0..n {
            for j in (i + 1)..n {
                let m = 0.5 * (a.a[i][j] + a.a[j][i]);
                a.a[i][j] = m;
                a.a[j][i] = m;
            }
        }
        let mut v = SmallMat::identity(n);
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for _sweep in 0..64 {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a.a[p][q].abs());
                }
            }
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    if a.a[p][q].abs() <= 1e-18 * scale {
                        continue;
                    }
                    let theta = (a.a[q][q] - a.a[p][p]) / (2.0 * a.a[p][q]);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // rotate rows/columns p and q
                    for k in 0..n {
                        let akp = a.a[k][p];
                        let akq = a.a[k][q];
                        a.a[k][p] = c * akp - s * akq;
                        a.a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a.a[p][k];
                        let aqk = a.a[q][k];
                        a.a[p][k] = c * apk - s * aqk;
                        a.a[q][k] = s * apk + c * aqk;
                    }
                    for k in 0..n {
                        let vkp = v.a[k][p];
                        let vkq = v.a[k][q];
                        v.a[k][p] = c * vkp - s * vkq;
                        v.a[k][q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut vals = [0.0; 3];
        for i in 0..n {
            vals[i] = a.a[i][i];
        }
        // sort ascending, permuting eigenvector columns alongside
        let mut order = [0usize, 1, 2];
        order[..n].sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
        let mut sv = [0.0; 3];
        let mut svec = SmallMat::zeros(n);
        for (dst, &src) in order[..n].iter().enumerate() {
            sv[dst] = vals[src];
            for k in 0..n {
                svec.a[k][dst] = v.a[k][src];
            }
        }
        (sv, svec)
    }

    /// Spectral (operator 2-) norm of a symmetric matrix.
    pub fn spectral_norm_sym(&self) -> f64 {
        let (vals, _) = self.jacobi_eigen();
        (0..self.n).map(|i| vals[i].abs()).fold(0.0, f64::max)
    }
}

/// Symmetric square root of an SPD matrix together with its inverse and
/// determinant: the triple `(M^{1/2}, M^{-1/2}, det M^{1/2})`.
#[derive(Clone, Copy, Debug)]
pub struct SqrtDecomposition {
    pub sqrt: SmallMat,
    pub inv_sqrt: SmallMat,
    pub det_sqrt: f64,
}

/// Symmetric square root via eigen-decomposition. Rejects inputs with an
/// eigenvalue `<= 0`.
pub fn sym_sqrt(m: &SmallMat) -> Result<SqrtDecomposition> {
    let n = m.dim();
    let (vals, vecs) = m.jacobi_eigen();
    for i in 0..n {
        if vals[i] <= 0.0 {
            return Err(Error::NotSpd(vals[i]));
        }
    }
    let mut sqrt = SmallMat::zeros(n);
    let mut inv = SmallMat::zeros(n);
    let mut det = 1.0;
    for i in 0..n {
        let s = vals[i].sqrt();
        det *= s;
        for r in 0..n {
            for c in 0..n {
                sqrt.a[r][c] += vecs.a[r][i] * s * vecs.a[c][i];
                inv.a[r][c] += vecs.a[r][i] * (1.0 / s) * vecs.a[c][i];
            }
        }
    }
    Ok(SqrtDecomposition {
        sqrt,
        inv_sqrt: inv,
        det_sqrt: det,
    })
}

#[inline]
pub fn dot(a: &[f64; 3], b: &[f64; 3], n: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..n {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn norm(a: &[f64; 3], n: usize) -> f64 {
    dot(a, a, n).sqrt()
}

#[inline]
pub fn sub(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn add(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn scale(a: &[f64; 3], c: f64) -> [f64; 3] {
    [c * a[0], c * a[1], c * a[2]]
}

/// Planar rotation by `angle` acting in the `(i, j)` coordinate plane.
pub fn plane_rotation(n: usize, i: usize, j: usize, angle: f64) -> SmallMat {
    let mut r = SmallMat::identity(n);
    let (s, c) = angle.sin_cos();
    r.set(i, i, c);
    r.set(j, j, c);
    r.set(i, j, -s);
    r.set(j, i, s);
    r
}
