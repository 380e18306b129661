//! Dense complex matrices, row-major, with the handful of decompositions the
//! rest of the crate needs (hermitian eigen, SVD, pseudoinverse, operator
//! norm).
//!
//! Matrices are plain `Vec<Complex64>` buffers; decompositions convert to
//! nalgebra, which does the actual factoring, and convert back. Zero-sized
//! matrices (0 rows or 0 cols) are legal everywhere: they show up as targets
//! of zero maps and as empty half of a Jordan representation.

use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatrixJson", try_from = "MatrixJson")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// JSON shape: `{"rows": r, "cols": c, "data": [[[re, im], ...], ...]}`.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: Vec<Vec<(f64, f64)>>,
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        let data = (0..m.rows)
            .map(|i| (0..m.cols).map(|j| (m[(i, j)].re, m[(i, j)].im)).collect())
            .collect();
        MatrixJson { rows: m.rows, cols: m.cols, data }
    }
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.data.len() != j.rows {
            return Err(Error::InvalidMatrix(format!(
                "declared {} rows, data has {}",
                j.rows,
                j.data.len()
            )));
        }
        let mut m = ComplexMatrix::zeros(j.rows, j.cols);
        for (i, row) in j.data.iter().enumerate() {
            if row.len() != j.cols {
                return Err(Error::InvalidMatrix(format!(
                    "row {} has {} entries, expected {}",
                    i,
                    row.len(),
                    j.cols
                )));
            }
            for (k, &(re, im)) in row.iter().enumerate() {
                if !re.is_finite() || !im.is_finite() {
                    return Err(Error::InvalidMatrix(format!(
                        "non-finite entry at ({i}, {k})"
                    )));
                }
                m[(i, k)] = c(re, im);
            }
        }
        Ok(m)
    }
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Column vector from a slice.
    pub fn column(v: &[Complex64]) -> Self {
        ComplexMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    /// Row vector from a slice.
    pub fn row(v: &[Complex64]) -> Self {
        ComplexMatrix { rows: 1, cols: v.len(), data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn mul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols, other.rows,
            "matrix product shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        let data = self.data.iter().map(|a| a * s).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> ComplexMatrix {
        let data = self.data.iter().map(|a| a.conj()).collect();
        ComplexMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn trace(&self) -> Complex64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Hermitian deviation `max |A - A*|`, 0 for non-square.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return 0.0;
        }
        self.sub(&self.adjoint()).max_abs()
    }

    pub fn hcat(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.rows, other.rows);
        ComplexMatrix::from_fn(self.rows, self.cols + other.cols, |i, j| {
            if j < self.cols {
                self[(i, j)]
            } else {
                other[(i, j - self.cols)]
            }
        })
    }

    pub fn vcat(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.cols);
        ComplexMatrix::from_fn(self.rows + other.rows, self.cols, |i, j| {
            if i < self.rows {
                self[(i, j)]
            } else {
                other[(i - self.rows, j)]
            }
        })
    }

    pub fn block_diag(&self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows + other.rows, self.cols + other.cols, |i, j| {
            if i < self.rows && j < self.cols {
                self[(i, j)]
            } else if i >= self.rows && j >= self.cols {
                other[(i - self.rows, j - self.cols)]
            } else {
                ZERO
            }
        })
    }

    /// Copy `block` into `self` with its top-left corner at `(i0, j0)`.
    pub fn set_block(&mut self, i0: usize, j0: usize, block: &ComplexMatrix) {
        assert!(i0 + block.rows <= self.rows && j0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(i0 + i, j0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn block(&self, i0: usize, j0: usize, rows: usize, cols: usize) -> ComplexMatrix {
        assert!(i0 + rows <= self.rows && j0 + cols <= self.cols);
        ComplexMatrix::from_fn(rows, cols, |i, j| self[(i0 + i, j0 + j)])
    }

    pub fn col_slice(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// `A v` for a plain vector.
    pub fn mat_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `A* v` without forming the adjoint.
    pub fn adjoint_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.rows, v.len());
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].conj() * v[i]).sum())
            .collect()
    }

    /// `A^T v` without forming the transpose.
    pub fn transpose_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.rows, v.len());
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)] * v[i]).sum())
            .collect()
    }

    fn to_na(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    /// Eigendecomposition of a hermitian matrix: eigenvalues descending, with
    /// the matching unitary of column eigenvectors, so
    /// `A = Q diag(vals) Q*`. The input is symmetrized first, so tiny
    /// hermitian drift does not change the answer.
    pub fn herm_eigen(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        assert!(self.is_square());
        let n = self.rows;
        if n == 0 {
            return Ok((Vec::new(), ComplexMatrix::zeros(0, 0)));
        }
        let sym = self.add(&self.adjoint()).scale(cr(0.5));
        let eig = nalgebra::SymmetricEigen::try_new(sym.to_na(), f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Numerical("hermitian eigensolve did not converge".into()))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let q = ComplexMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok((vals, q))
    }

    /// Thin SVD `A = U diag(s) V*`; singular values descending.
    /// `u` is rows x k, `vt` is k x cols with k = min(rows, cols).
    pub fn svd(&self) -> Result<SvdFactors> {
        if self.is_empty() {
            let k = self.rows.min(self.cols);
            return Ok(SvdFactors {
                u: ComplexMatrix::zeros(self.rows, k),
                singular_values: vec![0.0; k],
                vt: ComplexMatrix::zeros(k, self.cols),
            });
        }
        let svd = self
            .to_na()
            .try_svd(true, true, 1e-14, 20_000)
            .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
        let u = svd.u.as_ref().expect("u requested");
        let vt = svd.v_t.as_ref().expect("v_t requested");
        let k = svd.singular_values.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        Ok(SvdFactors {
            u: ComplexMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]),
            singular_values: order.iter().map(|&j| svd.singular_values[j]).collect(),
            vt: ComplexMatrix::from_fn(k, vt.ncols(), |i, j| vt[(order[i], j)]),
        })
    }

    pub fn singular_values(&self) -> Result<Vec<f64>> {
        Ok(self.svd()?.singular_values)
    }

    /// Operator norm (largest singular value).
    ///
    /// Small matrices go through the hermitian eigensolver on `A*A`; larger
    /// ones use power iteration on `A*A`, which is plenty for the sizes and
    /// spectra this crate produces (the large inputs are amplified partial
    /// isometries with spectrum {0, 1}).
    pub fn op_norm(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let big = self.rows.max(self.cols);
        if big <= 48 {
            let gram = self.adjoint().mul(self);
            let (vals, _) = gram.herm_eigen().expect("eigensolve of gram matrix");
            return vals.first().copied().unwrap_or(0.0).max(0.0).sqrt();
        }
        self.op_norm_power()
    }

    fn op_norm_power(&self) -> f64 {
        let n = self.cols;
        // Deterministic start with a mild ramp so no eigenvector is missed by
        // symmetry.
        let mut v: Vec<Complex64> = (0..n).map(|i| cr(1.0 + 0.01 * ((i % 7) as f64))).collect();
        let norm0 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in v.iter_mut() {
            *z /= norm0;
        }
        let mut lambda = 0.0f64;
        for _ in 0..10_000 {
            let w = self.adjoint_vec(&self.mat_vec(&v));
            let nw = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nw == 0.0 {
                return 0.0;
            }
            let prev = lambda;
            lambda = nw;
            v = w.into_iter().map(|z| z / nw).collect();
            if (lambda - prev).abs() <= 1e-14 * lambda.max(1.0) {
                break;
            }
        }
        lambda.sqrt()
    }

    /// Moore-Penrose pseudoinverse. Singular values below
    /// `rel_cutoff * s_max` are treated as zero.
    pub fn pinv(&self, rel_cutoff: f64) -> Result<ComplexMatrix> {
        if self.is_empty() {
            return Ok(ComplexMatrix::zeros(self.cols, self.rows));
        }
        let f = self.svd()?;
        let smax = f.singular_values.first().copied().unwrap_or(0.0);
        let cutoff = rel_cutoff * smax;
        // A+ = V diag(1/s) U*
        let k = f.singular_values.len();
        let mut inv = ComplexMatrix::zeros(self.cols, self.rows);
        let v = f.vt.adjoint();
        let ustar = f.u.adjoint();
        for t in 0..k {
            let s = f.singular_values[t];
            if s <= cutoff || s == 0.0 {
                continue;
            }
            let w = cr(1.0 / s);
            for i in 0..self.cols {
                let vi = v[(i, t)] * w;
                for j in 0..self.rows {
                    inv[(i, j)] += vi * ustar[(t, j)];
                }
            }
        }
        Ok(inv)
    }

    /// Unitary polar factor of a square matrix (`A = W P`, returns `W`), via
    /// SVD with unit singular values substituted.
    pub fn polar_unitary(&self) -> Result<ComplexMatrix> {
        let f = self.svd()?;
        Ok(f.u.mul(&f.vt))
    }

    /// PSD square root; eigenvalues below zero are clipped.
    pub fn herm_sqrt(&self) -> Result<ComplexMatrix> {
        let (vals, q) = self.herm_eigen()?;
        Ok(rebuild_hermitian(&q, &vals.iter().map(|&l| l.max(0.0).sqrt()).collect::<Vec<_>>()))
    }

    /// `exp(A)` for hermitian `A`.
    pub fn herm_exp(&self) -> Result<ComplexMatrix> {
        let (vals, q) = self.herm_eigen()?;
        Ok(rebuild_hermitian(&q, &vals.iter().map(|&l| l.exp()).collect::<Vec<_>>()))
    }

    /// `log(A)` for hermitian PSD `A`, flooring eigenvalues at `floor` first.
    pub fn herm_log_floored(&self, floor: f64) -> Result<ComplexMatrix> {
        assert!(floor > 0.0);
        let (vals, q) = self.herm_eigen()?;
        Ok(rebuild_hermitian(&q, &vals.iter().map(|&l| l.max(floor).ln()).collect::<Vec<_>>()))
    }
}

fn rebuild_hermitian(q: &ComplexMatrix, vals: &[f64]) -> ComplexMatrix {
    let n = q.rows();
    let mut scaled = q.clone();
    for j in 0..n {
        let w = cr(vals[j]);
        for i in 0..n {
            scaled[(i, j)] = scaled[(i, j)] * w;
        }
    }
    scaled.mul(&q.adjoint())
}

pub struct SvdFactors {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub vt: ComplexMatrix,
}

/// Random unitary: polar factor of a matrix with uniform entries. Good
/// enough spread for test conjugations; not calibrated to Haar measure.
pub fn random_unitary(d: usize, rng: &mut impl rand::Rng) -> Result<ComplexMatrix> {
    loop {
        let g = ComplexMatrix::from_fn(d, d, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        // a singular draw has measure zero but polar would be garbage
        if g.singular_values()?.last().copied().unwrap_or(0.0) > 1e-6 {
            return g.polar_unitary();
        }
    }
}

/// `<u, v> = sum_i u_i conj(v_i)` (linear in the first slot).
pub fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthonormal basis for the span of the given vectors (deterministic: SVD
/// left factor, rank cut at `rel_cutoff * s_max`). Vectors are columns.
pub fn orthonormal_span(vectors: &[Vec<Complex64>], dim: usize, rel_cutoff: f64) -> Result<ComplexMatrix> {
    if vectors.is_empty() {
        return Ok(ComplexMatrix::zeros(dim, 0));
    }
    let m = ComplexMatrix::from_fn(dim, vectors.len(), |i, j| vectors[j][i]);
    let f = m.svd()?;
    let smax = f.singular_values.first().copied().unwrap_or(0.0);
    let rank = f
        .singular_values
        .iter()
        .take_while(|&&s| s > rel_cutoff * smax && s > 0.0)
        .count();
    Ok(f.u.block(0, 0, dim, rank))
}
