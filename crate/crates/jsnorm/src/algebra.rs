//! Finite-dimensional C*-algebras as direct sums of full matrix blocks,
//! their elements, states, and linear functionals.
//!
//! The coordinate convention is fixed once and used everywhere: blocks in
//! declaration order, and inside a block the matrix units e_ij ordered
//! row-major (i outer, j inner). `AlgElement::vec` flattens an element in
//! exactly that order, so a block's row-major entry buffer IS its slice of
//! the coordinate vector. All coefficient matrices of forms, Gram matrices
//! and representation tables are indexed against this order; nothing else in
//! the crate gets to choose its own.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{c, cr, ComplexMatrix, ONE, ZERO};

/// Direct sum of full matrix algebras; `block_dims = [d1, ..., dm]` stands
/// for M_d1 + ... + M_dm.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(into = "AlgebraJson", try_from = "AlgebraJson")]
pub struct FdAlgebra {
    block_dims: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct AlgebraJson {
    blocks: Vec<usize>,
}

impl From<FdAlgebra> for AlgebraJson {
    fn from(a: FdAlgebra) -> Self {
        AlgebraJson { blocks: a.block_dims }
    }
}

impl TryFrom<AlgebraJson> for FdAlgebra {
    type Error = Error;
    fn try_from(j: AlgebraJson) -> Result<Self> {
        FdAlgebra::new(j.blocks)
    }
}

impl FdAlgebra {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidAlgebra("at least one block required".into()));
        }
        if block_dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidAlgebra("zero-dimensional block".into()));
        }
        Ok(FdAlgebra { block_dims })
    }

    /// Single full matrix block M_d.
    pub fn full(d: usize) -> Self {
        FdAlgebra::new(vec![d]).expect("d >= 1")
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn num_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// Linear dimension, sum of d_i^2.
    pub fn dim(&self) -> usize {
        self.block_dims.iter().map(|d| d * d).sum()
    }

    /// Offset of a block's coordinates in the global vectorization.
    pub fn block_offset(&self, blk: usize) -> usize {
        self.block_dims[..blk].iter().map(|d| d * d).sum()
    }

    /// Global index of the matrix unit e_ij in block `blk`.
    pub fn unit_index(&self, blk: usize, i: usize, j: usize) -> usize {
        let d = self.block_dims[blk];
        debug_assert!(i < d && j < d);
        self.block_offset(blk) + i * d + j
    }

    /// Inverse of `unit_index`.
    pub fn unit_at(&self, p: usize) -> (usize, usize, usize) {
        let mut rest = p;
        for (blk, &d) in self.block_dims.iter().enumerate() {
            if rest < d * d {
                return (blk, rest / d, rest % d);
            }
            rest -= d * d;
        }
        panic!("basis index {p} out of range for algebra of dim {}", self.dim());
    }

    /// Index of the adjoint of basis unit `p` (matrix units are closed under
    /// the adjoint: e_ij* = e_ji).
    pub fn adjoint_index(&self, p: usize) -> usize {
        let (blk, i, j) = self.unit_at(p);
        self.unit_index(blk, j, i)
    }
}

/// Element of an `FdAlgebra`: one square matrix per block.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(into = "ElementJson", try_from = "ElementJson")]
pub struct AlgElement {
    pub algebra: FdAlgebra,
    pub blocks: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct ElementJson {
    algebra: FdAlgebra,
    blocks: Vec<ComplexMatrix>,
}

impl From<AlgElement> for ElementJson {
    fn from(a: AlgElement) -> Self {
        ElementJson { algebra: a.algebra, blocks: a.blocks }
    }
}

impl TryFrom<ElementJson> for AlgElement {
    type Error = Error;
    fn try_from(j: ElementJson) -> Result<Self> {
        AlgElement::new(j.algebra, j.blocks)
    }
}

impl AlgElement {
    pub fn new(algebra: FdAlgebra, blocks: Vec<ComplexMatrix>) -> Result<Self> {
        if blocks.len() != algebra.num_blocks() {
            return Err(Error::ShapeMismatch(format!(
                "{} blocks supplied, algebra has {}",
                blocks.len(),
                algebra.num_blocks()
            )));
        }
        for (blk, (m, &d)) in blocks.iter().zip(algebra.block_dims()).enumerate() {
            if m.rows() != d || m.cols() != d {
                return Err(Error::ShapeMismatch(format!(
                    "block {blk} is {}x{}, algebra wants {d}x{d}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(AlgElement { algebra, blocks })
    }

    pub fn zero(algebra: &FdAlgebra) -> Self {
        let blocks = algebra.block_dims().iter().map(|&d| ComplexMatrix::zeros(d, d)).collect();
        AlgElement { algebra: algebra.clone(), blocks }
    }

    pub fn identity(algebra: &FdAlgebra) -> Self {
        let blocks = algebra.block_dims().iter().map(|&d| ComplexMatrix::identity(d)).collect();
        AlgElement { algebra: algebra.clone(), blocks }
    }

    /// The matrix unit e_ij of block `blk`.
    pub fn basis_element(algebra: &FdAlgebra, blk: usize, i: usize, j: usize) -> Self {
        let mut e = Self::zero(algebra);
        e.blocks[blk][(i, j)] = ONE;
        e
    }

    /// The `p`-th basis element in the global order.
    pub fn basis_at(algebra: &FdAlgebra, p: usize) -> Self {
        let (blk, i, j) = algebra.unit_at(p);
        Self::basis_element(algebra, blk, i, j)
    }

    /// Flatten into the global coordinate vector.
    pub fn vec(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.algebra.dim());
        for m in &self.blocks {
            out.extend_from_slice(m.entries());
        }
        out
    }

    /// Rebuild an element from its global coordinate vector.
    pub fn unvec(algebra: &FdAlgebra, v: &[Complex64]) -> Result<Self> {
        if v.len() != algebra.dim() {
            return Err(Error::ShapeMismatch(format!(
                "coordinate vector has length {}, algebra dim is {}",
                v.len(),
                algebra.dim()
            )));
        }
        let mut blocks = Vec::with_capacity(algebra.num_blocks());
        let mut off = 0;
        for &d in algebra.block_dims() {
            blocks.push(ComplexMatrix::from_fn(d, d, |i, j| v[off + i * d + j]));
            off += d * d;
        }
        Ok(AlgElement { algebra: algebra.clone(), blocks })
    }

    pub fn mul(&self, other: &AlgElement) -> Result<AlgElement> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch);
        }
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.mul(b)).collect();
        Ok(AlgElement { algebra: self.algebra.clone(), blocks })
    }

    pub fn adjoint(&self) -> AlgElement {
        let blocks = self.blocks.iter().map(|m| m.adjoint()).collect();
        AlgElement { algebra: self.algebra.clone(), blocks }
    }

    pub fn add(&self, other: &AlgElement) -> Result<AlgElement> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch);
        }
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.add(b)).collect();
        Ok(AlgElement { algebra: self.algebra.clone(), blocks })
    }

    pub fn sub(&self, other: &AlgElement) -> Result<AlgElement> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch);
        }
        let blocks = self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.sub(b)).collect();
        Ok(AlgElement { algebra: self.algebra.clone(), blocks })
    }

    pub fn scale(&self, s: Complex64) -> AlgElement {
        let blocks = self.blocks.iter().map(|m| m.scale(s)).collect();
        AlgElement { algebra: self.algebra.clone(), blocks }
    }

    /// C*-norm: max over blocks of the largest singular value.
    pub fn op_norm(&self) -> f64 {
        self.blocks.iter().map(|m| m.op_norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.blocks.iter().map(|m| m.frobenius_norm().powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.blocks.iter().map(|m| m.max_abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0.0
    }

    /// a* a, the canonical PSD element.
    pub fn gram(&self) -> AlgElement {
        self.adjoint().mul(self).expect("same algebra")
    }

    /// Random element with entries uniform in the unit square of C.
    pub fn random(algebra: &FdAlgebra, rng: &mut impl Rng) -> Self {
        let blocks = algebra
            .block_dims()
            .iter()
            .map(|&d| {
                ComplexMatrix::from_fn(d, d, |_, _| {
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                })
            })
            .collect();
        AlgElement { algebra: algebra.clone(), blocks }
    }

    /// Random element scaled to operator norm 1 (retries on the measure-zero
    /// zero draw).
    pub fn random_unit(algebra: &FdAlgebra, rng: &mut impl Rng) -> Self {
        loop {
            let a = Self::random(algebra, rng);
            let n = a.op_norm();
            if n > 1e-9 {
                return a.scale(cr(1.0 / n));
            }
        }
    }
}

/// State: positive functional of norm one, stored as one density matrix per
/// block; phi(a) = sum_i Tr(rho_i a_i).
///
/// Construction clips negative density eigenvalues (they must be above
/// -1e-9 relative to the largest eigenvalue to be accepted at all) and
/// renormalizes the total trace to exactly 1.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
#[serde(into = "StateJson", try_from = "StateJson")]
pub struct State {
    algebra: FdAlgebra,
    densities: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct StateJson {
    algebra: FdAlgebra,
    densities: Vec<ComplexMatrix>,
}

impl From<State> for StateJson {
    fn from(s: State) -> Self {
        StateJson { algebra: s.algebra, densities: s.densities }
    }
}

impl TryFrom<StateJson> for State {
    type Error = Error;
    fn try_from(j: StateJson) -> Result<Self> {
        State::new(j.algebra, j.densities)
    }
}

pub const STATE_PSD_TOL: f64 = 1e-9;
pub const STATE_TRACE_TOL: f64 = 1e-9;

impl State {
    pub fn new(algebra: FdAlgebra, densities: Vec<ComplexMatrix>) -> Result<Self> {
        if densities.len() != algebra.num_blocks() {
            return Err(Error::InvalidState(format!(
                "{} densities for {} blocks",
                densities.len(),
                algebra.num_blocks()
            )));
        }
        let mut clipped = Vec::with_capacity(densities.len());
        let mut total = 0.0;
        let scale: f64 = densities.iter().map(|m| m.max_abs()).fold(0.0, f64::max);
        for (blk, (m, &d)) in densities.iter().zip(algebra.block_dims()).enumerate() {
            if m.rows() != d || m.cols() != d {
                return Err(Error::InvalidState(format!(
                    "density {blk} is {}x{}, block is {d}x{d}",
                    m.rows(),
                    m.cols()
                )));
            }
            if m.hermitian_residual() > STATE_PSD_TOL * scale.max(1.0) {
                return Err(Error::InvalidState(format!(
                    "density {blk} not hermitian (residual {:.3e})",
                    m.hermitian_residual()
                )));
            }
            let (vals, q) = m.herm_eigen()?;
            let top = vals.first().copied().unwrap_or(0.0).max(0.0);
            if let Some(&bottom) = vals.last() {
                if bottom < -STATE_PSD_TOL * top.max(1e-300) && bottom < -STATE_PSD_TOL {
                    return Err(Error::InvalidState(format!(
                        "density {blk} has eigenvalue {bottom:.3e}"
                    )));
                }
            }
            let clipped_vals: Vec<f64> = vals.iter().map(|&l| l.max(0.0)).collect();
            total += clipped_vals.iter().sum::<f64>();
            clipped.push(rebuild_psd(&q, &clipped_vals));
        }
        if (total - 1.0).abs() > STATE_TRACE_TOL {
            return Err(Error::InvalidState(format!("total trace {total:.12} is not 1")));
        }
        let densities = clipped.into_iter().map(|m| m.scale(cr(1.0 / total))).collect();
        Ok(State { algebra, densities })
    }

    /// Vector state a -> <a xi, xi> for the `idx`-th standard basis vector of
    /// block `blk`.
    pub fn vector_state(algebra: &FdAlgebra, blk: usize, idx: usize) -> Self {
        let mut densities: Vec<ComplexMatrix> =
            algebra.block_dims().iter().map(|&d| ComplexMatrix::zeros(d, d)).collect();
        densities[blk][(idx, idx)] = ONE;
        State { algebra: algebra.clone(), densities }
    }

    /// Normalized trace spread over all blocks.
    pub fn maximally_mixed(algebra: &FdAlgebra) -> Self {
        let total: usize = algebra.block_dims().iter().sum();
        let densities = algebra
            .block_dims()
            .iter()
            .map(|&d| ComplexMatrix::identity(d).scale(cr(1.0 / total as f64)))
            .collect();
        State { algebra: algebra.clone(), densities }
    }

    /// Random full-rank-ish state: G G* per block with random positive block
    /// weights, normalized.
    pub fn random(algebra: &FdAlgebra, rng: &mut impl Rng) -> Self {
        loop {
            let mut densities: Vec<ComplexMatrix> = algebra
                .block_dims()
                .iter()
                .map(|&d| {
                    let g = ComplexMatrix::from_fn(d, d, |_, _| {
                        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    });
                    g.mul(&g.adjoint())
                })
                .collect();
            let total: f64 = densities.iter().map(|m| m.trace().re).sum();
            if total < 1e-12 {
                continue;
            }
            for m in densities.iter_mut() {
                *m = m.scale(cr(1.0 / total));
            }
            return State { algebra: algebra.clone(), densities };
        }
    }

    /// Build directly from already-valid density data without the clip pass.
    /// Used by internal iterations that construct exact densities.
    pub(crate) fn from_normalized(algebra: FdAlgebra, densities: Vec<ComplexMatrix>) -> Self {
        State { algebra, densities }
    }

    pub fn algebra(&self) -> &FdAlgebra {
        &self.algebra
    }

    pub fn densities(&self) -> &[ComplexMatrix] {
        &self.densities
    }

    /// phi(a).
    pub fn apply(&self, a: &AlgElement) -> Result<Complex64> {
        if a.algebra != self.algebra {
            return Err(Error::AlgebraMismatch);
        }
        let mut out = ZERO;
        for (rho, m) in self.densities.iter().zip(&a.blocks) {
            out += rho.mul(m).trace();
        }
        Ok(out)
    }

    /// phi(e_p) for the `p`-th basis unit: a single density entry.
    pub fn apply_basis(&self, p: usize) -> Complex64 {
        let (blk, i, j) = self.algebra.unit_at(p);
        // Tr(rho e_ij) = rho[j][i]
        self.densities[blk][(j, i)]
    }

    /// Convex combination `(1-t) self + t other`.
    pub fn mix(&self, other: &State, t: f64) -> State {
        assert_eq!(self.algebra, other.algebra);
        let densities = self
            .densities
            .iter()
            .zip(&other.densities)
            .map(|(a, b)| a.scale(cr(1.0 - t)).add(&b.scale(cr(t))))
            .collect();
        State { algebra: self.algebra.clone(), densities }
    }
}

fn rebuild_psd(q: &ComplexMatrix, vals: &[f64]) -> ComplexMatrix {
    let n = q.rows();
    let mut scaled = q.clone();
    for j in 0..n {
        for i in 0..n {
            scaled[(i, j)] = scaled[(i, j)] * cr(vals[j]);
        }
    }
    scaled.mul(&q.adjoint())
}

/// Linear functional f(y) = sum_i Tr(W_i y_i), given by its coefficient
/// matrices W_i per block.
#[derive(Clone, Debug)]
pub struct LinearFunctional {
    pub algebra: FdAlgebra,
    pub coeffs: Vec<ComplexMatrix>,
}

impl LinearFunctional {
    pub fn new(algebra: FdAlgebra, coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        for (blk, (m, &d)) in coeffs.iter().zip(algebra.block_dims()).enumerate() {
            if m.rows() != d || m.cols() != d {
                return Err(Error::ShapeMismatch(format!("coefficient block {blk} has wrong shape")));
            }
        }
        if coeffs.len() != algebra.num_blocks() {
            return Err(Error::ShapeMismatch("wrong number of coefficient blocks".into()));
        }
        Ok(LinearFunctional { algebra, coeffs })
    }

    /// Functional picking out the coordinate vector `w`: f(y) = sum_p w_p vec(y)_p.
    pub fn from_coordinates(algebra: &FdAlgebra, w: &[Complex64]) -> Result<Self> {
        if w.len() != algebra.dim() {
            return Err(Error::ShapeMismatch("coordinate count != algebra dim".into()));
        }
        // w_(i,j) multiplies y_ij, and Tr(W y) = sum_{j,i} W[j][i] y[i][j],
        // so W is the per-block transpose of the unflattened coordinates.
        let mut coeffs = Vec::new();
        let mut off = 0;
        for &d in algebra.block_dims() {
            coeffs.push(ComplexMatrix::from_fn(d, d, |j, i| w[off + i * d + j]));
            off += d * d;
        }
        Ok(LinearFunctional { algebra: algebra.clone(), coeffs })
    }

    /// The state as a functional: W_i = rho_i.
    pub fn from_state(s: &State) -> Self {
        LinearFunctional { algebra: s.algebra().clone(), coeffs: s.densities().to_vec() }
    }

    pub fn apply(&self, y: &AlgElement) -> Result<Complex64> {
        if y.algebra != self.algebra {
            return Err(Error::AlgebraMismatch);
        }
        let mut out = ZERO;
        for (w, m) in self.coeffs.iter().zip(&y.blocks) {
            out += w.mul(m).trace();
        }
        Ok(out)
    }

    /// Coordinate vector w with f(y) = sum_p w_p vec(y)_p.
    pub fn coordinates(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.algebra.dim());
        for (w, &d) in self.coeffs.iter().zip(self.algebra.block_dims()) {
            for i in 0..d {
                for j in 0..d {
                    out.push(w[(j, i)]);
                }
            }
        }
        out
    }

    /// Dual norm against the C*-norm (sum of block trace norms) together
    /// with a maximizer u: op_norm(u) = 1 and f(u) = norm whenever f != 0.
    ///
    /// Per block W = U S V*, the trace norm is sum(S) and u = V U* attains
    /// it with phase 0, so the blocks add up coherently.
    pub fn norm_and_maximizer(&self) -> Result<(f64, AlgElement)> {
        let mut total = 0.0;
        let mut blocks = Vec::with_capacity(self.coeffs.len());
        for w in &self.coeffs {
            if w.max_abs() == 0.0 {
                blocks.push(ComplexMatrix::zeros(w.rows(), w.cols()));
                continue;
            }
            let f = w.svd()?;
            total += f.singular_values.iter().sum::<f64>();
            blocks.push(f.vt.adjoint().mul(&f.u.adjoint()));
        }
        let u = AlgElement::new(self.algebra.clone(), blocks)?;
        Ok((total, u))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m23() -> FdAlgebra {
        FdAlgebra::new(vec![2, 3]).unwrap()
    }

    #[test]
    fn index_round_trip_over_all_basis_units() {
        let alg = m23();
        assert_eq!(alg.dim(), 13);
        for p in 0..alg.dim() {
            let (blk, i, j) = alg.unit_at(p);
            assert_eq!(alg.unit_index(blk, i, j), p);
        }
        // adjoint index is an involution matching e_ij* = e_ji
        for p in 0..alg.dim() {
            let q = alg.adjoint_index(p);
            assert_eq!(alg.adjoint_index(q), p);
            let e = AlgElement::basis_at(&alg, p);
            assert_eq!(e.adjoint(), AlgElement::basis_at(&alg, q));
        }
    }

    #[test]
    fn vec_unvec_round_trip() {
        let alg = m23();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = AlgElement::random(&alg, &mut rng);
        let v = a.vec();
        assert_eq!(v.len(), 13);
        let b = AlgElement::unvec(&alg, &v).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unit_products_follow_delta_rule() {
        // e_ij e_kl = delta_jk e_il within a block, zero across blocks
        let alg = m23();
        for p in 0..alg.dim() {
            for q in 0..alg.dim() {
                let (bp, i, j) = alg.unit_at(p);
                let (bq, k, l) = alg.unit_at(q);
                let prod = AlgElement::basis_at(&alg, p)
                    .mul(&AlgElement::basis_at(&alg, q))
                    .unwrap();
                let expected = if bp == bq && j == k {
                    AlgElement::basis_element(&alg, bp, i, l)
                } else {
                    AlgElement::zero(&alg)
                };
                assert_eq!(prod, expected, "p={p} q={q}");
            }
        }
    }

    #[test]
    fn op_norm_picks_largest_block() {
        let alg = m23();
        let mut a = AlgElement::zero(&alg);
        a.blocks[0][(0, 0)] = cr(0.5);
        a.blocks[1][(2, 1)] = cr(3.0);
        assert!((a.op_norm() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn state_applies_identity_to_one() {
        let alg = m23();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let s = State::random(&alg, &mut rng);
            let one = s.apply(&AlgElement::identity(&alg)).unwrap();
            assert!((one - ONE).norm() < 1e-12);
        }
    }

    #[test]
    fn vector_state_reads_matrix_entry() {
        let alg = FdAlgebra::full(3);
        let s = State::vector_state(&alg, 0, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = AlgElement::random(&alg, &mut rng);
        let got = s.apply(&a).unwrap();
        assert!((got - a.blocks[0][(0, 0)]).norm() < 1e-13);
    }

    #[test]
    fn apply_matches_entrywise_oracle() {
        let alg = m23();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = State::random(&alg, &mut rng);
        let a = AlgElement::random(&alg, &mut rng);
        // oracle: double loop over entries, phi(a) = sum Tr(rho a) blockwise
        let mut want = ZERO;
        for (rho, m) in s.densities().iter().zip(&a.blocks) {
            for i in 0..rho.rows() {
                for k in 0..rho.cols() {
                    want += rho[(i, k)] * m[(k, i)];
                }
            }
        }
        assert!((s.apply(&a).unwrap() - want).norm() < 1e-12);
        // apply_basis agrees with apply on every unit
        for p in 0..alg.dim() {
            let via_basis = s.apply_basis(p);
            let via_apply = s.apply(&AlgElement::basis_at(&alg, p)).unwrap();
            assert!((via_basis - via_apply).norm() < 1e-13);
        }
    }

    #[test]
    fn state_rejects_negative_density() {
        let alg = FdAlgebra::full(2);
        let mut bad = ComplexMatrix::zeros(2, 2);
        bad[(0, 0)] = cr(1.5);
        bad[(1, 1)] = cr(-0.5);
        assert!(matches!(
            State::new(alg, vec![bad]),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn state_clips_tiny_negative_tail() {
        let alg = FdAlgebra::full(2);
        let mut d = ComplexMatrix::zeros(2, 2);
        d[(0, 0)] = cr(1.0 + 1e-12);
        d[(1, 1)] = cr(-1e-12);
        let s = State::new(alg, vec![d]).unwrap();
        let (vals, _) = s.densities()[0].herm_eigen().unwrap();
        assert!(vals.iter().all(|&l| l >= 0.0));
        let tr: f64 = s.densities()[0].trace().re;
        assert!((tr - 1.0).abs() < 1e-14);
    }

    #[test]
    fn state_rejects_wrong_trace() {
        let alg = FdAlgebra::full(2);
        let d = ComplexMatrix::identity(2); // trace 2
        assert!(State::new(alg, vec![d]).is_err());
    }

    #[test]
    fn functional_norm_of_state_is_one() {
        // States have dual norm one; trace-norm computation must agree.
        let alg = m23();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let s = State::random(&alg, &mut rng);
            let f = LinearFunctional::from_state(&s);
            let (norm, u) = f.norm_and_maximizer().unwrap();
            assert!((norm - 1.0).abs() < 1e-9, "norm {norm}");
            assert!((u.op_norm() - 1.0).abs() < 1e-9);
            let attained = f.apply(&u).unwrap();
            assert!((attained.re - norm).abs() < 1e-9 && attained.im.abs() < 1e-9);
        }
    }

    #[test]
    fn functional_norm_rank_one_and_zero() {
        let alg = FdAlgebra::full(2);
        // f(y) = y11: W = e11, trace norm 1
        let mut w = ComplexMatrix::zeros(2, 2);
        w[(0, 0)] = ONE;
        let f = LinearFunctional::new(alg.clone(), vec![w]).unwrap();
        let (n, u) = f.norm_and_maximizer().unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        assert!((f.apply(&u).unwrap().re - 1.0).abs() < 1e-12);

        let z = LinearFunctional::new(alg.clone(), vec![ComplexMatrix::zeros(2, 2)]).unwrap();
        let (nz, _) = z.norm_and_maximizer().unwrap();
        assert_eq!(nz, 0.0);
    }

    #[test]
    fn functional_coordinates_round_trip() {
        let alg = m23();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let y = AlgElement::random(&alg, &mut rng);
        let w: Vec<Complex64> = (0..alg.dim())
            .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let f = LinearFunctional::from_coordinates(&alg, &w).unwrap();
        // f(y) = sum w_p vec(y)_p by construction
        let want: Complex64 = w.iter().zip(y.vec()).map(|(a, b)| a * b).sum();
        assert!((f.apply(&y).unwrap() - want).norm() < 1e-12);
        let back = f.coordinates();
        for (a, b) in w.iter().zip(&back) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn element_json_round_trip() {
        let alg = m23();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = AlgElement::random(&alg, &mut rng);
        let s = serde_json::to_string(&a).unwrap();
        let b: AlgElement = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
        // mismatched block shape is rejected
        let bad = r#"{"algebra":{"blocks":[2]},"blocks":[{"rows":3,"cols":3,"data":[[[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0]]]}]}"#;
        assert!(serde_json::from_str::<AlgElement>(bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        // C*-identity: ||a* a|| = ||a||^2.
        #[test]
        fn cstar_identity(seed in 0u64..1000) {
            let alg = m23();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = AlgElement::random(&alg, &mut rng);
            let lhs = a.gram().op_norm();
            let rhs = a.op_norm().powi(2);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(1.0));
        }

        // States are positive on PSD elements.
        #[test]
        fn states_positive_on_grams(seed in 0u64..1000) {
            let alg = m23();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = State::random(&alg, &mut rng);
            let a = AlgElement::random(&alg, &mut rng);
            let v = s.apply(&a.gram()).unwrap();
            prop_assert!(v.re >= -1e-10);
            prop_assert!(v.im.abs() <= 1e-10);
        }

        // Dual-norm maximizer certificate.
        #[test]
        fn functional_maximizer_attains(seed in 0u64..1000) {
            let alg = FdAlgebra::new(vec![2, 2]).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<Complex64> = (0..alg.dim())
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let f = LinearFunctional::from_coordinates(&alg, &w).unwrap();
            let (n, u) = f.norm_and_maximizer().unwrap();
            if n > 1e-9 {
                prop_assert!((u.op_norm() - 1.0).abs() <= 1e-9);
                prop_assert!((f.apply(&u).unwrap().norm() - n).abs() <= 1e-9 * n.max(1.0));
            }
        }
    }
}
