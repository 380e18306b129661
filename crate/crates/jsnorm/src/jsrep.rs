//! Representation data for multilinear factorizations: star-homomorphism
//! tables, their Jordan combinations (homomorphism plus anti-homomorphism
//! summands), and the sandwich product
//!
//!   Phi(a_1, .., a_n) = T_0 sigma_1(a_1) T_1 .. sigma_n(a_n) T_n
//!
//! whose certified bound is the product of the operator norms of the T_j.
//!
//! Everything is stored as explicit image tables over the global unit basis,
//! so validity is a finite check: multiplicativity against the unit product
//! rule, star-compatibility, and unitality, each reported as a max-abs
//! residual.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgElement, FdAlgebra};
use crate::error::{Error, Result};
use crate::matrix::{cr, ComplexMatrix};

/// Residual threshold below which a rep table counts as valid.
pub const REP_TOL: f64 = 1e-8;

/// Image table of a linear map on the algebra that is either a unital
/// *-homomorphism (`anti = false`) or a unital *-anti-homomorphism
/// (`anti = true`): `images[p]` is the operator assigned to the `p`-th basis
/// unit.
#[derive(Clone, Debug, PartialEq)]
pub struct StarRepTable {
    pub algebra: FdAlgebra,
    pub space: usize,
    pub images: Vec<ComplexMatrix>,
    pub anti: bool,
}

impl StarRepTable {
    pub fn new(
        algebra: FdAlgebra,
        space: usize,
        images: Vec<ComplexMatrix>,
        anti: bool,
    ) -> Result<Self> {
        if images.len() != algebra.dim() {
            return Err(Error::InvalidRep(format!(
                "{} images for algebra dim {}",
                images.len(),
                algebra.dim()
            )));
        }
        if images.iter().any(|m| m.rows() != space || m.cols() != space) {
            return Err(Error::InvalidRep(format!("images must all be {space}x{space}")));
        }
        Ok(StarRepTable { algebra, space, images, anti })
    }

    /// The defining representation: each block acts on its own slice of
    /// C^(d_1 + .. + d_m).
    pub fn defining(algebra: &FdAlgebra) -> Self {
        let space: usize = algebra.block_dims().iter().sum();
        let mut images = Vec::with_capacity(algebra.dim());
        let mut off = 0;
        for &d in algebra.block_dims() {
            for i in 0..d {
                for j in 0..d {
                    let mut m = ComplexMatrix::zeros(space, space);
                    m[(off + i, off + j)] = crate::matrix::ONE;
                    images.push(m);
                }
            }
            off += d;
        }
        StarRepTable { algebra: algebra.clone(), space, images, anti: false }
    }

    /// Blockwise transpose of the defining representation; reverses products,
    /// so it is an anti-homomorphism.
    pub fn transpose(algebra: &FdAlgebra) -> Self {
        let mut t = Self::defining(algebra);
        for m in t.images.iter_mut() {
            *m = m.transpose();
        }
        t.anti = true;
        t
    }

    /// Conjugate every image by a unitary; preserves all the structure.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        if u.rows() != self.space || u.cols() != self.space {
            return Err(Error::ShapeMismatch("conjugating unitary has wrong size".into()));
        }
        let ustar = u.adjoint();
        let images = self.images.iter().map(|m| u.mul(m).mul(&ustar)).collect();
        Ok(StarRepTable { algebra: self.algebra.clone(), space: self.space, images, anti: self.anti })
    }

    /// sigma(a) by linearity over the unit basis.
    pub fn image(&self, a: &AlgElement) -> Result<ComplexMatrix> {
        if a.algebra != self.algebra {
            return Err(Error::AlgebraMismatch);
        }
        let mut out = ComplexMatrix::zeros(self.space, self.space);
        for (p, coeff) in a.vec().iter().enumerate() {
            if coeff.norm_sqr() == 0.0 {
                continue;
            }
            out = out.add(&self.images[p].scale(*coeff));
        }
        Ok(out)
    }

    /// Residuals of the defining laws, as max-abs deviations.
    pub fn validate(&self) -> RepValidation {
        let alg = &self.algebra;
        let dim = alg.dim();
        let mut multiplicative = 0.0f64;
        for p in 0..dim {
            for q in 0..dim {
                // for the anti case the product rule runs backwards
                let (lhs_p, lhs_q) = if self.anti { (q, p) } else { (p, q) };
                let got = self.images[p].mul(&self.images[q]);
                let (bp, i, j) = alg.unit_at(lhs_p);
                let (bq, k, l) = alg.unit_at(lhs_q);
                let want = if bp == bq && j == k {
                    self.images[alg.unit_index(bp, i, l)].clone()
                } else {
                    ComplexMatrix::zeros(self.space, self.space)
                };
                multiplicative = multiplicative.max(got.sub(&want).max_abs());
            }
        }
        let mut adjoint = 0.0f64;
        for p in 0..dim {
            let want = &self.images[alg.adjoint_index(p)];
            adjoint = adjoint.max(self.images[p].adjoint().sub(want).max_abs());
        }
        let mut unit = ComplexMatrix::zeros(self.space, self.space);
        for blk in 0..alg.num_blocks() {
            for i in 0..alg.block_dims()[blk] {
                unit = unit.add(&self.images[alg.unit_index(blk, i, i)]);
            }
        }
        let unital = unit.sub(&ComplexMatrix::identity(self.space)).max_abs();
        let positivity = self.positivity_spot_check();
        RepValidation::from_residuals(multiplicative, adjoint, unital, positivity)
    }

    /// Worst negative eigenvalue (sign-flipped) of sigma(a* a) over a few
    /// fixed pseudorandom elements; a coarse tripwire on top of the exact
    /// algebraic residuals.
    fn positivity_spot_check(&self) -> f64 {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xABCD);
        let mut worst = 0.0f64;
        for _ in 0..3 {
            let a = AlgElement::random(&self.algebra, &mut rng);
            let m = self.image(&a.gram()).expect("same algebra");
            if m.rows() == 0 {
                continue;
            }
            if let Ok((vals, _)) = m.herm_eigen() {
                let scale = vals.first().copied().unwrap_or(0.0).max(1.0);
                if let Some(&bottom) = vals.last() {
                    worst = worst.max((-bottom / scale).max(0.0));
                }
            }
        }
        worst
    }
}

/// Validation residuals for one rep table (or the merge over a Jordan pair).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RepValidation {
    pub multiplicative: f64,
    pub adjoint: f64,
    pub unital: f64,
    pub positivity: f64,
    pub pass: bool,
}

impl RepValidation {
    fn from_residuals(multiplicative: f64, adjoint: f64, unital: f64, positivity: f64) -> Self {
        let pass = multiplicative < REP_TOL
            && adjoint < REP_TOL
            && unital < REP_TOL
            && positivity < REP_TOL;
        RepValidation { multiplicative, adjoint, unital, positivity, pass }
    }

    fn trivial() -> Self {
        RepValidation::from_residuals(0.0, 0.0, 0.0, 0.0)
    }

    fn merge(self, other: RepValidation) -> RepValidation {
        RepValidation::from_residuals(
            self.multiplicative.max(other.multiplicative),
            self.adjoint.max(other.adjoint),
            self.unital.max(other.unital),
            self.positivity.max(other.positivity),
        )
    }
}

/// Jordan morphism sigma = rep (+) anti, acting block-diagonally on the sum
/// of the two spaces, in that fixed order. Either summand may be absent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "JordanJson", try_from = "JordanJson")]
pub struct JordanRep {
    pub algebra: FdAlgebra,
    pub rep: Option<StarRepTable>,
    pub anti: Option<StarRepTable>,
}

#[derive(Serialize, Deserialize)]
struct TableJson {
    space: usize,
    images: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct JordanJson {
    algebra: FdAlgebra,
    rep: Option<TableJson>,
    anti: Option<TableJson>,
}

impl From<JordanRep> for JordanJson {
    fn from(j: JordanRep) -> Self {
        let strip = |t: StarRepTable| TableJson { space: t.space, images: t.images };
        JordanJson { algebra: j.algebra, rep: j.rep.map(strip), anti: j.anti.map(strip) }
    }
}

impl TryFrom<JordanJson> for JordanRep {
    type Error = Error;
    fn try_from(j: JordanJson) -> Result<Self> {
        let build = |t: TableJson, anti: bool| {
            StarRepTable::new(j.algebra.clone(), t.space, t.images, anti)
        };
        let rep = j.rep.map(|t| build(t, false)).transpose()?;
        let anti = j.anti.map(|t| build(t, true)).transpose()?;
        JordanRep::new(j.algebra, rep, anti)
    }
}

impl JordanRep {
    pub fn new(
        algebra: FdAlgebra,
        rep: Option<StarRepTable>,
        anti: Option<StarRepTable>,
    ) -> Result<Self> {
        if rep.is_none() && anti.is_none() {
            return Err(Error::InvalidRep("need at least one summand".into()));
        }
        if let Some(t) = &rep {
            if t.anti || t.algebra != algebra {
                return Err(Error::InvalidRep("rep summand mismatched".into()));
            }
        }
        if let Some(t) = &anti {
            if !t.anti || t.algebra != algebra {
                return Err(Error::InvalidRep("anti summand mismatched".into()));
            }
        }
        Ok(JordanRep { algebra, rep, anti })
    }

    pub fn from_rep(t: StarRepTable) -> Self {
        JordanRep { algebra: t.algebra.clone(), rep: Some(t), anti: None }
    }

    pub fn from_anti(t: StarRepTable) -> Self {
        JordanRep { algebra: t.algebra.clone(), rep: None, anti: Some(t) }
    }

    pub fn defining(algebra: &FdAlgebra) -> Self {
        Self::from_rep(StarRepTable::defining(algebra))
    }

    pub fn transpose(algebra: &FdAlgebra) -> Self {
        Self::from_anti(StarRepTable::transpose(algebra))
    }

    pub fn rep_space(&self) -> usize {
        self.rep.as_ref().map_or(0, |t| t.space)
    }

    pub fn anti_space(&self) -> usize {
        self.anti.as_ref().map_or(0, |t| t.space)
    }

    pub fn space(&self) -> usize {
        self.rep_space() + self.anti_space()
    }

    pub fn image(&self, a: &AlgElement) -> Result<ComplexMatrix> {
        let blocks: Vec<ComplexMatrix> = [&self.rep, &self.anti]
            .into_iter()
            .flatten()
            .map(|t| t.image(a))
            .collect::<Result<_>>()?;
        Ok(blocks.iter().fold(ComplexMatrix::zeros(0, 0), |acc, b| acc.block_diag(b)))
    }

    pub fn validate(&self) -> RepValidation {
        [&self.rep, &self.anti]
            .into_iter()
            .flatten()
            .map(|t| t.validate())
            .fold(RepValidation::trivial(), RepValidation::merge)
    }

    /// Direct sum in canonical order: the two rep summands merge and come
    /// first, the anti summands merge and come second. Returns the permutation
    /// Q with sigma_canonical = Q (sigma_self (+) sigma_other) Q^T, which
    /// callers must use to conjugate adjacent sandwich operators.
    pub fn direct_sum(&self, other: &JordanRep) -> Result<(JordanRep, ComplexMatrix)> {
        if self.algebra != other.algebra {
            return Err(Error::AlgebraMismatch);
        }
        let (r1, a1) = (self.rep_space(), self.anti_space());
        let (r2, a2) = (other.rep_space(), other.anti_space());
        let n = r1 + a1 + r2 + a2;
        // naive index -> canonical index
        let canon = |i: usize| -> usize {
            if i < r1 {
                i
            } else if i < r1 + a1 {
                r1 + r2 + (i - r1)
            } else if i < r1 + a1 + r2 {
                r1 + (i - r1 - a1)
            } else {
                r1 + r2 + a1 + (i - r1 - a1 - r2)
            }
        };
        let mut q = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            q[(canon(i), i)] = crate::matrix::ONE;
        }
        let rep = merge_tables(&self.algebra, &self.rep, &other.rep, false)?;
        let anti = merge_tables(&self.algebra, &self.anti, &other.anti, true)?;
        Ok((JordanRep::new(self.algebra.clone(), rep, anti)?, q))
    }
}

fn merge_tables(
    algebra: &FdAlgebra,
    a: &Option<StarRepTable>,
    b: &Option<StarRepTable>,
    anti: bool,
) -> Result<Option<StarRepTable>> {
    match (a, b) {
        (None, None) => Ok(None),
        _ => {
            let empty_images = || vec![ComplexMatrix::zeros(0, 0); algebra.dim()];
            let ia = a.as_ref().map_or_else(empty_images, |t| t.images.clone());
            let ib = b.as_ref().map_or_else(empty_images, |t| t.images.clone());
            let space = a.as_ref().map_or(0, |t| t.space) + b.as_ref().map_or(0, |t| t.space);
            let images = ia.iter().zip(&ib).map(|(x, y)| x.block_diag(y)).collect();
            Ok(Some(StarRepTable::new(algebra.clone(), space, images, anti)?))
        }
    }
}

/// The sandwich product: operators T_0..T_n around Jordan images of the n
/// arguments.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(into = "JsRepJson", try_from = "JsRepJson")]
pub struct JsRep {
    pub operators: Vec<ComplexMatrix>,
    pub reps: Vec<JordanRep>,
}

#[derive(Serialize, Deserialize)]
struct JsRepJson {
    operators: Vec<ComplexMatrix>,
    reps: Vec<JordanRep>,
}

impl From<JsRep> for JsRepJson {
    fn from(j: JsRep) -> Self {
        JsRepJson { operators: j.operators, reps: j.reps }
    }
}

impl TryFrom<JsRepJson> for JsRep {
    type Error = Error;
    fn try_from(j: JsRepJson) -> Result<Self> {
        JsRep::new(j.operators, j.reps)
    }
}

impl JsRep {
    pub fn new(operators: Vec<ComplexMatrix>, reps: Vec<JordanRep>) -> Result<Self> {
        let n = reps.len();
        if n == 0 {
            return Err(Error::InvalidRep("need at least one argument slot".into()));
        }
        if operators.len() != n + 1 {
            return Err(Error::InvalidRep(format!(
                "{} operators for {} slots (need one more operator than slots)",
                operators.len(),
                n
            )));
        }
        for j in 0..=n {
            if j < n && operators[j].cols() != reps[j].space() {
                return Err(Error::ShapeMismatch(format!(
                    "operator {j} has {} cols, rep {j} acts on dim {}",
                    operators[j].cols(),
                    reps[j].space()
                )));
            }
            if j > 0 && operators[j].rows() != reps[j - 1].space() {
                return Err(Error::ShapeMismatch(format!(
                    "operator {j} has {} rows, rep {} acts on dim {}",
                    operators[j].rows(),
                    j - 1,
                    reps[j - 1].space()
                )));
            }
        }
        Ok(JsRep { operators, reps })
    }

    pub fn arity(&self) -> usize {
        self.reps.len()
    }

    /// Output shape (rows of T_0, cols of T_n).
    pub fn output_shape(&self) -> (usize, usize) {
        (self.operators[0].rows(), self.operators[self.arity()].cols())
    }

    pub fn evaluate(&self, args: &[AlgElement]) -> Result<ComplexMatrix> {
        if args.len() != self.arity() {
            return Err(Error::ShapeMismatch(format!(
                "{} arguments for arity {}",
                args.len(),
                self.arity()
            )));
        }
        let mut acc = self.operators[0].clone();
        for (j, a) in args.iter().enumerate() {
            acc = acc.mul(&self.reps[j].image(a)?).mul(&self.operators[j + 1]);
        }
        Ok(acc)
    }

    pub fn evaluate_scalar(&self, args: &[AlgElement]) -> Result<Complex64> {
        let out = self.evaluate(args)?;
        if out.rows() != 1 || out.cols() != 1 {
            return Err(Error::ShapeMismatch(format!(
                "output is {}x{}, not scalar",
                out.rows(),
                out.cols()
            )));
        }
        Ok(out[(0, 0)])
    }

    /// Product of the operator norms. Dominates |evaluate| over products of
    /// unit balls, since Jordan images of norm-one elements are contractions.
    /// Not a matrix-level bound: anti summands (transposition) amplify.
    pub fn bound(&self) -> f64 {
        self.operators.iter().map(|t| t.op_norm()).product()
    }

    /// Rescale so middle operators have norm one and the two ends share the
    /// total as sqrt(bound) each. The represented map and the bound are
    /// unchanged.
    pub fn normalize(&self) -> Result<JsRep> {
        let norms: Vec<f64> = self.operators.iter().map(|t| t.op_norm()).collect();
        if norms.iter().any(|&s| s == 0.0) {
            return Err(Error::ZeroOperator);
        }
        let total: f64 = norms.iter().product();
        let n = self.arity();
        let operators: Vec<ComplexMatrix> = self
            .operators
            .iter()
            .enumerate()
            .map(|(j, t)| {
                let mut s = 1.0 / norms[j];
                if j == 0 || j == n {
                    s *= total.sqrt();
                }
                t.scale(cr(s))
            })
            .collect();
        JsRep::new(operators, self.reps.clone())
    }

    /// Direct sum of two sandwich products of the same arity over the same
    /// algebras: evaluates to the sum of the two maps, with each slot's
    /// Jordan summands re-sorted into canonical order and the adjacent
    /// operators conjugated by the sorting permutations.
    pub fn direct_sum(&self, other: &JsRep) -> Result<JsRep> {
        let n = self.arity();
        if other.arity() != n {
            return Err(Error::ShapeMismatch("direct sum needs equal arity".into()));
        }
        let mut reps = Vec::with_capacity(n);
        let mut perms = Vec::with_capacity(n);
        for j in 0..n {
            let (sum, q) = self.reps[j].direct_sum(&other.reps[j])?;
            reps.push(sum);
            perms.push(q);
        }
        let mut operators = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let naive = if j == 0 {
                self.operators[0].hcat(&other.operators[0])
            } else if j == n {
                self.operators[n].vcat(&other.operators[n])
            } else {
                self.operators[j].block_diag(&other.operators[j])
            };
            let mut t = naive;
            if j > 0 {
                t = perms[j - 1].mul(&t);
            }
            if j < n {
                t = t.mul(&perms[j].transpose());
            }
            operators.push(t);
        }
        JsRep::new(operators, reps)
    }

    /// Validate every slot's tables; `pass` is the conjunction.
    pub fn validate(&self) -> JsValidation {
        let slots: Vec<RepValidation> = self.reps.iter().map(|r| r.validate()).collect();
        let pass = slots.iter().all(|s| s.pass);
        JsValidation { slots, pass }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JsValidation {
    pub slots: Vec<RepValidation>,
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::random_unitary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alg() -> FdAlgebra {
        FdAlgebra::new(vec![2, 1]).unwrap()
    }

    #[test]
    fn defining_rep_is_exactly_valid() {
        let v = StarRepTable::defining(&alg()).validate();
        assert_eq!(v.multiplicative, 0.0);
        assert_eq!(v.adjoint, 0.0);
        assert_eq!(v.unital, 0.0);
        assert!(v.pass);
    }

    #[test]
    fn transpose_is_anti_but_not_a_rep() {
        let t = StarRepTable::transpose(&alg());
        assert!(t.validate().pass);
        // same table mislabeled as a homomorphism must fail loudly
        let lied = StarRepTable { anti: false, ..t };
        let v = lied.validate();
        assert!(!v.pass);
        assert!(v.multiplicative >= 1.0, "residual {}", v.multiplicative);
    }

    #[test]
    fn perturbed_table_is_rejected() {
        let mut t = StarRepTable::defining(&alg());
        t.images[0][(0, 0)] += cr(1e-3);
        assert!(!t.validate().pass);
        // and a perturbation below the threshold slips through
        let mut t = StarRepTable::defining(&alg());
        t.images[0][(0, 0)] += cr(1e-10);
        assert!(t.validate().pass);
    }

    #[test]
    fn conjugated_rep_stays_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let t = StarRepTable::defining(&alg());
        let u = random_unitary(t.space, &mut rng).unwrap();
        let v = t.conjugated(&u).unwrap().validate();
        assert!(v.pass, "{v:?}");
        let a = StarRepTable::transpose(&alg());
        let u = random_unitary(a.space, &mut rng).unwrap();
        assert!(a.conjugated(&u).unwrap().validate().pass);
    }

    #[test]
    fn image_is_multiplicative_on_random_elements() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = StarRepTable::defining(&alg());
        let a = AlgElement::random(&alg(), &mut rng);
        let b = AlgElement::random(&alg(), &mut rng);
        let lhs = t.image(&a.mul(&b).unwrap()).unwrap();
        let rhs = t.image(&a).unwrap().mul(&t.image(&b).unwrap());
        assert!(lhs.sub(&rhs).max_abs() < 1e-12);
        // transpose reverses
        let tr = StarRepTable::transpose(&alg());
        let lhs = tr.image(&a.mul(&b).unwrap()).unwrap();
        let rhs = tr.image(&b).unwrap().mul(&tr.image(&a).unwrap());
        assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }

    fn sandwich_on_m2() -> JsRep {
        // T_0 sigma(a) sigma(b) T_2 with defining reps of M_2 and unit vectors
        // at the ends picks out (a b)_00
        let alg = FdAlgebra::full(2);
        let rep = JordanRep::defining(&alg);
        let mut t0 = ComplexMatrix::zeros(1, 2);
        t0[(0, 0)] = crate::matrix::ONE;
        let t1 = ComplexMatrix::identity(2);
        let mut t2 = ComplexMatrix::zeros(2, 1);
        t2[(0, 0)] = crate::matrix::ONE;
        JsRep::new(vec![t0, t1, t2], vec![rep.clone(), rep]).unwrap()
    }

    #[test]
    fn evaluate_matches_product_entry() {
        let alg = FdAlgebra::full(2);
        let phi = sandwich_on_m2();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = AlgElement::random(&alg, &mut rng);
        let b = AlgElement::random(&alg, &mut rng);
        let got = phi.evaluate_scalar(&[a.clone(), b.clone()]).unwrap();
        let want = a.mul(&b).unwrap().blocks[0][(0, 0)];
        assert!((got - want).norm() < 1e-12);
        assert!((phi.bound() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_preserves_map_and_bound() {
        let alg = FdAlgebra::full(2);
        let mut phi = sandwich_on_m2();
        phi.operators[0] = phi.operators[0].scale(cr(3.0));
        phi.operators[1] = phi.operators[1].scale(cr(0.25));
        phi.operators[2] = phi.operators[2].scale(cr(8.0));
        let bound = phi.bound();
        let normal = phi.normalize().unwrap();
        assert!((normal.bound() - bound).abs() < 1e-9 * bound);
        let total = bound.sqrt();
        assert!((normal.operators[0].op_norm() - total).abs() < 1e-9);
        assert!((normal.operators[1].op_norm() - 1.0).abs() < 1e-9);
        assert!((normal.operators[2].op_norm() - total).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = AlgElement::random(&alg, &mut rng);
        let b = AlgElement::random(&alg, &mut rng);
        let x = phi.evaluate_scalar(&[a.clone(), b.clone()]).unwrap();
        let y = normal.evaluate_scalar(&[a, b]).unwrap();
        assert!((x - y).norm() < 1e-10 * x.norm().max(1.0));
    }

    #[test]
    fn normalize_rejects_zero_operator() {
        let mut phi = sandwich_on_m2();
        phi.operators[1] = ComplexMatrix::zeros(2, 2);
        assert!(matches!(phi.normalize(), Err(Error::ZeroOperator)));
    }

    #[test]
    fn direct_sum_adds_evaluations_and_sorts_summands() {
        let alg = FdAlgebra::full(2);
        // one plain-rep sandwich, one anti-rep sandwich; the sum must keep
        // rep summands ahead of anti summands in every slot
        let plain = sandwich_on_m2();
        let anti_rep = JordanRep::transpose(&alg);
        let mut t0 = ComplexMatrix::zeros(1, 2);
        t0[(0, 1)] = cr(0.5);
        let t1 = ComplexMatrix::identity(2);
        let mut t2 = ComplexMatrix::zeros(2, 1);
        t2[(1, 0)] = cr(2.0);
        let twisted = JsRep::new(vec![t0, t1, t2], vec![anti_rep.clone(), anti_rep]).unwrap();

        let sum = plain.direct_sum(&twisted).unwrap();
        assert!(sum.validate().pass);
        for slot in &sum.reps {
            assert_eq!(slot.rep_space(), 2);
            assert_eq!(slot.anti_space(), 2);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..5 {
            let a = AlgElement::random(&alg, &mut rng);
            let b = AlgElement::random(&alg, &mut rng);
            let args = [a, b];
            let want = plain.evaluate_scalar(&args).unwrap() + twisted.evaluate_scalar(&args).unwrap();
            let got = sum.evaluate_scalar(&args).unwrap();
            assert!((got - want).norm() < 1e-11, "{got} vs {want}");
        }
    }

    #[test]
    fn random_conjugated_sum_survives_validation_and_json() {
        let a = alg();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let rep = StarRepTable::defining(&a);
        let anti = StarRepTable::transpose(&a);
        let u1 = random_unitary(rep.space, &mut rng).unwrap();
        let u2 = random_unitary(anti.space, &mut rng).unwrap();
        let jr = JordanRep::new(
            a.clone(),
            Some(rep.conjugated(&u1).unwrap()),
            Some(anti.conjugated(&u2).unwrap()),
        )
        .unwrap();
        assert!(jr.validate().pass);
        let d = jr.space();
        let t0 = ComplexMatrix::from_fn(1, d, |_, j| cr((j + 1) as f64));
        let t1 = ComplexMatrix::identity(d);
        let t2 = ComplexMatrix::from_fn(d, 1, |i, _| cr(1.0 / (i + 1) as f64));
        let phi = JsRep::new(vec![t0, t1, t2], vec![jr.clone(), jr]).unwrap();
        let s = serde_json::to_string(&phi).unwrap();
        let back: JsRep = serde_json::from_str(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let x = AlgElement::random(&a, &mut rng);
        let y = AlgElement::random(&a, &mut rng);
        let args = [x, y];
        let v1 = phi.evaluate_scalar(&args).unwrap();
        let v2 = back.evaluate_scalar(&args).unwrap();
        assert_eq!(v1, v2);
    }

    #[test]
    fn shape_chain_is_enforced() {
        let alg = FdAlgebra::full(2);
        let rep = JordanRep::defining(&alg);
        // operator 0 has wrong column count
        let t0 = ComplexMatrix::zeros(1, 3);
        let t1 = ComplexMatrix::identity(2);
        let t2 = ComplexMatrix::zeros(2, 1);
        assert!(JsRep::new(vec![t0, t1, t2], vec![rep.clone(), rep.clone()]).is_err());
        // operator count off by one
        let t0 = ComplexMatrix::zeros(1, 2);
        let t2 = ComplexMatrix::zeros(2, 1);
        assert!(JsRep::new(vec![t0, t2], vec![rep.clone(), rep]).is_err());
    }
}
