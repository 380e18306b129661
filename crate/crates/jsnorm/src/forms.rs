//! Bilinear forms on pairs of block algebras, Hilbert-space-valued maps, and
//! matrix amplification.
//!
//! A form is stored through its coefficient matrix against the global basis:
//! `coeffs[(p, q)] = B(e_p, e_q)`, so evaluation is the plain bilinear pairing
//! of coordinate vectors (no conjugation anywhere; sesquilinear objects are
//! built elsewhere by conjugating coordinates first).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgElement, FdAlgebra, LinearFunctional};
use crate::error::{Error, Result};
use crate::matrix::{cr, ComplexMatrix, ZERO};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "FormJson", try_from = "FormJson")]
pub struct BilinearForm {
    pub alg_a: FdAlgebra,
    pub alg_b: FdAlgebra,
    pub coeffs: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct FormJson {
    alg_a: FdAlgebra,
    alg_b: FdAlgebra,
    coeffs: ComplexMatrix,
}

impl From<BilinearForm> for FormJson {
    fn from(f: BilinearForm) -> Self {
        FormJson { alg_a: f.alg_a, alg_b: f.alg_b, coeffs: f.coeffs }
    }
}

impl TryFrom<FormJson> for BilinearForm {
    type Error = Error;
    fn try_from(j: FormJson) -> Result<Self> {
        BilinearForm::new(j.alg_a, j.alg_b, j.coeffs)
    }
}

impl BilinearForm {
    pub fn new(alg_a: FdAlgebra, alg_b: FdAlgebra, coeffs: ComplexMatrix) -> Result<Self> {
        if coeffs.rows() != alg_a.dim() || coeffs.cols() != alg_b.dim() {
            return Err(Error::ShapeMismatch(format!(
                "coefficient matrix is {}x{}, algebras have dims {} and {}",
                coeffs.rows(),
                coeffs.cols(),
                alg_a.dim(),
                alg_b.dim()
            )));
        }
        Ok(BilinearForm { alg_a, alg_b, coeffs })
    }

    pub fn zero(alg_a: FdAlgebra, alg_b: FdAlgebra) -> Self {
        let coeffs = ComplexMatrix::zeros(alg_a.dim(), alg_b.dim());
        BilinearForm { alg_a, alg_b, coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.max_abs() == 0.0
    }

    pub fn eval(&self, x: &AlgElement, y: &AlgElement) -> Result<Complex64> {
        if x.algebra != self.alg_a || y.algebra != self.alg_b {
            return Err(Error::AlgebraMismatch);
        }
        let t = self.coeffs.mat_vec(&y.vec());
        Ok(x.vec().iter().zip(&t).map(|(a, b)| a * b).sum())
    }

    /// Scale every coefficient.
    pub fn scale(&self, s: Complex64) -> BilinearForm {
        BilinearForm {
            alg_a: self.alg_a.clone(),
            alg_b: self.alg_b.clone(),
            coeffs: self.coeffs.scale(s),
        }
    }
}

/// Linear map F from an algebra into column vectors, F(a) = M vec(a).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "MapJson", try_from = "MapJson")]
pub struct HilbertMap {
    pub algebra: FdAlgebra,
    pub matrix: ComplexMatrix,
}

#[derive(Serialize, Deserialize)]
struct MapJson {
    algebra: FdAlgebra,
    matrix: ComplexMatrix,
}

impl From<HilbertMap> for MapJson {
    fn from(m: HilbertMap) -> Self {
        MapJson { algebra: m.algebra, matrix: m.matrix }
    }
}

impl TryFrom<MapJson> for HilbertMap {
    type Error = Error;
    fn try_from(j: MapJson) -> Result<Self> {
        HilbertMap::new(j.algebra, j.matrix)
    }
}

impl HilbertMap {
    pub fn new(algebra: FdAlgebra, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.cols() != algebra.dim() {
            return Err(Error::ShapeMismatch(format!(
                "map matrix has {} columns, algebra dim is {}",
                matrix.cols(),
                algebra.dim()
            )));
        }
        Ok(HilbertMap { algebra, matrix })
    }

    pub fn target_dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn apply(&self, a: &AlgElement) -> Result<Vec<Complex64>> {
        if a.algebra != self.algebra {
            return Err(Error::AlgebraMismatch);
        }
        Ok(self.matrix.mat_vec(&a.vec()))
    }
}

/// Result of a norm search. `value` is a certified lower bound attained by
/// the returned elements; `converged` reports whether the last sweep moved
/// less than the stopping tolerance (as opposed to hitting the sweep cap).
#[derive(Clone, Debug)]
pub struct NormEstimate {
    pub value: f64,
    pub maximizer_x: AlgElement,
    pub maximizer_y: Option<AlgElement>,
    pub converged: bool,
    pub restarts_used: usize,
}

const SWEEP_CAP: usize = 500;
const SWEEP_TOL: f64 = 1e-12;

/// Norm of a bilinear form over the product of operator-norm unit balls, by
/// alternating exact maximization: freezing one argument makes the form a
/// linear functional of the other, whose unit-ball maximum (the dual trace
/// norm) and maximizer are exact. Values are nondecreasing along a sweep, so
/// each restart terminates; restarts guard against starts stuck on a
/// lower critical value.
pub fn form_norm(form: &BilinearForm, seed: u64, restarts: usize) -> Result<NormEstimate> {
    if form.is_zero() {
        return Ok(NormEstimate {
            value: 0.0,
            maximizer_x: AlgElement::identity(&form.alg_a),
            maximizer_y: Some(AlgElement::identity(&form.alg_b)),
            converged: true,
            restarts_used: 0,
        });
    }
    let mut best: Option<NormEstimate> = None;
    let restarts = restarts.max(1);
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let mut x = AlgElement::random_unit(&form.alg_a, &mut rng);
        let mut y = AlgElement::identity(&form.alg_b);
        let mut value = 0.0;
        let mut converged = false;
        for _ in 0..SWEEP_CAP {
            // best y for this x
            let w = form.coeffs.transpose_vec(&x.vec());
            let fy = LinearFunctional::from_coordinates(&form.alg_b, &w)?;
            let (ny, ymax) = fy.norm_and_maximizer()?;
            if ny > 0.0 {
                y = ymax;
            }
            // best x for this y
            let w = form.coeffs.mat_vec(&y.vec());
            let fx = LinearFunctional::from_coordinates(&form.alg_a, &w)?;
            let (nx, xmax) = fx.norm_and_maximizer()?;
            if nx > 0.0 {
                x = xmax;
            }
            let new_value = nx.max(ny);
            if new_value - value <= SWEEP_TOL * value.max(1.0) {
                value = value.max(new_value);
                converged = true;
                break;
            }
            value = new_value;
        }
        let candidate = NormEstimate {
            value,
            maximizer_x: x,
            maximizer_y: Some(y),
            converged,
            restarts_used: r + 1,
        };
        match &best {
            Some(b) if b.value >= candidate.value => {}
            _ => best = Some(candidate),
        }
    }
    let mut out = best.expect("restarts >= 1");
    out.restarts_used = restarts;
    Ok(out)
}

/// Norm of a Hilbert-space-valued map over the operator-norm unit ball.
///
/// With G = M* M, the square of the target is sup |<G vec(a), vec(b)>| over
/// unit a, b (Cauchy-Schwarz collapses the two arguments at the optimum), and
/// that pairing alternates exactly the same way a bilinear form does; both
/// partial maximizations are again dual trace norms.
pub fn hilbertmap_norm(map: &HilbertMap, seed: u64, restarts: usize) -> Result<NormEstimate> {
    let alg = &map.algebra;
    if map.matrix.max_abs() == 0.0 {
        return Ok(NormEstimate {
            value: 0.0,
            maximizer_x: AlgElement::identity(alg),
            maximizer_y: None,
            converged: true,
            restarts_used: 0,
        });
    }
    let gram = map.matrix.adjoint().mul(&map.matrix);
    let (_, q) = gram.herm_eigen()?;
    let restarts = restarts.max(1);
    let mut best: Option<NormEstimate> = None;
    for r in 0..restarts {
        // start 0 reads the top eigenvector of G, later starts are random
        let mut a = if r == 0 {
            let top = q.col_slice(0);
            let e = AlgElement::unvec(alg, &top)?;
            let n = e.op_norm();
            if n > 1e-12 {
                e.scale(cr(1.0 / n))
            } else {
                AlgElement::identity(alg)
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
            AlgElement::random_unit(alg, &mut rng)
        };
        let mut b = a.clone();
        let mut value = 0.0;
        let mut converged = false;
        for _ in 0..SWEEP_CAP {
            // s(a, b) = <G vec(a), vec(b)>; freeze b, maximize over a
            let gb = gram.adjoint_vec(&b.vec());
            let wa: Vec<Complex64> = gb.iter().map(|z| z.conj()).collect();
            let fa = LinearFunctional::from_coordinates(alg, &wa)?;
            let (na, amax) = fa.norm_and_maximizer()?;
            if na > 0.0 {
                a = amax;
            }
            // freeze a, maximize over b via the conjugated functional
            let ga = gram.mat_vec(&a.vec());
            let wb: Vec<Complex64> = ga.iter().map(|z| z.conj()).collect();
            let fb = LinearFunctional::from_coordinates(alg, &wb)?;
            let (nb, bmax) = fb.norm_and_maximizer()?;
            if nb > 0.0 {
                b = bmax;
            }
            let new_value = na.max(nb);
            if new_value - value <= SWEEP_TOL * value.max(1.0) {
                value = value.max(new_value);
                converged = true;
                break;
            }
            value = new_value;
        }
        let candidate = NormEstimate {
            value: value.max(0.0).sqrt(),
            maximizer_x: a,
            maximizer_y: None,
            converged,
            restarts_used: r + 1,
        };
        match &best {
            Some(bst) if bst.value >= candidate.value => {}
            _ => best = Some(candidate),
        }
    }
    let mut out = best.expect("restarts >= 1");
    out.restarts_used = restarts;
    Ok(out)
}

/// n x n matrix of algebra elements, the argument type of amplified forms.
pub type BlockMatrix = Vec<Vec<AlgElement>>;

fn check_block_matrix(m: &BlockMatrix, alg: &FdAlgebra, n: usize) -> Result<()> {
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        return Err(Error::ShapeMismatch(format!("expected an {n}x{n} block matrix")));
    }
    for row in m {
        for e in row {
            if &e.algebra != alg {
                return Err(Error::AlgebraMismatch);
            }
        }
    }
    Ok(())
}

/// Entrywise amplification: the n-th matrix level of the form applied to
/// X in M_n(A), Y in M_n(B), giving the scalar matrix with entries
/// sum_k B(X_ik, Y_kj). The pairing against each Y entry is precomputed once
/// per (k, j), so the total cost is n^2 pairings plus n^3 coordinate dots.
pub fn amplified_eval(form: &BilinearForm, x: &BlockMatrix, y: &BlockMatrix) -> Result<ComplexMatrix> {
    let n = x.len();
    check_block_matrix(x, &form.alg_a, n)?;
    check_block_matrix(y, &form.alg_b, n)?;
    let mut paired: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            row.push(form.coeffs.mat_vec(&y[k][j].vec()));
        }
        paired.push(row);
    }
    let xv: Vec<Vec<Vec<Complex64>>> =
        x.iter().map(|row| row.iter().map(|e| e.vec()).collect()).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = ZERO;
            for k in 0..n {
                s += xv[i][k].iter().zip(&paired[k][j]).map(|(a, b)| a * b).sum::<Complex64>();
            }
            out[(i, j)] = s;
        }
    }
    Ok(out)
}

/// Operator norm of X in M_n(A): per algebra block, assemble the scalar
/// matrix of that block across all n x n entries and take the largest block
/// norm.
pub fn block_matrix_op_norm(x: &BlockMatrix, alg: &FdAlgebra) -> Result<f64> {
    let n = x.len();
    check_block_matrix(x, alg, n)?;
    if n == 0 {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for (blk, &d) in alg.block_dims().iter().enumerate() {
        let mut big = ComplexMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for j in 0..n {
                big.set_block(i * d, j * d, &x[i][j].blocks[blk]);
            }
        }
        worst = worst.max(big.op_norm());
    }
    Ok(worst)
}

/// The corner form on M_n: B(x, y) = (y x)_11. Its coefficient against units
/// is B(e_ij, e_kl) = [k=1][j=1][l=i] (matrix product followed by reading the
/// top-left entry), which makes every coefficient 0 or 1.
pub fn corner_form(n: usize) -> BilinearForm {
    let alg = FdAlgebra::full(n);
    let dim = alg.dim();
    let mut coeffs = ComplexMatrix::zeros(dim, dim);
    for i in 0..n {
        let p = alg.unit_index(0, i, 0);
        let q = alg.unit_index(0, 0, i);
        coeffs[(p, q)] = crate::matrix::ONE;
    }
    BilinearForm { alg_a: alg.clone(), alg_b: alg, coeffs }
}

/// The witness pair for the corner form at level n: X carries the units
/// e_k1 along its first row and Y the units e_1k down its first column. Both
/// are partial isometries of norm one, and the amplified form evaluates on
/// them to n times the matrix unit E_11.
pub fn corner_witness_pair(n: usize) -> (BlockMatrix, BlockMatrix) {
    let alg = FdAlgebra::full(n);
    let mut x = vec![vec![AlgElement::zero(&alg); n]; n];
    let mut y = vec![vec![AlgElement::zero(&alg); n]; n];
    for k in 0..n {
        x[0][k] = AlgElement::basis_element(&alg, 0, k, 0);
        y[k][0] = AlgElement::basis_element(&alg, 0, 0, k);
    }
    (x, y)
}

/// B(x, y) = Tr(x y) / d on M_d, the normalized trace pairing; norm one,
/// attained at the identity.
pub fn normalized_trace_form(d: usize) -> BilinearForm {
    let alg = FdAlgebra::full(d);
    let dim = alg.dim();
    let mut coeffs = ComplexMatrix::zeros(dim, dim);
    let w = cr(1.0 / d as f64);
    for i in 0..d {
        for j in 0..d {
            let p = alg.unit_index(0, i, j);
            let q = alg.unit_index(0, j, i);
            coeffs[(p, q)] = w;
        }
    }
    BilinearForm { alg_a: alg.clone(), alg_b: alg, coeffs }
}

/// F(a) = first row of a, as a column in C^d. Norm one: ||F(a)||^2 = (aa*)_11.
pub fn row_extraction_map(d: usize) -> HilbertMap {
    let alg = FdAlgebra::full(d);
    let mut m = ComplexMatrix::zeros(d, alg.dim());
    for j in 0..d {
        m[(j, alg.unit_index(0, 0, j))] = crate::matrix::ONE;
    }
    HilbertMap { algebra: alg, matrix: m }
}

/// F(a) = first column of a. Norm one: ||F(a)||^2 = (a*a)_11.
pub fn column_pick_map(d: usize) -> HilbertMap {
    let alg = FdAlgebra::full(d);
    let mut m = ComplexMatrix::zeros(d, alg.dim());
    for i in 0..d {
        m[(i, alg.unit_index(0, i, 0))] = crate::matrix::ONE;
    }
    HilbertMap { algebra: alg, matrix: m }
}

/// Random form of coefficient rank at most `rank`: a sum of rank products of
/// a random functional on each side, with unit coordinate vectors so the
/// norm stays of order one.
pub fn random_low_rank_form(
    alg_a: &FdAlgebra,
    alg_b: &FdAlgebra,
    rank: usize,
    rng: &mut impl rand::Rng,
) -> BilinearForm {
    let (da, db) = (alg_a.dim(), alg_b.dim());
    let mut coeffs = ComplexMatrix::zeros(da, db);
    for _ in 0..rank {
        let u = random_unit_coords(da, rng);
        let v = random_unit_coords(db, rng);
        for p in 0..da {
            for q in 0..db {
                coeffs[(p, q)] += u[p] * v[q];
            }
        }
    }
    BilinearForm { alg_a: alg_a.clone(), alg_b: alg_b.clone(), coeffs }
}

fn random_unit_coords(n: usize, rng: &mut impl rand::Rng) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> =
            (0..n).map(|_| crate::matrix::c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let norm = crate::matrix::vec_norm(&v);
        if norm > 1e-9 {
            return v.iter().map(|z| z / cr(norm)).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, ONE};
    use rand::Rng;

    fn random_form(alg_a: &FdAlgebra, alg_b: &FdAlgebra, rng: &mut impl Rng) -> BilinearForm {
        let coeffs = ComplexMatrix::from_fn(alg_a.dim(), alg_b.dim(), |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        BilinearForm::new(alg_a.clone(), alg_b.clone(), coeffs).unwrap()
    }

    #[test]
    fn eval_agrees_with_coefficient_double_sum() {
        let alg_a = FdAlgebra::new(vec![2, 1]).unwrap();
        let alg_b = FdAlgebra::full(2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let form = random_form(&alg_a, &alg_b, &mut rng);
        let x = AlgElement::random(&alg_a, &mut rng);
        let y = AlgElement::random(&alg_b, &mut rng);
        let mut want = ZERO;
        let xv = x.vec();
        let yv = y.vec();
        for p in 0..alg_a.dim() {
            for q in 0..alg_b.dim() {
                want += xv[p] * form.coeffs[(p, q)] * yv[q];
            }
        }
        assert!((form.eval(&x, &y).unwrap() - want).norm() < 1e-12);
        // and on basis pairs it reads the coefficient back
        for p in 0..alg_a.dim() {
            for q in 0..alg_b.dim() {
                let got = form
                    .eval(&AlgElement::basis_at(&alg_a, p), &AlgElement::basis_at(&alg_b, q))
                    .unwrap();
                assert!((got - form.coeffs[(p, q)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn corner_form_matches_product_oracle() {
        let n = 3;
        let form = corner_form(n);
        let alg = FdAlgebra::full(n);
        // oracle: actually multiply and read the (1,1) entry
        for p in 0..alg.dim() {
            for q in 0..alg.dim() {
                let x = AlgElement::basis_at(&alg, p);
                let y = AlgElement::basis_at(&alg, q);
                let want = y.mul(&x).unwrap().blocks[0][(0, 0)];
                assert_eq!(form.coeffs[(p, q)], want, "p={p} q={q}");
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = AlgElement::random(&alg, &mut rng);
        let y = AlgElement::random(&alg, &mut rng);
        let want = y.mul(&x).unwrap().blocks[0][(0, 0)];
        assert!((form.eval(&x, &y).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn extraction_maps_read_row_and_column() {
        let d = 3;
        let alg = FdAlgebra::full(d);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = AlgElement::random(&alg, &mut rng);
        let row = row_extraction_map(d).apply(&a).unwrap();
        let col = column_pick_map(d).apply(&a).unwrap();
        for k in 0..d {
            assert_eq!(row[k], a.blocks[0][(0, k)]);
            assert_eq!(col[k], a.blocks[0][(k, 0)]);
        }
        // squared lengths against the two one-sided grams
        let rr: f64 = row.iter().map(|z| z.norm_sqr()).sum();
        let cc: f64 = col.iter().map(|z| z.norm_sqr()).sum();
        let aa_star = a.mul(&a.adjoint()).unwrap();
        assert!((rr - aa_star.blocks[0][(0, 0)].re).abs() < 1e-12);
        assert!((cc - a.gram().blocks[0][(0, 0)].re).abs() < 1e-12);
        assert_eq!(row_extraction_map(d).target_dim(), d);
    }

    #[test]
    fn low_rank_form_has_low_rank_coefficients() {
        let alg = FdAlgebra::new(vec![1, 2]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let form = random_low_rank_form(&alg, &alg, 2, &mut rng);
        let sv = form.coeffs.singular_values().unwrap();
        assert!(sv.len() >= 3);
        assert!(sv[0] > 1e-3, "nondegenerate leading direction");
        assert!(sv[2] < 1e-12, "rank at most two, sv = {sv:?}");
    }

    #[test]
    fn hilbert_map_json_round_trip() {
        let m = row_extraction_map(2);
        let text = serde_json::to_string(&m).unwrap();
        let back: HilbertMap = serde_json::from_str(&text).unwrap();
        assert_eq!(m, back);
        // wrong column count rejected
        let bad = r#"{"algebra":{"blocks":[2]},"matrix":{"rows":1,"cols":3,"data":[[[0.0,0.0],[0.0,0.0],[0.0,0.0]]]}}"#;
        assert!(serde_json::from_str::<HilbertMap>(bad).is_err());
    }

    #[test]
    fn trace_form_matches_product_oracle() {
        let d = 3;
        let form = normalized_trace_form(d);
        let alg = FdAlgebra::full(d);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = AlgElement::random(&alg, &mut rng);
        let y = AlgElement::random(&alg, &mut rng);
        let want = x.mul(&y).unwrap().blocks[0].trace() / cr(d as f64);
        assert!((form.eval(&x, &y).unwrap() - want).norm() < 1e-12);
    }

    #[test]
    fn form_norm_of_corner_form_is_one() {
        let form = corner_form(3);
        let est = form_norm(&form, 11, 3).unwrap();
        assert!(est.converged);
        assert!((est.value - 1.0).abs() < 1e-9, "value {}", est.value);
        let y = est.maximizer_y.as_ref().unwrap();
        assert!((est.maximizer_x.op_norm() - 1.0).abs() < 1e-9);
        assert!((y.op_norm() - 1.0).abs() < 1e-9);
        let attained = form.eval(&est.maximizer_x, y).unwrap();
        assert!((attained.norm() - est.value).abs() < 1e-9);
    }

    #[test]
    fn form_norm_of_trace_form_is_one() {
        let form = normalized_trace_form(3);
        let est = form_norm(&form, 5, 3).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9, "value {}", est.value);
    }

    #[test]
    fn form_norm_of_single_entry_form() {
        // B(x, y) = x_01 y_10 picks two coordinates; norm 1
        let alg = FdAlgebra::full(2);
        let mut coeffs = ComplexMatrix::zeros(4, 4);
        coeffs[(alg.unit_index(0, 0, 1), alg.unit_index(0, 1, 0))] = ONE;
        let form = BilinearForm::new(alg.clone(), alg, coeffs).unwrap();
        let est = form_norm(&form, 1, 2).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn form_norm_zero_form() {
        let alg = FdAlgebra::full(2);
        let est = form_norm(&BilinearForm::zero(alg.clone(), alg), 1, 4).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.converged);
        assert_eq!(est.restarts_used, 0);
    }

    #[test]
    fn form_norm_upper_bounds_random_samples() {
        // the alternating value must dominate |B(x, y)| over random unit pairs
        let alg_a = FdAlgebra::full(2);
        let alg_b = FdAlgebra::new(vec![1, 2]).unwrap();
        for seed in 0..12u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let form = random_form(&alg_a, &alg_b, &mut rng);
            let est = form_norm(&form, seed, 6).unwrap();
            for _ in 0..25 {
                let x = AlgElement::random_unit(&alg_a, &mut rng);
                let y = AlgElement::random_unit(&alg_b, &mut rng);
                let v = form.eval(&x, &y).unwrap().norm();
                assert!(
                    v <= est.value * (1.0 + 1e-9) + 1e-12,
                    "seed {seed}: sample {v} beats estimate {}",
                    est.value
                );
            }
        }
    }

    #[test]
    fn hilbertmap_norm_of_flattening() {
        // F(a) = vec(a) on M_2: sup of frobenius over the op ball is sqrt(2)
        let alg = FdAlgebra::full(2);
        let map = HilbertMap::new(alg.clone(), ComplexMatrix::identity(4)).unwrap();
        let est = hilbertmap_norm(&map, 7, 3).unwrap();
        assert!((est.value - 2.0f64.sqrt()).abs() < 1e-8, "value {}", est.value);
        assert!((est.maximizer_x.op_norm() - 1.0).abs() < 1e-9);
        let img = map.apply(&est.maximizer_x).unwrap();
        let len: f64 = img.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((len - est.value).abs() < 1e-8);
        assert!(est.maximizer_y.is_none());
    }

    #[test]
    fn hilbertmap_norm_single_coordinate() {
        let alg = FdAlgebra::full(2);
        let mut m = ComplexMatrix::zeros(1, 4);
        m[(0, 0)] = ONE;
        let map = HilbertMap::new(alg, m).unwrap();
        let est = hilbertmap_norm(&map, 1, 2).unwrap();
        assert!((est.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn hilbertmap_norm_zero_map() {
        let alg = FdAlgebra::full(2);
        let map = HilbertMap::new(alg, ComplexMatrix::zeros(3, 4)).unwrap();
        let est = hilbertmap_norm(&map, 1, 2).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.converged);
    }

    #[test]
    fn amplified_eval_matches_direct_sum_of_evals() {
        let alg = FdAlgebra::new(vec![2, 1]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let form = random_form(&alg, &alg, &mut rng);
        let n = 3;
        let x: BlockMatrix =
            (0..n).map(|_| (0..n).map(|_| AlgElement::random(&alg, &mut rng)).collect()).collect();
        let y: BlockMatrix =
            (0..n).map(|_| (0..n).map(|_| AlgElement::random(&alg, &mut rng)).collect()).collect();
        let fast = amplified_eval(&form, &x, &y).unwrap();
        for i in 0..n {
            for j in 0..n {
                let mut want = ZERO;
                for k in 0..n {
                    want += form.eval(&x[i][k], &y[k][j]).unwrap();
                }
                assert!((fast[(i, j)] - want).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn corner_witness_hits_n_exactly() {
        let n = 4;
        let form = corner_form(n);
        let (x, y) = corner_witness_pair(n);
        let alg = FdAlgebra::full(n);
        assert!((block_matrix_op_norm(&x, &alg).unwrap() - 1.0).abs() < 1e-12);
        assert!((block_matrix_op_norm(&y, &alg).unwrap() - 1.0).abs() < 1e-12);
        let out = amplified_eval(&form, &x, &y).unwrap();
        // 0/1 arithmetic: the result is exactly n E_11
        for i in 0..n {
            for j in 0..n {
                let want = if i == 0 && j == 0 { cr(n as f64) } else { ZERO };
                assert_eq!(out[(i, j)], want);
            }
        }
    }

    #[test]
    fn form_json_round_trip_and_shape_check() {
        let form = corner_form(2);
        let s = serde_json::to_string(&form).unwrap();
        let back: BilinearForm = serde_json::from_str(&s).unwrap();
        assert_eq!(back.coeffs, form.coeffs);
        let bad = r#"{"alg_a":{"blocks":[2]},"alg_b":{"blocks":[2]},"coeffs":{"rows":3,"cols":4,"data":[[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]]]}}"#;
        assert!(serde_json::from_str::<BilinearForm>(bad).is_err());
    }
}
