//! Positive bilinear pairings and the compression that squares their
//! factorizations.
//!
//! A form B on a single algebra is positive when the pairing
//! (a, b) -> B(a*, b) is a positive semidefinite sesquilinear form. Such a B
//! is exactly an inner product of Hilbert-space values, B(a, b) = <F(b),
//! F(a*)>, and the factor map F determines B with ||B|| = ||F||^2. This
//! module extracts F from the pairing Gram matrix, turns any sandwich
//! representation of B into a symmetric one, compresses the symmetric middle
//! operator to the cyclic subspace where it must be PSD, and squares the
//! resulting one-sided representation back into a representation of B whose
//! bound is the square of the one-sided bound.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgElement, FdAlgebra, State};
use crate::error::{Error, Result};
use crate::forms::{form_norm, hilbertmap_norm, BilinearForm, HilbertMap};
use crate::gns::gns_construct;
use crate::jsrep::{JordanRep, JsRep};
use crate::matrix::{cr, ComplexMatrix, ZERO};

/// How far below zero a pairing eigenvalue may sit (relative to the largest)
/// before the form stops counting as positive.
pub const PSD_TOL: f64 = 1e-9;

/// Relative eigenvalue threshold under which pairing directions are treated
/// as kernel when building the factor map.
pub const KEEP_CUT: f64 = 1e-12;

/// Accepted relative gap between the form norm and the squared factor norm.
pub const NORM_GAP_TOL: f64 = 1e-5;

const BRACKET_TOL: f64 = 1e-9;
const REPRO_TOL: f64 = 1e-8;
const FRAME_TOL: f64 = 1e-9;

/// A positive form together with its pairing Gram matrix and factor map:
/// `gram[p][q] = B(e_q*, e_p)`, and `fb` satisfies
/// `B(a, b) = <fb(b), fb(a*)>` with `kernel_dim` directions of the algebra
/// pairing to nothing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositiveFormData {
    pub form: BilinearForm,
    pub gram: ComplexMatrix,
    pub fb: HilbertMap,
    pub kernel_dim: usize,
}

/// Pairing Gram matrix `H[p][q] = B(e_q*, e_p)` of a form on one algebra.
pub fn pairing_gram(form: &BilinearForm) -> Result<ComplexMatrix> {
    if form.alg_a != form.alg_b {
        return Err(Error::InvalidInput("a positive pairing needs both slots on one algebra".into()));
    }
    let alg = &form.alg_a;
    let dim = alg.dim();
    Ok(ComplexMatrix::from_fn(dim, dim, |p, q| form.coeffs[(alg.adjoint_index(q), p)]))
}

fn hermitian_or_reject(h: &ComplexMatrix) -> Result<()> {
    let res = h.hermitian_residual();
    if res > PSD_TOL * (1.0 + h.max_abs()) {
        return Err(Error::NotHermitianPairing(res));
    }
    Ok(())
}

/// Decide positivity of the pairing and report its smallest eigenvalue.
/// A non-Hermitian pairing is rejected outright rather than classified.
pub fn is_positive(form: &BilinearForm) -> Result<(bool, f64)> {
    let h = pairing_gram(form)?;
    hermitian_or_reject(&h)?;
    if h.max_abs() == 0.0 {
        return Ok((true, 0.0));
    }
    let (vals, _) = h.herm_eigen()?;
    let min = *vals.last().expect("nonempty spectrum");
    let max = vals[0].max(0.0);
    Ok((min >= -PSD_TOL * max.max(1.0), min))
}

/// Factor a positive form through a Hilbert space: eigendecompose the
/// pairing in the coordinates where conjugation acts trivially, keep the
/// eigendirections above the relative cutoff, and take F = D^(1/2) U* on
/// those. The bracket identity
///
/// ```text
/// B(e_p*, e_q) = <fb(e_q), fb(e_p)>
/// ```
///
/// is replayed on the whole basis before the data is released.
pub fn build_fb(form: &BilinearForm) -> Result<PositiveFormData> {
    let h = pairing_gram(form)?;
    hermitian_or_reject(&h)?;
    let alg = form.alg_a.clone();
    let dim = alg.dim();
    if h.max_abs() == 0.0 {
        let fb = HilbertMap::new(alg, ComplexMatrix::zeros(0, dim))?;
        return Ok(PositiveFormData { form: form.clone(), gram: h, fb, kernel_dim: dim });
    }
    // the bracket lives on conjugated left coordinates, which transposes H
    let ht = h.transpose().conj();
    let (vals, q) = ht.herm_eigen()?;
    let max = vals[0];
    if vals.last().copied().unwrap_or(0.0) < -PSD_TOL * max.max(1.0) {
        return Err(Error::NotPositive(*vals.last().expect("nonempty spectrum")));
    }
    let rank = vals.iter().take_while(|&&l| l > KEEP_CUT * max).count();
    let matrix = ComplexMatrix::from_fn(rank, dim, |r, p| q[(p, r)].conj() * cr(vals[r].sqrt()));
    let fb = HilbertMap::new(alg.clone(), matrix)?;
    for p in 0..dim {
        for qi in 0..dim {
            let fp = fb.apply(&AlgElement::basis_at(&alg, p))?;
            let fq = fb.apply(&AlgElement::basis_at(&alg, qi))?;
            let bracket: Complex64 = fq.iter().zip(&fp).map(|(x, y)| x * y.conj()).sum();
            let want = form.coeffs[(alg.adjoint_index(p), qi)];
            if (bracket - want).norm() > BRACKET_TOL {
                return Err(Error::Numerical(format!(
                    "pairing factor fails the bracket identity by {:.3e}",
                    (bracket - want).norm()
                )));
            }
        }
    }
    Ok(PositiveFormData { form: form.clone(), gram: h, fb, kernel_dim: dim - rank })
}

/// The two sides of the square identity ||B|| = ||F_B||^2, each estimated by
/// its own ascent, and their relative gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSquareReport {
    pub form_norm: f64,
    pub map_norm: f64,
    pub rel_gap: f64,
    pub pass: bool,
}

/// Estimate both sides of the square identity independently and compare.
pub fn check_norm_square(
    form: &BilinearForm,
    data: &PositiveFormData,
    restarts: usize,
    seed: u64,
) -> Result<NormSquareReport> {
    let fe = form_norm(form, seed, restarts)?;
    let me = hilbertmap_norm(&data.fb, seed.wrapping_add(1), restarts)?;
    let squared = me.value * me.value;
    let rel_gap = (fe.value - squared).abs() / fe.value.max(squared).max(1e-12);
    Ok(NormSquareReport {
        form_norm: fe.value,
        map_norm: me.value,
        rel_gap,
        pass: rel_gap <= NORM_GAP_TOL,
    })
}

fn conj_row(v: &[Complex64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(1, v.len(), |_, j| v[j].conj())
}

/// Square a one-sided representation of the factor map into a
/// representation of the form itself: if F(a) = S sigma(a) gamma then
///
/// ```text
/// B(a, b) = <F(b), F(a*)> = gamma* sigma(a) (S*S) sigma(b) gamma,
/// ```
///
/// so the same Jordan representation serves both slots and the middle
/// operator is S*S with norm exactly ||S||^2.
pub fn square_fb_rep(jf: &JsRep) -> Result<JsRep> {
    if jf.arity() != 1 {
        return Err(Error::InvalidInput("squaring needs a one-sided representation".into()));
    }
    let s = &jf.operators[0];
    let gamma_col = &jf.operators[1];
    if gamma_col.cols() != 1 {
        return Err(Error::InvalidInput("squaring needs a vector-shaped right end".into()));
    }
    let gamma = gamma_col.col_slice(0);
    JsRep::new(
        vec![conj_row(&gamma), s.adjoint().mul(s), gamma_col.clone()],
        vec![jf.reps[0].clone(), jf.reps[0].clone()],
    )
}

fn basis_coeffs(j: &JsRep, alg: &FdAlgebra) -> Result<ComplexMatrix> {
    let dim = alg.dim();
    let mut coeffs = ComplexMatrix::zeros(dim, dim);
    for p in 0..dim {
        for q in 0..dim {
            coeffs[(p, q)] = j.evaluate_scalar(&[
                AlgElement::basis_at(alg, p),
                AlgElement::basis_at(alg, q),
            ])?;
        }
    }
    Ok(coeffs)
}

/// Rewrite a sandwich representation of a positive form with identical ends:
/// unit vectors are split off the two outer operators, the released norms
/// move into the middle, and the doubled representation
/// sigma_l + sigma_r acts on both slots around
///
/// ```text
/// S = [[0, T'], [T'*, 0]],   gamma = (eta, xi) / sqrt(2).
/// ```
///
/// The rewrite evaluates to (B(a, b) + conj B(b*, a*)) / 2, which is B again
/// exactly because the pairing is Hermitian; non-positive input is rejected
/// before any rewriting happens. The middle norm is unchanged, so the bound
/// is preserved.
pub fn symmetrize(j: &JsRep) -> Result<JsRep> {
    if j.arity() != 2 {
        return Err(Error::InvalidInput("symmetrization needs a two-slot sandwich".into()));
    }
    if j.reps[0].algebra != j.reps[1].algebra {
        return Err(Error::AlgebraMismatch);
    }
    if j.operators[0].rows() != 1 || j.operators[2].cols() != 1 {
        return Err(Error::InvalidInput("symmetrization needs scalar-valued ends".into()));
    }
    let alg = j.reps[0].algebra.clone();
    let coeffs = basis_coeffs(j, &alg)?;
    let form = BilinearForm::new(alg.clone(), alg.clone(), coeffs)?;
    let h = pairing_gram(&form)?;
    hermitian_or_reject(&h)?;
    if h.max_abs() > 0.0 {
        let (vals, _) = h.herm_eigen()?;
        let min = *vals.last().expect("nonempty spectrum");
        if min < -PSD_TOL * vals[0].max(1.0) {
            return Err(Error::NotPositive(min));
        }
    }

    let (sigma, perm) = j.reps[0].direct_sum(&j.reps[1])?;
    let k = j.reps[0].space();
    let l = j.reps[1].space();
    let eta: Vec<Complex64> = (0..k).map(|i| j.operators[0][(0, i)].conj()).collect();
    let xi: Vec<Complex64> = (0..l).map(|i| j.operators[2][(i, 0)]).collect();
    let en: f64 = eta.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let xn: f64 = xi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();

    let (s_naive, gamma_naive) = if en < 1e-14 || xn < 1e-14 || j.operators[1].max_abs() == 0.0 {
        // nothing flows through the sandwich: a zero middle with any unit
        // ends represents the zero form with bound zero
        let mut g = vec![ZERO; k + l];
        g[0] = crate::matrix::ONE;
        (ComplexMatrix::zeros(k + l, k + l), g)
    } else {
        let t2 = j.operators[1].scale(cr(en * xn));
        let mut s = ComplexMatrix::zeros(k + l, k + l);
        s.set_block(0, k, &t2);
        s.set_block(k, 0, &t2.adjoint());
        let root_half = cr(std::f64::consts::FRAC_1_SQRT_2);
        let g: Vec<Complex64> = eta
            .iter()
            .map(|z| z * root_half / cr(en))
            .chain(xi.iter().map(|z| z * root_half / cr(xn)))
            .collect();
        (s, g)
    };
    let s = perm.mul(&s_naive).mul(&perm.transpose());
    let gamma = perm.mat_vec(&gamma_naive);
    let out = JsRep::new(
        vec![conj_row(&gamma), s, ComplexMatrix::column(&gamma)],
        vec![sigma.clone(), sigma],
    )?;
    let replay = basis_coeffs(&out, &alg)?;
    let res = replay.sub(&form.coeffs).max_abs();
    if res > BRACKET_TOL {
        return Err(Error::Numerical(format!("symmetrization drifted by {res:.3e} on the basis")));
    }
    Ok(out)
}

/// Compress a symmetric representation of a positive form onto the cyclic
/// subspace spanned by sigma(e_p) gamma. On that subspace the compressed
/// middle QSQ is forced PSD by positivity, its square root P turns the
/// sandwich into a square of the frame G = [P sigma(e_p) gamma], and since
/// G*G agrees with the Gram of the canonical factor F_B there is a partial
/// isometry W* carrying one frame to the other. The returned one-sided
/// representation W* P sigma(.) gamma evaluates F_B with bound at most
/// sqrt of the symmetric bound; W comes along for inspection.
pub fn compress_positive(jsym: &JsRep, form: &BilinearForm) -> Result<(JsRep, ComplexMatrix)> {
    if jsym.arity() != 2 {
        return Err(Error::InvalidInput("compression needs a two-slot sandwich".into()));
    }
    let alg = jsym.reps[0].algebra.clone();
    if form.alg_a != alg || form.alg_b != alg || jsym.reps[1].algebra != alg {
        return Err(Error::AlgebraMismatch);
    }
    if jsym.operators[0].rows() != 1 || jsym.operators[2].cols() != 1 {
        return Err(Error::InvalidInput("compression needs scalar-valued ends".into()));
    }
    let gamma = jsym.operators[2].col_slice(0);
    let ends_match = (0..gamma.len())
        .all(|i| (jsym.operators[0][(0, i)].conj() - gamma[i]).norm() < 1e-9);
    if !ends_match || jsym.reps[0].space() != jsym.reps[1].space() {
        return Err(Error::InvalidInput("compression expects matching ends; symmetrize first".into()));
    }
    let data = build_fb(form)?;
    let sigma = jsym.reps[0].clone();
    let space = sigma.space();
    let dim = alg.dim();

    let orbit: Vec<Vec<Complex64>> = (0..dim)
        .map(|p| Ok(sigma.image(&AlgElement::basis_at(&alg, p))?.mat_vec(&gamma)))
        .collect::<Result<_>>()?;
    let span = crate::matrix::orthonormal_span(&orbit, space, 1e-10)?;
    let qproj = span.mul(&span.adjoint());
    let qsq = qproj.mul(&jsym.operators[1]).mul(&qproj);
    let qsq = qsq.add(&qsq.adjoint()).scale(cr(0.5));
    if qsq.max_abs() > 0.0 {
        let (vals, _) = qsq.herm_eigen()?;
        let min = *vals.last().expect("nonempty spectrum");
        if min < -1e-8 * vals[0].max(1.0) {
            return Err(Error::CompressionNotPsd(min));
        }
    }
    let p_half = qsq.herm_sqrt()?;

    let mut gm = ComplexMatrix::zeros(space, dim);
    for (p, col) in orbit.iter().enumerate() {
        let img = p_half.mat_vec(col);
        for i in 0..space {
            gm[(i, p)] = img[i];
        }
    }
    let fm = &data.fb.matrix;
    let x = fm.mul(&gm.pinv(1e-10)?);
    let sv = x.svd()?;
    let smax = sv.singular_values.first().copied().unwrap_or(0.0);
    let keep = sv
        .singular_values
        .iter()
        .take_while(|&&s| s > 1e-10 * smax && s > 1e-14)
        .count();
    let wstar = sv
        .u
        .block(0, 0, x.rows(), keep)
        .mul(&sv.vt.block(0, 0, keep, x.cols()));
    let rank = fm.rows();
    let iso_res = wstar
        .mul(&wstar.adjoint())
        .sub(&ComplexMatrix::identity(rank))
        .max_abs();
    if iso_res > FRAME_TOL {
        return Err(Error::FrameMismatch(iso_res));
    }
    let frame_res = wstar.mul(&gm).sub(fm).max_abs();
    if frame_res > REPRO_TOL {
        return Err(Error::FrameMismatch(frame_res));
    }

    let out = JsRep::new(
        vec![wstar.mul(&p_half), ComplexMatrix::column(&gamma)],
        vec![sigma],
    )?;
    let limit = jsym.bound().sqrt() + 1e-6;
    if out.bound() > limit {
        return Err(Error::NormExcess { got: out.bound(), limit });
    }
    Ok((out, wstar.adjoint()))
}

/// Symmetric sandwich of the normalized trace form on M_d, straight from the
/// cyclic space of the maximally mixed state: identity in the middle, the
/// cyclic vector on both ends, bound one.
pub fn trace_form_rep(d: usize) -> Result<JsRep> {
    let alg = FdAlgebra::full(d);
    let g = gns_construct(&State::maximally_mixed(&alg))?;
    let rep = JordanRep::from_rep(g.pi.clone());
    JsRep::new(
        vec![
            conj_row(&g.xi),
            ComplexMatrix::identity(g.space_dim),
            ComplexMatrix::column(&g.xi),
        ],
        vec![rep.clone(), rep],
    )
}
