//! Witness states for Grothendieck-type inequalities, and the factorizations
//! they certify.
//!
//! A bilinear form B on a pair of block algebras obeys
//!
//! ```text
//! |B(a, b)| <= c sqrt(kappa(a*a) + lambda(aa*)) sqrt(mu(b*b) + nu(bb*))
//! ```
//!
//! for suitable states once c reaches the norm of B. This module checks a
//! candidate witness by adversarial ascent over the two unit balls, searches
//! for one by multiplicative weights on the four densities, and turns a
//! certified witness into a sandwich representation with bound at most 2c by
//! interpolating through the GNS spaces of the witness states. A one-sided
//! variant does the same for linear maps into a Hilbert space, where the
//! constant is sqrt(2) c. `ratio_scan` samples random instances and records
//! the ratio between the constructed bound and the plain norm.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{AlgElement, FdAlgebra, LinearFunctional, State};
use crate::error::{Error, Result};
use crate::forms::{form_norm, hilbertmap_norm, random_low_rank_form, BilinearForm, HilbertMap};
use crate::gns::gns_construct;
use crate::jsrep::{JordanRep, JsRep};
use crate::matrix::{cr, ComplexMatrix, ONE, ZERO};

/// A check whose worst found violation stays below this level certifies the
/// witness for factorization purposes.
pub const WITNESS_TOL: f64 = 1e-6;

/// Relative slack allowed on interpolation norms over the norm estimate they
/// are compared against; the estimate itself is a best-found value.
pub const NORM_SLACK: f64 = 1e-6;

/// The search targets the inequality at `norm * (1 + SEARCH_SLACK)` so that a
/// state tuple it settles on keeps a margin at the norm itself.
const SEARCH_SLACK: f64 = 1e-7;

/// Rank cutoff (relative) for the pseudoinverses in the interpolation steps.
const INTERP_CUT: f64 = 1e-10;

/// Largest residual accepted when a factorization is replayed on the basis.
const REPRO_TOL: f64 = 1e-8;

/// Multiplicative-weights step and eigenvalue floor for the density updates.
const MW_STEP: f64 = 0.1;
const MW_FLOOR: f64 = 1e-8;

// ---------------------------------------------------------------------------
// witness state bundles

/// The four states of a bilinear witness. `kappa` and `lambda` live on the
/// left algebra and pair with a*a and aa* respectively; `mu` and `nu` live on
/// the right algebra and pair with b*b and bb*.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct WitnessStates {
    pub lambda: State,
    pub kappa: State,
    pub mu: State,
    pub nu: State,
}

impl WitnessStates {
    /// All four maximally mixed; certifies any form whose norm it needs to
    /// certify only at pairs where mixing already dominates (and the zero
    /// form trivially).
    pub fn uniform(alg_a: &FdAlgebra, alg_b: &FdAlgebra) -> Self {
        WitnessStates {
            lambda: State::maximally_mixed(alg_a),
            kappa: State::maximally_mixed(alg_a),
            mu: State::maximally_mixed(alg_b),
            nu: State::maximally_mixed(alg_b),
        }
    }

    fn check_algebras(&self, alg_a: &FdAlgebra, alg_b: &FdAlgebra) -> Result<()> {
        if self.kappa.algebra() != alg_a
            || self.lambda.algebra() != alg_a
            || self.mu.algebra() != alg_b
            || self.nu.algebra() != alg_b
        {
            return Err(Error::AlgebraMismatch);
        }
        Ok(())
    }
}

/// The two states of a one-sided witness for a Hilbert-space-valued map:
/// ||F(a)||^2 <= c^2 (psi(a*a) + phi(aa*)).
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct LittleWitness {
    pub psi: State,
    pub phi: State,
}

impl LittleWitness {
    pub fn uniform(alg: &FdAlgebra) -> Self {
        LittleWitness { psi: State::maximally_mixed(alg), phi: State::maximally_mixed(alg) }
    }
}

/// Outcome of a witness check. Positive `max_violation` means the inequality
/// failed at `worst_a` (paired with `worst_b` in the bilinear case); the
/// recorded pair lets anyone recompute the violation from scratch.
#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct WitnessReport {
    pub max_violation: f64,
    pub worst_a: AlgElement,
    pub worst_b: Option<AlgElement>,
    pub norm_estimate_used: f64,
}

impl WitnessReport {
    pub fn pass(&self) -> bool {
        self.max_violation <= WITNESS_TOL
    }
}

// ---------------------------------------------------------------------------
// quadratic forms attached to a witness

/// Coefficient matrix G of a |-> kappa(a*a) + lambda(aa*) in the conjugated
/// coordinates alpha = conj(vec a): the value is alpha* G alpha. Writing
/// p = (blk, i, j) and q = (blk, k, l), the unit products collapse to single
/// density entries.
pub fn witness_gram_left(kappa: &State, lambda: &State) -> ComplexMatrix {
    let alg = kappa.algebra();
    let dim = alg.dim();
    let kd = kappa.densities();
    let ld = lambda.densities();
    ComplexMatrix::from_fn(dim, dim, |p, q| {
        let (bp, i, j) = alg.unit_at(p);
        let (bq, k, l) = alg.unit_at(q);
        if bp != bq {
            return ZERO;
        }
        let mut z = ZERO;
        if i == k {
            z += kd[bp][(j, l)];
        }
        if j == l {
            z += ld[bp][(k, i)];
        }
        z
    })
}

/// Coefficient matrix G of b |-> mu(b*b) + nu(bb*) in the plain coordinates
/// beta = vec b: the value is beta* G beta.
pub fn witness_gram_right(mu: &State, nu: &State) -> ComplexMatrix {
    let alg = mu.algebra();
    let dim = alg.dim();
    let md = mu.densities();
    let nd = nu.densities();
    ComplexMatrix::from_fn(dim, dim, |p, q| {
        let (bp, i, j) = alg.unit_at(p);
        let (bq, k, l) = alg.unit_at(q);
        if bp != bq {
            return ZERO;
        }
        let mut z = ZERO;
        if i == k {
            z += md[bp][(l, j)];
        }
        if j == l {
            z += nd[bp][(i, k)];
        }
        z
    })
}

/// Violation of the bilinear inequality at one pair, computed directly from
/// the states (no precomputed quadratic forms), so a reported worst pair can
/// be replayed independently.
pub fn violation_at(
    form: &BilinearForm,
    w: &WitnessStates,
    norm_b: f64,
    a: &AlgElement,
    b: &AlgElement,
) -> Result<f64> {
    let f = form.eval(a, b)?.norm();
    let qa = (w.kappa.apply(&a.gram())? + w.lambda.apply(&a.mul(&a.adjoint())?)?).re.max(0.0);
    let qb = (w.mu.apply(&b.gram())? + w.nu.apply(&b.mul(&b.adjoint())?)?).re.max(0.0);
    Ok(f - norm_b * qa.sqrt() * qb.sqrt())
}

/// One-sided counterpart of [`violation_at`].
pub fn violation_at_little(
    map: &HilbertMap,
    w: &LittleWitness,
    norm_f: f64,
    a: &AlgElement,
) -> Result<f64> {
    let fa = map.apply(a)?;
    let len: f64 = fa.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let q = (w.psi.apply(&a.gram())? + w.phi.apply(&a.mul(&a.adjoint())?)?).re.max(0.0);
    Ok(len - norm_f * q.sqrt())
}

// ---------------------------------------------------------------------------
// adversarial ascent

fn conj_vec(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|z| z.conj()).collect()
}

/// alpha* G alpha with alpha = conj(v).
fn quad_conj(g: &ComplexMatrix, v: &[Complex64]) -> f64 {
    let w = g.mat_vec(&conj_vec(v));
    v.iter().zip(&w).map(|(x, y)| x * y).sum::<Complex64>().re.max(0.0)
}

/// beta* G beta with beta = v.
fn quad_plain(g: &ComplexMatrix, v: &[Complex64]) -> f64 {
    let w = g.mat_vec(v);
    w.iter().zip(v).map(|(x, y)| x * y.conj()).sum::<Complex64>().re.max(0.0)
}

/// Scale to operator norm one; degenerate inputs are replaced by a fresh
/// random unit so the ascent never sits on the zero element.
fn to_unit_sphere(x: AlgElement, rng: &mut ChaCha8Rng) -> AlgElement {
    let n = x.op_norm();
    if n > 1e-12 {
        x.scale(cr(1.0 / n))
    } else {
        AlgElement::random_unit(&x.algebra.clone(), rng)
    }
}

struct PairProblem<'a> {
    form: &'a BilinearForm,
    ga: &'a ComplexMatrix,
    gb: &'a ComplexMatrix,
    c_level: f64,
}

impl PairProblem<'_> {
    fn value(&self, va: &[Complex64], vb: &[Complex64]) -> f64 {
        let cb = self.form.coeffs.mat_vec(vb);
        let f: Complex64 = va.iter().zip(&cb).map(|(x, y)| x * y).sum();
        let qa = quad_conj(self.ga, va);
        let qb = quad_plain(self.gb, vb);
        f.norm() - self.c_level * qa.sqrt() * qb.sqrt()
    }

    /// Ascent directions in the conjugate coordinates of each argument.
    fn gradient(&self, va: &[Complex64], vb: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let cb = self.form.coeffs.mat_vec(vb);
        let ca = self.form.coeffs.transpose_vec(va);
        let f: Complex64 = va.iter().zip(&cb).map(|(x, y)| x * y).sum();
        let phase = if f.norm() > 1e-14 { f / cr(f.norm()) } else { ZERO };
        let qa = quad_conj(self.ga, va).max(1e-18);
        let qb = quad_plain(self.gb, vb).max(1e-18);
        let (sqa, sqb) = (qa.sqrt(), qb.sqrt());
        let gat = self.ga.transpose_vec(va);
        let gbv = self.gb.mat_vec(vb);
        let da: Vec<Complex64> = cb
            .iter()
            .zip(&gat)
            .map(|(cbp, gp)| phase * cbp.conj() * cr(0.5) - gp * cr(self.c_level * sqb / (2.0 * sqa)))
            .collect();
        let db: Vec<Complex64> = ca
            .iter()
            .zip(&gbv)
            .map(|(cap, gp)| phase * cap.conj() * cr(0.5) - gp * cr(self.c_level * sqa / (2.0 * sqb)))
            .collect();
        (da, db)
    }
}

/// Gradient ascent on the unit spheres with a multiplicative trust step:
/// accepted moves grow the step, rejected ones shrink it, so the pair settles
/// into a local maximum to far better resolution than a fixed schedule.
fn ascend_pair(
    prob: &PairProblem,
    start: (AlgElement, AlgElement),
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, AlgElement, AlgElement) {
    let mut a = to_unit_sphere(start.0, rng);
    let mut b = to_unit_sphere(start.1, rng);
    let mut g_cur = prob.value(&a.vec(), &b.vec());
    let mut best = (g_cur, a.clone(), b.clone());
    let mut step = 0.2;
    for _ in 0..iters {
        if step < 1e-9 {
            break;
        }
        let va = a.vec();
        let vb = b.vec();
        let (da, db) = prob.gradient(&va, &vb);
        let gn = (da.iter().chain(&db).map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
        if gn < 1e-14 {
            break;
        }
        let s = step / gn;
        let va_try: Vec<Complex64> = va.iter().zip(&da).map(|(v, d)| v + d * cr(s)).collect();
        let vb_try: Vec<Complex64> = vb.iter().zip(&db).map(|(v, d)| v + d * cr(s)).collect();
        let a_try = to_unit_sphere(
            AlgElement::unvec(&prob.form.alg_a, &va_try).expect("dimension preserved"),
            rng,
        );
        let b_try = to_unit_sphere(
            AlgElement::unvec(&prob.form.alg_b, &vb_try).expect("dimension preserved"),
            rng,
        );
        let g_try = prob.value(&a_try.vec(), &b_try.vec());
        if g_try > g_cur {
            a = a_try;
            b = b_try;
            g_cur = g_try;
            step *= 1.25;
            if g_cur > best.0 {
                best = (g_cur, a.clone(), b.clone());
            }
        } else {
            step *= 0.5;
        }
    }
    best
}

/// Most negative eigenvector of the certificate matrix
/// [[c G_A, C], [C*, c G_B]], split into a candidate pair. The matrix is PSD
/// exactly when the inequality holds at level c, so this eigenvector is the
/// natural place to look for a violation.
fn certificate_seed(
    form: &BilinearForm,
    ga: &ComplexMatrix,
    gb: &ComplexMatrix,
    c_level: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(AlgElement, AlgElement)> {
    let da = ga.rows();
    let db = gb.rows();
    let mut z = ComplexMatrix::zeros(da + db, da + db);
    z.set_block(0, 0, &ga.scale(cr(c_level)));
    z.set_block(0, da, &form.coeffs);
    z.set_block(da, 0, &form.coeffs.adjoint());
    z.set_block(da, da, &gb.scale(cr(c_level)));
    let (_, q) = z.herm_eigen()?;
    let v = q.col_slice(da + db - 1);
    let a = AlgElement::unvec(&form.alg_a, &conj_vec(&v[..da]))?;
    let b = AlgElement::unvec(&form.alg_b, &v[da..])?;
    Ok((to_unit_sphere(a, rng), to_unit_sphere(b, rng)))
}

/// Best violating pair found across the given warm start, the certificate
/// eigenvector, and `extra_random` random pairs.
fn worst_pair(
    form: &BilinearForm,
    ga: &ComplexMatrix,
    gb: &ComplexMatrix,
    c_level: f64,
    warm: Option<(AlgElement, AlgElement)>,
    extra_random: usize,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, AlgElement, AlgElement)> {
    let prob = PairProblem { form, ga, gb, c_level };
    let mut starts = Vec::new();
    if let Some(p) = warm {
        starts.push(p);
    }
    starts.push(certificate_seed(form, ga, gb, c_level, rng)?);
    for _ in 0..extra_random {
        starts.push((
            AlgElement::random_unit(&form.alg_a, rng),
            AlgElement::random_unit(&form.alg_b, rng),
        ));
    }
    let mut best: Option<(f64, AlgElement, AlgElement)> = None;
    for start in starts {
        let cand = ascend_pair(&prob, start, iters, rng);
        if best.as_ref().map_or(true, |b| cand.0 > b.0) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least the certificate start ran"))
}

/// Verify a bilinear witness: maximize |B(a, b)| minus the certified right
/// hand side over the product of unit balls, from the certificate
/// eigenvector, the norm maximizer, and `restarts` random pairs. The reported
/// violation is recomputed from the states at the returned pair.
pub fn check_witness(
    form: &BilinearForm,
    w: &WitnessStates,
    norm_b: f64,
    restarts: usize,
    seed: u64,
) -> Result<WitnessReport> {
    w.check_algebras(&form.alg_a, &form.alg_b)?;
    let ga = witness_gram_left(&w.kappa, &w.lambda);
    let gb = witness_gram_right(&w.mu, &w.nu);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let est = form_norm(form, seed.wrapping_add(0x5EED), 2)?;
    let warm = est.maximizer_y.map(|y| (est.maximizer_x, y));
    let (_, wa, wb) =
        worst_pair(form, &ga, &gb, norm_b, warm, restarts, 400, &mut rng)?;
    let max_violation = violation_at(form, w, norm_b, &wa, &wb)?;
    Ok(WitnessReport {
        max_violation,
        worst_a: wa,
        worst_b: Some(wb),
        norm_estimate_used: norm_b,
    })
}

// ---------------------------------------------------------------------------
// one-sided ascent

struct SingleProblem<'a> {
    map: &'a HilbertMap,
    k: &'a ComplexMatrix,
    c_level: f64,
}

impl SingleProblem<'_> {
    fn value(&self, v: &[Complex64]) -> f64 {
        let fv = self.map.matrix.mat_vec(v);
        let len: f64 = fv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        len - self.c_level * quad_plain(self.k, v).sqrt()
    }

    fn gradient(&self, v: &[Complex64]) -> Vec<Complex64> {
        let fv = self.map.matrix.mat_vec(v);
        let len = fv.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-14);
        let pull = self.map.matrix.adjoint_vec(&fv);
        let q = quad_plain(self.k, v).max(1e-18);
        let kv = self.k.mat_vec(v);
        pull.iter()
            .zip(&kv)
            .map(|(p, g)| p * cr(0.5 / len) - g * cr(self.c_level / (2.0 * q.sqrt())))
            .collect()
    }
}

fn ascend_single(
    prob: &SingleProblem,
    start: AlgElement,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> (f64, AlgElement) {
    let mut a = to_unit_sphere(start, rng);
    let mut g_cur = prob.value(&a.vec());
    let mut best = (g_cur, a.clone());
    let mut step = 0.2;
    for _ in 0..iters {
        if step < 1e-9 {
            break;
        }
        let v = a.vec();
        let d = prob.gradient(&v);
        let gn = d.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if gn < 1e-14 {
            break;
        }
        let s = step / gn;
        let v_try: Vec<Complex64> = v.iter().zip(&d).map(|(x, y)| x + y * cr(s)).collect();
        let a_try = to_unit_sphere(
            AlgElement::unvec(&prob.map.algebra, &v_try).expect("dimension preserved"),
            rng,
        );
        let g_try = prob.value(&a_try.vec());
        if g_try > g_cur {
            a = a_try;
            g_cur = g_try;
            step *= 1.25;
            if g_cur > best.0 {
                best = (g_cur, a.clone());
            }
        } else {
            step *= 0.5;
        }
    }
    best
}

fn certificate_seed_little(
    map: &HilbertMap,
    k: &ComplexMatrix,
    c_level: f64,
    rng: &mut ChaCha8Rng,
) -> Result<AlgElement> {
    // c^2 K - M* M is PSD exactly when the inequality holds at level c.
    let mm = map.matrix.adjoint().mul(&map.matrix);
    let z = k.scale(cr(c_level * c_level)).sub(&mm);
    let (_, q) = z.herm_eigen()?;
    let v = q.col_slice(z.rows() - 1);
    Ok(to_unit_sphere(AlgElement::unvec(&map.algebra, &v)?, rng))
}

fn worst_single(
    map: &HilbertMap,
    k: &ComplexMatrix,
    c_level: f64,
    warm: Option<AlgElement>,
    extra_random: usize,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, AlgElement)> {
    let prob = SingleProblem { map, k, c_level };
    let mut starts = Vec::new();
    if let Some(a) = warm {
        starts.push(a);
    }
    starts.push(certificate_seed_little(map, k, c_level, rng)?);
    for _ in 0..extra_random {
        starts.push(AlgElement::random_unit(&map.algebra, rng));
    }
    let mut best: Option<(f64, AlgElement)> = None;
    for start in starts {
        let cand = ascend_single(&prob, start, iters, rng);
        if best.as_ref().map_or(true, |b| cand.0 > b.0) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least the certificate start ran"))
}

/// One-sided witness check; see [`check_witness`].
pub fn check_witness_little(
    map: &HilbertMap,
    w: &LittleWitness,
    norm_f: f64,
    restarts: usize,
    seed: u64,
) -> Result<WitnessReport> {
    if w.psi.algebra() != &map.algebra || w.phi.algebra() != &map.algebra {
        return Err(Error::AlgebraMismatch);
    }
    let k = witness_gram_right(&w.psi, &w.phi);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let est = hilbertmap_norm(map, seed.wrapping_add(0x5EED), 2)?;
    let (_, wa) = worst_single(map, &k, norm_f, Some(est.maximizer_x), restarts, 400, &mut rng)?;
    let max_violation = violation_at_little(map, w, norm_f, &wa)?;
    Ok(WitnessReport { max_violation, worst_a: wa, worst_b: None, norm_estimate_used: norm_f })
}

// ---------------------------------------------------------------------------
// witness search

/// One multiplicative-weights move of a single density: floor the spectrum,
/// add the update direction on the log scale, exponentiate, renormalize the
/// total trace.
fn density_update(s: &State, d: &AlgElement) -> Result<State> {
    let mut blocks = Vec::with_capacity(s.densities().len());
    for (rho, db) in s.densities().iter().zip(&d.blocks) {
        let bumped = rho.herm_log_floored(MW_FLOOR)?.add(&db.scale(cr(MW_STEP)));
        blocks.push(bumped.herm_exp()?);
    }
    let total: f64 = blocks.iter().map(|m| m.trace().re).sum();
    let blocks = blocks.iter().map(|m| m.scale(cr(1.0 / total))).collect();
    Ok(State::from_normalized(s.algebra().clone(), blocks))
}

fn mw_step_bilinear(w: &WitnessStates, a: &AlgElement, b: &AlgElement) -> Result<WitnessStates> {
    Ok(WitnessStates {
        kappa: density_update(&w.kappa, &a.gram())?,
        lambda: density_update(&w.lambda, &a.mul(&a.adjoint())?)?,
        mu: density_update(&w.mu, &b.gram())?,
        nu: density_update(&w.nu, &b.mul(&b.adjoint())?)?,
    })
}

/// Per-block support densities of a functional with the given coefficient
/// blocks: left accumulates U S U* and right V S V* from each block's
/// singular decomposition; both have total trace equal to the functional
/// norm. Returns None for the zero functional.
fn functional_support(
    f: &LinearFunctional,
) -> Result<Option<(Vec<ComplexMatrix>, Vec<ComplexMatrix>, f64)>> {
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut total = 0.0;
    for w in &f.coeffs {
        let d = w.rows();
        if w.max_abs() == 0.0 {
            left.push(ComplexMatrix::zeros(d, d));
            right.push(ComplexMatrix::zeros(d, d));
            continue;
        }
        let sv = w.svd()?;
        let s_diag = ComplexMatrix::from_fn(d, d, |i, j| {
            if i == j {
                cr(sv.singular_values[i])
            } else {
                ZERO
            }
        });
        left.push(sv.u.mul(&s_diag).mul(&sv.u.adjoint()));
        right.push(sv.vt.adjoint().mul(&s_diag).mul(&sv.vt));
        total += sv.singular_values.iter().sum::<f64>();
    }
    if total < 1e-12 {
        return Ok(None);
    }
    Ok(Some((left, right, total)))
}

fn accumulate(acc: &mut [ComplexMatrix], add: &[ComplexMatrix], weight: f64) {
    for (a, b) in acc.iter_mut().zip(add) {
        *a = a.add(&b.scale(cr(weight)));
    }
}

fn zeros_like(alg: &FdAlgebra) -> Vec<ComplexMatrix> {
    alg.block_dims().iter().map(|&d| ComplexMatrix::zeros(d, d)).collect()
}

/// Witness candidate built from the singular structure of the coefficient
/// matrix: each singular triple is a product of one functional per side, and
/// a functional f = Tr(W .) with W = U S V* obeys both
/// |f(a)| <= t sqrt(tau(a*a)) for tau = U S U* / t and
/// |f(a)| <= t sqrt(tau'(aa*)) for tau' = V S V* / t, with t the trace norm.
/// Mixing those supports over the triples is exact for rank one and a strong
/// start otherwise.
fn svd_init(form: &BilinearForm) -> Result<Option<WitnessStates>> {
    let sv = form.coeffs.svd()?;
    let smax = sv.singular_values.first().copied().unwrap_or(0.0);
    if smax < 1e-12 {
        return Ok(None);
    }
    let total: f64 = sv.singular_values.iter().sum();
    let mut kap = zeros_like(&form.alg_a);
    let mut lam = zeros_like(&form.alg_a);
    let mut mu = zeros_like(&form.alg_b);
    let mut nu = zeros_like(&form.alg_b);
    for (k, &s) in sv.singular_values.iter().enumerate() {
        if s < 1e-12 * smax {
            continue;
        }
        let weight = s / total;
        let fa = LinearFunctional::from_coordinates(&form.alg_a, &sv.u.col_slice(k))?;
        if let Some((l, r, t)) = functional_support(&fa)? {
            accumulate(&mut kap, &l, weight / t);
            accumulate(&mut lam, &r, weight / t);
        }
        let row: Vec<Complex64> = (0..form.alg_b.dim()).map(|q| sv.vt[(k, q)]).collect();
        let fb = LinearFunctional::from_coordinates(&form.alg_b, &row)?;
        if let Some((l, r, t)) = functional_support(&fb)? {
            accumulate(&mut mu, &l, weight / t);
            accumulate(&mut nu, &r, weight / t);
        }
    }
    Ok(Some(WitnessStates {
        kappa: State::new(form.alg_a.clone(), kap)?,
        lambda: State::new(form.alg_a.clone(), lam)?,
        mu: State::new(form.alg_b.clone(), mu)?,
        nu: State::new(form.alg_b.clone(), nu)?,
    }))
}

/// Witness candidate concentrated on the supports of a norm-attaining pair.
fn maximizer_init(x: &AlgElement, y: &AlgElement) -> Result<Option<WitnessStates>> {
    let density = |g: AlgElement| -> Result<Option<State>> {
        let total: f64 = g.blocks.iter().map(|m| m.trace().re).sum();
        if total < 1e-12 {
            return Ok(None);
        }
        Ok(Some(State::new(
            g.algebra.clone(),
            g.blocks.iter().map(|m| m.scale(cr(1.0 / total))).collect(),
        )?))
    };
    let kappa = density(x.gram())?;
    let lambda = density(x.mul(&x.adjoint())?)?;
    let mu = density(y.gram())?;
    let nu = density(y.mul(&y.adjoint())?)?;
    match (kappa, lambda, mu, nu) {
        (Some(kappa), Some(lambda), Some(mu), Some(nu)) => {
            Ok(Some(WitnessStates { lambda, kappa, mu, nu }))
        }
        _ => Ok(None),
    }
}

fn blend(w: WitnessStates) -> WitnessStates {
    // Keep every density comfortably full rank: the mixed share both feeds
    // the log-scale updates and adds slack at pairs the candidate already
    // covers tightly.
    let alg_a = w.kappa.algebra().clone();
    let alg_b = w.mu.algebra().clone();
    let ia = State::maximally_mixed(&alg_a);
    let ib = State::maximally_mixed(&alg_b);
    WitnessStates {
        lambda: w.lambda.mix(&ia, 0.1),
        kappa: w.kappa.mix(&ia, 0.1),
        mu: w.mu.mix(&ib, 0.1),
        nu: w.nu.mix(&ib, 0.1),
    }
}

/// Refine one candidate: find a violating pair, push the four densities
/// toward its supports, repeat. A candidate that survives a strong
/// confirmation search is returned immediately; otherwise the best state of
/// the run (smallest found violation) is kept.
fn mw_refine_bilinear(
    form: &BilinearForm,
    start: WitnessStates,
    c_level: f64,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, WitnessStates)> {
    let mut w = start;
    let mut best: Option<(f64, WitnessStates)> = None;
    let mut warm: Option<(AlgElement, AlgElement)> = None;
    for k in 0..iters.max(1) {
        let ga = witness_gram_left(&w.kappa, &w.lambda);
        let gb = witness_gram_right(&w.mu, &w.nu);
        let extra = usize::from(k % 8 == 0);
        let (mut g, mut a, mut b) =
            worst_pair(form, &ga, &gb, c_level, warm.take(), extra, 150, rng)?;
        if g <= 0.0 {
            let (gc, ac, bc) = worst_pair(form, &ga, &gb, c_level, None, 4, 350, rng)?;
            if gc <= 0.0 {
                return Ok((gc, w));
            }
            (g, a, b) = (gc, ac, bc);
        }
        if best.as_ref().map_or(true, |(bg, _)| g < *bg) {
            best = Some((g, w.clone()));
        }
        warm = Some((a.clone(), b.clone()));
        w = mw_step_bilinear(&w, &a, &b)?;
    }
    Ok(best.expect("loop ran at least once"))
}

/// Search for a bilinear witness at the norm of the form (estimated
/// internally, with a hair of slack). Candidates from the coefficient
/// singular structure, the norm maximizer, and the uniform tuple are refined
/// in turn by multiplicative weights; the first one whose violations vanish
/// wins, otherwise the best tuple seen is returned. Failure is not an error:
/// the caller sees it through a subsequent [`check_witness`].
pub fn find_witness_bilinear(form: &BilinearForm, iters: usize, seed: u64) -> Result<WitnessStates> {
    if form.is_zero() {
        return Ok(WitnessStates::uniform(&form.alg_a, &form.alg_b));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let est = form_norm(form, seed.wrapping_add(0xF0), 6)?;
    let c_level = est.value * (1.0 + SEARCH_SLACK);
    let mut candidates = Vec::new();
    if let Some(w0) = svd_init(form)? {
        candidates.push(blend(w0));
    }
    if let Some(y) = &est.maximizer_y {
        if let Some(w0) = maximizer_init(&est.maximizer_x, y)? {
            candidates.push(blend(w0));
        }
    }
    candidates.push(WitnessStates::uniform(&form.alg_a, &form.alg_b));
    let mut best: Option<(f64, WitnessStates)> = None;
    for cand in candidates {
        let (g, w) = mw_refine_bilinear(form, cand, c_level, iters, &mut rng)?;
        let better = best.as_ref().map_or(true, |(bg, _)| g < *bg);
        if better {
            best = Some((g, w));
        }
        if best.as_ref().is_some_and(|(bg, _)| *bg <= 0.0) {
            break;
        }
    }
    Ok(best.expect("at least the uniform candidate ran").1)
}

fn mw_refine_little(
    map: &HilbertMap,
    start: LittleWitness,
    c_level: f64,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, LittleWitness)> {
    let mut w = start;
    let mut best: Option<(f64, LittleWitness)> = None;
    let mut warm: Option<AlgElement> = None;
    for k in 0..iters.max(1) {
        let kq = witness_gram_right(&w.psi, &w.phi);
        let extra = usize::from(k % 8 == 0);
        let (mut g, mut a) = worst_single(map, &kq, c_level, warm.take(), extra, 150, rng)?;
        if g <= 0.0 {
            let (gc, ac) = worst_single(map, &kq, c_level, None, 4, 350, rng)?;
            if gc <= 0.0 {
                return Ok((gc, w));
            }
            (g, a) = (gc, ac);
        }
        if best.as_ref().map_or(true, |(bg, _)| g < *bg) {
            best = Some((g, w.clone()));
        }
        warm = Some(a.clone());
        w = LittleWitness {
            psi: density_update(&w.psi, &a.gram())?,
            phi: density_update(&w.phi, &a.mul(&a.adjoint())?)?,
        };
    }
    Ok(best.expect("loop ran at least once"))
}

/// One-sided witness search; see [`find_witness_bilinear`].
pub fn find_witness_little(map: &HilbertMap, iters: usize, seed: u64) -> Result<LittleWitness> {
    if map.matrix.max_abs() == 0.0 {
        return Ok(LittleWitness::uniform(&map.algebra));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let est = hilbertmap_norm(map, seed.wrapping_add(0xF0), 6)?;
    let c_level = est.value * (1.0 + SEARCH_SLACK);
    let mut candidates = Vec::new();
    let x = &est.maximizer_x;
    let t_left: f64 = x.gram().blocks.iter().map(|m| m.trace().re).sum();
    if t_left > 1e-12 {
        let scale = cr(1.0 / t_left);
        let psi = State::new(
            map.algebra.clone(),
            x.gram().blocks.iter().map(|m| m.scale(scale)).collect(),
        )?;
        let phi = State::new(
            map.algebra.clone(),
            x.mul(&x.adjoint())?.blocks.iter().map(|m| m.scale(scale)).collect(),
        )?;
        let mixed = State::maximally_mixed(&map.algebra);
        candidates.push(LittleWitness { psi: psi.mix(&mixed, 0.1), phi: phi.mix(&mixed, 0.1) });
    }
    candidates.push(LittleWitness::uniform(&map.algebra));
    let mut best: Option<(f64, LittleWitness)> = None;
    for cand in candidates {
        let (g, w) = mw_refine_little(map, cand, c_level, iters, &mut rng)?;
        if best.as_ref().map_or(true, |(bg, _)| g < *bg) {
            best = Some((g, w));
        }
        if best.as_ref().is_some_and(|(bg, _)| *bg <= 0.0) {
            break;
        }
    }
    Ok(best.expect("at least the uniform candidate ran").1)
}

// ---------------------------------------------------------------------------
// factorizations

fn frame_columns(
    sigma: &JordanRep,
    gamma: &[Complex64],
    alg: &FdAlgebra,
    adjoint_units: bool,
) -> Result<ComplexMatrix> {
    let dim = alg.dim();
    let space = sigma.space();
    let mut cols = Vec::with_capacity(dim);
    for p in 0..dim {
        let idx = if adjoint_units { alg.adjoint_index(p) } else { p };
        let img = sigma.image(&AlgElement::basis_at(alg, idx))?;
        cols.push(img.mat_vec(gamma));
    }
    Ok(ComplexMatrix::from_fn(space, dim, |i, p| cols[p][i]))
}

fn concat(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.iter().chain(b).copied().collect()
}

fn zero_bilinear_rep(alg_a: &FdAlgebra, alg_b: &FdAlgebra) -> Result<JsRep> {
    let ra = JordanRep::defining(alg_a);
    let rb = JordanRep::defining(alg_b);
    let (sa, sb) = (ra.space(), rb.space());
    JsRep::new(
        vec![ComplexMatrix::zeros(1, sa), ComplexMatrix::zeros(sa, sb), ComplexMatrix::zeros(sb, 1)],
        vec![ra, rb],
    )
}

/// Build the sandwich representation certified by a bilinear witness. The GNS
/// spaces of lambda and kappa carry the left side (left action of lambda next
/// to right action of kappa), mu and nu the right side, and the middle
/// operator is the minimal-norm solution of
///
/// ```text
/// < T u_q, r_p > = B(e_p, e_q),   r_p = sigma_A(e_p*) gamma_A,
///                                 u_q = sigma_B(e_q) gamma_B,
/// ```
///
/// where gamma is the concatenated pair of cyclic vectors on each side. The
/// frames satisfy R* R = G_A and U* U = G_B, so a valid witness forces
/// ||T|| <= norm and the assembled bound is at most 2 norm (the end vectors
/// have length sqrt(2) each).
pub fn factorize_bilinear(form: &BilinearForm, w: &WitnessStates, norm_b: f64) -> Result<JsRep> {
    w.check_algebras(&form.alg_a, &form.alg_b)?;
    if form.is_zero() {
        return zero_bilinear_rep(&form.alg_a, &form.alg_b);
    }
    let g_lambda = gns_construct(&w.lambda)?;
    let g_kappa = gns_construct(&w.kappa)?;
    let g_mu = gns_construct(&w.mu)?;
    let g_nu = gns_construct(&w.nu)?;
    let sigma_a =
        JordanRep::new(form.alg_a.clone(), Some(g_lambda.pi.clone()), Some(g_kappa.rho.clone()))?;
    let sigma_b =
        JordanRep::new(form.alg_b.clone(), Some(g_mu.pi.clone()), Some(g_nu.rho.clone()))?;
    let gamma_a = concat(&g_lambda.xi, &g_kappa.xi);
    let gamma_b = concat(&g_mu.xi, &g_nu.xi);
    let r = frame_columns(&sigma_a, &gamma_a, &form.alg_a, true)?;
    let u = frame_columns(&sigma_b, &gamma_b, &form.alg_b, false)?;
    let t = r.pinv(INTERP_CUT)?.adjoint().mul(&form.coeffs).mul(&u.pinv(INTERP_CUT)?);
    let residual = r.adjoint().mul(&t).mul(&u).sub(&form.coeffs).max_abs();
    if residual > REPRO_TOL {
        return Err(Error::InconsistentSystem(residual));
    }
    let t_norm = t.op_norm();
    let limit = norm_b * (1.0 + NORM_SLACK);
    if t_norm > limit {
        return Err(Error::NormExcess { got: t_norm, limit });
    }
    let row = ComplexMatrix::from_fn(1, gamma_a.len(), |_, j| gamma_a[j].conj());
    let col = ComplexMatrix::column(&gamma_b);
    JsRep::new(vec![row, t, col], vec![sigma_a, sigma_b])
}

/// One-sided counterpart: S interpolates F through the frame of the combined
/// GNS space of psi (left action) and phi (right action), so the returned
/// representation is (S, sigma, gamma) with bound sqrt(2) ||S||.
pub fn factorize_little(map: &HilbertMap, w: &LittleWitness, norm_f: f64) -> Result<JsRep> {
    if w.psi.algebra() != &map.algebra || w.phi.algebra() != &map.algebra {
        return Err(Error::AlgebraMismatch);
    }
    if map.matrix.max_abs() == 0.0 {
        let rep = JordanRep::defining(&map.algebra);
        let s = rep.space();
        return JsRep::new(
            vec![ComplexMatrix::zeros(map.target_dim(), s), ComplexMatrix::zeros(s, 1)],
            vec![rep],
        );
    }
    let g_psi = gns_construct(&w.psi)?;
    let g_phi = gns_construct(&w.phi)?;
    let sigma = JordanRep::new(map.algebra.clone(), Some(g_psi.pi.clone()), Some(g_phi.rho.clone()))?;
    let gamma = concat(&g_psi.xi, &g_phi.xi);
    let v = frame_columns(&sigma, &gamma, &map.algebra, false)?;
    let s = map.matrix.mul(&v.pinv(INTERP_CUT)?);
    let residual = s.mul(&v).sub(&map.matrix).max_abs();
    if residual > REPRO_TOL {
        return Err(Error::InconsistentSystem(residual));
    }
    let s_norm = s.op_norm();
    let limit = norm_f * (1.0 + NORM_SLACK);
    if s_norm > limit {
        return Err(Error::NormExcess { got: s_norm, limit });
    }
    JsRep::new(vec![s, ComplexMatrix::column(&gamma)], vec![sigma])
}

/// The corner form B(x, y) = (yx)_11 on M_d written as a sandwich through
/// two copies of the transpose anti-representation: picking the (1,1) entry
/// of x^T y^T. All three operators have norm one, so the bound is exactly 1,
/// while the completely bounded size of the same form grows with the level.
pub fn transpose_factorization_example(d: usize) -> Result<JsRep> {
    let alg = FdAlgebra::full(d);
    let rep = JordanRep::transpose(&alg);
    let mut first_row = ComplexMatrix::zeros(1, d);
    first_row[(0, 0)] = ONE;
    let mut first_col = ComplexMatrix::zeros(d, 1);
    first_col[(0, 0)] = ONE;
    JsRep::new(
        vec![first_row, ComplexMatrix::identity(d), first_col],
        vec![rep.clone(), rep],
    )
}

/// Split a factorization from [`factorize_bilinear`] into the four summands
/// that keep exactly one block of the middle operator: left-rep with
/// right-rep, left-anti with right-anti, and the two mixed pieces, in that
/// order. Their evaluations sum to the original.
pub fn split_four(j: &JsRep) -> Result<[JsRep; 4]> {
    if j.arity() != 2 {
        return Err(Error::InvalidInput("four-way split needs a bilinear sandwich".into()));
    }
    let (kl, kk) = (j.reps[0].rep_space(), j.reps[0].anti_space());
    let (km, kn) = (j.reps[1].rep_space(), j.reps[1].anti_space());
    if kl == 0 || kk == 0 || km == 0 || kn == 0 {
        return Err(Error::InvalidInput(
            "four-way split needs both Jordan summands present on each side".into(),
        ));
    }
    let t = &j.operators[1];
    let piece = |r0: usize, c0: usize, nr: usize, nc: usize| -> Result<JsRep> {
        let mut masked = ComplexMatrix::zeros(t.rows(), t.cols());
        masked.set_block(r0, c0, &t.block(r0, c0, nr, nc));
        JsRep::new(
            vec![j.operators[0].clone(), masked, j.operators[2].clone()],
            j.reps.clone(),
        )
    };
    Ok([
        piece(0, 0, kl, km)?,
        piece(kl, km, kk, kn)?,
        piece(0, km, kl, kn)?,
        piece(kl, 0, kk, km)?,
    ])
}

// ---------------------------------------------------------------------------
// ratio scan

/// Instance generator settings for [`ratio_scan`]. Shapes are cycled through
/// in order; every `map_share`-th instance (when nonzero) is a map instance
/// instead of a form instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanConfig {
    pub shapes: Vec<Vec<usize>>,
    pub max_rank: usize,
    pub iters: usize,
    pub restarts: usize,
    pub map_share: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            shapes: vec![vec![1, 1, 1], vec![2], vec![1, 1, 1, 1], vec![3], vec![1, 2], vec![2, 2]],
            max_rank: 2,
            iters: 300,
            restarts: 3,
            map_share: 5,
        }
    }
}

/// One scanned instance: the best found plain norm, the bound of the
/// constructed representation when the witness search succeeded, and their
/// ratio. `converged` is the failure flag demanded of honest reporting;
/// failed instances keep their violation for post-mortems.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RatioReport {
    pub instance: String,
    pub norm_lower: f64,
    pub jordan_upper: Option<f64>,
    pub ratio: Option<f64>,
    pub converged: bool,
    pub violation: f64,
}

/// Sample `count` random instances and report norm against constructed
/// bound for each. Deterministic in (config, count, seed); failures are
/// reported, never dropped or retried.
pub fn ratio_scan(config: &ScanConfig, count: usize, seed: u64) -> Result<Vec<RatioReport>> {
    let mut out = Vec::with_capacity(count);
    for idx in 0..count {
        let inst_seed = seed ^ (idx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        let shape = &config.shapes[idx % config.shapes.len().max(1)];
        let is_map = config.map_share != 0 && (idx + 1) % config.map_share == 0;
        let report = if is_map {
            scan_map_instance(idx, shape, config, inst_seed)?
        } else {
            scan_form_instance(idx, shape, config, inst_seed)?
        };
        out.push(report);
    }
    Ok(out)
}

fn scan_form_instance(
    idx: usize,
    shape: &[usize],
    config: &ScanConfig,
    seed: u64,
) -> Result<RatioReport> {
    let alg = FdAlgebra::new(shape.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = 1 + rng.gen_range(0..config.max_rank.max(1));
    let form = random_low_rank_form(&alg, &alg, rank, &mut rng);
    let instance = format!("form blocks={shape:?} rank={rank} idx={idx}");
    let est = form_norm(&form, seed.wrapping_add(1), config.restarts.max(2))?;
    if est.value < 1e-12 {
        return Ok(RatioReport {
            instance,
            norm_lower: est.value,
            jordan_upper: None,
            ratio: None,
            converged: false,
            violation: 0.0,
        });
    }
    let w = find_witness_bilinear(&form, config.iters, seed.wrapping_add(2))?;
    let report = check_witness(&form, &w, est.value, config.restarts, seed.wrapping_add(3))?;
    let mut converged = report.pass();
    let mut jordan_upper = None;
    let mut ratio = None;
    if converged {
        match factorize_bilinear(&form, &w, est.value) {
            Ok(rep) => {
                let bound = rep.bound();
                ratio = Some(bound / est.value);
                jordan_upper = Some(bound);
            }
            Err(_) => converged = false,
        }
    }
    Ok(RatioReport {
        instance,
        norm_lower: est.value,
        jordan_upper,
        ratio,
        converged,
        violation: report.max_violation,
    })
}

fn scan_map_instance(
    idx: usize,
    shape: &[usize],
    config: &ScanConfig,
    seed: u64,
) -> Result<RatioReport> {
    let alg = FdAlgebra::new(shape.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = 2;
    let matrix = ComplexMatrix::from_fn(target, alg.dim(), |_, _| {
        crate::matrix::c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let map = HilbertMap { algebra: alg, matrix };
    let instance = format!("map blocks={shape:?} target={target} idx={idx}");
    let est = hilbertmap_norm(&map, seed.wrapping_add(1), config.restarts.max(2))?;
    if est.value < 1e-12 {
        return Ok(RatioReport {
            instance,
            norm_lower: est.value,
            jordan_upper: None,
            ratio: None,
            converged: false,
            violation: 0.0,
        });
    }
    let w = find_witness_little(&map, config.iters, seed.wrapping_add(2))?;
    let report = check_witness_little(&map, &w, est.value, config.restarts, seed.wrapping_add(3))?;
    let mut converged = report.pass();
    let mut jordan_upper = None;
    let mut ratio = None;
    if converged {
        match factorize_little(&map, &w, est.value) {
            Ok(rep) => {
                let bound = rep.bound();
                ratio = Some(bound / est.value);
                jordan_upper = Some(bound);
            }
            Err(_) => converged = false,
        }
    }
    Ok(RatioReport {
        instance,
        norm_lower: est.value,
        jordan_upper,
        ratio,
        converged,
        violation: report.max_violation,
    })
}

/// Flat CSV rendering of a scan, one line per instance; empty cells for the
/// fields a failed instance does not have.
pub fn ratio_scan_csv(reports: &[RatioReport]) -> String {
    let mut out = String::from("instance,converged,norm_lower,jordan_upper,ratio,violation\n");
    for r in reports {
        let ju = r.jordan_upper.map_or(String::new(), |v| format!("{v:.12e}"));
        let ra = r.ratio.map_or(String::new(), |v| format!("{v:.12e}"));
        out.push_str(&format!(
            "\"{}\",{},{:.12e},{},{},{:.12e}\n",
            r.instance, r.converged, r.norm_lower, ju, ra, r.violation
        ));
    }
    out
}
