//! Cyclic representation data built from a state.
//!
//! From the Gram matrix K[p][q] = phi(e_p* e_q) of the unit basis, the
//! algebra is embedded into C^k (k = rank of K, kernel cut at 1e-12 relative)
//! by E = diag(sqrt(lambda)) Q*, which turns the left regular action into a
//! *-homomorphism pi and the unit into a cyclic vector xi with
//! phi(a) = <pi(a) xi, xi>. A deterministic unitary O (orthonormalization of
//! xi followed by the standard basis) fixes an antiunitary J v = O conj(O* v),
//! and rho(e) = J pi(e*) J is the matching right action, a
//! *-anti-homomorphism regardless of the choice of O.
//!
//! The kernel quotient is exact: the null space of K is a left ideal, E kills
//! it, and E(1-P) = 0 makes E L_e P L_f E+ equal E L_e L_f E+ entry for
//! entry, so pi multiplies correctly even when the state has a kernel.

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{AlgElement, FdAlgebra, State};
use crate::error::Result;
use crate::jsrep::{RepValidation, StarRepTable};
use crate::matrix::{cr, inner, vec_norm, ComplexMatrix, ONE};

/// Relative eigenvalue cutoff separating the Gram kernel from its support.
pub const GNS_KERNEL_CUT: f64 = 1e-12;

const VERIFY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct GnsData {
    pub algebra: FdAlgebra,
    pub state: State,
    /// Dimension of the representation space (rank of the Gram matrix).
    pub space_dim: usize,
    pub gram: ComplexMatrix,
    /// Embedding coordinates: column p is the image of the p-th unit.
    pub embed: ComplexMatrix,
    pub embed_pinv: ComplexMatrix,
    /// Left action, a homomorphism table.
    pub pi: StarRepTable,
    /// Right action, an anti-homomorphism table.
    pub rho: StarRepTable,
    /// Image of the algebra unit; cyclic for pi and rho.
    pub xi: Vec<Complex64>,
    /// Unitary defining the conjugation J v = O conj(O* v); fixes xi.
    pub conjugation: ComplexMatrix,
}

/// Gram matrix of the unit basis under the state. The product of two units
/// is again a unit or zero, so every entry is a single density entry:
/// K[(blk,i,j)][(blk,k,l)] = [i = k] phi(e_jl).
pub fn state_gram(state: &State) -> ComplexMatrix {
    let alg = state.algebra();
    let dim = alg.dim();
    let mut k = ComplexMatrix::zeros(dim, dim);
    for blk in 0..alg.num_blocks() {
        let d = alg.block_dims()[blk];
        let rho = &state.densities()[blk];
        for i in 0..d {
            for j in 0..d {
                let p = alg.unit_index(blk, i, j);
                for l in 0..d {
                    let q = alg.unit_index(blk, i, l);
                    // phi(e_jl) = rho[(l, j)]
                    k[(p, q)] = rho[(l, j)];
                }
            }
        }
    }
    k
}

/// Coordinate matrix of left multiplication by the p-th unit.
fn left_mult(alg: &FdAlgebra, p: usize) -> ComplexMatrix {
    let dim = alg.dim();
    let (blk, i, j) = alg.unit_at(p);
    let d = alg.block_dims()[blk];
    let mut m = ComplexMatrix::zeros(dim, dim);
    for l in 0..d {
        m[(alg.unit_index(blk, i, l), alg.unit_index(blk, j, l))] = ONE;
    }
    m
}

pub fn gns_construct(state: &State) -> Result<GnsData> {
    let alg = state.algebra().clone();
    let dim = alg.dim();
    let gram = state_gram(state);
    let (vals, q) = gram.herm_eigen()?;
    let top = vals.first().copied().unwrap_or(0.0);
    let kept = vals.iter().take_while(|&&l| l > GNS_KERNEL_CUT * top && l > 0.0).count();
    let space = kept;

    // E = diag(sqrt(l)) Q_kept*, E+ = Q_kept diag(1/sqrt(l))
    let mut embed = ComplexMatrix::zeros(space, dim);
    let mut embed_pinv = ComplexMatrix::zeros(dim, space);
    for r in 0..space {
        let s = vals[r].sqrt();
        for pcol in 0..dim {
            embed[(r, pcol)] = q[(pcol, r)].conj() * cr(s);
            embed_pinv[(pcol, r)] = q[(pcol, r)] * cr(1.0 / s);
        }
    }

    let pi_images: Vec<ComplexMatrix> =
        (0..dim).map(|p| embed.mul(&left_mult(&alg, p)).mul(&embed_pinv)).collect();
    let pi = StarRepTable::new(alg.clone(), space, pi_images, false)?;

    let xi = embed.mat_vec(&AlgElement::identity(&alg).vec());

    // orthonormalize [xi, e_0, e_1, ..] to a full unitary with xi first
    let conjugation = complete_orthonormal(&xi, space);

    let o_star_t = conjugation.adjoint();
    let rho_images: Vec<ComplexMatrix> = (0..dim)
        .map(|p| {
            let inner_op = o_star_t.mul(&pi.images[alg.adjoint_index(p)]).mul(&conjugation);
            conjugation.mul(&inner_op.conj()).mul(&o_star_t)
        })
        .collect();
    let rho = StarRepTable::new(alg.clone(), space, rho_images, true)?;

    Ok(GnsData {
        algebra: alg,
        state: state.clone(),
        space_dim: space,
        gram,
        embed,
        embed_pinv,
        pi,
        rho,
        xi,
        conjugation,
    })
}

/// Unitary whose first column is `first` normalized, completed by running
/// Gram-Schmidt over the standard basis in index order.
fn complete_orthonormal(first: &[Complex64], dim: usize) -> ComplexMatrix {
    let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(dim);
    let n0 = vec_norm(first);
    if n0 > 1e-12 {
        cols.push(first.iter().map(|z| z / cr(n0)).collect());
    }
    let mut e = 0;
    while cols.len() < dim && e < dim {
        let mut v: Vec<Complex64> = vec![crate::matrix::ZERO; dim];
        v[e] = ONE;
        e += 1;
        for c in &cols {
            let coef = inner(&v, c);
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= coef * ci;
            }
        }
        // second orthogonalization pass keeps the columns unitary to
        // working precision
        for c in &cols {
            let coef = inner(&v, c);
            for (vi, ci) in v.iter_mut().zip(c) {
                *vi -= coef * ci;
            }
        }
        let n = vec_norm(&v);
        if n > 1e-8 {
            cols.push(v.iter().map(|z| z / cr(n)).collect());
        }
    }
    assert_eq!(cols.len(), dim, "standard basis must complete the frame");
    ComplexMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

impl GnsData {
    /// J v = O conj(O* v).
    pub fn conjugate_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let w = self.conjugation.adjoint_vec(v);
        let wc: Vec<Complex64> = w.iter().map(|z| z.conj()).collect();
        self.conjugation.mat_vec(&wc)
    }

    pub fn pi_image(&self, a: &AlgElement) -> Result<ComplexMatrix> {
        self.pi.image(a)
    }

    pub fn rho_image(&self, a: &AlgElement) -> Result<ComplexMatrix> {
        self.rho.image(a)
    }
}

/// Residual report for a constructed representation.
#[derive(Clone, Debug, Serialize)]
pub struct GnsCheck {
    /// max-abs of E* E - K; the embedding must reproduce the Gram pairing.
    pub gram_residual: f64,
    pub pi_check: RepValidation,
    pub rho_check: RepValidation,
    /// | ||xi|| - 1 |.
    pub cyclic_norm_residual: f64,
    /// worst |phi(a* a) - ||pi(a) xi||^2| over fixed random elements.
    pub left_identity_residual: f64,
    /// worst |phi(a a*) - ||rho(a) xi||^2| over the same elements.
    pub right_identity_residual: f64,
    /// worst |<J u, v> - <J v, u>| over fixed random vector pairs.
    pub conjugation_symmetry_residual: f64,
    pub pass: bool,
}

pub fn verify_gns(g: &GnsData) -> Result<GnsCheck> {
    use rand::{Rng, SeedableRng};
    let gram_residual = g.embed.adjoint().mul(&g.embed).sub(&g.gram).max_abs();
    let pi_check = g.pi.validate();
    let rho_check = g.rho.validate();
    let cyclic_norm_residual = (vec_norm(&g.xi) - 1.0).abs();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x615);
    let mut left = 0.0f64;
    let mut right = 0.0f64;
    for _ in 0..6 {
        let a = AlgElement::random(&g.algebra, &mut rng);
        let want_l = g.state.apply(&a.gram())?.re;
        let got_l = vec_norm(&g.pi_image(&a)?.mat_vec(&g.xi)).powi(2);
        left = left.max((want_l - got_l).abs() / want_l.max(1.0));
        let want_r = g.state.apply(&a.mul(&a.adjoint())?)?.re;
        let got_r = vec_norm(&g.rho_image(&a)?.mat_vec(&g.xi)).powi(2);
        right = right.max((want_r - got_r).abs() / want_r.max(1.0));
    }

    let mut conj_sym = 0.0f64;
    for _ in 0..6 {
        let u: Vec<Complex64> = (0..g.space_dim)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let v: Vec<Complex64> = (0..g.space_dim)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let lhs = inner(&g.conjugate_vec(&u), &v);
        let rhs = inner(&g.conjugate_vec(&v), &u);
        conj_sym = conj_sym.max((lhs - rhs).norm());
    }

    let pass = gram_residual < VERIFY_TOL
        && pi_check.pass
        && rho_check.pass
        && cyclic_norm_residual < VERIFY_TOL
        && left < VERIFY_TOL
        && right < VERIFY_TOL
        && conj_sym < VERIFY_TOL;
    Ok(GnsCheck {
        gram_residual,
        pi_check,
        rho_check,
        cyclic_norm_residual,
        left_identity_residual: left,
        right_identity_residual: right,
        conjugation_symmetry_residual: conj_sym,
        pass,
    })
}
