//! Acceptance suite: eight numbered criteria, each printing one pass/fail
//! line (visible under --nocapture, and always on failure). Tolerances and
//! runtime limits are pinned here, not read from anywhere else.

use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use jsnorm::algebra::{AlgElement, FdAlgebra, State};
use jsnorm::forms::{
    amplified_eval, block_matrix_op_norm, column_pick_map, corner_form, corner_witness_pair,
    form_norm, hilbertmap_norm, normalized_trace_form, random_low_rank_form, row_extraction_map,
    BilinearForm, HilbertMap,
};
use jsnorm::gns::gns_construct;
use jsnorm::grothendieck::{
    check_witness, check_witness_little, factorize_bilinear, factorize_little,
    find_witness_bilinear, ratio_scan, transpose_factorization_example, LittleWitness, ScanConfig,
};
use jsnorm::jsrep::{JordanRep, JsRep};
use jsnorm::matrix::ComplexMatrix;
use jsnorm::positive::{
    build_fb, check_norm_square, compress_positive, square_fb_rep, symmetrize, trace_form_rep,
};

fn verdict(criterion: usize, pass: bool, elapsed: f64, detail: &str) {
    let word = if pass { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {word} ({detail}, {elapsed:.2}s)");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn within(criterion: usize, start: Instant, limit_s: f64) -> f64 {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(elapsed < limit_s, "criterion {criterion} overran: {elapsed:.2}s > {limit_s}s");
    elapsed
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

fn basis_residual_bilinear(rep: &JsRep, form: &BilinearForm) -> f64 {
    let mut worst = 0.0f64;
    for p in 0..form.alg_a.dim() {
        for q in 0..form.alg_b.dim() {
            let x = AlgElement::basis_at(&form.alg_a, p);
            let y = AlgElement::basis_at(&form.alg_b, q);
            let got = rep.evaluate_scalar(&[x.clone(), y.clone()]).unwrap();
            let want = form.eval(&x, &y).unwrap();
            worst = worst.max((got - want).norm());
        }
    }
    worst
}

fn basis_residual_little(rep: &JsRep, map: &HilbertMap) -> f64 {
    let mut worst = 0.0f64;
    for p in 0..map.algebra.dim() {
        let a = AlgElement::basis_at(&map.algebra, p);
        let got = rep.evaluate(&[a.clone()]).unwrap();
        let want = map.apply(&a).unwrap();
        for (i, w) in want.iter().enumerate() {
            worst = worst.max((got[(i, 0)] - w).norm());
        }
    }
    worst
}

#[test]
fn criterion_1_corner_amplification_grows_linearly() {
    let t0 = Instant::now();
    let mut worst_norm = 0.0f64;
    let mut worst_entry = 0.0f64;
    for n in 1..=16usize {
        let form = corner_form(n);
        let (x, y) = corner_witness_pair(n);
        let xn = block_matrix_op_norm(&x, &form.alg_a).unwrap();
        let yn = block_matrix_op_norm(&y, &form.alg_b).unwrap();
        worst_norm = worst_norm.max((xn - 1.0).abs()).max((yn - 1.0).abs());
        let amp = amplified_eval(&form, &x, &y).unwrap();
        for i in 0..n {
            for j in 0..n {
                let want = if i == 0 && j == 0 {
                    Complex64::new(n as f64, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst_entry = worst_entry.max((amp[(i, j)] - want).norm());
            }
        }
    }
    let pass = worst_norm <= 1e-10 && worst_entry <= 1e-12;
    let elapsed = within(1, t0, 5.0);
    verdict(
        1,
        pass,
        elapsed,
        &format!("n=1..16, unit norm residual {worst_norm:.2e}, entry residual {worst_entry:.2e}"),
    );
}

#[test]
fn criterion_2_transpose_factorization_is_jordan_bounded() {
    let t0 = Instant::now();
    let mut worst_bound = 0.0f64;
    let mut worst_repro = 0.0f64;
    for d in 1..=6usize {
        let rep = transpose_factorization_example(d).unwrap();
        worst_bound = worst_bound.max((rep.bound() - 1.0).abs());
        worst_repro = worst_repro.max(basis_residual_bilinear(&rep, &corner_form(d)));
    }
    let pass = worst_bound <= 1e-12 && worst_repro <= 1e-12;
    let elapsed = within(2, t0, 10.0);
    verdict(
        2,
        pass,
        elapsed,
        &format!("d=1..6, bound residual {worst_bound:.2e}, basis residual {worst_repro:.2e}"),
    );
}

#[test]
fn criterion_3_cyclic_construction_identities() {
    let t0 = Instant::now();
    let algebras = [
        FdAlgebra::full(2),
        FdAlgebra::full(3),
        FdAlgebra::new(vec![2, 3]).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(0x6E5);
    let mut worst_left = 0.0f64;
    let mut worst_right = 0.0f64;
    let mut worst_conj = 0.0f64;
    for alg in &algebras {
        for _ in 0..20 {
            let state = State::random(alg, &mut rng);
            let g = gns_construct(&state).unwrap();
            for _ in 0..100 {
                let a = AlgElement::random(alg, &mut rng);
                let want_l = state.apply(&a.gram()).unwrap().re;
                let got_l = vec_norm(&g.pi_image(&a).unwrap().mat_vec(&g.xi)).powi(2);
                worst_left = worst_left.max((want_l - got_l).abs());
                let want_r = state.apply(&a.mul(&a.adjoint()).unwrap()).unwrap().re;
                let got_r = vec_norm(&g.rho_image(&a).unwrap().mat_vec(&g.xi)).powi(2);
                worst_right = worst_right.max((want_r - got_r).abs());
            }
            for _ in 0..100 {
                let u: Vec<Complex64> = (0..g.space_dim)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let v: Vec<Complex64> = (0..g.space_dim)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let lhs = inner(&g.conjugate_vec(&u), &v);
                let rhs = inner(&g.conjugate_vec(&v), &u);
                worst_conj = worst_conj.max((lhs - rhs).norm());
            }
        }
    }
    let pass = worst_left <= 1e-9 && worst_right <= 1e-9 && worst_conj <= 1e-9;
    let elapsed = within(3, t0, 30.0);
    verdict(
        3,
        pass,
        elapsed,
        &format!(
            "60 states, residuals left {worst_left:.2e} right {worst_right:.2e} conj {worst_conj:.2e}"
        ),
    );
}

fn random_unit_bound_rep(algebras: &[FdAlgebra; 2], rng: &mut ChaCha8Rng) -> JsRep {
    let reps: Vec<JordanRep> = algebras
        .iter()
        .map(|alg| {
            if rng.gen_bool(0.5) {
                JordanRep::defining(alg)
            } else {
                JordanRep::transpose(alg)
            }
        })
        .collect();
    let dims = [1, reps[0].space(), reps[1].space(), 1];
    let mut operators: Vec<ComplexMatrix> = (0..3)
        .map(|j| {
            ComplexMatrix::from_fn(dims[j], dims[j + 1], |_, _| {
                Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            })
        })
        .collect();
    let j = JsRep::new(operators.clone(), reps.clone()).unwrap();
    let b = j.bound();
    assert!(b > 1e-9, "degenerate random operators");
    operators[0] = operators[0].scale(Complex64::new(1.0 / b, 0.0));
    // balanced scaling: ends carry sqrt(bound), middles norm one
    JsRep::new(operators, reps).unwrap().normalize().unwrap()
}

#[test]
fn criterion_4_direct_sum_adds_values_and_bounds() {
    let t0 = Instant::now();
    let shapes: [Vec<usize>; 6] =
        [vec![2], vec![1, 1], vec![3], vec![1, 2], vec![4], vec![2, 2]];
    let mut rng = ChaCha8Rng::seed_from_u64(0x5D4);
    let mut worst_eval = 0.0f64;
    let mut worst_bound = f64::NEG_INFINITY;
    for k in 0..100usize {
        let alg_a = FdAlgebra::new(shapes[k % shapes.len()].clone()).unwrap();
        let alg_b = FdAlgebra::new(shapes[(k / shapes.len() + k) % shapes.len()].clone()).unwrap();
        let algebras = [alg_a.clone(), alg_b.clone()];
        let first = random_unit_bound_rep(&algebras, &mut rng);
        let second = random_unit_bound_rep(&algebras, &mut rng);
        let sum = first.direct_sum(&second).unwrap();
        for _ in 0..5 {
            let x = AlgElement::random(&alg_a, &mut rng);
            let y = AlgElement::random(&alg_b, &mut rng);
            let args = [x, y];
            let want = first.evaluate_scalar(&args).unwrap() + second.evaluate_scalar(&args).unwrap();
            let got = sum.evaluate_scalar(&args).unwrap();
            worst_eval = worst_eval.max((got - want).norm());
        }
        worst_bound = worst_bound.max(sum.bound() - (first.bound() + second.bound()));
    }
    let pass = worst_eval <= 1e-10 && worst_bound <= 1e-10;
    let elapsed = within(4, t0, 30.0);
    verdict(
        4,
        pass,
        elapsed,
        &format!("100 pairs, eval residual {worst_eval:.2e}, bound excess {worst_bound:.2e}"),
    );
}

#[test]
fn criterion_5_bilinear_factorization_within_twice_the_norm() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xB111);
    let mut suite: Vec<(String, BilinearForm)> = vec![("corner d=2".into(), corner_form(2))];
    for k in 0..20usize {
        let d = if k % 2 == 0 { 2 } else { 3 };
        let alg = FdAlgebra::full(d);
        let rank = 1 + (k / 2) % 2;
        let form = random_low_rank_form(&alg, &alg, rank, &mut rng);
        suite.push((format!("random d={d} rank={rank} idx={k}"), form));
    }
    let mut random_converged = 0usize;
    let mut example_converged = false;
    let mut failures: Vec<String> = Vec::new();
    let mut worst_repro = 0.0f64;
    let mut worst_excess = f64::NEG_INFINITY;
    for (idx, (name, form)) in suite.iter().enumerate() {
        let seed = 0xB111_0000 + idx as u64;
        let est = form_norm(form, seed, 8).unwrap();
        let w = find_witness_bilinear(form, 600, seed).unwrap();
        let check = check_witness(form, &w, est.value, 8, seed + 1).unwrap();
        if check.max_violation > 1e-6 {
            failures.push(format!("{name} (violation {:.2e})", check.max_violation));
            continue;
        }
        if idx == 0 {
            example_converged = true;
        } else {
            random_converged += 1;
        }
        let fac = factorize_bilinear(form, &w, est.value).unwrap();
        worst_repro = worst_repro.max(basis_residual_bilinear(&fac, form));
        worst_excess = worst_excess.max(fac.bound() - 2.0 * est.value * (1.0 + 1e-6));
    }
    for f in &failures {
        println!("criterion 5: witness search failed on {f}");
    }
    let pass = example_converged
        && random_converged * 5 >= 20 * 4
        && worst_repro <= 1e-8
        && worst_excess <= 0.0;
    let elapsed = within(5, t0, 300.0);
    verdict(
        5,
        pass,
        elapsed,
        &format!(
            "example converged {example_converged}, random {random_converged}/20, repro {worst_repro:.2e}, bound excess {worst_excess:.2e}"
        ),
    );
}

#[test]
fn criterion_6_little_factorization_within_sqrt2() {
    let t0 = Instant::now();
    let mut worst_bound = f64::NEG_INFINITY;
    let mut worst_repro = 0.0f64;
    let mut worst_violation = f64::NEG_INFINITY;
    for d in 1..=5usize {
        let alg = FdAlgebra::full(d);
        let row = (
            row_extraction_map(d),
            LittleWitness {
                psi: State::maximally_mixed(&alg),
                phi: State::vector_state(&alg, 0, 0),
            },
        );
        let col = (
            column_pick_map(d),
            LittleWitness {
                psi: State::vector_state(&alg, 0, 0),
                phi: State::maximally_mixed(&alg),
            },
        );
        for (map, w) in [row, col] {
            let est = hilbertmap_norm(&map, 0xF00D + d as u64, 8).unwrap();
            let check = check_witness_little(&map, &w, est.value, 8, 0xF00D).unwrap();
            worst_violation = worst_violation.max(check.max_violation);
            let fac = factorize_little(&map, &w, est.value).unwrap();
            worst_bound = worst_bound.max(fac.bound() - 2f64.sqrt() * (1.0 + 1e-6));
            worst_repro = worst_repro.max(basis_residual_little(&fac, &map));
        }
    }
    let pass = worst_violation <= 1e-6 && worst_bound <= 0.0 && worst_repro <= 1e-8;
    let elapsed = within(6, t0, 60.0);
    verdict(
        6,
        pass,
        elapsed,
        &format!(
            "d=1..5 row and column, bound excess {worst_bound:.2e}, repro {worst_repro:.2e}"
        ),
    );
}

#[test]
fn criterion_7_positive_roundtrip_preserves_the_bound() {
    let t0 = Instant::now();
    let mut worst_gap = 0.0f64;
    let mut worst_growth = f64::NEG_INFINITY;
    let mut worst_repro = 0.0f64;
    for d in 1..=4usize {
        let corner_start = transpose_factorization_example(d).unwrap();
        let trace_start = trace_form_rep(d).unwrap();
        let cases = [(corner_form(d), corner_start), (normalized_trace_form(d), trace_start)];
        for (form, start) in cases {
            let data = build_fb(&form).unwrap();
            let ns = check_norm_square(&form, &data, 16, 0x905 + d as u64).unwrap();
            worst_gap = worst_gap.max(ns.rel_gap);
            let sym = symmetrize(&start).unwrap();
            let (comp, _w) = compress_positive(&sym, &form).unwrap();
            let sq = square_fb_rep(&comp).unwrap();
            worst_growth = worst_growth.max(sq.bound() - start.bound() * (1.0 + 1e-4));
            worst_repro = worst_repro.max(basis_residual_bilinear(&sq, &form));
        }
    }
    let pass = worst_gap <= 1e-5 && worst_growth <= 0.0 && worst_repro <= 1e-8;
    let elapsed = within(7, t0, 120.0);
    verdict(
        7,
        pass,
        elapsed,
        &format!(
            "d=1..4 corner and trace, norm-square gap {worst_gap:.2e}, bound growth {worst_growth:.2e}, repro {worst_repro:.2e}"
        ),
    );
}

#[test]
fn criterion_8_scanned_ratios_stay_in_range() {
    let t0 = Instant::now();
    let config = ScanConfig::default();
    let reports = ratio_scan(&config, 50, 0xC0FFEE).unwrap();
    let mut converged = 0usize;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = f64::NEG_INFINITY;
    let mut in_range = true;
    for r in &reports {
        if let Some(ratio) = r.ratio {
            converged += 1;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            if !(1.0 - 1e-6..=2.0 + 1e-6).contains(&ratio) {
                in_range = false;
                println!("criterion 8: out-of-range ratio {ratio:.6} on {}", r.instance);
            }
        } else {
            println!("criterion 8: unconverged instance {}", r.instance);
        }
    }
    let pass = in_range && converged > 0;
    let elapsed = within(8, t0, 300.0);
    verdict(
        8,
        pass,
        elapsed,
        &format!("{converged}/50 converged, ratios in [{min_ratio:.4}, {max_ratio:.4}]"),
    );
}
