//! Batch front end: every subcommand reads JSON, runs one pipeline from the
//! library, and emits a self-contained JSON report (CSV for scan exports).
//! Exit status: 0 all checks passed, 1 a check failed, 2 malformed input.

mod report;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use jsnorm::algebra::{AlgElement, State};
use jsnorm::forms::{
    amplified_eval, block_matrix_op_norm, corner_form, corner_witness_pair, form_norm,
    hilbertmap_norm, normalized_trace_form, row_extraction_map, BilinearForm, HilbertMap,
};
use jsnorm::gns::{gns_construct, verify_gns};
use jsnorm::grothendieck::{
    check_witness, check_witness_little, factorize_bilinear, factorize_little,
    find_witness_bilinear, find_witness_little, ratio_scan, ratio_scan_csv, split_four,
    transpose_factorization_example, LittleWitness, RatioReport, ScanConfig, WitnessStates,
    NORM_SLACK, WITNESS_TOL,
};
use jsnorm::jsrep::JsRep;
use jsnorm::positive::{
    build_fb, check_norm_square, compress_positive, is_positive, square_fb_rep, symmetrize,
    trace_form_rep, NORM_GAP_TOL,
};

use report::Report;

#[derive(Parser)]
#[command(
    name = "jsnorm",
    version,
    about = "Jordan factorization toolkit for finite-dimensional C*-algebras",
    after_help = "Reports echo their inputs and tolerances; identical seeds give identical \
                  reports apart from the timestamp."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// JSON input path; the expected shape depends on the subcommand
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// RNG seed for every stochastic step
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Restart count for norm ascents and witness checks
    #[arg(long, global = true, default_value_t = 32)]
    restarts: usize,

    /// Override the subcommand's main pass tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Write the report here instead of stdout (.csv for scan exports)
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    /// Count parameter: amplification levels, scan instances, or search iterations
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Matrix size for the built-in example instance when --input is absent
    #[arg(long, global = true)]
    dims: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Estimate the norm of a bilinear form or Hilbert-space map
    #[command(name = "norm")]
    Norm,
    /// Amplify the corner form and watch its completely bounded growth
    #[command(name = "cb-example")]
    CbExample,
    /// Run the cyclic construction for a state and verify its identities
    #[command(name = "gns")]
    Gns,
    /// Validate the representation tables of a sandwich form
    #[command(name = "js-validate")]
    JsValidate,
    /// Evaluate a sandwich form on given elements
    #[command(name = "js-eval")]
    JsEval,
    /// Direct-sum two sandwich forms and check additivity
    #[command(name = "js-sum")]
    JsSum,
    /// Search for witness states certifying the norm inequality
    #[command(name = "witness-find")]
    WitnessFind,
    /// Check a given witness by adversarial ascent
    #[command(name = "witness-check")]
    WitnessCheck,
    /// Factor a Hilbert-space map through a certified witness
    #[command(name = "factorize-little")]
    FactorizeLittle,
    /// Factor a bilinear form through a certified witness
    #[command(name = "factorize-bilinear")]
    FactorizeBilinear,
    /// Split a bilinear factorization into its four summands
    #[command(name = "split4")]
    Split4,
    /// Analyze a positive pairing: factor map and norm-square identity
    #[command(name = "positive")]
    Positive,
    /// Symmetrize, compress, and square back a positive-form representation
    #[command(name = "roundtrip-positive")]
    RoundtripPositive,
    /// Sample random instances and report bound-to-norm ratios
    #[command(name = "ratio-scan")]
    RatioScan,
}

enum CliErr {
    Schema(String),
}

type CliResult<T> = Result<T, CliErr>;

fn main() {
    let cli = Cli::parse();
    let outcome = run(&cli);
    let code = match outcome {
        Ok(rep) => {
            let ok = rep.pass;
            match emit(&cli, &rep) {
                Ok(()) => {
                    if ok {
                        0
                    } else {
                        eprintln!("{}: {} check(s) failed", rep.command, failed_names(&rep));
                        1
                    }
                }
                Err(e) => {
                    eprintln!("cannot write report: {e}");
                    2
                }
            }
        }
        Err(CliErr::Schema(msg)) => {
            eprintln!("input error: {msg}");
            2
        }
    };
    std::process::exit(code);
}

fn failed_names(rep: &Report) -> String {
    rep.checks
        .iter()
        .filter(|c| !c.pass)
        .map(|c| c.name.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

fn emit(cli: &Cli, rep: &Report) -> std::io::Result<()> {
    match &cli.output {
        Some(path) if path.extension().is_some_and(|e| e == "csv") => {
            // scan exports go to the CSV file, the report itself to stdout
            let csv = rep
                .outputs
                .get("csv")
                .and_then(Value::as_str)
                .unwrap_or("instance,converged,norm_lower,jordan_upper,ratio,violation\n")
                .to_string();
            std::fs::write(path, csv)?;
            print!("{}", rep.render());
            Ok(())
        }
        Some(path) => rep.write_to(path),
        None => {
            print!("{}", rep.render());
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> CliResult<Report> {
    match cli.cmd {
        Cmd::Norm => cmd_norm(cli),
        Cmd::CbExample => cmd_cb_example(cli),
        Cmd::Gns => cmd_gns(cli),
        Cmd::JsValidate => cmd_js_validate(cli),
        Cmd::JsEval => cmd_js_eval(cli),
        Cmd::JsSum => cmd_js_sum(cli),
        Cmd::WitnessFind => cmd_witness_find(cli),
        Cmd::WitnessCheck => cmd_witness_check(cli),
        Cmd::FactorizeLittle => cmd_factorize_little(cli),
        Cmd::FactorizeBilinear => cmd_factorize_bilinear(cli),
        Cmd::Split4 => cmd_split4(cli),
        Cmd::Positive => cmd_positive(cli),
        Cmd::RoundtripPositive => cmd_roundtrip_positive(cli),
        Cmd::RatioScan => cmd_ratio_scan(cli),
    }
}

fn load<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliErr::Schema(format!("cannot read {what} from {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliErr::Schema(format!("invalid {what} in {}: {e}", path.display())))
}

fn need_input<'a>(cli: &'a Cli, what: &str) -> CliResult<&'a Path> {
    cli.input
        .as_deref()
        .ok_or_else(|| CliErr::Schema(format!("--input with {what} is required")))
}

fn err_detail(e: &jsnorm::Error) -> Value {
    json!({ "error": e.to_string() })
}

/// Either kind of norm target.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetInput {
    form: Option<BilinearForm>,
    map: Option<HilbertMap>,
}

enum Target {
    Form(BilinearForm),
    Map(HilbertMap),
}

fn load_target(cli: &Cli, what: &str) -> CliResult<Target> {
    let input: TargetInput = load(need_input(cli, what)?, what)?;
    match (input.form, input.map) {
        (Some(f), None) => Ok(Target::Form(f)),
        (None, Some(m)) => Ok(Target::Map(m)),
        _ => Err(CliErr::Schema(format!("{what} needs exactly one of \"form\" or \"map\""))),
    }
}

fn cmd_norm(cli: &Cli) -> CliResult<Report> {
    let mut rep = Report::new("norm");
    rep.echo("seed", &cli.seed);
    rep.echo("restarts", &cli.restarts);
    let est = match load_target(cli, "a norm target")? {
        Target::Form(form) => {
            rep.echo("form", &form);
            form_norm(&form, cli.seed, cli.restarts)
                .map_err(|e| CliErr::Schema(format!("norm estimation rejected the input: {e}")))?
        }
        Target::Map(map) => {
            rep.echo("map", &map);
            hilbertmap_norm(&map, cli.seed, cli.restarts)
                .map_err(|e| CliErr::Schema(format!("norm estimation rejected the input: {e}")))?
        }
    };
    rep.output("norm_estimate", &est.value);
    rep.check(
        "ascent_converged",
        est.converged,
        json!({ "value": est.value, "restarts_used": est.restarts_used }),
    );
    Ok(rep.seal())
}

fn cmd_cb_example(cli: &Cli) -> CliResult<Report> {
    let levels = cli.n.unwrap_or(8);
    if levels == 0 {
        return Err(CliErr::Schema("--n must be at least 1".into()));
    }
    let mut rep = Report::new("cb-example");
    rep.echo("n", &levels);
    let norm_tol = 1e-10;
    let entry_tol = cli.tol.unwrap_or(1e-12);
    rep.tolerance("unit_norm", norm_tol);
    rep.tolerance("entry", entry_tol);
    let mut table = Vec::new();
    for n in 1..=levels {
        let form = corner_form(n);
        let (x, y) = corner_witness_pair(n);
        let run = || -> jsnorm::Result<(f64, f64, f64)> {
            let xn = block_matrix_op_norm(&x, &form.alg_a)?;
            let yn = block_matrix_op_norm(&y, &form.alg_b)?;
            let amp = amplified_eval(&form, &x, &y)?;
            let mut res = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    let want = if i == 0 && j == 0 { Complex64::new(n as f64, 0.0) } else { Complex64::new(0.0, 0.0) };
                    res = res.max((amp[(i, j)] - want).norm());
                }
            }
            Ok((xn, yn, res))
        };
        match run() {
            Ok((xn, yn, res)) => {
                let ok = (xn - 1.0).abs() <= norm_tol && (yn - 1.0).abs() <= norm_tol && res <= entry_tol;
                table.push(json!({ "n": n, "amplified_entry": n }));
                rep.check(
                    &format!("level_{n}"),
                    ok,
                    json!({ "x_norm": xn, "y_norm": yn, "entry_residual": res }),
                );
            }
            Err(e) => {
                rep.check(&format!("level_{n}"), false, err_detail(&e));
            }
        }
    }
    rep.output("levels", &table);
    Ok(rep.seal())
}

fn cmd_gns(cli: &Cli) -> CliResult<Report> {
    let state: State = load(need_input(cli, "a state")?, "a state")?;
    let mut rep = Report::new("gns");
    rep.echo("state", &state);
    rep.tolerance("identity_residual", 1e-8);
    let data = gns_construct(&state)
        .map_err(|e| CliErr::Schema(format!("construction rejected the state: {e}")))?;
    rep.output("space_dim", &data.space_dim);
    match verify_gns(&data) {
        Ok(check) => {
            let pass = check.pass;
            rep.check(
                "cyclic_identities",
                pass,
                serde_json::to_value(&check).unwrap_or_default(),
            );
        }
        Err(e) => {
            rep.check("cyclic_identities", false, err_detail(&e));
        }
    }
    Ok(rep.seal())
}

fn cmd_js_validate(cli: &Cli) -> CliResult<Report> {
    let j: JsRep = load(need_input(cli, "a sandwich form")?, "a sandwich form")?;
    let mut rep = Report::new("js-validate");
    rep.echo("rep", &j);
    rep.output("bound", &j.bound());
    let v = j.validate();
    rep.check("representation_tables", v.pass, serde_json::to_value(&v).unwrap_or_default());
    Ok(rep.seal())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalInput {
    rep: JsRep,
    args: Vec<AlgElement>,
}

fn cmd_js_eval(cli: &Cli) -> CliResult<Report> {
    let input: EvalInput = load(need_input(cli, "a rep and arguments")?, "a rep and arguments")?;
    let mut rep = Report::new("js-eval");
    rep.echo("rep", &input.rep);
    rep.echo("args", &input.args);
    let value = input
        .rep
        .evaluate(&input.args)
        .map_err(|e| CliErr::Schema(format!("arguments do not fit the rep: {e}")))?;
    rep.output("value", &value);
    rep.check("evaluated", true, json!({ "rows": value.rows(), "cols": value.cols() }));
    Ok(rep.seal())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SumInput {
    first: JsRep,
    second: JsRep,
}

fn cmd_js_sum(cli: &Cli) -> CliResult<Report> {
    let input: SumInput = load(need_input(cli, "two reps")?, "two reps")?;
    let mut rep = Report::new("js-sum");
    rep.echo("first", &input.first);
    rep.echo("second", &input.second);
    rep.echo("seed", &cli.seed);
    let slack = cli.tol.unwrap_or(1e-10);
    rep.tolerance("additivity", slack);
    let sum = input
        .first
        .direct_sum(&input.second)
        .map_err(|e| CliErr::Schema(format!("reps cannot be summed: {e}")))?;
    rep.output("bound", &sum.bound());
    let v = sum.validate();
    rep.check("representation_tables", v.pass, serde_json::to_value(&v).unwrap_or_default());
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut residual = 0.0f64;
    let mut eval_err = None;
    for _ in 0..10 {
        let args: Vec<AlgElement> = input
            .first
            .reps
            .iter()
            .map(|r| AlgElement::random(&r.algebra, &mut rng))
            .collect();
        let run = || -> jsnorm::Result<f64> {
            let a = input.first.evaluate(&args)?;
            let b = input.second.evaluate(&args)?;
            let s = sum.evaluate(&args)?;
            Ok(s.sub(&a.add(&b)).max_abs())
        };
        match run() {
            Ok(r) => residual = residual.max(r),
            Err(e) => {
                eval_err = Some(e);
                break;
            }
        }
    }
    match eval_err {
        Some(e) => {
            rep.check("evaluation_additivity", false, err_detail(&e));
        }
        None => {
            rep.check("evaluation_additivity", residual <= slack, json!({ "residual": residual }));
        }
    }
    let b_sum = input.first.bound() + input.second.bound();
    rep.check(
        "bound_subadditivity",
        sum.bound() <= b_sum + slack,
        json!({ "sum_bound": sum.bound(), "bound_total": b_sum }),
    );
    Ok(rep.seal())
}

fn cmd_witness_find(cli: &Cli) -> CliResult<Report> {
    let iters = cli.n.unwrap_or(400);
    let tol = cli.tol.unwrap_or(WITNESS_TOL);
    let mut rep = Report::new("witness-find");
    rep.echo("seed", &cli.seed);
    rep.echo("restarts", &cli.restarts);
    rep.echo("iterations", &iters);
    rep.tolerance("violation", tol);
    match load_target(cli, "a search target")? {
        Target::Form(form) => {
            rep.echo("form", &form);
            let run = || -> jsnorm::Result<(WitnessStates, f64, f64)> {
                let est = form_norm(&form, cli.seed.wrapping_add(1), cli.restarts)?;
                let w = find_witness_bilinear(&form, iters, cli.seed)?;
                let check = check_witness(&form, &w, est.value, cli.restarts, cli.seed.wrapping_add(2))?;
                Ok((w, est.value, check.max_violation))
            };
            match run() {
                Ok((w, norm, violation)) => {
                    rep.output("witness", &w);
                    rep.output("norm_estimate", &norm);
                    rep.check(
                        "witness_certified",
                        violation <= tol,
                        json!({ "max_violation": violation, "norm_estimate": norm }),
                    );
                }
                Err(e) => {
                    rep.check("witness_certified", false, err_detail(&e));
                }
            }
        }
        Target::Map(map) => {
            rep.echo("map", &map);
            let run = || -> jsnorm::Result<(LittleWitness, f64, f64)> {
                let est = hilbertmap_norm(&map, cli.seed.wrapping_add(1), cli.restarts)?;
                let w = find_witness_little(&map, iters, cli.seed)?;
                let check =
                    check_witness_little(&map, &w, est.value, cli.restarts, cli.seed.wrapping_add(2))?;
                Ok((w, est.value, check.max_violation))
            };
            match run() {
                Ok((w, norm, violation)) => {
                    rep.output("witness", &w);
                    rep.output("norm_estimate", &norm);
                    rep.check(
                        "witness_certified",
                        violation <= tol,
                        json!({ "max_violation": violation, "norm_estimate": norm }),
                    );
                }
                Err(e) => {
                    rep.check("witness_certified", false, err_detail(&e));
                }
            }
        }
    }
    Ok(rep.seal())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessCheckInput {
    form: Option<BilinearForm>,
    map: Option<HilbertMap>,
    witness: Option<WitnessStates>,
    witness_little: Option<LittleWitness>,
    norm: Option<f64>,
}

fn cmd_witness_check(cli: &Cli) -> CliResult<Report> {
    let input: WitnessCheckInput =
        load(need_input(cli, "a form or map plus witness")?, "a form or map plus witness")?;
    let tol = cli.tol.unwrap_or(WITNESS_TOL);
    let mut rep = Report::new("witness-check");
    rep.echo("seed", &cli.seed);
    rep.echo("restarts", &cli.restarts);
    rep.tolerance("violation", tol);
    match (input.form, input.map, input.witness, input.witness_little) {
        (Some(form), None, Some(w), None) => {
            rep.echo("form", &form);
            rep.echo("witness", &w);
            let run = || -> jsnorm::Result<(f64, jsnorm::grothendieck::WitnessReport)> {
                let norm = match input.norm {
                    Some(v) => v,
                    None => form_norm(&form, cli.seed.wrapping_add(1), cli.restarts)?.value,
                };
                let check = check_witness(&form, &w, norm, cli.restarts, cli.seed)?;
                Ok((norm, check))
            };
            match run() {
                Ok((norm, check)) => {
                    rep.echo("norm", &norm);
                    rep.output("worst_pair", &json!({ "a": check.worst_a, "b": check.worst_b }));
                    rep.check(
                        "witness_certified",
                        check.max_violation <= tol,
                        json!({ "max_violation": check.max_violation, "norm_estimate_used": check.norm_estimate_used }),
                    );
                }
                Err(e) => {
                    rep.check("witness_certified", false, err_detail(&e));
                }
            }
        }
        (None, Some(map), None, Some(w)) => {
            rep.echo("map", &map);
            rep.echo("witness_little", &w);
            let run = || -> jsnorm::Result<(f64, jsnorm::grothendieck::WitnessReport)> {
                let norm = match input.norm {
                    Some(v) => v,
                    None => hilbertmap_norm(&map, cli.seed.wrapping_add(1), cli.restarts)?.value,
                };
                let check = check_witness_little(&map, &w, norm, cli.restarts, cli.seed)?;
                Ok((norm, check))
            };
            match run() {
                Ok((norm, check)) => {
                    rep.echo("norm", &norm);
                    rep.output("worst_element", &check.worst_a);
                    rep.check(
                        "witness_certified",
                        check.max_violation <= tol,
                        json!({ "max_violation": check.max_violation, "norm_estimate_used": check.norm_estimate_used }),
                    );
                }
                Err(e) => {
                    rep.check("witness_certified", false, err_detail(&e));
                }
            }
        }
        _ => {
            return Err(CliErr::Schema(
                "pair \"form\" with \"witness\", or \"map\" with \"witness_little\"".into(),
            ))
        }
    }
    Ok(rep.seal())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LittleFactorizeInput {
    map: HilbertMap,
    witness: Option<LittleWitness>,
}

fn little_repro(rep: &JsRep, map: &HilbertMap) -> jsnorm::Result<f64> {
    let mut worst = 0.0f64;
    for p in 0..map.algebra.dim() {
        let a = AlgElement::basis_at(&map.algebra, p);
        let got = rep.evaluate(&[a.clone()])?;
        let want = map.apply(&a)?;
        for (i, w) in want.iter().enumerate() {
            worst = worst.max((got[(i, 0)] - w).norm());
        }
    }
    Ok(worst)
}

fn cmd_factorize_little(cli: &Cli) -> CliResult<Report> {
    let (map, witness) = match &cli.input {
        Some(path) => {
            let input: LittleFactorizeInput = load(path, "a map with optional witness")?;
            (input.map, input.witness)
        }
        None => {
            let d = cli.dims.unwrap_or(3);
            if d == 0 {
                return Err(CliErr::Schema("--dims must be at least 1".into()));
            }
            (row_extraction_map(d), None)
        }
    };
    let iters = cli.n.unwrap_or(400);
    let repro_tol = cli.tol.unwrap_or(1e-8);
    let mut rep = Report::new("factorize-little");
    rep.echo("map", &map);
    rep.echo("seed", &cli.seed);
    rep.echo("restarts", &cli.restarts);
    rep.tolerance("violation", WITNESS_TOL);
    rep.tolerance("reproduction", repro_tol);
    rep.tolerance("norm_slack", NORM_SLACK);
    let run = || -> jsnorm::Result<(LittleWitness, f64, f64)> {
        let est = hilbertmap_norm(&map, cli.seed.wrapping_add(1), cli.restarts)?;
        let w = match witness {
            Some(w) => w,
            None => find_witness_little(&map, iters, cli.seed)?,
        };
        let check = check_witness_little(&map, &w, est.value, cli.restarts, cli.seed.wrapping_add(2))?;
        Ok((w, est.value, check.max_violation))
    };
    let (w, norm, violation) = match run() {
        Ok(t) => t,
        Err(e) => {
            rep.check("witness_certified", false, err_detail(&e));
            return Ok(rep.seal());
        }
    };
    rep.output("witness", &w);
    rep.output("norm_estimate", &norm);
    if !rep.check(
        "witness_certified",
        violation <= WITNESS_TOL,
        json!({ "max_violation": violation }),
    ) {
        return Ok(rep.seal());
    }
    match factorize_little(&map, &w, norm) {
        Ok(fac) => {
            rep.output("factorization", &fac);
            rep.output("bound", &fac.bound());
            let limit = 2f64.sqrt() * norm * (1.0 + NORM_SLACK);
            rep.check(
                "bound_within_sqrt2",
                fac.bound() <= limit,
                json!({ "bound": fac.bound(), "limit": limit }),
            );
            match little_repro(&fac, &map) {
                Ok(res) => {
                    rep.check("basis_reproduction", res <= repro_tol, json!({ "residual": res }));
                }
                Err(e) => {
                    rep.check("basis_reproduction", false, err_detail(&e));
                }
            }
        }
        Err(e) => {
            rep.check("factorization", false, err_detail(&e));
        }
    }
    Ok(rep.seal())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BilinearFactorizeInput {
    form: BilinearForm,
    witness: Option<WitnessStates>,
}

fn bilinear_repro(rep: &JsRep, form: &BilinearForm) -> jsnorm::Result<f64> {
    let mut worst = 0.0f64;
    for p in 0..form.alg_a.dim() {
        for q in 0..form.alg_b.dim() {
            let x = AlgElement::basis_at(&form.alg_a, p);
            let y = AlgElement::basis_at(&form.alg_b, q);
            let got = rep.evaluate_scalar(&[x.clone(), y.clone()])?;
            let want = form.eval(&x, &y)?;
            worst = worst.max((got - want).norm());
        }
    }
    Ok(worst)
}

fn cmd_factorize_bilinear(cli: &Cli) -> CliResult<Report> {
    let (form, witness) = match &cli.input {
        Some(path) => {
            let input: BilinearFactorizeInput = load(path, "a form with optional witness")?;
            (input.form, input.witness)
        }
        None => {
            let d = cli.dims.unwrap_or(3);
            if d == 0 {
                return Err(CliErr::Schema("--dims must be at least 1".into()));
            }
            (corner_form(d), None)
        }
    };
    let iters = cli.n.unwrap_or(400);
    let repro_tol = cli.tol.unwrap_or(1e-8);
    let mut rep = Report::new("factorize-bilinear");
    rep.echo("form", &form);
    rep.echo("seed", &cli.seed);
    rep.echo("restarts", &cli.restarts);
    rep.tolerance("violation", WITNESS_TOL);
    rep.tolerance("reproduction", repro_tol);
    rep.tolerance("norm_slack", NORM_SLACK);
    let run = || -> jsnorm::Result<(WitnessStates, f64, f64)> {
        let est = form_norm(&form, cli.seed.wrapping_add(1), cli.restarts)?;
        let w = match witness {
            Some(w) => w,
            None => find_witness_bilinear(&form, iters, cli.seed)?,
        };
        let check = check_witness(&form, &w, est.value, cli.restarts, cli.seed.wrapping_add(2))?;
        Ok((w, est.value, check.max_violation))
    };
    let (w, norm, violation) = match run() {
        Ok(t) => t,
        Err(e) => {
            rep.check("witness_certified", false, err_detail(&e));
            return Ok(rep.seal());
        }
    };
    rep.output("witness", &w);
    rep.output("norm_estimate", &norm);
    if !rep.check(
        "witness_certified",
        violation <= WITNESS_TOL,
        json!({ "max_violation": violation }),
    ) {
        return Ok(rep.seal());
    }
    match factorize_bilinear(&form, &w, norm) {
        Ok(fac) => {
            rep.output("factorization", &fac);
            rep.output("bound", &fac.bound());
            let limit = 2.0 * norm * (1.0 + NORM_SLACK);
            rep.check(
                "bound_within_twice_norm",
                fac.bound() <= limit,
                json!({ "bound": fac.bound(), "limit": limit }),
            );
            match bilinear_repro(&fac, &form) {
                Ok(res) => {
                    rep.check("basis_reproduction", res <= repro_tol, json!({ "residual": res }));
                }
                Err(e) => {
                    rep.check("basis_reproduction", false, err_detail(&e));
                }
            }
        }
        Err(e) => {
            rep.check("factorization", false, err_detail(&e));
        }
    }
    Ok(rep.seal())
}

fn cmd_split4(cli: &Cli) -> CliResult<Report> {
    let j: JsRep = match &cli.input {
        Some(path) => load(path, "a bilinear factorization")?,
        None => {
            let d = cli.dims.unwrap_or(2);
            let form = corner_form(d);
            let build = || -> jsnorm::Result<JsRep> {
                let est = form_norm(&form, cli.seed.wrapping_add(1), cli.restarts.max(4))?;
                let w = find_witness_bilinear(&form, cli.n.unwrap_or(400), cli.seed)?;
                factorize_bilinear(&form, &w, est.value)
            };
            build().map_err(|e| {
                CliErr::Schema(format!("cannot build the built-in example factorization: {e}"))
            })?
        }
    };
    let slack = cli.tol.unwrap_or(1e-10);
    let mut rep = Report::new("split4");
    rep.echo("rep", &j);
    rep.echo("seed", &cli.seed);
    rep.tolerance("additivity", slack);
    let pieces = match split_four(&j) {
        Ok(p) => p,
        Err(e) => {
            return Err(CliErr::Schema(format!("rep lacks the four-block structure: {e}")));
        }
    };
    rep.output("piece_bounds", &pieces.iter().map(|p| p.bound()).collect::<Vec<_>>());
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut residual = 0.0f64;
    let mut eval_err = None;
    for _ in 0..10 {
        let x = AlgElement::random(&j.reps[0].algebra, &mut rng);
        let y = AlgElement::random(&j.reps[1].algebra, &mut rng);
        let run = || -> jsnorm::Result<f64> {
            let whole = j.evaluate_scalar(&[x.clone(), y.clone()])?;
            let sum: Complex64 = pieces
                .iter()
                .map(|p| p.evaluate_scalar(&[x.clone(), y.clone()]))
                .collect::<jsnorm::Result<Vec<_>>>()?
                .into_iter()
                .sum();
            Ok((whole - sum).norm())
        };
        match run() {
            Ok(r) => residual = residual.max(r),
            Err(e) => {
                eval_err = Some(e);
                break;
            }
        }
    }
    match eval_err {
        Some(e) => {
            rep.check("pieces_sum_to_whole", false, err_detail(&e));
        }
        None => {
            rep.check("pieces_sum_to_whole", residual <= slack, json!({ "residual": residual }));
        }
    }
    Ok(rep.seal())
}

fn cmd_positive(cli: &Cli) -> CliResult<Report> {
    let form: BilinearForm = match &cli.input {
        Some(path) => load(path, "a form on one algebra")?,
        None => normalized_trace_form(cli.dims.unwrap_or(3).max(1)),
    };
    let gap_tol = cli.tol.unwrap_or(NORM_GAP_TOL);
    let mut rep = Report::new("positive");
    rep.echo("form", &form);
    rep.echo("seed", &cli.seed);
    rep.echo("restarts", &cli.restarts);
    rep.tolerance("norm_square_gap", gap_tol);
    match is_positive(&form) {
        Ok((pos, min_eig)) => {
            rep.check("pairing_positive", pos, json!({ "min_eigenvalue": min_eig }));
            if !pos {
                return Ok(rep.seal());
            }
        }
        Err(e) => {
            rep.check("pairing_positive", false, err_detail(&e));
            return Ok(rep.seal());
        }
    }
    let data = match build_fb(&form) {
        Ok(d) => d,
        Err(e) => {
            rep.check("factor_map", false, err_detail(&e));
            return Ok(rep.seal());
        }
    };
    rep.output("factor_map", &data.fb);
    rep.output("kernel_dim", &data.kernel_dim);
    rep.check("factor_map", true, json!({ "rank": data.fb.target_dim(), "kernel_dim": data.kernel_dim }));
    match check_norm_square(&form, &data, cli.restarts, cli.seed) {
        Ok(ns) => {
            rep.check(
                "norm_square_identity",
                ns.rel_gap <= gap_tol,
                serde_json::to_value(&ns).unwrap_or_default(),
            );
        }
        Err(e) => {
            rep.check("norm_square_identity", false, err_detail(&e));
        }
    }
    Ok(rep.seal())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RoundtripInput {
    form: BilinearForm,
    rep: Option<JsRep>,
}

/// A starting representation for the two bundled example forms; anything
/// else must arrive with its own.
fn default_rep_for(form: &BilinearForm) -> jsnorm::Result<Option<JsRep>> {
    if form.alg_a != form.alg_b {
        return Ok(None);
    }
    let dims = form.alg_a.block_dims();
    if dims.len() != 1 {
        return Ok(None);
    }
    let d = dims[0];
    if form.coeffs.sub(&corner_form(d).coeffs).max_abs() < 1e-12 {
        return Ok(Some(transpose_factorization_example(d)?));
    }
    if form.coeffs.sub(&normalized_trace_form(d).coeffs).max_abs() < 1e-12 {
        return Ok(Some(trace_form_rep(d)?));
    }
    Ok(None)
}

fn cmd_roundtrip_positive(cli: &Cli) -> CliResult<Report> {
    let (form, start) = match &cli.input {
        Some(path) => {
            let input: RoundtripInput = load(path, "a positive form with representation")?;
            let start = match input.rep {
                Some(r) => r,
                None => default_rep_for(&input.form)
                    .map_err(|e| CliErr::Schema(format!("cannot build a default rep: {e}")))?
                    .ok_or_else(|| {
                        CliErr::Schema(
                            "no built-in representation for this form; include \"rep\"".into(),
                        )
                    })?,
            };
            (input.form, start)
        }
        None => {
            let d = cli.dims.unwrap_or(2).max(1);
            let form = corner_form(d);
            let start = transpose_factorization_example(d)
                .map_err(|e| CliErr::Schema(format!("cannot build the example: {e}")))?;
            (form, start)
        }
    };
    let bound_tol = cli.tol.unwrap_or(1e-4);
    let mut rep = Report::new("roundtrip-positive");
    rep.echo("form", &form);
    rep.echo("rep", &start);
    rep.tolerance("bound_growth", bound_tol);
    rep.tolerance("reproduction", 1e-8);
    let start_bound = start.bound();
    let sym = match symmetrize(&start) {
        Ok(s) => s,
        Err(e) => {
            rep.check("symmetrization", false, err_detail(&e));
            return Ok(rep.seal());
        }
    };
    rep.check(
        "symmetrization",
        (sym.bound() - start_bound).abs() <= 1e-9 * start_bound.max(1.0),
        json!({ "bound": sym.bound() }),
    );
    let (compressed, _w) = match compress_positive(&sym, &form) {
        Ok(t) => t,
        Err(e) => {
            rep.check("compression", false, err_detail(&e));
            return Ok(rep.seal());
        }
    };
    rep.check(
        "compression",
        compressed.bound() <= sym.bound().sqrt() + 1e-6,
        json!({ "bound": compressed.bound() }),
    );
    let squared = match square_fb_rep(&compressed) {
        Ok(s) => s,
        Err(e) => {
            rep.check("squared_bound", false, err_detail(&e));
            return Ok(rep.seal());
        }
    };
    rep.output(
        "bound_chain",
        &json!([start_bound, sym.bound(), compressed.bound(), squared.bound()]),
    );
    rep.check(
        "squared_bound",
        squared.bound() <= start_bound * (1.0 + bound_tol),
        json!({ "start": start_bound, "squared": squared.bound() }),
    );
    match bilinear_repro(&squared, &form) {
        Ok(res) => {
            rep.check("basis_reproduction", res <= 1e-8, json!({ "residual": res }));
        }
        Err(e) => {
            rep.check("basis_reproduction", false, err_detail(&e));
        }
    }
    Ok(rep.seal())
}

fn cmd_ratio_scan(cli: &Cli) -> CliResult<Report> {
    let config: ScanConfig = match &cli.input {
        Some(path) => load(path, "a scan configuration")?,
        None => ScanConfig::default(),
    };
    let count = cli.n.unwrap_or(50);
    let slack = cli.tol.unwrap_or(1e-6);
    let mut rep = Report::new("ratio-scan");
    rep.echo("config", &config);
    rep.echo("count", &count);
    rep.echo("seed", &cli.seed);
    rep.tolerance("ratio_slack", slack);
    let reports: Vec<RatioReport> = match ratio_scan(&config, count, cli.seed) {
        Ok(r) => r,
        Err(e) => {
            rep.check("scan_completed", false, err_detail(&e));
            return Ok(rep.seal());
        }
    };
    let converged = reports.iter().filter(|r| r.converged).count();
    let mut worst_low = f64::INFINITY;
    let mut worst_high = f64::NEG_INFINITY;
    let mut in_range = true;
    for r in &reports {
        if let Some(ratio) = r.ratio {
            worst_low = worst_low.min(ratio);
            worst_high = worst_high.max(ratio);
            if !(1.0 - slack..=2.0 + slack).contains(&ratio) {
                in_range = false;
            }
        }
    }
    rep.output("instances", &reports);
    rep.output("csv", &ratio_scan_csv(&reports));
    rep.check(
        "ratios_in_range",
        in_range,
        json!({
            "count": count,
            "converged": converged,
            "failed": count - converged,
            "min_ratio": if worst_low.is_finite() { Some(worst_low) } else { None },
            "max_ratio": if worst_high.is_finite() { Some(worst_high) } else { None },
        }),
    );
    Ok(rep.seal())
}
