use std::io::Write;

use chrono::Utc;
use clap::ValueEnum;
use serde_json::{json, Map, Value};

use ccp_core::asymptotic::{
    equal_case_expectation, expectation_asymptotic, laplace_ik_expansion, laplace_ik_quadrature,
    rising_moment_asymptotic, variance_leading, ExpansionReport,
};
use ccp_core::exact::{variance_exact, MomentReport};
use ccp_core::limit::{gumbel_cdf, normalization, GumbelNormalization, LimitFamily, Provenance};
use ccp_core::model::build_distribution;
use ccp_core::sim::{run_simulation, SimulationSummary};
use ccp_core::special::PI_SQUARED_OVER_SIX;
use ccp_core::{CouponFamily, QuadratureConfig};

use crate::output::{num, text, RunRecord, Table};
use crate::{
    BirthdayArgs, CliError, Command, CompareArgs, FamilyArgs, FamilyKind, LemmaArgs, LimitArgs, MomentMethod,
    MomentsArgs, ProvenanceArg, QuadArgs, Report, SimulateArgs,
};

type CliResult<T> = Result<T, CliError>;

pub(crate) fn dispatch(command: &Command) -> CliResult<Report> {
    match command {
        Command::Moments(a) => moments(a),
        Command::Simulate(a) => simulate(a),
        Command::Limit(a) => limit(a),
        Command::Birthday(a) => birthday(a),
        Command::VerifyLemma(a) => verify_lemma(a),
        Command::Compare(a) => compare(a),
    }
}

fn report(command: &str, parameters: Value, table: Table, seed: Option<u64>, diagnostics: Option<Value>) -> Report {
    let parameters = match parameters {
        Value::Object(map) => map,
        _ => Map::new(),
    };
    let record = RunRecord {
        command: command.to_string(),
        parameters,
        results: table.to_json(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: Utc::now(),
        seed,
        diagnostics,
    };
    Report { record, table }
}

fn family_of(args: &FamilyArgs) -> CliResult<CouponFamily> {
    let need_p = |name: &str| args.p.ok_or_else(|| CliError::usage(format!("--p is required for the {name} family")));
    let family = match args.family {
        FamilyKind::Equal => CouponFamily::Equal,
        FamilyKind::Zipf => CouponFamily::Zipf { p: need_p("zipf")? },
        FamilyKind::LogZipf => CouponFamily::LogZipf { p: need_p("log-zipf")? },
        FamilyKind::Explicit => {
            let path = args
                .weights_file
                .as_ref()
                .ok_or_else(|| CliError::usage("--weights-file is required for the explicit family"))?;
            CouponFamily::explicit_from_file(path)?
        }
    };
    family.validate()?;
    Ok(family)
}

fn family_json(args: &FamilyArgs) -> Value {
    json!({
        "family": value_name(&args.family),
        "p": args.p,
        "N": args.n,
        "m": args.m,
        "weights_file": args.weights_file.as_ref().map(|p| p.display().to_string()),
    })
}

fn value_name<V: ValueEnum>(v: &V) -> String {
    v.to_possible_value().map(|p| p.get_name().to_string()).unwrap_or_default()
}

fn quad_config(q: &QuadArgs) -> CliResult<QuadratureConfig> {
    let cfg = QuadratureConfig {
        rel_tol: q.rel_tol,
        abs_tol: q.abs_tol,
        tail_epsilon: q.tail_epsilon,
        max_panels: q.max_panels,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(x), Value::Object(y)) = (&mut a, b) {
        x.extend(y);
    }
    a
}

/// `CCP_WORKERS` overrides the flag.
fn resolve_workers(flag: usize) -> CliResult<usize> {
    let workers = match std::env::var("CCP_WORKERS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::usage(format!("CCP_WORKERS must be a positive integer, got {v:?}")))?,
        Err(_) => flag,
    };
    if workers == 0 {
        return Err(CliError::usage("workers must be at least 1"));
    }
    Ok(workers)
}

fn check_n(n: usize) -> CliResult<()> {
    if n == 0 {
        Err(CliError::usage("--N must be at least 1"))
    } else {
        Ok(())
    }
}

const MOMENT_COLUMNS: [&str; 9] =
    ["section", "quantity", "term", "value", "cumulative", "exact", "delta", "error", "scaled_error"];

fn exact_rows(t: &mut Table, r: &MomentReport) {
    for (q, v) in [("expectation", r.expectation), ("rising_moment", r.rising_moment), ("variance", r.variance)] {
        if let Some(v) = v {
            let err = if q == "variance" { num(r.error_estimate) } else { Value::Null };
            t.push(vec![("section", text("exact")), ("quantity", text(q)), ("value", num(v)), ("error", err)]);
        }
    }
    if let Some(panels) = r.panels {
        t.push(vec![("section", text("exact")), ("quantity", text("panels")), ("value", json!(panels))]);
    }
}

fn expansion_rows(t: &mut Table, e: &ExpansionReport, quantity: &str, exact: Option<f64>) {
    let mut cumulative = 0.0;
    for term in &e.terms {
        cumulative += term.value;
        t.push(vec![
            ("section", text("term")),
            ("quantity", text(quantity)),
            ("term", text(term.label.clone())),
            ("value", num(term.value)),
            ("cumulative", num(cumulative)),
            ("exact", exact.map_or(Value::Null, num)),
            ("delta", exact.map_or(Value::Null, |x| num(x - cumulative))),
        ]);
    }
    let mut row = vec![
        ("section", text("asymptotic")),
        ("quantity", text(quantity)),
        ("value", num(e.total)),
        ("error", num(e.error_scale)),
    ];
    if let Some(x) = exact {
        row.push(("exact", num(x)));
        row.push(("delta", num(x - e.total)));
        row.push(("scaled_error", num((x - e.total).abs() / e.error_scale)));
    }
    t.push(row);
}

fn moments(a: &MomentsArgs) -> CliResult<Report> {
    check_n(a.family.n)?;
    let family = family_of(&a.family)?;
    let cfg = quad_config(&a.quad)?;
    let dist = build_distribution(&family, a.family.n)?;
    let m = a.family.m;
    if m == 0 {
        return Err(CliError::usage("--m must be at least 1"));
    }
    let mut t = Table::new(&MOMENT_COLUMNS);

    let exact = match a.method {
        MomentMethod::Exact | MomentMethod::Both => {
            let r = variance_exact(&dist, m, &cfg)?;
            exact_rows(&mut t, &r);
            Some(r)
        }
        MomentMethod::Asymptotic => None,
    };
    if a.method != MomentMethod::Exact {
        let e = exact.as_ref().and_then(|r| r.expectation);
        let q = exact.as_ref().and_then(|r| r.rising_moment);
        match family {
            CouponFamily::LogZipf { p } => {
                expansion_rows(&mut t, &expectation_asymptotic(p, m, a.family.n)?, "expectation", e);
                expansion_rows(&mut t, &rising_moment_asymptotic(p, m, a.family.n)?, "rising_moment", q);
                let v = exact.as_ref().and_then(|r| r.variance);
                let lead = variance_leading(a.family.n);
                t.push(vec![
                    ("section", text("asymptotic")),
                    ("quantity", text("variance")),
                    ("term", text("pi^2/6 N^2")),
                    ("value", num(lead)),
                    ("exact", v.map_or(Value::Null, num)),
                    ("delta", v.map_or(Value::Null, |v| num(v - lead))),
                ]);
            }
            CouponFamily::Equal => {
                expansion_rows(&mut t, &equal_case_expectation(m, a.family.n)?, "expectation", e);
            }
            _ => return Err(CliError::usage("asymptotic expansions exist only for the equal and log-zipf families")),
        }
    }
    let method = value_name(&a.method);
    let params = merge(
        family_json(&a.family),
        json!({ "method": method, "rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol,
                "tail_epsilon": cfg.tail_epsilon, "max_panels": cfg.max_panels }),
    );
    Ok(report("moments", params, t, None, None))
}

fn write_cdf(path: &std::path::Path, s: &SimulationSummary) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::usage(format!("cannot write {}: {e}", path.display()));
    let mut t = Table::new(&["threshold", "fraction"]);
    for &(v, f) in &s.empirical_cdf.points {
        t.push(vec![("threshold", json!(v)), ("fraction", num(f))]);
    }
    let f = std::fs::File::create(path).map_err(io)?;
    t.write_csv(std::io::BufWriter::new(f)).map_err(|e| io(std::io::Error::other(e)))
}

fn simulate(a: &SimulateArgs) -> CliResult<Report> {
    check_n(a.family.n)?;
    let family = family_of(&a.family)?;
    let dist = build_distribution(&family, a.family.n)?;
    let workers = resolve_workers(a.sim.workers)?;
    let s = run_simulation(&dist, a.family.m, a.sim.reps, a.sim.seed, workers)?;
    if let Some(path) = &a.emit_cdf {
        write_cdf(path, &s)?;
    }
    if let Some(path) = &a.dump_samples {
        let f = std::fs::File::create(path)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
        let mut w = std::io::BufWriter::new(f);
        s.write_samples(&mut w)?;
        w.flush().map_err(|e| CliError::usage(e.to_string()))?;
    }
    let mut t = Table::new(&[
        "replications",
        "mean",
        "std_error",
        "variance",
        "variance_degenerate",
        "min",
        "max",
        "total_draws",
        "seed",
    ]);
    t.push(vec![
        ("replications", json!(s.replications)),
        ("mean", num(s.mean)),
        ("std_error", num(s.std_error())),
        ("variance", num(s.variance)),
        ("variance_degenerate", json!(s.variance_degenerate)),
        ("min", json!(s.min)),
        ("max", json!(s.max)),
        ("total_draws", json!(s.total_draws)),
        ("seed", json!(s.seed)),
    ]);
    let params = merge(family_json(&a.family), json!({ "reps": a.sim.reps, "seed": a.sim.seed }));
    let diagnostics = json!({
        "workers": workers,
        "elapsed_seconds": s.elapsed.as_secs_f64(),
        "draws_per_second": s.draws_per_second(),
    });
    Ok(report("simulate", params, t, Some(a.sim.seed), Some(diagnostics)))
}

fn provenance_of(p: ProvenanceArg) -> Provenance {
    match p {
        ProvenanceArg::PaperExample => Provenance::PaperExamplePrinted,
        ProvenanceArg::MainResultIv => Provenance::PaperMainResultIv,
        ProvenanceArg::GumbelConsistent => Provenance::GumbelConsistent,
    }
}

fn limit_family(args: &FamilyArgs) -> CliResult<LimitFamily> {
    match args.family {
        FamilyKind::Equal => Ok(LimitFamily::Equal),
        FamilyKind::LogZipf => {
            let p = args.p.ok_or_else(|| CliError::usage("--p is required for the log-zipf family"))?;
            Ok(LimitFamily::LogZipf { p })
        }
        _ => Err(CliError::usage("limit laws are available for the equal and log-zipf families only")),
    }
}

fn limit(a: &LimitArgs) -> CliResult<Report> {
    let fam = limit_family(&a.family)?;
    if !a.threshold.is_finite() || a.threshold <= 0.0 {
        return Err(CliError::usage("--n must be a positive number"));
    }
    let norm = normalization(fam, a.family.m, a.family.n, provenance_of(a.provenance))?;
    let y = norm.standardize(a.threshold);
    let mut t = Table::new(&["n", "provenance", "b_N", "k_N", "y", "probability"]);
    t.push(vec![
        ("n", num(a.threshold)),
        ("provenance", text(norm.provenance.as_str())),
        ("b_N", num(norm.b_n)),
        ("k_N", num(norm.k_n)),
        ("y", num(y)),
        ("probability", num(gumbel_cdf(y))),
    ]);
    let params = merge(family_json(&a.family), json!({ "n": a.threshold, "provenance": value_name(&a.provenance) }));
    Ok(report("limit", params, t, None, None))
}

/// A number as printed in the worked example, with its significant digits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrintedValue {
    pub quantity: &'static str,
    pub value: f64,
    pub digits: i32,
}

/// Published birthday-example values: `P(T ≤ 6N)` and `P(T ≤ 5N)` for equal
/// and log-Zipf (p = 1) weights, and the two ratios.
pub const PRINTED_BIRTHDAY: [PrintedValue; 6] = [
    PrintedValue { quantity: "equal P(T<=6N)", value: 0.4051, digits: 4 },
    PrintedValue { quantity: "equal P(T<=5N)", value: 0.085, digits: 2 },
    PrintedValue { quantity: "log-zipf P(T<=6N)", value: 0.0126, digits: 3 },
    PrintedValue { quantity: "log-zipf P(T<=5N)", value: 6.84652e-6, digits: 6 },
    PrintedValue { quantity: "equal ratio", value: 4.77, digits: 3 },
    PrintedValue { quantity: "log-zipf ratio", value: 1840.0, digits: 3 },
];

/// Rounds to `digits` significant digits.
pub fn round_significant(x: f64, digits: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn same_printed(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs()
}

fn birthday(a: &BirthdayArgs) -> CliResult<Report> {
    if a.n < 3 {
        return Err(CliError::usage("--N must be at least 3"));
    }
    let workers = resolve_workers(a.workers)?;
    let n = a.n as f64;
    let thresholds = [6.0 * n, 5.0 * n];
    let families = [
        ("equal", LimitFamily::Equal, CouponFamily::Equal),
        ("log-zipf", LimitFamily::LogZipf { p: a.p }, CouponFamily::LogZipf { p: a.p }),
    ];
    let variants = [
        ("paper_example_printed", Provenance::PaperExamplePrinted),
        ("main_result_iv", Provenance::PaperMainResultIv),
        ("gumbel_consistent", Provenance::GumbelConsistent),
    ];

    let mut t = Table::new(&[
        "quantity",
        "paper_printed",
        "paper_example_printed",
        "rendered",
        "matches_printed",
        "main_result_iv",
        "gumbel_consistent",
        "monte_carlo",
        "monte_carlo_se",
        "closest_to_monte_carlo",
    ]);
    let mut diagnostics = Map::new();
    let mut norms: Vec<Value> = Vec::new();

    for (fi, (fname, lfam, cfam)) in families.iter().enumerate() {
        let dist = build_distribution(cfam, a.n)?;
        let sim = run_simulation(&dist, 1, a.reps, a.seed.wrapping_add(fi as u64), workers)?;
        diagnostics.insert(format!("{fname}_elapsed_seconds"), num(sim.elapsed.as_secs_f64()));
        let ns: Vec<GumbelNormalization> =
            variants.iter().map(|(_, pr)| normalization(*lfam, 1, a.n, *pr)).collect::<Result<_, _>>()?;
        for (name, nm) in variants.iter().map(|v| v.0).zip(&ns) {
            norms.push(json!({ "family": fname, "variant": name, "b_N": nm.b_n, "k_N": nm.k_n,
                               "provenance": nm.provenance.as_str() }));
        }
        let labels = [0, 1, 2].map(|i| ns[i].provenance.as_str());
        let mut analytic = [[0.0; 3]; 2];
        let mut mc = [0.0; 2];
        let mut rendered = [0.0; 2];
        for (ti, &thr) in thresholds.iter().enumerate() {
            for (vi, nm) in ns.iter().enumerate() {
                analytic[ti][vi] = gumbel_cdf(nm.standardize(thr));
            }
            mc[ti] = sim.empirical_cdf.at(thr.floor() as u64);
            let printed = PRINTED_BIRTHDAY[2 * fi + ti];
            rendered[ti] = round_significant(analytic[ti][0], printed.digits);
            let se = (mc[ti] * (1.0 - mc[ti]) / a.reps as f64).sqrt();
            push_birthday_row(&mut t, printed, analytic[ti], rendered[ti], mc[ti], se, &labels);
        }
        let printed = PRINTED_BIRTHDAY[4 + fi];
        let ratio = [0, 1, 2].map(|vi| analytic[0][vi] / analytic[1][vi]);
        let rendered_ratio = round_significant(rendered[0] / rendered[1], printed.digits);
        push_birthday_row(&mut t, printed, ratio, rendered_ratio, mc[0] / mc[1], f64::NAN, &labels);
    }
    diagnostics.insert("normalizations".into(), Value::Array(norms));
    let params = json!({ "N": a.n, "p": a.p, "m": 1, "thresholds": thresholds, "reps": a.reps,
                         "seed": a.seed });
    Ok(report("birthday", params, t, Some(a.seed), Some(Value::Object(diagnostics))))
}

fn push_birthday_row(
    t: &mut Table,
    printed: PrintedValue,
    analytic: [f64; 3],
    rendered: f64,
    mc: f64,
    se: f64,
    labels: &[&str; 3],
) {
    let closest = (0..3)
        .min_by(|&i, &j| (analytic[i] - mc).abs().total_cmp(&(analytic[j] - mc).abs()))
        .map(|i| labels[i])
        .unwrap_or_default();
    t.push(vec![
        ("quantity", text(printed.quantity)),
        ("paper_printed", num(printed.value)),
        ("paper_example_printed", num(analytic[0])),
        ("rendered", num(rendered)),
        ("matches_printed", json!(same_printed(rendered, printed.value))),
        ("main_result_iv", num(analytic[1])),
        ("gumbel_consistent", num(analytic[2])),
        ("monte_carlo", num(mc)),
        ("monte_carlo_se", num(se)),
        ("closest_to_monte_carlo", text(closest)),
    ]);
}

fn check_grid(grid: &[usize]) -> CliResult<()> {
    if grid.is_empty() || grid.iter().any(|&n| n < 3) {
        Err(CliError::usage("--N-grid needs values of at least 3"))
    } else {
        Ok(())
    }
}

fn verify_lemma(a: &LemmaArgs) -> CliResult<Report> {
    check_grid(&a.n_grid)?;
    let cfg = quad_config(&a.quad)?;
    let mut t = Table::new(&["N", "quadrature", "expansion", "rel_error", "rel_error_times_ln_N"]);
    for &n in &a.n_grid {
        let q = laplace_ik_quadrature(a.p, a.k, a.s, n, &cfg)?;
        let e = laplace_ik_expansion(a.p, a.k, a.s, n)?;
        let rel = ((e - q) / q).abs();
        t.push(vec![
            ("N", json!(n)),
            ("quadrature", num(q)),
            ("expansion", num(e)),
            ("rel_error", num(rel)),
            ("rel_error_times_ln_N", num(rel * (n as f64).ln())),
        ]);
    }
    let params = json!({ "p": a.p, "k": a.k, "s": a.s, "N_grid": a.n_grid, "rel_tol": cfg.rel_tol });
    Ok(report("verify-lemma", params, t, None, None))
}

fn compare(a: &CompareArgs) -> CliResult<Report> {
    check_grid(&a.n_grid)?;
    let cfg = quad_config(&a.quad)?;
    let family = CouponFamily::LogZipf { p: a.p };
    family.validate()?;
    let mut t = Table::new(&[
        "N",
        "E_exact",
        "E_asym",
        "E_scaled_error",
        "Q_exact",
        "Q_asym",
        "Q_scaled_error",
        "V_exact_over_N2",
        "pi2_over_6",
    ]);
    for &n in &a.n_grid {
        let dist = build_distribution(&family, n)?;
        let r = variance_exact(&dist, a.m, &cfg)?;
        let e = expectation_asymptotic(a.p, a.m, n)?;
        let q = rising_moment_asymptotic(a.p, a.m, n)?;
        let (ex, qx, vx) =
            (r.expectation.unwrap_or(f64::NAN), r.rising_moment.unwrap_or(f64::NAN), r.variance.unwrap_or(f64::NAN));
        let nf = n as f64;
        t.push(vec![
            ("N", json!(n)),
            ("E_exact", num(ex)),
            ("E_asym", num(e.total)),
            ("E_scaled_error", num((ex - e.total) / e.error_scale)),
            ("Q_exact", num(qx)),
            ("Q_asym", num(q.total)),
            ("Q_scaled_error", num((qx - q.total) / q.error_scale)),
            ("V_exact_over_N2", num(vx / (nf * nf))),
            ("pi2_over_6", num(PI_SQUARED_OVER_SIX)),
        ]);
    }
    let params = json!({ "family": "log-zipf", "p": a.p, "m": a.m, "N_grid": a.n_grid, "rel_tol": cfg.rel_tol });
    Ok(report("compare", params, t, None, None))
}
