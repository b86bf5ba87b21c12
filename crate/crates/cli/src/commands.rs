use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use remetric::metricspace::{bound_metric, validate_metric, FiniteMetricSpace};
use remetric::moduli::{check_condition_iv, construct_phi, ModulusSequence, ModulusSpec, TailWitness, Verdict};
use remetric::remetrize::{
    build_dhat, element_bounds, tent_one_lipschitz_refutation, tent_witness_inequalities,
    verify_conclusion, BuildOptions, ConclusionReport, Remetrization,
};
use remetric::sequences::{build_envelope, parse_growth_spec, verify_submultiplicative, Envelope, GrowthSequence};
use remetric::systems::counterexample::{
    alphabet, all_words, cex_equicontinuity_certificate, cex_nonequicontinuity_witness,
    certificate_word_length, sample_words, CexCase, CexPoint, VerticalInterval,
};
use remetric::systems::{make_group_system, make_rotation_system, make_tent_system, s3_adjacent_transpositions, s3_all_transpositions, System};
use remetric::Error;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{num, Output, Table};
use crate::system::{load_permutations, load_system};
use crate::{BuildArgs, CheckArgs, Condition, DemoArgs, DemoName, EnvelopeArgs, Globals, Preset, RemetrizeArgs};

/// Exhaustive word lists longer than this are replaced by a seeded sample.
const MAX_EXHAUSTIVE_WORDS: usize = 200_000;
const DEFAULT_SAMPLE: usize = 10_000;

fn parse_list(flag: &str, raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Input(format!("--{flag}: not a number: {s:?}")))
        })
        .collect()
}

fn parse_window(raw: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Input(format!("--window: expected lo:hi, got {raw:?}"));
    let (lo, hi) = raw.split_once(':').ok_or_else(bad)?;
    Ok((lo.trim().parse().map_err(|_| bad())?, hi.trim().parse().map_err(|_| bad())?))
}

fn growth(spec: &str) -> Result<GrowthSequence<f64>, CliError> {
    Ok(parse_growth_spec(spec)?)
}

/// Builds the envelope, shortening the horizon to the length of an explicit list.
fn envelope_for(a: &GrowthSequence<f64>, horizon: usize) -> Result<Envelope<f64>, CliError> {
    let horizon = a.len_limit().map_or(horizon, |l| l.min(horizon));
    Ok(build_envelope(a, horizon)?)
}

fn omega(spec: &str, horizon: usize) -> Result<ModulusSequence<f64>, CliError> {
    Ok(ModulusSpec::<f64>::parse(spec)?.to_sequence(horizon))
}

fn pair_label(space: &FiniteMetricSpace<f64>, pair: Option<(usize, usize)>) -> String {
    match pair {
        Some((i, j)) => format!("({}, {})", space.labels()[i], space.labels()[j]),
        None => String::new(),
    }
}

fn join(table: &[usize]) -> String {
    table.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn envelope(g: &Globals, args: &EnvelopeArgs) -> Result<(), CliError> {
    let a = growth(&args.a)?;
    let env = envelope_for(&a, args.horizon)?;
    let horizon = env.horizon();
    let limit = args.limit.unwrap_or(horizon).min(horizon);
    let sub = verify_submultiplicative(&env, limit, g.tol)?;
    let mut t = Table::new("envelope", &["n", "a_n", "nu", "b_n"]);
    for n in 1..=horizon {
        t.push(vec![
            n.to_string(),
            num(a.value(n).unwrap_or(f64::NAN)),
            env.block_of(n).map_or_else(String::new, |v| v.to_string()),
            num(env.get(n).unwrap_or(f64::NAN)),
        ]);
    }
    let report = json!({
        "command": "envelope",
        "parameters": {"a": args.a, "horizon": horizon, "limit": limit, "tol": g.tol},
        "c": env.c(),
        "blocks": env.blocks(),
        "saturated": env.is_saturated(),
        "submultiplicative": sub,
        "passed": sub.passed(),
    });
    Output::new(g.out.clone())?.emit(&[t], &[], &report)?;
    match sub.first_violation {
        Some((n, m, lhs, rhs)) => Err(CliError::Verification(format!(
            "b_{{{n}+{m}}} = {lhs} exceeds b_{n}·b_{m} = {rhs}"
        ))),
        None => Ok(()),
    }
}

struct Pipeline {
    r: Remetrization<f64>,
    conclusion: ConclusionReport<f64>,
}

fn audit(space: &FiniteMetricSpace<f64>, tol: f64) -> Result<Value, CliError> {
    let report = validate_metric(space, tol);
    if let Some(v) = &report.violation {
        return Err(CliError::Input(format!("input distances are not a metric: {v:?}")));
    }
    Ok(serde_json::to_value(report).expect("serializable"))
}

fn run_pipeline(g: &Globals, sys: &System<f64>, b: &BuildArgs, max_n: usize, audited: bool) -> Result<(Pipeline, Value), CliError> {
    let check = if audited || b.audit {
        audit(&sys.space, g.tol)?
    } else {
        Value::String("skipped for built-in system".into())
    };
    let base = bound_metric(&sys.space, sys.c)?;
    let env = envelope_for(&growth(&b.a)?, b.horizon)?;
    let opts = BuildOptions {
        table_budget: g.table_budget,
        tol: g.tol,
    };
    let r = build_dhat(&base, &sys.family, &env, sys.c, &opts)?;
    let moduli = omega(&b.omega, max_n.max(1))?;
    let conclusion = verify_conclusion(&r, &moduli, max_n, g.tol)?;
    Ok((Pipeline { r, conclusion }, check))
}

fn lipschitz_table(p: &Pipeline) -> Table {
    let mut t = Table::new("lipschitz", &["n", "b_n", "ln(n+2)", "empirical_worst_ratio", "witness"]);
    for row in &p.conclusion.rows {
        t.push(vec![
            row.m.to_string(),
            num(row.b_m),
            num(((row.m + 2) as f64).ln()),
            num(row.worst_ratio),
            pair_label(p.r.dhat(), row.witness),
        ]);
    }
    t
}

fn elements_table(p: &Pipeline, tol: f64) -> Result<(Table, bool), CliError> {
    let bounds = element_bounds(&p.r, tol)?;
    let mut t = Table::new("elements", &["table", "word_length", "lipschitz", "b", "within_envelope"]);
    let mut ok = true;
    for e in &bounds {
        ok &= e.within_envelope;
        t.push(vec![
            join(&e.table),
            e.word_length.to_string(),
            num(e.lipschitz),
            num(e.b),
            e.within_envelope.to_string(),
        ]);
    }
    Ok((t, ok))
}

fn build_report(command: &str, sys: &System<f64>, b: &BuildArgs, max_n: usize, p: &Pipeline, audit: Value) -> Value {
    json!({
        "command": command,
        "parameters": {
            "system": sys.name,
            "points": sys.space.len(),
            "generators": sys.family.generators().iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>(),
            "inverse_closed": sys.family.is_inverse_closed(),
            "a": b.a,
            "c": sys.c,
            "horizon": p.r.envelope().horizon(),
            "omega": b.omega,
            "max_n": max_n,
        },
        "metric_audit": audit,
        "certificate": p.r.certificate(),
        "conclusion": p.conclusion,
    })
}

fn conclusion_verdict(p: &Pipeline) -> Result<(), CliError> {
    match p.conclusion.rows.iter().find(|r| !(r.within_envelope && r.within_c && r.admits_modulus)) {
        None => Ok(()),
        Some(row) => Err(CliError::Verification(format!(
            "F^{}: worst ratio {} against b = {} at {}",
            row.m,
            num(row.worst_ratio),
            num(row.b_m),
            pair_label(p.r.dhat(), row.witness)
        ))),
    }
}

fn is_builtin(spec: &str) -> bool {
    matches!(spec.split_once(':'), Some(("tent" | "rotation" | "group", _)))
}

type Extra<'a> = &'a dyn Fn(&Remetrization<f64>) -> Result<Vec<Table>, CliError>;

fn remetrize_system(g: &Globals, command: &str, sys: System<f64>, b: &BuildArgs, max_n: usize, audited: bool, extra: Extra) -> Result<(), CliError> {
    let (p, audit) = run_pipeline(g, &sys, b, max_n, audited)?;
    let mut tables = vec![lipschitz_table(&p)];
    let mut report = build_report(command, &sys, b, max_n, &p, audit);
    let mut elements_ok = true;
    if sys.family.is_inverse_closed() {
        let (t, ok) = elements_table(&p, g.tol)?;
        elements_ok = ok;
        tables.push(t);
        report["elements_within_envelope"] = json!(ok);
    }
    tables.extend(extra(&p.r)?);
    let passed = p.conclusion.passed() && elements_ok;
    report["passed"] = json!(passed);
    Output::new(g.out.clone())?.emit(&tables, &[("dhat", p.r.dhat())], &report)?;
    conclusion_verdict(&p)?;
    if !elements_ok {
        return Err(CliError::Verification("an element exceeds b at its word length".into()));
    }
    Ok(())
}

pub fn remetrize(g: &Globals, args: &RemetrizeArgs) -> Result<(), CliError> {
    let sys = load_system(&args.system, args.build.c)?;
    remetrize_system(g, "remetrize", sys, &args.build, args.max_n, !is_builtin(&args.system), &|_| Ok(Vec::new()))
}

pub fn check(g: &Globals, args: &CheckArgs) -> Result<(), CliError> {
    match args.condition {
        Condition::Iv => check_iv(g, args),
        Condition::Phi => check_phi(g, args),
        Condition::TentWitness => check_tent_witness(g, args),
    }
}

fn check_iv(g: &Globals, args: &CheckArgs) -> Result<(), CliError> {
    let t_grid = parse_list("t-grid", &args.t_grid)?;
    let (lo, hi) = parse_window(&args.window)?;
    let seq = omega(&args.omega, hi)?;
    let rep = check_condition_iv(&seq, args.c, &t_grid, lo..=hi)?;
    let mut t = Table::new("condition_iv", &["t", "window_inf", "argmin", "exceeds_c"]);
    for row in &rep.rows {
        t.push(vec![num(row.t), num(row.window_inf), row.argmin.to_string(), row.exceeds_c.to_string()]);
    }
    let report = json!({
        "command": "check",
        "parameters": {"condition": "iv", "omega": args.omega, "c": args.c, "t_grid": t_grid, "window": [lo, hi]},
        "result": rep,
    });
    Output::new(g.out.clone())?.emit(&[t], &[], &report)?;
    match rep.verdict {
        Verdict::Supported => Ok(()),
        Verdict::Refuted => Err(CliError::Verification(match rep.derivative_failure {
            Some((n, d)) => format!("omega_{n}'(0) = {} is not > 1", num(d)),
            None => format!("some window infimum does not exceed c = {}", num(args.c)),
        })),
    }
}

fn check_phi(g: &Globals, args: &CheckArgs) -> Result<(), CliError> {
    let seq = omega(&args.omega, args.horizon)?;
    let phi = construct_phi(&seq, args.c, args.horizon, &TailWitness::Monotone)?;
    let mut t = Table::new("phi", &["n", "block", "alpha", "beta", "omega_n(c/m)"]);
    for n in 1..=phi.horizon() {
        let p = phi.phi(n).expect("within horizon");
        let block = phi.block_of(n);
        let at_cut = match block {
            Some(m) => num(seq.get(n)?.eval(args.c / m as f64)?),
            None => String::new(),
        };
        t.push(vec![
            n.to_string(),
            block.map_or_else(String::new, |m| m.to_string()),
            num(p.derivative_at_zero()),
            num(p.supremum()),
            at_cut,
        ]);
    }
    let report = json!({
        "command": "check",
        "parameters": {"condition": "phi", "omega": args.omega, "c": args.c, "horizon": args.horizon},
        "thresholds": phi.thresholds,
        "c_tilde": phi.c_tilde,
    });
    Output::new(g.out.clone())?.emit(&[t], &[], &report)
}

fn refutation_table(r: &Remetrization<f64>, ns: impl Iterator<Item = usize>) -> Result<(Table, Vec<Value>), CliError> {
    let mut t = Table::new(
        "refutation",
        &["n", "j", "pair", "image", "before", "after", "ratio", "margin", "b_n"],
    );
    let mut found = Vec::new();
    for n in ns {
        match tent_one_lipschitz_refutation(r, n) {
            Ok(w) => {
                let d = r.dhat();
                t.push(vec![
                    n.to_string(),
                    w.j.to_string(),
                    pair_label(d, Some(w.pair)),
                    pair_label(d, Some(w.image)),
                    num(w.before),
                    num(w.after),
                    num(w.ratio),
                    num(w.margin),
                    num(w.b_n),
                ]);
                found.push(serde_json::to_value(&w).expect("serializable"));
            }
            Err(Error::GridTooCoarse { .. }) => found.push(json!({"n": n, "witness": null})),
            Err(e) => return Err(e.into()),
        }
    }
    Ok((t, found))
}

fn check_tent_witness(g: &Globals, args: &CheckArgs) -> Result<(), CliError> {
    if !args.system.starts_with("tent:") {
        return Err(CliError::Input(format!("tent-witness needs a tent:<L> system, got {}", args.system)));
    }
    let sys = load_system(&args.system, Some(args.c))?;
    let env = envelope_for(&growth(&args.a)?, 4096)?;
    let opts = BuildOptions {
        table_budget: g.table_budget,
        tol: g.tol,
    };
    let base = bound_metric(&sys.space, sys.c)?;
    let r = build_dhat(&base, &sys.family, &env, sys.c, &opts)?;
    let moduli = omega(&args.omega, args.n.max(1))?;
    let rows = tent_witness_inequalities(&r, &moduli, args.n, g.tol)?;
    let mut t = Table::new("tent_witness", &["n", "t_n", "omega_n(t_n)", "d(0,1)", "holds"]);
    for row in &rows {
        t.push(vec![row.n.to_string(), num(row.t_n), num(row.omega_t_n), num(row.d01), row.holds.to_string()]);
    }
    let (rt, found) = refutation_table(&r, std::iter::once(args.n))?;
    let report = json!({
        "command": "check",
        "parameters": {"condition": "tent-witness", "system": sys.name, "n": args.n, "a": args.a, "omega": args.omega, "c": sys.c},
        "certificate": r.certificate(),
        "inequalities": rows,
        "refutation": found,
    });
    Output::new(g.out.clone())?.emit(&[t, rt], &[], &report)?;
    match rows.iter().find(|r| !r.holds) {
        Some(row) => Err(CliError::Verification(format!(
            "d(0,1) = {} exceeds omega_{}(t_n) = {}",
            num(row.d01),
            row.n,
            num(row.omega_t_n)
        ))),
        None => Ok(()),
    }
}

pub fn demo(g: &Globals, args: &DemoArgs) -> Result<(), CliError> {
    let b = &args.build;
    match args.name {
        DemoName::Tent => {
            let sys = make_tent_system(args.level, b.c.unwrap_or(1.0))?;
            let max_n = args.max_n.unwrap_or(12);
            let top = 3.min(args.level as usize);
            let extra = |r: &Remetrization<f64>| Ok(vec![refutation_table(r, 1..=top)?.0]);
            remetrize_system(g, "demo tent", sys, b, max_n, false, &extra)
        }
        DemoName::Rotation => {
            let sys = make_rotation_system(args.q, b.c.unwrap_or(1.0))?;
            remetrize_system(g, "demo rotation", sys, b, args.max_n.unwrap_or(6), false, &|_| Ok(Vec::new()))
        }
        DemoName::Group => {
            let perms = match &args.perms {
                Some(path) => load_permutations(path)?,
                None => match args.preset {
                    Preset::S3 => s3_adjacent_transpositions(),
                    Preset::S3All => s3_all_transpositions(),
                },
            };
            let sys = make_group_system(perms, b.c.unwrap_or(1.0))?;
            remetrize_system(g, "demo group", sys, b, args.max_n.unwrap_or(3), args.perms.is_some(), &|_| Ok(Vec::new()))
        }
        DemoName::Counterexample => counterexample(g, args),
    }
}

fn interval_cells(u: &VerticalInterval) -> [String; 3] {
    [u.line.to_string(), num(u.lo), num(u.hi)]
}

fn case_name(c: CexCase) -> &'static str {
    match c {
        CexCase::FarLine => "far_line",
        CexCase::LargeIndex => "large_index",
        CexCase::SmallIndex => "small_index",
    }
}

fn counterexample(g: &Globals, args: &DemoArgs) -> Result<(), CliError> {
    let point = CexPoint::new(1, 0.0)?;
    let letters = alphabet(args.bound);
    let len = certificate_word_length(args.k);
    let exhaustive = (letters.len() as f64).powi(len as i32);
    let sample = args
        .sample
        .or((exhaustive > MAX_EXHAUSTIVE_WORDS as f64).then_some(DEFAULT_SAMPLE));
    let words = match sample {
        Some(count) => sample_words(&mut ChaCha8Rng::seed_from_u64(g.seed), &letters, len, count),
        None => all_words(&letters, len),
    };
    let cert = cex_equicontinuity_certificate(args.k, point, args.eps, &words)?;
    let deltas = parse_list("deltas", &args.deltas)?;
    let witness = cex_nonequicontinuity_witness(args.k, args.eps, &deltas)?;

    let mut ct = Table::new(
        "certificate",
        &["word", "line", "lo", "hi", "diameter", "top_index", "case", "passed"],
    );
    for w in &cert.words {
        let [line, lo, hi] = interval_cells(&w.image);
        ct.push(vec![
            w.word.clone(),
            line,
            lo,
            hi,
            num(w.diameter),
            w.top_index.to_string(),
            case_name(w.case).into(),
            w.passed.to_string(),
        ]);
    }
    let mut wt = Table::new("witness", &["delta", "m", "line", "lo", "hi", "diameter", "exceeds_eps"]);
    for row in &witness.rows {
        let [line, lo, hi] = interval_cells(&row.image);
        wt.push(vec![
            num(row.delta),
            row.m.to_string(),
            line,
            lo,
            hi,
            num(row.diameter),
            row.exceeds_eps.to_string(),
        ]);
    }
    let mut st = Table::new("summary", &["k", "eps", "n_bound", "delta", "words", "far_line", "large_index", "small_index", "passed"]);
    st.push(vec![
        args.k.to_string(),
        num(args.eps),
        cert.n_bound.to_string(),
        num(cert.delta),
        cert.words.len().to_string(),
        cert.case_counts[0].to_string(),
        cert.case_counts[1].to_string(),
        cert.case_counts[2].to_string(),
        cert.passed().to_string(),
    ]);
    let report = json!({
        "command": "demo counterexample",
        "parameters": {
            "k": args.k,
            "eps": args.eps,
            "bound": args.bound,
            "point": point,
            "word_length": len,
            "sampled": sample,
            "seed": g.seed,
            "deltas": deltas,
        },
        "equicontinuity": {
            "n_bound": cert.n_bound,
            "delta": cert.delta,
            "words_checked": cert.words.len(),
            "case_counts": {
                "far_line": cert.case_counts[0],
                "large_index": cert.case_counts[1],
                "small_index": cert.case_counts[2],
            },
            "passed": cert.passed(),
        },
        "non_equicontinuity": witness,
        "passed": cert.passed() && witness.passed(),
    });
    Output::new(g.out.clone())?.emit(&[st, ct, wt], &[], &report)?;
    if let Some(w) = cert.words.iter().find(|w| !w.passed) {
        return Err(CliError::Verification(format!(
            "word {} spreads the δ-interval to diameter {}",
            w.word,
            num(w.diameter)
        )));
    }
    if let Some(row) = witness.rows.iter().find(|r| !r.exceeds_eps) {
        return Err(CliError::Verification(format!("δ = {}: g_{} stays within ε", num(row.delta), row.m)));
    }
    Ok(())
}
