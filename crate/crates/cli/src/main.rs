use std::fmt::Write as _;
use std::io::Write as _;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use divcorr::correlation::{
    compare_spectral, correlate_grid, csv_row, fit_exponent, fmt_float, normalized_ratio,
    psi_normalized, CSV_HEADER,
};
use divcorr::diophantine::{
    approximability_scan, cf_expand_prefix, construct_jarnik_prefix, construct_tau_beta,
    convergents, decide_hit, irrationality_base_estimate, nearest_distance, ContinuedFraction,
    ThetaSpec, DEFAULT_BIT_BUDGET,
};
use divcorr::divisor::{delta_sample, sieve_tau};
use divcorr::realfield::{BigReal, PsiFunction};
use divcorr::verify::{convergent_checks, run_suite, Check, Suite};
use divcorr::voronoi::q_n;
use divcorr::Error;

const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Version of the CSV/JSON layouts.
const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(
    name = "divcorr",
    version,
    about = "Divisor-problem correlations, continued fractions and Diophantine scans"
)]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunConfig {
    /// Working precision in bits for certified real arithmetic.
    #[arg(long, global = true, env = "DIVCORR_PRECISION", default_value_t = 256,
          value_parser = clap::value_parser!(u32).range(16..=(1 << 22)))]
    precision: u32,
    /// Worker threads; 0 uses every core. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for the sampled checks of `verify`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Δ(x) from the exact divisor sum, optionally against the Voronoï truncation Q_N(x).
    Delta {
        #[arg(long)]
        x: f64,
        #[arg(long = "voronoi-n")]
        voronoi_n: Option<usize>,
    },
    /// Continued fraction, convergents and ‖m_k θ‖ of θ, or a constructed Liouville number.
    Cf {
        #[arg(
            long,
            required_unless_present = "construct",
            conflicts_with = "construct"
        )]
        theta: Option<ThetaSpec>,
        /// Number of partial quotients, a_0 included.
        #[arg(long, default_value_t = 10)]
        terms: usize,
        /// `jarnik:<psi>:K` or `taubeta:a/b:depth`.
        #[arg(long)]
        construct: Option<ThetaSpec>,
    },
    /// I_θ(X) on a geometric grid of X values.
    Correlate {
        #[arg(long)]
        theta: ThetaSpec,
        #[arg(long)]
        xmin: f64,
        #[arg(long)]
        xmax: f64,
        #[arg(long, default_value_t = 12)]
        points: usize,
        /// Fit log|I| against log X.
        #[arg(long)]
        fit: bool,
        /// Add the column I·ψ⁻¹(X^{1/4})^{3/2}/X^{3/2}.
        #[arg(long)]
        psi: Option<PsiFunction>,
    },
    /// Built-in self-check suites.
    Verify {
        #[arg(long, value_enum)]
        suite: SuiteArg,
    },
    /// I_θ(X) against the spectral sum J_θ(X).
    Spectral {
        #[arg(long)]
        theta: ThetaSpec,
        #[arg(long)]
        x: f64,
        /// Sets the cutoff T from ψ; without it T = ∞.
        #[arg(long)]
        psi: Option<PsiFunction>,
        /// Override N = X^{3/4}.
        #[arg(long)]
        n: Option<f64>,
        /// Override the cutoff T.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Every m ≤ M with ‖mθ‖ < 1/ψ(m), plus the convergent denominators.
    Scan {
        #[arg(long)]
        theta: ThetaSpec,
        #[arg(long)]
        psi: PsiFunction,
        #[arg(long)]
        bound: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SuiteArg {
    Cf,
    Legendre,
    Lambda,
    Spectral,
    Tong,
    All,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Delta { .. } => "delta",
            Command::Cf { .. } => "cf",
            Command::Correlate { .. } => "correlate",
            Command::Verify { .. } => "verify",
            Command::Spectral { .. } => "spectral",
            Command::Scan { .. } => "scan",
        }
    }
}

/// What a command produced: CSV lines or a JSON value, plus the failure that
/// ended it, if any. Partial output is still printed.
struct Report {
    csv: Vec<String>,
    json: Map<String, Value>,
    failure: Option<Failure>,
}

enum Failure {
    Error(Error),
    Checks(usize),
}

impl Report {
    fn new() -> Self {
        Report {
            csv: Vec::new(),
            json: Map::new(),
            failure: None,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) | Error::Parse { .. } | Error::Validation(_) | Error::Infeasible(_) => 2,
        Error::InsufficientData { .. } => 1,
        Error::Resource { .. } => 3,
        Error::PrecisionExhausted { .. } => 4,
    }
}

/// JSON number, or a string when |v| ≥ 10^15 or v is not finite.
fn jnum(v: f64) -> Value {
    if v.is_finite() && v.abs() < 1e15 {
        json!(v)
    } else {
        Value::String(fmt_float(v))
    }
}

fn jint(v: &BigInt) -> Value {
    match i64::try_from(v) {
        Ok(i) if i.unsigned_abs() < 1_000_000_000_000_000 => json!(i),
        _ => Value::String(v.to_string()),
    }
}

fn header(config: &RunConfig, command: &str) -> String {
    format!(
        "# divcorr {VERSION} schema={SCHEMA} command={command} precision_bits={} out_format={} seed={}",
        config.precision,
        match config.format {
            Format::Csv => "csv",
            Format::Json => "json",
        },
        config.seed
    )
}

fn json_header(config: &RunConfig, command: &str) -> Value {
    json!({
        "divcorr_version": VERSION,
        "schema": SCHEMA,
        "command": command,
        "config": {
            "precision_bits": config.precision,
            "out_format": match config.format { Format::Csv => "csv", Format::Json => "json" },
            "seed": config.seed,
        },
    })
}

/// Writes `text` and a newline to stdout; a reader that closed the pipe early
/// is not an error.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}").and_then(|_| out.flush()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: writing output: {e}");
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.config.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.config.threads)
            .build_global()
        {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::from(3);
        }
    }
    let name = cli.command.name();
    let report = match run(&cli.command, &cli.config) {
        Ok(r) => r,
        Err(e) => {
            let mut r = Report::new();
            r.failure = Some(Failure::Error(e));
            r
        }
    };
    match cli.config.format {
        Format::Csv => {
            let mut out = header(&cli.config, name);
            for line in &report.csv {
                out.push('\n');
                out.push_str(line);
            }
            emit(&out);
        }
        Format::Json => {
            let mut doc = json_header(&cli.config, name);
            let obj = doc.as_object_mut().expect("object");
            obj.insert("data".into(), Value::Object(report.json));
            if let Some(Failure::Error(e)) = &report.failure {
                obj.insert("error".into(), Value::String(e.to_string()));
            }
            emit(&serde_json::to_string_pretty(&doc).expect("serializable"));
        }
    }
    match report.failure {
        None => ExitCode::SUCCESS,
        Some(Failure::Checks(n)) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(1)
        }
        Some(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: &Command, config: &RunConfig) -> Result<Report, Error> {
    match command {
        Command::Delta { x, voronoi_n } => cmd_delta(*x, *voronoi_n),
        Command::Cf {
            theta,
            terms,
            construct,
        } => match (theta, construct) {
            (_, Some(c)) => cmd_construct(c, config.precision),
            (Some(t), None) => cmd_cf(t, *terms, config.precision),
            (None, None) => unreachable!("clap requires one of --theta, --construct"),
        },
        Command::Correlate {
            theta,
            xmin,
            xmax,
            points,
            fit,
            psi,
        } => cmd_correlate(theta, *xmin, *xmax, *points, *fit, psi.as_ref()),
        Command::Verify { suite } => cmd_verify(*suite, config.seed),
        Command::Spectral {
            theta,
            x,
            psi,
            n,
            t,
        } => cmd_spectral(theta, *x, psi.as_ref(), *n, *t),
        Command::Scan { theta, psi, bound } => cmd_scan(theta, psi, *bound),
    }
}

fn cmd_delta(x: f64, voronoi_n: Option<usize>) -> Result<Report, Error> {
    let s = delta_sample(x)?;
    let mut r = Report::new();
    r.json.insert("x".into(), jnum(x));
    r.json.insert("D".into(), jint(&BigInt::from(s.d_value)));
    r.json.insert("delta".into(), jnum(s.delta));
    match voronoi_n {
        None => {
            r.csv.push("x,D,delta".into());
            r.csv.push(format!(
                "{},{},{}",
                fmt_float(x),
                s.d_value,
                fmt_float(s.delta)
            ));
        }
        Some(n) => {
            let table = sieve_tau(n)?;
            let q = q_n(x, n, &table)?;
            let gap = (s.delta - q).abs();
            r.csv.push("x,D,delta,N,Q_N,abs_gap".into());
            r.csv.push(format!(
                "{},{},{},{n},{},{}",
                fmt_float(x),
                s.d_value,
                fmt_float(s.delta),
                fmt_float(q),
                fmt_float(gap)
            ));
            r.json.insert("N".into(), json!(n));
            r.json.insert("Q_N".into(), jnum(q));
            r.json.insert("abs_gap".into(), jnum(gap));
        }
    }
    Ok(r)
}

/// ‖mθ‖ as a double and its log2, or "uncertified" when the ball around θ
/// cannot separate mθ from the nearest integer.
fn distance_cells(theta: &ThetaSpec, m: &BigInt) -> Result<(String, String, Value, Value), Error> {
    let d = nearest_distance(theta, m)?;
    if d.sign() != Some(std::cmp::Ordering::Greater) {
        let u = Value::String("uncertified".into());
        return Ok(("uncertified".into(), "uncertified".into(), u.clone(), u));
    }
    let lg = d.log2_abs();
    Ok((
        fmt_float(d.to_f64()),
        fmt_float(lg),
        jnum(d.to_f64()),
        jnum(lg),
    ))
}

fn convergent_table(
    r: &mut Report,
    theta: &ThetaSpec,
    cf: &ContinuedFraction,
) -> Result<(), Error> {
    r.csv.push("k,a_k,n_k,m_k,dist_m_k_theta,log2_dist".into());
    let mut rows = Vec::new();
    for c in convergents(cf) {
        let (d, lg, dj, lgj) = distance_cells(theta, &c.m)?;
        let a = cf.term(c.k);
        r.csv.push(format!("{},{a},{},{},{d},{lg}", c.k, c.n, c.m));
        rows.push(json!({
            "k": c.k, "a_k": jint(a), "n_k": jint(&c.n), "m_k": jint(&c.m),
            "dist_m_k_theta": dj, "log2_dist": lgj,
        }));
    }
    r.json.insert("convergents".into(), Value::Array(rows));
    Ok(())
}

fn checks_section(r: &mut Report, checks: &[Check]) {
    let mut failed = 0;
    let mut rows = Vec::new();
    for c in checks {
        r.csv.push(format!("# {c}"));
        failed += (!c.pass) as usize;
        rows.push(json!({"name": c.name, "measured": c.measured, "threshold": c.threshold, "pass": c.pass}));
    }
    r.json.insert("checks".into(), Value::Array(rows));
    if failed > 0 && r.failure.is_none() {
        r.failure = Some(Failure::Checks(failed));
    }
}

fn base_section(r: &mut Report, cf: &ContinuedFraction) {
    match irrationality_base_estimate(cf) {
        Ok(b) => {
            r.csv.push(format!(
                "# irrationality_base_estimate {} in [{}, {}] at k={}",
                fmt_float(b.estimate),
                fmt_float(b.lower),
                fmt_float(b.upper),
                b.index
            ));
            r.json.insert(
                "irrationality_base".into(),
                json!({"estimate": jnum(b.estimate), "lower": jnum(b.lower), "upper": jnum(b.upper), "k": b.index}),
            );
        }
        Err(e) => r
            .csv
            .push(format!("# irrationality_base_estimate unavailable: {e}")),
    }
}

fn cmd_cf(theta: &ThetaSpec, terms: usize, precision: u32) -> Result<Report, Error> {
    theta.require_irrational()?;
    if terms < 2 {
        return Err(Error::Domain("--terms must be ≥ 2".into()));
    }
    // `terms` counts a_0.
    let k = terms - 1;
    let mut r = Report::new();
    let (cf, stop) = match theta {
        ThetaSpec::Jarnik { psi, depth } => {
            let (cf, e) = construct_jarnik_prefix(psi, k.min(*depth), DEFAULT_BIT_BUDGET)?;
            (Some(cf), e)
        }
        ThetaSpec::Surd(_) | ThetaSpec::Golden | ThetaSpec::CfLiteral(_) => {
            (Some(theta.continued_fraction(k, precision)?), None)
        }
        _ => cf_expand_prefix(&theta.ball(precision)?, k),
    };
    r.json
        .insert("theta".into(), Value::String(theta.to_string()));
    if let Some(cf) = &cf {
        r.csv.push(format!("# theta {theta} = {cf}"));
        r.json
            .insert("continued_fraction".into(), Value::String(cf.to_string()));
        convergent_table(&mut r, theta, cf)?;
        let ball = theta.ball(precision)?;
        let prefix_only = matches!(theta, ThetaSpec::Jarnik { .. });
        checks_section(
            &mut r,
            &convergent_checks(&theta.to_string(), cf, &ball, prefix_only),
        );
        base_section(&mut r, cf);
    }
    if let Some(e) = stop {
        r.failure = Some(Failure::Error(e));
    }
    Ok(r)
}

fn cmd_construct(target: &ThetaSpec, precision: u32) -> Result<Report, Error> {
    let mut r = Report::new();
    r.json
        .insert("construct".into(), Value::String(target.to_string()));
    match target {
        ThetaSpec::TauBeta { a, b, depth } => {
            let c = construct_tau_beta(*a, *b, *depth, precision)?;
            let exps: Vec<String> = c.exponents.iter().map(|e| e.to_string()).collect();
            r.csv.push(format!(
                "# taubeta {a}/{b} partial sum of {depth} terms, exponents {}",
                exps.join(" ")
            ));
            r.csv.push("exact,decimal,double".into());
            let dec = exact_decimal(c.exact.numer(), c.exact.denom(), precision as usize);
            r.csv
                .push(format!("{},{dec},{}", c.exact, fmt_float(c.value.to_f64())));
            r.json.insert(
                "exponents".into(),
                Value::Array(c.exponents.iter().map(jint).collect()),
            );
            r.json
                .insert("exact".into(), Value::String(c.exact.to_string()));
            r.json.insert("decimal".into(), Value::String(dec));
            r.json.insert("double".into(), jnum(c.value.to_f64()));
            Ok(r)
        }
        ThetaSpec::Jarnik { psi, depth } => {
            let (cf, stop) = construct_jarnik_prefix(psi, *depth, DEFAULT_BIT_BUDGET)?;
            let built = ThetaSpec::Jarnik {
                psi: psi.clone(),
                depth: cf.depth(),
            };
            r.csv.push(format!(
                "# jarnik {psi}: {cf} ({} of {depth} quotients)",
                cf.depth()
            ));
            r.json
                .insert("continued_fraction".into(), Value::String(cf.to_string()));
            if cf.depth() >= 1 {
                let ball = built.ball(precision)?;
                hit_table(&mut r, &ball, psi, &cf)?;
                checks_section(
                    &mut r,
                    &convergent_checks(&built.to_string(), &cf, &ball, true),
                );
            }
            if let Some(e) = stop {
                r.failure = Some(Failure::Error(e));
            }
            Ok(r)
        }
        other => Err(Error::Validation(format!(
            "--construct takes jarnik:<psi>:K or taubeta:a/b:depth, got {other}"
        ))),
    }
}

/// ‖m_kθ‖ against 1/ψ(m_k) for k < K, from the ball the K-term prefix
/// determines.
fn hit_table(
    r: &mut Report,
    ball: &BigReal,
    psi: &PsiFunction,
    cf: &ContinuedFraction,
) -> Result<(), Error> {
    r.csv.push("k,a_k,m_k,log2_dist,log2_inv_psi,hit".into());
    let mut rows = Vec::new();
    let c = convergents(cf);
    for cv in &c[..c.len() - 1] {
        let d = ball.mul_int(&cv.m).nearest_int_distance();
        let lg = d.log2_abs();
        let thr = -psi.ln_eval(cv.m.to_f64().unwrap_or(f64::INFINITY)) / std::f64::consts::LN_2;
        let hit = match decide_hit(&d, psi, &cv.m)? {
            Some(true) => "true",
            Some(false) => "false",
            None => "undecided",
        };
        r.csv.push(format!(
            "{},{},{},{},{},{hit}",
            cv.k,
            cf.term(cv.k),
            cv.m,
            fmt_float(lg),
            fmt_float(thr)
        ));
        rows.push(
            json!({"k": cv.k, "a_k": jint(cf.term(cv.k)), "m_k": jint(&cv.m),
                         "log2_dist": jnum(lg), "log2_inv_psi": jnum(thr), "hit": hit}),
        );
    }
    r.json.insert("hits".into(), Value::Array(rows));
    Ok(())
}

/// n/d in decimal, exact when the expansion terminates within `max_digits`
/// fractional digits, otherwise truncated and marked with a trailing `…`.
fn exact_decimal(n: &BigInt, d: &BigInt, max_digits: usize) -> String {
    let neg = n.sign() != d.sign() && !n.is_zero();
    let (n, d) = (n.magnitude().clone(), d.magnitude().clone());
    let int = &n / &d;
    let mut rem = &n % &d;
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    let _ = write!(out, "{int}");
    if rem == BigUint::zero() {
        return out;
    }
    out.push('.');
    for _ in 0..max_digits {
        rem *= 10u32;
        let digit = &rem / &d;
        rem %= &d;
        let _ = write!(out, "{digit}");
        if rem == BigUint::zero() {
            return out;
        }
    }
    out.push('…');
    out
}

fn cmd_correlate(
    theta: &ThetaSpec,
    xmin: f64,
    xmax: f64,
    points: usize,
    fit: bool,
    psi: Option<&PsiFunction>,
) -> Result<Report, Error> {
    let results = correlate_grid(theta, xmin, xmax, points)?;
    let mut r = Report::new();
    r.csv.push(match psi {
        Some(_) => format!("{CSV_HEADER},I_psi_normalized"),
        None => CSV_HEADER.to_string(),
    });
    let mut rows = Vec::new();
    for res in &results {
        let mut row = json!({
            "theta_spec": theta.to_string(), "X": jnum(res.x), "I": jnum(res.i),
            "I_over_X32": jnum(normalized_ratio(res)), "method": res.method.to_string(),
            "breakpoints_used": res.breakpoints_used,
        });
        let mut line = csv_row(res);
        if let Some(p) = psi {
            let v = psi_normalized(res, p)?;
            let _ = write!(line, ",{}", fmt_float(v));
            row["I_psi_normalized"] = jnum(v);
        }
        r.csv.push(line);
        rows.push(row);
    }
    r.json.insert("rows".into(), Value::Array(rows));
    if let Some(p) = psi {
        r.json.insert("psi".into(), Value::String(p.to_string()));
    }
    if fit {
        match fit_exponent(&results) {
            Ok(f) => {
                r.csv.push(format!(
                    "# fit slope={} intercept={} rms_residual={} points_used={} sign_changes={} dropped={}",
                    fmt_float(f.slope),
                    fmt_float(f.intercept),
                    fmt_float(f.rms_residual),
                    f.points_used,
                    f.sign_changes,
                    f.dropped
                ));
                r.json.insert(
                    "fit".into(),
                    json!({"slope": jnum(f.slope), "intercept": jnum(f.intercept),
                           "rms_residual": jnum(f.rms_residual), "points_used": f.points_used,
                           "sign_changes": f.sign_changes, "dropped": f.dropped}),
                );
            }
            Err(e) => r.failure = Some(Failure::Error(e)),
        }
    }
    Ok(r)
}

fn cmd_verify(suite: SuiteArg, seed: u64) -> Result<Report, Error> {
    let suites: Vec<Suite> = match suite {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Cf => vec![Suite::Cf],
        SuiteArg::Legendre => vec![Suite::Legendre],
        SuiteArg::Lambda => vec![Suite::Lambda],
        SuiteArg::Spectral => vec![Suite::Spectral],
        SuiteArg::Tong => vec![Suite::Tong],
    };
    let mut r = Report::new();
    let mut failed = 0;
    for s in suites {
        r.csv.push(format!("# suite {s}"));
        let checks = run_suite(s, seed)?;
        let mut rows = Vec::new();
        for c in &checks {
            r.csv.push(c.to_string());
            failed += (!c.pass) as usize;
            rows.push(json!({"name": c.name, "measured": c.measured, "threshold": c.threshold, "pass": c.pass}));
        }
        r.json.insert(s.to_string(), Value::Array(rows));
    }
    if failed > 0 {
        r.failure = Some(Failure::Checks(failed));
    }
    Ok(r)
}

fn cmd_spectral(
    theta: &ThetaSpec,
    x: f64,
    psi: Option<&PsiFunction>,
    n: Option<f64>,
    t: Option<f64>,
) -> Result<Report, Error> {
    let c = compare_spectral(theta, x, psi, n, t)?;
    let mut r = Report::new();
    r.csv.push("theta_spec,X,N,T,I_exact,J_total,D_lower,D_upper,count_lower,count_upper,discrepancy,discrepancy_over_X118".into());
    r.csv.push(format!(
        "{theta},{},{},{},{},{},{},{},{},{},{},{}",
        fmt_float(x),
        fmt_float(c.params.n),
        fmt_float(c.params.t),
        fmt_float(c.exact.i),
        fmt_float(c.spectral.j_total),
        fmt_float(c.spectral.d_lower),
        fmt_float(c.spectral.d_upper),
        c.spectral.count_lower,
        c.spectral.count_upper,
        fmt_float(c.discrepancy),
        fmt_float(c.scaled)
    ));
    for (k, v) in [
        ("X", jnum(x)),
        ("N", jnum(c.params.n)),
        ("T", jnum(c.params.t)),
        ("I_exact", jnum(c.exact.i)),
        ("J_total", jnum(c.spectral.j_total)),
        ("D_lower", jnum(c.spectral.d_lower)),
        ("D_upper", jnum(c.spectral.d_upper)),
        ("count_lower", json!(c.spectral.count_lower)),
        ("count_upper", json!(c.spectral.count_upper)),
        ("discrepancy", jnum(c.discrepancy)),
        ("discrepancy_over_X118", jnum(c.scaled)),
    ] {
        r.json.insert(k.into(), v);
    }
    r.json
        .insert("theta_spec".into(), Value::String(theta.to_string()));
    Ok(r)
}

fn cmd_scan(theta: &ThetaSpec, psi: &PsiFunction, bound: u64) -> Result<Report, Error> {
    theta.require_irrational()?;
    let s = approximability_scan(theta, psi, bound)?;
    let mut r = Report::new();
    r.csv
        .push(format!("# scan {theta} against {psi} for m ≤ {bound}"));
    r.csv.push("m,log2_dist,log2_inv_psi,hit,convergent".into());
    let mut rows = Vec::new();
    for e in &s.events {
        r.csv.push(format!(
            "{},{},{},{},{}",
            e.m,
            fmt_float(e.dist.log2_abs()),
            fmt_float(e.log2_threshold),
            e.hit,
            e.convergent
        ));
        rows.push(json!({"m": jint(&e.m), "log2_dist": jnum(e.dist.log2_abs()),
                         "log2_inv_psi": jnum(e.log2_threshold), "hit": e.hit, "convergent": e.convergent}));
    }
    let hits: Vec<String> = s.hits().map(|e| e.m.to_string()).collect();
    r.csv.push(format!(
        "# hits {} certified_through={} complete={} fast_path={}",
        if hits.is_empty() {
            "none".to_string()
        } else {
            hits.join(" ")
        },
        s.certified_through,
        s.complete,
        s.fast_path
    ));
    if let Some(v) = s.log2_inf_product() {
        r.csv.push(format!(
            "# min log2(‖m_k θ‖ψ(m_k)) over convergents {}",
            fmt_float(v)
        ));
    }
    r.json.insert("events".into(), Value::Array(rows));
    r.json
        .insert("certified_through".into(), jint(&s.certified_through));
    r.json.insert("complete".into(), json!(s.complete));
    r.json.insert("fast_path".into(), json!(s.fast_path));
    if let Some(e) = s.stopped {
        r.failure = Some(Failure::Error(e));
    }
    Ok(r)
}
