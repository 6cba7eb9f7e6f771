//! The four subcommands. Each builds a [`RunReport`] and prints it as text or
//! JSON.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use interscribe::cf::ConvergentTable;
use interscribe::circle::{CirclePair, IntegralSpec};
use interscribe::ellipse::{
    self, ellipse_from_weights, ellipse_ratio_scan, initial_chord, weights_from_ellipse, EllipseConfig, WeightSpec,
};
use interscribe::nr::{self, MatrixEntries, NRConfig, StartCase, TrajectoryState};
use interscribe::pipeline::{compute_theta, integral_from_polygons, ThetaConfig, ThetaOutcome};
use interscribe::precision::{agreement_digits, to_decimal};
use interscribe::report::{RunReport, Stage};
use interscribe::{oracle, BigComplex, Error, Precision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rug::Float;

use crate::config::{parse_count, ConfigFile};
use crate::{Common, EllipseArgs, NrArgs, ThetaArgs, VerifyArgs};

const THETA_DIGITS: u32 = 24;
const VERIFY_BUDGET: u64 = 20_000;
const VERIFY_SAMPLES: u64 = 6;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// Missing or contradictory inputs.
    Usage(String),
    /// A verification did not hold.
    Failed(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) => e.exit_code() as u8,
            CliError::Usage(_) => 2,
            CliError::Failed(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Failed(m) => write!(f, "verification failed: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<String> for CliError {
    fn from(m: String) -> Self {
        CliError::Usage(m)
    }
}

type CliResult<T> = Result<T, CliError>;

/// Flag values merged with the config file.
struct Settings {
    file: ConfigFile,
    json: bool,
    digits: Option<u32>,
}

impl Settings {
    fn new(common: &Common, subcommand: &str) -> CliResult<Self> {
        let file = ConfigFile::load(common.config.as_deref(), subcommand)?;
        let json = common.json || file.flag("json")?;
        let digits = match common.digits {
            Some(d) => Some(d),
            None => file.integer("digits")?.map(|d| d as u32),
        };
        Ok(Settings { file, json, digits })
    }

    fn string(&self, flag: &Option<String>, key: &str) -> CliResult<Option<String>> {
        match flag {
            Some(v) => Ok(Some(v.clone())),
            None => Ok(self.file.string(key)?),
        }
    }

    fn count(&self, flag: &Option<String>, key: &str) -> CliResult<Option<u64>> {
        match flag {
            Some(v) => Ok(Some(parse_count(v)?)),
            None => Ok(self.file.integer(key)?),
        }
    }

    fn switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.file.flag(key)?)
    }

    fn emit(&self, report: &RunReport) {
        if self.json {
            println!("{}", report.to_json());
        } else {
            print!("{}", report.to_text());
        }
    }
}

fn require(value: Option<String>, name: &str) -> CliResult<String> {
    value.ok_or_else(|| CliError::Usage(format!("--{name} is required")))
}

fn elapsed(start: Instant) -> String {
    format!("{:.3}", start.elapsed().as_secs_f64())
}

/// The last convergent as a decimal, with as many digits as the distance
/// 1/(q_n q_{n−1}) to the previous convergent resolves.
fn table_estimate(table: &ConvergentTable, cap: u32) -> Option<String> {
    let rows = table.rows();
    let last = rows.last()?;
    let resolved = match rows.len() {
        1 => 1,
        n => {
            let product = Float::with_val(64, &last.q) * Float::with_val(64, &rows[n - 2].q);
            (product.log10().to_f64().floor() as u32).clamp(1, cap)
        }
    };
    let bits = Precision::working(cap).bits();
    let value = Float::with_val(bits, &last.p) / Float::with_val(bits, &last.q);
    Some(to_decimal(&value, resolved as usize))
}

fn quotients(table: &ConvergentTable) -> Vec<String> {
    table.rows().iter().map(|r| r.a.to_string()).collect()
}

fn theta_stages(out: &ThetaOutcome) -> Vec<Stage> {
    let baby_records = out.records.len() - out.giant_sets.len();
    let baby_rows = out.records[..baby_records].iter().filter(|r| r.q > 1).count();
    let mut baby = Stage::new("baby", out.baby_steps);
    baby.partial_quotients = quotients(&out.table).into_iter().take(baby_rows).collect();
    let mut stages = vec![baby];
    if !out.giant_sets.is_empty() {
        let total: u64 = out.giant_sets.iter().map(|s| s.partial_quotient).sum();
        let mut giant = Stage::new("giant", total);
        giant.partial_quotients = out.giant_sets.iter().map(|s| s.partial_quotient.to_string()).collect();
        stages.push(giant);
    }
    stages
}

pub fn theta(args: ThetaArgs) -> CliResult<()> {
    let start = Instant::now();
    let s = Settings::new(&args.common, "theta")?;
    let digits = s.digits.unwrap_or(THETA_DIGITS);
    if digits == 0 {
        return Err(CliError::Usage("--digits must be positive".into()));
    }
    let verify = s.switch(args.verify, "verify")?;
    let mut cfg = ThetaConfig::new(digits);
    if let Some(budget) = s.count(&args.budget, "budget")? {
        cfg.baby_budget = budget;
    }
    let circle = (s.string(&args.c, "c")?, s.string(&args.r, "r")?);
    let integral = (s.string(&args.psi, "psi")?, s.string(&args.k2, "k2")?);

    let mut inputs = BTreeMap::new();
    inputs.insert("digits".to_string(), digits.to_string());
    let precision = Precision::working(digits);
    let mut extras = BTreeMap::new();
    let (pair, out) = match (circle, integral) {
        ((Some(c), Some(r)), (None, None)) => {
            inputs.insert("c".into(), c.clone());
            inputs.insert("r".into(), r.clone());
            let pair = CirclePair::from_decimal(&c, &r, precision)?;
            let out = compute_theta(&pair, &cfg)?;
            (pair, out)
        }
        ((None, None), (Some(psi), Some(k2))) => {
            inputs.insert("psi".into(), psi.clone());
            inputs.insert("k2".into(), k2.clone());
            let spec = IntegralSpec::new(precision.parse(&psi)?, precision.parse(&k2)?, digits)?;
            let integral = integral_from_polygons(&spec, &cfg)?;
            let d = digits as usize;
            extras.insert("c".into(), to_decimal(integral.pair.c(), d));
            extras.insert("r".into(), to_decimal(integral.pair.r(), d));
            extras.insert("beta".into(), to_decimal(&integral.beta, d));
            extras.insert("K".into(), to_decimal(&integral.complete, d));
            extras.insert("F".into(), to_decimal(&integral.incomplete, d));
            if verify {
                let direct = oracle::incomplete_f(&spec.psi, &spec.k2, digits + 5)?;
                extras.insert("F_oracle".into(), to_decimal(&direct, d));
                extras.insert(
                    "F_agreement_digits".into(),
                    agreement_digits(&integral.incomplete, &direct, digits).to_string(),
                );
            }
            (integral.pair, integral.theta)
        }
        _ => {
            return Err(CliError::Usage(
                "give either both --c and --r or both --psi and --k2".into(),
            ))
        }
    };

    let mut report = RunReport::new(inputs).with_table(&out.table);
    report.stages = theta_stages(&out);
    report.theta = Some(to_decimal(&out.theta, digits as usize));
    if let Some((p, q)) = &out.closure {
        extras.insert("closure".into(), format!("{p}/{q}"));
    }
    if verify {
        let reference = oracle::theta_circle(pair.c(), pair.r(), digits + 5)?;
        report.oracle_theta = Some(to_decimal(&reference, digits as usize));
        report.agreement_digits = Some(agreement_digits(&out.theta, &reference, digits));
    }
    report.extras = extras;
    report.elapsed_seconds = elapsed(start);
    s.emit(&report);
    Ok(())
}

/// Ellipse from the axes or from the weights, with the inputs echoed.
fn ellipse_config(
    s: &Settings,
    args: &EllipseArgs,
    precision: Precision,
    inputs: &mut BTreeMap<String, String>,
) -> CliResult<EllipseConfig> {
    let axes = [
        s.string(&args.a, "a")?,
        s.string(&args.b, "b")?,
        s.string(&args.c, "c")?,
    ];
    let weights = [
        s.string(&args.alpha0, "alpha0")?,
        s.string(&args.alpha1, "alpha1")?,
        s.string(&args.alpha2, "alpha2")?,
        s.string(&args.cos_psi1, "cos-psi1")?,
    ];
    let any_axis = axes.iter().any(Option::is_some);
    let any_weight = weights.iter().any(Option::is_some);
    match (any_axis, any_weight) {
        (true, false) => {
            let [a, b, c] = axes;
            let (a, b) = (require(a, "a")?, require(b, "b")?);
            let c = c.unwrap_or_else(|| "0".into());
            inputs.insert("a".into(), a.clone());
            inputs.insert("b".into(), b.clone());
            inputs.insert("c".into(), c.clone());
            Ok(EllipseConfig::from_decimal(&a, &b, &c, precision)?)
        }
        (false, true) => {
            let names = ["alpha0", "alpha1", "alpha2", "cos-psi1"];
            let mut values = Vec::with_capacity(4);
            for (value, name) in weights.into_iter().zip(names) {
                let text = require(value, name)?;
                values.push(precision.parse(&text)?);
                inputs.insert(name.into(), text);
            }
            let [alpha0, alpha1, alpha2, cos_psi1]: [Float; 4] = values.try_into().expect("four weights");
            let spec = WeightSpec {
                alpha0,
                alpha1,
                alpha2,
                cos_psi1,
            };
            Ok(ellipse_from_weights(&spec, precision)?)
        }
        _ => Err(CliError::Usage(
            "give either --a --b [--c] or --alpha0 --alpha1 --alpha2 --cos-psi1".into(),
        )),
    }
}

/// Oracle ratio of an ellipse and whether it lies between the last two
/// convergents of `table`.
fn ellipse_bracket(cfg: &EllipseConfig, table: &ConvergentTable, digits: u32) -> CliResult<(Float, bool)> {
    let w = weights_from_ellipse(cfg);
    let psi1 = Float::with_val(cfg.precision().bits(), w.cos_psi1.acos_ref());
    let reference = oracle::weighted_ratio([&w.alpha0, &w.alpha1, &w.alpha2], &psi1, digits)?;
    let rows = table.rows();
    if rows.len() < 2 {
        return Ok((reference, false));
    }
    let bits = reference.prec();
    let ratio = |i: usize| Float::with_val(bits, &rows[i].p) / Float::with_val(bits, &rows[i].q);
    let (x, y) = (ratio(rows.len() - 2), ratio(rows.len() - 1));
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    let inside = lo < reference && reference < hi;
    Ok((reference, inside))
}

pub fn ellipse(args: EllipseArgs) -> CliResult<()> {
    let start = Instant::now();
    let s = Settings::new(&args.common, "ellipse")?;
    let digits = s.digits.unwrap_or(ellipse::DEFAULT_DIGITS);
    let budget = s.count(&args.budget, "budget")?.unwrap_or(ellipse::DEFAULT_BUDGET);
    let verify = s.switch(args.verify, "verify")?;
    let precision = Precision::from_digits(digits);
    let mut inputs = BTreeMap::new();
    let cfg = ellipse_config(&s, &args, precision, &mut inputs)?;
    inputs.insert("digits".into(), digits.to_string());
    inputs.insert("budget".into(), budget.to_string());
    let eps_stop = match s.string(&args.eps_stop, "eps-stop")? {
        Some(text) => {
            inputs.insert("eps-stop".into(), text.clone());
            Some(precision.parse(&text)?)
        }
        None => None,
    };

    let scan = ellipse_ratio_scan(&cfg, &initial_chord(&cfg), budget, eps_stop.as_ref())?;
    let mut report = RunReport::new(inputs).with_table(&scan.table);
    let mut stage = Stage::new("scan", scan.steps);
    stage.partial_quotients = quotients(&scan.table);
    report.stages.push(stage);
    report.theta = table_estimate(&scan.table, digits);
    report
        .extras
        .insert("max_residual".into(), format!("{:.3e}", scan.max_residual.to_f64()));
    if let Some(order) = scan.closure {
        let last = scan.table.last().expect("closure adds a row");
        report
            .extras
            .insert("closure".into(), format!("{}/{} at {order} sides", last.p, last.q));
    }
    let mut bracket_failed = false;
    if verify {
        let (reference, inside) = ellipse_bracket(&cfg, &scan.table, digits)?;
        report.oracle_theta = Some(to_decimal(&reference, digits as usize));
        if let Some(theta) = &report.theta {
            let estimate = precision.parse(theta)?;
            report.agreement_digits = Some(agreement_digits(&estimate, &reference, digits));
        }
        report
            .extras
            .insert("bracket".into(), if inside { "holds" } else { "fails" }.into());
        bracket_failed = !inside;
    }
    report.elapsed_seconds = elapsed(start);
    s.emit(&report);
    if bracket_failed {
        return Err(CliError::Failed(
            "oracle ratio is not between the last two convergents".into(),
        ));
    }
    Ok(())
}

fn parse_vertex(text: &str, precision: Precision) -> CliResult<BigComplex> {
    let (re, im) = text
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("--z0 must be RE,IM, got {text}")))?;
    Ok(BigComplex::new(
        precision.parse(re.trim())?,
        precision.parse(im.trim())?,
    ))
}

/// CSV writer of trajectory states. The first write error is kept and
/// reported when the run ends.
struct Trace {
    out: BufWriter<File>,
    error: Option<io::Error>,
}

impl Trace {
    fn create(path: &Path) -> CliResult<Self> {
        let file = File::create(path).map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        let error = writeln!(out, "k,cos_psi,sin_psi,lambda_sq,log_h").err();
        Ok(Trace { out, error })
    }

    fn record(&mut self, state: &TrajectoryState) {
        if self.error.is_some() {
            return;
        }
        let row = writeln!(
            self.out,
            "{},{},{},{},{}",
            state.k(),
            to_decimal(state.cos_psi(), 20),
            to_decimal(state.sin_psi(), 20),
            to_decimal(state.lambda_sq(), 20),
            state.log_h()
        );
        self.error = row.err();
    }

    fn finish(mut self, path: &Path) -> CliResult<()> {
        let flushed = self.out.flush().err();
        match self.error.or(flushed) {
            Some(e) => Err(CliError::Io(format!("cannot write {}: {e}", path.display()))),
            None => Ok(()),
        }
    }
}

pub fn nr(args: NrArgs) -> CliResult<()> {
    let started = Instant::now();
    let s = Settings::new(&args.common, "nr")?;
    let digits = s.digits.unwrap_or(nr::DEFAULT_DIGITS);
    let budget = s.count(&args.budget, "budget")?.unwrap_or(nr::DEFAULT_BUDGET);
    let precision = Precision::from_digits(digits);

    let a = require(s.string(&args.a, "a")?, "a")?;
    let b1 = require(s.string(&args.b1, "b1")?, "b1")?;
    let b2 = s.string(&args.b2, "b2")?.unwrap_or_else(|| b1.clone());
    let c1 = s.string(&args.c1, "c1")?.unwrap_or_else(|| "0".into());
    let c2 = s.string(&args.c2, "c2")?.unwrap_or_else(|| "0".into());
    let c3 = s.string(&args.c3, "c3")?.unwrap_or_else(|| "0".into());
    let start = if let Some(text) = &args.z0 {
        StartCase::Custom(parse_vertex(text, precision)?)
    } else if let Some(label) = args.start {
        StartCase::from_label(label)?
    } else if let Some(text) = s.file.string("z0")? {
        StartCase::Custom(parse_vertex(&text, precision)?)
    } else if let Some(label) = s.file.integer("start")? {
        StartCase::from_label(u8::try_from(label).unwrap_or(0))?
    } else {
        StartCase::PositiveReal
    };
    let trace_path = args.trace.clone().or(s.string(&None, "trace")?.map(Into::into));

    let mut inputs = BTreeMap::new();
    for (k, v) in [
        ("a", &a),
        ("b1", &b1),
        ("b2", &b2),
        ("c1", &c1),
        ("c2", &c2),
        ("c3", &c3),
    ] {
        inputs.insert(k.to_string(), v.clone());
    }
    inputs.insert("start".into(), start.label());
    inputs.insert("budget".into(), budget.to_string());
    inputs.insert("digits".into(), digits.to_string());

    let entries = MatrixEntries {
        a: &a,
        b1: &b1,
        b2: &b2,
        c1: &c1,
        c2: &c2,
        c3: &c3,
    };
    let cfg = NRConfig::from_decimal(entries, start, precision)?;
    let mut trace = trace_path.as_deref().map(Trace::create).transpose()?;
    let mut observer = |state: &TrajectoryState| {
        if let Some(t) = trace.as_mut() {
            t.record(state);
        }
    };
    let (summary, verdict) = if budget >= nr::MIN_CLASSIFY_BUDGET {
        let analysis = nr::analyze(&cfg, budget, &mut observer)?;
        (analysis.summary, Some(analysis.verdict))
    } else {
        (nr::run_records(&cfg, budget, &mut observer)?, None)
    };
    if let (Some(t), Some(path)) = (trace, trace_path.as_deref()) {
        t.finish(path)?;
    }

    let mut report = RunReport::new(inputs);
    let mut stage = Stage::new("trajectory", summary.steps);
    if let Some(table) = &summary.table {
        stage.partial_quotients = quotients(table);
        report.convergents = table.to_strings();
        report.theta = table_estimate(table, digits);
        if table.rows().iter().any(|r| r.provisional) {
            let head = table.rows().iter().filter(|r| r.provisional).count();
            report.extras.insert("provisional_rows".into(), head.to_string());
        }
    }
    report.stages.push(stage);
    let records: Vec<String> = summary.records.iter().map(u64::to_string).collect();
    report.extras.insert("records".into(), records.join(" "));
    report
        .extras
        .insert("log_h_min".into(), format!("{:.6e}", summary.log_h_min));
    report
        .extras
        .insert("log_h_max".into(), format!("{:.6e}", summary.log_h_max));
    report
        .extras
        .insert("max_residual".into(), format!("{:.3e}", summary.max_residual.to_f64()));
    report.verdict = verdict.map(|v| v.to_report());
    report.elapsed_seconds = elapsed(started);
    s.emit(&report);
    Ok(())
}

/// One independent check of the verify sweep.
#[derive(Debug, Clone)]
enum Case {
    Circle { c: String, r: String },
    Ellipse { a: String, b: String, c: String },
}

impl Case {
    fn label(&self) -> String {
        match self {
            Case::Circle { c, r } => format!("circle c={c} r={r}"),
            Case::Ellipse { a, b, c } => format!("ellipse a={a} b={b} c={c}"),
        }
    }
}

struct CaseResult {
    steps: u64,
    summary: String,
    passed: bool,
}

fn run_case(case: &Case, digits: u32, budget: u64) -> Result<CaseResult, Error> {
    match case {
        Case::Circle { c, r } => {
            let pair = CirclePair::from_decimal(c, r, Precision::working(digits))?;
            let out = compute_theta(&pair, &ThetaConfig::new(digits))?;
            let reference = oracle::theta_circle(pair.c(), pair.r(), digits + 5)?;
            let agree = agreement_digits(&out.theta, &reference, digits);
            let steps = out.baby_steps + out.giant_sets.iter().map(|s| s.partial_quotient).sum::<u64>();
            Ok(CaseResult {
                steps,
                summary: format!(
                    "theta {} agrees to {agree} digits",
                    to_decimal(&out.theta, digits as usize)
                ),
                passed: agree + 2 >= digits,
            })
        }
        Case::Ellipse { a, b, c } => {
            let cfg = EllipseConfig::from_decimal(a, b, c, Precision::from_digits(digits.max(34)))?;
            let scan = ellipse_ratio_scan(&cfg, &initial_chord(&cfg), budget, None)?;
            let (reference, inside) = ellipse_bracket(&cfg, &scan.table, digits).map_err(|e| match e {
                CliError::Core(e) => e,
                other => Error::Consistency(other.to_string()),
            })?;
            let last = scan
                .table
                .last()
                .map(|r| format!("{}/{}", r.p, r.q))
                .unwrap_or_default();
            Ok(CaseResult {
                steps: scan.steps,
                summary: format!(
                    "oracle {} {} the convergents ending at {last}",
                    to_decimal(&reference, 16),
                    if inside { "lies between" } else { "is outside" }
                ),
                passed: inside,
            })
        }
    }
}

/// Circle pairs with the inner circle well inside the unit disc.
fn random_pairs(samples: u64, seed: u64) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            let c: f64 = rng.gen_range(0.05..0.7);
            let r: f64 = rng.gen_range(0.05..(0.95 - c));
            Case::Circle {
                c: format!("{c:.6}"),
                r: format!("{r:.6}"),
            }
        })
        .collect()
}

pub fn verify(args: VerifyArgs) -> CliResult<()> {
    let started = Instant::now();
    let s = Settings::new(&args.common, "verify")?;
    let digits = s.digits.unwrap_or(THETA_DIGITS);
    let budget = s.count(&args.budget, "budget")?.unwrap_or(VERIFY_BUDGET);
    let samples = match args.samples {
        Some(n) => n,
        None => s.file.integer("samples")?.unwrap_or(VERIFY_SAMPLES),
    };
    let seed = match args.seed {
        Some(n) => n,
        None => s.file.integer("seed")?.unwrap_or(1),
    };
    let jobs = match args.jobs {
        Some(n) => Some(n),
        None => s.file.integer("jobs")?.map(|n| n as usize),
    };
    let c = s.string(&args.c, "c")?;
    let r = s.string(&args.r, "r")?;
    let a = s.string(&args.a, "a")?;
    let b = s.string(&args.b, "b")?;

    let mut inputs = BTreeMap::new();
    inputs.insert("digits".to_string(), digits.to_string());
    let cases = match (a, b, r) {
        (Some(a), Some(b), None) => vec![Case::Ellipse {
            a,
            b,
            c: c.unwrap_or_else(|| "0".into()),
        }],
        (None, None, Some(r)) => vec![Case::Circle { c: require(c, "c")?, r }],
        (None, None, None) if c.is_none() => {
            inputs.insert("samples".into(), samples.to_string());
            inputs.insert("seed".into(), seed.to_string());
            let mut cases = vec![
                Case::Circle {
                    c: "0.5".into(),
                    r: "0.2".into(),
                },
                Case::Circle {
                    c: "0.2".into(),
                    r: "0.48".into(),
                },
                Case::Ellipse {
                    a: "0.5".into(),
                    b: "0.4".into(),
                    c: "0.4".into(),
                },
            ];
            cases.extend(random_pairs(samples, seed));
            cases
        }
        _ => {
            return Err(CliError::Usage(
                "verify takes --c --r, or --a --b [--c], or no case flags for the built-in sweep".into(),
            ))
        }
    };
    inputs.insert("budget".into(), budget.to_string());
    if let Some(n) = jobs {
        inputs.insert("jobs".into(), n.to_string());
    }

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Io(format!("cannot start workers: {e}")))?;
    let results: Vec<Result<CaseResult, Error>> =
        pool.install(|| cases.par_iter().map(|case| run_case(case, digits, budget)).collect());

    let mut report = RunReport::new(inputs);
    let mut failures = Vec::new();
    let mut first_error = None;
    for (i, (case, result)) in cases.iter().zip(results).enumerate() {
        let key = format!("case {:02}", i + 1);
        match result {
            Ok(res) => {
                report.stages.push(Stage::new(case.label(), res.steps));
                let verdict = if res.passed { "pass" } else { "FAIL" };
                report
                    .extras
                    .insert(key, format!("{}: {}, {verdict}", case.label(), res.summary));
                if !res.passed {
                    failures.push(case.label());
                }
            }
            Err(e) => {
                report.stages.push(Stage::new(case.label(), 0));
                report.extras.insert(key, format!("{}: error: {e}", case.label()));
                failures.push(case.label());
                first_error.get_or_insert(e);
            }
        }
    }
    report.elapsed_seconds = elapsed(started);
    s.emit(&report);
    if cases.len() == 1 {
        if let Some(e) = first_error {
            return Err(e.into());
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Failed(failures.join("; ")))
    }
}
