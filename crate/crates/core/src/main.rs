use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use noonsim::analytics::{
    asymptotic_fidelity, delta0_of, eq3_intensities, gaussian_localization, localization_fidelity_integral,
    naive_fidelity_scaling, p_cond, q_distribution, LocalizationParams,
};
use noonsim::crosscheck::check_bundled;
use noonsim::dsl::{self, InterpretMode};
use noonsim::generator::{
    condensation_probability_sim, figure3_table, run_generator, summarize, Figure3Weighting, GeneratorConfig,
    RunMode,
};
use noonsim::{Error, StateVector};

const THREADS_ENV: &str = "NOONSIM_THREADS";
const EXHAUSTIVE_MAX_N: u32 = 15;
const DEFAULT_EXHAUSTIVE_N: u32 = 10;
const DEFAULT_SHOTS: u64 = 10_000;

#[derive(Parser)]
#[command(name = "noonsim", version, about = "Exact Fock-basis simulation of a feed-forward N00N-state generator")]
struct Cli {
    /// Worker threads [default: $NOONSIM_THREADS, else one per core]
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write output to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Master seed for sampled runs
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Record the wall-clock time in the output metadata
    #[arg(long, global = true)]
    timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Condensation probability after r detections, closed form and simulated
    Condense(CondenseArgs),
    /// Run the full generator and report every outcome
    Generate(GenerateArgs),
    /// Mean output size and fidelity against the detected fraction
    Figure3(Figure3Args),
    /// Evaluate one closed-form expression
    #[command(subcommand)]
    Formulas(Formula),
    /// Execute a .qoc program
    Run(RunArgs),
}

#[derive(Args)]
struct CondenseArgs {
    /// Photons per mode: `8`, `1..8` or `100..500:50`
    #[arg(long = "N", value_parser = parse_range)]
    n: Range,
    /// Detections before the condensation step
    #[arg(long, conflicts_with = "fraction", required_unless_present = "fraction")]
    r: Option<u32>,
    /// Detections as a fraction of 2N, rounded to the nearest integer
    #[arg(long)]
    fraction: Option<f64>,
    /// Largest N for which the simulation column is filled
    #[arg(long, default_value_t = 10)]
    sim_max: u32,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long = "N")]
    n: u32,
    /// Reflectance of the tapping beam splitters
    #[arg(long)]
    f: f64,
    /// Minimum output photons [default: round(N(1-f)), at least 1]
    #[arg(long = "p-min")]
    p_min: Option<u32>,
    /// Enumerate every branch (default for N <= 10)
    #[arg(long, conflicts_with = "shots")]
    exhaustive: bool,
    /// Monte Carlo shots (default for N > 10: 10000)
    #[arg(long)]
    shots: Option<u64>,
    /// Include output states in outcome records
    #[arg(long)]
    states: bool,
    /// Emit only the summary
    #[arg(long)]
    summary_only: bool,
}

#[derive(Args)]
struct Figure3Args {
    #[arg(long = "N-max", default_value_t = 15)]
    n_max: u32,
    /// Detected fractions D/2N
    #[arg(long, value_delimiter = ',', value_parser = parse_fraction, default_value = "1/3,1/2,2/3")]
    fractions: Vec<f64>,
    /// Weight every Circuit I record equally instead of by probability
    #[arg(long)]
    unweighted: bool,
}

#[derive(Subcommand)]
enum Formula {
    /// Large-N cat fidelity for a ratio of detected to remaining photons
    #[command(name = "asymptotic_fidelity")]
    AsymptoticFidelity {
        #[arg(long)]
        ratio: f64,
    },
    /// Localized relative phase for detector counts (l, r)
    #[command(name = "delta0")]
    Delta0 {
        #[arg(long)]
        l: u32,
        #[arg(long)]
        r: u32,
    },
    /// Closed-form condensation probability
    #[command(name = "p_cond")]
    PCond {
        #[arg(long = "N")]
        n: u32,
        #[arg(long)]
        r: u32,
    },
    /// Ancilla-count distribution of the correction stage
    #[command(name = "q_distribution")]
    QDistribution {
        #[arg(long = "S")]
        s: u32,
        #[arg(long)]
        l: u32,
        #[arg(long, allow_negative_numbers = true)]
        delta0: f64,
    },
    /// cos^2S-type scaling of the uncorrected cat fidelity
    #[command(name = "naive_fidelity")]
    NaiveFidelity {
        #[arg(long, allow_negative_numbers = true)]
        delta0: f64,
        #[arg(long = "S")]
        s: u32,
    },
    /// Gaussian phase localization after D detections
    #[command(name = "gaussian_localization")]
    GaussianLocalization {
        #[arg(long, allow_negative_numbers = true)]
        x: f64,
        #[arg(long = "D")]
        d: u32,
        #[arg(long = "N")]
        n: u32,
    },
    /// Mode intensities after a 50:50 beam splitter on a phase reference
    #[command(name = "eq3_intensities")]
    Eq3Intensities {
        #[arg(long = "S")]
        s: u32,
        #[arg(long, allow_negative_numbers = true)]
        delta0: f64,
    },
    /// Quadrature estimate of the cat fidelity after D detections
    #[command(name = "localization_integral")]
    LocalizationIntegral {
        #[arg(long = "N")]
        n: u32,
        #[arg(long = "D")]
        d: u32,
        #[arg(long, default_value_t = 801)]
        points: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Program file, or the name of a bundled program (circuit1.qoc, ...)
    program: String,
    /// `dualfock:N` or a state JSON file
    #[arg(long)]
    input: String,
    /// Parameter value, `name=value`; repeatable
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Sample this many trajectories instead of enumerating branches
    #[arg(long)]
    shots: Option<u64>,
    /// Compare a bundled program with its hand-coded counterpart
    #[arg(long)]
    check_against_builtin: bool,
}

#[derive(Clone, Copy, Debug)]
struct Range {
    start: u32,
    end: u32,
    step: u32,
}

fn parse_range(s: &str) -> Result<Range, String> {
    let (span, step) = match s.split_once(':') {
        Some((span, step)) => (span, step.parse::<u32>().map_err(|e| format!("bad step: {e}"))?),
        None => (s, 1),
    };
    if step == 0 {
        return Err("step must be positive".into());
    }
    let (start, end) = match span.split_once("..") {
        Some((a, b)) => (
            a.parse::<u32>().map_err(|e| format!("bad start: {e}"))?,
            b.parse::<u32>().map_err(|e| format!("bad end: {e}"))?,
        ),
        None => {
            let n = span.parse::<u32>().map_err(|e| e.to_string())?;
            (n, n)
        }
    };
    if start == 0 || end < start {
        return Err(format!("empty or invalid range {s}"));
    }
    Ok(Range { start, end, step })
}

fn parse_fraction(s: &str) -> Result<f64, String> {
    let value = match s.split_once('/') {
        Some((a, b)) => {
            let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| format!("bad fraction {s}"))?, b.trim().parse().map_err(|_| format!("bad fraction {s}"))?);
            a / b
        }
        None => s.trim().parse().map_err(|_| format!("bad fraction {s}"))?,
    };
    if !(value > 0.0 && value < 1.0) {
        return Err(format!("fraction {s} must lie in (0, 1)"));
    }
    Ok(value)
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or("expected name=value")?;
    let value: f64 = value.trim().parse().map_err(|_| format!("bad value in {s}"))?;
    Ok((name.trim().to_string(), value))
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Output of one subcommand before formatting.
struct Report {
    command: &'static str,
    params: Value,
    /// CSV columns; `None` when the command has no tabular form.
    columns: Option<Vec<&'static str>>,
    records: Vec<Value>,
    summary: Option<Value>,
}

struct Settings {
    seed: Option<u64>,
    timestamp: bool,
}

impl Report {
    fn meta(&self, settings: &Settings) -> Map<String, Value> {
        let mut meta = Map::new();
        meta.insert("tool".into(), json!("noonsim"));
        meta.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        meta.insert("command".into(), json!(self.command));
        meta.insert("params".into(), self.params.clone());
        if let Some(seed) = settings.seed {
            meta.insert("seed".into(), json!(seed));
        }
        if settings.timestamp {
            let secs = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0);
            meta.insert("generated_at_unix".into(), json!(secs));
        }
        meta
    }

    fn render(&self, format: Format, settings: &Settings) -> CliResult<String> {
        let meta = self.meta(settings);
        match format {
            Format::Csv => {
                let columns = self
                    .columns
                    .as_ref()
                    .ok_or_else(|| Failure::Usage(format!("{} has no CSV output; use jsonl or json", self.command)))?;
                let mut out = String::new();
                for (k, v) in &meta {
                    out.push_str(&format!("# {k}: {v}\n"));
                }
                if let Some(summary) = &self.summary {
                    out.push_str(&format!("# summary: {summary}\n"));
                }
                let mut writer = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| Failure::Runtime(e.to_string());
                writer.write_record(columns).map_err(io)?;
                for record in &self.records {
                    writer
                        .write_record(columns.iter().map(|c| cell(&record[*c])))
                        .map_err(io)?;
                }
                let bytes = writer.into_inner().map_err(|e| Failure::Runtime(e.to_string()))?;
                out.push_str(&String::from_utf8_lossy(&bytes));
                Ok(out)
            }
            Format::Jsonl => {
                let mut lines = vec![json_line("meta", Value::Object(meta))];
                lines.extend(self.records.iter().map(|r| r.to_string()));
                if let Some(summary) = &self.summary {
                    lines.push(json_line("summary", summary.clone()));
                }
                Ok(lines.join("\n") + "\n")
            }
            Format::Json => {
                let mut doc = json!({ "meta": meta, "records": self.records });
                if let Some(summary) = &self.summary {
                    doc["summary"] = summary.clone();
                }
                serde_json::to_string_pretty(&doc)
                    .map(|s| s + "\n")
                    .map_err(|e| Failure::Runtime(e.to_string()))
            }
        }
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn json_line(kind: &str, body: Value) -> String {
    let mut map = Map::new();
    map.insert("type".into(), json!(kind));
    if let Value::Object(fields) = body {
        map.extend(fields);
    }
    Value::Object(map).to_string()
}

fn with_type(kind: &str, body: Value) -> Value {
    serde_json::from_str(&json_line(kind, body)).expect("valid json")
}

fn condense(args: &CondenseArgs) -> CliResult<Report> {
    let mut records = Vec::new();
    let mut n = args.n.start;
    while n <= args.n.end {
        let r = match (args.r, args.fraction) {
            (Some(r), _) => r,
            (None, Some(fraction)) => (2.0 * f64::from(n) * fraction).round() as u32,
            (None, None) => unreachable!("clap requires one of --r/--fraction"),
        };
        let mut row = json!({ "N": n, "r": r, "p_cond_formula": null, "p_cond_sim": null, "status": "ok" });
        if r >= n {
            row["status"] = json!("error: r >= N");
        } else {
            row["p_cond_formula"] = json!(p_cond(n, r)?);
            if n <= args.sim_max {
                row["p_cond_sim"] = json!(condensation_probability_sim(n, r)?);
            }
        }
        records.push(row);
        n = match n.checked_add(args.n.step) {
            Some(next) => next,
            None => break,
        };
    }
    Ok(Report {
        command: "condense",
        params: json!({ "N": format!("{}..{}:{}", args.n.start, args.n.end, args.n.step), "r": args.r, "fraction": args.fraction, "sim_max": args.sim_max }),
        columns: Some(vec!["N", "r", "p_cond_formula", "p_cond_sim", "status"]),
        records,
        summary: None,
    })
}

fn generate(args: &GenerateArgs, seed: Option<u64>) -> CliResult<Report> {
    if args.n == 0 {
        return Err(Failure::Usage("--N must be at least 1".into()));
    }
    if !(args.f > 0.0 && args.f < 1.0) {
        return Err(Failure::Usage(format!("--f must lie in (0, 1), got {}", args.f)));
    }
    if let Some(p) = args.p_min {
        if p == 0 || p > 2 * args.n {
            return Err(Failure::Usage(format!("--p-min {p} is infeasible: it must lie in 1..=2N = {}", 2 * args.n)));
        }
    }
    if args.exhaustive && args.n > EXHAUSTIVE_MAX_N {
        return Err(Failure::Usage(format!("exhaustive runs are limited to N <= {EXHAUSTIVE_MAX_N}; use --shots")));
    }
    if args.shots == Some(0) {
        return Err(Failure::Usage("--shots must be positive".into()));
    }
    let mode = match args.shots {
        Some(shots) => RunMode::MonteCarlo {
            seed: seed.unwrap_or(0),
            shots,
        },
        None if args.exhaustive || args.n <= DEFAULT_EXHAUSTIVE_N => RunMode::Exhaustive,
        None => RunMode::MonteCarlo {
            seed: seed.unwrap_or(0),
            shots: DEFAULT_SHOTS,
        },
    };
    let mut config = GeneratorConfig::new(args.n, args.f)?.with_mode(mode);
    if let Some(p) = args.p_min {
        config = config.with_p_min(p);
    }
    let outcomes = run_generator(&config)?;
    let summary = summarize(&config, &outcomes);
    let records = if args.summary_only {
        Vec::new()
    } else {
        outcomes
            .iter()
            .map(|o| {
                let mut rec = json!({
                    "type": "outcome",
                    "n": o.record.n,
                    "l": o.record.l,
                    "r": o.record.r,
                    "Q": o.record.q,
                    "D": o.record.detections(),
                    "S": o.record.remaining(),
                    "P": o.record.output_photons(),
                    "status": o.status,
                    "branch_probability": o.branch_probability,
                    "weight": o.weight,
                    "shot": o.shot,
                    "fidelity": o.fidelity.map(|f| f.fidelity),
                    "optimal_phase": o.fidelity.map(|f| f.optimal_phase),
                });
                if args.states {
                    rec["output_state"] = json!(o.output_state);
                }
                rec
            })
            .collect()
    };
    let mode_json = match mode {
        RunMode::Exhaustive => json!("exhaustive"),
        RunMode::MonteCarlo { seed, shots } => json!({ "monte_carlo": { "seed": seed, "shots": shots } }),
    };
    Ok(Report {
        command: "generate",
        params: json!({ "N": args.n, "f": args.f, "p_min": config.effective_p_min(), "mode": mode_json }),
        columns: Some(vec![
            "n",
            "l",
            "r",
            "Q",
            "D",
            "S",
            "P",
            "status",
            "branch_probability",
            "weight",
            "shot",
            "fidelity",
            "optimal_phase",
        ]),
        records,
        summary: Some(serde_json::to_value(summary).map_err(|e| Failure::Runtime(e.to_string()))?),
    })
}

fn figure3(args: &Figure3Args) -> CliResult<Report> {
    if args.n_max == 0 || args.n_max > EXHAUSTIVE_MAX_N {
        return Err(Failure::Usage(format!("--N-max must lie in 1..={EXHAUSTIVE_MAX_N}")));
    }
    let weighting = if args.unweighted {
        Figure3Weighting::Uniform
    } else {
        Figure3Weighting::Probability
    };
    let rows = figure3_table(args.n_max, &args.fractions, weighting)?;
    let records = rows
        .iter()
        .map(|row| serde_json::to_value(row).map_err(|e| Failure::Runtime(e.to_string())))
        .collect::<CliResult<_>>()?;
    Ok(Report {
        command: "figure3",
        params: json!({ "N_max": args.n_max, "fractions": args.fractions, "weighting": weighting }),
        columns: Some(vec!["N", "D_over_2N", "mean_P", "mean_fidelity"]),
        records,
        summary: None,
    })
}

fn formula(f: &Formula) -> CliResult<Value> {
    let (name, inputs, value) = match *f {
        Formula::AsymptoticFidelity { ratio } => ("asymptotic_fidelity", json!({ "ratio": ratio }), json!(asymptotic_fidelity(ratio)?)),
        Formula::Delta0 { l, r } => ("delta0", json!({ "l": l, "r": r }), json!(delta0_of(l, r)?)),
        Formula::PCond { n, r } => ("p_cond", json!({ "N": n, "r": r }), json!(p_cond(n, r)?)),
        Formula::QDistribution { s, l, delta0 } => (
            "q_distribution",
            json!({ "S": s, "l": l, "delta0": delta0 }),
            serde_json::to_value(q_distribution(s, l, delta0)?).map_err(|e| Failure::Runtime(e.to_string()))?,
        ),
        Formula::NaiveFidelity { delta0, s } => (
            "naive_fidelity",
            json!({ "delta0": delta0, "S": s }),
            json!(naive_fidelity_scaling(delta0, s)?),
        ),
        Formula::GaussianLocalization { x, d, n } => (
            "gaussian_localization",
            json!({ "x": x, "D": d, "N": n }),
            json!(gaussian_localization(x, LocalizationParams { detections: d, n })?),
        ),
        Formula::Eq3Intensities { s, delta0 } => (
            "eq3_intensities",
            json!({ "S": s, "delta0": delta0 }),
            serde_json::to_value(eq3_intensities(s, delta0)?).map_err(|e| Failure::Runtime(e.to_string()))?,
        ),
        Formula::LocalizationIntegral { n, d, points } => (
            "localization_integral",
            json!({ "N": n, "D": d, "points": points }),
            json!(localization_fidelity_integral(n, d, points)?),
        ),
    };
    Ok(json!({ "formula": name, "inputs": inputs, "value": value, "version": env!("CARGO_PKG_VERSION") }))
}

fn load_program(spec: &str) -> CliResult<(String, String)> {
    let path = Path::new(spec);
    if path.exists() {
        let source = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {spec}: {e}")))?;
        return Ok((source, file_name(spec)));
    }
    match dsl::bundled(spec) {
        Some(source) => Ok((source.to_string(), spec.to_string())),
        None => Err(Failure::Usage(format!(
            "no program file {spec}, and no bundled program of that name (bundled: {})",
            dsl::BUNDLED.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
        ))),
    }
}

fn file_name(spec: &str) -> String {
    Path::new(spec)
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string())
}

fn load_input(spec: &str) -> CliResult<(StateVector, Option<u32>)> {
    if let Some(n) = spec.strip_prefix("dualfock:") {
        let n: u32 = n
            .parse()
            .map_err(|_| Failure::Usage(format!("bad photon number in {spec}")))?;
        return Ok((StateVector::dual_fock(n), Some(n)));
    }
    let text = std::fs::read_to_string(spec).map_err(|e| Failure::Usage(format!("cannot read input {spec}: {e}")))?;
    let state = StateVector::from_json(&text).map_err(|e| Failure::Usage(format!("bad state file {spec}: {e}")))?;
    Ok((state, None))
}

fn run(args: &RunArgs, seed: Option<u64>) -> CliResult<Report> {
    let (source, name) = load_program(&args.program)?;
    let program = dsl::parse(&source).map_err(|e| Failure::Usage(e.render(&source)))?;
    let (input, dual_n) = load_input(&args.input)?;
    let mut params: BTreeMap<String, f64> = args.params.iter().cloned().collect();
    if let Some(n) = dual_n {
        let declares_n = program.params.iter().any(|p| p.name == "N" && p.default.is_none());
        if declares_n {
            params.entry("N".into()).or_insert(f64::from(n));
        }
    }
    if input.mode_count() != program.mode_count {
        return Err(Failure::Usage(format!(
            "program expects {} modes, input has {}",
            program.mode_count,
            input.mode_count()
        )));
    }
    let mode = match args.shots {
        Some(0) => return Err(Failure::Usage("--shots must be positive".into())),
        Some(shots) => InterpretMode::Sampled {
            seed: seed.unwrap_or(0),
            shots,
        },
        None => InterpretMode::Exhaustive,
    };
    let branches = dsl::interpret(&program, &input, &params, mode)?;
    let records = branches
        .iter()
        .map(|b| {
            let state = b.reduced_state()?;
            Ok(json!({
                "type": "branch",
                "registers": b.registers,
                "probability": b.probability,
                "discarded": b.discarded,
                "shot": b.shot,
                "state": state,
            }))
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let summary = if args.check_against_builtin {
        let bundled_source = dsl::bundled(&name).ok_or_else(|| {
            Failure::Usage(format!("{name} is not a bundled program; nothing to check against"))
        })?;
        if dsl::parse(bundled_source).ok().as_ref() != Some(&program) {
            return Err(Failure::Usage(format!("{} differs from the bundled {name}", args.program)));
        }
        let check = check_bundled(&name, &input, &params)?;
        eprintln!("check against builtin: {}", if check.passed { "PASS" } else { "FAIL" });
        Some(with_type("check", serde_json::to_value(&check).map_err(|e| Failure::Runtime(e.to_string()))?))
    } else {
        None
    };
    Ok(Report {
        command: "run",
        params: json!({ "program": name, "input": args.input, "params": params, "shots": args.shots }),
        columns: None,
        records,
        summary,
    })
}

fn configure_threads(flag: Option<usize>) -> CliResult<()> {
    let threads = match flag {
        Some(n) => Some(n),
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Failure::Usage(format!("{THREADS_ENV}={v} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::Usage("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> CliResult<()> {
    configure_threads(cli.threads)?;
    let settings = Settings {
        seed: cli.seed,
        timestamp: cli.timestamp,
    };
    let (text, failed_check) = match &cli.command {
        Command::Formulas(f) => {
            if matches!(cli.format, Some(Format::Csv)) {
                return Err(Failure::Usage("formulas has no CSV output".into()));
            }
            let value = formula(f)?;
            let text = match cli.format {
                Some(Format::Json) => serde_json::to_string_pretty(&value).unwrap_or_default(),
                _ => value.to_string(),
            };
            (text + "\n", false)
        }
        command => {
            let (report, default_format) = match command {
                Command::Condense(a) => (condense(a)?, Format::Csv),
                Command::Generate(a) => (generate(a, cli.seed)?, Format::Jsonl),
                Command::Figure3(a) => (figure3(a)?, Format::Csv),
                Command::Run(a) => (run(a, cli.seed)?, Format::Jsonl),
                Command::Formulas(_) => unreachable!("handled above"),
            };
            let failed = report
                .summary
                .as_ref()
                .and_then(|s| s.get("passed"))
                .is_some_and(|p| p == &json!(false));
            (report.render(cli.format.unwrap_or(default_format), &settings)?, failed)
        }
    };
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if failed_check {
        return Err(Failure::Runtime("interpreter and builtin disagree".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            let in_formulas = std::env::args().any(|a| a == "formulas");
            if e.kind() == clap::error::ErrorKind::InvalidSubcommand && in_formulas {
                let names: Vec<String> = Cli::command()
                    .find_subcommand("formulas")
                    .map(|c| c.get_subcommands().map(|s| s.get_name().to_string()).collect())
                    .unwrap_or_default();
                eprintln!("available formulas: {}", names.join(", "));
            }
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
