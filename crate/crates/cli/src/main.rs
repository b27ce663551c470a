//! `skillbench`: validate skill directories, run routing experiments, sweep
//! hub sizes, fit decay curves, solve disclosure POMDPs and render reports.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use skillbench_core::backend::{
    build_backend, default_vram_gb, BackendConfig, BackendKind, ChatBackend, ScriptedResponses,
};
use skillbench_core::disclosure::{value_grid_csv, value_iteration_to, PomdpModel};
use skillbench_core::harness::{
    fit_decay_curve, load_dataset, run_experiment_to_dir, sweep_csv, sweep_skill_count, ExperimentSpec, AGGREGATE_FILE,
};
use skillbench_core::metrics::{parse_records_jsonl, SkillMode};
use skillbench_core::prompt::{KeywordVariant, Strategy};
use skillbench_core::report::{report_csv, GroupBy};
use skillbench_core::skill_repo::{load_hub, scan_dir, SkillHub};

#[derive(Parser)]
#[command(name = "skillbench", version, about = "Agent-skill routing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse every SKILL.md under a directory and print the reference graph.
    Validate { skills_dir: PathBuf },
    /// Run one strategy over a dataset and write records, transcripts and the aggregate.
    Run(RunArgs),
    /// Selection-only routing accuracy for several hub sizes.
    Sweep(SweepArgs),
    /// Fit the accuracy decay curve to an `N,skill_acc` CSV.
    Fit {
        /// CSV with an `N,skill_acc` header; `-` reads standard input.
        input: PathBuf,
    },
    /// Solve a disclosure POMDP and print V_h over a belief grid.
    Pomdp {
        #[arg(long)]
        model: PathBuf,
        /// Defaults to the horizon stored in the model file.
        #[arg(long)]
        horizon: Option<usize>,
        /// Grid resolution: beliefs are multiples of 1/steps.
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
    /// Aggregate one or more records files into a results table.
    Report {
        #[arg(required = true)]
        records: Vec<PathBuf>,
        #[arg(long, default_value = "file")]
        group_by: GroupBy,
        #[arg(long, default_value = "lenient")]
        skill_mode: SkillMode,
    },
}

/// Experiment flags shared by `run` and `sweep`. Any of them may instead
/// come from `--config`; flags given on the command line win.
#[derive(Args)]
struct ExperimentArgs {
    /// JSON object of flag defaults, keyed by long flag name.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    skills_dir: Option<PathBuf>,
    #[arg(long)]
    backend: Option<BackendKind>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    vram_gb: Option<f64>,
    #[arg(long)]
    context_limit: Option<usize>,
    #[arg(long)]
    timeout: Option<f64>,
    /// Mock backend replies: a JSON array of strings or `{text, latency}` objects.
    #[arg(long)]
    script: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    keyword: Option<KeywordVariant>,
    #[arg(long)]
    skill_mode: Option<SkillMode>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    #[arg(long)]
    strategy: Option<Strategy>,
    #[arg(long)]
    n_distractors: Option<usize>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Hub sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    counts: Vec<usize>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Display) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    fn io(message: impl Display) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::Validate { skills_dir } => cmd_validate(&skills_dir),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Fit { input } => cmd_fit(&input),
        Command::Pomdp { model, horizon, steps } => cmd_pomdp(&model, horizon, steps),
        Command::Report {
            records,
            group_by,
            skill_mode,
        } => cmd_report(&records, group_by, skill_mode),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn cmd_validate(dir: &Path) -> CmdResult {
    let entries = scan_dir(dir).map_err(Failure::io)?;
    let mut failed = false;
    let mut hub = SkillHub::new();
    for (path, parsed) in entries {
        match parsed {
            Ok(skill) => {
                let name = skill.name().to_string();
                match hub.insert(skill) {
                    Ok(()) => println!("OK {name}"),
                    Err(e) => {
                        failed = true;
                        println!("ERR {}: {e}", path.display());
                    }
                }
            }
            Err(e) => {
                failed = true;
                println!("ERR {}: {e}", path.display());
            }
        }
    }
    for (from, to) in hub.reference_edges() {
        println!("EDGE {from} -> {to}");
    }
    Ok(if failed { ExitCode::from(1) } else { ExitCode::SUCCESS })
}

/// Flag values merged with the optional config file.
struct Settings {
    file: Map<String, Value>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Settings { file: Map::new() });
        };
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let value: Value =
            serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let Value::Object(map) = value else {
            return Err(Failure::usage(format!(
                "{}: config must be a JSON object",
                path.display()
            )));
        };
        // `n_distractors` and `n-distractors` are both accepted.
        let file = map.into_iter().map(|(k, v)| (k.replace('_', "-"), v)).collect();
        Ok(Settings { file })
    }

    /// The flag if given, else the config entry parsed with `FromStr`.
    fn get<T: FromStr>(&self, flag: Option<T>, name: &str) -> Result<Option<T>, Failure>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        let Some(value) = self.file.get(name) else {
            return Ok(None);
        };
        let text = match value {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            other => {
                return Err(Failure::usage(format!(
                    "config key `{name}`: unsupported value {other}"
                )))
            }
        };
        text.parse()
            .map(Some)
            .map_err(|e| Failure::usage(format!("config key `{name}`: {e}")))
    }

    fn require<T: FromStr>(&self, flag: Option<T>, name: &str) -> Result<T, Failure>
    where
        T::Err: Display,
    {
        self.get(flag, name)?
            .ok_or_else(|| Failure::usage(format!("missing required flag --{name}")))
    }
}

fn experiment(
    settings: &Settings,
    common: ExperimentArgs,
    strategy: Strategy,
) -> Result<(ExperimentSpec, Box<dyn ChatBackend>), Failure> {
    let kind: BackendKind = settings.require(common.backend, "backend")?;
    let mut backend = BackendConfig::new(kind);
    backend.endpoint = settings.get(common.endpoint, "endpoint")?;
    backend.model_id = settings.get(common.model, "model")?.unwrap_or_default();
    backend.vram_gb = match settings.get(common.vram_gb, "vram-gb")? {
        Some(v) => v,
        None => default_vram_gb(&backend.model_id).unwrap_or(0.0),
    };
    if let Some(limit) = settings.get(common.context_limit, "context-limit")? {
        backend.context_limit_tokens = limit;
    }
    if let Some(timeout) = settings.get(common.timeout, "timeout")? {
        backend.request_timeout = timeout;
    }

    let script = match settings.get(common.script, "script")? {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            Some(ScriptedResponses::from_json(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?)
        }
        None => None,
    };

    let mut spec = ExperimentSpec::new(strategy, backend.clone());
    spec.dataset_path = settings.require(common.dataset, "dataset")?;
    spec.skills_dir = settings.require(common.skills_dir, "skills-dir")?;
    spec.seed = settings.get(common.seed, "seed")?.unwrap_or(0);
    spec.keyword = settings.get(common.keyword, "keyword")?.unwrap_or_default();
    spec.skill_mode = settings.get(common.skill_mode, "skill-mode")?.unwrap_or_default();

    let backend = build_backend(backend, script).map_err(Failure::usage)?;
    Ok((spec, backend))
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let settings = Settings::load(args.common.config.as_deref())?;
    let strategy: Strategy = settings.require(args.strategy, "strategy")?;
    let n_distractors = settings.get(args.n_distractors, "n-distractors")?;
    let parallelism = settings.get(args.parallelism, "parallelism")?;
    let out: PathBuf = settings.get(args.out, "out")?.unwrap_or_else(|| PathBuf::from("out"));
    let (mut spec, backend) = experiment(&settings, args.common, strategy)?;
    if let Some(n) = n_distractors {
        spec.n_distractors = n;
    }
    if let Some(p) = parallelism {
        spec.parallelism = p;
    }

    run_experiment_to_dir(&spec, backend.as_ref(), &out).map_err(Failure::usage)?;
    let csv = fs::read_to_string(out.join(AGGREGATE_FILE)).map_err(Failure::usage)?;
    print!("{csv}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(args: SweepArgs) -> CmdResult {
    let settings = Settings::load(args.common.config.as_deref())?;
    let counts = if args.counts.is_empty() {
        vec![5, 10, 20, 50, 100]
    } else {
        args.counts
    };
    let out = settings.get(args.out, "out")?;
    let (spec, backend) = experiment(&settings, args.common, Strategy::ASI)?;
    let tasks = load_dataset(&spec.dataset_path).map_err(Failure::usage)?;
    let pool: Vec<_> = load_hub(&spec.skills_dir)
        .map_err(Failure::usage)?
        .iter()
        .cloned()
        .collect();
    let points = sweep_skill_count(&spec, backend.as_ref(), &counts, &tasks, &pool).map_err(Failure::usage)?;
    let csv = sweep_csv(&points);
    match out {
        Some(path) => fs::write(&path, csv).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        std::io::read_to_string(std::io::stdin()).map_err(Failure::usage)
    } else {
        fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
    }
}

fn cmd_fit(input: &Path) -> CmdResult {
    let text = read_input(input)?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (i == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
            continue;
        }
        let parse = |field: Option<&str>| -> Result<f64, Failure> {
            field
                .and_then(|f| f.trim().parse().ok())
                .ok_or_else(|| Failure::usage(format!("line {}: expected `N,skill_acc`", i + 1)))
        };
        let mut fields = line.split(',');
        points.push((parse(fields.next())?, parse(fields.next())?));
    }
    let fit = fit_decay_curve(&points).map_err(Failure::usage)?;
    println!("{}", serde_json::to_string_pretty(&fit).expect("fit serializes"));
    Ok(ExitCode::SUCCESS)
}

fn cmd_pomdp(model: &Path, horizon: Option<usize>, steps: usize) -> CmdResult {
    let text = read_input(model)?;
    let m = PomdpModel::from_json(&text).map_err(Failure::usage)?;
    let h = horizon.unwrap_or(m.horizon());
    if steps == 0 {
        return Err(Failure::usage("--steps must be >= 1"));
    }
    let vf = value_iteration_to(&m, h).map_err(Failure::usage)?;
    print!("{}", value_grid_csv(&m, &vf, h, steps));
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(paths: &[PathBuf], group_by: GroupBy, mode: SkillMode) -> CmdResult {
    let mut sources = Vec::with_capacity(paths.len());
    for path in paths {
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        let records = parse_records_jsonl(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        if records.is_empty() {
            return Err(Failure::usage(format!("{}: no records", path.display())));
        }
        sources.push((path.display().to_string(), records));
    }
    print!("{}", report_csv(&sources, group_by, mode).map_err(Failure::usage)?);
    Ok(ExitCode::SUCCESS)
}
