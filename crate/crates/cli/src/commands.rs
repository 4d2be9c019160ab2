use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use jscds::benchmark::{run_benchmark, BenchmarkGrid};
use jscds::data::{generate_synthetic_detailed, load_dataset, save_dataset, save_selection, SyntheticSpec};
use jscds::selection::{avg_mi, jscds_scores, load_trace, save_trace, JscdsOptions, JscdsScope, JscdsWindow};
use jscds::trainer::{embed, predict, train_with_reselection};
use jscds::{metrics, ClassifierState, FeatureDataset, Method, Selector, TrainConfig};
use serde_json::{json, Value};

use crate::{BenchmarkArgs, Cli, Command, EvalArgs, Format, GenArgs, ScopeArg, SelectArgs, TrainArgs, TrainFlags, WindowArg};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(jscds::Error),
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Partial { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Partial { failed, total } => write!(f, "{failed} of {total} benchmark runs failed"),
        }
    }
}

impl From<jscds::Error> for CliError {
    fn from(e: jscds::Error) -> Self {
        CliError::Data(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(cli: &Cli) -> CliResult<()> {
    let summary = match &cli.command {
        Command::Gen(args) => gen(cli, args)?,
        Command::Select(args) => select(cli, args)?,
        Command::Train(args) => train(cli, args)?,
        Command::Benchmark(args) => return benchmark(cli, args),
        Command::Eval(args) => eval(cli, args)?,
    };
    emit(cli.format, &summary);
    Ok(())
}

fn emit(format: Format, summary: &Value) {
    match format {
        Format::Json => println!("{summary}"),
        Format::Text => {
            if let Value::Object(map) = summary {
                for (k, v) in map {
                    match v {
                        Value::String(s) => println!("{k}: {s}"),
                        other => println!("{k}: {other}"),
                    }
                }
            }
        }
    }
}

fn require_out(cli: &Cli) -> CliResult<&Path> {
    cli.out
        .as_deref()
        .ok_or_else(|| CliError::Usage("--out is required for this command".into()))
}

fn parse_method(s: &str) -> CliResult<Method> {
    s.parse().map_err(|e: jscds::Error| CliError::Usage(e.to_string()))
}

fn write_json<T: serde::Serialize + ?Sized>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Data(jscds::Error::Config(format!("{}: {e}", path.display()))))?;
    fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(jscds::Error::Config(format!("{}: {e}", path.display())))
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

fn gen(cli: &Cli, args: &GenArgs) -> CliResult<Value> {
    let out = require_out(cli)?;
    let spec = SyntheticSpec {
        num_classes: args.classes,
        samples_per_class: args.per_class,
        dims: args.dims,
        cluster_spread: args.spread,
        center_separation: args.separation,
        label_noise_rate: args.noise,
        seed: cli.seed,
    };
    let synth = generate_synthetic_detailed(&spec)?;
    save_dataset(&synth.dataset, out)?;
    Ok(json!({
        "samples": synth.dataset.len(),
        "dims": synth.dataset.dims(),
        "classes": synth.dataset.num_classes(),
        "flipped": synth.flipped_ids().len(),
        "out": out.display().to_string(),
    }))
}

fn jscds_options(window: WindowArg, scope: ScopeArg) -> JscdsOptions {
    JscdsOptions {
        window: match window {
            WindowArg::Nearest => JscdsWindow::NearestToAverage,
            WindowArg::Rank => JscdsWindow::RankWindow,
        },
        scope: match scope {
            ScopeArg::Global => JscdsScope::Global,
            ScopeArg::Stratified => JscdsScope::Stratified,
        },
    }
}

fn select(cli: &Cli, args: &SelectArgs) -> CliResult<Value> {
    let out = require_out(cli)?;
    let method = parse_method(&args.method)?;
    if method == Method::Forgetting && args.trace.is_none() {
        return Err(CliError::Usage("--method forgetting needs --trace".into()));
    }
    let dataset = load_dataset(&args.dataset, args.classes)?;
    let selector = match method {
        Method::Full => Selector::Full,
        Method::Jscds => Selector::Jscds(jscds_options(args.window, args.scope)),
        Method::Random => Selector::Random,
        Method::Moderate => Selector::Moderate,
        Method::KCenterGreedy => Selector::KCenterGreedy,
        Method::Forgetting => Selector::Forgetting(load_trace(args.trace.as_deref().unwrap_or(Path::new("")))?),
    };
    let embeddings = match &args.model {
        Some(path) => {
            let model = ClassifierState::load(path)?;
            embed(&model, dataset.features())?
        }
        None => dataset.features().clone(),
    };

    let started = Instant::now();
    let selection = selector.select(&dataset, Some(&embeddings), args.fraction, cli.seed)?;
    let elapsed = started.elapsed().as_secs_f64();
    save_selection(&selection, out)?;

    let mut summary = json!({
        "method": method.name(),
        "samples": dataset.len(),
        "selected": selection.len(),
    });
    if method == Method::Jscds {
        let scores = jscds_scores(&dataset, &embeddings)?;
        if let Some((min, _, max)) = scores.summary() {
            summary["mi_min"] = json!(min);
            summary["mi_avg"] = json!(avg_mi(&scores)?);
            summary["mi_max"] = json!(max);
        }
    }
    summary["selection_seconds"] = json!(elapsed);
    summary["out"] = json!(out.display().to_string());
    Ok(summary)
}

fn train_config(flags: &TrainFlags, seed: u64, method: Method, fraction: f64) -> TrainConfig {
    TrainConfig {
        learning_rate: flags.lr,
        epochs: flags.epochs,
        batch_size: flags.batch_size,
        reselect_interval: flags.reselect_every,
        hidden_width: flags.hidden,
        seed,
        method,
        fraction,
        warmup_epochs: flags.warmup,
    }
}

fn train(cli: &Cli, args: &TrainArgs) -> CliResult<Value> {
    let out = require_out(cli)?;
    let method = parse_method(&args.method)?;
    let dataset = load_dataset(&args.dataset, args.train.classes)?;
    let (train_set, _, test_set) = dataset.split((8, 1, 1), args.train.split_seed)?;
    let config = train_config(&args.train, cli.seed, method, args.fraction);
    config.validate()?;

    let selector = match method {
        Method::Full => Selector::Full,
        Method::Jscds => Selector::Jscds(JscdsOptions::default()),
        Method::Random => Selector::Random,
        Method::Moderate => Selector::Moderate,
        Method::KCenterGreedy => Selector::KCenterGreedy,
        Method::Forgetting => Selector::Forgetting(match &args.trace {
            Some(path) => load_trace(path)?,
            None => {
                let full = TrainConfig {
                    method: Method::Full,
                    fraction: 1.0,
                    ..config.clone()
                };
                train_with_reselection(&train_set, None, &full, &Selector::Full)?.1.trace
            }
        }),
    };

    let (model, report) = train_with_reselection(&train_set, Some(&test_set), &config, &selector)?;
    create_dir(out)?;
    write_json(&out.join("report.json"), &report)?;
    write_json(&out.join("timing.json"), &report.timing)?;
    model.save(&out.join("model.json"))?;
    save_trace(&report.trace, &out.join("trace.csv"))?;

    let mut summary = json!({
        "method": method.name(),
        "fraction": report.fraction,
        "train": train_set.len(),
        "test": test_set.len(),
        "final_loss": report.losses.last().copied(),
        "final_core_size": report.core_sizes.last().copied(),
    });
    if let Some(m) = &report.metrics {
        summary["acc"] = json!(m.acc);
        summary["f1_macro"] = json!(m.f1_macro);
    }
    summary["selection_seconds"] = json!(report.timing.selection_seconds);
    summary["training_seconds"] = json!(report.timing.training_seconds);
    summary["out"] = json!(out.display().to_string());
    Ok(summary)
}

fn benchmark(cli: &Cli, args: &BenchmarkArgs) -> CliResult<()> {
    let out: PathBuf = require_out(cli)?.to_path_buf();
    let methods = args.methods.iter().map(|m| parse_method(m)).collect::<CliResult<Vec<_>>>()?;
    let dataset = load_dataset(&args.dataset, args.train.classes)?;
    let mut grid = BenchmarkGrid::new(
        methods,
        args.fractions.clone(),
        args.seeds.clone(),
        train_config(&args.train, 0, Method::Full, 1.0),
    );
    grid.split_seed = args.train.split_seed;

    let output = run_benchmark(&dataset, &grid)?;
    create_dir(&out)?;
    output.report.save(&out.join("report.json"))?;
    output.timing.save(&out.join("timing.json"))?;
    output.report.write_series(&out)?;

    let report = &output.report;
    match cli.format {
        Format::Json => println!("{}", serde_json::to_string(&report.summary).unwrap_or_default()),
        Format::Text => {
            let acc = |row: &jscds::benchmark::SummaryRow| {
                row.metrics
                    .get("acc")
                    .map_or("n/a".to_string(), |s| format!("{:.4} +- {:.4}", s.mean, s.std))
            };
            println!("{:<12} {:>8} {:>4} {:>20}", "method", "fraction", "ok", "acc");
            println!(
                "{:<12} {:>8} {:>4} {:>20}",
                Method::Full.name(),
                1.0,
                report.reference_summary.cells_ok,
                acc(&report.reference_summary)
            );
            for row in &report.summary {
                println!("{:<12} {:>8} {:>4} {:>20}", row.method.name(), row.fraction, row.cells_ok, acc(row));
            }
            println!("total_seconds: {:.2}", output.timing.total_seconds);
        }
    }
    for cell in report.reference.iter().chain(&report.cells) {
        if let Some(e) = &cell.error {
            eprintln!("failed: {} fraction {} seed {}: {e}", cell.method, cell.fraction, cell.seed);
        }
    }
    if report.failures > 0 {
        return Err(CliError::Partial {
            failed: report.failures,
            total: report.reference.len() + report.cells.len(),
        });
    }
    Ok(())
}

fn eval(cli: &Cli, args: &EvalArgs) -> CliResult<Value> {
    let model = ClassifierState::load(&args.model)?;
    let dataset: FeatureDataset = load_dataset(&args.dataset, args.classes.or(Some(model.classes())))?;
    let preds = predict(&model, dataset.features())?;
    let report = metrics::report(dataset.labels(), &preds, dataset.num_classes())?;
    if let Some(out) = &cli.out {
        write_json(out, &report)?;
    }
    Ok(json!({
        "samples": dataset.len(),
        "acc": report.acc,
        "precision_macro": report.precision_macro,
        "recall_macro": report.recall_macro,
        "f1_macro": report.f1_macro,
        "specificity_macro": report.specificity_macro,
    }))
}
