use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kdival::data::{Format, LabelColumn};
use kdival::harness::{
    aggregate_accuracy, calibrate, evaluate_candidates, evaluate_dataset, load_config, EvaluationReport, HarnessError,
    RunConfig,
};
use kdival::indices::IndexKind;
use kdival::partition::{read_candidates, CandidateSet, Generator};
use kdival::Dataset;

/// Evaluate clustering validity indices on benchmark datasets.
#[derive(Debug, Parser)]
#[command(name = "kdival", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate candidates for one dataset, score and rank them.
    Evaluate {
        dataset: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Evaluate every dataset in a directory and aggregate success counts.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Grid-search delta and alpha on training datasets; writes calibrated.toml.
    Calibrate {
        dir: PathBuf,
        /// File naming one training dataset per line, relative to DIR.
        #[arg(long)]
        train_list: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Score and rank externally supplied partitions of one dataset.
    Rank {
        dataset: PathBuf,
        /// Directory of label files, one partition per file.
        #[arg(long)]
        partitions: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
}

/// Settings shared by every command; flags override the config file.
#[derive(Debug, Args)]
struct RunArgs {
    /// Config file; defaults to the file named by KDIVAL_CONFIG.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of ch, sc, db, new.
    #[arg(long, value_delimiter = ',')]
    indices: Option<Vec<IndexKind>>,
    /// Comma-separated subset of kmeans, gmm, ward, complete, average, single.
    #[arg(long, value_delimiter = ',')]
    generators: Option<Vec<Generator>>,
    /// Weight of the ambiguous sub-index.
    #[arg(long)]
    delta: Option<f64>,
    /// Plot the top five candidates of every index.
    #[arg(long)]
    svg: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Input format: csv, whitespace or arff; inferred from the extension by default.
    #[arg(long)]
    format: Option<Format>,
    /// Reference label column: an index, last or none.
    #[arg(long)]
    labels: Option<LabelColumn>,
}

impl RunArgs {
    fn config(&self) -> Result<RunConfig, Failure> {
        let mut c = load_config(self.config.as_deref()).map_err(Failure::Usage)?;
        if let Some(v) = self.k_min {
            c.k_min = v;
        }
        if let Some(v) = self.k_max {
            c.k_max = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = &self.indices {
            c.indices = v.clone();
        }
        if let Some(v) = &self.generators {
            c.generators = v.clone();
        }
        if let Some(v) = self.delta {
            c.kdi.delta = v;
        }
        c.emit_svg |= self.svg;
        if let Some(v) = &self.out {
            c.output_dir = v.clone();
        }
        if self.format.is_some() {
            c.format = self.format;
        }
        if let Some(v) = self.labels {
            c.label_column = v;
        }
        c.validate().map_err(Failure::Usage)?;
        Ok(c)
    }
}

enum Failure {
    Usage(HarnessError),
    Data(HarnessError),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_usage() {
            Failure::Usage(e)
        } else {
            Failure::Data(e)
        }
    }
}

fn print_champions(report: &EvaluationReport) {
    for o in &report.outcomes {
        let r = &report.rows[o.champion()];
        let verdict = match (o.champion_ari, o.success) {
            (Some(ari), Some(ok)) => format!("ARI {ari:.4} {}", if ok { "success" } else { "failure" }),
            _ => "no reference".to_string(),
        };
        println!("{}: {} {} (K={}), {verdict}", report.dataset, o.kind, r.source, r.k);
    }
}

fn evaluate(path: &Path, config: &RunConfig) -> Result<(), Failure> {
    let data = config.load(path)?;
    let report = evaluate_dataset(config, &data)?;
    report.write(&data, &config.output_dir)?;
    print_champions(&report);
    Ok(())
}

fn is_dataset(path: &Path) -> bool {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    path.is_file() && matches!(ext.as_deref(), Some("csv" | "txt" | "dat" | "data" | "arff"))
}

fn list_datasets(dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|source| {
        Failure::Data(HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| is_dataset(p))
        .collect();
    paths.sort();
    Ok(paths)
}

/// A dataset that fails to load or evaluate is reported and skipped; the
/// command still fails with a data error at the end.
fn bench(dir: &Path, config: &RunConfig) -> Result<(), Failure> {
    let paths = list_datasets(dir)?;
    if paths.is_empty() {
        return Err(Failure::Data(HarnessError::Empty(format!(
            "no datasets in {}",
            dir.display()
        ))));
    }
    let mut reports = Vec::new();
    let mut failed = None;
    for path in &paths {
        let outcome = config.load(path).map_err(Failure::from).and_then(|data| {
            let report = evaluate_dataset(config, &data)?;
            report.write(&data, &config.output_dir.join(data.id()))?;
            Ok(report)
        });
        match outcome {
            Ok(r) => {
                print_champions(&r);
                reports.push(r);
            }
            Err(Failure::Usage(e)) => return Err(Failure::Usage(e)),
            Err(Failure::Data(e)) => {
                log::error!("{}: {e}", path.display());
                failed = Some(e);
            }
        }
    }
    if !reports.is_empty() {
        match aggregate_accuracy(&reports) {
            Ok(table) => {
                table.write(&config.output_dir)?;
                for kind in &table.indices {
                    println!("accuracy {kind}: {}", table.fraction(*kind).unwrap_or_default());
                }
            }
            Err(e) => log::warn!("{e}"),
        }
    }
    failed.map_or(Ok(()), |e| Err(Failure::Data(e)))
}

fn read_train_list(dir: &Path, list: &Path) -> Result<Vec<PathBuf>, Failure> {
    let text = std::fs::read_to_string(list).map_err(|source| {
        Failure::Usage(HarnessError::Io {
            path: list.to_path_buf(),
            source,
        })
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| dir.join(l))
        .collect())
}

fn run_calibration(dir: &Path, list: &Path, config: &RunConfig) -> Result<(), Failure> {
    let training: Vec<Dataset> = read_train_list(dir, list)?
        .iter()
        .map(|p| config.load(p))
        .collect::<Result<_, _>>()?;
    let cal = calibrate(config, &training)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|source| {
        Failure::Data(HarnessError::Io {
            path: config.output_dir.clone(),
            source,
        })
    })?;
    let path = config.output_dir.join("calibrated.toml");
    cal.apply(config).write(&path)?;
    println!(
        "delta {} alpha {}: {}/{} training datasets succeed; wrote {}",
        cal.params.delta,
        cal.params.alpha1,
        cal.successes,
        cal.total,
        path.display()
    );
    Ok(())
}

fn rank(path: &Path, partitions: &Path, config: &RunConfig) -> Result<(), Failure> {
    let data = config.load(path)?;
    let set = CandidateSet {
        partitions: read_candidates(partitions).map_err(HarnessError::from)?,
        ..Default::default()
    };
    let report = evaluate_candidates(config, &data, set)?;
    report.write(&data, &config.output_dir)?;
    print_champions(&report);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Evaluate { dataset, run } => evaluate(&dataset, &run.config()?),
        Command::Bench { dir, run } => bench(&dir, &run.config()?),
        Command::Calibrate { dir, train_list, run } => run_calibration(&dir, &train_list, &run.config()?),
        Command::Rank {
            dataset,
            partitions,
            run,
        } => rank(&dataset, &partitions, &run.config()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
