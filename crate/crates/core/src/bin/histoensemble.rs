use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use histoensemble::config::{defaults, PipelineConfig};
use histoensemble::data::{load_wdbc_path, train_test_split};
use histoensemble::ensemble::evaluate_member;
use histoensemble::error::{Error, Result};
use histoensemble::evaluation::compare_models;
use histoensemble::pipeline::{
    self, dataset_csv, drops_csv, prepare, run_batch, run_experiment, summary_csv, train_bundle,
    write_cluster, write_comparison, write_eda, write_evaluation, write_experiment, ModelEvaluation,
};
use histoensemble::stats::eda_report;
use histoensemble::store::{load_bundle_path, save_bundle_path};

#[derive(Parser)]
#[command(name = "histoensemble", version, about = "CART + logistic voting ensemble for WDBC cytology data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-feature statistics, outliers, normality screen, correlations, histograms.
    Eda {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Split, scale and prune; writes model-ready train/test CSVs.
    Preprocess(PipelineArgs),
    /// Two-cluster k-means on the preprocessed training partition.
    Cluster(PipelineArgs),
    /// Train CART and logistic models and write a bundle.
    Train(PipelineArgs),
    /// Evaluate a bundle on the test partition recorded in its provenance.
    Evaluate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_enum, default_value_t = ModelChoice::All)]
        model: ModelChoice,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Ensemble predictions for every record of an input file.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Full pipeline for one seed, or a batch with --seeds A..B (inclusive).
    Reproduce {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[arg(long, value_parser = parse_seed_range)]
        seeds: Option<(u64, u64)>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelChoice {
    Cart,
    Logistic,
    Ensemble,
    All,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = defaults::SEED)]
    seed: u64,
    #[arg(long, default_value_t = defaults::TRAIN_COUNT)]
    train_count: usize,
    #[arg(long, default_value_t = defaults::TAU)]
    tau: f64,
    #[arg(long, default_value = defaults::PIVOT)]
    pivot: String,
    /// Append the k-means cluster index as a model feature.
    #[arg(long)]
    with_cluster_feature: bool,
    /// Skip min-max scaling (also disables k-means).
    #[arg(long)]
    no_scale: bool,
    #[arg(long, default_value_t = defaults::MAX_DEPTH)]
    max_depth: usize,
    #[arg(long, default_value_t = defaults::MIN_LEAF)]
    min_leaf: usize,
    #[arg(long, default_value_t = defaults::L2)]
    l2: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print the CART rule listing to stdout.
    #[arg(long)]
    emit_rules: bool,
}

impl PipelineArgs {
    fn config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig {
            input: self.input.clone(),
            seed: self.seed,
            train_count: self.train_count,
            pivot: self.pivot.clone(),
            tau: self.tau,
            scale: !self.no_scale,
            cluster_feature: self.with_cluster_feature,
            out_dir: Some(self.out.clone()),
            created_unix: source_date_epoch(),
            ..PipelineConfig::default()
        };
        cfg.cart.max_depth = self.max_depth;
        cfg.cart.min_leaf = self.min_leaf;
        cfg.logistic.l2 = self.l2;
        cfg
    }
}

fn source_date_epoch() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|v| v.parse().ok()).unwrap_or(0)
}

fn parse_seed_range(s: &str) -> std::result::Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: u64 = a.trim().parse().map_err(|_| format!("bad seed {a:?}"))?;
    let b: u64 = b.trim().parse().map_err(|_| format!("bad seed {b:?}"))?;
    if a > b {
        return Err(format!("empty seed range {s}"));
    }
    Ok((a, b))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eda { input, out } => {
            let ds = load_wdbc_path(&input)?;
            let eda = eda_report(&ds, defaults::OUTLIER_Z, defaults::NORMALITY_BOUND)?;
            write_eda(&eda, &out)?;
            let failing: Vec<&str> =
                eda.normality.entries.iter().filter(|e| !e.pass).map(|e| e.feature.as_str()).collect();
            println!(
                "{} samples, {} outlier cells beyond |z| > {}, normality screen failures: {:?}",
                ds.len(),
                eda.outliers.entries.len(),
                eda.outliers.threshold,
                failing
            );
        }
        Command::Preprocess(args) => {
            let cfg = args.config();
            let ds = load_wdbc_path(&cfg.input)?;
            let p = prepare(&cfg, &ds)?;
            write_file(&args.out, "train.csv", &dataset_csv(&p.train))?;
            write_file(&args.out, "test.csv", &dataset_csv(&p.test))?;
            write_file(&args.out, "drops.csv", &drops_csv(&p.drops))?;
            if let Some(s) = &p.scaler {
                let json = serde_json::to_string_pretty(s).expect("scaler serializes");
                write_file(&args.out, "scaler.json", &(json + "\n"))?;
            }
            println!("train {} / test {}; kept {:?}", p.train.len(), p.test.len(), p.selected);
        }
        Command::Cluster(args) => {
            let cfg = args.config();
            let ds = load_wdbc_path(&cfg.input)?;
            let p = prepare(&cfg, &ds)?;
            let c = p
                .cluster
                .ok_or_else(|| Error::InvalidArgument("clustering requires scaling".into()))?;
            write_cluster(&c, &args.out)?;
            print!("{}", pipeline::purity_csv(&c.purity));
        }
        Command::Train(args) => {
            let cfg = args.config();
            let ds = load_wdbc_path(&cfg.input)?;
            let p = prepare(&cfg, &ds)?;
            let bundle = train_bundle(&cfg, &p)?;
            fs::create_dir_all(&args.out)?;
            save_bundle_path(&bundle, args.out.join("bundle.json"))?;
            let rules = bundle.cart.rules();
            write_file(&args.out, "rules.txt", &rules)?;
            if args.emit_rules {
                print!("{rules}");
            }
        }
        Command::Evaluate { input, bundle, model, out } => {
            let b = load_bundle_path(&bundle)?;
            let ds = load_wdbc_path(&input)?;
            let split = train_test_split(&ds, b.provenance.train_count, b.provenance.seed)?;
            let test = b.prepare(&split.test)?;
            let mut evals = Vec::new();
            if matches!(model, ModelChoice::Cart | ModelChoice::All) {
                evals.push(ModelEvaluation::from_predictions("cart", evaluate_member(&b.cart, &test)?)?);
            }
            if matches!(model, ModelChoice::Logistic | ModelChoice::All) {
                evals.push(ModelEvaluation::from_predictions("logistic", evaluate_member(&b.logistic, &test)?)?);
            }
            if matches!(model, ModelChoice::Ensemble | ModelChoice::All) {
                evals.push(ModelEvaluation::from_predictions("ensemble", b.ensemble()?.evaluate(&test)?)?);
            }
            for e in &evals {
                write_evaluation(e, &out)?;
            }
            let table = compare_models(&evals.iter().map(|e| (e.name.clone(), e.rates)).collect::<Vec<_>>())?;
            write_comparison(&table, &out)?;
            print!("{}", table.text);
        }
        Command::Predict { input, bundle, out } => {
            let b = load_bundle_path(&bundle)?;
            let ds = load_wdbc_path(&input)?;
            let prepared = b.prepare(&ds)?;
            let e = ModelEvaluation::from_predictions("ensemble", b.ensemble()?.evaluate(&prepared)?)?;
            write_file(&out, "predictions.csv", &e.predictions_csv())?;
            println!("{} predictions written", e.predictions.len());
        }
        Command::Reproduce { pipeline: args, seeds } => {
            let cfg = args.config();
            let ds = load_wdbc_path(&cfg.input)?;
            match seeds {
                None => {
                    let r = run_experiment(&cfg, &ds)?;
                    write_experiment(&r, &args.out)?;
                    print!("{}", r.comparison.text);
                    if args.emit_rules {
                        print!("\n{}", r.rules);
                    }
                }
                Some((a, b)) => {
                    let seeds: Vec<u64> = (a..=b).collect();
                    let reports = run_batch(&cfg, &ds, &seeds)?;
                    for r in &reports {
                        write_experiment(r, &args.out.join(format!("seed_{}", r.seed)))?;
                    }
                    let summary = summary_csv(&reports);
                    write_file(&args.out, "summary.csv", &summary)?;
                    print!("{summary}");
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
