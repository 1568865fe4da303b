mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use alie::classic::{adf_test, dfqd_test, LagRule, TestReport};
use alie::enrich::{Estimator, JSpec, WeightSpec};
use alie::lrv::{Criterion, LrvSpec};
use alie::mc::{export_csv, run_experiment, write_manifest, write_samples_csv, ExperimentConfig};
use alie::prep::{schwert_pmax, DetTerms, DetrendMode};
use alie::select::select_model_with_path;
use alie::wlasso::write_path_csv;
use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use input::{read_series, InputError};

#[derive(Parser)]
#[command(name = "alie", version, about = "Adaptive Lasso lag and unit-root selection for autoregressions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select an ADF model by the weighted Lasso and classify the series.
    Select(SelectArgs),
    /// Augmented Dickey-Fuller t-test.
    Adf(TestArgs),
    /// ADF test on quasi-difference (GLS) adjusted data.
    Dfqd(TestArgs),
    /// Dump the full solution path as CSV.
    Path(SelectArgs),
    /// Run a Monte Carlo experiment from a TOML config.
    Mc(McArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Pl,
    Al,
    Alie,
}

#[derive(Clone, Copy, ValueEnum)]
enum IcArg {
    Bic,
    Aic,
    Mbic,
    Maic,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum LagRuleArg {
    Aic,
    Bic,
    Maic,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum TestDetArg {
    None,
    Const,
    Trend,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct SelectArgs {
    /// CSV file; the first numeric column is used.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "alie")]
    estimator: EstimatorArg,
    /// none, const, trend, fd-demean, fd-detrend (also ols-*, qd-*).
    #[arg(long, default_value = "none", value_parser = parse_det)]
    det: DetrendMode,
    /// Lag order; Schwert rule when omitted.
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    gamma1: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma2: f64,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Random-walk scale of J; 1, or .75 when the adjustment removes a trend.
    #[arg(long = "sigma-v")]
    sigma_v: Option<f64>,
    /// Number of simulated regressions for J.
    #[arg(long = "R", default_value_t = 150)]
    r: usize,
    #[arg(long = "lrv-ic", value_enum, default_value = "bic")]
    lrv_ic: IcArg,
    /// Lag of the long-run variance regression with --lrv-ic fixed.
    #[arg(long = "lrv-k")]
    lrv_k: Option<usize>,
    /// Seed of the J simulation; drawn from system entropy when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TestArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "const")]
    det: TestDetArg,
    #[arg(long = "lag-rule", value_enum, default_value = "bic")]
    lag_rule: LagRuleArg,
    /// Lag order for the fixed rule, largest lag otherwise.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    config: PathBuf,
    /// Override the replication count.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Override the base seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for summary.csv and manifest.json.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write per-replication samples.csv.
    #[arg(long)]
    samples: bool,
}

fn parse_det(s: &str) -> Result<DetrendMode, String> {
    match s {
        "const" => Ok(DetrendMode::OlsDemean),
        "trend" => Ok(DetrendMode::OlsDetrend),
        other => other.parse().map_err(|e: alie::Error| e.to_string()),
    }
}

impl SelectArgs {
    fn weight_spec(&self, seed: u64) -> anyhow::Result<WeightSpec> {
        let estimator = match self.estimator {
            EstimatorArg::Pl => Estimator::Pl,
            EstimatorArg::Al => Estimator::Al,
            EstimatorArg::Alie => Estimator::Alie,
        };
        let default_sigma = if self.det.removes_trend() {
            JSpec::trend_default().sigma_v
        } else {
            JSpec::default().sigma_v
        };
        let j = JSpec {
            alpha: self.alpha,
            sigma_v: self.sigma_v.unwrap_or(default_sigma),
            r: self.r,
            seed,
        };
        let lrv = match self.lrv_ic {
            IcArg::Fixed => LrvSpec::fixed(
                self.lrv_k
                    .ok_or_else(|| InputError("--lrv-ic fixed needs --lrv-k".into()))?,
            ),
            ic => LrvSpec {
                k_max: self.lrv_k,
                ..LrvSpec::with_criterion(match ic {
                    IcArg::Bic => Criterion::Bic,
                    IcArg::Aic => Criterion::Aic,
                    IcArg::Mbic => Criterion::Mbic,
                    _ => Criterion::Maic,
                })
            },
        };
        let spec = WeightSpec {
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            ..WeightSpec::for_estimator(estimator, j, lrv)
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed not given, drew {s}");
        s
    })
}

fn cmd_select(args: &SelectArgs) -> anyhow::Result<()> {
    let y = read_series(&args.input)?;
    let seed = seed_or_entropy(args.seed);
    let spec = args.weight_spec(seed)?;
    let (res, _) = select_model_with_path(&y, &spec, args.det, args.p)?;
    let mut json = serde_json::to_value(&res)?;
    json["seed"] = seed.into();
    println!("{}", serde_json::to_string_pretty(&json)?);
    Ok(())
}

fn is_degenerate(e: &alie::Error) -> bool {
    match e {
        alie::Error::Degenerate(_) => true,
        alie::Error::Stage { source, .. } => is_degenerate(source),
        _ => false,
    }
}

fn cmd_path(args: &SelectArgs) -> anyhow::Result<()> {
    let y = read_series(&args.input)?;
    let seed = seed_or_entropy(args.seed);
    let spec = args.weight_spec(seed)?;
    let p = match args.p {
        Some(p) => p,
        None => schwert_pmax(y.len())?,
    };
    let mut names = vec!["y_lag1".to_string()];
    names.extend((1..=p).map(|j| format!("dy_lag{j}")));
    let out = std::io::stdout().lock();
    match select_model_with_path(&y, &spec, args.det, Some(p)) {
        Ok((_, path)) => write_path_csv(&path, &names, out)?,
        Err(e) if is_degenerate(&e) => {
            eprintln!("{e}; no path");
            let mut out = out;
            writeln!(out, "lambda,events,{}", names.join(","))?;
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn print_report(name: &str, report: &TestReport, format: Format) -> anyhow::Result<()> {
    match format {
        Format::Json => {
            let mut json = serde_json::to_value(report)?;
            json["test"] = name.into();
            println!("{}", serde_json::to_string_pretty(&json)?);
        }
        Format::Text => {
            println!("{name} t-statistic: {:.4}", report.t_stat);
            println!("lags used:        {}", report.lags_used);
            match (report.critical_value, report.reject_5pct) {
                (Some(cv), Some(rej)) => println!(
                    "5% critical value: {cv}  => {}",
                    if rej { "reject unit root" } else { "do not reject" }
                ),
                _ => println!("no bundled 5% critical value for this case"),
            }
        }
    }
    Ok(())
}

fn cmd_test(args: &TestArgs, qd: bool) -> anyhow::Result<()> {
    let y = read_series(&args.input)?;
    let det = match args.det {
        TestDetArg::None => DetTerms::None,
        TestDetArg::Const => DetTerms::Const,
        TestDetArg::Trend => DetTerms::Trend,
    };
    let rule = match args.lag_rule {
        LagRuleArg::Aic => LagRule::Aic,
        LagRuleArg::Bic => LagRule::Bic,
        LagRuleArg::Maic => LagRule::Maic,
        LagRuleArg::Fixed => LagRule::Fixed,
    };
    let (name, report) = if qd {
        ("DFQD", dfqd_test(&y, det, rule, args.k)?)
    } else {
        ("ADF", adf_test(&y, det, rule, args.k)?)
    };
    print_report(name, &report, args.format)
}

fn cmd_mc(args: &McArgs) -> anyhow::Result<()> {
    let mut config = ExperimentConfig::from_file(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    if let Some(r) = args.reps {
        config.reps = r;
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(s) = args.seed {
        config.base_seed = s;
    }
    config.validate()?;
    std::fs::create_dir_all(&args.out)
        .map_err(|e| InputError(format!("cannot create {}: {e}", args.out.display())))?;
    eprintln!(
        "running {} cells x {} reps on {} workers (seed {})",
        alie::mc::cell_keys(&config).len(),
        config.reps,
        config.workers,
        config.base_seed
    );
    let result = run_experiment(&config)?;
    let summary = args.out.join("summary.csv");
    export_csv(&result, &summary)?;
    write_manifest(&config, &result, std::fs::File::create(args.out.join("manifest.json"))?)?;
    if args.samples {
        write_samples_csv(&result, std::fs::File::create(args.out.join("samples.csv"))?)?;
    }
    for c in result.cells.iter().filter(|c| c.flagged()) {
        eprintln!(
            "warning: {} failures in cell {} T={} rho*={} {}",
            c.failures(),
            c.key.estimator,
            c.key.t,
            c.key.rho_star,
            c.key.det
        );
    }
    print!("{}", std::fs::read_to_string(&summary)?);
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

/// 2 for bad input, 3 for numerical failures.
fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    match e.downcast_ref::<alie::Error>() {
        Some(err) if !err.is_input_error() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Select(a) => cmd_select(a),
        Command::Path(a) => cmd_path(a),
        Command::Adf(a) => cmd_test(a, false),
        Command::Dfqd(a) => cmd_test(a, true),
        Command::Mc(a) => cmd_mc(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = exit_code(&e);
            match e.downcast_ref::<alie::Error>().and_then(alie::Error::stage) {
                Some(stage) => eprintln!("error (stage {stage}): {e:#}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(code)
        }
    }
}
