//! `sotdd` command-line interface.
//!
//! Every subcommand prints one JSON report on stdout and a short summary on
//! stderr. Exit status: 0 on success, 2 on usage errors, 1 on computation
//! errors.
//!
//! Dataset arguments are `.csv` files, binary `SOTD` files (any other
//! extension), or `idx:IMAGES,LABELS` for an IDX image/label pair.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgAction, Args, Parser, Subcommand};
use sotdd::error::Result;
use sotdd::harness::correlate;
use sotdd::io::{
    dataset_fingerprint, hex_digest, read_binary_dataset, read_csv_dataset, read_idx_pair, read_sketch, sha256_hex,
    write_sketch, DecaySummary, InputFingerprint, LabelColumn, RunReport,
};
use sotdd::stats::loglog_slope;
use sotdd::{
    build_class_index, error_decay_profile, project_dataset, sotdd as estimate, sotdd_from_sketches, Baseline, Dataset,
    DistanceEstimate, MomentOrderLaw, ProjectorChoice, SotddConfig,
};

#[derive(Parser)]
#[command(name = "sotdd", version, about = "Sliced optimal transport dataset distance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the distance between two datasets.
    Distance {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Project one dataset and write its sketch.
    Project {
        a: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Combine two sketches into a distance.
    Merge {
        s1: PathBuf,
        s2: PathBuf,
        #[command(flatten)]
        est: EstimatorArgs,
    },
    /// Correlate against a reference distance over random split pairs.
    Correlate {
        a: PathBuf,
        /// Rows per side of each split.
        #[arg(long)]
        splits: usize,
        /// Number of split pairs.
        #[arg(long)]
        pairs: usize,
        #[arg(long, default_value = "exact-otdd", value_parser = parse_baseline)]
        baseline: Baseline,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        input: InputArgs,
    },
    /// Monte Carlo error against the number of projections.
    Decay {
        a: PathBuf,
        b: PathBuf,
        /// Comma-separated ascending projection counts.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        repeats: usize,
        #[command(flatten)]
        est: EstimatorArgs,
        #[command(flatten)]
        input: InputArgs,
    },
}

#[derive(Args, Clone)]
struct EstimatorArgs {
    /// Wasserstein order.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Number of projections.
    #[arg(long = "L", default_value_t = 1000)]
    l: usize,
    /// Number of label moments.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// `poisson:r1,...,rk` or `uniform:MAX` (default: poisson with rates 1..k).
    #[arg(long, value_parser = parse_law)]
    moment_law: Option<MomentOrderLaw>,
    /// `linear` or `conv:H,W,C`.
    #[arg(long, default_value = "linear", value_parser = parse_projector)]
    projector: ProjectorChoice,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standardize features with statistics pooled over both inputs.
    #[arg(long)]
    standardize: bool,
    /// Reuse the feature projection inside the label moments.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    tie_phi: bool,
    /// Worker threads (0: all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Drop projections whose moments overflow instead of failing.
    #[arg(long)]
    skip_overflow: bool,
    /// Keep only this many quantiles per projection (lossy).
    #[arg(long)]
    quantiles: Option<usize>,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// Label column for CSV inputs: `last`, a 0-based index, or a header name.
    #[arg(long, default_value = "last")]
    label_column: LabelColumn,
}

fn parse_law(s: &str) -> std::result::Result<MomentOrderLaw, String> {
    let (kind, rest) = s.split_once(':').ok_or("expected poisson:RATES or uniform:MAX")?;
    match kind {
        "poisson" => rest
            .split(',')
            .map(|r| r.trim().parse::<f64>().map_err(|e| format!("rate {r:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(MomentOrderLaw::TruncatedPoissonProduct),
        "uniform" => rest
            .trim()
            .parse::<u32>()
            .map(MomentOrderLaw::UniformFinite)
            .map_err(|e| format!("maximum order {rest:?}: {e}")),
        other => Err(format!("unknown moment law {other:?}")),
    }
}

fn parse_projector(s: &str) -> std::result::Result<ProjectorChoice, String> {
    if s == "linear" {
        return Ok(ProjectorChoice::Linear);
    }
    let dims = s.strip_prefix("conv:").ok_or("expected linear or conv:H,W,C")?;
    let v = dims
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    match v[..] {
        [height, width, channels] if height > 0 && width > 0 && channels > 0 => Ok(ProjectorChoice::Convolution {
            height,
            width,
            channels,
        }),
        _ => Err("conv needs three positive sizes H,W,C".into()),
    }
}

fn parse_baseline(s: &str) -> std::result::Result<Baseline, String> {
    s.parse().map_err(|e: sotdd::Error| e.to_string())
}

impl EstimatorArgs {
    fn config(&self) -> SotddConfig {
        SotddConfig {
            p: self.p,
            num_projections: self.l,
            num_moments: self.k,
            moment_law: self
                .moment_law
                .clone()
                .unwrap_or_else(|| MomentOrderLaw::poisson_default(self.k)),
            projector: self.projector,
            tie_phi: self.tie_phi,
            standardize: self.standardize,
            seed: self.seed,
            skip_overflow: self.skip_overflow,
            quantiles: self.quantiles,
            psi_override: None,
            workers: self.workers,
        }
    }
}

fn law_string(law: &MomentOrderLaw) -> String {
    match law {
        MomentOrderLaw::UniformFinite(m) => format!("uniform:{m}"),
        MomentOrderLaw::TruncatedPoissonProduct(r) => {
            format!("poisson:{}", r.iter().map(f64::to_string).collect::<Vec<_>>().join(","))
        }
    }
}

fn projector_string(p: &ProjectorChoice) -> String {
    match p {
        ProjectorChoice::Linear => "linear".into(),
        ProjectorChoice::Convolution {
            height,
            width,
            channels,
        } => format!("conv:{height},{width},{channels}"),
    }
}

fn load(path: &Path, input: &InputArgs) -> Result<Dataset> {
    if let Some((images, labels)) = path
        .to_str()
        .and_then(|s| s.strip_prefix("idx:"))
        .and_then(|s| s.split_once(','))
    {
        return read_idx_pair(Path::new(images), Path::new(labels));
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("csv") => read_csv_dataset(path, &input.label_column),
        _ => read_binary_dataset(path),
    }
}

fn fingerprint(path: &Path, ds: &Dataset) -> InputFingerprint {
    InputFingerprint {
        path: path.display().to_string(),
        sha256: dataset_fingerprint(ds),
    }
}

fn file_fingerprint(path: &Path) -> Result<InputFingerprint> {
    Ok(InputFingerprint {
        path: path.display().to_string(),
        sha256: sha256_hex(&std::fs::read(path)?),
    })
}

fn base_report(command: &str, cfg: &SotddConfig, inputs: Vec<InputFingerprint>) -> RunReport {
    RunReport {
        command: command.into(),
        value: None,
        mean_pp: None,
        stderr_pp: None,
        num_projections: cfg.num_projections,
        dropped: 0,
        p: cfg.p,
        k: cfg.num_moments,
        seed: cfg.seed,
        projector: projector_string(&cfg.projector),
        moment_law: law_string(&cfg.moment_law),
        tie_phi: cfg.tie_phi,
        standardize: cfg.standardize,
        config_fingerprint: None,
        inputs,
        wall_seconds: 0.0,
        correlate: None,
        decay: None,
    }
}

fn with_estimate(mut report: RunReport, est: &DistanceEstimate) -> RunReport {
    report.value = Some(est.value);
    report.mean_pp = Some(est.mean_pp);
    report.stderr_pp = Some(est.stderr_pp);
    report.num_projections = est.num_projections;
    report.dropped = est.dropped;
    report
}

enum Failure {
    Usage(String),
    Compute(sotdd::Error),
}

impl From<sotdd::Error> for Failure {
    fn from(e: sotdd::Error) -> Self {
        Self::Compute(e)
    }
}

fn run(cli: Cli) -> std::result::Result<RunReport, Failure> {
    let started = Instant::now();
    let mut report = match cli.command {
        Command::Distance { a, b, est, input } => {
            let cfg = est.config();
            let (da, db) = (load(&a, &input)?, load(&b, &input)?);
            let result = estimate(&da, &db, &cfg)?;
            let mut r = with_estimate(
                base_report("distance", &cfg, vec![fingerprint(&a, &da), fingerprint(&b, &db)]),
                &result,
            );
            r.config_fingerprint = Some(hex_digest(&cfg.fingerprint(da.dim())));
            eprintln!(
                "{} vs {}: {:.6} (stderr_pp {:.3e}, L={})",
                a.display(),
                b.display(),
                result.value,
                result.stderr_pp,
                result.num_projections
            );
            r
        }
        Command::Project { a, out, est, input } => {
            if est.standardize {
                return Err(Failure::Usage(
                    "--standardize: pooled standardization needs both datasets; use `distance`".into(),
                ));
            }
            let cfg = est.config();
            let da = load(&a, &input)?;
            let sketch = project_dataset(&da, &build_class_index(&da), &cfg)?;
            write_sketch(&sketch, &out)?;
            let mut r = base_report("project", &cfg, vec![fingerprint(&a, &da)]);
            r.config_fingerprint = Some(hex_digest(&sketch.fingerprint));
            r.dropped = sketch.blocks.iter().filter(|b| b.is_none()).count();
            eprintln!(
                "{} -> {} ({} projections)",
                a.display(),
                out.display(),
                sketch.num_projections()
            );
            r
        }
        Command::Merge { s1, s2, est } => {
            let cfg = est.config();
            let (k1, k2) = (read_sketch(&s1)?, read_sketch(&s2)?);
            let result = sotdd_from_sketches(&k1, &k2, cfg.p)?;
            let mut r = with_estimate(
                base_report("merge", &cfg, vec![file_fingerprint(&s1)?, file_fingerprint(&s2)?]),
                &result,
            );
            r.config_fingerprint = Some(hex_digest(&k1.fingerprint));
            eprintln!("{} vs {}: {:.6}", s1.display(), s2.display(), result.value);
            r
        }
        Command::Correlate {
            a,
            splits,
            pairs,
            baseline,
            est,
            input,
        } => {
            let cfg = est.config();
            let pool = load(&a, &input)?;
            let summary = correlate(&pool, splits, pairs, baseline, &cfg)?;
            eprintln!(
                "{} pairs of {} vs {}: pearson {:.4}, spearman {:.4}",
                pairs,
                splits,
                baseline.name(),
                summary.pearson,
                summary.spearman
            );
            let mut r = base_report("correlate", &cfg, vec![fingerprint(&a, &pool)]);
            r.correlate = Some(summary);
            r
        }
        Command::Decay {
            a,
            b,
            grid,
            repeats,
            est,
            input,
        } => {
            let cfg = est.config();
            let (da, db) = (load(&a, &input)?, load(&b, &input)?);
            let points = error_decay_profile(&da, &db, &cfg, &grid, repeats)?;
            let pairs: Vec<(f64, f64)> = points
                .iter()
                .map(|p| (p.num_projections as f64, p.mean_abs_error))
                .collect();
            let (slope, intercept) = loglog_slope(&pairs)?;
            for p in &points {
                eprintln!("L={:>8}  mean |error| {:.4e}", p.num_projections, p.mean_abs_error);
            }
            eprintln!("log-log slope {slope:.4}");
            let mut r = base_report("decay", &cfg, vec![fingerprint(&a, &da), fingerprint(&b, &db)]);
            r.num_projections = *grid.last().unwrap_or(&0);
            r.decay = Some(DecaySummary {
                repeats,
                points,
                slope,
                intercept,
            });
            r
        }
    };
    report.wall_seconds = started.elapsed().as_secs_f64();
    Ok(report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli).and_then(|r| r.to_json().map_err(Failure::Compute)) {
        Ok(json) => {
            println!("{json}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
