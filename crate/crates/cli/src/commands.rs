//! Argument definitions and the four subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use quickshift_core::lsh::LshParams;
use quickshift_core::quickshift::LshOverrides;
use quickshift_core::synth::GaussianMixture;
use quickshift_core::{
    adjusted_mutual_info, adjusted_rand_index, exact_quickshift_timed, extract_labels, extract_modes, ClusterLabels,
    Dataset, QuickShift, QuickShiftConfig, QuickShiftForest, SeedSpec, StageTimings,
};

use crate::csv_input::load_csv;
use crate::error::{CliError, Result};
use crate::ppm::{encode_ppm, load_ppm, Image, ImageFeatureSpec};
use crate::report::{mode_entries, LshEcho, ParamsEcho, RunReport, SweepPoint, SweepSummary, Timings};

#[derive(Debug, Parser)]
#[command(
    name = "lsh-quickshift",
    version,
    about = "Quick Shift clustering over LSH-accelerated density estimates"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cluster a CSV file and write one label per row.
    Cluster(ClusterArgs),
    /// Segment a PPM image; each pixel gets its segment's mean colour.
    Segment(SegmentArgs),
    /// Write the cluster modes of a CSV file with their densities.
    Modes(ModesArgs),
    /// Time the pipeline on synthetic Gaussian mixtures of growing size.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AlgoArgs {
    /// Kernel bandwidth and LSH radius h.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Neighbour radius multiplier; edges are at most c*h long.
    #[arg(long = "c", default_value_t = quickshift_core::quickshift::DEFAULT_APPROX)]
    pub c: f64,
    #[arg(long, default_value_t = quickshift_core::quickshift::DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Density floor for the hashing estimator (default 1/n).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Density estimator: exact | hbe.
    #[arg(long, default_value = "hbe")]
    pub estimator: String,
    /// Quadratic reference Quick Shift with exact densities and an exact c*h ball.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub lsh_tables: Option<usize>,
    #[arg(long)]
    pub lsh_concat: Option<usize>,
    #[arg(long)]
    pub bucket_width: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct CsvArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Zero-based column holding ground-truth labels.
    #[arg(long)]
    pub labels_col: Option<usize>,
    #[arg(long)]
    pub has_header: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub csv: CsvArgs,
    /// Label file, one integer per input row.
    #[arg(long)]
    pub output: PathBuf,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Grid H_MIN:H_MAX:STEPS over the bandwidth; needs --labels-col.
    #[arg(long)]
    pub sweep: Option<String>,
    #[command(flatten)]
    pub algo: AlgoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SegmentArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Output PPM (binary P6).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Weight of pixel coordinates against colour.
    #[arg(long, default_value_t = 0.2)]
    pub lambda: f64,
    #[command(flatten)]
    pub algo: AlgoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ModesArgs {
    #[command(flatten)]
    pub csv: CsvArgs,
    /// Mode CSV: coordinates then density, densest first.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub algo: AlgoArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Timing table path; printed to stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    pub dim: usize,
    #[arg(long, default_value_t = 4)]
    pub components: usize,
    /// Distance between consecutive mixture centres along the diagonal.
    #[arg(long, default_value_t = 10.0)]
    pub spacing: f64,
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[command(flatten)]
    pub algo: AlgoArgs,
}

/// Writes `bytes` next to `path` and renames into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = std::fs::File::create(&tmp)
        .and_then(|mut f| {
            f.write_all(bytes)?;
            f.sync_all()
        })
        .and_then(|()| std::fs::rename(&tmp, path));
    if let Err(e) = result {
        let _ = std::fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

impl AlgoArgs {
    fn bandwidth(&self) -> Result<f64> {
        self.bandwidth
            .ok_or_else(|| CliError::Usage("--bandwidth is required".into()))
    }

    fn config(&self, h: f64) -> QuickShiftConfig {
        let mut cfg = QuickShiftConfig::new(h)
            .with_approx(self.c)
            .with_epsilon(self.epsilon)
            .with_estimator(&self.estimator)
            .with_seed(self.seed);
        cfg.mu = self.mu;
        cfg.lsh = LshOverrides {
            tables: self.lsh_tables,
            concat: self.lsh_concat,
            bucket_width: self.bucket_width,
        };
        cfg
    }

    /// Rejects bad values before any data is touched.
    fn validate(&self, h: f64) -> Result<()> {
        if !self.exact && !QuickShift::default().estimators().contains(&self.estimator) {
            return Err(CliError::Usage(format!(
                "unknown estimator `{}` (expected exact or hbe)",
                self.estimator
            )));
        }
        self.config(h).validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.exact && !(self.c >= 1.0 && self.c.is_finite()) {
            return Err(CliError::Usage(format!("--c must be >= 1, got {}", self.c)));
        }
        Ok(())
    }

    fn echo(&self, h: f64, lsh: Option<&LshParams>, lambda: Option<f64>) -> ParamsEcho {
        ParamsEcho {
            bandwidth: h,
            c: self.c,
            epsilon: self.epsilon,
            mu: self.mu,
            estimator: if self.exact {
                "exact".into()
            } else {
                self.estimator.clone()
            },
            exact: self.exact,
            seed: self.seed,
            lsh: lsh.map(|p| LshEcho {
                tables: p.tables,
                concat: p.concat,
                bucket_width: p.bucket_width,
            }),
            lambda,
        }
    }
}

/// One clustering pass at a fixed bandwidth.
pub struct Clustering {
    pub forest: QuickShiftForest,
    pub labels: ClusterLabels,
    pub timings: StageTimings,
    pub lsh: Option<LshParams>,
}

pub fn run_clustering(data: &Dataset, algo: &AlgoArgs, h: f64) -> Result<Clustering> {
    if algo.exact {
        let (forest, mut timings) = exact_quickshift_timed(data, h, algo.c * h)?;
        let started = Instant::now();
        let labels = extract_labels(&forest)?;
        timings.label = started.elapsed();
        return Ok(Clustering {
            forest,
            labels,
            timings,
            lsh: None,
        });
    }
    let run = QuickShift::default().run(data, &algo.config(h))?;
    Ok(Clustering {
        forest: run.forest,
        labels: run.labels,
        timings: run.timings,
        lsh: run.lsh,
    })
}

fn base_report(command: &str, data: &Dataset, run: &Clustering, params: ParamsEcho) -> RunReport {
    RunReport {
        command: command.into(),
        params,
        n: data.len(),
        d: data.dim(),
        num_clusters: run.labels.num_clusters,
        modes: mode_entries(&extract_modes(&run.forest, data)),
        timings: Timings::from(&run.timings),
        ari: None,
        ami: None,
        sweep: None,
    }
}

fn scores(truth: &[i64], labels: &ClusterLabels) -> Result<Option<(f64, f64)>> {
    if truth.len() < 2 {
        return Ok(None);
    }
    Ok(Some((
        adjusted_rand_index(truth, &labels.label)?,
        adjusted_mutual_info(truth, &labels.label)?,
    )))
}

fn emit_report(report: &RunReport, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, report.to_text().as_bytes()),
        None => Ok(()),
    }
}

/// Parses `H_MIN:H_MAX:STEPS` into an inclusive evenly spaced grid.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let bad = || CliError::Usage(format!("--sweep expects H_MIN:H_MAX:STEPS, got `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    if steps == 0 || !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

pub struct ClusterOutcome {
    pub report: RunReport,
    pub labels: Vec<usize>,
}

pub fn cmd_cluster(args: &ClusterArgs) -> Result<ClusterOutcome> {
    let grid = match &args.sweep {
        Some(spec) => Some(parse_sweep(spec)?),
        None => None,
    };
    let first_h = match &grid {
        Some(g) => g[0],
        None => args.algo.bandwidth()?,
    };
    args.algo.validate(first_h)?;
    if grid.is_some() && args.csv.labels_col.is_none() {
        return Err(CliError::Usage(
            "--sweep needs ground-truth labels (--labels-col)".into(),
        ));
    }
    let data = load_csv(&args.csv.input, args.csv.has_header, args.csv.labels_col)?;

    let (run, h, sweep) = match grid {
        None => {
            let h = first_h;
            (run_clustering(&data, &args.algo, h)?, h, None)
        }
        Some(grid) => {
            let truth = data.labels().expect("labels column was requested");
            let mut best: Option<(Clustering, SweepPoint)> = None;
            let mut points = Vec::with_capacity(grid.len());
            for &h in &grid {
                args.algo.validate(h)?;
                let run = run_clustering(&data, &args.algo, h)?;
                let (ari, ami) = scores(truth, &run.labels)?.unwrap_or((1.0, 1.0));
                let point = SweepPoint {
                    bandwidth: h,
                    num_clusters: run.labels.num_clusters,
                    ari,
                    ami,
                };
                points.push(point.clone());
                if best.as_ref().is_none_or(|(_, b)| point.ari > b.ari) {
                    best = Some((run, point));
                }
            }
            let best_ami = points
                .iter()
                .fold(None::<&SweepPoint>, |acc, p| match acc {
                    Some(b) if b.ami >= p.ami => Some(b),
                    _ => Some(p),
                })
                .cloned()
                .expect("grid is non-empty");
            let (run, best_ari) = best.expect("grid is non-empty");
            let h = best_ari.bandwidth;
            let summary = SweepSummary {
                points,
                best_ari,
                best_ami,
            };
            (run, h, Some(summary))
        }
    };

    let mut report = base_report("cluster", &data, &run, args.algo.echo(h, run.lsh.as_ref(), None));
    if let Some(truth) = data.labels() {
        if let Some((ari, ami)) = scores(truth, &run.labels)? {
            report.ari = Some(ari);
            report.ami = Some(ami);
        }
    }
    report.sweep = sweep;

    let mut text = String::with_capacity(run.labels.label.len() * 4);
    for l in &run.labels.label {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    write_atomic(&args.output, text.as_bytes())?;
    emit_report(&report, args.report.as_deref())?;
    Ok(ClusterOutcome {
        report,
        labels: run.labels.label,
    })
}

pub struct SegmentOutcome {
    pub report: RunReport,
    pub image: Image,
}

/// Replaces every pixel by the rounded mean colour of its segment.
pub fn mean_colour_image(img: &Image, labels: &[usize]) -> Image {
    let mut sums = vec![[0u64; 4]; img.pixels.len()];
    for (px, &l) in img.pixels.iter().zip(labels) {
        for c in 0..3 {
            sums[l][c] += u64::from(px[c]);
        }
        sums[l][3] += 1;
    }
    let mean = |s: &[u64; 4]| -> [u8; 3] {
        // round half up in integer arithmetic
        std::array::from_fn(|c| ((2 * s[c] + s[3]) / (2 * s[3])) as u8)
    };
    let pixels = labels.iter().map(|&l| mean(&sums[l])).collect();
    Image::new(img.width, img.height, pixels)
}

pub fn cmd_segment(args: &SegmentArgs) -> Result<SegmentOutcome> {
    let h = args.algo.bandwidth()?;
    args.algo.validate(h)?;
    let spec = ImageFeatureSpec::new(args.lambda)?;
    let (data, img) = load_ppm(&args.input, spec)?;
    let run = run_clustering(&data, &args.algo, h)?;
    let image = mean_colour_image(&img, &run.labels.label);
    let report = base_report(
        "segment",
        &data,
        &run,
        args.algo.echo(h, run.lsh.as_ref(), Some(args.lambda)),
    );
    write_atomic(&args.output, &encode_ppm(&image))?;
    emit_report(&report, args.report.as_deref())?;
    Ok(SegmentOutcome { report, image })
}

pub struct ModesOutcome {
    pub report: RunReport,
    pub csv: String,
}

pub fn cmd_modes(args: &ModesArgs) -> Result<ModesOutcome> {
    let h = args.algo.bandwidth()?;
    args.algo.validate(h)?;
    let data = load_csv(&args.csv.input, args.csv.has_header, args.csv.labels_col)?;
    let run = run_clustering(&data, &args.algo, h)?;
    let mut report = base_report("modes", &data, &run, args.algo.echo(h, run.lsh.as_ref(), None));
    if let Some(truth) = data.labels() {
        if let Some((ari, ami)) = scores(truth, &run.labels)? {
            report.ari = Some(ari);
            report.ami = Some(ami);
        }
    }
    let mut csv: String = (0..data.dim()).map(|j| format!("x{j},")).collect();
    csv.push_str("density\n");
    for m in &report.modes {
        for x in &m.coords {
            csv.push_str(&format!("{x},"));
        }
        csv.push_str(&format!("{}\n", m.density));
    }
    write_atomic(&args.output, csv.as_bytes())?;
    emit_report(&report, args.report.as_deref())?;
    Ok(ModesOutcome { report, csv })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub build_ms: f64,
    pub kde_ms: f64,
    pub graph_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,build_ms,kde_ms,graph_ms,total_ms\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.3},{:.3},{:.3},{:.3}\n",
                r.n, r.build_ms, r.kde_ms, r.graph_ms, r.total_ms
            ));
        }
        s
    }

    /// `total_ms[i+1] / total_ms[i]` for consecutive rows.
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.windows(2).map(|w| w[1].total_ms / w[0].total_ms).collect()
    }
}

/// Per size, the repeat with the median total time is reported.
pub fn cmd_bench(args: &BenchArgs) -> Result<BenchTable> {
    let h = args.algo.bandwidth()?;
    args.algo.validate(h)?;
    if args.repeats == 0 || args.sizes.is_empty() || args.sizes.contains(&0) {
        return Err(CliError::Usage(
            "--repeats and every --sizes entry must be positive".into(),
        ));
    }
    let mixture = GaussianMixture::diagonal(args.components, args.dim, args.spacing, 1.0)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let seed = SeedSpec::new(args.algo.seed);
    let mut rows = Vec::with_capacity(args.sizes.len());
    for &n in &args.sizes {
        let data = mixture.sample(n, seed.child("bench", n as u64))?;
        let mut runs: Vec<Timings> = (0..args.repeats)
            .map(|_| run_clustering(&data, &args.algo, h).map(|r| Timings::from(&r.timings)))
            .collect::<Result<_>>()?;
        runs.sort_by(|a, b| a.total_ms().total_cmp(&b.total_ms()));
        let t = runs[runs.len() / 2];
        rows.push(BenchRow {
            n,
            build_ms: t.build_ms,
            kde_ms: t.kde_ms,
            graph_ms: t.graph_ms + t.label_ms,
            total_ms: t.total_ms(),
        });
    }
    let table = BenchTable { rows };
    if let Some(path) = &args.output {
        write_atomic(path, table.to_csv().as_bytes())?;
    }
    Ok(table)
}

/// Runs a parsed command. Returns what should go to stdout.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Cluster(a) => {
            let out = cmd_cluster(a)?;
            Ok(if a.report.is_none() {
                out.report.to_text()
            } else {
                String::new()
            })
        }
        Command::Segment(a) => {
            let out = cmd_segment(a)?;
            Ok(if a.report.is_none() {
                out.report.to_text()
            } else {
                String::new()
            })
        }
        Command::Modes(a) => {
            let out = cmd_modes(a)?;
            Ok(if a.report.is_none() {
                out.report.to_text()
            } else {
                String::new()
            })
        }
        Command::Bench(a) => {
            let table = cmd_bench(a)?;
            Ok(if a.output.is_none() {
                table.to_csv()
            } else {
                String::new()
            })
        }
    }
}
