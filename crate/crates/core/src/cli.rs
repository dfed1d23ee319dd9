//! Command-line front end: argument parsing and dispatch.
//!
//! Every command writes its outputs plus a `manifest-<command>.json` into
//! `--out`. The manifest captures the logical configuration with the
//! resolved seed and a SHA-256 digest per output file, so rerunning the
//! command from that configuration reproduces every output byte-for-byte.
//! `--threads` and `--out` are deliberately absent from the manifest:
//! neither changes output bytes, only wall time and location.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bram::Pattern;
use crate::error::{Error, Result};
use crate::fvm::FaultVariationMap;
use crate::kmeans::cluster_fvm;
use crate::nn::data::Dataset;
use crate::nn::infer::{clean_error_pct, evaluate, layer_vulnerability};
use crate::nn::map::{check_capacity, StoredImage};
use crate::nn::model::{reference_specs, Network};
use crate::nn::synthetic;
use crate::placement::{
    assign, dispersion, emit_constraints, optimal_voltage, PlacementStrategy,
};
use crate::power::{write_power_file, PowerCurve};
use crate::profile::{self, TempMode};
use crate::report::{self, EvalRow, RunManifest};
use crate::sweep::{ecc_coverage, run_sweep, SweepOptions};

#[derive(Debug, Parser)]
#[command(
    name = "voltsim",
    version,
    about = "FPGA BRAM undervolting simulator and mitigation toolkit"
)]
pub struct Cli {
    /// Worker thread cap; 0 picks the library default. Output bytes never
    /// depend on this value.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the undervolting grid and record fault and power figures
    Sweep(SweepCmd),
    /// Synthesize a fault-variation map and export it as JSON
    Fvm(FvmCmd),
    /// Cluster tiles into vulnerability classes by crash-level fault rate
    Cluster(ClusterCmd),
    /// Classify faulty SECDED words at one voltage level
    EccEval(EccEvalCmd),
    /// Emit the BRAM power model over the sweep grid
    Power(PowerCmd),
    /// Run fixed-point NN inference against realized fault masks
    NnEval(NnEvalCmd),
    /// Derive a vulnerability-aware placement and its constraint file
    Placement(PlacementCmd),
    /// Pick the power-error knee from sweep and evaluation data
    OptimalVoltage(OptimalVoltageCmd),
    /// Project recorded CSVs into plot-ready bundles
    #[command(subcommand)]
    Report(ReportCmd),
}

/// Flags shared by every command that needs a concrete chip.
#[derive(Debug, Args)]
pub struct ChipArgs {
    /// Built-in profile name (vc707, kc705) or path to a profile JSON
    #[arg(long, default_value = "vc707")]
    pub platform: String,

    /// Seed fixing the chip's process variation
    #[arg(long, default_value_t = 1)]
    pub chip_seed: u64,

    /// Multiplier on the profile's fault-cell density
    #[arg(long, default_value_t = 1.0)]
    pub chip_scale: f64,

    /// Import this fault-variation map instead of synthesizing one; its
    /// stored profile name must match --platform
    #[arg(long)]
    pub fvm: Option<PathBuf>,
}

impl ChipArgs {
    fn materialize(&self, temp_mode: Option<TempModeArg>) -> Result<FaultVariationMap> {
        let mut profile = profile::resolve(&self.platform)?;
        if let Some(mode) = temp_mode {
            profile.temp_mode = mode.into();
        }
        match &self.fvm {
            Some(path) => FaultVariationMap::from_json_file(path, Some(&profile)),
            None => FaultVariationMap::generate(&profile, self.chip_seed, self.chip_scale),
        }
    }

    fn config_json(&self) -> serde_json::Value {
        serde_json::json!({
            "platform": self.platform,
            "chip_seed": self.chip_seed,
            "chip_scale": self.chip_scale,
            "fvm": self.fvm.as_ref().map(|p| p.display().to_string()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TempModeArg {
    /// Heat removes fault cells by a linear thinning factor
    Thinning,
    /// Heat shifts the effective supply voltage upward
    EquivalentVoltage,
}

impl From<TempModeArg> for TempMode {
    fn from(arg: TempModeArg) -> TempMode {
        match arg {
            TempModeArg::Thinning => TempMode::Thinning,
            TempModeArg::EquivalentVoltage => TempMode::EquivalentVoltage,
        }
    }
}

impl TempModeArg {
    fn as_str(&self) -> &'static str {
        match self {
            TempModeArg::Thinning => "thinning",
            TempModeArg::EquivalentVoltage => "equivalent-voltage",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    /// Small five-layer network sized for fast desk-scale runs
    Synthetic,
    /// Full 784-1024-512-256-128-10 accelerator topology
    Reference,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub chip: ChipArgs,

    /// Stored data: a 16-bit hex word (ffff, aaaa, 0000) or `random`
    #[arg(long, default_value = "random")]
    pub pattern: String,

    /// Die temperature in whole degrees Celsius
    #[arg(long, default_value_t = 50)]
    pub temp: i32,

    #[arg(long, value_enum, default_value_t = TempModeArg::Thinning)]
    pub temp_mode: TempModeArg,

    /// Independent realizations per voltage level
    #[arg(long, default_value_t = 5)]
    pub runs: u32,

    /// Classify faulty SECDED words alongside raw fault counts
    #[arg(long)]
    pub ecc: bool,

    /// Base seed; defaults to VOLTSIM_SEED, then 1
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FvmCmd {
    #[command(flatten)]
    pub chip: ChipArgs,

    /// Check the fault-inclusion property before exporting
    #[arg(long)]
    pub verify: bool,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterCmd {
    #[command(flatten)]
    pub chip: ChipArgs,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EccEvalCmd {
    #[command(flatten)]
    pub chip: ChipArgs,

    /// Voltage level in millivolts
    #[arg(long, default_value_t = 540)]
    pub voltage: u32,

    #[arg(long, default_value_t = 50)]
    pub temp: i32,

    #[arg(long, default_value_t = 20)]
    pub runs: u32,

    #[arg(long, default_value = "random")]
    pub pattern: String,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PowerCmd {
    #[arg(long, default_value = "vc707")]
    pub platform: String,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct NnEvalCmd {
    #[command(flatten)]
    pub chip: ChipArgs,

    /// Load a trained network instead of the built-in synthetic one
    #[arg(long)]
    pub weights: Option<PathBuf>,

    /// IDX image file; requires --labels
    #[arg(long, requires = "labels")]
    pub images: Option<PathBuf>,

    /// IDX label file; requires --images
    #[arg(long, requires = "images")]
    pub labels: Option<PathBuf>,

    /// Synthetic dataset size when no IDX files are given
    #[arg(long, default_value_t = 256)]
    pub samples: usize,

    /// Weight-to-tile strategy: default, icbp-N, or worst-case
    #[arg(long, default_value = "default")]
    pub placement: String,

    /// Store weights under SECDED protection
    #[arg(long)]
    pub ecc: bool,

    #[arg(long, default_value_t = 5)]
    pub runs: u32,

    #[arg(long, default_value_t = 50)]
    pub temp: i32,

    /// Evaluate only this level instead of the whole grid
    #[arg(long)]
    pub voltage: Option<u32>,

    /// Also rank layers by sensitivity, with this many bit injections
    #[arg(long)]
    pub vulnerability: Option<u32>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlacementCmd {
    #[command(flatten)]
    pub chip: ChipArgs,

    /// default, icbp-N (N inner weight sets protected), or worst-case
    #[arg(long, default_value = "default")]
    pub strategy: String,

    /// Which network's block counts to place
    #[arg(long, value_enum, default_value_t = TopologyArg::Reference)]
    pub topology: TopologyArg,

    /// Take layer shapes from a weight file instead of --topology
    #[arg(long)]
    pub weights: Option<PathBuf>,

    /// Physical BRAM columns assumed for site coordinates
    #[arg(long, default_value_t = 14)]
    pub grid_cols: u32,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OptimalVoltageCmd {
    /// Power CSV produced by the power command
    #[arg(long)]
    pub power: PathBuf,

    /// Evaluation CSV produced by nn-eval
    #[arg(long)]
    pub error: PathBuf,

    /// Placement label to select from the evaluation CSV
    #[arg(long, default_value = "default")]
    pub placement: String,

    /// Select ECC-on rows from both inputs
    #[arg(long)]
    pub ecc: bool,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ReportCmd {
    /// Median fault rate and power per voltage from one sweep CSV
    FaultPower {
        #[arg(long)]
        sweep: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Merge two sweeps over a shared grid for side-by-side plots
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value = "a")]
        label_a: String,
        #[arg(long, default_value = "b")]
        label_b: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Median error per placement and ECC setting at one voltage
    PlacementBars {
        #[arg(long)]
        eval: PathBuf,
        #[arg(long, default_value_t = 540)]
        voltage: u32,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Explicit flag, then the VOLTSIM_SEED environment variable, then 1.
pub fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("VOLTSIM_SEED") {
        Ok(text) => text.trim().parse().map_err(|_| Error::InvalidConfig {
            reason: format!("VOLTSIM_SEED `{text}` is not a 64-bit unsigned integer"),
        }),
        Err(_) => Ok(1),
    }
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn finish(mut manifest: RunManifest, out: &Path, files: &[PathBuf]) -> Result<()> {
    for f in files {
        manifest.add_output(f)?;
    }
    let name = format!("manifest-{}.json", manifest.command);
    manifest.write(&out.join(name))
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::InvalidConfig { reason: format!("thread pool: {e}") })?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Sweep(c) => cmd_sweep(c),
        Command::Fvm(c) => cmd_fvm(c),
        Command::Cluster(c) => cmd_cluster(c),
        Command::EccEval(c) => cmd_ecc_eval(c),
        Command::Power(c) => cmd_power(c),
        Command::NnEval(c) => cmd_nn_eval(c),
        Command::Placement(c) => cmd_placement(c),
        Command::OptimalVoltage(c) => cmd_optimal_voltage(c),
        Command::Report(c) => cmd_report(c),
    }
}

fn cmd_sweep(c: SweepCmd) -> Result<()> {
    ensure_out(&c.out)?;
    let seed = resolve_seed(c.seed)?;
    let fvm = c.chip.materialize(Some(c.temp_mode))?;
    let p = fvm.profile();
    let total_rows = (p.num_brams * p.bram_rows) as usize;
    let pattern = Pattern::parse(&c.pattern, seed, total_rows)?;

    let opts = SweepOptions {
        pattern,
        temp_c: c.temp as f64,
        runs: c.runs,
        ecc: c.ecc,
        base_seed: seed,
    };
    let result = run_sweep(&fvm, &opts)?;

    let csv = c.out.join("sweep.csv");
    report::write_sweep_csv(&csv, &result)?;
    for (mv, med) in result.median_curve() {
        let mbit = fvm.profile().total_mbit();
        println!("mv={mv} median_faults={med:.1} per_mbit={:.4}", med / mbit);
    }

    let mut config = c.chip.config_json();
    let extra = serde_json::json!({
        "pattern": c.pattern,
        "temp_c": c.temp,
        "temp_mode": c.temp_mode.as_str(),
        "runs": c.runs,
        "ecc": c.ecc,
        "seed": seed,
    });
    merge(&mut config, extra);
    finish(RunManifest::new("sweep", config), &c.out, &[csv])
}

fn cmd_fvm(c: FvmCmd) -> Result<()> {
    ensure_out(&c.out)?;
    let fvm = c.chip.materialize(None)?;
    if c.verify {
        fvm.verify_fip()?;
        println!("fip=ok");
    }

    let path = c.out.join("fvm.json");
    fvm.to_json_file(&path)?;
    let cells = fvm.cells_at(fvm.profile().v_crash_mv);
    println!(
        "tiles={} fault_cells={} per_mbit_at_crash={:.1}",
        fvm.profile().num_brams,
        cells,
        cells as f64 / fvm.profile().total_mbit()
    );

    let mut config = c.chip.config_json();
    merge(&mut config, serde_json::json!({ "verify": c.verify }));
    finish(RunManifest::new("fvm", config), &c.out, &[path])
}

fn cmd_cluster(c: ClusterCmd) -> Result<()> {
    ensure_out(&c.out)?;
    let seed = resolve_seed(c.seed)?;
    let fvm = c.chip.materialize(None)?;
    let clusters = cluster_fvm(&fvm, seed)?;

    let csv = c.out.join("clusters.csv");
    report::write_cluster_csv(&csv, &fvm.crash_rates(), &clusters.labels)?;
    let json = c.out.join("clusters.json");
    let mut text = serde_json::to_string_pretty(&clusters).expect("report serializes");
    text.push('\n');
    std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;

    for (i, name) in ["low", "mid", "high"].iter().enumerate() {
        if i < clusters.centroids.len() {
            println!(
                "class={name} share={:.4} centroid={:.6}",
                clusters.shares[i], clusters.centroids[i]
            );
        }
    }

    let mut config = c.chip.config_json();
    merge(&mut config, serde_json::json!({ "seed": seed }));
    finish(RunManifest::new("cluster", config), &c.out, &[csv, json])
}

fn cmd_ecc_eval(c: EccEvalCmd) -> Result<()> {
    ensure_out(&c.out)?;
    let seed = resolve_seed(c.seed)?;
    let fvm = c.chip.materialize(None)?;
    let p = fvm.profile();
    let total_rows = (p.num_brams * p.bram_rows) as usize;
    let pattern = Pattern::parse(&c.pattern, seed, total_rows)?;

    let cov = ecc_coverage(&fvm, c.voltage, c.temp as f64, c.runs, &pattern, seed)?;
    let faulty = cov.words_faulty.max(1) as f64;
    let fractions = [
        cov.correctable as f64 / faulty,
        cov.detectable as f64 / faulty,
        cov.undetectable as f64 / faulty,
    ];

    let csv = c.out.join("ecc.csv");
    let text = format!(
        "voltage_mv,runs,words_faulty,correctable,detectable,undetectable,\
         frac_correctable,frac_detectable,frac_undetectable\n\
         {},{},{},{},{},{},{:.6},{:.6},{:.6}\n",
        c.voltage,
        cov.runs,
        cov.words_faulty,
        cov.correctable,
        cov.detectable,
        cov.undetectable,
        fractions[0],
        fractions[1],
        fractions[2],
    );
    std::fs::write(&csv, text).map_err(|e| Error::io(&csv, e))?;
    println!(
        "mv={} words_faulty={} correctable={:.4} detectable={:.4} undetectable={:.4}",
        c.voltage, cov.words_faulty, fractions[0], fractions[1], fractions[2]
    );

    let mut config = c.chip.config_json();
    let extra = serde_json::json!({
        "voltage_mv": c.voltage,
        "temp_c": c.temp,
        "runs": c.runs,
        "pattern": c.pattern,
        "seed": seed,
    });
    merge(&mut config, extra);
    finish(RunManifest::new("ecc-eval", config), &c.out, &[csv])
}

fn cmd_power(c: PowerCmd) -> Result<()> {
    ensure_out(&c.out)?;
    let p = profile::resolve(&c.platform)?;
    let csv = c.out.join("power.csv");
    write_power_file(&csv, &p)?;

    let curve = PowerCurve::from_profile(&p)?;
    let saving = curve.saving_fraction(p.v_min_mv, p.v_crash_mv, false)?;
    println!(
        "saving_pct_{}_to_{}={:.1}",
        p.v_min_mv,
        p.v_crash_mv,
        saving * 100.0
    );

    let config = serde_json::json!({ "platform": c.platform });
    finish(RunManifest::new("power", config), &c.out, &[csv])
}

fn load_network(c: &NnEvalCmd, seed: u64) -> Result<Network> {
    match &c.weights {
        Some(path) => Network::load(path),
        None => Ok(synthetic::network(seed)),
    }
}

fn load_dataset(c: &NnEvalCmd, seed: u64) -> Result<Dataset> {
    match (&c.images, &c.labels) {
        (Some(images), Some(labels)) => Dataset::load_idx(images, labels),
        _ => Ok(synthetic::dataset(seed, c.samples)),
    }
}

fn cmd_nn_eval(c: NnEvalCmd) -> Result<()> {
    ensure_out(&c.out)?;
    let seed = resolve_seed(c.seed)?;
    let strategy: PlacementStrategy = c.placement.parse()?;
    let fvm = c.chip.materialize(None)?;
    let profile = fvm.profile().clone();

    let network = load_network(&c, seed)?;
    let dataset = load_dataset(&c, seed)?;
    if dataset.pixels_per_image() != network.input_size() as usize {
        return Err(Error::InvalidConfig {
            reason: format!(
                "dataset has {} pixels per image, network expects {}",
                dataset.pixels_per_image(),
                network.input_size()
            ),
        });
    }

    check_capacity(&network, &profile)?;
    let clusters = cluster_fvm(&fvm, seed)?;
    let assignment = assign(&clusters, &network.specs(), strategy, seed)?;
    let stored = StoredImage::store(&network, &assignment, &profile)?;

    println!("clean_error_pct={:.4}", clean_error_pct(&network, &dataset));

    let levels = match c.voltage {
        Some(mv) => vec![mv],
        None => profile.grid(),
    };
    let mut rows = Vec::new();
    for &mv in &levels {
        let rep = evaluate(
            &network, &stored, &dataset, &fvm, mv, c.temp as f64, c.ecc, c.runs, seed,
        )?;
        println!("mv={mv} median_error_pct={:.4}", rep.median_error_pct);
        for (run, err) in rep.per_run.iter().enumerate() {
            rows.push(EvalRow {
                voltage_mv: mv,
                ecc: c.ecc,
                placement: strategy.to_string(),
                run: run as u32,
                error_pct: *err,
            });
        }
    }
    let csv = c.out.join("eval.csv");
    report::write_eval_csv(&csv, &rows)?;
    let mut files = vec![csv];

    if let Some(injections) = c.vulnerability {
        let vuln = layer_vulnerability(&network, &dataset, injections, seed);
        let path = c.out.join("vulnerability.csv");
        report::write_vulnerability_csv(&path, &vuln)?;
        files.push(path);
    }

    let mut config = c.chip.config_json();
    let extra = serde_json::json!({
        "weights": c.weights.as_ref().map(|p| p.display().to_string()),
        "images": c.images.as_ref().map(|p| p.display().to_string()),
        "labels": c.labels.as_ref().map(|p| p.display().to_string()),
        "samples": c.samples,
        "placement": c.placement,
        "ecc": c.ecc,
        "runs": c.runs,
        "temp_c": c.temp,
        "voltage_mv": c.voltage,
        "vulnerability": c.vulnerability,
        "seed": seed,
    });
    merge(&mut config, extra);
    finish(RunManifest::new("nn-eval", config), &c.out, &files)
}

fn cmd_placement(c: PlacementCmd) -> Result<()> {
    ensure_out(&c.out)?;
    let seed = resolve_seed(c.seed)?;
    let strategy: PlacementStrategy = c.strategy.parse()?;
    let fvm = c.chip.materialize(None)?;
    let p = fvm.profile();

    let specs = match &c.weights {
        Some(path) => Network::load(path)?.specs(),
        None => match c.topology {
            TopologyArg::Reference => reference_specs(),
            TopologyArg::Synthetic => synthetic::network(seed).specs(),
        },
    };

    let clusters = cluster_fvm(&fvm, seed)?;
    let assignment = assign(&clusters, &specs, strategy, seed)?;

    let tcl = c.out.join("placement.tcl");
    let text = emit_constraints(&assignment, p.num_brams, c.grid_cols);
    std::fs::write(&tcl, text).map_err(|e| Error::io(&tcl, e))?;
    let json = c.out.join("assignment.json");
    assignment.to_json_file(&json)?;

    println!(
        "blocks={} dispersion={}",
        assignment.mapping.len(),
        dispersion(&assignment, p.num_brams, c.grid_cols)
    );

    let mut config = c.chip.config_json();
    let extra = serde_json::json!({
        "strategy": c.strategy,
        "topology": match c.topology {
            TopologyArg::Reference => "reference",
            TopologyArg::Synthetic => "synthetic",
        },
        "weights": c.weights.as_ref().map(|p| p.display().to_string()),
        "grid_cols": c.grid_cols,
        "seed": seed,
    });
    merge(&mut config, extra);
    finish(RunManifest::new("placement", config), &c.out, &[tcl, json])
}

fn cmd_optimal_voltage(c: OptimalVoltageCmd) -> Result<()> {
    ensure_out(&c.out)?;

    let power_rows = crate::power::read_power_file(&c.power)?;
    let evals = report::read_eval_csv(&c.error)?;

    let mut levels: Vec<u32> = Vec::new();
    for r in &power_rows {
        if r.2 == c.ecc && !levels.contains(&r.0) {
            levels.push(r.0);
        }
    }
    levels.sort_unstable_by(|a, b| b.cmp(a));

    let mut power = Vec::new();
    let mut error = Vec::new();
    let mut kept = Vec::new();
    for &mv in &levels {
        let w = power_rows
            .iter()
            .find(|r| r.0 == mv && r.2 == c.ecc)
            .map(|r| r.1)
            .expect("level came from this table");
        let mut errs: Vec<f64> = evals
            .iter()
            .filter(|e| e.voltage_mv == mv && e.ecc == c.ecc && e.placement == c.placement)
            .map(|e| e.error_pct)
            .collect();
        if errs.is_empty() {
            continue;
        }
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = if errs.len() % 2 == 1 {
            errs[errs.len() / 2]
        } else {
            (errs[errs.len() / 2 - 1] + errs[errs.len() / 2]) / 2.0
        };
        kept.push(mv);
        power.push(w);
        error.push(median);
    }
    if kept.len() < 2 {
        return Err(Error::InvalidConfig {
            reason: format!(
                "only {} voltage level(s) appear in both inputs for placement `{}` ecc={}",
                kept.len(),
                c.placement,
                c.ecc as u8
            ),
        });
    }

    let tradeoff = optimal_voltage(&kept, &power, &error)?;
    let csv = c.out.join("tradeoff.csv");
    report::write_tradeoff_csv(&csv, &tradeoff)?;
    println!("optimal_voltage_mv={}", tradeoff.voltage_mv);

    let config = serde_json::json!({
        "power": c.power.display().to_string(),
        "error": c.error.display().to_string(),
        "placement": c.placement,
        "ecc": c.ecc,
    });
    finish(RunManifest::new("optimal-voltage", config), &c.out, &[csv])
}

fn cmd_report(c: ReportCmd) -> Result<()> {
    match c {
        ReportCmd::FaultPower { sweep, out } => {
            ensure_out(&out)?;
            let data = report::read_sweep_csv(&sweep)?;
            let csv = out.join("fault-power.csv");
            report::write_fault_power_bundle(&csv, &data)?;
            let config = serde_json::json!({ "sweep": sweep.display().to_string() });
            finish(RunManifest::new("report-fault-power", config), &out, &[csv])
        }
        ReportCmd::Compare { a, b, label_a, label_b, out } => {
            ensure_out(&out)?;
            let da = report::read_sweep_csv(&a)?;
            let db = report::read_sweep_csv(&b)?;
            let csv = out.join("compare.csv");
            report::write_compare_bundle(&csv, &da, &db, &label_a, &label_b)?;
            let config = serde_json::json!({
                "a": a.display().to_string(),
                "b": b.display().to_string(),
                "label_a": label_a,
                "label_b": label_b,
            });
            finish(RunManifest::new("report-compare", config), &out, &[csv])
        }
        ReportCmd::PlacementBars { eval, voltage, out } => {
            ensure_out(&out)?;
            let rows = report::read_eval_csv(&eval)?;
            let csv = out.join("placement-bars.csv");
            report::write_placement_bundle(&csv, &rows, voltage)?;
            let config = serde_json::json!({
                "eval": eval.display().to_string(),
                "voltage_mv": voltage,
            });
            finish(RunManifest::new("report-placement-bars", config), &out, &[csv])
        }
    }
}

fn merge(base: &mut serde_json::Value, extra: serde_json::Value) {
    if let (Some(b), Some(e)) = (base.as_object_mut(), extra.as_object()) {
        for (k, v) in e {
            b.insert(k.clone(), v.clone());
        }
    }
}
