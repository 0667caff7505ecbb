//! Command-line surface for `pvaudit`: `derive`, `plot`, `audit`, `count`
//! and `simulate`.
//!
//! Exit codes: 0 success (whatever the verdict), 2 usage or configuration,
//! 3 schema mismatch, 4 no records, 5 invalid data, 6 I/O.

pub mod error;
pub mod numfmt;
pub mod report;
pub mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pvaudit::counting::{counts_to_csv, parse_counts, summarize_spaces};
use pvaudit::diagnostics::{
    classify_shape, expectation_plot, flag_outliers, pvalue_plot, volcano_plot, OutlierRules, ShapeRules,
};
use pvaudit::model::{parse_dataset, record_fields, Dataset, CSV_COLUMNS, DEFAULT_CONFIDENCE_LEVEL};
use pvaudit::sim::{greenwald_censor_rate, run_experiment, SimConfig, SimOutcome};
use pvaudit::stats::{dataset_effects, derive_and_rank, pool_dl, Conversion, Scale};

pub use error::{CliError, CliResult};
use numfmt::fmt_num;
use report::{AuditConfig, AuditReport, SearchSpaceSection, StudyRow};

/// Refs of the seven studies set apart as outliers in the soy/LDL data.
pub const SOY_LDL_OUTLIER_REFS: [u32; 7] = [29, 33, 57, 45, 32, 30, 37];
/// The one outlier of the seven that is not extreme by p-value (Jenkins 1989).
pub const SOY_LDL_MANUAL_REFS: [u32; 1] = [37];

#[derive(Debug, Parser)]
#[command(name = "pvaudit", version, about = "Audit the p-values behind a meta-analysis")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Input file (CSV, or JSON when the name ends in .json).
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file; stdout when omitted (required for `plot`).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Confidence level of the input limits [default: the dataset's, else 0.95].
    #[arg(long, global = true)]
    pub confidence_level: Option<f64>,
    /// Two-sided critical value [default: 1.96 at 95%, else the exact quantile].
    #[arg(long, global = true)]
    pub critical_value: Option<f64>,
    /// Use the exact normal quantile for the confidence level instead of 1.96.
    #[arg(long, global = true)]
    pub exact_critical: bool,
    /// Scale on which the standard error is recovered from the limits.
    #[arg(long, global = true, value_enum, default_value_t = ScaleArg::Linear)]
    pub scale: ScaleArg,
    /// Random seed for `simulate` [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Named configuration bundle.
    #[arg(long, global = true, value_enum, default_value_t = Profile::Default)]
    pub profile: Profile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Linear,
    Log,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Linear => Scale::Linear,
            ScaleArg::Log => Scale::Log,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Profile {
    Default,
    /// z* = 1.96, linear scale, p threshold 1e-3, Jenkins 1989 flagged by
    /// hand, the seven outliers excluded from volcano plots.
    SoyLdl,
}

impl Profile {
    fn name(self) -> &'static str {
        match self {
            Profile::Default => "default",
            Profile::SoyLdl => "soy-ldl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PlotKindArg {
    Pvalue,
    Expectation,
    Volcano,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CensorPreset {
    Greenwald,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Append se, z, p and rank columns to a study CSV.
    Derive,
    /// Render a p-value, expectation or volcano plot as SVG plus CSV series.
    Plot {
        /// Which plot to draw.
        #[arg(long, value_enum)]
        kind: PlotKindArg,
        /// Zero-based row indices to leave out (volcano only).
        #[arg(long, value_delimiter = ',')]
        exclude: Vec<usize>,
        /// Leave out rows with these ref ids (volcano only).
        #[arg(long, value_delimiter = ',')]
        exclude_refs: Vec<u32>,
    },
    /// Run the full pipeline and write a JSON report.
    Audit {
        /// Optional search-space counting CSV.
        #[arg(long)]
        counts: Option<PathBuf>,
        /// Flag studies with p below this value [default: 1e-3].
        #[arg(long)]
        p_threshold: Option<f64>,
        /// Leave-one-out influence threshold; `inf` disables it.
        #[arg(long)]
        influence_threshold: Option<f64>,
        /// Zero-based rows to flag by hand.
        #[arg(long, value_delimiter = ',')]
        manual: Vec<usize>,
        /// Flag rows with these ref ids by hand.
        #[arg(long, value_delimiter = ',')]
        manual_refs: Vec<u32>,
    },
    /// Compute search spaces from a counting CSV.
    Count {
        /// Write JSON (entries and summary) instead of CSV.
        #[arg(long)]
        json: bool,
    },
    /// Simulate literatures and classify their p-value plots.
    Simulate {
        /// JSON SimConfig; flags given explicitly override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Studies per literature [default: 50].
        #[arg(long)]
        n: Option<usize>,
        /// Fraction of studies with a true effect, in [0, 1] [default: 0].
        #[arg(long)]
        effect_fraction: Option<f64>,
        /// Mean z-statistic of true-effect studies [default: 0].
        #[arg(long)]
        noncentrality: Option<f64>,
        /// Probability that a non-significant study goes unpublished [default: 0].
        #[arg(long)]
        censor_rate: Option<f64>,
        /// Derive the censor rate from a named preset instead.
        #[arg(long, value_enum)]
        censor_preset: Option<CensorPreset>,
        /// Analyses tried per study, keeping the smallest p [default: 1].
        #[arg(long)]
        hack_k: Option<u32>,
        /// Number of simulated literatures [default: 100].
        #[arg(long)]
        replicates: Option<usize>,
    },
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn input_path(g: &GlobalArgs) -> CliResult<&Path> {
    g.input
        .as_deref()
        .ok_or_else(|| CliError::Usage("--input is required".into()))
}

/// Reads and validates the study dataset named by `--input`.
pub fn load_dataset(g: &GlobalArgs) -> CliResult<Dataset> {
    let path = input_path(g)?;
    let text = read_text(path)?;
    let mut ds = if path.extension().is_some_and(|e| e == "json") {
        Dataset::from_json(&text)?
    } else {
        let mut ds = parse_dataset(&text)?;
        ds.label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        ds
    };
    if ds.is_empty() {
        return Err(CliError::NoRecords(path.display().to_string()));
    }
    if let Some(level) = g.confidence_level {
        ds.confidence_level = level;
    }
    Ok(ds)
}

/// Resolves z* and scale from the flags and the dataset's confidence level.
pub fn conversion(g: &GlobalArgs, ds: &Dataset) -> CliResult<Conversion> {
    let level = ds.confidence_level;
    let scale = Scale::from(g.scale);
    let conv = match g.critical_value {
        Some(cv) => Conversion::with_critical_value(level, cv, scale)?,
        None if g.exact_critical || level != DEFAULT_CONFIDENCE_LEVEL => Conversion::exact(level, scale)?,
        None => Conversion::with_critical_value(level, pvaudit::stats::ROUNDED_CRITICAL_VALUE, scale)?,
    };
    Ok(conv)
}

fn derived(g: &GlobalArgs) -> CliResult<(Dataset, Conversion)> {
    let ds = load_dataset(g)?;
    let conv = conversion(g, &ds)?;
    Ok((derive_and_rank(&ds, &conv)?, conv))
}

pub fn cmd_derive(g: &GlobalArgs) -> CliResult<String> {
    let (ds, _) = derived(g)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = CSV_COLUMNS.iter().copied().chain(["se", "z", "p", "rank"]).collect();
    w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
    for (i, (r, d)) in ds.records.iter().zip(ds.derived()?).enumerate() {
        if d.p_floored {
            eprintln!("warning: row {i}: p-value underflowed and was floored at {:e}", d.p);
        }
        let mut row: Vec<String> = record_fields(r).to_vec();
        row.extend([
            fmt_num(d.se),
            fmt_num(d.z),
            fmt_num(d.p),
            d.rank.expect("ranked").to_string(),
        ]);
        w.write_record(&row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("utf-8 csv"))
}

/// Files written by `plot`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotFiles {
    pub svg: PathBuf,
    pub series: PathBuf,
    pub references: PathBuf,
}

pub fn plot_paths(svg: &Path) -> PlotFiles {
    let stem = svg.with_extension("");
    let sibling = |suffix: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    };
    PlotFiles {
        svg: svg.to_path_buf(),
        series: sibling(".csv"),
        references: sibling(".refs.csv"),
    }
}

pub fn cmd_plot(
    g: &GlobalArgs,
    kind: PlotKindArg,
    exclude: &[usize],
    exclude_refs: &[u32],
) -> CliResult<PlotFiles> {
    let out = g
        .output
        .as_deref()
        .ok_or_else(|| CliError::Usage("plot needs --output <file.svg>".into()))?;
    let (ds, _) = derived(g)?;
    let series = match kind {
        PlotKindArg::Pvalue => pvalue_plot(&ds)?,
        PlotKindArg::Expectation => expectation_plot(&ds)?,
        PlotKindArg::Volcano => {
            let mut rows = exclude.to_vec();
            let refs: &[u32] = if exclude.is_empty() && exclude_refs.is_empty() && g.profile == Profile::SoyLdl {
                &SOY_LDL_OUTLIER_REFS
            } else {
                exclude_refs
            };
            rows.extend(ds.rows_with_refs(refs));
            rows.sort_unstable();
            rows.dedup();
            volcano_plot(&ds, &rows)?
        }
    };
    let files = plot_paths(out);
    for (path, text) in [
        (&files.svg, svg::render(&series)),
        (&files.series, svg::series_csv(&series)),
        (&files.references, svg::reference_csv(&series)),
    ] {
        write_text(Some(path), &text)?;
    }
    Ok(files)
}

#[derive(Debug, Clone, Default)]
pub struct AuditOptions {
    pub counts: Option<PathBuf>,
    pub p_threshold: Option<f64>,
    pub influence_threshold: Option<f64>,
    pub manual: Vec<usize>,
    pub manual_refs: Vec<u32>,
}

pub fn cmd_audit(g: &GlobalArgs, opts: &AuditOptions) -> CliResult<AuditReport> {
    let (ds, conv) = derived(g)?;
    let soy = g.profile == Profile::SoyLdl;

    let p_threshold = opts.p_threshold.unwrap_or(1e-3);
    let influence_threshold = opts
        .influence_threshold
        .unwrap_or(if soy { f64::INFINITY } else { OutlierRules::default().influence_threshold });
    let mut manual = opts.manual.clone();
    let manual_refs: &[u32] = if soy && opts.manual.is_empty() && opts.manual_refs.is_empty() {
        &SOY_LDL_MANUAL_REFS
    } else {
        &opts.manual_refs
    };
    manual.extend(ds.rows_with_refs(manual_refs));
    manual.sort_unstable();
    manual.dedup();

    let rules = ShapeRules::default();
    let shape = classify_shape(&ds, &rules)?;
    let outlier_rules = OutlierRules {
        p_threshold,
        influence_threshold,
        scale: conv.scale,
    };
    let outliers = flag_outliers(&ds, &outlier_rules, &manual)?;
    let pool = if ds.len() >= 2 {
        Some(pool_dl(&dataset_effects(&ds, conv.scale)?)?)
    } else {
        None
    };
    let search_space = match &opts.counts {
        Some(path) => {
            let entries = parse_counts(&read_text(path)?)?;
            if entries.is_empty() {
                return Err(CliError::NoRecords(path.display().to_string()));
            }
            let summary = summarize_spaces(&entries)?;
            Some(SearchSpaceSection { entries, summary })
        }
        None => None,
    };

    let studies = ds
        .records
        .iter()
        .zip(ds.derived()?)
        .enumerate()
        .map(|(row, (r, d))| StudyRow {
            row,
            author: r.author.clone(),
            year: r.year,
            comment: r.comment.clone(),
            ref_id: r.ref_id,
            rr: r.rr,
            cl_low: r.cl_low,
            cl_high: r.cl_high,
            se: d.se,
            z: d.z,
            p: d.p,
            rank: d.rank.expect("ranked"),
            p_floored: d.p_floored,
        })
        .collect();

    let report = AuditReport {
        tool: report::TOOL.into(),
        version: report::VERSION.into(),
        label: ds.label.clone(),
        config: AuditConfig {
            profile: g.profile.name().into(),
            confidence_level: conv.confidence_level,
            critical_value: conv.critical_value,
            scale: conv.scale,
            p_threshold,
            influence_threshold: influence_threshold.is_finite().then_some(influence_threshold),
            manual_rows: manual,
            shape_rules: rules,
            seed: g.seed.unwrap_or(0),
        },
        studies,
        shape,
        outliers,
        pool,
        search_space,
    };
    // Numbers are rounded on output; reparse so the returned value matches the file.
    Ok(AuditReport::from_json(&report.to_json()).expect("report reparses"))
}

#[derive(Debug, Serialize)]
struct CountOutput<'a> {
    entries: &'a [pvaudit::counting::SearchSpaceEntry],
    summary: pvaudit::counting::SpaceSummary,
}

pub fn cmd_count(g: &GlobalArgs, json: bool) -> CliResult<String> {
    let path = input_path(g)?;
    let entries = parse_counts(&read_text(path)?)?;
    if entries.is_empty() {
        return Err(CliError::NoRecords(path.display().to_string()));
    }
    let summary = summarize_spaces(&entries)?;
    if json {
        Ok(numfmt::to_json(&CountOutput {
            entries: &entries,
            summary,
        }))
    } else {
        eprintln!(
            "{} studies: median search space {}, min {}, max {}",
            summary.count,
            fmt_num(summary.median),
            summary.min,
            summary.max
        );
        Ok(counts_to_csv(&entries))
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimulateOptions {
    pub config: Option<PathBuf>,
    pub n: Option<usize>,
    pub effect_fraction: Option<f64>,
    pub noncentrality: Option<f64>,
    pub censor_rate: Option<f64>,
    pub censor_preset: Option<CensorPreset>,
    pub hack_k: Option<u32>,
    pub replicates: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct SimulationReport {
    pub tool: String,
    pub version: String,
    pub censor_preset: Option<String>,
    #[serde(flatten)]
    pub outcome: SimOutcome,
}

pub fn sim_config(g: &GlobalArgs, o: &SimulateOptions) -> CliResult<SimConfig> {
    let mut cfg = match &o.config {
        Some(path) => serde_json::from_str::<SimConfig>(&read_text(path)?)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
        None => SimConfig {
            replicates: 100,
            ..SimConfig::default()
        },
    };
    if let Some(v) = o.n {
        cfg.n_studies = v;
    }
    if let Some(v) = o.effect_fraction {
        cfg.effect_fraction = v;
    }
    if let Some(v) = o.noncentrality {
        cfg.noncentrality = v;
    }
    if let Some(v) = o.hack_k {
        cfg.hack_k = v;
    }
    if let Some(v) = o.replicates {
        cfg.replicates = v;
    }
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    match (o.censor_rate, o.censor_preset) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--censor-rate and --censor-preset are mutually exclusive".into(),
            ))
        }
        (Some(v), None) => cfg.censor_rate = v,
        (None, Some(CensorPreset::Greenwald)) => cfg.censor_rate = greenwald_censor_rate(cfg.hack_k),
        (None, None) => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_simulate(g: &GlobalArgs, o: &SimulateOptions) -> CliResult<SimulationReport> {
    let cfg = sim_config(g, o)?;
    let outcome = run_experiment(&cfg, &ShapeRules::default())?;
    Ok(SimulationReport {
        tool: report::TOOL.into(),
        version: report::VERSION.into(),
        censor_preset: o.censor_preset.map(|_| "greenwald".to_string()),
        outcome,
    })
}

/// Runs one parsed command, writing its output.
pub fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    match cli.command {
        Command::Derive => write_text(g.output.as_deref(), &cmd_derive(g)?),
        Command::Plot {
            kind,
            exclude,
            exclude_refs,
        } => cmd_plot(g, kind, &exclude, &exclude_refs).map(|_| ()),
        Command::Audit {
            counts,
            p_threshold,
            influence_threshold,
            manual,
            manual_refs,
        } => {
            let opts = AuditOptions {
                counts,
                p_threshold,
                influence_threshold,
                manual,
                manual_refs,
            };
            write_text(g.output.as_deref(), &cmd_audit(g, &opts)?.to_json())
        }
        Command::Count { json } => write_text(g.output.as_deref(), &cmd_count(g, json)?),
        Command::Simulate {
            config,
            n,
            effect_fraction,
            noncentrality,
            censor_rate,
            censor_preset,
            hack_k,
            replicates,
        } => {
            let opts = SimulateOptions {
                config,
                n,
                effect_fraction,
                noncentrality,
                censor_rate,
                censor_preset,
                hack_k,
                replicates,
            };
            write_text(g.output.as_deref(), &numfmt::to_json(&cmd_simulate(g, &opts)?))
        }
    }
}
