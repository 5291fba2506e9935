//! End-to-end experiment: grid, features, regret matrix, then coverings and
//! cluster reports for every regret budget.
//!
//! Output layout under the configured output directory:
//!
//! ```text
//! config.json  pipelines.json  regret.csv  regret.json
//! eps_<ε>/covering.json filtered.json baselines.json clusters.csv
//!         pareto.json cluster_levels.json importance.json
//! summary.csv  summary.txt  summary.json
//! ```
//!
//! `INCOMPLETE` exists while a run is in progress and stays behind, naming
//! the failed stage, if it aborts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use covsel_core::analysis::level_histograms;
use covsel_core::grid::GRID_SIZE;
use covsel_core::setcover::Covering;
use covsel_core::{
    build_cover_sets, cluster_sources, enumerate_grid, exact_cover, filter_representatives, greedy_cover,
    mdi_importance, pareto_report, random_baseline, AnalysisError, CoveringBounds, PipelineDirectory, RegretMatrix,
    SourceDataset, SourceId,
};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::formats::analysis::{BaselineFile, ImportanceFile, LevelsFile, ParetoFile};
use crate::formats::covering::{write_covering, BoundsRecord};
use crate::formats::regret::{render_percent_table, write_matrix, Provenance};
use crate::formats::{directory, features, write_json, write_string};
use crate::parallel;

pub const INCOMPLETE: &str = "INCOMPLETE";
pub const SUMMARY_JSON: &str = "summary.json";

/// Sample count per class above which a full-grid simulation needs `--full`.
pub const FULL_RUN_SAMPLES: usize = 500;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    pub force: bool,
    pub full: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub epsilon: f64,
    pub covering_size: usize,
    pub lower_bound: usize,
    pub exact: Option<usize>,
    pub exact_complete: bool,
    pub filtered_size: usize,
    pub filtered_uncovered: usize,
    pub clusters: usize,
    pub top2_share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceSummary {
    pub epsilon: f64,
    /// Parameter keys by decreasing MDI; empty when skipped.
    pub ranking: Vec<String>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub seed: u64,
    pub sources: usize,
    pub max_regret: f64,
    pub intrinsic_min: Option<f64>,
    pub intrinsic_max: Option<f64>,
    pub rows: Vec<SummaryRow>,
    pub importance: Vec<ImportanceSummary>,
}

fn eps_dir(out: &Path, eps: f64) -> PathBuf {
    out.join(format!("eps_{eps}"))
}

fn prepare_output_dir(out: &Path, force: bool) -> Result<()> {
    if out.exists() {
        if !out.is_dir() {
            return Err(Error::Config(format!("{} is not a directory", out.display())));
        }
        let non_empty = fs::read_dir(out).map_err(|e| Error::io(out, e))?.next().is_some();
        if non_empty {
            if !force {
                return Err(Error::Exists(out.to_path_buf()));
            }
            if !out.join(SUMMARY_JSON).exists() && !out.join(INCOMPLETE).exists() {
                return Err(Error::Config(format!("refusing to clear {}: it holds no previous run", out.display())));
            }
            fs::remove_dir_all(out).map_err(|e| Error::io(out, e))?;
        }
    }
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

struct Stages<'a> {
    out: &'a Path,
}

impl Stages<'_> {
    fn run<T>(&self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        write_string(&self.out.join(INCOMPLETE), &format!("running: {name}\n"))?;
        f().map_err(|e| {
            let _ = write_string(&self.out.join(INCOMPLETE), &format!("failed: {name}\nerror: {e}\n"));
            e.in_stage(name)
        })
    }
}

/// Sources of the experiment: loaded from feature files, or simulated on the
/// (possibly pinned) grid.
fn load_or_simulate(cfg: &ExperimentConfig, directory: &PipelineDirectory) -> Result<Vec<SourceDataset>> {
    match &cfg.paths.features {
        Some(path) => features::load_feature_files(&cfg.paths.resolve(path)),
        None => {
            let pipelines = directory.restrict(&cfg.pins()?)?;
            parallel::simulate_sources(&pipelines, &cfg.simulator_config())
        }
    }
}

pub(crate) fn check_full_gate(cfg: &ExperimentConfig, opts: RunOptions) -> Result<()> {
    let full_grid = cfg.paths.features.is_none() && cfg.pins.is_empty();
    if full_grid && cfg.simulator.samples_per_class > FULL_RUN_SAMPLES {
        if !opts.full {
            return Err(Error::Config(format!(
                "simulating all {GRID_SIZE} pipelines with {} samples per class is slow; pass --full to proceed",
                cfg.simulator.samples_per_class
            )));
        }
        eprintln!("warning: full grid at {} samples per class; expect a long run", cfg.simulator.samples_per_class);
    }
    Ok(())
}

/// Bounds for the covering problem; the exact search only runs on instances
/// within the configured size limit.
fn bounds(cfg: &ExperimentConfig, sets: &covsel_core::CoverSets, greedy: &Covering) -> Result<CoveringBounds> {
    if sets.n() <= cfg.exact.size_limit {
        Ok(exact_cover(sets, cfg.exact_options())?)
    } else {
        Ok(CoveringBounds::without_exact(sets, greedy))
    }
}

fn importance_skip_reason(e: &AnalysisError) -> Option<String> {
    match e {
        AnalysisError::SingleCluster(_) => Some("single cluster".into()),
        AnalysisError::NotInDirectory(id) => Some(format!("source {id} is not a grid pipeline")),
        AnalysisError::NoInformativeSplit => Some("no informative split".into()),
        _ => None,
    }
}

fn process_epsilon(
    cfg: &ExperimentConfig,
    out: &Path,
    matrix: &RegretMatrix,
    directory: &PipelineDirectory,
    eps: f64,
    baseline_seed: u64,
) -> Result<(SummaryRow, ImportanceSummary)> {
    let dir = eps_dir(out, eps);
    let sets = build_cover_sets(matrix, eps)?;
    let greedy = greedy_cover(&sets);
    let b = bounds(cfg, &sets, &greedy)?;
    let record = BoundsRecord::from(&b);
    write_covering(&dir.join("covering.json"), &greedy, record)?;

    let filtered = filter_representatives(&greedy, cfg.min_cover)?;
    write_covering(&dir.join("filtered.json"), &filtered, record)?;

    let ids = matrix.source_ids();
    let variants = random_baseline(ids.len(), filtered.len(), baseline_seed, cfg.baseline_variants)?
        .into_iter()
        .map(|subset| subset.into_iter().map(|i| ids[i]).collect::<Vec<SourceId>>())
        .collect();
    write_json(&dir.join("baselines.json"), &BaselineFile { seed: baseline_seed, k: filtered.len(), variants })?;

    let labeling = cluster_sources(&greedy, matrix, cfg.assignment_mode()?)?;
    crate::formats::analysis::write_clusters(&dir.join("clusters.csv"), &labeling)?;
    let pareto = pareto_report(&labeling)?;
    write_json(&dir.join("pareto.json"), &ParetoFile::from(&pareto))?;
    match level_histograms(&labeling, directory) {
        Ok(hist) => write_json(&dir.join("cluster_levels.json"), &LevelsFile::new(&hist))?,
        Err(AnalysisError::NotInDirectory(_)) => {}
        Err(e) => return Err(e.into()),
    }

    let importance = match mdi_importance(&labeling, directory, &cfg.forest_config()) {
        Ok(report) => {
            let file = ImportanceFile::from(&report);
            write_json(&dir.join("importance.json"), &file)?;
            ImportanceSummary {
                epsilon: eps,
                ranking: file.mdi.ranking().iter().map(|p| p.key().to_string()).collect(),
                skipped: None,
            }
        }
        Err(e) => match importance_skip_reason(&e) {
            Some(reason) => ImportanceSummary { epsilon: eps, ranking: Vec::new(), skipped: Some(reason) },
            None => return Err(e.into()),
        },
    };

    let row = SummaryRow {
        epsilon: eps,
        covering_size: greedy.len(),
        lower_bound: b.lower_bound,
        exact: b.exact_size,
        exact_complete: b.exact_complete,
        filtered_size: filtered.len(),
        filtered_uncovered: filtered.uncovered().len(),
        clusters: pareto.sizes.len(),
        top2_share: pareto.top_share(2),
    };
    Ok((row, importance))
}

/// Runs the whole experiment described by `cfg`, writing every output file.
pub fn run_experiment(cfg: &ExperimentConfig, opts: RunOptions) -> Result<Summary> {
    cfg.validate()?;
    check_full_gate(cfg, opts)?;
    let out = cfg.paths.outputs_dir();
    prepare_output_dir(&out, opts.force)?;
    let stages = Stages { out: &out };

    let config_hash = cfg.hash();
    write_string(&out.join("config.json"), &ExperimentConfig { paths: Default::default(), ..cfg.clone() }.to_json())?;

    let directory = stages.run("grid", || {
        let directory = enumerate_grid();
        directory::write_directory(&out.join("pipelines.json"), &directory)?;
        Ok(directory)
    })?;
    let datasets = stages.run("features", || load_or_simulate(cfg, &directory))?;
    let matrix = stages.run("regret", || {
        let matrix = parallel::regret_matrix(&datasets, cfg.ridge)?;
        let provenance = Provenance {
            seed: Some(cfg.seed),
            config_hash: Some(config_hash.clone()),
            ridge: Some(cfg.ridge),
            test_samples: Some(datasets.iter().map(|d| d.test().len()).collect()),
        };
        write_matrix(&out.join("regret.csv"), &matrix, provenance)?;
        Ok(matrix)
    })?;
    drop(datasets);

    let mut rows = Vec::with_capacity(cfg.epsilons.len());
    let mut importance = Vec::new();
    for (i, &eps) in cfg.epsilons.iter().enumerate() {
        let (row, imp) = stages.run(&format!("epsilon {eps}"), || {
            process_epsilon(cfg, &out, &matrix, &directory, eps, cfg.baseline_seed(i))
        })?;
        rows.push(row);
        importance.push(imp);
    }
    if let Some(eps) = cfg.importance_epsilon.filter(|e| !cfg.epsilons.contains(e)) {
        let (_, imp) = stages.run(&format!("epsilon {eps}"), || {
            process_epsilon(cfg, &out, &matrix, &directory, eps, cfg.baseline_seed(cfg.epsilons.len()))
        })?;
        importance.push(imp);
    }

    importance.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
    let intrinsic = matrix.intrinsic();
    let summary = Summary {
        config_hash,
        seed: cfg.seed,
        sources: matrix.n(),
        max_regret: matrix.max_regret(),
        intrinsic_min: intrinsic.map(|v| v.iter().copied().fold(f64::INFINITY, f64::min)),
        intrinsic_max: intrinsic.map(|v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        rows,
        importance,
    };
    stages.run("summary", || {
        write_string(&out.join("summary.csv"), &summary_csv(&summary))?;
        write_string(&out.join("summary.txt"), &render_summary(&summary))?;
        write_json(&out.join(SUMMARY_JSON), &summary)
    })?;
    fs::remove_file(out.join(INCOMPLETE)).map_err(|e| Error::io(out.join(INCOMPLETE), e))?;
    Ok(summary)
}

/// Machine-readable covering sizes; fractions throughout.
pub fn summary_csv(summary: &Summary) -> String {
    let mut out = String::from(
        "epsilon,covering_size,lower_bound,exact,exact_complete,filtered_size,filtered_uncovered,clusters,top2_share\n",
    );
    for r in &summary.rows {
        let exact = r.exact.map(|e| e.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.epsilon,
            r.covering_size,
            r.lower_bound,
            exact,
            r.exact_complete,
            r.filtered_size,
            r.filtered_uncovered,
            r.clusters,
            r.top2_share
        )
        .unwrap();
    }
    out
}

/// Human-readable report, percentages throughout.
pub fn render_summary(summary: &Summary) -> String {
    let mut out = format!("Sources: {}    seed: {}\n", summary.sources, summary.seed);
    if let (Some(lo), Some(hi)) = (summary.intrinsic_min, summary.intrinsic_max) {
        writeln!(out, "Intrinsic P_E: {:.1}% to {:.1}%", lo * 100.0, hi * 100.0).unwrap();
    }
    writeln!(out, "Largest regret: {:.1}%\n", summary.max_regret * 100.0).unwrap();
    writeln!(out, "Covering size per regret budget").unwrap();
    writeln!(
        out,
        "{:>8} {:>8} {:>8} {:>8} {:>10} {:>10}",
        "eps (%)", "|N_eps|", "lower", "exact", "filtered", "top-2 (%)"
    )
    .unwrap();
    for r in &summary.rows {
        let exact = r.exact.map_or_else(|| "n/a".to_string(), |e| e.to_string());
        writeln!(
            out,
            "{:>8.1} {:>8} {:>8} {:>8} {:>10} {:>10.1}",
            r.epsilon * 100.0,
            r.covering_size,
            r.lower_bound,
            exact,
            r.filtered_size,
            r.top2_share * 100.0
        )
        .unwrap();
    }
    if !summary.importance.is_empty() {
        writeln!(out, "\nParameter importance (MDI, most important first)").unwrap();
        for imp in &summary.importance {
            match &imp.skipped {
                Some(reason) => writeln!(out, "{:>8.1}  skipped: {reason}", imp.epsilon * 100.0),
                None => writeln!(out, "{:>8.1}  {}", imp.epsilon * 100.0, imp.ranking.join(" > ")),
            }
            .unwrap();
        }
    }
    out
}

/// Percent table of a regret matrix, for reports.
pub fn render_regret(matrix: &RegretMatrix) -> String {
    render_percent_table(matrix.source_ids(), matrix.values(), "Regret (%)")
}
