//! Command-line interface. Each subcommand maps to a `cmd_*` function that
//! tests can also call directly.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use covsel_core::grid::Parameter;
use covsel_core::{
    build_cover_sets, enumerate_grid, exact_cover, filter_representatives, greedy_cover, mdi_importance,
    random_baseline, AssignmentMode, Covering, CoveringBounds, ExactOptions,
};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::experiment::{self, render_regret, render_summary, run_experiment, RunOptions, Summary};
use crate::formats::analysis::{read_clusters, write_clusters, BaselineFile, ImportanceFile};
use crate::formats::covering::{covering_to_json, read_covering, BoundsRecord};
use crate::formats::regret::{read_matrix, write_matrix, Provenance};
use crate::formats::{directory, features, read_json, to_json, write_string};
use crate::parallel;

#[derive(Debug, Parser)]
#[command(name = "covsel", version, about = "Select representative cover sources under a regret budget")]
pub struct Cli {
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    pub force: bool,
    /// Directory that relative paths are resolved against.
    #[arg(long, global = true)]
    pub workdir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output file; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the 243-pipeline directory.
    Grid {
        #[arg(long, default_value = "pipelines.json")]
        out: PathBuf,
    },
    /// Simulate cover and stego features for the (pinned) grid.
    Simulate {
        #[arg(long, default_value = "features.csv")]
        out: PathBuf,
        /// Hold a parameter at a level, e.g. `denoising=1`. Repeatable.
        #[arg(long = "pin", value_parser = parse_pin)]
        pins: Vec<(Parameter, u8)>,
        #[arg(long)]
        dimension: Option<usize>,
        #[arg(long)]
        samples_per_class: Option<usize>,
        /// Allow simulating the full grid at large sample counts.
        #[arg(long)]
        full: bool,
    },
    /// Train one detector per source and write the regret matrix.
    Regret {
        /// Feature CSV file or directory of CSV files.
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value = "regret.csv")]
        out: PathBuf,
        #[arg(long)]
        ridge: Option<f64>,
    },
    /// Greedy covering of a regret matrix, with size bounds.
    Cover {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Drop representatives covering fewer sources.
        #[arg(long)]
        min_cover: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Drop representatives of a covering that cover too few sources.
    Filter {
        #[arg(long)]
        covering: PathBuf,
        #[arg(long)]
        min_cover: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Draw random subsets as large as a covering.
    Baseline {
        #[arg(long)]
        covering: PathBuf,
        #[arg(long)]
        variants: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Label every source with a representative of a covering.
    Clusters {
        #[arg(long)]
        covering: PathBuf,
        #[arg(long)]
        matrix: PathBuf,
        /// `greedy-order` or `min-regret`.
        #[arg(long)]
        mode: Option<String>,
        #[command(flatten)]
        output: Output,
    },
    /// Parameter importance (MDI) of a cluster labeling.
    Importance {
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        trees: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Run the whole experiment described by the configuration.
    Run {
        #[arg(long = "pin", value_parser = parse_pin)]
        pins: Vec<(Parameter, u8)>,
        /// Allow the full grid at large sample counts.
        #[arg(long)]
        full: bool,
    },
    /// Print the summary of a finished run.
    Report {
        /// Output directory of the run; defaults to the configured one.
        #[arg(long)]
        outputs: Option<PathBuf>,
        /// Also print this regret matrix in percent.
        #[arg(long)]
        matrix: Option<PathBuf>,
    },
}

fn parse_pin(s: &str) -> std::result::Result<(Parameter, u8), String> {
    let (name, level) = s.split_once('=').ok_or_else(|| format!("expected PARAMETER=LEVEL, got `{s}`"))?;
    let parameter = Parameter::parse(name.trim()).map_err(|e| e.to_string())?;
    let level = level.trim().parse().map_err(|_| format!("`{level}` is not a level"))?;
    Ok((parameter, level))
}

/// Settings shared by all subcommands.
pub struct Context {
    pub config: ExperimentConfig,
    pub force: bool,
}

impl Context {
    pub fn new(cli: &Cli) -> Result<Self> {
        let mut config = match &cli.config {
            Some(path) => match &cli.workdir {
                Some(dir) => ExperimentConfig::load(&dir.join(path))?,
                None => ExperimentConfig::load(path)?,
            },
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        if let Some(dir) = &cli.workdir {
            config.paths.workdir = dir.clone();
        }
        Ok(Self { config, force: cli.force })
    }

    pub fn path(&self, p: &Path) -> PathBuf {
        self.config.paths.resolve(p)
    }

    fn writable(&self, p: &Path) -> Result<PathBuf> {
        let path = self.path(p);
        if path.exists() && !self.force {
            return Err(Error::Exists(path));
        }
        Ok(path)
    }

    fn emit(&self, output: &Output, contents: &str) -> Result<()> {
        match &output.out {
            Some(p) => write_string(&self.writable(p)?, contents),
            None => {
                print!("{contents}");
                Ok(())
            }
        }
    }
}

pub fn cmd_grid(ctx: &Context, out: &Path) -> Result<PathBuf> {
    let path = ctx.writable(out)?;
    directory::write_directory(&path, &enumerate_grid())?;
    Ok(path)
}

pub fn cmd_simulate(ctx: &Context, out: &Path, pins: &[(Parameter, u8)], full: bool) -> Result<PathBuf> {
    let mut cfg = ctx.config.clone();
    for (p, level) in pins {
        cfg.pins.insert(p.key().to_string(), *level);
    }
    cfg.validate()?;
    experiment::check_full_gate(&cfg, RunOptions { force: ctx.force, full })?;
    let path = ctx.writable(out)?;
    let pipelines = enumerate_grid().restrict(&cfg.pins()?)?;
    let datasets = parallel::simulate_sources(&pipelines, &cfg.simulator_config())?;
    features::write_feature_file(&path, &datasets)?;
    Ok(path)
}

pub fn cmd_regret(ctx: &Context, features_path: &Path, out: &Path, ridge: f64) -> Result<PathBuf> {
    let path = ctx.writable(out)?;
    let datasets = features::load_feature_files(&ctx.path(features_path))?;
    let matrix = parallel::regret_matrix(&datasets, ridge)?;
    let provenance = Provenance {
        seed: None,
        config_hash: None,
        ridge: Some(ridge),
        test_samples: Some(datasets.iter().map(|d| d.test().len()).collect()),
    };
    write_matrix(&path, &matrix, provenance)?;
    Ok(path)
}

/// Greedy covering of the matrix in `matrix_path`, optionally filtered, with
/// bounds from the exact solver when the instance is small enough.
pub fn cmd_cover(
    matrix_path: &Path,
    epsilon: f64,
    min_cover: Option<usize>,
    exact: ExactOptions,
) -> Result<(Covering, BoundsRecord)> {
    let (matrix, _) = read_matrix(matrix_path)?;
    let sets = build_cover_sets(&matrix, epsilon)?;
    let greedy = greedy_cover(&sets);
    let bounds = if sets.n() <= exact.size_limit {
        exact_cover(&sets, exact)?
    } else {
        CoveringBounds::without_exact(&sets, &greedy)
    };
    let covering = match min_cover {
        Some(m) => filter_representatives(&greedy, m)?,
        None => greedy,
    };
    Ok((covering, BoundsRecord::from(&bounds)))
}

pub fn cmd_baseline(covering_path: &Path, seed: u64, variants: usize) -> Result<BaselineFile> {
    let (covering, _) = read_covering(covering_path)?;
    let ids = covering.source_ids();
    let k = covering.len();
    let variants = random_baseline(ids.len(), k, seed, variants)?
        .into_iter()
        .map(|s| s.into_iter().map(|i| ids[i]).collect())
        .collect();
    Ok(BaselineFile { seed, k, variants })
}

pub fn cmd_run(ctx: &Context, pins: &[(Parameter, u8)], full: bool) -> Result<Summary> {
    let mut cfg = ctx.config.clone();
    for (p, level) in pins {
        cfg.pins.insert(p.key().to_string(), *level);
    }
    run_experiment(&cfg, RunOptions { force: ctx.force, full })
}

pub fn cmd_report(ctx: &Context, outputs: Option<&Path>, matrix: Option<&Path>) -> Result<String> {
    let dir = match outputs {
        Some(p) => ctx.path(p),
        None => ctx.config.paths.outputs_dir(),
    };
    let incomplete = dir.join(experiment::INCOMPLETE);
    if incomplete.exists() {
        return Err(Error::Config(format!("{} marks an unfinished run", incomplete.display())));
    }
    let summary: Summary = read_json(&dir.join(experiment::SUMMARY_JSON))?;
    let mut text = render_summary(&summary);
    if let Some(m) = matrix {
        let (matrix, _) = read_matrix(&ctx.path(m))?;
        text.push('\n');
        text.push_str(&render_regret(&matrix));
    }
    Ok(text)
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli) -> Result<()> {
    let ctx = Context::new(cli)?;
    let cfg = &ctx.config;
    match &cli.command {
        Command::Grid { out } => {
            let path = cmd_grid(&ctx, out)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Simulate { out, pins, dimension, samples_per_class, full } => {
            let mut ctx = Context { config: cfg.clone(), force: ctx.force };
            if let Some(d) = dimension {
                ctx.config.simulator.dimension = *d;
            }
            if let Some(s) = samples_per_class {
                ctx.config.simulator.samples_per_class = *s;
            }
            let path = cmd_simulate(&ctx, out, pins, *full)?;
            eprintln!("wrote {}", path.display());
        }
        Command::Regret { features, out, ridge } => {
            let path = cmd_regret(&ctx, features, out, ridge.unwrap_or(cfg.ridge))?;
            eprintln!("wrote {}", path.display());
        }
        Command::Cover { matrix, epsilon, min_cover, output } => {
            let (covering, bounds) = cmd_cover(&ctx.path(matrix), *epsilon, *min_cover, cfg.exact_options())?;
            ctx.emit(output, &covering_to_json(&covering, bounds))?;
        }
        Command::Filter { covering, min_cover, output } => {
            let (c, bounds) = read_covering(&ctx.path(covering))?;
            let filtered = filter_representatives(&c, min_cover.unwrap_or(cfg.min_cover))?;
            ctx.emit(output, &covering_to_json(&filtered, bounds))?;
        }
        Command::Baseline { covering, variants, output } => {
            let file =
                cmd_baseline(&ctx.path(covering), cfg.baseline_seed(0), variants.unwrap_or(cfg.baseline_variants))?;
            ctx.emit(output, &to_json(&file))?;
        }
        Command::Clusters { covering, matrix, mode, output } => {
            let (c, _) = read_covering(&ctx.path(covering))?;
            let (m, _) = read_matrix(&ctx.path(matrix))?;
            let mode = match mode {
                Some(s) => AssignmentMode::parse(s)?,
                None => cfg.assignment_mode()?,
            };
            let labeling = covsel_core::cluster_sources(&c, &m, mode)?;
            match &output.out {
                Some(p) => write_clusters(&ctx.writable(p)?, &labeling)?,
                None => print!("{}", crate::formats::analysis::clusters_to_csv(&labeling)),
            }
        }
        Command::Importance { clusters, trees, output } => {
            let labeling = read_clusters(&ctx.path(clusters))?;
            let mut forest = cfg.forest_config();
            if let Some(t) = trees {
                forest.trees = *t;
            }
            let report = mdi_importance(&labeling, &enumerate_grid(), &forest)?;
            ctx.emit(output, &to_json(&ImportanceFile::from(&report)))?;
        }
        Command::Run { pins, full } => {
            let summary = cmd_run(&ctx, pins, *full)?;
            print!("{}", render_summary(&summary));
        }
        Command::Report { outputs, matrix } => {
            print!("{}", cmd_report(&ctx, outputs.as_deref(), matrix.as_deref())?);
        }
    }
    Ok(())
}
