use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use diversity_core::bench::{self, ModifiedMaxMinConfig, TrendReport};
use diversity_core::contributions::all_contributions;
use diversity_core::metric::read_points;
use diversity_core::noah::{self, BarrierRule, NoahConfig};
use diversity_core::properties::{regenerate_property_table, scan_sp_example_theta};
use diversity_core::selection::{clique_via_energy, select, CliqueInstance, CliqueOutcome, Method};
use diversity_core::{evaluate, DistanceMatrix, Graph, Indicator, Norm, Result};

#[derive(Parser)]
#[command(
    name = "diversity",
    version,
    about = "Diversity indicators, property checks and NOAH experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate indicators or per-point contributions.
    #[command(subcommand)]
    Indicators(IndicatorsCmd),
    /// Pick a k-subset maximizing diversity.
    Select {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value = "maxmin")]
        indicator: Indicator,
        #[arg(short, long)]
        k: usize,
        #[arg(long, default_value = "greedy")]
        method: Method,
    },
    /// Decide k-clique by minimizing Riesz energy on the graph metric.
    Clique {
        #[arg(long)]
        graph: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long, default_value_t = 1.0)]
        s: f64,
    },
    /// Regenerate the indicator property table on the fixture battery.
    Properties {
        /// Print the aligned table (default when no other output is chosen).
        #[arg(long)]
        table: bool,
        /// Print the table as CSV.
        #[arg(long)]
        csv: bool,
        /// Also scan θ for the Solow-Polasky submodularity example.
        #[arg(long)]
        sp_example: bool,
        #[arg(short, long, default_value_t = 2.0)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        theta: f64,
    },
    /// Case-study experiments.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Single NOAH runs.
    #[command(subcommand)]
    Noah(NoahCmd),
}

#[derive(Args)]
struct SpaceArgs {
    /// Distance matrix CSV (no header).
    #[arg(long, conflicts_with = "points", required_unless_present = "points")]
    matrix: Option<PathBuf>,
    /// Point coordinates CSV, one point per line.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(long, default_value = "l2")]
    norm: Norm,
}

impl SpaceArgs {
    fn load(&self) -> Result<DistanceMatrix> {
        match (&self.matrix, &self.points) {
            (Some(m), _) => DistanceMatrix::read_csv(m),
            (None, Some(p)) => DistanceMatrix::from_points(&read_points(p)?, self.norm),
            (None, None) => unreachable!("clap requires one of --matrix/--points"),
        }
    }
}

fn parse_subset(s: &str) -> std::result::Result<Vec<usize>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}")))
        .collect()
}

#[derive(Subcommand)]
enum IndicatorsCmd {
    /// Print the indicator value of a subset (default: all points).
    Eval {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value = "maxmin")]
        indicator: Indicator,
        #[arg(long, value_parser = parse_subset)]
        subset: Option<Vec<usize>>,
    },
    /// Print `index,contribution` for every member of the subset.
    Contrib {
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value = "maxmin")]
        indicator: Indicator,
        #[arg(long, value_parser = parse_subset)]
        subset: Option<Vec<usize>>,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Replicated NOAH runs with traces, stats and plots.
    Reproduce {
        /// Comma-separated driving indicators, or `all` for the three of the case study.
        #[arg(long, default_value = "all")]
        indicator: String,
        #[arg(short = 'R', long, default_value_t = 30)]
        replicates: usize,
        #[arg(long, default_value_t = 20)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// ε-efficient subset of the objective grid.
    EfficientSet {
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        #[arg(long = "box", default_value_t = 10.0)]
        box_size: f64,
        /// Write `x,y,efficient` rows to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print a character map of the member set.
        #[arg(long)]
        ascii: bool,
    },
    /// Two-sample t-test on two files of numbers.
    Ttest {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Use Welch's unequal-variance form instead of the pooled one.
        #[arg(long)]
        welch: bool,
    },
    /// Generations to reach a Max-Min target with and without contribution-aware parent selection.
    ModifiedMaxmin {
        #[arg(short = 'R', long, default_value_t = 1000)]
        replicates: usize,
        #[arg(long, default_value_t = 1.9)]
        target: f64,
        #[arg(long, default_value_t = 0.9)]
        prob: f64,
        #[arg(long, default_value_t = 1000)]
        cap: usize,
        /// Barrier as comma-separated components; default is the initial population's worst values.
        #[arg(long)]
        barrier: Option<String>,
        #[arg(long, default_value = "all")]
        barrier_rule: BarrierRule,
        /// End a run (censored) after `c` generations without improvement.
        #[arg(long)]
        stop_on_stall: bool,
        #[arg(short, long, default_value_t = 20)]
        c: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum NoahCmd {
    /// Run NOAH from a `key = value` config file.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out/noah")]
        out: PathBuf,
        /// Record Hausdorff distance to the case-study efficient set.
        #[arg(long)]
        hausdorff: bool,
    },
}

fn all_or(subset: Option<Vec<usize>>, dm: &DistanceMatrix) -> Vec<usize> {
    subset.unwrap_or_else(|| dm.all_indices())
}

fn read_numbers(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(i, t)| {
            t.parse::<f64>().map_err(|e| {
                diversity_core::Error::InvalidInput(format!("{}: value {}: '{t}': {e}", path.display(), i + 1))
            })
        })
        .collect()
}

fn indicators_for(spec: &str) -> Result<Vec<Indicator>> {
    if spec == "all" {
        return Ok(vec![
            Indicator::MaxMin,
            Indicator::riesz(2.0)?,
            Indicator::solow_polasky(1.0)?,
        ]);
    }
    spec.split(',').map(str::parse).collect()
}

fn run(cli: Cli) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Indicators(IndicatorsCmd::Eval {
            space,
            indicator,
            subset,
        }) => {
            let dm = space.load()?;
            let subset = all_or(subset, &dm);
            writeln!(out, "{}", significant(evaluate(&indicator, &dm, &subset)?, 12))?;
        }
        Command::Indicators(IndicatorsCmd::Contrib {
            space,
            indicator,
            subset,
        }) => {
            let dm = space.load()?;
            let subset = all_or(subset, &dm);
            let cv = all_contributions(&indicator, &dm, &subset)?;
            writeln!(out, "index,contribution")?;
            for (i, v) in cv.members.iter().zip(&cv.values) {
                match v {
                    Some(v) => writeln!(out, "{i},{v}")?,
                    None => writeln!(out, "{i},undefined")?,
                }
            }
        }
        Command::Select {
            space,
            indicator,
            k,
            method,
        } => {
            let dm = space.load()?;
            let r = select(&indicator, &dm, k, method)?;
            let idx: Vec<String> = r.subset.iter().map(usize::to_string).collect();
            writeln!(out, "subset = {}", idx.join(","))?;
            writeln!(out, "value = {}", r.value)?;
            writeln!(out, "evaluations = {}", r.evaluations)?;
        }
        Command::Clique { graph, k, s } => {
            let graph = Graph::read(graph)?;
            let rep = clique_via_energy(&CliqueInstance { graph, k, s })?;
            match &rep.outcome {
                CliqueOutcome::HasClique(c) => writeln!(out, "clique: {c:?}")?,
                CliqueOutcome::NoClique => writeln!(out, "no {k}-clique")?,
            }
            writeln!(
                out,
                "min energy = {} (bounds [{}, {}]); direct search agrees: {}",
                rep.min_energy, rep.lower_bound, rep.upper_bound, rep.agrees_with_direct_search
            )?;
        }
        Command::Properties {
            table,
            csv,
            sp_example,
            s,
            theta,
        } => {
            let t = regenerate_property_table(s, theta)?;
            if table || !csv {
                write!(out, "{}", t.to_text())?;
            }
            if csv {
                write!(out, "{}", t.to_csv())?;
            }
            if sp_example {
                let scan = scan_sp_example_theta(0.05, 5.0, 495)?;
                writeln!(out, "\nSolow-Polasky gain difference on the four-point example:")?;
                writeln!(out, "  at theta = 1: {:.7}", scan.gap_at_one)?;
                writeln!(out, "  negative anywhere on [0.05, 5]: {}", scan.any_negative)?;
                writeln!(out, "  |gap| = 0.0144346 at theta = {:?}", scan.magnitude_matches)?;
            }
        }
        Command::Bench(BenchCmd::Reproduce {
            indicator,
            replicates,
            iterations,
            seed,
            out: dir,
        }) => {
            let mut reports = Vec::new();
            for ind in indicators_for(&indicator)? {
                let cfg = NoahConfig {
                    indicator: ind,
                    iteration_budget: iterations,
                    rng_seed: seed,
                    ..NoahConfig::default()
                };
                let stats = bench::run_experiment(&cfg, replicates, Some(&dir.join("reproduce")))?;
                reports.push(TrendReport::from_stats(&stats));
            }
            let summary = bench::trend_summary(&reports);
            std::fs::write(dir.join("reproduce").join("trends.txt"), &summary)?;
            write!(out, "{summary}")?;
        }
        Command::Bench(BenchCmd::EfficientSet {
            eps,
            resolution,
            box_size,
            out: file,
            ascii,
        }) => {
            let g = bench::efficient_set(&bench::case_study_objectives, resolution, eps, box_size)?;
            let sizes: Vec<usize> = g.components().iter().map(Vec::len).collect();
            writeln!(out, "members = {} of {}", g.len(), resolution * resolution)?;
            writeln!(out, "components = {} (sizes {sizes:?})", sizes.len())?;
            if let Some(f) = file {
                g.write_csv(std::fs::File::create(f)?)?;
            }
            if ascii {
                write!(out, "{}", g.ascii())?;
            }
        }
        Command::Bench(BenchCmd::Ttest { a, b, welch }) => {
            let (a, b) = (read_numbers(&a)?, read_numbers(&b)?);
            let r = if welch {
                bench::welch_ttest(&a, &b)?
            } else {
                bench::two_sample_ttest(&a, &b)?
            };
            writeln!(out, "t = {:.6}\np = {:.6}\ndf = {}", r.t, r.p, r.df)?;
        }
        Command::Bench(BenchCmd::ModifiedMaxmin {
            replicates,
            target,
            prob,
            cap,
            barrier,
            barrier_rule,
            stop_on_stall,
            c,
            seed,
        }) => {
            let initial_barrier = barrier.map(|b| read_barrier(&b)).transpose()?;
            let defaults = ModifiedMaxMinConfig::default();
            let cfg = ModifiedMaxMinConfig {
                base: NoahConfig {
                    c,
                    rng_seed: seed,
                    initial_barrier,
                    barrier_rule,
                    ..defaults.base
                },
                replicates,
                target,
                prob,
                generation_cap: cap,
                stop_on_stall,
            };
            write!(out, "{}", bench::run_modified_maxmin_experiment(&cfg)?.to_text())?;
        }
        Command::Noah(NoahCmd::Run {
            config,
            out: dir,
            hausdorff,
        }) => {
            let cfg = match config {
                Some(p) => NoahConfig::read(p)?,
                None => NoahConfig::default(),
            };
            let reference = if hausdorff {
                Some(bench::case_study_efficient_set()?.members())
            } else {
                None
            };
            let trace = noah::run_noah(&cfg, &bench::case_study_objectives, reference.as_deref())?;
            std::fs::create_dir_all(&dir)?;
            let seed = cfg.rng_seed;
            trace.write_csv(std::fs::File::create(dir.join(format!("trace_{seed}.csv")))?)?;
            trace.write_population_csv(std::fs::File::create(dir.join(format!("population_{seed}.csv")))?)?;
            std::fs::write(dir.join("config.txt"), cfg.to_config_string())?;
            let last = trace.records.last().expect("trace has the initial record");
            writeln!(
                out,
                "{} records; final maxmin = {}, riesz = {}, sp = {}",
                trace.records.len(),
                last.maxmin,
                last.riesz_energy,
                last.solow_polasky
            )?;
        }
    }
    Ok(())
}

/// Formats `v` with `digits` significant digits.
fn significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if (-4..15).contains(&mag) {
        let decimals = (digits as i32 - 1 - mag).max(0) as usize;
        format!("{v:.decimals$}")
    } else {
        format!("{v:.*e}", digits - 1)
    }
}

fn read_barrier(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| diversity_core::Error::InvalidInput(format!("barrier component '{t}': {e}")))
        })
        .collect()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
