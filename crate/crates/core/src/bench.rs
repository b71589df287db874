//! Case-study tooling: the two test objectives, the ε-efficient grid set,
//! Hausdorff distance, replicate statistics, t-tests and output files.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::indicators::Indicator;
use crate::noah::{
    diversity_phase_until, initial_barrier, initial_population, run_noah, BarrierRule, NoahConfig, Objectives, Phase,
    RunTrace,
};

/// Shifted Himmelblau function and paraboloid, both minimized.
pub fn objectives(x: f64, y: f64) -> (f64, f64) {
    let (u, v) = (x - 5.0, y - 5.0);
    let f1 = (u * u + v - 11.0).powi(2) + (u + v * v - 7.0).powi(2);
    let f2 = u * u;
    (f1, f2)
}

/// [`objectives`] in the vector form used by the optimizer.
pub fn case_study_objectives(p: [f64; 2]) -> Vec<f64> {
    let (f1, f2) = objectives(p[0], p[1]);
    vec![f1, f2]
}

/// Uniform `resolution × resolution` grid over the box (endpoints included),
/// row-major in y then x.
pub fn grid_points(resolution: usize, box_size: f64) -> Vec<[f64; 2]> {
    let step = box_size / (resolution - 1) as f64;
    (0..resolution)
        .flat_map(|iy| (0..resolution).map(move |ix| [ix as f64 * step, iy as f64 * step]))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficientSetGrid {
    pub resolution: usize,
    pub eps: f64,
    pub box_size: f64,
    pub points: Vec<[f64; 2]>,
    pub member: Vec<bool>,
}

impl EfficientSetGrid {
    pub fn members(&self) -> Vec<[f64; 2]> {
        self.points
            .iter()
            .zip(&self.member)
            .filter(|(_, &m)| m)
            .map(|(p, _)| *p)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Connected components of the member set under 4-neighbour grid adjacency.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let r = self.resolution;
        let mut seen = vec![false; self.member.len()];
        let mut comps = Vec::new();
        for start in 0..self.member.len() {
            if !self.member[start] || seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(k) = stack.pop() {
                comp.push(k);
                let (ix, iy) = (k % r, k / r);
                let mut nb = Vec::with_capacity(4);
                if ix > 0 {
                    nb.push(k - 1);
                }
                if ix + 1 < r {
                    nb.push(k + 1);
                }
                if iy > 0 {
                    nb.push(k - r);
                }
                if iy + 1 < r {
                    nb.push(k + r);
                }
                for q in nb {
                    if self.member[q] && !seen[q] {
                        seen[q] = true;
                        stack.push(q);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        comps
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }

    /// Character map, top row = largest y; `#` marks members.
    pub fn ascii(&self) -> String {
        let r = self.resolution;
        let mut out = String::with_capacity(r * (r + 1));
        for iy in (0..r).rev() {
            for ix in 0..r {
                out.push(if self.member[iy * r + ix] { '#' } else { '.' });
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "x,y,efficient")?;
        for (p, m) in self.points.iter().zip(&self.member) {
            writeln!(w, "{},{},{}", p[0], p[1], u8::from(*m))?;
        }
        Ok(())
    }
}

fn check_grid_args(resolution: usize, eps: f64, box_size: f64) -> Result<()> {
    if resolution < 2 {
        return Err(Error::invalid("resolution must be at least 2"));
    }
    if !(eps >= 0.0) {
        return Err(Error::invalid("eps must be non-negative"));
    }
    if !(box_size > 0.0 && box_size.is_finite()) {
        return Err(Error::invalid("box_size must be positive"));
    }
    Ok(())
}

/// Grid points not ε-dominated by any other grid point, by exhaustive
/// pairwise comparison.
pub fn efficient_set_exhaustive(
    obj: &Objectives,
    resolution: usize,
    eps: f64,
    box_size: f64,
) -> Result<EfficientSetGrid> {
    check_grid_args(resolution, eps, box_size)?;
    let points = grid_points(resolution, box_size);
    let values: Vec<Vec<f64>> = points.iter().map(|&p| obj(p)).collect();
    let member = (0..points.len())
        .into_par_iter()
        .map(|i| {
            !values
                .iter()
                .enumerate()
                .any(|(j, fj)| j != i && crate::noah::epsilon_dominates(fj, &values[i], eps))
        })
        .collect();
    Ok(EfficientSetGrid {
        resolution,
        eps,
        box_size,
        points,
        member,
    })
}

/// Same membership as [`efficient_set_exhaustive`]. For two objectives and
/// `eps > 0` it sorts by the first objective and keeps a prefix minimum of
/// the second, which is `O(G log G)`.
pub fn efficient_set(obj: &Objectives, resolution: usize, eps: f64, box_size: f64) -> Result<EfficientSetGrid> {
    check_grid_args(resolution, eps, box_size)?;
    let points = grid_points(resolution, box_size);
    let values: Vec<Vec<f64>> = points.iter().map(|&p| obj(p)).collect();
    if eps == 0.0 || values.first().is_none_or(|v| v.len() != 2) {
        return efficient_set_exhaustive(obj, resolution, eps, box_size);
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a][0].total_cmp(&values[b][0]));
    let sorted_f1: Vec<f64> = order.iter().map(|&i| values[i][0]).collect();
    let mut prefix_min = Vec::with_capacity(order.len());
    let mut m = f64::INFINITY;
    for &i in &order {
        m = m.min(values[i][1]);
        prefix_min.push(m);
    }
    let member = values
        .iter()
        .map(|f| {
            // candidates q with f1(q) <= f1(p) - eps; self is never among them
            let k = sorted_f1.partition_point(|&v| v <= f[0] - eps);
            k == 0 || prefix_min[k - 1] > f[1] - eps
        })
        .collect();
    Ok(EfficientSetGrid {
        resolution,
        eps,
        box_size,
        points,
        member,
    })
}

/// Efficient set of the case study (resolution 100, ε = 1, box 10).
pub fn case_study_efficient_set() -> Result<EfficientSetGrid> {
    efficient_set(&case_study_objectives, 100, 1.0, 10.0)
}

/// Symmetric Hausdorff distance under the Euclidean norm.
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("Hausdorff distance needs two non-empty sets"));
    }
    let directed = |from: &[[f64; 2]], to: &[[f64; 2]]| {
        from.iter()
            .map(|p| {
                to.iter()
                    .map(|q| (p[0] - q[0]).hypot(p[1] - q[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTestResult {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn t_result(diff: f64, se: f64, df: f64) -> Result<TTestResult> {
    if se == 0.0 {
        if diff == 0.0 {
            return Err(Error::invalid(
                "t statistic undefined: both samples are constant and equal",
            ));
        }
        return Ok(TTestResult {
            t: diff.signum() * f64::INFINITY,
            p: 0.0,
            df,
        });
    }
    let t = diff / se;
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::invalid(e.to_string()))?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(TTestResult { t, p, df })
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::invalid("each sample needs at least two values"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("samples must be finite"));
    }
    Ok(())
}

/// Student's two-sample t-test with pooled variance, two-sided.
pub fn two_sample_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    check_samples(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ((ma, va), (mb, vb)) = (mean_var(a), mean_var(b));
    let df = na + nb - 2.0;
    let pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
    t_result(ma - mb, (pooled * (1.0 / na + 1.0 / nb)).sqrt(), df)
}

/// Welch's unequal-variance t-test, two-sided.
pub fn welch_ttest(a: &[f64], b: &[f64]) -> Result<TTestResult> {
    check_samples(a, b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let ((ma, va), (mb, vb)) = (mean_var(a), mean_var(b));
    let (qa, qb) = (va / na, vb / nb);
    let df = if qa + qb == 0.0 {
        na + nb - 2.0
    } else {
        (qa + qb).powi(2) / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
    };
    t_result(ma - mb, (qa + qb).sqrt(), df)
}

/// Mean and standard error of the mean (sample sd / √n), ignoring NaN.
pub fn mean_sem(values: &[f64]) -> (f64, f64) {
    let v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    match v.len() {
        0 => (f64::NAN, f64::NAN),
        1 => (v[0], f64::NAN),
        n => {
            let (m, var) = mean_var(&v);
            (m, (var / n as f64).sqrt())
        }
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pairs: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| (*x, *y))
        .collect();
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return f64::NAN;
    }
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pairs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Tracked quantities, in CSV column order.
pub const QUANTITIES: [&str; 4] = ["maxmin", "riesz_energy", "solow_polasky", "hausdorff"];

/// Per-snapshot mean and sem over replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct StatsRow {
    pub iteration: usize,
    pub phase: Phase,
    pub mean: [f64; 4],
    pub sem: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateStats {
    pub indicator: Indicator,
    pub replicates: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<StatsRow>,
}

impl ReplicateStats {
    /// Aggregates traces that share their (iteration, phase) layout.
    pub fn from_traces(indicator: Indicator, traces: &[RunTrace]) -> Result<Self> {
        let first = traces.first().ok_or_else(|| Error::invalid("no traces to aggregate"))?;
        let layout: Vec<(usize, Phase)> = first.records.iter().map(|r| (r.iteration, r.phase)).collect();
        for t in traces {
            let l: Vec<(usize, Phase)> = t.records.iter().map(|r| (r.iteration, r.phase)).collect();
            if l != layout {
                return Err(Error::invalid("traces have different layouts"));
            }
        }
        let rows = layout
            .iter()
            .enumerate()
            .map(|(k, &(iteration, phase))| {
                let mut mean = [f64::NAN; 4];
                let mut sem = [f64::NAN; 4];
                for q in 0..4 {
                    let vals: Vec<f64> = traces
                        .iter()
                        .map(|t| {
                            let r = &t.records[k];
                            match q {
                                0 => r.maxmin,
                                1 => r.riesz_energy,
                                2 => r.solow_polasky,
                                _ => r.hausdorff.unwrap_or(f64::NAN),
                            }
                        })
                        .collect();
                    (mean[q], sem[q]) = mean_sem(&vals);
                }
                StatsRow {
                    iteration,
                    phase,
                    mean,
                    sem,
                }
            })
            .collect();
        Ok(ReplicateStats {
            indicator,
            replicates: traces.len(),
            seeds: traces.iter().map(|t| t.config.rng_seed).collect(),
            rows,
        })
    }

    /// `(iteration, mean)` of quantity `q` over the records of one phase.
    pub fn series(&self, phase: Phase, q: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let rows: Vec<&StatsRow> = self.rows.iter().filter(|r| r.phase == phase).collect();
        (
            rows.iter().map(|r| r.iteration as f64).collect(),
            rows.iter().map(|r| r.mean[q]).collect(),
            rows.iter().map(|r| r.sem[q]).collect(),
        )
    }

    /// Slope of the mean of quantity `q` after each diversity phase.
    pub fn trend(&self, q: usize) -> f64 {
        let (x, y, _) = self.series(Phase::DiversityOpt, q);
        regression_slope(&x, &y)
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        let mut header = String::from("iteration,phase");
        for q in QUANTITIES {
            write!(header, ",{q}_mean,{q}_sem").expect("write to String");
        }
        writeln!(w, "{header}")?;
        for r in &self.rows {
            let mut line = format!("{},{}", r.iteration, r.phase.name());
            for q in 0..4 {
                write!(line, ",{},{}", r.mean[q], r.sem[q]).expect("write to String");
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Parses the rows written by [`ReplicateStats::write_csv`].
pub fn read_stats_rows(reader: impl BufRead) -> Result<Vec<StatsRow>> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 10 fields, got {}", f.len()),
            });
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("'{s}': {e}"),
            })
        };
        let mut mean = [0.0; 4];
        let mut sem = [0.0; 4];
        for q in 0..4 {
            mean[q] = num(f[2 + 2 * q])?;
            sem[q] = num(f[3 + 2 * q])?;
        }
        rows.push(StatsRow {
            iteration: f[0].parse().map_err(|e| Error::Parse {
                line: idx + 1,
                message: format!("iteration: {e}"),
            })?,
            phase: f[1].parse()?,
            mean,
            sem,
        });
    }
    Ok(rows)
}

/// Runs `replicates` NOAH runs with seeds `cfg.rng_seed + r`, in parallel,
/// measuring Hausdorff distance to the case-study efficient set.
pub fn run_replicates(cfg: &NoahConfig, replicates: usize) -> Result<Vec<RunTrace>> {
    if replicates < 2 {
        return Err(Error::invalid("need at least two replicates"));
    }
    let reference = case_study_efficient_set()?.members();
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let c = NoahConfig {
                rng_seed: cfg.rng_seed + r,
                ..cfg.clone()
            };
            run_noah(&c, &case_study_objectives, Some(&reference))
        })
        .collect()
}

/// Replicated runs plus CSV and SVG output under `out_dir/<indicator>/`
/// when `out_dir` is given.
pub fn run_experiment(cfg: &NoahConfig, replicates: usize, out_dir: Option<&Path>) -> Result<ReplicateStats> {
    let traces = run_replicates(cfg, replicates)?;
    let stats = ReplicateStats::from_traces(cfg.indicator, &traces)?;
    if let Some(dir) = out_dir {
        let dir = dir.join(cfg.indicator.short_name());
        std::fs::create_dir_all(dir.join("plots"))?;
        for t in &traces {
            let seed = t.config.rng_seed;
            t.write_csv(std::fs::File::create(dir.join(format!("trace_{seed}.csv")))?)?;
            t.write_population_csv(std::fs::File::create(dir.join(format!("population_{seed}.csv")))?)?;
        }
        stats.write_csv(std::fs::File::create(dir.join("stats.csv"))?)?;
        for (q, name) in QUANTITIES.iter().enumerate() {
            let svg = stats_plot(&stats, q);
            std::fs::write(dir.join("plots").join(format!("{name}.svg")), svg)?;
        }
    }
    Ok(stats)
}

/// Orientation-adjusted slopes per driving indicator, plus final Hausdorff.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendReport {
    pub indicator: Indicator,
    pub maxmin_slope: f64,
    pub riesz_slope: f64,
    pub sp_slope: f64,
    /// Mean Hausdorff distance after the last objective and diversity phases.
    pub final_hausdorff: (f64, f64),
}

impl TrendReport {
    pub fn from_stats(stats: &ReplicateStats) -> Self {
        let last = |phase: Phase| {
            stats
                .rows
                .iter()
                .rev()
                .find(|r| r.phase == phase)
                .map_or(f64::NAN, |r| r.mean[3])
        };
        TrendReport {
            indicator: stats.indicator,
            maxmin_slope: stats.trend(0),
            riesz_slope: stats.trend(1),
            sp_slope: stats.trend(2),
            final_hausdorff: (last(Phase::ObjectiveOpt), last(Phase::DiversityOpt)),
        }
    }

    /// Max-Min and SP trend down, energy trends up.
    pub fn expected_signs(&self) -> bool {
        self.maxmin_slope < 0.0 && self.sp_slope < 0.0 && self.riesz_slope > 0.0
    }

    /// Mean deterioration rate of the three measures, each slope scaled by
    /// the opposite orientation so that larger means faster loss of diversity.
    pub fn deterioration(&self) -> [f64; 3] {
        [-self.maxmin_slope, self.riesz_slope, -self.sp_slope]
    }
}

/// Text report comparing trend reports of several driving indicators.
pub fn trend_summary(reports: &[TrendReport]) -> String {
    let mut out = String::from("indicator  maxmin_slope  riesz_slope  sp_slope  hausdorff_obj  hausdorff_div  signs\n");
    for r in reports {
        writeln!(
            out,
            "{:<9}  {:>12.5}  {:>11.5}  {:>8.5}  {:>13.5}  {:>13.5}  {}",
            r.indicator.short_name(),
            r.maxmin_slope,
            r.riesz_slope,
            r.sp_slope,
            r.final_hausdorff.0,
            r.final_hausdorff.1,
            if r.expected_signs() { "as expected" } else { "differ" }
        )
        .expect("write to String");
    }
    out
}

/// A labelled series of x values, means and standard errors.
pub type ChartSeries = (String, Vec<f64>, Vec<f64>, Vec<f64>);

/// Line chart of mean ± sem for one quantity, one line per phase.
pub fn stats_plot(stats: &ReplicateStats, q: usize) -> String {
    let series: Vec<ChartSeries> = [Phase::ObjectiveOpt, Phase::DiversityOpt]
        .iter()
        .map(|&p| {
            let (x, m, s) = stats.series(p, q);
            (format!("after {} phase", p.name()), x, m, s)
        })
        .collect();
    svg_chart(
        &format!(
            "{} ({}-driven, R = {})",
            QUANTITIES[q],
            stats.indicator.short_name(),
            stats.replicates
        ),
        &series,
    )
}

/// Minimal self-contained SVG: solid mean lines, dashed mean ± sem lines.
pub fn svg_chart(title: &str, series: &[ChartSeries]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let finite = |v: &f64| v.is_finite();
    let xs: Vec<f64> = series.iter().flat_map(|s| s.1.iter().copied()).filter(finite).collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| {
            s.2.iter().zip(&s.3).flat_map(|(m, e)| {
                let e = if e.is_finite() { *e } else { 0.0 };
                [m - e, m + e]
            })
        })
        .filter(finite)
        .collect();
    let range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        match (lo.is_finite(), hi > lo) {
            (true, true) => (lo, hi),
            (true, false) => (lo - 0.5, lo + 0.5),
            _ => (0.0, 1.0),
        }
    };
    let (x0, x1) = range(&xs);
    let (y0, y1) = range(&ys);
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let path = |x: &[f64], y: &[f64]| {
        x.iter()
            .zip(y)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| format!("{:.2},{:.2}", px(*a), py(*b)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
         <line x1=\"{PAD}\" y1=\"{PAD}\" x2=\"{PAD}\" y2=\"{}\" stroke=\"black\"/>\n\
         <text x=\"{PAD}\" y=\"{}\" text-anchor=\"middle\">{x0}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x1}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y0:.4}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{y1:.4}</text>\n",
        W / 2.0,
        escape(title),
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD,
        H - PAD + 16.0,
        W - PAD,
        H - PAD + 16.0,
        PAD - 4.0,
        H - PAD,
        PAD - 4.0,
        PAD + 4.0,
    );
    for (k, (name, x, m, s)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let lo: Vec<f64> = m.iter().zip(s).map(|(a, b)| a - b).collect();
        let hi: Vec<f64> = m.iter().zip(s).map(|(a, b)| a + b).collect();
        writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>",
            path(x, m)
        )
        .expect("write to String");
        for band in [&lo, &hi] {
            writeln!(
                svg,
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-dasharray=\"4,3\" points=\"{}\"/>",
                path(x, band)
            )
            .expect("write to String");
        }
        writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{}</text>",
            W - PAD - 150.0,
            PAD + 16.0 * k as f64,
            escape(name)
        )
        .expect("write to String");
    }
    svg.push_str("</svg>\n");
    svg
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Settings of the parent-selection experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedMaxMinConfig {
    pub base: NoahConfig,
    pub replicates: usize,
    pub target: f64,
    /// Probability used by the modified variant; the original uses 0.
    pub prob: f64,
    /// Generations after which a run counts as censored.
    pub generation_cap: usize,
    /// If set, a phase that stalls for `c` generations ends the run (censored);
    /// otherwise the run continues until the target or the cap.
    pub stop_on_stall: bool,
}

impl Default for ModifiedMaxMinConfig {
    fn default() -> Self {
        ModifiedMaxMinConfig {
            base: NoahConfig {
                c: 20,
                mutation_rate: 10.0,
                // b = [3, 3] leaves no feasible point for the case-study
                // objectives, so the default is the usual initial barrier.
                initial_barrier: None,
                barrier_rule: BarrierRule::All,
                indicator: Indicator::MaxMin,
                ..NoahConfig::default()
            },
            replicates: 200,
            target: 1.9,
            prob: 0.9,
            generation_cap: 1000,
            stop_on_stall: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmResult {
    pub prob: f64,
    /// Generations to target of the runs that reached it.
    pub generations: Vec<f64>,
    pub censored: usize,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedMaxMinReport {
    pub original: ArmResult,
    pub modified: ArmResult,
    /// Modified minus original; `None` if an arm has fewer than two finished runs.
    pub ttest: Option<TTestResult>,
}

/// Published values for comparison: (modified mean, sd, original mean, sd, t, p).
pub const PUBLISHED_MODIFIED_MAXMIN: (f64, f64, f64, f64, f64, f64) = (31.84, 4.44, 32.24, 4.13, -2.065, 0.0391);

/// Generations of one diversity-optimization run until Max-Min reaches the
/// target; `None` if censored.
pub fn generations_to_target(cfg: &ModifiedMaxMinConfig, prob: f64, seed: u64) -> Result<Option<usize>> {
    let base = NoahConfig {
        rng_seed: seed,
        parent_selection_prob: prob,
        indicator: Indicator::MaxMin,
        max_diversity_generations: cfg.generation_cap,
        c: if cfg.stop_on_stall { cfg.base.c } else { usize::MAX },
        ..cfg.base.clone()
    };
    base.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pop = initial_population(&base, &case_study_objectives, &mut rng);
    let barrier = initial_barrier(&base, &pop)?;
    let start = crate::noah::population_diversity(&Indicator::MaxMin, &pop);
    if start.is_some_and(|v| v >= cfg.target) {
        return Ok(Some(0));
    }
    let out = diversity_phase_until(
        &pop,
        &barrier,
        &Indicator::MaxMin,
        &base,
        &case_study_objectives,
        &mut rng,
        |v| v >= cfg.target,
    );
    Ok(out.history.iter().position(|&v| v >= cfg.target).map(|k| k + 1))
}

fn arm(cfg: &ModifiedMaxMinConfig, prob: f64) -> Result<ArmResult> {
    let results = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| generations_to_target(cfg, prob, cfg.base.rng_seed + r))
        .collect::<Result<Vec<_>>>()?;
    let generations: Vec<f64> = results.iter().flatten().map(|&g| g as f64).collect();
    let censored = results.iter().filter(|r| r.is_none()).count();
    let (mean, sd) = if generations.len() >= 2 {
        let (m, v) = mean_var(&generations);
        (m, v.sqrt())
    } else {
        (generations.first().copied().unwrap_or(f64::NAN), f64::NAN)
    };
    Ok(ArmResult {
        prob,
        generations,
        censored,
        mean,
        sd,
    })
}

/// Runs both arms with the same seeds (so the same initial populations).
pub fn run_modified_maxmin_experiment(cfg: &ModifiedMaxMinConfig) -> Result<ModifiedMaxMinReport> {
    if !(cfg.target > 0.0) {
        return Err(Error::invalid("target must be positive"));
    }
    if cfg.replicates < 2 {
        return Err(Error::invalid("need at least two replicates"));
    }
    let original = arm(cfg, 0.0)?;
    let modified = arm(cfg, cfg.prob)?;
    let ttest = if original.generations.len() >= 2 && modified.generations.len() >= 2 {
        two_sample_ttest(&modified.generations, &original.generations).ok()
    } else {
        None
    };
    Ok(ModifiedMaxMinReport {
        original,
        modified,
        ttest,
    })
}

impl ModifiedMaxMinReport {
    pub fn to_text(&self) -> String {
        let (pm, psd, po, posd, pt, pp) = PUBLISHED_MODIFIED_MAXMIN;
        let mut out = String::new();
        for (name, a, published) in [
            ("original", &self.original, (po, posd)),
            ("modified", &self.modified, (pm, psd)),
        ] {
            writeln!(
                out,
                "{name:<9} prob={:<4} reached={:<5} censored={:<5} mean={:.3} sd={:.3}  (published mean={} sd={})",
                a.prob,
                a.generations.len(),
                a.censored,
                a.mean,
                a.sd,
                published.0,
                published.1
            )
            .expect("write to String");
        }
        match &self.ttest {
            Some(t) => writeln!(out, "t={:.4} p={:.4} df={}  (published t={pt} p={pp})", t.t, t.p, t.df),
            None => writeln!(out, "t-test not available: too few runs reached the target"),
        }
        .expect("write to String");
        out
    }
}

/// Default output root for the CLI.
pub fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
