//! NOAH: alternating objective optimization (NSGA-II, mutation only),
//! barrier lowering and indicator-driven diversity optimization on a planar
//! decision box.
//!
//! A run draws from a single `ChaCha8Rng` stream seeded by
//! [`NoahConfig::rng_seed`], in this order: initial population (x then y
//! per individual), then per iteration the NSGA-II phase, the barrier
//! component, and the diversity phase.

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bench::hausdorff;
use crate::contributions::all_contributions_maxmin;
use crate::error::{Error, Result};
use crate::indicators::{diversity_triple, evaluate, Indicator, DEFAULT_S, DEFAULT_THETA};
use crate::metric::DistanceMatrix;

/// Objective vector of a decision point.
pub type Objectives<'a> = dyn Fn([f64; 2]) -> Vec<f64> + Sync + 'a;

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub x: [f64; 2],
    pub f: Vec<f64>,
}

impl Individual {
    pub fn new(x: [f64; 2], objectives: &Objectives) -> Self {
        Individual { x, f: objectives(x) }
    }
}

pub type Population = Vec<Individual>;

/// How an objective vector is compared with the barrier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierRule {
    /// Acceptable iff every component is at or below the barrier.
    All,
    /// Acceptable iff some component is at or below the barrier.
    Any,
}

impl FromStr for BarrierRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "all" => Ok(BarrierRule::All),
            "any" => Ok(BarrierRule::Any),
            other => Err(Error::invalid(format!(
                "unknown barrier rule '{other}' (expected all|any)"
            ))),
        }
    }
}

impl fmt::Display for BarrierRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BarrierRule::All => "all",
            BarrierRule::Any => "any",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    pub b: Vec<f64>,
    pub rule: BarrierRule,
}

impl Barrier {
    pub fn new(b: Vec<f64>) -> Self {
        Barrier {
            b,
            rule: BarrierRule::All,
        }
    }

    pub fn unbounded(m: usize) -> Self {
        Barrier::new(vec![f64::INFINITY; m])
    }

    pub fn is_feasible(&self, f: &[f64]) -> bool {
        let mut ok = f.iter().zip(&self.b).map(|(fi, bi)| fi <= bi);
        match self.rule {
            BarrierRule::All => ok.all(|x| x),
            BarrierRule::Any => ok.any(|x| x),
        }
    }

    /// Total amount by which `f` exceeds the barrier; 0 when feasible.
    pub fn violation(&self, f: &[f64]) -> f64 {
        if self.is_feasible(f) {
            return 0.0;
        }
        let excess = f.iter().zip(&self.b).map(|(fi, bi)| (fi - bi).max(0.0));
        match self.rule {
            BarrierRule::All => excess.sum(),
            BarrierRule::Any => excess.fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoahConfig {
    pub pop_size: usize,
    pub box_size: f64,
    pub mutation_rate: f64,
    /// Diversity phase stops after this many generations without strict improvement.
    pub c: usize,
    pub max_mutation_attempts: usize,
    pub indicator: Indicator,
    /// Probability of restricting Max-Min parent selection to contributing points.
    pub parent_selection_prob: f64,
    pub rng_seed: u64,
    pub iteration_budget: usize,
    pub nsga2_generations: usize,
    /// Hard cap on generations within one diversity phase.
    pub max_diversity_generations: usize,
    /// Starting barrier; `None` uses the componentwise maximum of the initial population.
    pub initial_barrier: Option<Vec<f64>>,
    pub barrier_rule: BarrierRule,
}

impl Default for NoahConfig {
    fn default() -> Self {
        NoahConfig {
            pop_size: 20,
            box_size: 10.0,
            mutation_rate: 10.0,
            c: 3,
            max_mutation_attempts: 100,
            indicator: Indicator::MaxMin,
            parent_selection_prob: 0.9,
            rng_seed: 0,
            iteration_budget: 20,
            nsga2_generations: 20,
            max_diversity_generations: 10_000,
            initial_barrier: None,
            barrier_rule: BarrierRule::All,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T>
where
    T::Err: fmt::Display,
{
    value.parse::<T>().map_err(|e| Error::Parse {
        line,
        message: format!("{key}: {e}"),
    })
}

impl NoahConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop_size < 2 {
            return Err(Error::invalid("pop_size must be at least 2"));
        }
        if !(self.box_size > 0.0 && self.box_size.is_finite()) {
            return Err(Error::invalid("box_size must be positive"));
        }
        if !(self.mutation_rate >= 0.0 && self.mutation_rate.is_finite()) {
            return Err(Error::invalid("mutation_rate must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.parent_selection_prob) {
            return Err(Error::invalid("parent_selection_prob must lie in [0, 1]"));
        }
        if let Some(b) = &self.initial_barrier {
            if b.iter().any(|v| v.is_nan()) {
                return Err(Error::invalid("initial_barrier contains NaN"));
            }
        }
        Ok(())
    }

    /// Parses flat `key = value` lines. `#` starts a comment; unknown keys
    /// are rejected. Unset keys keep their defaults.
    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut cfg = NoahConfig::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Parse {
                line: lineno,
                message: format!("expected 'key = value', got '{content}'"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "pop_size" => cfg.pop_size = parse_value(key, value, lineno)?,
                "box_size" => cfg.box_size = parse_value(key, value, lineno)?,
                "mutation_rate" => cfg.mutation_rate = parse_value(key, value, lineno)?,
                "c" => cfg.c = parse_value(key, value, lineno)?,
                "max_mutation_attempts" => cfg.max_mutation_attempts = parse_value(key, value, lineno)?,
                "indicator" => cfg.indicator = parse_value(key, value, lineno)?,
                "parent_selection_prob" => cfg.parent_selection_prob = parse_value(key, value, lineno)?,
                "rng_seed" => cfg.rng_seed = parse_value(key, value, lineno)?,
                "iteration_budget" => cfg.iteration_budget = parse_value(key, value, lineno)?,
                "nsga2_generations" => cfg.nsga2_generations = parse_value(key, value, lineno)?,
                "max_diversity_generations" => cfg.max_diversity_generations = parse_value(key, value, lineno)?,
                "initial_barrier" => {
                    cfg.initial_barrier = if value.eq_ignore_ascii_case("auto") {
                        None
                    } else {
                        Some(
                            value
                                .split(',')
                                .map(|v| parse_value::<f64>(key, v.trim(), lineno))
                                .collect::<Result<_>>()?,
                        )
                    }
                }
                "barrier_rule" => cfg.barrier_rule = parse_value(key, value, lineno)?,
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("unknown key '{other}'"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(file))
    }

    /// Serializes in the format accepted by [`NoahConfig::parse`].
    pub fn to_config_string(&self) -> String {
        let ind = match self.indicator {
            Indicator::MaxMin => "maxmin".to_string(),
            Indicator::Sum => "sum".to_string(),
            Indicator::RieszEnergy { s } => format!("riesz:{s}"),
            Indicator::SolowPolasky { theta } => format!("sp:{theta}"),
        };
        let barrier = match &self.initial_barrier {
            None => "auto".to_string(),
            Some(b) => b.iter().map(f64::to_string).collect::<Vec<_>>().join(","),
        };
        format!(
            "pop_size = {}\nbox_size = {}\nmutation_rate = {}\nc = {}\nmax_mutation_attempts = {}\n\
             indicator = {ind}\nparent_selection_prob = {}\nrng_seed = {}\niteration_budget = {}\n\
             nsga2_generations = {}\nmax_diversity_generations = {}\ninitial_barrier = {barrier}\n\
             barrier_rule = {}\n",
            self.pop_size,
            self.box_size,
            self.mutation_rate,
            self.c,
            self.max_mutation_attempts,
            self.parent_selection_prob,
            self.rng_seed,
            self.iteration_budget,
            self.nsga2_generations,
            self.max_diversity_generations,
            self.barrier_rule,
        )
    }
}

/// Folds a coordinate back into `[0, size]` by repeated reflection off the sides.
pub fn reflect_into_box(v: f64, size: f64) -> f64 {
    let period = 2.0 * size;
    let m = v.rem_euclid(period);
    if m > size {
        period - m
    } else {
        m
    }
}

/// Moves `x` by `rate * u` in direction `phi`, with `u ~ U[0,1]` and
/// `phi ~ U[0, 2π)` drawn in that order, and reflects back into the box.
pub fn mutate_point<R: Rng + ?Sized>(x: [f64; 2], rate: f64, box_size: f64, rng: &mut R) -> [f64; 2] {
    let u: f64 = rng.gen();
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (dx, dy) = polar_step(rate * u, phi);
    [
        reflect_into_box(x[0] + dx, box_size),
        reflect_into_box(x[1] + dy, box_size),
    ]
}

// Kept out of line so that every caller runs the same trig code. Inlined
// copies in other crates may get lowered to `sincos`, which can differ by an
// ulp and break replays.
#[inline(never)]
fn polar_step(step: f64, phi: f64) -> (f64, f64) {
    (step * phi.cos(), step * phi.sin())
}

pub fn mutate<R: Rng + ?Sized>(
    ind: &Individual,
    rate: f64,
    box_size: f64,
    objectives: &Objectives,
    rng: &mut R,
) -> Individual {
    Individual::new(mutate_point(ind.x, rate, box_size, rng), objectives)
}

/// Additive ε-dominance: `f1_i <= f2_i - eps` for every component.
pub fn epsilon_dominates(f1: &[f64], f2: &[f64], eps: f64) -> bool {
    f1.len() == f2.len() && f1.iter().zip(f2).all(|(a, b)| *a <= *b - eps)
}

/// Pareto dominance for minimization.
pub fn dominates(f1: &[f64], f2: &[f64]) -> bool {
    f1.iter().zip(f2).all(|(a, b)| a <= b) && f1.iter().zip(f2).any(|(a, b)| a < b)
}

fn constraint_dominates(a: &Individual, b: &Individual, barrier: &Barrier) -> bool {
    let (va, vb) = (barrier.violation(&a.f), barrier.violation(&b.f));
    match (va == 0.0, vb == 0.0) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => va < vb,
        (true, true) => dominates(&a.f, &b.f),
    }
}

/// Fronts of indices under constraint-domination, best first.
pub fn non_dominated_fronts(pop: &[Individual], barrier: &Barrier) -> Vec<Vec<usize>> {
    let n = pop.len();
    let mut dominated_by = vec![Vec::new(); n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            if i != j && constraint_dominates(&pop[i], &pop[j], barrier) {
                dominated_by[i].push(j);
                count[j] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominated_by[i] {
                count[j] -= 1;
                if count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Crowding distance of each member of `front` (same order).
pub fn crowding_distance(pop: &[Individual], front: &[usize]) -> Vec<f64> {
    let k = front.len();
    let mut dist = vec![0.0; k];
    if k == 0 {
        return dist;
    }
    let m = pop[front[0]].f.len();
    for obj in 0..m {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| pop[front[a]].f[obj].total_cmp(&pop[front[b]].f[obj]));
        let lo = pop[front[order[0]]].f[obj];
        let hi = pop[front[order[k - 1]]].f[obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[k - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 || !range.is_finite() {
            continue;
        }
        for w in 1..k.saturating_sub(1) {
            let gap = pop[front[order[w + 1]]].f[obj] - pop[front[order[w - 1]]].f[obj];
            dist[order[w]] += gap / range;
        }
    }
    dist
}

/// Rank and crowding distance of every member.
fn rank_and_crowding(pop: &[Individual], barrier: &Barrier) -> (Vec<usize>, Vec<f64>) {
    let mut rank = vec![0; pop.len()];
    let mut crowd = vec![0.0; pop.len()];
    for (r, front) in non_dominated_fronts(pop, barrier).iter().enumerate() {
        for (&i, d) in front.iter().zip(crowding_distance(pop, front)) {
            rank[i] = r;
            crowd[i] = d;
        }
    }
    (rank, crowd)
}

/// Mutation-only NSGA-II with the barrier as a constraint. Offspring whose
/// decision vector already occurs in the population are discarded.
pub fn nsga2_phase<R: Rng + ?Sized>(
    pop: &[Individual],
    barrier: &Barrier,
    generations: usize,
    rate: f64,
    box_size: f64,
    objectives: &Objectives,
    rng: &mut R,
) -> Population {
    let n = pop.len();
    let mut pop = pop.to_vec();
    if n == 0 {
        return pop;
    }
    for _ in 0..generations {
        let (rank, crowd) = rank_and_crowding(&pop, barrier);
        let mut combined = pop.clone();
        for _ in 0..n {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let better = |i: usize, j: usize| rank[i] < rank[j] || (rank[i] == rank[j] && crowd[i] > crowd[j]);
            let parent = if better(b, a) { b } else { a };
            let child = mutate(&pop[parent], rate, box_size, objectives, rng);
            if !combined.iter().any(|ind| ind.x == child.x) {
                combined.push(child);
            }
        }
        if combined.len() == n {
            continue;
        }
        let mut next = Vec::with_capacity(n);
        for front in non_dominated_fronts(&combined, barrier) {
            if next.len() + front.len() <= n {
                next.extend(front.iter().map(|&i| combined[i].clone()));
            } else {
                let d = crowding_distance(&combined, &front);
                let mut order: Vec<usize> = (0..front.len()).collect();
                order.sort_by(|&a, &b| d[b].total_cmp(&d[a]).then(a.cmp(&b)));
                let missing = n - next.len();
                next.extend(order.iter().take(missing).map(|&k| combined[front[k]].clone()));
            }
            if next.len() == n {
                break;
            }
        }
        pop = next;
    }
    pop
}

/// Componentwise best (minimum) objective value.
pub fn best_objectives(pop: &[Individual]) -> Vec<f64> {
    let m = pop.first().map_or(0, |i| i.f.len());
    (0..m)
        .map(|j| pop.iter().map(|i| i.f[j]).fold(f64::INFINITY, f64::min))
        .collect()
}

/// Lowers one uniformly chosen component to the midpoint between its value
/// and the population's best value in that component. A component already
/// at or below the best stays unchanged.
pub fn lower_barrier<R: Rng + ?Sized>(barrier: &Barrier, pop: &[Individual], rng: &mut R) -> Barrier {
    let mut out = barrier.clone();
    if out.b.is_empty() || pop.is_empty() {
        return out;
    }
    let j = rng.gen_range(0..out.b.len());
    let best = best_objectives(pop)[j];
    let bj = out.b[j];
    if bj > best {
        out.b[j] = if bj.is_finite() {
            best.max(0.5 * (bj + best))
        } else {
            best
        };
    }
    out
}

/// Euclidean distance matrix of the decision points.
pub fn population_space(pop: &[Individual]) -> DistanceMatrix {
    let pts: Vec<[f64; 2]> = pop.iter().map(|i| i.x).collect();
    DistanceMatrix::from_planar(&pts)
}

/// Orientation-adjusted diversity of the population, or `None` where undefined.
pub fn population_diversity(ind: &Indicator, pop: &[Individual]) -> Option<f64> {
    let dm = population_space(pop);
    evaluate(ind, &dm, &dm.all_indices()).ok().map(|v| ind.adjusted(v))
}

/// With probability `prob`, draws uniformly among points with a nonzero
/// Max-Min contribution (if there are any); otherwise uniformly from all.
/// The coin is always drawn first, then the index.
pub fn maxmin_parent_selection<R: Rng + ?Sized>(pop: &[Individual], prob: f64, rng: &mut R) -> usize {
    let coin: f64 = rng.gen();
    if coin < prob {
        let dm = population_space(pop);
        if let Ok(cv) = all_contributions_maxmin(&dm, &dm.all_indices()) {
            let contributing: Vec<usize> = cv
                .values
                .iter()
                .enumerate()
                .filter(|(_, v)| matches!(v, Some(x) if *x != 0.0))
                .map(|(i, _)| i)
                .collect();
            if !contributing.is_empty() {
                return contributing[rng.gen_range(0..contributing.len())];
            }
        }
    }
    rng.gen_range(0..pop.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityPhaseOutcome {
    pub population: Population,
    pub generations: usize,
    /// Offspring accepted (at most one per generation).
    pub accepted: usize,
    /// Raw indicator value after each generation (NaN where undefined).
    pub history: Vec<f64>,
}

/// One offspring per generation replaces its parent if it respects the
/// barrier and the adjusted diversity does not decrease. Stops after `c`
/// consecutive generations without strict improvement, or at the cap.
#[allow(clippy::too_many_arguments)]
pub fn diversity_phase<R: Rng + ?Sized>(
    pop: &[Individual],
    barrier: &Barrier,
    ind: &Indicator,
    cfg: &NoahConfig,
    objectives: &Objectives,
    rng: &mut R,
) -> DiversityPhaseOutcome {
    diversity_phase_until(pop, barrier, ind, cfg, objectives, rng, |_| false)
}

/// Like [`diversity_phase`] but also stops as soon as `done(raw value)` holds
/// after a generation.
pub fn diversity_phase_until<R: Rng + ?Sized>(
    pop: &[Individual],
    barrier: &Barrier,
    ind: &Indicator,
    cfg: &NoahConfig,
    objectives: &Objectives,
    rng: &mut R,
    done: impl Fn(f64) -> bool,
) -> DiversityPhaseOutcome {
    let mut pop = pop.to_vec();
    let mut generations = 0;
    let mut accepted = 0;
    let mut history = Vec::new();
    let mut stale = 0;
    let raw = |adj: Option<f64>| adj.map_or(f64::NAN, |a| ind.adjusted(a));
    let mut current = population_diversity(ind, &pop);
    let at_least = |after: Option<f64>, before: Option<f64>| match (after, before) {
        (Some(a), Some(b)) => a >= b,
        (Some(_), None) => true,
        (None, _) => false,
    };
    while stale < cfg.c && generations < cfg.max_diversity_generations && !pop.is_empty() {
        let before = current;
        for _ in 0..cfg.max_mutation_attempts {
            let parent = match ind {
                Indicator::MaxMin => maxmin_parent_selection(&pop, cfg.parent_selection_prob, rng),
                _ => rng.gen_range(0..pop.len()),
            };
            let child = mutate(&pop[parent], cfg.mutation_rate, cfg.box_size, objectives, rng);
            if !barrier.is_feasible(&child.f) {
                continue;
            }
            let old = std::mem::replace(&mut pop[parent], child);
            let after = population_diversity(ind, &pop);
            if at_least(after, before) {
                current = after;
                accepted += 1;
                break;
            }
            pop[parent] = old;
        }
        generations += 1;
        let improved = match (current, before) {
            (Some(a), Some(b)) => a > b,
            (Some(_), None) => true,
            _ => false,
        };
        stale = if improved { 0 } else { stale + 1 };
        history.push(raw(current));
        if done(raw(current)) {
            break;
        }
    }
    DiversityPhaseOutcome {
        population: pop,
        generations,
        accepted,
        history,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Initial,
    ObjectiveOpt,
    BarrierLower,
    DiversityOpt,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Initial => "initial",
            Phase::ObjectiveOpt => "objective",
            Phase::BarrierLower => "barrier",
            Phase::DiversityOpt => "diversity",
        }
    }
}

impl FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "initial" => Ok(Phase::Initial),
            "objective" => Ok(Phase::ObjectiveOpt),
            "barrier" => Ok(Phase::BarrierLower),
            "diversity" => Ok(Phase::DiversityOpt),
            other => Err(Error::invalid(format!("unknown phase '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub phase: Phase,
    pub population: Vec<[f64; 2]>,
    pub maxmin: f64,
    pub riesz_energy: f64,
    pub solow_polasky: f64,
    pub barrier: Vec<f64>,
    /// Distance to the reference set, after objective and diversity phases.
    pub hausdorff: Option<f64>,
    /// Generations spent in the diversity phase.
    pub diversity_generations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub config: NoahConfig,
    pub records: Vec<TraceRecord>,
}

/// Exponent and decay used for the tracked indicator values: the run's own
/// parameter where the driving indicator has one, else the defaults.
fn tracked_parameters(ind: &Indicator) -> (f64, f64) {
    match *ind {
        Indicator::RieszEnergy { s } => (s, DEFAULT_THETA),
        Indicator::SolowPolasky { theta } => (DEFAULT_S, theta),
        _ => (DEFAULT_S, DEFAULT_THETA),
    }
}

fn snapshot(
    iteration: usize,
    phase: Phase,
    pop: &[Individual],
    barrier: &Barrier,
    cfg: &NoahConfig,
    reference: Option<&[[f64; 2]]>,
    diversity_generations: Option<usize>,
) -> Result<TraceRecord> {
    let points: Vec<[f64; 2]> = pop.iter().map(|i| i.x).collect();
    let (s, theta) = tracked_parameters(&cfg.indicator);
    let triple = diversity_triple(&DistanceMatrix::from_planar(&points), s, theta);
    let hausdorff = match (reference, phase) {
        (Some(r), Phase::Initial | Phase::ObjectiveOpt | Phase::DiversityOpt) => Some(hausdorff(&points, r)?),
        _ => None,
    };
    Ok(TraceRecord {
        iteration,
        phase,
        population: points,
        maxmin: triple.maxmin,
        riesz_energy: triple.riesz,
        solow_polasky: triple.sp,
        barrier: barrier.b.clone(),
        hausdorff,
        diversity_generations,
    })
}

/// Uniform random population in the box.
pub fn initial_population<R: Rng + ?Sized>(cfg: &NoahConfig, objectives: &Objectives, rng: &mut R) -> Population {
    (0..cfg.pop_size)
        .map(|_| {
            let x = rng.gen_range(0.0..=cfg.box_size);
            let y = rng.gen_range(0.0..=cfg.box_size);
            Individual::new([x, y], objectives)
        })
        .collect()
}

/// Starting barrier: the configured one or the componentwise worst value.
pub fn initial_barrier(cfg: &NoahConfig, pop: &[Individual]) -> Result<Barrier> {
    let m = pop.first().map_or(0, |i| i.f.len());
    let b = match &cfg.initial_barrier {
        Some(b) if b.len() != m => {
            return Err(Error::invalid(format!(
                "initial_barrier has {} components, objectives have {m}",
                b.len()
            )))
        }
        Some(b) => b.clone(),
        None => (0..m)
            .map(|j| pop.iter().map(|i| i.f[j]).fold(f64::NEG_INFINITY, f64::max))
            .collect(),
    };
    Ok(Barrier {
        b,
        rule: cfg.barrier_rule,
    })
}

/// Runs `iteration_budget` iterations of objective optimization, barrier
/// lowering and diversity optimization.
pub fn run_noah(cfg: &NoahConfig, objectives: &Objectives, reference: Option<&[[f64; 2]]>) -> Result<RunTrace> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut pop = initial_population(cfg, objectives, &mut rng);
    let mut barrier = initial_barrier(cfg, &pop)?;
    let mut records = vec![snapshot(0, Phase::Initial, &pop, &barrier, cfg, reference, None)?];
    for it in 1..=cfg.iteration_budget {
        pop = nsga2_phase(
            &pop,
            &barrier,
            cfg.nsga2_generations,
            cfg.mutation_rate,
            cfg.box_size,
            objectives,
            &mut rng,
        );
        records.push(snapshot(it, Phase::ObjectiveOpt, &pop, &barrier, cfg, reference, None)?);
        barrier = lower_barrier(&barrier, &pop, &mut rng);
        records.push(snapshot(it, Phase::BarrierLower, &pop, &barrier, cfg, reference, None)?);
        let out = diversity_phase(&pop, &barrier, &cfg.indicator, cfg, objectives, &mut rng);
        pop = out.population;
        records.push(snapshot(
            it,
            Phase::DiversityOpt,
            &pop,
            &barrier,
            cfg,
            reference,
            Some(out.generations),
        )?);
    }
    Ok(RunTrace {
        config: cfg.clone(),
        records,
    })
}

/// One row of the trace summary CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub phase: Phase,
    pub maxmin: f64,
    pub riesz_energy: f64,
    pub solow_polasky: f64,
    pub hausdorff: Option<f64>,
    pub barrier: Vec<f64>,
}

impl From<&TraceRecord> for TraceRow {
    fn from(r: &TraceRecord) -> Self {
        TraceRow {
            iteration: r.iteration,
            phase: r.phase,
            maxmin: r.maxmin,
            riesz_energy: r.riesz_energy,
            solow_polasky: r.solow_polasky,
            hausdorff: r.hausdorff,
            barrier: r.barrier.clone(),
        }
    }
}

impl RunTrace {
    pub fn rows(&self) -> Vec<TraceRow> {
        self.records.iter().map(TraceRow::from).collect()
    }

    /// Summary CSV: one row per (iteration, phase).
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        write_trace_rows(&self.rows(), w)
    }

    /// Sidecar CSV with the population of every snapshot.
    pub fn write_population_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "iteration,phase,index,x,y")?;
        for r in &self.records {
            for (i, p) in r.population.iter().enumerate() {
                writeln!(w, "{},{},{i},{},{}", r.iteration, r.phase.name(), p[0], p[1])?;
            }
        }
        Ok(())
    }

    /// Records of one phase, in iteration order.
    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &TraceRecord> {
        self.records.iter().filter(move |r| r.phase == phase)
    }
}

pub fn write_trace_rows(rows: &[TraceRow], mut w: impl Write) -> Result<()> {
    let m = rows.first().map_or(0, |r| r.barrier.len());
    let mut header = String::from("iteration,phase,maxmin,riesz_energy,solow_polasky,hausdorff");
    for j in 0..m {
        header.push_str(&format!(",b{j}"));
    }
    writeln!(w, "{header}")?;
    for r in rows {
        let h = r.hausdorff.map_or(String::new(), |h| h.to_string());
        let b: Vec<String> = r.barrier.iter().map(f64::to_string).collect();
        let tail = if b.is_empty() {
            String::new()
        } else {
            format!(",{}", b.join(","))
        };
        writeln!(
            w,
            "{},{},{},{},{},{h}{tail}",
            r.iteration,
            r.phase.name(),
            r.maxmin,
            r.riesz_energy,
            r.solow_polasky
        )?;
    }
    Ok(())
}

/// Parses the summary CSV written by [`RunTrace::write_csv`].
pub fn read_trace_rows(reader: impl BufRead) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 6 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected at least 6 fields, got {}", fields.len()),
            });
        }
        let num = |s: &str| parse_value::<f64>("value", s, lineno);
        rows.push(TraceRow {
            iteration: parse_value("iteration", fields[0], lineno)?,
            phase: fields[1].parse()?,
            maxmin: num(fields[2])?,
            riesz_energy: num(fields[3])?,
            solow_polasky: num(fields[4])?,
            hausdorff: if fields[5].is_empty() {
                None
            } else {
                Some(num(fields[5])?)
            },
            barrier: fields[6..].iter().map(|s| num(s)).collect::<Result<_>>()?,
        });
    }
    Ok(rows)
}
