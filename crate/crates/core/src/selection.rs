//! k-subset selection (exhaustive and greedy) and the k-Clique reduction to
//! Riesz energy minimisation on graph metrics.

use crate::contributions::{all_contributions, all_contributions_riesz};
use crate::error::{Error, Result};
use crate::indicators::{evaluate, riesz_energy, Indicator};
use crate::metric::{dist_to_set, graph_metric, DistanceMatrix, Graph};

/// Default limit on the number of points for exhaustive enumeration.
pub const DEFAULT_BRUTE_FORCE_CAP: usize = 20;

/// Absolute tolerance when comparing an energy to the clique lower bound.
pub const CLIQUE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BruteForce,
    Greedy,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "brute" | "brute-force" => Ok(Method::BruteForce),
            "greedy" => Ok(Method::Greedy),
            other => Err(Error::invalid(format!("unknown selection method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// Sorted indices.
    pub subset: Vec<usize>,
    pub value: f64,
    pub method: Method,
    pub evaluations: usize,
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 || k > n {
        return Err(Error::invalid(format!("need 2 <= k <= n, got k={k}, n={n}")));
    }
    Ok(())
}

/// Lexicographic k-combinations of `0..n`.
pub(crate) struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub(crate) fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in (i + 1)..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

pub fn brute_force_select(ind: &Indicator, dm: &DistanceMatrix, k: usize) -> Result<SelectionResult> {
    brute_force_select_with_cap(ind, dm, k, DEFAULT_BRUTE_FORCE_CAP)
}

/// Enumerates every k-subset. Ties keep the lexicographically smallest subset.
pub fn brute_force_select_with_cap(
    ind: &Indicator,
    dm: &DistanceMatrix,
    k: usize,
    cap: usize,
) -> Result<SelectionResult> {
    let n = dm.len();
    if n > cap {
        return Err(Error::CapExceeded {
            what: "number of points",
            size: n,
            cap,
        });
    }
    check_k(k, n)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut evaluations = 0;
    for subset in Combinations::new(n, k) {
        let value = evaluate(ind, dm, &subset)?;
        evaluations += 1;
        if best.as_ref().is_none_or(|(_, b)| ind.better(value, *b)) {
            best = Some((subset, value));
        }
    }
    let (subset, value) = best.expect("at least one k-subset exists");
    Ok(SelectionResult {
        subset,
        value,
        method: Method::BruteForce,
        evaluations,
    })
}

/// Deterministic greedy selection.
///
/// * Max-Min: seed with the farthest pair, then repeatedly add the point
///   farthest from the chosen set.
/// * Riesz energy: start from all points and repeatedly drop the point with
///   the largest energy contribution.
/// * Solow-Polasky and Sum: start from all points and repeatedly drop the
///   point with the smallest contribution.
///
/// Ties go to the smallest index.
pub fn greedy_select(ind: &Indicator, dm: &DistanceMatrix, k: usize) -> Result<SelectionResult> {
    let n = dm.len();
    check_k(k, n)?;
    let mut evaluations = 0;
    let subset = match ind {
        Indicator::MaxMin => {
            let (mut a, mut b, mut far) = (0, 1, f64::NEG_INFINITY);
            for i in 0..n {
                for j in (i + 1)..n {
                    if dm.get(i, j) > far {
                        (a, b, far) = (i, j, dm.get(i, j));
                    }
                }
            }
            let mut chosen = vec![a, b];
            while chosen.len() < k {
                let mut pick = None;
                let mut pick_d = f64::NEG_INFINITY;
                for x in (0..n).filter(|x| !chosen.contains(x)) {
                    let d = dist_to_set(dm, x, &chosen)?;
                    evaluations += 1;
                    if d > pick_d {
                        (pick, pick_d) = (Some(x), d);
                    }
                }
                chosen.push(pick.expect("k <= n leaves a candidate"));
            }
            chosen
        }
        Indicator::RieszEnergy { s } => {
            let mut chosen: Vec<usize> = (0..n).collect();
            while chosen.len() > k {
                let contrib = all_contributions_riesz(dm, &chosen, *s)?;
                evaluations += 1;
                let values = contrib.values().expect("Riesz contributions are always defined");
                let pos = argbest(&values, |a, b| a > b);
                chosen.remove(pos);
            }
            chosen
        }
        Indicator::SolowPolasky { .. } | Indicator::Sum => {
            let mut chosen: Vec<usize> = (0..n).collect();
            while chosen.len() > k {
                let contrib = all_contributions(ind, dm, &chosen)?;
                evaluations += 1;
                let values = contrib.values().ok_or_else(|| Error::Undefined {
                    indicator: ind.to_string(),
                    subset: chosen.clone(),
                })?;
                let pos = argbest(&values, |a, b| a < b);
                chosen.remove(pos);
            }
            chosen
        }
    };
    let mut subset = subset;
    subset.sort_unstable();
    let value = evaluate(ind, dm, &subset)?;
    Ok(SelectionResult {
        subset,
        value,
        method: Method::Greedy,
        evaluations: evaluations + 1,
    })
}

fn argbest(values: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut pos = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if better(v, values[pos]) {
            pos = i;
        }
    }
    pos
}

pub fn select(ind: &Indicator, dm: &DistanceMatrix, k: usize, method: Method) -> Result<SelectionResult> {
    match method {
        Method::BruteForce => brute_force_select(ind, dm, k),
        Method::Greedy => greedy_select(ind, dm, k),
    }
}

/// `(k(k−1)/2^s, k(k−1))`: the range of Riesz energies of k vertices of a
/// graph metric (ordered-pair convention).
pub fn energy_bounds(k: usize, s: f64) -> Result<(f64, f64)> {
    if k < 2 || !(s > 0.0) {
        return Err(Error::invalid(format!("need k >= 2 and s > 0, got k={k}, s={s}")));
    }
    let pairs = (k * (k - 1)) as f64;
    Ok((pairs / 2f64.powf(s), pairs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliqueInstance {
    pub graph: Graph,
    pub k: usize,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliqueOutcome {
    HasClique(Vec<usize>),
    NoClique,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliqueReport {
    pub outcome: CliqueOutcome,
    /// Minimum Riesz energy over all k-subsets of the graph metric.
    pub min_energy: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Whether a direct search for a k-clique agrees with the outcome.
    pub agrees_with_direct_search: bool,
}

/// First k-clique in lexicographic order, by exhaustive search.
pub fn find_clique(g: &Graph, k: usize) -> Option<Vec<usize>> {
    Combinations::new(g.vertex_count(), k).find(|c| g.is_clique(c))
}

/// Decides k-Clique by minimising Riesz energy over the graph metric: a
/// k-subset reaches the lower bound exactly when it is a clique.
pub fn clique_via_energy(inst: &CliqueInstance) -> Result<CliqueReport> {
    let n = inst.graph.vertex_count();
    if inst.k < 2 || inst.k > n {
        return Err(Error::invalid(format!("need 2 <= k <= {n}, got k={}", inst.k)));
    }
    let ind = Indicator::riesz(inst.s)?;
    let dm = graph_metric(&inst.graph)?;
    let best = brute_force_select(&ind, &dm, inst.k)?;
    let (lower_bound, upper_bound) = energy_bounds(inst.k, inst.s)?;
    let outcome = if (best.value - lower_bound).abs() <= CLIQUE_TOLERANCE {
        CliqueOutcome::HasClique(best.subset)
    } else {
        CliqueOutcome::NoClique
    };
    let direct = find_clique(&inst.graph, inst.k);
    let agrees = match (&outcome, &direct) {
        (CliqueOutcome::HasClique(w), Some(_)) => inst.graph.is_clique(w),
        (CliqueOutcome::NoClique, None) => true,
        _ => false,
    };
    Ok(CliqueReport {
        outcome,
        min_energy: best.value,
        lower_bound,
        upper_bound,
        agrees_with_direct_search: agrees,
    })
}

/// Riesz energy of `vertices` in the graph metric of `g`.
pub fn graph_energy(g: &Graph, vertices: &[usize], s: f64) -> Result<f64> {
    riesz_energy(&graph_metric(g)?, vertices, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::Norm;

    fn line(xs: &[f64]) -> DistanceMatrix {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        DistanceMatrix::from_points(&pts, Norm::L2).unwrap()
    }

    #[test]
    fn combinations_are_lexicographic() {
        let all: Vec<_> = Combinations::new(4, 2).collect();
        assert_eq!(
            all,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        assert_eq!(Combinations::new(5, 5).count(), 1);
        assert_eq!(Combinations::new(10, 4).count(), 210);
        assert_eq!(Combinations::new(2, 3).count(), 0);
    }

    #[test]
    fn brute_force_full_set() {
        let dm = line(&[0.0, 1.0, 2.0, 10.0]);
        let r = brute_force_select(&Indicator::MaxMin, &dm, 4).unwrap();
        assert_eq!(r.subset, vec![0, 1, 2, 3]);
        assert_eq!(r.evaluations, 1);
    }

    #[test]
    fn brute_force_farthest_pair() {
        let dm = line(&[0.0, 1.0, 2.0, 10.0]);
        let r = brute_force_select(&Indicator::MaxMin, &dm, 2).unwrap();
        assert_eq!((r.subset, r.value), (vec![0, 3], 10.0));
    }

    #[test]
    fn brute_force_riesz_by_hand() {
        // s = 1 energies of the four 3-subsets of {0, 1, 2, 10} (ordered pairs):
        // {0,1,2}:  2(1 + 1/2 + 1)        = 5
        // {0,1,10}: 2(1 + 1/10 + 1/9)     ≈ 2.4222
        // {0,2,10}: 2(1/2 + 1/10 + 1/8)   = 1.45
        // {1,2,10}: 2(1 + 1/9 + 1/8)      ≈ 2.4722
        let dm = line(&[0.0, 1.0, 2.0, 10.0]);
        let r = brute_force_select(&Indicator::riesz(1.0).unwrap(), &dm, 3).unwrap();
        assert_eq!(r.subset, vec![0, 2, 3]);
        assert!((r.value - 1.45).abs() < 1e-12);
        assert_eq!(r.evaluations, 4);
    }

    #[test]
    fn brute_force_cap() {
        let dm = line(&(0..25).map(f64::from).collect::<Vec<_>>());
        let err = brute_force_select(&Indicator::MaxMin, &dm, 3).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { cap: 20, size: 25, .. }));
        assert!(brute_force_select(&Indicator::MaxMin, &line(&[0.0, 1.0]), 3).is_err());
    }

    #[test]
    fn brute_force_tie_breaks_lexicographically() {
        let dm = line(&[0.0, 1.0, 2.0, 3.0]);
        // every 3-subset contains an adjacent pair, so all tie at 1
        let r = brute_force_select(&Indicator::MaxMin, &dm, 3).unwrap();
        assert_eq!((r.subset, r.value), (vec![0, 1, 2], 1.0));
    }

    #[test]
    fn greedy_full_set_and_square() {
        let dm = line(&[0.0, 1.0, 5.0]);
        for ind in [
            Indicator::MaxMin,
            Indicator::riesz(2.0).unwrap(),
            Indicator::solow_polasky(1.0).unwrap(),
        ] {
            let r = greedy_select(&ind, &dm, 3).unwrap();
            assert_eq!(r.subset, vec![0, 1, 2]);
            assert_eq!(r.value, evaluate(&ind, &dm, &[0, 1, 2]).unwrap());
        }
        let square = DistanceMatrix::from_points(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            Norm::L2,
        )
        .unwrap();
        let r = greedy_select(&Indicator::MaxMin, &square, 2).unwrap();
        assert_eq!(r.subset, vec![0, 3]);
        assert!((r.value - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn greedy_riesz_drops_crowded_points() {
        let dm = line(&[0.0, 0.1, 5.0, 10.0]);
        let r = greedy_select(&Indicator::riesz(1.0).unwrap(), &dm, 3).unwrap();
        assert!(r.subset == vec![0, 2, 3] || r.subset == vec![1, 2, 3]);
    }

    #[test]
    fn bounds() {
        assert_eq!(energy_bounds(3, 1.0).unwrap(), (3.0, 6.0));
        assert_eq!(energy_bounds(2, 2.0).unwrap(), (0.5, 2.0));
        assert_eq!(energy_bounds(4, 1.0).unwrap(), (6.0, 12.0));
        assert!(energy_bounds(1, 1.0).is_err());
        assert!(energy_bounds(3, 0.0).is_err());
    }

    #[test]
    fn clique_k5() {
        let inst = CliqueInstance {
            graph: Graph::complete(5),
            k: 4,
            s: 1.0,
        };
        let r = clique_via_energy(&inst).unwrap();
        assert_eq!(r.outcome, CliqueOutcome::HasClique(vec![0, 1, 2, 3]));
        assert_eq!(r.min_energy, 6.0);
        assert!(r.agrees_with_direct_search);
    }

    #[test]
    fn clique_c5_triangle_free() {
        let inst = CliqueInstance {
            graph: Graph::cycle(5),
            k: 3,
            s: 1.0,
        };
        let r = clique_via_energy(&inst).unwrap();
        assert_eq!(r.outcome, CliqueOutcome::NoClique);
        assert!(r.min_energy > 3.0);
        assert!(find_clique(&inst.graph, 3).is_none());
        assert!(r.agrees_with_direct_search);
    }

    #[test]
    fn clique_empty_graph() {
        for s in [0.5, 1.0, 3.0] {
            let inst = CliqueInstance {
                graph: Graph::new(4),
                k: 2,
                s,
            };
            let r = clique_via_energy(&inst).unwrap();
            assert_eq!(r.outcome, CliqueOutcome::NoClique);
            assert_eq!(r.min_energy, 2.0);
            assert_eq!(r.min_energy, r.upper_bound);
        }
    }
}
