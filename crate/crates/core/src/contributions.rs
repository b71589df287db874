//! Single-point contributions `D(X ∪ {x}) − D(X \ {x})` and the
//! all-contributions vector for each indicator.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indicators::{evaluate, has_zero_distance, max_min, solow_polasky, Indicator};
use crate::metric::DistanceMatrix;

/// Contributions aligned with the order of `members`. `None` marks an entry
/// whose value is undefined (Solow-Polasky without a weighting).
#[derive(Debug, Clone, PartialEq)]
pub struct ContributionVector {
    pub members: Vec<usize>,
    pub values: Vec<Option<f64>>,
}

impl ContributionVector {
    fn defined(members: &[usize], values: Vec<f64>) -> Self {
        ContributionVector {
            members: members.to_vec(),
            values: values.into_iter().map(Some).collect(),
        }
    }

    /// All values, or `None` if any entry is undefined.
    pub fn values(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn without(subset: &[usize], x: usize) -> Vec<usize> {
    subset.iter().copied().filter(|&y| y != x).collect()
}

fn with(subset: &[usize], x: usize) -> Vec<usize> {
    let mut out = subset.to_vec();
    if !out.contains(&x) {
        out.push(x);
    }
    out
}

/// Reference contribution from two full evaluations. Serves as the oracle
/// for the fast all-contributions paths.
pub fn contribution(ind: &Indicator, dm: &DistanceMatrix, subset: &[usize], x: usize) -> Result<f64> {
    dm.check_indices(&[x])?;
    let grown = with(subset, x);
    let shrunk = without(subset, x);
    let upper = evaluate(ind, dm, &grown).map_err(|e| term_error("D(X ∪ {x})", e))?;
    let lower = evaluate(ind, dm, &shrunk).map_err(|e| term_error("D(X \\ {x})", e))?;
    Ok(upper - lower)
}

fn term_error(term: &str, e: Error) -> Error {
    Error::InvalidInput(format!("{term} failed: {e}"))
}

/// Contribution of a point outside the matrix, given its distances to every
/// point of `dm` (in index order).
pub fn contribution_of_new_point(
    ind: &Indicator,
    dm: &DistanceMatrix,
    subset: &[usize],
    distances: &[f64],
) -> Result<f64> {
    let ext = dm.with_point(distances)?;
    contribution(ind, &ext, subset, dm.len())
}

/// Riesz contributions in Θ(n²): each member contributes twice the sum of
/// its inverse-power distances to the rest.
pub fn all_contributions_riesz(dm: &DistanceMatrix, subset: &[usize], s: f64) -> Result<ContributionVector> {
    dm.check_indices(subset)?;
    if !(s > 0.0) {
        return Err(Error::invalid(format!("Riesz exponent must be positive, got {s}")));
    }
    let k = subset.len();
    let mut acc = vec![0.0; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let d = dm.get(subset[a], subset[b]);
            if !dm.is_zero(d) {
                let term = d.powf(-s);
                acc[a] += term;
                acc[b] += term;
            }
        }
    }
    Ok(ContributionVector::defined(
        subset,
        acc.into_iter().map(|v| 2.0 * v).collect(),
    ))
}

/// Which branch of the Max-Min case analysis applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaxMinCase {
    /// A triangle of minimal pairs or two disjoint minimal pairs: removing any
    /// single point leaves the minimum unchanged.
    Unchanged,
    /// All minimal pairs share one endpoint.
    Star { center: usize },
    /// Exactly one minimal pair.
    SinglePair { a: usize, b: usize },
}

/// Positions (into `subset`) of every pair at the minimal distance.
fn minimal_pairs(dm: &DistanceMatrix, subset: &[usize]) -> (f64, Vec<(usize, usize)>) {
    let k = subset.len();
    let mut d_min = f64::INFINITY;
    for a in 0..k {
        for b in (a + 1)..k {
            d_min = d_min.min(dm.get(subset[a], subset[b]));
        }
    }
    let tol = dm.zero_tolerance();
    let mut pairs = Vec::new();
    for a in 0..k {
        for b in (a + 1)..k {
            if dm.get(subset[a], subset[b]) - d_min <= tol {
                pairs.push((a, b));
            }
        }
    }
    (d_min, pairs)
}

/// Classifies the minimal-pair structure of `subset` (positions, not indices).
pub fn classify_maxmin(dm: &DistanceMatrix, subset: &[usize]) -> MaxMinCase {
    let (_, pairs) = minimal_pairs(dm, subset);
    let (a, b) = pairs[0];
    if pairs.len() == 1 {
        return MaxMinCase::SinglePair { a, b };
    }
    // Two pairs sharing no endpoint anywhere in the list means Case 1.
    for (i, p) in pairs.iter().enumerate() {
        for q in &pairs[i + 1..] {
            if p.0 != q.0 && p.0 != q.1 && p.1 != q.0 && p.1 != q.1 {
                return MaxMinCase::Unchanged;
            }
        }
    }
    // Every two pairs overlap. Either all share a common endpoint (star) or
    // the pairs close a triangle.
    for center in [a, b] {
        if pairs.iter().all(|&(u, v)| u == center || v == center) {
            return MaxMinCase::Star { center };
        }
    }
    MaxMinCase::Unchanged
}

/// Max-Min contributions by case analysis on the pairs that attain the
/// minimum. Only the star center or the two points of a unique closest pair
/// can have a nonzero entry; each such entry is `d_min − d'_min`, where
/// `d'_min` is the minimum after deleting that point.
///
/// Subsets containing zero distances (twins or similarity-space zeros) go
/// through the two-evaluation definition, since deleting a point can turn a
/// zero-distance pair into twins.
pub fn all_contributions_maxmin(dm: &DistanceMatrix, subset: &[usize]) -> Result<ContributionVector> {
    dm.check_indices(subset)?;
    let k = subset.len();
    if k < 3 {
        return Err(Error::invalid(format!(
            "Max-Min contributions need at least 3 points, got {k}"
        )));
    }
    if has_zero_distance(dm, subset) {
        let values = subset
            .iter()
            .map(|&x| Ok(max_min(dm, subset)? - max_min(dm, &without(subset, x))?))
            .collect::<Result<Vec<_>>>()?;
        return Ok(ContributionVector::defined(subset, values));
    }
    let (d_min, _) = minimal_pairs(dm, subset);
    let min_without = |skip: usize| {
        let mut m = f64::INFINITY;
        for a in (0..k).filter(|&a| a != skip) {
            for b in ((a + 1)..k).filter(|&b| b != skip) {
                m = m.min(dm.get(subset[a], subset[b]));
            }
        }
        m
    };
    let mut values = vec![0.0; k];
    match classify_maxmin(dm, subset) {
        MaxMinCase::Unchanged => {}
        MaxMinCase::Star { center } => values[center] = d_min - min_without(center),
        MaxMinCase::SinglePair { a, b } => {
            values[a] = d_min - min_without(a);
            values[b] = d_min - min_without(b);
        }
    }
    Ok(ContributionVector::defined(subset, values))
}

/// Solow-Polasky contributions: one solve for the full set plus one
/// leave-one-out solve per member, run in parallel.
pub fn all_contributions_sp(dm: &DistanceMatrix, subset: &[usize], theta: f64) -> Result<ContributionVector> {
    dm.check_indices(subset)?;
    let full = solow_polasky(dm, subset, theta)?;
    let values = subset
        .par_iter()
        .map(|&x| {
            let rest = without(subset, x);
            Ok(match (full, solow_polasky(dm, &rest, theta)?) {
                (Some(f), Some(r)) => Some(f - r),
                _ => None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContributionVector {
        members: subset.to_vec(),
        values,
    })
}

/// Dispatches to the fast path for each indicator; `Sum` uses the oracle.
pub fn all_contributions(ind: &Indicator, dm: &DistanceMatrix, subset: &[usize]) -> Result<ContributionVector> {
    match *ind {
        Indicator::MaxMin => all_contributions_maxmin(dm, subset),
        Indicator::RieszEnergy { s } => all_contributions_riesz(dm, subset, s),
        Indicator::SolowPolasky { theta } => all_contributions_sp(dm, subset, theta),
        Indicator::Sum => {
            let values = subset
                .iter()
                .map(|&x| contribution(ind, dm, subset, x))
                .collect::<Result<Vec<_>>>()?;
            Ok(ContributionVector::defined(subset, values))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{graph_metric, Graph, Norm};

    fn line(xs: &[f64]) -> DistanceMatrix {
        let pts: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        DistanceMatrix::from_points(&pts, Norm::L2).unwrap()
    }

    fn oracle(ind: &Indicator, dm: &DistanceMatrix, subset: &[usize]) -> Vec<f64> {
        subset
            .iter()
            .map(|&x| contribution(ind, dm, subset, x).unwrap())
            .collect()
    }

    #[test]
    fn riesz_far_point() {
        let dm = line(&[0.0, 1.0, 2.0, 100.0]);
        let ind = Indicator::riesz(1.0).unwrap();
        let c = contribution(&ind, &dm, &[0, 1, 2], 3).unwrap();
        let expected = 2.0 * (1.0 / 100.0 + 1.0 / 99.0 + 1.0 / 98.0);
        assert!((c - expected).abs() < 1e-12);
    }

    #[test]
    fn maxmin_duplicate_contribution() {
        let dm = line(&[0.0, 1.0, 3.0]).with_duplicate(2).unwrap();
        let c = contribution(&Indicator::MaxMin, &dm, &[0, 1, 2], 3).unwrap();
        // twins are identified, so D(X ∪ {dup}) = D(X) = D(X \ {dup})
        assert_eq!(c, 0.0);
        let c_member = contribution(&Indicator::MaxMin, &dm, &[0, 1, 2, 3], 3).unwrap();
        assert_eq!(c_member, 0.0);
    }

    #[test]
    fn sp_singleton_plus_point() {
        let dm = line(&[0.0, 2.0]);
        let theta = 0.8;
        let c = contribution(&Indicator::solow_polasky(theta).unwrap(), &dm, &[0], 1).unwrap();
        let expected = 2.0 / (1.0 + (-theta * 2.0f64).exp()) - 1.0;
        assert!((c - expected).abs() < 1e-14);
    }

    #[test]
    fn contribution_reports_failed_term() {
        let dm = line(&[0.0, 1.0, 2.0]);
        let err = contribution(&Indicator::MaxMin, &dm, &[0, 1], 1).unwrap_err();
        assert!(err.to_string().contains("D(X \\ {x})"));
    }

    #[test]
    fn new_point_contribution() {
        let dm = line(&[0.0, 1.0]);
        let ind = Indicator::riesz(2.0).unwrap();
        let c = contribution_of_new_point(&ind, &dm, &[0, 1], &[3.0, 2.0]).unwrap();
        assert!((c - 2.0 * (1.0 / 9.0 + 1.0 / 4.0)).abs() < 1e-15);
    }

    #[test]
    fn riesz_examples() {
        let dm = line(&[0.0, 1.0]);
        let v = all_contributions_riesz(&dm, &[0, 1], 2.0).unwrap().values().unwrap();
        assert_eq!(v, vec![2.0, 2.0]);
        let k3 = graph_metric(&Graph::complete(3)).unwrap();
        let v = all_contributions_riesz(&k3, &[0, 1, 2], 1.0).unwrap().values().unwrap();
        assert_eq!(v, vec![2.0, 2.0, 2.0]);
        assert_eq!(v, oracle(&Indicator::riesz(1.0).unwrap(), &k3, &[0, 1, 2]));
    }

    #[test]
    fn maxmin_equilateral_triangle() {
        let tri = DistanceMatrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        assert_eq!(classify_maxmin(&tri, &[0, 1, 2]), MaxMinCase::Unchanged);
        let v = all_contributions_maxmin(&tri, &[0, 1, 2]).unwrap().values().unwrap();
        assert_eq!(v, vec![0.0, 0.0, 0.0]);
        assert_eq!(v, oracle(&Indicator::MaxMin, &tri, &[0, 1, 2]));
    }

    #[test]
    fn maxmin_star() {
        // Center 0 with leaves at distance 1, leaves pairwise 2 or 3 apart.
        let star = DistanceMatrix::from_rows(&[
            vec![0.0, 1.0, 1.0, 1.0],
            vec![1.0, 0.0, 2.0, 2.0],
            vec![1.0, 2.0, 0.0, 3.0],
            vec![1.0, 2.0, 3.0, 0.0],
        ])
        .unwrap();
        let all = [0, 1, 2, 3];
        assert_eq!(classify_maxmin(&star, &all), MaxMinCase::Star { center: 0 });
        let v = all_contributions_maxmin(&star, &all).unwrap().values().unwrap();
        assert_eq!(v, vec![1.0 - 2.0, 0.0, 0.0, 0.0]);
        assert_eq!(v, oracle(&Indicator::MaxMin, &star, &all));
    }

    #[test]
    fn maxmin_collinear_single_pair() {
        let dm = line(&[0.0, 1.0, 3.0]);
        assert_eq!(classify_maxmin(&dm, &[0, 1, 2]), MaxMinCase::SinglePair { a: 0, b: 1 });
        let v = all_contributions_maxmin(&dm, &[0, 1, 2]).unwrap().values().unwrap();
        // removing 0 leaves {1, 3}: min 2; removing 1 leaves {0, 3}: min 3
        assert_eq!(v, vec![1.0 - 2.0, 1.0 - 3.0, 0.0]);
        assert_eq!(v, oracle(&Indicator::MaxMin, &dm, &[0, 1, 2]));
    }

    #[test]
    fn maxmin_two_disjoint_pairs() {
        let dm = line(&[0.0, 1.0, 5.0, 6.0, 10.0]);
        assert_eq!(classify_maxmin(&dm, &[0, 1, 2, 3, 4]), MaxMinCase::Unchanged);
        let v = all_contributions_maxmin(&dm, &[0, 1, 2, 3, 4])
            .unwrap()
            .values()
            .unwrap();
        assert!(v.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn maxmin_with_twins_matches_oracle() {
        let dm = line(&[0.0, 1.0, 3.0, 7.0]).with_duplicate(1).unwrap();
        let all = [0, 1, 2, 3, 4];
        let v = all_contributions_maxmin(&dm, &all).unwrap().values().unwrap();
        assert_eq!(v, oracle(&Indicator::MaxMin, &dm, &all));
    }

    #[test]
    fn maxmin_respects_subset_order() {
        let dm = line(&[0.0, 1.0, 3.0, 10.0]);
        let subset = [3, 1, 0];
        let v = all_contributions_maxmin(&dm, &subset).unwrap().values().unwrap();
        assert_eq!(v, oracle(&Indicator::MaxMin, &dm, &subset));
        assert!(all_contributions_maxmin(&dm, &[0, 1]).is_err());
    }

    #[test]
    fn sp_duplicate_pair_contributes_nothing() {
        let dm = line(&[0.0, 1.5, 4.0]).with_duplicate(1).unwrap();
        let v = all_contributions_sp(&dm, &[0, 1, 2, 3], 1.0).unwrap().values().unwrap();
        assert!(v[1].abs() < 1e-9 && v[3].abs() < 1e-9, "{v:?}");
        assert!(v[0] > 0.0 && v[2] > 0.0);
    }

    #[test]
    fn sp_two_points() {
        let d = 1.7;
        let theta = 1.3;
        let dm = line(&[0.0, d]);
        let v = all_contributions_sp(&dm, &[0, 1], theta).unwrap().values().unwrap();
        let expected = 2.0 / (1.0 + (-theta * d).exp()) - 1.0;
        for c in v {
            assert!((c - expected).abs() < 1e-14);
        }
    }
}
