//! Set-diversity indicators over a [`DistanceMatrix`] restricted to an index subset.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::metric::DistanceMatrix;

/// Default Riesz exponent.
pub const DEFAULT_S: f64 = 2.0;
/// Default Solow-Polasky decay.
pub const DEFAULT_THETA: f64 = 1.0;
/// Residual bound for accepting a least-squares weighting as exact.
pub const WEIGHTING_RESIDUAL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Indicator {
    MaxMin,
    RieszEnergy { s: f64 },
    SolowPolasky { theta: f64 },
    Sum,
}

impl Indicator {
    pub fn riesz(s: f64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("Riesz exponent must be positive, got {s}")));
        }
        Ok(Indicator::RieszEnergy { s })
    }

    pub fn solow_polasky(theta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::invalid(format!(
                "Solow-Polasky theta must be positive, got {theta}"
            )));
        }
        Ok(Indicator::SolowPolasky { theta })
    }

    /// Builds an indicator from a name and optional parameters.
    pub fn from_name(name: &str, s: Option<f64>, theta: Option<f64>) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "maxmin" | "max-min" => Ok(Indicator::MaxMin),
            "riesz" | "energy" | "riesz-energy" => Self::riesz(s.unwrap_or(DEFAULT_S)),
            "sp" | "solow-polasky" | "solowpolasky" => Self::solow_polasky(theta.unwrap_or(DEFAULT_THETA)),
            "sum" => Ok(Indicator::Sum),
            other => Err(Error::invalid(format!("unknown indicator '{other}'"))),
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            Indicator::RieszEnergy { .. } => Orientation::Minimize,
            _ => Orientation::Maximize,
        }
    }

    /// Maps a raw value so that larger always means more diverse.
    pub fn adjusted(&self, value: f64) -> f64 {
        match self.orientation() {
            Orientation::Maximize => value,
            Orientation::Minimize => -value,
        }
    }

    /// `true` if `a` is strictly more diverse than `b`.
    pub fn better(&self, a: f64, b: f64) -> bool {
        self.adjusted(a) > self.adjusted(b)
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            Indicator::MaxMin => "maxmin",
            Indicator::RieszEnergy { .. } => "riesz",
            Indicator::SolowPolasky { .. } => "sp",
            Indicator::Sum => "sum",
        }
    }

    /// Smallest subset size on which the indicator is defined.
    pub fn min_size(&self) -> usize {
        match self {
            Indicator::MaxMin | Indicator::Sum => 2,
            Indicator::RieszEnergy { .. } | Indicator::SolowPolasky { .. } => 1,
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Indicator::MaxMin => write!(f, "MaxMin"),
            Indicator::RieszEnergy { s } => write!(f, "RieszEnergy(s={s})"),
            Indicator::SolowPolasky { theta } => write!(f, "SolowPolasky(theta={theta})"),
            Indicator::Sum => write!(f, "Sum"),
        }
    }
}

/// Parses `maxmin`, `sum`, `riesz`, `riesz:<s>`, `sp` or `sp:<theta>`.
impl FromStr for Indicator {
    type Err = Error;

    fn from_str(spec: &str) -> Result<Self> {
        let (name, param) = match spec.split_once(':') {
            Some((n, p)) => {
                let v = p
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad indicator parameter '{p}': {e}")))?;
                (n.trim(), Some(v))
            }
            None => (spec.trim(), None),
        };
        Indicator::from_name(name, param, param)
    }
}

fn check_subset(dm: &DistanceMatrix, subset: &[usize]) -> Result<()> {
    dm.check_indices(subset)
}

/// Smallest pairwise distance in `subset`, with twins identified: a pair at
/// zero distance whose rows agree on every member of `subset` is the same
/// element and contributes no distance.
pub fn max_min(dm: &DistanceMatrix, subset: &[usize]) -> Result<f64> {
    check_subset(dm, subset)?;
    let undefined = || Error::Undefined {
        indicator: "MaxMin".into(),
        subset: subset.to_vec(),
    };
    if subset.len() < 2 {
        return Err(undefined());
    }
    let mut best = f64::INFINITY;
    let mut saw_zero = false;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            let d = dm.get(i, j);
            if dm.is_zero(d) {
                saw_zero = true;
            } else {
                best = best.min(d);
            }
        }
    }
    if saw_zero {
        let tol = dm.zero_tolerance();
        let twins = |i: usize, j: usize| subset.iter().all(|&z| (dm.get(i, z) - dm.get(j, z)).abs() <= tol);
        for (a, &i) in subset.iter().enumerate() {
            for &j in &subset[a + 1..] {
                let d = dm.get(i, j);
                if dm.is_zero(d) && !twins(i, j) {
                    best = best.min(d);
                }
            }
        }
    }
    if best.is_infinite() {
        return Err(undefined());
    }
    Ok(best)
}

/// True if some off-diagonal entry within `subset` counts as zero.
pub fn has_zero_distance(dm: &DistanceMatrix, subset: &[usize]) -> bool {
    subset
        .iter()
        .enumerate()
        .any(|(a, &i)| subset[a + 1..].iter().any(|&j| dm.is_zero(dm.get(i, j))))
}

/// Riesz s-energy summed over ordered pairs with nonzero distance, so each
/// unordered pair contributes `2 / d^s`.
pub fn riesz_energy(dm: &DistanceMatrix, subset: &[usize], s: f64) -> Result<f64> {
    check_subset(dm, subset)?;
    if !(s > 0.0) {
        return Err(Error::invalid(format!("Riesz exponent must be positive, got {s}")));
    }
    let mut total = 0.0;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            let d = dm.get(i, j);
            if !dm.is_zero(d) {
                total += d.powf(-s);
            }
        }
    }
    Ok(2.0 * total)
}

/// Sum of distances over unordered pairs.
pub fn sum_indicator(dm: &DistanceMatrix, subset: &[usize]) -> Result<f64> {
    check_subset(dm, subset)?;
    if subset.len() < 2 {
        return Err(Error::Undefined {
            indicator: "Sum".into(),
            subset: subset.to_vec(),
        });
    }
    let mut total = 0.0;
    for (a, &i) in subset.iter().enumerate() {
        for &j in &subset[a + 1..] {
            total += dm.get(i, j);
        }
    }
    Ok(total)
}

/// `exp(-theta * d)` on the subset; unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub entries: DMatrix<f64>,
}

impl SimilarityMatrix {
    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.entries
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect()
    }
}

pub fn similarity_matrix(dm: &DistanceMatrix, subset: &[usize], theta: f64) -> Result<SimilarityMatrix> {
    check_subset(dm, subset)?;
    if !(theta > 0.0) {
        return Err(Error::invalid(format!("theta must be positive, got {theta}")));
    }
    let k = subset.len();
    let entries = DMatrix::from_fn(k, k, |a, b| {
        if a == b {
            1.0
        } else {
            (-theta * dm.get(subset[a], subset[b])).exp()
        }
    });
    Ok(SimilarityMatrix { entries })
}

/// A vector `w` with `sim * w = 1`; its component sum is the magnitude.
#[derive(Debug, Clone, PartialEq)]
pub struct Weighting {
    pub w: Vec<f64>,
    pub magnitude: f64,
}

fn residual_inf(sim: &DMatrix<f64>, w: &DVector<f64>) -> f64 {
    (sim * w).iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
}

/// Solves `sim * w = 1`. LU with partial pivoting first; when that fails or
/// leaves a large residual, the least-norm solution from an SVD is accepted
/// only if the system is consistent. `None` means no weighting exists.
pub fn weighting(sim: &SimilarityMatrix) -> Option<Weighting> {
    let k = sim.len();
    if k == 0 {
        return Some(Weighting {
            w: Vec::new(),
            magnitude: 0.0,
        });
    }
    let ones = DVector::from_element(k, 1.0);
    let lu_solution = sim
        .entries
        .clone()
        .lu()
        .solve(&ones)
        .filter(|w| w.iter().all(|v| v.is_finite()))
        .filter(|w| residual_inf(&sim.entries, w) < WEIGHTING_RESIDUAL);
    let w = match lu_solution {
        Some(w) => w,
        None => {
            let svd = sim.entries.clone().svd(true, true);
            let cutoff = svd.singular_values.max() * (k as f64) * f64::EPSILON;
            let w = svd.solve(&ones, cutoff).ok()?;
            if residual_inf(&sim.entries, &w) >= WEIGHTING_RESIDUAL {
                return None;
            }
            w
        }
    };
    Some(Weighting {
        magnitude: w.sum(),
        w: w.iter().copied().collect(),
    })
}

/// Solow-Polasky diversity (magnitude of the similarity matrix). `Ok(None)`
/// signals that no weighting exists.
pub fn solow_polasky(dm: &DistanceMatrix, subset: &[usize], theta: f64) -> Result<Option<f64>> {
    let sim = similarity_matrix(dm, subset, theta)?;
    Ok(weighting(&sim).map(|w| w.magnitude))
}

/// Uniform dispatch. An undefined Solow-Polasky value comes back as
/// [`Error::Undefined`].
pub fn evaluate(ind: &Indicator, dm: &DistanceMatrix, subset: &[usize]) -> Result<f64> {
    match *ind {
        Indicator::MaxMin => max_min(dm, subset),
        Indicator::RieszEnergy { s } => riesz_energy(dm, subset, s),
        Indicator::Sum => sum_indicator(dm, subset),
        Indicator::SolowPolasky { theta } => solow_polasky(dm, subset, theta)?.ok_or_else(|| Error::Undefined {
            indicator: ind.to_string(),
            subset: subset.to_vec(),
        }),
    }
}

/// Values of Max-Min, Riesz energy and Solow-Polasky on the same subset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiversityTriple {
    pub maxmin: f64,
    pub riesz: f64,
    pub sp: f64,
}

/// Evaluates all three tracked indicators; undefined values become NaN.
pub fn diversity_triple(dm: &DistanceMatrix, s: f64, theta: f64) -> DiversityTriple {
    let all = dm.all_indices();
    DiversityTriple {
        maxmin: max_min(dm, &all).unwrap_or(f64::NAN),
        riesz: riesz_energy(dm, &all, s).unwrap_or(f64::NAN),
        sp: solow_polasky(dm, &all, theta).ok().flatten().unwrap_or(f64::NAN),
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

    fn two_columns() -> DistanceMatrix {
        let r17 = 17f64.sqrt();
        let r20 = 20f64.sqrt();
        DistanceMatrix::from_rows(&[
            vec![0.0, 1.0, 2.0, 4.0, r17, r20],
            vec![1.0, 0.0, 1.0, r17, 4.0, r17],
            vec![2.0, 1.0, 0.0, r20, r17, 4.0],
            vec![4.0, r17, r20, 0.0, 1.0, 2.0],
            vec![r17, 4.0, r17, 1.0, 0.0, 1.0],
            vec![r20, r17, 4.0, 2.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn max_min_examples() {
        let dm = two_columns();
        assert_eq!(max_min(&dm, &[1, 4]).unwrap(), 4.0);
        assert_eq!(max_min(&dm, &dm.all_indices()).unwrap(), 1.0);
        let square = DistanceMatrix::from_points(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            Norm::L2,
        )
        .unwrap();
        assert_eq!(max_min(&square, &[0, 1, 2, 3]).unwrap(), 1.0);
        assert!(matches!(max_min(&dm, &[2]), Err(Error::Undefined { .. })));
    }

    #[test]
    fn max_min_identifies_twins() {
        let dm = line(&[0.0, 1.0, 3.0]);
        let ext = dm.with_duplicate(2).unwrap();
        assert_eq!(max_min(&ext, &[0, 1, 2, 3]).unwrap(), 1.0);
        assert!(max_min(&ext, &[2, 3]).is_err());
        // zero distance without being twins still counts
        let remark =
            DistanceMatrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(max_min(&remark, &[0, 1, 2]).unwrap(), 1.0);
        let odd = DistanceMatrix::from_rows(&[vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 0.0], vec![2.0, 0.0, 0.0]]).unwrap();
        assert_eq!(max_min(&odd, &[0, 1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn riesz_examples() {
        let zeros = DistanceMatrix::from_rows(&[vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]]).unwrap();
        assert_eq!(riesz_energy(&zeros, &[0, 1, 2], 1.0).unwrap(), 0.0);
        let k3 = graph_metric(&Graph::complete(3)).unwrap();
        assert_eq!(riesz_energy(&k3, &[0, 1, 2], 1.0).unwrap(), 3.0);
        let e3 = graph_metric(&Graph::new(3)).unwrap();
        assert_eq!(riesz_energy(&e3, &[0, 1, 2], 1.0).unwrap(), 6.0);
        assert_eq!(riesz_energy(&k3, &[1], 1.0).unwrap(), 0.0);
        assert!(riesz_energy(&k3, &[0, 1], 0.0).is_err());
    }

    #[test]
    fn similarity_matrix_examples() {
        let zeros = DistanceMatrix::from_rows(&[vec![0.0; 2], vec![0.0; 2]]).unwrap();
        let sim = similarity_matrix(&zeros, &[0, 1], 1.0).unwrap();
        assert!(sim.entries.iter().all(|&v| v == 1.0));

        let dm = line(&[0.0, 2.5]);
        let sim = similarity_matrix(&dm, &[0, 1], 0.7).unwrap();
        assert_eq!(sim.get(0, 1), (-0.7f64 * 2.5).exp());
        assert_eq!(sim.get(1, 0), sim.get(0, 1));

        let sim = similarity_matrix(&dm, &[0, 1], 1e3).unwrap();
        assert!(sim.get(0, 1) < 1e-300);
        assert_eq!(sim.get(0, 0), 1.0);
    }

    #[test]
    fn solow_polasky_closed_forms() {
        let dm = line(&[0.0, 1.0, 4.0]);
        assert_eq!(solow_polasky(&dm, &[2], 1.0).unwrap(), Some(1.0));
        assert_eq!(solow_polasky(&dm, &[], 1.0).unwrap(), Some(0.0));
        for &(theta, d) in &[(1.0, 1.0), (0.5, 4.0), (2.0, 3.0)] {
            let dm = line(&[0.0, d]);
            let expected = 2.0 / (1.0 + (-theta * d).exp());
            let got = solow_polasky(&dm, &[0, 1], theta).unwrap().unwrap();
            assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
        }
    }

    #[test]
    fn solow_polasky_survives_exact_duplicates() {
        let dm = line(&[0.0, 1.0, 3.0]);
        let base = solow_polasky(&dm, &[0, 1, 2], 1.0).unwrap().unwrap();
        let ext = dm.with_duplicate(1).unwrap();
        let twin = solow_polasky(&ext, &[0, 1, 2, 3], 1.0).unwrap().unwrap();
        assert!((base - twin).abs() < 1e-9);
    }

    #[test]
    fn inconsistent_system_is_undefined() {
        let dm = DistanceMatrix::from_rows(&[vec![0.0, 0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        assert!(solow_polasky(&dm, &[0, 1, 2], 1.0).unwrap().is_some());
        let sim = SimilarityMatrix {
            entries: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
        };
        assert!(weighting(&sim).is_some());
        let sim = SimilarityMatrix {
            entries: DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.5, 1.0, 1.0, 0.5, 0.5, 0.5, 0.25]),
        };
        // rank 1 with proportional rows, so sim * w = 1 has no solution
        assert!(weighting(&sim).is_none());
    }

    #[test]
    fn sum_examples() {
        let a = line(&[0.0, 0.2, 1.8, 2.0]);
        let c = line(&[0.0, 2.0 / 3.0, 4.0 / 3.0, 2.0]);
        assert!(sum_indicator(&a, &[0, 1, 2, 3]).unwrap() > sum_indicator(&c, &[0, 1, 2, 3]).unwrap());
        assert_eq!(sum_indicator(&line(&[0.0, 3.0]), &[0, 1]).unwrap(), 3.0);
        let tri = DistanceMatrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        assert_eq!(sum_indicator(&tri, &[0, 1, 2]).unwrap(), 3.0);
    }

    #[test]
    fn evaluate_dispatch() {
        let square = DistanceMatrix::from_points(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            Norm::L2,
        )
        .unwrap();
        assert_eq!(evaluate(&Indicator::MaxMin, &square, &[0, 1, 2, 3]).unwrap(), 1.0);
        let k3 = graph_metric(&Graph::complete(3)).unwrap();
        assert_eq!(evaluate(&Indicator::riesz(1.0).unwrap(), &k3, &[0, 1, 2]).unwrap(), 3.0);
        let sp = evaluate(&Indicator::solow_polasky(1.0).unwrap(), &line(&[0.0, 1.0]), &[0, 1]).unwrap();
        // 2 / (1 + e^-1)
        assert!((sp - 1.462_117_157_260_009_7).abs() < 1e-12);
    }

    #[test]
    fn indicator_parsing_and_orientation() {
        assert_eq!("maxmin".parse::<Indicator>().unwrap(), Indicator::MaxMin);
        assert_eq!(
            "riesz:1.5".parse::<Indicator>().unwrap(),
            Indicator::RieszEnergy { s: 1.5 }
        );
        assert_eq!("riesz".parse::<Indicator>().unwrap(), Indicator::RieszEnergy { s: 2.0 });
        assert_eq!(
            "sp".parse::<Indicator>().unwrap(),
            Indicator::SolowPolasky { theta: 1.0 }
        );
        assert!("riesz:-1".parse::<Indicator>().is_err());
        assert!("gap".parse::<Indicator>().is_err());
        assert_eq!(Indicator::riesz(2.0).unwrap().orientation(), Orientation::Minimize);
        assert_eq!(Indicator::Sum.orientation(), Orientation::Maximize);
        assert!(Indicator::riesz(2.0).unwrap().better(1.0, 2.0));
    }
}
