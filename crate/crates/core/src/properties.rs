//! Finite-instance checks of the structural properties of diversity indicators.
//!
//! Every failed check carries a [`Witness`] that can be re-verified by direct
//! evaluation with [`Witness::recheck`].

use std::fmt;
use std::io::Cursor;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indicators::{evaluate, Indicator};
use crate::metric::{graph_metric, parse_points, DistanceMatrix, Graph, Norm, Provenance, RigidMotion};

/// Largest ground set for the exhaustive submodularity checks.
pub const SUBMODULARITY_CAP: usize = 8;
/// "Strictly greater" margin for computed (floating-point) spaces.
pub const STRICT_MARGIN: f64 = 1e-12;
/// Absolute tolerance for equality checks (twinning, isometry).
pub const EQUALITY_TOLERANCE: f64 = 1e-9;
/// Relative slack on submodularity inequalities, so rounding in sums
/// of many terms does not produce spurious witnesses.
pub const SUBMODULARITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Property {
    MonotonicityInVarieties,
    Twinning,
    MonotonicityInDistance,
    StrictMonotonicityInDistance,
    Submodularity,
    IsometryInvariance,
}

impl Property {
    /// Column order of the property table.
    pub const COLUMNS: [Property; 6] = [
        Property::MonotonicityInVarieties,
        Property::Twinning,
        Property::MonotonicityInDistance,
        Property::StrictMonotonicityInDistance,
        Property::Submodularity,
        Property::IsometryInvariance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::MonotonicityInVarieties => "monotonicity in varieties",
            Property::Twinning => "twinning",
            Property::MonotonicityInDistance => "monotonicity in distance",
            Property::StrictMonotonicityInDistance => "strict monotonicity in distance",
            Property::Submodularity => "submodularity",
            Property::IsometryInvariance => "isometry invariance",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Property::MonotonicityInVarieties => "varieties",
            Property::Twinning => "twinning",
            Property::MonotonicityInDistance => "mono-dist",
            Property::StrictMonotonicityInDistance => "strict-dist",
            Property::Submodularity => "submodular",
            Property::IsometryInvariance => "isometry",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The three equivalent forms of submodularity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Characterization {
    /// f(Y+x) - f(Y) >= f(Z+x) - f(Z) for Y ⊆ Z, x ∉ Z.
    NestedGain,
    /// f(T1) + f(T2) >= f(T1 ∪ T2) + f(T1 ∩ T2).
    Lattice,
    /// f(Y+x1) + f(Y+x2) >= f(Y+x1+x2) + f(Y) for distinct x1, x2 ∉ Y.
    TwoExtension,
}

impl Characterization {
    pub const ALL: [Characterization; 3] = [
        Characterization::NestedGain,
        Characterization::Lattice,
        Characterization::TwoExtension,
    ];

    pub fn number(self) -> u8 {
        match self {
            Characterization::NestedGain => 1,
            Characterization::Lattice => 2,
            Characterization::TwoExtension => 3,
        }
    }
}

impl TryFrom<u8> for Characterization {
    type Error = Error;

    fn try_from(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Characterization::NestedGain),
            2 => Ok(Characterization::Lattice),
            3 => Ok(Characterization::TwoExtension),
            _ => Err(Error::invalid(format!("characterization must be 1, 2 or 3, got {k}"))),
        }
    }
}

/// An evaluated subset.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub subset: Vec<usize>,
    pub value: f64,
}

/// Expected relation of `after` to `before`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Relation {
    Greater { margin: f64 },
    AtLeast { tolerance: f64 },
    Equal { tolerance: f64 },
}

impl Relation {
    pub fn holds(self, before: f64, after: f64) -> bool {
        match self {
            Relation::Greater { margin } => after > before + margin,
            Relation::AtLeast { tolerance } => after >= before - tolerance,
            Relation::Equal { tolerance } => (after - before).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Witness {
    /// `sum(lhs) >= sum(rhs)` was expected on the orientation-adjusted set
    /// function but fails by more than `tolerance`.
    Inequality {
        characterization: Characterization,
        lhs: Vec<Term>,
        rhs: Vec<Term>,
        tolerance: f64,
    },
    /// Two evaluations, possibly on different spaces, that break `relation`.
    Comparison {
        before_space: DistanceMatrix,
        before: Term,
        after_space: DistanceMatrix,
        after: Term,
        relation: Relation,
        adjusted: bool,
    },
}

impl Witness {
    /// Re-evaluates every term from scratch and returns `true` if the
    /// violation is confirmed. `dm` is the space of an `Inequality` witness;
    /// `Comparison` witnesses carry their own spaces.
    pub fn recheck(&self, ind: &Indicator, dm: &DistanceMatrix) -> Result<bool> {
        match self {
            Witness::Inequality {
                lhs, rhs, tolerance, ..
            } => {
                let sum = |terms: &[Term]| -> Result<Option<f64>> {
                    let mut total = 0.0;
                    for t in terms {
                        match set_value(ind, dm, &t.subset)? {
                            Some(v) => total += v,
                            None => return Ok(None),
                        }
                    }
                    Ok(Some(total))
                };
                Ok(match (sum(lhs)?, sum(rhs)?) {
                    (Some(l), Some(r)) => l < r - tolerance,
                    _ => false,
                })
            }
            Witness::Comparison {
                before_space,
                before,
                after_space,
                after,
                relation,
                adjusted,
            } => {
                let eval = |space: &DistanceMatrix, t: &Term| -> Result<f64> {
                    let v = evaluate(ind, space, &t.subset)?;
                    Ok(if *adjusted { ind.adjusted(v) } else { v })
                };
                Ok(!relation.holds(eval(before_space, before)?, eval(after_space, after)?))
            }
        }
    }

    /// One-line summary of the violated relation.
    pub fn describe(&self) -> String {
        let fmt_terms = |terms: &[Term]| {
            terms
                .iter()
                .map(|t| format!("f{:?}={:.6}", t.subset, t.value))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        match self {
            Witness::Inequality {
                characterization,
                lhs,
                rhs,
                ..
            } => format!(
                "characterization {}: {} < {}",
                characterization.number(),
                fmt_terms(lhs),
                fmt_terms(rhs)
            ),
            Witness::Comparison {
                before,
                after,
                relation,
                ..
            } => {
                let op = match relation {
                    Relation::Greater { .. } => "expected >",
                    Relation::AtLeast { .. } => "expected >=",
                    Relation::Equal { .. } => "expected =",
                };
                format!(
                    "after D{:?}={:.9} {op} before D{:?}={:.9}",
                    after.subset, after.value, before.subset, before.value
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Holds,
    Fails(Witness),
    /// A required value is undefined (Solow-Polasky without a weighting).
    Inconclusive {
        subset: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyVerdict {
    pub property: Property,
    pub outcome: Outcome,
}

impl PropertyVerdict {
    fn new(property: Property, outcome: Outcome) -> Self {
        PropertyVerdict { property, outcome }
    }

    pub fn holds(&self) -> bool {
        matches!(self.outcome, Outcome::Holds)
    }

    pub fn is_inconclusive(&self) -> bool {
        matches!(self.outcome, Outcome::Inconclusive { .. })
    }

    pub fn witness(&self) -> Option<&Witness> {
        match &self.outcome {
            Outcome::Fails(w) => Some(w),
            _ => None,
        }
    }
}

/// Orientation-adjusted set function used by the submodularity checks.
///
/// `Ok(None)` marks subsets where the indicator has no value by
/// construction (Max-Min on fewer than two distinct points); terms touching
/// such subsets are skipped. The empty set and singletons score 0 for the
/// other indicators. An undefined Solow-Polasky value is an error.
pub fn set_value(ind: &Indicator, dm: &DistanceMatrix, subset: &[usize]) -> Result<Option<f64>> {
    if subset.len() < ind.min_size() {
        return Ok(match ind {
            Indicator::MaxMin => None,
            _ => Some(0.0),
        });
    }
    match evaluate(ind, dm, subset) {
        Ok(v) => Ok(Some(ind.adjusted(v))),
        Err(Error::Undefined { .. }) if *ind == Indicator::MaxMin => Ok(None),
        Err(e) => Err(e),
    }
}

fn mask_to_subset(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|i| mask >> i & 1 == 1).collect()
}

/// Set-function values for every subset, indexed by bitmask.
struct SetTable {
    values: Vec<Option<f64>>,
    tolerance: f64,
}

impl SetTable {
    fn build(ind: &Indicator, dm: &DistanceMatrix) -> Result<std::result::Result<Self, Vec<usize>>> {
        let n = dm.len();
        if n > SUBMODULARITY_CAP {
            return Err(Error::CapExceeded {
                what: "ground set size",
                size: n,
                cap: SUBMODULARITY_CAP,
            });
        }
        let results: Vec<Result<Option<f64>>> = (0..1usize << n)
            .into_par_iter()
            .map(|mask| set_value(ind, dm, &mask_to_subset(mask)))
            .collect();
        let mut values = Vec::with_capacity(results.len());
        for (mask, r) in results.into_iter().enumerate() {
            match r {
                Ok(v) => values.push(v),
                Err(Error::Undefined { .. }) => return Ok(Err(mask_to_subset(mask))),
                Err(e) => return Err(e),
            }
        }
        let scale = values.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
        Ok(Ok(SetTable {
            values,
            tolerance: SUBMODULARITY_TOLERANCE * scale,
        }))
    }

    /// Returns a witness if `lhs` masks sum to less than `rhs` masks.
    fn violation(&self, characterization: Characterization, lhs: [usize; 2], rhs: [usize; 2]) -> Option<Witness> {
        let get = |m: usize| self.values[m];
        let (l0, l1, r0, r1) = (get(lhs[0])?, get(lhs[1])?, get(rhs[0])?, get(rhs[1])?);
        if l0 + l1 < r0 + r1 - self.tolerance {
            let term = |m: usize, value: f64| Term {
                subset: mask_to_subset(m),
                value,
            };
            Some(Witness::Inequality {
                characterization,
                lhs: vec![term(lhs[0], l0), term(lhs[1], l1)],
                rhs: vec![term(rhs[0], r0), term(rhs[1], r1)],
                tolerance: self.tolerance,
            })
        } else {
            None
        }
    }
}

/// Exhaustively tests one characterization of submodularity of the
/// orientation-adjusted indicator (so `-E_s` for Riesz). The first violation
/// in bitmask order is returned as the witness.
pub fn check_submodularity(
    ind: &Indicator,
    dm: &DistanceMatrix,
    characterization: Characterization,
) -> Result<PropertyVerdict> {
    let table = match SetTable::build(ind, dm)? {
        Ok(t) => t,
        Err(subset) => {
            return Ok(PropertyVerdict::new(
                Property::Submodularity,
                Outcome::Inconclusive { subset },
            ))
        }
    };
    let n = dm.len();
    let full = (1usize << n) - 1;
    let witness = match characterization {
        Characterization::NestedGain => (0..=full).find_map(|z| {
            (0..=z).filter(|y| y & !z == 0).find_map(|y| {
                (0..n)
                    .map(|x| 1usize << x)
                    .filter(|bx| z & bx == 0)
                    .find_map(|bx| table.violation(characterization, [y | bx, z], [z | bx, y]))
            })
        }),
        Characterization::Lattice => (0..=full).find_map(|t1| {
            (t1 + 1..=full).find_map(|t2| table.violation(characterization, [t1, t2], [t1 | t2, t1 & t2]))
        }),
        Characterization::TwoExtension => (0..=full).find_map(|y| {
            (0..n).filter(|x1| y >> x1 & 1 == 0).find_map(|x1| {
                (x1 + 1..n).filter(|x2| y >> x2 & 1 == 0).find_map(|x2| {
                    let (b1, b2) = (1 << x1, 1 << x2);
                    table.violation(characterization, [y | b1, y | b2], [y | b1 | b2, y])
                })
            })
        }),
    };
    Ok(PropertyVerdict::new(
        Property::Submodularity,
        witness.map_or(Outcome::Holds, Outcome::Fails),
    ))
}

/// Tests `f(T1) + f(T2) >= f(T1 ∪ T2) + f(T1 ∩ T2)` for one given pair.
pub fn check_submodularity_pair(
    ind: &Indicator,
    dm: &DistanceMatrix,
    t1: &[usize],
    t2: &[usize],
) -> Result<PropertyVerdict> {
    dm.check_indices(t1)?;
    dm.check_indices(t2)?;
    let mut union: Vec<usize> = t1.iter().chain(t2).copied().collect();
    union.sort_unstable();
    union.dedup();
    let mut inter: Vec<usize> = t1.iter().filter(|i| t2.contains(i)).copied().collect();
    inter.sort_unstable();
    inter.dedup();
    let sets = [t1.to_vec(), t2.to_vec(), union, inter];
    let mut values = [0.0; 4];
    for (v, s) in values.iter_mut().zip(&sets) {
        match set_value(ind, dm, s) {
            Ok(Some(x)) => *v = x,
            Ok(None) => return Ok(PropertyVerdict::new(Property::Submodularity, Outcome::Holds)),
            Err(Error::Undefined { subset, .. }) => {
                return Ok(PropertyVerdict::new(
                    Property::Submodularity,
                    Outcome::Inconclusive { subset },
                ))
            }
            Err(e) => return Err(e),
        }
    }
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let tolerance = SUBMODULARITY_TOLERANCE * scale;
    let outcome = if values[0] + values[1] < values[2] + values[3] - tolerance {
        let term = |k: usize| Term {
            subset: sets[k].clone(),
            value: values[k],
        };
        Outcome::Fails(Witness::Inequality {
            characterization: Characterization::Lattice,
            lhs: vec![term(0), term(1)],
            rhs: vec![term(2), term(3)],
            tolerance,
        })
    } else {
        Outcome::Holds
    };
    Ok(PropertyVerdict::new(Property::Submodularity, outcome))
}

/// `(f(Y+x) - f(Y)) - (f(Z+x) - f(Z))` on orientation-adjusted values.
/// Negative means the nested-gain form of submodularity fails at (Y, Z, x).
pub fn marginal_gain_difference(
    ind: &Indicator,
    dm: &DistanceMatrix,
    y: &[usize],
    z: &[usize],
    x: usize,
) -> Result<f64> {
    let with = |s: &[usize]| {
        let mut v = s.to_vec();
        v.push(x);
        v
    };
    let f = |s: &[usize]| -> Result<f64> {
        set_value(ind, dm, s)?.ok_or_else(|| Error::Undefined {
            indicator: ind.to_string(),
            subset: s.to_vec(),
        })
    };
    Ok((f(&with(y))? - f(y)?) - (f(&with(z))? - f(z)?))
}

/// Both sides of the Riesz modular-gap identity
/// `E(T1∪T2) + E(T1∩T2) - E(T1) - E(T2) = sum over cross pairs of d^-s`,
/// the right side taken over ordered pairs between `T1\T2` and `T2\T1`.
pub fn riesz_modular_gap(dm: &DistanceMatrix, t1: &[usize], t2: &[usize], s: f64) -> Result<(f64, f64)> {
    let ind = Indicator::riesz(s)?;
    dm.check_indices(t1)?;
    dm.check_indices(t2)?;
    let mut a: Vec<usize> = t1.to_vec();
    a.sort_unstable();
    a.dedup();
    let mut b: Vec<usize> = t2.to_vec();
    b.sort_unstable();
    b.dedup();
    let union: Vec<usize> = {
        let mut u: Vec<usize> = a.iter().chain(&b).copied().collect();
        u.sort_unstable();
        u.dedup();
        u
    };
    let inter: Vec<usize> = a.iter().filter(|i| b.contains(i)).copied().collect();
    let e = |set: &[usize]| -> Result<f64> { evaluate(&ind, dm, set) };
    // Grouped so nested pairs cancel exactly: one bracket is x - x, the
    // other either y - y or the negation of the first.
    let lhs = (e(&union)? - e(&b)?) + (e(&inter)? - e(&a)?);

    let only_a: Vec<usize> = a.iter().filter(|i| !b.contains(i)).copied().collect();
    let only_b: Vec<usize> = b.iter().filter(|i| !a.contains(i)).copied().collect();
    let mut rhs = 0.0;
    for &i in &only_a {
        for &j in &only_b {
            let d = dm.get(i, j);
            if !dm.is_zero(d) {
                rhs += 2.0 * d.powf(-s);
            }
        }
    }
    Ok((lhs, rhs))
}

fn margin_for(spaces: &[&DistanceMatrix], scale: f64) -> f64 {
    if spaces.iter().all(|dm| dm.provenance() == Provenance::Table) {
        0.0
    } else {
        STRICT_MARGIN * scale.abs().max(1.0)
    }
}

/// Evaluates, mapping an undefined value to `Err(subset)`.
fn eval_or_undefined(
    ind: &Indicator,
    dm: &DistanceMatrix,
    subset: &[usize],
) -> Result<std::result::Result<f64, Vec<usize>>> {
    match evaluate(ind, dm, subset) {
        Ok(v) => Ok(Ok(v)),
        Err(Error::Undefined { subset, .. }) => Ok(Err(subset)),
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn compare(
    property: Property,
    ind: &Indicator,
    before_space: &DistanceMatrix,
    before_set: &[usize],
    after_space: &DistanceMatrix,
    after_set: &[usize],
    relation: impl FnOnce(f64) -> Relation,
    adjusted: bool,
) -> Result<PropertyVerdict> {
    let mut values = [0.0; 2];
    for (v, (space, set)) in values
        .iter_mut()
        .zip([(before_space, before_set), (after_space, after_set)])
    {
        match eval_or_undefined(ind, space, set)? {
            Ok(x) => *v = if adjusted { ind.adjusted(x) } else { x },
            Err(subset) => return Ok(PropertyVerdict::new(property, Outcome::Inconclusive { subset })),
        }
    }
    let [before, after] = values;
    let relation = relation(before);
    let outcome = if relation.holds(before, after) {
        Outcome::Holds
    } else {
        Outcome::Fails(Witness::Comparison {
            before_space: before_space.clone(),
            before: Term {
                subset: before_set.to_vec(),
                value: before,
            },
            after_space: after_space.clone(),
            after: Term {
                subset: after_set.to_vec(),
                value: after,
            },
            relation,
            adjusted,
        })
    };
    Ok(PropertyVerdict::new(property, outcome))
}

fn require_set(dm: &DistanceMatrix, x: &[usize]) -> Result<Vec<usize>> {
    dm.check_indices(x)?;
    let mut v = x.to_vec();
    v.sort_unstable();
    if v.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("subset contains repeated indices"));
    }
    Ok(v)
}

/// Appends an exact duplicate of `dup_of` and tests `D(X + dup) = D(X)`.
pub fn check_twinning(ind: &Indicator, dm: &DistanceMatrix, x: &[usize], dup_of: usize) -> Result<PropertyVerdict> {
    let x = require_set(dm, x)?;
    if !x.contains(&dup_of) {
        return Err(Error::invalid(format!(
            "duplicated point {dup_of} is not in the subset"
        )));
    }
    let ext = dm.with_duplicate(dup_of)?;
    let mut with_dup = x.clone();
    with_dup.push(dm.len());
    let tolerance = match ind {
        Indicator::MaxMin => 0.0,
        _ => EQUALITY_TOLERANCE,
    };
    compare(
        Property::Twinning,
        ind,
        &ext,
        &x,
        &ext,
        &with_dup,
        |_| Relation::Equal { tolerance },
        false,
    )
}

/// Appends a point with distances `b_row` to every existing point and tests
/// that the raw indicator value strictly increases on `X + b`.
pub fn check_monotonicity_in_varieties(
    ind: &Indicator,
    dm: &DistanceMatrix,
    x: &[usize],
    b_row: &[f64],
) -> Result<PropertyVerdict> {
    let x = require_set(dm, x)?;
    if b_row.len() != dm.len() {
        return Err(Error::invalid(format!(
            "new point has {} distances, expected {}",
            b_row.len(),
            dm.len()
        )));
    }
    if x.iter().any(|&i| !(b_row[i] > 0.0)) {
        return Err(Error::invalid(
            "new point must be separated from every member of the subset",
        ));
    }
    let ext = dm.with_point(b_row)?;
    let mut with_b = x.clone();
    with_b.push(dm.len());
    compare(
        Property::MonotonicityInVarieties,
        ind,
        &ext,
        &x,
        &ext,
        &with_b,
        |before| Relation::Greater {
            margin: margin_for(&[&ext], before),
        },
        false,
    )
}

/// Tests that pulling points apart (entrywise larger distances) does not
/// decrease the orientation-adjusted diversity of the whole set, or strictly
/// increases it when `strict`.
pub fn check_monotonicity_in_distance(
    ind: &Indicator,
    before: &DistanceMatrix,
    after: &DistanceMatrix,
    strict: bool,
) -> Result<PropertyVerdict> {
    let n = before.len();
    if after.len() != n {
        return Err(Error::invalid(format!("spaces differ in size: {n} vs {}", after.len())));
    }
    let mut grew = false;
    for i in 0..n {
        for j in 0..n {
            let (b, a) = (before.get(i, j), after.get(i, j));
            if a < b {
                return Err(Error::invalid(format!(
                    "d({i},{j}) shrinks from {b} to {a}; distances must not decrease"
                )));
            }
            grew |= a > b;
        }
    }
    if strict && !grew {
        return Err(Error::invalid("strict check needs at least one distance to grow"));
    }
    let all = before.all_indices();
    let property = if strict {
        Property::StrictMonotonicityInDistance
    } else {
        Property::MonotonicityInDistance
    };
    compare(
        property,
        ind,
        before,
        &all,
        after,
        &all,
        |b| {
            let margin = margin_for(&[before, after], b);
            if strict {
                Relation::Greater { margin }
            } else {
                Relation::AtLeast { tolerance: margin }
            }
        },
        true,
    )
}

/// Tests `|D(points) - D(motion(points))| < 1e-9` under the Euclidean metric.
pub fn check_isometry_invariance(
    ind: &Indicator,
    points: &[Vec<f64>],
    motion: &RigidMotion,
) -> Result<PropertyVerdict> {
    let before = DistanceMatrix::from_points(points, Norm::L2)?;
    let after = DistanceMatrix::from_points(&motion.apply(points)?, Norm::L2)?;
    let all = before.all_indices();
    compare(
        Property::IsometryInvariance,
        ind,
        &before,
        &all,
        &after,
        &all,
        |_| Relation::Equal {
            tolerance: EQUALITY_TOLERANCE,
        },
        false,
    )
}

/// The four planar points of the Solow-Polasky submodularity example,
/// in the order a, b, c, d.
pub fn sp_example_points() -> Vec<Vec<f64>> {
    vec![vec![-1.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]]
}

/// Printed marginal-gain difference of the four-point Solow-Polasky example.
pub const SP_EXAMPLE_PRINTED: f64 = -0.0144346;

/// `(SP(abd) - SP(ab)) - (SP(abcd) - SP(abc))` on the example points.
pub fn sp_example_gap(theta: f64) -> Result<f64> {
    let dm = DistanceMatrix::from_points(&sp_example_points(), Norm::L2)?;
    marginal_gain_difference(&Indicator::solow_polasky(theta)?, &dm, &[0, 1], &[0, 1, 2], 3)
}

/// Outcome of the search for the decay parameter behind the printed value.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaScan {
    pub grid: Vec<(f64, f64)>,
    /// Gap at the natural candidate θ = 1.
    pub gap_at_one: f64,
    /// Grid point whose gap is closest to the printed (signed) value.
    pub closest_theta: f64,
    pub closest_gap: f64,
    /// Values of θ where |gap| equals |printed|, located by bisection.
    pub magnitude_matches: Vec<f64>,
    /// Whether any grid point produced a negative gap.
    pub any_negative: bool,
}

/// Scans θ over `[lo, hi]` with `steps` intervals.
pub fn scan_sp_example_theta(lo: f64, hi: f64, steps: usize) -> Result<ThetaScan> {
    if !(lo > 0.0 && hi > lo && steps > 0) {
        return Err(Error::invalid("need 0 < lo < hi and steps > 0"));
    }
    let grid = (0..=steps)
        .map(|k| {
            let theta = lo + (hi - lo) * k as f64 / steps as f64;
            sp_example_gap(theta).map(|g| (theta, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let target = SP_EXAMPLE_PRINTED.abs();
    let excess = |theta: f64| sp_example_gap(theta).map(|g| g.abs() - target);
    let mut magnitude_matches = Vec::new();
    for w in grid.windows(2) {
        let (mut a, mut b) = (w[0].0, w[1].0);
        let (fa, fb) = (w[0].1.abs() - target, w[1].1.abs() - target);
        if fa == 0.0 {
            magnitude_matches.push(a);
            continue;
        }
        if fa * fb >= 0.0 {
            continue;
        }
        let mut fa = fa;
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let fm = excess(m)?;
            if fm * fa <= 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        magnitude_matches.push(0.5 * (a + b));
    }
    let &(closest_theta, closest_gap) = grid
        .iter()
        .min_by(|x, y| {
            (x.1 - SP_EXAMPLE_PRINTED)
                .abs()
                .total_cmp(&(y.1 - SP_EXAMPLE_PRINTED).abs())
        })
        .expect("grid is non-empty");
    Ok(ThetaScan {
        any_negative: grid.iter().any(|&(_, g)| g < 0.0),
        gap_at_one: sp_example_gap(1.0)?,
        grid,
        closest_theta,
        closest_gap,
        magnitude_matches,
    })
}

/// A named space in the standard battery. `points` is set for Euclidean
/// instances so isometries can be applied.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub space: DistanceMatrix,
    pub points: Option<Vec<Vec<f64>>>,
}

/// A before/after pair in which no distance shrinks.
#[derive(Debug, Clone)]
pub struct Deformation {
    pub name: String,
    pub before: DistanceMatrix,
    pub after: DistanceMatrix,
}

/// Instances the property table is computed on.
#[derive(Debug, Clone)]
pub struct Battery {
    pub instances: Vec<Instance>,
    pub deformations: Vec<Deformation>,
    pub motions: Vec<RigidMotion>,
}

const POINT_FIXTURES: [(&str, &str); 8] = [
    ("line-a", include_str!("../fixtures/line_a.csv")),
    ("line-b", include_str!("../fixtures/line_b.csv")),
    ("line-c", include_str!("../fixtures/line_c.csv")),
    ("sp-example", include_str!("../fixtures/sp_example.csv")),
    ("unit-square", include_str!("../fixtures/unit_square.csv")),
    ("random-1", include_str!("../fixtures/random_euclid_1.csv")),
    ("random-2", include_str!("../fixtures/random_euclid_2.csv")),
    ("random-3", include_str!("../fixtures/random_euclid_3.csv")),
];
const MATRIX_FIXTURES: [(&str, &str); 1] = [("two-columns", include_str!("../fixtures/two_columns.csv"))];
const GRAPH_FIXTURES: [(&str, &str); 2] = [
    ("c5", include_str!("../fixtures/c5.graph")),
    ("random6", include_str!("../fixtures/random6.graph")),
];

/// Seed for the random rigid motions of the battery.
pub const BATTERY_SEED: u64 = 7;

impl Battery {
    pub fn standard() -> Result<Self> {
        let mut instances = Vec::new();
        for (name, text) in POINT_FIXTURES {
            let points = parse_points(Cursor::new(text))?;
            instances.push(Instance {
                name: name.into(),
                space: DistanceMatrix::from_points(&points, Norm::L2)?,
                points: Some(points),
            });
        }
        for (name, text) in MATRIX_FIXTURES {
            instances.push(Instance {
                name: name.into(),
                space: DistanceMatrix::parse_csv(Cursor::new(text))?,
                points: None,
            });
        }
        for (name, text) in GRAPH_FIXTURES {
            instances.push(Instance {
                name: name.into(),
                space: graph_metric(&Graph::parse(Cursor::new(text))?)?,
                points: None,
            });
        }

        let find = |name: &str| {
            instances
                .iter()
                .find(|i| i.name == name)
                .map(|i| i.space.clone())
                .expect("fixture present")
        };
        // In the drawn coordinates every distance of configuration B is at
        // most the matching one of A, with the two close pairs unchanged.
        let mut deformations = vec![Deformation {
            name: "line b -> a".into(),
            before: find("line-b"),
            after: find("line-a"),
        }];
        let c_stretched =
            DistanceMatrix::from_points(&[vec![0.0], vec![2.0 / 3.0], vec![4.0 / 3.0], vec![3.0]], Norm::L2)?;
        deformations.push(Deformation {
            name: "line c, last point moved out".into(),
            before: find("line-c"),
            after: c_stretched,
        });
        for inst in &instances {
            deformations.push(Deformation {
                name: format!("{} scaled x2", inst.name),
                before: inst.space.clone(),
                after: inst.space.map(|d| 2.0 * d),
            });
            deformations.push(Deformation {
                name: format!("{} shifted +1", inst.name),
                before: inst.space.clone(),
                after: inst.space.map(|d| d + 1.0),
            });
        }

        let mut rng = ChaCha8Rng::seed_from_u64(BATTERY_SEED);
        let mut motions = vec![
            RigidMotion::identity(2),
            RigidMotion::planar(std::f64::consts::FRAC_PI_2, false, [0.0, 0.0]),
            RigidMotion::planar(0.7, true, [3.0, -2.0]),
        ];
        motions.extend((0..3).map(|_| RigidMotion::random(2, &mut rng)));

        Ok(Battery {
            instances,
            deformations,
            motions,
        })
    }
}

/// Observed value of one table cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Yes,
    No,
    /// Every check was inconclusive.
    Unknown,
}

impl Mark {
    pub fn symbol(self) -> &'static str {
        match self {
            Mark::Yes => "Y",
            Mark::No => "N",
            Mark::Unknown => "?",
        }
    }

    fn from_bool(b: bool) -> Self {
        if b {
            Mark::Yes
        } else {
            Mark::No
        }
    }
}

#[derive(Debug, Clone)]
pub struct Cell {
    pub property: Property,
    pub expected: Mark,
    pub observed: Mark,
    pub checks: usize,
    pub inconclusive: usize,
    /// Instance and description of the first witness, if any.
    pub witness: Option<(String, Witness)>,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub indicator: Indicator,
    pub cells: Vec<Cell>,
}

/// A cell whose observation differs from the reference table.
#[derive(Debug, Clone, PartialEq)]
pub struct Discrepancy {
    pub indicator: String,
    pub property: Property,
    pub expected: Mark,
    pub observed: Mark,
    /// Cells for which no counterexample is known, so a missing witness is
    /// reported rather than counted as a failure.
    pub tolerated: bool,
}

#[derive(Debug, Clone)]
pub struct PropertyTable {
    pub rows: Vec<Row>,
}

/// Reference marks, in [`Property::COLUMNS`] order.
pub fn expected_row(ind: &Indicator) -> Option<[bool; 6]> {
    match ind {
        Indicator::RieszEnergy { .. } => Some([true, false, true, true, true, true]),
        Indicator::MaxMin => Some([false, true, true, false, false, true]),
        Indicator::SolowPolasky { .. } => Some([true, true, true, false, false, true]),
        Indicator::Sum => None,
    }
}

/// Columns that are reported but not asserted: no finite counterexample is
/// known for Solow-Polasky strict monotonicity in distance.
fn is_tolerated(ind: &Indicator, property: Property) -> bool {
    matches!(ind, Indicator::SolowPolasky { .. }) && property == Property::StrictMonotonicityInDistance
}

/// Table columns that are not checked: the uniformity of optimal sets is
/// an asymptotic statement, and subset-selection complexity is a
/// worst-case claim rather than a per-instance predicate.
pub const OUT_OF_SCOPE: &str =
    "uniformity and subset-selection complexity are not machine-checkable on finite instances";

struct Tally {
    checks: usize,
    inconclusive: usize,
    witness: Option<(String, Witness)>,
}

impl Tally {
    fn new() -> Self {
        Tally {
            checks: 0,
            inconclusive: 0,
            witness: None,
        }
    }

    fn add(&mut self, instance: &str, v: PropertyVerdict) {
        self.checks += 1;
        match v.outcome {
            Outcome::Holds => {}
            Outcome::Inconclusive { .. } => self.inconclusive += 1,
            Outcome::Fails(w) => {
                if self.witness.is_none() {
                    self.witness = Some((instance.to_string(), w));
                }
            }
        }
    }

    fn into_cell(self, property: Property, expected: Mark) -> Cell {
        let observed = if self.witness.is_some() {
            Mark::No
        } else if self.checks > 0 && self.inconclusive == self.checks {
            Mark::Unknown
        } else {
            Mark::Yes
        };
        Cell {
            property,
            expected,
            observed,
            checks: self.checks,
            inconclusive: self.inconclusive,
            witness: self.witness,
        }
    }
}

/// Runs every checker on the battery for one indicator.
pub fn property_row(ind: &Indicator, battery: &Battery) -> Result<Row> {
    let expected = expected_row(ind);
    let mut cells = Vec::with_capacity(Property::COLUMNS.len());
    for (k, &property) in Property::COLUMNS.iter().enumerate() {
        let mut tally = Tally::new();
        match property {
            Property::MonotonicityInVarieties => {
                for inst in &battery.instances {
                    let n = inst.space.len();
                    for b in 0..n {
                        let x: Vec<usize> = (0..n).filter(|&i| i != b).collect();
                        let row = inst.space.row(b).to_vec();
                        tally.add(&inst.name, check_monotonicity_in_varieties(ind, &inst.space, &x, &row)?);
                    }
                }
            }
            Property::Twinning => {
                for inst in &battery.instances {
                    let all = inst.space.all_indices();
                    for &d in &all {
                        tally.add(&inst.name, check_twinning(ind, &inst.space, &all, d)?);
                    }
                }
            }
            Property::MonotonicityInDistance | Property::StrictMonotonicityInDistance => {
                let strict = property == Property::StrictMonotonicityInDistance;
                for def in &battery.deformations {
                    tally.add(
                        &def.name,
                        check_monotonicity_in_distance(ind, &def.before, &def.after, strict)?,
                    );
                }
            }
            Property::Submodularity => {
                for inst in battery.instances.iter().filter(|i| i.space.len() <= SUBMODULARITY_CAP) {
                    tally.add(
                        &inst.name,
                        check_submodularity(ind, &inst.space, Characterization::Lattice)?,
                    );
                }
            }
            Property::IsometryInvariance => {
                for inst in &battery.instances {
                    if let Some(points) = &inst.points {
                        for m in &battery.motions {
                            tally.add(&inst.name, check_isometry_invariance(ind, points, m)?);
                        }
                    }
                }
            }
        }
        let exp = expected.map_or(Mark::Unknown, |row| Mark::from_bool(row[k]));
        cells.push(tally.into_cell(property, exp));
    }
    Ok(Row { indicator: *ind, cells })
}

/// Recomputes the property table for Riesz energy, Max-Min and Solow-Polasky.
pub fn regenerate_property_table(s: f64, theta: f64) -> Result<PropertyTable> {
    let battery = Battery::standard()?;
    let indicators = [
        Indicator::riesz(s)?,
        Indicator::MaxMin,
        Indicator::solow_polasky(theta)?,
    ];
    let rows = indicators
        .iter()
        .map(|ind| property_row(ind, &battery))
        .collect::<Result<Vec<_>>>()?;
    Ok(PropertyTable { rows })
}

impl PropertyTable {
    pub fn discrepancies(&self) -> Vec<Discrepancy> {
        self.rows
            .iter()
            .flat_map(|row| {
                row.cells
                    .iter()
                    .filter(|c| c.expected != Mark::Unknown && c.observed != c.expected)
                    .map(|c| Discrepancy {
                        indicator: row.indicator.short_name().to_string(),
                        property: c.property,
                        expected: c.expected,
                        observed: c.observed,
                        tolerated: is_tolerated(&row.indicator, c.property),
                    })
            })
            .collect()
    }

    /// `true` if every cell matches the reference or is a tolerated gap.
    pub fn agrees(&self) -> bool {
        self.discrepancies().iter().all(|d| d.tolerated)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("indicator");
        for p in Property::COLUMNS {
            out.push(',');
            out.push_str(p.short_name());
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(row.indicator.short_name());
            for c in &row.cells {
                out.push(',');
                out.push_str(c.observed.symbol());
            }
            out.push('\n');
        }
        out
    }

    /// Aligned text: observed marks, with the reference mark in brackets
    /// where they differ, followed by witnesses and discrepancies.
    pub fn to_text(&self) -> String {
        let name_w = self
            .rows
            .iter()
            .map(|r| r.indicator.to_string().len())
            .max()
            .unwrap_or(9)
            .max(9);
        let widths: Vec<usize> = Property::COLUMNS.iter().map(|p| p.short_name().len().max(6)).collect();
        let mut out = format!("{:name_w$}", "indicator");
        for (p, w) in Property::COLUMNS.iter().zip(&widths) {
            out.push_str(&format!("  {:>w$}", p.short_name()));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!("{:name_w$}", row.indicator.to_string()));
            for (c, w) in row.cells.iter().zip(&widths) {
                let mark = if c.observed == c.expected || c.expected == Mark::Unknown {
                    c.observed.symbol().to_string()
                } else {
                    format!("{}[{}]", c.observed.symbol(), c.expected.symbol())
                };
                out.push_str(&format!("  {mark:>w$}"));
            }
            out.push('\n');
        }
        out.push('\n');
        for row in &self.rows {
            for c in &row.cells {
                if let Some((inst, w)) = &c.witness {
                    out.push_str(&format!(
                        "{} / {}: {} on {inst}\n",
                        row.indicator.short_name(),
                        c.property.short_name(),
                        w.describe()
                    ));
                }
            }
        }
        let discrepancies = self.discrepancies();
        if !discrepancies.is_empty() {
            out.push('\n');
            for d in &discrepancies {
                out.push_str(&format!(
                    "discrepancy: {} / {}: expected {}, observed {}{}\n",
                    d.indicator,
                    d.property,
                    d.expected.symbol(),
                    d.observed.symbol(),
                    if d.tolerated {
                        " (no counterexample found on the battery; reported, not failed)"
                    } else {
                        ""
                    }
                ));
            }
        }
        out.push_str(&format!("\nnot checked: {OUT_OF_SCOPE}\n"));
        out
    }
}
