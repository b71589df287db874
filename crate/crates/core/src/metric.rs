//! Finite similarity spaces.
//!
//! A [`DistanceMatrix`] is the only input every indicator sees. Subsets of a
//! space are plain index slices into the matrix; nothing is ever copied to
//! form a subset.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};

/// Absolute slack on the triangle inequality.
pub const TRIANGLE_TOLERANCE: f64 = 1e-9;

/// Zero test used for matrices computed from coordinates.
pub const COMPUTED_ZERO_TOLERANCE: f64 = 1e-12;

/// Where the entries of a matrix came from. Table entries are compared
/// exactly, computed entries with [`COMPUTED_ZERO_TOLERANCE`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Table,
    Computed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Similarity,
    Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
        match self {
            Norm::L1 => diffs.sum(),
            Norm::L2 => diffs.map(|d| d * d).sum::<f64>().sqrt(),
            Norm::Linf => diffs.fold(0.0, f64::max),
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" => Ok(Norm::Linf),
            other => Err(Error::invalid(format!("unknown norm '{other}'"))),
        }
    }
}

/// Dense symmetric distance matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    entries: Vec<f64>,
    provenance: Provenance,
}

impl DistanceMatrix {
    /// Builds a matrix from rows, checking only that it is square and finite.
    /// Use [`validate`] (or [`DistanceMatrix::similarity`]) to check the axioms.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} contains non-finite entry {v}")));
            }
            entries.extend_from_slice(row);
        }
        Ok(DistanceMatrix {
            n,
            entries,
            provenance: Provenance::Table,
        })
    }

    /// Like [`DistanceMatrix::from_rows`] but rejects anything that is not a
    /// valid similarity space.
    pub fn similarity(rows: &[Vec<f64>]) -> Result<Self> {
        let dm = Self::from_rows(rows)?;
        let report = validate(&dm, SpaceKind::Similarity);
        if let Some(v) = report.violations.first() {
            return Err(Error::invalid(format!("not a similarity space: {v}")));
        }
        Ok(dm)
    }

    pub fn from_points(points: &[Vec<f64>], norm: Norm) -> Result<Self> {
        let dim = points.first().map_or(1, Vec::len);
        if dim == 0 {
            return Err(Error::invalid("points must have dimension >= 1"));
        }
        for (index, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    index,
                    expected: dim,
                    found: p.len(),
                });
            }
        }
        let n = points.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = norm.distance(&points[i], &points[j]);
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        Ok(DistanceMatrix {
            n,
            entries,
            provenance: Provenance::Computed,
        })
    }

    /// Euclidean distances between planar points.
    pub fn from_planar(points: &[[f64; 2]]) -> Self {
        let n = points.len();
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (points[i][0] - points[j][0]).hypot(points[i][1] - points[j][1]);
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        DistanceMatrix {
            n,
            entries,
            provenance: Provenance::Computed,
        }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Largest value still treated as a zero distance.
    pub fn zero_tolerance(&self) -> f64 {
        match self.provenance {
            Provenance::Table => 0.0,
            Provenance::Computed => COMPUTED_ZERO_TOLERANCE,
        }
    }

    pub fn is_zero(&self, d: f64) -> bool {
        d <= self.zero_tolerance()
    }

    pub fn all_indices(&self) -> Vec<usize> {
        (0..self.n).collect()
    }

    pub fn check_indices(&self, subset: &[usize]) -> Result<()> {
        match subset.iter().find(|&&i| i >= self.n) {
            Some(&index) => Err(Error::IndexOutOfRange { index, len: self.n }),
            None => Ok(()),
        }
    }

    /// Appends a point given its distances to every existing point.
    pub fn with_point(&self, distances: &[f64]) -> Result<Self> {
        if distances.len() != self.n {
            return Err(Error::invalid(format!(
                "new point has {} distances, expected {}",
                distances.len(),
                self.n
            )));
        }
        if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::invalid("distances must be finite and non-negative"));
        }
        let m = self.n + 1;
        let mut entries = vec![0.0; m * m];
        for i in 0..self.n {
            entries[i * m..i * m + self.n].copy_from_slice(self.row(i));
            entries[i * m + self.n] = distances[i];
            entries[self.n * m + i] = distances[i];
        }
        Ok(DistanceMatrix {
            n: m,
            entries,
            provenance: self.provenance,
        })
    }

    /// Appends an exact duplicate of point `of`. The new point has index `len()`.
    pub fn with_duplicate(&self, of: usize) -> Result<Self> {
        self.check_indices(&[of])?;
        let mut row = self.row(of).to_vec();
        row[of] = 0.0;
        self.with_point(&row)
    }

    /// Entrywise map, keeping the diagonal at zero.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    out.entries[i * self.n + j] = f(self.get(i, j));
                }
            }
        }
        out
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::parse_csv(std::io::BufReader::new(file))
    }

    /// Parses header-less CSV rows and enforces the similarity-space axioms.
    pub fn parse_csv(reader: impl BufRead) -> Result<Self> {
        Self::similarity(&parse_csv_rows(reader)?)
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        for i in 0..self.n {
            let line: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Reads header-less numeric CSV rows, skipping blank lines.
pub fn parse_csv_rows(reader: impl BufRead) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| {
                t.trim().parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno + 1,
                    message: format!("'{}': {e}", t.trim()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Parses a point set, one point per line, all of the same dimension.
pub fn parse_points(reader: impl BufRead) -> Result<Vec<Vec<f64>>> {
    let rows = parse_csv_rows(reader)?;
    let dim = rows.first().map_or(0, Vec::len);
    for (index, p) in rows.iter().enumerate() {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                index,
                expected: dim,
                found: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("point {index} has a non-finite coordinate")));
        }
    }
    Ok(rows)
}

pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path)?;
    parse_points(std::io::BufReader::new(file))
}

/// One failed axiom. Indices are 0-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonZeroDiagonal {
        i: usize,
        value: f64,
    },
    Negative {
        i: usize,
        j: usize,
        value: f64,
    },
    Asymmetric {
        i: usize,
        j: usize,
    },
    /// Metric spaces need strictly positive off-diagonal distances.
    ZeroOffDiagonal {
        i: usize,
        j: usize,
    },
    /// `d(i, j) > d(i, k) + d(k, j)`.
    Triangle {
        i: usize,
        j: usize,
        k: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonZeroDiagonal { i, value } => write!(f, "d({i},{i}) = {value} != 0"),
            Violation::Negative { i, j, value } => write!(f, "d({i},{j}) = {value} < 0"),
            Violation::Asymmetric { i, j } => write!(f, "d({i},{j}) != d({j},{i})"),
            Violation::ZeroOffDiagonal { i, j } => write!(f, "d({i},{j}) = 0 for distinct points"),
            Violation::Triangle { i, j, k } => write!(f, "d({i},{j}) > d({i},{k}) + d({k},{j})"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate(dm: &DistanceMatrix, kind: SpaceKind) -> ValidationReport {
    let n = dm.len();
    let mut violations = Vec::new();
    for i in 0..n {
        let v = dm.get(i, i);
        if v != 0.0 {
            violations.push(Violation::NonZeroDiagonal { i, value: v });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let v = dm.get(i, j);
            if v < 0.0 {
                violations.push(Violation::Negative { i, j, value: v });
            }
            if i < j && v != dm.get(j, i) {
                violations.push(Violation::Asymmetric { i, j });
            }
            if kind == SpaceKind::Metric && i < j && dm.is_zero(v) {
                violations.push(Violation::ZeroOffDiagonal { i, j });
            }
        }
    }
    if kind == SpaceKind::Metric {
        for i in 0..n {
            for j in (i + 1)..n {
                for k in 0..n {
                    if k == i || k == j {
                        continue;
                    }
                    if dm.get(i, j) > dm.get(i, k) + dm.get(k, j) + TRIANGLE_TOLERANCE {
                        violations.push(Violation::Triangle { i, j, k });
                    }
                }
            }
        }
    }
    ValidationReport { violations }
}

/// `d(s, X) = min_{x in X} d(s, x)`.
pub fn dist_to_set(dm: &DistanceMatrix, s: usize, set: &[usize]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::invalid("distance to an empty set"));
    }
    dm.check_indices(&[s])?;
    dm.check_indices(set)?;
    Ok(set.iter().map(|&x| dm.get(s, x)).fold(f64::INFINITY, f64::min))
}

/// True iff some `y` in `set` is at distance zero from `x` and every member
/// of `set` is equidistant from `x` and `y`.
pub fn is_duplicate(dm: &DistanceMatrix, x: usize, set: &[usize]) -> Result<bool> {
    dm.check_indices(&[x])?;
    dm.check_indices(set)?;
    let tol = dm.zero_tolerance();
    Ok(set
        .iter()
        .any(|&y| dm.is_zero(dm.get(x, y)) && set.iter().all(|&z| (dm.get(x, z) - dm.get(y, z)).abs() <= tol)))
}

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                g.edges.insert((i, j));
            }
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Graph::new(n);
        for i in 0..n {
            g.add_edge(i, (i + 1) % n).expect("cycle edges are in range");
        }
        g
    }

    /// Erdős–Rényi graph: each pair is an edge with probability `p`.
    pub fn random<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut g = Graph::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen::<f64>() < p {
                    g.edges.insert((i, j));
                }
            }
        }
        g
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::invalid(format!("self-loop at vertex {i}")));
        }
        for v in [i, j] {
            if v >= self.n {
                return Err(Error::IndexOutOfRange { index: v, len: self.n });
            }
        }
        self.edges.insert((i.min(j), i.max(j)));
        Ok(())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(a, &i)| vertices[a + 1..].iter().all(|&j| self.has_edge(i, j)))
    }

    pub fn is_independent(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(a, &i)| vertices[a + 1..].iter().all(|&j| !self.has_edge(i, j)))
    }

    /// Reads `n m` followed by `m` lines `i j` (0-based).
    pub fn parse(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()));
        let parse_pair = |lineno: usize, line: &str| -> Result<(usize, usize)> {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
                _ => Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected two integers, got '{line}'"),
                }),
            }
        };
        let (lineno, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing 'n m' header".into(),
        })?;
        let (n, m) = parse_pair(lineno, &header?)?;
        let mut g = Graph::new(n);
        let mut seen = 0;
        for (lineno, line) in lines {
            let (i, j) = parse_pair(lineno, &line?)?;
            g.add_edge(i, j)?;
            seen += 1;
        }
        if seen != m {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {m} edges, found {seen}"),
            });
        }
        Ok(g)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::parse(std::io::BufReader::new(file))
    }

    pub fn write(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{} {}", self.n, self.edges.len())?;
        for (i, j) in self.edges() {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }
}

/// Distance 2 on edges, 1 on distinct non-adjacent pairs, 0 on the diagonal.
/// The result is always a metric since every entry lies in {1, 2}.
pub fn graph_metric(g: &Graph) -> Result<DistanceMatrix> {
    let n = g.vertex_count();
    if n < 2 {
        return Err(Error::invalid("graph metric needs at least 2 vertices"));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| match (i == j, g.has_edge(i, j)) {
                    (true, _) => 0.0,
                    (false, true) => 2.0,
                    (false, false) => 1.0,
                })
                .collect()
        })
        .collect();
    DistanceMatrix::from_rows(&rows)
}

/// Orthogonal map plus translation on `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    pub linear: DMatrix<f64>,
    pub translation: DVector<f64>,
}

impl RigidMotion {
    pub fn identity(dim: usize) -> Self {
        RigidMotion {
            linear: DMatrix::identity(dim, dim),
            translation: DVector::zeros(dim),
        }
    }

    /// Planar rotation by `angle`, optionally preceded by a reflection across the x-axis.
    pub fn planar(angle: f64, reflect: bool, shift: [f64; 2]) -> Self {
        let (s, c) = angle.sin_cos();
        let flip = if reflect { -1.0 } else { 1.0 };
        RigidMotion {
            linear: DMatrix::from_row_slice(2, 2, &[c, -s * flip, s, c * flip]),
            translation: DVector::from_column_slice(&shift),
        }
    }

    /// Random orthogonal matrix (QR of a Gaussian-ish matrix) and a random shift.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let a = DMatrix::from_fn(dim, dim, |_, _| rng.gen_range(-1.0..1.0));
        let q = a.qr().q();
        let translation = DVector::from_fn(dim, |_, _| rng.gen_range(-10.0..10.0));
        RigidMotion { linear: q, translation }
    }

    pub fn apply(&self, points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let dim = self.linear.nrows();
        points
            .iter()
            .enumerate()
            .map(|(index, p)| {
                if p.len() != dim {
                    return Err(Error::DimensionMismatch {
                        index,
                        expected: dim,
                        found: p.len(),
                    });
                }
                let v = &self.linear * DVector::from_column_slice(p) + &self.translation;
                Ok(v.iter().copied().collect())
            })
            .collect()
    }
}
