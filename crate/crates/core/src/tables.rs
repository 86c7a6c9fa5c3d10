//! Integer-lattice primitives: configurations, tables, moves and
//! sufficient statistics.
//!
//! Cells of an `M`-way array with axis sizes `(n_1, ..., n_M)` are laid out
//! row-major with 1-based coordinates. For lifted (logistic) configurations
//! the response layer `i ∈ {1, 2}` is the outermost axis, so the success
//! layer occupies the first half of every table and move.

use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type Count = i64;

/// A 1-based coordinate tuple into a multiway array.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex(Vec<usize>);

impl CellIndex {
    pub fn new(coords: impl Into<Vec<usize>>) -> Self {
        CellIndex(coords.into())
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    /// Row-major position of this index, checking every coordinate against `axes`.
    pub fn position(&self, axes: &[usize]) -> Result<usize> {
        if self.0.len() != axes.len() {
            return Err(Error::Shape(format!(
                "index {:?} has {} coordinates, expected {}",
                self.0,
                self.0.len(),
                axes.len()
            )));
        }
        let mut pos = 0usize;
        for (&c, &n) in self.0.iter().zip(axes) {
            if c == 0 || c > n {
                return Err(Error::Shape(format!(
                    "coordinate {c} outside 1..={n} in index {:?}",
                    self.0
                )));
            }
            pos = pos * n + (c - 1);
        }
        Ok(pos)
    }

    /// Inverse of [`CellIndex::position`].
    pub fn from_position(axes: &[usize], mut pos: usize) -> Self {
        let mut coords = vec![0; axes.len()];
        for (slot, &n) in coords.iter_mut().zip(axes).rev() {
            *slot = pos % n + 1;
            pos /= n;
        }
        CellIndex(coords)
    }
}

pub(crate) fn cell_count(axes: &[usize]) -> usize {
    axes.iter().product()
}

/// Nonnegative integer matrix mapping cell counts to sufficient statistics.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    rows: Vec<Vec<Count>>,
    axes: Vec<usize>,
    weight: Option<Vec<Count>>,
}

impl Configuration {
    /// Builds a configuration from its rows. Every row must have one entry per
    /// cell of `axes`; a weight vector, if given, must satisfy
    /// `weight · column = 1` for every column.
    pub fn new(rows: Vec<Vec<Count>>, axes: Vec<usize>, weight: Option<Vec<Count>>) -> Result<Self> {
        if axes.is_empty() || axes.contains(&0) {
            return Err(Error::Domain(format!("invalid axis sizes {axes:?}")));
        }
        let cols = cell_count(&axes);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Shape(format!(
                    "row {r} has {} entries, expected {cols}",
                    row.len()
                )));
            }
            if row.iter().any(|&v| v < 0) {
                return Err(Error::Domain(format!("row {r} has a negative entry")));
            }
        }
        let config = Configuration { rows, axes, weight };
        if let Some(w) = &config.weight {
            if w.len() != config.rows.len() {
                return Err(Error::Shape(format!(
                    "weight has {} entries, expected {}",
                    w.len(),
                    config.rows.len()
                )));
            }
            for c in 0..cols {
                let dot: Count = config.rows.iter().zip(w).map(|(row, wi)| row[c] * wi).sum();
                if dot != 1 {
                    return Err(Error::Domain(format!(
                        "weight does not witness homogeneity at column {c} (w·a = {dot})"
                    )));
                }
            }
        }
        Ok(config)
    }

    pub fn rows(&self) -> &[Vec<Count>] {
        &self.rows
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn weight(&self) -> Option<&[Count]> {
        self.weight.as_deref()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_cells(&self) -> usize {
        cell_count(&self.axes)
    }

    pub fn entry(&self, row: usize, cell: usize) -> Count {
        self.rows[row][cell]
    }

    pub fn column(&self, cell: usize) -> Vec<Count> {
        self.rows.iter().map(|row| row[cell]).collect()
    }

    fn check_axes(&self, axes: &[usize], what: &str) -> Result<()> {
        if axes != self.axes.as_slice() {
            return Err(Error::Shape(format!(
                "{what} axes {axes:?} do not match configuration axes {:?}",
                self.axes
            )));
        }
        Ok(())
    }

    /// `A · v` with overflow checking, for any integer vector over the cells.
    pub(crate) fn apply(&self, v: &[Count]) -> Result<Vec<Count>> {
        self.rows
            .iter()
            .map(|row| {
                row.iter().zip(v).try_fold(0i64, |acc, (&a, &x)| {
                    a.checked_mul(x)
                        .and_then(|p| acc.checked_add(p))
                        .ok_or(Error::Overflow("sufficient statistic"))
                })
            })
            .collect()
    }
}

/// Nonnegative cell counts over a multiway index set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Table {
    axes: Vec<usize>,
    counts: Vec<Count>,
}

impl Table {
    pub fn new(axes: Vec<usize>, counts: Vec<Count>) -> Result<Self> {
        if counts.len() != cell_count(&axes) {
            return Err(Error::Shape(format!(
                "{} counts for axes {axes:?}",
                counts.len()
            )));
        }
        if let Some(pos) = counts.iter().position(|&c| c < 0) {
            return Err(Error::Domain(format!(
                "negative count at cell {:?}",
                CellIndex::from_position(&axes, pos).coords()
            )));
        }
        Ok(Table { axes, counts })
    }

    pub fn zeros(axes: Vec<usize>) -> Self {
        let n = cell_count(&axes);
        Table {
            axes,
            counts: vec![0; n],
        }
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn counts(&self) -> &[Count] {
        &self.counts
    }

    pub fn get(&self, index: &CellIndex) -> Result<Count> {
        Ok(self.counts[index.position(&self.axes)?])
    }

    pub fn total(&self) -> Count {
        self.counts.iter().sum()
    }

    /// Long CSV: header `axis1,...,axisM,count`, one row per nonzero cell.
    pub fn to_csv(&self) -> String {
        sparse_csv(&self.axes, "count", self.counts.iter().copied().enumerate())
    }

    pub fn from_csv(text: &str, axes: &[usize]) -> Result<Self> {
        let mut counts = vec![0; cell_count(axes)];
        for (pos, value) in parse_sparse_csv(text, axes, "count")? {
            counts[pos] = value;
        }
        Table::new(axes.to_vec(), counts)
    }
}

/// The sufficient statistic `A · x` of a table.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SufficientStatistic(pub Vec<Count>);

impl SufficientStatistic {
    pub fn values(&self) -> &[Count] {
        &self.0
    }
}

/// Integer vector over the cells, stored sparsely as `(position, delta)`
/// pairs sorted by position with no zero deltas.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Move {
    axes: Vec<usize>,
    entries: Vec<(usize, Count)>,
    degree: Count,
}

impl Move {
    /// Builds a move from `(position, delta)` pairs; repeated positions are
    /// merged and zero results dropped.
    pub fn from_entries(axes: Vec<usize>, entries: impl IntoIterator<Item = (usize, Count)>) -> Result<Self> {
        let cells = cell_count(&axes);
        let mut merged: Vec<(usize, Count)> = entries.into_iter().collect();
        if let Some(&(pos, _)) = merged.iter().find(|(pos, _)| *pos >= cells) {
            return Err(Error::Shape(format!("position {pos} outside {cells} cells")));
        }
        merged.sort_unstable_by_key(|&(pos, _)| pos);
        let mut out: Vec<(usize, Count)> = Vec::with_capacity(merged.len());
        for (pos, delta) in merged {
            match out.last_mut() {
                Some(last) if last.0 == pos => {
                    last.1 = last.1.checked_add(delta).ok_or(Error::Overflow("move entries"))?
                }
                _ => out.push((pos, delta)),
            }
        }
        out.retain(|&(_, d)| d != 0);
        let degree = out.iter().map(|&(_, d)| d.max(0)).sum();
        Ok(Move {
            axes,
            entries: out,
            degree,
        })
    }

    pub fn from_dense(axes: Vec<usize>, deltas: &[Count]) -> Result<Self> {
        if deltas.len() != cell_count(&axes) {
            return Err(Error::Shape(format!(
                "{} deltas for axes {axes:?}",
                deltas.len()
            )));
        }
        Move::from_entries(axes, deltas.iter().copied().enumerate())
    }

    pub fn zero(axes: Vec<usize>) -> Self {
        Move {
            axes,
            entries: Vec::new(),
            degree: 0,
        }
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn entries(&self) -> &[(usize, Count)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of the positive part.
    pub fn degree(&self) -> Count {
        self.degree
    }

    /// Sum of the negative part; equals [`Move::degree`] for validated moves.
    pub fn negative_degree(&self) -> Count {
        self.entries.iter().map(|&(_, d)| (-d).max(0)).sum()
    }

    pub fn delta_at(&self, pos: usize) -> Count {
        self.entries
            .binary_search_by_key(&pos, |&(p, _)| p)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    pub fn to_dense(&self) -> Vec<Count> {
        let mut v = vec![0; cell_count(&self.axes)];
        for &(pos, d) in &self.entries {
            v[pos] = d;
        }
        v
    }

    pub fn negated(&self) -> Move {
        Move {
            axes: self.axes.clone(),
            entries: self.entries.iter().map(|&(p, d)| (p, -d)).collect(),
            degree: self.negative_degree(),
        }
    }

    /// Representative of `{z, -z}` whose first nonzero cell is positive.
    pub fn canonical(&self) -> Move {
        match self.entries.first() {
            Some(&(_, d)) if d < 0 => self.negated(),
            _ => self.clone(),
        }
    }

    pub fn to_csv(&self) -> String {
        sparse_csv(&self.axes, "delta", self.entries.iter().copied())
    }

    pub fn from_csv(text: &str, axes: &[usize]) -> Result<Self> {
        Move::from_entries(axes.to_vec(), parse_sparse_csv(text, axes, "delta")?)
    }
}

/// Direction in which a stored (unsigned) move is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn factor(self) -> Count {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

pub fn sufficient_statistic(config: &Configuration, table: &Table) -> Result<SufficientStatistic> {
    config.check_axes(table.axes(), "table")?;
    Ok(SufficientStatistic(config.apply(table.counts())?))
}

/// True iff `A · z = 0`.
pub fn is_move(config: &Configuration, z: &Move) -> Result<bool> {
    config.check_axes(z.axes(), "move")?;
    for row in config.rows() {
        let mut acc: Count = 0;
        for &(pos, d) in z.entries() {
            acc = row[pos]
                .checked_mul(d)
                .and_then(|p| acc.checked_add(p))
                .ok_or(Error::Overflow("move image"))?;
        }
        if acc != 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `x + sign · z`, or `None` when a count would turn negative.
pub fn apply_move(x: &Table, z: &Move, sign: Sign) -> Result<Option<Table>> {
    if x.axes() != z.axes() {
        return Err(Error::Shape(format!(
            "table axes {:?} do not match move axes {:?}",
            x.axes(),
            z.axes()
        )));
    }
    let mut counts = x.counts().to_vec();
    if !try_step(&mut counts, z, sign)? {
        return Ok(None);
    }
    Ok(Some(Table {
        axes: x.axes.clone(),
        counts,
    }))
}

/// In-place variant of [`apply_move`]; leaves `counts` untouched on rejection.
pub(crate) fn try_step(counts: &mut [Count], z: &Move, sign: Sign) -> Result<bool> {
    let s = sign.factor();
    for &(pos, d) in z.entries() {
        let next = counts[pos]
            .checked_add(s * d)
            .ok_or(Error::Overflow("move application"))?;
        if next < 0 {
            return Ok(false);
        }
    }
    for &(pos, d) in z.entries() {
        counts[pos] += s * d;
    }
    Ok(true)
}

fn sparse_csv(axes: &[usize], value_col: &str, cells: impl Iterator<Item = (usize, Count)>) -> String {
    let mut out = String::new();
    for a in 1..=axes.len() {
        let _ = write!(out, "axis{a},");
    }
    let _ = writeln!(out, "{value_col}");
    for (pos, v) in cells.filter(|&(_, v)| v != 0) {
        for c in CellIndex::from_position(axes, pos).coords() {
            let _ = write!(out, "{c},");
        }
        let _ = writeln!(out, "{v}");
    }
    out
}

fn parse_sparse_csv(text: &str, axes: &[usize], value_col: &str) -> Result<Vec<(usize, Count)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(1, 1, e.to_string()))?
        .clone();
    let expected: Vec<String> = (1..=axes.len())
        .map(|a| format!("axis{a}"))
        .chain(std::iter::once(value_col.to_string()))
        .collect();
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::parse(1, 1, format!("expected header {}", expected.join(","))));
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(line, 1, e.to_string()))?;
        let mut fields = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let v: Count = field
                .parse()
                .map_err(|_| Error::parse(line, col + 1, format!("not an integer: {field:?}")))?;
            fields.push(v);
        }
        let (value, coords) = fields.split_last().expect("header length checked");
        let coords: Option<Vec<usize>> = coords.iter().map(|&c| usize::try_from(c).ok()).collect();
        let index = CellIndex::new(coords.ok_or_else(|| Error::parse(line, 1, "negative coordinate"))?);
        let pos = index
            .position(axes)
            .map_err(|e| Error::parse(line, 1, e.to_string()))?;
        out.push((pos, *value));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson3() -> Configuration {
        Configuration::new(vec![vec![1, 1, 1], vec![1, 2, 3]], vec![3], Some(vec![1, 0])).unwrap()
    }

    fn lifted2() -> Configuration {
        Configuration::new(
            vec![
                vec![1, 1, 0, 0],
                vec![1, 2, 0, 0],
                vec![1, 0, 1, 0],
                vec![0, 1, 0, 1],
            ],
            vec![2, 2],
            Some(vec![0, 0, 1, 1]),
        )
        .unwrap()
    }

    #[test]
    fn statistic_examples() {
        let a = poisson3();
        let zero = Table::zeros(vec![3]);
        assert_eq!(sufficient_statistic(&a, &zero).unwrap().0, vec![0, 0]);
        let x = Table::new(vec![3], vec![1, 0, 2]).unwrap();
        assert_eq!(sufficient_statistic(&a, &x).unwrap().0, vec![3, 7]);
        let y = Table::new(vec![2, 2], vec![1, 0, 0, 2]).unwrap();
        assert_eq!(sufficient_statistic(&lifted2(), &y).unwrap().0, vec![1, 1, 1, 2]);
    }

    #[test]
    fn statistic_shape_error() {
        let x = Table::zeros(vec![4]);
        assert!(matches!(sufficient_statistic(&poisson3(), &x), Err(Error::Shape(_))));
    }

    #[test]
    fn statistic_overflow_is_an_error() {
        let a = poisson3();
        let x = Table::new(vec![3], vec![i64::MAX, 1, 0]).unwrap();
        assert!(matches!(sufficient_statistic(&a, &x), Err(Error::Overflow(_))));
    }

    #[test]
    fn is_move_examples() {
        let a = poisson3();
        assert!(is_move(&a, &Move::zero(vec![3])).unwrap());
        let z = Move::from_dense(vec![3], &[1, -2, 1]).unwrap();
        assert!(is_move(&a, &z).unwrap());
        let bad = Move::from_dense(vec![3], &[1, -1, 0]).unwrap();
        assert!(!is_move(&a, &bad).unwrap());
        assert_eq!(z.degree(), 2);
        assert_eq!(z.negative_degree(), 2);
    }

    #[test]
    fn apply_move_examples() {
        let z = Move::from_dense(vec![3], &[1, -2, 1]).unwrap();
        let x = Table::new(vec![3], vec![1, 0, 1]).unwrap();
        let y = apply_move(&x, &z.negated(), Sign::Plus).unwrap().unwrap();
        assert_eq!(y.counts(), &[0, 2, 0]);
        assert_eq!(apply_move(&y, &z, Sign::Minus).unwrap(), None);
        let same = apply_move(&x, &Move::zero(vec![3]), Sign::Plus).unwrap().unwrap();
        assert_eq!(same, x);
    }

    #[test]
    fn cell_positions_round_trip() {
        let axes = [2, 3, 4];
        for pos in 0..24 {
            let idx = CellIndex::from_position(&axes, pos);
            assert_eq!(idx.position(&axes).unwrap(), pos);
        }
        assert_eq!(CellIndex::new(vec![2, 1, 1]).position(&axes).unwrap(), 12);
        assert!(CellIndex::new(vec![0, 1, 1]).position(&axes).is_err());
        assert!(CellIndex::new(vec![1, 4, 1]).position(&axes).is_err());
    }

    #[test]
    fn configuration_rejects_bad_input() {
        assert!(Configuration::new(vec![vec![1, -1]], vec![2], None).is_err());
        assert!(Configuration::new(vec![vec![1, 1, 1]], vec![2], None).is_err());
        assert!(Configuration::new(vec![vec![1, 2]], vec![2], Some(vec![1])).is_err());
    }

    #[test]
    fn canonical_sign() {
        let z = Move::from_dense(vec![3], &[-1, 2, -1]).unwrap();
        assert_eq!(z.canonical().to_dense(), vec![1, -2, 1]);
        assert_eq!(z.canonical(), z.negated().canonical());
    }

    #[test]
    fn csv_formats() {
        let x = Table::new(vec![2, 2], vec![1, 0, 0, 2]).unwrap();
        assert_eq!(x.to_csv(), "axis1,axis2,count\n1,1,1\n2,2,2\n");
        assert_eq!(Table::from_csv(&x.to_csv(), &[2, 2]).unwrap(), x);
        let z = Move::from_dense(vec![3], &[1, -2, 1]).unwrap();
        assert_eq!(z.to_csv(), "axis1,delta\n1,1\n2,-2\n3,1\n");
        assert_eq!(Move::from_csv(&z.to_csv(), &[3]).unwrap(), z);
        assert!(Table::from_csv("axis1,count\n4,1\n", &[3]).is_err());
        assert!(Table::from_csv("a,count\n1,1\n", &[3]).is_err());
    }
}
