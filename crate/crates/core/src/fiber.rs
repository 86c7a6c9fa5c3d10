//! Exact fiber enumeration and move-graph connectivity.
//!
//! This is the brute-force oracle behind the connectivity results: it lists
//! every table with a given sufficient statistic and checks whether a move
//! set links them all.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::movesets::{
    bivariate_lifted_moves, bivariate_logistic_config, bivariate_unit_moves, lawrence_lifting, poisson_moves,
    segre_markov_basis, segre_product, univariate_adjacent_moves, univariate_poisson_config, MoveSet,
};
use crate::tables::{try_step, CellIndex, Configuration, Count, Sign, SufficientStatistic, Table};

pub const DEFAULT_NODE_LIMIT: usize = 1_000_000;

/// All nonnegative tables sharing one sufficient statistic, sorted
/// lexicographically by counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fiber {
    statistic: SufficientStatistic,
    tables: Vec<Table>,
}

impl Fiber {
    pub fn statistic(&self) -> &SufficientStatistic {
        &self.statistic
    }

    pub fn tables(&self) -> &[Table] {
        &self.tables
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

pub fn enumerate_fiber(config: &Configuration, statistic: &SufficientStatistic) -> Result<Fiber> {
    enumerate_fiber_with(config, statistic, None, DEFAULT_NODE_LIMIT)
}

/// Depth-first enumeration over cells in canonical order. The total count
/// comes from the configuration's weight vector when present, otherwise
/// `total_bound` caps it.
pub fn enumerate_fiber_with(
    config: &Configuration,
    statistic: &SufficientStatistic,
    total_bound: Option<Count>,
    node_limit: usize,
) -> Result<Fiber> {
    let t = statistic.values();
    if t.len() != config.num_rows() {
        return Err(Error::Shape(format!(
            "statistic has {} entries, configuration has {} rows",
            t.len(),
            config.num_rows()
        )));
    }
    let (total, exact) = match (config.weight(), total_bound) {
        (Some(w), _) => (w.iter().zip(t).map(|(a, b)| a * b).sum::<Count>(), true),
        (None, Some(bound)) => (bound, false),
        (None, None) => {
            return Err(Error::Domain(
                "fiber search is unbounded: no weight vector and no total bound".into(),
            ))
        }
    };
    let mut search = Search {
        config,
        exact,
        node_limit,
        statistic,
        counts: vec![0; config.num_cells()],
        found: Vec::new(),
    };
    if total >= 0 && t.iter().all(|&v| v >= 0) {
        search.descend(0, t.to_vec(), total)?;
    }
    let axes = config.axes().to_vec();
    let tables = search
        .found
        .into_iter()
        .map(|counts| Table::new(axes.clone(), counts))
        .collect::<Result<_>>()?;
    Ok(Fiber {
        statistic: statistic.clone(),
        tables,
    })
}

struct Search<'a> {
    config: &'a Configuration,
    exact: bool,
    node_limit: usize,
    statistic: &'a SufficientStatistic,
    counts: Vec<Count>,
    found: Vec<Vec<Count>>,
}

impl Search<'_> {
    fn cell_cap(&self, cell: usize, residual: &[Count], budget: Count) -> Count {
        let mut cap = budget;
        for (r, row) in self.config.rows().iter().enumerate() {
            let a = row[cell];
            if a > 0 {
                cap = cap.min(residual[r] / a);
            }
        }
        cap
    }

    /// Can cells `from..` absorb `residual` exactly (necessary conditions only)?
    fn feasible(&self, from: usize, residual: &[Count], budget: Count) -> bool {
        let n = self.config.num_cells();
        if from == n {
            return residual.iter().all(|&r| r == 0) && (!self.exact || budget == 0);
        }
        let caps: Vec<Count> = (from..n).map(|c| self.cell_cap(c, residual, budget)).collect();
        if self.exact && caps.iter().sum::<Count>() < budget {
            return false;
        }
        for (r, row) in self.config.rows().iter().enumerate() {
            let reach: Count = row[from..].iter().zip(&caps).map(|(a, c)| a * c).sum();
            if reach < residual[r] {
                return false;
            }
            if self.exact {
                // every remaining unit contributes at least the row minimum
                let floor = row[from..].iter().copied().min().unwrap_or(0);
                if floor * budget > residual[r] {
                    return false;
                }
            }
        }
        true
    }

    fn descend(&mut self, cell: usize, residual: Vec<Count>, budget: Count) -> Result<()> {
        if cell == self.config.num_cells() {
            if residual.iter().all(|&r| r == 0) && (!self.exact || budget == 0) {
                if self.found.len() >= self.node_limit {
                    return Err(Error::Resource(format!(
                        "fiber of statistic {:?} exceeds {} tables",
                        self.statistic.values(),
                        self.node_limit
                    )));
                }
                self.found.push(self.counts.clone());
            }
            return Ok(());
        }
        let cap = self.cell_cap(cell, &residual, budget);
        for v in 0..=cap {
            let next: Vec<Count> = residual
                .iter()
                .zip(self.config.rows())
                .map(|(r, row)| r - row[cell] * v)
                .collect();
            if !self.feasible(cell + 1, &next, budget - v) {
                continue;
            }
            self.counts[cell] = v;
            self.descend(cell + 1, next, budget - v)?;
        }
        self.counts[cell] = 0;
        Ok(())
    }
}

/// Tables reached by breadth-first search from the first (lexicographically
/// smallest) table, using every move with both signs.
pub fn reachable(fiber: &Fiber, moves: &MoveSet) -> Vec<bool> {
    let n = fiber.len();
    let mut seen = vec![false; n];
    if n == 0 {
        return seen;
    }
    let index: HashMap<&[Count], usize> = fiber
        .tables()
        .iter()
        .enumerate()
        .map(|(i, t)| (t.counts(), i))
        .collect();
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut scratch = Vec::new();
    while let Some(i) = queue.pop_front() {
        for z in moves.moves() {
            for sign in [Sign::Plus, Sign::Minus] {
                scratch.clear();
                scratch.extend_from_slice(fiber.tables()[i].counts());
                if !matches!(try_step(&mut scratch, z, sign), Ok(true)) {
                    continue;
                }
                if let Some(&j) = index.get(scratch.as_slice()) {
                    if !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    seen
}

pub fn is_connected(fiber: &Fiber, moves: &MoveSet) -> bool {
    reachable(fiber, moves).into_iter().all(|s| s)
}

/// All nonnegative integer vectors `x ≤ bounds` mapped through `rows`,
/// deduplicated and sorted.
fn image_of_box(rows: &[Vec<Count>], bounds: &[Count]) -> BTreeSet<Vec<Count>> {
    let mut reached = BTreeSet::from([vec![0; rows.len()]]);
    for (cell, &bound) in bounds.iter().enumerate() {
        let mut next = BTreeSet::new();
        for s in &reached {
            for v in 0..=bound {
                next.insert(s.iter().zip(rows).map(|(a, row)| a + row[cell] * v).collect());
            }
        }
        reached = next;
    }
    reached
}

/// Statistics of `Λ(inner)` whose trial counts all lie in `1..=cap`, crossed
/// with every success-layer statistic the trials admit.
pub fn lifted_positive_statistics(inner: &Configuration, cap: Count) -> impl Iterator<Item = SufficientStatistic> {
    let cells = inner.num_cells();
    let rows = inner.rows().to_vec();
    let mut trials = if cap >= 1 { Some(vec![1; cells]) } else { None };
    std::iter::from_fn(move || {
        let current = trials.take()?;
        // odometer step
        let mut next = current.clone();
        let mut advanced = false;
        for slot in next.iter_mut().rev() {
            if *slot < cap {
                *slot += 1;
                advanced = true;
                break;
            }
            *slot = 1;
        }
        if advanced {
            trials = Some(next);
        }
        let top = image_of_box(&rows, &current);
        Some(top.into_iter().map(move |mut s| {
            s.extend_from_slice(&current);
            SufficientStatistic(s)
        }))
    })
    .flatten()
}

/// Positive-trials statistics of the bivariate logistic configuration.
pub fn positive_marginal_statistics(
    j_levels: usize,
    k_levels: usize,
    cap: Count,
) -> Result<impl Iterator<Item = SufficientStatistic>> {
    if cap < 1 {
        return Err(Error::Domain(format!("cap must be at least 1, got {cap}")));
    }
    let inner = crate::movesets::multiway_poisson_config(&[j_levels, k_levels])?;
    Ok(lifted_positive_statistics(&inner, cap))
}

/// Every statistic of a table with total count at most `max_total`.
pub fn bounded_total_statistics(config: &Configuration, max_total: Count) -> Vec<SufficientStatistic> {
    let mut reached: BTreeSet<(Count, Vec<Count>)> = BTreeSet::from([(0, vec![0; config.num_rows()])]);
    for cell in 0..config.num_cells() {
        let mut next = BTreeSet::new();
        for (total, s) in &reached {
            for v in 0..=(max_total - total) {
                let stat = s
                    .iter()
                    .zip(config.rows())
                    .map(|(a, row)| a + row[cell] * v)
                    .collect();
                next.insert((total + v, stat));
            }
        }
        reached = next;
    }
    reached
        .into_iter()
        .map(|(_, s)| SufficientStatistic(s))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Connectivity claims the oracle can check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    /// Poisson moves connect every fiber of univariate Poisson regression.
    Prop1,
    /// Adjacent lifted moves connect positive-trials fibers of univariate logistic regression.
    Thm1,
    /// The Segre basis connects every fiber of bivariate Poisson regression.
    Thm2,
    /// Bivariate lifted moves connect positive-trials fibers of bivariate logistic regression.
    Thm3,
    /// Unit-step bivariate moves on the same fibers; outcome is recorded, not assumed.
    ConjB02,
}

impl Theorem {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "prop1" => Theorem::Prop1,
            "thm1" => Theorem::Thm1,
            "thm2" => Theorem::Thm2,
            "thm3" => Theorem::Thm3,
            "conj-b02" => Theorem::ConjB02,
            _ => return None,
        })
    }
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::Prop1 => "prop1",
            Theorem::Thm1 => "thm1",
            Theorem::Thm2 => "thm2",
            Theorem::Thm3 => "thm3",
            Theorem::ConjB02 => "conj-b02",
        })
    }
}

/// A fiber the move set fails to connect.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub fiber: Fiber,
    pub reached: Vec<bool>,
}

impl Counterexample {
    /// Long CSV with the table number and whether BFS from table 1 reached it.
    pub fn to_csv(&self) -> String {
        let axes = self.fiber.tables().first().map(|t| t.axes().to_vec()).unwrap_or_default();
        let mut out = String::from("table,reached,");
        for a in 1..=axes.len() {
            let _ = write!(out, "axis{a},");
        }
        out.push_str("count\n");
        for (i, (t, r)) in self.fiber.tables().iter().zip(&self.reached).enumerate() {
            for (pos, &c) in t.counts().iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let _ = write!(out, "{},{},", i + 1, u8::from(*r));
                for x in CellIndex::from_position(&axes, pos).coords() {
                    let _ = write!(out, "{x},");
                }
                let _ = writeln!(out, "{c}");
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub theorem: Theorem,
    pub sizes: Vec<usize>,
    pub cap: Count,
    pub moves: usize,
    pub fibers_checked: usize,
    pub tables_checked: usize,
    pub largest_fiber: usize,
    pub disconnected_fibers: usize,
    pub first_counterexample: Option<Counterexample>,
}

impl VerificationReport {
    pub fn holds(&self) -> bool {
        self.disconnected_fibers == 0
    }
}

fn expect_sizes(theorem: Theorem, sizes: &[usize], n: usize) -> Result<()> {
    if sizes.len() != n {
        return Err(Error::Domain(format!(
            "{theorem} takes {n} size(s), got {}",
            sizes.len()
        )));
    }
    Ok(())
}

/// Enumerates the theorem's family of fibers at the given sizes and checks
/// each one with the theorem's move set. `cap` bounds the total count for
/// the Poisson statements and the trials per cell for the logistic ones.
pub fn verify_connectivity_theorem(
    theorem: Theorem,
    sizes: &[usize],
    cap: Count,
    node_limit: usize,
) -> Result<VerificationReport> {
    let (config, moves, statistics): (Configuration, MoveSet, Box<dyn Iterator<Item = SufficientStatistic>>) =
        match theorem {
            Theorem::Prop1 => {
                expect_sizes(theorem, sizes, 1)?;
                let a = univariate_poisson_config(sizes[0])?;
                let stats = bounded_total_statistics(&a, cap);
                (a, poisson_moves(sizes[0])?, Box::new(stats.into_iter()))
            }
            Theorem::Thm1 => {
                expect_sizes(theorem, sizes, 1)?;
                let a = univariate_poisson_config(sizes[0])?;
                let moves = univariate_adjacent_moves(sizes[0])?;
                let stats: Vec<_> = lifted_positive_statistics(&a, cap).collect();
                (lawrence_lifting(&a), moves, Box::new(stats.into_iter()))
            }
            Theorem::Thm2 => {
                expect_sizes(theorem, sizes, 2)?;
                let (j, k) = (sizes[0], sizes[1]);
                let ab = segre_product(&univariate_poisson_config(j)?, &univariate_poisson_config(k)?)?;
                let moves = segre_markov_basis(&poisson_moves(j)?, &poisson_moves(k)?, j, k)?;
                let stats = bounded_total_statistics(&ab, cap);
                (ab, moves, Box::new(stats.into_iter()))
            }
            Theorem::Thm3 | Theorem::ConjB02 => {
                expect_sizes(theorem, sizes, 2)?;
                let (j, k) = (sizes[0], sizes[1]);
                let moves = if theorem == Theorem::Thm3 {
                    bivariate_lifted_moves(j, k)?
                } else {
                    bivariate_unit_moves(j, k)?
                };
                let stats = positive_marginal_statistics(j, k, cap)?;
                (bivariate_logistic_config(j, k)?, moves, Box::new(stats))
            }
        };
    moves.validate(&config)?;
    let mut report = VerificationReport {
        theorem,
        sizes: sizes.to_vec(),
        cap,
        moves: moves.len(),
        fibers_checked: 0,
        tables_checked: 0,
        largest_fiber: 0,
        disconnected_fibers: 0,
        first_counterexample: None,
    };
    for stat in statistics {
        let fiber = enumerate_fiber_with(&config, &stat, Some(cap), node_limit)?;
        report.fibers_checked += 1;
        report.tables_checked += fiber.len();
        report.largest_fiber = report.largest_fiber.max(fiber.len());
        let reached = reachable(&fiber, &moves);
        if reached.iter().all(|&r| r) {
            continue;
        }
        report.disconnected_fibers += 1;
        if report.first_counterexample.is_none() {
            report.first_counterexample = Some(Counterexample { fiber, reached });
        }
    }
    Ok(report)
}
