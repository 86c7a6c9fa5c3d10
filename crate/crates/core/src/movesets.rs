//! Configurations for Poisson and logistic regression on equally spaced
//! levels, together with the explicit move sets that connect their fibers.

use std::collections::HashSet;
use std::fmt;

use itertools::Itertools;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::tables::{cell_count, is_move, CellIndex, Configuration, Count, Move};

/// Which construction produced a [`MoveSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MoveSetSource {
    /// Minimum-fiber Markov basis of univariate Poisson regression.
    Poisson,
    /// The Poisson moves lifted to univariate logistic regression.
    LiftedPoisson,
    /// Lifted Poisson moves with unit gaps.
    UnivariateAdjacent,
    /// Basic moves plus distributed factor moves for a two-factor Segre product.
    Segre,
    /// The same construction over an arbitrary number of factors.
    MultiwaySegre,
    /// Lifted quadruple moves for bivariate logistic regression.
    BivariateLifted,
    /// Bivariate lifted moves whose common step lies in `{-1, 0, 1}²`.
    BivariateUnit,
    Custom,
}

impl fmt::Display for MoveSetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MoveSetSource::Poisson => "poisson",
            MoveSetSource::LiftedPoisson => "lifted-poisson",
            MoveSetSource::UnivariateAdjacent => "univariate-adjacent",
            MoveSetSource::Segre => "segre",
            MoveSetSource::MultiwaySegre => "multiway-segre",
            MoveSetSource::BivariateLifted => "bivariate-lifted",
            MoveSetSource::BivariateUnit => "bivariate-unit",
            MoveSetSource::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// A finite set of moves, each stored once in canonical sign (first nonzero
/// cell positive). Samplers apply every element with both signs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveSet {
    source: MoveSetSource,
    axes: Vec<usize>,
    moves: Vec<Move>,
}

impl MoveSet {
    /// Collects moves in first-seen order, dropping zero moves and
    /// duplicates up to sign.
    pub fn new(source: MoveSetSource, axes: Vec<usize>, moves: impl IntoIterator<Item = Move>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for z in moves {
            if z.axes() != axes.as_slice() {
                return Err(Error::Shape(format!(
                    "move axes {:?} differ from move set axes {axes:?}",
                    z.axes()
                )));
            }
            if z.is_zero() {
                continue;
            }
            let c = z.canonical();
            if seen.insert(c.clone()) {
                out.push(c);
            }
        }
        Ok(MoveSet {
            source,
            axes,
            moves: out,
        })
    }

    pub fn source(&self) -> MoveSetSource {
        self.source
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn contains(&self, z: &Move) -> bool {
        let c = z.canonical();
        self.moves.contains(&c)
    }

    /// Checks that every element lies in the kernel of `config`.
    pub fn validate(&self, config: &Configuration) -> Result<()> {
        for z in &self.moves {
            if !is_move(config, z)? {
                return Err(Error::Domain(format!(
                    "{} element {:?} is not in the kernel",
                    self.source,
                    z.to_dense()
                )));
            }
        }
        Ok(())
    }

    /// Signed-delta long CSV for every move, separated by a `move` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("move,");
        for a in 1..=self.axes.len() {
            out.push_str(&format!("axis{a},"));
        }
        out.push_str("delta\n");
        for (i, z) in self.moves.iter().enumerate() {
            for &(pos, d) in z.entries() {
                out.push_str(&format!("{},", i + 1));
                for c in CellIndex::from_position(&self.axes, pos).coords() {
                    out.push_str(&format!("{c},"));
                }
                out.push_str(&format!("{d}\n"));
            }
        }
        out
    }
}

fn level_config(levels: usize) -> Result<Configuration> {
    if levels == 0 {
        return Err(Error::Domain("a covariate needs at least one level".into()));
    }
    let ones = vec![1; levels];
    let scores = (1..=levels as Count).collect();
    Configuration::new(vec![ones, scores], vec![levels], Some(vec![1, 0]))
}

/// The 2×J configuration with rows `(1, …, 1)` and `(1, 2, …, J)`.
pub fn univariate_poisson_config(levels: usize) -> Result<Configuration> {
    if levels < 2 {
        return Err(Error::Domain(format!("need at least 2 levels, got {levels}")));
    }
    level_config(levels)
}

/// Block configuration `[[A, 0], [E, E]]` over a response layer prepended to
/// the cell index.
pub fn lawrence_lifting(config: &Configuration) -> Configuration {
    let n = config.num_cells();
    let mut rows = Vec::with_capacity(config.num_rows() + n);
    for row in config.rows() {
        let mut lifted = row.clone();
        lifted.resize(2 * n, 0);
        rows.push(lifted);
    }
    for c in 0..n {
        let mut row = vec![0; 2 * n];
        row[c] = 1;
        row[n + c] = 1;
        rows.push(row);
    }
    let mut axes = vec![2];
    axes.extend_from_slice(config.axes());
    let mut weight = vec![0; config.num_rows()];
    weight.extend(std::iter::repeat_n(1, n));
    Configuration::new(rows, axes, Some(weight)).expect("lifting preserves validity")
}

/// Configuration whose column at `(j, k)` stacks column `j` of `a` over
/// column `k` of `b`.
pub fn segre_product(a: &Configuration, b: &Configuration) -> Result<Configuration> {
    let (Some(wa), Some(_)) = (a.weight(), b.weight()) else {
        return Err(Error::Domain(
            "Segre product needs homogeneous factors with weight vectors".into(),
        ));
    };
    let (na, nb) = (a.num_cells(), b.num_cells());
    let mut rows = Vec::with_capacity(a.num_rows() + b.num_rows());
    for row in a.rows() {
        rows.push((0..na * nb).map(|c| row[c / nb]).collect());
    }
    for row in b.rows() {
        rows.push((0..na * nb).map(|c| row[c % nb]).collect());
    }
    let mut axes = a.axes().to_vec();
    axes.extend_from_slice(b.axes());
    let mut weight = wa.to_vec();
    weight.resize(a.num_rows() + b.num_rows(), 0);
    Configuration::new(rows, axes, Some(weight))
}

/// Segre product of univariate level configurations, one per axis. Axes of
/// size 1 are allowed here.
pub fn multiway_poisson_config(axes: &[usize]) -> Result<Configuration> {
    let (first, rest) = axes
        .split_first()
        .ok_or_else(|| Error::Domain("need at least one axis".into()))?;
    rest.iter()
        .try_fold(level_config(*first)?, |acc, &n| segre_product(&acc, &level_config(n)?))
}

/// `Λ(A ⊗ B)` for the bivariate logistic model with `J` and `K` levels.
pub fn bivariate_logistic_config(j_levels: usize, k_levels: usize) -> Result<Configuration> {
    Ok(lawrence_lifting(&multiway_poisson_config(&[j_levels, k_levels])?))
}

fn unit(axes: &[usize], coords: &[usize]) -> usize {
    CellIndex::new(coords.to_vec())
        .position(axes)
        .expect("generated coordinates are in range")
}

/// All `e_{j1} + e_{j4} - e_{j2} - e_{j3}` with `j1 < j2 <= j3 < j4` and
/// equal gaps.
pub fn poisson_moves(levels: usize) -> Result<MoveSet> {
    poisson_moves_with_max_gap(levels, levels, MoveSetSource::Poisson)
}

fn poisson_moves_with_max_gap(levels: usize, max_gap: usize, source: MoveSetSource) -> Result<MoveSet> {
    if levels < 2 {
        return Err(Error::Domain(format!("need at least 2 levels, got {levels}")));
    }
    let axes = vec![levels];
    let mut moves = Vec::new();
    for gap in 1..=max_gap.min(levels) {
        for j1 in 1..=levels {
            let j2 = j1 + gap;
            for j3 in j2..=levels {
                let j4 = j3 + gap;
                if j4 > levels {
                    break;
                }
                moves.push(Move::from_entries(
                    axes.clone(),
                    [(j1 - 1, 1), (j2 - 1, -1), (j3 - 1, -1), (j4 - 1, 1)],
                )?);
            }
        }
    }
    MoveSet::new(source, axes, moves)
}

/// Puts `z` on the success layer and `-z` on the failure layer.
pub fn lift_move(z: &Move) -> Move {
    let n = cell_count(z.axes());
    let mut axes = vec![2];
    axes.extend_from_slice(z.axes());
    let entries = z
        .entries()
        .iter()
        .map(|&(p, d)| (p, d))
        .chain(z.entries().iter().map(|&(p, d)| (n + p, -d)));
    Move::from_entries(axes, entries).expect("lifted positions are in range")
}

fn lift_set(set: &MoveSet, source: MoveSetSource) -> Result<MoveSet> {
    let mut axes = vec![2];
    axes.extend_from_slice(set.axes());
    MoveSet::new(source, axes, set.moves().iter().map(lift_move))
}

/// Every Poisson move lifted to univariate logistic regression.
pub fn lifted_poisson_moves(levels: usize) -> Result<MoveSet> {
    lift_set(&poisson_moves(levels)?, MoveSetSource::LiftedPoisson)
}

/// The lifted Poisson moves with `j2 = j1 + 1` and `j3 = j4 - 1`.
pub fn univariate_adjacent_moves(levels: usize) -> Result<MoveSet> {
    if levels < 3 {
        return Err(Error::Domain(format!("need at least 3 levels, got {levels}")));
    }
    let gap_one = poisson_moves_with_max_gap(levels, 1, MoveSetSource::Poisson)?;
    lift_set(&gap_one, MoveSetSource::UnivariateAdjacent)
}

/// Sorted positive and negative supports of a one-axis move, each index
/// repeated by its multiplicity.
fn split_support(z: &Move) -> (Vec<usize>, Vec<usize>) {
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for &(pos, d) in z.entries() {
        let target = if d > 0 { &mut plus } else { &mut minus };
        target.extend(std::iter::repeat_n(pos + 1, d.unsigned_abs() as usize));
    }
    (plus, minus)
}

/// Spreads the one-axis move `z` (living on `axes[axis]`) over the full
/// array: the `h`-th positive and `h`-th negative unit share the
/// coordinates `coords[h]` on the remaining axes.
pub fn distribute_along(z: &Move, axis: usize, coords: &[CellIndex], axes: &[usize]) -> Result<Move> {
    if axis >= axes.len() || z.axes() != [axes[axis]] {
        return Err(Error::Shape(format!(
            "move axes {:?} do not match axis {axis} of {axes:?}",
            z.axes()
        )));
    }
    let (plus, minus) = split_support(z);
    if plus.len() != minus.len() {
        return Err(Error::Domain("move has unequal positive and negative degree".into()));
    }
    if coords.len() != plus.len() {
        return Err(Error::Domain(format!(
            "distribution needs {} coordinates, got {}",
            plus.len(),
            coords.len()
        )));
    }
    let other: Vec<usize> = axes
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != axis)
        .map(|(_, &n)| n)
        .collect();
    let place = |level: usize, rest: &CellIndex| -> Result<usize> {
        rest.position(&other)?;
        let mut full = rest.coords().to_vec();
        full.insert(axis, level);
        CellIndex::new(full).position(axes)
    };
    let mut entries = Vec::with_capacity(2 * plus.len());
    for ((&jp, &jm), rest) in plus.iter().zip(&minus).zip(coords) {
        entries.push((place(jp, rest)?, 1));
        entries.push((place(jm, rest)?, -1));
    }
    Move::from_entries(axes.to_vec(), entries)
}

/// Distribution of a move on the first axis (size J) over K-axis levels.
pub fn distribute_move(z: &Move, k_coords: &[usize], k_levels: usize) -> Result<Move> {
    let levels = match z.axes() {
        [j] => *j,
        other => return Err(Error::Shape(format!("expected a one-axis move, got axes {other:?}"))),
    };
    let coords: Vec<CellIndex> = k_coords.iter().map(|&k| CellIndex::new(vec![k])).collect();
    distribute_along(z, 0, &coords, &[levels, k_levels])
}

fn all_indices(axes: &[usize]) -> Vec<CellIndex> {
    (0..cell_count(axes))
        .map(|p| CellIndex::from_position(axes, p))
        .collect()
}

/// All distributions of the moves in `basis` along `axis`, one per multiset
/// of coordinates on the remaining axes.
fn distributions(basis: &MoveSet, axis: usize, axes: &[usize]) -> Result<Vec<Move>> {
    if basis.axes() != [axes[axis]] {
        return Err(Error::Shape(format!(
            "basis axes {:?} do not match axis {axis} of {axes:?}",
            basis.axes()
        )));
    }
    let rest: Vec<usize> = axes
        .iter()
        .enumerate()
        .filter(|&(a, _)| a != axis)
        .map(|(_, &n)| n)
        .collect();
    let others = all_indices(&rest);
    let mut out = Vec::new();
    for z in basis.moves() {
        let degree = z.degree() as usize;
        for coords in others.iter().cloned().combinations_with_replacement(degree) {
            out.push(distribute_along(z, axis, &coords, axes)?);
        }
    }
    Ok(out)
}

/// Square-free degree-two moves of the complete independence model: swap a
/// nonempty proper subset of the differing coordinates of two cells.
fn independence_moves(axes: &[usize]) -> Vec<Move> {
    let n = cell_count(axes);
    let mut out = Vec::new();
    for a in 0..n {
        let ca = CellIndex::from_position(axes, a);
        for b in (a + 1)..n {
            let cb = CellIndex::from_position(axes, b);
            let differing: Vec<usize> = (0..axes.len())
                .filter(|&i| ca.coords()[i] != cb.coords()[i])
                .collect();
            if differing.len() < 2 {
                continue;
            }
            // bit patterns 1..2^d-1, skipping the complement duplicate
            for mask in 1..(1u64 << (differing.len() - 1)) {
                let mut sa = ca.coords().to_vec();
                let mut sb = cb.coords().to_vec();
                for (bit, &i) in differing.iter().enumerate() {
                    if mask & (1 << bit) != 0 {
                        std::mem::swap(&mut sa[i], &mut sb[i]);
                    }
                }
                let entries = [(a, 1), (b, 1), (unit(axes, &sa), -1), (unit(axes, &sb), -1)];
                out.push(Move::from_entries(axes.to_vec(), entries).expect("in range"));
            }
        }
    }
    out
}

/// Markov basis of `A ⊗ B` built from Markov bases of the factors: the
/// basic 2×2 moves plus every distribution of every factor move.
pub fn segre_markov_basis(basis_a: &MoveSet, basis_b: &MoveSet, j_levels: usize, k_levels: usize) -> Result<MoveSet> {
    let axes = vec![j_levels, k_levels];
    let mut moves = Vec::new();
    for j1 in 1..=j_levels {
        for j2 in (j1 + 1)..=j_levels {
            for k1 in 1..=k_levels {
                for k2 in (k1 + 1)..=k_levels {
                    moves.push(Move::from_entries(
                        axes.clone(),
                        [
                            (unit(&axes, &[j1, k1]), 1),
                            (unit(&axes, &[j2, k2]), 1),
                            (unit(&axes, &[j1, k2]), -1),
                            (unit(&axes, &[j2, k1]), -1),
                        ],
                    )?);
                }
            }
        }
    }
    moves.extend(distributions(basis_a, 0, &axes)?);
    moves.extend(distributions(basis_b, 1, &axes)?);
    MoveSet::new(MoveSetSource::Segre, axes, moves)
}

/// Markov basis of an m-fold Segre product from the factor bases.
pub fn multiway_segre_basis(bases: &[MoveSet], axes: &[usize]) -> Result<MoveSet> {
    if axes.len() < 2 || bases.len() != axes.len() {
        return Err(Error::Domain(format!(
            "need one basis per axis and at least two axes (got {} bases, {} axes)",
            bases.len(),
            axes.len()
        )));
    }
    let mut moves = independence_moves(axes);
    for (axis, basis) in bases.iter().enumerate() {
        moves.extend(distributions(basis, axis, axes)?);
    }
    MoveSet::new(MoveSetSource::MultiwaySegre, axes.to_vec(), moves)
}

fn check_bivariate_sizes(j_levels: usize, k_levels: usize) -> Result<()> {
    if j_levels == 0 || k_levels == 0 || j_levels * k_levels < 3 {
        return Err(Error::Domain(format!(
            "bivariate moves need J, K >= 1 and J·K >= 3 (got {j_levels}×{k_levels})"
        )));
    }
    Ok(())
}

/// Lifted moves `e_{p1} - e_{p2} - e_{p3} + e_{p4}` with
/// `p1 - p2 = p3 - p4`, optionally restricting the common step.
fn quadruple_moves(j_levels: usize, k_levels: usize, max_step: Option<i64>, source: MoveSetSource) -> Result<MoveSet> {
    check_bivariate_sizes(j_levels, k_levels)?;
    let inner = vec![j_levels, k_levels];
    let cells: Vec<(i64, i64)> = (1..=j_levels as i64)
        .flat_map(|j| (1..=k_levels as i64).map(move |k| (j, k)))
        .collect();
    let pos = |(j, k): (i64, i64)| ((j - 1) as usize) * k_levels + (k - 1) as usize;
    let in_range = |(j, k): (i64, i64)| j >= 1 && j <= j_levels as i64 && k >= 1 && k <= k_levels as i64;
    let mut slices = Vec::new();
    for &p1 in &cells {
        for &p2 in &cells {
            let step = (p1.0 - p2.0, p1.1 - p2.1);
            if step == (0, 0) {
                continue;
            }
            if let Some(bound) = max_step {
                if step.0.abs() > bound || step.1.abs() > bound {
                    continue;
                }
            }
            for &p3 in &cells {
                let p4 = (p3.0 - step.0, p3.1 - step.1);
                if !in_range(p4) {
                    continue;
                }
                let z = Move::from_entries(
                    inner.clone(),
                    [(pos(p1), 1), (pos(p2), -1), (pos(p3), -1), (pos(p4), 1)],
                )?;
                if !z.is_zero() {
                    slices.push(z);
                }
            }
        }
    }
    let slices = MoveSet::new(source, inner, slices)?;
    lift_set(&slices, source)
}

/// All lifted quadruple moves for the bivariate logistic model, including
/// the degenerate shapes whose cells coincide.
pub fn bivariate_lifted_moves(j_levels: usize, k_levels: usize) -> Result<MoveSet> {
    quadruple_moves(j_levels, k_levels, None, MoveSetSource::BivariateLifted)
}

/// The bivariate lifted moves whose common step has entries in `{-1, 0, 1}`.
pub fn bivariate_unit_moves(j_levels: usize, k_levels: usize) -> Result<MoveSet> {
    quadruple_moves(j_levels, k_levels, Some(1), MoveSetSource::BivariateUnit)
}
