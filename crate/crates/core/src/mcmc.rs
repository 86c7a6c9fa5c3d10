//! Metropolis walks over fibers and exact p-value estimation.
//!
//! Every chain draws from a ChaCha20 stream (`rand_chacha::ChaCha20Rng`)
//! seeded with `seed_from_u64`, so a `(seed, config, input)` triple always
//! reproduces the same output on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::movesets::{lifted_poisson_moves, univariate_adjacent_moves, MoveSet, MoveSetSource};
use crate::tables::{try_step, Count, Move, Sign, Table};

pub type ChainRng = ChaCha20Rng;

pub fn chain_rng(seed: u64) -> ChainRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Tolerance used when counting sampled statistics at least as large as the
/// observed one.
pub const PVALUE_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChainConfig {
    pub burn_in: u64,
    pub samples: u64,
    pub seed: u64,
    pub thin: u64,
}

impl ChainConfig {
    pub fn new(burn_in: u64, samples: u64, seed: u64) -> Result<Self> {
        ChainConfig {
            burn_in,
            samples,
            seed,
            thin: 1,
        }
        .validated()
    }

    /// 100,000 retained tables after 50,000 burn-in steps.
    pub fn standard(seed: u64) -> Self {
        ChainConfig {
            burn_in: 50_000,
            samples: 100_000,
            seed,
            thin: 1,
        }
    }

    pub fn with_thin(self, thin: u64) -> Result<Self> {
        ChainConfig { thin, ..self }.validated()
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ChainConfig { seed, ..self }
    }

    pub fn validated(self) -> Result<Self> {
        if self.samples == 0 {
            return Err(Error::Domain("a chain must retain at least one sample".into()));
        }
        if self.thin == 0 {
            return Err(Error::Domain("thinning interval must be at least 1".into()));
        }
        Ok(self)
    }
}

/// `ln n!` from a table, falling back to `ln Γ(n + 1)` past its end.
#[derive(Clone, Debug)]
pub struct LogFactorial {
    table: Vec<f64>,
}

impl LogFactorial {
    pub fn new(max: usize) -> Self {
        let mut table = Vec::with_capacity(max + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for n in 1..=max {
            acc += (n as f64).ln();
            table.push(acc);
        }
        LogFactorial { table }
    }

    pub fn get(&self, n: Count) -> f64 {
        debug_assert!(n >= 0);
        match self.table.get(n as usize) {
            Some(&v) => v,
            None => ln_gamma(n as f64 + 1.0),
        }
    }

    pub fn ln_choose(&self, n: Count, k: Count) -> f64 {
        self.get(n) - self.get(k) - self.get(n - k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    /// `∏ 1 / x_c!` over all cells.
    PoissonFactorial,
    /// `∏ C(x_{1c} + x_{2c}, x_{1c})` over the cells of a two-layer table.
    BinomialCoefficient,
}

/// Unnormalized conditional null law on a fiber, evaluated in log space.
#[derive(Clone, Debug)]
pub struct TargetWeight {
    kind: WeightKind,
    lnfact: LogFactorial,
}

impl TargetWeight {
    pub fn new(kind: WeightKind, max_count: usize) -> Self {
        TargetWeight {
            kind,
            lnfact: LogFactorial::new(max_count),
        }
    }

    pub fn poisson(max_count: usize) -> Self {
        Self::new(WeightKind::PoissonFactorial, max_count)
    }

    pub fn binomial(max_count: usize) -> Self {
        Self::new(WeightKind::BinomialCoefficient, max_count)
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn log_weight(&self, x: &Table) -> Result<f64> {
        match self.kind {
            WeightKind::PoissonFactorial => Ok(-x.counts().iter().map(|&c| self.lnfact.get(c)).sum::<f64>()),
            WeightKind::BinomialCoefficient => {
                let half = layer_size(x.axes())?;
                let c = x.counts();
                Ok((0..half)
                    .map(|p| self.lnfact.ln_choose(c[p] + c[half + p], c[p]))
                    .sum())
            }
        }
    }

    /// `log w(x + sign·z) - log w(x)` touching only the cells of `z`.
    fn log_ratio(&self, before: &[Count], z: &Move, sign: Sign) -> f64 {
        let s = sign.factor();
        match self.kind {
            WeightKind::PoissonFactorial => z
                .entries()
                .iter()
                .map(|&(p, d)| self.lnfact.get(before[p]) - self.lnfact.get(before[p] + s * d))
                .sum(),
            WeightKind::BinomialCoefficient => {
                let half = before.len() / 2;
                let mut pairs: Vec<usize> = z.entries().iter().map(|&(p, _)| p % half).collect();
                pairs.sort_unstable();
                pairs.dedup();
                pairs
                    .into_iter()
                    .map(|p| {
                        let (a, b) = (before[p], before[half + p]);
                        let (a2, b2) = (a + s * z.delta_at(p), b + s * z.delta_at(half + p));
                        self.lnfact.ln_choose(a2 + b2, a2) - self.lnfact.ln_choose(a + b, a)
                    })
                    .sum()
            }
        }
    }
}

fn layer_size(axes: &[usize]) -> Result<usize> {
    match axes.first() {
        Some(2) => Ok(axes[1..].iter().product()),
        _ => Err(Error::Shape(format!(
            "binomial weight needs a two-layer table, got axes {axes:?}"
        ))),
    }
}

/// Convenience wrapper around [`TargetWeight::log_weight`].
pub fn log_weight(x: &Table, kind: WeightKind) -> Result<f64> {
    let max = x.counts().iter().copied().max().unwrap_or(0).max(0) as usize;
    let max = match kind {
        WeightKind::PoissonFactorial => max,
        WeightKind::BinomialCoefficient => 2 * max,
    };
    TargetWeight::new(kind, max).log_weight(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    Moved,
    Infeasible,
    Rejected,
}

/// One Metropolis step in place: pick a move and a sign uniformly, stay put
/// if the result leaves the nonnegative orthant, otherwise accept with
/// probability `min(1, w(x')/w(x))`.
pub fn metropolis_step_in_place<R: Rng + ?Sized>(
    counts: &mut [Count],
    moves: &MoveSet,
    weight: &TargetWeight,
    rng: &mut R,
) -> Result<StepOutcome> {
    if moves.is_empty() {
        return Err(Error::Domain("cannot walk with an empty move set".into()));
    }
    let z = &moves.moves()[rng.random_range(0..moves.len())];
    let sign = if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus };
    let s = sign.factor();
    if z.entries().iter().any(|&(p, d)| counts[p] + s * d < 0) {
        return Ok(StepOutcome::Infeasible);
    }
    let log_ratio = weight.log_ratio(counts, z, sign);
    if log_ratio < 0.0 && rng.random::<f64>() >= log_ratio.exp() {
        return Ok(StepOutcome::Rejected);
    }
    try_step(counts, z, sign)?;
    Ok(StepOutcome::Moved)
}

pub fn metropolis_step<R: Rng + ?Sized>(x: &Table, moves: &MoveSet, weight: &TargetWeight, rng: &mut R) -> Result<Table> {
    if x.axes() != moves.axes() {
        return Err(Error::Shape(format!(
            "table axes {:?} do not match move axes {:?}",
            x.axes(),
            moves.axes()
        )));
    }
    let mut counts = x.counts().to_vec();
    metropolis_step_in_place(&mut counts, moves, weight, rng)?;
    Table::new(x.axes().to_vec(), counts)
}

/// Retained statistics plus step bookkeeping for one chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainTrace {
    pub values: Vec<f64>,
    pub steps: u64,
    pub moved: u64,
    pub infeasible: u64,
}

/// Runs `burn_in` discarded steps, then records `stat` after every `thin`
/// further steps until `samples` values are collected. The statistic is
/// only re-evaluated when the state has changed.
pub fn run_chain_traced<F>(x0: &Table, moves: &MoveSet, weight: &TargetWeight, mut stat: F, cfg: &ChainConfig) -> Result<ChainTrace>
where
    F: FnMut(&Table) -> f64,
{
    let cfg = cfg.validated()?;
    if x0.axes() != moves.axes() {
        return Err(Error::Shape(format!(
            "table axes {:?} do not match move axes {:?}",
            x0.axes(),
            moves.axes()
        )));
    }
    let mut rng = chain_rng(cfg.seed);
    let mut state = x0.clone();
    let mut counts = x0.counts().to_vec();
    let mut trace = ChainTrace {
        values: Vec::with_capacity(cfg.samples as usize),
        steps: 0,
        moved: 0,
        infeasible: 0,
    };
    let mut step = |counts: &mut Vec<Count>, trace: &mut ChainTrace| -> Result<bool> {
        trace.steps += 1;
        match metropolis_step_in_place(counts, moves, weight, &mut rng)? {
            StepOutcome::Moved => {
                trace.moved += 1;
                Ok(true)
            }
            StepOutcome::Infeasible => {
                trace.infeasible += 1;
                Ok(false)
            }
            StepOutcome::Rejected => Ok(false),
        }
    };
    for _ in 0..cfg.burn_in {
        step(&mut counts, &mut trace)?;
    }
    let mut cached: Option<f64> = None;
    if counts != x0.counts() {
        state = Table::new(x0.axes().to_vec(), counts.clone())?;
    }
    for _ in 0..cfg.samples {
        let mut changed = false;
        for _ in 0..cfg.thin {
            changed |= step(&mut counts, &mut trace)?;
        }
        if changed {
            state = Table::new(x0.axes().to_vec(), counts.clone())?;
            cached = None;
        }
        let value = *cached.get_or_insert_with(|| stat(&state));
        trace.values.push(value);
    }
    Ok(trace)
}

pub fn run_chain<F>(x0: &Table, moves: &MoveSet, weight: &TargetWeight, stat: F, cfg: &ChainConfig) -> Result<Vec<f64>>
where
    F: FnMut(&Table) -> f64,
{
    Ok(run_chain_traced(x0, moves, weight, stat, cfg)?.values)
}

/// Fraction of samples at least as large as `observed` (up to [`PVALUE_SLACK`]).
pub fn estimate_pvalue(samples: &[f64], observed: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Domain("p-value needs at least one sample".into()));
    }
    let hits = samples.iter().filter(|&&s| s >= observed - PVALUE_SLACK).count();
    Ok(hits as f64 / samples.len() as f64)
}

/// Fixed-width histogram over a contiguous range of bins.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub width: f64,
    pub bins: Vec<(f64, u64)>,
}

impl Histogram {
    pub fn from_samples(samples: &[f64], width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::Domain(format!("bin width must be positive, got {width}")));
        }
        let index = |s: f64| (s / width).floor() as i64;
        let Some(lo) = samples.iter().map(|&s| index(s)).min() else {
            return Ok(Histogram { width, bins: Vec::new() });
        };
        let hi = samples.iter().map(|&s| index(s)).max().unwrap_or(lo);
        let mut counts = vec![0u64; (hi - lo + 1) as usize];
        for &s in samples {
            counts[(index(s) - lo) as usize] += 1;
        }
        let bins = counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| ((lo + i as i64) as f64 * width, c))
            .collect();
        Ok(Histogram { width, bins })
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|&(_, c)| c).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,count\n");
        for &(left, count) in &self.bins {
            out.push_str(&format!("{left},{count}\n"));
        }
        out
    }
}

/// Single-column CSV of retained statistic values.
pub fn trace_csv(values: &[f64]) -> String {
    let mut out = String::from("statistic\n");
    for v in values {
        out.push_str(&format!("{v}\n"));
    }
    out
}

/// Null hypothesis of a single zero slope in the bivariate logistic model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubmodelNull {
    /// No effect of the first covariate `j`.
    AlphaZero,
    /// No effect of the second covariate `k`.
    BetaZero,
}

/// Which univariate move set drives the margin chain of [`SubmodelNullSampler`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarginMoves {
    /// Every lifted Poisson move.
    Full,
    /// Unit-gap moves only.
    Adjacent,
}

/// Exact conditional sampler for a single-slope null.
///
/// Under `β = 0` the success totals `x_{1j+}` follow univariate logistic
/// regression in `j` with trials `x_{+j+}`; a Metropolis chain walks that
/// reduced fiber and each draw spreads every `x_{1j+}` over the `k` cells by
/// sampling without replacement from urns of sizes `x_{+jk}`. `α = 0` is
/// the same with the axes exchanged.
#[derive(Clone, Debug)]
pub struct SubmodelNullSampler {
    which: SubmodelNull,
    j_levels: usize,
    k_levels: usize,
    trials: Vec<Count>,
    margin: Vec<Count>,
    moves: Option<MoveSet>,
    weight: TargetWeight,
}

impl SubmodelNullSampler {
    pub fn new(x: &Table, which: SubmodelNull, margin_moves: MarginMoves) -> Result<Self> {
        let (j_levels, k_levels) = match x.axes() {
            [2, j, k] => (*j, *k),
            other => {
                return Err(Error::Shape(format!(
                    "expected a 2×J×K table, got axes {other:?}"
                )))
            }
        };
        let cells = j_levels * k_levels;
        let c = x.counts();
        let trials: Vec<Count> = (0..cells).map(|p| c[p] + c[cells + p]).collect();
        if let Some(p) = trials.iter().position(|&t| t == 0) {
            return Err(Error::Precondition(format!(
                "cell (j={}, k={}) has zero trials",
                p / k_levels + 1,
                p % k_levels + 1
            )));
        }
        let levels = match which {
            SubmodelNull::BetaZero => j_levels,
            SubmodelNull::AlphaZero => k_levels,
        };
        let mut margin = vec![0; 2 * levels];
        for p in 0..cells {
            let level = match which {
                SubmodelNull::BetaZero => p / k_levels,
                SubmodelNull::AlphaZero => p % k_levels,
            };
            margin[level] += c[p];
            margin[levels + level] += c[cells + p];
        }
        // with fewer than three levels the reduced fiber is a single table
        let moves = match (levels >= 3, margin_moves) {
            (false, _) => None,
            (true, MarginMoves::Adjacent) => Some(univariate_adjacent_moves(levels)?),
            (true, MarginMoves::Full) => Some(lifted_poisson_moves(levels)?),
        };
        let max_count = trials.iter().sum::<Count>() as usize;
        Ok(SubmodelNullSampler {
            which,
            j_levels,
            k_levels,
            trials,
            margin,
            moves,
            weight: TargetWeight::binomial(max_count),
        })
    }

    pub fn move_source(&self) -> Option<MoveSetSource> {
        self.moves.as_ref().map(MoveSet::source)
    }

    pub fn move_count(&self) -> usize {
        self.moves.as_ref().map_or(0, MoveSet::len)
    }

    /// Current state of the reduced two-layer margin table.
    pub fn margin(&self) -> &[Count] {
        &self.margin
    }

    /// Advances the margin chain; returns whether the margin changed.
    pub fn advance<R: Rng + ?Sized>(&mut self, steps: u64, rng: &mut R) -> Result<bool> {
        let Some(moves) = &self.moves else {
            return Ok(false);
        };
        let mut changed = false;
        for _ in 0..steps {
            changed |= metropolis_step_in_place(&mut self.margin, moves, &self.weight, rng)? == StepOutcome::Moved;
        }
        Ok(changed)
    }

    /// Allocates the current margin over the full grid.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Table {
        let (jn, kn) = (self.j_levels, self.k_levels);
        let cells = jn * kn;
        let mut counts = vec![0; 2 * cells];
        let (outer, inner) = match self.which {
            SubmodelNull::BetaZero => (jn, kn),
            SubmodelNull::AlphaZero => (kn, jn),
        };
        let position = |o: usize, i: usize| match self.which {
            SubmodelNull::BetaZero => o * kn + i,
            SubmodelNull::AlphaZero => i * kn + o,
        };
        let mut urns = vec![0; inner];
        for o in 0..outer {
            for (i, urn) in urns.iter_mut().enumerate() {
                *urn = self.trials[position(o, i)];
            }
            let picks = sample_without_replacement(&urns, self.margin[o], rng);
            for (i, &s) in picks.iter().enumerate() {
                let p = position(o, i);
                counts[p] = s;
                counts[cells + p] = self.trials[p] - s;
            }
        }
        Table::new(vec![2, jn, kn], counts).expect("allocation respects trials")
    }
}

/// Counts per urn after drawing `draws` balls without replacement from urns
/// of the given sizes (a multivariate hypergeometric draw).
pub fn sample_without_replacement<R: Rng + ?Sized>(urns: &[Count], draws: Count, rng: &mut R) -> Vec<Count> {
    let mut remaining = urns.to_vec();
    let mut total: Count = remaining.iter().sum();
    debug_assert!(draws <= total);
    let mut picked = vec![0; urns.len()];
    for _ in 0..draws {
        let mut u = rng.random_range(0..total);
        for (i, r) in remaining.iter_mut().enumerate() {
            if u < *r {
                *r -= 1;
                picked[i] += 1;
                break;
            }
            u -= *r;
        }
        total -= 1;
    }
    picked
}

/// One null table after `burn_in + thin` steps of the adjacent-move margin chain.
pub fn sample_submodel_null(x: &Table, which: SubmodelNull, cfg: &ChainConfig) -> Result<Table> {
    let cfg = cfg.validated()?;
    let mut sampler = SubmodelNullSampler::new(x, which, MarginMoves::Adjacent)?;
    let mut rng = chain_rng(cfg.seed);
    sampler.advance(cfg.burn_in + cfg.thin, &mut rng)?;
    Ok(sampler.draw(&mut rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::movesets::poisson_moves;

    fn poisson_pair_start() -> Table {
        Table::new(vec![3], vec![1, 0, 1]).unwrap()
    }

    #[test]
    fn log_weight_examples() {
        let zero = Table::zeros(vec![4]);
        assert_eq!(log_weight(&zero, WeightKind::PoissonFactorial).unwrap(), 0.0);
        let pair = Table::new(vec![2, 1], vec![2, 1]).unwrap();
        let w = log_weight(&pair, WeightKind::BinomialCoefficient).unwrap();
        assert!((w - 3f64.ln()).abs() < 1e-12);
        let swapped = Table::new(vec![2, 1], vec![1, 2]).unwrap();
        assert_eq!(w, log_weight(&swapped, WeightKind::BinomialCoefficient).unwrap());
        assert!(log_weight(&Table::zeros(vec![3]), WeightKind::BinomialCoefficient).is_err());
    }

    #[test]
    fn log_factorial_extends_past_table() {
        let lf = LogFactorial::new(5);
        let direct: f64 = (1..=30).map(|n| (n as f64).ln()).sum();
        assert!((lf.get(30) - direct).abs() < 1e-9);
        assert_eq!(lf.get(0), 0.0);
    }

    #[test]
    fn ratio_matches_full_evaluation() {
        let w = TargetWeight::binomial(20);
        let x = Table::new(vec![2, 3], vec![2, 1, 3, 1, 4, 0]).unwrap();
        let z = crate::movesets::lift_move(&Move::from_dense(vec![3], &[1, -2, 1]).unwrap());
        for sign in [Sign::Plus, Sign::Minus] {
            let mut after = x.counts().to_vec();
            if try_step(&mut after, &z, sign).unwrap() {
                let after = Table::new(vec![2, 3], after).unwrap();
                let full = w.log_weight(&after).unwrap() - w.log_weight(&x).unwrap();
                assert!((w.log_ratio(x.counts(), &z, sign) - full).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_move_set_is_an_error() {
        let empty = MoveSet::new(MoveSetSource::Custom, vec![3], []).unwrap();
        let mut rng = chain_rng(1);
        let r = metropolis_step(&poisson_pair_start(), &empty, &TargetWeight::poisson(4), &mut rng);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn stuck_chain_stays_put() {
        // (0, 1, 0) has no feasible neighbour under e1 - 2e2 + e3
        let x = Table::new(vec![3], vec![0, 1, 0]).unwrap();
        let moves = poisson_moves(3).unwrap();
        let w = TargetWeight::poisson(4);
        let mut rng = chain_rng(7);
        let mut counts = x.counts().to_vec();
        for _ in 0..100 {
            assert_eq!(
                metropolis_step_in_place(&mut counts, &moves, &w, &mut rng).unwrap(),
                StepOutcome::Infeasible
            );
        }
        assert_eq!(counts, x.counts());
    }

    #[test]
    fn two_point_fiber_frequencies() {
        let moves = poisson_moves(3).unwrap();
        let w = TargetWeight::poisson(4);
        let cfg = ChainConfig::new(1_000, 100_000, 2024).unwrap();
        let values = run_chain(
            &poisson_pair_start(),
            &moves,
            &w,
            |t| if t.counts() == [1, 0, 1] { 1.0 } else { 0.0 },
            &cfg,
        )
        .unwrap();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        // batch-means standard error
        let batches = 100;
        let size = values.len() / batches;
        let means: Vec<f64> = values.chunks(size).map(|c| c.iter().sum::<f64>() / c.len() as f64).collect();
        let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        assert!((mean - 2.0 / 3.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn chains_are_reproducible() {
        let moves = poisson_moves(3).unwrap();
        let w = TargetWeight::poisson(4);
        let cfg = ChainConfig::new(10, 500, 99).unwrap();
        let stat = |t: &Table| t.counts()[1] as f64;
        let a = run_chain(&poisson_pair_start(), &moves, &w, stat, &cfg).unwrap();
        let b = run_chain(&poisson_pair_start(), &moves, &w, stat, &cfg).unwrap();
        assert_eq!(a, b);
        let single = ChainConfig::new(0, 1, 5).unwrap();
        let v = run_chain(&poisson_pair_start(), &moves, &w, stat, &single).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v[0] == 0.0 || v[0] == 2.0);
    }

    #[test]
    fn chain_config_invariants() {
        assert!(ChainConfig::new(0, 0, 1).is_err());
        assert!(ChainConfig::new(0, 1, 1).unwrap().with_thin(0).is_err());
    }

    #[test]
    fn pvalue_examples() {
        assert_eq!(estimate_pvalue(&[1.0, 2.0], 3.0).unwrap(), 0.0);
        assert_eq!(estimate_pvalue(&[1.0, 2.0], f64::MIN).unwrap(), 1.0);
        assert_eq!(estimate_pvalue(&[1.0, 2.0, 3.0, 4.0], 2.5).unwrap(), 0.5);
        assert_eq!(estimate_pvalue(&[2.0], 2.0 + 1e-12).unwrap(), 1.0);
        assert!(estimate_pvalue(&[], 0.0).is_err());
    }

    #[test]
    fn histogram_counts_sum_to_samples() {
        let s = [0.1, 0.4, 0.6, 2.2, 2.3];
        let h = Histogram::from_samples(&s, 0.5).unwrap();
        assert_eq!(h.total(), 5);
        assert_eq!(h.bins, vec![(0.0, 2), (0.5, 1), (1.0, 0), (1.5, 0), (2.0, 2)]);
        assert!(h.to_csv().starts_with("bin_left,count\n0,2\n0.5,1\n"));
        assert!(Histogram::from_samples(&s, 0.0).is_err());
    }

    #[test]
    fn submodel_preserves_margins() {
        // 2×4×3 table with positive trials
        let success = [1, 0, 2, 3, 1, 0, 0, 2, 1, 1, 1, 0];
        let trials = [2, 1, 3, 4, 2, 1, 2, 3, 2, 1, 2, 1];
        let mut counts = success.to_vec();
        counts.extend(trials.iter().zip(&success).map(|(t, s)| t - s));
        let x = Table::new(vec![2, 4, 3], counts).unwrap();
        let row_totals = |t: &Table| -> Vec<Count> { (0..4).map(|j| t.counts()[j * 3..j * 3 + 3].iter().sum()).collect() };
        let observed = row_totals(&x);
        let weighted = |r: &[Count]| r.iter().enumerate().map(|(j, v)| (j as Count + 1) * v).sum::<Count>();
        for seed in 0..20 {
            let cfg = ChainConfig::new(5, 1, seed).unwrap();
            let y = sample_submodel_null(&x, SubmodelNull::BetaZero, &cfg).unwrap();
            for (p, &n) in trials.iter().enumerate() {
                assert_eq!(y.counts()[p] + y.counts()[12 + p], n);
            }
            let r = row_totals(&y);
            assert_eq!(r.iter().sum::<Count>(), observed.iter().sum::<Count>());
            assert_eq!(weighted(&r), weighted(&observed));
        }
    }

    #[test]
    fn submodel_rejects_zero_trials() {
        let x = Table::new(vec![2, 1, 2], vec![1, 0, 0, 0]).unwrap();
        let cfg = ChainConfig::new(0, 1, 0).unwrap();
        assert!(matches!(
            sample_submodel_null(&x, SubmodelNull::BetaZero, &cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn single_row_allocation_is_fair() {
        // J = 1: one success over trials (1, 1)
        let x = Table::new(vec![2, 1, 2], vec![1, 0, 0, 1]).unwrap();
        let sampler = SubmodelNullSampler::new(&x, SubmodelNull::BetaZero, MarginMoves::Adjacent).unwrap();
        assert!(sampler.move_source().is_none());
        let mut rng = chain_rng(11);
        let n = 20_000;
        let first = (0..n).filter(|_| sampler.draw(&mut rng).counts()[0] == 1).count();
        let p = first as f64 / n as f64;
        let se = (0.25 / n as f64).sqrt();
        assert!((p - 0.5).abs() < 3.0 * se, "p = {p}");
    }
}
