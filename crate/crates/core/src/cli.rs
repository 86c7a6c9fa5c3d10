//! Dataset ingestion, exact-test orchestration and report output.

use std::cell::{Cell, RefCell};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::thread;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{chisq_upper_tail, fit_logit, lr_statistic, LrTest, ModelKind, ModelSpec};
use crate::mcmc::{
    chain_rng, estimate_pvalue, run_chain_traced, ChainConfig, Histogram, MarginMoves, SubmodelNull,
    SubmodelNullSampler, TargetWeight,
};
use crate::movesets::{bivariate_lifted_moves, bivariate_unit_moves};
use crate::tables::{Count, Table};

pub const DEFAULT_BIN_WIDTH: f64 = 0.5;
pub const RNG_NAME: &str = "chacha20";

/// Binomial responses on a `J × K` grid. Grids are indexed `[k - 1][j - 1]`,
/// the row-per-`k` layout of the grid files.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub j_levels: usize,
    pub k_levels: usize,
    pub successes: Vec<Vec<Count>>,
    pub trials: Vec<Vec<Count>>,
}

fn grid_tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    let mut start = None;
    let mut out = Vec::new();
    for (i, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
        let sep = ch.is_whitespace() || ch == ',';
        match (sep, start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((line[..s].chars().count() + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    out.into_iter()
}

fn parse_count(text: &str, line: usize, column: usize, what: &str) -> Result<Count> {
    text.parse::<Count>()
        .ok()
        .filter(|&v| v >= 0)
        .ok_or_else(|| Error::parse(line, column, format!("{what} `{text}` is not a nonnegative integer")))
}

impl Dataset {
    pub fn new(successes: Vec<Vec<Count>>, trials: Vec<Vec<Count>>) -> Result<Self> {
        let k_levels = trials.len();
        let j_levels = trials.first().map_or(0, Vec::len);
        if k_levels == 0 || j_levels == 0 {
            return Err(Error::Shape("dataset has no cells".into()));
        }
        let rect = |g: &Vec<Vec<Count>>| g.len() == k_levels && g.iter().all(|r| r.len() == j_levels);
        if !rect(&successes) || !rect(&trials) {
            return Err(Error::Shape("success and trial grids must be rectangular and equal in shape".into()));
        }
        for (k, (sr, tr)) in successes.iter().zip(&trials).enumerate() {
            for (j, (&s, &n)) in sr.iter().zip(tr).enumerate() {
                if s < 0 || s > n {
                    return Err(Error::Domain(format!(
                        "cell (j={}, k={}) has {s} successes out of {n}",
                        j + 1,
                        k + 1
                    )));
                }
            }
        }
        Ok(Dataset {
            j_levels,
            k_levels,
            successes,
            trials,
        })
    }

    /// Parses rows of `s/n` tokens. Rows are levels of `k`, columns of `j`.
    pub fn parse_grid(text: &str) -> Result<Self> {
        let mut successes = Vec::new();
        let mut trials = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let trimmed = raw.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut srow = Vec::new();
            let mut trow = Vec::new();
            for (column, token) in grid_tokens(raw) {
                let (s, n) = token
                    .split_once('/')
                    .ok_or_else(|| Error::parse(line, column, format!("expected `s/n`, got `{token}`")))?;
                let s = parse_count(s, line, column, "success count")?;
                let n = parse_count(n, line, column, "trial count")?;
                if s > n {
                    return Err(Error::parse(line, column, format!("{s} successes exceed {n} trials")));
                }
                srow.push(s);
                trow.push(n);
            }
            if let Some(first) = trials.first() {
                let first: &Vec<Count> = first;
                if trow.len() != first.len() {
                    return Err(Error::parse(
                        line,
                        1,
                        format!("row has {} cells, expected {}", trow.len(), first.len()),
                    ));
                }
            }
            successes.push(srow);
            trials.push(trow);
        }
        if trials.is_empty() {
            return Err(Error::parse(last_line.max(1), 1, "no data rows"));
        }
        Dataset::new(successes, trials)
    }

    pub fn to_grid_string(&self) -> String {
        let mut out = String::new();
        for (sr, tr) in self.successes.iter().zip(&self.trials) {
            let row: Vec<String> = sr.iter().zip(tr).map(|(s, n)| format!("{s}/{n}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses `j,k,successes,trials` rows with 1-based levels.
    pub fn parse_long_csv(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            j: i64,
            k: i64,
            successes: Count,
            trials: Count,
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let header_ok = reader
            .headers()
            .map(|h| h.iter().eq(["j", "k", "successes", "trials"]))
            .unwrap_or(false);
        if !header_ok {
            return Err(Error::parse(1, 1, "expected header `j,k,successes,trials`"));
        }
        let mut cells = BTreeMap::new();
        for record in reader.deserialize::<Row>() {
            let row = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::parse(line, 1, e.to_string())
            })?;
            let line = cells.len() + 2;
            if row.j < 1 || row.k < 1 {
                return Err(Error::parse(line, 1, format!("levels are 1-based, got j={} k={}", row.j, row.k)));
            }
            if row.successes < 0 || row.successes > row.trials {
                return Err(Error::parse(
                    line,
                    3,
                    format!("{} successes out of {} trials", row.successes, row.trials),
                ));
            }
            let key = (row.j as usize, row.k as usize);
            if cells.insert(key, (row.successes, row.trials)).is_some() {
                return Err(Error::parse(line, 1, format!("duplicate cell j={} k={}", key.0, key.1)));
            }
        }
        let j_levels = cells.keys().map(|&(j, _)| j).max().unwrap_or(0);
        let k_levels = cells.keys().map(|&(_, k)| k).max().unwrap_or(0);
        if cells.is_empty() || cells.len() != j_levels * k_levels {
            return Err(Error::parse(
                cells.len() + 1,
                1,
                format!("{} cells do not cover a {j_levels}×{k_levels} grid", cells.len()),
            ));
        }
        let mut successes = vec![vec![0; j_levels]; k_levels];
        let mut trials = vec![vec![0; j_levels]; k_levels];
        for ((j, k), (s, n)) in cells {
            successes[k - 1][j - 1] = s;
            trials[k - 1][j - 1] = n;
        }
        Dataset::new(successes, trials)
    }

    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("j,k,successes,trials\n");
        for j in 0..self.j_levels {
            for k in 0..self.k_levels {
                let _ = writeln!(out, "{},{},{},{}", j + 1, k + 1, self.successes[k][j], self.trials[k][j]);
            }
        }
        out
    }

    /// The `2 × J × K` table: successes in layer 1, failures in layer 2.
    pub fn to_table(&self) -> Table {
        let cells = self.j_levels * self.k_levels;
        let mut counts = vec![0; 2 * cells];
        for j in 0..self.j_levels {
            for k in 0..self.k_levels {
                let p = j * self.k_levels + k;
                counts[p] = self.successes[k][j];
                counts[cells + p] = self.trials[k][j] - self.successes[k][j];
            }
        }
        Table::new(vec![2, self.j_levels, self.k_levels], counts).expect("dataset cells are nonnegative")
    }

    pub fn from_table(table: &Table) -> Result<Self> {
        let (jn, kn) = match table.axes() {
            [2, j, k] => (*j, *k),
            other => return Err(Error::Shape(format!("expected a 2×J×K table, got axes {other:?}"))),
        };
        let cells = jn * kn;
        let c = table.counts();
        let mut successes = vec![vec![0; jn]; kn];
        let mut trials = vec![vec![0; jn]; kn];
        for j in 0..jn {
            for k in 0..kn {
                let p = j * kn + k;
                successes[k][j] = c[p];
                trials[k][j] = c[p] + c[cells + p];
            }
        }
        Dataset::new(successes, trials)
    }

    pub fn spec(&self, kind: ModelKind) -> ModelSpec {
        ModelSpec::new(kind, self.j_levels, self.k_levels)
    }

    fn require_trials(&self) -> Result<()> {
        for (k, row) in self.trials.iter().enumerate() {
            if let Some(j) = row.iter().position(|&n| n == 0) {
                return Err(Error::Precondition(format!("cell (j={}, k={k}) has zero trials", j + 1, k = k + 1)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExactTest {
    /// `α = 0` inside `μ + αj + βk`.
    Alpha,
    /// `β = 0` inside `μ + αj + βk`.
    Beta,
    /// `μ + αj + βk` against the ANOVA model.
    GoodnessOfFit,
}

impl ExactTest {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "alpha" => ExactTest::Alpha,
            "beta" => ExactTest::Beta,
            "gof" | "goodness-of-fit" | "goodness_of_fit" => ExactTest::GoodnessOfFit,
            _ => return None,
        })
    }

    pub fn models(self) -> (ModelKind, ModelKind) {
        match self {
            ExactTest::Alpha => (ModelKind::LinearKOnly, ModelKind::LinearBivariate),
            ExactTest::Beta => (ModelKind::LinearJOnly, ModelKind::LinearBivariate),
            ExactTest::GoodnessOfFit => (ModelKind::LinearBivariate, ModelKind::Anova),
        }
    }

    pub fn statistic_name(self) -> &'static str {
        match self {
            ExactTest::Alpha => "L_alpha",
            ExactTest::Beta => "L_beta",
            ExactTest::GoodnessOfFit => "L_0",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveSetChoice {
    /// Every move the connectivity results call for.
    Full,
    /// Unit-step moves only.
    Unit,
}

impl MoveSetChoice {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "full" => MoveSetChoice::Full,
            "unit" | "b02" => MoveSetChoice::Unit,
            _ => return None,
        })
    }
}

/// Observed LR statistics of a dataset with their asymptotic p-values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservedStatistic {
    pub statistic: &'static str,
    pub null_model: ModelKind,
    pub alt_model: ModelKind,
    pub value: f64,
    pub df: usize,
    pub asymptotic_p: f64,
}

pub fn observed_statistic(data: &Dataset, test: ExactTest) -> Result<ObservedStatistic> {
    let (null_kind, alt_kind) = test.models();
    let (null_spec, alt_spec) = (data.spec(null_kind), data.spec(alt_kind));
    let df = null_spec.df_against(&alt_spec)?;
    let table = data.to_table();
    let value = lr_statistic(&fit_logit(&table, &null_spec)?, &fit_logit(&table, &alt_spec)?)?;
    Ok(ObservedStatistic {
        statistic: test.statistic_name(),
        null_model: null_kind,
        alt_model: alt_kind,
        value,
        df,
        asymptotic_p: chisq_upper_tail(value, df as u32),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub statistic: &'static str,
    pub null_model: ModelKind,
    pub alt_model: ModelKind,
    pub j_levels: usize,
    pub k_levels: usize,
    pub observed: f64,
    pub df: usize,
    pub asymptotic_p: f64,
    pub exact_p: f64,
    pub samples: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seeds: Vec<u64>,
    pub rng: &'static str,
    pub moveset: String,
    pub moves: usize,
    pub flagged_fits: u64,
    pub histogram: Histogram,
    #[serde(skip)]
    pub values: Vec<f64>,
}

impl TestReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

struct ChainOutput {
    values: Vec<f64>,
    flagged: u64,
    moveset: String,
    moves: usize,
}

fn run_one_chain(data: &Dataset, test: ExactTest, choice: MoveSetChoice, cfg: &ChainConfig) -> Result<ChainOutput> {
    let (null_kind, alt_kind) = test.models();
    let lr = LrTest::new(data.spec(null_kind), data.spec(alt_kind))?;
    let table = data.to_table();
    let flagged = Cell::new(0u64);
    let failure = RefCell::new(None);
    let stat = |t: &Table| match lr.evaluate(t) {
        Ok(v) => {
            if v.flagged {
                flagged.set(flagged.get() + 1);
            }
            v.value
        }
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let (values, moveset, moves) = match test {
        ExactTest::GoodnessOfFit => {
            let set = match choice {
                MoveSetChoice::Full => bivariate_lifted_moves(data.j_levels, data.k_levels)?,
                MoveSetChoice::Unit => bivariate_unit_moves(data.j_levels, data.k_levels)?,
            };
            let max = table.total() as usize;
            let trace = run_chain_traced(&table, &set, &TargetWeight::binomial(max), stat, cfg)?;
            (trace.values, set.source().to_string(), set.len())
        }
        ExactTest::Alpha | ExactTest::Beta => {
            let which = if test == ExactTest::Alpha {
                SubmodelNull::AlphaZero
            } else {
                SubmodelNull::BetaZero
            };
            let margin_moves = match choice {
                MoveSetChoice::Full => MarginMoves::Full,
                MoveSetChoice::Unit => MarginMoves::Adjacent,
            };
            let mut sampler = SubmodelNullSampler::new(&table, which, margin_moves)?;
            let mut rng = chain_rng(cfg.seed);
            sampler.advance(cfg.burn_in, &mut rng)?;
            let mut values = Vec::with_capacity(cfg.samples as usize);
            for _ in 0..cfg.samples {
                sampler.advance(cfg.thin, &mut rng)?;
                values.push(stat(&sampler.draw(&mut rng)));
            }
            let tag = sampler.move_source().map_or_else(|| "none".to_string(), |s| s.to_string());
            let moves = sampler.move_count();
            (values, tag, moves)
        }
    };
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(ChainOutput {
        values,
        flagged: flagged.get(),
        moveset,
        moves,
    })
}

pub fn run_exact_test(data: &Dataset, test: ExactTest, moveset: MoveSetChoice, cfg: &ChainConfig) -> Result<TestReport> {
    run_exact_test_chains(data, test, moveset, cfg, 1, DEFAULT_BIN_WIDTH)
}

/// Runs `chains` independent chains with seeds `cfg.seed + i` on separate
/// threads and pools their draws in seed order.
pub fn run_exact_test_chains(
    data: &Dataset,
    test: ExactTest,
    moveset: MoveSetChoice,
    cfg: &ChainConfig,
    chains: usize,
    bin_width: f64,
) -> Result<TestReport> {
    let cfg = cfg.validated()?;
    if chains == 0 {
        return Err(Error::Domain("at least one chain is required".into()));
    }
    data.require_trials()?;
    let observed = observed_statistic(data, test)?;
    let seeds: Vec<u64> = (0..chains as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    let outputs: Vec<Result<ChainOutput>> = if chains == 1 {
        vec![run_one_chain(data, test, moveset, &cfg)]
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = seeds
                .iter()
                .map(|&seed| {
                    let cfg = cfg.with_seed(seed);
                    scope.spawn(move || run_one_chain(data, test, moveset, &cfg))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("chain thread panicked"))
                .collect()
        })
    };
    let mut values = Vec::with_capacity(chains * cfg.samples as usize);
    let mut flagged = 0;
    let mut tag = String::new();
    let mut moves = 0;
    for out in outputs {
        let out = out?;
        values.extend(out.values);
        flagged += out.flagged;
        tag = out.moveset;
        moves = out.moves;
    }
    Ok(TestReport {
        statistic: observed.statistic,
        null_model: observed.null_model,
        alt_model: observed.alt_model,
        j_levels: data.j_levels,
        k_levels: data.k_levels,
        observed: observed.value,
        df: observed.df,
        asymptotic_p: observed.asymptotic_p,
        exact_p: estimate_pvalue(&values, observed.value)?,
        samples: values.len() as u64,
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        seeds,
        rng: RNG_NAME,
        moveset: tag,
        moves,
        flagged_fits: flagged,
        histogram: Histogram::from_samples(&values, bin_width)?,
        values,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the JSON report and the `bin_left,count` histogram.
pub fn emit_report(report: &TestReport, json_path: &Path, histogram_path: Option<&Path>) -> Result<()> {
    write_file(json_path, &report.to_json())?;
    if let Some(path) = histogram_path {
        write_file(path, &report.histogram.to_csv())?;
    }
    Ok(())
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_output(path: &Path, contents: &str) -> Result<()> {
    write_file(path, contents)
}

/// Process exit code for an error: 1 for input problems, 3 for numeric ones.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::NonConvergence(_) | Error::Numeric(_) | Error::Overflow(_) | Error::Resource(_) => 3,
        _ => 1,
    }
}
