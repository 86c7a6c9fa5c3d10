use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use fiberwalk::cli::{
    exit_code, observed_statistic, read_file, run_exact_test_chains, write_output, Dataset, ExactTest, MoveSetChoice,
};
use fiberwalk::fiber::{verify_connectivity_theorem, Theorem, DEFAULT_NODE_LIMIT};
use fiberwalk::glm::{fit_logit, FitResult, ModelKind};
use fiberwalk::mcmc::{trace_csv, ChainConfig};
use fiberwalk::movesets::{
    bivariate_lifted_moves, bivariate_unit_moves, lifted_poisson_moves, multiway_segre_basis, poisson_moves,
    segre_markov_basis, univariate_adjacent_moves, MoveSet,
};
use fiberwalk::{Error, Result};

/// Markov bases and exact conditional tests for logistic regression on
/// equally spaced covariate levels.
#[derive(Parser, Debug)]
#[command(name = "fiberwalk", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 50_000)]
    burn_in: u64,
    #[arg(long, global = true, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, global = true, default_value_t = 1)]
    thin: u64,
    #[arg(long, global = true, value_enum, default_value_t = MoveSetArg::Full)]
    moveset: MoveSetArg,
    /// Input dataset format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Grid)]
    format: Format,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MoveSetArg {
    Full,
    Unit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Grid,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SetArg {
    Poisson,
    LiftedPoisson,
    Adjacent,
    Segre,
    Multiway,
    BivariateLifted,
    BivariateUnit,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TestArg {
    Alpha,
    Beta,
    Gof,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Linear,
    Anova,
    JOnly,
    KOnly,
    Intercept,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TheoremArg {
    Prop1,
    Thm1,
    Thm2,
    Thm3,
    ConjB02,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print a move set as CSV.
    Moves {
        #[arg(long, value_enum)]
        set: SetArg,
        /// Level counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long)]
        count_only: bool,
    },
    /// Fit logit models and print them as JSON.
    Fit {
        data: PathBuf,
        /// Fit one model; by default all five plus the LR statistics.
        #[arg(long, value_enum)]
        model: Option<ModelArg>,
    },
    /// Exact conditional test by Markov chain Monte Carlo.
    Test {
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = TestArg::Gof)]
        test: TestArg,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        #[arg(long, default_value_t = fiberwalk::cli::DEFAULT_BIN_WIDTH)]
        bin_width: f64,
        /// Histogram CSV destination.
        #[arg(long)]
        histogram: Option<PathBuf>,
        /// Statistic trace CSV destination.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check a connectivity theorem on every fiber up to a cap.
    Verify {
        #[arg(long, value_enum)]
        theorem: TheoremArg,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 2)]
        cap: i64,
        #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
        node_limit: usize,
        /// Counterexample CSV destination.
        #[arg(long)]
        counterexample: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_output(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path, format: Format) -> Result<Dataset> {
    let text = read_file(path)?;
    match format {
        Format::Grid => Dataset::parse_grid(&text),
        Format::Csv => Dataset::parse_long_csv(&text),
    }
}

fn model_kind(m: ModelArg) -> ModelKind {
    match m {
        ModelArg::Linear => ModelKind::LinearBivariate,
        ModelArg::Anova => ModelKind::Anova,
        ModelArg::JOnly => ModelKind::LinearJOnly,
        ModelArg::KOnly => ModelKind::LinearKOnly,
        ModelArg::Intercept => ModelKind::InterceptOnly,
    }
}

fn fit_or_best(data: &Dataset, kind: ModelKind) -> Result<FitResult> {
    match fit_logit(&data.to_table(), &data.spec(kind)) {
        Err(Error::NonConvergence(best)) => Ok(*best),
        other => other,
    }
}

fn build_moves(set: SetArg, sizes: &[usize]) -> Result<MoveSet> {
    let want = |n: usize| {
        if sizes.len() == n {
            Ok(())
        } else {
            Err(Error::Domain(format!("{set:?} takes {n} size(s), got {}", sizes.len())))
        }
    };
    match set {
        SetArg::Poisson => want(1).and_then(|_| poisson_moves(sizes[0])),
        SetArg::LiftedPoisson => want(1).and_then(|_| lifted_poisson_moves(sizes[0])),
        SetArg::Adjacent => want(1).and_then(|_| univariate_adjacent_moves(sizes[0])),
        SetArg::Segre => {
            want(2)?;
            segre_markov_basis(&poisson_moves(sizes[0])?, &poisson_moves(sizes[1])?, sizes[0], sizes[1])
        }
        SetArg::Multiway => {
            let bases = sizes.iter().map(|&n| poisson_moves(n)).collect::<Result<Vec<_>>>()?;
            multiway_segre_basis(&bases, sizes)
        }
        SetArg::BivariateLifted => want(2).and_then(|_| bivariate_lifted_moves(sizes[0], sizes[1])),
        SetArg::BivariateUnit => want(2).and_then(|_| bivariate_unit_moves(sizes[0], sizes[1])),
    }
}

fn run(cli: Cli) -> Result<u8> {
    let g = &cli.global;
    let out = g.out.as_deref();
    match cli.command {
        Command::Moves { set, sizes, count_only } => {
            let moves = build_moves(set, &sizes)?;
            if count_only {
                emit(out, &format!("{}\n", moves.len()))?;
            } else {
                emit(out, &moves.to_csv())?;
            }
            Ok(0)
        }
        Command::Fit { data, model } => {
            let data = load(&data, g.format)?;
            let value = match model {
                Some(m) => serde_json::to_value(fit_or_best(&data, model_kind(m))?),
                None => {
                    let fits = ModelKind::ALL
                        .iter()
                        .map(|&k| fit_or_best(&data, k))
                        .collect::<Result<Vec<_>>>()?;
                    let stats = [ExactTest::Alpha, ExactTest::Beta, ExactTest::GoodnessOfFit]
                        .iter()
                        .map(|&t| observed_statistic(&data, t))
                        .collect::<Result<Vec<_>>>()?;
                    Ok(json!({ "j_levels": data.j_levels, "k_levels": data.k_levels, "fits": fits, "statistics": stats }))
                }
            }
            .expect("fit results serialize");
            let mut text = serde_json::to_string_pretty(&value).expect("json value serializes");
            text.push('\n');
            emit(out, &text)?;
            Ok(0)
        }
        Command::Test {
            data,
            test,
            chains,
            bin_width,
            histogram,
            trace,
        } => {
            let data = load(&data, g.format)?;
            let cfg = ChainConfig::new(g.burn_in, g.samples, g.seed)?.with_thin(g.thin)?;
            let test = match test {
                TestArg::Alpha => ExactTest::Alpha,
                TestArg::Beta => ExactTest::Beta,
                TestArg::Gof => ExactTest::GoodnessOfFit,
            };
            let moveset = match g.moveset {
                MoveSetArg::Full => MoveSetChoice::Full,
                MoveSetArg::Unit => MoveSetChoice::Unit,
            };
            let report = run_exact_test_chains(&data, test, moveset, &cfg, chains, bin_width)?;
            emit(out, &report.to_json())?;
            if let Some(path) = histogram {
                write_output(&path, &report.histogram.to_csv())?;
            }
            if let Some(path) = trace {
                write_output(&path, &trace_csv(&report.values))?;
            }
            Ok(0)
        }
        Command::Verify {
            theorem,
            sizes,
            cap,
            node_limit,
            counterexample,
        } => {
            let theorem = match theorem {
                TheoremArg::Prop1 => Theorem::Prop1,
                TheoremArg::Thm1 => Theorem::Thm1,
                TheoremArg::Thm2 => Theorem::Thm2,
                TheoremArg::Thm3 => Theorem::Thm3,
                TheoremArg::ConjB02 => Theorem::ConjB02,
            };
            let report = verify_connectivity_theorem(theorem, &sizes, cap, node_limit)?;
            let value = json!({
                "theorem": report.theorem,
                "sizes": report.sizes,
                "cap": report.cap,
                "moves": report.moves,
                "fibers_checked": report.fibers_checked,
                "tables_checked": report.tables_checked,
                "largest_fiber": report.largest_fiber,
                "disconnected_fibers": report.disconnected_fibers,
                "holds": report.holds(),
            });
            let mut text = serde_json::to_string_pretty(&value).expect("json value serializes");
            text.push('\n');
            emit(out, &text)?;
            if let (Some(path), Some(ce)) = (counterexample, &report.first_counterexample) {
                write_output(&path, &ce.to_csv())?;
            }
            Ok(if report.holds() { 0 } else { 2 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
