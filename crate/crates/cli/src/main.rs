//! `spread`: price spread options, run Monte Carlo benchmarks and error grids.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spread_core::analytic::price;
use spread_core::grid::{run_grid_with_progress, slice};
use spread_core::normal::two_sided_z;
use spread_core::{
    confidence_interval, mc_price, parse_grid_config, write_grid_csv, Contract, Error, GridSpec,
    MarketInputs, McConfig, Method,
};

const EXIT_USAGE: u8 = 2;
const EXIT_DOMAIN: u8 = 3;
const EXIT_IO: u8 = 4;

const REPRODUCE_PAIRS: u64 = 1_000_000;
const REPRODUCE_FULL_PAIRS: u64 = 5_000_000;

/// Published benchmark cells at T = 0.5: (K, rho, kirk, modified, ci_lower, ci_upper).
const PUBLISHED: [(f64, f64, f64, f64, f64, f64); 4] = [
    (5.0, 0.9, 2.3647228, 2.3626873, 2.357551, 2.363762),
    (5.0, 0.999, 1.2862590, 1.27686463, 1.273913, 1.278092),
    (10.0, 0.9, 1.2745318, 1.2681347, 1.26478, 1.269644),
    (10.0, 0.999, 0.5615868, 0.54140923, 0.5398617, 0.5427516),
];

#[derive(Parser)]
#[command(
    name = "spread",
    version,
    about = "Spread option pricing and benchmarking"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form price of one contract.
    #[command(allow_negative_numbers = true)]
    Price {
        #[command(flatten)]
        market: MarketArgs,
        /// margrabe, kirk or modified-kirk.
        #[arg(long, default_value = "kirk")]
        method: Method,
        /// Strike; not accepted with margrabe. Defaults to 5.
        #[arg(long)]
        strike: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        maturity: f64,
    },
    /// Monte Carlo price with standard error and confidence interval.
    #[command(allow_negative_numbers = true)]
    Mc {
        #[command(flatten)]
        market: MarketArgs,
        #[arg(long, default_value_t = 5.0)]
        strike: f64,
        #[arg(long, default_value_t = 0.5)]
        maturity: f64,
        #[command(flatten)]
        sim: SimArgs,
        /// Confidence level of the reported interval.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Use independent draws instead of antithetic pairs.
        #[arg(long)]
        plain: bool,
    },
    /// Error grid over strike × correlation × maturity, as CSV.
    #[command(allow_negative_numbers = true)]
    Grid {
        /// Grid config file; unset keys take the published defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        market: MarketOverrides,
        #[arg(long)]
        pairs: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// CSV destination; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Published grid at a fixed seed, with the four benchmark cells compared.
    Reproduce {
        /// Run at 5e6 pairs instead of 1e6.
        #[arg(long, conflicts_with = "pairs")]
        full: bool,
        /// Override the number of antithetic pairs.
        #[arg(long)]
        pairs: Option<u64>,
        /// CSV destination; standard output if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct MarketArgs {
    #[arg(long, default_value_t = 100.0)]
    s1: f64,
    #[arg(long, default_value_t = 100.0)]
    s2: f64,
    #[arg(long, default_value_t = 0.3)]
    sigma1: f64,
    #[arg(long, default_value_t = 0.2)]
    sigma2: f64,
    #[arg(long, default_value_t = 0.9)]
    rho: f64,
    #[arg(long, default_value_t = 0.0)]
    r: f64,
}

impl MarketArgs {
    fn market(&self) -> Result<MarketInputs, Error> {
        MarketInputs::new(self.s1, self.s2, self.sigma1, self.sigma2, self.rho, self.r)
    }
}

#[derive(Args)]
struct MarketOverrides {
    #[arg(long)]
    s1: Option<f64>,
    #[arg(long)]
    s2: Option<f64>,
    #[arg(long)]
    sigma1: Option<f64>,
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
}

impl MarketOverrides {
    fn apply(&self, m: &mut MarketInputs) {
        let MarketOverrides {
            s1,
            s2,
            sigma1,
            sigma2,
            r,
        } = *self;
        m.s1_0 = s1.unwrap_or(m.s1_0);
        m.s2_0 = s2.unwrap_or(m.s2_0);
        m.sigma1 = sigma1.unwrap_or(m.sigma1);
        m.sigma2 = sigma2.unwrap_or(m.sigma2);
        m.r = r.unwrap_or(m.r);
    }
}

#[derive(Args)]
struct SimArgs {
    /// Number of antithetic pairs.
    #[arg(long, default_value_t = 100_000)]
    pairs: u64,
    #[arg(long, default_value_t = McConfig::DEFAULT_SEED)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Domain(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput { name, .. } => Failure::Usage(format!("--{name}: {e}")),
            Error::Io { .. } => Failure::Io(e.to_string()),
            e if e.is_usage() => Failure::Usage(e.to_string()),
            e => Failure::Domain(e.to_string()),
        }
    }
}

fn io_failure(what: &Path) -> impl FnOnce(io::Error) -> Failure + '_ {
    move |e| Failure::Io(format!("{}: {e}", what.display()))
}

fn stdout_failure(e: io::Error) -> Failure {
    Failure::Io(format!("standard output: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Domain(m) => (EXIT_DOMAIN, m),
                Failure::Io(m) => (EXIT_IO, m),
            };
            eprintln!("spread: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Price {
            market,
            method,
            strike,
            maturity,
        } => {
            if method == Method::Margrabe && strike.is_some() {
                return Err(Failure::Usage(
                    "--strike: not accepted with --method margrabe (exchange option, K = 0)".into(),
                ));
            }
            let market = market.market()?;
            let default_strike = if method == Method::Margrabe { 0.0 } else { 5.0 };
            let contract = Contract::new(strike.unwrap_or(default_strike), maturity)?;
            let value = price(method, &market, &contract)?;
            writeln!(io::stdout(), "{value:.7}").map_err(stdout_failure)
        }
        Command::Mc {
            market,
            strike,
            maturity,
            sim,
            level,
            plain,
        } => {
            let market = market.market()?;
            let contract = Contract::new(strike, maturity)?;
            let config = McConfig {
                antithetic: !plain,
                ..McConfig::new(sim.pairs, sim.seed)
            };
            config.validate()?;
            two_sided_z(level)?;
            let est = mc_price(&market, &contract, &config)?;
            let (lo, hi) = confidence_interval(&est, level)?;
            let mut out = io::stdout().lock();
            writeln!(
                out,
                "mean {:.7}\nstd_error {:.7}\nci_lower {lo:.7}\nci_upper {hi:.7}\nlevel {level}\nsamples {}\npayoffs {}",
                est.mean,
                est.std_error,
                est.n_effective,
                config.total_payoffs()
            )
            .map_err(stdout_failure)
        }
        Command::Grid {
            config,
            market,
            pairs,
            seed,
            out,
        } => {
            let mut spec = match &config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(io_failure(path))?;
                    parse_grid_config(&text).map_err(|e| match e {
                        Error::Config { line, message } => Failure::Usage(format!(
                            "--config {}: line {line}: {message}",
                            path.display()
                        )),
                        e => e.into(),
                    })?
                }
                None => GridSpec::reference(McConfig::default()),
            };
            market.apply(&mut spec.base_market);
            spec.mc.n_pairs = pairs.unwrap_or(spec.mc.n_pairs);
            spec.mc.seed = seed.unwrap_or(spec.mc.seed);
            let sink = open_sink(out.as_deref())?;
            let cells = grid(&spec)?;
            emit_csv(&cells, sink)
        }
        Command::Reproduce { full, pairs, out } => {
            let n_pairs = match (full, pairs) {
                (true, _) => REPRODUCE_FULL_PAIRS,
                (false, Some(n)) => n,
                (false, None) => REPRODUCE_PAIRS,
            };
            let spec = GridSpec::reference(McConfig::new(n_pairs, McConfig::DEFAULT_SEED));
            let sink = open_sink(out.as_deref())?;
            let cells = grid(&spec)?;
            emit_csv(&cells, sink)?;
            report_published(&spec, &cells).map_err(stdout_failure)
        }
    }
}

fn grid(spec: &GridSpec) -> Result<Vec<spread_core::GridCell>, Failure> {
    spec.validate()?;
    let n = spec.n_slices();
    eprintln!(
        "grid: {} cells in {n} slices, {} pairs, seed {}",
        spec.n_cells(),
        spec.mc.n_pairs,
        spec.mc.seed
    );
    Ok(run_grid_with_progress(spec, |i, _| {
        let (rho, t) = spec.slice_coords(i);
        eprintln!("slice {}/{n} rho={rho} T={t} done", i + 1);
    })?)
}

/// CSV destination, opened before any computation so a bad path fails fast.
enum Sink {
    File(PathBuf, BufWriter<File>),
    Stdout,
}

fn open_sink(out: Option<&Path>) -> Result<Sink, Failure> {
    Ok(match out {
        Some(path) => {
            let file = File::create(path).map_err(io_failure(path))?;
            Sink::File(path.to_path_buf(), BufWriter::new(file))
        }
        None => Sink::Stdout,
    })
}

fn emit_csv(cells: &[spread_core::GridCell], sink: Sink) -> Result<(), Failure> {
    match sink {
        Sink::File(path, file) => {
            write_grid_csv(cells, file).map_err(|e| match e {
                Error::Io {
                    rows_written,
                    source,
                } => Failure::Io(format!(
                    "{}: {source} after {rows_written} rows",
                    path.display()
                )),
                e => e.into(),
            })?;
        }
        Sink::Stdout => {
            write_grid_csv(cells, io::stdout().lock())?;
        }
    }
    Ok(())
}

/// Writes the comparison block as `#`-prefixed lines so CSV readers can skip it.
fn report_published(spec: &GridSpec, cells: &[spread_core::GridCell]) -> io::Result<()> {
    let z = two_sided_z(0.95).expect("0.95 is a valid level");
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "# published cells at T=0.5, {} pairs, seed {}",
        spec.mc.n_pairs, spec.mc.seed
    )?;
    writeln!(
        out,
        "# K,rho,kirk,kirk_published,modified_kirk,modified_published,mc_mean,ci_lower,ci_upper,ci_published"
    )?;
    for (k, rho, kirk, modified, lo, hi) in PUBLISHED {
        let cell = slice(cells, rho, 0.5)
            .into_iter()
            .find(|c| c.strike == k)
            .expect("published cell is on the default grid");
        let half = z * cell.mc_std_error;
        writeln!(
            out,
            "# {k},{rho},{:.7},{kirk},{:.7},{modified},{:.7},{:.7},{:.7},[{lo}; {hi}]",
            cell.kirk.unwrap_or(f64::NAN),
            cell.modified_kirk.unwrap_or(f64::NAN),
            cell.mc_mean,
            cell.mc_mean - half,
            cell.mc_mean + half,
        )?;
    }
    Ok(())
}
