//! Strike × correlation × maturity sweeps comparing the closed-form
//! approximations against the Monte Carlo benchmark.

use std::fmt;

use rayon::prelude::*;

use crate::analytic::{kirk_price, modified_kirk_price, Contract, MarketInputs};
use crate::error::{Error, Result};
use crate::mc::{mc_price_strikes, McConfig, PriceEstimate};
use crate::rng::derive_key;

pub const REFERENCE_RHOS: [f64; 5] = [0.80, 0.85, 0.90, 0.95, 0.999];
pub const REFERENCE_MATURITIES: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub strikes: Vec<f64>,
    pub rhos: Vec<f64>,
    pub maturities: Vec<f64>,
    /// Spots, vols and rate; its `rho` is overridden per slice.
    pub base_market: MarketInputs,
    pub mc: McConfig,
    /// Reuse one set of draws for every strike of a (rho, T) slice.
    pub draw_reuse: bool,
}

impl GridSpec {
    /// Reference sweep: K = 0..=20 over the default correlations and maturities.
    pub fn reference(mc: McConfig) -> Self {
        GridSpec {
            strikes: (0..=20).map(f64::from).collect(),
            rhos: REFERENCE_RHOS.to_vec(),
            maturities: REFERENCE_MATURITIES.to_vec(),
            base_market: MarketInputs::default(),
            mc,
            draw_reuse: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_axis("strikes", &self.strikes)?;
        check_axis("rhos", &self.rhos)?;
        check_axis("maturities", &self.maturities)?;
        self.base_market.validate()?;
        self.mc.validate()?;
        for &k in &self.strikes {
            Contract::new(k, 1.0)?;
        }
        for &rho in &self.rhos {
            self.base_market.with_rho(rho).validate()?;
        }
        for &t in &self.maturities {
            Contract::new(0.0, t)?;
        }
        Ok(())
    }

    pub fn n_slices(&self) -> usize {
        self.rhos.len() * self.maturities.len()
    }

    pub fn n_cells(&self) -> usize {
        self.n_slices() * self.strikes.len()
    }

    /// (rho, maturity) of slice `index`; maturity is the outer axis.
    pub fn slice_coords(&self, index: usize) -> (f64, f64) {
        let n_rho = self.rhos.len();
        (self.rhos[index % n_rho], self.maturities[index / n_rho])
    }
}

#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn check_axis(name: &'static str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(name, f64::NAN, "a non-empty list"));
    }
    if let Some(w) = values.windows(2).find(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(name, w[1], "strictly increasing"));
    }
    Ok(())
}

/// Why a cell field is undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellFlag {
    /// Monte Carlo mean is zero, so percentage errors are undefined.
    BenchmarkZero,
    KirkUndefined,
    ModifiedDegenerate,
    ModifiedCollapsed,
}

impl CellFlag {
    pub fn token(self) -> &'static str {
        match self {
            CellFlag::BenchmarkZero => "benchmark_zero",
            CellFlag::KirkUndefined => "kirk_undefined",
            CellFlag::ModifiedDegenerate => "modified_degenerate",
            CellFlag::ModifiedCollapsed => "modified_collapsed",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        [
            CellFlag::BenchmarkZero,
            CellFlag::KirkUndefined,
            CellFlag::ModifiedDegenerate,
            CellFlag::ModifiedCollapsed,
        ]
        .into_iter()
        .find(|f| f.token() == token)
    }
}

impl fmt::Display for CellFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub strike: f64,
    pub rho: f64,
    pub maturity: f64,
    pub mc_mean: f64,
    pub mc_std_error: f64,
    pub kirk: Option<f64>,
    pub modified_kirk: Option<f64>,
    pub err_kirk_pct: Option<f64>,
    pub err_modified_pct: Option<f64>,
    pub flags: Vec<CellFlag>,
}

impl GridCell {
    fn build(
        market: &MarketInputs,
        strike: f64,
        maturity: f64,
        estimate: &PriceEstimate,
    ) -> GridCell {
        let contract = Contract { strike, maturity };
        let mut flags = Vec::new();
        let kirk = kirk_price(market, &contract)
            .map_err(|_| flags.push(CellFlag::KirkUndefined))
            .ok();
        let modified_kirk = match modified_kirk_price(market, &contract) {
            Ok(p) => Some(p),
            Err(Error::CollapsedVolatility(_)) => {
                flags.push(CellFlag::ModifiedCollapsed);
                None
            }
            Err(_) => {
                flags.push(CellFlag::ModifiedDegenerate);
                None
            }
        };
        if estimate.mean <= 0.0 {
            flags.push(CellFlag::BenchmarkZero);
        }
        let err = |approx: Option<f64>| approx.and_then(|a| error_pct(a, estimate.mean).ok());
        flags.sort();
        GridCell {
            strike,
            rho: market.rho,
            maturity,
            mc_mean: estimate.mean,
            mc_std_error: estimate.std_error,
            kirk,
            modified_kirk,
            err_kirk_pct: err(kirk),
            err_modified_pct: err(modified_kirk),
            flags,
        }
    }
}

/// Signed percentage error `approx·100/benchmark − 100`.
pub fn error_pct(approx: f64, benchmark: f64) -> Result<f64> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    if !(benchmark > 0.0) {
        return Err(Error::NonPositiveBenchmark(benchmark));
    }
    Ok(approx * 100.0 / benchmark - 100.0)
}

/// Evaluates every strike of slice `index`.
pub fn evaluate_slice(spec: &GridSpec, index: usize) -> Result<Vec<GridCell>> {
    let (rho, maturity) = spec.slice_coords(index);
    let market = spec.base_market.with_rho(rho);
    let slice_key = derive_key(spec.mc.seed, index as u64);

    let estimates = if spec.draw_reuse {
        let cfg = McConfig {
            seed: slice_key,
            ..spec.mc
        };
        mc_price_strikes(&market, maturity, &spec.strikes, &cfg)?
    } else {
        spec.strikes
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let cfg = McConfig {
                    seed: derive_key(slice_key, 1 + j as u64),
                    ..spec.mc
                };
                mc_price_strikes(&market, maturity, &[k], &cfg).map(|mut v| v.remove(0))
            })
            .collect::<Result<Vec<_>>>()?
    };

    Ok(spec
        .strikes
        .iter()
        .zip(&estimates)
        .map(|(&k, est)| GridCell::build(&market, k, maturity, est))
        .collect())
}

/// Runs the full sweep. Cells come back maturity-major, then rho, then strike.
pub fn run_grid(spec: &GridSpec) -> Result<Vec<GridCell>> {
    run_grid_with_progress(spec, |_, _| {})
}

/// As [`run_grid`], calling `progress(slice_index, cells)` as slices finish.
pub fn run_grid_with_progress(
    spec: &GridSpec,
    progress: impl Fn(usize, &[GridCell]) + Sync,
) -> Result<Vec<GridCell>> {
    spec.validate()?;
    let slices = (0..spec.n_slices())
        .into_par_iter()
        .map(|i| {
            let cells = evaluate_slice(spec, i)?;
            progress(i, &cells);
            Ok(cells)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(slices.into_iter().flatten().collect())
}

/// Cells of one (rho, maturity) slice, in strike order.
pub fn slice(cells: &[GridCell], rho: f64, maturity: f64) -> Vec<&GridCell> {
    cells
        .iter()
        .filter(|c| same(c.rho, rho) && same(c.maturity, maturity))
        .collect()
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}
