//! Spread option pricing.
//!
//! Closed-form Margrabe, Kirk and skew-corrected ("modified") Kirk prices for
//! the two-asset spread call `(S1(T) − S2(T) − K)+`, a reproducible antithetic
//! Monte Carlo benchmark, and strike × correlation × maturity error sweeps.
//!
//! ```
//! use spread_core::{kirk_price, modified_kirk_price, Contract, MarketInputs};
//!
//! let market = MarketInputs::new(100.0, 100.0, 0.3, 0.2, 0.999, 0.0).unwrap();
//! let contract = Contract::new(10.0, 0.5).unwrap();
//! let kirk = kirk_price(&market, &contract).unwrap();
//! let modified = modified_kirk_price(&market, &contract).unwrap();
//! assert!((kirk - 0.5615868).abs() < 1e-6);
//! assert!((modified - 0.54140923).abs() < 1e-6);
//! ```

pub mod analytic;
pub mod error;
pub mod grid;
pub mod io;
pub mod mc;
pub mod normal;
pub mod rng;

pub use analytic::{
    kirk_price, kirk_vol, margrabe_price, modified_kirk_price, modified_kirk_vol, AnalyticTerms,
    Contract, MarketInputs, Method,
};
pub use error::{Error, Result};
pub use grid::{error_pct, run_grid, CellFlag, GridCell, GridSpec};
pub use io::{parse_grid_config, write_figure_data, write_grid_csv};
pub use mc::{
    confidence_interval, correlate, draw_normals, mc_price, spread_payoff, terminal_value,
    McConfig, NormalDraws, PriceEstimate,
};
pub use normal::std_normal_cdf;
