//! Price response functions for trades-and-quotes tick data.
//!
//! The crate turns raw quote and trade records into per-second midpoint and
//! trade-sign series and measures how a stock's midpoint moves after trades,
//! either its own (self-response) or another stock's (cross-response):
//!
//! * [`market_data`] parses and validates the text files and applies the
//!   intraday market window.
//! * [`midpoint`] samples the last midpoint of every second and computes
//!   returns.
//! * [`signs`] classifies trades with the tick rule and aggregates them per
//!   second.
//! * [`response`] holds the trade-scale, physical and activity estimators and
//!   their brute-force oracle.
//! * [`shift`] moves the return anchor relative to the sign, on either clock.
//! * [`decompose`] splits responses into immediate and late parts and builds
//!   the shuffled-sign baseline.
//! * [`spread`] groups stocks by average spread and averages their curves.
//! * [`synth`] generates markets with known signs and a known response.
//!
//! ```
//! use price_response::synth::{generate, SynthParams};
//! use price_response::dataset::StockData;
//! use price_response::response::{response_physical, EstimatorConfig};
//!
//! let params = SynthParams { days: 2, seconds_per_day: 2_000, ..SynthParams::default() };
//! let market = generate(&params).unwrap();
//! let stock = StockData::from_events("SYN", &market.quotes, &market.trades, &params.window(), false).unwrap();
//! let curve = response_physical(&stock.mids, &stock.signs, &EstimatorConfig::with_tau_max(20)).unwrap();
//! assert!(curve.value_at(1).unwrap() > 0.0);
//! ```

pub mod dataset;
pub mod decompose;
pub mod error;
pub mod market_data;
pub mod midpoint;
pub mod response;
pub mod shift;
pub mod signs;
pub mod spread;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
