//! Runs the code samples of the guide in `book/` as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/market-data.md")]
pub mod market_data {}

#[doc = include_str!("../../../book/src/midpoints.md")]
pub mod midpoints {}

#[doc = include_str!("../../../book/src/signs.md")]
pub mod signs {}

#[doc = include_str!("../../../book/src/response.md")]
pub mod response {}

#[doc = include_str!("../../../book/src/shift.md")]
pub mod shift {}

#[doc = include_str!("../../../book/src/decompose.md")]
pub mod decompose {}

#[doc = include_str!("../../../book/src/spread.md")]
pub mod spread {}

#[doc = include_str!("../../../book/src/synth.md")]
pub mod synth {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
