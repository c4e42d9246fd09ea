use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use price_response::market_data::MarketWindow;
use price_response::midpoint::ReturnKind;
use price_response::response::Weighting;
use price_response::shift::ShiftScale;
use price_response::synth::{ImpactKernel, TradesPerSecond};

#[derive(Parser, Debug)]
#[command(name = "price-response", version, about = "Price response functions from trades-and-quotes data")]
pub struct Cli {
    /// Flat `key = value` file with default flag values; flags given on the
    /// command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Validate one stock's quote and trade files and write per-day midpoint
    /// and sign series.
    Ingest(IngestArgs),
    /// Generate a synthetic market with known signs and response.
    Synth(SynthArgs),
    /// Classify trades with the tick rule and write per-day sign files.
    Signs(SignsArgs),
    /// Self- or cross-response curve.
    Response(ResponseArgs),
    /// Response as a function of the shift between return anchor and sign.
    ShiftScan(ShiftScanArgs),
    /// Short/long split at a pivot lag plus a shuffled-sign baseline.
    Decompose(DecomposeArgs),
    /// Average spreads, spread bands and band-averaged responses.
    SpreadGroups(SpreadGroupsArgs),
    /// Data-quality and sampling statistics for one stock.
    Diagnose(DiagnoseArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Synth(_) => "synth",
            Command::Signs(_) => "signs",
            Command::Response(_) => "response",
            Command::ShiftScan(_) => "shift-scan",
            Command::Decompose(_) => "decompose",
            Command::SpreadGroups(_) => "spread-groups",
            Command::Diagnose(_) => "diagnose",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OutArgs {
    /// Output directory.
    #[arg(long, env = "PRICE_RESPONSE_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WindowArgs {
    /// Intraday window, half-open.
    #[arg(long, default_value = "09:40:00-15:50:00")]
    pub window: MarketWindow,

    /// Field delimiter of the input files.
    #[arg(long, default_value = ",")]
    pub delimiter: char,

    /// Continue the tick rule across days from the previous day's last sign.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub carry_signs: bool,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DataArgs {
    /// Directory with `<SYM>.quotes.csv` and `<SYM>.trades.csv`.
    #[arg(long, default_value = ".")]
    pub data: PathBuf,

    /// Universe manifest (`symbol,quotes,trades`); takes precedence over --data.
    #[arg(long)]
    pub universe: Option<PathBuf>,

    #[command(flatten)]
    pub window: WindowArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EstimatorArgs {
    #[arg(long, default_value_t = 1000)]
    pub tau_max: u32,

    /// Leave seconds whose trades cancel out of the physical denominator.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub exclude_zero: bool,

    #[arg(long, default_value = "relative")]
    pub return_kind: ReturnKind,
}

#[derive(Args, Debug, Serialize)]
pub struct IngestArgs {
    #[arg(long)]
    pub quotes: PathBuf,
    #[arg(long)]
    pub trades: PathBuf,
    /// Name used for the output subdirectory.
    #[arg(long, default_value = "STOCK")]
    pub symbol: String,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SignsArgs {
    #[arg(long)]
    pub trades: PathBuf,
    #[arg(long, default_value = "STOCK")]
    pub symbol: String,
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SynthArgs {
    /// Comma-separated symbols, one market each.
    #[arg(long, value_delimiter = ',', default_value = "SYN")]
    pub symbols: Vec<String>,
    #[arg(long, default_value_t = 4)]
    pub days: usize,
    /// Seconds per day.
    #[arg(long, default_value_t = 22_200)]
    pub seconds: u32,
    /// Probability that a trade repeats the previous sign.
    #[arg(long, default_value_t = 0.7)]
    pub p: f64,
    /// Log-price step per trade; one value or one per symbol.
    #[arg(long, value_delimiter = ',', default_value = "1e-4")]
    pub lambda: Vec<f64>,
    /// Per-second log-price noise.
    #[arg(long, default_value_t = 1e-4)]
    pub sigma: f64,
    /// `fixed:<k>` or `geometric:<mean>`.
    #[arg(long, default_value = "fixed:1")]
    pub trades_per_second: TradesPerSecond,
    /// `permanent` or `transient:<decay seconds>`.
    #[arg(long, default_value = "permanent")]
    pub kernel: ImpactKernel,
    #[arg(long, default_value_t = 0.01)]
    pub tick: f64,
    /// Quoted spread in dollars; one value or one per symbol.
    #[arg(long, value_delimiter = ',', default_value = "0.02")]
    pub spread: Vec<f64>,
    #[arg(long, default_value_t = 100.0)]
    pub price: f64,
    /// First second of every day.
    #[arg(long, default_value = "09:40:00")]
    pub open: String,
    #[arg(long, default_value = "2008-01-02")]
    pub start_day: String,
    /// Base seed; symbol `k` (0-based) uses `seed + k`.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Largest lag of the expected-response file.
    #[arg(long, default_value_t = 1000)]
    pub tau_max: u32,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct PairArgs {
    /// Stock whose midpoint returns are measured.
    #[arg(long)]
    pub i: String,
    /// Stock whose trade signs are used; defaults to `--i`.
    #[arg(long)]
    pub j: Option<String>,
}

impl PairArgs {
    pub fn j(&self) -> &str {
        self.j.as_deref().unwrap_or(&self.i)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleArg {
    Trade,
    Physical,
    Activity,
}

impl From<ScaleArg> for Weighting {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Trade => Weighting::Trade,
            ScaleArg::Physical => Weighting::Physical,
            ScaleArg::Activity => Weighting::Activity,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ResponseArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_enum, default_value = "physical")]
    pub scale: ScaleArg,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanModeArg {
    /// `--value` is the lag, the grid runs over shifts.
    FixedTau,
    /// `--value` is the shift, the grid runs over lags.
    FixedShift,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClockArg {
    Trade,
    Physical,
}

impl From<ClockArg> for ShiftScale {
    fn from(c: ClockArg) -> Self {
        match c {
            ClockArg::Trade => ShiftScale::Trade,
            ClockArg::Physical => ShiftScale::Physical,
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ShiftScanArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, value_enum)]
    pub mode: ScanModeArg,
    /// Fixed lag or fixed shift, depending on `--mode`.
    #[arg(long, allow_negative_numbers = true)]
    pub value: i64,
    /// `start:stop:step` (stop inclusive) or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: String,
    /// Clock of lags and shifts.
    #[arg(long, value_enum, default_value = "physical")]
    pub scale: ClockArg,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub pair: PairArgs,
    #[arg(long, default_value_t = price_response::decompose::DEFAULT_TAU_PRIME)]
    pub tau_prime: u32,
    #[arg(long, value_enum, default_value = "physical")]
    pub scale: ScaleArg,
    #[arg(long, default_value_t = 1000)]
    pub tau_max: u32,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub exclude_zero: bool,
    #[arg(long, default_value = "logarithmic")]
    pub return_kind: ReturnKind,
    /// Seed of the sign shuffle.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct SpreadGroupsArgs {
    /// Symbols to group; defaults to every stock of the universe manifest.
    #[arg(long, value_delimiter = ',')]
    pub symbols: Vec<String>,
    /// Band edges in dollars, strictly increasing.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.10,0.40")]
    pub thresholds: Vec<f64>,
    #[arg(long, value_enum, default_value = "physical")]
    pub scale: ScaleArg,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub i: String,
    /// Largest lag of the sign autocorrelation.
    #[arg(long, default_value_t = 20)]
    pub max_lag: usize,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub out: OutArgs,
}
