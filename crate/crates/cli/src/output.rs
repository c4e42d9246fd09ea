//! Output files and the run manifest.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use price_response::dataset::StockData;
use price_response::response::ResponseCurve;

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()
    })();
    match result {
        Ok(()) => fs::rename(&tmp, path),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

/// Shortest round-trip text of a value, `NaN` when absent.
pub fn num(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:e}"),
        None => "NaN".into(),
    }
}

/// `tau,value,count,stderr`, one row per lag of the curve.
pub fn write_curve_csv(w: &mut dyn Write, c: &ResponseCurve) -> io::Result<()> {
    writeln!(w, "tau,value,count,stderr")?;
    for k in 0..c.len() {
        writeln!(w, "{},{},{},{}", c.lags[k], num(c.values[k]), c.counts[k], num(c.stderr[k]))?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(w: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)
}

/// Collects everything written during a run.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<PathBuf>,
}

impl Outputs {
    pub fn write(&mut self, path: PathBuf, fill: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> io::Result<()> {
        write_atomic(&path, fill)?;
        self.files.push(path);
        Ok(())
    }

    /// Writes the curve as `<stem>.csv` and `<stem>.json`.
    pub fn curve(&mut self, dir: &Path, stem: &str, c: &ResponseCurve) -> io::Result<()> {
        self.write(dir.join(format!("{stem}.csv")), |w| write_curve_csv(w, c))?;
        self.write(dir.join(format!("{stem}.json")), |w| write_json(w, c))
    }
}

#[derive(Debug, Serialize)]
pub struct InputRecord {
    pub symbol: String,
    pub quotes: Option<PathBuf>,
    pub trades: Option<PathBuf>,
    pub days: usize,
    pub quote_rows: usize,
    pub trade_rows: usize,
    pub quote_rejects: usize,
    pub trade_rejects: usize,
    pub quotes_in_window: usize,
    pub trades_in_window: usize,
    pub unresolved_trades: usize,
    pub days_without_quotes: usize,
}

impl InputRecord {
    pub fn from_stock(s: &StockData, quotes: Option<&Path>, trades: Option<&Path>) -> Self {
        let r = &s.report;
        Self {
            symbol: s.symbol.clone(),
            quotes: quotes.map(Path::to_path_buf),
            trades: trades.map(Path::to_path_buf),
            days: s.mids.len(),
            quote_rows: r.quote_rows,
            trade_rows: r.trade_rows,
            quote_rejects: r.quote_rejects.len(),
            trade_rejects: r.trade_rejects.len(),
            quotes_in_window: r.quotes_in_window,
            trades_in_window: r.trades_in_window,
            unresolved_trades: r.unresolved_trades,
            days_without_quotes: r.days_without_quotes.len(),
        }
    }
}

/// Machine-readable record of one run. `argv` holds the effective arguments
/// with configuration-file values already folded in, so replaying it
/// reproduces the outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub argv: Vec<String>,
    pub config_file: Option<String>,
    pub workers: usize,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
    pub summary: serde_json::Value,
}
