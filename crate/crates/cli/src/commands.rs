use std::collections::BTreeMap;
use std::error::Error;
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use price_response::dataset::{read_universe, write_universe, StockData, UniverseEntry};
use price_response::decompose::{decompose_response, shuffled_sign_baseline, DecomposeConfig};
use price_response::market_data::{
    filter_market_time, parse_day, parse_quotes, parse_time, parse_trades, split_by_day, write_quotes, write_trades,
    FormatConfig, TradeEvent,
};
use price_response::midpoint::{midpoint_sampling_diagnostic, write_midpoints};
use price_response::response::{response, EstimatorConfig, ResponseCurve, Weighting};
use price_response::shift::{parse_grid, run_shift_scan, ScanConfig, ScanMode};
use price_response::signs::{build_sign_series, write_signs, Sign, SignSeries};
use price_response::spread::{assign_groups, average_spread, group_average_response};
use price_response::synth::{generate, sign_autocorrelation, theoretical_response, write_truth, SynthParams};

use crate::args::*;
use crate::output::{num, write_json, InputRecord, Outputs};

pub type CmdResult<T> = Result<T, Box<dyn Error + Send + Sync>>;

/// What a subcommand produced, for the manifest.
#[derive(Default)]
pub struct RunOutput {
    pub seed: Option<u64>,
    pub inputs: Vec<InputRecord>,
    pub outputs: Outputs,
    pub warnings: Vec<String>,
    pub summary: serde_json::Value,
}

pub fn run(cmd: &Command) -> CmdResult<RunOutput> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::Synth(a) => synth(a),
        Command::Signs(a) => signs(a),
        Command::Response(a) => response_cmd(a),
        Command::ShiftScan(a) => shift_scan(a),
        Command::Decompose(a) => decompose(a),
        Command::SpreadGroups(a) => spread_groups(a),
        Command::Diagnose(a) => diagnose(a),
    }
}

fn format_config(w: &WindowArgs) -> CmdResult<FormatConfig> {
    if !w.delimiter.is_ascii() {
        return Err(format!("delimiter `{}` is not a single ASCII character", w.delimiter).into());
    }
    Ok(FormatConfig { delimiter: w.delimiter as u8 })
}

fn estimator(e: &EstimatorArgs) -> EstimatorConfig {
    EstimatorConfig { tau_max: e.tau_max, exclude_zero: e.exclude_zero, return_kind: e.return_kind, lags: None }
}

fn source(data: &DataArgs, symbol: &str) -> CmdResult<UniverseEntry> {
    match &data.universe {
        Some(u) => read_universe(u)?
            .into_iter()
            .find(|e| e.symbol == symbol)
            .ok_or_else(|| format!("symbol `{symbol}` not in universe {}", u.display()).into()),
        None => Ok(UniverseEntry::in_dir(&data.data, symbol)),
    }
}

fn load(data: &DataArgs, symbol: &str) -> CmdResult<(StockData, InputRecord)> {
    let src = source(data, symbol)?;
    let fmt = format_config(&data.window)?;
    let stock = StockData::load(symbol, &src.quotes, &src.trades, &data.window.window, &fmt, data.window.carry_signs)
        .map_err(|e| format!("{symbol}: {e}"))?;
    let rec = InputRecord::from_stock(&stock, Some(&src.quotes), Some(&src.trades));
    Ok((stock, rec))
}

/// Loads stocks `i` and `j`, once when they are the same.
fn load_pair(data: &DataArgs, i: &str, j: &str) -> CmdResult<(StockData, Option<StockData>, Vec<InputRecord>)> {
    if i == j {
        let (s, r) = load(data, i)?;
        return Ok((s, None, vec![r]));
    }
    let (a, b) = rayon::join(|| load(data, i), || load(data, j));
    let ((a, ra), (b, rb)) = (a?, b?);
    Ok((a, Some(b), vec![ra, rb]))
}

fn reject_warnings(inputs: &[InputRecord]) -> Vec<String> {
    inputs
        .iter()
        .filter(|r| r.quote_rejects + r.trade_rejects > 0)
        .map(|r| format!("{}: {} quote and {} trade rows rejected", r.symbol, r.quote_rejects, r.trade_rejects))
        .collect()
}

fn stem_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

fn ingest(a: &IngestArgs) -> CmdResult<RunOutput> {
    let fmt = format_config(&a.window)?;
    let stock = StockData::load(&a.symbol, &a.quotes, &a.trades, &a.window.window, &fmt, a.window.carry_signs)?;
    let mut out = RunOutput::default();
    let dir = a.out.out.join(stem_safe(&a.symbol));
    for (m, s) in stock.mids.iter().zip(&stock.signs) {
        let day = m.day.format("%Y-%m-%d");
        out.outputs.write(dir.join(format!("{day}.midpoints.csv")), |w| write_midpoints(w, m))?;
        out.outputs.write(dir.join(format!("{day}.signs.csv")), |w| write_signs(w, s, true))?;
    }
    let r = &stock.report;
    if !r.quote_rejects.is_empty() || !r.trade_rejects.is_empty() {
        out.outputs.write(dir.join("rejects.csv"), |w| {
            writeln!(w, "file,line,reason")?;
            for (kind, list) in [("quotes", &r.quote_rejects), ("trades", &r.trade_rejects)] {
                for rej in list {
                    writeln!(w, "{kind},{},\"{}\"", rej.line, rej.reason.replace('"', "'"))?;
                }
            }
            Ok(())
        })?;
    }
    out.warnings.extend(r.days_without_quotes.iter().map(|d| format!("{d}: trades but no quotes in window, day skipped")));
    out.inputs.push(InputRecord::from_stock(&stock, Some(&a.quotes), Some(&a.trades)));
    out.warnings.extend(reject_warnings(&out.inputs));
    out.summary = json!({ "days": stock.mids.len(), "window": a.window.window.to_string() });
    Ok(out)
}

fn signs(a: &SignsArgs) -> CmdResult<RunOutput> {
    let fmt = format_config(&a.window)?;
    let parsed = parse_trades(BufReader::new(File::open(&a.trades)?), &fmt)?;
    let window = a.window.window;
    let mut by_day = split_by_day(filter_market_time(&parsed.events, &window));
    let mut carry: Option<Sign> = None;
    let mut series = Vec::new();
    for (day, trades) in by_day.iter_mut() {
        trades.sort_by_key(|e: &TradeEvent| (e.t, e.seq));
        let s = build_sign_series(*day, trades, &window, if a.window.carry_signs { carry } else { None });
        if let Some((_, last)) = s.trade_sequence().last() {
            carry = Some(last);
        }
        series.push(s);
    }
    let mut out = RunOutput::default();
    let dir = a.out.out.join(stem_safe(&a.symbol));
    for s in &series {
        out.outputs.write(dir.join(format!("{}.signs.csv", s.day.format("%Y-%m-%d"))), |w| write_signs(w, s, true))?;
    }
    let classified: usize = series.iter().map(SignSeries::total_trades).sum();
    let unresolved: usize = series.iter().map(|s| s.unresolved).sum();
    let active: usize = series.iter().map(|s| (0..s.len()).filter(|&t| s.n(t) > 0).count()).sum();
    let balanced: usize = series.iter().map(|s| (0..s.len()).filter(|&t| s.n(t) > 0 && s.eps(t) == 0).count()).sum();
    out.inputs.push(InputRecord {
        symbol: a.symbol.clone(),
        quotes: None,
        trades: Some(a.trades.clone()),
        days: series.len(),
        quote_rows: 0,
        trade_rows: parsed.events.len() + parsed.rejects.len(),
        quote_rejects: 0,
        trade_rejects: parsed.rejects.len(),
        quotes_in_window: 0,
        trades_in_window: classified + unresolved,
        unresolved_trades: unresolved,
        days_without_quotes: 0,
    });
    out.warnings.extend(reject_warnings(&out.inputs));
    out.summary = json!({
        "classified_trades": classified,
        "unresolved_trades": unresolved,
        "seconds_with_trades": active,
        "balanced_seconds": balanced,
    });
    Ok(out)
}

fn per_symbol<T: Copy>(values: &[T], k: usize, name: &str, n: usize) -> CmdResult<T> {
    match values.len() {
        1 => Ok(values[0]),
        len if len == n => Ok(values[k]),
        len => Err(format!("--{name} has {len} values for {n} symbols").into()),
    }
}

fn synth(a: &SynthArgs) -> CmdResult<RunOutput> {
    let open_s = parse_time(&a.open).ok_or_else(|| format!("bad --open `{}`", a.open))?;
    let start_day = parse_day(&a.start_day).ok_or_else(|| format!("bad --start-day `{}`", a.start_day))?;
    let mut out = RunOutput { seed: Some(a.seed), ..RunOutput::default() };
    let dir = &a.out.out;
    let fmt = FormatConfig::default();
    let mut universe = Vec::new();
    let mut expected = serde_json::Map::new();
    for (k, sym) in a.symbols.iter().enumerate() {
        let params = SynthParams {
            days: a.days,
            seconds_per_day: a.seconds,
            p_persist: a.p,
            lambda: per_symbol(&a.lambda, k, "lambda", a.symbols.len())?,
            sigma_noise: a.sigma,
            trades_per_second: a.trades_per_second,
            kernel: a.kernel,
            tick: a.tick,
            base_spread: per_symbol(&a.spread, k, "spread", a.symbols.len())?,
            base_price: a.price,
            open_s,
            start_day,
            seed: a.seed.wrapping_add(k as u64),
        };
        let market = generate(&params)?;
        let stem = stem_safe(sym);
        out.outputs.write(dir.join(format!("{stem}.quotes.csv")), |w| write_quotes(w, &market.quotes, &fmt))?;
        out.outputs.write(dir.join(format!("{stem}.trades.csv")), |w| write_trades(w, &market.trades, &fmt))?;
        out.outputs.write(dir.join(format!("{stem}.truth.csv")), |w| write_truth(w, &market))?;
        let theory: Option<Vec<f64>> = (1..=a.tau_max).map(|tau| theoretical_response(&params, tau).ok()).collect();
        if let Some(theory) = theory {
            out.outputs.write(dir.join(format!("{stem}.expected.csv")), |w| {
                writeln!(w, "tau,value")?;
                for (k, v) in theory.iter().enumerate() {
                    writeln!(w, "{},{}", k + 1, num(Some(*v)))?;
                }
                Ok(())
            })?;
            expected.insert(sym.clone(), json!(theory.first()));
        } else {
            out.warnings.push(format!("{sym}: no closed-form expected response for these parameters"));
        }
        universe.push(UniverseEntry {
            symbol: sym.clone(),
            quotes: PathBuf::from(format!("{stem}.quotes.csv")),
            trades: PathBuf::from(format!("{stem}.trades.csv")),
        });
        out.inputs.push(InputRecord {
            symbol: sym.clone(),
            quotes: None,
            trades: None,
            days: a.days,
            quote_rows: market.quotes.len(),
            trade_rows: market.trades.len(),
            quote_rejects: 0,
            trade_rejects: 0,
            quotes_in_window: market.quotes.len(),
            trades_in_window: market.trades.len(),
            unresolved_trades: 0,
            days_without_quotes: 0,
        });
    }
    out.outputs.write(dir.join("universe.csv"), |w| write_universe(w, &universe))?;
    let window = price_response::market_data::MarketWindow::new(open_s, open_s + a.seconds)?;
    out.summary = json!({
        "symbols": a.symbols,
        "window": window.to_string(),
        "expected_response_at_1": expected,
    });
    Ok(out)
}

fn curve_summary(c: &ResponseCurve) -> serde_json::Value {
    json!({
        "days": c.meta.days,
        "first_value": c.values.first().copied().flatten(),
        "peak": c.peak().map(|(tau, v)| json!({ "tau": tau, "value": v })),
    })
}

fn response_cmd(a: &ResponseArgs) -> CmdResult<RunOutput> {
    let (i, j) = (a.pair.i.as_str(), a.pair.j());
    let (si, sj, inputs) = load_pair(&a.data, i, j)?;
    let sj = sj.as_ref().unwrap_or(&si);
    let weighting: Weighting = a.scale.into();
    let curve = response(&si.mids, &sj.signs, weighting, &estimator(&a.estimator))?.with_pair(i, j);
    let mut out = RunOutput { warnings: reject_warnings(&inputs), inputs, ..RunOutput::default() };
    let stem = format!("response_{weighting}_{}_{}", stem_safe(i), stem_safe(j));
    out.outputs.curve(&a.out.out, &stem, &curve)?;
    out.summary = curve_summary(&curve);
    Ok(out)
}

fn shift_scan(a: &ShiftScanArgs) -> CmdResult<RunOutput> {
    let (i, j) = (a.pair.i.as_str(), a.pair.j());
    let grid = parse_grid(&a.grid)?;
    let mode = match a.mode {
        ScanModeArg::FixedTau => {
            let tau = u32::try_from(a.value).ok().filter(|&t| t >= 1).ok_or("fixed lag must be at least 1")?;
            ScanMode::FixedTauVaryShift { tau }
        }
        ScanModeArg::FixedShift => ScanMode::FixedShiftVaryTau { shift: a.value },
    };
    let (si, sj, inputs) = load_pair(&a.data, i, j)?;
    let sj = sj.as_ref().unwrap_or(&si);
    let scan = ScanConfig { mode, grid, scale: a.scale.into(), estimator: estimator(&a.estimator) };
    let result = run_shift_scan(&si.mids, &sj.signs, &scan)?;
    let mut out = RunOutput { warnings: reject_warnings(&inputs), inputs, ..RunOutput::default() };
    let mode_name = match a.mode {
        ScanModeArg::FixedTau => "fixed-tau",
        ScanModeArg::FixedShift => "fixed-shift",
    };
    let scale = match a.scale {
        ClockArg::Trade => "trade",
        ClockArg::Physical => "physical",
    };
    let stem = format!("shift_{mode_name}_{}_{scale}_{}_{}", a.value, stem_safe(i), stem_safe(j));
    let point_dir = a.out.out.join(&stem);
    for (g, c) in result.grid.iter().zip(&result.curves) {
        let c = c.clone().with_pair(i, j);
        out.outputs.curve(&point_dir, &format!("point_{g}"), &c)?;
    }
    let rows = result.rows();
    let grid_name = match a.mode {
        ScanModeArg::FixedTau => "shift",
        ScanModeArg::FixedShift => "tau",
    };
    out.outputs.write(a.out.out.join(format!("{stem}.csv")), |w| {
        writeln!(w, "{grid_name},value,count,stderr")?;
        for (g, v, n, se) in &rows {
            writeln!(w, "{g},{},{n},{}", num(*v), num(*se))?;
        }
        Ok(())
    })?;
    out.summary = json!({ "grid_points": rows.len() });
    Ok(out)
}

fn decompose(a: &DecomposeArgs) -> CmdResult<RunOutput> {
    let (i, j) = (a.pair.i.as_str(), a.pair.j());
    let (si, sj, inputs) = load_pair(&a.data, i, j)?;
    let sj = sj.as_ref().unwrap_or(&si);
    let est = EstimatorConfig { tau_max: a.tau_max, exclude_zero: a.exclude_zero, return_kind: a.return_kind, lags: None };
    let cfg = DecomposeConfig { tau_prime: a.tau_prime, weighting: a.scale.into(), estimator: est.clone() };
    let d = decompose_response(&si.mids, &sj.signs, &cfg)?;
    let baseline = shuffled_sign_baseline(&si.mids, &sj.signs, cfg.weighting, &est, a.seed)?.with_pair(i, j);
    let mut out = RunOutput { seed: Some(a.seed), warnings: reject_warnings(&inputs), inputs, ..RunOutput::default() };
    let stem = format!("decompose_{}_{}", stem_safe(i), stem_safe(j));
    out.outputs.write(a.out.out.join(format!("{stem}.csv")), |w| {
        writeln!(w, "tau,short,long,sum,original,baseline")?;
        for k in 0..d.original.len() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                d.original.lags[k],
                num(d.short.values[k]),
                num(d.long.values[k]),
                num(d.sum[k]),
                num(d.original.values[k]),
                num(baseline.values[k])
            )?;
        }
        Ok(())
    })?;
    out.outputs.write(a.out.out.join(format!("{stem}.json")), |w| {
        write_json(w, &json!({ "decomposition": d, "baseline": baseline }))
    })?;
    let negative_long_after_pivot = d
        .long
        .lags
        .iter()
        .zip(&d.long.values)
        .filter(|(&tau, _)| tau > a.tau_prime)
        .all(|(_, v)| v.is_some_and(|v| v < 0.0));
    out.summary = json!({
        "tau_prime": a.tau_prime,
        "residual": d.residual,
        "long_negative_after_pivot": negative_long_after_pivot,
    });
    Ok(out)
}

fn spread_groups(a: &SpreadGroupsArgs) -> CmdResult<RunOutput> {
    let symbols: Vec<String> = match (&a.symbols[..], &a.data.universe) {
        ([], Some(u)) => read_universe(u)?.into_iter().map(|e| e.symbol).collect(),
        ([], None) => return Err("spread-groups needs --symbols or --universe".into()),
        (s, _) => s.to_vec(),
    };
    let cfg = estimator(&a.estimator);
    let weighting: Weighting = a.scale.into();
    let per_stock: Vec<(String, f64, ResponseCurve, InputRecord)> = symbols
        .par_iter()
        .map(|sym| -> CmdResult<_> {
            let (s, rec) = load(&a.data, sym)?;
            let spread = average_spread(&s.mids).map_err(|e| format!("{sym}: {e}"))?;
            let curve = response(&s.mids, &s.signs, weighting, &cfg)?.with_pair(sym, sym);
            Ok((sym.clone(), spread, curve, rec))
        })
        .collect::<CmdResult<_>>()?;
    let mut spreads = BTreeMap::new();
    let mut curves = BTreeMap::new();
    let mut out = RunOutput::default();
    for (sym, spread, curve, rec) in per_stock {
        spreads.insert(sym.clone(), spread);
        curves.insert(sym, curve);
        out.inputs.push(rec);
    }
    out.warnings = reject_warnings(&out.inputs);
    let grouping = assign_groups(&spreads, &a.thresholds)?;
    let averages = group_average_response(&curves, &grouping)?;
    out.warnings.extend(averages.warnings.iter().cloned());
    out.outputs.write(a.out.out.join("spread_groups.csv"), |w| {
        writeln!(w, "symbol,average_spread,band")?;
        for (sym, band) in &grouping.assignments {
            writeln!(w, "{sym},{},{band}", num(Some(grouping.spreads[sym])))?;
        }
        Ok(())
    })?;
    for (k, c) in averages.curves.iter().enumerate() {
        if let Some(c) = c {
            out.outputs.curve(&a.out.out, &format!("band_{}_{weighting}", k + 1), c)?;
        }
    }
    let members: Vec<Vec<&str>> = (0..grouping.bands()).map(|b| grouping.members(b)).collect();
    let bands: BTreeMap<&str, String> = grouping.assignments.iter().map(|(s, b)| (s.as_str(), b.to_string())).collect();
    out.summary = json!({ "members": members, "bands": bands });
    Ok(out)
}

fn diagnose(a: &DiagnoseArgs) -> CmdResult<RunOutput> {
    let (stock, rec) = load(&a.data, &a.i)?;
    let src = source(&a.data, &a.i)?;
    let fmt = format_config(&a.data.window)?;
    let quotes = parse_quotes(BufReader::new(File::open(&src.quotes)?), &fmt)?;
    let sampling = midpoint_sampling_diagnostic(&filter_market_time(&quotes.events, &a.data.window.window));
    let seconds: usize = stock.signs.iter().map(SignSeries::len).sum();
    let active: usize = stock.signs.iter().map(|s| (0..s.len()).filter(|&t| s.n(t) > 0).count()).sum();
    let balanced: usize = stock.signs.iter().map(|s| (0..s.len()).filter(|&t| s.n(t) > 0 && s.eps(t) == 0).count()).sum();
    let trades: usize = stock.signs.iter().map(SignSeries::total_trades).sum();
    // autocorrelation within days, averaged with trade-count weights
    let mut acf = vec![0.0; a.max_lag + 1];
    let mut weight = vec![0.0; a.max_lag + 1];
    for s in &stock.signs {
        let seq: Vec<Sign> = s.trade_sequence().map(|(_, x)| x).collect();
        for (k, c) in sign_autocorrelation(&seq, a.max_lag).into_iter().enumerate() {
            if c.is_finite() {
                let w = (seq.len() - k) as f64;
                acf[k] += c * w;
                weight[k] += w;
            }
        }
    }
    let acf: Vec<Option<f64>> = acf.iter().zip(&weight).map(|(c, w)| (*w > 0.0).then(|| c / w)).collect();
    let spread = average_spread(&stock.mids).ok();
    let report = json!({
        "symbol": a.i,
        "days": stock.mids.len(),
        "seconds": seconds,
        "classified_trades": trades,
        "trades_per_second": trades as f64 / seconds.max(1) as f64,
        "seconds_with_trades": active,
        "balanced_seconds": balanced,
        "average_spread": spread,
        "last_vs_mean_midpoint": sampling,
        "sign_autocorrelation": acf,
        "report": &stock.report,
    });
    let mut out = RunOutput::default();
    out.outputs.write(a.data_out(), |w| write_json(w, &report))?;
    out.inputs.push(rec);
    out.warnings = reject_warnings(&out.inputs);
    out.summary = report;
    Ok(out)
}

impl DiagnoseArgs {
    fn data_out(&self) -> PathBuf {
        self.out.out.join(format!("diagnose_{}.json", stem_safe(&self.i)))
    }
}
