//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use price_response::dataset::StockData;
use price_response::decompose::{decompose_response, shuffled_sign_baseline, DecomposeConfig};
use price_response::midpoint::ReturnKind;
use price_response::response::{brute_force_response, response, response_physical, weight_function, EstimatorConfig, ResponseCurve, Weighting};
use price_response::shift::{response_with_shift, run_shift_scan, ScanConfig, ScanMode, ShiftScale};
use price_response::signs::SignSeries;
use price_response::spread::{assign_groups, band_of, Band, DEFAULT_THRESHOLDS};
use price_response::synth::{generate, theoretical_response, ImpactKernel, SynthParams, TradesPerSecond};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn market(p: &SynthParams) -> StockData {
    let m = generate(p).expect("valid generator parameters");
    StockData::from_events("SYN", &m.quotes, &m.trades, &p.window(), false).expect("generated data loads")
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Largest `|R| / SE` over the curve, `None` if some value lacks an error.
fn max_t(c: &ResponseCurve) -> Option<f64> {
    c.values
        .iter()
        .zip(&c.stderr)
        .map(|(v, se)| Some(v.as_ref()?.abs() / se.as_ref()?))
        .try_fold(0.0f64, |m, t| Some(m.max(t?)))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let p = SynthParams {
        days: 20,
        seconds_per_day: 10_000,
        trades_per_second: TradesPerSecond::Geometric { mean: 2.0 },
        seed: 101,
        ..SynthParams::default()
    };
    let data = market(&p);
    let cfg = EstimatorConfig::with_tau_max(1000);
    let mut worst = 0.0f64;
    let mut missing = 0usize;
    for w in Weighting::ALL {
        let fast = response(&data.mids, &data.signs, w, &cfg).unwrap();
        let slow = brute_force_response(&data.mids, &data.signs, w, &cfg).unwrap();
        for (a, b) in fast.values.iter().zip(&slow.values) {
            match (a, b) {
                (Some(a), Some(b)) => worst = worst.max(rel_err(*a, *b)),
                (None, None) => {}
                _ => missing += 1,
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-12 && missing == 0 && secs < 60.0,
        format!("max relative error {worst:.2e} over 3 x 1000 lags, {missing} presence mismatches, {secs:.1} s"),
    )
}

fn weight_normalisation() -> Outcome {
    let p = SynthParams {
        days: 5,
        seconds_per_day: 5_000,
        trades_per_second: TradesPerSecond::Geometric { mean: 2.0 },
        seed: 102,
        ..SynthParams::default()
    };
    let data = market(&p);
    let total = |s: &[SignSeries], w| weight_function(s, w, true).iter().flatten().sum::<f64>();
    let phys = total(&data.signs, Weighting::Physical);
    let act = total(&data.signs, Weighting::Activity);
    let trade = total(&data.signs, Weighting::Trade);
    let day = data.signs[0].day;
    let buys = SignSeries::from_seconds(day, 0, &[vec![1, 1], vec![], vec![1], vec![1, 1, 1]]);
    let all_buys = total(std::slice::from_ref(&buys), Weighting::Trade);
    outcome(
        (phys - 1.0).abs() <= 1e-12 && (act - 1.0).abs() <= 1e-12 && trade <= 1.0 + 1e-12 && (all_buys - 1.0).abs() <= 1e-12,
        format!("physical {phys:.15}, activity {act:.15}, trade {trade:.6}, all-buys trade {all_buys:.15}"),
    )
}

/// Expected `sum_{k < tau} E[eps_0 eps_k]` of the sign chain, estimated by
/// simulating the chain directly.
fn monte_carlo_sign_sum(p: f64, tau: usize, steps: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut signs = Vec::with_capacity(steps + tau);
    let mut s: i8 = if rng.random_bool(0.5) { 1 } else { -1 };
    for _ in 0..steps + tau {
        signs.push(s);
        if !rng.random_bool(p) {
            s = -s;
        }
    }
    let batches = 100;
    let per = steps / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| {
            let mut acc = 0i64;
            for t in b * per..(b + 1) * per {
                let window: i64 = signs[t..t + tau].iter().map(|&x| x as i64).sum();
                acc += signs[t] as i64 * window;
            }
            acc as f64 / per as f64
        })
        .collect();
    let mean = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

fn synthetic_recovery() -> Outcome {
    let start = Instant::now();
    let (p_persist, lambda) = (0.7, 1e-4);
    let closed = |tau: u32| lambda * (1.0 - 0.4f64.powi(tau as i32)) / 0.6;
    let mut notes = Vec::new();
    let mut pass = true;
    for tau in [1usize, 10, 100] {
        let (mc, se) = monte_carlo_sign_sum(p_persist, tau, 2_000_000, 7 + tau as u64);
        let expect = closed(tau as u32) / lambda;
        let ok = (mc - expect).abs() < 3.0 * se.max(1e-12);
        pass &= ok;
        notes.push(format!("MC tau={tau} {:.2}se", (mc - expect).abs() / se.max(1e-12)));
    }
    let p = SynthParams {
        days: 50,
        seconds_per_day: 20_000,
        p_persist,
        lambda,
        trades_per_second: TradesPerSecond::Fixed(1),
        kernel: ImpactKernel::Permanent,
        seed: 103,
        ..SynthParams::default()
    };
    let data = market(&p);
    let cfg = EstimatorConfig { tau_max: 100, lags: Some(vec![1, 10, 100]), ..EstimatorConfig::default() };
    let curve = response_physical(&data.mids, &data.signs, &cfg).unwrap();
    for tau in [1u32, 10, 100] {
        let expect = theoretical_response(&p, tau).unwrap();
        pass &= rel_err(expect, closed(tau)) < 1e-12;
        let got = curve.value_at(tau).unwrap();
        let z = (got - expect).abs() / curve.stderr_at(tau).unwrap();
        pass &= z < 3.0;
        notes.push(format!("tau={tau} {z:.2}se"));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 120.0;
    outcome(pass, format!("{}, T = 1e6 s, {secs:.1} s", notes.join(", ")))
}

fn decomposition_identity() -> Outcome {
    let p = SynthParams {
        days: 20,
        seconds_per_day: 10_000,
        trades_per_second: TradesPerSecond::Geometric { mean: 2.0 },
        seed: 104,
        ..SynthParams::default()
    };
    let data = market(&p);
    let cfg = DecomposeConfig {
        tau_prime: 40,
        weighting: Weighting::Physical,
        estimator: EstimatorConfig { tau_max: 1000, return_kind: ReturnKind::Logarithmic, ..EstimatorConfig::default() },
    };
    let d = decompose_response(&data.mids, &data.signs, &cfg).unwrap();
    let mut worst = 0.0f64;
    let mut spread = 0.0f64;
    let pivot_short = d.short.value_at(41).unwrap();
    for (k, &tau) in d.original.lags.iter().enumerate() {
        if tau > 40 {
            worst = worst.max(rel_err(d.short.values[k].unwrap() + d.long.values[k].unwrap(), d.original.values[k].unwrap()));
            spread = spread.max((d.short.values[k].unwrap() - pivot_short).abs());
        }
    }
    outcome(
        worst <= 1e-12 && spread == 0.0,
        format!("max relative |short + long - R| {worst:.2e}, short varies by {spread:e} past the pivot"),
    )
}

fn shift_and_nulls() -> Outcome {
    let p = SynthParams { days: 20, seconds_per_day: 10_000, seed: 105, ..SynthParams::default() };
    let data = market(&p);
    let cfg = EstimatorConfig::with_tau_max(1000);
    let base = response_physical(&data.mids, &data.signs, &cfg).unwrap();
    let shifted = response_with_shift(&data.mids, &data.signs, 1, ShiftScale::Physical, &cfg).unwrap();
    let unit = base.values.iter().zip(&shifted.values).map(|(a, b)| rel_err(a.unwrap(), b.unwrap())).fold(0.0, f64::max);

    // independent signs: no information on either side of the causal band
    let null = SynthParams { p_persist: 0.5, seed: 106, ..p.clone() };
    let null_data = market(&null);
    let tau = 10u32;
    let grid: Vec<i64> = vec![-50, -40, -30, -20, -10, -5, -2, -1, 11, 12, 15, 20, 30, 40, 50];
    let scan = run_shift_scan(&null_data.mids, &null_data.signs, &ScanConfig {
        mode: ScanMode::FixedTauVaryShift { tau },
        grid,
        scale: ShiftScale::Physical,
        estimator: EstimatorConfig::with_tau_max(tau),
    })
    .unwrap();
    let shift_t = scan.curves.iter().filter_map(max_t).fold(0.0, f64::max);

    let mut base_t = 0.0f64;
    for seed in 1..=10 {
        let c = shuffled_sign_baseline(&data.mids, &data.signs, Weighting::Trade, &cfg, seed).unwrap();
        base_t = base_t.max(max_t(&c).unwrap_or(f64::INFINITY));
    }
    outcome(
        unit <= 1e-12 && shift_t < 3.0 && base_t < 3.0,
        format!(
            "shift 1 vs base {unit:.1e}; max |R|/SE {shift_t:.2} over 15 null shifts; {base_t:.2} over 10 shuffles x 1000 lags"
        ),
    )
}

fn shape_claim() -> Outcome {
    let p = SynthParams {
        days: 20,
        seconds_per_day: 10_000,
        kernel: ImpactKernel::Transient { decay: 50.0 },
        seed: 107,
        ..SynthParams::default()
    };
    let data = market(&p);
    let c = response_physical(&data.mids, &data.signs, &EstimatorConfig::with_tau_max(1000)).unwrap();
    let (peak_tau, peak) = c
        .lags
        .iter()
        .zip(&c.values)
        .map(|(&t, v)| (t, v.unwrap()))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let first = c.value_at(1).unwrap();
    let last = c.value_at(1000).unwrap();
    let se_peak = c.stderr_at(peak_tau).unwrap();
    let rise = (peak - first) / se_peak.hypot(c.stderr_at(1).unwrap());
    let fall = (peak - last) / se_peak.hypot(c.stderr_at(1000).unwrap());
    let theory: Vec<f64> = (1..=1000).map(|t| theoretical_response(&p, t).unwrap()).collect();
    let theory_peak = (0..1000).max_by(|&a, &b| theory[a].total_cmp(&theory[b])).unwrap() + 1;
    outcome(
        peak_tau > 1 && peak_tau < 1000 && rise > 3.0 && fall > 3.0 && theory_peak > 1 && theory_peak < 1000,
        format!(
            "measured peak at tau={peak_tau} ({rise:.1} se above tau=1, {fall:.1} se above tau=1000); expected peak at tau={theory_peak}"
        ),
    )
}

fn estimator_ordering() -> Outcome {
    let p = SynthParams {
        days: 20,
        seconds_per_day: 10_000,
        trades_per_second: TradesPerSecond::Geometric { mean: 5.0 },
        seed: 108,
        ..SynthParams::default()
    };
    let data = market(&p);
    let cfg = EstimatorConfig::with_tau_max(1000);
    let peak = |w| response(&data.mids, &data.signs, w, &cfg).unwrap().peak().unwrap().1.abs();
    let (pa, pp, pt) = (peak(Weighting::Activity), peak(Weighting::Physical), peak(Weighting::Trade));

    let one = market(&SynthParams { days: 5, seconds_per_day: 5_000, seed: 109, ..SynthParams::default() });
    let curves: Vec<ResponseCurve> = Weighting::ALL.iter().map(|&w| response(&one.mids, &one.signs, w, &cfg).unwrap()).collect();
    let mut coincide = 0.0f64;
    for k in 0..curves[0].len() {
        let v: Vec<f64> = curves.iter().map(|c| c.values[k].unwrap()).collect();
        coincide = coincide.max(rel_err(v[0], v[1])).max(rel_err(v[1], v[2]));
    }
    outcome(
        pa >= pp && pp >= pt && coincide <= 1e-12,
        format!("peaks activity {pa:.4e} >= physical {pp:.4e} >= trade {pt:.4e}; one trade per second: max relative gap {coincide:.1e}"),
    )
}

fn spread_grouping() -> Outcome {
    let fixtures: [(&str, f64, Band); 8] = [
        ("GOOG", 0.40, Band::Group(2)),
        ("MA", 0.38, Band::Group(2)),
        ("CME", 1.08, Band::OutOfRange),
        ("GS", 0.11, Band::Group(2)),
        ("RIG", 0.12, Band::Group(2)),
        ("APA", 0.13, Band::Group(2)),
        ("CSCO", 0.01, Band::Group(0)),
        ("EDGE", 0.05, Band::Group(1)),
    ];
    let table: BTreeMap<String, f64> = fixtures.iter().map(|(s, v, _)| (s.to_string(), *v)).collect();
    let g = assign_groups(&table, &DEFAULT_THRESHOLDS).unwrap();
    let wrong: Vec<String> = fixtures
        .iter()
        .filter(|(s, v, b)| g.assignments[*s] != *b || band_of(*v, &DEFAULT_THRESHOLDS) != *b)
        .map(|(s, _, b)| format!("{s} expected {b}, got {}", g.assignments[*s]))
        .collect();
    outcome(wrong.is_empty(), if wrong.is_empty() { "8 fixtures in their bands".to_string() } else { wrong.join("; ") })
}

fn cli(dir: &Path, args: &[&str]) -> bool {
    let out = Command::new(env!("CARGO_BIN_EXE_price-response")).current_dir(dir).args(args).output().expect("binary runs");
    if !out.status.success() {
        eprintln!("{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    out.status.success()
}

fn read_values(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse::<f64>().unwrap()).collect())
        .collect()
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let window = "09:40:00-11:40:00";
    let mut ok = true;
    for workers in ["1", "4"] {
        let out = format!("d{workers}");
        ok &= cli(dir, &["--workers", workers, "synth", "--days", "6", "--seconds", "7200", "--symbols", "AA,BB",
            "--trades-per-second", "geometric:3", "--seed", "11", "--tau-max", "50", "--out", &out]);
    }
    let same_files = ["AA.quotes.csv", "AA.trades.csv", "BB.quotes.csv", "BB.trades.csv"]
        .iter()
        .all(|f| std::fs::read(dir.join("d1").join(f)).ok() == std::fs::read(dir.join("d4").join(f)).ok());
    let runs: [(&[&str], &str); 4] = [
        (&["response", "--i", "AA", "--j", "BB", "--scale", "trade", "--tau-max", "300"], "response_trade_AA_BB.csv"),
        (&["response", "--i", "AA", "--scale", "activity", "--tau-max", "300"], "response_activity_AA_AA.csv"),
        (&["decompose", "--i", "AA", "--tau-prime", "40", "--tau-max", "300", "--seed", "5"], "decompose_AA_AA.csv"),
        (&["shift-scan", "--i", "BB", "--mode", "fixed-tau", "--value", "20", "--grid=-30:30:3", "--scale", "trade"], "shift_fixed-tau_20_trade_BB_BB.csv"),
    ];
    let mut worst = 0.0f64;
    for (args, file) in runs {
        let mut tables = Vec::new();
        for workers in ["1", "3", "8"] {
            let out = format!("o{workers}");
            let mut full = vec!["--workers", workers];
            full.extend_from_slice(args);
            full.extend_from_slice(&["--data", "d1", "--window", window, "--out", &out]);
            ok &= cli(dir, &full);
            tables.push(read_values(&dir.join(&out).join(file)));
        }
        for t in &tables[1..] {
            ok &= t.len() == tables[0].len();
            for (a, b) in t.iter().flatten().zip(tables[0].iter().flatten()) {
                if a.is_nan() || b.is_nan() {
                    ok &= a.is_nan() && b.is_nan();
                } else {
                    worst = worst.max(rel_err(*a, *b));
                }
            }
        }
    }
    outcome(
        ok && same_files && worst <= 1e-12,
        format!("synth files identical across workers: {same_files}; max relative difference over 4 commands x 3 worker counts {worst:.1e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("weight normalisation", weight_normalisation),
        ("synthetic recovery", synthetic_recovery),
        ("decomposition identity", decomposition_identity),
        ("shift consistency and nulls", shift_and_nulls),
        ("rise-then-decline shape", shape_claim),
        ("estimator ordering", estimator_ordering),
        ("spread grouping", spread_grouping),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        failed += usize::from(!o.pass);
        println!("criterion {}: {} {name}: {}", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
