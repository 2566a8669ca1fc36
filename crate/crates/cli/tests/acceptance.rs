//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use graphstate::detrend::{detrend_values, linear_fit};
use graphstate::features::{average_clustering, average_degree};
use graphstate::ingest::parse_edge_stream;
use graphstate::pipeline::{self, read_features_csv};
use graphstate::snapshot::{
    decay_probability, probabilistic_snapshots, DecayConfig, SnapshotGraph,
};
use graphstate::state::kmeans::{kmeans, squared_distance};
use graphstate::synth::{generate_stream, PlantedEvent, SynthConfig, DEFAULT_WEEKDAY_FACTORS};
use graphstate::SECONDS_PER_DAY;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit: Duration, what: &str) -> Result<(), String> {
    check(
        elapsed < limit,
        format!("{what} took {elapsed:.2?}, limit {limit:.0?}"),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_graphstate")
}

fn graphstate(args: &[&str]) -> Result<std::process::Output, String> {
    let out = Command::new(bin())
        .args(args)
        .env_remove("GRAPHSTATE_SEED")
        .output()
        .map_err(|e| format!("spawn failed: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "`graphstate {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(out)
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

// ---------------------------------------------------------------- criterion 1

fn decay_math() -> Outcome {
    let day = SECONDS_PER_DAY as f64;
    let tau = 12.0 * day;
    let horizon = tau * 1e4f64.ln();
    for delta in [0.0, tau, 2.0 * tau, 110.52 * day] {
        let t = delta.round() as u64;
        let got = decay_probability(t, 0, tau).map_err(|e| e.to_string())?;
        let want = (-(t as f64) / tau).exp();
        check(
            (got - want).abs() <= 1e-12,
            format!("decay at {delta}s: {got} vs {want}"),
        )?;
    }
    check(
        (decay_probability(0, 0, tau).unwrap() - 1.0).abs() == 0.0,
        "exp(0) != 1",
    )?;
    check(
        (decay_probability(12 * SECONDS_PER_DAY, 0, tau).unwrap() - (-1f64).exp()).abs() <= 1e-12,
        "one lifetime != 1/e",
    )?;

    let stream = graphstate::ingest::parse_edge_str("1,2,0").unwrap();
    let cfg = DecayConfig::default();
    let snaps = probabilistic_snapshots(&stream, &cfg, 0, 200).map_err(|e| e.to_string())?;
    let first_absent = snaps
        .iter()
        .position(|g| g.is_empty())
        .ok_or("edge never aged out")?;
    let first_past = snaps
        .iter()
        .position(|g| g.eval_time as f64 > horizon)
        .ok_or("grid never passes horizon")?;
    check(
        first_absent == first_past,
        format!("aged out at grid point {first_absent}, expected {first_past}"),
    )?;
    check(
        snaps[first_absent..].iter().all(SnapshotGraph::is_empty),
        "edge reappeared after aging out",
    )?;
    Ok(format!(
        "horizon {:.2} d, aged out at grid point {first_absent}",
        horizon / day
    ))
}

// ---------------------------------------------------------------- criterion 2

/// Degree and clustering by direct enumeration over an adjacency matrix.
fn brute_force(n: usize, adj: &[Vec<bool>]) -> (f64, f64) {
    let deg: Vec<usize> = (0..n)
        .map(|v| adj[v].iter().filter(|&&b| b).count())
        .collect();
    let active: Vec<usize> = (0..n).filter(|&v| deg[v] > 0).collect();
    if active.is_empty() {
        return (0.0, 0.0);
    }
    let edges: usize = deg.iter().sum::<usize>() / 2;
    let avg_degree = 2.0 * edges as f64 / active.len() as f64;
    let mut clustering = 0.0;
    for &v in &active {
        let d = deg[v];
        if d < 2 {
            continue;
        }
        let mut triangles = 0usize;
        for j in 0..n {
            for k in j + 1..n {
                if adj[v][j] && adj[v][k] && adj[j][k] {
                    triangles += 1;
                }
            }
        }
        clustering += triangles as f64 / (d * (d - 1) / 2) as f64;
    }
    (avg_degree, clustering / active.len() as f64)
}

fn binary_reduction() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    #[allow(clippy::needless_range_loop)]
    for case in 0..50 {
        let n = rng.gen_range(2..=30);
        let density = rng.gen_range(0.05..0.9);
        let mut adj = vec![vec![false; n]; n];
        let mut edges = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                if rng.gen_bool(density) {
                    adj[a][b] = true;
                    adj[b][a] = true;
                    edges.push(((a as u64, b as u64), 1.0));
                }
            }
        }
        let g = SnapshotGraph::new(case, 0, edges).map_err(|e| e.to_string())?;
        let (deg, clu) = brute_force(n, &adj);
        check(
            (average_degree(&g) - deg).abs() <= 1e-12,
            format!("case {case}: degree {} vs {deg}", average_degree(&g)),
        )?;
        check(
            (average_clustering(&g) - clu).abs() <= 1e-12,
            format!(
                "case {case}: clustering {} vs {clu}",
                average_clustering(&g)
            ),
        )?;
    }
    within(start.elapsed(), Duration::from_secs(1), "50 graphs")?;
    Ok("50 graphs match the enumeration oracle to 1e-12".into())
}

// ---------------------------------------------------------------- criterion 3

fn detrend_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = rng.gen_range(2..400);
        let scale = 10f64.powi(rng.gen_range(-3..4));
        let slope = rng.gen_range(-1.0..1.0) * scale;
        let y: Vec<f64> = (0..n)
            .map(|i| scale * rng.gen_range(-1.0..1.0) + slope * i as f64 + 3.0 * scale)
            .collect();
        let magnitude = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let r = detrend_values(&y).map_err(|e| e.to_string())?;
        let mean = r.iter().sum::<f64>() / n as f64;
        let resid_slope = linear_fit(&r).map_err(|e| e.to_string())?.slope;
        let rel = (mean.abs().max(resid_slope.abs())) / magnitude;
        worst = worst.max(rel);
        check(
            rel <= 1e-9,
            format!("case {case}: relative residual {rel:e}"),
        )?;
    }
    let line: Vec<f64> = (0..50).map(|i| -4.0 + 0.25 * i as f64).collect();
    check(
        detrend_values(&line).unwrap().iter().all(|&v| v == 0.0),
        "exact line left non-zero residuals",
    )?;
    within(start.elapsed(), Duration::from_secs(1), "100 series")?;
    Ok(format!("worst relative residual {worst:.1e}"))
}

// ---------------------------------------------------------------- criterion 4

fn exhaustive_optimum(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) - 1 {
        let mut total = 0.0;
        for side in [0, 1] {
            let members: Vec<&Vec<f64>> = (0..n)
                .filter(|&i| (mask >> i) & 1 == side)
                .map(|i| &points[i])
                .collect();
            let dim = members[0].len();
            let centroid: Vec<f64> = (0..dim)
                .map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64)
                .collect();
            total += members
                .iter()
                .map(|p| squared_distance(p, &centroid))
                .sum::<f64>();
        }
        best = best.min(total);
    }
    best
}

fn kmeans_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for case in 0..20 {
        let n = rng.gen_range(4..=8);
        let dim = rng.gen_range(1..=2);
        let spread = 1.0;
        let gap = rng.gen_range(5.0..20.0) * spread;
        let centers = [vec![0.0; dim], {
            let mut c = vec![0.0; dim];
            c[0] = gap + 2.0 * spread;
            c
        }];
        let points: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let c = &centers[if i < n / 2 { 0 } else { 1 }];
                c.iter()
                    .map(|x| x + rng.gen_range(-spread / 2.0..spread / 2.0))
                    .collect()
            })
            .collect();
        let optimum = exhaustive_optimum(&points);
        let mut best = f64::INFINITY;
        for seed in 0..10 {
            let fit = kmeans(&points, 2, seed).map_err(|e| e.to_string())?;
            for w in fit.inertia_history.windows(2) {
                check(
                    w[1] <= w[0],
                    format!("case {case} seed {seed}: inertia rose {} -> {}", w[0], w[1]),
                )?;
            }
            best = best.min(fit.inertia);
        }
        check(
            (best - optimum).abs() <= 1e-9,
            format!("case {case}: best {best} vs optimum {optimum}"),
        )?;
    }
    within(start.elapsed(), Duration::from_secs(5), "20 instances")?;
    Ok("20 instances reach the exhaustive optimum".into())
}

// ---------------------------------------------------------------- criterion 5

const OUTPUTS: [&str; 4] = [
    "features.csv",
    "states.csv",
    "transitions.json",
    "model.json",
];

fn determinism(input: &Path, dir: &Path) -> Outcome {
    let runs: Vec<PathBuf> = (0..2).map(|i| dir.join(format!("det{i}"))).collect();
    for out in &runs {
        graphstate(&[
            "run",
            "--input",
            s(input),
            "--out-dir",
            s(out),
            "--restarts",
            "2",
        ])?;
    }
    for name in OUTPUTS {
        let a = fs::read(runs[0].join(name)).map_err(|e| e.to_string())?;
        let b = fs::read(runs[1].join(name)).map_err(|e| e.to_string())?;
        check(
            !a.is_empty() && a == b,
            format!("{name} differs between runs"),
        )?;
    }
    Ok("features.csv, states.csv, transitions.json, model.json byte-identical".into())
}

// ---------------------------------------------------------------- criteria 6-8

fn synth_config(events: Vec<PlantedEvent>) -> SynthConfig {
    SynthConfig {
        n_nodes: 500,
        n_days: 180,
        base_edges_per_day: 2000.0,
        weekday_factors: [1.0, 1.0, 1.0, 1.0, 1.0, 0.3, 0.3],
        events,
        seed: 42,
    }
}

fn winter_break() -> PlantedEvent {
    PlantedEvent {
        start: 100,
        end: 114,
        multiplier: 0.1,
    }
}

struct Scenario {
    config: PathBuf,
    edges: PathBuf,
    truth: PathBuf,
}

fn synth_scenario(dir: &Path, name: &str, cfg: &SynthConfig) -> Result<Scenario, String> {
    let sc = Scenario {
        config: dir.join(format!("{name}.json")),
        edges: dir.join(format!("{name}_edges.csv")),
        truth: dir.join(format!("{name}_truth.csv")),
    };
    fs::write(&sc.config, serde_json::to_string(cfg).unwrap()).map_err(|e| e.to_string())?;
    graphstate(&[
        "synth",
        "--config",
        s(&sc.config),
        "--edges",
        s(&sc.edges),
        "--truth",
        s(&sc.truth),
    ])?;
    Ok(sc)
}

fn run_prob(sc: &Scenario, out: &Path) -> Result<Value, String> {
    graphstate(&[
        "run",
        "--input",
        s(&sc.edges),
        "--model",
        "prob",
        "--tau-days",
        "12",
        "--k",
        "7",
        "--seed",
        "42",
        "--restarts",
        "5",
        "--out-dir",
        s(out),
    ])?;
    let report = graphstate(&[
        "eval",
        "--states",
        s(&out.join("states.csv")),
        "--truth",
        s(&sc.truth),
        "--config",
        s(&sc.config),
    ])?;
    serde_json::from_slice(&report.stdout).map_err(|e| e.to_string())
}

fn break_detection(dir: &Path) -> Outcome {
    let start = Instant::now();
    let sc = synth_scenario(dir, "break", &synth_config(vec![winter_break()]))?;
    let report = run_prob(&sc, &dir.join("break_prob"))?;
    let event = &report["events"][0];
    let purity = event["purity"].as_f64().ok_or("missing purity")?;
    let distinct = event["distinct"].as_bool().ok_or("missing distinct")?;
    let summary = format!(
        "break modal {} purity {purity:.3}, baseline modal {}, distinct {distinct}",
        event["modal_state"], report["baseline_modal_state"]
    );
    check(
        purity >= 0.8 && distinct,
        format!("{summary} (need purity >= 0.8 and distinct)"),
    )?;
    within(start.elapsed(), Duration::from_secs(60), "pipeline")?;
    Ok(summary)
}

fn intensity_separation(dir: &Path) -> Outcome {
    let fall = PlantedEvent {
        start: 40,
        end: 46,
        multiplier: 0.45,
    };
    let sc = synth_scenario(dir, "two_breaks", &synth_config(vec![fall, winter_break()]))?;
    let report = run_prob(&sc, &dir.join("two_breaks_prob"))?;
    let a = &report["events"][0]["modal_state"];
    let b = &report["events"][1]["modal_state"];
    check(a != b, format!("both events have modal state {a}"))?;
    Ok(format!("mild break modal {a}, deep break modal {b}"))
}

fn lag1_autocorrelation(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let num: f64 = x.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
    let den: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    num / den
}

fn smoothing_contrast(dir: &Path) -> Outcome {
    let edges = dir.join("break_edges.csv");
    let prob_out = dir.join("break_prob");
    let disc_out = dir.join("break_disc");
    graphstate(&[
        "run",
        "--input",
        s(&edges),
        "--model",
        "discrete",
        "--delta-days",
        "1",
        "--k",
        "7",
        "--seed",
        "42",
        "--restarts",
        "5",
        "--out-dir",
        s(&disc_out),
    ])?;
    let read = |d: &Path| -> Result<Vec<f64>, String> {
        let f = fs::File::open(d.join("features.csv")).map_err(|e| e.to_string())?;
        Ok(read_features_csv(std::io::BufReader::new(f))
            .map_err(|e| e.to_string())?
            .avg_degree())
    };
    let prob = lag1_autocorrelation(&read(&prob_out)?);
    let disc = lag1_autocorrelation(&read(&disc_out)?);
    check(prob > disc, format!("prob {prob:.4} <= discrete {disc:.4}"))?;
    Ok(format!(
        "lag-1 autocorrelation prob {prob:.4} > discrete {disc:.4}"
    ))
}

// ---------------------------------------------------------------- criterion 9

fn round_trip(dir: &Path) -> Outcome {
    let cfg = SynthConfig {
        n_nodes: 60,
        n_days: 20,
        base_edges_per_day: 150.0,
        weekday_factors: DEFAULT_WEEKDAY_FACTORS,
        events: vec![PlantedEvent {
            start: 5,
            end: 8,
            multiplier: 0.2,
        }],
        seed: 3,
    };
    let edges = dir.join("rt_edges.csv");
    let truth = dir.join("rt_truth.csv");
    let written = pipeline::run_synth(&cfg, &edges, &truth).map_err(|e| e.to_string())?;
    let parsed = parse_edge_stream(std::io::BufReader::new(
        fs::File::open(&edges).map_err(|e| e.to_string())?,
    ))
    .map_err(|e| e.to_string())?;
    check(
        parsed.self_loops_dropped() == 0,
        "self-loops dropped on re-read",
    )?;
    check(
        parsed == written,
        "re-read stream differs from the generated one",
    )?;
    check(
        parsed == generate_stream(&cfg).unwrap().0,
        "written stream differs from a fresh generation",
    )?;

    let states = dir.join("rt_states.csv");
    let labels: String = (0..cfg.n_days)
        .map(|d| format!("{d},{}\n", if (5..=8).contains(&d) { 'A' } else { 'B' }))
        .collect();
    fs::write(&states, format!("day,state\n{labels}")).map_err(|e| e.to_string())?;
    let report = pipeline::run_eval(&states, &truth, &cfg).map_err(|e| e.to_string())?;
    check(
        report.events[0].purity == 1.0 && report.events[0].distinct,
        format!("perfect fixture scored {:?}", report.events[0]),
    )?;
    Ok(format!(
        "{} edges re-read losslessly; perfect fixture purity 1.0",
        parsed.len()
    ))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let dir = tmp.path();

    let mut results: Vec<(u32, &str, Outcome)> = vec![
        (1, "decay math", decay_math()),
        (2, "binary reduction", binary_reduction()),
        (3, "detrend invariants", detrend_invariants()),
        (4, "kmeans oracle equivalence", kmeans_oracle()),
    ];
    let break_outcome = break_detection(dir);
    let det_input = dir.join("break_edges.csv");
    results.push((5, "determinism", determinism(&det_input, dir)));
    results.push((6, "synthetic global-event detection", break_outcome));
    results.push((7, "event-intensity separation", intensity_separation(dir)));
    results.push((8, "smoothing contrast", smoothing_contrast(dir)));
    results.push((9, "round-trip", round_trip(dir)));

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} [{name}]: PASS - {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} [{name}]: FAIL - {why}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
