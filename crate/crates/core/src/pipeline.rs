//! End-to-end runs and the file formats they read and write.
//!
//! `run` writes four files into the output directory:
//!
//! * `features.csv`: `day,avg_degree,avg_clustering,avg_degree_detrended,avg_clustering_detrended`
//! * `states.csv`: `day,state`
//! * `transitions.json`: `{"k":..,"labels":"ABBA..","counts":[[..]]}`
//! * `model.json`: KMeans parameters in the standardized space
//!
//! Floats are written with 12 significant digits, so reruns with the same
//! configuration are byte-identical.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::detrend::detrend;
use crate::error::{Error, Result};
use crate::features::{extract_features, DegreeDenominator, FeatureSeries, FeatureVector};
use crate::format::{round_sig, sig};
use crate::ingest::{parse_edge_stream, EdgeStream};
use crate::snapshot::{
    align_down, discrete_snapshots, probabilistic_snapshots, steps_covering, write_snapshots_jsonl,
    DecayConfig, DiscreteConfig, SnapshotGraph,
};
use crate::state::{fit_state_space, ClusterOn, State, StateConfig, StateModel, TransitionMatrix};
use crate::synth::{evaluate_detection, generate_stream, DayLabel, DetectionReport, SynthConfig};
use crate::SECONDS_PER_DAY;

pub const FEATURES_FILE: &str = "features.csv";
pub const STATES_FILE: &str = "states.csv";
pub const TRANSITIONS_FILE: &str = "transitions.json";
pub const MODEL_FILE: &str = "model.json";
pub const SNAPSHOTS_FILE: &str = "snapshots.jsonl";

const FEATURES_HEADER: &str =
    "day,avg_degree,avg_clustering,avg_degree_detrended,avg_clustering_detrended";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Model {
    Discrete,
    #[default]
    Prob,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeMode {
    #[default]
    Active,
    Global,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub model: Model,
    pub delta_days: f64,
    pub tau_days: f64,
    pub cutoff: f64,
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    pub cluster_on: ClusterOn,
    pub standardize: bool,
    pub degree_denominator: DegreeMode,
    pub out_dir: PathBuf,
    pub dump_snapshots: bool,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            model: Model::Prob,
            delta_days: 1.0,
            tau_days: 12.0,
            cutoff: 1e-4,
            k: 7,
            seed: 42,
            restarts: 1,
            cluster_on: ClusterOn::Detrended,
            standardize: true,
            degree_denominator: DegreeMode::Active,
            out_dir: out_dir.into(),
            dump_snapshots: false,
        }
    }

    pub fn state_config(&self) -> StateConfig {
        StateConfig {
            k: self.k,
            seed: self.seed,
            restarts: self.restarts,
            cluster_on: self.cluster_on,
            standardize: self.standardize,
            ..StateConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("delta-days", self.delta_days)?;
        positive("tau-days", self.tau_days)?;
        positive("cutoff", self.cutoff)?;
        if self.cutoff >= 1.0 {
            return Err(Error::InvalidParameter(format!(
                "cutoff must be below 1, got {}",
                self.cutoff
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be positive".into()));
        }
        if self.restarts == 0 {
            return Err(Error::InvalidParameter("restarts must be positive".into()));
        }
        if self.delta_seconds() == 0 {
            return Err(Error::InvalidParameter(
                "delta-days is shorter than one second".into(),
            ));
        }
        Ok(())
    }

    fn delta_seconds(&self) -> u64 {
        (self.delta_days * SECONDS_PER_DAY as f64).round() as u64
    }

    fn decay_config(&self) -> DecayConfig {
        DecayConfig {
            tau: self.tau_days * SECONDS_PER_DAY as f64,
            cutoff: self.cutoff,
            grid_step: SECONDS_PER_DAY,
        }
    }
}

/// Everything a run computes.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub snapshots: Vec<SnapshotGraph>,
    pub features: FeatureSeries,
    pub model: StateModel,
    pub transitions: TransitionMatrix,
}

/// Build the snapshot sequence selected by `cfg`.
pub fn build_snapshots(stream: &EdgeStream, cfg: &RunConfig) -> Result<Vec<SnapshotGraph>> {
    let (t_min, t_max) = match (stream.t_min(), stream.t_max()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::EmptyStream),
    };
    match cfg.model {
        Model::Discrete => {
            let delta_t = cfg.delta_seconds();
            discrete_snapshots(
                stream,
                &DiscreteConfig {
                    delta_t,
                    t0: align_down(t_min, delta_t),
                },
            )
        }
        Model::Prob => {
            let decay = cfg.decay_config();
            let t0 = align_down(t_min, decay.grid_step);
            let n = steps_covering(t0, t_max, decay.grid_step);
            probabilistic_snapshots(stream, &decay, t0, n)
        }
    }
}

/// Snapshots, features, detrending and state fit, without touching disk.
pub fn analyze(stream: &EdgeStream, cfg: &RunConfig) -> Result<Analysis> {
    cfg.validate()?;
    let snapshots = build_snapshots(stream, cfg)?;
    let required = cfg.k.max(2);
    if snapshots.len() < required {
        return Err(Error::InsufficientSnapshots {
            available: snapshots.len(),
            required,
        });
    }
    let denominator = match cfg.degree_denominator {
        DegreeMode::Active => DegreeDenominator::Active,
        DegreeMode::Global => DegreeDenominator::Global(stream.node_count()),
    };
    let features = detrend(extract_features(&snapshots, denominator)?)?;
    let (model, transitions) = fit_state_space(&features, &cfg.state_config())?;
    Ok(Analysis {
        snapshots,
        features,
        model,
        transitions,
    })
}

pub fn read_stream(path: &Path) -> Result<EdgeStream> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_edge_stream(BufReader::new(file)).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse {
            line,
            message: format!("{}: {message}", path.display()),
        },
        other => other,
    })
}

/// Read the input, analyze it and write every output file.
pub fn run_pipeline(cfg: &RunConfig) -> Result<Analysis> {
    cfg.validate()?;
    let stream = read_stream(&cfg.input)?;
    let analysis = analyze(&stream, cfg)?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let out = |name: &str| cfg.out_dir.join(name);
    write_file(&out(FEATURES_FILE), |w| {
        write_features_csv(&analysis.features, w)
    })?;
    write_file(&out(STATES_FILE), |w| {
        write_states_csv(&analysis.model.labels, w)
    })?;
    write_file(&out(TRANSITIONS_FILE), |w| {
        write_json(&TransitionsDump::from(&analysis.transitions), w)
    })?;
    write_file(&out(MODEL_FILE), |w| {
        write_json(&ModelDump::from(&analysis.model), w)
    })?;
    if cfg.dump_snapshots {
        write_file(&out(SNAPSHOTS_FILE), |w| {
            write_snapshots_jsonl(&analysis.snapshots, w)
        })?;
    }
    Ok(analysis)
}

fn write_file<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize, W: Write>(value: &T, mut w: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")
}

pub fn write_features_csv<W: Write>(series: &FeatureSeries, mut w: W) -> std::io::Result<()> {
    writeln!(w, "{FEATURES_HEADER}")?;
    let zero = FeatureVector::new(0.0, 0.0);
    for (day, raw) in series.raw.iter().enumerate() {
        let det = series
            .detrended
            .as_ref()
            .and_then(|d| d.get(day))
            .unwrap_or(&zero);
        writeln!(
            w,
            "{day},{},{},{},{}",
            sig(raw.avg_degree),
            sig(raw.avg_clustering),
            sig(det.avg_degree),
            sig(det.avg_clustering)
        )?;
    }
    Ok(())
}

/// Read the raw feature columns back; detrended columns are ignored.
pub fn read_features_csv<R: BufRead>(reader: R) -> Result<FeatureSeries> {
    let mut raw = Vec::new();
    for (row, line) in csv_rows(reader, FEATURES_HEADER)? {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: row,
                message: format!("expected 5 columns, found {}", fields.len()),
            });
        }
        expect_day(fields[0], raw.len(), row)?;
        let num = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: row,
                message: format!("`{s}` is not a number"),
            })
        };
        raw.push(FeatureVector::new(num(fields[1])?, num(fields[2])?));
    }
    Ok(FeatureSeries::from_raw(raw))
}

pub fn write_states_csv<W: Write>(labels: &[State], mut w: W) -> std::io::Result<()> {
    writeln!(w, "day,state")?;
    for (day, s) in labels.iter().enumerate() {
        writeln!(w, "{day},{s}")?;
    }
    Ok(())
}

pub fn read_states_csv<R: BufRead>(reader: R) -> Result<Vec<State>> {
    let mut labels = Vec::new();
    for (row, line) in csv_rows(reader, "day,state")? {
        let (day, state) = split_two(&line, row)?;
        expect_day(day, labels.len(), row)?;
        let mut chars = state.chars();
        let letter = match (chars.next(), chars.next()) {
            (Some(c), None) => c,
            _ => {
                return Err(Error::Parse {
                    line: row,
                    message: format!("`{state}` is not a single state letter"),
                })
            }
        };
        labels.push(State::from_letter(letter).map_err(|e| Error::Parse {
            line: row,
            message: e.to_string(),
        })?);
    }
    Ok(labels)
}

pub fn write_truth_csv<W: Write>(truth: &[DayLabel], mut w: W) -> std::io::Result<()> {
    writeln!(w, "day,label")?;
    for (day, label) in truth.iter().enumerate() {
        writeln!(w, "{day},{label}")?;
    }
    Ok(())
}

pub fn read_truth_csv<R: BufRead>(reader: R) -> Result<Vec<DayLabel>> {
    let mut truth = Vec::new();
    for (row, line) in csv_rows(reader, "day,label")? {
        let (day, label) = split_two(&line, row)?;
        expect_day(day, truth.len(), row)?;
        truth.push(label.parse().map_err(|e: Error| Error::Parse {
            line: row,
            message: e.to_string(),
        })?);
    }
    Ok(truth)
}

pub fn write_edges_csv<W: Write>(stream: &EdgeStream, mut w: W) -> std::io::Result<()> {
    writeln!(w, "src,dst,timestamp")?;
    for e in stream.edges() {
        writeln!(w, "{},{},{}", e.u, e.v, e.t)?;
    }
    Ok(())
}

/// Data rows with their 1-based line numbers, after checking the header.
fn csv_rows<R: BufRead>(reader: R, header: &str) -> Result<Vec<(usize, String)>> {
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if !saw_header {
            if line != header {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected header `{header}`"),
                });
            }
            saw_header = true;
            continue;
        }
        rows.push((line_no, line.to_string()));
    }
    if !saw_header {
        return Err(Error::Parse {
            line: 1,
            message: format!("missing header `{header}`"),
        });
    }
    Ok(rows)
}

fn split_two(line: &str, row: usize) -> Result<(&str, &str)> {
    match line.split_once(',') {
        Some((a, b)) if !b.contains(',') => Ok((a.trim(), b.trim())),
        _ => Err(Error::Parse {
            line: row,
            message: "expected 2 columns".into(),
        }),
    }
}

fn expect_day(field: &str, expected: usize, row: usize) -> Result<()> {
    match field.trim().parse::<usize>() {
        Ok(d) if d == expected => Ok(()),
        Ok(d) => Err(Error::Parse {
            line: row,
            message: format!("day {d} out of sequence, expected {expected}"),
        }),
        Err(_) => Err(Error::Parse {
            line: row,
            message: format!("`{field}` is not a day index"),
        }),
    }
}

#[derive(Debug, Serialize)]
pub struct TransitionsDump {
    pub k: usize,
    pub labels: String,
    pub counts: Vec<Vec<u64>>,
}

impl From<&TransitionMatrix> for TransitionsDump {
    fn from(t: &TransitionMatrix) -> Self {
        Self {
            k: t.k,
            labels: t.label_string(),
            counts: t.counts.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct StandardizationDump {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct ModelDump {
    pub k: usize,
    pub seed: u64,
    pub standardization: StandardizationDump,
    pub centroids_standardized: Vec<Vec<f64>>,
    pub centroid_order: Vec<usize>,
    pub inertia: f64,
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(round_sig).collect()
}

impl From<&StateModel> for ModelDump {
    fn from(m: &StateModel) -> Self {
        Self {
            k: m.k,
            seed: m.seed,
            standardization: StandardizationDump {
                mean: rounded(&m.standardization.mean),
                std: rounded(&m.standardization.std),
            },
            centroids_standardized: m.centroids.iter().map(|c| rounded(c)).collect(),
            centroid_order: m.centroid_order.clone(),
            inertia: round_sig(m.inertia),
        }
    }
}

/// Generate a synthetic stream and write `edges.csv`-style and `truth.csv`-style files.
pub fn run_synth(cfg: &SynthConfig, edges_path: &Path, truth_path: &Path) -> Result<EdgeStream> {
    let (stream, truth) = generate_stream(cfg)?;
    for path in [edges_path, truth_path] {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    write_file(edges_path, |w| write_edges_csv(&stream, w))?;
    write_file(truth_path, |w| write_truth_csv(&truth, w))?;
    Ok(stream)
}

pub fn read_synth_config(path: &Path) -> Result<SynthConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SynthConfig::from_json(&text)
}

/// Score `states.csv` against `truth.csv` for the events of a synth config.
pub fn run_eval(states: &Path, truth: &Path, config: &SynthConfig) -> Result<DetectionReport> {
    let open = |p: &Path| {
        fs::File::open(p)
            .map(BufReader::new)
            .map_err(|e| Error::io(p, e))
    };
    let labels = read_states_csv(open(states)?)?;
    let truth = read_truth_csv(open(truth)?)?;
    if truth.len() != config.n_days {
        return Err(Error::LengthMismatch(format!(
            "truth has {} days but the config describes {}",
            truth.len(),
            config.n_days
        )));
    }
    evaluate_detection(&labels, &truth, &config.events)
}
