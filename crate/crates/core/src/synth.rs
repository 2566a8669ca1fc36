//! Synthetic edge streams with planted global events, and scoring of how
//! well a state sequence recovers them.
//!
//! Day `d` draws `Poisson(base * weekday_factors[d % 7] * multiplier(d))`
//! edges. Endpoints come from a heavy-tailed pool where node `i` is chosen
//! with probability proportional to `1 / (i + 1)`, so a handful of hubs keep
//! clustering coefficients away from zero.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{EdgeStream, RawEdge};
use crate::state::State;
use crate::SECONDS_PER_DAY;

pub const DEFAULT_WEEKDAY_FACTORS: [f64; 7] = [1.0, 1.0, 1.0, 1.0, 1.0, 0.3, 0.3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedEvent {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub multiplier: f64,
}

impl PlantedEvent {
    pub fn contains(&self, day: usize) -> bool {
        (self.start..=self.end).contains(&day)
    }

    pub fn days(&self) -> usize {
        self.end - self.start + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_nodes: usize,
    pub n_days: usize,
    pub base_edges_per_day: f64,
    #[serde(default = "default_weekday_factors")]
    pub weekday_factors: [f64; 7],
    #[serde(default)]
    pub events: Vec<PlantedEvent>,
    #[serde(default)]
    pub seed: u64,
}

fn default_weekday_factors() -> [f64; 7] {
    DEFAULT_WEEKDAY_FACTORS
}

impl SynthConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidParameter(m));
        if self.n_nodes < 2 {
            return invalid(format!("n_nodes must be >= 2, got {}", self.n_nodes));
        }
        if self.n_days == 0 {
            return invalid("n_days must be >= 1".into());
        }
        if !(self.base_edges_per_day.is_finite() && self.base_edges_per_day > 0.0) {
            return invalid(format!(
                "base_edges_per_day must be > 0, got {}",
                self.base_edges_per_day
            ));
        }
        if let Some(f) = self
            .weekday_factors
            .iter()
            .find(|f| !(f.is_finite() && **f > 0.0))
        {
            return invalid(format!("weekday factors must be > 0, got {f}"));
        }
        for (i, e) in self.events.iter().enumerate() {
            if e.start > e.end || e.end >= self.n_days {
                return invalid(format!(
                    "event {i} spans days {}..={} outside [0, {})",
                    e.start, e.end, self.n_days
                ));
            }
            if !(e.multiplier > 0.0 && e.multiplier <= 1.0) {
                return invalid(format!(
                    "event {i} multiplier must lie in (0,1], got {}",
                    e.multiplier
                ));
            }
        }
        let mut sorted: Vec<&PlantedEvent> = self.events.iter().collect();
        sorted.sort_by_key(|e| e.start);
        if sorted.windows(2).any(|w| w[1].start <= w[0].end) {
            return invalid("events may not overlap".into());
        }
        Ok(())
    }

    pub fn event_at(&self, day: usize) -> Option<usize> {
        self.events.iter().position(|e| e.contains(day))
    }

    /// Poisson mean of the edge count on `day`.
    pub fn expected_edges(&self, day: usize) -> f64 {
        let multiplier = self
            .event_at(day)
            .map_or(1.0, |i| self.events[i].multiplier);
        self.base_edges_per_day * self.weekday_factors[day % 7] * multiplier
    }

    /// Ground truth label of every day; depends only on the config.
    pub fn truth(&self) -> Vec<DayLabel> {
        (0..self.n_days)
            .map(|d| self.event_at(d).map_or(DayLabel::Base, DayLabel::Event))
            .collect()
    }
}

/// Ground truth for one day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DayLabel {
    Base,
    /// Index into the config's event list.
    Event(usize),
}

impl fmt::Display for DayLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DayLabel::Base => write!(f, "base"),
            DayLabel::Event(i) => write!(f, "event_{i}"),
        }
    }
}

impl FromStr for DayLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "base" {
            return Ok(DayLabel::Base);
        }
        s.strip_prefix("event_")
            .and_then(|i| i.parse().ok())
            .map(DayLabel::Event)
            .ok_or_else(|| Error::Validation(format!("unknown day label `{s}`")))
    }
}

/// Generate the stream described by `cfg`, along with per-day ground truth.
///
/// Day `d` covers timestamps `[d * 86400, (d + 1) * 86400)`.
pub fn generate_stream(cfg: &SynthConfig) -> Result<(EdgeStream, Vec<DayLabel>)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pool = WeightedIndex::new((0..cfg.n_nodes).map(|i| 1.0 / (i as f64 + 1.0)))
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut raw = Vec::new();
    for day in 0..cfg.n_days {
        let mean = cfg.expected_edges(day);
        let count = Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(format!("day {day}: {e}")))?
            .sample(&mut rng) as u64;
        let day_start = day as u64 * SECONDS_PER_DAY;
        for _ in 0..count {
            let u = pool.sample(&mut rng);
            let mut v = pool.sample(&mut rng);
            while v == u {
                v = pool.sample(&mut rng);
            }
            let t = day_start + rng.gen_range(0..SECONDS_PER_DAY);
            raw.push(RawEdge::new(u as u64, v as u64, t));
        }
    }
    Ok((crate::ingest::normalize(raw), cfg.truth()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventDetection {
    pub event: usize,
    pub start: usize,
    pub end: usize,
    pub modal_state: State,
    /// Fraction of the event's days carrying its modal state.
    pub purity: f64,
    /// Modal state differs from the baseline modal state.
    pub distinct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub events: Vec<EventDetection>,
    /// Modal state over non-event days; absent when every day is an event day.
    pub baseline_modal_state: Option<State>,
    /// `pairwise_distinct[i][j]`: events `i` and `j` have different modal states.
    pub pairwise_distinct: Vec<Vec<bool>>,
}

/// Most frequent state; ties go to the earliest letter.
fn modal(states: impl Iterator<Item = State>) -> Option<(State, usize, usize)> {
    let mut counts: BTreeMap<State, usize> = BTreeMap::new();
    let mut total = 0;
    for s in states {
        *counts.entry(s).or_default() += 1;
        total += 1;
    }
    let (state, count) =
        counts
            .into_iter()
            .fold(None, |best: Option<(State, usize)>, (s, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((s, c)),
            })?;
    Some((state, count, total))
}

pub fn evaluate_detection(
    labels: &[State],
    truth: &[DayLabel],
    events: &[PlantedEvent],
) -> Result<DetectionReport> {
    if labels.len() != truth.len() {
        return Err(Error::LengthMismatch(format!(
            "{} state labels but {} ground-truth days",
            labels.len(),
            truth.len()
        )));
    }
    let baseline_modal_state = modal(
        labels
            .iter()
            .zip(truth)
            .filter(|(_, t)| **t == DayLabel::Base)
            .map(|(s, _)| *s),
    )
    .map(|(s, _, _)| s);

    let mut detections = Vec::with_capacity(events.len());
    for (i, e) in events.iter().enumerate() {
        let (modal_state, count, total) = modal(
            labels
                .iter()
                .zip(truth)
                .filter(|(_, t)| **t == DayLabel::Event(i))
                .map(|(s, _)| *s),
        )
        .ok_or_else(|| Error::Validation(format!("event {i} has no labeled days")))?;
        detections.push(EventDetection {
            event: i,
            start: e.start,
            end: e.end,
            modal_state,
            purity: count as f64 / total as f64,
            distinct: baseline_modal_state != Some(modal_state),
        });
    }
    let pairwise_distinct = detections
        .iter()
        .map(|a| {
            detections
                .iter()
                .map(|b| a.modal_state != b.modal_state)
                .collect()
        })
        .collect();
    Ok(DetectionReport {
        events: detections,
        baseline_modal_state,
        pairwise_distinct,
    })
}
