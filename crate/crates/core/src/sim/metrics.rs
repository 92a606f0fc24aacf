//! Per-episode outcome record and the driving-characteristic metrics.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpisodeResult {
    Success,
    Collision,
    Timeout,
}

impl EpisodeResult {
    pub fn as_str(&self) -> &'static str {
        match self {
            EpisodeResult::Success => "success",
            EpisodeResult::Collision => "collision",
            EpisodeResult::Timeout => "timeout",
        }
    }
}

/// Per-episode evaluation record. `min_ttc` may be +infinity (serialized as
/// null); everything else is finite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeOutcome {
    pub result: EpisodeResult,
    /// Gap to the nearest crosswalk pedestrian at the first moment the ego
    /// stands fully stopped (after having moved) while the crosswalk is
    /// occupied; 0 when the episode has no such stop.
    pub stopping_distance: f64,
    pub rms_speed: f64,
    pub rms_accel: f64,
    pub rms_jerk: f64,
    #[serde(
        serialize_with = "ser_maybe_inf",
        deserialize_with = "de_maybe_inf"
    )]
    pub min_ttc: f64,
    /// Ego speed at the collision step; 0 for non-collision episodes.
    pub impact_speed: f64,
    /// Minimum TTC dipped to 2 s or below.
    pub near_miss: bool,
    /// Fraction of steps braking harder than 2 m/s² with no safety head
    /// confidence above 0.1.
    pub false_brake_rate: f64,
    /// Time to goal; the timeout horizon for unsuccessful episodes.
    pub ttg: f64,
}

fn ser_maybe_inf<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_some(v)
    } else {
        s.serialize_none()
    }
}

fn de_maybe_inf<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let opt: Option<f64> = serde::Deserialize::deserialize(d)?;
    Ok(opt.unwrap_or(f64::INFINITY))
}

/// Root mean square.
pub fn rms(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    (samples.iter().map(|x| x * x).sum::<f64>() / samples.len() as f64).sqrt()
}

/// Near-miss threshold in seconds; a minimum TTC at or below it flags.
pub const NEAR_MISS_TTC_S: f64 = 2.0;
/// Deceleration beyond this (m/s²) with no active safety head is a false
/// brake.
pub const FALSE_BRAKE_DECEL: f64 = 2.0;
/// Safety-head confidence above this justifies braking.
pub const FALSE_BRAKE_TAU: f64 = 0.1;

/// Inputs gathered per step for the outcome computation.
#[derive(Debug, Clone, Copy)]
pub struct StepSample {
    pub v: f64,
    pub accel: f64,
    pub ttc: f64,
    pub max_safety_tau: f64,
}

pub fn compute_outcome(
    result: EpisodeResult,
    samples: &[StepSample],
    stopping_distance: f64,
    impact_speed: f64,
    elapsed: f64,
    timeout_s: f64,
    dt: f64,
) -> EpisodeOutcome {
    let speeds: Vec<f64> = samples.iter().map(|s| s.v).collect();
    let accels: Vec<f64> = samples.iter().map(|s| s.accel).collect();
    let jerks: Vec<f64> = accels.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
    let min_ttc = samples
        .iter()
        .map(|s| s.ttc)
        .fold(f64::INFINITY, f64::min);
    let false_brakes = samples
        .iter()
        .filter(|s| s.accel < -FALSE_BRAKE_DECEL && s.max_safety_tau <= FALSE_BRAKE_TAU)
        .count();
    EpisodeOutcome {
        result,
        stopping_distance,
        rms_speed: rms(&speeds),
        rms_accel: rms(&accels),
        rms_jerk: rms(&jerks),
        min_ttc,
        impact_speed,
        near_miss: min_ttc <= NEAR_MISS_TTC_S,
        false_brake_rate: if samples.is_empty() {
            0.0
        } else {
            false_brakes as f64 / samples.len() as f64
        },
        ttg: if result == EpisodeResult::Success {
            elapsed
        } else {
            timeout_s
        },
    }
}
