//! Base reward components and the rule-weighted final reward.
//!
//! Safety penalizes speed near pedestrians plus a flat collision penalty;
//! efficiency rewards speed; smoothness penalizes per-step speed changes. The
//! safety and efficiency terms are scaled by weights computed from rule-head
//! confidences; the smoothness term is never weighted.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RewardError {
    #[error("{name} = {value} must be nonnegative")]
    NegativeInput { name: &'static str, value: f64 },
    #[error("reward weighting needs at least one rule confidence")]
    EmptyConfidences,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardParams {
    /// Speed-hazard weight in the safety term.
    pub zeta: f64,
    /// Flat collision penalty.
    pub eta: f64,
    /// Denominator offset, meters.
    pub epsilon: f64,
    /// Efficiency weight per m/s.
    pub lambda: f64,
    /// Smoothness weight.
    pub xi: f64,
    /// Timestep, seconds.
    pub dt: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            zeta: 0.5,
            eta: 100.0,
            epsilon: 0.1,
            lambda: 1.0,
            xi: 0.1,
            dt: 0.1,
        }
    }
}

/// Safety term: `-(ζ v² / (d + ε) + η·[collided])`. `d` is the gap to the
/// nearest pedestrian; pass `f64::INFINITY` when no pedestrian exists (the
/// speed-hazard term then vanishes). The collision indicator comes from the
/// simulator's collision flag, not a literal `d == 0` test.
pub fn g_saf(v: f64, d: f64, collided: bool, p: &RewardParams) -> Result<f64, RewardError> {
    if v < 0.0 {
        return Err(RewardError::NegativeInput { name: "v", value: v });
    }
    if d < 0.0 {
        return Err(RewardError::NegativeInput { name: "d", value: d });
    }
    let hazard = if d.is_infinite() { 0.0 } else { p.zeta * v * v / (d + p.epsilon) };
    let crash = if collided { p.eta } else { 0.0 };
    Ok(-(hazard + crash))
}

/// Efficiency term: `λ v`.
pub fn g_eff(v: f64, p: &RewardParams) -> Result<f64, RewardError> {
    if v < 0.0 {
        return Err(RewardError::NegativeInput { name: "v", value: v });
    }
    Ok(p.lambda * v)
}

/// Smoothness term: `-ξ (a Δt)²`. Sign of the acceleration is irrelevant.
pub fn g_smooth(a: f64, p: &RewardParams) -> f64 {
    let dv = a * p.dt;
    -p.xi * dv * dv
}

/// One tag's weight: `(1/n) Σ αᵢ τ̂ᵢ` over `(confidence, importance)` pairs.
pub fn reward_weight(entries: &[(f64, f64)]) -> Result<f64, RewardError> {
    if entries.is_empty() {
        return Err(RewardError::EmptyConfidences);
    }
    let n = entries.len() as f64;
    Ok(entries.iter().map(|(tau, alpha)| alpha * tau).sum::<f64>() / n)
}

/// `(w̄_eff, w̄_saf)` from the two tag lists.
pub fn reward_weights(
    efficiency: &[(f64, f64)],
    safety: &[(f64, f64)],
) -> Result<(f64, f64), RewardError> {
    Ok((reward_weight(efficiency)?, reward_weight(safety)?))
}

/// Per-timestep reward record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardComponents {
    pub g_saf: f64,
    pub g_eff: f64,
    pub g_smooth: f64,
    pub w_saf: f64,
    pub w_eff: f64,
    pub r_final: f64,
}

impl RewardComponents {
    pub fn compute(g_saf: f64, g_eff: f64, g_smooth: f64, w_saf: f64, w_eff: f64) -> Self {
        RewardComponents {
            g_saf,
            g_eff,
            g_smooth,
            w_saf,
            w_eff,
            r_final: final_reward(g_saf, g_eff, g_smooth, w_saf, w_eff),
        }
    }
}

/// `R = w̄_saf·g_saf + w̄_eff·g_eff + g_smooth`.
pub fn final_reward(g_saf: f64, g_eff: f64, g_smooth: f64, w_saf: f64, w_eff: f64) -> f64 {
    w_saf * g_saf + w_eff * g_eff + g_smooth
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> RewardParams {
        RewardParams::default()
    }

    #[test]
    fn safety_speed_hazard() {
        let v = g_saf(10.0, 20.0, false, &p()).unwrap();
        assert!((v - (-0.5 * 100.0 / 20.1)).abs() < 1e-12);
    }

    #[test]
    fn safety_zero_speed_no_collision() {
        assert_eq!(g_saf(0.0, 50.0, false, &p()).unwrap(), 0.0);
    }

    #[test]
    fn safety_collision_case() {
        let v = g_saf(5.0, 0.0, true, &p()).unwrap();
        assert!((v - (-225.0)).abs() < 1e-12);
    }

    #[test]
    fn safety_no_pedestrian_sentinel() {
        assert_eq!(g_saf(14.0, f64::INFINITY, false, &p()).unwrap(), 0.0);
    }

    #[test]
    fn safety_rejects_negative() {
        assert!(g_saf(-1.0, 10.0, false, &p()).is_err());
        assert!(g_saf(1.0, -10.0, false, &p()).is_err());
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(g_eff(8.0, &p()).unwrap(), 8.0);
        assert_eq!(g_eff(0.0, &p()).unwrap(), 0.0);
        let half = RewardParams { lambda: 0.5, ..p() };
        assert_eq!(g_eff(10.0, &half).unwrap(), 5.0);
        assert!(g_eff(-0.1, &p()).is_err());
    }

    #[test]
    fn smoothness_examples() {
        let v = g_smooth(-4.0, &p());
        assert!((v - (-0.016)).abs() < 1e-12);
        assert_eq!(g_smooth(0.0, &p()), 0.0);
        assert_eq!(g_smooth(4.0, &p()), g_smooth(-4.0, &p()));
    }

    #[test]
    fn weight_one_of_three_rules() {
        let w = reward_weight(&[(1.0, 1.0), (0.0, 0.75), (0.0, 0.75)]).unwrap();
        assert!((w - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn weight_edges() {
        assert_eq!(reward_weight(&[(0.0, 1.0), (0.0, 1.0)]).unwrap(), 0.0);
        assert_eq!(
            reward_weight(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)]).unwrap(),
            1.0
        );
        assert_eq!(reward_weight(&[]).unwrap_err(), RewardError::EmptyConfidences);
    }

    #[test]
    fn weights_monotone_in_confidence() {
        let low = reward_weight(&[(0.2, 1.0), (0.5, 0.75)]).unwrap();
        let high = reward_weight(&[(0.9, 1.0), (0.5, 0.75)]).unwrap();
        assert!(high > low);
    }

    #[test]
    fn final_reward_examples() {
        assert_eq!(final_reward(-225.0, 0.0, 0.0, 1.0, 0.0), -225.0);
        assert!((final_reward(0.0, 8.0, -0.016, 0.0, 1.0) - 7.984).abs() < 1e-12);
        assert_eq!(final_reward(-10.0, 5.0, -0.2, 0.0, 0.0), -0.2);
    }

    #[test]
    fn components_struct_holds_invariant() {
        let c = RewardComponents::compute(-2.0, 3.0, -0.1, 0.4, 0.6);
        assert_eq!(c.r_final, 0.4 * -2.0 + 0.6 * 3.0 + -0.1);
    }

    #[test]
    fn reward_is_linear_in_components() {
        let base = final_reward(-1.0, 2.0, -0.3, 0.5, 0.5);
        let double_saf = final_reward(-2.0, 2.0, -0.3, 0.5, 0.5);
        assert!((double_saf - base - 0.5 * -1.0).abs() < 1e-12);
    }
}
