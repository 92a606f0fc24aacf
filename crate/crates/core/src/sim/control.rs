//! Controllers mapping rule-confidence weights to a throttle/brake action.

use serde::{Deserialize, Serialize};

use super::ScenarioConfig;
use crate::sfol::Rule;

/// Proportional gain of the speed-tracking controller.
pub const CONTROL_GAIN: f64 = 2.0;

/// Target speed below which a demanded stop brakes fully instead of decaying
/// asymptotically.
pub const STOP_SNAP_TARGET: f64 = 0.05;

/// Heuristic policy: track `v_max · w̄_eff · (1 - w̄_saf)`, full brake when
/// safety dominates. A near-zero target speed holds the brake so the vehicle
/// actually reaches a standstill.
pub fn sfol_action(w_saf: f64, w_eff: f64, v: f64, cfg: &ScenarioConfig) -> f64 {
    if w_saf > 0.5 {
        return -1.0;
    }
    let target = cfg.v_max * w_eff * (1.0 - w_saf);
    if target < STOP_SNAP_TARGET && v > 0.0 {
        return -1.0;
    }
    let desired_accel = CONTROL_GAIN * (target - v);
    (desired_accel / cfg.a_max).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    /// Inference-weighted policy.
    Sfol,
    /// Constant-weight baseline: the same policy at w̄_saf = w̄_eff = 0.5.
    Fixed,
    FullThrottle,
    FullBrake,
}

impl ControllerKind {
    pub fn parse(s: &str) -> Option<ControllerKind> {
        match s {
            "sfol" => Some(ControllerKind::Sfol),
            "fixed" => Some(ControllerKind::Fixed),
            "full_throttle" => Some(ControllerKind::FullThrottle),
            "full_brake" => Some(ControllerKind::FullBrake),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ControllerKind::Sfol => "sfol",
            ControllerKind::Fixed => "fixed",
            ControllerKind::FullThrottle => "full_throttle",
            ControllerKind::FullBrake => "full_brake",
        }
    }

    /// The weights this controller acts on (and, for the fixed baseline, the
    /// weights its logged reward uses).
    pub fn effective_weights(&self, w_saf: f64, w_eff: f64) -> (f64, f64) {
        match self {
            ControllerKind::Fixed => (0.5, 0.5),
            _ => (w_saf, w_eff),
        }
    }
}

pub fn controller_action(
    kind: ControllerKind,
    w_saf: f64,
    w_eff: f64,
    v: f64,
    cfg: &ScenarioConfig,
) -> f64 {
    match kind {
        ControllerKind::Sfol => sfol_action(w_saf, w_eff, v, cfg),
        ControllerKind::Fixed => sfol_action(0.5, 0.5, v, cfg),
        ControllerKind::FullThrottle => 1.0,
        ControllerKind::FullBrake => -1.0,
    }
}

/// Rule-set ablations: complete/partial efficiency x complete/partial safety.
/// Partial sets keep only the lead rule of the component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    CeCs,
    CePs,
    PeCs,
    PePs,
}

impl Variant {
    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "ce_cs" => Some(Variant::CeCs),
            "ce_ps" => Some(Variant::CePs),
            "pe_cs" => Some(Variant::PeCs),
            "pe_ps" => Some(Variant::PePs),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::CeCs => "ce_cs",
            Variant::CePs => "ce_ps",
            Variant::PeCs => "pe_cs",
            Variant::PePs => "pe_ps",
        }
    }

    /// Filters a rule base down to this variant by head name.
    pub fn filter_rules(&self, rules: Vec<Rule>) -> Vec<Rule> {
        let (full_eff, full_saf) = match self {
            Variant::CeCs => (true, true),
            Variant::CePs => (true, false),
            Variant::PeCs => (false, true),
            Variant::PePs => (false, false),
        };
        rules
            .into_iter()
            .filter(|r| match r.head.pred.as_str() {
                "efficiency2" | "efficiency3" => full_eff,
                "safe2" | "safe3" => full_saf,
                _ => true,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sfol::{parse_rules, DEFAULT_RULES};

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::default()
    }

    #[test]
    fn full_safety_weight_brakes_hard() {
        assert_eq!(sfol_action(1.0, 0.5, 10.0, &cfg()), -1.0);
        assert_eq!(sfol_action(0.51, 0.5, 0.0, &cfg()), -1.0);
    }

    #[test]
    fn clear_road_accelerates_from_rest() {
        let a = sfol_action(0.0, 1.0, 0.0, &cfg());
        assert_eq!(a, 1.0, "target 14 m/s from rest saturates throttle");
    }

    #[test]
    fn zero_weights_decay_to_rest() {
        let a = sfol_action(0.0, 0.0, 5.0, &cfg());
        assert_eq!(a, -1.0);
        assert_eq!(sfol_action(0.0, 0.0, 0.0, &cfg()), 0.0);
    }

    #[test]
    fn fixed_controller_ignores_weights() {
        let c = cfg();
        assert_eq!(
            controller_action(ControllerKind::Fixed, 0.9, 0.0, 5.0, &c),
            controller_action(ControllerKind::Fixed, 0.0, 0.9, 5.0, &c),
        );
        assert_eq!(ControllerKind::Fixed.effective_weights(0.9, 0.1), (0.5, 0.5));
    }

    #[test]
    fn variant_filtering_by_head() {
        let rules = parse_rules(DEFAULT_RULES).unwrap();
        let heads = |rs: &[Rule]| -> Vec<String> {
            rs.iter().map(|r| r.head.pred.clone()).collect()
        };
        assert_eq!(Variant::CeCs.filter_rules(rules.clone()).len(), 8);
        let pe_ps = Variant::PePs.filter_rules(rules.clone());
        assert_eq!(heads(&pe_ps), vec!["efficiency1", "safe1"]);
        let pe_cs = Variant::PeCs.filter_rules(rules.clone());
        assert_eq!(heads(&pe_cs).iter().filter(|h| h.starts_with("eff")).count(), 1);
        assert_eq!(heads(&pe_cs).iter().filter(|h| h.starts_with("safe")).count(), 5);
        let ce_ps = Variant::CePs.filter_rules(rules);
        assert_eq!(heads(&ce_ps).iter().filter(|h| h.starts_with("safe")).count(), 1);
    }
}
