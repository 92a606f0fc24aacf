use vsr_core::sim::*;
use vsr_core::sfol::{parse_rules, DEFAULT_RULES, infer, rule_confidences, RuleTag};
use vsr_core::predicates::{extract_facts, CameraModel};
use vsr_core::reward::reward_weight;

fn main() {
    let cfg = ScenarioConfig { density: Density::High, occlusion: OcclusionLevel::Full, ..Default::default() };
    let rules = Variant::CeCs.filter_rules(parse_rules(DEFAULT_RULES).unwrap());
    let cam = CameraModel { focal_length_px: cfg.focal_px, ..Default::default() };
    let mut state = init_episode(&cfg, 0).unwrap();
    for i in 0..300 {
        let map = render_semantic_map(&state, &cam, &cfg);
        let facts = extract_facts(&map, &cam).unwrap();
        let (heads, _) = infer(&rules, &facts);
        let conf = rule_confidences(&heads, &rules);
        let saf: Vec<(f64,f64)> = conf[&RuleTag::Safety].iter().map(|c| (c.confidence, c.importance)).collect();
        let eff: Vec<(f64,f64)> = conf[&RuleTag::Efficiency].iter().map(|c| (c.confidence, c.importance)).collect();
        let w_saf = reward_weight(&saf).unwrap();
        let w_eff = reward_weight(&eff).unwrap();
        let action = controller_action(ControllerKind::Sfol, w_saf, w_eff, state.ego_v, &cfg);
        if i % 20 == 0 || (i > 40 && i < 60) {
            println!("t={:5.1} x={:5.1} v={:4.2} wsaf={:.3} weff={:.3} act={:+.2} facts={:?}",
                state.t, state.ego_x, state.ego_v, w_saf, w_eff, action,
                facts.iter().map(|f| f.pred.as_str()).collect::<std::collections::BTreeSet<_>>());
        }
        state = step(&state, action, &cfg);
        if state.t > 14.0 { break; }
    }
}
