use vsr_core::sim::*;
use vsr_core::sfol::{parse_rules, DEFAULT_RULES, infer};
use vsr_core::predicates::{extract_facts, CameraModel};

fn main() {
    let cfg = ScenarioConfig { density: Density::High, occlusion: OcclusionLevel::Full, ..Default::default() };
    let rules = Variant::CeCs.filter_rules(parse_rules(DEFAULT_RULES).unwrap());
    let mut state = init_episode(&cfg, 0).unwrap();
    let cam = CameraModel::default();
    // replay with sfol until t = 8.4
    for _ in 0..84 {
        let map = render_semantic_map(&state, &cam, &cfg);
        let facts = extract_facts(&map, &cam).unwrap();
        let (heads, _) = infer(&rules, &facts);
        let conf = vsr_core::sfol::rule_confidences(&heads, &rules);
        let saf: Vec<(f64,f64)> = conf[&vsr_core::sfol::RuleTag::Safety].iter().map(|c| (c.confidence, c.importance)).collect();
        let eff: Vec<(f64,f64)> = conf[&vsr_core::sfol::RuleTag::Efficiency].iter().map(|c| (c.confidence, c.importance)).collect();
        let w_saf = vsr_core::reward::reward_weight(&saf).unwrap();
        let w_eff = vsr_core::reward::reward_weight(&eff).unwrap();
        let action = controller_action(ControllerKind::Sfol, w_saf, w_eff, state.ego_v, &cfg);
        if state.t >= 8.0 {
            println!("t={:.1} x={:.1} v={:.2} wsaf={:.3}", state.t, state.ego_x, state.ego_v, w_saf);
            for f in &facts {
                if ["OnCrosswalk","OnRoad","CenterOf","Pedestrian"].contains(&f.pred.as_str()) {
                    println!("   {f}");
                }
            }
            for p in &state.peds {
                if p.on_road(&cfg) { println!("   road-ped id={} x={:.1} y={:.2} phase={:?}", p.id, p.x, p.y, p.phase); }
            }
            break;
        }
        state = step(&state, action, &cfg);
    }
}
