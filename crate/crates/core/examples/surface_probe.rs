use vsr_core::sim::*;
use vsr_core::sfol::{parse_rules, DEFAULT_RULES, infer};
use vsr_core::predicates::{extract_facts, CameraModel, SceneEntities};

fn main() {
    let cfg = ScenarioConfig { density: Density::High, occlusion: OcclusionLevel::Full, ..Default::default() };
    let rules = Variant::CeCs.filter_rules(parse_rules(DEFAULT_RULES).unwrap());
    let mut state = init_episode(&cfg, 0).unwrap();
    let cam = CameraModel::default();
    while state.t < 8.1 {
        let map = render_semantic_map(&state, &cam, &cfg);
        let facts = extract_facts(&map, &cam).unwrap();
        let (heads, _) = infer(&rules, &facts);
        let conf = vsr_core::sfol::rule_confidences(&heads, &rules);
        let saf: Vec<(f64,f64)> = conf[&vsr_core::sfol::RuleTag::Safety].iter().map(|c| (c.confidence, c.importance)).collect();
        let eff: Vec<(f64,f64)> = conf[&vsr_core::sfol::RuleTag::Efficiency].iter().map(|c| (c.confidence, c.importance)).collect();
        let w_saf = vsr_core::reward::reward_weight(&saf).unwrap();
        let w_eff = vsr_core::reward::reward_weight(&eff).unwrap();
        let action = controller_action(ControllerKind::Sfol, w_saf, w_eff, state.ego_v, &cfg);
        state = step(&state, action, &cfg);
    }
    let map = render_semantic_map(&state, &cam, &cfg);
    let ents = SceneEntities::extract(&map).unwrap();
    let facts = extract_facts(&map, &cam).unwrap();
    println!("ego x={:.1}", state.ego_x);
    for (i, e) in ents.pedestrians.iter().enumerate() {
        let onroad = facts.iter().any(|f| f.pred == "OnRoad" && f.args[0] == format!("p{i}"));
        let oncw = facts.iter().any(|f| f.pred == "OnCrosswalk" && f.args[0] == format!("p{i}"));
        // count band classes below
        let (mut road, mut cross, mut side, mut bg) = (0,0,0,0);
        let r0 = e.bbox.max_row + 1;
        let r1 = (e.bbox.max_row + 15).min(223);
        for r in r0..=r1 {
            for c in e.bbox.min_col..=e.bbox.max_col {
                match map.classes()[map.argmax_at(r, c)].as_str() {
                    "road" => road += 1, "crosswalk" => cross += 1,
                    "sidewalk" => side += 1, _ => bg += 1,
                }
            }
        }
        println!("p{i} rows[{},{}] cols[{},{}] onroad={} oncw={} band: road={} cross={} side={} bg={}",
            e.bbox.min_row, e.bbox.max_row, e.bbox.min_col, e.bbox.max_col, onroad, oncw, road, cross, side, bg);
    }
}
