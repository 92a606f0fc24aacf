use vsr_core::sim::*;
use vsr_core::sfol::{parse_rules, DEFAULT_RULES};

fn main() {
    let variant = std::env::args().nth(1).unwrap_or("ce_cs".into());
    let cfg = ScenarioConfig { density: Density::High, occlusion: OcclusionLevel::Full, ..Default::default() };
    let rules = Variant::parse(&variant).unwrap().filter_rules(parse_rules(DEFAULT_RULES).unwrap());
    let mut colls = 0;
    for ep in 0..30u64 {
        let seed = ep.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(2024);
        let state = init_episode(&cfg, seed).unwrap();
        let (records, outcome) = run_episode_from_state(state.clone(), ControllerKind::Sfol, &rules, &cfg);
        if outcome.result == EpisodeResult::Collision {
            colls += 1;
            let last = records.last().unwrap();
            let n = records.len();
            let prev = &records[n.saturating_sub(8)..];
            println!("ep {ep}: collide t={:.1} x={:.1} v_impact={:.2}", last.t, 75.0-last.d_cross, last.v);
            for r in prev {
                println!("   t={:.1} v={:.2} a={:+.1} wsaf={:.2} weff={:.2} dped={:?}",
                    r.t, r.v, r.a, r.w_saf, r.w_eff, r.d_ped.map(|d| (d*10.0).round()/10.0));
            }
        }
    }
    println!("total collisions {colls}/30");
}
