use vsr_core::sim::*;
use vsr_core::sfol::{parse_rules, DEFAULT_RULES};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let variant = std::env::args().nth(2).unwrap_or("ce_cs".into());
    let kind = std::env::args().nth(3).unwrap_or("sfol".into());
    let cfg = ScenarioConfig { density: Density::High, occlusion: OcclusionLevel::Full, ..Default::default() };
    let rules = Variant::parse(&variant).unwrap().filter_rules(parse_rules(DEFAULT_RULES).unwrap());
    let state = init_episode(&cfg, seed).unwrap();
    let n_sudden = state.peds.iter().filter(|p| matches!(p.kind, PedKind::Sudden{..})).count();
    println!("peds={} sudden={}", state.peds.len(), n_sudden);
    let (records, outcome) = run_episode_from_state(state, ControllerKind::parse(&kind).unwrap(), &rules, &cfg);
    println!("result={:?} sd={:.1} ttg={:.0} steps={}", outcome.result, outcome.stopping_distance, outcome.ttg, records.len());
    let mut was_stopped = true;
    for r in &records {
        let stopped = r.v < 0.01;
        if stopped && !was_stopped {
            println!("STOP  t={:5.1} x={:6.1} d_cross={:6.1} d_ped={:?} wsaf={:.2} weff={:.2}",
                r.t, 75.0 - r.d_cross, r.d_cross, r.d_ped.map(|d| (d*10.0).round()/10.0), r.w_saf, r.w_eff);
        }
        was_stopped = stopped;
    }
    if let Some(last) = records.last() {
        println!("END   t={:5.1} x={:6.1} v={:.2}", last.t, 75.0 - last.d_cross, last.v);
    }
}
