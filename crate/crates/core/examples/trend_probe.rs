use vsr_core::sim::*;

fn main() {
    let episodes: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(30);
    let cfg = ScenarioConfig::default();
    let cells = [(Density::High, OcclusionLevel::Full)];
    for (name, kind, variant) in [
        ("baseline fixed", ControllerKind::Fixed, Variant::CeCs),
        ("sfol CE&CS", ControllerKind::Sfol, Variant::CeCs),
        ("sfol CE&PS", ControllerKind::Sfol, Variant::CePs),
        ("sfol PE&CS", ControllerKind::Sfol, Variant::PeCs),
        ("sfol PE&PS", ControllerKind::Sfol, Variant::PePs),
    ] {
        let t0 = std::time::Instant::now();
        let table = evaluate(kind, variant, &cells, episodes, 7, &cfg).unwrap();
        let r = &table.rows[0];
        println!(
            "{name:15} S={:5.1} C={:5.1} T={:5.1} SD={:6.2} nearmiss={:.2} ttg={:5.1} [{:.1}s]",
            r.success_pct, r.collision_pct, r.timeout_pct, r.mean_stopping_distance,
            r.near_miss_rate, r.ttg, t0.elapsed().as_secs_f64()
        );
    }
}
