use vsr_core::sim::*;
use vsr_core::predicates::CameraModel;
use vsr_core::scene::label_entities;

fn main() {
    let cfg = ScenarioConfig { density: Density::High, occlusion: OcclusionLevel::Full, ..Default::default() };
    let mut state = init_episode(&cfg, 0).unwrap();
    state.ego_x = 26.9; state.ego_v = 1.42;
    let cam = CameraModel::default();
    let map = render_semantic_map(&state, &cam, &cfg);
    for e in label_entities(&map, "pedestrian").unwrap() {
        println!("ped entity bbox rows [{},{}] cols [{},{}] px={}", e.bbox.min_row, e.bbox.max_row, e.bbox.min_col, e.bbox.max_col, e.mask.len());
    }
    for e in label_entities(&map, "vehicle").unwrap() {
        println!("veh entity bbox rows [{},{}] cols [{},{}] px={}", e.bbox.min_row, e.bbox.max_row, e.bbox.min_col, e.bbox.max_col, e.mask.len());
    }
    // y-extents of waiting peds
    for p in state.peds.iter().take(3) {
        println!("ped{} x={:.2} y={:.2}", p.id, p.x, p.y);
    }
}
