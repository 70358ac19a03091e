//! Detection rate of BAS, MTP and SUP(0.1) on the synthetic corpus.

use std::time::Instant;
use textprop::evaluation::recall_curve;
use textprop::imaging::build_integral;
use textprop::pipeline::propose;
use textprop::ranking::{rank_bas, rank_mtp, rank_sup};
use textprop::synthgen::{generate_scene, SceneConfig};
use textprop::ProposalParams;

fn main() {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(100);
    let params = ProposalParams::default();
    let start = Instant::now();
    let mut runs = Vec::new();
    let mut nprops = 0;
    for seed in 0..seeds {
        let cfg = SceneConfig::corpus(seed);
        let scene = generate_scene(&cfg).unwrap();
        let set = propose(&scene.image, &params).unwrap();
        nprops += set.proposals.len();
        let ii = build_integral(&scene.heatmap);
        let bas = rank_bas(set.proposals.clone());
        let mtp = rank_mtp(set.proposals.clone(), &ii).unwrap();
        let sup = rank_sup(set.proposals, &ii, 0.1).unwrap();
        runs.push((scene.ground_truth, bas, mtp, sup));
    }
    let budgets = [10, 100, 1000];
    for (name, pick) in [("bas", 1), ("mtp", 2), ("sup", 3)] {
        let curve = recall_curve(
            runs.iter().map(|r| {
                let list = match pick {
                    1 => &r.1,
                    2 => &r.2,
                    _ => &r.3,
                };
                (list.as_slice(), r.0.as_slice())
            }),
            &budgets,
            0.5,
        );
        println!("{name}: {:?}", curve.points);
    }
    println!("mean proposals {:.1}, {:?}", nprops as f64 / seeds as f64, start.elapsed());
}
