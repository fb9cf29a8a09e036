mod common;

use common::*;
use pipeboot::graphcut::{
    alpha_beta_swap, alpha_expansion, denoise, energy, expansion_move, max_flow, swap_move, CrfParams,
    Labeling, OpCounter,
};
use pipeboot::{Rng, Tensor};

const GRID: [f64; 5] = [0.0, 60.0, 120.0, 180.0, 240.0];

fn grid_params(lambda: f64, trunc: f64) -> CrfParams {
    CrfParams {
        label_values: vec![0.0, 120.0, 240.0],
        lambda,
        smooth_trunc: trunc,
        data_trunc: None,
    }
}

#[test]
fn max_flow_equals_brute_force_cut() {
    let mut rng = Rng::new(11);
    for _ in 0..100 {
        let n = 1 + rng.below(10);
        let g = random_graph(n, 2 + rng.below(4 * n + 4), 10, &mut rng);
        let cut = max_flow(&g);
        assert_eq!(cut.value, brute_min_cut(&g));
        assert_eq!(g.cut_capacity(&cut.source_side), cut.value);
    }
}

#[test]
fn zero_capacity_graph_has_zero_flow() {
    let g = pipeboot::graphcut::FlowGraph::new(3);
    assert_eq!(max_flow(&g).value, 0.0);
}

#[test]
fn moves_match_exhaustive_search_on_2x2() {
    let mut rng = Rng::new(5);
    for (lambda, trunc) in [(1.0, 60.0), (0.5, 1000.0)] {
        let p = grid_params(lambda, trunc);
        for _ in 0..60 {
            let image: Vec<f64> = (0..4).map(|_| GRID[rng.below(5)]).collect();
            let img = Tensor::from_vec(&[2, 2], image.clone()).unwrap();
            let f = Labeling::new(2, 2, (0..4).map(|_| rng.below(3)).collect());
            for alpha in 0..3 {
                let out = expansion_move(&f, alpha, &img, &p, &mut OpCounter::default()).unwrap();
                assert_eq!(oracle_energy(&out.labels, 2, 2, &image, &p), best_expansion(&f, alpha, &image, &p));
                for beta in alpha + 1..3 {
                    let out = swap_move(&f, alpha, beta, &img, &p, &mut OpCounter::default()).unwrap();
                    assert_eq!(oracle_energy(&out.labels, 2, 2, &image, &p), best_swap(&f, alpha, beta, &image, &p));
                }
            }
        }
    }
}

#[test]
fn energy_matches_oracle() {
    let mut rng = Rng::new(9);
    let p = CrfParams::uniform(6, 2.5, 40.0, Some(3000.0));
    for _ in 0..30 {
        let img = random_tensor(&[4, 5], &mut rng, 0.0, 255.0);
        let f = Labeling::new(5, 4, (0..20).map(|_| rng.below(6)).collect());
        let e = energy(&f, &img, &p).unwrap();
        let o = oracle_energy(&f.labels, 5, 4, img.data(), &p);
        assert!((e.total - o).abs() < 1e-9 * o.max(1.0));
        assert!((e.data + e.smooth - e.total).abs() < 1e-9 * o.max(1.0));
    }
}

#[test]
fn expansion_converges_to_expansion_optimum() {
    let mut rng = Rng::new(3);
    let p = CrfParams::uniform(4, 3.0, 50.0, None);
    for _ in 0..10 {
        let img = random_tensor(&[3, 3], &mut rng, 0.0, 255.0);
        let run = alpha_expansion(&img, &p, &Labeling::constant(3, 3, 0)).unwrap();
        assert!(run.energy_trace.windows(2).all(|w| w[1] <= w[0]));
        let e = oracle_energy(&run.labeling.labels, 3, 3, img.data(), &p);
        for alpha in 0..4 {
            assert!(best_expansion(&run.labeling, alpha, img.data(), &p) >= e - 1e-9);
        }
        assert!(e <= 2.0 * brute_global_min(3, 3, img.data(), &p) + 1e-9);
    }
}

#[test]
fn swap_trace_is_monotone() {
    let mut rng = Rng::new(4);
    let p = CrfParams::uniform(5, 2.0, 40.0, None);
    let img = random_tensor(&[6, 6], &mut rng, 0.0, 255.0);
    let run = alpha_beta_swap(&img, &p, &Labeling::nearest(&img, &p)).unwrap();
    assert!(run.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(run.energy() <= run.energy_trace[0]);
}

#[test]
fn single_label_and_uniform_image() {
    let p = CrfParams::uniform(1, 4.0, 10.0, None);
    let img = Tensor::full(&[3, 3], 90.0);
    let out = denoise(&img, &p).unwrap();
    assert!(out.image.data().iter().all(|&v| v == 127.5));

    let p = CrfParams::uniform(4, 4.0, 10.0, None);
    let img = Tensor::full(&[4, 4], 85.0);
    let out = denoise(&img, &p).unwrap();
    assert_eq!(out.image, img);
}

#[test]
fn non_metric_params_rejected_for_expansion() {
    let p = CrfParams {
        label_values: vec![0.0, 1.0],
        lambda: -1.0,
        smooth_trunc: 1.0,
        data_trunc: None,
    };
    let img = Tensor::zeros(&[2, 2]);
    assert!(alpha_expansion(&img, &p, &Labeling::constant(2, 2, 0)).is_err());
}
