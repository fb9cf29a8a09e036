//! Embedded oracle suite run by `pipeboot selftest`.
//!
//! Each check compares a library routine against a slow, independent
//! reference on small random instances.

use std::fmt;

use crate::graphcut::maxflow::{Endpoint, SINK, SOURCE};
use crate::graphcut::{energy, expansion_move, max_flow, swap_move, CrfParams, FlowGraph, Labeling, OpCounter};
use crate::metrics::{ssim, SsimConfig};
use crate::nn::ops::{self, ParamGrads};
use crate::nn::{build_skip_autoencoder, Conv2d, Dense, Layer, Network};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Fault injection for exercising the failure path.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Faults {
    /// Run the SSIM check with a wrong K1 constant.
    pub corrupt_ssim: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{status} {:<10} {}", self.name, self.detail)
    }
}

pub fn run_selftest(seed: u64, faults: Faults) -> Vec<CheckResult> {
    vec![
        check("maxflow", || check_maxflow(seed)),
        check("expansion", || check_expansion(seed)),
        check("swap", || check_swap(seed)),
        check("gradients", || check_gradients(seed)),
        check("ssim", || check_ssim(seed, faults.corrupt_ssim)),
    ]
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> CheckResult {
    match f() {
        Ok(detail) => CheckResult { name, passed: true, detail },
        Err(detail) => CheckResult { name, passed: false, detail },
    }
}

fn brute_force_cut(g: &FlowGraph) -> f64 {
    let n = g.node_count();
    (0..1u32 << n)
        .map(|mask| {
            let side: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            g.arcs()
                .iter()
                .filter(|a| {
                    let s = |e: Endpoint| match e {
                        Endpoint::Node(i) => side[i],
                        other => other == SOURCE,
                    };
                    s(a.from) && !s(a.to)
                })
                .map(|a| a.capacity)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn check_maxflow(seed: u64) -> Result<String, String> {
    let mut rng = Rng::child(seed, 11);
    let trials = 60;
    for t in 0..trials {
        let n = 1 + rng.below(8);
        let mut g = FlowGraph::new(n);
        let ends = |rng: &mut Rng| match rng.below(n + 2) {
            i if i < n => Endpoint::Node(i),
            i if i == n => SOURCE,
            _ => SINK,
        };
        for _ in 0..rng.below(3 * n + 3) {
            let (a, b) = (ends(&mut rng), ends(&mut rng));
            if a != b {
                g.add_arc(a, b, rng.below(11) as f64);
            }
        }
        let got = max_flow(&g).value;
        let want = brute_force_cut(&g);
        if got != want {
            return Err(format!("graph {t}: flow {got} != brute-force cut {want}"));
        }
    }
    Ok(format!("{trials} random graphs"))
}

fn small_instance(rng: &mut Rng) -> (Tensor, CrfParams, Labeling) {
    const GRID: [f64; 5] = [0.0, 60.0, 120.0, 180.0, 240.0];
    let mut values: Vec<f64> = GRID.to_vec();
    rng.shuffle(&mut values);
    let mut labels = values[..3].to_vec();
    labels.sort_by(f64::total_cmp);
    let p = CrfParams {
        label_values: labels,
        lambda: rng.uniform_range(0.0, 3.0),
        smooth_trunc: rng.uniform_range(20.0, 200.0),
        data_trunc: None,
    };
    let image = Tensor::from_fn(&[2, 2], |_| rng.uniform_range(0.0, 255.0).round());
    let f = Labeling::new(2, 2, (0..4).map(|_| rng.below(3)).collect());
    (image, p, f)
}

fn e_of(f: &Labeling, image: &Tensor, p: &CrfParams) -> f64 {
    energy(f, image, p).expect("dimensions match").total
}

fn check_expansion(seed: u64) -> Result<String, String> {
    let mut rng = Rng::child(seed, 12);
    let trials = 40;
    for t in 0..trials {
        let (image, p, f) = small_instance(&mut rng);
        for alpha in 0..3 {
            let got = expansion_move(&f, alpha, &image, &p, &mut OpCounter::default())
                .map_err(|e| e.to_string())?;
            let best = (0..16u32)
                .map(|m| {
                    let labels = (0..4).map(|i| if m >> i & 1 == 1 { alpha } else { f.labels[i] }).collect();
                    e_of(&Labeling::new(2, 2, labels), &image, &p)
                })
                .fold(f64::INFINITY, f64::min);
            let e = e_of(&got, &image, &p);
            if (e - best).abs() > 1e-9 * best.abs().max(1.0) {
                return Err(format!("instance {t}, alpha {alpha}: energy {e} != optimum {best}"));
            }
        }
    }
    Ok(format!("{trials} random 2x2 instances"))
}

fn check_swap(seed: u64) -> Result<String, String> {
    let mut rng = Rng::child(seed, 13);
    let trials = 40;
    for t in 0..trials {
        let (image, p, f) = small_instance(&mut rng);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let got = swap_move(&f, a, b, &image, &p, &mut OpCounter::default()).map_err(|e| e.to_string())?;
            let movable: Vec<usize> = (0..4).filter(|&i| f.labels[i] == a || f.labels[i] == b).collect();
            let best = (0..1u32 << movable.len())
                .map(|m| {
                    let mut labels = f.labels.clone();
                    for (bit, &i) in movable.iter().enumerate() {
                        labels[i] = if m >> bit & 1 == 1 { a } else { b };
                    }
                    e_of(&Labeling::new(2, 2, labels), &image, &p)
                })
                .fold(f64::INFINITY, f64::min);
            let e = e_of(&got, &image, &p);
            if (e - best).abs() > 1e-9 * best.abs().max(1.0) {
                return Err(format!("instance {t}, swap ({a},{b}): energy {e} != optimum {best}"));
            }
        }
    }
    Ok(format!("{trials} random 2x2 instances"))
}

const FD_EPS: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

/// Central differences of `loss` at `x`, compared against `analytic`.
fn fd_check(x: &mut Tensor, analytic: &Tensor, mut loss: impl FnMut(&Tensor) -> f64) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for i in 0..x.len() {
        let orig = x.data()[i];
        x.data_mut()[i] = orig + FD_EPS;
        let up = loss(x);
        x.data_mut()[i] = orig - FD_EPS;
        let down = loss(x);
        x.data_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * FD_EPS);
        worst = worst.max(rel_err(numeric, analytic.data()[i]));
    }
    if worst < FD_TOL {
        Ok(worst)
    } else {
        Err(format!("relative error {worst:.3e}"))
    }
}

/// `sum(y * r)`: a scalar whose gradient with respect to `y` is `r`.
fn probe(y: &Tensor, r: &Tensor) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

fn away_from_zero(rng: &mut Rng, shape: &[usize]) -> Tensor {
    Tensor::from_fn(shape, |_| {
        let v = rng.uniform_range(0.05, 1.0);
        if rng.uniform() < 0.5 { -v } else { v }
    })
}

fn check_gradients(seed: u64) -> Result<String, String> {
    let mut rng = Rng::child(seed, 14);
    let err = |what: &str, e: String| format!("{what}: {e}");

    let conv = Conv2d::new(2, 3, 3, &mut rng);
    let x = Tensor::from_fn(&[1, 2, 4, 4], |_| rng.normal());
    let r = Tensor::from_fn(&[1, 3, 4, 4], |_| rng.normal());
    let (gx, ParamGrads { weight: gw, .. }) = ops::conv2d_backward(&x, &conv, &r).map_err(|e| e.to_string())?;
    fd_check(&mut x.clone(), &gx, |x| probe(&ops::conv2d_forward(x, &conv).expect("shape"), &r))
        .map_err(|e| err("conv2d input", e))?;
    fd_check(&mut conv.weight.clone(), &gw, |w| {
        let c = Conv2d::from_parts(w.clone(), conv.bias.clone());
        probe(&ops::conv2d_forward(&x, &c).expect("shape"), &r)
    })
    .map_err(|e| err("conv2d weight", e))?;

    let dense = Dense::new(5, 3, &mut rng);
    let x = Tensor::from_fn(&[2, 5], |_| rng.normal());
    let r = Tensor::from_fn(&[2, 3], |_| rng.normal());
    let (gx, _) = ops::dense_backward(&x, &dense, &r).map_err(|e| e.to_string())?;
    fd_check(&mut x.clone(), &gx, |x| probe(&ops::dense_forward(x, &dense).expect("shape"), &r))
        .map_err(|e| err("dense input", e))?;

    let x = away_from_zero(&mut rng, &[10]);
    let r = Tensor::from_fn(&[10], |_| rng.normal());
    let gx = ops::relu_backward(&x, &r).map_err(|e| e.to_string())?;
    fd_check(&mut x.clone(), &gx, |x| probe(&ops::relu_forward(x), &r)).map_err(|e| err("relu", e))?;

    let target = Tensor::from_fn(&[2, 3], |_| rng.normal());
    let pred = Tensor::from_fn(&[2, 3], |_| rng.normal());
    let (_, g) = ops::mse_loss(&pred, &target).map_err(|e| e.to_string())?;
    fd_check(&mut pred.clone(), &g, |p| ops::mse_loss(p, &target).expect("shape").0).map_err(|e| err("mse", e))?;

    let logits = Tensor::from_fn(&[3, 4], |_| rng.normal());
    let labels = [0, 3, 1];
    let (_, g) = ops::softmax_xent(&logits, &labels).map_err(|e| e.to_string())?;
    fd_check(&mut logits.clone(), &g, |l| ops::softmax_xent(l, &labels).expect("labels").0)
        .map_err(|e| err("softmax_xent", e))?;

    let net = build_skip_autoencoder(4, 3, 1, &mut rng).map_err(|e| e.to_string())?;
    let x = Tensor::from_fn(&[1, 1, 6, 6], |_| rng.normal());
    let (y, cache) = net.forward_train(&x).map_err(|e| e.to_string())?;
    let r = Tensor::from_fn(y.shape(), |_| rng.normal());
    let (grads, gx) = net.backward(&cache, &r).map_err(|e| e.to_string())?;
    fd_check(&mut x.clone(), &gx, |x| probe(&net.forward(x).expect("shape"), &r))
        .map_err(|e| err("skip autoencoder input", e))?;
    let first = grads.layers[0].as_ref().ok_or("missing conv gradient")?;
    fd_check(&mut first_weight(&net), &first.weight, |w| probe(&with_first_weight(&net, w).forward(&x).expect("shape"), &r))
        .map_err(|e| err("skip autoencoder weight", e))?;
    Ok("conv2d, dense, relu, mse, softmax_xent, skip autoencoder".into())
}

fn first_weight(net: &Network) -> Tensor {
    match &net.layers()[0] {
        Layer::Conv2d(c) => c.weight.clone(),
        _ => unreachable!("autoencoders start with a convolution"),
    }
}

fn with_first_weight(net: &Network, w: &Tensor) -> Network {
    let mut out = net.clone();
    if let Layer::Conv2d(c) = &mut out.layers_mut()[0] {
        c.weight = w.clone();
    }
    out
}

/// Direct double loop over window positions with explicit 2-D weights.
fn naive_ssim(a: &Tensor, b: &Tensor) -> f64 {
    let (k1, k2, l, sigma, win) = (0.01, 0.03, 255.0, 1.5, 11usize);
    let (h, w) = (a.shape()[0], a.shape()[1]);
    let r = (win / 2) as f64;
    let mut weights = vec![0.0; win * win];
    for i in 0..win {
        for j in 0..win {
            let (di, dj) = (i as f64 - r, j as f64 - r);
            weights[i * win + j] = (-(di * di + dj * dj) / (2.0 * sigma * sigma)).exp();
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|v| *v /= total);
    let (c1, c2) = ((k1 * l) * (k1 * l), (k2 * l) * (k2 * l));
    let mut acc = 0.0;
    let mut count = 0;
    for y in 0..=h - win {
        for x in 0..=w - win {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    let wt = weights[i * win + j];
                    let (va, vb) = (a.at2(y + i, x + j), b.at2(y + i, x + j));
                    ma += wt * va;
                    mb += wt * vb;
                    saa += wt * va * va;
                    sbb += wt * vb * vb;
                    sab += wt * va * vb;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            acc += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    acc / count as f64
}

fn check_ssim(seed: u64, corrupt: bool) -> Result<String, String> {
    let mut rng = Rng::child(seed, 15);
    let cfg = if corrupt {
        SsimConfig { k1: 0.02, ..SsimConfig::default() }
    } else {
        SsimConfig::default()
    };
    let trials = 10;
    for t in 0..trials {
        let a = Tensor::from_fn(&[16, 16], |_| rng.uniform_range(0.0, 255.0));
        let b = a.map(|v| (v + 40.0 * rng.normal()).clamp(0.0, 255.0));
        let got = ssim(&a, &b, &cfg).map_err(|e| e.to_string())?;
        let want = naive_ssim(&a, &b);
        if (got - want).abs() > 1e-9 {
            return Err(format!("pair {t}: ssim {got} != naive {want}"));
        }
        let same = ssim(&a, &a, &cfg).map_err(|e| e.to_string())?;
        if same != 1.0 {
            return Err(format!("pair {t}: ssim(x, x) = {same}"));
        }
    }
    let zeros = Tensor::zeros(&[12, 12]);
    let full = Tensor::full(&[12, 12], 255.0);
    let c1 = (0.01f64 * 255.0).powi(2);
    let closed = c1 / (255.0 * 255.0 + c1);
    let got = ssim(&zeros, &full, &cfg).map_err(|e| e.to_string())?;
    if (got - closed).abs() > 1e-9 {
        return Err(format!("constant images: {got} != {closed}"));
    }
    Ok(format!("{trials} random 16x16 pairs against the naive oracle"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for r in run_selftest(0, Faults::default()) {
            assert!(r.passed, "{r}");
        }
    }

    #[test]
    fn corrupted_ssim_is_named() {
        let failed: Vec<_> = run_selftest(0, Faults { corrupt_ssim: true })
            .into_iter()
            .filter(|r| !r.passed)
            .map(|r| r.name)
            .collect();
        assert_eq!(failed, vec!["ssim"]);
    }
}
