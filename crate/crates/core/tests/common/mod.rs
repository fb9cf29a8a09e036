//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use pipeboot::graphcut::maxflow::{Endpoint, Terminal};
use pipeboot::graphcut::{CrfParams, FlowGraph, Labeling};
use pipeboot::metrics::SsimConfig;
use pipeboot::nn::{Conv2d, Dense};
use pipeboot::{Rng, Tensor};

pub fn random_tensor(shape: &[usize], rng: &mut Rng, lo: f64, hi: f64) -> Tensor {
    Tensor::from_fn(shape, |_| rng.uniform_range(lo, hi))
}

/// Values in `[-hi, -gap] U [gap, hi]`.
pub fn away_from_zero(shape: &[usize], rng: &mut Rng, gap: f64, hi: f64) -> Tensor {
    Tensor::from_fn(shape, |_| {
        let m = rng.uniform_range(gap, hi);
        if rng.uniform() < 0.5 {
            -m
        } else {
            m
        }
    })
}

/// Relative error between two gradient vectors, `|a - n| / max(|a|, |n|)`
/// in the Euclidean norm. Two zero vectors compare equal.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = na.max(nn);
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

/// Central differences of `f` with respect to every entry of `x`.
pub fn numeric_grad(x: &Tensor, eps: f64, mut f: impl FnMut(&Tensor) -> f64) -> Vec<f64> {
    let mut probe = x.clone();
    (0..x.len())
        .map(|i| {
            let orig = probe.data()[i];
            probe.data_mut()[i] = orig + eps;
            let up = f(&probe);
            probe.data_mut()[i] = orig - eps;
            let down = f(&probe);
            probe.data_mut()[i] = orig;
            (up - down) / (2.0 * eps)
        })
        .collect()
}

pub fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

/// Direct seven-loop cross-correlation with zero padding.
pub fn naive_conv(x: &Tensor, conv: &Conv2d) -> Tensor {
    let s = x.shape();
    let (n, cin, h, w) = (s[0], s[1], s[2], s[3]);
    let (cout, k) = (conv.out_channels(), conv.kernel());
    let pad = (k / 2) as isize;
    let wt = conv.weight.data();
    let mut out = Tensor::zeros(&[n, cout, h, w]);
    for b in 0..n {
        for co in 0..cout {
            for y in 0..h {
                for xx in 0..w {
                    let mut acc = conv.bias.data()[co];
                    for ci in 0..cin {
                        for ky in 0..k {
                            for kx in 0..k {
                                let sy = y as isize + ky as isize - pad;
                                let sx = xx as isize + kx as isize - pad;
                                if sy < 0 || sx < 0 || sy >= h as isize || sx >= w as isize {
                                    continue;
                                }
                                let xv = x.data()[((b * cin + ci) * h + sy as usize) * w + sx as usize];
                                acc += wt[((co * cin + ci) * k + ky) * k + kx] * xv;
                            }
                        }
                    }
                    out.data_mut()[((b * cout + co) * h + y) * w + xx] = acc;
                }
            }
        }
    }
    out
}

pub fn naive_dense(x: &Tensor, d: &Dense) -> Tensor {
    let n = x.shape()[0];
    let (i, o) = (d.in_features(), d.out_features());
    Tensor::from_fn(&[n, o], |idx| {
        let (b, j) = (idx / o, idx % o);
        d.bias.data()[j] + (0..i).map(|t| d.weight.data()[j * i + t] * x.data()[b * i + t]).sum::<f64>()
    })
}

/// Random graph with `n` inner nodes and integer capacities in `1..=max_cap`.
pub fn random_graph(n: usize, arcs: usize, max_cap: usize, rng: &mut Rng) -> FlowGraph {
    let mut g = FlowGraph::new(n);
    let ends = n + 2;
    let endpoint = |i: usize| -> Endpoint {
        if i == n {
            Endpoint::Terminal(Terminal::Source)
        } else if i == n + 1 {
            Endpoint::Terminal(Terminal::Sink)
        } else {
            Endpoint::Node(i)
        }
    };
    for _ in 0..arcs {
        let a = rng.below(ends);
        let mut b = rng.below(ends);
        while b == a {
            b = rng.below(ends);
        }
        g.add_arc(endpoint(a), endpoint(b), (1 + rng.below(max_cap)) as f64);
    }
    g
}

/// Minimum s-t cut capacity over all `2^n` partitions of the inner nodes.
pub fn brute_min_cut(g: &FlowGraph) -> f64 {
    let n = g.node_count();
    let side_of = |mask: u32, e: Endpoint| match e {
        Endpoint::Node(i) => mask >> i & 1 == 1,
        Endpoint::Terminal(Terminal::Source) => true,
        Endpoint::Terminal(Terminal::Sink) => false,
    };
    (0..1u32 << n)
        .map(|mask| {
            g.arcs()
                .iter()
                .filter(|a| side_of(mask, a.from) && !side_of(mask, a.to))
                .map(|a| a.capacity)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Grid energy written out from the model definition.
pub fn oracle_energy(labels: &[usize], w: usize, h: usize, image: &[f64], p: &CrfParams) -> f64 {
    let v = |l: usize| p.label_values[l];
    let mut e = 0.0;
    for (i, &l) in labels.iter().enumerate() {
        let d = (v(l) - image[i]).powi(2);
        e += match p.data_trunc {
            Some(t) => d.min(t),
            None => d,
        };
    }
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let pair = |j: usize| p.lambda * (v(labels[i]) - v(labels[j])).abs().min(p.smooth_trunc);
            if x + 1 < w {
                e += pair(i + 1);
            }
            if y + 1 < h {
                e += pair(i + w);
            }
        }
    }
    e
}

/// Lowest energy over every labeling reachable by one alpha-expansion of `f`.
pub fn best_expansion(f: &Labeling, alpha: usize, image: &[f64], p: &CrfParams) -> f64 {
    let n = f.labels.len();
    (0..1u32 << n)
        .map(|mask| {
            let labels: Vec<usize> =
                (0..n).map(|i| if mask >> i & 1 == 1 { alpha } else { f.labels[i] }).collect();
            oracle_energy(&labels, f.width, f.height, image, p)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Lowest energy over every labeling reachable by one alpha-beta swap of `f`.
pub fn best_swap(f: &Labeling, alpha: usize, beta: usize, image: &[f64], p: &CrfParams) -> f64 {
    let active: Vec<usize> = (0..f.labels.len())
        .filter(|&i| f.labels[i] == alpha || f.labels[i] == beta)
        .collect();
    (0..1u32 << active.len())
        .map(|mask| {
            let mut labels = f.labels.clone();
            for (b, &i) in active.iter().enumerate() {
                labels[i] = if mask >> b & 1 == 1 { alpha } else { beta };
            }
            oracle_energy(&labels, f.width, f.height, image, p)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Global minimum energy over all `K^n` labelings.
pub fn brute_global_min(w: usize, h: usize, image: &[f64], p: &CrfParams) -> f64 {
    let n = w * h;
    let k = p.num_labels();
    let mut labels = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(oracle_energy(&labels, w, h, image, p));
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            labels[i] += 1;
            if labels[i] < k {
                break;
            }
            labels[i] = 0;
            i += 1;
        }
    }
}

/// Every labeling of `n` pixels with `k` labels, in lexicographic order.
pub fn all_labelings(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let total = k.pow(n as u32);
    for mut code in 0..total {
        let mut l = vec![0; n];
        for slot in l.iter_mut() {
            *slot = code % k;
            code /= k;
        }
        out.push(l);
    }
    out
}

/// SSIM by explicit double loop over window positions with the 2-D Gaussian window.
pub fn naive_ssim(a: &Tensor, b: &Tensor, cfg: &SsimConfig) -> f64 {
    let (h, w) = (a.shape()[0], a.shape()[1]);
    let k = cfg.window;
    let r = (k / 2) as f64;
    let mut win = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let (di, dj) = (i as f64 - r, j as f64 - r);
            win[i * k + j] = (-(di * di + dj * dj) / (2.0 * cfg.sigma * cfg.sigma)).exp();
        }
    }
    let total: f64 = win.iter().sum();
    win.iter_mut().for_each(|v| *v /= total);
    let (c1, c2) = ((cfg.k1 * cfg.dynamic_range).powi(2), (cfg.k2 * cfg.dynamic_range).powi(2));
    let (x, y) = (a.data(), b.data());
    let mut sum = 0.0;
    let mut count = 0usize;
    for oy in 0..=h - k {
        for ox in 0..=w - k {
            let (mut mx, mut my) = (0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let p = (oy + i) * w + ox + j;
                    mx += win[i * k + j] * x[p];
                    my += win[i * k + j] * y[p];
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for i in 0..k {
                for j in 0..k {
                    let p = (oy + i) * w + ox + j;
                    let wt = win[i * k + j];
                    vx += wt * (x[p] - mx).powi(2);
                    vy += wt * (y[p] - my).powi(2);
                    cxy += wt * (x[p] - mx) * (y[p] - my);
                }
            }
            sum += ((2.0 * mx * my + c1) * (2.0 * cxy + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    sum / count as f64
}

pub mod gradcheck {
    //! Central-difference checks returning the worst relative error per call.

    use super::{away_from_zero, dot, numeric_grad, random_tensor, rel_err};
    use pipeboot::nn::ops;
    use pipeboot::nn::{build_skip_autoencoder, Conv2d, Dense, Layer, Network};
    use pipeboot::{Rng, Tensor};

    pub const EPS: f64 = 1e-5;

    pub fn conv(rng: &mut Rng) -> f64 {
        let (n, cin, cout, h, w) = (1 + rng.below(2), 1 + rng.below(3), 1 + rng.below(3), 3 + rng.below(3), 3 + rng.below(3));
        let k = [1, 3, 5][rng.below(3)];
        let x = random_tensor(&[n, cin, h, w], rng, -1.0, 1.0);
        let wt = random_tensor(&[cout, cin, k, k], rng, -1.0, 1.0);
        let b = random_tensor(&[cout], rng, -1.0, 1.0);
        let r = random_tensor(&[n, cout, h, w], rng, -1.0, 1.0);
        let conv = Conv2d::from_parts(wt.clone(), b.clone());
        let (gx, pg) = ops::conv2d_backward(&x, &conv, &r).unwrap();
        let nx = numeric_grad(&x, EPS, |x| dot(&ops::conv2d_forward(x, &conv).unwrap(), &r));
        let nw = numeric_grad(&wt, EPS, |wt| {
            dot(&ops::conv2d_forward(&x, &Conv2d::from_parts(wt.clone(), b.clone())).unwrap(), &r)
        });
        let nb = numeric_grad(&b, EPS, |b| {
            dot(&ops::conv2d_forward(&x, &Conv2d::from_parts(wt.clone(), b.clone())).unwrap(), &r)
        });
        rel_err(gx.data(), &nx).max(rel_err(pg.weight.data(), &nw)).max(rel_err(pg.bias.data(), &nb))
    }

    pub fn dense(rng: &mut Rng) -> f64 {
        let (n, i, o) = (1 + rng.below(3), 1 + rng.below(8), 1 + rng.below(6));
        let x = random_tensor(&[n, i], rng, -1.0, 1.0);
        let wt = random_tensor(&[o, i], rng, -1.0, 1.0);
        let b = random_tensor(&[o], rng, -1.0, 1.0);
        let r = random_tensor(&[n, o], rng, -1.0, 1.0);
        let d = Dense::from_parts(wt.clone(), b.clone());
        let (gx, pg) = ops::dense_backward(&x, &d, &r).unwrap();
        let nx = numeric_grad(&x, EPS, |x| dot(&ops::dense_forward(x, &d).unwrap(), &r));
        let nw = numeric_grad(&wt, EPS, |wt| {
            dot(&ops::dense_forward(&x, &Dense::from_parts(wt.clone(), b.clone())).unwrap(), &r)
        });
        let nb = numeric_grad(&b, EPS, |b| {
            dot(&ops::dense_forward(&x, &Dense::from_parts(wt.clone(), b.clone())).unwrap(), &r)
        });
        rel_err(gx.data(), &nx).max(rel_err(pg.weight.data(), &nw)).max(rel_err(pg.bias.data(), &nb))
    }

    pub fn relu(rng: &mut Rng) -> f64 {
        let x = away_from_zero(&[2, 3, 4], rng, 1e-3, 2.0);
        let r = random_tensor(&[2, 3, 4], rng, -1.0, 1.0);
        let gx = ops::relu_backward(&x, &r).unwrap();
        let nx = numeric_grad(&x, EPS, |x| dot(&ops::relu_forward(x), &r));
        rel_err(gx.data(), &nx)
    }

    pub fn mse(rng: &mut Rng) -> f64 {
        let shape = [1 + rng.below(3), 1, 4, 4];
        let p = random_tensor(&shape, rng, -2.0, 2.0);
        let t = random_tensor(&shape, rng, -2.0, 2.0);
        let (_, g) = ops::mse_loss(&p, &t).unwrap();
        let n = numeric_grad(&p, EPS, |p| ops::mse_loss(p, &t).unwrap().0);
        rel_err(g.data(), &n)
    }

    pub fn xent(rng: &mut Rng) -> f64 {
        let (n, k) = (1 + rng.below(4), 2 + rng.below(5));
        let logits = random_tensor(&[n, k], rng, -3.0, 3.0);
        let labels: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        let (_, g) = ops::softmax_xent(&logits, &labels).unwrap();
        let num = numeric_grad(&logits, EPS, |l| ops::softmax_xent(l, &labels).unwrap().0);
        rel_err(g.data(), &num)
    }

    fn ae_loss(net: &Network, x: &Tensor, t: &Tensor) -> f64 {
        ops::mse_loss(&net.forward(x).unwrap(), t).unwrap().0
    }

    /// Depth-4 skip autoencoder on a `1x1x6x6` input: input and every parameter.
    /// Smallest |pre-activation| feeding any ReLU.
    fn kink_margin(net: &Network, x: &Tensor) -> f64 {
        let mut margin = f64::INFINITY;
        for (pos, layer) in net.layers().iter().enumerate() {
            if !matches!(layer, Layer::Relu) {
                continue;
            }
            let skips = net.skips().iter().copied().filter(|s| s.to < pos).collect();
            let prefix = Network::new(net.layers()[..pos].to_vec(), skips).unwrap();
            let z = prefix.forward(x).unwrap();
            margin = z.data().iter().fold(margin, |m, v| m.min(v.abs()));
        }
        margin
    }

    pub fn skip_autoencoder(rng: &mut Rng) -> f64 {
        let (net, x) = loop {
            let mut net = build_skip_autoencoder(4, 3, 1, rng).unwrap();
            for layer in net.layers_mut() {
                if let Some((_, b)) = layer.params_mut() {
                    b.data_mut().iter_mut().for_each(|v| *v = rng.uniform_range(-0.1, 0.1));
                }
            }
            let x = random_tensor(&[1, 1, 6, 6], rng, 0.0, 1.0);
            if kink_margin(&net, &x) > 1e-4 {
                break (net, x);
            }
        };
        let t = random_tensor(&[1, 1, 6, 6], rng, 0.0, 1.0);
        let (out, cache) = net.forward_train(&x).unwrap();
        let (_, g) = ops::mse_loss(&out, &t).unwrap();
        let (grads, gx) = net.backward(&cache, &g).unwrap();
        let mut worst = rel_err(gx.data(), &numeric_grad(&x, EPS, |x| ae_loss(&net, x, &t)));
        for pos in 0..net.layers().len() {
            let Some(pg) = grads.layers[pos].clone() else { continue };
            for (which, analytic) in [(0, &pg.weight), (1, &pg.bias)] {
                let mut probe = net.clone();
                let len = analytic.len();
                let mut numeric = Vec::with_capacity(len);
                for i in 0..len {
                    let mut eval = |delta: f64| {
                        let (w, b) = probe.layers_mut()[pos].params_mut().unwrap();
                        let slot = if which == 0 { w } else { b };
                        slot.data_mut()[i] += delta;
                        let l = ae_loss(&probe, &x, &t);
                        let (w, b) = probe.layers_mut()[pos].params_mut().unwrap();
                        let slot = if which == 0 { w } else { b };
                        slot.data_mut()[i] -= delta;
                        l
                    };
                    numeric.push((eval(EPS) - eval(-EPS)) / (2.0 * EPS));
                }
                worst = worst.max(rel_err(analytic.data(), &numeric));
            }
        }
        worst
    }
}

/// Writes a two-record CIFAR-10 batch and returns its path, labels and pixel bytes.
pub fn cifar_fixture(dir: &std::path::Path) -> (std::path::PathBuf, [usize; 2], [Vec<u8>; 2]) {
    let labels = [3usize, 9];
    let pixels = [
        (0..3072).map(|i| (i % 251) as u8).collect::<Vec<u8>>(),
        (0..3072).map(|i| (255 - (i * 7) % 256) as u8).collect::<Vec<u8>>(),
    ];
    let mut bytes = Vec::new();
    for (l, p) in labels.iter().zip(&pixels) {
        bytes.push(*l as u8);
        bytes.extend_from_slice(p);
    }
    let path = dir.join("data_batch_fixture.bin");
    std::fs::write(&path, bytes).unwrap();
    (path, labels, pixels)
}
