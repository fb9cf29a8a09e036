//! Expansion and swap moves, and the algorithms that iterate them.

use super::crf::{check_dims, energy_counted, CrfParams, Labeling};
use super::maxflow::{max_flow_counted, FlowGraph, SINK, SOURCE};
use super::{GraphCutError, OpCounter};
use crate::tensor::Tensor;

/// Optimal alpha-expansion of `f`: every pixel keeps its label or switches to
/// `alpha`, chosen by one minimum cut.
///
/// Pixels on the source side of the cut keep their label. Neighbours with
/// different current labels are joined through an auxiliary node carrying
/// `V(f_p, f_q)` to the sink; equal-label neighbours share one edge of
/// weight `V(f_p, alpha)`. The returned labeling never has higher energy than `f`.
pub fn expansion_move(
    f: &Labeling,
    alpha: usize,
    image: &Tensor,
    p: &CrfParams,
    ops: &mut OpCounter,
) -> Result<Labeling, GraphCutError> {
    check_dims(f, image, p)?;
    p.check_metric()?;
    if alpha >= p.num_labels() {
        return Err(GraphCutError::BadParams(format!("alpha {alpha} out of range")));
    }
    if f.labels.iter().all(|&l| l == alpha) {
        return Ok(f.clone());
    }
    let n = f.labels.len();
    let mut g = FlowGraph::new(n);
    for (px, (&l, &v)) in f.labels.iter().zip(image.data()).enumerate() {
        g.add_arc(SOURCE, px, p.data_cost(alpha, v));
        let keep = if l == alpha { f64::INFINITY } else { p.data_cost(l, v) };
        g.add_arc(px, SINK, keep);
    }
    ops.add(4 * n as u64);
    for (a, b) in f.neighbor_pairs() {
        let (la, lb) = (f.labels[a], f.labels[b]);
        if la == lb {
            let w = p.smooth_cost(la, alpha);
            if w > 0.0 {
                g.add_edge(a, b, w);
            }
            ops.add(2);
        } else {
            let aux = g.add_node();
            g.add_edge(a, aux, p.smooth_cost(la, alpha));
            g.add_edge(aux, b, p.smooth_cost(alpha, lb));
            g.add_arc(aux, SINK, p.smooth_cost(la, lb));
            ops.add(6);
        }
    }
    let cut = max_flow_counted(&g, ops);
    let labels = f
        .labels
        .iter()
        .zip(&cut.source_side)
        .map(|(&l, &keep)| if keep { l } else { alpha })
        .collect();
    let candidate = Labeling::new(f.width, f.height, labels);
    better_of(f, candidate, image, p, ops)
}

/// Optimal alpha-beta swap: pixels currently labelled `alpha` or `beta` are
/// relabelled between the two by one minimum cut; others are untouched.
/// Source side takes `alpha`.
pub fn swap_move(
    f: &Labeling,
    alpha: usize,
    beta: usize,
    image: &Tensor,
    p: &CrfParams,
    ops: &mut OpCounter,
) -> Result<Labeling, GraphCutError> {
    if alpha == beta {
        return Err(GraphCutError::SameLabels(alpha));
    }
    check_dims(f, image, p)?;
    if alpha.max(beta) >= p.num_labels() {
        return Err(GraphCutError::BadParams(format!("labels ({alpha},{beta}) out of range")));
    }
    let active: Vec<usize> = (0..f.labels.len())
        .filter(|&i| f.labels[i] == alpha || f.labels[i] == beta)
        .collect();
    if active.is_empty() {
        return Ok(f.clone());
    }
    let mut node_of = vec![usize::MAX; f.labels.len()];
    for (k, &px) in active.iter().enumerate() {
        node_of[px] = k;
    }
    // Costs of taking alpha / beta, including edges to fixed neighbours.
    let mut cost_alpha: Vec<f64> = active.iter().map(|&px| p.data_cost(alpha, image.data()[px])).collect();
    let mut cost_beta: Vec<f64> = active.iter().map(|&px| p.data_cost(beta, image.data()[px])).collect();
    let mut inner_edges = Vec::new();
    for (a, b) in f.neighbor_pairs() {
        match (node_of[a], node_of[b]) {
            (usize::MAX, usize::MAX) => {}
            (na, usize::MAX) => {
                cost_alpha[na] += p.smooth_cost(alpha, f.labels[b]);
                cost_beta[na] += p.smooth_cost(beta, f.labels[b]);
                ops.add(6);
            }
            (usize::MAX, nb) => {
                cost_alpha[nb] += p.smooth_cost(alpha, f.labels[a]);
                cost_beta[nb] += p.smooth_cost(beta, f.labels[a]);
                ops.add(6);
            }
            (na, nb) => inner_edges.push((na, nb)),
        }
    }
    ops.add(4 * active.len() as u64);
    let mut g = FlowGraph::new(active.len());
    for k in 0..active.len() {
        // Sink side means beta, paying the source arc; source side pays the sink arc.
        g.add_arc(SOURCE, k, cost_beta[k]);
        g.add_arc(k, SINK, cost_alpha[k]);
    }
    let w = p.smooth_cost(alpha, beta);
    ops.add(2);
    if w > 0.0 {
        for (na, nb) in inner_edges {
            g.add_edge(na, nb, w);
        }
    }
    let cut = max_flow_counted(&g, ops);
    let mut labels = f.labels.clone();
    for (k, &px) in active.iter().enumerate() {
        labels[px] = if cut.source_side[k] { alpha } else { beta };
    }
    let candidate = Labeling::new(f.width, f.height, labels);
    better_of(f, candidate, image, p, ops)
}

fn better_of(
    f: &Labeling,
    candidate: Labeling,
    image: &Tensor,
    p: &CrfParams,
    ops: &mut OpCounter,
) -> Result<Labeling, GraphCutError> {
    let before = energy_counted(f, image, p, ops)?.total;
    let after = energy_counted(&candidate, image, p, ops)?.total;
    Ok(if after <= before { candidate } else { f.clone() })
}

/// Result of a move-making run.
#[derive(Debug, Clone, PartialEq)]
pub struct MoveRun {
    pub labeling: Labeling,
    /// Energy of the initial labeling, then after every attempted move.
    pub energy_trace: Vec<f64>,
    /// Full label cycles performed, including the final one without improvement.
    pub cycles: usize,
    pub ops: u64,
}

impl MoveRun {
    pub fn energy(&self) -> f64 {
        *self.energy_trace.last().expect("trace starts with the initial energy")
    }
}

/// Cycles `alpha` over labels in ascending order, accepting an expansion only
/// if it strictly lowers the energy, until a whole cycle changes nothing.
pub fn alpha_expansion(image: &Tensor, p: &CrfParams, init: &Labeling) -> Result<MoveRun, GraphCutError> {
    p.validate()?;
    p.check_metric()?;
    let mut ops = OpCounter::default();
    let mut current = init.clone();
    let mut e = energy_counted(&current, image, p, &mut ops)?.total;
    let mut trace = vec![e];
    let mut cycles = 0;
    loop {
        cycles += 1;
        let mut improved = false;
        for alpha in 0..p.num_labels() {
            let cand = expansion_move(&current, alpha, image, p, &mut ops)?;
            let ce = energy_counted(&cand, image, p, &mut ops)?.total;
            if ce < e {
                current = cand;
                e = ce;
                improved = true;
            }
            trace.push(e);
        }
        if !improved {
            break;
        }
    }
    Ok(MoveRun {
        labeling: current,
        energy_trace: trace,
        cycles,
        ops: ops.get(),
    })
}

/// Same scheme as [`alpha_expansion`] over label pairs `(alpha < beta)` in
/// lexicographic order.
pub fn alpha_beta_swap(image: &Tensor, p: &CrfParams, init: &Labeling) -> Result<MoveRun, GraphCutError> {
    p.validate()?;
    let mut ops = OpCounter::default();
    let mut current = init.clone();
    let mut e = energy_counted(&current, image, p, &mut ops)?.total;
    let mut trace = vec![e];
    let mut cycles = 0;
    let k = p.num_labels();
    loop {
        cycles += 1;
        let mut improved = false;
        for alpha in 0..k {
            for beta in alpha + 1..k {
                let cand = swap_move(&current, alpha, beta, image, p, &mut ops)?;
                let ce = energy_counted(&cand, image, p, &mut ops)?.total;
                if ce < e {
                    current = cand;
                    e = ce;
                    improved = true;
                }
                trace.push(e);
            }
        }
        if !improved {
            break;
        }
    }
    Ok(MoveRun {
        labeling: current,
        energy_trace: trace,
        cycles,
        ops: ops.get(),
    })
}
