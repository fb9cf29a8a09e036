//! Minimum s-t cut of a small hand-built graph.

use pipeboot::graphcut::maxflow::{SINK, SOURCE};
use pipeboot::graphcut::{max_flow, FlowGraph};

fn main() {
    let mut g = FlowGraph::new(4);
    g.add_arc(SOURCE, 0, 20.0);
    g.add_arc(SOURCE, 1, 10.0);
    g.add_arc(0, 1, 15.0);
    g.add_arc(0, 2, 9.0);
    g.add_arc(1, 3, 8.0);
    g.add_arc(2, 3, 4.0);
    g.add_arc(2, SINK, 10.0);
    g.add_arc(3, SINK, 10.0);
    let cut = max_flow(&g);
    println!("max flow = {}", cut.value);
    for (node, &src) in cut.source_side.iter().enumerate() {
        println!("node {node}: {}", if src { "source side" } else { "sink side" });
    }
    assert_eq!(g.cut_capacity(&cut.source_side), cut.value);
}
