//! Named graphs and their standard initializations.
//!
//! `paper4` is the 4-node worked example. `G0`..`G4` are 5-node
//! reconstructions that keep the structural properties the experiments rely
//! on: `G0` (hub plus directed rim) and `G1` (undirected cycle) are symmetric
//! between the two players' start regions; `G2` has a node 0 that no other
//! node can reach; `G4` has no self-loops on nodes 2 and 3. `ringN` is the
//! directed ring with self-loops and `completeN` the complete digraph.

use crate::env::InitScheme;
use crate::error::{GragError, Result};
use crate::graph::Graph;

const PAPER4: &str = include_str!("../data/graphs/paper4.txt");
const G0: &str = include_str!("../data/graphs/G0.txt");
const G1: &str = include_str!("../data/graphs/G1.txt");
const G2: &str = include_str!("../data/graphs/G2.txt");
const G3: &str = include_str!("../data/graphs/G3.txt");
const G4: &str = include_str!("../data/graphs/G4.txt");

pub const NAMED_GRAPHS: [&str; 6] = ["paper4", "G0", "G1", "G2", "G3", "G4"];

pub fn load_named_graph(name: &str) -> Result<Graph> {
    let text = match name {
        "paper4" => PAPER4,
        "G0" => G0,
        "G1" => G1,
        "G2" => G2,
        "G3" => G3,
        "G4" => G4,
        _ => {
            if let Some(n) = parse_suffix(name, "ring") {
                return Graph::directed_ring(n);
            }
            if let Some(n) = parse_suffix(name, "complete") {
                return Graph::complete(n);
            }
            return Err(GragError::UnknownGraph(name.to_string()));
        }
    };
    Graph::parse(text)
}

fn parse_suffix(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.parse().ok().filter(|&n| n >= 2)
}

/// Standard initialization `label` (`C1`..`C4`, or `tilted` for the
/// asymmetric graphs) for a named graph.
pub fn preset_init(graph: &str, label: &str, n: usize, m: u32) -> Result<InitScheme> {
    let all: Vec<usize> = (0..n).collect();
    let unknown = || GragError::InvalidConfig(format!("no `{label}` initialization for graph `{graph}`"));
    let (p1, p2, c4): ([usize; 2], [usize; 2], Vec<usize>) = match graph {
        "G0" => ([1, 2], [3, 4], all),
        "G1" => ([1, 2], [2, 1], vec![0, 1, 3, 4]),
        "G2" | "G3" | "G4" => {
            return match (graph, label) {
                ("G2", "tilted") => Ok(InitScheme::Contested { p1_private: 0, shared: 1, p2_private: 2, low: 1, high: m.saturating_sub(1).max(1) }),
                ("G3", "tilted") | ("G4", "tilted") => Ok(InitScheme::FreeSplit { p1_nodes: vec![0, 1], p2_nodes: vec![2, 3] }),
                _ => Err(unknown()),
            };
        }
        _ if graph.starts_with("ring") || graph.starts_with("complete") => {
            let h = n / 2;
            ([0, 1 % n], [h, (h + 1) % n], all)
        }
        _ => return Err(unknown()),
    };
    match label {
        "C1" => Ok(InitScheme::Concentrated { p1_node: p1[0], p2_node: p2[0] }),
        "C2" => Ok(InitScheme::BoundedSplit { p1_nodes: p1, p2_nodes: p2, low: 1, high: 3 }),
        "C3" => Ok(InitScheme::FreeSplit { p1_nodes: p1.to_vec(), p2_nodes: p2.to_vec() }),
        "C4" => Ok(InitScheme::FreeSplit { p1_nodes: c4.clone(), p2_nodes: c4 }),
        _ => Err(unknown()),
    }
}
