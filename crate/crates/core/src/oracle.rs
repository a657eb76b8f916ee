//! Brute-force reference implementations and seeded matchup evaluation.
//!
//! The combinatorial functions here deliberately avoid the `graph` module's
//! matrix route: they read the adjacency matrix directly and count.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::env::{reset, step, GameConfig, Outcome, Seat};
use crate::error::{GragError, Result};
use crate::graph::{ActionVector, Graph, ResourceDistribution};
use crate::policies::{Observation, PolicyHandle};
use crate::rng::{derive_seed, stream, stream_rng};
use crate::scalar::Scalar;

/// Node of every resource, resources numbered node by node.
fn origins(d: &ResourceDistribution) -> Vec<usize> {
    let mut out = Vec::new();
    for (node, &c) in d.counts().iter().enumerate() {
        out.extend(std::iter::repeat_n(node, c as usize));
    }
    out
}

/// Every `a` in `{0..N-1}^M` whose moves all follow an edge of `g`.
pub fn brute_force_valid_actions(g: &Graph, d: &ResourceDistribution, cap: u128) -> Result<BTreeSet<ActionVector>> {
    let n = g.n();
    let from = origins(d);
    let m = from.len();
    let total = (n as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if total > cap {
        return Err(GragError::CapExceeded { count: total, cap });
    }
    let mut out = BTreeSet::new();
    for code in 0..total {
        let mut rest = code;
        let mut a = vec![0usize; m];
        for j in (0..m).rev() {
            a[j] = (rest % n as u128) as usize;
            rest /= n as u128;
        }
        if a.iter().zip(&from).all(|(&k, &i)| g.has_edge(i, (i + k) % n)) {
            out.insert(ActionVector(a));
        }
    }
    Ok(out)
}

/// Scatters every resource to `(n_j + a_j) mod N` and counts arrivals.
pub fn brute_force_transition(d: &ResourceDistribution, a: &ActionVector, g: &Graph) -> Result<ResourceDistribution> {
    let n = g.n();
    let from = origins(d);
    if a.len() != from.len() {
        return Err(GragError::InvalidAction(format!("{} moves for {} resources", a.len(), from.len())));
    }
    let mut counts = vec![0u32; n];
    for (&i, &k) in from.iter().zip(a.moves()) {
        if k >= n || !g.has_edge(i, (i + k) % n) {
            return Err(GragError::InvalidAction(format!("no edge for displacement {k} from node {i}")));
        }
        counts[(i + k) % n] += 1;
    }
    Ok(ResourceDistribution::new(counts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchupStats {
    pub episodes: usize,
    pub wins_p1: usize,
    pub wins_p2: usize,
    pub draws: usize,
    pub mean_length: f64,
    pub seed: u64,
}

impl MatchupStats {
    pub fn wins(&self, seat: Seat) -> usize {
        match seat {
            Seat::P1 => self.wins_p1,
            Seat::P2 => self.wins_p2,
        }
    }

    /// Wins over episodes; draws count as non-wins.
    pub fn win_rate(&self, seat: Seat) -> f64 {
        self.wins(seat) as f64 / self.episodes as f64
    }
}

/// Plays `episodes` independent games. Episode `e` draws its start from
/// `derive_seed(seed, e)` on the environment stream and each seat acts from
/// its own actor stream, so any prefix of a run reproduces exactly.
pub fn evaluate_matchup<T: Scalar>(
    p1: &PolicyHandle<T>,
    p2: &PolicyHandle<T>,
    game: &GameConfig,
    episodes: usize,
    seed: u64,
) -> Result<MatchupStats> {
    if episodes == 0 {
        return Err(GragError::InvalidConfig("evaluation needs at least one episode".into()));
    }
    let mut stats = MatchupStats { episodes, wins_p1: 0, wins_p2: 0, draws: 0, mean_length: 0.0, seed };
    let mut total_len = 0usize;
    for e in 0..episodes {
        let es = derive_seed(seed, e as u64);
        let mut env_rng = stream_rng(es, stream::ENV);
        let mut rng1 = stream_rng(es, stream::ACTOR_P1);
        let mut rng2 = stream_rng(es, stream::ACTOR_P2);
        let mut st = reset(game, &mut env_rng)?;
        while !st.is_terminal() {
            let a1 = p1.act(&Observation::new(game, &st, Seat::P1)?, &mut rng1)?;
            let a2 = p2.act(&Observation::new(game, &st, Seat::P2)?, &mut rng2)?;
            st = step(&st, &a1, &a2, game)?.0;
        }
        total_len += st.t;
        match st.outcome {
            Outcome::P1Win => stats.wins_p1 += 1,
            Outcome::P2Win => stats.wins_p2 += 1,
            Outcome::Draw => stats.draws += 1,
            Outcome::Ongoing => unreachable!("loop exits on terminal states"),
        }
    }
    stats.mean_length = total_len as f64 / episodes as f64;
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::enumerate_valid_actions;
    use crate::graphs::load_named_graph;

    #[test]
    fn example_action_set() {
        let g = load_named_graph("paper4").unwrap();
        let d = ResourceDistribution::new(vec![3, 0, 1, 2]);
        let set = brute_force_valid_actions(&g, &d, 1_000_000).unwrap();
        assert_eq!(set.len(), 324);
        assert!(set.contains(&ActionVector(vec![0, 2, 2, 3, 0, 3])));
        assert!(!set.contains(&ActionVector(vec![0, 1, 2, 3, 0, 3])));
        let j = crate::graph::build_action_displacement(&g, &d).unwrap();
        let fast: BTreeSet<_> = enumerate_valid_actions(&j, 1_000_000).unwrap().into_iter().collect();
        assert_eq!(fast, set);
    }

    #[test]
    fn identity_and_complete() {
        let d = ResourceDistribution::new(vec![1, 0, 1]);
        let only = brute_force_valid_actions(&Graph::identity(3).unwrap(), &d, 100).unwrap();
        assert_eq!(only.into_iter().collect::<Vec<_>>(), vec![ActionVector::zeros(2)]);
        assert_eq!(brute_force_valid_actions(&Graph::complete(3).unwrap(), &d, 100).unwrap().len(), 9);
        assert!(brute_force_valid_actions(&Graph::complete(3).unwrap(), &d, 8).is_err());
    }

    #[test]
    fn counting_transitions() {
        let g = load_named_graph("paper4").unwrap();
        let d = ResourceDistribution::new(vec![3, 0, 1, 2]);
        let next = brute_force_transition(&d, &ActionVector(vec![0, 2, 2, 3, 0, 3]), &g).unwrap();
        assert_eq!(next.counts(), &[1, 1, 3, 1]);
        assert!(brute_force_transition(&d, &ActionVector::zeros(6), &g).is_err());
        let ring = Graph::directed_ring(4).unwrap();
        assert_eq!(brute_force_transition(&d, &ActionVector::zeros(6), &ring).unwrap(), d);
        let two = Graph::complete(2).unwrap();
        let d2 = ResourceDistribution::new(vec![0, 2]);
        assert_eq!(brute_force_transition(&d2, &ActionVector(vec![1, 1]), &two).unwrap().counts(), &[2, 0]);
        assert!(brute_force_transition(&d, &ActionVector(vec![0, 1, 2, 3, 0, 3]), &g).is_err());
    }
}
