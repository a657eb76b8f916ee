//! Simultaneous-move, zero-sum game on a graph.
//!
//! The shared state is `s = d1 - d2`. A player controls a node when it holds
//! strictly more resources there; Player 1 is rewarded +1 when it controls more
//! nodes than Player 2, -1 when it controls fewer, and 0 otherwise. A non-zero
//! reward ends the episode, and so does reaching `max_steps` (a draw).

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GragError, Result};
use crate::graph::{
    apply_padded_action, build_action_displacement, pad_virtual, ActionDisplacementMatrix, ActionVector, Graph,
    PaddedActionContext, ResourceDistribution,
};

pub const DEFAULT_MAX_STEPS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Seat {
    P1,
    P2,
}

impl Seat {
    pub const BOTH: [Seat; 2] = [Seat::P1, Seat::P2];

    pub fn other(self) -> Seat {
        match self {
            Seat::P1 => Seat::P2,
            Seat::P2 => Seat::P1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Seat::P1 => 0,
            Seat::P2 => 1,
        }
    }

    /// Converts Player 1's reward into this seat's reward.
    pub fn signed(self, r1: i32) -> i32 {
        match self {
            Seat::P1 => r1,
            Seat::P2 => -r1,
        }
    }
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Seat::P1 => "player 1",
            Seat::P2 => "player 2",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    P1Win,
    P2Win,
    Draw,
    Ongoing,
}

impl Outcome {
    fn from_reward(r1: i32) -> Outcome {
        match r1.signum() {
            1 => Outcome::P1Win,
            -1 => Outcome::P2Win,
            _ => Outcome::Ongoing,
        }
    }
}

/// Player 1's reward for state `s`.
pub fn reward(s: &[i64]) -> i32 {
    let (pos, neg) = s.iter().fold((0usize, 0usize), |(p, n), &v| {
        (p + usize::from(v > 0), n + usize::from(v < 0))
    });
    match pos.cmp(&neg) {
        std::cmp::Ordering::Greater => 1,
        std::cmp::Ordering::Equal => 0,
        std::cmp::Ordering::Less => -1,
    }
}

/// How initial distributions are drawn.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum InitScheme {
    /// Each player's whole budget on one node (C1).
    Concentrated { p1_node: usize, p2_node: usize },
    /// Uniform `low..=high` units on the first node of the pair, the rest on
    /// the second (C2).
    BoundedSplit { p1_nodes: [usize; 2], p2_nodes: [usize; 2], low: u32, high: u32 },
    /// Uniform random composition of the budget over each player's node set
    /// (C3 with two nodes, C4 with the full set).
    FreeSplit { p1_nodes: Vec<usize>, p2_nodes: Vec<usize> },
    /// Both players put the same uniform `low..=high` count on a shared node
    /// and the rest on their private node, so the start is always tied.
    Contested { p1_private: usize, shared: usize, p2_private: usize, low: u32, high: u32 },
    Explicit { d1: Vec<u32>, d2: Vec<u32> },
}

impl InitScheme {
    fn nodes(&self) -> Vec<usize> {
        match self {
            InitScheme::Concentrated { p1_node, p2_node } => vec![*p1_node, *p2_node],
            InitScheme::BoundedSplit { p1_nodes, p2_nodes, .. } => p1_nodes.iter().chain(p2_nodes).copied().collect(),
            InitScheme::FreeSplit { p1_nodes, p2_nodes } => p1_nodes.iter().chain(p2_nodes).copied().collect(),
            InitScheme::Contested { p1_private, shared, p2_private, .. } => vec![*p1_private, *shared, *p2_private],
            InitScheme::Explicit { .. } => Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameConfig {
    pub graph: Graph,
    pub m1: u32,
    pub m2: u32,
    pub init: InitScheme,
    pub max_steps: usize,
}

impl GameConfig {
    pub fn new(graph: Graph, m1: u32, m2: u32, init: InitScheme) -> Result<Self> {
        let cfg = Self { graph, m1, m2, init, max_steps: DEFAULT_MAX_STEPS };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Result<Self> {
        self.max_steps = max_steps;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m1 == 0 || self.m2 == 0 {
            return Err(GragError::InvalidConfig("both players need at least one resource".into()));
        }
        if self.max_steps == 0 {
            return Err(GragError::InvalidConfig("max_steps must be positive".into()));
        }
        let n = self.graph.n();
        if let Some(bad) = self.init.nodes().into_iter().find(|&v| v >= n) {
            return Err(GragError::InvalidConfig(format!("init node {bad} outside a {n}-node graph")));
        }
        if let InitScheme::Explicit { d1, d2 } = &self.init {
            for (d, m) in [(d1, self.m1), (d2, self.m2)] {
                if d.len() != n || d.iter().sum::<u32>() != m {
                    return Err(GragError::InvalidConfig(format!("explicit distribution {d:?} does not hold {m} resources on {n} nodes")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn budget(&self, seat: Seat) -> u32 {
        match seat {
            Seat::P1 => self.m1,
            Seat::P2 => self.m2,
        }
    }

    /// Length of every action vector: the larger budget.
    pub fn action_len(&self) -> usize {
        self.m1.max(self.m2) as usize
    }

    /// State normalizer for network inputs.
    pub fn max_budget(&self) -> u32 {
        self.m1.max(self.m2)
    }

    pub fn padding(&self, seat: Seat) -> PaddedActionContext {
        PaddedActionContext { m_real: self.budget(seat) as usize, m_total: self.action_len() }
    }

    /// The seat's (padded) action-displacement matrix in state `st`.
    pub fn action_matrix(&self, st: &GameState, seat: Seat) -> Result<ActionDisplacementMatrix> {
        let j = build_action_displacement(&self.graph, st.distribution(seat))?;
        pad_virtual(&j, self.padding(seat))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub t: usize,
    pub d1: ResourceDistribution,
    pub d2: ResourceDistribution,
    pub s: Vec<i64>,
    pub outcome: Outcome,
}

impl GameState {
    /// State at `t = 0`; a start that is not tied is terminal at once.
    pub fn initial(d1: ResourceDistribution, d2: ResourceDistribution) -> Self {
        let s = difference(&d1, &d2);
        let outcome = Outcome::from_reward(reward(&s));
        Self { t: 0, d1, d2, s, outcome }
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome != Outcome::Ongoing
    }

    pub fn distribution(&self, seat: Seat) -> &ResourceDistribution {
        match seat {
            Seat::P1 => &self.d1,
            Seat::P2 => &self.d2,
        }
    }

    /// `own - opponent`: `s` for Player 1 and `-s` for Player 2.
    pub fn perspective(&self, seat: Seat) -> Vec<i64> {
        match seat {
            Seat::P1 => self.s.clone(),
            Seat::P2 => self.s.iter().map(|&v| -v).collect(),
        }
    }
}

fn difference(d1: &ResourceDistribution, d2: &ResourceDistribution) -> Vec<i64> {
    d1.counts().iter().zip(d2.counts()).map(|(&a, &b)| i64::from(a) - i64::from(b)).collect()
}

/// One transition; `d1`, `d2` are the distributions the actions were taken in.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub d1: ResourceDistribution,
    pub d2: ResourceDistribution,
    pub a1: ActionVector,
    pub a2: ActionVector,
    pub r1: i32,
}

impl StepRecord {
    pub fn r2(&self) -> i32 {
        -self.r1
    }
}

/// Uniform weak composition of `m` into `parts` parts (stars and bars).
fn random_composition<R: Rng + ?Sized>(m: u32, parts: usize, rng: &mut R) -> Vec<u32> {
    if parts == 1 {
        return vec![m];
    }
    let slots = m as usize + parts - 1;
    let mut bars = sample(rng, slots, parts - 1).into_vec();
    bars.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0usize;
    for (i, &b) in bars.iter().enumerate() {
        out.push((b - prev - usize::from(i > 0)) as u32);
        prev = b;
    }
    out.push((slots - prev - usize::from(!bars.is_empty())) as u32);
    out
}

fn place(n: usize, nodes: &[usize], amounts: &[u32]) -> ResourceDistribution {
    let mut counts = vec![0u32; n];
    for (&node, &a) in nodes.iter().zip(amounts) {
        counts[node] += a;
    }
    ResourceDistribution::new(counts)
}

pub fn sample_initialization<R: Rng + ?Sized>(
    cfg: &GameConfig,
    rng: &mut R,
) -> Result<(ResourceDistribution, ResourceDistribution)> {
    let n = cfg.n();
    let (m1, m2) = (cfg.m1, cfg.m2);
    match &cfg.init {
        InitScheme::Concentrated { p1_node, p2_node } => Ok((place(n, &[*p1_node], &[m1]), place(n, &[*p2_node], &[m2]))),
        InitScheme::BoundedSplit { p1_nodes, p2_nodes, low, high } => {
            let mut split = |m: u32, nodes: &[usize; 2]| -> Result<ResourceDistribution> {
                let hi = (*high).min(m);
                if *low > hi {
                    return Err(GragError::InfeasibleScheme(format!("cannot put {low}..={high} of {m} resources on one node")));
                }
                let first = rng.gen_range(*low..=hi);
                Ok(place(n, nodes, &[first, m - first]))
            };
            let d1 = split(m1, p1_nodes)?;
            let d2 = split(m2, p2_nodes)?;
            Ok((d1, d2))
        }
        InitScheme::FreeSplit { p1_nodes, p2_nodes } => {
            if p1_nodes.is_empty() || p2_nodes.is_empty() {
                return Err(GragError::InfeasibleScheme("empty node set".into()));
            }
            let c1 = random_composition(m1, p1_nodes.len(), rng);
            let c2 = random_composition(m2, p2_nodes.len(), rng);
            Ok((place(n, p1_nodes, &c1), place(n, p2_nodes, &c2)))
        }
        InitScheme::Contested { p1_private, shared, p2_private, low, high } => {
            let hi = (*high).min(m1).min(m2);
            if *low > hi {
                return Err(GragError::InfeasibleScheme(format!("shared count {low}..={high} exceeds a budget")));
            }
            let b = rng.gen_range(*low..=hi);
            Ok((place(n, &[*p1_private, *shared], &[m1 - b, b]), place(n, &[*shared, *p2_private], &[b, m2 - b])))
        }
        InitScheme::Explicit { d1, d2 } => {
            if d1.iter().sum::<u32>() != m1 || d2.iter().sum::<u32>() != m2 {
                return Err(GragError::InfeasibleScheme("explicit distributions do not match the budgets".into()));
            }
            Ok((ResourceDistribution::for_graph(d1.clone(), &cfg.graph)?, ResourceDistribution::for_graph(d2.clone(), &cfg.graph)?))
        }
    }
}

pub fn reset<R: Rng + ?Sized>(cfg: &GameConfig, rng: &mut R) -> Result<GameState> {
    let (d1, d2) = sample_initialization(cfg, rng)?;
    Ok(GameState::initial(d1, d2))
}

/// Applies both actions simultaneously.
pub fn step(st: &GameState, a1: &ActionVector, a2: &ActionVector, cfg: &GameConfig) -> Result<(GameState, StepRecord)> {
    if st.is_terminal() {
        return Err(GragError::StepAfterTerminal);
    }
    let moved = |seat: Seat, a: &ActionVector| {
        apply_padded_action(st.distribution(seat), a, cfg.padding(seat), &cfg.graph)
            .map_err(|e| GragError::InvalidPlayerAction { seat, reason: e.to_string() })
    };
    let d1 = moved(Seat::P1, a1)?;
    let d2 = moved(Seat::P2, a2)?;
    let s = difference(&d1, &d2);
    let r1 = reward(&s);
    let t = st.t + 1;
    let outcome = match Outcome::from_reward(r1) {
        Outcome::Ongoing if t >= cfg.max_steps => Outcome::Draw,
        o => o,
    };
    let record = StepRecord { t: st.t, d1: st.d1.clone(), d2: st.d2.clone(), a1: a1.clone(), a2: a2.clone(), r1 };
    Ok((GameState { t, d1, d2, s, outcome }, record))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn ring4(init: InitScheme) -> GameConfig {
        GameConfig::new(Graph::directed_ring(4).unwrap(), 4, 4, init).unwrap()
    }

    #[test]
    fn reward_examples() {
        assert_eq!(reward(&[0, 0, 0, 0]), 0);
        assert_eq!(reward(&[1, -1, 2, 0]), 1);
        assert_eq!(reward(&[2, -1, 1, 0, -3]), 0);
        assert_eq!(reward(&[-1, -1, 2, 0]), -1);
    }

    #[test]
    fn compositions_are_uniform_and_complete() {
        let mut rng = stream_rng(1, 0);
        let mut seen = std::collections::BTreeMap::new();
        for _ in 0..5000 {
            let c = random_composition(4, 2, &mut rng);
            assert_eq!(c.iter().sum::<u32>(), 4);
            *seen.entry(c).or_insert(0usize) += 1;
        }
        assert_eq!(seen.len(), 5);
        // 1000 expected per composition, sd about 28
        assert!(seen.values().all(|&c| (850..1150).contains(&c)), "{seen:?}");
        for _ in 0..100 {
            let c = random_composition(1, 4, &mut rng);
            assert_eq!(c.iter().filter(|&&v| v == 1).count(), 1);
            assert_eq!(random_composition(3, 3, &mut rng).iter().sum::<u32>(), 3);
        }
        assert_eq!(random_composition(0, 3, &mut rng), vec![0, 0, 0]);
    }

    #[test]
    fn init_schemes() {
        let mut rng = stream_rng(3, 0);
        let c1 = ring4(InitScheme::Concentrated { p1_node: 0, p2_node: 2 });
        let (d1, d2) = sample_initialization(&c1, &mut rng).unwrap();
        assert_eq!((d1.counts(), d2.counts()), (&[4, 0, 0, 0][..], &[0, 0, 4, 0][..]));

        let c2 = ring4(InitScheme::BoundedSplit { p1_nodes: [0, 1], p2_nodes: [2, 3], low: 1, high: 3 });
        for _ in 0..50 {
            let (d1, d2) = sample_initialization(&c2, &mut rng).unwrap();
            assert!((1..=3).contains(&d1.counts()[0]) && d1.total() == 4);
            assert!((1..=3).contains(&d2.counts()[2]) && d2.counts()[0] == 0);
        }

        let c3 = ring4(InitScheme::FreeSplit { p1_nodes: vec![1, 2], p2_nodes: vec![3, 0] });
        let (d1, _) = sample_initialization(&c3, &mut rng).unwrap();
        assert_eq!(d1.counts()[0] + d1.counts()[3], 0);
        assert_eq!(d1.total(), 4);

        let g = Graph::directed_ring(4).unwrap();
        let c4 = GameConfig::new(g, 1, 1, InitScheme::FreeSplit { p1_nodes: vec![0, 1, 2, 3], p2_nodes: vec![0, 1, 2, 3] }).unwrap();
        let (d1, _) = sample_initialization(&c4, &mut rng).unwrap();
        assert_eq!(d1.counts().iter().filter(|&&c| c == 1).count(), 1);

        let bad = ring4(InitScheme::BoundedSplit { p1_nodes: [0, 1], p2_nodes: [2, 3], low: 5, high: 6 });
        assert!(matches!(sample_initialization(&bad, &mut rng), Err(GragError::InfeasibleScheme(_))));
        assert!(GameConfig::new(Graph::directed_ring(4).unwrap(), 4, 4, InitScheme::Concentrated { p1_node: 4, p2_node: 0 }).is_err());
    }

    #[test]
    fn contested_start_is_tied() {
        let g = crate::graphs::load_named_graph("G2").unwrap();
        let cfg = GameConfig::new(g, 4, 4, InitScheme::Contested { p1_private: 0, shared: 1, p2_private: 2, low: 1, high: 3 }).unwrap();
        let mut rng = stream_rng(9, 0);
        for _ in 0..50 {
            let st = reset(&cfg, &mut rng).unwrap();
            assert_eq!(st.outcome, Outcome::Ongoing);
            assert_eq!(st.d1.counts()[1], st.d2.counts()[1]);
        }
    }

    #[test]
    fn reset_rules() {
        let mut rng = stream_rng(0, 0);
        let st = reset(&ring4(InitScheme::Concentrated { p1_node: 0, p2_node: 2 }), &mut rng).unwrap();
        assert_eq!(st.outcome, Outcome::Ongoing);
        assert_eq!(st.s, vec![4, 0, -4, 0]);

        let g2 = Graph::complete(2).unwrap();
        let tied = GameConfig::new(g2.clone(), 2, 1, InitScheme::Explicit { d1: vec![2, 0], d2: vec![0, 1] }).unwrap();
        let st = reset(&tied, &mut rng).unwrap();
        assert_eq!((st.s.clone(), st.outcome), (vec![2, -1], Outcome::Ongoing));

        let ahead = GameConfig::new(Graph::complete(3).unwrap(), 2, 2, InitScheme::Explicit { d1: vec![1, 1, 0], d2: vec![0, 0, 2] }).unwrap();
        let st = reset(&ahead, &mut rng).unwrap();
        assert_eq!((st.t, st.outcome), (0, Outcome::P1Win));
        assert!(matches!(step(&st, &ActionVector::zeros(2), &ActionVector::zeros(2), &ahead), Err(GragError::StepAfterTerminal)));
    }

    #[test]
    fn stay_keeps_a_tie() {
        let cfg = ring4(InitScheme::Concentrated { p1_node: 0, p2_node: 2 });
        let st = GameState::initial(ResourceDistribution::new(vec![4, 0, 0, 0]), ResourceDistribution::new(vec![0, 0, 4, 0]));
        let (next, rec) = step(&st, &ActionVector::zeros(4), &ActionVector::zeros(4), &cfg).unwrap();
        assert_eq!(next.s, st.s);
        assert_eq!((rec.r1, rec.r2(), next.outcome, next.t), (0, 0, Outcome::Ongoing, 1));
    }

    #[test]
    fn one_unit_shift_wins_a_tie() {
        // Five nodes, four held by each player in a tie; P1 sends a spare
        // unit into the empty node and takes the majority.
        let g = Graph::complete(5).unwrap();
        let cfg = GameConfig::new(g, 8, 8, InitScheme::Explicit { d1: vec![4, 0, 0, 2, 2], d2: vec![2, 2, 0, 2, 2] }).unwrap();
        let mut rng = stream_rng(0, 0);
        let st = reset(&cfg, &mut rng).unwrap();
        assert_eq!(reward(&st.s), 0);
        let mut a1 = ActionVector::zeros(8);
        a1.0[0] = 2; // first unit on node 0 moves to node 2
        let (next, rec) = step(&st, &a1, &ActionVector::zeros(8), &cfg).unwrap();
        assert_eq!(rec.r1, 1);
        assert_eq!(next.outcome, Outcome::P1Win);
    }

    #[test]
    fn horizon_draw_and_invalid_actions() {
        let cfg = ring4(InitScheme::Concentrated { p1_node: 0, p2_node: 2 }).with_max_steps(2).unwrap();
        let mut st = reset(&cfg, &mut stream_rng(0, 0)).unwrap();
        for _ in 0..2 {
            st = step(&st, &ActionVector::zeros(4), &ActionVector::zeros(4), &cfg).unwrap().0;
        }
        assert_eq!((st.t, st.outcome), (2, Outcome::Draw));

        let st = reset(&cfg, &mut stream_rng(0, 0)).unwrap();
        let bad = ActionVector::from(vec![2, 0, 0, 0]);
        match step(&st, &ActionVector::zeros(4), &bad, &cfg) {
            Err(GragError::InvalidPlayerAction { seat, .. }) => assert_eq!(seat, Seat::P2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unequal_budgets_use_padding() {
        let g = Graph::directed_ring(4).unwrap();
        let cfg = GameConfig::new(g, 3, 4, InitScheme::Concentrated { p1_node: 0, p2_node: 2 }).unwrap();
        let st = reset(&cfg, &mut stream_rng(0, 0)).unwrap();
        let j1 = cfg.action_matrix(&st, Seat::P1).unwrap();
        assert_eq!((j1.rows(), j1.virtual_rows()), (4, 1));
        let (next, _) = step(&st, &vec![0, 1, 0, 0].into(), &ActionVector::zeros(4), &cfg).unwrap();
        assert_eq!(next.d1.counts(), &[2, 1, 0, 0]);
        assert!(step(&st, &vec![1, 0, 0, 0].into(), &ActionVector::zeros(4), &cfg).is_err());
    }
}
