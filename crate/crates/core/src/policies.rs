//! Baseline and learned policies behind one interface.

use std::sync::Arc;

use rand::Rng;

use crate::env::{GameConfig, GameState, Seat};
use crate::error::Result;
use crate::graph::{decode_action, valid_resource_actions, ActionDisplacementMatrix, ActionMask, ActionVector, ResourceDistribution};
use crate::learn::mlp::Mlp;
use crate::learn::normalize_state;
use crate::learn::ppo::masked_policy_distribution;
use crate::scalar::Scalar;

/// What a seat sees before acting: the shared state from its own side
/// (`own - opponent`), its own distribution and its (padded) action matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub state: Vec<i64>,
    pub own: ResourceDistribution,
    pub actions: ActionDisplacementMatrix,
    pub scale: u32,
}

impl Observation {
    pub fn new(cfg: &GameConfig, st: &GameState, seat: Seat) -> Result<Self> {
        Ok(Self {
            state: st.perspective(seat),
            own: st.distribution(seat).clone(),
            actions: cfg.action_matrix(st, seat)?,
            scale: cfg.max_budget(),
        })
    }

    pub fn features<T: Scalar>(&self) -> Vec<T> {
        normalize_state(&self.state, self.scale)
    }

    pub fn mask(&self) -> ActionMask {
        self.actions.mask()
    }

    pub fn action_len(&self) -> usize {
        self.actions.rows()
    }

    pub fn decode(&self, index: usize) -> Result<ActionVector> {
        decode_action(index, self.actions.n(), self.actions.rows())
    }
}

/// Each resource picks uniformly from its own valid set, which is uniform over
/// the whole valid product.
pub fn random_act<R: Rng + ?Sized>(obs: &Observation, rng: &mut R) -> ActionVector {
    random_action(&obs.actions, rng)
}

pub fn random_action<R: Rng + ?Sized>(j_mat: &ActionDisplacementMatrix, rng: &mut R) -> ActionVector {
    let moves = (0..j_mat.rows())
        .map(|j| {
            let choices = valid_resource_actions(j_mat, j).expect("row in range");
            choices[rng.gen_range(0..choices.len())]
        })
        .collect();
    ActionVector(moves)
}

/// Highest value among `valid` (ascending flat indices); ties go to the
/// lowest index.
pub fn masked_argmax<T: Scalar>(values: &[T], valid: &[usize]) -> usize {
    let mut best = valid[0];
    for &i in &valid[1..] {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// Masked argmax of a frozen action-value network.
pub fn greedy_act<T: Scalar>(obs: &Observation, q: &Mlp<T>) -> Result<ActionVector> {
    let values = q.forward(&obs.features::<T>())?;
    obs.decode(masked_argmax(&values, &obs.mask().indices()))
}

/// Draws an index from a probability vector.
pub fn sample_index<T: Scalar, R: Rng + ?Sized>(probs: &[T], valid: &[usize], rng: &mut R) -> usize {
    let u = T::lit(rng.gen::<f64>());
    let mut acc = T::zero();
    for &i in valid {
        acc += probs[i];
        if u < acc {
            return i;
        }
    }
    *valid.last().expect("non-empty valid set")
}

#[derive(Clone, Debug)]
pub enum PolicyHandle<T: Scalar = f64> {
    Random,
    /// Deterministic argmax over a frozen Q-network.
    Greedy(Arc<Mlp<T>>),
    /// Trained Q-network, acting epsilon-greedily (`epsilon = 0` is greedy).
    Dqn { net: Arc<Mlp<T>>, epsilon: f64 },
    /// Policy network, sampling from its masked distribution.
    Ppo(Arc<Mlp<T>>),
}

impl<T: Scalar> PolicyHandle<T> {
    pub fn greedy(net: Mlp<T>) -> Self {
        PolicyHandle::Greedy(Arc::new(net))
    }

    pub fn dqn(net: Mlp<T>, epsilon: f64) -> Self {
        PolicyHandle::Dqn { net: Arc::new(net), epsilon }
    }

    pub fn ppo(net: Mlp<T>) -> Self {
        PolicyHandle::Ppo(Arc::new(net))
    }

    pub fn label(&self) -> &'static str {
        match self {
            PolicyHandle::Random => "random",
            PolicyHandle::Greedy(_) => "greedy",
            PolicyHandle::Dqn { .. } => "dqn",
            PolicyHandle::Ppo(_) => "ppo",
        }
    }

    /// Label plus a digest of any parameters, for config hashes.
    pub fn fingerprint(&self) -> String {
        let digest = |net: &Mlp<T>| {
            let params: Vec<f64> = net.params().iter().map(|p| p.to_f64_lossy()).collect();
            crate::provenance::config_hash(&params)
        };
        match self {
            PolicyHandle::Random => "random".into(),
            PolicyHandle::Greedy(net) | PolicyHandle::Ppo(net) => format!("{}:{}", self.label(), digest(net)),
            PolicyHandle::Dqn { net, epsilon } => format!("dqn:{}:{epsilon}", digest(net)),
        }
    }

    pub fn act<R: Rng + ?Sized>(&self, obs: &Observation, rng: &mut R) -> Result<ActionVector> {
        match self {
            PolicyHandle::Random => Ok(random_act(obs, rng)),
            PolicyHandle::Greedy(net) => greedy_act(obs, net),
            PolicyHandle::Dqn { net, epsilon } => {
                let q = net.forward(&obs.features::<T>())?;
                let idx = crate::learn::dqn::epsilon_greedy_select(&q, &obs.actions, *epsilon, rng)?;
                obs.decode(idx)
            }
            PolicyHandle::Ppo(net) => {
                let logits = net.forward(&obs.features::<T>())?;
                let valid = obs.mask().indices();
                let probs = masked_policy_distribution(&logits, &valid);
                obs.decode(sample_index(&probs, &valid, rng))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::InitScheme;
    use crate::graph::{action_index, is_valid_action, Graph};
    use crate::learn::mlp::{Activation, LayerShape};
    use crate::rng::stream_rng;

    fn obs_from_rows(rows: &[Vec<u8>]) -> Observation {
        let actions = ActionDisplacementMatrix::from_rows(rows).unwrap();
        Observation { state: vec![0; rows[0].len()], own: ResourceDistribution::zeros(rows[0].len()), actions, scale: 1 }
    }

    #[test]
    fn random_act_on_forced_rows() {
        let obs = obs_from_rows(&[vec![1, 0, 0], vec![1, 0, 0]]);
        let mut rng = stream_rng(0, 0);
        for _ in 0..20 {
            assert_eq!(random_act(&obs, &mut rng), ActionVector::zeros(2));
        }
    }

    #[test]
    fn random_act_is_product_uniform() {
        let obs = obs_from_rows(&[vec![1, 1, 0], vec![1, 1, 1]]);
        let mut rng = stream_rng(1, 0);
        let mut counts = [0usize; 9];
        let draws = 60_000;
        for _ in 0..draws {
            counts[action_index(&random_act(&obs, &mut rng), 3).unwrap()] += 1;
        }
        // six valid actions at 1/6; sd = sqrt(n p (1-p)) ~ 91
        for (i, &c) in counts.iter().enumerate() {
            if i < 6 {
                assert!((c as f64 - draws as f64 / 6.0).abs() < 4.0 * 91.3, "index {i}: {c}");
            } else {
                assert_eq!(c, 0);
            }
        }
    }

    fn constant_q(n_in: usize, values: Vec<f64>) -> Mlp<f64> {
        let shape = LayerShape { inputs: n_in, outputs: values.len(), activation: Activation::Identity };
        Mlp::from_layers(vec![(shape, vec![0.0; n_in * values.len()], values)]).unwrap()
    }

    #[test]
    fn greedy_tie_break_and_masking() {
        let obs = obs_from_rows(&[vec![0, 1, 1], vec![1, 0, 1]]);
        let flat = constant_q(3, vec![1.0; 9]);
        // valid indices: (1,0)=3, (1,2)=5, (2,0)=6, (2,2)=8
        assert_eq!(greedy_act(&obs, &flat).unwrap(), vec![1, 0].into());
        let mut q = vec![0.0; 9];
        q[0] = 100.0; // invalid
        q[6] = 2.0;
        q[8] = 1.0;
        assert_eq!(greedy_act(&obs, &constant_q(3, q)).unwrap(), vec![2, 0].into());
    }

    #[test]
    fn every_policy_emits_valid_actions() {
        let g = Graph::directed_ring(4).unwrap();
        let cfg = GameConfig::new(g, 3, 4, InitScheme::FreeSplit { p1_nodes: vec![0, 1, 2, 3], p2_nodes: vec![0, 1, 2, 3] }).unwrap();
        let mut rng = stream_rng(2, 0);
        let net = Mlp::<f64>::new(&[4, 8, 256], Activation::Relu, &mut rng).unwrap();
        let handles = [
            PolicyHandle::Random,
            PolicyHandle::greedy(net.clone()),
            PolicyHandle::dqn(net.clone(), 0.3),
            PolicyHandle::ppo(net),
        ];
        for _ in 0..200 {
            let st = crate::env::reset(&cfg, &mut rng).unwrap();
            for seat in Seat::BOTH {
                let obs = Observation::new(&cfg, &st, seat).unwrap();
                for h in &handles {
                    let a = h.act(&obs, &mut rng).unwrap();
                    assert!(is_valid_action(&obs.actions, &a).unwrap(), "{} produced {a:?}", h.label());
                }
            }
        }
    }
}
