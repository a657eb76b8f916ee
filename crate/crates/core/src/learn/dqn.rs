//! Deep Q-learning over the flat `N^M` action head with masked selection and
//! masked bootstrap targets.

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::{reset, step, GameConfig, GameState, Seat};
use crate::error::{GragError, Result};
use crate::graph::{action_index, action_space_size, ActionDisplacementMatrix};
use crate::learn::mlp::{Activation, Mlp};
use crate::learn::optim::{clip_grad_norm, Optimizer, OptimizerKind};
use crate::learn::replay::{ReplayBuffer, Transition};
use crate::learn::report::{EvalPoint, LossPoint, TrainReport};
use crate::learn::{layer_sizes, normalize_state};
use crate::oracle::evaluate_matchup;
use crate::policies::{masked_argmax, random_action, Observation, PolicyHandle};
use crate::rng::{derive_seed, stream, stream_rng, GameRng};
use crate::scalar::Scalar;

/// Largest flat action head a trainer will allocate.
pub const DEFAULT_ACTION_CAP: usize = 1_000_000;

/// Salt separating evaluation seeds from training seeds.
pub(crate) const EVAL_SALT: u64 = 0x6576_616c;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of `total_steps` over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Target network copy period, in gradient updates.
    pub target_sync: usize,
    /// Environment steps.
    pub total_steps: usize,
    /// One update every this many environment steps.
    pub train_every: usize,
    pub learning_starts: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    pub grad_clip: Option<f64>,
    /// Seat trained by `train_dqn`; ignored by self-play.
    pub learner: Seat,
    pub eval_episodes: usize,
    /// Evaluate every this many environment steps (0: only at the end).
    pub eval_interval: usize,
    pub eval_epsilon: f64,
    pub action_cap: usize,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.5,
            learning_rate: 1e-3,
            batch_size: 64,
            buffer_capacity: 100_000,
            target_sync: 500,
            total_steps: 200_000,
            train_every: 1,
            learning_starts: 1_000,
            hidden: vec![64, 64],
            activation: Activation::Relu,
            optimizer: OptimizerKind::default(),
            grad_clip: None,
            learner: Seat::P1,
            eval_episodes: 2_000,
            eval_interval: 0,
            eval_epsilon: 0.0,
            action_cap: DEFAULT_ACTION_CAP,
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        let bad = |msg: &str| Err(GragError::InvalidConfig(msg.into()));
        if !unit(self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if !unit(self.epsilon_start) || !unit(self.epsilon_end) || !unit(self.eval_epsilon) {
            return bad("epsilon values must lie in [0, 1]");
        }
        if !unit(self.epsilon_decay_fraction) {
            return bad("epsilon_decay_fraction must lie in [0, 1]");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.buffer_capacity < self.batch_size {
            return bad("need 0 < batch_size <= buffer_capacity");
        }
        if self.target_sync == 0 || self.train_every == 0 {
            return bad("target_sync and train_every must be positive");
        }
        if self.hidden.contains(&0) {
            return bad("hidden layer widths must be positive");
        }
        Ok(())
    }

    /// Exploration rate at environment step `t`.
    pub fn epsilon_at(&self, t: usize) -> f64 {
        let horizon = self.epsilon_decay_fraction * self.total_steps as f64;
        if horizon <= 0.0 || t as f64 >= horizon {
            return self.epsilon_end;
        }
        let frac = t as f64 / horizon;
        self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)
    }
}

/// Flat output width for `game`, checked against `cap`.
pub fn head_size(game: &GameConfig, cap: usize) -> Result<usize> {
    let m = game.action_len();
    let size = action_space_size(game.n(), m)?;
    if size > cap {
        return Err(GragError::CapExceeded { count: size as u128, cap: cap as u128 });
    }
    Ok(size)
}

/// Fresh Q-network for `seat`, drawn from that seat's init stream.
pub fn init_q_network<T: Scalar>(cfg: &DqnConfig, game: &GameConfig, seat: Seat, seed: u64) -> Result<Mlp<T>> {
    let out = head_size(game, cfg.action_cap)?;
    let mut rng = stream_rng(seed, init_stream(seat));
    Mlp::new(&layer_sizes(game.n(), &cfg.hidden, out), cfg.activation, &mut rng)
}

pub(crate) fn init_stream(seat: Seat) -> u64 {
    match seat {
        Seat::P1 => stream::INIT_P1,
        Seat::P2 => stream::INIT_P2,
    }
}

pub(crate) fn actor_stream(seat: Seat) -> u64 {
    match seat {
        Seat::P1 => stream::ACTOR_P1,
        Seat::P2 => stream::ACTOR_P2,
    }
}

pub(crate) fn learner_stream(seat: Seat) -> u64 {
    match seat {
        Seat::P1 => stream::LEARNER_P1,
        Seat::P2 => stream::LEARNER_P2,
    }
}

/// With probability `epsilon` a product-uniform valid action, otherwise the
/// masked argmax of `q`. Returns a flat action index.
pub fn epsilon_greedy_select<T: Scalar, R: Rng + ?Sized>(
    q: &[T],
    j_mat: &ActionDisplacementMatrix,
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let n = j_mat.n();
    let expected = action_space_size(n, j_mat.rows())?;
    if q.len() != expected {
        return Err(GragError::DimensionMismatch { expected, got: q.len() });
    }
    if rng.gen::<f64>() < epsilon {
        action_index(&random_action(j_mat, rng), n)
    } else {
        Ok(masked_argmax(q, &j_mat.mask().indices()))
    }
}

/// `y = r` on terminal transitions, else `r + gamma * max_{a' valid} Q_target(s', a')`.
pub fn td_targets<T: Scalar>(batch: &[&Transition<T>], target: &Mlp<T>, gamma: T) -> Result<Vec<T>> {
    batch
        .iter()
        .map(|tr| {
            if tr.terminal || gamma == T::zero() {
                return Ok(tr.reward);
            }
            let q = target.forward(&tr.next_state)?;
            let valid = tr.next_mask.indices();
            assert!(!valid.is_empty(), "next state has no valid action");
            Ok(tr.reward + gamma * q[masked_argmax(&q, &valid)])
        })
        .collect()
}

/// Mean squared TD error over `batch` and its gradient.
pub fn td_loss<T: Scalar>(online: &Mlp<T>, batch: &[&Transition<T>], targets: &[T]) -> Result<(T, Vec<T>)> {
    let scale = T::one() / T::lit(batch.len() as f64);
    let mut grads = vec![T::zero(); online.param_count()];
    let mut loss = T::zero();
    let mut d_out = vec![T::zero(); online.output_dim()];
    for (tr, &y) in batch.iter().zip(targets) {
        let cache = online.forward_cached(&tr.state)?;
        let residual = cache.output()[tr.action] - y;
        loss += residual * residual * scale;
        d_out[tr.action] = T::lit(2.0) * residual * scale;
        online.backward(&cache, &d_out, &mut grads);
        d_out[tr.action] = T::zero();
    }
    if !loss.is_finite() {
        return Err(GragError::NumericalFault("non-finite TD loss".into()));
    }
    Ok((loss, grads))
}

/// One minibatch gradient step on the TD loss. Returns the loss before the step.
pub fn dqn_update<T: Scalar, R: Rng + ?Sized>(
    online: &mut Mlp<T>,
    target: &Mlp<T>,
    optimizer: &mut Optimizer<T>,
    buffer: &ReplayBuffer<T>,
    cfg: &DqnConfig,
    rng: &mut R,
) -> Result<T> {
    if buffer.len() < cfg.batch_size {
        return Err(GragError::InvalidConfig(format!("buffer holds {} < batch {}", buffer.len(), cfg.batch_size)));
    }
    let batch = buffer.sample(cfg.batch_size, rng);
    let targets = td_targets(&batch, target, T::lit(cfg.gamma))?;
    let (loss, mut grads) = td_loss(online, &batch, &targets)?;
    if let Some(max) = cfg.grad_clip {
        clip_grad_norm(&mut grads, max);
    }
    optimizer.step(online.params_mut(), &grads);
    Ok(loss)
}

/// Who occupies a seat during a DQN run.
#[derive(Clone, Debug)]
pub enum SeatRole<T: Scalar> {
    Learner,
    Fixed(PolicyHandle<T>),
}

/// Output of [`run_dqn_seats`]: a network for every learner seat.
#[derive(Clone, Debug)]
pub struct DqnRun<T> {
    pub nets: [Option<Mlp<T>>; 2],
    pub report: TrainReport,
}

struct Learner<T> {
    seat: Seat,
    online: Mlp<T>,
    target: Mlp<T>,
    optimizer: Optimizer<T>,
    buffer: ReplayBuffer<T>,
    rng: GameRng,
    updates: usize,
    loss_sum: f64,
    loss_count: usize,
}

/// How many losses are averaged into one report point.
const LOSS_WINDOW: usize = 100;

fn features<T: Scalar>(game: &GameConfig, st: &GameState, seat: Seat) -> Vec<T> {
    normalize_state(&st.perspective(seat), game.max_budget())
}

pub(crate) fn first_live_state(game: &GameConfig, rng: &mut GameRng, episodes: &mut usize) -> Result<GameState> {
    for _ in 0..10_000 {
        let st = reset(game, rng)?;
        if !st.is_terminal() {
            return Ok(st);
        }
        *episodes += 1;
    }
    Err(GragError::InfeasibleScheme("initialization never produced a tied start".into()))
}

/// Generic DQN loop: each seat is either a learner or a fixed policy. With one
/// learner this is plain DQN against an opponent; with two it is self-play.
pub fn run_dqn_seats<T: Scalar>(
    cfg: &DqnConfig,
    game: &GameConfig,
    roles: [SeatRole<T>; 2],
    seed: u64,
    config_hash: String,
) -> Result<DqnRun<T>> {
    cfg.validate()?;
    game.validate()?;
    let started = Instant::now();
    let mut learners: Vec<Learner<T>> = Vec::new();
    for seat in Seat::BOTH {
        if let SeatRole::Learner = roles[seat.index()] {
            let online = init_q_network::<T>(cfg, game, seat, seed)?;
            learners.push(Learner {
                seat,
                target: online.clone(),
                optimizer: Optimizer::new(cfg.optimizer, cfg.learning_rate, online.param_count()),
                online,
                buffer: ReplayBuffer::new(cfg.buffer_capacity),
                rng: stream_rng(seed, learner_stream(seat)),
                updates: 0,
                loss_sum: 0.0,
                loss_count: 0,
            });
        }
    }
    let seats: Vec<Seat> = learners.iter().map(|l| l.seat).collect();
    let mut report = TrainReport::new("dqn", config_hash, seed, seats);
    if learners.is_empty() {
        return Err(GragError::InvalidConfig("no learner seat".into()));
    }

    let mut env_rng = stream_rng(seed, stream::ENV);
    let mut actor_rngs = Seat::BOTH.map(|s| stream_rng(seed, actor_stream(s)));
    let mut evals = 0u64;

    if cfg.total_steps > 0 {
        let mut st = first_live_state(game, &mut env_rng, &mut report.episodes)?;
        for t in 0..cfg.total_steps {
            let eps = cfg.epsilon_at(t);
            let mut actions = Vec::with_capacity(2);
            let mut chosen: [(Vec<T>, usize); 2] = Default::default();
            for seat in Seat::BOTH {
                let obs = Observation::new(game, &st, seat)?;
                let rng = &mut actor_rngs[seat.index()];
                let a = match &roles[seat.index()] {
                    SeatRole::Fixed(policy) => policy.act(&obs, rng)?,
                    SeatRole::Learner => {
                        let learner = learners.iter().find(|l| l.seat == seat).expect("learner seat");
                        let x = obs.features::<T>();
                        let q = learner.online.forward(&x)?;
                        let idx = epsilon_greedy_select(&q, &obs.actions, eps, rng)?;
                        chosen[seat.index()] = (x, idx);
                        obs.decode(idx)?
                    }
                };
                actions.push(a);
            }
            let (next, record) = step(&st, &actions[0], &actions[1], game)?;
            report.env_steps += 1;
            let terminal = next.is_terminal();
            for learner in learners.iter_mut() {
                let seat = learner.seat;
                let (state, action) = std::mem::take(&mut chosen[seat.index()]);
                learner.buffer.push(Transition {
                    state,
                    action,
                    reward: T::lit(f64::from(seat.signed(record.r1))),
                    next_state: features(game, &next, seat),
                    next_mask: game.action_matrix(&next, seat)?.mask(),
                    terminal,
                });
                let steps = report.env_steps;
                if steps >= cfg.learning_starts && steps.is_multiple_of(cfg.train_every) && learner.buffer.len() >= cfg.batch_size {
                    let loss = dqn_update(
                        &mut learner.online,
                        &learner.target,
                        &mut learner.optimizer,
                        &learner.buffer,
                        cfg,
                        &mut learner.rng,
                    )?;
                    learner.updates += 1;
                    report.updates += 1;
                    learner.loss_sum += loss.to_f64_lossy();
                    learner.loss_count += 1;
                    if learner.loss_count == LOSS_WINDOW {
                        report.losses.push(LossPoint { env_steps: steps, seat, loss: learner.loss_sum / LOSS_WINDOW as f64 });
                        learner.loss_sum = 0.0;
                        learner.loss_count = 0;
                    }
                    if learner.updates % cfg.target_sync == 0 {
                        learner.target = learner.online.clone();
                    }
                }
            }
            st = if terminal {
                report.episodes += 1;
                first_live_state(game, &mut env_rng, &mut report.episodes)?
            } else {
                next
            };
            let steps = report.env_steps;
            if cfg.eval_interval > 0 && steps.is_multiple_of(cfg.eval_interval) && steps < cfg.total_steps && cfg.eval_episodes > 0 {
                let stats = evaluate_dqn_roles(cfg, game, &roles, &learners, derive_seed(seed ^ EVAL_SALT, evals))?;
                report.evaluations.push(EvalPoint { env_steps: steps, stats });
                evals += 1;
            }
        }
    }
    if cfg.eval_episodes > 0 {
        let stats = evaluate_dqn_roles(cfg, game, &roles, &learners, derive_seed(seed ^ EVAL_SALT, evals))?;
        report.evaluations.push(EvalPoint { env_steps: report.env_steps, stats });
    }
    report.wall_clock_secs = started.elapsed().as_secs_f64();
    let mut nets = [None, None];
    for l in learners {
        nets[l.seat.index()] = Some(l.online);
    }
    Ok(DqnRun { nets, report })
}

fn evaluate_dqn_roles<T: Scalar>(
    cfg: &DqnConfig,
    game: &GameConfig,
    roles: &[SeatRole<T>; 2],
    learners: &[Learner<T>],
    seed: u64,
) -> Result<crate::oracle::MatchupStats> {
    let handle = |seat: Seat| match &roles[seat.index()] {
        SeatRole::Fixed(p) => p.clone(),
        SeatRole::Learner => {
            let l = learners.iter().find(|l| l.seat == seat).expect("learner seat");
            PolicyHandle::dqn(l.online.clone(), cfg.eval_epsilon)
        }
    };
    evaluate_matchup(&handle(Seat::P1), &handle(Seat::P2), game, cfg.eval_episodes, seed)
}

/// Hash of everything that determines a DQN run.
pub fn dqn_config_hash<T: Scalar>(cfg: &DqnConfig, game: &GameConfig, opponents: &[String], seed: u64) -> String {
    crate::provenance::config_hash(&("dqn", cfg, game, opponents, seed))
}

/// Trains `cfg.learner` against a fixed `opponent` in the other seat.
pub fn train_dqn<T: Scalar>(
    cfg: &DqnConfig,
    game: &GameConfig,
    opponent: &PolicyHandle<T>,
    seed: u64,
) -> Result<(Mlp<T>, TrainReport)> {
    let hash = dqn_config_hash::<T>(cfg, game, &[opponent.fingerprint()], seed);
    let mut roles = [SeatRole::Learner, SeatRole::Learner];
    roles[cfg.learner.other().index()] = SeatRole::Fixed(opponent.clone());
    let run = run_dqn_seats(cfg, game, roles, seed, hash)?;
    let [a, b] = run.nets;
    Ok((a.or(b).expect("one learner"), run.report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::ActionMask;
    use crate::learn::mlp::LayerShape;

    fn j(rows: &[Vec<u8>]) -> ActionDisplacementMatrix {
        ActionDisplacementMatrix::from_rows(rows).unwrap()
    }

    fn linear(values: Vec<f64>, inputs: usize) -> Mlp<f64> {
        let shape = LayerShape { inputs, outputs: values.len(), activation: Activation::Identity };
        Mlp::from_layers(vec![(shape, vec![0.0; inputs * values.len()], values)]).unwrap()
    }

    fn mask(rows: &[Vec<u8>]) -> ActionMask {
        j(rows).mask()
    }

    #[test]
    fn epsilon_schedule() {
        let cfg = DqnConfig { total_steps: 100, ..DqnConfig::default() };
        assert_eq!(cfg.epsilon_at(0), 1.0);
        assert!((cfg.epsilon_at(25) - 0.525).abs() < 1e-12);
        assert_eq!(cfg.epsilon_at(50), 0.05);
        assert_eq!(cfg.epsilon_at(99), 0.05);
    }

    #[test]
    fn epsilon_zero_is_masked_argmax() {
        let jm = j(&[vec![1, 1, 0]]);
        let mut rng = stream_rng(0, 0);
        for _ in 0..50 {
            assert_eq!(epsilon_greedy_select(&[0.0, 1.0, 9.0], &jm, 0.0, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn epsilon_half_mixture() {
        let jm = j(&[vec![1, 1, 0]]);
        let mut rng = stream_rng(3, 0);
        let trials = 100_000;
        let hits = (0..trials).filter(|_| epsilon_greedy_select(&[0.0, 1.0, 9.0], &jm, 0.5, &mut rng).unwrap() == 1).count();
        // p = 0.5 + 0.5 * 0.5
        let sd = (trials as f64 * 0.75 * 0.25).sqrt();
        assert!((hits as f64 - 0.75 * trials as f64).abs() < 3.0 * sd, "{hits}");
    }

    #[test]
    fn td_target_arithmetic() {
        let target = linear(vec![0.5, 3.0, 0.2], 2);
        let base = Transition {
            state: vec![0.0, 0.0],
            action: 0,
            reward: 1.0,
            next_state: vec![0.0, 0.0],
            next_mask: mask(&[vec![1, 0, 1]]),
            terminal: true,
        };
        let nonterm = Transition { reward: 0.0, terminal: false, ..base.clone() };
        let y = td_targets(&[&base, &nonterm], &target, 0.9).unwrap();
        assert_eq!(y[0], 1.0);
        // index 1 (3.0) is masked out; max over {0.5, 0.2}
        assert!((y[1] - 0.45).abs() < 1e-12);
        let y0 = td_targets(&[&nonterm], &target, 0.0).unwrap();
        assert_eq!(y0, vec![0.0]);
    }

    fn one_transition_buffer(reward: f64) -> ReplayBuffer<f64> {
        let mut buf = ReplayBuffer::new(4);
        buf.push(Transition {
            state: vec![0.5, -0.25],
            action: 1,
            reward,
            next_state: vec![0.0, 0.0],
            next_mask: mask(&[vec![1, 1]]),
            terminal: true,
        });
        buf
    }

    #[test]
    fn update_at_fixed_point_is_noop() {
        let shape = LayerShape { inputs: 2, outputs: 2, activation: Activation::Identity };
        let mut online = Mlp::from_layers(vec![(shape, vec![0.0; 4], vec![0.0, 0.7])]).unwrap();
        let target = online.clone();
        let before = online.clone();
        let cfg = DqnConfig { batch_size: 1, buffer_capacity: 4, optimizer: OptimizerKind::Sgd, ..DqnConfig::default() };
        let mut opt = Optimizer::new(cfg.optimizer, 0.1, online.param_count());
        let loss = dqn_update(&mut online, &target, &mut opt, &one_transition_buffer(0.7), &cfg, &mut stream_rng(0, 0)).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(online, before);
    }

    #[test]
    fn small_step_reduces_single_sample_loss() {
        let mut online = Mlp::<f64>::new(&[2, 2], Activation::Identity, &mut stream_rng(4, 0)).unwrap();
        let target = online.clone();
        let buf = one_transition_buffer(1.0);
        let cfg = DqnConfig { batch_size: 1, buffer_capacity: 4, optimizer: OptimizerKind::Sgd, ..DqnConfig::default() };
        let mut opt = Optimizer::new(cfg.optimizer, 0.01, online.param_count());
        let first = dqn_update(&mut online, &target, &mut opt, &buf, &cfg, &mut stream_rng(0, 0)).unwrap();
        let after = online.forward(&[0.5, -0.25]).unwrap()[1];
        assert!((after - 1.0).powi(2) < first);
    }

    #[test]
    fn reported_loss_matches_recomputed_residuals() {
        let online = Mlp::<f64>::new(&[2, 4, 3], Activation::Relu, &mut stream_rng(6, 0)).unwrap();
        let target = Mlp::<f64>::new(&[2, 4, 3], Activation::Relu, &mut stream_rng(7, 0)).unwrap();
        let mut buf = ReplayBuffer::new(16);
        for i in 0..10 {
            let x = i as f64 / 10.0;
            buf.push(Transition {
                state: vec![x, -x],
                action: i % 3,
                reward: if i % 4 == 0 { 1.0 } else { 0.0 },
                next_state: vec![-x, x],
                next_mask: mask(&[vec![1, 0, 1]]),
                terminal: i % 3 == 0,
            });
        }
        let cfg = DqnConfig { batch_size: 8, buffer_capacity: 16, gamma: 0.9, ..DqnConfig::default() };
        let mut net = online.clone();
        let mut opt = Optimizer::new(cfg.optimizer, 1e-3, net.param_count());
        let loss = dqn_update(&mut net, &target, &mut opt, &buf, &cfg, &mut stream_rng(11, 0)).unwrap();
        let batch = buf.sample(8, &mut stream_rng(11, 0));
        let mut expected = 0.0;
        for tr in &batch {
            let mut y = tr.reward;
            if !tr.terminal {
                let q = target.forward(&tr.next_state).unwrap();
                y += 0.9 * q[0].max(q[2]);
            }
            let r = online.forward(&tr.state).unwrap()[tr.action] - y;
            expected += r * r / 8.0;
        }
        assert!((loss - expected).abs() < 1e-12);
    }
}
