//! Versioned JSON checkpoints. Weights are always stored as 64-bit floats.

use serde::{Deserialize, Serialize};

use crate::env::GameConfig;
use crate::error::{GragError, Result};
use crate::learn::mlp::{Activation, LayerShape, Mlp};
use crate::provenance::{config_hash, TOOL_VERSION};
use crate::scalar::Scalar;

pub const CHECKPOINT_FORMAT: &str = "grag-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkRole {
    Q,
    Policy,
    Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub tool_version: String,
    pub role: NetworkRole,
    pub graph_n: usize,
    pub graph_hash: String,
    pub m1: u32,
    pub m2: u32,
    pub action_len: usize,
    pub config_hash: String,
    pub seed: u64,
    pub layers: Vec<LayerRecord>,
}

impl Checkpoint {
    pub fn from_network<T: Scalar>(net: &Mlp<T>, role: NetworkRole, game: &GameConfig, config_hash_: &str, seed: u64) -> Self {
        let layers = net
            .shapes()
            .iter()
            .enumerate()
            .map(|(l, s)| LayerRecord {
                inputs: s.inputs,
                outputs: s.outputs,
                activation: s.activation,
                weights: net.weights(l).iter().map(|w| w.to_f64_lossy()).collect(),
                biases: net.biases(l).iter().map(|b| b.to_f64_lossy()).collect(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            tool_version: TOOL_VERSION.into(),
            role,
            graph_n: game.n(),
            graph_hash: config_hash(&game.graph),
            m1: game.m1,
            m2: game.m2,
            action_len: game.action_len(),
            config_hash: config_hash_.into(),
            seed,
            layers,
        }
    }

    pub fn to_network<T: Scalar>(&self) -> Result<Mlp<T>> {
        let layers = self
            .layers
            .iter()
            .map(|r| {
                let shape = LayerShape { inputs: r.inputs, outputs: r.outputs, activation: r.activation };
                (shape, r.weights.iter().map(|&w| T::lit(w)).collect(), r.biases.iter().map(|&b| T::lit(b)).collect())
            })
            .collect();
        Mlp::from_layers(layers).map_err(|e| GragError::Checkpoint(format!("bad layer data: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("checkpoint serializes");
        s.push('\n');
        s
    }

    /// Parses and checks format, version and layer shapes.
    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| GragError::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(GragError::Checkpoint(format!("unknown format {:?}", ck.format)));
        }
        if ck.version != CHECKPOINT_VERSION {
            return Err(GragError::Checkpoint(format!("unsupported version {} (expected {CHECKPOINT_VERSION})", ck.version)));
        }
        if ck.layers.is_empty() {
            return Err(GragError::Checkpoint("no layers".into()));
        }
        ck.to_network::<f64>()?;
        if ck.layers[0].inputs != ck.graph_n {
            return Err(GragError::Checkpoint(format!("input width {} for a {}-node graph", ck.layers[0].inputs, ck.graph_n)));
        }
        Ok(ck)
    }

    /// Rejects a checkpoint trained for a different graph or budget.
    pub fn check_game(&self, game: &GameConfig) -> Result<()> {
        let mismatch = |what: &str, have: String, want: String| {
            Err(GragError::Checkpoint(format!("checkpoint {what} is {have}, requested game has {want}")))
        };
        if self.graph_n != game.n() {
            return mismatch("graph size", self.graph_n.to_string(), game.n().to_string());
        }
        let graph_hash = config_hash(&game.graph);
        if self.graph_hash != graph_hash {
            return mismatch("graph", self.graph_hash.clone(), graph_hash);
        }
        if (self.m1, self.m2) != (game.m1, game.m2) {
            return mismatch("budget", format!("{}/{}", self.m1, self.m2), format!("{}/{}", game.m1, game.m2));
        }
        Ok(())
    }
}
