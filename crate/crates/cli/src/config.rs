//! Experiment configuration: a TOML file, overridden field by field from the
//! command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use grag::learn::checkpoint::{Checkpoint, NetworkRole};
use grag::{load_named_graph, preset_init, DqnConfig, GameConfig, Graph, GragError, InitScheme, PolicyHandle, PpoConfig, Seat};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Dqn,
    Ppo,
}

/// Initialization: a preset label (`C1`..`C4`, `tilted`) or a full scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSpec {
    Preset(String),
    Scheme(InitScheme),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Named graph (`paper4`, `G0`..`G4`, `ringN`, `completeN`) or a path to a
    /// graph text file.
    pub graph: String,
    pub m1: u32,
    pub m2: u32,
    pub init: InitSpec,
    pub max_steps: usize,
    pub algorithm: Algorithm,
    /// `random`, `greedy:<checkpoint>`, `rl:<checkpoint>` or `selfplay`.
    pub opponent: String,
    pub learner: Seat,
    pub eval_episodes: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub dqn: DqnConfig,
    pub ppo: PpoConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            graph: "ring4".into(),
            m1: 4,
            m2: 4,
            init: InitSpec::Preset("C1".into()),
            max_steps: 50,
            algorithm: Algorithm::Dqn,
            opponent: "random".into(),
            learner: Seat::P1,
            eval_episodes: 2000,
            seed: 0,
            output_dir: PathBuf::from("runs"),
            dqn: DqnConfig::default(),
            ppo: PpoConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, GragError> {
        let text = fs::read_to_string(path).map_err(|e| GragError::InvalidConfig(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| GragError::InvalidConfig(format!("{}: {e}", path.display())))
    }

    pub fn graph(&self) -> Result<Graph, GragError> {
        let path = Path::new(&self.graph);
        if path.is_file() {
            let text = fs::read_to_string(path).map_err(|e| GragError::InvalidConfig(format!("{}: {e}", path.display())))?;
            return Graph::parse(&text);
        }
        load_named_graph(&self.graph)
    }

    pub fn game(&self) -> Result<GameConfig, GragError> {
        let graph = self.graph()?;
        let m = self.m1.max(self.m2);
        let init = match &self.init {
            InitSpec::Preset(label) => preset_init(&self.graph, label, graph.n(), m)?,
            InitSpec::Scheme(s) => s.clone(),
        };
        GameConfig::new(graph, self.m1, self.m2, init)?.with_max_steps(self.max_steps)
    }

    /// Trainer settings with the experiment-level fields copied in.
    pub fn dqn_config(&self) -> DqnConfig {
        DqnConfig { learner: self.learner, eval_episodes: self.eval_episodes, ..self.dqn.clone() }
    }

    pub fn ppo_config(&self) -> PpoConfig {
        PpoConfig { learner: self.learner, eval_episodes: self.eval_episodes, ..self.ppo.clone() }
    }

    /// Hash of everything except the output location.
    pub fn hash(&self) -> String {
        let keyed = Self { output_dir: PathBuf::new(), ..self.clone() };
        grag::provenance::config_hash(&keyed)
    }

    pub fn check_combination(&self) -> Result<(), GragError> {
        if self.opponent == "selfplay" && self.algorithm != Algorithm::Dqn {
            return Err(GragError::InvalidConfig("self-play is only available with dqn".into()));
        }
        if self.opponent != "selfplay" {
            PolicySpec::parse(&self.opponent)?;
        }
        Ok(())
    }
}

/// A policy named on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicySpec {
    Random,
    Greedy(PathBuf),
    Rl(PathBuf),
}

impl PolicySpec {
    pub fn parse(text: &str) -> Result<Self, GragError> {
        match text.split_once(':') {
            None if text == "random" => Ok(PolicySpec::Random),
            Some(("greedy", p)) if !p.is_empty() => Ok(PolicySpec::Greedy(p.into())),
            Some(("rl", p)) if !p.is_empty() => Ok(PolicySpec::Rl(p.into())),
            _ => Err(GragError::InvalidConfig(format!("bad policy `{text}`; expected random, greedy:<checkpoint> or rl:<checkpoint>"))),
        }
    }

    /// Loads the referenced checkpoint, refusing one made for another game.
    pub fn resolve(&self, game: &GameConfig) -> Result<PolicyHandle<f64>, GragError> {
        let load = |path: &Path| -> Result<Checkpoint, GragError> {
            let text = fs::read_to_string(path).map_err(|e| GragError::InvalidConfig(format!("{}: {e}", path.display())))?;
            let ck = Checkpoint::from_json(&text)?;
            ck.check_game(game)?;
            Ok(ck)
        };
        match self {
            PolicySpec::Random => Ok(PolicyHandle::Random),
            PolicySpec::Greedy(path) => {
                let ck = load(path)?;
                if ck.role != NetworkRole::Q {
                    return Err(GragError::Checkpoint("a greedy policy needs a Q-network checkpoint".into()));
                }
                Ok(PolicyHandle::Greedy(Arc::new(ck.to_network()?)))
            }
            PolicySpec::Rl(path) => {
                let ck = load(path)?;
                match ck.role {
                    NetworkRole::Q => Ok(PolicyHandle::dqn(ck.to_network()?, 0.0)),
                    NetworkRole::Policy => Ok(PolicyHandle::ppo(ck.to_network()?)),
                    NetworkRole::Value => Err(GragError::Checkpoint("a value network cannot act".into())),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_specs() {
        assert_eq!(PolicySpec::parse("random").unwrap(), PolicySpec::Random);
        assert_eq!(PolicySpec::parse("rl:a/b.json").unwrap(), PolicySpec::Rl("a/b.json".into()));
        assert!(PolicySpec::parse("greedy:").is_err());
        assert!(PolicySpec::parse("smart").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig { seed: 7, ..ExperimentConfig::default() };
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
        let partial: ExperimentConfig = toml::from_str("graph = \"G2\"\ninit = \"tilted\"\n[dqn]\ngamma = 0.9\n").unwrap();
        assert_eq!(partial.dqn.gamma, 0.9);
        assert_eq!(partial.dqn.batch_size, 64);
        assert!(partial.game().is_ok());
        assert!(toml::from_str::<ExperimentConfig>("grpah = \"G2\"").is_err());
    }

    #[test]
    fn explicit_scheme_in_toml() {
        let cfg: ExperimentConfig =
            toml::from_str("graph = \"ring4\"\n[init]\nscheme = \"concentrated\"\np1_node = 1\np2_node = 3\n").unwrap();
        assert_eq!(cfg.init, InitSpec::Scheme(InitScheme::Concentrated { p1_node: 1, p2_node: 3 }));
    }
}
