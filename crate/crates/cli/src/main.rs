//! `grag`: experiment runner for multi-step Colonel Blotto on graphs.
//!
//! Subcommands: validate, train, eval, greedy-iterate, selfplay, trace.
//! Artifacts go under `<output_dir>/{checkpoints,reports,traces}/` and are
//! named `<command>-<confighash>-<seed>`.

mod config;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grag::learn::checkpoint::{Checkpoint, NetworkRole};
use grag::learn::iterate::greedy_iteration_with;
use grag::learn::selfplay::self_play_train;
use grag::oracle::{brute_force_transition, brute_force_valid_actions};
use grag::policies::random_action;
use grag::provenance::TOOL_VERSION;
use grag::rng::{stream_rng, GameRng};
use grag::trace::{parse_jsonl, record_episode, replay, to_jsonl};
use grag::{
    apply_action, enumerate_valid_actions, evaluate_matchup, train_dqn, train_ppo, GameConfig, GragError, Graph,
    MatchupStats, Mlp64, PolicyHandle, ResourceDistribution, Seat, TrainReport,
};
use rand::Rng;
use serde::Serialize;

use config::{Algorithm, ExperimentConfig, InitSpec, PolicySpec};

#[derive(Parser)]
#[command(name = "grag", version, about = "Multi-step Colonel Blotto on directed graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the valid-action machinery against brute force on random distributions.
    Validate(ValidateArgs),
    /// Train a DQN or PPO agent against a fixed opponent (or by self-play).
    Train(GameArgs),
    /// Play two policies against each other and print the win table.
    Eval(EvalArgs),
    /// Train Q_0 against random, then each Q_{i+1} against greedy Q_i.
    GreedyIterate(IterateArgs),
    /// Train both seats at once with opposite rewards.
    Selfplay(GameArgs),
    /// Record one episode as line-delimited JSON, or check a recorded one.
    Trace(TraceArgs),
}

#[derive(Args, Clone)]
struct GameArgs {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    graph: Option<String>,
    /// Budget of both players.
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    m1: Option<u32>,
    #[arg(long)]
    m2: Option<u32>,
    /// Initialization preset (C1..C4, tilted).
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long, value_enum)]
    algo: Option<Algorithm>,
    /// random | greedy:<checkpoint> | rl:<checkpoint> | selfplay
    #[arg(long)]
    opponent: Option<String>,
    /// Seat to train: p1 or p2.
    #[arg(long, value_parser = parse_seat)]
    learner: Option<Seat>,
    /// Environment steps of training.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value = "paper4")]
    graph: String,
    #[arg(long, default_value_t = 4)]
    m: u32,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value = "random")]
    p1: String,
    #[arg(long, default_value = "random")]
    p2: String,
}

#[derive(Args)]
struct IterateArgs {
    #[command(flatten)]
    game: GameArgs,
    /// Number of greedy rounds; produces Q_0..Q_k.
    #[arg(long, default_value_t = 2)]
    k: usize,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    game: GameArgs,
    #[arg(long, default_value = "random")]
    p1: String,
    #[arg(long, default_value = "random")]
    p2: String,
    /// Episode index within the seeded schedule.
    #[arg(long, default_value_t = 0)]
    episode: u64,
    /// Replay this trace instead of recording one.
    #[arg(long)]
    replay: Option<PathBuf>,
}

fn parse_seat(s: &str) -> Result<Seat, String> {
    match s.to_ascii_lowercase().as_str() {
        "p1" | "1" => Ok(Seat::P1),
        "p2" | "2" => Ok(Seat::P2),
        _ => Err(format!("unknown seat `{s}` (expected p1 or p2)")),
    }
}

type CliResult<T> = Result<T, GragError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(a) => cmd_validate(&a),
        Command::Train(a) => cmd_train(&a, "train"),
        Command::Selfplay(a) => {
            let a = GameArgs { opponent: Some("selfplay".into()), algo: Some(Algorithm::Dqn), ..a };
            cmd_train(&a, "selfplay")
        }
        Command::Eval(a) => cmd_eval(&a),
        Command::GreedyIterate(a) => cmd_greedy_iterate(&a),
        Command::Trace(a) => cmd_trace(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &GragError) -> u8 {
    match e {
        GragError::NumericalFault(_) => 4,
        GragError::InvalidConfig(_)
        | GragError::UnknownGraph(_)
        | GragError::InvalidGraph(_)
        | GragError::Checkpoint(_)
        | GragError::Parse(_)
        | GragError::InfeasibleScheme(_)
        | GragError::CapExceeded { .. } => 3,
        _ => 1,
    }
}

fn resolve_config(a: &GameArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(g) = &a.graph {
        cfg.graph = g.clone();
    }
    if let Some(m) = a.m {
        cfg.m1 = m;
        cfg.m2 = m;
    }
    if let Some(m) = a.m1 {
        cfg.m1 = m;
    }
    if let Some(m) = a.m2 {
        cfg.m2 = m;
    }
    if let Some(i) = &a.init {
        cfg.init = InitSpec::Preset(i.clone());
    }
    if let Some(s) = a.max_steps {
        cfg.max_steps = s;
    }
    if let Some(al) = a.algo {
        cfg.algorithm = al;
    }
    if let Some(o) = &a.opponent {
        cfg.opponent = o.clone();
    }
    if let Some(l) = a.learner {
        cfg.learner = l;
    }
    if let Some(s) = a.steps {
        cfg.dqn.total_steps = s;
        cfg.ppo.total_steps = s;
    }
    if let Some(e) = a.episodes {
        cfg.eval_episodes = e;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(o) = &a.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

/// `<out>/<kind>/<command>-<hash>-<seed><suffix>`, creating the directory.
fn artifact_path(cfg: &ExperimentConfig, kind: &str, command: &str, suffix: &str) -> CliResult<PathBuf> {
    let dir = cfg.output_dir.join(kind);
    fs::create_dir_all(&dir).map_err(|e| GragError::InvalidConfig(format!("{}: {e}", dir.display())))?;
    Ok(dir.join(format!("{command}-{}-{}{suffix}", cfg.hash(), cfg.seed)))
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| GragError::InvalidConfig(format!("{}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    write_file(path, &text)
}

fn write_checkpoint(cfg: &ExperimentConfig, game: &GameConfig, command: &str, suffix: &str, net: &Mlp64, role: NetworkRole) -> CliResult<()> {
    let ck = Checkpoint::from_network(net, role, game, &cfg.hash(), cfg.seed);
    write_file(&artifact_path(cfg, "checkpoints", command, suffix)?, &ck.to_json())
}

/// Report document: provenance plus the payload.
#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    command: &'a str,
    config_hash: String,
    seed: u64,
    tool_version: &'a str,
    config: &'a ExperimentConfig,
    #[serde(flatten)]
    body: T,
}

fn artifact<'a, T: Serialize>(command: &'a str, cfg: &'a ExperimentConfig, body: T) -> Artifact<'a, T> {
    Artifact { command, config_hash: cfg.hash(), seed: cfg.seed, tool_version: TOOL_VERSION, config: cfg, body }
}

#[derive(Serialize)]
struct Reports<'a> {
    reports: &'a [TrainReport],
}

fn print_table(rows: &[(String, &MatchupStats)]) {
    println!("{:<34} {:>8} {:>8} {:>8} {:>9}", "matchup (P1 vs P2)", "P1 wins", "P2 wins", "draws", "P1 rate");
    for (label, s) in rows {
        println!(
            "{:<34} {:>8} {:>8} {:>8} {:>8.1}%",
            label,
            s.wins_p1,
            s.wins_p2,
            s.draws,
            100.0 * s.win_rate(Seat::P1)
        );
    }
}

fn cmd_train(a: &GameArgs, command: &str) -> CliResult<()> {
    let cfg = resolve_config(a)?;
    cfg.check_combination()?;
    let game = cfg.game()?;
    let mut reports = Vec::new();
    if cfg.opponent == "selfplay" {
        let (p1, p2, report) = self_play_train::<f64>(&game, &cfg.dqn_config(), cfg.seed)?;
        write_checkpoint(&cfg, &game, command, "-p1.json", &p1, NetworkRole::Q)?;
        write_checkpoint(&cfg, &game, command, "-p2.json", &p2, NetworkRole::Q)?;
        reports.push(report);
    } else {
        let opponent = PolicySpec::parse(&cfg.opponent)?.resolve(&game)?;
        match cfg.algorithm {
            Algorithm::Dqn => {
                let (net, report) = train_dqn(&cfg.dqn_config(), &game, &opponent, cfg.seed)?;
                write_checkpoint(&cfg, &game, command, "-q.json", &net, NetworkRole::Q)?;
                reports.push(report);
            }
            Algorithm::Ppo => {
                let (policy, value, report) = train_ppo(&cfg.ppo_config(), &game, &opponent, cfg.seed)?;
                write_checkpoint(&cfg, &game, command, "-policy.json", &policy, NetworkRole::Policy)?;
                write_checkpoint(&cfg, &game, command, "-value.json", &value, NetworkRole::Value)?;
                reports.push(report);
            }
        }
    }
    if let Some(stats) = reports[0].final_eval() {
        print_table(&[(format!("final evaluation ({})", cfg.opponent), stats)]);
    }
    write_json(&artifact_path(&cfg, "reports", command, ".json")?, &artifact(command, &cfg, Reports { reports: &reports }))
}

#[derive(Serialize)]
struct EvalBody<'a> {
    p1: &'a str,
    p2: &'a str,
    stats: &'a MatchupStats,
}

fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let cfg = resolve_config(&a.game)?;
    let game = cfg.game()?;
    let p1 = PolicySpec::parse(&a.p1)?.resolve(&game)?;
    let p2 = PolicySpec::parse(&a.p2)?.resolve(&game)?;
    let stats = evaluate_matchup(&p1, &p2, &game, cfg.eval_episodes, cfg.seed)?;
    print_table(&[(format!("{} vs {}", p1.label(), p2.label()), &stats)]);
    println!("mean episode length {:.3}", stats.mean_length);
    write_json(&artifact_path(&cfg, "reports", "eval", ".json")?, &artifact("eval", &cfg, EvalBody { p1: &a.p1, p2: &a.p2, stats: &stats }))
}

#[derive(Serialize)]
struct IterateBody<'a> {
    reports: &'a [TrainReport],
    versus_previous: Vec<MatchupStats>,
    versus_random: Vec<MatchupStats>,
}

fn cmd_greedy_iterate(a: &IterateArgs) -> CliResult<()> {
    let cfg = resolve_config(&a.game)?;
    let game = cfg.game()?;
    let command = "greedy-iterate";
    let it = greedy_iteration_with::<f64, _>(&game, a.k, &cfg.dqn_config(), cfg.seed, |i, net, _| {
        write_checkpoint(&cfg, &game, command, &format!("-q{i}.json"), net, NetworkRole::Q)
    })?;
    let mut versus_previous = Vec::new();
    let mut versus_random = Vec::new();
    for i in 0..it.networks.len() {
        let me = PolicyHandle::greedy(it.networks[i].clone());
        if i > 0 {
            versus_previous.push(evaluate_matchup(&me, &it.greedy(i - 1), &game, cfg.eval_episodes, cfg.seed)?);
        }
        versus_random.push(evaluate_matchup(&me, &PolicyHandle::Random, &game, cfg.eval_episodes, cfg.seed)?);
    }
    let mut rows = Vec::new();
    for i in 0..it.networks.len() {
        if i > 0 {
            rows.push((format!("Q{i} vs greedy pi{}", i - 1), &versus_previous[i - 1]));
        }
        rows.push((format!("Q{i} vs random"), &versus_random[i]));
    }
    print_table(&rows);
    write_json(
        &artifact_path(&cfg, "reports", command, ".json")?,
        &artifact(command, &cfg, IterateBody { reports: &it.reports, versus_previous: versus_previous.clone(), versus_random: versus_random.clone() }),
    )
}

fn cmd_trace(a: &TraceArgs) -> CliResult<()> {
    if let Some(path) = &a.replay {
        let text = fs::read_to_string(path).map_err(|e| GragError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let records = parse_jsonl(&text)?;
        let last = replay(&records)?;
        println!("replayed {} steps: {:?} at t={}", records.len().saturating_sub(2), last.outcome, last.t);
        return Ok(());
    }
    let cfg = resolve_config(&a.game)?;
    let game = cfg.game()?;
    let p1 = PolicySpec::parse(&a.p1)?.resolve(&game)?;
    let p2 = PolicySpec::parse(&a.p2)?.resolve(&game)?;
    let records = record_episode(&p1, &p2, &game, cfg.seed, a.episode, &cfg.hash())?;
    replay(&records)?;
    write_file(&artifact_path(&cfg, "traces", "trace", &format!("-e{}.jsonl", a.episode))?, &to_jsonl(&records))
}

fn random_distribution(n: usize, m: u32, rng: &mut GameRng) -> ResourceDistribution {
    let mut counts = vec![0u32; n];
    for _ in 0..m {
        counts[rng.gen_range(0..n)] += 1;
    }
    ResourceDistribution::new(counts)
}

fn cmd_validate(a: &ValidateArgs) -> CliResult<()> {
    let graph: Graph = if Path::new(&a.graph).is_file() {
        let text = fs::read_to_string(&a.graph).map_err(|e| GragError::InvalidConfig(format!("{}: {e}", a.graph)))?;
        Graph::parse(&text)?
    } else {
        grag::load_named_graph(&a.graph)?
    };
    let cap = 1_000_000u128;
    let mut rng = stream_rng(a.seed, 0);
    let (mut sets_ok, mut sets_bad, mut moves_ok, mut moves_bad) = (0usize, 0usize, 0usize, 0usize);
    for _ in 0..a.samples {
        let d = random_distribution(graph.n(), a.m, &mut rng);
        let j = grag::graph::build_action_displacement(&graph, &d)?;
        let fast: BTreeSet<_> = enumerate_valid_actions(&j, cap)?.into_iter().collect();
        if fast == brute_force_valid_actions(&graph, &d, cap)? {
            sets_ok += 1;
        } else {
            sets_bad += 1;
        }
        let action = random_action(&j, &mut rng);
        if apply_action(&d, &action, &graph)? == brute_force_transition(&d, &action, &graph)? {
            moves_ok += 1;
        } else {
            moves_bad += 1;
        }
    }
    println!("graph {} (N={}), M={}, {} samples", a.graph, graph.n(), a.m, a.samples);
    println!("valid-action sets: {sets_ok} agree, {sets_bad} disagree");
    println!("transitions:       {moves_ok} agree, {moves_bad} disagree");
    if sets_bad + moves_bad > 0 {
        return Err(GragError::InvalidAction("valid-action machinery disagrees with brute force".into()));
    }
    Ok(())
}
