//! Line-delimited episode traces: a header, one line per step, an end line.

use serde::{Deserialize, Serialize};

use crate::env::{reset, step, GameConfig, GameState, Outcome, Seat, StepRecord};
use crate::error::{GragError, Result};
use crate::graph::ResourceDistribution;
use crate::policies::{Observation, PolicyHandle};
use crate::provenance::TOOL_VERSION;
use crate::rng::{derive_seed, stream, stream_rng};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceRecord {
    Header {
        config_hash: String,
        seed: u64,
        tool_version: String,
        game: GameConfig,
        d1: ResourceDistribution,
        d2: ResourceDistribution,
    },
    Step(StepRecord),
    End {
        t: usize,
        d1: ResourceDistribution,
        d2: ResourceDistribution,
        outcome: Outcome,
    },
}

/// Plays one episode with the seeding of evaluation episode `index`.
pub fn record_episode<T: Scalar>(
    p1: &PolicyHandle<T>,
    p2: &PolicyHandle<T>,
    game: &GameConfig,
    seed: u64,
    index: u64,
    config_hash: &str,
) -> Result<Vec<TraceRecord>> {
    let es = derive_seed(seed, index);
    let mut env_rng = stream_rng(es, stream::ENV);
    let mut rng1 = stream_rng(es, stream::ACTOR_P1);
    let mut rng2 = stream_rng(es, stream::ACTOR_P2);
    let mut st = reset(game, &mut env_rng)?;
    let mut out = vec![TraceRecord::Header {
        config_hash: config_hash.to_string(),
        seed,
        tool_version: TOOL_VERSION.to_string(),
        game: game.clone(),
        d1: st.d1.clone(),
        d2: st.d2.clone(),
    }];
    while !st.is_terminal() {
        let a1 = p1.act(&Observation::new(game, &st, Seat::P1)?, &mut rng1)?;
        let a2 = p2.act(&Observation::new(game, &st, Seat::P2)?, &mut rng2)?;
        let (next, rec) = step(&st, &a1, &a2, game)?;
        out.push(TraceRecord::Step(rec));
        st = next;
    }
    out.push(TraceRecord::End { t: st.t, d1: st.d1, d2: st.d2, outcome: st.outcome });
    Ok(out)
}

pub fn to_jsonl(records: &[TraceRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("trace record serializes"));
        s.push('\n');
    }
    s
}

pub fn parse_jsonl(text: &str) -> Result<Vec<TraceRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| GragError::Parse(format!("trace line {}: {e}", i + 1))))
        .collect()
}

/// Feeds the recorded actions back through the environment and checks every
/// recorded state. Returns the final state.
pub fn replay(records: &[TraceRecord]) -> Result<GameState> {
    let fail = |msg: String| Err(GragError::Parse(msg));
    let Some(TraceRecord::Header { game, d1, d2, .. }) = records.first() else {
        return fail("trace does not start with a header".into());
    };
    let mut st = GameState::initial(d1.clone(), d2.clone());
    let mut ended = false;
    for (i, rec) in records.iter().enumerate().skip(1) {
        match rec {
            TraceRecord::Step(r) => {
                if ended {
                    return fail(format!("record {i}: step after end"));
                }
                if r.t != st.t || r.d1 != st.d1 || r.d2 != st.d2 {
                    return fail(format!("record {i}: recorded state differs from replay"));
                }
                let (next, again) = step(&st, &r.a1, &r.a2, game)?;
                if again != *r {
                    return fail(format!("record {i}: reward differs from replay"));
                }
                st = next;
            }
            TraceRecord::End { t, d1, d2, outcome } => {
                if *t != st.t || *d1 != st.d1 || *d2 != st.d2 || *outcome != st.outcome {
                    return fail(format!("record {i}: final state differs from replay"));
                }
                ended = true;
            }
            TraceRecord::Header { .. } => return fail(format!("record {i}: second header")),
        }
    }
    if !ended {
        return fail("trace has no end record".into());
    }
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::InitScheme;
    use crate::graph::Graph;

    #[test]
    fn random_trace_replays() {
        let game = GameConfig::new(Graph::directed_ring(4).unwrap(), 4, 4, InitScheme::Concentrated { p1_node: 0, p2_node: 2 }).unwrap();
        let recs = record_episode::<f64>(&PolicyHandle::Random, &PolicyHandle::Random, &game, 5, 0, "h").unwrap();
        let text = to_jsonl(&recs);
        let parsed = parse_jsonl(&text).unwrap();
        assert_eq!(parsed, recs);
        let last = replay(&parsed).unwrap();
        assert!(last.is_terminal());
        assert_eq!(to_jsonl(&record_episode::<f64>(&PolicyHandle::Random, &PolicyHandle::Random, &game, 5, 0, "h").unwrap()), text);
    }

    #[test]
    fn tampered_trace_is_rejected() {
        let game = GameConfig::new(Graph::complete(3).unwrap(), 2, 2, InitScheme::Concentrated { p1_node: 0, p2_node: 1 }).unwrap();
        let mut recs = record_episode::<f64>(&PolicyHandle::Random, &PolicyHandle::Random, &game, 1, 0, "h").unwrap();
        if let Some(TraceRecord::End { t, .. }) = recs.last_mut() {
            *t += 1;
        }
        assert!(replay(&recs).is_err());
    }
}
