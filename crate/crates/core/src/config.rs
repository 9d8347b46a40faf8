//! Scenario configuration.
//!
//! Configs are TOML. Phases are radians. Example:
//!
//! ```toml
//! theta1 = 0.6283185307179586
//! n = 2
//! nodes = 5
//! k = 9
//! trials = 1000
//! seed = 42
//! mode = "spatial"
//! payloads = ["00", "10", "11"]
//!
//! [attack]
//! kind = "phase-shift"
//! target = 5
//! delta = 0.3141592653589793
//!
//! [adversary]
//! creator_strategy = "wrong-phase-all"
//! delta = 0.39269908169872414
//! dishonest_validators = [1]
//! ```

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::chain::{Mode, TamperOp};
use crate::consensus::{CreatorStrategy, NodeId};
use crate::encoding::{BlockCodec, BlockPayload, PhaseSchedule};
use crate::error::{Error, Result};
use crate::quantum::{RandomSource, UnitaryMatrix};

pub const DEFAULT_COPIES: usize = 9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    theta1: f64,
    n: u32,
    nodes: usize,
    seed: u64,
    k: Option<usize>,
    trials: Option<u64>,
    mode: Option<Mode>,
    payloads: Option<Vec<String>>,
    snapshot: Option<String>,
    record_events: Option<bool>,
    attack: Option<RawAttack>,
    adversary: Option<RawAdversary>,
    codec: Option<RawCodec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttack {
    kind: AttackKind,
    target: usize,
    delta: Option<f64>,
    unitary: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdversary {
    creator_strategy: Option<String>,
    delta: Option<f64>,
    subset: Option<BTreeSet<NodeId>>,
    #[serde(default)]
    dishonest_validators: BTreeSet<NodeId>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCodec {
    kind: String,
    seed: Option<u64>,
    path: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    MeasureQubit,
    PhaseShift,
    LocalUnitary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub target: usize,
    pub op: TamperOp,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CodecSpec {
    Identity,
    Random { seed: u64 },
    /// Path as written in the config; resolved by the caller.
    File { path: String },
}

impl CodecSpec {
    /// Builds the codec for chains of up to `blocks` blocks. File codecs
    /// are loaded through `read`.
    pub fn build(&self, blocks: usize, read: impl FnOnce(&str) -> Result<String>) -> Result<BlockCodec> {
        match self {
            CodecSpec::Identity => Ok(BlockCodec::identity()),
            CodecSpec::Random { seed } => Ok(BlockCodec::random(&mut RandomSource::new(*seed, 0), blocks)),
            CodecSpec::File { path } => BlockCodec::from_json(&read(path)?),
        }
    }
}

/// A complete, validated, reproducible experiment description.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub schedule: PhaseSchedule,
    pub nodes: usize,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub mode: Mode,
    pub payloads: Vec<BlockPayload>,
    pub snapshot: Option<String>,
    pub record_events: bool,
    pub attack: Option<AttackSpec>,
    pub creator_strategy: CreatorStrategy,
    pub dishonest_validators: BTreeSet<NodeId>,
    pub codec: CodecSpec,
}

impl ScenarioConfig {
    /// Programmatic constructor with defaults for everything optional.
    pub fn new(schedule: PhaseSchedule, nodes: usize, seed: u64) -> Self {
        ScenarioConfig {
            schedule,
            nodes,
            k: DEFAULT_COPIES,
            trials: 1,
            seed,
            mode: Mode::Spatial,
            payloads: Vec::new(),
            snapshot: None,
            record_events: true,
            attack: None,
            creator_strategy: CreatorStrategy::Honest,
            dishonest_validators: BTreeSet::new(),
            codec: CodecSpec::Identity,
        }
    }

    /// Checks every cross-field invariant.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.nodes < 3 {
            return cfg(format!("nodes: need at least 3, got {}", self.nodes));
        }
        if self.k < 2 {
            return cfg(format!("k: need at least 2 copies (one to check, one to append), got {}", self.k));
        }
        if self.trials < 1 {
            return cfg("trials: need at least 1".into());
        }
        if self.dishonest_validators.len() >= self.nodes {
            return cfg(format!(
                "adversary.dishonest_validators: {} of {} nodes leaves no honest node",
                self.dishonest_validators.len(),
                self.nodes
            ));
        }
        if let Some(&id) = self.dishonest_validators.iter().find(|&&id| id >= self.nodes) {
            return cfg(format!("adversary.dishonest_validators: node {id} out of range"));
        }
        match &self.creator_strategy {
            CreatorStrategy::WrongPhaseSubset { nodes, .. } | CreatorStrategy::DifferentStrings { nodes } => {
                if let Some(&id) = nodes.iter().find(|&&id| id >= self.nodes) {
                    return cfg(format!("adversary.subset: node {id} out of range"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Parses and validates a TOML scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;

    if !raw.theta1.is_finite() || raw.theta1 <= 0.0 {
        return Err(Error::Config(format!("theta1: {} is not a positive angle", raw.theta1)));
    }
    if raw.n < 2 {
        return Err(Error::Config(format!("n: ratio must be ≥ 2, got {}", raw.n)));
    }
    let schedule = PhaseSchedule::new(raw.theta1, raw.n)?;

    let payloads = raw
        .payloads
        .unwrap_or_default()
        .iter()
        .map(|p| p.parse::<BlockPayload>())
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::Config(format!("payloads: {e}")))?;

    let attack = raw.attack.map(parse_attack).transpose()?;

    let (creator_strategy, dishonest_validators) = match raw.adversary {
        None => (CreatorStrategy::Honest, BTreeSet::new()),
        Some(a) => (parse_strategy(&a)?, a.dishonest_validators),
    };

    let codec = match raw.codec {
        None => CodecSpec::Identity,
        Some(c) => match (c.kind.as_str(), c.seed, c.path) {
            ("identity", None, None) => CodecSpec::Identity,
            ("random", Some(seed), None) => CodecSpec::Random { seed },
            ("file", None, Some(path)) => CodecSpec::File { path },
            (kind, ..) => {
                return Err(Error::Config(format!(
                    "codec: kind {kind:?} needs exactly its own field (random → seed, file → path)"
                )))
            }
        },
    };

    let config = ScenarioConfig {
        schedule,
        nodes: raw.nodes,
        k: raw.k.unwrap_or(DEFAULT_COPIES),
        trials: raw.trials.unwrap_or(1),
        seed: raw.seed,
        mode: raw.mode.unwrap_or(Mode::Spatial),
        payloads,
        snapshot: raw.snapshot,
        record_events: raw.record_events.unwrap_or(true),
        attack,
        creator_strategy,
        dishonest_validators,
        codec,
    };
    config.validate()?;
    Ok(config)
}

fn parse_attack(a: RawAttack) -> Result<AttackSpec> {
    let need_delta = || {
        a.delta
            .filter(|d| d.is_finite())
            .ok_or_else(|| Error::Config(format!("attack.delta: required for {:?}", a.kind)))
    };
    let op = match a.kind {
        AttackKind::MeasureQubit => TamperOp::MeasureQubit { target: a.target },
        AttackKind::PhaseShift => TamperOp::PhaseShift {
            target: a.target,
            delta: need_delta()?,
        },
        AttackKind::LocalUnitary => {
            let u = match a.unitary.as_deref().unwrap_or("x") {
                "x" => UnitaryMatrix::pauli_x(),
                "y" => UnitaryMatrix::pauli_y(),
                "z" => UnitaryMatrix::pauli_z(),
                "h" => UnitaryMatrix::hadamard(),
                "phase" => UnitaryMatrix::phase(need_delta()?),
                "global-phase" => UnitaryMatrix::global_phase(need_delta()?),
                other => {
                    return Err(Error::Config(format!(
                        "attack.unitary: {other:?} is not one of x, y, z, h, phase, global-phase"
                    )))
                }
            };
            TamperOp::LocalUnitary { target: a.target, u }
        }
    };
    Ok(AttackSpec {
        kind: a.kind,
        target: a.target,
        op,
    })
}

fn parse_strategy(a: &RawAdversary) -> Result<CreatorStrategy> {
    let delta = || {
        a.delta
            .filter(|d| d.is_finite())
            .ok_or_else(|| Error::Config("adversary.delta: required for wrong-phase strategies".into()))
    };
    let subset = || {
        a.subset
            .clone()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::Config("adversary.subset: required and nonempty for this strategy".into()))
    };
    Ok(match a.creator_strategy.as_deref().unwrap_or("honest") {
        "honest" => CreatorStrategy::Honest,
        "wrong-phase-all" => CreatorStrategy::WrongPhaseAll { delta: delta()? },
        "wrong-phase-subset" => CreatorStrategy::WrongPhaseSubset {
            delta: delta()?,
            nodes: subset()?,
        },
        "different-strings" => CreatorStrategy::DifferentStrings { nodes: subset()? },
        "state-string-mismatch" => CreatorStrategy::StateStringMismatch,
        other => {
            return Err(Error::Config(format!(
                "adversary.creator_strategy: unknown strategy {other:?}"
            )))
        }
    })
}
