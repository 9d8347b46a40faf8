//! One consensus round, simulated as a fixed sequence of protocol steps:
//! creator selection, copy distribution, per-node validation, cross
//! comparison of the shared results, final verdicts and a majority tally.
//! Admitted blocks are fused onto every non-blacklisted node's local chain.
//!
//! Classical channels are authenticated: a node cannot misreport the string
//! it received, only its judgment and final verdict.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainState, Outcome};
use crate::config::ScenarioConfig;
use crate::encoding::{block_state, encode_block, BitPair, BlockCodec, BlockEncoding, PhaseSchedule};
use crate::error::{Error, Result};
use crate::quantum::{gram_schmidt_complete, projective_measure, Projector, ProjectorSet, RandomSource, StateVector};

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum CreatorStrategy {
    Honest,
    /// Every copy carries `θ_m + delta`.
    WrongPhaseAll { delta: f64 },
    /// Copies sent to `nodes` carry `θ_m + delta`.
    WrongPhaseSubset { delta: f64, nodes: BTreeSet<NodeId> },
    /// `nodes` receive the string with `r2` flipped; the state is honest.
    DifferentStrings { nodes: BTreeSet<NodeId> },
    /// The state is prepared for the string with `r2` flipped.
    StateStringMismatch,
}

impl CreatorStrategy {
    pub fn is_honest(&self) -> bool {
        matches!(self, CreatorStrategy::Honest)
    }

    pub fn name(&self) -> &'static str {
        match self {
            CreatorStrategy::Honest => "honest",
            CreatorStrategy::WrongPhaseAll { .. } => "wrong-phase-all",
            CreatorStrategy::WrongPhaseSubset { .. } => "wrong-phase-subset",
            CreatorStrategy::DifferentStrings { .. } => "different-strings",
            CreatorStrategy::StateStringMismatch => "state-string-mismatch",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Honesty {
    Honest,
    /// Validates truthfully but votes the negation of its honest verdict.
    LyingValidator,
    InconsistentCreator(CreatorStrategy),
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeProfile {
    pub id: NodeId,
    pub honesty: Honesty,
    pub chain: ChainState,
    pub stored_strings: Vec<BitPair>,
}

/// What one node receives from the creator.
#[derive(Clone, Debug, PartialEq)]
pub struct Delivery {
    pub copies: Vec<StateVector>,
    pub string: BitPair,
    /// The encoding the copies were actually prepared from. Simulation
    /// ground truth; validators never read it.
    pub prepared: BlockEncoding,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Proposal {
    pub creator: NodeId,
    pub block_index: usize,
    pub block: BlockEncoding,
    pub deliveries: BTreeMap<NodeId, Delivery>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Judgment {
    CreatorHonest,
    CreatorDishonest,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub node: NodeId,
    pub outcomes: Vec<Outcome>,
    pub pass: bool,
    pub received_string: BitPair,
    pub judgment: Judgment,
}

impl MeasurementReport {
    pub fn count(&self, outcome: Outcome) -> usize {
        self.outcomes.iter().filter(|&&o| o == outcome).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Inconsistency {
    /// Nodes received different strings; `dissenters` are outside the
    /// largest agreeing group.
    StringDisagreement {
        groups: BTreeMap<BitPair, BTreeSet<NodeId>>,
        dissenters: BTreeSet<NodeId>,
    },
    PassDisagreement {
        passed: BTreeSet<NodeId>,
        failed: BTreeSet<NodeId>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub node: NodeId,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub admissible: bool,
    pub yes: usize,
    pub no: usize,
    pub blacklist: BTreeSet<NodeId>,
}

/// Quantum copy accounting for one round.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CopyLedger {
    pub delivered: usize,
    pub measured: usize,
    pub fused: usize,
    pub discarded: usize,
}

impl CopyLedger {
    pub fn balances(&self) -> bool {
        self.delivered == self.measured + self.fused + self.discarded
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub creator: NodeId,
    pub block_index: usize,
    pub block: BlockEncoding,
    pub strategy: CreatorStrategy,
    /// Ground truth: whether the creator followed the protocol.
    pub creator_honest: bool,
    pub reports: Vec<MeasurementReport>,
    pub inconsistencies: Vec<Inconsistency>,
    pub verdicts: Vec<Verdict>,
    pub admissible: bool,
    pub blacklist: BTreeSet<NodeId>,
    pub appended: BTreeSet<NodeId>,
    pub ledger: CopyLedger,
}

/// One protocol-step record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "kebab-case")]
pub enum RoundEvent {
    Proposal {
        creator: NodeId,
        block_index: usize,
        string: BitPair,
        theta: f64,
        strategy: String,
        copies_per_node: usize,
    },
    Measurement {
        node: NodeId,
        plus: usize,
        minus: usize,
        other: usize,
        pass: bool,
        received_string: BitPair,
        judgment: Judgment,
    },
    Verdict {
        node: NodeId,
        admissible: bool,
    },
    Tally {
        admissible: bool,
        yes: usize,
        no: usize,
        blacklist: BTreeSet<NodeId>,
        inconsistencies: usize,
    },
}

impl RoundOutcome {
    pub fn events(&self, copies_per_node: usize) -> Vec<RoundEvent> {
        let mut ev = Vec::with_capacity(2 + 2 * self.reports.len());
        ev.push(RoundEvent::Proposal {
            creator: self.creator,
            block_index: self.block_index,
            string: self.block.bits,
            theta: self.block.theta,
            strategy: self.strategy.name().into(),
            copies_per_node,
        });
        ev.extend(self.reports.iter().map(|r| RoundEvent::Measurement {
            node: r.node,
            plus: r.count(Outcome::Plus),
            minus: r.count(Outcome::Minus),
            other: r.count(Outcome::Other),
            pass: r.pass,
            received_string: r.received_string,
            judgment: r.judgment,
        }));
        ev.extend(self.verdicts.iter().map(|v| RoundEvent::Verdict {
            node: v.node,
            admissible: v.admissible,
        }));
        ev.push(RoundEvent::Tally {
            admissible: self.admissible,
            yes: self.verdicts.iter().filter(|v| v.admissible).count(),
            no: self.verdicts.iter().filter(|v| !v.admissible).count(),
            blacklist: self.blacklist.clone(),
            inconsistencies: self.inconsistencies.len(),
        });
        ev
    }
}

/// Uniform creator choice.
pub fn select_creator(rng: &mut RandomSource, nodes: usize) -> Result<NodeId> {
    if nodes == 0 {
        return Err(Error::contract("cannot select a creator from an empty network"));
    }
    Ok(rng.below(nodes))
}

/// Prepares `k` copies and one string per node according to `strategy`.
pub fn make_proposal(
    creator: NodeId,
    nodes: usize,
    block: &BlockEncoding,
    k: usize,
    strategy: &CreatorStrategy,
) -> Result<Proposal> {
    if k < 2 {
        return Err(Error::contract(format!("k = {k}: need one copy to check and one to append")));
    }
    let deliveries = (0..nodes)
        .map(|node| {
            let (prepared, string) = match strategy {
                CreatorStrategy::Honest => (*block, block.bits),
                CreatorStrategy::WrongPhaseAll { delta } => (shifted(block, *delta), block.bits),
                CreatorStrategy::WrongPhaseSubset { delta, nodes } if nodes.contains(&node) => {
                    (shifted(block, *delta), block.bits)
                }
                CreatorStrategy::WrongPhaseSubset { .. } => (*block, block.bits),
                CreatorStrategy::DifferentStrings { nodes } if nodes.contains(&node) => (*block, block.bits.flip_r2()),
                CreatorStrategy::DifferentStrings { .. } => (*block, block.bits),
                CreatorStrategy::StateStringMismatch => (
                    BlockEncoding {
                        bits: block.bits.flip_r2(),
                        ..*block
                    },
                    block.bits,
                ),
            };
            let copies = vec![block_state(&prepared); k];
            (node, Delivery { copies, string, prepared })
        })
        .collect();
    Ok(Proposal {
        creator,
        block_index: block.index,
        block: *block,
        deliveries,
    })
}

fn shifted(block: &BlockEncoding, delta: f64) -> BlockEncoding {
    BlockEncoding {
        theta: block.theta + delta,
        ..*block
    }
}

/// The four-outcome basis a validator reconstructs from the received string
/// and `θ_pre = θ_1 / n^(m-1)`: the expected block state (Plus), its
/// sign-flipped partner (Minus), and the Gram-Schmidt completion (Other).
pub fn validation_basis(schedule: &PhaseSchedule, block_index: usize, string: BitPair) -> Result<ProjectorSet<Outcome>> {
    let theta_pre = schedule.phase_at(block_index)?;
    let expected = BlockEncoding {
        index: block_index,
        bits: string,
        theta: theta_pre,
    };
    let plus = block_state(&expected);
    let minus = block_state(&BlockEncoding {
        bits: string.flip_r1(),
        ..expected
    });
    let mut basis = gram_schmidt_complete(&[plus, minus], 4)?.into_iter();
    let plus = basis.next().expect("4 vectors");
    let minus = basis.next().expect("4 vectors");
    ProjectorSet::new(vec![
        (Outcome::Plus, Projector::Span(vec![plus])),
        (Outcome::Minus, Projector::Span(vec![minus])),
        (Outcome::Other, Projector::Span(basis.collect())),
    ])
}

/// Measures all but the last copy in the validation basis. Returns the
/// report and the retained copy.
pub fn validate_copies(
    node: NodeId,
    delivery: &Delivery,
    schedule: &PhaseSchedule,
    block_index: usize,
    rng: &mut RandomSource,
) -> Result<(MeasurementReport, StateVector)> {
    let Some((retained, checks)) = delivery.copies.split_last() else {
        return Err(Error::contract("delivery holds no copies"));
    };
    let basis = validation_basis(schedule, block_index, delivery.string)?;
    let outcomes = checks
        .iter()
        .map(|copy| projective_measure(copy, &basis, rng).map(|(o, _)| o))
        .collect::<Result<Vec<Outcome>>>()?;
    let pass = outcomes.iter().all(|&o| o == Outcome::Plus);
    let report = MeasurementReport {
        node,
        outcomes,
        pass,
        received_string: delivery.string,
        judgment: if pass {
            Judgment::CreatorHonest
        } else {
            Judgment::CreatorDishonest
        },
    };
    Ok((report, retained.clone()))
}

/// Evidence visible from the shared reports alone.
pub fn cross_compare(reports: &[MeasurementReport]) -> Vec<Inconsistency> {
    let mut out = Vec::new();

    let mut groups: BTreeMap<BitPair, BTreeSet<NodeId>> = BTreeMap::new();
    for r in reports {
        groups.entry(r.received_string).or_default().insert(r.node);
    }
    if groups.len() > 1 {
        // largest group; ties go to the smallest string
        let (&majority, _) = groups
            .iter()
            .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
            .expect("nonempty");
        let dissenters = groups
            .iter()
            .filter(|(s, _)| **s != majority)
            .flat_map(|(_, n)| n.iter().copied())
            .collect();
        out.push(Inconsistency::StringDisagreement { groups, dissenters });
    }

    let passed: BTreeSet<NodeId> = reports.iter().filter(|r| r.pass).map(|r| r.node).collect();
    let failed: BTreeSet<NodeId> = reports.iter().filter(|r| !r.pass).map(|r| r.node).collect();
    if !passed.is_empty() && !failed.is_empty() {
        out.push(Inconsistency::PassDisagreement { passed, failed });
    }
    out
}

/// Each node's vote on admissibility. An honest node admits iff its own
/// copies passed and no string disagreement implicates the creator; a
/// lying validator votes the opposite; a dishonest creator always admits.
pub fn final_verdicts(
    reports: &[MeasurementReport],
    inconsistencies: &[Inconsistency],
    profiles: &[NodeProfile],
) -> Vec<Verdict> {
    let strings_split = inconsistencies
        .iter()
        .any(|i| matches!(i, Inconsistency::StringDisagreement { .. }));
    reports
        .iter()
        .map(|r| {
            let honest_view = r.pass && !strings_split;
            let admissible = match profiles.get(r.node).map(|p| &p.honesty) {
                Some(Honesty::LyingValidator) => !honest_view,
                Some(Honesty::InconsistentCreator(_)) => true,
                Some(Honesty::Honest) | None => honest_view,
            };
            Verdict { node: r.node, admissible }
        })
        .collect()
}

/// Strict majority decides; dissenters are blacklisted. An exact tie
/// rejects the block and blacklists nobody.
pub fn tally(verdicts: &[Verdict]) -> Result<Tally> {
    if verdicts.is_empty() {
        return Err(Error::contract("tally needs at least one verdict"));
    }
    let yes = verdicts.iter().filter(|v| v.admissible).count();
    let no = verdicts.len() - yes;
    let (admissible, blacklist) = if yes > no {
        (true, verdicts.iter().filter(|v| !v.admissible).map(|v| v.node).collect())
    } else if no > yes {
        (false, verdicts.iter().filter(|v| v.admissible).map(|v| v.node).collect())
    } else {
        (false, BTreeSet::new())
    };
    Ok(Tally {
        admissible,
        yes,
        no,
        blacklist,
    })
}

/// All nodes of a simulated network with their local chains.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub schedule: PhaseSchedule,
    pub profiles: Vec<NodeProfile>,
}

impl Network {
    /// Every node starts from the same honest chain built from the
    /// config's payloads (a lone `00` genesis block when none are given).
    pub fn from_config(cfg: &ScenarioConfig, codec: &BlockCodec) -> Result<Self> {
        let payloads = if cfg.payloads.is_empty() {
            vec!["00".parse()?]
        } else {
            cfg.payloads.clone()
        };
        let blocks = payloads
            .iter()
            .enumerate()
            .map(|(i, p)| encode_block(codec, &cfg.schedule, p, i + 1))
            .collect::<Result<Vec<_>>>()?;
        let mut chain = ChainState::genesis(cfg.schedule, blocks[0], cfg.mode)?;
        for b in &blocks[1..] {
            chain = chain.fuse_block(*b)?;
        }
        let strings = chain.strings();
        let profiles = (0..cfg.nodes)
            .map(|id| NodeProfile {
                id,
                honesty: if cfg.dishonest_validators.contains(&id) {
                    Honesty::LyingValidator
                } else {
                    Honesty::Honest
                },
                chain: chain.clone(),
                stored_strings: strings.clone(),
            })
            .collect();
        Ok(Network {
            schedule: cfg.schedule,
            profiles,
        })
    }

    /// Length of the longest local chain.
    pub fn height(&self) -> usize {
        self.profiles.iter().map(|p| p.chain.block_count()).max().unwrap_or(0)
    }

    /// Runs one round with a uniformly chosen creator.
    pub fn round(
        &self,
        k: usize,
        strategy: &CreatorStrategy,
        rng: &mut RandomSource,
    ) -> Result<(RoundOutcome, Network)> {
        let creator = select_creator(rng, self.profiles.len())?;
        self.round_with_creator(creator, k, strategy, rng)
    }

    pub fn round_with_creator(
        &self,
        creator: NodeId,
        k: usize,
        strategy: &CreatorStrategy,
        rng: &mut RandomSource,
    ) -> Result<(RoundOutcome, Network)> {
        let nodes = self.profiles.len();
        if creator >= nodes {
            return Err(Error::contract(format!("creator {creator} is not a node")));
        }
        let height = self.height();
        let block_index = height + 1;
        let bits = if block_index == 1 {
            BitPair::from_value(rng.below(2) as u8)
        } else {
            BitPair::from_value(rng.below(4) as u8)
        };
        let block = BlockEncoding::scheduled(&self.schedule, block_index, bits)?;
        let proposal = make_proposal(creator, nodes, &block, k, strategy)?;

        // the creator acts on its strategy this round
        let mut acting = self.profiles.clone();
        if !strategy.is_honest() {
            acting[creator].honesty = Honesty::InconsistentCreator(strategy.clone());
        }

        let mut reports = Vec::with_capacity(nodes);
        let mut retained = Vec::with_capacity(nodes);
        for (node, delivery) in &proposal.deliveries {
            let (report, copy) = validate_copies(*node, delivery, &self.schedule, block_index, rng)?;
            reports.push(report);
            retained.push(copy);
        }
        let inconsistencies = cross_compare(&reports);
        let verdicts = final_verdicts(&reports, &inconsistencies, &acting);
        let t = tally(&verdicts)?;

        let mut next = self.clone();
        let mut appended = BTreeSet::new();
        if t.admissible {
            // nodes that missed an earlier block cannot fuse this one
            let in_sync = |p: &NodeProfile| !t.blacklist.contains(&p.id) && p.chain.block_count() == height;
            for p in next.profiles.iter_mut().filter(|p| in_sync(p)) {
                let d = &proposal.deliveries[&p.id];
                p.chain = p.chain.fuse_received(d.prepared)?;
                p.stored_strings.push(d.string);
                appended.insert(p.id);
            }
        }

        let delivered: usize = proposal.deliveries.values().map(|d| d.copies.len()).sum();
        let measured: usize = reports.iter().map(|r| r.outcomes.len()).sum();
        let ledger = CopyLedger {
            delivered,
            measured,
            fused: appended.len(),
            discarded: retained.len() - appended.len(),
        };

        let outcome = RoundOutcome {
            creator,
            block_index,
            block,
            strategy: strategy.clone(),
            creator_honest: strategy.is_honest(),
            reports,
            inconsistencies,
            verdicts,
            admissible: t.admissible,
            blacklist: t.blacklist,
            appended,
            ledger,
        };
        Ok((outcome, next))
    }
}

/// One round on a fresh network built from `cfg`.
pub fn run_round(cfg: &ScenarioConfig, codec: &BlockCodec, rng: &mut RandomSource) -> Result<RoundOutcome> {
    let net = Network::from_config(cfg, codec)?;
    Ok(net.round(cfg.k, &cfg.creator_strategy, rng)?.0)
}

/// `cfg.trials` independent rounds; trial `t` draws from stream `t` of
/// `cfg.seed`. Results are in trial order regardless of scheduling.
pub fn simulate(cfg: &ScenarioConfig, codec: &BlockCodec) -> Result<Vec<RoundOutcome>> {
    cfg.validate()?;
    let net = Network::from_config(cfg, codec)?;
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RandomSource::new(cfg.seed, t);
            net.round(cfg.k, &cfg.creator_strategy, &mut rng).map(|(o, _)| o)
        })
        .collect()
}

/// A proportion with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub hits: u64,
    pub total: u64,
    pub value: Option<f64>,
    pub stderr: Option<f64>,
}

impl Rate {
    pub fn new(hits: u64, total: u64) -> Self {
        if total == 0 {
            return Rate {
                hits,
                total,
                value: None,
                stderr: None,
            };
        }
        let p = hits as f64 / total as f64;
        Rate {
            hits,
            total,
            value: Some(p),
            stderr: Some((p * (1.0 - p) / total as f64).sqrt()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trials: u64,
    pub admitted: u64,
    /// Honest-creator rounds that were rejected.
    pub false_reject: Rate,
    /// Dishonest-creator rounds that were admitted.
    pub false_accept: Rate,
    /// Honest validators (excluding the creator) voting to reject a
    /// dishonest creator's block.
    pub detection: Rate,
    /// Honest nodes that ended up blacklisted.
    pub false_blacklist: Rate,
    /// Lying validators that ended up blacklisted.
    pub liar_blacklist: Rate,
    pub mean_blacklist_size: f64,
    pub mean_blacklist_size_stderr: f64,
    pub ledger_balanced: bool,
}

pub fn summarize(cfg: &ScenarioConfig, outcomes: &[RoundOutcome]) -> TrialSummary {
    let mut admitted = 0;
    let (mut honest_rounds, mut rejected_honest) = (0, 0);
    let (mut bad_rounds, mut accepted_bad) = (0, 0);
    let (mut det_total, mut det_hits) = (0, 0);
    let (mut hon_total, mut hon_black) = (0, 0);
    let (mut liar_total, mut liar_black) = (0, 0);
    let mut sizes = Vec::with_capacity(outcomes.len());
    let mut balanced = true;

    for o in outcomes {
        admitted += o.admissible as u64;
        if o.creator_honest {
            honest_rounds += 1;
            rejected_honest += (!o.admissible) as u64;
        } else {
            bad_rounds += 1;
            accepted_bad += o.admissible as u64;
        }
        let acting_creator = |id: NodeId| id == o.creator && !o.creator_honest;
        for r in &o.reports {
            let liar = cfg.dishonest_validators.contains(&r.node);
            if acting_creator(r.node) {
                continue;
            }
            if liar {
                liar_total += 1;
                liar_black += o.blacklist.contains(&r.node) as u64;
                continue;
            }
            hon_total += 1;
            hon_black += o.blacklist.contains(&r.node) as u64;
            if !o.creator_honest && r.node != o.creator {
                det_total += 1;
                det_hits += o.verdicts.iter().any(|v| v.node == r.node && !v.admissible) as u64;
            }
        }
        sizes.push(o.blacklist.len() as f64);
        balanced &= o.ledger.balances();
    }

    let n = sizes.len().max(1) as f64;
    let mean = sizes.iter().sum::<f64>() / n;
    let var = if sizes.len() > 1 {
        sizes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };

    TrialSummary {
        trials: outcomes.len() as u64,
        admitted,
        false_reject: Rate::new(rejected_honest, honest_rounds),
        false_accept: Rate::new(accepted_bad, bad_rounds),
        detection: Rate::new(det_hits, det_total),
        false_blacklist: Rate::new(hon_black, hon_total),
        liar_blacklist: Rate::new(liar_black, liar_total),
        mean_blacklist_size: mean,
        mean_blacklist_size_stderr: (var / n).sqrt(),
        ledger_balanced: balanced,
    }
}

pub fn run_trials(cfg: &ScenarioConfig, codec: &BlockCodec) -> Result<TrialSummary> {
    Ok(summarize(cfg, &simulate(cfg, codec)?))
}

/// Closed-form probability that an honest validator flags a creator whose
/// copies are off by `delta`, using `checks` measured copies.
pub fn predicted_detection(delta: f64, checks: usize) -> f64 {
    1.0 - (delta / 2.0).cos().powi(2 * checks as i32)
}

/// Wraps `delta` into `(-π, π]`; detection depends only on this residue.
pub fn wrap_phase(delta: f64) -> f64 {
    let r = delta.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}
