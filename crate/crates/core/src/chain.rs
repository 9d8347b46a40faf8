//! The GHZ chain.
//!
//! An honest chain of `m` blocks is the two-branch state
//!
//! ```text
//! (|0 r12 r21 r22 ... rm2> + e^{iΘ} |1 r̄12 r̄21 r̄22 ... r̄m2>) / √2,   Θ = Σ θ_i
//! ```
//!
//! held symbolically as the block list. In temporal mode every qubit but
//! the last has been absorbed and only `(|b> + e^{iΘ}|b̄>)/√2` remains.
//! Tampering or obfuscation moves the chain to an explicit state vector.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::encoding::{BitPair, BlockEncoding, PhaseSchedule};
use crate::error::{Error, Result};
use crate::quantum::{
    bits_to_index, projective_measure, Projector, ProjectorSet, RandomSource, StateVector, UnitaryMatrix, DEGENERACY_TOL,
    MAX_QUBITS,
};

/// Relative tolerance when matching a block phase to the schedule.
const PHASE_MATCH_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Spatial,
    Temporal,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Spatial => "spatial",
            Mode::Temporal => "temporal",
        })
    }
}

/// An adversarial action on one qubit of a local chain copy.
#[derive(Clone, Debug, PartialEq)]
pub enum TamperOp {
    /// Computational-basis measurement.
    MeasureQubit { target: usize },
    /// `diag(1, e^{iδ})` on the target.
    PhaseShift { target: usize, delta: f64 },
    /// Arbitrary single-qubit unitary.
    LocalUnitary { target: usize, u: UnitaryMatrix },
}

impl TamperOp {
    pub fn target(&self) -> usize {
        match self {
            TamperOp::MeasureQubit { target }
            | TamperOp::PhaseShift { target, .. }
            | TamperOp::LocalUnitary { target, .. } => *target,
        }
    }
}

/// What has happened to a chain beyond honest fusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum ChainEvent {
    MeasureQubit { target: usize, outcome: u8 },
    PhaseShift { target: usize, delta: f64 },
    LocalUnitary { target: usize },
    OffSchedule { index: usize, theta: f64 },
    ValidityCollapse { outcome: Outcome },
    Obfuscated { ops: usize },
    Deobfuscated { ops: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Plus,
    Minus,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidityVerdict {
    pub outcome: Outcome,
    pub valid: bool,
    /// Born probability of `Plus` on the state that was measured.
    pub plus_probability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    mode: Mode,
    schedule: PhaseSchedule,
    blocks: Vec<BlockEncoding>,
    cumulative_phase: f64,
    explicit: Option<StateVector>,
    tampered: bool,
    history: Vec<ChainEvent>,
}

impl ChainState {
    pub fn genesis(schedule: PhaseSchedule, enc: BlockEncoding, mode: Mode) -> Result<Self> {
        if enc.index != 1 {
            return Err(Error::contract(format!("genesis block has index {}", enc.index)));
        }
        if enc.r1() != 0 {
            return Err(Error::GenesisConstraint {
                bits: enc.bits.to_string(),
            });
        }
        check_scheduled(&schedule, &enc)?;
        Ok(ChainState {
            mode,
            schedule,
            blocks: vec![enc],
            cumulative_phase: enc.theta,
            explicit: None,
            tampered: false,
            history: Vec::new(),
        })
    }

    /// Appends a block whose phase must match the schedule.
    pub fn fuse_block(&self, enc: BlockEncoding) -> Result<Self> {
        self.check_next(&enc)?;
        check_scheduled(&self.schedule, &enc)?;
        let next = self.appended(enc);
        if next.cumulative_phase >= FRAC_PI_2 {
            return Err(Error::contract(format!(
                "cumulative phase {} would reach π/2",
                next.cumulative_phase
            )));
        }
        Ok(next)
    }

    /// Appends whatever block was physically received, even off schedule.
    /// An off-schedule block marks the chain tampered.
    pub fn fuse_received(&self, enc: BlockEncoding) -> Result<Self> {
        self.check_next(&enc)?;
        let off = check_scheduled(&self.schedule, &enc).is_err();
        let mut next = self.appended(enc);
        if off {
            next.tampered = true;
            next.history.push(ChainEvent::OffSchedule {
                index: enc.index,
                theta: enc.theta,
            });
        }
        Ok(next)
    }

    fn check_next(&self, enc: &BlockEncoding) -> Result<()> {
        if self.explicit.is_some() {
            return Err(Error::contract("cannot fuse onto a chain held as an explicit state"));
        }
        let expected = self.blocks.len() + 1;
        if enc.index != expected {
            return Err(Error::Sequencing {
                len: self.blocks.len(),
                expected,
                got: enc.index,
            });
        }
        Ok(())
    }

    fn appended(&self, enc: BlockEncoding) -> Self {
        let mut next = self.clone();
        next.blocks.push(enc);
        next.cumulative_phase = next.blocks.iter().map(|b| b.theta).sum();
        next
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn schedule(&self) -> &PhaseSchedule {
        &self.schedule
    }

    pub fn blocks(&self) -> &[BlockEncoding] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// `2m`, including absorbed qubits.
    pub fn qubit_count(&self) -> usize {
        2 * self.blocks.len()
    }

    pub fn cumulative_phase(&self) -> f64 {
        self.cumulative_phase
    }

    /// `(-1)^{r_{1_1}}`; always `+1` because genesis enforces `r_{1_1} = 0`.
    pub fn sign(&self) -> i8 {
        if self.blocks[0].r1() == 0 {
            1
        } else {
            -1
        }
    }

    pub fn strings(&self) -> Vec<BitPair> {
        self.blocks.iter().map(|b| b.bits).collect()
    }

    pub fn branch0(&self) -> Vec<u8> {
        self.blocks.iter().flat_map(|b| b.bits.bits()).collect()
    }

    pub fn branch1(&self) -> Vec<u8> {
        self.branch0().into_iter().map(|b| 1 - b).collect()
    }

    pub fn branch0_label(&self) -> String {
        bit_string(&self.branch0())
    }

    pub fn branch1_label(&self) -> String {
        bit_string(&self.branch1())
    }

    /// Absorption tick of every qubit, in units of τ: `0, 1, 1, 2, 2, ..., m`.
    pub fn timestamps(&self) -> Vec<usize> {
        (0..self.qubit_count()).map(|j| (j + 1) / 2).collect()
    }

    pub fn absorbed_count(&self) -> usize {
        match self.mode {
            Mode::Spatial => 0,
            Mode::Temporal => self.qubit_count() - 1,
        }
    }

    /// Global indices of the qubits still physically present.
    pub fn live_qubits(&self) -> Vec<usize> {
        match self.mode {
            Mode::Spatial => (0..self.qubit_count()).collect(),
            Mode::Temporal => vec![self.qubit_count() - 1],
        }
    }

    pub fn is_tampered(&self) -> bool {
        self.tampered
    }

    pub fn is_explicit(&self) -> bool {
        self.explicit.is_some()
    }

    pub fn history(&self) -> &[ChainEvent] {
        &self.history
    }

    /// The physical state of the chain.
    pub fn realize(&self) -> Result<StateVector> {
        if let Some(s) = &self.explicit {
            return Ok(s.clone());
        }
        let phase = Complex64::from_polar(FRAC_1_SQRT_2, self.cumulative_phase);
        let b0 = self.branch0();
        let (qubits, i0, i1) = match self.mode {
            Mode::Spatial => (b0.len(), bits_to_index(&b0), bits_to_index(&self.branch1())),
            Mode::Temporal => {
                let b = *b0.last().expect("nonempty chain") as usize;
                (1, b, 1 - b)
            }
        };
        two_branch(qubits, i0, i1, phase)
    }

    /// Translates a global qubit index into an index of the realized state,
    /// refusing absorbed qubits.
    fn local_index(&self, target: usize) -> Result<usize> {
        let n = self.qubit_count();
        if target >= n {
            return Err(Error::contract(format!("qubit {target} out of range for a {n}-qubit chain")));
        }
        match self.mode {
            Mode::Spatial => Ok(target),
            Mode::Temporal if target == n - 1 => Ok(0),
            Mode::Temporal => Err(Error::TemporalAccess { target, live: n - 1 }),
        }
    }

    fn with_state(&self, state: StateVector, event: ChainEvent, tampered: bool) -> Self {
        let mut next = self.clone();
        next.explicit = Some(state);
        next.tampered |= tampered;
        next.history.push(event);
        next
    }

    pub fn to_snapshot(&self) -> ChainSnapshot {
        ChainSnapshot {
            format: SNAPSHOT_FORMAT.into(),
            mode: self.mode,
            theta1: self.schedule.theta1(),
            n: self.schedule.ratio(),
            strings: self.strings(),
            phases: self.blocks.iter().map(|b| b.theta).collect(),
            cumulative_phase: self.cumulative_phase,
            branch0: self.branch0_label(),
            timestamps: self.timestamps(),
            absorbed_count: self.absorbed_count(),
            tampered: self.tampered,
            history: self.history.clone(),
            state: self
                .explicit
                .as_ref()
                .map(|s| s.amplitudes().iter().map(|a| [a.re, a.im]).collect()),
        }
    }

    pub fn from_snapshot(snap: &ChainSnapshot) -> Result<Self> {
        let bad = |m: String| Error::Snapshot(m);
        if snap.format != SNAPSHOT_FORMAT {
            return Err(bad(format!("unsupported format {:?}", snap.format)));
        }
        if snap.strings.is_empty() || snap.strings.len() != snap.phases.len() {
            return Err(bad("strings and phases must be nonempty and equally long".into()));
        }
        let schedule = PhaseSchedule::new(snap.theta1, snap.n)?;
        let blocks: Vec<BlockEncoding> = snap
            .strings
            .iter()
            .zip(&snap.phases)
            .enumerate()
            .map(|(i, (&bits, &theta))| BlockEncoding {
                index: i + 1,
                bits,
                theta,
            })
            .collect();
        if blocks[0].r1() != 0 {
            return Err(Error::GenesisConstraint {
                bits: blocks[0].bits.to_string(),
            });
        }
        let cumulative_phase: f64 = blocks.iter().map(|b| b.theta).sum();
        if (cumulative_phase - snap.cumulative_phase).abs() > 1e-12 {
            return Err(bad(format!(
                "cumulative phase {} disagrees with block phases (sum {cumulative_phase})",
                snap.cumulative_phase
            )));
        }
        let explicit = match &snap.state {
            None => None,
            Some(amps) => {
                let qubits = match snap.mode {
                    Mode::Spatial => 2 * blocks.len(),
                    Mode::Temporal => 1,
                };
                let amps = amps.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
                Some(StateVector::new(qubits, amps).map_err(|e| bad(e.to_string()))?)
            }
        };
        let off_schedule = blocks.iter().any(|b| check_scheduled(&schedule, b).is_err());
        Ok(ChainState {
            mode: snap.mode,
            schedule,
            blocks,
            cumulative_phase,
            explicit,
            tampered: snap.tampered || off_schedule,
            history: snap.history.clone(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_snapshot()).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: ChainSnapshot =
            serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
        Self::from_snapshot(&snap)
    }
}

fn check_scheduled(schedule: &PhaseSchedule, enc: &BlockEncoding) -> Result<()> {
    let expected = schedule.phase_at(enc.index)?;
    if (enc.theta - expected).abs() > PHASE_MATCH_TOL * expected {
        return Err(Error::ScheduleViolation {
            index: enc.index,
            expected,
            got: enc.theta,
        });
    }
    Ok(())
}

/// `|i0>/√2 + amp1·|i1>` with `|amp1| = 1/√2`.
fn two_branch(qubits: usize, i0: usize, i1: usize, amp1: Complex64) -> Result<StateVector> {
    if qubits > MAX_QUBITS {
        return Err(Error::OracleScale { qubits, max: MAX_QUBITS });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
    amps[i0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[i1] = amp1;
    StateVector::new(qubits, amps)
}

fn bit_string(bits: &[u8]) -> String {
    bits.iter().map(|b| char::from(b'0' + b)).collect()
}

pub const SNAPSHOT_FORMAT: &str = "phasechain-chain/1";

/// Serialized chain. Field names are stable within a format tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSnapshot {
    pub format: String,
    pub mode: Mode,
    pub theta1: f64,
    pub n: u32,
    pub strings: Vec<BitPair>,
    pub phases: Vec<f64>,
    pub cumulative_phase: f64,
    pub branch0: String,
    pub timestamps: Vec<usize>,
    pub absorbed_count: usize,
    pub tampered: bool,
    #[serde(default)]
    pub history: Vec<ChainEvent>,
    /// Amplitudes as `[re, im]` pairs when the chain is held explicitly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<Vec<[f64; 2]>>,
}

pub fn genesis_chain(schedule: PhaseSchedule, enc: BlockEncoding, mode: Mode) -> Result<ChainState> {
    ChainState::genesis(schedule, enc, mode)
}

pub fn fuse_block(chain: &ChainState, enc: BlockEncoding) -> Result<ChainState> {
    chain.fuse_block(enc)
}

pub fn realize(chain: &ChainState) -> Result<StateVector> {
    chain.realize()
}

/// Plus/Minus projectors onto `(|b0> ± e^{iθ_expected}|b1>)/√2` built from
/// the verifier's strings and schedule, with the rest of the space as Other.
pub fn validity_basis(strings: &[BitPair], schedule: &PhaseSchedule, mode: Mode) -> Result<ProjectorSet<Outcome>> {
    if strings.is_empty() {
        return Err(Error::contract("validity basis needs at least one block string"));
    }
    let theta = schedule.cumulative_phase(strings.len());
    let b0: Vec<u8> = strings.iter().flat_map(|s| s.bits()).collect();
    let b1: Vec<u8> = b0.iter().map(|b| 1 - b).collect();
    let (qubits, i0, i1) = match mode {
        Mode::Spatial => (b0.len(), bits_to_index(&b0), bits_to_index(&b1)),
        Mode::Temporal => {
            let b = *b0.last().expect("nonempty") as usize;
            (1, b, 1 - b)
        }
    };
    let plus = two_branch(qubits, i0, i1, Complex64::from_polar(FRAC_1_SQRT_2, theta))?;
    let minus = two_branch(qubits, i0, i1, -Complex64::from_polar(FRAC_1_SQRT_2, theta))?;
    ProjectorSet::new(vec![
        (Outcome::Plus, Projector::Span(vec![plus.clone()])),
        (Outcome::Minus, Projector::Span(vec![minus.clone()])),
        (
            Outcome::Other,
            Projector::Complement {
                qubits,
                vectors: vec![plus, minus],
            },
        ),
    ])
}

/// One projective measurement of the chain in its validity basis. Returns
/// the verdict and the chain after the measurement back-action.
pub fn check_validity(
    chain: &ChainState,
    schedule: &PhaseSchedule,
    strings: &[BitPair],
    rng: &mut RandomSource,
) -> Result<(ValidityVerdict, ChainState)> {
    let state = chain.realize()?;
    let basis = validity_basis(strings, schedule, chain.mode)?;
    let plus_probability = basis.entries()[0].1.probability(&state)?;
    let (outcome, post) = projective_measure(&state, &basis, rng)?;
    let verdict = ValidityVerdict {
        outcome,
        valid: outcome == Outcome::Plus,
        plus_probability,
    };
    let unchanged = post.fidelity(&state)? >= 1.0 - 1e-12;
    let next = if unchanged {
        chain.clone()
    } else {
        chain.with_state(post, ChainEvent::ValidityCollapse { outcome }, outcome != Outcome::Plus)
    };
    Ok((verdict, next))
}

/// Born probability that [`check_validity`] would return Plus.
pub fn plus_probability(chain: &ChainState, schedule: &PhaseSchedule, strings: &[BitPair]) -> Result<f64> {
    let state = chain.realize()?;
    validity_basis(strings, schedule, chain.mode)?.entries()[0].1.probability(&state)
}

/// Probability that a validity check run right after `op` returns Plus,
/// averaged over the outcomes of `op` itself when it is a measurement.
pub fn expected_plus_after_tamper(
    chain: &ChainState,
    op: &TamperOp,
    schedule: &PhaseSchedule,
    strings: &[BitPair],
) -> Result<f64> {
    let q = chain.local_index(op.target())?;
    let state = chain.realize()?;
    let basis = validity_basis(strings, schedule, chain.mode)?;
    let plus = &basis.entries()[0].1;
    match op {
        TamperOp::MeasureQubit { .. } => {
            let mut total = 0.0;
            for value in 0..2 {
                let amps = Projector::QubitValue {
                    qubits: state.qubit_count(),
                    qubit: q,
                    value,
                }
                .project(&state)?;
                let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
                if p > DEGENERACY_TOL {
                    total += p * plus.probability(&StateVector::from_unnormalized(state.qubit_count(), amps)?)?;
                }
            }
            Ok(total)
        }
        TamperOp::PhaseShift { delta, .. } => plus.probability(&state.apply(&UnitaryMatrix::phase(*delta), &[q])?),
        TamperOp::LocalUnitary { u, .. } => plus.probability(&state.apply(u, &[q])?),
    }
}

pub fn apply_tamper(chain: &ChainState, op: &TamperOp, rng: &mut RandomSource) -> Result<ChainState> {
    let q = chain.local_index(op.target())?;
    let state = chain.realize()?;
    let (next, event) = match op {
        TamperOp::MeasureQubit { target } => {
            let ps = ProjectorSet::single_qubit(state.qubit_count(), q)?;
            let (outcome, post) = projective_measure(&state, &ps, rng)?;
            (post, ChainEvent::MeasureQubit { target: *target, outcome })
        }
        TamperOp::PhaseShift { target, delta } => (
            state.apply(&UnitaryMatrix::phase(*delta), &[q])?,
            ChainEvent::PhaseShift {
                target: *target,
                delta: *delta,
            },
        ),
        TamperOp::LocalUnitary { target, u } => {
            if u.dim() != 2 {
                return Err(Error::contract("tamper unitaries act on a single qubit"));
            }
            (state.apply(u, &[q])?, ChainEvent::LocalUnitary { target: *target })
        }
    };
    Ok(chain.with_state(next, event, true))
}

/// Rebuilds the honest chain from public parameters.
pub fn reconstruct(schedule: &PhaseSchedule, strings: &[BitPair], mode: Mode) -> Result<ChainState> {
    let (first, rest) = strings
        .split_first()
        .ok_or_else(|| Error::contract("cannot reconstruct an empty chain"))?;
    let mut chain = ChainState::genesis(*schedule, BlockEncoding::scheduled(schedule, 1, *first)?, mode)?;
    for (i, &bits) in rest.iter().enumerate() {
        chain = chain.fuse_block(BlockEncoding::scheduled(schedule, i + 2, bits)?)?;
    }
    Ok(chain)
}

/// Applies single-qubit unitaries in order.
pub fn obfuscate(chain: &ChainState, ops: &[(usize, UnitaryMatrix)]) -> Result<ChainState> {
    let state = apply_local(chain, ops.iter().map(|(q, u)| (*q, u.clone())))?;
    Ok(chain.with_state(state, ChainEvent::Obfuscated { ops: ops.len() }, false))
}

/// Undoes [`obfuscate`] by applying the adjoints in reverse order.
pub fn deobfuscate(chain: &ChainState, ops: &[(usize, UnitaryMatrix)]) -> Result<ChainState> {
    let state = apply_local(chain, ops.iter().rev().map(|(q, u)| (*q, u.adjoint())))?;
    Ok(chain.with_state(state, ChainEvent::Deobfuscated { ops: ops.len() }, false))
}

fn apply_local(chain: &ChainState, ops: impl Iterator<Item = (usize, UnitaryMatrix)>) -> Result<StateVector> {
    let ops: Vec<(usize, UnitaryMatrix)> = ops.collect();
    // validate every target before touching the state
    let locals = ops
        .iter()
        .map(|(q, u)| {
            if u.dim() != 2 {
                return Err(Error::contract("obfuscation unitaries act on a single qubit"));
            }
            chain.local_index(*q)
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut state = chain.realize()?;
    for ((_, u), q) in ops.iter().zip(locals) {
        state = state.apply(u, &[q])?;
    }
    Ok(state)
}
