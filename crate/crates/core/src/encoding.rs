//! Classical → quantum block encoding.
//!
//! A classical payload passes through a per-index secret bijection to a
//! 2-bit string `r1 r2`; the block phase is fixed by the public schedule
//! `θ_i = θ_1 / n^(i-1)`. The block state is the Bell state selected by the
//! string with the phase placed on its `|1 r̄2>` branch.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{RandomSource, StateVector, UnitaryMatrix};

/// Bits carried by one block.
pub const BLOCK_CAPACITY: usize = 2;

/// Public phase schedule: `θ_i = θ_1 / n^(i-1)`, with `Σθ_i < π/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseSchedule {
    theta1: f64,
    ratio: u32,
}

impl PhaseSchedule {
    pub fn new(theta1: f64, ratio: u32) -> Result<Self> {
        if ratio < 2 {
            return Err(Error::contract(format!("schedule ratio n = {ratio} must be ≥ 2")));
        }
        if !(theta1.is_finite() && theta1 > 0.0) {
            return Err(Error::contract(format!("theta1 = {theta1} must be a positive angle")));
        }
        let bound = Self::theta1_bound(ratio);
        if theta1 >= bound {
            return Err(Error::Budget { theta1, bound, ratio });
        }
        Ok(PhaseSchedule { theta1, ratio })
    }

    /// Exclusive upper bound on `θ_1`: `(π/2)(n-1)/n`.
    pub fn theta1_bound(ratio: u32) -> f64 {
        let n = ratio as f64;
        FRAC_PI_2 * (n - 1.0) / n
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn ratio(&self) -> u32 {
        self.ratio
    }

    /// `θ_1 / n^(i-1)` for block index `i ≥ 1`.
    pub fn phase_at(&self, index: usize) -> Result<f64> {
        if index < 1 {
            return Err(Error::contract("block indices start at 1"));
        }
        let exp = i32::try_from(index - 1).unwrap_or(i32::MAX);
        Ok(self.theta1 / (self.ratio as f64).powi(exp))
    }

    /// Limit of the infinite phase series, `θ_1 · n/(n-1)`.
    pub fn budget(&self) -> f64 {
        let n = self.ratio as f64;
        self.theta1 * n / (n - 1.0)
    }

    /// `Σ_{i=1..m} θ_i`, summed term by term from the closed form.
    pub fn cumulative_phase(&self, m: usize) -> f64 {
        (1..=m).map(|i| self.phase_at(i).expect("i ≥ 1")).sum()
    }
}

/// A 2-bit string `r1 r2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BitPair {
    pub r1: u8,
    pub r2: u8,
}

impl BitPair {
    pub const ALL: [BitPair; 4] = [
        BitPair { r1: 0, r2: 0 },
        BitPair { r1: 0, r2: 1 },
        BitPair { r1: 1, r2: 0 },
        BitPair { r1: 1, r2: 1 },
    ];

    pub fn new(r1: u8, r2: u8) -> Result<Self> {
        if r1 > 1 || r2 > 1 {
            return Err(Error::contract(format!("({r1}, {r2}) is not a bit pair")));
        }
        Ok(BitPair { r1, r2 })
    }

    /// Value of `r1 r2` read as a binary number.
    pub fn value(self) -> u8 {
        (self.r1 << 1) | self.r2
    }

    pub fn from_value(v: u8) -> Self {
        BitPair {
            r1: (v >> 1) & 1,
            r2: v & 1,
        }
    }

    pub fn bits(self) -> [u8; 2] {
        [self.r1, self.r2]
    }

    pub fn flip_r1(self) -> Self {
        BitPair { r1: 1 - self.r1, ..self }
    }

    pub fn flip_r2(self) -> Self {
        BitPair { r2: 1 - self.r2, ..self }
    }
}

impl fmt::Display for BitPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.r1, self.r2)
    }
}

impl FromStr for BitPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        match b {
            [a @ (b'0' | b'1'), c @ (b'0' | b'1')] => Ok(BitPair {
                r1: a - b'0',
                r2: c - b'0',
            }),
            _ => Err(Error::Config(format!("{s:?} is not a 2-bit string"))),
        }
    }
}

impl Serialize for BitPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Classical payload of one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPayload {
    bits: Vec<u8>,
}

impl BlockPayload {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::contract("payload is empty"));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::contract("payload contains a non-bit"));
        }
        Ok(BlockPayload { bits })
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// The payload as a capacity-sized pair, zero-extended on the left.
    fn to_pair(&self) -> Result<BitPair> {
        if self.bits.len() > BLOCK_CAPACITY {
            return Err(Error::Capacity {
                bits: self.bits.len(),
                capacity: BLOCK_CAPACITY,
            });
        }
        let v = self.bits.iter().fold(0u8, |acc, &b| (acc << 1) | b);
        Ok(BitPair::from_value(v))
    }
}

impl From<BitPair> for BlockPayload {
    fn from(p: BitPair) -> Self {
        BlockPayload { bits: p.bits().to_vec() }
    }
}

impl FromStr for BlockPayload {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(Error::Config(format!("{s:?} is not a bit string"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        BlockPayload::new(bits).map_err(|_| Error::Config("empty payload".into()))
    }
}

impl fmt::Display for BlockPayload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.bits.iter().try_for_each(|b| write!(f, "{b}"))
    }
}

/// Permutation of the four 2-bit strings: `table[p] = f(p)`.
pub type Permutation = [u8; 4];

const IDENTITY: Permutation = [0, 1, 2, 3];

/// Per-index secret bijections `f_i` over 2-bit strings.
///
/// Indices without an explicit table fall back to `fallback` when one is
/// set, and are otherwise unknown to the codec.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockCodec {
    tables: BTreeMap<usize, Permutation>,
    fallback: Option<Permutation>,
}

impl BlockCodec {
    /// `f_i = id` for every index.
    pub fn identity() -> Self {
        BlockCodec {
            tables: BTreeMap::new(),
            fallback: Some(IDENTITY),
        }
    }

    pub fn from_tables(tables: BTreeMap<usize, Permutation>) -> Result<Self> {
        for (&i, t) in &tables {
            validate_permutation(i, t)?;
        }
        Ok(BlockCodec { tables, fallback: None })
    }

    /// Uniformly random bijections for indices `1..=blocks`.
    pub fn random(rng: &mut RandomSource, blocks: usize) -> Self {
        let tables = (1..=blocks)
            .map(|i| {
                let mut t = IDENTITY;
                t.shuffle(rng.rng_mut());
                (i, t)
            })
            .collect();
        BlockCodec { tables, fallback: None }
    }

    pub fn with_table(mut self, index: usize, table: Permutation) -> Result<Self> {
        validate_permutation(index, &table)?;
        self.tables.insert(index, table);
        Ok(self)
    }

    pub fn table(&self, index: usize) -> Result<Permutation> {
        self.tables
            .get(&index)
            .copied()
            .or(self.fallback)
            .ok_or(Error::UnknownIndex(index))
    }

    pub fn forward(&self, index: usize, p: BitPair) -> Result<BitPair> {
        Ok(BitPair::from_value(self.table(index)?[p.value() as usize]))
    }

    pub fn inverse(&self, index: usize, r: BitPair) -> Result<BitPair> {
        let t = self.table(index)?;
        let pos = t.iter().position(|&v| v == r.value()).expect("validated permutation");
        Ok(BitPair::from_value(pos as u8))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CodecRecord::from(self)).expect("codec record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: CodecRecord =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("codec record: {e}")))?;
        rec.try_into()
    }
}

fn validate_permutation(index: usize, t: &Permutation) -> Result<()> {
    if index < 1 {
        return Err(Error::contract("codec table for index 0"));
    }
    let mut seen = [false; 4];
    for &v in t {
        if v > 3 || seen[v as usize] {
            return Err(Error::contract(format!("codec table for index {index} is not a permutation: {t:?}")));
        }
        seen[v as usize] = true;
    }
    Ok(())
}

pub const CODEC_FORMAT: &str = "phasechain-codec/1";

/// Serialized form of a [`BlockCodec`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodecRecord {
    pub format: String,
    /// `"identity"` when unlisted indices map through the identity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<String>,
    /// Block index → `[f(00), f(01), f(10), f(11)]` as 2-bit strings.
    pub tables: BTreeMap<usize, [BitPair; 4]>,
}

impl From<&BlockCodec> for CodecRecord {
    fn from(c: &BlockCodec) -> Self {
        CodecRecord {
            format: CODEC_FORMAT.into(),
            fallback: c.fallback.map(|_| "identity".into()),
            tables: c
                .tables
                .iter()
                .map(|(&i, t)| (i, t.map(BitPair::from_value)))
                .collect(),
        }
    }
}

impl TryFrom<CodecRecord> for BlockCodec {
    type Error = Error;

    fn try_from(rec: CodecRecord) -> Result<Self> {
        if rec.format != CODEC_FORMAT {
            return Err(Error::Config(format!("unsupported codec format {:?}", rec.format)));
        }
        let fallback = match rec.fallback.as_deref() {
            None => None,
            Some("identity") => Some(IDENTITY),
            Some(other) => return Err(Error::Config(format!("unknown codec fallback {other:?}"))),
        };
        let mut codec = BlockCodec::from_tables(
            rec.tables
                .into_iter()
                .map(|(i, t)| (i, t.map(BitPair::value)))
                .collect(),
        )
        .map_err(|e| Error::Config(e.to_string()))?;
        codec.fallback = fallback;
        Ok(codec)
    }
}

/// The classical face of one block: index, string and scheduled phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockEncoding {
    pub index: usize,
    pub bits: BitPair,
    pub theta: f64,
}

impl BlockEncoding {
    /// Encoding at `index` under `schedule`, enforcing the genesis rule.
    pub fn scheduled(schedule: &PhaseSchedule, index: usize, bits: BitPair) -> Result<Self> {
        let theta = schedule.phase_at(index)?;
        if index == 1 && bits.r1 != 0 {
            return Err(Error::GenesisConstraint { bits: bits.to_string() });
        }
        Ok(BlockEncoding { index, bits, theta })
    }

    pub fn r1(&self) -> u8 {
        self.bits.r1
    }

    pub fn r2(&self) -> u8 {
        self.bits.r2
    }
}

pub fn phase_at(schedule: &PhaseSchedule, index: usize) -> Result<f64> {
    schedule.phase_at(index)
}

pub fn phase_budget(schedule: &PhaseSchedule) -> f64 {
    schedule.budget()
}

pub fn encode_block(
    codec: &BlockCodec,
    schedule: &PhaseSchedule,
    payload: &BlockPayload,
    index: usize,
) -> Result<BlockEncoding> {
    let p = payload.to_pair()?;
    let bits = codec.forward(index, p)?;
    BlockEncoding::scheduled(schedule, index, bits)
}

pub fn decode_block(codec: &BlockCodec, enc: &BlockEncoding) -> Result<BlockPayload> {
    Ok(codec.inverse(enc.index, enc.bits)?.into())
}

/// Phase gate placing `e^{iθ}` on the `|1 r̄2>` branch: `|11>` when
/// `r2 = 0`, `|10>` when `r2 = 1`.
pub fn rotation_for(enc: &BlockEncoding) -> UnitaryMatrix {
    let mut phases = [0.0; 4];
    if enc.r2() == 0 {
        phases[3] = enc.theta;
    } else {
        phases[2] = enc.theta;
    }
    UnitaryMatrix::diagonal(&phases).expect("length 4")
}

/// `(|0 r2> + (-1)^{r1} e^{iθ} |1 r̄2>) / √2`, prepared from `|00>` by
/// H, CNOT, the string's Pauli corrections, then [`rotation_for`].
pub fn block_state(enc: &BlockEncoding) -> StateVector {
    let mut s = StateVector::zero(2)
        .and_then(|s| s.apply(&UnitaryMatrix::hadamard(), &[0]))
        .and_then(|s| s.apply(&UnitaryMatrix::cnot(), &[0, 1]))
        .expect("two-qubit preparation");
    if enc.r2() == 1 {
        s = s.apply(&UnitaryMatrix::pauli_x(), &[1]).expect("qubit 1");
    }
    if enc.r1() == 1 {
        s = s.apply(&UnitaryMatrix::pauli_z(), &[0]).expect("qubit 0");
    }
    s.apply(&rotation_for(enc), &[0, 1]).expect("two-qubit rotation")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn sched(theta1: f64, n: u32) -> PhaseSchedule {
        PhaseSchedule::new(theta1, n).unwrap()
    }

    fn pair(s: &str) -> BitPair {
        s.parse().unwrap()
    }

    #[test]
    fn phase_schedule_values() {
        let s = sched(PI / 5.0, 2);
        assert_eq!(phase_at(&s, 1).unwrap(), PI / 5.0);
        assert!((phase_at(&s, 3).unwrap() - PI / 20.0).abs() < 1e-15);
        let s3 = sched(PI / 6.0, 3);
        assert!((phase_at(&s3, 2).unwrap() - PI / 18.0).abs() < 1e-15);
        assert!(phase_at(&s, 0).is_err());
    }

    #[test]
    fn phase_budget_values() {
        assert!((phase_budget(&sched(PI / 5.0, 2)) - 2.0 * PI / 5.0).abs() < 1e-15);
        assert!((phase_budget(&sched(PI / 6.0, 3)) - PI / 4.0).abs() < 1e-15);
        let near = sched(PI / 4.0 - 1e-9, 2);
        assert!(phase_budget(&near) < FRAC_PI_2);
        assert!(matches!(PhaseSchedule::new(PI / 4.0, 2), Err(Error::Budget { .. })));
        assert!(matches!(PhaseSchedule::new(0.8, 2), Err(Error::Budget { .. })));
        assert!(PhaseSchedule::new(0.1, 1).is_err());
        assert!(PhaseSchedule::new(-0.1, 2).is_err());
    }

    #[test]
    fn encode_examples() {
        let s = sched(PI / 5.0, 2);
        let id = BlockCodec::identity();
        let e = encode_block(&id, &s, &"00".parse().unwrap(), 1).unwrap();
        assert_eq!((e.bits, e.theta), (pair("00"), PI / 5.0));

        assert!(matches!(
            encode_block(&id, &s, &"10".parse().unwrap(), 1),
            Err(Error::GenesisConstraint { .. })
        ));
        assert!(matches!(
            encode_block(&id, &s, &"101".parse().unwrap(), 2),
            Err(Error::Capacity { bits: 3, .. })
        ));

        // f_2 swaps the two bits: 01 <-> 10
        let swap = BlockCodec::identity().with_table(2, [0, 2, 1, 3]).unwrap();
        let e = encode_block(&swap, &s, &"01".parse().unwrap(), 2).unwrap();
        assert_eq!(e.bits, pair("10"));
        assert!((e.theta - PI / 10.0).abs() < 1e-15);
        assert_eq!(decode_block(&swap, &e).unwrap().to_string(), "01");
    }

    #[test]
    fn decode_identity_and_unknown_index() {
        let s = sched(PI / 5.0, 2);
        let e = BlockEncoding::scheduled(&s, 1, pair("01")).unwrap();
        assert_eq!(decode_block(&BlockCodec::identity(), &e).unwrap().to_string(), "01");
        let sparse = BlockCodec::from_tables(BTreeMap::from([(1, IDENTITY)])).unwrap();
        let e2 = BlockEncoding::scheduled(&s, 2, pair("11")).unwrap();
        assert_eq!(decode_block(&sparse, &e2), Err(Error::UnknownIndex(2)));
    }

    #[test]
    fn short_payload_is_zero_extended() {
        let p: BlockPayload = "1".parse().unwrap();
        assert_eq!(p.to_pair().unwrap(), pair("01"));
    }

    #[test]
    fn round_trip_over_indices() {
        let s = sched(PI / 5.0, 2);
        let mut rng = RandomSource::new(7, 0);
        let codec = BlockCodec::random(&mut rng, 20);
        for i in 1..=20 {
            for p in BitPair::ALL {
                let payload = BlockPayload::from(p);
                match encode_block(&codec, &s, &payload, i) {
                    Ok(e) => assert_eq!(decode_block(&codec, &e).unwrap(), payload),
                    Err(Error::GenesisConstraint { .. }) => assert_eq!(i, 1),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn codec_json_round_trip() {
        let mut rng = RandomSource::new(11, 0);
        let codec = BlockCodec::random(&mut rng, 5);
        assert_eq!(BlockCodec::from_json(&codec.to_json()).unwrap(), codec);
        let id = BlockCodec::identity();
        assert_eq!(BlockCodec::from_json(&id.to_json()).unwrap(), id);
        assert!(BlockCodec::from_json(r#"{"format":"phasechain-codec/1","tables":{"1":["00","00","10","11"]}}"#).is_err());
    }

    #[test]
    fn rotations() {
        let theta = 0.37;
        let e = |s: &str| BlockEncoding { index: 2, bits: pair(s), theta };
        let r00 = rotation_for(&e("00"));
        assert_eq!(r00, UnitaryMatrix::diagonal(&[0.0, 0.0, 0.0, theta]).unwrap());
        assert_eq!(rotation_for(&e("10")), r00);
        let r11 = rotation_for(&e("11"));
        assert_eq!(r11, UnitaryMatrix::diagonal(&[0.0, 0.0, theta, 0.0]).unwrap());
        assert_eq!(rotation_for(&e("01")), r11);
        for b in BitPair::ALL {
            let z = BlockEncoding { index: 1, bits: b, theta: 0.0 };
            assert_eq!(rotation_for(&z), UnitaryMatrix::identity(4));
            assert!(rotation_for(&e(&b.to_string())).unitarity_deviation() < 1e-12);
        }
    }

    fn amp(re: f64, phase: f64) -> Complex64 {
        Complex64::from_polar(re, phase)
    }

    #[test]
    fn block_state_examples() {
        let phi_plus = block_state(&BlockEncoding { index: 1, bits: pair("00"), theta: 0.0 });
        assert!((phi_plus.amplitude(0) - amp(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
        assert!((phi_plus.amplitude(3) - amp(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);

        let b = block_state(&BlockEncoding { index: 1, bits: pair("00"), theta: PI / 5.0 });
        assert!((b.amplitude(3) - amp(FRAC_1_SQRT_2, PI / 5.0)).norm() < 1e-14);

        // (|01> - e^{iπ/10}|10>)/√2
        let b = block_state(&BlockEncoding { index: 3, bits: pair("11"), theta: PI / 10.0 });
        assert!((b.amplitude(1) - amp(FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
        assert!((b.amplitude(2) + amp(FRAC_1_SQRT_2, PI / 10.0)).norm() < 1e-14);
        assert!(b.amplitude(0).norm() < 1e-14 && b.amplitude(3).norm() < 1e-14);
    }

    #[test]
    fn phase_lands_on_leading_one_branch() {
        let theta = 0.61;
        for bits in BitPair::ALL {
            let s = block_state(&BlockEncoding { index: 2, bits, theta });
            assert!((s.norm() - 1.0).abs() < 1e-12);
            let nonzero: Vec<usize> = (0..4).filter(|&i| s.amplitude(i).norm() > 1e-12).collect();
            assert_eq!(nonzero.len(), 2);
            let zero_branch = bits.r2 as usize;
            let one_branch = 2 + (1 - bits.r2) as usize;
            assert_eq!(nonzero, vec![zero_branch, one_branch]);
            assert!((s.amplitude(zero_branch) - amp(FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
            let sign = if bits.r1 == 1 { -1.0 } else { 1.0 };
            assert!((s.amplitude(one_branch) - sign * amp(FRAC_1_SQRT_2, theta)).norm() < 1e-12);
        }
    }
}
