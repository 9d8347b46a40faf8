use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use phasechain::chain::{
    apply_tamper, check_validity, expected_plus_after_tamper, plus_probability, reconstruct, ChainState, Outcome,
};
use phasechain::config::{AttackKind, ScenarioConfig};
use phasechain::consensus::{predicted_detection, simulate, summarize, CreatorStrategy};
use phasechain::encoding::{encode_block, BitPair, BlockCodec, CodecRecord};
use phasechain::quantum::RandomSource;
use phasechain::Error;
use rayon::prelude::*;
use serde_json::{json, to_value};

use crate::report::Reporter;
use crate::CliError;

/// A parsed config plus the directory its relative paths resolve against.
pub struct Scenario {
    pub config: ScenarioConfig,
    pub base: PathBuf,
}

impl Scenario {
    pub fn load(path: &Path, seed: Option<u64>) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = phasechain::config::parse_config(&text)?;
        if let Some(seed) = seed {
            config.seed = seed;
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Scenario { config, base })
    }

    fn resolve(&self, p: &str) -> PathBuf {
        self.base.join(p)
    }

    fn codec(&self) -> Result<BlockCodec, CliError> {
        let blocks = self.config.payloads.len().max(1);
        let mut io_err = None;
        let codec = self.config.codec.build(blocks, |p| {
            let path = self.resolve(p);
            fs::read_to_string(&path).map_err(|e| {
                let msg = format!("{}: {e}", path.display());
                io_err = Some(CliError::io(&path, e));
                Error::Config(msg)
            })
        });
        match (codec, io_err) {
            (Ok(c), _) => Ok(c),
            (Err(_), Some(e)) => Err(e),
            (Err(e), None) => Err(e.into()),
        }
    }

    fn build_chain(&self) -> Result<ChainState, CliError> {
        let cfg = &self.config;
        if cfg.payloads.is_empty() {
            return Err(Error::Config("payloads: at least one payload is required".into()).into());
        }
        let codec = self.codec()?;
        let strings = cfg
            .payloads
            .iter()
            .enumerate()
            .map(|(i, p)| encode_block(&codec, &cfg.schedule, p, i + 1).map(|b| b.bits))
            .collect::<phasechain::Result<Vec<BitPair>>>()?;
        Ok(reconstruct(&cfg.schedule, &strings, cfg.mode)?)
    }

    /// The chain under test: the configured snapshot when present,
    /// otherwise the honest chain for the payloads.
    fn load_chain(&self) -> Result<ChainState, CliError> {
        match &self.config.snapshot {
            Some(p) => {
                let path = self.resolve(p);
                let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                Ok(ChainState::from_json(&text)?)
            }
            None => self.build_chain(),
        }
    }
}

pub fn encode<W: Write>(sc: &Scenario, rep: &mut Reporter<W>) -> Result<String, CliError> {
    let cfg = &sc.config;
    if cfg.payloads.is_empty() {
        return Err(Error::Config("payloads: at least one payload is required".into()).into());
    }
    let codec = sc.codec()?;
    rep.emit("codec", to_value(CodecRecord::from(&codec))?)?;
    let mut phase = 0.0;
    for (i, p) in cfg.payloads.iter().enumerate() {
        let b = encode_block(&codec, &cfg.schedule, p, i + 1)?;
        phase += b.theta;
        rep.emit(
            "encoding",
            json!({"index": b.index, "payload": p.to_string(), "bits": b.bits, "theta": b.theta}),
        )?;
    }
    rep.emit(
        "summary",
        json!({
            "command": "encode",
            "blocks": cfg.payloads.len(),
            "cumulative_phase": phase,
            "budget": cfg.schedule.budget(),
        }),
    )?;
    Ok(format!("encoded {} blocks, Θ = {phase:.12}", cfg.payloads.len()))
}

pub fn chain_build<W: Write>(sc: &Scenario, rep: &mut Reporter<W>) -> Result<String, CliError> {
    let chain = sc.build_chain()?;
    let snapshot = match &sc.config.snapshot {
        Some(p) => {
            let path = sc.resolve(p);
            fs::write(&path, chain.to_json()).map_err(|e| CliError::io(&path, e))?;
            json!(path.display().to_string())
        }
        None => serde_json::Value::Null,
    };
    rep.emit(
        "summary",
        json!({
            "command": "chain-build",
            "mode": chain.mode(),
            "blocks": chain.block_count(),
            "qubits": chain.qubit_count(),
            "cumulative_phase": chain.cumulative_phase(),
            "branch0": chain.branch0_label(),
            "branch1": chain.branch1_label(),
            "absorbed_count": chain.absorbed_count(),
            "snapshot": snapshot,
        }),
    )?;
    Ok(format!(
        "Θ = {:.12}, branch0 = {}",
        chain.cumulative_phase(),
        chain.branch0_label()
    ))
}

pub fn chain_validate<W: Write>(sc: &Scenario, rep: &mut Reporter<W>) -> Result<String, CliError> {
    let cfg = &sc.config;
    let chain = sc.load_chain()?;
    let strings = chain.strings();
    let predicted = plus_probability(&chain, &cfg.schedule, &strings)?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RandomSource::new(cfg.seed, t);
            check_validity(&chain, &cfg.schedule, &strings, &mut rng).map(|(v, _)| v.outcome)
        })
        .collect::<phasechain::Result<Vec<Outcome>>>()?;
    let plus = outcomes.iter().filter(|&&o| o == Outcome::Plus).count();
    let rate = plus as f64 / cfg.trials as f64;
    rep.emit(
        "summary",
        json!({
            "command": "chain-validate",
            "trials": cfg.trials,
            "plus": plus,
            "minus": outcomes.iter().filter(|&&o| o == Outcome::Minus).count(),
            "other": outcomes.iter().filter(|&&o| o == Outcome::Other).count(),
            "plus_rate": rate,
            "predicted_plus_rate": predicted,
            "tampered": chain.is_tampered(),
        }),
    )?;
    Ok(format!("plus rate {rate:.6} (predicted {predicted:.6})"))
}

pub fn attack<W: Write>(sc: &Scenario, rep: &mut Reporter<W>) -> Result<String, CliError> {
    let cfg = &sc.config;
    let spec = cfg
        .attack
        .as_ref()
        .ok_or_else(|| Error::Config("attack: section is required for this command".into()))?;
    let chain = sc.load_chain()?;
    let strings = chain.strings();
    let kind = match spec.kind {
        AttackKind::MeasureQubit => "measure-qubit",
        AttackKind::PhaseShift => "phase-shift",
        AttackKind::LocalUnitary => "local-unitary",
    };

    let predicted = match expected_plus_after_tamper(&chain, &spec.op, &cfg.schedule, &strings) {
        Ok(p) => Some(p),
        Err(Error::TemporalAccess { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let (blocked, plus) = match predicted {
        None => (cfg.trials, 0),
        Some(_) => {
            let outcomes = (0..cfg.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = RandomSource::new(cfg.seed, t);
                    let tampered = apply_tamper(&chain, &spec.op, &mut rng)?;
                    check_validity(&tampered, &cfg.schedule, &strings, &mut rng).map(|(v, _)| v.valid)
                })
                .collect::<phasechain::Result<Vec<bool>>>()?;
            (0, outcomes.iter().filter(|&&v| v).count() as u64)
        }
    };
    let attempted = cfg.trials - blocked;
    let rate = (attempted > 0).then(|| plus as f64 / attempted as f64);
    let detection = rate.map(|r| 1.0 - r);
    let predicted_detection = predicted.map(|p| 1.0 - p);
    let gap = detection.zip(predicted_detection).map(|(a, b)| (a - b).abs());
    rep.emit(
        "summary",
        json!({
            "command": "attack",
            "attack": kind,
            "target": spec.target,
            "mode": chain.mode(),
            "trials": cfg.trials,
            "structurally_blocked": blocked,
            "blocked_rate": blocked as f64 / cfg.trials as f64,
            "plus_rate": rate,
            "detection_rate": detection,
            "predicted_detection_rate": predicted_detection,
            "absolute_gap": gap,
        }),
    )?;
    Ok(match detection {
        Some(d) => format!(
            "{kind} on qubit {}: detection {d:.6} (predicted {:.6})",
            spec.target,
            predicted_detection.unwrap_or(f64::NAN)
        ),
        None => format!("{kind} on qubit {}: structurally blocked in all {} trials", spec.target, cfg.trials),
    })
}

pub fn consensus<W: Write>(sc: &Scenario, rep: &mut Reporter<W>) -> Result<String, CliError> {
    let cfg = &sc.config;
    let codec = sc.codec()?;
    let outcomes = simulate(cfg, &codec)?;
    if cfg.record_events {
        for (trial, o) in outcomes.iter().enumerate() {
            for ev in o.events(cfg.k) {
                let mut v = to_value(&ev)?;
                v.as_object_mut().expect("event object").insert("trial".into(), json!(trial));
                rep.emit("event", v)?;
            }
        }
    }
    let summary = summarize(cfg, &outcomes);
    let predicted = match &cfg.creator_strategy {
        CreatorStrategy::WrongPhaseAll { delta } | CreatorStrategy::WrongPhaseSubset { delta, .. } => {
            Some(predicted_detection(*delta, cfg.k - 1))
        }
        _ => None,
    };
    let mut fields = to_value(&summary)?;
    let obj = fields.as_object_mut().expect("summary object");
    obj.insert("command".into(), json!("consensus"));
    obj.insert("nodes".into(), json!(cfg.nodes));
    obj.insert("k".into(), json!(cfg.k));
    obj.insert("strategy".into(), json!(cfg.creator_strategy.name()));
    obj.insert("predicted_detection".into(), json!(predicted));
    rep.emit("summary", fields)?;
    Ok(format!(
        "{} trials, {} admitted, detection {}",
        summary.trials,
        summary.admitted,
        summary
            .detection
            .value
            .map_or("n/a".to_string(), |d| format!("{d:.6}"))
    ))
}
