//! Classical post-processing: sifting, error estimation, CASCADE,
//! secure fraction and privacy amplification.

mod amplify;
mod cascade;
mod qber;
mod security;
mod sift;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::par::Execution;
use crate::scenario::Scenario;
use crate::simcore::{seed_for, SimRun};

pub use amplify::{privacy_amplification, privacy_amplification_with, AmplificationStatus, FinalKey, ToeplitzHash};
pub use cascade::{
    cascade_reconcile, permutation, serve_parities, CascadeOutcome, CascadeParams, CascadePreset, Flow, ParityOracle,
    ParityQuery, ParityResponder, StreamOracle, Transcript, TranscriptEntry, WireRequest, WireResponse, MAX_ERROR_RATE,
    MIN_KEY_LEN,
};
pub use qber::{clopper_pearson, estimate_qber, QberEstimate};
pub use security::{
    binary_entropy, collision_probability, secure_fraction, secure_rate, CollisionProbability, SecureFraction,
    SecurityParams, COLLISION_VALIDITY_LIMIT,
};
pub use sift::{announce, reconstruct, sift, Announcement, SiftedKey, Sifting};

/// Error rate over one stretch of packets, from the full sifted key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QberWindow {
    pub first_packet: u64,
    pub last_packet: u64,
    pub bits: usize,
    pub errors: usize,
    pub qber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyReport {
    pub leaf: usize,
    /// counts/s from the simulation, all slots of this leaf's window
    pub raw_count_rate: f64,
    /// counts/s used for the final rate
    pub raw_rate_used: f64,
    pub raw_rate_pinned: bool,
    pub sifted_length: usize,
    pub qber_sample: Option<QberEstimate>,
    pub qber_timeline: Vec<QberWindow>,
    /// Bits left after the sample was disclosed.
    pub reconciled_length: usize,
    pub leaked_bits: usize,
    /// Bits flipped by reconciliation over the reconciled length.
    pub qber: f64,
    /// leaked / (n·h(qber))
    pub reconciliation_efficiency: Option<f64>,
    pub residual_errors: usize,
    pub mu: f64,
    pub transmissivity: f64,
    pub ec_efficiency: f64,
    pub secure_fraction: f64,
    pub collision_saturated: bool,
    pub final_key_length: usize,
    /// bits/s
    pub final_rate: f64,
    pub amplification: Option<AmplificationStatus>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Runs the classical chain for every leaf of a finished simulation.
pub fn distill(scenario: &Scenario, run: &SimRun, execution: Execution) -> Result<Vec<KeyReport>> {
    scenario.users.iter().map(|ch| distill_leaf(scenario, run, ch.bob.leaf, execution)).collect()
}

pub fn distill_leaf(scenario: &Scenario, run: &SimRun, leaf: usize, execution: Execution) -> Result<KeyReport> {
    let pp = &scenario.config.postproc;
    let ch = scenario.user_by_leaf(leaf).ok_or(crate::Error::Lookup { kind: "leaf", id: leaf })?;
    let ledger = run.ledger(leaf).ok_or(crate::Error::Lookup { kind: "leaf", id: leaf })?;
    let seed = run.report.meta.seed;
    let duration = run.report.meta.duration_s;
    let leaf_records = run.report.records.iter().filter(|r| r.user == Some(leaf)).count();
    let raw_count_rate = if duration > 0.0 { leaf_records as f64 / duration } else { 0.0 };
    let (raw_rate_used, raw_rate_pinned) = match pp.raw_rate {
        Some(f) => (f.0, true),
        None => (raw_count_rate, false),
    };

    let sifting = sift(&run.report.records, ledger)?;
    let key = sifting.key;
    let qber_timeline = timeline(&key, pp.qber_window_packets.max(1));
    let mut report = KeyReport {
        leaf,
        raw_count_rate,
        raw_rate_used,
        raw_rate_pinned,
        sifted_length: key.len(),
        qber_sample: None,
        qber_timeline,
        reconciled_length: 0,
        leaked_bits: 0,
        qber: 0.0,
        reconciliation_efficiency: None,
        residual_errors: 0,
        mu: ch.bob.mu_target,
        transmissivity: ch.transmissivity,
        ec_efficiency: pp.ec_efficiency,
        secure_fraction: 0.0,
        collision_saturated: false,
        final_key_length: 0,
        final_rate: 0.0,
        amplification: None,
        notes: Vec::new(),
    };

    let (estimate, rest) = match estimate_qber(key, pp.qber_sample_fraction, seed_for(seed, &[STREAM_SAMPLE, leaf as u64])) {
        Ok(v) => v,
        Err(e) => {
            report.notes.push(format!("no key: {e}"));
            return Ok(report);
        }
    };
    report.qber_sample = Some(estimate);
    report.reconciled_length = rest.len();
    if rest.len() < MIN_KEY_LEN {
        report.notes.push(format!("only {} bits left after sampling; nothing to reconcile", rest.len()));
        return Ok(report);
    }
    if estimate.estimate > MAX_ERROR_RATE {
        report.notes.push(format!("estimated error rate {:.4} is too high to reconcile", estimate.estimate));
        return Ok(report);
    }

    let params = pp.cascade.params(seed_for(seed, &[STREAM_CASCADE, leaf as u64]));
    let mut bob = ParityResponder::new(rest.bob.clone(), params.seed);
    let outcome = cascade_reconcile(&rest.alice, &mut bob, estimate.estimate, &params)?;
    let n = rest.len();
    report.leaked_bits = outcome.leaked_bits;
    report.residual_errors = outcome.key.iter().zip(&rest.bob).filter(|(a, b)| a != b).count();
    report.qber = outcome.corrections as f64 / n as f64;
    let shannon = n as f64 * binary_entropy(report.qber)?;
    report.reconciliation_efficiency = (shannon > 0.0).then(|| outcome.leaked_bits as f64 / shannon);
    if report.residual_errors > 0 {
        report.notes.push(format!("{} errors survived reconciliation", report.residual_errors));
    }

    let fraction = secure_fraction(&SecurityParams {
        mu: ch.bob.mu_target,
        transmissivity: ch.transmissivity,
        qber: report.qber.min(0.5),
        ec_efficiency: pp.ec_efficiency,
    })?;
    report.secure_fraction = fraction.value;
    report.collision_saturated = fraction.collision.saturated;
    report.final_rate = secure_rate(raw_rate_used, fraction.value)?;
    let final_key = privacy_amplification_with(
        &outcome.key,
        fraction.value,
        seed_for(seed, &[STREAM_HASH, leaf as u64]),
        execution,
    )?;
    report.final_key_length = final_key.bits.len();
    report.amplification = Some(final_key.status);
    Ok(report)
}

const STREAM_SAMPLE: u64 = 0x7361_6d70;
const STREAM_CASCADE: u64 = 0x6361_7363;
const STREAM_HASH: u64 = 0x6861_7368;

fn timeline(key: &SiftedKey, window_packets: u64) -> Vec<QberWindow> {
    let mut out: Vec<QberWindow> = Vec::new();
    for (i, pos) in key.positions.iter().enumerate() {
        let w = pos.packet / window_packets;
        let error = key.alice[i] != key.bob[i];
        match out.last_mut() {
            Some(last) if last.first_packet == w * window_packets => {
                last.bits += 1;
                last.errors += usize::from(error);
            }
            _ => out.push(QberWindow {
                first_packet: w * window_packets,
                last_packet: (w + 1) * window_packets - 1,
                bits: 1,
                errors: usize::from(error),
                qber: 0.0,
            }),
        }
    }
    for w in &mut out {
        w.qber = w.errors as f64 / w.bits as f64;
    }
    out
}
