//! Bernoulli sampling of clicks inside receiver gates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

use super::bits::bit_at;
use super::engine::{run_chunk, Gate, Plan};
use super::{seed_for, Detector};

const STREAM_CLICKS: u64 = 0x636c_6b73;

/// Above this per-trial probability, thinning wastes more than it saves.
const DIRECT_SAMPLING_ABOVE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Click {
    pub packet: u64,
    pub window: usize,
    pub slot: u32,
    pub detector: Detector,
    pub time_ps: u64,
}

#[derive(Debug, Default)]
pub struct ChunkOutput {
    /// Gates with at least one click.
    pub gates: Vec<Gate>,
    /// Sorted by time, then detector.
    pub clicks: Vec<Click>,
}

/// Simulates one chunk and samples its clicks.
///
/// Each gate is a run of `slots × 2` independent trials. For every leaf the
/// trials of all its gates in the chunk form one sequence; candidate trials
/// are drawn with the leaf's largest click probability by geometric skips and
/// kept with probability `p / p_max`, which gives every trial exactly its own
/// probability.
pub fn sample_chunk(plan: &Plan, chunk: u64, first: u64, count: u64) -> Result<ChunkOutput> {
    let gates = run_chunk(plan, first, count)?;
    let slots = plan.table.slots as usize;
    let trials_per_gate = (slots * 2) as u64;
    let mut clicks = Vec::new();
    let mut hit = vec![false; gates.len()];
    for (w, user) in plan.users.iter().enumerate() {
        let mine: Vec<usize> = (0..gates.len()).filter(|&g| gates[g].window == w).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed_for(plan.seed, &[STREAM_CLICKS, user.leaf as u64, chunk]));
        let p_max = user.model.max_click();
        if p_max <= 0.0 {
            continue;
        }
        let total = mine.len() as u64 * trials_per_gate;
        let mut accept = |trial: u64, rng: &mut ChaCha8Rng, thinned: bool| {
            let g = mine[(trial / trials_per_gate) as usize];
            let r = (trial % trials_per_gate) as usize;
            let (slot, detector) = (r / 2, r % 2);
            let gate = &gates[g];
            let flip = slot > 0 && (bit_at(&gate.bits, slot - 1) != bit_at(&gate.bits, slot));
            let p = user.model.p[slot][usize::from(flip)][detector];
            let keep = if thinned { rng.random::<f64>() * p_max < p } else { rng.random::<f64>() < p };
            if keep {
                hit[g] = true;
                clicks.push(Click {
                    packet: gate.packet,
                    window: w,
                    slot: slot as u32,
                    detector: Detector::from_index(detector),
                    time_ps: gate.open_ps + slot as u64 * plan.table.slot_ps,
                });
            }
        };
        if p_max > DIRECT_SAMPLING_ABOVE {
            for trial in 0..total {
                accept(trial, &mut rng, false);
            }
        } else {
            let log_q = (-p_max).ln_1p();
            let mut trial = 0u64;
            loop {
                // failures before the next candidate
                let u: f64 = 1.0 - rng.random::<f64>();
                let skip = (u.ln() / log_q).floor();
                if skip >= (total - trial) as f64 {
                    break;
                }
                trial += skip as u64;
                accept(trial, &mut rng, true);
                trial += 1;
                if trial >= total {
                    break;
                }
            }
        }
    }
    clicks.sort_by_key(|c| (c.time_ps, c.detector));
    let gates = gates.into_iter().zip(hit).filter_map(|(g, h)| h.then_some(g)).collect();
    Ok(ChunkOutput { gates, clicks })
}
