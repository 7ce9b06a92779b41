//! Seeded discrete-event simulation of the central station and leaf units.
//!
//! Packets are processed in fixed chunks. Within a chunk an event queue
//! drives the emit / arrive / depart / return cycle of every leaf unit and
//! yields the receiver gates in time order; photon detection inside each gate
//! is then sampled from per-(leaf, chunk) random streams. Chunks never
//! interact, because every packet finishes within its own period, so they
//! can run in parallel. Dead time and double clicks are resolved afterwards
//! in one sequential pass over the merged detections.

mod bits;
mod detect;
mod engine;
mod rates;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::par::Execution;
use crate::scenario::Scenario;
use crate::schedule::PacketSchedule;

pub use engine::EventQueue;
pub use bits::{bit_at, words_per_packet, BitSource, BitStream};
pub use rates::{expected_raw_rate, slot_click_model, RateFactors, RateModel, SlotClickModel, UserRate};

/// Packets per unit of parallel work. Fixed so results do not depend on the
/// number of threads.
pub const CHUNK_PACKETS: u64 = 4096;

/// A leaf unit: clock tap, storage delay, phase modulator and attenuator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BobUnit {
    pub leaf: usize,
    /// s
    pub storage_time: f64,
    /// Mean photons per pulse leaving the unit.
    pub mu_target: f64,
    pub bits: BitSource,
    /// Fraction of the arriving power split off for clock recovery.
    pub clock_tap_fraction: f64,
}

impl BobUnit {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu_target > 0.0) {
            return Err(domain(format!("leaf {}: mu_target must be positive", self.leaf)));
        }
        if !(self.clock_tap_fraction > 0.0 && self.clock_tap_fraction < 1.0) {
            return Err(domain(format!("leaf {}: clock tap fraction must lie in (0, 1)", self.leaf)));
        }
        if !(self.storage_time >= 0.0) {
            return Err(domain(format!("leaf {}: storage time must be >= 0", self.leaf)));
        }
        self.bits.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    pub efficiency: f64,
    /// Dark click probability per gate.
    pub dark_prob: f64,
    /// s
    pub gate_width: f64,
    /// s
    pub dead_time: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self { efficiency: 0.10, dark_prob: 1e-5, gate_width: 1e-9, dead_time: 10e-6 }
    }
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) || !(0.0..=1.0).contains(&self.dark_prob) {
            return Err(domain("detector efficiency and dark probability must lie in [0, 1]"));
        }
        if !(self.gate_width > 0.0) || !(self.dead_time >= 0.0) {
            return Err(domain("gate width must be positive and dead time >= 0"));
        }
        Ok(())
    }

    /// Click probability for a Poisson input of mean `mu` photons.
    #[inline]
    pub fn click_probability(&self, mu: f64) -> f64 {
        1.0 - (1.0 - self.dark_prob) * (-self.efficiency * mu).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Detector {
    A,
    B,
}

impl Detector {
    pub fn index(self) -> usize {
        match self {
            Detector::A => 0,
            Detector::B => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Detector::A
        } else {
            Detector::B
        }
    }

    /// The key bit this detector announces to its owner.
    pub fn bit(self) -> bool {
        self == Detector::B
    }
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Detector::A => "A",
            Detector::B => "B",
        })
    }
}

impl std::str::FromStr for Detector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" => Ok(Detector::A),
            "B" => Ok(Detector::B),
            _ => Err(Error::Parse(format!("detector must be A or B, got `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub packet: u64,
    pub slot: u32,
    pub detector: Detector,
    /// Arrival time in picoseconds from the first emission.
    pub time_ps: u64,
    /// Leaf whose window contains the arrival, if any.
    pub user: Option<usize>,
    /// Both detectors clicked in this slot.
    pub coincidence: bool,
}

impl DetectionRecord {
    /// s
    pub fn arrival_time(&self) -> f64 {
        self.time_ps as f64 * 1e-12
    }
}

/// Flags records whose (packet, slot, user) saw clicks on both detectors.
/// Expects records sorted by time.
pub fn mark_coincidences(records: &mut [DetectionRecord]) {
    records.iter_mut().for_each(|r| r.coincidence = false);
    for i in 1..records.len() {
        let (a, b) = (records[i - 1], records[i]);
        if a.time_ps == b.time_ps && a.detector != b.detector && a.user == b.user {
            records[i - 1].coincidence = true;
            records[i].coincidence = true;
        }
    }
}

/// Receiver windows on an integer picosecond grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateTable {
    pub period_ps: u64,
    pub slot_ps: u64,
    pub slots: u32,
    /// `(leaf, window start)` in schedule order.
    pub windows: Vec<(usize, u64)>,
}

pub(crate) fn to_ps(t: f64) -> u64 {
    (t * 1e12).round() as u64
}

impl GateTable {
    pub fn from_schedule(schedule: &PacketSchedule) -> Self {
        Self {
            period_ps: to_ps(schedule.period),
            slot_ps: to_ps(schedule.slot_period),
            slots: schedule.slot_count() as u32,
            windows: schedule.users.iter().map(|u| (u.id, to_ps(u.signal.start))).collect(),
        }
    }

    pub fn open_time(&self, packet: u64, window: usize, slot: u32) -> u64 {
        packet * self.period_ps + self.windows[window].1 + u64::from(slot) * self.slot_ps
    }

    /// `(window index, slot)` containing `time_ps`, if any.
    pub fn attribute(&self, time_ps: u64) -> Option<(usize, u32)> {
        let phase = time_ps % self.period_ps;
        self.windows.iter().enumerate().find_map(|(i, &(_, start))| {
            let offset = phase.checked_sub(start)?;
            let slot = offset / self.slot_ps;
            (slot < u64::from(self.slots)).then_some((i, slot as u32))
        })
    }
}

/// Detection counts indexed by (user, slot, detector).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    /// Leaf ids in schedule order.
    pub users: Vec<usize>,
    pub slots: usize,
    counts: Vec<u64>,
    /// Records outside every window.
    pub unattributed: u64,
}

impl Histogram {
    pub fn zeros(users: Vec<usize>, slots: usize) -> Self {
        let counts = vec![0; users.len() * slots * 2];
        Self { users, slots, counts, unattributed: 0 }
    }

    fn offset(&self, user: usize, slot: usize, detector: Detector) -> usize {
        (user * self.slots + slot) * 2 + detector.index()
    }

    /// `user` is the position in [`Histogram::users`].
    pub fn count(&self, user: usize, slot: usize, detector: Detector) -> u64 {
        self.counts[self.offset(user, slot, detector)]
    }

    pub fn add(&mut self, user: usize, slot: usize, detector: Detector, n: u64) {
        let i = self.offset(user, slot, detector);
        self.counts[i] += n;
    }

    pub fn detector_total(&self, user: usize, detector: Detector) -> u64 {
        (0..self.slots).map(|s| self.count(user, s, detector)).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.unattributed
    }
}

/// Bins records by the schedule windows that contain their arrival times.
pub fn histogram(records: &[DetectionRecord], schedule: &PacketSchedule) -> Histogram {
    let table = GateTable::from_schedule(schedule);
    let mut h = Histogram::zeros(table.windows.iter().map(|w| w.0).collect(), table.slots as usize);
    for r in records {
        match table.attribute(r.time_ps) {
            Some((user, slot)) => h.add(user, slot as usize, r.detector, 1),
            None => h.unattributed += 1,
        }
    }
    h
}

/// A leaf unit's record of the phase bits it applied, kept for packets
/// that produced at least one detection.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BobLedger {
    pub leaf: usize,
    slots: usize,
    packets: Vec<u64>,
    words: Vec<u64>,
}

impl BobLedger {
    pub fn new(leaf: usize, slots: usize) -> Self {
        Self { leaf, slots, packets: Vec::new(), words: Vec::new() }
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    /// Packets must arrive in increasing order; repeats are ignored.
    pub fn push_words(&mut self, packet: u64, words: &[u64]) -> Result<()> {
        if words.len() != words_per_packet(self.slots) {
            return Err(Error::Shape { expected: words_per_packet(self.slots), actual: words.len() });
        }
        match self.packets.last() {
            Some(&last) if last == packet => return Ok(()),
            Some(&last) if last > packet => return Err(domain("ledger packets must be pushed in order")),
            _ => {}
        }
        self.packets.push(packet);
        self.words.extend_from_slice(words);
        Ok(())
    }

    pub fn push_bits(&mut self, packet: u64, bits: &[bool]) -> Result<()> {
        if bits.len() != self.slots {
            return Err(Error::Shape { expected: self.slots, actual: bits.len() });
        }
        let mut words = vec![0u64; words_per_packet(self.slots)];
        for (i, b) in bits.iter().enumerate() {
            if *b {
                words[i / 64] |= 1 << (i % 64);
            }
        }
        self.push_words(packet, &words)
    }

    /// Packed bits of `packet`.
    pub fn packet_words(&self, packet: u64) -> Option<&[u64]> {
        let i = self.packets.binary_search(&packet).ok()?;
        let w = words_per_packet(self.slots);
        Some(&self.words[i * w..(i + 1) * w])
    }

    pub fn bit(&self, packet: u64, slot: usize) -> Option<bool> {
        (slot < self.slots).then(|| self.packet_words(packet).map(|w| bit_at(w, slot))).flatten()
    }

    pub fn packets(&self) -> &[u64] {
        &self.packets
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: u64,
    pub config_digest: String,
    pub packets: u64,
    pub slots_per_packet: usize,
    /// Leaf ids in schedule order.
    pub users: Vec<usize>,
    /// Gated slots simulated: packets × users × slots.
    pub slots_simulated: u64,
    pub period_ps: u64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Sorted by arrival time, then detector.
    pub records: Vec<DetectionRecord>,
    pub histogram: Histogram,
    /// counts/s over the whole run
    pub raw_count_rate: f64,
    pub meta: RunMeta,
}

/// A finished run: the central station's view plus each leaf's bit ledger.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub report: SimReport,
    pub ledgers: Vec<BobLedger>,
}

impl SimRun {
    pub fn ledger(&self, leaf: usize) -> Option<&BobLedger> {
        self.ledgers.iter().find(|l| l.leaf == leaf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    pub execution: Execution,
    /// Run even if the silence check failed.
    pub force: bool,
    /// Overrides the configured packet count.
    pub packets: Option<u64>,
}

pub fn run_scenario(scenario: &Scenario, seed: u64) -> Result<SimRun> {
    run_scenario_with(scenario, seed, &RunOptions::default())
}

pub fn run_scenario_with(scenario: &Scenario, seed: u64, options: &RunOptions) -> Result<SimRun> {
    if !scenario.silence.pass && !options.force {
        let v = &scenario.silence.violations[0];
        return Err(Error::Silence(format!(
            "{} stray-flux violation(s); first: leaf {} at {:.3} ns, {:.3e} photons/slot ({})",
            scenario.silence.violations.len(),
            v.user,
            v.time * 1e9,
            v.flux,
            v.dominant.name()
        )));
    }
    let packets = options.packets.unwrap_or(scenario.config.run.packets);
    let plan = engine::Plan::new(scenario, seed)?;
    let chunks = packets.div_ceil(CHUNK_PACKETS);
    let outputs = options.execution.map_range(chunks as usize, |c| {
        let first = c as u64 * CHUNK_PACKETS;
        let count = CHUNK_PACKETS.min(packets - first);
        detect::sample_chunk(&plan, c as u64, first, count)
    });

    let table = &plan.table;
    let dead_ps = to_ps(scenario.detector.dead_time);
    let mut last_click: [Option<u64>; 2] = [None, None];
    let mut records = Vec::new();
    let mut ledgers: Vec<BobLedger> =
        table.windows.iter().map(|&(leaf, _)| BobLedger::new(leaf, table.slots as usize)).collect();
    for out in outputs {
        let out = out?;
        let mut bits_by_gate: BTreeMap<(u64, usize), &[u64]> = BTreeMap::new();
        for g in &out.gates {
            bits_by_gate.insert((g.packet, g.window), &g.bits);
        }
        for c in &out.clicks {
            let d = c.detector.index();
            if let Some(last) = last_click[d] {
                if c.time_ps - last < dead_ps {
                    continue;
                }
            }
            last_click[d] = Some(c.time_ps);
            let leaf = table.windows[c.window].0;
            records.push(DetectionRecord {
                packet: c.packet,
                slot: c.slot,
                detector: c.detector,
                time_ps: c.time_ps,
                user: Some(leaf),
                coincidence: false,
            });
            let words = bits_by_gate[&(c.packet, c.window)];
            ledgers[c.window].push_words(c.packet, words)?;
        }
    }
    mark_coincidences(&mut records);

    let histogram = histogram(&records, &scenario.schedule);
    let duration_s = packets as f64 * table.period_ps as f64 * 1e-12;
    let raw_count_rate = if duration_s > 0.0 { records.len() as f64 / duration_s } else { 0.0 };
    let meta = RunMeta {
        seed,
        config_digest: scenario.digest.clone(),
        packets,
        slots_per_packet: table.slots as usize,
        users: table.windows.iter().map(|w| w.0).collect(),
        slots_simulated: packets * table.windows.len() as u64 * u64::from(table.slots),
        period_ps: table.period_ps,
        duration_s,
    };
    Ok(SimRun { report: SimReport { records, histogram, raw_count_rate, meta }, ledgers })
}

/// Mixes a master seed with stream labels into an independent seed.
pub fn seed_for(master: u64, labels: &[u64]) -> u64 {
    let mut x = master;
    for &l in labels {
        x = splitmix(x ^ splitmix(l));
    }
    splitmix(x)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(time_ps: u64, detector: Detector) -> DetectionRecord {
        DetectionRecord { packet: 0, slot: 0, detector, time_ps, user: Some(0), coincidence: false }
    }

    #[test]
    fn coincidences_need_both_detectors_in_one_slot() {
        let mut r = vec![rec(10, Detector::A), rec(10, Detector::B), rec(20, Detector::A), rec(30, Detector::B)];
        mark_coincidences(&mut r);
        assert_eq!(r.iter().map(|r| r.coincidence).collect::<Vec<_>>(), [true, true, false, false]);
    }

    #[test]
    fn ledger_lookup() {
        let mut l = BobLedger::new(3, 70);
        let mut bits = vec![false; 70];
        bits[0] = true;
        bits[69] = true;
        l.push_bits(5, &bits).unwrap();
        l.push_bits(5, &bits).unwrap();
        assert!(l.push_bits(4, &bits).is_err());
        assert_eq!(l.len(), 1);
        assert_eq!(l.bit(5, 0), Some(true));
        assert_eq!(l.bit(5, 1), Some(false));
        assert_eq!(l.bit(5, 69), Some(true));
        assert_eq!(l.bit(5, 70), None);
        assert_eq!(l.bit(6, 0), None);
    }

    #[test]
    fn gate_table_attribution() {
        let t = GateTable { period_ps: 10_000, slot_ps: 1000, slots: 3, windows: vec![(4, 2000), (9, 6000)] };
        assert_eq!(t.attribute(2000), Some((0, 0)));
        assert_eq!(t.attribute(4999), Some((0, 2)));
        assert_eq!(t.attribute(5000), None);
        assert_eq!(t.attribute(30_000 + 7500), Some((1, 1)));
        assert_eq!(t.attribute(1999), None);
        assert_eq!(t.open_time(3, 1, 2), 38_000);
    }

    #[test]
    fn seeds_are_label_sensitive() {
        assert_ne!(seed_for(1, &[0, 1]), seed_for(1, &[1, 0]));
        assert_ne!(seed_for(1, &[0]), seed_for(2, &[0]));
        assert_eq!(seed_for(7, &[3]), seed_for(7, &[3]));
    }
}
