//! Passive optical tree network: topology, per-leaf loss and delay, and the
//! stray-light profile seen at the central receiver.
//!
//! Edges are heap-indexed. Edge 0 is the feeder from the central
//! circulator to the first splitter; the two children of edge `e` are
//! `2e + 1` and `2e + 2`. A tree with `N` levels has `2^(N+1) - 1` edges,
//! and the `2^N` deepest ones terminate at leaves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::optics::OpticalPulsePacket;
use crate::units::{db_to_transmission, SPEED_OF_LIGHT};

/// Loss of an ideal 50:50 splitter, `10·log10(2)` dB.
pub const IDEAL_SPLIT_DB: f64 = 3.010_299_956_639_812;

pub const MAX_LEVELS: u32 = 20;

/// Group index of standard single-mode fiber near 1550 nm.
pub const DEFAULT_GROUP_INDEX: f64 = 1.468;

/// Rayleigh integration steps per time bin of round-trip delay.
const RAYLEIGH_STEPS_PER_BIN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpan {
    /// m
    pub length: f64,
    /// dB per metre
    pub attenuation: f64,
    pub group_index: f64,
    /// Fraction of forward power scattered back and guided to the source, per metre.
    pub rayleigh_return: f64,
    /// Return loss of the connector at each end; `None` for spliced ends.
    pub connector_return_loss_db: Option<f64>,
}

impl Default for FiberSpan {
    fn default() -> Self {
        Self {
            length: 0.0,
            attenuation: 0.2e-3,
            group_index: DEFAULT_GROUP_INDEX,
            rayleigh_return: 1e-7,
            connector_return_loss_db: Some(55.0),
        }
    }
}

impl FiberSpan {
    pub fn with_length(self, length: f64) -> Self {
        Self { length, ..self }
    }

    /// A spliced span: no connector echoes.
    pub fn spliced(self) -> Self {
        Self { connector_return_loss_db: None, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length >= 0.0) || !self.length.is_finite() {
            return Err(domain("span length must be >= 0"));
        }
        if !(self.attenuation >= 0.0) {
            return Err(domain("span attenuation must be >= 0"));
        }
        if !(self.group_index >= 1.0) {
            return Err(domain("group index must be >= 1"));
        }
        if !(0.0..=1e-4).contains(&self.rayleigh_return) {
            return Err(domain("rayleigh return must lie in [0, 1e-4] per metre"));
        }
        if let Some(rl) = self.connector_return_loss_db {
            if !(rl >= 0.0) {
                return Err(domain("connector return loss must be >= 0 dB"));
            }
        }
        Ok(())
    }

    pub fn loss_db(&self) -> f64 {
        self.length * self.attenuation
    }

    pub fn delay(&self) -> f64 {
        self.length * self.group_index / SPEED_OF_LIGHT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirculatorModel {
    pub insertion_loss_db: f64,
    /// Suppression of direct port-1 to port-3 leakage.
    pub directivity_db: f64,
}

impl CirculatorModel {
    /// Lossless with perfect isolation.
    pub const IDEAL: CirculatorModel = CirculatorModel { insertion_loss_db: 0.0, directivity_db: f64::INFINITY };

    pub fn validate(&self) -> Result<()> {
        if !(self.insertion_loss_db >= 0.0) || !(self.directivity_db >= 0.0) {
            return Err(domain("circulator insertion loss and directivity must be >= 0 dB"));
        }
        Ok(())
    }

    pub fn leakage(&self) -> f64 {
        db_to_transmission(self.directivity_db)
    }
}

impl Default for CirculatorModel {
    fn default() -> Self {
        Self { insertion_loss_db: 0.6, directivity_db: 70.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Downstream,
    Upstream,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeTopology {
    levels: u32,
    splitter_excess_db: f64,
    feeder: FiberSpan,
    branch: FiberSpan,
    overrides: BTreeMap<usize, FiberSpan>,
    circulator: CirculatorModel,
}

/// Balanced binary tree whose feeder carries `defaults`; branch edges are
/// zero-length spliced spans with the same fiber properties until overridden.
pub fn build_tree(levels: u32, defaults: FiberSpan, splitter_excess_db: f64) -> Result<TreeTopology> {
    if levels > MAX_LEVELS {
        return Err(Error::SizeLimit { levels, limit: MAX_LEVELS });
    }
    if !(splitter_excess_db >= 0.0) {
        return Err(domain("splitter excess loss must be >= 0 dB"));
    }
    defaults.validate()?;
    Ok(TreeTopology {
        levels,
        splitter_excess_db,
        feeder: defaults,
        branch: defaults.with_length(0.0).spliced(),
        overrides: BTreeMap::new(),
        circulator: CirculatorModel::IDEAL,
    })
}

impl TreeTopology {
    pub fn with_circulator(mut self, circulator: CirculatorModel) -> Result<Self> {
        circulator.validate()?;
        self.circulator = circulator;
        Ok(self)
    }

    /// Default span for every branch edge without an explicit override.
    pub fn with_branch_span(mut self, span: FiberSpan) -> Result<Self> {
        span.validate()?;
        self.branch = span;
        Ok(self)
    }

    pub fn with_span(mut self, edge: usize, span: FiberSpan) -> Result<Self> {
        if edge >= self.edge_count() {
            return Err(Error::Lookup { kind: "edge", id: edge });
        }
        span.validate()?;
        if edge == 0 {
            self.feeder = span;
        } else {
            self.overrides.insert(edge, span);
        }
        Ok(self)
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn leaf_count(&self) -> usize {
        1 << self.levels
    }

    pub fn splitter_count(&self) -> usize {
        (1 << self.levels) - 1
    }

    pub fn edge_count(&self) -> usize {
        (1 << (self.levels + 1)) - 1
    }

    pub fn circulator(&self) -> &CirculatorModel {
        &self.circulator
    }

    /// Loss of one splitter traversal (ideal split plus excess).
    pub fn splitter_loss_db(&self) -> f64 {
        IDEAL_SPLIT_DB + self.splitter_excess_db
    }

    pub fn span(&self, edge: usize) -> &FiberSpan {
        if edge == 0 {
            &self.feeder
        } else {
            self.overrides.get(&edge).unwrap_or(&self.branch)
        }
    }

    /// Number of splitters between the central station and the start of `edge`.
    pub fn edge_depth(edge: usize) -> u32 {
        (usize::BITS - 1) - (edge + 1).leading_zeros()
    }

    /// Edges from the root to `leaf`, feeder first.
    pub fn leaf_path(&self, leaf: usize) -> Result<Vec<usize>> {
        if leaf >= self.leaf_count() {
            return Err(Error::Lookup { kind: "leaf", id: leaf });
        }
        let mut e = leaf + self.splitter_count();
        let mut path = vec![e];
        while e > 0 {
            e = (e - 1) / 2;
            path.push(e);
        }
        path.reverse();
        Ok(path)
    }

    pub fn path_loss(&self, leaf: usize) -> Result<f64> {
        self.path_loss_directional(leaf, Direction::Upstream)
    }

    /// One-way loss between the central circulator input and the leaf unit,
    /// including one hop through each circulator.
    pub fn path_loss_directional(&self, leaf: usize, direction: Direction) -> Result<f64> {
        let mut path = self.leaf_path(leaf)?;
        if direction == Direction::Upstream {
            path.reverse();
        }
        let fiber: f64 = path.iter().map(|&e| self.span(e).loss_db()).sum();
        Ok(fiber + self.levels as f64 * self.splitter_loss_db() + 2.0 * self.circulator.insertion_loss_db)
    }

    /// One-way fiber transit time to `leaf`.
    pub fn propagation_delay(&self, leaf: usize) -> Result<f64> {
        Ok(self.leaf_path(leaf)?.iter().map(|&e| self.span(e).delay()).sum())
    }

    /// Up-stream transmissivity from the leaf's attenuator output to the
    /// detector inputs; `extra_db` covers receiver-side losses.
    pub fn round_trip_transmissivity(&self, leaf: usize, extra_db: f64) -> Result<f64> {
        if !(extra_db >= 0.0) {
            return Err(domain("extra receiver loss must be >= 0 dB"));
        }
        Ok(db_to_transmission(self.path_loss(leaf)? + extra_db))
    }

    /// Loss (network only, no circulators) and delay from the central
    /// circulator to the start of `edge`.
    fn edge_origin(&self, edge: usize) -> (f64, f64) {
        let mut loss = Self::edge_depth(edge) as f64 * self.splitter_loss_db();
        let mut delay = 0.0;
        let mut e = edge;
        while e > 0 {
            e = (e - 1) / 2;
            loss += self.span(e).loss_db();
            delay += self.span(e).delay();
        }
        (loss, delay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrayLabel {
    AliceCirculator,
    ConnectorReflections,
    Rayleigh,
    BobEntrance,
}

impl StrayLabel {
    pub const ALL: [StrayLabel; 4] =
        [StrayLabel::AliceCirculator, StrayLabel::ConnectorReflections, StrayLabel::Rayleigh, StrayLabel::BobEntrance];

    pub fn name(self) -> &'static str {
        match self {
            StrayLabel::AliceCirculator => "alice_circulator",
            StrayLabel::ConnectorReflections => "connector_reflections",
            StrayLabel::Rayleigh => "rayleigh",
            StrayLabel::BobEntrance => "bob_entrance",
        }
    }
}

/// Mean stray photons per time bin at the receiver input, one period after
/// a packet leaves the central station.
#[derive(Debug, Clone, PartialEq)]
pub struct StrayProfile {
    pub bin_width: f64,
    pub alice_circulator: Vec<f64>,
    pub connector_reflections: Vec<f64>,
    pub rayleigh: Vec<f64>,
    pub bob_entrance: Vec<f64>,
}

impl StrayProfile {
    fn zeros(bins: usize, bin_width: f64) -> Self {
        Self {
            bin_width,
            alice_circulator: vec![0.0; bins],
            connector_reflections: vec![0.0; bins],
            rayleigh: vec![0.0; bins],
            bob_entrance: vec![0.0; bins],
        }
    }

    pub fn len(&self) -> usize {
        self.alice_circulator.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn component(&self, label: StrayLabel) -> &[f64] {
        match label {
            StrayLabel::AliceCirculator => &self.alice_circulator,
            StrayLabel::ConnectorReflections => &self.connector_reflections,
            StrayLabel::Rayleigh => &self.rayleigh,
            StrayLabel::BobEntrance => &self.bob_entrance,
        }
    }

    fn component_mut(&mut self, label: StrayLabel) -> &mut Vec<f64> {
        match label {
            StrayLabel::AliceCirculator => &mut self.alice_circulator,
            StrayLabel::ConnectorReflections => &mut self.connector_reflections,
            StrayLabel::Rayleigh => &mut self.rayleigh,
            StrayLabel::BobEntrance => &mut self.bob_entrance,
        }
    }

    pub fn total(&self, bin: usize) -> f64 {
        StrayLabel::ALL.iter().map(|&l| self.component(l)[bin]).sum()
    }

    pub fn totals(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.total(k)).collect()
    }

    pub fn dominant(&self, bin: usize) -> StrayLabel {
        StrayLabel::ALL
            .into_iter()
            .max_by(|a, b| self.component(*a)[bin].total_cmp(&self.component(*b)[bin]))
            .expect("four labels")
    }

    /// Mean stray photons arriving in `[t0, t1)`, assuming flux is uniform within a bin.
    pub fn flux_between(&self, t0: f64, t1: f64) -> f64 {
        if t1 <= t0 || self.is_empty() {
            return 0.0;
        }
        let first = (t0 / self.bin_width).floor().max(0.0) as usize;
        let last = ((t1 / self.bin_width).ceil() as usize).min(self.len());
        (first..last)
            .map(|k| {
                let lo = (k as f64 * self.bin_width).max(t0);
                let hi = ((k + 1) as f64 * self.bin_width).min(t1);
                self.total(k) * ((hi - lo) / self.bin_width).max(0.0)
            })
            .sum()
    }

    fn deposit(&mut self, label: StrayLabel, delay: f64, weight: f64, packet: &[f64]) {
        if weight == 0.0 {
            return;
        }
        let shift = delay / self.bin_width;
        let base = shift.floor();
        let frac = shift - base;
        let bins = self.len();
        let out = self.component_mut(label);
        for (s, &mu) in packet.iter().enumerate() {
            let k = base as usize + s;
            if k < bins {
                out[k] += mu * weight * (1.0 - frac);
            }
            if frac > 0.0 && k + 1 < bins {
                out[k + 1] += mu * weight * frac;
            }
        }
    }
}

/// Stray light returned to the central receiver by the down-stream packet.
///
/// `packet` is the launched pulse train at the central circulator input
/// and `background_mu` the out-of-packet leakage per slot, which every
/// echo mechanism returns as a constant floor. Light inside the leaf units
/// beyond their entrance circulators never reaches the receiver.
pub fn stray_profile(
    topology: &TreeTopology,
    leaves: &[usize],
    packet: &OpticalPulsePacket,
    background_mu: f64,
    horizon: f64,
) -> Result<StrayProfile> {
    if !(horizon > 0.0) {
        return Err(domain("stray profile horizon must be positive"));
    }
    if !(background_mu >= 0.0) {
        return Err(domain("background photon number must be >= 0"));
    }
    for &leaf in leaves {
        topology.leaf_path(leaf)?;
    }
    let bin = packet.slot_period();
    let bins = (horizon / bin).ceil() as usize;
    let mu = packet.mean_photons();
    let mut profile = StrayProfile::zeros(bins, bin);
    let mut floor = [0.0f64; 4];

    let circ = topology.circulator();
    let leak = circ.leakage();
    profile.deposit(StrayLabel::AliceCirculator, 0.0, leak, mu);
    floor[0] += leak;

    // launched through port 1->2, echoes return through 2->3
    let hop2 = db_to_transmission(2.0 * circ.insertion_loss_db);
    for edge in 0..topology.edge_count() {
        let span = topology.span(edge);
        if span.length == 0.0 && span.connector_return_loss_db.is_none() {
            continue;
        }
        let (loss0, delay0) = topology.edge_origin(edge);
        if let Some(rl) = span.connector_return_loss_db {
            let r = db_to_transmission(rl);
            for (loss, delay) in [(loss0, delay0), (loss0 + span.loss_db(), delay0 + span.delay())] {
                let w = hop2 * db_to_transmission(2.0 * loss) * r;
                profile.deposit(StrayLabel::ConnectorReflections, 2.0 * delay, w, mu);
                floor[1] += w;
            }
        }
        if span.length > 0.0 && span.rayleigh_return > 0.0 {
            let round_trip = 2.0 * span.delay();
            let steps = ((round_trip / bin) * RAYLEIGH_STEPS_PER_BIN).ceil().max(1.0) as usize;
            let dz = span.length / steps as f64;
            for i in 0..steps {
                let z = (i as f64 + 0.5) * dz;
                let loss = loss0 + z * span.attenuation;
                let delay = delay0 + z * span.group_index / SPEED_OF_LIGHT;
                let w = hop2 * db_to_transmission(2.0 * loss) * span.rayleigh_return * dz;
                profile.deposit(StrayLabel::Rayleigh, 2.0 * delay, w, mu);
                floor[2] += w;
            }
        }
    }

    for &leaf in leaves {
        let one_way = topology.path_loss(leaf)? - 2.0 * circ.insertion_loss_db;
        let w = hop2 * db_to_transmission(2.0 * one_way) * leak;
        profile.deposit(StrayLabel::BobEntrance, 2.0 * topology.propagation_delay(leaf)?, w, mu);
        floor[3] += w;
    }

    if background_mu > 0.0 {
        for (label, f) in StrayLabel::ALL.iter().zip(floor) {
            profile.component_mut(*label).iter_mut().for_each(|x| *x += background_mu * f);
        }
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bare(length: f64) -> FiberSpan {
        FiberSpan { length, attenuation: 0.2e-3, group_index: 1.468, rayleigh_return: 0.0, connector_return_loss_db: None }
    }

    #[test]
    fn tree_sizes() {
        for (n, leaves, splitters) in [(0, 1, 0), (2, 4, 3), (3, 8, 7)] {
            let t = build_tree(n, bare(0.0), 0.0).unwrap();
            assert_eq!(t.leaf_count(), leaves);
            assert_eq!(t.splitter_count(), splitters);
        }
        assert!(matches!(build_tree(21, bare(0.0), 0.0), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn leaf_paths_are_unique_and_rooted() {
        let t = build_tree(3, bare(0.0), 0.0).unwrap();
        let mut ends = std::collections::BTreeSet::new();
        for leaf in 0..8 {
            let p = t.leaf_path(leaf).unwrap();
            assert_eq!(p[0], 0);
            assert_eq!(p.len(), 4);
            for w in p.windows(2) {
                assert_eq!((w[1] - 1) / 2, w[0]);
            }
            assert!(ends.insert(*p.last().unwrap()));
        }
        assert!(matches!(t.leaf_path(8), Err(Error::Lookup { kind: "leaf", id: 8 })));
    }

    #[test]
    fn path_loss_examples() {
        let t = build_tree(2, bare(0.0), 0.0).unwrap();
        assert_relative_eq!(t.path_loss(0).unwrap(), 6.0206, epsilon = 1e-4);
        let t = build_tree(0, bare(1000.0), 0.0).unwrap();
        assert_relative_eq!(t.path_loss(0).unwrap(), 0.2, epsilon = 1e-12);
        let t = build_tree(2, bare(100.0), 0.3)
            .unwrap()
            .with_circulator(CirculatorModel { insertion_loss_db: 0.6, directivity_db: 70.0 })
            .unwrap();
        assert_relative_eq!(t.path_loss(3).unwrap(), 7.8406, epsilon = 1e-4);
        assert!(t.path_loss(4).is_err());
    }

    #[test]
    fn delays() {
        let t = build_tree(2, bare(100.0), 0.0).unwrap();
        assert_relative_eq!(t.propagation_delay(1).unwrap(), 489.66e-9, epsilon = 0.1e-9);
        assert_eq!(build_tree(1, bare(0.0), 0.0).unwrap().propagation_delay(0).unwrap(), 0.0);
        let t = build_tree(0, bare(300.0), 0.0).unwrap();
        assert_relative_eq!(t.propagation_delay(0).unwrap(), 1468.97e-9, epsilon = 0.1e-9);
    }

    #[test]
    fn transmissivity() {
        let t = build_tree(2, bare(0.0), 0.0).unwrap();
        let extra = 6.99 - t.path_loss(0).unwrap();
        assert_relative_eq!(t.round_trip_transmissivity(0, extra).unwrap(), 0.2, epsilon = 1e-3);
        let flat = build_tree(0, bare(0.0), 0.0).unwrap();
        assert_eq!(flat.round_trip_transmissivity(0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(flat.round_trip_transmissivity(0, 70.0).unwrap(), 1e-7, max_relative = 1e-12);
        assert!(flat.round_trip_transmissivity(0, -1.0).is_err());
    }

    #[test]
    fn unbalanced_override() {
        let t = build_tree(1, bare(100.0), 0.0).unwrap().with_span(2, bare(50.0)).unwrap();
        assert!(t.propagation_delay(1).unwrap() > t.propagation_delay(0).unwrap());
        assert!(t.with_span(3, bare(1.0)).is_err());
    }

    #[test]
    fn circulator_echo_level() {
        let t = build_tree(0, bare(0.0), 0.0).unwrap().with_circulator(CirculatorModel::default()).unwrap();
        let p = OpticalPulsePacket::uniform(4, 1e-9, 1.8e6).unwrap();
        let prof = stray_profile(&t, &[], &p, 0.0, 100e-9).unwrap();
        assert_relative_eq!(prof.alice_circulator[0], 0.18, max_relative = 1e-9);
    }

    #[test]
    fn zero_length_network_only_echoes_at_origin() {
        let t = build_tree(2, bare(0.0), 0.0).unwrap().with_circulator(CirculatorModel::default()).unwrap();
        let p = OpticalPulsePacket::uniform(4, 1e-9, 1.8e6).unwrap();
        let prof = stray_profile(&t, &[0], &p, 0.0, 50e-9).unwrap();
        assert!(prof.rayleigh.iter().all(|&x| x == 0.0));
        assert!(prof.connector_reflections.iter().all(|&x| x == 0.0));
        for k in 0..prof.len() {
            assert_eq!(prof.total(k) > 0.0, k < 4, "bin {k}");
        }
    }

    #[test]
    fn pedestal_spans_round_trip_plus_packet() {
        let span = FiberSpan { rayleigh_return: 1e-7, ..bare(100.0) };
        let t = build_tree(0, span, 0.0).unwrap();
        let p = OpticalPulsePacket::uniform(16, 1e-9, 1.8e6).unwrap();
        let prof = stray_profile(&t, &[], &p, 0.0, 2000e-9).unwrap();
        let last = prof.rayleigh.iter().rposition(|&x| x > 0.0).unwrap() as f64 + 1.0;
        let expected = (2.0 * t.propagation_delay(0).unwrap() + 16e-9) / 1e-9;
        assert!((last - expected).abs() <= 1.0, "{last} vs {expected}");
    }

    #[test]
    fn flux_between_integrates_partial_bins() {
        let mut prof = StrayProfile::zeros(4, 1.0);
        prof.rayleigh = vec![1.0, 2.0, 3.0, 4.0];
        assert_relative_eq!(prof.flux_between(0.5, 2.5), 0.5 + 2.0 + 1.5);
        assert_eq!(prof.flux_between(2.0, 2.0), 0.0);
        assert_eq!(prof.dominant(2), StrayLabel::Rayleigh);
    }

    proptest! {
        #[test]
        fn adding_a_level_costs_at_least_a_split(levels in 0u32..8, excess in 0.0f64..1.0, len in 0.0f64..5000.0) {
            let a = build_tree(levels, bare(len), excess).unwrap();
            let b = build_tree(levels + 1, bare(len), excess).unwrap();
            for leaf in 0..a.leaf_count() {
                prop_assert!(b.path_loss(2 * leaf).unwrap() - a.path_loss(leaf).unwrap() >= IDEAL_SPLIT_DB - 1e-12);
            }
        }

        #[test]
        fn passive_paths_are_reciprocal(levels in 0u32..6, lens in proptest::collection::vec(0.0f64..2000.0, 127)) {
            let mut t = build_tree(levels, bare(lens[0]), 0.3).unwrap();
            for (e, &len) in lens.iter().enumerate().take(t.edge_count()).skip(1) {
                t = t.with_span(e, bare(len)).unwrap();
            }
            for leaf in 0..t.leaf_count() {
                let d = t.path_loss_directional(leaf, Direction::Downstream).unwrap();
                let u = t.path_loss_directional(leaf, Direction::Upstream).unwrap();
                prop_assert!((d - u).abs() < 1e-12);
            }
        }

        #[test]
        fn delay_scales_with_span_length(len in 0.0f64..10_000.0, k in 0.0f64..4.0) {
            let a = build_tree(1, bare(len), 0.0).unwrap().propagation_delay(1).unwrap();
            let b = build_tree(1, bare(len * k), 0.0).unwrap().propagation_delay(1).unwrap();
            prop_assert!(a >= 0.0);
            prop_assert!((b - k * a).abs() <= 1e-12 * b.max(1e-9));
        }

        #[test]
        fn stray_is_linear_in_intensity(mu in 1.0f64..1e7, bg in 0.0f64..1.0) {
            let span = FiberSpan { length: 80.0, ..FiberSpan::default() };
            let t = build_tree(2, span, 0.3).unwrap().with_circulator(CirculatorModel::default()).unwrap();
            let p1 = OpticalPulsePacket::uniform(8, 1e-9, mu).unwrap();
            let p2 = OpticalPulsePacket::uniform(8, 1e-9, 2.0 * mu).unwrap();
            let a = stray_profile(&t, &[0, 3], &p1, bg, 1200e-9).unwrap();
            let b = stray_profile(&t, &[0, 3], &p2, 2.0 * bg, 1200e-9).unwrap();
            for k in 0..a.len() {
                prop_assert!((b.total(k) - 2.0 * a.total(k)).abs() <= 1e-9 * b.total(k).max(1e-300));
                prop_assert!(a.total(k) >= 0.0);
            }
        }
    }
}
