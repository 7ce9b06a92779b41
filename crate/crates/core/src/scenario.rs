//! Scenario files: parsing, defaults, shipped presets and resolution into
//! the physical model used by the simulator.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::{build_tree, stray_profile, CirculatorModel, Direction, FiberSpan, StrayProfile, TreeTopology};
use crate::optics::{coherence_time_from_linewidth, voa_setting, MziParams, OpticalPulsePacket, SourceParams};
use crate::postproc::CascadePreset;
use crate::schedule::{interleave, validate_silence, PacketSchedule, SilenceReport, UserTiming};
use crate::simcore::{BitSource, BobUnit, DetectorModel};
use crate::units::{db_to_transmission, Decibel, DbPerLength, Energy, Frequency, Length, PerLength, Time, SPEED_OF_LIGHT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub source: SourceConfig,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub mzi: MziConfig,
    #[serde(default)]
    pub receiver: ReceiverConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
    pub schedule: ScheduleConfig,
    #[serde(rename = "bob")]
    pub bobs: Vec<BobConfig>,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub postproc: PostprocConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub wavelength: Length,
    pub pulse_rate: Frequency,
    pub pulse_width: Time,
    pub pulse_energy: Energy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linewidth: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence_time: Option<Time>,
    /// 1 for the `1/(2π Δν)` convention, `2π` for `1/Δν`.
    #[serde(default = "one")]
    pub lineshape_factor: f64,
    pub extinction_static: Decibel,
    #[serde(default = "default_gate_suppression")]
    pub gate_suppression: Decibel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub levels: u32,
    pub feeder_length: Length,
    #[serde(default = "default_attenuation")]
    pub attenuation: DbPerLength,
    #[serde(default = "default_group_index")]
    pub group_index: f64,
    #[serde(default = "default_rayleigh")]
    pub rayleigh_return: PerLength,
    #[serde(default = "default_return_loss")]
    pub connector_return_loss: Decibel,
    /// `false` treats every span as spliced.
    #[serde(default = "yes")]
    pub connectors: bool,
    #[serde(default = "default_splitter_excess")]
    pub splitter_excess: Decibel,
    #[serde(default)]
    pub circulator: CirculatorConfig,
    #[serde(default, rename = "span", skip_serializing_if = "Vec::is_empty")]
    pub spans: Vec<SpanOverride>,
}

/// Replaces the fiber on one tree edge (edge 0 is the feeder, children of
/// edge `e` are `2e+1` and `2e+2`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanOverride {
    pub edge: usize,
    pub length: Length,
    #[serde(default = "yes")]
    pub connectors: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CirculatorConfig {
    #[serde(default = "default_circulator_il")]
    pub insertion_loss: Decibel,
    #[serde(default = "default_directivity")]
    pub directivity: Decibel,
}

impl Default for CirculatorConfig {
    fn default() -> Self {
        Self { insertion_loss: default_circulator_il(), directivity: default_directivity() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MziConfig {
    /// Defaults to one slot period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<Time>,
    #[serde(default = "one")]
    pub visibility: f64,
    #[serde(default = "default_mzi_il")]
    pub insertion_loss: Decibel,
}

impl Default for MziConfig {
    fn default() -> Self {
        Self { delay: None, visibility: 1.0, insertion_loss: default_mzi_il() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    /// Coupling and filter losses between the circulator and the detectors.
    #[serde(default)]
    pub extra_loss: Decibel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    #[serde(default = "default_efficiency")]
    pub efficiency: f64,
    #[serde(default = "default_dark")]
    pub dark_prob: f64,
    #[serde(default = "default_gate_width")]
    pub gate_width: Time,
    #[serde(default = "default_dead_time")]
    pub dead_time: Time,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            efficiency: default_efficiency(),
            dark_prob: default_dark(),
            gate_width: default_gate_width(),
            dead_time: default_dead_time(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub packet_slots: usize,
    /// Defaults to two slot periods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<Time>,
    /// Forced repetition period; the derived minimum is used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<Time>,
    /// Largest tolerated stray photons per slot inside a signal window.
    #[serde(default = "default_silence")]
    pub silence_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BobConfig {
    pub leaf: usize,
    pub storage_length: Length,
    pub mu_target: f64,
    #[serde(default = "default_clock_tap")]
    pub clock_tap: f64,
    pub bits: BitSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_packets")]
    pub packets: u64,
    #[serde(default = "one_u64")]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { packets: default_packets(), seed: 1, output: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostprocConfig {
    /// Error-correction efficiency `f` used in the secure fraction.
    #[serde(default = "default_ec_efficiency")]
    pub ec_efficiency: f64,
    #[serde(default = "default_sample_fraction")]
    pub qber_sample_fraction: f64,
    #[serde(default)]
    pub cascade: CascadePreset,
    /// Packets per entry of the QBER timeline.
    #[serde(default = "default_window_packets")]
    pub qber_window_packets: u64,
    /// Raw count rate to use for the final rate instead of the simulated one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_rate: Option<Frequency>,
}

impl Default for PostprocConfig {
    fn default() -> Self {
        Self {
            ec_efficiency: default_ec_efficiency(),
            qber_sample_fraction: default_sample_fraction(),
            cascade: CascadePreset::default(),
            qber_window_packets: default_window_packets(),
            raw_rate: None,
        }
    }
}

fn one() -> f64 {
    1.0
}
fn one_u64() -> u64 {
    1
}
fn yes() -> bool {
    true
}
fn default_gate_suppression() -> Decibel {
    Decibel(40.0)
}
fn default_attenuation() -> DbPerLength {
    DbPerLength(0.2e-3)
}
fn default_group_index() -> f64 {
    crate::network::DEFAULT_GROUP_INDEX
}
fn default_rayleigh() -> PerLength {
    PerLength(1e-7)
}
fn default_return_loss() -> Decibel {
    Decibel(55.0)
}
fn default_splitter_excess() -> Decibel {
    Decibel(0.3)
}
fn default_circulator_il() -> Decibel {
    Decibel(0.6)
}
fn default_directivity() -> Decibel {
    Decibel(70.0)
}
fn default_mzi_il() -> Decibel {
    Decibel(2.0)
}
fn default_efficiency() -> f64 {
    0.10
}
fn default_dark() -> f64 {
    1e-5
}
fn default_gate_width() -> Time {
    Time(1e-9)
}
fn default_dead_time() -> Time {
    Time(10e-6)
}
fn default_silence() -> f64 {
    1e-3
}
fn default_clock_tap() -> f64 {
    0.99
}
fn default_packets() -> u64 {
    100_000
}
fn default_ec_efficiency() -> f64 {
    1.05
}
fn default_sample_fraction() -> f64 {
    0.1
}
fn default_window_packets() -> u64 {
    100_000
}

/// Names and contents of the shipped scenario files.
pub const PRESETS: &[(&str, &str)] = &[
    ("paper-demo", include_str!("../presets/paper-demo.toml")),
    ("pattern-all-zero", include_str!("../presets/pattern-all-zero.toml")),
    ("pattern-all-one", include_str!("../presets/pattern-all-one.toml")),
    ("pattern-alternating", include_str!("../presets/pattern-alternating.toml")),
    ("pattern-prbs", include_str!("../presets/pattern-prbs.toml")),
    ("two-bob-interleave", include_str!("../presets/two-bob-interleave.toml")),
    ("paper-rates", include_str!("../presets/paper-rates.toml")),
];

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
            Error::Config(format!("unknown preset `{name}` (available: {})", names.join(", ")))
        })?;
        Self::from_toml(text)
    }

    /// A preset name or a path to a scenario file.
    pub fn locate(target: &str) -> Result<Self> {
        let path = Path::new(target);
        if path.exists() {
            Self::load(path)
        } else if let Some(name) = target.strip_prefix("preset:") {
            Self::preset(name)
        } else if PRESETS.iter().any(|(n, _)| *n == target) {
            Self::preset(target)
        } else {
            Err(Error::Io(format!("{target}: no such file or preset")))
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    /// SHA-256 over the canonical serialization, so formatting and comments
    /// in the file do not matter.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario configs always serialize");
        hex::encode(Sha256::digest(&canonical))
    }
}

/// Per-leaf quantities derived from the configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserChannel {
    pub bob: BobUnit,
    /// One-way fiber transit time, s.
    pub fiber_time: f64,
    pub downstream_loss_db: f64,
    pub upstream_loss_db: f64,
    /// Mean photons per pulse reaching the attenuator, after the clock tap.
    pub mu_at_attenuator: f64,
    pub attenuator_db: f64,
    /// Up-stream transmissivity from the attenuator output to the detector
    /// inputs, including the interferometer and receiver losses.
    pub transmissivity: f64,
}

/// A configuration resolved into the network, schedule and detector models.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub digest: String,
    pub source: SourceParams,
    pub topology: TreeTopology,
    pub mzi: MziParams,
    pub receiver_extra_db: f64,
    pub detector: DetectorModel,
    pub schedule: PacketSchedule,
    pub stray: StrayProfile,
    pub silence: SilenceReport,
    /// In configuration order.
    pub users: Vec<UserChannel>,
}

impl Scenario {
    pub fn from_config(config: ScenarioConfig) -> Result<Self> {
        let digest = config.digest();
        let source = resolve_source(&config.source)?;
        let slot = source.slot_period();

        let t = &config.topology;
        let fiber = FiberSpan {
            length: t.feeder_length.0,
            attenuation: t.attenuation.0,
            group_index: t.group_index,
            rayleigh_return: t.rayleigh_return.0,
            connector_return_loss_db: t.connectors.then_some(t.connector_return_loss.0),
        };
        let mut topology = build_tree(t.levels, fiber, t.splitter_excess.0)?.with_circulator(CirculatorModel {
            insertion_loss_db: t.circulator.insertion_loss.0,
            directivity_db: t.circulator.directivity.0,
        })?;
        for o in &t.spans {
            let span = FiberSpan {
                length: o.length.0,
                connector_return_loss_db: (t.connectors && o.connectors).then_some(t.connector_return_loss.0),
                ..fiber
            };
            topology = topology.with_span(o.edge, span)?;
        }

        let mzi = MziParams {
            delay: config.mzi.delay.map_or(slot, |d| d.0),
            visibility: config.mzi.visibility,
            insertion_loss_db: config.mzi.insertion_loss.0,
        };
        mzi.validate()?;
        mzi.check_delay(slot)?;
        source.check_coherence(mzi.delay)?;
        let receiver_extra_db = config.receiver.extra_loss.0;
        if !(receiver_extra_db >= 0.0) {
            return Err(Error::Config("receiver extra loss must be >= 0 dB".into()));
        }

        let d = &config.detector;
        let detector = DetectorModel {
            efficiency: d.efficiency,
            dark_prob: d.dark_prob,
            gate_width: d.gate_width.0,
            dead_time: d.dead_time.0,
        };
        detector.validate()?;

        let s = &config.schedule;
        if s.packet_slots < 2 {
            return Err(Error::Config("a packet needs at least two slots".into()));
        }
        if config.bobs.is_empty() {
            return Err(Error::Config("at least one [[bob]] is required".into()));
        }
        let mut timings = Vec::with_capacity(config.bobs.len());
        for b in &config.bobs {
            timings.push(UserTiming {
                id: b.leaf,
                fiber_time: topology.propagation_delay(b.leaf)?,
                storage_time: b.storage_length.0 * t.group_index / SPEED_OF_LIGHT,
            });
        }
        let packet_length = s.packet_slots as f64 * slot;
        let guard = s.guard.map_or(2.0 * slot, |g| g.0);
        let mut schedule = interleave(&timings, packet_length, guard, slot)?;
        let mut seen = std::collections::BTreeSet::new();
        for b in &config.bobs {
            if !seen.insert(b.leaf) {
                return Err(Error::Config(format!("leaf {} has more than one unit", b.leaf)));
            }
        }
        if let Some(p) = s.period {
            schedule = schedule.with_forced_period(p.0)?;
        }

        let launched = OpticalPulsePacket::uniform(s.packet_slots, slot, source.photons_per_pulse())?;
        let leaves: Vec<usize> = config.bobs.iter().map(|b| b.leaf).collect();
        let stray = stray_profile(&topology, &leaves, &launched, source.background_photons_per_slot(), schedule.period)?;
        if !(s.silence_threshold > 0.0) {
            return Err(Error::Config("silence threshold must be positive".into()));
        }
        let silence = validate_silence(&schedule, &stray, s.silence_threshold)?;

        let mut users = Vec::with_capacity(config.bobs.len());
        for (b, timing) in config.bobs.iter().zip(&timings) {
            let bob = BobUnit {
                leaf: b.leaf,
                storage_time: timing.storage_time,
                mu_target: b.mu_target,
                bits: b.bits.clone(),
                clock_tap_fraction: b.clock_tap,
            };
            bob.validate()?;
            let downstream_loss_db = topology.path_loss_directional(b.leaf, Direction::Downstream)?;
            let upstream_loss_db = topology.path_loss(b.leaf)?;
            let mu_at_attenuator =
                source.photons_per_pulse() * db_to_transmission(downstream_loss_db) * (1.0 - b.clock_tap);
            let attenuator_db = voa_setting(mu_at_attenuator, b.mu_target)
                .map_err(|e| Error::Infeasible(format!("leaf {}: {e}", b.leaf)))?;
            let transmissivity =
                topology.round_trip_transmissivity(b.leaf, mzi.insertion_loss_db + receiver_extra_db)?;
            users.push(UserChannel {
                bob,
                fiber_time: timing.fiber_time,
                downstream_loss_db,
                upstream_loss_db,
                mu_at_attenuator,
                attenuator_db,
                transmissivity,
            });
        }

        Ok(Self {
            config,
            digest,
            source,
            topology,
            mzi,
            receiver_extra_db,
            detector,
            schedule,
            stray,
            silence,
            users,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_config(ScenarioConfig::load(path)?)
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::from_config(ScenarioConfig::preset(name)?)
    }

    pub fn slot_count(&self) -> usize {
        self.config.schedule.packet_slots
    }

    pub fn user_by_leaf(&self, leaf: usize) -> Option<&UserChannel> {
        self.users.iter().find(|u| u.bob.leaf == leaf)
    }
}

fn resolve_source(c: &SourceConfig) -> Result<SourceParams> {
    let (linewidth, coherence_time) = match (c.linewidth, c.coherence_time) {
        (_, Some(tc)) => {
            let lw = c.linewidth.map_or(c.lineshape_factor / (std::f64::consts::TAU * tc.0), |l| l.0);
            (lw, tc.0)
        }
        (Some(lw), None) => (lw.0, coherence_time_from_linewidth(lw.0, c.lineshape_factor)?),
        (None, None) => return Err(Error::Config("source needs `coherence_time` or `linewidth`".into())),
    };
    let source = SourceParams {
        wavelength: c.wavelength.0,
        pulse_rate: c.pulse_rate.0,
        pulse_width: c.pulse_width.0,
        pulse_energy: c.pulse_energy.0,
        linewidth,
        coherence_time,
        extinction_static_db: c.extinction_static.0,
        gate_suppression_db: c.gate_suppression.0,
    };
    source.validate()?;
    Ok(source)
}
