//! Pulse packets, phase modulation, attenuation and delay-interferometer
//! demodulation.
//!
//! A pulse is described by its mean photon number and optical phase. That is
//! enough for weak-coherent photon statistics and for interference at a fixed
//! one-slot interferometer delay; coherence between neighbouring pulses is a
//! precondition checked on the source, not something simulated.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::units::db_to_transmission;

/// Planck constant times the speed of light, J·m.
pub const PLANCK_C: f64 = 1.98645e-25;

/// Relative tolerance when comparing the interferometer delay with the slot period.
const DELAY_MATCH_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    /// m
    pub wavelength: f64,
    /// Hz
    pub pulse_rate: f64,
    /// s
    pub pulse_width: f64,
    /// J, per pulse at the source output
    pub pulse_energy: f64,
    /// Hz
    pub linewidth: f64,
    /// s
    pub coherence_time: f64,
    /// dB, modulator extinction between pulses
    pub extinction_static_db: f64,
    /// dB, additional suppression outside the packet gate
    pub gate_suppression_db: f64,
}

impl SourceParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > 0.0) {
            return Err(domain("wavelength must be positive"));
        }
        if !(self.pulse_rate > 0.0) {
            return Err(domain("pulse rate must be positive"));
        }
        if !(self.pulse_width >= 0.0 && self.pulse_width < 1.0 / self.pulse_rate) {
            return Err(domain("pulse width must be shorter than the pulse period"));
        }
        if !(self.pulse_energy >= 0.0) {
            return Err(domain("pulse energy must be nonnegative"));
        }
        if !(self.coherence_time > 0.0 && self.linewidth >= 0.0) {
            return Err(domain("coherence time must be positive"));
        }
        if self.extinction_static_db < 0.0 || self.gate_suppression_db < 0.0 {
            return Err(domain("extinction figures are suppressions and must be >= 0 dB"));
        }
        Ok(())
    }

    pub fn slot_period(&self) -> f64 {
        1.0 / self.pulse_rate
    }

    /// Mean photons per pulse leaving the source.
    pub fn photons_per_pulse(&self) -> f64 {
        photons_per_pulse(self.pulse_energy, self.wavelength).unwrap_or(0.0)
    }

    /// Mean photons per slot leaking out between packets.
    pub fn background_photons_per_slot(&self) -> f64 {
        self.photons_per_pulse() * db_to_transmission(self.extinction_static_db + self.gate_suppression_db)
    }

    /// The source must stay coherent across at least one interferometer delay.
    pub fn check_coherence(&self, mzi_delay: f64) -> Result<()> {
        if self.coherence_time <= mzi_delay {
            return Err(Error::Config(format!(
                "coherence time {:.3e} s does not exceed the interferometer delay {:.3e} s",
                self.coherence_time, mzi_delay
            )));
        }
        Ok(())
    }
}

/// Coherence time of a laser with the given linewidth. `lineshape_factor`
/// is 1 for the Lorentzian `1/(2πΔν)` convention; `2π` gives `1/Δν`.
pub fn coherence_time_from_linewidth(linewidth: f64, lineshape_factor: f64) -> Result<f64> {
    if !(linewidth > 0.0) || !(lineshape_factor > 0.0) {
        return Err(domain("linewidth and lineshape factor must be positive"));
    }
    Ok(lineshape_factor / (TAU * linewidth))
}

pub fn photons_per_pulse(energy: f64, wavelength: f64) -> Result<f64> {
    if !(wavelength > 0.0) {
        return Err(domain(format!("wavelength must be positive, got {wavelength}")));
    }
    if !(energy >= 0.0) {
        return Err(domain(format!("energy must be nonnegative, got {energy}")));
    }
    Ok(energy / (PLANCK_C / wavelength))
}

/// Ordered slots of weak coherent pulses.
#[derive(Debug, Clone, PartialEq)]
pub struct OpticalPulsePacket {
    slot_period: f64,
    mean_photons: Vec<f64>,
    phase: Vec<f64>,
    origin_time: f64,
}

impl OpticalPulsePacket {
    pub fn new(slot_period: f64, mean_photons: Vec<f64>, phase: Vec<f64>, origin_time: f64) -> Result<Self> {
        if mean_photons.len() != phase.len() {
            return Err(Error::Shape { expected: mean_photons.len(), actual: phase.len() });
        }
        if mean_photons.is_empty() {
            return Err(domain("a packet needs at least one slot"));
        }
        if !(slot_period > 0.0) {
            return Err(domain("slot period must be positive"));
        }
        if mean_photons.iter().any(|m| !(*m >= 0.0) || !m.is_finite()) {
            return Err(domain("mean photon numbers must be finite and nonnegative"));
        }
        if phase.iter().any(|p| !p.is_finite()) {
            return Err(domain("phases must be finite"));
        }
        Ok(Self { slot_period, mean_photons, phase, origin_time })
    }

    /// `slot_count` pulses of equal intensity and zero phase.
    pub fn uniform(slot_count: usize, slot_period: f64, mu: f64) -> Result<Self> {
        Self::new(slot_period, vec![mu; slot_count], vec![0.0; slot_count], 0.0)
    }

    pub fn slot_count(&self) -> usize {
        self.mean_photons.len()
    }

    pub fn slot_period(&self) -> f64 {
        self.slot_period
    }

    pub fn mean_photons(&self) -> &[f64] {
        &self.mean_photons
    }

    pub fn phases(&self) -> &[f64] {
        &self.phase
    }

    pub fn origin_time(&self) -> f64 {
        self.origin_time
    }

    pub fn total_photons(&self) -> f64 {
        self.mean_photons.iter().sum()
    }

    pub fn with_origin(mut self, origin_time: f64) -> Self {
        self.origin_time = origin_time;
        self
    }
}

/// Phase-modulates each slot by `π·bit`. On an unmodulated packet the
/// resulting phases are exactly `π·bits[i]`; phases are kept in `[0, 2π)`.
pub fn apply_phase_pattern(packet: &OpticalPulsePacket, bits: &[bool]) -> Result<OpticalPulsePacket> {
    if bits.len() != packet.slot_count() {
        return Err(Error::Shape { expected: packet.slot_count(), actual: bits.len() });
    }
    let mut out = packet.clone();
    for (phase, &bit) in out.phase.iter_mut().zip(bits) {
        if bit {
            *phase = (*phase + PI).rem_euclid(TAU);
        }
    }
    Ok(out)
}

pub fn attenuate(packet: &OpticalPulsePacket, loss_db: f64) -> Result<OpticalPulsePacket> {
    if !(loss_db >= 0.0) {
        return Err(domain(format!("attenuation must be >= 0 dB, got {loss_db}")));
    }
    let t = db_to_transmission(loss_db);
    let mut out = packet.clone();
    out.mean_photons.iter_mut().for_each(|m| *m *= t);
    Ok(out)
}

/// Attenuator setting that brings `mu_in` down to `mu_target`.
pub fn voa_setting(mu_in: f64, mu_target: f64) -> Result<f64> {
    if !(mu_target > 0.0) {
        return Err(domain(format!("target mean photon number must be positive, got {mu_target}")));
    }
    if !(mu_in >= mu_target) {
        return Err(Error::Infeasible(format!(
            "attenuator input {mu_in:.4e} photons is below the target {mu_target:.4e}"
        )));
    }
    Ok(10.0 * (mu_in / mu_target).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MziParams {
    /// s, arm imbalance
    pub delay: f64,
    pub visibility: f64,
    pub insertion_loss_db: f64,
}

impl MziParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.visibility) {
            return Err(domain(format!("visibility must lie in [0, 1], got {}", self.visibility)));
        }
        if !(self.delay > 0.0) {
            return Err(domain("interferometer delay must be positive"));
        }
        if !(self.insertion_loss_db >= 0.0) {
            return Err(domain("interferometer insertion loss must be >= 0 dB"));
        }
        Ok(())
    }

    pub fn check_delay(&self, slot_period: f64) -> Result<()> {
        if ((self.delay - slot_period) / slot_period).abs() > DELAY_MATCH_RTOL {
            return Err(Error::Config(format!(
                "interferometer delay {:.6e} s does not match the slot period {:.6e} s",
                self.delay, slot_period
            )));
        }
        Ok(())
    }

    pub fn transmission(&self) -> f64 {
        db_to_transmission(self.insertion_loss_db)
    }
}

/// Output port probabilities `(p_A, p_B)` for a photon whose two time-bin
/// halves differ in phase by `dphi`.
pub fn mzi_port_probabilities(dphi: f64, visibility: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&visibility) {
        return Err(domain(format!("visibility must lie in [0, 1], got {visibility}")));
    }
    let c = visibility * dphi.cos();
    Ok(((1.0 + c) / 2.0, (1.0 - c) / 2.0))
}

/// Mean photons reaching ports A and B in a slot where the delayed half of
/// a pulse with `mu_prev` meets the prompt half of a pulse with `mu_cur`.
///
/// Each half carries `mu/2`; each port sees `(mu_prev + mu_cur)/4` plus an
/// interference term `±V·√(mu_prev·mu_cur)/2·cos Δφ`. For equal
/// intensities this is `mu·p_A` and `mu·p_B`.
#[inline]
pub fn interfere(mu_prev: f64, mu_cur: f64, dphi: f64, visibility: f64, transmission: f64) -> (f64, f64) {
    let base = (mu_prev + mu_cur) / 4.0;
    let cross = visibility * (mu_prev * mu_cur).sqrt() / 2.0 * dphi.cos();
    ((base + cross) * transmission, (base - cross) * transmission)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemodSlot {
    pub port_a: f64,
    pub port_b: f64,
    /// False for the leading slot (no earlier partner) and the trailing half-pulse.
    pub key: bool,
}

/// Demodulated output of one packet: `slot_count + 1` time slots, of
/// which slots `1..slot_count` carry differential phase information.
#[derive(Debug, Clone, PartialEq)]
pub struct DemodulatedPacket {
    pub slot_period: f64,
    pub slots: Vec<DemodSlot>,
}

impl DemodulatedPacket {
    pub fn key_slots(&self) -> impl Iterator<Item = (usize, &DemodSlot)> {
        self.slots.iter().enumerate().filter(|(_, s)| s.key)
    }

    pub fn total_photons(&self) -> f64 {
        self.slots.iter().map(|s| s.port_a + s.port_b).sum()
    }
}

pub fn demodulate_packet(packet: &OpticalPulsePacket, mzi: &MziParams) -> Result<DemodulatedPacket> {
    mzi.validate()?;
    mzi.check_delay(packet.slot_period)?;
    let t = mzi.transmission();
    let mu = &packet.mean_photons;
    let n = mu.len();
    let mut slots = Vec::with_capacity(n + 1);
    // only the prompt half of the first pulse: no partner to interfere with
    slots.push(DemodSlot { port_a: mu[0] / 4.0 * t, port_b: mu[0] / 4.0 * t, key: false });
    for i in 1..n {
        let dphi = packet.phase[i] - packet.phase[i - 1];
        let (a, b) = interfere(mu[i - 1], mu[i], dphi, mzi.visibility, t);
        slots.push(DemodSlot { port_a: a, port_b: b, key: true });
    }
    slots.push(DemodSlot { port_a: mu[n - 1] / 4.0 * t, port_b: mu[n - 1] / 4.0 * t, key: false });
    Ok(DemodulatedPacket { slot_period: packet.slot_period, slots })
}
