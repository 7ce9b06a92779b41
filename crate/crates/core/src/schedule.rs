//! Packet timing: repetition period, storage requirements, silence-window
//! validation and multi-user interleaving.
//!
//! All times are measured at the central station from the start of the
//! packet emission. A user `u` returns its packet at offset
//! `2·T_f(u) + T_b(u)`; the down-stream echoes it causes occupy
//! `[0, 2·T_f(u) + T_p)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::network::{StrayLabel, StrayProfile, DEFAULT_GROUP_INDEX};
use crate::units::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    /// T_p
    pub packet_length: f64,
    /// T_f, one way
    pub fiber_time: f64,
    /// T_b
    pub storage_time: f64,
    pub guard: f64,
}

/// `T_r = 2·T_f + T_b + T_p`: the next packet may leave once the previous one is fully back.
pub fn packet_period(t: &TimingParams) -> f64 {
    2.0 * t.fiber_time + t.storage_time + t.packet_length
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageRequirement {
    pub time: f64,
    pub fiber_length: f64,
}

/// Minimal storage so the whole packet fits inside the leaf unit at once.
pub fn required_storage(packet_length: f64, guard: f64, group_index: f64) -> Result<StorageRequirement> {
    if !(packet_length >= 0.0) || !(guard >= 0.0) {
        return Err(domain("packet length and guard must be >= 0"));
    }
    if !(group_index >= 1.0) {
        return Err(domain("group index must be >= 1"));
    }
    let time = packet_length + guard;
    Ok(StorageRequirement { time, fiber_length: time * SPEED_OF_LIGHT / group_index })
}

/// Half-open interval `[start, end)` in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Self {
        Self { start, end }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn padded(&self, guard: f64) -> Window {
        Window { start: self.start - guard, end: self.end + guard }
    }

    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserTiming {
    pub id: usize,
    pub fiber_time: f64,
    pub storage_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserWindows {
    pub id: usize,
    pub fiber_time: f64,
    pub storage_time: f64,
    pub emission: Window,
    pub stray: Vec<Window>,
    pub signal: Window,
}

impl UserWindows {
    pub fn return_offset(&self) -> f64 {
        self.signal.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketSchedule {
    /// T_r in use
    pub period: f64,
    /// Smallest T_r for which every window fits in one period.
    pub min_period: f64,
    pub slot_period: f64,
    pub packet_length: f64,
    pub guard: f64,
    pub users: Vec<UserWindows>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attribution {
    /// Index into `PacketSchedule::users` and slot within the window.
    User { index: usize, slot: u32 },
    GuardBand,
    Outside,
}

/// Builds the per-user window table for users that share one emission
/// time. Users must return at least `T_p + guard` apart.
pub fn interleave(users: &[UserTiming], packet_length: f64, guard: f64, slot_period: f64) -> Result<PacketSchedule> {
    if users.is_empty() {
        return Err(domain("a schedule needs at least one user"));
    }
    if !(packet_length >= 0.0 && guard >= 0.0 && slot_period > 0.0) {
        return Err(domain("packet length and guard must be >= 0, slot period > 0"));
    }
    for u in users {
        if !(u.fiber_time >= 0.0 && u.storage_time >= 0.0) {
            return Err(domain(format!("user {} has negative timing", u.id)));
        }
    }
    let emission_start = 0.0;
    let mut windows: Vec<UserWindows> = users
        .iter()
        .map(|u| {
            let start = emission_start + (2.0 * u.fiber_time + u.storage_time);
            UserWindows {
                id: u.id,
                fiber_time: u.fiber_time,
                storage_time: u.storage_time,
                emission: Window::new(emission_start, emission_start + packet_length),
                stray: vec![Window::new(emission_start, emission_start + 2.0 * u.fiber_time + packet_length)],
                signal: Window::new(start, start + packet_length),
            }
        })
        .collect();
    windows.sort_by(|a, b| a.signal.start.total_cmp(&b.signal.start).then(a.id.cmp(&b.id)));

    let required = packet_length + guard;
    for pair in windows.windows(2) {
        let separation = pair[1].signal.start - pair[0].signal.start;
        if separation < required {
            return Err(Error::Overlap {
                first: pair[0].id,
                second: pair[1].id,
                separation_ns: separation * 1e9,
                required_ns: required * 1e9,
                suggested_fiber_m: (required - separation) * SPEED_OF_LIGHT / DEFAULT_GROUP_INDEX,
            });
        }
    }
    let min_period = windows.iter().map(|w| w.signal.end).fold(0.0, f64::max);
    Ok(PacketSchedule {
        period: min_period,
        min_period,
        slot_period,
        packet_length,
        guard,
        users: windows,
        notes: Vec::new(),
    })
}

impl PacketSchedule {
    /// Replaces the derived period with a user-chosen one (which may only be longer).
    pub fn with_forced_period(mut self, period: f64) -> Result<Self> {
        if period < self.min_period {
            return Err(Error::Config(format!(
                "forced period {:.3} ns is shorter than the minimum {:.3} ns",
                period * 1e9,
                self.min_period * 1e9
            )));
        }
        for u in &self.users {
            let practical = 2.0 * (u.fiber_time + self.packet_length);
            let exact = 2.0 * u.fiber_time + u.storage_time + self.packet_length;
            if (period - practical).abs() <= 1e-12 * period && (practical - exact).abs() > 1e-12 * exact {
                self.notes.push(format!(
                    "user {}: forced period matches 2(T_f + T_p) = {:.3} ns but 2T_f + T_b + T_p = {:.3} ns",
                    u.id,
                    practical * 1e9,
                    exact * 1e9
                ));
            }
        }
        if period > self.min_period {
            self.notes.push(format!(
                "period forced to {:.3} ns (derived minimum {:.3} ns)",
                period * 1e9,
                self.min_period * 1e9
            ));
        }
        self.period = period;
        Ok(self)
    }

    pub fn slot_count(&self) -> usize {
        (self.packet_length / self.slot_period).round() as usize
    }

    pub fn user_index(&self, id: usize) -> Option<usize> {
        self.users.iter().position(|u| u.id == id)
    }

    /// Assigns an absolute arrival time to a user window by time alone.
    pub fn attribute(&self, time: f64) -> Attribution {
        let phase = time.rem_euclid(self.period);
        for (index, u) in self.users.iter().enumerate() {
            if u.signal.contains(phase) {
                let slot = ((phase - u.signal.start) / self.slot_period).floor() as u32;
                return Attribution::User { index, slot: slot.min(self.slot_count() as u32 - 1) };
            }
        }
        if self.users.iter().any(|u| u.signal.padded(self.guard).contains(phase)) {
            Attribution::GuardBand
        } else {
            Attribution::Outside
        }
    }

    /// Signal windows that intersect some user's stray window (guard padded).
    pub fn stray_conflicts(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in &self.users {
            for v in &self.users {
                if v.stray.iter().any(|s| s.overlaps(&u.signal.padded(self.guard))) {
                    out.push((u.id, v.id));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilenceViolation {
    pub user: usize,
    pub bin: usize,
    pub time: f64,
    pub flux: f64,
    pub dominant: StrayLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SilenceReport {
    pub pass: bool,
    pub threshold: f64,
    /// Largest per-bin stray flux inside each user's padded window, by user id.
    pub max_flux: Vec<(usize, f64)>,
    pub violations: Vec<SilenceViolation>,
}

/// PASS iff every bin touching a guard-padded signal window carries less
/// than `threshold` stray photons.
pub fn validate_silence(schedule: &PacketSchedule, profile: &StrayProfile, threshold: f64) -> Result<SilenceReport> {
    if ((profile.bin_width - schedule.slot_period) / schedule.slot_period).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "stray profile bin width {:.6e} s differs from the slot period {:.6e} s",
            profile.bin_width, schedule.slot_period
        )));
    }
    let mut violations = Vec::new();
    let mut max_flux = Vec::new();
    for u in &schedule.users {
        let w = u.signal.padded(schedule.guard);
        let first = (w.start.max(0.0) / profile.bin_width).floor() as usize;
        let last = (w.end / profile.bin_width).ceil() as usize;
        let mut worst = 0.0f64;
        for bin in first..last {
            let flux = if bin < profile.len() { profile.total(bin) } else { 0.0 };
            worst = worst.max(flux);
            if flux >= threshold {
                violations.push(SilenceViolation {
                    user: u.id,
                    bin,
                    time: bin as f64 * profile.bin_width,
                    flux,
                    dominant: profile.dominant(bin.min(profile.len().saturating_sub(1))),
                });
            }
        }
        max_flux.push((u.id, worst));
    }
    Ok(SilenceReport { pass: violations.is_empty(), threshold, max_flux, violations })
}
