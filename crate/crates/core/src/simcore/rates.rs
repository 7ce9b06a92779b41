//! Per-slot click probabilities and the closed-form count rate.

use std::f64::consts::PI;

use serde::Serialize;

use crate::optics::interfere;
use crate::scenario::Scenario;
use crate::units::db_to_transmission;

/// Mean photons and click probability per slot of one leaf's window.
///
/// Both tables are indexed `[slot][flip][detector]`, where `flip` is the key
/// bit of the slot pair (phase difference π). Slot 0 has no partner and
/// the same entry under both indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlotClickModel {
    pub leaf: usize,
    pub mu: Vec<[[f64; 2]; 2]>,
    pub p: Vec<[[f64; 2]; 2]>,
    /// Probability that the key bit of each slot is 1.
    pub flip_probability: Vec<f64>,
}

impl SlotClickModel {
    /// Click probability averaged over the leaf's bit statistics.
    pub fn mean_click(&self, slot: usize, detector: usize) -> f64 {
        let q = self.flip_probability[slot];
        (1.0 - q) * self.p[slot][0][detector] + q * self.p[slot][1][detector]
    }

    pub fn max_click(&self) -> f64 {
        self.p.iter().flatten().flatten().copied().fold(0.0, f64::max)
    }
}

/// Builds the per-slot detection model for every leaf, in configuration order.
pub fn slot_click_model(s: &Scenario) -> Vec<SlotClickModel> {
    let slots = s.slot_count();
    let slot_period = s.schedule.slot_period;
    let t_mzi = s.mzi.transmission();
    let t_rx = db_to_transmission(s.receiver_extra_db);
    s.users
        .iter()
        .map(|ch| {
            let w = &s.schedule.users[s.schedule.user_index(ch.bob.leaf).expect("every unit is scheduled")];
            // mean photons at the interferometer input
            let m = ch.bob.mu_target * ch.transmissivity / t_mzi;
            let mut mu = Vec::with_capacity(slots);
            let mut p = Vec::with_capacity(slots);
            let mut flip_probability = Vec::with_capacity(slots);
            for slot in 0..slots {
                let t0 = w.signal.start + slot as f64 * slot_period;
                let stray = s.stray.flux_between(t0, t0 + slot_period) * t_mzi * t_rx / 2.0;
                let mut entry = [[0.0; 2]; 2];
                for (flip, e) in entry.iter_mut().enumerate() {
                    let (a, b) = if slot == 0 {
                        interfere(0.0, m, 0.0, s.mzi.visibility, t_mzi)
                    } else {
                        interfere(m, m, flip as f64 * PI, s.mzi.visibility, t_mzi)
                    };
                    *e = [a + stray, b + stray];
                }
                p.push(entry.map(|e| e.map(|x| s.detector.click_probability(x))));
                mu.push(entry);
                flip_probability.push(ch.bob.bits.flip_probability(slot));
            }
            SlotClickModel { leaf: ch.bob.leaf, mu, p, flip_probability }
        })
        .collect()
}

/// The factors of the linearized signal rate `f_p · duty · μ · T · η · (n−1)/n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFactors {
    pub pulse_rate: f64,
    /// T_p / T_r
    pub duty_cycle: f64,
    pub mu: f64,
    pub transmissivity: f64,
    pub efficiency: f64,
    /// (n−1)/n
    pub key_slot_fraction: f64,
    pub linear_signal_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UserRate {
    pub leaf: usize,
    pub factors: RateFactors,
    /// Key-slot clicks from the leaf's own light, counts/s.
    pub signal_rate: f64,
    /// Key-slot dark clicks alone, counts/s.
    pub dark_rate: f64,
    /// Key-slot clicks from all sources (no dead time), counts/s.
    pub key_rate: f64,
    /// Clicks in every slot of the window, slot 0 included, counts/s.
    pub window_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateModel {
    pub users: Vec<UserRate>,
    pub key_rate: f64,
    pub window_rate: f64,
}

/// Expected click rate without dead time, from the same per-slot model
/// the simulator samples.
pub fn expected_raw_rate(s: &Scenario) -> RateModel {
    let period = s.schedule.period;
    let slots = s.slot_count();
    let det = &s.detector;
    let users: Vec<UserRate> = slot_click_model(s)
        .into_iter()
        .zip(&s.users)
        .map(|(model, ch)| {
            let factors = RateFactors {
                pulse_rate: s.source.pulse_rate,
                duty_cycle: s.schedule.packet_length / period,
                mu: ch.bob.mu_target,
                transmissivity: ch.transmissivity,
                efficiency: det.efficiency,
                key_slot_fraction: (slots - 1) as f64 / slots as f64,
                linear_signal_rate: 0.0,
            };
            let linear = factors.pulse_rate
                * factors.duty_cycle
                * factors.mu
                * factors.transmissivity
                * factors.efficiency
                * factors.key_slot_fraction;
            let key: f64 = (1..slots).map(|i| model.mean_click(i, 0) + model.mean_click(i, 1)).sum();
            let window = key + model.mean_click(0, 0) + model.mean_click(0, 1);
            let signal_only = crate::simcore::DetectorModel { dark_prob: 0.0, ..*det };
            let m = ch.bob.mu_target * ch.transmissivity;
            let signal_click = |c: f64| signal_only.click_probability(m * (1.0 + c) / 2.0);
            let v = s.mzi.visibility;
            // the two ports share m(1 ± V)/2 whatever the key bit
            let signal = (slots - 1) as f64 * (signal_click(v) + signal_click(-v));
            UserRate {
                leaf: ch.bob.leaf,
                factors: RateFactors { linear_signal_rate: linear, ..factors },
                signal_rate: signal / period,
                dark_rate: 2.0 * (slots - 1) as f64 * det.dark_prob / period,
                key_rate: key / period,
                window_rate: window / period,
            }
        })
        .collect();
    RateModel {
        key_rate: users.iter().map(|u| u.key_rate).sum(),
        window_rate: users.iter().map(|u| u.window_rate).sum(),
        users,
    }
}
