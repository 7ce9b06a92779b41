//! Sifting: the central station announces where it saw clicks, each leaf
//! unit looks up the differential bit it sent there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simcore::{BobLedger, DetectionRecord};

/// What the central station discloses per kept detection. It carries no
/// detector id: that is the key bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Announcement {
    pub packet: u64,
    pub slot: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedKey {
    pub leaf: usize,
    /// Strictly increasing.
    pub positions: Vec<Announcement>,
    pub alice: Vec<bool>,
    pub bob: Vec<bool>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Positions where the two sides disagree (a test-side view).
    pub fn errors(&self) -> usize {
        self.alice.iter().zip(&self.bob).filter(|(a, b)| a != b).count()
    }

    /// Keeps only the positions for which `keep` is true.
    pub fn retain_indices(&mut self, keep: &[bool]) {
        let mut i = 0;
        self.positions.retain(|_| (keep[i], i += 1).0);
        let mut i = 0;
        self.alice.retain(|_| (keep[i], i += 1).0);
        let mut i = 0;
        self.bob.retain(|_| (keep[i], i += 1).0);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sifting {
    pub key: SiftedKey,
    /// Everything sent over the public channel, in order.
    pub announcements: Vec<Announcement>,
}

/// Central-station half: key bits from the detector ids (A→0, B→1) and the
/// public list of positions. Slot 0 and double clicks are dropped.
pub fn announce(records: &[DetectionRecord], leaf: usize) -> Result<(Vec<Announcement>, Vec<bool>)> {
    let mut positions: Vec<Announcement> = Vec::new();
    let mut bits = Vec::new();
    for r in records.iter().filter(|r| r.user == Some(leaf) && !r.coincidence && r.slot > 0) {
        let a = Announcement { packet: r.packet, slot: r.slot };
        if positions.last().is_some_and(|last| *last >= a) {
            return Err(Error::Desync { packet: r.packet, slot: r.slot });
        }
        positions.push(a);
        bits.push(r.detector.bit());
    }
    Ok((positions, bits))
}

/// Leaf-unit half: `m_{i-1} XOR m_i` at every announced position.
pub fn reconstruct(announcements: &[Announcement], ledger: &BobLedger) -> Result<Vec<bool>> {
    announcements
        .iter()
        .map(|a| {
            let slot = a.slot as usize;
            let desync = Error::Desync { packet: a.packet, slot: a.slot };
            if slot == 0 || slot >= ledger.slots() {
                return Err(desync);
            }
            let cur = ledger.bit(a.packet, slot).ok_or(desync.clone())?;
            let prev = ledger.bit(a.packet, slot - 1).ok_or(desync)?;
            Ok(prev ^ cur)
        })
        .collect()
}

pub fn sift(records: &[DetectionRecord], ledger: &BobLedger) -> Result<Sifting> {
    let (positions, alice) = announce(records, ledger.leaf)?;
    let bob = reconstruct(&positions, ledger)?;
    Ok(Sifting {
        key: SiftedKey { leaf: ledger.leaf, positions: positions.clone(), alice, bob },
        announcements: positions,
    })
}
