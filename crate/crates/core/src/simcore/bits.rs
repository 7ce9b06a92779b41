//! Leaf-unit modulation sequences.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::prbs::Lfsr;

use super::seed_for;

/// Where a leaf unit takes its phase bits from. Bit `i` of a packet is the
/// phase (0 or π) applied to slot `i`.
///
/// The fixed patterns are defined by the key bits they produce:
/// `AllZero` leaves every slot pair in phase, `AllOne` flips the phase on
/// every slot, `Alternating` gives key bits 1, 0, 1, 0, ... from slot 1 on.
/// They restart with every packet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BitSource {
    /// One continuous m-sequence running across packets.
    Prbs { order: u32, seed: u32 },
    /// Independent uniform bits from the leaf's own seeded stream.
    Random,
    AllZero,
    AllOne,
    Alternating,
}

impl BitSource {
    pub fn validate(&self) -> Result<()> {
        if let BitSource::Prbs { order, seed } = self {
            Lfsr::new(*order, *seed)?;
        }
        Ok(())
    }

    /// Probability that the key bit of a slot pair is 1, where this does
    /// not depend on the slot.
    pub fn flip_probability(&self, slot: usize) -> f64 {
        match self {
            BitSource::Prbs { .. } | BitSource::Random => 0.5,
            _ => {
                let bit = |i: usize| self.pattern_bit(i);
                if slot == 0 {
                    0.0
                } else {
                    f64::from(u8::from(bit(slot - 1) != bit(slot)))
                }
            }
        }
    }

    fn pattern_bit(&self, i: usize) -> bool {
        match self {
            BitSource::AllZero => false,
            BitSource::AllOne => i % 2 == 1,
            BitSource::Alternating => i.div_ceil(2) % 2 == 1,
            _ => unreachable!("not a fixed pattern"),
        }
    }

    /// A reader positioned at the start of `first_packet`.
    pub fn stream(&self, master_seed: u64, leaf: usize, slots: usize, first_packet: u64) -> Result<BitStream> {
        let inner = match self {
            BitSource::Prbs { order, seed } => {
                Inner::Prbs(Lfsr::at(*order, *seed, first_packet.wrapping_mul(slots as u64))?)
            }
            BitSource::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed_for(master_seed, &[STREAM_BITS, leaf as u64]));
                rng.set_word_pos(u128::from(first_packet) * words_per_packet(slots) as u128 * 2);
                Inner::Random(Box::new(rng))
            }
            other => Inner::Pattern(pack((0..slots).map(|i| other.pattern_bit(i)), slots)),
        };
        Ok(BitStream { slots, inner })
    }
}

const STREAM_BITS: u64 = 0x6269_7473;

pub fn words_per_packet(slots: usize) -> usize {
    slots.div_ceil(64)
}

fn pack(bits: impl Iterator<Item = bool>, slots: usize) -> Box<[u64]> {
    let mut words = vec![0u64; words_per_packet(slots)];
    for (i, b) in bits.enumerate() {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words.into_boxed_slice()
}

#[inline]
pub fn bit_at(words: &[u64], i: usize) -> bool {
    words[i / 64] >> (i % 64) & 1 == 1
}

#[derive(Debug, Clone)]
enum Inner {
    Prbs(Lfsr),
    Random(Box<ChaCha8Rng>),
    Pattern(Box<[u64]>),
}

/// Sequential packet-by-packet reader of a [`BitSource`].
#[derive(Debug, Clone)]
pub struct BitStream {
    slots: usize,
    inner: Inner,
}

impl BitStream {
    /// Bits of the next packet, packed little-endian into 64-bit words.
    pub fn next_packet(&mut self) -> Box<[u64]> {
        let slots = self.slots;
        match &mut self.inner {
            Inner::Prbs(l) => pack((0..slots).map(|_| l.next_bit()), slots),
            Inner::Random(rng) => {
                let mut words: Vec<u64> = (0..words_per_packet(slots)).map(|_| rng.next_u64()).collect();
                if !slots.is_multiple_of(64) {
                    *words.last_mut().expect("at least one word") &= (1u64 << (slots % 64)) - 1;
                }
                words.into_boxed_slice()
            }
            Inner::Pattern(p) => p.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unpack(words: &[u64], n: usize) -> Vec<bool> {
        (0..n).map(|i| bit_at(words, i)).collect()
    }

    fn key_bits(bits: &[bool]) -> Vec<bool> {
        bits.windows(2).map(|w| w[0] ^ w[1]).collect()
    }

    #[test]
    fn patterns_produce_their_key_bits() {
        let n = 9;
        let read = |s: BitSource| unpack(&s.stream(0, 0, n, 0).unwrap().next_packet(), n);
        assert!(key_bits(&read(BitSource::AllZero)).iter().all(|b| !b));
        assert!(key_bits(&read(BitSource::AllOne)).iter().all(|b| *b));
        let alt = key_bits(&read(BitSource::Alternating));
        assert_eq!(alt, [true, false, true, false, true, false, true, false]);
        for s in [BitSource::AllZero, BitSource::AllOne, BitSource::Alternating] {
            let k = key_bits(&read(s.clone()));
            for (i, b) in k.iter().enumerate() {
                assert_eq!(s.flip_probability(i + 1), f64::from(u8::from(*b)));
            }
        }
    }

    #[test]
    fn streams_are_seekable() {
        for src in [BitSource::Prbs { order: 15, seed: 77 }, BitSource::Random] {
            let slots = 100;
            let mut from_start = src.stream(5, 3, slots, 0).unwrap();
            let seq: Vec<_> = (0..10).map(|_| from_start.next_packet()).collect();
            let mut from_seven = src.stream(5, 3, slots, 7).unwrap();
            assert_eq!(from_seven.next_packet(), seq[7]);
            assert_eq!(from_seven.next_packet(), seq[8]);
            assert!(seq.iter().all(|w| w[1] >> 36 == 0));
        }
    }

    #[test]
    fn prbs_stream_continues_across_packets() {
        let mut s = BitSource::Prbs { order: 7, seed: 1 }.stream(0, 0, 10, 0).unwrap();
        let a = unpack(&s.next_packet(), 10);
        let b = unpack(&s.next_packet(), 10);
        let direct = crate::prbs::prbs_sequence(7, 1, 20).unwrap();
        assert_eq!([a, b].concat(), direct);
    }

    #[test]
    fn random_streams_differ_by_leaf() {
        let a = BitSource::Random.stream(1, 0, 128, 0).unwrap().next_packet();
        let b = BitSource::Random.stream(1, 1, 128, 0).unwrap().next_packet();
        assert_ne!(a, b);
    }
}
