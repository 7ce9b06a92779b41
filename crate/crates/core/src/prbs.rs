//! Maximal-length pseudo-random bit sequences (ITU-T O.150 style
//! trinomials `x^n + x^k + 1`) with jump-ahead.

use crate::error::{domain, Result};

/// Supported `(order, tap)` pairs.
pub const TAPS: [(u32, u32); 4] = [(7, 6), (15, 14), (23, 18), (31, 28)];

/// Fibonacci LFSR. Each step shifts in `bit(n-1) ^ bit(k-1)` and emits it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lfsr {
    order: u32,
    tap: u32,
    state: u32,
}

impl Lfsr {
    pub fn new(order: u32, seed: u32) -> Result<Self> {
        let tap = TAPS
            .iter()
            .find(|(n, _)| *n == order)
            .map(|(_, k)| *k)
            .ok_or_else(|| domain(format!("PRBS order must be one of 7, 15, 23, 31; got {order}")))?;
        let state = seed & mask(order);
        if state == 0 {
            return Err(domain("PRBS seed must be nonzero in the low `order` bits"));
        }
        Ok(Self { order, tap, state })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn period(&self) -> u64 {
        (1u64 << self.order) - 1
    }

    pub fn state(&self) -> u32 {
        self.state
    }

    #[inline]
    pub fn next_bit(&mut self) -> bool {
        let bit = ((self.state >> (self.order - 1)) ^ (self.state >> (self.tap - 1))) & 1;
        self.state = ((self.state << 1) | bit) & mask(self.order);
        bit == 1
    }

    /// Advances the register by `steps` in `O(n^2 log steps)`.
    pub fn jump(&mut self, steps: u64) {
        let steps = steps % self.period();
        if steps == 0 {
            return;
        }
        let m = BitMatrix::step(self.order, self.tap).pow(steps);
        self.state = m.apply(self.state);
    }

    /// The register positioned so that its next output is sequence element `position`.
    pub fn at(order: u32, seed: u32, position: u64) -> Result<Self> {
        let mut l = Self::new(order, seed)?;
        l.jump(position);
        Ok(l)
    }

    pub fn fill(&mut self, out: &mut [bool]) {
        out.iter_mut().for_each(|b| *b = self.next_bit());
    }
}

fn mask(order: u32) -> u32 {
    if order >= 32 {
        u32::MAX
    } else {
        (1u32 << order) - 1
    }
}

/// Linear map on GF(2)^n stored by columns.
#[derive(Debug, Clone, PartialEq, Eq)]
struct BitMatrix {
    cols: Vec<u32>,
}

impl BitMatrix {
    fn identity(n: u32) -> Self {
        Self { cols: (0..n).map(|j| 1u32 << j).collect() }
    }

    fn step(n: u32, k: u32) -> Self {
        let cols = (0..n)
            .map(|j| {
                let shifted = if j + 1 < n { 1u32 << (j + 1) } else { 0 };
                let feedback = u32::from(j == n - 1 || j == k - 1);
                shifted | feedback
            })
            .collect();
        Self { cols }
    }

    fn apply(&self, v: u32) -> u32 {
        let mut out = 0;
        let mut rest = v;
        while rest != 0 {
            let j = rest.trailing_zeros();
            out ^= self.cols[j as usize];
            rest &= rest - 1;
        }
        out
    }

    fn compose(&self, inner: &BitMatrix) -> BitMatrix {
        BitMatrix { cols: inner.cols.iter().map(|&c| self.apply(c)).collect() }
    }

    fn pow(&self, mut e: u64) -> BitMatrix {
        let mut base = self.clone();
        let mut acc = BitMatrix::identity(self.cols.len() as u32);
        while e > 0 {
            if e & 1 == 1 {
                acc = base.compose(&acc);
            }
            base = base.compose(&base);
            e >>= 1;
        }
        acc
    }
}

/// `length` bits of the maximal-length sequence, repeating with period `2^order - 1`.
pub fn prbs_sequence(order: u32, seed: u32, length: usize) -> Result<Vec<bool>> {
    let mut l = Lfsr::new(order, seed)?;
    let mut out = vec![false; length];
    l.fill(&mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn period_by_stepping(order: u32) -> u64 {
        let mut l = Lfsr::new(order, 1).unwrap();
        let start = l.state();
        let mut n = 0u64;
        loop {
            l.next_bit();
            n += 1;
            if l.state() == start {
                return n;
            }
        }
    }

    #[test]
    fn short_orders_are_maximal() {
        assert_eq!(period_by_stepping(7), 127);
        assert_eq!(period_by_stepping(15), 32767);
    }

    #[test]
    fn long_orders_are_maximal() {
        // 2^23 - 1 = 47 * 178481, and 2^31 - 1 is prime
        for (order, prime_factors) in [(23u32, vec![47u64, 178_481]), (31, vec![])] {
            let l = Lfsr::new(order, 0x5a5a5).unwrap();
            let m = BitMatrix::step(order, l.tap).pow((1u64 << order) - 1);
            assert_eq!(m, BitMatrix::identity(order));
            for d in prime_factors {
                let m = BitMatrix::step(order, l.tap).pow(((1u64 << order) - 1) / d);
                assert_ne!(m, BitMatrix::identity(order), "order {order}, divisor {d}");
            }
        }
    }

    #[test]
    fn balance_and_periodicity() {
        for order in [7u32, 15] {
            let p = (1usize << order) - 1;
            let s = prbs_sequence(order, 0x1234, 2 * p).unwrap();
            assert_eq!(s[..p].iter().filter(|b| **b).count(), 1 << (order - 1));
            assert_eq!(s[..p], s[p..]);
        }
        let s = prbs_sequence(7, 3, 254).unwrap();
        assert_eq!(s[..127], s[127..]);
    }

    #[test]
    fn zero_seed_and_bad_order_are_rejected() {
        assert!(Lfsr::new(7, 0).is_err());
        assert!(Lfsr::new(7, 0x80).is_err());
        assert!(Lfsr::new(9, 1).is_err());
    }

    #[test]
    fn jump_matches_stepping() {
        for order in [7u32, 15, 23, 31] {
            let mut stepped = Lfsr::new(order, 0xace1).unwrap();
            for target in [1u64, 5, 127, 1000, 40_000] {
                let jumped = Lfsr::at(order, 0xace1, target).unwrap();
                let mut s = Lfsr::new(order, 0xace1).unwrap();
                for _ in 0..target {
                    s.next_bit();
                }
                assert_eq!(jumped, s, "order {order}, target {target}");
            }
            let mut a = stepped.clone();
            a.jump(17);
            for _ in 0..17 {
                stepped.next_bit();
            }
            assert_eq!(a, stepped);
        }
    }
}
