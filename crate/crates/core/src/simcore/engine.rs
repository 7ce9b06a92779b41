//! Event queue and the protocol state machines of one chunk of packets.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

use super::bits::{BitSource, BitStream};
use super::rates::{slot_click_model, SlotClickModel};
use super::{to_ps, GateTable};

/// Min-queue of timed events; ties leave in insertion order.
#[derive(Debug)]
pub struct EventQueue<E> {
    heap: BinaryHeap<Reverse<Scheduled<E>>>,
    seq: u64,
}

#[derive(Debug)]
struct Scheduled<E> {
    time_ps: u64,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Scheduled<E> {
    fn eq(&self, other: &Self) -> bool {
        (self.time_ps, self.seq) == (other.time_ps, other.seq)
    }
}
impl<E> Eq for Scheduled<E> {}
impl<E> PartialOrd for Scheduled<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<E> Ord for Scheduled<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.time_ps, self.seq).cmp(&(other.time_ps, other.seq))
    }
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self { heap: BinaryHeap::new(), seq: 0 }
    }
}

impl<E> EventQueue<E> {
    pub fn push(&mut self, time_ps: u64, event: E) {
        self.heap.push(Reverse(Scheduled { time_ps, seq: self.seq, event }));
        self.seq += 1;
    }

    pub fn pop(&mut self) -> Option<(u64, E)> {
        self.heap.pop().map(|Reverse(s)| (s.time_ps, s.event))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Event {
    /// The central station launches a packet to every leaf.
    Emit { packet: u64 },
    /// The packet reaches a leaf; the clock tap counts it.
    ArriveBob { packet: u64, user: usize },
    /// The stored packet leaves modulated and attenuated.
    DepartBob { packet: u64, user: usize },
    /// The packet is back at the receiver; its gate opens.
    ReturnAlice { packet: u64, user: usize },
}

/// Per-leaf timing on the picosecond grid, in schedule order.
#[derive(Debug, Clone)]
pub struct PlanUser {
    pub leaf: usize,
    pub fiber_ps: u64,
    pub storage_ps: u64,
    /// Return leg, chosen so the gate opens exactly on the schedule grid.
    pub upstream_ps: u64,
    pub bits: BitSource,
    pub model: SlotClickModel,
}

#[derive(Debug, Clone)]
pub struct Plan {
    pub seed: u64,
    pub table: GateTable,
    pub users: Vec<PlanUser>,
}

impl Plan {
    pub fn new(scenario: &Scenario, seed: u64) -> Result<Self> {
        let table = GateTable::from_schedule(&scenario.schedule);
        if table.slot_ps == 0 || table.period_ps < table.slot_ps * u64::from(table.slots) {
            return Err(Error::Config("schedule does not fit the picosecond grid".into()));
        }
        let models = slot_click_model(scenario);
        let mut users = Vec::new();
        for (w, &(leaf, start_ps)) in table.windows.iter().enumerate() {
            let ch = scenario.user_by_leaf(leaf).ok_or(Error::Lookup { kind: "leaf", id: leaf })?;
            let fiber_ps = to_ps(ch.fiber_time);
            let storage_ps = to_ps(ch.bob.storage_time);
            let upstream_ps = start_ps.saturating_sub(fiber_ps + storage_ps);
            let model = models.iter().find(|m| m.leaf == leaf).cloned().expect("one model per leaf");
            debug_assert_eq!(scenario.schedule.users[w].id, leaf);
            users.push(PlanUser { leaf, fiber_ps, storage_ps, upstream_ps, bits: ch.bob.bits.clone(), model });
        }
        Ok(Self { seed, table, users })
    }
}

/// A receiver gate: one leaf's packet returning in its window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gate {
    pub packet: u64,
    /// Window (schedule) index.
    pub window: usize,
    pub open_ps: u64,
    /// Phase bits the leaf applied, packed.
    pub bits: Box<[u64]>,
}

struct BobState {
    stream: BitStream,
    clock_count: u64,
    stored: VecDeque<(u64, Box<[u64]>)>,
    modulated: VecDeque<(u64, Box<[u64]>)>,
}

/// Runs packets `first .. first + count` through the event queue and
/// returns the receiver gates in time order.
pub fn run_chunk(plan: &Plan, first: u64, count: u64) -> Result<Vec<Gate>> {
    let slots = plan.table.slots as usize;
    let mut bobs = plan
        .users
        .iter()
        .map(|u| {
            Ok(BobState {
                stream: u.bits.stream(plan.seed, u.leaf, slots, first)?,
                clock_count: first,
                stored: VecDeque::new(),
                modulated: VecDeque::new(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut queue = EventQueue::default();
    let mut gates = Vec::with_capacity(count as usize * plan.users.len());
    if count > 0 {
        queue.push(first * plan.table.period_ps, Event::Emit { packet: first });
    }
    while let Some((now, event)) = queue.pop() {
        match event {
            Event::Emit { packet } => {
                for (user, u) in plan.users.iter().enumerate() {
                    queue.push(now + u.fiber_ps, Event::ArriveBob { packet, user });
                }
                if packet + 1 < first + count {
                    queue.push(now + plan.table.period_ps, Event::Emit { packet: packet + 1 });
                }
            }
            Event::ArriveBob { packet, user } => {
                let bob = &mut bobs[user];
                // ideal clock recovery: the tapped pulses index the packet
                if bob.clock_count != packet {
                    return Err(Error::Desync { packet, slot: 0 });
                }
                bob.clock_count += 1;
                let bits = bob.stream.next_packet();
                bob.stored.push_back((packet, bits));
                queue.push(now + plan.users[user].storage_ps, Event::DepartBob { packet, user });
            }
            Event::DepartBob { packet, user } => {
                let bob = &mut bobs[user];
                let entry = bob.stored.pop_front().filter(|(p, _)| *p == packet);
                let entry = entry.ok_or(Error::Desync { packet, slot: 0 })?;
                bob.modulated.push_back(entry);
                queue.push(now + plan.users[user].upstream_ps, Event::ReturnAlice { packet, user });
            }
            Event::ReturnAlice { packet, user } => {
                let (p, bits) = bobs[user].modulated.pop_front().ok_or(Error::Desync { packet, slot: 0 })?;
                debug_assert_eq!(p, packet);
                debug_assert_eq!(now, plan.table.open_time(packet, user, 0));
                gates.push(Gate { packet, window: user, open_ps: now, bits });
            }
        }
    }
    Ok(gates)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn queue_orders_by_time_then_insertion() {
        let mut q = EventQueue::default();
        q.push(5, 'a');
        q.push(1, 'b');
        q.push(5, 'c');
        q.push(0, 'd');
        let order: Vec<_> = std::iter::from_fn(|| q.pop()).collect();
        assert_eq!(order, [(0, 'd'), (1, 'b'), (5, 'a'), (5, 'c')]);
        assert!(q.is_empty());
    }

    #[test]
    fn gates_follow_the_schedule() {
        let s = Scenario::preset("two-bob-interleave").unwrap();
        let plan = Plan::new(&s, 1).unwrap();
        let gates = run_chunk(&plan, 10, 5).unwrap();
        assert_eq!(gates.len(), 10);
        for w in gates.windows(2) {
            assert!(w[0].open_ps < w[1].open_ps);
        }
        for g in &gates {
            assert_eq!(g.open_ps, plan.table.open_time(g.packet, g.window, 0));
            assert_eq!(plan.table.attribute(g.open_ps), Some((g.window, 0)));
        }
    }

    #[test]
    fn chunks_are_independent() {
        let s = Scenario::preset("two-bob-interleave").unwrap();
        let plan = Plan::new(&s, 3).unwrap();
        let whole = run_chunk(&plan, 0, 8).unwrap();
        let mut parts = run_chunk(&plan, 0, 3).unwrap();
        parts.extend(run_chunk(&plan, 3, 5).unwrap());
        assert_eq!(whole, parts);
    }
}
