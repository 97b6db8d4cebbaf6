//! Output-event scheduler: one 32-stage single-spike FIFO with absolute
//! priority and 57 rotating 4-stage FIFOs holding decoded burst spikes.
//!
//! A packet of `n = n_minus_1 + 1` spikes with ISI code `c` places spike
//! `k` in the FIFO `k * (c + 1)` timesteps ahead of the current one. The
//! widest packet (8 spikes, code 7) reaches +56, hence 57 FIFOs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SINGLE_DEPTH: usize = 32;
pub const NUM_TS_FIFOS: usize = 57;
pub const TS_DEPTH: usize = 4;

/// 14-bit neuron output packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventPacket {
    pub source: u8,
    pub n_minus_1: u8,
    pub isi_code: u8,
}

impl EventPacket {
    pub fn single(source: u8) -> Self {
        Self {
            source,
            n_minus_1: 0,
            isi_code: 0,
        }
    }

    pub fn spikes(&self) -> usize {
        (self.n_minus_1 & 7) as usize + 1
    }

    /// Timesteps between consecutive spikes of the burst.
    pub fn gap(&self) -> usize {
        (self.isi_code & 7) as usize + 1
    }

    /// `[13:6] source, [5:3] n_minus_1, [2:0] isi_code`.
    pub fn to_raw(&self) -> u16 {
        (self.source as u16) << 6 | ((self.n_minus_1 & 7) as u16) << 3 | (self.isi_code & 7) as u16
    }

    pub fn from_raw(raw: u16) -> Self {
        Self {
            source: (raw >> 6) as u8,
            n_minus_1: (raw >> 3 & 7) as u8,
            isi_code: (raw & 7) as u8,
        }
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("scheduler overflow: packet from neuron {} dropped", .0.source)]
pub struct Overflow(pub EventPacket);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduledSpike {
    pub source: u8,
    pub is_last: bool,
}

#[derive(Debug, Clone)]
pub struct Scheduler {
    single: VecDeque<u8>,
    ts: Vec<VecDeque<ScheduledSpike>>,
    base: usize,
    dropped: u64,
    late: u64,
    overflowed: bool,
}

impl Default for Scheduler {
    fn default() -> Self {
        Self {
            single: VecDeque::with_capacity(SINGLE_DEPTH),
            ts: (0..NUM_TS_FIFOS)
                .map(|_| VecDeque::with_capacity(TS_DEPTH))
                .collect(),
            base: 0,
            dropped: 0,
            late: 0,
            overflowed: false,
        }
    }
}

impl Scheduler {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    fn slot(&self, rel: usize) -> usize {
        (self.base + rel) % NUM_TS_FIFOS
    }

    /// Accepts a packet, or drops it whole if any target FIFO is full.
    pub fn push(&mut self, packet: EventPacket) -> Result<(), Overflow> {
        let n = packet.spikes();
        if n == 1 {
            if self.single.len() >= SINGLE_DEPTH {
                return Err(self.drop_packet(packet));
            }
            self.single.push_back(packet.source);
            return Ok(());
        }
        let gap = packet.gap();
        if (0..n).any(|k| self.ts[self.slot(k * gap)].len() >= TS_DEPTH) {
            return Err(self.drop_packet(packet));
        }
        for k in 0..n {
            let slot = self.slot(k * gap);
            self.ts[slot].push_back(ScheduledSpike {
                source: packet.source,
                is_last: k == n - 1,
            });
        }
        Ok(())
    }

    fn drop_packet(&mut self, packet: EventPacket) -> Overflow {
        self.dropped += 1;
        self.overflowed = true;
        Overflow(packet)
    }

    pub fn pop(&mut self) -> Option<ScheduledSpike> {
        if let Some(source) = self.single.pop_front() {
            return Some(ScheduledSpike {
                source,
                is_last: true,
            });
        }
        let base = self.base;
        self.ts[base].pop_front()
    }

    /// Advances the local timestep. Entries still waiting at +0 are counted
    /// as late and wrap to +56.
    pub fn tick_isi(&mut self) {
        self.late += self.ts[self.base].len() as u64;
        self.base = (self.base + 1) % NUM_TS_FIFOS;
    }

    /// True when `pop` would return an event.
    pub fn has_due(&self) -> bool {
        !self.single.is_empty() || !self.ts[self.base].is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.single.is_empty() && self.ts.iter().all(|f| f.is_empty())
    }

    pub fn priority_base(&self) -> usize {
        self.base
    }

    pub fn single_occupancy(&self) -> usize {
        self.single.len()
    }

    pub fn burst_occupancy(&self) -> usize {
        self.ts.iter().map(|f| f.len()).sum()
    }

    /// Occupancy of the FIFO `rel` timesteps ahead.
    pub fn fifo_occupancy(&self, rel: usize) -> usize {
        self.ts[self.slot(rel)].len()
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn late(&self) -> u64 {
        self.late
    }

    /// Sticky flag set by the first overflow.
    pub fn overflowed(&self) -> bool {
        self.overflowed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burst(source: u8, n_minus_1: u8, isi_code: u8) -> EventPacket {
        EventPacket {
            source,
            n_minus_1,
            isi_code,
        }
    }

    #[test]
    fn three_spike_burst_offsets() {
        let mut s = Scheduler::new();
        s.push(burst(7, 2, 1)).unwrap();
        for rel in 0..NUM_TS_FIFOS {
            let expect = usize::from(matches!(rel, 0 | 2 | 4));
            assert_eq!(s.fifo_occupancy(rel), expect, "+{rel}");
        }
    }

    #[test]
    fn single_spike_path() {
        let mut s = Scheduler::new();
        s.push(EventPacket::single(9)).unwrap();
        assert_eq!(s.single_occupancy(), 1);
        assert_eq!(s.burst_occupancy(), 0);
    }

    #[test]
    fn widest_burst_spans_all_fifos() {
        let mut s = Scheduler::new();
        s.push(burst(1, 7, 7)).unwrap();
        let used: Vec<usize> = (0..NUM_TS_FIFOS).filter(|&r| s.fifo_occupancy(r) == 1).collect();
        assert_eq!(used, (0..8).map(|k| k * 8).collect::<Vec<_>>());
        assert_eq!(*used.last().unwrap(), NUM_TS_FIFOS - 1);
    }

    #[test]
    fn single_preempts_burst() {
        let mut s = Scheduler::new();
        s.push(burst(0xB, 1, 0)).unwrap();
        s.push(EventPacket::single(0xA)).unwrap();
        assert_eq!(s.pop().unwrap().source, 0xA);
        assert_eq!(s.pop().unwrap().source, 0xB);
        assert_eq!(s.pop(), None);
    }

    #[test]
    fn full_rotation() {
        let mut s = Scheduler::new();
        for _ in 0..NUM_TS_FIFOS {
            s.tick_isi();
        }
        assert_eq!(s.priority_base(), 0);
    }

    #[test]
    fn overflow_drops_whole_packet() {
        let mut s = Scheduler::new();
        for i in 0..4 {
            s.push(burst(i, 1, 0)).unwrap();
        }
        let before = s.burst_occupancy();
        assert!(s.push(burst(9, 1, 3)).is_err());
        assert_eq!(s.burst_occupancy(), before);
        assert_eq!(s.dropped(), 1);
        assert!(s.overflowed());
        for i in 0..SINGLE_DEPTH as u8 {
            s.push(EventPacket::single(i)).unwrap();
        }
        assert!(s.push(EventPacket::single(0)).is_err());
        assert_eq!(s.dropped(), 2);
    }

    #[test]
    fn late_entries_wrap_to_far_end() {
        let mut s = Scheduler::new();
        s.push(burst(3, 1, 0)).unwrap();
        s.tick_isi();
        assert_eq!(s.late(), 1);
        // the +0 spike now waits at +56, the +1 spike is due
        assert_eq!(s.fifo_occupancy(NUM_TS_FIFOS - 1), 1);
        assert_eq!(s.pop(), Some(ScheduledSpike { source: 3, is_last: true }));
        assert_eq!(s.pop(), None);
    }

    #[test]
    fn packet_raw_round_trip() {
        for raw in 0..(1u16 << 14) {
            assert_eq!(EventPacket::from_raw(raw).to_raw(), raw);
        }
    }
}
