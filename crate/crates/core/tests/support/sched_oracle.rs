//! Reference scheduler: an ordered map keyed by (absolute timestep, arrival).

use std::collections::{BTreeMap, VecDeque};

use odin_core::scheduler::{EventPacket, ScheduledSpike, NUM_TS_FIFOS, SINGLE_DEPTH, TS_DEPTH};

#[derive(Default)]
pub struct OracleScheduler {
    single: VecDeque<u8>,
    burst: BTreeMap<(u64, u64), ScheduledSpike>,
    now: u64,
    seq: u64,
    pub dropped: u64,
    pub late: u64,
}

impl OracleScheduler {
    fn count_at(&self, t: u64) -> usize {
        self.burst.range((t, 0)..(t + 1, 0)).count()
    }

    pub fn push(&mut self, p: EventPacket) -> bool {
        let n = p.n_minus_1 as u64 + 1;
        if n == 1 {
            if self.single.len() >= SINGLE_DEPTH {
                self.dropped += 1;
                return false;
            }
            self.single.push_back(p.source);
            return true;
        }
        let gap = p.isi_code as u64 + 1;
        if (0..n).any(|k| self.count_at(self.now + k * gap) >= TS_DEPTH) {
            self.dropped += 1;
            return false;
        }
        for k in 0..n {
            self.burst.insert(
                (self.now + k * gap, self.seq),
                ScheduledSpike {
                    source: p.source,
                    is_last: k == n - 1,
                },
            );
            self.seq += 1;
        }
        true
    }

    pub fn pop(&mut self) -> Option<ScheduledSpike> {
        if let Some(source) = self.single.pop_front() {
            return Some(ScheduledSpike {
                source,
                is_last: true,
            });
        }
        let key = *self.burst.range((self.now, 0)..(self.now + 1, 0)).next()?.0;
        self.burst.remove(&key)
    }

    pub fn tick(&mut self) {
        let due: Vec<_> = self
            .burst
            .range((self.now, 0)..(self.now + 1, 0))
            .map(|(k, v)| (*k, *v))
            .collect();
        self.late += due.len() as u64;
        for ((_, seq), v) in due {
            self.burst.remove(&(self.now, seq));
            self.burst.insert((self.now + NUM_TS_FIFOS as u64, seq), v);
        }
        self.now += 1;
    }

    pub fn len(&self) -> usize {
        self.single.len() + self.burst.len()
    }
}
