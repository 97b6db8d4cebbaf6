//! Time-multiplexed controller.
//!
//! Cost model (core clock cycles, all documented overheads besides SOPs):
//!
//! | event                      | SOPs          | cycles                      |
//! |----------------------------|---------------|-----------------------------|
//! | neuron spike / scheduled   | max_neuron+1  | 2 per SOP                   |
//! | single synapse             | 1             | 2                           |
//! | virtual synapse            | 0             | 2                           |
//! | neuron time reference      | 0             | 2 per neuron                |
//! | bistability time reference | 0             | 2 per synapse word (8192)   |
//! | open-loop spike emission   | 0             | 2                           |
//!
//! Idle time between events advances `now` but not `cycle_count`.

use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aer::{AerError, InputEvent, MonitorPayload, OutputEvent};
use crate::mem::{
    synapse_location, ConfigOp, CoreMemory, MemError, OutputMode, Region, SynapseEntry,
    SYNAPSES_PER_WORD, SYNAPSE_WORDS, STATUS_BURST_OCCUPANCY, STATUS_DROPPED, STATUS_LATE,
    STATUS_SINGLE_OCCUPANCY, WORDS_PER_SOURCE,
};
use crate::neuron::{Burst, Stimulus};
use crate::plasticity::{bistability_step, sdsp_step};
use crate::scheduler::{EventPacket, ScheduledSpike, Scheduler};

pub const SOP_CYCLES: u64 = 2;
pub const VIRTUAL_CYCLES: u64 = 2;
pub const TIME_REF_CYCLES_PER_NEURON: u64 = 2;
pub const BISTABILITY_CYCLES_PER_WORD: u64 = 2;
pub const EMIT_CYCLES: u64 = 2;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Mem(#[from] MemError),
    #[error(transparent)]
    Aer(#[from] AerError),
    #[error("configuration write to {0:#07x} while events are pending")]
    Busy(u32),
    #[error("input trace is not sorted by time at index {0}")]
    Unsorted(usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineStats {
    pub cycle_count: u64,
    pub sop_count: u64,
    pub output_spike_count: u64,
    pub dropped_events: u64,
    pub late_events: u64,
    pub idle_cycles: u64,
    pub input_events: u64,
    pub virtual_events: u64,
    pub time_refs: u64,
    pub bistability_refs: u64,
    pub packets: u64,
    pub synapse_word_reads: u64,
    pub synapse_word_writes: u64,
    pub neuron_reads: u64,
    pub neuron_writes: u64,
}

impl EngineStats {
    /// Flat `key=value` text, one counter per line.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn fields(&self) -> [(&'static str, u64); 15] {
        [
            ("cycle_count", self.cycle_count),
            ("sop_count", self.sop_count),
            ("output_spike_count", self.output_spike_count),
            ("dropped_events", self.dropped_events),
            ("late_events", self.late_events),
            ("idle_cycles", self.idle_cycles),
            ("input_events", self.input_events),
            ("virtual_events", self.virtual_events),
            ("time_refs", self.time_refs),
            ("bistability_refs", self.bistability_refs),
            ("packets", self.packets),
            ("synapse_word_reads", self.synapse_word_reads),
            ("synapse_word_writes", self.synapse_word_writes),
            ("neuron_reads", self.neuron_reads),
            ("neuron_writes", self.neuron_writes),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedEvent {
    pub t_cycle: u64,
    pub event: InputEvent,
}

impl TimedEvent {
    pub fn new(t_cycle: u64, event: InputEvent) -> Self {
        Self { t_cycle, event }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedOutput {
    pub t_cycle: u64,
    pub event: OutputEvent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightChangeKind {
    Sdsp,
    Bistability,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightChange {
    pub t_cycle: u64,
    pub source: u8,
    pub dest: u8,
    pub before: u8,
    pub after: u8,
    pub kind: WeightChangeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PacketRecord {
    pub t_cycle: u64,
    pub packet: EventPacket,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpikeRecord {
    pub t_cycle: u64,
    pub source: u8,
    pub is_last: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub events: Vec<TimedOutput>,
    pub stats: EngineStats,
    /// The cycle budget ran out before all work was done.
    pub truncated: bool,
    /// The stop predicate ended the run early.
    pub stopped: bool,
}

#[derive(Debug, Clone, Default)]
struct Logs {
    weights: Option<Vec<WeightChange>>,
    packets: Option<Vec<PacketRecord>>,
    spikes: Option<Vec<SpikeRecord>>,
}

#[derive(Debug, Clone, Default)]
pub struct Engine {
    mem: CoreMemory,
    sched: Scheduler,
    stats: EngineStats,
    now: u64,
    next_isi: u64,
    logs: Logs,
}

/// Bistability drift applied to 4 synapses (one 16-bit half word) at once.
fn bistability_lut() -> &'static [u16] {
    static LUT: OnceLock<Vec<u16>> = OnceLock::new();
    LUT.get_or_init(|| {
        (0..=u16::MAX)
            .map(|h| {
                (0..4).fold(0u16, |acc, k| {
                    let e = SynapseEntry::from_nibble((h >> (4 * k)) as u32);
                    acc | (bistability_step(e).to_nibble() as u16) << (4 * k)
                })
            })
            .collect()
    })
}

const MAP_EN_BITS: u32 = 0x8888_8888;

impl Engine {
    pub fn new(mem: CoreMemory) -> Self {
        Self {
            mem,
            ..Self::default()
        }
    }

    pub fn memory(&self) -> &CoreMemory {
        &self.mem
    }

    /// Direct memory access for setup code. Unlike [`Engine::config_access`]
    /// this does not check for pending events.
    pub fn memory_mut(&mut self) -> &mut CoreMemory {
        &mut self.mem
    }

    pub fn into_memory(self) -> CoreMemory {
        self.mem
    }

    pub fn scheduler(&self) -> &Scheduler {
        &self.sched
    }

    pub fn stats(&self) -> EngineStats {
        let mut s = self.stats.clone();
        s.dropped_events = self.sched.dropped();
        s.late_events = self.sched.late();
        s
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Idle when no spike is waiting in the scheduler.
    pub fn is_idle(&self) -> bool {
        self.sched.is_empty()
    }

    pub fn enable_weight_log(&mut self) {
        self.logs.weights.get_or_insert_with(Vec::new);
    }

    pub fn enable_packet_log(&mut self) {
        self.logs.packets.get_or_insert_with(Vec::new);
    }

    pub fn enable_spike_log(&mut self) {
        self.logs.spikes.get_or_insert_with(Vec::new);
    }

    pub fn take_weight_log(&mut self) -> Vec<WeightChange> {
        self.logs.weights.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn take_packet_log(&mut self) -> Vec<PacketRecord> {
        self.logs.packets.as_mut().map(std::mem::take).unwrap_or_default()
    }

    pub fn take_spike_log(&mut self) -> Vec<SpikeRecord> {
        self.logs.spikes.as_mut().map(std::mem::take).unwrap_or_default()
    }

    /// Clears all neuron states, the scheduler, the clock and the counters.
    /// Parameters, synapses and global registers are kept.
    pub fn reset(&mut self) {
        for j in 0..=255u8 {
            self.mem.neurons.get_mut(j).state = Default::default();
        }
        self.sched = Scheduler::new();
        self.stats = EngineStats::default();
        self.now = 0;
        self.next_isi = 0;
    }

    /// Configuration port. Writes are rejected while events are pending.
    pub fn config_access(&mut self, addr: u32, op: ConfigOp) -> Result<u32, EngineError> {
        let region = crate::mem::decode_address(addr)?;
        if let Region::Status(a) = region {
            if let ConfigOp::Write(_) = op {
                return Err(MemError::ReadOnly(addr).into());
            }
            return Ok(match a {
                STATUS_SINGLE_OCCUPANCY => self.sched.single_occupancy() as u32,
                STATUS_BURST_OCCUPANCY => self.sched.burst_occupancy() as u32,
                STATUS_DROPPED => self.sched.dropped().min(u32::MAX as u64) as u32,
                STATUS_LATE => self.sched.late().min(u32::MAX as u64) as u32,
                _ => return Err(MemError::AddressFault(addr).into()),
            });
        }
        if matches!(op, ConfigOp::Write(_)) && !self.is_idle() {
            return Err(EngineError::Busy(addr));
        }
        Ok(self.mem.access(addr, op)?)
    }

    fn isi_period(&self) -> u64 {
        self.mem.config.isi_period.max(1) as u64
    }

    /// Processes one input event at the current time, without draining the
    /// scheduler.
    pub fn process_event(&mut self, ev: InputEvent) -> Vec<TimedOutput> {
        let mut out = Vec::new();
        self.process_input(ev, &mut out);
        out
    }

    /// Pops and processes one due scheduler event, if any.
    pub fn process_scheduled(&mut self) -> Option<Vec<TimedOutput>> {
        let spike = self.sched.pop()?;
        let mut out = Vec::new();
        self.handle_spike(spike, &mut out);
        Some(out)
    }

    pub fn run(&mut self, input: &[TimedEvent], max_cycles: Option<u64>) -> Result<RunOutput, EngineError> {
        self.run_until(input, max_cycles, |_| false)
    }

    /// Runs a time-sorted input trace to completion, or until `max_cycles`
    /// elapse, or until `stop` returns true for an emitted output event.
    ///
    /// Arbitration: due scheduler spikes first, then pending ISI ticks, then
    /// external events whose timestamp has been reached.
    pub fn run_until<F>(
        &mut self,
        input: &[TimedEvent],
        max_cycles: Option<u64>,
        mut stop: F,
    ) -> Result<RunOutput, EngineError>
    where
        F: FnMut(&TimedOutput) -> bool,
    {
        if let Some(i) = input.windows(2).position(|w| w[1].t_cycle < w[0].t_cycle) {
            return Err(EngineError::Unsorted(i + 1));
        }
        let limit = max_cycles.map(|m| self.now.saturating_add(m));
        let period = self.isi_period();
        if self.next_isi <= self.now {
            self.next_isi = (self.now / period + 1) * period;
        }
        let mut out = Vec::new();
        let mut next = 0usize;
        let mut truncated = false;
        let mut stopped = false;

        loop {
            let checked = out.len();
            let has_work = self.sched.has_due() || self.sched.burst_occupancy() > 0 || next < input.len();
            if !has_work {
                break;
            }
            if limit.is_some_and(|l| self.now >= l) {
                truncated = true;
                break;
            }

            if let Some(spike) = self.sched.pop() {
                self.handle_spike(spike, &mut out);
            } else if self.sched.burst_occupancy() > 0 && self.now >= self.next_isi {
                self.sched.tick_isi();
                self.next_isi += period;
            } else if next < input.len() && input[next].t_cycle <= self.now {
                self.process_input(input[next].event, &mut out);
                next += 1;
            } else {
                // idle until the next external event or ISI boundary
                let mut target = input.get(next).map_or(u64::MAX, |e| e.t_cycle);
                if self.sched.burst_occupancy() > 0 {
                    target = target.min(self.next_isi);
                }
                if let Some(l) = limit {
                    target = target.min(l);
                }
                self.idle_to(target, period);
            }

            if out[checked..].iter().any(&mut stop) {
                stopped = true;
                break;
            }
        }
        Ok(RunOutput {
            events: out,
            stats: self.stats(),
            truncated,
            stopped,
        })
    }

    fn idle_to(&mut self, target: u64, period: u64) {
        if target <= self.now {
            return;
        }
        self.stats.idle_cycles += target - self.now;
        self.now = target;
        if self.sched.burst_occupancy() == 0 && self.now >= self.next_isi {
            // rotations with every burst FIFO empty are unobservable except for the base index
            let ticks = (self.now - self.next_isi) / period + 1;
            for _ in 0..ticks % crate::scheduler::NUM_TS_FIFOS as u64 {
                self.sched.tick_isi();
            }
            self.next_isi += ticks * period;
        }
    }

    fn process_input(&mut self, ev: InputEvent, out: &mut Vec<TimedOutput>) {
        self.stats.input_events += 1;
        match ev {
            InputEvent::NeuronSpike { source } => self.neuron_spike(source, out),
            InputEvent::SingleSynapse { source, dest } => self.single_synapse(source, dest, out),
            InputEvent::VirtualSynapse { dest, weight } => {
                self.stats.virtual_events += 1;
                self.now += VIRTUAL_CYCLES;
                self.stats.cycle_count += VIRTUAL_CYCLES;
                self.update_neuron(dest, Stimulus::Syn(weight as i16), out);
            }
            InputEvent::NeuronTimeRef => {
                self.stats.time_refs += 1;
                for j in 0..=self.mem.config.max_neuron {
                    self.now += TIME_REF_CYCLES_PER_NEURON;
                    self.stats.cycle_count += TIME_REF_CYCLES_PER_NEURON;
                    self.update_neuron(j, Stimulus::TimeRef, out);
                }
            }
            InputEvent::BistabilityTimeRef => self.bistability(),
        }
    }

    fn handle_spike(&mut self, spike: ScheduledSpike, out: &mut Vec<TimedOutput>) {
        let ScheduledSpike { source, is_last } = spike;
        if is_last {
            self.mem.neurons.get_mut(source).unlock_burst();
        }
        if let Some(log) = self.logs.spikes.as_mut() {
            log.push(SpikeRecord {
                t_cycle: self.now,
                source,
                is_last,
            });
        }
        self.stats.output_spike_count += 1;
        if self.mem.config.output_mode == OutputMode::Standard {
            out.push(TimedOutput {
                t_cycle: self.now,
                event: OutputEvent::Standard { source },
            });
        }
        if self.mem.config.open_loop {
            self.now += EMIT_CYCLES;
            self.stats.cycle_count += EMIT_CYCLES;
        } else {
            self.neuron_spike(source, out);
        }
    }

    fn neuron_spike(&mut self, source: u8, out: &mut Vec<TimedOutput>) {
        let last = self.mem.config.max_neuron as usize;
        let inhibitory = self.mem.config.is_inhibitory(source);
        let base = source as usize * WORDS_PER_SOURCE;
        for wi in 0..=last / SYNAPSES_PER_WORD {
            let widx = base + wi;
            let mut word = self.mem.synapses.read_word(widx);
            self.stats.synapse_word_reads += 1;
            for k in 0..SYNAPSES_PER_WORD {
                let j = wi * SYNAPSES_PER_WORD + k;
                if j > last {
                    break;
                }
                word = self.sop(source, j as u8, word, k, inhibitory, out);
            }
            self.mem.synapses.write_word(widx, word);
            self.stats.synapse_word_writes += 1;
        }
    }

    fn single_synapse(&mut self, source: u8, dest: u8, out: &mut Vec<TimedOutput>) {
        let inhibitory = self.mem.config.is_inhibitory(source);
        let (widx, k) = synapse_location(source, dest);
        let word = self.mem.synapses.read_word(widx);
        self.stats.synapse_word_reads += 1;
        let word = self.sop(source, dest, word, k, inhibitory, out);
        self.mem.synapses.write_word(widx, word);
        self.stats.synapse_word_writes += 1;
    }

    /// One synaptic operation on the synapse held in nibble `k` of `word`.
    /// Returns the updated word; the caller writes it back.
    fn sop(
        &mut self,
        source: u8,
        dest: u8,
        word: u32,
        k: usize,
        inhibitory: bool,
        out: &mut Vec<TimedOutput>,
    ) -> u32 {
        self.now += SOP_CYCLES;
        self.stats.cycle_count += SOP_CYCLES;
        self.stats.sop_count += 1;

        let shift = 4 * k;
        let entry = SynapseEntry::from_nibble(word >> shift);
        let (up, down) = self.mem.neurons.get(dest).sdsp_flags();
        let weight = if inhibitory {
            -(entry.weight as i16)
        } else {
            entry.weight as i16
        };
        let updated = sdsp_step(entry, up, down).expect("sdsp flags are mutually exclusive");
        let word = (word & !(0xF << shift)) | (updated.to_nibble() << shift);
        if updated != entry {
            if let Some(log) = self.logs.weights.as_mut() {
                log.push(WeightChange {
                    t_cycle: self.now,
                    source,
                    dest,
                    before: entry.weight,
                    after: updated.weight,
                    kind: WeightChangeKind::Sdsp,
                });
            }
        }
        self.update_neuron_with_word(dest, Stimulus::Syn(weight), out, Some((source, word)));
        word
    }

    fn update_neuron(&mut self, j: u8, stim: Stimulus, out: &mut Vec<TimedOutput>) {
        self.update_neuron_with_word(j, stim, out, None);
    }

    /// `open_word` is a synapse word currently held by the controller and
    /// not yet written back, used for the monitored weight.
    fn update_neuron_with_word(
        &mut self,
        j: u8,
        stim: Stimulus,
        out: &mut Vec<TimedOutput>,
        open_word: Option<(u8, u32)>,
    ) {
        self.stats.neuron_reads += 1;
        let burst = self.mem.neurons.get_mut(j).step(stim);
        self.stats.neuron_writes += 1;
        if let Some(burst) = burst {
            self.emit_packet(j, burst);
        }
        let cfg = &self.mem.config;
        if cfg.output_mode == OutputMode::Monitoring && j == cfg.monitored_neuron {
            let syn_src = cfg.monitored_synapse;
            let (widx, k) = synapse_location(syn_src, j);
            let word = match open_word {
                Some((src, w)) if src == syn_src => w,
                _ => self.mem.synapses.read_word(widx),
            };
            let st = &self.mem.neurons.get(j).state;
            out.push(TimedOutput {
                t_cycle: self.now,
                event: OutputEvent::Monitor(MonitorPayload {
                    neuron: j,
                    membrane: st.membrane,
                    mem_neg: st.mem_neg,
                    calcium: st.calcium,
                    weight: SynapseEntry::from_nibble(word >> (4 * k)).weight,
                    fired: burst.is_some(),
                }),
            });
        }
    }

    fn emit_packet(&mut self, source: u8, burst: Burst) {
        let packet = EventPacket {
            source,
            n_minus_1: burst.n_minus_1,
            isi_code: burst.isi_code,
        };
        self.stats.packets += 1;
        let accepted = self.sched.push(packet).is_ok();
        if let Some(log) = self.logs.packets.as_mut() {
            log.push(PacketRecord {
                t_cycle: self.now,
                packet,
                accepted,
            });
        }
    }

    fn bistability(&mut self) {
        self.stats.bistability_refs += 1;
        let n = SYNAPSE_WORDS as u64;
        self.now += n * BISTABILITY_CYCLES_PER_WORD;
        self.stats.cycle_count += n * BISTABILITY_CYCLES_PER_WORD;
        self.stats.synapse_word_reads += n;
        self.stats.synapse_word_writes += n;
        let lut = bistability_lut();
        let t_cycle = self.now;
        let words = self.mem.synapses.words_mut();
        for (widx, word) in words.iter_mut().enumerate() {
            if *word & MAP_EN_BITS == 0 {
                continue;
            }
            let before = *word;
            let after = lut[(before & 0xFFFF) as usize] as u32
                | (lut[(before >> 16) as usize] as u32) << 16;
            *word = after;
            if let Some(log) = self.logs.weights.as_mut() {
                for k in 0..SYNAPSES_PER_WORD {
                    let b = (before >> (4 * k) & 7) as u8;
                    let a = (after >> (4 * k) & 7) as u8;
                    if a != b {
                        log.push(WeightChange {
                            t_cycle,
                            source: (widx / WORDS_PER_SOURCE) as u8,
                            dest: ((widx % WORDS_PER_SOURCE) * SYNAPSES_PER_WORD + k) as u8,
                            before: b,
                            after: a,
                            kind: WeightChangeKind::Bistability,
                        });
                    }
                }
            }
        }
    }
}
