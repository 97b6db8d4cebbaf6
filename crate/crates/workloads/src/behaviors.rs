//! The 20 Izhikevich behaviors on one phenomenological neuron.
//!
//! Each preset configures neuron 0 and a per-tick stimulus script. One tick
//! is one neuron time reference: the tick's virtual-synapse events are
//! applied first, then the time reference.

use odin_core::aer::InputEvent;
use odin_core::engine::{Engine, TimedEvent};
use odin_core::mem::CoreMemory;
use odin_core::neuron::{NeuronModel, NeuronParams};
use serde::Deserialize;

use crate::WorkloadError;

pub const COUNT: usize = 20;
pub const TICK_CYCLES: u64 = 10_000;

const PRESETS: [&str; COUNT] = [
    include_str!("../presets/behaviors/01_tonic_spiking.toml"),
    include_str!("../presets/behaviors/02_phasic_spiking.toml"),
    include_str!("../presets/behaviors/03_tonic_bursting.toml"),
    include_str!("../presets/behaviors/04_phasic_bursting.toml"),
    include_str!("../presets/behaviors/05_mixed_mode.toml"),
    include_str!("../presets/behaviors/06_spike_frequency_adaptation.toml"),
    include_str!("../presets/behaviors/07_class1_excitable.toml"),
    include_str!("../presets/behaviors/08_class2_excitable.toml"),
    include_str!("../presets/behaviors/09_spike_latency.toml"),
    include_str!("../presets/behaviors/10_subthreshold_oscillations.toml"),
    include_str!("../presets/behaviors/11_resonator.toml"),
    include_str!("../presets/behaviors/12_integrator.toml"),
    include_str!("../presets/behaviors/13_rebound_spike.toml"),
    include_str!("../presets/behaviors/14_rebound_burst.toml"),
    include_str!("../presets/behaviors/15_threshold_variability.toml"),
    include_str!("../presets/behaviors/16_bistability.toml"),
    include_str!("../presets/behaviors/17_depolarizing_after_potential.toml"),
    include_str!("../presets/behaviors/18_accommodation.toml"),
    include_str!("../presets/behaviors/19_inhibition_induced_spiking.toml"),
    include_str!("../presets/behaviors/20_inhibition_induced_bursting.toml"),
];

fn one() -> u32 {
    1
}

/// `weight` applied `count` times on every `every`-th tick of `[from, to)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub from: u32,
    pub to: u32,
    pub weight: i8,
    #[serde(default = "one")]
    pub every: u32,
    #[serde(default = "one")]
    pub count: u32,
}

impl Segment {
    fn active(&self, tick: u32) -> bool {
        tick >= self.from && tick < self.to && (tick - self.from) % self.every.max(1) == 0
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub id: u8,
    pub name: String,
    pub ticks: u32,
    pub neuron: NeuronParams,
    #[serde(default)]
    pub stimulus: Vec<Segment>,
}

impl Preset {
    pub fn from_toml_str(s: &str) -> Result<Self, WorkloadError> {
        let p: Preset = toml::from_str(s).map_err(|e| WorkloadError::Config(e.to_string()))?;
        if p.neuron.model != NeuronModel::Phen {
            return Err(WorkloadError::Config(format!("{}: neuron model must be phen", p.name)));
        }
        p.neuron.validate()?;
        Ok(p)
    }

    /// Net virtual-synapse input on `tick`.
    pub fn input_at(&self, tick: u32) -> i32 {
        self.stimulus
            .iter()
            .filter(|s| s.active(tick))
            .map(|s| s.weight as i32 * s.count as i32)
            .sum()
    }
}

pub fn presets() -> Vec<Preset> {
    PRESETS
        .iter()
        .map(|s| Preset::from_toml_str(s).expect("shipped behavior presets parse"))
        .collect()
}

/// Looks a preset up by id (`1..=20`) or name.
pub fn preset(key: &str) -> Result<Preset, WorkloadError> {
    presets()
        .into_iter()
        .find(|p| p.name == key || key.parse::<u8>().is_ok_and(|id| id == p.id))
        .ok_or_else(|| WorkloadError::UnknownBehavior(key.to_string()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickRecord {
    pub tick: u32,
    pub input: i32,
    /// Signed membrane potential after the time reference.
    pub potential: i16,
    pub spikes: u32,
}

/// Output packet emitted by the neuron, with its spike count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub tick: u32,
    pub spikes: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub ticks: Vec<TickRecord>,
    pub packets: Vec<Packet>,
    /// Every packet's last scheduled spike carried the end-of-burst mark and
    /// no spike of a burst was left in flight at the end of its tick.
    pub bursts_closed: bool,
}

impl Trace {
    pub fn spike_ticks(&self) -> Vec<u32> {
        self.packets.iter().map(|p| p.tick).collect()
    }

    pub fn packets_in(&self, from: u32, to: u32) -> usize {
        self.packets.iter().filter(|p| p.tick >= from && p.tick < to).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("tick,input,potential,spikes\n");
        for r in &self.ticks {
            s.push_str(&format!("{},{},{},{}\n", r.tick, r.input, r.potential, r.spikes));
        }
        s
    }
}

pub fn run_preset(p: &Preset) -> Result<Trace, WorkloadError> {
    let mut mem = CoreMemory::default();
    mem.config.max_neuron = 0;
    mem.config.open_loop = true;
    mem.neurons.get_mut(0).params = p.neuron.clone();
    let mut engine = Engine::new(mem);
    engine.enable_packet_log();
    engine.enable_spike_log();

    let mut ticks = Vec::with_capacity(p.ticks as usize);
    let mut packets = Vec::new();
    let mut bursts_closed = true;
    for tick in 0..p.ticks {
        let base = tick as u64 * TICK_CYCLES;
        let mut events = Vec::new();
        for seg in p.stimulus.iter().filter(|s| s.active(tick)) {
            for _ in 0..seg.count {
                let ev = InputEvent::VirtualSynapse {
                    dest: 0,
                    weight: seg.weight,
                };
                events.push(TimedEvent::new(base, ev));
            }
        }
        events.push(TimedEvent::new(base + TICK_CYCLES / 2, InputEvent::NeuronTimeRef));
        engine.run(&events, None)?;

        let spikes = engine.take_spike_log();
        let log = engine.take_packet_log();
        if log.iter().any(|r| !r.accepted) {
            return Err(WorkloadError::Config(format!("{}: scheduler overflow", p.name)));
        }
        let expected: u32 = log.iter().map(|r| r.packet.n_minus_1 as u32 + 1).sum();
        let lasts = spikes.iter().filter(|s| s.is_last).count();
        if spikes.len() as u32 != expected || lasts != log.len() || engine.memory().neurons.get(0).state.burst_locked {
            bursts_closed = false;
        }
        packets.extend(log.iter().map(|r| Packet {
            tick,
            spikes: r.packet.n_minus_1 as u32 + 1,
        }));
        ticks.push(TickRecord {
            tick,
            input: p.input_at(tick),
            potential: engine.memory().neurons.get(0).state.potential(),
            spikes: spikes.len() as u32,
        });
    }
    Ok(Trace {
        ticks,
        packets,
        bursts_closed,
    })
}

pub fn run_behavior(key: &str) -> Result<(Preset, Trace), WorkloadError> {
    let p = preset(key)?;
    let t = run_preset(&p)?;
    Ok((p, t))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn intervals(ticks: &[u32]) -> Vec<f64> {
    ticks.windows(2).map(|w| (w[1] - w[0]) as f64).collect()
}

/// Coefficient of variation of a sample.
pub fn cv(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Stimulus window `[first active tick, last active tick + 1)` of segment `i`.
fn window(p: &Preset, i: usize) -> (u32, u32) {
    (p.stimulus[i].from, p.stimulus[i].to)
}

fn all_single(t: &Trace) -> bool {
    t.packets.iter().all(|p| p.spikes == 1)
}

fn all_multi(t: &Trace) -> bool {
    t.packets.iter().all(|p| p.spikes > 1) && t.bursts_closed
}

fn tonic(t: &Trace, from: u32, to: u32) -> Result<(), String> {
    let ticks: Vec<u32> = t.spike_ticks();
    ensure(ticks.len() >= 3, || format!("{} packets, want >= 3", ticks.len()))?;
    ensure(ticks.iter().all(|&k| k >= from && k < to), || "packet outside the stimulus".into())?;
    let c = cv(&intervals(&ticks));
    ensure(c < 0.1, || format!("interval CV {c:.3}"))
}

fn single_after(t: &Trace, at: u32, within: u32) -> Result<(), String> {
    ensure(t.packets.len() == 1, || format!("{} packets, want 1", t.packets.len()))?;
    let k = t.packets[0].tick;
    ensure(k >= at && k <= at + within, || format!("packet at tick {k}, want {at}..={}", at + within))
}

/// Checks the behavior predicate for `p` on its trace.
pub fn check(p: &Preset, t: &Trace) -> Result<(), String> {
    let n = t.packets.len();
    match p.name.as_str() {
        "tonic_spiking" => {
            let (a, b) = window(p, 0);
            tonic(t, a, b)?;
            ensure(all_single(t), || "multi-spike packet".into())
        }
        "phasic_spiking" => {
            let (a, _) = window(p, 0);
            single_after(t, a, 2)?;
            ensure(all_single(t), || "multi-spike packet".into())
        }
        "tonic_bursting" => {
            ensure(n >= 3, || format!("{n} packets, want >= 3"))?;
            ensure(all_multi(t), || "single-spike packet or unterminated burst".into())
        }
        "phasic_bursting" => {
            let (a, _) = window(p, 0);
            single_after(t, a, 2)?;
            ensure(all_multi(t), || "single-spike packet or unterminated burst".into())
        }
        "mixed_mode" => {
            ensure(n >= 3, || format!("{n} packets, want >= 3"))?;
            ensure(t.packets[0].spikes > 1 && t.bursts_closed, || "first packet is not a burst".into())?;
            ensure(t.packets[1..].iter().all(|p| p.spikes == 1), || "burst after onset".into())
        }
        "spike_frequency_adaptation" => {
            let iv = intervals(&t.spike_ticks());
            ensure(iv.len() >= 3, || format!("{} intervals, want >= 3", iv.len()))?;
            ensure(iv.windows(2).all(|w| w[1] > w[0]), || format!("intervals {iv:?} not increasing"))?;
            ensure(all_single(t), || "multi-spike packet".into())
        }
        "class1_excitable" => {
            let c: Vec<usize> = (0..3).map(|i| window(p, i)).map(|(a, b)| t.packets_in(a, b)).collect();
            ensure(c[0] >= 1, || "silent at the weakest input".into())?;
            ensure(c[0] < c[1] && c[1] < c[2], || format!("counts {c:?} not increasing"))
        }
        "class2_excitable" => {
            let c: Vec<usize> = (0..3).map(|i| window(p, i)).map(|(a, b)| t.packets_in(a, b)).collect();
            ensure(c[0] == 0 && c[1] == 0, || format!("counts {c:?}: fires below the gate"))?;
            ensure(c[2] >= 3, || format!("counts {c:?}: no repetitive firing"))
        }
        "spike_latency" => {
            let (a, _) = window(p, 0);
            ensure(n == 1, || format!("{n} packets, want 1"))?;
            ensure(t.packets[0].tick > a, || "no delay after the input".into())
        }
        "subthreshold_oscillations" => {
            let (a, _) = window(p, 0);
            ensure(n == 0, || format!("{n} packets, want 0"))?;
            let v: Vec<i16> = t.ticks[a as usize..].iter().map(|r| r.potential).filter(|&v| v != 0).collect();
            let flips = v.windows(2).filter(|w| (w[0] < 0) != (w[1] < 0)).count();
            ensure(flips >= 2, || format!("{flips} sign changes, want >= 2"))?;
            ensure(t.ticks.last().is_some_and(|r| r.potential == 0), || "oscillation does not decay".into())
        }
        "resonator" | "integrator" => {
            let close = t.packets_in(window(p, 0).0, window(p, 1).0);
            let wide = t.packets_in(window(p, 1).0, p.ticks);
            let want = if p.name == "integrator" { (1, 0) } else { (0, 1) };
            ensure((close, wide) == want, || format!("close pair {close}, wide pair {wide}, want {want:?}"))
        }
        "rebound_spike" | "rebound_burst" => {
            ensure(p.stimulus.iter().all(|s| s.weight < 0), || "excitatory input in script".into())?;
            let (_, release) = window(p, 0);
            single_after(t, release, 1)?;
            if p.name == "rebound_burst" {
                ensure(all_multi(t), || "rebound is not a burst".into())
            } else {
                ensure(all_single(t), || "rebound is a burst".into())
            }
        }
        "threshold_variability" => {
            let (alone, _) = window(p, 0);
            let (inhib, _) = window(p, 1);
            let (after, _) = window(p, 2);
            ensure(t.packets_in(alone, inhib) == 0, || "pulse alone fires".into())?;
            single_after(t, after, 0)
        }
        "bistability" => {
            let (on, _) = window(p, 0);
            let (off, _) = window(p, 1);
            ensure(t.packets_in(0, on) == 0, || "fires before switch-on".into())?;
            let k = t.packets_in(on, off + 1);
            ensure(k >= 3, || format!("{k} packets while on, want >= 3"))?;
            ensure(t.packets_in(off + 1, p.ticks) == 0, || "fires after switch-off".into())
        }
        "depolarizing_after_potential" => {
            let (small, _) = window(p, 0);
            let (big, _) = window(p, 1);
            let (again, _) = window(p, 2);
            ensure(t.packets_in(small, big) == 0, || "small pulse fires at rest".into())?;
            ensure(t.spike_ticks() == vec![big, again], || format!("packets at {:?}", t.spike_ticks()))
        }
        "accommodation" => {
            let (ramp, _) = window(p, 0);
            let (step, _) = window(p, 1);
            ensure(t.packets_in(ramp, step) == 0, || "fires on the slow ramp".into())?;
            single_after(t, step, 0)
        }
        "inhibition_induced_spiking" | "inhibition_induced_bursting" => {
            ensure(p.stimulus.iter().all(|s| s.weight < 0), || "excitatory input in script".into())?;
            let (a, b) = window(p, 0);
            ensure(n >= 3, || format!("{n} packets, want >= 3"))?;
            ensure(t.packets_in(a, b + 1) == n, || "fires outside inhibition".into())?;
            if p.name == "inhibition_induced_bursting" {
                ensure(all_multi(t), || "single-spike packet".into())
            } else {
                tonic(t, a, b + 1)?;
                ensure(all_single(t), || "multi-spike packet".into())
            }
        }
        other => Err(format!("no predicate for `{other}`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_complete_and_ordered() {
        let ps = presets();
        assert_eq!(ps.len(), COUNT);
        for (i, p) in ps.iter().enumerate() {
            assert_eq!(p.id as usize, i + 1);
        }
    }

    #[test]
    fn lookup_by_id_and_name() {
        assert_eq!(preset("3").unwrap().name, "tonic_bursting");
        assert_eq!(preset("integrator").unwrap().id, 12);
        assert!(matches!(preset("21"), Err(WorkloadError::UnknownBehavior(_))));
    }

    #[test]
    fn zero_stimulus_is_silent() {
        for mut p in presets() {
            p.stimulus.clear();
            let t = run_preset(&p).unwrap();
            assert!(t.packets.is_empty(), "{}", p.name);
            assert!(t.ticks.iter().all(|r| r.potential == 0), "{}", p.name);
        }
    }

    #[test]
    fn cv_oracle() {
        assert_eq!(cv(&[4.0, 4.0, 4.0]), 0.0);
        assert!((cv(&[1.0, 3.0]) - 0.5).abs() < 1e-12);
    }
}
