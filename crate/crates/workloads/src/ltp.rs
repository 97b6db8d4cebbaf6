//! Stochastic selection of long-term potentiation on one plastic synapse.
//!
//! Input address 0 fires as a Poisson process into LIF neuron 1, which a
//! Poisson teacher drives through virtual synapses. Bistability refreshes
//! pull the weight towards 0 or 7. After the stimulus, bistability alone
//! runs for `settle` seconds and the terminal weight decides the outcome.

use odin_core::aer::InputEvent;
use odin_core::engine::{Engine, TimedEvent};
use odin_core::mem::{CoreMemory, SynapseEntry};
use odin_core::neuron::NeuronParams;
use odin_core::plasticity::BISTABILITY_MIDPOINT;
use rayon::prelude::*;
use serde::Deserialize;

use crate::coding::{merge, periodic, poisson_times, TimeBase};
use crate::rng::sample_rng;
use crate::WorkloadError;

pub const DEFAULT_CONFIG: &str = include_str!("../presets/ltp.toml");
pub const PRE: u8 = 0;
pub const POST: u8 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LtpConfig {
    pub pre_rate: f64,
    /// Teacher virtual-synapse event rate; with `teacher_weight` and the
    /// post threshold this sets the post firing rate.
    pub teacher_rate: f64,
    pub bistability_rate: f64,
    pub time_ref_rate: f64,
    pub cycles_per_second: f64,
    pub duration: f64,
    pub settle: f64,
    pub init_weight: u8,
    pub teacher_weight: i8,
    pub post: NeuronParams,
}

impl Default for LtpConfig {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG).expect("shipped LTP config parses")
    }
}

impl LtpConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, WorkloadError> {
        let c: LtpConfig = toml::from_str(s).map_err(|e| WorkloadError::Config(e.to_string()))?;
        c.post.validate()?;
        SynapseEntry::new(c.init_weight, true)?;
        if !c.cycles_per_second.is_finite() || c.cycles_per_second <= 0.0 {
            return Err(WorkloadError::Config("cycles_per_second must be positive".into()));
        }
        Ok(c)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, WorkloadError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    fn time_base(&self) -> TimeBase {
        TimeBase {
            cycles_per_second: self.cycles_per_second,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    /// `(cycle, weight)` after every change of the monitored synapse.
    pub weights: Vec<(u64, u8)>,
    pub final_weight: u8,
    pub pre_spikes: usize,
    pub post_spikes: usize,
}

impl Trial {
    pub fn potentiated(&self) -> bool {
        self.final_weight >= BISTABILITY_MIDPOINT
    }
}

pub fn stimulus(cfg: &LtpConfig, seed: u64, index: u64) -> Vec<TimedEvent> {
    let tb = cfg.time_base();
    let mut rng = sample_rng(seed, index);
    let pre = poisson_times(&mut rng, cfg.pre_rate, cfg.duration, tb, 0)
        .into_iter()
        .map(|t| TimedEvent::new(t, InputEvent::NeuronSpike { source: PRE }))
        .collect();
    let teacher = poisson_times(&mut rng, cfg.teacher_rate, cfg.duration, tb, 0)
        .into_iter()
        .map(|t| {
            let ev = InputEvent::VirtualSynapse {
                dest: POST,
                weight: cfg.teacher_weight,
            };
            TimedEvent::new(t, ev)
        })
        .collect();
    let total = cfg.duration + cfg.settle;
    let time_refs = periodic(InputEvent::NeuronTimeRef, cfg.time_ref_rate, cfg.duration, tb, 0);
    let bist = periodic(InputEvent::BistabilityTimeRef, cfg.bistability_rate, total, tb, 0);
    merge(vec![bist, time_refs, teacher, pre])
}

pub fn run_trial(cfg: &LtpConfig, seed: u64, index: u64) -> Result<Trial, WorkloadError> {
    let mut mem = CoreMemory::default();
    mem.config.max_neuron = POST;
    mem.config.open_loop = true;
    // address 0 only acts as an input; keep its own neuron silent
    mem.neurons.get_mut(PRE).params = NeuronParams::lif(u8::MAX, 0);
    mem.neurons.get_mut(POST).params = cfg.post.clone();
    mem.synapses.set(PRE, POST, SynapseEntry::new(cfg.init_weight, true)?)?;
    let mut engine = Engine::new(mem);
    engine.enable_weight_log();
    engine.enable_spike_log();
    let trace = stimulus(cfg, seed, index);
    let pre_spikes = trace
        .iter()
        .filter(|e| matches!(e.event, InputEvent::NeuronSpike { .. }))
        .count();
    engine.run(&trace, None)?;
    let weights = engine
        .take_weight_log()
        .into_iter()
        .filter(|c| c.source == PRE && c.dest == POST)
        .map(|c| (c.t_cycle, c.after))
        .collect();
    Ok(Trial {
        weights,
        final_weight: engine.memory().synapses.get(PRE, POST).weight,
        pre_spikes,
        post_spikes: engine.take_spike_log().iter().filter(|s| s.source == POST).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LtpSummary {
    pub trials: usize,
    pub potentiated: usize,
}

impl LtpSummary {
    pub fn probability(&self) -> f64 {
        self.potentiated as f64 / self.trials as f64
    }

    /// Binomial standard error of [`Self::probability`].
    pub fn std_error(&self) -> f64 {
        let p = self.probability();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Runs trials `0..trials` in parallel; the result does not depend on the
/// number of worker threads.
pub fn monte_carlo(cfg: &LtpConfig, seed: u64, trials: usize) -> Result<LtpSummary, WorkloadError> {
    if trials == 0 {
        return Err(WorkloadError::Config("at least one trial is needed".into()));
    }
    let outcomes = (0..trials as u64)
        .into_par_iter()
        .map(|i| run_trial(cfg, seed, i).map(|t| t.potentiated()))
        .collect::<Result<Vec<bool>, _>>()?;
    Ok(LtpSummary {
        trials,
        potentiated: outcomes.iter().filter(|&&b| b).count(),
    })
}
