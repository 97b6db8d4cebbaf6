//! Single-layer 10-neuron MNIST classifier: SDSP training with a teacher,
//! offline weight upload, and rate / rank-order inference.

use std::fmt::Write as _;
use std::path::Path;

use odin_core::aer::{InputEvent, OutputEvent};
use odin_core::energy::{inference_energy, EnergyParams};
use odin_core::engine::{Engine, EngineStats, TimedEvent};
use odin_core::mem::{CoreMemory, SynapseEntry, MAX_WEIGHT};
use odin_core::neuron::{NeuronParams, NeuronRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coding::{merge, periodic, poisson_times, rank_order_encode, rate_encode_with, TimeBase};
use crate::mnist::Dataset;
use crate::preprocess::{preprocess, PreprocessConfig, Sample16, PIXELS, SIDE};
use crate::rng::sample_rng;
use crate::WorkloadError;

pub const CLASSES: usize = 10;

/// Stream offset separating inference RNG streams from training ones.
const INFER_STREAM: u64 = 1 << 40;

/// The frozen MNIST configuration shipped with the crate.
pub const DEFAULT_CONFIG: &str = include_str!("../presets/mnist.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MnistConfig {
    pub preprocess: PreprocessConfig,
    pub time: TimeConfig,
    pub train: TrainConfig,
    pub infer: InferConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    /// Engine cycles per emulated second.
    pub cycles_per_second: f64,
    /// Clock frequency used for energy estimates.
    pub f_clk: f64,
}

impl TimeConfig {
    pub fn base(&self) -> TimeBase {
        TimeBase {
            cycles_per_second: self.cycles_per_second,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TeacherConfig {
    /// Poisson rate (Hz) of teacher events to the labeled neuron.
    pub target_rate: f64,
    /// Poisson rate (Hz) of teacher events to each of the other nine neurons.
    pub nontarget_rate: f64,
    /// Virtual-synapse weight of target teacher events.
    pub weight: i8,
    /// Virtual-synapse weight of non-target teacher events.
    pub nontarget_weight: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub samples: usize,
    /// Input rate (Hz) of a full-intensity pixel.
    pub max_rate: f64,
    /// Presentation time per sample, seconds. The teacher is active throughout.
    pub duration: f64,
    pub time_ref_rate: f64,
    /// Rate of bistability refreshes during training; 0 disables them.
    pub bistability_rate: f64,
    pub init_weight: u8,
    pub neuron: NeuronParams,
    pub teacher: TeacherConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateInferConfig {
    pub max_rate: f64,
    pub duration: f64,
    pub time_ref_rate: f64,
    pub neuron: NeuronParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankInferConfig {
    /// Upper bound on sequence repetitions before giving up.
    pub max_reps: usize,
    /// A time reference follows every this many input events; 0 for none.
    #[serde(default)]
    pub time_ref_every: usize,
    pub neuron: NeuronParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InferConfig {
    pub rate: RateInferConfig,
    pub rank: RankInferConfig,
}

impl MnistConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, WorkloadError> {
        let cfg: Self = toml::from_str(s).map_err(|e| WorkloadError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, WorkloadError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        for p in [&self.train.neuron, &self.infer.rate.neuron, &self.infer.rank.neuron] {
            p.validate()?;
        }
        if self.train.init_weight > MAX_WEIGHT {
            return Err(WorkloadError::Config(format!(
                "init_weight {} exceeds {MAX_WEIGHT}",
                self.train.init_weight
            )));
        }
        if !(self.time.cycles_per_second > 0.0 && self.time.f_clk > 0.0) {
            return Err(WorkloadError::Config("time base must be positive".into()));
        }
        Ok(())
    }
}

impl Default for MnistConfig {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG).expect("shipped MNIST config is valid")
    }
}

/// Synaptic weights of the 10 output neurons, `w[class][pixel]` in 0..=7.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Weights(pub [[u8; PIXELS]; CLASSES]);

impl Weights {
    pub fn uniform(w: u8) -> Self {
        Self([[w; PIXELS]; CLASSES])
    }

    pub fn from_memory(mem: &CoreMemory) -> Self {
        let mut w = [[0; PIXELS]; CLASSES];
        for (j, row) in w.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = mem.synapses.get(i as u8, j as u8).weight;
            }
        }
        Self(w)
    }

    /// Writes the weights into a memory image with the given plasticity bit.
    pub fn store(&self, mem: &mut CoreMemory, map_en: bool) -> Result<(), WorkloadError> {
        for (j, row) in self.0.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                mem.synapses.set(i as u8, j as u8, SynapseEntry::new(v, map_en)?)?;
            }
        }
        Ok(())
    }

    /// Text form: 10 rows of 256 whitespace-separated integers.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in &self.0 {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, WorkloadError> {
        let rows = parse_matrix(text)?;
        let mut w = [[0; PIXELS]; CLASSES];
        for (j, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                if !(0..=MAX_WEIGHT as i32).contains(&v) {
                    return Err(WorkloadError::InvalidWeight { row: j, col: i, value: v });
                }
                w[j][i] = v as u8;
            }
        }
        Ok(Self(w))
    }

    /// Binary PGM (P5) of one class map, 16x16, scaled to 0..255.
    pub fn to_pgm(&self, class: usize) -> Vec<u8> {
        let mut out = format!("P5\n{SIDE} {SIDE}\n255\n").into_bytes();
        out.extend(self.0[class].iter().map(|&v| (v as u32 * 255 / MAX_WEIGHT as u32) as u8));
        out
    }
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<i32>>, WorkloadError> {
    let rows: Vec<Vec<i32>> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(n, l)| {
            let row = l
                .split_whitespace()
                .map(|t| t.parse::<i32>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| WorkloadError::WeightFile {
                    line: n + 1,
                    msg: e.to_string(),
                })?;
            if row.len() != PIXELS {
                return Err(WorkloadError::WeightFile {
                    line: n + 1,
                    msg: format!("expected {PIXELS} values, got {}", row.len()),
                });
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    if rows.len() != CLASSES {
        return Err(WorkloadError::WeightFile {
            line: 0,
            msg: format!("expected {CLASSES} rows, got {}", rows.len()),
        });
    }
    Ok(rows)
}

/// Maps offline weights in [-4, 3] to [0, 7] by adding 4.
pub fn load_external_weights(text: &str) -> Result<Weights, WorkloadError> {
    let rows = parse_matrix(text)?;
    let mut w = [[0; PIXELS]; CLASSES];
    for (j, row) in rows.iter().enumerate() {
        for (i, &v) in row.iter().enumerate() {
            if !(-4..=3).contains(&v) {
                return Err(WorkloadError::InvalidWeight { row: j, col: i, value: v });
            }
            w[j][i] = (v + 4) as u8;
        }
    }
    Ok(Weights(w))
}

/// Memory image for the 10-neuron network: neurons 0..=9 use `params`,
/// `max_neuron` is 9 and output spikes are not fed back.
pub fn network_memory(weights: &Weights, params: &NeuronParams, plastic: bool) -> Result<CoreMemory, WorkloadError> {
    let mut mem = CoreMemory::default();
    mem.config.max_neuron = (CLASSES - 1) as u8;
    mem.config.open_loop = true;
    for j in 0..CLASSES {
        mem.neurons.set(j as u8, NeuronRecord::new(params.clone()));
    }
    weights.store(&mut mem, plastic)?;
    Ok(mem)
}

fn set_params(engine: &mut Engine, params: &NeuronParams) {
    for j in 0..CLASSES {
        engine.memory_mut().neurons.get_mut(j as u8).params = params.clone();
    }
}

/// Input trace of one training presentation: rate-coded pixels, teacher
/// events, time references and optional bistability refreshes.
pub fn training_trace(sample: &Sample16, cfg: &MnistConfig, seed: u64, index: u64) -> Vec<TimedEvent> {
    let tc = &cfg.train;
    let tb = cfg.time.base();
    let mut rng = sample_rng(seed, index);
    let input = rate_encode_with(&mut rng, sample, tc.duration, tc.max_rate, tb, 0);
    let mut teacher = Vec::new();
    for j in 0..CLASSES as u8 {
        let (rate, weight) = if j == sample.label {
            (tc.teacher.target_rate, tc.teacher.weight)
        } else {
            (tc.teacher.nontarget_rate, tc.teacher.nontarget_weight)
        };
        if weight == 0 {
            continue;
        }
        teacher.extend(
            poisson_times(&mut rng, rate, tc.duration, tb, 0)
                .into_iter()
                .map(|t| TimedEvent::new(t, InputEvent::VirtualSynapse { dest: j, weight })),
        );
    }
    teacher.sort_by_key(|e| e.t_cycle);
    let trefs = periodic(InputEvent::NeuronTimeRef, tc.time_ref_rate, tc.duration, tb, 0);
    let bist = periodic(InputEvent::BistabilityTimeRef, tc.bistability_rate, tc.duration, tb, 0);
    merge(vec![trefs, bist, teacher, input])
}

/// One pass of teacher-driven SDSP over `train`. Neuron states are cleared
/// before each presentation; the weights carry over.
pub fn train_sdsp(train: &[Sample16], cfg: &MnistConfig, seed: u64) -> Result<(Weights, EngineStats), WorkloadError> {
    let init = Weights::uniform(cfg.train.init_weight);
    let mem = network_memory(&init, &cfg.train.neuron, true)?;
    let mut engine = Engine::new(mem);
    let mut total = EngineStats::default();
    for (k, s) in train.iter().enumerate() {
        engine.reset();
        let trace = training_trace(s, cfg, seed, k as u64);
        let r = engine.run(&trace, None)?;
        accumulate(&mut total, &r.stats);
    }
    Ok((Weights::from_memory(engine.memory()), total))
}

pub fn accumulate(total: &mut EngineStats, s: &EngineStats) {
    total.cycle_count += s.cycle_count;
    total.sop_count += s.sop_count;
    total.output_spike_count += s.output_spike_count;
    total.dropped_events += s.dropped_events;
    total.late_events += s.late_events;
    total.idle_cycles += s.idle_cycles;
    total.input_events += s.input_events;
    total.virtual_events += s.virtual_events;
    total.time_refs += s.time_refs;
    total.bistability_refs += s.bistability_refs;
    total.packets += s.packets;
    total.synapse_word_reads += s.synapse_word_reads;
    total.synapse_word_writes += s.synapse_word_writes;
    total.neuron_reads += s.neuron_reads;
    total.neuron_writes += s.neuron_writes;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coding {
    Rate,
    Rank,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    /// `None` when no output neuron spiked.
    pub class: Option<u8>,
    pub counts: [u32; CLASSES],
    pub stats: EngineStats,
}

/// Rate-code trace for inference: Poisson pixels plus time references.
pub fn rate_inference_trace(sample: &Sample16, cfg: &MnistConfig, seed: u64, index: u64) -> Vec<TimedEvent> {
    let rc = &cfg.infer.rate;
    let tb = cfg.time.base();
    let mut rng = sample_rng(seed, INFER_STREAM + index);
    let input = rate_encode_with(&mut rng, sample, rc.duration, rc.max_rate, tb, 0);
    let trefs = periodic(InputEvent::NeuronTimeRef, rc.time_ref_rate, rc.duration, tb, 0);
    merge(vec![trefs, input])
}

/// Rank-order trace: the ordered sequence repeated `reps` times, one event
/// per cycle, with a time reference after every `time_ref_every` inputs.
pub fn rank_inference_trace(sample: &Sample16, reps: usize, time_ref_every: usize) -> Vec<TimedEvent> {
    let seq = rank_order_encode(sample);
    let mut out = Vec::with_capacity(seq.len() * reps);
    for (k, source) in (0..reps).flat_map(|_| seq.iter().copied()).enumerate() {
        out.push(InputEvent::NeuronSpike { source });
        if time_ref_every > 0 && (k + 1) % time_ref_every == 0 {
            out.push(InputEvent::NeuronTimeRef);
        }
    }
    out.into_iter()
        .enumerate()
        .map(|(t, ev)| TimedEvent::new(t as u64, ev))
        .collect()
}

/// Runs one inference on an engine that already holds the (static) weights.
pub fn infer(engine: &mut Engine, sample: &Sample16, coding: Coding, cfg: &MnistConfig, seed: u64, index: u64) -> Result<Inference, WorkloadError> {
    engine.reset();
    let mut counts = [0u32; CLASSES];
    match coding {
        Coding::Rate => {
            set_params(engine, &cfg.infer.rate.neuron);
            let trace = rate_inference_trace(sample, cfg, seed, index);
            let r = engine.run(&trace, None)?;
            for e in &r.events {
                if let OutputEvent::Standard { source } = e.event {
                    if (source as usize) < CLASSES {
                        counts[source as usize] += 1;
                    }
                }
            }
            let max = *counts.iter().max().unwrap_or(&0);
            let class = (max > 0).then(|| counts.iter().position(|&c| c == max).unwrap() as u8);
            Ok(Inference {
                class,
                counts,
                stats: r.stats,
            })
        }
        Coding::Rank => {
            set_params(engine, &cfg.infer.rank.neuron);
            let trace = rank_inference_trace(sample, cfg.infer.rank.max_reps, cfg.infer.rank.time_ref_every);
            let r = engine.run_until(&trace, None, |e| matches!(e.event, OutputEvent::Standard { .. }))?;
            let class = r.events.iter().find_map(|e| match e.event {
                OutputEvent::Standard { source } => Some(source),
                _ => None,
            });
            if let Some(c) = class {
                counts[c as usize] = 1;
            }
            Ok(Inference {
                class,
                counts,
                stats: r.stats,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub coding: Coding,
    pub samples: usize,
    pub correct: usize,
    pub no_decision: usize,
    pub mean_sops: f64,
    pub mean_cycles: f64,
    /// Mean energy per inference, joules.
    pub mean_energy: f64,
    pub predictions: Vec<Option<u8>>,
}

impl EvalReport {
    pub fn accuracy(&self) -> f64 {
        if self.samples == 0 {
            return 0.0;
        }
        self.correct as f64 / self.samples as f64
    }
}

/// Evaluates `test` in parallel. Each sample uses its own RNG stream, so the
/// result does not depend on the number of workers.
pub fn evaluate(weights: &Weights, test: &[Sample16], coding: Coding, cfg: &MnistConfig, energy: &EnergyParams, seed: u64) -> Result<EvalReport, WorkloadError> {
    let params = match coding {
        Coding::Rate => &cfg.infer.rate.neuron,
        Coding::Rank => &cfg.infer.rank.neuron,
    };
    let mem = network_memory(weights, params, false)?;
    let results: Vec<Inference> = test
        .par_iter()
        .enumerate()
        .map_init(
            || Engine::new(mem.clone()),
            |e, (k, s)| infer(e, s, coding, cfg, seed, k as u64),
        )
        .collect::<Result<_, _>>()?;
    let n = test.len().max(1) as f64;
    let mut rep = EvalReport {
        coding,
        samples: test.len(),
        correct: 0,
        no_decision: 0,
        mean_sops: 0.0,
        mean_cycles: 0.0,
        mean_energy: 0.0,
        predictions: Vec::with_capacity(test.len()),
    };
    for (r, s) in results.iter().zip(test) {
        rep.correct += (r.class == Some(s.label)) as usize;
        rep.no_decision += r.class.is_none() as usize;
        rep.mean_sops += r.stats.sop_count as f64 / n;
        rep.mean_cycles += r.stats.cycle_count as f64 / n;
        rep.mean_energy += inference_energy(&r.stats, energy, cfg.time.f_clk) / n;
        rep.predictions.push(r.class);
    }
    Ok(rep)
}

/// Mean weight over pixels above / at-or-below `level` in the class mean image.
pub fn template_contrast(weights: &Weights, data: &[Sample16], class: u8, level: u8) -> Option<(f64, f64)> {
    let members: Vec<_> = data.iter().filter(|s| s.label == class).collect();
    if members.is_empty() {
        return None;
    }
    let (mut hi, mut nh, mut lo, mut nl) = (0.0, 0, 0.0, 0);
    for p in 0..PIXELS {
        let mean = members.iter().map(|s| s.pixels[p] as f64).sum::<f64>() / members.len() as f64;
        let w = weights.0[class as usize][p] as f64;
        if mean > level as f64 {
            hi += w;
            nh += 1;
        } else {
            lo += w;
            nl += 1;
        }
    }
    (nh > 0 && nl > 0).then(|| (hi / nh as f64, lo / nl as f64))
}

/// Preprocesses the first `limit` images of a dataset.
pub fn prepare(data: &Dataset, cfg: &PreprocessConfig, limit: Option<usize>) -> Vec<Sample16> {
    let n = limit.map_or(data.len(), |l| l.min(data.len()));
    data.images[..n]
        .par_iter()
        .zip(&data.labels[..n])
        .map(|(img, &label)| preprocess(img, label, cfg))
        .collect()
}
