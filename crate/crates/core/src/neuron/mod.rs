//! Per-neuron update logic and the 126-bit neuron record.
//!
//! Record layout (bit 0 is the LSB of the 128-bit slot):
//!
//! ```text
//! 0          model select (0 = LIF, 1 = phenomenological)
//! 1..=70     parameters   (70 bits, field order as in `NeuronParams`)
//! 71..=125   state        (55 bits, field order as in `NeuronState`, top 3 reserved)
//! 126..=127  padding
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub mod lif;
pub mod phen;

pub const PARAM_BITS: u32 = 70;
pub const STATE_BITS: u32 = 55;
pub const RECORD_BITS: u32 = 1 + PARAM_BITS + STATE_BITS;

pub const MAX_CALCIUM: u8 = 7;
pub const MAX_THR_ADJ: u8 = 31;
pub const STIM_MIN: i8 = -16;
pub const STIM_MAX: i8 = 15;
pub const ACC_MIN: i16 = -1024;
pub const ACC_MAX: i16 = 1023;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamError {
    #[error("field `{field}` = {value} exceeds {bits} bits")]
    Width {
        field: &'static str,
        value: u32,
        bits: u32,
    },
    #[error("calcium thresholds must satisfy theta1 <= theta2 <= theta3 (got {0}, {1}, {2})")]
    CalciumOrder(u8, u8, u8),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronModel {
    #[default]
    Lif,
    Phen,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    #[default]
    Fixed,
    /// Threshold steps up on every output spike.
    Adaptation,
    /// Threshold steps up on every stimulated time reference.
    Accommodation,
    /// Threshold steps down on every inhibitory input.
    Variability,
}

impl ThresholdMode {
    fn code(self) -> u32 {
        match self {
            Self::Fixed => 0,
            Self::Adaptation => 1,
            Self::Accommodation => 2,
            Self::Variability => 3,
        }
    }

    fn from_code(c: u32) -> Self {
        match c & 3 {
            0 => Self::Fixed,
            1 => Self::Adaptation,
            2 => Self::Accommodation,
            _ => Self::Variability,
        }
    }
}

/// Per-neuron parameters. Only the LIF and SDSP fields are used when
/// `model` is [`NeuronModel::Lif`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeuronParams {
    pub model: NeuronModel,
    pub threshold: u8,
    pub leak: u8,
    /// Time references spent refractory after a spike (3 bits).
    pub refractory: u8,
    pub theta_m: u8,
    pub theta1: u8,
    pub theta2: u8,
    pub theta3: u8,
    /// Calcium decrements once per this many time references; 0 disables (4 bits).
    pub ca_leak_div: u8,
    /// Input accumulator depth: one accumulated event per 4^depth weight units (2 bits).
    pub fi_depth: u8,
    pub burst_n_minus_1: u8,
    pub burst_isi: u8,
    pub phasic: bool,
    pub mixed: bool,
    pub class2: bool,
    pub rebound: bool,
    pub inhib_inv: bool,
    pub bistable: bool,
    pub latency: bool,
    pub dap: bool,
    pub oscillate: bool,
    /// Stimulation strength threshold per time reference (3 bits).
    pub stim_thr: u8,
    pub thr_mode: ThresholdMode,
    /// Threshold step minus one (2 bits).
    pub thr_step: u8,
    /// Threshold recovery per time reference (1 bit).
    pub thr_recov: u8,
    /// Latency / after-potential window in time references (3 bits).
    pub win_len: u8,
    /// Oscillation half period minus one, in time references (2 bits).
    pub osc_period: u8,
}

/// Per-neuron dynamic state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeuronState {
    /// Membrane magnitude.
    pub membrane: u8,
    /// Sign of the phenomenological membrane (LIF membranes are never negative).
    pub mem_neg: bool,
    pub calcium: u8,
    pub ca_cnt: u8,
    pub input_acc: i16,
    pub refr_cnt: u8,
    pub burst_locked: bool,
    /// Net accumulated input seen by the stimulation detector since the last time reference.
    pub stim_cur: i8,
    pub episode_fired: bool,
    pub inhib_seen: bool,
    pub bist_on: bool,
    pub stim_active: bool,
    pub thr_adj: u8,
    pub win_cnt: u8,
    pub win_pending: bool,
    pub osc_cnt: u8,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeuronRecord {
    pub params: NeuronParams,
    pub state: NeuronState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stimulus {
    /// Signed synaptic contribution (sign already resolved from `syn_sign`).
    Syn(i16),
    TimeRef,
}

/// Output-stage descriptor of a firing neuron.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Burst {
    pub n_minus_1: u8,
    pub isi_code: u8,
}

impl Burst {
    pub const SINGLE: Burst = Burst {
        n_minus_1: 0,
        isi_code: 0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SdspThresholds {
    pub theta_m: u8,
    pub theta1: u8,
    pub theta2: u8,
    pub theta3: u8,
}

/// SDSP up/down conditions sampled at the pre-synaptic spike.
#[inline]
pub fn sdsp_flags(membrane: u8, calcium: u8, th: SdspThresholds) -> (bool, bool) {
    let above = membrane >= th.theta_m;
    let up = above && th.theta1 <= calcium && calcium < th.theta3;
    let down = !above && th.theta1 <= calcium && calcium < th.theta2;
    (up, down)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalciumTrigger {
    OwnSpike,
    TimeRef,
}

/// Calcium update. The leak divider counter lives in `state.ca_cnt`.
pub fn calcium_step(state: &mut NeuronState, ca_leak_div: u8, trigger: CalciumTrigger) {
    match trigger {
        CalciumTrigger::OwnSpike => state.calcium = (state.calcium + 1).min(MAX_CALCIUM),
        CalciumTrigger::TimeRef => {
            if ca_leak_div == 0 {
                return;
            }
            state.ca_cnt += 1;
            if state.ca_cnt >= ca_leak_div {
                state.ca_cnt = 0;
                state.calcium = state.calcium.saturating_sub(1);
            }
        }
    }
}

impl NeuronParams {
    pub fn lif(threshold: u8, leak: u8) -> Self {
        Self {
            threshold,
            leak,
            ..Self::default()
        }
    }

    pub fn sdsp_thresholds(&self) -> SdspThresholds {
        SdspThresholds {
            theta_m: self.theta_m,
            theta1: self.theta1,
            theta2: self.theta2,
            theta3: self.theta3,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for (field, value, bits) in [
            ("refractory", self.refractory, 3),
            ("theta1", self.theta1, 3),
            ("theta2", self.theta2, 3),
            ("theta3", self.theta3, 3),
            ("ca_leak_div", self.ca_leak_div, 4),
            ("fi_depth", self.fi_depth, 2),
            ("burst_n_minus_1", self.burst_n_minus_1, 3),
            ("burst_isi", self.burst_isi, 3),
            ("stim_thr", self.stim_thr, 3),
            ("thr_step", self.thr_step, 2),
            ("thr_recov", self.thr_recov, 1),
            ("win_len", self.win_len, 3),
            ("osc_period", self.osc_period, 2),
        ] {
            if value as u32 >> bits != 0 {
                return Err(ParamError::Width {
                    field,
                    value: value as u32,
                    bits,
                });
            }
        }
        if !(self.theta1 <= self.theta2 && self.theta2 <= self.theta3) {
            return Err(ParamError::CalciumOrder(self.theta1, self.theta2, self.theta3));
        }
        Ok(())
    }

    fn write_bits(&self, w: &mut BitWriter) {
        w.put(self.threshold as u128, 8);
        w.put(self.leak as u128, 8);
        w.put(self.refractory as u128, 3);
        w.put(self.theta_m as u128, 8);
        w.put(self.theta1 as u128, 3);
        w.put(self.theta2 as u128, 3);
        w.put(self.theta3 as u128, 3);
        w.put(self.ca_leak_div as u128, 4);
        w.put(self.fi_depth as u128, 2);
        w.put(self.burst_n_minus_1 as u128, 3);
        w.put(self.burst_isi as u128, 3);
        for flag in [
            self.phasic,
            self.mixed,
            self.class2,
            self.rebound,
            self.inhib_inv,
            self.bistable,
            self.latency,
            self.dap,
            self.oscillate,
        ] {
            w.put(flag as u128, 1);
        }
        w.put(self.stim_thr as u128, 3);
        w.put(self.thr_mode.code() as u128, 2);
        w.put(self.thr_step as u128, 2);
        w.put(self.thr_recov as u128, 1);
        w.put(self.win_len as u128, 3);
        w.put(self.osc_period as u128, 2);
    }

    fn read_bits(model: NeuronModel, r: &mut BitReader) -> Self {
        let mut p = Self {
            model,
            threshold: r.take(8) as u8,
            leak: r.take(8) as u8,
            refractory: r.take(3) as u8,
            theta_m: r.take(8) as u8,
            theta1: r.take(3) as u8,
            theta2: r.take(3) as u8,
            theta3: r.take(3) as u8,
            ca_leak_div: r.take(4) as u8,
            fi_depth: r.take(2) as u8,
            burst_n_minus_1: r.take(3) as u8,
            burst_isi: r.take(3) as u8,
            ..Self::default()
        };
        p.phasic = r.flag();
        p.mixed = r.flag();
        p.class2 = r.flag();
        p.rebound = r.flag();
        p.inhib_inv = r.flag();
        p.bistable = r.flag();
        p.latency = r.flag();
        p.dap = r.flag();
        p.oscillate = r.flag();
        p.stim_thr = r.take(3) as u8;
        p.thr_mode = ThresholdMode::from_code(r.take(2) as u32);
        p.thr_step = r.take(2) as u8;
        p.thr_recov = r.take(1) as u8;
        p.win_len = r.take(3) as u8;
        p.osc_period = r.take(2) as u8;
        p
    }
}

impl NeuronState {
    /// Signed membrane potential.
    #[inline]
    pub fn potential(&self) -> i16 {
        if self.mem_neg {
            -(self.membrane as i16)
        } else {
            self.membrane as i16
        }
    }

    #[inline]
    pub fn set_potential(&mut self, v: i16) {
        let v = v.clamp(-255, 255);
        self.membrane = v.unsigned_abs() as u8;
        self.mem_neg = v < 0;
    }

    /// Membrane value presented to the SDSP comparators.
    #[inline]
    pub fn sdsp_membrane(&self) -> u8 {
        if self.mem_neg {
            0
        } else {
            self.membrane
        }
    }

    fn write_bits(&self, w: &mut BitWriter) {
        w.put(self.membrane as u128, 8);
        w.put(self.mem_neg as u128, 1);
        w.put(self.calcium as u128, 3);
        w.put(self.ca_cnt as u128, 4);
        w.put(self.input_acc as u16 as u128, 11);
        w.put(self.refr_cnt as u128, 3);
        w.put(self.burst_locked as u128, 1);
        w.put(self.stim_cur as u8 as u128, 5);
        w.put(self.episode_fired as u128, 1);
        w.put(self.inhib_seen as u128, 1);
        w.put(self.bist_on as u128, 1);
        w.put(self.stim_active as u128, 1);
        w.put(self.thr_adj as u128, 5);
        w.put(self.win_cnt as u128, 3);
        w.put(self.win_pending as u128, 1);
        w.put(self.osc_cnt as u128, 3);
        w.put(0, 3);
    }

    fn read_bits(r: &mut BitReader) -> Self {
        let mut s = Self {
            membrane: r.take(8) as u8,
            mem_neg: r.flag(),
            calcium: r.take(3) as u8,
            ca_cnt: r.take(4) as u8,
            input_acc: sign_extend(r.take(11), 11) as i16,
            refr_cnt: r.take(3) as u8,
            burst_locked: r.flag(),
            stim_cur: sign_extend(r.take(5), 5) as i8,
            ..Self::default()
        };
        s.episode_fired = r.flag();
        s.inhib_seen = r.flag();
        s.bist_on = r.flag();
        s.stim_active = r.flag();
        s.thr_adj = r.take(5) as u8;
        s.win_cnt = r.take(3) as u8;
        s.win_pending = r.flag();
        s.osc_cnt = r.take(3) as u8;
        s
    }
}

impl NeuronRecord {
    pub fn new(params: NeuronParams) -> Self {
        Self {
            params,
            state: NeuronState::default(),
        }
    }

    /// Applies one stimulus. Returns the output descriptor if the neuron fired.
    pub fn step(&mut self, stim: Stimulus) -> Option<Burst> {
        match self.params.model {
            NeuronModel::Lif => lif::lif_step(&mut self.state, &self.params, stim).then_some(Burst::SINGLE),
            NeuronModel::Phen => phen::phen_step(&mut self.state, &self.params, stim),
        }
    }

    /// SDSP (up, down) from the current (pre-update) state.
    #[inline]
    pub fn sdsp_flags(&self) -> (bool, bool) {
        sdsp_flags(
            self.state.sdsp_membrane(),
            self.state.calcium,
            self.params.sdsp_thresholds(),
        )
    }

    pub fn unlock_burst(&mut self) {
        self.state.burst_locked = false;
    }

    pub fn to_bits(&self) -> u128 {
        let mut w = BitWriter::default();
        w.put((self.params.model == NeuronModel::Phen) as u128, 1);
        self.params.write_bits(&mut w);
        debug_assert_eq!(w.pos, 1 + PARAM_BITS);
        self.state.write_bits(&mut w);
        debug_assert_eq!(w.pos, RECORD_BITS);
        w.bits
    }

    pub fn from_bits(bits: u128) -> Self {
        let mut r = BitReader { bits, pos: 0 };
        let model = if r.flag() {
            NeuronModel::Phen
        } else {
            NeuronModel::Lif
        };
        let params = NeuronParams::read_bits(model, &mut r);
        let state = NeuronState::read_bits(&mut r);
        Self { params, state }
    }
}

#[derive(Default)]
struct BitWriter {
    bits: u128,
    pos: u32,
}

impl BitWriter {
    fn put(&mut self, value: u128, width: u32) {
        let mask = (1u128 << width) - 1;
        self.bits |= (value & mask) << self.pos;
        self.pos += width;
    }
}

struct BitReader {
    bits: u128,
    pos: u32,
}

impl BitReader {
    fn take(&mut self, width: u32) -> u64 {
        let v = (self.bits >> self.pos) & ((1u128 << width) - 1);
        self.pos += width;
        v as u64
    }

    fn flag(&mut self) -> bool {
        self.take(1) != 0
    }
}

fn sign_extend(v: u64, width: u32) -> i64 {
    let shift = 64 - width;
    ((v << shift) as i64) >> shift
}
