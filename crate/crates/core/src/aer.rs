//! 17-bit input address-event space and the output bus.
//!
//! ```text
//! 0_ssss_ssss_dddd_dddd   single synapse   source s -> destination d
//! 1_0000_xxxx_ssss_ssss   neuron spike     source s (x must be 0)
//! 1_0001_wwww_dddd_dddd   virtual synapse  signed 4-bit weight w -> d
//! 1_0010_0000_0000_0000   neuron time reference
//! 1_0010_0000_0000_0001   bistability time reference
//! ```
//!
//! Every other pattern with bit 16 set is reserved.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mem::OutputMode;

pub const ADDR_BITS: u32 = 17;
pub const ADDR_MASK: u32 = (1 << ADDR_BITS) - 1;

const CTRL: u32 = 1 << 16;
const KIND_SPIKE: u32 = 0x0;
const KIND_VIRTUAL: u32 = 0x1;
const KIND_TIME_REF: u32 = 0x2;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum AerError {
    #[error("address {0:#x} does not fit in 17 bits")]
    OutOfRange(u32),
    #[error("address {0:#07x} is reserved")]
    Reserved(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputEvent {
    NeuronSpike { source: u8 },
    SingleSynapse { source: u8, dest: u8 },
    /// `weight` is in [-8, 7].
    VirtualSynapse { dest: u8, weight: i8 },
    NeuronTimeRef,
    BistabilityTimeRef,
}

pub fn decode_input(addr: u32) -> Result<InputEvent, AerError> {
    if addr > ADDR_MASK {
        return Err(AerError::OutOfRange(addr));
    }
    if addr & CTRL == 0 {
        return Ok(InputEvent::SingleSynapse {
            source: (addr >> 8) as u8,
            dest: addr as u8,
        });
    }
    let kind = (addr >> 12) & 0xF;
    let mid = (addr >> 8) & 0xF;
    let low = addr & 0xFF;
    match kind {
        KIND_SPIKE if mid == 0 => Ok(InputEvent::NeuronSpike { source: low as u8 }),
        KIND_VIRTUAL => Ok(InputEvent::VirtualSynapse {
            dest: low as u8,
            weight: ((mid as i8) << 4) >> 4,
        }),
        KIND_TIME_REF if addr & 0xFFF == 0 => Ok(InputEvent::NeuronTimeRef),
        KIND_TIME_REF if addr & 0xFFF == 1 => Ok(InputEvent::BistabilityTimeRef),
        _ => Err(AerError::Reserved(addr)),
    }
}

/// Encodes an event. Virtual-synapse weights outside [-8, 7] are truncated
/// to their low four bits.
pub fn encode_input(ev: InputEvent) -> u32 {
    match ev {
        InputEvent::SingleSynapse { source, dest } => (source as u32) << 8 | dest as u32,
        InputEvent::NeuronSpike { source } => CTRL | source as u32,
        InputEvent::VirtualSynapse { dest, weight } => {
            CTRL | KIND_VIRTUAL << 12 | ((weight as u8 as u32) & 0xF) << 8 | dest as u32
        }
        InputEvent::NeuronTimeRef => CTRL | KIND_TIME_REF << 12,
        InputEvent::BistabilityTimeRef => CTRL | KIND_TIME_REF << 12 | 1,
    }
}

/// State data sent in monitoring mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MonitorPayload {
    pub neuron: u8,
    pub membrane: u8,
    pub mem_neg: bool,
    pub calcium: u8,
    /// Weight of the monitored synapse on the monitored neuron's tree.
    pub weight: u8,
    pub fired: bool,
}

impl MonitorPayload {
    /// `[23:16] neuron, [15] fired, [14:12] weight, [11:9] calcium, [8] sign, [7:0] membrane`.
    pub fn to_raw(self) -> u32 {
        (self.neuron as u32) << 16
            | (self.fired as u32) << 15
            | (self.weight as u32 & 7) << 12
            | (self.calcium as u32 & 7) << 9
            | (self.mem_neg as u32) << 8
            | self.membrane as u32
    }

    pub fn from_raw(raw: u32) -> Self {
        Self {
            neuron: (raw >> 16) as u8,
            fired: raw >> 15 & 1 != 0,
            weight: (raw >> 12 & 7) as u8,
            calcium: (raw >> 9 & 7) as u8,
            mem_neg: raw >> 8 & 1 != 0,
            membrane: raw as u8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OutputEvent {
    Standard { source: u8 },
    Monitor(MonitorPayload),
}

impl OutputEvent {
    pub fn to_raw(self) -> u32 {
        match self {
            OutputEvent::Standard { source } => source as u32,
            OutputEvent::Monitor(m) => m.to_raw(),
        }
    }
}

pub fn emit_output(mode: OutputMode, source: u8, snapshot: MonitorPayload) -> OutputEvent {
    match mode {
        OutputMode::Standard => OutputEvent::Standard { source },
        OutputMode::Monitoring => OutputEvent::Monitor(MonitorPayload {
            neuron: source,
            ..snapshot
        }),
    }
}
