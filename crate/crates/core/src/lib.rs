//! Bit-accurate, event-driven emulator of a 256-neuron / 64k-synapse digital
//! spiking core with on-line spike-driven synaptic plasticity (SDSP).
//!
//! The crate is organised the way the silicon is:
//!
//! * [`mem`]: synapse SRAM, neuron SRAM and the global register map.
//! * [`aer`]: the 17-bit input address-event space and the output bus.
//! * [`plasticity`]: the SDSP weight update and the bistability drift.
//! * [`neuron`]: LIF and phenomenological neuron update logic.
//! * [`scheduler`]: single-spike FIFO plus 57 rotating burst FIFOs.
//! * [`engine`]: the time-multiplexed controller tying it all together.
//! * [`energy`]: the calibrated leakage/idle/per-SOP power model.
//! * [`trace`]: JSON-lines event traces and stats dumps.

pub mod aer;
pub mod energy;
pub mod engine;
pub mod mem;
pub mod neuron;
pub mod plasticity;
pub mod scheduler;
pub mod trace;

/// Number of neurons in the core.
pub const NUM_NEURONS: usize = 256;
/// Number of synapses in the crossbar.
pub const NUM_SYNAPSES: usize = NUM_NEURONS * NUM_NEURONS;

pub use aer::{InputEvent, OutputEvent};
pub use engine::{Engine, EngineError, EngineStats};
pub use mem::{GlobalConfig, SynapseEntry};
pub use neuron::{NeuronModel, NeuronParams, NeuronRecord, NeuronState};
pub use scheduler::{EventPacket, Scheduler};
