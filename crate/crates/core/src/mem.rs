//! On-core memories and the configuration register map.
//!
//! Synapse memory is 8192 × 32-bit words. Each word carries eight 4-bit
//! synapses (3-bit weight + mapping-table bit), laid out source-major so that
//! a neuron spike from source `i` sweeps the 32 contiguous words holding its
//! 256 outgoing synapses, eight destinations per access:
//!
//! ```text
//! word   = source * 32 + dest / 8
//! nibble = dest % 8            (bits 4k..4k+3; weight in [4k+2..4k], map_en at 4k+3)
//! ```
//!
//! Neuron memory holds 256 records of 126 significant bits, each stored in a
//! 128-bit slot (top two bits are padding and always read back as zero).
//!
//! Everything is reachable through a flat 20-bit word address space:
//!
//! | range               | contents                                    |
//! |---------------------|---------------------------------------------|
//! | `0x00000..=0x0000D` | global registers (see `REG_*`)              |
//! | `0x00010..=0x00013` | read-only scheduler status (engine-served)  |
//! | `0x01000..=0x013FF` | neuron memory, 4 words per neuron, LSW first |
//! | `0x02000..=0x03FFF` | synapse memory, word index order            |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::neuron::NeuronRecord;
use crate::{NUM_NEURONS, NUM_SYNAPSES};

pub const SYNAPSES_PER_WORD: usize = 8;
pub const WORDS_PER_SOURCE: usize = NUM_NEURONS / SYNAPSES_PER_WORD;
pub const SYNAPSE_WORDS: usize = NUM_SYNAPSES / SYNAPSES_PER_WORD;
pub const SYNAPSE_IMAGE_BYTES: usize = SYNAPSE_WORDS * 4;
pub const NEURON_SLOT_BYTES: usize = 16;
pub const NEURON_IMAGE_BYTES: usize = NUM_NEURONS * NEURON_SLOT_BYTES;
pub const MAX_WEIGHT: u8 = 7;

pub const REG_SYN_SIGN: u32 = 0x00000;
pub const REG_MONITORED_NEURON: u32 = 0x00008;
pub const REG_MONITORED_SYNAPSE: u32 = 0x00009;
pub const REG_OUTPUT_MODE: u32 = 0x0000A;
pub const REG_OPEN_LOOP: u32 = 0x0000B;
pub const REG_MAX_NEURON: u32 = 0x0000C;
pub const REG_ISI_PERIOD: u32 = 0x0000D;

pub const STATUS_SINGLE_OCCUPANCY: u32 = 0x00010;
pub const STATUS_BURST_OCCUPANCY: u32 = 0x00011;
pub const STATUS_DROPPED: u32 = 0x00012;
pub const STATUS_LATE: u32 = 0x00013;

pub const NEURON_BASE: u32 = 0x01000;
pub const NEURON_WORDS: u32 = (NUM_NEURONS * 4) as u32;
pub const SYNAPSE_BASE: u32 = 0x02000;
pub const ADDRESS_MASK: u32 = 0xF_FFFF;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MemError {
    #[error("synapse weight {0} does not fit in 3 bits")]
    InvalidWeight(u8),
    #[error("address {0:#07x} is not mapped")]
    AddressFault(u32),
    #[error("address {0:#07x} is read-only")]
    ReadOnly(u32),
    #[error("image has {actual} bytes, expected {expected}")]
    ImageSize { expected: usize, actual: usize },
}

/// One 4-bit synapse.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SynapseEntry {
    pub weight: u8,
    /// Mapping-table bit: plasticity is enabled when set.
    pub map_en: bool,
}

impl SynapseEntry {
    pub fn new(weight: u8, map_en: bool) -> Result<Self, MemError> {
        if weight > MAX_WEIGHT {
            return Err(MemError::InvalidWeight(weight));
        }
        Ok(Self { weight, map_en })
    }

    #[inline]
    pub fn to_nibble(self) -> u32 {
        (self.weight as u32 & 0x7) | ((self.map_en as u32) << 3)
    }

    #[inline]
    pub fn from_nibble(nibble: u32) -> Self {
        Self {
            weight: (nibble & 0x7) as u8,
            map_en: nibble & 0x8 != 0,
        }
    }
}

pub fn pack_synapse_word(entries: &[SynapseEntry; 8]) -> Result<u32, MemError> {
    let mut word = 0u32;
    for (k, e) in entries.iter().enumerate() {
        if e.weight > MAX_WEIGHT {
            return Err(MemError::InvalidWeight(e.weight));
        }
        word |= e.to_nibble() << (4 * k);
    }
    Ok(word)
}

pub fn unpack_synapse_word(word: u32) -> [SynapseEntry; 8] {
    std::array::from_fn(|k| SynapseEntry::from_nibble(word >> (4 * k)))
}

/// Word index and nibble position of synapse `source → dest`.
#[inline]
pub fn synapse_location(source: u8, dest: u8) -> (usize, usize) {
    (
        source as usize * WORDS_PER_SOURCE + dest as usize / SYNAPSES_PER_WORD,
        dest as usize % SYNAPSES_PER_WORD,
    )
}

#[derive(Clone, PartialEq, Eq)]
pub struct SynapseMemory {
    words: Vec<u32>,
}

impl Default for SynapseMemory {
    fn default() -> Self {
        Self {
            words: vec![0; SYNAPSE_WORDS],
        }
    }
}

impl std::fmt::Debug for SynapseMemory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let nonzero = self.words.iter().filter(|w| **w != 0).count();
        write!(f, "SynapseMemory {{ nonzero_words: {nonzero} }}")
    }
}

impl SynapseMemory {
    #[inline]
    pub fn read_word(&self, index: usize) -> u32 {
        self.words[index]
    }

    #[inline]
    pub fn write_word(&mut self, index: usize, word: u32) {
        self.words[index] = word;
    }

    pub fn words(&self) -> &[u32] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u32] {
        &mut self.words
    }

    pub fn get(&self, source: u8, dest: u8) -> SynapseEntry {
        let (w, k) = synapse_location(source, dest);
        SynapseEntry::from_nibble(self.words[w] >> (4 * k))
    }

    pub fn set(&mut self, source: u8, dest: u8, entry: SynapseEntry) -> Result<(), MemError> {
        if entry.weight > MAX_WEIGHT {
            return Err(MemError::InvalidWeight(entry.weight));
        }
        let (w, k) = synapse_location(source, dest);
        let shift = 4 * k;
        self.words[w] = (self.words[w] & !(0xF << shift)) | (entry.to_nibble() << shift);
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.words.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MemError> {
        if bytes.len() != SYNAPSE_IMAGE_BYTES {
            return Err(MemError::ImageSize {
                expected: SYNAPSE_IMAGE_BYTES,
                actual: bytes.len(),
            });
        }
        let words = bytes
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        Ok(Self { words })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronMemory {
    records: Vec<NeuronRecord>,
}

impl Default for NeuronMemory {
    fn default() -> Self {
        Self {
            records: vec![NeuronRecord::default(); NUM_NEURONS],
        }
    }
}

impl NeuronMemory {
    #[inline]
    pub fn get(&self, addr: u8) -> &NeuronRecord {
        &self.records[addr as usize]
    }

    #[inline]
    pub fn get_mut(&mut self, addr: u8) -> &mut NeuronRecord {
        &mut self.records[addr as usize]
    }

    pub fn set(&mut self, addr: u8, record: NeuronRecord) {
        self.records[addr as usize] = record;
    }

    pub fn records(&self) -> &[NeuronRecord] {
        &self.records
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.records
            .iter()
            .flat_map(|r| r.to_bits().to_le_bytes())
            .collect()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MemError> {
        if bytes.len() != NEURON_IMAGE_BYTES {
            return Err(MemError::ImageSize {
                expected: NEURON_IMAGE_BYTES,
                actual: bytes.len(),
            });
        }
        let records = bytes
            .chunks_exact(NEURON_SLOT_BYTES)
            .map(|c| NeuronRecord::from_bits(u128::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Ok(Self { records })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    #[default]
    Standard,
    Monitoring,
}

/// Chip-global configuration registers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalConfig {
    /// Bit `i` set ⇒ source address `i` is inhibitory.
    pub syn_sign: [u32; 8],
    pub monitored_neuron: u8,
    /// Source address of the monitored synapse on the monitored neuron's tree.
    pub monitored_synapse: u8,
    pub output_mode: OutputMode,
    /// Internally generated spikes go to the output bus only.
    pub open_loop: bool,
    /// Highest destination address visited by neuron-spike and time-reference
    /// events. 255 processes the full array.
    pub max_neuron: u8,
    /// Core clock cycles per scheduler ISI timestep.
    pub isi_period: u32,
}

impl Default for GlobalConfig {
    fn default() -> Self {
        Self {
            syn_sign: [0; 8],
            monitored_neuron: 0,
            monitored_synapse: 0,
            output_mode: OutputMode::Standard,
            open_loop: false,
            max_neuron: 255,
            isi_period: 256,
        }
    }
}

impl GlobalConfig {
    #[inline]
    pub fn is_inhibitory(&self, source: u8) -> bool {
        self.syn_sign[source as usize / 32] >> (source % 32) & 1 != 0
    }

    pub fn set_inhibitory(&mut self, source: u8, inhibitory: bool) {
        let bit = 1u32 << (source % 32);
        let word = &mut self.syn_sign[source as usize / 32];
        if inhibitory {
            *word |= bit;
        } else {
            *word &= !bit;
        }
    }

    fn read_reg(&self, addr: u32) -> Option<u32> {
        Some(match addr {
            a if a < REG_SYN_SIGN + 8 => self.syn_sign[a as usize],
            REG_MONITORED_NEURON => self.monitored_neuron as u32,
            REG_MONITORED_SYNAPSE => self.monitored_synapse as u32,
            REG_OUTPUT_MODE => (self.output_mode == OutputMode::Monitoring) as u32,
            REG_OPEN_LOOP => self.open_loop as u32,
            REG_MAX_NEURON => self.max_neuron as u32,
            REG_ISI_PERIOD => self.isi_period,
            _ => return None,
        })
    }

    fn write_reg(&mut self, addr: u32, value: u32) -> Option<()> {
        match addr {
            a if a < REG_SYN_SIGN + 8 => self.syn_sign[a as usize] = value,
            REG_MONITORED_NEURON => self.monitored_neuron = value as u8,
            REG_MONITORED_SYNAPSE => self.monitored_synapse = value as u8,
            REG_OUTPUT_MODE => {
                self.output_mode = if value & 1 != 0 {
                    OutputMode::Monitoring
                } else {
                    OutputMode::Standard
                }
            }
            REG_OPEN_LOOP => self.open_loop = value & 1 != 0,
            REG_MAX_NEURON => self.max_neuron = value as u8,
            REG_ISI_PERIOD => self.isi_period = value,
            _ => return None,
        }
        Some(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    Global(u32),
    Status(u32),
    /// (neuron address, word within the 128-bit slot)
    Neuron(u8, usize),
    Synapse(usize),
}

pub fn decode_address(addr: u32) -> Result<Region, MemError> {
    match addr {
        a if a > ADDRESS_MASK => Err(MemError::AddressFault(a)),
        a if a <= REG_ISI_PERIOD => Ok(Region::Global(a)),
        a if (STATUS_SINGLE_OCCUPANCY..=STATUS_LATE).contains(&a) => Ok(Region::Status(a)),
        a if (NEURON_BASE..NEURON_BASE + NEURON_WORDS).contains(&a) => {
            let off = a - NEURON_BASE;
            Ok(Region::Neuron((off / 4) as u8, (off % 4) as usize))
        }
        a if (SYNAPSE_BASE..SYNAPSE_BASE + SYNAPSE_WORDS as u32).contains(&a) => {
            Ok(Region::Synapse((a - SYNAPSE_BASE) as usize))
        }
        a => Err(MemError::AddressFault(a)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfigOp {
    Read,
    Write(u32),
}

/// The memories and registers of one core, as seen from the configuration port.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoreMemory {
    pub synapses: SynapseMemory,
    pub neurons: NeuronMemory,
    pub config: GlobalConfig,
}

impl CoreMemory {
    /// Serial-configuration access. Writes return the value now stored.
    ///
    /// The status window is owned by the engine; this port faults on it.
    pub fn access(&mut self, addr: u32, op: ConfigOp) -> Result<u32, MemError> {
        match decode_address(addr)? {
            Region::Global(a) => match op {
                ConfigOp::Read => self.config.read_reg(a).ok_or(MemError::AddressFault(addr)),
                ConfigOp::Write(v) => {
                    self.config
                        .write_reg(a, v)
                        .ok_or(MemError::AddressFault(addr))?;
                    Ok(self.config.read_reg(a).unwrap())
                }
            },
            Region::Status(_) => Err(MemError::AddressFault(addr)),
            Region::Neuron(n, k) => {
                let bits = self.neurons.get(n).to_bits();
                let shift = 32 * k;
                if let ConfigOp::Write(v) = op {
                    let bits = (bits & !(0xFFFF_FFFFu128 << shift)) | ((v as u128) << shift);
                    self.neurons.set(n, NeuronRecord::from_bits(bits));
                }
                Ok((self.neurons.get(n).to_bits() >> shift) as u32)
            }
            Region::Synapse(w) => {
                if let ConfigOp::Write(v) = op {
                    self.synapses.write_word(w, v);
                }
                Ok(self.synapses.read_word(w))
            }
        }
    }
}
