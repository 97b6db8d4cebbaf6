//! SDSP weight update and bistability drift on a single synapse.

use thiserror::Error;

use crate::mem::{SynapseEntry, MAX_WEIGHT};

/// Weights at or above this value drift up, below it drift down.
pub const BISTABILITY_MIDPOINT: u8 = 4;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("SDSP up and down conditions asserted together")]
pub struct ContractViolation;

pub fn sdsp_step(entry: SynapseEntry, up: bool, down: bool) -> Result<SynapseEntry, ContractViolation> {
    if up && down {
        return Err(ContractViolation);
    }
    if !entry.map_en {
        return Ok(entry);
    }
    let weight = if up {
        (entry.weight + 1).min(MAX_WEIGHT)
    } else if down {
        entry.weight.saturating_sub(1)
    } else {
        entry.weight
    };
    Ok(SynapseEntry { weight, ..entry })
}

pub fn bistability_step(entry: SynapseEntry) -> SynapseEntry {
    if !entry.map_en {
        return entry;
    }
    let weight = if entry.weight >= BISTABILITY_MIDPOINT {
        (entry.weight + 1).min(MAX_WEIGHT)
    } else {
        entry.weight.saturating_sub(1)
    };
    SynapseEntry { weight, ..entry }
}

/// Applies `bistability_step` to all eight synapses of a packed word.
pub fn bistability_word(word: u32) -> u32 {
    let mut out = 0;
    for k in 0..8 {
        let e = SynapseEntry::from_nibble(word >> (4 * k));
        out |= bistability_step(e).to_nibble() << (4 * k);
    }
    out
}
