//! 8-bit leaky integrate-and-fire neuron.

use super::{calcium_step, CalciumTrigger, NeuronParams, NeuronState, Stimulus};

/// One LIF update. Returns `true` if the neuron fired.
pub fn lif_step(state: &mut NeuronState, params: &NeuronParams, stim: Stimulus) -> bool {
    match stim {
        Stimulus::Syn(w) => {
            state.membrane = (state.membrane as i16 + w).clamp(0, 255) as u8;
        }
        Stimulus::TimeRef => {
            state.membrane = state.membrane.saturating_sub(params.leak);
            state.refr_cnt = state.refr_cnt.saturating_sub(1);
            calcium_step(state, params.ca_leak_div, CalciumTrigger::TimeRef);
        }
    }
    if state.membrane >= params.threshold && state.refr_cnt == 0 {
        state.membrane = 0;
        state.refr_cnt = params.refractory;
        calcium_step(state, params.ca_leak_div, CalciumTrigger::OwnSpike);
        true
    } else {
        false
    }
}
