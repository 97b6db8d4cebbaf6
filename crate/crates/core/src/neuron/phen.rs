//! Three-stage phenomenological neuron.
//!
//! ```text
//! input stage      signed accumulator, one event out per 4^fi_depth weight units
//! neuron core      stimulation detector, adaptive threshold, time windows,
//!                  sign-rotation oscillator, signed sign-magnitude membrane
//! output stage     burst descriptor (spike count, ISI code), membrane lock
//! ```
//!
//! All blocks are small counters updated either by accumulated synaptic
//! events or by the neuron time reference. Time-reference processing order:
//! input-stage leak, stimulation detector, threshold adaptation, time
//! windows, membrane leak, oscillation, refractory, Calcium, fire check.

use super::{
    calcium_step, Burst, CalciumTrigger, NeuronParams, NeuronState, Stimulus, ThresholdMode,
    ACC_MAX, ACC_MIN, MAX_THR_ADJ, STIM_MAX, STIM_MIN,
};

pub fn phen_step(s: &mut NeuronState, p: &NeuronParams, stim: Stimulus) -> Option<Burst> {
    match stim {
        Stimulus::Syn(w) => syn_event(s, p, w),
        Stimulus::TimeRef => time_ref(s, p),
    }
}

/// Effective firing threshold after the adaptive-threshold block.
pub fn effective_threshold(s: &NeuronState, p: &NeuronParams) -> i16 {
    let t = p.threshold as i16;
    let a = s.thr_adj as i16;
    let eff = match p.thr_mode {
        ThresholdMode::Fixed => t,
        ThresholdMode::Adaptation | ThresholdMode::Accommodation => t + a,
        ThresholdMode::Variability => t - a,
    };
    eff.max(1)
}

#[inline]
fn thr_step(p: &NeuronParams) -> u8 {
    p.thr_step + 1
}

fn syn_event(s: &mut NeuronState, p: &NeuronParams, w: i16) -> Option<Burst> {
    let prev = s.stim_cur as i16;
    let strength = (prev + w).clamp(STIM_MIN as i16, STIM_MAX as i16);
    s.stim_cur = strength as i8;

    let depth = 1i16 << (2 * p.fi_depth);
    s.input_acc = (s.input_acc + w).clamp(ACC_MIN, ACC_MAX);
    let units = s.input_acc / depth;
    if units == 0 {
        return None;
    }
    s.input_acc -= units * depth;

    if p.thr_mode == ThresholdMode::Variability && units < 0 {
        s.thr_adj = (s.thr_adj + thr_step(p)).min(MAX_THR_ADJ);
    }
    if s.burst_locked || (p.phasic && s.episode_fired) {
        return None;
    }
    // class-2 gate: input below the strength threshold never reaches the membrane
    if p.class2 && strength < p.stim_thr as i16 {
        return None;
    }
    let drive = if p.inhib_inv { -units } else { units };
    s.set_potential(s.potential() + drive);
    check_fire(s, p)
}

fn check_fire(s: &mut NeuronState, p: &NeuronParams) -> Option<Burst> {
    if s.burst_locked || s.refr_cnt > 0 || s.win_pending || (p.phasic && s.episode_fired) {
        return None;
    }
    if s.potential() < effective_threshold(s, p) {
        return None;
    }
    if p.latency {
        s.win_pending = true;
        s.win_cnt = p.win_len.max(1);
        return None;
    }
    Some(fire(s, p))
}

fn fire(s: &mut NeuronState, p: &NeuronParams) -> Burst {
    let burst = if p.mixed && s.episode_fired {
        Burst::SINGLE
    } else {
        Burst {
            n_minus_1: p.burst_n_minus_1,
            isi_code: p.burst_isi,
        }
    };
    s.episode_fired = true;
    s.win_pending = false;
    calcium_step(s, p.ca_leak_div, CalciumTrigger::OwnSpike);
    if p.thr_mode == ThresholdMode::Adaptation {
        s.thr_adj = (s.thr_adj + thr_step(p)).min(MAX_THR_ADJ);
    }
    s.refr_cnt = p.refractory;
    if p.dap && p.win_len > 0 {
        s.set_potential((p.threshold / 2) as i16);
        s.win_cnt = p.win_len;
    } else {
        s.set_potential(0);
        s.win_cnt = 0;
    }
    s.osc_cnt = 0;
    if burst.n_minus_1 > 0 {
        s.burst_locked = true;
    }
    burst
}

fn time_ref(s: &mut NeuronState, p: &NeuronParams) -> Option<Burst> {
    let strength = s.stim_cur as i16;
    let gate = (p.stim_thr as i16).max(1);

    if strength == 0 {
        s.input_acc -= s.input_acc.signum();
    }

    // stimulation detector
    let mut rebound = false;
    if strength == 0 {
        if s.stim_active {
            s.stim_active = false;
            s.episode_fired = false;
            rebound = p.rebound && s.inhib_seen;
            s.inhib_seen = false;
        }
    } else {
        let onset = !s.stim_active;
        s.stim_active = true;
        if strength <= -gate {
            s.inhib_seen = true;
        }
        if p.bistable && onset && strength >= gate {
            s.bist_on = !s.bist_on;
            if !s.bist_on {
                s.set_potential(0);
            }
        }
    }

    // adaptive threshold
    match p.thr_mode {
        ThresholdMode::Fixed => {}
        ThresholdMode::Accommodation if strength > 0 => {
            s.thr_adj = (s.thr_adj + thr_step(p)).min(MAX_THR_ADJ);
        }
        _ => s.thr_adj = s.thr_adj.saturating_sub(p.thr_recov),
    }
    s.stim_cur = 0;

    // time windows: spike latency and depolarizing after-potential
    let mut delayed = false;
    if s.win_cnt > 0 {
        s.win_cnt -= 1;
        if s.win_cnt == 0 {
            if s.win_pending {
                delayed = true;
            } else if p.dap {
                s.set_potential(0);
            }
        }
    }

    let held = s.burst_locked || s.win_pending || (p.dap && s.win_cnt > 0);
    if !held {
        if s.bist_on {
            s.set_potential(s.potential() + p.leak as i16);
        } else {
            s.membrane = s.membrane.saturating_sub(p.leak);
            if s.membrane == 0 {
                s.mem_neg = false;
            }
        }
    }

    if p.oscillate {
        if s.membrane == 0 {
            s.osc_cnt = 0;
        } else {
            s.osc_cnt += 1;
            if s.osc_cnt > p.osc_period {
                s.osc_cnt = 0;
                s.mem_neg = !s.mem_neg;
            }
        }
    }

    s.refr_cnt = s.refr_cnt.saturating_sub(1);
    calcium_step(s, p.ca_leak_div, CalciumTrigger::TimeRef);

    if (delayed || rebound) && !s.burst_locked {
        return Some(fire(s, p));
    }
    check_fire(s, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuron::NeuronModel;

    fn base(threshold: u8, leak: u8) -> NeuronParams {
        NeuronParams {
            model: NeuronModel::Phen,
            threshold,
            leak,
            ..NeuronParams::default()
        }
    }

    /// Drives `inputs[t]` (one event per tick, 0 = none) followed by a time
    /// reference; returns (tick, burst) for every emission.
    fn drive(p: &NeuronParams, inputs: &[i16]) -> (NeuronState, Vec<(usize, Burst)>) {
        let mut s = NeuronState::default();
        let mut out = Vec::new();
        for (t, &w) in inputs.iter().enumerate() {
            if w != 0 {
                if let Some(b) = phen_step(&mut s, p, Stimulus::Syn(w)) {
                    out.push((t, b));
                }
            }
            if let Some(b) = phen_step(&mut s, p, Stimulus::TimeRef) {
                out.push((t, b));
            }
            // the scheduler would unlock after the burst; do it at once here
            s.burst_locked = false;
        }
        (s, out)
    }

    #[test]
    fn silent_without_input() {
        let p = base(10, 1);
        let mut s = NeuronState::default();
        for _ in 0..100 {
            assert_eq!(phen_step(&mut s, &p, Stimulus::TimeRef), None);
        }
        assert_eq!(s, NeuronState::default());
    }

    #[test]
    fn accumulator_depth_divides_input() {
        let mut p = base(255, 0);
        p.fi_depth = 1;
        let mut s = NeuronState::default();
        for _ in 0..3 {
            phen_step(&mut s, &p, Stimulus::Syn(3));
        }
        // 9 raw units at depth 4 -> 2 membrane units, 1 left in the accumulator
        assert_eq!(s.membrane, 2);
        assert_eq!(s.input_acc, 1);
    }

    #[test]
    fn phasic_fires_once_per_episode() {
        let mut p = base(6, 0);
        p.phasic = true;
        let mut inputs = vec![3; 20];
        inputs.extend([0; 5]);
        inputs.extend([3; 10]);
        let (_, out) = drive(&p, &inputs);
        let ticks: Vec<usize> = out.iter().map(|(t, _)| *t).collect();
        assert_eq!(ticks, vec![1, 26]);
    }

    #[test]
    fn burst_lock_freezes_membrane() {
        let mut p = base(4, 0);
        p.burst_n_minus_1 = 2;
        let mut s = NeuronState::default();
        let b = phen_step(&mut s, &p, Stimulus::Syn(5)).unwrap();
        assert_eq!(b.n_minus_1, 2);
        assert!(s.burst_locked);
        phen_step(&mut s, &p, Stimulus::Syn(3));
        phen_step(&mut s, &p, Stimulus::TimeRef);
        assert_eq!(s.membrane, 0);
    }

    #[test]
    fn latency_delays_firing() {
        let mut p = base(5, 0);
        p.latency = true;
        p.win_len = 3;
        let mut inputs = vec![0; 10];
        inputs[2] = 6;
        let (_, out) = drive(&p, &inputs);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0, 4);
    }

    #[test]
    fn rebound_after_inhibition() {
        let mut p = base(10, 1);
        p.rebound = true;
        p.stim_thr = 2;
        let mut inputs = vec![0; 12];
        for w in &mut inputs[3..6] {
            *w = -4;
        }
        let (_, out) = drive(&p, &inputs);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0, 6);
    }

    #[test]
    fn oscillation_flips_sign_and_decays() {
        let mut p = base(50, 1);
        p.oscillate = true;
        p.osc_period = 1;
        let mut s = NeuronState::default();
        phen_step(&mut s, &p, Stimulus::Syn(7));
        let mut signs = Vec::new();
        for _ in 0..8 {
            phen_step(&mut s, &p, Stimulus::TimeRef);
            signs.push(s.potential());
        }
        assert_eq!(signs, vec![6, -5, -4, 3, 2, -1, 0, 0]);
    }

    #[test]
    fn adaptation_raises_threshold() {
        let mut p = base(8, 0);
        p.thr_mode = ThresholdMode::Adaptation;
        p.thr_step = 3;
        let (s, out) = drive(&p, &[2; 30]);
        let ticks: Vec<usize> = out.iter().map(|(t, _)| *t).collect();
        assert_eq!(ticks, vec![3, 9, 17, 27]);
        assert_eq!(s.thr_adj, 16);
    }
}
