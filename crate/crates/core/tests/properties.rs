use odin_core::aer::{decode_input, encode_input, InputEvent};
use odin_core::energy::{global_energy_per_sop, total_power, EnergyParams};
use odin_core::mem::{
    pack_synapse_word, synapse_location, unpack_synapse_word, ConfigOp, CoreMemory, SynapseEntry,
    NEURON_BASE, SYNAPSE_BASE,
};
use odin_core::neuron::{
    lif::lif_step, phen::phen_step, sdsp_flags, NeuronModel, NeuronParams, NeuronRecord,
    NeuronState, SdspThresholds, Stimulus, RECORD_BITS,
};
use odin_core::plasticity::{bistability_step, sdsp_step};
use proptest::prelude::*;

fn entry() -> impl Strategy<Value = SynapseEntry> {
    (0u8..8, any::<bool>()).prop_map(|(weight, map_en)| SynapseEntry { weight, map_en })
}

fn thresholds() -> impl Strategy<Value = SdspThresholds> {
    (any::<u8>(), 0u8..8, 0u8..8, 0u8..8).prop_map(|(theta_m, a, b, c)| {
        let mut t = [a, b, c];
        t.sort();
        SdspThresholds {
            theta_m,
            theta1: t[0],
            theta2: t[1],
            theta3: t[2],
        }
    })
}

/// SDSP conditions written out with plain integer comparisons.
fn sdsp_oracle(v: u8, ca: u8, th: SdspThresholds) -> (bool, bool) {
    let (v, ca) = (v as i32, ca as i32);
    let (m, t1, t2, t3) = (th.theta_m as i32, th.theta1 as i32, th.theta2 as i32, th.theta3 as i32);
    let up = v - m >= 0 && ca - t1 >= 0 && t3 - ca > 0;
    let down = m - v > 0 && ca - t1 >= 0 && t2 - ca > 0;
    (up, down)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn unpack_inverts_pack(entries in prop::array::uniform8(entry())) {
        let w = pack_synapse_word(&entries).unwrap();
        prop_assert_eq!(unpack_synapse_word(w), entries);
    }

    #[test]
    fn pack_inverts_unpack(word in any::<u32>()) {
        prop_assert_eq!(pack_synapse_word(&unpack_synapse_word(word)).unwrap(), word);
    }

    #[test]
    fn aer_round_trip(kind in 0u8..5, a in any::<u8>(), b in any::<u8>(), w in -8i8..8) {
        let ev = match kind {
            0 => InputEvent::NeuronSpike { source: a },
            1 => InputEvent::SingleSynapse { source: a, dest: b },
            2 => InputEvent::VirtualSynapse { dest: a, weight: w },
            3 => InputEvent::NeuronTimeRef,
            _ => InputEvent::BistabilityTimeRef,
        };
        prop_assert_eq!(decode_input(encode_input(ev)), Ok(ev));
    }

    #[test]
    fn sdsp_flags_match_oracle(v in any::<u8>(), ca in 0u8..8, th in thresholds()) {
        let got = sdsp_flags(v, ca, th);
        prop_assert_eq!(got, sdsp_oracle(v, ca, th));
        prop_assert!(!(got.0 && got.1));
    }

    #[test]
    fn record_bits_are_a_bijection(bits in any::<u128>()) {
        let mask = (1u128 << (RECORD_BITS - 3)) - 1;
        prop_assert_eq!(NeuronRecord::from_bits(bits).to_bits(), bits & mask);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn weight_range_preserved(start in entry(), ops in prop::collection::vec(0u8..4, 0..64)) {
        let mut e = start;
        for op in ops {
            e = match op {
                0 => sdsp_step(e, true, false).unwrap(),
                1 => sdsp_step(e, false, true).unwrap(),
                2 => sdsp_step(e, false, false).unwrap(),
                _ => bistability_step(e),
            };
            prop_assert!(e.weight <= 7);
            prop_assert_eq!(e.map_en, start.map_en);
        }
    }

    #[test]
    fn synapse_write_is_isolated(
        seed_words in prop::collection::vec(any::<u32>(), 16),
        i in any::<u8>(),
        j in any::<u8>(),
        e in entry(),
    ) {
        let mut mem = CoreMemory::default();
        for (k, w) in mem.synapses.words_mut().iter_mut().enumerate() {
            *w = seed_words[k % 16].rotate_left(k as u32);
        }
        let before = mem.synapses.clone();
        mem.synapses.set(i, j, e).unwrap();
        for s in 0..=255u8 {
            for d in 0..=255u8 {
                let expect = if (s, d) == (i, j) { e } else { before.get(s, d) };
                prop_assert_eq!(mem.synapses.get(s, d), expect);
            }
        }
    }

    #[test]
    fn synapse_region_matches_unpack(i in any::<u8>(), j in any::<u8>(), word in any::<u32>()) {
        let mut mem = CoreMemory::default();
        let (w, k) = synapse_location(i, j);
        mem.access(SYNAPSE_BASE + w as u32, ConfigOp::Write(word)).unwrap();
        prop_assert_eq!(mem.synapses.get(i, j), unpack_synapse_word(word)[k]);
    }

    #[test]
    fn neuron_region_aliases_records(n in any::<u8>(), bits in any::<u128>()) {
        let mut mem = CoreMemory::default();
        let rec = NeuronRecord::from_bits(bits);
        for k in 0..4u32 {
            let word = (rec.to_bits() >> (32 * k)) as u32;
            mem.access(NEURON_BASE + 4 * n as u32 + k, ConfigOp::Write(word)).unwrap();
        }
        prop_assert_eq!(mem.neurons.get(n), &rec);
        for k in 0..4u32 {
            let read = mem.access(NEURON_BASE + 4 * n as u32 + k, ConfigOp::Read).unwrap();
            prop_assert_eq!(read, (rec.to_bits() >> (32 * k)) as u32);
        }
    }

    #[test]
    fn lif_membrane_monotone_without_leak(
        thr in 1u8..=255,
        weights in prop::collection::vec(0i16..8, 1..200),
    ) {
        let p = NeuronParams::lif(thr, 0);
        let mut s = NeuronState::default();
        for w in weights {
            let before = s.membrane;
            if lif_step(&mut s, &p, Stimulus::Syn(w)) {
                break;
            }
            prop_assert!(s.membrane >= before);
        }
    }

    #[test]
    fn no_op_queries_leave_state_identical(bits in any::<u128>(), n in 1usize..50) {
        let mut rec = NeuronRecord::from_bits(bits);
        rec.params.model = NeuronModel::Phen;
        let snapshot = rec.clone();
        for _ in 0..n {
            let _ = rec.sdsp_flags();
            let _ = rec.to_bits();
        }
        prop_assert_eq!(&rec, &snapshot);
    }

    #[test]
    fn energy_linearity(f in 1e3f64..1e8, frac in 0.0f64..0.5) {
        let p = EnergyParams::default();
        let r = f * frac;
        let diff = total_power(&p, f, r).unwrap() - total_power(&p, f, 0.0).unwrap();
        prop_assert!((diff - p.e_sop * r).abs() <= 1e-12 * p.e_sop * r.max(1.0) + 1e-18);
    }

    #[test]
    fn energy_per_sop_decreases_with_rate(f in 1e4f64..1e8, a in 0.01f64..0.5, b in 0.01f64..0.5) {
        prop_assume!((a - b).abs() > 1e-6);
        let p = EnergyParams::default();
        let (lo, hi) = if a < b { (a * f, b * f) } else { (b * f, a * f) };
        let e_lo = global_energy_per_sop(total_power(&p, f, lo).unwrap(), lo).unwrap();
        let e_hi = global_energy_per_sop(total_power(&p, f, hi).unwrap(), hi).unwrap();
        prop_assert!(e_hi < e_lo);
    }
}

#[test]
fn aer_bijective_over_address_space() {
    let mut valid = 0;
    for addr in 0..(1u32 << 17) {
        if let Ok(ev) = decode_input(addr) {
            valid += 1;
            assert_eq!(encode_input(ev), addr);
        }
    }
    // single synapse + neuron spike + virtual synapse + two time references
    assert_eq!(valid, 65_536 + 256 + 4096 + 2);
}

#[test]
fn plasticity_exhaustive() {
    for nibble in 0..16u32 {
        let e = SynapseEntry::from_nibble(nibble);
        for (up, down) in [(true, false), (false, true), (false, false)] {
            let got = sdsp_step(e, up, down).unwrap();
            let delta = if !e.map_en { 0 } else { up as i32 - down as i32 };
            assert_eq!(got.weight as i32, (e.weight as i32 + delta).clamp(0, 7));
            assert_eq!(got.map_en, e.map_en);
        }
        let b = bistability_step(e);
        if !e.map_en {
            assert_eq!(b, e);
        }
        assert!(sdsp_step(e, true, true).is_err());
    }
}

#[test]
fn sdsp_flags_exhaustive_for_fixed_thresholds() {
    let th = SdspThresholds {
        theta_m: 128,
        theta1: 2,
        theta2: 4,
        theta3: 6,
    };
    for v in 0..=255u8 {
        for ca in 0..8 {
            let got = sdsp_flags(v, ca, th);
            assert_eq!(got, sdsp_oracle(v, ca, th));
            assert!(!(got.0 && got.1));
        }
    }
}

#[test]
fn phen_zero_input_is_identity() {
    let p = NeuronParams {
        model: NeuronModel::Phen,
        threshold: 10,
        ..NeuronParams::default()
    };
    let mut s = NeuronState::default();
    phen_step(&mut s, &p, Stimulus::Syn(4));
    let snapshot = s.clone();
    for _ in 0..100 {
        assert_eq!(phen_step(&mut s, &p, Stimulus::Syn(0)), None);
    }
    assert_eq!(s, snapshot);
}
