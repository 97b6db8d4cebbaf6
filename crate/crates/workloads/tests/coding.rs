use odin_core::aer::InputEvent;
use odin_workloads::coding::{rank_order_encode, rate_encode, TimeBase};
use odin_workloads::preprocess::{Sample16, PIXELS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TB: TimeBase = TimeBase {
    cycles_per_second: 1e6,
};

fn blank() -> Sample16 {
    Sample16 {
        pixels: [0; PIXELS],
        label: 0,
    }
}

#[test]
fn poisson_mean_count() {
    let mut s = blank();
    s.pixels[17] = 255;
    let n = 1000;
    let total: usize = (0..n).map(|seed| rate_encode(&s, 1.0, 100.0, TB, seed, 0).len()).sum();
    let mean = total as f64 / n as f64;
    // Poisson(100): the mean of 1000 counts has standard error sqrt(100 / 1000)
    let se = (100.0f64 / n as f64).sqrt();
    assert!((mean - 100.0).abs() < 3.0 * se, "mean {mean}");
}

#[test]
fn rank_order_length_matches_nonzero_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let mut s = blank();
        let density: f64 = rng.random();
        for p in s.pixels.iter_mut() {
            if rng.random_bool(density) {
                *p = rng.random();
            }
        }
        let seq = rank_order_encode(&s);
        assert_eq!(seq.len(), s.pixels.iter().filter(|&&v| v > 0).count());
    }
}

proptest! {
    #[test]
    fn rank_order_is_sorted(pixels in prop::collection::vec(any::<u8>(), PIXELS)) {
        let mut s = blank();
        s.pixels.copy_from_slice(&pixels);
        let seq = rank_order_encode(&s);
        for w in seq.windows(2) {
            let (a, b) = (s.pixels[w[0] as usize], s.pixels[w[1] as usize]);
            prop_assert!(a > b || (a == b && w[0] < w[1]));
        }
    }

    #[test]
    fn rate_code_fires_only_lit_pixels(pixels in prop::collection::vec(0u8..4, PIXELS), seed: u64) {
        let mut s = blank();
        for (d, v) in s.pixels.iter_mut().zip(&pixels) {
            *d = v * 80;
        }
        let trace = rate_encode(&s, 0.2, 100.0, TB, seed, 0);
        prop_assert!(trace.windows(2).all(|w| w[0].t_cycle <= w[1].t_cycle));
        for e in &trace {
            match e.event {
                InputEvent::NeuronSpike { source } => prop_assert!(s.pixels[source as usize] > 0),
                _ => prop_assert!(false, "unexpected event"),
            }
        }
    }
}
