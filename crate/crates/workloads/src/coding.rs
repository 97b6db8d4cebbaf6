//! Pixel-to-spike encoders.

use odin_core::aer::InputEvent;
use odin_core::engine::TimedEvent;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::preprocess::Sample16;
use crate::rng::sample_rng;

/// Converts emulated seconds to engine cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeBase {
    pub cycles_per_second: f64,
}

impl TimeBase {
    pub fn cycles(&self, seconds: f64) -> u64 {
        (seconds * self.cycles_per_second).round() as u64
    }
}

/// Poisson spike times (cycles, starting at `t0`) of a process with `rate` Hz.
pub fn poisson_times<R: Rng>(rng: &mut R, rate: f64, duration: f64, tb: TimeBase, t0: u64) -> Vec<u64> {
    if rate <= 0.0 || duration <= 0.0 {
        return Vec::new();
    }
    let exp = Exp::new(rate).expect("positive rate");
    let mut out = Vec::new();
    let mut t = exp.sample(rng);
    while t < duration {
        out.push(t0 + tb.cycles(t));
        t += exp.sample(rng);
    }
    out
}

/// Pixel `p` fires `NeuronSpike(p)` at `max_rate * pixels[p] / 255` Hz for
/// `duration` seconds. Events are sorted by time, then by pixel address.
pub fn rate_encode_with<R: Rng>(
    rng: &mut R,
    sample: &Sample16,
    duration: f64,
    max_rate: f64,
    tb: TimeBase,
    t0: u64,
) -> Vec<TimedEvent> {
    let mut ev: Vec<(u64, u8)> = Vec::new();
    for (p, &v) in sample.pixels.iter().enumerate() {
        if v == 0 {
            continue;
        }
        let rate = max_rate * v as f64 / 255.0;
        ev.extend(poisson_times(rng, rate, duration, tb, t0).into_iter().map(|t| (t, p as u8)));
    }
    ev.sort_unstable();
    ev.into_iter()
        .map(|(t, source)| TimedEvent::new(t, InputEvent::NeuronSpike { source }))
        .collect()
}

pub fn rate_encode(
    sample: &Sample16,
    duration: f64,
    max_rate: f64,
    tb: TimeBase,
    seed: u64,
    index: u64,
) -> Vec<TimedEvent> {
    let mut rng: ChaCha8Rng = sample_rng(seed, index);
    rate_encode_with(&mut rng, sample, duration, max_rate, tb, 0)
}

/// Addresses of nonzero pixels by decreasing intensity, ties by ascending address.
pub fn rank_order_encode(sample: &Sample16) -> Vec<u8> {
    let mut idx: Vec<u8> = (0..=255u8).filter(|&p| sample.pixels[p as usize] > 0).collect();
    idx.sort_by_key(|&p| (std::cmp::Reverse(sample.pixels[p as usize]), p));
    idx
}

/// Periodic broadcast events at `rate` Hz over `[t0, t0 + duration)`.
pub fn periodic(event: InputEvent, rate: f64, duration: f64, tb: TimeBase, t0: u64) -> Vec<TimedEvent> {
    if rate <= 0.0 {
        return Vec::new();
    }
    let n = (duration * rate).floor() as u64;
    (1..=n)
        .map(|k| TimedEvent::new(t0 + tb.cycles(k as f64 / rate), event))
        .filter(|e| e.t_cycle < t0 + tb.cycles(duration))
        .collect()
}

/// Stable merge of time-sorted traces; on equal times earlier arguments win.
pub fn merge(traces: Vec<Vec<TimedEvent>>) -> Vec<TimedEvent> {
    let mut all: Vec<(u64, usize, usize, InputEvent)> = traces
        .into_iter()
        .enumerate()
        .flat_map(|(k, t)| {
            t.into_iter()
                .enumerate()
                .map(move |(i, e)| (e.t_cycle, k, i, e.event))
        })
        .collect();
    all.sort_unstable_by_key(|&(t, k, i, _)| (t, k, i));
    all.into_iter().map(|(t, _, _, e)| TimedEvent::new(t, e)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::PIXELS;

    fn sample(pixels: &[u8]) -> Sample16 {
        let mut s = Sample16 {
            pixels: [0; PIXELS],
            label: 0,
        };
        s.pixels[..pixels.len()].copy_from_slice(pixels);
        s
    }

    const TB: TimeBase = TimeBase {
        cycles_per_second: 1e6,
    };

    #[test]
    fn rank_order_toy() {
        assert_eq!(rank_order_encode(&sample(&[0, 5, 9, 5])), vec![2, 1, 3]);
        assert!(rank_order_encode(&sample(&[])).is_empty());
    }

    #[test]
    fn zero_pixel_is_silent_and_seed_is_deterministic() {
        let s = sample(&[0, 255, 128]);
        let a = rate_encode(&s, 1.0, 100.0, TB, 7, 3);
        assert!(a.iter().all(|e| e.event != InputEvent::NeuronSpike { source: 0 }));
        assert_eq!(a, rate_encode(&s, 1.0, 100.0, TB, 7, 3));
        assert_ne!(a, rate_encode(&s, 1.0, 100.0, TB, 7, 4));
        assert!(a.windows(2).all(|w| w[0].t_cycle <= w[1].t_cycle));
    }

    #[test]
    fn periodic_count() {
        let p = periodic(InputEvent::NeuronTimeRef, 1000.0, 0.1, TB, 5);
        assert_eq!(p.len(), 99);
        assert_eq!(p[0].t_cycle, 1005);
    }

    #[test]
    fn merge_is_stable() {
        let a = vec![TimedEvent::new(5, InputEvent::NeuronTimeRef)];
        let b = vec![
            TimedEvent::new(1, InputEvent::NeuronSpike { source: 1 }),
            TimedEvent::new(5, InputEvent::NeuronSpike { source: 2 }),
        ];
        let m = merge(vec![a, b]);
        assert_eq!(m[1].event, InputEvent::NeuronTimeRef);
        assert_eq!(m.len(), 3);
    }
}
