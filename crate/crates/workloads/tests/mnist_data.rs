//! Checks on the real MNIST files. Skipped with a message when the files are
//! absent (see `scripts/fetch_mnist.sh`).

use odin_workloads::classifier::prepare;
use odin_workloads::mnist::{self, Split};
use odin_workloads::preprocess::{moments, PreprocessConfig, SIDE};

fn load(split: Split) -> Option<mnist::Dataset> {
    match mnist::load(&mnist::default_dir(), split) {
        Ok(d) => Some(d),
        Err(e) => {
            eprintln!("skipped: {e}");
            None
        }
    }
}

/// Angle in degrees between the principal axis and the vertical.
fn axis_tilt(img: &[f32], side: usize) -> f64 {
    let (_, (rr, rc, cc)) = moments(img, side).unwrap();
    0.5 * (2.0 * rc as f64).atan2((rr - cc) as f64).to_degrees()
}

#[test]
fn deskewed_ones_stand_upright() {
    let Some(data) = load(Split::Test) else { return };
    let ones: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == 1).take(200).collect();
    let mut raw = Vec::new();
    let mut fixed = Vec::new();
    let samples = prepare(&data, &PreprocessConfig::default(), Some(ones[ones.len() - 1] + 1));
    for &i in &ones {
        let img: Vec<f32> = data.images[i].iter().map(|&v| v as f32).collect();
        raw.push(axis_tilt(&img, 28).abs());
        let s: Vec<f32> = samples[i].pixels.iter().map(|&v| v as f32).collect();
        fixed.push(axis_tilt(&s, SIDE).abs());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    eprintln!("mean |tilt| raw {:.2} deg, deskewed {:.2} deg", mean(&raw), mean(&fixed));
    assert!(mean(&fixed) < 2.0);
    assert!(mean(&fixed) < mean(&raw));
}

#[test]
fn files_have_canonical_sizes() {
    let Some(train) = load(Split::Train) else { return };
    let Some(test) = load(Split::Test) else { return };
    assert_eq!(train.len(), 60_000);
    assert_eq!(test.len(), 10_000);
}
