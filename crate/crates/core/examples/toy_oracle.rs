//! Brute-force Monte-Carlo reference for the toy random walk.
//!
//! Simulates the walk directly (no simulator, monitor or estimator code)
//! and writes the barrier-crossing probabilities with their standard
//! errors as JSON.
//!
//! cargo run --release --example toy_oracle -- [samples] [out.json]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use stl_splitter::sim::toy::DEFAULT_BARRIER;

const HORIZON: usize = 40;

/// Counts walks whose maximum exceeds `barrier` and whose minimum drops
/// below `-barrier`, on independent draws.
fn count(seed: u64, stream: u64, samples: u64, barrier: f64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let (mut up, mut down) = (0, 0);
    for _ in 0..samples {
        let mut x = 0.0f64;
        let mut hit = false;
        for _ in 0..HORIZON {
            x += rng.sample::<f64, _>(StandardNormal);
            hit |= x > barrier;
        }
        up += u64::from(hit);
        let mut x = 0.0f64;
        let mut hit = false;
        for _ in 0..HORIZON {
            x += rng.sample::<f64, _>(StandardNormal);
            hit |= x < -barrier;
        }
        down += u64::from(hit);
    }
    (up, down)
}

fn main() {
    let mut args = std::env::args().skip(1);
    let samples: u64 = args.next().map(|s| s.parse().expect("sample count")).unwrap_or(10_000_000);
    let out = args.next().unwrap_or_else(|| "tests/fixtures/toy_oracle.json".into());
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1) as u64;
    let seed = 20_240_601;
    let per = samples / threads;
    let total = per * threads;
    let (up, down) = std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads).map(|k| s.spawn(move || count(seed, k, per, DEFAULT_BARRIER))).collect();
        handles.into_iter().map(|h| h.join().unwrap()).fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    });
    let n = total as f64;
    let p_max = up as f64 / n;
    let p_min = down as f64 / n;
    let json = serde_json::json!({
        "drift": 0.0,
        "sigma": 1.0,
        "horizon": HORIZON,
        "barrier": DEFAULT_BARRIER,
        "samples": total,
        "seed": seed,
        "p_max": p_max,
        "se_max": (p_max * (1.0 - p_max) / n).sqrt(),
        "p_min": p_min,
        "se_min": (p_min * (1.0 - p_min) / n).sqrt(),
    });
    std::fs::write(&out, serde_json::to_string_pretty(&json).unwrap() + "\n").expect("write fixture");
    println!("{json}");
}
