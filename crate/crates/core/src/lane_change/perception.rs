use serde::{Deserialize, Serialize};

use super::config::PemParams;
use super::dynamics::VehicleState;
use crate::sim::Sampler;

/// Salient features of one obstacle as seen from the ego.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Features {
    pub range: f64,
    pub bearing: f64,
    pub rel_heading: f64,
    /// Fraction of the obstacle's bearing interval hidden by nearer obstacles.
    pub occlusion: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub s: f64,
    pub d: f64,
    pub psi: f64,
}

fn bearing_interval(ego: &VehicleState, o: &VehicleState) -> (f64, f64) {
    let (hl, hw) = (o.length / 2.0, o.width / 2.0);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (ds, dd) in [(-hl, -hw), (-hl, hw), (hl, -hw), (hl, hw)] {
        let b = (o.d + dd - ego.d).atan2(o.s + ds - ego.s);
        lo = lo.min(b);
        hi = hi.max(b);
    }
    (lo, hi)
}

/// Features of every obstacle. Occlusion compares bearing intervals against
/// all obstacles with a smaller range.
pub fn features(ego: &VehicleState, obstacles: &[VehicleState]) -> Vec<Features> {
    let ranges: Vec<f64> = obstacles.iter().map(|o| (o.s - ego.s).hypot(o.d - ego.d)).collect();
    let intervals: Vec<(f64, f64)> = obstacles.iter().map(|o| bearing_interval(ego, o)).collect();
    obstacles
        .iter()
        .enumerate()
        .map(|(j, o)| {
            let (lo, hi) = intervals[j];
            let mut covers: Vec<(f64, f64)> = (0..obstacles.len())
                .filter(|&k| k != j && ranges[k] < ranges[j])
                .map(|k| (intervals[k].0.max(lo), intervals[k].1.min(hi)))
                .filter(|(a, b)| b > a)
                .collect();
            covers.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut hidden = 0.0;
            let mut reach = lo;
            for (a, b) in covers {
                let a = a.max(reach);
                if b > a {
                    hidden += b - a;
                    reach = b;
                }
            }
            let occlusion = if hi > lo { (hidden / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
            Features {
                range: ranges[j],
                bearing: (o.d - ego.d).atan2(o.s - ego.s),
                rel_heading: o.psi - ego.psi,
                occlusion,
            }
        })
        .collect()
}

pub fn detection_probability(params: &PemParams, f: &Features) -> f64 {
    let [c0, cr, co] = params.detect_coeffs;
    1.0 / (1.0 + (-(c0 + cr * f.range + co * f.occlusion)).exp())
}

/// Offset standard deviations for (s, d, psi) at `range`.
pub fn noise_sd(params: &PemParams, range: f64) -> [f64; 3] {
    std::array::from_fn(|k| params.noise_base[k] + params.noise_range_slope[k] * range)
}

/// One PEM draw per obstacle, in obstacle order: a detection and, when
/// detected, offsets on (s, d, psi).
pub fn pem_observe(
    ego: &VehicleState,
    obstacles: &[VehicleState],
    params: &PemParams,
    sampler: &mut Sampler,
) -> Vec<Option<Observation>> {
    features(ego, obstacles)
        .iter()
        .zip(obstacles)
        .map(|(f, o)| {
            if !sampler.detect(detection_probability(params, f)) {
                return None;
            }
            let [ss, sd, sp] = noise_sd(params, f.range);
            Some(Observation {
                s: o.s + sampler.perturb(ss),
                d: o.d + sampler.perturb(sd),
                psi: o.psi + sampler.perturb(sp),
            })
        })
        .collect()
}
