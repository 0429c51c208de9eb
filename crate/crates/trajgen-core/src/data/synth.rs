//! Synthetic grid-city trajectory generator: Manhattan-style walks over a
//! street lattice with a weighted "avenue" subset, fixed-interval sampling
//! and optional GPS jitter. Stands in for real-world corpora at desk scale.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{RawPoint, RawTrajectory};
use crate::real::Real;
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthCityConfig {
    /// Streets per axis; the lattice spans `(streets - 1)` blocks each way.
    pub streets_per_axis: usize,
    /// Block edge length in degrees.
    pub block_len_deg: f64,
    /// Fraction of streets designated as high-traffic avenues.
    pub avenue_fraction: f64,
    /// Base probability of turning at a crossed intersection, scaled by the
    /// crossing street's weight.
    pub turn_prob: f64,
    /// Walking speed range in blocks per sampling step.
    pub speed_min: f64,
    pub speed_max: f64,
    /// GPS jitter standard deviation in degrees.
    pub jitter_deg: f64,
    /// Number of trips to generate.
    pub trips: usize,
    pub seed: u64,
    /// Departure times are uniform over this window (seconds).
    pub window_start_secs: f64,
    pub window_end_secs: f64,
    /// South-west corner of the lattice.
    pub origin_lon: f64,
    pub origin_lat: f64,
    /// Seconds between consecutive GPS fixes.
    pub sample_interval_secs: f64,
    /// Points per trip, drawn uniformly from this range.
    pub len_min: usize,
    pub len_max: usize,
}

impl Default for SynthCityConfig {
    fn default() -> Self {
        Self {
            streets_per_axis: 16,
            block_len_deg: 0.002,
            avenue_fraction: 0.25,
            turn_prob: 0.3,
            speed_min: 0.05,
            speed_max: 0.15,
            jitter_deg: 3.0e-5,
            trips: 1000,
            seed: 0,
            window_start_secs: 0.0,
            window_end_secs: 86_400.0,
            origin_lon: 104.0,
            origin_lat: 30.65,
            sample_interval_secs: 3.0,
            len_min: 130,
            len_max: 240,
        }
    }
}

/// One straight road piece in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub lon_a: f64,
    pub lat_a: f64,
    pub lon_b: f64,
    pub lat_b: f64,
}

/// The full street lattice, for plotting generated data over ground truth.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RoadMap {
    pub segments: Vec<Segment>,
}

const AVENUE_WEIGHT: f64 = 4.0;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Axis {
    Horizontal,
    Vertical,
}

struct Walker {
    axis: Axis,
    /// Integer street coordinate on the perpendicular axis.
    fixed: f64,
    /// Continuous position along the movement axis, in blocks.
    along: f64,
    dir: f64,
}

impl Walker {
    fn position(&self) -> (f64, f64) {
        match self.axis {
            Axis::Horizontal => (self.along, self.fixed),
            Axis::Vertical => (self.fixed, self.along),
        }
    }
}

struct CityLayout {
    n: usize,
    /// Per-street avenue weights, horizontal then vertical.
    weight_h: Vec<f64>,
    weight_v: Vec<f64>,
    /// Cumulative start weights over the n*n intersections.
    start_cdf: Vec<f64>,
}

impl CityLayout {
    fn build(cfg: &SynthCityConfig, rng: &mut impl Rng) -> Self {
        let n = cfg.streets_per_axis;
        let pick = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
            (0..n)
                .map(|_| {
                    if rng.random::<f64>() < cfg.avenue_fraction {
                        AVENUE_WEIGHT
                    } else {
                        1.0
                    }
                })
                .collect()
        };
        let weight_h = pick(rng);
        let weight_v = pick(rng);
        let mut start_cdf = Vec::with_capacity(n * n);
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += weight_h[j] * weight_v[i];
                start_cdf.push(acc);
            }
        }
        Self { n, weight_h, weight_v, start_cdf }
    }

    fn sample_start(&self, rng: &mut impl Rng) -> (usize, usize) {
        let total = *self.start_cdf.last().expect("lattice >= 2x2");
        let u = rng.random::<f64>() * total;
        let idx = self.start_cdf.partition_point(|&c| c < u).min(self.start_cdf.len() - 1);
        (idx % self.n, idx / self.n)
    }

    /// Weight of the street that crosses the walker's street at integer
    /// coordinate `k` along its movement axis.
    fn crossing_weight(&self, axis: Axis, k: usize) -> f64 {
        match axis {
            Axis::Horizontal => self.weight_v[k],
            Axis::Vertical => self.weight_h[k],
        }
    }
}

/// Generate `cfg.trips` lattice-following trajectories plus the road map.
///
/// With `jitter_deg = 0` every emitted point lies exactly on a street line
/// (one coordinate is an exact multiple of the block length). Trip `i` draws
/// from ChaCha8 stream `1 + i` of `cfg.seed`; stream 0 fixes the city layout.
pub fn synth_city(cfg: &SynthCityConfig) -> (Vec<RawTrajectory>, RoadMap) {
    assert!(cfg.streets_per_axis >= 2, "lattice must be at least 2x2");
    assert!(cfg.jitter_deg >= 0.0);
    assert!(cfg.speed_min > 0.0 && cfg.speed_min <= cfg.speed_max);
    assert!(cfg.len_min >= 2 && cfg.len_min <= cfg.len_max);

    let mut layout_rng = stream_rng(cfg.seed, 0);
    let layout = CityLayout::build(cfg, &mut layout_rng);

    let trajs: Vec<RawTrajectory> =
        (0..cfg.trips).map(|i| walk_trip(cfg, &layout, i as u64)).collect();

    let n = cfg.streets_per_axis;
    let extent = (n - 1) as f64 * cfg.block_len_deg;
    let mut segments = Vec::with_capacity(2 * n);
    for k in 0..n {
        let off = k as f64 * cfg.block_len_deg;
        segments.push(Segment {
            lon_a: cfg.origin_lon,
            lat_a: cfg.origin_lat + off,
            lon_b: cfg.origin_lon + extent,
            lat_b: cfg.origin_lat + off,
        });
        segments.push(Segment {
            lon_a: cfg.origin_lon + off,
            lat_a: cfg.origin_lat,
            lon_b: cfg.origin_lon + off,
            lat_b: cfg.origin_lat + extent,
        });
    }
    (trajs, RoadMap { segments })
}

fn walk_trip(cfg: &SynthCityConfig, layout: &CityLayout, trip: u64) -> RawTrajectory {
    let mut rng = stream_rng(cfg.seed, 1 + trip);
    let n = layout.n;
    let max_pos = (n - 1) as f64;

    let len = rng.random_range(cfg.len_min..=cfg.len_max);
    let speed = rng.random_range(cfg.speed_min..=cfg.speed_max);
    let depart = rng.random_range(cfg.window_start_secs..cfg.window_end_secs.max(cfg.window_start_secs + 1e-9));

    let (ix, iy) = layout.sample_start(&mut rng);
    let axis = if rng.random::<bool>() { Axis::Horizontal } else { Axis::Vertical };
    let (fixed, along) = match axis {
        Axis::Horizontal => (iy as f64, ix as f64),
        Axis::Vertical => (ix as f64, iy as f64),
    };
    // Head toward the farther boundary so short straight walks cannot stall.
    let dir = if along <= max_pos / 2.0 { 1.0 } else { -1.0 };
    let mut walker = Walker { axis, fixed, along, dir };

    let mut points = Vec::with_capacity(len);
    let mut emit = |walker: &Walker, step: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let (x, y) = walker.position();
        let (jx, jy) = if cfg.jitter_deg > 0.0 {
            (
                f64::std_normal(rng) * cfg.jitter_deg,
                f64::std_normal(rng) * cfg.jitter_deg,
            )
        } else {
            (0.0, 0.0)
        };
        points.push(RawPoint {
            lon: cfg.origin_lon + x * cfg.block_len_deg + jx,
            lat: cfg.origin_lat + y * cfg.block_len_deg + jy,
            t: depart + step as f64 * cfg.sample_interval_secs,
        });
    };

    emit(&walker, 0, &mut rng);
    for step in 1..len {
        advance(&mut walker, speed, cfg, layout, &mut rng, max_pos);
        emit(&walker, step, &mut rng);
    }
    RawTrajectory { points }
}

fn advance(
    w: &mut Walker,
    dist: f64,
    cfg: &SynthCityConfig,
    layout: &CityLayout,
    rng: &mut impl Rng,
    max_pos: f64,
) {
    let mut remaining = dist;
    // Guard against pathological configs; each iteration consumes distance.
    for _ in 0..64 {
        if remaining <= 1e-12 {
            return;
        }
        let next_int = if w.dir > 0.0 {
            let c = w.along.floor() + 1.0;
            if c - w.along < 1e-9 { c + 1.0 } else { c }
        } else {
            let c = w.along.ceil() - 1.0;
            if w.along - c < 1e-9 { c - 1.0 } else { c }
        };
        let to_cross = (next_int - w.along).abs();
        if to_cross > remaining {
            w.along += w.dir * remaining;
            return;
        }
        // Land exactly on the intersection.
        remaining -= to_cross;
        w.along = next_int;

        if w.along <= 0.0 || w.along >= max_pos {
            w.along = w.along.clamp(0.0, max_pos);
            if cfg.turn_prob > 0.0 {
                turn(w, layout, rng, max_pos);
            } else {
                w.dir = -w.dir;
            }
            continue;
        }
        let k = w.along as usize;
        let p_turn =
            (cfg.turn_prob * layout.crossing_weight(w.axis, k) / AVENUE_WEIGHT).min(0.95);
        if cfg.turn_prob > 0.0 && rng.random::<f64>() < p_turn {
            turn(w, layout, rng, max_pos);
        }
    }
}

fn turn(w: &mut Walker, _layout: &CityLayout, rng: &mut impl Rng, max_pos: f64) {
    let new_fixed = w.along;
    let new_along = w.fixed;
    w.axis = match w.axis {
        Axis::Horizontal => Axis::Vertical,
        Axis::Vertical => Axis::Horizontal,
    };
    w.fixed = new_fixed;
    w.along = new_along;
    w.dir = if new_along <= 0.0 {
        1.0
    } else if new_along >= max_pos {
        -1.0
    } else if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    };
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_jitter_points_sit_on_lattice_lines() {
        let cfg = SynthCityConfig {
            trips: 20,
            jitter_deg: 0.0,
            len_min: 20,
            len_max: 40,
            ..Default::default()
        };
        let (trajs, _) = synth_city(&cfg);
        assert_eq!(trajs.len(), 20);
        for traj in &trajs {
            for p in &traj.points {
                let x = (p.lon - cfg.origin_lon) / cfg.block_len_deg;
                let y = (p.lat - cfg.origin_lat) / cfg.block_len_deg;
                let on_line = (x - x.round()).abs() < 1e-9 || (y - y.round()).abs() < 1e-9;
                assert!(on_line, "point off lattice: ({x}, {y})");
            }
        }
    }

    #[test]
    fn same_seed_reproduces_everything() {
        let cfg = SynthCityConfig { trips: 8, ..Default::default() };
        let (a, map_a) = synth_city(&cfg);
        let (b, map_b) = synth_city(&cfg);
        assert_eq!(a, b);
        assert_eq!(map_a.segments, map_b.segments);
    }

    #[test]
    fn zero_turn_probability_gives_straight_trips() {
        let cfg = SynthCityConfig {
            trips: 100,
            turn_prob: 0.0,
            jitter_deg: 0.0,
            streets_per_axis: 64,
            speed_min: 0.05,
            speed_max: 0.1,
            len_min: 50,
            len_max: 100,
            ..Default::default()
        };
        let (trajs, _) = synth_city(&cfg);
        for traj in &trajs {
            let first = traj.points[0];
            let last = traj.points[traj.len() - 1];
            let dx = (last.lon - first.lon).abs();
            let dy = (last.lat - first.lat).abs();
            // One axis does not move at all.
            assert!(dx < 1e-12 || dy < 1e-12, "not axis-aligned: {dx} {dy}");
            // Displacement along the other axis is speed * steps exactly.
            let moved = dx.max(dy) / cfg.block_len_deg;
            let per_step = moved / (traj.len() - 1) as f64;
            assert!(
                per_step >= cfg.speed_min - 1e-9 && per_step <= cfg.speed_max + 1e-9,
                "per-step displacement {per_step} outside speed range"
            );
        }
    }

    #[test]
    fn timestamps_are_uniformly_spaced_and_increasing() {
        let cfg = SynthCityConfig { trips: 5, ..Default::default() };
        let (trajs, _) = synth_city(&cfg);
        for traj in &trajs {
            traj.validate().unwrap();
            for w in traj.points.windows(2) {
                assert!((w[1].t - w[0].t - cfg.sample_interval_secs).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn road_map_covers_lattice() {
        let cfg = SynthCityConfig { streets_per_axis: 4, ..Default::default() };
        let (_, map) = synth_city(&cfg);
        assert_eq!(map.segments.len(), 8);
    }
}
