//! Preprocessing pipeline: length filter -> time-gap filter -> uniform
//! resampling -> normalization, in that order, plus condition extraction.

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use super::{BBox, ConditionVector, Dataset, DatasetMeta, RawTrajectory};
use crate::error::{Error, Result};
use crate::metrics::{GridSpec, DEFAULT_CELL_DEG};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Whether resampling is uniform in point index or in arc length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    /// Uniform in point index; matches fixed-rate GPS logs.
    #[default]
    Index,
    ArcLength,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    /// Trajectories shorter than this many points are dropped.
    pub min_len: usize,
    /// Trajectories with any consecutive gap strictly above this are dropped.
    pub max_gap_secs: f64,
    /// Fixed output length.
    pub n_points: usize,
    pub resample_mode: ResampleMode,
    /// Grid cell edge for the condition/metric grid.
    pub cell_deg: f64,
    /// Day length used for the four departure-time buckets.
    pub day_secs: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            min_len: 120,
            max_gap_secs: 25.0,
            n_points: 200,
            resample_mode: ResampleMode::Index,
            cell_deg: DEFAULT_CELL_DEG,
            day_secs: SECONDS_PER_DAY,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PreprocessStats {
    pub kept: usize,
    pub dropped_short: usize,
    pub dropped_gap: usize,
    /// Points that fell outside the grid during condition extraction.
    pub clamped_endpoints: usize,
}

/// Drop trajectories with fewer than `min_len` points; order preserved.
pub fn filter_min_length(trajs: Vec<RawTrajectory>, min_len: usize) -> Vec<RawTrajectory> {
    trajs.into_iter().filter(|t| t.len() >= min_len).collect()
}

/// Drop trajectories containing a consecutive time gap strictly greater than
/// `max_gap_secs`; a gap of exactly the threshold is kept.
pub fn filter_time_gap(trajs: Vec<RawTrajectory>, max_gap_secs: f64) -> Vec<RawTrajectory> {
    trajs
        .into_iter()
        .filter(|t| t.points.windows(2).all(|w| w[1].t - w[0].t <= max_gap_secs))
        .collect()
}

/// Resample a trajectory to exactly `n_points` positions, linearly
/// interpolating between neighbors. Endpoints are preserved exactly.
pub fn resample_uniform(
    traj: &RawTrajectory,
    n_points: usize,
    mode: ResampleMode,
) -> Result<Array2<f64>> {
    let len = traj.len();
    if len < 2 {
        return Err(Error::Resample(format!("need at least 2 points, got {len}")));
    }
    if n_points < 2 {
        return Err(Error::Resample(format!("need at least 2 output points, got {n_points}")));
    }
    let mut out = Array2::zeros((n_points, 2));
    let write = |out: &mut Array2<f64>, j: usize, lon: f64, lat: f64| {
        out[[j, 0]] = lon;
        out[[j, 1]] = lat;
    };
    match mode {
        ResampleMode::Index => {
            for j in 0..n_points {
                if j == 0 {
                    write(&mut out, 0, traj.points[0].lon, traj.points[0].lat);
                    continue;
                }
                if j == n_points - 1 {
                    let p = &traj.points[len - 1];
                    write(&mut out, j, p.lon, p.lat);
                    continue;
                }
                let pos = j as f64 * (len - 1) as f64 / (n_points - 1) as f64;
                let i = (pos.floor() as usize).min(len - 2);
                let frac = pos - i as f64;
                let (a, b) = (&traj.points[i], &traj.points[i + 1]);
                write(
                    &mut out,
                    j,
                    a.lon + (b.lon - a.lon) * frac,
                    a.lat + (b.lat - a.lat) * frac,
                );
            }
        }
        ResampleMode::ArcLength => {
            let mut cum = Vec::with_capacity(len);
            cum.push(0.0);
            for w in traj.points.windows(2) {
                let d = ((w[1].lon - w[0].lon).powi(2) + (w[1].lat - w[0].lat).powi(2)).sqrt();
                cum.push(cum.last().unwrap() + d);
            }
            let total = *cum.last().unwrap();
            for j in 0..n_points {
                if j == 0 {
                    write(&mut out, 0, traj.points[0].lon, traj.points[0].lat);
                    continue;
                }
                if j == n_points - 1 || total == 0.0 {
                    let p = &traj.points[if total == 0.0 { 0 } else { len - 1 }];
                    write(&mut out, j, p.lon, p.lat);
                    continue;
                }
                let target = j as f64 * total / (n_points - 1) as f64;
                let i = match cum.binary_search_by(|c| c.partial_cmp(&target).unwrap()) {
                    Ok(i) => i.min(len - 2),
                    Err(i) => (i - 1).min(len - 2),
                };
                let seg = cum[i + 1] - cum[i];
                let frac = if seg > 0.0 { (target - cum[i]) / seg } else { 0.0 };
                let (a, b) = (&traj.points[i], &traj.points[i + 1]);
                write(
                    &mut out,
                    j,
                    a.lon + (b.lon - a.lon) * frac,
                    a.lat + (b.lat - a.lat) * frac,
                );
            }
        }
    }
    Ok(out)
}

/// Map degree coordinates onto `[-1, 1]^2`, each axis independently.
pub fn normalize_points(points: &Array2<f64>, bbox: &BBox) -> Array2<f64> {
    let mut out = points.clone();
    for mut row in out.rows_mut() {
        row[0] = 2.0 * (row[0] - bbox.lon_min) / (bbox.lon_max - bbox.lon_min) - 1.0;
        row[1] = 2.0 * (row[1] - bbox.lat_min) / (bbox.lat_max - bbox.lat_min) - 1.0;
    }
    out
}

/// Exact inverse of [`normalize_points`].
pub fn denormalize_points(points: &Array2<f64>, bbox: &BBox) -> Array2<f64> {
    let mut out = points.clone();
    for mut row in out.rows_mut() {
        row[0] = bbox.lon_min + (row[0] + 1.0) * 0.5 * (bbox.lon_max - bbox.lon_min);
        row[1] = bbox.lat_min + (row[1] + 1.0) * 0.5 * (bbox.lat_max - bbox.lat_min);
    }
    out
}

/// Departure cell, destination cell, departure-time bucket and normalized
/// trip length for one raw trajectory. Returns the number of endpoint
/// coordinates that had to be clamped into the grid.
pub fn extract_condition(
    traj: &RawTrajectory,
    grid: &GridSpec,
    bbox: &BBox,
    day_secs: f64,
) -> Result<(ConditionVector, usize)> {
    if traj.is_empty() {
        return Err(Error::Data("cannot extract a condition from an empty trajectory".into()));
    }
    let first = &traj.points[0];
    let last = &traj.points[traj.len() - 1];
    let (dep, c0) = grid.cell_of_checked(first.lon, first.lat);
    let (dst, c1) = grid.cell_of_checked(last.lon, last.lat);
    let frac = (first.t.rem_euclid(day_secs)) / day_secs;
    let time_bucket = ((frac * 4.0).floor() as i64).clamp(0, 3) as u8;
    let mut length = 0.0;
    for w in traj.points.windows(2) {
        length += ((w[1].lon - w[0].lon).powi(2) + (w[1].lat - w[0].lat).powi(2)).sqrt();
    }
    Ok((
        ConditionVector {
            dep_cell: dep as u32,
            dst_cell: dst as u32,
            time_bucket,
            trip_length: length / bbox.diagonal(),
        },
        usize::from(c0) + usize::from(c1),
    ))
}

/// Full pipeline: filters, resampling, grid construction, normalization and
/// condition extraction. Produces an empty dataset (with a degenerate unit
/// box) only when nothing survives the filters.
pub fn preprocess(
    raw: Vec<RawTrajectory>,
    cfg: &PreprocessConfig,
) -> Result<(Dataset, PreprocessStats)> {
    let mut stats = PreprocessStats::default();
    let total = raw.len();
    let long_enough = filter_min_length(raw, cfg.min_len);
    stats.dropped_short = total - long_enough.len();
    let kept = filter_time_gap(long_enough, cfg.max_gap_secs);
    stats.dropped_gap = total - stats.dropped_short - kept.len();
    stats.kept = kept.len();

    let mut resampled = Vec::with_capacity(kept.len());
    for traj in &kept {
        traj.validate()?;
        resampled.push(resample_uniform(traj, cfg.n_points, cfg.resample_mode)?);
    }

    let bbox = BBox::of_points(
        resampled
            .iter()
            .flat_map(|a| a.rows().into_iter().map(|r| (r[0], r[1]))),
    )
    .unwrap_or(BBox { lon_min: -1.0, lon_max: 1.0, lat_min: -1.0, lat_max: 1.0 });
    let bbox = widen_if_flat(bbox);
    let grid = GridSpec::covering(&bbox, cfg.cell_deg)?;

    let mut trajectories = Array3::zeros((kept.len(), cfg.n_points, 2));
    let mut conditions = Vec::with_capacity(kept.len());
    for (i, (traj, points)) in kept.iter().zip(&resampled).enumerate() {
        let norm = normalize_points(points, &bbox);
        trajectories.index_axis_mut(Axis(0), i).assign(&norm);
        let (cond, clamped) = extract_condition(traj, &grid, &bbox, cfg.day_secs)?;
        stats.clamped_endpoints += clamped;
        conditions.push(cond);
    }

    let dataset = Dataset {
        trajectories,
        conditions,
        meta: DatasetMeta { bbox, n_points: cfg.n_points, grid },
    };
    dataset.validate()?;
    Ok((dataset, stats))
}

/// A dataset whose points are all on one line would make normalization
/// degenerate; pad such an axis symmetrically.
fn widen_if_flat(mut b: BBox) -> BBox {
    let pad = 1e-6;
    if !(b.lon_max > b.lon_min) {
        b.lon_min -= pad;
        b.lon_max += pad;
    }
    if !(b.lat_max > b.lat_min) {
        b.lat_min -= pad;
        b.lat_max += pad;
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RawPoint;
    use approx::assert_relative_eq;

    fn traj_of(points: &[(f64, f64, f64)]) -> RawTrajectory {
        RawTrajectory {
            points: points.iter().map(|&(lon, lat, t)| RawPoint { lon, lat, t }).collect(),
        }
    }

    fn uniform_traj(len: usize, dt: f64) -> RawTrajectory {
        RawTrajectory {
            points: (0..len)
                .map(|i| RawPoint { lon: i as f64 * 1e-4, lat: 0.5, t: i as f64 * dt })
                .collect(),
        }
    }

    #[test]
    fn length_filter_threshold_is_exact() {
        let trajs = vec![uniform_traj(119, 3.0), uniform_traj(120, 3.0)];
        let kept = filter_min_length(trajs, 120);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].len(), 120);
        assert!(filter_min_length(vec![], 120).is_empty());
    }

    #[test]
    fn gap_filter_is_strict() {
        let ok = uniform_traj(10, 3.0);
        let boundary = traj_of(&[(0.0, 0.0, 0.0), (1e-4, 0.0, 25.0), (2e-4, 0.0, 28.0)]);
        let gap = traj_of(&[(0.0, 0.0, 0.0), (1e-4, 0.0, 26.0)]);
        let kept = filter_time_gap(vec![ok.clone(), boundary.clone(), gap], 25.0);
        assert_eq!(kept, vec![ok, boundary]);
    }

    #[test]
    fn resample_identity_when_lengths_match() {
        let traj = uniform_traj(7, 1.0);
        let out = resample_uniform(&traj, 7, ResampleMode::Index).unwrap();
        for (i, p) in traj.points.iter().enumerate() {
            assert_eq!(out[[i, 0]], p.lon);
            assert_eq!(out[[i, 1]], p.lat);
        }
    }

    #[test]
    fn resample_interpolation_arithmetic() {
        let traj = traj_of(&[(0.0, 0.0, 0.0), (2.0, 0.0, 1.0), (4.0, 0.0, 2.0)]);
        let out = resample_uniform(&traj, 5, ResampleMode::Index).unwrap();
        let xs: Vec<f64> = (0..5).map(|j| out[[j, 0]]).collect();
        for (x, want) in xs.iter().zip([0.0, 1.0, 2.0, 3.0, 4.0]) {
            assert_relative_eq!(*x, want, max_relative = 1e-15);
        }
        assert!(out.column(1).iter().all(|&y| y == 0.0));
    }

    #[test]
    fn resample_preserves_endpoints_and_needs_two_points() {
        let traj = traj_of(&[(1.0, 2.0, 0.0), (1.5, 2.5, 1.0), (3.0, 1.0, 2.0)]);
        for mode in [ResampleMode::Index, ResampleMode::ArcLength] {
            let out = resample_uniform(&traj, 9, mode).unwrap();
            assert_eq!((out[[0, 0]], out[[0, 1]]), (1.0, 2.0));
            assert_eq!((out[[8, 0]], out[[8, 1]]), (3.0, 1.0));
        }
        let short = traj_of(&[(0.0, 0.0, 0.0)]);
        assert!(resample_uniform(&short, 5, ResampleMode::Index).is_err());
    }

    #[test]
    fn normalize_maps_box_corners_and_center() {
        let bbox = BBox { lon_min: 10.0, lon_max: 12.0, lat_min: -3.0, lat_max: 1.0 };
        let pts = ndarray::arr2(&[[10.0, -3.0], [12.0, 1.0], [11.0, -1.0]]);
        let norm = normalize_points(&pts, &bbox);
        assert_eq!(norm, ndarray::arr2(&[[-1.0, -1.0], [1.0, 1.0], [0.0, 0.0]]));
    }

    #[test]
    fn normalize_round_trip_is_tight() {
        let bbox = BBox { lon_min: 104.01, lon_max: 104.09, lat_min: 30.6, lat_max: 30.71 };
        let pts = ndarray::arr2(&[
            [104.0123456, 30.6543210],
            [104.0899999, 30.7099999],
            [104.0500001, 30.6000001],
        ]);
        let back = denormalize_points(&normalize_points(&pts, &bbox), &bbox);
        for (a, b) in back.iter().zip(pts.iter()) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn condition_buckets_and_degenerate_trips() {
        let bbox = BBox { lon_min: 0.0, lon_max: 0.01, lat_min: 0.0, lat_max: 0.01 };
        let grid = GridSpec::covering(&bbox, DEFAULT_CELL_DEG).unwrap();

        let loop_trip = traj_of(&[(0.001, 0.001, 0.0), (0.002, 0.001, 5.0), (0.001, 0.001, 9.0)]);
        let (c, clamped) = extract_condition(&loop_trip, &grid, &bbox, SECONDS_PER_DAY).unwrap();
        assert_eq!(c.dep_cell, c.dst_cell);
        assert_eq!(c.time_bucket, 0);
        assert_eq!(clamped, 0);

        let evening = traj_of(&[(0.001, 0.001, 18.0 * 3600.0), (0.002, 0.001, 18.0 * 3600.0 + 5.0)]);
        let (c, _) = extract_condition(&evening, &grid, &bbox, SECONDS_PER_DAY).unwrap();
        assert_eq!(c.time_bucket, 3);

        let stationary = traj_of(&[(0.003, 0.003, 0.0), (0.003, 0.003, 1.0)]);
        let (c, _) = extract_condition(&stationary, &grid, &bbox, SECONDS_PER_DAY).unwrap();
        assert_eq!(c.trip_length, 0.0);
    }

    #[test]
    fn pipeline_is_idempotent_on_its_own_output() {
        let cfg = PreprocessConfig { min_len: 5, n_points: 16, ..Default::default() };
        let raw: Vec<RawTrajectory> = (0..4)
            .map(|k| {
                RawTrajectory {
                    points: (0..12)
                        .map(|i| RawPoint {
                            lon: 0.001 * i as f64 + k as f64 * 1e-4,
                            lat: 0.002 * (i as f64).sin().abs() + 0.001,
                            t: i as f64 * 3.0,
                        })
                        .collect(),
                }
            })
            .collect();
        let (first, _) = preprocess(raw, &cfg).unwrap();

        // Feed the resampled output back in as raw trajectories.
        let again: Vec<RawTrajectory> = (0..first.len())
            .map(|i| {
                let deg = first.trajectory_degrees(i);
                RawTrajectory {
                    points: (0..deg.dim().0)
                        .map(|j| RawPoint { lon: deg[[j, 0]], lat: deg[[j, 1]], t: j as f64 * 3.0 })
                        .collect(),
                }
            })
            .collect();
        let cfg2 = PreprocessConfig { min_len: 16, ..cfg };
        let (second, _) = preprocess(again, &cfg2).unwrap();
        assert_eq!(second.len(), first.len());
        for (a, b) in second.trajectories.iter().zip(first.trajectories.iter()) {
            assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
        }
    }
}
