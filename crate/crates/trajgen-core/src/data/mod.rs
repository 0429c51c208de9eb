//! Trajectory data: synthetic city generation, preprocessing (length filter,
//! time-gap filter, uniform resampling, normalization), condition extraction
//! and dataset file I/O.

mod csv_import;
mod io;
mod preprocess;
mod synth;

pub use csv_import::{import_csv, import_csv_reader};
pub use preprocess::{
    denormalize_points, extract_condition, filter_min_length, filter_time_gap, normalize_points,
    preprocess, resample_uniform, PreprocessConfig, PreprocessStats, ResampleMode, SECONDS_PER_DAY,
};
pub use synth::{synth_city, RoadMap, Segment, SynthCityConfig};

use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::GridSpec;

/// One recorded GPS fix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawPoint {
    pub lon: f64,
    pub lat: f64,
    /// Seconds since epoch (or any consistent zero).
    pub t: f64,
}

/// A variable-length recorded trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTrajectory {
    pub points: Vec<RawPoint>,
}

impl RawTrajectory {
    /// Timestamps strictly increasing, coordinates finite.
    pub fn validate(&self) -> Result<()> {
        for w in self.points.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::Data(format!(
                    "timestamps not strictly increasing: {} then {}",
                    w[0].t, w[1].t
                )));
            }
        }
        if self.points.iter().any(|p| !(p.lon.is_finite() && p.lat.is_finite() && p.t.is_finite()))
        {
            return Err(Error::Data("non-finite coordinate or timestamp".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Lon/lat bounding box in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl BBox {
    pub fn validate(&self) -> Result<()> {
        let ok = self.lon_min.is_finite()
            && self.lon_max.is_finite()
            && self.lat_min.is_finite()
            && self.lat_max.is_finite()
            && self.lon_max > self.lon_min
            && self.lat_max > self.lat_min;
        if ok {
            Ok(())
        } else {
            Err(Error::Normalization(format!("degenerate bounding box {self:?}")))
        }
    }

    pub fn of_points(points: impl IntoIterator<Item = (f64, f64)>) -> Option<Self> {
        let mut b: Option<BBox> = None;
        for (lon, lat) in points {
            let b = b.get_or_insert(BBox {
                lon_min: lon,
                lon_max: lon,
                lat_min: lat,
                lat_max: lat,
            });
            b.lon_min = b.lon_min.min(lon);
            b.lon_max = b.lon_max.max(lon);
            b.lat_min = b.lat_min.min(lat);
            b.lat_max = b.lat_max.max(lat);
        }
        b
    }

    /// Diagonal length in degrees; the scale used to normalize trip lengths.
    pub fn diagonal(&self) -> f64 {
        let dx = self.lon_max - self.lon_min;
        let dy = self.lat_max - self.lat_min;
        (dx * dx + dy * dy).sqrt()
    }
}

/// Side information attached to each trajectory: the `c` in `eps(x_t, t, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConditionVector {
    /// Grid cell of the first point.
    pub dep_cell: u32,
    /// Grid cell of the last point.
    pub dst_cell: u32,
    /// Quarter of the day of departure, 0..=3.
    pub time_bucket: u8,
    /// Polyline length in degrees divided by the bounding-box diagonal.
    pub trip_length: f64,
}

/// Normalization constants and grid binding shared by every consumer of a
/// dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub bbox: BBox,
    pub n_points: usize,
    pub grid: GridSpec,
}

/// Fixed-length trajectories in `[-1, 1]^2` plus their conditions.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// Shape `(M, n_points, 2)`.
    pub trajectories: Array3<f64>,
    pub conditions: Vec<ConditionVector>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.trajectories.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn validate(&self) -> Result<()> {
        let (m, n, two) = self.trajectories.dim();
        if two != 2 || n != self.meta.n_points || m != self.conditions.len() {
            return Err(Error::Data(format!(
                "inconsistent dataset: array {:?}, {} conditions, meta n_points {}",
                self.trajectories.dim(),
                self.conditions.len(),
                self.meta.n_points
            )));
        }
        if self.trajectories.iter().any(|v| !v.is_finite() || v.abs() > 1.0 + 1e-9) {
            return Err(Error::Data("coordinates must lie in [-1, 1]".into()));
        }
        let cells = self.meta.grid.n_cells() as u32;
        if self
            .conditions
            .iter()
            .any(|c| c.dep_cell >= cells || c.dst_cell >= cells || c.time_bucket >= 4)
        {
            return Err(Error::Condition("condition outside grid or bucket range".into()));
        }
        Ok(())
    }

    /// Trajectory `i` denormalized back to degrees.
    pub fn trajectory_degrees(&self, i: usize) -> ndarray::Array2<f64> {
        denormalize_points(&self.trajectories.index_axis(ndarray::Axis(0), i).to_owned(), &self.meta.bbox)
    }
}
