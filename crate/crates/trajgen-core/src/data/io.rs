//! Versioned, checksummed binary container for datasets.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use ndarray::Array3;

use super::{BBox, ConditionVector, Dataset, DatasetMeta};
use crate::container::{HashingReader, HashingWriter};
use crate::error::{Error, Result};
use crate::metrics::GridSpec;

const MAGIC: &[u8; 4] = b"TGDS";
const VERSION: u32 = 1;

pub fn write_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    dataset.validate()?;
    let mut w = HashingWriter::new(BufWriter::new(File::create(path)?));
    w.put_bytes(MAGIC)?;
    w.put_u32(VERSION)?;

    let m = &dataset.meta;
    for v in [m.bbox.lon_min, m.bbox.lon_max, m.bbox.lat_min, m.bbox.lat_max] {
        w.put_f64(v)?;
    }
    w.put_u64(m.n_points as u64)?;
    w.put_f64(m.grid.origin_lon)?;
    w.put_f64(m.grid.origin_lat)?;
    w.put_f64(m.grid.cell)?;
    w.put_u64(m.grid.nx as u64)?;
    w.put_u64(m.grid.ny as u64)?;

    w.put_u64(dataset.len() as u64)?;
    for c in &dataset.conditions {
        w.put_u32(c.dep_cell)?;
        w.put_u32(c.dst_cell)?;
        w.put_u8(c.time_bucket)?;
        w.put_f64(c.trip_length)?;
    }
    for &v in dataset.trajectories.iter() {
        w.put_f64(v)?;
    }
    w.finish()
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut r = HashingReader::new(BufReader::new(File::open(path)?));
    let mut magic = [0u8; 4];
    r.get_bytes(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Version(format!("not a dataset file: magic {magic:?}")));
    }
    let version = r.get_u32()?;
    if version != VERSION {
        return Err(Error::Version(format!("dataset version {version}, expected {VERSION}")));
    }

    let bbox = BBox {
        lon_min: r.get_f64()?,
        lon_max: r.get_f64()?,
        lat_min: r.get_f64()?,
        lat_max: r.get_f64()?,
    };
    let n_points = r.get_u64()? as usize;
    let grid = GridSpec {
        origin_lon: r.get_f64()?,
        origin_lat: r.get_f64()?,
        cell: r.get_f64()?,
        nx: r.get_u64()? as usize,
        ny: r.get_u64()? as usize,
    };

    let m = r.get_u64()? as usize;
    let mut conditions = Vec::with_capacity(m);
    for _ in 0..m {
        conditions.push(ConditionVector {
            dep_cell: r.get_u32()?,
            dst_cell: r.get_u32()?,
            time_bucket: r.get_u8()?,
            trip_length: r.get_f64()?,
        });
    }
    let mut values = Vec::with_capacity(m * n_points * 2);
    for _ in 0..m * n_points * 2 {
        values.push(r.get_f64()?);
    }
    r.verify()?;

    let trajectories = Array3::from_shape_vec((m, n_points, 2), values)
        .map_err(|e| Error::Data(format!("bad array shape in dataset: {e}")))?;
    let dataset = Dataset {
        trajectories,
        conditions,
        meta: DatasetMeta { bbox, n_points, grid },
    };
    dataset.validate()?;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{preprocess, synth_city, PreprocessConfig, SynthCityConfig};
    use std::io::{Read, Write};

    fn sample_dataset() -> Dataset {
        let cfg = SynthCityConfig { trips: 12, len_min: 20, len_max: 30, ..Default::default() };
        let (raw, _) = synth_city(&cfg);
        let pre = PreprocessConfig { min_len: 10, n_points: 25, ..Default::default() };
        preprocess(raw, &pre).unwrap().0
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dataset = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.tgds");
        write_dataset(&dataset, &path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert_eq!(dataset.trajectories, back.trajectories);
        assert_eq!(dataset.conditions, back.conditions);
        assert_eq!(dataset.meta, back.meta);
    }

    #[test]
    fn truncation_is_detected() {
        let dataset = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.tgds");
        write_dataset(&dataset, &path).unwrap();
        let mut bytes = Vec::new();
        File::open(&path).unwrap().read_to_end(&mut bytes).unwrap();
        bytes.truncate(bytes.len() - 40);
        let truncated = dir.path().join("t.tgds");
        File::create(&truncated).unwrap().write_all(&bytes).unwrap();
        assert!(matches!(read_dataset(&truncated), Err(Error::Checksum(_))));
    }

    #[test]
    fn corruption_is_detected() {
        let dataset = sample_dataset();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.tgds");
        write_dataset(&dataset, &path).unwrap();
        let mut bytes = Vec::new();
        File::open(&path).unwrap().read_to_end(&mut bytes).unwrap();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0xff;
        File::create(&path).unwrap().write_all(&bytes).unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Checksum(_)) | Err(Error::Data(_))));
    }

    #[test]
    fn empty_dataset_round_trips() {
        let d = sample_dataset();
        let empty = Dataset {
            trajectories: Array3::zeros((0, d.meta.n_points, 2)),
            conditions: vec![],
            meta: d.meta,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.tgds");
        write_dataset(&empty, &path).unwrap();
        let back = read_dataset(&path).unwrap();
        assert!(back.is_empty());
        assert_eq!(back.meta, empty.meta);
    }

    #[test]
    fn wrong_magic_is_a_version_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.bin");
        File::create(&path).unwrap().write_all(b"NOPEnope").unwrap();
        assert!(matches!(read_dataset(&path), Err(Error::Version(_))));
    }
}
