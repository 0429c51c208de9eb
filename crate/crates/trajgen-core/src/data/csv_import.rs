//! CSV ingestion for user-supplied GPS corpora.
//!
//! Expected columns: `traj_id, lon, lat, timestamp` (any order, extra columns
//! ignored). Rows are grouped by id in order of first appearance and sorted
//! by timestamp within each group; malformed rows are counted and skipped.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use super::{RawPoint, RawTrajectory};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ImportStats {
    pub rows: usize,
    pub skipped: usize,
}

pub fn import_csv(path: &Path) -> Result<(Vec<RawTrajectory>, ImportStats)> {
    let file = std::fs::File::open(path)?;
    import_csv_reader(file)
}

pub fn import_csv_reader<R: Read>(reader: R) -> Result<(Vec<RawTrajectory>, ImportStats)> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Ingestion(format!("unparseable header: {e}")))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Ingestion(format!("missing column `{name}`")))
    };
    let (id_col, lon_col, lat_col, ts_col) =
        (col("traj_id")?, col("lon")?, col("lat")?, col("timestamp")?);

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<RawPoint>> = HashMap::new();
    let mut stats = ImportStats::default();

    for record in rdr.records() {
        stats.rows += 1;
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                stats.skipped += 1;
                continue;
            }
        };
        let parsed = (|| {
            let id = record.get(id_col)?.trim().to_string();
            let lon: f64 = record.get(lon_col)?.trim().parse().ok()?;
            let lat: f64 = record.get(lat_col)?.trim().parse().ok()?;
            let t: f64 = record.get(ts_col)?.trim().parse().ok()?;
            if !(lon.is_finite() && lat.is_finite() && t.is_finite()) {
                return None;
            }
            Some((id, RawPoint { lon, lat, t }))
        })();
        match parsed {
            Some((id, point)) => {
                let entry = groups.entry(id.clone()).or_insert_with(|| {
                    order.push(id);
                    Vec::new()
                });
                entry.push(point);
            }
            None => stats.skipped += 1,
        }
    }

    let mut trajs = Vec::with_capacity(order.len());
    for id in order {
        let mut points = groups.remove(&id).expect("group exists");
        points.sort_by(|a, b| a.t.partial_cmp(&b.t).expect("finite timestamps"));
        // Duplicate timestamps cannot be ordered meaningfully; keep the first.
        let before = points.len();
        points.dedup_by(|b, a| b.t == a.t);
        stats.skipped += before - points.len();
        trajs.push(RawTrajectory { points });
    }
    Ok((trajs, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_and_sorts() {
        let csv = "traj_id,lon,lat,timestamp\n\
                   a,104.1,30.1,3\n\
                   b,104.2,30.2,1\n\
                   a,104.0,30.0,1\n\
                   a,104.05,30.05,2\n\
                   b,104.25,30.25,2\n\
                   b,104.3,30.3,3\n";
        let (trajs, stats) = import_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(trajs.len(), 2);
        assert_eq!(trajs[0].len(), 3);
        assert_eq!(trajs[1].len(), 3);
        assert_eq!(stats.skipped, 0);
        // Group `a` first (first appearance), sorted by time.
        assert_eq!(trajs[0].points[0].t, 1.0);
        assert_eq!(trajs[0].points[2].t, 3.0);
        trajs.iter().for_each(|t| t.validate().unwrap());
    }

    #[test]
    fn malformed_rows_are_counted_and_skipped() {
        let csv = "traj_id,lon,lat,timestamp\n\
                   a,104.0,30.0,1\n\
                   a,not_a_number,30.0,2\n\
                   a,104.1,30.1,3\n";
        let (trajs, stats) = import_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(trajs[0].len(), 2);
        assert_eq!(stats.skipped, 1);
        assert_eq!(stats.rows, 3);
    }

    #[test]
    fn missing_column_is_an_ingestion_error() {
        let csv = "traj_id,x,lat,timestamp\na,1,2,3\n";
        assert!(matches!(
            import_csv_reader(csv.as_bytes()),
            Err(Error::Ingestion(_))
        ));
    }

    #[test]
    fn extra_columns_are_ignored_and_order_free() {
        let csv = "speed,lat,lon,timestamp,traj_id\n0.3,30.0,104.0,1,z\n0.4,30.1,104.1,2,z\n";
        let (trajs, _) = import_csv_reader(csv.as_bytes()).unwrap();
        assert_eq!(trajs.len(), 1);
        assert_eq!(trajs[0].points[0].lon, 104.0);
        assert_eq!(trajs[0].points[0].lat, 30.0);
    }
}
