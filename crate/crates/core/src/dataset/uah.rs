//! UAH-DriveSet adapter: discovers trip directories under the published
//! layout (driver folders holding `<stamp>-<km>-<driver>-<BEHAVIOR>-<ROAD>`
//! trip folders) and loads their raw GPS/accelerometer/OpenStreetMap files.

use std::fs;
use std::path::{Path, PathBuf};

use super::{
    build_feature_matrix, clean, parse_file, resample_merge, ColumnSchema, DatasetError,
    FeatureMatrix, KalmanConfig, LabeledSeries, ParseOptions, Road, Variant,
};
use crate::classifier::BehaviorClass;

pub const GPS_FILE: &str = "RAW_GPS.txt";
pub const ACCEL_FILE: &str = "RAW_ACCELEROMETERS.txt";
pub const OSM_FILE: &str = "PROC_OPENSTREETMAP_DATA.txt";

/// One trip directory found by `scan`.
#[derive(Debug, Clone)]
pub struct Trip {
    pub driver: String,
    pub behavior: BehaviorClass,
    pub road: Road,
    pub name: String,
    pub path: PathBuf,
}

fn is_driver_dir(name: &str) -> bool {
    let mut chars = name.chars();
    chars.next().is_some_and(|c| c == 'D' || c == 'd')
        && chars.clone().next().is_some()
        && chars.all(|c| c.is_ascii_digit())
}

/// Extracts the behavior and road tokens from a trip directory name.
pub fn parse_trip_name(name: &str) -> Option<(BehaviorClass, Road)> {
    let mut behavior = None;
    let mut road = None;
    for token in name.split('-') {
        behavior = behavior.or_else(|| BehaviorClass::parse(token));
        road = road.or_else(|| Road::parse(token));
    }
    Some((behavior?, road?))
}

fn read_dir_sorted(path: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let iter = fs::read_dir(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut entries = Vec::new();
    for entry in iter {
        let entry = entry.map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        entries.push(entry.path());
    }
    entries.sort();
    Ok(entries)
}

/// Finds every trip directory under `root`, in (driver, trip name) order.
/// Directories that do not match the naming convention are ignored.
pub fn scan(root: &Path) -> Result<Vec<Trip>, DatasetError> {
    let mut trips = Vec::new();
    for driver_path in read_dir_sorted(root)? {
        let Some(driver) = driver_path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if !driver_path.is_dir() || !is_driver_dir(driver) {
            continue;
        }
        for trip_path in read_dir_sorted(&driver_path)? {
            let Some(name) = trip_path.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            if !trip_path.is_dir() {
                continue;
            }
            if let Some((behavior, road)) = parse_trip_name(name) {
                trips.push(Trip {
                    driver: driver.to_string(),
                    behavior,
                    road,
                    name: name.to_string(),
                    path: trip_path,
                });
            }
        }
    }
    Ok(trips)
}

/// Parses, cleans, and resamples one trip into a labeled series. Variant A
/// additionally loads the OpenStreetMap speed-limit file.
pub fn load_trip(
    trip: &Trip,
    variant: Variant,
    rate: f64,
    kalman: &KalmanConfig,
    opts: &ParseOptions,
) -> Result<LabeledSeries, DatasetError> {
    let load = |file: &str, profile: &str| -> Result<super::Stream, DatasetError> {
        let schema = ColumnSchema::builtin(profile).expect("builtin profile");
        let (stream, _) = parse_file(&trip.path.join(file), &schema, opts).map(|s| clean(&s))?;
        Ok(stream)
    };
    let mut streams = vec![load(GPS_FILE, "uah-gps")?, load(ACCEL_FILE, "uah-accel")?];
    if variant == Variant::A {
        streams.push(load(OSM_FILE, "uah-osm")?);
    }
    let records = resample_merge(&streams, rate, kalman)?;
    LabeledSeries::new(trip.driver.clone(), trip.road, trip.behavior, records)
}

/// `load_trip` followed by feature assembly.
pub fn load_trip_features(
    trip: &Trip,
    variant: Variant,
    rate: f64,
    kalman: &KalmanConfig,
    opts: &ParseOptions,
) -> Result<FeatureMatrix, DatasetError> {
    let series = load_trip(trip, variant, rate, kalman, opts)?;
    build_feature_matrix(&series, variant)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(path: &Path, contents: &str) {
        let mut f = fs::File::create(path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
    }

    fn mini_tree() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let trip1 = dir
            .path()
            .join("D1")
            .join("20151110175712-16km-D1-NORMAL-MOTORWAY");
        let trip2 = dir
            .path()
            .join("D1")
            .join("20151111123456-25km-D1-AGGRESSIVE-SECONDARY");
        fs::create_dir_all(&trip1).unwrap();
        fs::create_dir_all(&trip2).unwrap();
        // ignored: a stray directory and a non-matching name
        fs::create_dir_all(dir.path().join("notes")).unwrap();
        fs::create_dir_all(dir.path().join("D1").join("calibration-run")).unwrap();

        for trip in [&trip1, &trip2] {
            let mut gps = String::new();
            for i in 0..=10 {
                gps.push_str(&format!("{} {}\n", i, 60.0 + i as f64));
            }
            write_file(&trip.join(GPS_FILE), &gps);

            let mut accel = String::from("# timestamp activated ax ay az fx fy fz\n");
            for i in 0..=100 {
                let t = i as f64 / 10.0;
                accel.push_str(&format!(
                    "{t} 1 {} {} {} {} {} {}\n",
                    0.01 * (i % 7) as f64,
                    -0.02,
                    0.98,
                    0.009,
                    -0.019,
                    0.981
                ));
            }
            write_file(&trip.join(ACCEL_FILE), &accel);

            let mut osm = String::new();
            for i in 0..=10 {
                osm.push_str(&format!("{i} 100\n"));
            }
            write_file(&trip.join(OSM_FILE), &osm);
        }
        dir
    }

    #[test]
    fn scan_finds_trips_in_order_and_skips_strays() {
        let dir = mini_tree();
        let trips = scan(dir.path()).unwrap();
        assert_eq!(trips.len(), 2);
        assert_eq!(trips[0].behavior, BehaviorClass::Normal);
        assert_eq!(trips[0].road, Road::Motorway);
        assert_eq!(trips[1].behavior, BehaviorClass::Aggressive);
        assert_eq!(trips[1].road, Road::Secondary);
        assert!(trips.iter().all(|t| t.driver == "D1"));
    }

    #[test]
    fn load_trip_builds_both_variants() {
        let dir = mini_tree();
        let trips = scan(dir.path()).unwrap();
        let series = load_trip(
            &trips[0],
            Variant::A,
            10.0,
            &KalmanConfig::default(),
            &ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(series.label, BehaviorClass::Normal);
        assert_eq!(series.records.len(), 101);
        assert!(series.records.iter().all(|r| r.vmax == Some(100.0)));
        // filtered channels come from the accel file, not the fallback filter
        assert_eq!(series.records[0].fax, 0.009);

        let features = load_trip_features(
            &trips[1],
            Variant::B,
            10.0,
            &KalmanConfig::default(),
            &ParseOptions::default(),
        )
        .unwrap();
        assert_eq!(features.n_cols(), 7);
        assert_eq!(features.n_rows(), 101);
        assert!(features
            .labels()
            .iter()
            .all(|l| *l == BehaviorClass::Aggressive));
    }

    #[test]
    fn driver_dir_convention() {
        assert!(is_driver_dir("D1"));
        assert!(is_driver_dir("d42"));
        assert!(!is_driver_dir("D"));
        assert!(!is_driver_dir("driverA"));
        assert!(!is_driver_dir("X1"));
    }
}
