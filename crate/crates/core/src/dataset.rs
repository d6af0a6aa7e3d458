//! Telemetry ingestion: delimited-text parsing, row cleaning, zero-order-hold
//! resampling onto a uniform grid, per-axis Kalman smoothing, and assembly of
//! labeled feature matrices for the classifier.

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classifier::BehaviorClass;

pub mod uah;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: io::Error,
    },
    #[error("{bad} of {total} data lines are malformed (limit {limit_percent}%): lines {}", format_lines(.lines))]
    TooManyBadLines {
        bad: usize,
        total: usize,
        limit_percent: f64,
        lines: Vec<usize>,
    },
    #[error("column 0 holds the timestamp and cannot be mapped to a field")]
    SchemaColumnZero,
    #[error("schema maps field {0} twice")]
    SchemaDuplicateField(Field),
    #[error("unknown schema profile {0:?}")]
    UnknownSchema(String),
    #[error("resampling rate must be positive and finite, got {0}")]
    BadRate(f64),
    #[error("kalman variances must be non-negative and not both zero (q={q}, r={r})")]
    BadKalman { q: f64, r: f64 },
    #[error("kalman input contains non-finite samples; clean the series first")]
    NonFiniteSample,
    #[error("field {0} is supplied by more than one stream")]
    DuplicateField(Field),
    #[error("no stream supplies required field {0}")]
    MissingField(Field),
    #[error("disjoint streams: no common time span to resample")]
    DisjointStreams,
    #[error("empty series")]
    EmptySeries,
    #[error("timestamps not strictly increasing at record {index}")]
    NonMonotoneTime { index: usize },
    #[error("variant A needs vmax on every row; missing on {} rows: {}", .rows.len(), format_lines(.rows))]
    MissingVmax { rows: Vec<usize> },
    #[error("data length {got} does not fill rows of {expected} columns")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("row {row} contains non-finite values")]
    NonFiniteRow { row: usize },
    #[error("label count {got} does not match row count {expected}")]
    LabelCount { expected: usize, got: usize },
    #[error("cannot combine feature matrices of different variants")]
    VariantMismatch,
    #[error("csv header {got:?} matches no known layout (expected t,{})", Variant::A.feature_names().join(","))]
    CsvHeader { got: String },
    #[error("csv line {line}: {msg}")]
    CsvRow { line: usize, msg: String },
    #[error("csv rows carry no label column")]
    MissingLabels,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_lines(lines: &[usize]) -> String {
    const SHOWN: usize = 8;
    let mut s = lines
        .iter()
        .take(SHOWN)
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(", ");
    if lines.len() > SHOWN {
        s.push_str(&format!(", ... ({} more)", lines.len() - SHOWN));
    }
    s
}

/// Telemetry channels a stream can carry. Declaration order is also the
/// feature-column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Field {
    Ax,
    Ay,
    Az,
    Fax,
    Fay,
    Faz,
    V,
    Vmax,
}

impl Field {
    pub const ALL: [Field; 8] = [
        Field::Ax,
        Field::Ay,
        Field::Az,
        Field::Fax,
        Field::Fay,
        Field::Faz,
        Field::V,
        Field::Vmax,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|f| *f == self).expect("member")
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Ax => "ax",
            Field::Ay => "ay",
            Field::Az => "az",
            Field::Fax => "fax",
            Field::Fay => "fay",
            Field::Faz => "faz",
            Field::V => "v",
            Field::Vmax => "vmax",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|f| f.name() == s)
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Maps 1-based data columns of a delimited file to fields. Column 0 is
/// always the timestamp and cannot be remapped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSchema {
    entries: Vec<(usize, Field)>,
}

impl ColumnSchema {
    pub fn new(mut entries: Vec<(usize, Field)>) -> Result<Self, DatasetError> {
        entries.sort_by_key(|(col, _)| *col);
        for (i, (col, field)) in entries.iter().enumerate() {
            if *col == 0 {
                return Err(DatasetError::SchemaColumnZero);
            }
            if entries[..i].iter().any(|(_, f)| f == field) {
                return Err(DatasetError::SchemaDuplicateField(*field));
            }
        }
        Ok(Self { entries })
    }

    /// Profiles for the UAH-DriveSet file layouts.
    pub fn builtin(name: &str) -> Result<Self, DatasetError> {
        let entries = match name {
            "uah-gps" => vec![(1, Field::V)],
            "uah-accel" => vec![
                (2, Field::Ax),
                (3, Field::Ay),
                (4, Field::Az),
                (5, Field::Fax),
                (6, Field::Fay),
                (7, Field::Faz),
            ],
            "uah-osm" => vec![(1, Field::Vmax)],
            other => return Err(DatasetError::UnknownSchema(other.to_string())),
        };
        Self::new(entries)
    }

    pub fn entries(&self) -> &[(usize, Field)] {
        &self.entries
    }

    pub fn fields(&self) -> Vec<Field> {
        self.entries.iter().map(|(_, f)| *f).collect()
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Malformed-line fraction above which parsing fails outright.
    pub max_bad_fraction: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            max_bad_fraction: 0.05,
        }
    }
}

/// One parsed file: rows in file order, one column per schema field.
/// Unparseable numeric cells are NaN until `clean` removes their rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub fields: Vec<Field>,
    pub t: Vec<f64>,
    pub data: Vec<f64>,
    /// 1-based line numbers skipped for an unusable timestamp.
    pub skipped_lines: Vec<usize>,
}

impl Stream {
    pub fn n_rows(&self) -> usize {
        self.t.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.fields.len();
        &self.data[i * w..(i + 1) * w]
    }

    pub fn value(&self, row: usize, field: Field) -> Option<f64> {
        let col = self.fields.iter().position(|f| *f == field)?;
        Some(self.row(row)[col])
    }
}

/// Parses delimited text under a schema. Lines are comma-separated when they
/// contain a comma, whitespace-separated otherwise; blank lines and `#`
/// comments are ignored. A line whose timestamp cell is missing or
/// unparseable is skipped and recorded; other unparseable cells become NaN.
pub fn parse_stream(
    text: &str,
    schema: &ColumnSchema,
    opts: &ParseOptions,
) -> Result<Stream, DatasetError> {
    let mut t = Vec::new();
    let mut data = Vec::new();
    let mut skipped = Vec::new();
    let mut data_lines = 0usize;
    let mut cells: Vec<&str> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        data_lines += 1;
        cells.clear();
        if line.contains(',') {
            cells.extend(line.split(',').map(str::trim));
        } else {
            cells.extend(line.split_whitespace());
        }
        let ts = cells
            .first()
            .and_then(|c| c.parse::<f64>().ok())
            .filter(|v| v.is_finite());
        let Some(ts) = ts else {
            skipped.push(i + 1);
            continue;
        };
        t.push(ts);
        for &(col, _) in &schema.entries {
            let value = cells
                .get(col)
                .and_then(|c| c.parse::<f64>().ok())
                .unwrap_or(f64::NAN);
            data.push(value);
        }
    }
    if skipped.len() as f64 > opts.max_bad_fraction * data_lines as f64 {
        return Err(DatasetError::TooManyBadLines {
            bad: skipped.len(),
            total: data_lines,
            limit_percent: opts.max_bad_fraction * 100.0,
            lines: skipped,
        });
    }
    Ok(Stream {
        fields: schema.fields(),
        t,
        data,
        skipped_lines: skipped,
    })
}

pub fn parse_file(
    path: &Path,
    schema: &ColumnSchema,
    opts: &ParseOptions,
) -> Result<Stream, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_stream(&text, schema, opts)
}

/// Drops every row with a non-finite timestamp or cell; returns the kept
/// stream and the drop count. Idempotent.
pub fn clean(stream: &Stream) -> (Stream, usize) {
    let w = stream.fields.len();
    let mut t = Vec::with_capacity(stream.t.len());
    let mut data = Vec::with_capacity(stream.data.len());
    let mut dropped = 0usize;
    for (i, &ts) in stream.t.iter().enumerate() {
        let row = &stream.data[i * w..(i + 1) * w];
        if ts.is_finite() && row.iter().all(|v| v.is_finite()) {
            t.push(ts);
            data.extend_from_slice(row);
        } else {
            dropped += 1;
        }
    }
    (
        Stream {
            fields: stream.fields.clone(),
            t,
            data,
            skipped_lines: stream.skipped_lines.clone(),
        },
        dropped,
    )
}

/// Scalar random-walk Kalman smoother settings; q is process variance per
/// step, r is measurement variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanConfig {
    pub q: f64,
    pub r: f64,
}

impl Default for KalmanConfig {
    fn default() -> Self {
        Self { q: 1e-3, r: 1e-2 }
    }
}

impl KalmanConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let ok = self.q >= 0.0
            && self.r >= 0.0
            && self.q.is_finite()
            && self.r.is_finite()
            && (self.q > 0.0 || self.r > 0.0);
        if ok {
            Ok(())
        } else {
            Err(DatasetError::BadKalman {
                q: self.q,
                r: self.r,
            })
        }
    }
}

/// Causal scalar Kalman filter under a random-walk state model. The state is
/// initialized to the first measurement with covariance r, which makes the
/// q = 0 case exactly the running mean of the measurements.
pub fn kalman_filter_accel(series: &[f64], q: f64, r: f64) -> Result<Vec<f64>, DatasetError> {
    KalmanConfig { q, r }.validate()?;
    if series.iter().any(|v| !v.is_finite()) {
        return Err(DatasetError::NonFiniteSample);
    }
    let mut out = Vec::with_capacity(series.len());
    let Some((&first, rest)) = series.split_first() else {
        return Ok(out);
    };
    let mut x = first;
    let mut p = r;
    out.push(x);
    for &z in rest {
        p += q;
        let k = p / (p + r);
        x += k * (z - x);
        p *= 1.0 - k;
        out.push(x);
    }
    Ok(out)
}

/// One synchronized telemetry sample. Accelerations are in G, speeds in
/// km/h; vmax is the road limit where known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveRecord {
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub fax: f64,
    pub fay: f64,
    pub faz: f64,
    pub v: f64,
    pub vmax: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Road {
    Motorway,
    Secondary,
}

impl Road {
    pub fn as_str(self) -> &'static str {
        match self {
            Road::Motorway => "motorway",
            Road::Secondary => "secondary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "motorway" => Some(Road::Motorway),
            "secondary" => Some(Road::Secondary),
            _ => None,
        }
    }
}

/// A single drive: one driver, one road type, one behavior label.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub driver: String,
    pub road: Road,
    pub label: BehaviorClass,
    pub records: Vec<DriveRecord>,
}

impl LabeledSeries {
    pub fn new(
        driver: impl Into<String>,
        road: Road,
        label: BehaviorClass,
        records: Vec<DriveRecord>,
    ) -> Result<Self, DatasetError> {
        if records.is_empty() {
            return Err(DatasetError::EmptySeries);
        }
        for (i, r) in records.iter().enumerate() {
            let finite = r.t.is_finite()
                && [r.ax, r.ay, r.az, r.fax, r.fay, r.faz, r.v]
                    .iter()
                    .all(|v| v.is_finite())
                && r.vmax.is_none_or(f64::is_finite);
            if !finite {
                return Err(DatasetError::NonFiniteRow { row: i });
            }
            if i > 0 && r.t <= records[i - 1].t {
                return Err(DatasetError::NonMonotoneTime { index: i });
            }
        }
        Ok(Self {
            driver: driver.into(),
            road,
            label,
            records,
        })
    }
}

/// Resamples cleaned streams onto a uniform grid at `rate` Hz spanning the
/// intersection of their time ranges. Every signal is zero-order-held, never
/// extrapolated before its first observation. Filtered acceleration channels
/// are taken from the streams when all three are supplied, otherwise computed
/// from the held raw channels with `kalman`.
pub fn resample_merge(
    streams: &[Stream],
    rate: f64,
    kalman: &KalmanConfig,
) -> Result<Vec<DriveRecord>, DatasetError> {
    if !rate.is_finite() || rate <= 0.0 {
        return Err(DatasetError::BadRate(rate));
    }
    kalman.validate()?;

    // gather per-field samples; a field may come from exactly one stream
    let mut per: [Option<Vec<(f64, f64)>>; 8] = Default::default();
    for stream in streams {
        let w = stream.fields.len();
        for (ci, field) in stream.fields.iter().enumerate() {
            let slot = &mut per[field.index()];
            if slot.is_some() {
                return Err(DatasetError::DuplicateField(*field));
            }
            let mut samples = Vec::with_capacity(stream.t.len());
            for (ri, &ts) in stream.t.iter().enumerate() {
                let v = stream.data[ri * w + ci];
                if ts.is_finite() && v.is_finite() {
                    samples.push((ts, v));
                }
            }
            samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite timestamps"));
            *slot = Some(samples);
        }
    }

    for required in [Field::Ax, Field::Ay, Field::Az, Field::V] {
        if per[required.index()].is_none() {
            return Err(DatasetError::MissingField(required));
        }
    }
    let have_filtered = [Field::Fax, Field::Fay, Field::Faz]
        .iter()
        .all(|f| per[f.index()].is_some());
    let have_vmax = per[Field::Vmax.index()].is_some();

    let mut consumed = vec![Field::Ax, Field::Ay, Field::Az, Field::V];
    if have_filtered {
        consumed.extend([Field::Fax, Field::Fay, Field::Faz]);
    }
    if have_vmax {
        consumed.push(Field::Vmax);
    }

    let mut start = f64::NEG_INFINITY;
    let mut end = f64::INFINITY;
    for field in &consumed {
        let samples = per[field.index()].as_ref().expect("consumed field present");
        let (Some(first), Some(last)) = (samples.first(), samples.last()) else {
            return Err(DatasetError::DisjointStreams);
        };
        start = start.max(first.0);
        end = end.min(last.0);
    }
    if start > end + 1e-12 {
        return Err(DatasetError::DisjointStreams);
    }

    let step = 1.0 / rate;
    let mut grid = Vec::new();
    let mut i = 0usize;
    loop {
        let t = start + i as f64 * step;
        if t > end + 1e-9 {
            break;
        }
        grid.push(t);
        i += 1;
    }

    // zero-order hold: value at the latest sample with t <= grid point
    let hold = |samples: &[(f64, f64)]| -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.len());
        let mut j = 0usize;
        for &g in &grid {
            while j + 1 < samples.len() && samples[j + 1].0 <= g {
                j += 1;
            }
            out.push(samples[j].1);
        }
        out
    };
    let held = |field: Field| hold(per[field.index()].as_ref().expect("consumed"));

    let ax = held(Field::Ax);
    let ay = held(Field::Ay);
    let az = held(Field::Az);
    let v = held(Field::V);
    let vmax = have_vmax.then(|| held(Field::Vmax));
    let (fax, fay, faz) = if have_filtered {
        (held(Field::Fax), held(Field::Fay), held(Field::Faz))
    } else {
        (
            kalman_filter_accel(&ax, kalman.q, kalman.r)?,
            kalman_filter_accel(&ay, kalman.q, kalman.r)?,
            kalman_filter_accel(&az, kalman.q, kalman.r)?,
        )
    };

    let records = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| DriveRecord {
            t,
            ax: ax[i],
            ay: ay[i],
            az: az[i],
            fax: fax[i],
            fay: fay[i],
            faz: faz[i],
            v: v[i],
            vmax: vmax.as_ref().map(|m| m[i]),
        })
        .collect();
    Ok(records)
}

/// Feature layouts: A keeps the road speed limit as an eighth column, B
/// drops it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    A,
    B,
}

impl Variant {
    pub fn n_features(self) -> usize {
        match self {
            Variant::A => 8,
            Variant::B => 7,
        }
    }

    pub fn feature_names(self) -> &'static [&'static str] {
        const A: &[&str] = &["ax", "ay", "az", "fax", "fay", "faz", "v", "vmax"];
        match self {
            Variant::A => A,
            Variant::B => &A[..7],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::A => "A",
            Variant::B => "B",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "A" | "a" => Some(Variant::A),
            "B" | "b" => Some(Variant::B),
            _ => None,
        }
    }
}

/// Labeled numeric design matrix, row-major, no non-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    variant: Variant,
    t: Vec<f64>,
    data: Vec<f64>,
    labels: Vec<BehaviorClass>,
}

impl FeatureMatrix {
    pub fn new(
        variant: Variant,
        t: Vec<f64>,
        data: Vec<f64>,
        labels: Vec<BehaviorClass>,
    ) -> Result<Self, DatasetError> {
        let d = variant.n_features();
        if data.len() != t.len() * d {
            return Err(DatasetError::ShapeMismatch {
                expected: t.len() * d,
                got: data.len(),
            });
        }
        if labels.len() != t.len() {
            return Err(DatasetError::LabelCount {
                expected: t.len(),
                got: labels.len(),
            });
        }
        for (i, row) in data.chunks_exact(d).enumerate() {
            if !t[i].is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(DatasetError::NonFiniteRow { row: i });
            }
        }
        Ok(Self {
            variant,
            t,
            data,
            labels,
        })
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn n_rows(&self) -> usize {
        self.t.len()
    }

    pub fn n_cols(&self) -> usize {
        self.variant.n_features()
    }

    pub fn columns(&self) -> Vec<String> {
        self.variant
            .feature_names()
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    pub fn t(&self) -> &[f64] {
        &self.t
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_cols();
        &self.data[i * d..(i + 1) * d]
    }

    pub fn label(&self, i: usize) -> BehaviorClass {
        self.labels[i]
    }

    pub fn labels(&self) -> &[BehaviorClass] {
        &self.labels
    }

    /// Row-wise concatenation; all parts must share the variant.
    pub fn concat(parts: &[FeatureMatrix]) -> Result<FeatureMatrix, DatasetError> {
        let Some(first) = parts.first() else {
            return Err(DatasetError::EmptySeries);
        };
        let mut t = Vec::new();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for part in parts {
            if part.variant != first.variant {
                return Err(DatasetError::VariantMismatch);
            }
            t.extend_from_slice(&part.t);
            data.extend_from_slice(&part.data);
            labels.extend_from_slice(&part.labels);
        }
        FeatureMatrix::new(first.variant, t, data, labels)
    }
}

/// Builds the design matrix for one series; column order is fixed as
/// (ax, ay, az, fax, fay, faz, v[, vmax]) and every row carries the series
/// label.
pub fn build_feature_matrix(
    series: &LabeledSeries,
    variant: Variant,
) -> Result<FeatureMatrix, DatasetError> {
    if series.records.is_empty() {
        return Err(DatasetError::EmptySeries);
    }
    if variant == Variant::A {
        let missing: Vec<usize> = series
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| r.vmax.is_none())
            .map(|(i, _)| i)
            .collect();
        if !missing.is_empty() {
            return Err(DatasetError::MissingVmax { rows: missing });
        }
    }
    let n = series.records.len();
    let d = variant.n_features();
    let mut t = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    for r in &series.records {
        t.push(r.t);
        data.extend_from_slice(&[r.ax, r.ay, r.az, r.fax, r.fay, r.faz, r.v]);
        if variant == Variant::A {
            data.push(r.vmax.expect("checked above"));
        }
    }
    FeatureMatrix::new(variant, t, data, vec![series.label; n])
}

/// Rows read back from a normalized CSV; the label column is optional so the
/// same reader serves training and classification inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub variant: Variant,
    pub t: Vec<f64>,
    pub data: Vec<f64>,
    pub labels: Option<Vec<BehaviorClass>>,
}

impl CsvData {
    pub fn n_rows(&self) -> usize {
        self.t.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.variant.n_features();
        &self.data[i * d..(i + 1) * d]
    }

    /// Drops rows with non-finite values; returns the drop count.
    pub fn clean(self) -> (CsvData, usize) {
        let d = self.variant.n_features();
        let mut t = Vec::with_capacity(self.t.len());
        let mut data = Vec::with_capacity(self.data.len());
        let mut labels = self.labels.as_ref().map(|_| Vec::new());
        let mut dropped = 0usize;
        for (i, &ts) in self.t.iter().enumerate() {
            let row = &self.data[i * d..(i + 1) * d];
            if ts.is_finite() && row.iter().all(|v| v.is_finite()) {
                t.push(ts);
                data.extend_from_slice(row);
                if let (Some(out), Some(src)) = (labels.as_mut(), self.labels.as_ref()) {
                    out.push(src[i]);
                }
            } else {
                dropped += 1;
            }
        }
        (
            CsvData {
                variant: self.variant,
                t,
                data,
                labels,
            },
            dropped,
        )
    }

    pub fn require_labels(self) -> Result<FeatureMatrix, DatasetError> {
        let labels = self.labels.ok_or(DatasetError::MissingLabels)?;
        FeatureMatrix::new(self.variant, self.t, self.data, labels)
    }
}

/// Writes the normalized labeled CSV: `t,<features>,label`. Floats use the
/// shortest representation that parses back to the same bits.
pub fn write_csv<W: Write>(w: W, matrix: &FeatureMatrix) -> Result<(), DatasetError> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = vec!["t"];
    header.extend(matrix.variant().feature_names());
    header.push("label");
    wtr.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..matrix.n_rows() {
        record.clear();
        record.push(matrix.t()[i].to_string());
        record.extend(matrix.row(i).iter().map(f64::to_string));
        record.push(matrix.label(i).as_str().to_string());
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_csv_file(path: &Path, matrix: &FeatureMatrix) -> Result<(), DatasetError> {
    let file = fs::File::create(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_csv(io::BufWriter::new(file), matrix)
}

/// Reads the normalized CSV back; accepts both variants, labeled or not.
pub fn read_csv<R: Read>(r: R) -> Result<CsvData, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(r);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();

    let mut layout = None;
    for variant in [Variant::A, Variant::B] {
        for labeled in [true, false] {
            let mut want: Vec<&str> = vec!["t"];
            want.extend(variant.feature_names());
            if labeled {
                want.push("label");
            }
            if names == want {
                layout = Some((variant, labeled));
            }
        }
    }
    let Some((variant, labeled)) = layout else {
        return Err(DatasetError::CsvHeader {
            got: names.join(","),
        });
    };

    let d = variant.n_features();
    let mut t = Vec::new();
    let mut data = Vec::new();
    let mut labels = labeled.then(Vec::new);
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != names.len() {
            return Err(DatasetError::CsvRow {
                line,
                msg: format!("expected {} cells, found {}", names.len(), record.len()),
            });
        }
        let num = |idx: usize| -> Result<f64, DatasetError> {
            record[idx].parse::<f64>().map_err(|_| DatasetError::CsvRow {
                line,
                msg: format!("cell {:?} is not a number", &record[idx]),
            })
        };
        t.push(num(0)?);
        for col in 0..d {
            data.push(num(col + 1)?);
        }
        if let Some(labels) = labels.as_mut() {
            let cell = &record[d + 1];
            let label = BehaviorClass::parse(cell).ok_or_else(|| DatasetError::CsvRow {
                line,
                msg: format!("unknown label {cell:?}"),
            })?;
            labels.push(label);
        }
    }
    Ok(CsvData {
        variant,
        t,
        data,
        labels,
    })
}

pub fn read_csv_file(path: &Path) -> Result<CsvData, DatasetError> {
    let file = fs::File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(io::BufReader::new(file))
}
