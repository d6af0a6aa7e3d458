//! Performance accounting: per-FIS error statistics, 3x3 confusion matrices
//! with TPR/TNR/PPV/FDR, and report rendering as text tables, CSV, or JSON.
//!
//! Metrics are kept as exact integer ratios until render time; percentages
//! are rounded half-up at hundredths only when printed.

use std::io::Write;

use serde_json::json;
use thiserror::Error;

use crate::classifier::{BehaviorClass, StreamRow};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {actual} actual vs {predicted} predicted labels")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("errors must be finite")]
    NonFinite,
    #[error("unknown report format {0:?} (expected text, csv, or json)")]
    UnknownFormat(String),
    #[error("confusion csv: {0}")]
    CsvShape(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Mean absolute error with its sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mae: f64,
    pub sigma: f64,
    pub n: usize,
}

/// mae is the mean of the given errors; sigma uses the n-1 denominator and
/// is 0 for a single sample.
pub fn error_stats(errors: &[f64]) -> Result<ErrorStats, EvalError> {
    if errors.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    if errors.iter().any(|e| !e.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let n = errors.len();
    let mae = errors.iter().sum::<f64>() / n as f64;
    let sigma = if n == 1 {
        0.0
    } else {
        let ss = errors.iter().map(|e| (e - mae) * (e - mae)).sum::<f64>();
        (ss / (n - 1) as f64).sqrt()
    };
    Ok(ErrorStats { mae, sigma, n })
}

/// Exact ratio; den = 0 encodes an undefined metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn defined(&self) -> bool {
        self.den > 0
    }

    pub fn value(&self) -> Option<f64> {
        self.defined().then(|| self.num as f64 / self.den as f64)
    }

    /// Percent with two decimals, rounded half-up, trailing zeros trimmed:
    /// 1560/1566 renders "99.62%", 1/1252 renders "0.08%", 1/1 "100%".
    pub fn percent(&self) -> Option<String> {
        if !self.defined() {
            return None;
        }
        let num = self.num as u128;
        let den = self.den as u128;
        let hundredths = (num * 10_000 * 2 + den) / (2 * den);
        let whole = hundredths / 100;
        let frac = hundredths % 100;
        Some(if frac == 0 {
            format!("{whole}%")
        } else if frac.is_multiple_of(10) {
            format!("{whole}.{}%", frac / 10)
        } else {
            format!("{whole}.{frac:02}%")
        })
    }

    fn percent_or_dash(&self) -> String {
        self.percent().unwrap_or_else(|| "-".to_string())
    }
}

/// Rows are actual classes, columns predicted, both in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_pairs(
        actual: &[BehaviorClass],
        predicted: &[BehaviorClass],
    ) -> Result<Self, EvalError> {
        if actual.len() != predicted.len() {
            return Err(EvalError::LengthMismatch {
                actual: actual.len(),
                predicted: predicted.len(),
            });
        }
        if actual.is_empty() {
            return Err(EvalError::EmptyInput);
        }
        let mut m = ConfusionMatrix::default();
        for (a, p) in actual.iter().zip(predicted) {
            m.add(*a, *p);
        }
        Ok(m)
    }

    pub fn add(&mut self, actual: BehaviorClass, predicted: BehaviorClass) {
        self.counts[actual.index()][predicted.index()] += 1;
    }

    /// Associative count merge; the identity is the default matrix.
    pub fn merge(&self, other: &ConfusionMatrix) -> ConfusionMatrix {
        let mut out = *self;
        for i in 0..3 {
            for j in 0..3 {
                out.counts[i][j] += other.counts[i][j];
            }
        }
        out
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, i: usize) -> u64 {
        self.counts[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u64 {
        self.counts.iter().map(|row| row[j]).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("actual,pred_drowsy,pred_normal,pred_aggressive\n");
        for (i, class) in BehaviorClass::ALL.iter().enumerate() {
            out.push_str(class.as_str());
            for j in 0..3 {
                out.push_str(&format!(",{}", self.counts[i][j]));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, EvalError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header: Vec<&str> = rdr.headers()?.iter().collect();
        if header != ["actual", "pred_drowsy", "pred_normal", "pred_aggressive"] {
            return Err(EvalError::CsvShape(format!(
                "unexpected header {:?}",
                header.join(",")
            )));
        }
        let mut m = ConfusionMatrix::default();
        let mut rows = 0usize;
        for record in rdr.records() {
            let record = record?;
            if rows == 3 {
                return Err(EvalError::CsvShape("more than 3 rows".into()));
            }
            let want = BehaviorClass::ALL[rows].as_str();
            if &record[0] != want {
                return Err(EvalError::CsvShape(format!(
                    "row {rows} labeled {:?}, expected {want:?}",
                    &record[0]
                )));
            }
            for j in 0..3 {
                m.counts[rows][j] = record[j + 1]
                    .parse::<u64>()
                    .map_err(|_| EvalError::CsvShape(format!("bad count {:?}", &record[j + 1])))?;
            }
            rows += 1;
        }
        if rows != 3 {
            return Err(EvalError::CsvShape(format!("{rows} rows, expected 3")));
        }
        Ok(m)
    }
}

/// Per-class rates from one confusion matrix. Despite its name, `tnr` holds
/// the row-wise misclassification rate (the complement of `tpr`), kept under
/// that label for report continuity; `specificity` is the standard
/// true-negative rate. Undefined metrics carry den = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassMetrics {
    pub class: BehaviorClass,
    pub tpr: Ratio,
    pub tnr: Ratio,
    pub specificity: Ratio,
    pub ppv: Ratio,
    pub fdr: Ratio,
}

pub fn class_metrics(m: &ConfusionMatrix) -> [ClassMetrics; 3] {
    let total = m.total();
    BehaviorClass::ALL.map(|class| {
        let i = class.index();
        let diag = m.counts[i][i];
        let row = m.row_sum(i);
        let col = m.col_sum(i);
        let negatives = total - row;
        // row + col counts the diagonal twice, so add it back before
        // subtracting to keep the u64 arithmetic from underflowing.
        let true_negatives = (total + diag) - row - col;
        ClassMetrics {
            class,
            tpr: Ratio { num: diag, den: row },
            tnr: Ratio {
                num: row - diag,
                den: row,
            },
            specificity: Ratio {
                num: true_negatives,
                den: negatives,
            },
            ppv: Ratio { num: diag, den: col },
            fdr: Ratio {
                num: col - diag,
                den: col,
            },
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self, EvalError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" | "text-table" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(EvalError::UnknownFormat(other.to_string())),
        }
    }
}

/// One dataset's reconstruction-error statistics, one entry per class FIS.
#[derive(Debug, Clone)]
pub struct ValidationBlock {
    pub dataset: String,
    /// (fis name, stats) in class order: drowsy, normal, aggressive.
    pub per_fis: [(BehaviorClass, ErrorStats); 3],
}

#[derive(Debug, Clone)]
pub struct ConfusionBlock {
    pub title: String,
    pub matrix: ConfusionMatrix,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub validation: Vec<ValidationBlock>,
    pub confusion: Vec<ConfusionBlock>,
}

impl Report {
    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.render_text(),
            ReportFormat::Csv => self.render_csv(),
            ReportFormat::Json => self.render_json(),
        }
    }

    fn render_text(&self) -> String {
        let mut out = String::new();
        for block in &self.validation {
            out.push_str(&format!("== Validation: {} ==\n", block.dataset));
            out.push_str(&format!(
                "{:<12}{:>14}{:>14}{:>10}\n",
                "FIS", "MAE", "sigma", "n"
            ));
            for (class, stats) in &block.per_fis {
                out.push_str(&format!(
                    "{:<12}{:>14.4}{:>14.4}{:>10}\n",
                    class.as_str(),
                    stats.mae,
                    stats.sigma,
                    stats.n
                ));
            }
            out.push('\n');
        }
        for block in &self.confusion {
            out.push_str(&render_confusion_text(&block.title, &block.matrix));
            out.push('\n');
        }
        if out.ends_with("\n\n") {
            out.pop();
        }
        out
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        if !self.validation.is_empty() {
            out.push_str("dataset,fis,mae,sigma,n\n");
            for block in &self.validation {
                for (class, stats) in &block.per_fis {
                    out.push_str(&format!(
                        "{},{},{},{},{}\n",
                        csv_quote(&block.dataset),
                        class.as_str(),
                        stats.mae,
                        stats.sigma,
                        stats.n
                    ));
                }
            }
        }
        for block in &self.confusion {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(&format!("confusion,{}\n", csv_quote(&block.title)));
            out.push_str(&block.matrix.to_csv());
        }
        out
    }

    fn render_json(&self) -> String {
        let ratio = |r: Ratio| match r.value() {
            Some(value) => json!({
                "num": r.num,
                "den": r.den,
                "value": value,
                "percent": r.percent().expect("defined"),
            }),
            None => serde_json::Value::Null,
        };
        let validation: Vec<_> = self
            .validation
            .iter()
            .map(|b| {
                json!({
                    "dataset": b.dataset,
                    "per_fis": b.per_fis.iter().map(|(class, s)| json!({
                        "fis": class.as_str(),
                        "mae": s.mae,
                        "sigma": s.sigma,
                        "n": s.n,
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        let confusion: Vec<_> = self
            .confusion
            .iter()
            .map(|b| {
                let metrics = class_metrics(&b.matrix);
                json!({
                    "title": b.title,
                    "classes": BehaviorClass::ALL.map(|c| c.as_str()),
                    "counts": b.matrix.counts,
                    "metrics": metrics.iter().map(|m| json!({
                        "class": m.class.as_str(),
                        "tpr": ratio(m.tpr),
                        "tnr": ratio(m.tnr),
                        "specificity": ratio(m.specificity),
                        "ppv": ratio(m.ppv),
                        "fdr": ratio(m.fdr),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
        let doc = json!({
            "validation": validation,
            "confusion": confusion,
        });
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_confusion_text(title: &str, m: &ConfusionMatrix) -> String {
    let metrics = class_metrics(m);
    let mut out = format!("== Confusion: {title} ==\n");
    out.push_str(&format!(
        "{:<12}{:>16}{:>16}{:>16}{:>11}{:>11}\n",
        "actual", "pred drowsy", "pred normal", "pred aggressive", "TPR", "TNR"
    ));
    for (i, class) in BehaviorClass::ALL.iter().enumerate() {
        out.push_str(&format!(
            "{:<12}{:>16}{:>16}{:>16}{:>11}{:>11}\n",
            class.as_str(),
            m.counts[i][0],
            m.counts[i][1],
            m.counts[i][2],
            metrics[i].tpr.percent_or_dash(),
            metrics[i].tnr.percent_or_dash(),
        ));
    }
    out.push_str(&format!(
        "{:<12}{:>16}{:>16}{:>16}\n",
        "PPV",
        metrics[0].ppv.percent_or_dash(),
        metrics[1].ppv.percent_or_dash(),
        metrics[2].ppv.percent_or_dash(),
    ));
    out.push_str(&format!(
        "{:<12}{:>16}{:>16}{:>16}\n",
        "FDR",
        metrics[0].fdr.percent_or_dash(),
        metrics[1].fdr.percent_or_dash(),
        metrics[2].fdr.percent_or_dash(),
    ));
    out
}

/// Writes per-row epsilon traces as CSV (`t,eps_d,eps_n,eps_a,label`) for
/// error-evolution plots; rows lacking a timestamp fall back to their index.
pub fn write_epsilon_trace<W: Write>(mut w: W, rows: &[StreamRow]) -> Result<(), EvalError> {
    let mut wtr = csv::Writer::from_writer(&mut w);
    wtr.write_record(["t", "eps_d", "eps_n", "eps_a", "label"])?;
    for row in rows {
        let t = row.t.unwrap_or(row.index as f64);
        wtr.write_record([
            t.to_string(),
            row.eps.eps_d.to_string(),
            row.eps.eps_n.to_string(),
            row.eps.eps_a.to_string(),
            row.label.as_str().to_string(),
        ])?;
    }
    wtr.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_stats_textbook_values() {
        let s = error_stats(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.mae, 2.0);
        assert!((s.sigma - 1.0).abs() < 1e-15);
        assert_eq!(s.n, 3);
    }

    #[test]
    fn error_stats_constant_and_singleton() {
        let c = error_stats(&[0.7, 0.7, 0.7, 0.7]).unwrap();
        assert_eq!(c.mae, 0.7);
        assert_eq!(c.sigma, 0.0);
        let one = error_stats(&[5.5]).unwrap();
        assert_eq!(one.mae, 5.5);
        assert_eq!(one.sigma, 0.0);
        assert_eq!(one.n, 1);
    }

    #[test]
    fn error_stats_rejects_empty_and_non_finite() {
        assert!(matches!(error_stats(&[]), Err(EvalError::EmptyInput)));
        assert!(matches!(
            error_stats(&[1.0, f64::NAN]),
            Err(EvalError::NonFinite)
        ));
    }

    fn table_iv() -> ConfusionMatrix {
        ConfusionMatrix {
            counts: [[1252, 0, 0], [0, 1251, 1], [0, 0, 1252]],
        }
    }

    fn table_vii() -> ConfusionMatrix {
        ConfusionMatrix {
            counts: [[1556, 0, 4], [0, 1558, 2], [0, 0, 1560]],
        }
    }

    #[test]
    fn from_pairs_counts_and_validates() {
        use BehaviorClass::*;
        let actual = [Drowsy, Drowsy, Normal, Aggressive];
        let predicted = [Drowsy, Normal, Normal, Aggressive];
        let m = ConfusionMatrix::from_pairs(&actual, &predicted).unwrap();
        assert_eq!(m.counts, [[1, 1, 0], [0, 1, 0], [0, 0, 1]]);
        assert_eq!(m.total(), 4);
        assert!(matches!(
            ConfusionMatrix::from_pairs(&actual, &predicted[..3]),
            Err(EvalError::LengthMismatch { actual: 4, predicted: 3 })
        ));
        assert!(matches!(
            ConfusionMatrix::from_pairs(&[], &[]),
            Err(EvalError::EmptyInput)
        ));
    }

    #[test]
    fn self_confusion_is_diagonal_with_full_tpr() {
        use BehaviorClass::*;
        let labels = [Drowsy, Normal, Normal, Aggressive, Aggressive, Aggressive];
        let m = ConfusionMatrix::from_pairs(&labels, &labels).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.counts[i][j] == 0, i != j);
            }
        }
        for metrics in class_metrics(&m) {
            assert_eq!(metrics.tpr.percent().as_deref(), Some("100%"));
        }
    }

    #[test]
    fn merge_adds_counts() {
        let merged = table_iv().merge(&table_vii());
        assert_eq!(merged.counts[0][0], 1252 + 1556);
        assert_eq!(merged.counts[1][2], 1 + 2);
        assert_eq!(merged.total(), table_iv().total() + table_vii().total());
        // identity element
        assert_eq!(table_iv().merge(&ConfusionMatrix::default()), table_iv());
    }

    #[test]
    fn published_d1_metrics_render_exactly() {
        let metrics = class_metrics(&table_iv());
        let tpr: Vec<_> = metrics.iter().map(|m| m.tpr.percent().unwrap()).collect();
        let tnr: Vec<_> = metrics.iter().map(|m| m.tnr.percent().unwrap()).collect();
        let ppv: Vec<_> = metrics.iter().map(|m| m.ppv.percent().unwrap()).collect();
        let fdr: Vec<_> = metrics.iter().map(|m| m.fdr.percent().unwrap()).collect();
        assert_eq!(tpr, ["100%", "99.92%", "100%"]);
        assert_eq!(tnr, ["0%", "0.08%", "0%"]);
        assert_eq!(ppv, ["100%", "100%", "99.92%"]);
        assert_eq!(fdr, ["0%", "0%", "0.08%"]);
    }

    #[test]
    fn published_d4_aggressive_column_renders_exactly() {
        let metrics = class_metrics(&table_vii());
        let aggressive = &metrics[2];
        assert_eq!(aggressive.ppv, Ratio { num: 1560, den: 1566 });
        assert_eq!(aggressive.ppv.percent().as_deref(), Some("99.62%"));
        assert_eq!(aggressive.fdr.percent().as_deref(), Some("0.38%"));
        assert_eq!(metrics[0].tpr.percent().as_deref(), Some("99.74%"));
        assert_eq!(metrics[1].tpr.percent().as_deref(), Some("99.87%"));
    }

    #[test]
    fn ppv_plus_fdr_is_exactly_one_when_predicted() {
        for m in [table_iv(), table_vii()] {
            for metrics in class_metrics(&m) {
                if metrics.ppv.defined() {
                    assert_eq!(metrics.ppv.den, metrics.fdr.den);
                    assert_eq!(metrics.ppv.num + metrics.fdr.num, metrics.ppv.den);
                }
            }
        }
    }

    #[test]
    fn standard_specificity_differs_from_the_table_layout() {
        let metrics = class_metrics(&table_iv());
        // aggressive column holds one stray normal prediction
        assert_eq!(metrics[2].specificity, Ratio { num: 2503, den: 2504 });
        assert_eq!(metrics[2].specificity.percent().as_deref(), Some("99.96%"));
        assert_eq!(metrics[2].tnr.percent().as_deref(), Some("0%"));
    }

    #[test]
    fn never_predicted_class_is_undefined_not_nan() {
        let m = ConfusionMatrix {
            counts: [[5, 0, 0], [5, 0, 0], [5, 0, 0]],
        };
        let metrics = class_metrics(&m);
        assert!(!metrics[1].ppv.defined());
        assert_eq!(metrics[1].ppv.percent(), None);
        assert_eq!(metrics[1].ppv.value(), None);
        let text = render_confusion_text("x", &m);
        assert!(text.contains('-'), "undefined metric renders as a dash");
    }

    #[test]
    fn percent_rendering_corner_cases() {
        let p = |num, den| Ratio { num, den }.percent().unwrap();
        assert_eq!(p(1, 2), "50%");
        assert_eq!(p(1, 3), "33.33%");
        assert_eq!(p(1, 6), "16.67%");
        assert_eq!(p(1, 8), "12.5%");
        assert_eq!(p(1, 32), "3.13%");
        assert_eq!(p(999, 1000), "99.9%");
        assert_eq!(p(1, 1000), "0.1%");
        assert_eq!(p(1, 20000), "0.01%");
        assert_eq!(p(1, 40000), "0%");
        assert_eq!(p(0, 7), "0%");
        assert_eq!(p(7, 7), "100%");
    }

    #[test]
    fn confusion_csv_round_trip_is_exact() {
        for m in [table_iv(), table_vii()] {
            let text = m.to_csv();
            let back = ConfusionMatrix::from_csv(&text).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn confusion_csv_rejects_malformed_input() {
        assert!(matches!(
            ConfusionMatrix::from_csv("a,b\n1,2\n"),
            Err(EvalError::CsvShape(_))
        ));
        let wrong_order =
            "actual,pred_drowsy,pred_normal,pred_aggressive\nnormal,1,2,3\ndrowsy,0,0,0\naggressive,0,0,0\n";
        assert!(matches!(
            ConfusionMatrix::from_csv(wrong_order),
            Err(EvalError::CsvShape(_))
        ));
        let short = "actual,pred_drowsy,pred_normal,pred_aggressive\ndrowsy,1,2,3\n";
        assert!(matches!(
            ConfusionMatrix::from_csv(short),
            Err(EvalError::CsvShape(_))
        ));
    }

    #[test]
    fn format_names_parse() {
        assert_eq!(ReportFormat::parse("text").unwrap(), ReportFormat::Text);
        assert_eq!(ReportFormat::parse("text-table").unwrap(), ReportFormat::Text);
        assert_eq!(ReportFormat::parse("CSV").unwrap(), ReportFormat::Csv);
        assert_eq!(ReportFormat::parse("json").unwrap(), ReportFormat::Json);
        assert!(matches!(
            ReportFormat::parse("xml"),
            Err(EvalError::UnknownFormat(_))
        ));
    }

    fn sample_report() -> Report {
        Report {
            validation: vec![ValidationBlock {
                dataset: "D2-motorway".into(),
                per_fis: [
                    (BehaviorClass::Drowsy, error_stats(&[74.8, 74.9]).unwrap()),
                    (BehaviorClass::Normal, error_stats(&[0.005, 0.005]).unwrap()),
                    (BehaviorClass::Aggressive, error_stats(&[5.8, 5.9]).unwrap()),
                ],
            }],
            confusion: vec![ConfusionBlock {
                title: "D1".into(),
                matrix: table_iv(),
            }],
        }
    }

    #[test]
    fn text_report_contains_both_blocks() {
        let text = sample_report().render(ReportFormat::Text);
        assert!(text.contains("== Validation: D2-motorway =="));
        assert!(text.contains("== Confusion: D1 =="));
        assert!(text.contains("99.92%"));
    }

    #[test]
    fn csv_report_confusion_section_round_trips() {
        let csv_text = sample_report().render(ReportFormat::Csv);
        let start = csv_text.find("actual,pred_drowsy").unwrap();
        let back = ConfusionMatrix::from_csv(&csv_text[start..]).unwrap();
        assert_eq!(back, table_iv());
    }

    #[test]
    fn json_report_has_the_documented_shape() {
        let text = sample_report().render(ReportFormat::Json);
        let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        let confusion = &doc["confusion"][0];
        assert_eq!(confusion["title"], "D1");
        assert_eq!(confusion["counts"][1][1], 1251);
        assert_eq!(confusion["metrics"][1]["tpr"]["percent"], "99.92%");
        assert_eq!(confusion["metrics"][1]["tpr"]["num"], 1251);
        let validation = &doc["validation"][0];
        assert_eq!(validation["dataset"], "D2-motorway");
        assert_eq!(validation["per_fis"][1]["fis"], "normal");
    }

    #[test]
    fn epsilon_trace_csv_has_one_row_per_sample() {
        use crate::classifier::EpsilonTriple;
        let rows = vec![crate::classifier::StreamRow {
            index: 0,
            t: Some(0.5),
            eps: EpsilonTriple { eps_d: 0.1, eps_n: 0.2, eps_a: 0.3 },
            smoothed: EpsilonTriple { eps_d: 0.1, eps_n: 0.2, eps_a: 0.3 },
            label: BehaviorClass::Drowsy,
        }];
        let mut buf = Vec::new();
        write_epsilon_trace(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "t,eps_d,eps_n,eps_a,label\n0.5,0.1,0.2,0.3,drowsy\n");
    }
}
