//! The soft sensor itself: projection bank plus three per-class Takagi-Sugeno
//! systems. Each system reconstructs a power-weighted projection of the
//! sample onto the pooled first principal component; the class whose system
//! reconstructs its own target best (smallest absolute error) is the label.

use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anfis::{self, AnfisError, ClusteringParams, TrainingConfig};
use crate::dataset::{FeatureMatrix, Variant};
use crate::fis::{FisError, GaussianMf, Rule, TsModel};
use crate::pca::{self, PcaError, PrincipalComponent, ProjectionBank, Standardizer};

/// Model file layout revision; bump on any incompatible change.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("class {class} has {rows} rows; need at least 2")]
    InsufficientClassData { class: BehaviorClass, rows: usize },
    #[error("column {0} is constant; standardization impossible")]
    ConstantColumn(String),
    #[error("feature row has non-finite values")]
    NonFiniteInput,
    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("exponent {name} must be positive, got {value}")]
    BadExponent { name: &'static str, value: f64 },
    #[error("smoothing window must be at least 1")]
    BadWindow,
    #[error("model file version {found} is not supported (expected {MODEL_FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("model file is invalid: {0}")]
    InvalidModel(String),
    #[error("model file could not be parsed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model file i/o: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Anfis(#[from] AnfisError),
    #[error(transparent)]
    Fis(#[from] FisError),
}

/// Driving-style label. The declaration order is also the deterministic
/// tie-break order wherever scores come out equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorClass {
    Drowsy,
    Normal,
    Aggressive,
}

impl BehaviorClass {
    pub const ALL: [BehaviorClass; 3] = [
        BehaviorClass::Drowsy,
        BehaviorClass::Normal,
        BehaviorClass::Aggressive,
    ];

    pub fn index(self) -> usize {
        match self {
            BehaviorClass::Drowsy => 0,
            BehaviorClass::Normal => 1,
            BehaviorClass::Aggressive => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            BehaviorClass::Drowsy => "drowsy",
            BehaviorClass::Normal => "normal",
            BehaviorClass::Aggressive => "aggressive",
        }
    }

    /// Case-insensitive parse; single letters and full names both work.
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d" | "drowsy" => Some(BehaviorClass::Drowsy),
            "n" | "normal" => Some(BehaviorClass::Normal),
            "a" | "aggressive" => Some(BehaviorClass::Aggressive),
            _ => None,
        }
    }
}

impl fmt::Display for BehaviorClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// sign(x) * |x|^a: odd, continuous at zero, identity when a = 1.
pub fn signed_pow(x: f64, a: f64) -> f64 {
    x.signum() * x.abs().powf(a)
}

/// Exponents applied to the pooled-component projection to form each class
/// target: a1 for drowsy, a2 for normal, a3 for aggressive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightedExponents {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl Default for WeightedExponents {
    fn default() -> Self {
        Self {
            a1: 1.1,
            a2: 1.01,
            a3: 1.001,
        }
    }
}

impl WeightedExponents {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        for (name, value) in [("a1", self.a1), ("a2", self.a2), ("a3", self.a3)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ClassifierError::BadExponent { name, value });
            }
        }
        Ok(())
    }

    /// Equal exponents make the class targets coincide, which degrades the
    /// decision rule; callers may surface this to the user.
    pub fn duplicate_warning(&self) -> Option<String> {
        if self.a1 == self.a2 || self.a2 == self.a3 || self.a1 == self.a3 {
            Some(format!(
                "exponents are not pairwise distinct ({}, {}, {}); class targets will overlap",
                self.a1, self.a2, self.a3
            ))
        } else {
            None
        }
    }

    pub fn for_class(&self, class: BehaviorClass) -> f64 {
        match class {
            BehaviorClass::Drowsy => self.a1,
            BehaviorClass::Normal => self.a2,
            BehaviorClass::Aggressive => self.a3,
        }
    }
}

/// Per-class reconstruction errors for one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonTriple {
    pub eps_d: f64,
    pub eps_n: f64,
    pub eps_a: f64,
}

impl EpsilonTriple {
    pub fn get(&self, class: BehaviorClass) -> f64 {
        match class {
            BehaviorClass::Drowsy => self.eps_d,
            BehaviorClass::Normal => self.eps_n,
            BehaviorClass::Aggressive => self.eps_a,
        }
    }

    /// Class with the smallest error; exact ties go to the earlier class in
    /// declaration order (drowsy, then normal, then aggressive).
    pub fn argmin(&self) -> BehaviorClass {
        let mut best = BehaviorClass::Drowsy;
        let mut best_v = self.eps_d;
        for class in [BehaviorClass::Normal, BehaviorClass::Aggressive] {
            let v = self.get(class);
            if v < best_v {
                best_v = v;
                best = class;
            }
        }
        best
    }
}

/// Everything needed to classify a feature row.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftSensor {
    pub variant: Variant,
    pub standardize: bool,
    pub bank: ProjectionBank,
    pub fis_d: TsModel,
    pub fis_n: TsModel,
    pub fis_a: TsModel,
    pub exponents: WeightedExponents,
}

/// Knobs for `fit`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Standardize features before any projection; when false only the mean
    /// is removed and raw scales flow through.
    pub standardize: bool,
    /// Explained-variance threshold reported per projection (the sensor
    /// always uses the first component).
    pub threshold: f64,
    pub clustering: ClusteringParams,
    pub training: TrainingConfig,
    pub exponents: WeightedExponents,
    /// Skip the least-squares consequent init and let backprop learn the
    /// consequents from zero.
    pub pure_backprop: bool,
    /// Deterministic stride subsample applied to the clustering stage when a
    /// class exceeds this many rows; 0 disables the cap.
    pub cluster_cap: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            standardize: true,
            threshold: 0.95,
            clustering: ClusteringParams::default(),
            training: TrainingConfig::default(),
            exponents: WeightedExponents::default(),
            pure_backprop: false,
            cluster_cap: 2000,
        }
    }
}

/// Diagnostics fit produces alongside the sensor.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub pca: Vec<PcaSummary>,
    pub training: Vec<ClassTraining>,
}

#[derive(Debug, Clone)]
pub struct PcaSummary {
    pub name: String,
    pub eigenvalues: Vec<f64>,
    pub evr: Vec<f64>,
    pub selected: usize,
}

#[derive(Debug, Clone)]
pub struct ClassTraining {
    pub class: BehaviorClass,
    pub rules: usize,
    pub loss_trace: Vec<f64>,
}

/// One classified row from `classify_stream`.
#[derive(Debug, Clone)]
pub struct StreamRow {
    pub index: usize,
    pub t: Option<f64>,
    pub eps: EpsilonTriple,
    pub smoothed: EpsilonTriple,
    pub label: BehaviorClass,
}

#[derive(Debug, Clone, Default)]
pub struct StreamResult {
    pub rows: Vec<StreamRow>,
    /// Indices of input rows skipped for non-finite values.
    pub flagged: Vec<usize>,
}

/// Fits the full sensor on labeled features; all three classes must be
/// present with at least two rows each.
pub fn fit(features: &FeatureMatrix, cfg: &FitConfig) -> Result<SoftSensor, ClassifierError> {
    fit_with_report(features, cfg).map(|(sensor, _)| sensor)
}

/// `fit`, also returning explained-variance and training diagnostics.
pub fn fit_with_report(
    features: &FeatureMatrix,
    cfg: &FitConfig,
) -> Result<(SoftSensor, FitReport), ClassifierError> {
    cfg.exponents.validate()?;

    let d = features.n_cols();
    let mut by_class: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for i in 0..features.n_rows() {
        by_class[features.label(i).index()].extend_from_slice(features.row(i));
    }
    for class in BehaviorClass::ALL {
        let rows = by_class[class.index()].len() / d;
        if rows < 2 {
            return Err(ClassifierError::InsufficientClassData { class, rows });
        }
    }

    let standardizer = if cfg.standardize {
        Standardizer::fit(features.data(), d).map_err(|e| match e {
            PcaError::ConstantColumn(i) => {
                ClassifierError::ConstantColumn(features.columns()[i].clone())
            }
            other => ClassifierError::Pca(other),
        })?
    } else {
        Standardizer::fit_center_only(features.data(), d)?
    };

    let z_union = standardizer.apply_matrix(features.data(), d)?;
    let z_class: Vec<Vec<f64>> = by_class
        .iter()
        .map(|rows| standardizer.apply_matrix(rows, d))
        .collect::<Result<_, _>>()?;

    let mut pca_summaries = Vec::with_capacity(4);
    let mut first_components = Vec::with_capacity(4);
    for (name, z) in [
        ("drowsy", &z_class[0]),
        ("normal", &z_class[1]),
        ("aggressive", &z_class[2]),
        ("pooled", &z_union),
    ] {
        let fitted = pca::fit_pca(z, d, cfg.threshold)?;
        pca_summaries.push(PcaSummary {
            name: name.to_string(),
            eigenvalues: fitted.components.iter().map(|c| c.eigenvalue).collect(),
            evr: fitted.components.iter().map(|c| c.evr).collect(),
            selected: fitted.selected,
        });
        first_components.push(fitted.components.into_iter().next().expect("d >= 1"));
    }
    let p1t = first_components.pop().expect("pooled component");
    let p1a = first_components.pop().expect("aggressive component");
    let p1n = first_components.pop().expect("normal component");
    let p1d = first_components.pop().expect("drowsy component");
    let bank = ProjectionBank {
        standardizer,
        p1d,
        p1n,
        p1a,
        p1t,
    };

    let mut training = Vec::with_capacity(3);
    let mut models: Vec<TsModel> = Vec::with_capacity(3);
    for class in BehaviorClass::ALL {
        let z = &z_class[class.index()];
        let rows = z.len() / d;
        let mut inputs = Vec::with_capacity(rows * 3);
        let mut targets = Vec::with_capacity(rows);
        let a = cfg.exponents.for_class(class);
        for row in z.chunks_exact(d) {
            let dot = |axis: &[f64]| row.iter().zip(axis).map(|(x, y)| x * y).sum::<f64>();
            inputs.push(dot(&bank.p1d.axis));
            inputs.push(dot(&bank.p1n.axis));
            inputs.push(dot(&bank.p1a.axis));
            targets.push(signed_pow(dot(&bank.p1t.axis), a));
        }

        // rule structure comes from clustering the joint input-target space;
        // centers keep only the input coordinates
        let mut joint = Vec::with_capacity(rows * 4);
        for (u, y) in inputs.chunks_exact(3).zip(&targets) {
            joint.extend_from_slice(u);
            joint.push(*y);
        }
        let clustered = if cfg.cluster_cap > 0 && rows > cfg.cluster_cap {
            let stride = rows.div_ceil(cfg.cluster_cap);
            let sub: Vec<f64> = joint
                .chunks_exact(4)
                .step_by(stride)
                .flatten()
                .copied()
                .collect();
            anfis::subtractive_clustering(&sub, 4, &cfg.clustering)?
        } else {
            anfis::subtractive_clustering(&joint, 4, &cfg.clustering)?
        };
        let centers: Vec<Vec<f64>> = clustered.iter().map(|c| c[..3].to_vec()).collect();

        let initial = if cfg.pure_backprop {
            let sigma = anfis::antecedent_widths(&inputs, 3, cfg.clustering.radius)?;
            let rules = centers
                .iter()
                .map(|c| Rule {
                    antecedents: c
                        .iter()
                        .zip(&sigma)
                        .map(|(&center, &s)| GaussianMf { center, sigma: s })
                        .collect(),
                    consequent: vec![0.0; 4],
                })
                .collect();
            TsModel::new(3, rules)?
        } else {
            anfis::init_fis(&centers, &inputs, 3, &targets, cfg.clustering.radius)?
        };
        let outcome = anfis::train_backprop(&initial, &inputs, 3, &targets, &cfg.training)?;
        training.push(ClassTraining {
            class,
            rules: outcome.model.rules.len(),
            loss_trace: outcome.loss_trace,
        });
        models.push(outcome.model);
    }

    let fis_a = models.pop().expect("aggressive model");
    let fis_n = models.pop().expect("normal model");
    let fis_d = models.pop().expect("drowsy model");
    let sensor = SoftSensor {
        variant: features.variant(),
        standardize: cfg.standardize,
        bank,
        fis_d,
        fis_n,
        fis_a,
        exponents: cfg.exponents,
    };
    Ok((
        sensor,
        FitReport {
            pca: pca_summaries,
            training,
        },
    ))
}

impl SoftSensor {
    pub fn input_dim(&self) -> usize {
        self.bank.dim()
    }

    /// Reconstruction error of each class system on one raw feature row.
    pub fn epsilons(&self, x: &[f64]) -> Result<EpsilonTriple, ClassifierError> {
        if x.len() != self.input_dim() {
            return Err(ClassifierError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::NonFiniteInput);
        }
        let u = self.bank.project3(x)?;
        let s_t = self.bank.project_total(x)?;
        let eps = |model: &TsModel, a: f64| -> Result<f64, ClassifierError> {
            Ok((model.infer(&u)? - signed_pow(s_t, a)).abs())
        };
        Ok(EpsilonTriple {
            eps_d: eps(&self.fis_d, self.exponents.a1)?,
            eps_n: eps(&self.fis_n, self.exponents.a2)?,
            eps_a: eps(&self.fis_a, self.exponents.a3)?,
        })
    }

    /// Label plus the epsilon triple behind it.
    pub fn classify(&self, x: &[f64]) -> Result<(BehaviorClass, EpsilonTriple), ClassifierError> {
        let eps = self.epsilons(x)?;
        Ok((eps.argmin(), eps))
    }

    /// Classifies a row-major batch, smoothing epsilons with a trailing
    /// moving average over the last `window` valid rows before the argmin.
    /// Rows with non-finite values are flagged and skipped without disturbing
    /// the window.
    pub fn classify_stream(
        &self,
        data: &[f64],
        timestamps: Option<&[f64]>,
        window: usize,
    ) -> Result<StreamResult, ClassifierError> {
        if window == 0 {
            return Err(ClassifierError::BadWindow);
        }
        let d = self.input_dim();
        if d == 0 || !data.len().is_multiple_of(d) {
            return Err(ClassifierError::DimensionMismatch {
                expected: d,
                got: data.len() % d.max(1),
            });
        }
        let mut result = StreamResult::default();
        let mut recent: VecDeque<EpsilonTriple> = VecDeque::with_capacity(window);
        for (index, row) in data.chunks_exact(d).enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                result.flagged.push(index);
                continue;
            }
            let eps = self.epsilons(row)?;
            if recent.len() == window {
                recent.pop_front();
            }
            recent.push_back(eps);
            let k = recent.len() as f64;
            let mut sums = [0.0; 3];
            for e in &recent {
                sums[0] += e.eps_d;
                sums[1] += e.eps_n;
                sums[2] += e.eps_a;
            }
            let smoothed = EpsilonTriple {
                eps_d: sums[0] / k,
                eps_n: sums[1] / k,
                eps_a: sums[2] / k,
            };
            result.rows.push(StreamRow {
                index,
                t: timestamps.and_then(|ts| ts.get(index).copied()),
                eps,
                smoothed,
                label: smoothed.argmin(),
            });
        }
        Ok(result)
    }

    /// Serializes the model to its canonical JSON form: fixed field order,
    /// floats always written with 17 significant digits so reloading
    /// reproduces every bit.
    pub fn to_json_string(&self) -> Result<String, ClassifierError> {
        let file = ModelFile::from_sensor(self);
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision);
        file.serialize(&mut ser)?;
        buf.push(b'\n');
        Ok(String::from_utf8(buf).expect("serializer emits utf-8"))
    }

    pub fn from_json_str(text: &str) -> Result<Self, ClassifierError> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.into_sensor()
    }

    pub fn save(&self, path: &Path) -> Result<(), ClassifierError> {
        let text = self.to_json_string()?;
        let mut f = fs::File::create(path)?;
        f.write_all(text.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ClassifierError> {
        let text = fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}

/// JSON formatter that writes every float in scientific notation with 17
/// significant digits; that many digits round-trip any f64 exactly.
struct FullPrecision;

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    variant: String,
    standardize: bool,
    standardizer: StandardizerFile,
    p1d: ComponentFile,
    p1n: ComponentFile,
    p1a: ComponentFile,
    p1t: ComponentFile,
    fis_d: FisFile,
    fis_n: FisFile,
    fis_a: FisFile,
    exponents: WeightedExponents,
}

#[derive(Serialize, Deserialize)]
struct StandardizerFile {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ComponentFile {
    axis: Vec<f64>,
    eigenvalue: f64,
    evr: f64,
}

#[derive(Serialize, Deserialize)]
struct FisFile {
    n_inputs: usize,
    rules: Vec<RuleFile>,
}

#[derive(Serialize, Deserialize)]
struct RuleFile {
    centers: Vec<f64>,
    sigmas: Vec<f64>,
    consequent: Vec<f64>,
}

impl ModelFile {
    fn from_sensor(s: &SoftSensor) -> Self {
        let comp = |c: &PrincipalComponent| ComponentFile {
            axis: c.axis.clone(),
            eigenvalue: c.eigenvalue,
            evr: c.evr,
        };
        let fis = |m: &TsModel| FisFile {
            n_inputs: m.n_inputs,
            rules: m
                .rules
                .iter()
                .map(|r| RuleFile {
                    centers: r.antecedents.iter().map(|a| a.center).collect(),
                    sigmas: r.antecedents.iter().map(|a| a.sigma).collect(),
                    consequent: r.consequent.clone(),
                })
                .collect(),
        };
        ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            variant: s.variant.as_str().to_string(),
            standardize: s.standardize,
            standardizer: StandardizerFile {
                mean: s.bank.standardizer.mean.clone(),
                scale: s.bank.standardizer.scale.clone(),
            },
            p1d: comp(&s.bank.p1d),
            p1n: comp(&s.bank.p1n),
            p1a: comp(&s.bank.p1a),
            p1t: comp(&s.bank.p1t),
            fis_d: fis(&s.fis_d),
            fis_n: fis(&s.fis_n),
            fis_a: fis(&s.fis_a),
            exponents: s.exponents,
        }
    }

    fn into_sensor(self) -> Result<SoftSensor, ClassifierError> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(ClassifierError::UnsupportedVersion {
                found: self.format_version,
            });
        }
        let variant = Variant::parse(&self.variant)
            .ok_or_else(|| ClassifierError::InvalidModel(format!("unknown variant {:?}", self.variant)))?;
        let d = self.standardizer.mean.len();
        if d != variant.n_features() {
            return Err(ClassifierError::InvalidModel(format!(
                "variant {} expects {} features, standardizer has {d}",
                variant.as_str(),
                variant.n_features()
            )));
        }
        if self.standardizer.scale.len() != d {
            return Err(ClassifierError::InvalidModel(
                "standardizer mean/scale lengths differ".into(),
            ));
        }
        if self.standardizer.scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(ClassifierError::InvalidModel(
                "standardizer scales must be positive".into(),
            ));
        }
        let comp = |c: ComponentFile, name: &str| -> Result<PrincipalComponent, ClassifierError> {
            if c.axis.len() != d {
                return Err(ClassifierError::InvalidModel(format!(
                    "{name} axis length {} does not match {d} features",
                    c.axis.len()
                )));
            }
            if c.axis.iter().any(|v| !v.is_finite()) || !c.eigenvalue.is_finite() {
                return Err(ClassifierError::InvalidModel(format!(
                    "{name} contains non-finite values"
                )));
            }
            Ok(PrincipalComponent {
                axis: c.axis,
                eigenvalue: c.eigenvalue,
                evr: c.evr,
            })
        };
        let fis = |f: FisFile, name: &str| -> Result<TsModel, ClassifierError> {
            if f.n_inputs != 3 {
                return Err(ClassifierError::InvalidModel(format!(
                    "{name} must take 3 inputs, takes {}",
                    f.n_inputs
                )));
            }
            let rules = f
                .rules
                .into_iter()
                .map(|r| {
                    if r.centers.len() != 3 || r.sigmas.len() != 3 || r.consequent.len() != 4 {
                        return Err(ClassifierError::InvalidModel(format!(
                            "{name} has a malformed rule"
                        )));
                    }
                    let antecedents = r
                        .centers
                        .iter()
                        .zip(&r.sigmas)
                        .map(|(&center, &sigma)| GaussianMf { center, sigma })
                        .collect();
                    Ok(Rule {
                        antecedents,
                        consequent: r.consequent,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            TsModel::new(3, rules).map_err(|e| ClassifierError::InvalidModel(format!("{name}: {e}")))
        };

        let bank = ProjectionBank {
            standardizer: Standardizer {
                mean: self.standardizer.mean,
                scale: self.standardizer.scale,
            },
            p1d: comp(self.p1d, "p1d")?,
            p1n: comp(self.p1n, "p1n")?,
            p1a: comp(self.p1a, "p1a")?,
            p1t: comp(self.p1t, "p1t")?,
        };
        bank.validate()?;
        let sensor = SoftSensor {
            variant,
            standardize: self.standardize,
            bank,
            fis_d: fis(self.fis_d, "fis_d")?,
            fis_n: fis(self.fis_n, "fis_n")?,
            fis_a: fis(self.fis_a, "fis_a")?,
            exponents: self.exponents,
        };
        sensor.exponents.validate()?;
        Ok(sensor)
    }
}
