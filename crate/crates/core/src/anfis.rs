//! Structure and parameter learning for Takagi-Sugeno models: subtractive
//! clustering picks rule centers, least squares initializes consequents, and
//! full-batch gradient descent with backtracking refines everything.

use crate::fis::{FisError, GaussianMf, Rule, TsModel, FIRING_UNDERFLOW};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnfisError {
    #[error("empty input")]
    EmptyInput,
    #[error("data length {len} is not a multiple of {cols} columns")]
    RaggedData { len: usize, cols: usize },
    #[error("targets ({targets}) and rows ({rows}) disagree")]
    TargetLen { targets: usize, rows: usize },
    #[error("non-finite value at row {0}")]
    NonFinite(usize),
    #[error("invalid clustering parameters: {0}")]
    BadParams(String),
    #[error("no cluster centers supplied")]
    NoCenters,
    #[error("center dimension {got} does not match data dimension {expected}")]
    CenterDim { expected: usize, got: usize },
    #[error("normal equations are singular even with ridge damping")]
    Singular,
    #[error("initial loss is not finite")]
    NonFiniteLoss,
    #[error("non-finite gradient for {0}")]
    NonFiniteGradient(String),
    #[error(transparent)]
    Fis(#[from] FisError),
}

/// Subtractive clustering knobs. `radius` is the neighborhood radius in
/// normalized (unit hypercube) coordinates; `squash` widens the radius used
/// when discounting potentials around an accepted center.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringParams {
    pub radius: f64,
    pub squash: f64,
    pub accept_ratio: f64,
    pub reject_ratio: f64,
}

impl Default for ClusteringParams {
    fn default() -> Self {
        Self {
            radius: 0.5,
            squash: 1.25,
            accept_ratio: 0.5,
            reject_ratio: 0.15,
        }
    }
}

impl ClusteringParams {
    pub fn validate(&self) -> Result<(), AnfisError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(AnfisError::BadParams(format!(
                "radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.squash >= 1.0 && self.squash.is_finite()) {
            return Err(AnfisError::BadParams(format!(
                "squash must be >= 1, got {}",
                self.squash
            )));
        }
        if !(self.reject_ratio >= 0.0
            && self.reject_ratio < self.accept_ratio
            && self.accept_ratio <= 1.0)
        {
            return Err(AnfisError::BadParams(format!(
                "need 0 <= reject < accept <= 1, got reject {} accept {}",
                self.reject_ratio, self.accept_ratio
            )));
        }
        Ok(())
    }
}

fn check_rows(data: &[f64], cols: usize) -> Result<usize, AnfisError> {
    if cols == 0 || !data.len().is_multiple_of(cols) {
        return Err(AnfisError::RaggedData {
            len: data.len(),
            cols,
        });
    }
    let rows = data.len() / cols;
    if rows == 0 {
        return Err(AnfisError::EmptyInput);
    }
    for (i, row) in data.chunks_exact(cols).enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(AnfisError::NonFinite(i));
        }
    }
    Ok(rows)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Subtractive clustering (mountain method on data points). Every point gets
/// a potential from its neighbors; centers are greedily selected by maximal
/// remaining potential, with the accept/reject ratios and the distance test
/// deciding borderline candidates. Returned centers are rows of `data`, in
/// selection order.
pub fn subtractive_clustering(
    data: &[f64],
    cols: usize,
    params: &ClusteringParams,
) -> Result<Vec<Vec<f64>>, AnfisError> {
    params.validate()?;
    let rows = check_rows(data, cols)?;

    // normalize to the unit hypercube so the radius is scale-free
    let mut lo = vec![f64::INFINITY; cols];
    let mut hi = vec![f64::NEG_INFINITY; cols];
    for row in data.chunks_exact(cols) {
        for c in 0..cols {
            lo[c] = lo[c].min(row[c]);
            hi[c] = hi[c].max(row[c]);
        }
    }
    let span: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| if h > l { h - l } else { 1.0 })
        .collect();
    let norm: Vec<f64> = data
        .chunks_exact(cols)
        .flat_map(|row| {
            row.iter()
                .enumerate()
                .map(|(c, v)| (v - lo[c]) / span[c])
                .collect::<Vec<_>>()
        })
        .collect();
    let point = |i: usize| &norm[i * cols..(i + 1) * cols];

    let alpha = 4.0 / (params.radius * params.radius);
    let rb = params.squash * params.radius;
    let beta = 4.0 / (rb * rb);

    let mut potential = vec![0.0; rows];
    for (i, p) in potential.iter_mut().enumerate() {
        for j in 0..rows {
            *p += (-alpha * sq_dist(point(i), point(j))).exp();
        }
    }

    let argmax = |p: &[f64]| {
        let mut best = 0;
        for (i, v) in p.iter().enumerate() {
            if *v > p[best] {
                best = i;
            }
        }
        best
    };

    let first = argmax(&potential);
    let p_ref = potential[first];
    let mut centers = vec![first];
    let subtract = |potential: &mut [f64], idx: usize, p_star: f64| {
        for (i, p) in potential.iter_mut().enumerate() {
            *p -= p_star * (-beta * sq_dist(point(i), point(idx))).exp();
        }
    };
    subtract(&mut potential, first, p_ref);

    while centers.len() < rows {
        let cand = argmax(&potential);
        let p_star = potential[cand];
        if p_star >= params.accept_ratio * p_ref {
            subtract(&mut potential, cand, p_star);
            centers.push(cand);
        } else if p_star < params.reject_ratio * p_ref {
            break;
        } else {
            // gray zone: accept only if the candidate is far enough from
            // every existing center relative to its remaining potential
            let d_min = centers
                .iter()
                .map(|&c| sq_dist(point(cand), point(c)).sqrt())
                .fold(f64::INFINITY, f64::min);
            if d_min / params.radius + p_star / p_ref >= 1.0 {
                subtract(&mut potential, cand, p_star);
                centers.push(cand);
            } else {
                potential[cand] = 0.0;
            }
        }
    }

    Ok(centers
        .into_iter()
        .map(|i| data[i * cols..(i + 1) * cols].to_vec())
        .collect())
}

/// Antecedent width per input: radius * column range / sqrt(8). A collapsed
/// column gets width 1, which makes its membership constant.
pub fn antecedent_widths(data: &[f64], cols: usize, radius: f64) -> Result<Vec<f64>, AnfisError> {
    check_rows(data, cols)?;
    let mut lo = vec![f64::INFINITY; cols];
    let mut hi = vec![f64::NEG_INFINITY; cols];
    for row in data.chunks_exact(cols) {
        for c in 0..cols {
            lo[c] = lo[c].min(row[c]);
            hi[c] = hi[c].max(row[c]);
        }
    }
    Ok((0..cols)
        .map(|c| {
            let range = hi[c] - lo[c];
            if range > 0.0 {
                radius * range / 8.0f64.sqrt()
            } else {
                1.0
            }
        })
        .collect())
}

/// Normalized firing strengths of each rule for one row. Falls back to a
/// one-hot on the nearest rule when the total strength underflows, mirroring
/// inference.
fn normalized_strengths(model: &TsModel, x: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = model
        .rules
        .iter()
        .map(|r| r.firing_strength(x).expect("arity checked at build"))
        .collect();
    let sum: f64 = w.iter().sum();
    if sum < FIRING_UNDERFLOW {
        let j = model.nearest_rule(x);
        w.iter_mut().for_each(|v| *v = 0.0);
        w[j] = 1.0;
    } else {
        w.iter_mut().for_each(|v| *v /= sum);
    }
    w
}

/// Builds a rule base from cluster centers and fits the affine consequents by
/// global least squares on normalized-strength-weighted regressors. Singular
/// or underdetermined systems fall back to ridge damping (lambda 1e-8).
pub fn init_fis(
    centers: &[Vec<f64>],
    data: &[f64],
    cols: usize,
    targets: &[f64],
    radius: f64,
) -> Result<TsModel, AnfisError> {
    let rows = check_rows(data, cols)?;
    if targets.len() != rows {
        return Err(AnfisError::TargetLen {
            targets: targets.len(),
            rows,
        });
    }
    if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
        return Err(AnfisError::NonFinite(i));
    }
    if centers.is_empty() {
        return Err(AnfisError::NoCenters);
    }
    for c in centers {
        if c.len() != cols {
            return Err(AnfisError::CenterDim {
                expected: cols,
                got: c.len(),
            });
        }
    }

    let sigma = antecedent_widths(data, cols, radius)?;
    let rules: Vec<Rule> = centers
        .iter()
        .map(|c| Rule {
            antecedents: c
                .iter()
                .zip(&sigma)
                .map(|(&center, &s)| GaussianMf { center, sigma: s })
                .collect(),
            consequent: vec![0.0; cols + 1],
        })
        .collect();
    let mut model = TsModel::new(cols, rules)?;

    // regressor row: per rule, normalized strength times (1, x1, .., xn)
    let n_rules = centers.len();
    let p = n_rules * (cols + 1);
    let mut ata = vec![0.0; p * p];
    let mut aty = vec![0.0; p];
    let mut reg = vec![0.0; p];
    for (k, row) in data.chunks_exact(cols).enumerate() {
        let lambda = normalized_strengths(&model, row);
        for (j, &lam) in lambda.iter().enumerate() {
            let base = j * (cols + 1);
            reg[base] = lam;
            for i in 0..cols {
                reg[base + 1 + i] = lam * row[i];
            }
        }
        for a in 0..p {
            aty[a] += reg[a] * targets[k];
            for b in a..p {
                ata[a * p + b] += reg[a] * reg[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            ata[a * p + b] = ata[b * p + a];
        }
    }

    let coeffs = if rows < p {
        solve_ridged(ata, aty, p)?
    } else {
        match cholesky_solve(ata.clone(), aty.clone(), p) {
            Some(sol) => sol,
            None => solve_ridged(ata, aty, p)?,
        }
    };
    for (j, rule) in model.rules.iter_mut().enumerate() {
        let base = j * (cols + 1);
        rule.consequent = coeffs[base..base + cols + 1].to_vec();
    }
    Ok(model)
}

fn solve_ridged(mut ata: Vec<f64>, aty: Vec<f64>, p: usize) -> Result<Vec<f64>, AnfisError> {
    for i in 0..p {
        ata[i * p + i] += 1e-8;
    }
    cholesky_solve(ata, aty, p).ok_or(AnfisError::Singular)
}

/// Cholesky solve of a symmetric positive-definite system; None when the
/// factorization breaks down.
fn cholesky_solve(mut a: Vec<f64>, mut b: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= a[i * n + k] * a[j * n + k];
            }
            if i == j {
                if sum.is_nan() || sum <= 0.0 {
                    return None;
                }
                a[i * n + i] = sum.sqrt();
            } else {
                a[i * n + j] = sum / a[j * n + j];
            }
        }
    }
    // forward then backward substitution in place
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= a[i * n + k] * b[k];
        }
        b[i] = sum / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in (i + 1)..n {
            sum -= a[k * n + i] * b[k];
        }
        b[i] = sum / a[i * n + i];
    }
    Some(b)
}

/// Gradient descent settings. Training is full batch, so `shuffle_seed` only
/// pins the config for reproducibility bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub shuffle_seed: u64,
    pub early_stop_tol: f64,
    pub early_stop_window: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 0.01,
            shuffle_seed: 0,
            early_stop_tol: 1e-6,
            early_stop_window: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TsModel,
    /// MSE before training followed by the MSE after each completed epoch.
    pub loss_trace: Vec<f64>,
}

/// Flat parameter vector: per rule, all centers, then all widths, then the
/// consequent coefficients.
pub fn flatten_params(model: &TsModel) -> Vec<f64> {
    let mut out = Vec::new();
    for rule in &model.rules {
        out.extend(rule.antecedents.iter().map(|m| m.center));
        out.extend(rule.antecedents.iter().map(|m| m.sigma));
        out.extend(rule.consequent.iter().copied());
    }
    out
}

/// Rebuilds a model from `flatten_params` output, keeping the template shape.
pub fn model_with_params(template: &TsModel, params: &[f64]) -> TsModel {
    let n = template.n_inputs;
    let stride = 3 * n + 1;
    let mut model = template.clone();
    for (j, rule) in model.rules.iter_mut().enumerate() {
        let base = j * stride;
        for i in 0..n {
            rule.antecedents[i].center = params[base + i];
            rule.antecedents[i].sigma = params[base + n + i];
        }
        rule.consequent = params[base + 2 * n..base + 3 * n + 1].to_vec();
    }
    model
}

fn param_name(n_inputs: usize, flat_idx: usize) -> String {
    let stride = 3 * n_inputs + 1;
    let rule = flat_idx / stride;
    let off = flat_idx % stride;
    if off < n_inputs {
        format!("rule {rule} center[{off}]")
    } else if off < 2 * n_inputs {
        format!("rule {rule} sigma[{}]", off - n_inputs)
    } else {
        format!("rule {rule} consequent[{}]", off - 2 * n_inputs)
    }
}

/// Mean squared error of the model on (data, targets).
pub fn mse(model: &TsModel, data: &[f64], cols: usize, targets: &[f64]) -> Result<f64, AnfisError> {
    let rows = check_rows(data, cols)?;
    if targets.len() != rows {
        return Err(AnfisError::TargetLen {
            targets: targets.len(),
            rows,
        });
    }
    let mut sum = 0.0;
    for (row, &y) in data.chunks_exact(cols).zip(targets) {
        let e = model.infer(row)? - y;
        sum += e * e;
    }
    Ok(sum / rows as f64)
}

/// MSE plus its analytic gradient in `flatten_params` order. Rows whose total
/// firing strength underflows contribute gradient only through the nearest
/// rule's consequent, matching the inference fallback.
pub fn mse_and_gradient(
    model: &TsModel,
    data: &[f64],
    cols: usize,
    targets: &[f64],
) -> Result<(f64, Vec<f64>), AnfisError> {
    let rows = check_rows(data, cols)?;
    if targets.len() != rows {
        return Err(AnfisError::TargetLen {
            targets: targets.len(),
            rows,
        });
    }
    let n = model.n_inputs;
    let stride = 3 * n + 1;
    let n_rules = model.rules.len();
    let mut grad = vec![0.0; n_rules * stride];
    let mut loss = 0.0;
    let mut w = vec![0.0; n_rules];
    let mut f = vec![0.0; n_rules];

    for (row, &y) in data.chunks_exact(cols).zip(targets) {
        let mut sum_w = 0.0;
        for (j, rule) in model.rules.iter().enumerate() {
            w[j] = rule.firing_strength(row)?;
            f[j] = rule.output(row);
            sum_w += w[j];
        }
        if sum_w < FIRING_UNDERFLOW {
            let j = model.nearest_rule(row);
            let e = f[j] - y;
            loss += e * e;
            let scale = 2.0 * e / rows as f64;
            let base = j * stride + 2 * n;
            grad[base] += scale;
            for i in 0..n {
                grad[base + 1 + i] += scale * row[i];
            }
            continue;
        }
        let yhat: f64 = (0..n_rules).map(|j| w[j] * f[j]).sum::<f64>() / sum_w;
        let e = yhat - y;
        loss += e * e;
        let scale = 2.0 * e / rows as f64;
        for (j, rule) in model.rules.iter().enumerate() {
            let base = j * stride;
            let lambda = w[j] / sum_w;
            grad[base + 2 * n] += scale * lambda;
            for i in 0..n {
                grad[base + 2 * n + 1 + i] += scale * lambda * row[i];
            }
            // dyhat/dw_j = (f_j - yhat) / sum_w, then chain into c and sigma
            let dy_dw = (f[j] - yhat) / sum_w;
            for i in 0..n {
                let mfm = &rule.antecedents[i];
                let diff = row[i] - mfm.center;
                let s2 = mfm.sigma * mfm.sigma;
                grad[base + i] += scale * dy_dw * w[j] * diff / s2;
                grad[base + n + i] += scale * dy_dw * w[j] * diff * diff / (s2 * mfm.sigma);
            }
        }
    }
    Ok((loss / rows as f64, grad))
}

/// Full-batch gradient descent with backtracking: an epoch that would raise
/// the MSE halves the step up to 20 times, and a still-failing epoch leaves
/// the model untouched, so the loss trace never increases. Widths are clamped
/// to 1e-6 of each input's range. Stops early when the relative improvement
/// over `early_stop_window` epochs drops below `early_stop_tol`.
pub fn train_backprop(
    model: &TsModel,
    data: &[f64],
    cols: usize,
    targets: &[f64],
    cfg: &TrainingConfig,
) -> Result<TrainOutcome, AnfisError> {
    if model.n_inputs != cols {
        return Err(AnfisError::CenterDim {
            expected: model.n_inputs,
            got: cols,
        });
    }
    check_rows(data, cols)?;

    let mut lo = vec![f64::INFINITY; cols];
    let mut hi = vec![f64::NEG_INFINITY; cols];
    for row in data.chunks_exact(cols) {
        for c in 0..cols {
            lo[c] = lo[c].min(row[c]);
            hi[c] = hi[c].max(row[c]);
        }
    }
    let sigma_floor: Vec<f64> = (0..cols)
        .map(|c| {
            let range = hi[c] - lo[c];
            1e-6 * if range > 0.0 { range } else { 1.0 }
        })
        .collect();
    let clamp = |params: &mut [f64]| {
        let n = cols;
        let stride = 3 * n + 1;
        for j in 0..model.rules.len() {
            for (i, &floor) in sigma_floor.iter().enumerate().take(n) {
                let idx = j * stride + n + i;
                if params[idx] < floor {
                    params[idx] = floor;
                }
            }
        }
    };

    let mut current = model.clone();
    let (mut current_mse, _) = mse_and_gradient(&current, data, cols, targets)?;
    if !current_mse.is_finite() {
        return Err(AnfisError::NonFiniteLoss);
    }
    let mut trace = vec![current_mse];
    if cfg.epochs == 0 {
        return Ok(TrainOutcome {
            model: current,
            loss_trace: trace,
        });
    }

    let mut params = flatten_params(&current);
    for _epoch in 0..cfg.epochs {
        let (_, grad) = mse_and_gradient(&current, data, cols, targets)?;
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(AnfisError::NonFiniteGradient(param_name(cols, i)));
        }

        let mut step = cfg.learning_rate;
        let mut accepted = false;
        for _try in 0..=20 {
            let mut cand: Vec<f64> = params
                .iter()
                .zip(&grad)
                .map(|(p, g)| p - step * g)
                .collect();
            clamp(&mut cand);
            let cand_model = model_with_params(&current, &cand);
            let cand_mse = mse(&cand_model, data, cols, targets)?;
            if cand_mse.is_finite() && cand_mse <= current_mse {
                params = cand;
                current = cand_model;
                current_mse = cand_mse;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no usable step; record the flat epoch and keep going
            trace.push(current_mse);
            continue;
        }
        trace.push(current_mse);

        let w = cfg.early_stop_window;
        if w > 0 && trace.len() > w {
            let old = trace[trace.len() - 1 - w];
            let new = trace[trace.len() - 1];
            if old <= 0.0 || (old - new) / old < cfg.early_stop_tol {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        model: current,
        loss_trace: trace,
    })
}
