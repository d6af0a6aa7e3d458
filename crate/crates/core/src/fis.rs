//! Takagi-Sugeno fuzzy inference: Gaussian antecedents combined with a
//! product t-norm, affine consequents, weighted-average defuzzification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this total firing strength the weighted average is numerically
/// meaningless, so inference falls back to the single strongest rule.
pub const FIRING_UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Error, PartialEq)]
pub enum FisError {
    #[error("input arity mismatch: model expects {expected} inputs, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("rule {rule} has {got} antecedents, model arity is {expected}")]
    RuleArity {
        rule: usize,
        expected: usize,
        got: usize,
    },
    #[error("rule {rule} consequent needs {expected} coefficients, got {got}")]
    ConsequentLen {
        rule: usize,
        expected: usize,
        got: usize,
    },
    #[error("gaussian width must be positive, got {0}")]
    NonPositiveWidth(f64),
    #[error("model needs at least one rule")]
    NoRules,
}

/// Gaussian membership function with unit peak at `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMf {
    pub center: f64,
    pub sigma: f64,
}

impl GaussianMf {
    pub fn new(center: f64, sigma: f64) -> Result<Self, FisError> {
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(FisError::NonPositiveWidth(sigma));
        }
        Ok(Self { center, sigma })
    }

    /// exp(-(x - c)^2 / (2 sigma^2)), in (0, 1], 1 exactly at the center.
    pub fn membership(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.sigma;
        (-0.5 * z * z).exp()
    }

    /// Log membership; stays finite where `membership` underflows to zero.
    fn log_membership(&self, x: f64) -> f64 {
        let z = (x - self.center) / self.sigma;
        -0.5 * z * z
    }
}

/// One rule: a Gaussian antecedent per input and an affine consequent
/// [g0, g1, ..., gn] evaluated as g0 + g1*x1 + ... + gn*xn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub antecedents: Vec<GaussianMf>,
    pub consequent: Vec<f64>,
}

impl Rule {
    /// Product t-norm over the per-input memberships.
    pub fn firing_strength(&self, x: &[f64]) -> Result<f64, FisError> {
        if x.len() != self.antecedents.len() {
            return Err(FisError::ArityMismatch {
                expected: self.antecedents.len(),
                got: x.len(),
            });
        }
        Ok(self
            .antecedents
            .iter()
            .zip(x)
            .map(|(mf, &xi)| mf.membership(xi))
            .product())
    }

    fn log_firing_strength(&self, x: &[f64]) -> f64 {
        self.antecedents
            .iter()
            .zip(x)
            .map(|(mf, &xi)| mf.log_membership(xi))
            .sum()
    }

    /// Affine consequent value for input x.
    pub fn output(&self, x: &[f64]) -> f64 {
        self.consequent[0]
            + self
                .consequent
                .iter()
                .skip(1)
                .zip(x)
                .map(|(g, &xi)| g * xi)
                .sum::<f64>()
    }
}

/// A Takagi-Sugeno rule base over `n_inputs` inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsModel {
    pub n_inputs: usize,
    pub rules: Vec<Rule>,
}

impl TsModel {
    /// Validates rule arities, consequent lengths, and widths.
    pub fn new(n_inputs: usize, rules: Vec<Rule>) -> Result<Self, FisError> {
        if rules.is_empty() {
            return Err(FisError::NoRules);
        }
        for (j, rule) in rules.iter().enumerate() {
            if rule.antecedents.len() != n_inputs {
                return Err(FisError::RuleArity {
                    rule: j,
                    expected: n_inputs,
                    got: rule.antecedents.len(),
                });
            }
            if rule.consequent.len() != n_inputs + 1 {
                return Err(FisError::ConsequentLen {
                    rule: j,
                    expected: n_inputs + 1,
                    got: rule.consequent.len(),
                });
            }
            for mf in &rule.antecedents {
                if mf.sigma.is_nan() || mf.sigma <= 0.0 {
                    return Err(FisError::NonPositiveWidth(mf.sigma));
                }
            }
        }
        Ok(Self { n_inputs, rules })
    }

    /// Weighted-average defuzzification over all rules. When every firing
    /// strength underflows, the output falls back to the consequent of the
    /// strongest rule (strength compared in log space; lowest index wins ties).
    pub fn infer(&self, x: &[f64]) -> Result<f64, FisError> {
        if x.len() != self.n_inputs {
            return Err(FisError::ArityMismatch {
                expected: self.n_inputs,
                got: x.len(),
            });
        }
        let mut sum_w = 0.0;
        let mut sum_wf = 0.0;
        for rule in &self.rules {
            let w = rule.firing_strength(x)?;
            sum_w += w;
            sum_wf += w * rule.output(x);
        }
        if sum_w < FIRING_UNDERFLOW {
            let j = self.nearest_rule(x);
            return Ok(self.rules[j].output(x));
        }
        Ok(sum_wf / sum_w)
    }

    /// Rule with maximal firing strength for x. Strengths are compared as log
    /// products so the ordering survives where exp underflows to zero.
    pub fn nearest_rule(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_log = f64::NEG_INFINITY;
        for (j, rule) in self.rules.iter().enumerate() {
            let lw = rule.log_firing_strength(x);
            if lw > best_log {
                best_log = lw;
                best = j;
            }
        }
        best
    }
}

/// Plain weighted average sum(w*f)/sum(w); the defuzzifier core, exposed so
/// its weight-scale invariance can be exercised directly.
pub fn weighted_average(weights: &[f64], values: &[f64]) -> f64 {
    let sum_w: f64 = weights.iter().sum();
    let sum_wf: f64 = weights.iter().zip(values).map(|(w, f)| w * f).sum();
    sum_wf / sum_w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::prelude::*;
    use rand::Rng as _;
    use rand_chacha::ChaCha8Rng;

    fn mf(c: f64, s: f64) -> GaussianMf {
        GaussianMf::new(c, s).unwrap()
    }

    type RuleSpec = (Vec<(f64, f64)>, Vec<f64>);

    fn model(rules: Vec<RuleSpec>) -> TsModel {
        let n = rules[0].0.len();
        let rules = rules
            .into_iter()
            .map(|(ants, consequent)| Rule {
                antecedents: ants.into_iter().map(|(c, s)| mf(c, s)).collect(),
                consequent,
            })
            .collect();
        TsModel::new(n, rules).unwrap()
    }

    #[test]
    fn membership_is_one_at_center() {
        assert_eq!(mf(3.0, 0.7).membership(3.0), 1.0);
    }

    #[test]
    fn membership_one_sigma_away() {
        let got = mf(1.0, 2.0).membership(3.0);
        assert!((got - (-0.5f64).exp()).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn zero_width_is_rejected() {
        assert_eq!(GaussianMf::new(0.0, 0.0), Err(FisError::NonPositiveWidth(0.0)));
        assert!(GaussianMf::new(0.0, -1.0).is_err());
    }

    #[test]
    fn firing_strength_is_product_of_memberships() {
        let rule = Rule {
            antecedents: vec![mf(0.0, 1.0), mf(1.0, 1.0)],
            consequent: vec![0.0, 0.0, 0.0],
        };
        // first input at center (1.0), second one sigma away (exp(-1/2))
        let w = rule.firing_strength(&[0.0, 2.0]).unwrap();
        assert!((w - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(rule.firing_strength(&[0.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn firing_strength_checks_arity() {
        let rule = Rule {
            antecedents: vec![mf(0.0, 1.0)],
            consequent: vec![0.0, 0.0],
        };
        assert_eq!(
            rule.firing_strength(&[0.0, 1.0]),
            Err(FisError::ArityMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn model_validation_catches_bad_shapes() {
        assert_eq!(TsModel::new(1, vec![]), Err(FisError::NoRules));
        let short_consequent = Rule {
            antecedents: vec![mf(0.0, 1.0)],
            consequent: vec![1.0],
        };
        assert!(matches!(
            TsModel::new(1, vec![short_consequent]),
            Err(FisError::ConsequentLen { .. })
        ));
        let wrong_arity = Rule {
            antecedents: vec![mf(0.0, 1.0)],
            consequent: vec![1.0, 2.0, 3.0],
        };
        assert!(matches!(
            TsModel::new(2, vec![wrong_arity]),
            Err(FisError::RuleArity { .. })
        ));
    }

    #[test]
    fn single_rule_output_is_its_consequent() {
        let m = model(vec![(vec![(5.0, 0.3)], vec![2.0, 3.0])]);
        // weights cancel: output is 2 + 3x no matter how weakly the rule fires
        let got = m.infer(&[1.0]).unwrap();
        assert!((got - 5.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn two_equally_fired_rules_average() {
        let m = model(vec![
            (vec![(0.0, 1.0)], vec![0.0, 0.0]),
            (vec![(0.0, 1.0)], vec![10.0, 0.0]),
        ]);
        let got = m.infer(&[0.7]).unwrap();
        assert!((got - 5.0).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn infer_checks_arity() {
        let m = model(vec![(vec![(0.0, 1.0)], vec![0.0, 0.0])]);
        assert_eq!(
            m.infer(&[0.0, 1.0]),
            Err(FisError::ArityMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn infer_matches_bruteforce_on_random_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n_inputs = rng.gen_range(1..=3);
            let n_rules = rng.gen_range(1..=3);
            let rules: Vec<Rule> = (0..n_rules)
                .map(|_| Rule {
                    antecedents: (0..n_inputs)
                        .map(|_| mf(rng.gen_range(-2.0..2.0), rng.gen_range(0.3..2.0)))
                        .collect(),
                    consequent: (0..=n_inputs).map(|_| rng.gen_range(-3.0..3.0)).collect(),
                })
                .collect();
            let m = TsModel::new(n_inputs, rules).unwrap();
            let x: Vec<f64> = (0..n_inputs).map(|_| rng.gen_range(-3.0..3.0)).collect();

            // independent recomputation straight from the defining formula
            let mut num = 0.0;
            let mut den = 0.0;
            for rule in &m.rules {
                let mut w = 1.0;
                for (mf, &xi) in rule.antecedents.iter().zip(&x) {
                    w *= (-(xi - mf.center).powi(2) / (2.0 * mf.sigma * mf.sigma)).exp();
                }
                let mut f = rule.consequent[0];
                for (i, &xi) in x.iter().enumerate() {
                    f += rule.consequent[i + 1] * xi;
                }
                num += w * f;
                den += w;
            }
            let want = num / den;
            let got = m.infer(&x).unwrap();
            assert!((got - want).abs() <= 1e-12, "got {got}, want {want}");
        }
    }

    #[test]
    fn underflow_falls_back_to_nearest_rule() {
        let m = model(vec![
            (vec![(0.0, 0.1)], vec![1.0, 0.0]),
            (vec![(10.0, 0.1)], vec![2.0, 5.0]),
        ]);
        // both memberships underflow to zero; rule 1 is nearer
        let x = 1.0e6;
        let got = m.infer(&[x]).unwrap();
        assert_eq!(got, 2.0 + 5.0 * x);
    }

    #[test]
    fn underflow_tie_takes_lowest_index() {
        let m = model(vec![
            (vec![(-500.0, 0.1)], vec![7.0, 0.0]),
            (vec![(500.0, 0.1)], vec![9.0, 0.0]),
        ]);
        // x equidistant from both centers: identical log strengths, rule 0 wins
        assert_eq!(m.infer(&[0.0]).unwrap(), 7.0);
    }

    #[test]
    fn moderately_far_input_still_gets_nearest_consequent() {
        let m = model(vec![
            (vec![(0.0, 1.0)], vec![0.0, 1.0]),
            (vec![(3.0, 1.0)], vec![100.0, 0.0]),
        ]);
        // 40 sigma out: exp(-800) underflows, nearest rule is the second
        let got = m.infer(&[43.0]).unwrap();
        assert_eq!(got, 100.0);
    }

    #[test]
    fn weighted_average_ignores_power_of_two_weight_scaling() {
        let w = [0.3, 1.7, 0.004];
        let f = [2.0, -4.0, 11.0];
        let base = weighted_average(&w, &f);
        for lambda in [0.5, 2.0, 4.0, 1024.0] {
            let scaled: Vec<f64> = w.iter().map(|v| v * lambda).collect();
            assert_eq!(weighted_average(&scaled, &f), base);
        }
        // non-dyadic scale agrees to rounding error
        let scaled: Vec<f64> = w.iter().map(|v| v * 3.0).collect();
        assert!((weighted_average(&scaled, &f) - base).abs() < 1e-12);
    }

    #[test]
    fn infer_is_locally_continuous() {
        let m = model(vec![
            (vec![(0.0, 1.0), (1.0, 0.8)], vec![1.0, 2.0, -1.0]),
            (vec![(2.0, 1.5), (-1.0, 1.2)], vec![-0.5, 0.3, 0.9]),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let y0 = m.infer(&x).unwrap();
            let y1 = m.infer(&[x[0] + 1e-8, x[1]]).unwrap();
            assert!((y1 - y0).abs() < 1e-5, "jump at {x:?}: {y0} -> {y1}");
        }
    }

    proptest! {
        #[test]
        fn membership_is_symmetric_about_center(c in -10.0f64..10.0, s in 0.1f64..5.0, d in 0.0f64..20.0) {
            // c +- d rounds, so the two offsets differ by up to half an ulp
            // of c; compare with a relative tolerance instead of bitwise.
            let g = mf(c, s);
            let (lo, hi) = (g.membership(c - d), g.membership(c + d));
            prop_assert!((hi - lo).abs() <= 1e-9 * hi.max(lo).max(f64::MIN_POSITIVE));
        }

        #[test]
        fn membership_decreases_with_distance(c in -5.0f64..5.0, s in 0.1f64..3.0, d in 0.0f64..5.0) {
            let g = mf(c, s);
            prop_assert!(g.membership(c + d) >= g.membership(c + d + 0.5));
        }

        #[test]
        fn inference_stays_inside_consequent_hull(
            x in -4.0f64..4.0,
            c1 in -3.0f64..3.0,
            c2 in -3.0f64..3.0,
            g1 in -5.0f64..5.0,
            g2 in -5.0f64..5.0,
        ) {
            let m = model(vec![
                (vec![(c1, 1.0)], vec![g1, 0.0]),
                (vec![(c2, 1.0)], vec![g2, 0.0]),
            ]);
            let y = m.infer(&[x]).unwrap();
            let lo = g1.min(g2) - 1e-12;
            let hi = g1.max(g2) + 1e-12;
            prop_assert!(y >= lo && y <= hi, "{y} outside [{lo}, {hi}]");
        }
    }
}
