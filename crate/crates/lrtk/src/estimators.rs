//! Likelihood-ratio estimators over discrete elements.
//!
//! All four estimators score an element `x` from its frequency `f_de` in a
//! denominator sample of size `n_de` and its frequency `f_nu` in a numerator
//! sample of size `n_nu`:
//!
//! * `Mle` — the plain ratio of relative frequencies,
//!   `(f_nu/n_nu) / (f_de/n_de)`.
//! * `Threshold` — the plain ratio, but 0 unless `f_nu > theta` (strict).
//! * `L2` — `(f_nu/n_nu) / (f_de/n_de + lambda)`, the ridge-regularized
//!   one-variable solution.
//! * `L1` — `(max(f_nu - theta, 0)/n_nu) / (f_de/n_de)`, the nonnegative
//!   lasso solution: frequencies at or below the threshold vanish, and
//!   everything above is shifted down by it. Its regularizer weight and the
//!   count threshold are two views of the same quantity,
//!   `lambda = theta / n_nu`.
//!
//! Division by a zero denominator never occurs: estimators return 0 for
//! elements never seen in the denominator sample (and `L2` does so only when
//! `lambda` is also 0), so every estimate is finite and nonnegative.
//!
//! [`OptimizationInstance`] exposes the diagonal quadratic program that the
//! `L1` closed form solves, and [`oracle_minimize`] minimizes it numerically
//! without using the closed form, as an independent cross-check.

use serde::{Deserialize, Serialize};

use crate::corpus::Bigram;
use crate::counts::CountTable;
use crate::eval::{ScoredEntry, ScoredList};
use crate::{Error, Result};

/// The two observed frequencies of one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrequencyPair {
    pub f_de: u64,
    pub f_nu: u64,
}

impl FrequencyPair {
    #[must_use]
    pub fn new(f_de: u64, f_nu: u64) -> FrequencyPair {
        FrequencyPair { f_de, f_nu }
    }
}

/// Sample sizes of the denominator and numerator samples; both positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Totals {
    n_de: u64,
    n_nu: u64,
}

impl Totals {
    pub fn new(n_de: u64, n_nu: u64) -> Result<Totals> {
        if n_de == 0 {
            return Err(Error::Config("denominator sample is empty".into()));
        }
        if n_nu == 0 {
            return Err(Error::Config("numerator sample is empty".into()));
        }
        Ok(Totals { n_de, n_nu })
    }

    /// Totals of a count table (which are unaffected by pruning).
    pub fn from_table(table: &CountTable) -> Result<Totals> {
        Totals::new(table.de.total(), table.nu.total())
    }

    #[must_use]
    pub fn n_de(&self) -> u64 {
        self.n_de
    }

    #[must_use]
    pub fn n_nu(&self) -> u64 {
        self.n_nu
    }
}

/// An estimator kind together with its hyperparameter, if it has one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EstimatorSpec {
    Mle,
    Threshold { theta: u64 },
    L2 { lambda: f64 },
    L1 { theta: u64 },
}

impl EstimatorSpec {
    /// The numerator-count threshold below or at which this estimator is
    /// certain to return 0 — the most aggressive pruning it tolerates.
    #[must_use]
    pub fn nu_threshold(&self) -> u64 {
        match self {
            EstimatorSpec::Mle | EstimatorSpec::L2 { .. } => 0,
            EstimatorSpec::Threshold { theta } | EstimatorSpec::L1 { theta } => *theta,
        }
    }

    #[must_use]
    pub fn kind_name(&self) -> &'static str {
        match self {
            EstimatorSpec::Mle => "mle",
            EstimatorSpec::Threshold { .. } => "threshold",
            EstimatorSpec::L2 { .. } => "l2",
            EstimatorSpec::L1 { .. } => "l1",
        }
    }

    /// The hyperparameter rendered for reports, `-` if there is none.
    #[must_use]
    pub fn param_display(&self) -> String {
        match self {
            EstimatorSpec::Mle => "-".into(),
            EstimatorSpec::Threshold { theta } | EstimatorSpec::L1 { theta } => theta.to_string(),
            EstimatorSpec::L2 { lambda } => lambda.to_string(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let EstimatorSpec::L2 { lambda } = self {
            if !(lambda.is_finite() && *lambda >= 0.0) {
                return Err(Error::Config(
                    "lambda must be a finite nonnegative number".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Score one element. Always finite and nonnegative for positive totals.
#[must_use]
pub fn estimate(spec: &EstimatorSpec, pair: FrequencyPair, totals: Totals) -> f64 {
    let p_de = pair.f_de as f64 / totals.n_de as f64;
    let p_nu = pair.f_nu as f64 / totals.n_nu as f64;
    match spec {
        EstimatorSpec::Mle => {
            if pair.f_de == 0 || pair.f_nu == 0 {
                0.0
            } else {
                p_nu / p_de
            }
        }
        EstimatorSpec::Threshold { theta } => {
            if pair.f_nu > *theta {
                estimate(&EstimatorSpec::Mle, pair, totals)
            } else {
                0.0
            }
        }
        EstimatorSpec::L2 { lambda } => {
            let denom = p_de + lambda;
            if denom == 0.0 {
                0.0
            } else {
                p_nu / denom
            }
        }
        EstimatorSpec::L1 { theta } => {
            if pair.f_de == 0 {
                0.0
            } else {
                (pair.f_nu.saturating_sub(*theta) as f64 / totals.n_nu as f64) / p_de
            }
        }
    }
}

/// Score every element of the evaluation set against the table.
///
/// Elements absent from a side read as frequency 0 there. Fails if the
/// table was pruned more aggressively than `spec` tolerates: counts the
/// estimator would need are then gone.
pub fn estimate_batch(
    table: &CountTable,
    spec: &EstimatorSpec,
    elements: &[Bigram],
) -> Result<ScoredList> {
    spec.validate()?;
    if let Some(pruned) = table.prune_threshold() {
        if pruned > spec.nu_threshold() {
            return Err(Error::PrunedBeyondSpec {
                pruned,
                required: spec.nu_threshold(),
            });
        }
    }
    let totals = Totals::from_table(table)?;
    let entries = elements
        .iter()
        .map(|element| {
            let pair = FrequencyPair::new(table.f_de(element), table.f_nu(element));
            ScoredEntry {
                element: element.clone(),
                estimate: estimate(spec, pair, totals),
                f_nu: pair.f_nu,
            }
        })
        .collect();
    Ok(ScoredList { entries })
}

/// Hard cap on the element count [`oracle_minimize`] accepts; the oracle is
/// a brute-force verification tool, not a production path.
pub const MAX_ORACLE_ELEMENTS: usize = 100;

/// The diagonal quadratic program behind the `L1` estimator:
/// minimize `1/2 * sum(de_rel[l] * beta[l]^2) - sum(nu_rel[l] * beta[l])
/// + lambda * sum(beta[l])` subject to `beta[l] >= 0`.
///
/// `de_rel_freq[l]` is the element's relative frequency in the denominator
/// sample (the diagonal of the quadratic term) and `nu_rel_freq[l]` its
/// relative frequency in the numerator sample (the linear term). All
/// denominator frequencies must be positive — elements never observed there
/// make the program unbounded.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationInstance {
    pub elements: Vec<Bigram>,
    pub de_rel_freq: Vec<f64>,
    pub nu_rel_freq: Vec<f64>,
    pub lambda: f64,
}

impl OptimizationInstance {
    pub fn new(
        elements: Vec<Bigram>,
        de_rel_freq: Vec<f64>,
        nu_rel_freq: Vec<f64>,
        lambda: f64,
    ) -> Result<OptimizationInstance> {
        if elements.len() != de_rel_freq.len() || elements.len() != nu_rel_freq.len() {
            return Err(Error::Config(
                "instance vectors must have one entry per element".into(),
            ));
        }
        if elements.len() > MAX_ORACLE_ELEMENTS {
            return Err(Error::InstanceTooLarge {
                got: elements.len(),
                max: MAX_ORACLE_ELEMENTS,
            });
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::Config("lambda must be finite and nonnegative".into()));
        }
        if de_rel_freq.iter().any(|&a| !(a.is_finite() && a > 0.0)) {
            return Err(Error::Config(
                "denominator relative frequencies must be positive".into(),
            ));
        }
        if nu_rel_freq.iter().any(|&b| !(b.is_finite() && b >= 0.0)) {
            return Err(Error::Config(
                "numerator relative frequencies must be nonnegative".into(),
            ));
        }
        Ok(OptimizationInstance {
            elements,
            de_rel_freq,
            nu_rel_freq,
            lambda,
        })
    }

    /// Assemble the instance for every element of the table (union of both
    /// sides, in lexicographic order).
    pub fn from_table(table: &CountTable, lambda: f64) -> Result<OptimizationInstance> {
        let totals = Totals::from_table(table)?;
        let mut elements: Vec<Bigram> = table
            .de
            .entries()
            .map(|(k, _)| k.clone())
            .chain(table.nu.entries().map(|(k, _)| k.clone()))
            .collect();
        elements.sort();
        elements.dedup();
        if elements.len() > MAX_ORACLE_ELEMENTS {
            return Err(Error::InstanceTooLarge {
                got: elements.len(),
                max: MAX_ORACLE_ELEMENTS,
            });
        }
        let mut de_rel = Vec::with_capacity(elements.len());
        let mut nu_rel = Vec::with_capacity(elements.len());
        for element in &elements {
            let f_de = table.f_de(element);
            if f_de == 0 {
                return Err(Error::Config(format!(
                    "element `{element}` was never observed in the denominator sample; \
                     its coefficient is unbounded"
                )));
            }
            de_rel.push(f_de as f64 / totals.n_de() as f64);
            nu_rel.push(table.f_nu(element) as f64 / totals.n_nu() as f64);
        }
        OptimizationInstance::new(elements, de_rel, nu_rel, lambda)
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    /// The objective value at `beta`.
    #[must_use]
    pub fn objective(&self, beta: &[f64]) -> f64 {
        let mut value = 0.0;
        for ((&a, &b), &beta_l) in self.de_rel_freq.iter().zip(&self.nu_rel_freq).zip(beta) {
            value += 0.5 * a * beta_l * beta_l - b * beta_l + self.lambda * beta_l;
        }
        value
    }

    /// The closed-form minimizer, `max(nu_rel - lambda, 0) / de_rel` per
    /// coordinate (negative solutions rounded up to the constraint).
    #[must_use]
    pub fn closed_form(&self) -> Vec<f64> {
        self.de_rel_freq
            .iter()
            .zip(&self.nu_rel_freq)
            .map(|(&a, &b)| (b - self.lambda).max(0.0) / a)
            .collect()
    }
}

/// Minimize the instance numerically, one coordinate at a time, by
/// golden-section search over a bracketing interval.
///
/// The objective is separable, so exact per-coordinate minimization is exact
/// global minimization. This deliberately avoids the closed form so the two
/// can be compared as independent routes to the same answer.
#[must_use]
pub fn oracle_minimize(instance: &OptimizationInstance) -> Vec<f64> {
    (0..instance.dim())
        .map(|l| {
            let a = instance.de_rel_freq[l];
            let b = instance.nu_rel_freq[l];
            let lambda = instance.lambda;
            let g = |beta: f64| 0.5 * a * beta * beta - b * beta + lambda * beta;
            // The unconstrained minimizer is (b - lambda)/a <= b/a, so
            // [0, b/a + 1] brackets the constrained minimizer.
            golden_section_min(g, 0.0, b / a + 1.0)
        })
        .collect()
}

/// Minimize a unimodal function on `[lo_bound, hi_bound]` without
/// derivatives: golden-section search narrows the bracket, then one
/// parabolic-interpolation step polishes the answer. Golden section alone
/// stalls around sqrt(machine-epsilon) relative accuracy because the
/// objective is flat to rounding noise near its minimum; fitting a parabola
/// through three points sampled well outside that noise region recovers the
/// remaining digits on smooth objectives. The polished vertex is clamped to
/// the bounds, which lands boundary-constrained minima exactly on the bound.
fn golden_section_min(g: impl Fn(f64) -> f64, lo_bound: f64, hi_bound: f64) -> f64 {
    let inv_phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (lo_bound, hi_bound);
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut gc = g(c);
    let mut gd = g(d);
    for _ in 0..500 {
        if hi - lo <= 1e-10 * (1.0 + hi.abs()) {
            break;
        }
        if gc <= gd {
            hi = d;
            d = c;
            gd = gc;
            c = hi - inv_phi * (hi - lo);
            gc = g(c);
        } else {
            lo = c;
            c = d;
            gc = gd;
            d = lo + inv_phi * (hi - lo);
            gd = g(d);
        }
    }
    let rough = 0.5 * (lo + hi);
    let spacing = 1e-3 * (1.0 + rough.abs());
    if lo_bound + spacing > hi_bound - spacing {
        return rough;
    }
    let center = rough.clamp(lo_bound + spacing, hi_bound - spacing);
    let (below, at, above) = (g(center - spacing), g(center), g(center + spacing));
    let curvature = below - 2.0 * at + above;
    if curvature > 0.0 {
        let vertex = center - 0.5 * spacing * (above - below) / curvature;
        vertex.clamp(lo_bound, hi_bound)
    } else {
        rough
    }
}
