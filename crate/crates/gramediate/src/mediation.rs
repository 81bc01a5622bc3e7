//! Model-based causal mediation analysis on categorical data:
//! proportional-odds ordinal regression for the mediator and outcome models,
//! probability-scale ACME/ADE/total effects with the mediator integrated out
//! analytically, and nonparametric bootstrap percentile intervals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::ObservationRecords;

const GRAD_TOL: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 200;
const STEP_HALVINGS: usize = 30;

/// How a predictor enters a regression design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coding {
    /// The level index as a single numeric column.
    Numeric,
    /// One indicator column per non-baseline level.
    Categorical,
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictorSpec {
    pub variable: String,
    pub coding: Coding,
}

impl PredictorSpec {
    pub fn numeric(variable: impl Into<String>) -> Self {
        PredictorSpec {
            variable: variable.into(),
            coding: Coding::Numeric,
        }
    }

    pub fn categorical(variable: impl Into<String>) -> Self {
        PredictorSpec {
            variable: variable.into(),
            coding: Coding::Categorical,
        }
    }

    fn expand(&self, level: usize, n_levels: usize, out: &mut Vec<f64>) {
        match self.coding {
            Coding::Numeric => out.push(level as f64),
            Coding::Categorical => {
                for l in 1..n_levels {
                    out.push(if level == l { 1.0 } else { 0.0 });
                }
            }
        }
    }
}

/// A fitted proportional-odds model: Pr(Y <= j | x) = logistic(theta_j - x·beta)
/// with strictly increasing cutpoints.
#[derive(Debug, Clone, Serialize)]
pub struct PropOddsModel {
    pub outcome: String,
    pub n_levels: usize,
    pub predictors: Vec<PredictorSpec>,
    pub columns: Vec<String>,
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub loglik: f64,
    pub iterations: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Category probabilities at covariate vector `x` (expanded columns):
/// p_j = logistic(theta_j - x·beta) - logistic(theta_{j-1} - x·beta).
pub fn category_probs(model: &PropOddsModel, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), model.beta.len());
    let eta: f64 = x.iter().zip(&model.beta).map(|(a, b)| a * b).sum();
    let mut probs = Vec::with_capacity(model.n_levels);
    let mut prev = 0.0;
    for j in 0..model.n_levels - 1 {
        let g = sigmoid(model.theta[j] - eta);
        probs.push((g - prev).max(0.0));
        prev = g;
    }
    probs.push((1.0 - prev).max(0.0));
    probs
}

/// One distinct (response, design-row) pattern with a mutable weight slot.
struct Pattern {
    y: usize,
    x: Vec<f64>,
}

/// Damped Newton maximum likelihood for the proportional-odds model on
/// weighted patterns. Fails on divergence, separation (singular step), or an
/// empty response category.
fn fit_weighted(
    n_levels: usize,
    patterns: &[Pattern],
    weights: &[f64],
) -> Result<(Vec<f64>, Vec<f64>, f64, usize)> {
    let j1 = n_levels - 1;
    let p = patterns.first().map(|pt| pt.x.len()).unwrap_or(0);
    let dim = j1 + p;

    let mut cat_w = vec![0.0; n_levels];
    let mut total_w = 0.0;
    for (pt, &w) in patterns.iter().zip(weights) {
        cat_w[pt.y] += w;
        total_w += w;
    }
    if total_w <= 0.0 {
        return Err(Error::Regression("no observations".into()));
    }
    if cat_w.iter().any(|&w| w <= 0.0) {
        return Err(Error::Regression("empty outcome category".into()));
    }
    if cat_w.iter().filter(|&&w| w > 0.0).count() < 2 {
        return Err(Error::Regression("constant outcome".into()));
    }

    // start: beta = 0, cutpoints at the empirical cumulative logits
    let mut v = vec![0.0; dim];
    let mut cum = 0.0;
    for j in 0..j1 {
        cum += cat_w[j];
        let q = (cum / total_w).clamp(1e-6, 1.0 - 1e-6);
        v[j] = (q / (1.0 - q)).ln();
    }

    let loglik = |v: &[f64]| -> f64 {
        let (theta, beta) = v.split_at(j1);
        let mut ll = 0.0;
        for (pt, &w) in patterns.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let eta: f64 = pt.x.iter().zip(beta).map(|(a, b)| a * b).sum();
            let hi = if pt.y < j1 {
                sigmoid(theta[pt.y] - eta)
            } else {
                1.0
            };
            let lo = if pt.y > 0 {
                sigmoid(theta[pt.y - 1] - eta)
            } else {
                0.0
            };
            ll += w * (hi - lo).max(1e-300).ln();
        }
        ll
    };

    let mut ll = loglik(&v);
    let mut grad = vec![0.0; dim];
    let mut hess = vec![0.0; dim * dim];

    for iter in 1..=NEWTON_MAX_ITER {
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.iter_mut().for_each(|h| *h = 0.0);
        let (theta, beta) = v.split_at(j1);

        for (pt, &w) in patterns.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let k = pt.y;
            let eta: f64 = pt.x.iter().zip(beta).map(|(a, b)| a * b).sum();
            let g_hi = if k < j1 { sigmoid(theta[k] - eta) } else { 1.0 };
            let g_lo = if k > 0 {
                sigmoid(theta[k - 1] - eta)
            } else {
                0.0
            };
            let prob = (g_hi - g_lo).max(1e-300);

            // first and second derivatives of the two logistic terms
            let phi_hi = if k < j1 { g_hi * (1.0 - g_hi) } else { 0.0 };
            let phi_lo = if k > 0 { g_lo * (1.0 - g_lo) } else { 0.0 };
            let psi_hi = if k < j1 {
                phi_hi * (1.0 - 2.0 * g_hi)
            } else {
                0.0
            };
            let psi_lo = if k > 0 {
                phi_lo * (1.0 - 2.0 * g_lo)
            } else {
                0.0
            };

            // partials of prob wrt (theta_k, theta_{k-1}, eta)
            let d_hi = phi_hi;
            let d_lo = -phi_lo;
            let d_eta = -phi_hi + phi_lo;
            // second partials
            let dd_hi = psi_hi;
            let dd_lo = -psi_lo;
            let dd_eta = psi_hi - psi_lo;
            let dd_hi_eta = -psi_hi;
            let dd_lo_eta = psi_lo;

            let gh = d_hi / prob;
            let gl = d_lo / prob;
            let ge = d_eta / prob;

            let add = |hess: &mut [f64], a: usize, b: usize, val: f64| {
                hess[a * dim + b] += val;
                if a != b {
                    hess[b * dim + a] += val;
                }
            };

            if k < j1 {
                grad[k] += w * gh;
                add(&mut hess, k, k, w * (dd_hi / prob - gh * gh));
            }
            if k > 0 {
                grad[k - 1] += w * gl;
                add(&mut hess, k - 1, k - 1, w * (dd_lo / prob - gl * gl));
            }
            if k < j1 && k > 0 {
                add(&mut hess, k, k - 1, w * (-gh * gl));
            }
            for (m, &xm) in pt.x.iter().enumerate() {
                grad[j1 + m] += w * ge * xm;
                if k < j1 {
                    add(&mut hess, k, j1 + m, w * xm * (dd_hi_eta / prob - gh * ge));
                }
                if k > 0 {
                    add(
                        &mut hess,
                        k - 1,
                        j1 + m,
                        w * xm * (dd_lo_eta / prob - gl * ge),
                    );
                }
                for (l, &xl) in pt.x.iter().enumerate().take(m + 1) {
                    let val = w * xm * xl * (dd_eta / prob - ge * ge);
                    hess[(j1 + m) * dim + (j1 + l)] += val;
                    if m != l {
                        hess[(j1 + l) * dim + (j1 + m)] += val;
                    }
                }
            }
        }

        let gmax = grad.iter().fold(0.0f64, |a, &g| a.max(g.abs()));
        if gmax < GRAD_TOL {
            let theta = v[..j1].to_vec();
            let beta = v[j1..].to_vec();
            return Ok((theta, beta, ll, iter));
        }

        let step = solve_symmetric(&hess, &grad, dim)
            .ok_or_else(|| Error::Regression("singular information matrix (separation?)".into()))?;

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=STEP_HALVINGS {
            let cand: Vec<f64> = v.iter().zip(&step).map(|(a, d)| a - lambda * d).collect();
            let ordered = cand[..j1].windows(2).all(|w| w[0] < w[1]);
            if ordered {
                let cll = loglik(&cand);
                if cll >= ll - 1e-12 {
                    v = cand;
                    ll = cll;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Regression(
                "log-likelihood failed to increase (divergence)".into(),
            ));
        }
    }
    Err(Error::Regression(format!(
        "Newton did not reach gradient tolerance in {NEWTON_MAX_ITER} iterations"
    )))
}

/// Gaussian elimination with partial pivoting; None when the matrix is
/// numerically singular.
fn solve_symmetric(matrix: &[f64], rhs: &[f64], dim: usize) -> Option<Vec<f64>> {
    let mut a = matrix.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..dim {
        let (pivot_row, pivot) = (col..dim)
            .map(|r| (r, a[r * dim + col]))
            .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())?;
        if pivot.abs() < 1e-12 {
            return None;
        }
        if pivot_row != col {
            for c in 0..dim {
                a.swap(col * dim + c, pivot_row * dim + c);
            }
            b.swap(col, pivot_row);
        }
        for r in col + 1..dim {
            let f = a[r * dim + col] / a[col * dim + col];
            if f == 0.0 {
                continue;
            }
            for c in col..dim {
                a[r * dim + c] -= f * a[col * dim + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; dim];
    for r in (0..dim).rev() {
        let mut acc = b[r];
        for c in r + 1..dim {
            acc -= a[r * dim + c] * x[c];
        }
        x[r] = acc / a[r * dim + r];
    }
    Some(x)
}

/// Fits a proportional-odds regression of `outcome` on `predictors` by damped
/// Newton iteration; identical observation patterns are collapsed to weighted
/// rows first.
pub fn fit_prop_odds(
    records: &ObservationRecords,
    outcome: &str,
    predictors: &[PredictorSpec],
) -> Result<PropOddsModel> {
    let schema = records.schema();
    let y_idx = schema
        .index_of(outcome)
        .ok_or_else(|| Error::Regression(format!("unknown outcome variable '{outcome}'")))?;
    let mut pred_idx = Vec::with_capacity(predictors.len());
    for spec in predictors {
        let i = schema.index_of(&spec.variable).ok_or_else(|| {
            Error::Regression(format!("unknown predictor variable '{}'", spec.variable))
        })?;
        if i == y_idx {
            return Err(Error::Regression(
                "outcome cannot be its own predictor".into(),
            ));
        }
        pred_idx.push(i);
    }

    // collapse to weighted patterns keyed by the involved level tuple
    let mut weights_by_key: std::collections::BTreeMap<Vec<usize>, f64> =
        std::collections::BTreeMap::new();
    for row in records.rows() {
        let mut key = Vec::with_capacity(1 + pred_idx.len());
        key.push(row[y_idx]);
        key.extend(pred_idx.iter().map(|&i| row[i]));
        *weights_by_key.entry(key).or_insert(0.0) += 1.0;
    }
    let mut patterns = Vec::with_capacity(weights_by_key.len());
    let mut weights = Vec::with_capacity(weights_by_key.len());
    for (key, w) in weights_by_key {
        let mut x = Vec::new();
        for ((spec, &i), &level) in predictors.iter().zip(&pred_idx).zip(&key[1..]) {
            spec.expand(level, schema.var(i).level_count(), &mut x);
        }
        patterns.push(Pattern { y: key[0], x });
        weights.push(w);
    }

    let n_levels = schema.var(y_idx).level_count();
    let (theta, beta, loglik, iterations) = fit_weighted(n_levels, &patterns, &weights)?;

    let mut columns = Vec::new();
    for (spec, &i) in predictors.iter().zip(&pred_idx) {
        match spec.coding {
            Coding::Numeric => columns.push(spec.variable.clone()),
            Coding::Categorical => {
                for l in 1..schema.var(i).level_count() {
                    columns.push(format!("{}={}", spec.variable, schema.var(i).levels[l]));
                }
            }
        }
    }

    Ok(PropOddsModel {
        outcome: outcome.to_string(),
        n_levels,
        predictors: predictors.to_vec(),
        columns,
        beta,
        theta,
        loglik,
        iterations,
    })
}

/// Point estimates of the probability-scale mediation effects.
#[derive(Debug, Clone, Serialize)]
pub struct PointEffects {
    pub categories: Vec<String>,
    pub acme_control: Vec<f64>,
    pub acme_treated: Vec<f64>,
    pub ade_control: Vec<f64>,
    pub ade_treated: Vec<f64>,
    pub total: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EffectCell {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub pvalue: f64,
}

/// Full mediation report: point estimates plus bootstrap percentile intervals
/// and two-sided sign-test p-values, per outcome category and treatment arm.
#[derive(Debug, Clone, Serialize)]
pub struct MediationEstimate {
    pub treatment: String,
    pub mediator: String,
    pub outcome: String,
    pub categories: Vec<String>,
    pub acme_control: Vec<EffectCell>,
    pub acme_treated: Vec<EffectCell>,
    pub ade_control: Vec<EffectCell>,
    pub ade_treated: Vec<EffectCell>,
    pub total: Vec<EffectCell>,
    pub n_boot: usize,
    pub seed: u64,
    /// Bootstrap draws discarded because a refit failed to converge.
    pub discarded_draws: usize,
}

#[derive(Debug, Clone)]
pub struct MediationOptions {
    pub n_boot: usize,
    pub seed: u64,
    /// How the mediator enters the outcome model.
    pub mediator_coding: Coding,
    /// How the extra covariates enter both models.
    pub covariate_coding: Coding,
}

impl Default for MediationOptions {
    fn default() -> Self {
        MediationOptions {
            n_boot: 2500,
            seed: 20240101,
            mediator_coding: Coding::Categorical,
            covariate_coding: Coding::Numeric,
        }
    }
}

/// Shared scaffolding for the point estimate and every bootstrap refit:
/// the joint cells, the two models' pattern tables, and the maps from joint
/// cell to pattern row.
struct MediationDesign {
    categories: Vec<String>,
    j_m: usize,
    j_y: usize,
    cov_levels: Vec<usize>,
    mediator_coding: Coding,
    covariate_coding: Coding,
    /// joint cells as (mediator, outcome, treatment, cov...) level tuples
    joint_weights: Vec<f64>,
    med_patterns: Vec<Pattern>,
    med_map: Vec<usize>,
    out_patterns: Vec<Pattern>,
    out_map: Vec<usize>,
    /// distinct covariate tuples and the joint->cov map
    cov_rows: Vec<Vec<usize>>,
    cov_map: Vec<usize>,
    n: f64,
}

impl MediationDesign {
    fn build(
        records: &ObservationRecords,
        treatment: &str,
        mediator: &str,
        outcome: &str,
        covariates: &[&str],
        opts: &MediationOptions,
    ) -> Result<Self> {
        let schema = records.schema();
        let t_idx = schema
            .index_of(treatment)
            .ok_or_else(|| Error::Mediation(format!("unknown treatment '{treatment}'")))?;
        let m_idx = schema
            .index_of(mediator)
            .ok_or_else(|| Error::Mediation(format!("unknown mediator '{mediator}'")))?;
        let y_idx = schema
            .index_of(outcome)
            .ok_or_else(|| Error::Mediation(format!("unknown outcome '{outcome}'")))?;
        let mut cov_idx = Vec::new();
        for c in covariates {
            let i = schema
                .index_of(c)
                .ok_or_else(|| Error::Mediation(format!("unknown covariate '{c}'")))?;
            cov_idx.push(i);
        }
        let mut involved = vec![t_idx, m_idx, y_idx];
        involved.extend(&cov_idx);
        involved.sort_unstable();
        involved.dedup();
        if involved.len() != 3 + cov_idx.len() {
            return Err(Error::Mediation(
                "treatment, mediator, outcome, and covariates must be distinct".into(),
            ));
        }
        if schema.var(t_idx).level_count() != 2 {
            return Err(Error::Mediation("treatment must be binary".into()));
        }
        if records.is_empty() {
            return Err(Error::Mediation("no observations".into()));
        }

        let j_m = schema.var(m_idx).level_count();
        let j_y = schema.var(y_idx).level_count();
        let cov_levels: Vec<usize> = cov_idx
            .iter()
            .map(|&i| schema.var(i).level_count())
            .collect();

        // joint cells keyed by (m, y, t, cov...)
        let mut joint: std::collections::BTreeMap<Vec<usize>, f64> =
            std::collections::BTreeMap::new();
        for row in records.rows() {
            let mut key = vec![row[m_idx], row[y_idx], row[t_idx]];
            key.extend(cov_idx.iter().map(|&i| row[i]));
            *joint.entry(key).or_insert(0.0) += 1.0;
        }
        let joint_cells: Vec<Vec<usize>> = joint.keys().cloned().collect();
        let joint_weights: Vec<f64> = joint.values().copied().collect();

        let med_spec = PredictorSpec::numeric(treatment);
        let cov_specs: Vec<PredictorSpec> = covariates
            .iter()
            .map(|c| PredictorSpec {
                variable: c.to_string(),
                coding: opts.covariate_coding,
            })
            .collect();

        // mediator model patterns: response m, design (t, cov...)
        let mut med_index: std::collections::BTreeMap<Vec<usize>, usize> =
            std::collections::BTreeMap::new();
        let mut med_patterns = Vec::new();
        let mut med_map = Vec::with_capacity(joint_cells.len());
        // outcome model patterns: response y, design (m, t, cov...)
        let mut out_index: std::collections::BTreeMap<Vec<usize>, usize> =
            std::collections::BTreeMap::new();
        let mut out_patterns = Vec::new();
        let mut out_map = Vec::with_capacity(joint_cells.len());
        // covariate rows
        let mut cov_index: std::collections::BTreeMap<Vec<usize>, usize> =
            std::collections::BTreeMap::new();
        let mut cov_rows = Vec::new();
        let mut cov_map = Vec::with_capacity(joint_cells.len());

        for cell in &joint_cells {
            let (m, y, t, covs) = (cell[0], cell[1], cell[2], &cell[3..]);

            let med_key: Vec<usize> = std::iter::once(m)
                .chain(std::iter::once(t))
                .chain(covs.iter().copied())
                .collect();
            let mi = *med_index.entry(med_key).or_insert_with(|| {
                let mut x = Vec::new();
                med_spec.expand(t, 2, &mut x);
                for ((spec, &lv), &k) in cov_specs.iter().zip(covs).zip(&cov_levels) {
                    spec.expand(lv, k, &mut x);
                }
                med_patterns.push(Pattern { y: m, x });
                med_patterns.len() - 1
            });
            med_map.push(mi);

            let out_key: Vec<usize> = [y, m, t].into_iter().chain(covs.iter().copied()).collect();
            let oi = *out_index.entry(out_key).or_insert_with(|| {
                let mut x = Vec::new();
                PredictorSpec {
                    variable: String::new(),
                    coding: opts.mediator_coding,
                }
                .expand(m, j_m, &mut x);
                x.push(t as f64);
                for ((spec, &lv), &k) in cov_specs.iter().zip(covs).zip(&cov_levels) {
                    spec.expand(lv, k, &mut x);
                }
                out_patterns.push(Pattern { y, x });
                out_patterns.len() - 1
            });
            out_map.push(oi);

            let ci = *cov_index.entry(covs.to_vec()).or_insert_with(|| {
                cov_rows.push(covs.to_vec());
                cov_rows.len() - 1
            });
            cov_map.push(ci);
        }

        Ok(MediationDesign {
            categories: schema.var(y_idx).levels.clone(),
            j_m,
            j_y,
            cov_levels,
            mediator_coding: opts.mediator_coding,
            covariate_coding: opts.covariate_coding,
            joint_weights,
            med_patterns,
            med_map,
            out_patterns,
            out_map,
            cov_rows,
            cov_map,
            n: records.len() as f64,
        })
    }

    /// Fits both models under the given joint weights and returns the
    /// probability-scale effect vectors, flattened as
    /// [acme_c, acme_t, ade_c, ade_t, total] x categories.
    fn evaluate(&self, joint_weights: &[f64]) -> Result<Vec<f64>> {
        let mut med_w = vec![0.0; self.med_patterns.len()];
        let mut out_w = vec![0.0; self.out_patterns.len()];
        let mut cov_w = vec![0.0; self.cov_rows.len()];
        for (i, &w) in joint_weights.iter().enumerate() {
            med_w[self.med_map[i]] += w;
            out_w[self.out_map[i]] += w;
            cov_w[self.cov_map[i]] += w;
        }
        let (m_theta, m_beta, _, _) = fit_weighted(self.j_m, &self.med_patterns, &med_w)?;
        let (y_theta, y_beta, _, _) = fit_weighted(self.j_y, &self.out_patterns, &out_w)?;
        let med = ModelParams {
            theta: &m_theta,
            beta: &m_beta,
            n_levels: self.j_m,
        };
        let out = ModelParams {
            theta: &y_theta,
            beta: &y_beta,
            n_levels: self.j_y,
        };
        Ok(self.effects(&med, &out, &cov_w))
    }

    /// p̄_j(t, t') = (1/n) Σ_i Σ_m Pr(M=m | T=t', X_i) · Pr(Y=j | T=t, M=m, X_i),
    /// averaged over the empirical covariate distribution, then differenced
    /// into ACME / ADE / total effects.
    #[allow(clippy::needless_range_loop)] // arm loops index inner dimensions
    fn effects(&self, med: &ModelParams, out: &ModelParams, cov_w: &[f64]) -> Vec<f64> {
        let total_w: f64 = cov_w.iter().sum();
        let mut pbar = vec![[[0.0f64; 2]; 2]; self.j_y]; // [j][t][t']
        let cov_spec = PredictorSpec {
            variable: String::new(),
            coding: self.covariate_coding,
        };
        let med_in_out = PredictorSpec {
            variable: String::new(),
            coding: self.mediator_coding,
        };

        for (row, &w) in self.cov_rows.iter().zip(cov_w) {
            if w == 0.0 {
                continue;
            }
            let mut cov_cols = Vec::new();
            for (&lv, &k) in row.iter().zip(&self.cov_levels) {
                cov_spec.expand(lv, k, &mut cov_cols);
            }
            for arm_mediator in 0..2usize {
                let mut xm = vec![arm_mediator as f64];
                xm.extend(&cov_cols);
                let pm = med.probs(&xm);
                for arm_direct in 0..2usize {
                    for (m, &pmm) in pm.iter().enumerate() {
                        if pmm == 0.0 {
                            continue;
                        }
                        let mut xy = Vec::new();
                        med_in_out.expand(m, self.j_m, &mut xy);
                        xy.push(arm_direct as f64);
                        xy.extend(&cov_cols);
                        let py = out.probs(&xy);
                        for (j, &pj) in py.iter().enumerate() {
                            pbar[j][arm_direct][arm_mediator] += w * pmm * pj;
                        }
                    }
                }
            }
        }
        for cell in pbar.iter_mut() {
            for row in cell.iter_mut() {
                for v in row.iter_mut() {
                    *v /= total_w;
                }
            }
        }

        let mut out_vec = Vec::with_capacity(5 * self.j_y);
        out_vec.extend(pbar.iter().map(|c| c[0][1] - c[0][0])); // ACME control
        out_vec.extend(pbar.iter().map(|c| c[1][1] - c[1][0])); // ACME treated
        out_vec.extend(pbar.iter().map(|c| c[1][0] - c[0][0])); // ADE control
        out_vec.extend(pbar.iter().map(|c| c[1][1] - c[0][1])); // ADE treated
        out_vec.extend(pbar.iter().map(|c| c[1][1] - c[0][0])); // total
        out_vec
    }
}

/// Borrowed view of fitted parameters, so tests can evaluate effects under
/// modified coefficients.
struct ModelParams<'a> {
    theta: &'a [f64],
    beta: &'a [f64],
    n_levels: usize,
}

impl ModelParams<'_> {
    fn probs(&self, x: &[f64]) -> Vec<f64> {
        let eta: f64 = x.iter().zip(self.beta).map(|(a, b)| a * b).sum();
        let mut probs = Vec::with_capacity(self.n_levels);
        let mut prev = 0.0;
        for j in 0..self.n_levels - 1 {
            let g = sigmoid(self.theta[j] - eta);
            probs.push((g - prev).max(0.0));
            prev = g;
        }
        probs.push((1.0 - prev).max(0.0));
        probs
    }
}

/// Deterministic, bootstrap-free mediation point estimates.
pub fn mediate_points(
    records: &ObservationRecords,
    treatment: &str,
    mediator: &str,
    outcome: &str,
    covariates: &[&str],
    opts: &MediationOptions,
) -> Result<PointEffects> {
    let design = MediationDesign::build(records, treatment, mediator, outcome, covariates, opts)?;
    let flat = design.evaluate(&design.joint_weights)?;
    Ok(split_effects(&design.categories, &flat))
}

fn split_effects(categories: &[String], flat: &[f64]) -> PointEffects {
    let j = categories.len();
    PointEffects {
        categories: categories.to_vec(),
        acme_control: flat[..j].to_vec(),
        acme_treated: flat[j..2 * j].to_vec(),
        ade_control: flat[2 * j..3 * j].to_vec(),
        ade_treated: flat[3 * j..4 * j].to_vec(),
        total: flat[4 * j..5 * j].to_vec(),
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = p * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sign_test_pvalue(samples: &[f64]) -> f64 {
    let b = samples.len() as f64;
    let le = samples.iter().filter(|&&x| x <= 0.0).count() as f64;
    let ge = samples.iter().filter(|&&x| x >= 0.0).count() as f64;
    (2.0 * ((le + 1.0) / (b + 1.0)).min((ge + 1.0) / (b + 1.0))).min(1.0)
}

/// Full mediation analysis: analytic point estimates plus `n_boot`
/// resample-with-replacement refits for percentile intervals and p-values.
/// Draws whose refit fails to converge are discarded and redrawn.
pub fn mediate(
    records: &ObservationRecords,
    treatment: &str,
    mediator: &str,
    outcome: &str,
    covariates: &[&str],
    opts: &MediationOptions,
) -> Result<MediationEstimate> {
    if opts.n_boot == 0 {
        return Err(Error::Mediation(
            "n_boot must be positive; use mediate_points for point estimates".into(),
        ));
    }
    let design = MediationDesign::build(records, treatment, mediator, outcome, covariates, opts)?;
    let point = design.evaluate(&design.joint_weights)?;

    let k = design.joint_weights.len();
    let n_draws = design.n as usize;
    let mut cdf = Vec::with_capacity(k);
    let mut acc = 0.0;
    for &w in &design.joint_weights {
        acc += w;
        cdf.push(acc);
    }
    let total = acc;

    let mut samples = vec![Vec::with_capacity(opts.n_boot); point.len()];
    let mut discarded = 0usize;
    for b in 0..opts.n_boot {
        let mut attempt = 0u64;
        let flat = loop {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(((b as u64) << 8) | attempt);
            let mut weights = vec![0.0; k];
            for _ in 0..n_draws {
                let u: f64 = rng.gen::<f64>() * total;
                let idx = cdf.partition_point(|&c| c <= u).min(k - 1);
                weights[idx] += 1.0;
            }
            match design.evaluate(&weights) {
                Ok(flat) => break flat,
                Err(Error::Regression(_)) if attempt < 255 => {
                    discarded += 1;
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        for (slot, v) in samples.iter_mut().zip(flat) {
            slot.push(v);
        }
    }

    let cells: Vec<EffectCell> = point
        .iter()
        .zip(&samples)
        .map(|(&est, draws)| {
            let mut sorted = draws.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            EffectCell {
                estimate: est,
                ci_low: percentile(&sorted, 0.025),
                ci_high: percentile(&sorted, 0.975),
                pvalue: sign_test_pvalue(draws),
            }
        })
        .collect();

    let j = design.categories.len();
    let take = |r: std::ops::Range<usize>| cells[r].to_vec();
    Ok(MediationEstimate {
        treatment: treatment.to_string(),
        mediator: mediator.to_string(),
        outcome: outcome.to_string(),
        categories: design.categories.clone(),
        acme_control: take(0..j),
        acme_treated: take(j..2 * j),
        ade_control: take(2 * j..3 * j),
        ade_treated: take(3 * j..4 * j),
        total: take(4 * j..5 * j),
        n_boot: opts.n_boot,
        seed: opts.seed,
        discarded_draws: discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::embedded_dataset;
    use crate::table::{ObservationRecords, Schema, VariableSchema};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn embedded_records() -> ObservationRecords {
        embedded_dataset().expand().unwrap()
    }

    #[test]
    fn category_probs_sum_to_one_and_respect_limits() {
        let model = PropOddsModel {
            outcome: "Y".into(),
            n_levels: 4,
            predictors: vec![PredictorSpec::numeric("x")],
            columns: vec!["x".into()],
            beta: vec![1.3],
            theta: vec![-1.0, 0.2, 2.0],
            loglik: 0.0,
            iterations: 0,
        };
        for x in [-3.0, -0.5, 0.0, 1.0, 4.0] {
            let p = category_probs(&model, &[x]);
            assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
        // beta = 0: probabilities independent of x
        let flat = PropOddsModel {
            beta: vec![0.0],
            ..model.clone()
        };
        assert_eq!(
            category_probs(&flat, &[-5.0]),
            category_probs(&flat, &[9.0])
        );
        // eta -> +inf: mass concentrates on the top category
        let p = category_probs(&model, &[50.0]);
        assert!(p[3] > 0.999999);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        // spot-check the analytic derivatives on a small weighted problem
        let patterns = vec![
            Pattern {
                y: 0,
                x: vec![0.0, 1.0],
            },
            Pattern {
                y: 1,
                x: vec![1.0, 0.0],
            },
            Pattern {
                y: 2,
                x: vec![1.0, 2.0],
            },
            Pattern {
                y: 1,
                x: vec![0.0, 2.0],
            },
            Pattern {
                y: 2,
                x: vec![0.5, 0.5],
            },
        ];
        let weights = vec![3.0, 2.0, 4.0, 1.0, 2.0];
        let j1 = 2;
        let ll = |v: &[f64]| -> f64 {
            let (theta, beta) = v.split_at(j1);
            patterns
                .iter()
                .zip(&weights)
                .map(|(pt, &w)| {
                    let eta: f64 = pt.x.iter().zip(beta).map(|(a, b)| a * b).sum();
                    let hi = if pt.y < j1 {
                        sigmoid(theta[pt.y] - eta)
                    } else {
                        1.0
                    };
                    let lo = if pt.y > 0 {
                        sigmoid(theta[pt.y - 1] - eta)
                    } else {
                        0.0
                    };
                    w * (hi - lo).ln()
                })
                .sum()
        };
        // fit converges, and at the optimum the numeric gradient vanishes
        let (theta, beta, loglik, _) = fit_weighted(3, &patterns, &weights).unwrap();
        let mut v = theta.clone();
        v.extend(&beta);
        assert_abs_diff_eq!(ll(&v), loglik, epsilon = 1e-9);
        let h = 1e-6;
        for i in 0..v.len() {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[i] += h;
            vm[i] -= h;
            let g = (ll(&vp) - ll(&vm)) / (2.0 * h);
            assert!(g.abs() < 1e-4, "numeric gradient {g} at coordinate {i}");
        }
    }

    #[test]
    fn two_level_outcome_reduces_to_binary_logistic() {
        // oracle: independent Newton fit of the plain logit model
        let schema = Schema::new(vec![
            VariableSchema::new("Y", &["0", "1"]).unwrap(),
            VariableSchema::new("X", &["0", "1", "2"]).unwrap(),
        ])
        .unwrap();
        let mut rows = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..600 {
            let x = rng.gen_range(0..3usize);
            let p1 = sigmoid(-0.4 + 0.9 * x as f64);
            let y = usize::from(rng.gen::<f64>() < p1);
            rows.push(vec![y, x]);
        }
        let records = ObservationRecords::new(schema, rows.clone()).unwrap();
        let fit = fit_prop_odds(&records, "Y", &[PredictorSpec::numeric("X")]).unwrap();

        // binary logit: maximize sum y*(b0+b1 x) - log(1+exp(b0+b1 x))
        let (mut b0, mut b1) = (0.0f64, 0.0f64);
        for _ in 0..100 {
            let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for r in &rows {
                let (y, x) = (r[0] as f64, r[1] as f64);
                let p = sigmoid(b0 + b1 * x);
                g0 += y - p;
                g1 += (y - p) * x;
                let w = p * (1.0 - p);
                h00 -= w;
                h01 -= w * x;
                h11 -= w * x * x;
            }
            let det = h00 * h11 - h01 * h01;
            let d0 = (g0 * h11 - g1 * h01) / det;
            let d1 = (h00 * g1 - h01 * g0) / det;
            b0 -= d0;
            b1 -= d1;
            if g0.abs().max(g1.abs()) < 1e-10 {
                break;
            }
        }
        // P(Y=0) = sigmoid(theta_0 - beta x) vs 1 - sigmoid(b0 + b1 x)
        assert_abs_diff_eq!(fit.theta[0], -b0, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.beta[0], b1, epsilon = 1e-6);
    }

    #[test]
    fn recovers_null_coefficient_on_independent_predictor() {
        let schema = Schema::new(vec![
            VariableSchema::new("Y", &["0", "1", "2"]).unwrap(),
            VariableSchema::new("X", &["0", "1"]).unwrap(),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rows = Vec::new();
        for _ in 0..4000 {
            let x = rng.gen_range(0..2usize);
            let u: f64 = rng.gen();
            let y = if u < 0.3 {
                0
            } else if u < 0.75 {
                1
            } else {
                2
            };
            rows.push(vec![y, x]);
        }
        let records = ObservationRecords::new(schema, rows).unwrap();
        let fit = fit_prop_odds(&records, "Y", &[PredictorSpec::numeric("X")]).unwrap();
        // rough standard error bound for n=4000 is ~0.06; allow 3x
        assert!(fit.beta[0].abs() < 0.18, "beta = {}", fit.beta[0]);
    }

    #[test]
    fn embedded_mediator_model_converges_quickly() {
        let records = embedded_records();
        let fit = fit_prop_odds(
            &records,
            "SSC-W",
            &[PredictorSpec::numeric("IC"), PredictorSpec::numeric("TIME")],
        )
        .unwrap();
        assert!(fit.iterations < 50, "iterations = {}", fit.iterations);
        assert_eq!(fit.theta.len(), 3);
        assert!(fit.theta.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let schema = Schema::new(vec![
            VariableSchema::new("Y", &["0", "1"]).unwrap(),
            VariableSchema::new("X", &["0", "1"]).unwrap(),
        ])
        .unwrap();
        // constant outcome
        let rows = vec![vec![0, 0], vec![0, 1]];
        let records = ObservationRecords::new(schema, rows).unwrap();
        assert!(fit_prop_odds(&records, "Y", &[PredictorSpec::numeric("X")]).is_err());
        assert!(fit_prop_odds(&records, "Z", &[]).is_err());
    }

    #[test]
    fn point_effects_match_published_fatigue_table() {
        let records = embedded_records();
        let eff = mediate_points(
            &records,
            "IC",
            "SSC-W",
            "SSC-F",
            &["TIME"],
            &MediationOptions::default(),
        )
        .unwrap();
        // frozen from the reference analysis; bootstrap-free, so exact
        assert_abs_diff_eq!(eff.acme_control[0], 0.0634, epsilon = 2e-3);
        assert_abs_diff_eq!(eff.ade_control[0], 0.0081, epsilon = 1e-3);
        assert_abs_diff_eq!(eff.total[0], 0.0723, epsilon = 2e-3);
        assert_abs_diff_eq!(eff.acme_control[3], -0.0403, epsilon = 2e-3);
    }

    #[test]
    fn decomposition_identity_and_zero_sums_hold_exactly() {
        let records = embedded_records();
        for (m, y) in [("SSC-W", "SSC-F"), ("SSC-F", "SSC-W")] {
            let eff = mediate_points(
                &records,
                "IC",
                m,
                y,
                &["TIME"],
                &MediationOptions::default(),
            )
            .unwrap();
            for j in 0..4 {
                assert_abs_diff_eq!(
                    eff.acme_control[j] + eff.ade_treated[j],
                    eff.total[j],
                    epsilon = 1e-10
                );
                assert_abs_diff_eq!(
                    eff.acme_treated[j] + eff.ade_control[j],
                    eff.total[j],
                    epsilon = 1e-10
                );
            }
            for v in [
                &eff.acme_control,
                &eff.acme_treated,
                &eff.ade_control,
                &eff.ade_treated,
                &eff.total,
            ] {
                assert_abs_diff_eq!(v.iter().sum::<f64>(), 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zeroed_mediator_coefficients_kill_the_indirect_effect() {
        let records = embedded_records();
        let opts = MediationOptions::default();
        let design =
            MediationDesign::build(&records, "IC", "SSC-W", "SSC-F", &["TIME"], &opts).unwrap();
        let mut med_w = vec![0.0; design.med_patterns.len()];
        let mut out_w = vec![0.0; design.out_patterns.len()];
        let mut cov_w = vec![0.0; design.cov_rows.len()];
        for (i, &w) in design.joint_weights.iter().enumerate() {
            med_w[design.med_map[i]] += w;
            out_w[design.out_map[i]] += w;
            cov_w[design.cov_map[i]] += w;
        }
        let (mt, mb, _, _) = fit_weighted(design.j_m, &design.med_patterns, &med_w).unwrap();
        let (yt, mut yb, _, _) = fit_weighted(design.j_y, &design.out_patterns, &out_w).unwrap();
        // the mediator occupies the first columns of the outcome design
        for c in yb.iter_mut().take(design.j_m - 1) {
            *c = 0.0;
        }
        let med = ModelParams {
            theta: &mt,
            beta: &mb,
            n_levels: design.j_m,
        };
        let out = ModelParams {
            theta: &yt,
            beta: &yb,
            n_levels: design.j_y,
        };
        let flat = design.effects(&med, &out, &cov_w);
        let eff = split_effects(&design.categories, &flat);
        for j in 0..4 {
            assert_abs_diff_eq!(eff.acme_control[j], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(eff.acme_treated[j], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn parameter_recovery_on_simulated_models() {
        // simulate mediator and outcome from known proportional-odds models,
        // then compare estimated effects to the plug-in truth
        let schema = Schema::new(vec![
            VariableSchema::new("Y", &["0", "1", "2"]).unwrap(),
            VariableSchema::new("M", &["0", "1", "2"]).unwrap(),
            VariableSchema::new("T", &["0", "1"]).unwrap(),
            VariableSchema::new("Z", &["0", "1", "2"]).unwrap(),
        ])
        .unwrap();
        let true_med = ModelParams {
            theta: &[-0.4, 0.9],
            beta: &[0.8, -0.3],
            n_levels: 3,
        };
        // outcome design: m dummies (2), t, z  (categorical mediator)
        let true_out = ModelParams {
            theta: &[-0.8, 0.7],
            beta: &[0.9, 1.6, 0.4, 0.2],
            n_levels: 3,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut rows = Vec::new();
        let draw = |p: &[f64], rng: &mut ChaCha8Rng| -> usize {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (i, &q) in p.iter().enumerate() {
                acc += q;
                if u < acc {
                    return i;
                }
            }
            p.len() - 1
        };
        for _ in 0..5000 {
            let t = rng.gen_range(0..2usize);
            let z = rng.gen_range(0..3usize);
            let m = draw(&true_med.probs(&[t as f64, z as f64]), &mut rng);
            let md = [
                if m == 1 { 1.0 } else { 0.0 },
                if m == 2 { 1.0 } else { 0.0 },
            ];
            let y = draw(
                &true_out.probs(&[md[0], md[1], t as f64, z as f64]),
                &mut rng,
            );
            rows.push(vec![y, m, t, z]);
        }
        let records = ObservationRecords::new(schema, rows).unwrap();
        let opts = MediationOptions::default();
        let est = mediate_points(&records, "T", "M", "Y", &["Z"], &opts).unwrap();

        let design = MediationDesign::build(&records, "T", "M", "Y", &["Z"], &opts).unwrap();
        let mut cov_w = vec![0.0; design.cov_rows.len()];
        for (i, &w) in design.joint_weights.iter().enumerate() {
            cov_w[design.cov_map[i]] += w;
        }
        let truth = split_effects(
            &design.categories,
            &design.effects(&true_med, &true_out, &cov_w),
        );
        for j in 0..3 {
            assert!((est.acme_control[j] - truth.acme_control[j]).abs() < 0.02);
            assert!((est.acme_treated[j] - truth.acme_treated[j]).abs() < 0.02);
            assert!((est.ade_control[j] - truth.ade_control[j]).abs() < 0.02);
            assert!((est.total[j] - truth.total[j]).abs() < 0.02);
        }
    }

    #[test]
    fn mediation_without_covariates_works() {
        let records = embedded_records();
        let eff = mediate_points(
            &records,
            "IC",
            "SSC-W",
            "SSC-F",
            &[],
            &MediationOptions::default(),
        )
        .unwrap();
        for j in 0..4 {
            assert!((eff.acme_control[j] + eff.ade_treated[j] - eff.total[j]).abs() < 1e-10);
        }
        assert!(eff.acme_control[0] > 0.0);
    }

    #[test]
    fn bootstrap_is_deterministic_and_brackets_the_point_estimate() {
        let records = embedded_records();
        let opts = MediationOptions {
            n_boot: 120,
            seed: 42,
            ..MediationOptions::default()
        };
        let a = mediate(&records, "IC", "SSC-W", "SSC-F", &["TIME"], &opts).unwrap();
        let b = mediate(&records, "IC", "SSC-W", "SSC-F", &["TIME"], &opts).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        for cells in [
            &a.acme_control,
            &a.acme_treated,
            &a.ade_control,
            &a.ade_treated,
            &a.total,
        ] {
            for c in cells.iter() {
                assert!(
                    c.ci_low <= c.estimate + 1e-9 && c.estimate - 1e-9 <= c.ci_high,
                    "interval [{}, {}] misses estimate {}",
                    c.ci_low,
                    c.ci_high,
                    c.estimate
                );
                assert!(c.pvalue > 0.0 && c.pvalue <= 1.0);
            }
        }
    }
}
