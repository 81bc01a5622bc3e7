//! Hierarchical loglinear models: generating classes, parameter counting,
//! maximum-likelihood fitting by iterative proportional fitting, deviance G²,
//! chi-square p-values, AIC, and nested model comparison.

use std::fmt;

use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::chisq_sf;
use crate::table::{ContingencyTable, Schema};

/// Default IPF convergence tolerance: max absolute change of any fitted cell
/// between full cycles.
pub const IPF_TOL: f64 = 1e-8;
/// Default IPF cycle cap.
pub const IPF_MAX_ITER: usize = 10_000;

/// A subset of schema variables as a bitmask (bit i = variable at schema
/// position i). Supports up to 32 variables, far beyond the n <= 5
/// enumeration cap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermSet(pub u32);

impl TermSet {
    pub const EMPTY: TermSet = TermSet(0);

    pub fn singleton(var: usize) -> Self {
        TermSet(1 << var)
    }

    pub fn from_vars(vars: &[usize]) -> Self {
        TermSet(vars.iter().fold(0, |m, &v| m | (1 << v)))
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn contains(&self, var: usize) -> bool {
        self.0 >> var & 1 == 1
    }

    pub fn is_subset_of(&self, other: &TermSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(&self, other: &TermSet) -> TermSet {
        TermSet(self.0 | other.0)
    }

    pub fn minus(&self, other: &TermSet) -> TermSet {
        TermSet(self.0 & !other.0)
    }

    pub fn intersect(&self, other: &TermSet) -> TermSet {
        TermSet(self.0 & other.0)
    }

    pub fn vars(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&v| self.contains(v))
    }

    /// All nonempty proper subsets missing exactly one variable.
    pub fn facets(self) -> impl Iterator<Item = TermSet> {
        self.vars().map(move |v| TermSet(self.0 & !(1 << v)))
    }

    pub fn format(&self, schema: &Schema) -> String {
        let names: Vec<&str> = self.vars().map(|v| schema.var(v).name.as_str()).collect();
        names.join(",")
    }
}

/// The generating class of a hierarchical loglinear model: its maximal
/// interaction terms (minimal sufficient statistics). Canonical form keeps
/// an antichain that covers every variable, so main effects are always
/// present; construction normalizes arbitrary term lists into that form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GeneratingClass {
    n_vars: usize,
    terms: Vec<TermSet>,
}

impl GeneratingClass {
    /// Builds a generating class over `n_vars` variables from any list of
    /// terms: dominated terms are dropped, uncovered variables gain their
    /// main-effect singleton, and the result is sorted canonically
    /// (descending size, then ascending bitmask).
    pub fn new(terms: &[TermSet], n_vars: usize) -> Result<Self> {
        if n_vars == 0 || n_vars > 32 {
            return Err(Error::Model(format!("unsupported variable count {n_vars}")));
        }
        let full = TermSet((1u64.wrapping_shl(n_vars as u32) - 1) as u32);
        for t in terms {
            if !t.is_subset_of(&full) {
                return Err(Error::Model(format!(
                    "term {:#b} references a variable outside the {n_vars}-variable schema",
                    t.0
                )));
            }
        }
        let mut maximal: Vec<TermSet> = Vec::new();
        for &t in terms.iter().filter(|t| !t.is_empty()) {
            if maximal.iter().any(|m| t.is_subset_of(m)) {
                continue;
            }
            maximal.retain(|m| !m.is_subset_of(&t));
            maximal.push(t);
        }
        let covered = maximal.iter().fold(TermSet::EMPTY, |acc, t| acc.union(t));
        for v in 0..n_vars {
            if !covered.contains(v) {
                maximal.push(TermSet::singleton(v));
            }
        }
        maximal.sort_by(|a, b| b.len().cmp(&a.len()).then(a.0.cmp(&b.0)));
        Ok(GeneratingClass {
            n_vars,
            terms: maximal,
        })
    }

    /// The mutual-independence model: one singleton generator per variable.
    pub fn independence(n_vars: usize) -> Self {
        GeneratingClass::new(&[], n_vars).expect("n_vars validated by callers")
    }

    /// The saturated model: a single all-variables generator.
    pub fn saturated(n_vars: usize) -> Self {
        let full = TermSet((1u64.wrapping_shl(n_vars as u32) - 1) as u32);
        GeneratingClass::new(&[full], n_vars).expect("n_vars validated by callers")
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn terms(&self) -> &[TermSet] {
        &self.terms
    }

    /// All nonempty subsets of every generator, deduplicated and sorted.
    pub fn downset(&self) -> Vec<TermSet> {
        let mut seen = std::collections::BTreeSet::new();
        for t in &self.terms {
            // iterate sub-masks of t
            let mut s = t.0;
            loop {
                if s != 0 {
                    seen.insert(TermSet(s));
                }
                if s == 0 {
                    break;
                }
                s = (s - 1) & t.0;
            }
        }
        seen.into_iter().collect()
    }

    /// True when every term of `self`'s downset lies in `other`'s downset.
    pub fn is_nested_in(&self, other: &GeneratingClass) -> bool {
        self.n_vars == other.n_vars
            && self
                .terms
                .iter()
                .all(|t| other.terms.iter().any(|o| t.is_subset_of(o)))
    }

    /// Parses bracket notation over a schema, e.g.
    /// `[SSC-W,SSC-F][SSC-W,TIME]`. Uncovered variables get main effects.
    ///
    /// ```
    /// use gramediate::{embedded_schema, GeneratingClass};
    /// let schema = embedded_schema();
    /// let gc = GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME]", &schema).unwrap();
    /// // IC is uncovered, so its main effect joins the class
    /// assert_eq!(gc.format(&schema), "[SSC-F,SSC-W][SSC-W,TIME][IC]");
    /// ```
    pub fn parse(text: &str, schema: &Schema) -> Result<Self> {
        let text = text.trim();
        if !text.starts_with('[') || !text.ends_with(']') {
            return Err(Error::Model(format!(
                "model spec must be bracket notation like [A,B][B,C], got '{text}'"
            )));
        }
        let mut terms = Vec::new();
        for chunk in text[1..text.len() - 1].split("][") {
            let mut mask = 0u32;
            for name in chunk.split(',').map(str::trim) {
                let v = schema.index_of(name).ok_or_else(|| {
                    Error::Model(format!("unknown variable '{name}' in model spec"))
                })?;
                mask |= 1 << v;
            }
            if mask == 0 {
                return Err(Error::Model("empty generator in model spec".into()));
            }
            terms.push(TermSet(mask));
        }
        GeneratingClass::new(&terms, schema.len())
    }

    /// Formats as bracket notation, variables in schema order.
    pub fn format(&self, schema: &Schema) -> String {
        self.terms
            .iter()
            .map(|t| format!("[{}]", t.format(schema)))
            .collect()
    }

    /// Name lists per generator, for JSON output.
    pub fn term_names(&self, schema: &Schema) -> Vec<Vec<String>> {
        self.terms
            .iter()
            .map(|t| t.vars().map(|v| schema.var(v).name.clone()).collect())
            .collect()
    }
}

impl fmt::Display for GeneratingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            write!(
                f,
                "[{}]",
                t.vars()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )?;
        }
        Ok(())
    }
}

/// Number of free parameters: 1 + sum over the downset of prod(levels - 1).
pub fn param_count(gc: &GeneratingClass, levels: &[usize]) -> usize {
    1 + gc
        .downset()
        .iter()
        .map(|t| t.vars().map(|v| levels[v] - 1).product::<usize>())
        .sum::<usize>()
}

/// Result of a maximum-likelihood fit: fitted means plus the goodness-of-fit
/// summary used throughout model selection.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub generators: GeneratingClass,
    pub fitted: ContingencyTable,
    pub g2: f64,
    pub df: usize,
    pub pvalue: f64,
    pub aic: f64,
    pub iterations: usize,
    pub converged: bool,
    observed: ContingencyTable,
}

impl FitResult {
    pub fn observed(&self) -> &ContingencyTable {
        &self.observed
    }
}

/// Tail probabilities below this underflow threshold print as 0 in reports;
/// the in-memory value stays exact.
pub const PVALUE_REPORT_FLOOR: f64 = 1e-16;

fn reported(pvalue: f64) -> f64 {
    if pvalue <= PVALUE_REPORT_FLOOR {
        0.0
    } else {
        pvalue
    }
}

impl Serialize for FitResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("FitResult", 7)?;
        st.serialize_field(
            "generators",
            &self.generators.term_names(self.observed.schema()),
        )?;
        st.serialize_field("g2", &self.g2)?;
        st.serialize_field("df", &self.df)?;
        st.serialize_field("pvalue", &reported(self.pvalue))?;
        st.serialize_field("aic", &self.aic)?;
        st.serialize_field("iterations", &self.iterations)?;
        st.serialize_field("converged", &self.converged)?;
        st.end()
    }
}

/// Likelihood-ratio comparison of two nested fits on the same table.
#[derive(Debug, Clone)]
pub struct NestedComparison {
    pub delta_g2: f64,
    pub delta_df: usize,
    pub pvalue: f64,
}

impl Serialize for NestedComparison {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("NestedComparison", 3)?;
        st.serialize_field("delta_g2", &self.delta_g2)?;
        st.serialize_field("delta_df", &self.delta_df)?;
        st.serialize_field("pvalue", &reported(self.pvalue))?;
        st.end()
    }
}

/// Fits a hierarchical loglinear model by classical IPF: cycle over the
/// generators in declaration order, rescaling the fitted table to match each
/// observed generator margin, starting from the all-ones table.
///
/// Convergence: max absolute cell change across one full cycle < `tol`.
/// A non-converged fit is still returned with `converged = false`.
pub fn ipf_fit(
    table: &ContingencyTable,
    gc: &GeneratingClass,
    tol: f64,
    max_iter: usize,
) -> Result<FitResult> {
    if gc.n_vars() != table.schema().len() {
        return Err(Error::Model(format!(
            "model over {} variables does not match {}-variable table",
            gc.n_vars(),
            table.schema().len()
        )));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Model("ipf_fit requires tol > 0".into()));
    }
    let n = table.total();
    if n <= 0.0 {
        return Err(Error::Table(
            "ipf_fit requires a table with positive total".into(),
        ));
    }
    if !table.is_integer_valued() {
        return Err(Error::Table(
            "ipf_fit requires observed integer counts".into(),
        ));
    }

    let schema = table.schema();
    let levels = schema.level_counts();
    let cells = table.counts().len();

    // Per generator: margin size, flat-cell -> margin-cell map, observed margin.
    struct MarginPlan {
        size: usize,
        map: Vec<u32>,
        observed: Vec<f64>,
    }
    let plans: Vec<MarginPlan> = gc
        .terms()
        .iter()
        .map(|term| {
            let kept: Vec<usize> = term.vars().collect();
            let size: usize = kept.iter().map(|&v| levels[v]).product();
            let mut map = vec![0u32; cells];
            let mut observed = vec![0.0; size];
            let mut lv = vec![0usize; schema.len()];
            for (idx, slot) in map.iter_mut().enumerate() {
                let mut rem = idx;
                for j in (0..schema.len()).rev() {
                    lv[j] = rem % levels[j];
                    rem /= levels[j];
                }
                let mut mi = 0usize;
                for &v in &kept {
                    mi = mi * levels[v] + lv[v];
                }
                *slot = mi as u32;
                observed[mi] += table.counts()[idx];
            }
            MarginPlan {
                size,
                map,
                observed,
            }
        })
        .collect();

    let mut fit = vec![1.0f64; cells];
    let mut margin = Vec::new();
    let mut prev = vec![0.0f64; cells];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        prev.copy_from_slice(&fit);
        for plan in &plans {
            margin.clear();
            margin.resize(plan.size, 0.0);
            for (c, &m) in plan.map.iter().enumerate() {
                margin[m as usize] += fit[c];
            }
            for (m, r) in margin.iter_mut().enumerate() {
                // fitted-margin zero means every cell under it is already 0
                *r = if *r > 0.0 { plan.observed[m] / *r } else { 1.0 };
            }
            for (c, &m) in plan.map.iter().enumerate() {
                fit[c] *= margin[m as usize];
            }
        }
        let delta = fit
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if delta < tol {
            converged = true;
            break;
        }
    }

    // G² = 2 Σ_{n_c > 0} n_c log(n_c / m_c); sampling zeros contribute 0.
    let mut g2 = 0.0;
    for (c, &obs) in table.counts().iter().enumerate() {
        if obs > 0.0 {
            g2 += obs * (obs / fit[c]).ln();
        }
    }
    g2 = (2.0 * g2).max(0.0);

    let params = param_count(gc, &levels);
    let df = cells - params;
    let pvalue = if df == 0 {
        if g2 < 1e-8 {
            1.0
        } else {
            0.0
        }
    } else {
        chisq_sf(g2, df)?
    };
    let aic = g2 + 2.0 * params as f64;

    Ok(FitResult {
        generators: gc.clone(),
        fitted: ContingencyTable::from_parts_unchecked(schema.clone(), fit),
        g2,
        df,
        pvalue,
        aic,
        iterations,
        converged,
        observed: table.clone(),
    })
}

/// `ipf_fit` with the standard tolerance and iteration cap.
pub fn ipf_fit_default(table: &ContingencyTable, gc: &GeneratingClass) -> Result<FitResult> {
    ipf_fit(table, gc, IPF_TOL, IPF_MAX_ITER)
}

/// Likelihood-ratio test of a sub-model against a super-model fitted to the
/// same observed table.
pub fn compare_nested(sub: &FitResult, super_: &FitResult) -> Result<NestedComparison> {
    if sub.observed != super_.observed {
        return Err(Error::NotNested(
            "fits are on different observed tables".into(),
        ));
    }
    if !sub.generators.is_nested_in(&super_.generators) {
        return Err(Error::NotNested(format!(
            "{} is not nested in {}",
            sub.generators, super_.generators
        )));
    }
    if sub.df <= super_.df {
        return Err(Error::NotNested(
            "sub-model must be strictly smaller than the super-model".into(),
        ));
    }
    let delta_g2 = (sub.g2 - super_.g2).max(0.0);
    let delta_df = sub.df - super_.df;
    Ok(NestedComparison {
        delta_g2,
        delta_df,
        pvalue: chisq_sf(delta_g2, delta_df)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::embedded_dataset;
    use crate::table::{ContingencyTable, Schema, VariableSchema};
    use approx::assert_abs_diff_eq;

    fn schema3() -> Schema {
        Schema::new(vec![
            VariableSchema::new("A", &["0", "1"]).unwrap(),
            VariableSchema::new("B", &["0", "1"]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn downset_examples() {
        // [{W,F}] over two variables
        let gc = GeneratingClass::new(&[TermSet::from_vars(&[0, 1])], 2).unwrap();
        assert_eq!(gc.downset().len(), 3);

        // Model 5 shape: [{0,1},{1,2}] over three variables -> 5 subsets
        let gc = GeneratingClass::new(
            &[TermSet::from_vars(&[0, 1]), TermSet::from_vars(&[1, 2])],
            3,
        )
        .unwrap();
        assert_eq!(gc.downset().len(), 5);

        // Model 9 shape: three pairs through one hub over four variables -> 7
        let gc = GeneratingClass::new(
            &[
                TermSet::from_vars(&[0, 1]),
                TermSet::from_vars(&[1, 2]),
                TermSet::from_vars(&[1, 3]),
            ],
            4,
        )
        .unwrap();
        assert_eq!(gc.downset().len(), 7);
    }

    #[test]
    fn normalization_drops_dominated_terms_and_adds_main_effects() {
        let gc = GeneratingClass::new(&[TermSet::from_vars(&[0, 1]), TermSet::from_vars(&[0])], 3)
            .unwrap();
        assert_eq!(gc.terms().len(), 2); // [AB][C]
        assert!(gc.terms().contains(&TermSet::singleton(2)));
    }

    #[test]
    fn param_count_matches_published_df() {
        let lev3 = [4, 4, 3]; // SSC-F, SSC-W, TIME
        let ind = GeneratingClass::independence(3);
        assert_eq!(param_count(&ind, &lev3), 9); // df 48 - 9 = 39

        let m5 = GeneratingClass::new(
            &[TermSet::from_vars(&[0, 1]), TermSet::from_vars(&[1, 2])],
            3,
        )
        .unwrap();
        assert_eq!(param_count(&m5, &lev3), 24); // df 48 - 24 = 24

        let lev4 = [4, 4, 3, 2];
        let m9 = GeneratingClass::new(
            &[
                TermSet::from_vars(&[0, 1]),
                TermSet::from_vars(&[1, 2]),
                TermSet::from_vars(&[1, 3]),
            ],
            4,
        )
        .unwrap();
        assert_eq!(param_count(&m9, &lev4), 28); // df 96 - 28 = 68
    }

    #[test]
    fn bracket_notation_round_trip() {
        let schema = embedded_dataset().schema().clone();
        let gc = GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME][SSC-W,IC]", &schema).unwrap();
        assert_eq!(gc.terms().len(), 3);
        let text = gc.format(&schema);
        let back = GeneratingClass::parse(&text, &schema).unwrap();
        assert_eq!(gc, back);
        assert!(GeneratingClass::parse("[NOPE]", &schema).is_err());
    }

    #[test]
    fn saturated_fit_reproduces_observed() {
        let t = ContingencyTable::new(schema3(), vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        let fit = ipf_fit_default(&t, &GeneratingClass::saturated(2)).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.df, 0);
        assert_abs_diff_eq!(fit.g2, 0.0, epsilon = 1e-10);
        for (a, b) in fit.fitted.counts().iter().zip(t.counts()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        }
    }

    #[test]
    fn independence_fit_matches_closed_form() {
        // 2x2 [[10,20],[30,40]]: fitted(i,j) = row_i * col_j / N
        let t = ContingencyTable::new(schema3(), vec![10.0, 20.0, 30.0, 40.0]).unwrap();
        let fit = ipf_fit_default(&t, &GeneratingClass::independence(2)).unwrap();
        assert_abs_diff_eq!(
            fit.fitted.count(&[0, 0]),
            30.0 * 40.0 / 100.0,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            fit.fitted.count(&[1, 1]),
            70.0 * 60.0 / 100.0,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(fit.fitted.total(), 100.0, epsilon = 1e-8);
    }

    #[test]
    fn model5_fit_matches_published_statistics() {
        let t = embedded_dataset()
            .marginalize(&["SSC-F", "SSC-W", "TIME"])
            .unwrap();
        let gc = GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME]", t.schema()).unwrap();
        let fit = ipf_fit_default(&t, &gc).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.g2, 18.79, epsilon = 0.01);
        assert_eq!(fit.df, 24);
        assert_abs_diff_eq!(fit.pvalue, 0.763, epsilon = 0.001);
    }

    #[test]
    fn model9_fit_matches_published_statistics() {
        let t = embedded_dataset();
        let gc = GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME][SSC-W,IC]", t.schema()).unwrap();
        let fit = ipf_fit_default(&t, &gc).unwrap();
        assert_abs_diff_eq!(fit.g2, 67.11, epsilon = 0.01);
        assert_eq!(fit.df, 68);
        assert_abs_diff_eq!(fit.pvalue, 0.507, epsilon = 0.001);
    }

    #[test]
    fn margins_preserved_after_convergence() {
        let t = embedded_dataset();
        let gc = GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME][SSC-W,IC]", t.schema()).unwrap();
        let fit = ipf_fit_default(&t, &gc).unwrap();
        for term in gc.terms() {
            let names: Vec<&str> = term
                .vars()
                .map(|v| t.schema().var(v).name.as_str())
                .collect();
            let fm = fit.fitted.marginalize(&names).unwrap();
            let om = t.marginalize(&names).unwrap();
            for (a, b) in fm.counts().iter().zip(om.counts()) {
                assert!((a - b).abs() <= 1e-6, "margin {names:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn aic_of_saturated_model_is_twice_cell_count() {
        let t = ContingencyTable::new(schema3(), vec![5.0, 7.0, 1.0, 3.0]).unwrap();
        let fit = ipf_fit_default(&t, &GeneratingClass::saturated(2)).unwrap();
        assert_abs_diff_eq!(fit.aic, 8.0, epsilon = 1e-8);
    }

    #[test]
    fn nested_comparison_matches_published_tables() {
        let t3 = embedded_dataset()
            .marginalize(&["SSC-F", "SSC-W", "TIME"])
            .unwrap();
        let s = t3.schema();
        let m5 = ipf_fit_default(
            &t3,
            &GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME]", s).unwrap(),
        )
        .unwrap();
        let m6 = ipf_fit_default(
            &t3,
            &GeneratingClass::parse("[SSC-W,SSC-F][SSC-F,TIME]", s).unwrap(),
        )
        .unwrap();
        let m8 = ipf_fit_default(
            &t3,
            &GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME][SSC-F,TIME]", s).unwrap(),
        )
        .unwrap();

        let c68 = compare_nested(&m6, &m8).unwrap();
        assert_abs_diff_eq!(c68.delta_g2, 18.82, epsilon = 0.01);
        assert_eq!(c68.delta_df, 6);
        assert_abs_diff_eq!(c68.pvalue, 0.004, epsilon = 0.001);

        let c58 = compare_nested(&m5, &m8).unwrap();
        assert_abs_diff_eq!(c58.delta_g2, 4.04, epsilon = 0.01);
        assert_eq!(c58.delta_df, 6);
        assert_abs_diff_eq!(c58.pvalue, 0.671, epsilon = 0.001);

        // non-nested pair rejected
        assert!(compare_nested(&m5, &m6).is_err());
    }

    #[test]
    fn df_identity_for_nested_pairs() {
        let t3 = embedded_dataset()
            .marginalize(&["SSC-F", "SSC-W", "TIME"])
            .unwrap();
        let lev = t3.schema().level_counts();
        let s = t3.schema();
        let sub = GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME]", s).unwrap();
        let sup = GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME][SSC-F,TIME]", s).unwrap();
        let fs = ipf_fit_default(&t3, &sub).unwrap();
        let fp = ipf_fit_default(&t3, &sup).unwrap();
        assert_eq!(
            fs.df - fp.df,
            param_count(&sup, &lev) - param_count(&sub, &lev)
        );
    }

    #[test]
    fn underflowing_pvalues_print_as_zero_in_reports() {
        let t = embedded_dataset()
            .marginalize(&["SSC-F", "SSC-W", "TIME"])
            .unwrap();
        let fit = ipf_fit_default(&t, &GeneratingClass::independence(3)).unwrap();
        assert!(fit.pvalue > 0.0 && fit.pvalue < 1e-16);
        let js = serde_json::to_value(&fit).unwrap();
        assert_eq!(js["pvalue"].as_f64().unwrap(), 0.0);
    }

    #[test]
    fn comparison_rejects_fits_on_different_tables() {
        let t3 = embedded_dataset()
            .marginalize(&["SSC-F", "SSC-W", "TIME"])
            .unwrap();
        let t4 = embedded_dataset();
        let sub3 = ipf_fit_default(&t3, &GeneratingClass::independence(3)).unwrap();
        let sub4 = ipf_fit_default(&t4, &GeneratingClass::saturated(4)).unwrap();
        assert!(compare_nested(&sub3, &sub4).is_err());
    }

    #[test]
    fn unconverged_fit_is_returned_with_flag() {
        let t = embedded_dataset();
        let gc =
            GeneratingClass::parse("[SSC-W,SSC-F][SSC-W,TIME][SSC-F,TIME]", t.schema()).unwrap();
        let fit = ipf_fit(&t, &gc, 1e-12, 2).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
    }

    #[test]
    fn zero_margin_cells_stay_zero_and_g2_stays_finite() {
        // one empty row: the independence fit zeroes every cell under it
        let t = ContingencyTable::new(schema3(), vec![0.0, 0.0, 30.0, 40.0]).unwrap();
        let fit = ipf_fit_default(&t, &GeneratingClass::independence(2)).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.fitted.count(&[0, 0]), 0.0);
        assert_eq!(fit.fitted.count(&[0, 1]), 0.0);
        assert!(fit.g2.is_finite());
        assert!((fit.fitted.total() - 70.0).abs() < 1e-8);
    }

    #[test]
    fn empty_table_is_rejected() {
        let t = ContingencyTable::zeros(schema3());
        assert!(ipf_fit_default(&t, &GeneratingClass::independence(2)).is_err());
    }
}
