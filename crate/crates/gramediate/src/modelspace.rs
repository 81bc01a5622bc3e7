//! The lattice of hierarchical generating classes: exhaustive enumeration,
//! AIC stepwise search (forward and backward), and the two-direction
//! consensus rule.
//!
//! Three search spaces are supported. `Hierarchical` moves by single
//! interaction terms through all hierarchical models. `Graphical` and
//! `Decomposable` move by single edges of the interaction graph, visiting
//! only clique models (`Decomposable` additionally keeps the graph chordal).
//! The edge-move spaces mirror the reference stepwise machinery this tool is
//! validated against, and `Decomposable` is the default.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::InteractionGraph;
use crate::loglin::{ipf_fit, GeneratingClass, TermSet, IPF_MAX_ITER, IPF_TOL};
use crate::table::ContingencyTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchSpace {
    /// Single-term moves over all hierarchical models.
    Hierarchical,
    /// Single-edge moves over clique models of arbitrary graphs.
    Graphical,
    /// Single-edge moves over clique models of chordal graphs.
    Decomposable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub space: SearchSpace,
    pub ipf_tol: f64,
    pub ipf_max_iter: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            space: SearchSpace::Decomposable,
            ipf_tol: IPF_TOL,
            ipf_max_iter: IPF_MAX_ITER,
        }
    }
}

impl SearchOptions {
    pub fn with_space(space: SearchSpace) -> Self {
        SearchOptions {
            space,
            ..SearchOptions::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchStep {
    /// Human-readable move, e.g. `+[SSC-F,SSC-W]` or `-SSC-W--TIME`.
    pub movement: String,
    pub aic_before: f64,
    pub aic_after: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchTrace {
    pub direction: Direction,
    pub space: SearchSpace,
    pub start: String,
    pub steps: Vec<SearchStep>,
    pub final_model: String,
    pub final_aic: f64,
    /// Candidate moves skipped because their fit did not converge.
    pub skipped: Vec<String>,
    pub models_evaluated: usize,
    #[serde(skip)]
    pub final_class: GeneratingClass,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsensusResult {
    pub forward: SearchTrace,
    pub backward: SearchTrace,
    /// The common endpoint, present only when both directions agree.
    pub agreed: Option<String>,
    #[serde(skip)]
    pub agreed_class: Option<GeneratingClass>,
}

/// All hierarchical generating classes over `n_vars` variables: antichains of
/// nonempty variable subsets covering every variable, in a fixed canonical
/// order.
pub fn enumerate_hierarchical(n_vars: usize) -> Result<Vec<GeneratingClass>> {
    if !(2..=5).contains(&n_vars) {
        return Err(Error::Model(format!(
            "enumeration supports 2 to 5 variables, got {n_vars}"
        )));
    }
    let full: u32 = (1 << n_vars) - 1;
    let subsets: Vec<TermSet> = (1..=full).map(TermSet).collect();
    let mut out = Vec::new();
    let mut chosen: Vec<TermSet> = Vec::new();

    fn recurse(
        i: usize,
        subsets: &[TermSet],
        chosen: &mut Vec<TermSet>,
        covered: TermSet,
        full: u32,
        n_vars: usize,
        out: &mut Vec<GeneratingClass>,
    ) {
        if i == subsets.len() {
            if !chosen.is_empty() && covered.0 == full {
                out.push(GeneratingClass::new(chosen, n_vars).expect("valid antichain"));
            }
            return;
        }
        recurse(i + 1, subsets, chosen, covered, full, n_vars, out);
        let s = subsets[i];
        if chosen
            .iter()
            .all(|t| !t.is_subset_of(&s) && !s.is_subset_of(t))
        {
            chosen.push(s);
            recurse(i + 1, subsets, chosen, covered.union(&s), full, n_vars, out);
            chosen.pop();
        }
    }

    recurse(
        0,
        &subsets,
        &mut chosen,
        TermSet::EMPTY,
        full,
        n_vars,
        &mut out,
    );
    out.sort_by(|a, b| {
        a.terms()
            .len()
            .cmp(&b.terms().len())
            .then_with(|| a.terms().cmp(b.terms()))
    });
    out.dedup();
    Ok(out)
}

fn term_lex_key(t: &TermSet) -> Vec<usize> {
    t.vars().collect()
}

/// Terms addable to a hierarchical model: t with |t| >= 2, t not in the
/// downset, and every facet of t already in the downset. One neighbor per
/// addable term, paired with the term.
pub fn forward_neighbors(gc: &GeneratingClass) -> Vec<(TermSet, GeneratingClass)> {
    let n = gc.n_vars();
    let ds: std::collections::HashSet<TermSet> = gc.downset().into_iter().collect();
    let full: u32 = (1 << n) - 1;
    let mut out = Vec::new();
    for mask in 1..=full {
        let t = TermSet(mask);
        if t.len() < 2 || ds.contains(&t) {
            continue;
        }
        if t.facets().all(|f| ds.contains(&f)) {
            let mut terms = gc.terms().to_vec();
            terms.push(t);
            out.push((t, GeneratingClass::new(&terms, n).expect("valid terms")));
        }
    }
    out.sort_by_key(|(t, _)| term_lex_key(t));
    out
}

/// Generators removable from a hierarchical model: any generator with
/// |g| >= 2; the neighbor keeps the rest of the downset. Main effects are
/// never removed.
pub fn backward_neighbors(gc: &GeneratingClass) -> Vec<(TermSet, GeneratingClass)> {
    let n = gc.n_vars();
    let ds = gc.downset();
    let mut out = Vec::new();
    for &g in gc.terms() {
        if g.len() < 2 {
            continue;
        }
        let remaining: Vec<TermSet> = ds.iter().copied().filter(|&t| t != g).collect();
        out.push((g, GeneratingClass::new(&remaining, n).expect("valid terms")));
    }
    out.sort_by_key(|(t, _)| term_lex_key(t));
    out
}

fn round9(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

struct Evaluator<'a> {
    table: &'a ContingencyTable,
    opts: &'a SearchOptions,
    cache: HashMap<Vec<TermSet>, Option<f64>>,
    evaluated: usize,
}

impl<'a> Evaluator<'a> {
    fn new(table: &'a ContingencyTable, opts: &'a SearchOptions) -> Self {
        Evaluator {
            table,
            opts,
            cache: HashMap::new(),
            evaluated: 0,
        }
    }

    /// AIC of a model, or None when IPF failed to converge.
    fn aic(&mut self, gc: &GeneratingClass) -> Result<Option<f64>> {
        if let Some(v) = self.cache.get(gc.terms()) {
            return Ok(*v);
        }
        self.evaluated += 1;
        let fit = ipf_fit(self.table, gc, self.opts.ipf_tol, self.opts.ipf_max_iter)?;
        let v = if fit.converged { Some(fit.aic) } else { None };
        self.cache.insert(gc.terms().to_vec(), v);
        Ok(v)
    }
}

/// Greedy best-improvement stepwise AIC search.
///
/// At each iteration every neighbor (per direction and search space) is
/// evaluated; the search moves to the strict AIC minimizer and stops when no
/// neighbor improves. Ties after rounding AIC to 1e-9 are broken by the
/// lexicographically first moved term or edge, so the search is
/// deterministic.
pub fn stepwise(
    table: &ContingencyTable,
    start: &GeneratingClass,
    direction: Direction,
    opts: &SearchOptions,
) -> Result<SearchTrace> {
    let mut eval = Evaluator::new(table, opts);
    stepwise_with(&mut eval, table, start, direction, opts)
}

fn stepwise_with(
    eval: &mut Evaluator,
    table: &ContingencyTable,
    start: &GeneratingClass,
    direction: Direction,
    opts: &SearchOptions,
) -> Result<SearchTrace> {
    let schema = table.schema();
    if start.n_vars() != schema.len() {
        return Err(Error::Search(
            "start model does not match the table's schema".into(),
        ));
    }
    match opts.space {
        SearchSpace::Hierarchical => {
            let mut current = start.clone();
            let mut current_aic = eval
                .aic(&current)?
                .ok_or_else(|| Error::Search("start model fit did not converge".into()))?;
            let mut steps = Vec::new();
            let mut skipped = Vec::new();
            loop {
                let neighbors = match direction {
                    Direction::Forward => forward_neighbors(&current),
                    Direction::Backward => backward_neighbors(&current),
                };
                let sign = match direction {
                    Direction::Forward => '+',
                    Direction::Backward => '-',
                };
                let mut best: Option<(f64, Vec<usize>, TermSet, GeneratingClass)> = None;
                for (term, neighbor) in neighbors {
                    match eval.aic(&neighbor)? {
                        Some(aic) => {
                            let key = (round9(aic), term_lex_key(&term));
                            if best
                                .as_ref()
                                .map(|(a, k, _, _)| (key.0, &key.1) < (*a, k))
                                .unwrap_or(true)
                            {
                                best = Some((key.0, key.1, term, neighbor));
                            }
                        }
                        None => skipped.push(format!("{sign}[{}]", term.format(schema))),
                    }
                }
                match best {
                    Some((aic, _, term, neighbor)) if aic < round9(current_aic) => {
                        steps.push(SearchStep {
                            movement: format!("{sign}[{}]", term.format(schema)),
                            aic_before: current_aic,
                            aic_after: aic,
                        });
                        current = neighbor;
                        current_aic = aic;
                    }
                    _ => break,
                }
            }
            Ok(SearchTrace {
                direction,
                space: opts.space,
                start: start.format(schema),
                steps,
                final_model: current.format(schema),
                final_aic: current_aic,
                skipped,
                models_evaluated: eval.evaluated,
                final_class: current,
            })
        }
        SearchSpace::Graphical | SearchSpace::Decomposable => {
            type EdgeCandidate = (f64, (usize, usize), Vec<(usize, usize)>, GeneratingClass);
            let n = schema.len();
            let names: Vec<String> = schema.names().iter().map(|s| s.to_string()).collect();
            let all_pairs: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
                .collect();
            // coerce the start to its interaction graph's clique model
            let start_graph = InteractionGraph::from_generating_class(start, &schema.names())?;
            let mut edges: Vec<(usize, usize)> = start_graph.edges();
            let clique_model = |edges: &[(usize, usize)]| -> Result<GeneratingClass> {
                let g = InteractionGraph::new(names.clone(), edges)?;
                GeneratingClass::new(&g.maximal_cliques(), n)
            };
            let mut current = clique_model(&edges)?;
            let mut current_aic = eval
                .aic(&current)?
                .ok_or_else(|| Error::Search("start model fit did not converge".into()))?;
            let mut steps = Vec::new();
            let mut skipped = Vec::new();
            loop {
                let mut best: Option<EdgeCandidate> = None;
                for &pair in &all_pairs {
                    let present = edges.contains(&pair);
                    let include = match direction {
                        Direction::Forward => !present,
                        Direction::Backward => present,
                    };
                    if !include {
                        continue;
                    }
                    let mut new_edges = edges.clone();
                    match direction {
                        Direction::Forward => new_edges.push(pair),
                        Direction::Backward => new_edges.retain(|&e| e != pair),
                    }
                    if opts.space == SearchSpace::Decomposable {
                        let g = InteractionGraph::new(names.clone(), &new_edges)?;
                        if !g.is_chordal() {
                            continue;
                        }
                    }
                    let neighbor = clique_model(&new_edges)?;
                    let sign = match direction {
                        Direction::Forward => '+',
                        Direction::Backward => '-',
                    };
                    match eval.aic(&neighbor)? {
                        Some(aic) => {
                            let key = (round9(aic), pair);
                            if best
                                .as_ref()
                                .map(|(a, p, _, _)| (key.0, key.1) < (*a, *p))
                                .unwrap_or(true)
                            {
                                best = Some((key.0, pair, new_edges, neighbor));
                            }
                        }
                        None => skipped.push(format!("{sign}{}--{}", names[pair.0], names[pair.1])),
                    }
                }
                match best {
                    Some((aic, pair, new_edges, neighbor)) if aic < round9(current_aic) => {
                        let sign = match direction {
                            Direction::Forward => '+',
                            Direction::Backward => '-',
                        };
                        steps.push(SearchStep {
                            movement: format!("{sign}{}--{}", names[pair.0], names[pair.1]),
                            aic_before: current_aic,
                            aic_after: aic,
                        });
                        edges = new_edges;
                        current = neighbor;
                        current_aic = aic;
                    }
                    _ => break,
                }
            }
            Ok(SearchTrace {
                direction,
                space: opts.space,
                start: start.format(schema),
                steps,
                final_model: current.format(schema),
                final_aic: current_aic,
                skipped,
                models_evaluated: eval.evaluated,
                final_class: current,
            })
        }
    }
}

/// Runs forward search from independence and backward search from the
/// saturated model; the result carries both traces and, when the endpoints
/// agree, the common model.
pub fn consensus(table: &ContingencyTable, opts: &SearchOptions) -> Result<ConsensusResult> {
    let n = table.schema().len();
    let mut eval = Evaluator::new(table, opts);
    let forward = stepwise_with(
        &mut eval,
        table,
        &GeneratingClass::independence(n),
        Direction::Forward,
        opts,
    )?;
    let backward = stepwise_with(
        &mut eval,
        table,
        &GeneratingClass::saturated(n),
        Direction::Backward,
        opts,
    )?;
    let agreed_class =
        (forward.final_class == backward.final_class).then(|| forward.final_class.clone());
    let agreed = agreed_class.as_ref().map(|gc| gc.format(table.schema()));
    Ok(ConsensusResult {
        forward,
        backward,
        agreed,
        agreed_class,
    })
}
