//! Interaction graphs of generating classes: graphicality testing,
//! separation, weak decompositions, and mediator-candidate extraction.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::loglin::{GeneratingClass, TermSet};

/// Undirected simple graph over named vertices, adjacency stored as bitmasks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionGraph {
    vertices: Vec<String>,
    adj: Vec<TermSet>,
}

/// A split (A, B, C) of the vertex set: B is complete, separates A from C,
/// and A, C are nonempty.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeakDecomposition {
    pub a: TermSet,
    pub b: TermSet,
    pub c: TermSet,
}

#[derive(Serialize)]
pub struct GraphJson {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
}

#[derive(Serialize)]
pub struct DecompositionJson {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub c: Vec<String>,
}

impl InteractionGraph {
    pub fn new(vertices: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = vertices.len();
        if n > 32 {
            return Err(Error::Model("graphs support at most 32 vertices".into()));
        }
        let mut adj = vec![TermSet::EMPTY; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Model("edge endpoint out of range".into()));
            }
            if u == v {
                return Err(Error::Model("loops are not allowed".into()));
            }
            adj[u] = adj[u].union(&TermSet::singleton(v));
            adj[v] = adj[v].union(&TermSet::singleton(u));
        }
        Ok(InteractionGraph { vertices, adj })
    }

    /// The interaction graph of a generating class: an edge joins two
    /// variables iff they appear together in some generator.
    pub fn from_generating_class(gc: &GeneratingClass, names: &[&str]) -> Result<Self> {
        if names.len() != gc.n_vars() {
            return Err(Error::Model(
                "vertex names do not match variable count".into(),
            ));
        }
        let mut edges = Vec::new();
        for term in gc.terms() {
            let vars: Vec<usize> = term.vars().collect();
            for i in 0..vars.len() {
                for j in i + 1..vars.len() {
                    edges.push((vars[i], vars[j]));
                }
            }
        }
        InteractionGraph::new(names.iter().map(|s| s.to_string()).collect(), &edges)
    }

    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == name)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].contains(v)
    }

    pub fn neighbors(&self, v: usize) -> TermSet {
        self.adj[v]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n() {
            for v in u + 1..self.n() {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    fn full_set(&self) -> TermSet {
        TermSet((1u64.wrapping_shl(self.n() as u32) - 1) as u32)
    }

    /// True when every pair in `set` is joined by an edge.
    pub fn is_complete(&self, set: TermSet) -> bool {
        set.vars().all(|u| {
            set.minus(&TermSet::singleton(u))
                .vars()
                .all(|v| self.has_edge(u, v))
        })
    }

    /// All inclusion-maximal cliques (Bron-Kerbosch with pivoting); isolated
    /// vertices appear as singleton cliques. Sorted by (size desc, mask asc).
    pub fn maximal_cliques(&self) -> Vec<TermSet> {
        let mut out = Vec::new();
        self.bron_kerbosch(TermSet::EMPTY, self.full_set(), TermSet::EMPTY, &mut out);
        out.sort_by(|a, b| b.len().cmp(&a.len()).then(a.0.cmp(&b.0)));
        out
    }

    fn bron_kerbosch(&self, r: TermSet, p: TermSet, x: TermSet, out: &mut Vec<TermSet>) {
        if p.is_empty() && x.is_empty() {
            out.push(r);
            return;
        }
        // pivot: vertex of P union X with the most neighbors in P
        let pivot = p
            .union(&x)
            .vars()
            .max_by_key(|&u| self.adj[u].intersect(&p).len())
            .expect("P union X nonempty");
        let candidates = p.minus(&self.adj[pivot]);
        let mut p = p;
        let mut x = x;
        for v in candidates.vars() {
            let sv = TermSet::singleton(v);
            self.bron_kerbosch(
                r.union(&sv),
                p.intersect(&self.adj[v]),
                x.intersect(&self.adj[v]),
                out,
            );
            p = p.minus(&sv);
            x = x.union(&sv);
        }
    }

    /// Connected components of the subgraph induced by dropping `removed`.
    pub fn components_without(&self, removed: TermSet) -> Vec<TermSet> {
        let mut remaining = self.full_set().minus(&removed);
        let mut out = Vec::new();
        while let Some(start) = remaining.vars().next() {
            let mut comp = TermSet::singleton(start);
            let mut frontier = comp;
            while !frontier.is_empty() {
                let mut next = TermSet::EMPTY;
                for v in frontier.vars() {
                    next = next.union(&self.adj[v].intersect(&remaining).minus(&comp));
                }
                comp = comp.union(&next);
                frontier = next;
            }
            out.push(comp);
            remaining = remaining.minus(&comp);
        }
        out
    }

    /// True iff every path from a vertex of `a` to a vertex of `c` passes
    /// through `b`. Requires (a, b, c) to partition the vertex set.
    pub fn separates(&self, a: TermSet, b: TermSet, c: TermSet) -> Result<bool> {
        let full = self.full_set();
        if a.union(&b).union(&c) != full
            || !a.intersect(&b).is_empty()
            || !a.intersect(&c).is_empty()
            || !b.intersect(&c).is_empty()
        {
            return Err(Error::Model(
                "separates requires (a, b, c) to be a disjoint cover of the vertices".into(),
            ));
        }
        // reachability in G - b
        Ok(self
            .components_without(b)
            .iter()
            .all(|comp| comp.intersect(&a).is_empty() || comp.intersect(&c).is_empty()))
    }

    /// All weak decompositions (A, B, C): B a complete (possibly empty)
    /// separator, A and C nonempty. Each unordered {A, C} split appears once,
    /// canonicalized so A contains the lowest-indexed vertex outside B.
    /// Sorted by (|B|, B, A) for stable output.
    ///
    /// Enumerates every complete subset, so it is exact and intended for
    /// small graphs (roughly a dozen vertices).
    pub fn weak_decompositions(&self) -> Vec<WeakDecomposition> {
        let n = self.n();
        let mut out = Vec::new();
        for mask in 0..(1u64 << n) {
            let b = TermSet(mask as u32);
            if b.len() >= n - 1 || !self.is_complete(b) {
                continue;
            }
            let comps = self.components_without(b);
            if comps.len() < 2 {
                continue;
            }
            // bipartitions of components; component 0 holds the lowest vertex
            // outside B and is pinned to the A side
            let k = comps.len();
            for split in 0..(1u64 << (k - 1)) {
                let assignment = (split << 1) | 1;
                if assignment == (1u64 << k) - 1 {
                    continue; // C side empty
                }
                let mut a = TermSet::EMPTY;
                let mut c = TermSet::EMPTY;
                for (i, comp) in comps.iter().enumerate() {
                    if assignment >> i & 1 == 1 {
                        a = a.union(comp);
                    } else {
                        c = c.union(comp);
                    }
                }
                out.push(WeakDecomposition { a, b, c });
            }
        }
        out.sort_by(|x, y| {
            x.b.len()
                .cmp(&y.b.len())
                .then(x.b.0.cmp(&y.b.0))
                .then(x.a.0.cmp(&y.a.0))
        });
        out
    }

    /// Candidate mediator sets for a treatment variable: the inclusion-minimal
    /// complete separators B over all weak decompositions in which the
    /// treatment is alone on one side. An empty B means the treatment is
    /// disconnected and no mediator is needed.
    pub fn mediator_candidates(&self, treatment: &str) -> Result<Vec<TermSet>> {
        let t = self
            .vertex_index(treatment)
            .ok_or_else(|| Error::Model(format!("unknown treatment variable '{treatment}'")))?;
        let target = TermSet::singleton(t);
        let mut seps: Vec<TermSet> = self
            .weak_decompositions()
            .into_iter()
            .filter(|d| d.a == target || d.c == target)
            .map(|d| d.b)
            .collect();
        seps.sort_by(|x, y| x.len().cmp(&y.len()).then(x.0.cmp(&y.0)));
        seps.dedup();
        let minimal: Vec<TermSet> = seps
            .iter()
            .filter(|s| !seps.iter().any(|o| o != *s && o.is_subset_of(s)))
            .copied()
            .collect();
        Ok(minimal)
    }

    /// Chordality via repeated simplicial-vertex elimination.
    pub fn is_chordal(&self) -> bool {
        let mut remaining = self.full_set();
        while !remaining.is_empty() {
            let simplicial = remaining
                .vars()
                .find(|&v| self.is_complete(self.adj[v].intersect(&remaining)));
            match simplicial {
                Some(v) => remaining = remaining.minus(&TermSet::singleton(v)),
                None => return false,
            }
        }
        true
    }

    pub fn names_of(&self, set: TermSet) -> Vec<String> {
        set.vars().map(|v| self.vertices[v].clone()).collect()
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            vertices: self.vertices.clone(),
            edges: self
                .edges()
                .into_iter()
                .map(|(u, v)| (self.vertices[u].clone(), self.vertices[v].clone()))
                .collect(),
        }
    }

    pub fn decomposition_json(&self, d: &WeakDecomposition) -> DecompositionJson {
        DecompositionJson {
            a: self.names_of(d.a),
            b: self.names_of(d.b),
            c: self.names_of(d.c),
        }
    }

    /// Graphviz DOT rendering; isolated vertices are listed explicitly.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph interaction {\n");
        for (v, name) in self.vertices.iter().enumerate() {
            if self.adj[v].is_empty() {
                out.push_str(&format!("  \"{name}\";\n"));
            }
        }
        for (u, v) in self.edges() {
            out.push_str(&format!(
                "  \"{}\" -- \"{}\";\n",
                self.vertices[u], self.vertices[v]
            ));
        }
        out.push_str("}\n");
        out
    }
}

/// A hierarchical model is graphical iff the maximal cliques of its
/// interaction graph coincide with its generators.
pub fn is_graphical(gc: &GeneratingClass, names: &[&str]) -> Result<bool> {
    let graph = InteractionGraph::from_generating_class(gc, names)?;
    let mut cliques = graph.maximal_cliques();
    let mut terms = gc.terms().to_vec();
    cliques.sort_by_key(|t| t.0);
    terms.sort_by_key(|t| t.0);
    Ok(cliques == terms)
}
