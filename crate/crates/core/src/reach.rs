//! Per-trace vertex and edge reachability with memoized descendant sets.

use fixedbitset::FixedBitSet;

use crate::error::ModelError;
use crate::model::{Edge, Trace};

/// Reachability queries over one trace.
///
/// Descendant sets are computed on first use and cached for the lifetime of
/// the value, so one instance should serve all queries against a trace.
pub struct Reachability<'t> {
    trace: &'t Trace,
    memo: Vec<Option<FixedBitSet>>,
}

impl<'t> Reachability<'t> {
    pub fn new(trace: &'t Trace) -> Self {
        Reachability {
            trace,
            memo: vec![None; trace.events().len()],
        }
    }

    pub fn trace(&self) -> &'t Trace {
        self.trace
    }

    /// All vertices reachable from `v`, including `v` itself.
    pub fn descendants(&mut self, v: usize) -> &FixedBitSet {
        if self.memo[v].is_none() {
            self.fill(v);
        }
        self.memo[v].as_ref().expect("filled above")
    }

    fn fill(&mut self, start: usize) {
        let n = self.trace.events().len();
        // Iterative post-order: a vertex is finalized after all its children.
        let mut stack = vec![(start, false)];
        while let Some((v, expanded)) = stack.pop() {
            if self.memo[v].is_some() {
                continue;
            }
            if expanded {
                let mut set = FixedBitSet::with_capacity(n);
                set.insert(v);
                for &c in self.trace.children(v) {
                    set.union_with(self.memo[c].as_ref().expect("child finalized first"));
                }
                self.memo[v] = Some(set);
            } else {
                stack.push((v, true));
                for &c in self.trace.children(v) {
                    if self.memo[c].is_none() {
                        stack.push((c, false));
                    }
                }
            }
        }
    }

    /// Reflexive vertex reachability.
    pub fn vertex_reaches(&mut self, from: usize, to: usize) -> bool {
        from == to || self.descendants(from).contains(to)
    }

    /// True iff `e2` is downstream of `e1`: the target of `e1` equals or
    /// reaches the source of `e2`. Irreflexive.
    pub fn edge_reaches(&mut self, e1: Edge, e2: Edge) -> Result<bool, ModelError> {
        for e in [e1, e2] {
            if !self.trace.has_edge(e) {
                return Err(ModelError::EdgeNotInTrace {
                    trace_id: self.trace.trace_id().to_string(),
                    from: e.source,
                    to: e.target,
                });
            }
        }
        if e1 == e2 {
            return Ok(false);
        }
        Ok(self.vertex_reaches(e1.target, e2.source))
    }

    /// First `(cause, effect)` with `cause` in `causes` reaching `effect` in
    /// `effects`. Edges must belong to the trace.
    pub fn find_witness(&mut self, causes: &[Edge], effects: &[Edge]) -> Option<(Edge, Edge)> {
        for &cause in causes {
            for &effect in effects {
                if cause != effect && self.vertex_reaches(cause.target, effect.source) {
                    return Some((cause, effect));
                }
            }
        }
        None
    }
}
