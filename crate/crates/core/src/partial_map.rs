//! Injective partial maps between structure universes and the Γ-preservation
//! predicate (clause B(f)) that drives every game.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::structure::{ElemId, Structure};

/// Which formula set Γ the game preserves: at(τ) is the atomic formulas,
/// bs(τ) adds their negations. Since preservation is an iff in both
/// directions, the two induce the same predicate; both are exposed and their
/// agreement is a tested invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMode {
    At,
    Bs,
}

/// A finite injective partial map from one universe to another.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartialMap {
    pairs: BTreeMap<ElemId, ElemId>,
}

impl PartialMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (ElemId, ElemId)>>(pairs: I) -> Option<Self> {
        let mut m = PartialMap::new();
        for (a, b) in pairs {
            if !m.insert(a, b) {
                return None;
            }
        }
        Some(m)
    }

    /// Insert a pair; false if it would break functionality or injectivity.
    pub fn insert(&mut self, a: ElemId, b: ElemId) -> bool {
        if let Some(existing) = self.pairs.get(&a) {
            return *existing == b;
        }
        if self.pairs.values().any(|v| *v == b) {
            return false;
        }
        self.pairs.insert(a, b);
        true
    }

    pub fn get(&self, a: &ElemId) -> Option<&ElemId> {
        self.pairs.get(a)
    }

    pub fn contains_source(&self, a: &ElemId) -> bool {
        self.pairs.contains_key(a)
    }

    pub fn contains_target(&self, b: &ElemId) -> bool {
        self.pairs.values().any(|v| v == b)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ElemId, &ElemId)> {
        self.pairs.iter()
    }

    pub fn domain(&self) -> impl Iterator<Item = &ElemId> {
        self.pairs.keys()
    }

    pub fn range(&self) -> impl Iterator<Item = &ElemId> {
        self.pairs.values()
    }

    pub fn inverse(&self) -> PartialMap {
        PartialMap {
            pairs: self.pairs.iter().map(|(a, b)| (b.clone(), a.clone())).collect(),
        }
    }
}

/// The pair list the preservation check ranges over: g plus the anchored
/// constant pairs (c^M1, c^M2). Atoms may take individual constants as
/// arguments, so constants are bound into the correspondence even when g is
/// empty; that is what makes atomic sentences over constants checkable.
fn anchored_pairs(m1: &Structure, m2: &Structure, g: &PartialMap) -> Vec<(ElemId, ElemId)> {
    let mut pairs: Vec<(ElemId, ElemId)> =
        g.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
    for c in m1.vocab.constants() {
        let v1 = m1.functions[c][&Vec::<ElemId>::new()].clone();
        let v2 = m2.functions[c][&Vec::<ElemId>::new()].clone();
        if !pairs.contains(&(v1.clone(), v2.clone())) {
            pairs.push((v1, v2));
        }
    }
    pairs
}

fn tuples_over<'a>(pairs: &'a [(ElemId, ElemId)], len: usize) -> Vec<Vec<&'a (ElemId, ElemId)>> {
    let mut out: Vec<Vec<&(ElemId, ElemId)>> = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::with_capacity(out.len() * pairs.len());
        for prefix in &out {
            for p in pairs {
                let mut t = prefix.clone();
                t.push(p);
                next.push(t);
            }
        }
        out = next;
    }
    out
}

/// Clause B(f): g preserves satisfaction of the formulas in Γ and their
/// negations — for every atom φ(x̄) and every x̄-tuple ā from dom(g) (with
/// constants usable in argument slots), M1 ⊨ φ[ā] iff M2 ⊨ φ[g(ā)].
/// Sentences (atoms over constants only) are checked even when g is empty.
pub fn preserves_gamma(m1: &Structure, m2: &Structure, g: &PartialMap, mode: GammaMode) -> bool {
    // at vs bs: the iff covers negations, so the mode does not change the
    // predicate; it is threaded through for interface fidelity.
    let _ = mode;
    let pairs = anchored_pairs(m1, m2, g);

    // equality atoms: the anchored relation must be well defined + injective
    for (x1, y1) in &pairs {
        for (x2, y2) in &pairs {
            if (x1 == x2) != (y1 == y2) {
                return false;
            }
        }
    }

    // predicate atoms
    for (p, &ar) in &m1.vocab.predicates {
        for t in tuples_over(&pairs, ar) {
            let t1: Vec<ElemId> = t.iter().map(|(a, _)| a.clone()).collect();
            let t2: Vec<ElemId> = t.iter().map(|(_, b)| b.clone()).collect();
            if m1.relations[p].contains(&t1) != m2.relations[p].contains(&t2) {
                return false;
            }
        }
    }

    // function-graph atoms x0 = F(x1..xn)
    for (f, &ar) in &m1.vocab.functions {
        for t in tuples_over(&pairs, ar + 1) {
            let args1: Vec<ElemId> = t[1..].iter().map(|(a, _)| a.clone()).collect();
            let args2: Vec<ElemId> = t[1..].iter().map(|(_, b)| b.clone()).collect();
            let lhs = m1.functions[f].get(&args1) == Some(&t[0].0);
            let rhs = m2.functions[f].get(&args2) == Some(&t[0].1);
            if lhs != rhs {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::StructureBuilder;
    use crate::vocab::Vocabulary;

    #[test]
    fn empty_map_constant_free_is_vacuous() {
        let vocab = Vocabulary::new().with_predicate("E", 2);
        let m1 = StructureBuilder::new("m1", vocab.clone(), &["a"])
            .tuple("E", &["a", "a"])
            .build();
        let m2 = StructureBuilder::new("m2", vocab, &["x"]).build();
        assert!(preserves_gamma(&m1, &m2, &PartialMap::new(), GammaMode::At));
        assert!(preserves_gamma(&m1, &m2, &PartialMap::new(), GammaMode::Bs));
    }

    #[test]
    fn constant_sentence_disagreement_fails_with_empty_map() {
        let vocab = Vocabulary::new().with_predicate("P", 1).with_constant("c");
        let m1 = StructureBuilder::new("m1", vocab.clone(), &["a"])
            .tuple("P", &["a"])
            .constant("c", "a")
            .build();
        let m2 = StructureBuilder::new("m2", vocab, &["a"])
            .constant("c", "a")
            .build();
        assert!(!preserves_gamma(&m1, &m2, &PartialMap::new(), GammaMode::At));
    }

    #[test]
    fn isomorphism_restriction_preserves() {
        let vocab = Vocabulary::new().with_predicate("E", 2);
        let m = StructureBuilder::new("m", vocab, &["a", "b"])
            .tuple("E", &["a", "b"])
            .build();
        let g = PartialMap::from_pairs([("a".to_string(), "a".to_string())]).unwrap();
        assert!(preserves_gamma(&m, &m, &g, GammaMode::Bs));
        let swap = PartialMap::from_pairs([("a".to_string(), "b".to_string())]).unwrap();
        // a has an outgoing edge only to b; mapping a to b alone is still
        // atomic-consistent over the single pair (E(a,a)=false, E(b,b)=false)
        assert!(preserves_gamma(&m, &m, &swap, GammaMode::Bs));
        let both = PartialMap::from_pairs([
            ("a".to_string(), "b".to_string()),
            ("b".to_string(), "a".to_string()),
        ])
        .unwrap();
        assert!(!preserves_gamma(&m, &m, &both, GammaMode::Bs));
    }

    #[test]
    fn function_graph_preservation() {
        let vocab = Vocabulary::new().with_function("F", 1);
        let m1 = StructureBuilder::new("m1", vocab.clone(), &["a", "b"])
            .map("F", &["a"], "b")
            .map("F", &["b"], "b")
            .build();
        let m2 = StructureBuilder::new("m2", vocab, &["x", "y"])
            .map("F", &["x"], "x")
            .map("F", &["y"], "y")
            .build();
        let g = PartialMap::from_pairs([
            ("a".to_string(), "x".to_string()),
            ("b".to_string(), "y".to_string()),
        ])
        .unwrap();
        // F(a)=b vs F(x)=y fails in m2 (F(x)=x)
        assert!(!preserves_gamma(&m1, &m2, &g, GammaMode::At));
    }
}
