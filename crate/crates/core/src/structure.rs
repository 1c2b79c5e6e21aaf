//! Finite structures over a [`Vocabulary`] and the algebra the rest of the
//! crate runs on: reducts, renamings, restriction to a unary predicate,
//! disjoint sums, direct products, and atomic-formula evaluation.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::vocab::{SymbolBijection, SymbolName, Vocabulary};

pub type ElemId = String;
pub type Tuple = Vec<ElemId>;

/// A finite structure: nonempty universe plus total interpretations for every
/// symbol of its vocabulary. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Structure {
    pub name: String,
    pub vocab: Vocabulary,
    pub universe: BTreeSet<ElemId>,
    /// predicate -> set of arity-length tuples
    pub relations: BTreeMap<SymbolName, BTreeSet<Tuple>>,
    /// function -> total map from arity-length tuples to elements; constants
    /// map the empty tuple
    pub functions: BTreeMap<SymbolName, BTreeMap<Tuple, ElemId>>,
}

/// First violated invariant, with the offending tuple or element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub kind: String,
    pub offending: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ValidationReport {
    Ok,
    Violation(Violation),
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        matches!(self, ValidationReport::Ok)
    }
}

/// Outcome of restricting to a unary predicate: the paper's operation is
/// undefined when the predicate is empty or not closed under the functions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Restriction {
    Restricted(Structure),
    Undefined(&'static str),
}

impl Structure {
    pub fn size(&self) -> usize {
        self.universe.len()
    }

    fn violation(kind: &str, offending: impl Into<String>) -> ValidationReport {
        ValidationReport::Violation(Violation {
            kind: kind.to_string(),
            offending: offending.into(),
        })
    }

    /// Check every structure invariant; report the first violation found.
    pub fn validate(&self) -> ValidationReport {
        if self.vocab.validate().is_err() {
            return Self::violation("bad-vocabulary", "");
        }
        if self.universe.is_empty() {
            return Self::violation("empty-universe", self.name.clone());
        }
        for (p, tuples) in &self.relations {
            let Some(&ar) = self.vocab.predicates.get(p) else {
                return Self::violation("unknown-predicate", p.clone());
            };
            for t in tuples {
                if t.len() != ar {
                    return Self::violation("tuple-arity", format!("{p}({})", t.join(",")));
                }
                if t.iter().any(|e| !self.universe.contains(e)) {
                    return Self::violation(
                        "tuple-out-of-universe",
                        format!("{p}({})", t.join(",")),
                    );
                }
            }
        }
        for p in self.vocab.predicates.keys() {
            if !self.relations.contains_key(p) {
                return Self::violation("missing-relation", p.clone());
            }
        }
        for (f, graph) in &self.functions {
            let Some(&ar) = self.vocab.functions.get(f) else {
                return Self::violation("unknown-function", f.clone());
            };
            for (args, val) in graph {
                if args.len() != ar {
                    return Self::violation("tuple-arity", format!("{f}({})", args.join(",")));
                }
                if args.iter().any(|e| !self.universe.contains(e))
                    || !self.universe.contains(val)
                {
                    return Self::violation(
                        "tuple-out-of-universe",
                        format!("{f}({})={val}", args.join(",")),
                    );
                }
            }
            // totality: every arity-tuple over the universe must be mapped
            let expected = self.universe.len().pow(ar as u32);
            if graph.len() != expected {
                return Self::violation("function-not-total", f.clone());
            }
        }
        for f in self.vocab.functions.keys() {
            if !self.functions.contains_key(f) {
                return Self::violation("function-not-total", f.clone());
            }
        }
        ValidationReport::Ok
    }

    /// Same universe, interpretations restricted to a subvocabulary.
    pub fn reduct(&self, sub: &Vocabulary) -> Result<Structure> {
        if !sub.is_subvocabulary_of(&self.vocab) {
            return Err(CoreError::NotSubvocabulary(format!(
                "{} is not a reduct vocabulary of {}",
                serde_json::to_string(sub).unwrap_or_default(),
                self.name
            )));
        }
        Ok(Structure {
            name: self.name.clone(),
            vocab: sub.clone(),
            universe: self.universe.clone(),
            relations: self
                .relations
                .iter()
                .filter(|(n, _)| sub.predicates.contains_key(*n))
                .map(|(n, t)| (n.clone(), t.clone()))
                .collect(),
            functions: self
                .functions
                .iter()
                .filter(|(n, _)| sub.functions.contains_key(*n))
                .map(|(n, g)| (n.clone(), g.clone()))
                .collect(),
        })
    }

    /// Transport interpretations along an arity-preserving symbol bijection.
    pub fn rename(&self, pi: &SymbolBijection) -> Result<Structure> {
        let target = pi.transport(&self.vocab)?;
        pi.check_arities(&self.vocab, &target)?;
        let relations = self
            .relations
            .iter()
            .map(|(n, t)| (pi.predicates[n].clone(), t.clone()))
            .collect();
        let functions = self
            .functions
            .iter()
            .map(|(n, g)| (pi.functions[n].clone(), g.clone()))
            .collect();
        Ok(Structure {
            name: self.name.clone(),
            vocab: target,
            universe: self.universe.clone(),
            relations,
            functions,
        })
    }

    /// Universe P^M; relations intersected; functions kept where arguments
    /// and value stay inside. Undefined when P^M is empty or some function
    /// leaves it.
    pub fn restrict_to_predicate(&self, pred: &str) -> Result<Restriction> {
        match self.vocab.predicates.get(pred) {
            Some(1) => {}
            _ => {
                return Err(CoreError::BadPredicate(format!(
                    "{pred} is absent or not unary in {}",
                    self.name
                )))
            }
        }
        let new_universe: BTreeSet<ElemId> = self.relations[pred]
            .iter()
            .map(|t| t[0].clone())
            .collect();
        if new_universe.is_empty() {
            return Ok(Restriction::Undefined("empty-restriction"));
        }
        let mut functions = BTreeMap::new();
        for (f, graph) in &self.functions {
            let mut g = BTreeMap::new();
            for (args, val) in graph {
                if args.iter().all(|e| new_universe.contains(e)) {
                    if !new_universe.contains(val) {
                        return Ok(Restriction::Undefined("not-closed"));
                    }
                    g.insert(args.clone(), val.clone());
                }
            }
            functions.insert(f.clone(), g);
        }
        let relations = self
            .relations
            .iter()
            .map(|(p, tuples)| {
                (
                    p.clone(),
                    tuples
                        .iter()
                        .filter(|t| t.iter().all(|e| new_universe.contains(e)))
                        .cloned()
                        .collect(),
                )
            })
            .collect();
        Ok(Restriction::Restricted(Structure {
            name: format!("{}|{pred}", self.name),
            vocab: self.vocab.clone(),
            universe: new_universe,
            relations,
            functions,
        }))
    }

    /// Tagged disjoint union; relations are unions of the tagged relations.
    /// Only for relational vocabularies with equal vocab on both sides.
    pub fn disjoint_sum(&self, other: &Structure) -> Result<Structure> {
        if self.vocab != other.vocab {
            return Err(CoreError::VocabMismatch(format!(
                "{} + {}",
                self.name, other.name
            )));
        }
        if !self.vocab.is_relational() {
            return Err(CoreError::FunctionsInSum(format!(
                "{} + {}",
                self.name, other.name
            )));
        }
        let tag = |side: u8, e: &ElemId| format!("{side}:{e}");
        let mut universe = BTreeSet::new();
        for e in &self.universe {
            universe.insert(tag(1, e));
        }
        for e in &other.universe {
            universe.insert(tag(2, e));
        }
        let mut relations: BTreeMap<SymbolName, BTreeSet<Tuple>> = BTreeMap::new();
        for p in self.vocab.predicates.keys() {
            let mut set = BTreeSet::new();
            for t in &self.relations[p] {
                set.insert(t.iter().map(|e| tag(1, e)).collect());
            }
            for t in &other.relations[p] {
                set.insert(t.iter().map(|e| tag(2, e)).collect());
            }
            relations.insert(p.clone(), set);
        }
        Ok(Structure {
            name: format!("({}+{})", self.name, other.name),
            vocab: self.vocab.clone(),
            universe,
            relations,
            functions: BTreeMap::new(),
        })
    }

    /// Cartesian product; predicates hold coordinatewise, functions act
    /// coordinatewise. Pair ids join coordinates with '|'.
    pub fn direct_product(&self, other: &Structure) -> Result<Structure> {
        if self.vocab != other.vocab {
            return Err(CoreError::VocabMismatch(format!(
                "{} x {}",
                self.name, other.name
            )));
        }
        let pair = |a: &ElemId, b: &ElemId| format!("{a}|{b}");
        let mut universe = BTreeSet::new();
        for a in &self.universe {
            for b in &other.universe {
                universe.insert(pair(a, b));
            }
        }
        let mut relations: BTreeMap<SymbolName, BTreeSet<Tuple>> = BTreeMap::new();
        for (p, &ar) in &self.vocab.predicates {
            let mut set = BTreeSet::new();
            for t1 in &self.relations[p] {
                for t2 in &other.relations[p] {
                    let t: Tuple = (0..ar).map(|i| pair(&t1[i], &t2[i])).collect();
                    set.insert(t);
                }
            }
            relations.insert(p.clone(), set);
        }
        let mut functions: BTreeMap<SymbolName, BTreeMap<Tuple, ElemId>> = BTreeMap::new();
        for (f, &ar) in &self.vocab.functions {
            let mut graph = BTreeMap::new();
            for (args1, val1) in &self.functions[f] {
                for (args2, val2) in &other.functions[f] {
                    let args: Tuple = (0..ar).map(|i| pair(&args1[i], &args2[i])).collect();
                    graph.insert(args, pair(val1, val2));
                }
            }
            functions.insert(f.clone(), graph);
        }
        Ok(Structure {
            name: format!("({}x{})", self.name, other.name),
            vocab: self.vocab.clone(),
            universe,
            relations,
            functions,
        })
    }

    /// Isomorphic copy along a bijective relabelling of the universe.
    pub fn relabel_elements(&self, map: &BTreeMap<ElemId, ElemId>) -> Result<Structure> {
        let get = |e: &ElemId| -> Result<ElemId> {
            map.get(e)
                .cloned()
                .ok_or_else(|| CoreError::InvalidInput(format!("relabel misses {e}")))
        };
        let universe: BTreeSet<ElemId> = self
            .universe
            .iter()
            .map(get)
            .collect::<Result<_>>()?;
        if universe.len() != self.universe.len() {
            return Err(CoreError::InvalidInput("relabel not injective".into()));
        }
        let mut relations = BTreeMap::new();
        for (p, tuples) in &self.relations {
            let mut set = BTreeSet::new();
            for t in tuples {
                set.insert(t.iter().map(get).collect::<Result<Tuple>>()?);
            }
            relations.insert(p.clone(), set);
        }
        let mut functions = BTreeMap::new();
        for (f, graph) in &self.functions {
            let mut g2 = BTreeMap::new();
            for (args, val) in graph {
                g2.insert(args.iter().map(get).collect::<Result<Tuple>>()?, get(val)?);
            }
            functions.insert(f.clone(), g2);
        }
        Ok(Structure {
            name: format!("{}~", self.name),
            vocab: self.vocab.clone(),
            universe,
            relations,
            functions,
        })
    }
}

/// Atomic formulas in the three shapes the games evaluate: P(x̄), x_i = x_j,
/// and x_out = F(x̄). Variables are indices into an assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AtomicFormula {
    Pred { pred: SymbolName, vars: Vec<usize> },
    VarEq { left: usize, right: usize },
    FnApp { out: usize, func: SymbolName, args: Vec<usize> },
}

/// Standard Tarskian truth of an atomic formula in `s` under `assignment`.
pub fn eval_atomic(s: &Structure, phi: &AtomicFormula, assignment: &[&ElemId]) -> Result<bool> {
    let var = |i: usize| -> Result<&ElemId> {
        assignment
            .get(i)
            .copied()
            .ok_or_else(|| CoreError::UnboundVariable(format!("x{i}")))
    };
    match phi {
        AtomicFormula::Pred { pred, vars } => {
            let tuples = s
                .relations
                .get(pred)
                .ok_or_else(|| CoreError::BadPredicate(pred.clone()))?;
            let t: Tuple = vars
                .iter()
                .map(|&i| var(i).cloned())
                .collect::<Result<_>>()?;
            Ok(tuples.contains(&t))
        }
        AtomicFormula::VarEq { left, right } => Ok(var(*left)? == var(*right)?),
        AtomicFormula::FnApp { out, func, args } => {
            let graph = s
                .functions
                .get(func)
                .ok_or_else(|| CoreError::BadPredicate(func.clone()))?;
            let t: Tuple = args
                .iter()
                .map(|&i| var(i).cloned())
                .collect::<Result<_>>()?;
            Ok(graph.get(&t) == Some(var(*out)?))
        }
    }
}

/// Convenience builder used all over the tests and the corpus generators.
pub struct StructureBuilder {
    s: Structure,
}

impl StructureBuilder {
    pub fn new(name: &str, vocab: Vocabulary, universe: &[&str]) -> Self {
        let mut relations = BTreeMap::new();
        for p in vocab.predicates.keys() {
            relations.insert(p.clone(), BTreeSet::new());
        }
        let functions = vocab
            .functions
            .keys()
            .map(|f| (f.clone(), BTreeMap::new()))
            .collect();
        StructureBuilder {
            s: Structure {
                name: name.to_string(),
                vocab,
                universe: universe.iter().map(|e| e.to_string()).collect(),
                relations,
                functions,
            },
        }
    }

    pub fn tuple(mut self, pred: &str, tuple: &[&str]) -> Self {
        self.s
            .relations
            .get_mut(pred)
            .expect("unknown predicate")
            .insert(tuple.iter().map(|e| e.to_string()).collect());
        self
    }

    pub fn map(mut self, func: &str, args: &[&str], val: &str) -> Self {
        self.s
            .functions
            .get_mut(func)
            .expect("unknown function")
            .insert(
                args.iter().map(|e| e.to_string()).collect(),
                val.to_string(),
            );
        self
    }

    pub fn constant(self, func: &str, val: &str) -> Self {
        self.map(func, &[], val)
    }

    pub fn build(self) -> Structure {
        debug_assert!(self.s.validate().is_ok(), "{:?}", self.s.validate());
        self.s
    }

    /// Build without the totality debug assertion (for invalid fixtures).
    pub fn build_unchecked(self) -> Structure {
        self.s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn digraph_vocab() -> Vocabulary {
        Vocabulary::new().with_predicate("E", 2)
    }

    fn one_loop() -> Structure {
        StructureBuilder::new("loop1", digraph_vocab(), &["a"])
            .tuple("E", &["a", "a"])
            .build()
    }

    #[test]
    fn smallest_legal_structure_validates() {
        assert!(one_loop().validate().is_ok());
    }

    #[test]
    fn tuple_out_of_universe_reported() {
        let s = StructureBuilder::new("bad", digraph_vocab(), &["a"])
            .tuple("E", &["a", "z"])
            .build_unchecked();
        match s.validate() {
            ValidationReport::Violation(v) => assert_eq!(v.kind, "tuple-out-of-universe"),
            _ => panic!("expected violation"),
        }
    }

    #[test]
    fn missing_function_tuple_reported() {
        let vocab = Vocabulary::new().with_function("F", 1);
        let s = StructureBuilder::new("bad", vocab, &["a", "b"])
            .map("F", &["a"], "a")
            .build_unchecked();
        match s.validate() {
            ValidationReport::Violation(v) => assert_eq!(v.kind, "function-not-total"),
            _ => panic!("expected violation"),
        }
    }

    #[test]
    fn reduct_drops_symbols_and_identity_case() {
        let vocab = Vocabulary::new().with_predicate("E", 2).with_predicate("P", 1);
        let s = StructureBuilder::new("s", vocab.clone(), &["a", "b"])
            .tuple("E", &["a", "b"])
            .tuple("P", &["a"])
            .build();
        let only_e = Vocabulary::new().with_predicate("E", 2);
        let r = s.reduct(&only_e).unwrap();
        assert_eq!(r.universe, s.universe);
        assert!(r.relations.contains_key("E") && !r.relations.contains_key("P"));
        // identity case
        assert_eq!(s.reduct(&vocab).unwrap().relations, s.relations);
        // empty vocabulary: pure set
        let empty = s.reduct(&Vocabulary::new()).unwrap();
        assert!(empty.relations.is_empty() && empty.functions.is_empty());
        // not a subvocabulary
        let bad = Vocabulary::new().with_predicate("Q", 1);
        assert!(matches!(s.reduct(&bad), Err(CoreError::NotSubvocabulary(_))));
    }

    #[test]
    fn rename_transports_and_roundtrips() {
        let s = one_loop();
        let mut pi = SymbolBijection::default();
        pi.predicates.insert("E".into(), "R".into());
        let renamed = s.rename(&pi).unwrap();
        assert!(renamed.relations["R"].contains(&vec!["a".to_string(), "a".to_string()]));
        let back = renamed.rename(&pi.inverse()).unwrap();
        assert_eq!(back.relations, s.relations);
        assert_eq!(back.vocab, s.vocab);
        // identity renaming
        let id = SymbolBijection::identity(&s.vocab);
        assert_eq!(s.rename(&id).unwrap().relations, s.relations);
    }

    #[test]
    fn restrict_full_empty_and_not_closed() {
        let vocab = Vocabulary::new()
            .with_predicate("P", 1)
            .with_function("F", 1);
        // P covers the universe: restriction keeps everything
        let full = StructureBuilder::new("full", vocab.clone(), &["a", "b"])
            .tuple("P", &["a"])
            .tuple("P", &["b"])
            .map("F", &["a"], "b")
            .map("F", &["b"], "a")
            .build();
        match full.restrict_to_predicate("P").unwrap() {
            Restriction::Restricted(r) => assert_eq!(r.universe, full.universe),
            _ => panic!("expected a structure"),
        }
        // empty P
        let empty = StructureBuilder::new("empty", vocab.clone(), &["a"])
            .map("F", &["a"], "a")
            .build();
        assert_eq!(
            empty.restrict_to_predicate("P").unwrap(),
            Restriction::Undefined("empty-restriction")
        );
        // P = {a} but F(a) = b escapes
        let open = StructureBuilder::new("open", vocab, &["a", "b"])
            .tuple("P", &["a"])
            .map("F", &["a"], "b")
            .map("F", &["b"], "b")
            .build();
        assert_eq!(
            open.restrict_to_predicate("P").unwrap(),
            Restriction::Undefined("not-closed")
        );
        // bad predicate
        assert!(one_loop().restrict_to_predicate("E").is_err());
    }

    fn linear_order(name: &str, ids: &[&str]) -> Structure {
        let vocab = Vocabulary::new().with_predicate("<", 2);
        let mut b = StructureBuilder::new(name, vocab, ids);
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                b = b.tuple("<", &[ids[i], ids[j]]);
            }
        }
        b.build()
    }

    #[test]
    fn disjoint_sum_of_orders_has_no_cross_pairs() {
        let l2 = linear_order("L2", &["a", "b"]);
        let l3 = linear_order("L3", &["x", "y", "z"]);
        let sum = l2.disjoint_sum(&l3).unwrap();
        assert_eq!(sum.size(), 5);
        assert_eq!(sum.relations["<"].len(), 1 + 3);
        assert!(sum.relations["<"].iter().all(|t| {
            t[0].starts_with("1:") == t[1].starts_with("1:")
        }));
        // m + m doubles
        let mm = l2.disjoint_sum(&l2).unwrap();
        assert_eq!(mm.size(), 4);
        assert_eq!(mm.relations["<"].len(), 2);
    }

    #[test]
    fn sum_rejects_constants_and_vocab_mismatch() {
        let vocab = Vocabulary::new().with_predicate("P", 1).with_constant("c");
        let s = StructureBuilder::new("s", vocab, &["a"])
            .constant("c", "a")
            .build();
        assert!(matches!(
            s.disjoint_sum(&s),
            Err(CoreError::FunctionsInSum(_))
        ));
        let l2 = linear_order("L2", &["a", "b"]);
        assert!(matches!(
            l2.disjoint_sum(&one_loop()),
            Err(CoreError::VocabMismatch(_))
        ));
    }

    #[test]
    fn product_is_coordinatewise_on_all_sixteen_pairs() {
        // brute-force oracle: enumerate all pairs of product elements and
        // compare against the coordinatewise rule
        let l2 = linear_order("L2", &["a", "b"]);
        let p = l2.direct_product(&l2).unwrap();
        assert_eq!(p.size(), 4);
        let elems: Vec<&ElemId> = p.universe.iter().collect();
        let mut checked = 0;
        for x in &elems {
            for y in &elems {
                let (x1, x2) = x.split_once('|').unwrap();
                let (y1, y2) = y.split_once('|').unwrap();
                let coord = l2.relations["<"].contains(&vec![x1.to_string(), y1.to_string()])
                    && l2.relations["<"].contains(&vec![x2.to_string(), y2.to_string()]);
                let in_product = p.relations["<"].contains(&vec![(*x).clone(), (*y).clone()]);
                assert_eq!(coord, in_product, "{x} < {y}");
                checked += 1;
            }
        }
        assert_eq!(checked, 16);
    }

    #[test]
    fn product_constants_act_coordinatewise() {
        let vocab = Vocabulary::new().with_predicate("P", 1).with_constant("c");
        let m1 = StructureBuilder::new("m1", vocab.clone(), &["a", "b"])
            .tuple("P", &["a"])
            .constant("c", "a")
            .build();
        let m2 = StructureBuilder::new("m2", vocab, &["x"])
            .constant("c", "x")
            .build();
        let p = m1.direct_product(&m2).unwrap();
        assert_eq!(p.functions["c"][&Vec::<ElemId>::new()], "a|x");
    }

    #[test]
    fn eval_atomic_shapes() {
        let vocab = Vocabulary::new()
            .with_predicate("E", 2)
            .with_function("F", 1);
        let s = StructureBuilder::new("s", vocab, &["a", "b"])
            .tuple("E", &["a", "b"])
            .map("F", &["a"], "a")
            .map("F", &["b"], "a")
            .build();
        let a = "a".to_string();
        let b = "b".to_string();
        // x0 = x0 is true under any assignment
        assert!(eval_atomic(&s, &AtomicFormula::VarEq { left: 0, right: 0 }, &[&b]).unwrap());
        // E(x0, x1) with (a, b)
        let e = AtomicFormula::Pred { pred: "E".into(), vars: vec![0, 1] };
        assert!(eval_atomic(&s, &e, &[&a, &b]).unwrap());
        assert!(!eval_atomic(&s, &e, &[&b, &a]).unwrap());
        // x0 = F(x1) with F(b) = a
        let f = AtomicFormula::FnApp { out: 0, func: "F".into(), args: vec![1] };
        assert!(eval_atomic(&s, &f, &[&a, &b]).unwrap());
        // unbound variable
        assert!(matches!(
            eval_atomic(&s, &e, &[&a]),
            Err(CoreError::UnboundVariable(_))
        ));
    }

    #[test]
    fn relabel_produces_isomorphic_copy() {
        let l2 = linear_order("L2", &["a", "b"]);
        let map: BTreeMap<ElemId, ElemId> =
            [("a".into(), "q".into()), ("b".into(), "r".into())].into();
        let c = l2.relabel_elements(&map).unwrap();
        assert!(c.validate().is_ok());
        assert!(c.relations["<"].contains(&vec!["q".to_string(), "r".to_string()]));
    }
}
