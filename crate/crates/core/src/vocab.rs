use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

pub type SymbolName = String;

/// A finite relational-functional signature. Individual constants are
/// zero-place function symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    /// predicate name -> arity (>= 1)
    pub predicates: BTreeMap<SymbolName, usize>,
    /// function name -> arity (>= 0; arity 0 means constant)
    pub functions: BTreeMap<SymbolName, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_predicate(mut self, name: &str, arity: usize) -> Self {
        self.predicates.insert(name.to_string(), arity);
        self
    }

    pub fn with_function(mut self, name: &str, arity: usize) -> Self {
        self.functions.insert(name.to_string(), arity);
        self
    }

    pub fn with_constant(self, name: &str) -> Self {
        self.with_function(name, 0)
    }

    /// Names must be unique across predicates and functions; predicate
    /// arities must be >= 1.
    pub fn validate(&self) -> Result<()> {
        for (p, ar) in &self.predicates {
            if *ar == 0 {
                return Err(CoreError::InvalidInput(format!(
                    "predicate {p} must have arity >= 1"
                )));
            }
            if self.functions.contains_key(p) {
                return Err(CoreError::InvalidInput(format!(
                    "symbol {p} is both a predicate and a function"
                )));
            }
        }
        Ok(())
    }

    pub fn is_relational(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn is_subvocabulary_of(&self, other: &Vocabulary) -> bool {
        self.predicates
            .iter()
            .all(|(n, a)| other.predicates.get(n) == Some(a))
            && self
                .functions
                .iter()
                .all(|(n, a)| other.functions.get(n) == Some(a))
    }

    pub fn constants(&self) -> impl Iterator<Item = &SymbolName> {
        self.functions
            .iter()
            .filter(|(_, a)| **a == 0)
            .map(|(n, _)| n)
    }
}

/// An arity-preserving bijection between two vocabularies, used for renaming.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolBijection {
    pub predicates: BTreeMap<SymbolName, SymbolName>,
    pub functions: BTreeMap<SymbolName, SymbolName>,
}

impl SymbolBijection {
    pub fn identity(vocab: &Vocabulary) -> Self {
        SymbolBijection {
            predicates: vocab
                .predicates
                .keys()
                .map(|k| (k.clone(), k.clone()))
                .collect(),
            functions: vocab
                .functions
                .keys()
                .map(|k| (k.clone(), k.clone()))
                .collect(),
        }
    }

    pub fn inverse(&self) -> Self {
        SymbolBijection {
            predicates: self
                .predicates
                .iter()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
            functions: self
                .functions
                .iter()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
        }
    }

    /// The target vocabulary obtained by transporting `source` along the
    /// bijection. Fails unless the map is a total arity-preserving bijection
    /// out of `source`.
    pub fn transport(&self, source: &Vocabulary) -> Result<Vocabulary> {
        let mut out = Vocabulary::new();
        if self.predicates.len() != source.predicates.len()
            || self.functions.len() != source.functions.len()
        {
            return Err(CoreError::ArityMismatch(
                "bijection does not cover the source vocabulary".into(),
            ));
        }
        for (from, to) in &self.predicates {
            let Some(ar) = source.predicates.get(from) else {
                return Err(CoreError::ArityMismatch(format!(
                    "predicate {from} not in source vocabulary"
                )));
            };
            if out.predicates.insert(to.clone(), *ar).is_some() {
                return Err(CoreError::ArityMismatch(format!(
                    "target predicate {to} hit twice"
                )));
            }
        }
        for (from, to) in &self.functions {
            let Some(ar) = source.functions.get(from) else {
                return Err(CoreError::ArityMismatch(format!(
                    "function {from} not in source vocabulary"
                )));
            };
            if out.functions.insert(to.clone(), *ar).is_some() {
                return Err(CoreError::ArityMismatch(format!(
                    "target function {to} hit twice"
                )));
            }
        }
        out.validate()
            .map_err(|e| CoreError::ArityMismatch(e.to_string()))?;
        Ok(out)
    }

    /// A renaming is only a vocabulary isomorphism when arities line up; a
    /// map sending a binary symbol to a unary one must be rejected.
    pub fn check_arities(&self, source: &Vocabulary, target: &Vocabulary) -> Result<()> {
        for (from, to) in &self.predicates {
            match (source.predicates.get(from), target.predicates.get(to)) {
                (Some(a), Some(b)) if a == b => {}
                _ => {
                    return Err(CoreError::ArityMismatch(format!(
                        "predicate {from} -> {to}"
                    )))
                }
            }
        }
        for (from, to) in &self.functions {
            match (source.functions.get(from), target.functions.get(to)) {
                (Some(a), Some(b)) if a == b => {}
                _ => {
                    return Err(CoreError::ArityMismatch(format!(
                        "function {from} -> {to}"
                    )))
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_shared_names() {
        let v = Vocabulary::new().with_predicate("E", 2).with_function("E", 1);
        assert!(v.validate().is_err());
    }

    #[test]
    fn subvocabulary_requires_matching_arity() {
        let big = Vocabulary::new().with_predicate("E", 2).with_predicate("P", 1);
        let small = Vocabulary::new().with_predicate("E", 2);
        let wrong = Vocabulary::new().with_predicate("E", 1);
        assert!(small.is_subvocabulary_of(&big));
        assert!(!wrong.is_subvocabulary_of(&big));
    }

    #[test]
    fn transport_rejects_arity_mismatch() {
        // binary E mapped onto unary P
        let source = Vocabulary::new().with_predicate("E", 2);
        let target = Vocabulary::new().with_predicate("P", 1);
        let mut pi = SymbolBijection::default();
        pi.predicates.insert("E".into(), "P".into());
        assert!(pi.check_arities(&source, &target).is_err());
    }
}
