//! Corpus generation: exhaustive enumeration of all structures up to a size
//! bound, linear orders, and the ordered structures with indexed unary
//! functions used as a stress family.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::structure::{ElemId, Structure, StructureBuilder, Tuple};
use crate::vocab::Vocabulary;

#[derive(Debug, Clone)]
pub struct Corpus {
    pub name: String,
    pub structures: Vec<Structure>,
}

pub const DEFAULT_CORPUS_BUDGET: u128 = 200_000;

fn all_tuples(universe: &[ElemId], arity: usize) -> Vec<Tuple> {
    let mut out: Vec<Tuple> = vec![vec![]];
    for _ in 0..arity {
        let mut next = Vec::with_capacity(out.len() * universe.len());
        for t in &out {
            for e in universe {
                let mut t2 = t.clone();
                t2.push(e.clone());
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// Estimated number of structures the exhaustive generator would produce.
pub fn exhaustive_count(vocab: &Vocabulary, max_size: usize) -> u128 {
    let mut total: u128 = 0;
    for k in 1..=max_size {
        let mut per_size: u128 = 1;
        for ar in vocab.predicates.values() {
            let tuples = (k as u128).saturating_pow(*ar as u32);
            per_size = per_size.saturating_mul(2u128.saturating_pow(tuples.min(120) as u32));
        }
        for ar in vocab.functions.values() {
            let tuples = (k as u128).saturating_pow(*ar as u32);
            per_size = per_size.saturating_mul((k as u128).saturating_pow(tuples.min(120) as u32));
        }
        total = total.saturating_add(per_size);
    }
    total
}

/// Every structure with universe {1..k} for k ≤ max_size and every
/// interpretation of the vocabulary, subject to a budget guard.
pub fn gen_exhaustive(vocab: &Vocabulary, max_size: usize) -> Result<Corpus> {
    gen_exhaustive_with_budget(vocab, max_size, DEFAULT_CORPUS_BUDGET)
}

pub fn gen_exhaustive_with_budget(
    vocab: &Vocabulary,
    max_size: usize,
    budget: u128,
) -> Result<Corpus> {
    let estimate = exhaustive_count(vocab, max_size);
    if estimate > budget {
        return Err(CoreError::CorpusTooLarge(format!(
            "{estimate} structures exceeds budget {budget}"
        )));
    }
    let mut structures = Vec::new();
    for k in 1..=max_size {
        let universe: Vec<ElemId> = (1..=k).map(|i| i.to_string()).collect();
        // one slot per predicate (subset of tuples) and per function (map)
        let pred_tuples: Vec<(String, Vec<Tuple>)> = vocab
            .predicates
            .iter()
            .map(|(p, &ar)| (p.clone(), all_tuples(&universe, ar)))
            .collect();
        let fn_tuples: Vec<(String, Vec<Tuple>)> = vocab
            .functions
            .iter()
            .map(|(f, &ar)| (f.clone(), all_tuples(&universe, ar)))
            .collect();

        let mut rel_counters: Vec<u128> = pred_tuples.iter().map(|_| 0).collect();
        let rel_limits: Vec<u128> = pred_tuples
            .iter()
            .map(|(_, t)| 1u128 << t.len())
            .collect();
        let mut idx = 0usize;
        loop {
            // enumerate all function interpretations for this relation choice
            let mut fn_counters: Vec<Vec<usize>> = fn_tuples
                .iter()
                .map(|(_, t)| vec![0usize; t.len()])
                .collect();
            loop {
                let mut relations: BTreeMap<String, std::collections::BTreeSet<Tuple>> =
                    BTreeMap::new();
                for (slot, (p, tuples)) in pred_tuples.iter().enumerate() {
                    let mask = rel_counters[slot];
                    let set = tuples
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| mask >> i & 1 == 1)
                        .map(|(_, t)| t.clone())
                        .collect();
                    relations.insert(p.clone(), set);
                }
                let mut functions: BTreeMap<String, BTreeMap<Tuple, ElemId>> = BTreeMap::new();
                for (slot, (f, tuples)) in fn_tuples.iter().enumerate() {
                    let graph = tuples
                        .iter()
                        .enumerate()
                        .map(|(i, t)| (t.clone(), universe[fn_counters[slot][i]].clone()))
                        .collect();
                    functions.insert(f.clone(), graph);
                }
                structures.push(Structure {
                    name: format!("s{k}_{idx}"),
                    vocab: vocab.clone(),
                    universe: universe.iter().cloned().collect(),
                    relations,
                    functions,
                });
                idx += 1;
                // advance the mixed-radix function counters
                let mut carried = true;
                'adv: for counters in fn_counters.iter_mut() {
                    for c in counters.iter_mut() {
                        *c += 1;
                        if *c < k {
                            carried = false;
                            break 'adv;
                        }
                        *c = 0;
                    }
                }
                if carried {
                    break;
                }
            }
            // advance the relation masks
            let mut carried = true;
            for (slot, counter) in rel_counters.iter_mut().enumerate() {
                *counter += 1;
                if *counter < rel_limits[slot] {
                    carried = false;
                    break;
                }
                *counter = 0;
            }
            if carried {
                break;
            }
        }
    }
    Ok(Corpus {
        name: format!("exhaustive<={max_size}"),
        structures,
    })
}

/// Strict linear order on n elements, ids "1".."n".
pub fn gen_linear_order(n: usize) -> Structure {
    let vocab = Vocabulary::new().with_predicate("<", 2);
    let ids: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
    let mut b = StructureBuilder::new(&format!("L{n}"), vocab, &refs);
    for i in 0..n {
        for j in (i + 1)..n {
            b = b.tuple("<", &[&ids[i], &ids[j]]);
        }
    }
    b.build()
}

/// The order type alpha as a finite order, ids "0".."alpha-1".
pub fn gen_alpha_order(alpha: usize) -> Structure {
    let vocab = Vocabulary::new().with_predicate("<", 2);
    let ids: Vec<String> = (0..alpha).map(|i| i.to_string()).collect();
    let refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
    let mut b = StructureBuilder::new(&format!("O{alpha}"), vocab, &refs);
    for i in 0..alpha {
        for j in (i + 1)..alpha {
            b = b.tuple("<", &[&ids[i], &ids[j]]);
        }
    }
    b.build()
}

/// Finite truncation of the indexed-function family: universe {0..alpha},
/// constant c = 0, order holding on (0,0) and all i < j, and unary functions
/// F_0..F_max_idx where F_k is the identity exactly when k = n and constantly
/// 0 otherwise.
pub fn gen_m_n_alpha(n: usize, alpha: usize, max_idx: usize) -> Structure {
    let mut vocab = Vocabulary::new().with_predicate("<", 2).with_constant("c");
    for k in 0..=max_idx {
        vocab = vocab.with_function(&format!("F{k}"), 1);
    }
    let ids: Vec<String> = (0..=alpha).map(|i| i.to_string()).collect();
    let refs: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
    let mut b = StructureBuilder::new(&format!("M{n}_{alpha}"), vocab, &refs).constant("c", "0");
    b = b.tuple("<", &["0", "0"]);
    for i in 0..=alpha {
        for j in (i + 1)..=alpha {
            b = b.tuple("<", &[&ids[i], &ids[j]]);
        }
    }
    for k in 0..=max_idx {
        let f = format!("F{k}");
        for id in &ids {
            if k == n {
                b = b.map(&f, &[id], id);
            } else {
                b = b.map(&f, &[id], "0");
            }
        }
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iso::isomorphic;

    #[test]
    fn binary_relation_counts() {
        let vocab = Vocabulary::new().with_predicate("E", 2);
        let c = gen_exhaustive(&vocab, 2).unwrap();
        assert_eq!(c.structures.len(), 2 + 16);
        for s in &c.structures {
            assert!(s.validate().is_ok());
        }
    }

    #[test]
    fn unary_predicate_size_one_gives_two() {
        let vocab = Vocabulary::new().with_predicate("P", 1);
        let c = gen_exhaustive(&vocab, 1).unwrap();
        assert_eq!(c.structures.len(), 2);
    }

    #[test]
    fn empty_vocab_gives_pure_sets() {
        let c = gen_exhaustive(&Vocabulary::new(), 3).unwrap();
        assert_eq!(c.structures.len(), 3);
    }

    #[test]
    fn budget_guard_trips() {
        let vocab = Vocabulary::new().with_predicate("E", 2);
        assert!(matches!(
            gen_exhaustive_with_budget(&vocab, 5, 1000),
            Err(CoreError::CorpusTooLarge(_))
        ));
    }

    #[test]
    fn linear_order_shape() {
        let l3 = gen_linear_order(3);
        assert_eq!(l3.size(), 3);
        assert_eq!(l3.relations["<"].len(), 3);
    }

    #[test]
    fn indexed_family_matches_its_description() {
        let m = gen_m_n_alpha(0, 2, 1);
        assert_eq!(m.size(), 3);
        assert_eq!(m.functions["c"][&Vec::<ElemId>::new()], "0");
        assert!(m.relations["<"].contains(&vec!["0".to_string(), "0".to_string()]));
        // F0 identity, F1 constant 0
        assert_eq!(m.functions["F0"][&vec!["2".to_string()]], "2");
        assert_eq!(m.functions["F1"][&vec!["2".to_string()]], "0");
        // different indices give non-isomorphic structures
        let m1 = gen_m_n_alpha(1, 2, 1);
        assert!(isomorphic(&m, &m1).is_none());
        assert!(isomorphic(&m, &m).is_some());
    }
}
