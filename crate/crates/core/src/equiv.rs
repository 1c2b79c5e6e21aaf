//! The derived equivalence relations over a finite family: the transitive
//! closure of the direct game relation (with witness chains as proofs),
//! sentence objects defined by a triple plus representatives, and the boolean
//! operations on them.
//!
//! The closure universe is the user-supplied family. Closing over a finite
//! family can be strictly finer than the closure over all structures; every
//! same-block verdict carries a replayable chain of direct links, so the
//! approximation is auditable.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::game::{Clock, GameConfig};
use crate::solver::e0_equiv;
use crate::structure::Structure;

/// A named finite list of structures over one vocabulary.
#[derive(Debug, Clone)]
pub struct Family {
    pub structures: Vec<Structure>,
}

impl Family {
    pub fn new(structures: Vec<Structure>) -> Result<Family> {
        let mut names = BTreeSet::new();
        for s in &structures {
            if !names.insert(s.name.clone()) {
                return Err(CoreError::InvalidInput(format!(
                    "duplicate structure name {}",
                    s.name
                )));
            }
            if s.vocab != structures[0].vocab {
                return Err(CoreError::VocabMismatch(format!(
                    "{} differs from {}",
                    s.name, structures[0].name
                )));
            }
        }
        Ok(Family { structures })
    }

    pub fn get(&self, name: &str) -> Result<&Structure> {
        self.structures
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| CoreError::UnknownName(name.to_string()))
    }

    pub fn names(&self) -> Vec<String> {
        self.structures.iter().map(|s| s.name.clone()).collect()
    }
}

/// A same-block proof: consecutive members are directly game-equivalent.
pub type WitnessChain = Vec<String>;

#[derive(Debug, Clone, Serialize)]
pub struct Partition {
    pub blocks: Vec<Vec<String>>,
    /// for each same-block ordered pair, a chain of direct links
    pub witnesses: BTreeMap<String, WitnessChain>,
}

impl Partition {
    pub fn block_of(&self, name: &str) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.iter().any(|n| n == name))
    }

    pub fn same_block(&self, a: &str, b: &str) -> bool {
        match (self.block_of(a), self.block_of(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }

    pub fn witness_key(a: &str, b: &str) -> String {
        format!("{a}->{b}")
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Transitive closure of the direct relation over the family, with witness
/// chains (BFS paths through direct links) for every same-block pair.
pub fn e1_partition(fam: &Family, cfg: &GameConfig) -> Result<Partition> {
    let n = fam.structures.len();
    let mut direct = vec![vec![false; n]; n];
    for i in 0..n {
        direct[i][i] = true;
        for j in (i + 1)..n {
            let eq = e0_equiv(&fam.structures[i], &fam.structures[j], cfg)?;
            direct[i][j] = eq;
            direct[j][i] = eq;
        }
    }
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in 0..n {
            if direct[i][j] {
                uf.union(i, j);
            }
        }
    }
    let mut by_root: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let r = uf.find(i);
        by_root.entry(r).or_default().push(i);
    }
    let blocks: Vec<Vec<String>> = by_root
        .values()
        .map(|members| {
            members
                .iter()
                .map(|&i| fam.structures[i].name.clone())
                .collect()
        })
        .collect();
    // witness chains: BFS in the direct-link graph within each block
    let mut witnesses = BTreeMap::new();
    for members in by_root.values() {
        for &src in members {
            // BFS from src
            let mut prev: BTreeMap<usize, usize> = BTreeMap::new();
            let mut queue = std::collections::VecDeque::from([src]);
            let mut seen = BTreeSet::from([src]);
            while let Some(x) = queue.pop_front() {
                for &y in members {
                    if direct[x][y] && seen.insert(y) {
                        prev.insert(y, x);
                        queue.push_back(y);
                    }
                }
            }
            for &dst in members {
                if dst == src {
                    continue;
                }
                let mut chain = vec![dst];
                let mut cur = dst;
                while cur != src {
                    cur = prev[&cur];
                    chain.push(cur);
                }
                chain.reverse();
                witnesses.insert(
                    Partition::witness_key(
                        &fam.structures[src].name,
                        &fam.structures[dst].name,
                    ),
                    chain
                        .into_iter()
                        .map(|i| fam.structures[i].name.clone())
                        .collect(),
                );
            }
        }
    }
    Ok(Partition { blocks, witnesses })
}

/// Re-solve every link of every witness chain; true iff all certify.
pub fn verify_witnesses(fam: &Family, cfg: &GameConfig, p: &Partition) -> Result<bool> {
    for chain in p.witnesses.values() {
        for pair in chain.windows(2) {
            if !e0_equiv(fam.get(&pair[0])?, fam.get(&pair[1])?, cfg)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A sentence defined by a triple plus a representative list: a structure
/// satisfies it iff it lands in a block with some representative.
#[derive(Debug, Clone, Serialize)]
pub struct SentenceL1 {
    pub mode: crate::partial_map::GammaMode,
    pub theta: u32,
    pub alpha: Clock,
    pub representatives: Vec<String>,
}

impl SentenceL1 {
    pub fn triple(&self) -> GameConfig {
        GameConfig::new(self.mode, self.theta, self.alpha)
    }
}

/// Satisfaction relative to the family as closure universe. The structure
/// and all representatives must belong to the family.
pub fn models_sentence(m: &Structure, psi: &SentenceL1, fam: &Family) -> Result<bool> {
    let member = fam.get(&m.name)?;
    if member.vocab != m.vocab {
        return Err(CoreError::VocabMismatch(m.name.clone()));
    }
    if psi.representatives.is_empty() {
        return Ok(false);
    }
    for r in &psi.representatives {
        fam.get(r)?;
    }
    let partition = e1_partition(fam, &psi.triple())?;
    Ok(psi
        .representatives
        .iter()
        .any(|r| partition.same_block(&m.name, r)))
}

fn joint_triple(a: &SentenceL1, b: &SentenceL1) -> (crate::partial_map::GammaMode, u32, Clock) {
    let mode = if a.mode == b.mode {
        a.mode
    } else {
        crate::partial_map::GammaMode::Bs
    };
    let theta = a.theta.max(b.theta);
    let alpha = match (a.alpha, b.alpha) {
        (Clock::Fin(x), Clock::Fin(y)) => Clock::Fin(x.max(y)),
        _ => Clock::Stable,
    };
    (mode, theta, alpha)
}

/// Conjunction at the common refinement triple (max theta, max alpha):
/// representatives are the family members satisfying both conjuncts.
pub fn sentence_and(psi1: &SentenceL1, psi2: &SentenceL1, fam: &Family) -> Result<SentenceL1> {
    let (mode, theta, alpha) = joint_triple(psi1, psi2);
    let mut reps = Vec::new();
    for s in &fam.structures {
        if models_sentence(s, psi1, fam)? && models_sentence(s, psi2, fam)? {
            reps.push(s.name.clone());
        }
    }
    Ok(SentenceL1 {
        mode,
        theta,
        alpha,
        representatives: reps,
    })
}

/// Negation: representatives of the complementary blocks over the family.
pub fn sentence_not(psi: &SentenceL1, fam: &Family) -> Result<SentenceL1> {
    let mut reps = Vec::new();
    for s in &fam.structures {
        if !models_sentence(s, psi, fam)? {
            reps.push(s.name.clone());
        }
    }
    Ok(SentenceL1 {
        mode: psi.mode,
        theta: psi.theta,
        alpha: psi.alpha,
        representatives: reps,
    })
}

/// True iff every R-neighborhood {a : a R b} has size at most theta. For a
/// finite structure the countable-cover condition is automatic once the
/// neighborhoods are small, since their union is all of Dom(R).
pub fn theta_cover_check(m: &Structure, rel: &str, theta: u32) -> Result<bool> {
    match m.vocab.predicates.get(rel) {
        Some(2) => {}
        _ => {
            return Err(CoreError::BadPredicate(format!(
                "{rel} absent or not binary in {}",
                m.name
            )))
        }
    }
    let tuples = &m.relations[rel];
    for b in &m.universe {
        let neighborhood = tuples.iter().filter(|t| &t[1] == b).count();
        if neighborhood as u32 > theta {
            return Ok(false);
        }
    }
    Ok(true)
}
