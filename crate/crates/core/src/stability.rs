//! The least-losing-clock rank and the stabilization certificate.
//!
//! rank() iterates the clock upward. The first AIS win pins the rank exactly
//! (the winning set is antitone in the clock, so AIS keeps winning above it).
//! Otherwise a safety certificate is attempted: a greatest-fixpoint
//! computation on the clockless arena reachable from the empty position, in
//! which the adversary additionally announces, each move, the scheduling
//! window ISO must stay within (window 0 models a final-move dump). An ISO
//! strategy surviving that arena forever turns into a win at every finite
//! clock by direct simulation, taking the announced window to be
//! min(remaining clock, certificate window).

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::game::{
    initial_state, legal_ais_moves, legal_iso_responses, Clock, GameConfig,
    InitialState, Winner,
};
use crate::partial_map::GammaMode;
use crate::solver::{CanonicalCore, Solver};
use crate::structure::Structure;

/// Either AIS wins from clock `r` on (and ISO wins every clock below), or the
/// certificate that ISO wins at every finite clock, found at window betaStar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Rank {
    #[serde(rename = "aisWinsAt")]
    AisWinsAt(u32),
    #[serde(rename = "isoStable")]
    IsoStable(u32),
}

impl Rank {
    pub fn is_stable(&self) -> bool {
        matches!(self, Rank::IsoStable(_))
    }
}

impl std::fmt::Display for Rank {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rank::AisWinsAt(r) => write!(f, "aisWinsAt({r})"),
            Rank::IsoStable(b) => write!(f, "isoStable({b})"),
        }
    }
}

pub const DEFAULT_RANK_CAP: u32 = 32;

pub fn rank(m1: &Structure, m2: &Structure, theta: u32, mode: GammaMode) -> Result<Rank> {
    rank_with_cap(m1, m2, theta, mode, DEFAULT_RANK_CAP)
}

pub fn rank_with_cap(
    m1: &Structure,
    m2: &Structure,
    theta: u32,
    mode: GammaMode,
    cap: u32,
) -> Result<Rank> {
    let mut solver = Solver::new(m1, m2, mode, theta);
    if solver.solve_at(0)? == Winner::Ais {
        return Ok(Rank::AisWinsAt(0));
    }
    for k in 1..=cap {
        if solver.solve_at(k)? == Winner::Ais {
            return Ok(Rank::AisWinsAt(k));
        }
        if safety_certificate(m1, m2, theta, mode, k)? {
            return Ok(Rank::IsoStable(k));
        }
    }
    Err(CoreError::BudgetExceeded(format!(
        "rank undetermined after clock {cap} for {} vs {}",
        m1.name, m2.name
    )))
}

/// Greatest-fixpoint safety check with scheduling window `window`. True iff
/// ISO can survive forever from the empty position, which implies an ISO win
/// at every finite clock.
pub fn safety_certificate(
    m1: &Structure,
    m2: &Structure,
    theta: u32,
    mode: GammaMode,
    window: u32,
) -> Result<bool> {
    // The arena reuses the game engine: a core with announced window w embeds
    // as a state with counter 1 and clock w + 1, and the pending move carries
    // beta_next = w, so scheduled debts land in {0..w-1} relative to the
    // successor, exactly the windowed choices.
    let cfg = GameConfig::new(mode, theta, Clock::Fin(u32::MAX));
    let initial = match initial_state(m1, m2, &GameConfig::new(mode, theta, Clock::Fin(0))) {
        InitialState::NotAState(_) => return Ok(false),
        InitialState::Valid(s) => CanonicalCore::of(&s, u32::MAX),
    };

    let mut index: HashMap<CanonicalCore, usize> = HashMap::new();
    let mut cores: Vec<CanonicalCore> = Vec::new();
    // per core, per challenge: successor core indices
    let mut edges: Vec<Vec<Vec<usize>>> = Vec::new();
    let mut queue = vec![initial.clone()];
    index.insert(initial, 0);
    cores.push(queue[0].clone());
    edges.push(Vec::new());

    let mut cursor = 0;
    while cursor < queue.len() {
        let core = queue[cursor].clone();
        let me = index[&core];
        let mut challenge_edges = Vec::new();
        for w in 0..=window {
            let s = core.realize(w + 1);
            // beta = w + 1 yields beta_next candidates 0..w; we keep only
            // beta_next = w and treat w as the announced window
            for mv in legal_ais_moves(m1, m2, &s, &cfg) {
                if mv.beta_next != w {
                    continue;
                }
                let mut succs = Vec::new();
                for t in legal_iso_responses(m1, m2, &s, &mv, &cfg) {
                    let succ = CanonicalCore::of(&t, u32::MAX);
                    let idx = match index.get(&succ) {
                        Some(&i) => i,
                        None => {
                            let i = cores.len();
                            index.insert(succ.clone(), i);
                            cores.push(succ.clone());
                            edges.push(Vec::new());
                            queue.push(succ);
                            i
                        }
                    };
                    succs.push(idx);
                }
                challenge_edges.push(succs);
            }
        }
        edges[me] = challenge_edges;
        cursor += 1;
    }

    // Greatest fixpoint: repeatedly remove cores where some challenge has no
    // surviving response.
    let mut safe = vec![true; cores.len()];
    loop {
        let mut changed = false;
        for i in 0..cores.len() {
            if !safe[i] {
                continue;
            }
            let doomed = edges[i]
                .iter()
                .any(|succs| !succs.iter().any(|&j| safe[j]));
            if doomed {
                safe[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(safe[0])
}

#[derive(Debug, Clone, Serialize)]
pub struct StabRow {
    pub clock: u32,
    pub iso_winning_cores: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilizationReport {
    pub rows: Vec<StabRow>,
    pub verdict: Rank,
    /// clock k+1 winning cores ⊆ clock k winning cores, over a common
    /// reachable core set
    pub antitone_ok: bool,
    pub initial_in_last: bool,
}

/// Per-clock table of ISO-winning core counts over the cores the solver
/// reached, extended (for stable pairs) until two consecutive winning sets
/// coincide.
pub fn stabilization_report(
    m1: &Structure,
    m2: &Structure,
    theta: u32,
    mode: GammaMode,
) -> Result<StabilizationReport> {
    let verdict = rank(m1, m2, theta, mode)?;
    let mut solver = Solver::new(m1, m2, mode, theta);
    let k_end = match verdict {
        Rank::AisWinsAt(r) => r,
        Rank::IsoStable(b) => b + 1,
    };
    for k in 0..=k_end {
        solver.solve_at(k)?;
    }
    let cores: Vec<CanonicalCore> = solver.visited_cores().into_iter().cloned().collect();
    let mut winning_sets: Vec<Vec<bool>> = Vec::new();
    let mut k = 0;
    loop {
        let mut wins = Vec::with_capacity(cores.len());
        for core in &cores {
            wins.push(solver.core_winner_at(core, k)? == Winner::Iso);
        }
        winning_sets.push(wins);
        let len = winning_sets.len();
        let fixpoint = len >= 2 && winning_sets[len - 1] == winning_sets[len - 2];
        if verdict.is_stable() {
            if fixpoint || k > k_end + DEFAULT_RANK_CAP {
                break;
            }
        } else if k >= k_end {
            break;
        }
        k += 1;
    }
    let antitone_ok = winning_sets.windows(2).all(|w| {
        w[1].iter()
            .zip(w[0].iter())
            .all(|(later, earlier)| !*later || *earlier)
    });
    let initial = {
        let s = match initial_state(m1, m2, &GameConfig::new(mode, theta, Clock::Fin(0))) {
            InitialState::Valid(s) => s,
            InitialState::NotAState(_) => {
                return Ok(StabilizationReport {
                    rows: vec![StabRow { clock: 0, iso_winning_cores: 0 }],
                    verdict,
                    antitone_ok: true,
                    initial_in_last: false,
                })
            }
        };
        CanonicalCore::of(&s, u32::MAX)
    };
    let initial_idx = cores.iter().position(|c| *c == initial);
    let rows = winning_sets
        .iter()
        .enumerate()
        .map(|(k, wins)| StabRow {
            clock: k as u32,
            iso_winning_cores: wins.iter().filter(|w| **w).count(),
        })
        .collect();
    let initial_in_last = match (initial_idx, winning_sets.last()) {
        (Some(i), Some(wins)) => wins[i],
        _ => false,
    };
    Ok(StabilizationReport {
        rows,
        verdict,
        antitone_ok,
        initial_in_last,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::corpus::gen_linear_order;
    use crate::structure::StructureBuilder;
    use crate::vocab::Vocabulary;

    #[test]
    fn isomorphic_pairs_certify_stable() {
        let l3 = gen_linear_order(3);
        let r = rank(&l3, &l3, 2, GammaMode::Bs).unwrap();
        assert!(r.is_stable(), "{r}");
    }

    #[test]
    fn constant_disagreement_ranks_zero() {
        let vocab = Vocabulary::new().with_predicate("P", 1).with_constant("c");
        let m1 = StructureBuilder::new("m1", vocab.clone(), &["a"])
            .tuple("P", &["a"])
            .constant("c", "a")
            .build();
        let m2 = StructureBuilder::new("m2", vocab, &["a"])
            .constant("c", "a")
            .build();
        assert_eq!(rank(&m1, &m2, 1, GammaMode::Bs).unwrap(), Rank::AisWinsAt(0));
    }

    #[test]
    fn short_orders_rank_matches_the_frozen_oracle_table() {
        // first AIS wins per the unmemoized oracle: clock 1 at theta 3,
        // clock 3 at theta 2
        let l2 = gen_linear_order(2);
        let l3 = gen_linear_order(3);
        assert_eq!(rank(&l2, &l3, 3, GammaMode::Bs).unwrap(), Rank::AisWinsAt(1));
        assert_eq!(rank(&l2, &l3, 2, GammaMode::Bs).unwrap(), Rank::AisWinsAt(3));
    }

    #[test]
    fn report_shapes() {
        let l2 = gen_linear_order(2);
        let l3 = gen_linear_order(3);
        // stable pair: counts non-increasing, fixpoint reached, initial wins
        let stable = stabilization_report(&l2, &l2, 2, GammaMode::Bs).unwrap();
        assert!(stable.verdict.is_stable());
        assert!(stable.antitone_ok);
        assert!(stable.initial_in_last);
        assert!(stable.rows.len() >= 2);
        let counts: Vec<usize> = stable.rows.iter().map(|r| r.iso_winning_cores).collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
        let last two = &counts[counts.len() - 2..];
        assert_eq!(last two[0], last two[1]);
        // losing pair: table ends at the rank clock with the initial core out
        let losing = stabilization_report(&l2, &l3, 2, GammaMode::Bs).unwrap();
        assert_eq!(losing.verdict, Rank::AisWinsAt(3));
        assert!(!losing.initial_in_last);
        assert!(losing.antitone_ok);
        assert_eq!(losing.rows.len(), 4);
    }

    #[test]
    fn e0_with_stable_clock_uses_the_certificate() {
        let l2 = gen_linear_order(2);
        let l3 = gen_linear_order(3);
        let stable_cfg = GameConfig::new(GammaMode::Bs, 2, Clock::Stable);
        assert!(crate::solver::e0_equiv(&l2, &l2, &stable_cfg).unwrap());
        assert!(!crate::solver::e0_equiv(&l2, &l3, &stable_cfg).unwrap());
    }
}
