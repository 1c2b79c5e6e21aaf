//! Exact winner determination by memoized backward induction over
//! canonicalized positions.
//!
//! The transposition key drops the move counter and re-expresses debts
//! relative to it: only the time-to-due matters, clamped at the remaining
//! clock (anything later can never come due in this subgame and collapses to
//! a never-due sentinel). Two states with equal core and equal clock have the
//! same value; the clamp bound can be widened by a slack for the soundness
//! check.

use std::collections::HashMap;
use std::time::Instant;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::game::{
    initial_state, legal_ais_moves, legal_iso_responses, AisMove, Clock, GameConfig,
    InitialState, State, Winner,
};
use crate::partial_map::GammaMode;
use crate::structure::{ElemId, Structure};

/// Relative debt of an unmatched element: due in `In(d)` more moves (0 = at
/// the very next move of its side), or never within the remaining clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RelDebt {
    In(u32),
    Never,
}

impl std::fmt::Display for RelDebt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RelDebt::In(d) => write!(f, "{d}"),
            RelDebt::Never => write!(f, "never"),
        }
    }
}

/// The state minus (beta, n), with debts relative and clamped; equal cores at
/// equal clocks are interchangeable positions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CanonicalCore {
    pub a1: Vec<ElemId>,
    pub a2: Vec<ElemId>,
    pub g: Vec<(ElemId, ElemId)>,
    pub d1: Vec<(ElemId, RelDebt)>,
    pub d2: Vec<(ElemId, RelDebt)>,
}

impl CanonicalCore {
    /// Clamp bound is `beta + slack`: a relative debt at or past it can never
    /// come due within the remaining clock.
    pub fn of(s: &State, slack: u32) -> CanonicalCore {
        let clamp = s.beta.saturating_add(slack);
        let rel = |h: u32| -> RelDebt {
            let d = h.saturating_sub(s.n);
            if d >= clamp {
                RelDebt::Never
            } else {
                RelDebt::In(d)
            }
        };
        let debts = |a: &std::collections::BTreeSet<ElemId>,
                     h: &std::collections::BTreeMap<ElemId, u32>,
                     matched: &dyn Fn(&ElemId) -> bool| {
            a.iter()
                .filter(|e| !matched(e))
                .map(|e| (e.clone(), rel(h[e])))
                .collect::<Vec<_>>()
        };
        CanonicalCore {
            a1: s.a1.iter().cloned().collect(),
            a2: s.a2.iter().cloned().collect(),
            g: s.g.iter().map(|(a, b)| (a.clone(), b.clone())).collect(),
            d1: debts(&s.a1, &s.h1, &|e| s.g.contains_source(e)),
            d2: debts(&s.a2, &s.h2, &|e| s.g.contains_target(e)),
        }
    }

    /// A concrete state realizing this core at the given clock (counter 1,
    /// matched debts 0, never-due realized just past the clock).
    pub fn realize(&self, beta: u32) -> State {
        let n = 1;
        let mut h1 = std::collections::BTreeMap::new();
        let mut h2 = std::collections::BTreeMap::new();
        for (a, _) in &self.g {
            h1.insert(a.clone(), 0);
        }
        for (_, b) in &self.g {
            h2.insert(b.clone(), 0);
        }
        for (e, d) in &self.d1 {
            h1.insert(e.clone(), realize_debt(*d, n, beta));
        }
        for (e, d) in &self.d2 {
            h2.insert(e.clone(), realize_debt(*d, n, beta));
        }
        State {
            a1: self.a1.iter().cloned().collect(),
            a2: self.a2.iter().cloned().collect(),
            h1,
            h2,
            g: crate::partial_map::PartialMap::from_pairs(self.g.iter().cloned())
                .expect("core map is injective"),
            beta,
            n,
        }
    }
}

fn realize_debt(d: RelDebt, n: u32, beta: u32) -> u32 {
    match d {
        RelDebt::In(d) => n.saturating_add(d),
        RelDebt::Never => n.saturating_add(beta).saturating_add(1),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOutcome {
    pub winner: Winner,
    pub nodes: u64,
    pub millis: u64,
}

/// Memoized exact solver for one pair of structures at one (mode, theta).
/// The cache is valid across clock values, so rank() reuses one instance.
pub struct Solver<'a> {
    pub m1: &'a Structure,
    pub m2: &'a Structure,
    pub mode: GammaMode,
    pub theta: u32,
    pub clamp_slack: u32,
    memo: HashMap<(CanonicalCore, u32), Winner>,
    pub nodes: u64,
    pub node_budget: Option<u64>,
}

impl<'a> Solver<'a> {
    pub fn new(m1: &'a Structure, m2: &'a Structure, mode: GammaMode, theta: u32) -> Self {
        Solver {
            m1,
            m2,
            mode,
            theta,
            clamp_slack: 0,
            memo: HashMap::new(),
            nodes: 0,
            node_budget: None,
        }
    }

    pub fn with_clamp_slack(mut self, slack: u32) -> Self {
        self.clamp_slack = slack;
        self
    }

    pub fn with_node_budget(mut self, budget: u64) -> Self {
        self.node_budget = Some(budget);
        self
    }

    fn cfg(&self, alpha: u32) -> GameConfig {
        GameConfig::new(self.mode, self.theta, Clock::Fin(alpha))
    }

    /// A position is ISO-winning iff for every legal AIS move some legal ISO
    /// response leads to an ISO-winning position; a spent clock is an AIS
    /// dead end.
    pub fn winner_state(&mut self, s: &State) -> Result<Winner> {
        if s.beta == 0 {
            return Ok(Winner::Iso);
        }
        let key = (CanonicalCore::of(s, self.clamp_slack), s.beta);
        if let Some(w) = self.memo.get(&key) {
            return Ok(*w);
        }
        self.nodes += 1;
        if let Some(budget) = self.node_budget {
            if self.nodes > budget {
                return Err(CoreError::BudgetExceeded(format!(
                    "solver node budget {budget}"
                )));
            }
        }
        let cfg = self.cfg(s.beta);
        let mut winner = Winner::Iso;
        'moves: for mv in legal_ais_moves(self.m1, self.m2, s, &cfg) {
            let mut iso_escapes = false;
            for t in legal_iso_responses(self.m1, self.m2, s, &mv, &cfg) {
                if self.winner_state(&t)? == Winner::Iso {
                    iso_escapes = true;
                    break;
                }
            }
            if !iso_escapes {
                winner = Winner::Ais;
                break 'moves;
            }
        }
        self.memo.insert(key, winner);
        Ok(winner)
    }

    pub fn solve_at(&mut self, alpha: u32) -> Result<Winner> {
        match initial_state(self.m1, self.m2, &self.cfg(alpha)) {
            InitialState::NotAState(_) => Ok(Winner::Ais),
            InitialState::Valid(s) => self.winner_state(&s),
        }
    }

    /// Deterministic optimal-strategy handle: the first winning response in
    /// canonical order, if any.
    pub fn best_response(&mut self, s: &State, mv: &AisMove) -> Result<Option<State>> {
        let cfg = self.cfg(s.beta);
        for t in legal_iso_responses(self.m1, self.m2, s, mv, &cfg) {
            if self.winner_state(&t)? == Winner::Iso {
                return Ok(Some(t));
            }
        }
        Ok(None)
    }

    /// The first AIS move (canonical order) from which every ISO response is
    /// AIS-winning, if the position is AIS-won.
    pub fn winning_ais_move(&mut self, s: &State) -> Result<Option<AisMove>> {
        let cfg = self.cfg(s.beta);
        for mv in legal_ais_moves(self.m1, self.m2, s, &cfg) {
            let mut refuted = false;
            for t in legal_iso_responses(self.m1, self.m2, s, &mv, &cfg) {
                if self.winner_state(&t)? == Winner::Iso {
                    refuted = true;
                    break;
                }
            }
            if !refuted {
                return Ok(Some(mv));
            }
        }
        Ok(None)
    }

    /// All cores seen so far, with the clocks they were evaluated at.
    pub fn visited_cores(&self) -> Vec<&CanonicalCore> {
        let mut seen: Vec<&CanonicalCore> = self.memo.keys().map(|(c, _)| c).collect();
        seen.sort();
        seen.dedup();
        seen
    }

    pub fn core_winner_at(&mut self, core: &CanonicalCore, beta: u32) -> Result<Winner> {
        let s = core.realize(beta);
        self.winner_state(&s)
    }
}

/// Exact winner for a finite-clock game.
pub fn solve(m1: &Structure, m2: &Structure, cfg: &GameConfig) -> Result<SolveOutcome> {
    let alpha = cfg
        .alpha
        .finite()
        .ok_or_else(|| CoreError::InvalidInput("solve requires a finite clock".into()))?;
    let start = Instant::now();
    let mut solver = Solver::new(m1, m2, cfg.mode, cfg.theta);
    let winner = solver.solve_at(alpha)?;
    Ok(SolveOutcome {
        winner,
        nodes: solver.nodes,
        millis: start.elapsed().as_millis() as u64,
    })
}

/// E⁰: ISO has a winning strategy. Finite clocks solve directly; the Stable
/// clock asks for the all-finite-clocks certificate.
pub fn e0_equiv(m1: &Structure, m2: &Structure, cfg: &GameConfig) -> Result<bool> {
    match cfg.alpha {
        Clock::Fin(_) => Ok(solve(m1, m2, cfg)?.winner == Winner::Iso),
        Clock::Stable => Ok(matches!(
            crate::stability::rank(m1, m2, cfg.theta, cfg.mode)?,
            crate::stability::Rank::IsoStable(_)
        )),
    }
}
