//! The two-player set-pebble game with debt scheduling.
//!
//! A position is a seven-component state (A¹, A², h¹, h², g, β, n): the sets
//! chosen so far on each side, the debt (due-round) bookkeeping for their
//! elements, the partial isomorphism built so far, the strictly decreasing
//! clock, and the move counter. Each round AIS lowers the clock and enlarges
//! one side's set; ISO must extend the state so that every element whose debt
//! has come due on that side is matched, Γ-preservation holds, and the size
//! budgets survive.
//!
//! Debt scheduling: a new element on the chosen side is either matched as
//! part of the same response (its debt is recorded as the current counter) or
//! scheduled to come due at a concrete later round within the remaining
//! clock, {n+1, …, n+β'}. A debt an element cannot be held to — one past the
//! remaining clock after a fast clock drop — is canonicalized to a never-due
//! sentinel in the solver's core representation, never chosen directly.
//! Elements pulled in on the opposite side as images are already matched and
//! get debt 0.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::partial_map::{preserves_gamma, GammaMode, PartialMap};
use crate::structure::{ElemId, Structure};

/// Clock parameter: a concrete finite clock, or the solver-level request to
/// certify a win at every finite clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    Fin(u32),
    Stable,
}

impl Clock {
    pub fn finite(self) -> Option<u32> {
        match self {
            Clock::Fin(n) => Some(n),
            Clock::Stable => None,
        }
    }
}

/// The triple parameterizing a game and the equivalence relations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GameConfig {
    pub mode: GammaMode,
    pub theta: u32,
    pub alpha: Clock,
}

impl GameConfig {
    pub fn new(mode: GammaMode, theta: u32, alpha: Clock) -> Self {
        GameConfig { mode, theta, alpha }
    }

    /// theta defaults to max(|m1|, |m2|), the least value at which set moves
    /// are unconstrained.
    pub fn default_theta(m1: &Structure, m2: &Structure) -> u32 {
        m1.size().max(m2.size()) as u32
    }
}

pub fn other_side(side: u8) -> u8 {
    3 - side
}

/// The seven-component game position.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct State {
    pub a1: BTreeSet<ElemId>,
    pub a2: BTreeSet<ElemId>,
    pub h1: BTreeMap<ElemId, u32>,
    pub h2: BTreeMap<ElemId, u32>,
    pub g: PartialMap,
    pub beta: u32,
    pub n: u32,
}

/// AIS's challenge: a lower clock, a side, and an enlarged set on that side.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AisMove {
    pub beta_next: u32,
    pub iota: u8,
    pub a_prime: BTreeSet<ElemId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Winner {
    Iso,
    Ais,
}

impl std::fmt::Display for Winner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Winner::Iso => write!(f, "ISO"),
            Winner::Ais => write!(f, "AIS"),
        }
    }
}

/// The empty opening position, or the certificate that it already violates
/// Γ-preservation on sentences (atoms over constants), in which case AIS wins
/// before any move is made.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitialState {
    Valid(State),
    NotAState(String),
}

pub fn initial_state(m1: &Structure, m2: &Structure, cfg: &GameConfig) -> InitialState {
    let alpha = cfg
        .alpha
        .finite()
        .expect("initial_state requires a finite clock");
    let s = State {
        a1: BTreeSet::new(),
        a2: BTreeSet::new(),
        h1: BTreeMap::new(),
        h2: BTreeMap::new(),
        g: PartialMap::new(),
        beta: alpha,
        n: 0,
    };
    if preserves_gamma(m1, m2, &s.g, cfg.mode) {
        InitialState::Valid(s)
    } else {
        InitialState::NotAState("sentence-disagreement".into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("state violates {clause}: {detail}")]
pub struct StateViolation {
    pub clause: &'static str,
    pub detail: String,
}

/// Check every state invariant (the seven clauses) literally.
pub fn validate_state(
    m1: &Structure,
    m2: &Structure,
    s: &State,
    cfg: &GameConfig,
) -> Result<(), StateViolation> {
    let bad = |clause: &'static str, detail: String| Err(StateViolation { clause, detail });
    if s.a1.len() as u32 > cfg.theta || s.a2.len() as u32 > cfg.theta {
        return bad("size-budget", format!("|A|=({},{})", s.a1.len(), s.a2.len()));
    }
    if !s.a1.iter().all(|e| m1.universe.contains(e))
        || !s.a2.iter().all(|e| m2.universe.contains(e))
    {
        return bad("universe", "chosen set leaves the universe".into());
    }
    if let Some(alpha) = cfg.alpha.finite() {
        if s.beta > alpha {
            return bad("clock-bound", format!("beta={} > alpha={alpha}", s.beta));
        }
    }
    if s.h1.keys().collect::<BTreeSet<_>>() != s.a1.iter().collect::<BTreeSet<_>>()
        || s.h2.keys().collect::<BTreeSet<_>>() != s.a2.iter().collect::<BTreeSet<_>>()
    {
        return bad("debt-totality", "h is not total on the chosen set".into());
    }
    for (a, b) in s.g.iter() {
        if !s.a1.contains(a) || !s.a2.contains(b) {
            return bad("match-inside-sets", format!("({a},{b})"));
        }
        if s.h1[a] >= s.n {
            return bad("matched-debt", format!("h1({a})={} >= n={}", s.h1[a], s.n));
        }
        if s.h2[b] >= s.n {
            return bad("matched-debt", format!("h2({b})={} >= n={}", s.h2[b], s.n));
        }
    }
    if !preserves_gamma(m1, m2, &s.g, cfg.mode) {
        return bad("gamma-preservation", "g breaks an atom".into());
    }
    Ok(())
}

/// Every (β', ι, A') with β' < β, A^ι ⊆ A' ⊆ M_ι, |A'| ≤ θ. Empty exactly
/// when the clock is spent.
pub fn legal_ais_moves(
    m1: &Structure,
    m2: &Structure,
    s: &State,
    cfg: &GameConfig,
) -> Vec<AisMove> {
    let mut moves = Vec::new();
    for beta_next in 0..s.beta {
        for iota in [1u8, 2u8] {
            let (universe, base) = match iota {
                1 => (&m1.universe, &s.a1),
                _ => (&m2.universe, &s.a2),
            };
            let free: Vec<&ElemId> = universe.iter().filter(|e| !base.contains(*e)).collect();
            let room = cfg.theta as usize - base.len();
            for subset in subsets_up_to(&free, room) {
                let mut a_prime = base.clone();
                for e in subset {
                    a_prime.insert(e.clone());
                }
                moves.push(AisMove { beta_next, iota, a_prime });
            }
        }
    }
    moves.sort();
    moves
}

fn subsets_up_to<'a>(items: &[&'a ElemId], max: usize) -> Vec<Vec<&'a ElemId>> {
    let mut out = vec![vec![]];
    for &item in items {
        let mut add = Vec::new();
        for existing in &out {
            if existing.len() < max {
                let mut next = existing.clone();
                next.push(item);
                add.push(next);
            }
        }
        out.extend(add);
    }
    out
}

/// A side-agnostic view of the state so the response construction is written
/// once. `g_fwd` always maps the chosen side into the opposite side.
struct Oriented<'a> {
    other: &'a Structure,
    a_mine: &'a BTreeSet<ElemId>,
    a_other: &'a BTreeSet<ElemId>,
    h_mine: &'a BTreeMap<ElemId, u32>,
    h_other: &'a BTreeMap<ElemId, u32>,
    g_fwd: PartialMap,
}

impl<'a> Oriented<'a> {
    fn new(m1: &'a Structure, m2: &'a Structure, s: &'a State, iota: u8) -> Self {
        if iota == 1 {
            Oriented {
                other: m2,
                a_mine: &s.a1,
                a_other: &s.a2,
                h_mine: &s.h1,
                h_other: &s.h2,
                g_fwd: s.g.clone(),
            }
        } else {
            Oriented {
                other: m1,
                a_mine: &s.a2,
                a_other: &s.a1,
                h_mine: &s.h2,
                h_other: &s.h1,
                g_fwd: s.g.inverse(),
            }
        }
    }
}

/// All successor states for a pending AIS move: choices of which new elements
/// to match immediately, Γ-preserving injective extensions over the due set,
/// and due-round schedules for the rest. Empty means ISO is stuck and loses.
pub fn legal_iso_responses(
    m1: &Structure,
    m2: &Structure,
    s: &State,
    mv: &AisMove,
    cfg: &GameConfig,
) -> Vec<State> {
    let view = Oriented::new(m1, m2, s, mv.iota);
    let n = s.n;
    let beta_next = mv.beta_next;

    // elements of the old chosen set whose debt has come due
    let due_old: Vec<ElemId> = view
        .a_mine
        .iter()
        .filter(|a| view.h_mine[*a] < n + 1)
        .cloned()
        .collect();
    let newcomers: Vec<ElemId> = mv
        .a_prime
        .iter()
        .filter(|a| !view.a_mine.contains(*a))
        .cloned()
        .collect();

    let mut states = Vec::new();
    for immediate_mask in 0..(1u32 << newcomers.len()) {
        let immediate: Vec<ElemId> = newcomers
            .iter()
            .enumerate()
            .filter(|(i, _)| immediate_mask >> i & 1 == 1)
            .map(|(_, e)| e.clone())
            .collect();
        let scheduled: Vec<ElemId> = newcomers
            .iter()
            .enumerate()
            .filter(|(i, _)| immediate_mask >> i & 1 == 0)
            .map(|(_, e)| e.clone())
            .collect();
        // scheduled debts must mature within the remaining clock; on a final
        // move the window is empty, so everything new must be matched now
        if beta_next == 0 && !scheduled.is_empty() {
            continue;
        }

        let mut need_match: Vec<ElemId> = due_old
            .iter()
            .filter(|a| !view.g_fwd.contains_source(a))
            .cloned()
            .collect();
        need_match.extend(immediate.iter().cloned());

        for ext in injective_extensions(&view, &need_match, n, cfg) {
            for debts in debt_schedules(&scheduled, n, beta_next) {
                let mut h_mine_new = view.h_mine.clone();
                for e in &immediate {
                    h_mine_new.insert(e.clone(), n);
                }
                for (e, d) in &debts {
                    h_mine_new.insert(e.clone(), *d);
                }
                let mut a_other_new = view.a_other.clone();
                let mut h_other_new = view.h_other.clone();
                let mut g_fwd_new = view.g_fwd.clone();
                let mut ok = true;
                for (src, dst) in &ext {
                    if !g_fwd_new.insert(src.clone(), dst.clone()) {
                        ok = false;
                        break;
                    }
                    if !a_other_new.contains(dst) {
                        a_other_new.insert(dst.clone());
                        h_other_new.insert(dst.clone(), 0);
                    }
                }
                if !ok || a_other_new.len() as u32 > cfg.theta {
                    continue;
                }
                let (a1, a2, h1, h2, g) = if mv.iota == 1 {
                    (
                        mv.a_prime.clone(),
                        a_other_new,
                        h_mine_new,
                        h_other_new,
                        g_fwd_new,
                    )
                } else {
                    (
                        a_other_new,
                        mv.a_prime.clone(),
                        h_other_new,
                        h_mine_new,
                        g_fwd_new.inverse(),
                    )
                };
                let t = State { a1, a2, h1, h2, g, beta: beta_next, n: n + 1 };
                if preserves_gamma(m1, m2, &t.g, cfg.mode) {
                    states.push(t);
                }
            }
        }
    }
    states.sort();
    states.dedup();
    states
}

/// Injective maps of `need` into the opposite universe respecting the match
/// constraints: never onto an existing image, existing opposite elements only
/// if their own debt is not in the future (B(g) at the successor), and the
/// opposite-side budget is rechecked by the caller.
fn injective_extensions(
    view: &Oriented<'_>,
    need: &[ElemId],
    n: u32,
    cfg: &GameConfig,
) -> Vec<Vec<(ElemId, ElemId)>> {
    let _ = cfg;
    let candidates: Vec<&ElemId> = view
        .other
        .universe
        .iter()
        .filter(|b| !view.g_fwd.contains_target(b))
        .filter(|b| match view.h_other.get(*b) {
            Some(h) => *h <= n,
            None => true,
        })
        .collect();
    let mut out = Vec::new();
    let mut current: Vec<(ElemId, ElemId)> = Vec::new();
    fn recurse(
        need: &[ElemId],
        candidates: &[&ElemId],
        used: &mut BTreeSet<ElemId>,
        current: &mut Vec<(ElemId, ElemId)>,
        out: &mut Vec<Vec<(ElemId, ElemId)>>,
    ) {
        match need.first() {
            None => out.push(current.clone()),
            Some(src) => {
                for &cand in candidates {
                    if used.contains(cand) {
                        continue;
                    }
                    used.insert(cand.clone());
                    current.push((src.clone(), cand.clone()));
                    recurse(&need[1..], candidates, used, current, out);
                    current.pop();
                    used.remove(cand);
                }
            }
        }
    }
    let mut used = BTreeSet::new();
    recurse(need, &candidates, &mut used, &mut current, &mut out);
    out
}

fn debt_schedules(scheduled: &[ElemId], n: u32, beta_next: u32) -> Vec<Vec<(ElemId, u32)>> {
    let mut out: Vec<Vec<(ElemId, u32)>> = vec![vec![]];
    for e in scheduled {
        let mut next = Vec::new();
        for assignment in &out {
            for d in (n + 1)..=(n + beta_next) {
                let mut a = assignment.clone();
                a.push((e.clone(), d));
                next.push(a);
            }
        }
        out = next;
    }
    out
}

/// Clause F. A state with spent clock is an AIS dead end (ISO wins); a
/// pending move with no response is an ISO dead end (AIS wins); the α = 0
/// stipulation is covered because a valid initial state with α = 0 has
/// beta = 0.
pub fn winner_if_terminal(
    m1: &Structure,
    m2: &Structure,
    s: &State,
    pending: Option<&AisMove>,
    cfg: &GameConfig,
) -> Option<Winner> {
    match pending {
        None => {
            if s.beta == 0 {
                Some(Winner::Iso)
            } else {
                None
            }
        }
        Some(mv) => {
            if legal_iso_responses(m1, m2, s, mv, cfg).is_empty() {
                Some(Winner::Ais)
            } else {
                None
            }
        }
    }
}

/// Canonical serialized form: sorted keys, matched debts dropped, unmatched
/// debts relative to the counter and clamped at the remaining clock. Used in
/// transcripts; the solver's cache key is the same data without beta.
pub fn canonical_state_json(s: &State) -> String {
    let core = crate::solver::CanonicalCore::of(s, 0);
    serde_json::json!({
        "a1": core.a1, "a2": core.a2, "g": core.g,
        "d1": core.d1.iter().map(|(e, d)| (e.clone(), d.to_string())).collect::<Vec<_>>(),
        "d2": core.d2.iter().map(|(e, d)| (e.clone(), d.to_string())).collect::<Vec<_>>(),
        "beta": s.beta, "n": s.n,
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::StructureBuilder;
    use crate::vocab::Vocabulary;

    fn bin_vocab() -> Vocabulary {
        Vocabulary::new().with_predicate("E", 2)
    }

    fn linear(name: &str, ids: &[&str]) -> Structure {
        let vocab = Vocabulary::new().with_predicate("<", 2);
        let mut b = StructureBuilder::new(name, vocab, ids);
        for i in 0..ids.len() {
            for j in (i + 1)..ids.len() {
                b = b.tuple("<", &[ids[i], ids[j]]);
            }
        }
        b.build()
    }

    fn cfg(theta: u32, alpha: u32) -> GameConfig {
        GameConfig::new(GammaMode::Bs, theta, Clock::Fin(alpha))
    }

    #[test]
    fn initial_state_valid_without_constants() {
        let m1 = StructureBuilder::new("m1", bin_vocab(), &["a"]).build();
        let m2 = StructureBuilder::new("m2", bin_vocab(), &["x", "y"]).build();
        match initial_state(&m1, &m2, &cfg(1, 2)) {
            InitialState::Valid(s) => {
                assert_eq!(s.beta, 2);
                assert_eq!(s.n, 0);
                assert!(validate_state(&m1, &m2, &s, &cfg(1, 2)).is_ok());
            }
            _ => panic!("expected a state"),
        }
    }

    #[test]
    fn initial_state_fails_on_constant_disagreement() {
        let vocab = Vocabulary::new().with_predicate("P", 1).with_constant("c");
        let m1 = StructureBuilder::new("m1", vocab.clone(), &["a"])
            .tuple("P", &["a"])
            .constant("c", "a")
            .build();
        let m2 = StructureBuilder::new("m2", vocab, &["a"])
            .constant("c", "a")
            .build();
        assert!(matches!(
            initial_state(&m1, &m2, &cfg(1, 0)),
            InitialState::NotAState(_)
        ));
    }

    #[test]
    fn alpha_zero_valid_initial_is_iso_win() {
        let m = StructureBuilder::new("m", bin_vocab(), &["a"]).build();
        let c = cfg(1, 0);
        match initial_state(&m, &m, &c) {
            InitialState::Valid(s) => {
                assert_eq!(
                    winner_if_terminal(&m, &m, &s, None, &c),
                    Some(Winner::Iso)
                );
            }
            _ => panic!(),
        }
    }

    #[test]
    fn ais_moves_empty_exactly_at_clock_zero() {
        let m = StructureBuilder::new("m", bin_vocab(), &["a", "b"]).build();
        let c = cfg(1, 0);
        let InitialState::Valid(s) = initial_state(&m, &m, &c) else { panic!() };
        assert!(legal_ais_moves(&m, &m, &s, &c).is_empty());
    }

    #[test]
    fn ais_move_count_matches_direct_enumeration() {
        // beta = 1, theta = 1, both universes of size 2: per side, A' is any
        // singleton or the empty set, so (2+1) per side, beta_next = 0 only
        let m = StructureBuilder::new("m", bin_vocab(), &["a", "b"]).build();
        let c = cfg(1, 1);
        let InitialState::Valid(s) = initial_state(&m, &m, &c) else { panic!() };
        let moves = legal_ais_moves(&m, &m, &s, &c);
        assert_eq!(moves.len(), 6);
        assert!(moves.iter().all(|mv| mv.beta_next == 0));
    }

    #[test]
    fn saturated_side_pins_the_set_choice() {
        let m = StructureBuilder::new("m", bin_vocab(), &["a", "b"]).build();
        let c = cfg(1, 3);
        let s = State {
            a1: ["a".to_string()].into(),
            a2: BTreeSet::new(),
            h1: [("a".to_string(), 2)].into(),
            h2: BTreeMap::new(),
            g: PartialMap::new(),
            beta: 2,
            n: 1,
        };
        let moves = legal_ais_moves(&m, &m, &s, &c);
        for mv in moves.iter().filter(|mv| mv.iota == 1) {
            assert_eq!(mv.a_prime, s.a1);
        }
    }

    #[test]
    fn bookkeeping_response_is_unique_when_nothing_due() {
        let m = StructureBuilder::new("m", bin_vocab(), &["a", "b"]).build();
        let c = cfg(2, 3);
        let s = State {
            a1: ["a".to_string()].into(),
            a2: BTreeSet::new(),
            h1: [("a".to_string(), 3)].into(), // not due at n=1 (3 >= 2)
            h2: BTreeMap::new(),
            g: PartialMap::new(),
            beta: 2,
            n: 1,
        };
        let mv = AisMove { beta_next: 1, iota: 1, a_prime: s.a1.clone() };
        let responses = legal_iso_responses(&m, &m, &s, &mv, &c);
        assert_eq!(responses.len(), 1);
        let t = &responses[0];
        assert_eq!(t.beta, 1);
        assert_eq!(t.n, 2);
        assert_eq!(t.a1, s.a1);
        assert!(t.g.is_empty());
    }

    #[test]
    fn unmatchable_due_element_leaves_iso_stuck() {
        let vocab = Vocabulary::new().with_predicate("P", 1);
        let m1 = StructureBuilder::new("m1", vocab.clone(), &["a"])
            .tuple("P", &["a"])
            .build();
        let m2 = StructureBuilder::new("m2", vocab, &["x"]).build();
        let c = cfg(1, 3);
        let s = State {
            a1: ["a".to_string()].into(),
            a2: BTreeSet::new(),
            h1: [("a".to_string(), 1)].into(), // due at the next move
            h2: BTreeMap::new(),
            g: PartialMap::new(),
            beta: 2,
            n: 1,
        };
        let mv = AisMove { beta_next: 1, iota: 1, a_prime: s.a1.clone() };
        assert!(legal_iso_responses(&m1, &m2, &s, &mv, &c).is_empty());
        assert_eq!(
            winner_if_terminal(&m1, &m2, &s, Some(&mv), &c),
            Some(Winner::Ais)
        );
    }

    #[test]
    fn due_pair_forces_the_order_preserving_injection() {
        // L2 vs L2, theta 2, both elements of M1 due: of the two injections
        // only the order-preserving one survives the preservation check
        let l2 = linear("L2", &["a", "b"]);
        let c = cfg(2, 3);
        let s = State {
            a1: ["a".to_string(), "b".to_string()].into(),
            a2: BTreeSet::new(),
            h1: [("a".to_string(), 1), ("b".to_string(), 1)].into(),
            h2: BTreeMap::new(),
            g: PartialMap::new(),
            beta: 2,
            n: 1,
        };
        let mv = AisMove { beta_next: 1, iota: 1, a_prime: s.a1.clone() };
        let responses = legal_iso_responses(&l2, &l2, &s, &mv, &c);
        assert_eq!(responses.len(), 1);
        let t = &responses[0];
        assert_eq!(t.g.get(&"a".to_string()), Some(&"a".to_string()));
        assert_eq!(t.g.get(&"b".to_string()), Some(&"b".to_string()));
        assert!(validate_state(&l2, &l2, t, &c).is_ok());
    }

    #[test]
    fn every_response_passes_the_state_checker() {
        let m1 = StructureBuilder::new("m1", bin_vocab(), &["a", "b"])
            .tuple("E", &["a", "b"])
            .build();
        let m2 = StructureBuilder::new("m2", bin_vocab(), &["x", "y"])
            .tuple("E", &["x", "x"])
            .build();
        let c = cfg(2, 3);
        let InitialState::Valid(s) = initial_state(&m1, &m2, &c) else { panic!() };
        for mv in legal_ais_moves(&m1, &m2, &s, &c) {
            for t in legal_iso_responses(&m1, &m2, &s, &mv, &c) {
                validate_state(&m1, &m2, &t, &c).expect("response must be a state");
                assert_eq!(t.n, s.n + 1);
                assert!(t.beta < s.beta);
            }
        }
    }

    #[test]
    fn modes_agree_on_responses() {
        let m1 = StructureBuilder::new("m1", bin_vocab(), &["a", "b"])
            .tuple("E", &["a", "b"])
            .build();
        let m2 = StructureBuilder::new("m2", bin_vocab(), &["x", "y"])
            .tuple("E", &["y", "x"])
            .build();
        let at = GameConfig::new(GammaMode::At, 2, Clock::Fin(2));
        let bs = GameConfig::new(GammaMode::Bs, 2, Clock::Fin(2));
        let InitialState::Valid(s) = initial_state(&m1, &m2, &at) else { panic!() };
        for mv in legal_ais_moves(&m1, &m2, &s, &at) {
            assert_eq!(
                legal_iso_responses(&m1, &m2, &s, &mv, &at),
                legal_iso_responses(&m1, &m2, &s, &mv, &bs)
            );
        }
    }
}
