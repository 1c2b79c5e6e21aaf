//! Independent checkers the solver is verified against: a plain exhaustive
//! minimax with no memoization and no canonicalization, and the composed
//! state construction for sum/product playouts.

use rand::Rng;

use crate::error::{CoreError, Result};
use crate::game::{
    initial_state, legal_ais_moves, legal_iso_responses, AisMove, Clock, GameConfig,
    InitialState, State, Winner,
};
use crate::solver::Solver;
use crate::structure::{ElemId, Structure};

/// Full game-tree search on raw states. Deliberately shares nothing with the
/// solver beyond the move rules themselves.
pub fn minimax_winner(m1: &Structure, m2: &Structure, cfg: &GameConfig) -> Winner {
    match initial_state(m1, m2, cfg) {
        InitialState::NotAState(_) => Winner::Ais,
        InitialState::Valid(s) => minimax(m1, m2, &s, cfg),
    }
}

fn minimax(m1: &Structure, m2: &Structure, s: &State, cfg: &GameConfig) -> Winner {
    if s.beta == 0 {
        return Winner::Iso;
    }
    for mv in legal_ais_moves(m1, m2, s, cfg) {
        let escapes = legal_iso_responses(m1, m2, s, &mv, cfg)
            .iter()
            .any(|t| minimax(m1, m2, t, cfg) == Winner::Iso);
        if !escapes {
            return Winner::Ais;
        }
    }
    Winner::Iso
}

fn pair(a: &ElemId, b: &ElemId) -> ElemId {
    format!("{a}|{b}")
}

fn tag(side: u8, e: &ElemId) -> ElemId {
    format!("{side}:{e}")
}

/// The product-game state assembled from two component states: chosen sets
/// multiply, matches pair up, and a product element's debt is the max of its
/// coordinates' debts.
pub fn compose_product_state(s1: &State, s2: &State) -> Result<State> {
    if s1.n != s2.n {
        return Err(CoreError::CounterMismatch(format!(
            "component counters {} vs {}",
            s1.n, s2.n
        )));
    }
    if s1.beta != s2.beta {
        return Err(CoreError::CounterMismatch(format!(
            "component clocks {} vs {}",
            s1.beta, s2.beta
        )));
    }
    let product_side = |x1: &std::collections::BTreeSet<ElemId>,
                        x2: &std::collections::BTreeSet<ElemId>,
                        h1: &std::collections::BTreeMap<ElemId, u32>,
                        h2: &std::collections::BTreeMap<ElemId, u32>| {
        let mut set = std::collections::BTreeSet::new();
        let mut debts = std::collections::BTreeMap::new();
        for b in x1 {
            for c in x2 {
                let id = pair(b, c);
                debts.insert(id.clone(), h1[b].max(h2[c]));
                set.insert(id);
            }
        }
        (set, debts)
    };
    let (a1, h1) = product_side(&s1.a1, &s2.a1, &s1.h1, &s2.h1);
    let (a2, h2) = product_side(&s1.a2, &s2.a2, &s1.h2, &s2.h2);
    let mut g = crate::partial_map::PartialMap::new();
    for (b, b2) in s1.g.iter() {
        for (c, c2) in s2.g.iter() {
            if !g.insert(pair(b, c), pair(b2, c2)) {
                return Err(CoreError::InvalidInput("composed map not injective".into()));
            }
        }
    }
    Ok(State {
        a1,
        a2,
        h1,
        h2,
        g,
        beta: s1.beta,
        n: s1.n,
    })
}

/// The sum-game state assembled from two component states by tagged union.
pub fn compose_sum_state(s1: &State, s2: &State) -> Result<State> {
    if s1.n != s2.n {
        return Err(CoreError::CounterMismatch(format!(
            "component counters {} vs {}",
            s1.n, s2.n
        )));
    }
    if s1.beta != s2.beta {
        return Err(CoreError::CounterMismatch(format!(
            "component clocks {} vs {}",
            s1.beta, s2.beta
        )));
    }
    let union_side = |x1: &std::collections::BTreeSet<ElemId>,
                      x2: &std::collections::BTreeSet<ElemId>,
                      h1: &std::collections::BTreeMap<ElemId, u32>,
                      h2: &std::collections::BTreeMap<ElemId, u32>| {
        let mut set = std::collections::BTreeSet::new();
        let mut debts = std::collections::BTreeMap::new();
        for e in x1 {
            let id = tag(1, e);
            debts.insert(id.clone(), h1[e]);
            set.insert(id);
        }
        for e in x2 {
            let id = tag(2, e);
            debts.insert(id.clone(), h2[e]);
            set.insert(id);
        }
        (set, debts)
    };
    let (a1, h1) = union_side(&s1.a1, &s2.a1, &s1.h1, &s2.h1);
    let (a2, h2) = union_side(&s1.a2, &s2.a2, &s1.h2, &s2.h2);
    let mut g = crate::partial_map::PartialMap::new();
    for (a, b) in s1.g.iter() {
        g.insert(tag(1, a), tag(1, b));
    }
    for (a, b) in s2.g.iter() {
        g.insert(tag(2, a), tag(2, b));
    }
    Ok(State {
        a1,
        a2,
        h1,
        h2,
        g,
        beta: s1.beta,
        n: s1.n,
    })
}

/// What one adversarial playout produced.
#[derive(Debug, Clone)]
pub struct Playout {
    pub survived: bool,
    pub moves: u32,
    pub failure: Option<String>,
}

/// Drive one playout of the product game where ISO plays the composed
/// strategy from the two component solvers and the adversary plays random
/// rectangular set choices (the shape the composition produces), at the
/// inflated budget theta². Fails if a component strategy has no winning
/// response or a composed state breaks a state invariant.
#[allow(clippy::too_many_arguments)]
pub fn product_playout(
    left: (&Structure, &Structure),
    right: (&Structure, &Structure),
    products: (&Structure, &Structure),
    cfg: &GameConfig,
    rng: &mut impl Rng,
) -> Result<Playout> {
    let (m11, m12) = left; // component 1: M¹₁ vs M²₁ ... see caller
    let (m21, m22) = right;
    let alpha = cfg.alpha.finite().expect("finite clock");
    let mut solver1 = Solver::new(m11, m12, cfg.mode, cfg.theta);
    let mut solver2 = Solver::new(m21, m22, cfg.mode, cfg.theta);
    let product_cfg = GameConfig::new(cfg.mode, cfg.theta * cfg.theta, Clock::Fin(alpha));

    let InitialState::Valid(mut s1) = initial_state(m11, m12, cfg) else {
        return Ok(Playout { survived: false, moves: 0, failure: Some("component 1 initial invalid".into()) });
    };
    let InitialState::Valid(mut s2) = initial_state(m21, m22, cfg) else {
        return Ok(Playout { survived: false, moves: 0, failure: Some("component 2 initial invalid".into()) });
    };
    let mut composed = compose_product_state(&s1, &s2)?;
    let mut moves = 0;
    while composed.beta > 0 {
        let beta_next = rng.gen_range(0..composed.beta);
        let iota = if rng.gen_bool(0.5) { 1 } else { 2 };
        let mv1 = random_superset_move(m11, m12, &s1, iota, beta_next, cfg.theta, rng);
        let mv2 = random_superset_move(m21, m22, &s2, iota, beta_next, cfg.theta, rng);
        let Some(t1) = solver1.best_response(&s1, &mv1)? else {
            return Ok(Playout { survived: false, moves, failure: Some(format!("component 1 stuck at move {moves}")) });
        };
        let Some(t2) = solver2.best_response(&s2, &mv2)? else {
            return Ok(Playout { survived: false, moves, failure: Some(format!("component 2 stuck at move {moves}")) });
        };
        s1 = t1;
        s2 = t2;
        composed = compose_product_state(&s1, &s2)?;
        if let Err(v) = crate::game::validate_state(products.0, products.1, &composed, &product_cfg) {
            return Ok(Playout { survived: false, moves, failure: Some(format!("composed state invalid: {v}")) });
        }
        moves += 1;
    }
    Ok(Playout { survived: true, moves, failure: None })
}

/// One playout of the sum game: adversary picks split-shaped sets (each
/// component part within the component budget), ISO composes component
/// responses by tagged union, validated at budget 2·theta.
pub fn sum_playout(
    left: (&Structure, &Structure),
    right: (&Structure, &Structure),
    sums: (&Structure, &Structure),
    cfg: &GameConfig,
    rng: &mut impl Rng,
) -> Result<Playout> {
    let (m11, m12) = left;
    let (m21, m22) = right;
    let alpha = cfg.alpha.finite().expect("finite clock");
    let mut solver1 = Solver::new(m11, m12, cfg.mode, cfg.theta);
    let mut solver2 = Solver::new(m21, m22, cfg.mode, cfg.theta);
    let sum_cfg = GameConfig::new(cfg.mode, cfg.theta * 2, Clock::Fin(alpha));

    let InitialState::Valid(mut s1) = initial_state(m11, m12, cfg) else {
        return Ok(Playout { survived: false, moves: 0, failure: Some("component 1 initial invalid".into()) });
    };
    let InitialState::Valid(mut s2) = initial_state(m21, m22, cfg) else {
        return Ok(Playout { survived: false, moves: 0, failure: Some("component 2 initial invalid".into()) });
    };
    let mut composed = compose_sum_state(&s1, &s2)?;
    let mut moves = 0;
    while composed.beta > 0 {
        let beta_next = rng.gen_range(0..composed.beta);
        let iota = if rng.gen_bool(0.5) { 1 } else { 2 };
        let mv1 = random_superset_move(m11, m12, &s1, iota, beta_next, cfg.theta, rng);
        let mv2 = random_superset_move(m21, m22, &s2, iota, beta_next, cfg.theta, rng);
        let Some(t1) = solver1.best_response(&s1, &mv1)? else {
            return Ok(Playout { survived: false, moves, failure: Some(format!("component 1 stuck at move {moves}")) });
        };
        let Some(t2) = solver2.best_response(&s2, &mv2)? else {
            return Ok(Playout { survived: false, moves, failure: Some(format!("component 2 stuck at move {moves}")) });
        };
        s1 = t1;
        s2 = t2;
        composed = compose_sum_state(&s1, &s2)?;
        if let Err(v) = crate::game::validate_state(sums.0, sums.1, &composed, &sum_cfg) {
            return Ok(Playout { survived: false, moves, failure: Some(format!("composed state invalid: {v}")) });
        }
        moves += 1;
    }
    Ok(Playout { survived: true, moves, failure: None })
}

fn random_superset_move(
    m1: &Structure,
    m2: &Structure,
    s: &State,
    iota: u8,
    beta_next: u32,
    theta: u32,
    rng: &mut impl Rng,
) -> AisMove {
    let (universe, base) = if iota == 1 {
        (&m1.universe, &s.a1)
    } else {
        (&m2.universe, &s.a2)
    };
    let mut a_prime = base.clone();
    let free: Vec<&ElemId> = universe.iter().filter(|e| !base.contains(*e)).collect();
    let room = theta as usize - base.len();
    if room > 0 && !free.is_empty() {
        let take = rng.gen_range(0..=room.min(free.len()));
        let mut pool = free;
        for _ in 0..take {
            let i = rng.gen_range(0..pool.len());
            a_prime.insert(pool.swap_remove(i).clone());
        }
    }
    AisMove { beta_next, iota, a_prime }
}
