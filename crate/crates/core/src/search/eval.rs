use crate::engine::{GameState, Outcome, Player, UnitKind};

/// Heuristic value of `state` for `perspective`, in [-1, 1].
///
/// Terminal states score 1 / -1 / 0 for win / loss / draw. Otherwise the
/// score is `1 - d*h / (D*H)` with `d` the closest Manhattan distance from one
/// of our units to the enemy King, `h` that King's health, `D = width + height`
/// and `H` the King's maximum health.
pub fn evaluate_state(state: &GameState, perspective: Player) -> f64 {
    match state.outcome() {
        Outcome::Win(p) if p == perspective => return 1.0,
        Outcome::Win(_) => return -1.0,
        Outcome::Draw => return 0.0,
        Outcome::Ongoing => {}
    }
    let king = state
        .king(1 - perspective)
        .expect("ongoing game has both kings");
    let d = state
        .units_of(perspective)
        .map(|u| u.pos.manhattan(king.pos))
        .min()
        .unwrap_or(0);
    let max_d = state.grid().width() + state.grid().height();
    let max_h = state.spec(UnitKind::King).max_health;
    heuristic_value(d, king.health, max_d, max_h)
}

pub(crate) fn heuristic_value(d: i32, h: i32, max_d: i32, max_h: i32) -> f64 {
    (1.0 - (d as f64 * h as f64) / (max_d as f64 * max_h as f64)).clamp(-1.0, 1.0)
}

/// UCB1 score; unvisited edges score `+inf`.
pub fn ucb1(x: f64, n: f64, parent_n: f64, c: f64) -> f64 {
    if n <= 0.0 {
        return f64::INFINITY;
    }
    x / n + c * (parent_n.max(1.0).ln() / n).sqrt()
}
