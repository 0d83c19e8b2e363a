//! Approximate-homomorphism errors between two tree nodes, computed from the
//! sampled edges of each node.

use serde::{Deserialize, Serialize};

use crate::engine::{Pos, UnitId};

/// What an action did to the acting unit (and its target, if any). Two
/// samples of the same action "reach the same next state" iff their
/// signatures are equal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NextStateSignature {
    pub pos: Pos,
    pub health: i32,
    /// Target id and its health after the action (0 when killed).
    pub target: Option<(UnitId, i32)>,
}

/// One sampled edge `<s, a, R>`: the action's key, the running mean of the
/// returns backed up through it, and where it led.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSample {
    pub action: u64,
    pub mean_return: f64,
    pub next: NextStateSignature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransitionErrorMode {
    /// Sum of per-action total-variation terms divided by the action-union size.
    #[default]
    Normalized,
    /// Plain sum of per-action total-variation terms.
    Raw,
}

/// Walks the union of two action-sorted sample lists.
fn merge_union<'a>(
    a: &'a [EdgeSample],
    b: &'a [EdgeSample],
) -> impl Iterator<Item = (Option<&'a EdgeSample>, Option<&'a EdgeSample>)> + 'a {
    let (mut i, mut j) = (0, 0);
    std::iter::from_fn(move || match (a.get(i), b.get(j)) {
        (None, None) => None,
        (Some(x), None) => {
            i += 1;
            Some((Some(x), None))
        }
        (None, Some(y)) => {
            j += 1;
            Some((None, Some(y)))
        }
        (Some(x), Some(y)) => match x.action.cmp(&y.action) {
            std::cmp::Ordering::Less => {
                i += 1;
                Some((Some(x), None))
            }
            std::cmp::Ordering::Greater => {
                j += 1;
                Some((None, Some(y)))
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
                Some((Some(x), Some(y)))
            }
        },
    })
}

/// `max_a |R(s1,a) - R(s2,a)|` over the union of sampled actions; an action
/// missing from one node counts as reward 0 there. Inputs must be sorted by action.
pub fn reward_error(a: &[EdgeSample], b: &[EdgeSample]) -> f64 {
    merge_union(a, b)
        .map(|(x, y)| {
            let rx = x.map_or(0.0, |s| s.mean_return);
            let ry = y.map_or(0.0, |s| s.mean_return);
            (rx - ry).abs()
        })
        .fold(0.0, f64::max)
}

/// Transition error: each union action contributes 0 when both nodes sampled
/// it and reached equal signatures, else 2. Inputs must be sorted by action.
pub fn transition_error(a: &[EdgeSample], b: &[EdgeSample], mode: TransitionErrorMode) -> f64 {
    let mut total = 0.0;
    let mut union = 0usize;
    for (x, y) in merge_union(a, b) {
        union += 1;
        let same = matches!((x, y), (Some(x), Some(y)) if x.next == y.next);
        if !same {
            total += 2.0;
        }
    }
    match mode {
        TransitionErrorMode::Raw => total,
        TransitionErrorMode::Normalized if union == 0 => 0.0,
        TransitionErrorMode::Normalized => total / union as f64,
    }
}
