//! Randomized construct/backprop/split interleavings checked against the
//! oracle after every step.

use std::collections::BTreeSet;

use super::{groups_of, oracle_errors, oracle_extend, ToyTree};
use elastic_mcts::abstraction::{Abstraction, NodeId, Thresholds};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOL: f64 = 1e-9;

/// Checks every invariant of a live (not yet split) abstraction.
fn check_live(phi: &Abstraction, tree: &ToyTree) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for (gid, g) in phi.groups().iter().enumerate() {
        if g.id != gid || g.members.is_empty() {
            return Err(format!("group {gid} malformed"));
        }
        let mut sx = 0.0;
        let mut sn = 0.0;
        for &m in &g.members {
            if m == 0 || m >= tree.nodes.len() {
                return Err(format!("group {gid} holds node {m}"));
            }
            if !seen.insert(m) {
                return Err(format!("node {m} in two groups"));
            }
            if phi.group_id(m) != Some(gid) {
                return Err(format!("node {m} lookup disagrees with group {gid}"));
            }
            let node = &tree.nodes[m];
            if (node.depth, node.slot) != (g.depth, g.unit_slot) {
                return Err(format!("node {m} outside layer of group {gid}"));
            }
            sx += node.x;
            sn += node.n;
        }
        if (sx - g.sum_x).abs() > TOL || (sn - g.sum_n).abs() > TOL {
            return Err(format!(
                "group {gid} sums ({}, {}) but members sum ({sx}, {sn})",
                g.sum_x, g.sum_n
            ));
        }
        let m = g.members.len() as f64;
        let (x, n) = g.stats();
        if (x - sx / m).abs() > TOL || (n - sn / m).abs() > TOL {
            return Err(format!("group {gid} averages wrong"));
        }
    }
    if phi.group_id(0).is_some() {
        return Err("root grouped".into());
    }
    Ok(())
}

/// Complete linkage for the members that joined since `before`, checked at
/// the statistics they were grouped under.
fn check_linkage(
    phi: &Abstraction,
    before: &[Vec<NodeId>],
    tree: &ToyTree,
    th: &Thresholds,
) -> Result<(), String> {
    for (gid, g) in phi.groups().iter().enumerate() {
        let old = before.get(gid).map_or(0, Vec::len);
        if g.members[..old] != *before.get(gid).map_or(&[][..], |v| &v[..]) {
            return Err(format!("group {gid} lost or reordered members"));
        }
        for (i, &new) in g.members.iter().enumerate().skip(old) {
            for &m in &g.members[..i] {
                let (er, et) = oracle_errors(tree, new, m);
                if er > th.eta_r || et > th.eta_t {
                    return Err(format!(
                        "{new} and {m} share group {gid} with errors ({er}, {et})"
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn interleaving(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let th = if seed.is_multiple_of(5) {
        Thresholds::unsatisfiable()
    } else {
        Thresholds::default()
    };
    let size = rng.random_range(1..8);
    let mut tree = ToyTree::random(&mut rng, size);
    let mut phi = Abstraction::new();
    let mut last_grouped = 0;
    let steps = rng.random_range(10..60);
    for step in 0..steps {
        match rng.random_range(0..10) {
            0..=3 => {
                if let Some(leaf) = tree.grow(&mut rng, 5) {
                    tree.backprop(&mut phi, leaf, 0.04 * f64::from(rng.random_range(-5..=5)));
                }
            }
            4..=6 => {
                let node = rng.random_range(0..tree.nodes.len());
                tree.backprop(&mut phi, node, 0.04 * f64::from(rng.random_range(-5..=5)));
            }
            7 | 8 => {
                let before = groups_of(&phi);
                let expected = if phi.is_abandoned() {
                    Vec::new()
                } else {
                    oracle_extend(&tree, &th, before.clone())
                };
                let report = phi.construct(&tree, &th, step);
                if groups_of(&phi) != expected {
                    return Err(format!("step {step}: construct disagrees with the oracle"));
                }
                check_linkage(&phi, &before, &tree, &th)?;
                let grouped = phi
                    .groups()
                    .iter()
                    .filter(|g| g.len() > 1)
                    .map(|g| g.len())
                    .sum();
                let count = phi.group_count(tree.nodes.len());
                if count != report.groups {
                    return Err(format!("step {step}: report says {} groups", report.groups));
                }
                if !phi.is_abandoned() {
                    // Groups only grow: abstract nodes never outnumber ground nodes
                    // and the set of grouped nodes never shrinks.
                    if grouped < last_grouped || count > tree.nodes.len() {
                        return Err(format!("step {step}: grouping shrank"));
                    }
                }
                last_grouped = grouped;
            }
            _ => {
                let mut expect = tree.clone();
                for g in phi.groups().iter().filter(|g| g.len() > 1) {
                    let (x, n) = g.stats();
                    for &m in &g.members {
                        expect.nodes[m].x = x;
                        expect.nodes[m].n = n;
                    }
                }
                phi.split(&mut tree);
                let close = |a: &ToyTree, b: &ToyTree| {
                    a.nodes
                        .iter()
                        .zip(&b.nodes)
                        .all(|(p, q)| (p.x - q.x).abs() <= TOL && (p.n - q.n).abs() <= TOL)
                };
                if !close(&tree, &expect) {
                    return Err(format!("step {step}: split did not assign group averages"));
                }
                let once = tree.clone();
                phi.split(&mut tree);
                if !close(&tree, &once) || !phi.groups().is_empty() || !phi.is_abandoned() {
                    return Err(format!("step {step}: split is not idempotent"));
                }
                if (phi.compression_rate(tree.nodes.len()) - 1.0).abs() > TOL {
                    return Err(format!("step {step}: split left compression above 1"));
                }
                last_grouped = 0;
            }
        }
        if !phi.is_abandoned() {
            check_live(&phi, &tree).map_err(|e| format!("step {step}: {e}"))?;
        }
    }
    Ok(())
}
