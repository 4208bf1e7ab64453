//! Hedonic negotiation with the two-sided preference test, used for the
//! RRH association and for the Shapley-based RRU allocation.

use std::collections::BTreeSet;

use super::{strictly_greater, RrhPartition, UtilityContext, SWEEP_CAP};
use crate::error::{param, Error, Result};

/// `k` moves from `b` to `a` iff its own payoff rises (C1) and the two
/// coalitions' total utility rises (C2).
///
/// `payoff(k, coalition_without_k, slot)` and `utility(coalition, slot)`.
pub(crate) fn prefers_with<P, U>(
    k: usize,
    a: &BTreeSet<usize>,
    slot_a: usize,
    b: &BTreeSet<usize>,
    slot_b: usize,
    payoff: &mut P,
    utility: &mut U,
) -> bool
where
    P: FnMut(usize, &BTreeSet<usize>, usize) -> f64,
    U: FnMut(&BTreeSet<usize>, usize) -> f64,
{
    if slot_a == slot_b || a.contains(&k) || !b.contains(&k) {
        return false;
    }
    let mut b_minus = b.clone();
    b_minus.remove(&k);
    if !strictly_greater(payoff(k, a, slot_a), payoff(k, &b_minus, slot_b)) {
        return false;
    }
    let mut a_plus = a.clone();
    a_plus.insert(k);
    strictly_greater(
        utility(&a_plus, slot_a) + utility(&b_minus, slot_b),
        utility(b, slot_b) + utility(a, slot_a),
    )
}

/// Sweep coalitions and members in ascending order, moving any player
/// that strictly prefers another coalition, until a sweep makes no move.
/// With `allow_new`, a member of a coalition of two or more may also
/// leave for a fresh empty coalition; empty coalitions are then dropped.
pub(crate) fn negotiate<P, U>(
    slots: &mut Vec<BTreeSet<usize>>,
    allow_new: bool,
    mut payoff: P,
    mut utility: U,
) -> Result<usize>
where
    P: FnMut(usize, &BTreeSet<usize>, usize) -> f64,
    U: FnMut(&BTreeSet<usize>, usize) -> f64,
{
    for sweep in 0..SWEEP_CAP {
        let mut moved = false;
        for m in 0..slots.len() {
            let members: Vec<usize> = slots[m].iter().copied().collect();
            for k in members {
                let mut targets: Vec<usize> = (0..slots.len()).filter(|&n| n != m).collect();
                if allow_new && slots[m].len() > 1 {
                    targets.push(slots.len());
                }
                for n in targets {
                    let empty = BTreeSet::new();
                    let a = slots.get(n).unwrap_or(&empty);
                    if prefers_with(k, a, n, &slots[m], m, &mut payoff, &mut utility) {
                        slots[m].remove(&k);
                        if n == slots.len() {
                            slots.push(BTreeSet::from([k]));
                        } else {
                            slots[n].insert(k);
                        }
                        moved = true;
                        break;
                    }
                }
            }
        }
        if allow_new {
            slots.retain(|s| !s.is_empty());
        }
        if !moved {
            return Ok(sweep + 1);
        }
    }
    Err(Error::NonConvergence { sweeps: SWEEP_CAP })
}

/// Preference of RRH `rrh`, currently in `current` serving
/// `current_content`, for `target` serving `target_content`.
pub fn prefers(
    ctx: &UtilityContext<'_>,
    rrh: usize,
    target: &BTreeSet<usize>,
    target_content: usize,
    current: &BTreeSet<usize>,
    current_content: usize,
) -> bool {
    // slots are only compared for identity; distinct contents map to distinct slots
    let (sa, sb) = if target_content == current_content {
        (0, 0)
    } else {
        (0, 1)
    };
    let content_of = |slot: usize| {
        if slot == sa {
            target_content
        } else {
            current_content
        }
    };
    prefers_with(
        rrh,
        target,
        sa,
        current,
        sb,
        &mut |k, c, s| ctx.rrh_payoff(k, c, content_of(s)),
        &mut |c, s| ctx.coalition_value(c, content_of(s)),
    )
}

/// Each RRH, in ascending order, joins the coalition where its payoff is
/// largest given the RRHs placed before it (lowest content on ties).
pub fn initial_rrh_partition(contents: &[usize], ctx: &UtilityContext<'_>) -> Result<RrhPartition> {
    if contents.is_empty() {
        return param("an RRU must carry at least one content");
    }
    let mut coalitions = vec![BTreeSet::new(); contents.len()];
    for k in 0..ctx.instance().rrh_count() {
        let mut best = 0;
        let mut best_payoff = f64::NEG_INFINITY;
        for (m, &c) in contents.iter().enumerate() {
            let phi = ctx.rrh_payoff(k, &coalitions[m], c);
            if phi > best_payoff {
                best = m;
                best_payoff = phi;
            }
        }
        coalitions[best].insert(k);
    }
    RrhPartition::new(contents.to_vec(), coalitions)
}

/// Hedonic RRH association for the contents sharing one RRU. Starts from
/// `init` or, when absent, from [`initial_rrh_partition`].
pub fn hedonic_rrh_association(
    contents: &[usize],
    ctx: &UtilityContext<'_>,
    init: Option<RrhPartition>,
) -> Result<RrhPartition> {
    let mut sorted = contents.to_vec();
    sorted.sort_unstable();
    let start = match init {
        Some(p) => {
            if p.contents != sorted {
                return param("initial partition covers different contents");
            }
            let covered: usize = p.coalitions.iter().map(|c| c.len()).sum();
            if covered != ctx.instance().rrh_count()
                || p.coalitions.iter().flatten().any(|&r| r >= covered)
            {
                return param("initial partition must cover every RRH");
            }
            p
        }
        None => initial_rrh_partition(&sorted, ctx)?,
    };
    let mut slots = start.coalitions;
    negotiate(
        &mut slots,
        false,
        |k, c, s| ctx.rrh_payoff(k, c, sorted[s]),
        |c, s| ctx.coalition_value(c, sorted[s]),
    )?;
    RrhPartition::new(sorted, slots)
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::*;

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn single_content_takes_everything() {
        let inst = instance(&small_spec(), 3);
        let ctx = inst.table(1).unwrap();
        let p = hedonic_rrh_association(&[1], &ctx, None).unwrap();
        assert_eq!(p.coalitions[0].len(), inst.rrh_count());
    }

    #[test]
    fn each_rrh_serves_its_neighbour() {
        let inst = line_instance(&[0.0, 1000.0], &[(5.0, 0), (995.0, 1)], 2, &[], 0.0);
        let ctx = inst.table(1).unwrap();
        let p = hedonic_rrh_association(&[0, 1], &ctx, None).unwrap();
        assert_eq!(p.coalitions, vec![set(&[0]), set(&[1])]);
        // brute force over all four assignments
        let mut best = (f64::NEG_INFINITY, 0);
        for mask in 0..4usize {
            let a: BTreeSet<usize> = (0..2).filter(|r| mask >> r & 1 == 0).collect();
            let b: BTreeSet<usize> = (0..2).filter(|r| mask >> r & 1 == 1).collect();
            let w = ctx.coalition_value(&a, 0) + ctx.coalition_value(&b, 1);
            if w > best.0 {
                best = (w, mask);
            }
        }
        assert_eq!(best.1, 0b10);
    }

    #[test]
    fn welfare_guard_blocks_selfish_moves() {
        // RRH 2 shares an expensive backhaul object with RRH 1. Moving to
        // the cached object halves its cost share, so C1 can hold while the
        // total utility drops.
        let rrhs = [0.0, 1000.0, 500.0];
        let users = [(400.0, 0), (520.0, 1)];
        let probe = line_instance(&rrhs, &users, 2, &[0], 0.0);
        let ctx = probe.table(1).unwrap();
        let (a, b) = (set(&[0]), set(&[1, 2]));
        let delta = ctx.marginal(2, &a, 0) - ctx.marginal(2, &set(&[1]), 1);
        assert!(delta < 0.0);
        let c0 = -delta / 2.46;
        let inst = line_instance(&rrhs, &users, 2, &[0], c0);
        let ctx = inst.table(1).unwrap();
        let c1 = ctx.rrh_payoff(2, &a, 0) > ctx.rrh_payoff(2, &set(&[1]), 1);
        let c2 = ctx.coalition_value(&set(&[0, 2]), 0) + ctx.coalition_value(&set(&[1]), 1)
            > ctx.coalition_value(&b, 1) + ctx.coalition_value(&a, 0);
        assert!(c1 && !c2);
        assert!(!prefers(&ctx, 2, &a, 0, &b, 1));
        assert!(!prefers(&ctx, 1, &b, 1, &b, 1));
    }

    #[test]
    fn moves_that_raise_both_are_taken() {
        // all users want content 0 next to RRH 1, which starts on content 1
        let inst = line_instance(&[0.0, 500.0], &[(500.0, 0), (0.0, 0)], 2, &[], 0.0);
        let ctx = inst.table(1).unwrap();
        assert!(prefers(&ctx, 1, &set(&[0]), 0, &set(&[1]), 1));
        let init = RrhPartition::new(vec![0, 1], vec![set(&[0]), set(&[1])]).unwrap();
        let p = hedonic_rrh_association(&[0, 1], &ctx, Some(init)).unwrap();
        assert_eq!(p.coalitions[0], set(&[0, 1]));
    }
}
