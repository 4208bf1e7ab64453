//! Nested merge/split RRU allocation with hedonic RRH association inside
//! every utility evaluation, plus the orthogonal and full-reuse baselines.

use std::collections::{BTreeSet, HashMap};

use super::hedonic::hedonic_rrh_association;
use super::{
    finish_allocation, strictly_greater, Allocation, ClusterInstance, RrhPartition, RruPartition,
    UtilityContext,
};
use crate::energy::ObjectCounting;
use crate::error::{param, Error, Result};

/// `ψ(T) = [Σ_n v(R_n)]⁺` for an RRU carrying `part.contents`.
pub(crate) fn utility_of_association(part: &RrhPartition, ctx: &UtilityContext<'_>) -> f64 {
    let total: f64 = part
        .contents
        .iter()
        .zip(&part.coalitions)
        .map(|(&c, r)| ctx.coalition_value(r, c))
        .sum();
    total.max(0.0)
}

/// RRU utility from the RRH association utilities.
pub fn rru_coalition_utility(part: &RrhPartition, ctx: &UtilityContext<'_>) -> f64 {
    utility_of_association(part, ctx)
}

/// The same utility written directly as capacity minus the RRU's power
/// cost `c_0 (Σ|R_n| P_R + n_T P_CC + n_C P_BH)`.
pub fn rru_coalition_utility_direct(part: &RrhPartition, ctx: &UtilityContext<'_>) -> f64 {
    let inst = ctx.instance();
    let p = inst.power();
    let mut capacity = 0.0;
    let mut members = 0usize;
    let (mut cached, mut cloud) = (0usize, 0usize);
    for (&c, r) in part.contents.iter().zip(&part.coalitions) {
        capacity += ctx.coalition_eff_cap(r, c);
        members += r.len();
        if !r.is_empty() {
            if inst.is_cached(c) {
                cached += 1;
            } else {
                cloud += 1;
            }
        }
    }
    if inst.counting() == ObjectCounting::Catalog {
        cached = inst.cache().size();
        cloud = inst.content_count();
    }
    let cost = inst.cost_coeff()
        * (members as f64 * p.p_rrh_nominal
            + cached as f64 * p.p_cache_per_object
            + cloud as f64 * p.p_backhaul);
    (capacity - cost).max(0.0)
}

/// Which coalition tuples a merge may combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MergeScope {
    #[default]
    Pairwise,
    /// Every tuple of two or more coalitions; limited to six contents.
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NestedConfig {
    pub merge_scope: MergeScope,
    /// Coalitions up to this size are split along every bipartition;
    /// larger ones only by peeling off single contents.
    pub split_bipartition_limit: usize,
}

impl Default for NestedConfig {
    fn default() -> Self {
        NestedConfig {
            merge_scope: MergeScope::Pairwise,
            split_bipartition_limit: 12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Init,
    Merge,
    Split,
    Move,
}

impl StepKind {
    pub fn name(self) -> &'static str {
        match self {
            StepKind::Init => "init",
            StepKind::Merge => "merge",
            StepKind::Split => "split",
            StepKind::Move => "move",
        }
    }
}

/// One accepted transformation of the RRU partition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub kind: StepKind,
    /// Coalitions created by the step.
    pub touched: Vec<Vec<usize>>,
    /// The whole RRU partition after the step.
    pub partition: RruPartition,
    pub welfare: f64,
    pub delta: f64,
}

/// Memoized `ψ(T)` at a given RRU count.
pub(crate) struct UtilityCache<'a> {
    inst: &'a ClusterInstance,
    memo: HashMap<(Vec<usize>, usize), (f64, RrhPartition)>,
}

impl<'a> UtilityCache<'a> {
    pub(crate) fn new(inst: &'a ClusterInstance) -> Self {
        UtilityCache {
            inst,
            memo: HashMap::new(),
        }
    }

    pub(crate) fn coalition(
        &mut self,
        contents: &[usize],
        rru_count: usize,
    ) -> Result<&(f64, RrhPartition)> {
        let key = (contents.to_vec(), rru_count);
        if !self.memo.contains_key(&key) {
            let ctx = self.inst.table(rru_count)?;
            let part = hedonic_rrh_association(contents, &ctx, None)?;
            let psi = utility_of_association(&part, &ctx);
            self.memo.insert(key.clone(), (psi, part));
        }
        Ok(&self.memo[&key])
    }

    pub(crate) fn welfare(&mut self, partition: &RruPartition) -> Result<f64> {
        let n = partition.rru_count();
        let mut w = 0.0;
        for c in partition.coalitions() {
            w += self.coalition(c, n)?.0;
        }
        Ok(w)
    }

    pub(crate) fn associations(&mut self, partition: &RruPartition) -> Result<Vec<RrhPartition>> {
        let n = partition.rru_count();
        partition
            .coalitions()
            .iter()
            .map(|c| Ok(self.coalition(c, n)?.1.clone()))
            .collect()
    }
}

fn merged(partition: &RruPartition, group: &[usize]) -> RruPartition {
    let cs = partition.coalitions();
    let mut union: Vec<usize> = group.iter().flat_map(|&g| cs[g].iter().copied()).collect();
    union.sort_unstable();
    let mut out: Vec<Vec<usize>> = cs
        .iter()
        .enumerate()
        .filter(|(i, _)| !group.contains(i))
        .map(|(_, c)| c.clone())
        .collect();
    out.push(union);
    RruPartition::canonical(out)
}

fn split(
    partition: &RruPartition,
    index: usize,
    first: Vec<usize>,
    second: Vec<usize>,
) -> RruPartition {
    let mut out: Vec<Vec<usize>> = partition.coalitions().to_vec();
    out.remove(index);
    out.push(first);
    out.push(second);
    RruPartition::canonical(out)
}

/// Candidate groups containing coalition `i` and only later coalitions;
/// earlier partners were examined when their own turn came.
fn merge_groups(count: usize, i: usize, scope: MergeScope) -> Vec<Vec<usize>> {
    let later: Vec<usize> = (i + 1..count).collect();
    match scope {
        MergeScope::Pairwise => later.iter().map(|&j| vec![i, j]).collect(),
        MergeScope::Exhaustive => (1u32..(1 << later.len()))
            .map(|mask| {
                let mut g = vec![i];
                g.extend(
                    later
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &j)| j),
                );
                g
            })
            .collect(),
    }
}

/// Bipartitions `(first, second)` of `c`, each unordered pair once.
fn bipartitions(c: &[usize], limit: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    let n = c.len();
    if n < 2 {
        return Vec::new();
    }
    if n > limit {
        return (0..n)
            .map(|i| {
                (
                    vec![c[i]],
                    c.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != i)
                        .map(|(_, &x)| x)
                        .collect(),
                )
            })
            .collect();
    }
    (1u64..(1 << (n - 1)))
        .map(|mask| {
            let (mut a, mut b) = (Vec::new(), Vec::new());
            for (j, &x) in c.iter().enumerate() {
                if j + 1 < n && mask >> j & 1 == 1 {
                    a.push(x);
                } else {
                    b.push(x);
                }
            }
            (a, b)
        })
        .collect()
}

/// Merge/split RRU allocation. Starting from `init` (orthogonal RRUs when
/// absent), each coalition in turn tries merges and then splits; a step is
/// accepted iff the welfare of the whole partition, with `μ` at its RRU
/// count, strictly rises. Scanning restarts after each accepted step.
pub fn nested_allocate(
    inst: &ClusterInstance,
    init: Option<RruPartition>,
    config: NestedConfig,
) -> Result<Allocation> {
    let l = inst.content_count();
    if config.merge_scope == MergeScope::Exhaustive && l > 6 {
        return param("exhaustive merging is limited to six contents");
    }
    let mut current = match init {
        Some(p) => RruPartition::new(p.coalitions().to_vec(), l)?,
        None => RruPartition::orthogonal(l),
    };
    let mut cache = UtilityCache::new(inst);
    let mut welfare = cache.welfare(&current)?;
    let mut visited = BTreeSet::from([current.clone()]);
    let mut log = vec![StepRecord {
        step: 0,
        kind: StepKind::Init,
        touched: current.coalitions().to_vec(),
        partition: current.clone(),
        welfare,
        delta: 0.0,
    }];
    'scan: loop {
        for i in 0..current.rru_count() {
            let mut candidates: Vec<(StepKind, RruPartition, Vec<Vec<usize>>)> = Vec::new();
            for g in merge_groups(current.rru_count(), i, config.merge_scope) {
                let next = merged(&current, &g);
                let mut union: Vec<usize> = g
                    .iter()
                    .flat_map(|&k| current.coalitions()[k].clone())
                    .collect();
                union.sort_unstable();
                candidates.push((StepKind::Merge, next, vec![union]));
            }
            for (a, b) in bipartitions(&current.coalitions()[i], config.split_bipartition_limit) {
                let next = split(&current, i, a.clone(), b.clone());
                candidates.push((StepKind::Split, next, vec![a, b]));
            }
            for (kind, next, touched) in candidates {
                let w = cache.welfare(&next)?;
                if strictly_greater(w, welfare) {
                    if !visited.insert(next.clone()) {
                        return Err(Error::StabilityViolation(format!(
                            "{:?}",
                            next.coalitions()
                        )));
                    }
                    log.push(StepRecord {
                        step: log.len(),
                        kind,
                        touched,
                        partition: next.clone(),
                        welfare: w,
                        delta: w - welfare,
                    });
                    welfare = w;
                    current = next;
                    continue 'scan;
                }
            }
        }
        break;
    }
    let rrh = cache.associations(&current)?;
    finish_allocation(inst, current, rrh, log)
}

fn fixed_allocate(inst: &ClusterInstance, partition: RruPartition) -> Result<Allocation> {
    let mut cache = UtilityCache::new(inst);
    let welfare = cache.welfare(&partition)?;
    let rrh = cache.associations(&partition)?;
    let log = vec![StepRecord {
        step: 0,
        kind: StepKind::Init,
        touched: partition.coalitions().to_vec(),
        partition: partition.clone(),
        welfare,
        delta: 0.0,
    }];
    finish_allocation(inst, partition, rrh, log)
}

/// One content per RRU, hedonic association and pruning in each.
pub fn orthogonal_allocate(inst: &ClusterInstance) -> Result<Allocation> {
    fixed_allocate(inst, RruPartition::orthogonal(inst.content_count()))
}

/// All contents in a single RRU.
pub fn full_reuse_allocate(inst: &ClusterInstance) -> Result<Allocation> {
    fixed_allocate(inst, RruPartition::full_reuse(inst.content_count()))
}

#[cfg(test)]
mod tests {
    use super::super::test_support::*;
    use super::super::InstanceSpec;
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bipartitions_cover_each_split_once() {
        assert_eq!(bipartitions(&[0, 1, 2], 12).len(), 3);
        assert_eq!(bipartitions(&[0, 1, 2, 3, 4], 12).len(), 15);
        assert_eq!(bipartitions(&[0, 1, 2, 3], 3).len(), 4);
        assert!(bipartitions(&[7], 12).is_empty());
        assert_eq!(
            merge_groups(4, 1, MergeScope::Pairwise),
            vec![vec![1, 2], vec![1, 3]]
        );
        assert_eq!(merge_groups(4, 1, MergeScope::Exhaustive).len(), 3);
    }

    #[test]
    fn utility_forms_agree() {
        for seed in 0..20 {
            let inst = instance(
                &InstanceSpec {
                    cost_coeff: 5e-3,
                    ..small_spec()
                },
                seed,
            );
            for n in 1..=3 {
                let ctx = inst.table(n).unwrap();
                for contents in [vec![0], vec![0, 2], vec![0, 1, 2]] {
                    let part = hedonic_rrh_association(&contents, &ctx, None).unwrap();
                    assert_abs_diff_eq!(
                        rru_coalition_utility(&part, &ctx),
                        rru_coalition_utility_direct(&part, &ctx),
                        epsilon = 1e-9
                    );
                }
            }
        }
    }

    #[test]
    fn free_utility_is_total_capacity() {
        let inst = instance(
            &InstanceSpec {
                cost_coeff: 0.0,
                ..small_spec()
            },
            4,
        );
        let ctx = inst.table(2).unwrap();
        let part = hedonic_rrh_association(&[0, 1], &ctx, None).unwrap();
        let cap: f64 = part
            .contents
            .iter()
            .zip(&part.coalitions)
            .map(|(&c, r)| ctx.coalition_eff_cap(r, c))
            .sum();
        assert_abs_diff_eq!(rru_coalition_utility(&part, &ctx), cap, epsilon = 1e-12);
    }

    #[test]
    fn negative_sum_clamps_to_zero() {
        let inst = instance(
            &InstanceSpec {
                cost_coeff: 10.0,
                ..small_spec()
            },
            4,
        );
        let ctx = inst.table(1).unwrap();
        let part = hedonic_rrh_association(&[0, 1, 2], &ctx, None).unwrap();
        assert_eq!(rru_coalition_utility(&part, &ctx), 0.0);
    }

    #[test]
    fn single_content_is_trivial() {
        let inst = instance(
            &InstanceSpec {
                contents: 1,
                cache_size: 0,
                ..small_spec()
            },
            2,
        );
        let a = nested_allocate(&inst, None, NestedConfig::default()).unwrap();
        let b = orthogonal_allocate(&inst).unwrap();
        let c = full_reuse_allocate(&inst).unwrap();
        assert_eq!(a.rru.rru_count(), 1);
        assert_eq!(a.welfare, b.welfare);
        assert_eq!(a.welfare, c.welfare);
        assert_eq!(a.log.len(), 1);
    }

    #[test]
    fn merge_accepted_when_sharing_pays() {
        // two far-apart neighbourhoods: sharing one RRU doubles μ and costs
        // almost nothing in interference between them
        let inst = line_instance(&[0.0, 5000.0], &[(10.0, 0), (5010.0, 1)], 2, &[], 0.0);
        let orth = orthogonal_allocate(&inst).unwrap();
        let shared = full_reuse_allocate(&inst).unwrap();
        assert!(shared.welfare > orth.welfare);
        let a = nested_allocate(&inst, None, NestedConfig::default()).unwrap();
        assert_eq!(a.rru, RruPartition::full_reuse(2));
        assert_eq!(a.log[1].kind, StepKind::Merge);
        assert_eq!(a.welfare, shared.welfare);
    }

    #[test]
    fn welfare_trajectory_is_monotone_and_deterministic() {
        for seed in 0..8 {
            let inst = instance(
                &InstanceSpec {
                    contents: 4,
                    rrhs: 5,
                    ..small_spec()
                },
                seed,
            );
            let a = nested_allocate(&inst, None, NestedConfig::default()).unwrap();
            for w in a.log.windows(2) {
                assert!(w[1].welfare > w[0].welfare);
            }
            let b = nested_allocate(&inst, None, NestedConfig::default()).unwrap();
            assert_eq!(a, b);
            let orth = orthogonal_allocate(&inst).unwrap();
            assert!(a.welfare >= orth.welfare);
        }
    }
}
