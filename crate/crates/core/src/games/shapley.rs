//! Shapley values of the RRHs for every content and the suboptimal RRU
//! allocator built on their conflict payoffs.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use super::hedonic::{hedonic_rrh_association, negotiate};
use super::{
    finish_allocation, Allocation, ClusterInstance, RruPartition, StepKind, StepRecord,
    UtilityContext,
};
use crate::error::{param, Result};
use crate::rng::{stream, Domain};

/// Largest RRH count handled by exact enumeration.
pub const EXACT_SHAPLEY_CAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapleyMethod {
    /// Subset form over all `2^D` coalitions.
    Exact,
    /// Average over this many uniform random join orders.
    Sampled(usize),
}

/// `v[i][k]`: Shapley value of RRH `k` in the game `S ↦ Ē_i(S)` of content `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyTable {
    pub values: Vec<Vec<f64>>,
    /// Standard errors of the sampled means; zeros in exact mode.
    pub std_errors: Vec<Vec<f64>>,
    pub method: ShapleyMethod,
    pub sample_count: usize,
}

impl ShapleyTable {
    pub fn content_count(&self) -> usize {
        self.values.len()
    }

    /// The same table with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |m: &Vec<Vec<f64>>| {
            m.iter()
                .map(|r| r.iter().map(|v| v * factor).collect())
                .collect()
        };
        ShapleyTable {
            values: scale(&self.values),
            std_errors: scale(&self.std_errors),
            method: self.method,
            sample_count: self.sample_count,
        }
    }
}

fn exact_row(ctx: &UtilityContext<'_>, content: usize) -> Vec<f64> {
    let d = ctx.instance().rrh_count();
    let users = ctx.instance().users_of(content);
    // Ē over every subset, built from the subset without its highest bit
    let mut best = vec![vec![f64::NEG_INFINITY; users.len()]; 1 << d];
    let mut value = vec![0.0; 1 << d];
    for mask in 1usize..(1 << d) {
        let top = usize::BITS as usize - 1 - mask.leading_zeros() as usize;
        let rest = mask & !(1 << top);
        let row: Vec<f64> = users
            .iter()
            .enumerate()
            .map(|(j, &u)| best[rest][j].max(ctx.user_eff_cap(u, top)))
            .collect();
        value[mask] = row.iter().sum();
        best[mask] = row;
    }
    let mut fact = vec![1.0f64; d + 1];
    for i in 1..=d {
        fact[i] = fact[i - 1] * i as f64;
    }
    (0..d)
        .map(|k| {
            let mut v = 0.0;
            for s in 0usize..(1 << d) {
                if s >> k & 1 == 1 {
                    continue;
                }
                let size = s.count_ones() as usize;
                v += fact[size] * fact[d - size - 1] / fact[d] * (value[s | 1 << k] - value[s]);
            }
            v
        })
        .collect()
}

/// Shapley values at the orthogonal spectral efficiency (`N = L`).
pub fn shapley_values(
    inst: &ClusterInstance,
    method: ShapleyMethod,
    seed: u64,
) -> Result<ShapleyTable> {
    let d = inst.rrh_count();
    let l = inst.content_count();
    let ctx = inst.table(l)?;
    match method {
        ShapleyMethod::Exact => {
            if d > EXACT_SHAPLEY_CAP {
                return param(format!(
                    "exact Shapley values are limited to {EXACT_SHAPLEY_CAP} RRHs, got {d}"
                ));
            }
            Ok(ShapleyTable {
                values: (0..l).map(|i| exact_row(&ctx, i)).collect(),
                std_errors: vec![vec![0.0; d]; l],
                method,
                sample_count: 0,
            })
        }
        ShapleyMethod::Sampled(m) => {
            if m < 2 {
                return param("sampled Shapley values need at least two permutations");
            }
            let mut sum = vec![vec![0.0; d]; l];
            let mut sum_sq = vec![vec![0.0; d]; l];
            let mut order: Vec<usize> = (0..d).collect();
            let mut rng = stream(seed, Domain::Permutation, 0);
            let mut best: Vec<f64> = Vec::new();
            for _ in 0..m {
                order.shuffle(&mut rng);
                for i in 0..l {
                    let users = inst.users_of(i);
                    best.clear();
                    best.resize(users.len(), f64::NEG_INFINITY);
                    for &k in &order {
                        let mut gain = 0.0;
                        for (j, &u) in users.iter().enumerate() {
                            let e = ctx.user_eff_cap(u, k);
                            if e > best[j] {
                                gain += if best[j] == f64::NEG_INFINITY {
                                    e
                                } else {
                                    e - best[j]
                                };
                                best[j] = e;
                            }
                        }
                        sum[i][k] += gain;
                        sum_sq[i][k] += gain * gain;
                    }
                }
            }
            let mf = m as f64;
            let values: Vec<Vec<f64>> = sum
                .iter()
                .map(|r| r.iter().map(|s| s / mf).collect())
                .collect();
            let std_errors = values
                .iter()
                .zip(&sum_sq)
                .map(|(vr, qr)| {
                    vr.iter()
                        .zip(qr)
                        .map(|(v, q)| ((q - mf * v * v).max(0.0) / (mf - 1.0) / mf).sqrt())
                        .collect()
                })
                .collect();
            Ok(ShapleyTable {
                values,
                std_errors,
                method,
                sample_count: m,
            })
        }
    }
}

/// `ϱ` of the RRU carrying `contents`: `c_0 (Σ|R_n| P_R + Σ P_share)`, with
/// every RRH counted for the content where its Shapley value is largest.
fn rru_cost(contents: &BTreeSet<usize>, table: &ShapleyTable, inst: &ClusterInstance) -> f64 {
    if contents.is_empty() || inst.cost_coeff() == 0.0 {
        return 0.0;
    }
    let d = table.values.first().map_or(0, |r| r.len());
    let members: Vec<usize> = contents.iter().copied().collect();
    let mut counts = vec![0usize; members.len()];
    for k in 0..d {
        let mut arg = 0;
        for (m, &c) in members.iter().enumerate() {
            if table.values[c][k] > table.values[members[arg]][k] {
                arg = m;
            }
        }
        if table.values[members[arg]][k] > 0.0 {
            counts[arg] += 1;
        }
    }
    let p = inst.power();
    inst.cost_coeff()
        * members
            .iter()
            .zip(&counts)
            .map(|(&c, &n)| n as f64 * p.p_rrh_nominal + inst.share_power(c))
            .sum::<f64>()
}

/// `φ'_j = Σ_{i ∈ T} Σ_k |v_{j,k} - v_{i,k}| - ϱ(T ∪ {j})` for `j ∉ T`.
pub fn shapley_conflict_payoff(
    content: usize,
    coalition: &BTreeSet<usize>,
    table: &ShapleyTable,
    inst: &ClusterInstance,
) -> f64 {
    let vj = &table.values[content];
    let conflict: f64 = coalition
        .iter()
        .filter(|&&i| i != content)
        .map(|&i| {
            vj.iter()
                .zip(&table.values[i])
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })
        .sum();
    let mut with = coalition.clone();
    with.insert(content);
    conflict - rru_cost(&with, table, inst)
}

/// `u(T) = Σ_{j ∈ T} φ'_j(T \ {j})`.
fn total_utility(coalition: &BTreeSet<usize>, table: &ShapleyTable, inst: &ClusterInstance) -> f64 {
    coalition
        .iter()
        .map(|&j| {
            let mut rest = coalition.clone();
            rest.remove(&j);
            shapley_conflict_payoff(j, &rest, table, inst)
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuboptimalConfig {
    /// `None` picks exact values up to the enumeration cap and 10⁴
    /// sampled permutations beyond it.
    pub method: Option<ShapleyMethod>,
    pub seed: u64,
}

impl Default for SuboptimalConfig {
    fn default() -> Self {
        SuboptimalConfig {
            method: None,
            seed: 0,
        }
    }
}

/// Hedonic RRU allocation with contents as players and conflict payoffs,
/// using `table` in place of freshly computed Shapley values.
pub fn suboptimal_allocate_with_table(
    inst: &ClusterInstance,
    init: Option<RruPartition>,
    table: &ShapleyTable,
) -> Result<Allocation> {
    let l = inst.content_count();
    if table.content_count() != l {
        return param("Shapley table and catalog sizes differ");
    }
    let start = match init {
        Some(p) => RruPartition::new(p.coalitions().to_vec(), l)?,
        None => RruPartition::orthogonal(l),
    };
    let mut slots: Vec<BTreeSet<usize>> = start
        .coalitions()
        .iter()
        .map(|c| c.iter().copied().collect())
        .collect();
    negotiate(
        &mut slots,
        true,
        |j, c, _| shapley_conflict_payoff(j, c, table, inst),
        |c, _| total_utility(c, table, inst),
    )?;
    let rru = RruPartition::canonical(slots.into_iter().map(|s| s.into_iter().collect()).collect());
    let ctx = inst.table(rru.rru_count())?;
    let rrh = rru
        .coalitions()
        .iter()
        .map(|c| hedonic_rrh_association(c, &ctx, None))
        .collect::<Result<Vec<_>>>()?;
    let welfare: f64 = rrh
        .iter()
        .map(|p| super::nested::utility_of_association(p, &ctx))
        .sum();
    let log = vec![StepRecord {
        step: 0,
        kind: StepKind::Move,
        touched: rru.coalitions().to_vec(),
        partition: rru.clone(),
        welfare,
        delta: 0.0,
    }];
    finish_allocation(inst, rru, rrh, log)
}

/// Shapley-value suboptimal allocation: hedonic RRU formation on conflict
/// payoffs, then hedonic RRH association and pruning in every RRU.
pub fn suboptimal_allocate(
    inst: &ClusterInstance,
    init: Option<RruPartition>,
    config: SuboptimalConfig,
) -> Result<Allocation> {
    let method = config
        .method
        .unwrap_or(if inst.rrh_count() <= EXACT_SHAPLEY_CAP {
            ShapleyMethod::Exact
        } else {
            ShapleyMethod::Sampled(10_000)
        });
    let table = shapley_values(inst, method, config.seed)?;
    suboptimal_allocate_with_table(inst, init, &table)
}
