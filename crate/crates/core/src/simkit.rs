//! Monte Carlo estimators and brute-force oracles used to validate the
//! analytic results and the allocators.

use std::collections::BTreeSet;
use std::f64::consts::{LN_2, PI};

use log::warn;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::effcap::RadioParams;
use crate::error::{param, Result};
use crate::games::{
    hedonic_rrh_association, prefers, ClusterInstance, MergeScope, NestedConfig, RrhPartition,
    RruPartition, UtilityCache, UtilityContext,
};
use crate::geometry::{
    sample_ppp_with, uniform_in_annulus, uniform_in_disk, NetworkRealization, DEFAULT_SIM_RADIUS,
};
use crate::numeric::pairwise_sum;
use crate::rng::{child_seed, stream, Domain, StreamRng};

/// SINR reported when the interference-plus-noise term is exactly zero.
pub const SINR_CAP: f64 = 1e12;
/// Largest item count accepted by [`enumerate_partitions`].
pub const PARTITION_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub seed: u64,
    /// Draws that hit [`SINR_CAP`].
    pub capped: usize,
}

impl McEstimate {
    /// `(value - mean) / std_error`; zero when both coincide exactly.
    pub fn z_score(&self, value: f64) -> f64 {
        let diff = value - self.mean;
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

fn sinr_from(signal: f64, interference: f64, params: &RadioParams) -> (f64, bool) {
    let denom = interference + params.noise / params.snr;
    if denom > 0.0 {
        (signal / denom, false)
    } else {
        (SINR_CAP, true)
    }
}

fn exp1(rng: &mut StreamRng) -> f64 {
    Exp1.sample(rng)
}

/// SINR of `user` served by `serving_rrh`, every other RRH of the
/// realization interfering, under unit-mean exponential fading powers.
pub fn simulate_sinr(
    realization: &NetworkRealization,
    user: usize,
    serving_rrh: usize,
    params: &RadioParams,
    fading_seed: u64,
) -> Result<f64> {
    params.validate()?;
    let users = &realization.user_points;
    let rrhs = &realization.rrh_points;
    if user >= users.len() || serving_rrh >= rrhs.len() {
        return param("user or serving RRH index out of range");
    }
    let beta = params.pathloss_exponent;
    let at = users[user];
    let mut rng = stream(fading_seed, Domain::Fading, user as u64);
    let d = at.distance(&rrhs[serving_rrh]);
    let signal = exp1(&mut rng) * d.powf(-beta);
    let mut interference = 0.0;
    for (j, p) in rrhs.iter().enumerate() {
        if j != serving_rrh {
            interference += exp1(&mut rng) * at.distance(p).powf(-beta);
        }
    }
    let (g, capped) = sinr_from(signal, interference, params);
    if capped {
        warn!("zero interference and noise; SINR capped at {SINR_CAP}");
    }
    Ok(g)
}

/// One SINR draw with the serving RRH at exactly `d_m` and a fresh PPP of
/// interferers of density `lambda_r` on the disk of `radius` around the user.
fn draw_user_sinr(
    d_m: f64,
    lambda_r: f64,
    radius: f64,
    params: &RadioParams,
    seed: u64,
    trial: u64,
) -> Result<(f64, bool)> {
    let beta = params.pathloss_exponent;
    let mut rng = stream(seed, Domain::Interferers, trial);
    let points = if lambda_r > 0.0 {
        sample_ppp_with(lambda_r, radius, &mut rng)?
    } else {
        Vec::new()
    };
    let mut fading = stream(seed, Domain::Fading, trial);
    let signal = exp1(&mut fading) * d_m.powf(-beta);
    let interference: f64 = points
        .iter()
        .map(|p| exp1(&mut fading) * p.norm().powf(-beta))
        .sum();
    Ok(sinr_from(signal, interference, params))
}

fn check_trials(trials: usize, min: usize) -> Result<()> {
    if trials < min {
        return param(format!("at least {min} trials are required, got {trials}"));
    }
    Ok(())
}

/// `trials` SINR draws for a user served from `d_m`, in trial order.
pub fn sample_user_sinr(
    d_m: f64,
    lambda_r: f64,
    params: &RadioParams,
    trials: usize,
    seed: u64,
    radius: f64,
) -> Result<(Vec<f64>, usize)> {
    params.validate()?;
    if !(d_m > 0.0 && lambda_r >= 0.0 && radius > d_m) {
        return param("need d_m > 0, lambda_r >= 0 and a window wider than d_m");
    }
    let draws: Vec<(f64, bool)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| draw_user_sinr(d_m, lambda_r, radius, params, seed, t))
        .collect::<Result<_>>()?;
    let capped = draws.iter().filter(|(_, c)| *c).count();
    if capped > 0 {
        warn!("{capped} of {trials} SINR draws capped at {SINR_CAP}");
    }
    Ok((draws.into_iter().map(|(g, _)| g).collect(), capped))
}

/// Effective capacity from draws of `Z = (1+γ)^{-μθWT̄}`, with the delta
/// method standard error.
fn estimate_from_z(
    z: &[f64],
    theta: f64,
    params: &RadioParams,
    seed: u64,
    capped: usize,
) -> McEstimate {
    let n = z.len() as f64;
    let mean_z = pairwise_sum(z) / n;
    let sq: Vec<f64> = z.iter().map(|v| (v - mean_z) * (v - mean_z)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    let scale = LN_2 * theta * params.bandwidth * params.tbar();
    McEstimate {
        mean: -mean_z.ln() / scale,
        std_error: (var / n).sqrt() / (mean_z * scale),
        trials: z.len(),
        seed,
        capped,
    }
}

/// Monte Carlo `E(θ, d_m)` on the default window.
pub fn mc_eff_cap(
    theta: f64,
    d_m: f64,
    lambda_r: f64,
    params: &RadioParams,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_eff_cap_in(
        theta,
        d_m,
        lambda_r,
        params,
        trials,
        seed,
        DEFAULT_SIM_RADIUS,
    )
}

/// [`mc_eff_cap`] with interferers sampled on a disk of `radius`.
pub fn mc_eff_cap_in(
    theta: f64,
    d_m: f64,
    lambda_r: f64,
    params: &RadioParams,
    trials: usize,
    seed: u64,
    radius: f64,
) -> Result<McEstimate> {
    check_trials(trials, 100)?;
    if !(theta > 0.0 && theta.is_finite()) {
        return param("QoS exponent must be > 0");
    }
    let (g, capped) = sample_user_sinr(d_m, lambda_r, params, trials, seed, radius)?;
    let a = params.exponent(theta);
    let z: Vec<f64> = g.iter().map(|x| (-a * x.ln_1p()).exp()).collect();
    Ok(estimate_from_z(&z, theta, params, seed, capped))
}

/// Sample mean of `μ log2(1+γ)` for a user served from `d_m`.
pub fn mc_ergodic_capacity(
    d_m: f64,
    lambda_r: f64,
    params: &RadioParams,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(trials, 100)?;
    let (g, capped) = sample_user_sinr(d_m, lambda_r, params, trials, seed, DEFAULT_SIM_RADIUS)?;
    let c: Vec<f64> = g
        .iter()
        .map(|x| params.spectral_efficiency * x.ln_1p() / LN_2)
        .collect();
    Ok(mean_estimate(&c, seed, capped))
}

fn mean_estimate(xs: &[f64], seed: u64, capped: usize) -> McEstimate {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let sq: Vec<f64> = xs.iter().map(|v| (v - mean) * (v - mean)).collect();
    McEstimate {
        mean,
        std_error: (pairwise_sum(&sq) / (n - 1.0) / n).sqrt(),
        trials: xs.len(),
        seed,
        capped,
    }
}

/// Empirical `Pr{γ < γ_n}` at each threshold, from one shared set of draws.
pub fn empirical_outage(
    thresholds: &[f64],
    d_m: f64,
    lambda_r: f64,
    params: &RadioParams,
    trials: usize,
    seed: u64,
) -> Result<Vec<McEstimate>> {
    check_trials(trials, 100)?;
    let (g, capped) = sample_user_sinr(d_m, lambda_r, params, trials, seed, DEFAULT_SIM_RADIUS)?;
    let n = trials as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let p = g.iter().filter(|&&x| x < t).count() as f64 / n;
            McEstimate {
                mean: p,
                std_error: (p * (1.0 - p) / n).sqrt(),
                trials,
                seed,
                capped,
            }
        })
        .collect())
}

/// Draw for a typical user of a content whose RRHs form a PPP of density
/// `lambda_l` among `lambda_r`: nearest content RRH serves, content RRHs
/// beyond it and all other RRHs interfere.
fn draw_content_sinr(
    lambda_l: f64,
    lambda_r: f64,
    radius: f64,
    params: &RadioParams,
    rng: &mut StreamRng,
) -> Result<(f64, f64, bool)> {
    let beta = params.pathloss_exponent;
    let t: f64 = exp1(rng);
    let d = (t / (PI * lambda_l)).sqrt();
    let mut interference = 0.0;
    if d < radius {
        let mean = lambda_l * PI * (radius * radius - d * d);
        let n = rand_distr::Poisson::new(mean)
            .map(|p| p.sample(rng) as usize)
            .unwrap_or(0);
        for _ in 0..n {
            let p = uniform_in_annulus(d, radius, rng);
            interference += exp1(rng) * p.norm().powf(-beta);
        }
    }
    let others = lambda_r - lambda_l;
    if others > 0.0 {
        let mean = others * PI * radius * radius;
        let n = rand_distr::Poisson::new(mean)
            .map(|p| p.sample(rng) as usize)
            .unwrap_or(0);
        for _ in 0..n {
            let p = uniform_in_disk(radius, rng);
            interference += exp1(rng) * p.norm().powf(-beta);
        }
    }
    let signal = exp1(rng) * d.powf(-beta);
    let (g, capped) = sinr_from(signal, interference, params);
    Ok((g, d, capped))
}

/// Monte Carlo content value `P_l Ē(θ_l)`.
///
/// `inner == 1` estimates the joint-expectation form from `outer` draws
/// of distance and channel together. `inner > 1` estimates the
/// distance-averaged form: `outer` serving distances, each with `inner`
/// channel draws, the resulting per-distance capacities averaged.
#[allow(clippy::too_many_arguments)]
pub fn mc_content_eff_cap(
    theta: f64,
    p_l: f64,
    lambda_l: f64,
    lambda_r: f64,
    params: &RadioParams,
    outer: usize,
    inner: usize,
    seed: u64,
) -> Result<McEstimate> {
    check_trials(outer, 2)?;
    if inner == 0 {
        return param("inner trial count must be >= 1");
    }
    if !(lambda_l > 0.0 && lambda_r >= lambda_l && (0.0..=1.0).contains(&p_l)) {
        return param("need 0 < lambda_l <= lambda_r and p_l in [0, 1]");
    }
    params.validate()?;
    let a = params.exponent(theta);
    let radius = DEFAULT_SIM_RADIUS;
    if inner == 1 {
        let z: Vec<(f64, bool)> = (0..outer as u64)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(seed, Domain::Interferers, t);
                let (g, _, c) = draw_content_sinr(lambda_l, lambda_r, radius, params, &mut rng)?;
                Ok(((-a * g.ln_1p()).exp(), c))
            })
            .collect::<Result<_>>()?;
        let capped = z.iter().filter(|(_, c)| *c).count();
        let zs: Vec<f64> = z.into_iter().map(|(v, _)| v).collect();
        let mut est = estimate_from_z(&zs, theta, params, seed, capped);
        est.mean *= p_l;
        est.std_error *= p_l;
        return Ok(est);
    }
    let values: Vec<(f64, usize)> = (0..outer as u64)
        .into_par_iter()
        .map(|o| {
            let mut rng = stream(seed, Domain::Outer, o);
            let t: f64 = exp1(&mut rng);
            let d = (t / (PI * lambda_l)).sqrt();
            // conditioned on d: content RRHs beyond d, others everywhere
            let sub = child_seed(seed, o);
            let mut z = Vec::with_capacity(inner);
            let mut capped = 0;
            for i in 0..inner as u64 {
                let mut rng = stream(sub, Domain::Interferers, i);
                let beta = params.pathloss_exponent;
                let mut interference = 0.0;
                if d < radius {
                    let mean = lambda_l * PI * (radius * radius - d * d);
                    let n = rand_distr::Poisson::new(mean)
                        .map(|p| p.sample(&mut rng) as usize)
                        .unwrap_or(0);
                    for _ in 0..n {
                        interference += exp1(&mut rng)
                            * uniform_in_annulus(d, radius, &mut rng).norm().powf(-beta);
                    }
                }
                if lambda_r > lambda_l {
                    let pts = sample_ppp_with(lambda_r - lambda_l, radius, &mut rng)?;
                    for p in pts {
                        interference += exp1(&mut rng) * p.norm().powf(-beta);
                    }
                }
                let signal = exp1(&mut rng) * d.powf(-beta);
                let (g, c) = sinr_from(signal, interference, params);
                capped += usize::from(c);
                z.push((-a * g.ln_1p()).exp());
            }
            let mean_z = pairwise_sum(&z) / inner as f64;
            let e = -mean_z.ln() / (LN_2 * theta * params.bandwidth * params.tbar());
            Ok((e, capped))
        })
        .collect::<Result<_>>()?;
    let capped = values.iter().map(|v| v.1).sum();
    let es: Vec<f64> = values.iter().map(|v| p_l * v.0).collect();
    Ok(mean_estimate(&es, seed, capped))
}

/// Restricted-growth-string enumeration of the set partitions of `items`.
#[derive(Debug, Clone)]
pub struct Partitions {
    items: Vec<usize>,
    codes: Vec<usize>,
    maxes: Vec<usize>,
    done: bool,
}

impl Iterator for Partitions {
    type Item = Vec<Vec<usize>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let n = self.items.len();
        let blocks = self.codes.iter().max().map_or(0, |m| m + 1);
        let mut out = vec![Vec::new(); blocks];
        for (i, &c) in self.codes.iter().enumerate() {
            out[c].push(self.items[i]);
        }
        // advance: rightmost position that can grow
        let mut i = n;
        loop {
            if i <= 1 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.codes[i] <= self.maxes[i - 1] {
                self.codes[i] += 1;
                self.maxes[i] = self.maxes[i - 1].max(self.codes[i]);
                for j in i + 1..n {
                    self.codes[j] = 0;
                    self.maxes[j] = self.maxes[i];
                }
                break;
            }
        }
        Some(out)
    }
}

/// Every set partition of `items` exactly once.
pub fn enumerate_partitions(items: &[usize]) -> Result<Partitions> {
    if items.len() > PARTITION_CAP {
        return param(format!(
            "partition enumeration is limited to {PARTITION_CAP} items, got {}",
            items.len()
        ));
    }
    Ok(Partitions {
        items: items.to_vec(),
        codes: vec![0; items.len()],
        maxes: vec![0; items.len()],
        done: false,
    })
}

/// Result of a single-deviation scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NashCheck {
    pub stable: bool,
    /// `(rrh, target content)` of the first profitable deviation found.
    pub witness: Option<(usize, usize)>,
}

/// Scan every RRH and every other coalition of the association for a move
/// that passes both preference conditions.
pub fn check_nash_stable(partition: &RrhPartition, ctx: &UtilityContext<'_>) -> NashCheck {
    for (m, coalition) in partition.coalitions.iter().enumerate() {
        for &k in coalition {
            for (n, target) in partition.coalitions.iter().enumerate() {
                if n != m
                    && prefers(
                        ctx,
                        k,
                        target,
                        partition.contents[n],
                        coalition,
                        partition.contents[m],
                    )
                {
                    return NashCheck {
                        stable: false,
                        witness: Some((k, partition.contents[n])),
                    };
                }
            }
        }
    }
    NashCheck {
        stable: true,
        witness: None,
    }
}

/// A merge or split of `partition` that strictly raises the welfare, if
/// any, scanning every tuple merge (or pairs only) and every bipartition.
pub fn find_merge_split_improvement(
    inst: &ClusterInstance,
    partition: &RruPartition,
    scope: MergeScope,
) -> Result<Option<RruPartition>> {
    let mut cache = UtilityCache::new(inst);
    let base = cache.welfare(partition)?;
    let cs = partition.coalitions();
    let k = cs.len();
    let mut candidates: Vec<RruPartition> = Vec::new();
    for mask in 1u32..(1 << k) {
        let size = mask.count_ones();
        if size < 2 || (scope == MergeScope::Pairwise && size != 2) {
            continue;
        }
        let mut union = Vec::new();
        let mut rest = Vec::new();
        for (i, c) in cs.iter().enumerate() {
            if mask >> i & 1 == 1 {
                union.extend(c.iter().copied());
            } else {
                rest.push(c.clone());
            }
        }
        rest.push(union);
        candidates.push(RruPartition::new(rest, inst.content_count())?);
    }
    for (i, c) in cs.iter().enumerate() {
        for split in enumerate_partitions(c)? {
            if split.len() != 2 {
                continue;
            }
            let mut next: Vec<Vec<usize>> = cs
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, x)| x.clone())
                .collect();
            next.extend(split);
            candidates.push(RruPartition::new(next, inst.content_count())?);
        }
    }
    for cand in candidates {
        if crate::games::strictly_greater(cache.welfare(&cand)?, base) {
            return Ok(Some(cand));
        }
    }
    Ok(None)
}

/// Best `[Σ v]⁺` over every assignment of all RRHs to the contents of one RRU.
pub fn best_rrh_assignment(contents: &[usize], ctx: &UtilityContext<'_>) -> Result<f64> {
    let d = ctx.instance().rrh_count();
    let m = contents.len();
    if m == 0 {
        return param("an RRU must carry at least one content");
    }
    let total = (m as u64).checked_pow(d as u32).filter(|&t| t <= 1 << 22);
    let Some(total) = total else {
        return param("assignment space too large for exhaustive search");
    };
    let mut best = f64::NEG_INFINITY;
    for code in 0..total {
        let mut sets = vec![BTreeSet::new(); m];
        let mut c = code;
        for r in 0..d {
            sets[(c % m as u64) as usize].insert(r);
            c /= m as u64;
        }
        let v: f64 = contents
            .iter()
            .zip(&sets)
            .map(|(&l, s)| ctx.coalition_value(s, l))
            .sum();
        best = best.max(v);
    }
    Ok(best.max(0.0))
}

/// Exhaustive optimum of the joint allocation and the associated
/// partition: every RRU partition, every RRH assignment inside each RRU.
pub fn exhaustive_optimum(inst: &ClusterInstance) -> Result<(f64, RruPartition)> {
    let items: Vec<usize> = (0..inst.content_count()).collect();
    if items.is_empty() {
        return param("empty catalog");
    }
    let mut best: Option<(f64, RruPartition)> = None;
    for p in enumerate_partitions(&items)? {
        let ctx = inst.table(p.len())?;
        let mut w = 0.0;
        for c in &p {
            w += best_rrh_assignment(c, &ctx)?;
        }
        if best.as_ref().is_none_or(|(bw, _)| w > *bw) {
            best = Some((w, RruPartition::new(p, items.len())?));
        }
    }
    Ok(best.expect("a non-empty set has a partition"))
}

/// Welfare of every RRU partition with hedonic association in each RRU,
/// keeping those no merge or split improves.
pub fn stable_partitions(
    inst: &ClusterInstance,
    config: NestedConfig,
) -> Result<Vec<(RruPartition, f64)>> {
    let items: Vec<usize> = (0..inst.content_count()).collect();
    let mut out = Vec::new();
    let mut cache = UtilityCache::new(inst);
    for p in enumerate_partitions(&items)? {
        let p = RruPartition::new(p, items.len())?;
        if find_merge_split_improvement(inst, &p, config.merge_scope)?.is_none() {
            let w = cache.welfare(&p)?;
            out.push((p, w));
        }
    }
    Ok(out)
}

/// Exhaustive single-deviation check of the hedonic association for `contents`.
pub fn association_is_stable(contents: &[usize], ctx: &UtilityContext<'_>) -> Result<NashCheck> {
    let part = hedonic_rrh_association(contents, ctx, None)?;
    Ok(check_nash_stable(&part, ctx))
}
