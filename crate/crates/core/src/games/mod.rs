//! Coalition-formation allocators for one cluster: hedonic RRH
//! association, nested merge/split RRU allocation, the Shapley-value
//! suboptimal allocator, and sleep-mode pruning.

mod hedonic;
mod nested;
mod shapley;

use std::collections::BTreeSet;
use std::sync::OnceLock;

pub use hedonic::{hedonic_rrh_association, initial_rrh_partition, prefers};
pub(crate) use nested::UtilityCache;
pub use nested::{
    full_reuse_allocate, nested_allocate, orthogonal_allocate, rru_coalition_utility,
    rru_coalition_utility_direct, MergeScope, NestedConfig, StepKind, StepRecord,
};
pub use shapley::{
    shapley_conflict_payoff, shapley_values, suboptimal_allocate, suboptimal_allocate_with_table,
    ShapleyMethod, ShapleyTable, SuboptimalConfig, EXACT_SHAPLEY_CAP,
};

use crate::content::{select_top_k, ClusterCache, ContentCatalog};
use crate::effcap::{spectral_efficiency_for, EffCapEngine, Quantizer, RadioParams};
use crate::energy::{rru_power, ObjectCounting, PowerModel};
use crate::error::{param, Result};
use crate::geometry::{draw_categorical, uniform_in_disk, NetworkRealization, SpatialPoint};
use crate::qos::QosProfile;
use crate::rng::{stream, Domain};

/// Default energy-efficiency coefficient `c_0`, (bit/s/Hz)/W.
pub const DEFAULT_COST_COEFF: f64 = 1e-4;
/// Serving distances are floored here so that co-located points stay finite.
pub const MIN_DISTANCE: f64 = 1.0;
/// Sweep budget of every hedonic negotiation.
pub const SWEEP_CAP: usize = 10_000;

/// `a > b` beyond floating-point noise; every preference test uses this.
pub(crate) fn strictly_greater(a: f64, b: f64) -> bool {
    a > b + 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// Assignment of the cluster's RRHs to the contents sharing one RRU.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RrhPartition {
    /// Contents sharing the RRU, ascending.
    pub contents: Vec<usize>,
    /// `coalitions[m]` serves `contents[m]`.
    pub coalitions: Vec<BTreeSet<usize>>,
}

impl RrhPartition {
    pub fn new(contents: Vec<usize>, coalitions: Vec<BTreeSet<usize>>) -> Result<Self> {
        if contents.len() != coalitions.len() {
            return param("one RRH coalition per content is required");
        }
        if contents.windows(2).any(|w| w[1] <= w[0]) {
            return param("contents must be strictly ascending");
        }
        let mut seen = BTreeSet::new();
        for c in &coalitions {
            for &r in c {
                if !seen.insert(r) {
                    return param(format!("RRH {} appears in two coalitions", r + 1));
                }
            }
        }
        Ok(RrhPartition {
            contents,
            coalitions,
        })
    }

    pub fn coalition_of(&self, rrh: usize) -> Option<usize> {
        self.coalitions.iter().position(|c| c.contains(&rrh))
    }

    pub fn slot_of_content(&self, content: usize) -> Option<usize> {
        self.contents.iter().position(|&c| c == content)
    }
}

/// Disjoint, non-empty content coalitions, one per RRU, kept in
/// canonical order (each sorted, ordered by smallest member).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RruPartition {
    coalitions: Vec<Vec<usize>>,
}

impl RruPartition {
    pub fn new(coalitions: Vec<Vec<usize>>, content_count: usize) -> Result<Self> {
        let mut seen = vec![false; content_count];
        for c in &coalitions {
            if c.is_empty() {
                return param("RRU coalitions must be non-empty");
            }
            for &l in c {
                if l >= content_count || seen[l] {
                    return param(format!(
                        "content {} missing from the catalog or assigned twice",
                        l + 1
                    ));
                }
                seen[l] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return param("every content must be assigned to an RRU");
        }
        Ok(Self::canonical(coalitions))
    }

    pub(crate) fn canonical(mut coalitions: Vec<Vec<usize>>) -> Self {
        coalitions.retain(|c| !c.is_empty());
        for c in &mut coalitions {
            c.sort_unstable();
        }
        coalitions.sort();
        RruPartition { coalitions }
    }

    /// One RRU per content.
    pub fn orthogonal(content_count: usize) -> Self {
        RruPartition {
            coalitions: (0..content_count).map(|l| vec![l]).collect(),
        }
    }

    /// Every content in one RRU.
    pub fn full_reuse(content_count: usize) -> Self {
        RruPartition {
            coalitions: vec![(0..content_count).collect()],
        }
    }

    pub fn coalitions(&self) -> &[Vec<usize>] {
        &self.coalitions
    }

    pub fn rru_count(&self) -> usize {
        self.coalitions.len()
    }
}

/// Parameters for drawing random instances.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceSpec {
    pub rrhs: usize,
    pub users: usize,
    pub contents: usize,
    pub zipf_exponent: f64,
    pub cache_size: usize,
    pub cluster_radius: f64,
    /// Density of the interference field seen by every user.
    pub lambda_rrh: f64,
    pub theta_cluster: f64,
    pub theta_cloud: f64,
    /// Object size in data units.
    pub object_size: f64,
    pub cost_coeff: f64,
    pub quantizer_intervals: usize,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        InstanceSpec {
            rrhs: 6,
            users: 12,
            contents: 3,
            zipf_exponent: 1.0,
            cache_size: 1,
            cluster_radius: 300.0,
            lambda_rrh: 5e-6,
            theta_cluster: 0.1,
            theta_cloud: 0.6,
            object_size: 1.0,
            cost_coeff: DEFAULT_COST_COEFF,
            quantizer_intervals: 4096,
        }
    }
}

/// Everything an allocator needs about one cluster.
#[derive(Debug)]
pub struct ClusterInstance {
    rrh_points: Vec<SpatialPoint>,
    user_points: Vec<SpatialPoint>,
    user_content: Vec<usize>,
    users_of: Vec<Vec<usize>>,
    catalog: ContentCatalog,
    cache: ClusterCache,
    qos: QosProfile,
    power: PowerModel,
    cost_coeff: f64,
    lambda_rrh: f64,
    object_size: f64,
    counting: ObjectCounting,
    engine: EffCapEngine,
    /// `E(θ_u, d_{u,r})` row-major over `[user][rrh]`, one table per RRU count.
    tables: Vec<OnceLock<Result<Vec<f64>>>>,
}

impl ClusterInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        rrh_points: Vec<SpatialPoint>,
        user_points: Vec<SpatialPoint>,
        user_content: Vec<usize>,
        catalog: ContentCatalog,
        cache: ClusterCache,
        qos: QosProfile,
        params: RadioParams,
        power: PowerModel,
        cost_coeff: f64,
        lambda_rrh: f64,
        object_size: f64,
        quantizer: Quantizer,
    ) -> Result<Self> {
        let l = catalog.count();
        if user_points.len() != user_content.len() {
            return param("one content mark per user is required");
        }
        if let Some(&bad) = user_content.iter().find(|&&c| c >= l) {
            return param(format!(
                "user requests content {} outside catalog of {l}",
                bad + 1
            ));
        }
        if qos.count() != l {
            return param("QoS profile and catalog sizes differ");
        }
        if cache.stored().iter().any(|&c| c >= l) {
            return param("cache holds an object outside the catalog");
        }
        if !(cost_coeff >= 0.0 && cost_coeff.is_finite()) {
            return param("cost coefficient must be >= 0");
        }
        if !(object_size > 0.0 && lambda_rrh >= 0.0) {
            return param("object size must be > 0 and RRH density >= 0");
        }
        qos.validate()?;
        power.validate()?;
        let mut users_of = vec![Vec::new(); l];
        for (u, &c) in user_content.iter().enumerate() {
            users_of[c].push(u);
        }
        Ok(ClusterInstance {
            rrh_points,
            user_points,
            user_content,
            users_of,
            catalog,
            cache,
            qos,
            power,
            cost_coeff,
            lambda_rrh,
            object_size,
            counting: ObjectCounting::default(),
            engine: EffCapEngine::new(params, quantizer)?,
            tables: (0..l).map(|_| OnceLock::new()).collect(),
        })
    }

    /// Instance built from a sampled realization; RRH content marks are
    /// ignored since the allocators choose what each RRH serves.
    #[allow(clippy::too_many_arguments)]
    pub fn from_realization(
        realization: &NetworkRealization,
        catalog: ContentCatalog,
        cache: ClusterCache,
        qos: QosProfile,
        params: RadioParams,
        power: PowerModel,
        cost_coeff: f64,
        object_size: f64,
        quantizer: Quantizer,
    ) -> Result<Self> {
        Self::new(
            realization.rrh_points.clone(),
            realization.user_points.clone(),
            realization.user_marks.clone(),
            catalog,
            cache,
            qos,
            params,
            power,
            cost_coeff,
            realization.densities.lambda_rrh(),
            object_size,
            quantizer,
        )
    }

    /// Fixed-size random instance: RRHs and users uniform on the cluster
    /// disk, user requests drawn from the Zipf catalog, top-K cache.
    pub fn random(
        spec: &InstanceSpec,
        params: RadioParams,
        power: PowerModel,
        seed: u64,
    ) -> Result<Self> {
        let catalog = ContentCatalog::zipf(spec.contents, spec.zipf_exponent, spec.object_size)?;
        let cache = select_top_k(&catalog, spec.cache_size)?;
        let qos = QosProfile::uniform(
            spec.contents,
            spec.theta_cluster,
            spec.theta_cloud,
            1.0,
            1.0,
        )?;
        let mut rng = stream(seed, Domain::RrhPoints, 0);
        let rrh_points = (0..spec.rrhs)
            .map(|_| uniform_in_disk(spec.cluster_radius, &mut rng))
            .collect();
        let mut rng = stream(seed, Domain::UserPoints, 0);
        let user_points = (0..spec.users)
            .map(|_| uniform_in_disk(spec.cluster_radius, &mut rng))
            .collect();
        let mut rng = stream(seed, Domain::UserMarks, 0);
        let user_content = (0..spec.users)
            .map(|_| draw_categorical(catalog.popularity(), &mut rng))
            .collect();
        let quantizer = Quantizer::geometric(
            spec.quantizer_intervals,
            crate::effcap::DEFAULT_GAMMA_MIN,
            crate::effcap::DEFAULT_GAMMA_MAX,
        )?;
        Self::new(
            rrh_points,
            user_points,
            user_content,
            catalog,
            cache,
            qos,
            params,
            power,
            spec.cost_coeff,
            spec.lambda_rrh,
            spec.object_size,
            quantizer,
        )
    }

    pub fn with_counting(mut self, counting: ObjectCounting) -> Self {
        self.counting = counting;
        self
    }

    pub fn rrh_count(&self) -> usize {
        self.rrh_points.len()
    }

    pub fn user_count(&self) -> usize {
        self.user_points.len()
    }

    pub fn content_count(&self) -> usize {
        self.catalog.count()
    }

    pub fn rrh_points(&self) -> &[SpatialPoint] {
        &self.rrh_points
    }

    pub fn user_points(&self) -> &[SpatialPoint] {
        &self.user_points
    }

    pub fn user_content(&self) -> &[usize] {
        &self.user_content
    }

    pub fn users_of(&self, content: usize) -> &[usize] {
        &self.users_of[content]
    }

    pub fn catalog(&self) -> &ContentCatalog {
        &self.catalog
    }

    pub fn cache(&self) -> &ClusterCache {
        &self.cache
    }

    pub fn qos(&self) -> &QosProfile {
        &self.qos
    }

    pub fn power(&self) -> &PowerModel {
        &self.power
    }

    pub fn cost_coeff(&self) -> f64 {
        self.cost_coeff
    }

    pub fn counting(&self) -> ObjectCounting {
        self.counting
    }

    pub fn is_cached(&self, content: usize) -> bool {
        self.cache.contains(content)
    }

    /// Power shared by the RRHs serving `content`: `P_CC` or `P_BH`.
    pub fn share_power(&self, content: usize) -> f64 {
        if self.is_cached(content) {
            self.power.p_cache_per_object
        } else {
            self.power.p_backhaul
        }
    }

    /// `μ = L B_S / (N W T)` for `rru_count` RRUs.
    pub fn spectral_efficiency(&self, rru_count: usize) -> f64 {
        let p = self.engine.params();
        spectral_efficiency_for(
            self.content_count(),
            self.object_size,
            rru_count,
            p.bandwidth,
            p.slot,
        )
    }

    pub fn distance(&self, user: usize, rrh: usize) -> f64 {
        self.user_points[user]
            .distance(&self.rrh_points[rrh])
            .max(MIN_DISTANCE)
    }

    /// Effective-capacity table for `rru_count` RRUs.
    pub fn table(&self, rru_count: usize) -> Result<UtilityContext<'_>> {
        if rru_count == 0 || rru_count > self.content_count() {
            return param(format!(
                "RRU count must lie in 1..={}",
                self.content_count()
            ));
        }
        let cell = self.tables[rru_count - 1].get_or_init(|| self.build_table(rru_count));
        match cell {
            Ok(t) => Ok(UtilityContext {
                inst: self,
                table: t,
                rru_count,
            }),
            Err(e) => Err(e.clone()),
        }
    }

    fn build_table(&self, rru_count: usize) -> Result<Vec<f64>> {
        let engine = self
            .engine
            .with_spectral_efficiency(self.spectral_efficiency(rru_count))?;
        let d = self.rrh_count();
        let mut t = Vec::with_capacity(self.user_count() * d);
        for u in 0..self.user_count() {
            let c = self.user_content[u];
            let theta = self.qos.theta(c, self.is_cached(c));
            for r in 0..d {
                t.push(engine.eff_cap_user_value(theta, self.distance(u, r), self.lambda_rrh)?);
            }
        }
        Ok(t)
    }
}

/// Utilities of the cluster at one RRU count.
#[derive(Debug, Clone, Copy)]
pub struct UtilityContext<'a> {
    inst: &'a ClusterInstance,
    table: &'a [f64],
    rru_count: usize,
}

impl<'a> UtilityContext<'a> {
    pub fn instance(&self) -> &'a ClusterInstance {
        self.inst
    }

    pub fn rru_count(&self) -> usize {
        self.rru_count
    }

    /// `E(θ, d_{u,r})` for user `u` served by RRH `r`.
    pub fn user_eff_cap(&self, user: usize, rrh: usize) -> f64 {
        self.table[user * self.inst.rrh_count() + rrh]
    }

    /// `Ē(R)`: every user of `content` served by its nearest member of `coalition`.
    pub fn coalition_eff_cap(&self, coalition: &BTreeSet<usize>, content: usize) -> f64 {
        if coalition.is_empty() {
            return 0.0;
        }
        self.inst.users_of[content]
            .iter()
            .map(|&u| {
                coalition
                    .iter()
                    .map(|&r| self.user_eff_cap(u, r))
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .sum()
    }

    /// `Ē(R ∪ {k}) - Ē(R)`.
    pub fn marginal(&self, rrh: usize, coalition: &BTreeSet<usize>, content: usize) -> f64 {
        self.inst.users_of[content]
            .iter()
            .map(|&u| {
                let gain = self.user_eff_cap(u, rrh);
                let best = coalition
                    .iter()
                    .map(|&r| self.user_eff_cap(u, r))
                    .fold(f64::NEG_INFINITY, f64::max);
                if best == f64::NEG_INFINITY {
                    gain
                } else {
                    (gain - best).max(0.0)
                }
            })
            .sum()
    }

    /// `φ_k = Ē(R ∪ {k}) - Ē(R) - c_0 (P_R + P_share / |R ∪ {k}|)` for `k ∉ R`.
    pub fn rrh_payoff(&self, rrh: usize, coalition: &BTreeSet<usize>, content: usize) -> f64 {
        let size_after = coalition.len() + usize::from(!coalition.contains(&rrh));
        let mut without = coalition.clone();
        without.remove(&rrh);
        self.marginal(rrh, &without, content)
            - self.inst.cost_coeff
                * (self.inst.power.p_rrh_nominal
                    + self.inst.share_power(content) / size_after as f64)
    }

    /// `v(R) = Ē(R) - c_0 (|R| P_R + P_share)`, zero for the empty set.
    pub fn coalition_value(&self, coalition: &BTreeSet<usize>, content: usize) -> f64 {
        if coalition.is_empty() {
            return 0.0;
        }
        self.coalition_eff_cap(coalition, content)
            - self.inst.cost_coeff
                * (coalition.len() as f64 * self.inst.power.p_rrh_nominal
                    + self.inst.share_power(content))
    }
}

/// Final output of an allocator.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub rru: RruPartition,
    /// One RRH assignment per RRU coalition, in the RRU partition order.
    pub rrh: Vec<RrhPartition>,
    /// `Σ_i ψ(T_i)`.
    pub welfare: f64,
    /// `Σ_l Ē(R_l)` with costs excluded.
    pub effective_capacity: f64,
    /// RRHs needed by some user in some RRU.
    pub active: Vec<bool>,
    /// Per-RRU effective capacity to power ratio after pruning.
    pub eta: Vec<f64>,
    pub log: Vec<StepRecord>,
}

impl Allocation {
    pub fn mean_eta(&self) -> f64 {
        if self.eta.is_empty() {
            0.0
        } else {
            self.eta.iter().sum::<f64>() / self.eta.len() as f64
        }
    }
}

/// RRHs of one association that are the nearest server of at least one
/// user of their content; the rest can sleep.
pub fn prune_sleep_rrhs(
    partition: &RrhPartition,
    ctx: &UtilityContext<'_>,
) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let inst = ctx.instance();
    let mut active = BTreeSet::new();
    for (slot, coalition) in partition.coalitions.iter().enumerate() {
        let content = partition.contents[slot];
        for &u in inst.users_of(content) {
            let mut best: Option<(usize, f64)> = None;
            for &r in coalition {
                let d = inst.distance(u, r);
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((r, d));
                }
            }
            if let Some((r, _)) = best {
                active.insert(r);
            }
        }
    }
    let sleep = (0..inst.rrh_count())
        .filter(|r| !active.contains(r))
        .collect();
    (active, sleep)
}

/// Assemble an [`Allocation`] from an RRU partition and its associations.
pub(crate) fn finish_allocation(
    inst: &ClusterInstance,
    rru: RruPartition,
    rrh: Vec<RrhPartition>,
    log: Vec<StepRecord>,
) -> Result<Allocation> {
    let ctx = inst.table(rru.rru_count())?;
    let mut welfare = 0.0;
    let mut effective_capacity = 0.0;
    let mut active = vec![false; inst.rrh_count()];
    let mut eta = Vec::with_capacity(rrh.len());
    let k = inst.cache().size();
    let l = inst.content_count();
    for part in &rrh {
        welfare += nested::utility_of_association(part, &ctx);
        let (awake, _) = prune_sleep_rrhs(part, &ctx);
        let mut numerator = 0.0;
        let (mut cached, mut cloud) = (0usize, 0usize);
        for (slot, coalition) in part.coalitions.iter().enumerate() {
            let content = part.contents[slot];
            let kept: BTreeSet<usize> = coalition.intersection(&awake).copied().collect();
            numerator += ctx.coalition_eff_cap(&kept, content);
            if !kept.is_empty() {
                if inst.is_cached(content) {
                    cached += 1;
                } else {
                    cloud += 1;
                }
            }
        }
        effective_capacity += numerator;
        for &r in &awake {
            active[r] = true;
        }
        let (cached, cloud) = match inst.counting() {
            ObjectCounting::PerCoalition => (cached, cloud),
            ObjectCounting::Catalog => (k, l),
        };
        let denom = rru_power(awake.len(), inst.rrh_count(), cached, cloud, inst.power());
        eta.push(if denom > 0.0 { numerator / denom } else { 0.0 });
    }
    Ok(Allocation {
        rru,
        rrh,
        welfare,
        effective_capacity,
        active,
        eta,
        log,
    })
}
