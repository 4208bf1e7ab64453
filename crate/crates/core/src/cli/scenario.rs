//! Scenario files: every tunable of a run, with the evaluation defaults
//! filled in for anything omitted.

use serde::{Deserialize, Serialize};

use crate::content::{select_cache, CachePolicy, ContentCatalog};
use crate::effcap::{
    spectral_efficiency_for, ContentAverageForm, Quantizer, RadioParams, DEFAULT_GAMMA_MAX,
    DEFAULT_GAMMA_MIN, DEFAULT_INTERVALS, UNIFORM_GAMMA_MAX, UNIFORM_INTERVALS,
};
use crate::energy::{ObjectCounting, PowerModel};
use crate::error::{Error, Result};
use crate::games::{ClusterInstance, InstanceSpec, MergeScope};
use crate::geometry::{DensityConfig, NetworkRealization};
use crate::qos::QosProfile;

fn config_err<T>(field: &str, message: impl Into<String>) -> Result<T> {
    Err(Error::Config {
        field: field.to_string(),
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub seed: u64,
    pub network: NetworkSection,
    pub catalog: CatalogSection,
    pub cache: CacheSection,
    pub qos: QosSection,
    pub radio: RadioSection,
    pub quantizer: QuantizerSection,
    pub power: PowerSection,
    pub games: GamesSection,
    pub analysis: AnalysisSection,
    pub validation: ValidationSection,
    pub sweep: SweepSection,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 1,
            network: NetworkSection::default(),
            catalog: CatalogSection::default(),
            cache: CacheSection::default(),
            qos: QosSection::default(),
            radio: RadioSection::default(),
            quantizer: QuantizerSection::default(),
            power: PowerSection::default(),
            games: GamesSection::default(),
            analysis: AnalysisSection::default(),
            validation: ValidationSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub lambda_rrh: f64,
    pub lambda_user: f64,
    /// Cluster radius `r_T` in metres. Not fixed by the evaluation setup;
    /// 1000 m is an assumption and flagged in every output.
    pub cluster_radius: f64,
    /// Window of the Monte Carlo interference field.
    pub sim_radius: f64,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            lambda_rrh: 5e-6,
            lambda_user: 5e-6,
            cluster_radius: 1000.0,
            sim_radius: crate::geometry::DEFAULT_SIM_RADIUS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogSection {
    pub contents: usize,
    pub zipf_exponent: f64,
    /// Object size in data units of 1 Mbit.
    pub object_size: f64,
}

impl Default for CatalogSection {
    fn default() -> Self {
        CatalogSection {
            contents: 5,
            zipf_exponent: 1.0,
            object_size: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyName {
    TopK,
    RandomK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheSection {
    pub size: usize,
    pub policy: PolicyName,
}

impl Default for CacheSection {
    fn default() -> Self {
        CacheSection {
            size: 5,
            policy: PolicyName::TopK,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosSection {
    /// Per data unit.
    pub theta_cluster: f64,
    pub theta_cloud: f64,
    /// Derive `theta_cloud` from the backhaul constraint instead.
    pub derive_cloud: bool,
    /// Delay budget in seconds.
    pub delay_budget: f64,
    /// Backhaul rate in data units per second.
    pub backhaul_rate: f64,
    pub hop_count: u32,
}

impl Default for QosSection {
    fn default() -> Self {
        QosSection {
            theta_cluster: 0.1,
            theta_cloud: 0.6,
            derive_cloud: false,
            delay_budget: 1.0,
            backhaul_rate: 2.4,
            hop_count: crate::qos::DEFAULT_HOPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub snr: f64,
    pub pathloss_exponent: f64,
    pub noise: f64,
    pub bandwidth: f64,
    pub slot: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        let p = RadioParams::default();
        RadioSection {
            snr: p.snr,
            pathloss_exponent: p.pathloss_exponent,
            noise: p.noise,
            bandwidth: p.bandwidth,
            slot: p.slot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Geometric,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantizerSection {
    pub kind: GridKind,
    pub intervals: usize,
    pub gamma_min: f64,
    pub gamma_max: f64,
}

impl Default for QuantizerSection {
    fn default() -> Self {
        QuantizerSection {
            kind: GridKind::Geometric,
            intervals: DEFAULT_INTERVALS,
            gamma_min: DEFAULT_GAMMA_MIN,
            gamma_max: DEFAULT_GAMMA_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerSection {
    pub p_rrh_active: f64,
    pub p_rrh_sleep: f64,
    pub p_cache_per_object: f64,
    pub p_backhaul: f64,
    pub p_rrh_nominal: f64,
}

impl Default for PowerSection {
    fn default() -> Self {
        let p = PowerModel::default();
        PowerSection {
            p_rrh_active: p.p_rrh_active,
            p_rrh_sleep: p.p_rrh_sleep,
            p_cache_per_object: p.p_cache_per_object,
            p_backhaul: p.p_backhaul,
            p_rrh_nominal: p.p_rrh_nominal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceKind {
    /// RRHs and users sampled as PPPs on the cluster disk.
    Ppp,
    /// Fixed RRH and user counts, uniform on the cluster disk.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeName {
    Pairwise,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingName {
    PerCoalition,
    Catalog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GamesSection {
    pub cost_coeff: f64,
    pub instance: InstanceKind,
    pub rrhs: usize,
    pub users: usize,
    /// Radius used for fixed-count instances.
    pub radius: f64,
    pub quantizer_intervals: usize,
    pub merge_scope: ScopeName,
    pub object_counting: CountingName,
    /// Sampled permutations; 0 means exact when the RRH count allows.
    pub shapley_permutations: usize,
}

impl Default for GamesSection {
    fn default() -> Self {
        GamesSection {
            cost_coeff: crate::games::DEFAULT_COST_COEFF,
            instance: InstanceKind::Ppp,
            rrhs: 20,
            users: 30,
            radius: 500.0,
            quantizer_intervals: 4096,
            merge_scope: ScopeName::Pairwise,
            object_counting: CountingName::PerCoalition,
            shapley_permutations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormName {
    DistanceAveraged,
    Printed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub thetas: Vec<f64>,
    pub distances: Vec<f64>,
    pub betas: Vec<f64>,
    pub user_distance: f64,
    pub zipf_exponents: Vec<f64>,
    pub max_cache_size: usize,
    pub form: FormName,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            thetas: vec![0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0],
            distances: vec![10.0, 25.0, 50.0, 75.0, 100.0, 150.0, 200.0, 300.0],
            betas: vec![4.0, 6.0, 8.0],
            user_distance: 50.0,
            zipf_exponents: vec![0.0, 0.5, 1.0, 2.0],
            max_cache_size: 5,
            form: FormName::DistanceAveraged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSection {
    pub trials: usize,
    pub betas: Vec<f64>,
    pub thetas: Vec<f64>,
    pub distance: f64,
    pub outage_thresholds: Vec<f64>,
    pub game_instances: usize,
    pub shapley_permutations: usize,
    pub rel_tol: f64,
    pub z_tol: f64,
}

impl Default for ValidationSection {
    fn default() -> Self {
        ValidationSection {
            trials: 100_000,
            betas: vec![4.0, 6.0, 8.0],
            thetas: vec![0.1],
            distance: 50.0,
            outage_thresholds: vec![1.0, 10.0, 100.0, 1000.0],
            game_instances: 20,
            shapley_permutations: 10_000,
            rel_tol: 0.02,
            z_tol: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub cost_coeffs: Vec<f64>,
    pub instances: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            cost_coeffs: vec![0.0, 1e-4, 1e-3],
            instances: 10,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        config_err(field, format!("must be a finite value > 0, got {v}"))
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config {
            field: e
                .span()
                .map(|r| format!("bytes {}..{}", r.start, r.end))
                .unwrap_or_else(|| "scenario".into()),
            message: e.message().to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Switch to the uniform-grid quantizer of the original evaluation.
    pub fn paper_exact(mut self) -> Self {
        self.quantizer = QuantizerSection {
            kind: GridKind::Uniform,
            intervals: UNIFORM_INTERVALS,
            gamma_min: 0.0,
            gamma_max: UNIFORM_GAMMA_MAX,
        };
        self.validation.trials = self.validation.trials.max(100_000);
        self
    }

    pub fn validate(&self) -> Result<()> {
        positive("network.lambda_rrh", self.network.lambda_rrh)?;
        positive("network.lambda_user", self.network.lambda_user)?;
        positive("network.cluster_radius", self.network.cluster_radius)?;
        positive("network.sim_radius", self.network.sim_radius)?;
        if self.catalog.contents == 0 {
            return config_err("catalog.contents", "the content catalog is empty");
        }
        if !(self.catalog.zipf_exponent >= 0.0 && self.catalog.zipf_exponent.is_finite()) {
            return config_err("catalog.zipf_exponent", "must be >= 0");
        }
        positive("catalog.object_size", self.catalog.object_size)?;
        if self.cache.size > self.catalog.contents {
            return config_err(
                "cache.size",
                format!("exceeds the {} catalog objects", self.catalog.contents),
            );
        }
        positive("qos.theta_cluster", self.qos.theta_cluster)?;
        if !self.qos.derive_cloud {
            positive("qos.theta_cloud", self.qos.theta_cloud)?;
        }
        positive("qos.delay_budget", self.qos.delay_budget)?;
        positive("qos.backhaul_rate", self.qos.backhaul_rate)?;
        positive("radio.snr", self.radio.snr)?;
        if !(self.radio.pathloss_exponent > 2.0 && self.radio.pathloss_exponent.is_finite()) {
            return config_err("radio.pathloss_exponent", "must be > 2");
        }
        if !(self.radio.noise >= 0.0 && self.radio.noise.is_finite()) {
            return config_err("radio.noise", "must be >= 0");
        }
        positive("radio.bandwidth", self.radio.bandwidth)?;
        positive("radio.slot", self.radio.slot)?;
        if self.quantizer.intervals < 2 {
            return config_err("quantizer.intervals", "need at least two intervals");
        }
        self.quantizer().map_err(|e| Error::Config {
            field: "quantizer".into(),
            message: e.to_string(),
        })?;
        self.power_model().validate().map_err(|e| Error::Config {
            field: "power".into(),
            message: e.to_string(),
        })?;
        if !(self.games.cost_coeff >= 0.0 && self.games.cost_coeff.is_finite()) {
            return config_err("games.cost_coeff", "must be >= 0");
        }
        if self.games.merge_scope == ScopeName::Exhaustive && self.catalog.contents > 6 {
            return config_err(
                "games.merge_scope",
                "exhaustive merging needs at most 6 contents",
            );
        }
        if self.games.quantizer_intervals < 2 {
            return config_err("games.quantizer_intervals", "need at least two intervals");
        }
        positive("games.radius", self.games.radius)?;
        for (field, v) in [
            ("analysis.thetas", &self.analysis.thetas),
            ("analysis.distances", &self.analysis.distances),
            ("analysis.betas", &self.analysis.betas),
            ("validation.betas", &self.validation.betas),
            ("validation.thetas", &self.validation.thetas),
        ] {
            if v.is_empty() {
                return config_err(field, "list is empty");
            }
            for &x in v {
                positive(field, x)?;
            }
        }
        for &b in self.analysis.betas.iter().chain(&self.validation.betas) {
            if b <= 2.0 {
                return config_err("betas", format!("path-loss exponents must be > 2, got {b}"));
            }
        }
        if self.validation.trials < 100 {
            return config_err("validation.trials", "need at least 100 trials");
        }
        if self.validation.shapley_permutations < 2 {
            return config_err("validation.shapley_permutations", "need at least 2");
        }
        positive("validation.distance", self.validation.distance)?;
        positive("analysis.user_distance", self.analysis.user_distance)?;
        if self.analysis.max_cache_size > self.catalog.contents {
            return config_err("analysis.max_cache_size", "exceeds the catalog size");
        }
        Ok(())
    }

    pub fn quantizer(&self) -> Result<Quantizer> {
        let q = &self.quantizer;
        match q.kind {
            GridKind::Geometric => Quantizer::geometric(q.intervals, q.gamma_min, q.gamma_max),
            GridKind::Uniform => Quantizer::uniform(q.intervals, q.gamma_max),
        }
    }

    /// Radio parameters with `μ` for `rrus` radio resource units.
    pub fn radio_params(&self, rrus: usize) -> RadioParams {
        let r = &self.radio;
        RadioParams {
            snr: r.snr,
            pathloss_exponent: r.pathloss_exponent,
            noise: r.noise,
            bandwidth: r.bandwidth,
            slot: r.slot,
            spectral_efficiency: spectral_efficiency_for(
                self.catalog.contents,
                self.catalog.object_size,
                rrus,
                r.bandwidth,
                r.slot,
            ),
            a_beta_fault: 1.0,
        }
    }

    pub fn power_model(&self) -> PowerModel {
        let p = &self.power;
        PowerModel {
            p_rrh_active: p.p_rrh_active,
            p_rrh_sleep: p.p_rrh_sleep,
            p_cache_per_object: p.p_cache_per_object,
            p_backhaul: p.p_backhaul,
            p_rrh_nominal: p.p_rrh_nominal,
        }
    }

    pub fn catalog_with(&self, zipf_exponent: f64) -> Result<ContentCatalog> {
        ContentCatalog::zipf(
            self.catalog.contents,
            zipf_exponent,
            self.catalog.object_size,
        )
    }

    pub fn policy(&self) -> CachePolicy {
        match self.cache.policy {
            PolicyName::TopK => CachePolicy::TopK,
            PolicyName::RandomK => CachePolicy::RandomK,
        }
    }

    pub fn qos_profile(&self) -> Result<QosProfile> {
        let n = self.catalog.contents;
        let q = &self.qos;
        if q.derive_cloud {
            QosProfile::derived(
                vec![q.theta_cluster; n],
                self.catalog.object_size,
                q.delay_budget,
                q.backhaul_rate,
                q.hop_count,
            )
        } else {
            QosProfile::new(
                vec![q.theta_cluster; n],
                vec![q.theta_cloud; n],
                q.delay_budget,
                q.backhaul_rate,
                q.hop_count,
            )
        }
    }

    pub fn form(&self) -> ContentAverageForm {
        match self.analysis.form {
            FormName::DistanceAveraged => ContentAverageForm::DistanceAveraged,
            FormName::Printed => ContentAverageForm::Printed,
        }
    }

    pub fn merge_scope(&self) -> MergeScope {
        match self.games.merge_scope {
            ScopeName::Pairwise => MergeScope::Pairwise,
            ScopeName::Exhaustive => MergeScope::Exhaustive,
        }
    }

    /// Allocation instance number `index` of this scenario.
    pub fn cluster_instance(&self, index: u64, cost_coeff: f64) -> Result<ClusterInstance> {
        let seed = crate::rng::child_seed(self.seed, index);
        let g = &self.games;
        let counting = match g.object_counting {
            CountingName::PerCoalition => ObjectCounting::PerCoalition,
            CountingName::Catalog => ObjectCounting::Catalog,
        };
        let quantizer = Quantizer::geometric(
            g.quantizer_intervals,
            self.quantizer.gamma_min.max(DEFAULT_GAMMA_MIN),
            self.quantizer.gamma_max,
        )?;
        let catalog = self.catalog_with(self.catalog.zipf_exponent)?;
        let inst = match g.instance {
            InstanceKind::Ppp => {
                let densities = DensityConfig::proportional(
                    self.network.lambda_rrh,
                    self.network.lambda_user,
                    catalog.popularity(),
                )?;
                let realization = NetworkRealization::generate(
                    &densities,
                    catalog.popularity(),
                    self.network.cluster_radius,
                    seed,
                )?;
                let cache = select_cache(&catalog, self.cache.size, self.policy(), seed)?;
                ClusterInstance::from_realization(
                    &realization,
                    catalog,
                    cache,
                    self.qos_profile()?,
                    self.radio_params(self.catalog.contents),
                    self.power_model(),
                    cost_coeff,
                    self.catalog.object_size,
                    quantizer,
                )?
            }
            InstanceKind::Fixed => {
                let spec = InstanceSpec {
                    rrhs: g.rrhs,
                    users: g.users,
                    contents: self.catalog.contents,
                    zipf_exponent: self.catalog.zipf_exponent,
                    cache_size: self.cache.size,
                    cluster_radius: g.radius,
                    lambda_rrh: self.network.lambda_rrh,
                    theta_cluster: self.qos.theta_cluster,
                    theta_cloud: self.qos.theta_cloud,
                    object_size: self.catalog.object_size,
                    cost_coeff,
                    quantizer_intervals: g.quantizer_intervals,
                };
                ClusterInstance::random(
                    &spec,
                    self.radio_params(self.catalog.contents),
                    self.power_model(),
                    seed,
                )?
            }
        };
        Ok(inst.with_counting(counting))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let s = Scenario::default();
        s.validate().unwrap();
        let back = Scenario::from_toml(&s.to_toml()).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.radio_params(5).spectral_efficiency, 1.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = Scenario::from_toml("[radio]\nsnrr = 2.0\n").unwrap_err();
        assert!(matches!(err, Error::Config { .. }), "{err}");
        assert!(Scenario::from_toml("bogus = 1\n").is_err());
    }

    #[test]
    fn field_level_errors() {
        let err = Scenario::from_toml("[catalog]\ncontents = 0\n").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "catalog.contents"),
            e => panic!("unexpected {e}"),
        }
        assert!(Scenario::from_toml("[cache]\nsize = 9\n").is_err());
        assert!(Scenario::from_toml("[radio]\npathloss_exponent = 2.0\n").is_err());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let s = Scenario::from_toml("seed = 9\n[catalog]\nzipf_exponent = 0.5\n").unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.catalog.contents, 5);
        assert_eq!(s.catalog.zipf_exponent, 0.5);
        let exact = s.paper_exact();
        assert_eq!(exact.quantizer.intervals, UNIFORM_INTERVALS);
    }
}
