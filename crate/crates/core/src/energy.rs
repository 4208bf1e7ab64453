//! Power accounting and effective-capacity-per-watt ratios.

use log::warn;

use crate::error::{domain, param, Result};

/// Power draw of the cluster components, in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerModel {
    pub p_rrh_active: f64,
    pub p_rrh_sleep: f64,
    /// `P_CC`, storage power per cached object.
    pub p_cache_per_object: f64,
    /// `P_BH`, backhaul transmission power.
    pub p_backhaul: f64,
    /// `P_R`, the single per-RRH figure of the cluster-level ratio.
    pub p_rrh_nominal: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        PowerModel {
            p_rrh_active: 104.0,
            p_rrh_sleep: 56.0,
            p_cache_per_object: 0.15,
            p_backhaul: 10.0,
            p_rrh_nominal: 104.0,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.p_rrh_active,
            self.p_rrh_sleep,
            self.p_cache_per_object,
            self.p_backhaul,
            self.p_rrh_nominal,
        ];
        if all.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return param("power figures must be finite and >= 0");
        }
        if self.p_rrh_sleep > self.p_rrh_active {
            return param(format!(
                "sleep power {} W exceeds active power {} W",
                self.p_rrh_sleep, self.p_rrh_active
            ));
        }
        if self.p_cache_per_object >= self.p_backhaul {
            warn!(
                "cache power {} W per object is not below backhaul power {} W; caching may cost energy",
                self.p_cache_per_object, self.p_backhaul
            );
        }
        Ok(())
    }

    /// `λ_R π r_T² P_R + K P_CC + (1 - P_hit) P_BH`.
    pub fn cluster_power(
        &self,
        cache_size: usize,
        p_hit: f64,
        lambda_r: f64,
        cluster_radius: f64,
    ) -> f64 {
        lambda_r * std::f64::consts::PI * cluster_radius * cluster_radius * self.p_rrh_nominal
            + cache_size as f64 * self.p_cache_per_object
            + (1.0 - p_hit) * self.p_backhaul
    }
}

/// `η_T = Ē_T / (λ_R π r_T² P_R + K P_CC + (1 - P_hit) P_BH)`.
pub fn eta_cluster(
    eff_cap: f64,
    p_hit: f64,
    cache_size: usize,
    lambda_r: f64,
    cluster_radius: f64,
    power: &PowerModel,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_hit) {
        return param(format!("hit ratio must lie in [0, 1], got {p_hit}"));
    }
    let denom = power.cluster_power(cache_size, p_hit, lambda_r, cluster_radius);
    if !(denom > 0.0) {
        return domain("cluster power consumption is zero");
    }
    Ok(eff_cap / denom)
}

/// `K P_CC - P_hit P_BH`: change in cluster power brought by the cache.
pub fn power_delta(cache_size: usize, p_hit: f64, power: &PowerModel) -> f64 {
    let delta = cache_size as f64 * power.p_cache_per_object - p_hit * power.p_backhaul;
    if delta > 0.0 {
        warn!("cache storage power exceeds the backhaul power it saves ({delta} W)");
    }
    delta
}

/// How the cached/cloud object counts of the per-RRU ratio are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ObjectCounting {
    /// Objects of the evaluated RRU coalition served from cache/backhaul.
    #[default]
    PerCoalition,
    /// Whole cache size `K` and catalog-wide cloud count `L`.
    Catalog,
}

/// Per-RRU ratio `Σ_l Ē(R_l) / (Σ|R| P_act + (N_T - Σ|R|) P_sle + n_T P_CC + n_C P_BH)`.
pub fn eta_rru(
    per_content_effcaps: &[f64],
    rrh_counts_per_content: &[usize],
    total_rrhs: usize,
    cached_count: usize,
    cloud_count: usize,
    power: &PowerModel,
) -> Result<f64> {
    let active: usize = rrh_counts_per_content.iter().sum();
    if active > total_rrhs {
        return param(format!(
            "{active} assigned RRHs exceed the {total_rrhs} in the cluster"
        ));
    }
    let denom = rru_power(active, total_rrhs, cached_count, cloud_count, power);
    if !(denom > 0.0) {
        return domain("RRU power consumption is zero");
    }
    Ok(per_content_effcaps.iter().sum::<f64>() / denom)
}

pub fn rru_power(
    active: usize,
    total_rrhs: usize,
    cached_count: usize,
    cloud_count: usize,
    power: &PowerModel,
) -> f64 {
    active as f64 * power.p_rrh_active
        + total_rrhs.saturating_sub(active) as f64 * power.p_rrh_sleep
        + cached_count as f64 * power.p_cache_per_object
        + cloud_count as f64 * power.p_backhaul
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cluster_ratio_examples() {
        let p = PowerModel::default();
        let denom = p.cluster_power(5, 1.0, 5e-6, 1000.0);
        // 5e-6 · π · 1e6 · 104 = 1633.628 W of RRH power plus 0.75 W of storage
        assert_abs_diff_eq!(denom, 1634.378, epsilon = 0.001);
        assert_abs_diff_eq!(
            denom,
            5e-6 * std::f64::consts::PI * 1e6 * 104.0 + 0.75,
            epsilon = 1e-9
        );
        assert_eq!(eta_cluster(0.0, 1.0, 5, 5e-6, 1000.0, &p).unwrap(), 0.0);
        let base = eta_cluster(3.0, 0.0, 0, 5e-6, 1000.0, &p).unwrap();
        assert_abs_diff_eq!(
            base,
            3.0 / (5e-6 * std::f64::consts::PI * 1e6 * 104.0 + 10.0),
            epsilon = 1e-15
        );
        let zero = PowerModel {
            p_rrh_nominal: 0.0,
            p_backhaul: 0.0,
            ..p
        };
        assert!(eta_cluster(1.0, 1.0, 0, 5e-6, 1000.0, &zero).is_err());
    }

    #[test]
    fn delta_examples() {
        let p = PowerModel::default();
        assert_eq!(power_delta(0, 0.0, &p), 0.0);
        assert_abs_diff_eq!(power_delta(5, 1.0, &p), -9.25, epsilon = 1e-12);
        assert!(power_delta(5, 0.01, &p) > 0.0);
    }

    #[test]
    fn rru_ratio_examples() {
        let p = PowerModel::default();
        assert_abs_diff_eq!(rru_power(2, 5, 1, 1, &p), 386.15, epsilon = 1e-9);
        assert_eq!(eta_rru(&[], &[], 4, 0, 0, &p).unwrap(), 0.0);
        let awake = eta_rru(&[2.0], &[3], 5, 1, 0, &p).unwrap();
        let pruned = eta_rru(&[2.0], &[2], 5, 1, 0, &p).unwrap();
        assert!(pruned > awake);
        assert_abs_diff_eq!(2.0 / awake - 2.0 / pruned, 48.0, epsilon = 1e-9);
        assert!(eta_rru(&[1.0], &[6], 5, 0, 0, &p).is_err());
    }

    #[test]
    fn model_validation() {
        assert!(PowerModel::default().validate().is_ok());
        let bad = PowerModel {
            p_rrh_sleep: 200.0,
            ..PowerModel::default()
        };
        assert!(bad.validate().is_err());
    }
}
