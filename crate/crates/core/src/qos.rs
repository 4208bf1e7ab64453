//! QoS-exponent arithmetic for the cloud/backhaul path.
//!
//! The formulas are unit-agnostic: `theta` must be the reciprocal of
//! whatever data unit `object_size` and `rate` use (bits or Mbit).
//! Only the exponential tail approximation of the delay violation
//! probability is provided; the constant of the square-root bound on
//! `Pr{D > d}` is not available in closed form and is not modelled.

use crate::error::{domain, param, Error, Result};

/// Backhaul plus fronthaul.
pub const DEFAULT_HOPS: u32 = 2;

/// `Pr{D > D_max} ≈ exp(-θ (D_max - N_h B / r))` for a constant-rate
/// source crossing `hops` store-and-forward links.
pub fn delay_violation_prob(
    theta: f64,
    rate: f64,
    packet: f64,
    hops: u32,
    delay_budget: f64,
) -> Result<f64> {
    if !(theta > 0.0 && rate > 0.0 && packet >= 0.0 && delay_budget > 0.0) {
        return param("delay_violation_prob needs theta, rate, budget > 0 and packet >= 0");
    }
    let slack = delay_budget - hops as f64 * packet / rate;
    if slack <= 0.0 {
        return domain(format!(
            "delay budget {delay_budget} s is exhausted by transport delay"
        ));
    }
    Ok((-theta * slack).exp())
}

/// Backhaul load ratio `N_h B_S / (r_BH D_max)`.
pub fn backhaul_load_ratio(
    object_size: f64,
    backhaul_rate: f64,
    delay_budget: f64,
    hops: u32,
) -> f64 {
    hops as f64 * object_size / (backhaul_rate * delay_budget)
}

/// Cloud-side exponent giving the same delay experience as the cluster
/// cache: `θ_C = θ_T / (1 - 2 B_S / (r_BH D_max))`.
pub fn theta_cloud_from_cluster(
    theta_t: f64,
    object_size: f64,
    backhaul_rate: f64,
    delay_budget: f64,
) -> Result<f64> {
    theta_cloud_from_cluster_hops(
        theta_t,
        object_size,
        backhaul_rate,
        delay_budget,
        DEFAULT_HOPS,
    )
}

pub fn theta_cloud_from_cluster_hops(
    theta_t: f64,
    object_size: f64,
    backhaul_rate: f64,
    delay_budget: f64,
    hops: u32,
) -> Result<f64> {
    if !(theta_t > 0.0 && object_size >= 0.0 && backhaul_rate > 0.0 && delay_budget > 0.0) {
        return param("theta_cloud_from_cluster needs theta_T, r_BH, D_max > 0");
    }
    let ratio = backhaul_load_ratio(object_size, backhaul_rate, delay_budget, hops);
    if ratio >= 1.0 {
        return Err(Error::InfeasibleBackhaul(format!(
            "load ratio {ratio} >= 1: backhaul cannot meet the delay budget"
        )));
    }
    Ok(theta_t / (1.0 - ratio))
}

/// Minimum backhaul rate `2 B_S / (D_max (1 - θ_T/θ_C))`.
pub fn min_backhaul_rate(
    theta_t: f64,
    theta_c: f64,
    object_size: f64,
    delay_budget: f64,
) -> Result<f64> {
    min_backhaul_rate_hops(theta_t, theta_c, object_size, delay_budget, DEFAULT_HOPS)
}

pub fn min_backhaul_rate_hops(
    theta_t: f64,
    theta_c: f64,
    object_size: f64,
    delay_budget: f64,
    hops: u32,
) -> Result<f64> {
    if !(theta_t > 0.0 && object_size >= 0.0 && delay_budget > 0.0) {
        return param("min_backhaul_rate needs theta_T, D_max > 0");
    }
    if theta_t >= theta_c {
        return domain(format!(
            "theta_T = {theta_t} >= theta_C = {theta_c}: equal QoS needs an unbounded backhaul"
        ));
    }
    Ok(hops as f64 * object_size / (delay_budget * (1.0 - theta_t / theta_c)))
}

/// As [`min_backhaul_rate`], reporting rates above `cap` as infeasible.
pub fn min_backhaul_rate_capped(
    theta_t: f64,
    theta_c: f64,
    object_size: f64,
    delay_budget: f64,
    cap: f64,
) -> Result<f64> {
    let r = min_backhaul_rate(theta_t, theta_c, object_size, delay_budget)?;
    if r > cap {
        return Err(Error::InfeasibleBackhaul(format!(
            "required rate {r} exceeds cap {cap}"
        )));
    }
    Ok(r)
}

/// Per-content QoS exponents plus the backhaul and delay parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct QosProfile {
    pub theta_cluster: Vec<f64>,
    pub theta_cloud: Vec<f64>,
    pub delay_budget: f64,
    pub backhaul_rate: f64,
    pub hop_count: u32,
}

impl QosProfile {
    pub fn new(
        theta_cluster: Vec<f64>,
        theta_cloud: Vec<f64>,
        delay_budget: f64,
        backhaul_rate: f64,
        hop_count: u32,
    ) -> Result<Self> {
        let q = QosProfile {
            theta_cluster,
            theta_cloud,
            delay_budget,
            backhaul_rate,
            hop_count,
        };
        q.validate()?;
        Ok(q)
    }

    /// Same exponent pair for every content.
    pub fn uniform(
        count: usize,
        theta_t: f64,
        theta_c: f64,
        delay_budget: f64,
        backhaul_rate: f64,
    ) -> Result<Self> {
        Self::new(
            vec![theta_t; count],
            vec![theta_c; count],
            delay_budget,
            backhaul_rate,
            DEFAULT_HOPS,
        )
    }

    /// Derive every `θ_C` from `θ_T` through the backhaul constraint.
    pub fn derived(
        theta_cluster: Vec<f64>,
        object_size: f64,
        delay_budget: f64,
        backhaul_rate: f64,
        hop_count: u32,
    ) -> Result<Self> {
        let theta_cloud = theta_cluster
            .iter()
            .map(|&t| {
                theta_cloud_from_cluster_hops(
                    t,
                    object_size,
                    backhaul_rate,
                    delay_budget,
                    hop_count,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            theta_cluster,
            theta_cloud,
            delay_budget,
            backhaul_rate,
            hop_count,
        )
    }

    pub fn count(&self) -> usize {
        self.theta_cluster.len()
    }

    /// Exponent the content experiences given where it is served from.
    pub fn theta(&self, content: usize, cached: bool) -> f64 {
        if cached {
            self.theta_cluster[content]
        } else {
            self.theta_cloud[content]
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.theta_cluster.len() != self.theta_cloud.len() || self.theta_cluster.is_empty() {
            return param("theta_cluster and theta_cloud must be non-empty and equally long");
        }
        for (l, (&t, &c)) in self.theta_cluster.iter().zip(&self.theta_cloud).enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return param(format!("theta_cluster[{}] must be > 0", l + 1));
            }
            if !(c >= t && c.is_finite()) {
                return param(format!(
                    "theta_cloud[{}] = {c} must be >= theta_cluster = {t}",
                    l + 1
                ));
            }
        }
        if !(self.delay_budget > 0.0 && self.backhaul_rate > 0.0) {
            return param("delay budget and backhaul rate must be > 0");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn delay_violation_examples() {
        assert_relative_eq!(
            delay_violation_prob(0.1, 1.0, 0.0, 2, 1.0).unwrap(),
            (-0.1f64).exp()
        );
        assert_relative_eq!(
            delay_violation_prob(0.1, 1.0, 0.0, 2, 1.0).unwrap(),
            0.90484,
            epsilon = 1e-5
        );
        let p = delay_violation_prob(0.6, 4e6, 1e6, 2, 1.0).unwrap();
        assert_relative_eq!(p, (-0.3f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(p, 0.74082, epsilon = 1e-5);
        // budget almost exhausted → probability tends to 1
        let q = delay_violation_prob(0.6, 4e6, 1e6, 2, 0.5 + 1e-12).unwrap();
        assert!(q > 1.0 - 1e-9 && q < 1.0);
        assert!(matches!(
            delay_violation_prob(0.6, 4e6, 1e6, 2, 0.5),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn cloud_exponent_matches_delay_budget() {
        // equal delay experience: exp(-θ_C (D - 2B/r)) == exp(-θ_T D)
        let (b, r, d) = (1e6, 4e6, 1.0);
        let theta_t = 0.1;
        let theta_c = theta_cloud_from_cluster(theta_t, b, r, d).unwrap();
        assert_relative_eq!(theta_c, 0.2, max_relative = 1e-12);
        let cloud = delay_violation_prob(theta_c, r, b, 2, d).unwrap();
        let local =
            delay_violation_prob(theta_t, f64::INFINITY, b, 2, d).unwrap_or((-theta_t * d).exp());
        assert_relative_eq!(cloud, local, max_relative = 1e-12);
    }

    #[test]
    fn theta_cloud_examples() {
        assert_relative_eq!(
            theta_cloud_from_cluster(0.1, 1e6, 1e30, 1.0).unwrap(),
            0.1,
            max_relative = 1e-12
        );
        assert!(matches!(
            theta_cloud_from_cluster(0.1, 1e6, 2e6, 1.0),
            Err(Error::InfeasibleBackhaul(_))
        ));
    }

    #[test]
    fn backhaul_rate_examples() {
        assert_relative_eq!(
            min_backhaul_rate(0.1, 0.2, 1e6, 1.0).unwrap(),
            4e6,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            min_backhaul_rate(0.1, 0.6, 1e6, 1.0).unwrap(),
            2.4e6,
            max_relative = 1e-12
        );
        assert!(matches!(
            min_backhaul_rate(0.6, 0.6, 1e6, 1.0),
            Err(Error::Domain(_))
        ));
        assert!(min_backhaul_rate(0.1, 0.1 * (1.0 + 1e-12), 1e6, 1.0).unwrap() > 1e17);
        assert!(matches!(
            min_backhaul_rate_capped(0.1, 0.1 * (1.0 + 1e-9), 1e6, 1.0, 1e12),
            Err(Error::InfeasibleBackhaul(_))
        ));
    }

    #[test]
    fn profile_invariants() {
        assert!(QosProfile::uniform(3, 0.1, 0.6, 1.0, 4e6).is_ok());
        assert!(QosProfile::uniform(3, 0.6, 0.1, 1.0, 4e6).is_err());
        assert!(QosProfile::uniform(3, 0.0, 0.1, 1.0, 4e6).is_err());
        let d = QosProfile::derived(vec![0.1, 0.2], 1e6, 1.0, 4e6, 2).unwrap();
        assert_relative_eq!(d.theta_cloud[1], 0.4, max_relative = 1e-12);
    }
}
