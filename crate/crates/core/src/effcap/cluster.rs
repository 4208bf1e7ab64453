//! Content-level and cluster-level averages over the user position.

use std::cell::RefCell;
use std::f64::consts::PI;

use rayon::prelude::*;

use super::special::{a_beta, u_func};
use super::{
    check_theta, log_generating_from_masses, log_generating_with, EffCapEngine, Quantizer,
    RadioParams,
};
use crate::content::{hit_ratio, ClusterCache, ContentCatalog};
use crate::error::{param, Result};
use crate::numeric::{integrate, pairwise_sum, Tolerance};
use crate::qos::QosProfile;

/// `e^{-S}` below which the distance integrals are truncated.
const DISTANCE_CUTOFF: f64 = 34.538776394910684; // ln 1e15
/// Range of `ln t`, `t = πλ_l d²`, for the distance-averaged capacity.
/// Below the lower end the integrand carries less than 1e-10 of the mass.
const AVERAGE_LOG_RANGE: (f64, f64) = (-27.631021115928547, 3.6888794541139363); // ln 1e-12, ln 40

/// How the per-content average is mapped to a capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ContentAverageForm {
    /// `P_l 𝔼_d{E(θ, d)}`: the capacity expectation over the serving distance.
    #[default]
    DistanceAveraged,
    /// `P_l` times the log-mapped generating function of the distance-mixed
    /// SINR distribution.
    Printed,
}

fn check_densities(lambda_l: f64, lambda_r: f64) -> Result<()> {
    if !(lambda_l > 0.0 && lambda_l.is_finite()) {
        return param(format!("content density must be > 0, got {lambda_l}"));
    }
    if lambda_l > lambda_r * (1.0 + 1e-12) {
        return param(format!(
            "content density {lambda_l} exceeds RRH density {lambda_r}"
        ));
    }
    Ok(())
}

/// `ℒ_l(γ_n)`: probability that a user requesting content `l` sees SINR
/// below `γ_n` from its nearest serving RRH, by quadrature over distance.
pub fn l_func_general(
    gamma_n: f64,
    lambda_l: f64,
    lambda_r: f64,
    params: &RadioParams,
) -> Result<f64> {
    check_densities(lambda_l, lambda_r)?;
    params.validate()?;
    if !(gamma_n >= 0.0 && gamma_n.is_finite()) {
        return param(format!(
            "SINR threshold must be finite and >= 0, got {gamma_n}"
        ));
    }
    if gamma_n == 0.0 {
        return Ok(0.0);
    }
    let beta = params.pathloss_exponent;
    let u = u_func(gamma_n, beta)?;
    general_from_parts(
        gamma_n,
        gamma_n.powf(2.0 / beta),
        u,
        params.a_beta()?,
        lambda_l,
        lambda_r,
        params,
    )
}

fn general_from_parts(
    gamma_n: f64,
    g: f64,
    u: f64,
    a: f64,
    lambda_l: f64,
    lambda_r: f64,
    params: &RadioParams,
) -> Result<f64> {
    let beta = params.pathloss_exponent;
    // s = c d², c = 2πAγ^{2/β}(λ_R - λ_l) + πλ_l u + πλ_l
    let c = 2.0 * PI * a * g * (lambda_r - lambda_l).max(0.0) + PI * lambda_l * (u + 1.0);
    let k = gamma_n * params.noise / params.snr;
    let head = if k == 0.0 {
        -(-DISTANCE_CUTOFF).exp_m1()
    } else {
        let tol = Tolerance {
            abs: 1e-13,
            rel: 1e-10,
            max_depth: 40,
        };
        integrate(
            |s: f64| (-s - k * (s / c).powf(beta / 2.0)).exp(),
            0.0,
            DISTANCE_CUTOFF,
            tol,
        )?
    };
    Ok((1.0 - PI * lambda_l / c * head).clamp(0.0, 1.0))
}

/// Interference-limited `ℒ_l(γ_n) = 1 - 1/(2A(β)γ^{2/β}(q_l - 1) + u(γ, β) + 1)`.
pub fn l_func_limited(gamma_n: f64, q_l: f64, beta: f64) -> Result<f64> {
    if !(q_l >= 1.0 && q_l.is_finite()) {
        return param(format!("density ratio q_l must be >= 1, got {q_l}"));
    }
    if !(gamma_n >= 0.0 && gamma_n.is_finite()) {
        return param(format!(
            "SINR threshold must be finite and >= 0, got {gamma_n}"
        ));
    }
    let a = a_beta(beta)?;
    let u = u_func(gamma_n, beta)?;
    Ok(1.0 - 1.0 / limited_denominator(gamma_n.powf(2.0 / beta), u, a, q_l))
}

fn limited_denominator(g: f64, u: f64, a: f64, q_l: f64) -> f64 {
    2.0 * a * g * (q_l - 1.0) + u + 1.0
}

/// `Ē(θ_l)` for one content with the default distance-averaged form.
pub fn avg_eff_cap_content(
    theta_l: f64,
    p_l: f64,
    lambda_l: f64,
    lambda_r: f64,
    params: &RadioParams,
    q: &Quantizer,
) -> Result<f64> {
    EffCapEngine::new(params.clone(), q.clone())?.content_eff_cap(
        theta_l,
        p_l,
        lambda_l,
        lambda_r,
        ContentAverageForm::DistanceAveraged,
    )
}

impl EffCapEngine {
    /// `Ē(θ_l)` for content requested with probability `p_l` and served
    /// by a thinned PPP of density `lambda_l`.
    pub fn content_eff_cap(
        &self,
        theta_l: f64,
        p_l: f64,
        lambda_l: f64,
        lambda_r: f64,
        form: ContentAverageForm,
    ) -> Result<f64> {
        check_theta(theta_l)?;
        if !(0.0..=1.0).contains(&p_l) {
            return param(format!("request probability must lie in [0, 1], got {p_l}"));
        }
        if p_l == 0.0 {
            return Ok(0.0);
        }
        check_densities(lambda_l, lambda_r)?;
        let v = match form {
            ContentAverageForm::DistanceAveraged => {
                self.distance_averaged(theta_l, lambda_l, lambda_r)?
            }
            ContentAverageForm::Printed => self.printed(theta_l, lambda_l, lambda_r)?,
        };
        Ok(p_l * v)
    }

    /// `𝔼_d{E(θ, d)}` with `t = πλ_l d² ~ Exp(1)`, integrated in `ln t`
    /// where the integrand is smooth.
    fn distance_averaged(&self, theta: f64, lambda_l: f64, lambda_r: f64) -> Result<f64> {
        let p = &self.params;
        let beta = p.pathloss_exponent;
        let q_l = lambda_r / lambda_l;
        let u = self.u_values()?;
        let g = self.pow_2_beta();
        let b = self.quantizer.boundaries();
        let slope: Vec<f64> = g
            .iter()
            .zip(u)
            .map(|(g, u)| 2.0 * self.a_beta * g * (q_l - 1.0).max(0.0) + u)
            .collect();
        let noise = p.noise / p.snr;
        let a = p.exponent(theta);
        let log1p = self.quantizer.log1p_typical();
        let conditional = |t: f64| -> Result<f64> {
            let d_beta = (t / (PI * lambda_l)).powf(beta / 2.0);
            let slope = &slope;
            let x = move |n: usize| t * slope[n] + noise * b[n] * d_beta;
            self.finish(log_generating_with(x, log1p, a)?, theta)
        };
        let failure = RefCell::new(None);
        let tol = Tolerance {
            abs: 1e-8 * p.spectral_efficiency,
            rel: 1e-6,
            max_depth: 30,
        };
        let v = integrate(
            |v: f64| {
                let t = v.exp();
                match conditional(t) {
                    Ok(e) => (-t).exp() * t * e,
                    Err(err) => {
                        failure.borrow_mut().get_or_insert(err);
                        0.0
                    }
                }
            },
            AVERAGE_LOG_RANGE.0,
            AVERAGE_LOG_RANGE.1,
            tol,
        )?;
        match failure.into_inner() {
            Some(err) => Err(err),
            None => Ok(v),
        }
    }

    /// `-log2(Σ_n [ℒ(γ_{n+1}) - ℒ(γ_n)] (1+γ̄_n)^{-a}) / (θWT̄)`.
    fn printed(&self, theta: f64, lambda_l: f64, lambda_r: f64) -> Result<f64> {
        let masses = self.content_interval_masses(lambda_l, lambda_r)?;
        let a = self.params.exponent(theta);
        self.finish(
            log_generating_from_masses(&masses, self.quantizer.log1p_typical(), a)?,
            theta,
        )
    }

    /// Interval masses of the distance-mixed SINR distribution; the last
    /// interval takes the tail above `γ_max`.
    fn content_interval_masses(&self, lambda_l: f64, lambda_r: f64) -> Result<Vec<f64>> {
        let u = self.u_values()?;
        let g = self.pow_2_beta();
        let n = g.len();
        if self.params.noise == 0.0 {
            let q_l = lambda_r / lambda_l;
            let c: Vec<f64> = g
                .iter()
                .zip(u)
                .map(|(g, u)| limited_denominator(*g, *u, self.a_beta, q_l))
                .collect();
            Ok((0..n)
                .map(|i| {
                    if i + 1 < n {
                        (c[i + 1] - c[i]) / (c[i] * c[i + 1])
                    } else {
                        1.0 / c[i]
                    }
                })
                .collect())
        } else {
            let b = self.quantizer.boundaries();
            let survival = (0..n)
                .into_par_iter()
                .map(|i| {
                    if b[i] == 0.0 {
                        Ok(1.0)
                    } else {
                        general_from_parts(
                            b[i],
                            g[i],
                            u[i],
                            self.a_beta,
                            lambda_l,
                            lambda_r,
                            &self.params,
                        )
                        .map(|l| 1.0 - l)
                    }
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((0..n)
                .map(|i| {
                    if i + 1 < n {
                        (survival[i] - survival[i + 1]).max(0.0)
                    } else {
                        survival[i]
                    }
                })
                .collect())
        }
    }
}

/// `Ē(θ_l^T)` and `Ē(θ_l^C)` for every content.
#[derive(Debug, Clone, PartialEq)]
pub struct ContentValues {
    pub cluster: Vec<f64>,
    pub cloud: Vec<f64>,
}

impl ContentValues {
    pub fn sum_cluster(&self) -> f64 {
        pairwise_sum(&self.cluster)
    }

    pub fn sum_cloud(&self) -> f64 {
        pairwise_sum(&self.cloud)
    }

    /// `Ē_T = P_hit ΣĒ(θ^T) + (1 - P_hit) ΣĒ(θ^C)`.
    pub fn cluster_average(&self, p_hit: f64) -> f64 {
        // written about the cloud baseline so it is monotone in p_hit under rounding
        let cloud = self.sum_cloud();
        cloud + p_hit * (self.sum_cluster() - cloud)
    }

    /// `ΔĒ_T = P_hit Σ(Ē(θ^T) - Ē(θ^C))`.
    pub fn gain(&self, p_hit: f64) -> f64 {
        let diffs: Vec<f64> = self
            .cluster
            .iter()
            .zip(&self.cloud)
            .map(|(t, c)| t - c)
            .collect();
        p_hit * pairwise_sum(&diffs)
    }
}

/// Per-content averages for a whole catalog.
pub fn content_values(
    engine: &EffCapEngine,
    catalog: &ContentCatalog,
    qos: &QosProfile,
    lambda_split: &[f64],
    form: ContentAverageForm,
) -> Result<ContentValues> {
    let count = catalog.count();
    if qos.count() != count || lambda_split.len() != count {
        return param(format!(
            "catalog has {count} objects but QoS has {} and the density split {}",
            qos.count(),
            lambda_split.len()
        ));
    }
    qos.validate()?;
    let lambda_r: f64 = lambda_split.iter().sum();
    let p = catalog.popularity();
    let pairs = (0..count)
        .into_par_iter()
        .map(|l| {
            let (tt, tc) = (qos.theta_cluster[l], qos.theta_cloud[l]);
            let t = engine.content_eff_cap(tt, p[l], lambda_split[l], lambda_r, form)?;
            let c = if tc == tt {
                t
            } else {
                engine.content_eff_cap(tc, p[l], lambda_split[l], lambda_r, form)?
            };
            Ok((t, c))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let (cluster, cloud) = pairs.into_iter().unzip();
    Ok(ContentValues { cluster, cloud })
}

/// Cluster-average effective capacity together with its ingredients.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterEffCap {
    pub value: f64,
    pub hit_ratio: f64,
    pub gain: f64,
    pub per_content: ContentValues,
}

impl ClusterEffCap {
    pub fn evaluate(
        engine: &EffCapEngine,
        cache: &ClusterCache,
        catalog: &ContentCatalog,
        qos: &QosProfile,
        lambda_split: &[f64],
        form: ContentAverageForm,
    ) -> Result<Self> {
        let p_hit = hit_ratio(cache, catalog)?;
        let per_content = content_values(engine, catalog, qos, lambda_split, form)?;
        Ok(Self::from_values(per_content, p_hit))
    }

    pub fn from_values(per_content: ContentValues, p_hit: f64) -> Self {
        ClusterEffCap {
            value: per_content.cluster_average(p_hit),
            hit_ratio: p_hit,
            gain: per_content.gain(p_hit),
            per_content,
        }
    }
}

/// `Ē_T` with the distance-averaged per-content form.
pub fn avg_eff_cap_cluster(
    cache: &ClusterCache,
    catalog: &ContentCatalog,
    qos: &QosProfile,
    lambda_split: &[f64],
    params: &RadioParams,
    q: &Quantizer,
) -> Result<f64> {
    let engine = EffCapEngine::new(params.clone(), q.clone())?;
    Ok(ClusterEffCap::evaluate(
        &engine,
        cache,
        catalog,
        qos,
        lambda_split,
        ContentAverageForm::default(),
    )?
    .value)
}

/// `ΔĒ_T`, the gain of the cluster cache over fetching every object
/// through the backhaul.
pub fn caching_gain(
    cache: &ClusterCache,
    catalog: &ContentCatalog,
    qos: &QosProfile,
    lambda_split: &[f64],
    params: &RadioParams,
    q: &Quantizer,
) -> Result<f64> {
    let engine = EffCapEngine::new(params.clone(), q.clone())?;
    Ok(ClusterEffCap::evaluate(
        &engine,
        cache,
        catalog,
        qos,
        lambda_split,
        ContentAverageForm::default(),
    )?
    .gain)
}
