//! Effective capacity of a typical user in a Poisson field of RRHs under
//! Rayleigh fading, and its content- and cluster-level averages.
//!
//! QoS exponents are expressed per data unit, and the spectral efficiency
//! `μ` in data units per second per hertz, so the exponent `μθWT̄` is
//! dimensionless and capacities come out in the same unit as `μ`.

mod cluster;
mod quantizer;
mod special;

use std::f64::consts::{LN_2, PI};
use std::sync::OnceLock;

use rayon::prelude::*;

pub use cluster::{
    avg_eff_cap_cluster, avg_eff_cap_content, caching_gain, content_values, l_func_general,
    l_func_limited, ClusterEffCap, ContentAverageForm, ContentValues,
};
pub use quantizer::{
    Quantizer, DEFAULT_GAMMA_MAX, DEFAULT_GAMMA_MIN, DEFAULT_INTERVALS, UNIFORM_GAMMA_MAX,
    UNIFORM_INTERVALS,
};
pub use special::{a_beta, u_func};

use crate::error::{param, Error, Result};

/// Radio-link parameters shared by every effective-capacity evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    /// Transmit SNR `ρ` (linear).
    pub snr: f64,
    pub pathloss_exponent: f64,
    /// Normalized noise power `σ²`.
    pub noise: f64,
    /// RRU bandwidth `W` in Hz.
    pub bandwidth: f64,
    /// RRU duration `T` in seconds.
    pub slot: f64,
    /// `μ`, data units per second per hertz.
    pub spectral_efficiency: f64,
    /// Multiplier applied to `A(β)`; 1 except in negative-control runs.
    #[doc(hidden)]
    pub a_beta_fault: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            snr: 1.0,
            pathloss_exponent: 4.0,
            noise: 0.0,
            bandwidth: 1e3,
            slot: 1e-3,
            spectral_efficiency: 1.0,
            a_beta_fault: 1.0,
        }
    }
}

impl RadioParams {
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.pathloss_exponent = beta;
        self
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_spectral_efficiency(mut self, mu: f64) -> Self {
        self.spectral_efficiency = mu;
        self
    }

    /// `T̄ = T / ln 2`.
    pub fn tbar(&self) -> f64 {
        self.slot / LN_2
    }

    /// `μ θ W T̄`.
    pub fn exponent(&self, theta: f64) -> f64 {
        self.spectral_efficiency * theta * self.bandwidth * self.tbar()
    }

    pub(crate) fn a_beta(&self) -> Result<f64> {
        Ok(a_beta(self.pathloss_exponent)? * self.a_beta_fault)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pathloss_exponent > 2.0 && self.pathloss_exponent.is_finite()) {
            return param(format!(
                "pathloss_exponent must be > 2, got {}",
                self.pathloss_exponent
            ));
        }
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return param("snr must be > 0");
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return param("noise must be >= 0");
        }
        if !(self.bandwidth > 0.0 && self.slot > 0.0) {
            return param("bandwidth and slot must be > 0");
        }
        if !(self.spectral_efficiency > 0.0 && self.spectral_efficiency.is_finite()) {
            return param("spectral_efficiency must be > 0");
        }
        Ok(())
    }
}

/// `μ = L B_S / (N W T)` for `contents` objects of `object_size` data
/// units sharing `rrus` radio resource units.
pub fn spectral_efficiency_for(
    contents: usize,
    object_size: f64,
    rrus: usize,
    bandwidth: f64,
    slot: f64,
) -> f64 {
    contents as f64 * object_size / (rrus as f64 * bandwidth * slot)
}

/// Effective capacity with its per-interval breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct EffCapResult {
    pub value: f64,
    /// `Pr{γ ∈ I_n} (1 + γ̄_n)^{-μθWT̄}` for each interval.
    pub components: Vec<f64>,
}

/// `Pr{γ < γ_n}` for a user whose serving RRH sits at `d_m`.
pub fn outage_prob(gamma_n: f64, d_m: f64, lambda_r: f64, params: &RadioParams) -> Result<f64> {
    check_link(d_m, lambda_r)?;
    if !(gamma_n >= 0.0) {
        return param(format!("SINR threshold must be >= 0, got {gamma_n}"));
    }
    params.validate()?;
    if gamma_n == 0.0 {
        return Ok(0.0);
    }
    let beta = params.pathloss_exponent;
    let x = 2.0 * PI * params.a_beta()? * gamma_n.powf(2.0 / beta) * lambda_r * d_m * d_m
        + gamma_n * d_m.powf(beta) * params.noise / params.snr;
    Ok(-(-x).exp_m1())
}

/// Effective capacity `E(θ, d_m)` of a user served from distance `d_m`.
pub fn eff_cap_user(
    theta: f64,
    d_m: f64,
    lambda_r: f64,
    params: &RadioParams,
    q: &Quantizer,
) -> Result<EffCapResult> {
    EffCapEngine::new(params.clone(), q.clone())?.eff_cap_user(theta, d_m, lambda_r)
}

fn check_link(d_m: f64, lambda_r: f64) -> Result<()> {
    if !(d_m > 0.0 && d_m.is_finite()) {
        return param(format!("serving distance must be > 0, got {d_m}"));
    }
    if !(lambda_r >= 0.0 && lambda_r.is_finite()) {
        return param(format!("RRH density must be >= 0, got {lambda_r}"));
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0 && theta.is_finite()) {
        return param(format!("QoS exponent must be > 0, got {theta}"));
    }
    Ok(())
}

/// Precomputed per-boundary quantities for one `(params, quantizer)`
/// pair. Reuse one engine for repeated evaluations.
#[derive(Debug)]
pub struct EffCapEngine {
    params: RadioParams,
    quantizer: Quantizer,
    a_beta: f64,
    /// `γ_n^{2/β}` at the left boundary of each interval.
    pow_2_beta: Vec<f64>,
    /// `u(γ_n, β)` at each left boundary.
    u_values: OnceLock<Vec<f64>>,
}

impl EffCapEngine {
    pub fn new(params: RadioParams, quantizer: Quantizer) -> Result<Self> {
        params.validate()?;
        let beta = params.pathloss_exponent;
        let pow_2_beta = quantizer.boundaries()[..quantizer.intervals()]
            .iter()
            .map(|g| g.powf(2.0 / beta))
            .collect();
        Ok(EffCapEngine {
            a_beta: params.a_beta()?,
            params,
            quantizer,
            pow_2_beta,
            u_values: OnceLock::new(),
        })
    }

    pub fn params(&self) -> &RadioParams {
        &self.params
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn a_beta(&self) -> f64 {
        self.a_beta
    }

    /// Same engine with a different `μ`; the grids are shared by cloning.
    pub fn with_spectral_efficiency(&self, mu: f64) -> Result<Self> {
        let mut params = self.params.clone();
        params.spectral_efficiency = mu;
        params.validate()?;
        let u_values = OnceLock::new();
        if let Some(u) = self.u_values.get() {
            let _ = u_values.set(u.clone());
        }
        Ok(EffCapEngine {
            params,
            quantizer: self.quantizer.clone(),
            a_beta: self.a_beta,
            pow_2_beta: self.pow_2_beta.clone(),
            u_values,
        })
    }

    /// `u(γ_n, β)` at every left boundary, computed on first use.
    pub(crate) fn u_values(&self) -> Result<&[f64]> {
        if let Some(u) = self.u_values.get() {
            return Ok(u);
        }
        let beta = self.params.pathloss_exponent;
        let u = self.quantizer.boundaries()[..self.quantizer.intervals()]
            .iter()
            .map(|&g| u_func(g, beta))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.u_values.get_or_init(|| u))
    }

    pub(crate) fn pow_2_beta(&self) -> &[f64] {
        &self.pow_2_beta
    }

    /// Survival exponent at boundary `n` for a serving distance `d_m`.
    fn user_exponent(&self, d_m: f64, lambda_r: f64) -> impl Fn(usize) -> f64 + Sync + '_ {
        let c1 = 2.0 * PI * self.a_beta * lambda_r * d_m * d_m;
        let c2 = d_m.powf(self.params.pathloss_exponent) * self.params.noise / self.params.snr;
        let (g, b) = (&self.pow_2_beta, self.quantizer.boundaries());
        move |n| c1 * g[n] + c2 * b[n]
    }

    pub fn outage(&self, gamma_n: f64, d_m: f64, lambda_r: f64) -> Result<f64> {
        outage_prob(gamma_n, d_m, lambda_r, &self.params)
    }

    pub fn eff_cap_user(&self, theta: f64, d_m: f64, lambda_r: f64) -> Result<EffCapResult> {
        check_theta(theta)?;
        check_link(d_m, lambda_r)?;
        let a = self.params.exponent(theta);
        let log_g = log_generating_with(
            self.user_exponent(d_m, lambda_r),
            self.quantizer.log1p_typical(),
            a,
        )?;
        let x: Vec<f64> = (0..self.quantizer.intervals())
            .map(self.user_exponent(d_m, lambda_r))
            .collect();
        let components = interval_masses(&x)
            .zip(self.quantizer.log1p_typical())
            .map(|(lm, l1p)| (lm - a * l1p).exp())
            .collect();
        Ok(EffCapResult {
            value: self.finish(log_g, theta)?,
            components,
        })
    }

    /// Value-only variant of [`EffCapEngine::eff_cap_user`].
    pub fn eff_cap_user_value(&self, theta: f64, d_m: f64, lambda_r: f64) -> Result<f64> {
        check_theta(theta)?;
        check_link(d_m, lambda_r)?;
        let a = self.params.exponent(theta);
        let log_g = log_generating_with(
            self.user_exponent(d_m, lambda_r),
            self.quantizer.log1p_typical(),
            a,
        )?;
        self.finish(log_g, theta)
    }

    /// `-log2(𝒢) / (θWT̄)` from `ln 𝒢`, clamped into `[0, μ log2(1+γ_max)]`.
    pub(crate) fn finish(&self, log_g: f64, theta: f64) -> Result<f64> {
        if !log_g.is_finite() {
            return Err(Error::Internal(format!(
                "generating function degenerate (ln G = {log_g})"
            )));
        }
        let e = -log_g / LN_2 / (theta * self.params.bandwidth * self.params.tbar());
        let cap = self.params.spectral_efficiency * self.quantizer.gamma_max().ln_1p() / LN_2;
        Ok(e.clamp(0.0, cap))
    }
}

/// `ln Pr{γ ∈ I_n}` from the survival exponents `x_n = -ln Pr{γ ≥ γ_n}`
/// at the left boundaries; the final interval absorbs the tail above
/// `γ_max`.
fn interval_log_mass<X: Fn(usize) -> f64>(x: &X, i: usize, n: usize) -> f64 {
    let xi = x(i);
    if i + 1 < n {
        let dx = x(i + 1) - xi;
        -xi + (-(-dx).exp_m1()).ln()
    } else {
        -xi
    }
}

fn interval_masses(x: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let n = x.len();
    let f = move |i: usize| x[i];
    (0..n).map(move |i| interval_log_mass(&f, i, n))
}

/// Intervals handled per task; the split depends only on `N`, so the
/// reduction order is fixed.
const CHUNK: usize = 4096;

/// `ln 𝒢 = ln Σ mass_n (1+γ̄_n)^{-a} - ln Σ mass_n`, masses taken from the
/// survival exponents `x(n)`.
pub(crate) fn log_generating_with<X: Fn(usize) -> f64 + Sync>(
    x: X,
    log1p_typical: &[f64],
    a: f64,
) -> Result<f64> {
    let n = log1p_typical.len();
    let chunk = |c: usize| {
        let mut num = OnlineLse::default();
        let mut den = OnlineLse::default();
        for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
            let lm = interval_log_mass(&x, i, n);
            num.push(lm - a * log1p_typical[i]);
            den.push(lm);
        }
        (num, den)
    };
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<(OnlineLse, OnlineLse)> = if chunks > 1 {
        (0..chunks).into_par_iter().map(chunk).collect()
    } else {
        (0..chunks).map(chunk).collect()
    };
    let (mut num, mut den) = (OnlineLse::default(), OnlineLse::default());
    for (pn, pd) in parts {
        num.merge(pn);
        den.merge(pd);
    }
    let (num, den) = (num.value(), den.value());
    if !(num.is_finite() && den.is_finite()) {
        return Err(Error::Internal(
            "quantized SINR distribution carries no mass".into(),
        ));
    }
    Ok(num - den)
}

/// Same as [`log_generating_with`] but from linear interval
/// masses.
pub(crate) fn log_generating_from_masses(
    masses: &[f64],
    log1p_typical: &[f64],
    a: f64,
) -> Result<f64> {
    let mut num = OnlineLse::default();
    let mut den = OnlineLse::default();
    for (&m, l1p) in masses.iter().zip(log1p_typical) {
        if m > 0.0 {
            let lm = m.ln();
            num.push(lm - a * l1p);
            den.push(lm);
        }
    }
    let (num, den) = (num.value(), den.value());
    if !(num.is_finite() && den.is_finite()) {
        return Err(Error::Internal(
            "quantized SINR distribution carries no mass".into(),
        ));
    }
    Ok(num - den)
}

#[derive(Debug, Clone, Copy)]
struct OnlineLse {
    max: f64,
    sum: f64,
}

impl Default for OnlineLse {
    fn default() -> Self {
        OnlineLse {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl OnlineLse {
    fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.sum += (v - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        }
    }

    fn merge(&mut self, other: OnlineLse) {
        if other.sum == 0.0 {
            return;
        }
        if other.max <= self.max {
            self.sum += other.sum * (other.max - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - other.max).exp() + other.sum;
            self.max = other.max;
        }
    }

    fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}
