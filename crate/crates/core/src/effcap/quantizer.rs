use crate::error::{param, Result};

/// Partition of the SINR axis `0 = γ_1 < … < γ_{N+1} = γ_max` with
/// midpoint typical values `γ̄_n = (γ_n + γ_{n+1}) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    boundaries: Vec<f64>,
    typical: Vec<f64>,
    log1p_typical: Vec<f64>,
}

/// Default number of intervals for desk-scale runs.
pub const DEFAULT_INTERVALS: usize = 1 << 16;
/// Lowest non-zero boundary of the geometric grid.
pub const DEFAULT_GAMMA_MIN: f64 = 1e-12;
/// Top of the geometric grid.
pub const DEFAULT_GAMMA_MAX: f64 = 1e12;
/// Top of the equal-width grid used for replication runs.
pub const UNIFORM_GAMMA_MAX: f64 = 5e4;
pub const UNIFORM_INTERVALS: usize = 1_000_000;

impl Quantizer {
    pub fn from_boundaries(boundaries: Vec<f64>) -> Result<Self> {
        if boundaries.len() < 2 {
            return param("quantizer needs at least one interval");
        }
        if boundaries[0] != 0.0 {
            return param("first quantizer boundary must be 0");
        }
        if boundaries.iter().any(|b| !b.is_finite()) || boundaries.windows(2).any(|w| w[1] <= w[0])
        {
            return param("quantizer boundaries must be finite and strictly increasing");
        }
        let typical: Vec<f64> = boundaries.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        let log1p_typical = typical.iter().map(|g| g.ln_1p()).collect();
        Ok(Quantizer {
            boundaries,
            typical,
            log1p_typical,
        })
    }

    /// `intervals` cells: `[0, γ_min)` followed by geometrically spaced
    /// cells up to `γ_max`.
    pub fn geometric(intervals: usize, gamma_min: f64, gamma_max: f64) -> Result<Self> {
        if intervals < 2 {
            return param("geometric quantizer needs at least two intervals");
        }
        if !(gamma_min > 0.0 && gamma_max > gamma_min) {
            return param("geometric quantizer needs 0 < gamma_min < gamma_max");
        }
        let steps = (intervals - 1) as f64;
        let log_ratio = (gamma_max / gamma_min).ln() / steps;
        let mut b = Vec::with_capacity(intervals + 1);
        b.push(0.0);
        for k in 0..intervals - 1 {
            b.push(gamma_min * (log_ratio * k as f64).exp());
        }
        b.push(gamma_max);
        Self::from_boundaries(b)
    }

    /// Equal-width cells on `[0, γ_max]`.
    pub fn uniform(intervals: usize, gamma_max: f64) -> Result<Self> {
        if intervals == 0 || !(gamma_max > 0.0) {
            return param("uniform quantizer needs intervals >= 1 and gamma_max > 0");
        }
        let w = gamma_max / intervals as f64;
        let mut b: Vec<f64> = (0..intervals).map(|k| k as f64 * w).collect();
        b.push(gamma_max);
        Self::from_boundaries(b)
    }

    pub fn desk_default() -> Self {
        Self::geometric(DEFAULT_INTERVALS, DEFAULT_GAMMA_MIN, DEFAULT_GAMMA_MAX)
            .expect("valid default grid")
    }

    pub fn paper_exact() -> Self {
        Self::uniform(UNIFORM_INTERVALS, UNIFORM_GAMMA_MAX).expect("valid uniform grid")
    }

    pub fn intervals(&self) -> usize {
        self.typical.len()
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn typical_values(&self) -> &[f64] {
        &self.typical
    }

    pub(crate) fn log1p_typical(&self) -> &[f64] {
        &self.log1p_typical
    }

    pub fn gamma_max(&self) -> f64 {
        *self.boundaries.last().unwrap()
    }
}
