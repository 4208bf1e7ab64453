//! `A(β)` and `u(γ, β)`, the two special functions of the interference
//! Laplace transform under Rayleigh fading.

use statrs::function::gamma::gamma;

use crate::error::{domain, param, Result};
use crate::numeric::{integrate, Tolerance};

/// `A(β) = Γ(2/β) Γ(1 - 2/β) / β`.
pub fn a_beta(beta: f64) -> Result<f64> {
    if !beta.is_finite() {
        return param(format!("path-loss exponent must be finite, got {beta}"));
    }
    if beta <= 2.0 {
        return domain(format!("A(beta) requires beta > 2, got {beta}"));
    }
    Ok(gamma(2.0 / beta) * gamma(1.0 - 2.0 / beta) / beta)
}

/// `∫_x^∞ dt / (1 + t^b)` for `x >= 4`, `b > 1`, by the alternating
/// expansion `Σ_k (-1)^k x^{1 - b(k+1)} / (b(k+1) - 1)`.
fn tail_series(x: f64, b: f64) -> f64 {
    let ratio = x.powf(-b);
    let mut term_pow = x.powf(1.0 - b);
    let mut sum = 0.0;
    for k in 0..200 {
        let denom = b * (k as f64 + 1.0) - 1.0;
        let term = term_pow / denom;
        sum += if k % 2 == 0 { term } else { -term };
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
        term_pow *= ratio;
    }
    sum
}

const TAIL_START: f64 = 4.0;

/// `u(γ, β) = γ^{2/β} ∫_{γ^{-2/β}}^∞ (1 + x^{β/2})^{-1} dx`.
///
/// The integral is split at `max(γ^{-2/β}, 4)`: adaptive Gauss-Kronrod on
/// the finite head, the convergent alternating series on the tail.
/// Absolute accuracy is better than 1e-9.
pub fn u_func(gamma_n: f64, beta: f64) -> Result<f64> {
    if !(gamma_n >= 0.0) || gamma_n.is_infinite() {
        return param(format!(
            "SINR threshold must be finite and >= 0, got {gamma_n}"
        ));
    }
    if !beta.is_finite() || beta <= 2.0 {
        return domain(format!("u(gamma, beta) requires beta > 2, got {beta}"));
    }
    if gamma_n == 0.0 {
        return Ok(0.0);
    }
    let b = beta / 2.0;
    let scale = gamma_n.powf(2.0 / beta);
    let lower = 1.0 / scale;
    let split = lower.max(TAIL_START);
    let head = if lower < split {
        let tol = Tolerance {
            abs: 1e-11 / scale,
            rel: 1e-12,
            max_depth: 40,
        };
        integrate(|x| 1.0 / (1.0 + x.powf(b)), lower, split, tol)?
    } else {
        0.0
    };
    Ok(scale * (head + tail_series(split, b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn a_beta_closed_forms() {
        // Γ(1/2)² / 4 = π/4
        assert_abs_diff_eq!(a_beta(4.0).unwrap(), PI / 4.0, epsilon = 1e-12);
        // reflection: Γ(1/3)Γ(2/3) = π / sin(π/3)
        assert_abs_diff_eq!(
            a_beta(6.0).unwrap(),
            PI / (6.0 * (PI / 3.0).sin()),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(a_beta(6.0).unwrap(), 0.604600, epsilon = 1e-6);
        // general reflection oracle: A(β) = (π/β) / sin(2π/β)
        for beta in [2.5, 3.0, 3.7, 5.0, 8.0, 12.0] {
            let want = PI / beta / (2.0 * PI / beta).sin();
            assert_abs_diff_eq!(a_beta(beta).unwrap(), want, epsilon = 1e-11);
        }
        assert!(a_beta(2.0).is_err());
        assert!(a_beta(1.5).is_err());
    }

    #[test]
    fn u_func_closed_forms_at_beta_4() {
        assert_eq!(u_func(0.0, 4.0).unwrap(), 0.0);
        // β = 4: u(γ) = √γ · arctan(√γ)
        assert_abs_diff_eq!(u_func(1.0, 4.0).unwrap(), PI / 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(u_func(4.0, 4.0).unwrap(), 2.214297, epsilon = 1e-6);
        for g in [1e-10, 1e-4, 0.03, 0.5, 2.0, 17.0, 1e3, 5e4, 1e9] {
            let s: f64 = f64::sqrt(g);
            assert_abs_diff_eq!(
                u_func(g, 4.0).unwrap(),
                s * s.atan(),
                epsilon = 1e-9 * s.max(1.0)
            );
        }
    }

    #[test]
    fn u_func_against_plain_quadrature() {
        // brute-force midpoint rule on the substituted integral t = 1/x
        for &(g, beta) in &[(0.7f64, 3.5f64), (3.0, 6.0), (50.0, 8.0), (0.01, 5.0)] {
            let b: f64 = beta / 2.0;
            let upper = g.powf(2.0 / beta); // t ∈ (0, γ^{2/β}]
            let n = 2_000_000;
            let h = upper / n as f64;
            let mut acc = 0.0;
            for i in 0..n {
                let t = (i as f64 + 0.5) * h;
                acc += t.powf(b - 2.0) / (1.0 + t.powf(b));
            }
            let brute = g.powf(2.0 / beta) * acc * h;
            assert_abs_diff_eq!(
                u_func(g, beta).unwrap(),
                brute,
                epsilon = 2e-4 * brute.max(1.0)
            );
        }
    }

    #[test]
    fn u_func_is_increasing() {
        let mut last = 0.0;
        for k in 0..60 {
            let g = 10f64.powf(-6.0 + 0.2 * k as f64);
            let v = u_func(g, 6.0).unwrap();
            assert!(v > last);
            last = v;
        }
    }
}
