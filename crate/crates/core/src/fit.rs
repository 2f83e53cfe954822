//! Fitting `h_n(q) ≈ Σ c_k r_k^q` to exact counts.
//!
//! With the roots fixed, the constants solve the linear least-squares
//! problem that minimises the relative error `Σ_k c_k r_k^q / h(q) - 1` over
//! the valid `q` of a window. The design matrix is built in the log domain,
//! `exp(q ln|r_k| - ln h(q))`, so counts far beyond `f64` range are fine.

use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::NaryCounts;
use crate::rep::lower_coeffs;
use crate::roots::characteristic_roots;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticFit {
    pub n: u32,
    /// Truncation depth the roots came from, if any.
    pub i: Option<usize>,
    pub roots: Vec<f64>,
    pub constants: Vec<f64>,
    /// Largest relative error over the fitted points.
    pub residual: f64,
    pub window: (usize, usize),
    pub points: usize,
}

/// `ln v` for any positive integer, exact to `f64` rounding.
pub fn ln_big(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().map_or(f64::NAN, f64::ln);
    }
    let shift = bits - 64;
    let top = (v >> shift).to_f64().unwrap_or(f64::NAN);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `sign(r)^q · exp(q ln|r| - offset)`.
fn scaled_power(r: f64, q: i64, offset: f64) -> f64 {
    let sign = if r < 0.0 && q % 2 != 0 { -1.0 } else { 1.0 };
    sign * (q as f64 * r.abs().ln() - offset).exp()
}

/// Relative least squares over arbitrary `(q, value)` points.
pub fn fit_sequence(roots: &[f64], points: &[(i64, BigUint)]) -> Result<(Vec<f64>, f64)> {
    if roots.is_empty() {
        return Err(Error::Domain("at least one root is needed".into()));
    }
    if let Some(r) = roots.iter().find(|r| !r.is_finite() || **r == 0.0) {
        return Err(Error::Domain(format!("root {r} cannot be fitted")));
    }
    if points.len() < roots.len() {
        return Err(Error::Config(format!(
            "{} points cannot determine {} constants",
            points.len(),
            roots.len()
        )));
    }
    if points.iter().any(|(_, v)| v.bits() == 0) {
        return Err(Error::Domain("relative fit needs nonzero values".into()));
    }
    let (rows, cols) = (points.len(), roots.len());
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    for (r, (q, v)) in points.iter().enumerate() {
        let offset = ln_big(v);
        for (c, &root) in roots.iter().enumerate() {
            a[(r, c)] = scaled_power(root, *q, offset);
        }
    }
    let scale: Vec<f64> = (0..cols)
        .map(|c| a.column(c).amax())
        .map(|m| if m > 0.0 { m } else { 1.0 })
        .collect();
    let mut scaled = a.clone();
    for (c, s) in scale.iter().enumerate() {
        scaled.column_mut(c).unscale_mut(*s);
    }
    let ones = DVector::<f64>::from_element(rows, 1.0);
    let svd = scaled.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > smax * 1e-14) {
        return Err(Error::Numerical(format!(
            "fit system is singular (singular values {smax:e} .. {smin:e})"
        )));
    }
    let x = svd.solve(&ones, 0.0).map_err(|e| Error::Numerical(e.to_string()))?;
    let constants: Vec<f64> = x.iter().zip(&scale).map(|(v, s)| v / s).collect();
    let fitted = &a * DVector::from_column_slice(&constants);
    let residual = fitted.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    Ok((constants, residual))
}

/// Fits constants for `roots` against `h_n(q)` over the valid `q` in `window`.
pub fn fit_constants(
    counts: &NaryCounts,
    roots: &[f64],
    window: RangeInclusive<usize>,
) -> Result<AsymptoticFit> {
    let (lo, hi) = (*window.start(), *window.end());
    if hi > counts.max_q() {
        return Err(Error::Config(format!(
            "window end {hi} is beyond the table horizon {}",
            counts.max_q()
        )));
    }
    let points: Vec<(i64, BigUint)> = window
        .filter(|&q| counts.is_valid_q(q))
        .map(|q| (q as i64, counts.h(q)))
        .collect();
    let (constants, residual) = fit_sequence(roots, &points)?;
    Ok(AsymptoticFit {
        n: counts.n(),
        i: None,
        roots: roots.to_vec(),
        constants,
        residual,
        window: (lo, hi),
        points: points.len(),
    })
}

/// Roots of the lower-bound recurrence for `(n, i)`, then [`fit_constants`].
pub fn fit_from_truncation(
    counts: &NaryCounts,
    i: usize,
    terms: usize,
    window: RangeInclusive<usize>,
) -> Result<AsymptoticFit> {
    let list = lower_coeffs(counts.n(), i)?;
    let roots = characteristic_roots(&list, terms)?;
    let mut fit = fit_constants(counts, &roots, window)?;
    fit.i = Some(i);
    Ok(fit)
}

/// Default fitting window for a branching factor.
pub fn default_window(n: u32) -> RangeInclusive<usize> {
    match n {
        2 => 60..=120,
        _ => 60..=180,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Approximation {
    pub q: usize,
    pub value: f64,
    /// `residual · |value|`: the fit's worst relative error carried over.
    pub error_estimate: f64,
}

/// `Σ c_k r_k^q` in floating point.
pub fn approx_h(fit: &AsymptoticFit, q: usize) -> Result<Approximation> {
    let value: f64 = fit
        .roots
        .iter()
        .zip(&fit.constants)
        .map(|(&r, &c)| c * scaled_power(r, q as i64, 0.0))
        .sum();
    if !value.is_finite() {
        return Err(Error::Numerical(format!(
            "approximation overflows f64 at q = {q}; use the log10 form"
        )));
    }
    Ok(Approximation { q, value, error_estimate: fit.residual * value.abs() })
}

/// `log10` of `Σ c_k r_k^q`, computed relative to the dominant term so it
/// stays finite for any `q`.
pub fn approx_log10_h(fit: &AsymptoticFit, q: usize) -> Result<f64> {
    let (r1, c1) = match (fit.roots.first(), fit.constants.first()) {
        (Some(&r), Some(&c)) if r > 0.0 && c > 0.0 => (r, c),
        _ => return Err(Error::Domain("log form needs a positive dominant term".into())),
    };
    let ln_lead = c1.ln() + q as f64 * r1.ln();
    let rest: f64 = fit
        .roots
        .iter()
        .zip(&fit.constants)
        .skip(1)
        .map(|(&r, &c)| c / c1 * scaled_power(r / r1, q as i64, 0.0))
        .sum();
    let total = ln_lead + (1.0 + rest).ln();
    if !total.is_finite() {
        return Err(Error::Numerical(format!("log approximation undefined at q = {q}")));
    }
    Ok(total / std::f64::consts::LN_10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_of_huge_values() {
        let v = BigUint::from(3u32).pow(2000);
        assert!((ln_big(&v) - 2000.0 * 3f64.ln()).abs() < 1e-9);
        assert!((ln_big(&BigUint::from(10u32)) - 10f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn binet_constant() {
        // B(0) = B(1) = 1, B(q) = B(q-1) + B(q-2) is φ^(q+1)/√5 asymptotically
        let mut seq = vec![BigUint::from(1u32), BigUint::from(1u32)];
        for q in 2..=80 {
            let next = &seq[q - 1] + &seq[q - 2];
            seq.push(next);
        }
        let points: Vec<(i64, BigUint)> = (40..=80).map(|q| (q as i64, seq[q].clone())).collect();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let (c, res) = fit_sequence(&[phi], &points).unwrap();
        assert!((c[0] - phi / 5f64.sqrt()).abs() < 1e-12, "{c:?}");
        assert!(res < 1e-12);
    }

    #[test]
    fn duplicate_roots_are_singular() {
        let points: Vec<(i64, BigUint)> = (1..10).map(|q| (q, BigUint::from(q as u32))).collect();
        assert!(matches!(fit_sequence(&[1.5, 1.5], &points), Err(Error::Numerical(_))));
    }

    #[test]
    fn log_form_survives_large_q() {
        let fit = AsymptoticFit {
            n: 2,
            i: None,
            roots: vec![1.8, 1.2],
            constants: vec![0.14, 0.06],
            residual: 0.0,
            window: (0, 0),
            points: 0,
        };
        assert!(approx_h(&fit, 1_000_000).is_err());
        let l = approx_log10_h(&fit, 1_000_000).unwrap();
        let expected = 0.14f64.log10() + 1e6 * 1.8f64.log10();
        assert!((l - expected).abs() < 1e-6);
    }
}
