//! Real roots of the characteristic polynomial of a lag recurrence.
//!
//! For `B(q) = Σ c_lag · B(q - lag)` with maximal lag `m` the polynomial is
//! `x^m - Σ c_lag · x^(m - lag)`. When every lag is a multiple of some
//! `g > 1` (n-ary trees with `n > 2` only ever step by `n - 1`), the
//! polynomial is one in `y = x^g`; roots are found for `y` and reported as
//! the positive real `x = y^(1/g)`, the growth rate along the valid residue
//! class.
//!
//! All roots are first located as eigenvalues of the companion matrix. The
//! dominant one is then bisected on a bracket inside `[1, n^g]` and polished
//! by Newton steps; the following ones are refined the same way against the
//! undeflated polynomial. Eigenvalues are taken from the full companion
//! matrix rather than from successive deflations: dividing out the largest
//! root first is numerically unstable once the degree reaches the hundreds.

use nalgebra::{DMatrix, Schur};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rep::CoefficientList;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RootOptions {
    /// Bracket width at which bisection stops.
    pub tol: f64,
    /// Bound on `|p(r)| / max(1, |r|^m)` for every returned root.
    pub residual_tol: f64,
    /// An eigenvalue counts as complex when `|im| > complex_tol · max(1, |z|)`.
    pub complex_tol: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self { tol: 1e-12, residual_tol: 1e-10, complex_tol: 1e-7 }
    }
}

/// Monic polynomial, coefficients in descending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    /// Value and derivative.
    pub fn eval_with_derivative(&self, x: f64) -> (f64, f64) {
        let mut p = 0.0;
        let mut dp = 0.0;
        for &c in &self.coeffs {
            dp = dp * x + p;
            p = p * x + c;
        }
        (p, dp)
    }

    /// `|p(x)| / max(1, |x|^deg)`.
    pub fn scaled_residual(&self, x: f64) -> f64 {
        self.eval(x).abs() / x.abs().powi(self.degree() as i32).max(1.0)
    }

    /// Quotient of synthetic division by `(x - r)`.
    pub fn deflate(&self, r: f64) -> Polynomial {
        let mut out = Vec::with_capacity(self.degree());
        let mut acc = 0.0;
        for &c in &self.coeffs[..self.coeffs.len() - 1] {
            acc = acc * r + c;
            out.push(acc);
        }
        Polynomial::new(out)
    }

    /// Eigenvalues of the companion matrix, as `(re, im)` pairs.
    fn companion_roots(&self) -> Result<Vec<(f64, f64)>> {
        let d = self.degree();
        if d == 0 {
            return Ok(Vec::new());
        }
        let lead = self.coeffs[0];
        let mut m = DMatrix::<f64>::zeros(d, d);
        for k in 0..d {
            m[(0, k)] = -self.coeffs[k + 1] / lead;
        }
        for k in 1..d {
            m[(k, k - 1)] = 1.0;
        }
        let schur = Schur::try_new(m, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Numerical("companion eigenvalues did not converge".into()))?;
        Ok(schur.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect())
    }
}

/// `x^m - Σ c_lag x^(m - lag)` for the nonzero coefficients of `list`.
pub fn characteristic_polynomial(list: &CoefficientList) -> Polynomial {
    let m = list.max_lag();
    let mut coeffs = vec![0.0; m + 1];
    coeffs[0] = 1.0;
    for (lag, c) in list.nonzero() {
        coeffs[lag] = -(c as f64);
    }
    Polynomial::new(coeffs)
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Common step of all nonzero lags.
pub fn lag_step(list: &CoefficientList) -> usize {
    list.nonzero().map(|(lag, _)| lag).fold(0, gcd).max(1)
}

/// The polynomial in `y = x^g` with `g` = [`lag_step`].
fn reduced_polynomial(list: &CoefficientList, g: usize) -> Polynomial {
    let m = list.max_lag() / g;
    let mut coeffs = vec![0.0; m + 1];
    coeffs[0] = 1.0;
    for (lag, c) in list.nonzero() {
        coeffs[lag / g] = -(c as f64);
    }
    Polynomial::new(coeffs)
}

fn bisect(p: &Polynomial, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = p.eval(lo);
    let fhi = p.eval(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerical(format!(
            "no sign change on [{lo}, {hi}]: p(lo) = {flo:e}, p(hi) = {fhi:e}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = p.eval(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(polish(p, 0.5 * (lo + hi), lo, hi))
}

/// Newton steps that are kept only while they stay in `[lo, hi]` and shrink
/// the residual.
fn polish(p: &Polynomial, mut x: f64, lo: f64, hi: f64) -> f64 {
    let mut best = p.eval(x).abs();
    for _ in 0..8 {
        let (v, dv) = p.eval_with_derivative(x);
        if dv == 0.0 || v == 0.0 {
            break;
        }
        let next = x - v / dv;
        if !(lo..=hi).contains(&next) {
            break;
        }
        let r = p.eval(next).abs();
        if r >= best {
            break;
        }
        best = r;
        x = next;
    }
    x
}

/// Refines an eigenvalue estimate against `p`: look for a sign change
/// nearby and bisect it, otherwise fall back to Newton.
fn refine(p: &Polynomial, guess: f64, tol: f64) -> f64 {
    let mut width = 1e-9 * guess.abs().max(1.0);
    while width < 1e-2 * guess.abs().max(1.0) {
        let (lo, hi) = (guess - width, guess + width);
        if p.eval(lo).signum() != p.eval(hi).signum() {
            if let Ok(r) = bisect(p, lo, hi, tol) {
                return r;
            }
        }
        width *= 8.0;
    }
    let spread = 1e-2 * guess.abs().max(1.0);
    polish(p, guess, guess - spread, guess + spread)
}

/// Companion-matrix eigenvalues sorted by descending modulus.
fn sorted_eigenvalues(p: &Polynomial) -> Result<Vec<(f64, f64)>> {
    let mut eig = p.companion_roots()?;
    eig.sort_by(|a, b| b.0.hypot(b.1).total_cmp(&a.0.hypot(a.1)));
    Ok(eig)
}

/// Largest real root on `(1, hi]`, given the companion estimate `re`. A
/// monic polynomial is positive above its largest real root, so once a point
/// `lo` with `p(lo) < 0` is found just below the estimate, `[lo, hi]`
/// brackets exactly that root.
fn dominant_root(p: &Polynomial, estimate: (f64, f64), hi: f64, opts: RootOptions) -> Result<f64> {
    let (re, im) = estimate;
    let modulus = re.hypot(im);
    if im.abs() > opts.complex_tol * modulus.max(1.0) || re <= 0.0 {
        return Err(Error::ComplexDominant { modulus, re, im });
    }
    let fhi = p.eval(hi);
    if fhi <= 0.0 {
        return Err(Error::Numerical(format!(
            "p({hi}) = {fhi:e} is not positive; the dominant root exceeds the bracket"
        )));
    }
    let mut step = 1e-9 * re.max(1.0);
    let mut lo = re - step;
    while p.eval(lo) >= 0.0 {
        step *= 4.0;
        lo = re - step;
        if lo <= 1.0 {
            return Err(Error::Numerical(format!(
                "no sign change on [1, {hi}] below the eigenvalue estimate {re}: p(1) = {:e}, p({hi}) = {fhi:e}",
                p.eval(1.0)
            )));
        }
    }
    bisect(p, lo, hi, opts.tol)
}

/// The `count` largest-modulus real roots in descending modulus.
///
/// Fails when no sign change brackets the dominant root inside `[1, n^g]`,
/// when a larger root than the bracketed one exists, when the next root in modulus order is
/// part of a complex pair, or when a polished root misses the residual bound.
pub fn characteristic_roots(list: &CoefficientList, count: usize) -> Result<Vec<f64>> {
    characteristic_roots_with(list, count, RootOptions::default())
}

pub fn characteristic_roots_with(
    list: &CoefficientList,
    count: usize,
    opts: RootOptions,
) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Domain("root count must be at least 1".into()));
    }
    if list.max_lag() == 0 {
        return Err(Error::Domain("coefficient list is identically zero".into()));
    }
    let g = lag_step(list);
    let full = characteristic_polynomial(list);
    let reduced = reduced_polynomial(list, g);
    if count > reduced.degree() {
        return Err(Error::Domain(format!(
            "asked for {count} roots of a degree-{} polynomial",
            reduced.degree()
        )));
    }

    let hi = f64::from(list.n).powi(g as i32);
    let eig = sorted_eigenvalues(&reduced)?;
    let dominant = dominant_root(&reduced, eig[0], hi, opts)?;
    let mut found = vec![dominant];
    for &(re, im) in &eig[1..count] {
        let modulus = re.hypot(im);
        if im.abs() > opts.complex_tol * modulus.max(1.0) {
            return Err(Error::ComplexDominant { modulus: modulus.powf(1.0 / g as f64), re, im });
        }
        found.push(refine(&reduced, re, opts.tol));
    }

    let roots = found
        .into_iter()
        .map(|y| {
            if g == 1 {
                Ok(y)
            } else if y > 0.0 {
                Ok(y.powf(1.0 / g as f64))
            } else {
                let m = y.abs().powf(1.0 / g as f64);
                Err(Error::ComplexDominant { modulus: m, re: y, im: 0.0 })
            }
        })
        .collect::<Result<Vec<f64>>>()?;

    for &r in &roots {
        let res = full.scaled_residual(r);
        if !(res <= opts.residual_tol) {
            return Err(Error::Numerical(format!(
                "root {r} leaves scaled residual {res:e} above {:e}",
                opts.residual_tol
            )));
        }
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rep::{lower_coeffs, BoundKind};

    fn list(n: u32, coeffs: Vec<i64>) -> CoefficientList {
        CoefficientList { n, i: 0, kind: BoundKind::Lower, span: coeffs.len(), coeffs }
    }

    #[test]
    fn golden_ratio() {
        let r = characteristic_roots(&list(2, vec![1, 1]), 1).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((r[0] - phi).abs() < 1e-12, "{}", r[0]);
    }

    #[test]
    fn tribonacci_and_complex_pair() {
        // x^3 = x^2 + x + 1 has one real root and a complex pair
        let l = list(2, vec![1, 1, 1]);
        let r = characteristic_roots(&l, 1).unwrap();
        assert!((r[0] - 1.839_286_755_214_161).abs() < 1e-12);
        assert!(matches!(characteristic_roots(&l, 2), Err(Error::ComplexDominant { .. })));
    }

    #[test]
    fn two_real_roots() {
        // x^2 = x + 6 has roots 3 and -2
        let r = characteristic_roots(&list(4, vec![1, 6]), 2).unwrap();
        assert!((r[0] - 3.0).abs() < 1e-12);
        assert!((r[1] + 2.0).abs() < 1e-10);
    }

    #[test]
    fn no_sign_change_is_reported() {
        // x - 3 keeps one sign on [1, 2]
        let err = characteristic_roots(&list(2, vec![3]), 1).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err}");
    }

    #[test]
    fn even_lags_use_reduced_variable() {
        let l = lower_coeffs(3, 20).unwrap();
        assert_eq!(lag_step(&l), 2);
        let r = characteristic_roots(&l, 2).unwrap();
        assert!(r[0] > r[1] && r[1] > 1.0 && r[0] < 3.0, "{r:?}");
        let p = characteristic_polynomial(&l);
        for x in r {
            assert!(p.scaled_residual(x) < 1e-10);
        }
    }

    #[test]
    fn deflation_drops_degree() {
        let p = Polynomial::new(vec![1.0, -3.0, 2.0]);
        let q = p.deflate(1.0);
        assert_eq!(q.coeffs(), &[1.0, -2.0]);
        assert_eq!(p.eval_with_derivative(2.0), (0.0, 1.0));
    }
}
