//! Majorants of modulus-of-continuity type and sampled modulus estimators.
//!
//! A majorant is a sum of per-axis power terms `K t^a`, optionally saturated
//! as `min(K t^a, C)`. With `0 < a <= 1` every such term is zero at the
//! origin, non-decreasing, subadditive, continuous and concave, so the family
//! is closed under the axioms by construction. The sampling checker in this
//! module is a falsification net on top of that.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MultiIndexIter;

const MODULE: &str = "moduli";

/// Additive slack used by [`check_mc_axioms`].
pub const AXIOM_SLACK: f64 = 1e-12;

/// One axis of a majorant: `t -> K t^a`, or `min(K t^a, C)` when capped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    weight: f64,
    exponent: f64,
    cap: Option<f64>,
}

impl PowerTerm {
    pub fn power(weight: f64, exponent: f64) -> Result<Self> {
        Self::validated(weight, exponent, None)
    }

    pub fn saturated(weight: f64, exponent: f64, cap: f64) -> Result<Self> {
        Self::validated(weight, exponent, Some(cap))
    }

    pub fn new(weight: f64, exponent: f64, cap: Option<f64>) -> Result<Self> {
        Self::validated(weight, exponent, cap)
    }

    /// Builds a term without validating the exponent. Exists so tests can
    /// feed non-majorants (e.g. `t^2`) through the axiom checker and the
    /// concavity gates.
    #[doc(hidden)]
    pub fn unchecked(weight: f64, exponent: f64, cap: Option<f64>) -> Self {
        PowerTerm { weight, exponent, cap }
    }

    fn validated(weight: f64, exponent: f64, cap: Option<f64>) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::pre(MODULE, format!("weight {weight} must be finite and >= 0")));
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::pre(MODULE, format!("exponent {exponent} must lie in (0, 1]")));
        }
        if let Some(c) = cap {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::pre(MODULE, format!("cap {c} must be finite and > 0")));
            }
        }
        Ok(PowerTerm { weight, exponent, cap })
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let v = if self.exponent == 1.0 {
            self.weight * t
        } else {
            self.weight * t.powf(self.exponent)
        };
        match self.cap {
            Some(c) => v.min(c),
            None => v,
        }
    }

    pub fn is_concave(&self) -> bool {
        self.exponent > 0.0 && self.exponent <= 1.0
    }
}

/// Anything that can be checked against the majorant axioms.
pub trait Majorant {
    fn dim(&self) -> usize;

    /// Evaluates at a point with non-negative components. No validation.
    fn eval_unchecked(&self, tau: &[f64]) -> f64;
}

/// Multivariate majorant `Omega(tau) = sum_i term_i(tau_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McFunctionMulti {
    terms: Vec<PowerTerm>,
}

impl McFunctionMulti {
    pub fn new(terms: Vec<PowerTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::pre(MODULE, "majorant needs at least one axis"));
        }
        Ok(McFunctionMulti { terms })
    }

    /// `sum_i K_i tau_i^{a_i}`.
    pub fn power_sum(weights: &[f64], exponents: &[f64]) -> Result<Self> {
        if weights.len() != exponents.len() {
            return Err(Error::pre(MODULE, "weights and exponents differ in length"));
        }
        let terms = weights
            .iter()
            .zip(exponents)
            .map(|(&k, &a)| PowerTerm::power(k, a))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    /// `sum_i min(K_i tau_i^{a_i}, C_i)`.
    pub fn saturated_power_sum(weights: &[f64], exponents: &[f64], caps: &[f64]) -> Result<Self> {
        if weights.len() != exponents.len() || weights.len() != caps.len() {
            return Err(Error::pre(MODULE, "weights, exponents and caps differ in length"));
        }
        let terms = weights
            .iter()
            .zip(exponents)
            .zip(caps)
            .map(|((&k, &a), &c)| PowerTerm::saturated(k, a, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(terms)
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    pub fn concave_per_axis(&self) -> Vec<bool> {
        self.terms.iter().map(PowerTerm::is_concave).collect()
    }

    pub fn is_concave(&self) -> bool {
        self.terms.iter().all(PowerTerm::is_concave)
    }

    pub fn eval(&self, tau: &[f64]) -> Result<f64> {
        if tau.len() != self.terms.len() {
            return Err(Error::pre(
                MODULE,
                format!("majorant has {} axes, got {} arguments", self.terms.len(), tau.len()),
            ));
        }
        if let Some((i, t)) = tau.iter().enumerate().find(|(_, t)| !(**t >= 0.0)) {
            return Err(Error::pre(MODULE, format!("tau[{i}] = {t} must be >= 0")));
        }
        Ok(self.eval_unchecked(tau))
    }
}

impl Majorant for McFunctionMulti {
    fn dim(&self) -> usize {
        self.terms.len()
    }

    #[inline]
    fn eval_unchecked(&self, tau: &[f64]) -> f64 {
        self.terms.iter().zip(tau).map(|(t, &x)| t.eval(x)).sum()
    }
}

/// Univariate majorant `Omega(gamma)` used with l_p distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McFunctionUni {
    term: PowerTerm,
}

impl McFunctionUni {
    pub fn new(term: PowerTerm) -> Self {
        McFunctionUni { term }
    }

    pub fn power(weight: f64, exponent: f64) -> Result<Self> {
        PowerTerm::power(weight, exponent).map(Self::new)
    }

    pub fn saturated(weight: f64, exponent: f64, cap: f64) -> Result<Self> {
        PowerTerm::saturated(weight, exponent, cap).map(Self::new)
    }

    pub fn term(&self) -> PowerTerm {
        self.term
    }

    pub fn is_concave(&self) -> bool {
        self.term.is_concave()
    }

    pub fn eval(&self, gamma: f64) -> Result<f64> {
        if !(gamma >= 0.0) {
            return Err(Error::pre(MODULE, format!("gamma = {gamma} must be >= 0")));
        }
        Ok(self.term.eval(gamma))
    }

    #[inline]
    pub fn eval_unchecked(&self, gamma: f64) -> f64 {
        self.term.eval(gamma)
    }

    /// The same majorant applied independently on each of `n` axes,
    /// `sum_i Omega(tau_i)`.
    pub fn lift(&self, n: usize) -> McFunctionMulti {
        McFunctionMulti { terms: vec![self.term; n] }
    }
}

impl Majorant for McFunctionUni {
    fn dim(&self) -> usize {
        1
    }

    fn eval_unchecked(&self, tau: &[f64]) -> f64 {
        self.term.eval(tau[0])
    }
}

/// Exponent of an l_p distance, restricted to `1 <= p <= 3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpMetric {
    p: f64,
}

impl LpMetric {
    pub fn new(p: f64) -> Result<Self> {
        if !(1.0..=3.0).contains(&p) {
            return Err(Error::pre(MODULE, format!("p = {p} must lie in [1, 3]")));
        }
        Ok(LpMetric { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Diameter of `[0, 1]^n`, `n^{1/p}`.
    pub fn diameter(&self, n: usize) -> f64 {
        (n as f64).powf(1.0 / self.p)
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.root(v.iter().map(|x| self.pow(x.abs())).sum())
    }

    #[inline]
    pub fn pow(&self, t: f64) -> f64 {
        if self.p == 1.0 {
            t
        } else if self.p == 2.0 {
            t * t
        } else {
            t.powf(self.p)
        }
    }

    #[inline]
    pub fn root(&self, s: f64) -> f64 {
        if self.p == 1.0 {
            s
        } else if self.p == 2.0 {
            s.sqrt()
        } else {
            s.powf(1.0 / self.p)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    VanishesAtZero,
    NonDecreasing,
    Subadditive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomViolation {
    pub axiom: Axiom,
    pub tau: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Amount by which the inequality fails, beyond the slack.
    pub excess: f64,
}

/// Samples the first three majorant axioms on `sample_count` pseudo-random
/// pairs from `[0, 1]^n`. Deterministic for a fixed seed; duplicate pairs
/// are dropped before checking.
pub fn check_mc_axioms<O: Majorant + ?Sized>(
    omega: &O,
    sample_count: usize,
    seed: u64,
) -> Vec<AxiomViolation> {
    let n = omega.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        let tau: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let gamma: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let key: Vec<u64> = tau.iter().chain(&gamma).map(|v| v.to_bits()).collect();
        if seen.insert(key) {
            pairs.push((tau, gamma));
        }
    }
    if pairs.is_empty() {
        return Vec::new();
    }

    let mut out = Vec::new();
    let zero = vec![0.0; n];
    let at_zero = omega.eval_unchecked(&zero);
    if at_zero.abs() > AXIOM_SLACK {
        out.push(AxiomViolation {
            axiom: Axiom::VanishesAtZero,
            tau: zero.clone(),
            gamma: zero,
            excess: at_zero.abs() - AXIOM_SLACK,
        });
    }
    for (tau, gamma) in pairs {
        let upper: Vec<f64> = tau.iter().zip(&gamma).map(|(a, b)| a.max(*b)).collect();
        let sum: Vec<f64> = tau.iter().zip(&gamma).map(|(a, b)| a + b).collect();
        let o_tau = omega.eval_unchecked(&tau);
        let o_gamma = omega.eval_unchecked(&gamma);

        let drop = o_tau - omega.eval_unchecked(&upper);
        if drop > AXIOM_SLACK {
            out.push(AxiomViolation {
                axiom: Axiom::NonDecreasing,
                tau: tau.clone(),
                gamma: gamma.clone(),
                excess: drop - AXIOM_SLACK,
            });
        }
        let excess = omega.eval_unchecked(&sum) - o_tau - o_gamma;
        if excess > AXIOM_SLACK {
            out.push(AxiomViolation {
                axiom: Axiom::Subadditive,
                tau,
                gamma,
                excess: excess - AXIOM_SLACK,
            });
        }
    }
    out
}

fn van_der_corput(mut k: usize) -> f64 {
    let mut v = 0.0;
    let mut base = 0.5;
    while k > 0 {
        if k & 1 == 1 {
            v += base;
        }
        base *= 0.5;
        k >>= 1;
    }
    v
}

/// Nested one-axis lattice: `0, 1, 1/2, 1/4, 3/4, 1/8, ...`, first `s`
/// entries. For `s = 2^k + 1` this is the uniform lattice of step `2^-k`,
/// and the lattice for `s` is always contained in the one for `s + 1`.
pub fn nested_lattice(s: usize) -> Vec<f64> {
    (0..s)
        .map(|k| match k {
            0 => 0.0,
            1 => 1.0,
            _ => van_der_corput(k - 1),
        })
        .collect()
}

fn lattice_points(n: usize, samples_per_axis: usize) -> impl Iterator<Item = Vec<f64>> {
    let axis = nested_lattice(samples_per_axis.max(1));
    MultiIndexIter::new(vec![axis.len(); n])
        .map(move |idx| idx.iter().map(|&k| axis[k]).collect())
}

fn sign_patterns(n: usize) -> impl Iterator<Item = Vec<f64>> {
    MultiIndexIter::new(vec![3; n])
        .map(|idx| idx.iter().map(|&k| k as f64 - 1.0).collect::<Vec<f64>>())
        .filter(|e| e.iter().any(|&v| v != 0.0))
}

/// Lower estimate of the total modulus `omega(f; tau)`.
///
/// Pairs are `(x, clamp(x + eps * tau))` for `x` on a nested lattice with
/// `samples_per_axis` points per axis and `eps` in `{-1, 0, 1}^n`. Clamping
/// to the cube keeps `|x_i - y_i| <= tau_i`. The lattices are nested, so the
/// estimate never decreases as `samples_per_axis` grows.
///
/// Panics if `tau` has a negative component.
pub fn empirical_total_modulus<F>(f: F, tau: &[f64], samples_per_axis: usize) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert!(tau.iter().all(|&t| t >= 0.0), "tau must be non-negative");
    let n = tau.len();
    if tau.iter().all(|&t| t == 0.0) {
        return 0.0;
    }
    let patterns: Vec<Vec<f64>> = sign_patterns(n).collect();
    let mut best = 0.0_f64;
    let mut y = vec![0.0; n];
    for x in lattice_points(n, samples_per_axis) {
        let fx = f(&x);
        for eps in &patterns {
            for i in 0..n {
                y[i] = (x[i] + eps[i] * tau[i]).clamp(0.0, 1.0);
            }
            best = best.max((fx - f(&y)).abs());
        }
    }
    best
}

/// Lower estimate of the l_p modulus `omega_p(f; gamma)` on `[0, 1]^dim`.
///
/// Pairs are `(x, clamp(x + gamma * u))` where `u` runs over the normalised
/// sign patterns `eps / |eps|_p`.
pub fn empirical_lp_modulus<F>(
    f: F,
    dim: usize,
    metric: LpMetric,
    gamma: f64,
    samples_per_axis: usize,
) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    assert!(gamma >= 0.0, "gamma must be non-negative");
    if gamma == 0.0 {
        return 0.0;
    }
    let dirs: Vec<Vec<f64>> = sign_patterns(dim)
        .map(|e| {
            let norm = metric.norm(&e);
            e.iter().map(|v| v / norm).collect()
        })
        .collect();
    let mut best = 0.0_f64;
    let mut y = vec![0.0; dim];
    for x in lattice_points(dim, samples_per_axis) {
        let fx = f(&x);
        for u in &dirs {
            for i in 0..dim {
                y[i] = (x[i] + gamma * u[i]).clamp(0.0, 1.0);
            }
            best = best.max((fx - f(&y)).abs());
        }
    }
    best
}

/// `(1 + t)^{p+1} - 2^p (t^p + t)`. Non-negative for `t >= 0`, `0 < p <= 3`;
/// this is the inequality that bounds the per-axis l_p interpolation weight.
pub fn korneychuk_gap(t: f64, p: f64) -> f64 {
    (1.0 + t).powf(p + 1.0) - 2f64.powf(p) * (t.powf(p) + t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn linear2() -> McFunctionMulti {
        McFunctionMulti::power_sum(&[1.0, 1.0], &[1.0, 1.0]).unwrap()
    }

    #[test]
    fn eval_examples() {
        assert_abs_diff_eq!(linear2().eval(&[0.25, 1.0 / 6.0]).unwrap(), 5.0 / 12.0, epsilon = 1e-15);
        assert_eq!(linear2().eval(&[0.0, 0.0]).unwrap(), 0.0);
        let sq = McFunctionMulti::power_sum(&[2.0], &[0.5]).unwrap();
        assert_eq!(sq.eval(&[0.25]).unwrap(), 1.0);
        assert!(linear2().eval(&[-0.1, 0.0]).is_err());
        assert!(linear2().eval(&[0.1]).is_err());
    }

    #[test]
    fn constructors_reject_out_of_family_parameters() {
        assert!(PowerTerm::power(1.0, 1.5).is_err());
        assert!(PowerTerm::power(1.0, 0.0).is_err());
        assert!(PowerTerm::power(-1.0, 0.5).is_err());
        assert!(PowerTerm::saturated(1.0, 0.5, 0.0).is_err());
        assert!(McFunctionMulti::power_sum(&[1.0], &[1.0, 1.0]).is_err());
        assert!(LpMetric::new(0.5).is_err());
        assert!(LpMetric::new(3.5).is_err());
        assert!(LpMetric::new(3.0).is_ok());
    }

    #[test]
    fn axioms_hold_for_valid_family() {
        let omega = McFunctionMulti::power_sum(&[1.0, 1.0], &[0.5, 1.0]).unwrap();
        assert!(check_mc_axioms(&omega, 1000, 7).is_empty());
        let sat = McFunctionMulti::saturated_power_sum(&[3.0, 1.0], &[0.3, 1.0], &[0.4, 0.2]).unwrap();
        assert!(check_mc_axioms(&sat, 1000, 7).is_empty());
        let uni = McFunctionUni::saturated(2.0, 0.7, 0.5).unwrap();
        assert!(check_mc_axioms(&uni, 1000, 7).is_empty());
    }

    #[test]
    fn squared_term_breaks_subadditivity() {
        let bad = McFunctionMulti::new(vec![PowerTerm::unchecked(1.0, 2.0, None)]).unwrap();
        assert!(!bad.is_concave());
        // tau = gamma = 0.5: Omega(1) = 1 > 0.25 + 0.25
        let lhs = bad.eval(&[1.0]).unwrap();
        let rhs = 2.0 * bad.eval(&[0.5]).unwrap();
        assert!(lhs > rhs);
        let v = check_mc_axioms(&bad, 1000, 1);
        assert!(v.iter().any(|v| v.axiom == Axiom::Subadditive));
    }

    #[test]
    fn zero_samples_is_vacuous() {
        let bad = McFunctionUni::new(PowerTerm::unchecked(1.0, 2.0, None));
        assert!(check_mc_axioms(&bad, 0, 1).is_empty());
    }

    #[test]
    fn axiom_check_is_deterministic() {
        let bad = McFunctionMulti::new(vec![PowerTerm::unchecked(1.0, 2.0, None); 2]).unwrap();
        assert_eq!(check_mc_axioms(&bad, 200, 42), check_mc_axioms(&bad, 200, 42));
    }

    #[test]
    fn nested_lattice_is_nested_and_uniform_at_dyadic_sizes() {
        let mut l9 = nested_lattice(9);
        l9.sort_by(f64::total_cmp);
        let expect: Vec<f64> = (0..9).map(|k| k as f64 / 8.0).collect();
        assert_eq!(l9, expect);
        for s in 1..20 {
            let a = nested_lattice(s);
            let b = nested_lattice(s + 1);
            assert_eq!(&b[..s], &a[..]);
        }
    }

    #[test]
    fn total_modulus_examples() {
        let w = empirical_total_modulus(|x: &[f64]| x[0], &[0.3], 33);
        assert_abs_diff_eq!(w, 0.3, epsilon = 1e-15);
        assert_eq!(empirical_total_modulus(|_: &[f64]| 4.0, &[0.2, 0.3], 9), 0.0);
        let w = empirical_total_modulus(|x: &[f64]| x[0] + x[1], &[0.2, 0.1], 9);
        assert_abs_diff_eq!(w, 0.3, epsilon = 1e-15);
    }

    #[test]
    fn lp_modulus_examples() {
        let p2 = LpMetric::new(2.0).unwrap();
        let p1 = LpMetric::new(1.0).unwrap();
        let w = empirical_lp_modulus(|x: &[f64]| x[0], 2, p2, 0.5, 9);
        assert_abs_diff_eq!(w, 0.5, epsilon = 1e-15);
        assert_eq!(empirical_lp_modulus(|x: &[f64]| x[0].sin(), 1, p2, 0.0, 9), 0.0);
        let w = empirical_lp_modulus(|x: &[f64]| x[0] + x[1], 2, p1, 0.4, 9);
        assert_abs_diff_eq!(w, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn diameter() {
        assert_abs_diff_eq!(LpMetric::new(2.0).unwrap().diameter(4), 2.0, epsilon = 1e-15);
        assert_eq!(LpMetric::new(1.0).unwrap().diameter(3), 3.0);
    }

    proptest! {
        #[test]
        fn majorant_is_monotone(a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64,
                                k in 0.0..5.0f64, e in 0.05..=1.0f64) {
            let omega = McFunctionMulti::power_sum(&[k, 1.0], &[e, 0.5]).unwrap();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(omega.eval(&[lo, c]).unwrap() <= omega.eval(&[hi, c]).unwrap());
        }

        #[test]
        fn total_modulus_is_monotone_in_resolution(s in 2usize..12, t in 0.0..1.0f64) {
            let f = |x: &[f64]| (3.0 * x[0]).sin() * x[1];
            let lo = empirical_total_modulus(f, &[t, t / 2.0], s);
            let hi = empirical_total_modulus(f, &[t, t / 2.0], s + 1);
            prop_assert!(lo <= hi);
        }

        #[test]
        fn korneychuk_inequality(t in 0.0..100.0f64, p in 1.0..=3.0f64) {
            let scale = (1.0 + t).powf(p + 1.0);
            prop_assert!(korneychuk_gap(t, p) >= -1e-12 * scale);
        }

        #[test]
        fn in_class_function_stays_under_majorant(t0 in 0.0..1.0f64, t1 in 0.0..1.0f64) {
            // |sin a - sin b| <= |a - b| and |sqrt a - sqrt b| <= sqrt|a - b|
            let omega = McFunctionMulti::power_sum(&[1.0, 1.0], &[1.0, 0.5]).unwrap();
            let f = |x: &[f64]| x[0].sin() + x[1].sqrt();
            let w = empirical_total_modulus(f, &[t0, t1], 9);
            prop_assert!(w <= omega.eval(&[t0, t1]).unwrap() + 1e-9);
        }
    }
}
