//! One- and two-parameter Mittag-Leffler functions and the time/parameter
//! derivatives of `t ↦ E_α(λ t^α)`.
//!
//! Every routine here is a power series `Σ_n z^n c_n` with
//! `c_n = (αn+γ)(αn+γ-1)⋯(αn+γ-k+1) / Γ(αn+δ)` for some shift `γ`, gamma
//! offset `δ` and derivative order `k`. The series is summed in double
//! precision with compensated accumulation and stopped once three
//! consecutive terms fall below `ε·|partial sum|`. The fast pass also tracks
//! how much cancellation occurred; when the estimated rounding error exceeds
//! the configured target, the same series is re-summed in MPFR arithmetic
//! (see [`crate::precise`]).
//!
//! For `E_{α,β}` itself with `α ≤ 1`, once `R = |z|^(1/α)` is large the
//! series needs on the order of `e²R/α` terms with peaks near `e^R`; there the
//! exponential-plus-inverse-power expansion is used instead, whose error is
//! of order `e^-R`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gamma::{ln_gamma, rgamma};
use crate::precise;
use crate::sum::ComplexSum;

/// Fractional order `α ∈ (0, 1]`; `α = 1` is the classical system.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct FracOrder(f64);

impl FracOrder {
    pub const CLASSICAL: FracOrder = FracOrder(1.0);

    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(FracOrder(alpha))
        } else {
            Err(Error::Domain(format!(
                "fractional order must lie in (0, 1], got {alpha}"
            )))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_classical(self) -> bool {
        self.0 == 1.0
    }
}

impl TryFrom<f64> for FracOrder {
    type Error = Error;
    fn try_from(alpha: f64) -> Result<Self> {
        FracOrder::new(alpha)
    }
}

impl From<FracOrder> for f64 {
    fn from(a: FracOrder) -> f64 {
        a.0
    }
}

impl fmt::Display for FracOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Tuning knobs of the series evaluator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesConfig {
    /// Relative size below which a term counts toward the stopping streak.
    pub eps: f64,
    /// Minimum term budget; raised automatically for small `α` or large `|z|`.
    pub min_terms: usize,
    /// Hard ceiling on the number of terms.
    pub max_terms: usize,
    /// Largest admissible `|z|`.
    pub argument_cap: f64,
    /// Relative rounding error above which the MPFR path takes over.
    pub target_rel_error: f64,
    /// Largest working precision the MPFR path may use.
    pub max_precision_bits: u32,
    /// `R = |z|^(1/α)` from which `E_{α,β}` switches to the large-argument
    /// expansion; `f64::INFINITY` forces the series.
    pub expansion_radius: f64,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            eps: 1e-16,
            min_terms: 500,
            max_terms: 400_000,
            argument_cap: 30.0,
            target_rel_error: 1e-14,
            max_precision_bits: 16_384,
            expansion_radius: 45.0,
        }
    }
}

/// A summed series with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlSeriesResult {
    pub value: Complex64,
    /// Number of terms summed (at least one).
    pub terms_used: usize,
    /// Estimated magnitude of the neglected tail.
    pub tail_bound: f64,
    /// 53 for the double-precision path, otherwise the MPFR working precision.
    pub precision_bits: u32,
}

/// Coefficient family `c_n = (αn+shift)_k↓ / Γ(αn+gamma_offset)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SeriesKind {
    pub alpha: f64,
    pub shift: f64,
    pub gamma_offset: f64,
    pub order: u32,
    /// `gamma_offset = shift + 1`: the falling factorial cancels into the
    /// gamma function, `(x)_k↓ / Γ(x+1) = 1/Γ(x+1-k)`.
    pub canonical: bool,
}

impl SeriesKind {
    /// `E_{α,β}(z)`.
    pub fn two_param(alpha: f64, beta: f64) -> Self {
        SeriesKind {
            alpha,
            shift: beta - 1.0,
            gamma_offset: beta,
            order: 0,
            canonical: true,
        }
    }

    /// `t^k · d^k/dt^k E_α(λ t^α)` as a series in `z = λ t^α`.
    pub fn time_derivative(alpha: f64, order: u32) -> Self {
        SeriesKind {
            alpha,
            shift: 0.0,
            gamma_offset: 1.0,
            order,
            canonical: true,
        }
    }

    /// `t^(k-α) · d^k/dt^k [t^α E_{α,α}(λ t^α)]` as a series in `z = λ t^α`.
    pub fn coupling_derivative(alpha: f64, order: u32) -> Self {
        SeriesKind {
            alpha,
            shift: alpha,
            gamma_offset: alpha,
            order,
            canonical: false,
        }
    }

    fn coeff(&self, n: usize) -> f64 {
        if self.canonical {
            return rgamma(self.gamma_arg(n));
        }
        let x = self.alpha * n as f64 + self.shift;
        let mut c = rgamma(self.alpha * n as f64 + self.gamma_offset);
        for j in 0..self.order {
            c *= x - j as f64;
        }
        c
    }

    /// `(sign, ln|c_n|)` for large `n`, where the gamma argument is positive.
    fn ln_coeff(&self, n: usize) -> (f64, f64) {
        if self.canonical {
            return (1.0, -ln_gamma(self.gamma_arg(n)));
        }
        let x = self.alpha * n as f64 + self.shift;
        let mut sign = 1.0;
        let mut ln = -ln_gamma(self.alpha * n as f64 + self.gamma_offset);
        for j in 0..self.order {
            let f = x - j as f64;
            if f < 0.0 {
                sign = -sign;
            }
            ln += f.abs().ln();
        }
        (sign, ln)
    }

    /// Argument of the gamma function in the `n`-th coefficient.
    fn gamma_arg(&self, n: usize) -> f64 {
        if self.canonical {
            self.alpha * n as f64 + self.gamma_offset - self.order as f64
        } else {
            self.alpha * n as f64 + self.gamma_offset
        }
    }
}

/// Term budget large enough for the terms to have peaked and decayed by ~e^-40.
fn term_budget(alpha: f64, z_abs: f64, cfg: &SeriesConfig) -> Result<usize> {
    // terms behave like exp(m (ln R - ln m + 1)) with m = αn and R = |z|^(1/α);
    // past m = e²R they shrink at least like e^-m
    let r = z_abs.powf(1.0 / alpha);
    let m = std::f64::consts::E.powi(2) * r + 45.0;
    let needed = (m / alpha).ceil() + 16.0;
    if !needed.is_finite() || needed > cfg.max_terms as f64 {
        return Err(Error::Convergence(format!(
            "series with |z| = {z_abs}, alpha = {alpha} would need about {needed:.3e} terms"
        )));
    }
    Ok((needed as usize).max(cfg.min_terms))
}

struct FastPass {
    value: Complex64,
    terms: usize,
    tail: f64,
    /// Estimated absolute rounding error.
    rounding: f64,
    /// Largest term magnitude seen.
    max_term: f64,
}

fn fast_pass(kind: SeriesKind, z: Complex64, budget: usize, eps: f64) -> Result<FastPass> {
    let z_abs = z.norm();
    let ln_z = z_abs.ln();
    let arg = z.arg();
    let real_axis = z.im == 0.0;

    let mut acc = ComplexSum::new();
    let mut zpow = Complex64::new(1.0, 0.0);
    let mut log_mode = false;
    let mut streak = 0;
    let mut weighted_abs = 0.0;
    let mut max_term = 0.0f64;
    let (mut last, mut prev) = (0.0f64, 0.0f64);
    let mut n = 0;
    while n < budget {
        if !log_mode && (n as f64 * ln_z > 600.0 || kind.gamma_arg(n) > 160.0) {
            log_mode = true;
        }
        let term = if z_abs == 0.0 && n > 0 {
            Complex64::new(0.0, 0.0)
        } else if log_mode {
            let (sign, ln_c) = kind.ln_coeff(n);
            let mag = sign * (n as f64 * ln_z + ln_c).exp();
            if real_axis {
                let s = if z.re < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
                Complex64::new(s * mag, 0.0)
            } else {
                Complex64::from_polar(mag, n as f64 * arg)
            }
        } else {
            zpow * kind.coeff(n)
        };
        if !term.re.is_finite() || !term.im.is_finite() {
            return Err(Error::Convergence(format!(
                "series terms for z = {z} overflow double precision"
            )));
        }
        acc.add(term);
        let mag = term.norm();
        max_term = max_term.max(mag);
        weighted_abs += (4.0 + (n as f64).sqrt()) * mag;
        prev = last;
        last = mag;
        n += 1;
        if mag <= eps * acc.value().norm() {
            streak += 1;
            if streak >= 3 {
                break;
            }
        } else {
            streak = 0;
        }
        if !log_mode {
            zpow *= z;
        }
    }
    if streak < 3 {
        return Err(Error::Convergence(format!(
            "series for z = {z} not converged within {budget} terms"
        )));
    }
    let value = acc.value();
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Convergence(format!(
            "series value for z = {z} overflows double precision"
        )));
    }
    let ratio = if prev > 0.0 { (last / prev).min(0.99) } else { 0.0 };
    Ok(FastPass {
        value,
        terms: n,
        tail: last * ratio / (1.0 - ratio),
        rounding: f64::EPSILON * weighted_abs,
        max_term,
    })
}

/// Sums `Σ z^n c_n` for the given coefficient family.
pub(crate) fn sum_series(kind: SeriesKind, z: Complex64, cfg: &SeriesConfig) -> Result<MlSeriesResult> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    let z_abs = z.norm();
    if z_abs > cfg.argument_cap {
        return Err(Error::Convergence(format!(
            "|z| = {z_abs} exceeds the series argument cap {}",
            cfg.argument_cap
        )));
    }
    let budget = term_budget(kind.alpha, z_abs, cfg)?;
    let lost_bits = match fast_pass(kind, z, budget, cfg.eps) {
        Ok(fp) => {
            let scale = fp.value.norm();
            if fp.rounding <= cfg.target_rel_error * scale || fp.rounding == 0.0 {
                return Ok(MlSeriesResult {
                    value: fp.value,
                    terms_used: fp.terms,
                    tail_bound: fp.tail,
                    precision_bits: 53,
                });
            }
            let floor = fp.max_term * 1e-300;
            (fp.max_term / scale.max(floor)).log2().max(0.0).ceil() as u32
        }
        // terms too large for doubles: size the precision from the peak term e^R
        Err(Error::Convergence(_)) if z_abs.powf(1.0 / kind.alpha) < 1e4 => {
            (z_abs.powf(1.0 / kind.alpha) * std::f64::consts::LOG2_E).ceil() as u32 + 64
        }
        Err(e) => return Err(e),
    };
    precise::sum_series(kind, z, budget, lost_bits, cfg.max_precision_bits)
}

fn check_params(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// Upper bound on `1/Γ(x)` for `x > 0`.
const RGAMMA_MAX: f64 = 1.13;

/// `E_{α,β}(z) = α⁻¹ z^((1-β)/α) exp(z^(1/α)) − Σ_{j≥1} z^-j / Γ(β-αj)` for
/// `0 < α ≤ 1`, the exponential present only for `|arg z| ≤ απ`. The sum
/// diverges; its terms are bounded by `Γ(αj+1-β)/R^(αj)`, smallest near
/// `αj = R`, so it is cut once that bound drops below `ε·|value|` or, at
/// the latest, at its minimum.
fn expansion(alpha: f64, beta: f64, z: Complex64, eps: f64) -> Result<MlSeriesResult> {
    let r = z.norm().powf(1.0 / alpha);
    let mut acc = ComplexSum::new();
    if z.arg().abs() <= alpha * std::f64::consts::PI {
        let ln_w = Complex64::new(z.norm().ln(), z.arg()) / alpha;
        let e = (ln_w.exp() + (1.0 - beta) * ln_w).exp() / alpha;
        if !(e.re.is_finite() && e.im.is_finite()) {
            return Err(Error::Convergence(format!(
                "E({alpha}, {beta}) at z = {z} overflows double precision"
            )));
        }
        acc.add(e);
    }
    let zinv = z.inv();
    let ln_zabs = z.norm().ln();
    let mut zpow = zinv;
    let mut streak = 0;
    let mut j = 1usize;
    let bound = loop {
        let m = alpha * j as f64;
        let term = -zpow * rgamma(beta - m);
        if !(term.re.is_finite() && term.im.is_finite()) {
            return Err(Error::Convergence(format!("expansion terms for z = {z} overflow")));
        }
        acc.add(term);
        let x = m + 1.0 - beta;
        let env = if x > 2.0 { ln_gamma(x) } else { RGAMMA_MAX.ln() };
        let bound = (env - j as f64 * ln_zabs).exp();
        if bound <= eps * acc.value().norm() {
            streak += 1;
            if streak >= 3 {
                break bound;
            }
        } else {
            streak = 0;
        }
        if m > r {
            break bound;
        }
        zpow *= zinv;
        j += 1;
    };
    let value = acc.value();
    if !(bound < value.norm()) {
        return Err(Error::Convergence(format!(
            "expansion for z = {z} cannot resolve a value of size {:e}",
            value.norm()
        )));
    }
    Ok(MlSeriesResult {
        value,
        terms_used: j,
        tail_bound: bound,
        precision_bits: 53,
    })
}

/// `E_{α,β}(z)` with diagnostics.
pub fn ml_series(alpha: f64, beta: f64, z: Complex64, cfg: &SeriesConfig) -> Result<MlSeriesResult> {
    check_params(alpha, beta)?;
    let z_abs = z.norm();
    if alpha <= 1.0 && z_abs <= cfg.argument_cap && z_abs.powf(1.0 / alpha) >= cfg.expansion_radius {
        return expansion(alpha, beta, z, cfg.eps);
    }
    sum_series(SeriesKind::two_param(alpha, beta), z, cfg)
}

/// Two-parameter Mittag-Leffler function `E_{α,β}(z) = Σ z^k / Γ(αk+β)`.
pub fn ml(alpha: f64, beta: f64, z: Complex64) -> Result<Complex64> {
    ml_series(alpha, beta, z, &SeriesConfig::default()).map(|r| r.value)
}

/// One-parameter `E_α(x)` for real `x`.
pub fn ml_real(alpha: f64, x: f64) -> Result<f64> {
    ml(alpha, 1.0, Complex64::new(x, 0.0)).map(|v| v.re)
}

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "time must be positive and finite, got {t}"
        )));
    }
    Ok(())
}

/// `d^k/dt^k E_α(λ t^α)` for `k ∈ {0, 1, 2}` and `t > 0`.
///
/// Computed term-wise as `Σ_{n≥1} λⁿ t^{αn-k} / Γ(αn-k+1)`; terms whose gamma
/// argument is a non-positive integer vanish.
pub fn ml_time_deriv(k: u32, alpha: FracOrder, lambda: Complex64, t: f64) -> Result<Complex64> {
    if k > 2 {
        return Err(Error::InvalidInput(format!(
            "time derivative order {k} is not supported (0, 1 or 2)"
        )));
    }
    check_time(t)?;
    let a = alpha.value();
    let z = lambda * t.powf(a);
    let s = sum_series(SeriesKind::time_derivative(a, k), z, &SeriesConfig::default())?;
    Ok(s.value * t.powi(-(k as i32)))
}

/// `∂/∂λ E_α(λ t^α) = (t^α/α) · E_{α,α}(λ t^α)`.
pub fn ml_lambda_deriv(alpha: FracOrder, lambda: Complex64, t: f64) -> Result<Complex64> {
    coupling_time_deriv(0, alpha, lambda, t)
}

/// `d^k/dt^k [(t^α/α) · E_{α,α}(λ t^α)]` for `k ∈ {0, 1, 2}`, the entries
/// coupling the two components of a Jordan-block solution.
pub fn coupling_time_deriv(k: u32, alpha: FracOrder, lambda: Complex64, t: f64) -> Result<Complex64> {
    if k > 2 {
        return Err(Error::InvalidInput(format!(
            "time derivative order {k} is not supported (0, 1 or 2)"
        )));
    }
    check_time(t)?;
    let a = alpha.value();
    let ta = t.powf(a);
    let s = sum_series(SeriesKind::coupling_derivative(a, k), lambda * ta, &SeriesConfig::default())?;
    Ok(s.value * ta * t.powi(-(k as i32)) / a)
}

/// `(c_α, s_α)`: the real and imaginary parts of `d/dt E_α((a+ib) t^α)`.
pub fn cos_sin_components(alpha: FracOrder, a: f64, b: f64, t: f64) -> Result<(f64, f64)> {
    let d = ml_time_deriv(1, alpha, Complex64::new(a, b), t)?;
    Ok((d.re, d.im))
}
