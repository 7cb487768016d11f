//! Extended-precision summation of the Mittag-Leffler type power series.
//!
//! Used when the double-precision pass reports that cancellation between
//! large terms has destroyed the significant digits of the sum (negative or
//! complex arguments with `|z|^(1/α)` beyond a few tens). The series and its
//! stopping rule are the same as in the fast path; only the arithmetic is
//! MPFR with a working precision sized from the observed cancellation.
//!
//! Coefficients `c_n` depend only on the series kind, not on `z`, so they
//! are cached per kind and reused across every evaluation of a trajectory
//! or parameter scan.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rug::Float;

use crate::error::{Error, Result};
use crate::mittag_leffler::{MlSeriesResult, SeriesKind};

/// Bits kept in reserve beyond the precision lost to cancellation.
const GUARD_BITS: u32 = 64;
/// Maximum number of cached coefficient tables before the cache is reset.
const CACHE_LIMIT: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    alpha: u64,
    shift: u64,
    gamma_offset: u64,
    order: u32,
}

impl From<SeriesKind> for CacheKey {
    fn from(k: SeriesKind) -> Self {
        CacheKey {
            alpha: k.alpha.to_bits(),
            shift: k.shift.to_bits(),
            gamma_offset: k.gamma_offset.to_bits(),
            order: k.order,
        }
    }
}

struct CoeffTable {
    prec: u32,
    coeffs: Vec<Float>,
}

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<CoeffTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<CoeffTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn coefficient(kind: SeriesKind, n: usize, prec: u32) -> Float {
    // x = αn + shift, exact at this precision since α and shift are binary doubles
    let mut x = Float::with_val(prec, kind.alpha);
    x *= n as u32;
    x += kind.shift;
    let mut gamma_arg = Float::with_val(prec, kind.alpha);
    gamma_arg *= n as u32;
    gamma_arg += kind.gamma_offset;
    if kind.canonical {
        gamma_arg -= kind.order;
    }
    if gamma_arg <= 0 && gamma_arg.is_integer() {
        return Float::with_val(prec, 0);
    }
    gamma_arg.gamma_mut();
    let mut c = gamma_arg.recip();
    if !kind.canonical {
        for j in 0..kind.order {
            let mut f = x.clone();
            f -= j;
            c *= f;
        }
    }
    c
}

fn table(kind: SeriesKind, len: usize, prec: u32) -> Arc<CoeffTable> {
    let key = CacheKey::from(kind);
    if let Some(t) = cache().lock().unwrap().get(&key) {
        if t.prec >= prec && t.coeffs.len() >= len {
            return Arc::clone(t);
        }
    }
    let prec = prec.max(
        cache()
            .lock()
            .unwrap()
            .get(&key)
            .map_or(0, |t| t.prec),
    );
    let coeffs: Vec<Float> = (0..len).map(|n| coefficient(kind, n, prec)).collect();
    let t = Arc::new(CoeffTable { prec, coeffs });
    let mut guard = cache().lock().unwrap();
    if guard.len() >= CACHE_LIMIT {
        guard.clear();
    }
    guard.insert(key, Arc::clone(&t));
    t
}

struct Attempt {
    value: Complex64,
    terms: usize,
    tail: f64,
    /// Relative rounding error estimate of the returned value.
    rounding: f64,
}

fn attempt(kind: SeriesKind, z: Complex64, budget: usize, prec: u32) -> Result<Attempt> {
    let zr = Float::with_val(prec, z.re);
    let zi = Float::with_val(prec, z.im);
    let mut pr = Float::with_val(prec, 1);
    let mut pi = Float::with_val(prec, 0);
    let mut sr = Float::with_val(prec, 0);
    let mut si = Float::with_val(prec, 0);
    let mut max_term = Float::with_val(64, 0);
    let mut last = Float::with_val(64, 0);
    let mut prev = Float::with_val(64, 0);
    // relative stopping threshold, well below double precision
    let eps = Float::with_val(64, Float::i_exp(1, -80));

    let mut coeffs = table(kind, 256.min(budget), prec);
    let mut streak = 0;
    let mut n = 0;
    while n < budget {
        if n >= coeffs.coeffs.len() {
            // a cached table may be longer than requested; grow from its actual length
            coeffs = table(kind, (2 * coeffs.coeffs.len()).clamp(n + 1, budget), prec);
        }
        let c = &coeffs.coeffs[n];
        let tr = Float::with_val(prec, &pr * c);
        let ti = Float::with_val(prec, &pi * c);
        sr += &tr;
        si += &ti;
        let mag = Float::with_val(64, tr.abs_ref()) + Float::with_val(64, ti.abs_ref());
        if mag > max_term {
            max_term.clone_from(&mag);
        }
        let smag = Float::with_val(64, sr.abs_ref()) + Float::with_val(64, si.abs_ref());
        prev = std::mem::replace(&mut last, mag);
        n += 1;
        if last <= Float::with_val(64, &eps * &smag) {
            streak += 1;
            if streak >= 3 {
                break;
            }
        } else {
            streak = 0;
        }
        // (pr + i pi) *= (zr + i zi)
        let nr = Float::with_val(prec, &pr * &zr) - Float::with_val(prec, &pi * &zi);
        let ni = Float::with_val(prec, &pr * &zi) + Float::with_val(prec, &pi * &zr);
        pr = nr;
        pi = ni;
    }
    if streak < 3 {
        return Err(Error::Convergence(format!(
            "series for z = {z} not converged within {budget} terms"
        )));
    }
    let value = Complex64::new(sr.to_f64(), si.to_f64());
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Convergence(format!(
            "series value for z = {z} overflows double precision"
        )));
    }
    let smag = Float::with_val(64, sr.abs_ref()) + Float::with_val(64, si.abs_ref());
    let rounding = if smag.is_zero() {
        if max_term.is_zero() {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        let ulp = Float::with_val(64, Float::i_exp(1, 4 - prec as i32));
        let r = Float::with_val(64, &max_term * &ulp) * (n as u32 + 16) / smag;
        r.to_f64()
    };
    let ratio = if prev.is_zero() {
        0.0
    } else {
        Float::with_val(64, &last / &prev).to_f64().min(0.99)
    };
    let tail = last.to_f64() * ratio / (1.0 - ratio);
    Ok(Attempt {
        value,
        terms: n,
        tail,
        rounding,
    })
}

/// Sums the series with MPFR arithmetic, doubling the precision until the
/// cancellation estimate certifies a double-precision result.
pub(crate) fn sum_series(
    kind: SeriesKind,
    z: Complex64,
    budget: usize,
    lost_bits: u32,
    max_bits: u32,
) -> Result<MlSeriesResult> {
    let mut prec = (53 + lost_bits + GUARD_BITS).next_multiple_of(64);
    loop {
        if prec > max_bits {
            return Err(Error::Convergence(format!(
                "series for z = {z} needs more than {max_bits} bits of working precision"
            )));
        }
        let a = attempt(kind, z, budget, prec)?;
        if a.rounding <= 1e-18 {
            return Ok(MlSeriesResult {
                value: a.value,
                terms_used: a.terms,
                tail_bound: a.tail,
                precision_bits: prec,
            });
        }
        prec *= 2;
    }
}
