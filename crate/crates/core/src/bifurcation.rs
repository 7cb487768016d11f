//! Rotation angle `θ = arccos(Re E / |E|)`, `E = E_α((a+ib) t₁^α)`, of the
//! restart transformation as a function of the order `α` and the rotation
//! rate `b`: profiles with refined local maxima, surfaces, and a line fit
//! through the per-`α` maximizers `b*(α)`.

use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::mittag_leffler::ml;
use crate::trajectory::fmt_f64;

/// Nodes with `|E|` below this are masked: the angle is numerical noise there.
pub const MASK_MODULUS: f64 = 1e-8;
/// Below this `|E|` the angle is undefined.
const DEGENERATE_MODULUS: f64 = 1e-30;
pub const DEFAULT_PROFILE_POINTS: usize = 400;
pub const DEFAULT_SURFACE_POINTS: usize = 200;
/// Width of the final golden-section bracket.
const GOLDEN_TOL: f64 = 1e-8;
/// Grid maxima this far below the top are not refined.
const CANDIDATE_MARGIN: f64 = 0.1;
/// Refined maxima closer than this are equal (θ = π is often attained
/// at several `b`); the smallest such `b` is reported.
const TIE_TOL: f64 = 1e-9;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// `E_α((a+ib) t₁^α)`.
pub fn rotation_block(alpha: f64, a: f64, b: f64, t1: f64) -> Result<Complex64> {
    check_alpha(alpha)?;
    if !(t1 > 0.0 && t1.is_finite()) {
        return Err(Error::Domain(format!("t1 must be positive, got {t1}")));
    }
    ml(alpha, 1.0, Complex64::new(a, b) * t1.powf(alpha))
}

/// Unsigned rotation angle in `[0, π]`.
pub fn rotation_angle(alpha: f64, a: f64, b: f64, t1: f64) -> Result<f64> {
    angle_of(rotation_block(alpha, a, b, t1)?)
}

fn angle_of(e: Complex64) -> Result<f64> {
    let r = e.norm();
    if !(r >= DEGENERATE_MODULUS) {
        return Err(Error::Singular(format!("|E| = {r:e}: rotation angle undefined")));
    }
    Ok((e.re / r).clamp(-1.0, 1.0).acos())
}

/// Angle at a scan node, `None` where masked (tiny `|E|` or failed evaluation).
fn masked_angle(alpha: f64, a: f64, b: f64, t1: f64) -> Option<f64> {
    let e = rotation_block(alpha, a, b, t1).ok()?;
    if !(e.norm() >= MASK_MODULUS) {
        return None;
    }
    angle_of(e).ok()
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> Result<f64>>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let h = (hi - lo) / (n - 1) as f64;
    let mut v: Vec<f64> = (0..n).map(|i| lo + h * i as f64).collect();
    v[n - 1] = hi;
    v
}

/// Indices of strict interior local maxima among unmasked neighbours.
fn interior_maxima(values: &[Option<f64>]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| match (values[i - 1], values[i], values[i + 1]) {
            (Some(l), Some(c), Some(r)) => c > l && c >= r,
            _ => false,
        })
        .collect()
}

/// Indices `i` where `|θᵢ₊₁ − θᵢ| > π/2` or where either node is masked.
fn discontinuities(values: &[Option<f64>]) -> Vec<usize> {
    values
        .windows(2)
        .enumerate()
        .filter(|(_, w)| match (w[0], w[1]) {
            (Some(x), Some(y)) => (x - y).abs() > std::f64::consts::FRAC_PI_2,
            _ => true,
        })
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaProfile {
    pub alphas: Vec<f64>,
    /// `None` at masked nodes.
    pub thetas: Vec<Option<f64>>,
    /// Refined interior local maxima `(α*, θ*)`.
    pub maxima: Vec<(f64, f64)>,
    /// Grid intervals with a jump above π/2 or a masked end.
    pub flagged: Vec<usize>,
}

impl ThetaProfile {
    /// CSV `alpha,theta`; masked nodes are written as `NaN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "alpha,theta")?;
        for (a, t) in self.alphas.iter().zip(&self.thetas) {
            writeln!(w, "{},{}", fmt_f64(*a), fmt_f64(t.unwrap_or(f64::NAN)))?;
        }
        Ok(())
    }
}

/// Scans `θ(α)` on a uniform grid over `alpha_range` and refines each interior local maximum.
pub fn theta_profile(alpha_range: (f64, f64), n_points: usize, a: f64, b: f64, t1: f64) -> Result<ThetaProfile> {
    let (lo, hi) = alpha_range;
    check_alpha(lo)?;
    check_alpha(hi)?;
    if !(hi > lo) {
        return Err(Error::InvalidInput(format!("empty alpha range [{lo}, {hi}]")));
    }
    if n_points < 16 {
        return Err(Error::InvalidInput(format!("a profile needs at least 16 points, got {n_points}")));
    }
    let alphas = linspace(lo, hi, n_points);
    let thetas: Vec<Option<f64>> = alphas.par_iter().map(|&al| masked_angle(al, a, b, t1)).collect();
    let maxima = interior_maxima(&thetas)
        .into_iter()
        .map(|i| {
            let f = |al: f64| rotation_angle(al, a, b, t1);
            golden_max(f, alphas[i - 1], alphas[i + 1], GOLDEN_TOL)
        })
        .collect::<Result<Vec<_>>>()?;
    let flagged = discontinuities(&thetas);
    Ok(ThetaProfile {
        alphas,
        thetas,
        maxima,
        flagged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaSurface {
    pub alphas: Vec<f64>,
    pub bs: Vec<f64>,
    /// Row-major in `α`: entry `i * bs.len() + j` is `θ(alphas[i], bs[j])`.
    pub thetas: Vec<Option<f64>>,
}

impl ThetaSurface {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.thetas[i * self.bs.len() + j]
    }

    /// CSV `alpha,b,theta`, `α` varying slowest; masked nodes are `NaN`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "alpha,b,theta")?;
        for (i, a) in self.alphas.iter().enumerate() {
            for (j, b) in self.bs.iter().enumerate() {
                let t = self.get(i, j).unwrap_or(f64::NAN);
                writeln!(w, "{},{},{}", fmt_f64(*a), fmt_f64(*b), fmt_f64(t))?;
            }
        }
        Ok(())
    }
}

/// `θ` on the tensor grid `alpha_grid × b_grid`.
pub fn theta_surface(alpha_grid: &[f64], b_grid: &[f64], a: f64, t1: f64) -> Result<ThetaSurface> {
    if alpha_grid.is_empty() || b_grid.is_empty() {
        return Err(Error::InvalidInput("surface grids must be non-empty".into()));
    }
    for &al in alpha_grid {
        check_alpha(al)?;
    }
    let nb = b_grid.len();
    let thetas = (0..alpha_grid.len() * nb)
        .into_par_iter()
        .map(|k| masked_angle(alpha_grid[k / nb], a, b_grid[k % nb], t1))
        .collect();
    Ok(ThetaSurface {
        alphas: alpha_grid.to_vec(),
        bs: b_grid.to_vec(),
        thetas,
    })
}

/// Uniform grid of `n` points over `range`, as used for surfaces and fits.
pub fn uniform_grid(range: (f64, f64), n: usize) -> Vec<f64> {
    linspace(range.0, range.1, n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgmaxPoint {
    pub alpha: f64,
    pub b: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArgmaxCurveFit {
    pub points: Vec<ArgmaxPoint>,
    /// Orders whose maximum sat on the `b` search boundary or had no unmasked node.
    pub excluded: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
}

/// Ordinary least-squares line `y ≈ intercept + slope·x`, with the RMS residual.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InvalidInput(format!("a line fit needs at least 2 points, got {n}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("line fit abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok((slope, intercept, rms))
}

/// For every `α`, locates the `b` maximizing `θ` (grid scan over `n_b`
/// points of `b_range`, golden-section refinement of every near-top local
/// maximum, smallest `b` among equal maxima) and fits a line
/// `b* ≈ intercept + slope·α` through the interior maximizers.
pub fn argmax_line_fit(alpha_grid: &[f64], b_range: (f64, f64), n_b: usize, a: f64, t1: f64) -> Result<ArgmaxCurveFit> {
    if n_b < 3 {
        return Err(Error::InvalidInput(format!("the b scan needs at least 3 points, got {n_b}")));
    }
    let bs = linspace(b_range.0, b_range.1, n_b);
    let surface = theta_surface(alpha_grid, &bs, a, t1)?;
    let mut points = Vec::new();
    let mut excluded = Vec::new();
    for (i, &al) in alpha_grid.iter().enumerate() {
        let row: Vec<Option<f64>> = (0..n_b).map(|j| surface.get(i, j)).collect();
        let Some(top) = row.iter().flatten().copied().reduce(f64::max) else {
            excluded.push(al);
            continue;
        };
        let mut best: Option<(f64, f64)> = None;
        for j in interior_maxima(&row) {
            if row[j].is_some_and(|t| t < top - CANDIDATE_MARGIN) {
                continue;
            }
            let (b, theta) = golden_max(|b| rotation_angle(al, a, b, t1), bs[j - 1], bs[j + 1], GOLDEN_TOL)?;
            // candidates arrive in increasing b, so ties keep the smallest b
            if best.is_none_or(|(_, bt)| theta > bt + TIE_TOL) {
                best = Some((b, theta));
            }
        }
        let edge = [row[0], row[n_b - 1]].into_iter().flatten().fold(f64::NEG_INFINITY, f64::max);
        match best {
            Some((b, theta)) if edge <= theta + TIE_TOL => points.push(ArgmaxPoint { alpha: al, b, theta }),
            _ => excluded.push(al),
        }
    }
    if points.is_empty() {
        return Err(Error::InvalidInput(
            "no interior maximum of theta over b for any alpha".into(),
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.alpha).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.b).collect();
    let (slope, intercept, rms) = least_squares_line(&xs, &ys)?;
    Ok(ArgmaxCurveFit {
        points,
        excluded,
        slope,
        intercept,
        rms,
    })
}
