//! Self-intersections (nodes) of sampled planar curves and loop metrics.
//!
//! Candidates come from a brute-force scan of all non-adjacent polyline
//! segment pairs; each candidate is then refined on the exact curve by
//! bisecting both parameter intervals, so the reported times do not depend
//! on the sampling density.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Crossing parameters must lie in `(ε, 1 − ε)` on both segments.
pub const TRANSVERSAL_EPS: f64 = 1e-12;
/// Target width of the refined parameter brackets.
const REFINE_WIDTH: f64 = 1e-11;
/// Crossing angles with `|sin| ≤` this count as tangential contacts.
pub const TANGENT_SINE: f64 = 1e-6;
/// Largest admissible `‖X(s) − X(u)‖` after refinement.
pub const REFINE_RESIDUAL: f64 = 1e-8;
/// Minimum number of trapezoid sub-intervals for loop arc length.
pub const LOOP_SAMPLES: usize = 1000;

/// A curve that can be evaluated exactly at any parameter.
pub trait PlanarCurve: Sync {
    fn point(&self, t: f64) -> Result<[f64; 2]>;
    fn velocity(&self, t: f64) -> Result<[f64; 2]>;
}

impl PlanarCurve for Trajectory {
    fn point(&self, t: f64) -> Result<[f64; 2]> {
        let x = self.state_at(t)?;
        planar(&x)
    }

    fn velocity(&self, t: f64) -> Result<[f64; 2]> {
        let v = self.derivative_at(1, t)?;
        planar(&v)
    }
}

/// Solution of the non-autonomous flow `ẋ = 6t`, `ẏ = 3t² − 3` with
/// `X(0) = x0`: `x = 3t² + x0₁`, `y = t³ − 3t + x0₂`. It crosses itself at
/// `t = ±√3`, so a node needs negative times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicFlow {
    pub x0: [f64; 2],
}

impl CubicFlow {
    /// The flow started from `X(t₁)`; it sees the same field, so only `x0` moves.
    pub fn restarted(&self, t1: f64) -> Self {
        let p = self.eval(t1);
        CubicFlow { x0: p }
    }

    fn eval(&self, t: f64) -> [f64; 2] {
        [3.0 * t * t + self.x0[0], t * t * t - 3.0 * t + self.x0[1]]
    }
}

impl PlanarCurve for CubicFlow {
    fn point(&self, t: f64) -> Result<[f64; 2]> {
        Ok(self.eval(t))
    }

    fn velocity(&self, t: f64) -> Result<[f64; 2]> {
        Ok([6.0 * t, 3.0 * t * t - 3.0])
    }
}

fn planar(x: &nalgebra::DVector<f64>) -> Result<[f64; 2]> {
    if x.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "self-intersections need a planar curve, got dimension {}",
            x.len()
        )));
    }
    Ok([x[0], x[1]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfIntersection {
    pub t_early: f64,
    pub t_late: f64,
    pub point: [f64; 2],
    /// Indices of the polyline segments that seeded the crossing.
    pub segments: (usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LoopMetrics {
    pub duration: f64,
    pub arc_length: f64,
    pub mean_speed: f64,
}

/// Result of a scan, including zero-length segments that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossingScan {
    pub crossings: Vec<SelfIntersection>,
    pub degenerate_segments: Vec<usize>,
    /// Polyline crossings with no nearby crossing of the exact curve
    /// (chords cutting across a tightly wound arc).
    pub unconfirmed: Vec<(usize, usize)>,
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

/// Parameters `(σ, τ)` of the intersection of lines `p0 + σ(p1 − p0)` and
/// `q0 + τ(q1 − q0)`, or `None` for (near-)parallel segments.
fn line_params(p0: [f64; 2], p1: [f64; 2], q0: [f64; 2], q1: [f64; 2]) -> Option<(f64, f64)> {
    let r = sub(p1, p0);
    let s = sub(q1, q0);
    let denom = cross(r, s);
    let scale = r[0].hypot(r[1]) * s[0].hypot(s[1]);
    if denom.abs() <= 1e-14 * scale || scale == 0.0 {
        return None;
    }
    let w = sub(q0, p0);
    Some((cross(w, s) / denom, cross(w, r) / denom))
}

fn inside(x: f64) -> bool {
    x > TRANSVERSAL_EPS && x < 1.0 - TRANSVERSAL_EPS
}

/// All transversal crossings `(i, j, σ, τ)` of non-adjacent segments `i < j`.
pub fn polyline_crossings(points: &[[f64; 2]]) -> (Vec<(usize, usize, f64, f64)>, Vec<usize>) {
    let nseg = points.len().saturating_sub(1);
    let degenerate: Vec<usize> = (0..nseg).filter(|&i| points[i] == points[i + 1]).collect();
    let boxes: Vec<[f64; 4]> = (0..nseg)
        .map(|i| {
            let (a, b) = (points[i], points[i + 1]);
            [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])]
        })
        .collect();
    let found = (0..nseg)
        .into_par_iter()
        .flat_map_iter(|i| {
            let bi = boxes[i];
            let boxes = &boxes;
            (i + 2..nseg).filter_map(move |j| {
                let bj = boxes[j];
                if bi[1] < bj[0] || bj[1] < bi[0] || bi[3] < bj[2] || bj[3] < bi[2] {
                    return None;
                }
                let (s, u) = line_params(points[i], points[i + 1], points[j], points[j + 1])?;
                (inside(s) && inside(u)).then_some((i, j, s, u))
            })
        })
        .collect();
    (found, degenerate)
}

struct Bracket {
    s: [f64; 2],
    u: [f64; 2],
    xs: [[f64; 2]; 2],
    xu: [[f64; 2]; 2],
}

/// Shrinks both brackets by halving, keeping the sub-segment pair whose
/// chords cross closest to their midpoints.
fn bisect<C: PlanarCurve + ?Sized>(curve: &C, mut b: Bracket) -> Result<(f64, f64)> {
    let mut est = None;
    for _ in 0..200 {
        let (sm, um) = (0.5 * (b.s[0] + b.s[1]), 0.5 * (b.u[0] + b.u[1]));
        let (xsm, xum) = (curve.point(sm)?, curve.point(um)?);
        let s_parts = [([b.s[0], sm], [b.xs[0], xsm]), ([sm, b.s[1]], [xsm, b.xs[1]])];
        let u_parts = [([b.u[0], um], [b.xu[0], xum]), ([um, b.u[1]], [xum, b.xu[1]])];
        let mut best: Option<(f64, Bracket, f64, f64)> = None;
        for (si, sx) in &s_parts {
            for (ui, ux) in &u_parts {
                if let Some((p, q)) = line_params(sx[0], sx[1], ux[0], ux[1]) {
                    let off = (p - 0.5).abs().max((q - 0.5).abs());
                    if off <= 0.75 && best.as_ref().map_or(true, |x| off < x.0) {
                        let cand = Bracket {
                            s: *si,
                            u: *ui,
                            xs: *sx,
                            xu: *ux,
                        };
                        best = Some((off, cand, p, q));
                    }
                }
            }
        }
        let Some((_, nb, p, q)) = best else { break };
        b = nb;
        est = Some((
            b.s[0] + p.clamp(0.0, 1.0) * (b.s[1] - b.s[0]),
            b.u[0] + q.clamp(0.0, 1.0) * (b.u[1] - b.u[0]),
        ));
        if b.s[1] - b.s[0] <= REFINE_WIDTH * b.s[1].abs().max(1.0)
            && b.u[1] - b.u[0] <= REFINE_WIDTH * b.u[1].abs().max(1.0)
        {
            break;
        }
    }
    est.ok_or_else(|| Error::Convergence("crossing refinement lost its bracket".into()))
}

/// Newton steps on `X(s) − X(u) = 0`.
fn polish<C: PlanarCurve + ?Sized>(curve: &C, (mut s, mut u): (f64, f64)) -> Result<(f64, f64)> {
    for _ in 0..4 {
        let f = sub(curve.point(s)?, curve.point(u)?);
        if f[0].hypot(f[1]) == 0.0 {
            break;
        }
        let (vs, vu) = (curve.velocity(s)?, curve.velocity(u)?);
        // [vs, -vu] (ds, du)ᵀ = -f
        let det = cross(vs, [-vu[0], -vu[1]]);
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let ds = cross([-f[0], -f[1]], [-vu[0], -vu[1]]) / det;
        let du = cross(vs, [-f[0], -f[1]]) / det;
        if !(ds.is_finite() && du.is_finite()) {
            break;
        }
        s += ds;
        u += du;
    }
    Ok((s, u))
}

/// Refines the crossing seeded by segments `i < j`; `None` when the exact
/// curve has no crossing near them.
fn refine<C: PlanarCurve + ?Sized>(curve: &C, times: &[f64], points: &[[f64; 2]], i: usize, j: usize) -> Option<SelfIntersection> {
    let b = Bracket {
        s: [times[i], times[i + 1]],
        u: [times[j], times[j + 1]],
        xs: [points[i], points[i + 1]],
        xu: [points[j], points[j + 1]],
    };
    let (s, u) = polish(curve, bisect(curve, b).ok()?).ok()?;
    // the refined times must stay next to their seeding segments
    let near = |t: f64, k: usize| {
        let lo = times[k.saturating_sub(1)];
        let hi = times[(k + 2).min(times.len() - 1)];
        t >= lo && t <= hi
    };
    if !(near(s, i) && near(u, j) && s < u) {
        return None;
    }
    let (xs, xu) = (curve.point(s).ok()?, curve.point(u).ok()?);
    let d = sub(xs, xu);
    if !(d[0].hypot(d[1]) <= REFINE_RESIDUAL) {
        return None;
    }
    // parallel tangents: the curve retraces itself (closed orbit), not a node
    let (vs, vu) = (curve.velocity(s).ok()?, curve.velocity(u).ok()?);
    let sine = cross(vs, vu) / (vs[0].hypot(vs[1]) * vu[0].hypot(vu[1]));
    if !(sine.abs() > TANGENT_SINE) {
        return None;
    }
    Some(SelfIntersection {
        t_early: s,
        t_late: u,
        point: [0.5 * (xs[0] + xu[0]), 0.5 * (xs[1] + xu[1])],
        segments: (i, j),
    })
}

/// Self-intersections of the curve sampled at `times`, refined on the exact curve.
pub fn scan_curve<C: PlanarCurve + ?Sized>(curve: &C, times: &[f64], points: &[[f64; 2]]) -> Result<CrossingScan> {
    if times.len() != points.len() {
        return Err(Error::InvalidInput("times and points differ in length".into()));
    }
    if times.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "self-intersection search needs at least 4 samples, got {}",
            times.len()
        )));
    }
    let (raw, degenerate_segments) = polyline_crossings(points);
    let mut crossings = Vec::with_capacity(raw.len());
    let mut unconfirmed = Vec::new();
    for (i, j, _, _) in raw {
        match refine(curve, times, points, i, j) {
            Some(c) => crossings.push(c),
            None => unconfirmed.push((i, j)),
        }
    }
    crossings.sort_by(|a, b| a.t_early.total_cmp(&b.t_early).then(a.t_late.total_cmp(&b.t_late)));
    // a crossing near a sample can be seeded twice
    crossings.dedup_by(|b, a| (a.t_early - b.t_early).abs() < 1e-7 && (a.t_late - b.t_late).abs() < 1e-7);
    Ok(CrossingScan {
        crossings,
        degenerate_segments,
        unconfirmed,
    })
}

pub fn scan_self_intersections(traj: &Trajectory) -> Result<CrossingScan> {
    if traj.dimension() != 2 {
        return Err(Error::InvalidInput("self-intersections need a planar trajectory".into()));
    }
    let points: Vec<[f64; 2]> = traj.states().iter().map(|x| [x[0], x[1]]).collect();
    scan_curve(traj, traj.times(), &points)
}

/// Transversal self-crossings of a planar trajectory, sorted by `t_early`.
pub fn self_intersections(traj: &Trajectory) -> Result<Vec<SelfIntersection>> {
    scan_self_intersections(traj).map(|s| s.crossings)
}

/// Duration, arc length and mean speed of the loop between the two visits of a crossing.
pub fn loop_metrics_of<C: PlanarCurve + ?Sized>(curve: &C, crossing: &SelfIntersection, samples: usize) -> Result<LoopMetrics> {
    let (a, b) = (crossing.t_early, crossing.t_late);
    if !(b > a) {
        return Err(Error::InvalidInput(format!("loop [{a}, {b}] has no duration")));
    }
    let n = samples.max(LOOP_SAMPLES);
    let h = (b - a) / n as f64;
    let speeds = (0..=n)
        .into_par_iter()
        .map(|k| {
            let t = if k == n { b } else { a + h * k as f64 };
            curve.velocity(t).map(|v| v[0].hypot(v[1]))
        })
        .collect::<Result<Vec<f64>>>()?;
    let inner: f64 = speeds[1..n].iter().sum();
    let arc_length = h * (0.5 * (speeds[0] + speeds[n]) + inner);
    Ok(LoopMetrics {
        duration: b - a,
        arc_length,
        mean_speed: arc_length / (b - a),
    })
}

pub fn loop_metrics(traj: &Trajectory, crossing: &SelfIntersection) -> Result<LoopMetrics> {
    let (t0, t1) = (traj.times()[0], *traj.times().last().unwrap());
    if crossing.t_early < t0 || crossing.t_late > t1 {
        return Err(Error::InvalidInput(format!(
            "crossing ({}, {}) lies outside the trajectory's time range [{t0}, {t1}]",
            crossing.t_early, crossing.t_late
        )));
    }
    let p = traj.point(crossing.t_early)?;
    let d = sub(p, crossing.point);
    if d[0].hypot(d[1]) > 1e3 * REFINE_RESIDUAL * (1.0 + p[0].hypot(p[1])) {
        return Err(Error::InvalidInput("crossing does not belong to this trajectory".into()));
    }
    loop_metrics_of(traj, crossing, LOOP_SAMPLES)
}
