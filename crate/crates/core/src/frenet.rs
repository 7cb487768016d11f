//! Planar Frenet apparatus of solution curves and the relations between the
//! apparatus of a curve `X` and of its restart `Y = T X`.
//!
//! For the canonical planar forms the velocity and acceleration are
//! assembled from the scalar derivative series:
//!
//! * diagonal `diag(λ₁, λ₂)`: `ẋ = c₁ d₁'`, `ẏ = c₂ d₂'` with
//!   `dᵢ = E_α(λᵢ t^α)`, and `κ = c₁c₂ u₁ / ν³`, `u₁ = d₁'d₂'' − d₂'d₁''`;
//! * Jordan block: `x = c₁ E + c₂ g`, `y = c₂ E` with
//!   `g = (t^α/α) E_{α,α}(λ t^α)`, and `κ = c₂² u₂ / ν³`, `u₂ = g' E'' − g'' E'`;
//! * complex pair: `c_α + i s_α = d/dt E_α((a+ib) t^α)`,
//!   `ν = √(c₁²+c₂²) |c_α + i s_α|` and `κ = (c₁²+c₂²) u₃ / ν³`,
//!   `u₃ = s_α c_α' − c_α s_α'`.
//!
//! A restarted curve has the same form with `(c₁, c₂)` replaced by `T (c₁, c₂)`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix_ml::{matrix_ml_time_deriv, CanonicalForm, CanonicalSystem, System};
use crate::mittag_leffler::{coupling_time_deriv, ml, ml_time_deriv, FracOrder};

/// Speeds below this are treated as singular points.
pub const SINGULAR_SPEED: f64 = 1e-30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrenetFrame {
    pub t: f64,
    pub nu: f64,
    pub tangent: [f64; 2],
    /// Tangent turned by +π/2: `(−ẏ, ẋ)/ν`.
    pub normal: [f64; 2],
    /// `(ẋÿ − ẏẍ)/ν³`.
    pub kappa_signed: f64,
    pub kappa: f64,
}

impl FrenetFrame {
    /// Frame from a velocity and the curvature numerator `ẋÿ − ẏẍ`.
    fn build(t: f64, vel: [f64; 2], cross: f64) -> Result<Self> {
        let nu = vel[0].hypot(vel[1]);
        if !(nu >= SINGULAR_SPEED) {
            return Err(Error::Singular(format!("speed {nu:e} at t = {t}: not a regular point")));
        }
        let tangent = [vel[0] / nu, vel[1] / nu];
        let kappa_signed = cross / (nu * nu * nu);
        Ok(FrenetFrame {
            t,
            nu,
            tangent,
            normal: [-tangent[1], tangent[0]],
            kappa_signed,
            kappa: kappa_signed.abs(),
        })
    }

    /// Frame from velocity and acceleration vectors.
    pub fn from_derivatives(t: f64, vel: [f64; 2], acc: [f64; 2]) -> Result<Self> {
        Self::build(t, vel, vel[0] * acc[1] - vel[1] * acc[0])
    }
}

fn planar_form(system: &CanonicalSystem) -> Result<()> {
    if system.dimension() != 2 {
        return Err(Error::InvalidInput(
            "the Frenet apparatus is only defined here for planar systems".into(),
        ));
    }
    Ok(())
}

/// Initial state of the curve actually evaluated: `x0`, or `T x0` for a restart.
fn effective_state(system: &CanonicalSystem, alpha: FracOrder, x0: [f64; 2], restart_t1: Option<f64>) -> Result<[f64; 2]> {
    match restart_t1 {
        None => Ok(x0),
        Some(t1) => {
            if !(t1 > 0.0 && t1.is_finite()) {
                return Err(Error::Domain(format!("restart time must be positive, got {t1}")));
            }
            let t = system.ml(alpha, t1)?;
            Ok([
                t[(0, 0)] * x0[0] + t[(0, 1)] * x0[1],
                t[(1, 0)] * x0[0] + t[(1, 1)] * x0[1],
            ])
        }
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    Ok(())
}

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Frenet frame of `X` (or of its restart from `X(t₁)`) at time `t`,
/// from the closed forms of the canonical planar cases.
pub fn frenet_at(
    system: &CanonicalSystem,
    alpha: FracOrder,
    x0: [f64; 2],
    t: f64,
    restart_t1: Option<f64>,
) -> Result<FrenetFrame> {
    planar_form(system)?;
    check_t(t)?;
    let [c1, c2] = effective_state(system, alpha, x0, restart_t1)?;
    match *system.form() {
        CanonicalForm::DistinctReal { ref lambdas } => {
            let d = |k, l: f64| ml_time_deriv(k, alpha, real(l), t).map(|v| v.re);
            let (d1, d2) = (d(1, lambdas[0])?, d(1, lambdas[1])?);
            let (dd1, dd2) = (d(2, lambdas[0])?, d(2, lambdas[1])?);
            let u1 = d1 * dd2 - d2 * dd1;
            FrenetFrame::build(t, [c1 * d1, c2 * d2], c1 * c2 * u1)
        }
        CanonicalForm::Jordan2 { lambda } => {
            let e1 = ml_time_deriv(1, alpha, real(lambda), t)?.re;
            let e2 = ml_time_deriv(2, alpha, real(lambda), t)?.re;
            let g1 = coupling_time_deriv(1, alpha, real(lambda), t)?.re;
            let g2 = coupling_time_deriv(2, alpha, real(lambda), t)?.re;
            let u2 = g1 * e2 - g2 * e1;
            FrenetFrame::build(t, [c1 * e1 + c2 * g1, c2 * e1], c2 * c2 * u2)
        }
        CanonicalForm::ComplexPair { a, b } => {
            let lam = Complex64::new(a, b);
            let d1 = ml_time_deriv(1, alpha, lam, t)?;
            let d2 = ml_time_deriv(2, alpha, lam, t)?;
            let (ca, sa) = (d1.re, d1.im);
            let u3 = sa * d2.re - ca * d2.im;
            FrenetFrame::build(
                t,
                [c1 * ca + c2 * sa, -c1 * sa + c2 * ca],
                (c1 * c1 + c2 * c2) * u3,
            )
        }
        CanonicalForm::ComplexPairPlusReal { .. } => unreachable!("rejected as non-planar"),
    }
}

/// Frenet frame of any planar system; general matrices use the velocity and
/// acceleration of `E_α(A t^α) x₀` directly.
pub fn frenet_of_system(
    system: &System,
    alpha: FracOrder,
    x0: [f64; 2],
    t: f64,
    restart_t1: Option<f64>,
) -> Result<FrenetFrame> {
    match system {
        System::Canonical(c) => frenet_at(c, alpha, x0, t, restart_t1),
        System::General(_) => {
            if system.dimension() != 2 {
                return Err(Error::InvalidInput("Frenet frames need a planar system".into()));
            }
            check_t(t)?;
            let mut c = nalgebra::DVector::from_column_slice(&x0);
            if let Some(t1) = restart_t1 {
                c = crate::trajectory::restart_matrix(system, alpha, t1)? * c;
            }
            let v = matrix_ml_time_deriv(system, 1, alpha, t)? * &c;
            let a = matrix_ml_time_deriv(system, 2, alpha, t)? * &c;
            FrenetFrame::from_derivatives(t, [v[0], v[1]], [a[0], a[1]])
        }
    }
}

/// Where a relation comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelationSource {
    /// Stated in closed form by the source derivation.
    Published,
    /// Replacement for a published relation whose printed form is inconsistent
    /// with `Y = T X`.
    Corrected,
    /// An additional identity implied by the factorization.
    Derived,
}

/// One relation `lhs = rhs` between the apparatus of `X` and `Y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Relation {
    pub name: &'static str,
    pub source: RelationSource,
    /// Name of the published relation this one replaces.
    pub supersedes: Option<&'static str>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// `‖lhs − rhs‖₂`.
    pub gap: f64,
    /// `gap / max(‖lhs‖, ‖rhs‖)`, zero when both sides vanish.
    pub relative_gap: f64,
}

impl Relation {
    fn new(name: &'static str, source: RelationSource, lhs: &[f64], rhs: &[f64]) -> Self {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = lhs.iter().zip(rhs).map(|(a, b)| a - b).collect();
        let gap = norm(&diff);
        let scale = norm(lhs).max(norm(rhs));
        Relation {
            name,
            source,
            supersedes: None,
            lhs: lhs.to_vec(),
            rhs: rhs.to_vec(),
            gap,
            relative_gap: if scale > 0.0 { gap / scale } else { 0.0 },
        }
    }

    fn replacing(mut self, published: &'static str) -> Self {
        self.supersedes = Some(published);
        self
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.relative_gap <= tol
    }
}

/// Frames of `X` and `Y` at one time together with every applicable relation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelationReport {
    pub t: f64,
    pub t1: f64,
    pub original: FrenetFrame,
    pub restarted: FrenetFrame,
    pub relations: Vec<Relation>,
}

impl RelationReport {
    /// Relations that define the contract: published ones not superseded by
    /// a correction, plus corrections and derived identities.
    pub fn effective(&self) -> impl Iterator<Item = &Relation> {
        self.relations.iter().filter(move |r| {
            r.source != RelationSource::Published
                || !self.relations.iter().any(|c| c.supersedes == Some(r.name))
        })
    }

    pub fn worst_effective_gap(&self) -> f64 {
        self.effective().map(|r| r.relative_gap).fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&Relation> {
        self.relations.iter().find(|r| r.name == name)
    }
}

fn scaled(s: f64, v: [f64; 2]) -> [f64; 2] {
    [s * v[0], s * v[1]]
}

fn add(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

/// Evaluates both sides of the cross-trajectory relations at time `t` for
/// the restart at `t₁`.
pub fn restart_frenet_relations(
    system: &CanonicalSystem,
    alpha: FracOrder,
    x0: [f64; 2],
    t1: f64,
    t: f64,
) -> Result<RelationReport> {
    use RelationSource::*;
    let f1 = frenet_at(system, alpha, x0, t, None)?;
    let f2 = frenet_at(system, alpha, x0, t, Some(t1))?;
    let [c1, c2] = x0;
    let ta1 = t1.powf(alpha.value());
    let (nu1, nu2) = (f1.nu, f2.nu);
    let mut rel = Vec::new();
    match *system.form() {
        CanonicalForm::DistinctReal { ref lambdas } => {
            let (l1, l2) = (lambdas[0], lambdas[1]);
            let e1 = ml(alpha.value(), 1.0, real(l1 * ta1))?.re;
            let e2 = ml(alpha.value(), 1.0, real(l2 * ta1))?.re;
            let d1 = ml_time_deriv(1, alpha, real(l1), t)?.re;
            let d2 = ml_time_deriv(1, alpha, real(l2), t)?.re;
            let nu2_closed = ((c1 * e1 * d1).powi(2) + (c2 * e2 * d2).powi(2)).sqrt();
            rel.push(Relation::new("nu2", Published, &[nu2], &[nu2_closed]));
            let k = (e1 * e2 * nu1.powi(3) / nu2.powi(3)).abs() * f1.kappa;
            rel.push(Relation::new("kappa2", Published, &[f2.kappa], &[k]));
            let r = nu1 / nu2;
            let t2 = [r * e1 * f1.tangent[0], r * e2 * f1.tangent[1]];
            rel.push(Relation::new("T2", Published, &f2.tangent, &t2));
            let n2 = [r * e2 * f1.normal[0], r * e1 * f1.normal[1]];
            rel.push(Relation::new("N2", Published, &f2.normal, &n2));
            if l1 == l2 {
                rel.push(Relation::new("nu2-degenerate", Published, &[nu2], &[e1 * nu1]));
                rel.push(Relation::new("T2-degenerate", Published, &f2.tangent, &f1.tangent));
                rel.push(Relation::new("N2-degenerate", Published, &f2.normal, &f1.normal));
                rel.push(Relation::new("kappa-degenerate", Published, &[f1.kappa, f2.kappa], &[0.0, 0.0]));
            }
        }
        CanonicalForm::Jordan2 { lambda } => {
            let lam = real(lambda);
            let e = ml(alpha.value(), 1.0, real(lambda * ta1))?.re;
            let eaa = ml(alpha.value(), alpha.value(), real(lambda * ta1))?.re;
            let e1 = ml_time_deriv(1, alpha, lam, t)?.re;
            // the sum Σ λⁿ(αn+α) t^{αn+α-1}/Γ(αn+α) is α g'(t)
            let s = alpha.value() * coupling_time_deriv(1, alpha, lam, t)?.re;
            let a = alpha.value();
            let inner = (c1 * c1 + c2 * c2) * e1 * e1 + c2 * c2 / (a * a) * s * s + 2.0 * c1 * c2 / a * e1 * s;
            let nu2_sq = e * e * inner
                + ta1 / a * eaa * e * e1 * (2.0 * c1 * c2 * e1 + 2.0 * c2 * c2 / a * s)
                + c2 * c2 * ta1 * ta1 / (a * a) * eaa * eaa * e1 * e1;
            rel.push(Relation::new("nu2", Published, &[nu2], &[nu2_sq.sqrt()]));
            rel.push(Relation::new("nu1", Published, &[nu1], &[inner.sqrt()]));
            let cube = nu1.powi(3) / nu2.powi(3);
            rel.push(Relation::new("kappa2", Published, &[f2.kappa], &[(cube * e).abs() * f1.kappa]));
            rel.push(
                Relation::new("kappa2-det", Corrected, &[f2.kappa], &[(cube * e * e).abs() * f1.kappa])
                    .replacing("kappa2"),
            );
            let v = [c2 / a * e1, 0.0];
            let w = [0.0, c2 / a * e1];
            let t2 = add(scaled(nu1 * e / nu2, f1.tangent), scaled(ta1 * eaa / nu2, v));
            rel.push(Relation::new("T2", Published, &f2.tangent, &t2));
            let n2 = add(scaled(nu1 * e / nu2, f1.normal), scaled(ta1 * eaa / nu2, w));
            rel.push(Relation::new("N2", Published, &f2.normal, &n2));
        }
        CanonicalForm::ComplexPair { a, b } => {
            let e = ml(alpha.value(), 1.0, Complex64::new(a, b) * ta1)?;
            let r = e.norm();
            rel.push(Relation::new("nu2", Published, &[nu2], &[r * nu1]));
            rel.push(Relation::new("kappa2", Published, &[f2.kappa], &[f1.kappa / r]));
            let q = nu1 / nu2;
            let t2 = add(scaled(e.re * q, f1.tangent), scaled(-e.im * q, f1.normal));
            rel.push(Relation::new("T2", Published, &f2.tangent, &t2));
            let n2_printed = add(scaled(e.re * q, f1.normal), scaled(e.re * q, f1.tangent));
            rel.push(Relation::new("N2", Published, &f2.normal, &n2_printed));
            let n2 = add(scaled(e.re * q, f1.normal), scaled(e.im * q, f1.tangent));
            rel.push(Relation::new("N2-rotation", Corrected, &f2.normal, &n2).replacing("N2"));
            // (T₂, N₂) is (T₁, N₁) turned by the factorization angle θ = atan2(−Im E, Re E)
            let theta = (-e.im).atan2(e.re);
            let rot = |v: [f64; 2]| {
                [
                    theta.cos() * v[0] - theta.sin() * v[1],
                    theta.sin() * v[0] + theta.cos() * v[1],
                ]
            };
            let lhs = [f2.tangent[0], f2.tangent[1], f2.normal[0], f2.normal[1]];
            let (rt, rn) = (rot(f1.tangent), rot(f1.normal));
            rel.push(Relation::new("frame-rotation", Derived, &lhs, &[rt[0], rt[1], rn[0], rn[1]]));
            rel.push(Relation::new("kappa2-signed", Derived, &[f2.kappa_signed], &[f1.kappa_signed / r]));
        }
        CanonicalForm::ComplexPairPlusReal { .. } => unreachable!("rejected as non-planar"),
    }
    Ok(RelationReport {
        t,
        t1,
        original: f1,
        restarted: f2,
        relations: rel,
    })
}
