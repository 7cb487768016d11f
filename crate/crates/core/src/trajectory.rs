//! Sampled solution curves `X(t) = E_α(A t^α) X₀`, restarted curves and the
//! restart transformation `T = E_α(A t₁^α)` with its scaling × rotation split.

use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix_ml::{
    matrix_ml, matrix_ml_time_deriv, CanonicalForm, Matrix, System, SystemSpec, Vector,
};
use crate::mittag_leffler::{ml, FracOrder};

/// Default first sample time; the speed blows up like `t^(α-1)` at zero.
pub const DEFAULT_T_MIN: f64 = 1e-3;
pub const DEFAULT_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Uniform,
    Log,
}

/// `n` sample times on `[t_min, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl TimeGrid {
    pub fn uniform(t_min: f64, t_max: f64, n: usize) -> Self {
        TimeGrid {
            t_min,
            t_max,
            n,
            spacing: Spacing::Uniform,
        }
    }

    pub fn log(t_min: f64, t_max: f64, n: usize) -> Self {
        TimeGrid {
            t_min,
            t_max,
            n,
            spacing: Spacing::Log,
        }
    }

    /// Default grid `[10⁻³, t_max]` with 2000 uniform points.
    pub fn up_to(t_max: f64) -> Self {
        Self::uniform(DEFAULT_T_MIN, t_max, DEFAULT_POINTS)
    }

    pub fn times(&self) -> Result<Vec<f64>> {
        if self.n == 0 {
            return Err(Error::InvalidInput("time grid is empty".into()));
        }
        if !(self.t_min > 0.0 && self.t_min.is_finite() && self.t_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grid bounds must be positive and finite, got [{}, {}]",
                self.t_min, self.t_max
            )));
        }
        if self.n == 1 {
            return Ok(vec![self.t_min]);
        }
        if self.t_max <= self.t_min {
            return Err(Error::InvalidInput(format!(
                "grid end {} must exceed its start {}",
                self.t_max, self.t_min
            )));
        }
        let last = (self.n - 1) as f64;
        let times: Vec<f64> = match self.spacing {
            Spacing::Uniform => {
                let h = (self.t_max - self.t_min) / last;
                (0..self.n).map(|i| self.t_min + h * i as f64).collect()
            }
            Spacing::Log => {
                let r = (self.t_max / self.t_min).ln() / last;
                (0..self.n).map(|i| self.t_min * (r * i as f64).exp()).collect()
            }
        };
        let mut times = times;
        times[self.n - 1] = self.t_max;
        check_increasing(&times)?;
        Ok(times)
    }
}

fn check_increasing(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("time grid is empty".into()));
    }
    if !(times[0] > 0.0) || times.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidInput("sample times must be positive and finite".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("sample times must be strictly increasing".into()));
    }
    Ok(())
}

/// A sampled solution curve with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    system: System,
    alpha: FracOrder,
    x0: Vector,
    times: Vec<f64>,
    states: Vec<Vector>,
}

impl Trajectory {
    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn alpha(&self) -> FracOrder {
        self.alpha
    }

    pub fn x0(&self) -> &Vector {
        &self.x0
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[Vector] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.x0.len()
    }

    /// Exact state `E_α(A t^α) X₀` at any `t ≥ 0`, on or off the grid.
    pub fn state_at(&self, t: f64) -> Result<Vector> {
        Ok(matrix_ml(&self.system, self.alpha, t)? * &self.x0)
    }

    /// Exact `k`-th time derivative of the state at `t > 0`.
    pub fn derivative_at(&self, k: u32, t: f64) -> Result<Vector> {
        Ok(matrix_ml_time_deriv(&self.system, k, self.alpha, t)? * &self.x0)
    }

    /// Same curve under a linear map of the state space.
    pub fn map(&self, t: &Matrix) -> Result<Vec<Vector>> {
        check_square(t, self.dimension())?;
        Ok(self.states.iter().map(|x| t * x).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=self.dimension()).map(|i| format!("x{i}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{}", fmt_f64(*t))?;
            for v in x.iter() {
                write!(w, ",{}", fmt_f64(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_record(&self) -> TrajectoryRecord {
        TrajectoryRecord {
            system: self.system.spec(),
            alpha: self.alpha,
            x0: self.x0.iter().copied().collect(),
            times: self.times.clone(),
            states: self.states.iter().map(|x| x.iter().copied().collect()).collect(),
        }
    }

    /// Rebuilds a trajectory from its serialized form, validating its structure.
    pub fn from_record(r: &TrajectoryRecord) -> Result<Self> {
        let system = System::from_spec(&r.system)?;
        let d = system.dimension();
        if r.x0.len() != d || r.states.iter().any(|s| s.len() != d) {
            return Err(Error::InvalidInput("state dimension does not match the system".into()));
        }
        if r.states.len() != r.times.len() {
            return Err(Error::InvalidInput("times and states differ in length".into()));
        }
        check_increasing(&r.times)?;
        Ok(Trajectory {
            system,
            alpha: r.alpha,
            x0: Vector::from_column_slice(&r.x0),
            times: r.times.clone(),
            states: r.states.iter().map(|s| Vector::from_column_slice(s)).collect(),
        })
    }
}

/// JSON form `{system, alpha, x0, times, states}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub system: SystemSpec,
    pub alpha: FracOrder,
    pub x0: Vec<f64>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

/// 17 significant digits, enough to round-trip any double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn check_square(m: &Matrix, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::InvalidInput(format!(
            "expected a {d}x{d} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// Samples `E_α(A t^α) X₀` at the given increasing positive times.
pub fn solve_at(system: &System, alpha: FracOrder, x0: &Vector, times: Vec<f64>) -> Result<Trajectory> {
    check_increasing(&times)?;
    if x0.len() != system.dimension() {
        return Err(Error::InvalidInput(format!(
            "initial state has dimension {}, system has {}",
            x0.len(),
            system.dimension()
        )));
    }
    let states = times
        .par_iter()
        .map(|&t| Ok(matrix_ml(system, alpha, t)? * x0))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        system: system.clone(),
        alpha,
        x0: x0.clone(),
        times,
        states,
    })
}

pub fn solve(system: &System, alpha: FracOrder, x0: &Vector, grid: &TimeGrid) -> Result<Trajectory> {
    solve_at(system, alpha, x0, grid.times()?)
}

/// `T = E_α(A t₁^α)`.
pub fn restart_matrix(system: &System, alpha: FracOrder, t1: f64) -> Result<Matrix> {
    if !(t1 > 0.0 && t1.is_finite()) {
        return Err(Error::Domain(format!("restart time must be positive, got {t1}")));
    }
    matrix_ml(system, alpha, t1)
}

/// The curve started again from `X(t₁)`.
pub fn restart(system: &System, alpha: FracOrder, x0: &Vector, t1: f64, grid: &TimeGrid) -> Result<Trajectory> {
    let y0 = restart_matrix(system, alpha, t1)? * x0;
    solve(system, alpha, &y0, grid)
}

/// `T = U·diag(signs)·V` in canonical coordinates, with `U ≥ 0` diagonal and
/// `V` a proper rotation. For systems given by a general matrix the split
/// lives in the eigenbasis: `T = P (U·diag(signs)·V) P⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformFactorization {
    /// `T` in the coordinates of the system matrix.
    pub t: Matrix,
    pub u: Matrix,
    pub v: Matrix,
    /// Counter-clockwise angle `atan2(V₂₁, V₁₁)` in `(-π, π]`.
    pub theta: f64,
    /// `±1` per axis; a `-1` marks a negative real scaling factor.
    pub signs: Vec<f64>,
    /// Change of basis `(P, P⁻¹)` for general systems.
    pub basis: Option<(Matrix, Matrix)>,
}

impl TransformFactorization {
    pub fn has_reflection(&self) -> bool {
        self.signs.iter().any(|&s| s < 0.0)
    }

    /// `U·diag(signs)·V`, the transformation in canonical coordinates.
    pub fn canonical_t(&self) -> Matrix {
        let s = Matrix::from_diagonal(&DVector::from_column_slice(&self.signs));
        &self.u * s * &self.v
    }

    /// Reassembles `T` from its factors.
    pub fn reconstruct(&self) -> Matrix {
        match &self.basis {
            Some((p, pinv)) => p * self.canonical_t() * pinv,
            None => self.canonical_t(),
        }
    }

    /// The unsigned angle in `[0, π]`.
    pub fn unsigned_theta(&self) -> f64 {
        self.theta.abs()
    }
}

/// Restart transformation with its scaling × rotation split.
pub fn restart_transform(system: &System, alpha: FracOrder, t1: f64) -> Result<TransformFactorization> {
    let t = restart_matrix(system, alpha, t1)?;
    let canonical = system.canonical();
    let d = canonical.dimension();
    let ta = t1.powf(alpha.value());
    let scalar = |lam: Complex64| ml(alpha.value(), 1.0, lam * ta);
    let mut u = Matrix::zeros(d, d);
    let mut v = Matrix::identity(d, d);
    let mut signs = vec![1.0; d];
    let mut theta = 0.0;
    let mut put_real = |i: usize, e: f64, u: &mut Matrix| {
        u[(i, i)] = e.abs();
        if e < 0.0 {
            signs[i] = -1.0;
        }
    };
    match canonical.form() {
        CanonicalForm::DistinctReal { lambdas } => {
            for (i, &l) in lambdas.iter().enumerate() {
                put_real(i, scalar(Complex64::new(l, 0.0))?.re, &mut u);
            }
        }
        CanonicalForm::ComplexPair { a, b } => {
            theta = rotation_part(scalar(Complex64::new(*a, *b))?, &mut u, &mut v)?;
        }
        CanonicalForm::ComplexPairPlusReal { a, b, lambda } => {
            theta = rotation_part(scalar(Complex64::new(*a, *b))?, &mut u, &mut v)?;
            put_real(2, scalar(Complex64::new(*lambda, 0.0))?.re, &mut u);
        }
        CanonicalForm::Jordan2 { .. } => {
            return Err(Error::Factorization(
                "a Jordan block restart is a shear; it has no scaling x rotation split".into(),
            ))
        }
    }
    let basis = system.basis().map(|(p, pinv)| (p.clone(), pinv.clone()));
    Ok(TransformFactorization {
        t,
        u,
        v,
        theta,
        signs,
        basis,
    })
}

/// Fills the planar block: `U = |E|·I₂`, `V = [[c, s], [-s, c]]` with
/// `c + is = E/|E|`. Returns `atan2(V₂₁, V₁₁) = atan2(-Im E, Re E)`.
fn rotation_part(e: Complex64, u: &mut Matrix, v: &mut Matrix) -> Result<f64> {
    let r = e.norm();
    if !(r > 1e-300) {
        return Err(Error::Singular(format!("rotation block E = {e} vanishes")));
    }
    let (c, s) = (e.re / r, e.im / r);
    u[(0, 0)] = r;
    u[(1, 1)] = r;
    v[(0, 0)] = c;
    v[(0, 1)] = s;
    v[(1, 0)] = -s;
    v[(1, 1)] = c;
    let theta = (-s).atan2(c);
    // keep the angle in (-π, π]
    Ok(if theta == -std::f64::consts::PI { std::f64::consts::PI } else { theta })
}

fn same_grid(x: &Trajectory, y: &Trajectory) -> Result<()> {
    if x.times != y.times {
        return Err(Error::GridMismatch(format!(
            "trajectories have different time grids ({} vs {} samples)",
            x.len(),
            y.len()
        )));
    }
    if x.dimension() != y.dimension() {
        return Err(Error::GridMismatch("trajectories differ in dimension".into()));
    }
    Ok(())
}

/// `max_i ‖Y(tᵢ) − T·X(tᵢ)‖_∞`.
pub fn verify_linear_relation(x: &Trajectory, y: &Trajectory, t: &Matrix) -> Result<f64> {
    same_grid(x, y)?;
    check_square(t, x.dimension())?;
    Ok(x
        .states
        .iter()
        .zip(&y.states)
        .map(|(xs, ys)| (ys - t * xs).amax())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CongruenceReport {
    pub congruent: bool,
    /// Largest `|d(U⁻¹Yᵢ, U⁻¹Yⱼ) − d(Xᵢ, Xⱼ)|` relative to `max(1, diam X)`.
    pub max_deviation: f64,
}

pub const CONGRUENCE_TOL: f64 = 1e-9;

/// Checks that `U⁻¹Y` is an isometric image of `X` by comparing all
/// pairwise distances.
pub fn congruence_check(x: &Trajectory, y: &Trajectory, u: &Matrix) -> Result<CongruenceReport> {
    same_grid(x, y)?;
    check_square(u, x.dimension())?;
    let uinv = u
        .clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Singular("scaling matrix U is not invertible".into()))?;
    let w: Vec<Vector> = y.states.iter().map(|s| &uinv * s).collect();
    let xs = &x.states;
    let (dev, diam) = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            let mut dev = 0.0f64;
            let mut diam = 0.0f64;
            for j in i + 1..xs.len() {
                let dx = (&xs[i] - &xs[j]).norm();
                let dw = (&w[i] - &w[j]).norm();
                dev = dev.max((dx - dw).abs());
                diam = diam.max(dx);
            }
            (dev, diam)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)));
    let max_deviation = dev / diam.max(1.0);
    Ok(CongruenceReport {
        congruent: max_deviation <= CONGRUENCE_TOL,
        max_deviation,
    })
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff_distance(a: &[Vector], b: &[Vector]) -> f64 {
    let one_sided = |p: &[Vector], q: &[Vector]| {
        p.par_iter()
            .map(|x| q.iter().map(|y| (x - y).norm()).fold(f64::INFINITY, f64::min))
            .reduce(|| 0.0, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Largest distance between consecutive samples: the spatial grid step.
pub fn max_spatial_step(points: &[Vector]) -> f64 {
    points
        .windows(2)
        .map(|w| (&w[1] - &w[0]).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix_ml::{matrix_exp, CanonicalSystem, GeneralSystem};
    use std::f64::consts::PI;

    fn order(a: f64) -> FracOrder {
        FracOrder::new(a).unwrap()
    }

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn general(d: usize, e: &[f64]) -> System {
        GeneralSystem::from_row_major(d, e).unwrap().into()
    }

    fn complex(a: f64, b: f64) -> System {
        CanonicalSystem::complex_pair(a, b).unwrap().into()
    }

    #[test]
    fn grids() {
        let g = TimeGrid::uniform(1.0, 2.0, 5).times().unwrap();
        assert_eq!(g, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        let g = TimeGrid::log(1e-3, 10.0, 5).times().unwrap();
        assert!((g[1] - 1e-2).abs() < 1e-15 && g[4] == 10.0);
        assert!(TimeGrid::uniform(1.0, 2.0, 0).times().is_err());
        assert!(TimeGrid::uniform(0.0, 2.0, 4).times().is_err());
        assert!(TimeGrid::uniform(2.0, 1.0, 4).times().is_err());
        let d = TimeGrid::up_to(5.0);
        assert_eq!((d.t_min, d.n), (DEFAULT_T_MIN, DEFAULT_POINTS));
    }

    #[test]
    fn classical_spiral_value() {
        // A = [[-2,4],[-4,-2]], x0 = [1,1] at t = 0.5
        let s = general(2, &[-2.0, 4.0, -4.0, -2.0]);
        let tr = solve_at(&s, FracOrder::CLASSICAL, &v(&[1.0, 1.0]), vec![0.5]).unwrap();
        let e = (-1.0f64).exp();
        let want = [e * (2f64.cos() + 2f64.sin()), e * (-(2f64.sin()) + 2f64.cos())];
        assert!((tr.states()[0][0] - want[0]).abs() < 1e-14);
        assert!((tr.states()[0][1] - want[1]).abs() < 1e-14);
    }

    #[test]
    fn zero_initial_state_stays_at_rest() {
        let tr = solve(&complex(-1.0, 3.0), order(0.7), &v(&[0.0, 0.0]), &TimeGrid::uniform(0.1, 3.0, 50)).unwrap();
        assert!(tr.states().iter().all(|x| x.amax() == 0.0));
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let r = solve(&complex(-1.0, 3.0), order(0.7), &v(&[1.0, 0.0, 0.0]), &TimeGrid::up_to(1.0));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn restart_satisfies_linear_relation() {
        let grid = TimeGrid::uniform(1e-3, 5.0, 200);
        let x0 = v(&[1.0, 1.0]);
        for (s, a) in [(complex(-1.0, 3.0), 0.7), (general(2, &[-1.0, 0.0, 1.0, -2.0]), 0.5)] {
            let a = order(a);
            let x = solve(&s, a, &x0, &grid).unwrap();
            let y = restart(&s, a, &x0, 1.0, &grid).unwrap();
            let f = restart_transform(&s, a, 1.0).unwrap();
            assert!(verify_linear_relation(&x, &y, &f.t).unwrap() <= 1e-9);
            let id = Matrix::identity(2, 2);
            assert_eq!(verify_linear_relation(&x, &x, &id).unwrap(), 0.0);
        }
        // the identity is the wrong map for a fractional restart
        let s = complex(-1.0, 3.0);
        let x = solve(&s, order(0.7), &x0, &grid).unwrap();
        let y = restart(&s, order(0.7), &x0, 1.0, &grid).unwrap();
        assert!(verify_linear_relation(&x, &y, &Matrix::identity(2, 2)).unwrap() > 1e-2);
        let short = solve(&s, order(0.7), &x0, &TimeGrid::uniform(1e-3, 5.0, 100)).unwrap();
        assert!(matches!(verify_linear_relation(&x, &short, &Matrix::identity(2, 2)), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn factorization_of_complex_pair() {
        for (a, b, t1) in [(-2.0, 4.0, 0.5), (0.3, 1.0, 2.0), (1.0, -2.5, 0.7)] {
            let f = restart_transform(&complex(a, b), FracOrder::CLASSICAL, t1).unwrap();
            assert!((f.reconstruct() - &f.t).amax() < 1e-12);
            assert!((&f.v * f.v.transpose() - Matrix::identity(2, 2)).amax() < 1e-12);
            assert!((f.v.determinant() - 1.0).abs() < 1e-12);
            assert_eq!(f.u[(0, 0)], f.u[(1, 1)]);
            assert!((f.u[(0, 0)] - (a * t1).exp()).abs() < 1e-12 * (a * t1).exp());
            let want = (-b * t1 + PI).rem_euclid(2.0 * PI) - PI;
            assert!((f.theta - want).abs() < 1e-10, "{} vs {want}", f.theta);
        }
    }

    #[test]
    fn factorization_of_diagonal_system_is_pure_scaling() {
        let s: System = CanonicalSystem::distinct_real(&[-1.0, -2.0]).unwrap().into();
        let f = restart_transform(&s, order(0.7), 1.0).unwrap();
        assert_eq!(f.v, Matrix::identity(2, 2));
        assert_eq!(f.theta, 0.0);
        assert!(!f.has_reflection());
        assert!((f.u[(0, 0)] - 0.399_611_978_115_599_4).abs() < 1e-15);
        assert!((f.u[(1, 1)] - 0.213_786_727_015_297_27).abs() < 1e-15);
    }

    #[test]
    fn factorization_of_three_dimensional_system() {
        let s: System = CanonicalSystem::complex_pair_plus_real(0.0, 2.0, -3.0).unwrap().into();
        let f = restart_transform(&s, order(0.6), 1.3).unwrap();
        assert!((f.reconstruct() - &f.t).amax() < 1e-12);
        assert!((&f.v * f.v.transpose() - Matrix::identity(3, 3)).amax() < 1e-12);
        assert!((f.v.determinant() - 1.0).abs() < 1e-12);
        // rotation about the third axis
        assert_eq!(f.v[(2, 2)], 1.0);
        assert_eq!((f.v[(0, 2)], f.v[(2, 0)]), (0.0, 0.0));
        // general matrix: factors live in the eigenbasis
        let g = general(3, &[-3.0, 0.0, 0.0, 0.0, 3.0, -2.0, 0.0, 1.0, 1.0]);
        let f = restart_transform(&g, order(0.6), 1.3).unwrap();
        assert!(f.basis.is_some());
        assert!((f.reconstruct() - &f.t).amax() < 1e-12 * f.t.amax().max(1.0));
    }

    #[test]
    fn fractional_angle_for_slow_spiral() {
        // 60-digit oracle: E_{0.1}(0.983469 + 0.181075i) = 0.48701985182601134 + 8.1829575687674247i
        let f = restart_transform(&complex(0.983469, 0.181075), order(0.1), 1.0).unwrap();
        assert!((f.theta + 1.511_350_090_310_554_2).abs() < 1e-12, "{}", f.theta);
        assert!((f.u[(0, 0)] - 0.487_019_851_826_011_35f64.hypot(8.182_957_568_767_425)).abs() < 1e-12);
    }

    #[test]
    fn jordan_restart_has_no_split() {
        let s: System = CanonicalSystem::jordan2(-1.0).unwrap().into();
        assert!(matches!(restart_transform(&s, order(0.5), 1.0), Err(Error::Factorization(_))));
        assert!(restart_matrix(&s, order(0.5), 1.0).is_ok());
    }

    #[test]
    fn congruence_of_rotated_restart() {
        let grid = TimeGrid::uniform(1e-3, 4.0, 300);
        let x0 = v(&[1.0, 1.0]);
        let s = complex(-1.0, 3.0);
        let a = order(0.7);
        let x = solve(&s, a, &x0, &grid).unwrap();
        let y = restart(&s, a, &x0, 1.0, &grid).unwrap();
        let f = restart_transform(&s, a, 1.0).unwrap();
        let rep = congruence_check(&x, &y, &f.u).unwrap();
        assert!(rep.congruent, "{rep:?}");
        assert!(congruence_check(&x, &x, &Matrix::identity(2, 2)).unwrap().max_deviation == 0.0);
        // unequal scalings with U = I: not an isometry
        let s = general(2, &[-1.0, 0.0, 1.0, -2.0]);
        let x = solve(&s, a, &x0, &grid).unwrap();
        let y = restart(&s, a, &x0, 1.0, &grid).unwrap();
        let rep = congruence_check(&x, &y, &Matrix::identity(2, 2)).unwrap();
        assert!(!rep.congruent && rep.max_deviation > 1e-3);
        assert!(matches!(congruence_check(&x, &y, &Matrix::zeros(2, 2)), Err(Error::Singular(_))));
    }

    #[test]
    fn classical_restart_follows_the_same_path() {
        let s = general(2, &[0.0, 1.0, -4.0, 0.0]);
        let x0 = v(&[1.0, 1.0]);
        let x = solve(&s, FracOrder::CLASSICAL, &x0, &TimeGrid::uniform(1e-3, 4.0, 800)).unwrap();
        let y = restart(&s, FracOrder::CLASSICAL, &x0, 1.0, &TimeGrid::uniform(1e-3, 3.0, 500)).unwrap();
        let tail: Vec<Vector> = x.times().iter().zip(x.states()).filter(|(t, _)| **t >= 1.0).map(|(_, s)| s.clone()).collect();
        let h = hausdorff_distance(&tail, y.states());
        assert!(h <= 2.0 * max_spatial_step(x.states()), "{h}");
        // matrix_exp reproduces the classical solution
        let e = matrix_exp(&s, 2.0).unwrap() * &x0;
        assert!((e - x.state_at(2.0).unwrap()).amax() < 1e-12);
    }

    #[test]
    fn serialization_round_trip() {
        let s = general(2, &[-1.0, 0.0, 1.0, -2.0]);
        let tr = solve(&s, order(0.7), &v(&[1.0, 0.5]), &TimeGrid::uniform(0.1, 1.0, 4)).unwrap();
        let json = serde_json::to_string(&tr.to_record()).unwrap();
        let back = Trajectory::from_record(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, tr);
        let c: System = CanonicalSystem::complex_pair(1.0, 2.0).unwrap().into();
        let tc = solve(&c, order(0.5), &v(&[1.0, 0.0]), &TimeGrid::uniform(0.1, 1.0, 3)).unwrap();
        let json = serde_json::to_string(&tc.to_record()).unwrap();
        assert!(json.contains("\"form\":\"complex-pair\""));
        assert_eq!(Trajectory::from_record(&serde_json::from_str(&json).unwrap()).unwrap(), tc);

        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x1,x2"));
        let row: Vec<f64> = lines.next().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(row[0], 0.1);
        assert_eq!(row[1], tr.states()[0][0]);
        assert_eq!(row[2], tr.states()[0][1]);
    }
}
