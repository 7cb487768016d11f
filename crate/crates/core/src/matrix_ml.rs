//! Matrix Mittag-Leffler function `E_α(A t^α)` and matrix exponential for
//! 2×2 and 3×3 systems.
//!
//! Every supported matrix is reduced to one of four real canonical forms
//! `C`, with a real change of basis `A = P C P⁻¹`. The canonical blocks
//! have closed forms in terms of scalar Mittag-Leffler values, and the
//! general result is `P E_α(C t^α) P⁻¹`.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mittag_leffler::{ml, ml_lambda_deriv, ml_time_deriv, coupling_time_deriv, FracOrder};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative eigenvalue gap below which two roots count as repeated.
pub const REPEATED_ROOT_TOL: f64 = 1e-9;

/// Real canonical structure of a system matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum CanonicalForm {
    /// `diag(λ₁, …, λ_d)`.
    DistinctReal { lambdas: Vec<f64> },
    /// `[[a, b], [-b, a]]`, eigenvalues `a ± ib`.
    ComplexPair { a: f64, b: f64 },
    /// `[[λ, 1], [0, λ]]`.
    Jordan2 { lambda: f64 },
    /// `[[a, b, 0], [-b, a, 0], [0, 0, λ]]`.
    ComplexPairPlusReal { a: f64, b: f64, lambda: f64 },
}

/// A system matrix in one of the canonical forms.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalSystem {
    form: CanonicalForm,
    matrix: Matrix,
}

impl CanonicalSystem {
    pub fn distinct_real(lambdas: &[f64]) -> Result<Self> {
        if !(2..=3).contains(&lambdas.len()) {
            return Err(Error::InvalidInput(format!(
                "a diagonal system needs 2 or 3 eigenvalues, got {}",
                lambdas.len()
            )));
        }
        check_finite(lambdas)?;
        Ok(CanonicalSystem {
            matrix: Matrix::from_diagonal(&Vector::from_column_slice(lambdas)),
            form: CanonicalForm::DistinctReal {
                lambdas: lambdas.to_vec(),
            },
        })
    }

    pub fn complex_pair(a: f64, b: f64) -> Result<Self> {
        check_finite(&[a, b])?;
        nonzero_b(b)?;
        Ok(CanonicalSystem {
            matrix: Matrix::from_row_slice(2, 2, &[a, b, -b, a]),
            form: CanonicalForm::ComplexPair { a, b },
        })
    }

    pub fn jordan2(lambda: f64) -> Result<Self> {
        check_finite(&[lambda])?;
        Ok(CanonicalSystem {
            matrix: Matrix::from_row_slice(2, 2, &[lambda, 1.0, 0.0, lambda]),
            form: CanonicalForm::Jordan2 { lambda },
        })
    }

    pub fn complex_pair_plus_real(a: f64, b: f64, lambda: f64) -> Result<Self> {
        check_finite(&[a, b, lambda])?;
        nonzero_b(b)?;
        Ok(CanonicalSystem {
            matrix: Matrix::from_row_slice(3, 3, &[a, b, 0.0, -b, a, 0.0, 0.0, 0.0, lambda]),
            form: CanonicalForm::ComplexPairPlusReal { a, b, lambda },
        })
    }

    pub fn from_form(form: &CanonicalForm) -> Result<Self> {
        match *form {
            CanonicalForm::DistinctReal { ref lambdas } => Self::distinct_real(lambdas),
            CanonicalForm::ComplexPair { a, b } => Self::complex_pair(a, b),
            CanonicalForm::Jordan2 { lambda } => Self::jordan2(lambda),
            CanonicalForm::ComplexPairPlusReal { a, b, lambda } => {
                Self::complex_pair_plus_real(a, b, lambda)
            }
        }
    }

    pub fn form(&self) -> &CanonicalForm {
        &self.form
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    /// Diagonal form with a repeated eigenvalue.
    pub fn is_degenerate(&self) -> bool {
        match &self.form {
            CanonicalForm::DistinctReal { lambdas } => lambdas
                .iter()
                .enumerate()
                .any(|(i, x)| lambdas[i + 1..].contains(x)),
            _ => false,
        }
    }

    /// `E_α(C t^α)`, exactly the identity at `t = 0`.
    pub fn ml(&self, alpha: FracOrder, t: f64) -> Result<Matrix> {
        check_time(t)?;
        let d = self.dimension();
        if t == 0.0 {
            return Ok(Matrix::identity(d, d));
        }
        let ta = t.powf(alpha.value());
        let scalar = |lam: Complex64| ml(alpha.value(), 1.0, lam * ta);
        let mut m = Matrix::zeros(d, d);
        match self.form {
            CanonicalForm::DistinctReal { ref lambdas } => {
                for (i, &l) in lambdas.iter().enumerate() {
                    m[(i, i)] = scalar(re(l))?.re;
                }
            }
            CanonicalForm::ComplexPair { a, b } => {
                put_rotation_block(&mut m, scalar(Complex64::new(a, b))?);
            }
            CanonicalForm::Jordan2 { lambda } => {
                let e = scalar(re(lambda))?.re;
                m[(0, 0)] = e;
                m[(1, 1)] = e;
                m[(0, 1)] = ml_lambda_deriv(alpha, re(lambda), t)?.re;
            }
            CanonicalForm::ComplexPairPlusReal { a, b, lambda } => {
                put_rotation_block(&mut m, scalar(Complex64::new(a, b))?);
                m[(2, 2)] = scalar(re(lambda))?.re;
            }
        }
        Ok(m)
    }

    /// `d^k/dt^k E_α(C t^α)` for `k ∈ {0, 1, 2}` and `t > 0`.
    pub fn ml_time_deriv(&self, k: u32, alpha: FracOrder, t: f64) -> Result<Matrix> {
        let d = self.dimension();
        let mut m = Matrix::zeros(d, d);
        let scalar = |lam: Complex64| ml_time_deriv(k, alpha, lam, t);
        match self.form {
            CanonicalForm::DistinctReal { ref lambdas } => {
                for (i, &l) in lambdas.iter().enumerate() {
                    m[(i, i)] = scalar(re(l))?.re;
                }
            }
            CanonicalForm::ComplexPair { a, b } => {
                put_rotation_block(&mut m, scalar(Complex64::new(a, b))?);
            }
            CanonicalForm::Jordan2 { lambda } => {
                let e = scalar(re(lambda))?.re;
                m[(0, 0)] = e;
                m[(1, 1)] = e;
                m[(0, 1)] = coupling_time_deriv(k, alpha, re(lambda), t)?.re;
            }
            CanonicalForm::ComplexPairPlusReal { a, b, lambda } => {
                put_rotation_block(&mut m, scalar(Complex64::new(a, b))?);
                m[(2, 2)] = scalar(re(lambda))?.re;
            }
        }
        Ok(m)
    }

    /// `e^{Ct}` from the elementary closed forms.
    pub fn exp(&self, t: f64) -> Result<Matrix> {
        if !t.is_finite() {
            return Err(Error::Domain(format!("time must be finite, got {t}")));
        }
        let d = self.dimension();
        let mut m = Matrix::zeros(d, d);
        match self.form {
            CanonicalForm::DistinctReal { ref lambdas } => {
                for (i, &l) in lambdas.iter().enumerate() {
                    m[(i, i)] = (l * t).exp();
                }
            }
            CanonicalForm::ComplexPair { a, b } => {
                put_rotation_block(&mut m, (Complex64::new(a, b) * t).exp());
            }
            CanonicalForm::Jordan2 { lambda } => {
                let e = (lambda * t).exp();
                m[(0, 0)] = e;
                m[(1, 1)] = e;
                m[(0, 1)] = t * e;
            }
            CanonicalForm::ComplexPairPlusReal { a, b, lambda } => {
                put_rotation_block(&mut m, (Complex64::new(a, b) * t).exp());
                m[(2, 2)] = (lambda * t).exp();
            }
        }
        Ok(m)
    }
}

/// `[[Re e, Im e], [-Im e, Re e]]` in the upper-left corner.
fn put_rotation_block(m: &mut Matrix, e: Complex64) {
    m[(0, 0)] = e.re;
    m[(0, 1)] = e.im;
    m[(1, 0)] = -e.im;
    m[(1, 1)] = e.re;
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn check_finite(xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("non-finite system parameter in {xs:?}")))
    }
}

fn nonzero_b(b: f64) -> Result<()> {
    if b == 0.0 {
        return Err(Error::InvalidInput(
            "a complex pair needs a nonzero imaginary part b".into(),
        ));
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!(
            "time must be non-negative and finite, got {t}"
        )));
    }
    Ok(())
}

/// An arbitrary supported matrix together with its real canonical
/// decomposition `A = P C P⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralSystem {
    matrix: Matrix,
    canonical: CanonicalSystem,
    basis: Matrix,
    basis_inv: Matrix,
}

impl GeneralSystem {
    /// Classifies a square 2×2 or 3×3 matrix given in row-major order.
    pub fn from_row_major(d: usize, entries: &[f64]) -> Result<Self> {
        if !(2..=3).contains(&d) || entries.len() != d * d {
            return Err(Error::InvalidInput(format!(
                "expected 4 or 9 matrix entries, got {}",
                entries.len()
            )));
        }
        check_finite(entries)?;
        Self::new(Matrix::from_row_slice(d, d, entries))
    }

    pub fn new(matrix: Matrix) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d || !(2..=3).contains(&d) {
            return Err(Error::InvalidInput(format!(
                "system matrix must be 2x2 or 3x3, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_finite(matrix.as_slice())?;
        let (canonical, basis) = if d == 2 {
            decompose2(&matrix)?
        } else {
            decompose3(&matrix)?
        };
        let basis_inv = basis.clone().try_inverse().ok_or_else(|| {
            Error::Rejected("eigenvector basis is numerically singular".into())
        })?;
        Ok(GeneralSystem {
            matrix,
            canonical,
            basis,
            basis_inv,
        })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn canonical(&self) -> &CanonicalSystem {
        &self.canonical
    }

    /// Change-of-basis matrix `P` with `A = P C P⁻¹`.
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn basis_inv(&self) -> &Matrix {
        &self.basis_inv
    }

    fn conjugate(&self, m: Matrix) -> Matrix {
        &self.basis * m * &self.basis_inv
    }
}

/// Eigenvalues closer than the relative tolerance, measured against the matrix scale.
fn close(x: f64, y: f64, scale: f64) -> bool {
    (x - y).abs() <= REPEATED_ROOT_TOL * scale
}

fn matrix_scale(m: &Matrix) -> f64 {
    m.iter().fold(0.0f64, |s, x| s.max(x.abs())).max(f64::MIN_POSITIVE)
}

fn decompose2(m: &Matrix) -> Result<(CanonicalSystem, Matrix)> {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let scale = matrix_scale(m);
    let half_tr = 0.5 * (a + d);
    // discriminant of λ² - tr λ + det, written to avoid cancellation in tr² - 4det
    let mut disc = 0.25 * (a - d) * (a - d) + b * c;
    // a discriminant below its own rounding error is a double root
    if disc.abs() <= 4.0 * f64::EPSILON * (0.25 * (a - d) * (a - d) + (b * c).abs()) {
        disc = 0.0;
    }
    let root = disc.abs().sqrt();
    if 2.0 * root <= REPEATED_ROOT_TOL * scale {
        let lam = half_tr;
        let n = Matrix::from_row_slice(2, 2, &[a - lam, b, c, d - lam]);
        if matrix_scale(&n) <= REPEATED_ROOT_TOL * scale {
            return Ok((CanonicalSystem::distinct_real(&[lam, lam])?, Matrix::identity(2, 2)));
        }
        // N = A - λI is nilpotent: take the column with the larger norm as the
        // eigenvector v₁ = N e_j, with e_j the generalized eigenvector
        let j = if n.column(0).norm() >= n.column(1).norm() { 0 } else { 1 };
        let mut p = Matrix::zeros(2, 2);
        p.set_column(0, &n.column(j));
        p[(j, 1)] = 1.0;
        return Ok((CanonicalSystem::jordan2(lam)?, p));
    }
    if disc > 0.0 {
        let l1 = half_tr + root;
        let l2 = half_tr - root;
        let mut p = Matrix::zeros(2, 2);
        p.set_column(0, &real_null2(a - l1, b, c, d - l1));
        p.set_column(1, &real_null2(a - l2, b, c, d - l2));
        return Ok((CanonicalSystem::distinct_real(&[l1, l2])?, p));
    }
    // μ = α + iβ with eigenvector x + iy gives A x = α x - β y, A y = β x + α y,
    // which is the canonical block [[α, β], [-β, α]] in the basis (x, y)
    let mu = Complex64::new(half_tr, root);
    let w = complex_null2(Complex64::new(a, 0.0) - mu, b.into(), c.into(), Complex64::new(d, 0.0) - mu);
    let p = Matrix::from_row_slice(2, 2, &[w[0].re, w[0].im, w[1].re, w[1].im]);
    Ok((CanonicalSystem::complex_pair(mu.re, mu.im)?, p))
}

/// Null vector of the singular 2×2 matrix `[[p, q], [r, s]]`.
fn real_null2(p: f64, q: f64, r: f64, s: f64) -> Vector {
    let v1 = [q, -p];
    let v2 = [s, -r];
    let (x, y) = if v1[0].hypot(v1[1]) >= v2[0].hypot(v2[1]) {
        (v1[0], v1[1])
    } else {
        (v2[0], v2[1])
    };
    let n = x.hypot(y);
    Vector::from_column_slice(&[x / n, y / n])
}

fn complex_null2(p: Complex64, q: Complex64, r: Complex64, s: Complex64) -> [Complex64; 2] {
    let v1 = [q, -p];
    let v2 = [s, -r];
    let n1 = v1[0].norm_sqr() + v1[1].norm_sqr();
    let n2 = v2[0].norm_sqr() + v2[1].norm_sqr();
    if n1 >= n2 {
        v1
    } else {
        v2
    }
}

fn decompose3(m: &Matrix) -> Result<(CanonicalSystem, Matrix)> {
    let a = Matrix3::from_iterator(m.transpose().iter().copied()).transpose();
    let scale = matrix_scale(m);
    let roots = cubic_eigenvalues(&a);
    match roots {
        CubicRoots::Real(mut l) => {
            l.sort_by(|x, y| y.partial_cmp(x).unwrap());
            let rep01 = close(l[0], l[1], scale);
            let rep12 = close(l[1], l[2], scale);
            if rep01 && rep12 {
                let lam = (l[0] + l[1] + l[2]) / 3.0;
                let n = a - Matrix3::identity() * lam;
                if n.amax() <= REPEATED_ROOT_TOL * scale {
                    return Ok((
                        CanonicalSystem::distinct_real(&[lam, lam, lam])?,
                        Matrix::identity(3, 3),
                    ));
                }
                return Err(Error::Rejected(
                    "3x3 matrix with a triple eigenvalue is not diagonalizable".into(),
                ));
            }
            let (lams, vecs) = if rep01 || rep12 {
                let (pair, single) = if rep01 {
                    ((l[0] + l[1]) / 2.0, l[2])
                } else {
                    ((l[1] + l[2]) / 2.0, l[0])
                };
                let plane = eigenplane(&a, pair, scale)?;
                (
                    [pair, pair, single],
                    [plane[0], plane[1], real_null3(&(a - Matrix3::identity() * single))],
                )
            } else {
                let vs = l.map(|x| real_null3(&(a - Matrix3::identity() * x)));
                (l, vs)
            };
            let p = Matrix::from_columns(&[
                DVector::from_column_slice(vecs[0].as_slice()),
                DVector::from_column_slice(vecs[1].as_slice()),
                DVector::from_column_slice(vecs[2].as_slice()),
            ]);
            Ok((CanonicalSystem::distinct_real(&lams)?, p))
        }
        CubicRoots::Complex { real, pair } => {
            if pair.im.abs() <= 0.5 * REPEATED_ROOT_TOL * scale {
                return Err(Error::Rejected(
                    "complex pair with vanishing imaginary part".into(),
                ));
            }
            let ac = a.map(|x| Complex64::new(x, 0.0));
            let w = complex_null3(&(ac - nalgebra::Matrix3::<Complex64>::identity() * pair));
            let v = real_null3(&(a - Matrix3::identity() * real));
            let mut p = Matrix::zeros(3, 3);
            for i in 0..3 {
                p[(i, 0)] = w[i].re;
                p[(i, 1)] = w[i].im;
                p[(i, 2)] = v[i];
            }
            Ok((CanonicalSystem::complex_pair_plus_real(pair.re, pair.im, real)?, p))
        }
    }
}

enum CubicRoots {
    Real([f64; 3]),
    /// One real root and the complex root with positive imaginary part.
    Complex { real: f64, pair: Complex64 },
}

/// Roots of the characteristic polynomial `λ³ - c₂λ² + c₁λ - c₀`.
fn cubic_eigenvalues(a: &Matrix3<f64>) -> CubicRoots {
    let c2 = a.trace();
    let c1 = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)] + a[(0, 0)] * a[(2, 2)]
        - a[(0, 2)] * a[(2, 0)]
        + a[(1, 1)] * a[(2, 2)]
        - a[(1, 2)] * a[(2, 1)];
    let c0 = a.determinant();
    let poly = |x: f64| ((x - c2) * x + c1) * x - c0;
    let dpoly = |x: f64| (3.0 * x - 2.0 * c2) * x + c1;
    let polish = |mut x: f64| {
        for _ in 0..4 {
            let d = dpoly(x);
            if d == 0.0 {
                break;
            }
            let step = poly(x) / d;
            if !step.is_finite() {
                break;
            }
            x -= step;
        }
        x
    };
    // depressed cubic y³ + p y + q with λ = y + c₂/3
    let shift = c2 / 3.0;
    let p = c1 - c2 * c2 / 3.0;
    let q = -(2.0 * c2 * c2 * c2 / 27.0 - c2 * c1 / 3.0 + c0);
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let noise = 16.0 * f64::EPSILON * ((q / 2.0).powi(2) + (p / 3.0).abs().powi(3));
    if disc.abs() <= noise && p != 0.0 {
        // double root: y = 3q/p once and -3q/(2p) twice
        let single = polish(shift + 3.0 * q / p);
        let double = shift - 1.5 * q / p;
        return CubicRoots::Real([single, double, double]);
    }
    if disc <= 0.0 {
        // three real roots, trigonometric form
        let r = (-p / 3.0).max(0.0).sqrt();
        let roots = if r == 0.0 {
            [shift; 3]
        } else {
            let cos_arg = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0);
            let phi = cos_arg.acos() / 3.0;
            let tau = 2.0 * std::f64::consts::PI / 3.0;
            [0.0, 1.0, 2.0].map(|k| shift + 2.0 * r * (phi - k * tau).cos())
        };
        return CubicRoots::Real(roots);
    }
    let s = disc.sqrt();
    let u = (-q / 2.0 + s).cbrt();
    let v = (-q / 2.0 - s).cbrt();
    let real = polish(shift + u + v);
    // deflate: λ³ - c₂λ² + c₁λ - c₀ = (λ - r)(λ² + Bλ + C)
    let bq = real - c2;
    let cq = c1 + real * bq;
    let half = -bq / 2.0;
    let d2 = half * half - cq;
    if d2 >= 0.0 {
        let sq = d2.sqrt();
        let mut l = [real, half + sq, half - sq];
        l = l.map(polish);
        return CubicRoots::Real(l);
    }
    CubicRoots::Complex {
        real,
        pair: Complex64::new(half, (-d2).sqrt()),
    }
}

/// Unit null vector of a rank-2 real 3×3 matrix via the largest row cross product.
fn real_null3(n: &Matrix3<f64>) -> Vector3<f64> {
    let rows = [n.row(0).transpose(), n.row(1).transpose(), n.row(2).transpose()];
    let mut best = Vector3::zeros();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = rows[i].cross(&rows[j]);
        if c.norm() > best.norm() {
            best = c;
        }
    }
    best / best.norm()
}

fn complex_null3(n: &Matrix3<Complex64>) -> [Complex64; 3] {
    let row = |i: usize| [n[(i, 0)], n[(i, 1)], n[(i, 2)]];
    let cross = |x: [Complex64; 3], y: [Complex64; 3]| {
        [
            x[1] * y[2] - x[2] * y[1],
            x[2] * y[0] - x[0] * y[2],
            x[0] * y[1] - x[1] * y[0],
        ]
    };
    let norm = |v: &[Complex64; 3]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let mut best = [Complex64::new(0.0, 0.0); 3];
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(row(i), row(j));
        if norm(&c) > norm(&best) {
            best = c;
        }
    }
    let s = norm(&best).sqrt();
    best.map(|c| c / s)
}

/// Basis of the two-dimensional eigenspace of a double eigenvalue, or a
/// rejection when the eigenspace is only a line.
fn eigenplane(a: &Matrix3<f64>, lam: f64, scale: f64) -> Result<[Vector3<f64>; 2]> {
    let n = a - Matrix3::identity() * lam;
    // rank one: every row is a multiple of the largest one
    let (imax, r) = (0..3)
        .map(|i| (i, n.row(i).transpose()))
        .max_by(|x, y| x.1.norm().partial_cmp(&y.1.norm()).unwrap())
        .unwrap();
    let rn = r.norm();
    if rn <= REPEATED_ROOT_TOL * scale {
        return Err(Error::Rejected("degenerate eigenspace".into()));
    }
    let u = r / rn;
    for i in (0..3).filter(|&i| i != imax) {
        let row = n.row(i).transpose();
        let off = row - u * u.dot(&row);
        if off.norm() > 1e-7 * scale {
            return Err(Error::Rejected(
                "3x3 matrix with a repeated eigenvalue is not diagonalizable".into(),
            ));
        }
    }
    // two vectors orthogonal to u
    let k = u.iamin();
    let mut e = Vector3::zeros();
    e[k] = 1.0;
    let v1 = u.cross(&e).normalize();
    let v2 = u.cross(&v1).normalize();
    Ok([v1, v2])
}

/// A system given either directly in canonical form or as a general matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Canonical(CanonicalSystem),
    General(GeneralSystem),
}

impl System {
    pub fn dimension(&self) -> usize {
        self.matrix().nrows()
    }

    /// The system matrix `A`.
    pub fn matrix(&self) -> &Matrix {
        match self {
            System::Canonical(c) => c.matrix(),
            System::General(g) => g.matrix(),
        }
    }

    /// The canonical form `C` (equal to `A` for canonical systems).
    pub fn canonical(&self) -> &CanonicalSystem {
        match self {
            System::Canonical(c) => c,
            System::General(g) => g.canonical(),
        }
    }

    /// `(P, P⁻¹)` for general systems.
    pub fn basis(&self) -> Option<(&Matrix, &Matrix)> {
        match self {
            System::Canonical(_) => None,
            System::General(g) => Some((g.basis(), g.basis_inv())),
        }
    }

    pub fn spec(&self) -> SystemSpec {
        match self {
            System::Canonical(c) => SystemSpec::Canonical(c.form().clone()),
            System::General(g) => SystemSpec::Matrix {
                rows: (0..g.matrix.nrows())
                    .map(|i| g.matrix.row(i).iter().copied().collect())
                    .collect(),
            },
        }
    }

    pub fn from_spec(spec: &SystemSpec) -> Result<Self> {
        match spec {
            SystemSpec::Canonical(f) => Ok(System::Canonical(CanonicalSystem::from_form(f)?)),
            SystemSpec::Matrix { rows } => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(Error::InvalidInput("matrix rows must form a square".into()));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                Ok(System::General(GeneralSystem::from_row_major(d, &flat)?))
            }
        }
    }
}

impl From<CanonicalSystem> for System {
    fn from(c: CanonicalSystem) -> Self {
        System::Canonical(c)
    }
}

impl From<GeneralSystem> for System {
    fn from(g: GeneralSystem) -> Self {
        System::General(g)
    }
}

/// Serializable description of a [`System`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSpec {
    Matrix { rows: Vec<Vec<f64>> },
    Canonical(CanonicalForm),
}

/// `E_α(A t^α)` for `t ≥ 0`; the identity at `t = 0`.
pub fn matrix_ml(system: &System, alpha: FracOrder, t: f64) -> Result<Matrix> {
    match system {
        System::Canonical(c) => c.ml(alpha, t),
        System::General(g) => {
            if t == 0.0 {
                let d = g.matrix.nrows();
                return Ok(Matrix::identity(d, d));
            }
            Ok(g.conjugate(g.canonical.ml(alpha, t)?))
        }
    }
}

/// `d^k/dt^k E_α(A t^α)` for `k ∈ {0, 1, 2}` and `t > 0`.
pub fn matrix_ml_time_deriv(system: &System, k: u32, alpha: FracOrder, t: f64) -> Result<Matrix> {
    match system {
        System::Canonical(c) => c.ml_time_deriv(k, alpha, t),
        System::General(g) => Ok(g.conjugate(g.canonical.ml_time_deriv(k, alpha, t)?)),
    }
}

/// `e^{At}` for any real `t`.
pub fn matrix_exp(system: &System, t: f64) -> Result<Matrix> {
    match system {
        System::Canonical(c) => c.exp(t),
        System::General(g) => {
            if t == 0.0 {
                let d = g.matrix.nrows();
                return Ok(Matrix::identity(d, d));
            }
            Ok(g.conjugate(g.canonical.exp(t)?))
        }
    }
}
