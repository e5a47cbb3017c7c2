//! The discretized profile equation `N(φ; c) = K_N φ` at the collocation
//! nodes: nonlinearity, residual, analytic Jacobian, Newton corrector and
//! the constant solution curves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::{CollocationGrid, WaveProfile};

const SQRT_3: f64 = 1.732_050_807_568_877_2;

/// Crest height of the highest wave, `γ(c) = c(1 - 1/√3)`.
pub fn gamma(c: f64) -> f64 {
    c * (1.0 - 1.0 / SQRT_3)
}

/// The cubic `N(φ; c) = φ(c - φ/2)(c - φ)` at a fixed wavespeed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nonlinearity {
    pub c: f64,
}

impl Nonlinearity {
    pub fn new(c: f64) -> Self {
        Self { c }
    }

    pub fn gamma(&self) -> f64 {
        gamma(self.c)
    }

    pub fn value(&self, phi: f64) -> f64 {
        nonlinearity(phi, self.c)
    }

    pub fn derivative(&self, phi: f64) -> f64 {
        nonlinearity_derivative(phi, self.c)
    }

    /// `N''(φ) = 3φ - 3c`.
    pub fn second_derivative(&self, phi: f64) -> f64 {
        3.0 * phi - 3.0 * self.c
    }

    /// The same cubic written around its double root at `γ`:
    /// `N(γ) + ½(φ - γ - √3c)(φ - γ)²`.
    pub fn double_root_form(&self, phi: f64) -> f64 {
        let g = self.gamma();
        let d = phi - g;
        self.value(g) + 0.5 * (d - SQRT_3 * self.c) * d * d
    }
}

pub fn nonlinearity(phi: f64, c: f64) -> f64 {
    phi * (c - 0.5 * phi) * (c - phi)
}

/// `N'(φ; c) = c² - 3cφ + (3/2)φ²`.
pub fn nonlinearity_derivative(phi: f64, c: f64) -> f64 {
    c * c - 3.0 * c * phi + 1.5 * phi * phi
}

/// `∂N/∂c = φ(2c - (3/2)φ)`.
pub fn nonlinearity_dc(phi: f64, c: f64) -> f64 {
    phi * (2.0 * c - 1.5 * phi)
}

/// Which of the two nonzero constant solution curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrivialSign {
    Plus,
    Minus,
}

/// Constant solutions `Γ±(c) = (3c ± √(8 + c²))/2` of `N(φ) = φ`.
pub fn trivial_branch(c: f64, sign: TrivialSign) -> f64 {
    let root = (8.0 + c * c).sqrt();
    match sign {
        TrivialSign::Plus => 0.5 * (3.0 * c + root),
        TrivialSign::Minus => 0.5 * (3.0 * c - root),
    }
}

/// A priori sup-norm bound `(3c + √(8 + 17c²))/2` for nonzero solutions.
pub fn amplitude_bound(c: f64) -> f64 {
    0.5 * (3.0 * c.abs() + (8.0 + 17.0 * c * c).sqrt())
}

/// `f_i(y) = N(φ_i; c) - (K_N φ)_i`.
pub fn residual(profile: &WaveProfile, grid: &CollocationGrid) -> Result<Vec<f64>> {
    let k_phi = grid.apply_k(&profile.values)?;
    Ok(profile
        .values
        .iter()
        .zip(&k_phi)
        .map(|(&phi, &kp)| nonlinearity(phi, profile.c) - kp)
        .collect())
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `Df(y)` as an `N × (N+1)` matrix; column 0 is `∂f/∂c`.
pub fn jacobian(profile: &WaveProfile, grid: &CollocationGrid) -> Result<DMatrix<f64>> {
    grid.check_len(profile.len())?;
    let n = grid.n_modes();
    let k = grid.multiplier_matrix();
    let mut jac = DMatrix::zeros(n, n + 1);
    jac.view_mut((0, 1), (n, n)).copy_from(&(-k));
    for (i, &phi) in profile.values.iter().enumerate() {
        jac[(i, 0)] = nonlinearity_dc(phi, profile.c);
        jac[(i, i + 1)] += nonlinearity_derivative(phi, profile.c);
    }
    Ok(jac)
}

/// A linear side condition `row · y = value` on the unknown vector `y = (c, φ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub row: DVector<f64>,
    pub value: f64,
}

impl LinearConstraint {
    pub fn new(row: DVector<f64>, value: f64) -> Self {
        Self { row, value }
    }

    pub fn residual(&self, y: &DVector<f64>) -> f64 {
        self.row.dot(y) - self.value
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Target for `‖f‖∞` (and the constraint residual).
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonSolution {
    pub profile: WaveProfile,
    pub iterations: usize,
    /// `‖f‖∞` before each iteration and at the end.
    pub residual_history: Vec<f64>,
}

impl NewtonSolution {
    pub fn residual_norm(&self) -> f64 {
        *self.residual_history.last().unwrap_or(&f64::NAN)
    }
}

/// Newton's method for `f(y) = 0`.
///
/// Without a constraint `c` is held fixed and the square φ-block is solved;
/// with one, the bordered `(N+1) × (N+1)` system `[Df; row]` is used.
pub fn newton_solve(
    y0: &WaveProfile,
    grid: &CollocationGrid,
    constraint: Option<&LinearConstraint>,
    opts: &NewtonOptions,
) -> Result<NewtonSolution> {
    let n = grid.n_modes();
    grid.check_len(y0.len())?;
    if let Some(con) = constraint {
        if con.row.len() != n + 1 {
            return Err(Error::InvalidArgument(format!(
                "constraint row has length {}, expected {}",
                con.row.len(),
                n + 1
            )));
        }
    }
    let mut y = y0.to_vector();
    let mut history = Vec::new();
    for iter in 0..=opts.max_iter {
        let profile = WaveProfile::from_vector(&y);
        let f = residual(&profile, grid)?;
        let fnorm = sup_norm(&f);
        let cres = constraint.map_or(0.0, |con| con.residual(&y));
        history.push(fnorm);
        if !fnorm.is_finite() || !cres.is_finite() {
            break;
        }
        if fnorm <= opts.tol && cres.abs() <= opts.tol {
            return Ok(NewtonSolution {
                profile,
                iterations: iter,
                residual_history: history,
            });
        }
        if iter == opts.max_iter {
            break;
        }
        let jac = jacobian(&profile, grid)?;
        let step = match constraint {
            None => {
                let block = jac.columns(1, n).into_owned();
                let rhs = -DVector::from_vec(f);
                let dphi = block
                    .lu()
                    .solve(&rhs)
                    .ok_or(Error::SingularJacobian { iterations: iter })?;
                let mut step = DVector::zeros(n + 1);
                step.rows_mut(1, n).copy_from(&dphi);
                step
            }
            Some(con) => {
                let mut rhs = DVector::zeros(n + 1);
                for (i, v) in f.iter().enumerate() {
                    rhs[i] = -v;
                }
                rhs[n] = -cres;
                bordered_solve(&jac, &con.row, &rhs).ok_or(Error::SingularJacobian { iterations: iter })?
            }
        };
        if !step.iter().all(|v| v.is_finite()) {
            return Err(Error::SingularJacobian { iterations: iter });
        }
        y += step;
    }
    let profile = WaveProfile::from_vector(&y);
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual_norm: *history.last().unwrap_or(&f64::NAN),
        last: Box::new(profile),
    })
}

/// The square matrix `[jac; row]`.
pub fn bordered_matrix(jac: &DMatrix<f64>, row: &DVector<f64>) -> DMatrix<f64> {
    let n = jac.nrows();
    let mut m = jac.clone().insert_row(n, 0.0);
    m.row_mut(n).copy_from(&row.transpose());
    m
}

/// Solves `[jac; row] x = rhs` by LU with partial pivoting.
pub fn bordered_solve(jac: &DMatrix<f64>, row: &DVector<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    bordered_matrix(jac, row).lu().solve(rhs)
}
