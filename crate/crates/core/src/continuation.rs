//! Branch following from the small-amplitude expansion at `c_k = √(tanh(k)/k)`
//! to the highest wave, by pseudo-arclength predictor-corrector steps.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::kernel::symbol;
use crate::profile::{self, gamma, jacobian, newton_solve, sup_norm, LinearConstraint, NewtonOptions};
use crate::spectral::{CollocationGrid, WaveProfile};

/// Amplitude above which the second-order expansion is not trusted.
const SEED_AMPLITUDE_WARN: f64 = 0.1;

/// Second-order local bifurcation curve around `(0, c_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalSeed {
    pub k: usize,
    pub epsilon0: f64,
    pub c_k: f64,
    pub c_2k: f64,
}

impl LocalSeed {
    pub fn new(k: usize, epsilon0: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::InvalidArgument("wave number k must be >= 1".into()));
        }
        if !epsilon0.is_finite() {
            return Err(Error::InvalidArgument("epsilon must be finite".into()));
        }
        if epsilon0.abs() > SEED_AMPLITUDE_WARN {
            log::warn!("seed amplitude {epsilon0} is outside the small-amplitude regime");
        }
        Ok(Self {
            k,
            epsilon0,
            c_k: symbol(k as f64).sqrt(),
            c_2k: symbol(2.0 * k as f64).sqrt(),
        })
    }

    fn mean_coefficient(&self) -> f64 {
        1.0 / (self.c_k * self.c_k - 1.0)
    }

    fn second_harmonic_coefficient(&self) -> f64 {
        1.0 / (self.c_k * self.c_k - self.c_2k * self.c_2k)
    }

    /// Bracket `B` in `c(ε) = c_k + (3ε²/8) B`.
    pub fn speed_bracket(&self) -> f64 {
        -0.5 / self.c_k
            + 3.0 * self.c_k * (self.mean_coefficient() + 0.5 * self.second_harmonic_coefficient())
    }

    pub fn wavespeed(&self, epsilon: f64) -> f64 {
        self.c_k + 0.375 * epsilon * epsilon * self.speed_bracket()
    }

    /// `dc/dε` of [`LocalSeed::wavespeed`].
    pub fn wavespeed_derivative(&self, epsilon: f64) -> f64 {
        0.75 * epsilon * self.speed_bracket()
    }

    pub fn profile_value(&self, x: f64, epsilon: f64) -> f64 {
        let kx = self.k as f64 * x;
        epsilon * kx.cos()
            + 0.75
                * self.c_k
                * epsilon
                * epsilon
                * (self.mean_coefficient() + (2.0 * kx).cos() * self.second_harmonic_coefficient())
    }

    pub fn profile(&self, epsilon: f64, grid: &CollocationGrid) -> WaveProfile {
        WaveProfile::new(
            self.wavespeed(epsilon),
            grid.nodes()
                .iter()
                .map(|&x| self.profile_value(x, epsilon))
                .collect(),
        )
    }
}

/// The expansion `(c(ε), φ(x_m; ε))` sampled on the grid.
pub fn local_profile(epsilon: f64, k: usize, grid: &CollocationGrid) -> Result<WaveProfile> {
    Ok(LocalSeed::new(k, epsilon)?.profile(epsilon, grid))
}

/// Unit tangent `(c'(ε₀), cos(k x_1), …, cos(k x_N))/‖·‖` to the local curve.
pub fn seed_tangent(epsilon0: f64, k: usize, grid: &CollocationGrid) -> Result<DVector<f64>> {
    let seed = LocalSeed::new(k, epsilon0)?;
    let n = grid.n_modes();
    let mut z = DVector::zeros(n + 1);
    z[0] = seed.wavespeed_derivative(epsilon0);
    for (m, &x) in grid.nodes().iter().enumerate() {
        z[m + 1] = (k as f64 * x).cos();
    }
    let norm = z.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::InvalidState("seed tangent has zero length".into()));
    }
    Ok(z / norm)
}

/// A converged point on the branch.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchPoint {
    pub profile: WaveProfile,
    /// Unit tangent in `(c, φ)` space.
    pub tangent: DVector<f64>,
    pub arclength: f64,
    pub waveheight: f64,
    /// `γ(c) - φ(x_1)`, the distance of the crest node from the highest-wave height.
    pub gap: f64,
    pub step_used: f64,
    pub newton_iters: usize,
}

impl BranchPoint {
    pub fn new(
        profile: WaveProfile,
        tangent: DVector<f64>,
        arclength: f64,
        step_used: f64,
        newton_iters: usize,
    ) -> Self {
        let waveheight = crest(&profile) - trough(&profile);
        let gap = gamma(profile.c) - crest(&profile);
        Self {
            profile,
            tangent,
            arclength,
            waveheight,
            gap,
            step_used,
            newton_iters,
        }
    }

    pub fn c(&self) -> f64 {
        self.profile.c
    }

    pub fn crest(&self) -> f64 {
        crest(&self.profile)
    }

    /// Rate of change of [`BranchPoint::gap`] along the tangent.
    pub fn gap_slope(&self) -> f64 {
        (1.0 - 1.0 / 3f64.sqrt()) * self.tangent[0] - self.tangent[1]
    }
}

fn crest(p: &WaveProfile) -> f64 {
    p.values.first().copied().unwrap_or(f64::NAN)
}

fn trough(p: &WaveProfile) -> f64 {
    p.values.last().copied().unwrap_or(f64::NAN)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GapBelowThreshold,
    MaxSteps,
    StepUnderflow,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::GapBelowThreshold => "gap_below_threshold",
            Termination::MaxSteps => "max_steps",
            Termination::StepUnderflow => "step_underflow",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub n_modes: usize,
    pub points: Vec<BranchPoint>,
    pub termination: Termination,
    /// Absolute gap threshold used for termination.
    pub gap_threshold: f64,
}

impl Branch {
    pub fn terminal(&self) -> &BranchPoint {
        self.points.last().expect("branch has at least the seed point")
    }

    /// Indices `i` where the wavespeed component of the tangent changes sign
    /// between points `i` and `i + 1`.
    pub fn turning_points(&self) -> Vec<usize> {
        self.points
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0].tangent[0] * w[1].tangent[0] < 0.0)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationConfig {
    pub k: usize,
    pub epsilon0: f64,
    pub h0: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Stop once `gap ≤ gap_threshold_rel · γ(c)`.
    pub gap_threshold_rel: f64,
    pub max_steps: usize,
    pub newton: NewtonOptions,
}

impl Default for ContinuationConfig {
    fn default() -> Self {
        Self {
            k: 1,
            epsilon0: 1e-2,
            h0: 1e-2,
            h_min: 1e-8,
            h_max: 0.1,
            gap_threshold_rel: 1e-3,
            max_steps: 5000,
            newton: NewtonOptions::default(),
        }
    }
}

/// Step growth factor after a fast corrector.
const STEP_GROWTH: f64 = 1.3;
/// Corrector iterations counted as fast convergence.
const FAST_ITERATIONS: usize = 3;

/// Tangent at `y` oriented by `previous`: solves `Df(y) t = 0`, `previous · t = 1`.
pub fn oriented_tangent(
    profile: &WaveProfile,
    previous: &DVector<f64>,
    grid: &CollocationGrid,
) -> Result<DVector<f64>> {
    let jac = jacobian(profile, grid)?;
    let n = grid.n_modes();
    let mut rhs = DVector::zeros(n + 1);
    rhs[n] = 1.0;
    let t = profile::bordered_solve(&jac, previous, &rhs).ok_or(Error::SingularJacobian { iterations: 0 })?;
    let norm = t.norm();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::SingularJacobian { iterations: 0 });
    }
    Ok(t / norm)
}

/// One predictor-corrector step of length `h` from `point`.
pub fn arclength_step(
    point: &BranchPoint,
    h: f64,
    grid: &CollocationGrid,
    newton: &NewtonOptions,
) -> Result<BranchPoint> {
    if !(h >= 0.0) {
        return Err(Error::InvalidArgument(format!("step size must be >= 0, got {h}")));
    }
    let y0 = point.profile.to_vector();
    let z = &point.tangent;
    let predictor = &y0 + z * h;
    let constraint = LinearConstraint::new(z.clone(), z.dot(&predictor));
    let sol = newton_solve(
        &WaveProfile::from_vector(&predictor),
        grid,
        Some(&constraint),
        newton,
    )?;
    let tangent = oriented_tangent(&sol.profile, z, grid)?;
    Ok(BranchPoint::new(
        sol.profile,
        tangent,
        point.arclength + h,
        h,
        sol.iterations,
    ))
}

/// Converges the expansion at `ε₀` with `c` fixed and attaches the seed tangent.
pub fn seed_point(config: &ContinuationConfig, grid: &CollocationGrid) -> Result<BranchPoint> {
    let guess = local_profile(config.epsilon0, config.k, grid)?;
    let sol = newton_solve(&guess, grid, None, &config.newton)
        .map_err(|e| Error::Config(format!("seed newton solve failed: {e}")))?;
    let tangent = seed_tangent(config.epsilon0, config.k, grid)?;
    Ok(BranchPoint::new(sol.profile, tangent, 0.0, 0.0, sol.iterations))
}

/// Follows the branch until the crest gap falls below the threshold, the
/// step size underflows, or `max_steps` points have been accepted.
pub fn run_branch(config: &ContinuationConfig, grid: &CollocationGrid) -> Result<Branch> {
    if !(config.h_min > 0.0 && config.h_min <= config.h0 && config.h0 <= config.h_max) {
        return Err(Error::Config(
            "step sizes must satisfy 0 < h_min <= h0 <= h_max".into(),
        ));
    }
    let mut points = vec![seed_point(config, grid)?];
    let mut h = config.h0;
    let mut termination = Termination::MaxSteps;
    let mut threshold = config.gap_threshold_rel * gamma(points[0].c());

    while points.len() <= config.max_steps {
        let current = points.last().expect("nonempty");
        threshold = config.gap_threshold_rel * gamma(current.c());
        if current.gap <= threshold {
            termination = Termination::GapBelowThreshold;
            break;
        }
        let mut h_try = h;
        // aim at half the threshold when the linear prediction would cross γ
        let slope = current.gap_slope();
        if slope < 0.0 {
            let to_target = (current.gap - 0.5 * threshold) / -slope;
            h_try = h_try.min(to_target.max(config.h_min));
        }
        match arclength_step(current, h_try, grid, &config.newton) {
            Ok(next) if accept(current, &next, h_try) => {
                if next.newton_iters <= FAST_ITERATIONS {
                    h = (h_try * STEP_GROWTH).min(config.h_max);
                } else {
                    h = h_try;
                }
                points.push(next);
            }
            Ok(_) | Err(_) => {
                h = 0.5 * h_try;
                if h < config.h_min {
                    termination = Termination::StepUnderflow;
                    break;
                }
            }
        }
    }
    if termination == Termination::MaxSteps {
        log::warn!("branch stopped after {} steps", config.max_steps);
    }
    Ok(Branch {
        n_modes: grid.n_modes(),
        points,
        termination,
        gap_threshold: threshold,
    })
}

/// Step acceptance: the crest stays at or below `γ`, the profile stays below `γ`,
/// and the corrector did not wander further than the step itself.
fn accept(current: &BranchPoint, next: &BranchPoint, h: f64) -> bool {
    if !next.profile.is_finite() || next.gap < 0.0 {
        return false;
    }
    let g = gamma(next.c());
    if next.profile.values.iter().any(|&v| v > g) {
        return false;
    }
    let dist = (next.profile.to_vector() - current.profile.to_vector()).norm();
    dist <= 2.0 * h + 1e-12
}

/// Re-converges a branch point on a finer grid, holding the crest gap fixed.
pub fn refine_point(
    point: &BranchPoint,
    coarse: &CollocationGrid,
    fine: &CollocationGrid,
    newton: &NewtonOptions,
) -> Result<BranchPoint> {
    let values = coarse.resample(&point.profile.values, fine)?;
    let guess = WaveProfile::new(point.c(), values);
    let n = fine.n_modes();
    let mut row = DVector::zeros(n + 1);
    row[0] = 1.0 - 1.0 / 3f64.sqrt();
    row[1] = -1.0;
    let constraint = LinearConstraint::new(row, point.gap);
    let sol = newton_solve(&guess, fine, Some(&constraint), newton)?;

    let tangent_phi: Vec<f64> = point.tangent.as_slice()[1..].to_vec();
    let mut previous = DVector::zeros(n + 1);
    previous[0] = point.tangent[0];
    previous
        .rows_mut(1, n)
        .copy_from_slice(&coarse.resample(&tangent_phi, fine)?);
    let previous = previous.normalize();
    let tangent = oriented_tangent(&sol.profile, &previous, fine)?;
    Ok(BranchPoint::new(
        sol.profile,
        tangent,
        point.arclength,
        0.0,
        sol.iterations,
    ))
}

/// Residual norm of a point, for post-hoc checks.
pub fn point_residual(point: &BranchPoint, grid: &CollocationGrid) -> Result<f64> {
    Ok(sup_norm(&profile::residual(&point.profile, grid)?))
}

/// Pins the `cos(kx)` coefficient of the profile to `epsilon`.
pub fn amplitude_constraint(k: usize, epsilon: f64, grid: &CollocationGrid) -> Result<LinearConstraint> {
    if k < 1 || k >= grid.n_modes() {
        return Err(Error::InvalidArgument(format!(
            "wave number {k} not resolved by the grid"
        )));
    }
    let n = grid.n_modes();
    let w = grid.weights()[k];
    let mut row = DVector::zeros(n + 1);
    for (m, &x) in grid.nodes().iter().enumerate() {
        row[m + 1] = w * (k as f64 * x).cos();
    }
    Ok(LinearConstraint::new(row, epsilon))
}

/// Nontrivial solution with `cos(kx)` amplitude `epsilon`, `c` left free.
pub fn solve_at_amplitude(
    epsilon: f64,
    k: usize,
    grid: &CollocationGrid,
    newton: &NewtonOptions,
) -> Result<profile::NewtonSolution> {
    let guess = local_profile(epsilon, k, grid)?;
    newton_solve(
        &guess,
        grid,
        Some(&amplitude_constraint(k, epsilon, grid)?),
        newton,
    )
}

/// Nontrivial solution at fixed wavespeed `c`, seeded by inverting the local
/// expansion; only defined on the side of `c_k` the branch bifurcates into.
pub fn solve_at_speed(
    c: f64,
    k: usize,
    grid: &CollocationGrid,
    newton: &NewtonOptions,
) -> Result<profile::NewtonSolution> {
    let seed = LocalSeed::new(k, 0.0)?;
    let eps_sq = (c - seed.c_k) / (0.375 * seed.speed_bracket());
    if !(eps_sq > 0.0) || eps_sq.sqrt() > SEED_AMPLITUDE_WARN {
        return Err(Error::InvalidArgument(format!(
            "c = {c} is not within reach of the local branch at c_{k} = {:.6}",
            seed.c_k
        )));
    }
    let guess = local_profile(eps_sq.sqrt(), k, grid)?;
    newton_solve(&guess, grid, None, newton)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitude_and_speed_solves_agree() {
        let grid = CollocationGrid::new(64).unwrap();
        let opts = NewtonOptions::default();
        let a = solve_at_amplitude(0.02, 1, &grid, &opts).unwrap();
        let coef = grid.dct_coefficients(&a.profile.values).unwrap();
        assert!((coef[1] - 0.02).abs() < 1e-13);
        let b = solve_at_speed(a.profile.c, 1, &grid, &opts).unwrap();
        assert!(
            sup_norm(
                &(0..64)
                    .map(|i| a.profile.values[i] - b.profile.values[i])
                    .collect::<Vec<_>>()
            ) < 1e-9
        );
        assert!(solve_at_speed(0.9, 1, &grid, &opts).is_err());
        assert!(amplitude_constraint(64, 0.1, &grid).is_err());
    }

    #[test]
    fn seed_at_zero_amplitude() {
        let grid = CollocationGrid::new(16).unwrap();
        let p = local_profile(0.0, 1, &grid).unwrap();
        assert_eq!(p.c, symbol(1.0).sqrt());
        assert!(p.values.iter().all(|&v| v == 0.0));
        assert!(local_profile(0.01, 0, &grid).is_err());
    }

    #[test]
    fn seed_is_subcritical_for_k1() {
        // bracket from independent arithmetic with c1² = tanh 1, c2² = tanh(2)/2
        let c1sq = 1f64.tanh();
        let c2sq = 2f64.tanh() / 2.0;
        let c1 = c1sq.sqrt();
        let bracket = -1.0 / (2.0 * c1) + 3.0 * c1 * (1.0 / (c1sq - 1.0) + 1.0 / (2.0 * (c1sq - c2sq)));
        let seed = LocalSeed::new(1, 1e-2).unwrap();
        assert!((seed.speed_bracket() - bracket).abs() < 1e-13);
        assert!(bracket < 0.0);
        for &eps in &[1e-3, -1e-3, 0.05] {
            assert!(seed.wavespeed(eps) < c1);
        }
        assert!(seed.wavespeed_derivative(1e-3) < 0.0);
    }

    #[test]
    fn seed_tangent_shape() {
        let grid = CollocationGrid::new(32).unwrap();
        let z = seed_tangent(1e-3, 1, &grid).unwrap();
        assert!((z.norm() - 1.0).abs() < 1e-14);
        assert!(z[0] < 0.0);
        let ratio = z[1] / grid.nodes()[0].cos();
        for (m, &x) in grid.nodes().iter().enumerate() {
            assert!((z[m + 1] - ratio * x.cos()).abs() < 1e-15);
        }
    }

    #[test]
    fn residual_of_expansion_is_third_order() {
        let grid = CollocationGrid::new(64).unwrap();
        let r =
            |eps: f64| sup_norm(&profile::residual(&local_profile(eps, 1, &grid).unwrap(), &grid).unwrap());
        let ratio = r(2e-3) / r(1e-3);
        assert!((ratio - 8.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn zero_step_is_a_fixed_point() {
        let grid = CollocationGrid::new(32).unwrap();
        let cfg = ContinuationConfig::default();
        let seed = seed_point(&cfg, &grid).unwrap();
        let next = arclength_step(&seed, 0.0, &grid, &cfg.newton).unwrap();
        let d = (next.profile.to_vector() - seed.profile.to_vector()).amax();
        assert!(d < 1e-10);
        assert!(arclength_step(&seed, -1.0, &grid, &cfg.newton).is_err());
    }

    #[test]
    fn half_steps_agree_with_full_step() {
        let grid = CollocationGrid::new(32).unwrap();
        let cfg = ContinuationConfig::default();
        let seed = seed_point(&cfg, &grid).unwrap();
        let start = arclength_step(&seed, 0.05, &grid, &cfg.newton).unwrap();
        let mut prev = f64::NAN;
        for &h in &[0.08, 0.04] {
            let one = arclength_step(&start, h, &grid, &cfg.newton).unwrap();
            let half = arclength_step(&start, h / 2.0, &grid, &cfg.newton).unwrap();
            let two = arclength_step(&half, h / 2.0, &grid, &cfg.newton).unwrap();
            let d = (one.profile.to_vector() - two.profile.to_vector()).amax();
            assert!(one.tangent.dot(&start.tangent) > 0.0);
            if prev.is_finite() {
                // second order: halving h reduces the gap by about 4
                assert!(d < prev / 2.5, "{d} vs {prev}");
            }
            prev = d;
        }
    }

    #[test]
    fn bad_step_sizes_rejected() {
        let grid = CollocationGrid::new(16).unwrap();
        let cfg = ContinuationConfig {
            h0: 1.0,
            h_max: 0.1,
            ..Default::default()
        };
        assert!(matches!(run_branch(&cfg, &grid), Err(Error::Config(_))));
    }
}
