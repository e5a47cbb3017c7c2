//! Numerical checks of the qualitative theory on computed profiles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::{amplitude_bound, gamma};
use crate::spectral::{CollocationGrid, WaveProfile};

/// `φ(x_1) - φ(x_N)`, the crest-to-trough height at the extreme nodes.
pub fn waveheight(profile: &WaveProfile) -> f64 {
    match (profile.values.first(), profile.values.last()) {
        (Some(a), Some(b)) => a - b,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodalReport {
    /// Node values strictly decreasing on `(0, π)`.
    pub monotone_ok: bool,
    /// `max φ < γ(c)`.
    pub below_gamma_ok: bool,
    /// `φ''(0)` estimated from the first three nodes and evenness about `x = 0`.
    pub curvature_crest: f64,
    /// `φ''(π)` estimated from the last three nodes and evenness about `x = π`.
    pub curvature_trough: f64,
    /// Plain forward difference `(φ_1 - 2φ_2 + φ_3)/Δx²`, centred at `x_2` rather than the crest.
    pub curvature_crest_forward: f64,
    pub curvature_trough_forward: f64,
    /// `φ''(0) < 0` and `φ''(π) > 0` after normalizing to `c ≥ 0`.
    pub curvature_ok: bool,
}

impl NodalReport {
    pub fn passed(&self) -> bool {
        self.monotone_ok && self.below_gamma_ok && self.curvature_ok
    }
}

/// Nodal pattern of a profile. Negative-speed profiles are judged through
/// their partner `(-φ, -c)`; the curvature proxies are reported unnormalized.
pub fn check_nodal(profile: &WaveProfile, grid: &CollocationGrid) -> Result<NodalReport> {
    grid.check_len(profile.len())?;
    let n = profile.len();
    if n < 3 {
        return Err(Error::InvalidArgument("need at least 3 nodes".into()));
    }
    let sign = if profile.c < 0.0 { -1.0 } else { 1.0 };
    let v = &profile.values;
    let monotone_ok = v.windows(2).all(|w| sign * w[0] > sign * w[1]);
    let g = gamma(sign * profile.c);
    let below_gamma_ok = v.iter().all(|&x| sign * x < g);
    let dx2 = grid.spacing().powi(2);
    let curvature_crest = even_second_derivative(v[0], v[1], v[2], dx2);
    let curvature_trough = even_second_derivative(v[n - 1], v[n - 2], v[n - 3], dx2);
    let curvature_ok = sign * curvature_crest < 0.0 && sign * curvature_trough > 0.0;
    Ok(NodalReport {
        monotone_ok,
        below_gamma_ok,
        curvature_crest,
        curvature_trough,
        curvature_crest_forward: (v[0] - 2.0 * v[1] + v[2]) / dx2,
        curvature_trough_forward: (v[n - 1] - 2.0 * v[n - 2] + v[n - 3]) / dx2,
        curvature_ok,
    })
}

/// Second derivative at a symmetry point from values at distances `Δx/2`,
/// `3Δx/2`, `5Δx/2`: differentiates the even quartic through the three samples.
fn even_second_derivative(v1: f64, v2: f64, v3: f64, dx2: f64) -> f64 {
    (-17.0 / 12.0 * v1 + 13.0 / 8.0 * v2 - 5.0 / 24.0 * v3) / dx2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    pub max_abs: f64,
    pub amplitude_bound: f64,
    /// `amplitude_bound - max_abs`.
    pub amplitude_margin: f64,
    pub amplitude_ok: bool,
    /// `0 < c < 1`.
    pub wavespeed_ok: bool,
}

impl AprioriReport {
    pub fn passed(&self) -> bool {
        self.amplitude_ok && self.wavespeed_ok
    }
}

pub fn check_apriori_bounds(profile: &WaveProfile) -> AprioriReport {
    let max_abs = profile.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let bound = amplitude_bound(profile.c);
    AprioriReport {
        max_abs,
        amplitude_bound: bound,
        amplitude_margin: bound - max_abs,
        amplitude_ok: max_abs <= bound,
        wavespeed_ok: profile.c > 0.0 && profile.c < 1.0,
    }
}

/// Least-squares line through `(x_i, y_i)`: `(slope, intercept, r²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

/// Regression of the crest deficit against the logarithmic cusp law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspFit {
    pub window: (f64, f64),
    pub nodes_used: usize,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `min (γ - φ)(1 + c) / (x |log x|)` over the window.
    pub lower_bound_min: f64,
}

/// Model the crest deficit `γ - φ(x)` is regressed against, in log-log form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrestModel {
    /// `x (1 + |log x|)`.
    LogCusp,
    /// Plain power law `x`.
    Power,
}

impl CrestModel {
    fn abscissa(self, x: f64) -> f64 {
        match self {
            CrestModel::LogCusp => (x * (1.0 + x.ln().abs())).ln(),
            CrestModel::Power => x.ln(),
        }
    }
}

/// Default fit window `[4π/N, 0.3]`.
pub fn default_window(grid: &CollocationGrid) -> (f64, f64) {
    (4.0 * PI / grid.n_modes() as f64, 0.3)
}

pub const MIN_FIT_NODES: usize = 12;

pub fn cusp_fit(profile: &WaveProfile, grid: &CollocationGrid, window: (f64, f64)) -> Result<CuspFit> {
    crest_fit(profile, grid, window, CrestModel::LogCusp)
}

/// Fits `log(γ - φ(x_m))` against the model abscissa over nodes in `window`.
pub fn crest_fit(
    profile: &WaveProfile,
    grid: &CollocationGrid,
    window: (f64, f64),
    model: CrestModel,
) -> Result<CuspFit> {
    grid.check_len(profile.len())?;
    let (lo, hi) = window;
    if !(lo < hi) || lo < grid.nodes()[0] || hi > PI / 4.0 {
        return Err(Error::InvalidArgument(format!(
            "fit window [{lo}, {hi}] must satisfy x_1 <= lo < hi <= pi/4"
        )));
    }
    let g = gamma(profile.c);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut lower_bound_min = f64::INFINITY;
    for (&x, &v) in grid.nodes().iter().zip(&profile.values) {
        if x < lo || x > hi {
            continue;
        }
        let deficit = g - v;
        if !(deficit > 0.0) {
            return Err(Error::InvalidState(format!(
                "profile reaches gamma at x = {x} (deficit {deficit:e})"
            )));
        }
        xs.push(model.abscissa(x));
        ys.push(deficit.ln());
        lower_bound_min = lower_bound_min.min(deficit * (1.0 + profile.c) / (x * x.ln().abs()));
    }
    if xs.len() < MIN_FIT_NODES {
        return Err(Error::InvalidArgument(format!(
            "fit window holds {} nodes, need at least {MIN_FIT_NODES}",
            xs.len()
        )));
    }
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(CuspFit {
        window,
        nodes_used: xs.len(),
        slope,
        intercept,
        r_squared,
        lower_bound_min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileDistance {
    pub sup: f64,
    /// `(∫_{-π}^{π} |Δφ|²)^{1/2}` by the midpoint rule on the finer grid.
    pub l2: f64,
    pub wavespeed: f64,
}

/// Distance between two profiles; the coarser one is interpolated onto the
/// finer grid, whose size must be a multiple of the coarser one.
pub fn compare_profiles(
    a: &WaveProfile,
    grid_a: &CollocationGrid,
    b: &WaveProfile,
    grid_b: &CollocationGrid,
) -> Result<ProfileDistance> {
    grid_a.check_len(a.len())?;
    grid_b.check_len(b.len())?;
    let (na, nb) = (grid_a.n_modes(), grid_b.n_modes());
    let (coarse, coarse_grid, fine, fine_grid) = if na <= nb {
        (a, grid_a, b, grid_b)
    } else {
        (b, grid_b, a, grid_a)
    };
    if fine_grid.n_modes() % coarse_grid.n_modes() != 0 {
        return Err(Error::InvalidArgument(format!(
            "grids of size {na} and {nb} are not nested"
        )));
    }
    let embedded = if na == nb {
        coarse.values.clone()
    } else {
        coarse_grid.resample(&coarse.values, fine_grid)?
    };
    let diffs: Vec<f64> = embedded.iter().zip(&fine.values).map(|(x, y)| x - y).collect();
    let sup = diffs.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let l2 = (2.0 * fine_grid.spacing() * diffs.iter().map(|d| d * d).sum::<f64>()).sqrt();
    Ok(ProfileDistance {
        sup,
        l2,
        wavespeed: (a.c - b.c).abs(),
    })
}

/// Discrete Hölder seminorm `max |φ(x_i) - φ(x_j)| / |x_i - x_j|^α` over node pairs.
pub fn holder_seminorm(profile: &WaveProfile, grid: &CollocationGrid, alpha: f64) -> Result<f64> {
    grid.check_len(profile.len())?;
    let x = grid.nodes();
    let v = &profile.values;
    let mut best = 0.0_f64;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            best = best.max((v[i] - v[j]).abs() / (x[j] - x[i]).powf(alpha));
        }
    }
    Ok(best)
}

/// Hölder seminorms for each exponent in `alphas`.
pub fn holder_sweep(
    profile: &WaveProfile,
    grid: &CollocationGrid,
    alphas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    alphas
        .iter()
        .map(|&a| holder_seminorm(profile, grid, a).map(|s| (a, s)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(grid: &CollocationGrid, c: f64, deficit: impl Fn(f64) -> f64) -> WaveProfile {
        let g = gamma(c);
        WaveProfile::new(c, grid.nodes().iter().map(|&x| g - deficit(x)).collect())
    }

    #[test]
    fn waveheight_examples() {
        assert_eq!(waveheight(&WaveProfile::constant(0.5, 0.3, 16)), 0.0);
        let grid = CollocationGrid::new(256).unwrap();
        let eps = 0.01;
        let p = WaveProfile::new(0.8, grid.nodes().iter().map(|x| eps * x.cos()).collect());
        let expect = eps * (grid.nodes()[0].cos() - grid.nodes()[255].cos());
        assert!((waveheight(&p) - expect).abs() < 1e-16);
        assert!((waveheight(&p) - 2.0 * eps).abs() < 1e-6);
    }

    #[test]
    fn nodal_examples() {
        let grid = CollocationGrid::new(64).unwrap();
        let p = WaveProfile::new(0.87, grid.nodes().iter().map(|x| 0.01 * x.cos()).collect());
        let r = check_nodal(&p, &grid).unwrap();
        assert!(r.passed(), "{r:?}");
        let flipped = check_nodal(&p.negated(), &grid).unwrap();
        assert_eq!(flipped.monotone_ok, r.monotone_ok);
        assert_eq!(flipped.below_gamma_ok, r.below_gamma_ok);
        assert_eq!(flipped.curvature_ok, r.curvature_ok);
        assert_eq!(flipped.curvature_crest, -r.curvature_crest);
        assert_eq!(flipped.curvature_trough, -r.curvature_trough);
        let flat = check_nodal(&WaveProfile::constant(0.5, 0.1, 64), &grid).unwrap();
        assert!(!flat.monotone_ok);
        let tall = WaveProfile::new(0.5, grid.nodes().iter().map(|x| 0.5 * x.cos()).collect());
        assert!(!check_nodal(&tall, &grid).unwrap().below_gamma_ok);
    }

    #[test]
    fn even_stencil_is_exact_for_even_quartics() {
        let grid = CollocationGrid::new(32).unwrap();
        let f = |x: f64| 0.3 - 1.7 * x * x + 0.4 * x.powi(4);
        let p = WaveProfile::new(0.8, grid.nodes().iter().map(|&x| f(x)).collect());
        let r = check_nodal(&p, &grid).unwrap();
        assert!((r.curvature_crest + 3.4).abs() < 1e-9);
        // about π: g(π - s) with g even in s
        let g = |x: f64| 2.0 * (PI - x).powi(2) - (PI - x).powi(4);
        let q = WaveProfile::new(0.8, grid.nodes().iter().map(|&x| g(x)).collect());
        let r = check_nodal(&q, &grid).unwrap();
        assert!((r.curvature_trough - 4.0).abs() < 1e-9);
    }

    #[test]
    fn apriori_examples() {
        let zero = check_apriori_bounds(&WaveProfile::constant(0.5, 0.0, 8));
        assert!(zero.passed());
        assert_eq!(zero.amplitude_margin, (1.5 + (8.0 + 17.0 * 0.25f64).sqrt()) / 2.0);
        let big = WaveProfile::new(0.8, vec![3.0, 1.0, -1.0]);
        let scaled = WaveProfile::new(0.8, big.values.iter().map(|v| v * 10.0).collect());
        assert!(!check_apriori_bounds(&scaled).amplitude_ok);
        assert!(!check_apriori_bounds(&WaveProfile::constant(1.2, 0.0, 4)).wavespeed_ok);
    }

    #[test]
    fn fit_recovers_exact_log_cusp() {
        let grid = CollocationGrid::new(512).unwrap();
        let p = synthetic(&grid, 0.8, |x| x * (1.0 + x.ln().abs()));
        let fit = cusp_fit(&p, &grid, default_window(&grid)).unwrap();
        assert!((fit.slope - 1.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-10);
        assert!(fit.intercept.abs() < 1e-10);
        assert!(fit.lower_bound_min > 0.0);
    }

    #[test]
    fn fit_discriminates_square_root_crest() {
        let grid = CollocationGrid::new(512).unwrap();
        let p = synthetic(&grid, 0.8, |x| x.sqrt());
        let power = crest_fit(&p, &grid, default_window(&grid), CrestModel::Power).unwrap();
        assert!((power.slope - 0.5).abs() < 1e-10);
        let log = cusp_fit(&p, &grid, default_window(&grid)).unwrap();
        assert!(log.slope < 0.8);
    }

    #[test]
    fn fit_errors() {
        let grid = CollocationGrid::new(64).unwrap();
        let p = synthetic(&grid, 0.8, |x| x);
        assert!(matches!(
            cusp_fit(&p, &grid, (0.2, 0.3)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            cusp_fit(&p, &grid, (0.2, 1.0)),
            Err(Error::InvalidArgument(_))
        ));
        let over = synthetic(&grid, 0.8, |x| x - 0.3);
        assert!(matches!(
            cusp_fit(&over, &grid, (0.03, 0.75)),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn distances() {
        let g1 = CollocationGrid::new(16).unwrap();
        let g2 = CollocationGrid::new(32).unwrap();
        let g3 = CollocationGrid::new(24).unwrap();
        let f = |x: f64| 0.1 * x.cos() + 0.02 * (2.0 * x).cos();
        let p1 = WaveProfile::new(0.8, g1.nodes().iter().map(|&x| f(x)).collect());
        let p2 = WaveProfile::new(0.8, g2.nodes().iter().map(|&x| f(x)).collect());
        let d = compare_profiles(&p1, &g1, &p1, &g1).unwrap();
        assert_eq!((d.sup, d.l2, d.wavespeed), (0.0, 0.0, 0.0));
        let d = compare_profiles(&p2, &g2, &p1, &g1).unwrap();
        assert!(d.sup < 1e-15 && d.l2 < 1e-14);
        let p3 = WaveProfile::new(0.8, vec![0.0; 24]);
        assert!(compare_profiles(&p1, &g1, &p3, &g3).is_err());
        // constant offset δ has L² norm δ √(2π)
        let shifted = WaveProfile::new(0.8, p1.values.iter().map(|v| v + 0.01).collect());
        let d = compare_profiles(&p1, &g1, &shifted, &g1).unwrap();
        assert!((d.l2 - 0.01 * (2.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn holder_of_lipschitz_profile() {
        let grid = CollocationGrid::new(64).unwrap();
        let p = WaveProfile::new(0.8, grid.nodes().iter().map(|&x| -x).collect());
        let s = holder_sweep(&p, &grid, &[1.0, 0.5]).unwrap();
        assert!((s[0].1 - 1.0).abs() < 1e-12);
        assert!(s[1].1 > 1.0);
    }
}
