//! Midpoint cosine collocation for even 2π-periodic functions.
//!
//! Nodes `x_m = (2m-1)π/(2N)`, `m = 1..N`, cover `(0, π)`. Coefficients come
//! from midpoint quadrature with weights `w(0) = 1/N`, `w(n) = 2/N`, and the
//! multiplier acts on coefficient `n` by `tanh(n)/n`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::symbol;

/// Default number of collocation modes.
pub const DEFAULT_MODES: usize = 512;

#[derive(Debug, Clone)]
pub struct CollocationGrid {
    n_modes: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `cos(n x_m)` with mode `n` along rows and node `m` along columns.
    cosines: DMatrix<f64>,
    /// Dense `K_N`, acting on nodal values.
    multiplier: DMatrix<f64>,
}

impl CollocationGrid {
    pub fn new(n_modes: usize) -> Result<Self> {
        if n_modes < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_modes must be >= 2, got {n_modes}"
            )));
        }
        let n = n_modes;
        let nodes: Vec<f64> = (1..=n)
            .map(|m| (2 * m - 1) as f64 * PI / (2 * n) as f64)
            .collect();
        let weights: Vec<f64> = (0..n)
            .map(|k| if k == 0 { 1.0 / n as f64 } else { 2.0 / n as f64 })
            .collect();
        let cosines = DMatrix::from_fn(n, n, |k, m| (k as f64 * nodes[m]).cos());
        // K_N[i, j] = Σ_k symbol(k) w(k) cos(k x_j) cos(k x_i)
        let scaled = DMatrix::from_fn(n, n, |k, m| symbol(k as f64) * weights[k] * cosines[(k, m)]);
        let multiplier = cosines.transpose() * scaled;
        Ok(Self {
            n_modes,
            nodes,
            weights,
            cosines,
            multiplier,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights over the mode index.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn multiplier_matrix(&self) -> &DMatrix<f64> {
        &self.multiplier
    }

    /// Node spacing `π/N`.
    pub fn spacing(&self) -> f64 {
        PI / self.n_modes as f64
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n_modes {
            return Err(Error::InvalidArgument(format!(
                "expected {} values, got {len}",
                self.n_modes
            )));
        }
        Ok(())
    }

    /// Discrete cosine coefficients `φ̂_N(n) = w(n) Σ_m φ(x_m) cos(n x_m)`.
    pub fn dct_coefficients(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        let v = DVector::from_column_slice(values);
        let raw = &self.cosines * v;
        Ok(raw.iter().zip(&self.weights).map(|(r, w)| r * w).collect())
    }

    /// Nodal values `Σ_n a_n cos(n x_m)` of a cosine series.
    pub fn synthesize(&self, coefficients: &[f64]) -> Result<Vec<f64>> {
        self.check_len(coefficients.len())?;
        let a = DVector::from_column_slice(coefficients);
        Ok(self.cosines.tr_mul(&a).as_slice().to_vec())
    }

    /// `K_N φ` through transform, symbol multiplication and synthesis.
    pub fn apply_k(&self, values: &[f64]) -> Result<Vec<f64>> {
        let mut coeffs = self.dct_coefficients(values)?;
        for (k, a) in coeffs.iter_mut().enumerate() {
            *a *= symbol(k as f64);
        }
        self.synthesize(&coeffs)
    }

    /// `K_N φ` as a dense matrix-vector product.
    pub fn apply_k_matrix(&self, values: &[f64]) -> Result<Vec<f64>> {
        self.check_len(values.len())?;
        let v = DVector::from_column_slice(values);
        Ok((&self.multiplier * v).as_slice().to_vec())
    }

    /// Evaluates the cosine interpolant of `values` at an arbitrary `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> Result<f64> {
        let coeffs = self.dct_coefficients(values)?;
        Ok(eval_series(&coeffs, x))
    }

    /// Samples the cosine interpolant of `values` on the nodes of `target`.
    pub fn resample(&self, values: &[f64], target: &CollocationGrid) -> Result<Vec<f64>> {
        let coeffs = self.dct_coefficients(values)?;
        Ok(target.nodes.iter().map(|&x| eval_series(&coeffs, x)).collect())
    }
}

fn eval_series(coeffs: &[f64], x: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(k, a)| a * (k as f64 * x).cos())
        .sum()
}

/// Wavespeed plus nodal values of an even profile on a collocation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveProfile {
    pub c: f64,
    pub values: Vec<f64>,
}

impl WaveProfile {
    pub fn new(c: f64, values: Vec<f64>) -> Self {
        Self { c, values }
    }

    pub fn constant(c: f64, value: f64, n: usize) -> Self {
        Self {
            c,
            values: vec![value; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Unknown vector `y = (c, φ_1, …, φ_N)`.
    pub fn to_vector(&self) -> DVector<f64> {
        let mut y = DVector::zeros(self.values.len() + 1);
        y[0] = self.c;
        y.rows_mut(1, self.values.len()).copy_from_slice(&self.values);
        y
    }

    pub fn from_vector(y: &DVector<f64>) -> Self {
        Self {
            c: y[0],
            values: y.as_slice()[1..].to_vec(),
        }
    }

    /// The sign-symmetric partner `(-φ, -c)`.
    pub fn negated(&self) -> Self {
        Self {
            c: -self.c,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.c.is_finite() && self.values.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn max_diff(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn nodes_and_weights() {
        let g = CollocationGrid::new(4).unwrap();
        let expect = [PI / 8.0, 3.0 * PI / 8.0, 5.0 * PI / 8.0, 7.0 * PI / 8.0];
        assert_eq!(g.nodes(), &expect);
        assert_eq!(g.weights(), &[0.25, 0.5, 0.5, 0.5]);
        let ones = g.apply_k_matrix(&[1.0; 4]).unwrap();
        assert!(max_diff(&ones, &[1.0; 4]) < 1e-14);
        assert!(CollocationGrid::new(1).is_err());
        let g = CollocationGrid::new(64).unwrap();
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert!(g.nodes()[0] > 0.0 && g.nodes()[63] < PI);
    }

    #[test]
    fn dct_examples() {
        let g = CollocationGrid::new(32).unwrap();
        let a = g.dct_coefficients(&[2.5; 32]).unwrap();
        assert!((a[0] - 2.5).abs() < 1e-14);
        assert!(a[1..].iter().all(|v| v.abs() < 1e-13));
        let cosx: Vec<f64> = g.nodes().iter().map(|x| x.cos()).collect();
        let a = g.dct_coefficients(&cosx).unwrap();
        let mut e1 = vec![0.0; 32];
        e1[1] = 1.0;
        assert!(max_diff(&a, &e1) < 1e-13);
        assert!(g.dct_coefficients(&[1.0; 31]).is_err());
        assert!(g.apply_k(&[1.0; 33]).is_err());
    }

    #[test]
    fn multiplier_on_single_modes() {
        let g = CollocationGrid::new(64).unwrap();
        let c = g.apply_k(&[-0.3; 64]).unwrap();
        assert!(max_diff(&c, &[-0.3; 64]) < 1e-14);
        for k in [1usize, 2, 7, 40] {
            let mode: Vec<f64> = g.nodes().iter().map(|x| (k as f64 * x).cos()).collect();
            let out = g.apply_k(&mode).unwrap();
            let expect: Vec<f64> = mode.iter().map(|v| symbol(k as f64) * v).collect();
            assert!(max_diff(&out, &expect) < 1e-13, "k={k}");
        }
    }

    #[test]
    fn multiplier_matrix_symmetric_with_symbol_spectrum() {
        let n = 24;
        let g = CollocationGrid::new(n).unwrap();
        let k = g.multiplier_matrix();
        assert!((k - k.transpose()).amax() < 1e-15);
        let mut eig: Vec<f64> = k.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expect: Vec<f64> = (0..n).map(|j| symbol(j as f64)).collect();
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(max_diff(&eig, &expect) < 1e-13);
        assert!(eig.iter().all(|&e| e > 0.0 && e <= 1.0 + 1e-15));
    }

    #[test]
    fn refinement_consistency() {
        // smooth even profile: coefficients of K φ agree between N and 2N
        let f = |x: f64| (0.4 * x.cos()).exp();
        let g1 = CollocationGrid::new(32).unwrap();
        let g2 = CollocationGrid::new(64).unwrap();
        let k1 = g1
            .dct_coefficients(
                &g1.apply_k(&g1.nodes().iter().map(|&x| f(x)).collect::<Vec<_>>())
                    .unwrap(),
            )
            .unwrap();
        let k2 = g2
            .dct_coefficients(
                &g2.apply_k(&g2.nodes().iter().map(|&x| f(x)).collect::<Vec<_>>())
                    .unwrap(),
            )
            .unwrap();
        assert!(max_diff(&k1, &k2[..32]) < 1e-14);
    }

    #[test]
    fn resample_exact_for_band_limited() {
        let f = |x: f64| 1.0 + 0.5 * x.cos() - 0.2 * (3.0 * x).cos();
        let g1 = CollocationGrid::new(16).unwrap();
        let g2 = CollocationGrid::new(64).unwrap();
        let v1: Vec<f64> = g1.nodes().iter().map(|&x| f(x)).collect();
        let v2 = g1.resample(&v1, &g2).unwrap();
        let expect: Vec<f64> = g2.nodes().iter().map(|&x| f(x)).collect();
        assert!(max_diff(&v2, &expect) < 1e-14);
        assert!((g1.interpolate(&v1, 0.0).unwrap() - f(0.0)).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn transform_and_matrix_routes_agree(values in proptest::collection::vec(-2.0f64..2.0, 48)) {
            let g = CollocationGrid::new(48).unwrap();
            let a = g.apply_k(&values).unwrap();
            let b = g.apply_k_matrix(&values).unwrap();
            prop_assert!(max_diff(&a, &b) < 1e-12);
        }

        #[test]
        fn synthesis_inverts_dct(values in proptest::collection::vec(-5.0f64..5.0, 40)) {
            let g = CollocationGrid::new(40).unwrap();
            let back = g.synthesize(&g.dct_coefficients(&values).unwrap()).unwrap();
            prop_assert!(max_diff(&back, &values) < 1e-13);
        }
    }
}
