//! The multiplier symbol `tanh(ξ)/ξ`, its convolution kernel on the line,
//! the 2π-periodization `K_p`, and numerical certificates for their
//! positivity, normalization and complete monotonicity.
//!
//! The kernel is the inverse Fourier transform of the symbol,
//! `K(x) = (1/π) log|coth(πx/4)|`, normalized so that `‖K‖_{L¹} = 1`.
//! Near the origin `K(x) = -(1/π) log|πx/4| + K_reg(x)` with
//! `K_reg(x) = πx²/48 + O(x⁴)`.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::quadrature::integrate;

const TWO_PI: f64 = 2.0 * PI;

/// Lower end of the log-spaced grid used to certify `K` on `(0, ∞)`.
pub const CERT_LINE_MIN: f64 = 1e-3;
/// Upper end of the log-spaced grid used to certify `K` on `(0, ∞)`.
pub const CERT_LINE_MAX: f64 = 20.0;
/// Distance kept from `0` and `π` when certifying `K_p` on the half-period.
pub const CERT_PERIODIC_MARGIN: f64 = 0.05;

/// Truncation parameters for the kernel evaluations and checks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    /// Number of images `L` on each side in the periodization sum.
    pub periodization_range: usize,
    /// Cutoff `X` for the oscillatory inverse-Fourier integral.
    pub quadrature_cutoff: f64,
    /// Slack for sign tests on divided differences.
    pub tolerance: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            periodization_range: 8,
            quadrature_cutoff: 200.0,
            tolerance: 1e-9,
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.periodization_range < 1 {
            return Err(Error::InvalidArgument("periodization_range must be >= 1".into()));
        }
        if !(self.quadrature_cutoff > 0.0) {
            return Err(Error::InvalidArgument("quadrature_cutoff must be > 0".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// The multiplier symbol `tanh(ξ)/ξ`, with the value 1 at `ξ = 0`.
pub fn symbol(xi: f64) -> f64 {
    if xi == 0.0 {
        1.0
    } else {
        xi.tanh() / xi
    }
}

/// `K(x) = (1/π) log|coth(πx/4)|`.
pub fn kernel(x: f64) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::SingularPoint { x });
    }
    let z = 0.25 * PI * x.abs();
    // log coth z = log(1 + 2/(e^{2z} - 1)), accurate in the exponential tail.
    Ok((2.0 / (2.0 * z).exp_m1()).ln_1p() / PI)
}

/// `z coth z - 1`, with a series near the origin to avoid cancellation.
fn z_coth_z_minus_one(z: f64) -> f64 {
    if z.abs() < 0.05 {
        let z2 = z * z;
        // z²/3 - z⁴/45 + 2z⁶/945 - z⁸/4725 + 2z¹⁰/93555
        z2 * (1.0 / 3.0
            + z2 * (-1.0 / 45.0 + z2 * (2.0 / 945.0 + z2 * (-1.0 / 4725.0 + z2 * (2.0 / 93555.0)))))
    } else {
        z / z.tanh() - 1.0
    }
}

/// Regular part `K_reg(x) = K(x) + (1/π) log|πx/4|`, continuous with value 0 at the origin.
pub fn kernel_reg(x: f64) -> f64 {
    let z = 0.25 * PI * x.abs();
    if z == 0.0 {
        return 0.0;
    }
    z_coth_z_minus_one(z).ln_1p() / PI
}

/// The logarithmic singular part `-(1/π) log|πx/4|` of both `K` and `K_p`.
pub fn singular_part(x: f64) -> f64 {
    -(0.25 * PI * x.abs()).ln() / PI
}

/// `∫_0^a -(1/π) log(πx/4) dx`.
pub fn singular_part_integral(a: f64) -> f64 {
    -a * ((0.25 * PI * a).ln() - 1.0) / PI
}

/// Reduces `x` into `(-π, π]`.
fn reduce(x: f64) -> f64 {
    let r = x - TWO_PI * (x / TWO_PI).round();
    if r <= -PI {
        r + TWO_PI
    } else {
        r
    }
}

/// Periodized kernel `K_p(x) = Σ_{|k| ≤ L} K(x + 2πk)`.
pub fn periodized_kernel(x: f64, spec: &KernelSpec) -> Result<f64> {
    let r = reduce(x);
    if r == 0.0 {
        return Err(Error::SingularPoint { x });
    }
    let mut sum = kernel(r)?;
    sum += image_sum(r, spec);
    Ok(sum)
}

/// `Σ_{0 < |k| ≤ L} K(r + 2πk)` for `r ∈ (-π, π]`; never singular there.
fn image_sum(r: f64, spec: &KernelSpec) -> f64 {
    let mut sum = 0.0;
    // smallest images last
    for k in (1..=spec.periodization_range).rev() {
        let shift = TWO_PI * k as f64;
        sum += kernel(r + shift).unwrap_or(0.0) + kernel(r - shift).unwrap_or(0.0);
    }
    sum
}

/// Regular part of the periodized kernel, `K_p(x) + (1/π) log|πx/4|` on `(-π, π]`.
pub fn periodized_kernel_reg(x: f64, spec: &KernelSpec) -> f64 {
    let r = reduce(x);
    kernel_reg(r) + image_sum(r, spec)
}

/// `‖K‖_{L¹(ℝ)}` with the logarithmic part near the origin integrated exactly
/// and the integral truncated at `±cutoff`.
pub fn kernel_l1_norm(cutoff: f64) -> f64 {
    let split = cutoff.min(1.0);
    let near = integrate(kernel_reg, 0.0, split, 1e-15) + singular_part_integral(split);
    let far = if cutoff > split {
        // unit panels keep the exponential tail well resolved
        let mut acc = 0.0;
        let mut a = split;
        while a < cutoff {
            let b = (a + 1.0).min(cutoff);
            acc += integrate(|x| kernel(x).unwrap_or(0.0), a, b, 1e-16);
            a = b;
        }
        acc
    } else {
        0.0
    };
    2.0 * (near + far)
}

/// `‖K_p‖_{L¹(-π, π)}`, logarithmic part integrated exactly.
pub fn periodized_l1_norm(spec: &KernelSpec) -> f64 {
    let regular = integrate(|x| periodized_kernel_reg(x, spec), 0.0, PI, 1e-15);
    2.0 * (regular + singular_part_integral(PI))
}

/// Cosine integral `Ci(z)` for `z ≥ 16` via its asymptotic auxiliary series.
fn cosine_integral_large(z: f64) -> f64 {
    debug_assert!(z >= 16.0);
    let inv2 = 1.0 / (z * z);
    // f(z) = (1/z) Σ (-1)^k (2k)!/z^{2k},  g(z) = (1/z²) Σ (-1)^k (2k+1)!/z^{2k}
    let mut f = 0.0;
    let mut g = 0.0;
    let mut tf: f64 = 1.0;
    let mut tg: f64 = 1.0;
    let mut prev = f64::INFINITY;
    for k in 0..40 {
        let mag = tf.abs().max(tg.abs());
        if mag > prev || mag < 1e-18 {
            break;
        }
        prev = mag;
        f += tf;
        g += tg;
        let k = k as f64;
        tf *= -(2.0 * k + 1.0) * (2.0 * k + 2.0) * inv2;
        tg *= -(2.0 * k + 2.0) * (2.0 * k + 3.0) * inv2;
    }
    (f / z) * z.sin() - (g * inv2) * z.cos()
}

/// Numerical inverse Fourier transform of the symbol,
/// `(1/π) ∫_0^∞ tanh(ξ)/ξ cos(ξx) dξ`.
///
/// Integrated over half-period panels up to the cutoff; the tail is
/// `-Ci(Xx)/π` up to terms of size `e^{-2X}`. Independent of the closed form.
pub fn inverse_fourier_kernel(x: f64, spec: &KernelSpec) -> Result<f64> {
    if x == 0.0 {
        return Err(Error::SingularPoint { x });
    }
    let x = x.abs();
    let panel = PI / x;
    let cutoff = spec.quadrature_cutoff.max(16.0 / x);
    let panels = (cutoff / panel).ceil() as usize;
    let cutoff = panels as f64 * panel;
    let mut body = 0.0;
    for j in 0..panels {
        let a = j as f64 * panel;
        body += integrate(|xi| symbol(xi) * (xi * x).cos(), a, a + panel, 1e-14);
    }
    Ok((body - cosine_integral_large(cutoff * x)) / PI)
}

/// Result of the divided-difference sign test for one derivative order.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderCheck {
    pub order: usize,
    /// `min (-1)^n Δⁿ K` over the line grid.
    pub line_worst: f64,
    /// `min (-1)^n Δⁿ K_p` over the half-period grid.
    pub periodic_worst: f64,
    pub line_pass: bool,
    pub periodic_pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationReport {
    pub spec: KernelSpec,
    pub grid_size: usize,
    pub orders: Vec<OrderCheck>,
}

impl CertificationReport {
    pub fn all_pass(&self) -> bool {
        self.orders.iter().all(|o| o.line_pass && o.periodic_pass)
    }
}

impl fmt::Display for CertificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "complete monotonicity certificate (grid {}, tolerance {:e}, images L={})",
            self.grid_size, self.spec.tolerance, self.spec.periodization_range
        )?;
        writeln!(
            f,
            "  K   on log-grid [{CERT_LINE_MIN}, {CERT_LINE_MAX}]; K_p on [{CERT_PERIODIC_MARGIN}, pi-{CERT_PERIODIC_MARGIN}]"
        )?;
        for o in &self.orders {
            writeln!(
                f,
                "  order {}: K {} (min {:+.3e})  K_p {} (min {:+.3e})",
                o.order,
                pass_str(o.line_pass),
                o.line_worst,
                pass_str(o.periodic_pass),
                o.periodic_worst
            )?;
        }
        write!(f, "  overall: {}", pass_str(self.all_pass()))
    }
}

pub(crate) fn pass_str(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Newton divided differences of orders `0..=max_order`; row `n` has `len - n` entries.
pub fn divided_differences(xs: &[f64], ys: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let mut table = vec![ys.to_vec()];
    for n in 1..=max_order {
        let prev = &table[n - 1];
        if prev.len() < 2 {
            break;
        }
        let next = (0..prev.len() - 1)
            .map(|i| (prev[i + 1] - prev[i]) / (xs[i + n] - xs[i]))
            .collect();
        table.push(next);
    }
    table
}

fn worst_signed(table: &[Vec<f64>], order: usize) -> f64 {
    let sign = if order.is_multiple_of(2) { 1.0 } else { -1.0 };
    table[order]
        .iter()
        .map(|d| sign * d)
        .fold(f64::INFINITY, f64::min)
}

/// Checks `(-1)^n Δⁿ ≥ -tolerance` for `n = 0..=max_order` for `K` on a
/// log-spaced grid and for `K_p` on a uniform grid inside the half-period.
pub fn certify_complete_monotonicity(
    spec: &KernelSpec,
    max_order: usize,
    grid_size: usize,
) -> Result<CertificationReport> {
    spec.validate()?;
    if max_order < 1 {
        return Err(Error::InvalidArgument("max_order must be >= 1".into()));
    }
    if grid_size < max_order + 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be >= max_order + 2 = {}",
            max_order + 2
        )));
    }
    let ratio = (CERT_LINE_MAX / CERT_LINE_MIN).ln() / (grid_size - 1) as f64;
    let line_x: Vec<f64> = (0..grid_size)
        .map(|i| CERT_LINE_MIN * (ratio * i as f64).exp())
        .collect();
    let line_y = line_x.iter().map(|&x| kernel(x)).collect::<Result<Vec<_>>>()?;

    let lo = CERT_PERIODIC_MARGIN;
    let hi = PI - CERT_PERIODIC_MARGIN;
    let per_x: Vec<f64> = (0..grid_size)
        .map(|i| lo + (hi - lo) * i as f64 / (grid_size - 1) as f64)
        .collect();
    let per_y = per_x
        .iter()
        .map(|&x| periodized_kernel(x, spec))
        .collect::<Result<Vec<_>>>()?;

    let line_table = divided_differences(&line_x, &line_y, max_order);
    let per_table = divided_differences(&per_x, &per_y, max_order);
    let orders = (0..=max_order)
        .map(|n| {
            let line_worst = worst_signed(&line_table, n);
            let periodic_worst = worst_signed(&per_table, n);
            OrderCheck {
                order: n,
                line_worst,
                periodic_worst,
                line_pass: line_worst >= -spec.tolerance,
                periodic_pass: periodic_worst >= -spec.tolerance,
            }
        })
        .collect();
    Ok(CertificationReport {
        spec: *spec,
        grid_size,
        orders,
    })
}
