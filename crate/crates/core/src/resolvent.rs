//! Resolvent `(A_hat - lambda I)^{-1}` of the error generator on a
//! truncation, via the `r x r` matrix
//! `M_sp = lambda gamma_p sum_i c_si c_pi / (lambda^2 + omega_i^2) + delta_sp`,
//! together with its Hilbert–Schmidt diagnostics.
//!
//! Nothing here is used for time integration.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::modal::{linear_fit, ModalSystem};
use crate::observer::{ErrorState, ModalState};

/// Shift sweep spanning the small-`lambda` regime.
pub const DEFAULT_LAMBDAS: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// Reciprocal condition number below which `M` counts as singular.
const SINGULAR_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ResolventContext {
    pub lambda: f64,
    pub m: DMatrix<f64>,
    pub m_inv: DMatrix<f64>,
    pub truncation: usize,
    /// 2-norm condition number of `M`.
    pub condition: f64,
}

impl ResolventContext {
    /// `sum_{s,p} gamma_s M^{-1}_sp c_sj c_pi` as an `N x N` matrix.
    pub fn coupling(&self, system: &ModalSystem) -> DMatrix<f64> {
        let c1 = system.c1();
        let weighted = DMatrix::from_fn(c1.nrows(), c1.ncols(), |s, j| system.gammas()[s] * c1[(s, j)]);
        weighted.transpose() * &self.m_inv * c1
    }
}

pub fn build_context(system: &ModalSystem, lambda: f64) -> Result<ResolventContext> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", format!("shift must be > 0, got {lambda}")));
    }
    let c1 = system.c1();
    let r = c1.nrows();
    let gammas = system.gammas();
    let weights: Vec<f64> = system.omegas().iter().map(|w| 1.0 / (lambda * lambda + w * w)).collect();
    let m = DMatrix::from_fn(r, r, |s, p| {
        let series: f64 = (0..c1.ncols()).map(|i| c1[(s, i)] * c1[(p, i)] * weights[i]).sum();
        lambda * gammas[p] * series + if s == p { 1.0 } else { 0.0 }
    });
    let sv = m.singular_values();
    let (s_max, s_min) = (sv.max(), sv.min());
    if s_min.partial_cmp(&(SINGULAR_RCOND * s_max)) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::ShiftTooLarge { lambda });
    }
    let m_inv = m.clone().lu().try_inverse().ok_or(Error::ShiftTooLarge { lambda })?;
    Ok(ResolventContext {
        lambda,
        m,
        m_inv,
        truncation: system.n_modes(),
        condition: s_max / s_min,
    })
}

/// Solves `(A_hat - lambda I)(Delta, delta) = rhs` through the component
/// formulas, with `phi = -M^{-1} sum_i c_i (lambda Delta_bar_i + omega_i delta_bar_i) / (lambda^2 + omega_i^2)`.
pub fn resolvent_apply(ctx: &ResolventContext, system: &ModalSystem, rhs: &ErrorState) -> Result<ErrorState> {
    let n = system.n_modes();
    if rhs.dim() != n || ctx.truncation != n {
        return Err(Error::Dimension(format!(
            "rhs has N = {}, context N = {}, system N = {n}",
            rhs.dim(),
            ctx.truncation
        )));
    }
    let lambda = ctx.lambda;
    let omegas = system.omegas();
    let c1 = system.c1();
    let gammas = system.gammas();
    let denom: Vec<f64> = omegas.iter().map(|w| lambda * lambda + w * w).collect();
    let drive: Vec<f64> = (0..n).map(|i| lambda * rhs.xi[i] + omegas[i] * rhs.eta[i]).collect();

    let m_bar = nalgebra::DVector::from_fn(c1.nrows(), |p, _| {
        -(0..n).map(|i| c1[(p, i)] * drive[i] / denom[i]).sum::<f64>()
    });
    let phi = &ctx.m_inv * m_bar;
    let injected: Vec<f64> = (0..n)
        .map(|j| (0..c1.nrows()).map(|s| gammas[s] * c1[(s, j)] * phi[s]).sum())
        .collect();

    let xi = nalgebra::DVector::from_fn(n, |j, _| -(drive[j] + lambda * injected[j]) / denom[j]);
    let eta = nalgebra::DVector::from_fn(n, |j, _| {
        (omegas[j] * rhs.xi[j] - lambda * rhs.eta[j] + omegas[j] * injected[j]) / denom[j]
    });
    ErrorState::new(xi, eta)
}

/// The four `N x N` blocks of the resolvent, acting on `(Delta_bar, delta_bar)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventBlocks {
    pub r1: DMatrix<f64>,
    pub r2: DMatrix<f64>,
    pub r3: DMatrix<f64>,
    pub r4: DMatrix<f64>,
}

impl ResolventBlocks {
    /// `[[R1, R2], [R3, R4]]`.
    pub fn assemble(&self) -> DMatrix<f64> {
        let n = self.r1.nrows();
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&self.r1);
        out.view_mut((0, n), (n, n)).copy_from(&self.r2);
        out.view_mut((n, 0), (n, n)).copy_from(&self.r3);
        out.view_mut((n, n), (n, n)).copy_from(&self.r4);
        out
    }
}

/// Entry formulas for the resolvent blocks, with `G = coupling`:
///
/// * `R1_ji = lambda/(l2 + w_j^2) (lambda/(l2 + w_i^2) G_ji - d_ji)`
/// * `R2_ji = 1/(l2 + w_j^2) (lambda w_i/(l2 + w_i^2) G_ji - w_j d_ji)`
/// * `R3_ji = -(w_j / lambda) R1_ji`
/// * `R4_ji = -1/(l2 + w_j^2) (w_j w_i/(l2 + w_i^2) G_ji + lambda d_ji)`
///
/// where `l2 = lambda^2`. The inner denominator of `R2` carries `w_i`; this
/// is what the component solution gives for the `delta_bar_i` coefficient.
pub fn resolvent_blocks(ctx: &ResolventContext, system: &ModalSystem) -> ResolventBlocks {
    let lambda = ctx.lambda;
    let w = system.omegas();
    let g = ctx.coupling(system);
    let n = system.n_modes();
    let den = |k: usize| lambda * lambda + w[k] * w[k];
    let kron = |j: usize, i: usize| if j == i { 1.0 } else { 0.0 };
    let r1 = DMatrix::from_fn(n, n, |j, i| lambda / den(j) * (lambda / den(i) * g[(j, i)] - kron(j, i)));
    let r2 = DMatrix::from_fn(n, n, |j, i| (lambda * w[i] / den(i) * g[(j, i)] - w[j] * kron(j, i)) / den(j));
    let r3 = DMatrix::from_fn(n, n, |j, i| -(w[j] / lambda) * r1[(j, i)]);
    let r4 = DMatrix::from_fn(n, n, |j, i| -(w[j] * w[i] / den(i) * g[(j, i)] + lambda * kron(j, i)) / den(j));
    ResolventBlocks { r1, r2, r3, r4 }
}

/// Truncated Hilbert–Schmidt estimate
/// `2 sum_{j,i} (1/w_j^2) ((1/w_i^2) G_ji^2 + 2)`, summed literally over both
/// indices; the constant part therefore contributes `4 N sum_j 1/w_j^2`.
pub fn hs_bound(system: &ModalSystem, lambda: f64) -> Result<f64> {
    let ctx = build_context(system, lambda)?;
    let g = ctx.coupling(system);
    let w = system.omegas();
    let n = system.n_modes();
    let mut acc = 0.0;
    for j in 0..n {
        let inv_j = 1.0 / (w[j] * w[j]);
        for i in 0..n {
            acc += inv_j * (g[(j, i)] * g[(j, i)] / (w[i] * w[i]) + 2.0);
        }
    }
    Ok(2.0 * acc)
}

/// Frobenius norm of the assembled blocks.
pub fn hs_norm(blocks: &ResolventBlocks) -> f64 {
    [&blocks.r1, &blocks.r2, &blocks.r3, &blocks.r4]
        .iter()
        .map(|b| b.norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// `||M - I||_2` and `||M^{-1}||_2` over a sweep of shifts.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport {
    /// `(lambda, ||M - I||, ||M^{-1}||)`.
    pub entries: Vec<(f64, f64, f64)>,
    /// `max ||M - I|| / lambda` over the sweep.
    pub k_deviation: f64,
    /// `max (||M^{-1}|| - 1) / lambda` over the sweep.
    pub k_inverse: f64,
    /// `gamma_max sum_i sum_s c_si^2 / omega_i^2`, which bounds `||M - I|| / lambda`.
    pub k_theory: f64,
}

pub fn perturbation_sweep(system: &ModalSystem, lambdas: &[f64]) -> Result<PerturbationReport> {
    let mut entries = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let ctx = build_context(system, lambda)?;
        let r = ctx.m.nrows();
        let dev = (&ctx.m - DMatrix::<f64>::identity(r, r)).singular_values().max();
        let inv = ctx.m_inv.singular_values().max();
        entries.push((lambda, dev, inv));
    }
    let k_deviation = entries.iter().map(|e| e.1 / e.0).fold(0.0, f64::max);
    let k_inverse = entries.iter().map(|e| (e.2 - 1.0) / e.0).fold(f64::NEG_INFINITY, f64::max);
    let gamma_max = system.gammas().iter().copied().fold(0.0, f64::max);
    let c1 = system.c1();
    let k_theory = gamma_max
        * system
            .omegas()
            .iter()
            .enumerate()
            .map(|(i, w)| c1.column(i).norm_squared() / (w * w))
            .sum::<f64>();
    Ok(PerturbationReport {
        entries,
        k_deviation,
        k_inverse,
        k_theory,
    })
}

/// Counting densities `Q[y, y + window) / window` of a frequency sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityReport {
    pub window: f64,
    /// `(window start y, count, density)`.
    pub windows: Vec<(f64, usize, f64)>,
    /// Log-log slope of density against window centre.
    pub fitted_exponent: f64,
    pub decreasing: bool,
}

/// Slope below which the density counts as decaying.
pub const DENSITY_DECAY_SLOPE: f64 = -0.25;

/// Densities over consecutive windows `[k w, (k+1) w)` lying inside
/// `[0, max omega]`. The verdict requires a clearly negative log-log slope
/// and a last window sparser than the first.
pub fn eigenvalue_density(omegas: &[f64], window: f64) -> Result<DensityReport> {
    if omegas.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} frequencies, need at least 10",
            omegas.len()
        )));
    }
    if !(window.is_finite() && window > 0.0) {
        return Err(Error::param("window", format!("must be > 0, got {window}")));
    }
    let top = omegas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let count = (top / window).floor() as usize;
    if count < 2 {
        return Err(Error::InsufficientData(format!(
            "window {window} leaves fewer than two windows below {top}"
        )));
    }
    let windows: Vec<(f64, usize, f64)> = (0..count)
        .map(|k| {
            let y = k as f64 * window;
            let q = omegas.iter().filter(|&&w| w >= y && w < y + window).count();
            (y, q, q as f64 / window)
        })
        .collect();
    let pts: Vec<(f64, f64)> = windows
        .iter()
        .filter(|w| w.1 > 0)
        .map(|w| ((w.0 + 0.5 * window).ln(), w.2.ln()))
        .collect();
    let fitted_exponent = if pts.len() >= 2 { linear_fit(&pts).0 } else { f64::NAN };
    let first = windows.first().expect("count >= 2").2;
    let last = windows.last().expect("count >= 2").2;
    Ok(DensityReport {
        window,
        decreasing: fitted_exponent < DENSITY_DECAY_SLOPE && last < first,
        fitted_exponent,
        windows,
    })
}
