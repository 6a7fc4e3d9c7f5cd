//! Spectral problem of a pinned-pinned Euler–Bernoulli beam carrying a point
//! mass on a spring at `x = l0`.
//!
//! Eigenfunctions are piecewise: `a1 sin(mu x) + b1 sinh(mu x)` on `[0, l0]` and
//! `a2 sin(mu (l - x)) + b2 sinh(mu (l - x))` on `[l0, l]`, so `W = W'' = 0` at
//! both ends holds identically. The hyperbolic coefficients are stored in the
//! exponent-scaled form `h1 = b1 cosh(mu l0)`, `h2 = b2 cosh(mu (l - l0))`, which
//! keeps every stored number of order one for any `mu`.

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::quadrature;

/// Physical constants of the beam-body plant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    /// Linear mass density (kg/m).
    pub rho: f64,
    /// Bending stiffness (N m^2).
    pub ei: f64,
    /// Attached mass (kg).
    pub mass: f64,
    /// Spring stiffness (N/m).
    pub spring: f64,
    /// Beam length (m).
    pub length: f64,
    /// Attachment abscissa (m).
    pub attach: f64,
}

impl BeamParams {
    pub fn new(rho: f64, ei: f64, mass: f64, spring: f64, length: f64, attach: f64) -> Result<Self> {
        let p = BeamParams {
            rho,
            ei,
            mass,
            spring,
            length,
            attach,
        };
        p.validate()?;
        Ok(p)
    }

    /// Stand-in material constants (not measured values) on the reference
    /// geometry `l = 1.875 m`, `l0 = 1.378 m`.
    pub fn stand_in() -> Self {
        BeamParams {
            rho: 0.518,
            ei: 4.9,
            mass: 0.1,
            spring: 10.0,
            length: 1.875,
            attach: 1.378,
        }
    }

    /// Bare pinned-pinned beam (`m = kappa = 0`), whose modes are `sin(j pi x / l)`.
    pub fn pinned_pinned(rho: f64, ei: f64, length: f64, attach: f64) -> Result<Self> {
        Self::new(rho, ei, 0.0, 0.0, length, attach)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [("rho", self.rho), ("ei", self.ei), ("length", self.length)];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        for (name, v) in [("mass", self.mass), ("spring", self.spring)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(self.attach > 0.0 && self.attach < self.length) {
            return Err(Error::param(
                "attach",
                format!("must lie strictly inside (0, {}), got {}", self.length, self.attach),
            ));
        }
        Ok(())
    }

    /// `sqrt(EI / rho)`, so that `omega = mu^2 * wave_factor`.
    pub fn wave_factor(&self) -> f64 {
        (self.ei / self.rho).sqrt()
    }

    pub fn omega_of(&self, mu: f64) -> f64 {
        mu * mu * self.wave_factor()
    }

    /// Jump coefficient `(kappa - omega^2 m) / EI` of the shear condition.
    pub fn jump_coefficient(&self, mu: f64) -> f64 {
        let omega = self.omega_of(mu);
        (self.spring - omega * omega * self.mass) / self.ei
    }
}

/// `sinh(x) * exp(-x)` for `x >= 0`, accurate near zero.
fn sinh_scaled(x: f64) -> f64 {
    -0.5 * (-2.0 * x).exp_m1()
}

/// Characteristic function of the beam-body spectral problem, unscaled.
///
/// Sum of the mass group, the bare-beam term `-sin(mu l) sinh(mu l) / mu^2`
/// and the spring group. Overflows for `mu l` beyond roughly 700.
pub fn char_fn(mu: f64, params: &BeamParams) -> Result<f64> {
    let l = params.length;
    let p = mu * params.attach;
    let q = mu * (l - params.attach);
    let sl = (mu * l).sin();
    // (cosh mu l - cosh mu(l - 2 l0)) sin mu l - (cos mu(l - 2 l0) - cos mu l) sinh mu l,
    // rewritten as a product form that does not cancel for small mu.
    let x = 2.0 * (p.sinh() * q.sinh() * sl - p.sin() * q.sin() * (mu * l).sinh());
    let mass_group = -params.mass / (4.0 * mu * params.rho) * x;
    let beam = -sl * (mu * l).sinh() / (mu * mu);
    let spring_group = params.spring / (4.0 * params.ei * mu.powi(5)) * x;
    let v = mass_group + beam + spring_group;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NumericRange { mu })
    }
}

/// `char_fn(mu) * 4 mu^2 exp(-mu l) exp(-mu |l - 2 l0|)`; finite for all `mu > 0`.
pub fn char_fn_scaled(mu: f64, params: &BeamParams) -> f64 {
    let l = params.length;
    let p = mu * params.attach;
    let q = mu * (l - params.attach);
    let sl = (mu * l).sin();
    let ed = (-mu * (l - 2.0 * params.attach).abs()).exp();
    let x = 2.0 * (sinh_scaled(p) * sinh_scaled(q) * sl - p.sin() * q.sin() * sinh_scaled(mu * l));
    let coupling = params.spring / (params.ei * mu.powi(3)) - params.mass * mu / params.rho;
    ed * (coupling * x - 4.0 * sl * sinh_scaled(mu * l))
}

/// Side of the attachment point for one-sided third derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// One eigenpair of the spectral problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub index: usize,
    pub mu: f64,
    pub omega: f64,
    /// `||W||^2` in the mass-weighted inner product.
    pub norm_sq: f64,
    coeffs: ScaledCoeffs,
    params: BeamParams,
}

/// `(a1, h1, a2, h2)` with `h1 = b1 cosh(mu l0)` and `h2 = b2 cosh(mu (l - l0))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledCoeffs {
    pub a1: f64,
    pub h1: f64,
    pub a2: f64,
    pub h2: f64,
}

impl ScaledCoeffs {
    /// Original coefficients `(a1, b1, a2, b2)`; hyperbolic ones underflow to
    /// zero once `cosh` overflows.
    pub fn unscaled(&self, mu: f64, params: &BeamParams) -> [f64; 4] {
        let c1 = (mu * params.attach).cosh();
        let c2 = (mu * (params.length - params.attach)).cosh();
        [self.a1, self.h1 / c1, self.a2, self.h2 / c2]
    }
}

impl Mode {
    pub fn coeffs(&self) -> ScaledCoeffs {
        self.coeffs
    }

    /// `(a1, b1)` on `[0, l0]`.
    pub fn coeffs_left(&self) -> (f64, f64) {
        let c = self.coeffs.unscaled(self.mu, &self.params);
        (c[0], c[1])
    }

    /// `(a2, b2)` on `[l0, l]`, in the variable `l - x`.
    pub fn coeffs_right(&self) -> (f64, f64) {
        let c = self.coeffs.unscaled(self.mu, &self.params);
        (c[2], c[3])
    }

    pub fn params(&self) -> &BeamParams {
        &self.params
    }

    /// `W^(order)(x)`. Third derivatives at `l0` need [`Mode::eval_sided`].
    pub fn eval(&self, x: f64, order: u8) -> Result<f64> {
        if order == 3 && x == self.params.attach {
            return Err(Error::Ambiguous { x });
        }
        let side = if x <= self.params.attach {
            Side::Left
        } else {
            Side::Right
        };
        self.eval_sided(x, order, side)
    }

    /// `W^(order)(x)` using the piece on `side`. `side` only matters at `x = l0`.
    pub fn eval_sided(&self, x: f64, order: u8, side: Side) -> Result<f64> {
        let l = self.params.length;
        if !(0.0..=l).contains(&x) {
            return Err(Error::Domain { x, length: l });
        }
        if order > 3 {
            return Err(Error::param("derivative", format!("order must be 0..=3, got {order}")));
        }
        let side = if x < self.params.attach {
            Side::Left
        } else if x > self.params.attach {
            Side::Right
        } else {
            side
        };
        Ok(match side {
            Side::Left => self.left_piece(x, order),
            Side::Right => self.right_piece(x, order),
        })
    }

    fn left_piece(&self, x: f64, order: u8) -> f64 {
        piece_value(self.mu, self.coeffs.a1, self.coeffs.h1, x, self.params.attach, order)
    }

    fn right_piece(&self, x: f64, order: u8) -> f64 {
        let y = self.params.length - x;
        let anchor = self.params.length - self.params.attach;
        let v = piece_value(self.mu, self.coeffs.a2, self.coeffs.h2, y, anchor, order);
        if order % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

/// Derivative of `a sin(mu y) + h sinh(mu y) / cosh(mu y0)` with respect to `y`,
/// for `0 <= y <= y0`.
fn piece_value(mu: f64, a: f64, h: f64, y: f64, y0: f64, order: u8) -> f64 {
    let e1 = (mu * (y - y0)).exp();
    let e2 = (-mu * (y + y0)).exp();
    let den = 1.0 + (-2.0 * mu * y0).exp();
    let sh = (e1 - e2) / den;
    let ch = (e1 + e2) / den;
    let (s, c) = (mu * y).sin_cos();
    let (trig, hyp) = match order {
        0 => (s, sh),
        1 => (c, ch),
        2 => (-s, sh),
        _ => (-c, ch),
    };
    mu.powi(order as i32) * (a * trig + h * hyp)
}

/// Matching system at `l0` in the scaled unknowns `(a1, h1, a2, h2)`: continuity
/// of `W`, `W'`, `W''` and the shear jump. Rows are normalized to unit scale.
pub fn matching_matrix(mu: f64, params: &BeamParams) -> Matrix4<f64> {
    let p = mu * params.attach;
    let q = mu * (params.length - params.attach);
    let (sp, cp) = p.sin_cos();
    let (sq, cq) = q.sin_cos();
    let tp = p.tanh();
    let tq = q.tanh();
    let k = params.jump_coefficient(mu) / mu.powi(3);
    let row_scale = 1.0 / k.abs().max(1.0);
    Matrix4::new(
        sp, tp, -sq, -tq,
        cp, 1.0, cq, 1.0,
        -sp, tp, sq, -tq,
        (-cp - k * sp) * row_scale, (1.0 - k * tp) * row_scale, -cq * row_scale, row_scale,
    )
}

const NOT_EIGEN_RATIO: f64 = 1e-6;
const DEGENERATE_RATIO: f64 = 1e-6;

/// Null vector of the matching system at a root `mu`, normalized so that the
/// largest unscaled coefficient equals `+1` (ties go to the lowest index).
pub fn solve_eigenfunction(mu: f64, params: &BeamParams) -> Result<ScaledCoeffs> {
    let mat = matching_matrix(mu, params);
    let svd = mat.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let s_max = svd.singular_values[order[3]];
    let s_min = svd.singular_values[order[0]];
    let ratio = s_min / s_max;
    if ratio > NOT_EIGEN_RATIO {
        return Err(Error::NotAnEigenvalue { mu, ratio });
    }
    if svd.singular_values[order[1]] / s_max < DEGENERATE_RATIO {
        return Err(Error::DegenerateMode { mu });
    }
    let v: Vector4<f64> = v_t.row(order[0]).transpose();
    let scaled = ScaledCoeffs {
        a1: v[0],
        h1: v[1],
        a2: v[2],
        h2: v[3],
    };
    let raw = scaled.unscaled(mu, params);
    let peak = raw.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let pivot = raw
        .iter()
        .copied()
        .find(|c| c.abs() >= peak * (1.0 - 1e-9))
        .expect("peak attained");
    Ok(ScaledCoeffs {
        a1: v[0] / pivot,
        h1: v[1] / pivot,
        a2: v[2] / pivot,
        h2: v[3] / pivot,
    })
}

/// Residuals of the four matching conditions at `l0`:
/// `[W jump, W' jump, W'' jump, shear jump]`. Each is divided by its natural
/// scale `mu^d` (the largest coefficient is 1), the shear one by `max(mu^3, |K|)`.
pub fn matching_residuals(mode: &Mode) -> [f64; 4] {
    let x = mode.params.attach;
    let mu = mode.mu;
    let gap = |d: u8| (mode.left_piece(x, d) - mode.right_piece(x, d)).abs();
    let k = mode.params.jump_coefficient(mu);
    let shear = (mode.left_piece(x, 3) - mode.right_piece(x, 3) - k * mode.left_piece(x, 0)).abs();
    [
        gap(0),
        gap(1) / mu,
        gap(2) / (mu * mu),
        shear / mu.powi(3).max(k.abs()),
    ]
}

fn bisect(params: &BeamParams, mut lo: f64, mut hi: f64, mut f_lo: f64) -> f64 {
    while hi - lo > 1e-13 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = char_fn_scaled(mid, params);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimum of `|f|` on `[a, b]`.
fn min_abs(params: &BeamParams, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let f = |x| char_fn_scaled(x, params).abs();
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// First scan point of the root search.
pub const SCAN_START: f64 = 1e-6;

/// The `n` smallest positive roots of the scaled characteristic function,
/// by sign-change scanning plus bisection.
///
/// The scan step is `min(pi / (4 l), half the smallest gap found so far)`.
pub fn find_roots(params: &BeamParams, n: usize) -> Result<Vec<f64>> {
    params.validate()?;
    if n == 0 {
        return Err(Error::param("n", "at least one mode is required"));
    }
    let l = params.length;
    let base_step = std::f64::consts::PI / (4.0 * l);
    // Rank-two perturbation of the pinned-pinned problem: mu_j <= (j + 2) pi / l.
    let mu_end = (n as f64 + 4.0) * std::f64::consts::PI / l;

    let mut roots: Vec<f64> = Vec::with_capacity(n);
    let mut step = base_step;
    let mut x0 = SCAN_START;
    let mut f0 = char_fn_scaled(x0, params);
    let mut prev: Option<(f64, f64)> = None;
    while roots.len() < n {
        let x1 = x0 + step;
        if x1 > mu_end {
            return Err(Error::SearchRange {
                start: SCAN_START,
                end: mu_end,
                found: roots.len(),
                wanted: n,
            });
        }
        let f1 = char_fn_scaled(x1, params);
        let crossed = if f1 == 0.0 {
            roots.push(x1);
            true
        } else if f0 != 0.0 && (f0 > 0.0) != (f1 > 0.0) {
            roots.push(bisect(params, x0, x1, f0));
            true
        } else {
            if let Some((xp, fp)) = prev {
                if f0.abs() < fp.abs() && f0.abs() < f1.abs() {
                    let (xm, fm) = min_abs(params, xp, x1);
                    if fm <= 1e-12 * fp.abs().max(f1.abs()) {
                        return Err(Error::DegenerateSpectrum { mu: xm });
                    }
                }
            }
            false
        };
        if crossed {
            let mut min_gap = roots[0];
            for w in roots.windows(2) {
                min_gap = min_gap.min(w[1] - w[0]);
            }
            step = base_step.min(0.5 * min_gap);
            prev = None;
        } else {
            prev = Some((x0, f0));
        }
        x0 = x1;
        f0 = f1;
    }
    Ok(roots)
}

/// The `n` lowest modes, with eigenfunctions and norms filled in.
pub fn find_modes(params: &BeamParams, n: usize) -> Result<Vec<Mode>> {
    let roots = find_roots(params, n)?;
    roots
        .into_iter()
        .enumerate()
        .map(|(i, mu)| build_mode(params, i + 1, mu))
        .collect()
}

/// Builds a mode from a known root.
pub fn build_mode(params: &BeamParams, index: usize, mu: f64) -> Result<Mode> {
    let coeffs = solve_eigenfunction(mu, params)?;
    let mut mode = Mode {
        index,
        mu,
        omega: params.omega_of(mu),
        norm_sq: 0.0,
        coeffs,
        params: *params,
    };
    mode.norm_sq = inner_product(&mode, &mode, params)?;
    Ok(mode)
}

/// `rho * int W_i W_j dx + m W_i(l0) W_j(l0)`, integrated separately on each
/// side of the attachment point.
pub fn inner_product(a: &Mode, b: &Mode, params: &BeamParams) -> Result<f64> {
    let l0 = params.attach;
    // Max-coefficient normalization bounds |W| by ~2, so rho * l sets the scale.
    let tol = 1e-13 * params.rho * params.length;
    let left = quadrature::integrate(|x| a.left_piece(x, 0) * b.left_piece(x, 0), 0.0, l0, 0.5 * tol)?;
    let right = quadrature::integrate(
        |x| a.right_piece(x, 0) * b.right_piece(x, 0),
        l0,
        params.length,
        0.5 * tol,
    )?;
    Ok(params.rho * (left + right) + params.mass * a.left_piece(l0, 0) * b.left_piece(l0, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn oracle_beam() -> BeamParams {
        BeamParams::pinned_pinned(2.0, 1.0, 1.0, 0.37).unwrap()
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(BeamParams::new(0.0, 1.0, 0.0, 0.0, 1.0, 0.5).is_err());
        assert!(BeamParams::new(1.0, 1.0, -1.0, 0.0, 1.0, 0.5).is_err());
        assert!(BeamParams::new(1.0, 1.0, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(BeamParams::new(1.0, 1.0, 0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn bare_beam_roots_are_zeros_of_char_fn() {
        let p = oracle_beam();
        for j in 1..=3 {
            let mu = j as f64 * PI / p.length;
            assert!(char_fn_scaled(mu, &p).abs() < 1e-10, "j = {j}");
            // -sin(mu l) sinh(mu l) / mu^2 is the whole function here
            assert!(char_fn(mu, &p).unwrap().abs() < 1e-10);
        }
    }

    #[test]
    fn unscaled_overflow_is_reported() {
        let p = BeamParams::stand_in();
        assert!(matches!(char_fn(600.0, &p), Err(Error::NumericRange { .. })));
        assert!(char_fn_scaled(600.0, &p).is_finite());
    }

    #[test]
    fn scaled_and_unscaled_agree_in_sign_and_ratio() {
        let p = BeamParams::stand_in();
        for &mu in &[0.3, 1.1, 2.7, 5.9, 13.0] {
            let raw = char_fn(mu, &p).unwrap();
            let scale = 4.0 * mu * mu * (-mu * p.length).exp() * (-mu * (p.length - 2.0 * p.attach).abs()).exp();
            let scaled = char_fn_scaled(mu, &p);
            assert!((raw * scale - scaled).abs() <= 1e-12 * scaled.abs().max(1e-300) + 1e-15, "mu = {mu}");
        }
    }

    #[test]
    fn bare_beam_modes_are_sines() {
        let p = BeamParams::pinned_pinned(1.0, 1.0, 1.0, 0.41).unwrap();
        let modes = find_modes(&p, 3).unwrap();
        for (j, m) in modes.iter().enumerate() {
            let jf = (j + 1) as f64;
            assert!((m.mu - jf * PI).abs() < 1e-9 * jf * PI);
            let (a1, b1) = m.coeffs_left();
            let (_, b2) = m.coeffs_right();
            assert!((a1 - 1.0).abs() < 1e-8);
            assert!(b1.abs() < 1e-8 && b2.abs() < 1e-8);
        }
        assert!((modes[0].eval(0.5, 0).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn boundary_conditions_hold() {
        let p = BeamParams::stand_in();
        for m in find_modes(&p, 5).unwrap() {
            assert_eq!(m.eval(0.0, 0).unwrap(), 0.0);
            assert!(m.eval(p.length, 0).unwrap().abs() < 1e-15);
            assert!(m.eval(p.length, 2).unwrap().abs() < 1e-12 * m.mu * m.mu);
            assert!(m.eval(0.0, 2).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn eval_errors() {
        let p = BeamParams::stand_in();
        let m = &find_modes(&p, 1).unwrap()[0];
        assert!(matches!(m.eval(-0.1, 0), Err(Error::Domain { .. })));
        assert!(matches!(m.eval(p.length + 1e-9, 1), Err(Error::Domain { .. })));
        assert!(matches!(m.eval(p.attach, 3), Err(Error::Ambiguous { .. })));
        assert!(m.eval_sided(p.attach, 3, Side::Left).is_ok());
        assert!(m.eval(p.attach, 2).is_ok());
    }

    #[test]
    fn non_root_is_rejected() {
        let p = BeamParams::stand_in();
        let roots = find_roots(&p, 2).unwrap();
        let mid = 0.5 * (roots[0] + roots[1]);
        assert!(matches!(
            solve_eigenfunction(mid, &p),
            Err(Error::NotAnEigenvalue { .. })
        ));
    }

    #[test]
    fn first_default_mode_moves_the_body() {
        let p = BeamParams::stand_in();
        let m = &find_modes(&p, 1).unwrap()[0];
        assert!(m.eval(p.attach, 0).unwrap().abs() > 1e-3);
        assert_eq!(m.index, 1);
        assert!(m.omega > 0.0);
    }

    #[test]
    fn matching_conditions_hold_for_default_modes() {
        let p = BeamParams::stand_in();
        for m in find_modes(&p, 20).unwrap() {
            for (k, r) in matching_residuals(&m).iter().enumerate() {
                assert!(*r < 1e-8, "mode {} condition {k}: {r:e}", m.index);
            }
        }
    }

    #[test]
    fn pinned_pinned_norm_is_half_rho_l() {
        let p = BeamParams::pinned_pinned(2.0, 1.0, 1.0, 0.3).unwrap();
        let m = &find_modes(&p, 1).unwrap()[0];
        assert!((m.norm_sq - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_modes_is_an_error() {
        assert!(find_roots(&BeamParams::stand_in(), 0).is_err());
    }
}
