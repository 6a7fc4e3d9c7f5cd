//! Plant, observer and error dynamics of the truncated system, and the
//! quadratic Lyapunov functional `W(e) = sum(Delta_j^2 + delta_j^2)`.
//!
//! State vectors are stacked as `(xi_1..xi_N, eta_1..eta_N)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::modal::{linear_fit, ModalSystem};

/// Observation error `(Delta, delta) = z - z_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorState {
    /// `Delta`, error in the `xi` (scaled displacement) coordinates.
    pub xi: DVector<f64>,
    /// `delta`, error in the `eta` (modal velocity) coordinates.
    pub eta: DVector<f64>,
}

/// Plant or observer state `(xi, eta)` with `xi_j = omega_j q_j`, `eta_j = dq_j/dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub xi: DVector<f64>,
    pub eta: DVector<f64>,
}

/// Common view of the two coordinate pairs.
pub trait ModalState: Clone {
    fn from_parts(xi: DVector<f64>, eta: DVector<f64>) -> Self;
    fn xi(&self) -> &DVector<f64>;
    fn eta(&self) -> &DVector<f64>;

    fn dim(&self) -> usize {
        self.xi().len()
    }

    fn zeros(n: usize) -> Self {
        Self::from_parts(DVector::zeros(n), DVector::zeros(n))
    }

    fn from_stacked(v: &DVector<f64>) -> Self {
        let n = v.len() / 2;
        Self::from_parts(v.rows(0, n).into_owned(), v.rows(n, n).into_owned())
    }

    fn stacked(&self) -> DVector<f64> {
        let n = self.dim();
        DVector::from_fn(2 * n, |i, _| if i < n { self.xi()[i] } else { self.eta()[i - n] })
    }

    fn norm_sq(&self) -> f64 {
        self.xi().norm_squared() + self.eta().norm_squared()
    }
}

macro_rules! modal_state {
    ($t:ty) => {
        impl ModalState for $t {
            fn from_parts(xi: DVector<f64>, eta: DVector<f64>) -> Self {
                Self { xi, eta }
            }
            fn xi(&self) -> &DVector<f64> {
                &self.xi
            }
            fn eta(&self) -> &DVector<f64> {
                &self.eta
            }
        }
    };
}

modal_state!(ErrorState);
modal_state!(PlantState);

impl ErrorState {
    pub fn new(xi: DVector<f64>, eta: DVector<f64>) -> Result<Self> {
        if xi.len() != eta.len() {
            return Err(Error::Dimension(format!("Delta has {} entries, delta {}", xi.len(), eta.len())));
        }
        Ok(ErrorState { xi, eta })
    }

    /// `Delta_j(0) = delta_j(0) = 1 / (j omega_j)`.
    pub fn harmonic_initial(omegas: &DVector<f64>) -> Self {
        let v = DVector::from_fn(omegas.len(), |j, _| 1.0 / ((j + 1) as f64 * omegas[j]));
        ErrorState {
            xi: v.clone(),
            eta: v,
        }
    }
}

/// Time samples with states and the Lyapunov value at each.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub lyapunov: Vec<f64>,
    pub norm_sq: Vec<f64>,
}

impl<S: ModalState> Trajectory<S> {
    fn with_capacity(n: usize) -> Self {
        Trajectory {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            lyapunov: Vec::with_capacity(n),
            norm_sq: Vec::with_capacity(n),
        }
    }

    fn push(&mut self, t: f64, s: S) {
        let w = s.norm_sq();
        self.times.push(t);
        self.states.push(s);
        self.lyapunov.push(w);
        self.norm_sq.push(w);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<&S> {
        self.states.last()
    }
}

impl Trajectory<PlantState> {
    /// `self - other` sample by sample, as an error trajectory.
    pub fn difference(&self, other: &Trajectory<PlantState>) -> Result<Trajectory<ErrorState>> {
        if self.times != other.times {
            return Err(Error::Dimension("trajectories on different grids".into()));
        }
        let mut out = Trajectory::with_capacity(self.len());
        for ((t, a), b) in self.times.iter().zip(&self.states).zip(&other.states) {
            out.push(*t, ErrorState::new(&a.xi - &b.xi, &a.eta - &b.eta)?);
        }
        Ok(out)
    }
}

/// Uniform grid of `samples` points on `[0, t_end]`.
pub fn uniform_grid(t_end: f64, samples: usize) -> Vec<f64> {
    if samples < 2 {
        return vec![0.0];
    }
    let dt = t_end / (samples - 1) as f64;
    (0..samples).map(|k| k as f64 * dt).collect()
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    match t_grid.first() {
        None => return Err(Error::Config("empty time grid".into())),
        Some(&t0) if t0 != 0.0 => return Err(Error::Config(format!("time grid must start at 0, got {t0}"))),
        _ => {}
    }
    if let Some(w) = t_grid.windows(2).find(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::Config(format!("time grid not increasing at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

/// `A - F C` on the truncation:
/// `[[-f C1, Omega], [-Omega, 0]]` with `(f C1)_ji = sum_s gamma_s c_sj c_si`.
pub fn assemble_error_generator(system: &ModalSystem) -> DMatrix<f64> {
    let mut a = conservative_generator(system);
    let n = system.n_modes();
    let fc = system.gain_upper() * system.c1();
    a.view_mut((0, 0), (n, n)).copy_from(&(-fc));
    a
}

/// The generator with no output injection, `[[0, Omega], [-Omega, 0]]`.
pub fn conservative_generator(system: &ModalSystem) -> DMatrix<f64> {
    let n = system.n_modes();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for (j, &w) in system.omegas().iter().enumerate() {
        a[(j, n + j)] = w;
        a[(n + j, j)] = -w;
    }
    a
}

/// `e(t_k) = exp(t_k A_hat) e0` for [`assemble_error_generator`].
pub fn propagate_error(system: &ModalSystem, e0: &ErrorState, t_grid: &[f64]) -> Result<Trajectory<ErrorState>> {
    propagate_linear(&assemble_error_generator(system), e0, t_grid)
}

/// Exact propagation of `de/dt = generator e` on `t_grid` by matrix
/// exponentials of the step increments. Propagators are reused across
/// steps whose lengths agree to 1e-12 relative.
pub fn propagate_linear<S: ModalState>(generator: &DMatrix<f64>, e0: &S, t_grid: &[f64]) -> Result<Trajectory<S>> {
    check_grid(t_grid)?;
    if generator.nrows() != 2 * e0.dim() {
        return Err(Error::Dimension(format!(
            "generator is {}x{}, state has 2N = {}",
            generator.nrows(),
            generator.ncols(),
            2 * e0.dim()
        )));
    }
    let mut traj = Trajectory::with_capacity(t_grid.len());
    let mut state = e0.stacked();
    traj.push(0.0, e0.clone());
    let mut cached: Option<(f64, DMatrix<f64>)> = None;
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        let reuse = matches!(&cached, Some((h, _)) if (dt - h).abs() <= 1e-12 * h);
        if !reuse {
            let prop = (generator * dt).exp();
            if prop.iter().any(|v| !v.is_finite()) {
                return Err(Error::Conditioning { dt });
            }
            cached = Some((dt, prop));
        }
        let prop = &cached.as_ref().expect("propagator").1;
        state = prop * state;
        traj.push(w[1], S::from_stacked(&state));
    }
    Ok(traj)
}

/// Step control for the RK4 integrator: `h * omega_N <= phase_step` for
/// accuracy on the fastest oscillation and `h * rho <= stability_step`, with
/// `rho` the spectral radius of the observer generator (output injection
/// through curvature sensors makes it stiff).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rk4Settings {
    pub phase_step: f64,
    pub stability_step: f64,
}

impl Default for Rk4Settings {
    fn default() -> Self {
        Rk4Settings {
            phase_step: 0.05,
            stability_step: 2.0,
        }
    }
}

const MAX_SUBSTEPS: f64 = 1e7;

/// Coupled plant and observer under input `u(t)` (length `k + 1`), by
/// fixed-step classical RK4. Returns `(plant, observer)` trajectories.
pub fn propagate_plant_observer(
    system: &ModalSystem,
    z0: &PlantState,
    zbar0: &PlantState,
    u: &dyn Fn(f64) -> DVector<f64>,
    t_grid: &[f64],
) -> Result<(Trajectory<PlantState>, Trajectory<PlantState>)> {
    propagate_plant_observer_with(system, z0, zbar0, u, t_grid, Rk4Settings::default())
}

pub fn propagate_plant_observer_with(
    system: &ModalSystem,
    z0: &PlantState,
    zbar0: &PlantState,
    u: &dyn Fn(f64) -> DVector<f64>,
    t_grid: &[f64],
    settings: Rk4Settings,
) -> Result<(Trajectory<PlantState>, Trajectory<PlantState>)> {
    check_grid(t_grid)?;
    let n = system.n_modes();
    if z0.dim() != n || zbar0.dim() != n {
        return Err(Error::Dimension(format!("initial states must have N = {n} entries")));
    }
    let observer = assemble_error_generator(system);
    // Coupled generator on (z, z_bar): [[A, 0], [F C, A - F C]].
    let mut coupled = DMatrix::zeros(4 * n, 4 * n);
    coupled.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&conservative_generator(system));
    coupled.view_mut((2 * n, 0), (2 * n, n)).copy_from(&(system.gain() * system.c1()));
    coupled.view_mut((2 * n, 2 * n), (2 * n, 2 * n)).copy_from(&observer);
    let b1 = system.b1();

    let rate = (system.omegas().max() / settings.phase_step)
        .max(spectral_radius_bound(&observer) / settings.stability_step);

    // dx/dt = coupled x + (0, B1 u, 0, B1 u)
    let rhs = |t: f64, x: &DVector<f64>, out: &mut DVector<f64>| -> Result<()> {
        out.gemv(1.0, &coupled, x, 0.0);
        let input = u(t);
        if input.len() != b1.ncols() {
            return Err(Error::Dimension(format!(
                "control has {} channels, B1 expects {}",
                input.len(),
                b1.ncols()
            )));
        }
        let forcing = b1 * input;
        for j in 0..n {
            out[n + j] += forcing[j];
            out[3 * n + j] += forcing[j];
        }
        Ok(())
    };

    let mut x = DVector::zeros(4 * n);
    x.rows_mut(0, 2 * n).copy_from(&z0.stacked());
    x.rows_mut(2 * n, 2 * n).copy_from(&zbar0.stacked());
    let mut k1 = DVector::zeros(4 * n);
    let mut k2 = DVector::zeros(4 * n);
    let mut k3 = DVector::zeros(4 * n);
    let mut k4 = DVector::zeros(4 * n);
    let mut stage = DVector::zeros(4 * n);

    let mut plant_traj = Trajectory::with_capacity(t_grid.len());
    let mut obs_traj = Trajectory::with_capacity(t_grid.len());
    plant_traj.push(0.0, z0.clone());
    obs_traj.push(0.0, zbar0.clone());
    for w in t_grid.windows(2) {
        let dt = w[1] - w[0];
        let substeps = (dt * rate).ceil().max(1.0);
        if substeps > MAX_SUBSTEPS {
            return Err(Error::Config(format!(
                "RK4 step underflow: {substeps:e} substeps for an output interval of {dt:e} s"
            )));
        }
        let h = dt / substeps;
        for k in 0..substeps as usize {
            let t = w[0] + k as f64 * h;
            rhs(t, &x, &mut k1)?;
            stage.copy_from(&x);
            stage.axpy(0.5 * h, &k1, 1.0);
            rhs(t + 0.5 * h, &stage, &mut k2)?;
            stage.copy_from(&x);
            stage.axpy(0.5 * h, &k2, 1.0);
            rhs(t + 0.5 * h, &stage, &mut k3)?;
            stage.copy_from(&x);
            stage.axpy(h, &k3, 1.0);
            rhs(t + h, &stage, &mut k4)?;
            x.axpy(h / 6.0, &k1, 1.0);
            x.axpy(h / 3.0, &k2, 1.0);
            x.axpy(h / 3.0, &k3, 1.0);
            x.axpy(h / 6.0, &k4, 1.0);
        }
        plant_traj.push(w[1], PlantState::from_stacked(&x.rows(0, 2 * n).into_owned()));
        obs_traj.push(w[1], PlantState::from_stacked(&x.rows(2 * n, 2 * n).into_owned()));
    }
    Ok((plant_traj, obs_traj))
}

/// Largest eigenvalue modulus of a real square matrix.
fn spectral_radius_bound(m: &DMatrix<f64>) -> f64 {
    m.clone().complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// `W(e) = sum_j (Delta_j^2 + delta_j^2)`.
pub fn lyapunov(system: &ModalSystem, e: &ErrorState) -> Result<f64> {
    check_dim(system, e)?;
    Ok(e.norm_sq())
}

/// `dW/dt = -2 sum_s gamma_s (sum_j c_sj Delta_j)^2` along the error dynamics.
pub fn lyapunov_rate(system: &ModalSystem, e: &ErrorState) -> Result<f64> {
    check_dim(system, e)?;
    let outputs = system.c1() * &e.xi;
    Ok(-2.0
        * system
            .gammas()
            .iter()
            .zip(outputs.iter())
            .map(|(g, y)| g * y * y)
            .sum::<f64>())
}

fn check_dim(system: &ModalSystem, e: &ErrorState) -> Result<()> {
    if e.xi.len() != system.n_modes() || e.eta.len() != system.n_modes() {
        return Err(Error::Dimension(format!(
            "error state has {}+{} entries, system N = {}",
            e.xi.len(),
            e.eta.len(),
            system.n_modes()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    /// `W(t_end) / W(0)`.
    pub lyapunov_ratio: f64,
    /// Slope of `ln ||e||` against `t` over the last half of the trajectory.
    pub fitted_rate: f64,
    /// Largest real part in the spectrum of the generator.
    pub max_real_eigenvalue: f64,
}

/// Decay summary of an error trajectory generated by `generator`.
pub fn decay_metrics(traj: &Trajectory<ErrorState>, generator: &DMatrix<f64>) -> Result<DecayReport> {
    let w0 = *traj
        .norm_sq
        .first()
        .ok_or_else(|| Error::UndefinedMetric("empty trajectory".into()))?;
    if w0 == 0.0 {
        return Err(Error::UndefinedMetric("zero initial error".into()));
    }
    let half = traj.len() / 2;
    let pts: Vec<(f64, f64)> = traj.times[half..]
        .iter()
        .zip(&traj.norm_sq[half..])
        .filter(|(_, w)| **w > 0.0)
        .map(|(t, w)| (*t, 0.5 * w.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::UndefinedMetric("fewer than two positive samples in the fit window".into()));
    }
    let (fitted_rate, _) = linear_fit(&pts);
    Ok(DecayReport {
        lyapunov_ratio: traj.norm_sq.last().expect("non-empty") / w0,
        fitted_rate,
        max_real_eigenvalue: max_real_eigenvalue(generator),
    })
}

pub fn max_real_eigenvalue(generator: &DMatrix<f64>) -> f64 {
    generator
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_system(omega: f64, c: f64, gamma: f64) -> ModalSystem {
        ModalSystem::new(
            DVector::from_element(1, omega),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, c),
            vec![gamma],
        )
        .unwrap()
    }

    #[test]
    fn scalar_generator_and_spectrum() {
        let sys = scalar_system(2.0, 1.0, 0.6);
        let a = assemble_error_generator(&sys);
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[-0.6, 2.0, -2.0, 0.0]));
        assert!((max_real_eigenvalue(&a) + 0.3).abs() < 1e-12);
    }

    #[test]
    fn conservative_generator_is_skew() {
        let sys = scalar_system(3.0, 1.0, 1.0);
        let a = conservative_generator(&sys);
        assert_eq!(a.transpose(), -a);
    }

    #[test]
    fn zero_error_stays_zero() {
        let sys = scalar_system(1.0, 1.0, 1.0);
        let traj = propagate_error(&sys, &ErrorState::zeros(1), &uniform_grid(5.0, 11)).unwrap();
        assert!(traj.lyapunov.iter().all(|w| *w == 0.0));
    }

    #[test]
    fn rate_vanishes_on_output_kernel() {
        let sys = ModalSystem::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DMatrix::zeros(2, 1),
            DMatrix::from_row_slice(1, 2, &[1.0, 2.0]),
            vec![3.0],
        )
        .unwrap();
        let e = ErrorState::new(DVector::from_vec(vec![2.0, -1.0]), DVector::from_vec(vec![0.3, 5.0])).unwrap();
        assert_eq!(lyapunov_rate(&sys, &e).unwrap(), 0.0);
        assert!(lyapunov(&sys, &e).unwrap() > 0.0);
        let z = ErrorState::zeros(2);
        assert_eq!(lyapunov(&sys, &z).unwrap(), 0.0);
        assert_eq!(lyapunov_rate(&sys, &z).unwrap(), 0.0);
    }

    #[test]
    fn grid_must_start_at_zero_and_increase() {
        let sys = scalar_system(1.0, 1.0, 1.0);
        let e0 = ErrorState::harmonic_initial(sys.omegas());
        assert!(propagate_error(&sys, &e0, &[0.1, 0.2]).is_err());
        assert!(propagate_error(&sys, &e0, &[0.0, 0.2, 0.2]).is_err());
        assert!(propagate_error(&sys, &e0, &[]).is_err());
    }

    #[test]
    fn zero_initial_error_has_no_decay_metric() {
        let sys = scalar_system(1.0, 1.0, 1.0);
        let traj = propagate_error(&sys, &ErrorState::zeros(1), &uniform_grid(1.0, 5)).unwrap();
        assert!(matches!(
            decay_metrics(&traj, &assemble_error_generator(&sys)),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn mismatched_control_length_is_rejected() {
        let sys = scalar_system(1.0, 1.0, 1.0);
        let z = PlantState::zeros(1);
        let u = |_t: f64| DVector::zeros(3);
        assert!(propagate_plant_observer(&sys, &z, &z, &u, &uniform_grid(0.1, 3)).is_err());
    }
}
