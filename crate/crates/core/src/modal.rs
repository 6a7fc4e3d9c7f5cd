//! Truncated modal control system: frequencies `Omega`, input matrix `B1`,
//! output matrix `C1`, gains and the output-injection operator `F`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::{self, BeamParams, Mode};

/// Sensor layout. Output rows are ordered: body displacement `W(l0)` first
/// (when enabled), then one curvature row `W''(x)` per position.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig {
    pub body_output: bool,
    pub positions: Vec<f64>,
}

impl SensorConfig {
    pub fn output_count(&self) -> usize {
        self.positions.len() + usize::from(self.body_output)
    }

    pub fn validate(&self, params: &BeamParams) -> Result<()> {
        if self.output_count() == 0 {
            return Err(Error::Sensor("no outputs configured".into()));
        }
        for (i, &x) in self.positions.iter().enumerate() {
            if !(x > 0.0 && x < params.length) {
                return Err(Error::Sensor(format!(
                    "position[{i}] = {x} must lie strictly inside (0, {}); the curvature vanishes at the supports",
                    params.length
                )));
            }
            if self.positions[..i].contains(&x) {
                return Err(Error::Sensor(format!("position[{i}] = {x} is duplicated")));
            }
        }
        Ok(())
    }
}

/// One constant piece `amplitude` on `[start, end]` of an actuator shape.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorPiece {
    pub start: f64,
    pub end: f64,
    pub amplitude: f64,
}

/// Piecewise-constant distributed actuator `psi(x)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ActuatorShape {
    pub pieces: Vec<ActuatorPiece>,
}

impl ActuatorShape {
    pub fn new(pieces: Vec<ActuatorPiece>) -> Self {
        ActuatorShape { pieces }
    }

    /// The support must stay away from both supports and from `l0`.
    pub fn validate(&self, params: &BeamParams) -> Result<()> {
        for (i, p) in self.pieces.iter().enumerate() {
            if !(p.start.is_finite() && p.end.is_finite() && p.amplitude.is_finite()) {
                return Err(Error::Shape(format!("piece {i} has non-finite data")));
            }
            if p.start >= p.end {
                return Err(Error::Shape(format!("piece {i}: start {} >= end {}", p.start, p.end)));
            }
            let inside_left = p.start > 0.0 && p.end < params.attach;
            let inside_right = p.start > params.attach && p.end < params.length;
            if !(inside_left || inside_right) {
                return Err(Error::Shape(format!(
                    "piece {i} [{}, {}] touches 0, l0 = {} or l = {}",
                    p.start, p.end, params.attach, params.length
                )));
            }
        }
        Ok(())
    }

    /// `int psi W'' dx`, exact for piecewise-constant `psi`.
    pub fn project(&self, mode: &Mode) -> Result<f64> {
        let mut acc = 0.0;
        for p in &self.pieces {
            acc += p.amplitude * (mode.eval(p.end, 1)? - mode.eval(p.start, 1)?);
        }
        Ok(acc)
    }
}

/// Rows: outputs; columns: modes. `c_1j = W_j(l0)`, then `c_sj = W_j''(x_s)`.
pub fn build_output_matrix(modes: &[Mode], sensors: &SensorConfig) -> Result<DMatrix<f64>> {
    let first = modes
        .first()
        .ok_or_else(|| Error::Dimension("no modes".into()))?;
    let params = first.params();
    sensors.validate(params)?;
    let r = sensors.output_count();
    let mut c1 = DMatrix::zeros(r, modes.len());
    for (j, mode) in modes.iter().enumerate() {
        let mut row = 0;
        if sensors.body_output {
            c1[(row, j)] = mode.eval(params.attach, 0)?;
            row += 1;
        }
        for &x in &sensors.positions {
            c1[(row, j)] = mode.eval(x, 2)?;
            row += 1;
        }
    }
    Ok(c1)
}

/// Columns: point force on the body, then one column per actuator.
pub fn build_input_matrix(modes: &[Mode], actuators: &[ActuatorShape]) -> Result<DMatrix<f64>> {
    let first = modes
        .first()
        .ok_or_else(|| Error::Dimension("no modes".into()))?;
    let params = first.params();
    for a in actuators {
        a.validate(params)?;
    }
    let mut b1 = DMatrix::zeros(modes.len(), actuators.len() + 1);
    for (j, mode) in modes.iter().enumerate() {
        b1[(j, 0)] = mode.eval(params.attach, 0)? / mode.norm_sq;
        for (p, a) in actuators.iter().enumerate() {
            b1[(j, p + 1)] = a.project(mode)? / mode.norm_sq;
        }
    }
    Ok(b1)
}

/// `F` as a `2N x r` matrix: upper block `f_js = gamma_s c_sj`, lower block zero.
pub fn build_gain(c1: &DMatrix<f64>, gammas: &[f64]) -> Result<DMatrix<f64>> {
    check_gammas(gammas, c1.nrows())?;
    Ok(gain_unchecked(c1, gammas))
}

fn gain_unchecked(c1: &DMatrix<f64>, gammas: &[f64]) -> DMatrix<f64> {
    let n = c1.ncols();
    DMatrix::from_fn(2 * n, c1.nrows(), |row, s| {
        if row < n {
            gammas[s] * c1[(s, row)]
        } else {
            0.0
        }
    })
}

fn check_gammas(gammas: &[f64], r: usize) -> Result<()> {
    if gammas.len() != r {
        return Err(Error::Dimension(format!("{} gains for {r} outputs", gammas.len())));
    }
    if let Some((s, g)) = gammas.iter().enumerate().find(|(_, g)| !(g.is_finite() && **g > 0.0)) {
        return Err(Error::param("gamma", format!("gamma[{s}] = {g} must be > 0")));
    }
    Ok(())
}

/// Truncated modal system.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalSystem {
    omegas: DVector<f64>,
    b1: DMatrix<f64>,
    c1: DMatrix<f64>,
    gammas: Vec<f64>,
    gain: DMatrix<f64>,
}

impl ModalSystem {
    /// Validates dimensions, positivity of `omegas` and `gammas`, and builds `F`.
    /// Ordering of `omegas` is deliberately not enforced; see [`check_assumptions`].
    pub fn new(omegas: DVector<f64>, b1: DMatrix<f64>, c1: DMatrix<f64>, gammas: Vec<f64>) -> Result<Self> {
        let n = omegas.len();
        if n == 0 {
            return Err(Error::Dimension("empty truncation".into()));
        }
        if let Some(w) = omegas.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::param("omega", format!("frequencies must be > 0, got {w}")));
        }
        if c1.ncols() != n || b1.nrows() != n {
            return Err(Error::Dimension(format!(
                "N = {n}, C1 is {}x{}, B1 is {}x{}",
                c1.nrows(),
                c1.ncols(),
                b1.nrows(),
                b1.ncols()
            )));
        }
        let gain = build_gain(&c1, &gammas)?;
        Ok(ModalSystem {
            omegas,
            b1,
            c1,
            gammas,
            gain,
        })
    }

    /// Assembles the system from solved modes.
    pub fn from_modes(
        modes: &[Mode],
        sensors: &SensorConfig,
        actuators: &[ActuatorShape],
        gammas: Vec<f64>,
    ) -> Result<Self> {
        let omegas = DVector::from_iterator(modes.len(), modes.iter().map(|m| m.omega));
        let c1 = build_output_matrix(modes, sensors)?;
        let b1 = build_input_matrix(modes, actuators)?;
        Self::new(omegas, b1, c1, gammas)
    }

    /// Solves the first `n` modes and assembles.
    pub fn assemble(
        params: &BeamParams,
        n: usize,
        sensors: &SensorConfig,
        actuators: &[ActuatorShape],
        gammas: Vec<f64>,
    ) -> Result<(Vec<Mode>, Self)> {
        let modes = spectral::find_modes(params, n)?;
        let sys = Self::from_modes(&modes, sensors, actuators, gammas)?;
        Ok((modes, sys))
    }

    pub fn n_modes(&self) -> usize {
        self.omegas.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.c1.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b1.ncols()
    }

    pub fn omegas(&self) -> &DVector<f64> {
        &self.omegas
    }

    pub fn b1(&self) -> &DMatrix<f64> {
        &self.b1
    }

    pub fn c1(&self) -> &DMatrix<f64> {
        &self.c1
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    /// `F`, `2N x r`.
    pub fn gain(&self) -> &DMatrix<f64> {
        &self.gain
    }

    /// Upper block `f` of `F`, `N x r`.
    pub fn gain_upper(&self) -> DMatrix<f64> {
        self.gain.rows(0, self.n_modes()).into_owned()
    }

    /// Same plant and sensors with a different gain vector.
    pub fn with_gains(&self, gammas: Vec<f64>) -> Result<Self> {
        Self::new(self.omegas.clone(), self.b1.clone(), self.c1.clone(), gammas)
    }
}

/// Frequency-ordering verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingCheck {
    pub passed: bool,
    /// First `j` (1-based) with `omega_{j+1} <= omega_j`.
    pub first_violation: Option<usize>,
}

/// Convergence diagnostics for `sum 1 / omega_j^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCheck {
    pub passed: bool,
    pub partial_sums: Vec<f64>,
    /// Sums of consecutive blocks of `block_len` terms.
    pub block_sums: Vec<f64>,
    pub block_len: usize,
    /// Exponent `alpha` of the fit `omega_j ~ c j^alpha` on the tail probe.
    pub growth_exponent: f64,
    pub growth_coefficient: f64,
    /// Estimate of `sum_{j > N} 1 / omega_j^2` from the fit.
    pub tail_estimate: f64,
}

/// Per-mode output-coverage verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageCheck {
    pub passed: bool,
    /// 1-based indices of modes whose `C1` column is numerically zero.
    pub unobserved_modes: Vec<usize>,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub distinct_frequencies: OrderingCheck,
    pub summable_inverse_squares: SeriesCheck,
    pub output_coverage: CoverageCheck,
    /// Kernel-invariance is not checked directly.
    pub kernel_invariance_note: &'static str,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.distinct_frequencies.passed && self.summable_inverse_squares.passed && self.output_coverage.passed
    }
}

pub const KERNEL_INVARIANCE_NOTE: &str =
    "implied by output coverage together with distinct frequencies (no invariant subspace of Ker C); not checked independently";

/// Relative threshold below which `c_sj` counts as a structural zero.
pub const COVERAGE_THRESHOLD: f64 = 1e-10;

/// Diagnoses frequency ordering, summability of `1/omega^2` (with a fitted
/// tail over the last `tail_probe` modes) and per-mode output coverage.
pub fn check_assumptions(system: &ModalSystem, tail_probe: usize) -> AssumptionReport {
    let omegas = system.omegas();
    let n = omegas.len();

    let first_violation = (0..n.saturating_sub(1)).find(|&j| omegas[j + 1] <= omegas[j]).map(|j| j + 1);
    let distinct_frequencies = OrderingCheck {
        passed: first_violation.is_none(),
        first_violation,
    };

    let summable_inverse_squares = series_check(omegas.as_slice(), tail_probe);

    let c1 = system.c1();
    let row_peaks: Vec<f64> = c1.row_iter().map(|r| r.amax()).collect();
    let unobserved_modes: Vec<usize> = (0..n)
        .filter(|&j| {
            !(0..c1.nrows()).any(|s| {
                let peak = row_peaks[s];
                peak > 0.0 && c1[(s, j)].abs() > COVERAGE_THRESHOLD * peak
            })
        })
        .map(|j| j + 1)
        .collect();
    let rank = c1.rank(1e-10 * c1.amax().max(f64::MIN_POSITIVE));
    let output_coverage = CoverageCheck {
        passed: unobserved_modes.is_empty(),
        unobserved_modes,
        rank,
    };

    AssumptionReport {
        distinct_frequencies,
        summable_inverse_squares,
        output_coverage,
        kernel_invariance_note: KERNEL_INVARIANCE_NOTE,
    }
}

/// Fitted growth exponents at or below this count as non-summable
/// (`1/omega^2` needs `alpha > 1/2`; the margin absorbs fit noise).
pub const MIN_GROWTH_EXPONENT: f64 = 0.55;

fn series_check(omegas: &[f64], tail_probe: usize) -> SeriesCheck {
    let n = omegas.len();
    let terms: Vec<f64> = omegas.iter().map(|w| 1.0 / (w * w)).collect();
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let block_len = (n / 4).clamp(1, 10);
    let block_sums: Vec<f64> = terms.chunks_exact(block_len).map(|c| c.iter().sum()).collect();

    // Log-log fit of omega_j against j over the probed tail (at least two points).
    let probe = tail_probe.clamp(2, n.max(2)).min(n);
    let (alpha, log_c) = if n >= 2 {
        let pts: Vec<(f64, f64)> = (n - probe..n)
            .map(|j| (((j + 1) as f64).ln(), omegas[j].ln()))
            .collect();
        let (slope, intercept) = linear_fit(&pts);
        (slope, intercept)
    } else {
        (f64::NAN, f64::NAN)
    };
    let coefficient = log_c.exp();
    // sum_{j > N} 1 / (c^2 j^(2 alpha)) ~ int_{N + 1/2}^inf, finite iff 2 alpha > 1.
    let tail_estimate = if 2.0 * alpha > 1.0 {
        let start = n as f64 + 0.5;
        start.powf(1.0 - 2.0 * alpha) / ((2.0 * alpha - 1.0) * coefficient * coefficient)
    } else {
        f64::INFINITY
    };
    let shrinking = block_sums.windows(2).all(|w| w[1] < w[0]);
    SeriesCheck {
        passed: alpha.is_finite() && alpha > MIN_GROWTH_EXPONENT && shrinking && tail_estimate.is_finite(),
        partial_sums,
        block_sums,
        block_len,
        growth_exponent: alpha,
        growth_coefficient: coefficient,
        tail_estimate,
    }
}

/// Least-squares `(slope, intercept)`.
pub(crate) fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
