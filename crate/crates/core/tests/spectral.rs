use std::f64::consts::PI;

use modal_observer::spectral::{
    char_fn_scaled, find_modes, find_roots, inner_product, matching_residuals, BeamParams, Mode,
};
use nalgebra::Matrix4;
use proptest::prelude::*;

/// Matching matrix built from scratch in the unscaled sin/sinh basis, with
/// unknowns `(a1, b1, a2, b2)` and rows: displacement, slope and curvature
/// continuity, shear jump `W'''(l0-) - W'''(l0+) = (kappa - omega^2 m)/EI W(l0)`.
fn determinant_oracle(mu: f64, p: &BeamParams) -> f64 {
    let (x, y) = (mu * p.attach, mu * (p.length - p.attach));
    let omega_sq = (mu * mu).powi(2) * p.ei / p.rho;
    let k = (p.spring - omega_sq * p.mass) / p.ei;
    let (m2, m3) = (mu * mu, mu * mu * mu);
    #[rustfmt::skip]
    let a = Matrix4::new(
        x.sin(), x.sinh(), -y.sin(), -y.sinh(),
        mu * x.cos(), mu * x.cosh(), mu * y.cos(), mu * y.cosh(),
        -m2 * x.sin(), m2 * x.sinh(), m2 * y.sin(), -m2 * y.sinh(),
        -m3 * x.cos() - k * x.sin(), m3 * x.cosh() - k * x.sinh(), -m3 * y.cos(), m3 * y.cosh(),
    );
    a.determinant()
}

/// Roots of the scaled characteristic function from a uniform sign scan.
fn dense_scan_roots(p: &BeamParams, mu_max: f64, step: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut lo = 1e-6;
    let mut f_lo = char_fn_scaled(lo, p);
    while lo < mu_max {
        let hi = lo + step;
        let f_hi = char_fn_scaled(hi, p);
        if f_lo == 0.0 {
            roots.push(lo);
        } else if f_lo * f_hi < 0.0 {
            let (mut a, mut b, mut fa) = (lo, hi, f_lo);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = char_fn_scaled(m, p);
                if fm == 0.0 || b - a < 1e-15 * m {
                    a = m;
                    b = m;
                    break;
                }
                if fa * fm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    fa = fm;
                }
            }
            roots.push(0.5 * (a + b));
        }
        lo = hi;
        f_lo = f_hi;
    }
    roots
}

#[test]
fn roots_match_dense_sign_scan() {
    let p = BeamParams::stand_in();
    let found = find_roots(&p, 12).unwrap();
    let mu_max = found[11] + 0.5 * (found[11] - found[10]);
    let dense = dense_scan_roots(&p, mu_max, 1e-4);
    assert_eq!(dense.len(), 12, "dense scan found {dense:?}");
    for (a, b) in found.iter().zip(&dense) {
        assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
    }
}

#[test]
fn roots_are_sign_changes_of_an_independent_determinant() {
    for p in [
        BeamParams::stand_in(),
        BeamParams::new(1.0, 2.0, 0.5, 0.0, 1.0, 0.3).unwrap(),
        BeamParams::new(1.0, 2.0, 0.0, 40.0, 1.0, 0.7).unwrap(),
    ] {
        for mu in find_roots(&p, 6).unwrap() {
            let eps = 1e-6 * mu;
            let (lo, hi) = (determinant_oracle(mu - eps, &p), determinant_oracle(mu + eps, &p));
            assert!(lo * hi < 0.0, "no determinant sign change at mu = {mu} for {p:?}");
        }
    }
}

#[test]
fn bare_beam_frequencies_and_inverse_square_sum() {
    let (rho, ei, l) = (0.8, 3.0, 1.6);
    let p = BeamParams::pinned_pinned(rho, ei, l, 0.45).unwrap();
    let modes = find_modes(&p, 50).unwrap();
    for m in &modes {
        let expected = (m.index as f64 * PI / l).powi(2) * (ei / rho).sqrt();
        assert!((m.omega - expected).abs() < 1e-9 * expected);
    }
    // sum_j 1/omega_j^2 = rho l^4 / (EI pi^4) zeta(4) = rho l^4 / (90 EI);
    // the tail past N is below rho l^4 / (3 EI pi^4 N^3).
    let sum: f64 = modes.iter().map(|m| 1.0 / (m.omega * m.omega)).sum();
    let limit = rho * l.powi(4) / (90.0 * ei);
    let tail = rho * l.powi(4) / (3.0 * ei * PI.powi(4) * 50f64.powi(3));
    assert!(sum < limit && limit - sum < tail, "sum {sum}, limit {limit}, tail {tail}");
}

#[test]
fn truncations_nest() {
    let p = BeamParams::stand_in();
    let long = find_modes(&p, 16).unwrap();
    let short = find_modes(&p, 6).unwrap();
    assert_eq!(&long[..6], &short[..]);
}

fn gram_ratio(modes: &[Mode], p: &BeamParams) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, a) in modes.iter().enumerate() {
        for b in &modes[i + 1..] {
            let g = inner_product(a, b, p).unwrap();
            worst = worst.max(g.abs() / (a.norm_sq * b.norm_sq).sqrt());
        }
    }
    worst
}

#[test]
fn modes_are_orthogonal_with_mass_or_spring_alone() {
    for p in [
        BeamParams::new(0.518, 4.9, 0.3, 0.0, 1.875, 0.6).unwrap(),
        BeamParams::new(0.518, 4.9, 0.0, 25.0, 1.875, 1.2).unwrap(),
    ] {
        let modes = find_modes(&p, 8).unwrap();
        assert!(gram_ratio(&modes, &p) < 1e-8);
    }
}

#[test]
fn norm_includes_the_point_mass() {
    let p = BeamParams::stand_in();
    let m = &find_modes(&p, 1).unwrap()[0];
    let bare = modal_observer::quadrature::integrate(|x| m.eval(x, 0).unwrap().powi(2), 0.0, p.length, 1e-14)
        .unwrap();
    let body = p.mass * m.eval(p.attach, 0).unwrap().powi(2);
    assert!((m.norm_sq - (p.rho * bare + body)).abs() < 1e-10 * m.norm_sq);
}

fn params_strategy() -> impl Strategy<Value = BeamParams> {
    (0.1f64..2.0, 0.5f64..10.0, 0.0f64..1.0, 0.0f64..50.0, 0.5f64..3.0, 0.1f64..0.9).prop_map(
        |(rho, ei, mass, spring, length, frac)| BeamParams {
            rho,
            ei,
            mass,
            spring,
            length,
            attach: frac * length,
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn modes_satisfy_matching_and_order(p in params_strategy()) {
        let modes = find_modes(&p, 5).unwrap();
        for w in modes.windows(2) {
            prop_assert!(w[1].omega > w[0].omega);
        }
        for m in &modes {
            prop_assert!(m.norm_sq > 0.0);
            for r in matching_residuals(m) {
                prop_assert!(r.abs() < 1e-7, "residual {r} for mode {} of {p:?}", m.index);
            }
        }
    }

    // Rayleigh quotient comparison: a point mass can only lower the
    // frequencies of the bare beam and a spring can only raise them.
    #[test]
    fn mass_lowers_and_spring_raises_frequencies(p in params_strategy()) {
        let bare = find_roots(&BeamParams { mass: 0.0, spring: 0.0, ..p }, 4).unwrap();
        let massive = find_roots(&BeamParams { spring: 0.0, ..p }, 4).unwrap();
        let sprung = find_roots(&BeamParams { mass: 0.0, ..p }, 4).unwrap();
        for j in 0..4 {
            prop_assert!(massive[j] <= bare[j] * (1.0 + 1e-12));
            prop_assert!(sprung[j] >= bare[j] * (1.0 - 1e-12));
        }
    }
}
