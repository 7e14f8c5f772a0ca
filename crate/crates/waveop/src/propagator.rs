//! Time-domain oracle: free and perturbed Schrödinger evolution, the
//! Cook-method wave operator, time-domain Born terms, and the projection
//! onto the continuous subspace.

use crate::error::{Result, WaveopError};
use crate::fft::C64;
use crate::fields::{fourier_transform, sample_potential, Direction, Grid3, Potential, ScalarField};
use crate::resolvent::point_spectrum;
use std::f64::consts::PI;

/// Time-stepping parameters for the Strang split propagator and the Cook
/// integral. `eps_reg` is the `e^{-eps t}` damper.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_max: f64,
    pub eps_reg: f64,
}

impl EvolutionConfig {
    /// Largest kinetic phase on the dual grid.
    pub fn eta_max_sq(grid: Grid3) -> f64 {
        3.0 * (PI / grid.spacing()).powi(2)
    }

    pub fn validate(&self, grid: Grid3) -> Result<()> {
        let product = self.dt * Self::eta_max_sq(grid);
        if product > 0.5 + 1e-12 {
            return Err(WaveopError::StepTooLarge {
                dt: self.dt,
                product,
            });
        }
        Ok(())
    }

    /// Largest admissible step for a grid, with a small safety margin.
    pub fn max_dt(grid: Grid3) -> f64 {
        0.5 / Self::eta_max_sq(grid)
    }
}

/// [OP] Free evolution `e^{-i t H0} f` as an exact spectral multiplier.
pub fn free_evolve(f: &ScalarField, t: f64) -> ScalarField {
    let mut fhat = fourier_transform(f, Direction::Forward);
    let dual = fhat.grid;
    for (i, v) in fhat.values.iter_mut().enumerate() {
        let xi = dual.point(i);
        *v *= C64::from_polar(1.0, -t * xi.norm_squared());
    }
    let mut out = fourier_transform(&fhat, Direction::Inverse);
    out.grid = f.grid;
    out
}

/// One Strang step of `e^{-i dt H}`: half potential kick, full kinetic
/// multiplier, half potential kick. Negative `dt` runs the reversed scheme.
fn strang_step(f: &ScalarField, vfield: &ScalarField, dt: f64) -> ScalarField {
    let mut u = f.clone();
    for (v, p) in u.values.iter_mut().zip(&vfield.values) {
        *v *= C64::from_polar(1.0, -dt * p.re / 2.0);
    }
    let mut uhat = fourier_transform(&u, Direction::Forward);
    let dual = uhat.grid;
    for (i, v) in uhat.values.iter_mut().enumerate() {
        let xi = dual.point(i);
        *v *= C64::from_polar(1.0, -dt * xi.norm_squared());
    }
    let mut u = fourier_transform(&uhat, Direction::Inverse);
    u.grid = f.grid;
    for (v, p) in u.values.iter_mut().zip(&vfield.values) {
        *v *= C64::from_polar(1.0, -dt * p.re / 2.0);
    }
    u
}

/// [OP] Perturbed evolution `e^{-i t H} f` by second-order Strang splitting.
/// Negative `t` evolves backwards (equivalently applies `e^{i|t|H}`).
pub fn perturbed_evolve(
    f: &ScalarField,
    t: f64,
    pot: &Potential,
    cfg: &EvolutionConfig,
) -> Result<ScalarField> {
    cfg.validate(f.grid)?;
    if t == 0.0 {
        return Ok(f.clone());
    }
    let vfield = sample_potential(pot, f.grid)?;
    let steps = (t.abs() / cfg.dt).ceil() as usize;
    let dt = t / steps as f64;
    let mut u = f.clone();
    for _ in 0..steps {
        u = strang_step(&u, &vfield, dt);
    }
    Ok(u)
}

/// Diagnostics of a Cook integration.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CookDiagnostics {
    /// Damped integrand norm at `t_max`, relative to `||f||_2`.
    pub tail: f64,
    pub steps: usize,
}

pub struct CookResult {
    pub field: ScalarField,
    pub diagnostics: CookDiagnostics,
}

/// [OP] Cook's method: `W+^eps f = f + i \int_0^{t_max} e^{itH - eps t} V
/// e^{-itH0} f dt` by trapezoid quadrature. Each sample is a free evolution
/// followed by multiplication by `V`; the `e^{itH}` factors are applied by a
/// single shared backward sweep, one reversed Strang step per sample.
pub fn cook_wave_operator(
    f: &ScalarField,
    pot: &Potential,
    cfg: &EvolutionConfig,
) -> Result<CookResult> {
    cfg.validate(f.grid)?;
    let grid = f.grid;
    if pot.is_zero() {
        return Ok(CookResult {
            field: f.clone(),
            diagnostics: CookDiagnostics {
                tail: 0.0,
                steps: 0,
            },
        });
    }
    let vfield = sample_potential(pot, grid)?;
    let steps = (cfg.t_max / cfg.dt).ceil() as usize;
    let dt = cfg.t_max / steps as f64;
    let fnorm = f.l2_norm();

    // wrap-around guard: the damped integrand must be negligible at t_max
    let phi_end = free_evolve(f, cfg.t_max);
    let integrand_end = phi_end.mul(&vfield);
    let tail = integrand_end.l2_norm() * (-cfg.eps_reg * cfg.t_max).exp() / fnorm.max(1e-300);
    if tail >= 1e-6 {
        return Err(WaveopError::WrapAround { tail });
    }

    // keep the free trajectory in Fourier space so each sample is one
    // multiplier evaluation plus one inverse transform
    let fhat0 = fourier_transform(f, Direction::Forward);
    let dual = fhat0.grid;
    let sample = |t: f64| -> ScalarField {
        let mut fh = fhat0.clone();
        for (i, v) in fh.values.iter_mut().enumerate() {
            let xi = dual.point(i);
            *v *= C64::from_polar(1.0, -t * xi.norm_squared());
        }
        let mut phi = fourier_transform(&fh, Direction::Inverse);
        phi.grid = grid;
        phi
    };

    let mut acc = ScalarField::zeros(grid);
    for m in (0..=steps).rev() {
        if m < steps {
            acc = strang_step(&acc, &vfield, -dt);
        }
        let t = m as f64 * dt;
        let weight = if m == 0 || m == steps { 0.5 * dt } else { dt };
        let damp = (-cfg.eps_reg * t).exp();
        let phi = sample(t);
        let scale = C64::new(0.0, weight * damp);
        for ((a, p), v) in acc.values.iter_mut().zip(&phi.values).zip(&vfield.values) {
            *a += scale * p * v.re;
        }
    }
    Ok(CookResult {
        field: f.add(&acc),
        diagnostics: CookDiagnostics { tail, steps },
    })
}

/// [OP] Time-domain Born terms with free propagators only (n = 1 or 2):
/// nested trapezoid quadrature of the regularized iterated Duhamel integrals.
pub fn born_term_time(
    f: &ScalarField,
    pot: &Potential,
    n: usize,
    cfg: &EvolutionConfig,
) -> Result<ScalarField> {
    assert!(n == 1 || n == 2, "born_term_time supports n in {{1, 2}}");
    let grid = f.grid;
    if pot.is_zero() {
        return Ok(ScalarField::zeros(grid));
    }
    let vfield = sample_potential(pot, grid)?;
    let steps = (cfg.t_max / cfg.dt).ceil() as usize;
    let dt = cfg.t_max / steps as f64;
    let weight = |m: usize, last: usize| if m == 0 || m == last { 0.5 * dt } else { dt };

    if n == 1 {
        let mut acc = ScalarField::zeros(grid);
        for m in 0..=steps {
            let t = m as f64 * dt;
            let phi = free_evolve(f, t);
            let integ = free_evolve(&phi.mul(&vfield), -t);
            let scale = C64::new(0.0, weight(m, steps) * (-cfg.eps_reg * t).exp());
            for (a, v) in acc.values.iter_mut().zip(&integ.values) {
                *a += scale * v;
            }
        }
        return Ok(acc);
    }

    // n = 2: W2 f = i^2 \int_{0<=t1<=t2} e^{i(t2-t1)H0 - eps(t2-t1)} V
    //               e^{it1 H0 - eps t1} V e^{-it2 H0} f dt1 dt2
    let mut acc = ScalarField::zeros(grid);
    for m2 in 0..=steps {
        let t2 = m2 as f64 * dt;
        let b = free_evolve(f, t2).mul(&vfield);
        let mut inner = ScalarField::zeros(grid);
        for m1 in 0..=m2 {
            let t1 = m1 as f64 * dt;
            let c = free_evolve(&b, -t1).mul(&vfield);
            let d = free_evolve(&c, -(t2 - t1));
            let scale = weight(m1, m2) * (-cfg.eps_reg * t2).exp();
            for (a, v) in inner.values.iter_mut().zip(&d.values) {
                *a += scale * v;
            }
        }
        let w2 = weight(m2, steps);
        for (a, v) in acc.values.iter_mut().zip(&inner.values) {
            *a -= w2 * v; // i^2 = -1
        }
    }
    Ok(acc)
}

/// [OP] Remove the projections onto the discrete eigenfunctions.
pub fn project_continuous(f: &ScalarField, pot: &Potential) -> Result<ScalarField> {
    let spec = point_spectrum(pot, f.grid)?;
    let mut out = f.clone();
    for fl in &spec.eigenfunctions {
        let coef = f.inner(fl);
        for (o, e) in out.values.iter_mut().zip(&fl.values) {
            *o -= coef * e;
        }
    }
    Ok(out)
}
