//! Free resolvent kernels, the Birman-Schwinger operator `R0(z)V` on the
//! grid, its inversion, zero-energy diagnostics, the global constant `M0`,
//! and high-energy decay checks.

use crate::error::{Result, WaveopError};
use crate::fft::{fft3_raw, C64};
use crate::fields::{sample_potential, Grid3, Potential, ScalarField};
use nalgebra::{DMatrix, DVector, Vector3};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Mean of `1/|v|` over the unit cube `[-1/2,1/2]^3`; used for the exact
/// cell average of the Coulomb-type diagonal singularity.
pub const CUBE_MEAN_INV_R: f64 = 2.380_076_852_926_264;

/// Side of the spectral cut at `z = lambda^2 -/+ i eps`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutSide {
    Plus,
    Minus,
}

/// Spectral point `z = lambda^2 + i eps` (Plus) or `z = lambda^2 - i eps`
/// (Minus), with the square-root branch fixed so the resolvent kernel decays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub lambda: f64,
    pub epsilon: f64,
    pub side: CutSide,
}

impl SpectralPoint {
    pub fn new(lambda: f64, epsilon: f64, side: CutSide) -> Self {
        assert!(lambda >= 0.0 && epsilon >= 0.0);
        SpectralPoint {
            lambda,
            epsilon,
            side,
        }
    }

    pub fn zero() -> Self {
        SpectralPoint::new(0.0, 0.0, CutSide::Plus)
    }

    pub fn z(&self) -> C64 {
        match self.side {
            CutSide::Plus => C64::new(self.lambda * self.lambda, self.epsilon),
            CutSide::Minus => C64::new(self.lambda * self.lambda, -self.epsilon),
        }
    }

    /// Branch of `sqrt(z)` continuous from the positive axis: `Im >= 0` on the
    /// Plus side and `Im <= 0` on the Minus side.
    pub fn branch_sqrt(&self) -> C64 {
        self.z().sqrt()
    }

    /// Effective wavenumber `k` such that the kernel is `e^{ik|x-y|}/(4 pi |x-y|)`;
    /// always `Im k >= 0` so the kernel never grows. On the Minus side this is
    /// `-sqrt(lambda^2 - i eps)`, i.e. the kernel `e^{-i |x-y| sqrt(z)}`.
    pub fn wavenumber(&self) -> C64 {
        match self.side {
            CutSide::Plus => self.branch_sqrt(),
            CutSide::Minus => -self.branch_sqrt(),
        }
    }

    pub fn conjugate(&self) -> SpectralPoint {
        SpectralPoint {
            side: match self.side {
                CutSide::Plus => CutSide::Minus,
                CutSide::Minus => CutSide::Plus,
            },
            ..*self
        }
    }
}

/// [OP] Kernel of the free resolvent `(-Δ - z)^{-1}` at distinct points.
pub fn free_resolvent_kernel(z: SpectralPoint, x: Vector3<f64>, y: Vector3<f64>) -> Result<C64> {
    let r = (x - y).norm();
    if r == 0.0 {
        return Err(WaveopError::SingularPoint);
    }
    Ok(free_resolvent_radial(z, r))
}

/// Kernel as a function of the distance `r > 0`.
pub fn free_resolvent_radial(z: SpectralPoint, r: f64) -> C64 {
    let ikr = C64::new(0.0, 1.0) * z.wavenumber() * r;
    ikr.exp() / (4.0 * PI * r)
}

/// Regularized diagonal: the exact cell average of `1/(4 pi |x-y|)` over a
/// cube of side `h`, divided by the cell volume so it slots into the kernel
/// entry convention.
pub fn diagonal_kernel_value(h: f64) -> f64 {
    CUBE_MEAN_INV_R / (4.0 * PI * h)
}

/// Dense integral operator on a grid: `(Af)(x) = sum_y entry(x,y) w f(y)`
/// with source-cell weight `w = spacing^3`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub grid: Grid3,
    /// Kernel values indexed `(target, source)`.
    pub entries: DMatrix<C64>,
    pub weight: f64,
}

impl OperatorMatrix {
    pub fn zeros(grid: Grid3) -> Self {
        OperatorMatrix {
            grid,
            entries: DMatrix::zeros(grid.len(), grid.len()),
            weight: grid.cell_volume(),
        }
    }

    /// Identity operator expressed as a kernel (delta as a grid function).
    pub fn identity(grid: Grid3) -> Self {
        let w = grid.cell_volume();
        let mut entries = DMatrix::zeros(grid.len(), grid.len());
        for i in 0..grid.len() {
            entries[(i, i)] = C64::new(1.0 / w, 0.0);
        }
        OperatorMatrix {
            grid,
            entries,
            weight: w,
        }
    }

    pub fn apply(&self, f: &ScalarField) -> Result<ScalarField> {
        if f.grid != self.grid {
            return Err(WaveopError::GridMismatch);
        }
        let v = DVector::from_column_slice(&f.values);
        let out = &self.entries * v * C64::new(self.weight, 0.0);
        Ok(ScalarField {
            grid: self.grid,
            values: out.iter().copied().collect(),
        })
    }

    /// Induced sup-norm: max over rows of the weighted absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.entries.nrows())
            .into_par_iter()
            .map(|i| {
                let mut acc = 0.0;
                for j in 0..self.entries.ncols() {
                    acc += self.entries[(i, j)].norm();
                }
                acc * self.weight
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Operator composition `self . other` (apply `other` first).
    pub fn compose(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.grid != other.grid {
            return Err(WaveopError::GridMismatch);
        }
        let entries = &self.entries * &other.entries * C64::new(self.weight, 0.0);
        Ok(OperatorMatrix {
            grid: self.grid,
            entries,
            weight: self.weight,
        })
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.grid != other.grid {
            return Err(WaveopError::GridMismatch);
        }
        Ok(OperatorMatrix {
            grid: self.grid,
            entries: &self.entries + &other.entries,
            weight: self.weight,
        })
    }

    pub fn scaled(&self, c: C64) -> OperatorMatrix {
        OperatorMatrix {
            grid: self.grid,
            entries: self.entries.map(|v| v * c),
            weight: self.weight,
        }
    }
}

/// Raw matrix of `I + R0(z) V` acting on plain value vectors.
fn one_plus_bs_matrix(z: SpectralPoint, vfield: &ScalarField) -> DMatrix<C64> {
    let grid = vfield.grid;
    let n = grid.len();
    let w = grid.cell_volume();
    let points = grid.points();
    let diag = diagonal_kernel_value(grid.spacing());
    let mut m = DMatrix::zeros(n, n);
    // column-major storage: fill per source column
    m.as_mut_slice()
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(j, col)| {
            let vj = vfield.values[j] * w;
            for (i, slot) in col.iter_mut().enumerate() {
                let k = if i == j {
                    C64::new(diag, 0.0)
                } else {
                    free_resolvent_radial(z, (points[i] - points[j]).norm())
                };
                *slot = k * vj;
                if i == j {
                    *slot += C64::new(1.0, 0.0);
                }
            }
        });
    m
}

/// [OP] The Birman-Schwinger operator `R0(z)V` as a grid kernel,
/// `K(x,y) = R0(z)(x,y) V(y)`, with the diagonal cell handled by the exact
/// cube average of `1/(4 pi |x-y|)`.
pub fn birman_schwinger(z: SpectralPoint, pot: &Potential, grid: Grid3) -> Result<OperatorMatrix> {
    let vfield = sample_potential(pot, grid)?;
    let n = grid.len();
    let mut m = one_plus_bs_matrix(z, &vfield);
    let w = grid.cell_volume();
    // strip the identity and the weight to recover kernel entries
    for i in 0..n {
        m[(i, i)] -= C64::new(1.0, 0.0);
    }
    m /= C64::new(w, 0.0);
    Ok(OperatorMatrix {
        grid,
        entries: m,
        weight: w,
    })
}

/// Outcome of a dense resolvent inversion.
pub struct ResolventInverse {
    /// `(I + R0(z)V)^{-1}` as a grid kernel (identity folded in).
    pub inverse: OperatorMatrix,
    /// `R_V(z) V = I - (I + R0(z)V)^{-1}`.
    pub rv_v: OperatorMatrix,
    /// Inf-norm condition estimate of the solve.
    pub condition: f64,
}

/// Condition threshold signalling an eigenvalue/resonance at this `z`.
pub const NEAR_SINGULAR_CONDITION: f64 = 1e12;

/// [OP] Dense inversion of `I + R0(z)V`.
pub fn resolvent_inverse(z: SpectralPoint, pot: &Potential, grid: Grid3) -> Result<ResolventInverse> {
    let vfield = sample_potential(pot, grid)?;
    let m = one_plus_bs_matrix(z, &vfield);
    resolvent_inverse_from_matrix(z, grid, m)
}

fn inf_norm_raw(m: &DMatrix<C64>) -> f64 {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn resolvent_inverse_from_matrix(
    z: SpectralPoint,
    grid: Grid3,
    m: DMatrix<C64>,
) -> Result<ResolventInverse> {
    let norm_m = inf_norm_raw(&m);
    let inv = m.clone().lu().try_inverse().ok_or(WaveopError::NearSingular {
        lambda: z.lambda,
        epsilon: z.epsilon,
        condition: f64::INFINITY,
    })?;
    let condition = norm_m * inf_norm_raw(&inv);
    if !condition.is_finite() || condition > NEAR_SINGULAR_CONDITION {
        return Err(WaveopError::NearSingular {
            lambda: z.lambda,
            epsilon: z.epsilon,
            condition,
        });
    }
    let w = grid.cell_volume();
    let n = grid.len();
    let mut rv = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { C64::new(1.0, 0.0) } else { C64::default() };
            rv[(i, j)] = (id - inv[(i, j)]) / w;
        }
    }
    Ok(ResolventInverse {
        inverse: OperatorMatrix {
            grid,
            entries: inv.map(|v| v / w),
            weight: w,
        },
        rv_v: OperatorMatrix {
            grid,
            entries: rv,
            weight: w,
        },
        condition,
    })
}

/// One row of the `M0` scan table.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct M0Row {
    pub lambda: f64,
    pub epsilon: f64,
    pub norm: f64,
}

/// Result of [`m0_scan`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct M0Scan {
    /// Max of the scanned inverse norms; infinite if any point was singular.
    pub m0: f64,
    pub table: Vec<M0Row>,
    /// True when the maximum sits on the scan boundary, suggesting the scan
    /// window should be enlarged.
    pub boundary_max: bool,
    pub singular_at: Option<(f64, f64)>,
}

/// [OP] Scan `||(I + R0(lambda^2 + i eps) V)^{-1}||_{inf->inf}` over a
/// `(lambda, eps)` rectangle. The norms agree between the two cut sides by
/// conjugation symmetry, so only the Plus side is scanned.
pub fn m0_scan(pot: &Potential, lambdas: &[f64], epsilons: &[f64], grid: Grid3) -> Result<M0Scan> {
    let mut jobs = Vec::new();
    for &l in lambdas {
        for &e in epsilons {
            jobs.push((l, e));
        }
    }
    let rows: Vec<(f64, f64, Option<f64>)> = jobs
        .par_iter()
        .map(|&(l, e)| {
            let z = SpectralPoint::new(l, e, CutSide::Plus);
            match resolvent_inverse(z, pot, grid) {
                Ok(r) => (l, e, Some(r.inverse.inf_norm())),
                Err(WaveopError::NearSingular { .. }) => (l, e, None),
                Err(_) => (l, e, None),
            }
        })
        .collect();

    let mut table = Vec::new();
    let mut m0 = 0.0f64;
    let mut singular_at = None;
    let mut argmax = (0.0, 0.0);
    for (l, e, norm) in rows {
        match norm {
            Some(v) => {
                table.push(M0Row {
                    lambda: l,
                    epsilon: e,
                    norm: v,
                });
                if v > m0 {
                    m0 = v;
                    argmax = (l, e);
                }
            }
            None => {
                table.push(M0Row {
                    lambda: l,
                    epsilon: e,
                    norm: f64::INFINITY,
                });
                singular_at.get_or_insert((l, e));
                m0 = f64::INFINITY;
            }
        }
    }
    let lmax = lambdas.iter().cloned().fold(f64::MIN, f64::max);
    let lmin = lambdas.iter().cloned().fold(f64::MAX, f64::min);
    let emax = epsilons.iter().cloned().fold(f64::MIN, f64::max);
    let emin = epsilons.iter().cloned().fold(f64::MAX, f64::min);
    let boundary_max = m0.is_finite()
        && (argmax.0 == lmax || argmax.0 == lmin || argmax.1 == emax || argmax.1 == emin);
    Ok(M0Scan {
        m0,
        table,
        boundary_max,
        singular_at,
    })
}

/// Result of [`zero_energy_check`].
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ZeroEnergyReport {
    pub regular: bool,
    pub inverse_norm: f64,
}

/// [OP] Zero-energy regularity: `I + R0(0)V` invertible on the grid.
pub fn zero_energy_check(pot: &Potential, grid: Grid3) -> Result<ZeroEnergyReport> {
    match resolvent_inverse(SpectralPoint::zero(), pot, grid) {
        Ok(r) => Ok(ZeroEnergyReport {
            regular: true,
            inverse_norm: r.inverse.inf_norm(),
        }),
        Err(WaveopError::NearSingular { .. }) => Ok(ZeroEnergyReport {
            regular: false,
            inverse_norm: f64::INFINITY,
        }),
        Err(e) => Err(e),
    }
}

/// First-power norm `||R0(lambda^2 + i0) V||_{inf->inf}`; independent of
/// `lambda` because only kernel moduli enter the row sums.
pub fn first_power_norm(pot: &Potential, lambda: f64, grid: Grid3) -> Result<f64> {
    let z = SpectralPoint::new(lambda, 0.0, CutSide::Plus);
    Ok(birman_schwinger(z, pot, grid)?.inf_norm())
}

fn displacement_coord(j: usize, n: usize, h: f64) -> f64 {
    if j <= n / 2 {
        j as f64 * h
    } else {
        (j as f64 - n as f64) * h
    }
}

/// [OP] High-energy decay: `||(R0(lambda^2 + i0)V)^2||_{inf->inf}` per
/// lambda, computed matrix-free by FFT convolution so fine grids are
/// affordable. The sup over the target point is taken on an axis scan
/// through the potential, which is exact for radial potentials.
pub fn high_energy_decay(pot: &Potential, lambdas: &[f64], grid: Grid3) -> Result<Vec<f64>> {
    for &l in lambdas {
        if l * grid.spacing() > PI / 2.0 + 1e-12 {
            return Err(WaveopError::UnresolvedFrequency {
                lambda: l,
                spacing: grid.spacing(),
            });
        }
    }
    if pot.is_zero() {
        return Ok(vec![0.0; lambdas.len()]);
    }
    let vfield = sample_potential(pot, grid)?;
    let n = grid.n();
    let h = grid.spacing();
    let vol = grid.cell_volume();
    let diag = diagonal_kernel_value(h);

    // scan targets along the positive x-axis through the box core
    let mut scan: Vec<Vector3<f64>> = Vec::new();
    let mut j = 0usize;
    while (j as f64) * h <= grid.box_length() / 4.0 {
        scan.push(Vector3::new(j as f64 * h, 0.0, 0.0));
        j += 1;
    }

    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let z = SpectralPoint::new(lambda, 0.0, CutSide::Plus);
        // circular kernel, displacement zero at index 0
        let mut khat = vec![C64::default(); n * n * n];
        khat.par_chunks_mut(n * n).enumerate().for_each(|(iz, plane)| {
            let dz = displacement_coord(iz, n, h);
            for iy in 0..n {
                let dy = displacement_coord(iy, n, h);
                for ix in 0..n {
                    let dx = displacement_coord(ix, n, h);
                    let r = (dx * dx + dy * dy + dz * dz).sqrt();
                    plane[ix + n * iy] = if r == 0.0 {
                        C64::new(diag, 0.0)
                    } else {
                        free_resolvent_radial(z, r)
                    };
                }
            }
        });
        fft3_raw(&mut khat, n, false);

        let mut best = 0.0f64;
        let mut buf = vec![C64::default(); n * n * n];
        for &x in &scan {
            // phi_x(u) = R0(x,u) V(u)
            buf.par_iter_mut().enumerate().for_each(|(i, b)| {
                let u = grid.point(i);
                let r = (x - u).norm();
                let k = if r == 0.0 {
                    C64::new(diag, 0.0)
                } else {
                    free_resolvent_radial(z, r)
                };
                *b = k * vfield.values[i];
            });
            fft3_raw(&mut buf, n, false);
            buf.par_iter_mut()
                .zip(khat.par_iter())
                .for_each(|(b, k)| *b *= k);
            fft3_raw(&mut buf, n, true);
            let scale = vol / (n * n * n) as f64;
            let row_sum: f64 = buf
                .par_iter()
                .enumerate()
                .map(|(i, psi)| (psi * scale * vfield.values[i]).norm() * vol)
                .sum();
            best = best.max(row_sum);
        }
        out.push(best);
    }
    Ok(out)
}

/// Discrete spectrum of `H = -Δ + V` below zero.
pub struct PointSpectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<ScalarField>,
}

/// [OP] Negative eigenvalues of the discretized Hamiltonian (spectral
/// Laplacian plus multiplication by `V`) with L2-orthonormal eigenfunctions.
pub fn point_spectrum(pot: &Potential, grid: Grid3) -> Result<PointSpectrum> {
    let tol = 1e-8;
    if pot.is_zero() {
        return Ok(PointSpectrum {
            eigenvalues: vec![],
            eigenfunctions: vec![],
        });
    }
    let vfield = sample_potential(pot, grid)?;
    // repulsive potentials have no negative spectrum
    if vfield.values.iter().all(|v| v.re >= 0.0) {
        return Ok(PointSpectrum {
            eigenvalues: vec![],
            eigenfunctions: vec![],
        });
    }
    let n = grid.n();
    let total = grid.len();
    // circulant first column of the spectral Laplacian (natural-order freqs)
    let mut mult = vec![C64::default(); total];
    for (i, m) in mult.iter_mut().enumerate() {
        let (kx, ky, kz) = grid.unindex(i);
        let fx = displacement_coord(kx, n, 2.0 * PI / grid.box_length());
        let fy = displacement_coord(ky, n, 2.0 * PI / grid.box_length());
        let fz = displacement_coord(kz, n, 2.0 * PI / grid.box_length());
        *m = C64::new(fx * fx + fy * fy + fz * fz, 0.0);
    }
    fft3_raw(&mut mult, n, true);
    let scale = 1.0 / total as f64;
    let lap_col: Vec<f64> = mult.iter().map(|v| v.re * scale).collect();

    let mut hmat = DMatrix::<f64>::zeros(total, total);
    for a in 0..total {
        let (ax, ay, az) = grid.unindex(a);
        for b in 0..total {
            let (bx, by, bz) = grid.unindex(b);
            let dx = (ax + n - bx) % n;
            let dy = (ay + n - by) % n;
            let dz = (az + n - bz) % n;
            hmat[(a, b)] = lap_col[grid.index(dx, dy, dz)];
        }
        hmat[(a, a)] += vfield.values[a].re;
    }
    let eig = hmat.symmetric_eigen();
    let mut pairs: Vec<(f64, usize)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, ev)| **ev < -tol)
        .map(|(i, ev)| (*ev, i))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let vol = grid.cell_volume();
    let mut eigenvalues = Vec::new();
    let mut eigenfunctions = Vec::new();
    for (ev, idx) in pairs {
        eigenvalues.push(ev);
        let col = eig.eigenvectors.column(idx);
        let values: Vec<C64> = col.iter().map(|v| C64::new(v / vol.sqrt(), 0.0)).collect();
        eigenfunctions.push(ScalarField { grid, values });
    }
    Ok(PointSpectrum {
        eigenvalues,
        eigenfunctions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cube_mean_inv_r_matches_refined_quadrature() {
        // midpoint quadrature over the unit cube at two resolutions with
        // Richardson extrapolation in h^2
        let eval = |m: usize| -> f64 {
            let h = 1.0 / m as f64;
            let mut acc = 0.0;
            for iz in 0..m {
                for iy in 0..m {
                    for ix in 0..m {
                        let x = (ix as f64 + 0.5) * h - 0.5;
                        let y = (iy as f64 + 0.5) * h - 0.5;
                        let z = (iz as f64 + 0.5) * h - 0.5;
                        acc += h * h * h / (x * x + y * y + z * z).sqrt();
                    }
                }
            }
            acc
        };
        let c1 = eval(40);
        let c2 = eval(80);
        let extrap = c2 + (c2 - c1);
        assert!(
            (extrap - CUBE_MEAN_INV_R).abs() < 2e-4,
            "extrapolated {extrap}"
        );
    }

    #[test]
    fn kernel_closed_forms() {
        let x = Vector3::new(1.0, 0.0, 0.0);
        let y = Vector3::zeros();
        let k0 = free_resolvent_kernel(SpectralPoint::zero(), x, y).unwrap();
        assert_relative_eq!(k0.re, 1.0 / (4.0 * PI), epsilon = 1e-14);
        assert!(k0.im.abs() < 1e-15);

        // lambda = 2, |x-y| = pi: e^{2 pi i} / (4 pi ^ 2)
        let z = SpectralPoint::new(2.0, 0.0, CutSide::Plus);
        let k = free_resolvent_kernel(z, Vector3::new(PI, 0.0, 0.0), y).unwrap();
        assert_relative_eq!(k.re, 1.0 / (4.0 * PI * PI), epsilon = 1e-12);
        assert!(k.im.abs() < 1e-12);

        // modulus is lambda-free for real energies
        for lambda in [0.0, 1.0, 3.7] {
            let z = SpectralPoint::new(lambda, 0.0, CutSide::Plus);
            let k = free_resolvent_kernel(z, x, y).unwrap();
            assert_relative_eq!(k.norm(), 1.0 / (4.0 * PI), epsilon = 1e-13);
        }

        assert!(matches!(
            free_resolvent_kernel(SpectralPoint::zero(), y, y),
            Err(WaveopError::SingularPoint)
        ));
    }

    #[test]
    fn minus_side_kernel_decays_and_conjugates() {
        let z = SpectralPoint::new(1.5, 0.3, CutSide::Minus);
        assert!(z.branch_sqrt().im <= 0.0);
        let zp = z.conjugate();
        for r in [0.5, 2.0, 7.0] {
            let km = free_resolvent_radial(z, r);
            let kp = free_resolvent_radial(zp, r);
            assert!((km - kp.conj()).norm() < 1e-14);
            assert!(km.norm() <= 1.0 / (4.0 * PI * r) + 1e-15);
        }
    }

    #[test]
    fn zero_potential_identities() {
        let grid = Grid3::new(8, 8.0);
        let bs = birman_schwinger(SpectralPoint::zero(), &Potential::zero(), grid).unwrap();
        assert_eq!(bs.inf_norm(), 0.0);
        let inv = resolvent_inverse(SpectralPoint::zero(), &Potential::zero(), grid).unwrap();
        assert_relative_eq!(inv.inverse.inf_norm(), 1.0, epsilon = 1e-12);
        assert!(inv.rv_v.inf_norm() < 1e-12);
        let zc = zero_energy_check(&Potential::zero(), grid).unwrap();
        assert!(zc.regular);
        assert_relative_eq!(zc.inverse_norm, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn first_power_norm_is_lambda_free() {
        let grid = Grid3::new(8, 8.0);
        let pot = Potential::gaussian(0.3, 1.0);
        let base = first_power_norm(&pot, 0.0, grid).unwrap();
        for lambda in [1.0, 2.0, 5.0, 10.0] {
            let v = first_power_norm(&pot, lambda, grid).unwrap();
            assert!((v - base).abs() / base < 1e-10);
        }
    }

    #[test]
    fn resolvent_inverse_residual() {
        let grid = Grid3::new(8, 8.0);
        let pot = Potential::gaussian(0.5, 1.0);
        let z = SpectralPoint::new(0.7, 0.05, CutSide::Plus);
        let inv = resolvent_inverse(z, &pot, grid).unwrap();
        let bs = birman_schwinger(z, &pot, grid).unwrap();
        let one_plus = OperatorMatrix::identity(grid).add(&bs).unwrap();
        let prod = one_plus.compose(&inv.inverse).unwrap();
        let resid = prod.add(&OperatorMatrix::identity(grid).scaled(C64::new(-1.0, 0.0)))
            .unwrap();
        assert!(resid.inf_norm() < 1e-8, "residual {}", resid.inf_norm());
        // rv_v = I - inverse
        let recon = OperatorMatrix::identity(grid)
            .add(&inv.rv_v.scaled(C64::new(-1.0, 0.0)))
            .unwrap();
        let diff = recon.add(&inv.inverse.scaled(C64::new(-1.0, 0.0))).unwrap();
        assert!(diff.inf_norm() < 1e-10);
    }

    #[test]
    fn resolvent_symmetry_under_conjugation() {
        let grid = Grid3::new(8, 8.0);
        let pot = Potential::gaussian(0.4, 1.2);
        let z = SpectralPoint::new(0.9, 0.2, CutSide::Plus);
        let a = birman_schwinger(z, &pot, grid).unwrap();
        let b = birman_schwinger(z.conjugate(), &pot, grid).unwrap();
        let mut worst = 0.0f64;
        for i in 0..a.entries.nrows() {
            for j in 0..a.entries.ncols() {
                worst = worst.max((a.entries[(i, j)] - b.entries[(i, j)].conj()).norm());
            }
        }
        assert!(worst < 1e-13);
    }

    #[test]
    fn m0_small_potential() {
        let grid = Grid3::new(8, 8.0);
        let scan = m0_scan(
            &Potential::gaussian(0.1, 1.0),
            &[0.0, 0.5, 1.0],
            &[0.0, 0.1],
            grid,
        )
        .unwrap();
        assert!(scan.m0 >= 1.0 && scan.m0 <= 1.5, "m0 = {}", scan.m0);
        assert!(scan.singular_at.is_none());
    }

    #[test]
    fn m0_nonincreasing_toward_zero_amplitude() {
        let grid = Grid3::new(8, 8.0);
        let mut prev = f64::INFINITY;
        for amp in [0.4, 0.2, 0.1, 0.05] {
            let scan = m0_scan(
                &Potential::gaussian(-amp, 1.0),
                &[0.0, 0.5],
                &[0.05],
                grid,
            )
            .unwrap();
            assert!(scan.m0 <= prev + 1e-9, "amp {amp}: {} > {prev}", scan.m0);
            prev = scan.m0;
        }
    }

    #[test]
    fn zero_energy_repulsive_regular() {
        let grid = Grid3::new(8, 8.0);
        let r = zero_energy_check(&Potential::gaussian(1.0, 1.0), grid).unwrap();
        assert!(r.regular);
    }

    #[test]
    fn point_spectrum_empty_cases() {
        let grid = Grid3::new(8, 8.0);
        assert!(point_spectrum(&Potential::zero(), grid)
            .unwrap()
            .eigenvalues
            .is_empty());
        assert!(point_spectrum(&Potential::gaussian(0.8, 1.0), grid)
            .unwrap()
            .eigenvalues
            .is_empty());
    }

    #[test]
    fn deep_well_binds_and_matches_resolvent_blowup() {
        let grid = Grid3::new(8, 8.0);
        let pot = Potential::gaussian(-3.0, 1.0);
        let spec = point_spectrum(&pot, grid).unwrap();
        assert!(!spec.eigenvalues.is_empty());
        let e0 = -spec.eigenvalues[0];
        let e = e0.sqrt();

        // The inverse norm should peak at z = -E^2, i.e. lambda = i E. Encode
        // that spectral point as lambda = 0 with eps giving z = -E^2 via the
        // analytic continuation: use the kernel with k = i E directly.
        let mut best = (0.0, 0.0);
        for t in 0..=20 {
            let scale = 0.9 + 0.01 * t as f64;
            let etest = e * scale;
            let m = bound_state_matrix(&pot, grid, etest);
            let norm = match m.lu().try_inverse() {
                Some(inv) => inf_norm_raw(&inv),
                None => f64::INFINITY,
            };
            if norm > best.1 {
                best = (etest, norm);
            }
        }
        let rel = (best.0 - e).abs() / e;
        assert!(rel <= 0.02, "resolvent peak at {} vs eigensolve {}", best.0, e);
    }

    // `I + R0(-E^2)V` with the real decaying kernel `e^{-E r}/(4 pi r)`,
    // cell-averaged over nearby source cells (product integration).
    fn bound_state_matrix(pot: &Potential, grid: Grid3, e: f64) -> DMatrix<C64> {
        let vfield = sample_potential(pot, grid).unwrap();
        let n = grid.len();
        let w = grid.cell_volume();
        let points = grid.points();
        let h = grid.spacing();
        let kernel = |r: f64| (-e * r).exp() / (4.0 * PI * r);
        let cell_avg = |d: Vector3<f64>| {
            let m = 8;
            let hh = h / m as f64;
            let mut acc = 0.0;
            for az in 0..m {
                for ay in 0..m {
                    for ax in 0..m {
                        let u = d + Vector3::new(
                            (ax as f64 + 0.5) * hh - h / 2.0,
                            (ay as f64 + 0.5) * hh - h / 2.0,
                            (az as f64 + 0.5) * hh - h / 2.0,
                        );
                        acc += kernel(u.norm());
                    }
                }
            }
            acc / (m * m * m) as f64
        };
        let mut m = DMatrix::<C64>::zeros(n, n);
        let cols: Vec<Vec<C64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut col = vec![C64::default(); n];
                let (jx, jy, jz) = grid.unindex(j);
                for (i, slot) in col.iter_mut().enumerate() {
                    let (ix, iy, iz) = grid.unindex(i);
                    let near = ix.abs_diff(jx) <= 2 && iy.abs_diff(jy) <= 2 && iz.abs_diff(jz) <= 2;
                    let k = if near {
                        cell_avg(points[i] - points[j])
                    } else {
                        kernel((points[i] - points[j]).norm())
                    };
                    *slot = C64::new(k, 0.0) * vfield.values[j] * w;
                    if i == j {
                        *slot += C64::new(1.0, 0.0);
                    }
                }
                col
            })
            .collect();
        for (j, col) in cols.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    #[test]
    fn bound_state_count_monotone_in_depth() {
        let grid = Grid3::new(8, 8.0);
        let mut prev = usize::MAX;
        for amp in [6.0, 3.0, 1.0] {
            let spec = point_spectrum(&Potential::gaussian(-amp, 1.0), grid).unwrap();
            assert!(spec.eigenvalues.len() <= prev);
            prev = spec.eigenvalues.len();
        }
    }

    #[test]
    fn eigenfunction_orthonormal_and_projector_input() {
        let grid = Grid3::new(8, 8.0);
        let spec = point_spectrum(&Potential::gaussian(-4.0, 1.0), grid).unwrap();
        assert!(!spec.eigenvalues.is_empty());
        for (i, fi) in spec.eigenfunctions.iter().enumerate() {
            for (j, fj) in spec.eigenfunctions.iter().enumerate() {
                let ip = fi.inner(fj);
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip.re - expected).abs() < 1e-8 && ip.im.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn high_energy_zero_potential() {
        let grid = Grid3::new(16, 8.0);
        let out = high_energy_decay(&Potential::zero(), &[0.5, 1.0], grid).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn high_energy_requires_resolution() {
        let grid = Grid3::new(8, 8.0);
        let err = high_energy_decay(&Potential::gaussian(0.1, 1.0), &[5.0], grid).unwrap_err();
        assert_eq!(err.code(), "UnresolvedFrequency");
    }

    #[test]
    fn squared_norm_fft_matches_dense() {
        // cross-check the FFT row-norm path against the dense composition on
        // a tiny grid, at the box center where wrap conventions agree
        let grid = Grid3::new(8, 8.0);
        let pot = Potential::gaussian(0.3, 1.0);
        let lambda = 0.5;
        let fft_val = high_energy_decay(&pot, &[lambda], grid).unwrap()[0];

        let z = SpectralPoint::new(lambda, 0.0, CutSide::Plus);
        let bs = birman_schwinger(z, &pot, grid).unwrap();
        let sq = bs.compose(&bs).unwrap();
        // dense norm restricted to the same axis scan plus periodic kernel:
        // compare row sums directly at the scanned points
        let mut dense_best = 0.0f64;
        for j in 0..=(grid.n() / 4) {
            let row = grid.index(grid.n() / 2 + j, grid.n() / 2, grid.n() / 2);
            let mut acc = 0.0;
            for c in 0..grid.len() {
                acc += sq.entries[(row, c)].norm() * sq.weight;
            }
            dense_best = dense_best.max(acc);
        }
        // FFT path wraps the kernel periodically, dense path does not;
        // on box 8 with support radius ~3 the mismatch is a few percent
        assert_relative_eq!(fft_val, dense_best, max_relative = 0.08);
    }
}
