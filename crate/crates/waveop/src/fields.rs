//! Grids, fields, potentials, Fourier transforms, and the dyadic / Lorentz
//! norms used throughout the crate.

use crate::error::{Result, WaveopError};
use crate::fft::{centered_fft3, C64};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};

/// Periodic uniform discretization of a cube `[-L/2, L/2)^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid3 {
    n_per_axis: usize,
    box_length: f64,
}

impl Grid3 {
    pub fn new(n_per_axis: usize, box_length: f64) -> Self {
        assert!(n_per_axis.is_power_of_two(), "n_per_axis must be a power of two");
        assert!(box_length > 0.0);
        Grid3 { n_per_axis, box_length }
    }

    pub fn n(&self) -> usize {
        self.n_per_axis
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coordinate of a 1-D index along one axis.
    pub fn coord(&self, j: usize) -> f64 {
        (j as f64 - self.n_per_axis as f64 / 2.0) * self.spacing()
    }

    /// Flat index convention: x fastest, `idx = ix + n*(iy + n*iz)`.
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n_per_axis * (iy + self.n_per_axis * iz)
    }

    pub fn unindex(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n_per_axis;
        (idx % n, (idx / n) % n, idx / (n * n))
    }

    pub fn point(&self, idx: usize) -> Vector3<f64> {
        let (ix, iy, iz) = self.unindex(idx);
        Vector3::new(self.coord(ix), self.coord(iy), self.coord(iz))
    }

    pub fn points(&self) -> Vec<Vector3<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Dual grid: same node count, frequencies `2 pi k / L`.
    pub fn dual(&self) -> Grid3 {
        let dxi = 2.0 * PI / self.box_length;
        Grid3 {
            n_per_axis: self.n_per_axis,
            box_length: self.n_per_axis as f64 * dxi,
        }
    }
}

/// Complex-valued function sampled on a [`Grid3`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid3,
    pub values: Vec<C64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid3) -> Self {
        ScalarField {
            grid,
            values: vec![C64::default(); grid.len()],
        }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn(Vector3<f64>) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        ScalarField { grid, values }
    }

    pub fn gaussian(grid: Grid3, width: f64, center: Vector3<f64>) -> Self {
        Self::from_fn(grid, |x| {
            let d = x - center;
            C64::new((-d.norm_squared() / (2.0 * width * width)).exp(), 0.0)
        })
    }

    pub fn l2_norm(&self) -> f64 {
        let vol = self.grid.cell_volume();
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * vol).sqrt()
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let vol = self.grid.cell_volume();
        if p.is_infinite() {
            return self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        (self.values.iter().map(|v| v.norm().powf(p)).sum::<f64>() * vol).powf(1.0 / p)
    }

    pub fn l1_norm(&self) -> f64 {
        self.lp_norm(1.0)
    }

    pub fn inner(&self, other: &ScalarField) -> C64 {
        assert_eq!(self.grid, other.grid);
        let vol = self.grid.cell_volume();
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum::<C64>()
            * vol
    }

    pub fn scaled(&self, c: C64) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, other.grid);
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    pub fn conj(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v.conj()).collect(),
        }
    }

    /// Pointwise product `self * other`.
    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        assert_eq!(self.grid, other.grid);
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        }
    }

    /// Trilinear interpolation with periodic wrap.
    pub fn interp(&self, p: Vector3<f64>) -> C64 {
        let n = self.grid.n();
        let h = self.grid.spacing();
        let half = self.grid.box_length() / 2.0;
        let mut idx = [0usize; 3];
        let mut frac = [0f64; 3];
        for a in 0..3 {
            let u = (p[a] + half) / h;
            let base = u.floor();
            frac[a] = u - base;
            idx[a] = (base.rem_euclid(n as f64)) as usize % n;
        }
        let mut acc = C64::default();
        for dz in 0..2 {
            let wz = if dz == 0 { 1.0 - frac[2] } else { frac[2] };
            let iz = (idx[2] + dz) % n;
            for dy in 0..2 {
                let wy = if dy == 0 { 1.0 - frac[1] } else { frac[1] };
                let iy = (idx[1] + dy) % n;
                for dx in 0..2 {
                    let wx = if dx == 0 { 1.0 - frac[0] } else { frac[0] };
                    let ix = (idx[0] + dx) % n;
                    acc += self.values[self.grid.index(ix, iy, iz)] * (wx * wy * wz);
                }
            }
        }
        acc
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// One Gaussian bump `a * exp(-|x-c|^2 / (2 w^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub center: [f64; 3],
    pub width: f64,
}

impl GaussianTerm {
    pub fn centered(amplitude: f64, width: f64) -> Self {
        GaussianTerm {
            amplitude,
            center: [0.0; 3],
            width,
        }
    }
}

/// Real-valued potential, either an analytic Gaussian mixture (exact Fourier
/// transform) or a tabulated field.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    GaussianMixture(Vec<GaussianTerm>),
    Tabulated(ScalarField),
}

impl Potential {
    pub fn zero() -> Self {
        Potential::GaussianMixture(Vec::new())
    }

    pub fn gaussian(amplitude: f64, width: f64) -> Self {
        Potential::GaussianMixture(vec![GaussianTerm::centered(amplitude, width)])
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Potential::GaussianMixture(terms) => terms.iter().all(|t| t.amplitude == 0.0),
            Potential::Tabulated(f) => f.values.iter().all(|v| v.norm() == 0.0),
        }
    }

    pub fn min_width(&self) -> Option<f64> {
        match self {
            Potential::GaussianMixture(terms) => terms
                .iter()
                .map(|t| t.width)
                .min_by(|a, b| a.partial_cmp(b).unwrap()),
            Potential::Tabulated(_) => None,
        }
    }

    /// Pointwise evaluation. Tabulated potentials interpolate trilinearly.
    pub fn eval(&self, x: Vector3<f64>) -> f64 {
        match self {
            Potential::GaussianMixture(terms) => terms
                .iter()
                .map(|t| {
                    let d = x - Vector3::from(t.center);
                    t.amplitude * (-d.norm_squared() / (2.0 * t.width * t.width)).exp()
                })
                .sum(),
            Potential::Tabulated(f) => f.interp(x).re,
        }
    }

    /// Exact Fourier transform for mixtures:
    /// `V_hat(xi) = sum_j a_j (2 pi)^{3/2} w_j^3 exp(-w_j^2 |xi|^2 / 2) exp(-i xi . c_j)`.
    /// Tabulated potentials fall back to the discrete transform of the table.
    pub fn fourier(&self, xi: Vector3<f64>) -> C64 {
        match self {
            Potential::GaussianMixture(terms) => terms
                .iter()
                .map(|t| {
                    let amp = t.amplitude
                        * (2.0 * PI).powf(1.5)
                        * t.width.powi(3)
                        * (-t.width * t.width * xi.norm_squared() / 2.0).exp();
                    C64::from_polar(1.0, -xi.dot(&Vector3::from(t.center))) * amp
                })
                .sum(),
            Potential::Tabulated(f) => {
                let vol = f.grid.cell_volume();
                f.values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * C64::from_polar(1.0, -f.grid.point(i).dot(&xi)))
                    .sum::<C64>()
                    * vol
            }
        }
    }

    /// Scale all amplitudes by `s` (mixtures only keep analyticity).
    pub fn scaled(&self, s: f64) -> Potential {
        match self {
            Potential::GaussianMixture(terms) => Potential::GaussianMixture(
                terms
                    .iter()
                    .map(|t| GaussianTerm {
                        amplitude: t.amplitude * s,
                        ..*t
                    })
                    .collect(),
            ),
            Potential::Tabulated(f) => Potential::Tabulated(f.scaled(C64::new(s, 0.0))),
        }
    }

    pub fn sum(&self, other: &Potential) -> Potential {
        match (self, other) {
            (Potential::GaussianMixture(a), Potential::GaussianMixture(b)) => {
                let mut terms = a.clone();
                terms.extend_from_slice(b);
                Potential::GaussianMixture(terms)
            }
            _ => panic!("sum only defined for Gaussian mixtures"),
        }
    }
}

/// [OP] Pointwise sampling of a potential on a grid. Fails when the grid does
/// not resolve the narrowest Gaussian (spacing must not exceed the width, so
/// the spectral tail beyond the grid Nyquist frequency stays below 1%).
pub fn sample_potential(pot: &Potential, grid: Grid3) -> Result<ScalarField> {
    if let Some(w) = pot.min_width() {
        if grid.spacing() > w {
            return Err(WaveopError::UnresolvedPotential {
                spacing: grid.spacing(),
                width: w,
            });
        }
    }
    if let Potential::Tabulated(f) = pot {
        if f.grid == grid {
            // pass-through keeps the table bit-identical
            return Ok(ScalarField {
                grid,
                values: f.values.iter().map(|v| C64::new(v.re, 0.0)).collect(),
            });
        }
    }
    Ok(ScalarField::from_fn(grid, |x| C64::new(pot.eval(x), 0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// [OP] Discrete Fourier transform with the continuum normalization:
/// forward `f_hat(xi) = sum f(x) e^{-i x xi} h^3`, inverse carries `(2 pi)^{-3}`.
pub fn fourier_transform(f: &ScalarField, direction: Direction) -> ScalarField {
    let n = f.grid.n();
    let mut values = f.values.clone();
    match direction {
        Direction::Forward => {
            centered_fft3(&mut values, n, f.grid.cell_volume(), false);
        }
        Direction::Inverse => {
            let scale = f.grid.cell_volume() / (2.0 * PI).powi(3);
            centered_fft3(&mut values, n, scale, true);
        }
    }
    ScalarField {
        grid: f.grid.dual(),
        values,
    }
}

/// Result of a dyadic-shell norm computation.
#[derive(Debug, Clone, Copy)]
pub struct BNormReport {
    pub value: f64,
    /// L2 mass fraction outside the trusted core `|x|_inf <= L/4`.
    pub tail_fraction: f64,
}

/// [OP] Dyadic-shell norm. Dotted: `sum_k 2^{alpha k} ||1_{A_k} f||_2` over all
/// shells present on the grid; undotted replaces the `k < 0` shells by the
/// unit-ball term. Shells beyond the box are absent; the dropped-tail estimate
/// is the reported `tail_fraction`.
pub fn b_norm_report(f: &ScalarField, alpha: f64, dotted: bool) -> Result<BNormReport> {
    let l2 = f.l2_norm();
    let quarter = f.grid.box_length() / 4.0;
    let vol = f.grid.cell_volume();
    let mut tail = 0.0;
    for i in 0..f.grid.len() {
        let p = f.grid.point(i);
        if p.x.abs() > quarter || p.y.abs() > quarter || p.z.abs() > quarter {
            tail += f.values[i].norm_sqr() * vol;
        }
    }
    let tail_fraction = if l2 > 0.0 { tail.sqrt() / l2 } else { 0.0 };
    if tail_fraction >= 0.01 {
        return Err(WaveopError::TailTooLarge {
            fraction: tail_fraction,
            limit: 0.01,
        });
    }

    let h = f.grid.spacing();
    // the origin cell stands in for radii below h/2
    let k_origin = (h / 2.0).log2().floor() as i32;
    let mut shell_mass: std::collections::BTreeMap<i32, f64> = std::collections::BTreeMap::new();
    let mut ball_mass = 0.0;
    for i in 0..f.grid.len() {
        let r = f.grid.point(i).norm();
        let m = f.values[i].norm_sqr() * vol;
        if m == 0.0 {
            continue;
        }
        let k = if r == 0.0 { k_origin } else { r.log2().floor() as i32 };
        if !dotted && r <= 1.0 {
            ball_mass += m;
        } else {
            *shell_mass.entry(k).or_insert(0.0) += m;
        }
    }
    let mut value = if dotted { 0.0 } else { ball_mass.sqrt() };
    for (k, m) in shell_mass {
        value += 2f64.powf(alpha * k as f64) * m.sqrt();
    }
    Ok(BNormReport {
        value,
        tail_fraction,
    })
}

/// Convenience wrapper returning only the norm value.
pub fn b_norm(f: &ScalarField, alpha: f64, dotted: bool) -> Result<f64> {
    b_norm_report(f, alpha, dotted).map(|r| r.value)
}

/// [OP] Lorentz norm `L^{p,q}` by exact discrete rearrangement: sort `|f|`
/// with cell measure `h^3` and integrate `(t^{1/p} f*(t))^q dt/t` piecewise.
pub fn lorentz_norm(f: &ScalarField, p: f64, q: f64) -> f64 {
    assert!(p > 1.0 && p.is_finite(), "p must lie in (1, inf)");
    assert!(q >= 1.0, "q must lie in [1, inf]");
    let vol = f.grid.cell_volume();
    let mut mags: Vec<f64> = f.values.iter().map(|v| v.norm()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if q.is_infinite() {
        // sup over [t_k, t_{k+1}) of t^{1/p} f*(t) sits at the right endpoint
        return mags
            .iter()
            .enumerate()
            .map(|(k, m)| m * (((k + 1) as f64) * vol).powf(1.0 / p))
            .fold(0.0, f64::max);
    }
    let e = q / p;
    let mut acc = 0.0;
    let mut t_prev = 0.0f64;
    for (k, m) in mags.iter().enumerate() {
        if *m == 0.0 {
            break;
        }
        let t_next = (k + 1) as f64 * vol;
        acc += m.powf(q) * (t_next.powf(e) - t_prev.powf(e));
        t_prev = t_next;
    }
    (acc / e).powf(1.0 / q)
}

/// Quadrature rule on the unit sphere with positive weights summing to 4 pi.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    pub nodes: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
    /// Degree of polynomial exactness.
    pub degree: usize,
}

impl SphereQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Vector3<f64>) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(n, w)| w * f(*n))
            .sum()
    }
}

fn lebedev_nodes_a1() -> Vec<Vector3<f64>> {
    vec![
        Vector3::new(1.0, 0.0, 0.0),
        Vector3::new(-1.0, 0.0, 0.0),
        Vector3::new(0.0, 1.0, 0.0),
        Vector3::new(0.0, -1.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
        Vector3::new(0.0, 0.0, -1.0),
    ]
}

fn lebedev_nodes_a2() -> Vec<Vector3<f64>> {
    let s = 1.0 / 2f64.sqrt();
    let mut v = Vec::new();
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        for sa in [1.0, -1.0] {
            for sb in [1.0, -1.0] {
                let mut n = Vector3::zeros();
                n[a] = sa * s;
                n[b] = sb * s;
                v.push(n);
            }
        }
    }
    v
}

fn lebedev_nodes_a3() -> Vec<Vector3<f64>> {
    let s = 1.0 / 3f64.sqrt();
    let mut v = Vec::new();
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                v.push(Vector3::new(sx * s, sy * s, sz * s));
            }
        }
    }
    v
}

/// Gauss-Legendre nodes/weights on [-1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on Legendre polynomials
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(m, x);
            let dx = -p / dp;
            x += dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(m, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// [OP] Sphere rules. Orders 6/14/26 are the octahedral Lebedev sets;
/// 50 and 98 are symmetric Gauss-Legendre x uniform product rules.
pub fn sphere_rule(order: usize) -> Result<SphereQuadrature> {
    let four_pi = 4.0 * PI;
    match order {
        6 => {
            let nodes = lebedev_nodes_a1();
            let w = four_pi / 6.0;
            Ok(SphereQuadrature {
                weights: vec![w; nodes.len()],
                nodes,
                degree: 3,
            })
        }
        14 => {
            let mut nodes = lebedev_nodes_a1();
            let mut weights = vec![four_pi / 15.0; 6];
            nodes.extend(lebedev_nodes_a3());
            weights.extend(vec![four_pi * 3.0 / 40.0; 8]);
            Ok(SphereQuadrature {
                nodes,
                weights,
                degree: 5,
            })
        }
        26 => {
            let mut nodes = lebedev_nodes_a1();
            let mut weights = vec![four_pi / 21.0; 6];
            nodes.extend(lebedev_nodes_a2());
            weights.extend(vec![four_pi * 4.0 / 105.0; 12]);
            nodes.extend(lebedev_nodes_a3());
            weights.extend(vec![four_pi * 27.0 / 840.0; 8]);
            Ok(SphereQuadrature {
                nodes,
                weights,
                degree: 7,
            })
        }
        50 | 98 => {
            let m = if order == 50 { 5 } else { 7 };
            let (ct, wt) = gauss_legendre(m);
            let n_phi = 2 * m;
            let mut nodes = Vec::with_capacity(order);
            let mut weights = Vec::with_capacity(order);
            for i in 0..m {
                let cos_t = ct[i];
                let sin_t = (1.0 - cos_t * cos_t).sqrt();
                for j in 0..n_phi {
                    let phi = 2.0 * PI * (j as f64 + 0.5) / n_phi as f64;
                    nodes.push(Vector3::new(
                        sin_t * phi.cos(),
                        sin_t * phi.sin(),
                        cos_t,
                    ));
                    weights.push(wt[i] * 2.0 * PI / n_phi as f64);
                }
            }
            Ok(SphereQuadrature {
                nodes,
                weights,
                degree: 2 * m - 1,
            })
        }
        other => Err(WaveopError::UnsupportedOrder(other)),
    }
}

const FIELD_MAGIC: &[u8; 4] = b"WOPF";
const FIELD_VERSION: u32 = 1;

/// Write a field in the binary format: magic "WOPF", version (u32 LE),
/// n_per_axis (u32 LE), box_length (f64 LE), then interleaved re/im f64 LE
/// pairs in row-major x-fastest order.
pub fn write_field(f: &ScalarField, mut w: impl Write) -> Result<()> {
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&FIELD_VERSION.to_le_bytes())?;
    w.write_all(&(f.grid.n() as u32).to_le_bytes())?;
    w.write_all(&f.grid.box_length().to_le_bytes())?;
    for v in &f.values {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field(mut r: impl Read) -> Result<ScalarField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FIELD_MAGIC {
        return Err(WaveopError::ConfigInvalid(format!(
            "bad field magic {:?}",
            magic
        )));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != FIELD_VERSION {
        return Err(WaveopError::ConfigInvalid(format!(
            "unsupported field version {version}"
        )));
    }
    r.read_exact(&mut b4)?;
    let n = u32::from_le_bytes(b4) as usize;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let box_length = f64::from_le_bytes(b8);
    let grid = Grid3::new(n, box_length);
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        r.read_exact(&mut b8)?;
        let re = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let im = f64::from_le_bytes(b8);
        values.push(C64::new(re, im));
    }
    Ok(ScalarField { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zero_mixture_samples_to_zero() {
        let grid = Grid3::new(8, 8.0);
        let f = sample_potential(&Potential::zero(), grid).unwrap();
        assert!(f.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn unit_gaussian_values() {
        let grid = Grid3::new(16, 16.0);
        let f = sample_potential(&Potential::gaussian(1.0, 1.0), grid).unwrap();
        let origin = grid.index(8, 8, 8);
        assert_relative_eq!(f.values[origin].re, 1.0, epsilon = 1e-14);
        let off = grid.index(9, 8, 8); // |x| = 1
        assert_relative_eq!(f.values[off].re, (-0.5f64).exp(), epsilon = 1e-14);
        assert_eq!(f.values[origin].im, 0.0);
    }

    #[test]
    fn tabulated_pass_through() {
        let grid = Grid3::new(8, 8.0);
        let base = ScalarField::from_fn(grid, |x| C64::new((x.x * 0.3).cos(), 0.0));
        let f = sample_potential(&Potential::Tabulated(base.clone()), grid).unwrap();
        assert_eq!(f.values, base.values);
    }

    #[test]
    fn unresolved_potential_rejected() {
        let grid = Grid3::new(8, 16.0); // spacing 2
        let err = sample_potential(&Potential::gaussian(1.0, 1.0), grid).unwrap_err();
        assert_eq!(err.code(), "UnresolvedPotential");
    }

    #[test]
    fn delta_site_has_flat_spectrum() {
        let grid = Grid3::new(8, 8.0);
        let mut f = ScalarField::zeros(grid);
        f.values[grid.index(4, 4, 4)] = C64::new(1.0, 0.0);
        let fhat = fourier_transform(&f, Direction::Forward);
        let h3 = grid.cell_volume();
        for v in &fhat.values {
            assert_relative_eq!(v.re, h3, epsilon = 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_transform_closed_form() {
        let grid = Grid3::new(32, 16.0);
        let f = ScalarField::gaussian(grid, 1.0, Vector3::zeros());
        let fhat = fourier_transform(&f, Direction::Forward);
        let dual = grid.dual();
        for &idx in &[
            dual.index(16, 16, 16),
            dual.index(18, 16, 16),
            dual.index(16, 20, 17),
        ] {
            let xi = dual.point(idx);
            let expected = (2.0 * PI).powf(1.5) * (-xi.norm_squared() / 2.0).exp();
            assert!((fhat.values[idx].re - expected).abs() < 1e-6);
            assert!(fhat.values[idx].im.abs() < 1e-9);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let grid = Grid3::new(16, 10.0);
        let f = ScalarField::from_fn(grid, |x| C64::new((x.x).sin(), (x.y * x.z * 0.2).cos()));
        let back = fourier_transform(&fourier_transform(&f, Direction::Forward), Direction::Inverse);
        let err = f
            .values
            .iter()
            .zip(&back.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-12, "round-trip error {err}");
    }

    #[test]
    fn plancherel_identity() {
        let grid = Grid3::new(16, 12.0);
        let f = ScalarField::from_fn(grid, |x| C64::new((1.3 * x.x).sin(), (0.7 * x.y).cos()));
        let fhat = fourier_transform(&f, Direction::Forward);
        let lhs = f.l2_norm().powi(2);
        let rhs = fhat.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
            * fhat.grid.cell_volume()
            / (2.0 * PI).powi(3);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }

    #[test]
    fn b_norm_zero_and_ball() {
        let grid = Grid3::new(64, 8.0);
        let zero = ScalarField::zeros(grid);
        assert_eq!(b_norm(&zero, 0.7, false).unwrap(), 0.0);

        let ball = ScalarField::from_fn(grid, |x| {
            if x.norm() <= 1.0 {
                C64::new(1.0, 0.0)
            } else {
                C64::default()
            }
        });
        let expected = (4.0 * PI / 3.0f64).sqrt();
        for alpha in [0.0, 0.5, 1.3] {
            let v = b_norm(&ball, alpha, false).unwrap();
            assert_relative_eq!(v, expected, max_relative = 0.03);
        }
    }

    #[test]
    fn b_norm_gaussian_matches_radial_oracle() {
        let grid = Grid3::new(64, 16.0);
        let f = ScalarField::gaussian(grid, 1.0, Vector3::zeros());
        let got = b_norm(&f, 0.5, false).unwrap();

        // radial-shell quadrature oracle: ||1_{A_k} e^{-r^2/2}||_2 via fine 1-D integration
        let radial_l2 = |r0: f64, r1: f64| -> f64 {
            let m = 4000;
            let dr = (r1 - r0) / m as f64;
            let mut acc = 0.0;
            for i in 0..m {
                let r = r0 + (i as f64 + 0.5) * dr;
                acc += (-r * r).exp() * 4.0 * PI * r * r * dr;
            }
            acc.sqrt()
        };
        let mut oracle = radial_l2(0.0, 1.0);
        for k in 0..6 {
            let r0 = 2f64.powi(k);
            let r1 = 2f64.powi(k + 1);
            oracle += 2f64.powf(0.5 * k as f64) * radial_l2(r0, r1);
        }
        assert_relative_eq!(got, oracle, max_relative = 0.01);
    }

    #[test]
    fn b_norm_monotone_in_alpha() {
        let grid = Grid3::new(32, 16.0);
        let f = ScalarField::from_fn(grid, |x| C64::new((-x.norm()).exp(), 0.0));
        let mut prev = 0.0;
        for alpha in [0.0, 0.25, 0.5, 1.0, 1.5] {
            let v = b_norm(&f, alpha, false).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn b_norm_tail_rejected() {
        let grid = Grid3::new(16, 8.0);
        let f = ScalarField::from_fn(grid, |_| C64::new(1.0, 0.0));
        assert_eq!(
            b_norm(&f, 0.5, false).unwrap_err().code(),
            "TailTooLarge"
        );
    }

    #[test]
    fn lorentz_zero_and_ball() {
        let grid = Grid3::new(64, 8.0);
        assert_eq!(lorentz_norm(&ScalarField::zeros(grid), 2.0, 1.0), 0.0);
        let ball = ScalarField::from_fn(grid, |x| {
            if x.norm() <= 1.0 {
                C64::new(1.0, 0.0)
            } else {
                C64::default()
            }
        });
        let got = lorentz_norm(&ball, 1.5, 1.0);
        let expected = (4.0 * PI / 3.0f64).powf(2.0 / 3.0) * 1.5;
        assert_relative_eq!(got, expected, max_relative = 0.03);
        assert!((expected - 3.901).abs() < 5e-3);
    }

    #[test]
    fn lorentz_pp_equals_lp() {
        let grid = Grid3::new(16, 8.0);
        let mut state = 0x243F6A88u64;
        let mut rnd = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as f64 / (1u64 << 31) as f64 - 1.0
        };
        for _ in 0..3 {
            let f = ScalarField {
                grid,
                values: (0..grid.len()).map(|_| C64::new(rnd(), rnd())).collect(),
            };
            for p in [1.5, 2.0, 3.0] {
                assert_relative_eq!(
                    lorentz_norm(&f, p, p),
                    f.lp_norm(p),
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn sphere_rules_basic() {
        for order in [6usize, 14, 26, 50, 98] {
            let rule = sphere_rule(order).unwrap();
            assert_eq!(rule.len(), order);
            assert!(rule.weights.iter().all(|w| *w > 0.0));
            let total: f64 = rule.weights.iter().sum();
            assert_relative_eq!(total, 4.0 * PI, epsilon = 1e-12);
            let second = rule.integrate(|w| w.x * w.x);
            assert_relative_eq!(second, 4.0 * PI / 3.0, epsilon = 1e-10);
        }
        assert_eq!(
            sphere_rule(11).unwrap_err().code(),
            "UnsupportedOrder"
        );
    }

    #[test]
    fn minimal_rule_is_octahedral() {
        let rule = sphere_rule(6).unwrap();
        assert_eq!(rule.len(), 6);
        assert!(rule.weights.iter().all(|w| (*w - 4.0 * PI / 6.0).abs() < 1e-14));
    }

    #[test]
    fn field_io_round_trip() {
        let grid = Grid3::new(8, 5.0);
        let f = ScalarField::from_fn(grid, |x| C64::new(x.x + 0.1, x.y - x.z));
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        assert_eq!(f, back);
    }
}
