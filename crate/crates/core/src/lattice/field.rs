use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use super::fft::fft_nd;
use super::grid::LatticeGrid;
use crate::error::{Error, Result};

/// Complex samples on the sites of a [`LatticeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: LatticeGrid,
    values: Vec<Complex64>,
}

/// Lattice Fourier coefficients `F(f)(xi_k)`, stored in FFT slot order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumField {
    grid: LatticeGrid,
    coeffs: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: LatticeGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts_unchecked(grid: LatticeGrid, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: LatticeGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn constant(grid: LatticeGrid, c: Complex64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    /// Kronecker delta of height `value` at site slot `at`.
    pub fn spike(grid: LatticeGrid, at: &[usize], value: Complex64) -> Self {
        let mut f = Self::zeros(grid);
        f.values[grid.ravel(at)] = value;
        f
    }

    /// Plane wave `e^{i x . xi_k}` for signed frequency index vector `k`.
    pub fn plane_wave(grid: LatticeGrid, k: &[i64]) -> Self {
        assert_eq!(k.len(), grid.dim());
        let m = grid.points() as f64;
        let mut idx = vec![0usize; grid.dim()];
        let values = (0..grid.len())
            .map(|flat| {
                grid.unravel(flat, &mut idx);
                let phase: f64 = idx
                    .iter()
                    .zip(k)
                    .map(|(&n, &kk)| {
                        // reduce n*k mod M before scaling to keep the phase exact
                        let r = (n as i64 * kk).rem_euclid(grid.points() as i64);
                        2.0 * std::f64::consts::PI * r as f64 / m
                    })
                    .sum();
                Complex64::from_polar(1.0, phase)
            })
            .collect();
        Self { grid, values }
    }

    /// Samples `f` at the site coordinates `x = h n`.
    pub fn from_fn(grid: LatticeGrid, f: impl FnMut(&[f64]) -> Complex64) -> Result<Self> {
        Self::new(grid, grid.site_map(f))
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `self - other` on identical grids.
    pub fn try_sub(&self, other: &ComplexField) -> Result<Self> {
        self.grid.ensure_matches(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    /// `self + other` on identical grids.
    pub fn try_add(&self, other: &ComplexField) -> Result<Self> {
        self.grid.ensure_matches(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    /// Lattice mean `L^{-d} h^d sum f`.
    pub fn mean(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() / self.values.len() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `h`-weighted inner product `h^d sum f conj(g)`.
    pub fn inner(&self, other: &ComplexField) -> Result<Complex64> {
        self.grid.ensure_matches(&other.grid)?;
        let s: Complex64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.grid.cell_volume())
    }
}

impl Add for &ComplexField {
    type Output = ComplexField;
    fn add(self, rhs: Self) -> ComplexField {
        self.try_add(rhs).expect("grid mismatch")
    }
}

impl Sub for &ComplexField {
    type Output = ComplexField;
    fn sub(self, rhs: Self) -> ComplexField {
        self.try_sub(rhs).expect("grid mismatch")
    }
}

impl Mul<Complex64> for &ComplexField {
    type Output = ComplexField;
    fn mul(self, rhs: Complex64) -> ComplexField {
        self.scale(rhs)
    }
}

impl SpectrumField {
    pub fn new(grid: LatticeGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        if let Some(i) = coeffs.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn zeros(grid: LatticeGrid) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn grid(&self) -> &LatticeGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at signed frequency index vector `k`.
    pub fn at(&self, k: &[i64]) -> Complex64 {
        let idx: Vec<usize> = k.iter().map(|&kk| self.grid.freq_slot(kk)).collect();
        self.coeffs[self.grid.ravel(&idx)]
    }

    /// Frequency-side squared norm `(2 pi)^{-d} sum |F|^2 (2 pi / L)^d`.
    pub fn l2_norm_squared(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>() / self.grid.volume()
    }
}

/// Lattice Fourier transform `h^d sum_n f(hn) e^{-i h n . xi_k}` on the torus.
pub fn dft(f: &ComplexField) -> SpectrumField {
    let g = f.grid;
    let mut coeffs = f.values.clone();
    fft_nd(&mut coeffs, g.dim(), g.points(), false);
    let w = g.cell_volume();
    coeffs.iter_mut().for_each(|c| *c *= w);
    SpectrumField { grid: g, coeffs }
}

/// Inverse of [`dft`]: `(2 pi)^{-d} sum_k F_k e^{i h n . xi_k} (2 pi / L)^d`.
pub fn idft(spec: &SpectrumField) -> ComplexField {
    let g = spec.grid;
    let mut values = spec.coeffs.clone();
    fft_nd(&mut values, g.dim(), g.points(), true);
    let w = 1.0 / g.volume();
    values.iter_mut().for_each(|v| *v *= w);
    ComplexField { grid: g, values }
}

/// Symbol of `-Delta_h`: `sigma(xi) = sum_j (4/h^2) sin^2(h xi_j / 2)`.
pub fn symbol_sigma(grid: &LatticeGrid) -> Vec<f64> {
    let h = grid.mesh();
    let axis: Vec<f64> = (0..grid.points())
        .map(|j| {
            let s = (0.5 * h * grid.wavenumber(j)).sin();
            4.0 / (h * h) * s * s
        })
        .collect();
    let mut idx = vec![0usize; grid.dim()];
    (0..grid.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            idx.iter().map(|&i| axis[i]).sum()
        })
        .collect()
}

/// `|xi|^2` on the frequency grid, the continuum counterpart of `sigma`.
pub fn symbol_xi_squared(grid: &LatticeGrid) -> Vec<f64> {
    grid.frequency_map(|xi| xi.iter().map(|x| x * x).sum())
}

/// Periodic five-point (in 2D) stencil `sum_j h^{-2}(u(x+he_j)+u(x-he_j)-2u(x))`.
pub fn discrete_laplacian(f: &ComplexField) -> ComplexField {
    let g = f.grid;
    let m = g.points();
    let inv_h2 = 1.0 / (g.mesh() * g.mesh());
    let d = g.dim();
    let mut out = vec![Complex64::default(); g.len()];
    let mut idx = vec![0usize; d];
    for (flat, o) in out.iter_mut().enumerate() {
        g.unravel(flat, &mut idx);
        let centre = f.values[flat];
        let mut acc = Complex64::default();
        for axis in 0..d {
            let stride = m.pow((d - 1 - axis) as u32);
            let i = idx[axis];
            let up = if i + 1 == m { flat + stride - m * stride } else { flat + stride };
            let down = if i == 0 { flat + (m - 1) * stride } else { flat - stride };
            acc += f.values[up] + f.values[down] - 2.0 * centre;
        }
        *o = acc * inv_h2;
    }
    ComplexField { grid: g, values: out }
}

/// `idft(m . dft(f))` for a real or complex symbol in FFT slot order.
pub fn apply_multiplier<T>(f: &ComplexField, symbol: &[T]) -> Result<ComplexField>
where
    T: Copy + Into<Complex64>,
{
    let g = f.grid;
    if symbol.len() != g.len() {
        return Err(Error::SizeMismatch {
            expected: g.len(),
            actual: symbol.len(),
        });
    }
    let mut buf = f.values.clone();
    fft_nd(&mut buf, g.dim(), g.points(), false);
    // h^d from dft and L^{-d} from idft combine to M^{-d}
    let w = 1.0 / g.len() as f64;
    for (c, &m) in buf.iter_mut().zip(symbol) {
        *c *= m.into() * w;
    }
    fft_nd(&mut buf, g.dim(), g.points(), true);
    ComplexField::new(g, buf)
}
