//! Smooth dyadic frequency cutoffs on the lattice and the projections `P_N`.
//!
//! The bump is the tensor product `phi(xi) = prod_j rho(xi_j)` of the C^inf
//! transition
//!
//! ```text
//! rho(u) = s(2 - |u|) / (s(2 - |u|) + s(|u| - 1)),   s(v) = exp(-1/v) for v > 0, else 0
//! ```
//!
//! so `phi = 1` on `[-1,1]^d` and `phi = 0` off `[-2,2]^d`, exactly. Band `N`
//! uses `psi_N(xi) = phi(h xi / 2 pi N) - phi(h xi / pi N)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{dft, idft, lp_norm, ComplexField, LatticeGrid, SpectrumField};
use crate::rng::SplitMix64;

/// Dyadic number `N = 2^{-k}`, `k >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DyadicScale {
    k: u32,
}

impl DyadicScale {
    pub const ONE: Self = Self { k: 0 };

    pub fn from_exponent(k: u32) -> Self {
        Self { k }
    }

    /// Accepts only exact powers `2^{-k}` in `(0, 1]`.
    pub fn from_value(n: f64) -> Result<Self> {
        if !(n > 0.0 && n <= 1.0) {
            return Err(Error::InvalidArgument(format!("dyadic scale must lie in (0,1], got {n}")));
        }
        let k = -n.log2();
        let kr = k.round();
        if (k - kr).abs() > 1e-12 || kr > 1000.0 {
            return Err(Error::InvalidArgument(format!("{n} is not a dyadic number 2^-k")));
        }
        Ok(Self { k: kr as u32 })
    }

    pub fn exponent(self) -> u32 {
        self.k
    }

    pub fn value(self) -> f64 {
        (-(self.k as f64)).exp2()
    }

    /// `2^0, 2^-1, ..., 2^-kmax`.
    pub fn range(kmax: u32) -> Vec<Self> {
        (0..=kmax).map(Self::from_exponent).collect()
    }
}

fn smooth_step_kernel(v: f64) -> f64 {
    if v > 0.0 {
        (-1.0 / v).exp()
    } else {
        0.0
    }
}

/// One-dimensional factor of the bump.
pub fn rho(u: f64) -> f64 {
    let a = u.abs();
    if a <= 1.0 {
        return 1.0;
    }
    if a >= 2.0 {
        return 0.0;
    }
    let num = smooth_step_kernel(2.0 - a);
    num / (num + smooth_step_kernel(a - 1.0))
}

/// The cutoff `phi` at a point of `R^d`.
pub fn phi(point: &[f64]) -> f64 {
    point.iter().map(|&u| rho(u)).product()
}

/// `eta(theta) = phi(theta / 2 pi) - phi(theta / pi)`, the band profile with
/// support in `[-4 pi, 4 pi]^d \ [-pi, pi]^d`.
pub fn eta(theta: &[f64]) -> f64 {
    use std::f64::consts::PI;
    let outer: f64 = theta.iter().map(|&t| rho(t / (2.0 * PI))).product();
    let inner: f64 = theta.iter().map(|&t| rho(t / PI)).product();
    (outer - inner).max(0.0)
}

/// `psi_N` on the frequency grid, in FFT slot order.
pub fn psi_symbol(grid: &LatticeGrid, n: DyadicScale) -> Vec<f64> {
    use std::f64::consts::PI;
    let h = grid.mesh();
    let nv = n.value();
    let m = grid.points();
    let outer: Vec<f64> = (0..m).map(|j| rho(h * grid.wavenumber(j) / (2.0 * PI * nv))).collect();
    let inner: Vec<f64> = (0..m).map(|j| rho(h * grid.wavenumber(j) / (PI * nv))).collect();
    let mut idx = vec![0usize; grid.dim()];
    (0..grid.len())
        .map(|flat| {
            grid.unravel(flat, &mut idx);
            let a: f64 = idx.iter().map(|&i| outer[i]).product();
            let b: f64 = idx.iter().map(|&i| inner[i]).product();
            (a - b).max(0.0)
        })
        .collect()
}

/// Smallest scale exponent whose bands cover every nonzero grid frequency:
/// `log2(M)`, i.e. `N_min = 1/M`.
pub fn scale_floor(grid: &LatticeGrid) -> u32 {
    grid.points().trailing_zeros()
}

/// All scales `1, 1/2, ..., 1/M`.
pub fn covering_scales(grid: &LatticeGrid) -> Vec<DyadicScale> {
    DyadicScale::range(scale_floor(grid))
}

fn apply_band(spec: &SpectrumField, symbol: &[f64]) -> ComplexField {
    let mut s = spec.clone();
    for (c, &m) in s.coeffs_mut().iter_mut().zip(symbol) {
        *c *= m;
    }
    idft(&s)
}

/// `P_N f`, defined by `F(P_N f) = psi_N F(f)`.
pub fn project(f: &ComplexField, n: DyadicScale) -> ComplexField {
    apply_band(&dft(f), &psi_symbol(f.grid(), n))
}

/// `mean(f) + sum_N P_N f`; equals `f` when `scales` reach [`scale_floor`].
pub fn reconstruct(f: &ComplexField, scales: &[DyadicScale]) -> ComplexField {
    let spec = dft(f);
    let mean = f.mean();
    let mut out = ComplexField::constant(*f.grid(), mean);
    for &n in scales {
        let band = apply_band(&spec, &psi_symbol(f.grid(), n));
        for (o, b) in out.values_mut().iter_mut().zip(band.values()) {
            *o += b;
        }
    }
    out
}

/// `|| (sum_N |P_N f|^2)^{1/2} ||_{L^p}`.
pub fn square_function_norm(f: &ComplexField, p: f64, scales: &[DyadicScale]) -> Result<f64> {
    if scales.is_empty() {
        return Err(Error::InvalidArgument("square function needs at least one scale".into()));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("square function exponent must lie in (1,inf), got {p}")));
    }
    let grid = *f.grid();
    let spec = dft(f);
    let mut acc = vec![0.0f64; grid.len()];
    for &n in scales {
        let band = apply_band(&spec, &psi_symbol(&grid, n));
        for (a, b) in acc.iter_mut().zip(band.values()) {
            *a += b.norm_sqr();
        }
    }
    let sq = ComplexField::new(grid, acc.into_iter().map(|a| Complex64::new(a.sqrt(), 0.0)).collect())?;
    lp_norm(&sq, p)
}

/// Mean-zero complex white noise, deterministic in `rng`.
pub fn random_mean_zero_field(grid: LatticeGrid, rng: &mut SplitMix64) -> ComplexField {
    let mut v: Vec<Complex64> = (0..grid.len())
        .map(|_| Complex64::new(rng.normal(), rng.normal()))
        .collect();
    let mean = v.iter().sum::<Complex64>() / v.len() as f64;
    v.iter_mut().for_each(|z| *z -= mean);
    ComplexField::new(grid, v).expect("finite by construction")
}

/// Empirical square-function constants over an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    /// Smallest observed `||S f||_p / ||f||_p`.
    pub lower: f64,
    /// Largest observed ratio.
    pub upper: f64,
}

impl Bracket {
    pub fn spread(&self) -> f64 {
        self.upper / self.lower
    }
}

/// Ratios `||S f||_p / ||f||_p` for `count` mean-zero random fields, using all
/// covering scales.
pub fn square_function_ratios(grid: LatticeGrid, p: f64, count: usize, seed: u64) -> Result<Vec<f64>> {
    let scales = covering_scales(&grid);
    let base = SplitMix64::new(seed);
    (0..count)
        .map(|i| {
            let mut rng = base.fork(i as u64);
            let f = random_mean_zero_field(grid, &mut rng);
            Ok(square_function_norm(&f, p, &scales)? / lp_norm(&f, p)?)
        })
        .collect()
}

pub fn bracket(ratios: &[f64]) -> Result<Bracket> {
    if ratios.is_empty() {
        return Err(Error::InvalidArgument("empty ensemble".into()));
    }
    Ok(Bracket {
        lower: ratios.iter().cloned().fold(f64::INFINITY, f64::min),
        upper: ratios.iter().cloned().fold(0.0, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bump_values() {
        assert_eq!(phi(&[0.0, 0.0]), 1.0);
        assert_eq!(phi(&[1.0, -1.0]), 1.0);
        assert_eq!(phi(&[3.0, 0.0]), 0.0);
        assert_eq!(phi(&[2.0, 0.5]), 0.0);
        let mid = phi(&[1.5, 0.0]);
        assert!(mid > 0.0 && mid < 1.0);
        // symmetric transition: s(1/2)/(s(1/2)+s(1/2))
        assert!((mid - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rho_is_monotone_and_bounded() {
        let mut prev = 1.0;
        for i in 0..=400 {
            let u = i as f64 * 0.01;
            let r = rho(u);
            assert!((0.0..=1.0).contains(&r));
            assert!(r <= prev + 1e-15);
            prev = r;
        }
    }

    #[test]
    fn dyadic_parsing() {
        assert_eq!(DyadicScale::from_value(0.125).unwrap().exponent(), 3);
        assert!(DyadicScale::from_value(0.3).is_err());
        assert!(DyadicScale::from_value(2.0).is_err());
        assert!(DyadicScale::from_value(0.0).is_err());
    }

    #[test]
    fn top_band_vanishes_on_the_torus() {
        let g = LatticeGrid::square(32, 0.7).unwrap();
        assert!(psi_symbol(&g, DyadicScale::ONE).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn half_band_at_edge_of_zone() {
        // h xi = (pi, 0), N = 1/2: psi = 1 - phi(2, 0) = 1
        let g = LatticeGrid::square(16, 1.0).unwrap();
        let psi = psi_symbol(&g, DyadicScale::from_exponent(1));
        let slot = g.ravel(&[8, 0]);
        assert!((g.wavenumber(8) + PI).abs() < 1e-15);
        assert_eq!(psi[slot], 1.0 - phi(&[2.0, 0.0]));
        assert_eq!(psi[slot], 1.0);
    }

    #[test]
    fn support_containment_is_exact() {
        let g = LatticeGrid::square(64, 0.5).unwrap();
        let h = g.mesh();
        for k in 0..7 {
            let n = DyadicScale::from_exponent(k);
            let nv = n.value();
            let psi = psi_symbol(&g, n);
            let sup: Vec<f64> = g.frequency_map(|xi| xi.iter().map(|x| (h * x).abs()).fold(0.0, f64::max));
            for (v, s) in psi.iter().zip(sup) {
                assert!((0.0..=1.0).contains(v));
                if s <= PI * nv || s >= 4.0 * PI * nv {
                    assert_eq!(*v, 0.0);
                }
            }
        }
    }

    #[test]
    fn telescoping_partial_sums() {
        let g = LatticeGrid::square(32, 1.0).unwrap();
        let kmax = 3;
        let mut total = vec![0.0; g.len()];
        for n in DyadicScale::range(kmax) {
            for (t, p) in total.iter_mut().zip(psi_symbol(&g, n)) {
                *t += p;
            }
        }
        let expect = g.frequency_map(|xi| {
            let v: Vec<f64> = xi.iter().map(|x| x * (1u32 << kmax) as f64 / PI).collect();
            1.0 - phi(&v)
        });
        for (a, b) in total.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn partition_of_unity_at_the_floor() {
        for m in [8, 16, 64] {
            let g = LatticeGrid::square(m, 0.25).unwrap();
            let mut total = vec![0.0; g.len()];
            for n in covering_scales(&g) {
                for (t, p) in total.iter_mut().zip(psi_symbol(&g, n)) {
                    *t += p;
                }
            }
            assert_eq!(total[0], 0.0);
            for t in &total[1..] {
                assert!((t - 1.0).abs() <= 1e-12, "M={m}: {t}");
            }
        }
    }

    #[test]
    fn one_scale_short_of_the_floor_misses_the_lowest_modes() {
        let g = LatticeGrid::square(16, 1.0).unwrap();
        let scales = DyadicScale::range(scale_floor(&g) - 1);
        let mut total = vec![0.0; g.len()];
        for n in scales {
            for (t, p) in total.iter_mut().zip(psi_symbol(&g, n)) {
                *t += p;
            }
        }
        assert_eq!(total[g.ravel(&[1, 0])], 0.0);
    }

    #[test]
    fn projection_of_plane_wave() {
        let g = LatticeGrid::square(32, 1.0).unwrap();
        let k = [5i64, -2];
        let w = ComplexField::plane_wave(g, &k);
        for n in DyadicScale::range(4) {
            let psi = psi_symbol(&g, n)[g.ravel(&[g.freq_slot(5), g.freq_slot(-2)])];
            let p = project(&w, n);
            for (a, b) in p.values().iter().zip(w.values()) {
                assert!((a - b * psi).norm() < 1e-12);
            }
        }
        let z = project(&ComplexField::zeros(g), DyadicScale::from_exponent(2));
        assert!(z.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn reconstruction_of_mean_zero_fields() {
        let g = LatticeGrid::square(64, 0.5).unwrap();
        let mut rng = SplitMix64::new(7);
        let f = random_mean_zero_field(g, &mut rng);
        let r = reconstruct(&f, &covering_scales(&g));
        let err = lp_norm(&r.try_sub(&f).unwrap(), 2.0).unwrap();
        assert!(err <= 1e-12 * lp_norm(&f, 2.0).unwrap());
    }

    #[test]
    fn projection_is_self_adjoint() {
        let g = LatticeGrid::square(32, 0.3).unwrap();
        let mut rng = SplitMix64::new(1);
        let f = random_mean_zero_field(g, &mut rng);
        let gg = random_mean_zero_field(g, &mut rng);
        for n in DyadicScale::range(5) {
            let a = project(&f, n).inner(&gg).unwrap();
            let b = f.inner(&project(&gg, n)).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
        }
    }

    #[test]
    fn square_function_edge_cases() {
        let g = LatticeGrid::square(16, 1.0).unwrap();
        let z = ComplexField::zeros(g);
        assert_eq!(square_function_norm(&z, 4.0, &covering_scales(&g)).unwrap(), 0.0);
        assert!(square_function_norm(&z, 4.0, &[]).is_err());
        assert!(square_function_norm(&z, 1.0, &covering_scales(&g)).is_err());
    }

    #[test]
    fn single_band_field_is_bracketed() {
        // a plane wave whose frequency sits where psi_N = 1: S f = |f|, ratio 1
        let g = LatticeGrid::square(64, 1.0).unwrap();
        let w = ComplexField::plane_wave(g, &[16, 0]);
        // h xi = pi/2: psi_{1/4} = phi(1, 0) - phi(2, 0) = 1, all others 0
        let r = square_function_norm(&w, 4.0, &covering_scales(&g)).unwrap() / lp_norm(&w, 4.0).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }
}
