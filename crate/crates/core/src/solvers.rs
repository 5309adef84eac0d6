//! Exact linear propagators and Strang splitting for
//! `i u_t + Delta^2 u = lambda |u|^{p-1} u`, on the lattice (`Delta = Delta_h`)
//! or with the continuum symbol `|xi|^4` on the same periodic grid.
//!
//! The linear flow multiplies Fourier coefficients by `exp(i t sigma^2)`.
//! The nonlinear substep rotates each site by `exp(i lambda |u|^{p-1} tau)`,
//! which keeps `E(u) = 1/2 ||Delta u||^2 + lambda/(p+1) ||u||_{p+1}^{p+1}`
//! conserved by the full flow.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::fft::fft_nd;
use crate::lattice::snapshot::write_snapshot;
use crate::lattice::{dft, lp_norm, symbol_sigma, symbol_xi_squared, ComplexField, LatticeGrid};

/// Which fourth-order operator drives the linear flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowKind {
    /// Lattice bilaplacian, symbol `sigma(xi)^2`.
    Discrete,
    /// Continuum bilaplacian, symbol `|xi|^4`.
    Continuum,
}

/// Symbol of the bilaplacian in FFT slot order.
pub fn bilaplacian_symbol(grid: &LatticeGrid, kind: FlowKind) -> Vec<f64> {
    let base = match kind {
        FlowKind::Discrete => symbol_sigma(grid),
        FlowKind::Continuum => symbol_xi_squared(grid),
    };
    base.into_iter().map(|q| q * q).collect()
}

/// `exp(i t Delta^2)` applied to `f`.
pub fn linear_propagate(f: &ComplexField, t: f64, kind: FlowKind) -> ComplexField {
    LinearPropagator::new(*f.grid(), kind).apply(f, t)
}

/// Linear propagator with its symbol cached for repeated use on one grid.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    grid: LatticeGrid,
    kind: FlowKind,
    symbol: Vec<f64>,
}

impl LinearPropagator {
    pub fn new(grid: LatticeGrid, kind: FlowKind) -> Self {
        Self {
            grid,
            kind,
            symbol: bilaplacian_symbol(&grid, kind),
        }
    }

    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    /// Panics if `f` lives on another grid.
    pub fn apply(&self, f: &ComplexField, t: f64) -> ComplexField {
        assert!(f.grid().matches(&self.grid), "propagator applied on a different grid");
        let mut buf = f.values().to_vec();
        let factors = self.factors(t);
        self.apply_in_place(&mut buf, &factors);
        ComplexField::from_parts_unchecked(self.grid, buf)
    }

    /// `exp(i t symbol) / M^d`, ready for `apply_in_place`.
    pub fn factors(&self, t: f64) -> Vec<Complex64> {
        let w = 1.0 / self.grid.len() as f64;
        self.symbol.iter().map(|&s| Complex64::from_polar(w, t * s)).collect()
    }

    pub fn apply_in_place(&self, buf: &mut [Complex64], factors: &[Complex64]) {
        let g = &self.grid;
        fft_nd(buf, g.dim(), g.points(), false);
        for (c, m) in buf.iter_mut().zip(factors) {
            *c *= m;
        }
        fft_nd(buf, g.dim(), g.points(), true);
    }
}

/// Coupling and exponent of the power nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityParams {
    pub lambda: f64,
    pub p: f64,
}

impl NonlinearityParams {
    pub fn new(lambda: f64, p: f64) -> Result<Self> {
        let params = Self { lambda, p };
        params.validate()?;
        Ok(params)
    }

    pub fn linear() -> Self {
        Self { lambda: 0.0, p: 3.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::InvalidArgument(format!("coupling must be finite, got {}", self.lambda)));
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "nonlinearity exponent must satisfy p > 1, got {}",
                self.p
            )));
        }
        if self.lambda < 0.0 && self.p >= 5.0 {
            return Err(Error::InvalidArgument(format!(
                "focusing coupling needs 1 < p < 5 when lambda < 0, got p = {}",
                self.p
            )));
        }
        Ok(())
    }
}

fn rotate(values: &mut [Complex64], tau: f64, params: &NonlinearityParams) {
    if params.lambda == 0.0 || tau == 0.0 {
        return;
    }
    let c = params.lambda * tau;
    // the phase depends on |u|^{p-1} = (|u|^2)^{(p-1)/2}
    let half = 0.5 * (params.p - 1.0);
    let apply = |v: &mut Complex64, angle: f64| {
        let (s, co) = angle.sin_cos();
        *v = Complex64::new(v.re * co - v.im * s, v.re * s + v.im * co);
    };
    if half == 1.0 {
        for v in values {
            let a = c * v.norm_sqr();
            apply(v, a);
        }
    } else if half == 2.0 {
        for v in values {
            let q = v.norm_sqr();
            apply(v, c * q * q);
        }
    } else {
        for v in values {
            let q = v.norm_sqr();
            if q > 0.0 {
                apply(v, c * q.powf(half));
            }
        }
    }
}

/// Exact flow of the nonlinear part over `tau`: a pointwise phase rotation.
pub fn nonlinear_phase_step(f: &ComplexField, tau: f64, params: &NonlinearityParams) -> ComplexField {
    let mut v = f.values().to_vec();
    rotate(&mut v, tau, params);
    ComplexField::from_parts_unchecked(*f.grid(), v)
}

/// `||f||_2^2`.
pub fn mass(f: &ComplexField) -> f64 {
    let w = f.grid().cell_volume();
    w * f.values().iter().map(|v| v.norm_sqr()).sum::<f64>()
}

/// `1/2 ||Delta f||_2^2 + lambda/(p+1) ||f||_{p+1}^{p+1}` with the bilaplacian of `kind`.
pub fn energy(f: &ComplexField, params: &NonlinearityParams, kind: FlowKind) -> f64 {
    let sym = bilaplacian_symbol(f.grid(), kind);
    energy_with_symbol(f, params, &sym)
}

fn energy_with_symbol(f: &ComplexField, params: &NonlinearityParams, sym: &[f64]) -> f64 {
    let spec = dft(f);
    let quad: f64 = spec.coeffs().iter().zip(sym).map(|(c, s)| c.norm_sqr() * s).sum::<f64>() / f.grid().volume();
    let potential = if params.lambda == 0.0 {
        0.0
    } else {
        lp_norm(f, params.p + 1.0).expect("p + 1 > 2").powf(params.p + 1.0)
    };
    0.5 * quad + params.lambda / (params.p + 1.0) * potential
}

/// Default step for lattice runs, `min(1e-3, h^4 / 4)`.
pub fn default_step(mesh: f64) -> f64 {
    (0.25 * mesh.powi(4)).min(1e-3)
}

/// Time-stepping controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub final_time: f64,
    pub step: f64,
    pub sample_every: usize,
    /// Keep full fields at sample times, not just the diagnostics.
    pub keep_fields: bool,
}

impl SolveOptions {
    pub fn new(final_time: f64, step: f64) -> Self {
        Self {
            final_time,
            step,
            sample_every: 1,
            keep_fields: true,
        }
    }

    /// Number of steps, checking that the final time is a whole number of steps.
    pub fn step_count(&self) -> Result<usize> {
        let (t, tau) = (self.final_time, self.step);
        if !(tau.is_finite() && tau != 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad time step {tau} or final time {t}")));
        }
        let ratio = t / tau;
        let n = ratio.round();
        if n < 0.0 || (ratio - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "final time {t} is not a nonnegative whole multiple of the step {tau}"
            )));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidArgument("sample_every must be at least 1".into()));
        }
        Ok(n as usize)
    }
}

/// Scalar diagnostics at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub step: usize,
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub linf_norm: f64,
}

/// Sampled solution of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub kind: FlowKind,
    pub samples: Vec<Sample>,
    /// Fields at the sample times, empty when fields were not kept.
    pub snapshots: Vec<ComplexField>,
    /// Final state, always kept.
    pub last: ComplexField,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    /// Largest `|M(t) - M(0)| / M(0)` over the samples.
    pub fn mass_drift(&self) -> f64 {
        relative_drift(self.samples.iter().map(|s| s.mass))
    }

    /// Largest `|E(t) - E(0)| / |E(0)|` over the samples.
    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.samples.iter().map(|s| s.energy))
    }

    /// CSV with header `step,t,mass,energy,linf_norm`.
    pub fn write_manifest_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "step,t,mass,energy,linf_norm")?;
        for s in &self.samples {
            writeln!(w, "{},{},{},{},{}", s.step, s.time, s.mass, s.energy, s.linf_norm)?;
        }
        Ok(())
    }

    /// Writes `trajectory.csv` and one `snapshot_NNNNN.ldsp` per kept field.
    pub fn export(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_manifest_csv(BufWriter::new(File::create(dir.join("trajectory.csv"))?))?;
        for (i, (f, s)) in self.snapshots.iter().zip(&self.samples).enumerate() {
            let file = File::create(dir.join(format!("snapshot_{i:05}.ldsp")))?;
            write_snapshot(BufWriter::new(file), f, s.time)?;
        }
        Ok(())
    }
}

fn relative_drift(values: impl Iterator<Item = f64>) -> f64 {
    let mut it = values;
    let Some(first) = it.next() else { return 0.0 };
    let scale = first.abs();
    let worst = it.map(|v| (v - first).abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        worst
    } else {
        worst / scale
    }
}

/// Strang splitting: half nonlinear rotation, exact linear step, half
/// rotation. Samples every `sample_every` steps, and always at the final step.
pub fn solve(
    f0: &ComplexField,
    options: &SolveOptions,
    params: &NonlinearityParams,
    kind: FlowKind,
) -> Result<Trajectory> {
    params.validate()?;
    let steps = options.step_count()?;
    if !f0.is_finite() {
        return Err(Error::NanDetected { step: 0 });
    }
    let grid = *f0.grid();
    let prop = LinearPropagator::new(grid, kind);
    let factors = prop.factors(options.step);
    let half = 0.5 * options.step;
    let mut u = f0.values().to_vec();

    let mut traj = Trajectory {
        kind,
        samples: Vec::new(),
        snapshots: Vec::new(),
        last: f0.clone(),
    };
    let record = |step: usize, u: &[Complex64], traj: &mut Trajectory| {
        let field = ComplexField::from_parts_unchecked(grid, u.to_vec());
        traj.samples.push(Sample {
            step,
            time: step as f64 * options.step,
            mass: mass(&field),
            energy: energy_with_symbol(&field, params, prop.symbol()),
            linf_norm: u.iter().map(|v| v.norm()).fold(0.0, f64::max),
        });
        if options.keep_fields {
            traj.snapshots.push(field);
        }
    };
    record(0, &u, &mut traj);

    // the rotation preserves |u|, so the closing half-step of one step and the
    // opening half-step of the next fuse into a full one between samples
    rotate(&mut u, half, params);
    for step in 1..=steps {
        prop.apply_in_place(&mut u, &factors);
        let sampled = step % options.sample_every == 0 || step == steps;
        if sampled {
            rotate(&mut u, half, params);
            if u.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::NanDetected { step });
            }
            record(step, &u, &mut traj);
            if step < steps {
                rotate(&mut u, half, params);
            }
        } else {
            rotate(&mut u, options.step, params);
            if u.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::NanDetected { step });
            }
        }
    }
    traj.last = ComplexField::from_parts_unchecked(grid, u);
    Ok(traj)
}

/// Final state only, without diagnostics.
pub fn solve_final(
    f0: &ComplexField,
    final_time: f64,
    step: f64,
    params: &NonlinearityParams,
    kind: FlowKind,
) -> Result<ComplexField> {
    let options = SolveOptions {
        final_time,
        step,
        sample_every: usize::MAX,
        keep_fields: false,
    };
    Ok(solve(f0, &options, params, kind)?.last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use std::f64::consts::PI;

    fn random_field(grid: LatticeGrid, seed: u64) -> ComplexField {
        let mut rng = SplitMix64::new(seed);
        let v = (0..grid.len()).map(|_| Complex64::new(rng.normal(), rng.normal())).collect();
        ComplexField::new(grid, v).unwrap()
    }

    fn gaussian(grid: LatticeGrid, width: f64) -> ComplexField {
        let c = 0.5 * grid.period();
        ComplexField::from_fn(grid, |x| {
            let r2: f64 = x.iter().map(|&xi| (xi - c).powi(2)).sum();
            Complex64::new((-r2 / (width * width)).exp(), 0.0)
        })
        .unwrap()
    }

    fn max_diff(a: &ComplexField, b: &ComplexField) -> f64 {
        a.values().iter().zip(b.values()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_time_is_identity() {
        let g = LatticeGrid::square(16, 0.5).unwrap();
        let f = random_field(g, 1);
        for kind in [FlowKind::Discrete, FlowKind::Continuum] {
            assert!(max_diff(&linear_propagate(&f, 0.0, kind), &f) < 1e-12);
        }
    }

    #[test]
    fn plane_wave_picks_up_sigma_squared_phase() {
        // h = 1, k = M/2 on both axes: xi = (pi, pi), sigma = 8
        let g = LatticeGrid::square(8, 1.0).unwrap();
        let w = ComplexField::plane_wave(g, &[4, 4]);
        let out = linear_propagate(&w, 1.0, FlowKind::Discrete);
        let expect = w.scale(Complex64::from_polar(1.0, 64.0));
        assert!(max_diff(&out, &expect) < 1e-12);
    }

    #[test]
    fn group_law_and_unitarity() {
        for m in [8, 64] {
            let g = LatticeGrid::square(m, 0.3).unwrap();
            let f = random_field(g, m as u64);
            let p = LinearPropagator::new(g, FlowKind::Discrete);
            let a = p.apply(&p.apply(&f, 0.7), -0.2);
            let b = p.apply(&f, 0.5);
            let scale = lp_norm(&f, f64::INFINITY).unwrap();
            assert!(max_diff(&a, &b) < 1e-12 * scale);
            for t in [0.1, 3.0, 250.0] {
                let n = mass(&p.apply(&f, t));
                assert!((n - mass(&f)).abs() < 1e-12 * mass(&f));
            }
        }
    }

    #[test]
    fn nonlinear_step_closed_forms() {
        let g = LatticeGrid::square(8, 1.0).unwrap();
        let c = Complex64::new(0.6, -0.8) * 2.0;
        let f = ComplexField::constant(g, c);
        let params = NonlinearityParams::new(1.5, 3.0).unwrap();
        let out = nonlinear_phase_step(&f, 0.3, &params);
        let expect = c * Complex64::from_polar(1.0, 1.5 * c.norm().powi(2) * 0.3);
        assert!(out.values().iter().all(|v| (v - expect).norm() < 1e-14));
        let r = random_field(g, 9);
        assert_eq!(nonlinear_phase_step(&r, 0.3, &NonlinearityParams::linear()), r);
        let s = nonlinear_phase_step(&r, 0.3, &params);
        for (a, b) in s.values().iter().zip(r.values()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * b.norm().max(1.0));
        }
    }

    #[test]
    fn parameter_window() {
        assert!(NonlinearityParams::new(1.0, 1.0).is_err());
        assert!(NonlinearityParams::new(-1.0, 5.0).is_err());
        assert!(NonlinearityParams::new(-1.0, 4.9).is_ok());
        assert!(NonlinearityParams::new(1.0, 7.0).is_ok());
    }

    #[test]
    fn mass_and_energy_examples() {
        let g = LatticeGrid::square(8, 0.5).unwrap();
        assert_eq!(mass(&ComplexField::zeros(g)), 0.0);
        let f = ComplexField::spike(g, &[1, 2], Complex64::new(3.0, 0.0));
        assert!((mass(&f) - 2.25).abs() < 1e-15);
        let params = NonlinearityParams::new(1.0, 3.0).unwrap();
        assert_eq!(energy(&ComplexField::zeros(g), &params, FlowKind::Discrete), 0.0);
        let w = ComplexField::plane_wave(g, &[1, 3]);
        let sigma = [1.0f64, 3.0]
            .iter()
            .map(|&k| 4.0 / 0.25 * (0.5 * 0.5 * 2.0 * PI * k / g.period()).sin().powi(2))
            .sum::<f64>();
        let e = energy(&w, &NonlinearityParams::linear(), FlowKind::Discrete);
        let expect = 0.5 * sigma * sigma * g.period().powi(2);
        assert!((e - expect).abs() < 1e-11 * expect);
    }

    #[test]
    fn splitting_with_zero_coupling_is_the_linear_flow() {
        let g = LatticeGrid::square(32, 0.5).unwrap();
        let f = gaussian(g, 2.0);
        let out = solve_final(&f, 1.0, 0.01, &NonlinearityParams::linear(), FlowKind::Discrete).unwrap();
        let exact = linear_propagate(&f, 1.0, FlowKind::Discrete);
        assert!(max_diff(&out, &exact) < 1e-10);
    }

    #[test]
    fn splitting_conserves_mass_and_is_reversible() {
        let g = LatticeGrid::square(32, 0.5).unwrap();
        let f = gaussian(g, 2.0);
        let params = NonlinearityParams::new(1.0, 3.0).unwrap();
        let opts = SolveOptions {
            final_time: 1.0,
            step: 1e-3,
            sample_every: 100,
            keep_fields: false,
        };
        let tr = solve(&f, &opts, &params, FlowKind::Discrete).unwrap();
        assert_eq!(tr.samples.len(), 11);
        assert_eq!(tr.samples.last().unwrap().step, 1000);
        assert!(tr.mass_drift() <= 1e-10);
        let back = solve_final(&tr.last, -1.0, -1e-3, &params, FlowKind::Discrete).unwrap();
        assert!(max_diff(&back, &f) < 1e-8);
    }

    #[test]
    fn strang_is_second_order_and_energy_drift_quarters() {
        let g = LatticeGrid::square(32, 0.5).unwrap();
        let f = gaussian(g, 2.0);
        let params = NonlinearityParams::new(1.0, 3.0).unwrap();
        let run = |tau: f64| {
            let opts = SolveOptions { final_time: 1.0, step: tau, sample_every: 1, keep_fields: false };
            solve(&f, &opts, &params, FlowKind::Discrete).unwrap()
        };
        let (a, b, c) = (run(4e-3), run(2e-3), run(1e-3));
        let ratio = lp_norm(&a.last.try_sub(&b.last).unwrap(), 2.0).unwrap()
            / lp_norm(&b.last.try_sub(&c.last).unwrap(), 2.0).unwrap();
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        let drift = a.energy_drift() / b.energy_drift();
        assert!((3.0..=5.0).contains(&drift), "energy drift ratio {drift}");
    }

    #[test]
    fn nan_is_reported_with_step() {
        let g = LatticeGrid::square(8, 1.0).unwrap();
        let f = ComplexField::constant(g, Complex64::new(1e200, 0.0));
        let params = NonlinearityParams::new(1.0, 3.0).unwrap();
        let r = solve_final(&f, 0.01, 0.01, &params, FlowKind::Discrete);
        assert!(matches!(r, Err(Error::NanDetected { step: 1 })));
    }

    #[test]
    fn export_writes_manifest_and_snapshots() {
        let g = LatticeGrid::square(8, 1.0).unwrap();
        let f = gaussian(g, 2.0);
        let opts = SolveOptions { final_time: 0.02, step: 0.01, sample_every: 1, keep_fields: true };
        let tr = solve(&f, &opts, &NonlinearityParams::linear(), FlowKind::Discrete).unwrap();
        let dir = tempfile::tempdir().unwrap();
        tr.export(dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
        assert!(csv.starts_with("step,t,mass,energy,linf_norm\n0,0,"));
        assert_eq!(csv.lines().count(), 4);
        let snap = crate::lattice::snapshot::read_snapshot(File::open(dir.path().join("snapshot_00002.ldsp")).unwrap()).unwrap();
        assert_eq!(snap.time, 0.02);
    }
}
