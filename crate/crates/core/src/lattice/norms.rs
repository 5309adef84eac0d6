use super::field::{dft, symbol_sigma, symbol_xi_squared, ComplexField};
use crate::error::{Error, Result};

/// `{h^d sum |f|^p}^{1/p}`, or the max modulus for `p = inf`.
pub fn lp_norm(f: &ComplexField, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("Lebesgue exponent must be >= 1, got {p}")));
    }
    let v = f.values();
    if p.is_infinite() {
        return Ok(v.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    let w = f.grid().cell_volume();
    if p == 2.0 {
        return Ok((w * v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt());
    }
    // scale by the max to avoid overflow for large p
    let top = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = v.iter().map(|z| (z.norm() / top).powf(p)).sum();
    Ok(top * (w * s).powf(1.0 / p))
}

/// Which multiplier family a Sobolev norm uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SobolevKind {
    /// `|xi|^s` (or `sigma^{s/2}`) instead of `(1+|xi|^2)^{s/2}` (or `(1+sigma)^{s/2}`).
    pub homogeneous: bool,
    /// Build the weight from the lattice symbol `sigma` instead of `|xi|^2`.
    pub discrete_op: bool,
}

impl SobolevKind {
    pub const H: Self = Self { homogeneous: false, discrete_op: false };
    pub const H_DOT: Self = Self { homogeneous: true, discrete_op: false };
    pub const H_DISCRETE: Self = Self { homogeneous: false, discrete_op: true };
    pub const H_DOT_DISCRETE: Self = Self { homogeneous: true, discrete_op: true };
}

/// Multiplier weights of the selected Sobolev norm, in FFT slot order.
///
/// For homogeneous kinds the zero mode gets weight 0 when `s > 0` and
/// `f64::INFINITY` when `s < 0`.
pub fn sobolev_weights(grid: &super::LatticeGrid, s: f64, kind: SobolevKind) -> Vec<f64> {
    let base = if kind.discrete_op {
        symbol_sigma(grid)
    } else {
        symbol_xi_squared(grid)
    };
    base.into_iter()
        .map(|q| {
            if kind.homogeneous {
                if q == 0.0 {
                    if s > 0.0 {
                        0.0
                    } else if s == 0.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    q.powf(0.5 * s)
                }
            } else {
                (1.0 + q).powf(0.5 * s)
            }
        })
        .collect()
}

/// Multiplier-weighted `L^2(hZ^d)` norm.
pub fn sobolev_norm(f: &ComplexField, s: f64, kind: SobolevKind) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::InvalidArgument(format!("Sobolev order must be finite, got {s}")));
    }
    let spec = dft(f);
    let weights = sobolev_weights(f.grid(), s, kind);
    let scale = spec.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut acc = 0.0;
    for (c, w) in spec.coeffs().iter().zip(weights) {
        if w.is_infinite() {
            if c.norm() > 1e-12 * scale {
                return Err(Error::InvalidArgument(
                    "homogeneous norm of negative order needs a mean-zero field".into(),
                ));
            }
            continue;
        }
        acc += (c * w).norm_sqr();
    }
    Ok((acc / f.grid().volume()).sqrt())
}

/// Interpolation exponent `theta` solving `1/q = 1/2 - theta s / 2`.
pub fn gns_theta(q: f64, s: f64) -> Result<f64> {
    if !(q > 2.0 && s > 0.0 && s.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "GNS needs q > 2 and s > 0, got q={q}, s={s}"
        )));
    }
    let theta = (1.0 - 2.0 / q) / s;
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "(q={q}, s={s}) gives theta={theta}, outside (0,1)"
        )));
    }
    Ok(theta)
}

/// `||f||_q / (||f||_2^{1-theta} ||f||_{H^s-dot}^theta)` with the continuum
/// homogeneous multiplier `|xi|^s`.
pub fn gns_ratio(f: &ComplexField, q: f64, s: f64) -> Result<f64> {
    let theta = gns_theta(q, s)?;
    let l2 = lp_norm(f, 2.0)?;
    if l2 == 0.0 {
        return Err(Error::InvalidArgument("GNS ratio of the zero field".into()));
    }
    let hs = sobolev_norm(f, s, SobolevKind::H_DOT)?;
    if hs == 0.0 {
        return Err(Error::InvalidArgument("GNS ratio of a constant field".into()));
    }
    let lq = lp_norm(f, q)?;
    Ok(lq / (l2.powf(1.0 - theta) * hs.powf(theta)))
}
