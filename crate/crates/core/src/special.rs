//! The moment function `f(rho) = E[H1 H2]`, its quadratic approximation,
//! the mean map `phi` of the daily estimator and the tabulated inverse of `phi`.
//!
//! `f` is evaluated from its integral representation
//!
//! ```text
//! f(rho) = cos(a) * Int_0^inf cosh(v a) / sinh(v pi/2) * tanh(v g) dv,
//! rho = sin(a), 2g = a + pi/2
//! ```
//!
//! truncated where the exponential tail falls below half the tolerance.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::quadrature;

/// Above this |rho| the integrand tail becomes very long; `f` is blended
/// linearly onto its exact endpoint value instead of being integrated.
pub const ENDPOINT_BLEND: f64 = 0.999;

/// Default spacing of the phi grid.
pub const DEFAULT_STEP: f64 = 0.001;

/// `b = 2 ln 2 - 1`, the magnitude of `E[H L]` for standard Brownian motion on `[0, 1]`.
pub fn b_const() -> f64 {
    2.0 * LN_2 - 1.0
}

/// Weight on the range-residual product in the daily estimator: `1 / (2(1 - 2b))`.
pub fn range_weight() -> f64 {
    1.0 / (2.0 * (1.0 - 2.0 * b_const()))
}

/// The angle parametrization of a correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FTransform {
    pub rho: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl FTransform {
    pub fn new(rho: f64) -> Result<Self> {
        check_domain(rho)?;
        let alpha = rho.asin();
        Ok(Self {
            rho,
            alpha,
            gamma: 0.5 * (alpha + FRAC_PI_2),
        })
    }

    /// `cos(alpha)`, computed without cancellation near `|rho| = 1`.
    pub fn cos_alpha(&self) -> f64 {
        ((1.0 - self.rho) * (1.0 + self.rho)).sqrt()
    }
}

/// Tolerance and budget for evaluating `f` by adaptive Gauss–Kronrod (7/15)
/// quadrature on a truncated range `[0, nu_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            max_subdivisions: 4000,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    /// Truncation point for the integration variable.
    ///
    /// For `v >= 1` the integrand is bounded by `2 exp(-v d) / (1 - exp(-pi))`
    /// with `d = pi/2 - |alpha|`, so the tail beyond the returned point is
    /// at most `abs_tol / 2`.
    pub fn nu_max(&self, alpha: f64) -> f64 {
        let decay = FRAC_PI_2 - alpha.abs();
        let denom = decay * self.abs_tol * (1.0 - (-PI).exp());
        ((4.0 / denom).ln() / decay).max(1.0)
    }
}

fn check_domain(rho: f64) -> Result<()> {
    if rho.is_nan() || rho.abs() > 1.0 {
        Err(Error::Domain(rho))
    } else {
        Ok(())
    }
}

/// `cosh(v a) / sinh(v pi/2) * tanh(v g)`, written in decaying exponentials.
fn integrand(nu: f64, alpha: f64, gamma: f64) -> f64 {
    if nu == 0.0 {
        return 2.0 * gamma / PI;
    }
    let a = alpha.abs();
    let ratio = (-nu * (FRAC_PI_2 - a)).exp() * (1.0 + (-2.0 * nu * a).exp()) / -(-nu * PI).exp_m1();
    ratio * (nu * gamma).tanh()
}

fn f_by_quadrature(rho: f64, q: &QuadratureSpec) -> Result<f64> {
    let t = FTransform::new(rho)?;
    let upper = q.nu_max(t.alpha);
    let r = quadrature::integrate(
        |nu| integrand(nu, t.alpha, t.gamma),
        0.0,
        upper,
        0.5 * q.abs_tol,
        q.max_subdivisions,
    )?;
    Ok(t.cos_alpha() * r.value)
}

/// `E[H1 H2]` for standard Brownian motions with correlation `rho`.
///
/// Exact at `rho = +-1` (values 1 and b). For `|rho| > ENDPOINT_BLEND` the
/// quadratic approximation is used with its residual at the blend point
/// fading linearly to zero at the endpoint.
pub fn f_rho(rho: f64, q: &QuadratureSpec) -> Result<f64> {
    check_domain(rho)?;
    if rho == 1.0 {
        return Ok(1.0);
    }
    if rho == -1.0 {
        return Ok(b_const());
    }
    if rho.abs() > ENDPOINT_BLEND {
        let anchor = ENDPOINT_BLEND.copysign(rho);
        let residual = f_by_quadrature(anchor, q)? - f_quad_approx(anchor)?;
        let fade = (1.0 - rho.abs()) / (1.0 - ENDPOINT_BLEND);
        return Ok(f_quad_approx(rho)? + residual * fade);
    }
    f_by_quadrature(rho, q)
}

/// The quadratic through `(-1, b)`, `(0, 2/pi)` and `(1, 1)`.
pub fn f_quad_approx(rho: f64) -> Result<f64> {
    check_domain(rho)?;
    let b = b_const();
    let d = 2.0 / PI;
    let c = 0.5 * (1.0 - b);
    let a = 0.5 * (1.0 + b) - d;
    Ok((a * rho + c) * rho + d)
}

fn phi_from_f(rho: f64, f_pos: f64, f_neg: f64) -> f64 {
    0.5 * rho + range_weight() * (2.0 * f_pos - 2.0 * f_neg - rho)
}

/// Mean of the daily estimator when the true correlation is `rho`.
///
/// Odd by construction: negative arguments are evaluated as `-phi(-rho)`.
pub fn phi(rho: f64, q: &QuadratureSpec) -> Result<f64> {
    check_domain(rho)?;
    if rho.abs() == 1.0 {
        return Ok(rho);
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    if rho < 0.0 {
        return phi(-rho, q).map(|v| -v);
    }
    Ok(phi_from_f(rho, f_rho(rho, q)?, f_rho(-rho, q)?))
}

/// Outcome of inverting `phi`; `saturated` is set when the argument lay
/// outside `[-1, 1]` and the result was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseResult {
    pub value: f64,
    pub saturated: bool,
}

/// `phi` tabulated on a uniform grid over `[-1, 1]`, inverted by bisection
/// plus linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiTable {
    rho: Vec<f64>,
    phi: Vec<f64>,
}

impl PhiTable {
    /// Tabulates `phi` with spacing at most `step`. The grid is symmetric
    /// about zero, so the number of intervals is rounded up to an even count.
    pub fn build(step: f64, q: &QuadratureSpec) -> Result<Self> {
        let n = Self::intervals_for_step(step)?;
        let half = n / 2;

        let rho: Vec<f64> = (0..=n)
            .map(|k| (2.0 * k as f64 - n as f64) / n as f64)
            .collect();
        let f_vals = rho
            .iter()
            .map(|&r| f_rho(r, q))
            .collect::<Result<Vec<_>>>()?;

        let mut phi = vec![0.0; n + 1];
        for k in half + 1..n {
            let v = phi_from_f(rho[k], f_vals[k], f_vals[n - k]);
            phi[k] = v;
            phi[n - k] = -v;
        }
        phi[0] = -1.0;
        phi[n] = 1.0;

        Self::from_points(rho, phi)
    }

    /// Number of grid intervals [`PhiTable::build`] uses for `step`: the
    /// smallest even count whose spacing does not exceed `step`.
    pub fn intervals_for_step(step: f64) -> Result<usize> {
        if !(step > 0.0 && step <= 0.01) {
            return Err(Error::InvalidStep(step));
        }
        let n = (2.0 / step - 1e-9).ceil() as usize;
        Ok(n + n % 2)
    }

    /// Validates a grid: at least 3 points, endpoints `(-1, -1)` and `(1, 1)`,
    /// both columns strictly increasing.
    pub fn from_points(rho: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if rho.len() != phi.len() {
            return Err(Error::LengthMismatch {
                left: rho.len(),
                right: phi.len(),
            });
        }
        if rho.len() < 3 {
            return Err(Error::InvalidStep(f64::NAN));
        }
        let last = rho.len() - 1;
        if rho[0] != -1.0 || phi[0] != -1.0 || rho[last] != 1.0 || phi[last] != 1.0 {
            return Err(Error::PhiTableParse {
                line: 0,
                message: "endpoints must be exactly (-1, -1) and (1, 1)".into(),
            });
        }
        for k in 1..rho.len() {
            if !(rho[k] > rho[k - 1]) {
                return Err(Error::PhiTableParse {
                    line: k + 2,
                    message: "rho grid is not strictly increasing".into(),
                });
            }
            if !(phi[k] > phi[k - 1]) {
                return Err(Error::NonMonotonePhi { index: k, rho: rho[k] });
            }
        }
        Ok(Self { rho, phi })
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    /// Grid spacing.
    pub fn step(&self) -> f64 {
        2.0 / (self.rho.len() - 1) as f64
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.rho.iter().copied().zip(self.phi.iter().copied())
    }

    /// Linear interpolation of the tabulated `phi` at `rho`.
    pub fn phi_at(&self, rho: f64) -> f64 {
        interpolate(&self.rho, &self.phi, rho.clamp(-1.0, 1.0))
    }

    /// `phi^-1(y)`. Arguments outside `[-1, 1]` clamp to `+-1` and are flagged.
    pub fn inverse(&self, y: f64) -> InverseResult {
        if y > 1.0 {
            return InverseResult { value: 1.0, saturated: true };
        }
        if y < -1.0 {
            return InverseResult { value: -1.0, saturated: true };
        }
        InverseResult {
            value: interpolate(&self.phi, &self.rho, y),
            saturated: false,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "rho,phi")?;
        for (r, p) in self.points() {
            writeln!(out, "{r:.16e},{p:.16e}")?;
        }
        out.flush()
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let parse_err = |line: usize, message: String| Error::PhiTableParse { line, message };
        match lines.next() {
            Some(Ok(h)) if h.trim() == "rho,phi" => {}
            Some(Ok(h)) => return Err(parse_err(1, format!("unexpected header {h:?}"))),
            Some(Err(e)) => return Err(parse_err(1, e.to_string())),
            None => return Err(parse_err(1, "empty file".into())),
        }
        let mut rho = Vec::new();
        let mut phi = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (r, p) = line
                .split_once(',')
                .ok_or_else(|| parse_err(lineno, "expected two columns".into()))?;
            let r: f64 = r.trim().parse().map_err(|e| parse_err(lineno, format!("{e}")))?;
            let p: f64 = p.trim().parse().map_err(|e| parse_err(lineno, format!("{e}")))?;
            rho.push(r);
            phi.push(p);
        }
        Self::from_points(rho, phi)
    }
}

/// Piecewise-linear interpolation of `ys` over strictly increasing `xs`;
/// `x` must lie within `[xs[0], xs[last]]`.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let idx = xs.partition_point(|&v| v < x);
    if idx == 0 {
        return ys[0];
    }
    if idx == xs.len() {
        return ys[xs.len() - 1];
    }
    if xs[idx] == x {
        return ys[idx];
    }
    let (x0, x1) = (xs[idx - 1], xs[idx]);
    let (y0, y1) = (ys[idx - 1], ys[idx]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}
