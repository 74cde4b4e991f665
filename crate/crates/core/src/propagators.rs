//! Reference solution operators: exact Fourier-multiplier propagators for constant
//! coefficients, a pseudospectral RK4 solver for variable speed, smoothing and
//! pseudodifferential multipliers, smooth warpings, and hyper-curvelets.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{signed_freq, Fft2};
use crate::field::{Field2D, VectorField};
use crate::flow::{Branch, VelocityModel};
use crate::frame::{CoeffSet, CurveletIndex, FrameTable};
use crate::windows::ScaleKind;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn freq(i: usize, n: usize) -> [f64; 2] {
    [signed_freq(i / n, n) as f64, signed_freq(i % n, n) as f64]
}

fn check(fft: &Fft2, f: &Field2D) -> Result<()> {
    if f.size() != fft.size() {
        return Err(Error::DimensionMismatch {
            expected: fft.size(),
            got: f.size(),
        });
    }
    Ok(())
}

/// Multiplier `exp(-i sign c0 |xi| t)` with `|xi| = 2 pi |omega|`.
///
/// The `+` branch transports wave packets along their codirection, matching
/// [`Branch::Plus`] of the bicharacteristic flow.
pub fn apply_halfwave(fft: &Fft2, f: &Field2D, t: f64, sign: Branch, c0: f64) -> Result<Field2D> {
    check(fft, f)?;
    let s = sign.sign();
    Ok(f.apply_multiplier(fft, |w| {
        let xi = 2.0 * PI * w[0].hypot(w[1]);
        Complex64::from_polar(1.0, -s * c0 * xi * t)
    }))
}

/// Exact solution of `u_tt = c0^2 Delta u` with `u(0) = u0`, `u_t(0) = u1`.
pub fn apply_cos_wave(fft: &Fft2, u0: &Field2D, u1: &Field2D, t: f64, c0: f64) -> Result<Field2D> {
    check(fft, u0)?;
    check(fft, u1)?;
    let n = fft.size();
    let a = u0.spectrum(fft);
    let b = u1.spectrum(fft);
    let out = a
        .iter()
        .zip(&b)
        .enumerate()
        .map(|(i, (a, b))| {
            let w = freq(i, n);
            let lam = c0 * 2.0 * PI * w[0].hypot(w[1]);
            let sinc = if lam == 0.0 { t } else { (lam * t).sin() / lam };
            a * (lam * t).cos() + b * sinc
        })
        .collect();
    Ok(Field2D::from_spectrum(n, out, fft))
}

/// Acoustic dispersion matrix `a(xi)` for `(u1, u2, rho)` with `rho0 = c0 = 1`.
pub fn acoustic_matrix(xi: [f64; 2]) -> [[f64; 3]; 3] {
    [[0.0, 0.0, xi[0]], [0.0, 0.0, xi[1]], [xi[0], xi[1], 0.0]]
}

/// Eigenvalue `lambda_nu(xi) in {+|xi|, -|xi|, 0}`.
pub fn acoustic_eigenvalue(branch: Branch, xi: [f64; 2]) -> f64 {
    branch.sign() * xi[0].hypot(xi[1])
}

/// Unit eigenvector `r_nu(xi)`; at `xi = 0` the standard basis `(e3, ..)` stands in.
pub fn acoustic_eigenvector(branch: Branch, xi: [f64; 2]) -> [f64; 3] {
    let r = xi[0].hypot(xi[1]);
    if r == 0.0 {
        return match branch {
            Branch::Plus => [1.0, 0.0, 0.0],
            Branch::Minus => [0.0, 1.0, 0.0],
            Branch::Zero => [0.0, 0.0, 1.0],
        };
    }
    let n = [xi[0] / r, xi[1] / r];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match branch {
        Branch::Plus => [h * n[0], h * n[1], h],
        Branch::Minus => [-h * n[0], -h * n[1], h],
        Branch::Zero => [-n[1], n[0], 0.0],
    }
}

fn check_vector(fft: &Fft2, u: &VectorField, m: usize) -> Result<()> {
    if u.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: u.dim(),
        });
    }
    check(fft, u.component(0))
}

fn spectra(fft: &Fft2, u: &VectorField) -> Vec<Vec<Complex64>> {
    u.components().par_iter().map(|c| c.spectrum(fft)).collect()
}

fn from_spectra(fft: &Fft2, s: Vec<Vec<Complex64>>) -> VectorField {
    let n = fft.size();
    VectorField::new(s.into_par_iter().map(|v| Field2D::from_spectrum(n, v, fft)).collect())
        .expect("nonempty component list")
}

/// `u(t)^(xi) = sum_nu exp(-i t lambda_nu) r_nu (r_nu . u^(xi))` for the acoustic system.
pub fn apply_acoustic(fft: &Fft2, u: &VectorField, t: f64) -> Result<VectorField> {
    check_vector(fft, u, 3)?;
    let n = fft.size();
    let mut s = spectra(fft, u);
    for i in 0..n * n {
        let w = freq(i, n);
        if w == [0.0, 0.0] {
            continue;
        }
        let xi = [2.0 * PI * w[0], 2.0 * PI * w[1]];
        let v = [s[0][i], s[1][i], s[2][i]];
        let mut out = [ZERO; 3];
        for b in Branch::ALL {
            let r = acoustic_eigenvector(b, xi);
            let amp = (r[0] * v[0] + r[1] * v[1] + r[2] * v[2]) * Complex64::from_polar(1.0, -t * acoustic_eigenvalue(b, xi));
            for c in 0..3 {
                out[c] += amp * r[c];
            }
        }
        for c in 0..3 {
            s[c][i] = out[c];
        }
    }
    Ok(from_spectra(fft, s))
}

/// Scalar amplitude of the `branch` polarization: `IFFT(r_nu(xi) . u^(xi))`.
pub fn polarization_component(fft: &Fft2, u: &VectorField, branch: Branch) -> Result<Field2D> {
    check_vector(fft, u, 3)?;
    let n = fft.size();
    let s = spectra(fft, u);
    let out = (0..n * n)
        .map(|i| {
            let r = acoustic_eigenvector(branch, freq(i, n));
            r[0] * s[0][i] + r[1] * s[1][i] + r[2] * s[2][i]
        })
        .collect();
    Ok(Field2D::from_spectrum(n, out, fft))
}

/// Vector field `IFFT(r_nu(xi) g^(xi))` polarized along one eigenvector.
pub fn polarize(fft: &Fft2, g: &Field2D, branch: Branch) -> Result<VectorField> {
    check(fft, g)?;
    let n = fft.size();
    let s = g.spectrum(fft);
    let mut comps = vec![vec![ZERO; n * n]; 3];
    for (i, v) in s.iter().enumerate() {
        let r = acoustic_eigenvector(branch, freq(i, n));
        for c in 0..3 {
            comps[c][i] = v * r[c];
        }
    }
    Ok(from_spectra(fft, comps))
}

/// Hyper-curvelet `IFFT(r_nu(xi) phi_mu^(xi))`.
pub fn hyper_curvelet(table: &FrameTable, mu: &CurveletIndex, branch: Branch) -> Result<VectorField> {
    let w = table
        .wedge(mu.j, mu.l)
        .ok_or_else(|| Error::UnknownIndex(mu.to_string()))?;
    if w.kind != ScaleKind::Directional {
        return Err(Error::NotDirectional(mu.j));
    }
    polarize(table.fft(), &table.atom(mu)?, branch)
}

/// Coefficients `<u, r_nu phi_mu>` in the hyper-curvelet frame, components in `(+, -, 0)` order.
pub fn analyze_hyper(table: &FrameTable, u: &VectorField) -> Result<CoeffSet> {
    let comps = Branch::ALL
        .iter()
        .map(|&b| polarization_component(table.fft(), u, b))
        .collect::<Result<Vec<_>>>()?;
    table.analyze_vector(&VectorField::new(comps)?)
}

/// Adjoint of [`analyze_hyper`].
pub fn synthesize_hyper(table: &FrameTable, c: &CoeffSet) -> Result<VectorField> {
    let amps = table.synthesize_vector(c)?;
    if amps.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: amps.dim(),
        });
    }
    let fft = table.fft();
    let n = fft.size();
    let s = spectra(fft, &amps);
    let mut comps = vec![vec![ZERO; n * n]; 3];
    for i in 0..n * n {
        let w = freq(i, n);
        for (k, &b) in Branch::ALL.iter().enumerate() {
            let r = acoustic_eigenvector(b, w);
            for c in 0..3 {
                comps[c][i] += s[k][i] * r[c];
            }
        }
    }
    Ok(from_spectra(fft, comps))
}

/// Largest stable step `0.25 / (N c_max)` of the pseudospectral solver.
pub fn cfl_limit(n: usize, model: &VelocityModel) -> f64 {
    0.25 / (n as f64 * model.c_max())
}

/// Spectral Laplacian `-(2 pi)^2 |omega|^2`.
fn laplacian(fft: &Fft2, u: &[Complex64]) -> Vec<Complex64> {
    let n = fft.size();
    let mut s = u.to_vec();
    fft.forward(&mut s);
    for (i, v) in s.iter_mut().enumerate() {
        let w = freq(i, n);
        *v *= -(2.0 * PI) * (2.0 * PI) * (w[0] * w[0] + w[1] * w[1]);
    }
    fft.inverse(&mut s);
    s
}

/// RK4 integration of `u_t = v`, `v_t = c^2(x) Delta u` up to time `t` with steps no longer than `dt`.
pub fn solve_variable_wave(
    fft: &Fft2,
    u0: &Field2D,
    v0: &Field2D,
    model: &VelocityModel,
    t: f64,
    dt: f64,
) -> Result<(Field2D, Field2D)> {
    check(fft, u0)?;
    check(fft, v0)?;
    model.validate()?;
    let n = fft.size();
    let limit = cfl_limit(n, model);
    if !(dt > 0.0) || dt > limit {
        return Err(Error::Cfl { dt, limit });
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Operator(format!("invalid time {t}")));
    }
    let steps = (t / dt).ceil() as usize;
    let h = if steps == 0 { 0.0 } else { t / steps as f64 };
    let c2: Vec<f64> = Field2D::zeros(n)
        .data()
        .iter()
        .enumerate()
        .map(|(i, _)| model.speed([(i / n) as f64 / n as f64, (i % n) as f64 / n as f64]).powi(2))
        .collect();
    let accel = |u: &[Complex64]| -> Vec<Complex64> {
        let mut l = laplacian(fft, u);
        for (v, c) in l.iter_mut().zip(&c2) {
            *v *= c;
        }
        l
    };
    let comb = |a: &[Complex64], b: &[Complex64], s: f64| -> Vec<Complex64> {
        a.iter().zip(b).map(|(a, b)| a + b * s).collect()
    };
    let mut u = u0.data().to_vec();
    let mut v = v0.data().to_vec();
    for _ in 0..steps {
        let k1u = v.clone();
        let k1v = accel(&u);
        let u2 = comb(&u, &k1u, h / 2.0);
        let k2u = comb(&v, &k1v, h / 2.0);
        let k2v = accel(&u2);
        let u3 = comb(&u, &k2u, h / 2.0);
        let k3u = comb(&v, &k2v, h / 2.0);
        let k3v = accel(&u3);
        let u4 = comb(&u, &k3u, h);
        let k4u = comb(&v, &k3v, h);
        let k4v = accel(&u4);
        for i in 0..n * n {
            u[i] += h / 6.0 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
    }
    Ok((Field2D::from_vec(n, u)?, Field2D::from_vec(n, v)?))
}

/// `1/2 sum (|v|^2 / c^2 + |grad u|^2) / N^2`, conserved by the variable-speed wave equation.
pub fn wave_energy(fft: &Fft2, u: &Field2D, v: &Field2D, model: &VelocityModel) -> f64 {
    let n = fft.size();
    let s = u.spectrum(fft);
    let grad: f64 = s
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let w = freq(i, n);
            (2.0 * PI).powi(2) * (w[0] * w[0] + w[1] * w[1]) * z.norm_sqr()
        })
        .sum();
    let kinetic: f64 = v
        .data()
        .iter()
        .enumerate()
        .map(|(i, z)| z.norm_sqr() / model.speed([(i / n) as f64 / n as f64, (i % n) as f64 / n as f64]).powi(2))
        .sum();
    0.5 * (kinetic + grad) / (n * n) as f64
}

/// Initial velocity `-i c(x) |D| u0` selecting the forward-moving branch.
pub fn forward_velocity(fft: &Fft2, u0: &Field2D, model: &VelocityModel) -> Result<Field2D> {
    check(fft, u0)?;
    let n = fft.size();
    let mut d = u0.apply_multiplier(fft, |w| Complex64::new(0.0, -2.0 * PI * w[0].hypot(w[1])));
    for (i, v) in d.data_mut().iter_mut().enumerate() {
        *v *= model.speed([(i / n) as f64 / n as f64, (i % n) as f64 / n as f64]);
    }
    Ok(d)
}

/// Gaussian smoothing multiplier `exp(-w^2 |xi|^2)` with `|xi| = 2 pi |omega|`.
pub fn apply_gaussian_smooth(fft: &Fft2, f: &Field2D, width: f64) -> Result<Field2D> {
    check(fft, f)?;
    if !(width > 0.0) || !width.is_finite() {
        return Err(Error::Operator(format!("smoothing width must be positive, got {width}")));
    }
    Ok(f.apply_multiplier(fft, |w| {
        let xi2 = (2.0 * PI).powi(2) * (w[0] * w[0] + w[1] * w[1]);
        Complex64::new((-width * width * xi2).exp(), 0.0)
    }))
}

/// Spatial factor `a(x)` of a separable symbol term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SpatialFactor {
    Constant { value: f64 },
    /// `base + amplitude * sin(2 pi k.x)`.
    Sinusoid { base: f64, amplitude: f64, wavevector: [i32; 2] },
}

impl SpatialFactor {
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match *self {
            SpatialFactor::Constant { value } => value,
            SpatialFactor::Sinusoid {
                base,
                amplitude,
                wavevector: k,
            } => base + amplitude * (2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1])).sin(),
        }
    }
}

/// Frequency factor `b(xi)` of a separable symbol term; all are of order zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum FrequencyFactor {
    One,
    /// `exp(-i sign c0 |xi| t)`.
    Halfwave { sign: Branch, t: f64, c0: f64 },
    /// `cos^2(theta(xi) - theta0)`, `1/2` at the origin.
    Directional { theta0: f64 },
    /// `xi_k / |xi|`, zero at the origin.
    Riesz { axis: usize },
}

impl FrequencyFactor {
    pub fn eval(&self, w: [f64; 2]) -> Complex64 {
        let r = w[0].hypot(w[1]);
        match *self {
            FrequencyFactor::One => Complex64::new(1.0, 0.0),
            FrequencyFactor::Halfwave { sign, t, c0 } => Complex64::from_polar(1.0, -sign.sign() * c0 * 2.0 * PI * r * t),
            FrequencyFactor::Directional { theta0 } => {
                if r == 0.0 {
                    Complex64::new(0.5, 0.0)
                } else {
                    Complex64::new((w[1].atan2(w[0]) - theta0).cos().powi(2), 0.0)
                }
            }
            FrequencyFactor::Riesz { axis } => {
                if r == 0.0 {
                    ZERO
                } else {
                    Complex64::new(w[axis.min(1)] / r, 0.0)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolTerm {
    pub a: SpatialFactor,
    pub b: FrequencyFactor,
}

/// Symbol `sigma(x, xi)` of a pseudodifferential operator, restricted to separable forms.
///
/// JSON form: `{"id": "<name>", ...}` with ids `identity`, `spatial` (`a`),
/// `multiplier` (`b`) and `separable` (`terms`). Any other id is rejected as non-separable.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "id", rename_all = "kebab-case")]
pub enum Symbol {
    Identity,
    Spatial { a: SpatialFactor },
    Multiplier { b: FrequencyFactor },
    Separable { terms: Vec<SymbolTerm> },
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        Symbol::from_value(v).map_err(serde::de::Error::custom)
    }
}

impl Symbol {
    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(tag = "id", rename_all = "kebab-case", deny_unknown_fields)]
        enum Known {
            Identity,
            Spatial { a: SpatialFactor },
            Multiplier { b: FrequencyFactor },
            Separable { terms: Vec<SymbolTerm> },
        }
        let id = v
            .get("id")
            .and_then(|s| s.as_str())
            .ok_or_else(|| Error::NonSeparableSymbol("symbol has no id".into()))?
            .to_string();
        if !["identity", "spatial", "multiplier", "separable"].contains(&id.as_str()) {
            return Err(Error::NonSeparableSymbol(id));
        }
        let k: Known = serde_json::from_value(v).map_err(|e| Error::Format(format!("symbol {id}: {e}")))?;
        Ok(match k {
            Known::Identity => Symbol::Identity,
            Known::Spatial { a } => Symbol::Spatial { a },
            Known::Multiplier { b } => Symbol::Multiplier { b },
            Known::Separable { terms } => Symbol::Separable { terms },
        })
    }

    pub fn terms(&self) -> Vec<SymbolTerm> {
        let one = SpatialFactor::Constant { value: 1.0 };
        match self {
            Symbol::Identity => vec![SymbolTerm {
                a: one,
                b: FrequencyFactor::One,
            }],
            Symbol::Spatial { a } => vec![SymbolTerm {
                a: a.clone(),
                b: FrequencyFactor::One,
            }],
            Symbol::Multiplier { b } => vec![SymbolTerm { a: one, b: b.clone() }],
            Symbol::Separable { terms } => terms.clone(),
        }
    }
}

/// `sum_q a_q(x) IFFT(b_q FFT f)`.
pub fn apply_psido(fft: &Fft2, f: &Field2D, symbol: &Symbol) -> Result<Field2D> {
    check(fft, f)?;
    let n = fft.size();
    let mut out = Field2D::zeros(n);
    for term in symbol.terms() {
        let g = f.apply_multiplier(fft, |w| term.b.eval(w));
        for (i, (o, v)) in out.data_mut().iter_mut().zip(g.data()).enumerate() {
            *o += v * term.a.eval([(i / n) as f64 / n as f64, (i % n) as f64 / n as f64]);
        }
    }
    Ok(out)
}

/// Smooth diffeomorphism of the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "kebab-case")]
pub enum WarpMap {
    Identity,
    /// Periodic shear `(x1 + s sin(2 pi x2) / (2 pi), x2)`.
    Shear { s: f64 },
    /// `x + epsilon (sin(2 pi k.x), cos(2 pi k.x))`.
    Sinusoidal { epsilon: f64, wavevector: [i32; 2] },
}

/// How off-grid samples are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Interpolation {
    /// Exact trigonometric interpolation.
    #[default]
    Fourier,
    /// Fourfold spectral upsampling followed by 8-point Lagrange interpolation.
    Lagrange,
}

impl WarpMap {
    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            WarpMap::Identity => x,
            WarpMap::Shear { s } => [x[0] + s * (2.0 * PI * x[1]).sin() / (2.0 * PI), x[1]],
            WarpMap::Sinusoidal { epsilon, wavevector: k } => {
                let ph = 2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1]);
                [x[0] + epsilon * ph.sin(), x[1] + epsilon * ph.cos()]
            }
        }
    }

    /// Jacobian `d phi_i / d x_j`.
    pub fn jacobian(&self, x: [f64; 2]) -> [[f64; 2]; 2] {
        match *self {
            WarpMap::Identity => [[1.0, 0.0], [0.0, 1.0]],
            WarpMap::Shear { s } => [[1.0, s * (2.0 * PI * x[1]).cos()], [0.0, 1.0]],
            WarpMap::Sinusoidal { epsilon, wavevector: k } => {
                let ph = 2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1]);
                let (s, c) = ph.sin_cos();
                let k0 = 2.0 * PI * k[0] as f64;
                let k1 = 2.0 * PI * k[1] as f64;
                [
                    [1.0 + epsilon * c * k0, epsilon * c * k1],
                    [-epsilon * s * k0, 1.0 - epsilon * s * k1],
                ]
            }
        }
    }

    pub fn det(&self, x: [f64; 2]) -> f64 {
        let j = self.jacobian(x);
        j[0][0] * j[1][1] - j[0][1] * j[1][0]
    }

    /// Preimage by Newton iteration started from `y`.
    pub fn inverse(&self, y: [f64; 2]) -> Result<[f64; 2]> {
        let mut x = y;
        for _ in 0..60 {
            let p = self.apply(x);
            let r = [p[0] - y[0], p[1] - y[1]];
            if r[0].abs().max(r[1].abs()) < 1e-14 {
                return Ok(x);
            }
            let j = self.jacobian(x);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            if det.abs() < 1e-12 {
                break;
            }
            x[0] -= (j[1][1] * r[0] - j[0][1] * r[1]) / det;
            x[1] -= (-j[1][0] * r[0] + j[0][0] * r[1]) / det;
        }
        let p = self.apply(x);
        let res = (p[0] - y[0]).abs().max((p[1] - y[1]).abs());
        if res <= 1e-10 {
            Ok(x)
        } else {
            Err(Error::NonInvertibleWarp(format!("Newton failed at {y:?}, residual {res:e}")))
        }
    }

    /// Checks `det D phi in [0.5, 2]` and `|phi(phi^-1(x)) - x| <= 1e-8` on an `n x n` grid.
    pub fn validate(&self, n: usize) -> Result<()> {
        let h = 1.0 / n as f64;
        for i in 0..n * n {
            let x = [(i / n) as f64 * h, (i % n) as f64 * h];
            let det = self.det(x);
            if !(0.5..=2.0).contains(&det) {
                return Err(Error::NonInvertibleWarp(format!("Jacobian determinant {det} at {x:?}")));
            }
            let back = self.apply(self.inverse(x)?);
            let err = (back[0] - x[0]).hypot(back[1] - x[1]);
            if err > 1e-8 {
                return Err(Error::NonInvertibleWarp(format!("inverse residual {err:e} at {x:?}")));
            }
        }
        Ok(())
    }
}

/// `f o phi` sampled on the grid.
pub fn apply_warp(fft: &Fft2, f: &Field2D, map: &WarpMap, interp: Interpolation) -> Result<Field2D> {
    check(fft, f)?;
    let n = fft.size();
    map.validate(n)?;
    if *map == WarpMap::Identity {
        return Ok(f.clone());
    }
    let h = 1.0 / n as f64;
    let points: Vec<[f64; 2]> = (0..n * n)
        .map(|i| map.apply([(i / n) as f64 * h, (i % n) as f64 * h]))
        .collect();
    let values = match interp {
        Interpolation::Fourier => fourier_eval(fft, f, &points),
        Interpolation::Lagrange => lagrange_eval(fft, f, &points),
    };
    Field2D::from_vec(n, values)
}

/// Evaluates the trigonometric interpolant of `f` at arbitrary points.
pub fn fourier_eval(fft: &Fft2, f: &Field2D, points: &[[f64; 2]]) -> Vec<Complex64> {
    let n = fft.size();
    let s = f.spectrum(fft);
    let scale = 1.0 / n as f64;
    let phasors = |y: f64| -> Vec<Complex64> {
        (0..n)
            .map(|i| Complex64::from_polar(1.0, 2.0 * PI * signed_freq(i, n) as f64 * y))
            .collect()
    };
    points
        .par_iter()
        .map(|y| {
            let e1 = phasors(y[0]);
            let e2 = phasors(y[1]);
            let mut acc = ZERO;
            for i1 in 0..n {
                let row = &s[i1 * n..(i1 + 1) * n];
                let inner: Complex64 = row.iter().zip(&e2).map(|(a, b)| a * b).sum();
                acc += e1[i1] * inner;
            }
            acc * scale
        })
        .collect()
}

const UPSAMPLE: usize = 4;
const STENCIL: usize = 8;

fn lagrange_eval(fft: &Fft2, f: &Field2D, points: &[[f64; 2]]) -> Vec<Complex64> {
    let n = fft.size();
    let m = n * UPSAMPLE;
    let s = f.spectrum(fft);
    let mut big = vec![ZERO; m * m];
    for i in 0..n * n {
        let w = [signed_freq(i / n, n), signed_freq(i % n, n)];
        let bin = crate::fft::bin_of(w[0], m) * m + crate::fft::bin_of(w[1], m);
        big[bin] = s[i] * UPSAMPLE as f64;
    }
    let fine = Fft2::new(m);
    fine.inverse(&mut big);
    let weights = |y: f64| -> (i64, [f64; STENCIL]) {
        let p = y * m as f64;
        let base = p.floor() as i64 - (STENCIL as i64 / 2 - 1);
        let mut w = [1.0; STENCIL];
        for (a, wa) in w.iter_mut().enumerate() {
            for b in 0..STENCIL {
                if a != b {
                    *wa *= (p - (base + b as i64) as f64) / (a as f64 - b as f64);
                }
            }
        }
        (base, w)
    };
    points
        .par_iter()
        .map(|y| {
            let (b1, w1) = weights(y[0]);
            let (b2, w2) = weights(y[1]);
            let mut acc = ZERO;
            for (a, wa) in w1.iter().enumerate() {
                let r = (b1 + a as i64).rem_euclid(m as i64) as usize;
                for (b, wb) in w2.iter().enumerate() {
                    let c = (b2 + b as i64).rem_euclid(m as i64) as usize;
                    acc += big[r * m + c] * (wa * wb);
                }
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane_wave(n: usize, k: [i64; 2]) -> Field2D {
        Field2D::from_fn(n, |x| Complex64::from_polar(1.0, 2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1])))
    }

    #[test]
    fn halfwave_on_plane_wave() {
        let fft = Fft2::new(32);
        let f = plane_wave(32, [3, -4]);
        let g = apply_halfwave(&fft, &f, 0.1, Branch::Plus, 1.5).unwrap();
        let m = Complex64::from_polar(1.0, -1.5 * 2.0 * PI * 5.0 * 0.1);
        for (a, b) in g.data().iter().zip(f.data()) {
            assert!((a - b * m).norm() < 1e-12);
        }
    }

    #[test]
    fn cos_wave_zero_frequency_uses_time() {
        let fft = Fft2::new(32);
        let one = Field2D::from_fn(32, |_| Complex64::new(1.0, 0.0));
        let u = apply_cos_wave(&fft, &Field2D::zeros(32), &one, 0.3, 1.0).unwrap();
        for v in u.data() {
            assert!((v - 0.3).norm() < 1e-12);
        }
    }

    #[test]
    fn acoustic_eigenpairs() {
        for &xi in &[[1.0, 0.0], [0.3, -2.0], [-5.0, 7.5]] {
            let a = acoustic_matrix(xi);
            for b in Branch::ALL {
                let r = acoustic_eigenvector(b, xi);
                let lam = acoustic_eigenvalue(b, xi);
                for i in 0..3 {
                    let ar: f64 = (0..3).map(|j| a[i][j] * r[j]).sum();
                    assert!((ar - lam * r[i]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let fft = Fft2::new(32);
        let z = Field2D::zeros(32);
        let m = VelocityModel::constant(1.0);
        assert!(matches!(
            solve_variable_wave(&fft, &z, &z, &m, 0.1, 0.1),
            Err(Error::Cfl { .. })
        ));
    }

    #[test]
    fn unknown_symbol_is_non_separable() {
        let v = serde_json::json!({"id": "oscillatory-phase"});
        assert!(matches!(Symbol::from_value(v), Err(Error::NonSeparableSymbol(_))));
        let ok: Symbol = serde_json::from_str(r#"{"id":"multiplier","b":{"type":"riesz","axis":0}}"#).unwrap();
        assert!(matches!(ok, Symbol::Multiplier { .. }));
    }

    #[test]
    fn warp_inverse_and_folding() {
        let m = WarpMap::Sinusoidal {
            epsilon: 0.05,
            wavevector: [1, 1],
        };
        m.validate(32).unwrap();
        let bad = WarpMap::Sinusoidal {
            epsilon: 0.3,
            wavevector: [1, 1],
        };
        assert!(matches!(bad.validate(32), Err(Error::NonInvertibleWarp(_))));
    }

    #[test]
    fn lagrange_matches_fourier_on_smooth_data() {
        let fft = Fft2::new(32);
        let f = Field2D::from_fn(32, |x| {
            Complex64::new((2.0 * PI * (x[0] + 2.0 * x[1])).sin(), (2.0 * PI * 3.0 * x[0]).cos())
        });
        let pts = [[0.123, 0.456], [0.9, 0.01], [0.5, 0.77]];
        let a = fourier_eval(&fft, &f, &pts);
        let b = lagrange_eval(&fft, &f, &pts);
        for (a, b) in a.iter().zip(&b) {
            assert!((a - b).norm() < 1e-8, "{a} vs {b}");
        }
    }
}
