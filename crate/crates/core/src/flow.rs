//! Bicharacteristic flow of the eigenvalue Hamiltonians `lambda = s c(x) |xi|`,
//! the orientation-tracking rotation, and the induced map on curvelet indices.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::PhasePoint;
use crate::error::{Error, Result};
use crate::field::{wrap_unit, Field2D};
use crate::fft::signed_freq;
use crate::frame::{CurveletIndex, FrameTable};
use crate::windows::ScaleKind;

/// Smooth positive sound speed on the unit torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum VelocityModel {
    Constant {
        c: f64,
    },
    /// `c(x) = base + amplitude * sin(2 pi k.x)` with integer wavevector `k`.
    Sinusoidal {
        base: f64,
        amplitude: f64,
        wavevector: [i32; 2],
    },
    /// `c(x) = base + amplitude * sum_m exp(-|x - center - m|^2 / (2 width^2))` over periodic images.
    GaussianBump {
        base: f64,
        amplitude: f64,
        center: [f64; 2],
        width: f64,
    },
}

impl Default for VelocityModel {
    fn default() -> Self {
        VelocityModel::Constant { c: 1.0 }
    }
}

const IMAGES: i32 = 2;

impl VelocityModel {
    pub fn constant(c: f64) -> Self {
        VelocityModel::Constant { c }
    }

    /// `1 + 0.2 sin(2 pi x1)`.
    pub fn sinusoidal_x1(amplitude: f64) -> Self {
        VelocityModel::Sinusoidal {
            base: 1.0,
            amplitude,
            wavevector: [1, 0],
        }
    }

    pub fn speed(&self, x: [f64; 2]) -> f64 {
        match *self {
            VelocityModel::Constant { c } => c,
            VelocityModel::Sinusoidal {
                base,
                amplitude,
                wavevector: k,
            } => base + amplitude * (2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1])).sin(),
            VelocityModel::GaussianBump {
                base,
                amplitude,
                center,
                width,
            } => base + amplitude * bump_sum(x, center, width, |g, _| g),
        }
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            VelocityModel::Constant { .. } => [0.0, 0.0],
            VelocityModel::Sinusoidal {
                amplitude,
                wavevector: k,
                ..
            } => {
                let ph = 2.0 * PI * (k[0] as f64 * x[0] + k[1] as f64 * x[1]);
                let s = amplitude * 2.0 * PI * ph.cos();
                [s * k[0] as f64, s * k[1] as f64]
            }
            VelocityModel::GaussianBump {
                amplitude,
                center,
                width,
                ..
            } => {
                let w2 = width * width;
                let g0 = bump_sum(x, center, width, |g, d| -g * d[0] / w2);
                let g1 = bump_sum(x, center, width, |g, d| -g * d[1] / w2);
                [amplitude * g0, amplitude * g1]
            }
        }
    }

    /// Lower and upper bounds of `c` (exact for analytic models, sampled on a fine grid otherwise).
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            VelocityModel::Constant { c } => (c, c),
            VelocityModel::Sinusoidal { base, amplitude, .. } => (base - amplitude.abs(), base + amplitude.abs()),
            VelocityModel::GaussianBump { .. } => {
                let m = 256;
                (0..m * m).fold((f64::MAX, f64::MIN), |(lo, hi), i| {
                    let c = self.speed([(i / m) as f64 / m as f64, (i % m) as f64 / m as f64]);
                    (lo.min(c), hi.max(c))
                })
            }
        }
    }

    pub fn c_max(&self) -> f64 {
        self.bounds().1
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            VelocityModel::Constant { c } => c.is_finite(),
            VelocityModel::Sinusoidal { base, amplitude, .. } => base.is_finite() && amplitude.is_finite(),
            VelocityModel::GaussianBump {
                base,
                amplitude,
                center,
                width,
            } => {
                if !(width > 0.0) {
                    return Err(Error::VelocityModel(format!("bump width must be positive, got {width}")));
                }
                [base, amplitude, center[0], center[1], width].iter().all(|v| v.is_finite())
            }
        };
        if !finite {
            return Err(Error::VelocityModel("non-finite parameter".into()));
        }
        let (lo, _) = self.bounds();
        if !(lo > 0.0) {
            return Err(Error::VelocityModel(format!("speed must stay positive, minimum is {lo}")));
        }
        Ok(())
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, VelocityModel::Constant { .. })
    }
}

fn bump_sum(x: [f64; 2], center: [f64; 2], width: f64, term: impl Fn(f64, [f64; 2]) -> f64) -> f64 {
    let mut acc = 0.0;
    for m1 in -IMAGES..=IMAGES {
        for m2 in -IMAGES..=IMAGES {
            let d = [
                x[0] - center[0] - m1 as f64,
                x[1] - center[1] - m2 as f64,
            ];
            let g = (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * width * width)).exp();
            acc += term(g, d);
        }
    }
    acc
}

/// Eigenvalue branch `lambda_nu = sign * c(x) |xi|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "0")]
    Zero,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Plus, Branch::Minus, Branch::Zero];

    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
            Branch::Zero => 0.0,
        }
    }

    /// Position in `(+, -, 0)` order.
    pub fn index(self) -> usize {
        match self {
            Branch::Plus => 0,
            Branch::Minus => 1,
            Branch::Zero => 2,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
            Branch::Zero => "0",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Branch::Plus),
            "-" | "minus" => Ok(Branch::Minus),
            "0" | "zero" => Ok(Branch::Zero),
            _ => Err(Error::Format(format!("unknown branch {s:?}"))),
        }
    }
}

/// `lambda(x, xi) = sign c(x) |xi|`.
pub fn hamiltonian(model: &VelocityModel, branch: Branch, x: [f64; 2], xi: [f64; 2]) -> f64 {
    branch.sign() * model.speed(x) * xi[0].hypot(xi[1])
}

/// Point on a bicharacteristic together with the rotation `U` that carries
/// the current codirection `n(t)` back to `n(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    /// Unwrapped position; use [`FlowState::position`] for the torus point.
    pub x: [f64; 2],
    pub xi: [f64; 2],
    pub u: [[f64; 2]; 2],
    n0: [f64; 2],
}

impl FlowState {
    pub fn new(x: [f64; 2], xi: [f64; 2]) -> Result<Self> {
        let r = xi[0].hypot(xi[1]);
        if !(r > 0.0) {
            return Err(Error::ZeroFrequency);
        }
        Ok(FlowState {
            t: 0.0,
            x,
            xi,
            u: [[1.0, 0.0], [0.0, 1.0]],
            n0: [xi[0] / r, xi[1] / r],
        })
    }

    pub fn from_point(p: &PhasePoint) -> Result<Self> {
        Self::new(p.x, p.xi)
    }

    pub fn position(&self) -> [f64; 2] {
        wrap_unit(self.x)
    }

    pub fn direction(&self) -> [f64; 2] {
        let r = self.xi[0].hypot(self.xi[1]);
        [self.xi[0] / r, self.xi[1] / r]
    }

    pub fn theta(&self) -> f64 {
        self.xi[1].atan2(self.xi[0])
    }

    pub fn initial_direction(&self) -> [f64; 2] {
        self.n0
    }

    pub fn phase_point(&self) -> PhasePoint {
        PhasePoint::new(self.position(), self.xi).expect("flow keeps xi nonzero")
    }

    fn refresh_rotation(&mut self) {
        let n = self.direction();
        // U n = n0 with U a rotation: cos = <n, n0>, sin = n x n0
        let c = n[0] * self.n0[0] + n[1] * self.n0[1];
        let s = n[0] * self.n0[1] - n[1] * self.n0[0];
        self.u = [[c, -s], [s, c]];
    }
}

fn rhs(model: &VelocityModel, sign: f64, x: [f64; 2], xi: [f64; 2]) -> ([f64; 2], [f64; 2]) {
    let r = xi[0].hypot(xi[1]);
    let c = model.speed(x);
    let g = model.gradient(x);
    (
        [sign * c * xi[0] / r, sign * c * xi[1] / r],
        [-sign * r * g[0], -sign * r * g[1]],
    )
}

/// One RK4 step of `(x', xi') = (grad_xi lambda, -grad_x lambda)`; `dt` may be negative.
pub fn flow_step(state: &FlowState, model: &VelocityModel, branch: Branch, dt: f64) -> Result<FlowState> {
    let mut next = *state;
    next.t += dt;
    if branch == Branch::Zero {
        return Ok(next);
    }
    let s = branch.sign();
    let add = |a: [f64; 2], b: [f64; 2], h: f64| [a[0] + h * b[0], a[1] + h * b[1]];
    let (x, xi) = (state.x, state.xi);
    let (k1x, k1p) = rhs(model, s, x, xi);
    let (k2x, k2p) = rhs(model, s, add(x, k1x, dt / 2.0), add(xi, k1p, dt / 2.0));
    let (k3x, k3p) = rhs(model, s, add(x, k2x, dt / 2.0), add(xi, k2p, dt / 2.0));
    let (k4x, k4p) = rhs(model, s, add(x, k3x, dt), add(xi, k3p, dt));
    for i in 0..2 {
        next.x[i] = x[i] + dt / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
        next.xi[i] = xi[i] + dt / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]);
    }
    let r = next.xi[0].hypot(next.xi[1]);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::ZeroFrequency);
    }
    next.refresh_rotation();
    Ok(next)
}

/// Integrates for time `t` (of either sign) with steps no longer than `max_dt`,
/// returning every intermediate state including the initial one.
pub fn trajectory(
    start: &FlowState,
    model: &VelocityModel,
    branch: Branch,
    t: f64,
    max_dt: f64,
) -> Result<Vec<FlowState>> {
    if !(max_dt > 0.0) || !t.is_finite() {
        return Err(Error::Operator(format!("invalid flow step {max_dt} or time {t}")));
    }
    let steps = (t.abs() / max_dt).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut out = Vec::with_capacity(steps + 1);
    let mut s = *start;
    out.push(s);
    for _ in 0..steps {
        s = flow_step(&s, model, branch, dt)?;
        out.push(s);
    }
    Ok(out)
}

/// Final state after flowing for time `t`.
pub fn flow(start: &FlowState, model: &VelocityModel, branch: Branch, t: f64, max_dt: f64) -> Result<FlowState> {
    if !(max_dt > 0.0) || !t.is_finite() {
        return Err(Error::Operator(format!("invalid flow step {max_dt} or time {t}")));
    }
    let steps = (t.abs() / max_dt).ceil() as usize;
    let dt = if steps == 0 { 0.0 } else { t / steps as f64 };
    let mut s = *start;
    for _ in 0..steps {
        s = flow_step(&s, model, branch, dt)?;
    }
    Ok(s)
}

/// Default step `min(1e-3, 2^-scale / 4)` for a point at frequency scale `2^scale`.
pub fn default_step(scale: f64) -> f64 {
    (1e-3f64).min((-scale).exp2() / 4.0)
}

/// Flows an arbitrary phase point; isotropic points are left in place.
pub fn flow_point(p: &PhasePoint, model: &VelocityModel, branch: Branch, t: f64) -> Result<PhasePoint> {
    if p.isotropic || branch == Branch::Zero || t == 0.0 {
        return Ok(*p);
    }
    let s = flow(&FlowState::from_point(p)?, model, branch, t, default_step(p.scale))?;
    Ok(s.phase_point())
}

/// Result of flowing a curvelet index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowedIndex {
    pub index: CurveletIndex,
    /// Unsnapped flowed phase-space point.
    pub point: PhasePoint,
    pub rotation: [[f64; 2]; 2],
}

/// `mu_nu(t)`: the index flown along branch `nu` for time `t`, snapped back to the frame.
pub fn flow_index(
    table: &FrameTable,
    mu: &CurveletIndex,
    model: &VelocityModel,
    branch: Branch,
    t: f64,
) -> Result<FlowedIndex> {
    let p = table.phase_point(mu)?;
    let identity = [[1.0, 0.0], [0.0, 1.0]];
    if p.isotropic || branch == Branch::Zero || t == 0.0 {
        return Ok(FlowedIndex {
            index: *mu,
            point: p,
            rotation: identity,
        });
    }
    let s = flow(&FlowState::from_point(&p)?, model, branch, t, default_step(p.scale))?;
    let point = s.phase_point();
    Ok(FlowedIndex {
        index: table.snap(&point),
        point,
        rotation: s.u,
    })
}

/// Evaluates a trigonometric polynomial given by a sparse unitary spectrum at arbitrary points.
pub(crate) fn eval_spectrum(n: usize, spectrum: &[(usize, Complex64)], points: &[[f64; 2]]) -> Vec<Complex64> {
    let scale = 1.0 / n as f64;
    let freqs: Vec<([f64; 2], Complex64)> = spectrum
        .iter()
        .map(|&(bin, v)| ([signed_freq(bin / n, n) as f64, signed_freq(bin % n, n) as f64], v * scale))
        .collect();
    points
        .par_iter()
        .map(|y| {
            freqs
                .iter()
                .map(|(w, v)| v * Complex64::from_polar(1.0, 2.0 * PI * (w[0] * y[0] + w[1] * y[1])))
                .sum()
        })
        .collect()
}

/// The curvelet waveform at `mu` moved rigidly along the flow:
/// `x -> phi_mu(U (x - x_mu(t)) + x_mu)`.
pub fn predicted_curvelet(
    table: &FrameTable,
    mu: &CurveletIndex,
    model: &VelocityModel,
    branch: Branch,
    t: f64,
) -> Result<Field2D> {
    let w = table
        .wedge(mu.j, mu.l)
        .ok_or_else(|| Error::UnknownIndex(mu.to_string()))?;
    if w.kind != ScaleKind::Directional {
        return Err(Error::NotDirectional(mu.j));
    }
    if t == 0.0 || branch == Branch::Zero {
        return table.waveform(mu);
    }
    let flowed = flow_index(table, mu, model, branch, t)?;
    let n = table.grid_size();
    let x0 = table.center(mu)?;
    let xt = flowed.point.x;
    let u = flowed.rotation;
    let norm = table.atom_norm_sqr(mu)?.sqrt();
    let sparse: Vec<(usize, Complex64)> = table
        .atom_spectrum(mu)?
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(i, v)| (i, *v / norm))
        .collect();
    let h = 1.0 / n as f64;
    let points: Vec<[f64; 2]> = (0..n * n)
        .map(|i| {
            let x = [(i / n) as f64 * h, (i % n) as f64 * h];
            let d = crate::field::torus_delta(x, xt);
            [
                u[0][0] * d[0] + u[0][1] * d[1] + x0[0],
                u[1][0] * d[0] + u[1][1] * d[1] + x0[1],
            ]
        })
        .collect();
    Field2D::from_vec(n, eval_spectrum(n, &sparse, &points))
}
