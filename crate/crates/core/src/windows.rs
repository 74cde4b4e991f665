//! Radial, angular and low-pass windows obeying the squared partition-of-unity
//! identities, and the dyadic-parabolic tiling of the frequency plane built on them.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Meyer-type windows generated by a polynomial smooth step.
///
/// The step `nu` of order `p` vanishes to order `p - 1` at both ends and obeys
/// `nu(t) + nu(1 - t) = 1`; `V(t) = cos(pi/2 * nu(|t|))` on `[-1, 1]` then satisfies
/// `sum_l V^2(t - l) = 1`, and `W(r) = V(log2 r)` satisfies `sum_j W^2(2^j r) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowFamily {
    order: usize,
    /// `nu(t) = t^order * sum_i coeffs[i] * t^i`
    coeffs: Vec<f64>,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl WindowFamily {
    pub fn new(smooth_step_order: usize) -> Result<Self> {
        if smooth_step_order < 2 {
            return Err(Error::SmoothStepOrder(smooth_step_order));
        }
        let n = smooth_step_order - 1;
        let coeffs = (0..=n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(n + i, i) * binomial(2 * n + 1, n - i)
            })
            .collect();
        Ok(WindowFamily {
            order: smooth_step_order,
            coeffs,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Polynomial smooth step on `[0, 1]`, clamped outside.
    pub fn step(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return 1.0;
        }
        // symmetric evaluation keeps nu(t) + nu(1-t) = 1 to rounding
        if t > 0.5 {
            return 1.0 - self.step(1.0 - t);
        }
        let poly = self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
        t.powi(self.order as i32) * poly
    }

    /// Angular window `V`, supported on `[-1, 1]`.
    pub fn angular(&self, t: f64) -> f64 {
        let a = t.abs();
        if a >= 1.0 {
            return 0.0;
        }
        if a <= 0.5 {
            (0.5 * PI * self.step(a)).cos()
        } else {
            (0.5 * PI * self.step(1.0 - a)).sin()
        }
    }

    /// Radial window `W`, supported on `[1/2, 2]`.
    pub fn radial(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.angular(r.log2())
    }

    /// Low-pass window `W0` with `W0^2(r) + sum_{j >= 0} W^2(2^-j r) = 1`.
    pub fn lowpass(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= 0.5 {
            1.0
        } else if r < 1.0 {
            self.radial(2.0 * r)
        } else {
            0.0
        }
    }
}

/// Builds the window family; see [`WindowFamily::new`].
pub fn build_windows(smooth_step_order: usize) -> Result<WindowFamily> {
    WindowFamily::new(smooth_step_order)
}

/// Role of a scale in the tiling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ScaleKind {
    /// Isotropic low-pass channel, scale index 0.
    Coarse,
    /// Directional scales `1..S-1`.
    Directional,
    /// Isotropic guard band covering everything above the finest directional annulus.
    Residual,
}

/// Dyadic-parabolic layout of wedges on an `n x n` frequency grid.
///
/// Directional scale `s` is centred on the annulus `|omega| ~ 2^e_s` (integer grid
/// frequencies) with `e_s = log2(n) - 1 - S + s`, so the finest directional annulus
/// peaks at `n/4`. Scale index `S` is the isotropic guard band above it.
#[derive(Debug, Clone, PartialEq)]
pub struct Tiling {
    windows: WindowFamily,
    n: usize,
    scales: usize,
    l_base: usize,
}

impl Tiling {
    pub fn new(windows: WindowFamily, n: usize, scales: usize, l_base: usize) -> Self {
        Tiling {
            windows,
            n,
            scales,
            l_base,
        }
    }

    pub fn windows(&self) -> &WindowFamily {
        &self.windows
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    /// Number of scales `S` (coarse plus directional).
    pub fn scales(&self) -> usize {
        self.scales
    }

    /// Index of the residual guard-band channel, if the tiling has one.
    pub fn residual_scale(&self) -> Option<usize> {
        (self.scales >= 2).then_some(self.scales)
    }

    pub fn kind(&self, s: usize) -> ScaleKind {
        if s == 0 {
            ScaleKind::Coarse
        } else if s < self.scales {
            ScaleKind::Directional
        } else {
            ScaleKind::Residual
        }
    }

    fn grid_exponent(&self) -> i32 {
        self.n.trailing_zeros() as i32
    }

    /// `log2` of the centre frequency of scale `s`, in grid frequency units.
    ///
    /// The coarse channel reports one octave below the first directional scale,
    /// the residual channel one octave above the finest.
    pub fn center_exponent(&self, s: usize) -> f64 {
        let j = self.grid_exponent();
        (j - 1 - self.scales as i32 + s as i32) as f64
    }

    /// Angular count `L_s = L_base * 2^floor((s-1)/2)`; 1 for isotropic channels.
    pub fn angle_count(&self, s: usize) -> usize {
        match self.kind(s) {
            ScaleKind::Directional => self.l_base << ((s - 1) / 2),
            _ => 1,
        }
    }

    /// Orientation `theta_{s,l} = 2 pi l / L_s`, measured from the first frequency axis.
    pub fn angle(&self, s: usize, l: usize) -> f64 {
        2.0 * PI * l as f64 / self.angle_count(s) as f64
    }

    /// Radial window of scale `s` at grid frequency radius `r`.
    pub fn radial(&self, s: usize, r: f64) -> f64 {
        let w = &self.windows;
        if self.scales == 1 {
            return 1.0;
        }
        match self.kind(s) {
            ScaleKind::Coarse => w.lowpass(r / self.center_exponent(1).exp2()),
            ScaleKind::Directional => w.radial(r / self.center_exponent(s).exp2()),
            ScaleKind::Residual => {
                let top = self.center_exponent(self.scales).exp2();
                if r >= top {
                    1.0
                } else {
                    w.radial(r / top)
                }
            }
        }
    }

    /// Angular window of wedge `l` at scale `s` for polar angle `theta`.
    pub fn angular(&self, s: usize, l: usize, theta: f64) -> f64 {
        let count = self.angle_count(s);
        if count == 1 {
            return 1.0;
        }
        let lf = count as f64;
        let t = (lf * theta / (2.0 * PI) - l as f64).rem_euclid(lf);
        let t = if t >= 0.5 * lf { t - lf } else { t };
        self.windows.angular(t)
    }

    /// Digital wedge window `W(2^-e_s |omega|) V(L_s theta / 2pi - l)` at grid frequency `omega`.
    ///
    /// The squares of all wedge windows sum to one at every frequency.
    pub fn eval_wedge(&self, s: usize, l: usize, omega: [f64; 2]) -> f64 {
        let r = omega[0].hypot(omega[1]);
        let radial = self.radial(s, r);
        if radial == 0.0 {
            return 0.0;
        }
        if self.angle_count(s) == 1 {
            return radial;
        }
        radial * self.angular(s, l, omega[1].atan2(omega[0]))
    }

    /// Continuum-normalised mother symbol `2^{-3e/4} * eval_wedge`.
    pub fn mother_symbol(&self, s: usize, l: usize, omega: [f64; 2]) -> f64 {
        (-0.75 * self.center_exponent(s)).exp2() * self.eval_wedge(s, l, omega)
    }

    /// All `(scale, angle)` wedges in storage order.
    pub fn wedges(&self) -> Vec<(usize, usize)> {
        let top = self.residual_scale().unwrap_or(0);
        (0..=top)
            .flat_map(|s| (0..self.angle_count(s)).map(move |l| (s, l)))
            .collect()
    }
}
