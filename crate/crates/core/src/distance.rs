//! Dyadic-parabolic pseudo-distance between phase-space points and curvelet indices.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::torus_delta;

/// A point `(x, xi)` of phase space over the unit torus.
///
/// `xi` is measured in grid frequency units (cycles per unit length). Isotropic
/// points (coarse and guard-band curvelets) carry a scale but no orientation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: [f64; 2],
    pub xi: [f64; 2],
    /// `log2 |xi|`, or the nominal scale of an isotropic point.
    pub scale: f64,
    pub isotropic: bool,
}

impl PhasePoint {
    pub fn new(x: [f64; 2], xi: [f64; 2]) -> Result<Self> {
        let r = xi[0].hypot(xi[1]);
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::ZeroFrequency);
        }
        Ok(PhasePoint {
            x,
            xi,
            scale: r.log2(),
            isotropic: false,
        })
    }

    pub fn isotropic(x: [f64; 2], scale: f64) -> Self {
        PhasePoint {
            x,
            xi: [scale.exp2(), 0.0],
            scale,
            isotropic: true,
        }
    }

    pub fn theta(&self) -> f64 {
        self.xi[1].atan2(self.xi[0])
    }

    /// Codirection `xi / |xi|`.
    pub fn direction(&self) -> [f64; 2] {
        let r = self.xi[0].hypot(self.xi[1]);
        [self.xi[0] / r, self.xi[1] / r]
    }
}

/// Angle difference reduced modulo `pi` into `(-pi/2, pi/2]`.
pub fn angle_mod_pi(d: f64) -> f64 {
    let r = d.rem_euclid(PI);
    if r > 0.5 * PI {
        r - PI
    } else {
        r
    }
}

/// `d(mu, mu') = |dtheta|^2 + |dx|^2 + |<e_mu, dx>|` with torus displacement.
///
/// Angular terms are dropped when either point is isotropic; the along-codirection
/// term only needs the first point's codirection.
pub fn d(a: &PhasePoint, b: &PhasePoint) -> f64 {
    let dx = torus_delta(a.x, b.x);
    let ang = if a.isotropic || b.isotropic {
        0.0
    } else {
        angle_mod_pi(a.theta() - b.theta()).powi(2)
    };
    let along = if a.isotropic {
        0.0
    } else {
        let e = a.direction();
        (e[0] * dx[0] + e[1] * dx[1]).abs()
    };
    ang + dx[0] * dx[0] + dx[1] * dx[1] + along
}

/// `omega(mu, mu') = 2^|j - j'| (1 + 2^min(j, j') d(mu, mu'))`, always `>= 1`.
pub fn omega(a: &PhasePoint, b: &PhasePoint) -> f64 {
    omega_from_d(a.scale, b.scale, d(a, b))
}

#[inline]
pub fn omega_from_d(ja: f64, jb: f64, d: f64) -> f64 {
    (ja - jb).abs().exp2() * (1.0 + ja.min(jb).exp2() * d)
}
