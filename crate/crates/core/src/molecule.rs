//! Empirical curvelet-molecule diagnostics: envelope decay in parabolic
//! coordinates, envelope widths, and the low-frequency moment ratio.

use serde::{Deserialize, Serialize};

use crate::distance::PhasePoint;
use crate::error::{Error, Result};
use crate::fft::{signed_freq, Fft2};
use crate::field::{torus_delta, Field2D};
use crate::frame::{CurveletIndex, FrameTable};
use crate::sparsity::theil_sen;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoleculeReport {
    /// Fitted decay exponent of the envelope against `1 + |u|`, `u = 2^j <e, x - x0>`.
    pub minor_exponent: Option<f64>,
    /// Fitted decay exponent against `1 + v^2`, `v = 2^(j/2) <e_perp, x - x0>`.
    pub major_exponent: Option<f64>,
    /// RMS envelope widths `[across, along]` the ridge, in unit lengths.
    pub widths: [f64; 2],
    /// `max |f^(w)| / min(1, 2^-j (1 + |w|))^2`, relative to `max |f^|`.
    pub moment_ratio: f64,
    pub is_molecule: bool,
}

/// Largest moment ratio still accepted as molecule-like.
pub const MOMENT_RATIO_LIMIT: f64 = 16.0;

struct Coords {
    u: Vec<f64>,
    v: Vec<f64>,
    du: Vec<f64>,
    dv: Vec<f64>,
}

fn parabolic_coords(n: usize, p: &PhasePoint) -> Coords {
    let e = if p.isotropic { [1.0, 0.0] } else { p.direction() };
    let sj = p.scale.exp2();
    let sh = (0.5 * p.scale).exp2();
    let h = 1.0 / n as f64;
    let mut c = Coords {
        u: Vec::with_capacity(n * n),
        v: Vec::with_capacity(n * n),
        du: Vec::with_capacity(n * n),
        dv: Vec::with_capacity(n * n),
    };
    for i in 0..n * n {
        let d = torus_delta([(i / n) as f64 * h, (i % n) as f64 * h], p.x);
        let a = e[0] * d[0] + e[1] * d[1];
        let b = -e[1] * d[0] + e[0] * d[1];
        c.du.push(a);
        c.dv.push(b);
        c.u.push(sj * a);
        c.v.push(sh * b);
    }
    c
}

fn envelope_slope(coord: &[f64], gate: &[f64], amp: &[f64], lo: f64, hi: f64) -> Option<f64> {
    if !(hi > lo * 1.5) {
        return None;
    }
    let bins = 16;
    let mut env = vec![0.0f64; bins];
    let ratio = (hi / lo).ln();
    for ((&x, &g), &a) in coord.iter().zip(gate).zip(amp) {
        if g > 1.0 || !(x >= lo && x < hi) {
            continue;
        }
        let k = (((x / lo).ln() / ratio) * bins as f64) as usize;
        env[k.min(bins - 1)] = env[k.min(bins - 1)].max(a);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = env
        .iter()
        .enumerate()
        .filter(|(_, &e)| e > 0.0)
        .map(|(k, &e)| {
            let mid = lo * (ratio * (k as f64 + 0.5) / bins as f64).exp();
            ((1.0 + mid).ln(), e.ln())
        })
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    theil_sen(&xs, &ys)
}

/// Molecule diagnostics of `f` about the phase-space point `p`.
pub fn molecule_profile(fft: &Fft2, f: &Field2D, p: &PhasePoint) -> Result<MoleculeReport> {
    let n = f.size();
    if n != fft.size() {
        return Err(Error::DimensionMismatch {
            expected: fft.size(),
            got: n,
        });
    }
    let total = f.norm_sqr();
    if total == 0.0 {
        return Err(Error::ZeroField);
    }
    let c = parabolic_coords(n, p);
    let amp: Vec<f64> = f.data().iter().map(|z| z.norm()).collect();
    let abs_u: Vec<f64> = c.u.iter().map(|x| x.abs()).collect();
    let abs_v: Vec<f64> = c.v.iter().map(|x| x.abs()).collect();
    let v_sq: Vec<f64> = c.v.iter().map(|x| x * x).collect();
    let u_max = 0.5 * p.scale.exp2();
    let v_max = 0.5 * (0.5 * p.scale).exp2();
    let minor = envelope_slope(&abs_u, &abs_v, &amp, 2.0, 0.5 * u_max).map(|s| -s);
    let major = envelope_slope(&v_sq, &abs_u, &amp, 1.0, 0.5 * v_max * v_max).map(|s| -s);

    let w2: f64 = f.data().iter().zip(&c.du).map(|(z, d)| z.norm_sqr() * d * d).sum();
    let l2: f64 = f.data().iter().zip(&c.dv).map(|(z, d)| z.norm_sqr() * d * d).sum();
    let widths = [(w2 / total).sqrt(), (l2 / total).sqrt()];

    let spec = f.spectrum(fft);
    let peak = spec.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let inv = (-p.scale).exp2();
    let moment_ratio = spec
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let r = (signed_freq(i / n, n) as f64).hypot(signed_freq(i % n, n) as f64);
            z.norm() / (inv * (1.0 + r)).min(1.0).powi(2)
        })
        .fold(0.0, f64::max)
        / peak;
    let is_molecule = minor.is_some_and(|m| m >= 1.0) && moment_ratio <= MOMENT_RATIO_LIMIT;
    Ok(MoleculeReport {
        minor_exponent: minor,
        major_exponent: major,
        widths,
        moment_ratio,
        is_molecule,
    })
}

/// [`molecule_profile`] about the phase-space centre of `mu`.
pub fn molecule_profile_at(table: &FrameTable, f: &Field2D, mu: &CurveletIndex) -> Result<MoleculeReport> {
    let p = table.phase_point(mu)?;
    molecule_profile(table.fft(), f, &p)
}

/// Fraction of the energy of `f` inside the box `|u| <= half_minor`, `|v| <= half_major`
/// in the parabolic coordinates about `p`.
pub fn box_energy_fraction(f: &Field2D, p: &PhasePoint, half_minor: f64, half_major: f64) -> f64 {
    let c = parabolic_coords(f.size(), p);
    let total = f.norm_sqr();
    let inside: f64 = f
        .data()
        .iter()
        .zip(c.u.iter().zip(&c.v))
        .filter(|(_, (u, v))| u.abs() <= half_minor && v.abs() <= half_major)
        .map(|(z, _)| z.norm_sqr())
        .sum();
    inside / total
}
