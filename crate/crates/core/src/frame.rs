//! Digital curvelet tight frame on an `N x N` periodic grid.
//!
//! Each wedge window multiplies the unitary spectrum of the input; the windowed
//! wedge is then folded onto the quotient `Z^2 / Lambda` of an integer frequency
//! lattice `Lambda` whose basis is the rounded rotated rectangle `(A e, B e_perp)`
//! enclosing the wedge. An inverse DFT over that quotient yields the coefficients
//! on the dual lattice `Lambda^* / Z^2`, a rotated parabolic grid of spatial
//! centres. Folding is injective on the wedge support, so every step is an
//! isometry and the squared windows summing to one make the frame tight.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::distance::PhasePoint;
use crate::error::{Error, Result};
use crate::fft::{bin_of, signed_freq, Fft2};
use crate::field::{torus_delta, wrap_unit, Field2D, VectorField};
use crate::windows::{build_windows, ScaleKind, Tiling};

/// Construction parameters of a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FrameParams {
    /// Grid size, a power of two `>= 32`.
    pub n: usize,
    /// Number of scales: the coarse channel plus `scales - 1` directional ones.
    pub scales: usize,
    /// Angular count at the first directional scale, divisible by 4.
    pub l_base: usize,
    /// Lattice oversampling across the ridge (`>= 1`).
    pub delta1: f64,
    /// Lattice oversampling along the ridge (`>= 1`).
    pub delta2: f64,
    pub smooth_step_order: usize,
}

impl Default for FrameParams {
    fn default() -> Self {
        FrameParams {
            n: 64,
            scales: 4,
            l_base: 8,
            delta1: 1.0,
            delta2: 1.0,
            smooth_step_order: 4,
        }
    }
}

impl FrameParams {
    pub fn new(n: usize, scales: usize) -> Self {
        FrameParams {
            n,
            scales,
            ..Default::default()
        }
    }

    /// Largest admissible scale count for grid size `n`.
    pub fn max_scales(n: usize) -> usize {
        (n.max(1).trailing_zeros() as usize).saturating_sub(2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 32 || !self.n.is_power_of_two() {
            return Err(Error::GridSize(self.n));
        }
        let max = Self::max_scales(self.n);
        if self.scales > max {
            return Err(Error::TooManyScales {
                scales: self.scales,
                n: self.n,
                max,
            });
        }
        if self.scales == 0 {
            return Err(Error::FrameParam("at least one scale is required".into()));
        }
        if self.l_base == 0 || self.l_base % 4 != 0 {
            return Err(Error::FrameParam(format!(
                "l_base must be a positive multiple of 4, got {}",
                self.l_base
            )));
        }
        if !(self.delta1 >= 1.0 && self.delta2 >= 1.0) {
            return Err(Error::FrameParam(format!(
                "lattice densities must be >= 1, got ({}, {})",
                self.delta1, self.delta2
            )));
        }
        if self.smooth_step_order < 2 {
            return Err(Error::SmoothStepOrder(self.smooth_step_order));
        }
        Ok(())
    }
}

/// Subscript `mu = (j, l, k)` of a frame element.
///
/// `j = 0` is the coarse isotropic channel, `1..S-1` the directional scales and
/// `j = S` the isotropic guard band. `k` indexes the wedge's spatial lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CurveletIndex {
    pub j: usize,
    pub l: usize,
    pub k1: usize,
    pub k2: usize,
}

impl CurveletIndex {
    pub fn new(j: usize, l: usize, k1: usize, k2: usize) -> Self {
        CurveletIndex { j, l, k1, k2 }
    }
}

impl std::fmt::Display for CurveletIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(j={}, l={}, k=({}, {}))", self.j, self.l, self.k1, self.k2)
    }
}

#[derive(Debug, Clone, Copy)]
struct SupportPoint {
    bin: usize,
    coset: usize,
    window: f64,
}

/// One frequency wedge with its folding lattice.
///
/// The lattice `Lambda` is kept in Hermite form with basis `(a, b), (0, c)`;
/// coefficients are stored at `k1 * c + k2` and sit at
/// `x = (k1/a - b k2/(a c), k2/c) mod 1`.
#[derive(Clone)]
pub struct Wedge {
    pub scale: usize,
    pub angle: usize,
    pub kind: ScaleKind,
    /// Nominal orientation in radians.
    pub theta: f64,
    /// Nominal centre frequency exponent (`log2` of grid frequency).
    pub center_exponent: f64,
    a: usize,
    b: i64,
    c: usize,
    /// Lattice basis before reduction: across-ridge and along-ridge frequency vectors.
    basis: [[i64; 2]; 2],
    support: Vec<SupportPoint>,
    norm_sqr: f64,
    offset: usize,
    twiddle: Vec<Complex64>,
    fft_a: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
    fft_c: (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>),
}

impl std::fmt::Debug for Wedge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Wedge")
            .field("scale", &self.scale)
            .field("angle", &self.angle)
            .field("kind", &self.kind)
            .field("lattice", &(self.a, self.b, self.c))
            .field("support", &self.support.len())
            .finish()
    }
}

impl Wedge {
    /// Number of coefficients (lattice points) of this wedge.
    pub fn len(&self) -> usize {
        self.a * self.c
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(a, c)`: index ranges of `k1` and `k2`.
    pub fn dims(&self) -> (usize, usize) {
        (self.a, self.c)
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Number of grid frequencies where the window is positive.
    pub fn support_size(&self) -> usize {
        self.support.len()
    }

    /// Squared norm shared by all frame elements of the wedge.
    pub fn element_norm_sqr(&self) -> f64 {
        self.norm_sqr
    }

    /// Lattice basis vectors in frequency: `[across, along]` the ridge.
    pub fn basis(&self) -> [[i64; 2]; 2] {
        self.basis
    }

    /// Spatial centre of coefficient `(k1, k2)`.
    pub fn lattice_point(&self, k1: usize, k2: usize) -> [f64; 2] {
        let (a, c) = (self.a as f64, self.c as f64);
        let x1 = k1 as f64 / a - (self.b as f64) * (k2 as f64) / (a * c);
        wrap_unit([x1, k2 as f64 / c])
    }

    /// Coordinates of the torus displacement `x - x_k` in units of lattice steps
    /// along the two basis directions (across, along the ridge).
    pub fn lattice_steps(&self, k1: usize, k2: usize, x: [f64; 2]) -> [f64; 2] {
        let dx = torus_delta(x, self.lattice_point(k1, k2));
        let [v1, v2] = self.basis;
        [
            v1[0] as f64 * dx[0] + v1[1] as f64 * dx[1],
            v2[0] as f64 * dx[0] + v2[1] as f64 * dx[1],
        ]
    }

    /// Lattice index nearest to `x` on the torus; ties go to the smaller `(k1, k2)`.
    pub fn nearest(&self, x: [f64; 2]) -> (usize, usize) {
        let x = wrap_unit(x);
        let [v1, v2] = self.basis;
        let m1 = v1[0] as f64 * x[0] + v1[1] as f64 * x[1];
        let m2 = v2[0] as f64 * x[0] + v2[1] as f64 * x[1];
        let det = (v1[0] * v2[1] - v1[1] * v2[0]) as f64;
        let mut best: Option<(f64, (usize, usize))> = None;
        for d1 in -1..=2 {
            for d2 in -1..=2 {
                let i1 = m1.floor() + d1 as f64;
                let i2 = m2.floor() + d2 as f64;
                // point with <v1, p> = i1, <v2, p> = i2
                let p = [
                    (i1 * v2[1] as f64 - i2 * v1[1] as f64) / det,
                    (i2 * v1[0] as f64 - i1 * v2[0] as f64) / det,
                ];
                let k = self.index_of_point(p);
                let dx = torus_delta(x, self.lattice_point(k.0, k.1));
                let dist = dx[0] * dx[0] + dx[1] * dx[1];
                let better = match best {
                    None => true,
                    Some((bd, bk)) => dist < bd - 1e-15 || ((dist - bd).abs() <= 1e-15 && k < bk),
                };
                if better {
                    best = Some((dist, k));
                }
            }
        }
        best.expect("candidate set is nonempty").1
    }

    /// Hermite coordinates of a point of the dual lattice.
    fn index_of_point(&self, p: [f64; 2]) -> (usize, usize) {
        let (a, c) = (self.a as i64, self.c as i64);
        let k2 = (p[1] * c as f64).round() as i64;
        let k1 = (p[0] * a as f64 + (self.b * k2) as f64 / c as f64).round() as i64;
        let q = k2.div_euclid(c);
        let k2r = k2.rem_euclid(c);
        let k1r = (k1 - self.b * q).rem_euclid(a);
        (k1r as usize, k2r as usize)
    }

    /// Coefficients of the windowed spectrum on this wedge's lattice.
    fn analyze(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let (a, c) = (self.a, self.c);
        let mut g = vec![Complex64::new(0.0, 0.0); a * c];
        for sp in &self.support {
            g[sp.coset] = spectrum[sp.bin] * sp.window;
        }
        self.fft_c.1.process(&mut g);
        for (v, t) in g.iter_mut().zip(&self.twiddle) {
            *v *= t;
        }
        let mut h = transpose(&g, a, c);
        self.fft_a.1.process(&mut h);
        let mut out = transpose(&h, c, a);
        let scale = 1.0 / ((a * c) as f64).sqrt();
        for v in &mut out {
            *v *= scale;
        }
        out
    }

    fn fold_back(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let (a, c) = (self.a, self.c);
        let mut h = transpose(coeffs, a, c);
        self.fft_a.0.process(&mut h);
        let mut g = transpose(&h, c, a);
        for (v, t) in g.iter_mut().zip(&self.twiddle) {
            *v *= t.conj();
        }
        self.fft_c.0.process(&mut g);
        let scale = 1.0 / ((a * c) as f64).sqrt();
        for v in &mut g {
            *v *= scale;
        }
        g
    }
}

fn transpose(src: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        if a < 0 {
            (-a, -1, 0)
        } else {
            (a, 1, 0)
        }
    } else {
        let (g, s, t) = ext_gcd(b, a.rem_euclid(b));
        // g = s b + t (a mod b) = s b + t (a - floor(a/b) b)
        (g, t, s - a.div_euclid(b) * t)
    }
}

/// Hermite basis `(a, b), (0, c)` of the lattice spanned by `v1, v2`.
fn hermite(v1: [i64; 2], v2: [i64; 2]) -> Option<(usize, i64, usize)> {
    let det = v1[0] * v2[1] - v1[1] * v2[0];
    if det == 0 {
        return None;
    }
    let (g, s, t) = ext_gcd(v1[0], v2[0]);
    let u1 = [s * v1[0] + t * v2[0], s * v1[1] + t * v2[1]];
    let u2 = [
        (v2[0] / g) * v1[0] - (v1[0] / g) * v2[0],
        (v2[0] / g) * v1[1] - (v1[0] / g) * v2[1],
    ];
    debug_assert_eq!(u1[0], g);
    debug_assert_eq!(u2[0], 0);
    let c = u2[1].abs();
    let b = u1[1].rem_euclid(c);
    debug_assert_eq!(g * c, det.abs());
    Some((g as usize, b, c as usize))
}

/// Precomputed frame geometry for one grid; immutable after construction.
#[derive(Debug, Clone)]
pub struct FrameTable {
    params: FrameParams,
    tiling: Tiling,
    fft: Fft2,
    wedges: Vec<Wedge>,
    wedge_ids: HashMap<(usize, usize), usize>,
    total: usize,
}

/// Builds the frame table for `params`.
pub fn build_frame(params: FrameParams) -> Result<FrameTable> {
    FrameTable::new(params)
}

struct RawWedge {
    scale: usize,
    angle: usize,
    points: Vec<([i64; 2], usize, f64)>,
}

impl FrameTable {
    pub fn new(params: FrameParams) -> Result<Self> {
        params.validate()?;
        let n = params.n;
        let tiling = Tiling::new(
            build_windows(params.smooth_step_order)?,
            n,
            params.scales,
            params.l_base,
        );
        let wedge_list = tiling.wedges();
        let wedge_ids: HashMap<(usize, usize), usize> = wedge_list
            .iter()
            .enumerate()
            .map(|(i, &w)| (w, i))
            .collect();
        let mut raw: Vec<RawWedge> = wedge_list
            .iter()
            .map(|&(scale, angle)| RawWedge {
                scale,
                angle,
                points: Vec::new(),
            })
            .collect();

        for bin in 0..n * n {
            let w = [signed_freq(bin / n, n), signed_freq(bin % n, n)];
            let omega = [w[0] as f64, w[1] as f64];
            let r = omega[0].hypot(omega[1]);
            let theta = omega[1].atan2(omega[0]);
            for s in 0..=tiling.residual_scale().unwrap_or(0) {
                let radial = tiling.radial(s, r);
                if radial <= 0.0 {
                    continue;
                }
                let count = tiling.angle_count(s);
                if count == 1 {
                    raw[wedge_ids[&(s, 0)]].points.push((w, bin, radial));
                    continue;
                }
                let t = (count as f64 * theta / (2.0 * PI)).rem_euclid(count as f64);
                let lo = t.floor() as usize;
                for l in [lo % count, (lo + 1) % count] {
                    let ang = tiling.angular(s, l, theta);
                    if ang > 0.0 {
                        raw[wedge_ids[&(s, l)]].points.push((w, bin, radial * ang));
                    }
                }
            }
        }

        let mut planner = FftPlanner::new();
        let mut wedges = Vec::with_capacity(raw.len());
        let mut offset = 0;
        for rw in raw {
            let kind = tiling.kind(rw.scale);
            let theta = if kind == ScaleKind::Directional {
                tiling.angle(rw.scale, rw.angle)
            } else {
                0.0
            };
            let (basis, (a, b, c), cosets) = fold_lattice(&rw.points, theta, kind, &params);
            let support: Vec<SupportPoint> = rw
                .points
                .iter()
                .zip(cosets)
                .map(|(&(_, bin, window), coset)| SupportPoint { bin, coset, window })
                .collect();
            let len = a * c;
            let norm_sqr = support.iter().map(|p| p.window * p.window).sum::<f64>() / len as f64;
            let ac = (a * c) as i64;
            let mut twiddle = Vec::with_capacity(len);
            for r1 in 0..a as i64 {
                for k2 in 0..c as i64 {
                    let ph = ((r1 * b) % ac * k2) % ac;
                    twiddle.push(Complex64::from_polar(1.0, -2.0 * PI * ph as f64 / ac as f64));
                }
            }
            wedges.push(Wedge {
                scale: rw.scale,
                angle: rw.angle,
                kind,
                theta,
                center_exponent: tiling.center_exponent(rw.scale),
                a,
                b,
                c,
                basis,
                support,
                norm_sqr,
                offset,
                twiddle,
                fft_a: (planner.plan_fft_forward(a), planner.plan_fft_inverse(a)),
                fft_c: (planner.plan_fft_forward(c), planner.plan_fft_inverse(c)),
            });
            offset += len;
        }

        Ok(FrameTable {
            fft: Fft2::new(n),
            params,
            tiling,
            wedges,
            wedge_ids,
            total: offset,
        })
    }

    pub fn params(&self) -> &FrameParams {
        &self.params
    }

    pub fn tiling(&self) -> &Tiling {
        &self.tiling
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    pub fn grid_size(&self) -> usize {
        self.params.n
    }

    pub fn wedges(&self) -> &[Wedge] {
        &self.wedges
    }

    pub fn wedge(&self, j: usize, l: usize) -> Option<&Wedge> {
        self.wedge_ids.get(&(j, l)).map(|&i| &self.wedges[i])
    }

    /// Total number of frame elements (coefficients per scalar field).
    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Ratio of coefficients to grid samples.
    pub fn redundancy(&self) -> f64 {
        self.total as f64 / (self.params.n * self.params.n) as f64
    }

    /// Directional scale indices `1..S-1`.
    pub fn directional_scales(&self) -> std::ops::Range<usize> {
        1..self.params.scales
    }

    fn wedge_of(&self, idx: &CurveletIndex) -> Result<&Wedge> {
        let w = self
            .wedge(idx.j, idx.l)
            .ok_or_else(|| Error::UnknownIndex(idx.to_string()))?;
        if idx.k1 >= w.a || idx.k2 >= w.c {
            return Err(Error::UnknownIndex(idx.to_string()));
        }
        Ok(w)
    }

    /// Position of `idx` in the flat coefficient layout.
    pub fn flat_index(&self, idx: &CurveletIndex) -> Result<usize> {
        let w = self.wedge_of(idx)?;
        Ok(w.offset + idx.k1 * w.c + idx.k2)
    }

    /// Inverse of [`FrameTable::flat_index`].
    pub fn index_at(&self, flat: usize) -> CurveletIndex {
        assert!(flat < self.total, "flat index {flat} out of range");
        let wi = self.wedges.partition_point(|w| w.offset <= flat) - 1;
        let w = &self.wedges[wi];
        let local = flat - w.offset;
        CurveletIndex::new(w.scale, w.angle, local / w.c, local % w.c)
    }

    pub fn indices(&self) -> impl Iterator<Item = CurveletIndex> + '_ {
        self.wedges.iter().flat_map(|w| {
            (0..w.a).flat_map(move |k1| (0..w.c).map(move |k2| CurveletIndex::new(w.scale, w.angle, k1, k2)))
        })
    }

    /// Spatial centre `x_mu`.
    pub fn center(&self, idx: &CurveletIndex) -> Result<[f64; 2]> {
        let w = self.wedge_of(idx)?;
        Ok(w.lattice_point(idx.k1, idx.k2))
    }

    /// Phase-space centre `(x_mu, xi_mu)` with `xi_mu = 2^e (cos theta, sin theta)`.
    pub fn phase_point(&self, idx: &CurveletIndex) -> Result<PhasePoint> {
        let w = self.wedge_of(idx)?;
        let x = w.lattice_point(idx.k1, idx.k2);
        Ok(match w.kind {
            ScaleKind::Directional => {
                let r = w.center_exponent.exp2();
                PhasePoint {
                    x,
                    xi: [r * w.theta.cos(), r * w.theta.sin()],
                    scale: w.center_exponent,
                    isotropic: false,
                }
            }
            _ => PhasePoint::isotropic(x, w.center_exponent),
        })
    }

    /// Torus displacement `x - x_mu` measured in lattice steps of the wedge.
    pub fn lattice_steps(&self, idx: &CurveletIndex, x: [f64; 2]) -> Result<[f64; 2]> {
        let w = self.wedge_of(idx)?;
        Ok(w.lattice_steps(idx.k1, idx.k2, x))
    }

    /// Nearest directional index to a phase point: nearest scale exponent, then
    /// nearest orientation, then nearest lattice point (ties toward smaller indices).
    pub fn snap(&self, p: &PhasePoint) -> CurveletIndex {
        let scales = self.directional_scales();
        if scales.is_empty() {
            let w = &self.wedges[0];
            let (k1, k2) = w.nearest(p.x);
            return CurveletIndex::new(0, 0, k1, k2);
        }
        let j = scales
            .min_by(|&a, &b| {
                let da = (self.tiling.center_exponent(a) - p.scale).abs();
                let db = (self.tiling.center_exponent(b) - p.scale).abs();
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })
            .unwrap();
        let count = self.tiling.angle_count(j);
        let theta = p.theta();
        let l = (0..count)
            .min_by(|&a, &b| {
                let da = angular_gap(theta, self.tiling.angle(j, a));
                let db = angular_gap(theta, self.tiling.angle(j, b));
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            })
            .unwrap();
        let w = self.wedge(j, l).expect("directional wedge exists");
        let (k1, k2) = w.nearest(p.x);
        CurveletIndex::new(j, l, k1, k2)
    }

    fn check_field(&self, f: &Field2D) -> Result<()> {
        if f.size() != self.params.n {
            return Err(Error::DimensionMismatch {
                expected: self.params.n,
                got: f.size(),
            });
        }
        Ok(())
    }

    /// Coefficients from a unitary spectrum.
    pub fn analyze_spectrum(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let parts: Vec<Vec<Complex64>> = self.wedges.par_iter().map(|w| w.analyze(spectrum)).collect();
        let mut out = Vec::with_capacity(self.total);
        for p in parts {
            out.extend(p);
        }
        out
    }

    /// Unitary spectrum synthesized from flat coefficients.
    pub fn synthesize_spectrum(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let n = self.params.n;
        let folded: Vec<Option<Vec<Complex64>>> = self
            .wedges
            .par_iter()
            .map(|w| {
                let c = &coeffs[w.offset..w.offset + w.len()];
                c.iter().any(|v| *v != Complex64::new(0.0, 0.0)).then(|| w.fold_back(c))
            })
            .collect();
        let mut spectrum = vec![Complex64::new(0.0, 0.0); n * n];
        for (w, g) in self.wedges.iter().zip(folded) {
            if let Some(g) = g {
                for sp in &w.support {
                    spectrum[sp.bin] += g[sp.coset] * sp.window;
                }
            }
        }
        spectrum
    }

    /// Frame coefficients `<f, phi_mu>` of a scalar field.
    pub fn analyze(&self, f: &Field2D) -> Result<CoeffSet> {
        self.check_field(f)?;
        let spectrum = f.spectrum(&self.fft);
        Ok(CoeffSet {
            per_component: self.total,
            components: 1,
            data: self.analyze_spectrum(&spectrum),
        })
    }

    /// `sum_mu c_mu phi_mu`, the adjoint of [`FrameTable::analyze`].
    pub fn synthesize(&self, c: &CoeffSet) -> Result<Field2D> {
        self.check_coeffs(c, 1)?;
        let spectrum = self.synthesize_spectrum(&c.data);
        Ok(Field2D::from_spectrum(self.params.n, spectrum, &self.fft))
    }

    /// Component-wise analysis of a vector field (vector curvelets `e_nu phi_mu`).
    pub fn analyze_vector(&self, u: &VectorField) -> Result<CoeffSet> {
        let mut data = Vec::with_capacity(self.total * u.dim());
        for comp in u.components() {
            data.extend(self.analyze(comp)?.data);
        }
        Ok(CoeffSet {
            per_component: self.total,
            components: u.dim(),
            data,
        })
    }

    pub fn synthesize_vector(&self, c: &CoeffSet) -> Result<VectorField> {
        self.check_coeffs(c, c.components)?;
        let comps = (0..c.components)
            .map(|nu| {
                let spectrum = self.synthesize_spectrum(c.component(nu));
                Field2D::from_spectrum(self.params.n, spectrum, &self.fft)
            })
            .collect();
        VectorField::new(comps)
    }

    fn check_coeffs(&self, c: &CoeffSet, components: usize) -> Result<()> {
        if c.per_component != self.total || c.components != components {
            return Err(Error::DimensionMismatch {
                expected: self.total * components,
                got: c.data.len(),
            });
        }
        Ok(())
    }

    /// Empty coefficient set shaped for this table.
    pub fn zero_coeffs(&self, components: usize) -> CoeffSet {
        CoeffSet {
            per_component: self.total,
            components,
            data: vec![Complex64::new(0.0, 0.0); self.total * components],
        }
    }

    /// Unitary spectrum of the frame element `phi_mu`.
    pub fn atom_spectrum(&self, idx: &CurveletIndex) -> Result<Vec<Complex64>> {
        let w = self.wedge_of(idx)?;
        let n = self.params.n;
        let x = w.lattice_point(idx.k1, idx.k2);
        let scale = 1.0 / (w.len() as f64).sqrt();
        let mut spectrum = vec![Complex64::new(0.0, 0.0); n * n];
        for sp in &w.support {
            let om = [signed_freq(sp.bin / n, n) as f64, signed_freq(sp.bin % n, n) as f64];
            let ph = -2.0 * PI * (om[0] * x[0] + om[1] * x[1]);
            spectrum[sp.bin] = Complex64::from_polar(sp.window * scale, ph);
        }
        Ok(spectrum)
    }

    /// The frame element `phi_mu` itself (`synthesize` of a unit coefficient).
    pub fn atom(&self, idx: &CurveletIndex) -> Result<Field2D> {
        let spectrum = self.atom_spectrum(idx)?;
        Ok(Field2D::from_spectrum(self.params.n, spectrum, &self.fft))
    }

    /// `||phi_mu||^2`.
    pub fn atom_norm_sqr(&self, idx: &CurveletIndex) -> Result<f64> {
        Ok(self.wedge_of(idx)?.norm_sqr)
    }

    /// Unit-norm curvelet waveform at `idx`.
    pub fn waveform(&self, idx: &CurveletIndex) -> Result<Field2D> {
        let mut f = self.atom(idx)?;
        let norm = f.norm();
        f.scale(Complex64::new(1.0 / norm, 0.0));
        Ok(f)
    }

    /// Window value of wedge `(j, l)` at a grid bin, zero off the support.
    pub fn window_at(&self, j: usize, l: usize, omega: [i64; 2]) -> f64 {
        let n = self.params.n;
        let bin = bin_of(omega[0], n) * n + bin_of(omega[1], n);
        self.wedge(j, l)
            .and_then(|w| w.support.iter().find(|sp| sp.bin == bin))
            .map_or(0.0, |sp| sp.window)
    }

    /// `sum over wedges of window^2` at every grid bin.
    pub fn partition_of_unity(&self) -> Vec<f64> {
        let n = self.params.n;
        let mut acc = vec![0.0; n * n];
        for w in &self.wedges {
            for sp in &w.support {
                acc[sp.bin] += sp.window * sp.window;
            }
        }
        acc
    }
}

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

type Folding = ([[i64; 2]; 2], (usize, i64, usize), Vec<usize>);

/// Chooses the folding lattice for a wedge support and assigns each point its coset.
fn fold_lattice(points: &[([i64; 2], usize, f64)], theta: f64, kind: ScaleKind, params: &FrameParams) -> Folding {
    let e = [theta.cos(), theta.sin()];
    let ep = [-e[1], e[0]];
    let extent = |dir: [f64; 2]| {
        let (lo, hi) = points.iter().fold((f64::MAX, f64::MIN), |(lo, hi), (w, _, _)| {
            let u = w[0] as f64 * dir[0] + w[1] as f64 * dir[1];
            (lo.min(u), hi.max(u))
        });
        if points.is_empty() {
            0.0
        } else {
            hi - lo
        }
    };
    let (d1, d2) = if kind == ScaleKind::Directional {
        (params.delta1, params.delta2)
    } else {
        (1.0, 1.0)
    };
    let mut len_a = (d1 * (extent(e) + 1.0)).ceil().max(1.0) as i64;
    let mut len_b = (d2 * (extent(ep) + 1.0)).ceil().max(1.0) as i64;
    loop {
        let v1 = [
            (len_a as f64 * e[0]).round() as i64,
            (len_a as f64 * e[1]).round() as i64,
        ];
        let v2 = [
            (len_b as f64 * ep[0]).round() as i64,
            (len_b as f64 * ep[1]).round() as i64,
        ];
        if let Some((a, b, c)) = hermite(v1, v2) {
            let mut seen = vec![false; a * c];
            let mut cosets = Vec::with_capacity(points.len());
            let mut ok = true;
            for (w, _, _) in points {
                let r1 = w[0].rem_euclid(a as i64);
                let q = (w[0] - r1) / a as i64;
                let r2 = (w[1] - q * b).rem_euclid(c as i64);
                let coset = r1 as usize * c + r2 as usize;
                if seen[coset] {
                    ok = false;
                    break;
                }
                seen[coset] = true;
                cosets.push(coset);
            }
            if ok {
                return ([v1, v2], (a, b, c), cosets);
            }
        }
        len_a += 1;
        len_b += 1;
    }
}

/// Frame coefficients, possibly for several field components.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSet {
    per_component: usize,
    components: usize,
    data: Vec<Complex64>,
}

impl CoeffSet {
    pub fn from_vec(per_component: usize, components: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != per_component * components {
            return Err(Error::DimensionMismatch {
                expected: per_component * components,
                got: data.len(),
            });
        }
        Ok(CoeffSet {
            per_component,
            components,
            data,
        })
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn per_component(&self) -> usize {
        self.per_component
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn component(&self, nu: usize) -> &[Complex64] {
        &self.data[nu * self.per_component..(nu + 1) * self.per_component]
    }

    pub fn get(&self, table: &FrameTable, idx: &CurveletIndex, nu: usize) -> Result<Complex64> {
        if nu >= self.components {
            return Err(Error::UnknownIndex(format!("{idx} component {nu}")));
        }
        Ok(self.data[nu * self.per_component + table.flat_index(idx)?])
    }

    pub fn set(&mut self, table: &FrameTable, idx: &CurveletIndex, nu: usize, v: Complex64) -> Result<()> {
        if nu >= self.components {
            return Err(Error::UnknownIndex(format!("{idx} component {nu}")));
        }
        let i = nu * self.per_component + table.flat_index(idx)?;
        self.data[i] = v;
        Ok(())
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `sum conj(self) * other`.
    pub fn inner(&self, other: &CoeffSet) -> Complex64 {
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }
}

/// Writes nonzero coefficients as CSV with columns `j,l,k1,k2,nu,re,im`.
pub fn write_coeff_csv(mut w: impl std::io::Write, table: &FrameTable, c: &CoeffSet) -> Result<()> {
    writeln!(w, "j,l,k1,k2,nu,re,im")?;
    for nu in 0..c.components {
        for (flat, v) in c.component(nu).iter().enumerate() {
            if *v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let idx = table.index_at(flat);
            writeln!(w, "{},{},{},{},{},{:e},{:e}", idx.j, idx.l, idx.k1, idx.k2, nu, v.re, v.im)?;
        }
    }
    Ok(())
}

/// Reads a coefficient CSV produced by [`write_coeff_csv`].
pub fn read_coeff_csv(r: impl std::io::Read, table: &FrameTable, components: usize) -> Result<CoeffSet> {
    use std::io::BufRead;
    let mut c = table.zero_coeffs(components);
    for (lineno, line) in std::io::BufReader::new(r).lines().enumerate() {
        let line = line?;
        if lineno == 0 {
            if line.trim() != "j,l,k1,k2,nu,re,im" {
                return Err(Error::Format(format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(Error::Format(format!("line {}: expected 7 columns", lineno + 1)));
        }
        let int = |s: &str| s.trim().parse::<usize>().map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)));
        let float = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)));
        let idx = CurveletIndex::new(int(cols[0])?, int(cols[1])?, int(cols[2])?, int(cols[3])?);
        let nu = int(cols[4])?;
        c.set(table, &idx, nu, Complex64::new(float(cols[5])?, float(cols[6])?))?;
    }
    Ok(c)
}
