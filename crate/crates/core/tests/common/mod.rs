#![allow(dead_code)]

use curvewave::flow::{flow, Branch, FlowState, VelocityModel};
use curvewave::{d, omega, CurveletIndex, FrameTable, PhasePoint, ScaleKind};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_index(table: &FrameTable, rng: &mut ChaCha8Rng) -> CurveletIndex {
    table.index_at(rng.gen_range(0..table.len()))
}

/// Uniform draw among indices whose wedge kind is accepted by `keep`.
pub fn random_index_where(table: &FrameTable, rng: &mut ChaCha8Rng, keep: impl Fn(ScaleKind) -> bool) -> CurveletIndex {
    loop {
        let i = random_index(table, rng);
        if keep(table.wedge(i.j, i.l).unwrap().kind) {
            return i;
        }
    }
}

/// Coarse and directional indices; the isotropic guard band carries no orientation.
pub fn curvelet_kind(k: ScaleKind) -> bool {
    k != ScaleKind::Residual
}

pub fn directional_kind(k: ScaleKind) -> bool {
    k == ScaleKind::Directional
}

pub fn random_points(table: &FrameTable, rng: &mut ChaCha8Rng, count: usize, keep: fn(ScaleKind) -> bool) -> Vec<PhasePoint> {
    (0..count)
        .map(|_| table.phase_point(&random_index_where(table, rng, keep)).unwrap())
        .collect()
}

pub fn random_field(n: usize, rng: &mut ChaCha8Rng) -> curvewave::Field2D {
    let data = (0..n * n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    curvewave::Field2D::from_vec(n, data).unwrap()
}

/// Pseudo-distance constants measured by brute force over a frame.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct DistanceConstants {
    pub symmetry: f64,
    pub triangle: f64,
    pub composition: f64,
    pub flow: f64,
}

pub fn symmetry_constant(table: &FrameTable, seed: u64, pairs: usize) -> f64 {
    let mut r = rng(seed);
    let pts = random_points(table, &mut r, 2 * pairs, curvelet_kind);
    pts.chunks(2)
        .map(|p| {
            let q = omega(&p[0], &p[1]) / omega(&p[1], &p[0]);
            q.max(1.0 / q)
        })
        .fold(1.0, f64::max)
}

pub fn triangle_constant(table: &FrameTable, seed: u64, triples: usize) -> f64 {
    let mut r = rng(seed);
    let pts = random_points(table, &mut r, 3 * triples, directional_kind);
    pts.chunks(3)
        .filter_map(|p| {
            let lhs = d(&p[0], &p[1]);
            let rhs = d(&p[0], &p[2]) + d(&p[2], &p[1]);
            (rhs > 0.0).then(|| lhs / rhs)
        })
        .fold(0.0, f64::max)
}

/// `max sum_m'' w(m, m'')^-3 w(m'', m')^-3 / w(m, m')^-2` over pairs of a sample,
/// summing over every index of the frame.
pub fn composition_constant(table: &FrameTable, seed: u64, sample: usize) -> f64 {
    let mut r = rng(seed);
    let pts = random_points(table, &mut r, sample, curvelet_kind);
    let all: Vec<PhasePoint> = table
        .indices()
        .filter(|i| curvelet_kind(table.wedge(i.j, i.l).unwrap().kind))
        .map(|i| table.phase_point(&i).unwrap())
        .collect();
    let left: Vec<Vec<f64>> = pts.iter().map(|a| all.iter().map(|m| omega(a, m).powi(-3)).collect()).collect();
    let right: Vec<Vec<f64>> = pts.iter().map(|b| all.iter().map(|m| omega(m, b).powi(-3)).collect()).collect();
    let mut worst = 0.0f64;
    for (a, l) in pts.iter().zip(&left) {
        for (b, rr) in pts.iter().zip(&right) {
            let s: f64 = l.iter().zip(rr).map(|(x, y)| x * y).sum();
            worst = worst.max(s * omega(a, b).powi(2));
        }
    }
    worst
}

/// `+` flow with a step long enough for bulk sampling; isotropic points stay put.
pub fn flow_coarse(p: &PhasePoint, model: &VelocityModel, t: f64) -> PhasePoint {
    if p.isotropic {
        return *p;
    }
    flow(&FlowState::from_point(p).unwrap(), model, Branch::Plus, t, 1.0 / 80.0)
        .unwrap()
        .phase_point()
}

pub fn flow_constant(table: &FrameTable, seed: u64, pairs: usize, model: &VelocityModel, t: f64) -> f64 {
    let mut r = rng(seed);
    let mut pts = Vec::with_capacity(2 * pairs);
    while pts.len() < 2 * pairs {
        let p = random_points(table, &mut r, 2, curvelet_kind);
        // omega identifies antipodal codirections, which the flow carries apart
        let same_sheet = p[0].isotropic || p[1].isotropic || (p[0].theta() - p[1].theta()).cos() >= 0.0;
        if same_sheet {
            pts.extend(p);
        }
    }
    pts.chunks(2)
        .map(|p| {
            let a = flow_coarse(&p[0], model, t);
            let b = flow_coarse(&p[1], model, t);
            let q = omega(&a, &b) / omega(&p[0], &p[1]);
            q.max(1.0 / q)
        })
        .fold(1.0, f64::max)
}

pub fn distance_constants(table: &FrameTable) -> DistanceConstants {
    DistanceConstants {
        symmetry: symmetry_constant(table, 1, 10_000),
        triangle: triangle_constant(table, 2, 10_000),
        composition: composition_constant(table, 3, 200),
        flow: flow_constant(table, 4, 400_000, &VelocityModel::sinusoidal_x1(0.2), 0.25),
    }
}

/// Index of wedge `(j, l)` at the middle of its lattice.
pub fn mid_index(table: &FrameTable, j: usize, l: usize) -> CurveletIndex {
    let (a, c) = table.wedge(j, l).unwrap().dims();
    CurveletIndex::new(j, l, a / 2, c / 2)
}

/// (omega, |G|) over random coarse and directional pairs with nonzero Gram entry.
pub fn gram_samples(t: &FrameTable, seed: u64, count: usize) -> Vec<(f64, f64)> {
    let mut rng = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let a = random_index_where(t, &mut rng, curvelet_kind);
        let b = random_index_where(t, &mut rng, curvelet_kind);
        let sa = t.atom_spectrum(&a).unwrap();
        let sb = t.atom_spectrum(&b).unwrap();
        let g: Complex64 = sa.iter().zip(&sb).map(|(x, y)| x.conj() * y).sum();
        // disjoint wedges are exactly orthogonal and carry no decay information
        if g.norm() > 0.0 {
            let w = omega(&t.phase_point(&a).unwrap(), &t.phase_point(&b).unwrap());
            out.push((w, g.norm()));
        }
    }
    out
}
