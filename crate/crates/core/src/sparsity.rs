//! Curvelet matrices of operators and measurements of their sparsity,
//! organization around the flowed diagonal, and compressibility.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::{omega, PhasePoint};
use crate::error::{Error, Result};
use crate::field::{Field2D, VectorField};
use crate::flow::{flow_point, Branch, VelocityModel};
use crate::frame::{CurveletIndex, FrameParams, FrameTable};
use crate::propagators::{
    analyze_hyper, apply_acoustic, apply_cos_wave, apply_gaussian_smooth, apply_halfwave, apply_psido, apply_warp,
    forward_velocity, polarization_component, polarize, solve_variable_wave, acoustic_eigenvector, cfl_limit,
    Interpolation, Symbol, WarpMap,
};
use crate::windows::ScaleKind;

fn default_c0() -> f64 {
    1.0
}

/// Operator whose curvelet matrix is measured.
///
/// JSON form: `{"kind": "halfwave", "sign": "+", "t": 0.25, "c0": 1.0}` and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorSpec {
    Identity,
    Halfwave {
        sign: Branch,
        t: f64,
        #[serde(default = "default_c0")]
        c0: f64,
    },
    /// `u0 -> u(t)` of the constant-speed wave equation with zero initial velocity.
    CosWave {
        t: f64,
        #[serde(default = "default_c0")]
        c0: f64,
    },
    /// Constant-coefficient acoustic system acting on three-component fields.
    Acoustic { t: f64 },
    /// `u0 -> u(t)` for `u_tt = c^2 Delta u` with forward initial velocity `-i c |D| u0`.
    VariableWave {
        model: VelocityModel,
        t: f64,
        #[serde(default)]
        dt: Option<f64>,
    },
    GaussianSmooth { width: f64 },
    Psido { symbol: Symbol },
    Warp {
        map: WarpMap,
        #[serde(default)]
        interpolation: Interpolation,
    },
}

impl OperatorSpec {
    /// Short identifier used in reports.
    pub fn name(&self) -> &'static str {
        match self {
            OperatorSpec::Identity => "identity",
            OperatorSpec::Halfwave { .. } => "halfwave",
            OperatorSpec::CosWave { .. } => "cos-wave",
            OperatorSpec::Acoustic { .. } => "acoustic",
            OperatorSpec::VariableWave { .. } => "variable-wave",
            OperatorSpec::GaussianSmooth { .. } => "gaussian-smooth",
            OperatorSpec::Psido { .. } => "psido",
            OperatorSpec::Warp { .. } => "warp",
        }
    }

    pub fn time(&self) -> f64 {
        match *self {
            OperatorSpec::Halfwave { t, .. }
            | OperatorSpec::CosWave { t, .. }
            | OperatorSpec::Acoustic { t }
            | OperatorSpec::VariableWave { t, .. } => t,
            _ => 0.0,
        }
    }

    /// The same operator at time `t`; operators without a time are returned unchanged.
    pub fn at_time(&self, t: f64) -> OperatorSpec {
        let mut op = self.clone();
        match &mut op {
            OperatorSpec::Halfwave { t: s, .. }
            | OperatorSpec::CosWave { t: s, .. }
            | OperatorSpec::Acoustic { t: s }
            | OperatorSpec::VariableWave { t: s, .. } => *s = t,
            _ => {}
        }
        op
    }

    /// Number of field components the operator acts on.
    pub fn components(&self) -> usize {
        if matches!(self, OperatorSpec::Acoustic { .. }) {
            3
        } else {
            1
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::Operator(format!("{what} must be finite")))
            }
        };
        match self {
            OperatorSpec::Identity => Ok(()),
            OperatorSpec::Halfwave { t, c0, .. } | OperatorSpec::CosWave { t, c0 } => {
                finite(*t, "t")?;
                if !(*c0 > 0.0) {
                    return Err(Error::Operator(format!("c0 must be positive, got {c0}")));
                }
                Ok(())
            }
            OperatorSpec::Acoustic { t } => finite(*t, "t"),
            OperatorSpec::VariableWave { model, t, dt } => {
                model.validate()?;
                if !(*t >= 0.0) || !t.is_finite() {
                    return Err(Error::Operator(format!("t must be nonnegative, got {t}")));
                }
                if let Some(dt) = dt {
                    let limit = cfl_limit(n, model);
                    if !(*dt > 0.0) || *dt > limit {
                        return Err(Error::Cfl { dt: *dt, limit });
                    }
                }
                Ok(())
            }
            OperatorSpec::GaussianSmooth { width } => {
                if *width > 0.0 && width.is_finite() {
                    Ok(())
                } else {
                    Err(Error::Operator(format!("smoothing width must be positive, got {width}")))
                }
            }
            OperatorSpec::Psido { .. } => Ok(()),
            OperatorSpec::Warp { map, .. } => map.validate(n),
        }
    }

    /// Applies the operator to a field with [`OperatorSpec::components`] components.
    pub fn apply(&self, table: &FrameTable, u: &VectorField) -> Result<VectorField> {
        let fft = table.fft();
        if u.dim() != self.components() {
            return Err(Error::DimensionMismatch {
                expected: self.components(),
                got: u.dim(),
            });
        }
        if let OperatorSpec::Acoustic { t } = self {
            return apply_acoustic(fft, u, *t);
        }
        let f = u.component(0);
        let g = match self {
            OperatorSpec::Identity => f.clone(),
            OperatorSpec::Halfwave { sign, t, c0 } => apply_halfwave(fft, f, *t, *sign, *c0)?,
            OperatorSpec::CosWave { t, c0 } => apply_cos_wave(fft, f, &Field2D::zeros(f.size()), *t, *c0)?,
            OperatorSpec::VariableWave { model, t, dt } => {
                let dt = dt.unwrap_or_else(|| cfl_limit(f.size(), model));
                let v0 = forward_velocity(fft, f, model)?;
                solve_variable_wave(fft, f, &v0, model, *t, dt)?.0
            }
            OperatorSpec::GaussianSmooth { width } => apply_gaussian_smooth(fft, f, *width)?,
            OperatorSpec::Psido { symbol } => apply_psido(fft, f, symbol)?,
            OperatorSpec::Warp { map, interpolation } => apply_warp(fft, f, map, *interpolation)?,
            OperatorSpec::Acoustic { .. } => unreachable!(),
        };
        VectorField::new(vec![g])
    }

    /// Adjoint operator, where it has a closed form in this family.
    pub fn adjoint(&self) -> Result<OperatorSpec> {
        use crate::propagators::{FrequencyFactor, SpatialFactor};
        Ok(match self {
            OperatorSpec::Halfwave { sign, t, c0 } => OperatorSpec::Halfwave {
                sign: *sign,
                t: -t,
                c0: *c0,
            },
            OperatorSpec::Acoustic { t } => OperatorSpec::Acoustic { t: -t },
            OperatorSpec::Identity | OperatorSpec::CosWave { .. } | OperatorSpec::GaussianSmooth { .. } => self.clone(),
            OperatorSpec::Psido { symbol } => match symbol {
                Symbol::Identity | Symbol::Spatial { .. } => self.clone(),
                Symbol::Multiplier { b } => {
                    let b = match b {
                        FrequencyFactor::Halfwave { sign, t, c0 } => FrequencyFactor::Halfwave {
                            sign: *sign,
                            t: -t,
                            c0: *c0,
                        },
                        other => other.clone(),
                    };
                    OperatorSpec::Psido {
                        symbol: Symbol::Multiplier { b },
                    }
                }
                Symbol::Separable { terms }
                    if terms.iter().all(|t| matches!(t.a, SpatialFactor::Constant { .. })) =>
                {
                    self.clone()
                }
                Symbol::Separable { .. } => {
                    return Err(Error::Operator("adjoint of a separable symbol with x-dependence is not separable".into()))
                }
            },
            OperatorSpec::VariableWave { .. } | OperatorSpec::Warp { .. } => {
                return Err(Error::Operator(format!("no closed-form adjoint for {}", self.name())))
            }
        })
    }

    /// Branches whose bicharacteristics carry the operator's wavefront set.
    pub fn branches(&self) -> Vec<Branch> {
        match self {
            OperatorSpec::Halfwave { sign, .. } => vec![*sign],
            OperatorSpec::CosWave { .. } | OperatorSpec::VariableWave { .. } => vec![Branch::Plus, Branch::Minus],
            OperatorSpec::Acoustic { .. } => Branch::ALL.to_vec(),
            _ => vec![Branch::Zero],
        }
    }

    /// Images of a phase-space point under the operator's canonical relation, one per branch.
    pub fn transport(&self, p: &PhasePoint) -> Result<Vec<PhasePoint>> {
        let t = self.time();
        match self {
            OperatorSpec::Halfwave { c0, .. } | OperatorSpec::CosWave { c0, .. } => self
                .branches()
                .into_iter()
                .map(|b| flow_point(p, &VelocityModel::constant(*c0), b, t))
                .collect(),
            OperatorSpec::Acoustic { .. } => self
                .branches()
                .into_iter()
                .map(|b| flow_point(p, &VelocityModel::constant(1.0), b, t))
                .collect(),
            OperatorSpec::VariableWave { model, .. } => self
                .branches()
                .into_iter()
                .map(|b| flow_point(p, model, b, t))
                .collect(),
            OperatorSpec::Warp { map, .. } => {
                // f o phi has its singularity at phi^-1(x) with covector (D phi)^T xi
                let x = map.inverse(p.x)?;
                if p.isotropic {
                    return Ok(vec![PhasePoint::isotropic(crate::field::wrap_unit(x), p.scale)]);
                }
                let j = map.jacobian(x);
                let xi = [
                    j[0][0] * p.xi[0] + j[1][0] * p.xi[1],
                    j[0][1] * p.xi[0] + j[1][1] * p.xi[1],
                ];
                Ok(vec![PhasePoint::new(crate::field::wrap_unit(x), xi)?])
            }
            _ => Ok(vec![*p]),
        }
    }
}

/// Frame used for vector-valued columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VectorBasis {
    /// `e_nu phi_mu`, `nu` the field component.
    #[default]
    Components,
    /// `r_nu(xi) phi_mu`, `nu` the branch in `(+, -, 0)` order.
    Hyper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub row: CurveletIndex,
    pub nu: usize,
    pub value: Complex64,
}

/// One column `E(t; ., .; mu', nu')` of a curvelet matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub index: CurveletIndex,
    pub nu: usize,
    pub entries: Vec<Entry>,
    /// Coefficient energy before thresholding.
    pub energy: f64,
    /// `||E phi||^2`.
    pub output_norm_sqr: f64,
    /// `||phi||^2`.
    pub input_norm_sqr: f64,
}

impl Column {
    pub fn stored_energy(&self) -> f64 {
        self.entries.iter().map(|e| e.value.norm_sqr()).sum()
    }

    /// Appends this column's entries as matrix CSV rows (no header).
    pub fn write_csv_rows(&self, mut w: impl Write) -> Result<()> {
        let c = self.index;
        for e in &self.entries {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{:e},{:e}",
                e.row.j, e.row.l, e.row.k1, e.row.k2, e.nu, c.j, c.l, c.k1, c.k2, self.nu, e.value.re, e.value.im
            )?;
        }
        Ok(())
    }

    /// Entry of largest magnitude.
    pub fn dominant(&self) -> Option<&Entry> {
        self.entries
            .iter()
            .max_by(|a, b| a.value.norm().partial_cmp(&b.value.norm()).unwrap())
    }
}

fn column_input(table: &FrameTable, op: &OperatorSpec, mu: &CurveletIndex, nu: usize, basis: VectorBasis) -> Result<VectorField> {
    let atom = table.atom(mu)?;
    let m = op.components();
    if nu >= m {
        return Err(Error::UnknownIndex(format!("{mu} component {nu}")));
    }
    if m == 1 {
        return VectorField::new(vec![atom]);
    }
    match basis {
        VectorBasis::Components => {
            let mut comps = vec![Field2D::zeros(atom.size()); m];
            comps[nu] = atom;
            VectorField::new(comps)
        }
        VectorBasis::Hyper => polarize(table.fft(), &atom, Branch::ALL[nu]),
    }
}

/// Computes one column: applies `op` to the (vector) curvelet at `(mu, nu)`, analyzes,
/// and keeps entries with magnitude at least `threshold` times the column norm.
pub fn curvelet_column(
    table: &FrameTable,
    op: &OperatorSpec,
    mu: &CurveletIndex,
    nu: usize,
    threshold: f64,
    basis: VectorBasis,
) -> Result<Column> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::Threshold(threshold));
    }
    let input = column_input(table, op, mu, nu, basis)?;
    let out = op.apply(table, &input)?;
    let coeffs = if op.components() == 3 && basis == VectorBasis::Hyper {
        analyze_hyper(table, &out)?
    } else {
        table.analyze_vector(&out)?
    };
    let energy = coeffs.energy();
    let cut = threshold * energy.sqrt();
    let per = coeffs.per_component();
    let entries = coeffs
        .data()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() >= cut && v.norm() > 0.0)
        .map(|(i, v)| Entry {
            row: table.index_at(i % per),
            nu: i / per,
            value: *v,
        })
        .collect();
    Ok(Column {
        index: *mu,
        nu,
        entries,
        energy,
        output_norm_sqr: out.norm_sqr(),
        input_norm_sqr: input.norm_sqr(),
    })
}

/// Thresholded collection of curvelet-matrix columns with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseOperatorMatrix {
    pub op: OperatorSpec,
    pub params: FrameParams,
    pub threshold: f64,
    pub time: f64,
    pub basis: VectorBasis,
    pub columns: Vec<Column>,
}

/// Default relative threshold.
pub const DEFAULT_THRESHOLD: f64 = 1e-7;

/// Builds the columns at `cols` (index, component) in parallel.
pub fn build_matrix(
    table: &FrameTable,
    op: &OperatorSpec,
    cols: &[(CurveletIndex, usize)],
    threshold: f64,
    basis: VectorBasis,
) -> Result<SparseOperatorMatrix> {
    op.validate(table.grid_size())?;
    let columns = cols
        .par_iter()
        .map(|(mu, nu)| curvelet_column(table, op, mu, *nu, threshold, basis))
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseOperatorMatrix {
        op: op.clone(),
        params: table.params().clone(),
        threshold,
        time: op.time(),
        basis,
        columns,
    })
}

/// Draws `count` distinct directional indices with scales in `scales`.
pub fn sample_columns(table: &FrameTable, seed: u64, count: usize, scales: std::ops::Range<usize>) -> Vec<CurveletIndex> {
    let wedges: Vec<_> = table
        .wedges()
        .iter()
        .filter(|w| w.kind == ScaleKind::Directional && scales.contains(&w.scale))
        .collect();
    let total: usize = wedges.iter().map(|w| w.len()).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut seen = std::collections::HashSet::new();
    while out.len() < count.min(total) {
        let mut k = rng.gen_range(0..total);
        let w = wedges
            .iter()
            .find(|w| {
                if k < w.len() {
                    true
                } else {
                    k -= w.len();
                    false
                }
            })
            .expect("k < total");
        let (_, c) = w.dims();
        let idx = CurveletIndex::new(w.scale, w.angle, k / c, k % c);
        if seen.insert(idx) {
            out.push(idx);
        }
    }
    out
}

const MATRIX_HEADER: &str = "row_j,row_l,row_k1,row_k2,row_nu,col_j,col_l,col_k1,col_k2,col_nu,re,im";

impl SparseOperatorMatrix {
    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.entries.len()).sum()
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{MATRIX_HEADER}")?;
        for c in &self.columns {
            c.write_csv_rows(&mut w)?;
        }
        Ok(())
    }

    /// Header line of the matrix CSV format.
    pub fn csv_header() -> &'static str {
        MATRIX_HEADER
    }

    /// Reads entries from CSV; per-column energies are taken from the stored entries.
    pub fn read_csv(r: impl std::io::Read, table: &FrameTable, op: OperatorSpec, threshold: f64) -> Result<Self> {
        let mut cols: BTreeMap<(CurveletIndex, usize), Vec<Entry>> = BTreeMap::new();
        for (lineno, line) in std::io::BufReader::new(r).lines().enumerate() {
            let line = line?;
            if lineno == 0 {
                if line.trim() != MATRIX_HEADER {
                    return Err(Error::Format(format!("unexpected matrix header {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 12 {
                return Err(Error::Format(format!("line {}: expected 12 columns", lineno + 1)));
            }
            let int = |i: usize| f[i].parse::<usize>().map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)));
            let flt = |i: usize| f[i].parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)));
            let row = CurveletIndex::new(int(0)?, int(1)?, int(2)?, int(3)?);
            let col = CurveletIndex::new(int(5)?, int(6)?, int(7)?, int(8)?);
            table.flat_index(&row)?;
            table.flat_index(&col)?;
            cols.entry((col, int(9)?)).or_default().push(Entry {
                row,
                nu: int(4)?,
                value: Complex64::new(flt(10)?, flt(11)?),
            });
        }
        if cols.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let columns = cols
            .into_iter()
            .map(|((index, nu), entries)| {
                let energy = entries.iter().map(|e| e.value.norm_sqr()).sum();
                let input = table.atom_norm_sqr(&index).unwrap_or(f64::NAN);
                Column {
                    index,
                    nu,
                    entries,
                    energy,
                    output_norm_sqr: energy,
                    input_norm_sqr: input,
                }
            })
            .collect();
        Ok(SparseOperatorMatrix {
            time: op.time(),
            op,
            params: table.params().clone(),
            threshold,
            basis: VectorBasis::Components,
            columns,
        })
    }
}

/// Phase-space point of a row or column index.
pub fn index_point(table: &FrameTable, mu: &CurveletIndex) -> Result<PhasePoint> {
    table.phase_point(mu)
}

/// Flowed phase points of every column, one list per column (all branches).
pub fn flow_annotations(table: &FrameTable, matrix: &SparseOperatorMatrix) -> Result<Vec<Vec<PhasePoint>>> {
    matrix
        .columns
        .par_iter()
        .map(|c| {
            let p = table.phase_point(&c.index)?;
            if matrix.op.components() == 3 && matrix.basis == VectorBasis::Hyper {
                let b = Branch::ALL[c.nu];
                return Ok(vec![flow_point(&p, &VelocityModel::constant(1.0), b, matrix.time)?]);
            }
            matrix.op.transport(&p)
        })
        .collect()
}

/// Grid of omega-ball radii `2^(k/4)`, `k = 0..=60`.
pub fn omega_grid() -> Vec<f64> {
    (0..=60).map(|k| (k as f64 / 4.0).exp2()).collect()
}

/// Decay statistics of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnDecay {
    pub index: CurveletIndex,
    pub nu: usize,
    pub nnz: usize,
    pub energy: f64,
    /// Stored magnitudes in nonincreasing order.
    pub sorted: Vec<f64>,
    /// `-slope` of `log |a|_(n)` against `log n` over `n in [10, min(500, nnz)]`.
    pub fitted_m: Option<f64>,
    pub lp_half: f64,
    pub l1: f64,
    /// Energy fraction with `omega <= W` for each `W` of the report grid.
    pub concentration: Vec<f64>,
    /// Smallest grid radius holding 95% of the energy.
    pub w95: Option<f64>,
    /// Omega between the dominant entry and the nearest flowed point.
    pub dominant_omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub operator: OperatorSpec,
    pub time: f64,
    pub threshold: f64,
    pub w_grid: Vec<f64>,
    pub columns: Vec<ColumnDecay>,
    pub median_m: Option<f64>,
    pub max_w95: Option<f64>,
    pub max_lp_half: f64,
}

/// Theil-Sen slope of `ys` against `xs`.
pub fn theil_sen(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let mut slopes = Vec::new();
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            if xs[j] != xs[i] {
                slopes.push((ys[j] - ys[i]) / (xs[j] - xs[i]));
            }
        }
    }
    median(&mut slopes)
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Log-log slope of sorted magnitudes over log-spaced ranks in `[lo, min(hi, len)]`.
pub fn sorted_decay_slope(sorted: &[f64], lo: usize, hi: usize) -> Option<f64> {
    let hi = hi.min(sorted.len());
    if hi < lo + 2 {
        return None;
    }
    let mut ranks: Vec<usize> = (0..40)
        .map(|k| ((lo as f64).ln() + (hi as f64 / lo as f64).ln() * k as f64 / 39.0).exp().round() as usize)
        .collect();
    ranks.dedup();
    let (xs, ys): (Vec<f64>, Vec<f64>) = ranks
        .iter()
        .filter(|&&n| sorted[n - 1] > 0.0)
        .map(|&n| ((n as f64).ln(), sorted[n - 1].ln()))
        .unzip();
    theil_sen(&xs, &ys)
}

pub fn lp_quasinorm(values: &[f64], p: f64) -> f64 {
    values.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Sparsity and organization statistics against the given flowed points of each column.
pub fn decay_report_with(
    table: &FrameTable,
    matrix: &SparseOperatorMatrix,
    flows: &[Vec<PhasePoint>],
) -> Result<DecayReport> {
    if matrix.columns.is_empty() || matrix.nnz() == 0 {
        return Err(Error::EmptyMatrix);
    }
    if flows.len() != matrix.columns.len() {
        return Err(Error::DimensionMismatch {
            expected: matrix.columns.len(),
            got: flows.len(),
        });
    }
    let grid = omega_grid();
    let columns = matrix
        .columns
        .par_iter()
        .zip(flows)
        .map(|(c, targets)| -> Result<ColumnDecay> {
            let mut sorted: Vec<f64> = c.entries.iter().map(|e| e.value.norm()).collect();
            sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let mut weighted = Vec::with_capacity(c.entries.len());
            for e in &c.entries {
                let p = table.phase_point(&e.row)?;
                let w = targets.iter().map(|q| omega(&p, q)).fold(f64::INFINITY, f64::min);
                weighted.push((w, e.value.norm_sqr()));
            }
            let denom = c.energy.max(c.stored_energy());
            let concentration: Vec<f64> = grid
                .iter()
                .map(|&w| weighted.iter().filter(|(o, _)| *o <= w).map(|(_, e)| e).sum::<f64>() / denom)
                .collect();
            let w95 = grid.iter().zip(&concentration).find(|(_, f)| **f >= 0.95).map(|(w, _)| *w);
            let dominant_omega = c
                .entries
                .iter()
                .zip(&weighted)
                .max_by(|a, b| a.0.value.norm().partial_cmp(&b.0.value.norm()).unwrap())
                .map_or(f64::INFINITY, |(_, (w, _))| *w);
            Ok(ColumnDecay {
                index: c.index,
                nu: c.nu,
                nnz: c.entries.len(),
                energy: c.energy,
                fitted_m: sorted_decay_slope(&sorted, 10, 500).map(|s| -s),
                lp_half: lp_quasinorm(&sorted, 0.5),
                l1: lp_quasinorm(&sorted, 1.0),
                sorted,
                concentration,
                w95,
                dominant_omega,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ms: Vec<f64> = columns.iter().filter_map(|c| c.fitted_m).collect();
    let max_w95 = columns
        .iter()
        .map(|c| c.w95)
        .try_fold(0.0f64, |acc, w| w.map(|w| acc.max(w)));
    Ok(DecayReport {
        operator: matrix.op.clone(),
        time: matrix.time,
        threshold: matrix.threshold,
        w_grid: grid,
        median_m: median(&mut ms),
        max_w95,
        max_lp_half: columns.iter().map(|c| c.lp_half).fold(0.0, f64::max),
        columns,
    })
}

/// [`decay_report_with`] using the operator's own canonical relation.
pub fn decay_report(table: &FrameTable, matrix: &SparseOperatorMatrix) -> Result<DecayReport> {
    let flows = flow_annotations(table, matrix)?;
    decay_report_with(table, matrix, &flows)
}

/// Which entries of a column survive truncation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationMode {
    #[default]
    Largest,
    /// The `B` entries nearest to the flowed index in omega.
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationEstimate {
    pub b: usize,
    pub mode: TruncationMode,
    /// Estimated `||A - A_B||` over the sampled columns.
    pub norm: f64,
    /// Spread between power-iteration restarts.
    pub tolerance: f64,
}

/// Estimates `||A - A_B||` restricted to the sampled columns by power iteration
/// (30 iterations, two random restarts).
pub fn truncation_error(
    table: &FrameTable,
    matrix: &SparseOperatorMatrix,
    b: usize,
    mode: TruncationMode,
    seed: u64,
) -> Result<TruncationEstimate> {
    if b == 0 {
        return Err(Error::Operator("at least one entry per column must be kept".into()));
    }
    if matrix.columns.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    for c in &matrix.columns {
        if b > c.entries.len() {
            return Err(Error::TruncationTooLarge {
                requested: b,
                support: c.entries.len(),
                column: c.index.to_string(),
            });
        }
    }
    let flows = if mode == TruncationMode::Nearest {
        Some(flow_annotations(table, matrix)?)
    } else {
        None
    };
    let per = table.len();
    let rows = per * matrix.op.components();
    let residual: Vec<Vec<(usize, Complex64)>> = matrix
        .columns
        .iter()
        .enumerate()
        .map(|(ci, c)| -> Result<Vec<(usize, Complex64)>> {
            let mut keyed: Vec<(f64, f64, &Entry)> = c
                .entries
                .iter()
                .map(|e| -> Result<(f64, f64, &Entry)> {
                    let key = match &flows {
                        None => -e.value.norm(),
                        Some(f) => {
                            let p = table.phase_point(&e.row)?;
                            f[ci].iter().map(|q| omega(&p, q)).fold(f64::INFINITY, f64::min)
                        }
                    };
                    Ok((key, -e.value.norm(), e))
                })
                .collect::<Result<_>>()?;
            keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
            keyed[b..]
                .iter()
                .map(|(_, _, e)| Ok((e.nu * per + table.flat_index(&e.row)?, e.value)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let apply = |v: &[Complex64]| -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); rows];
        for (col, x) in residual.iter().zip(v) {
            for (r, a) in col {
                y[*r] += a * x;
            }
        }
        y
    };
    let apply_adj = |y: &[Complex64]| -> Vec<Complex64> {
        residual
            .iter()
            .map(|col| col.iter().map(|(r, a)| a.conj() * y[*r]).sum())
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut estimates = Vec::new();
    for _ in 0..2 {
        let mut v: Vec<Complex64> = (0..residual.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut est = 0.0;
        for _ in 0..30 {
            let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if nv == 0.0 {
                break;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let y = apply(&v);
            est = y.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            v = apply_adj(&y);
        }
        estimates.push(est);
    }
    let hi = estimates.iter().cloned().fold(0.0, f64::max);
    let lo = estimates.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(TruncationEstimate {
        b,
        mode,
        norm: hi,
        tolerance: hi - lo,
    })
}

/// What is fed to the acoustic propagator in [`polarization_split`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolarizationInput {
    /// `r_nu(xi) phi_mu`.
    Hyper(Branch),
    /// `e_nu phi_mu` with `nu` a field component.
    Component(usize),
}

/// How polarization energies are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProjectionMode {
    /// Per-frequency projection on `r_nu(xi)`.
    #[default]
    Exact,
    /// Projection on `r_nu` frozen at the flowed centre frequency of the curvelet.
    Nominal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationSplit {
    /// Energy fractions in `(+, -, 0)` order.
    pub fractions: [f64; 3],
    pub mode: ProjectionMode,
}

impl PolarizationSplit {
    pub fn fraction(&self, b: Branch) -> f64 {
        self.fractions[b.index()]
    }
}

/// Branch energy fractions of the acoustically propagated (vector or hyper) curvelet.
pub fn polarization_split(
    table: &FrameTable,
    t: f64,
    mu: &CurveletIndex,
    input: PolarizationInput,
    mode: ProjectionMode,
) -> Result<PolarizationSplit> {
    let fft = table.fft();
    let u0 = match input {
        PolarizationInput::Hyper(b) => crate::propagators::hyper_curvelet(table, mu, b)?,
        PolarizationInput::Component(nu) => column_input(table, &OperatorSpec::Acoustic { t }, mu, nu, VectorBasis::Components)?,
    };
    let u = apply_acoustic(fft, &u0, t)?;
    let mut e = [0.0; 3];
    match mode {
        ProjectionMode::Exact => {
            for b in Branch::ALL {
                e[b.index()] = polarization_component(fft, &u, b)?.norm_sqr();
            }
        }
        ProjectionMode::Nominal => {
            // constant coefficients leave the frequency of every branch unchanged
            let xi = table.phase_point(mu)?.xi;
            for b in Branch::ALL {
                let r = acoustic_eigenvector(b, xi);
                let n = u.size();
                e[b.index()] = (0..n * n)
                    .map(|i| (0..3).map(|c| u.component(c).data()[i] * r[c]).sum::<Complex64>().norm_sqr())
                    .sum();
            }
        }
    }
    let total: f64 = e.iter().sum();
    if total == 0.0 {
        return Err(Error::ZeroField);
    }
    Ok(PolarizationSplit {
        fractions: [e[0] / total, e[1] / total, e[2] / total],
        mode,
    })
}
