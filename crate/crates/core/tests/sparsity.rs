mod common;

use std::collections::HashMap;

use curvewave::flow::{flow_index, Branch, VelocityModel};
use curvewave::propagators::{FrequencyFactor, Symbol};
use curvewave::sparsity::*;
use curvewave::*;
use num_complex::Complex64;

fn table(n: usize) -> FrameTable {
    build_frame(FrameParams::new(n, FrameParams::max_scales(n))).unwrap()
}

fn halfwave(t: f64) -> OperatorSpec {
    OperatorSpec::Halfwave {
        sign: Branch::Plus,
        t,
        c0: 1.0,
    }
}

fn columns(t: &FrameTable, seed: u64, count: usize, scales: std::ops::Range<usize>) -> Vec<(CurveletIndex, usize)> {
    sample_columns(t, seed, count, scales).into_iter().map(|mu| (mu, 0)).collect()
}

fn fine(t: &FrameTable) -> std::ops::Range<usize> {
    let s = t.params().scales;
    s - 2..s
}

fn lookup(c: &Column) -> HashMap<(CurveletIndex, usize), Complex64> {
    c.entries.iter().map(|e| ((e.row, e.nu), e.value)).collect()
}

#[test]
fn unitary_columns_keep_energy() {
    let t = table(64);
    for op in [OperatorSpec::Identity, halfwave(0.3), OperatorSpec::Acoustic { t: 0.2 }] {
        for (mu, _) in columns(&t, 1, 4, 1..4) {
            for nu in 0..op.components() {
                let c = curvelet_column(&t, &op, &mu, nu, DEFAULT_THRESHOLD, VectorBasis::Components).unwrap();
                assert!((c.energy / c.output_norm_sqr - 1.0).abs() <= 1e-10);
                assert!((c.energy / c.input_norm_sqr - 1.0).abs() <= 1e-10);
                assert!(c.stored_energy() <= c.energy * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn identity_column_is_the_gram_column() {
    let t = table(64);
    let mu = common::mid_index(&t, 2, 5);
    let c = curvelet_column(&t, &OperatorSpec::Identity, &mu, 0, DEFAULT_THRESHOLD, VectorBasis::Components).unwrap();
    let sa = t.atom_spectrum(&mu).unwrap();
    let found = lookup(&c);
    let mut count = 0;
    for row in t.indices() {
        let sb = t.atom_spectrum(&row).unwrap();
        let g: Complex64 = sa.iter().zip(&sb).map(|(x, y)| x * y.conj()).sum();
        let stored = found.get(&(row, 0)).copied().unwrap_or_default();
        assert!((g - stored).norm() <= 1e-7 * c.energy.sqrt() + 1e-12, "{row}: {g} vs {stored}");
        count += usize::from(stored.norm() > 0.0);
    }
    assert_eq!(count, c.entries.len());
}

#[test]
fn halfwave_at_zero_time_is_the_identity() {
    let t = table(64);
    let cols = columns(&t, 2, 6, 1..4);
    let a = build_matrix(&t, &OperatorSpec::Identity, &cols, DEFAULT_THRESHOLD, VectorBasis::Components).unwrap();
    let b = build_matrix(&t, &halfwave(0.0), &cols, DEFAULT_THRESHOLD, VectorBasis::Components).unwrap();
    for (x, y) in a.columns.iter().zip(&b.columns) {
        let ly = lookup(y);
        for e in &x.entries {
            let v = ly.get(&(e.row, e.nu)).copied().unwrap_or_default();
            assert!((v - e.value).norm() <= 1e-12 * x.energy.sqrt());
        }
    }
}

#[test]
fn adjoint_matrix_is_the_conjugate_transpose() {
    let t = table(64);
    let cols = columns(&t, 3, 12, 1..4);
    let ops = [
        halfwave(0.2),
        OperatorSpec::GaussianSmooth { width: 0.02 },
        OperatorSpec::Psido {
            symbol: Symbol::Multiplier {
                b: FrequencyFactor::Directional { theta0: 0.4 },
            },
        },
    ];
    for op in ops {
        let a = build_matrix(&t, &op, &cols, 1e-15, VectorBasis::Components).unwrap();
        let b = build_matrix(&t, &op.adjoint().unwrap(), &cols, 1e-15, VectorBasis::Components).unwrap();
        let (la, lb): (Vec<_>, Vec<_>) = (a.columns.iter().map(lookup).collect(), b.columns.iter().map(lookup).collect());
        for (i, (mi, _)) in cols.iter().enumerate() {
            for (k, (mk, _)) in cols.iter().enumerate() {
                let x = la[k].get(&(*mi, 0)).copied().unwrap_or_default();
                let y = lb[i].get(&(*mk, 0)).copied().unwrap_or_default();
                assert!((x - y.conj()).norm() <= 1e-10, "{}: {x} vs {y}", op.name());
            }
        }
    }
    let warp = OperatorSpec::Warp {
        map: curvewave::propagators::WarpMap::Identity,
        interpolation: Default::default(),
    };
    assert!(warp.adjoint().is_err());
}

#[test]
fn dominant_halfwave_entry_follows_the_flow() {
    let t = table(256);
    let mu = common::mid_index(&t, 5, 9);
    let op = halfwave(0.25);
    let c = curvelet_column(&t, &op, &mu, 0, DEFAULT_THRESHOLD, VectorBasis::Components).unwrap();
    let dom = c.dominant().unwrap().row;
    let f = flow_index(&t, &mu, &VelocityModel::constant(1.0), Branch::Plus, 0.25).unwrap();
    assert_eq!((dom.j, dom.l), (f.index.j, f.index.l));
    let steps = t.lattice_steps(&dom, f.point.x).unwrap();
    assert!(steps[0].abs().max(steps[1].abs()) <= 2.0, "{steps:?}");
}

#[test]
fn decay_report_invariants() {
    let t = table(64);
    let m = build_matrix(&t, &halfwave(0.25), &columns(&t, 4, 6, 1..4), DEFAULT_THRESHOLD, VectorBasis::Components).unwrap();
    let r = decay_report(&t, &m).unwrap();
    for c in &r.columns {
        assert!(c.sorted.windows(2).all(|w| w[0] >= w[1]));
        assert!(c.concentration.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        assert!((c.concentration.last().unwrap() - 1.0).abs() <= 1e-9);
        assert!(c.lp_half >= c.l1);
    }
    let empty = SparseOperatorMatrix { columns: vec![], ..m };
    assert_eq!(decay_report(&t, &empty).err(), Some(Error::EmptyMatrix));
}

#[test]
fn halfwave_energy_concentrates_near_the_flow() {
    let t = table(128);
    let m = build_matrix(&t, &halfwave(0.25), &columns(&t, 5, 10, fine(&t)), DEFAULT_THRESHOLD, VectorBasis::Components).unwrap();
    let r = decay_report(&t, &m).unwrap();
    assert!(r.max_w95.unwrap() <= 8.0, "{:?}", r.max_w95);
    let near = r.columns.iter().filter(|c| c.dominant_omega <= 8.0).count();
    assert!(near * 10 >= 9 * r.columns.len());
}

#[test]
fn gaussian_smoothing_is_scale_local() {
    let t = table(64);
    let cols: Vec<_> = t
        .wedges()
        .iter()
        .filter(|w| w.kind != ScaleKind::Residual)
        .map(|w| (common::mid_index(&t, w.scale, w.angle), 0))
        .collect();
    let m = build_matrix(&t, &OperatorSpec::GaussianSmooth { width: 0.05 }, &cols, 1e-15, VectorBasis::Components).unwrap();
    let (mut far, mut total) = (0.0, 0.0);
    let mut block: HashMap<(usize, usize), f64> = HashMap::new();
    for c in &m.columns {
        for e in &c.entries {
            let v = e.value.norm();
            total += v * v;
            if e.row.j.abs_diff(c.index.j) >= 2 {
                far += v * v;
            }
            let b = block.entry((c.index.j, e.row.j)).or_default();
            *b = b.max(v);
        }
    }
    assert!(far <= 1e-6 * total, "{}", far / total);
    // past the smoothing cutoff each joint scale step gains two orders of magnitude
    assert!(block[&(2, 2)] >= 100.0 * block[&(3, 3)]);
}

#[test]
fn truncation_error_decreases_with_budget() {
    let t = table(64);
    let m = build_matrix(&t, &halfwave(0.25), &columns(&t, 6, 8, 2..4), DEFAULT_THRESHOLD, VectorBasis::Components).unwrap();
    let min_support = m.columns.iter().map(|c| c.entries.len()).min().unwrap();
    let mut last = f64::INFINITY;
    for b in [5, 10, 25, 50, 100] {
        let e = truncation_error(&t, &m, b, TruncationMode::Largest, 1).unwrap();
        assert!(e.norm < last, "B={b}: {} after {last}", e.norm);
        last = e.norm;
    }
    let full = truncation_error(&t, &m, min_support, TruncationMode::Largest, 1).unwrap();
    assert!(full.norm <= last);
    let near = truncation_error(&t, &m, 25, TruncationMode::Nearest, 1).unwrap();
    let best = truncation_error(&t, &m, 25, TruncationMode::Largest, 1).unwrap();
    assert!(near.norm.is_finite() && near.norm >= best.norm * 0.9);
    let one = build_matrix(&t, &halfwave(0.25), &m.columns.iter().map(|c| (c.index, 0)).take(1).collect::<Vec<_>>(), DEFAULT_THRESHOLD, VectorBasis::Components).unwrap();
    let all = one.columns[0].entries.len();
    assert!(truncation_error(&t, &one, all, TruncationMode::Largest, 1).unwrap().norm <= 1e-12);
}

#[test]
fn polarization_fractions() {
    let t = table(64);
    let mu = common::mid_index(&t, 3, 5);
    let inputs = [
        PolarizationInput::Hyper(Branch::Plus),
        PolarizationInput::Hyper(Branch::Zero),
        PolarizationInput::Component(0),
        PolarizationInput::Component(2),
    ];
    for input in inputs {
        for mode in [ProjectionMode::Exact, ProjectionMode::Nominal] {
            let s = polarization_split(&t, 0.3, &mu, input, mode).unwrap();
            assert!((s.fractions.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        }
    }
    let plus = polarization_split(&t, 0.3, &mu, inputs[0], ProjectionMode::Exact).unwrap();
    assert!(plus.fraction(Branch::Plus) >= 0.99);
    let split = polarization_split(&t, 0.3, &mu, PolarizationInput::Component(0), ProjectionMode::Exact).unwrap();
    assert!(split.fractions.iter().filter(|&&f| f >= 1e-3).count() >= 2, "{split:?}");
}

#[test]
fn stationary_polarization_stays_put() {
    let t = table(64);
    let mu = common::mid_index(&t, 3, 2);
    for time in [0.1, 0.4, 0.9] {
        let m = build_matrix(&t, &OperatorSpec::Acoustic { t: time }, &[(mu, 2)], DEFAULT_THRESHOLD, VectorBasis::Hyper).unwrap();
        let d = m.columns[0].dominant().unwrap();
        assert_eq!((d.row, d.nu), (mu, 2));
    }
}

#[test]
fn lp_half_norm_is_stable_across_grids() {
    let norm = |n: usize| {
        let t = table(n);
        let m = build_matrix(&t, &halfwave(0.25), &columns(&t, 7, 20, fine(&t)), DEFAULT_THRESHOLD, VectorBasis::Components).unwrap();
        decay_report(&t, &m).unwrap().max_lp_half
    };
    let ratio = norm(256) / norm(128);
    assert!((0.5..=1.5).contains(&ratio), "{ratio}");
}
