use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use curvewave::field::write_pgm;
use curvewave::flow::trajectory;
use curvewave::frame::write_coeff_csv;
use curvewave::propagators::hyper_curvelet;
use curvewave::sparsity::{decay_report, sample_columns, truncation_error, Column, SparseOperatorMatrix};
use curvewave::{build_frame, curvelet_column, read_fields, write_fields, Field2D, FlowState, FrameTable, VectorField};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, InputSpec};

/// Failure of a subcommand, mapped to the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration, arguments or input files (exit 2).
    Config(String),
    /// A checked invariant did not hold (exit 1).
    Invariant(String),
    /// Anything else, e.g. an unwritable output directory (exit 1).
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) | CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violated: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

impl From<curvewave::Error> for CliError {
    fn from(e: curvewave::Error) -> Self {
        match e {
            curvewave::Error::Io(m) => CliError::Runtime(m),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    File::create(&path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn write_json(dir: &Path, name: &str, value: &impl Serialize) -> Result<String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut w = create(dir, name)?;
    writeln!(w, "{text}")?;
    w.flush()?;
    Ok(text)
}

fn frame(cfg: &ExperimentConfig) -> Result<FrameTable> {
    Ok(build_frame(cfg.frame.clone())?)
}

fn random_field(n: usize, rng: &mut ChaCha8Rng) -> Field2D {
    let data = (0..n * n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    Field2D::from_vec(n, data).expect("n*n samples")
}

/// Tag used in per-time file names.
fn time_tag(t: f64) -> String {
    format!("t{t}")
}

#[derive(Serialize)]
struct FrameCheckReport {
    n: usize,
    scales: usize,
    coefficients: usize,
    fields: usize,
    tolerance: f64,
    parseval_err: f64,
    round_trip_err: f64,
    adjoint_err: f64,
    partition_err: f64,
    pass: bool,
}

pub fn frame_check(cfg: &ExperimentConfig) -> Result<()> {
    let t = frame(cfg)?;
    let n = t.grid_size();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let fields: Vec<Field2D> = (0..cfg.frame_check.fields).map(|_| random_field(n, &mut rng)).collect();
    let errs: Vec<(f64, f64)> = fields
        .par_iter()
        .map(|f| -> Result<(f64, f64)> {
            let c = t.analyze(f)?;
            let back = t.synthesize(&c)?;
            Ok(((c.energy() / f.norm_sqr() - 1.0).abs(), back.sub(f).norm() / f.norm()))
        })
        .collect::<Result<_>>()?;
    let parseval_err = errs.iter().map(|e| e.0).fold(0.0, f64::max);
    let round_trip_err = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let f = random_field(n, &mut rng);
    let coeffs = curvewave::CoeffSet::from_vec(
        t.len(),
        1,
        (0..t.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    )?;
    let lhs = t.analyze(&f)?.inner(&coeffs);
    let rhs = f.inner(&t.synthesize(&coeffs)?);
    let adjoint_err = (lhs - rhs).norm() / lhs.norm().max(1.0);
    let partition_err = t.partition_of_unity().iter().map(|p| (p - 1.0).abs()).fold(0.0, f64::max);
    let tol = cfg.frame_check.tolerance;
    let report = FrameCheckReport {
        n,
        scales: cfg.frame.scales,
        coefficients: t.len(),
        fields: fields.len(),
        tolerance: tol,
        parseval_err,
        round_trip_err,
        adjoint_err,
        partition_err,
        pass: [parseval_err, round_trip_err, adjoint_err, partition_err].iter().all(|e| *e <= tol),
    };
    println!("{}", write_json(&cfg.out, "frame_check.json", &report)?);
    if report.pass {
        Ok(())
    } else {
        Err(CliError::Invariant(format!("frame identities exceed tolerance {tol:e}")))
    }
}

/// Loads or synthesizes the input field with `components` components.
fn input_field(cfg: &ExperimentConfig, t: &FrameTable, path: Option<&Path>, components: usize) -> Result<VectorField> {
    let n = t.grid_size();
    let spec = match path {
        Some(p) => InputSpec::File { path: p.to_path_buf() },
        None => cfg.input.clone(),
    };
    let mut fields = match spec {
        InputSpec::File { path } => {
            let file = File::open(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            let fields = read_fields(std::io::BufReader::new(file))?;
            if fields[0].size() != n {
                return Err(CliError::Config(format!(
                    "{} holds a {}x{} field but the frame grid is {n}x{n}",
                    path.display(),
                    fields[0].size(),
                    fields[0].size()
                )));
            }
            fields
        }
        InputSpec::Curvelet {
            index,
            component,
            polarization,
        } => {
            if let Some(b) = polarization {
                let h = hyper_curvelet(t, &index, b)?;
                let norm = h.norm();
                let mut comps = h.into_components();
                comps.iter_mut().for_each(|c| c.scale(Complex64::new(1.0 / norm, 0.0)));
                comps
            } else {
                if component >= components {
                    return Err(CliError::Config(format!("component {component} out of range for {components}")));
                }
                let mut comps = vec![Field2D::zeros(n); components];
                comps[component] = t.waveform(&index)?;
                comps
            }
        }
        InputSpec::Gaussian { center, width } => {
            if !(width > 0.0) {
                return Err(CliError::Config(format!("gaussian width must be positive, got {width}")));
            }
            vec![Field2D::from_fn(n, |x| {
                let d = curvewave::field::torus_delta(x, center);
                Complex64::new((-(d[0] * d[0] + d[1] * d[1]) / (2.0 * width * width)).exp(), 0.0)
            })]
        }
        InputSpec::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            vec![random_field(n, &mut rng)]
        }
    };
    if fields.len() == 1 && components > 1 {
        fields.resize(components, Field2D::zeros(n));
    }
    Ok(VectorField::new(fields)?)
}

#[derive(Serialize)]
struct TransformReport {
    n: usize,
    components: usize,
    nonzero_coefficients: usize,
    parseval_err: f64,
    round_trip_err: f64,
}

pub fn transform(cfg: &ExperimentConfig, input: Option<&Path>) -> Result<()> {
    let t = frame(cfg)?;
    let u = input_field(cfg, &t, input, 1)?;
    let c = t.analyze_vector(&u)?;
    let back = t.synthesize_vector(&c)?;
    let norm = u.norm();
    let diff: f64 = back
        .components()
        .iter()
        .zip(u.components())
        .map(|(a, b)| a.sub(b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let (parseval_err, round_trip_err) = if norm == 0.0 {
        (c.energy(), diff)
    } else {
        ((c.energy() / u.norm_sqr() - 1.0).abs(), diff / norm)
    };
    let mut w = create(&cfg.out, "coefficients.csv")?;
    write_coeff_csv(&mut w, &t, &c)?;
    w.flush()?;
    let mut w = create(&cfg.out, "reconstruction.field")?;
    write_fields(&mut w, back.components())?;
    w.flush()?;
    let mut w = create(&cfg.out, "input.pgm")?;
    write_pgm(&mut w, u.component(0), cfg.pgm_decades)?;
    w.flush()?;
    let report = TransformReport {
        n: t.grid_size(),
        components: u.dim(),
        nonzero_coefficients: c.data().iter().filter(|v| v.norm() > 0.0).count(),
        parseval_err,
        round_trip_err,
    };
    write_json(&cfg.out, "transform.json", &report)?;
    println!("round-trip error {round_trip_err:e}");
    println!("nonzero coefficients {}", report.nonzero_coefficients);
    Ok(())
}

pub fn propagate(cfg: &ExperimentConfig, input: Option<&Path>) -> Result<()> {
    let t = frame(cfg)?;
    let op = &cfg.operator;
    let m = op.components();
    let u0 = input_field(cfg, &t, input, m)?;
    let mut summary = create(&cfg.out, "propagate.csv")?;
    writeln!(summary, "t,norm,relative_norm")?;
    for time in cfg.times() {
        let op = op.at_time(time);
        op.validate(t.grid_size())?;
        let u = op.apply(&t, &u0)?;
        let tag = time_tag(time);
        let mut w = create(&cfg.out, &format!("propagated-{tag}.field"))?;
        write_fields(&mut w, u.components())?;
        w.flush()?;
        let mut w = create(&cfg.out, &format!("propagated-{tag}.pgm"))?;
        write_pgm(&mut w, &magnitude(&u), cfg.pgm_decades)?;
        w.flush()?;
        let rel = if u0.norm() == 0.0 { 0.0 } else { u.norm() / u0.norm() };
        writeln!(summary, "{time},{:e},{:e}", u.norm(), rel)?;
        println!("t={time}: |u| = {:e}", u.norm());
    }
    summary.flush()?;
    Ok(())
}

/// Pointwise Euclidean magnitude over components.
fn magnitude(u: &VectorField) -> Field2D {
    let n = u.size();
    let data = (0..n * n)
        .map(|i| {
            let s: f64 = u.components().iter().map(|c| c.data()[i].norm_sqr()).sum();
            Complex64::new(s.sqrt(), 0.0)
        })
        .collect();
    Field2D::from_vec(n, data).expect("n*n samples")
}

fn column_list(cfg: &ExperimentConfig, t: &FrameTable) -> Result<Vec<(curvewave::CurveletIndex, usize)>> {
    let indices = if cfg.columns.indices.is_empty() {
        let s = cfg.frame.scales;
        let [lo, hi] = cfg.columns.scales.unwrap_or([s.saturating_sub(2).max(1), s]);
        if lo >= hi {
            return Err(CliError::Config(format!("empty scale range [{lo}, {hi})")));
        }
        sample_columns(t, cfg.seed, cfg.columns.count, lo..hi)
    } else {
        for idx in &cfg.columns.indices {
            t.flat_index(idx)?;
        }
        cfg.columns.indices.clone()
    };
    if indices.is_empty() {
        return Err(CliError::Config("no columns selected".into()));
    }
    let m = cfg.operator.components();
    Ok(indices.into_iter().flat_map(|mu| (0..m).map(move |nu| (mu, nu))).collect())
}

pub fn matrix(cfg: &ExperimentConfig) -> Result<()> {
    let t = frame(cfg)?;
    if !(cfg.threshold > 0.0) || !cfg.threshold.is_finite() {
        return Err(CliError::Config(format!("threshold must be positive, got {}", cfg.threshold)));
    }
    let cols = column_list(cfg, &t)?;
    let batch = 2 * rayon::current_num_threads();
    for time in cfg.times() {
        let op = cfg.operator.at_time(time);
        op.validate(t.grid_size())?;
        let name = format!("matrix-{}.csv", time_tag(time));
        let mut w = create(&cfg.out, &name)?;
        writeln!(w, "{}", SparseOperatorMatrix::csv_header())?;
        let mut nnz = 0;
        for chunk in cols.chunks(batch) {
            let done: Vec<Column> = chunk
                .par_iter()
                .map(|(mu, nu)| curvelet_column(&t, &op, mu, *nu, cfg.threshold, cfg.basis))
                .collect::<curvewave::Result<_>>()?;
            for c in &done {
                c.write_csv_rows(&mut w)?;
                nnz += c.entries.len();
            }
        }
        w.flush()?;
        println!("{}: {} columns, {nnz} entries", cfg.out.join(&name).display(), cols.len());
    }
    Ok(())
}

pub fn sparsity(cfg: &ExperimentConfig, input: Option<&Path>) -> Result<()> {
    let t = frame(cfg)?;
    let path: PathBuf = input
        .map(Path::to_path_buf)
        .or_else(|| cfg.sparsity.matrix.clone())
        .ok_or_else(|| CliError::Config("no matrix CSV given".into()))?;
    let op = match cfg.sparsity.time {
        Some(time) => cfg.operator.at_time(time),
        None => cfg.operator.clone(),
    };
    op.validate(t.grid_size())?;
    let file = File::open(&path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut m = SparseOperatorMatrix::read_csv(file, &t, op, cfg.threshold)?;
    m.basis = cfg.basis;
    let report = decay_report(&t, &m)?;
    write_json(&cfg.out, "decay_report.json", &report)?;

    let mut w = create(&cfg.out, "decay.csv")?;
    writeln!(w, "col_j,col_l,col_k1,col_k2,col_nu,rank,magnitude")?;
    for c in &report.columns {
        for (rank, v) in c.sorted.iter().enumerate() {
            let i = c.index;
            writeln!(w, "{},{},{},{},{},{},{:e}", i.j, i.l, i.k1, i.k2, c.nu, rank + 1, v)?;
        }
    }
    w.flush()?;
    let mut w = create(&cfg.out, "concentration.csv")?;
    writeln!(w, "col_j,col_l,col_k1,col_k2,col_nu,radius,fraction")?;
    for c in &report.columns {
        for (r, f) in report.w_grid.iter().zip(&c.concentration) {
            let i = c.index;
            writeln!(w, "{},{},{},{},{},{r},{f:e}", i.j, i.l, i.k1, i.k2, c.nu)?;
        }
    }
    w.flush()?;

    let support = m.columns.iter().map(|c| c.entries.len()).min().unwrap_or(0);
    let mut w = create(&cfg.out, "truncation.csv")?;
    writeln!(w, "budget,mode,norm,tolerance")?;
    for &b in cfg.sparsity.budgets.iter().filter(|&&b| b >= 1 && b <= support) {
        let e = truncation_error(&t, &m, b, cfg.sparsity.mode, cfg.seed)?;
        let mode = serde_json::to_value(e.mode).map_err(|e| CliError::Runtime(e.to_string()))?;
        writeln!(w, "{b},{},{:e},{:e}", mode.as_str().unwrap_or_default(), e.norm, e.tolerance)?;
    }
    w.flush()?;

    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    println!(
        "{} columns: median fitted M {}, max 95% radius {}, max l^(1/2) {:.3e}",
        report.columns.len(),
        fmt(report.median_m),
        fmt(report.max_w95),
        report.max_lp_half
    );
    Ok(())
}

pub fn flow(cfg: &ExperimentConfig) -> Result<()> {
    let f = &cfg.flow;
    f.model.validate()?;
    let start = FlowState::new(f.x, f.xi)?;
    let states = trajectory(&start, &f.model, f.branch, f.t, f.dt)?;
    let mut w = create(&cfg.out, "flow.csv")?;
    writeln!(w, "t,x1,x2,xi1,xi2,theta")?;
    for s in &states {
        writeln!(w, "{},{:e},{:e},{:e},{:e},{:e}", s.t, s.x[0], s.x[1], s.xi[0], s.xi[1], s.theta())?;
    }
    w.flush()?;
    let end = states.last().expect("trajectory includes the start");
    println!(
        "{} states, end x = ({:.6}, {:.6}), xi = ({:.6}, {:.6})",
        states.len(),
        end.x[0],
        end.x[1],
        end.xi[0],
        end.xi[1]
    );
    Ok(())
}
