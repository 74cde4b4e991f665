//! Complex sample grids on the unit torus and their on-disk format.
//!
//! File layout: one line of JSON `{"N":..,"m":..,"dtype":"c128le"}` terminated
//! by `\n`, followed by `m * N * N` little-endian `(re, im)` f64 pairs, row-major,
//! component after component.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{signed_freq, Fft2};

/// `N x N` complex samples of a function on `[0,1)^2`.
///
/// Sample `(i1, i2)` sits at `x = (i1/N, i2/N)` and is stored at `i1 * N + i2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    n: usize,
    data: Vec<Complex64>,
}

impl Field2D {
    pub fn zeros(n: usize) -> Self {
        Field2D {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(Field2D { n, data })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn(n: usize, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let h = 1.0 / n as f64;
        let data = (0..n * n)
            .map(|i| f([(i / n) as f64 * h, (i % n) as f64 * h]))
            .collect();
        Field2D { n, data }
    }

    /// Band-limited field with the given Fourier coefficients (unitary convention).
    pub fn from_spectrum(n: usize, mut spectrum: Vec<Complex64>, fft: &Fft2) -> Self {
        fft.inverse(&mut spectrum);
        Field2D { n, data: spectrum }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn point(&self, i1: usize, i2: usize) -> [f64; 2] {
        [i1 as f64 / self.n as f64, i2 as f64 / self.n as f64]
    }

    /// Discrete L2 norm `sqrt(sum |f|^2)`.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    /// `sum conj(self) * other`.
    pub fn inner(&self, other: &Field2D) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn scale(&mut self, s: Complex64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn axpy(&mut self, a: Complex64, x: &Field2D) {
        for (y, x) in self.data.iter_mut().zip(&x.data) {
            *y += a * x;
        }
    }

    pub fn sub(&self, other: &Field2D) -> Field2D {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Field2D { n: self.n, data }
    }

    /// Unitary spectrum of the field.
    pub fn spectrum(&self, fft: &Fft2) -> Vec<Complex64> {
        let mut s = self.data.clone();
        fft.forward(&mut s);
        s
    }

    /// Applies the Fourier multiplier `m(omega)` where `omega` is the signed integer frequency.
    pub fn apply_multiplier(&self, fft: &Fft2, m: impl Fn([f64; 2]) -> Complex64) -> Field2D {
        let n = self.n;
        let mut s = self.spectrum(fft);
        for (i, v) in s.iter_mut().enumerate() {
            let w = [signed_freq(i / n, n) as f64, signed_freq(i % n, n) as f64];
            *v *= m(w);
        }
        Field2D::from_spectrum(n, s, fft)
    }
}

/// `m` stacked fields, one per component of a vector wavefield.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    components: Vec<Field2D>,
}

impl VectorField {
    pub fn zeros(n: usize, m: usize) -> Self {
        VectorField {
            components: vec![Field2D::zeros(n); m],
        }
    }

    pub fn new(components: Vec<Field2D>) -> Result<Self> {
        let n = components
            .first()
            .map(|c| c.size())
            .ok_or(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            })?;
        if let Some(bad) = components.iter().find(|c| c.size() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: bad.size(),
            });
        }
        Ok(VectorField { components })
    }

    pub fn size(&self) -> usize {
        self.components[0].size()
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, nu: usize) -> &Field2D {
        &self.components[nu]
    }

    pub fn component_mut(&mut self, nu: usize) -> &mut Field2D {
        &mut self.components[nu]
    }

    pub fn components(&self) -> &[Field2D] {
        &self.components
    }

    pub fn into_components(self) -> Vec<Field2D> {
        self.components
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(Field2D::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, other: &VectorField) -> Complex64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.inner(b))
            .sum()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    #[serde(rename = "N")]
    n: usize,
    m: usize,
    dtype: String,
}

const DTYPE: &str = "c128le";

/// Writes a vector field (or a scalar one with `m = 1`) in the binary field format.
pub fn write_fields(mut w: impl Write, fields: &[Field2D]) -> Result<()> {
    let n = fields.first().map(|f| f.size()).unwrap_or(0);
    let header = Header {
        n,
        m: fields.len(),
        dtype: DTYPE.to_string(),
    };
    let line = serde_json::to_string(&header).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(line.as_bytes())?;
    w.write_all(b"\n")?;
    for f in fields {
        if f.size() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: f.size(),
            });
        }
        let mut buf = Vec::with_capacity(16 * n * n);
        for v in f.data() {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reads fields written by [`write_fields`].
pub fn read_fields(r: impl Read) -> Result<Vec<Field2D>> {
    let mut reader = std::io::BufReader::new(r);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: Header = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Format(format!("bad header: {e}")))?;
    if header.dtype != DTYPE {
        return Err(Error::Format(format!("unsupported dtype {}", header.dtype)));
    }
    if header.n == 0 || header.m == 0 {
        return Err(Error::Format("empty field".into()));
    }
    let n = header.n;
    let mut out = Vec::with_capacity(header.m);
    let mut buf = vec![0u8; 16 * n * n];
    for _ in 0..header.m {
        reader
            .read_exact(&mut buf)
            .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
        let data = buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        out.push(Field2D { n, data });
    }
    let mut rest = Vec::new();
    reader.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Format(format!("{} trailing bytes", rest.len())));
    }
    Ok(out)
}

/// Writes `|f|` as an 8-bit binary PGM on a log scale covering `decades` orders of magnitude.
pub fn write_pgm(mut w: impl Write, f: &Field2D, decades: f64) -> Result<()> {
    let n = f.size();
    let max = f.data().iter().map(|v| v.norm()).fold(0.0, f64::max);
    write!(w, "P5\n{n} {n}\n255\n")?;
    let bytes: Vec<u8> = f
        .data()
        .iter()
        .map(|v| {
            if max == 0.0 {
                return 0;
            }
            let rel = (v.norm() / max).max(1e-300).log10();
            let s = ((rel + decades) / decades).clamp(0.0, 1.0);
            (s * 255.0).round() as u8
        })
        .collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Shortest displacement `a - b` on the unit torus.
#[inline]
pub fn torus_delta(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let wrap = |d: f64| d - d.round();
    [wrap(a[0] - b[0]), wrap(a[1] - b[1])]
}

#[inline]
pub fn wrap_unit(x: [f64; 2]) -> [f64; 2] {
    [x[0].rem_euclid(1.0), x[1].rem_euclid(1.0)]
}
