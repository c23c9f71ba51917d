//! Uniform box grids on `[-1,1]^(n+1)`, even-symmetric scalar fields,
//! multilinear interpolation and the portable SGNF1 field format.
//!
//! The ambient dimension is `n+1` with `n+1` in `{2, 3}`; the last coordinate
//! is the "thin" direction and the last-axis node count is required to be odd
//! so the plane `{x_{n+1} = 0}` is a grid plane. Node ordering is row-major
//! with the last axis fastest, which fixes the byte layout of field files.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Geometry of a uniform tensor grid on the box `[-1,1]^dim`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    counts: [usize; 3],
}

impl GridSpec {
    /// Per-axis node counts. The last axis count must be odd so the thin
    /// plane contains grid nodes; all counts must be at least 5.
    pub fn new(dim: usize, counts: &[usize]) -> Result<Self> {
        if dim < 2 || dim > 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if counts.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "expected {dim} axis counts, got {}",
                counts.len()
            )));
        }
        for &c in counts {
            if c < 5 {
                return Err(Error::InvalidGrid(format!("axis count {c} < 5")));
            }
        }
        if counts[dim - 1] % 2 == 0 {
            return Err(Error::InvalidGrid(format!(
                "last-axis count {} must be odd",
                counts[dim - 1]
            )));
        }
        let mut arr = [1usize; 3];
        arr[..dim].copy_from_slice(counts);
        Ok(GridSpec { dim, counts: arr })
    }

    /// Cubic grid with the same odd count on every axis.
    pub fn square(dim: usize, count: usize) -> Result<Self> {
        if dim < 2 || dim > 3 {
            return Err(Error::UnsupportedDimension(dim));
        }
        let c = [count; 3];
        Self::new(dim, &c[..dim])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn count(&self, axis: usize) -> usize {
        self.counts[axis]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    /// Grid spacing along `axis`: `2 / (count - 1)`.
    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 / (self.counts[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    /// Node coordinate; evaluates to exactly -1, 0, +1 at the endpoints and
    /// (for odd counts) the midpoint.
    #[inline]
    pub fn node_coord(&self, axis: usize, i: usize) -> f64 {
        (2 * i) as f64 / (self.counts[axis] - 1) as f64 - 1.0
    }

    /// Cell-center coordinate along `axis` for cell `i` (there are
    /// `count - 1` cells per axis).
    #[inline]
    pub fn cell_center(&self, axis: usize, i: usize) -> f64 {
        (2 * i + 1) as f64 / (self.counts[axis] - 1) as f64 - 1.0
    }

    pub fn num_nodes(&self) -> usize {
        self.counts[..self.dim].iter().product()
    }

    pub fn num_cells(&self) -> usize {
        self.counts[..self.dim].iter().map(|c| c - 1).product()
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Linear node index, row-major with the last axis fastest.
    #[inline]
    pub fn node_index(&self, multi: &[usize; 3]) -> usize {
        let mut idx = 0;
        for a in 0..self.dim {
            idx = idx * self.counts[a] + multi[a];
        }
        idx
    }

    #[inline]
    pub fn node_multi(&self, mut idx: usize) -> [usize; 3] {
        let mut m = [0usize; 3];
        for a in (0..self.dim).rev() {
            m[a] = idx % self.counts[a];
            idx /= self.counts[a];
        }
        m
    }

    pub fn node_point(&self, idx: usize) -> [f64; 3] {
        let m = self.node_multi(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.node_coord(a, m[a]);
        }
        p
    }

    /// Axis index of the thin direction (the last axis).
    #[inline]
    pub fn plane_axis(&self) -> usize {
        self.dim - 1
    }

    /// Node index along the last axis of the thin plane `{x_last = 0}`.
    #[inline]
    pub fn plane_node(&self) -> usize {
        (self.counts[self.dim - 1] - 1) / 2
    }

    /// Index of the mirror node across the thin plane.
    #[inline]
    pub fn mirror_last(&self, i: usize) -> usize {
        self.counts[self.dim - 1] - 1 - i
    }

    /// Locate `x` along `axis`: returns the cell index (clamped to the grid)
    /// and the local coordinate in `[0,1]`.
    #[inline]
    fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        let ncell = self.counts[axis] - 2; // max cell index
        let s = (x + 1.0) / self.spacing(axis);
        let mut k = s.floor() as isize;
        if k < 0 {
            k = 0;
        }
        if k as usize > ncell {
            k = ncell as isize;
        }
        (k as usize, s - k as f64)
    }
}

/// A scalar field sampled at the nodes of a [`GridSpec`].
///
/// `even` records that the field is (intended to be) symmetric in the last
/// coordinate; it is metadata set by the constructor and is not re-validated
/// on IO. Fields are immutable after construction, so concurrent reads are
/// safe.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
    even: bool,
}

impl ScalarField {
    /// Sample `f` at every grid node. Rejects non-finite samples with the
    /// offending node index. `even` declares symmetry in the last coordinate.
    pub fn sample(grid: GridSpec, f: impl Fn(&[f64; 3]) -> f64, even: bool) -> Result<Self> {
        let n = grid.num_nodes();
        let mut values = Vec::with_capacity(n);
        for idx in 0..n {
            let p = grid.node_point(idx);
            let v = f(&p);
            if !v.is_finite() {
                return Err(Error::NonFiniteSample {
                    index: idx,
                    coords: p,
                    value: v,
                });
            }
            values.push(v);
        }
        Ok(ScalarField { grid, values, even })
    }

    pub fn from_values(grid: GridSpec, values: Vec<f64>, even: bool) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match grid ({} nodes)",
                values.len(),
                grid.num_nodes()
            )));
        }
        Ok(ScalarField { grid, values, even })
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn even(&self) -> bool {
        self.even
    }

    #[inline]
    pub fn value_at(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Maximum over nodes of `|u(x', t) - u(x', -t)|`.
    pub fn check_even_symmetry(&self) -> f64 {
        let g = &self.grid;
        let last = g.plane_axis();
        let mut worst = 0.0f64;
        for idx in 0..self.values.len() {
            let mut m = g.node_multi(idx);
            let j = m[last];
            let jm = g.mirror_last(j);
            if jm <= j {
                continue;
            }
            m[last] = jm;
            let other = g.node_index(&m);
            worst = worst.max((self.values[idx] - self.values[other]).abs());
        }
        worst
    }

    /// Force exact (bit-identical) even symmetry by averaging mirror pairs
    /// and assigning both, and set the even flag.
    pub fn symmetrize(&mut self) {
        let g = self.grid.clone();
        let last = g.plane_axis();
        for idx in 0..self.values.len() {
            let mut m = g.node_multi(idx);
            let j = m[last];
            let jm = g.mirror_last(j);
            if jm <= j {
                continue;
            }
            m[last] = jm;
            let other = g.node_index(&m);
            let avg = 0.5 * (self.values[idx] + self.values[other]);
            self.values[idx] = avg;
            self.values[other] = avg;
        }
        self.even = true;
    }

    fn check_inside(&self, p: &[f64; 3]) -> Result<()> {
        for a in 0..self.grid.dim() {
            if p[a] < -1.0 - 1e-9 || p[a] > 1.0 + 1e-9 {
                return Err(Error::OutOfDomain(*p));
            }
        }
        Ok(())
    }

    /// Multilinear interpolation of the nodal values at `p`.
    pub fn interp(&self, p: &[f64; 3]) -> Result<f64> {
        Ok(self.interp_value_grad(p)?.0)
    }

    /// Multilinear interpolation together with the gradient of the
    /// interpolant in the cell containing `p` (exact for multilinear data,
    /// one-sided in boundary cells).
    pub fn interp_value_grad(&self, p: &[f64; 3]) -> Result<(f64, [f64; 3])> {
        self.check_inside(p)?;
        let g = &self.grid;
        match g.dim() {
            2 => {
                let (i, s) = g.locate(0, p[0]);
                let (j, t) = g.locate(1, p[1]);
                let c1 = g.count(1);
                let base = i * c1 + j;
                let v00 = self.values[base];
                let v01 = self.values[base + 1];
                let v10 = self.values[base + c1];
                let v11 = self.values[base + c1 + 1];
                let value = v00 * (1.0 - s) * (1.0 - t)
                    + v01 * (1.0 - s) * t
                    + v10 * s * (1.0 - t)
                    + v11 * s * t;
                let g0 = ((v10 - v00) * (1.0 - t) + (v11 - v01) * t) / g.spacing(0);
                let g1 = ((v01 - v00) * (1.0 - s) + (v11 - v10) * s) / g.spacing(1);
                Ok((value, [g0, g1, 0.0]))
            }
            3 => {
                let (i, s) = g.locate(0, p[0]);
                let (j, t) = g.locate(1, p[1]);
                let (k, u) = g.locate(2, p[2]);
                let c1 = g.count(1);
                let c2 = g.count(2);
                let base = (i * c1 + j) * c2 + k;
                let v = |di: usize, dj: usize, dk: usize| {
                    self.values[base + (di * c1 + dj) * c2 + dk]
                };
                let w = |a: f64, x: f64| if a == 0.0 { 1.0 - x } else { x };
                let mut value = 0.0;
                let mut grad = [0.0f64; 3];
                for di in 0..2usize {
                    for dj in 0..2usize {
                        for dk in 0..2usize {
                            let vv = v(di, dj, dk);
                            let ws = w(di as f64, s);
                            let wt = w(dj as f64, t);
                            let wu = w(dk as f64, u);
                            value += vv * ws * wt * wu;
                            let ds = if di == 0 { -1.0 } else { 1.0 };
                            let dt = if dj == 0 { -1.0 } else { 1.0 };
                            let du = if dk == 0 { -1.0 } else { 1.0 };
                            grad[0] += vv * ds * wt * wu;
                            grad[1] += vv * ws * dt * wu;
                            grad[2] += vv * ws * wt * du;
                        }
                    }
                }
                grad[0] /= g.spacing(0);
                grad[1] /= g.spacing(1);
                grad[2] /= g.spacing(2);
                Ok((value, grad))
            }
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    /// Nodal central-difference gradient along `axis` (second-order
    /// one-sided stencils on the box faces), returned as a field on the same
    /// grid. Interpolating the recovered components gives second-order
    /// gradients at arbitrary points; the plain multilinear gradient is
    /// second-order only at cell centers.
    pub fn recovered_gradient(&self, axis: usize) -> ScalarField {
        let g = &self.grid;
        let h = g.spacing(axis);
        let count = g.count(axis);
        let n = g.num_nodes();
        let mut vals = Vec::with_capacity(n);
        for idx in 0..n {
            let m = g.node_multi(idx);
            let i = m[axis];
            let at = |j: usize| {
                let mut mm = m;
                mm[axis] = j;
                self.values[g.node_index(&mm)]
            };
            let d = if i == 0 {
                (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h)
            } else if i == count - 1 {
                (3.0 * at(count - 1) - 4.0 * at(count - 2) + at(count - 3)) / (2.0 * h)
            } else {
                (at(i + 1) - at(i - 1)) / (2.0 * h)
            };
            vals.push(d);
        }
        ScalarField {
            grid: g.clone(),
            values: vals,
            even: false,
        }
    }

    /// Write the field in the SGNF1 format: an ASCII header followed by the
    /// raw little-endian doubles, row-major with the last axis fastest.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let g = &self.grid;
        writeln!(w, "SGNF1")?;
        writeln!(w, "dim {}", g.dim())?;
        let shape: Vec<String> = g.counts().iter().map(|c| c.to_string()).collect();
        writeln!(w, "shape {}", shape.join(" "))?;
        writeln!(w, "spacing {}", g.spacing(g.plane_axis()))?;
        writeln!(w, "even {}", if self.even { 1 } else { 0 })?;
        writeln!(w, "data f64le")?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        Self::read_from(&mut r)
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        // read byte-by-byte until the 6 header lines are consumed
        let mut lines = Vec::new();
        let mut line = String::new();
        while lines.len() < 6 {
            let mut byte = [0u8; 1];
            let n = r.read(&mut byte)?;
            if n == 0 {
                return Err(Error::FieldFormat("truncated header".into()));
            }
            if byte[0] == b'\n' {
                lines.push(std::mem::take(&mut line));
            } else {
                line.push(byte[0] as char);
            }
        }
        if lines[0] != "SGNF1" {
            return Err(Error::FieldFormat(format!(
                "magic/version mismatch: got {:?}",
                lines[0]
            )));
        }
        let dim: usize = lines[1]
            .strip_prefix("dim ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::FieldFormat("bad dim line".into()))?;
        let shape: Vec<usize> = lines[2]
            .strip_prefix("shape ")
            .map(|s| s.split_whitespace().filter_map(|t| t.parse().ok()).collect())
            .ok_or_else(|| Error::FieldFormat("bad shape line".into()))?;
        if shape.len() != dim {
            return Err(Error::FieldFormat(format!(
                "shape has {} entries for dim {dim}",
                shape.len()
            )));
        }
        let spacing: f64 = lines[3]
            .strip_prefix("spacing ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::FieldFormat("bad spacing line".into()))?;
        let even = match lines[4].as_str() {
            "even 0" => false,
            "even 1" => true,
            other => {
                return Err(Error::FieldFormat(format!("bad even line {other:?}")));
            }
        };
        if lines[5] != "data f64le" {
            return Err(Error::FieldFormat(format!("bad data line {:?}", lines[5])));
        }
        let grid = GridSpec::new(dim, &shape).map_err(|e| Error::FieldFormat(e.to_string()))?;
        let expect = grid.spacing(grid.plane_axis());
        if (spacing - expect).abs() > 1e-9 * expect {
            return Err(Error::FieldFormat(format!(
                "spacing {spacing} inconsistent with shape (expected {expect})"
            )));
        }
        let n = grid.num_nodes();
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * n {
            return Err(Error::FieldFormat(format!(
                "payload length {} does not match shape ({} doubles expected)",
                bytes.len(),
                n
            )));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(ScalarField { grid, values, even })
    }
}

/// The recovered gradient of a field: nodal central-difference components
/// interpolated multilinearly (second-order accurate at arbitrary points).
#[derive(Clone, Debug)]
pub struct GradientField {
    components: Vec<ScalarField>,
}

impl GradientField {
    pub fn build(u: &ScalarField) -> Self {
        let dim = u.grid().dim();
        GradientField {
            components: (0..dim).map(|a| u.recovered_gradient(a)).collect(),
        }
    }

    pub fn interp(&self, p: &[f64; 3]) -> Result<[f64; 3]> {
        let mut g = [0.0f64; 3];
        for (a, comp) in self.components.iter().enumerate() {
            g[a] = comp.interp(p)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_endpoints_are_exact() {
        let g = GridSpec::square(2, 7).unwrap();
        assert_eq!(g.node_coord(0, 0), -1.0);
        assert_eq!(g.node_coord(0, 6), 1.0);
        assert_eq!(g.node_coord(0, 3), 0.0);
        let g = GridSpec::new(2, &[9, 5]).unwrap();
        assert_eq!(g.node_coord(1, 4), 1.0);
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::square(2, 4).is_err()); // < 5
        assert!(GridSpec::new(2, &[9, 8]).is_err()); // last even
        assert!(GridSpec::new(2, &[8, 9]).is_ok()); // in-plane may be even
        assert!(GridSpec::square(4, 9).is_err());
    }

    #[test]
    fn constant_field_samples_and_interpolates() {
        let g = GridSpec::square(2, 5).unwrap();
        let f = ScalarField::sample(g, |_| 1.0, true).unwrap();
        assert!(f.values().iter().all(|&v| v == 1.0));
        let (v, gr) = f.interp_value_grad(&[0.13, -0.41, 0.0]).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(gr, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn linear_field_reproduced() {
        let g = GridSpec::square(2, 5).unwrap();
        let f = ScalarField::sample(g.clone(), |p| p[0], false).unwrap();
        // node column values are exactly the five grid abscissae
        let col: Vec<f64> = (0..5).map(|i| f.value_at(g.node_index(&[i, 2, 0]))).collect();
        assert_eq!(col, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let (_, gr) = f.interp_value_grad(&[0.3, 0.7, 0.0]).unwrap();
        assert!((gr[0] - 1.0).abs() < 1e-14);
        assert!(gr[1].abs() < 1e-14);
    }

    #[test]
    fn quadratic_value_and_gradient() {
        // u = x1^2 - x2^2 at (0.3, 0.4): value -0.07, gradient (0.6, -0.8)
        let g = GridSpec::square(2, 129).unwrap();
        let h = g.spacing(0);
        let f = ScalarField::sample(g, |p| p[0] * p[0] - p[1] * p[1], true).unwrap();
        let (v, gr) = f.interp_value_grad(&[0.3, 0.4, 0.0]).unwrap();
        assert!((v - (-0.07)).abs() < h * h);
        assert!((gr[0] - 0.6).abs() < 2.0 * h);
        assert!((gr[1] + 0.8).abs() < 2.0 * h);
    }

    #[test]
    fn gradient_error_halves_with_h() {
        let err_at = |count: usize| {
            let g = GridSpec::square(2, count).unwrap();
            let f = ScalarField::sample(g, |p| p[0] * p[0] + 0.5 * p[1] * p[1], true).unwrap();
            let mut worst = 0.0f64;
            for &x in &[-0.71, -0.2, 0.05, 0.33, 0.68] {
                for &y in &[-0.55, 0.11, 0.62] {
                    let (_, gr) = f.interp_value_grad(&[x, y, 0.0]).unwrap();
                    worst = worst.max((gr[0] - 2.0 * x).abs()).max((gr[1] - y).abs());
                }
            }
            worst
        };
        let e1 = err_at(33);
        let e2 = err_at(65);
        assert!(e1 / e2 >= 1.8, "gradient error ratio {} too small", e1 / e2);
    }

    #[test]
    fn odd_function_symmetry_defect() {
        let g = GridSpec::square(2, 9).unwrap();
        let f = ScalarField::sample(g, |p| p[1], false).unwrap();
        assert!((f.check_even_symmetry() - 2.0).abs() < 1e-15);
        let mut f = f;
        f.symmetrize();
        assert_eq!(f.check_even_symmetry(), 0.0);
        assert!(f.even());
    }

    #[test]
    fn sample_rejects_non_finite() {
        let g = GridSpec::square(2, 5).unwrap();
        let r = ScalarField::sample(g, |p| 1.0 / (p[0] - 0.5), false);
        match r {
            Err(Error::NonFiniteSample { index, .. }) => {
                assert!(index > 0);
            }
            other => panic!("expected NonFiniteSample, got {other:?}"),
        }
    }

    #[test]
    fn out_of_domain_rejected() {
        let g = GridSpec::square(2, 5).unwrap();
        let f = ScalarField::sample(g, |_| 0.0, true).unwrap();
        assert!(matches!(
            f.interp_value_grad(&[1.2, 0.0, 0.0]),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn io_roundtrip_bit_identical() {
        let g = GridSpec::new(3, &[5, 6, 7]).unwrap();
        let f = ScalarField::sample(g, |p| (p[0] * 3.1).sin() + p[1] - p[2] * p[2], false).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let back = ScalarField::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back.grid(), f.grid());
        assert_eq!(back.even(), f.even());
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn io_truncated_payload_rejected() {
        let g = GridSpec::square(2, 5).unwrap();
        let f = ScalarField::sample(g, |p| p[0], false).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 8);
        match ScalarField::read_from(&mut buf.as_slice()) {
            Err(Error::FieldFormat(msg)) => assert!(msg.contains("payload length")),
            other => panic!("expected payload error, got {other:?}"),
        }
    }

    #[test]
    fn io_bad_magic_rejected() {
        let buf = b"SGNF2\ndim 2\nshape 5 5\nspacing 0.5\neven 0\ndata f64le\n".to_vec();
        match ScalarField::read_from(&mut buf.as_slice()) {
            Err(Error::FieldFormat(msg)) => assert!(msg.contains("magic")),
            other => panic!("expected magic error, got {other:?}"),
        }
    }

    #[test]
    fn even_flag_with_asymmetric_payload_is_accepted() {
        // the flag is metadata; IO does not validate symmetry
        let g = GridSpec::square(2, 5).unwrap();
        let f = ScalarField::sample(g, |p| p[1], true).unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let back = ScalarField::read_from(&mut buf.as_slice()).unwrap();
        assert!(back.even());
        assert!(back.check_even_symmetry() > 1.0);
    }

    proptest! {
        #[test]
        fn interp_reproduces_affine(a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
                                    x in -0.999f64..0.999, y in -0.999f64..0.999) {
            let g = GridSpec::square(2, 9).unwrap();
            let f = ScalarField::sample(g, |p| a * p[0] + b * p[1] + c, false).unwrap();
            let (v, gr) = f.interp_value_grad(&[x, y, 0.0]).unwrap();
            let scale = a.abs() + b.abs() + c.abs() + 1.0;
            prop_assert!((v - (a * x + b * y + c)).abs() < 1e-12 * scale);
            prop_assert!((gr[0] - a).abs() < 1e-11 * scale);
            prop_assert!((gr[1] - b).abs() < 1e-11 * scale);
        }

        #[test]
        fn io_roundtrip_random_fields(vals in proptest::collection::vec(-1e6f64..1e6, 25)) {
            let g = GridSpec::square(2, 5).unwrap();
            let f = ScalarField::from_values(g, vals, false).unwrap();
            let mut buf = Vec::new();
            f.write_to(&mut buf).unwrap();
            let back = ScalarField::read_from(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(back.values(), f.values());
        }
    }
}
