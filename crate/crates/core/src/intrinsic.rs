//! Intrinsic frequency: the affine frame that normalizes the coefficient
//! matrix at a base point, the intrinsic `H`/`D` integrals evaluated in
//! original coordinates, the intrinsic frequency `N`, the corrected gaps
//! `Xi` and the monotone surrogate `J = e^{C t^alpha} N`, the two-frame
//! comparison experiment, and the almost-homogeneity / blow-up diagnostics
//! against the exact homogeneous library.

use std::io::Write;

use crate::coefficients::MatrixField;
use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField};
use crate::frequency::{
    check_support, for_cells_in_box, frequency_integrals, CutoffProfile,
};
use crate::geometry::HomogeneousSolution;
use crate::matrix::{self, sym_sqrt, SmallMat};

/// Affine frame `Phi(x) = x0 + A^{1/2}(x0) (x - x0)` at a base point.
#[derive(Clone, Debug)]
pub struct IntrinsicFrame {
    pub x0: [f64; 3],
    pub a0: SmallMat,
    pub sqrt_a0: SmallMat,
    pub inv_sqrt_a0: SmallMat,
    pub det_sqrt: f64,
    dim: usize,
    identity: bool,
}

impl IntrinsicFrame {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether `A(x0) = Id` (then every intrinsic quantity coincides with the
    /// standard one and shares its code path).
    pub fn is_identity(&self) -> bool {
        self.identity
    }

    #[inline]
    pub fn forward(&self, x: &[f64; 3]) -> [f64; 3] {
        let d = matrix::sub(x, &self.x0);
        matrix::add(&self.x0, &self.sqrt_a0.mul_vec(&d))
    }

    #[inline]
    pub fn inverse(&self, y: &[f64; 3]) -> [f64; 3] {
        let d = matrix::sub(y, &self.x0);
        matrix::add(&self.x0, &self.inv_sqrt_a0.mul_vec(&d))
    }

    /// Conjugated coefficient `C(x) = A^{-1/2}(x0) A(Phi(x)) A^{-1/2}(x0)`;
    /// equals the identity at `x = x0`.
    pub fn conjugated(&self, mf: &MatrixField, x: &[f64; 3]) -> SmallMat {
        let y = self.forward(x);
        self.inv_sqrt_a0.mat_mul(&mf.at(&y)).mat_mul(&self.inv_sqrt_a0)
    }

    /// Operator norm of `A^{1/2}(x0)` (the frame's maximal stretch).
    pub fn stretch(&self) -> f64 {
        self.sqrt_a0.spectral_norm_sym()
    }
}

/// Build the frame at `x0`, verifying that the conjugated coefficient is the
/// identity there and (under H3) that the frame preserves the thin plane.
pub fn make_frame(mf: &MatrixField, x0: &[f64; 3]) -> Result<IntrinsicFrame> {
    let dim = mf.dim();
    let a0 = mf.at(x0);
    let dec = sym_sqrt(&a0)?;
    let frame = IntrinsicFrame {
        x0: *x0,
        a0,
        sqrt_a0: dec.sqrt,
        inv_sqrt_a0: dec.inv_sqrt,
        det_sqrt: dec.det_sqrt,
        dim,
        identity: a0.is_identity(1e-14),
    };
    let conj = frame.conjugated(mf, x0);
    if !conj.is_identity(1e-12) {
        return Err(Error::Precondition(format!(
            "conjugated coefficient at the base point deviates from Id by {:.3e}",
            conj.sub(&SmallMat::identity(dim)).max_abs()
        )));
    }
    Ok(frame)
}

/// Intrinsic `H` and `D` at `(x, s)` by quadrature in original coordinates
/// (no resampling):
///
/// * `D = int phi(|Phi^{-1}(y) - x|/s) <A(x0) grad u(y), grad u(y)> / det A^{1/2}(x0)`
/// * `H = -int phi'(|Phi^{-1}(y) - x|/s) u^2(y) / (|Phi^{-1}(y) - x| det A^{1/2}(x0))`
///
/// With `A(x0) = Id` this routes through the standard integrals bit for bit.
pub fn intrinsic_integrals(
    u: &ScalarField,
    frame: &IntrinsicFrame,
    x: &[f64; 3],
    s: f64,
    cutoff: &CutoffProfile,
) -> Result<(f64, f64)> {
    if frame.is_identity() {
        let fi = frequency_integrals(u, x, s, cutoff)?;
        return Ok((fi.h, fi.d));
    }
    let grid = u.grid();
    let dim = frame.dim;
    let center = frame.forward(x);
    let reach = frame.stretch() * s;
    check_support(grid, &center, reach)?;
    let floor = 4.0 * grid.max_spacing();
    if reach < floor {
        return Err(Error::RadiusBelowResolution {
            radius: reach,
            floor,
        });
    }
    let vol = grid.cell_volume();
    let det = frame.det_sqrt;
    let mut h = 0.0;
    let mut d = 0.0;
    for_cells_in_box(grid, &center, reach, |c| {
        let z = frame.inv_sqrt_a0.mul_vec(&matrix::sub(c, &center));
        let rho = matrix::norm(&z, dim);
        let t = rho / s;
        if t >= 1.0 {
            return;
        }
        let phi = cutoff.phi(t);
        let dphi = cutoff.dphi(t);
        if phi == 0.0 && dphi == 0.0 {
            return;
        }
        let (v, grad) = u
            .interp_value_grad(c)
            .expect("cell center inside the domain");
        if phi != 0.0 {
            d += phi * frame.a0.quad_form(&grad) / det * vol;
        }
        if dphi != 0.0 {
            h += -dphi * v * v / (rho * det) * vol;
        }
    });
    Ok((h, d))
}

const H_DEGENERATE: f64 = 1e-250;

/// Intrinsic frequency `N(x0, r) = r D_int / H_int` at the frame's base
/// point.
pub fn intrinsic_frequency(
    u: &ScalarField,
    frame: &IntrinsicFrame,
    r: f64,
    cutoff: &CutoffProfile,
) -> Result<f64> {
    let (h, d) = intrinsic_integrals(u, frame, &frame.x0.clone(), r, cutoff)?;
    if !(h > H_DEGENERATE) {
        return Err(Error::DegeneratePoint(h));
    }
    Ok(r * d / h)
}

/// One row of an intrinsic sweep.
#[derive(Clone, Copy, Debug)]
pub struct IntrinsicRow {
    pub r: f64,
    pub h_int: f64,
    pub d_int: f64,
    pub n: f64,
    /// Monotone surrogate `J = e^{C r^alpha} N`.
    pub j: f64,
    /// Corrected gap `Xi` against the half radius, when `r/2` is in the
    /// sweep.
    pub xi_vs_half: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct IntrinsicSweep {
    pub x0: [f64; 3],
    pub alpha: f64,
    pub c: f64,
    pub rows: Vec<IntrinsicRow>,
}

/// Assemble the intrinsic sweep; `c` is the additive quasi-monotonicity
/// constant used in `J` and `Xi` (typically the audit-fitted one).
pub fn intrinsic_sweep(
    u: &ScalarField,
    mf: &MatrixField,
    x0: &[f64; 3],
    radii: &[f64],
    cutoff: &CutoffProfile,
    c: f64,
) -> Result<IntrinsicSweep> {
    let frame = make_frame(mf, x0)?;
    let alpha = mf.alpha();
    let mut rows: Vec<IntrinsicRow> = Vec::with_capacity(radii.len());
    for &r in radii {
        let (h, d) = intrinsic_integrals(u, &frame, x0, r, cutoff)?;
        if !(h > H_DEGENERATE) {
            return Err(Error::DegeneratePoint(h));
        }
        let n = r * d / h;
        rows.push(IntrinsicRow {
            r,
            h_int: h,
            d_int: d,
            n,
            j: (c * r.powf(alpha)).exp() * n,
            xi_vs_half: None,
        });
    }
    for i in 0..rows.len() {
        let half = rows[i].r / 2.0;
        if let Some(j) = rows
            .iter()
            .position(|row| (row.r - half).abs() <= 1e-9 * half)
        {
            let xi = rows[i].n + c * rows[i].r.powf(alpha) - (rows[j].n + c * half.powf(alpha));
            rows[i].xi_vs_half = Some(xi);
        }
    }
    Ok(IntrinsicSweep {
        x0: *x0,
        alpha,
        c,
        rows,
    })
}

impl IntrinsicSweep {
    /// Corrected gap `Xi_rho^r` between two sweep radii.
    pub fn xi(&self, rho: f64, r: f64) -> Result<f64> {
        let find = |target: f64| {
            self.rows
                .iter()
                .find(|row| (row.r - target).abs() <= 1e-9 * target)
                .ok_or_else(|| Error::InvalidSweep(format!("radius {target} not in sweep")))
        };
        let row_r = find(r)?;
        let row_rho = find(rho)?;
        Ok(row_r.n + self.c * r.powf(self.alpha) - (row_rho.n + self.c * rho.powf(self.alpha)))
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "r,Hint,Dint,N,J,Xi_vs_half")?;
        for row in &self.rows {
            let xi = match row.xi_vs_half {
                Some(x) => format!("{x:.16e}"),
                None => "nan".to_string(),
            };
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                row.r, row.h_int, row.d_int, row.n, row.j, xi
            )?;
        }
        Ok(())
    }
}

/// Two-frame comparison at nearby points: the frequency in the frame of `x0`
/// recentered at `Phi^{-1}(x1)` against the intrinsic frequency at `x1`,
/// both at radius `r`. Returns the absolute difference and the difference
/// normalized by `N(x1, r) |x0 - x1|^{alpha/2}`.
#[derive(Clone, Copy, Debug)]
pub struct FrameComparison {
    pub off_base: f64,
    pub intrinsic: f64,
    pub diff: f64,
    pub normalized: f64,
}

pub fn compare_frequencies(
    u: &ScalarField,
    mf: &MatrixField,
    x0: &[f64; 3],
    x1: &[f64; 3],
    r: f64,
    cutoff: &CutoffProfile,
) -> Result<FrameComparison> {
    let dim = mf.dim();
    let sep = matrix::norm(&matrix::sub(x1, x0), dim);
    if sep >= r / 4.0 {
        return Err(Error::Precondition(format!(
            "separation {sep} must be below r/4 = {}",
            r / 4.0
        )));
    }
    let frame0 = make_frame(mf, x0)?;
    let frame1 = make_frame(mf, x1)?;
    let center0 = frame0.inverse(x1);
    let (h0, d0) = intrinsic_integrals(u, &frame0, &center0, r, cutoff)?;
    let (h1, d1) = intrinsic_integrals(u, &frame1, x1, r, cutoff)?;
    if !(h0 > H_DEGENERATE) || !(h1 > H_DEGENERATE) {
        return Err(Error::DegeneratePoint(h0.min(h1)));
    }
    let off_base = r * d0 / h0;
    let intrinsic = r * d1 / h1;
    let diff = (off_base - intrinsic).abs();
    let denom = intrinsic * sep.powf(mf.alpha() / 2.0);
    Ok(FrameComparison {
        off_base,
        intrinsic,
        diff,
        normalized: if denom > 0.0 { diff / denom } else { f64::NAN },
    })
}

/// Decay experiment for the two-frame comparison: the difference at dyadic
/// separations along `direction`, with the fitted log-log exponent.
#[derive(Clone, Debug)]
pub struct ComparisonDecay {
    pub rows: Vec<(f64, f64, f64)>, // (separation, diff, normalized)
    pub fitted_exponent: f64,
}

pub fn comparison_decay(
    u: &ScalarField,
    mf: &MatrixField,
    x0: &[f64; 3],
    direction: &[f64; 3],
    separations: &[f64],
    r: f64,
    cutoff: &CutoffProfile,
) -> Result<ComparisonDecay> {
    let dim = mf.dim();
    let nrm = matrix::norm(direction, dim);
    if nrm == 0.0 {
        return Err(Error::Precondition("zero direction".into()));
    }
    let dir = matrix::scale(direction, 1.0 / nrm);
    let mut rows = Vec::new();
    for &sep in separations {
        let x1 = matrix::add(x0, &matrix::scale(&dir, sep));
        let cmp = compare_frequencies(u, mf, x0, &x1, r, cutoff)?;
        rows.push((sep, cmp.diff, cmp.normalized));
    }
    // least-squares slope of ln diff against ln sep
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(_, d, _)| *d > 0.0)
        .map(|(s, d, _)| (s.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidSweep(
            "comparison differences vanish; no decay to fit".into(),
        ));
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    Ok(ComparisonDecay {
        rows,
        fitted_exponent: slope,
    })
}

/// Almost-homogeneity gap `J(x0, r/2) - J(x0, r/4)`; the caller compares the
/// value against its threshold.
pub fn homogeneity_gap(
    u: &ScalarField,
    mf: &MatrixField,
    x0: &[f64; 3],
    r: f64,
    c: f64,
    cutoff: &CutoffProfile,
) -> Result<f64> {
    let frame = make_frame(mf, x0)?;
    let alpha = mf.alpha();
    let j_at = |t: f64| -> Result<f64> {
        let (h, d) = intrinsic_integrals(u, &frame, x0, t, cutoff)?;
        if !(h > H_DEGENERATE) {
            return Err(Error::DegeneratePoint(h));
        }
        Ok((c * t.powf(alpha)).exp() * (t * d / h))
    };
    Ok(j_at(r / 2.0)? - j_at(r / 4.0)?)
}

/// Result of matching the rescaled intrinsic field against the homogeneous
/// library in the discrete `H^1(B_1)` metric.
#[derive(Clone, Debug)]
pub struct BlowupFit {
    pub distance: f64,
    pub lambda: f64,
    pub family: crate::geometry::Family,
    pub m: u32,
    pub reflected: bool,
    pub scalar: f64,
}

/// Distance of the normalized intrinsic rescaling `(u_{A(x0)})_{x0,r}` to
/// the library: minimum over elements, in-plane reflections and nonnegative
/// scalar multiples of the discrete `H^1(B_1)` norm of the difference.
/// Supports the two-dimensional library only.
pub fn blowup_distance(
    u: &ScalarField,
    mf: &MatrixField,
    x0: &[f64; 3],
    r: f64,
    library: &[HomogeneousSolution],
    cutoff: &CutoffProfile,
) -> Result<BlowupFit> {
    let grid = u.grid();
    let dim = grid.dim();
    if dim != 2 {
        return Err(Error::UnsupportedDimension(dim));
    }
    if library.is_empty() {
        return Err(Error::Precondition("empty homogeneous library".into()));
    }
    let frame = make_frame(mf, x0)?;
    let (h_int, _) = intrinsic_integrals(u, &frame, x0, r, cutoff)?;
    if !(h_int > H_DEGENERATE) {
        return Err(Error::DegeneratePoint(h_int));
    }
    let scale = r.powf((dim - 1) as f64 / 2.0) / h_int.sqrt();
    // sample the rescaled pullback v(y) = scale * u(Phi(x0 + r y)) on a
    // fresh unit grid
    let fresh = GridSpec::new(dim, grid.counts())?;
    let mut vals = Vec::with_capacity(fresh.num_nodes());
    for idx in 0..fresh.num_nodes() {
        let y = fresh.node_point(idx);
        let mut xin = *x0;
        for a in 0..dim {
            xin[a] = x0[a] + r * y[a];
        }
        let mut xorig = frame.forward(&xin);
        for a in 0..dim {
            xorig[a] = xorig[a].clamp(-1.0, 1.0);
        }
        vals.push(scale * u.interp(&xorig)?);
    }
    let v = ScalarField::from_values(fresh.clone(), vals, true)?;

    // discrete H^1(B_1) inner product over cell centers
    let h1 = |a: &ScalarField, b: &ScalarField| -> f64 {
        let vol = fresh.cell_volume();
        let mut acc = 0.0;
        for_cells_in_box(&fresh, &[0.0; 3], 1.0, |c| {
            if matrix::norm(c, dim) >= 1.0 {
                return;
            }
            let (va, ga) = a.interp_value_grad(c).unwrap();
            let (vb, gb) = b.interp_value_grad(c).unwrap();
            acc += (va * vb + matrix::dot(&ga, &gb, dim)) * vol;
        });
        acc
    };
    let vv = h1(&v, &v);

    let mut best: Option<BlowupFit> = None;
    for w in library {
        // normalize the candidate to H(0,1) = 1 with the same quadrature
        let raw = ScalarField::sample(fresh.clone(), |p| w.value(p), true)?;
        let hw = frequency_integrals(&raw, &[0.0; 3], 1.0, cutoff)?.h;
        if !(hw > 0.0) {
            continue;
        }
        let wnorm = 1.0 / hw.sqrt();
        for &reflected in &[false, true] {
            let field = ScalarField::sample(
                fresh.clone(),
                |p| {
                    let q = if reflected { [-p[0], p[1], p[2]] } else { *p };
                    wnorm * w.value(&q)
                },
                true,
            )?;
            let ww = h1(&field, &field);
            if ww <= 0.0 {
                continue;
            }
            let vw = h1(&v, &field);
            let c = (vw / ww).max(0.0);
            let dist2 = (vv - 2.0 * c * vw + c * c * ww).max(0.0);
            let fit = BlowupFit {
                distance: dist2.sqrt(),
                lambda: w.lambda,
                family: w.family,
                m: w.m,
                reflected,
                scalar: c,
            };
            if best.as_ref().map_or(true, |b| fit.distance < b.distance) {
                best = Some(fit);
            }
        }
    }
    best.ok_or_else(|| Error::Precondition("library matching failed".into()))
}
