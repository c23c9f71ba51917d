//! The coefficient matrix field `A(x)` with hypothesis validation, symmetric
//! square roots, anisotropy, the radial quadratic form `mu`, and the
//! gradient-dependent density linearization.
//!
//! A coefficient field carries its declared regularity class: ellipticity
//! bounds `lambda <= eig A <= Lambda`, a Sobolev exponent `p > n+1` (possibly
//! infinite) with Morrey exponent `alpha = 1 - (n+1)/p`, and an estimate of
//! the `C^{0,alpha}` seminorm. Three structural hypotheses are *verified*,
//! never enforced:
//!
//! * H1 - regularity (checked through the sampled Holder quotient),
//! * H2 - symmetry and ellipticity at every sampled point,
//! * H3 - `a_{i,n+1}(x', 0) = 0` for `i <= n` on the thin plane.
//!
//! Fields failing H3 are rejected by consumers; no normalizing change of
//! variables is applied.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField};
use crate::matrix::{self, SmallMat};

type Evaluator = Arc<dyn Fn(&[f64; 3]) -> SmallMat + Send + Sync>;

/// A pointwise symmetric coefficient matrix on the box, with declared
/// ellipticity and regularity metadata.
#[derive(Clone)]
pub struct MatrixField {
    dim: usize,
    eval: Evaluator,
    /// Lower ellipticity bound.
    pub lambda: f64,
    /// Upper ellipticity bound.
    pub big_lambda: f64,
    /// Sobolev exponent in `(n+1, inf]`; `f64::INFINITY` means Lipschitz.
    pub p: f64,
    /// Declared `C^{0,alpha}` seminorm estimate.
    pub holder_seminorm: f64,
    /// Preset identifier for reports.
    pub preset: String,
}

impl std::fmt::Debug for MatrixField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MatrixField")
            .field("dim", &self.dim)
            .field("preset", &self.preset)
            .field("lambda", &self.lambda)
            .field("big_lambda", &self.big_lambda)
            .field("p", &self.p)
            .finish()
    }
}

impl MatrixField {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Morrey exponent `alpha = 1 - (n+1)/p` (`alpha = 1` when `p = inf`).
    pub fn alpha(&self) -> f64 {
        1.0 - self.dim as f64 / self.p
    }

    #[inline]
    pub fn at(&self, x: &[f64; 3]) -> SmallMat {
        (self.eval)(x)
    }

    /// Custom evaluator with explicitly declared metadata. Used by presets
    /// and by tests that construct hypothesis violations.
    pub fn custom(
        dim: usize,
        preset: impl Into<String>,
        lambda: f64,
        big_lambda: f64,
        p: f64,
        holder_seminorm: f64,
        eval: impl Fn(&[f64; 3]) -> SmallMat + Send + Sync + 'static,
    ) -> Self {
        MatrixField {
            dim,
            eval: Arc::new(eval),
            lambda,
            big_lambda,
            p,
            holder_seminorm,
            preset: preset.into(),
        }
    }

    /// `A = Id`.
    pub fn identity(dim: usize) -> Self {
        Self::custom(dim, "identity", 1.0, 1.0, f64::INFINITY, 0.0, move |_| {
            SmallMat::identity(dim)
        })
    }

    /// `A = diag(1 + a x_1, 1, ..., 1)`; requires `|a| < 1`.
    pub fn diag_linear(dim: usize, a: f64) -> Self {
        let lam = 1.0 - a.abs();
        Self::custom(
            dim,
            format!("diag_linear(a={a})"),
            lam,
            1.0 + a.abs(),
            f64::INFINITY,
            a.abs(),
            move |x| {
                let mut m = SmallMat::identity(dim);
                m.set(0, 0, 1.0 + a * x[0]);
                m
            },
        )
    }

    /// `A = (1 + a |x_1|) Id`; requires `a > -1`.
    pub fn scalar_abs(dim: usize, a: f64) -> Self {
        let lo = (1.0 + a.min(0.0)).min(1.0);
        let hi = (1.0 + a.max(0.0)).max(1.0);
        Self::custom(
            dim,
            format!("scalar_abs(a={a})"),
            lo,
            hi,
            f64::INFINITY,
            a.abs() * dim as f64, // spectral norm of the jump is a per unit x1
            move |x| SmallMat::identity(dim).scale(1.0 + a * x[0].abs()),
        )
    }

    /// Rotation-modulated Lipschitz field: `A = R^T diag(d) R` where `R`
    /// rotates the `(e_1, e_last)` plane by the angle `a |x_last|`. The angle
    /// vanishes on the thin plane, so H3 holds and the field is even in the
    /// last coordinate; the spectrum is constant.
    pub fn rotating(dim: usize, a: f64, d_first: f64, d_last: f64) -> Self {
        let lo = d_first.min(d_last).min(1.0);
        let hi = d_first.max(d_last).max(1.0);
        let lip = 2.0 * a.abs() * (d_first - d_last).abs();
        Self::custom(
            dim,
            format!("rotating(a={a},d1={d_first},d2={d_last})"),
            lo,
            hi,
            f64::INFINITY,
            lip,
            move |x| {
                let mut d = SmallMat::identity(dim);
                d.set(0, 0, d_first);
                d.set(dim - 1, dim - 1, d_last);
                let r = matrix::plane_rotation(dim, 0, dim - 1, a * x[dim - 1].abs());
                r.transpose().mat_mul(&d).mat_mul(&r)
            },
        )
    }

    /// `A = (1 + c |x|^gamma) Id` with `gamma` in `(0,1)`: the gradient lies
    /// in `L^p` for `p < (n+1)/(1-gamma)` but the field is not Lipschitz.
    /// The declared `p` is three quarters of the critical exponent.
    pub fn holder(dim: usize, c: f64, gamma: f64) -> Self {
        assert!(gamma > 0.0 && gamma < 1.0);
        let p = 0.75 * dim as f64 / (1.0 - gamma);
        let hi = 1.0 + c.max(0.0) * 3.0f64.sqrt().powf(gamma);
        Self::custom(
            dim,
            format!("holder(c={c},gamma={gamma})"),
            (1.0 + c.min(0.0)).min(1.0),
            hi,
            p,
            c.abs() * 2.0,
            move |x| {
                let r = matrix::norm(x, dim);
                SmallMat::identity(dim).scale(1.0 + c * r.powf(gamma))
            },
        )
    }

    /// Constant diagonal coefficients (H3 holds by block structure).
    pub fn constant_diag(dim: usize, d: &[f64]) -> Self {
        let lo = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = d.iter().cloned().fold(0.0, f64::max);
        let dd: Vec<f64> = d.to_vec();
        Self::custom(
            dim,
            format!("constant_diag({d:?})"),
            lo,
            hi,
            f64::INFINITY,
            0.0,
            move |_| SmallMat::diagonal(dim, &dd),
        )
    }

    /// Build a preset by name with a parameter list, for the CLI config.
    pub fn from_preset(dim: usize, name: &str, params: &[f64]) -> Result<Self> {
        let need = |n: usize| -> Result<()> {
            if params.len() != n {
                Err(Error::Precondition(format!(
                    "preset {name} expects {n} parameters, got {}",
                    params.len()
                )))
            } else {
                Ok(())
            }
        };
        match name {
            "identity" => {
                need(0)?;
                Ok(Self::identity(dim))
            }
            "diag_linear" => {
                need(1)?;
                Ok(Self::diag_linear(dim, params[0]))
            }
            "scalar_abs" => {
                need(1)?;
                Ok(Self::scalar_abs(dim, params[0]))
            }
            "rotating" => {
                need(3)?;
                Ok(Self::rotating(dim, params[0], params[1], params[2]))
            }
            "holder" => {
                need(2)?;
                Ok(Self::holder(dim, params[0], params[1]))
            }
            "h3_violating" => {
                need(1)?;
                let off = params[0];
                Ok(Self::custom(
                    dim,
                    format!("h3_violating({off})"),
                    1.0 - off.abs(),
                    1.0 + off.abs(),
                    f64::INFINITY,
                    0.0,
                    move |_| {
                        let mut m = SmallMat::identity(dim);
                        m.set(0, dim - 1, off);
                        m.set(dim - 1, 0, off);
                        m
                    },
                ))
            }
            other => Err(Error::Precondition(format!("unknown preset {other:?}"))),
        }
    }
}

/// Verification record for the structural hypotheses over a grid.
#[derive(Clone, Debug)]
pub struct HypothesisReport {
    pub symmetry_defect: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    /// Max over plane nodes and `i <= n` of `|a_{i,n+1}(x',0)|`.
    pub plane_offdiag_max: f64,
    /// Sampled Holder quotient `sup ||A(x)-A(y)|| / |x-y|^alpha` (spectral norm).
    pub holder_quotient: f64,
    pub alpha: f64,
    pub pass_h1: bool,
    pub pass_h2: bool,
    pub pass_h3: bool,
}

impl HypothesisReport {
    pub fn all_pass(&self) -> bool {
        self.pass_h1 && self.pass_h2 && self.pass_h3
    }

    pub fn failure_message(&self) -> Option<String> {
        if self.all_pass() {
            return None;
        }
        let mut parts = Vec::new();
        if !self.pass_h1 {
            parts.push(format!(
                "H1: sampled Holder quotient {:.3e} exceeds declared seminorm",
                self.holder_quotient
            ));
        }
        if !self.pass_h2 {
            parts.push(format!(
                "H2: symmetry defect {:.3e} or eigenvalue range [{:.3e}, {:.3e}] outside declared bounds",
                self.symmetry_defect, self.eig_min, self.eig_max
            ));
        }
        if !self.pass_h3 {
            parts.push(format!(
                "H3: max |a_(i,n+1)| on the thin plane = {:.3e}",
                self.plane_offdiag_max
            ));
        }
        Some(parts.join("; "))
    }
}

/// Validate H1-H3 over all grid nodes (plus a subsampled Holder quotient).
///
/// The report carries failures; it never errors. H3 passes iff the plane
/// off-diagonal entries are below `1e-12`.
pub fn validate_hypotheses(mf: &MatrixField, grid: &GridSpec) -> HypothesisReport {
    let dim = mf.dim();
    let mut symmetry_defect = 0.0f64;
    let mut eig_min = f64::INFINITY;
    let mut eig_max = f64::NEG_INFINITY;
    let mut plane_offdiag = 0.0f64;
    let plane_axis = grid.plane_axis();
    let plane_node = grid.plane_node();
    for idx in 0..grid.num_nodes() {
        let p = grid.node_point(idx);
        let a = mf.at(&p);
        symmetry_defect = symmetry_defect.max(a.symmetry_defect());
        let (vals, _) = a.jacobi_eigen();
        eig_min = eig_min.min(vals[0]);
        eig_max = eig_max.max(vals[dim - 1]);
        if grid.node_multi(idx)[plane_axis] == plane_node {
            for i in 0..dim - 1 {
                plane_offdiag = plane_offdiag
                    .max(a.get(i, dim - 1).abs())
                    .max(a.get(dim - 1, i).abs());
            }
        }
    }
    // Holder quotient over a strided node subsample
    let alpha = mf.alpha();
    let per_axis = if dim == 2 { 9 } else { 7 };
    let mut sample_pts: Vec<[f64; 3]> = Vec::new();
    let mut strides = [1usize; 3];
    for a in 0..dim {
        strides[a] = ((grid.count(a) - 1) / (per_axis - 1)).max(1);
    }
    for idx in 0..grid.num_nodes() {
        let m = grid.node_multi(idx);
        if (0..dim).all(|a| m[a] % strides[a] == 0) {
            sample_pts.push(grid.node_point(idx));
        }
    }
    let mats: Vec<SmallMat> = sample_pts.iter().map(|p| mf.at(p)).collect();
    let mut quotient = 0.0f64;
    for i in 0..mats.len() {
        for j in (i + 1)..mats.len() {
            let d = matrix::sub(&sample_pts[i], &sample_pts[j]);
            let dist = matrix::norm(&d, dim);
            if dist < 1e-14 {
                continue;
            }
            let diff = mats[i].sub(&mats[j]).spectral_norm_sym();
            quotient = quotient.max(diff / dist.powf(alpha));
        }
    }
    let tol = 1e-12;
    HypothesisReport {
        symmetry_defect,
        eig_min,
        eig_max,
        plane_offdiag_max: plane_offdiag,
        holder_quotient: quotient,
        alpha,
        pass_h1: quotient <= mf.holder_seminorm * (1.0 + 1e-6) + tol,
        pass_h2: symmetry_defect <= tol
            && eig_min >= mf.lambda - 1e-9
            && eig_max <= mf.big_lambda + 1e-9,
        pass_h3: plane_offdiag <= tol,
    }
}

/// Anisotropy at a point: the spectral norm `|A(x0) - Id|`.
pub fn anisotropy(mf: &MatrixField, x0: &[f64; 3]) -> f64 {
    let a = mf.at(x0);
    a.sub(&SmallMat::identity(mf.dim())).spectral_norm_sym()
}

/// Radial quadratic form `mu(x) = <A(x) nu, nu>` with `nu = (x - x0)/|x - x0|`;
/// equals 1 by convention at `x = x0`.
pub fn mu_rel(mf: &MatrixField, x0: &[f64; 3], x: &[f64; 3]) -> f64 {
    let d = matrix::sub(x, x0);
    let r = matrix::norm(&d, mf.dim());
    if r == 0.0 {
        return 1.0;
    }
    let nu = matrix::scale(&d, 1.0 / r);
    mf.at(x).quad_form(&nu)
}

/// `mu` relative to the origin.
pub fn mu_at(mf: &MatrixField, x: &[f64; 3]) -> f64 {
    mu_rel(mf, &[0.0; 3], x)
}

/// Result of the trace-vs-mu comparison on balls `B_r`.
#[derive(Clone, Debug)]
pub struct TraceMuGap {
    /// `max_{x in B_r} |Tr A(x) - (n+1) mu(x)|` at the requested radius.
    pub max_gap: f64,
    /// Per-radius gaps over the dyadic sweep `r, r/2, r/4, r/8`.
    pub sweep: Vec<(f64, f64)>,
    /// Least-squares coefficient of `gap ~ C r` through the origin.
    pub fitted_slope: f64,
}

/// Measure `|Tr A - (n+1) mu|` over sampled points of `B_r` and fit the
/// linear growth over a dyadic radius sweep. Requires `A(0) = Id`.
pub fn trace_mu_gap(mf: &MatrixField, r: f64, samples_per_axis: usize) -> Result<TraceMuGap> {
    let dim = mf.dim();
    if !mf.at(&[0.0; 3]).is_identity(1e-12) {
        return Err(Error::Precondition(
            "trace_mu_gap requires A(0) = Id".into(),
        ));
    }
    let gap_at = |rr: f64| -> f64 {
        let m = samples_per_axis.max(3);
        let mut worst = 0.0f64;
        let mut idx = vec![0usize; dim];
        loop {
            let mut x = [0.0f64; 3];
            for a in 0..dim {
                x[a] = -rr + 2.0 * rr * idx[a] as f64 / (m - 1) as f64;
            }
            if matrix::norm(&x, dim) <= rr {
                let a = mf.at(&x);
                let gap = (a.trace() - dim as f64 * mu_at(mf, &x)).abs();
                worst = worst.max(gap);
            }
            // odometer increment
            let mut carry = true;
            for a in (0..dim).rev() {
                if carry {
                    idx[a] += 1;
                    if idx[a] == m {
                        idx[a] = 0;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
        }
        worst
    };
    let radii = [r, r / 2.0, r / 4.0, r / 8.0];
    let sweep: Vec<(f64, f64)> = radii.iter().map(|&rr| (rr, gap_at(rr))).collect();
    let num: f64 = sweep.iter().map(|&(rr, g)| rr * g).sum();
    let den: f64 = sweep.iter().map(|&(rr, _)| rr * rr).sum();
    Ok(TraceMuGap {
        max_gap: sweep[0].1,
        sweep,
        fitted_slope: num / den,
    })
}

/// Linearize a radial energy density `h(|p|)` with `h''(t) = 1 + omega(t)`:
/// produce the effective density `theta = 1 + omega_tilde(|grad u|)` where
/// `omega_tilde(t) = (1/t) int_0^t omega(s) ds`.
///
/// `grad_norm` must be nonnegative pointwise; the integral is evaluated by
/// composite Simpson quadrature.
pub fn linearize_density(
    omega: &(dyn Fn(f64) -> f64 + Sync),
    grad_norm: &ScalarField,
) -> Result<ScalarField> {
    for (idx, &g) in grad_norm.values().iter().enumerate() {
        if g < 0.0 {
            return Err(Error::Precondition(format!(
                "grad_norm has negative entry {g} at node {idx}"
            )));
        }
    }
    let omega_tilde = |t: f64| -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        // composite Simpson with 64 panels
        let n = 64;
        let h = t / n as f64;
        let mut s = omega(0.0) + omega(t);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * omega(k as f64 * h);
        }
        (s * h / 3.0) / t
    };
    let theta: Vec<f64> = grad_norm
        .values()
        .iter()
        .map(|&g| 1.0 + omega_tilde(g))
        .collect();
    ScalarField::from_values(grad_norm.grid().clone(), theta, grad_norm.even())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::plane_rotation;

    #[test]
    fn identity_passes_all_hypotheses() {
        let mf = MatrixField::identity(2);
        let g = GridSpec::square(2, 9).unwrap();
        let rep = validate_hypotheses(&mf, &g);
        assert!(rep.all_pass(), "{rep:?}");
        assert_eq!(rep.holder_quotient, 0.0);
        assert_eq!(rep.symmetry_defect, 0.0);
    }

    #[test]
    fn scalar_abs_lipschitz_quotient() {
        let mf = MatrixField::scalar_abs(2, 0.1);
        let g = GridSpec::square(2, 17).unwrap();
        let rep = validate_hypotheses(&mf, &g);
        assert!(rep.all_pass(), "{rep:?}");
        // sup |A(x)-A(y)|/|x-y| realized along e1: 0.1 per unit
        assert!((rep.holder_quotient - 0.1).abs() < 0.02, "{rep:?}");
    }

    #[test]
    fn h3_violation_flagged() {
        let mf = MatrixField::from_preset(2, "h3_violating", &[0.2]).unwrap();
        let g = GridSpec::square(2, 9).unwrap();
        let rep = validate_hypotheses(&mf, &g);
        assert!(!rep.pass_h3);
        assert!((rep.plane_offdiag_max - 0.2).abs() < 1e-15);
    }

    #[test]
    fn builtin_presets_pass_their_declared_hypotheses() {
        let g2 = GridSpec::square(2, 17).unwrap();
        for mf in [
            MatrixField::identity(2),
            MatrixField::diag_linear(2, 0.3),
            MatrixField::scalar_abs(2, 0.2),
            MatrixField::rotating(2, 0.5, 1.3, 0.8),
            MatrixField::holder(2, 0.5, 0.5),
        ] {
            let rep = validate_hypotheses(&mf, &g2);
            assert!(rep.all_pass(), "{}: {rep:?}", mf.preset);
        }
        let g3 = GridSpec::square(3, 9).unwrap();
        for mf in [
            MatrixField::identity(3),
            MatrixField::diag_linear(3, 0.3),
            MatrixField::rotating(3, 0.4, 1.2, 0.9),
        ] {
            let rep = validate_hypotheses(&mf, &g3);
            assert!(rep.all_pass(), "{}: {rep:?}", mf.preset);
        }
    }

    #[test]
    fn anisotropy_diagonal_and_conjugated() {
        let mf = MatrixField::identity(2);
        assert_eq!(anisotropy(&mf, &[0.3, 0.0, 0.0]), 0.0);

        let delta = 0.25;
        let mf = MatrixField::custom(2, "test", 1.0, 1.25, f64::INFINITY, 0.0, move |_| {
            SmallMat::diagonal(2, &[1.0 + delta, 1.0])
        });
        assert!((anisotropy(&mf, &[0.0; 3]) - delta).abs() < 1e-14);

        // conjugation invariance: anisotropy of Q diag(1.3, 0.9) Q^T is 0.3
        let mf = MatrixField::custom(2, "test", 0.9, 1.3, f64::INFINITY, 0.0, |_| {
            let q = plane_rotation(2, 0, 1, 0.7);
            q.mat_mul(&SmallMat::diagonal(2, &[1.3, 0.9])).mat_mul(&q.transpose())
        });
        assert!((anisotropy(&mf, &[0.0; 3]) - 0.3).abs() < 1e-13);
    }

    #[test]
    fn mu_identity_origin_and_axis() {
        let mf = MatrixField::identity(2);
        assert!((mu_at(&mf, &[0.2, -0.7, 0.0]) - 1.0).abs() < 1e-15);
        assert_eq!(mu_at(&mf, &[0.0; 3]), 1.0);

        let mf = MatrixField::constant_diag(2, &[2.0, 1.0]);
        assert!((mu_at(&mf, &[0.4, 0.0, 0.0]) - 2.0).abs() < 1e-15);
        // in [lambda, Lambda] everywhere
        for &x in &[[0.3, 0.2, 0.0], [-0.1, 0.8, 0.0]] {
            let m = mu_at(&mf, &x);
            assert!(m >= 1.0 - 1e-15 && m <= 2.0 + 1e-15);
        }
        // scale invariance for constant coefficients
        let m1 = mu_at(&mf, &[0.1, 0.25, 0.0]);
        let m2 = mu_at(&mf, &[0.3, 0.75, 0.0]);
        assert!((m1 - m2).abs() < 1e-14);
    }

    #[test]
    fn trace_mu_gap_identity_and_lipschitz() {
        let mf = MatrixField::identity(2);
        let out = trace_mu_gap(&mf, 0.4, 17).unwrap();
        assert!(out.max_gap < 1e-14);

        let mf = MatrixField::diag_linear(2, 0.3);
        let out = trace_mu_gap(&mf, 0.4, 33).unwrap();
        // gap <= C r with C about |a| * n
        for &(r, g) in &out.sweep {
            assert!(g <= 0.31 * r, "gap {g} at r {r}");
        }
        // ratio gap/r stays bounded as r halves
        let ratios: Vec<f64> = out.sweep.iter().map(|&(r, g)| g / r).collect();
        let spread = ratios.iter().cloned().fold(0.0, f64::max)
            / ratios.iter().cloned().fold(f64::INFINITY, f64::min).max(1e-12);
        assert!(spread < 1.5, "gap/r blow-up: {ratios:?}");

        let mf = MatrixField::constant_diag(2, &[2.0, 1.0]);
        assert!(trace_mu_gap(&mf, 0.4, 9).is_err());
    }

    #[test]
    fn linearize_density_cases() {
        let g = GridSpec::square(2, 5).unwrap();
        // omega = 0: theta = 1
        let gn = ScalarField::sample(g.clone(), |_| 0.7, true).unwrap();
        let th = linearize_density(&|_| 0.0, &gn).unwrap();
        assert!(th.values().iter().all(|&v| v == 1.0));

        // omega = t^2: omega_tilde = t^2/3
        let g0 = 0.9;
        let gn = ScalarField::sample(g.clone(), |_| g0, true).unwrap();
        let th = linearize_density(&|t| t * t, &gn).unwrap();
        for &v in th.values() {
            assert!((v - (1.0 + g0 * g0 / 3.0)).abs() < 1e-10);
        }

        // zero gradient at free boundary points: theta = 1 there
        let gn = ScalarField::sample(g.clone(), |p| p[0].abs(), true).unwrap();
        let th = linearize_density(&|t| t * t, &gn).unwrap();
        let mid = th.grid().node_index(&[2, 2, 0]);
        assert_eq!(th.value_at(mid), 1.0);

        // bound 1 <= theta <= 1 + C g pointwise for omega(t) = t
        let gn = ScalarField::sample(g.clone(), |p| p[0].abs() + 0.2, true).unwrap();
        let th = linearize_density(&|t| t, &gn).unwrap();
        for (idx, &v) in th.values().iter().enumerate() {
            let gval = gn.value_at(idx);
            assert!(v >= 1.0 && v <= 1.0 + gval, "theta {v} vs g {gval}");
        }

        // negative gradient rejected
        let gn = ScalarField::sample(g, |p| p[0], false).unwrap();
        assert!(linearize_density(&|t| t, &gn).is_err());
    }
}
