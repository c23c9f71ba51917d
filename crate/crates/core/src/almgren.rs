//! Solid-ball / sphere Almgren quantities for Lipschitz coefficients at base
//! points with `A(x0) = Id`:
//!
//! * `E0(r) = int_{B_r} <A grad u, grad u>` (volume form) and its boundary
//!   form `E0b(r) = int_{dB_r} u <A grad u, nu>`,
//! * `H0(r) = int_{dB_r} mu u^2` with the radial form `mu = <A nu, nu>`,
//! * `I0(r) = r E0(r) / H0(r)`,
//!
//! together with the radial derivative identities and their remainders, the
//! `e^{Cr} I0` monotonicity audit, the `H0` power-growth audit and the
//! frequency-domination ratios against the smoothed quantities.
//!
//! Volume integrals use the cells-with-center-inside rule (an `O(h)`
//! boundary error, stressed in refinement tests rather than corrected);
//! sphere integrals use product trapezoid rules in the angles.

use std::io::Write;

use crate::coefficients::{mu_rel, MatrixField};
use crate::error::{Error, Result};
use crate::fields::{GradientField, ScalarField};
use crate::frequency::{
    check_support, for_cells_in_box, frequency_integrals, CutoffProfile,
};
use crate::matrix;

/// Solid and spherical integrals at one `(x0, r)`.
#[derive(Clone, Copy, Debug)]
pub struct AlmgrenIntegrals {
    /// Volume Dirichlet energy over `B_r`.
    pub eco: f64,
    /// Boundary form of the energy (equal to `eco` for exact solutions by
    /// the divergence theorem).
    pub eco_b: f64,
    /// `mu`-weighted boundary mass.
    pub hco: f64,
}

fn require_identity_at(mf: &MatrixField, x0: &[f64; 3]) -> Result<()> {
    if !mf.at(x0).is_identity(1e-10) {
        return Err(Error::Precondition(format!(
            "A({x0:?}) must be the identity for the solid-ball quantities"
        )));
    }
    Ok(())
}

/// Number of quadrature nodes per angle for the sphere rule at radius `r`.
fn sphere_nodes(r: f64, h: f64) -> usize {
    (64.0f64).max((8.0 * r / h).ceil()) as usize
}

/// Sphere quadrature: accumulate `f(point, outward_normal, weight)` over the
/// sphere of radius `r` (circle in dim 2, latitude-longitude grid with
/// trapezoid pole weights in dim 3). `m` is the node count per angle.
fn sphere_quad(
    dim: usize,
    x0: &[f64; 3],
    r: f64,
    m: usize,
    mut f: impl FnMut(&[f64; 3], &[f64; 3], f64),
) {
    match dim {
        2 => {
            let w = 2.0 * std::f64::consts::PI * r / m as f64;
            for k in 0..m {
                let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                let nu = [th.cos(), th.sin(), 0.0];
                let p = [x0[0] + r * nu[0], x0[1] + r * nu[1], 0.0];
                f(&p, &nu, w);
            }
        }
        3 => {
            // polar angle with trapezoid endpoints (the sin factor vanishes
            // at the poles), uniform azimuth
            let mp = m / 2 + 1;
            let dth = std::f64::consts::PI / (mp - 1) as f64;
            let dph = 2.0 * std::f64::consts::PI / m as f64;
            for i in 0..mp {
                let th = i as f64 * dth;
                let wt = if i == 0 || i == mp - 1 { 0.5 } else { 1.0 };
                let (sth, cth) = th.sin_cos();
                for k in 0..m {
                    let ph = k as f64 * dph;
                    let nu = [sth * ph.cos(), sth * ph.sin(), cth];
                    let p = [
                        x0[0] + r * nu[0],
                        x0[1] + r * nu[1],
                        x0[2] + r * nu[2],
                    ];
                    f(&p, &nu, wt * r * r * sth * dth * dph);
                }
            }
        }
        _ => unreachable!(),
    }
}

/// Reusable evaluator holding the recovered gradient field of `u`.
///
/// Volume integrals sample the plain multilinear gradient at cell centers
/// (a superconvergence point); sphere integrals interpolate the recovered
/// nodal gradient, which stays second-order accurate off cell centers.
pub struct AlmgrenEvaluator<'a> {
    u: &'a ScalarField,
    mf: &'a MatrixField,
    grads: GradientField,
}

impl<'a> AlmgrenEvaluator<'a> {
    pub fn new(u: &'a ScalarField, mf: &'a MatrixField) -> Self {
        AlmgrenEvaluator {
            u,
            mf,
            grads: GradientField::build(u),
        }
    }

    pub fn integrals(&self, x0: &[f64; 3], r: f64) -> Result<AlmgrenIntegrals> {
        self.integrals_with_nodes(x0, r, sphere_nodes(r, self.u.grid().max_spacing()))
    }

    pub fn integrals_with_nodes(
        &self,
        x0: &[f64; 3],
        r: f64,
        m: usize,
    ) -> Result<AlmgrenIntegrals> {
        let grid = self.u.grid();
        check_support(grid, x0, r)?;
        let floor = 8.0 * grid.max_spacing();
        if r < floor {
            return Err(Error::RadiusBelowResolution { radius: r, floor });
        }
        let dim = grid.dim();
        let vol = grid.cell_volume();
        let mut eco = 0.0;
        for_cells_in_box(grid, x0, r, |c| {
            if matrix::norm(&matrix::sub(c, x0), dim) >= r {
                return;
            }
            let (_, g) = self
                .u
                .interp_value_grad(c)
                .expect("cell center inside the domain");
            eco += self.mf.at(c).quad_form(&g) * vol;
        });
        let mut eco_b = 0.0;
        let mut hco = 0.0;
        sphere_quad(dim, x0, r, m, |p, nu, w| {
            let v = self.u.interp(p).expect("sphere point inside domain");
            let g = self.grads.interp(p).expect("sphere point inside domain");
            let anu = self.mf.at(p).mul_vec(nu);
            eco_b += v * matrix::dot(&anu, &g, dim) * w;
            hco += mu_rel(self.mf, x0, p) * v * v * w;
        });
        Ok(AlmgrenIntegrals { eco, eco_b, hco })
    }

    /// Sphere integral of `mu^{-1} <A nu, grad u>^2`.
    fn flux_square(&self, x0: &[f64; 3], r: f64, m: usize) -> f64 {
        let dim = self.u.grid().dim();
        let mut acc = 0.0;
        sphere_quad(dim, x0, r, m, |p, nu, w| {
            let g = self.grads.interp(p).expect("sphere point inside domain");
            let anu = self.mf.at(p).mul_vec(nu);
            let fl = matrix::dot(&anu, &g, dim);
            acc += fl * fl / mu_rel(self.mf, x0, p) * w;
        });
        acc
    }
}

/// Compute `E0`, `E0b`, `H0` at `(x0, r)` with the default node count.
pub fn almgren_integrals(
    u: &ScalarField,
    mf: &MatrixField,
    x0: &[f64; 3],
    r: f64,
) -> Result<AlmgrenIntegrals> {
    AlmgrenEvaluator::new(u, mf).integrals(x0, r)
}

const H_DEGENERATE: f64 = 1e-250;

/// Energy-driven frequency `I0(r) = r E0(r) / H0(r)`.
pub fn ico(u: &ScalarField, mf: &MatrixField, x0: &[f64; 3], r: f64) -> Result<f64> {
    let ai = almgren_integrals(u, mf, x0, r)?;
    if !(ai.hco > H_DEGENERATE) {
        return Err(Error::DegeneratePoint(ai.hco));
    }
    Ok(r * ai.eco / ai.hco)
}

/// Remainders of the radial derivative identities at `(x0, r)`:
///
/// * `E0'(r) = 2 int_{dB_r} mu^{-1} <A nu, grad u>^2 + E_r`,
/// * `H0'(r) = (n/r) H0 + 2 int_{dB_r} u <A grad u, nu> + H_r`,
///
/// with derivatives by central differences at `r (1 +- 1/64)` and a sphere
/// node count frozen across the stencil. Residuals are reported normalized
/// by `E0/r` and `H0`.
#[derive(Clone, Copy, Debug)]
pub struct DerivativeRemainders {
    pub e_r: f64,
    pub h_r: f64,
    /// `E_r r / E0`.
    pub e_r_normalized: f64,
    /// `H_r / H0`.
    pub h_r_normalized: f64,
}

pub fn derivative_identities(
    u: &ScalarField,
    mf: &MatrixField,
    x0: &[f64; 3],
    r: f64,
) -> Result<DerivativeRemainders> {
    let ev = AlmgrenEvaluator::new(u, mf);
    derivative_identities_with(&ev, x0, r)
}

pub fn derivative_identities_with(
    ev: &AlmgrenEvaluator<'_>,
    x0: &[f64; 3],
    r: f64,
) -> Result<DerivativeRemainders> {
    require_identity_at(ev.mf, x0)?;
    let grid = ev.u.grid();
    let n = (grid.dim() - 1) as f64;
    let m = sphere_nodes(r, grid.max_spacing());
    let delta = r / 64.0;
    // fourth-order central stencil at spacing delta: the second-order
    // truncation delta^2 H''' / 6 would floor the residual at 1/(1024 r)
    // relative to H0, independent of the grid
    let lo2 = ev.integrals_with_nodes(x0, r - 2.0 * delta, m)?;
    let lo = ev.integrals_with_nodes(x0, r - delta, m)?;
    let mid = ev.integrals_with_nodes(x0, r, m)?;
    let hi = ev.integrals_with_nodes(x0, r + delta, m)?;
    let hi2 = ev.integrals_with_nodes(x0, r + 2.0 * delta, m)?;
    if !(mid.hco > H_DEGENERATE) {
        return Err(Error::DegeneratePoint(mid.hco));
    }
    let fd4 = |m2: f64, m1: f64, p1: f64, p2: f64| {
        (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * delta)
    };
    // E0 is differenced through its divergence-theorem boundary form: the
    // center-inside volume rule is a staircase in r at the delta = r/64
    // scale, so its finite differences would measure cell quantization
    // rather than the radial derivative.
    let eprime = fd4(lo2.eco_b, lo.eco_b, hi.eco_b, hi2.eco_b);
    let hprime = fd4(lo2.hco, lo.hco, hi.hco, hi2.hco);
    let flux_sq = ev.flux_square(x0, r, m);
    let e_r = eprime - 2.0 * flux_sq;
    let h_r = hprime - (n / r * mid.hco + 2.0 * mid.eco_b);
    Ok(DerivativeRemainders {
        e_r,
        h_r,
        e_r_normalized: e_r * r / mid.eco.max(f64::MIN_POSITIVE),
        h_r_normalized: h_r / mid.hco,
    })
}

/// One row of a solid-ball sweep.
#[derive(Clone, Copy, Debug)]
pub struct AlmgrenRow {
    pub r: f64,
    pub eco: f64,
    pub eco_b: f64,
    pub hco: f64,
    pub ico: f64,
    pub e_r_resid: f64,
    pub h_r_resid: f64,
}

#[derive(Clone, Debug)]
pub struct AlmgrenSweep {
    pub x0: [f64; 3],
    pub rows: Vec<AlmgrenRow>,
}

/// Assemble the solid-ball sweep (requires `A(x0) = Id`).
pub fn almgren_sweep(
    u: &ScalarField,
    mf: &MatrixField,
    x0: &[f64; 3],
    radii: &[f64],
) -> Result<AlmgrenSweep> {
    require_identity_at(mf, x0)?;
    let ev = AlmgrenEvaluator::new(u, mf);
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let ai = ev.integrals(x0, r)?;
        if !(ai.hco > H_DEGENERATE) {
            return Err(Error::DegeneratePoint(ai.hco));
        }
        let rem = derivative_identities_with(&ev, x0, r)?;
        rows.push(AlmgrenRow {
            r,
            eco: ai.eco,
            eco_b: ai.eco_b,
            hco: ai.hco,
            ico: r * ai.eco / ai.hco,
            e_r_resid: rem.e_r_normalized,
            h_r_resid: rem.h_r_normalized,
        });
    }
    Ok(AlmgrenSweep { x0: *x0, rows })
}

impl AlmgrenSweep {
    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "r,Eco,Eco_b,Hco,Ico,Er_resid,Hr_resid")?;
        for row in &self.rows {
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                row.r, row.eco, row.eco_b, row.hco, row.ico, row.e_r_resid, row.h_r_resid
            )?;
        }
        Ok(())
    }
}

/// Smallest `C >= 0` making `e^{Cr} I0(r)` nondecreasing across consecutive
/// sweep rows.
///
/// The fit evaluates `I0` through the boundary energy form (`r Eco_b/Hco`):
/// the two forms agree for solutions by the divergence theorem, but only the
/// sphere-quadrature form is differentiable in `r`, which a per-pair slope
/// fit requires. The tabulated `Ico` column keeps the volume form.
pub fn ico_audit(sweep: &AlmgrenSweep) -> Result<f64> {
    if sweep.rows.len() < 2 {
        return Err(Error::InvalidSweep("need at least two radii".into()));
    }
    let mut c = 0.0f64;
    for w in sweep.rows.windows(2) {
        let i0 = w[0].r * w[0].eco_b / w[0].hco;
        let i1 = w[1].r * w[1].eco_b / w[1].hco;
        if i0 <= 0.0 || i1 <= 0.0 || w[0].ico <= 0.0 || w[1].ico <= 0.0 {
            return Err(Error::InvalidSweep(format!(
                "nonpositive I0 row: {} or {}",
                w[0].ico, w[1].ico
            )));
        }
        c = c.max((i0 / i1).ln() / (w[1].r - w[0].r));
    }
    Ok(c)
}

/// Count ordered pairs `r < t` of the sweep violating the power-growth
/// comparison `H0(t)/t^beta <= H0(r)/r^beta e^{C(t-r)}` with relative
/// tolerance `1e-6`. This is the integrated form of
/// `(ln(H0/r^beta))' <= C`: the exponential correction sits on the
/// smaller-radius side.
pub fn hco_power_audit(sweep: &AlmgrenSweep, beta: f64, c: f64) -> usize {
    let mut violations = 0;
    for i in 0..sweep.rows.len() {
        for j in (i + 1)..sweep.rows.len() {
            let a = &sweep.rows[i]; // r
            let b = &sweep.rows[j]; // t > r
            let lhs = b.hco / b.r.powf(beta);
            let rhs = a.hco / a.r.powf(beta) * (c * (b.r - a.r)).exp();
            if lhs > rhs * (1.0 + 1e-6) {
                violations += 1;
            }
        }
    }
    violations
}

/// Exponent for the power-growth audit, `beta = n + 2 e^C I0(r_max)`.
///
/// The factor `2 e^C` comes from integrating `H0'/H0 <= n/r + 2 I0(r)/r + C`
/// with `I0(r) <= e^{C (r_max - r)} I0(r_max)`; the bare frequency would
/// undershoot the growth of `H0` and void the comparison. `I0` is evaluated
/// through the boundary energy form for consistency with the measured `H0`
/// growth (the volume form's rim quantization biases it low).
pub fn beta_with_n(sweep: &AlmgrenSweep, c: f64, n: usize) -> f64 {
    let last = sweep.rows.last().expect("nonempty sweep");
    n as f64 + 2.0 * c.exp() * (last.r * last.eco_b / last.hco)
}

/// Ratio table comparing the smoothed quantities against the solid-ball
/// ones: `H_u/H0`, `D_u/E0`, `I_u/I0`. Rows with degenerate `E0` are
/// skipped and flagged.
#[derive(Clone, Debug)]
pub struct DominationRow {
    pub r: f64,
    pub h_ratio: f64,
    pub d_ratio: f64,
    pub i_ratio: f64,
    pub skipped: bool,
}

pub fn frequency_domination(
    u: &ScalarField,
    mf: &MatrixField,
    x0: &[f64; 3],
    radii: &[f64],
    cutoff: &CutoffProfile,
) -> Result<Vec<DominationRow>> {
    require_identity_at(mf, x0)?;
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let ai = almgren_integrals(u, mf, x0, r)?;
        let fi = frequency_integrals(u, x0, r, cutoff)?;
        let scale = u.linf().max(1e-300);
        let degenerate = ai.eco <= 1e-14 * scale * scale || ai.hco <= H_DEGENERATE;
        if degenerate {
            out.push(DominationRow {
                r,
                h_ratio: f64::NAN,
                d_ratio: f64::NAN,
                i_ratio: f64::NAN,
                skipped: true,
            });
            continue;
        }
        let iu = r * fi.d / fi.h;
        let i0 = r * ai.eco / ai.hco;
        out.push(DominationRow {
            r,
            h_ratio: fi.h / ai.hco,
            d_ratio: fi.d / ai.eco,
            i_ratio: iu / i0,
            skipped: false,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::MatrixField;
    use crate::fields::GridSpec;
    use crate::frequency::{build_cutoff, geometric_radii, Blend};
    use crate::geometry::{homogeneous_library, Family};
    use std::f64::consts::PI;

    fn w32_field(count: usize) -> ScalarField {
        let w = homogeneous_library(2, Family::TwoMMinusHalf, 1).unwrap();
        ScalarField::sample(GridSpec::square(2, count).unwrap(), |p| w.value(p), true).unwrap()
    }

    #[test]
    fn closed_form_values_for_w32() {
        // E0(1/2) = 3 pi/16, H0(1/2) = pi/16, I0 = 3/2
        let u = w32_field(257);
        let mf = MatrixField::identity(2);
        let ai = almgren_integrals(&u, &mf, &[0.0; 3], 0.5).unwrap();
        let e_exact = 3.0 * PI / 16.0;
        let h_exact = PI / 16.0;
        assert!(
            (ai.eco - e_exact).abs() < 0.01 * e_exact,
            "E0 = {} vs {e_exact}",
            ai.eco
        );
        assert!(
            (ai.hco - h_exact).abs() < 0.01 * h_exact,
            "H0 = {} vs {h_exact}",
            ai.hco
        );
        let i0 = ico(&u, &mf, &[0.0; 3], 0.5).unwrap();
        assert!((i0 - 1.5).abs() < 0.02 * 1.5, "I0 = {i0}");
    }

    #[test]
    fn constant_field_has_zero_energy() {
        let g = GridSpec::square(2, 129).unwrap();
        let u = ScalarField::sample(g, |_| 1.0, true).unwrap();
        let mf = MatrixField::identity(2);
        let r = 0.3;
        let ai = almgren_integrals(&u, &mf, &[0.0; 3], r).unwrap();
        assert_eq!(ai.eco, 0.0);
        // H0 = mu-weighted circumference = 2 pi r for A = Id
        assert!((ai.hco - 2.0 * PI * r).abs() < 1e-3 * 2.0 * PI * r, "{}", ai.hco);
    }

    #[test]
    fn divergence_theorem_identity_improves_under_refinement() {
        let mf = MatrixField::identity(2);
        // max over a radius battery averages the lattice phase of the
        // center-inside volume rule
        let gap = |count: usize| {
            let u = w32_field(count);
            let ev = AlmgrenEvaluator::new(&u, &mf);
            [0.2, 0.25, 0.3, 0.35, 0.4, 0.45]
                .iter()
                .map(|&r| {
                    let ai = ev.integrals(&[0.0; 3], r).unwrap();
                    ((ai.eco - ai.eco_b) / ai.eco).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let g129 = gap(129);
        let g257 = gap(257);
        assert!(g257 < 1e-2, "relative gap {g257}");
        assert!(g129 / g257 >= 1.8, "refinement ratio {}", g129 / g257);
    }

    #[test]
    fn ico_homogeneity_and_scale_invariance() {
        let u = w32_field(257);
        let mf = MatrixField::identity(2);
        for &r in &[0.15, 0.3, 0.45] {
            let v = ico(&u, &mf, &[0.0; 3], r).unwrap();
            assert!((v - 1.5).abs() < 0.02 * 1.5, "I0({r}) = {v}");
        }
        let w2 = homogeneous_library(2, Family::TwoM, 1).unwrap();
        let u2 =
            ScalarField::sample(GridSpec::square(2, 257).unwrap(), |p| w2.value(p), true).unwrap();
        for &r in &[0.2, 0.4] {
            let v = ico(&u2, &mf, &[0.0; 3], r).unwrap();
            assert!((v - 2.0).abs() < 0.02 * 2.0, "I0({r}) = {v}");
        }
        // scalar multiples cancel in the ratio
        let u4 = ScalarField::from_values(
            u.grid().clone(),
            u.values().iter().map(|v| 4.0 * v).collect(),
            true,
        )
        .unwrap();
        assert_eq!(
            ico(&u, &mf, &[0.0; 3], 0.3).unwrap(),
            ico(&u4, &mf, &[0.0; 3], 0.3).unwrap()
        );
    }

    #[test]
    fn derivative_identities_on_w32() {
        let u = w32_field(257);
        let mf = MatrixField::identity(2);
        let rem = derivative_identities(&u, &mf, &[0.0; 3], 0.3).unwrap();
        // constant coefficients: both remainders are pure discretization
        assert!(rem.h_r_normalized.abs() < 1e-2, "{rem:?}");
        assert!(rem.e_r_normalized.abs() < 1e-2, "{rem:?}");
    }

    #[test]
    fn derivative_identities_need_identity_at_base() {
        let u = w32_field(65);
        let mf = MatrixField::constant_diag(2, &[1.5, 0.8]);
        assert!(derivative_identities(&u, &mf, &[0.0; 3], 0.3).is_err());
    }

    #[test]
    fn ico_audit_small_on_homogeneous() {
        let u = w32_field(257);
        let mf = MatrixField::identity(2);
        let radii = geometric_radii(0.15, 0.45);
        let sweep = almgren_sweep(&u, &mf, &[0.0; 3], &radii).unwrap();
        let c = ico_audit(&sweep).unwrap();
        assert!(c <= 1e-3, "C* = {c}");
    }

    #[test]
    fn ico_audit_robust_to_grid_noise() {
        let u = w32_field(257);
        let mf = MatrixField::identity(2);
        let radii = geometric_radii(0.15, 0.45);
        let sweep = almgren_sweep(&u, &mf, &[0.0; 3], &radii).unwrap();
        let c_clean = ico_audit(&sweep).unwrap();
        // deterministic 1e-8 perturbation
        let mut state = 0x9e3779b97f4a7c15u64;
        let noisy_vals: Vec<f64> = u
            .values()
            .iter()
            .map(|v| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                v + 1e-8 * (((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5)
            })
            .collect();
        let noisy = ScalarField::from_values(u.grid().clone(), noisy_vals, false).unwrap();
        let sweep_n = almgren_sweep(&noisy, &mf, &[0.0; 3], &radii).unwrap();
        let c_noisy = ico_audit(&sweep_n).unwrap();
        assert!((c_noisy - c_clean).abs() < 1e-2, "{c_clean} vs {c_noisy}");
    }

    #[test]
    fn power_audit_directions() {
        let u = w32_field(129);
        let mf = MatrixField::identity(2);
        let radii = geometric_radii(0.15, 0.45);
        let sweep = almgren_sweep(&u, &mf, &[0.0; 3], &radii).unwrap();
        let c = ico_audit(&sweep).unwrap();
        let c_h = sweep
            .rows
            .iter()
            .map(|r| r.h_r_resid.abs())
            .fold(0.0f64, f64::max);
        // n + 2 lambda = 4 for w_{3/2} in dim 2: any beta above that gives
        // no violations, beta = n gives many (diagnostic direction)
        assert_eq!(hco_power_audit(&sweep, 4.1, c_h), 0);
        assert!(hco_power_audit(&sweep, 1.0, c_h) > 0);
        // the growth exponent derived from the audited constants clears the
        // exact power law
        let beta = beta_with_n(&sweep, c, 1);
        assert!(beta >= 4.0, "beta = {beta}");
        assert_eq!(hco_power_audit(&sweep, beta, c_h), 0);
    }

    #[test]
    fn domination_ratios_on_w32() {
        let u = w32_field(257);
        let mf = MatrixField::identity(2);
        let c = build_cutoff(Blend::Quintic);
        let radii = geometric_radii(0.15, 0.45);
        let rows = frequency_domination(&u, &mf, &[0.0; 3], &radii, &c).unwrap();
        for row in &rows {
            assert!(!row.skipped);
            // both frequencies equal 3/2 so the ratio is about 1
            assert!((row.i_ratio - 1.0).abs() < 0.02, "{row:?}");
            assert!(row.h_ratio > 0.0);
            // D_u/E0 <= 1/lambda = 1 holds cellwise by construction
            assert!(row.d_ratio <= 1.0 + 1e-12, "{row:?}");
        }
    }

    #[test]
    fn domination_skips_degenerate_rows() {
        let g = GridSpec::square(2, 129).unwrap();
        let u = ScalarField::sample(g, |_| 1.0, true).unwrap();
        let mf = MatrixField::identity(2);
        let c = build_cutoff(Blend::Cubic);
        let rows = frequency_domination(&u, &mf, &[0.0; 3], &[0.3], &c).unwrap();
        assert!(rows[0].skipped);
    }
}
