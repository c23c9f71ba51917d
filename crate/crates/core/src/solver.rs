//! Discretization and solution of the thin obstacle problem: minimize the
//! quadratic energy `int <A(x) grad v, grad v>` over fields equal to `g` on
//! the box boundary, even in the last coordinate, with `v >= 0` on the thin
//! plane.
//!
//! Discretization is by multilinear (Q1) tensor-product elements with the
//! coefficient frozen at each cell center; the constant-coefficient cell
//! forms are integrated exactly, which keeps the stiffness matrix symmetric
//! positive semidefinite for any symmetric `A >= lambda Id`. The constrained
//! system is solved by projected SOR sweeps; a dense active-set solver over
//! the plane constraints serves as the verification oracle on small grids.

use std::time::Instant;

use crate::coefficients::{validate_hypotheses, MatrixField};
use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField};
use crate::matrix::SmallMat;

/// Classification of grid nodes for the constrained solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    /// Box-boundary node: value pinned to the boundary data.
    Dirichlet,
    /// Interior node on the thin plane: unilateral constraint `u >= 0`.
    Plane,
    /// Ordinary interior node.
    Interior,
}

/// Assembled stiffness operator stored as a dense `3^dim` stencil per node,
/// plus the node classification.
#[derive(Clone, Debug)]
pub struct StiffnessSystem {
    grid: GridSpec,
    dim: usize,
    stencil_size: usize,
    /// Row-major per node: coefficient against the neighbor at offset
    /// `delta` (each component in {-1,0,1}), encoded radix-3 with the last
    /// axis fastest.
    stencil: Vec<f64>,
    kinds: Vec<NodeKind>,
}

fn offset_code(dim: usize, delta: &[isize; 3]) -> usize {
    let mut code = 0;
    for a in 0..dim {
        code = code * 3 + (delta[a] + 1) as usize;
    }
    code
}

/// 1D exact integrals of Q1 basis products on a cell of width `h`:
/// stiffness `int f' g'`, mass `int f g`, and mixed `int f' g`.
fn axis_tables(h: f64) -> ([[f64; 2]; 2], [[f64; 2]; 2], [[f64; 2]; 2]) {
    let s = [[1.0 / h, -1.0 / h], [-1.0 / h, 1.0 / h]];
    let m = [
        [h / 3.0, h / 6.0],
        [h / 6.0, h / 3.0],
    ];
    let t = [[-0.5, -0.5], [0.5, 0.5]];
    (s, m, t)
}

impl StiffnessSystem {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn node_kind(&self, idx: usize) -> NodeKind {
        self.kinds[idx]
    }

    pub fn kinds(&self) -> &[NodeKind] {
        &self.kinds
    }

    #[inline]
    pub fn diag(&self, idx: usize) -> f64 {
        self.stencil[idx * self.stencil_size + self.stencil_size / 2]
    }

    /// `(K u)_i` for one row.
    pub fn apply_row(&self, u: &[f64], idx: usize) -> f64 {
        let g = &self.grid;
        let m = g.node_multi(idx);
        let base = idx * self.stencil_size;
        let mut acc = 0.0;
        let dim = self.dim;
        let mut delta = [-1isize; 3];
        for a in dim..3 {
            delta[a] = 0;
        }
        loop {
            let mut ok = true;
            let mut nb = [0usize; 3];
            for a in 0..dim {
                let j = m[a] as isize + delta[a];
                if j < 0 || j as usize >= g.count(a) {
                    ok = false;
                    break;
                }
                nb[a] = j as usize;
            }
            if ok {
                let code = offset_code(dim, &delta);
                let w = self.stencil[base + code];
                if w != 0.0 {
                    acc += w * u[g.node_index(&nb)];
                }
            }
            // odometer over offsets
            let mut a = dim;
            loop {
                if a == 0 {
                    return acc;
                }
                a -= 1;
                if delta[a] < 1 {
                    delta[a] += 1;
                    for b in (a + 1)..dim {
                        delta[b] = -1;
                    }
                    break;
                } else if a == 0 {
                    return acc;
                }
            }
        }
    }

    /// Full matrix-vector product.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        (0..u.len()).map(|i| self.apply_row(u, i)).collect()
    }

    /// Energy `<K u, u>` (the discrete Dirichlet energy).
    pub fn energy(&self, u: &[f64]) -> f64 {
        (0..u.len()).map(|i| u[i] * self.apply_row(u, i)).sum()
    }

    /// Largest stencil asymmetry `|K_ij - K_ji|` (zero by construction).
    pub fn symmetry_defect(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0f64;
        for idx in 0..self.kinds.len() {
            let m = g.node_multi(idx);
            let base = idx * self.stencil_size;
            for code in 0..self.stencil_size {
                let w = self.stencil[base + code];
                if w == 0.0 {
                    continue;
                }
                // decode offset
                let mut delta = [0isize; 3];
                let mut c = code;
                for a in (0..self.dim).rev() {
                    delta[a] = (c % 3) as isize - 1;
                    c /= 3;
                }
                let mut nb = [0usize; 3];
                let mut ok = true;
                for a in 0..self.dim {
                    let j = m[a] as isize + delta[a];
                    if j < 0 || j as usize >= g.count(a) {
                        ok = false;
                        break;
                    }
                    nb[a] = j as usize;
                }
                if !ok {
                    continue;
                }
                let jdx = g.node_index(&nb);
                let back = [-delta[0], -delta[1], -delta[2]];
                let wt = self.stencil[jdx * self.stencil_size + offset_code(self.dim, &back)];
                worst = worst.max((w - wt).abs());
            }
        }
        worst
    }
}

/// Assemble the Q1 stiffness operator for the coefficient field `mf`.
/// Rejects fields failing the structural hypotheses.
pub fn assemble(mf: &MatrixField, grid: &GridSpec) -> Result<StiffnessSystem> {
    let rep = validate_hypotheses(mf, grid);
    if let Some(msg) = rep.failure_message() {
        return Err(Error::Hypothesis(msg));
    }
    let dim = grid.dim();
    let stencil_size = 3usize.pow(dim as u32);
    let n = grid.num_nodes();
    let mut stencil = vec![0.0f64; n * stencil_size];

    // per-axis tables (the grid may have distinct per-axis spacing)
    let tables: Vec<_> = (0..dim).map(|a| axis_tables(grid.spacing(a))).collect();
    let corners = 1usize << dim;

    let mut cell = [0usize; 3];
    let cells: Vec<usize> = (0..dim).map(|a| grid.count(a) - 1).collect();
    loop {
        let mut center = [0.0f64; 3];
        for a in 0..dim {
            center[a] = grid.cell_center(a, cell[a]);
        }
        let amat: SmallMat = mf.at(&center);
        // local 2^dim x 2^dim cell matrix, exact for the frozen coefficient;
        // the upper triangle is mirrored so K is symmetric to the last bit
        let mut local = [[0.0f64; 8]; 8];
        for ca in 0..corners {
            for cb in ca..corners {
                let mut sum = 0.0;
                for k in 0..dim {
                    for l in 0..dim {
                        let akl = amat.get(k, l);
                        if akl == 0.0 {
                            continue;
                        }
                        let mut prod = akl;
                        for m in 0..dim {
                            let ia = (ca >> (dim - 1 - m)) & 1;
                            let ib = (cb >> (dim - 1 - m)) & 1;
                            let (s, mm, t) = &tables[m];
                            let f = if m == k && m == l {
                                s[ia][ib]
                            } else if m == k {
                                t[ia][ib]
                            } else if m == l {
                                t[ib][ia]
                            } else {
                                mm[ia][ib]
                            };
                            prod *= f;
                        }
                        sum += prod;
                    }
                }
                local[ca][cb] = sum;
                local[cb][ca] = sum;
            }
        }
        // scatter into the stencils
        for ca in 0..corners {
            let mut ma = [0usize; 3];
            for m in 0..dim {
                ma[m] = cell[m] + ((ca >> (dim - 1 - m)) & 1);
            }
            let ia = grid.node_index(&ma);
            for cb in 0..corners {
                let mut delta = [0isize; 3];
                for m in 0..dim {
                    let b = ((cb >> (dim - 1 - m)) & 1) as isize;
                    let a = ((ca >> (dim - 1 - m)) & 1) as isize;
                    delta[m] = b - a;
                }
                stencil[ia * stencil_size + offset_code(dim, &delta)] += local[ca][cb];
            }
        }
        // odometer over cells
        let mut a = dim;
        let mut done = true;
        while a > 0 {
            a -= 1;
            if cell[a] + 1 < cells[a] {
                cell[a] += 1;
                for b in (a + 1)..dim {
                    cell[b] = 0;
                }
                done = false;
                break;
            }
        }
        if done {
            break;
        }
    }

    // node classification
    let plane_axis = grid.plane_axis();
    let plane_node = grid.plane_node();
    let kinds: Vec<NodeKind> = (0..n)
        .map(|idx| {
            let m = grid.node_multi(idx);
            let boundary = (0..dim).any(|a| m[a] == 0 || m[a] == grid.count(a) - 1);
            if boundary {
                NodeKind::Dirichlet
            } else if m[plane_axis] == plane_node {
                NodeKind::Plane
            } else {
                NodeKind::Interior
            }
        })
        .collect();

    Ok(StiffnessSystem {
        grid: grid.clone(),
        dim,
        stencil_size,
        stencil,
        kinds,
    })
}

/// Projected SOR parameters.
#[derive(Clone, Copy, Debug)]
pub struct SolveConfig {
    /// Relaxation factor in (0, 2).
    pub omega: f64,
    /// Relative update tolerance.
    pub tol: f64,
    /// Sweep cap; `None` selects `200 sqrt(nodes) dim`.
    pub max_sweeps: Option<usize>,
    /// Sweep the nodes in reverse order (for order-invariance checks).
    pub reverse_order: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            omega: 1.5,
            tol: 1e-10,
            max_sweeps: None,
            reverse_order: false,
        }
    }
}

/// Solve record: iteration count, energy history and the complementarity
/// diagnostics of the final iterate.
#[derive(Clone, Debug)]
pub struct SolveReport {
    pub sweeps: usize,
    pub converged: bool,
    pub final_energy: f64,
    pub energy_history: Vec<f64>,
    pub max_update_rel: f64,
    pub wall_seconds: f64,
}

impl SolveReport {
    /// Flat key-value text block for CLI output.
    pub fn to_text(&self) -> String {
        format!(
            "sweeps {}\nconverged {}\nfinal_energy {:.16e}\nmax_update_rel {:.16e}\nwall_seconds {:.3}\n",
            self.sweeps, self.converged, self.final_energy, self.max_update_rel, self.wall_seconds
        )
    }
}

/// Projected SOR solve of the constrained system. The iterate starts from
/// the nodal data `g`, Dirichlet nodes stay pinned to `g`, thin-plane nodes
/// are clamped to `max(., 0)` after each relaxation step.
///
/// Errors on energy increase beyond round-off (divergence); hitting the
/// sweep cap returns the partial result flagged as unconverged.
pub fn solve_signorini(
    sys: &StiffnessSystem,
    g: &ScalarField,
    cfg: &SolveConfig,
) -> Result<(ScalarField, SolveReport)> {
    let grid = sys.grid();
    if g.grid() != grid {
        return Err(Error::Precondition("boundary data grid mismatch".into()));
    }
    if !g.even() {
        return Err(Error::Precondition("boundary data must be even".into()));
    }
    if !(cfg.omega > 0.0 && cfg.omega < 2.0) {
        return Err(Error::Precondition(format!(
            "relaxation factor {} outside (0,2)",
            cfg.omega
        )));
    }
    // admissibility: g >= 0 where the plane meets the Dirichlet boundary
    for idx in 0..grid.num_nodes() {
        let m = grid.node_multi(idx);
        if m[grid.plane_axis()] == grid.plane_node()
            && sys.node_kind(idx) == NodeKind::Dirichlet
            && g.value_at(idx) < -1e-12
        {
            return Err(Error::Precondition(format!(
                "boundary data negative ({}) on the thin plane at node {idx}",
                g.value_at(idx)
            )));
        }
    }

    let start = Instant::now();
    let n = grid.num_nodes();
    let mut u: Vec<f64> = g.values().to_vec();
    // clamp plane nodes of the initial iterate into the feasible set
    for idx in 0..n {
        if sys.node_kind(idx) == NodeKind::Plane && u[idx] < 0.0 {
            u[idx] = 0.0;
        }
    }
    let sweep_order: Vec<usize> = if cfg.reverse_order {
        (0..n).rev().collect()
    } else {
        (0..n).collect()
    };
    let max_sweeps = cfg
        .max_sweeps
        .unwrap_or_else(|| (200.0 * (n as f64).sqrt() * grid.dim() as f64) as usize);

    let mut energy_history = Vec::new();
    energy_history.push(sys.energy(&u));
    let mut max_update_rel = f64::INFINITY;
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_sweeps {
        let mut max_upd = 0.0f64;
        let mut scale = 0.0f64;
        for &idx in &sweep_order {
            let kind = sys.node_kind(idx);
            if kind == NodeKind::Dirichlet {
                scale = scale.max(u[idx].abs());
                continue;
            }
            let resid = sys.apply_row(&u, idx);
            let diag = sys.diag(idx);
            let mut unew = u[idx] - cfg.omega * resid / diag;
            if kind == NodeKind::Plane && unew < 0.0 {
                unew = 0.0;
            }
            max_upd = max_upd.max((unew - u[idx]).abs());
            u[idx] = unew;
            scale = scale.max(unew.abs());
        }
        sweeps += 1;
        let e = sys.energy(&u);
        let prev = *energy_history.last().unwrap();
        if e > prev + 1e-9 * prev.abs().max(1e-30) {
            return Err(Error::Divergence(format!(
                "energy increased from {prev:.6e} to {e:.6e} at sweep {sweeps}"
            )));
        }
        energy_history.push(e);
        max_update_rel = max_upd / scale.max(1e-300);
        if max_update_rel <= cfg.tol {
            converged = true;
            break;
        }
    }
    let report = SolveReport {
        sweeps,
        converged,
        final_energy: *energy_history.last().unwrap(),
        energy_history,
        max_update_rel,
        wall_seconds: start.elapsed().as_secs_f64(),
    };
    let out = ScalarField::from_values(grid.clone(), u, true)?;
    Ok((out, report))
}

/// Residuals of the complementarity system for a candidate solution:
/// the interior equation residual, plane positivity, the weak contact flux
/// and the complementarity product.
#[derive(Clone, Copy, Debug)]
pub struct SignoriniResiduals {
    /// Max `|K u|_i / cell_volume` over interior nodes.
    pub interior_divergence: f64,
    /// Max equation residual over plane nodes with `u > tol`.
    pub detached_divergence: f64,
    /// Min of `u` over plane nodes.
    pub plane_min: f64,
    /// Max weak flux `A grad u . e_last` over contact nodes (should be <= 0
    /// up to tolerance). The flux is the node residual divided by twice the
    /// in-plane dual cell measure.
    pub contact_flux_max: f64,
    /// Max `|u_i flux_i|` over plane nodes.
    pub complementarity_max: f64,
}

pub fn signorini_residuals(sys: &StiffnessSystem, u: &ScalarField) -> SignoriniResiduals {
    let grid = sys.grid();
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let plane_cell: f64 = (0..dim - 1).map(|a| grid.spacing(a)).product();
    let scale = u.linf().max(1e-300);
    let tol_pos = 1e-8 * scale;
    let mut interior = 0.0f64;
    let mut detached = 0.0f64;
    let mut plane_min = f64::INFINITY;
    let mut flux_max = f64::NEG_INFINITY;
    let mut compl = 0.0f64;
    for idx in 0..grid.num_nodes() {
        match sys.node_kind(idx) {
            NodeKind::Dirichlet => {}
            NodeKind::Interior => {
                interior = interior.max(sys.apply_row(u.values(), idx).abs() / vol);
            }
            NodeKind::Plane => {
                let r = sys.apply_row(u.values(), idx);
                let v = u.value_at(idx);
                plane_min = plane_min.min(v);
                let flux = -r / (2.0 * plane_cell);
                if v > tol_pos {
                    detached = detached.max(r.abs() / vol);
                } else {
                    flux_max = flux_max.max(flux);
                }
                compl = compl.max((v * flux).abs());
            }
        }
    }
    if !flux_max.is_finite() {
        flux_max = 0.0;
    }
    if !plane_min.is_finite() {
        plane_min = 0.0;
    }
    SignoriniResiduals {
        interior_divergence: interior,
        detached_divergence: detached,
        plane_min,
        contact_flux_max: flux_max,
        complementarity_max: compl,
    }
}

/// Dense Cholesky solve of `M x = b` (lower triangular storage, in place).
fn cholesky_solve(mut m: Vec<f64>, n: usize, mut b: Vec<f64>) -> Result<Vec<f64>> {
    for j in 0..n {
        let mut d = m[j * n + j];
        for k in 0..j {
            d -= m[j * n + k] * m[j * n + k];
        }
        if d <= 0.0 {
            return Err(Error::NotSpd(d));
        }
        let d = d.sqrt();
        m[j * n + j] = d;
        for i in (j + 1)..n {
            let mut v = m[i * n + j];
            for k in 0..j {
                v -= m[i * n + k] * m[j * n + k];
            }
            m[i * n + j] = v / d;
        }
    }
    // forward substitution L y = b
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= m[i * n + k] * b[k];
        }
        b[i] = v / m[i * n + i];
    }
    // back substitution L^T x = y
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in (i + 1)..n {
            v -= m[k * n + i] * b[k];
        }
        b[i] = v / m[i * n + i];
    }
    Ok(b)
}

/// KKT record of the oracle solution.
#[derive(Clone, Copy, Debug)]
pub struct OracleReport {
    pub active_set_size: usize,
    pub iterations: usize,
    /// Max violation among stationarity, primal feasibility and multiplier
    /// sign, normalized by the data scale.
    pub kkt_residual: f64,
}

/// Exact solve of the constrained quadratic program by active-set iteration
/// over the thin-plane constraints with dense factorizations. Capped at 1500
/// grid nodes.
pub fn oracle_solve(
    sys: &StiffnessSystem,
    g: &ScalarField,
) -> Result<(ScalarField, OracleReport)> {
    let grid = sys.grid();
    let n = grid.num_nodes();
    if n > 1500 {
        return Err(Error::SizeCap { size: n, cap: 1500 });
    }
    if g.grid() != grid {
        return Err(Error::Precondition("boundary data grid mismatch".into()));
    }
    // free = non-Dirichlet nodes
    let free: Vec<usize> = (0..n)
        .filter(|&i| sys.node_kind(i) != NodeKind::Dirichlet)
        .collect();
    let pos_in_free: Vec<Option<usize>> = {
        let mut v = vec![None; n];
        for (k, &i) in free.iter().enumerate() {
            v[i] = Some(k);
        }
        v
    };
    let nf = free.len();
    let mut u: Vec<f64> = g.values().to_vec();
    let mut active: Vec<bool> = vec![false; nf];

    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > 10 * nf + 20 {
            return Err(Error::Divergence(
                "active-set iteration failed to settle".into(),
            ));
        }
        // unknowns: free nodes not in the active set
        let unknowns: Vec<usize> = (0..nf).filter(|&k| !active[k]).collect();
        let m = unknowns.len();
        // assemble dense K over unknowns and the rhs from pinned values
        let mut kmat = vec![0.0f64; m * m];
        let mut rhs = vec![0.0f64; m];
        // pinned vector: Dirichlet = g, active = 0, unknowns = 0
        let mut pinned = vec![0.0f64; n];
        for i in 0..n {
            if sys.node_kind(i) == NodeKind::Dirichlet {
                pinned[i] = g.value_at(i);
            }
        }
        for (row, &k) in unknowns.iter().enumerate() {
            let i = free[k];
            rhs[row] = -sys.apply_row(&pinned, i);
            // columns: unit vectors on unknowns
            let gmulti = grid.node_multi(i);
            // loop over the stencil of node i to find coupled unknowns
            let mut delta = [-1isize; 3];
            let dim = grid.dim();
            for a in dim..3 {
                delta[a] = 0;
            }
            loop {
                let mut nb = [0usize; 3];
                let mut ok = true;
                for a in 0..dim {
                    let j = gmulti[a] as isize + delta[a];
                    if j < 0 || j as usize >= grid.count(a) {
                        ok = false;
                        break;
                    }
                    nb[a] = j as usize;
                }
                if ok {
                    let jdx = grid.node_index(&nb);
                    if let Some(kj) = pos_in_free[jdx] {
                        if !active[kj] {
                            let col = unknowns.binary_search(&kj).ok();
                            if let Some(col) = col {
                                let code = offset_code(dim, &delta);
                                kmat[row * m + col] +=
                                    sys.stencil[i * sys.stencil_size + code];
                            }
                        }
                    }
                }
                let mut a = dim;
                let mut done = true;
                while a > 0 {
                    a -= 1;
                    if delta[a] < 1 {
                        delta[a] += 1;
                        for b in (a + 1)..dim {
                            delta[b] = -1;
                        }
                        done = false;
                        break;
                    }
                }
                if done {
                    break;
                }
            }
        }
        let x = cholesky_solve(kmat, m, rhs)?;
        for i in 0..n {
            u[i] = pinned[i];
        }
        for (row, &k) in unknowns.iter().enumerate() {
            u[free[k]] = x[row];
        }

        let scale = u.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
        // primal violations: plane unknowns below zero
        let mut violators = Vec::new();
        for &k in &unknowns {
            let i = free[k];
            if sys.node_kind(i) == NodeKind::Plane && u[i] < -1e-12 * scale {
                violators.push(k);
            }
        }
        if !violators.is_empty() {
            for k in violators {
                active[k] = true;
            }
            continue;
        }
        // multipliers on the active set: lambda_i = (K u)_i must be >= 0
        let mut worst: Option<(usize, f64)> = None;
        for k in 0..nf {
            if active[k] {
                let lam = sys.apply_row(&u, free[k]);
                if lam < -1e-12 * scale.max(1.0) {
                    match worst {
                        Some((_, w)) if w <= lam => {}
                        _ => worst = Some((k, lam)),
                    }
                }
            }
        }
        if let Some((k, _)) = worst {
            active[k] = false;
            continue;
        }
        break;
    }

    // KKT residual summary
    let scale = u.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1e-300);
    let mut kkt = 0.0f64;
    for k in 0..nf {
        let i = free[k];
        let r = sys.apply_row(&u, i);
        match sys.node_kind(i) {
            NodeKind::Interior => kkt = kkt.max(r.abs() / scale),
            NodeKind::Plane => {
                if active[k] {
                    kkt = kkt.max((-r).max(0.0) / scale); // multiplier sign
                    kkt = kkt.max(u[i].abs() / scale);
                } else {
                    kkt = kkt.max(r.abs() / scale);
                    kkt = kkt.max((-u[i]).max(0.0) / scale);
                }
            }
            NodeKind::Dirichlet => {}
        }
    }
    let report = OracleReport {
        active_set_size: active.iter().filter(|&&a| a).count(),
        iterations,
        kkt_residual: kkt,
    };
    let out = ScalarField::from_values(grid.clone(), u, g.even())?;
    Ok((out, report))
}
