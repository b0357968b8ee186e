//! Laplace-space collocation solver with Picard linearization.
//!
//! Transforming `D_t^α u + η u u_x - ξ u_xx + ζ u_xxx = f` in time turns each
//! Picard step (advection coefficient frozen at the previous iterate) into a
//! family of linear complex systems, one per contour quadrature node `s_j`:
//!
//! ```text
//!   [ s^α I + η diag(c) D₁ - ξ D₂ + ζ D₃ ] û = s^{α-1} u₀ + f̂(·, s)
//! ```
//!
//! with boundary rows replacing the PDE rows at the domain ends. Solving at
//! every `s_j` and inverting the contour quadrature per node yields the next
//! iterate `u(·, t)`.
//!
//! Boundary data whose transform has poles to the right of the contour's
//! reach (the oscillatory wave-maker signal does) would wreck the quadrature,
//! so those poles are split off: for each pole `p` with residue `g` entering
//! through rhs pattern `r`, the residue vector solves `A(p) ρ = g r`, the
//! rational part `ρ/(s-p) + conj(ρ)/(s-conj p)` is subtracted from the
//! samples, and `2 Re(ρ e^{pt})` is added to the inverted values. The
//! subtraction/addition pair is an exact identity, so poles are split
//! generously rather than sparingly.

use num_complex::Complex64;

use crate::contour::ContourSpec;
use crate::diffmat::{derivative_row, local_diff_matrix, ShapeRule, SparseRowMatrix};
use crate::error::{Error, Result};
use crate::geometry::{build_stencils, NodeSet, Stencil};
use crate::kernels::KernelFamily;
use crate::linalg::{choose_path, solve_linear_with, ComplexSparse};
use crate::par::{self, Exec};
use crate::transforms::{caputo_symbol, SeparableTransform, TimeSignal};

/// Which end of the domain a boundary condition constrains.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// The constrained operator at a boundary node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryOperator {
    /// Value of `u`.
    Dirichlet,
    /// Value of `u_x`, collocated on the boundary node's stencil.
    Neumann,
}

/// One boundary condition with its transformed data `ĝ(s)`.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryCondition {
    pub side: Side,
    pub operator: BoundaryOperator,
    pub data: TimeSignal,
}

/// Exact solution callback `(x, t) -> u`, when one is known.
pub type ExactFn = std::sync::Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A fully specified initial-boundary-value problem on a node set.
#[derive(Clone)]
pub struct ProblemSpec {
    /// Fractional order in `(0, 1]`.
    pub alpha: f64,
    /// Advection strength (the nonlinear term `η u u_x`).
    pub eta: f64,
    /// Diffusion coefficient (`-ξ u_xx`).
    pub xi: f64,
    /// Dispersion coefficient (`ζ u_xxx`).
    pub zeta: f64,
    pub domain: (f64, f64),
    /// Initial values per node.
    pub u0: Vec<f64>,
    /// Transformed forcing `f̂(x, s)`.
    pub forcing: SeparableTransform,
    pub boundary: Vec<BoundaryCondition>,
    pub exact: Option<ExactFn>,
}

impl ProblemSpec {
    pub fn validate(&self, nodes: &NodeSet) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::param(format!(
                "fractional order must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        for (name, v) in [("eta", self.eta), ("xi", self.xi), ("zeta", self.zeta)] {
            if !v.is_finite() {
                return Err(Error::param(format!("coefficient {name} must be finite")));
            }
        }
        if !(self.domain.0 < self.domain.1) {
            return Err(Error::geometry(format!(
                "domain [{}, {}] is degenerate",
                self.domain.0, self.domain.1
            )));
        }
        if self.u0.len() != nodes.len() {
            return Err(Error::param(format!(
                "initial data has {} values for {} nodes",
                self.u0.len(),
                nodes.len()
            )));
        }
        let expected = if self.zeta == 0.0 { 2 } else { 3 };
        if self.boundary.len() != expected {
            return Err(Error::param(format!(
                "a {} problem needs exactly {expected} boundary conditions, got {}",
                if self.zeta == 0.0 {
                    "second-order"
                } else {
                    "third-order"
                },
                self.boundary.len()
            )));
        }
        Ok(())
    }
}

/// Spatial discretization shared across solves: stencils, the three
/// differentiation matrices, and any boundary derivative rows.
pub struct Discretization {
    pub nodes: NodeSet,
    pub stencils: Vec<Stencil>,
    pub d1: SparseRowMatrix,
    pub d2: SparseRowMatrix,
    pub d3: SparseRowMatrix,
    /// Derivative row collocated at the left/right boundary node, present
    /// when a Neumann condition needs it.
    pub neumann_left: Option<(Vec<usize>, Vec<f64>)>,
    pub neumann_right: Option<(Vec<usize>, Vec<f64>)>,
}

impl Discretization {
    pub fn build(
        p: &ProblemSpec,
        nodes: NodeSet,
        n_x: usize,
        family: KernelFamily,
        rule: &ShapeRule,
        exec: &Exec,
    ) -> Result<Self> {
        let stencils = build_stencils(&nodes, n_x)?;
        let d1 = local_diff_matrix(&nodes, &stencils, family, rule, 1, exec)?;
        let d2 = local_diff_matrix(&nodes, &stencils, family, rule, 2, exec)?;
        let d3 = local_diff_matrix(&nodes, &stencils, family, rule, 3, exec)?;
        let mut neumann_left = None;
        let mut neumann_right = None;
        for bc in &p.boundary {
            if bc.operator == BoundaryOperator::Neumann {
                let node = match bc.side {
                    Side::Left => 0,
                    Side::Right => nodes.len() - 1,
                };
                let row = derivative_row(&nodes, &stencils[node], family, rule, 1)?;
                match bc.side {
                    Side::Left => neumann_left = Some(row),
                    Side::Right => neumann_right = Some(row),
                }
            }
        }
        Ok(Discretization {
            nodes,
            stencils,
            d1,
            d2,
            d3,
            neumann_left,
            neumann_right,
        })
    }
}

/// Solver knobs with the stock defaults.
#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Picard stop: `|u^n - u^{n-1}|_inf <= tol (1 + |u^n|_inf)`.
    pub tol_picard: f64,
    pub max_picard: u32,
    /// Abort when an iterate's norm exceeds this.
    pub divergence_guard: f64,
    /// Node count above which banded factorization takes over (when the
    /// bandwidth is narrow enough).
    pub dense_threshold: usize,
    pub exec: Exec,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol_picard: 1e-9,
            max_picard: 50,
            divergence_guard: 1e6,
            dense_threshold: crate::linalg::DENSE_DEFAULT_THRESHOLD,
            exec: Exec::default(),
        }
    }
}

/// Where each boundary condition lands in the system: Dirichlet rows sit on
/// their boundary node; a Neumann row displaces the PDE row adjacent to its
/// boundary, keeping the system square.
fn boundary_row_index(n: usize, bc: &BoundaryCondition) -> usize {
    match (bc.side, bc.operator) {
        (Side::Left, BoundaryOperator::Dirichlet) => 0,
        (Side::Right, BoundaryOperator::Dirichlet) => n - 1,
        (Side::Left, BoundaryOperator::Neumann) => 1,
        (Side::Right, BoundaryOperator::Neumann) => n - 2,
    }
}

struct RowPlan {
    /// `bc_of_row[i] = Some(k)` when row `i` carries boundary condition `k`.
    bc_of_row: Vec<Option<usize>>,
}

impl RowPlan {
    fn build(p: &ProblemSpec, n: usize) -> Result<Self> {
        let mut bc_of_row = vec![None; n];
        let mut dirichlet = (false, false);
        for (k, bc) in p.boundary.iter().enumerate() {
            let row = boundary_row_index(n, bc);
            if bc_of_row[row].is_some() {
                return Err(Error::param(format!(
                    "two boundary conditions collide on row {row}"
                )));
            }
            bc_of_row[row] = Some(k);
            if bc.operator == BoundaryOperator::Dirichlet {
                match bc.side {
                    Side::Left => dirichlet.0 = true,
                    Side::Right => dirichlet.1 = true,
                }
            }
        }
        if !(dirichlet.0 && dirichlet.1) {
            return Err(Error::param(
                "need a Dirichlet condition on each end of the domain".to_string(),
            ));
        }
        Ok(RowPlan { bc_of_row })
    }
}

/// Real, `s`-independent part of the collocation system for one frozen
/// advection coefficient. Instantiating at `s` adds `s^α` on interior
/// diagonals and fills the right-hand side.
struct SystemTemplate {
    rows: Vec<TemplateRow>,
}

enum TemplateRow {
    Interior {
        cols: Vec<usize>,
        vals: Vec<f64>,
        diag_pos: usize,
        u0: f64,
    },
    Boundary {
        cols: Vec<usize>,
        vals: Vec<f64>,
        bc_index: usize,
    },
}

fn assemble_template(
    p: &ProblemSpec,
    disc: &Discretization,
    plan: &RowPlan,
    coeff: &[f64],
) -> Result<SystemTemplate> {
    let n = disc.nodes.len();
    if coeff.len() != n {
        return Err(Error::param(format!(
            "advection coefficient has {} values for {n} nodes",
            coeff.len()
        )));
    }
    if coeff.iter().any(|c| !c.is_finite()) {
        return Err(Error::param(
            "advection coefficient contains non-finite values".to_string(),
        ));
    }
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        if let Some(k) = plan.bc_of_row[i] {
            let bc = &p.boundary[k];
            let (cols, vals) = match bc.operator {
                BoundaryOperator::Dirichlet => {
                    let node = match bc.side {
                        Side::Left => 0,
                        Side::Right => n - 1,
                    };
                    (vec![node], vec![1.0])
                }
                BoundaryOperator::Neumann => {
                    let row = match bc.side {
                        Side::Left => disc.neumann_left.as_ref(),
                        Side::Right => disc.neumann_right.as_ref(),
                    };
                    let (cols, vals) = row.ok_or_else(|| {
                        Error::param(
                            "discretization was built without the Neumann row \
                             this problem needs"
                                .to_string(),
                        )
                    })?;
                    (cols.clone(), vals.clone())
                }
            };
            rows.push(TemplateRow::Boundary {
                cols,
                vals,
                bc_index: k,
            });
            continue;
        }
        let (cols, v1) = disc.d1.row(i);
        let (_, v2) = disc.d2.row(i);
        let (_, v3) = disc.d3.row(i);
        let scale = p.eta * coeff[i];
        let vals: Vec<f64> = (0..cols.len())
            .map(|k| scale * v1[k] - p.xi * v2[k] + p.zeta * v3[k])
            .collect();
        let diag_pos = cols
            .binary_search(&i)
            .map_err(|_| Error::geometry(format!("stencil at node {i} misses its center")))?;
        rows.push(TemplateRow::Interior {
            cols: cols.to_vec(),
            vals,
            diag_pos,
            u0: p.u0[i],
        });
    }
    Ok(SystemTemplate { rows })
}

impl SystemTemplate {
    /// Builds `(A, b)` at one transform point. `forcing[i]` is `f̂(x_i, s)`;
    /// `boundary[k]` is `ĝ_k(s)`.
    fn instantiate(
        &self,
        s_alpha: Complex64,
        s_alpha_m1: Complex64,
        forcing: &[Complex64],
        boundary: &[Complex64],
    ) -> Result<(ComplexSparse, Vec<Complex64>)> {
        let n = self.rows.len();
        let mut rows = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for (i, row) in self.rows.iter().enumerate() {
            match row {
                TemplateRow::Interior {
                    cols,
                    vals,
                    diag_pos,
                    u0,
                } => {
                    let mut cvals: Vec<Complex64> =
                        vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                    cvals[*diag_pos] += s_alpha;
                    rows.push((cols.clone(), cvals));
                    b.push(s_alpha_m1 * *u0 + forcing[i]);
                }
                TemplateRow::Boundary {
                    cols,
                    vals,
                    bc_index,
                } => {
                    rows.push((
                        cols.clone(),
                        vals.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
                    ));
                    b.push(boundary[*bc_index]);
                }
            }
        }
        Ok((ComplexSparse::new(n, rows)?, b))
    }
}

/// Assembles the Laplace-space collocation system for one frozen coefficient
/// at one transform point. Interior row `i` is
/// `s^α e_i + η c_i D₁[i] - ξ D₂[i] + ζ D₃[i]` with
/// `b_i = s^{α-1} u₀_i + f̂(x_i, s)`; boundary rows carry the constraint
/// weights with `b = ĝ(s)`.
pub fn assemble_laplace_system(
    p: &ProblemSpec,
    disc: &Discretization,
    coeff: &[f64],
    s: Complex64,
) -> Result<(ComplexSparse, Vec<Complex64>)> {
    p.validate(&disc.nodes)?;
    let n = disc.nodes.len();
    let plan = RowPlan::build(p, n)?;
    let template = assemble_template(p, disc, &plan, coeff)?;
    let (s_alpha, s_alpha_m1) = caputo_symbol(s, p.alpha)?;
    let forcing = p.forcing.sample(s, n)?;
    let boundary = p
        .boundary
        .iter()
        .map(|bc| bc.data.laplace(s))
        .collect::<Result<Vec<_>>>()?;
    template.instantiate(s_alpha, s_alpha_m1, &forcing, &boundary)
}

/// Everything about one transform point that does not change across Picard
/// iterations.
struct FrequencyPoint {
    s_alpha: Complex64,
    s_alpha_m1: Complex64,
    forcing: Vec<Complex64>,
    boundary: Vec<Complex64>,
}

/// One split-off transform pole: solve `A(p) ρ = rhs` once per iteration,
/// then `2 Re(ρ e^{pt})` joins the inverted values.
struct PoleSystem {
    pole: Complex64,
    s_alpha: Complex64,
    /// `g r`: residue times rhs pattern; `s^{α-1} u₀` and the regular
    /// forcing are analytic at `p` and do not contribute.
    rhs: Vec<Complex64>,
}

struct FrequencyTable {
    points: Vec<FrequencyPoint>,
    samples_s: Vec<Complex64>,
    poles: Vec<PoleSystem>,
}

fn build_frequency_table(
    p: &ProblemSpec,
    disc: &Discretization,
    plan: &RowPlan,
    contour: &ContourSpec,
) -> Result<FrequencyTable> {
    let n = disc.nodes.len();
    let nodes = contour.nodes();
    let mut points = Vec::with_capacity(nodes.len());
    let mut samples_s = Vec::with_capacity(nodes.len());
    for node in &nodes {
        let (s_alpha, s_alpha_m1) = caputo_symbol(node.s, p.alpha)?;
        points.push(FrequencyPoint {
            s_alpha,
            s_alpha_m1,
            forcing: p.forcing.sample(node.s, n)?,
            boundary: p
                .boundary
                .iter()
                .map(|bc| bc.data.laplace(node.s))
                .collect::<Result<Vec<_>>>()?,
        });
        samples_s.push(node.s);
    }
    // Pole collection: boundary data first, then forcing terms, merged by
    // exact pole location so coincident poles share one solve.
    let reach = contour.min_real_part();
    let mut poles: Vec<PoleSystem> = Vec::new();
    let mut add_pole = |pole: Complex64, rhs_add: Vec<Complex64>| -> Result<()> {
        if let Some(existing) = poles.iter_mut().find(|ps| ps.pole == pole) {
            for (dst, src) in existing.rhs.iter_mut().zip(&rhs_add) {
                *dst += src;
            }
            return Ok(());
        }
        let (s_alpha, _) = caputo_symbol(pole, p.alpha)?;
        poles.push(PoleSystem {
            pole,
            s_alpha,
            rhs: rhs_add,
        });
        Ok(())
    };
    for (k, bc) in p.boundary.iter().enumerate() {
        let row = boundary_row_index(n, bc);
        for (pole, g) in bc.data.upper_poles(reach) {
            let mut rhs = vec![Complex64::new(0.0, 0.0); n];
            rhs[row] = g;
            add_pole(pole, rhs)?;
            let _ = k;
        }
    }
    for (spatial, signal) in &p.forcing.terms {
        for (pole, g) in signal.upper_poles(reach) {
            let mut rhs = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                if plan.bc_of_row[i].is_none() {
                    rhs[i] = g * spatial[i];
                }
            }
            add_pole(pole, rhs)?;
        }
    }
    Ok(FrequencyTable {
        points,
        samples_s,
        poles,
    })
}

/// Laplace-space samples and pole residues from one coefficient freeze.
struct SweepData {
    /// `samples[j][i] = û(x_i, s_j)`, already regularized (pole parts
    /// subtracted).
    samples: Vec<Vec<Complex64>>,
    /// `(pole, residue vector)` pairs.
    residues: Vec<(Complex64, Vec<Complex64>)>,
    /// `|A x - b|_inf` per solved system (contour points, then poles).
    residual_norms: Vec<f64>,
}

fn sweep_frequencies(
    p: &ProblemSpec,
    disc: &Discretization,
    plan: &RowPlan,
    table: &FrequencyTable,
    coeff: &[f64],
    opts: &SolverOptions,
) -> Result<SweepData> {
    let template = assemble_template(p, disc, plan, coeff)?;
    let n_contour = table.points.len();
    let total = n_contour + table.poles.len();
    let solved = par::map_indexed(total, opts.exec, |idx| -> Result<(Vec<Complex64>, f64)> {
        let (a, b) = if idx < n_contour {
            let pt = &table.points[idx];
            template.instantiate(pt.s_alpha, pt.s_alpha_m1, &pt.forcing, &pt.boundary)?
        } else {
            let ps = &table.poles[idx - n_contour];
            let zero = Complex64::new(0.0, 0.0);
            let (a, _) = template.instantiate(ps.s_alpha, zero, &vec![zero; ps.rhs.len()], &vec![
                zero;
                p.boundary.len()
            ])?;
            (a, ps.rhs.clone())
        };
        let context = if idx < n_contour {
            format!("contour node {idx}")
        } else {
            format!("pole system {}", idx - n_contour)
        };
        let path = choose_path(&a, opts.dense_threshold);
        let x = solve_linear_with(&a, &b, path, &context)?;
        let ax = a.matvec(&x);
        let res = ax
            .iter()
            .zip(&b)
            .map(|(l, r)| (l - r).norm())
            .fold(0.0, f64::max);
        Ok((x, res))
    });
    let mut samples = Vec::with_capacity(n_contour);
    let mut residues = Vec::with_capacity(table.poles.len());
    let mut residual_norms = Vec::with_capacity(total);
    let mut iter = solved.into_iter();
    for _ in 0..n_contour {
        let (x, r) = iter.next().unwrap()?;
        samples.push(x);
        residual_norms.push(r);
    }
    for ps in &table.poles {
        let (x, r) = iter.next().unwrap()?;
        residues.push((ps.pole, x));
        residual_norms.push(r);
    }
    // Regularize the contour samples: subtract each pole's rational term and
    // its conjugate partner.
    for (j, s) in table.samples_s.iter().enumerate() {
        for (pole, rho) in &residues {
            let d = 1.0 / (s - pole);
            let dc = 1.0 / (s - pole.conj());
            for (u, r) in samples[j].iter_mut().zip(rho) {
                *u -= r * d + r.conj() * dc;
            }
        }
    }
    Ok(SweepData {
        samples,
        residues,
        residual_norms,
    })
}

/// Inverts one sweep at time `t`. Returns per-node values and the worst
/// imaginary leakage.
fn invert_sweep(
    sweep: &SweepData,
    contour: &ContourSpec,
    t: f64,
    n: usize,
) -> Result<(Vec<f64>, f64)> {
    let coeffs = contour.time_coefficients(t)?;
    let pole_factors: Vec<(Complex64, &Vec<Complex64>)> = sweep
        .residues
        .iter()
        .map(|(pole, rho)| ((pole * t).exp(), rho))
        .collect();
    let mut values = Vec::with_capacity(n);
    let mut leakage = 0.0f64;
    for i in 0..n {
        let mut v = 0.0;
        for (factor, rho) in &pole_factors {
            v += 2.0 * (factor * rho[i]).re;
        }
        for (c, row) in coeffs.iter().zip(&sweep.samples) {
            v += (c * row[i]).im;
        }
        let leak = (coeffs[0] * sweep.samples[0][i]).re.abs();
        leakage = leakage.max(leak);
        values.push(v);
    }
    Ok((values, leakage))
}

/// Outcome of one Picard solve at a single time.
#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub values: Vec<f64>,
    pub iterations: u32,
    /// Worst imaginary leakage of the final inversion.
    pub imag_residue: f64,
    /// `residuals[iteration][k]`: linear residual norms per solved system
    /// (contour nodes first, then pole systems).
    pub residuals: Vec<Vec<f64>>,
}

/// Picard iteration at time `t`: freeze the advection coefficient at the
/// previous iterate (`initial`, or the initial data), sweep the transform
/// points, invert, and repeat until the iterate settles.
pub fn picard_solve(
    p: &ProblemSpec,
    disc: &Discretization,
    contour: &ContourSpec,
    t: f64,
    opts: &SolverOptions,
    initial: Option<&[f64]>,
) -> Result<PicardOutcome> {
    p.validate(&disc.nodes)?;
    contour.validate()?;
    let plan = RowPlan::build(p, disc.nodes.len())?;
    let table = build_frequency_table(p, disc, &plan, contour)?;
    picard_solve_prepared(p, disc, &plan, &table, contour, t, opts, initial)
}

#[allow(clippy::too_many_arguments)]
fn picard_solve_prepared(
    p: &ProblemSpec,
    disc: &Discretization,
    plan: &RowPlan,
    table: &FrequencyTable,
    contour: &ContourSpec,
    t: f64,
    opts: &SolverOptions,
    initial: Option<&[f64]>,
) -> Result<PicardOutcome> {
    let n = disc.nodes.len();
    let mut coeff: Vec<f64> = initial.unwrap_or(&p.u0).to_vec();
    if coeff.len() != n {
        return Err(Error::param(format!(
            "initial iterate has {} values for {n} nodes",
            coeff.len()
        )));
    }
    let mut residuals = Vec::new();
    for iteration in 1..=opts.max_picard {
        let sweep = sweep_frequencies(p, disc, plan, table, &coeff, opts)?;
        let (values, leakage) = invert_sweep(&sweep, contour, t, n)?;
        residuals.push(sweep.residual_norms);
        let norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !norm.is_finite() || norm > opts.divergence_guard {
            return Err(Error::PicardDiverged {
                norm,
                guard: opts.divergence_guard,
            });
        }
        let change = values
            .iter()
            .zip(&coeff)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if change <= opts.tol_picard * (1.0 + norm) {
            return Ok(PicardOutcome {
                values,
                iterations: iteration,
                imag_residue: leakage,
                residuals,
            });
        }
        if iteration == opts.max_picard {
            return Err(Error::PicardNonConvergence {
                iterations: iteration,
                change,
                tol: opts.tol_picard * (1.0 + norm),
            });
        }
        coeff = values;
    }
    unreachable!("loop exits by return");
}

/// Full solve output over a time grid.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub times: Vec<f64>,
    /// `values[k][i] = u(x_i, times[k])`.
    pub values: Vec<Vec<f64>>,
    pub iterations: Vec<u32>,
    /// Worst imaginary leakage per time.
    pub imag_residue: Vec<f64>,
    /// Linear residual norms per time, `[iteration][system]`.
    pub residuals: Vec<Vec<Vec<f64>>>,
}

/// Solves at every time in `times` (ascending).
///
/// Linear problems (`η = 0`) need a single frequency sweep, reused for every
/// time with only the inversion varying; nonlinear problems run Picard per
/// time sequentially, warm-starting each from the previous solution.
pub fn solve_time_grid(
    p: &ProblemSpec,
    disc: &Discretization,
    contour: &ContourSpec,
    times: &[f64],
    opts: &SolverOptions,
) -> Result<SolveResult> {
    p.validate(&disc.nodes)?;
    contour.validate()?;
    if times.is_empty() {
        return Err(Error::param("need at least one output time".to_string()));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param(
            "output times must be strictly increasing".to_string(),
        ));
    }
    let n = disc.nodes.len();
    let plan = RowPlan::build(p, n)?;
    let table = build_frequency_table(p, disc, &plan, contour)?;
    if p.eta == 0.0 {
        let sweep = sweep_frequencies(p, disc, &plan, &table, &p.u0, opts)?;
        let inverted = par::map_indexed(times.len(), opts.exec, |k| {
            invert_sweep(&sweep, contour, times[k], n)
        });
        let mut values = Vec::with_capacity(times.len());
        let mut leakages = Vec::with_capacity(times.len());
        for item in inverted {
            let (v, leak) = item?;
            values.push(v);
            leakages.push(leak);
        }
        return Ok(SolveResult {
            times: times.to_vec(),
            values,
            iterations: vec![1; times.len()],
            imag_residue: leakages,
            residuals: vec![vec![sweep.residual_norms.clone()]; times.len()],
        });
    }
    let mut values = Vec::with_capacity(times.len());
    let mut iterations = Vec::with_capacity(times.len());
    let mut leakages = Vec::with_capacity(times.len());
    let mut residuals = Vec::with_capacity(times.len());
    let mut warm: Option<Vec<f64>> = None;
    for &t in times {
        let outcome = picard_solve_prepared(
            p,
            disc,
            &plan,
            &table,
            contour,
            t,
            opts,
            warm.as_deref(),
        )
        .map_err(|e| {
            Error::param(format!("solve failed at t = {t}: {e}"))
        })?;
        warm = Some(outcome.values.clone());
        values.push(outcome.values);
        iterations.push(outcome.iterations);
        leakages.push(outcome.imag_residue);
        residuals.push(outcome.residuals);
    }
    Ok(SolveResult {
        times: times.to_vec(),
        values,
        iterations,
        imag_residue: leakages,
        residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::lookup_preset;
    use crate::contour::ContourKind;
    use approx::assert_relative_eq;

    fn dirichlet(side: Side, data: TimeSignal) -> BoundaryCondition {
        BoundaryCondition {
            side,
            operator: BoundaryOperator::Dirichlet,
            data,
        }
    }

    /// Heat-type linear problem: eta = 0, xi = 1, step input on the left.
    fn heat_problem(n: usize) -> (ProblemSpec, Discretization) {
        let nodes = NodeSet::uniform(0.0, 1.0, n).unwrap();
        let p = ProblemSpec {
            alpha: 0.5,
            eta: 0.0,
            xi: 1.0,
            zeta: 0.0,
            domain: (0.0, 1.0),
            u0: vec![0.0; n],
            forcing: SeparableTransform::default(),
            boundary: vec![
                dirichlet(Side::Left, TimeSignal::Monomial { coeff: 1.0, power: 0.0 }),
                dirichlet(Side::Right, TimeSignal::Zero),
            ],
            exact: None,
        };
        let disc = Discretization::build(
            &p,
            nodes,
            7,
            KernelFamily::Multiquadric,
            &ShapeRule::default_local(),
            &Exec::sequential(),
        )
        .unwrap();
        (p, disc)
    }

    #[test]
    fn assembled_system_matches_heat_structure() {
        // eta=0, zeta=0, xi=1, alpha=1: interior rows are s e_i - D2 rows,
        // boundary rows are unit, b = 0 except the boundary data.
        let (mut p, disc) = heat_problem(9);
        p.alpha = 1.0;
        p.boundary = vec![
            dirichlet(Side::Left, TimeSignal::Zero),
            dirichlet(Side::Right, TimeSignal::Zero),
        ];
        let s = Complex64::new(2.0, 1.0);
        let (a, b) = assemble_laplace_system(&p, &disc, &[0.0; 9], s).unwrap();
        for i in 1..8 {
            let (cols, v2) = disc.d2.row(i);
            for (&j, &w) in cols.iter().zip(v2) {
                let expect = if j == i { s - w } else { Complex64::new(-w, 0.0) };
                assert_relative_eq!((a.entry(i, j) - expect).norm(), 0.0, epsilon = 1e-14);
            }
        }
        assert_eq!(a.entry(0, 0), Complex64::new(1.0, 0.0));
        assert_eq!(a.entry(8, 8), Complex64::new(1.0, 0.0));
        for v in &b {
            assert_eq!(*v, Complex64::new(0.0, 0.0));
        }
        // Zero data means a zero solution.
        let x = crate::linalg::solve_linear(&a, &b, "test").unwrap();
        assert!(x.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn zero_coefficient_removes_advection_dependence() {
        let (mut p, disc) = heat_problem(9);
        let s = Complex64::new(3.0, -2.0);
        p.eta = 1.0;
        let (a1, _) = assemble_laplace_system(&p, &disc, &[0.0; 9], s).unwrap();
        p.eta = 7.0;
        let (a2, _) = assemble_laplace_system(&p, &disc, &[0.0; 9], s).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(a1.entry(i, j), a2.entry(i, j));
            }
        }
    }

    #[test]
    fn fractional_initial_data_scales_rhs_by_symbol() {
        let (mut p, disc) = heat_problem(9);
        p.u0 = vec![1.0; 9];
        let (_, b) = assemble_laplace_system(&p, &disc, &[0.0; 9], Complex64::new(4.0, 0.0))
            .unwrap();
        // s^{alpha-1} = 4^{-1/2} = 0.5 on interior rows.
        for (i, v) in b.iter().enumerate() {
            if i == 0 || i == 8 {
                continue;
            }
            assert_relative_eq!(v.re, 0.5, max_relative = 1e-15);
            assert_relative_eq!(v.im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn boundary_condition_count_is_enforced() {
        let (mut p, disc) = heat_problem(9);
        p.zeta = 1.0; // third order now needs 3 conditions
        let err = assemble_laplace_system(&p, &disc, &[0.0; 9], Complex64::new(1.0, 0.0))
            .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
        p.zeta = 0.0;
        p.boundary.push(BoundaryCondition {
            side: Side::Right,
            operator: BoundaryOperator::Neumann,
            data: TimeSignal::Zero,
        });
        assert!(
            assemble_laplace_system(&p, &disc, &[0.0; 9], Complex64::new(1.0, 0.0)).is_err()
        );
    }

    #[test]
    fn linear_problem_converges_in_two_iterations() {
        let (p, disc) = heat_problem(17);
        let contour = lookup_preset(ContourKind::Parabolic, (0.5, 5.0), 40).unwrap();
        let opts = SolverOptions {
            exec: Exec::sequential(),
            ..SolverOptions::default()
        };
        let out = picard_solve(&p, &disc, &contour, 1.0, &opts, None).unwrap();
        assert_eq!(out.iterations, 2);
        assert_eq!(out.residuals.len(), 2);
        assert!(out.imag_residue <= 1e-8 * (1.0 + 1.0));
        // Boundary values are enforced: u(0) = 1, u(1) = 0 at t = 1.
        assert_relative_eq!(out.values[0], 1.0, max_relative = 1e-9);
        assert!(out.values[16].abs() <= 1e-9);
        // The diffusion profile decreases monotonically into the domain.
        for w in out.values.windows(2) {
            assert!(w[1] < w[0] + 1e-9);
        }
    }

    #[test]
    fn parallel_and_sequential_solves_are_bit_identical() {
        let (p, disc) = heat_problem(17);
        let contour = lookup_preset(ContourKind::Parabolic, (0.5, 5.0), 40).unwrap();
        let seq = SolverOptions {
            exec: Exec::sequential(),
            ..SolverOptions::default()
        };
        let par = SolverOptions::default();
        let a = picard_solve(&p, &disc, &contour, 1.0, &seq, None).unwrap();
        let b = picard_solve(&p, &disc, &contour, 1.0, &par, None).unwrap();
        assert_eq!(a.values.len(), b.values.len());
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn doubling_linear_data_doubles_the_solution() {
        let (p, disc) = heat_problem(17);
        let contour = lookup_preset(ContourKind::Parabolic, (0.5, 5.0), 40).unwrap();
        let opts = SolverOptions {
            exec: Exec::sequential(),
            ..SolverOptions::default()
        };
        let base = picard_solve(&p, &disc, &contour, 1.0, &opts, None).unwrap();
        let mut doubled = p.clone();
        doubled.boundary[0].data = TimeSignal::Monomial { coeff: 2.0, power: 0.0 };
        let scaled = picard_solve(&doubled, &disc, &contour, 1.0, &opts, None).unwrap();
        let norm = base.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (s, b) in scaled.values.iter().zip(&base.values) {
            assert!((s - 2.0 * b).abs() <= 1e-9 * norm);
        }
    }

    #[test]
    fn alpha_one_system_uses_the_classical_symbol_exactly() {
        let (mut p, disc) = heat_problem(9);
        p.alpha = 1.0;
        p.u0 = vec![0.7; 9];
        let s = Complex64::new(1.5, 2.5);
        let (a, b) = assemble_laplace_system(&p, &disc, &[0.0; 9], s).unwrap();
        for i in 1..8 {
            let expected_diag = s - Complex64::new(disc.d2.entry(i, i), 0.0);
            assert_eq!(a.entry(i, i), expected_diag);
            assert_eq!(b[i], Complex64::new(0.7, 0.0));
        }
    }

    /// The wave-maker signal's poles sit right of the contour; the split
    /// must still produce contour-independent answers. Two very different
    /// contours agreeing pins the whole mechanism.
    #[test]
    fn pole_split_makes_solution_contour_independent() {
        let n = 41;
        let nodes = NodeSet::uniform(-1.0, 1.0, n).unwrap();
        let p = ProblemSpec {
            alpha: 0.5,
            eta: 0.0,
            xi: 1.0,
            zeta: 0.0,
            domain: (-1.0, 1.0),
            u0: vec![0.0; n],
            forcing: SeparableTransform::default(),
            boundary: vec![
                dirichlet(
                    Side::Left,
                    TimeSignal::SineTanh {
                        omega0: 20.0 * std::f64::consts::PI,
                        steepness: 5.0,
                    },
                ),
                dirichlet(Side::Right, TimeSignal::Zero),
            ],
            exact: None,
        };
        let disc = Discretization::build(
            &p,
            nodes,
            9,
            KernelFamily::Multiquadric,
            &ShapeRule::default_local(),
            &Exec::sequential(),
        )
        .unwrap();
        let opts = SolverOptions {
            exec: Exec::sequential(),
            ..SolverOptions::default()
        };
        let t = 0.8;
        let par = lookup_preset(ContourKind::Parabolic, (0.05, 1.8), 60).unwrap();
        let hyp = lookup_preset(ContourKind::Hyperbolic, (0.05, 1.8), 60).unwrap();
        let a = picard_solve(&p, &disc, &par, t, &opts, None).unwrap();
        let b = picard_solve(&p, &disc, &hyp, t, &opts, None).unwrap();
        let scale = a.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(scale > 0.05, "boundary forcing should reach the interior");
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!(
                (x - y).abs() <= 1e-6 * scale.max(1.0),
                "contour disagreement: {x} vs {y}"
            );
        }
        // The boundary value itself must match the driving signal.
        let g = (20.0 * std::f64::consts::PI * t).sin() * (5.0 * t).tanh();
        assert_relative_eq!(a.values[0], g, max_relative = 1e-6, epsilon = 1e-9);
    }

    #[test]
    fn nonconvergence_is_reported_with_counts() {
        let (mut p, disc) = heat_problem(17);
        p.eta = 1.0; // nonlinear now
        let contour = lookup_preset(ContourKind::Parabolic, (0.5, 5.0), 40).unwrap();
        let opts = SolverOptions {
            max_picard: 1,
            exec: Exec::sequential(),
            ..SolverOptions::default()
        };
        let err = picard_solve(&p, &disc, &contour, 1.0, &opts, None).unwrap_err();
        assert!(matches!(err, Error::PicardNonConvergence { iterations: 1, .. }));
    }

    #[test]
    fn time_grid_linear_path_matches_per_time_solves() {
        let (p, disc) = heat_problem(17);
        let contour = lookup_preset(ContourKind::Parabolic, (0.5, 5.0), 40).unwrap();
        let opts = SolverOptions {
            exec: Exec::sequential(),
            ..SolverOptions::default()
        };
        let times = [0.6, 1.0, 2.0];
        let grid = solve_time_grid(&p, &disc, &contour, &times, &opts).unwrap();
        assert_eq!(grid.iterations, vec![1, 1, 1]);
        for (k, &t) in times.iter().enumerate() {
            let single = picard_solve(&p, &disc, &contour, t, &opts, None).unwrap();
            for (a, b) in grid.values[k].iter().zip(&single.values) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        // Times must be sorted.
        assert!(solve_time_grid(&p, &disc, &contour, &[1.0, 0.5], &opts).is_err());
    }
}
