//! Radial-basis differentiation matrices.
//!
//! Derivative weights at a node come from collocation on its stencil: with
//! `K[j][k] = phi(|x_j - x_k|)` over stencil members and
//! `b[j] = phi^(m)(x_i - x_j)`, the weight vector solves `K w = b` (K is
//! symmetric), and `sum_j w_j f(x_j)` approximates the m-th derivative of `f`
//! at `x_i`. The global variant uses every node as the stencil and yields a
//! dense matrix; the local variant scatters per-stencil rows into a sparse
//! matrix whose bandwidth is set by the stencil width.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{NodeSet, Stencil};
use crate::kernels::{Kernel, KernelFamily};
use crate::linalg::RealLu;
use crate::par::{self, Exec};

/// Below this ratio of extreme |U_ii| magnitudes a weight system is close
/// enough to singular that the computed row deserves a warning.
pub const CONDITION_PROXY_WARN: f64 = 1e-14;

/// How the kernel shape parameter is chosen for a weight system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ShapeRule {
    /// Use this value everywhere.
    Fixed(f64),
    /// `epsilon = factor / half_width`, where the half-width is the largest
    /// distance from the stencil center to a member (or a caller-supplied
    /// scale for global operators). Flatter stencils get sharper kernels.
    HalfWidth { factor: f64 },
}

impl ShapeRule {
    /// The stock local rule: `epsilon = 1 / (2 * half_width)`.
    pub fn default_local() -> Self {
        ShapeRule::HalfWidth { factor: 0.5 }
    }

    pub fn resolve(&self, half_width: f64) -> Result<f64> {
        match *self {
            ShapeRule::Fixed(eps) => {
                if !(eps > 0.0) || !eps.is_finite() {
                    return Err(Error::param(format!(
                        "fixed shape parameter must be positive and finite, got {eps}"
                    )));
                }
                Ok(eps)
            }
            ShapeRule::HalfWidth { factor } => {
                if !(factor > 0.0) || !factor.is_finite() {
                    return Err(Error::param(format!(
                        "shape half-width factor must be positive and finite, got {factor}"
                    )));
                }
                if !(half_width > 0.0) || !half_width.is_finite() {
                    return Err(Error::geometry(format!(
                        "stencil half-width must be positive and finite, got {half_width}"
                    )));
                }
                Ok(factor / half_width)
            }
        }
    }
}

/// The stock global shape parameter: one over the domain length.
pub fn default_global_shape(domain: (f64, f64)) -> f64 {
    1.0 / (domain.1 - domain.0)
}

/// Symmetric kernel collocation matrix `K[i][j] = phi(|x_i - x_j|)`.
///
/// The upper triangle is computed and mirrored so symmetry holds bitwise.
pub fn interpolation_matrix(coords: &[f64], kernel: &Kernel) -> DMatrix<f64> {
    let n = coords.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = kernel.value((coords[i] - coords[j]).abs());
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

fn check_order(order: usize) -> Result<()> {
    if order > 3 {
        return Err(Error::param(format!(
            "derivative order must be at most 3, got {order}"
        )));
    }
    Ok(())
}

/// Dense differentiation matrix using every node as one big stencil.
///
/// Row `i` holds the weights for the `order`-th derivative at `x_i`. The
/// caller fixes the kernel (family and shape) directly; there is no
/// per-stencil shape adaptation on this path.
pub fn global_diff_matrix(nodes: &NodeSet, kernel: &Kernel, order: usize) -> Result<DMatrix<f64>> {
    check_order(order)?;
    let coords = nodes.coords();
    let n = coords.len();
    let k = interpolation_matrix(coords, kernel);
    let lu = RealLu::factor(k, "global weight system")?;
    if lu.rcond_proxy() < CONDITION_PROXY_WARN {
        log::warn!(
            "global weight system is near-singular (pivot ratio {:.3e}); \
             derivative weights may be inaccurate",
            lu.rcond_proxy()
        );
    }
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        let b = DVector::from_fn(n, |j, _| kernel.derivative(coords[i] - coords[j], order));
        let w = lu.solve(&b, "global weight system")?;
        for j in 0..n {
            d[(i, j)] = w[j];
        }
    }
    Ok(d)
}

/// Real sparse matrix in row form; column indices ascending per row.
#[derive(Clone, Debug)]
pub struct SparseRowMatrix {
    n: usize,
    rows: Vec<(Vec<usize>, Vec<f64>)>,
}

impl SparseRowMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (c, v) = &self.rows[i];
        (c, v)
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = &self.rows[i];
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|(cols, vals)| cols.iter().zip(vals).map(|(&j, &w)| w * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for (i, (cols, vals)) in self.rows.iter().enumerate() {
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Writes `row,col,value` triplets, one nonzero per line, values with
    /// enough digits to round-trip f64 exactly.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "row,col,value")?;
        for (i, (cols, vals)) in self.rows.iter().enumerate() {
            for (&j, &v) in cols.iter().zip(vals) {
                writeln!(out, "{i},{j},{v:.16e}")?;
            }
        }
        Ok(())
    }
}

fn stencil_weights(
    nodes: &NodeSet,
    stencil: &Stencil,
    family: KernelFamily,
    rule: &ShapeRule,
    order: usize,
) -> Result<Vec<f64>> {
    let eps = rule.resolve(stencil.half_width(nodes))?;
    let kernel = Kernel::new(family, eps)?;
    let coords: Vec<f64> = stencil.members.iter().map(|&j| nodes.x(j)).collect();
    let k = interpolation_matrix(&coords, &kernel);
    let lu = RealLu::factor(k, "stencil weight system")?;
    if lu.rcond_proxy() < CONDITION_PROXY_WARN {
        log::warn!(
            "weight system for the stencil at node {} is near-singular \
             (pivot ratio {:.3e}); derivative weights may be inaccurate",
            stencil.center,
            lu.rcond_proxy()
        );
    }
    let xc = nodes.x(stencil.center);
    let b = DVector::from_fn(coords.len(), |j, _| kernel.derivative(xc - coords[j], order));
    let w = lu.solve(&b, "stencil weight system")?;
    Ok(w.iter().copied().collect())
}

/// One differentiation row: the `order`-th derivative at the stencil's center
/// as weights over its members. This is how non-collocation rows (e.g. a
/// boundary derivative condition) are built.
pub fn derivative_row(
    nodes: &NodeSet,
    stencil: &Stencil,
    family: KernelFamily,
    rule: &ShapeRule,
    order: usize,
) -> Result<(Vec<usize>, Vec<f64>)> {
    check_order(order)?;
    let w = stencil_weights(nodes, stencil, family, rule, order)?;
    Ok((stencil.members.clone(), w))
}

/// Sparse differentiation matrix from per-node stencils.
///
/// `stencils[i]` must be centered at node `i`. Rows are independent, so they
/// are built through [`par::map_indexed`] and the result is identical in
/// parallel and sequential runs.
pub fn local_diff_matrix(
    nodes: &NodeSet,
    stencils: &[Stencil],
    family: KernelFamily,
    rule: &ShapeRule,
    order: usize,
    exec: &Exec,
) -> Result<SparseRowMatrix> {
    check_order(order)?;
    if stencils.len() != nodes.len() {
        return Err(Error::geometry(format!(
            "need one stencil per node: {} stencils for {} nodes",
            stencils.len(),
            nodes.len()
        )));
    }
    for (i, st) in stencils.iter().enumerate() {
        if st.center != i {
            return Err(Error::geometry(format!(
                "stencil {i} is centered at node {}, expected {i}",
                st.center
            )));
        }
    }
    let rows = par::map_indexed(nodes.len(), *exec, |i| {
        stencil_weights(nodes, &stencils[i], family, rule, order)
            .map(|w| (stencils[i].members.clone(), w))
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SparseRowMatrix {
        n: nodes.len(),
        rows,
    })
}
