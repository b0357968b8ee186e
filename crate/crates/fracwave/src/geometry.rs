//! 1-D node sets and nearest-neighbor stencils.
//!
//! Nodes are kept sorted ascending; the first and last nodes are the domain
//! boundary. Stencils collect the `n_x` nearest nodes to a center, breaking
//! distance ties toward the lower index, which on a sorted line always yields
//! a contiguous index window containing the center (the assembled sparse
//! operators are therefore banded).

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeKind {
    LeftBoundary,
    Interior,
    RightBoundary,
}

/// A strictly increasing set of collocation nodes on `[a, b]`.
#[derive(Clone, Debug)]
pub struct NodeSet {
    coords: Vec<f64>,
}

impl NodeSet {
    /// Builds a node set from explicit coordinates (strictly increasing, >= 3).
    pub fn from_coords(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 3 {
            return Err(Error::geometry(format!(
                "need at least 3 nodes, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(Error::geometry("node coordinates must be finite"));
        }
        if coords.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::geometry(
                "node coordinates must be strictly increasing",
            ));
        }
        Ok(NodeSet { coords })
    }

    /// Uniform nodes on `[a, b]` inclusive of both endpoints.
    pub fn uniform(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::geometry(format!(
                "domain must satisfy a < b with finite endpoints, got [{a}, {b}]"
            )));
        }
        if n < 3 {
            return Err(Error::geometry(format!("need at least 3 nodes, got {n}")));
        }
        let mut coords: Vec<f64> = (0..n)
            .map(|i| a + (i as f64) * (b - a) / ((n - 1) as f64))
            .collect();
        // Pin the endpoints exactly; boundary rows collocate there.
        coords[0] = a;
        coords[n - 1] = b;
        NodeSet::from_coords(coords)
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn x(&self, i: usize) -> f64 {
        self.coords[i]
    }

    pub fn kind(&self, i: usize) -> NodeKind {
        if i == 0 {
            NodeKind::LeftBoundary
        } else if i + 1 == self.coords.len() {
            NodeKind::RightBoundary
        } else {
            NodeKind::Interior
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.coords[0], *self.coords.last().unwrap())
    }

    /// Index of the node nearest to `x` (ties toward the lower index).
    pub fn nearest(&self, x: f64) -> usize {
        let mut best = 0usize;
        let mut best_d = (self.coords[0] - x).abs();
        for (i, &xi) in self.coords.iter().enumerate().skip(1) {
            let d = (xi - x).abs();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

/// Nearest-neighbor stencil: `members` sorted ascending and containing `center`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stencil {
    pub center: usize,
    pub members: Vec<usize>,
}

impl Stencil {
    /// Max distance from the center to a member (the stencil half-width used
    /// by the default shape-parameter rule).
    pub fn half_width(&self, nodes: &NodeSet) -> f64 {
        let xc = nodes.x(self.center);
        self.members
            .iter()
            .map(|&j| (nodes.x(j) - xc).abs())
            .fold(0.0, f64::max)
    }
}

/// Builds one stencil per node: the `n_x` nearest nodes to each center, with
/// distance ties resolved toward the lower index.
pub fn build_stencils(nodes: &NodeSet, n_x: usize) -> Result<Vec<Stencil>> {
    let n = nodes.len();
    if n_x < 3 || n_x > n {
        return Err(Error::geometry(format!(
            "stencil size must satisfy 3 <= n_x <= N ({n}), got {n_x}"
        )));
    }
    let xs = nodes.coords();
    let mut stencils = Vec::with_capacity(n);
    for c in 0..n {
        // Grow a window [lo, hi] around the center, taking whichever edge
        // neighbor is closer; on an exact tie take the left one (lower index).
        let (mut lo, mut hi) = (c, c);
        while hi - lo + 1 < n_x {
            let left = lo
                .checked_sub(1)
                .map(|l| (xs[c] - xs[l]).abs())
                .unwrap_or(f64::INFINITY);
            let right = if hi + 1 < n {
                (xs[hi + 1] - xs[c]).abs()
            } else {
                f64::INFINITY
            };
            if left <= right {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        stencils.push(Stencil {
            center: c,
            members: (lo..=hi).collect(),
        });
    }
    Ok(stencils)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_three_nodes_on_unit_interval() {
        let ns = NodeSet::uniform(0.0, 1.0, 3).unwrap();
        assert_eq!(ns.coords(), &[0.0, 0.5, 1.0]);
        assert_eq!(ns.kind(0), NodeKind::LeftBoundary);
        assert_eq!(ns.kind(1), NodeKind::Interior);
        assert_eq!(ns.kind(2), NodeKind::RightBoundary);
    }

    #[test]
    fn uniform_spacing_is_uniform_and_endpoints_exact() {
        let (a, b, n) = (-3.0, 3.0, 81);
        let ns = NodeSet::uniform(a, b, n).unwrap();
        assert_eq!(ns.x(0), a);
        assert_eq!(ns.x(n - 1), b);
        let h = (b - a) / ((n - 1) as f64);
        for w in ns.coords().windows(2) {
            assert!((w[1] - w[0] - h).abs() <= 1e-12 * (b - a));
        }
    }

    #[test]
    fn explicit_coords_classify_boundaries() {
        let ns = NodeSet::from_coords(vec![0.0, 0.1, 0.9, 1.0]).unwrap();
        assert_eq!(ns.kind(0), NodeKind::LeftBoundary);
        assert_eq!(ns.kind(1), NodeKind::Interior);
        assert_eq!(ns.kind(2), NodeKind::Interior);
        assert_eq!(ns.kind(3), NodeKind::RightBoundary);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(NodeSet::from_coords(vec![0.0, 0.0, 1.0]).is_err());
        assert!(NodeSet::from_coords(vec![0.0, 1.0]).is_err());
        assert!(NodeSet::uniform(1.0, 0.0, 11).is_err());
        let ns = NodeSet::uniform(0.0, 1.0, 5).unwrap();
        assert!(build_stencils(&ns, 2).is_err());
        assert!(build_stencils(&ns, 6).is_err());
    }

    #[test]
    fn boundary_stencil_is_one_sided() {
        let ns = NodeSet::uniform(0.0, 1.0, 5).unwrap();
        let st = build_stencils(&ns, 3).unwrap();
        assert_eq!(st[0].members, vec![0, 1, 2]);
        assert_eq!(st[4].members, vec![2, 3, 4]);
    }

    #[test]
    fn interior_tie_breaks_toward_lower_index() {
        let ns = NodeSet::uniform(0.0, 1.0, 5).unwrap();
        let st = build_stencils(&ns, 3).unwrap();
        // node 2 is equidistant from 1 and 3; the tie goes left, then the
        // remaining slot is filled by the nearer right neighbor.
        assert_eq!(st[2].members, vec![1, 2, 3]);
        let st4 = build_stencils(&ns, 4).unwrap();
        assert_eq!(st4[2].members, vec![0, 1, 2, 3]);
    }

    #[test]
    fn members_always_sorted_and_contain_center() {
        let ns = NodeSet::from_coords(vec![0.0, 0.05, 0.3, 0.31, 0.7, 0.95, 1.0]).unwrap();
        for n_x in 3..=7 {
            for s in build_stencils(&ns, n_x).unwrap() {
                assert!(s.members.windows(2).all(|w| w[0] < w[1]));
                assert!(s.members.contains(&s.center));
                assert_eq!(s.members.len(), n_x);
            }
        }
    }

    #[test]
    fn nearest_node_lookup() {
        let ns = NodeSet::uniform(-1.0, 1.0, 200).unwrap();
        // 0.99965 sits closer to the right boundary than to the previous node.
        assert_eq!(ns.nearest(0.999_650), 199);
        assert_eq!(ns.nearest(-1.2), 0);
    }
}
