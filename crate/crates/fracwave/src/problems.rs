//! Built-in benchmark problems.
//!
//! Three accuracy benchmarks with known exact solutions (two manufactured,
//! one Cole–Hopf) and three wave-maker runs that probe eventual periodicity
//! under an oscillatory boundary signal.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::contour::ContourKind;
use crate::diffmat::ShapeRule;
use crate::error::{Error, Result};
use crate::geometry::NodeSet;
use crate::kernels::KernelFamily;
use crate::par::Exec;
use crate::solver::{
    BoundaryCondition, BoundaryOperator, Discretization, ExactFn, ProblemSpec, Side,
};
use crate::transforms::{SeparableTransform, TimeSignal};

/// Closed-form spatial profile with derivatives up to third order.
#[derive(Clone, Copy, Debug)]
pub enum AnalyticProfile {
    /// `scale * exp(-x^2)`.
    ScaledGaussian { scale: f64 },
    /// `sin(freq * x)`.
    Sine { freq: f64 },
}

impl AnalyticProfile {
    /// `order`-th derivative at `x`, `order <= 3`.
    pub fn eval(&self, x: f64, order: usize) -> f64 {
        match *self {
            AnalyticProfile::ScaledGaussian { scale } => {
                let g = scale * (-x * x).exp();
                match order {
                    0 => g,
                    1 => -2.0 * x * g,
                    2 => (4.0 * x * x - 2.0) * g,
                    3 => (12.0 * x - 8.0 * x * x * x) * g,
                    _ => panic!("profile derivatives stop at order 3"),
                }
            }
            AnalyticProfile::Sine { freq } => match order {
                0 => (freq * x).sin(),
                1 => freq * (freq * x).cos(),
                2 => -freq * freq * (freq * x).sin(),
                3 => -freq * freq * freq * (freq * x).cos(),
                _ => panic!("profile derivatives stop at order 3"),
            },
        }
    }
}

/// Exact solutions the benchmarks compare against.
#[derive(Clone, Copy, Debug)]
pub enum ExactSolution {
    /// `u(x, t) = A(x) t^p`.
    SeparablePower { profile: AnalyticProfile, power: f64 },
    /// Burgers solution `u = 2πξ e^{-π²ξt} sin(πx) / (c + e^{-π²ξt} cos(πx))`.
    ///
    /// Solves `u_t + u u_x = ξ u_xx` (unit advection) for any denominator
    /// constant `c > 1`; `c` selects the member of the solution family and
    /// is not a PDE coefficient.
    ColeHopf { constant: f64, xi: f64 },
}

impl ExactSolution {
    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match *self {
            ExactSolution::SeparablePower { profile, power } => {
                profile.eval(x, 0) * t.powf(power)
            }
            ExactSolution::ColeHopf { constant, xi } => {
                let decay = (-PI * PI * xi * t).exp();
                2.0 * PI * xi * decay * (PI * x).sin() / (constant + decay * (PI * x).cos())
            }
        }
    }

    pub fn as_fn(&self) -> ExactFn {
        let this = *self;
        Arc::new(move |x, t| this.eval(x, t))
    }
}

/// Forcing that makes `u(x, t) = A(x) t^p` solve
/// `D_t^α u + η u u_x - ξ u_xx + ζ u_xxx = f`, assembled termwise from the
/// analytic derivatives of the profile.
pub fn manufactured_forcing(
    profile: AnalyticProfile,
    power: f64,
    alpha: f64,
    eta: f64,
    xi: f64,
    zeta: f64,
    nodes: &NodeSet,
) -> SeparableTransform {
    let a: Vec<f64> = nodes.coords().iter().map(|&x| profile.eval(x, 0)).collect();
    let mut terms = vec![(
        a.clone(),
        TimeSignal::CaputoMonomial {
            coeff: 1.0,
            power,
            alpha,
        },
    )];
    if eta != 0.0 {
        let aa1: Vec<f64> = nodes
            .coords()
            .iter()
            .map(|&x| eta * profile.eval(x, 0) * profile.eval(x, 1))
            .collect();
        terms.push((
            aa1,
            TimeSignal::Monomial {
                coeff: 1.0,
                power: 2.0 * power,
            },
        ));
    }
    if xi != 0.0 {
        let a2: Vec<f64> = nodes.coords().iter().map(|&x| -xi * profile.eval(x, 2)).collect();
        terms.push((a2, TimeSignal::Monomial { coeff: 1.0, power }));
    }
    if zeta != 0.0 {
        let a3: Vec<f64> = nodes.coords().iter().map(|&x| zeta * profile.eval(x, 3)).collect();
        terms.push((a3, TimeSignal::Monomial { coeff: 1.0, power }));
    }
    SeparableTransform { terms }
}

/// How a benchmark fills in its data.
#[derive(Clone, Debug)]
pub enum ProblemKind {
    /// Zero initial data, power-law manufactured solution; Dirichlet data
    /// either traces the exact solution or is homogeneous when the profile
    /// vanishes at both ends.
    Manufactured {
        profile: AnalyticProfile,
        power: f64,
        exact_dirichlet: bool,
    },
    /// Classical Burgers with the Cole–Hopf exact solution; nonzero initial
    /// data, zero forcing, homogeneous Dirichlet. The exact family solves
    /// the unit-advection equation, so the PDE coefficient `eta` stays 1 and
    /// `constant` picks the family member.
    ColeHopf { constant: f64 },
    /// Quiescent start driven by `sin(ω₀ t) tanh(a t)` at the left boundary.
    WaveMaker { omega0: f64, steepness: f64 },
}

/// A runnable benchmark: PDE coefficients, grid, kernel, contour defaults,
/// output times, and the problem data recipe. Every field can be overridden
/// before `build`.
#[derive(Clone, Debug)]
pub struct ProblemSetup {
    pub id: String,
    pub alpha: f64,
    pub eta: f64,
    pub xi: f64,
    pub zeta: f64,
    pub domain: (f64, f64),
    pub n: usize,
    pub n_x: usize,
    pub family: KernelFamily,
    pub shape: ShapeRule,
    pub contour_kind: ContourKind,
    pub m: usize,
    pub window: (f64, f64),
    /// Output times, ascending, inside `window`.
    pub times: Vec<f64>,
    /// Probe locations for time traces (periodicity runs).
    pub probes: Vec<f64>,
    /// Forcing period for periodicity diagnostics.
    pub period: Option<f64>,
    pub kind: ProblemKind,
}

/// Shape parameters for the benchmark grids. The half-width default keeps
/// ε·h constant under refinement, which caps the resolvable accuracy; these
/// fixed values let the convergence benchmarks actually converge on their
/// stock grids. Each sits in the middle of an empirically flat error basin
/// for its problem's domain and stencil size.
const GAUSSIAN_BUMP_SHAPE: f64 = 0.3;
const SINE_WAVE_SHAPE: f64 = 3.0;
const COLE_HOPF_SHAPE: f64 = 0.22;

/// Uniform, endpoint-inclusive time grid.
pub fn uniform_times(window: (f64, f64), count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![window.1];
    }
    let dt = (window.1 - window.0) / (count - 1) as f64;
    (0..count).map(|k| window.0 + k as f64 * dt).collect()
}

/// Probe positions for the wave-maker runs.
pub const WAVE_PROBES: [f64; 6] = [-0.950670, -0.808460, -0.587280, -0.308720, 0.0, 0.999650];

pub const BUILTIN_IDS: [&str; 6] = [
    "problem1",
    "problem2",
    "problem3",
    "periodic_kdv",
    "periodic_burgers",
    "periodic_kdv_burgers",
];

fn periodic_setup(id: &str, xi: f64, zeta: f64) -> ProblemSetup {
    ProblemSetup {
        id: id.to_string(),
        alpha: 0.2,
        eta: 0.05,
        xi,
        zeta,
        domain: (-1.0, 1.0),
        n: 200,
        n_x: 25,
        family: KernelFamily::Multiquadric,
        shape: ShapeRule::default_local(),
        contour_kind: ContourKind::Parabolic,
        m: 60,
        window: (0.05, 1.8),
        times: uniform_times((0.05, 1.8), 600),
        probes: WAVE_PROBES.to_vec(),
        period: Some(0.1),
        kind: ProblemKind::WaveMaker {
            omega0: 20.0 * PI,
            steepness: 5.0,
        },
    }
}

/// The named benchmark with its stock settings.
pub fn builtin(id: &str) -> Result<ProblemSetup> {
    match id {
        "problem1" => Ok(ProblemSetup {
            id: id.to_string(),
            alpha: 0.5,
            eta: 1.0,
            xi: 0.0,
            zeta: 1.0,
            domain: (-3.0, 3.0),
            n: 81,
            n_x: 5,
            family: KernelFamily::Multiquadric,
            shape: ShapeRule::Fixed(GAUSSIAN_BUMP_SHAPE),
            contour_kind: ContourKind::Hyperbolic,
            m: 60,
            // Tight window: the manufactured forcing transform decays like
            // 1/s^11, so the contour vertex must stay well right of the
            // origin or the quadrature cancels catastrophically. A window
            // near the output time calibrates to a suitably large vertex.
            window: (0.9, 1.1),
            times: vec![1.0],
            probes: Vec::new(),
            period: None,
            kind: ProblemKind::Manufactured {
                profile: AnalyticProfile::ScaledGaussian {
                    scale: 1.0 / 3000.0,
                },
                power: 5.0,
                exact_dirichlet: true,
            },
        }),
        "problem2" => Ok(ProblemSetup {
            id: id.to_string(),
            alpha: 0.5,
            eta: 1.0,
            xi: 1.0,
            zeta: 0.0,
            domain: (0.0, 1.0),
            n: 61,
            n_x: 11,
            family: KernelFamily::Multiquadric,
            shape: ShapeRule::Fixed(SINE_WAVE_SHAPE),
            contour_kind: ContourKind::Parabolic,
            m: 50,
            window: (0.5, 5.0),
            times: vec![0.5],
            probes: Vec::new(),
            period: None,
            kind: ProblemKind::Manufactured {
                profile: AnalyticProfile::Sine { freq: 2.0 * PI },
                power: 2.0,
                exact_dirichlet: false,
            },
        }),
        "problem3" => Ok(ProblemSetup {
            id: id.to_string(),
            alpha: 1.0,
            eta: 1.0,
            xi: 0.1,
            zeta: 0.0,
            domain: (0.0, 1.0),
            n: 41,
            n_x: 5,
            family: KernelFamily::Multiquadric,
            shape: ShapeRule::Fixed(COLE_HOPF_SHAPE),
            contour_kind: ContourKind::Parabolic,
            m: 71,
            window: (0.05, 1.8),
            times: vec![0.1],
            probes: Vec::new(),
            period: None,
            kind: ProblemKind::ColeHopf { constant: 2.0 },
        }),
        "periodic_kdv" => Ok(periodic_setup(id, 0.0, 1.0)),
        "periodic_burgers" => Ok(periodic_setup(id, 1.0, 0.0)),
        "periodic_kdv_burgers" => Ok(periodic_setup(id, 1e-4, 1e-5)),
        other => Err(Error::param(format!(
            "unknown problem id {other:?}; known ids: {}",
            BUILTIN_IDS.join(", ")
        ))),
    }
}

impl ProblemSetup {
    /// Materializes the problem on its grid.
    pub fn build(&self, exec: &Exec) -> Result<(ProblemSpec, Discretization)> {
        let nodes = NodeSet::uniform(self.domain.0, self.domain.1, self.n)?;
        let (u0, forcing, mut boundary, exact): (
            Vec<f64>,
            SeparableTransform,
            Vec<BoundaryCondition>,
            Option<ExactFn>,
        ) = match &self.kind {
            ProblemKind::Manufactured {
                profile,
                power,
                exact_dirichlet,
            } => {
                let forcing = manufactured_forcing(
                    *profile, *power, self.alpha, self.eta, self.xi, self.zeta, &nodes,
                );
                let data = |x: f64| {
                    if *exact_dirichlet {
                        TimeSignal::Monomial {
                            coeff: profile.eval(x, 0),
                            power: *power,
                        }
                    } else {
                        TimeSignal::Zero
                    }
                };
                let exact = ExactSolution::SeparablePower {
                    profile: *profile,
                    power: *power,
                };
                (
                    vec![0.0; self.n],
                    forcing,
                    vec![
                        BoundaryCondition {
                            side: Side::Left,
                            operator: BoundaryOperator::Dirichlet,
                            data: data(self.domain.0),
                        },
                        BoundaryCondition {
                            side: Side::Right,
                            operator: BoundaryOperator::Dirichlet,
                            data: data(self.domain.1),
                        },
                    ],
                    Some(exact.as_fn()),
                )
            }
            ProblemKind::ColeHopf { constant } => {
                let c = *constant;
                if c <= 1.0 {
                    return Err(Error::param(format!(
                        "the Burgers benchmark needs its family constant > 1 so \
                         the solution denominator stays positive, got {c}"
                    )));
                }
                let u0: Vec<f64> = nodes
                    .coords()
                    .iter()
                    .map(|&x| 2.0 * PI * self.xi * (PI * x).sin() / (c + (PI * x).cos()))
                    .collect();
                let exact = ExactSolution::ColeHopf {
                    constant: c,
                    xi: self.xi,
                };
                (
                    u0,
                    SeparableTransform::default(),
                    vec![
                        BoundaryCondition {
                            side: Side::Left,
                            operator: BoundaryOperator::Dirichlet,
                            data: TimeSignal::Zero,
                        },
                        BoundaryCondition {
                            side: Side::Right,
                            operator: BoundaryOperator::Dirichlet,
                            data: TimeSignal::Zero,
                        },
                    ],
                    Some(exact.as_fn()),
                )
            }
            ProblemKind::WaveMaker { omega0, steepness } => (
                vec![0.0; self.n],
                SeparableTransform::default(),
                vec![
                    BoundaryCondition {
                        side: Side::Left,
                        operator: BoundaryOperator::Dirichlet,
                        data: TimeSignal::SineTanh {
                            omega0: *omega0,
                            steepness: *steepness,
                        },
                    },
                    BoundaryCondition {
                        side: Side::Right,
                        operator: BoundaryOperator::Dirichlet,
                        data: TimeSignal::Zero,
                    },
                ],
                None,
            ),
        };
        if self.zeta != 0.0 {
            boundary.push(BoundaryCondition {
                side: Side::Right,
                operator: BoundaryOperator::Neumann,
                data: TimeSignal::Zero,
            });
        }
        let p = ProblemSpec {
            alpha: self.alpha,
            eta: self.eta,
            xi: self.xi,
            zeta: self.zeta,
            domain: self.domain,
            u0,
            forcing,
            boundary,
            exact,
        };
        let disc = Discretization::build(&p, nodes, self.n_x, self.family, &self.shape, exec)?;
        p.validate(&disc.nodes)?;
        Ok((p, disc))
    }

    /// The exact solution sampled on the grid at time `t`, when known.
    pub fn exact_profile(&self, disc: &Discretization, t: f64) -> Option<Vec<f64>> {
        let exact: ExactSolution = match &self.kind {
            ProblemKind::Manufactured { profile, power, .. } => ExactSolution::SeparablePower {
                profile: *profile,
                power: *power,
            },
            ProblemKind::ColeHopf { constant } => ExactSolution::ColeHopf {
                constant: *constant,
                xi: self.xi,
            },
            ProblemKind::WaveMaker { .. } => return None,
        };
        Some(disc.nodes.coords().iter().map(|&x| exact.eval(x, t)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::ContourSpec;
    use crate::metrics::error_norms;
    use crate::presets::lookup_preset;
    use crate::solver::{picard_solve, SolverOptions};
    use approx::assert_relative_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Time-domain forcing value reconstructed from the transform terms.
    fn forcing_time(f: &SeparableTransform, node: usize, n: usize, t: f64) -> f64 {
        f.sample_time(t, n)[node]
    }

    #[test]
    fn manufactured_forcing_balances_the_pde_pointwise() {
        // Substituting u = A(x) t^p into the PDE with the generated forcing
        // must balance to roundoff; the Caputo term is evaluated analytically.
        let mut rng = ChaCha8Rng::seed_from_u64(411);
        for id in ["problem1", "problem2"] {
            let setup = builtin(id).unwrap();
            let nodes = NodeSet::uniform(setup.domain.0, setup.domain.1, setup.n).unwrap();
            let (profile, power) = match setup.kind {
                ProblemKind::Manufactured { profile, power, .. } => (profile, power),
                _ => unreachable!(),
            };
            let f = manufactured_forcing(
                profile,
                power,
                setup.alpha,
                setup.eta,
                setup.xi,
                setup.zeta,
                &nodes,
            );
            let caputo_factor = statrs::function::gamma::gamma(power + 1.0)
                / statrs::function::gamma::gamma(power + 1.0 - setup.alpha);
            for _ in 0..20 {
                let i = rng.random_range(0..setup.n);
                let t: f64 = rng.random_range(0.1..2.0);
                let x = nodes.x(i);
                let a0 = profile.eval(x, 0);
                let a1 = profile.eval(x, 1);
                let a2 = profile.eval(x, 2);
                let a3 = profile.eval(x, 3);
                let lhs = caputo_factor * a0 * t.powf(power - setup.alpha)
                    + setup.eta * (a0 * t.powf(power)) * (a1 * t.powf(power))
                    - setup.xi * a2 * t.powf(power)
                    + setup.zeta * a3 * t.powf(power);
                let rhs = forcing_time(&f, i, setup.n, t);
                let scale = lhs.abs().max(rhs.abs()).max(1.0);
                assert!(
                    (lhs - rhs).abs() <= 1e-12 * scale,
                    "{id}: residual {} at x={x}, t={t}",
                    lhs - rhs
                );
            }
        }
    }

    #[test]
    fn burgers_exact_solution_satisfies_the_pde() {
        // Fourth-order central differences in x and t; the classical Burgers
        // equation u_t + eta u u_x - xi u_xx = 0 must balance to ~1e-8.
        let setup = builtin("problem3").unwrap();
        let constant = match setup.kind {
            ProblemKind::ColeHopf { constant } => constant,
            _ => unreachable!(),
        };
        let exact = ExactSolution::ColeHopf {
            constant,
            xi: setup.xi,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let h = 1e-3;
        let d1 = |f: &dyn Fn(f64) -> f64, z: f64| {
            (f(z - 2.0 * h) - 8.0 * f(z - h) + 8.0 * f(z + h) - f(z + 2.0 * h)) / (12.0 * h)
        };
        let d2 = |f: &dyn Fn(f64) -> f64, z: f64| {
            (-f(z - 2.0 * h) + 16.0 * f(z - h) - 30.0 * f(z) + 16.0 * f(z + h)
                - f(z + 2.0 * h))
                / (12.0 * h * h)
        };
        for _ in 0..20 {
            let x: f64 = rng.random_range(0.1..0.9);
            let t: f64 = rng.random_range(0.05..1.0);
            let u = exact.eval(x, t);
            let ut = d1(&|tt| exact.eval(x, tt), t);
            let ux = d1(&|xx| exact.eval(xx, t), x);
            let uxx = d2(&|xx| exact.eval(xx, t), x);
            let residual = ut + setup.eta * u * ux - setup.xi * uxx;
            assert!(
                residual.abs() <= 1e-8,
                "residual {residual} at x={x}, t={t}"
            );
        }
    }

    #[test]
    fn forcing_transform_matches_laplace_quadrature() {
        // Oracle for the transform algebra: numerically integrate
        // f(x_i, t) e^{-st} and compare against the termwise closed form.
        let setup = builtin("problem1").unwrap();
        let nodes = NodeSet::uniform(setup.domain.0, setup.domain.1, setup.n).unwrap();
        let (profile, power) = match setup.kind {
            ProblemKind::Manufactured { profile, power, .. } => (profile, power),
            _ => unreachable!(),
        };
        let f = manufactured_forcing(
            profile,
            power,
            setup.alpha,
            setup.eta,
            setup.xi,
            setup.zeta,
            &nodes,
        );
        let s = Complex64::new(2.0, 0.0);
        let node = 40; // x = 0, where the bump peaks
        let exact = f.sample(s, setup.n).unwrap()[node];
        // Simpson quadrature over [0, T]; the integrand decays like
        // t^10 e^{-2t}, so T = 60 leaves a negligible tail.
        let t_max = 60.0;
        let panels = 600_000;
        let dt = t_max / panels as f64;
        let mut acc = 0.0;
        for k in 0..=panels {
            let t = k as f64 * dt;
            let w = if k == 0 || k == panels {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            acc += w * forcing_time(&f, node, setup.n, t) * (-s.re * t).exp();
        }
        acc *= dt / 3.0;
        assert_relative_eq!(acc, exact.re, max_relative = 1e-7);
    }

    #[test]
    fn exact_solution_values_pin_known_points() {
        let p1 = builtin("problem1").unwrap();
        let exact1 = match p1.kind {
            ProblemKind::Manufactured { profile, power, .. } => {
                ExactSolution::SeparablePower { profile, power }
            }
            _ => unreachable!(),
        };
        assert_relative_eq!(exact1.eval(0.0, 1.0), 1.0 / 3000.0, max_relative = 1e-15);
        let p2 = builtin("problem2").unwrap();
        let exact2 = match p2.kind {
            ProblemKind::Manufactured { profile, power, .. } => {
                ExactSolution::SeparablePower { profile, power }
            }
            _ => unreachable!(),
        };
        assert!((exact2.eval(0.1, 0.1) - 0.005878).abs() < 5e-7);
    }

    #[test]
    fn builtin_ids_resolve_and_unknown_ids_do_not() {
        for id in BUILTIN_IDS {
            let setup = builtin(id).unwrap();
            assert_eq!(setup.id, id);
        }
        assert!(builtin("problem9").is_err());
    }

    #[test]
    fn periodic_setups_have_wave_maker_structure() {
        let kdv = builtin("periodic_kdv").unwrap();
        assert_eq!(kdv.times.len(), 600);
        assert_eq!(kdv.probes.len(), 6);
        assert_eq!(kdv.period, Some(0.1));
        let (p, _) = kdv.build(&Exec::sequential()).unwrap();
        assert_eq!(p.boundary.len(), 3, "dispersive run needs a Neumann row");
        assert!(matches!(
            p.boundary[0].data,
            TimeSignal::SineTanh { .. }
        ));
        let burgers = builtin("periodic_burgers").unwrap();
        let (p, _) = burgers.build(&Exec::sequential()).unwrap();
        assert_eq!(p.boundary.len(), 2);
        // Quiescent start, no forcing.
        assert!(p.forcing.is_zero());
        assert!(p.u0.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn burgers_benchmark_reproduces_its_exact_solution() {
        let setup = builtin("problem3").unwrap();
        let exec = Exec::sequential();
        let (p, disc) = setup.build(&exec).unwrap();
        let contour: ContourSpec =
            lookup_preset(setup.contour_kind, setup.window, setup.m).unwrap();
        let opts = SolverOptions {
            exec,
            ..SolverOptions::default()
        };
        let t = setup.times[0];
        let out = picard_solve(&p, &disc, &contour, t, &opts, None).unwrap();
        let exact = setup.exact_profile(&disc, t).unwrap();
        let norms = error_norms(&out.values, &exact).unwrap();
        assert!(
            norms.linf <= 2e-3,
            "Burgers benchmark error too large: {:.3e}",
            norms.linf
        );
        assert!(out.iterations <= 15, "Picard took {}", out.iterations);
    }
}
