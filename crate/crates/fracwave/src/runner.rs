//! End-to-end run driver: solve, measure, write artifacts.
//!
//! A run solves its problem on one or more grids and fills an output
//! directory with CSV artifacts plus a manifest echoing every resolved
//! parameter. Two invariants hold by construction:
//!
//! * reruns of the same configuration are byte-identical, whatever the
//!   execution mode, so artifact diffs are meaningful;
//! * numbers are written with 17 significant digits, so any norm in
//!   `errors.csv` can be recomputed exactly from the emitted profiles.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use crate::config::ResolvedRun;
use crate::error::{Error, Result};
use crate::metrics::{error_norms, periodicity_report, ErrorNorms, PeriodicityReport};
use crate::par::Exec;
use crate::problems::ProblemKind;
use crate::solver::{solve_time_grid, SolveResult, SolverOptions};

/// Solve output for one grid size, with exact-solution comparisons when the
/// problem has a closed form.
#[derive(Clone, Debug)]
pub struct GridOutcome {
    pub n: usize,
    /// Node coordinates of this grid.
    pub xs: Vec<f64>,
    pub result: SolveResult,
    pub exact: Option<Vec<Vec<f64>>>,
    pub norms: Option<Vec<ErrorNorms>>,
}

/// One probe trace, snapped to the nearest node.
#[derive(Clone, Debug)]
pub struct ProbeOutcome {
    pub index: usize,
    pub x_requested: f64,
    pub node: usize,
    pub x_node: f64,
    pub trace: Vec<f64>,
    pub report: Option<PeriodicityReport>,
}

/// One requested pass/fail check with its observed value.
#[derive(Clone, Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub threshold: f64,
    pub observed: f64,
    pub passed: bool,
}

/// Everything a run produced, with the on-disk file list.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub out_dir: PathBuf,
    /// Data files written, relative to `out_dir`, in write order
    /// (`manifest.txt` is written last and not listed).
    pub files: Vec<String>,
    pub grids: Vec<GridOutcome>,
    pub probes: Vec<ProbeOutcome>,
    pub checks: Vec<CheckOutcome>,
    /// True when every requested check passed (vacuously true without
    /// checks).
    pub passed: bool,
}

/// 17 significant digits: the shortest width at which every f64 survives a
/// text round trip, so readers of the CSVs recover the exact bits.
fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn float_list(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Executes a resolved run and writes its artifact directory.
pub fn run(resolved: &ResolvedRun, exec: &Exec) -> Result<RunArtifacts> {
    let setup = &resolved.setup;
    let checks = &resolved.checks;

    // Check prerequisites fail before the (possibly long) solve, not after.
    let has_exact = !matches!(setup.kind, ProblemKind::WaveMaker { .. });
    if checks.max_linf.is_some() && !has_exact {
        return Err(Error::param(
            "require_linf needs a problem with a known exact solution".to_string(),
        ));
    }
    if checks.max_defect_ratio.is_some() && (setup.period.is_none() || setup.probes.is_empty()) {
        return Err(Error::param(
            "require_defect_ratio needs both a period and probe locations".to_string(),
        ));
    }

    let grid_sizes = resolved
        .n_sweep
        .clone()
        .unwrap_or_else(|| vec![setup.n]);
    let opts = SolverOptions {
        exec: *exec,
        ..SolverOptions::default()
    };

    let mut grids = Vec::with_capacity(grid_sizes.len());
    let mut probes = Vec::new();
    for (gi, &n) in grid_sizes.iter().enumerate() {
        let mut grid_setup = setup.clone();
        grid_setup.n = n;
        let (spec, disc) = grid_setup.build(exec)?;
        let result = solve_time_grid(&spec, &disc, &resolved.contour, &setup.times, &opts)?;
        let exact: Option<Vec<Vec<f64>>> = setup
            .times
            .iter()
            .map(|&t| grid_setup.exact_profile(&disc, t))
            .collect();
        let norms = match &exact {
            Some(profiles) => Some(
                result
                    .values
                    .iter()
                    .zip(profiles)
                    .map(|(u, e)| error_norms(u, e))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        // Probe traces come off the primary grid (config validation rejects
        // probes combined with a grid sweep).
        if gi == 0 {
            for (index, &x) in setup.probes.iter().enumerate() {
                let node = disc.nodes.nearest(x);
                let trace: Vec<f64> = result.values.iter().map(|u| u[node]).collect();
                let report = match setup.period {
                    Some(period) => {
                        let t_last = *setup.times.last().expect("validated nonempty");
                        let window = resolved
                            .periodicity_window
                            .unwrap_or((t_last - 4.0 * period, t_last));
                        Some(periodicity_report(&setup.times, &trace, period, window)?)
                    }
                    None => None,
                };
                probes.push(ProbeOutcome {
                    index,
                    x_requested: x,
                    node,
                    x_node: disc.nodes.x(node),
                    trace,
                    report,
                });
            }
        }
        grids.push(GridOutcome {
            n,
            xs: disc.nodes.coords().to_vec(),
            result,
            exact,
            norms,
        });
    }

    let mut checks_out = Vec::new();
    if let Some(limit) = checks.max_linf {
        let observed = grids
            .iter()
            .flat_map(|g| g.norms.as_deref().unwrap_or(&[]))
            .map(|n| n.linf)
            .fold(0.0f64, f64::max);
        checks_out.push(CheckOutcome {
            name: "require_linf",
            threshold: limit,
            observed,
            passed: observed <= limit,
        });
    }
    if let Some(limit) = checks.max_picard {
        let observed = grids
            .iter()
            .flat_map(|g| g.result.iterations.iter())
            .copied()
            .max()
            .unwrap_or(0);
        checks_out.push(CheckOutcome {
            name: "require_picard",
            threshold: limit as f64,
            observed: observed as f64,
            passed: observed <= limit,
        });
    }
    if let Some(limit) = checks.max_defect_ratio {
        let observed = probes
            .iter()
            .filter_map(|p| p.report.as_ref())
            .filter(|r| r.amplitude > resolved.quiet_level)
            .map(|r| r.defect_ratio)
            .fold(0.0f64, f64::max);
        checks_out.push(CheckOutcome {
            name: "require_defect_ratio",
            threshold: limit,
            observed,
            passed: observed <= limit,
        });
    }
    let passed = checks_out.iter().all(|c| c.passed);

    let files = write_artifacts(resolved, &grids, &probes, &checks_out, passed)?;
    Ok(RunArtifacts {
        out_dir: resolved.out.clone(),
        files,
        grids,
        probes,
        checks: checks_out,
        passed,
    })
}

fn profile_csv(xs: &[f64], times: &[f64], columns: &[Vec<f64>]) -> String {
    let mut text = String::from("x");
    for &t in times {
        let _ = write!(text, ",u(t={t})");
    }
    text.push('\n');
    for (i, &x) in xs.iter().enumerate() {
        text.push_str(&sci(x));
        for column in columns {
            text.push(',');
            text.push_str(&sci(column[i]));
        }
        text.push('\n');
    }
    text
}

fn write_artifacts(
    resolved: &ResolvedRun,
    grids: &[GridOutcome],
    probes: &[ProbeOutcome],
    checks: &[CheckOutcome],
    passed: bool,
) -> Result<Vec<String>> {
    let setup = &resolved.setup;
    let dir = &resolved.out;
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut save = |name: String, text: String| -> Result<()> {
        fs::write(dir.join(&name), text)?;
        files.push(name);
        Ok(())
    };

    for grid in grids {
        let n = grid.n;
        save(
            format!("profiles_n{n}.csv"),
            profile_csv(&grid.xs, &setup.times, &grid.result.values),
        )?;
        if let Some(exact) = &grid.exact {
            save(
                format!("exact_n{n}.csv"),
                profile_csv(&grid.xs, &setup.times, exact),
            )?;
        }
    }

    if grids.iter().any(|g| g.norms.is_some()) {
        let mut text = String::from("n,t,linf,l2,rms\n");
        for grid in grids {
            if let Some(norms) = &grid.norms {
                for (k, norm) in norms.iter().enumerate() {
                    let _ = writeln!(
                        text,
                        "{},{},{},{},{}",
                        grid.n,
                        sci(setup.times[k]),
                        sci(norm.linf),
                        sci(norm.l2),
                        sci(norm.rms)
                    );
                }
            }
        }
        save("errors.csv".to_string(), text)?;
    }

    let mut stats = String::from("n,t,iterations,imag_residue\n");
    for grid in grids {
        for (k, &t) in setup.times.iter().enumerate() {
            let _ = writeln!(
                stats,
                "{},{},{},{}",
                grid.n,
                sci(t),
                grid.result.iterations[k],
                sci(grid.result.imag_residue[k])
            );
        }
    }
    save("stats.csv".to_string(), stats)?;

    for probe in probes {
        let mut text = String::from("t,u\n");
        for (k, &t) in setup.times.iter().enumerate() {
            let _ = writeln!(text, "{},{}", sci(t), sci(probe.trace[k]));
        }
        save(format!("probe_{}.csv", probe.index), text)?;
    }

    if probes.iter().any(|p| p.report.is_some()) {
        let mut text = String::from(
            "probe,x_requested,x_node,stride,misalignment,amplitude,defect,defect_ratio\n",
        );
        for probe in probes {
            if let Some(r) = &probe.report {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{},{},{}",
                    probe.index,
                    sci(probe.x_requested),
                    sci(probe.x_node),
                    r.stride,
                    sci(r.misalignment),
                    sci(r.amplitude),
                    sci(r.defect),
                    sci(r.defect_ratio)
                );
            }
        }
        save("periodicity.csv".to_string(), text)?;
    }

    // Manifest last: it lists the data files and the check outcomes.
    let mut m = String::from("# resolved run manifest\n");
    let _ = writeln!(m, "problem = {}", setup.id);
    let _ = writeln!(m, "kind = {:?}", setup.kind);
    let _ = writeln!(m, "domain = {},{}", setup.domain.0, setup.domain.1);
    let _ = writeln!(m, "n = {}", setup.n);
    if let Some(sweep) = &resolved.n_sweep {
        let _ = writeln!(
            m,
            "n_sweep = {}",
            sweep
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
    }
    let _ = writeln!(m, "n_x = {}", setup.n_x);
    let _ = writeln!(m, "alpha = {}", setup.alpha);
    let _ = writeln!(m, "eta = {}", setup.eta);
    let _ = writeln!(m, "xi = {}", setup.xi);
    let _ = writeln!(m, "zeta = {}", setup.zeta);
    let _ = writeln!(m, "kernel = {}", setup.family.name());
    match setup.shape {
        crate::diffmat::ShapeRule::Fixed(e) => {
            let _ = writeln!(m, "shape = {e}");
        }
        crate::diffmat::ShapeRule::HalfWidth { factor } => {
            let _ = writeln!(m, "shape = auto (factor {factor} / stencil half-width)");
        }
    }
    let _ = writeln!(m, "contour_kind = {}", resolved.contour.kind.name());
    let _ = writeln!(m, "contour_m = {}", resolved.contour.m);
    let _ = writeln!(
        m,
        "contour_window = {},{}",
        resolved.contour.window.0, resolved.contour.window.1
    );
    let _ = writeln!(m, "contour_v = {}", sci(resolved.contour.v));
    let _ = writeln!(m, "contour_h = {}", sci(resolved.contour.h));
    let _ = writeln!(m, "contour_provenance = {}", resolved.provenance.name());
    let _ = writeln!(m, "times = {}", float_list(&setup.times));
    if !setup.probes.is_empty() {
        let _ = writeln!(m, "probes_requested = {}", float_list(&setup.probes));
        let snapped: Vec<f64> = probes.iter().map(|p| p.x_node).collect();
        let _ = writeln!(m, "probes_snapped = {}", float_list(&snapped));
    }
    if let Some(period) = setup.period {
        let _ = writeln!(m, "period = {period}");
        if let Some(r) = probes.iter().find_map(|p| p.report.as_ref()) {
            let t_last = *setup.times.last().expect("validated nonempty");
            let window = resolved
                .periodicity_window
                .unwrap_or((t_last - 4.0 * period, t_last));
            let _ = writeln!(m, "periodicity_window = {},{}", window.0, window.1);
            let _ = writeln!(m, "periodicity_stride = {}", r.stride);
        }
        let _ = writeln!(m, "quiet_level = {}", resolved.quiet_level);
    }
    let _ = writeln!(m, "files = {}", files.join(","));
    for check in checks {
        let _ = writeln!(
            m,
            "check {}: threshold {}, observed {}, {}",
            check.name,
            sci(check.threshold),
            sci(check.observed),
            if check.passed { "pass" } else { "FAIL" }
        );
    }
    let _ = writeln!(m, "result = {}", if passed { "pass" } else { "FAIL" });
    fs::write(dir.join("manifest.txt"), m)?;

    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;
    use std::path::Path;

    fn scratch_dir(tag: &str) -> PathBuf {
        std::env::temp_dir().join(format!("fracwave-runner-{tag}-{}", std::process::id()))
    }

    fn read(dir: &Path, name: &str) -> String {
        fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    fn small_diffusion(tag: &str) -> ResolvedRun {
        // A fast linear configuration: diffusion benchmark shrunk to 21
        // nodes, one output time.
        let mut cfg = RunConfig::parse("problem = problem2\nn = 21\nn_x = 5\n").unwrap();
        cfg.out = Some(scratch_dir(tag));
        cfg.checks.max_linf = Some(1.0);
        cfg.checks.max_picard = Some(10);
        cfg.resolve().unwrap()
    }

    #[test]
    fn artifacts_cover_profiles_errors_and_stats() {
        let resolved = small_diffusion("artifacts");
        let out = run(&resolved, &Exec::sequential()).unwrap();
        assert!(out.passed, "checks: {:?}", out.checks);
        for name in ["profiles_n21.csv", "exact_n21.csv", "errors.csv", "stats.csv"] {
            assert!(out.files.iter().any(|f| f == name), "missing {name}");
        }
        let profiles = read(&out.out_dir, "profiles_n21.csv");
        assert!(profiles.starts_with("x,u(t=0.5)\n"), "{profiles}");
        assert_eq!(profiles.lines().count(), 22);
        let manifest = read(&out.out_dir, "manifest.txt");
        assert!(manifest.contains("problem = problem2"));
        assert!(manifest.contains("contour_provenance = preset"));
        assert!(manifest.contains("check require_linf"));
        assert!(manifest.contains("result = pass"));
        fs::remove_dir_all(&out.out_dir).ok();
    }

    #[test]
    fn emitted_norms_recompute_exactly_from_emitted_profiles() {
        let resolved = small_diffusion("roundtrip");
        let out = run(&resolved, &Exec::sequential()).unwrap();
        let parse_csv = |name: &str| -> Vec<Vec<f64>> {
            read(&out.out_dir, name)
                .lines()
                .skip(1)
                .map(|line| {
                    line.split(',')
                        .map(|v| v.parse::<f64>().unwrap())
                        .collect()
                })
                .collect()
        };
        let approx = parse_csv("profiles_n21.csv");
        let exact = parse_csv("exact_n21.csv");
        let u: Vec<f64> = approx.iter().map(|row| row[1]).collect();
        let e: Vec<f64> = exact.iter().map(|row| row[1]).collect();
        let norms = error_norms(&u, &e).unwrap();
        let errors = parse_csv("errors.csv");
        assert_eq!(errors.len(), 1);
        // Bitwise equality: the CSV round trip must not perturb the norms.
        assert_eq!(errors[0][2].to_bits(), norms.linf.to_bits());
        assert_eq!(errors[0][3].to_bits(), norms.l2.to_bits());
        assert_eq!(errors[0][4].to_bits(), norms.rms.to_bits());
        fs::remove_dir_all(&out.out_dir).ok();
    }

    #[test]
    fn reruns_and_execution_modes_are_byte_identical() {
        let mut first = small_diffusion("bytes-a");
        let mut second = small_diffusion("bytes-b");
        first.out = scratch_dir("bytes-a");
        second.out = scratch_dir("bytes-b");
        let a = run(&first, &Exec::sequential()).unwrap();
        let b = run(&second, &Exec::default()).unwrap();
        // Rerun the first configuration in place as well.
        let a2 = run(&first, &Exec::sequential()).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(a.files, a2.files);
        for name in a.files.iter().chain([&"manifest.txt".to_string()]) {
            let bytes_a = fs::read(a.out_dir.join(name)).unwrap();
            let bytes_b = fs::read(b.out_dir.join(name)).unwrap();
            assert_eq!(bytes_a, bytes_b, "{name} differs across execution modes");
        }
        fs::remove_dir_all(&a.out_dir).ok();
        fs::remove_dir_all(&b.out_dir).ok();
    }

    #[test]
    fn grid_sweep_writes_one_profile_set_per_size() {
        let mut cfg = RunConfig::parse("problem = problem2\nn_x = 5\n").unwrap();
        cfg.n_sweep = Some(vec![11, 21]);
        cfg.out = Some(scratch_dir("sweep"));
        let resolved = cfg.resolve().unwrap();
        let out = run(&resolved, &Exec::sequential()).unwrap();
        for name in ["profiles_n11.csv", "profiles_n21.csv", "errors.csv"] {
            assert!(out.files.iter().any(|f| f == name), "missing {name}");
        }
        let errors = read(&out.out_dir, "errors.csv");
        assert_eq!(errors.lines().count(), 3, "{errors}");
        // Finer grid should not be (much) worse; for this smooth problem it
        // is strictly better.
        let linf: Vec<f64> = errors
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
            .collect();
        assert!(linf[1] < linf[0], "no improvement: {linf:?}");
        fs::remove_dir_all(&out.out_dir).ok();
    }

    #[test]
    fn failed_checks_are_reported_not_swallowed() {
        let mut resolved = small_diffusion("failcheck");
        resolved.out = scratch_dir("failcheck");
        resolved.checks.max_linf = Some(1e-30); // unattainable
        let out = run(&resolved, &Exec::sequential()).unwrap();
        assert!(!out.passed);
        let linf_check = out
            .checks
            .iter()
            .find(|c| c.name == "require_linf")
            .unwrap();
        assert!(!linf_check.passed);
        assert!(linf_check.observed > linf_check.threshold);
        let manifest = read(&out.out_dir, "manifest.txt");
        assert!(manifest.contains("result = FAIL"));
        fs::remove_dir_all(&out.out_dir).ok();
    }

    #[test]
    fn check_prerequisites_fail_before_solving() {
        // Defect-ratio check without a period is rejected up front.
        let mut cfg = RunConfig::parse("problem = problem2\nn = 21\nn_x = 5\n").unwrap();
        cfg.checks.max_defect_ratio = Some(0.1);
        cfg.out = Some(scratch_dir("prereq"));
        let resolved = cfg.resolve().unwrap();
        let err = run(&resolved, &Exec::sequential()).unwrap_err();
        assert!(err.to_string().contains("require_defect_ratio"), "{err}");
        assert!(!resolved.out.exists(), "no artifacts on prerequisite error");
    }

    #[test]
    fn probe_traces_snap_to_nodes_and_report_periodicity() {
        // Tiny periodic run: coarse grid, short horizon, few times. Not
        // accurate, but exercises the probe/periodicity artifact paths.
        let mut cfg = RunConfig::parse(
            "problem = periodic_burgers\nn = 41\nn_x = 7\ntimes_uniform = 0.05,0.55,101\n",
        )
        .unwrap();
        cfg.probes = Some(vec![-0.5, 0.21]);
        cfg.period = Some(0.1);
        cfg.periodicity_window = Some((0.3, 0.55));
        cfg.out = Some(scratch_dir("probes"));
        let resolved = cfg.resolve().unwrap();
        let out = run(&resolved, &Exec::default()).unwrap();
        assert_eq!(out.probes.len(), 2);
        assert_eq!(out.probes[0].x_node, -0.5); // exact node of the 41-grid
        assert!((out.probes[1].x_node - 0.2).abs() < 1e-12); // snapped
        for name in ["probe_0.csv", "probe_1.csv", "periodicity.csv"] {
            assert!(out.files.iter().any(|f| f == name), "missing {name}");
        }
        let trace = read(&out.out_dir, "probe_0.csv");
        assert_eq!(trace.lines().count(), 102);
        let report = out.probes[0].report.as_ref().unwrap();
        assert!(report.stride > 0);
        let manifest = read(&out.out_dir, "manifest.txt");
        assert!(manifest.contains("probes_snapped"));
        assert!(manifest.contains("periodicity_stride"));
        fs::remove_dir_all(&out.out_dir).ok();
    }
}
