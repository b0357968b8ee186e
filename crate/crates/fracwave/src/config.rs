//! Flat key = value run configuration.
//!
//! A run is a built-in problem id plus overrides. Every knob the solver
//! exposes has a key; unset keys fall back to the problem's stock settings,
//! and the runner's manifest echoes the fully resolved values so a run can
//! be reproduced from its output directory alone.

use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::contour::{ContourKind, ContourSpec};
use crate::diffmat::ShapeRule;
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::presets::{resolve_contour, ContourProvenance};
use crate::problems::{builtin, ProblemKind, ProblemSetup};

/// Pass/fail thresholds a run can request. A run with checks exits nonzero
/// unless every requested check passes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunChecks {
    /// Largest allowed L∞ error against the exact solution, over all output
    /// times.
    pub max_linf: Option<f64>,
    /// Largest allowed Picard iteration count at any time.
    pub max_picard: Option<u32>,
    /// Largest allowed periodicity defect/amplitude ratio at any probe whose
    /// amplitude exceeds `quiet_level`.
    pub max_defect_ratio: Option<f64>,
}

/// Parsed configuration: a problem id plus optional overrides.
#[derive(Clone, Debug, Default)]
pub struct RunConfig {
    pub problem: String,
    pub n: Option<usize>,
    /// Grid sweep for convergence tables; mutually exclusive with probes.
    pub n_sweep: Option<Vec<usize>>,
    pub n_x: Option<usize>,
    pub alpha: Option<f64>,
    pub eta: Option<f64>,
    pub xi: Option<f64>,
    pub zeta: Option<f64>,
    /// Solution-family constant of the Cole–Hopf benchmark.
    pub constant: Option<f64>,
    pub kernel: Option<KernelFamily>,
    pub shape: Option<ShapeRule>,
    pub contour: Option<ContourKind>,
    pub contour_m: Option<usize>,
    pub window: Option<(f64, f64)>,
    /// Explicit contour parameters; both or neither.
    pub contour_v: Option<f64>,
    pub contour_h: Option<f64>,
    pub times: Option<Vec<f64>>,
    pub probes: Option<Vec<f64>>,
    pub period: Option<f64>,
    /// Window for periodicity diagnostics; defaults to the last four periods
    /// of the time range.
    pub periodicity_window: Option<(f64, f64)>,
    /// Probes with amplitude at or below this level are treated as quiet and
    /// skip the defect-ratio check.
    pub quiet_level: Option<f64>,
    pub out: Option<PathBuf>,
    pub checks: RunChecks,
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64> {
    value.trim().parse::<f64>().map_err(|_| {
        Error::ConfigParse(format!("line {line}: {key} expects a number, got {value:?}"))
    })
}

fn parse_usize(key: &str, value: &str, line: usize) -> Result<usize> {
    value.trim().parse::<usize>().map_err(|_| {
        Error::ConfigParse(format!(
            "line {line}: {key} expects a non-negative integer, got {value:?}"
        ))
    })
}

fn parse_f64_list(key: &str, value: &str, line: usize) -> Result<Vec<f64>> {
    value
        .split(',')
        .map(|part| {
            part.trim().parse::<f64>().map_err(|_| {
                Error::ConfigParse(format!(
                    "line {line}: {key} expects comma-separated numbers, got {part:?}"
                ))
            })
        })
        .collect()
}

fn parse_pair(key: &str, value: &str, line: usize) -> Result<(f64, f64)> {
    let items = parse_f64_list(key, value, line)?;
    if items.len() != 2 {
        return Err(Error::ConfigParse(format!(
            "line {line}: {key} expects exactly two comma-separated numbers"
        )));
    }
    Ok((items[0], items[1]))
}

impl RunConfig {
    /// Parses the flat key = value format. `#` starts a comment line; blank
    /// lines are skipped; keys may appear at most once.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| {
                Error::ConfigParse(format!("line {line}: expected key = value, got {trimmed:?}"))
            })?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::ConfigParse(format!(
                    "line {line}: duplicate key {key:?}"
                )));
            }
            cfg.apply_key(key, value.trim(), line)?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override (command-line form). Unlike file
    /// parsing, overrides may replace values already set.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::ConfigParse(format!("override {assignment:?} is not key=value"))
        })?;
        self.apply_key(key.trim(), value.trim(), 0).map_err(|e| match e {
            Error::ConfigParse(msg) => Error::ConfigParse(match msg.strip_prefix("line 0: ") {
                Some(rest) => format!("override {assignment:?}: {rest}"),
                None => msg,
            }),
            other => other,
        })
    }

    fn apply_key(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "problem" => self.problem = value.to_string(),
            "n" => self.n = Some(parse_usize(key, value, line)?),
            "n_sweep" => {
                let ns = value
                    .split(',')
                    .map(|p| parse_usize(key, p, line))
                    .collect::<Result<Vec<_>>>()?;
                self.n_sweep = Some(ns);
            }
            "n_x" => self.n_x = Some(parse_usize(key, value, line)?),
            "alpha" => self.alpha = Some(parse_f64(key, value, line)?),
            "eta" => self.eta = Some(parse_f64(key, value, line)?),
            "xi" => self.xi = Some(parse_f64(key, value, line)?),
            "zeta" => self.zeta = Some(parse_f64(key, value, line)?),
            "constant" => self.constant = Some(parse_f64(key, value, line)?),
            "kernel" => {
                self.kernel = Some(match value {
                    "multiquadric" | "mq" => KernelFamily::Multiquadric,
                    "inverse-multiquadric" | "imq" => KernelFamily::InverseMultiquadric,
                    "gaussian" => KernelFamily::Gaussian,
                    other => {
                        return Err(Error::ConfigParse(format!(
                            "line {line}: unknown kernel {other:?} (multiquadric, \
                             inverse-multiquadric, gaussian)"
                        )))
                    }
                })
            }
            "shape" => {
                self.shape = Some(if value == "auto" {
                    ShapeRule::default_local()
                } else {
                    ShapeRule::Fixed(parse_f64(key, value, line)?)
                })
            }
            "contour" => {
                self.contour = Some(value.parse::<ContourKind>().map_err(|e| {
                    Error::ConfigParse(format!("line {line}: {e}"))
                })?)
            }
            "contour_m" => self.contour_m = Some(parse_usize(key, value, line)?),
            "window" => self.window = Some(parse_pair(key, value, line)?),
            "contour_v" => self.contour_v = Some(parse_f64(key, value, line)?),
            "contour_h" => self.contour_h = Some(parse_f64(key, value, line)?),
            "times" => self.times = Some(parse_f64_list(key, value, line)?),
            "times_uniform" => {
                let items = parse_f64_list(key, value, line)?;
                if items.len() != 3 || items[2] < 1.0 || items[2].fract() != 0.0 {
                    return Err(Error::ConfigParse(format!(
                        "line {line}: times_uniform expects lo,hi,count"
                    )));
                }
                self.times = Some(crate::problems::uniform_times(
                    (items[0], items[1]),
                    items[2] as usize,
                ));
            }
            "probes" => self.probes = Some(parse_f64_list(key, value, line)?),
            "period" => self.period = Some(parse_f64(key, value, line)?),
            "periodicity_window" => {
                self.periodicity_window = Some(parse_pair(key, value, line)?)
            }
            "quiet_level" => self.quiet_level = Some(parse_f64(key, value, line)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "require_linf" => self.checks.max_linf = Some(parse_f64(key, value, line)?),
            "require_picard" => {
                self.checks.max_picard = Some(parse_usize(key, value, line)? as u32)
            }
            "require_defect_ratio" => {
                self.checks.max_defect_ratio = Some(parse_f64(key, value, line)?)
            }
            other => {
                return Err(Error::ConfigParse(format!(
                    "line {line}: unknown key {other:?}"
                )))
            }
        }
        Ok(())
    }

    /// Resolves the configuration into a concrete problem setup and contour,
    /// collecting every violation rather than stopping at the first.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let mut violations = Vec::new();
        if self.problem.is_empty() {
            violations.push("problem id is required".to_string());
        }
        let mut setup = match builtin(&self.problem) {
            Ok(s) => s,
            Err(e) => {
                violations.push(e.to_string());
                return Err(Error::ConfigInvalid { violations });
            }
        };
        if let Some(n) = self.n {
            setup.n = n;
        }
        if let Some(n_x) = self.n_x {
            setup.n_x = n_x;
        }
        if let Some(alpha) = self.alpha {
            setup.alpha = alpha;
        }
        if let Some(eta) = self.eta {
            setup.eta = eta;
        }
        if let Some(xi) = self.xi {
            setup.xi = xi;
        }
        if let Some(zeta) = self.zeta {
            setup.zeta = zeta;
        }
        if let Some(c) = self.constant {
            match &mut setup.kind {
                ProblemKind::ColeHopf { constant } => *constant = c,
                _ => violations.push(
                    "constant only applies to the Cole-Hopf benchmark".to_string(),
                ),
            }
        }
        if let Some(kernel) = self.kernel {
            setup.family = kernel;
        }
        if let Some(shape) = self.shape {
            setup.shape = shape;
        }
        if let Some(kind) = self.contour {
            setup.contour_kind = kind;
        }
        if let Some(m) = self.contour_m {
            setup.m = m;
        }
        if let Some(window) = self.window {
            setup.window = window;
        }
        if let Some(times) = &self.times {
            setup.times = times.clone();
        }
        if let Some(probes) = &self.probes {
            setup.probes = probes.clone();
        }
        if let Some(period) = self.period {
            setup.period = Some(period);
        }

        // Structural validation, all violations collected.
        if setup.n < 3 {
            violations.push(format!("n = {} is too small (need at least 3)", setup.n));
        }
        if setup.n_x < 3 || setup.n_x > setup.n {
            violations.push(format!(
                "n_x = {} must lie in [3, n = {}]",
                setup.n_x, setup.n
            ));
        }
        if !(setup.alpha > 0.0 && setup.alpha <= 1.0) {
            violations.push(format!(
                "alpha = {} must lie in (0, 1]",
                setup.alpha
            ));
        }
        if setup.m < 1 {
            violations.push("contour_m must be at least 1".to_string());
        }
        if !(setup.window.0 > 0.0 && setup.window.1 > setup.window.0) {
            violations.push(format!(
                "window [{}, {}] must satisfy 0 < t0 < t1",
                setup.window.0, setup.window.1
            ));
        }
        if setup.times.is_empty() {
            violations.push("at least one output time is required".to_string());
        }
        if setup.times.windows(2).any(|w| w[0] >= w[1]) {
            violations.push("output times must be strictly increasing".to_string());
        }
        let slack = 1e-9 * (setup.window.1 - setup.window.0).abs();
        for &t in &setup.times {
            if t < setup.window.0 - slack || t > setup.window.1 + slack {
                violations.push(format!(
                    "output time {t} lies outside the contour window [{}, {}]",
                    setup.window.0, setup.window.1
                ));
                break;
            }
        }
        for &x in &setup.probes {
            if x < setup.domain.0 || x > setup.domain.1 {
                violations.push(format!(
                    "probe {x} lies outside the domain [{}, {}]",
                    setup.domain.0, setup.domain.1
                ));
            }
        }
        if let Some(p) = setup.period {
            if !(p > 0.0) {
                violations.push(format!("period {p} must be positive"));
            }
        }
        if let Some(sweep) = &self.n_sweep {
            if sweep.is_empty() {
                violations.push("n_sweep must name at least one grid size".to_string());
            }
            for &n in sweep {
                if n < 3 || setup.n_x > n {
                    violations.push(format!(
                        "n_sweep entry {n} must be at least max(3, n_x = {})",
                        setup.n_x
                    ));
                }
            }
            if !setup.probes.is_empty() || setup.period.is_some() {
                violations.push(
                    "n_sweep cannot be combined with probes or periodicity".to_string(),
                );
            }
        }
        if self.contour_v.is_some() != self.contour_h.is_some() {
            violations.push(
                "contour_v and contour_h must be given together".to_string(),
            );
        }
        if let (Some(v), Some(h)) = (self.contour_v, self.contour_h) {
            if !(v > 0.0) || !(h > 0.0) {
                violations.push(format!(
                    "explicit contour parameters must be positive, got v = {v}, h = {h}"
                ));
            }
        }
        let quiet = self.quiet_level.unwrap_or(0.05);
        if !(quiet >= 0.0) {
            violations.push(format!("quiet_level {quiet} must be non-negative"));
        }
        if let Some((lo, hi)) = self.periodicity_window {
            if !(lo < hi) {
                violations.push(format!(
                    "periodicity_window [{lo}, {hi}] must satisfy lo < hi"
                ));
            }
        }
        for (name, v) in [
            ("require_linf", self.checks.max_linf),
            ("require_defect_ratio", self.checks.max_defect_ratio),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    violations.push(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if !violations.is_empty() {
            return Err(Error::ConfigInvalid { violations });
        }

        // Contour resolution (after validation so errors here are real
        // resolution failures, not config typos).
        let (contour, provenance) = match (self.contour_v, self.contour_h) {
            (Some(v), Some(h)) => {
                let spec = match setup.contour_kind {
                    ContourKind::Parabolic => {
                        ContourSpec::parabolic(setup.m, h, v, setup.window)
                    }
                    ContourKind::Hyperbolic => {
                        ContourSpec::hyperbolic(setup.m, h, v, setup.window)
                    }
                };
                spec.validate()?;
                (spec, ContourProvenance::Explicit)
            }
            _ => resolve_contour(setup.contour_kind, setup.window, setup.m)?,
        };

        let out = self.out.clone().unwrap_or_else(|| {
            PathBuf::from("out").join(&setup.id)
        });
        Ok(ResolvedRun {
            setup,
            n_sweep: self.n_sweep.clone(),
            contour,
            provenance,
            out,
            checks: self.checks.clone(),
            quiet_level: quiet,
            periodicity_window: self.periodicity_window,
        })
    }
}

/// A fully resolved run: concrete problem, concrete contour, output plan.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub setup: ProblemSetup,
    pub n_sweep: Option<Vec<usize>>,
    pub contour: ContourSpec,
    pub provenance: ContourProvenance,
    pub out: PathBuf,
    pub checks: RunChecks,
    pub quiet_level: f64,
    pub periodicity_window: Option<(f64, f64)>,
}
