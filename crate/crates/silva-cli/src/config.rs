//! Flat `key = value` run configuration.
//!
//! One pair per line, `#` starts a comment, keys are case-insensitive.
//! Unknown keys are rejected in strict mode and collected as warnings in
//! lenient mode. `n` and `delta_r` are mutually exclusive ways to set the
//! resolution.

use silva_core::bench::{CaseKind, CaseSpec, Seeding};
use silva_core::integrator::{SnapshotCadence, SolverParams};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing required key `case`")]
    MissingCase,
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Malformed { line: usize, text: String },
    #[error("key `{key}`: cannot parse `{value}` as {expected}")]
    TypeMismatch { key: String, value: String, expected: &'static str },
    #[error("key `{key}` given twice")]
    DuplicateKey { key: String },
    #[error("`n` and `delta_r` are mutually exclusive")]
    ResolutionConflict,
    #[error("{0}")]
    Invalid(String),
}

/// Fully resolved run parameters.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub case: CaseKind,
    pub n: usize,
    pub reynolds: f64,
    pub t_end: f64,
    pub seeding: Seeding,
    pub seed: u64,
    pub cfl: f64,
    pub visc_safety: f64,
    pub dt_max: f64,
    pub v_ref: f64,
    pub minres_tol: f64,
    pub minres_max_iter_factor: usize,
    pub outer_tol: f64,
    pub outer_max_iter: usize,
    pub inner_tol: f64,
    pub stabilizer: bool,
    pub output_dir: String,
    /// Snapshot cadence: steps take precedence when both are set.
    pub snapshot_every_steps: Option<u64>,
    pub snapshot_dt: Option<f64>,
    pub threads: usize,
    pub write_particles: bool,
    pub write_mesh: bool,
    pub write_vtk: bool,
    pub write_diagnostics: bool,
}

impl SimConfig {
    pub fn case_spec(&self) -> CaseSpec {
        CaseSpec {
            kind: self.case,
            n_per_side: self.n,
            reynolds: self.reynolds,
            t_end: self.t_end,
            seeding: self.seeding,
            seed: self.seed,
        }
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            cfl: self.cfl,
            visc_safety: self.visc_safety,
            dt_max: self.dt_max,
            v_ref: self.v_ref,
            minres_tol: self.minres_tol,
            minres_max_iter_factor: self.minres_max_iter_factor,
            outer_tol: self.outer_tol,
            outer_max_iter: self.outer_max_iter,
            inner_tol: self.inner_tol,
            stabilizer: self.stabilizer,
        }
    }

    pub fn cadence(&self) -> SnapshotCadence {
        if let Some(k) = self.snapshot_every_steps {
            SnapshotCadence::EverySteps(k)
        } else if let Some(dt) = self.snapshot_dt {
            SnapshotCadence::SimTime(dt)
        } else {
            SnapshotCadence::Never
        }
    }
}

/// Parse in strict mode (unknown keys are errors).
pub fn parse_config(text: &str) -> Result<SimConfig, ConfigError> {
    parse_config_with(text, false).map(|(c, _)| c)
}

/// Parse with a lenient flag; lenient mode returns unknown keys as warnings.
pub fn parse_config_with(
    text: &str,
    lenient: bool,
) -> Result<(SimConfig, Vec<String>), ConfigError> {
    let mut raw: Vec<(String, String)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let stripped = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(ConfigError::Malformed { line: lineno + 1, text: stripped.to_string() });
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if raw.iter().any(|(k, _)| *k == key) {
            return Err(ConfigError::DuplicateKey { key });
        }
        raw.push((key, value));
    }

    let mut warnings = Vec::new();
    let get = |key: &str| raw.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());

    const KNOWN: &[&str] = &[
        "case", "n", "delta_r", "re", "t_end", "seeding", "seed", "cfl", "visc_safety",
        "dt_max", "v_ref", "minres_tol", "minres_max_iter_factor", "outer_tol",
        "outer_max_iter", "inner_tol", "stabilizer", "output_dir", "snapshot_every_steps",
        "snapshot_dt", "threads", "write_particles", "write_mesh", "write_vtk",
        "write_diagnostics",
    ];
    for (k, _) in &raw {
        if !KNOWN.contains(&k.as_str()) {
            if lenient {
                warnings.push(format!("ignoring unknown key `{k}`"));
            } else {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
        }
    }

    let case = match get("case") {
        Some(id) => CaseKind::from_id(id)
            .map_err(|_| ConfigError::TypeMismatch {
                key: "case".into(),
                value: id.into(),
                expected: "one of taylor_green|gresho|lid_cavity|rayleigh_taylor",
            })?,
        None => return Err(ConfigError::MissingCase),
    };

    let f64_key = |key: &str| -> Result<Option<f64>, ConfigError> {
        match get(key) {
            None => Ok(None),
            Some(v) => {
                let lower = v.to_ascii_lowercase();
                if key == "re" && (lower == "inf" || lower == "infinity") {
                    return Ok(Some(f64::INFINITY));
                }
                v.parse::<f64>().map(Some).map_err(|_| ConfigError::TypeMismatch {
                    key: key.into(),
                    value: v.into(),
                    expected: "a number",
                })
            }
        }
    };
    let usize_key = |key: &str| -> Result<Option<usize>, ConfigError> {
        match get(key) {
            None => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|_| ConfigError::TypeMismatch {
                key: key.into(),
                value: v.into(),
                expected: "a non-negative integer",
            }),
        }
    };
    let u64_key = |key: &str| -> Result<Option<u64>, ConfigError> {
        match get(key) {
            None => Ok(None),
            Some(v) => v.parse::<u64>().map(Some).map_err(|_| ConfigError::TypeMismatch {
                key: key.into(),
                value: v.into(),
                expected: "a non-negative integer",
            }),
        }
    };
    let bool_key = |key: &str| -> Result<Option<bool>, ConfigError> {
        match get(key) {
            None => Ok(None),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "true" | "on" | "yes" | "1" => Ok(Some(true)),
                "false" | "off" | "no" | "0" => Ok(Some(false)),
                _ => Err(ConfigError::TypeMismatch {
                    key: key.into(),
                    value: v.into(),
                    expected: "a boolean",
                }),
            },
        }
    };

    // resolution: N directly, or delta_r converted through the short side
    let n_key = usize_key("n")?;
    let delta_r = f64_key("delta_r")?;
    let n = match (n_key, delta_r) {
        (Some(_), Some(_)) => return Err(ConfigError::ResolutionConflict),
        (Some(n), None) => n,
        (None, Some(dr)) => {
            if !(dr > 0.0) {
                return Err(ConfigError::Invalid(format!("delta_r must be positive, got {dr}")));
            }
            let probe = CaseSpec::new(case, 8);
            let d = probe.domain();
            let short = d.width().min(d.height());
            (short / dr).round().max(4.0) as usize
        }
        (None, None) => 50,
    };

    let seeding = match get("seeding") {
        None => Seeding::Cartesian,
        Some("cartesian") => Seeding::Cartesian,
        Some("vogel") => Seeding::Vogel,
        Some("jittered") => Seeding::Jittered,
        Some(v) => {
            return Err(ConfigError::TypeMismatch {
                key: "seeding".into(),
                value: v.into(),
                expected: "cartesian|vogel|jittered",
            })
        }
    };

    let config = SimConfig {
        case,
        n,
        reynolds: f64_key("re")?.unwrap_or_else(|| case.default_reynolds()),
        t_end: f64_key("t_end")?.unwrap_or_else(|| case.default_t_end()),
        seeding,
        seed: u64_key("seed")?.unwrap_or(0),
        cfl: f64_key("cfl")?.unwrap_or(0.1),
        visc_safety: f64_key("visc_safety")?.unwrap_or(0.25),
        dt_max: f64_key("dt_max")?.unwrap_or(f64::INFINITY),
        v_ref: f64_key("v_ref")?.unwrap_or(1.0),
        minres_tol: f64_key("minres_tol")?.unwrap_or(1e-9),
        minres_max_iter_factor: usize_key("minres_max_iter_factor")?.unwrap_or(10),
        outer_tol: f64_key("outer_tol")?.unwrap_or(1e-12),
        outer_max_iter: usize_key("outer_max_iter")?.unwrap_or(100),
        inner_tol: f64_key("inner_tol")?.unwrap_or(1e-12),
        stabilizer: bool_key("stabilizer")?.unwrap_or(true),
        output_dir: get("output_dir").unwrap_or("out").to_string(),
        snapshot_every_steps: u64_key("snapshot_every_steps")?,
        snapshot_dt: f64_key("snapshot_dt")?,
        threads: usize_key("threads")?.unwrap_or(0),
        write_particles: bool_key("write_particles")?.unwrap_or(true),
        write_mesh: bool_key("write_mesh")?.unwrap_or(false),
        write_vtk: bool_key("write_vtk")?.unwrap_or(false),
        write_diagnostics: bool_key("write_diagnostics")?.unwrap_or(true),
    };
    validate(&config)?;
    Ok((config, warnings))
}

fn validate(c: &SimConfig) -> Result<(), ConfigError> {
    let positive = [
        ("cfl", c.cfl),
        ("visc_safety", c.visc_safety),
        ("v_ref", c.v_ref),
        ("minres_tol", c.minres_tol),
        ("outer_tol", c.outer_tol),
        ("inner_tol", c.inner_tol),
        ("dt_max", c.dt_max),
    ];
    for (key, v) in positive {
        if !(v > 0.0) {
            return Err(ConfigError::Invalid(format!("{key} must be positive, got {v}")));
        }
    }
    if c.n < 4 {
        return Err(ConfigError::Invalid(format!("n must be at least 4, got {}", c.n)));
    }
    if !(c.reynolds > 0.0) {
        return Err(ConfigError::Invalid(format!(
            "re must be positive or `inf`, got {}",
            c.reynolds
        )));
    }
    if !(c.t_end >= 0.0) || !c.t_end.is_finite() {
        return Err(ConfigError::Invalid(format!("t_end must be finite and >= 0, got {}", c.t_end)));
    }
    if c.minres_max_iter_factor == 0 || c.outer_max_iter == 0 {
        return Err(ConfigError::Invalid("iteration caps must be positive".into()));
    }
    if let Some(k) = c.snapshot_every_steps {
        if k == 0 {
            return Err(ConfigError::Invalid("snapshot_every_steps must be positive".into()));
        }
    }
    if let Some(dt) = c.snapshot_dt {
        if !(dt > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "snapshot_dt must be positive, got {dt}"
            )));
        }
    }
    Ok(())
}
