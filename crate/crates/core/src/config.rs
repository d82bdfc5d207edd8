//! Flat key/value run-configuration files.
//!
//! One `key = value` pair per line, `#` starts a comment. Recognized keys:
//! `frames`, `photons`, `epsilons`, `n_theta`, `n_phi`, `seed`, `n_starts`,
//! `max_iterations`, `objective_tolerance`, `param_tolerance`,
//! `output_dir`, `threads`, `detail`. List values are comma-separated;
//! numeric lists also accept `start:end:step` ranges. CLI flags override
//! file values, which override the subcommand defaults.

use std::fs;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("bad numeric list `{0}`: {1}")]
    BadList(String, String),
}

/// Partial run settings; `None` means "not specified here".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub frames: Option<Vec<String>>,
    pub photons: Option<Vec<f64>>,
    pub epsilons: Option<Vec<f64>>,
    pub n_theta: Option<usize>,
    pub n_phi: Option<usize>,
    pub seed: Option<u64>,
    pub n_starts: Option<usize>,
    pub max_iterations: Option<usize>,
    pub objective_tolerance: Option<f64>,
    pub param_tolerance: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    pub detail: Option<bool>,
}

impl RunConfig {
    /// Field-wise merge: values in `self` win over `fallback`.
    pub fn or(self, fallback: RunConfig) -> RunConfig {
        RunConfig {
            frames: self.frames.or(fallback.frames),
            photons: self.photons.or(fallback.photons),
            epsilons: self.epsilons.or(fallback.epsilons),
            n_theta: self.n_theta.or(fallback.n_theta),
            n_phi: self.n_phi.or(fallback.n_phi),
            seed: self.seed.or(fallback.seed),
            n_starts: self.n_starts.or(fallback.n_starts),
            max_iterations: self.max_iterations.or(fallback.max_iterations),
            objective_tolerance: self.objective_tolerance.or(fallback.objective_tolerance),
            param_tolerance: self.param_tolerance.or(fallback.param_tolerance),
            output_dir: self.output_dir.or(fallback.output_dir),
            threads: self.threads.or(fallback.threads),
            detail: self.detail.or(fallback.detail),
        }
    }

    pub fn from_file(path: impl Into<PathBuf>) -> Result<RunConfig, ConfigError> {
        let path = path.into();
        let text = fs::read_to_string(&path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_str_named(&text, &path.display().to_string())
    }

    pub fn from_str_named(text: &str, path: &str) -> Result<RunConfig, ConfigError> {
        let err = |line: usize, message: String| ConfigError::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut cfg = RunConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(lineno, format!("expected `key = value`, found `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            let parse_err = |what: &str| err(lineno, format!("bad {what} `{value}` for key `{key}`"));
            match key {
                "frames" => {
                    cfg.frames = Some(value.split(',').map(|s| s.trim().to_string()).collect())
                }
                "photons" => {
                    cfg.photons =
                        Some(parse_f64_list(value).map_err(|e| err(lineno, e.to_string()))?)
                }
                "epsilons" => {
                    cfg.epsilons =
                        Some(parse_f64_list(value).map_err(|e| err(lineno, e.to_string()))?)
                }
                "n_theta" => cfg.n_theta = Some(value.parse().map_err(|_| parse_err("integer"))?),
                "n_phi" => cfg.n_phi = Some(value.parse().map_err(|_| parse_err("integer"))?),
                "seed" => cfg.seed = Some(value.parse().map_err(|_| parse_err("integer"))?),
                "n_starts" => cfg.n_starts = Some(value.parse().map_err(|_| parse_err("integer"))?),
                "max_iterations" => {
                    cfg.max_iterations = Some(value.parse().map_err(|_| parse_err("integer"))?)
                }
                "objective_tolerance" => {
                    cfg.objective_tolerance = Some(value.parse().map_err(|_| parse_err("float"))?)
                }
                "param_tolerance" => {
                    cfg.param_tolerance = Some(value.parse().map_err(|_| parse_err("float"))?)
                }
                "output_dir" => cfg.output_dir = Some(PathBuf::from(value)),
                "threads" => cfg.threads = Some(value.parse().map_err(|_| parse_err("integer"))?),
                "detail" => cfg.detail = Some(value.parse().map_err(|_| parse_err("boolean"))?),
                other => return Err(err(lineno, format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }
}

/// Parse `1,5,10` or an inclusive range `0:1:0.05`.
///
/// Range values are generated as `start + i * step` and rounded to 12
/// decimals, so sweeps over decimal steps come out as the expected grid.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |msg: &str| ConfigError::BadList(s.to_string(), msg.to_string());
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let start: f64 = parts[0].trim().parse().map_err(|_| bad("bad start"))?;
        let end: f64 = parts[1].trim().parse().map_err(|_| bad("bad end"))?;
        let step: f64 = parts[2].trim().parse().map_err(|_| bad("bad step"))?;
        if step <= 0.0 || step.is_nan() {
            return Err(bad("step must be positive"));
        }
        if end < start {
            return Err(bad("end below start"));
        }
        let n = ((end - start) / step).round() as usize;
        let values = (0..=n)
            .map(|i| {
                let v = start + i as f64 * step;
                (v * 1e12).round() / 1e12
            })
            .filter(|&v| v <= end + 1e-12)
            .collect::<Vec<_>>();
        if values.is_empty() {
            return Err(bad("empty range"));
        }
        return Ok(values);
    }
    if parts.len() != 1 {
        return Err(bad("expected `a,b,c` or `start:end:step`"));
    }
    let values: Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let values = values.map_err(|_| bad("bad float"))?;
    if values.is_empty() {
        return Err(bad("empty list"));
    }
    Ok(values)
}
