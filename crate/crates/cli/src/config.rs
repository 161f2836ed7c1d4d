//! Flat `key=value` run configuration. Values are layered: built-in
//! defaults, then the `--config` file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cp3::ModelParams;

use crate::error::{io_error, CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Keys that map onto [`ModelParams`] fields.
pub const PARAM_KEYS: [&str; 13] = [
    "k_supports",
    "pf_threshold",
    "gauss_c",
    "alpha",
    "candidate_multiplier",
    "gamma_scale",
    "gamma_floor",
    "range_margin_lo",
    "range_margin_hi",
    "range_check",
    "cov_epsilon",
    "seed",
    "training_frames",
];

const PATH_KEYS: [&str; 8] = ["input", "model", "output", "save_model", "masks", "list", "report", "manifest"];
const OTHER_KEYS: [&str; 6] = ["command", "version", "stride", "precision", "first", "last"];

/// Splits `key=value` lines; blank lines and `#` comments are skipped.
/// Repeated keys are returned in order, callers decide whether to allow them.
pub fn parse_lines(text: &str, source: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("{source}:{}: expected key=value, got '{line}'", n + 1)))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(CliError::usage(format!("{source}:{}: empty key", n + 1)));
        }
        out.push((key.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_value<V: FromStr>(key: &str, value: &str) -> CliResult<V> {
    value
        .parse()
        .map_err(|_| CliError::usage(format!("bad value '{value}' for {key}")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(CliError::usage(format!("bad value '{value}' for {key}: expected true or false"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

impl FromStr for Precision {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => Err(CliError::usage(format!("precision must be f32 or f64, got '{s}'"))),
        }
    }
}

pub fn apply_param(p: &mut ModelParams, key: &str, value: &str) -> CliResult<()> {
    match key {
        "k_supports" => p.k_supports = parse_value(key, value)?,
        "pf_threshold" => p.pf_threshold = parse_value(key, value)?,
        "gauss_c" => p.gauss_c = parse_value(key, value)?,
        "alpha" => p.alpha = parse_value(key, value)?,
        "candidate_multiplier" => p.candidate_multiplier = parse_value(key, value)?,
        "gamma_scale" => p.gamma_scale = parse_value(key, value)?,
        "gamma_floor" => p.gamma_floor = parse_value(key, value)?,
        "range_margin_lo" => p.range_margin_lo = parse_value(key, value)?,
        "range_margin_hi" => p.range_margin_hi = parse_value(key, value)?,
        "range_check" => p.range_check_enabled = parse_bool(key, value)?,
        "cov_epsilon" => p.cov_epsilon = parse_value(key, value)?,
        "seed" => p.seed = parse_value(key, value)?,
        "training_frames" => p.training_frames = parse_value(key, value)?,
        _ => return Err(CliError::usage(format!("unknown parameter '{key}'"))),
    }
    Ok(())
}

/// Every parameter as `(key, value)`, in [`PARAM_KEYS`] order. Floats use
/// the shortest representation that parses back to the same value.
pub fn param_pairs(p: &ModelParams) -> Vec<(&'static str, String)> {
    vec![
        ("k_supports", p.k_supports.to_string()),
        ("pf_threshold", p.pf_threshold.to_string()),
        ("gauss_c", p.gauss_c.to_string()),
        ("alpha", p.alpha.to_string()),
        ("candidate_multiplier", p.candidate_multiplier.to_string()),
        ("gamma_scale", p.gamma_scale.to_string()),
        ("gamma_floor", p.gamma_floor.to_string()),
        ("range_margin_lo", p.range_margin_lo.to_string()),
        ("range_margin_hi", p.range_margin_hi.to_string()),
        ("range_check", p.range_check_enabled.to_string()),
        ("cov_epsilon", p.cov_epsilon.to_string()),
        ("seed", p.seed.to_string()),
        ("training_frames", p.training_frames.to_string()),
    ]
}

/// Resolved settings for one command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub command: String,
    /// Parameter overrides, applied on top of defaults or a loaded model.
    pub params: BTreeMap<String, String>,
    pub stride: Option<usize>,
    pub precision: Option<Precision>,
    pub input: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub save_model: Option<PathBuf>,
    pub masks: Option<PathBuf>,
    pub list: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub first: Option<usize>,
    pub last: Option<usize>,
}

impl RunConfig {
    pub fn new(command: &str) -> Self {
        RunConfig { command: command.into(), ..RunConfig::default() }
    }

    /// Reads a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(command: &str, path: &Path) -> CliResult<Self> {
        let text = read_text(path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut cfg = RunConfig::new(command);
        let mut seen = BTreeMap::new();
        for (key, value) in parse_lines(&text, &path.display().to_string())? {
            if seen.insert(key.clone(), ()).is_some() {
                return Err(CliError::usage(format!("{}: duplicate key '{key}'", path.display())));
            }
            if PATH_KEYS.contains(&key.as_str()) {
                let p = PathBuf::from(&value);
                cfg.set(&key, &base.join(p).to_string_lossy())?;
            } else {
                cfg.set(&key, &value)?;
            }
        }
        Ok(cfg)
    }

    /// Sets one key; unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let path = || Some(PathBuf::from(value));
        match key {
            k if PARAM_KEYS.contains(&k) => {
                // Parse now so a bad value is reported against its key.
                apply_param(&mut ModelParams::default(), k, value)?;
                self.params.insert(k.to_string(), value.to_string());
            }
            "command" => {
                if value != self.command {
                    log::debug!("config was written by '{value}', running '{}'", self.command);
                }
            }
            "version" => {
                if value != VERSION {
                    log::warn!("config was written by version {value}, this is {VERSION}");
                }
            }
            "stride" => self.stride = Some(parse_value(key, value)?),
            "precision" => self.precision = Some(value.parse()?),
            "first" => self.first = Some(parse_value(key, value)?),
            "last" => self.last = Some(parse_value(key, value)?),
            "input" => self.input = path(),
            "model" => self.model = path(),
            "output" => self.output = path(),
            "save_model" => self.save_model = path(),
            "masks" => self.masks = path(),
            "list" => self.list = path(),
            "report" => self.report = path(),
            "manifest" => self.manifest = path(),
            _ => {
                let known: Vec<&str> = PARAM_KEYS.iter().chain(&PATH_KEYS).chain(&OTHER_KEYS).copied().collect();
                return Err(CliError::usage(format!(
                    "unknown config key '{key}' (known: {})",
                    known.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn set_opt<V: ToString>(&mut self, key: &str, value: Option<V>) -> CliResult<()> {
        match value {
            Some(v) => self.set(key, &v.to_string()),
            None => Ok(()),
        }
    }

    /// `base` with every override applied, validated.
    pub fn resolve_params(&self, mut base: ModelParams) -> CliResult<ModelParams> {
        for (k, v) in &self.params {
            apply_param(&mut base, k, v)?;
        }
        base.validate().map_err(|e| CliError::usage(e.to_string()))?;
        Ok(base)
    }

    pub fn require<'a>(&self, value: &'a Option<PathBuf>, flag: &str) -> CliResult<&'a Path> {
        value
            .as_deref()
            .ok_or_else(|| CliError::usage(format!("{} requires --{flag}", self.command)))
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or(1)
    }
}

/// Accumulates the lines of a manifest: a config file that replays the run.
pub struct Manifest {
    text: String,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Manifest { text: format!("# cp3 {command} manifest\n") };
        m.push("command", command);
        m.push("version", VERSION);
        m
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.text, "{key}={value}");
        self
    }

    pub fn path(&mut self, key: &str, path: &Path) -> &mut Self {
        let abs = fs::canonicalize(path).unwrap_or_else(|_| path.to_path_buf());
        self.push(key, abs.display())
    }

    pub fn params(&mut self, p: &ModelParams) -> &mut Self {
        for (k, v) in param_pairs(p) {
            self.push(k, v);
        }
        self
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        }
        fs::write(path, self.text()).map_err(|e| io_error(path, e))?;
        log::info!("manifest written to {}", path.display());
        Ok(())
    }
}

/// `path` with `suffix` appended to its file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}
