//! Scene files for `cp3 synth`: `key=value` lines, `event` may repeat.
//!
//! ```text
//! width=64
//! height=64
//! channels=1
//! frames=200
//! seed=7
//! noise=2
//! background=flat level=100
//! event=box x=0 y=28 w=8 h=8 intensity=180 vx=1 start=100
//! event=step offset=30 start=150
//! temporal_roi=101:200
//! ```

use std::path::{Path, PathBuf};

use cp3::synth::{Background, Event, SceneSpec};

use crate::config::{parse_lines, parse_value, read_text, Manifest, VERSION};
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub spec: SceneSpec,
    pub temporal_roi: Option<(usize, usize)>,
    pub output: Option<PathBuf>,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig { spec: SceneSpec::default(), temporal_roi: None, output: None }
    }
}

fn parse_roi(value: &str) -> CliResult<(usize, usize)> {
    let (a, b) = value
        .split_once(':')
        .ok_or_else(|| CliError::usage(format!("temporal_roi '{value}' is not first:last")))?;
    let (a, b) = (parse_value("temporal_roi", a.trim())?, parse_value("temporal_roi", b.trim())?);
    if a == 0 || a > b {
        return Err(CliError::usage(format!("temporal_roi {a}:{b} is empty or not 1-based")));
    }
    Ok((a, b))
}

impl SceneConfig {
    pub fn parse(text: &str, source: &str, base: &Path) -> CliResult<Self> {
        let mut cfg = SceneConfig::default();
        let mut seen = Vec::new();
        for (key, value) in parse_lines(text, source)? {
            if key != "event" {
                if seen.contains(&key) {
                    return Err(CliError::usage(format!("{source}: duplicate key '{key}'")));
                }
                seen.push(key.clone());
            }
            cfg.set(&key, &value, base).map_err(|e| e.context(source))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let base = path.parent().unwrap_or(Path::new(""));
        SceneConfig::parse(&read_text(path)?, &path.display().to_string(), base)
    }

    pub fn set(&mut self, key: &str, value: &str, base: &Path) -> CliResult<()> {
        let s = &mut self.spec;
        let scene_err = |e: cp3::Error| CliError::usage(e.to_string());
        match key {
            "width" => s.width = parse_value(key, value)?,
            "height" => s.height = parse_value(key, value)?,
            "channels" => s.channels = parse_value(key, value)?,
            "frames" => s.frame_count = parse_value(key, value)?,
            "seed" => s.seed = parse_value(key, value)?,
            "noise" => s.noise_sigma = parse_value(key, value)?,
            "background" => s.background = value.parse::<Background>().map_err(scene_err)?,
            "event" => s.events.push(value.parse::<Event>().map_err(scene_err)?),
            "temporal_roi" => self.temporal_roi = Some(parse_roi(value)?),
            "output" => self.output = Some(base.join(value)),
            "command" => {}
            "version" => {
                if value != VERSION {
                    log::warn!("scene was written by version {value}, this is {VERSION}");
                }
            }
            _ => {
                return Err(CliError::usage(format!(
                    "unknown scene key '{key}' (known: width, height, channels, frames, seed, noise, \
                     background, event, temporal_roi, output)"
                )))
            }
        }
        Ok(())
    }

    pub fn manifest(&self) -> Manifest {
        let s = &self.spec;
        let mut m = Manifest::new("synth");
        m.push("width", s.width)
            .push("height", s.height)
            .push("channels", s.channels)
            .push("frames", s.frame_count)
            .push("seed", s.seed)
            .push("noise", s.noise_sigma)
            .push("background", &s.background);
        for e in &s.events {
            m.push("event", e);
        }
        if let Some((a, b)) = self.temporal_roi {
            m.push("temporal_roi", format!("{a}:{b}"));
        }
        m
    }
}
