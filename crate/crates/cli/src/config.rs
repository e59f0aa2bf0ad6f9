//! Settings from flags, a `key = value` config file and the environment, in
//! that order of precedence.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use signcoach_core::alignment::Band;
use signcoach_core::pipeline::PipelineConfig;
use signcoach_core::session::SessionConfig;

use crate::error::CliError;

pub const DEFAULT_LISTEN: &str = "127.0.0.1:8080";
pub const ENV_STORE: &str = "SIGNCOACH_STORE";
pub const ENV_LISTEN: &str = "SIGNCOACH_LISTEN";

/// The config file. Every key is optional.
///
/// ```toml
/// store = "./store"
/// seed = 7
/// listen = "127.0.0.1:8080"
/// band = "auto"        # or "unlimited", or a radius in frames
/// cost_scale = 0.8
/// ```
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub store: Option<PathBuf>,
    pub seed: Option<u64>,
    pub listen: Option<String>,
    pub library: Option<PathBuf>,
    pub band: Option<String>,
    pub cost_scale: Option<f64>,
    pub movement_weight: Option<f64>,
    pub joint_tolerance: Option<f64>,
    pub window_min_frames: Option<usize>,
    pub swarm_particles: Option<usize>,
    pub swarm_iterations: Option<usize>,
    pub countdown_ms: Option<u64>,
    pub recording_ms: Option<u64>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<FileConfig, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<FileConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        FileConfig::parse(&text)
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Flags {
    pub store: Option<PathBuf>,
    pub seed: Option<u64>,
    pub listen: Option<String>,
    pub library: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub store: Option<PathBuf>,
    /// `--seed`; when set it also seeds the handshape swarm.
    pub seed: Option<u64>,
    pub listen: String,
    pub library: Option<PathBuf>,
    pub pipeline: PipelineConfig,
    pub session: SessionConfig,
}

fn parse_band(s: &str) -> Result<Band, CliError> {
    match s {
        "auto" => Ok(Band::Auto),
        "unlimited" => Ok(Band::Unlimited),
        r => r
            .parse()
            .map(Band::Radius)
            .map_err(|_| CliError::Config(format!("band must be auto, unlimited or a radius, not `{r}`"))),
    }
}

impl Settings {
    pub fn resolve(flags: &Flags, file: &FileConfig, env: impl Fn(&str) -> Option<String>) -> Result<Settings, CliError> {
        let mut pipeline = PipelineConfig::default();
        if let Some(b) = &file.band {
            pipeline.band = parse_band(b)?;
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut pipeline.cost_scale, file.cost_scale);
        set(&mut pipeline.scoring.movement_weight, file.movement_weight);
        set(&mut pipeline.scoring.joint_tolerance, file.joint_tolerance);
        if let Some(v) = file.window_min_frames {
            pipeline.scoring.window_min_frames = v;
        }
        if let Some(v) = file.swarm_particles {
            pipeline.swarm.particles = v;
        }
        if let Some(v) = file.swarm_iterations {
            pipeline.swarm.iterations = v;
        }
        let seed = flags.seed.or(file.seed);
        if let Some(s) = seed {
            pipeline.swarm.seed = s;
        }
        pipeline.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let mut session = SessionConfig::default();
        if let Some(v) = file.countdown_ms {
            session.countdown_ms = v;
        }
        if let Some(v) = file.recording_ms {
            session.recording_ms = v;
        }

        Ok(Settings {
            store: flags.store.clone().or_else(|| file.store.clone()).or_else(|| env(ENV_STORE).map(PathBuf::from)),
            seed,
            listen: flags
                .listen
                .clone()
                .or_else(|| file.listen.clone())
                .or_else(|| env(ENV_LISTEN))
                .unwrap_or_else(|| DEFAULT_LISTEN.to_string()),
            library: flags.library.clone().or_else(|| file.library.clone()),
            pipeline,
            session,
        })
    }
}
