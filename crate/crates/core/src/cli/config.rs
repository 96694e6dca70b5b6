//! TOML run configuration.
//!
//! Link parameters sit at the top level under the usual symbol names; the
//! beacon array, grid search, sweep grid and run controls live in their own
//! sections:
//!
//! ```toml
//! z = 100.0
//! aA = 80.0
//! sigma_sum_sq = 2.0      # or sigma_t / sigma_p
//! eta = 1.0
//! gamma_th = 1.0
//! xi = 0.1
//! sigma_n = 0.01
//!
//! [beacons]
//! w_z = 4.0
//! centers = [[1, 1], [-1, 1], [-1, -1], [1, -1]]
//!
//! [search]
//! step = 0.01
//!
//! [sweep]
//! w_z = { start = 0.1, stop = 9.0, count = 50 }
//! aA = [40, 80, 160]
//!
//! [run]
//! seed = 7
//! trials = 10000
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::beam_model::Vec2;
use crate::link_design::{optimal_beam_width, DesignThresholds};
use crate::sim_harness::{linspace, Environment, ExperimentConfig, MainBeam, Sweep, SweepParameter};
use crate::stochastic::{MobilitySpec, NoiseSpec, PointingSpec};
use crate::tracking::{BeaconArray, GridSearchConfig, SearchRegion};

/// Names the directory that relative `--config` paths (and the default
/// `beamtrack.toml`) are resolved against.
pub const CONFIG_DIR_ENV: &str = "BEAMTRACK_CONFIG_DIR";
pub const DEFAULT_CONFIG_NAME: &str = "beamtrack.toml";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("config {path}: missing field `{field}` (needed by {needed_by})")]
    Missing {
        path: String,
        field: &'static str,
        needed_by: &'static str,
    },
    #[error("config {path}: field `{field}`: {message}")]
    Field {
        path: String,
        field: &'static str,
        message: String,
    },
    #[error("no --config given and {CONFIG_DIR_ENV} is not set")]
    NoConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub z: Option<f64>,
    #[serde(rename = "aA")]
    pub a_a: Option<f64>,
    pub sigma_t: Option<f64>,
    pub sigma_p: Option<f64>,
    pub sigma_sum_sq: Option<f64>,
    pub sigma_n: Option<f64>,
    /// Main-beam spot width.
    pub w_z: Option<f64>,
    pub eta: Option<f64>,
    pub gamma_th: Option<f64>,
    pub xi: Option<f64>,
    pub beacons: Option<BeaconSection>,
    pub search: Option<SearchSection>,
    pub sweep: Option<SweepSection>,
    pub run: Option<RunSection>,
    /// Default points for `error-bound`.
    pub points: Option<Vec<[f64; 2]>>,
    /// Default target for `track`.
    pub target: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeaconSection {
    /// Falls back to the top-level `aA`.
    #[serde(rename = "aA")]
    pub a_a: Option<f64>,
    pub w_z: Option<f64>,
    pub area: Option<f64>,
    pub centers: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    /// `[x_min, x_max, y_min, y_max]`; defaults to the beacon bounding box.
    pub region: Option<[f64; 4]>,
    pub step: Option<f64>,
    pub refine: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Range { start: f64, stop: f64, count: usize },
    List(Vec<f64>),
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            GridSpec::Range { start, stop, count } => linspace(*start, *stop, *count),
            GridSpec::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub w_z: Option<GridSpec>,
    #[serde(rename = "aA")]
    pub a_a: Option<Vec<f64>>,
    pub sigma_sum_sq: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub steps: Option<usize>,
}

/// Parsed config together with the text it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: String,
    pub text: String,
    pub file: FileConfig,
}

/// Resolves the config path: an explicit relative path is looked up under
/// `$BEAMTRACK_CONFIG_DIR` when that is set, and a missing path falls back to
/// `$BEAMTRACK_CONFIG_DIR/beamtrack.toml`.
pub fn resolve_path(explicit: Option<&Path>) -> Result<PathBuf, ConfigError> {
    let dir = std::env::var_os(CONFIG_DIR_ENV).map(PathBuf::from);
    match (explicit, dir) {
        (Some(p), Some(d)) if p.is_relative() && !p.exists() => Ok(d.join(p)),
        (Some(p), _) => Ok(p.to_path_buf()),
        (None, Some(d)) => Ok(d.join(DEFAULT_CONFIG_NAME)),
        (None, None) => Err(ConfigError::NoConfig),
    }
}

pub fn load(path: &Path) -> Result<LoadedConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&path.display().to_string(), &text)
}

pub fn parse(path: &str, text: &str) -> Result<LoadedConfig, ConfigError> {
    let file: FileConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: path.to_string(),
        message: e.to_string().trim_end().to_string(),
    })?;
    Ok(LoadedConfig {
        path: path.to_string(),
        text: text.to_string(),
        file,
    })
}

impl LoadedConfig {
    fn missing(&self, field: &'static str, needed_by: &'static str) -> ConfigError {
        ConfigError::Missing {
            path: self.path.clone(),
            field,
            needed_by,
        }
    }

    fn field_err(&self, field: &'static str, e: impl ToString) -> ConfigError {
        ConfigError::Field {
            path: self.path.clone(),
            field,
            message: e.to_string(),
        }
    }

    fn req<T: Copy>(&self, v: Option<T>, field: &'static str, by: &'static str) -> Result<T, ConfigError> {
        v.ok_or_else(|| self.missing(field, by))
    }

    pub fn z(&self, by: &'static str) -> Result<f64, ConfigError> {
        self.req(self.file.z, "z", by)
    }

    pub fn a_a(&self, by: &'static str) -> Result<f64, ConfigError> {
        self.req(self.file.a_a, "aA", by)
    }

    /// `(sigma_t, sigma_p)`. A lone `sigma_sum_sq` is split evenly.
    pub fn spreads(&self, by: &'static str) -> Result<(f64, f64), ConfigError> {
        let f = &self.file;
        match (f.sigma_t, f.sigma_p, f.sigma_sum_sq) {
            (Some(t), Some(p), sum) => {
                if let Some(s) = sum {
                    if ((t * t + p * p) - s).abs() > 1e-9 * s.abs().max(1.0) {
                        return Err(self.field_err(
                            "sigma_sum_sq",
                            format!("{s} disagrees with sigma_t^2 + sigma_p^2 = {}", t * t + p * p),
                        ));
                    }
                }
                Ok((t, p))
            }
            (None, None, Some(s)) => {
                if !(s.is_finite() && s > 0.0) {
                    return Err(self.field_err("sigma_sum_sq", "must be finite and > 0"));
                }
                Ok(((0.5 * s).sqrt(), (0.5 * s).sqrt()))
            }
            (None, _, _) => Err(self.missing("sigma_t", by)),
            (Some(_), None, _) => Err(self.missing("sigma_p", by)),
        }
    }

    pub fn thresholds(&self, by: &'static str) -> Result<DesignThresholds, ConfigError> {
        let eta = self.req(self.file.eta, "eta", by)?;
        let gamma = self.req(self.file.gamma_th, "gamma_th", by)?;
        let xi = self.req(self.file.xi, "xi", by)?;
        DesignThresholds::new(eta, gamma, xi).map_err(|e| self.field_err("thresholds", e))
    }

    /// Thresholds for commands that only use `gamma_th`; the others get
    /// placeholder values.
    fn gamma_only(&self, by: &'static str) -> Result<DesignThresholds, ConfigError> {
        let gamma = self.req(self.file.gamma_th, "gamma_th", by)?;
        DesignThresholds::new(
            self.file.eta.unwrap_or(gamma),
            gamma,
            self.file.xi.unwrap_or(0.5),
        )
        .map_err(|e| self.field_err("gamma_th", e))
    }

    /// Target mobility and pointing spreads.
    pub fn motion(&self, by: &'static str) -> Result<Environment, ConfigError> {
        let (t, p) = self.spreads(by)?;
        Ok(Environment {
            mobility: Some(MobilitySpec::new(t).map_err(|e| self.field_err("sigma_t", e))?),
            pointing: Some(PointingSpec::new(p).map_err(|e| self.field_err("sigma_p", e))?),
            noise: None,
        })
    }

    pub fn noise(&self, by: &'static str) -> Result<NoiseSpec, ConfigError> {
        let n = self.req(self.file.sigma_n, "sigma_n", by)?;
        NoiseSpec::new(n).map_err(|e| self.field_err("sigma_n", e))
    }

    pub fn beacon_array(&self, by: &'static str) -> Result<BeaconArray, ConfigError> {
        let sec = self.file.beacons.as_ref().ok_or_else(|| self.missing("beacons", by))?;
        let a = match sec.a_a.or(self.file.a_a) {
            Some(a) => a,
            None => return Err(self.missing("beacons.aA", by)),
        };
        let w = self.req(sec.w_z, "beacons.w_z", by)?;
        let centers = sec
            .centers
            .as_ref()
            .ok_or_else(|| self.missing("beacons.centers", by))?;
        if centers.is_empty() {
            return Err(self.field_err("beacons.centers", "needs at least one center"));
        }
        let pts: Vec<Vec2> = centers.iter().map(|&[x, y]| Vec2::new(x, y)).collect();
        BeaconArray::uniform(a, w, &pts, sec.area.unwrap_or(1.0))
            .map_err(|e| self.field_err("beacons", e))
    }

    pub fn search(&self, array: &BeaconArray, by: &'static str) -> Result<GridSearchConfig, ConfigError> {
        let sec = self.file.search.as_ref().ok_or_else(|| self.missing("search", by))?;
        let step = self.req(sec.step, "search.step", by)?;
        let region = match sec.region {
            Some([x_min, x_max, y_min, y_max]) => SearchRegion {
                x_min,
                x_max,
                y_min,
                y_max,
            },
            None => SearchRegion::bounding(&array.centers()),
        };
        Ok(GridSearchConfig::new(region, step)
            .map_err(|e| self.field_err("search", e))?
            .with_refinement(sec.refine.unwrap_or(false)))
    }

    /// The width grid and the optional series sweep.
    pub fn sweep(&self, by: &'static str) -> Result<(Vec<f64>, Option<Sweep>), ConfigError> {
        let sec = self.file.sweep.as_ref().ok_or_else(|| self.missing("sweep", by))?;
        let grid = sec
            .w_z
            .as_ref()
            .ok_or_else(|| self.missing("sweep.w_z", by))?
            .values();
        if grid.is_empty() {
            return Err(self.field_err("sweep.w_z", "grid is empty"));
        }
        if let Some(v) = grid.iter().find(|v| !v.is_finite() || **v <= 0.0) {
            return Err(self.field_err("sweep.w_z", format!("width {v} must be finite and > 0")));
        }
        let series = match (&sec.a_a, &sec.sigma_sum_sq) {
            (Some(_), Some(_)) => {
                return Err(self.field_err("sweep", "give either aA or sigma_sum_sq, not both"))
            }
            (Some(v), None) => Some(Sweep {
                parameter: SweepParameter::AA,
                values: v.clone(),
            }),
            (None, Some(v)) => Some(Sweep {
                parameter: SweepParameter::SigmaSumSq,
                values: v.clone(),
            }),
            (None, None) => None,
        };
        if let Some(s) = &series {
            if s.values.is_empty() {
                return Err(self.field_err("sweep", "series list is empty"));
            }
        }
        Ok((grid, series))
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.run.as_ref().and_then(|r| r.seed)).unwrap_or(0)
    }

    pub fn trials(&self, flag: Option<usize>) -> Option<usize> {
        flag.or(self.file.run.as_ref().and_then(|r| r.trials))
    }

    pub fn steps(&self, flag: Option<usize>) -> Option<usize> {
        flag.or(self.file.run.as_ref().and_then(|r| r.steps))
    }

    /// Config for `track`: beacons, noise and (for grid MLE) the search grid.
    pub fn tracking_experiment(&self, with_search: bool) -> Result<ExperimentConfig, ConfigError> {
        const BY: &str = "track";
        let z = self.z(BY)?;
        if !(z.is_finite() && z > 0.0) {
            return Err(self.field_err("z", "must be finite and > 0"));
        }
        let mut cfg = ExperimentConfig::new(z);
        let array = self.beacon_array(BY)?;
        cfg.environment.noise = Some(self.noise(BY)?);
        if with_search {
            cfg.search = Some(self.search(&array, BY)?);
        }
        cfg.array = Some(array);
        Ok(cfg)
    }

    /// Config for `sweep`.
    pub fn sweep_experiment(&self) -> Result<(ExperimentConfig, Vec<f64>), ConfigError> {
        const BY: &str = "sweep";
        let mut cfg = ExperimentConfig::new(self.file.z.unwrap_or(1.0));
        let (grid, sweep) = self.sweep(BY)?;
        let needs_spreads = !matches!(&sweep, Some(s) if s.parameter == SweepParameter::SigmaSumSq);
        let needs_aa = !matches!(&sweep, Some(s) if s.parameter == SweepParameter::AA);
        if needs_spreads {
            cfg.environment = self.motion(BY)?;
        }
        let a_a = if needs_aa {
            self.a_a(BY)?
        } else {
            self.file.a_a.unwrap_or(1.0)
        };
        cfg.main_beam = Some(MainBeam { a_a, w_z: None });
        cfg.thresholds = Some(self.gamma_only(BY)?);
        cfg.sweep = sweep;
        cfg.validate().map_err(|e| self.field_err("sweep", e))?;
        Ok((cfg, grid))
    }

    /// Config for `simulate`. Without a main-beam `w_z` the optimal width is used.
    pub fn trajectory_experiment(&self) -> Result<ExperimentConfig, ConfigError> {
        const BY: &str = "simulate";
        let mut cfg = ExperimentConfig::new(self.file.z.unwrap_or(1.0));
        let a_a = self.a_a(BY)?;
        let thresholds = self.gamma_only(BY)?;
        let w_z = match self.file.w_z {
            Some(w) => w,
            None => optimal_beam_width(a_a, thresholds.gamma_th()).map_err(|e| self.field_err("aA", e))?,
        };
        cfg.main_beam = Some(MainBeam { a_a, w_z: Some(w_z) });
        cfg.thresholds = Some(thresholds);
        cfg.environment = self.motion(BY)?;
        cfg.validate().map_err(|e| self.field_err("w_z", e))?;
        Ok(cfg)
    }
}
