use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{parse_obj, AccelIndex, BodyProxies, BodyProxyConfig, Scene};
use crate::mocap::{parse_bvh, AnimationClip, Skeleton};
use crate::sensors::{expand_prefab, MatrixPrefabSpec, SensorDef, SensorInstance};

/// Current config and message schema version.
pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_rate() -> f64 {
    60.0
}

fn one() -> f64 {
    1.0
}

/// Session description as read from JSON. Relative file paths resolve
/// against the directory of the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    #[serde(default = "schema_version")]
    pub schema: u32,
    #[serde(default = "default_rate")]
    pub simulation_rate: f64,
    /// Seconds. Defaults to the clip duration; capped by it unless looping.
    #[serde(default)]
    pub duration: Option<f64>,
    /// Multiplies BVH offsets and positions to get meters.
    #[serde(default = "one")]
    pub unit_scale: f64,
    /// BVH file driving the skeleton. Without one only world attachments work.
    #[serde(default)]
    pub clip: Option<String>,
    /// OBJ files for the static scene.
    #[serde(default)]
    pub meshes: Vec<String>,
    #[serde(default)]
    pub body_proxies: BodyProxyConfig,
    #[serde(default)]
    pub sensors: Vec<SensorDef>,
    #[serde(default)]
    pub prefabs: Vec<MatrixPrefabSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, rename = "loop")]
    pub looping: bool,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            schema: SCHEMA_VERSION,
            simulation_rate: default_rate(),
            duration: None,
            unit_scale: 1.0,
            clip: None,
            meshes: Vec::new(),
            body_proxies: BodyProxyConfig::default(),
            sensors: Vec::new(),
            prefabs: Vec::new(),
            seed: 0,
            looping: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigErrorKind {
    FileNotFound,
    Io,
    Parse,
    UnknownJoint,
    RateViolation,
    DuplicateId,
    Invalid,
}

/// One validation failure. `path` locates the offending field, e.g.
/// `sensors[2].spec.sample_rate`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigError {
    pub kind: ConfigErrorKind,
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(kind: ConfigErrorKind, path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            kind,
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses config JSON. Syntax and shape errors come back as a single
/// [`ConfigErrorKind::Parse`] entry.
pub fn parse_config(text: &str) -> Result<SessionConfig, Vec<ConfigError>> {
    serde_json::from_str(text).map_err(|e| {
        vec![ConfigError::new(
            ConfigErrorKind::Parse,
            "",
            format!("config: {e}"),
        )]
    })
}

/// Reads and parses a config file, returning it with the directory that
/// relative paths resolve against.
pub fn load_config(path: &Path) -> Result<(SessionConfig, PathBuf), Vec<ConfigError>> {
    let text = std::fs::read_to_string(path).map_err(|e| vec![file_error(path, "", e)])?;
    let config = parse_config(&text)?;
    let base = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok((config, base))
}

fn file_error(path: &Path, field: &str, e: std::io::Error) -> ConfigError {
    let kind = if e.kind() == std::io::ErrorKind::NotFound {
        ConfigErrorKind::FileNotFound
    } else {
        ConfigErrorKind::Io
    };
    ConfigError::new(kind, field, format!("{}: {e}", path.display()))
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Sensor ids become file names on export.
fn id_problem(id: &str) -> Option<String> {
    if id.is_empty() {
        return Some("sensor id must not be empty".into());
    }
    if id.starts_with('.')
        || !id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
    {
        return Some(format!(
            "sensor id {id:?} may only contain ASCII letters, digits, '_', '-' and '.', and must not start with '.'"
        ));
    }
    None
}

/// Everything a session needs, loaded and checked.
#[derive(Clone, Debug)]
pub(crate) struct Prepared {
    pub skeleton: Option<Arc<Skeleton>>,
    pub clip: Option<Arc<AnimationClip>>,
    pub scene: Scene,
    pub proxies: BodyProxies,
    pub sensors: Vec<SensorInstance>,
    pub duration: f64,
    pub last_tick: u64,
}

/// Number of the last tick: `floor(duration · rate)`, taking products within
/// 1e-9 of an integer as that integer.
pub fn last_tick(duration: f64, rate: f64) -> u64 {
    let x = duration * rate;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// Binds one sensor definition, mapping failures to config errors at `path`.
pub(crate) fn bind_sensor(
    def: &SensorDef,
    path: &str,
    skeleton: Option<&Skeleton>,
    rate: f64,
    seed: u64,
    errors: &mut Vec<ConfigError>,
) -> Option<SensorInstance> {
    let before = errors.len();
    if let Some(msg) = id_problem(&def.id) {
        errors.push(ConfigError::new(
            ConfigErrorKind::Invalid,
            format!("{path}.id"),
            msg,
        ));
    }
    for p in def.spec.problems(rate) {
        let kind = if p.rate_violation {
            ConfigErrorKind::RateViolation
        } else {
            ConfigErrorKind::Invalid
        };
        errors.push(ConfigError::new(
            kind,
            format!("{path}.spec.{}", p.field),
            format!("sensor {:?}: {}", def.id, p.message),
        ));
    }
    if let Some(bone) = def.attachment.bone_name() {
        match skeleton {
            Some(s) if s.find(bone).is_some() => {}
            Some(_) => errors.push(ConfigError::new(
                ConfigErrorKind::UnknownJoint,
                format!("{path}.attachment.bone_name"),
                format!("sensor {:?}: unknown joint {bone:?}", def.id),
            )),
            None => errors.push(ConfigError::new(
                ConfigErrorKind::Invalid,
                format!("{path}.attachment"),
                format!("sensor {:?}: bone attachment requires a clip", def.id),
            )),
        }
    }
    if errors.len() > before {
        return None;
    }
    SensorInstance::new(def.clone(), skeleton, rate, seed).ok()
}

pub(crate) fn prepare(config: &SessionConfig, base: &Path) -> Result<Prepared, Vec<ConfigError>> {
    use ConfigErrorKind::*;
    let mut errors = Vec::new();
    if config.schema != SCHEMA_VERSION {
        errors.push(ConfigError::new(
            Invalid,
            "schema",
            format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                config.schema
            ),
        ));
    }
    let rate = config.simulation_rate;
    let rate_ok = rate > 0.0 && rate.is_finite();
    if !rate_ok {
        errors.push(ConfigError::new(
            Invalid,
            "simulation_rate",
            format!("simulation_rate must be positive, got {rate}"),
        ));
    }
    if let Some(d) = config.duration {
        if !(d >= 0.0 && d.is_finite()) {
            errors.push(ConfigError::new(
                Invalid,
                "duration",
                format!("duration must be finite and non-negative, got {d}"),
            ));
        }
    }

    let mut skeleton = None;
    let mut clip = None;
    let mut clip_failed = false;
    if let Some(file) = &config.clip {
        let path = resolve(base, file);
        match std::fs::read_to_string(&path) {
            Err(e) => {
                clip_failed = true;
                errors.push(file_error(&path, "clip", e));
            }
            Ok(text) => match parse_bvh(&text) {
                Err(e) => {
                    clip_failed = true;
                    errors.push(ConfigError::new(
                        Parse,
                        "clip",
                        format!("{}: {e}", path.display()),
                    ));
                }
                Ok((skel, c)) => match skel.with_unit_scale(config.unit_scale) {
                    Ok(skel) => {
                        skeleton = Some(Arc::new(skel));
                        clip = Some(Arc::new(c));
                    }
                    Err(e) => {
                        clip_failed = true;
                        errors.push(ConfigError::new(Invalid, "unit_scale", e.to_string()));
                    }
                },
            },
        }
    } else if config.duration.is_none() {
        errors.push(ConfigError::new(
            Invalid,
            "duration",
            "duration is required when no clip is given",
        ));
    }

    let mut scene = Scene::new();
    for (i, file) in config.meshes.iter().enumerate() {
        let field = format!("meshes[{i}]");
        let path = resolve(base, file);
        match std::fs::read_to_string(&path) {
            Err(e) => errors.push(file_error(&path, &field, e)),
            Ok(text) => match parse_obj(&text) {
                Err(e) => errors.push(ConfigError::new(
                    Parse,
                    field,
                    format!("{}: {e}", path.display()),
                )),
                Ok(mesh) => {
                    let name = path
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| format!("mesh{i}"));
                    scene.add_mesh(Arc::new(AccelIndex::build(mesh.with_name(name))));
                }
            },
        }
    }

    let proxies = match &skeleton {
        Some(skel) => match BodyProxies::bind(skel, &config.body_proxies) {
            Ok(p) => p,
            Err(e) => {
                let kind = match e {
                    crate::geometry::GeometryError::UnknownJoint(_) => UnknownJoint,
                    _ => Invalid,
                };
                errors.push(ConfigError::new(kind, "body_proxies", e.to_string()));
                BodyProxies::default()
            }
        },
        None => {
            if (!config.body_proxies.bones.is_empty() || config.body_proxies.all_bones)
                && !clip_failed
            {
                errors.push(ConfigError::new(
                    Invalid,
                    "body_proxies",
                    "body proxies require a clip",
                ));
            }
            BodyProxies::default()
        }
    };

    // Flatten sensors and prefab elements, remembering where each came from.
    let mut defs: Vec<(String, SensorDef)> = config
        .sensors
        .iter()
        .enumerate()
        .map(|(i, d)| (format!("sensors[{i}]"), d.clone()))
        .collect();
    for (i, p) in config.prefabs.iter().enumerate() {
        match expand_prefab(p) {
            Ok(elems) => defs.extend(elems.into_iter().map(|d| (format!("prefabs[{i}]"), d))),
            Err(e) => errors.push(ConfigError::new(
                Invalid,
                format!("prefabs[{i}]"),
                e.to_string(),
            )),
        }
    }

    let mut seen = BTreeSet::new();
    let mut sensors = Vec::with_capacity(defs.len());
    for (path, def) in &defs {
        if !seen.insert(def.id.as_str()) {
            errors.push(ConfigError::new(
                DuplicateId,
                format!("{path}.id"),
                format!("duplicate sensor id {:?}", def.id),
            ));
            continue;
        }
        if clip_failed && def.attachment.bone_name().is_some() {
            // Already reported through the clip error.
            continue;
        }
        let eff_rate = if rate_ok { rate } else { f64::INFINITY };
        if let Some(inst) = bind_sensor(
            def,
            path,
            skeleton.as_deref(),
            eff_rate,
            config.seed,
            &mut errors,
        ) {
            sensors.push(inst);
        }
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    sensors.sort_by(|a, b| a.id().cmp(b.id()));

    let clip_duration = clip.as_ref().map(|c| c.duration());
    let duration = match (config.duration, clip_duration) {
        (Some(d), Some(cd)) if !config.looping => d.min(cd),
        (Some(d), _) => d,
        (None, Some(cd)) => cd,
        (None, None) => unreachable!("reported above"),
    };
    Ok(Prepared {
        skeleton,
        clip,
        scene,
        proxies,
        sensors,
        duration,
        last_tick: last_tick(duration, rate),
    })
}
