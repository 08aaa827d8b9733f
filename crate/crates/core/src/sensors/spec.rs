use serde::{Deserialize, Serialize};

use crate::math::{Pose, Vec3};

use super::{SensorError, DISTANCE_CHANNELS, IMU_CHANNELS};

/// Where a sensor is mounted. `local_offset` is relative to the bone frame
/// or to the world origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Attachment {
    World {
        #[serde(default)]
        local_offset: Pose,
    },
    Bone {
        bone_name: String,
        #[serde(default)]
        local_offset: Pose,
    },
}

impl Attachment {
    pub fn local_offset(&self) -> &Pose {
        match self {
            Attachment::World { local_offset } | Attachment::Bone { local_offset, .. } => {
                local_offset
            }
        }
    }

    pub fn local_offset_mut(&mut self) -> &mut Pose {
        match self {
            Attachment::World { local_offset } | Attachment::Bone { local_offset, .. } => {
                local_offset
            }
        }
    }

    pub fn bone_name(&self) -> Option<&str> {
        match self {
            Attachment::World { .. } => None,
            Attachment::Bone { bone_name, .. } => Some(bone_name),
        }
    }
}

/// Noise standard deviation: one value for every channel, or one per channel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Stddev {
    Scalar(f64),
    PerChannel(Vec<f64>),
}

impl Default for Stddev {
    fn default() -> Self {
        Stddev::Scalar(0.0)
    }
}

impl Stddev {
    /// Standard deviation for channel `i`. Missing per-channel entries are 0.
    pub fn channel(&self, i: usize) -> f64 {
        match self {
            Stddev::Scalar(s) => *s,
            Stddev::PerChannel(v) => v.get(i).copied().unwrap_or(0.0),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Stddev::Scalar(s) => std::slice::from_ref(s),
            Stddev::PerChannel(v) => v,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default)]
    pub stddev: Stddev,
    /// Overrides the session seed for this sensor.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_max_range() -> f64 {
    4.0
}

fn default_window() -> usize {
    5
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceSensorSpec {
    #[serde(default = "default_max_range")]
    pub max_range: f64,
    /// Defaults to the simulation rate.
    #[serde(default)]
    pub sample_rate: Option<f64>,
    #[serde(default)]
    pub noise: NoiseSpec,
}

impl Default for DistanceSensorSpec {
    fn default() -> Self {
        DistanceSensorSpec {
            max_range: default_max_range(),
            sample_rate: None,
            noise: NoiseSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImuSpec {
    /// Defaults to the simulation rate.
    #[serde(default)]
    pub sample_rate: Option<f64>,
    #[serde(default = "default_window")]
    pub smoothing_window: usize,
    #[serde(default = "yes")]
    pub include_gravity: bool,
    #[serde(default)]
    pub emit_angular_velocity: bool,
    #[serde(default)]
    pub noise: NoiseSpec,
}

impl Default for ImuSpec {
    fn default() -> Self {
        ImuSpec {
            sample_rate: None,
            smoothing_window: default_window(),
            include_gravity: true,
            emit_angular_velocity: false,
            noise: NoiseSpec::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SensorSpec {
    Distance(DistanceSensorSpec),
    Imu(ImuSpec),
}

impl SensorSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            SensorSpec::Distance(_) => "distance",
            SensorSpec::Imu(_) => "imu",
        }
    }

    pub fn channel_names(&self) -> &'static [&'static str] {
        match self {
            SensorSpec::Distance(_) => &DISTANCE_CHANNELS,
            SensorSpec::Imu(s) if s.emit_angular_velocity => &IMU_CHANNELS,
            SensorSpec::Imu(_) => &IMU_CHANNELS[..3],
        }
    }

    pub fn sample_rate(&self) -> Option<f64> {
        match self {
            SensorSpec::Distance(s) => s.sample_rate,
            SensorSpec::Imu(s) => s.sample_rate,
        }
    }

    pub fn noise(&self) -> &NoiseSpec {
        match self {
            SensorSpec::Distance(s) => &s.noise,
            SensorSpec::Imu(s) => &s.noise,
        }
    }

    /// Every invariant violation.
    pub fn problems(&self, simulation_rate: f64) -> Vec<SpecProblem> {
        let mut out = Vec::new();
        let mut push = |field: &'static str, rate_violation: bool, message: String| {
            out.push(SpecProblem {
                field,
                rate_violation,
                message,
            })
        };
        if let Some(rate) = self.sample_rate() {
            if !(rate > 0.0 && rate.is_finite()) {
                push(
                    "sample_rate",
                    false,
                    format!("sample_rate must be positive, got {rate}"),
                );
            } else if rate > simulation_rate {
                push(
                    "sample_rate",
                    true,
                    format!("sample_rate {rate} Hz exceeds simulation rate {simulation_rate} Hz"),
                );
            }
        }
        match self {
            SensorSpec::Distance(s) => {
                if !(s.max_range > 0.0 && s.max_range.is_finite()) {
                    push(
                        "max_range",
                        false,
                        format!("max_range must be positive, got {}", s.max_range),
                    );
                }
            }
            SensorSpec::Imu(s) => {
                if s.smoothing_window == 0 || s.smoothing_window % 2 == 0 {
                    push(
                        "smoothing_window",
                        false,
                        format!(
                            "smoothing_window must be odd and at least 1, got {}",
                            s.smoothing_window
                        ),
                    );
                }
            }
        }
        let stddev = &self.noise().stddev;
        if stddev
            .values()
            .iter()
            .any(|s| !(*s >= 0.0 && s.is_finite()))
        {
            push(
                "noise.stddev",
                false,
                "noise stddev must be finite and non-negative".into(),
            );
        }
        if let Stddev::PerChannel(v) = stddev {
            let expected = match self {
                SensorSpec::Distance(_) => 1,
                SensorSpec::Imu(_) => self.channel_names().len(),
            };
            if v.len() != expected {
                push(
                    "noise.stddev",
                    false,
                    format!("noise stddev has {} entries, expected {expected}", v.len()),
                );
            }
        }
        out
    }
}

/// One violated sensor invariant; `field` is relative to the spec object.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecProblem {
    pub field: &'static str,
    pub rate_violation: bool,
    pub message: String,
}

/// One configured sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorDef {
    pub id: String,
    pub spec: SensorSpec,
    pub attachment: Attachment,
}

/// A `rows × cols` grid of identical distance sensors on one base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixPrefabSpec {
    /// Prefix for element ids.
    pub id: String,
    pub rows: usize,
    pub cols: usize,
    pub spacing: f64,
    #[serde(default)]
    pub element: DistanceSensorSpec,
    pub attachment: Attachment,
}

/// Grid offsets in the base frame, row-major: element `(r, c)` sits at
/// `((c − (cols−1)/2)·spacing, (r − (rows−1)/2)·spacing, 0)`.
pub fn prefab_offsets(rows: usize, cols: usize, spacing: f64) -> Vec<(usize, usize, Vec3)> {
    let cx = (cols as f64 - 1.0) / 2.0;
    let cy = (rows as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let x = (c as f64 - cx) * spacing;
            let y = (r as f64 - cy) * spacing;
            out.push((r, c, Vec3::new(x, y, 0.0)));
        }
    }
    out
}

/// Expands a matrix prefab into individual sensors with ids `{id}_r{r}c{c}`.
/// Every element faces along the base −Z axis.
pub fn expand_prefab(spec: &MatrixPrefabSpec) -> Result<Vec<SensorDef>, SensorError> {
    let invalid = |message: String| SensorError::InvalidSpec {
        sensor: spec.id.clone(),
        message,
    };
    if spec.rows == 0 || spec.cols == 0 {
        return Err(invalid(format!(
            "prefab needs at least one row and column, got {}x{}",
            spec.rows, spec.cols
        )));
    }
    if !(spec.spacing > 0.0 && spec.spacing.is_finite()) {
        return Err(invalid(format!(
            "spacing must be positive, got {}",
            spec.spacing
        )));
    }
    let base = *spec.attachment.local_offset();
    Ok(prefab_offsets(spec.rows, spec.cols, spec.spacing)
        .into_iter()
        .map(|(r, c, offset)| {
            let mut attachment = spec.attachment.clone();
            *attachment.local_offset_mut() = base.compose(&Pose::from_position(offset));
            SensorDef {
                id: format!("{}_r{r}c{c}", spec.id),
                spec: SensorSpec::Distance(spec.element.clone()),
                attachment,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::UnitQuat;

    fn prefab(rows: usize, cols: usize, spacing: f64) -> MatrixPrefabSpec {
        MatrixPrefabSpec {
            id: "m".into(),
            rows,
            cols,
            spacing,
            element: DistanceSensorSpec::default(),
            attachment: Attachment::World {
                local_offset: Pose::IDENTITY,
            },
        }
    }

    #[test]
    fn single_element_at_base() {
        let defs = expand_prefab(&prefab(1, 1, 0.3)).unwrap();
        assert_eq!(defs.len(), 1);
        assert_eq!(defs[0].id, "m_r0c0");
        assert_eq!(defs[0].attachment.local_offset().position, Vec3::ZERO);
    }

    #[test]
    fn two_by_three() {
        let defs = expand_prefab(&prefab(2, 3, 0.05)).unwrap();
        let got: Vec<(String, [f64; 3])> = defs
            .iter()
            .map(|d| {
                (
                    d.id.clone(),
                    d.attachment.local_offset().position.to_array(),
                )
            })
            .collect();
        let expect = [
            ("m_r0c0", [-0.05, -0.025, 0.0]),
            ("m_r0c1", [0.0, -0.025, 0.0]),
            ("m_r0c2", [0.05, -0.025, 0.0]),
            ("m_r1c0", [-0.05, 0.025, 0.0]),
            ("m_r1c1", [0.0, 0.025, 0.0]),
            ("m_r1c2", [0.05, 0.025, 0.0]),
        ];
        assert_eq!(got.len(), 6);
        for ((id, pos), (eid, epos)) in got.iter().zip(expect) {
            assert_eq!(id, eid);
            assert_eq!(*pos, epos);
        }
        assert!(defs
            .iter()
            .all(|d| d.attachment.local_offset().orientation == UnitQuat::IDENTITY));
    }

    #[test]
    fn symmetric_grid() {
        let s = 0.07;
        let offs: Vec<Vec3> = prefab_offsets(3, 3, s).into_iter().map(|o| o.2).collect();
        for o in &offs {
            assert!(offs.iter().any(|p| *p == -*o));
        }
    }

    #[test]
    fn centroid_at_origin() {
        for (r, c, s) in [
            (1, 1, 0.1),
            (2, 3, 0.05),
            (3, 3, 0.07),
            (8, 8, 0.013),
            (5, 2, 1.1),
        ] {
            let offs = prefab_offsets(r, c, s);
            assert_eq!(offs.len(), r * c);
            let sum = offs.iter().fold(Vec3::ZERO, |a, o| a + o.2);
            let centroid = sum / offs.len() as f64;
            assert!(centroid.norm() <= 1e-12, "{r}x{c}: {centroid:?}");
        }
    }

    #[test]
    fn base_offset_composes() {
        let mut p = prefab(1, 2, 0.2);
        p.attachment = Attachment::Bone {
            bone_name: "Hips".into(),
            local_offset: Pose::new(
                Vec3::new(0.0, 1.0, 0.0),
                UnitQuat::from_axis_angle(Vec3::Z, std::f64::consts::FRAC_PI_2),
            ),
        };
        let defs = expand_prefab(&p).unwrap();
        let first = defs[0].attachment.local_offset().position;
        assert!(first.distance(Vec3::new(0.0, 0.9, 0.0)) < 1e-12);
        assert_eq!(defs[0].attachment.bone_name(), Some("Hips"));
    }

    #[test]
    fn rejects_bad_prefab() {
        assert!(expand_prefab(&prefab(0, 3, 0.05)).is_err());
        assert!(expand_prefab(&prefab(2, 3, 0.0)).is_err());
    }

    #[test]
    fn json_shapes() {
        let def: SensorDef = serde_json::from_str(
            r#"{"id":"d","spec":{"type":"distance","max_range":2.5},
                "attachment":{"kind":"bone","bone_name":"Hips",
                              "local_offset":{"position":[0,0,0.1]}}}"#,
        )
        .unwrap();
        assert_eq!(def.spec.channel_names(), ["distance", "hit"]);
        assert_eq!(def.attachment.bone_name(), Some("Hips"));
        let imu: SensorSpec =
            serde_json::from_str(r#"{"type":"imu","emit_angular_velocity":true,"noise":{"stddev":[0,0,0,1,1,1],"seed":4}}"#)
                .unwrap();
        assert_eq!(imu.channel_names().len(), 6);
        assert!(imu.problems(60.0).is_empty());
        assert!(serde_json::from_str::<SensorSpec>(r#"{"type":"distance","range":2}"#).is_err());
        assert!(serde_json::from_str::<Attachment>(r#"{"kind":"world","bone_name":"x"}"#).is_err());
    }

    #[test]
    fn problems_listed() {
        let bad = SensorSpec::Imu(ImuSpec {
            sample_rate: Some(120.0),
            smoothing_window: 4,
            noise: NoiseSpec {
                stddev: Stddev::Scalar(-1.0),
                seed: None,
            },
            ..Default::default()
        });
        assert_eq!(bad.problems(60.0).len(), 3);
        let far = SensorSpec::Distance(DistanceSensorSpec {
            max_range: 0.0,
            ..Default::default()
        });
        assert_eq!(far.problems(60.0).len(), 1);
    }
}
