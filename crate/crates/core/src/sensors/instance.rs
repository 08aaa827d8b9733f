use std::collections::VecDeque;

use serde::Serialize;

use crate::geometry::{Ray, Scene};
use crate::math::{central_second_difference, Pose, Vec3};
use crate::mocap::{PoseSet, Skeleton};

use super::{apply_noise, Attachment, NoiseRng, SensorDef, SensorError, SensorSpec, GRAVITY};

/// One emission of one sensor. `values` follow the sensor's channel order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensorSample {
    pub time: f64,
    pub sensor_id: String,
    pub values: Vec<f64>,
}

/// Decides which simulation ticks a sensor emits on: sample `j` is due at
/// time `j / sample_rate` and goes out on the first tick at or after it.
#[derive(Clone, Debug)]
pub struct Schedule {
    ratio: f64,
    next: u64,
}

impl Schedule {
    pub fn new(simulation_rate: f64, sample_rate: f64) -> Self {
        Schedule {
            ratio: simulation_rate / sample_rate,
            next: 0,
        }
    }

    fn due_tick(&self, j: u64) -> u64 {
        if self.ratio == 1.0 {
            j
        } else {
            // Tolerance absorbs rounding in j·ratio for exact multiples.
            libm::ceil(j as f64 * self.ratio - 1e-9).max(0.0) as u64
        }
    }

    /// Restarts the schedule so the first candidate tick is `tick`.
    pub fn reset(&mut self, tick: u64) {
        let mut j = (tick as f64 / self.ratio) as u64;
        while j > 0 && self.due_tick(j - 1) >= tick {
            j -= 1;
        }
        while self.due_tick(j) < tick {
            j += 1;
        }
        self.next = j;
    }

    /// Whether `tick` carries a sample. Ticks must be passed in increasing order.
    pub fn is_due(&mut self, tick: u64) -> bool {
        while self.due_tick(self.next) < tick {
            self.next += 1;
        }
        if self.due_tick(self.next) == tick {
            self.next += 1;
            true
        } else {
            false
        }
    }
}

/// A configured sensor bound to a skeleton, with its runtime state.
#[derive(Clone, Debug)]
pub struct SensorInstance {
    def: SensorDef,
    bone: Option<usize>,
    history: VecDeque<(f64, Pose)>,
    capacity: usize,
    seed: u64,
    rng: NoiseRng,
    schedule: Schedule,
}

impl SensorInstance {
    /// Resolves the bone attachment against `skeleton`. The noise seed is the
    /// spec's own seed if set, else `global_seed`.
    pub fn new(
        def: SensorDef,
        skeleton: Option<&Skeleton>,
        simulation_rate: f64,
        global_seed: u64,
    ) -> Result<Self, SensorError> {
        let problems = def.spec.problems(simulation_rate);
        if let Some(problem) = problems.into_iter().next() {
            return Err(SensorError::InvalidSpec {
                sensor: def.id.clone(),
                message: problem.message,
            });
        }
        let bone = match &def.attachment {
            Attachment::World { .. } => None,
            Attachment::Bone { bone_name, .. } => Some(
                skeleton
                    .and_then(|s| s.find(bone_name))
                    .ok_or_else(|| SensorError::UnknownJoint(bone_name.clone()))?,
            ),
        };
        let capacity = match &def.spec {
            SensorSpec::Distance(_) => 0,
            SensorSpec::Imu(s) => s.smoothing_window + 2,
        };
        let seed = def.spec.noise().seed.unwrap_or(global_seed);
        let sample_rate = def.spec.sample_rate().unwrap_or(simulation_rate);
        Ok(SensorInstance {
            rng: NoiseRng::for_sensor(seed, &def.id),
            schedule: Schedule::new(simulation_rate, sample_rate),
            def,
            bone,
            history: VecDeque::with_capacity(capacity),
            capacity,
            seed,
        })
    }

    pub fn id(&self) -> &str {
        &self.def.id
    }

    pub fn def(&self) -> &SensorDef {
        &self.def
    }

    pub fn spec(&self) -> &SensorSpec {
        &self.def.spec
    }

    pub fn attachment(&self) -> &Attachment {
        &self.def.attachment
    }

    /// Skeleton joint index for bone attachments.
    pub fn bone_index(&self) -> Option<usize> {
        self.bone
    }

    pub fn channel_names(&self) -> &'static [&'static str] {
        self.def.spec.channel_names()
    }

    /// Ticks between the newest pose and the sample an output describes.
    pub fn group_delay_steps(&self) -> usize {
        match &self.def.spec {
            SensorSpec::Distance(_) => 0,
            SensorSpec::Imu(s) => s.smoothing_window.div_ceil(2),
        }
    }

    /// Pose history length needed before the IMU can emit.
    pub fn history_capacity(&self) -> usize {
        self.capacity
    }

    pub fn history(&self) -> impl ExactSizeIterator<Item = &(f64, Pose)> {
        self.history.iter()
    }

    /// Appends a pose, dropping the oldest beyond the IMU window.
    pub fn push_pose(&mut self, time: f64, pose: Pose) {
        if self.capacity == 0 {
            return;
        }
        if self.history.len() == self.capacity {
            self.history.pop_front();
        }
        self.history.push_back((time, pose));
    }

    /// Clears the pose history, restarts the noise stream and aligns the
    /// schedule to `tick`.
    pub fn reset(&mut self, tick: u64) {
        self.history.clear();
        self.rng = NoiseRng::for_sensor(self.seed, &self.def.id);
        self.schedule.reset(tick);
    }

    /// Processes one simulation tick: updates state and returns the sample
    /// emitted on it, if any.
    pub fn observe(
        &mut self,
        tick: u64,
        time: f64,
        poses: &PoseSet,
        scene: &Scene,
        step: f64,
    ) -> Result<Option<SensorSample>, SensorError> {
        let pose = sensor_world_pose(self, poses)?;
        if matches!(self.def.spec, SensorSpec::Distance(_)) {
            return Ok(self
                .schedule
                .is_due(tick)
                .then(|| eval_distance(self, scene, &pose, time)));
        }
        self.push_pose(time, pose);
        if self.history.len() < self.capacity {
            return Ok(None);
        }
        let center = tick - self.group_delay_steps() as u64;
        if self.schedule.is_due(center) {
            eval_imu(self, step)
        } else {
            Ok(None)
        }
    }
}

/// World pose of the sensor for the given body state.
pub fn sensor_world_pose(instance: &SensorInstance, poses: &PoseSet) -> Result<Pose, SensorError> {
    match (&instance.def.attachment, instance.bone) {
        (Attachment::World { local_offset }, _) => Ok(*local_offset),
        (Attachment::Bone { local_offset, .. }, Some(b)) if b < poses.world.len() => {
            Ok(poses.world[b].compose(local_offset))
        }
        (Attachment::Bone { bone_name, .. }, _) => {
            Err(SensorError::UnknownJoint(bone_name.clone()))
        }
    }
}

/// Casts along the sensor's local −Z. A miss reads `max_range` with `hit = 0`.
/// Noise is added to the distance, which is then clamped to `[0, max_range]`.
pub fn eval_distance(
    instance: &mut SensorInstance,
    scene: &Scene,
    pose: &Pose,
    time: f64,
) -> SensorSample {
    let SensorSpec::Distance(spec) = &instance.def.spec else {
        panic!("eval_distance on a non-distance sensor");
    };
    let max_range = spec.max_range;
    let stddev = spec.noise.stddev.channel(0);
    let direction = pose.orientation.rotate(-Vec3::Z);
    let hit = Ray::new(pose.position, direction)
        .ok()
        .and_then(|ray| scene.ray_cast(&ray, max_range));
    let (distance, flag) = match hit {
        Some(h) => (h.distance, 1.0),
        None => (max_range, 0.0),
    };
    let distance = apply_noise(distance, stddev, &mut instance.rng).clamp(0.0, max_range);
    SensorSample {
        time,
        sensor_id: instance.def.id.clone(),
        values: vec![distance, flag],
    }
}

/// Smoothed second difference at the center of the pose history, as proper
/// acceleration in the sensor frame, plus angular velocity if enabled.
/// Absent until the history holds `smoothing_window + 2` poses.
pub fn eval_imu(
    instance: &mut SensorInstance,
    step: f64,
) -> Result<Option<SensorSample>, SensorError> {
    let SensorSpec::Imu(spec) = &instance.def.spec else {
        return Ok(None);
    };
    let h = &instance.history;
    if h.len() < instance.capacity {
        return Ok(None);
    }
    for pair in h.iter().zip(h.iter().skip(1)) {
        let dt = pair.1 .0 - pair.0 .0;
        if (dt - step).abs() > 1e-12 * (1.0 + pair.1 .0.abs()) {
            return Err(SensorError::HistorySpacingMismatch {
                expected: step,
                found: dt,
            });
        }
    }
    let half = spec.smoothing_window / 2;
    let center = half + 1;
    let smoothed = |j: usize| {
        let sum = (j - half..=j + half).fold(Vec3::ZERO, |acc, i| acc + h[i].1.position);
        sum / spec.smoothing_window as f64
    };
    let accel = central_second_difference(
        smoothed(center - 1),
        smoothed(center),
        smoothed(center + 1),
        step,
    )
    .map_err(|_| SensorError::HistorySpacingMismatch {
        expected: step,
        found: step,
    })?;
    let proper = if spec.include_gravity {
        accel - GRAVITY
    } else {
        accel
    };
    let (time, center_pose) = h[center];
    let to_local = center_pose.orientation.inverse();
    let f = to_local.rotate(proper);
    let mut values = vec![f.x, f.y, f.z];
    if spec.emit_angular_velocity {
        let dq = h[center + 1].1.orientation * h[center - 1].1.orientation.inverse();
        let w = to_local.rotate(dq.to_rotation_vector() / (2.0 * step));
        values.extend([w.x, w.y, w.z]);
    }
    let stddev = spec.noise.stddev.clone();
    for (i, v) in values.iter_mut().enumerate() {
        *v = apply_noise(*v, stddev.channel(i), &mut instance.rng);
    }
    Ok(Some(SensorSample {
        time,
        sensor_id: instance.def.id.clone(),
        values,
    }))
}
