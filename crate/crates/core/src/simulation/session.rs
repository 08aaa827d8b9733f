use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::geometry::{BodyProxies, Capsule, Scene};
use crate::mocap::{sample_pose, AnimationClip, PoseSet, Skeleton};
use crate::sensors::{
    expand_prefab, Attachment, MatrixPrefabSpec, SensorDef, SensorInstance, SensorSample,
};

use super::config::{bind_sensor, prepare};
use super::{ConfigError, Recording, Series, SessionConfig, SimulationError};

/// Outcome of one [`Session::step`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TickReport {
    pub tick: u64,
    /// Exactly `tick / simulation_rate`.
    pub time: f64,
    pub samples: Vec<SensorSample>,
}

/// A validated, steppable simulation.
///
/// Ticks run from 0 to `last_tick` inclusive at `t = tick / rate`. Sensors
/// are evaluated in id order, so results never depend on insertion order.
#[derive(Clone, Debug)]
pub struct Session {
    config: Arc<SessionConfig>,
    base_dir: PathBuf,
    skeleton: Option<Arc<Skeleton>>,
    clip: Option<Arc<AnimationClip>>,
    scene: Scene,
    proxies: BodyProxies,
    sensors: Vec<SensorInstance>,
    rate: f64,
    duration: f64,
    last_tick: u64,
    /// Next tick to process.
    cursor: u64,
    poses: PoseSet,
    recording: Recording,
}

impl Session {
    /// Loads every referenced file and checks the whole config, reporting all
    /// problems at once.
    pub fn new(config: SessionConfig, base_dir: &Path) -> Result<Self, Vec<ConfigError>> {
        let prepared = prepare(&config, base_dir)?;
        let config = Arc::new(config);
        let rate = config.simulation_rate;
        let mut recording = Recording::new(config.clone());
        for s in &prepared.sensors {
            recording.register(series_for(s, rate));
        }
        let mut session = Session {
            config,
            base_dir: base_dir.to_path_buf(),
            skeleton: prepared.skeleton,
            clip: prepared.clip,
            scene: prepared.scene,
            proxies: prepared.proxies,
            sensors: prepared.sensors,
            rate,
            duration: prepared.duration,
            last_tick: prepared.last_tick,
            cursor: 0,
            poses: PoseSet {
                time: 0.0,
                world: Vec::new(),
            },
            recording,
        };
        session.poses = session.pose_at(0.0).map_err(|e| {
            vec![ConfigError {
                kind: super::ConfigErrorKind::Invalid,
                path: "clip".into(),
                message: e.to_string(),
            }]
        })?;
        session
            .proxies
            .write_capsules(&session.poses, session.scene.capsules_mut());
        Ok(session)
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn skeleton(&self) -> Option<&Skeleton> {
        self.skeleton.as_deref()
    }

    pub fn clip(&self) -> Option<&AnimationClip> {
        self.clip.as_deref()
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn capsules(&self) -> &[Capsule] {
        self.scene.capsules()
    }

    pub fn sensors(&self) -> &[SensorInstance] {
        &self.sensors
    }

    pub fn sensor_defs(&self) -> Vec<SensorDef> {
        self.sensors.iter().map(|s| s.def().clone()).collect()
    }

    /// Joint world poses from the most recent tick (or time 0 before any).
    pub fn poses(&self) -> &PoseSet {
        &self.poses
    }

    pub fn simulation_rate(&self) -> f64 {
        self.rate
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn last_tick(&self) -> u64 {
        self.last_tick
    }

    pub fn tick_count(&self) -> u64 {
        self.last_tick + 1
    }

    pub fn next_tick(&self) -> u64 {
        self.cursor
    }

    /// Time of the next tick to run, or the duration once finished.
    pub fn position(&self) -> f64 {
        self.tick_time(self.cursor.min(self.last_tick))
    }

    pub fn is_finished(&self) -> bool {
        self.cursor > self.last_tick
    }

    pub fn tick_time(&self, tick: u64) -> f64 {
        tick as f64 / self.rate
    }

    pub fn recording(&self) -> &Recording {
        &self.recording
    }

    pub fn into_recording(self) -> Recording {
        self.recording
    }

    fn pose_at(&self, t: f64) -> Result<PoseSet, SimulationError> {
        let (Some(skel), Some(clip)) = (&self.skeleton, &self.clip) else {
            return Ok(PoseSet {
                time: t,
                world: Vec::new(),
            });
        };
        let cd = clip.duration();
        let local_t = if self.config.looping && cd > 0.0 {
            t - libm::floor(t / cd) * cd
        } else {
            t.min(cd)
        };
        let mut poses = sample_pose(skel, clip, local_t)?;
        poses.time = t;
        Ok(poses)
    }

    /// Runs the next tick.
    pub fn step(&mut self) -> Result<TickReport, SimulationError> {
        if self.is_finished() {
            return Err(SimulationError::SessionFinished);
        }
        let tick = self.cursor;
        let time = self.tick_time(tick);
        let step = 1.0 / self.rate;
        self.poses = self.pose_at(time)?;
        self.proxies
            .write_capsules(&self.poses, self.scene.capsules_mut());
        let mut samples = Vec::new();
        for sensor in &mut self.sensors {
            if let Some(s) = sensor.observe(tick, time, &self.poses, &self.scene, step)? {
                self.recording.push(&s);
                samples.push(s);
            }
        }
        self.cursor += 1;
        Ok(TickReport {
            tick,
            time,
            samples,
        })
    }

    /// Steps until finished.
    pub fn run_to_end(&mut self) -> Result<(), SimulationError> {
        while !self.is_finished() {
            self.step()?;
        }
        Ok(())
    }

    /// Moves to the tick nearest `t` (clamped to the last tick). Sensor
    /// histories and noise streams restart; recorded data is kept.
    pub fn seek(&mut self, t: f64) -> Result<u64, SimulationError> {
        if !(t >= 0.0 && t <= self.duration + 1e-9) {
            return Err(SimulationError::SeekOutOfRange {
                t,
                duration: self.duration,
            });
        }
        let tick = (libm::round(t * self.rate) as u64).min(self.last_tick);
        self.seek_tick(tick);
        Ok(tick)
    }

    pub fn seek_tick(&mut self, tick: u64) {
        let tick = tick.min(self.last_tick);
        self.cursor = tick;
        for s in &mut self.sensors {
            s.reset(tick);
        }
        if let Ok(p) = self.pose_at(self.tick_time(tick)) {
            self.poses = p;
            self.proxies
                .write_capsules(&self.poses, self.scene.capsules_mut());
        }
    }

    fn index_of(&self, id: &str) -> Result<usize, SimulationError> {
        self.sensors
            .binary_search_by(|s| s.id().cmp(id))
            .map_err(|_| SimulationError::UnknownSensor(id.to_string()))
    }

    fn bind(&self, def: &SensorDef, path: &str) -> Result<SensorInstance, SimulationError> {
        let mut errors = Vec::new();
        let inst = bind_sensor(
            def,
            path,
            self.skeleton.as_deref(),
            self.rate,
            self.config.seed,
            &mut errors,
        );
        match inst {
            Some(mut i) => {
                i.reset(self.cursor);
                Ok(i)
            }
            None => Err(SimulationError::Config(errors)),
        }
    }

    fn insert(&mut self, inst: SensorInstance) {
        self.recording.register(series_for(&inst, self.rate));
        let at = self
            .sensors
            .binary_search_by(|s| s.id().cmp(inst.id()))
            .unwrap_err();
        self.sensors.insert(at, inst);
    }

    /// Records the current sensor set as the config snapshot.
    fn sync_config(&mut self) {
        let mut config = (*self.config).clone();
        config.sensors = self.sensor_defs();
        config.prefabs.clear();
        self.config = Arc::new(config);
        self.recording.set_config(self.config.clone());
    }

    pub fn add_sensor(&mut self, def: SensorDef) -> Result<String, SimulationError> {
        if self.index_of(&def.id).is_ok() {
            return Err(SimulationError::DuplicateSensor(def.id));
        }
        let inst = self.bind(&def, "sensor")?;
        let id = def.id.clone();
        self.insert(inst);
        self.sync_config();
        Ok(id)
    }

    /// Replaces a sensor's attachment and clears its recorded data.
    pub fn move_sensor(&mut self, id: &str, attachment: Attachment) -> Result<(), SimulationError> {
        let i = self.index_of(id)?;
        let mut def = self.sensors[i].def().clone();
        def.attachment = attachment;
        let inst = self.bind(&def, "sensor")?;
        self.sensors[i] = inst;
        self.recording
            .register(series_for(&self.sensors[i], self.rate));
        self.sync_config();
        Ok(())
    }

    pub fn remove_sensor(&mut self, id: &str) -> Result<(), SimulationError> {
        let i = self.index_of(id)?;
        self.sensors.remove(i);
        self.recording.remove(id);
        self.sync_config();
        Ok(())
    }

    /// Adds every element of a matrix prefab; fails without changes if any
    /// element id is taken or invalid.
    pub fn add_prefab(&mut self, spec: &MatrixPrefabSpec) -> Result<Vec<String>, SimulationError> {
        let defs = expand_prefab(spec)?;
        let mut insts = Vec::with_capacity(defs.len());
        for d in &defs {
            if self.index_of(&d.id).is_ok() {
                return Err(SimulationError::DuplicateSensor(d.id.clone()));
            }
            insts.push(self.bind(d, "prefab")?);
        }
        let ids = defs.into_iter().map(|d| d.id).collect();
        for inst in insts {
            self.insert(inst);
        }
        self.sync_config();
        Ok(ids)
    }
}

fn series_for(s: &SensorInstance, rate: f64) -> Series {
    Series::new(
        s.def().clone(),
        s.spec().sample_rate().unwrap_or(rate),
        s.group_delay_steps(),
    )
}

/// Validates `config` and runs it to the end.
pub fn run(config: SessionConfig, base_dir: &Path) -> Result<Recording, SimulationError> {
    let mut session = Session::new(config, base_dir).map_err(SimulationError::Config)?;
    session.run_to_end()?;
    Ok(session.into_recording())
}
