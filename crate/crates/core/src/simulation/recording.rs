use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::sensors::{SensorDef, SensorSample};

use super::{SessionConfig, SimulationError, SCHEMA_VERSION};

/// Engine identifier written into metadata sidecars.
pub const ENGINE: &str = concat!("vsens ", env!("CARGO_PKG_VERSION"));

/// Time series of one sensor, channel-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub def: SensorDef,
    pub sample_rate: f64,
    pub group_delay_steps: usize,
    channels: &'static [&'static str],
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(def: SensorDef, sample_rate: f64, group_delay_steps: usize) -> Self {
        let channels = def.spec.channel_names();
        Series {
            def,
            sample_rate,
            group_delay_steps,
            channels,
            times: Vec::new(),
            values: vec![Vec::new(); channels.len()],
        }
    }

    pub fn channels(&self) -> &'static [&'static str] {
        self.channels
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        let i = self.channels.iter().position(|c| *c == name)?;
        Some(&self.values[i])
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Appends unless `time` is not past the last recorded time, so replays
    /// after a seek keep the samples up to the furthest tick reached.
    fn push(&mut self, sample: &SensorSample) -> bool {
        if self.times.last().is_some_and(|&t| sample.time <= t) {
            return false;
        }
        self.times.push(sample.time);
        for (col, v) in self.values.iter_mut().zip(&sample.values) {
            col.push(*v);
        }
        true
    }

    fn clear(&mut self) {
        self.times.clear();
        self.values.iter_mut().for_each(Vec::clear);
    }
}

/// Per-sensor metadata sidecar (`<sensor_id>.meta.json`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorMeta {
    pub schema: u32,
    pub engine: String,
    pub sensor: SensorDef,
    pub channels: Vec<String>,
    pub simulation_rate: f64,
    pub sample_rate: f64,
    /// Ticks between the newest pose and the sample an output describes.
    pub group_delay_steps: usize,
    pub group_delay_seconds: f64,
    pub sample_count: usize,
    pub config: SessionConfig,
}

/// All recorded series of a session, keyed by sensor id.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    config: Arc<SessionConfig>,
    series: BTreeMap<String, Series>,
}

impl Recording {
    pub fn new(config: Arc<SessionConfig>) -> Self {
        Recording {
            config,
            series: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub(crate) fn set_config(&mut self, config: Arc<SessionConfig>) {
        self.config = config;
    }

    /// Starts an empty series, replacing any existing one for the same id.
    pub fn register(&mut self, series: Series) {
        self.series.insert(series.def.id.clone(), series);
    }

    pub fn remove(&mut self, id: &str) -> Option<Series> {
        self.series.remove(id)
    }

    pub fn clear(&mut self, id: &str) {
        if let Some(s) = self.series.get_mut(id) {
            s.clear();
        }
    }

    /// Returns whether the sample was appended.
    pub fn push(&mut self, sample: &SensorSample) -> bool {
        self.series
            .get_mut(&sample.sensor_id)
            .is_some_and(|s| s.push(sample))
    }

    pub fn series(&self, id: &str) -> Option<&Series> {
        self.series.get(id)
    }

    /// Series in sensor-id order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Series)> {
        self.series.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn sensor_ids(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.series.values().all(Series::is_empty)
    }

    pub fn total_samples(&self) -> usize {
        self.series.values().map(Series::len).sum()
    }

    pub fn meta(&self, id: &str) -> Result<SensorMeta, SimulationError> {
        let s = self
            .series
            .get(id)
            .ok_or_else(|| SimulationError::UnknownSensor(id.to_string()))?;
        let rate = self.config.simulation_rate;
        Ok(SensorMeta {
            schema: SCHEMA_VERSION,
            engine: ENGINE.to_string(),
            sensor: s.def.clone(),
            channels: s.channels.iter().map(|c| c.to_string()).collect(),
            simulation_rate: rate,
            sample_rate: s.sample_rate,
            group_delay_steps: s.group_delay_steps,
            group_delay_seconds: s.group_delay_steps as f64 / rate,
            sample_count: s.len(),
            config: (*self.config).clone(),
        })
    }

    pub fn meta_json(&self, id: &str) -> Result<String, SimulationError> {
        let meta = self.meta(id)?;
        let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        text.push('\n');
        Ok(text)
    }

    /// Writes `<id>.csv` and `<id>.meta.json` for every sensor into `dir`,
    /// creating it if needed. Returns the written paths.
    pub fn write_dir(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(2 * self.series.len());
        for id in self.series.keys() {
            let csv = dir.join(format!("{id}.csv"));
            std::fs::write(&csv, export_csv(self, id).expect("series exists"))?;
            let meta = dir.join(format!("{id}.meta.json"));
            std::fs::write(&meta, self.meta_json(id).expect("series exists"))?;
            written.push(csv);
            written.push(meta);
        }
        Ok(written)
    }
}

/// CSV text for one sensor: header `time,<channels>`, one row per sample,
/// LF line endings. Numbers use the shortest representation that parses back
/// to the same double.
pub fn export_csv(recording: &Recording, sensor_id: &str) -> Result<String, SimulationError> {
    let s = recording
        .series(sensor_id)
        .ok_or_else(|| SimulationError::UnknownSensor(sensor_id.to_string()))?;
    let mut out = String::with_capacity(32 * (s.len() + 1));
    out.push_str("time");
    for c in s.channels {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (i, t) in s.times.iter().enumerate() {
        write!(out, "{t}").unwrap();
        for col in &s.values {
            write!(out, ",{}", col[i]).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}
