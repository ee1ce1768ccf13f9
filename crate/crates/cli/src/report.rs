use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};
use wmt_core::multiscale::AnomalyFlag;
use wmt_core::io::write_atomic;
use wmt_core::{Pyramid64, Result};

#[derive(Debug, Serialize)]
pub struct LevelRow {
    pub level: u32,
    pub one_norm: f64,
    pub inf_norm: f64,
    pub per_index: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct FlagRow {
    pub level: u32,
    pub index: usize,
    pub time: f64,
    pub norm: f64,
}

impl From<&AnomalyFlag<f64>> for FlagRow {
    fn from(f: &AnomalyFlag<f64>) -> Self {
        Self {
            level: f.level,
            index: f.index,
            time: f.time,
            norm: f.norm,
        }
    }
}

/// Summary written as `report.json` by every command.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub levels: Vec<LevelRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimality: Option<f64>,
    pub anomalies: Vec<FlagRow>,
    /// Command specific numbers (errors, counts, settings).
    pub metrics: Map<String, Value>,
    pub wall_time: f64,
    #[serde(skip)]
    started: Option<Instant>,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            levels: Vec::new(),
            optimality: None,
            anomalies: Vec::new(),
            metrics: Map::new(),
            wall_time: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn output(&mut self, path: PathBuf) {
        self.outputs.push(path);
    }

    pub fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.to_string(), value.into());
    }

    pub fn norm_table(&mut self, pyr: &Pyramid64) {
        self.levels = pyr
            .norms()
            .iter()
            .enumerate()
            .map(|(k, n)| LevelRow {
                level: k as u32 + 1,
                one_norm: n.iter().sum(),
                inf_norm: n.iter().copied().fold(0.0, f64::max),
                per_index: n.clone(),
            })
            .collect();
    }

    /// Stamps the wall time and writes `report.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<()> {
        if let Some(t) = self.started {
            self.wall_time = t.elapsed().as_secs_f64();
        }
        let path = dir.join("report.json");
        self.outputs.push(path.clone());
        let mut text = serde_json::to_string_pretty(&self).expect("report serializes");
        text.push('\n');
        write_atomic(&path, text.as_bytes())
    }
}
