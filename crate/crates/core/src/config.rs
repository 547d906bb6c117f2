//! TOML run configuration.
//!
//! ```toml
//! [model]            # membrane parameters, all optional
//! g_na = 120.0
//!
//! [spatial]
//! a = 0.0
//! b = 100.0
//! node_count = 101
//! diffusion = 1.0
//!
//! [time]
//! dt = 0.01
//! t_end = 500.0
//! record_stride = 1
//! scheme = "rk4"     # or "split"
//!
//! [network]
//! neurons = 2
//! i0 = 130.0         # left step on neuron 1 over the first tenth of the domain
//! init = [[1, 1, 1, 1], [0, 0, 0, 0]]
//! # inputs = [{ neuron = 2, high = 5.0, fraction = 0.2, side = "right" }]
//!
//! [[coupling]]
//! target = 2
//! source = 1
//! high = 1.0
//!
//! [output]
//! dir = "out"
//! probes = [0.0, 100.0]
//! snapshots = [200.0, 250.0]
//! svg = false
//!
//! [classifier]
//! window_start = 250.0
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::grid::{build_grid, sample_step_profile, Field, Side, SpatialConfig, StepProfile};
use crate::integrator::{NetworkSpec, NetworkState, NeuronState, Scheme, TimeGrid};
use crate::model::{ModelParams, PointState};
use crate::monitors::ClassifierConfig;
use crate::presets::{INPUT_FRACTION, ONES};

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ConfigFile {
    model: ModelParams,
    spatial: SpatialConfig,
    time: TimeSection,
    network: NetworkSection,
    coupling: Vec<StepEntry>,
    output: OutputSection,
    classifier: Option<toml::Table>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TimeSection {
    dt: f64,
    t_end: f64,
    record_stride: usize,
    scheme: String,
}

impl Default for TimeSection {
    fn default() -> Self {
        let t = TimeGrid::default();
        TimeSection {
            dt: t.dt,
            t_end: t.t_end,
            record_stride: t.record_stride,
            scheme: "rk4".into(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct NetworkSection {
    neurons: usize,
    i0: Option<f64>,
    inputs: Vec<StepEntry>,
    init: Vec<[f64; 4]>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            neurons: 1,
            i0: None,
            inputs: Vec::new(),
            init: Vec::new(),
        }
    }
}

/// A step profile attached to one neuron (input) or one neuron pair (coupling).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StepEntry {
    #[serde(alias = "target")]
    neuron: usize,
    source: Option<usize>,
    high: f64,
    #[serde(default)]
    low: f64,
    #[serde(default = "default_fraction")]
    fraction: f64,
    side: Option<Side>,
    #[serde(default)]
    smoothing: f64,
}

fn default_fraction() -> f64 {
    INPUT_FRACTION
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OutputSection {
    dir: Option<PathBuf>,
    probes: Option<Vec<f64>>,
    snapshots: Option<Vec<f64>>,
    svg: bool,
}

/// A fully validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: NetworkSpec,
    pub init: NetworkState,
    pub time: TimeGrid,
    pub scheme: Scheme,
    /// Probe node indices.
    pub probes: Vec<usize>,
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    pub svg: bool,
    pub classifier: ClassifierConfig,
}

fn step_field(entry: &StepEntry, default_side: Side, grid: &[f64], what: &str) -> Result<Field> {
    let profile = StepProfile {
        high_value: entry.high,
        low_value: entry.low,
        boundary_fraction: entry.fraction,
        high_side: entry.side.unwrap_or(default_side),
        smoothing_width: entry.smoothing,
    };
    profile
        .validate()
        .map_err(|e| Error::Config(format!("{what}: {}", strip_prefix(e))))?;
    Ok(sample_step_profile(&profile, grid))
}

fn strip_prefix(e: Error) -> String {
    match e {
        Error::Config(m) | Error::Domain(m) => m,
        other => other.to_string(),
    }
}

fn neuron_index(n: usize, count: usize, what: &str) -> Result<usize> {
    if n == 0 || n > count {
        return Err(Error::Config(format!(
            "{what} refers to neuron {n}, but neurons are numbered 1..={count}"
        )));
    }
    Ok(n - 1)
}

fn classifier_from(table: Option<toml::Table>, t_end: f64) -> Result<ClassifierConfig> {
    let table = table.unwrap_or_default();
    let explicit_window = table.contains_key("window_start") || table.contains_key("window_end");
    let mut cfg: ClassifierConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(format!("[classifier]: {}", e.message())))?;
    if !explicit_window && t_end < cfg.window_end {
        cfg.window_end = t_end;
        cfg.window_start = 0.5 * t_end;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses and validates a TOML run configuration.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
    let ConfigFile {
        model,
        spatial,
        time,
        network,
        coupling,
        output,
        classifier,
    } = file;

    model.validate()?;
    spatial.validate()?;
    let grid = build_grid(&spatial)?;
    let len = spatial.node_count;
    let n = network.neurons;
    if n == 0 {
        return Err(Error::Config("network needs at least one neuron".into()));
    }

    let mut inputs = vec![Field::zeros(len); n];
    let mut assigned = vec![false; n];
    for entry in &network.inputs {
        if entry.source.is_some() {
            return Err(Error::Config("network input entries take no 'source'".into()));
        }
        let i = neuron_index(entry.neuron, n, "input")?;
        if assigned[i] {
            return Err(Error::Config(format!("neuron {} has two input entries", i + 1)));
        }
        inputs[i] = step_field(entry, Side::Left, &grid, "input")?;
        assigned[i] = true;
    }
    if let Some(i0) = network.i0 {
        if assigned[0] {
            return Err(Error::Config(
                "network.i0 and an input entry for neuron 1 are mutually exclusive".into(),
            ));
        }
        let entry = StepEntry {
            neuron: 1,
            source: None,
            high: i0,
            low: 0.0,
            fraction: INPUT_FRACTION,
            side: Some(Side::Left),
            smoothing: 0.0,
        };
        inputs[0] = step_field(&entry, Side::Left, &grid, "network.i0")?;
    }

    let mut alpha = vec![vec![Field::zeros(len); n]; n];
    for entry in &coupling {
        let i = neuron_index(entry.neuron, n, "coupling target")?;
        let source = entry
            .source
            .ok_or_else(|| Error::Config("coupling entries need a 'source'".into()))?;
        let j = neuron_index(source, n, "coupling source")?;
        alpha[i][j] = step_field(entry, Side::Right, &grid, "coupling")?;
    }
    let spec = NetworkSpec::new(model, spatial, inputs, alpha)?;

    let init_points: Vec<PointState> = match network.init.len() {
        0 => vec![ONES; n],
        1 => vec![point(network.init[0]); n],
        k if k == n => network.init.iter().copied().map(point).collect(),
        k => {
            return Err(Error::Config(format!(
                "network.init has {k} entries for {n} neurons (give 1 or {n})"
            )))
        }
    };
    let init = NetworkState {
        neurons: init_points.iter().map(|p| NeuronState::constant(len, *p)).collect(),
    };

    let tg = TimeGrid {
        dt: time.dt,
        t_end: time.t_end,
        record_stride: time.record_stride,
    };
    tg.validate()?;
    let scheme: Scheme = time.scheme.parse()?;

    let probe_x = output.probes.unwrap_or_else(|| vec![spatial.a, spatial.b]);
    if probe_x.is_empty() {
        return Err(Error::Config("output.probes must not be empty".into()));
    }
    let probes = probe_x
        .iter()
        .map(|&x| {
            spatial.nearest_node(x).ok_or_else(|| {
                Error::Config(format!(
                    "probe x={x} lies outside the domain [{}, {}]",
                    spatial.a, spatial.b
                ))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let snapshot_times = output.snapshots.unwrap_or_else(|| vec![tg.t_end]);
    for &t in &snapshot_times {
        if !(0.0..=tg.t_end).contains(&t) {
            return Err(Error::Config(format!(
                "snapshot time {t} lies outside [0, {}]",
                tg.t_end
            )));
        }
    }

    Ok(RunConfig {
        spec,
        init,
        time: tg,
        scheme,
        probes,
        snapshot_times,
        output_dir: output.dir.unwrap_or_else(|| PathBuf::from("out")),
        svg: output.svg,
        classifier: classifier_from(classifier, tg.t_end)?,
    })
}

fn point(v: [f64; 4]) -> PointState {
    PointState::new(v[0], v[1], v[2], v[3])
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}
