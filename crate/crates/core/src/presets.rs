//! Canned runs for the single-cable regimes and the two-neuron feed-forward chain.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{build_grid, sample_step_profile, Field, Side, SpatialConfig, StepProfile};
use crate::integrator::{NetworkSpec, NetworkState, TimeGrid};
use crate::model::{ModelParams, PointState};

/// Fraction of the domain receiving the step current (left end).
pub const INPUT_FRACTION: f64 = 0.1;
/// Fraction of the domain where neuron 1 drives neuron 2 (right end).
pub const COUPLING_FRACTION: f64 = 0.1;

pub const ONES: PointState = PointState { v: 1.0, n: 1.0, m: 1.0, h: 1.0 };
pub const ZEROS: PointState = PointState { v: 0.0, n: 0.0, m: 0.0, h: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PresetName {
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
    Fig5,
    Fig6,
}

impl PresetName {
    pub const ALL: [PresetName; 6] = [
        PresetName::Fig2,
        PresetName::Fig3a,
        PresetName::Fig3b,
        PresetName::Fig4,
        PresetName::Fig5,
        PresetName::Fig6,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PresetName::Fig2 => "fig2",
            PresetName::Fig3a => "fig3a",
            PresetName::Fig3b => "fig3b",
            PresetName::Fig4 => "fig4",
            PresetName::Fig5 => "fig5",
            PresetName::Fig6 => "fig6",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown preset '{s}' (expected one of fig2, fig3a, fig3b, fig4, fig5, fig6)"
                ))
            })
    }
}

/// A ready-to-run scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: PresetName,
    pub spec: NetworkSpec,
    pub init: NetworkState,
    pub time: TimeGrid,
    /// Probe node indices; every probe records every neuron.
    pub probes: Vec<usize>,
    pub snapshot_times: Vec<f64>,
}

/// Left step current `I0` on `x < a + (b-a)/10`.
pub fn left_step_input(spatial: &SpatialConfig, i0: f64) -> Result<Field> {
    let grid = build_grid(spatial)?;
    Ok(sample_step_profile(&StepProfile::new(i0, 0.0, INPUT_FRACTION, Side::Left), &grid))
}

/// Unit coupling on `x >= b - (b-a)/10`.
pub fn right_step_coupling(spatial: &SpatialConfig, strength: f64) -> Result<Field> {
    let grid = build_grid(spatial)?;
    Ok(sample_step_profile(
        &StepProfile::new(strength, 0.0, COUPLING_FRACTION, Side::Right),
        &grid,
    ))
}

/// Single cable driven by a left step of amplitude `i0`.
pub fn single_neuron(i0: f64, init: PointState, probes: Vec<usize>, snapshot_times: Vec<f64>, name: PresetName) -> Result<Preset> {
    let spatial = SpatialConfig::default();
    let spec = NetworkSpec::uncoupled(ModelParams::default(), spatial, vec![left_step_input(&spatial, i0)?])?;
    Ok(Preset {
        name,
        spec,
        init: NetworkState::uniform(spatial.node_count, &[init]),
        time: TimeGrid::default(),
        probes,
        snapshot_times,
    })
}

/// Builds the named scenario on (0, 100) with 101 nodes, dt = 0.01 and t_end = 500.
pub fn preset(name: PresetName) -> Result<Preset> {
    match name {
        PresetName::Fig2 => single_neuron(5.2, ONES, vec![0, 100], vec![500.0], name),
        PresetName::Fig3a => single_neuron(5.3, ONES, vec![0, 100], vec![500.0], name),
        PresetName::Fig3b => single_neuron(5.3, ZEROS, vec![0, 100], vec![500.0], name),
        PresetName::Fig4 => single_neuron(130.0, ONES, vec![0, 8, 100], vec![200.0, 250.0], name),
        PresetName::Fig5 => single_neuron(145.0, ONES, vec![0, 10, 100], vec![200.0, 250.0], name),
        PresetName::Fig6 => {
            let spatial = SpatialConfig::default();
            let len = spatial.node_count;
            let zero = Field::zeros(len);
            let spec = NetworkSpec::new(
                ModelParams::default(),
                spatial,
                vec![left_step_input(&spatial, 130.0)?, zero.clone()],
                vec![
                    vec![zero.clone(), zero.clone()],
                    vec![right_step_coupling(&spatial, 1.0)?, zero],
                ],
            )?;
            Ok(Preset {
                name,
                spec,
                init: NetworkState::uniform(len, &[ONES, ZEROS]),
                time: TimeGrid::default(),
                probes: vec![0, 100],
                snapshot_times: vec![200.0, 250.0],
            })
        }
    }
}
