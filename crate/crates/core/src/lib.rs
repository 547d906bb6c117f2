//! Networks of Hodgkin-Huxley reaction-diffusion cables on a 1-D domain with
//! zero-flux boundaries and excitatory sigmoid coupling.
//!
//! The crate is split the way a run flows: [`model`] holds the membrane
//! kinetics, [`grid`] the mesh and Laplacian, [`integrator`] the time
//! steppers, [`monitors`] the invariant checks and regime classifier,
//! [`presets`] the canned scenarios, and [`io`] / [`config`] / [`cli`] the
//! file formats and command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod io;
pub mod model;
pub mod monitors;
pub mod presets;

pub use error::{Error, Result};
pub use grid::{Field, SpatialConfig};
pub use integrator::{simulate, NetworkSpec, NetworkState, Scheme, TimeGrid, TrajectoryRecord};
pub use model::{ModelParams, PointState};
pub use monitors::{classify_regime, ClassifierConfig, Regime, RegimeLabel};
pub use presets::{preset, Preset, PresetName};
