//! Hodgkin-Huxley membrane kinetics in shifted coordinates (rest near 0 mV).
//!
//! Units throughout: mV, ms, mS/cm², µA/cm², µF/cm². Rates are in 1/ms.
//!
//! ```text
//! C dV/dt = I + gNa m³h (ENa - V) + gK n⁴ (EK - V) + gL (EL - V)
//! dx/dt   = αx(V) (1 - x) - βx(V) x          x ∈ {n, m, h}
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Universal gas constant, J/(mol·K).
pub const GAS_CONSTANT: f64 = 8.315;
/// Faraday constant, C/mol.
pub const FARADAY: f64 = 96485.0;

/// Below this |x| the ratio x/(eˣ-1) is evaluated by its Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// Membrane and synaptic coupling constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub g_na: f64,
    pub g_k: f64,
    pub g_l: f64,
    pub e_na: f64,
    pub e_k: f64,
    pub e_l: f64,
    pub capacitance: f64,
    /// Reversal potential S of the excitatory coupling.
    pub s_reversal: f64,
    /// Steepness λ of the presynaptic sigmoid.
    pub lambda_slope: f64,
    /// Threshold θ of the presynaptic sigmoid.
    pub theta_threshold: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            g_na: 120.0,
            g_k: 36.0,
            g_l: 0.3,
            e_na: 120.0,
            e_k: -12.0,
            e_l: 10.6,
            capacitance: 1.0,
            s_reversal: 100.0,
            lambda_slope: 20.0,
            theta_threshold: 60.0,
        }
    }
}

impl ModelParams {
    /// Checks positivity of conductances and capacitance and the ordering
    /// `e_k < e_l < s_reversal < e_na` that the invariant region relies on.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.g_na,
            self.g_k,
            self.g_l,
            self.e_na,
            self.e_k,
            self.e_l,
            self.capacitance,
            self.s_reversal,
            self.lambda_slope,
            self.theta_threshold,
        ];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        if self.g_na <= 0.0 || self.g_k <= 0.0 || self.g_l <= 0.0 {
            return Err(Error::Config(
                "conductances g_na, g_k, g_l must be strictly positive".into(),
            ));
        }
        if self.capacitance <= 0.0 {
            return Err(Error::Config("capacitance must be strictly positive".into()));
        }
        if !(self.e_k < self.e_l && self.e_l < self.s_reversal && self.s_reversal < self.e_na) {
            return Err(Error::Config(format!(
                "reversal potentials must satisfy e_k < e_l < s_reversal < e_na (got {} , {}, {}, {})",
                self.e_k, self.e_l, self.s_reversal, self.e_na
            )));
        }
        Ok(())
    }
}

/// The three gating variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GateKind {
    N,
    M,
    H,
}

impl GateKind {
    pub const ALL: [GateKind; 3] = [GateKind::N, GateKind::M, GateKind::H];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::N => "n",
            GateKind::M => "m",
            GateKind::H => "h",
        }
    }

    /// Opening rate α(v), without the finiteness check.
    #[inline]
    pub fn alpha(self, v: f64) -> f64 {
        match self {
            // 0.01 (10 - v) / (exp(1 - 0.1 v) - 1) = 0.1 · u / (eᵘ - 1), u = 1 - 0.1 v
            GateKind::N => 0.1 * x_over_expm1(1.0 - 0.1 * v),
            // 0.1 (25 - v) / (exp(2.5 - 0.1 v) - 1) = u / (eᵘ - 1), u = 2.5 - 0.1 v
            GateKind::M => x_over_expm1(2.5 - 0.1 * v),
            GateKind::H => 0.07 * (-v / 20.0).exp(),
        }
    }

    /// Closing rate β(v), without the finiteness check.
    #[inline]
    pub fn beta(self, v: f64) -> f64 {
        match self {
            GateKind::N => 0.125 * (-v / 80.0).exp(),
            GateKind::M => 4.0 * (-v / 18.0).exp(),
            GateKind::H => 1.0 / (1.0 + (3.0 - 0.1 * v).exp()),
        }
    }
}

/// x / (eˣ - 1), continuous through x = 0 where it equals 1.
#[inline]
fn x_over_expm1(x: f64) -> f64 {
    if x.abs() < SERIES_CUTOFF {
        1.0 - x / 2.0 + x * x / 12.0
    } else {
        x / x.exp_m1()
    }
}

/// Membrane state at one point of one neuron.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointState {
    pub v: f64,
    pub n: f64,
    pub m: f64,
    pub h: f64,
}

impl PointState {
    pub fn new(v: f64, n: f64, m: f64, h: f64) -> Self {
        PointState { v, n, m, h }
    }

    pub fn gate(&self, gate: GateKind) -> f64 {
        match gate {
            GateKind::N => self.n,
            GateKind::M => self.m,
            GateKind::H => self.h,
        }
    }
}

fn check_finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("potential must be finite, got {v}")))
    }
}

pub fn rate_alpha(gate: GateKind, v: f64) -> Result<f64> {
    check_finite(v)?;
    Ok(gate.alpha(v))
}

pub fn rate_beta(gate: GateKind, v: f64) -> Result<f64> {
    check_finite(v)?;
    Ok(gate.beta(v))
}

/// Steady-state activation and time constant `(x_inf, tau)` at a clamped potential.
pub fn gate_steady(gate: GateKind, v: f64) -> Result<(f64, f64)> {
    check_finite(v)?;
    let a = gate.alpha(v);
    let b = gate.beta(v);
    let sum = a + b;
    if !(sum > 0.0) {
        return Err(Error::Domain(format!(
            "degenerate rates for gate {} at v={v}: alpha+beta={sum}",
            gate.name()
        )));
    }
    Ok((a / sum, 1.0 / sum))
}

/// Reaction part of dV/dt: ionic currents plus external drive, divided by C.
#[inline]
pub fn reaction_v(p: &ModelParams, s: PointState, i_ext: f64) -> f64 {
    let m3h = s.m * s.m * s.m * s.h;
    let n2 = s.n * s.n;
    (i_ext + p.g_na * m3h * (p.e_na - s.v) + p.g_k * n2 * n2 * (p.e_k - s.v) + p.g_l * (p.e_l - s.v))
        / p.capacitance
}

#[inline]
pub fn reaction_gate(gate: GateKind, v: f64, x: f64) -> f64 {
    gate.alpha(v) * (1.0 - x) - gate.beta(v) * x
}

/// Presynaptic activation Γ(s) = 1 / (1 + exp(-λ (s - θ))).
#[inline]
pub fn gamma_sigmoid(p: &ModelParams, s: f64) -> f64 {
    1.0 / (1.0 + (-p.lambda_slope * (s - p.theta_threshold)).exp())
}

/// Excitatory synaptic drive Σⱼ αⱼ (S - v_self) Γ(vⱼ) at one node.
pub fn coupling_input(
    p: &ModelParams,
    alpha_row: &[f64],
    v_self: f64,
    v_sources: &[f64],
) -> Result<f64> {
    if alpha_row.len() != v_sources.len() {
        return Err(Error::Domain(format!(
            "coupling row has {} entries but {} source potentials were given",
            alpha_row.len(),
            v_sources.len()
        )));
    }
    if let Some(a) = alpha_row.iter().find(|a| !(**a >= 0.0)) {
        return Err(Error::Config(format!(
            "coupling strengths must be nonnegative, got {a}"
        )));
    }
    let drive = p.s_reversal - v_self;
    Ok(alpha_row
        .iter()
        .zip(v_sources)
        .map(|(a, vj)| a * drive * gamma_sigmoid(p, *vj))
        .sum())
}

/// Nernst equilibrium potential in mV, plus an additive shift.
pub fn nernst_potential(temperature: f64, valence: i32, c_out: f64, c_in: f64, shift: f64) -> Result<f64> {
    if valence == 0 {
        return Err(Error::Domain("ion valence must be nonzero".into()));
    }
    if !(c_out > 0.0 && c_in > 0.0) {
        return Err(Error::Domain(format!(
            "concentrations must be positive (out={c_out}, in={c_in})"
        )));
    }
    let volts = GAS_CONSTANT * temperature / (valence as f64 * FARADAY) * (c_out / c_in).ln();
    Ok(1000.0 * volts + shift)
}
