//! Semi-discrete network right-hand side and the two time steppers.
//!
//! Every neuron lives on the same grid. Voltage diffuses with the Neumann
//! Laplacian, gates are purely local, and neuron `i` receives synaptic drive
//! `Σⱼ αᵢⱼ(x) (S - Vᵢ) Γ(Vⱼ)` from the other neurons at the same node.

use crate::error::{Error, Result};
use crate::grid::{build_grid, laplacian_neumann_into, Field, SpatialConfig};
use crate::model::{gamma_sigmoid, reaction_v, GateKind, ModelParams, PointState};
use crate::monitors::{self, MonitorVerdicts};

/// |V| above this (mV) is treated as a numerical blow-up.
pub const BLOW_UP_LIMIT: f64 = 1e4;

#[derive(Debug, Clone, PartialEq)]
pub struct NeuronState {
    pub v: Field,
    pub n: Field,
    pub m: Field,
    pub h: Field,
}

impl NeuronState {
    pub fn constant(len: usize, s: PointState) -> Self {
        NeuronState {
            v: Field::constant(len, s.v),
            n: Field::constant(len, s.n),
            m: Field::constant(len, s.m),
            h: Field::constant(len, s.h),
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn point(&self, node: usize) -> PointState {
        PointState::new(self.v[node], self.n[node], self.m[node], self.h[node])
    }

    pub fn gate(&self, gate: GateKind) -> &Field {
        match gate {
            GateKind::N => &self.n,
            GateKind::M => &self.m,
            GateKind::H => &self.h,
        }
    }

    fn fields(&self) -> [&Field; 4] {
        [&self.v, &self.n, &self.m, &self.h]
    }

    fn fields_mut(&mut self) -> [&mut Field; 4] {
        [&mut self.v, &mut self.n, &mut self.m, &mut self.h]
    }
}

/// Values of `(V, n, m, h)` for every neuron at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub neurons: Vec<NeuronState>,
}

impl NetworkState {
    /// Spatially constant state, one `PointState` per neuron.
    pub fn uniform(len: usize, per_neuron: &[PointState]) -> Self {
        NetworkState {
            neurons: per_neuron
                .iter()
                .map(|s| NeuronState::constant(len, *s))
                .collect(),
        }
    }

    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    fn zeros_like(&self) -> Self {
        let len = self.neurons.first().map_or(0, |n| n.len());
        NetworkState::uniform(len, &vec![PointState::default(); self.neurons.len()])
    }

    /// `self = base + scale · delta`, field by field.
    fn set_axpy(&mut self, base: &NetworkState, scale: f64, delta: &NetworkState) {
        for ((out, b), d) in self.neurons.iter_mut().zip(&base.neurons).zip(&delta.neurons) {
            for ((fo, fb), fd) in out.fields_mut().into_iter().zip(b.fields()).zip(d.fields()) {
                for ((o, x), y) in fo.iter_mut().zip(fb.iter()).zip(fd.iter()) {
                    *o = x + scale * y;
                }
            }
        }
    }
}

/// Everything that defines the right-hand side, independent of state.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub model: ModelParams,
    pub spatial: SpatialConfig,
    /// External current `I_i(x)`, one field per neuron.
    pub inputs: Vec<Field>,
    /// `coupling[i][j]` is `α_ij(x)`: strength with which neuron `j` drives neuron `i`.
    pub coupling: Vec<Vec<Field>>,
}

impl NetworkSpec {
    /// Builds a spec and checks dimensions and nonnegativity of the coupling.
    pub fn new(
        model: ModelParams,
        spatial: SpatialConfig,
        inputs: Vec<Field>,
        coupling: Vec<Vec<Field>>,
    ) -> Result<Self> {
        let spec = NetworkSpec {
            model,
            spatial,
            inputs,
            coupling,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Uncoupled network with the given input profiles.
    pub fn uncoupled(model: ModelParams, spatial: SpatialConfig, inputs: Vec<Field>) -> Result<Self> {
        let n = inputs.len();
        let len = spatial.node_count;
        let coupling = vec![vec![Field::zeros(len); n]; n];
        NetworkSpec::new(model, spatial, inputs, coupling)
    }

    pub fn neuron_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.spatial.validate()?;
        let n = self.inputs.len();
        let len = self.spatial.node_count;
        if n == 0 {
            return Err(Error::Config("network needs at least one neuron".into()));
        }
        for (i, input) in self.inputs.iter().enumerate() {
            if input.len() != len {
                return Err(Error::Config(format!(
                    "input profile of neuron {} has {} values for {len} nodes",
                    i + 1,
                    input.len()
                )));
            }
            if input.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config(format!(
                    "input profile of neuron {} is not finite",
                    i + 1
                )));
            }
        }
        if self.coupling.len() != n || self.coupling.iter().any(|row| row.len() != n) {
            return Err(Error::Config(format!(
                "coupling must be a {n}x{n} array of fields"
            )));
        }
        for (i, row) in self.coupling.iter().enumerate() {
            for (j, alpha) in row.iter().enumerate() {
                if alpha.len() != len {
                    return Err(Error::Config(format!(
                        "coupling alpha_{}{} has {} values for {len} nodes",
                        i + 1,
                        j + 1,
                        alpha.len()
                    )));
                }
                if alpha.iter().any(|a| !(*a >= 0.0 && a.is_finite())) {
                    return Err(Error::Config(format!(
                        "coupling strengths must be nonnegative: alpha_{}{} violates it",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest external current seen by each neuron.
    pub fn sup_inputs(&self) -> Vec<f64> {
        self.inputs.iter().map(|f| f.max()).collect()
    }

    fn check_state(&self, state: &NetworkState) -> Result<()> {
        let len = self.spatial.node_count;
        if state.neurons.len() != self.neuron_count() {
            return Err(Error::Domain(format!(
                "state has {} neurons, spec has {}",
                state.neurons.len(),
                self.neuron_count()
            )));
        }
        for (i, nrn) in state.neurons.iter().enumerate() {
            if nrn.fields().iter().any(|f| f.len() != len) {
                return Err(Error::Domain(format!(
                    "state of neuron {} does not match the {len}-node grid",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Nonzero coupling sources `j` for each target `i`.
    fn active_sources(&self) -> Vec<Vec<usize>> {
        self.coupling
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, a)| !a.is_zero())
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub dt: f64,
    pub t_end: f64,
    pub record_stride: usize,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid {
            dt: 0.01,
            t_end: 500.0,
            record_stride: 1,
        }
    }
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "t_end must be nonnegative (got {})",
                self.t_end
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn step_of(&self, t: f64) -> usize {
        (t / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Classical RK4 on the full semi-discrete system.
    Rk4,
    /// Exact gate relaxation half steps around an RK4 voltage step.
    Split,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rk4" => Ok(Scheme::Rk4),
            "split" => Ok(Scheme::Split),
            other => Err(Error::Config(format!(
                "unknown scheme '{other}' (expected rk4 or split)"
            ))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Rk4 => "rk4",
            Scheme::Split => "split",
        })
    }
}

/// Full network state at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub state: NetworkState,
}

/// Minimum or maximum of one field over every node and step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub value: f64,
    pub time: f64,
    pub node: usize,
}

/// Running min/max of `(V, n, m, h)` for one neuron, indexed like [`FIELD_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldExtrema {
    pub min: [Extremum; 4],
    pub max: [Extremum; 4],
}

pub const FIELD_NAMES: [&str; 4] = ["V", "n", "m", "h"];

impl FieldExtrema {
    fn new() -> Self {
        let lo = Extremum {
            value: f64::INFINITY,
            time: 0.0,
            node: 0,
        };
        let hi = Extremum {
            value: f64::NEG_INFINITY,
            ..lo
        };
        FieldExtrema {
            min: [lo; 4],
            max: [hi; 4],
        }
    }

    fn update(&mut self, nrn: &NeuronState, time: f64) {
        for (k, field) in nrn.fields().into_iter().enumerate() {
            for (node, &x) in field.iter().enumerate() {
                if x < self.min[k].value {
                    self.min[k] = Extremum { value: x, time, node };
                }
                if x > self.max[k].value {
                    self.max[k] = Extremum { value: x, time, node };
                }
            }
        }
    }
}

/// Probe time series, snapshots and monitor results of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub neuron_count: usize,
    /// Grid node positions.
    pub positions: Vec<f64>,
    /// Probe node indices.
    pub probes: Vec<usize>,
    pub times: Vec<f64>,
    /// `series[neuron][probe][sample]`.
    pub series: Vec<Vec<Vec<PointState>>>,
    pub snapshots: Vec<Snapshot>,
    /// Whole-field extrema over every integration step, one entry per neuron.
    /// Empty when the record was read back from probe data only.
    pub extrema: Vec<FieldExtrema>,
    pub verdicts: Option<MonitorVerdicts>,
}

impl TrajectoryRecord {
    pub fn probe_position(&self, probe: usize) -> f64 {
        self.positions[self.probes[probe]]
    }

    /// Membrane potential at one probe of one neuron.
    pub fn voltage(&self, neuron: usize, probe: usize) -> Vec<f64> {
        self.series[neuron][probe].iter().map(|s| s.v).collect()
    }

    pub fn snapshot_at(&self, time: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.time - time).abs() < 1e-9)
    }

    /// Probe index closest to position `x`.
    pub fn probe_near(&self, x: f64) -> Option<usize> {
        (0..self.probes.len()).min_by(|&p, &q| {
            let dp = (self.probe_position(p) - x).abs();
            let dq = (self.probe_position(q) - x).abs();
            dp.total_cmp(&dq)
        })
    }
}

/// Reusable buffers for one stepping loop.
struct Workspace {
    sources: Vec<Vec<usize>>,
    spacing: f64,
    k: [NetworkState; 4],
    stage: NetworkState,
}

impl Workspace {
    fn new(spec: &NetworkSpec, state: &NetworkState) -> Self {
        let z = state.zeros_like();
        Workspace {
            sources: spec.active_sources(),
            spacing: spec.spatial.spacing(),
            k: [z.clone(), z.clone(), z.clone(), z.clone()],
            stage: z,
        }
    }
}

/// Evaluates dV/dt for every neuron and, if `with_gates`, the gate rates.
fn eval_rhs(
    spec: &NetworkSpec,
    sources: &[Vec<usize>],
    spacing: f64,
    state: &NetworkState,
    out: &mut NetworkState,
    with_gates: bool,
) {
    let p = &spec.model;
    let d = spec.spatial.diffusion;
    for (i, (nrn, dst)) in state.neurons.iter().zip(out.neurons.iter_mut()).enumerate() {
        laplacian_neumann_into(&nrn.v, spacing, &mut dst.v)
            .expect("dimensions checked before stepping");
        let input = &spec.inputs[i];
        for x in 0..nrn.len() {
            let s = nrn.point(x);
            let mut dv = d * dst.v[x] + reaction_v(p, s, input[x]);
            for &j in &sources[i] {
                let a = spec.coupling[i][j][x];
                dv += a * (p.s_reversal - s.v) * gamma_sigmoid(p, state.neurons[j].v[x]) / p.capacitance;
            }
            dst.v[x] = dv;
            if with_gates {
                for gate in GateKind::ALL {
                    let a = gate.alpha(s.v);
                    let b = gate.beta(s.v);
                    let g = s.gate(gate);
                    let rate = a * (1.0 - g) - b * g;
                    match gate {
                        GateKind::N => dst.n[x] = rate,
                        GateKind::M => dst.m[x] = rate,
                        GateKind::H => dst.h[x] = rate,
                    }
                }
            } else {
                dst.n[x] = 0.0;
                dst.m[x] = 0.0;
                dst.h[x] = 0.0;
            }
        }
    }
}

/// Time derivative of the whole network.
pub fn network_rhs(spec: &NetworkSpec, state: &NetworkState) -> Result<NetworkState> {
    spec.check_state(state)?;
    let mut out = state.zeros_like();
    eval_rhs(
        spec,
        &spec.active_sources(),
        spec.spatial.spacing(),
        state,
        &mut out,
        true,
    );
    Ok(out)
}

/// One classical RK4 stage sequence; `with_gates == false` freezes the gates.
fn rk4_in_place(
    spec: &NetworkSpec,
    ws: &mut Workspace,
    state: &mut NetworkState,
    dt: f64,
    with_gates: bool,
) {
    let Workspace {
        sources,
        spacing,
        k,
        stage,
    } = ws;
    let [k1, k2, k3, k4] = k;
    eval_rhs(spec, sources, *spacing, state, k1, with_gates);
    stage.set_axpy(state, 0.5 * dt, k1);
    eval_rhs(spec, sources, *spacing, stage, k2, with_gates);
    stage.set_axpy(state, 0.5 * dt, k2);
    eval_rhs(spec, sources, *spacing, stage, k3, with_gates);
    stage.set_axpy(state, dt, k3);
    eval_rhs(spec, sources, *spacing, stage, k4, with_gates);

    let w = dt / 6.0;
    for (n, nrn) in state.neurons.iter_mut().enumerate() {
        let parts = [
            k1.neurons[n].fields(),
            k2.neurons[n].fields(),
            k3.neurons[n].fields(),
            k4.neurons[n].fields(),
        ];
        let nf = if with_gates { 4 } else { 1 };
        for (f, field) in nrn.fields_mut().into_iter().enumerate().take(nf) {
            for (x, y) in field.iter_mut().enumerate() {
                *y += w * (parts[0][f][x] + 2.0 * parts[1][f][x] + 2.0 * parts[2][f][x] + parts[3][f][x]);
            }
        }
    }
}

/// Exact solution of `dx/dt = α(v)(1-x) - β(v)x` over `dt` at frozen `v`.
#[inline]
pub fn relax_gate(gate: GateKind, v: f64, x: f64, dt: f64) -> f64 {
    let a = gate.alpha(v);
    let sum = a + gate.beta(v);
    let x_inf = a / sum;
    x_inf + (x - x_inf) * (-dt * sum).exp()
}

/// Advances the gates of one neuron by `dt`, holding its voltage field fixed.
pub fn gate_exact_step(neuron: &mut NeuronState, dt: f64) {
    let NeuronState { v, n, m, h } = neuron;
    for x in 0..v.len() {
        let vx = v[x];
        n[x] = relax_gate(GateKind::N, vx, n[x], dt);
        m[x] = relax_gate(GateKind::M, vx, m[x], dt);
        h[x] = relax_gate(GateKind::H, vx, h[x], dt);
    }
}

fn split_in_place(spec: &NetworkSpec, ws: &mut Workspace, state: &mut NetworkState, dt: f64) {
    for nrn in &mut state.neurons {
        gate_exact_step(nrn, 0.5 * dt);
    }
    rk4_in_place(spec, ws, state, dt, false);
    for nrn in &mut state.neurons {
        gate_exact_step(nrn, 0.5 * dt);
    }
}

fn check_finite(state: &NetworkState, time: f64) -> Result<()> {
    let mut worst: Option<(usize, usize, f64)> = None;
    for (i, nrn) in state.neurons.iter().enumerate() {
        for x in 0..nrn.len() {
            let v = nrn.v[x];
            let gates_ok = nrn.n[x].is_finite() && nrn.m[x].is_finite() && nrn.h[x].is_finite();
            if !(v.abs() <= BLOW_UP_LIMIT) || !gates_ok {
                let score = if v.is_nan() || !gates_ok { f64::INFINITY } else { v.abs() };
                if worst.map_or(true, |(_, _, w)| score > w) {
                    worst = Some((i, x, score));
                }
            }
        }
    }
    match worst {
        None => Ok(()),
        Some((i, x, _)) => Err(Error::BlowUp {
            time,
            neuron: i + 1,
            node: x,
            value: state.neurons[i].v[x],
        }),
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("time step must be positive (got {dt})")))
    }
}

/// One RK4 step of the full system.
pub fn rk4_step(spec: &NetworkSpec, state: &NetworkState, dt: f64) -> Result<NetworkState> {
    check_dt(dt)?;
    spec.check_state(state)?;
    let mut ws = Workspace::new(spec, state);
    let mut next = state.clone();
    rk4_in_place(spec, &mut ws, &mut next, dt, true);
    check_finite(&next, dt)?;
    Ok(next)
}

/// One split step: half gate relaxation, RK4 voltage step, half gate relaxation.
pub fn split_step(spec: &NetworkSpec, state: &NetworkState, dt: f64) -> Result<NetworkState> {
    check_dt(dt)?;
    spec.check_state(state)?;
    let mut ws = Workspace::new(spec, state);
    let mut next = state.clone();
    split_in_place(spec, &mut ws, &mut next, dt);
    check_finite(&next, dt)?;
    Ok(next)
}

fn sample_probes(state: &NetworkState, probes: &[usize], series: &mut [Vec<Vec<PointState>>]) {
    for (nrn, per_probe) in state.neurons.iter().zip(series.iter_mut()) {
        for (p, &node) in probes.iter().enumerate() {
            per_probe[p].push(nrn.point(node));
        }
    }
}

/// Integrates from t = 0 to `tg.t_end`, recording probes every
/// `record_stride` steps and full snapshots at the steps nearest the
/// requested times. Monitor verdicts are attached to the result.
pub fn simulate(
    spec: &NetworkSpec,
    init: &NetworkState,
    tg: &TimeGrid,
    scheme: Scheme,
    probes: &[usize],
    snapshot_times: &[f64],
) -> Result<TrajectoryRecord> {
    spec.validate()?;
    tg.validate()?;
    spec.check_state(init)
        .map_err(|e| Error::Config(format!("initial state: {e}")))?;
    let len = spec.spatial.node_count;
    if let Some(bad) = probes.iter().find(|&&p| p >= len) {
        return Err(Error::Config(format!(
            "probe node {bad} out of range for {len} nodes"
        )));
    }
    let steps = tg.steps();
    let mut snap_steps: Vec<(usize, f64)> = Vec::with_capacity(snapshot_times.len());
    for &t in snapshot_times {
        if !(t >= 0.0) || tg.step_of(t) > steps {
            return Err(Error::Config(format!(
                "snapshot time {t} outside [0, {}]",
                tg.t_end
            )));
        }
        let k = tg.step_of(t);
        if !snap_steps.iter().any(|(s, _)| *s == k) {
            snap_steps.push((k, k as f64 * tg.dt));
        }
    }
    snap_steps.sort_by_key(|(k, _)| *k);

    let n = spec.neuron_count();
    let mut record = TrajectoryRecord {
        neuron_count: n,
        positions: build_grid(&spec.spatial)?,
        probes: probes.to_vec(),
        times: Vec::with_capacity(steps / tg.record_stride + 1),
        series: vec![vec![Vec::new(); probes.len()]; n],
        snapshots: Vec::with_capacity(snap_steps.len()),
        extrema: vec![FieldExtrema::new(); n],
        verdicts: None,
    };

    let mut state = init.clone();
    let mut ws = Workspace::new(spec, &state);
    let mut next_snap = 0;
    for k in 0..=steps {
        let t = k as f64 * tg.dt;
        if k > 0 {
            match scheme {
                Scheme::Rk4 => rk4_in_place(spec, &mut ws, &mut state, tg.dt, true),
                Scheme::Split => split_in_place(spec, &mut ws, &mut state, tg.dt),
            }
            check_finite(&state, t)?;
        }
        for (ext, nrn) in record.extrema.iter_mut().zip(&state.neurons) {
            ext.update(nrn, t);
        }
        if k % tg.record_stride == 0 {
            record.times.push(t);
            sample_probes(&state, probes, &mut record.series);
        }
        while next_snap < snap_steps.len() && snap_steps[next_snap].0 == k {
            record.snapshots.push(Snapshot {
                time: snap_steps[next_snap].1,
                state: state.clone(),
            });
            next_snap += 1;
        }
    }

    let gate_tol = match scheme {
        Scheme::Split => 0.0,
        Scheme::Rk4 => monitors::RK4_GATE_TOLERANCE,
    };
    record.verdicts = Some(monitors::run_monitors(spec, &record, gate_tol));
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{sample_step_profile, Side, StepProfile};
    use crate::model::gate_steady;
    use proptest::prelude::*;

    fn small_spatial(n: usize) -> SpatialConfig {
        SpatialConfig {
            node_count: n,
            ..Default::default()
        }
    }

    fn steady_point(v: f64) -> PointState {
        PointState::new(
            v,
            gate_steady(GateKind::N, v).unwrap().0,
            gate_steady(GateKind::M, v).unwrap().0,
            gate_steady(GateKind::H, v).unwrap().0,
        )
    }

    // Bisection on the resting current balance with gates at steady state.
    fn resting_potential() -> f64 {
        let p = ModelParams::default();
        let f = |v: f64| reaction_v(&p, steady_point(v), 0.0);
        let (mut lo, mut hi) = (-10.0, 10.0);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn single(input: f64, n: usize) -> NetworkSpec {
        NetworkSpec::uncoupled(
            ModelParams::default(),
            small_spatial(n),
            vec![Field::constant(n, input)],
        )
        .unwrap()
    }

    #[test]
    fn rhs_zero_at_leak_reversal() {
        let spec = single(0.0, 11);
        let s = PointState::new(10.6, 0.0, 0.0, 1.0);
        let state = NetworkState::uniform(11, &[s]);
        let d = network_rhs(&spec, &state).unwrap();
        let nrn = &d.neurons[0];
        assert!(nrn.v.iter().all(|x| *x == 0.0));
        for g in GateKind::ALL {
            let expected = crate::model::reaction_gate(g, 10.6, s.gate(g));
            assert!(nrn.gate(g).iter().all(|x| *x == expected));
        }
    }

    #[test]
    fn rhs_vanishes_at_rest() {
        let v_star = resting_potential();
        assert!(v_star.abs() < 0.2, "v* = {v_star}");
        let spec = single(0.0, 11);
        let state = NetworkState::uniform(11, &[steady_point(v_star)]);
        let d = network_rhs(&spec, &state).unwrap();
        for f in d.neurons[0].fields() {
            assert!(f.iter().all(|x| x.abs() < 1e-10));
        }
    }

    #[test]
    fn rhs_rejects_mismatched_state() {
        let spec = single(0.0, 11);
        let state = NetworkState::uniform(12, &[PointState::default()]);
        assert!(matches!(network_rhs(&spec, &state), Err(Error::Domain(_))));
        let two = NetworkState::uniform(11, &[PointState::default(); 2]);
        assert!(network_rhs(&spec, &two).is_err());
    }

    #[test]
    fn feed_forward_source_unaffected_by_target() {
        let sp = SpatialConfig::default();
        let grid = build_grid(&sp).unwrap();
        let i1 = sample_step_profile(&StepProfile::new(130.0, 0.0, 0.1, Side::Left), &grid);
        let a21 = sample_step_profile(&StepProfile::new(1.0, 0.0, 0.1, Side::Right), &grid);
        let z = Field::zeros(101);
        let spec = NetworkSpec::new(
            ModelParams::default(),
            sp,
            vec![i1, z.clone()],
            vec![vec![z.clone(), z.clone()], vec![a21, z]],
        )
        .unwrap();
        let a = NetworkState::uniform(101, &[PointState::new(80.0, 0.3, 0.4, 0.5), PointState::new(1.0, 1.0, 1.0, 1.0)]);
        let mut b = a.clone();
        b.neurons[1] = NeuronState::constant(101, PointState::new(-5.0, 0.1, 0.2, 0.9));
        let da = network_rhs(&spec, &a).unwrap();
        let db = network_rhs(&spec, &b).unwrap();
        assert_eq!(da.neurons[0], db.neurons[0]);
        assert_ne!(da.neurons[1], db.neurons[1]);
    }

    #[test]
    fn rhs_includes_coupling_input() {
        let sp = small_spatial(5);
        let z = Field::zeros(5);
        let spec = NetworkSpec::new(
            ModelParams::default(),
            sp,
            vec![z.clone(), z.clone()],
            vec![vec![z.clone(), z.clone()], vec![Field::constant(5, 1.0), z.clone()]],
        )
        .unwrap();
        let src = PointState::new(60.0, 0.0, 0.0, 1.0);
        let dst = PointState::new(10.6, 0.0, 0.0, 1.0);
        let d = network_rhs(&spec, &NetworkState::uniform(5, &[src, dst])).unwrap();
        // (S - 10.6) · Γ(60) = 89.4 · 0.5
        for v in d.neurons[1].v.iter() {
            assert!((v - 44.7).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_coupling_rejected() {
        let sp = small_spatial(5);
        let z = Field::zeros(5);
        let r = NetworkSpec::new(
            ModelParams::default(),
            sp,
            vec![z.clone()],
            vec![vec![Field::constant(5, -0.5)]],
        );
        match r {
            Err(Error::Config(msg)) => assert!(msg.contains("nonnegative")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn steppers_keep_equilibrium() {
        let v_star = resting_potential();
        let spec = single(0.0, 7);
        let state = NetworkState::uniform(7, &[steady_point(v_star)]);
        let a = rk4_step(&spec, &state, 0.01).unwrap();
        let b = split_step(&spec, &state, 0.01).unwrap();
        for next in [&a, &b] {
            for (f0, f1) in state.neurons[0].fields().iter().zip(next.neurons[0].fields()) {
                for (x0, x1) in f0.iter().zip(f1.iter()) {
                    assert!((x0 - x1).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rk4_deterministic() {
        let spec = single(10.0, 9);
        let state = NetworkState::uniform(9, &[PointState::new(1.0, 1.0, 1.0, 1.0)]);
        let a = rk4_step(&spec, &state, 0.01).unwrap();
        let b = rk4_step(&spec, &state, 0.01).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rk4_reports_blow_up() {
        let spec = single(0.0, 5);
        let mut state = NetworkState::uniform(5, &[PointState::new(0.0, 0.3, 0.05, 0.6)]);
        state.neurons[0].v[3] = 2e4;
        match rk4_step(&spec, &state, 0.01) {
            Err(Error::BlowUp { node, neuron, .. }) => {
                assert_eq!(neuron, 1);
                assert_eq!(node, 3);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
        assert!(rk4_step(&spec, &state, 0.0).is_err());
    }

    #[test]
    fn gate_exact_step_examples() {
        let v = 0.0;
        let (n_inf, _) = gate_steady(GateKind::N, v).unwrap();
        assert_eq!(relax_gate(GateKind::N, v, n_inf, 0.7), n_inf);
        for g in GateKind::ALL {
            let (x_inf, _) = gate_steady(g, 37.0).unwrap();
            assert!((relax_gate(g, 37.0, 0.9, 1e6) - x_inf).abs() < 1e-12);
        }
        // n(1) = n_inf + (1 - n_inf) exp(-(alpha_n(0) + beta_n(0)))
        let e = std::f64::consts::E;
        let an = 0.1 / (e - 1.0);
        let bn = 0.125;
        let n_inf0 = an / (an + bn);
        let expected = n_inf0 + (1.0 - n_inf0) * (-(an + bn)).exp();
        assert!((relax_gate(GateKind::N, 0.0, 1.0, 1.0) - expected).abs() < 1e-12);

        let mut nrn = NeuronState::constant(4, PointState::new(0.0, 1.0, 1.0, 1.0));
        gate_exact_step(&mut nrn, 1.0);
        assert!(nrn.n.iter().all(|x| (x - expected).abs() < 1e-12));
        assert_eq!(nrn.v, Field::constant(4, 0.0));
    }

    #[test]
    fn simulate_zero_horizon() {
        let spec = single(0.0, 5);
        let init = NetworkState::uniform(5, &[PointState::new(1.0, 1.0, 1.0, 1.0)]);
        let tg = TimeGrid { t_end: 0.0, ..Default::default() };
        let r = simulate(&spec, &init, &tg, Scheme::Rk4, &[0, 4], &[0.0]).unwrap();
        assert_eq!(r.times, vec![0.0]);
        assert_eq!(r.series[0][1], vec![PointState::new(1.0, 1.0, 1.0, 1.0)]);
        assert_eq!(r.snapshots.len(), 1);
        assert_eq!(r.snapshots[0].state, init);
    }

    #[test]
    fn simulate_rejects_bad_probe_and_snapshot() {
        let spec = single(0.0, 5);
        let init = NetworkState::uniform(5, &[PointState::default()]);
        let tg = TimeGrid { t_end: 1.0, ..Default::default() };
        assert!(matches!(
            simulate(&spec, &init, &tg, Scheme::Rk4, &[5], &[]),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            simulate(&spec, &init, &tg, Scheme::Rk4, &[0], &[2.0]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn record_stride_controls_sampling() {
        let spec = single(0.0, 5);
        let init = NetworkState::uniform(5, &[steady_point(0.0)]);
        let tg = TimeGrid { dt: 0.01, t_end: 1.0, record_stride: 10 };
        let r = simulate(&spec, &init, &tg, Scheme::Split, &[2], &[0.5]).unwrap();
        assert_eq!(r.times.len(), 11);
        assert_eq!(r.series[0][0].len(), 11);
        assert!((r.times[10] - 1.0).abs() < 1e-12);
        assert!((r.snapshots[0].time - 0.5).abs() < 1e-12);
    }

    #[test]
    fn symmetric_problem_stays_symmetric() {
        let n = 41;
        let sp = small_spatial(n);
        let grid = build_grid(&sp).unwrap();
        let input: Field = grid
            .iter()
            .map(|x| if (x - 50.0).abs() < 10.0 { 20.0 } else { 0.0 })
            .collect::<Vec<_>>()
            .into();
        let spec = NetworkSpec::uncoupled(ModelParams::default(), sp, vec![input]).unwrap();
        let init = NetworkState::uniform(n, &[PointState::new(1.0, 1.0, 1.0, 1.0)]);
        let tg = TimeGrid { t_end: 100.0, ..Default::default() };
        let r = simulate(&spec, &init, &tg, Scheme::Rk4, &[0], &[100.0]).unwrap();
        let s = &r.snapshots[0].state.neurons[0];
        for f in s.fields() {
            for i in 0..n {
                assert!((f[i] - f[n - 1 - i]).abs() < 1e-8);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_gate_relaxation_stays_in_unit_interval(
            v in -100.0f64..400.0, x in 0.0f64..=1.0, dt in 0.0f64..50.0,
        ) {
            for g in GateKind::ALL {
                let y = relax_gate(g, v, x, dt);
                prop_assert!((0.0..=1.0).contains(&y));
            }
        }

        #[test]
        fn split_step_traps_gates(
            vs in proptest::collection::vec(-50.0f64..300.0, 5),
            gs in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0), 5),
        ) {
            let spec = single(50.0, 5);
            let mut state = NetworkState::uniform(5, &[PointState::default()]);
            let nrn = &mut state.neurons[0];
            for i in 0..5 {
                nrn.v[i] = vs[i];
                nrn.n[i] = gs[i].0;
                nrn.m[i] = gs[i].1;
                nrn.h[i] = gs[i].2;
            }
            let next = split_step(&spec, &state, 0.01).unwrap();
            for g in GateKind::ALL {
                prop_assert!(next.neurons[0].gate(g).iter().all(|x| (0.0..=1.0).contains(x)));
            }
        }
    }
}
