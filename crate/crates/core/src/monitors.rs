//! Runtime checks of the invariant region, spike and burst detection, and
//! regime classification of recorded trajectories.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::Field;
use crate::integrator::{
    simulate, NetworkSpec, NetworkState, Scheme, TimeGrid, TrajectoryRecord, FIELD_NAMES,
};
use crate::model::ModelParams;

/// Allowed gate overshoot outside [0, 1] for the RK4 scheme.
pub const RK4_GATE_TOLERANCE: f64 = 1e-6;
/// Allowed voltage overshoot (mV) outside the invariant region.
pub const VOLTAGE_TOLERANCE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundDerivation {
    /// `[e_k, e_na]`, valid when `g_l (e_na - e_l) > sup I`.
    ReversalPotentials,
    /// `[e_k, sup I / g_l + e_l]`, valid for any bounded nonnegative input.
    LeakDominated,
}

impl fmt::Display for BoundDerivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundDerivation::ReversalPotentials => "reversal",
            BoundDerivation::LeakDominated => "leak",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBounds {
    pub v_lo: f64,
    pub v_hi: f64,
    pub derivation: BoundDerivation,
}

/// Voltage interval that trajectories starting inside never leave.
pub fn region_bounds(p: &ModelParams, sup_i: f64) -> RegionBounds {
    if p.g_l * (p.e_na - p.e_l) > sup_i {
        RegionBounds {
            v_lo: p.e_k,
            v_hi: p.e_na,
            derivation: BoundDerivation::ReversalPotentials,
        }
    } else {
        RegionBounds {
            v_lo: p.e_k,
            v_hi: sup_i / p.g_l + p.e_l,
            derivation: BoundDerivation::LeakDominated,
        }
    }
}

/// Location of the most extreme value seen by a check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offender {
    pub time: f64,
    /// 1-based neuron index.
    pub neuron: usize,
    pub node: usize,
    pub field: &'static str,
    pub value: f64,
    /// Distance outside the allowed interval; zero or negative when inside.
    pub excess: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub passed: bool,
    pub tolerance: f64,
    pub worst: Option<Offender>,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.passed { "pass" } else { "fail" })?;
        if let Some(w) = self.worst {
            write!(
                f,
                " (worst {}{}={} at t={}, node {}, excess {:e})",
                w.field, w.neuron, w.value, w.time, w.node, w.excess
            )?;
        }
        Ok(())
    }
}

struct Scan {
    tol: f64,
    worst: Option<Offender>,
}

impl Scan {
    fn new(tol: f64) -> Self {
        Scan { tol, worst: None }
    }

    #[allow(clippy::too_many_arguments)]
    fn visit(&mut self, lo: f64, hi: f64, value: f64, time: f64, neuron: usize, node: usize, field: &'static str) {
        let excess = if value.is_nan() {
            f64::INFINITY
        } else {
            (lo - value).max(value - hi)
        };
        if self.worst.map_or(true, |w| excess > w.excess) {
            self.worst = Some(Offender {
                time,
                neuron: neuron + 1,
                node,
                field,
                value,
                excess,
            });
        }
    }

    fn verdict(self) -> Verdict {
        Verdict {
            passed: self.worst.map_or(true, |w| w.excess <= self.tol),
            tolerance: self.tol,
            worst: self.worst,
        }
    }
}

/// Visits every recorded value of field `k` (0 = V, 1..=3 = gates) for the
/// neurons selected by `neurons`, with that neuron's `[lo, hi]`.
fn scan_field(record: &TrajectoryRecord, k: usize, limits: &dyn Fn(usize) -> Option<(f64, f64)>, scan: &mut Scan) {
    let name = FIELD_NAMES[k];
    for neuron in 0..record.neuron_count {
        let Some((lo, hi)) = limits(neuron) else { continue };
        if let Some(ext) = record.extrema.get(neuron) {
            let (mn, mx) = (ext.min[k], ext.max[k]);
            scan.visit(lo, hi, mn.value, mn.time, neuron, mn.node, name);
            scan.visit(lo, hi, mx.value, mx.time, neuron, mx.node, name);
        }
        for (p, samples) in record.series[neuron].iter().enumerate() {
            let node = record.probes[p];
            for (s, t) in samples.iter().zip(&record.times) {
                let value = [s.v, s.n, s.m, s.h][k];
                scan.visit(lo, hi, value, *t, neuron, node, name);
            }
        }
        for snap in &record.snapshots {
            let nrn = &snap.state.neurons[neuron];
            let field: &Field = [&nrn.v, &nrn.n, &nrn.m, &nrn.h][k];
            for (node, value) in field.iter().enumerate() {
                scan.visit(lo, hi, *value, snap.time, neuron, node, name);
            }
        }
    }
}

/// Passes iff every recorded gate value lies in `[-tol, 1 + tol]`.
pub fn check_gate_bounds(record: &TrajectoryRecord, tol: f64) -> Verdict {
    let mut scan = Scan::new(tol);
    for k in 1..4 {
        scan_field(record, k, &|_| Some((0.0, 1.0)), &mut scan);
    }
    scan.verdict()
}

/// Passes iff every recorded potential lies in `[v_lo - tol, v_hi + tol]`.
pub fn check_voltage_region(record: &TrajectoryRecord, bounds: &RegionBounds, tol: f64) -> Verdict {
    let mut scan = Scan::new(tol);
    scan_field(record, 0, &|_| Some((bounds.v_lo, bounds.v_hi)), &mut scan);
    scan.verdict()
}

/// Like [`check_voltage_region`] with separate bounds for each neuron.
pub fn check_voltage_region_per_neuron(record: &TrajectoryRecord, bounds: &[RegionBounds], tol: f64) -> Verdict {
    let mut scan = Scan::new(tol);
    scan_field(record, 0, &|i| bounds.get(i).map(|b| (b.v_lo, b.v_hi)), &mut scan);
    scan.verdict()
}

/// Invariant-region checks attached to every simulated record.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorVerdicts {
    pub gates: Verdict,
    pub voltage: Verdict,
    /// Per-neuron voltage bounds used for `voltage`.
    pub bounds: Vec<RegionBounds>,
}

impl MonitorVerdicts {
    pub fn passed(&self) -> bool {
        self.gates.passed && self.voltage.passed
    }
}

pub fn run_monitors(spec: &NetworkSpec, record: &TrajectoryRecord, gate_tol: f64) -> MonitorVerdicts {
    let bounds: Vec<RegionBounds> = spec
        .sup_inputs()
        .into_iter()
        .map(|s| region_bounds(&spec.model, s.max(0.0)))
        .collect();
    MonitorVerdicts {
        gates: check_gate_bounds(record, gate_tol),
        voltage: check_voltage_region_per_neuron(record, &bounds, VOLTAGE_TOLERANCE),
        bounds,
    }
}

/// Spike times at one probe, detected by threshold crossing with hysteresis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrain {
    pub times: Vec<f64>,
    pub threshold: f64,
    pub reset: f64,
}

impl SpikeTrain {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn intervals(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Spikes with `t0 <= t <= t1`.
    pub fn within(&self, t0: f64, t1: f64) -> SpikeTrain {
        SpikeTrain {
            times: self.times.iter().copied().filter(|t| *t >= t0 && *t <= t1).collect(),
            ..*self
        }
    }
}

/// One spike per upward crossing of `threshold`; the detector re-arms only
/// after the signal drops below `reset`. Crossing times are linearly
/// interpolated between samples.
pub fn detect_spikes(times: &[f64], values: &[f64], threshold: f64, reset: f64) -> Result<SpikeTrain> {
    if !(reset < threshold) {
        return Err(Error::Domain(format!(
            "spike reset {reset} must be below threshold {threshold}"
        )));
    }
    if times.len() != values.len() {
        return Err(Error::Domain("time and value series differ in length".into()));
    }
    let mut spikes = Vec::new();
    let mut armed = true;
    for k in 1..values.len() {
        let (v0, v1) = (values[k - 1], values[k]);
        if armed && v0 < threshold && v1 >= threshold {
            let frac = (threshold - v0) / (v1 - v0);
            spikes.push(times[k - 1] + frac * (times[k] - times[k - 1]));
            armed = false;
        }
        if !armed && v1 < reset {
            armed = true;
        }
    }
    Ok(SpikeTrain {
        times: spikes,
        threshold,
        reset,
    })
}

fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Consecutive spikes separated by ordinary intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct BurstSegment {
    pub spikes: Vec<f64>,
}

impl BurstSegment {
    pub fn first(&self) -> f64 {
        self.spikes[0]
    }

    pub fn last(&self) -> f64 {
        *self.spikes.last().expect("segments are never empty")
    }

    pub fn len(&self) -> usize {
        self.spikes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spikes.is_empty()
    }
}

/// Splits a train wherever an interval exceeds `gap_factor` times the median interval.
pub fn detect_bursts(train: &SpikeTrain, gap_factor: f64) -> Result<Vec<BurstSegment>> {
    if !(gap_factor > 1.0) {
        return Err(Error::Domain(format!("gap factor must exceed 1 (got {gap_factor})")));
    }
    let Some(&first) = train.times.first() else {
        return Ok(Vec::new());
    };
    let isi = train.intervals();
    let Some(med) = median(&isi) else {
        return Ok(vec![BurstSegment { spikes: vec![first] }]);
    };
    let mut segments = vec![BurstSegment { spikes: vec![first] }];
    for (gap, t) in isi.iter().zip(&train.times[1..]) {
        if *gap > gap_factor * med {
            segments.push(BurstSegment { spikes: vec![*t] });
        } else {
            segments.last_mut().expect("nonempty").spikes.push(*t);
        }
    }
    Ok(segments)
}

/// Local maxima of a sampled signal over `[t0, t1]`, split into a low band
/// (`< small_below`) and a high band (`> large_above`).
#[derive(Debug, Clone, PartialEq)]
pub struct MixedModeStat {
    pub small_below: f64,
    pub large_above: f64,
    pub small: usize,
    pub large: usize,
    pub total_maxima: usize,
}

impl MixedModeStat {
    /// Both amplitude bands are populated.
    pub fn passed(&self) -> bool {
        self.small > 0 && self.large > 0
    }
}

pub const MMO_SMALL_BELOW: f64 = 40.0;
pub const MMO_LARGE_ABOVE: f64 = 80.0;

pub fn mixed_mode_statistic(times: &[f64], values: &[f64], window: (f64, f64), small_below: f64, large_above: f64) -> MixedModeStat {
    let mut stat = MixedModeStat {
        small_below,
        large_above,
        small: 0,
        large: 0,
        total_maxima: 0,
    };
    for k in 1..values.len().saturating_sub(1) {
        let t = times[k];
        if t < window.0 || t > window.1 {
            continue;
        }
        let v = values[k];
        if v > values[k - 1] && v >= values[k + 1] {
            stat.total_maxima += 1;
            if v < small_below {
                stat.small += 1;
            } else if v > large_above {
                stat.large += 1;
            }
        }
    }
    stat
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Stationary,
    Periodic,
    Bursting,
    DeathSpot,
    Unresolved,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Stationary => "stationary",
            Regime::Periodic => "periodic",
            Regime::Bursting => "bursting",
            Regime::DeathSpot => "death_spot",
            Regime::Unresolved => "unresolved",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "stationary" => Regime::Stationary,
            "periodic" => Regime::Periodic,
            "bursting" => Regime::Bursting,
            "death_spot" => Regime::DeathSpot,
            "unresolved" => Regime::Unresolved,
            other => return Err(Error::Domain(format!("unknown regime label '{other}'"))),
        })
    }
}

/// Thresholds used by [`classify_regime`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub window_start: f64,
    pub window_end: f64,
    pub spike_threshold: f64,
    pub spike_reset: f64,
    /// Peak-to-peak amplitude (mV) below which a probe counts as quiet.
    pub quiet_amplitude: f64,
    /// Largest coefficient of variation of interspike intervals for periodic.
    pub periodic_cv: f64,
    pub burst_gap_factor: f64,
    /// Far-probe burst segments needed for a bursting label.
    pub min_bursts: usize,
    /// Near-probe spikes needed for a death-spot label.
    pub death_spot_min_spikes: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig {
            window_start: 250.0,
            window_end: 500.0,
            spike_threshold: 25.0,
            spike_reset: 20.0,
            quiet_amplitude: 1.0,
            periodic_cv: 0.1,
            burst_gap_factor: 1.5,
            min_bursts: 2,
            death_spot_min_spikes: 5,
        }
    }
}

impl ClassifierConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.window_end > self.window_start) {
            return Err(Error::Config("classifier window must have positive length".into()));
        }
        if !(self.spike_reset < self.spike_threshold) {
            return Err(Error::Config("spike_reset must be below spike_threshold".into()));
        }
        if !(self.burst_gap_factor > 1.0) {
            return Err(Error::Config("burst_gap_factor must exceed 1".into()));
        }
        Ok(())
    }
}

/// Statistics of one probe inside the analysis window.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeStats {
    pub position: f64,
    pub spikes: SpikeTrain,
    pub bursts: Vec<BurstSegment>,
    /// Coefficient of variation of interspike intervals (NaN with < 2 intervals).
    pub isi_cv: f64,
    /// Peak-to-peak V in the window.
    pub amplitude: f64,
}

impl ProbeStats {
    pub fn spike_count(&self) -> usize {
        self.spikes.len()
    }

    pub fn burst_count(&self) -> usize {
        self.bursts.len()
    }
}

/// Regime of one neuron, judged from its probes at the two domain ends.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeLabel {
    pub label: Regime,
    pub near: ProbeStats,
    pub far: ProbeStats,
}

fn coefficient_of_variation(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

/// Window statistics for a single probe series.
pub fn probe_stats(times: &[f64], values: &[f64], position: f64, cfg: &ClassifierConfig) -> Result<ProbeStats> {
    let (t0, t1) = (cfg.window_start, cfg.window_end);
    let train = detect_spikes(times, values, cfg.spike_threshold, cfg.spike_reset)?.within(t0, t1);
    let bursts = detect_bursts(&train, cfg.burst_gap_factor)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (t, v) in times.iter().zip(values) {
        if *t >= t0 && *t <= t1 {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
    }
    Ok(ProbeStats {
        position,
        isi_cv: coefficient_of_variation(&train.intervals()),
        spikes: train,
        bursts,
        amplitude: hi - lo,
    })
}

/// Applies the regime rules to the near (x = a) and far (x = b) probe statistics.
pub fn label_from_stats(near: &ProbeStats, far: &ProbeStats, cfg: &ClassifierConfig) -> Regime {
    let quiet = |p: &ProbeStats| p.spike_count() == 0 && p.amplitude < cfg.quiet_amplitude;
    let regular = |p: &ProbeStats| p.spike_count() >= 2 && p.isi_cv < cfg.periodic_cv && p.burst_count() <= 1;
    if quiet(near) && quiet(far) {
        Regime::Stationary
    } else if near.spike_count() >= cfg.death_spot_min_spikes && quiet(far) {
        Regime::DeathSpot
    } else if far.burst_count() >= cfg.min_bursts {
        Regime::Bursting
    } else if regular(near) && regular(far) {
        Regime::Periodic
    } else {
        Regime::Unresolved
    }
}

/// Classifies each neuron of a record from its probes nearest x = a and x = b.
pub fn classify_regime(record: &TrajectoryRecord, cfg: &ClassifierConfig) -> Result<Vec<RegimeLabel>> {
    cfg.validate()?;
    let (Some(&first), Some(&last)) = (record.times.first(), record.times.last()) else {
        return Err(Error::Domain("record holds no samples".into()));
    };
    if cfg.window_start < first - 1e-9 || cfg.window_end > last + 1e-9 {
        return Err(Error::Domain(format!(
            "analysis window [{}, {}] outside record span [{first}, {last}]",
            cfg.window_start, cfg.window_end
        )));
    }
    if record.probes.len() < 2 {
        return Err(Error::Domain("classification needs probes at both domain ends".into()));
    }
    let a = record.positions.first().copied().unwrap_or(0.0);
    let b = record.positions.last().copied().unwrap_or(0.0);
    let near = record.probe_near(a).expect("probes present");
    let far = record.probe_near(b).expect("probes present");
    if near == far {
        return Err(Error::Domain("near and far probes coincide".into()));
    }
    (0..record.neuron_count)
        .map(|i| {
            let near_stats = probe_stats(&record.times, &record.voltage(i, near), record.probe_position(near), cfg)?;
            let far_stats = probe_stats(&record.times, &record.voltage(i, far), record.probe_position(far), cfg)?;
            Ok(RegimeLabel {
                label: label_from_stats(&near_stats, &far_stats, cfg),
                near: near_stats,
                far: far_stats,
            })
        })
        .collect()
}

/// What a bifurcation sweep varies: `I_i(x) = I0 · shape(x)` for one neuron.
#[derive(Debug, Clone)]
pub struct SweepTemplate {
    pub spec: NetworkSpec,
    pub neuron: usize,
    pub shape: Field,
    pub time: TimeGrid,
    pub scheme: Scheme,
    pub probes: Vec<usize>,
    pub classifier: ClassifierConfig,
}

impl SweepTemplate {
    pub fn spec_for(&self, i0: f64) -> Result<NetworkSpec> {
        let mut spec = self.spec.clone();
        let input = spec
            .inputs
            .get_mut(self.neuron)
            .ok_or_else(|| Error::Config(format!("sweep neuron {} not in network", self.neuron + 1)))?;
        *input = Field(self.shape.iter().map(|s| i0 * s).collect());
        spec.validate()?;
        Ok(spec)
    }

    /// Simulates at drive `i0` and returns the label of the swept neuron.
    pub fn label_at(&self, i0: f64, init: &NetworkState) -> Result<Regime> {
        let spec = self.spec_for(i0)?;
        let record = simulate(&spec, init, &self.time, self.scheme, &self.probes, &[])?;
        let labels = classify_regime(&record, &self.classifier)?;
        Ok(labels[self.neuron].label)
    }
}

/// Result of a stationary/periodic bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub lo_label: Regime,
    pub hi_label: Regime,
    /// Number of simulations run, endpoints included.
    pub evaluations: usize,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Bisects on the drive amplitude between a stationary `lo` and a periodic `hi`
/// until the bracket is no wider than `width`.
///
/// A midpoint that is neither stationary nor periodic ends the sweep with a
/// bracket error naming it.
pub fn sweep_bifurcation(template: &SweepTemplate, lo: f64, hi: f64, init: &NetworkState, width: f64) -> Result<Bracket> {
    if !(hi > lo) || !(width > 0.0) {
        return Err(Error::Config(format!(
            "sweep needs lo < hi and a positive width (got lo={lo}, hi={hi}, width={width})"
        )));
    }
    let lo_label = template.label_at(lo, init)?;
    let hi_label = template.label_at(hi, init)?;
    if lo_label != Regime::Stationary || hi_label != Regime::Periodic {
        return Err(Error::Bracket {
            lo,
            hi,
            lo_label: lo_label.to_string(),
            hi_label: hi_label.to_string(),
        });
    }
    let mut b = Bracket {
        lo,
        hi,
        lo_label,
        hi_label,
        evaluations: 2,
    };
    // Relative slack so that a width reached up to round-off counts as reached.
    while b.width() > width * (1.0 + 1e-9) {
        let mid = 0.5 * (b.lo + b.hi);
        let label = template.label_at(mid, init)?;
        b.evaluations += 1;
        match label {
            Regime::Stationary => b.lo = mid,
            Regime::Periodic => b.hi = mid,
            other => {
                return Err(Error::Bracket {
                    lo: b.lo,
                    hi: mid,
                    lo_label: Regime::Stationary.to_string(),
                    hi_label: other.to_string(),
                })
            }
        }
    }
    Ok(b)
}

/// Follows one wave front across a chain of probes.
///
/// `trains[0]` must contain `start`; at each following probe the spike
/// closest in time to the previous arrival, within `max_step`, is taken.
/// Returns the arrival time at every probe, or `None` if the front is lost.
pub fn trace_front(trains: &[SpikeTrain], start: f64, max_step: f64) -> Option<Vec<f64>> {
    let mut arrivals = vec![start];
    let mut t = start;
    for train in &trains[1..] {
        let next = train
            .times
            .iter()
            .copied()
            .filter(|s| (s - t).abs() <= max_step)
            .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()))?;
        arrivals.push(next);
        t = next;
    }
    Some(arrivals)
}

#[cfg(test)]
mod tests {

    #[test]
    fn front_tracing() {
        let train = |ts: &[f64]| SpikeTrain { times: ts.to_vec(), threshold: 60.0, reset: 30.0 };
        let trains = [train(&[10.0, 30.0]), train(&[14.0, 34.0]), train(&[18.0, 38.0])];
        assert_eq!(trace_front(&trains, 30.0, 5.0), Some(vec![30.0, 34.0, 38.0]));
        assert_eq!(trace_front(&trains, 10.0, 3.0), None);
        let back = [train(&[20.0]), train(&[16.0]), train(&[12.0])];
        assert_eq!(trace_front(&back, 20.0, 5.0), Some(vec![20.0, 16.0, 12.0]));
    }
    use super::*;
    use crate::integrator::{Extremum, FieldExtrema, Snapshot};
    use crate::model::PointState;
    use proptest::prelude::*;

    #[test]
    fn region_bounds_examples() {
        let p = ModelParams::default();
        let b = region_bounds(&p, 5.3);
        assert_eq!((b.v_lo, b.v_hi, b.derivation), (-12.0, 120.0, BoundDerivation::ReversalPotentials));
        let b = region_bounds(&p, 130.0);
        assert_eq!(b.derivation, BoundDerivation::LeakDominated);
        assert!((b.v_hi - (130.0 / 0.3 + 10.6)).abs() < 1e-12);
        assert!((b.v_hi - 443.9333).abs() < 1e-3);
        let b = region_bounds(&p, 0.0);
        assert_eq!((b.v_lo, b.v_hi), (-12.0, 120.0));
    }

    fn synthetic(values: &[PointState]) -> TrajectoryRecord {
        TrajectoryRecord {
            neuron_count: 1,
            positions: vec![0.0, 1.0, 2.0],
            probes: vec![1],
            times: (0..values.len()).map(|k| k as f64).collect(),
            series: vec![vec![values.to_vec()]],
            snapshots: vec![],
            extrema: vec![],
            verdicts: None,
        }
    }

    #[test]
    fn gate_check_locates_violation() {
        let ok = PointState::new(0.0, 0.5, 0.5, 0.5);
        let bad = PointState::new(0.0, 1.01, 0.5, 0.5);
        let r = synthetic(&[ok, ok, bad, ok]);
        let v = check_gate_bounds(&r, 1e-6);
        assert!(!v.passed);
        let w = v.worst.unwrap();
        assert_eq!((w.field, w.time, w.node, w.neuron), ("n", 2.0, 1, 1));
        assert!((w.excess - 0.01).abs() < 1e-12);
        assert!(check_gate_bounds(&synthetic(&[ok, ok]), 0.0).passed);
    }

    #[test]
    fn gate_check_sees_snapshots_and_extrema() {
        let ok = PointState::new(0.0, 0.5, 0.5, 0.5);
        let mut r = synthetic(&[ok]);
        let mut state = NetworkState::uniform(3, &[ok]);
        state.neurons[0].h[2] = -0.2;
        r.snapshots.push(Snapshot { time: 0.0, state });
        let v = check_gate_bounds(&r, 0.0);
        assert!(!v.passed);
        assert_eq!(v.worst.unwrap().node, 2);

        let mut r = synthetic(&[ok]);
        let e = Extremum { value: 0.5, time: 0.0, node: 0 };
        let mut ext = FieldExtrema { min: [e; 4], max: [e; 4] };
        ext.max[2] = Extremum { value: 1.5, time: 3.0, node: 1 };
        r.extrema.push(ext);
        let v = check_gate_bounds(&r, 0.0);
        assert_eq!(v.worst.unwrap().field, "m");
        assert!(!v.passed);
    }

    #[test]
    fn voltage_check() {
        let p = ModelParams::default();
        let b = region_bounds(&p, 5.2);
        let r = synthetic(&[PointState::new(0.0, 0.5, 0.5, 0.5), PointState::new(500.0, 0.5, 0.5, 0.5)]);
        let v = check_voltage_region(&r, &b, 0.1);
        assert!(!v.passed);
        assert_eq!(v.worst.unwrap().value, 500.0);
        let r = synthetic(&[PointState::new(120.05, 0.5, 0.5, 0.5)]);
        assert!(check_voltage_region(&r, &b, 0.1).passed);
    }

    fn pulse_train(centres: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let times: Vec<f64> = (0..=4000).map(|k| k as f64 * 0.01).collect();
        let values = times
            .iter()
            .map(|t| {
                centres
                    .iter()
                    .map(|c| 90.0 * (-((t - c) / 0.5).powi(2)).exp())
                    .fold(0.0, f64::max)
            })
            .collect();
        (times, values)
    }

    #[test]
    fn spike_examples() {
        let times: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let zero = vec![0.0; 100];
        assert!(detect_spikes(&times, &zero, 60.0, 30.0).unwrap().is_empty());

        let ramp: Vec<f64> = (0..=20).map(|k| if k <= 10 { 10.0 * k as f64 } else { 10.0 * (20 - k) as f64 }).collect();
        let t: Vec<f64> = (0..=20).map(|k| k as f64).collect();
        let train = detect_spikes(&t, &ramp, 60.0, 30.0).unwrap();
        assert_eq!(train.times, vec![6.0]);

        // Gaussian pulses peaking at 90: crossing 60 at c - 0.5·sqrt(ln 1.5).
        let (t, v) = pulse_train(&[10.0, 20.0, 30.0]);
        let train = detect_spikes(&t, &v, 60.0, 30.0).unwrap();
        assert_eq!(train.len(), 3);
        let lead = 0.5 * 1.5f64.ln().sqrt();
        for (got, c) in train.times.iter().zip([10.0, 20.0, 30.0]) {
            assert!((got - (c - lead)).abs() < 1e-3, "{got} vs {c}");
        }
        assert!(detect_spikes(&t, &v, 30.0, 60.0).is_err());
    }

    #[test]
    fn hysteresis_suppresses_chatter() {
        let t: Vec<f64> = (0..8).map(|k| k as f64).collect();
        let v = [0.0, 70.0, 50.0, 70.0, 20.0, 70.0, 0.0, 0.0];
        assert_eq!(detect_spikes(&t, &v, 60.0, 30.0).unwrap().len(), 2);
    }

    fn train(times: Vec<f64>) -> SpikeTrain {
        SpikeTrain { times, threshold: 60.0, reset: 30.0 }
    }

    #[test]
    fn burst_examples() {
        assert!(detect_bursts(&train(vec![]), 3.0).unwrap().is_empty());
        let uniform: Vec<f64> = (0..10).map(|k| 7.0 * k as f64).collect();
        assert_eq!(detect_bursts(&train(uniform), 3.0).unwrap().len(), 1);
        // ISIs {5,5,5,100,5,5,5}
        let mut ts = vec![0.0];
        for gap in [5.0, 5.0, 5.0, 100.0, 5.0, 5.0, 5.0] {
            ts.push(ts.last().unwrap() + gap);
        }
        let segs = detect_bursts(&train(ts), 3.0).unwrap();
        assert_eq!(segs.len(), 2);
        assert!(segs.iter().all(|s| s.len() == 4));
        assert_eq!(segs[1].first(), 115.0);
        assert!(detect_bursts(&train(vec![1.0]), 1.0).is_err());
        assert_eq!(detect_bursts(&train(vec![1.0]), 2.0).unwrap().len(), 1);
    }

    #[test]
    fn mixed_mode_bands() {
        let t: Vec<f64> = (0..9).map(|k| k as f64).collect();
        let v = [0.0, 20.0, 0.0, 95.0, 0.0, 30.0, 0.0, 60.0, 0.0];
        let s = mixed_mode_statistic(&t, &v, (0.0, 8.0), 40.0, 80.0);
        assert_eq!((s.small, s.large, s.total_maxima), (2, 1, 4));
        assert!(s.passed());
        let s = mixed_mode_statistic(&t, &v, (4.0, 8.0), 40.0, 80.0);
        assert!(!s.passed());
    }

    fn stats(spikes: Vec<f64>, amplitude: f64, cfg: &ClassifierConfig) -> ProbeStats {
        let spikes = train(spikes);
        ProbeStats {
            position: 0.0,
            isi_cv: coefficient_of_variation(&spikes.intervals()),
            bursts: detect_bursts(&spikes, cfg.burst_gap_factor).unwrap(),
            spikes,
            amplitude,
        }
    }

    #[test]
    fn label_rules() {
        let cfg = ClassifierConfig::default();
        let quiet = stats(vec![], 0.2, &cfg);
        let tonic = stats((0..20).map(|k| 250.0 + 12.0 * k as f64).collect(), 100.0, &cfg);
        let mut b = vec![];
        for burst in 0..3 {
            for k in 0..4 {
                b.push(260.0 + 80.0 * burst as f64 + 10.0 * k as f64);
            }
        }
        let bursty = stats(b, 100.0, &cfg);
        assert_eq!(label_from_stats(&quiet, &quiet, &cfg), Regime::Stationary);
        assert_eq!(label_from_stats(&tonic, &tonic, &cfg), Regime::Periodic);
        assert_eq!(label_from_stats(&tonic, &quiet, &cfg), Regime::DeathSpot);
        assert_eq!(label_from_stats(&tonic, &bursty, &cfg), Regime::Bursting);
        let restless = stats(vec![], 5.0, &cfg);
        assert_eq!(label_from_stats(&quiet, &restless, &cfg), Regime::Unresolved);
    }

    #[test]
    fn classify_rejects_window_outside_record() {
        let r = synthetic(&[PointState::default(); 10]);
        assert!(matches!(classify_regime(&r, &ClassifierConfig::default()), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn spike_times_translate(shift in -1000.0f64..1000.0, centres in proptest::collection::vec(5.0f64..35.0, 1..4)) {
            let (t, v) = pulse_train(&centres);
            let shifted: Vec<f64> = t.iter().map(|x| x + shift).collect();
            let a = detect_spikes(&t, &v, 60.0, 30.0).unwrap();
            let b = detect_spikes(&shifted, &v, 60.0, 30.0).unwrap();
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.times.iter().zip(&b.times) {
                prop_assert!((y - (x + shift)).abs() < 1e-9);
            }
        }

        #[test]
        fn spike_count_invariant_under_affine_map(scale in 0.1f64..10.0, centres in proptest::collection::vec(5.0f64..35.0, 1..4)) {
            let (t, v) = pulse_train(&centres);
            // Affine map fixing the threshold level; reset is mapped alongside.
            let map = |x: f64| 60.0 + scale * (x - 60.0);
            let mapped: Vec<f64> = v.iter().map(|x| map(*x)).collect();
            let a = detect_spikes(&t, &v, 60.0, 30.0).unwrap();
            let b = detect_spikes(&t, &mapped, 60.0, map(30.0)).unwrap();
            prop_assert_eq!(a.len(), b.len());
        }

        #[test]
        fn upper_bound_monotone_in_drive(s1 in 0.0f64..1000.0, s2 in 0.0f64..1000.0) {
            let p = ModelParams::default();
            let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            prop_assert!(region_bounds(&p, lo).v_hi <= region_bounds(&p, hi).v_hi);
        }
    }
}
