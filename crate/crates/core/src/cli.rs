//! Command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::load_config;
use crate::error::{Error, Result};
use crate::integrator::{simulate, NetworkSpec, NetworkState, Scheme, TimeGrid, TrajectoryRecord};
use crate::io::{
    format_sig, read_timeseries_csv, snapshot_file_name, write_snapshot_csv, write_snapshot_svg,
    write_summary, write_timeseries_csv, write_timeseries_svg, RunSummary,
};
use crate::model::{ModelParams, PointState};
use crate::monitors::{classify_regime, sweep_bifurcation, ClassifierConfig, SweepTemplate};
use crate::presets::{left_step_input, preset, PresetName};
use crate::grid::SpatialConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_BLOW_UP: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hhrd", version, about = "Hodgkin-Huxley reaction-diffusion network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate the run described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output.dir from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
    /// Run a canned scenario (fig2, fig3a, fig3b, fig4, fig5, fig6).
    Preset {
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "rk4")]
        scheme: String,
        #[arg(long)]
        svg: bool,
    },
    /// Bisect the left-step amplitude between a stationary and a periodic end.
    Sweep {
        #[arg(long)]
        from: f64,
        #[arg(long)]
        to: f64,
        #[arg(long)]
        width: f64,
        /// Spatially constant initial state `V,n,m,h`.
        #[arg(long, default_value = "1,1,1,1")]
        init: String,
        #[arg(long, default_value = "rk4")]
        scheme: String,
    },
    /// Label every neuron of an existing time-series CSV.
    Classify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        window_start: Option<f64>,
        #[arg(long)]
        window_end: Option<f64>,
    },
}

/// Runs the CLI on `argv` (program name first) and returns the exit status.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("hhrd: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BlowUp { .. } => EXIT_BLOW_UP,
        _ => EXIT_FAILURE,
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Run { config, out, svg } => {
            let cfg = load_config(&config)?;
            let job = Job {
                source: format!("config {}", config.display()),
                spec: cfg.spec,
                init: cfg.init,
                time: cfg.time,
                scheme: cfg.scheme,
                probes: cfg.probes,
                snapshot_times: cfg.snapshot_times,
                classifier: cfg.classifier,
            };
            job.execute(&out.unwrap_or(cfg.output_dir), svg || cfg.svg)
        }
        Command::Preset { name, out, scheme, svg } => {
            let name: PresetName = name.parse()?;
            let p = preset(name)?;
            let job = Job {
                source: format!("preset {name}"),
                spec: p.spec,
                init: p.init,
                time: p.time,
                scheme: scheme.parse()?,
                probes: p.probes,
                snapshot_times: p.snapshot_times,
                classifier: ClassifierConfig::default(),
            };
            job.execute(&out, svg)
        }
        Command::Sweep { from, to, width, init, scheme } => {
            let init = parse_point(&init)?;
            let template = default_sweep_template(scheme.parse()?)?;
            let len = template.spec.spatial.node_count;
            let bracket = sweep_bifurcation(&template, from, to, &NetworkState::uniform(len, &[init]), width)?;
            println!("{} {}", format_sig(bracket.lo, 9), bracket.lo_label);
            println!("{} {}", format_sig(bracket.hi, 9), bracket.hi_label);
            Ok(())
        }
        Command::Classify { input, window_start, window_end } => {
            let record = read_timeseries_csv(&input)?;
            let mut cfg = ClassifierConfig::default();
            if let Some(t) = window_start {
                cfg.window_start = t;
            }
            if let Some(t) = window_end {
                cfg.window_end = t;
            }
            for (i, l) in classify_regime(&record, &cfg)?.iter().enumerate() {
                println!("neuron{} {}", i + 1, l.label);
            }
            Ok(())
        }
    }
}

/// Single neuron on the default domain with a left step of unit shape.
pub fn default_sweep_template(scheme: Scheme) -> Result<SweepTemplate> {
    let spatial = SpatialConfig::default();
    let shape = left_step_input(&spatial, 1.0)?;
    let spec = NetworkSpec::uncoupled(ModelParams::default(), spatial, vec![shape.clone()])?;
    Ok(SweepTemplate {
        spec,
        neuron: 0,
        shape,
        time: TimeGrid::default(),
        scheme,
        probes: vec![0, spatial.node_count - 1],
        classifier: ClassifierConfig::default(),
    })
}

fn parse_point(s: &str) -> Result<PointState> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("--init '{s}': {e}")))?;
    match vals[..] {
        [v, n, m, h] => Ok(PointState::new(v, n, m, h)),
        _ => Err(Error::Config(format!(
            "--init needs four comma-separated values V,n,m,h (got '{s}')"
        ))),
    }
}

struct Job {
    source: String,
    spec: NetworkSpec,
    init: NetworkState,
    time: TimeGrid,
    scheme: Scheme,
    probes: Vec<usize>,
    snapshot_times: Vec<f64>,
    classifier: ClassifierConfig,
}

impl Job {
    fn execute(&self, out: &Path, svg: bool) -> Result<()> {
        let started = Instant::now();
        let record = simulate(&self.spec, &self.init, &self.time, self.scheme, &self.probes, &self.snapshot_times)?;
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        write_timeseries_csv(&record, &out.join("timeseries.csv"))?;
        for snap in &record.snapshots {
            write_snapshot_csv(&record, snap.time, &out.join(snapshot_file_name(snap.time)))?;
            if svg {
                let name = snapshot_file_name(snap.time).replace(".csv", ".svg");
                write_snapshot_svg(&record, snap.time, &out.join(name))?;
            }
        }
        if svg {
            write_timeseries_svg(&record, &out.join("timeseries.svg"))?;
        }
        let labels = classify_regime(&record, &self.classifier)?;
        let summary = RunSummary {
            source: self.source.clone(),
            labels,
            verdicts: record.verdicts.clone(),
            config_echo: self.echo(&record),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        };
        write_summary(&summary, &out.join("summary.txt"))?;
        for (i, l) in summary.labels.iter().enumerate() {
            println!("neuron{} {}", i + 1, l.label);
        }
        if let Some(v) = &summary.verdicts {
            println!("gates: {}", v.gates);
            println!("voltage: {}", v.voltage);
        }
        println!(
            "wrote {} in {:.2} s",
            out.display(),
            summary.wall_clock_seconds
        );
        Ok(())
    }

    fn echo(&self, record: &TrajectoryRecord) -> Vec<(String, String)> {
        let f = |x: f64| format_sig(x, 9);
        let list = |xs: &[f64]| xs.iter().map(|x| f(*x)).collect::<Vec<_>>().join(",");
        let s = &self.spec.spatial;
        let c = &self.classifier;
        let probe_x: Vec<f64> = (0..record.probes.len()).map(|p| record.probe_position(p)).collect();
        vec![
            ("scheme".into(), self.scheme.to_string()),
            ("neurons".into(), self.spec.neuron_count().to_string()),
            ("a".into(), f(s.a)),
            ("b".into(), f(s.b)),
            ("node_count".into(), s.node_count.to_string()),
            ("diffusion".into(), f(s.diffusion)),
            ("dt".into(), f(self.time.dt)),
            ("t_end".into(), f(self.time.t_end)),
            ("record_stride".into(), self.time.record_stride.to_string()),
            ("sup_inputs".into(), list(&self.spec.sup_inputs())),
            ("probes".into(), list(&probe_x)),
            ("snapshots".into(), list(&self.snapshot_times)),
            ("window".into(), format!("{},{}", f(c.window_start), f(c.window_end))),
            ("spike_threshold".into(), f(c.spike_threshold)),
            ("spike_reset".into(), f(c.spike_reset)),
            ("burst_gap_factor".into(), f(c.burst_gap_factor)),
        ]
    }
}
