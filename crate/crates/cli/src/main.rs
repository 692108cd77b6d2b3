mod inputs;

use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use insectbench_core::locomotion::{classify_all, read_trace, summarize_with, EventsFile, HistogramConfig};
use insectbench_core::navigator::{autopilot, replay, run_scripted, sha256_hex, CommandMode, SessionLog, TeleopSession};
use insectbench_core::neurosig::{sweep_analysis, sweep_csv, NoiseScope, SweepParams};
use insectbench_core::sim::run_session;
use insectbench_core::stimgen::{sample_waveform, voltage_sweep_schedule_spaced, StimulationSchedule, StimulusTrain};
use insectbench_core::SampledSignal;
use insectbench_service::{persist, router, spawn, LiveConfig};
use serde_json::json;

use inputs::{emit, load_path, load_session_config, load_sim_config, parse_seeds, read};

#[derive(Parser)]
#[command(name = "insectbench", version, about = "Cyborg-insect stimulation, analysis and teleoperation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one bipolar stimulus train to CSV (`t_s,v`).
    GenStim {
        #[arg(long, default_value_t = 4.0)]
        amplitude: f64,
        #[arg(long, default_value_t = 12.0, conflicts_with = "frequency_hz")]
        phase_ms: f64,
        /// Nominal frequency; the phase is rounded to whole milliseconds.
        #[arg(long)]
        frequency_hz: Option<f64>,
        #[arg(long, default_value_t = 0.5)]
        duty: f64,
        #[arg(long, default_value_t = 1.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 10_000.0)]
        rate_hz: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a voltage-sweep schedule of single 1 Hz pulses.
    GenSweep {
        #[arg(long, default_value_t = 0.5)]
        v_min: f64,
        #[arg(long, default_value_t = 5.0)]
        v_max: f64,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, default_value_t = 1.0)]
        first_onset_s: f64,
        #[arg(long, default_value_t = 2.0)]
        interval_s: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Spike counts per stimulus amplitude (`amplitude_v,mean_count,cv`).
    AnalyzeSignal {
        recording: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 40.0)]
        blank_ms: f64,
        #[arg(long, default_value_t = 750.0)]
        window_ms: f64,
        #[arg(long, default_value_t = 250.0)]
        low_hz: f64,
        #[arg(long, default_value_t = 3000.0)]
        high_hz: f64,
        #[arg(long, value_enum, default_value_t = Scope::Recording)]
        noise_scope: Scope,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grade a pose or marker trace against its stimulation events.
    AnalyzeTrace {
        trace: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        hist_bin_deg: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Headless simulator run from a schedule.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 60.0)]
        duration_s: f64,
        /// Simulate the mirror image of the configured world.
        #[arg(long)]
        mirror: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        events_out: Option<PathBuf>,
    },
    /// Live teleoperation session behind the console HTTP API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Simulator config, or a full session config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Waypoint JSON; the default S course otherwise.
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        max_duration_s: Option<f64>,
        /// Simulated seconds per wall-clock second.
        #[arg(long, default_value_t = 1.0)]
        time_scale: f64,
        /// Session log written when the session ends or the server stops.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Console assets served under `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
    },
    /// Scripted sessions over a seed range.
    Autopilot {
        #[arg(long)]
        path: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// `0..99` includes both ends; also `3..=7`, `5`, `1,4,9`.
        #[arg(long, default_value = "0..99", value_parser = parse_seeds)]
        seeds: std::vec::Vec<u64>,
        #[arg(long)]
        max_duration_s: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write `seed-<n>.json` session logs and traces here.
        #[arg(long)]
        log_dir: Option<PathBuf>,
    },
    /// Re-run a session log and check the trace hash.
    Replay {
        log: PathBuf,
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scope {
    Recording,
    Epoch,
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::GenStim {
            amplitude,
            phase_ms,
            frequency_hz,
            duty,
            duration_s,
            rate_hz,
            out,
        } => {
            let train = match frequency_hz {
                Some(f) => StimulusTrain::from_frequency(amplitude, f, duration_s, 0.0)?,
                None => StimulusTrain::new(amplitude, phase_ms / 1000.0, duty, duration_s, 0.0)?,
            };
            let wave = sample_waveform(&train, rate_hz)?;
            let mut csv = String::from("t_s,v\n");
            for (i, v) in wave.samples().iter().enumerate() {
                let _ = writeln!(csv, "{},{}", wave.time_at(i), v);
            }
            emit(out.as_deref(), &csv)?;
            eprintln!(
                "{} samples, phase {} ms, {:.4} Hz",
                wave.len(),
                train.phase_width() * 1000.0,
                train.frequency()
            );
        }
        Command::GenSweep {
            v_min,
            v_max,
            step,
            repeats,
            first_onset_s,
            interval_s,
            out,
        } => {
            let schedule = voltage_sweep_schedule_spaced(v_min, v_max, step, repeats, first_onset_s, interval_s)?;
            emit(out.as_deref(), &schedule.to_json())?;
            eprintln!("{} stimuli, last ends at {} s", schedule.len(), last_end(&schedule));
        }
        Command::AnalyzeSignal {
            recording,
            schedule,
            blank_ms,
            window_ms,
            low_hz,
            high_hz,
            noise_scope,
            out,
        } => {
            let file = File::open(&recording).with_context(|| format!("opening {}", recording.display()))?;
            let signal = SampledSignal::read_from(BufReader::new(file))
                .with_context(|| format!("in {}", recording.display()))?;
            let schedule = StimulationSchedule::load(&schedule).with_context(|| format!("in {}", schedule.display()))?;
            let params = SweepParams {
                blank_window: blank_ms / 1000.0,
                response_window: window_ms / 1000.0,
                low_cut: low_hz,
                high_cut: high_hz,
                noise_scope: match noise_scope {
                    Scope::Recording => NoiseScope::Recording,
                    Scope::Epoch => NoiseScope::Epoch,
                },
                ..SweepParams::default()
            };
            let rows = sweep_analysis(&signal, &schedule, &params)?;
            emit(out.as_deref(), &sweep_csv(&rows))?;
        }
        Command::AnalyzeTrace {
            trace,
            events,
            hist_bin_deg,
            out,
        } => {
            let file = File::open(&trace).with_context(|| format!("opening {}", trace.display()))?;
            let loaded = read_trace(file).with_context(|| format!("in {}", trace.display()))?;
            if !loaded.gaps.is_empty() {
                tracing::warn!("{} marker frames dropped", loaded.gaps.len());
            }
            let events = EventsFile::from_json(&read(&events)?).with_context(|| format!("in {}", events.display()))?;
            let hist = HistogramConfig {
                bin_width_deg: hist_bin_deg,
                ..HistogramConfig::default()
            };
            let results = classify_all(&loaded.trajectory, &events.events);
            let summary = summarize_with(&results, &hist);
            let doc = json!({ "summary": summary, "events": results, "gaps": loaded.gaps });
            emit(out.as_deref(), &serde_json::to_string_pretty(&doc)?)?;
        }
        Command::Simulate {
            config,
            seed,
            schedule,
            duration_s,
            mirror,
            out,
            events_out,
        } => {
            let mut cfg = load_sim_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg = cfg.with_seed(seed);
            }
            if mirror {
                cfg = cfg.mirrored();
            }
            let schedule = StimulationSchedule::load(&schedule).with_context(|| format!("in {}", schedule.display()))?;
            let output = run_session(cfg, &schedule, duration_s)?;
            emit(out.as_deref(), &insectbench_core::locomotion::trace_csv(output.trajectory.poses()))?;
            if let Some(p) = events_out {
                emit(Some(&p), &EventsFile { events: output.events.clone() }.to_json())?;
            }
            eprintln!("{} ticks, {} stimuli applied", output.trajectory.len() - 1, output.events.len());
        }
        Command::Serve {
            port,
            bind,
            config,
            path,
            seed,
            max_duration_s,
            time_scale,
            log,
            static_dir,
        } => {
            let mut cfg = load_session_config(config.as_deref())?;
            if let Some(seed) = seed {
                cfg = cfg.with_seed(seed);
            }
            if let Some(m) = max_duration_s {
                cfg.max_duration_s = m;
            }
            let path = load_path(path.as_deref())?;
            let session = TeleopSession::new(cfg, path, CommandMode::Console)?;
            serve(session, (bind, port), time_scale, log, static_dir)?;
        }
        Command::Autopilot {
            path,
            config,
            seeds,
            max_duration_s,
            out,
            log_dir,
        } => {
            let mut cfg = load_session_config(config.as_deref())?;
            if let Some(m) = max_duration_s {
                cfg.max_duration_s = m;
            }
            let path = load_path(path.as_deref())?;
            let report = autopilot(cfg, &path, &seeds)?;
            if let Some(dir) = log_dir {
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                for &seed in &seeds {
                    let session = run_scripted(cfg, &path, seed)?;
                    persist(&session, &dir.join(format!("seed-{seed}.json")))?;
                }
            }
            emit(out.as_deref(), &serde_json::to_string_pretty(&report)?)?;
            eprintln!(
                "{} seeds: median RMS cross-track {:.1} mm, {:.0}% completed within {} s",
                report.n_seeds,
                report.median_rms_cross_track_mm,
                report.completion_rate * 100.0,
                report.max_duration_s
            );
        }
        Command::Replay { log, trace_out } => {
            let session = SessionLog::from_json(&read(&log)?).with_context(|| format!("in {}", log.display()))?;
            let r = replay(&session)?;
            if let Some(p) = trace_out {
                emit(Some(&p), &r.trace_csv)?;
            }
            check_trace_file(&log, &session, &r.trace_csv)?;
            if !r.matches(&session) {
                bail!("replay diverged: trace sha256 {} but the log records {}", r.sha256, session.trace_sha256);
            }
            println!("replay ok: {} ticks, {} stimuli, sha256 {}", session.ticks, r.events.len(), r.sha256);
        }
    }
    Ok(())
}

fn last_end(schedule: &StimulationSchedule) -> f64 {
    schedule.events().iter().map(|e| e.train.end_time()).fold(0.0, f64::max)
}

/// A trace file named by the log must still hash to the recorded value.
fn check_trace_file(log_path: &Path, log: &SessionLog, replayed: &str) -> Result<()> {
    let Some(name) = &log.trace_file else {
        return Ok(());
    };
    let file = log_path.parent().unwrap_or(Path::new(".")).join(name);
    let Ok(text) = std::fs::read_to_string(&file) else {
        tracing::warn!("trace file {} not found, checking the hash only", file.display());
        return Ok(());
    };
    if sha256_hex(&text) != log.trace_sha256 {
        bail!("{} does not match the trace hash in the log", file.display());
    }
    if text != replayed {
        bail!("replayed trace differs from {}", file.display());
    }
    Ok(())
}

fn serve(
    session: TeleopSession,
    addr: (IpAddr, u16),
    time_scale: f64,
    log: Option<PathBuf>,
    static_dir: Option<PathBuf>,
) -> Result<()> {
    let live = LiveConfig {
        time_scale,
        log_path: log,
        ..LiveConfig::default()
    };
    let (handle, join) = spawn(session, live)?;
    let app = router(handle.clone(), static_dir);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {}:{}", addr.0, addr.1))?;
        tracing::info!("serving on http://{}", listener.local_addr()?);
        let stopper = handle.clone();
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = tokio::signal::ctrl_c().await;
                // ends the session thread, which closes open telemetry streams
                stopper.shutdown();
            })
            .await?;
        anyhow::Ok(())
    })?;
    handle.shutdown();
    let log = join.join().map_err(|_| anyhow::anyhow!("session thread panicked"))?;
    eprintln!(
        "session ended at {:.2} s: {} commands, {} stimuli applied",
        log.metrics.duration_s, log.metrics.commands, log.metrics.stimuli_applied
    );
    Ok(())
}
