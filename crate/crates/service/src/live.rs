//! The session owner: one thread advances a console-mode [`TeleopSession`]
//! in (scaled) real time. Commands arrive through an ordered queue and every
//! tick is published as an immutable status value.

use std::path::{Path, PathBuf};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use insectbench_core::navigator::{NavError, PathSpec, SessionLog, SessionStatus, SessionSummary, Snapshot, TeleopSession};
use insectbench_core::stimgen::StimKind;
use serde::Serialize;
use tokio::sync::{oneshot, watch};

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Simulated seconds per wall-clock second.
    pub time_scale: f64,
    /// Console telemetry rate; the session log keeps every tick.
    pub telemetry_hz: f64,
    /// Where to write the session log when the session ends.
    pub log_path: Option<PathBuf>,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            time_scale: 1.0,
            telemetry_hz: 20.0,
            log_path: None,
        }
    }
}

/// Latest session state as served on `/state`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiveState {
    #[serde(flatten)]
    pub status: SessionStatus,
    pub finished: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum CommandError {
    #[error("refractory for another {remaining_s:.3} s")]
    Refractory { remaining_s: f64 },
    #[error("session has finished")]
    Finished,
    #[error("session is not running")]
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Accepted {
    pub kind: StimKind,
    /// Session time at which the frame entered the link.
    pub t: f64,
    pub refractory_s: f64,
}

enum Request {
    Command(StimKind, oneshot::Sender<Result<Accepted, CommandError>>),
    Summary(oneshot::Sender<SessionSummary>),
    Log(oneshot::Sender<SessionLog>),
    Shutdown,
}

/// Cheap to clone; every clone talks to the same session thread.
#[derive(Clone)]
pub struct SessionHandle {
    requests: mpsc::Sender<Request>,
    state: watch::Receiver<LiveState>,
    telemetry: watch::Receiver<Snapshot>,
    path: Arc<PathSpec>,
}

impl SessionHandle {
    pub fn state(&self) -> LiveState {
        *self.state.borrow()
    }

    /// Decimated telemetry. The receiver sees each published snapshot at most once.
    pub fn telemetry(&self) -> watch::Receiver<Snapshot> {
        self.telemetry.clone()
    }

    pub fn state_updates(&self) -> watch::Receiver<LiveState> {
        self.state.clone()
    }

    pub fn path(&self) -> &PathSpec {
        &self.path
    }

    pub async fn command(&self, kind: StimKind) -> Result<Accepted, CommandError> {
        let (tx, rx) = oneshot::channel();
        self.requests
            .send(Request::Command(kind, tx))
            .map_err(|_| CommandError::Closed)?;
        rx.await.map_err(|_| CommandError::Closed)?
    }

    pub async fn summary(&self) -> Option<SessionSummary> {
        let (tx, rx) = oneshot::channel();
        self.requests.send(Request::Summary(tx)).ok()?;
        rx.await.ok()
    }

    pub async fn log(&self) -> Option<SessionLog> {
        let (tx, rx) = oneshot::channel();
        self.requests.send(Request::Log(tx)).ok()?;
        rx.await.ok()
    }

    /// Asks the session thread to stop; it writes the log and exits.
    pub fn shutdown(&self) {
        let _ = self.requests.send(Request::Shutdown);
    }
}

/// Starts the session thread. The thread exits after [`SessionHandle::shutdown`]
/// or once every handle is dropped, and returns the final log.
pub fn spawn(session: TeleopSession, config: LiveConfig) -> std::io::Result<(SessionHandle, JoinHandle<SessionLog>)> {
    let (req_tx, req_rx) = mpsc::channel();
    let initial = LiveState {
        status: session.status(),
        finished: session.is_finished(),
    };
    let (state_tx, state_rx) = watch::channel(initial);
    let (tel_tx, tel_rx) = watch::channel(session.snapshot());
    let handle = SessionHandle {
        requests: req_tx,
        state: state_rx,
        telemetry: tel_rx,
        path: Arc::new(session.path().clone()),
    };
    let join = std::thread::Builder::new()
        .name("teleop-session".into())
        .spawn(move || run(session, config, req_rx, state_tx, tel_tx))?;
    Ok((handle, join))
}

fn run(
    mut session: TeleopSession,
    config: LiveConfig,
    requests: mpsc::Receiver<Request>,
    state: watch::Sender<LiveState>,
    telemetry: watch::Sender<Snapshot>,
) -> SessionLog {
    let dt = session.simulator().dt();
    let tick_rate = session.config().sim.tick_rate;
    let decimation = ((tick_rate / config.telemetry_hz).round() as u64).max(1);
    let wall_per_tick = if config.time_scale.is_finite() && config.time_scale > 0.0 {
        Some(Duration::from_secs_f64(dt / config.time_scale))
    } else {
        None
    };
    let start = Instant::now();
    let mut ticks: u32 = 0;
    let mut saved = false;

    loop {
        let finished = session.is_finished();
        if finished && !saved {
            save(&session, config.log_path.as_deref());
            saved = true;
        }
        // serve requests until the next tick is due
        loop {
            let next = if finished {
                requests.recv().map_err(|_| RecvTimeoutError::Disconnected)
            } else {
                match wall_per_tick {
                    Some(w) => {
                        let due = start + w * (ticks + 1);
                        requests.recv_timeout(due.saturating_duration_since(Instant::now()))
                    }
                    None => requests.try_recv().map_err(|e| match e {
                        mpsc::TryRecvError::Empty => RecvTimeoutError::Timeout,
                        mpsc::TryRecvError::Disconnected => RecvTimeoutError::Disconnected,
                    }),
                }
            };
            match next {
                Ok(Request::Shutdown) | Err(RecvTimeoutError::Disconnected) => {
                    if !saved {
                        save(&session, config.log_path.as_deref());
                    }
                    return session.log();
                }
                Ok(req) => {
                    handle(&mut session, req);
                    let _ = state.send(LiveState {
                        status: session.status(),
                        finished,
                    });
                }
                Err(RecvTimeoutError::Timeout) => break,
            }
        }
        let snap = session.tick();
        ticks += 1;
        let _ = state.send(LiveState {
            status: session.status(),
            finished: session.is_finished(),
        });
        if session.simulator().tick().is_multiple_of(decimation) {
            let _ = telemetry.send(snap);
        }
    }
}

fn handle(session: &mut TeleopSession, req: Request) {
    match req {
        Request::Command(kind, reply) => {
            let result = if session.is_finished() {
                Err(CommandError::Finished)
            } else {
                match session.submit(kind) {
                    Ok(()) => Ok(Accepted {
                        kind,
                        t: session.time(),
                        refractory_s: session.refractory_remaining(),
                    }),
                    Err(NavError::Refractory { remaining_s }) => Err(CommandError::Refractory { remaining_s }),
                    Err(e) => unreachable!("session config was validated: {e}"),
                }
            };
            let _ = reply.send(result);
        }
        Request::Summary(reply) => {
            let _ = reply.send(session.summary());
        }
        Request::Log(reply) => {
            let _ = reply.send(session.log());
        }
        Request::Shutdown => {}
    }
}

fn save(session: &TeleopSession, path: Option<&Path>) {
    if let Some(path) = path {
        match persist(session, path) {
            Ok(_) => tracing::info!(path = %path.display(), "session log written"),
            Err(e) => tracing::error!(path = %path.display(), "writing session log: {e}"),
        }
    }
}

/// Writes the log to `path` and the full-rate trace next to it
/// (`<path>.trace.csv`), linking the two.
pub fn persist(session: &TeleopSession, path: &Path) -> std::io::Result<SessionLog> {
    let mut log = session.log();
    let mut trace = path.as_os_str().to_owned();
    trace.push(".trace.csv");
    let trace = PathBuf::from(trace);
    std::fs::write(&trace, session.trace_csv())?;
    log.trace_file = trace.file_name().map(|n| n.to_string_lossy().into_owned());
    std::fs::write(path, log.to_json())?;
    Ok(log)
}
