//! Live teleoperation: a real-time session thread and the HTTP endpoints the
//! operator console talks to.
//!
//! | route | |
//! |---|---|
//! | `GET /state` | latest status: snapshot, cross-track, progress, link counters |
//! | `GET /stream` | server-sent events, one `{t,x,y,heading,v,omega,stim}` per 50 ms of session time |
//! | `POST /command` | `{"kind":"LEFT"}`; 202, 429 while refractory, 400 on a bad body |
//! | `GET /path` | the reference path |
//! | `GET /summary` | session metrics, link counters, graded locomotion |

mod api;
mod live;

pub use api::{router, CommandBody};
pub use live::{persist, spawn, Accepted, CommandError, LiveConfig, LiveState, SessionHandle};
