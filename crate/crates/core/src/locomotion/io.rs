//! Trace CSV and events JSON.
//!
//! Pose form: `t_s,x_mm,y_mm,heading_rad`. Marker form:
//! `t_s,fx,fy,lx,ly,rx,ry`, where an empty cell marks an occluded marker.

use std::fmt::Write as _;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::classify::StimulationEvent;
use super::markers::{poses_from_markers, Gap, MarkerFrame};
use super::trajectory::{Pose, Trajectory};
use super::LocomotionError;

pub const POSE_HEADER: [&str; 4] = ["t_s", "x_mm", "y_mm", "heading_rad"];
pub const MARKER_HEADER: [&str; 7] = ["t_s", "fx", "fy", "lx", "ly", "rx", "ry"];

/// A parsed trace and any frames dropped during marker reduction.
#[derive(Debug, Clone)]
pub struct LoadedTrace {
    pub trajectory: Trajectory,
    pub gaps: Vec<Gap>,
}

pub fn read_trace<R: Read>(reader: R) -> Result<LoadedTrace, LocomotionError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header == POSE_HEADER {
        let mut poses = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let v = |i: usize| parse_cell(rec.get(i), line + 2)?.ok_or(LocomotionError::Csv {
                line: line + 2,
                msg: format!("missing {}", POSE_HEADER[i]),
            });
            poses.push(Pose::new(v(0)?, v(1)?, v(2)?, v(3)?));
        }
        return Ok(LoadedTrace {
            trajectory: Trajectory::new(poses)?,
            gaps: Vec::new(),
        });
    }
    if header == MARKER_HEADER {
        let mut frames = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let cell = |i: usize| parse_cell(rec.get(i), line + 2);
            let point = |i: usize| -> Result<Option<[f64; 2]>, LocomotionError> {
                Ok(match (cell(i)?, cell(i + 1)?) {
                    (Some(x), Some(y)) => Some([x, y]),
                    _ => None,
                })
            };
            let t = cell(0)?.ok_or(LocomotionError::Csv {
                line: line + 2,
                msg: "missing t_s".into(),
            })?;
            frames.push(MarkerFrame {
                t,
                front: point(1)?,
                left_rear: point(3)?,
                right_rear: point(5)?,
            });
        }
        let (poses, gaps) = poses_from_markers(&frames);
        return Ok(LoadedTrace {
            trajectory: Trajectory::new(poses)?,
            gaps,
        });
    }
    Err(LocomotionError::Csv {
        line: 1,
        msg: format!(
            "unrecognised header {header:?}, expected {} or {}",
            POSE_HEADER.join(","),
            MARKER_HEADER.join(",")
        ),
    })
}

fn parse_cell(cell: Option<&str>, line: usize) -> Result<Option<f64>, LocomotionError> {
    match cell.map(str::trim) {
        None | Some("") => Ok(None),
        Some(s) => s.parse().map(Some).map_err(|e| LocomotionError::Csv {
            line,
            msg: format!("{s:?}: {e}"),
        }),
    }
}

/// Pose-form CSV. Uses shortest round-trip float formatting, so equal
/// trajectories always produce identical bytes.
pub fn trace_csv(poses: &[Pose]) -> String {
    let mut out = String::with_capacity(poses.len() * 64 + 32);
    out.push_str(&POSE_HEADER.join(","));
    out.push('\n');
    for p in poses {
        let _ = writeln!(out, "{},{},{},{}", p.t, p.x, p.y, p.heading);
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EventsFile {
    pub events: Vec<StimulationEvent>,
}

impl EventsFile {
    pub fn from_json(text: &str) -> Result<Self, LocomotionError> {
        let file: Self = serde_json::from_str(text)?;
        if let Some(e) = file.events.iter().find(|e| !(e.duration > 0.0)) {
            return Err(LocomotionError::BadEvent(e.t_start));
        }
        Ok(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("events serialize")
    }
}
