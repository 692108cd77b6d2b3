use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::NavError;

/// Reference polyline in millimetres.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSpec {
    pub waypoints: Vec<[f64; 2]>,
    pub corridor_width: f64,
}

pub const DEFAULT_CORRIDOR: f64 = 100.0;

#[derive(Deserialize)]
#[serde(untagged)]
enum PathFile {
    Bare(Vec<[f64; 2]>),
    Full {
        waypoints: Vec<[f64; 2]>,
        #[serde(default = "default_corridor")]
        corridor_width: f64,
    },
}

fn default_corridor() -> f64 {
    DEFAULT_CORRIDOR
}

impl<'de> Deserialize<'de> for PathSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let (waypoints, corridor_width) = match PathFile::deserialize(d)? {
            PathFile::Bare(w) => (w, DEFAULT_CORRIDOR),
            PathFile::Full {
                waypoints,
                corridor_width,
            } => (waypoints, corridor_width),
        };
        PathSpec::new(waypoints, corridor_width).map_err(serde::de::Error::custom)
    }
}

impl PathSpec {
    pub fn new(waypoints: Vec<[f64; 2]>, corridor_width: f64) -> Result<Self, NavError> {
        if waypoints.len() < 2 {
            return Err(NavError::Path(format!("need at least 2 waypoints, have {}", waypoints.len())));
        }
        if waypoints.iter().flatten().any(|v| !v.is_finite()) {
            return Err(NavError::Path("waypoints must be finite".into()));
        }
        if let Some(i) = waypoints.windows(2).position(|w| w[0] == w[1]) {
            return Err(NavError::Path(format!("waypoints {i} and {} coincide", i + 1)));
        }
        if !(corridor_width > 0.0 && corridor_width.is_finite()) {
            return Err(NavError::Path(format!("corridor width must be > 0, got {corridor_width}")));
        }
        Ok(Self {
            waypoints,
            corridor_width,
        })
    }

    /// Two opposed semicircles of radius 250 mm joined at the origin,
    /// 50 waypoints spaced evenly by arc length. Starts at (-500, 0)
    /// heading +y, bulges up over the first lobe and down under the second.
    pub fn s_course() -> Self {
        Self::s_course_with(250.0, 50, DEFAULT_CORRIDOR)
    }

    pub fn s_course_with(radius: f64, n: usize, corridor_width: f64) -> Self {
        let half = PI * radius;
        let waypoints = (0..n)
            .map(|i| {
                let s = 2.0 * half * i as f64 / (n - 1) as f64;
                if s <= half {
                    // clockwise from angle π about (-r, 0)
                    let a = PI - s / radius;
                    [-radius + radius * a.cos(), radius * a.sin()]
                } else {
                    // counterclockwise from angle π about (r, 0)
                    let a = PI + (s - half) / radius;
                    [radius + radius * a.cos(), radius * a.sin()]
                }
            })
            .collect();
        Self::new(waypoints, corridor_width).expect("generated course is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, NavError> {
        serde_json::from_str(text).map_err(|e| NavError::Path(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("path serializes")
    }

    pub fn start(&self) -> [f64; 2] {
        self.waypoints[0]
    }

    pub fn end(&self) -> [f64; 2] {
        *self.waypoints.last().expect("non-empty")
    }

    /// Direction of the first segment, radians.
    pub fn start_heading(&self) -> f64 {
        let [a, b] = [self.waypoints[0], self.waypoints[1]];
        (b[1] - a[1]).atan2(b[0] - a[0])
    }

    pub fn segment_lengths(&self) -> Vec<f64> {
        self.waypoints
            .windows(2)
            .map(|w| (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))
            .collect()
    }

    /// Arc length at each waypoint.
    pub fn cumulative_lengths(&self) -> Vec<f64> {
        let mut acc = vec![0.0];
        for l in self.segment_lengths() {
            acc.push(acc.last().unwrap() + l);
        }
        acc
    }

    pub fn length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    /// Point at arc length `s`, clamped to the ends.
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let cum = self.cumulative_lengths();
        if s <= 0.0 {
            return self.start();
        }
        for (i, w) in self.waypoints.windows(2).enumerate() {
            if s <= cum[i + 1] {
                let f = (s - cum[i]) / (cum[i + 1] - cum[i]);
                return [w[0][0] + f * (w[1][0] - w[0][0]), w[0][1] + f * (w[1][1] - w[0][1])];
            }
        }
        self.end()
    }
}

/// Closest point of segment `a`-`b` to `p`, as (distance, fraction along).
pub fn project_onto_segment(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let f = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0);
    let (cx, cy) = (a[0] + f * dx, a[1] + f * dy);
    ((p[0] - cx).hypot(p[1] - cy), f)
}

/// Distance from `(x, y)` to the nearest point of the polyline.
pub fn cross_track_error(x: f64, y: f64, path: &PathSpec) -> f64 {
    path.waypoints
        .windows(2)
        .map(|w| project_onto_segment([x, y], w[0], w[1]).0)
        .fold(f64::INFINITY, f64::min)
}

/// Arc-length progress that only moves forward.
///
/// Each update looks for the nearest point among the segments within a
/// window ahead of the current progress, so the tracker cannot jump to a
/// part of the course that merely passes close by.
#[derive(Debug, Clone)]
pub struct ProgressTracker {
    cum: Vec<f64>,
    s: f64,
    behind: f64,
    ahead: f64,
}

impl ProgressTracker {
    pub fn new(path: &PathSpec) -> Self {
        Self {
            cum: path.cumulative_lengths(),
            s: 0.0,
            behind: 20.0,
            ahead: 150.0,
        }
    }

    pub fn progress(&self) -> f64 {
        self.s
    }

    pub fn update(&mut self, x: f64, y: f64, path: &PathSpec) -> f64 {
        let (lo, hi) = (self.s - self.behind, self.s + self.ahead);
        let mut best = (f64::INFINITY, self.s);
        for (i, w) in path.waypoints.windows(2).enumerate() {
            if self.cum[i + 1] < lo || self.cum[i] > hi {
                continue;
            }
            let (d, f) = project_onto_segment([x, y], w[0], w[1]);
            let s = self.cum[i] + f * (self.cum[i + 1] - self.cum[i]);
            if d < best.0 {
                best = (d, s.min(hi));
            }
        }
        self.s = self.s.max(best.1);
        self.s
    }
}

/// Heading from `(x, y)` toward `target`, minus `heading`, wrapped to (-180, 180] degrees.
pub fn bearing_error_deg(x: f64, y: f64, heading: f64, target: [f64; 2]) -> f64 {
    let bearing = (target[1] - y).atan2(target[0] - x);
    let e = crate::sim::wrap_angle(bearing - heading).to_degrees();
    if e <= -180.0 {
        e + 360.0
    } else {
        e
    }
}
