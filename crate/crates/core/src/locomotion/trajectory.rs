use serde::{Deserialize, Serialize};

use super::LocomotionError;

/// Planar pose: millimetres and radians counterclockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(t: f64, x: f64, y: f64, heading: f64) -> Self {
        Self { t, x, y, heading }
    }

    /// Reflection across the x axis.
    pub fn mirrored(&self) -> Self {
        Self {
            t: self.t,
            x: self.x,
            y: -self.y,
            heading: -self.heading,
        }
    }
}

/// Timestamped poses with strictly increasing time.
///
/// Headings are unwrapped once on construction: a jump of more than π between
/// consecutive samples is read as crossing the ±π branch cut.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<Pose>,
    unwrapped: Vec<f64>,
}

impl Trajectory {
    pub fn new(poses: Vec<Pose>) -> Result<Self, LocomotionError> {
        if poses.is_empty() {
            return Err(LocomotionError::TooFewPoses(0));
        }
        for (i, p) in poses.iter().enumerate() {
            if !(p.t.is_finite() && p.x.is_finite() && p.y.is_finite() && p.heading.is_finite()) {
                return Err(LocomotionError::NonFinite(i));
            }
        }
        if let Some(i) = poses.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(LocomotionError::NotIncreasing(i + 1));
        }
        let unwrapped = unwrap_headings(poses.iter().map(|p| p.heading));
        Ok(Self { poses, unwrapped })
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.poses[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.poses[self.poses.len() - 1].t
    }

    pub fn unwrapped_headings(&self) -> &[f64] {
        &self.unwrapped
    }

    pub fn mean_interval(&self) -> f64 {
        if self.poses.len() < 2 {
            return f64::INFINITY;
        }
        (self.end_time() - self.start_time()) / (self.poses.len() - 1) as f64
    }

    pub fn mirrored(&self) -> Self {
        Self::new(self.poses.iter().map(Pose::mirrored).collect()).expect("mirror keeps time base")
    }

    /// Segment index `i` with `t_i <= t <= t_{i+1}` and the blend factor.
    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.poses.len();
        if n == 1 {
            return (0, 0.0);
        }
        let upper = self.poses.partition_point(|p| p.t <= t).clamp(1, n - 1);
        let i = upper - 1;
        let (a, b) = (self.poses[i].t, self.poses[i + 1].t);
        let f = ((t - a) / (b - a)).clamp(0.0, 1.0);
        // a time within a billionth of an interval of a sample reads that sample,
        // so window ends computed as start + duration land on the grid
        if f < 1e-9 {
            (i, 0.0)
        } else if f > 1.0 - 1e-9 {
            (i + 1, 0.0)
        } else {
            (i, f)
        }
    }

    /// Unwrapped heading at `t`, linearly interpolated.
    pub fn heading_at(&self, t: f64) -> f64 {
        let (i, f) = self.locate(t);
        if f == 0.0 {
            return self.unwrapped[i];
        }
        self.unwrapped[i] + f * (self.unwrapped[i + 1] - self.unwrapped[i])
    }

    pub fn position_at(&self, t: f64) -> (f64, f64) {
        let (i, f) = self.locate(t);
        let p = &self.poses[i];
        if f == 0.0 {
            return (p.x, p.y);
        }
        let q = &self.poses[i + 1];
        (p.x + f * (q.x - p.x), p.y + f * (q.y - p.y))
    }

    fn check_window(&self, t_a: f64, t_b: f64) -> Result<(), LocomotionError> {
        if self.poses.len() < 2 {
            return Err(LocomotionError::TooFewPoses(self.poses.len()));
        }
        if !(t_a < t_b) {
            return Err(LocomotionError::EmptyWindow { t_a, t_b });
        }
        let tol = 1e-9 * self.end_time().abs().max(1.0);
        if t_a < self.start_time() - tol || t_b > self.end_time() + tol {
            return Err(LocomotionError::OutOfExtent {
                t_a,
                t_b,
                start: self.start_time(),
                end: self.end_time(),
            });
        }
        if t_b - t_a < self.mean_interval() * (1.0 - 1e-9) {
            return Err(LocomotionError::WindowTooShort {
                window: t_b - t_a,
                interval: self.mean_interval(),
            });
        }
        Ok(())
    }

    /// Mean angular velocity over `[t_a, t_b]` in degrees per second,
    /// counterclockwise positive.
    pub fn angular_velocity(&self, t_a: f64, t_b: f64) -> Result<f64, LocomotionError> {
        self.check_window(t_a, t_b)?;
        Ok((self.heading_at(t_b) - self.heading_at(t_a)).to_degrees() / (t_b - t_a))
    }

    /// Path length over `[t_a, t_b]` divided by the window length, mm/s.
    pub fn linear_velocity(&self, t_a: f64, t_b: f64) -> Result<f64, LocomotionError> {
        self.check_window(t_a, t_b)?;
        Ok(self.path_length(t_a, t_b) / (t_b - t_a))
    }

    /// Polyline length between the interpolated endpoints.
    pub fn path_length(&self, t_a: f64, t_b: f64) -> f64 {
        let mut prev = self.position_at(t_a);
        let mut total = 0.0;
        let first = self.poses.partition_point(|p| p.t <= t_a);
        for p in self.poses[first..].iter().take_while(|p| p.t < t_b) {
            total += (p.x - prev.0).hypot(p.y - prev.1);
            prev = (p.x, p.y);
        }
        let end = self.position_at(t_b);
        total + (end.0 - prev.0).hypot(end.1 - prev.1)
    }
}

/// Removes ±2π jumps between consecutive headings.
pub fn unwrap_headings<I: IntoIterator<Item = f64>>(headings: I) -> Vec<f64> {
    use std::f64::consts::{PI, TAU};
    let mut out: Vec<f64> = Vec::new();
    let mut offset = 0.0;
    let mut prev_raw: Option<f64> = None;
    for raw in headings {
        if let Some(p) = prev_raw {
            let d = raw - p;
            if d > PI {
                offset -= TAU * ((d - PI) / TAU).ceil();
            } else if d < -PI {
                offset += TAU * ((-d - PI) / TAU).ceil();
            }
        }
        out.push(raw + offset);
        prev_raw = Some(raw);
    }
    out
}
