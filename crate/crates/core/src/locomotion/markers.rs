use serde::{Deserialize, Serialize};

use super::trajectory::Pose;

/// Minimum |sin| of the angle at the front marker for a usable triangle.
pub const COLLINEAR_TOLERANCE: f64 = 1e-3;

/// One capture frame of the three back markers, millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkerFrame {
    pub t: f64,
    pub front: Option<[f64; 2]>,
    pub left_rear: Option<[f64; 2]>,
    pub right_rear: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapReason {
    MissingMarker,
    Collinear,
}

/// A dropped frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub t: f64,
    pub reason: GapReason,
}

/// Centroid of the markers, heading from the rear midpoint to the front marker.
pub fn markers_to_pose(frame: &MarkerFrame) -> Result<Pose, Gap> {
    let gap = |reason| Gap { t: frame.t, reason };
    let (Some(f), Some(l), Some(r)) = (frame.front, frame.left_rear, frame.right_rear) else {
        return Err(gap(GapReason::MissingMarker));
    };
    let (ax, ay) = (l[0] - f[0], l[1] - f[1]);
    let (bx, by) = (r[0] - f[0], r[1] - f[1]);
    let norm = ax.hypot(ay) * bx.hypot(by);
    if norm == 0.0 || (ax * by - ay * bx).abs() / norm < COLLINEAR_TOLERANCE {
        return Err(gap(GapReason::Collinear));
    }
    let cx = (f[0] + l[0] + r[0]) / 3.0;
    let cy = (f[1] + l[1] + r[1]) / 3.0;
    let mx = (l[0] + r[0]) / 2.0;
    let my = (l[1] + r[1]) / 2.0;
    Ok(Pose::new(frame.t, cx, cy, (f[1] - my).atan2(f[0] - mx)))
}

/// Converts every frame, collecting dropped ones as gaps.
pub fn poses_from_markers(frames: &[MarkerFrame]) -> (Vec<Pose>, Vec<Gap>) {
    let mut poses = Vec::with_capacity(frames.len());
    let mut gaps = Vec::new();
    for f in frames {
        match markers_to_pose(f) {
            Ok(p) => poses.push(p),
            Err(g) => gaps.push(g),
        }
    }
    (poses, gaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn frame(t: f64, f: [f64; 2], l: [f64; 2], r: [f64; 2]) -> MarkerFrame {
        MarkerFrame {
            t,
            front: Some(f),
            left_rear: Some(l),
            right_rear: Some(r),
        }
    }

    #[test]
    fn hand_geometry() {
        let p = markers_to_pose(&frame(0.0, [10.0, 0.0], [0.0, 5.0], [0.0, -5.0])).unwrap();
        assert!((p.x - 10.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.y, 0.0);
        assert_eq!(p.heading, 0.0);
    }

    #[test]
    fn rotated_ninety_degrees() {
        let p = markers_to_pose(&frame(0.0, [0.0, 10.0], [-5.0, 0.0], [5.0, 0.0])).unwrap();
        assert!((p.heading - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn missing_and_collinear_frames_become_gaps() {
        let frames = vec![
            frame(0.0, [10.0, 0.0], [0.0, 5.0], [0.0, -5.0]),
            MarkerFrame {
                t: 0.01,
                front: None,
                left_rear: Some([0.0, 5.0]),
                right_rear: Some([0.0, -5.0]),
            },
            frame(0.02, [10.0, 0.0], [5.0, 0.0], [0.0, 0.0]),
            frame(0.03, [11.0, 0.0], [1.0, 5.0], [1.0, -5.0]),
        ];
        let (poses, gaps) = poses_from_markers(&frames);
        assert_eq!(poses.len(), 2);
        assert_eq!(poses[1].t, 0.03);
        assert_eq!(
            gaps,
            vec![
                Gap { t: 0.01, reason: GapReason::MissingMarker },
                Gap { t: 0.02, reason: GapReason::Collinear },
            ]
        );
    }
}
