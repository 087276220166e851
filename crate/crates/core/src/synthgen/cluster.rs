//! Object geometries in local pixel coordinates (origin at the anchor).

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::class::ObjectClass;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub p0: Point,
    pub p1: Point,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.p0.dist(self.p1)
    }

    pub fn direction(&self) -> (f64, f64) {
        let l = self.length();
        ((self.p1.x - self.p0.x) / l, (self.p1.y - self.p0.y) / l)
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        let (dx, dy) = (self.p1.x - self.p0.x, self.p1.y - self.p0.y);
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return p.dist(self.p0);
        }
        let t = (((p.x - self.p0.x) * dx + (p.y - self.p0.y) * dy) / len2).clamp(0.0, 1.0);
        p.dist(Point::new(self.p0.x + t * dx, self.p0.y + t * dy))
    }
}

/// Meta parameters of the random line-network generator. Ranges are
/// inclusive `(min, max)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub n_lines: (u32, u32),
    pub line_length_px: (f64, f64),
    pub connection_angle_deg: Vec<f64>,
    pub point_spacing_px: (f64, f64),
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            n_lines: (1, 4),
            line_length_px: (16.0, 40.0),
            connection_angle_deg: vec![30.0, 45.0, 60.0, 90.0, 120.0, 135.0],
            point_spacing_px: (6.0, 16.0),
        }
    }
}

impl ClusterParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::DegenerateClusterParams(m));
        let (n0, n1) = self.n_lines;
        if n0 == 0 || n0 > n1 {
            return bad(format!("n_lines range {n0}..={n1}"));
        }
        for (name, (lo, hi)) in [
            ("line_length_px", self.line_length_px),
            ("point_spacing_px", self.point_spacing_px),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return bad(format!("{name} range {lo}..={hi}"));
            }
        }
        if self.connection_angle_deg.is_empty()
            || self
                .connection_angle_deg
                .iter()
                .any(|a| !(*a > 0.0 && *a < 180.0))
        {
            return bad("connection angles must lie in (0, 180)".into());
        }
        if self.point_spacing_px.1 > self.line_length_px.0 {
            return bad(format!(
                "point spacing up to {} exceeds the shortest line {}",
                self.point_spacing_px.1, self.line_length_px.0
            ));
        }
        Ok(())
    }
}

/// Lines plus the points placed along them. Point-like classes use a single
/// point and no lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterGeometry {
    pub lines: Vec<Segment>,
    pub points: Vec<Point>,
}

impl ClusterGeometry {
    /// Every segment after the first starts at an endpoint of an earlier one.
    pub fn is_connected(&self) -> bool {
        let mut ends: Vec<Point> = Vec::new();
        for (i, s) in self.lines.iter().enumerate() {
            if i > 0 && !ends.iter().any(|e| e.dist(s.p0) < 1e-9) {
                return false;
            }
            ends.push(s.p0);
            ends.push(s.p1);
        }
        true
    }

    pub fn points_on_lines(&self, tol: f64) -> bool {
        if self.lines.is_empty() {
            return self.points.len() == 1;
        }
        self.points
            .iter()
            .all(|&p| self.lines.iter().any(|s| s.distance_to(p) <= tol))
    }
}

pub fn gen_cluster_geometry<R: Rng + ?Sized>(
    params: &ClusterParams,
    rng: &mut R,
) -> Result<ClusterGeometry> {
    params.validate()?;
    let n_lines = rng.random_range(params.n_lines.0..=params.n_lines.1);
    let draw_len = |rng: &mut R| uniform(rng, params.line_length_px);

    let mut lines: Vec<Segment> = Vec::with_capacity(n_lines as usize);
    let mut headings: Vec<f64> = Vec::with_capacity(n_lines as usize);
    let heading = rng.random_range(0.0..std::f64::consts::TAU);
    let len = draw_len(rng);
    let origin = Point::new(0.0, 0.0);
    lines.push(Segment {
        p0: origin,
        p1: Point::new(len * heading.cos(), len * heading.sin()),
    });
    headings.push(heading);

    for _ in 1..n_lines {
        let k = rng.random_range(0..lines.len() * 2);
        let start = if k % 2 == 0 { lines[k / 2].p0 } else { lines[k / 2].p1 };
        let turn = params
            .connection_angle_deg
            .choose(rng)
            .copied()
            .unwrap_or(90.0)
            .to_radians();
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let heading = headings[k / 2] + sign * turn;
        let len = draw_len(rng);
        lines.push(Segment {
            p0: start,
            p1: Point::new(start.x + len * heading.cos(), start.y + len * heading.sin()),
        });
        headings.push(heading);
    }

    let mut points: Vec<Point> = Vec::new();
    for seg in &lines {
        let spacing = uniform(rng, params.point_spacing_px);
        let intervals = ((seg.length() / spacing).round() as usize).max(1);
        for i in 0..=intervals {
            let t = i as f64 / intervals as f64;
            let p = Point::new(
                seg.p0.x + t * (seg.p1.x - seg.p0.x),
                seg.p0.y + t * (seg.p1.y - seg.p0.y),
            );
            if !points.iter().any(|q| q.dist(p) < 1e-9) {
                points.push(p);
            }
        }
    }
    if points.len() < 2 {
        return Err(Error::DegenerateClusterParams(
            "fewer than two points".into(),
        ));
    }
    Ok(ClusterGeometry { lines, points })
}

/// Single point at the origin for single platforms and wind turbines.
pub fn gen_point_geometry(class: ObjectClass) -> Result<ClusterGeometry> {
    if class == ObjectClass::PlatformCluster {
        return Err(Error::ClusterPointGeometry);
    }
    Ok(ClusterGeometry {
        lines: Vec::new(),
        points: vec![Point::new(0.0, 0.0)],
    })
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}
