//! Planar primitives: points, discs, segments and simple polygons.
//!
//! Lengths are plain `f64` in world units. Feasibility checks use the
//! absolute tolerance [`LENGTH_TOL`].

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance applied to every length-valued feasibility check.
pub const LENGTH_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("lune undefined for coincident pair at ({x}, {y})")]
    DegenerateLune { x: f64, y: f64 },
    #[error("start point lies {excess:e} outside constraint disc {index}")]
    OutsideConstraint { index: usize, excess: f64 },
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
}

/// A position (or displacement) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn midpoint(self, other: Point2) -> Point2 {
        Point2::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        (n > 0.0).then(|| self * (1.0 / n))
    }

    /// Rescales `self` (a displacement) so its length is at most `max_len`.
    pub fn capped(self, max_len: f64) -> Point2 {
        let n = self.norm();
        if n > max_len && n > 0.0 {
            self * (max_len / n)
        } else {
            self
        }
    }

    pub fn lerp(self, to: Point2, s: f64) -> Point2 {
        self + (to - self) * s
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Point2 {
    fn add_assign(&mut self, rhs: Point2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Euclidean distance. Bitwise symmetric in its arguments.
pub fn distance(a: Point2, b: Point2) -> f64 {
    distance_sq(a, b).sqrt()
}

pub fn distance_sq(a: Point2, b: Point2) -> f64 {
    (a - b).norm_sq()
}

/// Closed disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Point2,
    pub radius: f64,
}

impl Disc {
    pub fn new(center: Point2, radius: f64) -> Self {
        debug_assert!(radius >= 0.0, "negative disc radius {radius}");
        Self { center, radius }
    }

    /// Signed amount by which `p` lies outside the disc (negative inside).
    pub fn excess(&self, p: Point2) -> f64 {
        distance(p, self.center) - self.radius
    }

    pub fn contains(&self, p: Point2, tol: f64) -> bool {
        self.excess(p) <= tol
    }

    /// Largest `s` in `[0, 1]` with `from + s * (to - from)` inside the disc,
    /// assuming `from` is inside. Solves the ray/circle quadratic.
    fn max_fraction(&self, from: Point2, to: Point2) -> f64 {
        let d = to - from;
        let f = from - self.center;
        let a = d.norm_sq();
        if a == 0.0 {
            return 1.0;
        }
        let half_b = f.dot(d);
        let c = f.norm_sq() - self.radius * self.radius;
        if c <= 0.0 && distance_sq(to, self.center) <= self.radius * self.radius {
            return 1.0;
        }
        let disc = half_b * half_b - a * c;
        if disc < 0.0 {
            return 0.0;
        }
        let sq = disc.sqrt();
        // Far root, written to avoid cancellation when half_b > 0.
        let s = if half_b > 0.0 {
            -c / (half_b + sq)
        } else {
            (sq - half_b) / a
        };
        s.clamp(0.0, 1.0)
    }
}

/// Closed line segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        distance(self.a, self.b)
    }
}

/// Simple polygon with counterclockwise vertex order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polygon {
    vertices: Vec<Point2>,
}

impl Polygon {
    /// Validates the vertex ring. Clockwise input is reversed to
    /// counterclockwise.
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeomError> {
        if vertices.len() < 3 {
            return Err(GeomError::InvalidPolygon(format!(
                "needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(GeomError::InvalidPolygon(format!("non-finite vertex {p}")));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(GeomError::InvalidPolygon(format!(
                    "consecutive vertices {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                // Adjacent edges share a vertex by construction.
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let e1 = Segment::new(vertices[i], vertices[(i + 1) % n]);
                let e2 = Segment::new(vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(&e1, &e2) {
                    return Err(GeomError::InvalidPolygon(format!(
                        "edges {i} and {j} intersect"
                    )));
                }
            }
        }
        let poly = Polygon { vertices };
        let area = poly.signed_area();
        if area == 0.0 {
            return Err(GeomError::InvalidPolygon("zero area".into()));
        }
        if area < 0.0 {
            let mut vertices = poly.vertices;
            vertices.reverse();
            return Ok(Polygon { vertices });
        }
        Ok(poly)
    }

    /// Axis-aligned rectangle from two opposite corners.
    pub fn rectangle(min: Point2, max: Point2) -> Result<Self, GeomError> {
        Polygon::new(vec![
            min,
            Point2::new(max.x, min.y),
            max,
            Point2::new(min.x, max.y),
        ])
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self
            .edges()
            .map(|e| e.a.cross(e.b))
            .sum::<f64>()
    }

    /// Even-odd point test; boundary points count as inside.
    pub fn contains(&self, p: Point2) -> bool {
        if self.edges().any(|e| point_on_segment(p, &e)) {
            return true;
        }
        let mut inside = false;
        for e in self.edges() {
            let (a, b) = (e.a, e.b);
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

impl<'de> Deserialize<'de> for Polygon {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let vertices = Vec::<Point2>::deserialize(de)?;
        Polygon::new(vertices).map_err(serde::de::Error::custom)
    }
}

fn orientation(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn point_on_segment(p: Point2, s: &Segment) -> bool {
    orientation(s.a, s.b, p) == 0.0
        && p.x >= s.a.x.min(s.b.x)
        && p.x <= s.a.x.max(s.b.x)
        && p.y >= s.a.y.min(s.b.y)
        && p.y <= s.a.y.max(s.b.y)
}

/// Closed segment intersection; touching and collinear overlap count.
pub fn segments_intersect(s: &Segment, t: &Segment) -> bool {
    let d1 = orientation(t.a, t.b, s.a);
    let d2 = orientation(t.a, t.b, s.b);
    let d3 = orientation(s.a, s.b, t.a);
    let d4 = orientation(s.a, s.b, t.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    point_on_segment(s.a, t)
        || point_on_segment(s.b, t)
        || point_on_segment(t.a, s)
        || point_on_segment(t.b, s)
}

/// Whether the segment touches or enters the polygon. Grazing contact with
/// an edge or vertex counts as intersecting.
pub fn segment_intersects_polygon(s: &Segment, poly: &Polygon) -> bool {
    poly.edges().any(|e| segments_intersect(s, &e)) || poly.contains(s.a) || poly.contains(s.b)
}

/// True iff `k` lies strictly inside the lune of the pair `(i, j)`: strictly
/// closer to both `i` and `j` than they are to each other.
pub fn in_lune(k: Point2, i: Point2, j: Point2) -> Result<bool, GeomError> {
    let dij = distance_sq(i, j);
    if dij == 0.0 {
        return Err(GeomError::DegenerateLune { x: i.x, y: i.y });
    }
    Ok(distance_sq(i, k) < dij && distance_sq(j, k) < dij)
}

/// Moves from `current` toward `target` as far as every disc allows.
///
/// Returns `current + s * (target - current)` for the largest `s` in `[0, 1]`
/// keeping the point inside all `constraints`. `current` must already be
/// inside each disc to within [`LENGTH_TOL`].
pub fn clamp_along_segment(
    current: Point2,
    target: Point2,
    constraints: &[Disc],
) -> Result<Point2, GeomError> {
    let mut s = 1.0_f64;
    for (index, disc) in constraints.iter().enumerate() {
        let excess = disc.excess(current);
        if excess > LENGTH_TOL {
            return Err(GeomError::OutsideConstraint { index, excess });
        }
        s = s.min(disc.max_fraction(current, target));
    }
    if s >= 1.0 {
        Ok(target)
    } else {
        Ok(current.lerp(target, s))
    }
}
