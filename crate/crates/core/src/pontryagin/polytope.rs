use alloc::vec::Vec;
use core::cmp::Ordering;
use core::ops::{Add, Mul, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        libm::hypot(self.x, self.y)
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self * rhs.x, self * rhs.y)
    }
}

/// 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn apply(&self, p: Vec2) -> Vec2 {
        let m = &self.0;
        Vec2::new(m[0][0] * p.x + m[0][1] * p.y, m[1][0] * p.x + m[1][1] * p.y)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[0.0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GeometryError {
    #[error("support function of an empty polytope")]
    Empty,
}

/// Convex polygon stored as its hull vertices, counterclockwise, starting
/// from the lowest `(x, y)` vertex. May be empty, a point or a segment.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Polytope2 {
    vertices: Vec<Vec2>,
}

fn lexical(a: &Vec2, b: &Vec2) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

impl Polytope2 {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Convex hull (monotone chain). Collinear and repeated points are
    /// dropped.
    pub fn hull(points: &[Vec2]) -> Self {
        let mut pts: Vec<Vec2> = points.to_vec();
        pts.sort_by(lexical);
        pts.dedup();
        if pts.len() <= 2 {
            return Self { vertices: pts };
        }

        let mut lower: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in &pts {
            while lower.len() >= 2 {
                let n = lower.len();
                if (lower[n - 1] - lower[n - 2]).cross(p - lower[n - 2]) <= 0.0 {
                    lower.pop();
                } else {
                    break;
                }
            }
            lower.push(p);
        }
        let mut upper: Vec<Vec2> = Vec::with_capacity(pts.len());
        for &p in pts.iter().rev() {
            while upper.len() >= 2 {
                let n = upper.len();
                if (upper[n - 1] - upper[n - 2]).cross(p - upper[n - 2]) <= 0.0 {
                    upper.pop();
                } else {
                    break;
                }
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self { vertices: lower }
    }

    pub fn point(p: Vec2) -> Self {
        Self {
            vertices: alloc::vec![p],
        }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// `max <p, x>` over the polytope.
    pub fn support(&self, direction: Vec2) -> Result<f64, GeometryError> {
        self.vertices
            .iter()
            .map(|v| v.dot(direction))
            .reduce(f64::max)
            .ok_or(GeometryError::Empty)
    }

    /// Hull of the image under a linear map.
    pub fn transform(&self, m: &Mat2) -> Self {
        let image: Vec<Vec2> = self.vertices.iter().map(|&v| m.apply(v)).collect();
        Self::hull(&image)
    }

    /// Twice the signed area (shoelace); zero for degenerate polytopes.
    pub fn double_area(&self) -> f64 {
        let n = self.vertices.len();
        (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum()
    }

    /// Point membership through the edge half-planes, with slack `tol`.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        match self.vertices.len() {
            0 => false,
            1 => (p - self.vertices[0]).norm() <= tol,
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let ab = b - a;
                let len = ab.norm();
                let along = (p - a).dot(ab) / (len * len);
                let dist = (p - a).cross(ab).abs() / len;
                dist <= tol && along >= -tol / len && along <= 1.0 + tol / len
            }
            n => (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let edge = b - a;
                edge.cross(p - a) >= -tol * edge.norm()
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_orders_counterclockwise() {
        let pts = [
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(0.2, 0.2),
            Vec2::new(0.5, 0.0),
        ];
        let p = Polytope2::hull(&pts);
        assert_eq!(
            p.vertices(),
            &[
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0)
            ]
        );
        assert!(p.double_area() > 0.0);
    }

    #[test]
    fn hull_degenerate_cases() {
        assert!(Polytope2::hull(&[]).is_empty());
        let same = Polytope2::hull(&[Vec2::ZERO, Vec2::ZERO]);
        assert_eq!(same.vertices(), &[Vec2::ZERO]);
        let seg = Polytope2::hull(&[Vec2::new(2.0, 2.0), Vec2::ZERO, Vec2::new(1.0, 1.0)]);
        assert_eq!(seg.vertices(), &[Vec2::ZERO, Vec2::new(2.0, 2.0)]);
    }

    #[test]
    fn triangle_support() {
        let tri = Polytope2::hull(&[Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]);
        assert_eq!(tri.support(Vec2::new(1.0, 0.0)), Ok(1.0));
        assert_eq!(tri.support(Vec2::new(-1.0, 0.0)), Ok(0.0));
        assert_eq!(
            Polytope2::empty().support(Vec2::new(1.0, 0.0)),
            Err(GeometryError::Empty)
        );
    }

    #[test]
    fn containment() {
        let tri = Polytope2::hull(&[Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]);
        assert!(tri.contains(Vec2::new(0.2, 0.2), 0.0));
        assert!(tri.contains(Vec2::new(0.5, 0.5), 1e-12));
        assert!(!tri.contains(Vec2::new(0.6, 0.6), 1e-12));
        let seg = Polytope2::hull(&[Vec2::ZERO, Vec2::new(2.0, 0.0)]);
        assert!(seg.contains(Vec2::new(1.0, 0.0), 1e-12));
        assert!(!seg.contains(Vec2::new(3.0, 0.0), 1e-12));
    }

    #[test]
    fn matrix_product() {
        let a = Mat2([[1.0, 2.0], [0.0, 1.0]]);
        let b = Mat2([[1.0, 3.0], [0.0, 1.0]]);
        assert_eq!(a * b, Mat2([[1.0, 5.0], [0.0, 1.0]]));
        assert_eq!(Mat2::IDENTITY * a, a);
    }
}
