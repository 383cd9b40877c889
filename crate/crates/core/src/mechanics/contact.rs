//! Penalty contact between finger segments (capsules) and rigid primitives.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;
use crate::hand::PalmSpec;
use crate::scalar::Real;

use super::ChainPose;

/// Rigid primitive in the hand frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields, bound = "T: Real")]
pub enum Shape<T> {
    Sphere {
        center_mm: [T; 3],
        radius_mm: T,
    },
    /// Capped cylinder.
    Cylinder {
        center_mm: [T; 3],
        axis: [T; 3],
        radius_mm: T,
        length_mm: T,
    },
    /// Axis-aligned box.
    Box {
        center_mm: [T; 3],
        size_mm: [T; 3],
    },
}

impl<T: Real> Shape<T> {
    pub fn center(&self) -> Vec3<T> {
        match self {
            Shape::Sphere { center_mm, .. } | Shape::Cylinder { center_mm, .. } | Shape::Box { center_mm, .. } => {
                Vec3::from_array(*center_mm)
            }
        }
    }

    /// Signed distance from `p` to the surface, negative inside.
    pub fn sdf(&self, p: Vec3<T>) -> T {
        let two = T::lit(2.0);
        match self {
            Shape::Sphere { center_mm, radius_mm } => p.distance(Vec3::from_array(*center_mm)) - *radius_mm,
            Shape::Cylinder { center_mm, axis, radius_mm, length_mm } => {
                let u = Vec3::from_array(*axis).normalized();
                let d = p - Vec3::from_array(*center_mm);
                let along = d.dot(u);
                let radial = (d - u * along).norm() - *radius_mm;
                let axial = along.abs() - *length_mm / two;
                let outside = Vec3::new(radial.max(T::zero()), axial.max(T::zero()), T::zero()).norm();
                radial.max(axial).min(T::zero()) + outside
            }
            Shape::Box { center_mm, size_mm } => {
                let d = p - Vec3::from_array(*center_mm);
                let q =
                    Vec3::new(d.x.abs() - size_mm[0] / two, d.y.abs() - size_mm[1] / two, d.z.abs() - size_mm[2] / two);
                let outside = q.map(|v| v.max(T::zero())).norm();
                q.x.max(q.y).max(q.z).min(T::zero()) + outside
            }
        }
    }

    /// Outward unit normal by central differences of the distance field.
    pub fn normal(&self, p: Vec3<T>) -> Vec3<T> {
        if let Shape::Sphere { center_mm, .. } = self {
            return (p - Vec3::from_array(*center_mm)).normalized();
        }
        let h = T::fd_step().sqrt() * T::lit(0.1);
        let e = |v: Vec3<T>| (self.sdf(p + v * h) - self.sdf(p - v * h)) / (h + h);
        Vec3::new(e(Vec3::unit_x()), e(Vec3::unit_y()), e(Vec3::unit_z())).normalized()
    }
}

/// What a contact acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Body {
    /// Segment index within a chain, proximal first.
    Segment(usize),
    Palm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Contact<T> {
    pub body: Body,
    /// Index of the scene object touched.
    pub object: usize,
    /// Point on the bone axis (or palm surface) the force acts through.
    pub point: Vec3<T>,
    pub penetration: T,
    /// Unit direction of the force on the hand (object outward normal).
    pub normal: Vec3<T>,
    pub force: T,
}

impl<T: Real> Contact<T> {
    pub fn force_vector(&self) -> Vec3<T> {
        self.normal * self.force
    }
}

/// Fixed obstacles plus the penalty law.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactScene<T> {
    pub objects: Vec<Shape<T>>,
    pub stiffness: T,
}

/// Golden-section minimiser of a unimodal function on `[lo, hi]`.
fn golden_min<T: Real>(mut lo: T, mut hi: T, f: impl Fn(T) -> T) -> (T, T) {
    let g = T::lit(0.618_033_988_749_894_9);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..90 {
        if hi - lo <= T::epsilon() * T::lit(4.0) {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    let t = (lo + hi) / T::lit(2.0);
    let ft = f(t);
    [(lo, f(lo)), (hi, f(hi)), (t, ft)].into_iter().fold((t, ft), |best, c| if c.1 < best.1 { c } else { best })
}

const LOAD_NODES: usize = 48;

/// Where along a segment the contact force acts: the centroid of the
/// squared penetration profile on fixed nodes, which moves smoothly with the
/// pose even when the segment lies flat on a face. Falls back to the deepest
/// point `t` when no node penetrates.
fn load_centre<T: Real>(t: T, pen: impl Fn(T) -> T) -> T {
    let n = T::lit(LOAD_NODES as f64);
    let (mut sw, mut swt) = (T::zero(), T::zero());
    for i in 0..LOAD_NODES {
        let s = (T::lit(i as f64) + T::lit(0.5)) / n;
        let p = pen(s).max(T::zero());
        sw = sw + p * p;
        swt = swt + p * p * s;
    }
    if sw > T::zero() {
        swt / sw
    } else {
        t
    }
}

impl<T: Real> ContactScene<T> {
    pub fn new(objects: Vec<Shape<T>>, stiffness: T) -> Self {
        Self { objects, stiffness }
    }

    pub fn empty(stiffness: T) -> Self {
        Self::new(Vec::new(), stiffness)
    }

    /// Contacts of a chain's capsules (`radius` around each bone).
    pub fn chain_contacts(&self, pose: &ChainPose<T>, radius: T) -> Vec<Contact<T>> {
        let mut out = Vec::new();
        for (oi, shape) in self.objects.iter().enumerate() {
            for (si, seg) in pose.segments.iter().enumerate() {
                // The distance field of a convex set is convex along a line.
                let (t, d) = golden_min(T::zero(), T::one(), |t| shape.sdf(seg.point(t)));
                let pen = radius - d;
                if pen > T::zero() {
                    let point = seg.point(load_centre(t, |s| radius - shape.sdf(seg.point(s))));
                    out.push(Contact {
                        body: Body::Segment(si),
                        object: oi,
                        point,
                        penetration: pen,
                        normal: shape.normal(point),
                        force: self.stiffness * pen,
                    });
                }
            }
        }
        out
    }

    /// Contacts between the objects and the palm rectangle at `z = 0`.
    pub fn palm_contacts(&self, palm: &PalmSpec<T>) -> Vec<Contact<T>> {
        let mut out = Vec::new();
        for (oi, shape) in self.objects.iter().enumerate() {
            let at = |x: T, y: T| shape.sdf(Vec3::new(x, y, T::zero()));
            let inner = |x: T| golden_min(palm.y_range[0], palm.y_range[1], |y| at(x, y));
            let (x, d) = golden_min(palm.x_range[0], palm.x_range[1], |x| inner(x).1);
            if d < T::zero() {
                let y = inner(x).0;
                let point = Vec3::new(x, y, T::zero());
                let pen = -d;
                out.push(Contact {
                    body: Body::Palm,
                    object: oi,
                    point,
                    penetration: pen,
                    normal: shape.normal(point),
                    force: self.stiffness * pen,
                });
            }
        }
        out
    }
}
