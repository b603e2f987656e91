//! Integral 2-currents as oriented triangle meshes with integer
//! multiplicities, and their 1-dimensional slices.

use std::collections::BTreeMap;

use crate::calibrations::FormField;
use crate::exterior::{dot, norm};
use crate::quad::TRI7;
use crate::{invalid, par, Error, Result};

/// Triangles below this area are rejected on load.
pub const MIN_AREA: f64 = 1e-14;
/// Vertices closer than this to a slicing sphere make the radius irregular.
pub const SLICE_REGULARITY: f64 = 1e-12;
/// Crossing leaves are accepted once their longest edge is below this
/// fraction of the smallest clipping radius.
pub const LEAF_REL: f64 = 0.01;
const MAX_DEPTH: usize = 48;

#[derive(Debug, Clone)]
struct TriGeom {
    area: f64,
    e1: Vec<f64>,
    e2: Vec<f64>,
    centroid: Vec<f64>,
    radius: f64,
}

/// An oriented triangulated 2-current in R^m.
#[derive(Debug, Clone)]
pub struct TriCurrent {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    tris: Vec<[usize; 3]>,
    mult: Vec<i64>,
    /// The current is the mesh restricted to the intersection of these balls.
    restrict: Vec<(Vec<f64>, f64)>,
    geom: Vec<TriGeom>,
    h: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Full,
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    /// Points y = x - center with dist(y, union of complex lines) > eps |y|.
    /// Each direction is a unit vector w; its line is span(w, J0 w).
    ConeComplement { center: Vec<f64>, dirs: Vec<Vec<f64>>, eps: f64 },
}

impl Region {
    pub fn ball(center: &[f64], radius: f64) -> Self {
        Region::Ball { center: center.to_vec(), radius }
    }

    pub fn annulus(center: &[f64], inner: f64, outer: f64) -> Self {
        Region::Annulus { center: center.to_vec(), inner, outer }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        let chk = |c: &Vec<f64>| {
            if c.len() != m {
                Err(Error::DimensionMismatch(c.len(), m))
            } else {
                Ok(())
            }
        };
        match self {
            Region::Full => Ok(()),
            Region::Ball { center, radius } => {
                chk(center)?;
                if !(*radius > 0.0) {
                    return invalid(format!("ball radius {radius} must be positive"));
                }
                Ok(())
            }
            Region::Annulus { center, inner, outer } => {
                chk(center)?;
                if !(*inner >= 0.0 && inner < outer) {
                    return invalid(format!("annulus needs 0 <= inner < outer, got {inner}, {outer}"));
                }
                Ok(())
            }
            Region::ConeComplement { center, dirs, eps } => {
                chk(center)?;
                if !(*eps > 0.0 && *eps < 1.0) {
                    return invalid(format!("cone aperture {eps} not in (0,1)"));
                }
                for d in dirs {
                    chk(d)?;
                }
                Ok(())
            }
        }
    }

    fn constraints(&self) -> Vec<Constraint> {
        match self {
            Region::Full => vec![],
            Region::Ball { center, radius } => vec![Constraint::InBall(center.clone(), *radius)],
            Region::Annulus { center, inner, outer } => {
                let mut v = vec![Constraint::InBall(center.clone(), *outer)];
                if *inner > 0.0 {
                    v.push(Constraint::OutBall(center.clone(), *inner));
                }
                v
            }
            Region::ConeComplement { center, dirs, eps } => {
                let planes = dirs
                    .iter()
                    .map(|w| {
                        let w: Vec<f64> = w.iter().map(|c| c / norm(w)).collect();
                        let jw = crate::exterior::j0(&w);
                        (w, jw)
                    })
                    .collect();
                vec![Constraint::OutCone(center.clone(), planes, *eps)]
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Constraint {
    InBall(Vec<f64>, f64),
    OutBall(Vec<f64>, f64),
    OutCone(Vec<f64>, Vec<(Vec<f64>, Vec<f64>)>, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Class {
    Inside,
    Outside,
    Crossing,
}

impl Constraint {
    /// Negative inside.
    fn level(&self, x: &[f64]) -> f64 {
        match self {
            Constraint::InBall(c, r) => dist(x, c) - r,
            Constraint::OutBall(c, r) => r - dist(x, c),
            Constraint::OutCone(c, planes, eps) => {
                let y: Vec<f64> = x.iter().zip(c).map(|(a, b)| a - b).collect();
                let ny = norm(&y);
                let dmin = planes
                    .iter()
                    .map(|(w, jw)| {
                        let a = dot(&y, w);
                        let b = dot(&y, jw);
                        (ny * ny - a * a - b * b).max(0.0).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min);
                let dmin = if planes.is_empty() { ny } else { dmin };
                eps * ny - dmin
            }
        }
    }

    fn classify(&self, p: [&[f64]; 3]) -> Class {
        match self {
            Constraint::InBall(c, r) => {
                if p.iter().all(|v| dist(v, c) <= *r) {
                    Class::Inside
                } else if dist_point_triangle(c, p[0], p[1], p[2]) >= *r {
                    Class::Outside
                } else {
                    Class::Crossing
                }
            }
            Constraint::OutBall(c, r) => {
                if p.iter().all(|v| dist(v, c) <= *r) {
                    Class::Outside
                } else if dist_point_triangle(c, p[0], p[1], p[2]) >= *r {
                    Class::Inside
                } else {
                    Class::Crossing
                }
            }
            Constraint::OutCone(..) => {
                let m = p[0].len();
                let cen: Vec<f64> = (0..m).map(|k| (p[0][k] + p[1][k] + p[2][k]) / 3.0).collect();
                let f = [self.level(p[0]), self.level(p[1]), self.level(p[2]), self.level(&cen)];
                if f.iter().all(|v| *v < 0.0) {
                    Class::Inside
                } else if f.iter().all(|v| *v >= 0.0) {
                    Class::Outside
                } else {
                    Class::Crossing
                }
            }
        }
    }

    fn scale(&self) -> f64 {
        match self {
            Constraint::InBall(_, r) | Constraint::OutBall(_, r) => *r,
            Constraint::OutCone(..) => f64::INFINITY,
        }
    }

    /// Point where the segment a-b crosses the constraint boundary.
    fn cut(&self, a: &[f64], b: &[f64], fa: f64, fb: f64) -> Vec<f64> {
        let t = match self {
            Constraint::InBall(c, r) | Constraint::OutBall(c, r) => {
                segment_sphere(a, b, c, *r).unwrap_or(fa / (fa - fb))
            }
            Constraint::OutCone(..) => fa / (fa - fb),
        };
        a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Parameter t in [0,1] where |a + t(b-a) - c| = r, for a and b on opposite sides.
fn segment_sphere(a: &[f64], b: &[f64], c: &[f64], r: f64) -> Option<f64> {
    let d = sub(b, a);
    let ac = sub(a, c);
    let aa = dot(&d, &d);
    let bb = dot(&ac, &d);
    let cc = dot(&ac, &ac) - r * r;
    let disc = bb * bb - aa * cc;
    if aa == 0.0 || disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t1 = (-bb - sq) / aa;
    let t2 = (-bb + sq) / aa;
    let in_a = cc <= 0.0;
    let t = if in_a { t2 } else { t1 };
    if (0.0..=1.0).contains(&t) {
        Some(t)
    } else {
        None
    }
}

/// Where the closest point of a triangle to a query point lies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Feature {
    Vertex(usize),
    /// Edge opposite the given local vertex index.
    Edge(usize),
    Face,
}

/// Closest point on triangle abc to p in R^m, with barycentric coordinates.
pub fn closest_point_triangle(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> ([f64; 3], Feature) {
    // all dot products against differences, without temporaries
    let (mut d1, mut d2, mut d3, mut d4, mut d5, mut d6) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..p.len() {
        let ab = b[k] - a[k];
        let ac = c[k] - a[k];
        let ap = p[k] - a[k];
        let bp = p[k] - b[k];
        let cp = p[k] - c[k];
        d1 += ab * ap;
        d2 += ac * ap;
        d3 += ab * bp;
        d4 += ac * bp;
        d5 += ab * cp;
        d6 += ac * cp;
    }
    if d1 <= 0.0 && d2 <= 0.0 {
        return ([1.0, 0.0, 0.0], Feature::Vertex(0));
    }
    if d3 >= 0.0 && d4 <= d3 {
        return ([0.0, 1.0, 0.0], Feature::Vertex(1));
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return ([1.0 - v, v, 0.0], Feature::Edge(2));
    }
    if d6 >= 0.0 && d5 <= d6 {
        return ([0.0, 0.0, 1.0], Feature::Vertex(2));
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return ([1.0 - w, 0.0, w], Feature::Edge(1));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return ([0.0, 1.0 - w, w], Feature::Edge(0));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    ([1.0 - v - w, v, w], Feature::Face)
}

pub fn dist_point_triangle(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let (l, _) = closest_point_triangle(p, a, b, c);
    (0..p.len())
        .map(|k| {
            let q = l[0] * a[k] + l[1] * b[k] + l[2] * c[k];
            (p[k] - q) * (p[k] - q)
        })
        .sum::<f64>()
        .sqrt()
}

fn tri_area(p: [&[f64]; 3]) -> f64 {
    let u = sub(p[1], p[0]);
    let v = sub(p[2], p[0]);
    let uu = dot(&u, &u);
    let vv = dot(&v, &v);
    let uv = dot(&u, &v);
    0.5 * (uu * vv - uv * uv).max(0.0).sqrt()
}

/// Area of the planar triangle p0 p1 p2 inside the ball B_r(c).
fn tri_ball_area(p: [&[f64]; 3], e1: &[f64], e2: &[f64], c: &[f64], r: f64) -> f64 {
    let to2 = |x: &[f64]| -> [f64; 2] {
        let d = sub(x, p[0]);
        [dot(&d, e1), dot(&d, e2)]
    };
    let cd = sub(c, p[0]);
    let c2 = [dot(&cd, e1), dot(&cd, e2)];
    let off2 = dot(&cd, &cd) - c2[0] * c2[0] - c2[1] * c2[1];
    let rho2 = r * r - off2.max(0.0);
    if rho2 <= 0.0 {
        return 0.0;
    }
    let rho = rho2.sqrt();
    let q: Vec<[f64; 2]> = p.iter().map(|x| {
        let y = to2(x);
        [y[0] - c2[0], y[1] - c2[1]]
    }).collect();
    let s = seg_disk_area(q[0], q[1], rho) + seg_disk_area(q[1], q[2], rho) + seg_disk_area(q[2], q[0], rho);
    s.abs()
}

/// Signed area of triangle (0, a, b) intersected with the disk of radius r.
fn seg_disk_area(a: [f64; 2], b: [f64; 2], r: f64) -> f64 {
    let cross = |p: [f64; 2], q: [f64; 2]| p[0] * q[1] - p[1] * q[0];
    let sector = |p: [f64; 2], q: [f64; 2]| 0.5 * r * r * cross(p, q).atan2(p[0] * q[0] + p[1] * q[1]);
    let d = [b[0] - a[0], b[1] - a[1]];
    let aa = d[0] * d[0] + d[1] * d[1];
    if aa == 0.0 {
        return 0.0;
    }
    let bb = a[0] * d[0] + a[1] * d[1];
    let cc = a[0] * a[0] + a[1] * a[1] - r * r;
    let disc = bb * bb - aa * cc;
    if disc <= 0.0 {
        return sector(a, b);
    }
    let sq = disc.sqrt();
    let t1 = (-bb - sq) / aa;
    let t2 = (-bb + sq) / aa;
    if t1 >= 1.0 || t2 <= 0.0 {
        return sector(a, b);
    }
    let t1c = t1.max(0.0);
    let t2c = t2.min(1.0);
    let p1 = [a[0] + t1c * d[0], a[1] + t1c * d[1]];
    let p2 = [a[0] + t2c * d[0], a[1] + t2c * d[1]];
    let mut s = 0.5 * cross(p1, p2);
    if t1 > 0.0 {
        s += sector(a, p1);
    }
    if t2 < 1.0 {
        s += sector(p2, b);
    }
    s
}

type Tri = [Vec<f64>; 3];

/// Triangle pieces approximating tri ∩ {all constraints}: bisect crossing
/// triangles along the longest edge, then clip small leaves by straight cuts.
fn clip_pieces(root: Tri, cons: &[Constraint]) -> Vec<Tri> {
    let rmin = cons.iter().map(|c| c.scale()).fold(f64::INFINITY, f64::min);
    let root_edge = longest_edge(&root).1;
    let leaf = if rmin.is_finite() { LEAF_REL * rmin } else { root_edge / 16.0 };
    let mut out = Vec::new();
    let mut stack = vec![(root, 0usize)];
    while let Some((t, depth)) = stack.pop() {
        let p = [t[0].as_slice(), t[1].as_slice(), t[2].as_slice()];
        let mut class = Class::Inside;
        for c in cons {
            match c.classify(p) {
                Class::Outside => {
                    class = Class::Outside;
                    break;
                }
                Class::Crossing => class = Class::Crossing,
                Class::Inside => {}
            }
        }
        match class {
            Class::Outside => {}
            Class::Inside => out.push(t),
            Class::Crossing => {
                let (k, len) = longest_edge(&t);
                if len <= leaf || depth >= MAX_DEPTH {
                    out.extend(straight_clip(&t, cons));
                } else {
                    let (a, b) = bisect(&t, k);
                    stack.push((b, depth + 1));
                    stack.push((a, depth + 1));
                }
            }
        }
    }
    out
}

fn longest_edge(t: &Tri) -> (usize, f64) {
    let l = [dist(&t[1], &t[2]), dist(&t[2], &t[0]), dist(&t[0], &t[1])];
    let mut k = 0;
    for i in 1..3 {
        if l[i] > l[k] {
            k = i;
        }
    }
    (k, l[k])
}

/// Split across the edge opposite local vertex k, keeping orientation.
fn bisect(t: &Tri, k: usize) -> (Tri, Tri) {
    let a = &t[k];
    let b = &t[(k + 1) % 3];
    let c = &t[(k + 2) % 3];
    let mid: Vec<f64> = b.iter().zip(c).map(|(x, y)| 0.5 * (x + y)).collect();
    ([a.clone(), b.clone(), mid.clone()], [a.clone(), mid, c.clone()])
}

fn straight_clip(t: &Tri, cons: &[Constraint]) -> Vec<Tri> {
    let mut poly: Vec<Vec<f64>> = t.to_vec();
    for c in cons {
        if poly.len() < 3 {
            break;
        }
        let f: Vec<f64> = poly.iter().map(|x| c.level(x)).collect();
        let mut next = Vec::new();
        for i in 0..poly.len() {
            let j = (i + 1) % poly.len();
            let (fi, fj) = (f[i], f[j]);
            if fi <= 0.0 {
                next.push(poly[i].clone());
            }
            if (fi <= 0.0) != (fj <= 0.0) {
                next.push(c.cut(&poly[i], &poly[j], fi, fj));
            }
        }
        poly = next;
    }
    let mut out = Vec::new();
    for i in 1..poly.len().saturating_sub(1) {
        let tri = [poly[0].clone(), poly[i].clone(), poly[i + 1].clone()];
        if tri_area([&tri[0], &tri[1], &tri[2]]) > 0.0 {
            out.push(tri);
        }
    }
    out
}

/// TRI7 on a triangle given by points.
fn tri7(t: &Tri, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let area = tri_area([&t[0], &t[1], &t[2]]);
    let m = t[0].len();
    let mut s = 0.0;
    let mut x = vec![0.0; m];
    for (b, w) in TRI7.iter() {
        for k in 0..m {
            x[k] = b[0] * t[0][k] + b[1] * t[1][k] + b[2] * t[2][k];
        }
        s += w * f(&x);
    }
    s * area
}

/// TRI7 after one uniform midpoint split into four.
fn tri7_split(t: &Tri, f: &dyn Fn(&[f64]) -> f64) -> f64 {
    let mid = |a: &Vec<f64>, b: &Vec<f64>| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect() };
    let m01 = mid(&t[0], &t[1]);
    let m12 = mid(&t[1], &t[2]);
    let m20 = mid(&t[2], &t[0]);
    let kids = [
        [t[0].clone(), m01.clone(), m20.clone()],
        [m01.clone(), t[1].clone(), m12.clone()],
        [m20.clone(), m12.clone(), t[2].clone()],
        [m12, m20, m01],
    ];
    kids.iter().map(|k| tri7(k, f)).sum()
}

impl TriCurrent {
    /// Build from vertices, index triples and nonzero multiplicities.
    /// Negative multiplicities are turned into reversed orientation.
    pub fn new(dim: usize, vertices: Vec<Vec<f64>>, tris: Vec<[usize; 3]>, mult: Vec<i64>) -> Result<Self> {
        if dim == 0 || dim % 2 == 1 || dim > crate::exterior::MAX_DIM {
            return invalid(format!("ambient dimension {dim} must be even and at most 12"));
        }
        if tris.len() != mult.len() {
            return invalid("one multiplicity per triangle required");
        }
        for (i, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return invalid(format!("vertex {i} has {} coordinates, expected {dim}", v.len()));
            }
            if v.iter().any(|c| !c.is_finite()) {
                return invalid(format!("vertex {i} is not finite"));
            }
        }
        let mut tris = tris;
        let mut mult = mult;
        for (i, (t, m)) in tris.iter_mut().zip(mult.iter_mut()).enumerate() {
            if t.iter().any(|&k| k >= vertices.len()) {
                return invalid(format!("triangle {i} references a missing vertex"));
            }
            if *m == 0 {
                return invalid(format!("triangle {i} has multiplicity 0"));
            }
            if *m < 0 {
                t.swap(1, 2);
                *m = -*m;
            }
        }
        let mut geom = Vec::with_capacity(tris.len());
        let mut h: f64 = 0.0;
        for (i, t) in tris.iter().enumerate() {
            let p = [&vertices[t[0]][..], &vertices[t[1]][..], &vertices[t[2]][..]];
            let area = tri_area(p);
            if !(area >= MIN_AREA) {
                return Err(Error::DegenerateTriangle(i, area));
            }
            let u = sub(p[1], p[0]);
            let nu = norm(&u);
            let e1: Vec<f64> = u.iter().map(|c| c / nu).collect();
            let v = sub(p[2], p[0]);
            let pv = dot(&v, &e1);
            let w: Vec<f64> = v.iter().zip(&e1).map(|(a, b)| a - pv * b).collect();
            let nw = norm(&w);
            let e2: Vec<f64> = w.iter().map(|c| c / nw).collect();
            let centroid: Vec<f64> = (0..dim).map(|k| (p[0][k] + p[1][k] + p[2][k]) / 3.0).collect();
            let radius = p.iter().map(|x| dist(x, &centroid)).fold(0.0, f64::max);
            h = h.max(dist(p[0], p[1])).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
            geom.push(TriGeom { area, e1, e2, centroid, radius });
        }
        Ok(TriCurrent { dim, vertices, tris, mult, restrict: Vec::new(), geom, h })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_triangles(&self) -> usize {
        self.tris.len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.tris
    }

    pub fn multiplicities(&self) -> &[i64] {
        &self.mult
    }

    pub fn restrictions(&self) -> &[(Vec<f64>, f64)] {
        &self.restrict
    }

    /// Longest mesh edge.
    pub fn mesh_size(&self) -> f64 {
        self.h
    }

    /// Orthonormal oriented frame (e1, e2) of triangle t; its 2-vector is e1 ^ e2.
    pub fn frame(&self, t: usize) -> (&[f64], &[f64]) {
        (&self.geom[t].e1, &self.geom[t].e2)
    }

    /// Centroid and circumscribing radius about it.
    pub fn bounding_sphere(&self, t: usize) -> (&[f64], f64) {
        (&self.geom[t].centroid, self.geom[t].radius)
    }

    pub fn area(&self, t: usize) -> f64 {
        self.geom[t].area
    }

    pub fn points(&self, t: usize) -> [&[f64]; 3] {
        let k = self.tris[t];
        [&self.vertices[k[0]], &self.vertices[k[1]], &self.vertices[k[2]]]
    }

    fn all_constraints(&self, region: &Region) -> Vec<Constraint> {
        let mut cons: Vec<Constraint> = self.restrict.iter().map(|(c, r)| Constraint::InBall(c.clone(), *r)).collect();
        cons.extend(region.constraints());
        cons
    }

    fn quick_class(&self, t: usize, cons: &[Constraint]) -> Class {
        let g = &self.geom[t];
        let mut class = Class::Inside;
        for c in cons {
            let k = match c {
                Constraint::InBall(cc, r) => {
                    let d = dist(&g.centroid, cc);
                    if d + g.radius <= *r {
                        Class::Inside
                    } else if d - g.radius >= *r {
                        Class::Outside
                    } else {
                        c.classify(self.points(t))
                    }
                }
                Constraint::OutBall(cc, r) => {
                    let d = dist(&g.centroid, cc);
                    if d - g.radius >= *r {
                        Class::Inside
                    } else if d + g.radius <= *r {
                        Class::Outside
                    } else {
                        c.classify(self.points(t))
                    }
                }
                _ => c.classify(self.points(t)),
            };
            match k {
                Class::Outside => return Class::Outside,
                Class::Crossing => class = Class::Crossing,
                Class::Inside => {}
            }
        }
        class
    }

    /// Concentric ball constraints reduce to an (inner, outer) pair.
    fn concentric(&self, cons: &[Constraint]) -> Option<(Vec<f64>, f64, f64)> {
        let mut center: Option<&Vec<f64>> = None;
        let mut outer = f64::INFINITY;
        let mut inner: f64 = 0.0;
        for c in cons {
            let (cc, r, is_in) = match c {
                Constraint::InBall(cc, r) => (cc, *r, true),
                Constraint::OutBall(cc, r) => (cc, *r, false),
                Constraint::OutCone(..) => return None,
            };
            match center {
                None => center = Some(cc),
                Some(c0) if c0 == cc => {}
                Some(_) => return None,
            }
            if is_in {
                outer = outer.min(r);
            } else {
                inner = inner.max(r);
            }
        }
        Some((center?.clone(), inner, outer))
    }

    fn tri_ball_area_idx(&self, t: usize, c: &[f64], r: f64) -> f64 {
        if !r.is_finite() {
            return self.geom[t].area;
        }
        match self.quick_class(t, &[Constraint::InBall(c.to_vec(), r)]) {
            Class::Inside => self.geom[t].area,
            Class::Outside => 0.0,
            Class::Crossing => tri_ball_area(self.points(t), &self.geom[t].e1, &self.geom[t].e2, c, r),
        }
    }

    /// Unsigned area of triangle t inside the region (restriction included).
    fn tri_mass(&self, t: usize, cons: &[Constraint]) -> f64 {
        if cons.is_empty() {
            return self.geom[t].area;
        }
        if let Some((c, inner, outer)) = self.concentric(cons) {
            if inner >= outer {
                return 0.0;
            }
            let a = self.tri_ball_area_idx(t, &c, outer);
            let b = if inner > 0.0 { self.tri_ball_area_idx(t, &c, inner) } else { 0.0 };
            return (a - b).max(0.0);
        }
        match self.quick_class(t, cons) {
            Class::Inside => self.geom[t].area,
            Class::Outside => 0.0,
            Class::Crossing => {
                let root = self.tri_owned(t);
                clip_pieces(root, cons).iter().map(|p| tri_area([&p[0], &p[1], &p[2]])).sum()
            }
        }
    }

    fn tri_owned(&self, t: usize) -> Tri {
        let p = self.points(t);
        [p[0].to_vec(), p[1].to_vec(), p[2].to_vec()]
    }

    /// M(C ⌞ R). Balls and annuli are clipped exactly per flat triangle;
    /// cone regions are clipped by adaptive bisection.
    pub fn mass(&self, region: &Region) -> Result<f64> {
        region.validate(self.dim)?;
        let cons = self.all_constraints(region);
        let per = par::map_range(self.tris.len(), |t| self.mult[t] as f64 * self.tri_mass(t, &cons));
        Ok(par::sum(&per))
    }

    pub fn total_mass(&self) -> f64 {
        self.mass(&Region::Full).expect("full region")
    }

    /// Sum over triangles of multiplicity times the integral of f(t, x)
    /// over the part of triangle t inside the region.
    pub fn integrate<F>(&self, region: &Region, f: F) -> Result<f64>
    where
        F: Fn(usize, &[f64]) -> f64 + Sync + Send,
    {
        region.validate(self.dim)?;
        let cons = self.all_constraints(region);
        let per = par::map_range(self.tris.len(), |t| {
            let g = |x: &[f64]| f(t, x);
            let v = match self.quick_class(t, &cons) {
                Class::Outside => 0.0,
                Class::Inside => tri7_split(&self.tri_owned(t), &g),
                Class::Crossing => clip_pieces(self.tri_owned(t), &cons).iter().map(|p| tri7(p, &g)).sum(),
            };
            self.mult[t] as f64 * v
        });
        Ok(par::sum(&per))
    }

    /// <C ⌞ R, psi>.
    pub fn pair(&self, psi: &dyn FormField, region: &Region) -> Result<f64> {
        if psi.dim() != self.dim {
            return Err(Error::DimensionMismatch(psi.dim(), self.dim));
        }
        region.validate(self.dim)?;
        if let Some(w) = psi.constant() {
            let cons = self.all_constraints(region);
            let per = par::map_range(self.tris.len(), |t| {
                let (e1, e2) = self.frame(t);
                self.mult[t] as f64 * w.on_pair(e1, e2) * self.tri_mass(t, &cons)
            });
            return Ok(par::sum(&per));
        }
        let err = std::sync::Mutex::new(None);
        let v = self.integrate(region, |t, x| match psi.eval(x) {
            Ok(w) => {
                let (e1, e2) = self.frame(t);
                w.on_pair(e1, e2)
            }
            Err(e) => {
                *err.lock().unwrap() = Some(e);
                0.0
            }
        })?;
        if let Some(e) = err.into_inner().unwrap() {
            return Err(e);
        }
        Ok(v)
    }

    /// Signed edge sum of the underlying mesh (restrictions are ignored).
    pub fn boundary(&self) -> Polyline1Current {
        let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        for (t, m) in self.tris.iter().zip(&self.mult) {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if a < b {
                    *acc.entry((a, b)).or_insert(0) += m;
                } else {
                    *acc.entry((b, a)).or_insert(0) -= m;
                }
            }
        }
        let mut used: BTreeMap<usize, usize> = BTreeMap::new();
        let mut points = Vec::new();
        let mut segs = Vec::new();
        for ((a, b), m) in acc {
            if m == 0 {
                continue;
            }
            let mut id = |v: usize, points: &mut Vec<Vec<f64>>| {
                *used.entry(v).or_insert_with(|| {
                    points.push(self.vertices[v].clone());
                    points.len() - 1
                })
            };
            let ia = id(a, &mut points);
            let ib = id(b, &mut points);
            segs.push(Segment { a: ia, b: ib, mult: m, tri: None });
        }
        Polyline1Current::new(self.dim, points, segs)
    }

    /// Boundary mass divided by mass; zero for a cycle.
    pub fn cycle_defect(&self) -> f64 {
        self.boundary().mass() / self.total_mass()
    }

    /// Push forward by x -> (x - x0)/r and restrict to the unit ball.
    pub fn dilate(&self, x0: &[f64], r: f64) -> Result<TriCurrent> {
        if !(r > 0.0) {
            return invalid(format!("dilation radius {r} must be positive"));
        }
        if x0.len() != self.dim {
            return Err(Error::DimensionMismatch(x0.len(), self.dim));
        }
        let map = |v: &[f64]| -> Vec<f64> { v.iter().zip(x0).map(|(a, b)| (a - b) / r).collect() };
        let mut keep_v: BTreeMap<usize, usize> = BTreeMap::new();
        let mut vertices = Vec::new();
        let mut tris = Vec::new();
        let mut mult = Vec::new();
        for (t, tri) in self.tris.iter().enumerate() {
            let g = &self.geom[t];
            if (dist(&g.centroid, x0) - g.radius) / r >= 1.0 {
                continue;
            }
            if dist_point_triangle(x0, self.points(t)[0], self.points(t)[1], self.points(t)[2]) >= r {
                continue;
            }
            let mut nt = [0usize; 3];
            for k in 0..3 {
                let v = tri[k];
                nt[k] = *keep_v.entry(v).or_insert_with(|| {
                    vertices.push(map(&self.vertices[v]));
                    vertices.len() - 1
                });
            }
            tris.push(nt);
            mult.push(self.mult[t]);
        }
        let mut out = TriCurrent::new(self.dim, vertices, tris, mult).or_else(|e| match e {
            // scaled-down degenerate pieces: fall back to dropping them
            Error::DegenerateTriangle(..) => invalid("dilation produced a degenerate triangle"),
            other => Err(other),
        })?;
        out.restrict = self.restrict.iter().map(|(c, rr)| (map(c), rr / r)).collect();
        out.restrict.push((vec![0.0; self.dim], 1.0));
        Ok(out)
    }

    /// Smallest distance from p to the mesh.
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        let d = par::map_range(self.tris.len(), |t| {
            let q = self.points(t);
            dist_point_triangle(p, q[0], q[1], q[2])
        });
        d.into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Slice by the sphere |x - x0| = rho.
    pub fn slice_sphere(&self, x0: &[f64], rho: f64) -> Result<Slice> {
        if !(rho > 0.0) {
            return invalid(format!("slice radius {rho} must be positive"));
        }
        if x0.len() != self.dim {
            return Err(Error::DimensionMismatch(x0.len(), self.dim));
        }
        for k in 0..=5 {
            let r = rho * (1.0 + k as f64 * 1e-10);
            let irregular = self.tris.iter().enumerate().any(|(t, tri)| {
                let g = &self.geom[t];
                let d = dist(&g.centroid, x0);
                if (d - r).abs() > g.radius + SLICE_REGULARITY {
                    return false;
                }
                tri.iter().any(|&v| (dist(&self.vertices[v], x0) - r).abs() <= SLICE_REGULARITY)
            });
            if !irregular {
                return Ok(Slice { curve: self.slice_at(x0, r), rho: r, perturbations: k });
            }
        }
        Err(Error::IrregularSlice(rho))
    }

    fn slice_at(&self, x0: &[f64], rho: f64) -> Polyline1Current {
        let inside_restrict = |x: &[f64]| self.restrict.iter().all(|(c, r)| dist(x, c) <= *r);
        let found = par::map_range(self.tris.len(), |t| {
            let g = &self.geom[t];
            let d = dist(&g.centroid, x0);
            if (d - rho).abs() > g.radius {
                return None;
            }
            let tri = self.tris[t];
            let f: Vec<f64> = tri.iter().map(|&v| dist(&self.vertices[v], x0) - rho).collect();
            let ins: Vec<bool> = f.iter().map(|v| *v < 0.0).collect();
            if ins.iter().all(|x| *x) || ins.iter().all(|x| !*x) {
                return None;
            }
            let mut exit = None;
            let mut entry = None;
            for k in 0..3 {
                let (i, j) = (k, (k + 1) % 3);
                if ins[i] && !ins[j] {
                    exit = Some((tri[i], tri[j]));
                }
                if !ins[i] && ins[j] {
                    entry = Some((tri[i], tri[j]));
                }
            }
            Some((t, exit?, entry?))
        });
        let mut key_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut points: Vec<Vec<f64>> = Vec::new();
        let mut segs = Vec::new();
        let mut point_for = |a: usize, b: usize, points: &mut Vec<Vec<f64>>| -> usize {
            let key = (a.min(b), a.max(b));
            *key_of.entry(key).or_insert_with(|| {
                let (p, q) = (&self.vertices[key.0], &self.vertices[key.1]);
                let t = segment_sphere(p, q, x0, rho).unwrap_or(0.5);
                points.push(p.iter().zip(q.iter()).map(|(x, y)| x + t * (y - x)).collect());
                points.len() - 1
            })
        };
        for (t, exit, entry) in found.into_iter().flatten() {
            let a = point_for(exit.0, exit.1, &mut points);
            let b = point_for(entry.0, entry.1, &mut points);
            if !self.restrict.is_empty() {
                let mid: Vec<f64> = points[a].iter().zip(&points[b]).map(|(x, y)| 0.5 * (x + y)).collect();
                if !inside_restrict(&mid) {
                    continue;
                }
            }
            segs.push(Segment { a, b, mult: self.mult[t], tri: Some(t) });
        }
        Polyline1Current::new(self.dim, points, segs)
    }
}

#[derive(Debug, Clone)]
pub struct Slice {
    pub curve: Polyline1Current,
    /// Radius actually used after any regularity perturbation.
    pub rho: f64,
    pub perturbations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub a: usize,
    pub b: usize,
    pub mult: i64,
    /// Source triangle for slice segments.
    pub tri: Option<usize>,
}

/// Oriented polygonal 1-current.
#[derive(Debug, Clone)]
pub struct Polyline1Current {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub segs: Vec<Segment>,
}

impl Polyline1Current {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, segs: Vec<Segment>) -> Self {
        let segs = segs
            .into_iter()
            .filter(|s| s.mult != 0)
            .map(|s| if s.mult < 0 { Segment { a: s.b, b: s.a, mult: -s.mult, tri: s.tri } } else { s })
            .collect();
        Polyline1Current { dim, points, segs }
    }

    pub fn len(&self, s: &Segment) -> f64 {
        dist(&self.points[s.a], &self.points[s.b])
    }

    pub fn mass(&self) -> f64 {
        let v: Vec<f64> = self.segs.iter().map(|s| s.mult as f64 * self.len(s)).collect();
        par::sum(&v)
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    /// Signed degree (out minus in) at every point.
    pub fn degrees(&self) -> Vec<i64> {
        let mut d = vec![0i64; self.points.len()];
        for s in &self.segs {
            d[s.a] += s.mult;
            d[s.b] -= s.mult;
        }
        d
    }

    pub fn is_cycle(&self) -> bool {
        self.degrees().iter().all(|d| *d == 0)
    }

    /// Split a 1-cycle into closed loops of unit multiplicity.
    pub fn decompose_cycle(&self) -> Result<Vec<Polyline1Current>> {
        if !self.is_cycle() {
            return Err(Error::NotCycle("signed degree nonzero at some vertex".into()));
        }
        // unit copies of every segment, outgoing lists in index order
        let mut copies: Vec<(usize, usize, usize)> = Vec::new();
        for (i, s) in self.segs.iter().enumerate() {
            for _ in 0..s.mult {
                copies.push((s.a, s.b, i));
            }
        }
        let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); self.points.len()];
        for (k, c) in copies.iter().enumerate() {
            out_edges[c.0].push(k);
        }
        let mut next_out = vec![0usize; self.points.len()];
        let mut used = vec![false; copies.len()];
        let mut loops = Vec::new();
        for start in 0..copies.len() {
            if used[start] {
                continue;
            }
            // walk, cutting off a simple loop whenever a vertex repeats
            let mut path_edges: Vec<usize> = Vec::new();
            let mut pos_of: BTreeMap<usize, usize> = BTreeMap::new();
            let mut v = copies[start].0;
            pos_of.insert(v, 0);
            let mut e = start;
            loop {
                used[e] = true;
                path_edges.push(e);
                v = copies[e].1;
                if let Some(&p) = pos_of.get(&v) {
                    let cyc: Vec<usize> = path_edges.split_off(p);
                    loops.push(self.loop_from(&cyc, &copies));
                    pos_of.retain(|_, q| *q <= p);
                    if path_edges.is_empty() {
                        break;
                    }
                } else {
                    pos_of.insert(v, path_edges.len());
                }
                let list = &out_edges[v];
                while next_out[v] < list.len() && used[list[next_out[v]]] {
                    next_out[v] += 1;
                }
                if next_out[v] == list.len() {
                    return Err(Error::NotCycle("walk got stuck".into()));
                }
                e = list[next_out[v]];
            }
        }
        Ok(loops)
    }

    fn loop_from(&self, edges: &[usize], copies: &[(usize, usize, usize)]) -> Polyline1Current {
        let segs = edges
            .iter()
            .map(|&k| {
                let (a, b, i) = copies[k];
                Segment { a, b, mult: 1, tri: self.segs[i].tri }
            })
            .collect();
        Polyline1Current { dim: self.dim, points: self.points.clone(), segs }
    }
}

#[derive(Debug, Clone)]
pub struct PoincareReport {
    pub mean: Vec<f64>,
    /// integral of |g - mean|^2 ds
    pub lhs: f64,
    /// M(T)^2 times the integral of |g'|^2 ds
    pub rhs: f64,
}

impl PoincareReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= (1.0 + slack) * self.rhs + 1e-300
    }
}

/// Both sides of the loop Poincaré inequality for g sampled at segment
/// midpoints, with derivatives by differences between consecutive midpoints.
pub fn loop_poincare<G>(t: &Polyline1Current, g: G) -> Result<PoincareReport>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let n = t.segs.len();
    if n < 3 {
        return invalid(format!("loop has {n} segments, need at least 3"));
    }
    let mids: Vec<Vec<f64>> = t
        .segs
        .iter()
        .map(|s| t.points[s.a].iter().zip(&t.points[s.b]).map(|(x, y)| 0.5 * (x + y)).collect())
        .collect();
    let ds: Vec<f64> = t.segs.iter().map(|s| t.len(s)).collect();
    let gv: Vec<Vec<f64>> = mids.iter().map(|x| g(x)).collect();
    let k = gv[0].len();
    let total: f64 = ds.iter().sum();
    let mean: Vec<f64> = (0..k).map(|c| gv.iter().zip(&ds).map(|(v, d)| v[c] * d).sum::<f64>() / total).collect();
    let lhs: f64 = gv
        .iter()
        .zip(&ds)
        .map(|(v, d)| d * v.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
        .sum();
    let mut grad = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        let step = 0.5 * (ds[i] + ds[j]);
        let d2: f64 = gv[i].iter().zip(&gv[j]).map(|(a, b)| (a - b) * (a - b)).sum();
        grad += d2 / step;
    }
    Ok(PoincareReport { mean, lhs, rhs: total * total * grad })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> TriCurrent {
        let v = vec![vec![0.0, 0.0, 0.0, 0.0], vec![1.0, 0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]];
        TriCurrent::new(4, v, vec![[0, 1, 2], [0, 2, 3]], vec![1, 1]).unwrap()
    }

    #[test]
    fn rejects_bad_meshes() {
        let v = vec![vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], vec![2.0, 0.0, 0.0, 0.0]];
        assert!(matches!(TriCurrent::new(4, v.clone(), vec![[0, 1, 2]], vec![1]), Err(Error::DegenerateTriangle(0, _))));
        assert!(TriCurrent::new(4, v.clone(), vec![[0, 1, 5]], vec![1]).is_err());
        assert!(TriCurrent::new(4, v.clone(), vec![[0, 1, 2]], vec![0]).is_err());
        assert!(TriCurrent::new(3, v, vec![[0, 1, 2]], vec![1]).is_err());
    }

    #[test]
    fn negative_multiplicity_reverses_orientation() {
        let v = vec![vec![0.0; 4], vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]];
        let c = TriCurrent::new(4, v, vec![[0, 1, 2]], vec![-2]).unwrap();
        assert_eq!(c.multiplicities(), &[2]);
        assert_eq!(c.triangles(), &[[0, 2, 1]]);
        let (e1, e2) = c.frame(0);
        assert!(e1[1] * e2[0] - e1[0] * e2[1] > 0.0);
    }

    #[test]
    fn single_triangle_boundary_is_perimeter() {
        let v = vec![vec![0.0; 4], vec![3.0, 0.0, 0.0, 0.0], vec![0.0, 4.0, 0.0, 0.0]];
        let c = TriCurrent::new(4, v, vec![[0, 1, 2]], vec![1]).unwrap();
        let b = c.boundary();
        assert_eq!(b.segs.len(), 3);
        assert!((b.mass() - 12.0).abs() < 1e-12);
        assert!(b.is_cycle());
    }

    #[test]
    fn square_interior_edge_cancels() {
        let b = unit_square().boundary();
        assert_eq!(b.segs.len(), 4);
        assert!((b.mass() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn seg_disk_area_full_circle() {
        // square much larger than the disk
        let sq = [[-2.0, -2.0], [2.0, -2.0], [2.0, 2.0], [-2.0, 2.0]];
        let mut s = 0.0;
        for i in 0..4 {
            s += seg_disk_area(sq[i], sq[(i + 1) % 4], 1.0);
        }
        assert!((s - std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn ball_clip_of_square_quarter_disk() {
        let c = unit_square();
        for r in [0.2, 0.5, 0.9, 1.0] {
            let m = c.mass(&Region::ball(&[0.0; 4], r)).unwrap();
            assert!((m - std::f64::consts::PI * r * r / 4.0).abs() < 1e-14, "{r}");
        }
    }

    #[test]
    fn cone_region_uses_bisection() {
        // the square lies in the complex line spanned by e0, e1 -> never outside the cone
        let c = unit_square();
        let reg = Region::ConeComplement { center: vec![0.0; 4], dirs: vec![vec![1.0, 0.0, 0.0, 0.0]], eps: 0.3 };
        assert!(c.mass(&reg).unwrap() < 1e-12);
        let reg = Region::ConeComplement { center: vec![0.0; 4], dirs: vec![vec![0.0, 0.0, 1.0, 0.0]], eps: 0.3 };
        assert!((c.mass(&reg).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn region_validation() {
        let c = unit_square();
        assert!(c.mass(&Region::ball(&[0.0; 4], -1.0)).is_err());
        assert!(c.mass(&Region::annulus(&[0.0; 4], 0.5, 0.4)).is_err());
        assert!(c.mass(&Region::ConeComplement { center: vec![0.0; 4], dirs: vec![], eps: 1.5 }).is_err());
    }

    #[test]
    fn closest_point_regions() {
        let a = [0.0, 0.0, 0.0, 0.0];
        let b = [1.0, 0.0, 0.0, 0.0];
        let c = [0.0, 1.0, 0.0, 0.0];
        let (l, f) = closest_point_triangle(&[0.2, 0.2, 1.0, 0.0], &a, &b, &c);
        assert_eq!(f, Feature::Face);
        assert!((l[1] - 0.2).abs() < 1e-15 && (l[2] - 0.2).abs() < 1e-15);
        let (_, f) = closest_point_triangle(&[-1.0, -1.0, 0.0, 0.0], &a, &b, &c);
        assert_eq!(f, Feature::Vertex(0));
        let (_, f) = closest_point_triangle(&[0.5, -1.0, 0.0, 0.0], &a, &b, &c);
        assert_eq!(f, Feature::Edge(2));
        let (_, f) = closest_point_triangle(&[1.0, 1.0, 0.0, 0.0], &a, &b, &c);
        assert_eq!(f, Feature::Edge(0));
        assert!((dist_point_triangle(&[0.2, 0.2, 1.0, 0.0], &a, &b, &c) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decompose_figure_eight() {
        // two triangles sharing vertex 0
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![-1.0, 0.0], vec![-1.0, -1.0]];
        let seg = |a, b| Segment { a, b, mult: 1, tri: None };
        let p = Polyline1Current::new(2, pts, vec![seg(0, 1), seg(1, 2), seg(2, 0), seg(0, 3), seg(3, 4), seg(4, 0)]);
        let loops = p.decompose_cycle().unwrap();
        assert_eq!(loops.len(), 2);
        let total: f64 = loops.iter().map(|l| l.mass()).sum();
        assert!((total - p.mass()).abs() < 1e-12);
        assert!(loops.iter().all(|l| l.is_cycle() && l.segs.len() == 3));
    }

    #[test]
    fn decompose_double_loop() {
        let pts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let seg = |a, b| Segment { a, b, mult: 2, tri: None };
        let p = Polyline1Current::new(2, pts, vec![seg(0, 1), seg(1, 2), seg(2, 0)]);
        let loops = p.decompose_cycle().unwrap();
        assert_eq!(loops.len(), 2);
        assert!((loops[0].mass() - loops[1].mass()).abs() < 1e-15);
        let seg1 = |a, b| Segment { a, b, mult: 1, tri: None };
        let open = Polyline1Current::new(2, vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![seg1(0, 1)]);
        assert!(open.decompose_cycle().is_err());
    }

    #[test]
    fn poincare_constant_and_cosine() {
        let n = 2000;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let segs = (0..n).map(|k| Segment { a: k, b: (k + 1) % n, mult: 1, tri: None }).collect();
        let loop_ = Polyline1Current::new(2, pts, segs);
        let r = loop_poincare(&loop_, |_| vec![3.0]).unwrap();
        assert!((r.mean[0] - 3.0).abs() < 1e-12 && r.lhs < 1e-20 && r.rhs == 0.0);
        let r = loop_poincare(&loop_, |x| vec![x[0] / norm(x)]).unwrap();
        let pi = std::f64::consts::PI;
        assert!((r.lhs - pi).abs() < 1e-4);
        assert!((r.rhs - 4.0 * pi * pi * pi).abs() < 1e-3);
        assert!(r.holds(0.0));
    }
}
