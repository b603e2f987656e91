//! Mesh generators for the test surfaces: ring meshes of a parameter disk
//! pushed through a map into R^m.

use std::f64::consts::PI;

use crate::currents::TriCurrent;
use crate::{invalid, Result};

/// A ring of a polar parameter mesh: radius and number of points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub radius: f64,
    pub count: usize,
}

/// Uniform rings: ring k at radius k R / K with 6k points, K = ceil(R/h).
pub fn uniform_rings(radius: f64, h: f64) -> Result<Vec<Ring>> {
    if !(radius > 0.0 && h > 0.0) {
        return invalid(format!("need positive radius and h, got {radius}, {h}"));
    }
    let k = (radius / h).ceil().max(1.0) as usize;
    if k > 4000 {
        return invalid(format!("h = {h} gives {k} rings, too fine"));
    }
    Ok((1..=k).map(|i| Ring { radius: radius * i as f64 / k as f64, count: 6 * i }).collect())
}

/// Rings graded toward the centre: spacing min(h, grade * rho) going
/// inward from the outer radius until rho_min, angular spacing matching.
pub fn graded_rings(radius: f64, h: f64, grade: f64, rho_min: f64) -> Result<Vec<Ring>> {
    if !(radius > 0.0 && h > 0.0 && grade > 0.0 && rho_min > 0.0 && rho_min < radius) {
        return invalid("graded rings need 0 < rho_min < radius and positive h, grade");
    }
    let mut radii = vec![radius];
    let mut r = radius;
    while r > rho_min {
        let step = h.min(grade * r);
        r -= step;
        if r <= rho_min {
            break;
        }
        radii.push(r);
        if radii.len() > 100_000 {
            return invalid("graded ring count exploded");
        }
    }
    radii.reverse();
    Ok(radii
        .into_iter()
        .map(|rho| {
            let step = h.min(grade * rho);
            let count = ((2.0 * PI * rho / step).ceil() as usize).max(6);
            Ring { radius: rho, count }
        })
        .collect())
}

/// Triangulate the disk with a centre vertex and the given rings (inner to
/// outer), push vertices through `map`, orient counter-clockwise in the
/// parameter plane.
pub fn ring_mesh<F>(dim: usize, rings: &[Ring], mult: i64, map: F) -> Result<TriCurrent>
where
    F: Fn(f64, f64) -> Vec<f64>,
{
    let (params, tris) = ring_topology(rings)?;
    let vertices = params.iter().map(|p| map(p[0], p[1])).collect();
    let n = tris.len();
    TriCurrent::new(dim, vertices, tris, vec![mult; n])
}

pub type Topology = (Vec<[f64; 2]>, Vec<[usize; 3]>);

/// Parameter points and triangles of a ring mesh.
pub fn ring_topology(rings: &[Ring]) -> Result<Topology> {
    if rings.is_empty() {
        return invalid("need at least one ring");
    }
    let mut pts: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    let mut starts = Vec::new();
    for ring in rings {
        if ring.count < 3 {
            return invalid("rings need at least 3 points");
        }
        starts.push(pts.len());
        for j in 0..ring.count {
            let a = 2.0 * PI * j as f64 / ring.count as f64;
            pts.push([ring.radius * a.cos(), ring.radius * a.sin()]);
        }
    }
    let mut tris = Vec::new();
    let n0 = rings[0].count;
    for j in 0..n0 {
        tris.push([0, starts[0] + j, starts[0] + (j + 1) % n0]);
    }
    for k in 1..rings.len() {
        let (ni, no) = (rings[k - 1].count, rings[k].count);
        let (si, so) = (starts[k - 1], starts[k]);
        let (mut i, mut j) = (0usize, 0usize);
        while i < ni || j < no {
            let next_in = (i + 1) as f64 / ni as f64;
            let next_out = (j + 1) as f64 / no as f64;
            let advance_out = j < no && (i == ni || next_out <= next_in);
            if advance_out {
                tris.push([si + i % ni, so + j, so + (j + 1) % no]);
                j += 1;
            } else {
                tris.push([si + i % ni, so + j % no, si + (i + 1) % ni]);
                i += 1;
            }
        }
    }
    Ok((pts, tris))
}

/// Unit-radius (by default) flat disk in the complex line spanned by e0, e1 of R^m.
pub fn flat_disk(m: usize, radius: f64, h: f64, mult: i64) -> Result<TriCurrent> {
    let rings = uniform_rings(radius, h)?;
    ring_mesh(m, &rings, mult, |x, y| {
        let mut v = vec![0.0; m];
        v[0] = x;
        v[1] = y;
        v
    })
}

/// Disk in the real plane spanned by e_a and e_b.
pub fn plane_disk(m: usize, a: usize, b: usize, radius: f64, h: f64) -> Result<TriCurrent> {
    if a >= m || b >= m || a == b {
        return invalid("plane axes out of range");
    }
    let rings = uniform_rings(radius, h)?;
    ring_mesh(m, &rings, 1, |x, y| {
        let mut v = vec![0.0; m];
        v[a] = x;
        v[b] = y;
        v
    })
}

/// Graph z -> (z, z^k) over |z| <= radius in R^4.
pub fn holomorphic_graph(k: u32, radius: f64, h: f64) -> Result<TriCurrent> {
    if k == 0 {
        return invalid("graph power must be positive");
    }
    let rings = uniform_rings(radius, h)?;
    ring_mesh(4, &rings, 1, move |x, y| {
        let (r, t) = ((x * x + y * y).sqrt(), y.atan2(x));
        let rk = r.powi(k as i32);
        vec![x, y, rk * (k as f64 * t).cos(), rk * (k as f64 * t).sin()]
    })
}

/// Graph of the anti-holomorphic map z -> (z, conj(z)^2 / 4).
pub fn antiholomorphic_graph(radius: f64, h: f64) -> Result<TriCurrent> {
    let rings = uniform_rings(radius, h)?;
    ring_mesh(4, &rings, 1, |x, y| vec![x, y, (x * x - y * y) / 4.0, -2.0 * x * y / 4.0])
}

/// Parameter radius of the cusp mesh, enough to cover B_0.5 in the image.
pub const CUSP_PARAM_RADIUS: f64 = 0.8;

/// Cusp z -> (z^2, z^3), graded toward the origin with factor 0.8.
pub fn cusp(h: f64) -> Result<TriCurrent> {
    cusp_with(h, CUSP_PARAM_RADIUS, 1e-3)
}

pub fn cusp_with(h: f64, radius: f64, rho_min: f64) -> Result<TriCurrent> {
    let rings = graded_rings(radius, h, 0.2, rho_min)?;
    ring_mesh(4, &rings, 1, |x, y| {
        let x2 = x * x - y * y;
        let y2 = 2.0 * x * y;
        vec![x2, y2, x2 * x - y2 * y, x2 * y + y2 * x]
    })
}

/// Union of flat disks in the complex lines spanned by the given vectors of C^n.
pub fn complex_lines(dirs: &[Vec<f64>], radius: f64, h: f64) -> Result<TriCurrent> {
    if dirs.is_empty() {
        return invalid("need at least one line");
    }
    let m = dirs[0].len();
    let mut vertices = Vec::new();
    let mut tris = Vec::new();
    let rings = uniform_rings(radius, h)?;
    let (params, topo) = ring_topology(&rings)?;
    for d in dirs {
        if d.len() != m {
            return invalid("line directions differ in dimension");
        }
        let nd = crate::exterior::norm(d);
        if !(nd > 0.0) {
            return invalid("zero line direction");
        }
        let u: Vec<f64> = d.iter().map(|c| c / nd).collect();
        let ju = crate::exterior::j0(&u);
        let base = vertices.len();
        for p in &params {
            vertices.push(u.iter().zip(&ju).map(|(a, b)| p[0] * a + p[1] * b).collect());
        }
        tris.extend(topo.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }
    let n = tris.len();
    TriCurrent::new(m, vertices, tris, vec![1; n])
}

/// {z2 = 0} and {z1 = 0} in C^2.
pub fn two_lines(radius: f64, h: f64) -> Result<TriCurrent> {
    complex_lines(&[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 0.0]], radius, h)
}

/// Closed Clifford torus in S^3 with n x n quads.
pub fn clifford_torus(n: usize) -> Result<TriCurrent> {
    if n < 3 {
        return invalid("torus needs n >= 3");
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let (a, b) = (2.0 * PI * i as f64 / n as f64, 2.0 * PI * j as f64 / n as f64);
            v.push(vec![s * a.cos(), s * a.sin(), s * b.cos(), s * b.sin()]);
        }
    }
    let id = |i: usize, j: usize| (i % n) * n + (j % n);
    let mut t = Vec::new();
    for i in 0..n {
        for j in 0..n {
            t.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            t.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let k = t.len();
    TriCurrent::new(4, v, t, vec![1; k])
}

/// Exact ambient-ball mass of the z^2 graph: with s^2 = (sqrt(1+4r^2)-1)/2
/// the preimage radius, the area is pi s^2 + 2 pi s^4.
pub fn z2_ball_mass(r: f64) -> f64 {
    let s2 = ((1.0 + 4.0 * r * r).sqrt() - 1.0) / 2.0;
    PI * s2 + 2.0 * PI * s2 * s2
}

/// Exact ambient-ball mass of the cusp: preimage |z|^2 = t with t^2(1+t) = r^2,
/// area = 2 pi (t^2 + 1.5 t^3) (area element (4|z|^2 + 9|z|^4) dA).
pub fn cusp_ball_mass(r: f64) -> f64 {
    let t = cusp_preimage(r);
    2.0 * PI * (t * t + 1.5 * t * t * t)
}

/// t = |z|^2 solving t^2 (1 + t) = r^2.
pub fn cusp_preimage(r: f64) -> f64 {
    let mut t = r.sqrt();
    for _ in 0..60 {
        let f = t * t * (1.0 + t) - r * r;
        let df = 2.0 * t + 3.0 * t * t;
        t -= f / df;
    }
    t
}
