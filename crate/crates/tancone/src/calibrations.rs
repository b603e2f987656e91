//! Calibration 2-form fields: constant symplectic, tubular (non-closed)
//! fields adapted to a surface, Special Legendrian, and Fubini–Study.

use std::collections::HashMap;

use nalgebra::Complex;

use crate::currents::{closest_point_triangle, Region, TriCurrent};
use crate::exterior::{blade_rank, comass2, dot, norm, omega0, MultiForm};
use crate::{invalid, Error, Result};

/// Anything that can be paired with a 2-current.
pub trait FormField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<MultiForm>;
    /// Some(form) when the field does not depend on x.
    fn constant(&self) -> Option<MultiForm> {
        None
    }
    fn comass_bound(&self) -> Option<f64> {
        None
    }
}

impl FormField for MultiForm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> Result<MultiForm> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(x.len(), self.dim));
        }
        Ok(self.clone())
    }
    fn constant(&self) -> Option<MultiForm> {
        Some(self.clone())
    }
    fn comass_bound(&self) -> Option<f64> {
        self.comass_bound
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Constant(MultiForm),
    Tubular(Box<Tubular>),
    SpecialLegendrian,
}

/// A 2-form field with a declared comass bound.
#[derive(Debug, Clone)]
pub struct CalibrationField {
    pub name: String,
    dim: usize,
    pub closed: bool,
    pub bound: f64,
    kind: Kind,
}

impl FormField for CalibrationField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> Result<MultiForm> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(x.len(), self.dim));
        }
        let mut w = match &self.kind {
            Kind::Constant(w) => w.clone(),
            Kind::Tubular(t) => t.eval(x),
            Kind::SpecialLegendrian => special_legendrian_at(x),
        };
        w.comass_bound = Some(self.bound);
        Ok(w)
    }

    fn constant(&self) -> Option<MultiForm> {
        match &self.kind {
            Kind::Constant(w) => Some(w.clone()),
            _ => None,
        }
    }

    fn comass_bound(&self) -> Option<f64> {
        Some(self.bound)
    }
}

impl CalibrationField {
    pub fn constant(name: &str, w: MultiForm, closed: bool) -> Result<Self> {
        if w.grade != 2 {
            return invalid("calibration fields are 2-forms");
        }
        let bound = w.comass_bound.unwrap_or_else(|| comass2(&w));
        Ok(CalibrationField { name: name.into(), dim: w.dim, closed, bound, kind: Kind::Constant(w) })
    }

    pub fn tubular(&self) -> Option<&Tubular> {
        match &self.kind {
            Kind::Tubular(t) => Some(t),
            _ => None,
        }
    }
}

/// omega0 on R^m as a field.
pub fn standard_symplectic(m: usize) -> Result<CalibrationField> {
    if m == 0 || m % 2 == 1 || m > crate::exterior::MAX_DIM {
        return invalid(format!("standard symplectic form needs even m, got {m}"));
    }
    CalibrationField::constant("omega0", omega0(m), true)
}

fn smoothstep_down(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        1.0 - 3.0 * t * t + 2.0 * t * t * t
    }
}

/// Width of the barycentric blending band at triangle edges.
pub const BAND: f64 = 0.01;

/// Unit dual covectors of a surface's tangent planes, extended to a tube.
#[derive(Debug, Clone)]
pub struct Tubular {
    surface: TriCurrent,
    pub delta: f64,
    planes: Vec<MultiForm>,
    /// Neighbour across the edge opposite each local vertex.
    neighbors: Vec<[Option<usize>; 3]>,
    cell: f64,
    grid: HashMap<u64, Vec<usize>>,
}

fn cell_key(idx: &[i64]) -> u64 {
    // collisions only add candidates
    idx.iter().fold(0xcbf29ce484222325u64, |h, &i| (h ^ i as u64).wrapping_mul(0x100000001b3).rotate_left(17))
}

impl Tubular {
    /// Nearest triangle within reach 2 delta: (triangle, barycentrics, distance).
    /// Cells are scanned in growing Chebyshev rings around the query cell and
    /// the scan stops once no farther ring can hold a closer triangle.
    pub fn nearest(&self, x: &[f64]) -> Option<(usize, [f64; 3], f64)> {
        let reach = 2.0 * self.delta;
        let m = x.len();
        let home: Vec<i64> = x.iter().map(|c| (c / self.cell).floor() as i64).collect();
        let kmax = (reach / self.cell).ceil() as i64 + 1;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        let mut off = vec![0i64; m];
        let mut key = vec![0i64; m];
        for k in 0..=kmax {
            off.iter_mut().for_each(|o| *o = -k);
            loop {
                if off.iter().any(|o| o.abs() == k) {
                    for i in 0..m {
                        key[i] = home[i] + off[i];
                    }
                    if let Some(list) = self.grid.get(&cell_key(&key)) {
                        for &t in list {
                            if let Some(bb) = &best {
                                let (c, rad) = self.surface.bounding_sphere(t);
                                let dc2: f64 = c.iter().zip(x).map(|(u, v)| (u - v) * (u - v)).sum();
                                let lim = bb.2 + rad;
                                if dc2 > lim * lim {
                                    continue;
                                }
                            }
                            let p = self.surface.points(t);
                            let (b, _) = closest_point_triangle(x, p[0], p[1], p[2]);
                            let d = (0..m)
                                .map(|j| {
                                    let q = b[0] * p[0][j] + b[1] * p[1][j] + b[2] * p[2][j];
                                    (x[j] - q) * (x[j] - q)
                                })
                                .sum::<f64>()
                                .sqrt();
                            if best.as_ref().is_none_or(|bb| d < bb.2 || (d == bb.2 && t < bb.0)) {
                                best = Some((t, b, d));
                            }
                        }
                    }
                }
                let mut i = 0;
                while i < m && off[i] == k {
                    off[i] = -k;
                    i += 1;
                }
                if i == m {
                    break;
                }
                off[i] += 1;
            }
            if let Some(bb) = &best {
                if bb.2 <= k as f64 * self.cell {
                    break;
                }
            }
        }
        best.filter(|b| b.2 < reach)
    }

    fn eval(&self, x: &[f64]) -> MultiForm {
        let m = x.len();
        let Some((t, b, d)) = self.nearest(x) else {
            return MultiForm::zeros(m, 2);
        };
        if d <= self.delta && b.iter().all(|v| *v >= BAND) {
            return self.planes[t].clone();
        }
        let mut coef = vec![0.0; self.planes[t].coef.len()];
        let mut own = 1.0;
        for i in 0..3 {
            if let Some(nb) = self.neighbors[t][i] {
                let w = 0.5 * smoothstep_down(b[i] / BAND);
                if w > 0.0 {
                    own -= w;
                    for (c, p) in coef.iter_mut().zip(&self.planes[nb].coef) {
                        *c += w * p;
                    }
                }
            }
        }
        for (c, p) in coef.iter_mut().zip(&self.planes[t].coef) {
            *c += own * p;
        }
        let mut w = MultiForm::from_coef(m, 2, coef).expect("layout");
        let cm = comass2(&w);
        let cut = smoothstep_down((d - self.delta) / self.delta);
        if cm > 0.0 {
            w = w.scale(cut / cm);
        }
        w
    }
}

/// A non-closed field calibrating the given surface inside a tube of radius delta.
pub fn tubular_calibration(surface: &TriCurrent, delta: f64) -> Result<CalibrationField> {
    if !(delta > 0.0) {
        return invalid(format!("tube radius {delta} must be positive"));
    }
    let m = surface.dim();
    let nt = surface.num_triangles();
    let planes: Vec<MultiForm> = (0..nt)
        .map(|t| {
            let (e1, e2) = surface.frame(t);
            let v = crate::exterior::MultiVector::plane(e1, e2);
            MultiForm::from_coef(m, 2, v.coef).expect("layout")
        })
        .collect();
    let mut edge_map: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (t, tri) in surface.triangles().iter().enumerate() {
        for i in 0..3 {
            let (a, b) = (tri[(i + 1) % 3], tri[(i + 2) % 3]);
            edge_map.entry((a.min(b), a.max(b))).or_default().push((t, i));
        }
    }
    let mut neighbors = vec![[None; 3]; nt];
    for list in edge_map.values() {
        if list.len() == 2 {
            let (t0, i0) = list[0];
            let (t1, i1) = list[1];
            neighbors[t0][i0] = Some(t1);
            neighbors[t1][i1] = Some(t0);
        }
    }
    let cell = surface.mesh_size();
    let mut grid: HashMap<u64, Vec<usize>> = HashMap::new();
    for t in 0..nt {
        let p = surface.points(t);
        let lo: Vec<i64> = (0..m).map(|k| (p.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min) / cell).floor() as i64).collect();
        let hi: Vec<i64> = (0..m).map(|k| (p.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max) / cell).floor() as i64).collect();
        let mut key = lo.clone();
        'cells: loop {
            grid.entry(cell_key(&key)).or_default().push(t);
            let mut i = 0;
            loop {
                if i == m {
                    break 'cells;
                }
                if key[i] < hi[i] {
                    key[i] += 1;
                    break;
                }
                key[i] = lo[i];
                i += 1;
            }
        }
    }
    let closed = (0..nt).all(|t| {
        let (e1, e2) = surface.frame(t);
        omega0(m).on_pair(e1, e2) >= 1.0 - crate::CALIBRATED_TOL
    });
    let tub = Tubular { surface: surface.clone(), delta, planes, neighbors, cell, grid };
    check_reach(&tub)?;
    Ok(CalibrationField { name: "tubular".into(), dim: m, closed, bound: 1.0, kind: Kind::Tubular(Box::new(tub)) })
}

/// Triangles sampled by the reach check.
pub const REACH_SAMPLES: usize = 4000;

/// Nearest-point uniqueness at normal offsets from sampled centroids.
fn check_reach(tub: &Tubular) -> Result<()> {
    let s = &tub.surface;
    let m = s.dim();
    let off = 0.9 * tub.delta;
    let stride = s.num_triangles().div_ceil(REACH_SAMPLES).max(1);
    let sample: Vec<usize> = (0..s.num_triangles()).step_by(stride).collect();
    let bad = crate::par::map(&sample, |&t| {
        let p = s.points(t);
        let c: Vec<f64> = (0..m).map(|k| (p[0][k] + p[1][k] + p[2][k]) / 3.0).collect();
        let (e1, e2) = s.frame(t);
        let tri = s.triangles()[t];
        for n in normal_basis(e1, e2) {
            for sgn in [1.0, -1.0] {
                let y: Vec<f64> = c.iter().zip(&n).map(|(a, b)| a + sgn * off * b).collect();
                if let Some((u, _, d)) = tub.nearest(&y) {
                    let adjacent = s.triangles()[u].iter().any(|v| tri.contains(v));
                    if !adjacent && d < off * (1.0 - 1e-9) {
                        return Some(t);
                    }
                }
            }
        }
        None
    });
    if let Some(t) = bad.into_iter().flatten().next() {
        return Err(Error::Invalid(format!("tube of radius {} self-intersects near triangle {t}", tub.delta)));
    }
    Ok(())
}

fn normal_basis(e1: &[f64], e2: &[f64]) -> Vec<Vec<f64>> {
    let m = e1.len();
    let mut basis: Vec<Vec<f64>> = vec![e1.to_vec(), e2.to_vec()];
    let mut out = Vec::new();
    for k in 0..m {
        let mut v = crate::exterior::unit(m, k);
        for b in &basis {
            let d = dot(&v, b);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= d * y;
            }
        }
        let nv = norm(&v);
        if nv > 1e-8 {
            let v: Vec<f64> = v.iter().map(|c| c / nv).collect();
            basis.push(v.clone());
            out.push(v);
        }
    }
    out
}

fn special_legendrian_at(x: &[f64]) -> MultiForm {
    let mut w = MultiForm::zeros(6, 2);
    let mut add = |i: usize, j: usize, c: f64| {
        if i < j {
            w.coef[blade_rank(6, &[i, j])] += c;
        } else {
            w.coef[blade_rank(6, &[j, i])] -= c;
        }
    };
    for i in 0..3 {
        let (a, b) = ((i + 1) % 3, (i + 2) % 3);
        let (p, q) = (x[2 * i], x[2 * i + 1]);
        let (xa, ya, xb, yb) = (2 * a, 2 * a + 1, 2 * b, 2 * b + 1);
        // Re((p + iq) dz_a ^ dz_b)
        add(xa, xb, p);
        add(ya, yb, -p);
        add(xa, yb, -q);
        add(ya, xb, -q);
    }
    w
}

/// Re(sum_i z_i dz_{i+1} ^ dz_{i-1}) on C^3. Its comass at z is |z|, so the
/// declared bound 1 is valid on the closed unit ball.
pub fn special_legendrian() -> CalibrationField {
    CalibrationField { name: "special-legendrian".into(), dim: 6, closed: false, bound: 1.0, kind: Kind::SpecialLegendrian }
}

/// mass(C, R) - pair(C, omega, R).
pub fn calibration_defect(c: &TriCurrent, field: &dyn FormField, region: &Region) -> Result<f64> {
    match field.comass_bound() {
        Some(b) if (b - 1.0).abs() <= 1e-12 => {}
        other => return invalid(format!("calibration defect needs comass bound 1, got {other:?}")),
    }
    Ok(c.mass(region)? - c.pair(field, region)?)
}

/// Central-difference exterior derivative of a 2-form field.
pub fn exterior_derivative_fd(field: &dyn FormField, x: &[f64], h: f64) -> Result<MultiForm> {
    let m = field.dim();
    if x.len() != m {
        return Err(Error::DimensionMismatch(x.len(), m));
    }
    let mut grads = Vec::with_capacity(m);
    for a in 0..m {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[a] += h;
        xm[a] -= h;
        let d = field.eval(&xp)?.sub(&field.eval(&xm)?).scale(0.5 / h);
        grads.push(d);
    }
    let mut out = MultiForm::zeros(m, 3);
    let c2 = |w: &MultiForm, i: usize, j: usize| w.coef[blade_rank(m, &[i, j])];
    for a in 0..m {
        for b in (a + 1)..m {
            for c in (b + 1)..m {
                out.coef[blade_rank(m, &[a, b, c])] =
                    c2(&grads[a], b, c) - c2(&grads[b], a, c) + c2(&grads[c], a, b);
            }
        }
    }
    Ok(out)
}

/// (min, max) of comass2(field(x)) over the points.
pub fn comass_profile(field: &dyn FormField, points: &[Vec<f64>]) -> Result<(f64, f64)> {
    let vals = crate::par::map(points, |x| field.eval(x).map(|w| comass2(&w)));
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for v in vals {
        let v = v?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

/// Radius of the excluded ball around the pole.
pub const FS_EXCLUDED: f64 = 0.2;

type C64 = Complex<f64>;

/// Complex vector z_i = x_{2i} + i x_{2i+1}.
pub fn to_complex(x: &[f64]) -> Vec<C64> {
    x.chunks(2).map(|c| C64::new(c[0], c[1])).collect()
}

pub fn from_complex(z: &[C64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

fn hdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Fubini–Study form on CP^{n-1} (lines have area pi) with a primitive
/// alpha defined off the excluded ball around a pole.
#[derive(Debug, Clone)]
pub struct FubiniStudy {
    pub n: usize,
    /// Unitary frame; frame[0] is the chart centre, opposite the pole.
    frame: Vec<Vec<C64>>,
    pub pole: Vec<C64>,
}

/// FS distance between the lines through a and b. The sine comes from the
/// complex Lagrange identity so that nearby lines keep full precision.
pub fn fs_distance(a: &[f64], b: &[f64]) -> f64 {
    let za = to_complex(a);
    let zb = to_complex(b);
    let ip = hdot(&za, &zb).norm();
    let mut cross = 0.0;
    for i in 0..za.len() {
        for j in (i + 1)..za.len() {
            cross += (za[i] * zb[j] - za[j] * zb[i]).norm_sqr();
        }
    }
    cross.sqrt().atan2(ip)
}

impl FubiniStudy {
    /// Charts centred at the line orthogonal to the pole (for n = 2) or, in
    /// general, at a unit vector orthogonal to it.
    pub fn new(n: usize, pole: &[f64]) -> Result<Self> {
        if n < 2 {
            return invalid(format!("Fubini-Study needs n >= 2, got {n}"));
        }
        if pole.len() != 2 * n {
            return Err(Error::DimensionMismatch(pole.len(), 2 * n));
        }
        let np = norm(pole);
        if !(np > 0.0) {
            return invalid("pole must be nonzero");
        }
        let p: Vec<C64> = to_complex(pole).iter().map(|c| c / np).collect();
        // Gram-Schmidt of p, e_1, ..., e_n; then rotate so the centre comes first
        let mut basis: Vec<Vec<C64>> = vec![p.clone()];
        for k in 0..n {
            let mut v = vec![C64::new(0.0, 0.0); n];
            v[k] = C64::new(1.0, 0.0);
            for b in &basis {
                let c = hdot(b, &v);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
            let nv = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if nv > 1e-8 {
                basis.push(v.iter().map(|c| c / nv).collect());
            }
            if basis.len() == n {
                break;
            }
        }
        let mut frame = vec![basis[1].clone(), basis[0].clone()];
        frame.extend(basis.into_iter().skip(2));
        Ok(FubiniStudy { n, frame, pole: p })
    }

    /// Standard FS on CP^1 with the pole at [0:1].
    pub fn standard(n: usize) -> Result<Self> {
        let mut pole = vec![0.0; 2 * n];
        pole[2 * n - 2] = 1.0;
        Self::new(n, &pole)
    }

    /// Chart coordinates of the line through x, in R^{2(n-1)}.
    pub fn chart(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = to_complex(x);
        let w0 = hdot(&self.frame[0], &z);
        let nz = norm(x);
        if w0.norm() < FS_EXCLUDED.sin() * nz {
            return Err(Error::ExcludedBall(format!("line {x:?} within {FS_EXCLUDED} of the pole")));
        }
        let zeta: Vec<C64> = self.frame[1..].iter().map(|f| hdot(f, &z) / w0).collect();
        Ok(from_complex(&zeta))
    }

    /// Differential of the chart map at x applied to v.
    fn chart_diff(&self, x: &[f64], v: &[f64]) -> Vec<C64> {
        let z = to_complex(x);
        let dz = to_complex(v);
        let w0 = hdot(&self.frame[0], &z);
        let dw0 = hdot(&self.frame[0], &dz);
        self.frame[1..]
            .iter()
            .map(|f| (hdot(f, &dz) * w0 - hdot(f, &z) * dw0) / (w0 * w0))
            .collect()
    }

    /// omega_FS(X, Y) at chart point zeta for complex tangent vectors.
    fn omega_c(zeta: &[C64], a: &[C64], b: &[C64]) -> f64 {
        let s = 1.0 + zeta.iter().map(|c| c.norm_sqr()).sum::<f64>();
        // g(X, Y) = [s <X,Y> - <X,zeta><zeta,Y>] / s^2 with <u,v> = sum conj(u) v
        let xy = hdot(a, b);
        let xz = hdot(a, zeta);
        let zy = hdot(zeta, b);
        let h = (xy * s - xz * zy) / (s * s);
        h.im
    }

    /// The FS 2-form in chart coordinates as a MultiForm on R^{2(n-1)}.
    pub fn omega_chart(&self, zeta: &[f64]) -> MultiForm {
        let k = zeta.len();
        let zc = to_complex(zeta);
        let mut w = MultiForm::zeros(k, 2);
        for i in 0..k {
            for j in (i + 1)..k {
                let a = to_complex(&crate::exterior::unit(k, i));
                let b = to_complex(&crate::exterior::unit(k, j));
                w.coef[blade_rank(k, &[i, j])] = Self::omega_c(&zc, &a, &b);
            }
        }
        w.comass_bound = None;
        w
    }

    /// alpha = (1/2) sum (x dy - y dx) / (1 + |zeta|^2) in chart coordinates.
    pub fn alpha_chart(&self, zeta: &[f64]) -> MultiForm {
        let s = 1.0 + zeta.iter().map(|c| c * c).sum::<f64>();
        let mut a = vec![0.0; zeta.len()];
        for i in 0..zeta.len() / 2 {
            a[2 * i] = -0.5 * zeta[2 * i + 1] / s;
            a[2 * i + 1] = 0.5 * zeta[2 * i] / s;
        }
        MultiForm::covector(&a)
    }

    /// (pi^* omega_FS)(a, b) at x, with pi the projection to CP^{n-1}.
    pub fn pullback_omega(&self, x: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
        let zeta = to_complex(&self.chart(x)?);
        let da = self.chart_diff(x, a);
        let db = self.chart_diff(x, b);
        Ok(Self::omega_c(&zeta, &da, &db))
    }

    /// (pi^* alpha)(v) at x.
    pub fn pullback_alpha(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let zeta = self.chart(x)?;
        let dv = from_complex(&self.chart_diff(x, v));
        Ok(dot(&self.alpha_chart(&zeta).coef, &dv))
    }

    /// Area of CP^1 by quadrature on the affine chart, in polar coordinates
    /// with the substitution rho = tan(phi).
    pub fn cp1_area(nodes: usize) -> f64 {
        let gl = crate::quad::gl_interval(nodes, 0.0, std::f64::consts::FRAC_PI_2);
        // dx dy / (1 + rho^2)^2 = rho drho dtheta / (1+rho^2)^2; rho = tan phi
        let radial: f64 = gl
            .iter()
            .map(|(phi, w)| {
                let r = phi.tan();
                let s = 1.0 + r * r;
                w * r / (s * s) * s
            })
            .sum();
        2.0 * std::f64::consts::PI * radial
    }
}

/// Area Jacobian of pi = H(x/|x|) on the plane e1 ^ e2 at x: the norm of the
/// horizontal projections' wedge divided by |x|^2.
pub fn hopf_jacobian(x: &[f64], e1: &[f64], e2: &[f64]) -> f64 {
    let r2 = dot(x, x);
    let r = r2.sqrt();
    let u: Vec<f64> = x.iter().map(|c| c / r).collect();
    let ju = crate::exterior::j0(&u);
    let proj = |v: &[f64]| -> Vec<f64> {
        let a = dot(v, &u);
        let b = dot(v, &ju);
        v.iter().zip(&u).zip(&ju).map(|((c, p), q)| c - a * p - b * q).collect()
    };
    let a = proj(e1);
    let b = proj(e2);
    let aa = dot(&a, &a);
    if aa == 0.0 {
        return 0.0;
    }
    let c = dot(&a, &b) / aa;
    let perp: Vec<f64> = b.iter().zip(&a).map(|(y, x)| y - c * x).collect();
    (aa.sqrt() * norm(&perp)) / r2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exterior::MultiVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symplectic_basics() {
        let w = standard_symplectic(4).unwrap();
        let x = [0.3; 4];
        let f = w.eval(&x).unwrap();
        assert_eq!(f.eval(&MultiVector::basis(4, &[0, 1])).unwrap(), 1.0);
        assert_eq!(f.eval(&MultiVector::basis(4, &[0, 2])).unwrap(), 0.0);
        assert!((comass2(&f) - 1.0).abs() < 1e-12);
        assert!(standard_symplectic(5).is_err());
    }

    #[test]
    fn special_legendrian_at_basis_point() {
        let f = special_legendrian();
        let w = f.eval(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let mut expect = MultiForm::zeros(6, 2);
        expect.coef[blade_rank(6, &[2, 4])] = 1.0;
        expect.coef[blade_rank(6, &[3, 5])] = -1.0;
        assert_eq!(w.coef, expect.coef);
        assert!(f.eval(&[0.0; 6]).unwrap().norm() == 0.0);
        let d = exterior_derivative_fd(&f, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1e-4).unwrap();
        assert!(d.norm() >= 1e-3);
    }

    #[test]
    fn special_legendrian_comass_is_modulus() {
        let f = special_legendrian();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let x: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let c = comass2(&f.eval(&x).unwrap());
            assert!((c - norm(&x)).abs() < 1e-9, "{c} vs {}", norm(&x));
        }
    }

    #[test]
    fn constant_field_is_closed_numerically() {
        let f = standard_symplectic(6).unwrap();
        let d = exterior_derivative_fd(&f, &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 1e-3).unwrap();
        assert!(d.norm() < 1e-12);
    }

    #[test]
    fn fs_area_of_line() {
        let a = FubiniStudy::cp1_area(64);
        assert!((a - std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn fs_primitive_differential() {
        let fs = FubiniStudy::standard(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let h = 1e-5;
        for _ in 0..200 {
            let zeta: Vec<f64> = (0..4).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let w = fs.omega_chart(&zeta);
            let mut grads = Vec::new();
            for a in 0..4 {
                let mut p = zeta.clone();
                let mut q = zeta.clone();
                p[a] += h;
                q[a] -= h;
                let d: Vec<f64> =
                    fs.alpha_chart(&p).coef.iter().zip(&fs.alpha_chart(&q).coef).map(|(u, v)| (u - v) / (2.0 * h)).collect();
                grads.push(d);
            }
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let da = grads[i][j] - grads[j][i];
                    assert!((da - w.coef[blade_rank(4, &[i, j])]).abs() < 1e-5);
                }
            }
        }
    }

    #[test]
    fn fs_pullback_matches_hopf_jacobian_on_complex_planes() {
        let fs = FubiniStudy::standard(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let x: Vec<f64> = (0..4).map(|_| rng.random::<f64>() - 0.5).collect();
            let v: Vec<f64> = (0..4).map(|_| rng.random::<f64>() - 0.5).collect();
            let nv = norm(&v);
            let v: Vec<f64> = v.iter().map(|c| c / nv).collect();
            let jv = crate::exterior::j0(&v);
            let Ok(p) = fs.pullback_omega(&x, &v, &jv) else { continue };
            // complex planes map holomorphically: pullback = jacobian
            let j = hopf_jacobian(&x, &v, &jv);
            assert!((p - j).abs() < 1e-9 * (1.0 + j), "{p} {j}");
        }
    }

    #[test]
    fn constant_map_pulls_back_to_zero() {
        let fs = FubiniStudy::standard(2).unwrap();
        let x = [0.6, 0.1, 0.3, -0.2];
        // radial and J-radial directions collapse to a point
        let jx = crate::exterior::j0(&x);
        assert!(fs.pullback_omega(&x, &x, &jx).unwrap().abs() < 1e-14);
        assert!(hopf_jacobian(&x, &x, &jx) < 1e-14);
    }

    #[test]
    fn fs_distance_orthogonal_lines() {
        let d = fs_distance(&[1.0, 0.0, 0.0, 0.0], &[0.0, 0.0, 0.0, 1.0]);
        assert!((d - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
        let d = fs_distance(&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]);
        assert!(d.abs() < 1e-15);
    }

    #[test]
    fn excluded_ball() {
        let fs = FubiniStudy::standard(2).unwrap();
        assert!(matches!(fs.chart(&[0.0, 0.0, 1.0, 0.0]), Err(Error::ExcludedBall(_))));
        assert!(fs.chart(&[1.0, 0.0, 0.0, 0.0]).is_ok());
    }

    fn flat_patch() -> TriCurrent {
        let mut v = Vec::new();
        for j in 0..5 {
            for i in 0..5 {
                v.push(vec![i as f64 * 0.25 - 0.5, j as f64 * 0.25 - 0.5, 0.0, 0.0]);
            }
        }
        let mut t = Vec::new();
        for j in 0..4 {
            for i in 0..4 {
                let a = j * 5 + i;
                t.push([a, a + 1, a + 6]);
                t.push([a, a + 6, a + 5]);
            }
        }
        let n = t.len();
        TriCurrent::new(4, v, t, vec![1; n]).unwrap()
    }

    #[test]
    fn tubular_on_flat_plane_is_constant() {
        let s = flat_patch();
        let f = tubular_calibration(&s, 0.05).unwrap();
        assert!(f.closed);
        let w = f.eval(&[0.1, 0.13, 0.02, -0.01]).unwrap();
        assert!((w.coef[blade_rank(4, &[0, 1])] - 1.0).abs() < 1e-12);
        assert!(w.norm() - 1.0 < 1e-12);
        assert!(f.eval(&[0.1, 0.1, 0.5, 0.0]).unwrap().norm() == 0.0);
        let d = calibration_defect(&s, &f, &Region::Full).unwrap();
        assert!(d.abs() < 1e-12);
    }
}
