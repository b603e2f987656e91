//! Energy of J-holomorphic maps on B^{2n}: scaled energy, monotonicity,
//! the inner-variation identity, slicing by complex lines and tangent maps.
//!
//! Maps are closures evaluated on a polar grid: Gauss-Legendre in the
//! radius on each shell of a geometric ladder, and on S^{2n-1} a tensor
//! rule in torus angles times the simplex of moduli |z_j|^2. Gradients are
//! centred differences with a step proportional to the distance from the
//! centre, so homogeneous maps stay exactly scale invariant.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::blowup::{power_fit, rate_fit_values, RateFit, RateMode};
use crate::{invalid, par, quad, Error, Result};

/// Ratio between consecutive ladder radii.
pub const LADDER_RATIO: f64 = 0.9;
/// Torus angles per circle on S^3.
pub const SPHERE_ANGLES: usize = 32;
/// Gauss-Legendre nodes per simplex axis.
pub const SPHERE_SIMPLEX: usize = 16;
/// Gauss-Legendre nodes per ladder shell.
pub const SHELL_NODES: usize = 4;
const INNER_NODES: usize = 8;
/// Default relative finite-difference step.
pub const FD_STEP: f64 = 0.01;
pub const MONOTONICITY_SLACK: f64 = 0.01;
pub const MAP_CMAX: f64 = 1e3;
pub const MIN_LINES: usize = 64;
pub const DEFAULT_LINES: usize = 4096;

/// Cubature on the unit sphere S^{2n-1} in C^n.
#[derive(Debug, Clone)]
pub struct SphereRule {
    n: usize,
    /// Flattened unit points, stride 2n.
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl SphereRule {
    /// z_j = sqrt(s_j) e^{i phi_j}; phi on a uniform grid, s on the simplex
    /// through collapsed Gauss-Legendre coordinates.
    pub fn new(n: usize, angles: usize, simplex: usize) -> Result<Self> {
        if n == 0 || angles < 4 || simplex == 0 {
            return invalid(format!("sphere rule needs n >= 1, angles >= 4, simplex >= 1 (got {n}, {angles}, {simplex})"));
        }
        let gl = quad::gl_interval(simplex, 0.0, 1.0);
        let mut simp: Vec<(Vec<f64>, f64, f64)> = vec![(Vec::new(), 1.0, 1.0)];
        for _ in 0..n - 1 {
            let mut next = Vec::with_capacity(simp.len() * gl.len());
            for (s, w, rem) in &simp {
                for &(t, wt) in &gl {
                    let mut s2 = s.clone();
                    s2.push(rem * t);
                    next.push((s2, w * wt * rem, rem * (1.0 - t)));
                }
            }
            simp = next;
        }
        let m = 2 * n;
        let da = 2.0 * PI / angles as f64;
        let scale = 2f64.powi(1 - n as i32) * da.powi(n as i32);
        let total = angles.pow(n as u32);
        let mut points = Vec::with_capacity(simp.len() * total * m);
        let mut weights = Vec::with_capacity(simp.len() * total);
        for (s, w, rem) in &simp {
            let mut s = s.clone();
            s.push(*rem);
            let moduli: Vec<f64> = s.iter().map(|v| v.max(0.0).sqrt()).collect();
            for idx in 0..total {
                let mut k = idx;
                for r in &moduli {
                    let phi = (k % angles) as f64 * da;
                    k /= angles;
                    points.push(r * phi.cos());
                    points.push(r * phi.sin());
                }
                weights.push(w * scale);
            }
        }
        Ok(SphereRule { n, points, weights })
    }

    pub fn standard(n: usize) -> Result<Self> {
        if n == 2 {
            Self::new(2, SPHERE_ANGLES, SPHERE_SIMPLEX)
        } else {
            // keep the point count manageable above S^3
            Self::new(n, 12, 6)
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[2 * self.n * i..2 * self.n * (i + 1)]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }
}

/// Area of the unit sphere S^{m-1}.
pub fn sphere_area(m: usize) -> f64 {
    // |S^{m-1}| = 2 pi^{m/2} / Gamma(m/2)
    let half = m as f64 / 2.0;
    2.0 * PI.powf(half) / gamma_half(m)
}

fn gamma_half(m: usize) -> f64 {
    // Gamma(m/2) for integer m >= 1
    if m.is_multiple_of(2) {
        (1..m / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x + 0.5 < m as f64 / 2.0 + 1e-9 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// vol(CP^{n-1}) with lines of area pi.
pub fn cp_volume(n: usize) -> f64 {
    PI.powi(n as i32 - 1) / (1..n).map(|k| k as f64).product::<f64>()
}

/// Target of a map: C^k with the flat metric, or CP^1 as the unit sphere in R^3.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Flat(usize),
    Sphere,
}

impl Target {
    pub fn dim(&self) -> usize {
        match self {
            Target::Flat(k) => 2 * k,
            Target::Sphere => 3,
        }
    }

    /// Matrix of J_N at y.
    pub fn structure(&self, y: &[f64]) -> DMatrix<f64> {
        match self {
            Target::Flat(k) => j0_matrix(*k),
            Target::Sphere => {
                let r = (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt().max(1e-300);
                let (a, b, c) = (y[0] / r, y[1] / r, y[2] / r);
                // v -> v x y, the orientation of the chart w = z1 / z2
                DMatrix::from_row_slice(3, 3, &[0.0, c, -b, -c, 0.0, a, b, -a, 0.0])
            }
        }
    }
}

/// Matrix of J0 on R^{2n}: e_{2i} -> e_{2i+1}.
pub fn j0_matrix(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(2 * i + 1, 2 * i)] = 1.0;
        j[(2 * i, 2 * i + 1)] = -1.0;
    }
    j
}

/// Almost complex structure on the domain, equal to J0 at the origin.
///
/// `Pullback` is Phi^* J0 = dPhi^{-1} J0 dPhi for Phi(x) = x + c q(x) with
/// q_i(x) = x_{i+1}^2 (indices mod 2n), so maps v o Phi with v
/// J0-holomorphic are J-holomorphic and |J - J0| grows linearly in |x|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlmostComplexField {
    Standard { n: usize },
    Pullback { n: usize, c: f64 },
}

impl AlmostComplexField {
    pub fn n(&self) -> usize {
        match *self {
            AlmostComplexField::Standard { n } | AlmostComplexField::Pullback { n, .. } => n,
        }
    }

    fn slope_param(&self) -> f64 {
        match *self {
            AlmostComplexField::Standard { .. } => 0.0,
            AlmostComplexField::Pullback { c, .. } => c,
        }
    }

    pub fn phi(&self, x: &[f64], out: &mut [f64]) {
        let c = self.slope_param();
        let m = x.len();
        for i in 0..m {
            out[i] = x[i] + c * x[(i + 1) % m] * x[(i + 1) % m];
        }
    }

    pub fn dphi(&self, x: &[f64]) -> DMatrix<f64> {
        let c = self.slope_param();
        let m = x.len();
        let mut d = DMatrix::identity(m, m);
        for i in 0..m {
            let p = (i + 1) % m;
            d[(i, p)] += 2.0 * c * x[p];
        }
        d
    }

    pub fn j(&self, x: &[f64]) -> DMatrix<f64> {
        let j0 = j0_matrix(self.n());
        match self {
            AlmostComplexField::Standard { .. } => j0,
            AlmostComplexField::Pullback { .. } => {
                let d = self.dphi(x);
                let inv = d.clone().try_inverse().expect("dPhi is invertible near the origin");
                inv * j0 * d
            }
        }
    }

    /// Entries a_kl of J - J0.
    pub fn a(&self, x: &[f64]) -> DMatrix<f64> {
        self.j(x) - j0_matrix(self.n())
    }
}

/// Sampled checks on an almost complex field over B_r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureReport {
    /// max |J^2 + I|.
    pub square_defect: f64,
    /// max |J(x) - J0| / |x|.
    pub slope: f64,
    /// max |J(x) - J(y)| / |x - y| over sampled pairs.
    pub lipschitz: f64,
}

pub fn check_structure(field: &AlmostComplexField, r: f64, samples: usize, seed: u64) -> StructureReport {
    let m = 2 * field.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = DMatrix::<f64>::identity(m, m);
    let j0 = j0_matrix(field.n());
    let mut rep = StructureReport { square_defect: 0.0, slope: 0.0, lipschitz: 0.0 };
    for _ in 0..samples {
        let x = random_in_ball(&mut rng, m, r);
        let y = random_in_ball(&mut rng, m, r);
        let jx = field.j(&x);
        let jy = field.j(&y);
        rep.square_defect = rep.square_defect.max((&jx * &jx + &id).amax());
        let nx = norm(&x);
        if nx > 0.0 {
            rep.slope = rep.slope.max((&jx - &j0).norm() / nx);
        }
        let dxy = norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
        if dxy > 0.0 {
            rep.lipschitz = rep.lipschitz.max((&jx - &jy).norm() / dxy);
        }
    }
    rep
}

fn random_in_ball(rng: &mut ChaCha8Rng, m: usize, r: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let n = norm(&g);
    let rad = r * rng.random::<f64>().powf(1.0 / m as f64);
    g.iter().map(|v| v * rad / n).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Value of a map: writes u(x) into the output slice.
pub type MapFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Radial ladder r_max q^{k}, stored increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    radii: Vec<f64>,
}

impl Ladder {
    pub fn geometric(r_max: f64, levels: usize) -> Result<Self> {
        if !(r_max > 0.0) || levels < 2 {
            return invalid("ladder needs r_max > 0 and at least two levels");
        }
        let mut radii: Vec<f64> = (0..levels).map(|k| r_max * LADDER_RATIO.powi(k as i32)).collect();
        radii.reverse();
        Ok(Ladder { radii })
    }

    pub fn from_radii(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|r| !r.is_finite()) {
            return invalid("ladder radii must be positive, finite and increasing");
        }
        Ok(Ladder { radii })
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn index_of(&self, r: f64) -> Result<usize> {
        self.radii
            .iter()
            .position(|x| (x - r).abs() <= 1e-9 * x)
            .ok_or_else(|| Error::Invalid(format!("radius {r} is not on the grid ladder")))
    }
}

/// A map B^{2n} -> target, sampled on a polar grid.
#[derive(Clone)]
pub struct SampledMap {
    name: String,
    n: usize,
    target: Target,
    f: MapFn,
    /// Relative finite-difference step.
    h: f64,
    ladder: Ladder,
    sphere: Arc<SphereRule>,
}

impl fmt::Debug for SampledMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampledMap")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("target", &self.target)
            .field("h", &self.h)
            .field("levels", &self.ladder.radii.len())
            .finish()
    }
}

impl SampledMap {
    pub fn new(name: &str, n: usize, target: Target, f: MapFn, h: f64, ladder: Ladder) -> Result<Self> {
        if n == 0 {
            return invalid("domain needs n >= 1");
        }
        if !(h > 0.0 && h < 0.5) {
            return invalid(format!("finite-difference step {h} not in (0, 0.5)"));
        }
        let sphere = Arc::new(SphereRule::standard(n)?);
        let map = SampledMap { name: name.to_string(), n, target, f, h, ladder, sphere };
        // values must be finite at a few grid points
        let mut out = vec![0.0; target.dim()];
        for &r in map.ladder.radii.iter().step_by(7) {
            for i in (0..map.sphere.len()).step_by(997) {
                let x: Vec<f64> = map.sphere.point(i).iter().map(|v| v * r).collect();
                (map.f)(&x, &mut out);
                if out.iter().any(|v| !v.is_finite()) {
                    return invalid(format!("map {name} is not finite at {x:?}"));
                }
            }
        }
        Ok(map)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn ladder(&self) -> &Ladder {
        &self.ladder
    }

    pub fn sphere(&self) -> &SphereRule {
        &self.sphere
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    pub fn value(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.target.dim()];
        (self.f)(x, &mut out);
        out
    }

    /// Same map on a different ladder or step.
    pub fn with_grid(&self, h: f64, ladder: Ladder) -> Result<Self> {
        SampledMap::new(&self.name, self.n, self.target, self.f.clone(), h, ladder)
    }

    /// x -> u(x0 + rho x), on the same ladder.
    pub fn dilated(&self, x0: &[f64], rho: f64) -> Result<Self> {
        if !(rho > 0.0) || x0.len() != self.dim() {
            return invalid("dilation needs rho > 0 and a centre of the domain dimension");
        }
        let f = self.f.clone();
        let x0 = x0.to_vec();
        let g: MapFn = Arc::new(move |x: &[f64], out: &mut [f64]| {
            let y: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| b + rho * a).collect();
            f(&y, out)
        });
        SampledMap::new(&format!("{}@{rho}", self.name), self.n, self.target, g, self.h, self.ladder.clone())
    }

    /// Centred differences with absolute step `step`: grad[k][alpha] = d u^alpha / d x_k.
    pub fn gradient(&self, x: &[f64], step: f64) -> Vec<Vec<f64>> {
        let d = self.target.dim();
        let mut xp = x.to_vec();
        let mut up = vec![0.0; d];
        let mut um = vec![0.0; d];
        (0..x.len())
            .map(|k| {
                xp[k] = x[k] + step;
                (self.f)(&xp, &mut up);
                xp[k] = x[k] - step;
                (self.f)(&xp, &mut um);
                xp[k] = x[k];
                (0..d).map(|a| (up[a] - um[a]) / (2.0 * step)).collect()
            })
            .collect()
    }
}

/// Named map families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapFamily {
    Constant,
    /// u = z_1.
    Z1,
    /// u = z_1 z_2.
    Z1Z2,
    /// u = [z_1 : z_2] into the unit sphere.
    Hopf,
    /// u = z_1^2 z_2 + z_2^3, for gradient convergence checks.
    Cubic,
    /// u = z_1 o Phi, holomorphic for the pullback structure of slope c.
    PerturbedZ1 { c: f64 },
}

impl MapFamily {
    pub fn parse(name: &str, c: f64) -> Result<Self> {
        Ok(match name {
            "constant" => MapFamily::Constant,
            "z1" => MapFamily::Z1,
            "z1z2" => MapFamily::Z1Z2,
            "hopf" => MapFamily::Hopf,
            "cubic" => MapFamily::Cubic,
            "perturbed-z1" => MapFamily::PerturbedZ1 { c },
            _ => return invalid(format!("unknown map family '{name}'")),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            MapFamily::Constant => "constant",
            MapFamily::Z1 => "z1",
            MapFamily::Z1Z2 => "z1z2",
            MapFamily::Hopf => "hopf",
            MapFamily::Cubic => "cubic",
            MapFamily::PerturbedZ1 { .. } => "perturbed-z1",
        }
    }

    /// The structure the family is holomorphic for.
    pub fn structure(&self) -> AlmostComplexField {
        match *self {
            MapFamily::PerturbedZ1 { c } => AlmostComplexField::Pullback { n: 2, c },
            _ => AlmostComplexField::Standard { n: 2 },
        }
    }

    pub fn target(&self) -> Target {
        match self {
            MapFamily::Hopf => Target::Sphere,
            _ => Target::Flat(1),
        }
    }

    pub fn function(&self) -> MapFn {
        match *self {
            MapFamily::Constant => Arc::new(|_x: &[f64], out: &mut [f64]| {
                out[0] = 0.3;
                out[1] = -0.2;
            }),
            MapFamily::Z1 => Arc::new(|x: &[f64], out: &mut [f64]| {
                out[0] = x[0];
                out[1] = x[1];
            }),
            MapFamily::Z1Z2 => Arc::new(|x: &[f64], out: &mut [f64]| {
                out[0] = x[0] * x[2] - x[1] * x[3];
                out[1] = x[0] * x[3] + x[1] * x[2];
            }),
            MapFamily::Hopf => Arc::new(|x: &[f64], out: &mut [f64]| {
                let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
                let r2 = a * a + b * b + c * c + d * d;
                // z1 conj(z2)
                out[0] = 2.0 * (a * c + b * d) / r2;
                out[1] = 2.0 * (b * c - a * d) / r2;
                out[2] = (a * a + b * b - c * c - d * d) / r2;
            }),
            MapFamily::Cubic => Arc::new(|x: &[f64], out: &mut [f64]| {
                let (re, im) = cubic(x);
                out[0] = re;
                out[1] = im;
            }),
            MapFamily::PerturbedZ1 { c } => {
                let field = AlmostComplexField::Pullback { n: 2, c };
                Arc::new(move |x: &[f64], out: &mut [f64]| {
                    let mut y = [0.0; 4];
                    field.phi(x, &mut y);
                    out[0] = y[0];
                    out[1] = y[1];
                })
            }
        }
    }

    pub fn sampled(&self, h: f64, ladder: Ladder) -> Result<SampledMap> {
        if let MapFamily::PerturbedZ1 { c } = self {
            if !(c.abs() < 0.5) {
                return invalid(format!("perturbation slope {c} too large (need |c| < 0.5)"));
            }
        }
        SampledMap::new(self.name(), 2, self.target(), self.function(), h, ladder)
    }
}

fn cubic(x: &[f64]) -> (f64, f64) {
    let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
    // z1^2
    let (p, q) = (a * a - b * b, 2.0 * a * b);
    // z1^2 z2
    let (s, t) = (p * c - q * d, p * d + q * c);
    // z2^3
    let (c2, d2) = (c * c - d * d, 2.0 * c * d);
    let (u, v) = (c2 * c - d2 * d, c2 * d + d2 * c);
    (s + u, t + v)
}

/// Exact gradient of the cubic family, laid out like [`SampledMap::gradient`].
pub fn cubic_gradient(x: &[f64]) -> Vec<Vec<f64>> {
    let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
    // df/dz1 = 2 z1 z2, df/dz2 = z1^2 + 3 z2^2
    let f1 = (2.0 * (a * c - b * d), 2.0 * (a * d + b * c));
    let f2 = (a * a - b * b + 3.0 * (c * c - d * d), 2.0 * a * b + 6.0 * c * d);
    // d/dx_{2i} = f_i, d/dx_{2i+1} = i f_i
    vec![vec![f1.0, f1.1], vec![-f1.1, f1.0], vec![f2.0, f2.1], vec![-f2.1, f2.0]]
}

/// Max gradient error of the cubic family at fixed points for steps h and h/2,
/// and their ratio.
pub fn fd_convergence(h: f64) -> Result<(f64, f64, f64)> {
    let u = MapFamily::Cubic.sampled(h, Ladder::geometric(1.0, 2)?)?;
    let pts = [[0.3, -0.2, 0.5, 0.1], [0.6, 0.4, -0.1, 0.2], [-0.2, 0.1, 0.3, -0.7]];
    let err = |step: f64| {
        pts.iter()
            .map(|x| {
                let g = u.gradient(x, step);
                let e = cubic_gradient(x);
                g.iter().flatten().zip(e.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(h), err(h / 2.0));
    Ok((e1, e2, e1 / e2))
}

/// Cumulative ball integrals along the ladder about one centre.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyProfile {
    pub n: usize,
    pub center: Vec<f64>,
    /// Increasing.
    pub radii: Vec<f64>,
    /// int_{B_r} |grad u|^2.
    pub energy: Vec<f64>,
    /// int_{B_r} R^{2-2n} |du/dR|^2.
    pub radial: Vec<f64>,
}

/// |du/dR|^2 by a centred difference along the unit direction w. Exact zero
/// for maps homogeneous of degree 0, unlike the full gradient dotted with w.
fn radial_sq(u: &SampledMap, x: &[f64], w: &[f64], step: f64) -> f64 {
    let d = u.target.dim();
    let (mut up, mut um) = (vec![0.0; d], vec![0.0; d]);
    let xp: Vec<f64> = x.iter().zip(w).map(|(a, b)| a + step * b).collect();
    let xm: Vec<f64> = x.iter().zip(w).map(|(a, b)| a - step * b).collect();
    u.eval(&xp, &mut up);
    u.eval(&xm, &mut um);
    up.iter().zip(&um).map(|(a, b)| ((a - b) / (2.0 * step)).powi(2)).sum()
}

struct NodeSums {
    energy: f64,
    radial: f64,
}

fn sphere_sums(u: &SampledMap, x0: &[f64], r: f64) -> NodeSums {
    let m = u.dim();
    let sph = u.sphere();
    let step = u.h * r;
    let mut x = vec![0.0; m];
    let (mut e, mut rad) = (Vec::with_capacity(sph.len()), Vec::with_capacity(sph.len()));
    for i in 0..sph.len() {
        let w = sph.point(i);
        for k in 0..m {
            x[k] = x0[k] + r * w[k];
        }
        let g = u.gradient(&x, step);
        let e2: f64 = g.iter().flatten().map(|v| v * v).sum();
        e.push(sph.weight(i) * e2);
        rad.push(sph.weight(i) * radial_sq(u, &x, w, step));
    }
    NodeSums { energy: par::sum(&e), radial: par::sum(&rad) }
}

impl EnergyProfile {
    pub fn compute(u: &SampledMap, x0: &[f64]) -> Result<Self> {
        if x0.len() != u.dim() {
            return Err(Error::DimensionMismatch(x0.len(), u.dim()));
        }
        let radii = u.ladder.radii.clone();
        let m = u.dim() as i32;
        // (shell index, node radius, radial weight); shell 0 is the inner ball
        let mut nodes: Vec<(usize, f64, f64)> = Vec::new();
        for (r, w) in quad::gl_interval(INNER_NODES, 0.0, radii[0]) {
            nodes.push((0, r, w));
        }
        for j in 1..radii.len() {
            for (r, w) in quad::gl_interval(SHELL_NODES, radii[j - 1], radii[j]) {
                nodes.push((j, r, w));
            }
        }
        let sums = par::map(&nodes, |&(_, r, _)| sphere_sums(u, x0, r));
        let mut shell_e = vec![Vec::new(); radii.len()];
        let mut shell_r = vec![Vec::new(); radii.len()];
        for ((j, r, w), s) in nodes.iter().zip(&sums) {
            shell_e[*j].push(w * r.powi(m - 1) * s.energy);
            // R^{2-2n} R^{2n-1} = R
            shell_r[*j].push(w * r * s.radial);
        }
        let mut energy = Vec::with_capacity(radii.len());
        let mut radial = Vec::with_capacity(radii.len());
        let (mut ce, mut cr) = (0.0, 0.0);
        for j in 0..radii.len() {
            ce += par::sum(&shell_e[j]);
            cr += par::sum(&shell_r[j]);
            energy.push(ce);
            radial.push(cr);
        }
        Ok(EnergyProfile { n: u.n, center: x0.to_vec(), radii, energy, radial })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    fn index_of(&self, r: f64) -> Result<usize> {
        self.radii
            .iter()
            .position(|x| (x - r).abs() <= 1e-9 * x)
            .ok_or_else(|| Error::Invalid(format!("radius {r} is not on the grid ladder")))
    }

    /// r^{2-2n} int_{B_r} |grad u|^2 at ladder index k.
    pub fn scaled_at(&self, k: usize) -> f64 {
        self.energy[k] * self.radii[k].powi(2 - 2 * self.n as i32)
    }

    pub fn scaled(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.scaled_at(k)).collect()
    }

    pub fn scaled_energy(&self, r: f64) -> Result<f64> {
        Ok(self.scaled_at(self.index_of(r)?))
    }

    pub fn radial_energy(&self, r: f64) -> Result<f64> {
        Ok(self.radial[self.index_of(r)?])
    }
}

pub fn scaled_energy(u: &SampledMap, x0: &[f64], r: f64) -> Result<f64> {
    u.ladder.index_of(r)?;
    EnergyProfile::compute(u, x0)?.scaled_energy(r)
}

pub fn radial_energy(u: &SampledMap, x0: &[f64], r: f64) -> Result<f64> {
    u.ladder.index_of(r)?;
    EnergyProfile::compute(u, x0)?.radial_energy(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapMonotonicity {
    /// Smallest C found; meaningful only when `pass`.
    pub c: f64,
    pub pass: bool,
    /// Worst relative violation of the direct form at C = 0 (0 when it holds).
    pub direct_violation: f64,
    /// Worst relative violation of the reverse form at C = 0.
    pub reverse_violation: f64,
}

/// Worst violations of the two weighted inequalities over all ladder pairs:
/// direct  e^{C t} W(t) - e^{C s} W(s) >= 2 [Rad(t) - Rad(s)],
/// reverse e^{-C t} W(t) - e^{-C s} W(s) <= (2 + C) [Rad(t) - Rad(s)],
/// with W(r) = r^{2-2n} E(r). Violations are relative to the larger side.
pub fn map_monotonicity_violations(p: &EnergyProfile, c: f64, slack: f64) -> (f64, f64) {
    let w = p.scaled();
    let scale = w.iter().fold(0.0f64, |a, b| a.max(b.abs())).max(1e-300);
    let (mut vd, mut vr) = (0.0f64, 0.0f64);
    for t in 0..p.len() {
        for s in 0..t {
            let (rt, rs) = (p.radii[t], p.radii[s]);
            let rad = p.radial[t] - p.radial[s];
            let lhs = (c * rt).exp() * w[t] - (c * rs).exp() * w[s];
            let rhs = 2.0 * rad;
            let size = lhs.abs().max(rhs.abs()).max(1e-12 * scale);
            vd = vd.max((rhs - lhs) / size - slack);
            let lhs2 = (-c * rt).exp() * w[t] - (-c * rs).exp() * w[s];
            let rhs2 = (2.0 + c) * rad;
            let size2 = lhs2.abs().max(rhs2.abs()).max(1e-12 * scale);
            vr = vr.max((lhs2 - rhs2) / size2 - slack);
        }
    }
    (vd.max(0.0), vr.max(0.0))
}

/// Smallest C in [0, 1e3] for which both forms hold on every ladder pair.
pub fn map_monotonicity_check(p: &EnergyProfile, slack: f64) -> Result<MapMonotonicity> {
    if p.len() < 5 {
        return invalid(format!("map monotonicity needs at least 5 scales, got {}", p.len()));
    }
    let ok = |c: f64| {
        let (a, b) = map_monotonicity_violations(p, c, slack);
        a == 0.0 && b == 0.0
    };
    let (direct_violation, reverse_violation) = map_monotonicity_violations(p, 0.0, slack);
    let mk = |c: f64, pass: bool| MapMonotonicity { c, pass, direct_violation, reverse_violation };
    if ok(0.0) {
        return Ok(mk(0.0, true));
    }
    if !ok(MAP_CMAX) {
        return Ok(mk(f64::INFINITY, false));
    }
    let (mut lo, mut hi) = (0.0, MAP_CMAX);
    while hi - lo > 1e-6 * hi.max(1e-6) {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(mk(hi, true))
}

/// xi(x) = (1 - |x|^2 / rho^2)_+^4 (A x + b), supported in the closed ball B_rho.
#[derive(Debug, Clone, PartialEq)]
pub struct TestField {
    pub rho: f64,
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
}

impl TestField {
    /// Radial bump: A = I, b = 0.
    pub fn radial(m: usize, rho: f64) -> Self {
        TestField { rho, a: DMatrix::identity(m, m), b: vec![0.0; m] }
    }

    pub fn random(m: usize, rho: f64, rng: &mut ChaCha8Rng) -> Self {
        let a = DMatrix::from_fn(m, m, |_, _| rng.sample(StandardNormal));
        let b = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal) / rho).collect();
        TestField { rho, a, b }
    }

    /// A reproducible battery: the radial bump followed by random fields.
    pub fn battery(m: usize, rho: f64, count: usize, seed: u64) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = vec![TestField::radial(m, rho)];
        while v.len() < count {
            v.push(TestField::random(m, rho, &mut rng));
        }
        v
    }

    /// Matrix d xi^j / d x_i, indexed [i][j].
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let m = x.len();
        let t = 1.0 - x.iter().map(|v| v * v).sum::<f64>() / (self.rho * self.rho);
        if t <= 0.0 {
            return DMatrix::zeros(m, m);
        }
        let phi = t.powi(4);
        let dphi = 4.0 * t.powi(3);
        let ax: Vec<f64> = (0..m).map(|j| (0..m).map(|k| self.a[(j, k)] * x[k]).sum::<f64>() + self.b[j]).collect();
        DMatrix::from_fn(m, m, |i, j| phi * self.a[(j, i)] + dphi * (-2.0 * x[i] / (self.rho * self.rho)) * ax[j])
    }
}

/// Both sides of the inner-variation identity for one test field.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerVariation {
    /// int (|grad u|^2 delta_ij - 2 <d_i u, d_j u>) d_i xi^j.
    pub lhs: f64,
    /// The four structure terms, in order.
    pub terms: [f64; 4],
    pub residual: f64,
    /// int_{B_rho} |grad u|^2.
    pub energy: f64,
}

const VARIATION_RADIAL: usize = 16;

/// Quadrature of both sides over B_rho about the origin. The structure terms
/// contract the shared column index of a (a + 2 J0)^T.
pub fn inner_variation_residual(u: &SampledMap, xi: &TestField, j: &AlmostComplexField) -> Result<InnerVariation> {
    let m = u.dim();
    if j.n() != u.n || xi.b.len() != m || xi.a.nrows() != m {
        return Err(Error::DimensionMismatch(j.n() * 2, m));
    }
    if !(xi.rho > 0.0) || xi.rho > u.ladder.r_max() * (1.0 + 1e-12) {
        return invalid(format!(
            "test field radius {} does not give compact support inside the ball of radius {}",
            xi.rho,
            u.ladder.r_max()
        ));
    }
    let j0 = j0_matrix(u.n);
    let sph = u.sphere();
    let nodes = quad::gl_interval(VARIATION_RADIAL, 0.0, xi.rho);
    let per_node = par::map(&nodes, |&(r, wr)| {
        let mut acc = (0..6).map(|_| Vec::with_capacity(sph.len())).collect::<Vec<_>>();
        let step = u.h * r;
        for i in 0..sph.len() {
            let x: Vec<f64> = sph.point(i).iter().map(|v| r * v).collect();
            let w = wr * r.powi(m as i32 - 1) * sph.weight(i);
            let g = u.gradient(&x, step);
            let d = g[0].len();
            let dxi = xi.jacobian(&x);
            let div = dxi.trace();
            // G_kl = <d_k u, d_l u>
            let gm = DMatrix::from_fn(m, m, |k, l| (0..d).map(|a| g[k][a] * g[l][a]).sum::<f64>());
            let e2 = gm.trace();
            let lhs: f64 = (0..m)
                .map(|i| (0..m).map(|jj| (if i == jj { e2 } else { 0.0 } - 2.0 * gm[(i, jj)]) * dxi[(i, jj)]).sum::<f64>())
                .sum();
            let a = j.a(&x);
            let (t1, t2, t3, t4) = if a.amax() == 0.0 {
                (0.0, 0.0, 0.0, 0.0)
            } else {
                let y = u.value(&x);
                let b = u.target.structure(&y);
                // Q_kl = sum d_k u^alpha d_l u^beta b_{beta alpha}
                let q = DMatrix::from_fn(m, m, |k, l| {
                    let mut s = 0.0;
                    for al in 0..d {
                        for be in 0..d {
                            s += g[k][al] * g[l][be] * b[(be, al)];
                        }
                    }
                    s
                });
                let nmat = &a * (&a + 2.0 * &j0).transpose();
                let t1 = -0.5 * q.component_mul(&a).sum() * div;
                // sum_{k,i,j} Q_kj a_ki dxi_ij = tr(Q^T a dxi)
                let t2 = (q.transpose() * &a * &dxi).trace();
                let t3 = -0.5 * gm.component_mul(&nmat).sum() * div;
                // sum G_{k'j} N_{k'i} dxi_ij = tr(G^T N dxi)
                let t4 = (gm.transpose() * &nmat * &dxi).trace();
                (t1, t2, t3, t4)
            };
            for (slot, v) in acc.iter_mut().zip([lhs, t1, t2, t3, t4, e2]) {
                slot.push(w * v);
            }
        }
        acc.iter().map(|v| par::sum(v)).collect::<Vec<f64>>()
    });
    let tot: Vec<f64> = (0..6).map(|k| par::sum(&per_node.iter().map(|v| v[k]).collect::<Vec<_>>())).collect();
    let terms = [tot[1], tot[2], tot[3], tot[4]];
    Ok(InnerVariation { lhs: tot[0], terms, residual: tot[0] - terms.iter().sum::<f64>(), energy: tot[5] })
}

/// Integrand for line slicing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineDensity {
    /// |grad u|^2.
    Energy,
    /// |du/dR|^2 about the centre.
    Radial,
}

fn density_at(u: &SampledMap, x0: &[f64], x: &[f64], which: LineDensity) -> f64 {
    let rel: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
    let r = norm(&rel).max(1e-300);
    let step = u.h * r;
    match which {
        LineDensity::Energy => u.gradient(x, step).iter().flatten().map(|v| v * v).sum(),
        LineDensity::Radial => {
            let w: Vec<f64> = rel.iter().map(|v| v / r).collect();
            radial_sq(u, x, &w, step)
        }
    }
}

const LINE_RADIAL: usize = 16;
const LINE_ANGLES: usize = 32;
const BALL_RADIAL: usize = 16;

/// int_{B_r(x0)} g by the polar grid.
pub fn ball_integral(u: &SampledMap, x0: &[f64], r: f64, which: LineDensity) -> Result<f64> {
    if x0.len() != u.dim() {
        return Err(Error::DimensionMismatch(x0.len(), u.dim()));
    }
    let m = u.dim();
    let sph = u.sphere();
    let nodes = quad::gl_interval(BALL_RADIAL, 0.0, r);
    let vals = par::map(&nodes, |&(rr, wr)| {
        let v: Vec<f64> = (0..sph.len())
            .map(|i| {
                let x: Vec<f64> = sph.point(i).iter().zip(x0).map(|(w, c)| c + rr * w).collect();
                sph.weight(i) * density_at(u, x0, &x, which)
            })
            .collect();
        wr * rr.powi(m as i32 - 1) * par::sum(&v)
    });
    Ok(par::sum(&vals))
}

/// Line integral int_{L_p cap B_r} g |x - x0|^{2n-2} dA over the complex line x0 + C p.
pub fn line_integral(u: &SampledMap, x0: &[f64], p: &[f64], r: f64, which: LineDensity) -> f64 {
    let m = u.dim();
    let nodes = quad::gl_interval(LINE_RADIAL, 0.0, r);
    let da = 2.0 * PI / LINE_ANGLES as f64;
    let mut acc = Vec::with_capacity(nodes.len() * LINE_ANGLES);
    let mut x = vec![0.0; m];
    for &(t, wt) in &nodes {
        for k in 0..LINE_ANGLES {
            let th = (k as f64 + 0.5) * da;
            let (c, s) = (th.cos(), th.sin());
            for i in 0..m / 2 {
                let (pr, pi) = (p[2 * i], p[2 * i + 1]);
                x[2 * i] = x0[2 * i] + t * (c * pr - s * pi);
                x[2 * i + 1] = x0[2 * i + 1] + t * (c * pi + s * pr);
            }
            acc.push(wt * da * t.powi(m as i32 - 1) * density_at(u, x0, &x, which));
        }
    }
    par::sum(&acc)
}

/// Integrals of |du(X)|^2 and |du(J0 X)|^2 over the disk of radius r in the
/// line x0 + C p, with X = p.
pub fn energy_split(u: &SampledMap, x0: &[f64], p: &[f64], r: f64) -> (f64, f64) {
    let m = u.dim();
    let jp: Vec<f64> = crate::exterior::j0(p);
    let nodes = quad::gl_interval(LINE_RADIAL, 0.0, r);
    let da = 2.0 * PI / LINE_ANGLES as f64;
    let (mut ax, mut aj) = (Vec::new(), Vec::new());
    let mut x = vec![0.0; m];
    for &(t, wt) in &nodes {
        for k in 0..LINE_ANGLES {
            let th = (k as f64 + 0.5) * da;
            let (c, s) = (th.cos(), th.sin());
            for i in 0..m / 2 {
                let (pr, pi) = (p[2 * i], p[2 * i + 1]);
                x[2 * i] = x0[2 * i] + t * (c * pr - s * pi);
                x[2 * i + 1] = x0[2 * i + 1] + t * (c * pi + s * pr);
            }
            let g = u.gradient(&x, u.h * t);
            let d = g[0].len();
            let dir = |v: &[f64]| -> f64 { (0..d).map(|a| (0..m).map(|k| g[k][a] * v[k]).sum::<f64>().powi(2)).sum() };
            ax.push(wt * da * t * dir(p));
            aj.push(wt * da * t * dir(&jp));
        }
    }
    (par::sum(&ax), par::sum(&aj))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoareaReport {
    pub per_line: Vec<f64>,
    /// vol(CP^{n-1}) times the mean line integral.
    pub reassembled: f64,
    /// Direct ball quadrature.
    pub direct: f64,
    pub rel_error: f64,
    /// Bounds C1 - C2 r <= |x|^{2n-2} Jf <= C1 + C2 r from sampled points.
    pub c1: f64,
    pub c2: f64,
    /// (C1 + C2 r) / (C1 - C2 r).
    pub jacobian_ratio: f64,
    pub seed: u64,
}

const JACOBIAN_SAMPLES: usize = 256;

/// Normal Jacobian of x -> [x] in CP^{n-1}, with lines of area pi.
pub fn hopf_normal_jacobian(x: &[f64]) -> f64 {
    let m = x.len();
    let n = m / 2;
    let proj = |y: &[f64]| -> Vec<f64> {
        // entries of y y^* / |y|^2, real and imaginary parts
        let r2: f64 = y.iter().map(|v| v * v).sum();
        let mut out = Vec::with_capacity(2 * n * n);
        for i in 0..n {
            for k in 0..n {
                let (a, b) = (y[2 * i], y[2 * i + 1]);
                let (c, d) = (y[2 * k], y[2 * k + 1]);
                out.push((a * c + b * d) / r2);
                out.push((b * c - a * d) / r2);
            }
        }
        out
    };
    let step = 1e-5 * norm(x);
    let mut y = x.to_vec();
    let cols: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            y[k] = x[k] + step;
            let p = proj(&y);
            y[k] = x[k] - step;
            let q = proj(&y);
            y[k] = x[k];
            p.iter().zip(&q).map(|(a, b)| (a - b) / (2.0 * step)).collect()
        })
        .collect();
    // half the Frobenius metric puts CP^1 at area pi
    let g = DMatrix::from_fn(m, m, |i, j| 0.5 * cols[i].iter().zip(&cols[j]).map(|(a, b)| a * b).sum::<f64>());
    let mut ev: Vec<f64> = SymmetricEigen::new(g).eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev[..m - 2].iter().map(|v| v.max(0.0)).product::<f64>().sqrt()
}

/// Slice B_r(x0) by complex lines through x0 sampled uniformly in CP^{n-1}
/// and reassemble the ball integral.
pub fn coarea_slice_check(u: &SampledMap, x0: &[f64], r: f64, which: LineDensity, lines: usize, seed: u64) -> Result<CoareaReport> {
    let m = u.dim();
    if u.n < 2 {
        return invalid("line slicing needs n >= 2");
    }
    if lines < MIN_LINES {
        return invalid(format!("too few line samples: {lines} < {MIN_LINES}"));
    }
    if x0.len() != m {
        return Err(Error::DimensionMismatch(x0.len(), m));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<Vec<f64>> = (0..lines)
        .map(|_| {
            let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
            let n = norm(&g);
            g.iter().map(|v| v / n).collect()
        })
        .collect();
    let per_line = par::map(&dirs, |p| line_integral(u, x0, p, r, which));
    let reassembled = cp_volume(u.n) * par::sum(&per_line) / lines as f64;
    let direct = ball_integral(u, x0, r, which)?;
    let scale = direct.abs().max(reassembled.abs()).max(1e-300);
    let rel_error = (reassembled - direct).abs() / scale;
    let pts: Vec<Vec<f64>> = (0..JACOBIAN_SAMPLES).map(|_| random_in_ball(&mut rng, m, r)).collect();
    let q = par::map(&pts, |x| hopf_normal_jacobian(x) * norm(x).powi(m as i32 - 2));
    let (lo, hi) = q.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    let c1 = 0.5 * (lo + hi);
    let c2 = 0.5 * (hi - lo) / r;
    Ok(CoareaReport { per_line, reassembled, direct, rel_error, c1, c2, jacobian_ratio: hi / lo, seed })
}

/// || u(x0 + tau .) - u(x0 + sigma .) ||_{L^2(S^{2n-1})}, chart distance in the target.
pub fn tangent_map_gap(u: &SampledMap, x0: &[f64], sigma: f64, tau: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < tau) {
        return invalid(format!("need 0 < sigma < tau, got {sigma}, {tau}"));
    }
    if tau > u.ladder.r_max() * (1.0 + 1e-12) {
        return invalid(format!("tau = {tau} beyond the grid radius {}", u.ladder.r_max()));
    }
    if x0.len() != u.dim() {
        return Err(Error::DimensionMismatch(x0.len(), u.dim()));
    }
    let sph = u.sphere();
    let d = u.target.dim();
    let idx: Vec<usize> = (0..sph.len()).collect();
    let v = par::map(&idx, |&i| {
        let w = sph.point(i);
        let a: Vec<f64> = w.iter().zip(x0).map(|(p, c)| c + tau * p).collect();
        let b: Vec<f64> = w.iter().zip(x0).map(|(p, c)| c + sigma * p).collect();
        let (mut ua, mut ub) = (vec![0.0; d], vec![0.0; d]);
        u.eval(&a, &mut ua);
        u.eval(&b, &mut ub);
        sph.weight(i) * ua.iter().zip(&ub).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()
    });
    Ok(par::sum(&v).sqrt())
}

/// Gaps between successive ladder radii (tau_k, tau_{k+step}) and their log-log slope against tau.
#[derive(Debug, Clone, PartialEq)]
pub struct GapTrace {
    pub taus: Vec<f64>,
    pub gaps: Vec<f64>,
    /// None when every gap vanishes.
    pub slope: Option<f64>,
    pub rms: Option<f64>,
}

pub fn gap_trace(u: &SampledMap, x0: &[f64], ratio: f64, count: usize) -> Result<GapTrace> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return invalid("gap ratio must lie in (0,1)");
    }
    let r = u.ladder.radii();
    let taus: Vec<f64> = r.iter().rev().take(count).cloned().collect();
    let gaps = taus.iter().map(|&t| tangent_map_gap(u, x0, t * ratio, t)).collect::<Result<Vec<_>>>()?;
    let (slope, rms) = if gaps.iter().all(|g| *g > 1e-300) {
        let (s, e) = power_fit(&taus, &gaps)?;
        (Some(s), Some(e))
    } else {
        (None, None)
    };
    Ok(GapTrace { taus, gaps, slope, rms })
}

/// Rate fit of the scaled energy trace toward its limit.
pub fn map_rate_fit(p: &EnergyProfile, mode: RateMode) -> Result<RateFit> {
    let radii: Vec<f64> = p.radii.iter().rev().cloned().collect();
    let vals: Vec<f64> = p.scaled().into_iter().rev().collect();
    rate_fit_values(&radii, &vals, mode)
}

/// Max relative defect of du o J = J_N o du at sampled points of B_r.
pub fn holomorphy_defect(u: &SampledMap, j: &AlmostComplexField, r: f64, samples: usize, seed: u64) -> f64 {
    let m = u.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = random_in_ball(&mut rng, m, r);
        let g = u.gradient(&x, 1e-5 * norm(&x));
        let d = g[0].len();
        // du as a d x m matrix
        let du = DMatrix::from_fn(d, m, |a, k| g[k][a]);
        let jx = j.j(&x);
        let b = u.target.structure(&u.value(&x));
        let lhs = &du * jx;
        let rhs = b * &du;
        let size = du.norm().max(1e-300);
        worst = worst.max((lhs - rhs).norm() / size);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lad() -> Ladder {
        Ladder::geometric(1.0, 12).unwrap()
    }

    #[test]
    fn sphere_rule_area_and_moments() {
        for n in 1..=3 {
            let s = SphereRule::standard(n).unwrap();
            let tot: f64 = (0..s.len()).map(|i| s.weight(i)).sum();
            assert!((tot - sphere_area(2 * n)).abs() < 1e-12 * tot, "n={n}");
            // mean of x_0^2 is 1/(2n)
            let m2: f64 = (0..s.len()).map(|i| s.weight(i) * s.point(i)[0].powi(2)).sum();
            assert!((m2 / tot - 0.5 / n as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_area_values() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn pullback_structure_squares_to_minus_one() {
        let f = AlmostComplexField::Pullback { n: 2, c: 0.025 };
        let rep = check_structure(&f, 1.0, 200, 3);
        assert!(rep.square_defect < 1e-10);
        assert!(rep.slope <= 0.1 + 1e-12, "slope {}", rep.slope);
        assert!(rep.lipschitz.is_finite());
        assert_eq!(f.j(&[0.0; 4]), j0_matrix(2));
    }

    #[test]
    fn families_are_holomorphic_for_their_structure() {
        for fam in [MapFamily::Z1, MapFamily::Z1Z2, MapFamily::Hopf, MapFamily::Cubic, MapFamily::PerturbedZ1 { c: 0.025 }] {
            let u = fam.sampled(FD_STEP, lad()).unwrap();
            let d = holomorphy_defect(&u, &fam.structure(), 1.0, 50, 1);
            assert!(d < 1e-6, "{}: {d}", fam.name());
        }
    }

    #[test]
    fn fd_error_is_second_order() {
        let (e1, e2, ratio) = fd_convergence(0.01).unwrap();
        assert!(e1 > e2 && (3.5..=4.5).contains(&ratio), "{e1} {e2} {ratio}");
    }

    #[test]
    fn cp_volumes() {
        assert!((cp_volume(2) - PI).abs() < 1e-15);
        assert!((cp_volume(3) - PI * PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn z1_scaled_energy_is_pi_squared_r_squared() {
        let u = MapFamily::Z1.sampled(FD_STEP, lad()).unwrap();
        let p = EnergyProfile::compute(&u, &[0.0; 4]).unwrap();
        for (k, &r) in p.radii.iter().enumerate() {
            let want = PI * PI * r * r;
            assert!((p.scaled_at(k) / want - 1.0).abs() < 1e-10);
            // |du/dR|^2 averages to 1/2 on spheres: int R^{-2} ... = pi^2 r^2 / 2
            assert!((p.radial[k] / (0.5 * PI * PI * r * r) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn off_ladder_radius_rejected() {
        let u = MapFamily::Z1.sampled(FD_STEP, lad()).unwrap();
        assert!(scaled_energy(&u, &[0.0; 4], 0.55).is_err());
    }

    #[test]
    fn constant_map_has_no_energy() {
        let u = MapFamily::Constant.sampled(FD_STEP, lad()).unwrap();
        let p = EnergyProfile::compute(&u, &[0.0; 4]).unwrap();
        assert!(p.energy.iter().all(|e| *e == 0.0));
        let xi = TestField::radial(4, 0.9);
        let iv = inner_variation_residual(&u, &xi, &AlmostComplexField::Standard { n: 2 }).unwrap();
        assert_eq!(iv.residual, 0.0);
    }

    #[test]
    fn test_field_vanishes_outside_support() {
        let xi = TestField::radial(4, 0.5);
        assert_eq!(xi.jacobian(&[0.6, 0.0, 0.0, 0.0]).amax(), 0.0);
        assert!(xi.jacobian(&[0.1, 0.0, 0.0, 0.0]).amax() > 0.0);
    }

    #[test]
    fn noncompact_test_field_rejected() {
        let u = MapFamily::Z1.sampled(FD_STEP, lad()).unwrap();
        let xi = TestField::radial(4, 1.5);
        assert!(inner_variation_residual(&u, &xi, &AlmostComplexField::Standard { n: 2 }).is_err());
    }

    #[test]
    fn hopf_jacobian_is_inverse_square() {
        for x in [[0.3, 0.1, -0.2, 0.4], [0.01, 0.0, 0.02, -0.01]] {
            let q = hopf_normal_jacobian(&x) * norm(&x).powi(2);
            assert!((q - 1.0).abs() < 1e-6, "{q}");
        }
    }

    #[test]
    fn too_few_lines_rejected() {
        let u = MapFamily::Z1.sampled(FD_STEP, lad()).unwrap();
        assert!(coarea_slice_check(&u, &[0.0; 4], 0.5, LineDensity::Energy, 10, 1).is_err());
    }
}
