//! Blow-up analysis at a point: density traces, monotonicity, conical
//! defect, Hopf projection mass, tangent directions and their uniqueness,
//! good slices, Dirichlet energy decay and rate fits.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::calibrations::{fs_distance, hopf_jacobian, FubiniStudy};
use crate::currents::{loop_poincare, PoincareReport, Polyline1Current, Region, TriCurrent};
use crate::exterior::{dot, norm};
use crate::{invalid, par, Error, Result};

/// Dimension constant used in the Hopf mass estimate for R^m: m.
pub fn massestimate_constant(m: usize) -> f64 {
    crate::exterior::vectest_constant(m)
}

/// Configured linear slack K for non-closed fields.
pub const PERTURBATION_K: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityTrace {
    pub center: Vec<f64>,
    /// Strictly decreasing.
    pub radii: Vec<f64>,
    pub masses: Vec<f64>,
    pub theta: Vec<f64>,
}

impl DensityTrace {
    pub fn from_samples(center: Vec<f64>, radii: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if radii.len() != masses.len() || radii.is_empty() {
            return invalid("radii and masses must have equal nonzero length");
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) || radii.iter().any(|r| !(*r > 0.0)) {
            return invalid("radii must be positive and strictly decreasing");
        }
        if masses.iter().any(|m| !(*m >= 0.0)) {
            return invalid("masses must be nonnegative");
        }
        let theta = radii.iter().zip(&masses).map(|(r, m)| m / (r * r)).collect();
        Ok(DensityTrace { center, radii, masses, theta })
    }

    pub fn normalized(&self) -> Vec<f64> {
        self.theta.iter().map(|t| t / PI).collect()
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }
}

fn check_center(c: &TriCurrent, x0: &[f64]) -> Result<()> {
    if x0.len() != c.dim() {
        return Err(Error::DimensionMismatch(x0.len(), c.dim()));
    }
    let d = c.distance_to(x0);
    if d > c.mesh_size() {
        return invalid(format!("center is {d:e} from the support, more than the mesh size"));
    }
    Ok(())
}

/// Geometric ladder r_max q^i, i = 0..n.
pub fn ladder(r_max: f64, n: usize, q: f64) -> Result<Vec<f64>> {
    if !(q > 0.0 && q < 1.0) {
        return invalid(format!("ladder ratio {q} not in (0,1)"));
    }
    if !(r_max > 0.0) {
        return invalid("ladder needs r_max > 0");
    }
    Ok((0..n).map(|i| r_max * q.powi(i as i32)).collect())
}

/// M(C ⌞ B_r(x0)) / r^2 along the ladder r_max q^i.
pub fn density_trace(c: &TriCurrent, x0: &[f64], r_max: f64, n: usize, q: f64) -> Result<DensityTrace> {
    if n < 4 {
        return invalid(format!("density trace needs N >= 4, got {n}"));
    }
    let radii = ladder(r_max, n, q)?;
    check_center(c, x0)?;
    let extent = c.vertices().iter().map(|v| dist(v, x0)).fold(0.0, f64::max);
    if r_max > extent {
        return invalid(format!("r_max = {r_max} exceeds the mesh extent {extent}"));
    }
    let masses = radii.iter().map(|&r| c.mass(&Region::ball(x0, r))).collect::<Result<Vec<_>>>()?;
    DensityTrace::from_samples(x0.to_vec(), radii, masses)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monotonicity {
    /// Smallest C1 found; meaningful only when `pass`.
    pub c1: f64,
    pub pass: bool,
}

pub const MONOTONICITY_CMAX: f64 = 1e3;

/// Is (e^{C r} + C r) theta(r) nondecreasing in r within the relative tolerance?
pub fn weighted_monotone(trace: &DensityTrace, c1: f64, tol: f64) -> bool {
    let f: Vec<f64> = trace
        .radii
        .iter()
        .zip(&trace.theta)
        .map(|(r, t)| ((c1 * r).exp() + c1 * r) * t)
        .collect();
    // radii decrease along the trace, so f must not increase
    f.windows(2).all(|w| w[1] <= w[0] + tol * w[0].abs().max(w[1].abs()))
}

/// Smallest C1 in [0, 1e3] making the weighted density monotone.
pub fn monotonicity_check(trace: &DensityTrace, tol: f64) -> Result<Monotonicity> {
    if trace.len() < 4 {
        return invalid("monotonicity check needs N >= 4");
    }
    if weighted_monotone(trace, 0.0, tol) {
        return Ok(Monotonicity { c1: 0.0, pass: true });
    }
    if !weighted_monotone(trace, MONOTONICITY_CMAX, tol) {
        return Ok(Monotonicity { c1: f64::INFINITY, pass: false });
    }
    let (mut lo, mut hi) = (0.0, MONOTONICITY_CMAX);
    while hi - lo > 1e-6 * hi.max(1e-6) {
        let mid = 0.5 * (lo + hi);
        if weighted_monotone(trace, mid, tol) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Monotonicity { c1: hi, pass: true })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicalDefect {
    pub value: f64,
    /// True when some triangle was not omega0-calibrated, so the raw
    /// |tau ^ d/dr|^2 was used in place of a decomposition.
    pub raw: bool,
}

fn check_annulus(s: f64, r: f64) -> Result<()> {
    if !(s > 0.0 && s < r) {
        return invalid(format!("need 0 < s < r, got s = {s}, r = {r}"));
    }
    Ok(())
}

/// |e1 ^ e2 ^ u|^2 for orthonormal e1, e2 and a unit u.
fn plane_wedge_sq(e1: &[f64], e2: &[f64], u: &[f64]) -> f64 {
    let a = dot(u, e1);
    let b = dot(u, e2);
    (1.0 - a * a - b * b).max(0.0)
}

/// Integral over the annulus of |x - x0|^{-2} |tau ^ d/dr|^2.
pub fn conical_defect(c: &TriCurrent, x0: &[f64], s: f64, r: f64) -> Result<ConicalDefect> {
    check_annulus(s, r)?;
    let w0 = crate::exterior::omega0(c.dim());
    let raw = (0..c.num_triangles()).any(|t| {
        let (e1, e2) = c.frame(t);
        w0.on_pair(e1, e2) < 1.0 - crate::CALIBRATED_TOL
    });
    let value = c.integrate(&Region::annulus(x0, s, r), |t, x| {
        let y: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
        let r2 = dot(&y, &y);
        let ny = r2.sqrt();
        let u: Vec<f64> = y.iter().map(|v| v / ny).collect();
        let (e1, e2) = c.frame(t);
        plane_wedge_sq(e1, e2, &u) / r2
    })?;
    Ok(ConicalDefect { value: value.max(0.0), raw })
}

/// Area of pi_*[C ⌞ annulus] counted with multiplicity, pi = H((x - x0)/|x - x0|).
pub fn hopf_projection_mass(c: &TriCurrent, x0: &[f64], s: f64, r: f64) -> Result<f64> {
    check_annulus(s, r)?;
    if x0.len() != c.dim() {
        return Err(Error::DimensionMismatch(x0.len(), c.dim()));
    }
    c.integrate(&Region::annulus(x0, s, r), |t, x| {
        let y: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
        let (e1, e2) = c.frame(t);
        hopf_jacobian(&y, e1, e2)
    })
}

/// The Hopf mass estimate at one annulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassEstimate {
    pub s: f64,
    pub r: f64,
    pub hopf: f64,
    /// theta(r) - theta(s)
    pub dtheta: f64,
    pub constant: f64,
    /// Smallest K with hopf <= constant dtheta / pi + K r.
    pub k_needed: f64,
}

impl MassEstimate {
    pub fn holds(&self, k: f64) -> bool {
        self.hopf <= self.constant * self.dtheta / PI + k * self.r + 1e-12
    }
}

pub fn mass_estimate(c: &TriCurrent, x0: &[f64], s: f64, r: f64) -> Result<MassEstimate> {
    let hopf = hopf_projection_mass(c, x0, s, r)?;
    let mr = c.mass(&Region::ball(x0, r))?;
    let ms = c.mass(&Region::ball(x0, s))?;
    let dtheta = mr / (r * r) - ms / (s * s);
    let constant = massestimate_constant(c.dim());
    let k_needed = ((hopf - constant * dtheta / PI) / r).max(0.0);
    Ok(MassEstimate { s, r, hopf, dtheta, constant, k_needed })
}

/// Both sides of e^{-C r} theta(r) - e^{-C s} theta(s) <= C * (conical defect on (s, r)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRate {
    pub c1: f64,
    pub lhs: f64,
    pub rhs: f64,
}

impl CompareRate {
    pub fn holds(&self, rel: f64) -> bool {
        self.lhs <= self.rhs + rel * self.rhs.abs() + 1e-12
    }
}

pub fn compare_rate(c: &TriCurrent, x0: &[f64], s: f64, r: f64, c1: f64) -> Result<CompareRate> {
    let def = conical_defect(c, x0, s, r)?;
    let tr = c.mass(&Region::ball(x0, r))? / (r * r);
    let ts = c.mass(&Region::ball(x0, s))? / (s * s);
    let lhs = (-c1 * r).exp() * tr - (-c1 * s).exp() * ts;
    Ok(CompareRate { c1, lhs, rhs: c1 * def.value })
}

/// One cluster of slice directions in CP^{n-1}.
#[derive(Debug, Clone)]
pub struct Cluster {
    /// Total (slice mass) / (2 pi r).
    pub weight: f64,
    /// Weighted principal line of the cluster, as a unit vector of R^{2n}.
    pub center: Vec<f64>,
    /// Arc-length quantile representatives with equal shares of the weight.
    pub reps: Vec<(Vec<f64>, f64)>,
    /// Largest FS distance from the centre.
    pub radius: f64,
    pub points: usize,
}

#[derive(Debug, Clone)]
pub struct DirectionCluster {
    pub scale: f64,
    pub clusters: Vec<Cluster>,
    /// Cluster count at the finer threshold; equal counts mean the split is stable.
    pub finer_count: usize,
}

impl DirectionCluster {
    pub fn stable(&self) -> bool {
        self.finer_count == self.clusters.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.clusters.iter().map(|c| c.weight).sum()
    }
}

pub const CLUSTER_DELTA: f64 = 0.1;
pub const CLUSTER_DELTA_FINE: f64 = 0.05;
pub const MAX_REPS: usize = 16;

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut k = i;
    while parent[k] != r {
        let next = parent[k];
        parent[k] = r;
        k = next;
    }
    r
}

/// Single-linkage labels at the FS threshold, in order of first appearance.
fn single_linkage(points: &[Vec<f64>], delta: f64) -> Vec<usize> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    // consecutive slice points are usually close; pairs are checked exhaustively
    let close: Vec<Vec<usize>> = par::map_range(n, |i| {
        ((i + 1)..n).filter(|&j| fs_distance(&points[i], &points[j]) < delta).collect()
    });
    for (i, list) in close.iter().enumerate() {
        for &j in list {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    let mut out = vec![0; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if label[root] == usize::MAX {
            label[root] = next;
            next += 1;
        }
        out[i] = label[root];
    }
    out
}

/// Top eigenvector of sum_k w_k z_k z_k^H as a real unit vector.
fn principal_line(points: &[&Vec<f64>], weights: &[f64]) -> Vec<f64> {
    let n = points[0].len() / 2;
    let mut h = DMatrix::<Complex<f64>>::zeros(n, n);
    for (p, w) in points.iter().zip(weights) {
        let z = crate::calibrations::to_complex(p);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] += z[i] * z[j].conj() * *w;
            }
        }
    }
    let eig = SymmetricEigen::new(h);
    let mut k = 0;
    for i in 1..n {
        if eig.eigenvalues[i] > eig.eigenvalues[k] {
            k = i;
        }
    }
    let col: Vec<Complex<f64>> = eig.eigenvectors.column(k).iter().cloned().collect();
    crate::calibrations::from_complex(&col)
}

/// Cluster the slice at radius r in CP^{m/2-1}.
pub fn tangent_directions(c: &TriCurrent, x0: &[f64], r: f64) -> Result<DirectionCluster> {
    let slice = c.slice_sphere(x0, r)?;
    let curve = &slice.curve;
    if curve.is_empty() {
        return Err(Error::EmptySlice(r));
    }
    let mids: Vec<Vec<f64>> = curve
        .segs
        .iter()
        .map(|s| curve.points[s.a].iter().zip(&curve.points[s.b]).zip(x0).map(|((p, q), o)| 0.5 * (p + q) - o).collect())
        .collect();
    let lens: Vec<f64> = curve.segs.iter().map(|s| s.mult as f64 * curve.len(s)).collect();
    let labels = single_linkage(&mids, CLUSTER_DELTA);
    let fine = single_linkage(&mids, CLUSTER_DELTA_FINE);
    let count = labels.iter().max().map_or(0, |m| m + 1);
    let finer_count = fine.iter().max().map_or(0, |m| m + 1);
    let per = (MAX_REPS / count.max(1)).max(1);
    let mut clusters = Vec::with_capacity(count);
    for k in 0..count {
        let idx: Vec<usize> = (0..mids.len()).filter(|&i| labels[i] == k).collect();
        let pts: Vec<&Vec<f64>> = idx.iter().map(|&i| &mids[i]).collect();
        let ws: Vec<f64> = idx.iter().map(|&i| lens[i]).collect();
        let total: f64 = ws.iter().sum();
        let weight = total / (2.0 * PI * slice.rho);
        let center = principal_line(&pts, &ws);
        let radius = pts.iter().map(|p| fs_distance(p, &center)).fold(0.0, f64::max);
        // walk the cluster in slice order and pick arc-length quantiles
        let mut reps = Vec::with_capacity(per);
        let mut acc = 0.0;
        let mut next_q = 0;
        for (p, w) in pts.iter().zip(&ws) {
            let target = (next_q as f64 + 0.5) / per as f64 * total;
            acc += w;
            if next_q < per && acc >= target {
                let nv = norm(p);
                reps.push((p.iter().map(|c| c / nv).collect(), weight / per as f64));
                next_q += 1;
            }
        }
        while reps.len() < per {
            let nv = norm(pts[pts.len() - 1]);
            reps.push((pts[pts.len() - 1].iter().map(|c| c / nv).collect(), weight / per as f64));
        }
        clusters.push(Cluster { weight, center, reps, radius, points: idx.len() });
    }
    Ok(DirectionCluster { scale: slice.rho, clusters, finer_count })
}

/// Minimum-cost transport between two weighted point sets under the FS
/// distance, with unmatched mass charged at pi/2.
pub fn transport_distance(a: &[(Vec<f64>, f64)], b: &[(Vec<f64>, f64)]) -> f64 {
    let (na, nb) = (a.len(), b.len());
    let sa: f64 = a.iter().map(|p| p.1).sum();
    let sb: f64 = b.iter().map(|p| p.1).sum();
    // nodes: source, a_i, dummy_a, b_j, dummy_b, sink
    let src = 0;
    let a0 = 1;
    let da = a0 + na;
    let b0 = da + 1;
    let db = b0 + nb;
    let sink = db + 1;
    let nn = sink + 1;
    let mut g = Flow::new(nn);
    for (i, p) in a.iter().enumerate() {
        g.add(src, a0 + i, p.1, 0.0);
        for (j, q) in b.iter().enumerate() {
            g.add(a0 + i, b0 + j, f64::INFINITY, fs_distance(&p.0, &q.0));
        }
        g.add(a0 + i, db, f64::INFINITY, FRAC_PI_2);
    }
    g.add(src, da, sb, 0.0);
    for (j, q) in b.iter().enumerate() {
        g.add(da, b0 + j, f64::INFINITY, FRAC_PI_2);
        g.add(b0 + j, sink, q.1, 0.0);
    }
    g.add(da, db, f64::INFINITY, 0.0);
    g.add(db, sink, sa, 0.0);
    g.min_cost(src, sink, sa + sb)
}

struct Flow {
    to: Vec<usize>,
    cap: Vec<f64>,
    cost: Vec<f64>,
    adj: Vec<Vec<usize>>,
}

impl Flow {
    fn new(n: usize) -> Self {
        Flow { to: vec![], cap: vec![], cost: vec![], adj: vec![vec![]; n] }
    }

    fn add(&mut self, u: usize, v: usize, cap: f64, cost: f64) {
        self.adj[u].push(self.to.len());
        self.to.push(v);
        self.cap.push(cap);
        self.cost.push(cost);
        self.adj[v].push(self.to.len());
        self.to.push(u);
        self.cap.push(0.0);
        self.cost.push(-cost);
    }

    /// Successive shortest paths with Bellman-Ford.
    fn min_cost(&mut self, s: usize, t: usize, need: f64) -> f64 {
        let n = self.adj.len();
        let mut flow = 0.0;
        let mut total = 0.0;
        let eps = 1e-15 * need.max(1.0);
        while flow < need - eps {
            let mut d = vec![f64::INFINITY; n];
            let mut prev = vec![usize::MAX; n];
            d[s] = 0.0;
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if d[u] == f64::INFINITY {
                        continue;
                    }
                    for &e in &self.adj[u] {
                        if self.cap[e] > eps && d[u] + self.cost[e] < d[self.to[e]] - 1e-15 {
                            d[self.to[e]] = d[u] + self.cost[e];
                            prev[self.to[e]] = e;
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if d[t] == f64::INFINITY {
                break;
            }
            let mut push = need - flow;
            let mut v = t;
            while v != s {
                let e = prev[v];
                push = push.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = t;
            while v != s {
                let e = prev[v];
                self.cap[e] -= push;
                self.cap[e ^ 1] += push;
                v = self.to[e ^ 1];
            }
            flow += push;
            total += push * d[t];
        }
        total
    }
}

/// Transport gap between the direction clusters at r and r/2.
pub fn uniqueness_gap(c: &TriCurrent, x0: &[f64], r: f64) -> Result<f64> {
    let a = tangent_directions(c, x0, r)?;
    let b = tangent_directions(c, x0, 0.5 * r)?;
    Ok(gap_between(&a, &b))
}

/// Both weight sets are rescaled to their mean total first, so that the
/// polygonal under-count of slice length does not register as a gap.
pub fn gap_between(a: &DirectionCluster, b: &DirectionCluster) -> f64 {
    let (ta, tb) = (a.total_weight(), b.total_weight());
    let common = 0.5 * (ta + tb);
    let flat = |d: &DirectionCluster, t: f64| -> Vec<(Vec<f64>, f64)> {
        d.clusters.iter().flat_map(|c| c.reps.iter().map(|(v, w)| (v.clone(), w * common / t))).collect()
    };
    transport_distance(&flat(a, ta), &flat(b, tb))
}

/// Fraction of the dilated current's mass outside the eps-cone around the cluster lines.
pub fn cone_concentration(c: &TriCurrent, x0: &[f64], r: f64, dirs: &DirectionCluster, eps: f64) -> Result<f64> {
    let d = c.dilate(x0, r)?;
    let lines: Vec<Vec<f64>> = dirs.clusters.iter().map(|k| k.center.clone()).collect();
    let region = Region::ConeComplement { center: vec![0.0; c.dim()], dirs: lines, eps };
    let full = d.mass(&Region::Full)?;
    if full == 0.0 {
        return Ok(0.0);
    }
    Ok(d.mass(&region)? / full)
}

/// Energy density of pi on C: the Hopf area Jacobian.
fn energy_density(c: &TriCurrent, t: usize, y: &[f64]) -> f64 {
    let (e1, e2) = c.frame(t);
    hopf_jacobian(y, e1, e2)
}

/// E(r) = integral over C ⌞ B_r(x0) of |grad pi|^2.
pub fn dirichlet_energy(c: &TriCurrent, x0: &[f64], r: f64) -> Result<f64> {
    c.integrate(&Region::ball(x0, r), |t, x| {
        let y: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
        if y.iter().all(|v| *v == 0.0) {
            0.0
        } else {
            energy_density(c, t, &y)
        }
    })
}

/// Energy of pi restricted to the slice: integral of |grad pi|^2 ds.
fn slice_energy(c: &TriCurrent, x0: &[f64], curve: &Polyline1Current) -> f64 {
    let v: Vec<f64> = curve
        .segs
        .iter()
        .map(|s| {
            let y: Vec<f64> = curve.points[s.a].iter().zip(&curve.points[s.b]).zip(x0).map(|((p, q), o)| 0.5 * (p + q) - o).collect();
            let t = s.tri.expect("slice segments carry their triangle");
            s.mult as f64 * curve.len(s) * energy_density(c, t, &y)
        })
        .collect();
    par::sum(&v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoodSliceRow {
    pub rho: f64,
    pub slice_mass: f64,
    pub mass_bound: f64,
    pub slice_energy: f64,
    pub energy_bound: f64,
}

impl GoodSliceRow {
    pub fn qualifies(&self) -> bool {
        self.slice_mass <= self.mass_bound && self.slice_energy <= self.energy_bound
    }
}

pub const GOODSLICE_CANDIDATES: usize = 16;

/// Candidate table over rho in [r/2, r]; c1 bounds the slice mass ratio.
pub fn goodslice_sweep(c: &TriCurrent, x0: &[f64], r: f64, c1: f64) -> Result<Vec<GoodSliceRow>> {
    if !(r > 0.0) {
        return invalid("goodslice needs r > 0");
    }
    let annulus = c.integrate(&Region::annulus(x0, 0.5 * r, r), |t, x| {
        let y: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
        energy_density(c, t, &y)
    })?;
    let n = GOODSLICE_CANDIDATES;
    let mut rows = Vec::with_capacity(n);
    for k in 0..n {
        let rho = 0.5 * r + 0.5 * r * k as f64 / (n - 1) as f64;
        let sl = c.slice_sphere(x0, rho)?;
        let rho = sl.rho;
        rows.push(GoodSliceRow {
            rho,
            slice_mass: sl.curve.mass(),
            mass_bound: c1 * rho,
            slice_energy: slice_energy(c, x0, &sl.curve),
            energy_bound: 2.0 / rho * annulus,
        });
    }
    Ok(rows)
}

/// First qualifying candidate of the sweep.
pub fn goodslice_search(c: &TriCurrent, x0: &[f64], r: f64, c1: f64) -> Result<GoodSliceRow> {
    goodslice_sweep(c, x0, r, c1)?.into_iter().find(|row| row.qualifies()).ok_or(Error::NoGoodSlice)
}

/// C1 for the slice-mass condition: 4 sup theta over the trace.
pub fn goodslice_constant(trace: &DensityTrace) -> f64 {
    4.0 * trace.theta.iter().cloned().fold(0.0, f64::max)
}

/// Poincaré check on each loop of the slice at rho, with g the Hermitian
/// projector v v^H of pi(x) flattened to a real vector.
pub fn slice_poincare(c: &TriCurrent, x0: &[f64], rho: f64) -> Result<Vec<PoincareReport>> {
    let sl = c.slice_sphere(x0, rho)?;
    let loops = sl.curve.decompose_cycle()?;
    loops
        .iter()
        .map(|l| {
            loop_poincare(l, |x| {
                let y: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
                projector(&y)
            })
        })
        .collect()
}

fn projector(y: &[f64]) -> Vec<f64> {
    let z = crate::calibrations::to_complex(y);
    let n2: f64 = z.iter().map(|c| c.norm_sqr()).sum();
    let mut out = Vec::with_capacity(2 * z.len() * z.len());
    for a in &z {
        for b in &z {
            let p = a * b.conj() / n2;
            out.push(p.re);
            out.push(p.im);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirichletStep {
    pub r: f64,
    pub energy: f64,
    /// Integral of pi^* alpha over the slice at r, for the Stokes cross-check.
    pub stokes: f64,
    /// E(r_{i+1}) / E(r_i); None for the first scale.
    pub factor: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dirichlet {
    pub steps: Vec<DirichletStep>,
    /// Pole of the FS primitive.
    pub pole: Vec<f64>,
}

impl Dirichlet {
    pub fn max_factor(&self) -> Option<f64> {
        self.steps.iter().filter_map(|s| s.factor).fold(None, |a, f| Some(a.map_or(f, |x: f64| x.max(f))))
    }

    /// Exponent implied by the mean log factor: log(kappa) / log(q).
    pub fn implied_rate(&self) -> Option<f64> {
        let logs: Vec<f64> = self
            .steps
            .windows(2)
            .filter_map(|w| w[1].factor.map(|f| (f, w[1].r / w[0].r)))
            .filter(|(f, _)| *f > 0.0)
            .map(|(f, q)| f.ln() / q.ln())
            .collect();
        if logs.is_empty() {
            None
        } else {
            Some(logs.iter().sum::<f64>() / logs.len() as f64)
        }
    }
}

/// Pole opposite a line: for n = 2, the orthogonal complex line.
fn pole_opposite(center: &[f64]) -> Vec<f64> {
    let z = crate::calibrations::to_complex(center);
    let n = z.len();
    let mut p = vec![Complex::new(0.0, 0.0); n];
    // -conj(z1), conj(z0) on the first two coordinates is orthogonal to z
    if n >= 2 {
        p[0] = -z[1].conj();
        p[1] = z[0].conj();
    }
    let np: f64 = p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if np < 1e-8 {
        p = vec![Complex::new(0.0, 0.0); n];
        p[n - 1] = Complex::new(1.0, 0.0);
    }
    crate::calibrations::from_complex(&p)
}

/// Pole for the FS primitive, as far as possible from every direction cluster.
/// The line orthogonal to the heaviest cluster is tried first.
fn choose_pole(dirs: &DirectionCluster) -> Result<Vec<f64>> {
    let dominant = dirs
        .clusters
        .iter()
        .max_by(|a, b| a.weight.total_cmp(&b.weight))
        .ok_or(Error::EmptySlice(dirs.scale))?;
    let score = |p: &[f64]| dirs.clusters.iter().map(|k| fs_distance(p, &k.center) - k.radius).fold(f64::INFINITY, f64::min);
    let first = pole_opposite(&dominant.center);
    let margin = crate::calibrations::FS_EXCLUDED + 0.05;
    if score(&first) > margin {
        return Ok(first);
    }
    // fall back to lines (e_j + e^{i phi} e_k) / sqrt 2 and the axes
    let n = dominant.center.len() / 2;
    let mut best = (score(&first), first);
    for j in 0..n {
        let mut axis = vec![0.0; 2 * n];
        axis[2 * j] = 1.0;
        let sc = score(&axis);
        if sc > best.0 {
            best = (sc, axis);
        }
        for k in (j + 1)..n {
            for q in 0..8 {
                let phi = PI * q as f64 / 4.0;
                let mut v = vec![0.0; 2 * n];
                v[2 * j] = FRAC_1_SQRT_2;
                v[2 * k] = FRAC_1_SQRT_2 * phi.cos();
                v[2 * k + 1] = FRAC_1_SQRT_2 * phi.sin();
                let sc = score(&v);
                if sc > best.0 {
                    best = (sc, v);
                }
            }
        }
    }
    Ok(best.1)
}

/// Energies on the ladder with decay factors and a Stokes cross-check.
pub fn dirichlet_iteration(c: &TriCurrent, x0: &[f64], radii: &[f64]) -> Result<Dirichlet> {
    if radii.len() < 2 {
        return invalid("dirichlet iteration needs at least two scales");
    }
    if c.dim() % 2 == 1 {
        return invalid("odd dimension");
    }
    let dirs = tangent_directions(c, x0, radii[0])?;
    let pole = choose_pole(&dirs)?;
    let fs = FubiniStudy::new(c.dim() / 2, &pole)?;
    let mut steps: Vec<DirichletStep> = Vec::with_capacity(radii.len());
    for &r in radii {
        let energy = dirichlet_energy(c, x0, r)?;
        let sl = c.slice_sphere(x0, r)?;
        let mut stokes = 0.0;
        for s in &sl.curve.segs {
            let pa: Vec<f64> = sl.curve.points[s.a].iter().zip(x0).map(|(p, o)| p - o).collect();
            let pb: Vec<f64> = sl.curve.points[s.b].iter().zip(x0).map(|(p, o)| p - o).collect();
            let mid: Vec<f64> = pa.iter().zip(&pb).map(|(p, q)| 0.5 * (p + q)).collect();
            let tan: Vec<f64> = pb.iter().zip(&pa).map(|(p, q)| p - q).collect();
            stokes += s.mult as f64 * fs.pullback_alpha(&mid, &tan)?;
        }
        // energies at rounding level count as zero
        let factor = steps.last().map(|p| if p.energy > 1e-12 * p.r * p.r { energy / p.energy } else { 0.0 });
        steps.push(DirichletStep { r, energy, stokes, factor });
    }
    Ok(Dirichlet { steps, pole })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateMode {
    /// Known limit.
    Known(f64),
    /// Fit the limit as well.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub theta_hat: f64,
    pub c1: f64,
    /// Infinite for an exact cone.
    pub gamma: f64,
    pub rms: f64,
    pub exact_cone: bool,
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).powi(2)).sum::<f64>() / n).sqrt();
    (slope, icpt, rms)
}

/// Fit theta(r) = Theta + C1 r^gamma along a trace (radii, values).
pub fn rate_fit_values(radii: &[f64], values: &[f64], mode: RateMode) -> Result<RateFit> {
    if radii.len() < 6 || radii.len() != values.len() {
        return invalid(format!("rate fit needs at least 6 samples, got {}", radii.len()));
    }
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1e-300);
    // values must not increase as r decreases, beyond a small tolerance
    if values.windows(2).any(|w| w[1] > w[0] + 1e-6 * scale) {
        return Err(Error::Fit("trace is not monotone toward its limit".into()));
    }
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - values.iter().cloned().fold(f64::INFINITY, f64::min);
    let sentinel = |theta: f64| RateFit { theta_hat: theta, c1: 0.0, gamma: f64::INFINITY, rms: 0.0, exact_cone: true };
    match mode {
        RateMode::Known(theta) => {
            let gaps: Vec<f64> = values.iter().map(|v| v - theta).collect();
            if gaps.iter().all(|g| g.abs() < 1e-12 * scale.max(theta.abs())) {
                return Ok(sentinel(theta));
            }
            if gaps.iter().any(|g| *g <= 0.0) {
                return Err(Error::Fit("some values do not exceed the supplied limit".into()));
            }
            let x: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
            let y: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
            let (gamma, icpt, rms) = linear_fit(&x, &y);
            Ok(RateFit { theta_hat: theta, c1: icpt.exp(), gamma, rms, exact_cone: false })
        }
        RateMode::Free => {
            if spread < 1e-12 * scale {
                return Ok(sentinel(values[values.len() - 1]));
            }
            // variable projection: linear least squares in (Theta, C1) for each gamma
            let solve = |gamma: f64| -> (f64, f64, f64) {
                let p: Vec<f64> = radii.iter().map(|r| r.powf(gamma)).collect();
                let n = p.len() as f64;
                let mp = p.iter().sum::<f64>() / n;
                let mv = values.iter().sum::<f64>() / n;
                let spp: f64 = p.iter().map(|a| (a - mp) * (a - mp)).sum();
                let spv: f64 = p.iter().zip(values).map(|(a, b)| (a - mp) * (b - mv)).sum();
                let c1 = if spp > 0.0 { spv / spp } else { 0.0 };
                let th = mv - c1 * mp;
                let sse: f64 = p.iter().zip(values).map(|(a, b)| (b - th - c1 * a).powi(2)).sum();
                (th, c1, sse)
            };
            // seed: gamma from the last three samples' gap ratio, then a log grid
            let k = values.len();
            let seed = {
                let d1 = values[k - 3] - values[k - 2];
                let d2 = values[k - 2] - values[k - 1];
                if d1 > 0.0 && d2 > 0.0 {
                    (d1 / d2).ln() / (radii[k - 3] / radii[k - 2]).ln()
                } else {
                    1.0
                }
            };
            let mut best = (seed.clamp(0.02, 8.0), f64::INFINITY);
            let grid = (0..=200).map(|i| 0.02 * (8.0f64 / 0.02).powf(i as f64 / 200.0));
            for g in std::iter::once(best.0).chain(grid) {
                let sse = solve(g).2;
                if sse < best.1 {
                    best = (g, sse);
                }
            }
            // golden section around the best grid point
            let (mut a, mut b) = (best.0 / 1.05, best.0 * 1.05);
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..100 {
                let c = b - phi * (b - a);
                let d = a + phi * (b - a);
                if solve(c).2 < solve(d).2 {
                    b = d;
                } else {
                    a = c;
                }
            }
            let gamma = 0.5 * (a + b);
            let (th, c1, _) = solve(gamma);
            let res: Vec<f64> = radii
                .iter()
                .zip(values)
                .map(|(r, v)| {
                    let model = c1 * r.powf(gamma);
                    let gap = v - th;
                    if gap > 0.0 && model > 0.0 {
                        (gap / model).ln()
                    } else {
                        (v - th - model) / scale
                    }
                })
                .collect();
            let rms = (res.iter().map(|e| e * e).sum::<f64>() / res.len() as f64).sqrt();
            Ok(RateFit { theta_hat: th, c1, gamma, rms, exact_cone: false })
        }
    }
}

pub fn rate_fit(trace: &DensityTrace, mode: RateMode) -> Result<RateFit> {
    rate_fit_values(&trace.radii, &trace.theta, mode)
}

/// Log-log regression of gaps against scales: (exponent, rms).
pub fn power_fit(scales: &[f64], gaps: &[f64]) -> Result<(f64, f64)> {
    if scales.len() < 3 || scales.len() != gaps.len() || gaps.iter().any(|g| !(*g > 0.0)) {
        return Err(Error::Fit("power fit needs >= 3 positive samples".into()));
    }
    let x: Vec<f64> = scales.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let (slope, _, rms) = linear_fit(&x, &y);
    Ok((slope, rms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;

    #[test]
    fn flat_disk_trace_is_constant() {
        let d = examples::flat_disk(4, 1.0, 0.05, 1).unwrap();
        let tr = density_trace(&d, &[0.0; 4], 0.8, 8, 0.5).unwrap();
        for t in &tr.theta {
            assert!((t / PI - 1.0).abs() < 1e-12);
        }
        assert_eq!(monotonicity_check(&tr, 1e-6).unwrap(), Monotonicity { c1: 0.0, pass: true });
        assert!(rate_fit(&tr, RateMode::Known(PI)).unwrap().exact_cone);
        assert!(rate_fit(&tr, RateMode::Free).unwrap().exact_cone);
    }

    #[test]
    fn trace_preconditions() {
        let d = examples::flat_disk(4, 1.0, 0.1, 1).unwrap();
        assert!(density_trace(&d, &[0.0; 4], 0.8, 3, 0.5).is_err());
        assert!(density_trace(&d, &[0.0, 0.0, 1.0, 0.0], 0.8, 5, 0.5).is_err());
        assert!(density_trace(&d, &[0.0; 4], 5.0, 5, 0.5).is_err());
        assert!(density_trace(&d, &[0.0; 4], 0.5, 5, 1.5).is_err());
    }

    #[test]
    fn monotonicity_search_finds_constant() {
        // theta increasing with r except a dip that needs C1 > 0
        let radii = vec![0.8, 0.4, 0.2, 0.1, 0.05];
        let masses: Vec<f64> = radii.iter().zip([1.0, 1.05, 1.0, 1.0, 1.0]).map(|(r, t)| t * r * r).collect();
        let tr = DensityTrace::from_samples(vec![0.0; 4], radii, masses).unwrap();
        let m = monotonicity_check(&tr, 1e-9).unwrap();
        assert!(m.pass && m.c1 > 0.0);
        assert!(weighted_monotone(&tr, m.c1, 1e-9));
        assert!(!weighted_monotone(&tr, m.c1 * 0.99, 1e-9));
    }

    #[test]
    fn cone_quantities_vanish_for_flat_line() {
        let d = examples::flat_disk(4, 1.0, 0.05, 1).unwrap();
        let x0 = [0.0; 4];
        assert!(conical_defect(&d, &x0, 0.1, 0.5).unwrap().value < 1e-10);
        assert!(hopf_projection_mass(&d, &x0, 0.1, 0.5).unwrap() < 1e-10);
        assert!(uniqueness_gap(&d, &x0, 0.5).unwrap() < 1e-6);
        let dirs = tangent_directions(&d, &x0, 0.5).unwrap();
        assert_eq!(dirs.clusters.len(), 1);
        assert!((dirs.clusters[0].weight - 1.0).abs() < 0.02);
        assert!(cone_concentration(&d, &x0, 0.5, &dirs, 0.3).unwrap() < 1e-12);
    }

    #[test]
    fn non_complex_plane_has_hopf_mass() {
        let d = examples::plane_disk(4, 0, 2, 1.0, 0.05).unwrap();
        // through the centre the plane is a cone and projects to a curve
        assert!(hopf_projection_mass(&d, &[0.0; 4], 0.25, 0.5).unwrap() < 1e-10);
        let h = hopf_projection_mass(&d, &[0.0, 0.0, 0.0, 0.1], 0.25, 0.5).unwrap();
        assert!(h > 0.05, "{h}");
    }

    #[test]
    fn transport_between_point_sets() {
        let a = vec![(vec![1.0, 0.0, 0.0, 0.0], 1.0)];
        let b = vec![(vec![0.0, 0.0, 1.0, 0.0], 1.0)];
        assert!((transport_distance(&a, &b) - FRAC_PI_2).abs() < 1e-12);
        assert!(transport_distance(&a, &a).abs() < 1e-15);
        // unmatched half unit
        let c = vec![(vec![1.0, 0.0, 0.0, 0.0], 0.5)];
        assert!((transport_distance(&a, &c) - 0.5 * FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn rate_fit_closed_forms() {
        let radii: Vec<f64> = (0..8).map(|i| 0.5 * 0.7f64.powi(i)).collect();
        let vals: Vec<f64> = radii.iter().map(|r| 3.0 + 2.0 * r * r).collect();
        let f = rate_fit_values(&radii, &vals, RateMode::Known(3.0)).unwrap();
        assert!((f.gamma - 2.0).abs() < 1e-10 && (f.c1 - 2.0).abs() < 1e-9);
        let f = rate_fit_values(&radii, &vals, RateMode::Free).unwrap();
        assert!((f.gamma - 2.0).abs() < 1e-4 && (f.theta_hat - 3.0).abs() < 1e-6, "{f:?}");
        let bad: Vec<f64> = radii.iter().map(|r| 3.0 - r).collect();
        assert!(rate_fit_values(&radii, &bad, RateMode::Free).is_err());
    }
}
