//! Exterior algebra of grade at most 3 over R^m (m even, m <= 12).
//!
//! Blades are stored densely in lexicographic order of their index sets.
//! Coordinates are paired as (x_{2i}, x_{2i+1}) with 0-based indices, so
//! J0 sends e_{2i} to e_{2i+1} and omega0 = sum_i dx_{2i} ^ dx_{2i+1}.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::{invalid, Error, Result, CALIBRATED_TOL};

pub const MAX_DIM: usize = 12;

pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r = 1usize;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Index sets of all k-blades in R^m, lexicographic.
pub fn blades(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(m, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::with_capacity(binom(m, k));
    rec(m, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Lexicographic rank of a strictly increasing index set.
pub fn blade_rank(m: usize, idx: &[usize]) -> usize {
    let k = idx.len();
    let mut rank = 0;
    let mut prev: isize = -1;
    for (pos, &c) in idx.iter().enumerate() {
        for t in (prev + 1) as usize..c {
            rank += binom(m - 1 - t, k - 1 - pos);
        }
        prev = c as isize;
    }
    rank
}

fn check_dim(m: usize) -> Result<()> {
    if m == 0 || m % 2 == 1 || m > MAX_DIM {
        return invalid(format!("dimension {m} must be even and at most {MAX_DIM}"));
    }
    Ok(())
}

/// Wedge of coefficient arrays of grades ga and gb.
fn wedge_coef(m: usize, ga: usize, a: &[f64], gb: usize, b: &[f64]) -> Vec<f64> {
    let g = ga + gb;
    let mut out = vec![0.0; binom(m, g)];
    let ba = blades(m, ga);
    let bb = blades(m, gb);
    for (i, ia) in ba.iter().enumerate() {
        if a[i] == 0.0 {
            continue;
        }
        for (j, jb) in bb.iter().enumerate() {
            if b[j] == 0.0 || jb.iter().any(|x| ia.contains(x)) {
                continue;
            }
            let mut inv = 0;
            for x in ia {
                for y in jb {
                    if x > y {
                        inv += 1;
                    }
                }
            }
            let mut merged: Vec<usize> = ia.iter().chain(jb.iter()).copied().collect();
            merged.sort_unstable();
            let sign = if inv % 2 == 0 { 1.0 } else { -1.0 };
            out[blade_rank(m, &merged)] += sign * a[i] * b[j];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector {
    pub dim: usize,
    pub grade: usize,
    pub coef: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiForm {
    pub dim: usize,
    pub grade: usize,
    pub coef: Vec<f64>,
    pub comass_bound: Option<f64>,
}

impl MultiVector {
    pub fn zeros(dim: usize, grade: usize) -> Self {
        MultiVector { dim, grade, coef: vec![0.0; binom(dim, grade)] }
    }

    pub fn from_coef(dim: usize, grade: usize, coef: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if !(1..=3).contains(&grade) {
            return invalid(format!("grade {grade} not in 1..=3"));
        }
        if coef.len() != binom(dim, grade) {
            return invalid(format!("expected {} coefficients, got {}", binom(dim, grade), coef.len()));
        }
        Ok(MultiVector { dim, grade, coef })
    }

    pub fn vector(v: &[f64]) -> Self {
        MultiVector { dim: v.len(), grade: 1, coef: v.to_vec() }
    }

    /// Unit blade e_{i1} ^ ... ^ e_{ik} (0-based, any order; sign follows the order).
    pub fn basis(dim: usize, idx: &[usize]) -> Self {
        let mut out = MultiVector::vector(&unit(dim, idx[0]));
        for &i in &idx[1..] {
            out = out.wedge(&MultiVector::vector(&unit(dim, i))).expect("basis blade");
        }
        out
    }

    pub fn plane(a: &[f64], b: &[f64]) -> Self {
        MultiVector::vector(a).wedge(&MultiVector::vector(b)).expect("plane")
    }

    pub fn wedge(&self, other: &MultiVector) -> Result<MultiVector> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.grade + other.grade > 3 {
            return Err(Error::GradeOverflow(self.grade, other.grade));
        }
        let coef = wedge_coef(self.dim, self.grade, &self.coef, other.grade, &other.coef);
        Ok(MultiVector { dim: self.dim, grade: self.grade + other.grade, coef })
    }

    pub fn norm(&self) -> f64 {
        self.coef.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        MultiVector { coef: self.coef.iter().map(|c| c * s).collect(), ..self.clone() }
    }

    pub fn add(&self, o: &MultiVector) -> Self {
        assert_eq!((self.dim, self.grade), (o.dim, o.grade));
        MultiVector { coef: self.coef.iter().zip(&o.coef).map(|(a, b)| a + b).collect(), ..self.clone() }
    }

    pub fn sub(&self, o: &MultiVector) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn dot(&self, o: &MultiVector) -> f64 {
        self.coef.iter().zip(&o.coef).map(|(a, b)| a * b).sum()
    }

    /// Skew matrix X with X[i][j] = coefficient of e_i ^ e_j.
    pub fn skew(&self) -> DMatrix<f64> {
        assert_eq!(self.grade, 2);
        skew_of(self.dim, &self.coef)
    }

    pub fn from_skew(x: &DMatrix<f64>) -> Self {
        MultiVector { dim: x.nrows(), grade: 2, coef: coef_of_skew(x) }
    }
}

impl MultiForm {
    pub fn zeros(dim: usize, grade: usize) -> Self {
        MultiForm { dim, grade, coef: vec![0.0; binom(dim, grade)], comass_bound: None }
    }

    pub fn from_coef(dim: usize, grade: usize, coef: Vec<f64>) -> Result<Self> {
        let v = MultiVector::from_coef(dim, grade, coef)?;
        Ok(MultiForm { dim, grade, coef: v.coef, comass_bound: None })
    }

    pub fn covector(a: &[f64]) -> Self {
        MultiForm { dim: a.len(), grade: 1, coef: a.to_vec(), comass_bound: None }
    }

    /// dx_{i1} ^ ... ^ dx_{ik}.
    pub fn basis(dim: usize, idx: &[usize]) -> Self {
        let v = MultiVector::basis(dim, idx);
        MultiForm { dim, grade: v.grade, coef: v.coef, comass_bound: None }
    }

    pub fn with_bound(mut self, b: f64) -> Self {
        self.comass_bound = Some(b);
        self
    }

    pub fn wedge(&self, other: &MultiForm) -> Result<MultiForm> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(self.dim, other.dim));
        }
        if self.grade + other.grade > 3 {
            return Err(Error::GradeOverflow(self.grade, other.grade));
        }
        let coef = wedge_coef(self.dim, self.grade, &self.coef, other.grade, &other.coef);
        Ok(MultiForm { dim: self.dim, grade: self.grade + other.grade, coef, comass_bound: None })
    }

    pub fn eval(&self, v: &MultiVector) -> Result<f64> {
        if self.dim != v.dim {
            return Err(Error::DimensionMismatch(self.dim, v.dim));
        }
        if self.grade != v.grade {
            return invalid(format!("pairing grade {} with grade {}", self.grade, v.grade));
        }
        Ok(self.coef.iter().zip(&v.coef).map(|(a, b)| a * b).sum())
    }

    /// omega(a, b) for a 2-form.
    pub fn on_pair(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(self.grade, 2);
        let m = self.dim;
        let mut s = 0.0;
        let mut k = 0;
        for i in 0..m {
            for j in (i + 1)..m {
                s += self.coef[k] * (a[i] * b[j] - a[j] * b[i]);
                k += 1;
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.coef.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        MultiForm { coef: self.coef.iter().map(|c| c * s).collect(), comass_bound: None, ..self.clone() }
    }

    pub fn add(&self, o: &MultiForm) -> Self {
        assert_eq!((self.dim, self.grade), (o.dim, o.grade));
        MultiForm {
            coef: self.coef.iter().zip(&o.coef).map(|(a, b)| a + b).collect(),
            comass_bound: None,
            ..self.clone()
        }
    }

    pub fn sub(&self, o: &MultiForm) -> Self {
        self.add(&o.scale(-1.0))
    }

    pub fn skew(&self) -> DMatrix<f64> {
        assert_eq!(self.grade, 2);
        skew_of(self.dim, &self.coef)
    }

    pub fn from_skew(a: &DMatrix<f64>) -> Self {
        MultiForm { dim: a.nrows(), grade: 2, coef: coef_of_skew(a), comass_bound: None }
    }
}

fn skew_of(m: usize, coef: &[f64]) -> DMatrix<f64> {
    let mut x = DMatrix::zeros(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in (i + 1)..m {
            x[(i, j)] = coef[k];
            x[(j, i)] = -coef[k];
            k += 1;
        }
    }
    x
}

fn coef_of_skew(x: &DMatrix<f64>) -> Vec<f64> {
    let m = x.nrows();
    let mut out = Vec::with_capacity(binom(m, 2));
    for i in 0..m {
        for j in (i + 1)..m {
            out.push(0.5 * (x[(i, j)] - x[(j, i)]));
        }
    }
    out
}

pub fn unit(m: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[i] = 1.0;
    v
}

/// The standard complex structure J0 on R^m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexStructure {
    pub dim: usize,
}

impl ComplexStructure {
    pub fn new(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ComplexStructure { dim })
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        j0(v)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let m = self.dim;
        let mut j = DMatrix::zeros(m, m);
        for i in 0..m / 2 {
            j[(2 * i + 1, 2 * i)] = 1.0;
            j[(2 * i, 2 * i + 1)] = -1.0;
        }
        j
    }
}

/// J0 v, acting on the leading even number of coordinates.
pub fn j0(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for i in 0..v.len() / 2 {
        out[2 * i] = -v[2 * i + 1];
        out[2 * i + 1] = v[2 * i];
    }
    out
}

/// omega0 on R^m.
pub fn omega0(m: usize) -> MultiForm {
    let mut w = MultiForm::zeros(m, 2);
    for i in 0..m / 2 {
        w.coef[blade_rank(m, &[2 * i, 2 * i + 1])] = 1.0;
    }
    w.comass_bound = Some(1.0);
    w
}

/// contract(omega, v) = omega(v, .).
pub fn contract(omega: &MultiForm, v: &[f64]) -> Result<MultiForm> {
    if omega.dim != v.len() {
        return Err(Error::DimensionMismatch(omega.dim, v.len()));
    }
    if omega.grade != 2 {
        return invalid("contract expects a 2-form");
    }
    let a = omega.skew();
    let out = a.transpose() * DVector::from_column_slice(v);
    Ok(MultiForm::covector(out.as_slice()))
}

/// u ⌟ xi for a 2-vector xi: sends a ^ b to <u,a> b - <u,b> a.
pub fn interior_vec(u: &[f64], xi: &MultiVector) -> Vec<f64> {
    let x = xi.skew();
    (x.transpose() * DVector::from_column_slice(u)).as_slice().to_vec()
}

/// The radial part of omega at x: dr ^ (d/dr ⌟ omega).
pub fn radial_tangential_part(omega: &MultiForm, x: &[f64]) -> Result<MultiForm> {
    let r = norm(x);
    if r == 0.0 {
        return invalid("radial part undefined at the origin");
    }
    let u: Vec<f64> = x.iter().map(|c| c / r).collect();
    let iu = contract(omega, &u)?;
    MultiForm::covector(&u).wedge(&iu)
}

/// Canonical form of a 2-form (or 2-vector) coefficient array.
#[derive(Debug, Clone)]
pub struct Canonical {
    /// Columns f_0..f_{m-1}; omega = sum_i lambda_i f_{2i}^* ^ f_{2i+1}^*.
    pub basis: DMatrix<f64>,
    /// Descending, nonnegative.
    pub lambda: Vec<f64>,
}

impl Canonical {
    pub fn pair_vectors(&self, i: usize) -> (Vec<f64>, Vec<f64>) {
        (
            self.basis.column(2 * i).iter().copied().collect(),
            self.basis.column(2 * i + 1).iter().copied().collect(),
        )
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let m = self.basis.nrows();
        let mut a = DMatrix::zeros(m, m);
        for (i, l) in self.lambda.iter().enumerate() {
            let f1 = self.basis.column(2 * i);
            let f2 = self.basis.column(2 * i + 1);
            a += (f1 * f2.transpose() - f2 * f1.transpose()) * *l;
        }
        a
    }
}

/// Canonical form from a skew matrix via the real Schur decomposition.
pub fn canonicalize_skew(a: &DMatrix<f64>) -> Canonical {
    let m = a.nrows();
    let scale = a.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    if scale == 0.0 {
        return Canonical { basis: DMatrix::identity(m, m), lambda: vec![0.0; m / 2] };
    }
    let (q, t) = Schur::new(a.clone()).unpack();
    let mut blocks: Vec<(f64, usize, usize)> = Vec::new();
    let mut kernel: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < m {
        if i + 1 < m && t[(i + 1, i)].abs() > 1e-14 * scale {
            let b = 0.5 * (t[(i, i + 1)] - t[(i + 1, i)]);
            if b >= 0.0 {
                blocks.push((b, i, i + 1));
            } else {
                blocks.push((-b, i + 1, i));
            }
            i += 2;
        } else {
            kernel.push(i);
            i += 1;
        }
    }
    blocks.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    for pair in kernel.chunks(2) {
        blocks.push((0.0, pair[0], pair[1]));
    }
    let mut basis = DMatrix::zeros(m, m);
    let mut lambda = Vec::with_capacity(m / 2);
    for (k, (l, c1, c2)) in blocks.iter().enumerate() {
        basis.set_column(2 * k, &q.column(*c1));
        basis.set_column(2 * k + 1, &q.column(*c2));
        lambda.push(*l);
    }
    Canonical { basis, lambda }
}

pub fn canonicalize_2form(omega: &MultiForm) -> Canonical {
    canonicalize_skew(&omega.skew())
}

/// Largest canonical coefficient; the comass of a 2-form.
pub fn comass2(omega: &MultiForm) -> f64 {
    if omega.dim == 4 && omega.grade == 2 {
        // lambda1^2 + lambda2^2 = |w|^2 and lambda1 lambda2 = |Pf w|
        let c = &omega.coef;
        let n2: f64 = c.iter().map(|x| x * x).sum();
        let pf = (c[0] * c[5] - c[1] * c[4] + c[2] * c[3]).abs();
        return 0.5 * ((n2 + 2.0 * pf).max(0.0).sqrt() + (n2 - 2.0 * pf).max(0.0).sqrt());
    }
    canonicalize_2form(omega).lambda[0]
}

/// Mass norm of a 2-vector: the sum of its canonical coefficients.
pub fn mass2(xi: &MultiVector) -> f64 {
    canonicalize_skew(&xi.skew()).lambda.iter().sum()
}

#[derive(Debug, Clone)]
pub struct Wirtinger {
    pub value: f64,
    pub calibrated: bool,
    /// Unit vector v of the plane, with xi compared against v ^ J0 v.
    pub v: Vec<f64>,
    pub residual: f64,
}

pub fn wirtinger_check(xi: &MultiVector) -> Result<Wirtinger> {
    if xi.grade != 2 {
        return invalid("wirtinger_check expects a 2-vector");
    }
    let c = canonicalize_skew(&xi.skew());
    if c.lambda.len() > 1 && c.lambda[1] > 1e-9 {
        return invalid(format!("2-vector is not simple (second coefficient {:e})", c.lambda[1]));
    }
    if (c.lambda[0] - 1.0).abs() > 1e-9 {
        return invalid(format!("2-vector is not unit (mass {})", c.lambda[0]));
    }
    let value = omega0(xi.dim).eval(xi)?;
    let (v, _) = c.pair_vectors(0);
    let tau0 = MultiVector::plane(&v, &j0(&v));
    let residual = xi.sub(&tau0).norm();
    Ok(Wirtinger { value, calibrated: value >= 1.0 - CALIBRATED_TOL, v, residual })
}

/// Calibration defect mass(tau) - omega0(tau).
pub fn omega0_defect(tau: &MultiVector) -> f64 {
    mass2(tau) - omega0(tau.dim).eval(tau).unwrap_or(0.0)
}

/// Write an omega0-calibrated 2-vector as a convex-type sum lambda_j v_j ^ J0 v_j
/// by diagonalising the Hermitian matrix of its (1,1)-part.
pub fn decompose_calibrated(tau: &MultiVector) -> Result<Vec<(f64, MultiVector)>> {
    if tau.grade != 2 {
        return invalid("decompose_calibrated expects a 2-vector");
    }
    let m = tau.dim;
    let mass = mass2(tau);
    let defect = omega0_defect(tau);
    if defect > CALIBRATED_TOL * mass.max(1.0) {
        return Err(Error::NotCalibrated(defect));
    }
    let x = tau.skew();
    let j = ComplexStructure { dim: m }.matrix();
    let p = (&x + &j * &x * j.transpose()) * 0.5;
    let n = m / 2;
    let mut h = DMatrix::<Complex<f64>>::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            h[(k, l)] = Complex::new(p[(2 * k, 2 * l + 1)], p[(2 * k + 1, 2 * l + 1)]);
        }
    }
    let h = (&h + h.adjoint()) * Complex::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let trace: f64 = eig.eigenvalues.iter().sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| eig.eigenvalues[*b].total_cmp(&eig.eigenvalues[*a]));
    let mut out = Vec::new();
    for k in order {
        let mu = eig.eigenvalues[k];
        if mu <= 1e-14 * trace.abs().max(1e-300) {
            continue;
        }
        let w = eig.eigenvectors.column(k);
        let mut v = vec![0.0; m];
        for i in 0..n {
            v[2 * i] = w[i].re;
            v[2 * i + 1] = w[i].im;
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|c| *c /= nv);
        out.push((mu, MultiVector::plane(&v, &j0(&v))));
    }
    Ok(out)
}

pub fn reconstruct(dec: &[(f64, MultiVector)], m: usize) -> MultiVector {
    dec.iter().fold(MultiVector::zeros(m, 2), |acc, (l, xi)| acc.add(&xi.scale(*l)))
}

/// |xi ^ eta| for two 2-vectors, computed on 4-blades.
pub fn wedge22_norm(xi: &MultiVector, eta: &MultiVector) -> f64 {
    let m = xi.dim;
    let a = xi.skew();
    let b = eta.skew();
    let mut s = 0.0;
    for q in blades(m, 4) {
        let (i, j, k, l) = (q[0], q[1], q[2], q[3]);
        let c = a[(i, j)] * b[(k, l)] - a[(i, k)] * b[(j, l)] + a[(i, l)] * b[(j, k)]
            + a[(k, l)] * b[(i, j)]
            - a[(j, l)] * b[(i, k)]
            + a[(j, k)] * b[(i, l)];
        s += c * c;
    }
    s.sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct VectestBounds {
    pub l: f64,
    pub m: f64,
    pub c: f64,
}

impl VectestBounds {
    pub fn holds(&self, rel: f64) -> bool {
        let slack = rel * self.l.abs().max(1e-300);
        self.l <= self.m + slack && self.m <= self.c * self.l + slack
    }
}

/// Dimension constant of the vectest sandwich on R^m.
pub fn vectest_constant(m: usize) -> f64 {
    m as f64
}

pub fn vectest_bounds(dec: &[(f64, MultiVector)], zeta: &[f64]) -> VectestBounds {
    let m = zeta.len();
    let z = MultiVector::vector(zeta);
    let zj = MultiVector::plane(zeta, &j0(zeta));
    let mut l = 0.0;
    let mut mm = 0.0;
    for (lam, xi) in dec {
        let w = xi.wedge(&z).expect("grade 3");
        l += lam * w.dot(&w);
        mm += lam * wedge22_norm(xi, &zj);
    }
    VectestBounds { l, m: mm, c: vectest_constant(m) }
}

#[derive(Debug, Clone)]
pub struct Split {
    pub tau0: MultiVector,
    pub tau1: MultiVector,
    pub tau1_norm: f64,
    /// ||tau1|| / |x|^(1/2).
    pub k_ratio: f64,
}

/// Split a simple 2-vector calibrated by omega(x) into an omega0-calibrated
/// unit part and a remainder: project onto R^{2n}, normalise, align with J0.
pub fn split_near_calibrated(
    tau: &MultiVector,
    omega_x: &MultiForm,
    x: &[f64],
    two_n: usize,
) -> Result<Split> {
    let m = tau.dim;
    if two_n % 2 == 1 || two_n > m || two_n == 0 {
        return invalid(format!("bad symplectic dimension {two_n}"));
    }
    let c = canonicalize_skew(&tau.skew());
    if (c.lambda[0] - 1.0).abs() > 1e-9 || c.lambda.get(1).copied().unwrap_or(0.0) > 1e-9 {
        return invalid("tau must be a unit simple 2-vector");
    }
    let val = omega_x.eval(tau)?;
    if val < 1.0 - CALIBRATED_TOL {
        return Err(Error::NotCalibrated(1.0 - val));
    }
    let (f1, f2) = c.pair_vectors(0);
    let proj = |v: &[f64]| -> Vec<f64> { v.iter().enumerate().map(|(i, c)| if i < two_n { *c } else { 0.0 }).collect() };
    let a = proj(&f1);
    let b = proj(&f2);
    let na = norm(&a);
    if na == 0.0 {
        return invalid("projection of tau onto R^2n is degenerate");
    }
    let v: Vec<f64> = a.iter().map(|c| c / na).collect();
    let mut jv = j0(&v[..two_n]);
    jv.resize(m, 0.0);
    let _ = b;
    let tau0 = MultiVector::plane(&v, &jv);
    let tau1 = tau.sub(&tau0);
    let tau1_norm = tau1.norm();
    let rx = norm(x);
    let k_ratio = if rx > 0.0 { tau1_norm / rx.sqrt() } else { f64::INFINITY };
    Ok(Split { tau0, tau1, tau1_norm, k_ratio })
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
