//! Quadrature rules.

/// Symmetric 13-point rule on the triangle, exact through degree 7.
/// Entries are barycentric coordinates and a weight; weights sum to 1.
pub const TRI7: [([f64; 3], f64); 13] = {
    const A0: f64 = 1.0 / 3.0;
    const W0: f64 = -0.149570044467682;
    const A1: f64 = 0.260345966079040;
    const B1: f64 = 0.479308067841920;
    const W1: f64 = 0.175615257433208;
    const A2: f64 = 0.065130102902216;
    const B2: f64 = 0.869739794195568;
    const W2: f64 = 0.053347235608838;
    const A3: f64 = 0.048690315425316;
    const B3: f64 = 0.312865496004874;
    const C3: f64 = 0.638444188569810;
    const W3: f64 = 0.077113760890257;
    [
        ([A0, A0, A0], W0),
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
        ([A3, B3, C3], W3),
        ([A3, C3, B3], W3),
        ([B3, A3, C3], W3),
        ([B3, C3, A3], W3),
        ([C3, A3, B3], W3),
        ([C3, B3, A3], W3),
    ]
};

/// Points and area-weighted weights of [`TRI7`] on a triangle in R^m.
pub fn tri7_points(p: [&[f64]; 3], area: f64) -> Vec<(Vec<f64>, f64)> {
    let m = p[0].len();
    TRI7.iter()
        .map(|(b, w)| {
            let x: Vec<f64> = (0..m).map(|k| b[0] * p[0][k] + b[1] * p[1][k] + b[2] * p[2][k]).collect();
            (x, w * area)
        })
        .collect()
}

/// Gauss-Legendre nodes and weights on [-1, 1] via Newton on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss-Legendre rule mapped to [a, b].
pub fn gl_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    x.iter().zip(&w).map(|(xi, wi)| (c + h * xi, h * wi)).collect()
}
