//! Mesh text format:
//!
//! ```text
//! dim 4
//! vertex 0 0 0 0
//! vertex 1 0 0 0
//! vertex 0 1 0 0
//! tri 0 1 2 1
//! ```
//!
//! Vertex indices are 0-based, in order of appearance. `#` starts a comment.

use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use tancone::currents::TriCurrent;

pub fn parse(text: &str) -> Result<TriCurrent> {
    let mut dim: Option<usize> = None;
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut mult: Vec<i64> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tag = parts.next().unwrap_or("");
        let rest: Vec<&str> = parts.collect();
        match tag {
            "dim" => {
                if dim.is_some() {
                    bail!("line {ln}: repeated `dim`");
                }
                if rest.len() != 1 {
                    bail!("line {ln}: `dim` takes one value");
                }
                dim = Some(rest[0].parse().with_context(|| format!("line {ln}: bad dimension"))?);
            }
            "vertex" => {
                let m = dim.with_context(|| format!("line {ln}: `vertex` before `dim`"))?;
                if rest.len() != m {
                    bail!("line {ln}: vertex has {} coordinates, expected {m}", rest.len());
                }
                let v = rest
                    .iter()
                    .map(|s| s.parse::<f64>())
                    .collect::<std::result::Result<Vec<f64>, _>>()
                    .with_context(|| format!("line {ln}: bad coordinate"))?;
                if v.iter().any(|x| !x.is_finite()) {
                    bail!("line {ln}: non-finite coordinate");
                }
                vertices.push(v);
            }
            "tri" => {
                if dim.is_none() {
                    bail!("line {ln}: `tri` before `dim`");
                }
                if rest.len() != 4 {
                    bail!("line {ln}: `tri i j k mult` takes four values");
                }
                let idx = rest[..3]
                    .iter()
                    .map(|s| s.parse::<usize>())
                    .collect::<std::result::Result<Vec<usize>, _>>()
                    .with_context(|| format!("line {ln}: bad vertex index"))?;
                let mu: i64 = rest[3].parse().with_context(|| format!("line {ln}: bad multiplicity"))?;
                tris.push([idx[0], idx[1], idx[2]]);
                mult.push(mu);
            }
            other => bail!("line {ln}: unknown record `{other}`"),
        }
    }
    let m = dim.context("mesh has no `dim` line")?;
    if tris.is_empty() {
        bail!("mesh has no triangles");
    }
    Ok(TriCurrent::new(m, vertices, tris, mult)?)
}

pub fn write(c: &TriCurrent) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dim {}", c.dim());
    for v in c.vertices() {
        let coords: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(s, "vertex {}", coords.join(" "));
    }
    for (t, mu) in c.triangles().iter().zip(c.multiplicities()) {
        let _ = writeln!(s, "tri {} {} {} {mu}", t[0], t[1], t[2]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_mass() {
        let d = tancone::examples::flat_disk(4, 1.0, 0.2, 2).unwrap();
        let back = parse(&write(&d)).unwrap();
        assert_eq!(back.num_triangles(), d.num_triangles());
        assert_eq!(back.total_mass(), d.total_mass());
    }

    #[test]
    fn small_mesh_with_comments() {
        let text = "# unit triangle\ndim 4\nvertex 0 0 0 0\nvertex 1 0 0 0  # x\nvertex 0 1 0 0\ntri 0 1 2 1\n";
        let c = parse(text).unwrap();
        assert!((c.total_mass() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse("dim 4\nvertex 0 0 0\n").unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        assert!(parse("vertex 0 0\n").is_err());
        assert!(parse("dim 2\nvertex 0 0\nvertex 1 0\nvertex 0 0\ntri 0 1 2 1\n").is_err());
        assert!(parse("dim 2\nvertex 0 0\nvertex 1 0\nvertex 0 1\ntri 0 1 5 1\n").is_err());
        assert!(parse("dim 2\nquad 0 1 2 3\n").is_err());
    }
}
