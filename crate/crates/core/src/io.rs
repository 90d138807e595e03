//! Text formats shared by the command line and the fuzz targets.
//!
//! Every parser here rejects malformed input with [`Error::Parse`] or a
//! validation error and never panics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freesets::{Bipartition, Partition};
use crate::opcore::HermitianOp;

/// Largest total dimension accepted from a file.
pub const MAX_FILE_DIM: usize = 1 << 12;
/// Largest number of points in a sweep.
pub const MAX_SWEEP_POINTS: usize = 100_000;

/// `{"dims": [..], "matrix": [[re, im], ..]}` with the matrix row-major, or
/// `"vector"` in place of `"matrix"` for a pure state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vector: Option<Vec<[f64; 2]>>,
}

fn total_dim(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Parse(format!("dims {dims:?} must be a non-empty list of positive integers")));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&d| d <= MAX_FILE_DIM)
        .ok_or_else(|| Error::Parse(format!("total dimension of {dims:?} exceeds {MAX_FILE_DIM}")))
}

fn to_complex(entries: &[[f64; 2]], expected: usize, what: &str) -> Result<Vec<C64>> {
    if entries.len() != expected {
        return Err(Error::Parse(format!("{what} has {} entries, expected {expected}", entries.len())));
    }
    if entries.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Parse(format!("{what} contains a non-finite entry")));
    }
    Ok(entries.iter().map(|&[re, im]| C64::new(re, im)).collect())
}

fn parse_file(text: &str) -> Result<StateFile> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

impl StateFile {
    pub fn from_operator(op: &HermitianOp) -> Self {
        let m = op.matrix();
        let d = op.dim();
        let matrix = (0..d * d).map(|k| m[(k / d, k % d)]).map(|z| [z.re, z.im]).collect();
        Self { dims: op.dims().to_vec(), matrix: Some(matrix), vector: None }
    }

    pub fn from_vector(dims: &[usize], psi: &DVector<C64>) -> Self {
        Self { dims: dims.to_vec(), matrix: None, vector: Some(psi.iter().map(|z| [z.re, z.im]).collect()) }
    }

    /// The operator, `|psi><psi|` for a vector file.
    pub fn operator(&self) -> Result<HermitianOp> {
        let d = total_dim(&self.dims)?;
        match (&self.matrix, &self.vector) {
            (Some(m), None) => {
                let z = to_complex(m, d * d, "matrix")?;
                HermitianOp::new(self.dims.clone(), DMatrix::from_row_slice(d, d, &z))
            }
            (None, Some(_)) => HermitianOp::projector(&self.dims, &self.vector_data()?),
            _ => Err(Error::Parse("exactly one of \"matrix\" and \"vector\" is required".into())),
        }
    }

    /// The unit vector of a vector file.
    pub fn vector_data(&self) -> Result<DVector<C64>> {
        let d = total_dim(&self.dims)?;
        let v = self.vector.as_ref().ok_or_else(|| Error::Parse("file carries no \"vector\"".into()))?;
        Ok(DVector::from_vec(to_complex(v, d, "vector")?))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain data serializes")
    }
}

pub fn parse_state_file(text: &str) -> Result<HermitianOp> {
    parse_file(text)?.operator()
}

pub fn parse_vector_file(text: &str) -> Result<(Vec<usize>, DVector<C64>)> {
    let f = parse_file(text)?;
    let v = f.vector_data()?;
    Ok((f.dims, v))
}

pub fn write_state_file(op: &HermitianOp) -> String {
    StateFile::from_operator(op).to_json()
}

fn parse_index_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<usize>().map_err(|_| Error::Parse(format!("bad index {t:?}")))
        })
        .collect()
}

/// `"0,2"`: the factors on the first side of a cut.
pub fn parse_split(text: &str, factors: usize) -> Result<Bipartition> {
    Bipartition::new(&parse_index_list(text)?, factors)
}

/// `"0|1|2;0,1|2"`: partitions separated by `;`, blocks by `|`.
pub fn parse_partitions(text: &str, factors: usize) -> Result<Vec<Partition>> {
    text.split(';')
        .map(|p| {
            let blocks = p.split('|').map(parse_index_list).collect::<Result<Vec<_>>>()?;
            Partition::new(blocks, factors)
        })
        .collect()
}

/// Comma-separated positive integers.
pub fn parse_dims(text: &str) -> Result<Vec<usize>> {
    let dims = parse_index_list(text)?;
    total_dim(&dims)?;
    Ok(dims)
}

/// Comma-separated finite reals.
pub fn parse_reals(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse(format!("bad number {t:?}")))
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<f64>,
}

/// `"eps=a:b:n"` (linear) or `"eps=a:b:n:log"` (geometric, `a, b > 0`).
pub fn parse_sweep(text: &str) -> Result<Sweep> {
    let (name, range) =
        text.split_once('=').ok_or_else(|| Error::Parse(format!("sweep {text:?} lacks '='")))?;
    let name = name.trim();
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(Error::Parse(format!("bad sweep parameter {name:?}")));
    }
    let parts: Vec<&str> = range.split(':').collect();
    let log = match parts.len() {
        3 => false,
        4 if parts[3].trim() == "log" => true,
        _ => return Err(Error::Parse(format!("sweep range {range:?} is not a:b:n[:log]"))),
    };
    let ends = parse_reals(&format!("{},{}", parts[0], parts[1]))?;
    let n: usize = parts[2].trim().parse().map_err(|_| Error::Parse(format!("bad count {:?}", parts[2])))?;
    if n == 0 || n > MAX_SWEEP_POINTS {
        return Err(Error::Parse(format!("sweep count {n} outside 1..={MAX_SWEEP_POINTS}")));
    }
    let (a, b) = (ends[0], ends[1]);
    if log && !(a > 0.0 && b > 0.0) {
        return Err(Error::Parse("geometric sweep needs positive ends".into()));
    }
    let values = (0..n)
        .map(|k| {
            let f = if n == 1 { 0.0 } else { k as f64 / (n - 1) as f64 };
            if k == n - 1 && n > 1 {
                b
            } else if log {
                (a.ln() + f * (b.ln() - a.ln())).exp()
            } else {
                a + f * (b - a)
            }
        })
        .collect();
    Ok(Sweep { parameter: name.to_string(), values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_round_trip() {
        let op = HermitianOp::from_real_diagonal(&[2], &[0.25, 0.75]).unwrap();
        let text = write_state_file(&op);
        assert_eq!(text, r#"{"dims":[2],"matrix":[[0.25,0.0],[0.0,0.0],[0.0,0.0],[0.75,0.0]]}"#);
        assert_eq!(parse_state_file(&text).unwrap().matrix(), op.matrix());
    }

    #[test]
    fn vector_files() {
        let t = r#"{"dims":[2,2],"vector":[[0.7071067811865476,0],[0,0],[0,0],[0.7071067811865476,0]]}"#;
        let op = parse_state_file(t).unwrap();
        assert!((op.trace() - 1.0).abs() < 1e-15);
        let (dims, v) = parse_vector_file(t).unwrap();
        assert_eq!(dims, vec![2, 2]);
        assert_eq!(v.len(), 4);
    }

    #[test]
    fn rejects_bad_files() {
        for t in [
            "",
            "{}",
            r#"{"dims":[2],"matrix":[[1,0]]}"#,
            r#"{"dims":[0],"matrix":[]}"#,
            r#"{"dims":[2],"matrix":[[1,0],[0,1],[0,0],[0,0]]}"#,
            r#"{"dims":[18446744073709551615,2],"matrix":[]}"#,
            r#"{"dims":[1],"matrix":[[1,0]],"vector":[[1,0]]}"#,
            r#"{"dims":[1],"matrix":[[1,0]],"extra":1}"#,
        ] {
            assert!(parse_state_file(t).is_err(), "{t}");
        }
    }

    #[test]
    fn specs() {
        assert_eq!(parse_split("0,2", 3).unwrap().a_side(), &[0, 2]);
        assert!(parse_split("0,1,2", 3).is_err());
        assert!(parse_split("x", 3).is_err());
        let p = parse_partitions("0|1|2;0,1|2", 3).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].blocks(), &[vec![0, 1], vec![2]]);
        assert!(parse_partitions("0|0|1", 2).is_err());
        let s = parse_sweep("eps=1e-3:1e-1:3:log").unwrap();
        assert_eq!(s.parameter, "eps");
        assert!((s.values[1] - 1e-2).abs() < 1e-15);
        assert_eq!(parse_sweep("energy=1:3:3").unwrap().values, vec![1.0, 2.0, 3.0]);
        assert!(parse_sweep("eps=0:1:3:log").is_err());
        assert!(parse_sweep("eps=1:2").is_err());
    }
}
