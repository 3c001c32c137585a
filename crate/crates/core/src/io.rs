//! JSON representations.
//!
//! A [`SymMat`] is written as `{"dim": d, "upper": [...]}` (packed upper
//! triangle, row-major) and read from either that form or a nested array of
//! rows. Parameter files use
//!
//! ```json
//! {"schema": "affine-psd/1", "dim": 2, "alpha": ..., "b": ...,
//!  "beta": [[i, j, SymMat], ...], "c": 0.0, "gamma": ...,
//!  "m": {"scalar_atoms": [{"xi": SymMat, "w": 1.0}]},
//!  "mu": {"matrix_atoms": [{"xi": SymMat, "W": SymMat}]}}
//! ```
//!
//! with 1-based `beta` indices. Missing `beta`, `c`, `gamma`, `m`, `mu`
//! default to zero. Floats use the shortest representation that reads back
//! to the same bits.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::jumps::{MatrixAtom, MatrixAtomMeasure, ScalarAtom, ScalarAtomMeasure};
use crate::params::{AffineParams, LinearDrift};
use crate::symcone::{packed_len, SymMat};

pub const SCHEMA: &str = "affine-psd/1";

#[derive(Serialize)]
struct PackedOut<'a> {
    dim: usize,
    upper: &'a [f64],
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SymMatIn {
    Packed { dim: usize, upper: Vec<f64> },
    Rows(Vec<Vec<f64>>),
}

impl Serialize for SymMat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PackedOut {
            dim: self.dim(),
            upper: self.upper(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymMat {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        match SymMatIn::deserialize(de)? {
            SymMatIn::Packed { dim, upper } => {
                if upper.len() != packed_len(dim) {
                    return Err(D::Error::custom(format!(
                        "dimension mismatch: dim {dim} needs {} packed entries, found {}",
                        packed_len(dim),
                        upper.len()
                    )));
                }
                SymMat::from_upper(dim, upper).map_err(D::Error::custom)
            }
            SymMatIn::Rows(rows) => {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(D::Error::custom("dimension mismatch: matrix rows must form a square"));
                }
                let scale = rows.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
                for i in 0..d {
                    for j in i + 1..d {
                        if (rows[i][j] - rows[j][i]).abs() > 1e-12 * scale {
                            return Err(D::Error::custom(format!("matrix is not symmetric at ({i}, {j})")));
                        }
                    }
                }
                let m = SymMat::from_fn(d, |i, j| rows[i][j]);
                if !m.is_finite() {
                    return Err(D::Error::custom("non-finite matrix entry"));
                }
                Ok(m)
            }
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ScalarAtomJson {
    xi: SymMat,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct MatrixAtomJson {
    xi: SymMat,
    #[serde(rename = "W")]
    w: SymMat,
}

#[derive(Serialize, Deserialize, Default)]
struct ScalarMeasureJson {
    #[serde(default)]
    scalar_atoms: Vec<ScalarAtomJson>,
}

#[derive(Serialize, Deserialize, Default)]
struct MatrixMeasureJson {
    #[serde(default)]
    matrix_atoms: Vec<MatrixAtomJson>,
}

#[derive(Serialize, Deserialize)]
struct ParamsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    schema: Option<String>,
    dim: usize,
    alpha: SymMat,
    b: SymMat,
    #[serde(default)]
    beta: Vec<(usize, usize, SymMat)>,
    #[serde(default)]
    c: f64,
    #[serde(default)]
    gamma: Option<SymMat>,
    #[serde(default)]
    m: ScalarMeasureJson,
    #[serde(default)]
    mu: MatrixMeasureJson,
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

fn check_schema(schema: &Option<String>) -> Result<()> {
    match schema {
        Some(s) if s != SCHEMA => Err(Error::Parse(format!("unsupported schema {s:?}, expected {SCHEMA:?}"))),
        _ => Ok(()),
    }
}

fn params_from_repr(r: ParamsJson) -> Result<AffineParams> {
    check_schema(&r.schema)?;
    let d = r.dim;
    let mut betas = Vec::with_capacity(r.beta.len());
    for (i, j, m) in r.beta {
        if i == 0 || j == 0 {
            return Err(Error::Parse(format!("beta indices are 1-based, found ({i}, {j})")));
        }
        betas.push((i - 1, j - 1, m));
    }
    let drift = LinearDrift::from_betas(d, betas)?;
    let m = ScalarAtomMeasure::new(
        d,
        r.m.scalar_atoms
            .into_iter()
            .map(|a| ScalarAtom { xi: a.xi, weight: a.w })
            .collect(),
    )?;
    let mu = MatrixAtomMeasure::new(
        d,
        r.mu.matrix_atoms
            .into_iter()
            .map(|a| MatrixAtom { xi: a.xi, weight: a.w })
            .collect(),
    )?;
    let p = AffineParams::new(r.alpha, r.b, drift, r.c, r.gamma.unwrap_or_else(|| SymMat::zeros(d)), m, mu)?;
    if p.dim != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: p.dim,
        });
    }
    Ok(p)
}

fn params_to_repr(p: &AffineParams) -> ParamsJson {
    ParamsJson {
        schema: Some(SCHEMA.into()),
        dim: p.dim,
        alpha: p.alpha.clone(),
        b: p.b.clone(),
        beta: p
            .drift
            .entries()
            .filter(|(_, _, m)| m.upper().iter().any(|&v| v != 0.0))
            .map(|(i, j, m)| (i + 1, j + 1, m.clone()))
            .collect(),
        c: p.c,
        gamma: Some(p.gamma.clone()),
        m: ScalarMeasureJson {
            scalar_atoms: p
                .m
                .atoms()
                .iter()
                .map(|a| ScalarAtomJson {
                    xi: a.xi.clone(),
                    w: a.weight,
                })
                .collect(),
        },
        mu: MatrixMeasureJson {
            matrix_atoms: p
                .mu
                .atoms()
                .iter()
                .map(|a| MatrixAtomJson {
                    xi: a.xi.clone(),
                    w: a.weight.clone(),
                })
                .collect(),
        },
    }
}

pub fn params_from_value(v: serde_json::Value) -> Result<AffineParams> {
    params_from_repr(serde_json::from_value(v).map_err(parse_err)?)
}

pub fn params_from_json(s: &str) -> Result<AffineParams> {
    params_from_repr(serde_json::from_str(s).map_err(parse_err)?)
}

pub fn params_to_value(p: &AffineParams) -> serde_json::Value {
    serde_json::to_value(params_to_repr(p)).expect("parameter serialisation cannot fail")
}

pub fn params_to_json(p: &AffineParams) -> String {
    serde_json::to_string_pretty(&params_to_repr(p)).expect("parameter serialisation cannot fail")
}

pub fn symmat_from_json(s: &str) -> Result<SymMat> {
    serde_json::from_str(s).map_err(parse_err)
}

pub fn symmat_to_json(m: &SymMat) -> String {
    serde_json::to_string(m).expect("matrix serialisation cannot fail")
}
