//! Structured-text (JSON, `schema_version` 1) and CSV encodings.
//!
//! Complex numbers are two-element arrays `[re, im]`; matrices are row-major
//! nested arrays of those.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};

pub const SCHEMA_VERSION: u32 = 1;

/// Number of significant digits for text and CSV output.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// `x` with [`SIGNIFICANT_DIGITS`] significant digits.
pub fn fmt_sig(x: f64) -> String {
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
}

pub mod complex {
    use super::*;

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> std::result::Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<C64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(C64::new(re, im))
    }
}

pub mod complex_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Row-major `[[[re, im], ...], ...]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixDoc(pub Vec<Vec<[f64; 2]>>);

impl MatrixDoc {
    pub fn from_matrix(m: &CMat) -> Self {
        Self(
            linalg::matrix_to_rows(m)
                .into_iter()
                .map(|row| row.into_iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        )
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        let rows: Vec<Vec<C64>> = self
            .0
            .iter()
            .map(|row| row.iter().map(|&[re, im]| C64::new(re, im)).collect())
            .collect();
        let m = linalg::rows_to_matrix(&rows).map_err(|e| Error::Schema(format!("ragged matrix: {e}")))?;
        if !linalg::is_finite(&m) {
            return Err(Error::Schema("matrix has non-finite entries".into()));
        }
        Ok(m)
    }

    pub fn to_square(&self, dim: usize) -> Result<CMat> {
        let m = self.to_matrix()?;
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::Schema(format!(
                "expected a {dim}x{dim} matrix, found {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(m)
    }
}

/// The envelope every artifact carries.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Header {
    pub schema_version: u32,
    pub kind: String,
}

impl Header {
    pub fn new(kind: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.into(),
        }
    }
}

pub fn check_header(header: &Header, kind: &str) -> Result<()> {
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            header.schema_version
        )));
    }
    if header.kind != kind {
        return Err(Error::Schema(format!("expected kind `{kind}`, found `{}`", header.kind)));
    }
    Ok(())
}

pub fn to_json<T: Serialize>(doc: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)?)
}

pub fn from_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Minimal CSV writer: numeric rows under a header line.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_sig).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
