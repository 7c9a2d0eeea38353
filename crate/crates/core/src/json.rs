//! JSON encodings shared by every spec file.
//!
//! Complex matrices are nested arrays of `[re, im]` pairs. On input a bare
//! number is accepted as a real entry, so real data can be written plainly.

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{c, CMatrix};

#[derive(Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(f64),
    Pair([f64; 2]),
}

fn rows_to_matrix<T: Clone + nalgebra::Scalar, D: serde::de::Error>(
    rows: Vec<Vec<T>>,
) -> Result<DMatrix<T>, D> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(D::custom("ragged matrix rows"));
    }
    let flat: Vec<T> = rows.into_iter().flatten().collect();
    Ok(DMatrix::from_row_slice(n, m, &flat))
}

pub fn complex_matrix_to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn real_matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// `#[serde(with = "complex_matrix")]`
pub mod complex_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
        complex_matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMatrix, D::Error> {
        let rows: Vec<Vec<Entry>> = Vec::deserialize(d)?;
        let rows = rows
            .into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|e| match e {
                        Entry::Real(x) => c(x, 0.0),
                        Entry::Pair([re, im]) => c(re, im),
                    })
                    .collect()
            })
            .collect();
        rows_to_matrix::<_, D::Error>(rows)
    }
}

/// `#[serde(with = "real_matrix")]`
pub mod real_matrix {
    use super::*;

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        real_matrix_to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        rows_to_matrix::<_, D::Error>(rows)
    }
}

/// `#[serde(with = "complex_matrix_opt")]` for optional fields.
pub mod complex_matrix_opt {
    use super::*;

    pub fn serialize<S: Serializer>(m: &Option<CMatrix>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(complex_matrix_to_rows).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<CMatrix>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "super::complex_matrix")] CMatrix);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

/// A real matrix usable as a map value or inside other containers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealMatrix(#[serde(with = "real_matrix")] pub DMatrix<f64>);

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Holder {
        #[serde(with = "complex_matrix")]
        m: CMatrix,
    }

    #[test]
    fn pairs_and_bare_numbers() {
        let h: Holder = serde_json::from_str(r#"{"m": [[1, [0, 2]], [[0, -2], 3.5]]}"#).unwrap();
        assert_eq!(h.m[(0, 1)], c(0.0, 2.0));
        assert_eq!(h.m[(1, 1)], c(3.5, 0.0));
        let out = serde_json::to_string(&h).unwrap();
        assert_eq!(out, r#"{"m":[[[1.0,0.0],[0.0,2.0]],[[0.0,-2.0],[3.5,0.0]]]}"#);
    }

    #[test]
    fn ragged_rows_fail() {
        assert!(serde_json::from_str::<Holder>(r#"{"m": [[1, 2], [3]]}"#).is_err());
    }
}
