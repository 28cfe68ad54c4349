//! Codeword files for the encode / damage / repair pipeline: a JSON header
//! echoing the build parameters, then the symbol payload as little-endian
//! coefficient arrays with erased entries stored as null.

use crate::array::{ArrayCodeParams, ArrayCodeSpec};
use crate::gf::FieldElement;
use crate::rs::{RsCodeParams, RsCodeSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FileError {
    #[error("expected {expect} columns, found {got}")]
    WrongColumnCount { expect: usize, got: usize },
    #[error("column {col} has {got} rows, expected {expect}")]
    WrongRowCount {
        col: usize,
        expect: usize,
        got: usize,
    },
    #[error("symbol at column {col}, row {row} has {got} coefficients, limit {limit}")]
    OversizedSymbol {
        col: usize,
        row: usize,
        got: usize,
        limit: usize,
    },
    #[error("expected {expect} coordinates, found {got}")]
    WrongCoordinateCount { expect: usize, got: usize },
    #[error("coordinate {coord} has {got} coefficients, limit {limit}")]
    OversizedCoordinate {
        coord: usize,
        got: usize,
        limit: usize,
    },
    #[error("column {0} out of range")]
    ColumnOutOfRange(usize),
    #[error("column {0} is erased")]
    Erased(usize),
}

/// On-disk codeword, tagged with its code family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CodewordFile {
    Array(ArrayCodewordFile),
    Rs(RsCodewordFile),
}

impl CodewordFile {
    pub fn erased(&self) -> Vec<usize> {
        match self {
            CodewordFile::Array(f) => f.erased(),
            CodewordFile::Rs(f) => f.erased(),
        }
    }

    pub fn erase(&mut self, entries: &[usize]) -> Result<(), FileError> {
        match self {
            CodewordFile::Array(f) => f.erase(entries),
            CodewordFile::Rs(f) => f.erase(entries),
        }
    }
}

/// Array codeword on disk: n columns of `rows` symbols each.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArrayCodewordFile {
    pub params: ArrayCodeSpec,
    pub columns: Vec<Option<Vec<Vec<u64>>>>,
}

impl ArrayCodewordFile {
    pub fn capture(params: &ArrayCodeParams, columns: &[Vec<FieldElement>]) -> ArrayCodewordFile {
        assert_eq!(columns.len(), params.n());
        ArrayCodewordFile {
            params: params.spec().clone(),
            columns: columns
                .iter()
                .map(|col| Some(col.iter().map(|x| x.coeffs().to_vec()).collect()))
                .collect(),
        }
    }

    pub fn erase(&mut self, cols: &[usize]) -> Result<(), FileError> {
        for &c in cols {
            if c >= self.columns.len() {
                return Err(FileError::ColumnOutOfRange(c));
            }
            self.columns[c] = None;
        }
        Ok(())
    }

    pub fn erased(&self) -> Vec<usize> {
        self.columns
            .iter()
            .enumerate()
            .filter_map(|(c, col)| col.is_none().then_some(c))
            .collect()
    }

    /// Validates the payload against the params and returns the surviving
    /// columns as field elements.
    pub fn surviving(
        &self,
        params: &ArrayCodeParams,
    ) -> Result<BTreeMap<usize, Vec<FieldElement>>, FileError> {
        if self.columns.len() != params.n() {
            return Err(FileError::WrongColumnCount {
                expect: params.n(),
                got: self.columns.len(),
            });
        }
        let f = params.field();
        let limit = f.descriptor().m;
        let mut out = BTreeMap::new();
        for (c, col) in self.columns.iter().enumerate() {
            let Some(symbols) = col else { continue };
            if symbols.len() != params.rows() {
                return Err(FileError::WrongRowCount {
                    col: c,
                    expect: params.rows(),
                    got: symbols.len(),
                });
            }
            let mut parsed = Vec::with_capacity(symbols.len());
            for (r, coeffs) in symbols.iter().enumerate() {
                if coeffs.len() > limit {
                    return Err(FileError::OversizedSymbol {
                        col: c,
                        row: r,
                        got: coeffs.len(),
                        limit,
                    });
                }
                parsed.push(f.element(coeffs));
            }
            out.insert(c, parsed);
        }
        Ok(out)
    }

    /// Writes repaired columns back over their erased slots.
    pub fn restore(
        &mut self,
        repaired: &BTreeMap<usize, Vec<FieldElement>>,
    ) -> Result<(), FileError> {
        for (&c, col) in repaired {
            if c >= self.columns.len() {
                return Err(FileError::ColumnOutOfRange(c));
            }
            self.columns[c] = Some(col.iter().map(|x| x.coeffs().to_vec()).collect());
        }
        Ok(())
    }

    /// The complete column matrix; any erased column is an error naming it.
    pub fn full_columns(
        &self,
        params: &ArrayCodeParams,
    ) -> Result<Vec<Vec<FieldElement>>, FileError> {
        if let Some(c) = self.columns.iter().position(|c| c.is_none()) {
            return Err(FileError::Erased(c));
        }
        let survivors = self.surviving(params)?;
        Ok(survivors.into_values().collect())
    }
}

/// Tower Reed-Solomon codeword on disk: n coordinates, each one field
/// element over the base field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RsCodewordFile {
    pub params: RsCodeSpec,
    pub coords: Vec<Option<Vec<u64>>>,
}

impl RsCodewordFile {
    pub fn capture(params: &RsCodeParams, word: &[FieldElement]) -> RsCodewordFile {
        assert_eq!(word.len(), params.n());
        RsCodewordFile {
            params: params.spec().clone(),
            coords: word.iter().map(|x| Some(x.coeffs().to_vec())).collect(),
        }
    }

    pub fn erase(&mut self, coords: &[usize]) -> Result<(), FileError> {
        for &c in coords {
            if c >= self.coords.len() {
                return Err(FileError::ColumnOutOfRange(c));
            }
            self.coords[c] = None;
        }
        Ok(())
    }

    pub fn erased(&self) -> Vec<usize> {
        self.coords
            .iter()
            .enumerate()
            .filter_map(|(c, x)| x.is_none().then_some(c))
            .collect()
    }

    pub fn surviving(
        &self,
        params: &RsCodeParams,
        field: &crate::gf::FieldCtx,
    ) -> Result<BTreeMap<usize, FieldElement>, FileError> {
        if self.coords.len() != params.n() {
            return Err(FileError::WrongCoordinateCount {
                expect: params.n(),
                got: self.coords.len(),
            });
        }
        let mut out = BTreeMap::new();
        for (c, coeffs) in self.coords.iter().enumerate() {
            let Some(coeffs) = coeffs else { continue };
            if coeffs.len() > params.ell() {
                return Err(FileError::OversizedCoordinate {
                    coord: c,
                    got: coeffs.len(),
                    limit: params.ell(),
                });
            }
            out.insert(c, field.element(coeffs));
        }
        Ok(out)
    }

    pub fn restore(&mut self, repaired: &BTreeMap<usize, FieldElement>) -> Result<(), FileError> {
        for (&c, x) in repaired {
            if c >= self.coords.len() {
                return Err(FileError::ColumnOutOfRange(c));
            }
            self.coords[c] = Some(x.coeffs().to_vec());
        }
        Ok(())
    }

    pub fn full_word(
        &self,
        params: &RsCodeParams,
        field: &crate::gf::FieldCtx,
    ) -> Result<Vec<FieldElement>, FileError> {
        if let Some(c) = self.coords.iter().position(|c| c.is_none()) {
            return Err(FileError::Erased(c));
        }
        let survivors = self.surviving(params, field)?;
        Ok(survivors.into_values().collect())
    }
}
