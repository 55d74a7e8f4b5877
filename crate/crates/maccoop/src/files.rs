//! On-disk JSON formats for channels, codes, and 0/1 matrices.
//!
//! All files are plain JSON. Channels store labels plus the nested
//! `[x1][x2][y]` tensor; codes store [`crate::code::CodeParts`] verbatim;
//! matrices store rows of 0/1 integers.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blockperm::ZeroOneMatrix;
use crate::channel::DiscreteMac;
use crate::code::{CodeParts, CooperationCode};
use crate::{Error, Result};

/// Serialized channel: labels and the transition tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    /// Input labels of user 1.
    pub x1: Vec<String>,
    /// Input labels of user 2.
    pub x2: Vec<String>,
    /// Output labels.
    pub y: Vec<String>,
    /// Transition tensor `p[x1][x2][y]`.
    pub p: Vec<Vec<Vec<f64>>>,
}

impl ChannelFile {
    /// Converts into a validated channel.
    pub fn into_mac(self) -> Result<DiscreteMac<f64>> {
        DiscreteMac::new(self.x1, self.x2, self.y, self.p)
    }

    /// Snapshot of a channel.
    pub fn from_mac(mac: &DiscreteMac<f64>) -> Self {
        let p = (0..mac.n1())
            .map(|a| {
                (0..mac.n2())
                    .map(|b| (0..mac.ny()).map(|y| mac.prob(a, b, y)).collect())
                    .collect()
            })
            .collect();
        ChannelFile {
            x1: mac.x1_labels().to_vec(),
            x2: mac.x2_labels().to_vec(),
            y: mac.y_labels().to_vec(),
            p,
        }
    }
}

/// Serialized 0/1 matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixFile {
    /// Rows of 0/1 entries.
    pub rows: Vec<Vec<u8>>,
}

impl MatrixFile {
    /// Converts into a validated matrix.
    ///
    /// # Errors
    /// Validation error if any entry is neither 0 nor 1.
    pub fn into_matrix(self) -> Result<ZeroOneMatrix> {
        let mut rows = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            if row.iter().any(|&v| v > 1) {
                return Err(Error::validation("matrix entries must be 0 or 1"));
            }
            rows.push(row.iter().map(|&v| v == 1).collect());
        }
        ZeroOneMatrix::new(rows)
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::validation(format!("cannot parse {}: {e}", path.display())))
}

/// Loads a channel file. The name `contraction` (no such file existing)
/// resolves to the builtin contraction MAC, and `adder` to the binary adder.
pub fn load_channel(path: &Path) -> Result<DiscreteMac<f64>> {
    if !path.exists() {
        match path.to_str() {
            Some("contraction") => return Ok(crate::channel::contraction_mac()),
            Some("adder") => return Ok(crate::channel::binary_adder_mac()),
            _ => {}
        }
    }
    read_json::<ChannelFile>(path)?.into_mac()
}

/// Saves a channel file.
pub fn save_channel(path: &Path, mac: &DiscreteMac<f64>) -> Result<()> {
    let value = serde_json::to_value(ChannelFile::from_mac(mac))?;
    std::fs::write(path, crate::report::canonical_json(&value))?;
    Ok(())
}

/// Loads and validates a code file.
pub fn load_code(path: &Path) -> Result<CooperationCode<f64>> {
    CooperationCode::new(read_json::<CodeParts<f64>>(path)?)
}

/// Saves a code file.
pub fn save_code(path: &Path, code: &CooperationCode<f64>) -> Result<()> {
    let value = serde_json::to_value(code.parts())?;
    std::fs::write(path, crate::report::canonical_json(&value))?;
    Ok(())
}

/// Loads a 0/1 matrix file.
///
/// Accepts either the JSON form `{"rows": [[0,1],...]}` or plain text
/// with one row per line, entries `0`/`1` separated by whitespace or
/// packed (`0110`); `#` lines are comments.
pub fn load_matrix(path: &Path) -> Result<ZeroOneMatrix> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
    if let Ok(file) = serde_json::from_str::<MatrixFile>(&text) {
        return file.into_matrix();
    }
    parse_matrix_text(&text)
}

fn parse_matrix_text(text: &str) -> Result<ZeroOneMatrix> {
    let bit = |tok: &str| match tok {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::validation(format!(
            "matrix entries must be 0 or 1, got {other:?}"
        ))),
    };
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<bool>> = if line.contains(char::is_whitespace) {
            line.split_whitespace().map(bit).collect()
        } else {
            line.chars().map(|c| bit(&c.to_string())).collect()
        };
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::validation("matrix file holds no rows"));
    }
    ZeroOneMatrix::new(rows)
}
