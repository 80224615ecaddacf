use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where a selection came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionSource {
    Uniform,
    Iboss,
    Oss,
    Custom,
}

/// An ordered set of `k` distinct row indices; row `i` is in the subdata iff
/// it appears here.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    indices: Vec<usize>,
    source: SelectionSource,
}

impl Selection {
    /// Validates that every index is `< n` and that no index repeats.
    pub fn new(indices: Vec<usize>, n: usize, source: SelectionSource) -> Result<Self> {
        let mut seen = vec![false; n];
        for &i in &indices {
            if i >= n {
                return Err(Error::InvalidSelection(format!(
                    "row {i} out of range for {n} rows"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidSelection(format!("row {i} selected twice")));
            }
        }
        Ok(Self { indices, source })
    }

    pub(crate) fn from_trusted(indices: Vec<usize>, source: SelectionSource) -> Self {
        Self { indices, source }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn into_indices(self) -> Vec<usize> {
        self.indices
    }

    pub fn source(&self) -> SelectionSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Membership mask over `n` rows.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for &i in &self.indices {
            mask[i] = true;
        }
        mask
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut out = self.indices.clone();
        out.sort_unstable();
        out
    }
}
