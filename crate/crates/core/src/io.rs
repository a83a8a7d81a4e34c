//! JSON and JSONL serialisation of trees and finite spaces.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmspace::FiniteMMSpace;
use crate::trees::{BiMeasureTree, CanonicalTree, PlaneTree};

/// One serialised tree: `parents` lists the parents of vertices `1..n` in
/// lexicographic order. The optional fields decorate it as a bi-measure
/// tree; `labels` gives the original label of each vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeRecord {
    pub n: usize,
    pub parents: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_atoms: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_edge_density: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<usize>>,
}

impl TreeRecord {
    pub fn from_shape(tree: &PlaneTree) -> Self {
        Self {
            n: tree.n(),
            parents: tree.parents(),
            mu: None,
            nu_atoms: None,
            nu_edge_density: None,
            edge_length: None,
            labels: None,
        }
    }

    /// Canonical shape with labels and `mu` set to the label weights.
    pub fn from_canonical(tree: &CanonicalTree, weights: &[f64]) -> Self {
        Self {
            mu: Some(tree.label_of_lex.iter().map(|&l| weights[l]).collect()),
            labels: Some(tree.label_of_lex.clone()),
            ..Self::from_shape(&tree.tree)
        }
    }

    pub fn from_bimeasure(tree: &BiMeasureTree) -> Self {
        Self {
            mu: Some(tree.mu.clone()),
            nu_atoms: Some(tree.nu_atoms.clone()),
            nu_edge_density: Some(tree.nu_edge_density),
            edge_length: Some(tree.edge_length),
            ..Self::from_shape(&tree.shape)
        }
    }

    pub fn shape(&self) -> Result<PlaneTree> {
        if self.parents.len() + 1 != self.n {
            return Err(Error::Parse(format!(
                "n = {} but {} parents given",
                self.n,
                self.parents.len()
            )));
        }
        PlaneTree::from_parents(&self.parents)
    }

    /// Bi-measure tree with defaults: unit edges, uniform probability `mu`,
    /// no pruning measure.
    pub fn to_bimeasure(&self) -> Result<BiMeasureTree> {
        let shape = self.shape()?;
        let n = shape.n();
        if let Some(labels) = &self.labels {
            if labels.len() != n {
                return Err(Error::Parse(format!("{} labels for {n} vertices", labels.len())));
            }
        }
        BiMeasureTree::new(
            shape,
            self.edge_length.unwrap_or(1.0),
            self.mu.clone().unwrap_or_else(|| vec![1.0 / n as f64; n]),
            self.nu_edge_density.unwrap_or(0.0),
            self.nu_atoms.clone().unwrap_or_else(|| vec![0.0; n]),
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records always serialise")
    }

    pub fn from_json(line: &str) -> Result<Self> {
        let rec: Self = serde_json::from_str(line).map_err(|e| Error::Parse(e.to_string()))?;
        rec.shape()?;
        Ok(rec)
    }
}

/// Reads every nonblank line of a JSONL corpus.
pub fn read_tree_jsonl(reader: impl BufRead) -> Result<Vec<TreeRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(TreeRecord::from_json(&line).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

pub fn write_tree_jsonl<'a>(
    mut writer: impl Write,
    trees: impl IntoIterator<Item = &'a TreeRecord>,
) -> std::io::Result<()> {
    for t in trees {
        writeln!(writer, "{}", t.to_json())?;
    }
    Ok(())
}

pub fn space_to_json(space: &FiniteMMSpace) -> String {
    serde_json::to_string(space).expect("spaces always serialise")
}

pub fn space_from_json(text: &str) -> Result<FiniteMMSpace> {
    let space: FiniteMMSpace = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    space.validate()?;
    Ok(space)
}
