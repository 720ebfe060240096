//! Cross-RSE matrices and the thresholded fleet graph.

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fleet_data::FleetDataset;
use crate::regression::{self, RegressionModel};

/// `values[(i, j)]` is the RSE of entity `i`'s model tested on entity `j`'s
/// data. Not symmetric in general.
#[derive(Debug, Clone, PartialEq)]
pub struct RawCrossMatrix {
    pub values: DMatrix<f64>,
    pub entity_ids: Vec<String>,
}

/// Symmetrized cross-RSE matrix `(R + Rᵀ)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    pub values: DMatrix<f64>,
    pub entity_ids: Vec<String>,
}

impl DissimilarityMatrix {
    pub fn len(&self) -> usize {
        self.entity_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entity_ids.is_empty()
    }

    /// Off-diagonal upper-triangle entries, row by row.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                out.push(self.values[(i, j)]);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_matrix_csv(&self.values, &self.entity_ids, writer)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

impl RawCrossMatrix {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_matrix_csv(&self.values, &self.entity_ids, writer)
    }
}

fn write_matrix_csv<W: Write>(values: &DMatrix<f64>, ids: &[String], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![String::new()];
    header.extend(ids.iter().cloned());
    w.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend((0..ids.len()).map(|j| values[(i, j)].to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Binary, symmetric adjacency matrix without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyGraph {
    n: usize,
    adjacency: Vec<bool>,
    /// Threshold that produced the graph, if it came from [`threshold_graph`].
    pub lambda: Option<f64>,
}

impl AdjacencyGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adjacency: vec![false; n * n],
            lambda: None,
        }
    }

    /// Builds an undirected graph from an edge list. Self-loops are ignored.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            assert!(i < n && j < n, "edge ({i}, {j}) out of range for n = {n}");
            if i != j {
                g.adjacency[i * n + j] = true;
                g.adjacency[j * n + i] = true;
            }
        }
        g
    }

    pub fn n_vertices(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        if self.has_edge(i, j) {
            1.0
        } else {
            0.0
        }
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i * self.n..(i + 1) * self.n]
            .iter()
            .filter(|&&e| e)
            .count()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    /// Number of undirected edges `m`.
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&e| e).count() / 2
    }

    /// Edges `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }

    /// Relabels vertices: vertex `v` of `self` becomes `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let edges: Vec<_> = self.edges().into_iter().map(|(i, j)| (perm[i], perm[j])).collect();
        let mut g = Self::from_edges(self.n, &edges);
        g.lambda = self.lambda;
        g
    }
}

/// Tests every model on every dataset.
pub fn cross_rse_matrix(models: &[RegressionModel], fleet: &FleetDataset) -> Result<RawCrossMatrix> {
    let n = fleet.len();
    if models.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: models.len(),
        });
    }
    let rows = models
        .par_iter()
        .map(|model| {
            fleet
                .entities()
                .iter()
                .map(|data| regression::rse(model, data))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let values = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    Ok(RawCrossMatrix {
        values,
        entity_ids: fleet.entity_ids(),
    })
}

pub fn symmetrize(raw: &RawCrossMatrix) -> DissimilarityMatrix {
    let r = &raw.values;
    let n = r.nrows();
    let values = DMatrix::from_fn(n, n, |i, j| {
        // Same operand order on both sides keeps the result exactly symmetric.
        let (a, b) = if i <= j { (r[(i, j)], r[(j, i)]) } else { (r[(j, i)], r[(i, j)]) };
        (a + b) / 2.0
    });
    DissimilarityMatrix {
        values,
        entity_ids: raw.entity_ids.clone(),
    }
}

/// Symmetrizes an already-dissimilarity matrix again; a fixed point.
pub fn resymmetrize(dis: &DissimilarityMatrix) -> DissimilarityMatrix {
    symmetrize(&RawCrossMatrix {
        values: dis.values.clone(),
        entity_ids: dis.entity_ids.clone(),
    })
}

/// Edge `{i, j}` is present iff `r′[i][j] ≤ λ` (unit step with `H(0) = 1`);
/// the diagonal is always empty.
pub fn threshold_graph(dis: &DissimilarityMatrix, lambda: f64) -> AdjacencyGraph {
    let n = dis.len();
    let mut g = AdjacencyGraph::empty(n);
    for i in 0..n {
        for j in i + 1..n {
            if lambda - dis.values[(i, j)] >= 0.0 {
                g.adjacency[i * n + j] = true;
                g.adjacency[j * n + i] = true;
            }
        }
    }
    g.lambda = Some(lambda);
    g
}
