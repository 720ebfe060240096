//! Community detection by recursive leading-eigenvector bisection of the
//! modularity matrix.
//!
//! For a graph with adjacency `A`, degrees `k` and `m` edges the modularity
//! matrix is `B = A − k kᵀ / 2m`. A group of vertices is split in two by the
//! signs of the eigenvector belonging to the most positive eigenvalue of its
//! generalized modularity matrix
//!
//! ```text
//! B(g)_ij = B_ij − δ_ij Σ_{l ∈ g} B_il
//! ```
//!
//! and the split is kept only when it strictly increases the modularity `Q`.
//! A group whose leading eigenvalue is not positive, or whose eigenvector has
//! a single sign, is indivisible.
//!
//! The eigenvector is obtained by power iteration on `B(g) + σI` where `σ` is
//! the largest absolute row sum of `B(g)`. Every eigenvalue of the shifted
//! matrix is then non-negative, so the most positive eigenvalue of `B(g)`
//! becomes the dominant one.

use std::io::Write;
use std::path::Path;

use log::debug;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::dissimilarity::AdjacencyGraph;
use crate::error::{Error, Result};

/// Max-norm change between successive normalized iterates that counts as
/// converged.
pub const POWER_TOLERANCE: f64 = 1e-10;
/// Eigen-residual `‖Bv − μv‖∞ / σ` that also counts as converged. Needed when
/// the two leading eigenvalues are (nearly) equal and the iterate keeps
/// drifting inside their common eigenspace.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;
/// Minimum modularity gain for a bisection to be accepted.
pub const DELTA_Q_TOLERANCE: f64 = 1e-12;
/// Leading eigenvalue must exceed this fraction of the shift to count as
/// positive.
pub const EIGENVALUE_TOLERANCE: f64 = 1e-9;
/// Largest group for which a power iteration that exhausts its budget is
/// retried with a dense symmetric eigendecomposition.
pub const DENSE_FALLBACK_LIMIT: usize = 4096;
/// Eigenvector entries smaller than this in magnitude go to the positive side.
pub const ZERO_ENTRY_TOLERANCE: f64 = 1e-12;

/// `B = A − P` with `P_ij = k_i k_j / 2m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModularityMatrix {
    pub values: DMatrix<f64>,
    /// Number of edges of the underlying graph.
    pub edge_count: usize,
}

impl ModularityMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// Generalized modularity matrix of a vertex group, indexed in the order
    /// of `group`.
    pub fn restricted(&self, group: &[usize]) -> DMatrix<f64> {
        let n = group.len();
        let mut out = DMatrix::from_fn(n, n, |a, b| self.values[(group[a], group[b])]);
        for (a, &i) in group.iter().enumerate() {
            let row_sum: f64 = group.iter().map(|&l| self.values[(i, l)]).sum();
            out[(a, a)] -= row_sum;
        }
        out
    }
}

pub fn modularity_matrix(graph: &AdjacencyGraph) -> Result<ModularityMatrix> {
    let m = graph.edge_count();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let k = graph.degrees();
    let two_m = 2.0 * m as f64;
    let n = graph.n_vertices();
    let values = DMatrix::from_fn(n, n, |i, j| graph.a(i, j) - (k[i] * k[j]) as f64 / two_m);
    Ok(ModularityMatrix { values, edge_count: m })
}

/// `Q = (1/2m) Σ_ij (A_ij − k_i k_j / 2m) [c_i = c_j]`.
pub fn modularity(graph: &AdjacencyGraph, assignment: &[usize]) -> Result<f64> {
    let n = graph.n_vertices();
    if assignment.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: assignment.len(),
        });
    }
    let m = graph.edge_count();
    if m == 0 {
        return Err(Error::EmptyGraph);
    }
    let two_m = 2.0 * m as f64;
    let k = graph.degrees();

    // Q = Σ_c [ L_c / m − (d_c / 2m)² ] with L_c intra-community edges and d_c
    // the total degree of community c.
    let n_comm = assignment.iter().copied().max().map_or(0, |c| c + 1);
    let mut internal = vec![0usize; n_comm];
    let mut degree_sum = vec![0usize; n_comm];
    for i in 0..n {
        degree_sum[assignment[i]] += k[i];
        for j in graph.neighbors(i) {
            if j > i && assignment[i] == assignment[j] {
                internal[assignment[i]] += 1;
            }
        }
    }
    let q = internal
        .iter()
        .zip(&degree_sum)
        .map(|(&l, &d)| {
            let frac = d as f64 / two_m;
            2.0 * l as f64 / two_m - frac * frac
        })
        .sum();
    Ok(q)
}

/// Result of the shifted power iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingEigen {
    /// Rayleigh quotient of `vector` on the unshifted matrix.
    pub eigenvalue: f64,
    /// Unit-norm eigenvector, sign-normalized so its largest-magnitude entry
    /// is positive.
    pub vector: Vec<f64>,
    /// The shift `σ` applied to the matrix.
    pub shift: f64,
    pub iterations: usize,
}

/// Eigenpair of the most positive eigenvalue of a symmetric matrix.
pub fn leading_eigenpair(matrix: &DMatrix<f64>) -> Result<LeadingEigen> {
    shifted_power_method(matrix, false)
}

/// Like [`leading_eigenpair`], restricted to vectors orthogonal to the
/// all-ones vector.
///
/// Every generalized modularity matrix has the all-ones vector as an
/// eigenvector with eigenvalue 0. Any eigenvector with a positive eigenvalue
/// is orthogonal to it, so removing that direction changes nothing about the
/// answer when the leading eigenvalue is positive, and it removes the slowest
/// decaying mode when the leading eigenvalue is 0 and the next one is close
/// to it.
pub fn leading_eigenpair_orthogonal_to_ones(matrix: &DMatrix<f64>) -> Result<LeadingEigen> {
    shifted_power_method(matrix, true)
}

fn shifted_power_method(matrix: &DMatrix<f64>, deflate_ones: bool) -> Result<LeadingEigen> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");
    let shift = (0..n)
        .map(|i| matrix.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);

    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i % 3) as f64 / 10.0).collect();
    if deflate_ones {
        remove_mean(&mut v);
    }
    normalize(&mut v);
    if shift == 0.0 || n < 2 && deflate_ones {
        return Ok(LeadingEigen {
            eigenvalue: 0.0,
            vector: v,
            shift,
            iterations: 0,
        });
    }

    let cap = 100 * n + 10_000;
    let (first, it1) = power_iterate(matrix, shift, v, cap, deflate_ones)?;
    // The start pattern can be exactly orthogonal to the dominant eigenspace
    // (symmetric graphs do this), in which case the iteration settles on a
    // lower eigenvector. A perturbed restart lets the missing component grow.
    let mut restart = first.clone();
    for (i, r) in restart.iter_mut().enumerate() {
        *r += 1e-3 * perturbation(i);
    }
    if deflate_ones {
        remove_mean(&mut restart);
    }
    normalize(&mut restart);
    let (second, it2) = power_iterate(matrix, shift, restart, cap, deflate_ones)?;

    let mu1 = rayleigh(matrix, &first);
    let mu2 = rayleigh(matrix, &second);
    let (mut vector, eigenvalue) = if mu2 >= mu1 { (second, mu2) } else { (first, mu1) };
    orient(&mut vector);
    Ok(LeadingEigen {
        eigenvalue,
        vector,
        shift,
        iterations: it1 + it2,
    })
}

fn power_iterate(
    matrix: &DMatrix<f64>,
    shift: f64,
    mut v: Vec<f64>,
    cap: usize,
    deflate_ones: bool,
) -> Result<(Vec<f64>, usize)> {
    let n = v.len();
    let mut w = vec![0.0; n];
    for it in 1..=cap {
        mat_vec(matrix, &v, &mut w);
        let mu: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - mu * vi).abs())
            .fold(0.0, f64::max);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += shift * vi;
        }
        if deflate_ones {
            // The all-ones direction has the largest shifted eigenvalue, so
            // rounding noise along it must be removed every step.
            remove_mean(&mut w);
        }
        if normalize(&mut w) == 0.0 {
            // v is an eigenvector for −σ, which then bounds the whole
            // spectrum: every direction is equally dominant.
            return Ok((v, it));
        }
        let diff = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut w);
        if diff < POWER_TOLERANCE || residual <= RESIDUAL_TOLERANCE * shift {
            return Ok((v, it));
        }
    }
    Err(Error::ConvergenceFailure(cap))
}

/// Dense counterpart of [`leading_eigenpair_orthogonal_to_ones`], used when
/// the leading eigenvalues are too close for power iteration to separate
/// within its budget. The all-ones direction is pushed to the bottom of the
/// spectrum by subtracting a multiple of `11ᵀ/n`, which leaves every other
/// eigenpair untouched because the rows of the matrix sum to zero.
fn dense_leading_eigenpair_orthogonal_to_ones(matrix: &DMatrix<f64>, iterations: usize) -> LeadingEigen {
    let n = matrix.nrows();
    let shift = (0..n)
        .map(|i| matrix.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let push = (2.0 * shift + 1.0) / n as f64;
    let moved = matrix.map(|x| x - push);
    let eig = nalgebra::SymmetricEigen::new(moved);
    let top = eig.eigenvalues.imax();
    let mut vector: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    remove_mean(&mut vector);
    normalize(&mut vector);
    orient(&mut vector);
    LeadingEigen {
        eigenvalue: rayleigh(matrix, &vector),
        vector,
        shift,
        iterations,
    }
}

fn remove_mean(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Deterministic pseudo-random value in `[-0.5, 0.5)` for index `i`; entry 0
/// is always `+0.5`.
fn perturbation(i: usize) -> f64 {
    if i == 0 {
        return 0.5;
    }
    let h = (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17) ^ 0xD1B5_4A32_D192_ED03;
    (h >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

fn mat_vec(matrix: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    let n = v.len();
    out.iter_mut().for_each(|o| *o = 0.0);
    for j in 0..n {
        let vj = v[j];
        if vj == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += matrix[(i, j)] * vj;
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn rayleigh(matrix: &DMatrix<f64>, v: &[f64]) -> f64 {
    let mut w = vec![0.0; v.len()];
    mat_vec(matrix, v, &mut w);
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

fn orient(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Sign vector (entries `±1.0`) splitting a group by its leading eigenvector,
/// or `None` when the group has no community structure: the leading
/// eigenvalue is not positive or all entries share one sign.
pub fn leading_eigenvector_split(generalized: &DMatrix<f64>) -> Result<Option<Vec<f64>>> {
    Ok(split_with_eigen(generalized)?.1)
}

fn split_with_eigen(generalized: &DMatrix<f64>) -> Result<(Option<LeadingEigen>, Option<Vec<f64>>)> {
    if generalized.nrows() < 2 {
        return Ok((None, None));
    }
    let eig = match leading_eigenpair_orthogonal_to_ones(generalized) {
        Err(Error::ConvergenceFailure(cap)) if generalized.nrows() <= DENSE_FALLBACK_LIMIT => {
            debug!(
                "power iteration hit its cap of {cap} on a group of {}; using dense decomposition",
                generalized.nrows()
            );
            dense_leading_eigenpair_orthogonal_to_ones(generalized, cap)
        }
        other => other?,
    };
    if eig.eigenvalue <= EIGENVALUE_TOLERANCE * eig.shift {
        return Ok((Some(eig), None));
    }
    let signs: Vec<f64> = eig
        .vector
        .iter()
        .map(|&x| if x <= -ZERO_ENTRY_TOLERANCE { -1.0 } else { 1.0 })
        .collect();
    let split = if signs.iter().all(|&s| s > 0.0) || signs.iter().all(|&s| s < 0.0) {
        None
    } else {
        Some(signs)
    };
    Ok((Some(eig), split))
}

/// Assignment of vertices to communities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityPartition {
    /// Community index per vertex; indices are contiguous and ordered by the
    /// smallest member vertex.
    pub assignment: Vec<usize>,
    pub k: usize,
    /// Modularity of `assignment`. Zero for an edgeless graph, where
    /// modularity is undefined.
    pub modularity_q: f64,
}

impl CommunityPartition {
    /// Builds a partition from arbitrary labels, renumbering them by first
    /// appearance. `modularity_q` is left at zero.
    pub fn from_labels(labels: &[usize]) -> Self {
        let assignment = canonical_labels(labels);
        let k = assignment.iter().copied().max().map_or(0, |c| c + 1);
        Self {
            assignment,
            k,
            modularity_q: 0.0,
        }
    }

    /// Vertices of each community, in index order.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.k];
        for (v, &c) in self.assignment.iter().enumerate() {
            groups[c].push(v);
        }
        groups
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    /// Writes `entity_id,community_index` rows.
    pub fn write_csv<W: Write>(&self, entity_ids: &[String], writer: W) -> Result<()> {
        if entity_ids.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                got: entity_ids.len(),
            });
        }
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["entity_id", "community_index"])?;
        for (id, c) in entity_ids.iter().zip(&self.assignment) {
            w.write_record([id.as_str(), &c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, entity_ids: &[String], path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(entity_ids, std::io::BufWriter::new(file))
    }
}

/// Renumbers labels so that community indices follow first appearance, which
/// is the same as ordering communities by their smallest member.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            let next = map.len();
            *map.entry(l).or_insert(next)
        })
        .collect()
}

/// One attempted bisection during [`detect_communities_traced`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bisection {
    pub group: Vec<usize>,
    /// Leading eigenvalue of the group's generalized modularity matrix.
    pub eigenvalue: f64,
    /// Modularity gain the sign split would bring; `None` when there was no
    /// sign split to evaluate.
    pub delta_q: Option<f64>,
    pub accepted: bool,
    /// The two halves, smallest member first, when accepted.
    pub halves: Option<[Vec<usize>; 2]>,
}

pub fn detect_communities(graph: &AdjacencyGraph) -> Result<CommunityPartition> {
    Ok(detect_communities_traced(graph)?.0)
}

/// Same as [`detect_communities`], also returning every bisection attempted.
pub fn detect_communities_traced(graph: &AdjacencyGraph) -> Result<(CommunityPartition, Vec<Bisection>)> {
    let n = graph.n_vertices();
    let components = connected_components(graph);
    let mut finished: Vec<Vec<usize>> = Vec::new();
    let mut pending: Vec<Vec<usize>> = Vec::new();
    for comp in components {
        if comp.len() == 1 {
            finished.push(comp);
        } else {
            pending.push(comp);
        }
    }

    let mut trace = Vec::new();
    if !pending.is_empty() {
        let b = modularity_matrix(graph)?;
        let four_m = 4.0 * b.edge_count as f64;
        // Depth-first, smallest-member group first.
        pending.reverse();
        while let Some(group) = pending.pop() {
            let bg = b.restricted(&group);
            let (eig, split) = split_with_eigen(&bg)?;
            let eigenvalue = eig.map_or(0.0, |e| e.eigenvalue);
            let Some(signs) = split else {
                trace.push(Bisection {
                    group: group.clone(),
                    eigenvalue,
                    delta_q: None,
                    accepted: false,
                    halves: None,
                });
                finished.push(group);
                continue;
            };
            let delta_q = quadratic_form(&bg, &signs) / four_m;
            let accepted = delta_q > DELTA_Q_TOLERANCE;
            debug!(
                "bisection of {} vertices: eigenvalue {eigenvalue:.6}, ΔQ {delta_q:.6}, accepted {accepted}",
                group.len()
            );
            if !accepted {
                trace.push(Bisection {
                    group: group.clone(),
                    eigenvalue,
                    delta_q: Some(delta_q),
                    accepted,
                    halves: None,
                });
                finished.push(group);
                continue;
            }
            let (pos, neg): (Vec<(usize, f64)>, Vec<(usize, f64)>) =
                group.iter().copied().zip(signs.iter().copied()).partition(|&(_, s)| s > 0.0);
            let mut halves = [
                pos.into_iter().map(|(v, _)| v).collect::<Vec<_>>(),
                neg.into_iter().map(|(v, _)| v).collect::<Vec<_>>(),
            ];
            halves.sort_by_key(|h| h[0]);
            trace.push(Bisection {
                group,
                eigenvalue,
                delta_q: Some(delta_q),
                accepted,
                halves: Some(halves.clone()),
            });
            let [first, second] = halves;
            pending.push(second);
            pending.push(first);
        }
    }

    finished.sort_by_key(|g| g.iter().copied().min().unwrap_or(usize::MAX));
    let mut assignment = vec![0; n];
    for (c, g) in finished.iter().enumerate() {
        for &v in g {
            assignment[v] = c;
        }
    }
    let modularity_q = if graph.edge_count() == 0 {
        0.0
    } else {
        modularity(graph, &assignment)?
    };
    Ok((
        CommunityPartition {
            assignment,
            k: finished.len(),
            modularity_q,
        },
        trace,
    ))
}

fn quadratic_form(matrix: &DMatrix<f64>, s: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, &si) in s.iter().enumerate() {
        for (j, &sj) in s.iter().enumerate() {
            total += si * matrix[(i, j)] * sj;
        }
    }
    total
}

/// Connected components, each sorted, listed by smallest member.
pub fn connected_components(graph: &AdjacencyGraph) -> Vec<Vec<usize>> {
    let n = graph.n_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, j) in graph.edges() {
        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
        if ri != rj {
            parent[ri.max(rj)] = ri.min(rj);
        }
    }
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut index_of_root = vec![usize::MAX; n];
    for v in 0..n {
        let r = find(&mut parent, v);
        if index_of_root[r] == usize::MAX {
            index_of_root[r] = comps.len();
            comps.push(Vec::new());
        }
        comps[index_of_root[r]].push(v);
    }
    comps
}
