//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numerics.
#![allow(dead_code)]

use fleetnet::dissimilarity::AdjacencyGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Solves `M x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        b.swap(col, pivot);
        assert!(m[col][col].abs() > 1e-300, "singular system");
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..n {
                m[row][c] -= f * m[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    x
}

/// Least squares through the normal equations `XᵀX β = Xᵀy`.
pub fn normal_equations(design: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let m = design[0].len();
    let mut xtx = vec![vec![0.0; m]; m];
    let mut xty = vec![0.0; m];
    for (row, &yi) in design.iter().zip(y) {
        for a in 0..m {
            xty[a] += row[a] * yi;
            for b in 0..m {
                xtx[a][b] += row[a] * row[b];
            }
        }
    }
    gauss_solve(xtx, xty)
}

/// Rank by row reduction with a relative tolerance.
pub fn matrix_rank(rows: &[Vec<f64>]) -> usize {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let scale = m.iter().flatten().fold(0.0f64, |a, &x| a.max(x.abs())).max(1.0);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..m.len()).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())) else {
            break;
        };
        if m[p][col].abs() <= 1e-9 * scale {
            continue;
        }
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank {
                let f = m[r][col] / m[rank][col];
                for c in col..cols {
                    m[r][c] -= f * m[rank][c];
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Returns
/// eigenvalues in descending order with eigenvectors as columns `vecs[i][k]`.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).filter(|(i, j)| i != j).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (values, vectors)
}

/// `B_ij = A_ij − k_i k_j / 2m`, built straight from the adjacency matrix.
pub fn modularity_matrix_dense(g: &AdjacencyGraph) -> Vec<Vec<f64>> {
    let n = g.n_vertices();
    let a: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| g.a(i, j)).collect()).collect();
    let k: Vec<f64> = a.iter().map(|r| r.iter().sum()).collect();
    let two_m: f64 = k.iter().sum();
    (0..n).map(|i| (0..n).map(|j| a[i][j] - k[i] * k[j] / two_m).collect()).collect()
}

/// `Q = (1/2m) Σ_ij B_ij δ(c_i, c_j)`.
pub fn modularity_by_definition(g: &AdjacencyGraph, labels: &[usize]) -> f64 {
    let b = modularity_matrix_dense(g);
    let two_m = 2.0 * g.edge_count() as f64;
    let n = labels.len();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] == labels[j] {
                q += b[i][j];
            }
        }
    }
    q / two_m
}

/// Every set partition of `0..n` as restricted growth strings.
pub fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(i: usize, n: usize, cur: &mut Vec<usize>, max: usize, out: &mut Vec<Vec<usize>>) {
        if i == n {
            out.push(cur.clone());
            return;
        }
        for c in 0..=max + 1 {
            if i == 0 && c > 0 {
                break;
            }
            cur.push(c);
            rec(i + 1, n, cur, if i == 0 { 0 } else { max.max(c) }, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        rec(0, n, &mut Vec::new(), 0, &mut out);
    }
    out
}

pub fn max_modularity(g: &AdjacencyGraph) -> f64 {
    all_partitions(g.n_vertices())
        .iter()
        .map(|p| modularity_by_definition(g, p))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> AdjacencyGraph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    AdjacencyGraph::from_edges(n, &edges)
}

pub fn is_connected(g: &AdjacencyGraph) -> bool {
    let n = g.n_vertices();
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for w in g.neighbors(v) {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Random connected graph on `n` vertices: a random spanning tree plus
/// extra edges with probability `p`.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, p: f64) -> AdjacencyGraph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let g = AdjacencyGraph::from_edges(n, &edges);
    assert!(is_connected(&g));
    g
}

/// Two triangles joined by one edge: {0,1,2} – {3,4,5} via (2,3).
pub fn barbell() -> AdjacencyGraph {
    AdjacencyGraph::from_edges(6, &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (2, 3)])
}

pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len() && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

/// Random full-rank regression instance with `T ≤ 20` rows and `m ≤ 4`
/// coefficients.
pub struct RegressionInstance {
    pub observations: Vec<fleetnet::fleet_data::Observation>,
    pub basis: fleetnet::regression::BasisSpec,
    pub design: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

/// `[1, x_1..x_p, x_1²..x_p², …]`, written out independently of the library.
pub fn design_row(x: &[f64], degree: usize) -> Vec<f64> {
    let mut row = vec![1.0];
    for d in 1..=degree {
        for &xi in x {
            row.push(xi.powi(d as i32));
        }
    }
    row
}

pub fn random_regression_instance(rng: &mut impl Rng) -> RegressionInstance {
    // (inputs, degree) pairs with p·d + 1 ≤ 4.
    const SHAPES: [(usize, usize); 5] = [(1, 1), (1, 2), (1, 3), (2, 1), (3, 1)];
    loop {
        let (p, degree) = SHAPES[rng.random_range(0..SHAPES.len())];
        let m = p * degree + 1;
        let t = rng.random_range(m..=20);
        let coef: Vec<f64> = (0..m).map(|_| rng.random_range(-5.0..5.0)).collect();
        let mut observations = Vec::with_capacity(t);
        let mut design = Vec::with_capacity(t);
        let mut y = Vec::with_capacity(t);
        for _ in 0..t {
            let x: Vec<f64> = (0..p).map(|_| rng.random_range(-2.0..2.0)).collect();
            let row = design_row(&x, degree);
            let yi = row.iter().zip(&coef).map(|(a, b)| a * b).sum::<f64>() + rng.random_range(-1.0..1.0);
            observations.push(fleetnet::fleet_data::Observation::new(x, yi));
            design.push(row);
            y.push(yi);
        }
        // The normal-equations oracle loses accuracy with cond(XᵀX); keep
        // instances where it is itself good to about 1e-10.
        if matrix_rank(&design) == m && gram_condition(&design) <= 1e6 {
            return RegressionInstance {
                observations,
                basis: fleetnet::regression::BasisSpec::new(degree),
                design,
                y,
            };
        }
    }
}

pub fn gram_condition(design: &[Vec<f64>]) -> f64 {
    let m = design[0].len();
    let xtx: Vec<Vec<f64>> = (0..m)
        .map(|a| (0..m).map(|b| design.iter().map(|r| r[a] * r[b]).sum()).collect())
        .collect();
    let (ev, _) = jacobi_eigen(&xtx);
    ev[0] / ev[m - 1]
}

/// `sqrt((1/T) Σ (y − ŷ)²)` evaluated directly from the design rows.
pub fn direct_rse(design: &[Vec<f64>], y: &[f64], coef: &[f64]) -> f64 {
    let sse: f64 = design
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let yhat: f64 = row.iter().zip(coef).map(|(a, b)| a * b).sum();
            (yi - yhat).powi(2)
        })
        .sum();
    (sse / y.len() as f64).sqrt()
}

pub fn relative_error(got: &[f64], want: &[f64]) -> f64 {
    let scale = want.iter().fold(1.0f64, |a, &w| a.max(w.abs()));
    got.iter().zip(want).fold(0.0f64, |a, (g, w)| a.max((g - w).abs())) / scale
}

/// `B(g)_ij = B_ij − δ_ij Σ_{l∈g} B_il`, indexed in the order of `group`.
pub fn generalized_dense(b: &[Vec<f64>], group: &[usize]) -> Vec<Vec<f64>> {
    group
        .iter()
        .enumerate()
        .map(|(a, &i)| {
            let row_sum: f64 = group.iter().map(|&l| b[i][l]).sum();
            group
                .iter()
                .enumerate()
                .map(|(c, &j)| b[i][j] - if a == c { row_sum } else { 0.0 })
                .collect()
        })
        .collect()
}
