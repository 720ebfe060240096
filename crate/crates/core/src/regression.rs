//! Per-entity least-squares models and the residual standard error.
//!
//! Models are polynomials without cross terms: for inputs `x_1..x_p` and
//! degree `d` the basis is `[1, x_1..x_p, x_1²..x_p², …, x_1^d..x_p^d]`, so a
//! model has `p·d + 1` coefficients. Fits use a Householder QR factorization
//! of the design matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fleet_data::{EntityDataset, Observation};

/// Relative tolerance on the diagonal of `R` below which a column is treated
/// as linearly dependent on its predecessors.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Polynomial basis with intercept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub degree: usize,
}

impl Default for BasisSpec {
    fn default() -> Self {
        Self::linear()
    }
}

impl BasisSpec {
    pub fn new(degree: usize) -> Self {
        Self { degree }
    }

    pub fn linear() -> Self {
        Self { degree: 1 }
    }

    /// Number of coefficients `m = p·d + 1` for `p` inputs.
    pub fn n_coefficients(&self, input_dim: usize) -> usize {
        input_dim * self.degree + 1
    }

    /// Expands `x` into basis values, appending to `out`.
    pub fn expand_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.push(1.0);
        let mut powers: Vec<f64> = x.to_vec();
        for d in 1..=self.degree {
            if d > 1 {
                for (p, &xi) in powers.iter_mut().zip(x) {
                    *p *= xi;
                }
            }
            out.extend_from_slice(&powers);
        }
    }

    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_coefficients(x.len()));
        self.expand_into(x, &mut out);
        out
    }
}

/// A fitted model `f̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub basis: BasisSpec,
    pub input_dim: usize,
    pub coefficients: Vec<f64>,
    /// RSE of the model on the observations it was fitted to.
    pub training_rse: f64,
}

impl RegressionModel {
    /// Builds a model from given coefficients; `training_rse` is left at zero.
    pub fn from_coefficients(basis: BasisSpec, input_dim: usize, coefficients: Vec<f64>) -> Result<Self> {
        let m = basis.n_coefficients(input_dim);
        if coefficients.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: coefficients.len(),
            });
        }
        Ok(Self {
            basis,
            input_dim,
            coefficients,
            training_rse: 0.0,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(self.predict_unchecked(x))
    }

    fn predict_unchecked(&self, x: &[f64]) -> f64 {
        let mut acc = self.coefficients[0];
        let mut k = 1;
        let mut powers: Vec<f64> = x.to_vec();
        for d in 1..=self.basis.degree {
            if d > 1 {
                for (p, &xi) in powers.iter_mut().zip(x) {
                    *p *= xi;
                }
            }
            for &p in &powers {
                acc += self.coefficients[k] * p;
                k += 1;
            }
        }
        acc
    }

    /// RSE of this model on an arbitrary set of observations.
    pub fn rse_on(&self, observations: &[Observation]) -> Result<f64> {
        if observations.is_empty() {
            return Err(Error::TooFewObservations("RSE of an empty dataset".into()));
        }
        let mut sum = 0.0;
        for obs in observations {
            let r = obs.y - self.predict(&obs.x)?;
            sum += r * r;
        }
        Ok((sum / observations.len() as f64).sqrt())
    }
}

/// `sqrt((1/T) Σ (y − ŷ)²)`; the divisor is the number of observations, with
/// no degrees-of-freedom correction.
pub fn rse(model: &RegressionModel, data: &EntityDataset) -> Result<f64> {
    model.rse_on(&data.observations)
}

pub fn predict(model: &RegressionModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

/// Least-squares fit of `basis` to one entity.
pub fn fit_entity_model(data: &EntityDataset, basis: &BasisSpec) -> Result<RegressionModel> {
    fit_observations(&data.observations, basis)
}

/// Least-squares fit of `basis` to a set of observations sharing one input
/// dimension.
pub fn fit_observations(observations: &[Observation], basis: &BasisSpec) -> Result<RegressionModel> {
    let first = observations.first().ok_or(Error::Underdetermined {
        rows: 0,
        coefficients: 1,
    })?;
    let p = first.x.len();
    let m = basis.n_coefficients(p);
    if observations.len() < m {
        return Err(Error::Underdetermined {
            rows: observations.len(),
            coefficients: m,
        });
    }
    for obs in observations {
        if obs.x.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: obs.x.len(),
            });
        }
        if !obs.is_finite() {
            return Err(Error::InvalidFleet("non-finite observation".into()));
        }
    }

    let mut qr = HouseholderQr::new(observations, basis);
    let mut rhs: Vec<f64> = observations.iter().map(|o| o.y).collect();
    qr.factorize()?;
    qr.apply_qt(&mut rhs);
    let coefficients = qr.back_substitute(&rhs);

    let mut model = RegressionModel {
        basis: *basis,
        input_dim: p,
        coefficients,
        training_rse: 0.0,
    };
    model.training_rse = model.rse_on(observations)?;
    Ok(model)
}

/// Whether the design matrix of `observations` under `basis` has full column
/// rank (by the same criterion used when fitting).
pub fn has_full_column_rank(observations: &[Observation], basis: &BasisSpec) -> bool {
    let Some(first) = observations.first() else {
        return false;
    };
    if observations.len() < basis.n_coefficients(first.x.len()) {
        return false;
    }
    HouseholderQr::new(observations, basis).factorize().is_ok()
}

/// Column-major Householder QR of a tall design matrix.
struct HouseholderQr {
    rows: usize,
    cols: usize,
    /// Column-major storage; after factorization the upper triangle holds `R`
    /// and the part below the diagonal holds the Householder vectors.
    a: Vec<f64>,
    /// Leading entries of the Householder vectors.
    v0: Vec<f64>,
    /// Householder scalings `2 / vᵀv`.
    beta: Vec<f64>,
    diag: Vec<f64>,
}

impl HouseholderQr {
    fn new(observations: &[Observation], basis: &BasisSpec) -> Self {
        let rows = observations.len();
        let cols = basis.n_coefficients(observations[0].x.len());
        let mut a = vec![0.0; rows * cols];
        let mut buf = Vec::with_capacity(cols);
        for (i, obs) in observations.iter().enumerate() {
            buf.clear();
            basis.expand_into(&obs.x, &mut buf);
            for (j, &v) in buf.iter().enumerate() {
                a[j * rows + i] = v;
            }
        }
        Self {
            rows,
            cols,
            a,
            v0: vec![0.0; cols],
            beta: vec![0.0; cols],
            diag: vec![0.0; cols],
        }
    }

    fn col(&self, j: usize) -> &[f64] {
        &self.a[j * self.rows..(j + 1) * self.rows]
    }

    fn factorize(&mut self) -> Result<()> {
        let (n, m) = (self.rows, self.cols);
        let max_norm = (0..m)
            .map(|j| self.col(j).iter().map(|v| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let tol = RANK_TOLERANCE * max_norm;
        if max_norm == 0.0 {
            return Err(Error::RankDeficient);
        }

        for k in 0..m {
            let norm = self.a[k * n + k..(k + 1) * n]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            if norm <= tol {
                return Err(Error::RankDeficient);
            }
            let akk = self.a[k * n + k];
            let alpha = if akk >= 0.0 { -norm } else { norm };
            // v = x − alpha·e1, stored in place (v0 kept separately).
            let v0 = akk - alpha;
            let vtv = v0 * v0 + self.a[k * n + k + 1..(k + 1) * n].iter().map(|v| v * v).sum::<f64>();
            self.v0[k] = v0;
            self.beta[k] = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };
            self.diag[k] = alpha;

            for j in k + 1..m {
                let mut dot = v0 * self.a[j * n + k];
                for i in k + 1..n {
                    dot += self.a[k * n + i] * self.a[j * n + i];
                }
                let s = self.beta[k] * dot;
                self.a[j * n + k] -= s * v0;
                for i in k + 1..n {
                    self.a[j * n + i] -= s * self.a[k * n + i];
                }
            }
            self.a[k * n + k] = alpha;
        }
        Ok(())
    }

    fn apply_qt(&self, b: &mut [f64]) {
        let n = self.rows;
        for k in 0..self.cols {
            let v0 = self.v0[k];
            let mut dot = v0 * b[k];
            for i in k + 1..n {
                dot += self.a[k * n + i] * b[i];
            }
            let s = self.beta[k] * dot;
            b[k] -= s * v0;
            for i in k + 1..n {
                b[i] -= s * self.a[k * n + i];
            }
        }
    }

    fn back_substitute(&self, qtb: &[f64]) -> Vec<f64> {
        let (n, m) = (self.rows, self.cols);
        let mut x = vec![0.0; m];
        for k in (0..m).rev() {
            let mut s = qtb[k];
            for j in k + 1..m {
                s -= self.a[j * n + k] * x[j];
            }
            x[k] = s / self.diag[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn exact_line() {
        let d = EntityDataset::from_pairs("A", &[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0)]);
        let m = fit_entity_model(&d, &BasisSpec::linear()).unwrap();
        assert!(approx(m.coefficients[0], 1.0, 1e-12));
        assert!(approx(m.coefficients[1], 2.0, 1e-12));
        assert!(m.training_rse < 1e-12);
    }

    #[test]
    fn underdetermined() {
        let d = EntityDataset::from_pairs("A", &[(0.0, 1.0)]);
        assert!(matches!(
            fit_entity_model(&d, &BasisSpec::linear()),
            Err(Error::Underdetermined {
                rows: 1,
                coefficients: 2
            })
        ));
    }

    #[test]
    fn identical_x_is_rank_deficient() {
        let d = EntityDataset::from_pairs("A", &[(2.0, 1.0), (2.0, 3.0), (2.0, 5.0)]);
        assert!(matches!(
            fit_entity_model(&d, &BasisSpec::linear()),
            Err(Error::RankDeficient)
        ));
    }

    #[test]
    fn predictions() {
        let lin = RegressionModel::from_coefficients(BasisSpec::linear(), 1, vec![1.0, 2.0]).unwrap();
        assert_eq!(lin.predict(&[0.0]).unwrap(), 1.0);
        assert_eq!(lin.predict(&[10.0]).unwrap(), 21.0);
        let quad = RegressionModel::from_coefficients(BasisSpec::new(2), 1, vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(quad.predict(&[3.0]).unwrap(), 9.0);
        assert!(matches!(
            lin.predict(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn rse_of_zero_model() {
        let zero = RegressionModel::from_coefficients(BasisSpec::linear(), 1, vec![0.0, 0.0]).unwrap();
        let d = EntityDataset::from_pairs("A", &[(0.0, 3.0), (1.0, 4.0)]);
        assert!(approx(rse(&zero, &d).unwrap(), 12.5f64.sqrt(), 1e-15));
    }

    #[test]
    fn basis_expansion_without_cross_terms() {
        let b = BasisSpec::new(2);
        assert_eq!(b.n_coefficients(2), 5);
        assert_eq!(b.expand(&[2.0, 3.0]), vec![1.0, 2.0, 3.0, 4.0, 9.0]);
        assert_eq!(BasisSpec::new(0).expand(&[5.0]), vec![1.0]);
    }

    #[test]
    fn multi_input_plane() {
        let obs: Vec<Observation> = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 3.0)]
            .iter()
            .map(|&(a, b)| Observation::new(vec![a, b], 0.5 + 2.0 * a - 1.5 * b))
            .collect();
        let m = fit_observations(&obs, &BasisSpec::linear()).unwrap();
        for (c, e) in m.coefficients.iter().zip([0.5, 2.0, -1.5]) {
            assert!(approx(*c, e, 1e-12), "{c} vs {e}");
        }
    }
}
