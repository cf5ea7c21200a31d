//! Eigenstructure of evolution matrices.
//!
//! Every evolution matrix has the all-ones row as a left eigenvector with
//! eigenvalue one, so the spectrum always contains `λ = 1`. That eigenvalue is
//! reported first; the remaining eigenvalues follow by descending modulus
//! (ties: descending real part, then ascending imaginary part). Left and right
//! eigenvectors are biorthonormal under the bilinear pairing
//! `Σ_i L_p[i] R_q[i] = δ_pq`, with the leading left vector fixed to all-ones
//! so that the leading right vector sums to one.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{classify_matrix, EvolutionMatrix, MatrixKind};
use crate::population::{make_population, PopulationVector};
use crate::tolerance::ToleranceConfig;

const SCHUR_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("eigenvalue {eigenvalue} is defective (algebraic {algebraic}, geometric {geometric})")]
    DefectiveMatrix {
        eigenvalue: Complex64,
        algebraic: usize,
        geometric: usize,
    },
    #[error("Schur decomposition did not converge")]
    SchurFailed,
    #[error("no eigenvalue within tolerance of 1 (closest is {0} away)")]
    NoUnitEigenvalue(f64),
    #[error("two eigenvalues coincide; left/right pairing is ambiguous")]
    DegenerateSpectrum,
    #[error("matrix is not stochastic")]
    NotStochastic,
    #[error("matrix powers did not converge after {0} squarings")]
    NoConvergence(usize),
    #[error("need at least {min} species, got {got}")]
    TooSmall { got: usize, min: usize },
}

/// How the stationary distribution was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StationaryStatus {
    /// The leading right eigenvector has one sign and was normalized onto the simplex.
    Positive,
    /// The leading right eigenvector mixes signs; no population is stationary.
    MixedSign,
    /// `λ = 1` is repeated, so the stationary distribution is not unique.
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub eigenvalues: Vec<Complex64>,
    pub right_vectors: Vec<Vec<Complex64>>,
    pub left_vectors: Vec<Vec<Complex64>>,
    pub stationary: Option<PopulationVector>,
    pub stationary_status: StationaryStatus,
    /// `|λ₂|`; absent for a single species.
    pub lambda2_modulus: Option<f64>,
    pub lambda2_is_complex: bool,
    /// Some pair of eigenvalues coincides within `eig_tol`.
    pub degenerate: bool,
}

impl SpectralSummary {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiorthogonalityReport {
    pub max_violation: f64,
    pub passed: bool,
}

fn bilinear(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn scale(v: &mut [Complex64], s: Complex64) {
    v.iter_mut().for_each(|z| *z *= s);
}

fn by_modulus(a: &Complex64, b: &Complex64, tol: f64) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let (ma, mb) = (a.norm(), b.norm());
    if (ma - mb).abs() > tol {
        return mb.partial_cmp(&ma).unwrap_or(Ordering::Equal);
    }
    if (a.re - b.re).abs() > tol {
        return b.re.partial_cmp(&a.re).unwrap_or(Ordering::Equal);
    }
    a.im.partial_cmp(&b.im).unwrap_or(Ordering::Equal)
}

/// Orders eigenvalues: the one closest to 1 first, the rest by modulus.
fn order_eigenvalues(mut values: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let lead = values
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| (*a - one).norm().total_cmp(&(*b - one).norm()))
        .map(|(i, _)| i)
        .expect("non-empty spectrum");
    let first = values.remove(lead);
    values.sort_by(|a, b| by_modulus(a, b, tol));
    values.insert(0, first);
    values
}

/// Groups consecutive indices whose eigenvalues lie within `tol` of one
/// another (single linkage). Indices follow the sorted order, so each group
/// is a list of positions.
fn clusters(values: &[Complex64], tol: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn root(label: &mut [usize], mut i: usize) -> usize {
        while label[i] != i {
            label[i] = label[label[i]];
            i = label[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (ri, rj) = (root(&mut label, i), root(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = root(&mut label, i);
        match seen[r] {
            Some(g) => groups[g].push(i),
            None => {
                seen[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Smallest singular values (ascending) and their right singular vectors.
type NullBasis = (Vec<f64>, Vec<Vec<Complex64>>);

/// Null-space basis of `a` as (singular values ascending, vectors).
fn null_vectors(a: DMatrix<Complex64>, count: usize) -> NullBasis {
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let picked = &order[..count];
    let sigmas = picked.iter().map(|&k| svd.singular_values[k]).collect();
    let vectors = picked
        .iter()
        .map(|&k| v_t.row(k).iter().map(|z| z.conj()).collect())
        .collect();
    (sigmas, vectors)
}

fn null_vectors_real(a: DMatrix<f64>, count: usize) -> NullBasis {
    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
    let picked = &order[..count];
    let sigmas = picked.iter().map(|&k| svd.singular_values[k]).collect();
    let vectors = picked
        .iter()
        .map(|&k| v_t.row(k).iter().map(|&x| Complex64::new(x, 0.0)).collect())
        .collect();
    (sigmas, vectors)
}

/// Right and left null bases of `M - λI` for a cluster of size `k`.
fn eigenbases(m: &DMatrix<f64>, lambda: Complex64, k: usize) -> (NullBasis, NullBasis) {
    let n = m.nrows();
    if lambda.im == 0.0 {
        let shifted = m - DMatrix::<f64>::identity(n, n) * lambda.re;
        let left = null_vectors_real(shifted.transpose(), k);
        (null_vectors_real(shifted, k), left)
    } else {
        let shifted =
            m.map(|x| Complex64::new(x, 0.0)) - DMatrix::<Complex64>::identity(n, n) * lambda;
        let left = null_vectors(shifted.transpose(), k);
        (null_vectors(shifted, k), left)
    }
}

/// Divides by the largest-modulus component (first on ties) so that it becomes 1.
fn fix_phase(v: &mut [Complex64]) {
    let pivot = v.iter().copied().fold(Complex64::new(0.0, 0.0), |best, z| {
        if z.norm() > best.norm() * (1.0 + 1e-12) {
            z
        } else {
            best
        }
    });
    if pivot.norm() > 0.0 {
        scale(v, pivot.inv());
    }
}

fn realify(v: &mut [Complex64]) {
    v.iter_mut().for_each(|z| z.im = 0.0);
}

/// Modified Gram-Schmidt under the Hermitian inner product, keeping at most
/// `k` vectors with non-negligible residual. Returns unit vectors.
fn orthonormal_basis(candidates: Vec<Vec<Complex64>>, k: usize) -> Vec<Vec<Complex64>> {
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    for mut v in candidates {
        if basis.len() == k {
            break;
        }
        for b in &basis {
            let proj: Complex64 = b.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            v.iter_mut().zip(b).for_each(|(y, x)| *y -= proj * x);
        }
        let len = norm(&v);
        if len > 1e-8 {
            scale(&mut v, Complex64::new(1.0 / len, 0.0));
            basis.push(v);
        }
    }
    basis
}

/// Replaces `right` with `right · G⁻¹`, where `G_pq = L_p · R_q`, so that the
/// pairs become biorthonormal. Returns `None` when `G` is numerically singular.
fn biorthonormalize(
    left: &[Vec<Complex64>],
    right: &[Vec<Complex64>],
    cond_floor: f64,
) -> Option<Vec<Vec<Complex64>>> {
    let k = left.len();
    let n = right[0].len();
    let unit = |v: &Vec<Complex64>| {
        let mut u = v.clone();
        scale(&mut u, Complex64::new(1.0 / norm(v), 0.0));
        u
    };
    let lu: Vec<_> = left.iter().map(unit).collect();
    let ru: Vec<_> = right.iter().map(unit).collect();
    let g_unit = DMatrix::from_fn(k, k, |p, q| bilinear(&lu[p], &ru[q]));
    let sigma_min = g_unit
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if sigma_min < cond_floor {
        return None;
    }
    let g = DMatrix::from_fn(k, k, |p, q| bilinear(&left[p], &right[q]));
    let g_inv = g.try_inverse()?;
    let r = DMatrix::from_fn(n, k, |i, q| right[q][i]);
    let fixed = r * g_inv;
    Some(
        (0..k)
            .map(|q| fixed.column(q).iter().copied().collect())
            .collect(),
    )
}

/// Full eigendecomposition with biorthonormal left/right eigenvectors.
pub fn eigendecompose(
    m: &EvolutionMatrix,
    tol: &ToleranceConfig,
) -> Result<SpectralSummary, SpectralError> {
    let n = m.dim();
    let entries = m.entries();
    let schur = Schur::try_new(entries.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or(SpectralError::SchurFailed)?;
    let raw: Vec<Complex64> = schur
        .complex_eigenvalues()
        .iter()
        .map(|z| {
            if z.im.abs() <= tol.zero_tol {
                Complex64::new(z.re, 0.0)
            } else {
                *z
            }
        })
        .collect();
    let eigenvalues = order_eigenvalues(raw, tol.eig_tol);

    // Eigenvalues whose eigenvector condition falls below this are treated as
    // belonging to a Jordan block.
    let cond_floor = tol.eig_tol.sqrt();
    let null_floor = cond_floor * entries.norm().max(1.0);

    let groups = clusters(&eigenvalues, tol.eig_tol);
    let degenerate = groups.iter().any(|g| g.len() > 1);
    let mut right = vec![Vec::new(); n];
    let mut left = vec![Vec::new(); n];

    for group in &groups {
        let k = group.len();
        let mean: Complex64 = group.iter().map(|&i| eigenvalues[i]).sum::<Complex64>() / k as f64;
        let lambda = if mean.im.abs() <= tol.zero_tol {
            Complex64::new(mean.re, 0.0)
        } else {
            mean
        };
        let is_real = lambda.im == 0.0;
        let leading = group[0] == 0;
        let ((r_sig, mut r_vecs), (l_sig, mut l_vecs)) = eigenbases(entries, lambda, k);

        let geometric = r_sig
            .iter()
            .zip(&l_sig)
            .filter(|(&r, &l)| r.max(l) <= null_floor)
            .count();
        if k > 1 && geometric < k {
            return Err(SpectralError::DefectiveMatrix {
                eigenvalue: lambda,
                algebraic: k,
                geometric,
            });
        }
        let defective = || SpectralError::DefectiveMatrix {
            eigenvalue: lambda,
            algebraic: k,
            geometric: k - 1,
        };

        if leading {
            let ones = vec![Complex64::new(1.0, 0.0); n];
            let mut candidates = vec![ones.clone()];
            candidates.extend(l_vecs);
            l_vecs = orthonormal_basis(candidates, k);
            if l_vecs.len() < k {
                return Err(defective());
            }
            l_vecs[0] = ones;
        }
        if k == 1 && !leading {
            fix_phase(&mut r_vecs[0]);
            fix_phase(&mut l_vecs[0]);
        }
        if is_real {
            r_vecs.iter_mut().for_each(|v| realify(v));
            l_vecs.iter_mut().for_each(|v| realify(v));
        }
        let paired = if k == 1 && !leading {
            // keep the right vector's max-component-one scaling; rescale left
            let (l, r) = (&l_vecs[0], &r_vecs[0]);
            let cond = bilinear(l, r).norm() / (norm(l) * norm(r));
            if cond < cond_floor {
                return Err(defective());
            }
            let s = bilinear(l, r).inv();
            scale(&mut l_vecs[0], s);
            r_vecs
        } else {
            biorthonormalize(&l_vecs, &r_vecs, cond_floor).ok_or_else(defective)?
        };
        for (&pos, (r, l)) in group.iter().zip(paired.into_iter().zip(l_vecs)) {
            right[pos] = r;
            left[pos] = l;
        }
    }

    let distance = (eigenvalues[0] - Complex64::new(1.0, 0.0)).norm();
    if distance > tol.eig_tol {
        return Err(SpectralError::NoUnitEigenvalue(distance));
    }

    let leading_repeated = groups.iter().any(|g| g[0] == 0 && g.len() > 1);
    let (stationary, stationary_status) = if leading_repeated {
        (None, StationaryStatus::Degenerate)
    } else {
        resolve_stationary(&right[0], tol.zero_tol)
    };

    let (lambda2_modulus, lambda2_is_complex) = match eigenvalues.get(1) {
        Some(z) => (Some(z.norm()), z.im != 0.0),
        None => (None, false),
    };

    Ok(SpectralSummary {
        eigenvalues,
        right_vectors: right,
        left_vectors: left,
        stationary,
        stationary_status,
        lambda2_modulus,
        lambda2_is_complex,
        degenerate,
    })
}

fn resolve_stationary(
    leading_right: &[Complex64],
    zero_tol: f64,
) -> (Option<PopulationVector>, StationaryStatus) {
    let re: Vec<f64> = leading_right.iter().map(|z| z.re).collect();
    if re.iter().any(|&x| x < -zero_tol) {
        return (None, StationaryStatus::MixedSign);
    }
    let clamped: Vec<f64> = re.iter().map(|&x| x.max(0.0)).collect();
    match make_population(&clamped) {
        Ok(p) => (Some(p), StationaryStatus::Positive),
        Err(_) => (None, StationaryStatus::MixedSign),
    }
}

/// Stationary distribution as the common column of `lim Mⁿ`, found by
/// repeated squaring until every column agrees within `tol`.
///
/// Independent of the eigensolver; `max_iter` bounds the number of squarings.
pub fn stationary_by_iteration(
    m: &EvolutionMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<PopulationVector, SpectralError> {
    if classify_matrix(m, &ToleranceConfig::default()).kind != MatrixKind::Stochastic {
        return Err(SpectralError::NotStochastic);
    }
    let n = m.dim();
    let mut power = m.entries().clone();
    for _ in 0..max_iter {
        let columns_agree = (0..n).all(|i| {
            let row = power.row(i);
            let (lo, hi) = row
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                    (lo.min(x), hi.max(x))
                });
            hi - lo <= tol
        });
        if columns_agree {
            let mean: DVector<f64> = power.column_mean();
            return make_population(mean.as_slice()).map_err(|_| SpectralError::NotStochastic);
        }
        power = &power * &power;
    }
    Err(SpectralError::NoConvergence(max_iter))
}

/// `|λ₂|`, the modulus of the largest non-stationary eigenvalue.
pub fn convergence_rate(m: &EvolutionMatrix) -> Result<f64, SpectralError> {
    if m.dim() < 2 {
        return Err(SpectralError::TooSmall {
            got: m.dim(),
            min: 2,
        });
    }
    let summary = eigendecompose(m, &ToleranceConfig::default())?;
    Ok(summary.lambda2_modulus.expect("n >= 2"))
}

/// Largest `|L_p · R_q|` over `p ≠ q` after rescaling each pair to `L_p · R_p = 1`.
pub fn check_biorthogonality(
    summary: &SpectralSummary,
    tol: f64,
) -> Result<BiorthogonalityReport, SpectralError> {
    if summary.degenerate {
        return Err(SpectralError::DegenerateSpectrum);
    }
    let n = summary.dim();
    let pair_norms: Vec<Complex64> = (0..n)
        .map(|p| bilinear(&summary.left_vectors[p], &summary.right_vectors[p]))
        .collect();
    let mut max_violation: f64 = 0.0;
    for (p, norm_p) in pair_norms.iter().enumerate() {
        for q in (0..n).filter(|&q| q != p) {
            let v = bilinear(&summary.left_vectors[p], &summary.right_vectors[q]) / norm_p;
            max_violation = max_violation.max(v.norm());
        }
    }
    Ok(BiorthogonalityReport {
        max_violation,
        passed: max_violation < tol,
    })
}
