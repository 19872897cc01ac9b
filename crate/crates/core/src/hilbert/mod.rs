//! Finite-dimensional predictive and retrodictive conditional probabilities.
//!
//! A preparer picks state `ρ_i` with prior `P(i)`, the system evolves by `U`,
//! and a measurement with elements `Π_j` records outcome `j`. The predictive
//! conditional is `P(j|i) = Tr(U ρ_i U† Π_j)`; the retrodictive conditional
//! evolves the normalized outcome state `Π_j / Tr Π_j` backward and weighs it
//! against the prepared ensemble. Both must agree with Bayes' theorem.

use nalgebra::{DMatrix, RealField};
use num_complex::Complex;
use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub mod random;

/// Scalar usable for the matrix code: a [`Real`] that nalgebra can
/// decompose (`f32`, `f64`).
pub trait MatrixReal: Real + RealField {}
impl<T: Real + RealField> MatrixReal for T {}

pub type CMatrix<T> = DMatrix<Complex<T>>;

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const COMPLETENESS_TOL: f64 = 1e-10;
const UNITARITY_TOL: f64 = 1e-10;
const PRIOR_TOL: f64 = 1e-12;
const CLIP_TOL: f64 = 1e-12;

/// Tolerance stated for `f64`, floored at a few hundred ulps for narrower
/// scalars.
fn tol<T: MatrixReal>(stated: f64) -> T {
    Float::max(T::lit(stated), T::epsilon() * T::lit(256.0))
}

fn max_abs<T: MatrixReal>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| Float::max(acc, z.norm()))
}

fn check_square<T: MatrixReal>(m: &CMatrix<T>, what: &str) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::InvalidOperator(format!(
            "{what} must be a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Hermitian to `1e-12` and smallest eigenvalue `≥ -1e-10`.
fn check_hermitian_psd<T: MatrixReal>(m: &CMatrix<T>, what: &str) -> Result<()> {
    let skew = max_abs(&(m - m.adjoint()));
    if !(skew <= tol::<T>(HERMITIAN_TOL)) {
        return Err(Error::InvalidOperator(format!(
            "{what} is not Hermitian (max |M - M†| = {skew:e})"
        )));
    }
    let eigenvalues = m.clone().symmetric_eigenvalues();
    let min = eigenvalues.iter().fold(T::infinity(), |acc, v| Float::min(acc, *v));
    if !(min >= -tol::<T>(PSD_TOL)) {
        return Err(Error::InvalidOperator(format!(
            "{what} is not positive semidefinite (min eigenvalue {min:e})"
        )));
    }
    Ok(())
}

/// `Tr(AB)` without forming the product.
fn trace_of_product<T: MatrixReal>(a: &CMatrix<T>, b: &CMatrix<T>) -> Complex<T> {
    let d = a.nrows();
    let mut acc = Complex::zero();
    for r in 0..d {
        for c in 0..d {
            acc += a[(r, c)] * b[(c, r)];
        }
    }
    acc
}

fn trace<T: MatrixReal>(m: &CMatrix<T>) -> Complex<T> {
    (0..m.nrows()).fold(Complex::zero(), |acc, i| acc + m[(i, i)])
}

/// Clamps to `[0, 1]` after allowing `-1e-12` of round-off.
fn clip_probability<T: MatrixReal>(p: T) -> Result<T> {
    if !(p >= -tol::<T>(CLIP_TOL)) || !(p <= T::one() + tol::<T>(CLIP_TOL)) {
        return Err(Error::InvalidOperator(format!("probability {p:e} outside [0, 1]")));
    }
    Ok(Float::min(Float::max(p, T::zero()), T::one()))
}

/// Unit-trace, Hermitian, positive semidefinite state `ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator<T: MatrixReal> {
    matrix: CMatrix<T>,
}

impl<T: MatrixReal> DensityOperator<T> {
    pub fn new(matrix: CMatrix<T>) -> Result<Self> {
        check_square(&matrix, "density operator")?;
        check_hermitian_psd(&matrix, "density operator")?;
        let tr = trace(&matrix);
        if !(Float::abs(tr.re - T::one()) <= tol::<T>(TRACE_TOL)) {
            return Err(Error::InvalidOperator(format!(
                "density operator trace is {} (must be 1)",
                tr.re
            )));
        }
        Ok(Self { matrix })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized, non-zero) vector.
    pub fn pure(psi: &[Complex<T>]) -> Result<Self> {
        let norm = psi.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if !(norm > T::zero()) {
            return Err(Error::InvalidOperator("pure state from a zero vector".into()));
        }
        let d = psi.len();
        let m = CMatrix::from_fn(d, d, |r, c| psi[r] * psi[c].conj() / norm);
        Self::new(m)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }
}

/// Probability operator measure `{Π_j}`: positive elements resolving the
/// identity.
#[derive(Clone, Debug, PartialEq)]
pub struct PomSet<T: MatrixReal> {
    elements: Vec<CMatrix<T>>,
}

impl<T: MatrixReal> PomSet<T> {
    pub fn new(elements: Vec<CMatrix<T>>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidOperator("POM needs at least one element".into()))?;
        let d = check_square(first, "POM element")?;
        let mut sum = CMatrix::zeros(d, d);
        for (j, e) in elements.iter().enumerate() {
            check_dim(d, check_square(e, "POM element")?)?;
            check_hermitian_psd(e, &format!("POM element {j}"))?;
            sum += e;
        }
        let defect = max_abs(&(sum - CMatrix::identity(d, d)));
        if !(defect <= tol::<T>(COMPLETENESS_TOL)) {
            return Err(Error::InvalidOperator(format!(
                "POM elements do not sum to the identity (max deviation {defect:e})"
            )));
        }
        Ok(Self { elements })
    }

    /// Rank-one projectors onto the columns of `basis` (a unitary).
    pub fn projective(basis: &CMatrix<T>) -> Result<Self> {
        let d = check_square(basis, "measurement basis")?;
        let elements = (0..d)
            .map(|k| {
                let v = basis.column(k);
                v * v.adjoint()
            })
            .collect();
        Self::new(elements)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix<T>] {
        &self.elements
    }
}

/// Prepared states with their prior probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble<T: MatrixReal> {
    priors: Vec<T>,
    states: Vec<DensityOperator<T>>,
}

impl<T: MatrixReal> Ensemble<T> {
    pub fn new(priors: Vec<T>, states: Vec<DensityOperator<T>>) -> Result<Self> {
        check_dim(priors.len(), states.len())?;
        let first = states
            .first()
            .ok_or_else(|| Error::InvalidOperator("ensemble needs at least one state".into()))?;
        for s in &states {
            check_dim(first.dim(), s.dim())?;
        }
        if let Some(p) = priors.iter().find(|p| !(**p >= T::zero())) {
            return Err(Error::InvalidOperator(format!("negative prior {p}")));
        }
        let total = priors.iter().fold(T::zero(), |acc, p| acc + *p);
        if !(Float::abs(total - T::one()) <= tol::<T>(PRIOR_TOL)) {
            return Err(Error::InvalidOperator(format!("priors sum to {total}, not 1")));
        }
        Ok(Self { priors, states })
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn priors(&self) -> &[T] {
        &self.priors
    }

    pub fn states(&self) -> &[DensityOperator<T>] {
        &self.states
    }

    /// Reorders members: entry `k` of the result is member `order[k]`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_dim(self.len(), order.len())?;
        let mut seen = vec![false; self.len()];
        for &i in order {
            if i >= self.len() {
                return Err(Error::IndexOutOfRange { index: i, len: self.len() });
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidOperator("ordering is not a permutation".into()));
        }
        Self::new(
            order.iter().map(|&i| self.priors[i]).collect(),
            order.iter().map(|&i| self.states[i].clone()).collect(),
        )
    }
}

/// Unitary `U(τ)` between preparation and measurement. `elapsed` is carried
/// for reporting only.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryEvolution<T: MatrixReal> {
    matrix: CMatrix<T>,
    elapsed: T,
}

impl<T: MatrixReal> UnitaryEvolution<T> {
    pub fn new(matrix: CMatrix<T>, elapsed: T) -> Result<Self> {
        let d = check_square(&matrix, "evolution")?;
        let defect = max_abs(&(matrix.adjoint() * &matrix - CMatrix::identity(d, d)));
        if !(defect <= tol::<T>(UNITARITY_TOL)) {
            return Err(Error::InvalidOperator(format!(
                "evolution is not unitary (max |U†U - I| = {defect:e})"
            )));
        }
        Ok(Self { matrix, elapsed })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim, dim),
            elapsed: T::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn elapsed(&self) -> T {
        self.elapsed
    }
}

/// `P(j|i) = Tr(U ρ U† Π_j)` for every outcome `j`.
pub fn predictive_conditional<T: MatrixReal>(
    rho: &DensityOperator<T>,
    pom: &PomSet<T>,
    u: &UnitaryEvolution<T>,
) -> Result<Vec<T>> {
    check_dim(rho.dim(), pom.dim())?;
    check_dim(rho.dim(), u.dim())?;
    let evolved = &u.matrix * &rho.matrix * u.matrix.adjoint();
    pom.elements
        .iter()
        .map(|pi| clip_probability(trace_of_product(&evolved, pi).re))
        .collect()
}

/// Forward table `forward[i][j] = P(j|i)` over an ensemble.
pub fn predictive_matrix<T: MatrixReal>(
    ens: &Ensemble<T>,
    pom: &PomSet<T>,
    u: &UnitaryEvolution<T>,
) -> Result<Vec<Vec<T>>> {
    ens.states
        .iter()
        .map(|rho| predictive_conditional(rho, pom, u))
        .collect()
}

/// `P(i|j)` from the retrodicted state `U† (Π_j / Tr Π_j) U` weighed against
/// the prepared ensemble.
pub fn retrodictive_conditional<T: MatrixReal>(
    ens: &Ensemble<T>,
    pom: &PomSet<T>,
    j: usize,
    u: &UnitaryEvolution<T>,
) -> Result<Vec<T>> {
    check_dim(ens.dim(), pom.dim())?;
    check_dim(ens.dim(), u.dim())?;
    let pi = pom
        .elements
        .get(j)
        .ok_or(Error::IndexOutOfRange { index: j, len: pom.len() })?;
    let norm = trace(pi).re;
    if !(norm > T::dark_floor()) {
        return Err(Error::ImpossibleOutcome { outcome: j });
    }
    let retro = u.matrix.adjoint() * pi.unscale(norm) * &u.matrix;
    let weights: Vec<T> = ens
        .priors
        .iter()
        .zip(&ens.states)
        .map(|(p, rho)| Float::max(*p * trace_of_product(&rho.matrix, &retro).re, T::zero()))
        .collect();
    let total = weights.iter().fold(T::zero(), |acc, w| acc + *w);
    if !(total > T::dark_floor()) {
        return Err(Error::ImpossibleOutcome { outcome: j });
    }
    weights.into_iter().map(|w| clip_probability(w / total)).collect()
}

/// Column `j` of Bayes' inversion: `P(i|j) = P(i) P(j|i) / Σ_k P(k) P(j|k)`.
pub fn bayes_column<T: MatrixReal>(priors: &[T], forward: &[Vec<T>], j: usize) -> Result<Vec<T>> {
    check_dim(priors.len(), forward.len())?;
    let outcomes = forward.first().map_or(0, Vec::len);
    for row in forward {
        check_dim(outcomes, row.len())?;
    }
    if j >= outcomes {
        return Err(Error::IndexOutOfRange { index: j, len: outcomes });
    }
    let joint: Vec<T> = priors.iter().zip(forward).map(|(p, row)| *p * row[j]).collect();
    let total = joint.iter().fold(T::zero(), |acc, w| acc + *w);
    if !(total > T::dark_floor()) {
        return Err(Error::ImpossibleOutcome { outcome: j });
    }
    Ok(joint.into_iter().map(|w| w / total).collect())
}

/// Full inversion, `result[i][j] = P(i|j)`. Fails on the first outcome with
/// zero total probability.
pub fn bayes_invert<T: MatrixReal>(priors: &[T], forward: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    let outcomes = forward.first().map_or(0, Vec::len);
    let columns: Vec<Vec<T>> = (0..outcomes)
        .map(|j| bayes_column(priors, forward, j))
        .collect::<Result<_>>()?;
    Ok((0..priors.len())
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect())
}

/// Largest elementwise gap between the retrodictive route and Bayes applied
/// to the predictive route, over every attainable outcome.
pub fn equivalence_gap<T: MatrixReal>(
    ens: &Ensemble<T>,
    pom: &PomSet<T>,
    u: &UnitaryEvolution<T>,
) -> Result<T> {
    let forward = predictive_matrix(ens, pom, u)?;
    let mut gap = T::zero();
    for j in 0..pom.len() {
        let bayes = bayes_column(&ens.priors, &forward, j)?;
        let retro = retrodictive_conditional(ens, pom, j, u)?;
        for (a, b) in bayes.iter().zip(&retro) {
            gap = Float::max(gap, Float::abs(*a - *b));
        }
    }
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::random::*;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    /// Independent triple-loop evaluation of `Tr(U ρ U† Π)`.
    fn brute_trace(u: &CMatrix<f64>, rho: &CMatrix<f64>, pi: &CMatrix<f64>) -> f64 {
        let d = u.nrows();
        let mut acc = C::zero();
        for a in 0..d {
            for b in 0..d {
                for cc in 0..d {
                    for e in 0..d {
                        // (U ρ U†)_{a e} Π_{e a}
                        acc += u[(a, b)] * rho[(b, cc)] * u[(e, cc)].conj() * pi[(e, a)];
                    }
                }
            }
        }
        acc.re
    }

    fn basis_state(d: usize, k: usize) -> Vec<C> {
        (0..d).map(|i| c(if i == k { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn validation_rejects_bad_operators() {
        let not_unit = CMatrix::<f64>::identity(2, 2);
        assert!(DensityOperator::new(not_unit).is_err());
        let not_psd = CMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(DensityOperator::new(not_psd).is_err());
        let not_herm = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.3), c(0.0), c(0.5)]);
        assert!(DensityOperator::new(not_herm).is_err());
        let incomplete = vec![CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)])];
        assert!(PomSet::new(incomplete).is_err());
        let not_unitary = CMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(UnitaryEvolution::new(not_unitary, 0.0).is_err());
        let rho = DensityOperator::pure(&basis_state(2, 0)).unwrap();
        assert!(Ensemble::new(vec![0.5, 0.6], vec![rho.clone(), rho.clone()]).is_err());
        assert!(Ensemble::new(vec![1.5, -0.5], vec![rho.clone(), rho]).is_err());
    }

    #[test]
    fn identity_evolution_projective_same_basis() {
        let d = 3;
        let rho = DensityOperator::pure(&basis_state(d, 0)).unwrap();
        let pom = PomSet::projective(&CMatrix::identity(d, d)).unwrap();
        let p = predictive_conditional(&rho, &pom, &UnitaryEvolution::identity(d)).unwrap();
        assert_eq!(p, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn trivial_pom_is_certain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density::<f64>(4, &mut rng);
        let pom = PomSet::new(vec![CMatrix::identity(4, 4)]).unwrap();
        let p = predictive_conditional(&rho, &pom, &haar_unitary(4, &mut rng)).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0] - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn predictive_matches_brute_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let rho = random_density::<f64>(3, &mut rng);
            let pom = random_pom(3, 2, &mut rng);
            let u = haar_unitary(3, &mut rng);
            let p = predictive_conditional(&rho, &pom, &u).unwrap();
            let total: f64 = p.iter().sum();
            assert!((total - 1.0).abs() <= 1e-10);
            for (j, pi) in pom.elements().iter().enumerate() {
                assert!((p[j] - brute_trace(u.matrix(), rho.matrix(), pi)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn orthonormal_ensemble_retrodicts_with_certainty() {
        let d = 4;
        let states = (0..d).map(|k| DensityOperator::pure(&basis_state(d, k)).unwrap()).collect();
        let ens = Ensemble::new(vec![0.25; d], states).unwrap();
        let pom = PomSet::projective(&CMatrix::identity(d, d)).unwrap();
        for j in 0..d {
            let p = retrodictive_conditional(&ens, &pom, j, &UnitaryEvolution::identity(d)).unwrap();
            for (i, v) in p.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn single_state_ensemble() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ens = Ensemble::new(vec![1.0], vec![random_density::<f64>(3, &mut rng)]).unwrap();
        let pom = random_pom(3, 3, &mut rng);
        let u = haar_unitary(3, &mut rng);
        for j in 0..3 {
            assert_eq!(retrodictive_conditional(&ens, &pom, j, &u).unwrap(), vec![1.0]);
        }
    }

    #[test]
    fn retrodiction_equals_bayes_dim4() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ens = random_ensemble::<f64>(4, 3, &mut rng);
        let pom = random_pom(4, 4, &mut rng);
        let u = haar_unitary(4, &mut rng);
        let forward = predictive_matrix(&ens, &pom, &u).unwrap();
        let inverted = bayes_invert(ens.priors(), &forward).unwrap();
        for j in 0..4 {
            let retro = retrodictive_conditional(&ens, &pom, j, &u).unwrap();
            for i in 0..3 {
                assert!((retro[i] - inverted[i][j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn equivalence_over_many_seeded_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut worst = 0.0f64;
        for _ in 0..150 {
            let d = rng.random_range(2..=6);
            let members = rng.random_range(1..=5);
            let outcomes = rng.random_range(1..=d);
            let ens = random_ensemble::<f64>(d, members, &mut rng);
            let pom = random_pom(d, outcomes, &mut rng);
            let u = haar_unitary(d, &mut rng);
            worst = worst.max(equivalence_gap(&ens, &pom, &u).unwrap());
        }
        assert!(worst <= 1e-12, "worst gap {worst:e}");
    }

    #[test]
    fn bayes_permutation_and_uninformative() {
        // forward: i -> j = (i + 1) mod 3
        let forward = vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]];
        let inv = bayes_invert(&[1.0 / 3.0; 3], &forward).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                // the inverse of a permutation channel is its transpose map
                assert_eq!(inv[i][j], forward[i][j]);
            }
        }
        let priors = [0.2, 0.5, 0.3];
        let flat = vec![vec![0.1, 0.9]; 3];
        let inv = bayes_invert(&priors, &flat).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert!((inv[i][j] - priors[i]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn bayes_columns_normalized() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let priors: Vec<f64> = {
            let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.01..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|p| p / s).collect()
        };
        let forward: Vec<Vec<f64>> = (0..5)
            .map(|_| {
                let raw: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.into_iter().map(|p| p / s).collect()
            })
            .collect();
        let inv = bayes_invert(&priors, &forward).unwrap();
        for j in 0..5 {
            let s: f64 = (0..5).map(|i| inv[i][j]).sum();
            assert!((s - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn impossible_outcomes_are_errors_not_nan() {
        let d = 2;
        let ens = Ensemble::new(vec![1.0], vec![DensityOperator::pure(&basis_state(d, 0)).unwrap()]).unwrap();
        let pom = PomSet::projective(&CMatrix::identity(d, d)).unwrap();
        let u = UnitaryEvolution::identity(d);
        assert!(matches!(
            retrodictive_conditional(&ens, &pom, 1, &u),
            Err(Error::ImpossibleOutcome { outcome: 1 })
        ));
        let forward = predictive_matrix(&ens, &pom, &u).unwrap();
        assert!(matches!(bayes_column(ens.priors(), &forward, 1), Err(Error::ImpossibleOutcome { outcome: 1 })));
        assert!(bayes_invert(ens.priors(), &forward).is_err());
        // a zero POM element is impossible regardless of the ensemble
        let zero_elem = PomSet::new(vec![CMatrix::identity(d, d), CMatrix::zeros(d, d)]).unwrap();
        assert!(matches!(
            retrodictive_conditional(&ens, &zero_elem, 1, &u),
            Err(Error::ImpossibleOutcome { outcome: 1 })
        ));
    }

    #[test]
    fn element_scale_cancels() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let ens = random_ensemble::<f64>(3, 4, &mut rng);
        let pom = random_pom(3, 3, &mut rng);
        let u = haar_unitary(3, &mut rng);
        for j in 0..3 {
            let base = retrodictive_conditional(&ens, &pom, j, &u).unwrap();
            for scale in [0.3, 0.9] {
                // rescale Π_j and give the deficit to a spare outcome so the set stays complete
                let mut elements = pom.elements().to_vec();
                let pi = elements[j].clone();
                elements[j] = pi.scale(scale);
                elements.push(pi.scale(1.0 - scale));
                let scaled = PomSet::new(elements).unwrap();
                let p = retrodictive_conditional(&ens, &scaled, j, &u).unwrap();
                for (a, b) in base.iter().zip(&p) {
                    assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn relabeling_permutes_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ens = random_ensemble::<f64>(4, 4, &mut rng);
        let pom = random_pom(4, 3, &mut rng);
        let u = haar_unitary(4, &mut rng);
        let order = [2, 0, 3, 1];
        let permuted = ens.permuted(&order).unwrap();
        for j in 0..3 {
            let p = retrodictive_conditional(&ens, &pom, j, &u).unwrap();
            let q = retrodictive_conditional(&permuted, &pom, j, &u).unwrap();
            for (k, &i) in order.iter().enumerate() {
                assert!((q[k] - p[i]).abs() <= 1e-14);
            }
        }
        assert!(ens.permuted(&[0, 0, 1, 2]).is_err());
    }

    #[test]
    fn single_precision_agrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ens = random_ensemble::<f32>(3, 3, &mut rng);
        let pom = random_pom::<f32>(3, 2, &mut rng);
        let u = haar_unitary::<f32>(3, &mut rng);
        assert!(equivalence_gap(&ens, &pom, &u).unwrap() <= 1e-5);
    }

    #[test]
    fn dimension_mismatch() {
        let rho = DensityOperator::<f64>::pure(&basis_state(2, 0)).unwrap();
        let pom = PomSet::projective(&CMatrix::identity(3, 3)).unwrap();
        assert!(matches!(
            predictive_conditional(&rho, &pom, &UnitaryEvolution::identity(2)),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
