//! The two-photon amplitude emitted by the crystal and the conditioning step
//! that turns it into a one-photon arm-2 state.

use num_complex::Complex;
use num_traits::{Float, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, TransverseGrid};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Structure {
    Dense,
    /// Only `B[i,i]` may be non-zero.
    Diagonal,
}

/// Biphoton amplitude `B[i,j] ≈ β(x_i, x'_j)`, arm-1 coordinate first,
/// stored densely in row-major order.
#[derive(Clone, Debug)]
pub struct BiphotonField<T: Real> {
    grid: TransverseGrid<T>,
    values: Vec<Complex<T>>,
    structure: Structure,
}

impl<T: Real> BiphotonField<T> {
    /// Wraps a dense `n × n` row-major table.
    pub fn from_dense(grid: &TransverseGrid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        let n = grid.n();
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                actual: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            structure: Structure::Dense,
        })
    }

    /// Separable amplitude `u(x) v(x')`.
    pub fn product(u: &Field<T>, v: &Field<T>) -> Result<Self> {
        u.grid().check_same(v.grid())?;
        let u = u.to_position();
        let v = v.to_position();
        let values = u
            .values()
            .iter()
            .flat_map(|a| v.values().iter().map(move |b| *a * b))
            .collect();
        Self::from_dense(u.grid(), values)
    }

    pub fn grid(&self) -> &TransverseGrid<T> {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.values[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        let n = self.n();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        let n = self.n();
        (0..n).map(|i| self.values[i * n + j]).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.structure == Structure::Diagonal
    }

    /// Forgets the diagonal fast path (for cross-checks).
    pub fn into_dense(mut self) -> Self {
        self.structure = Structure::Dense;
        self
    }

    /// `Σ|B|² Δx²`.
    pub fn norm_sqr(&self) -> T {
        let dx = self.grid.spacing();
        self.values.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr()) * dx * dx
    }

    /// Replaces every column `B[·, j]` by `op(B[·, j])` (arm-1 coordinate).
    pub(crate) fn map_columns(
        &self,
        op: impl Fn(Vec<Complex<T>>) -> Result<Vec<Complex<T>>> + Sync,
    ) -> Result<Self> {
        let n = self.n();
        let columns: Vec<Vec<Complex<T>>> = (0..n)
            .into_par_iter()
            .map(|j| op(self.column(j)))
            .collect::<Result<_>>()?;
        let mut values = vec![Complex::zero(); n * n];
        for (j, col) in columns.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                values[i * n + j] = v;
            }
        }
        Self::from_dense(&self.grid, values)
    }

    /// Replaces every row `B[i, ·]` by `op(B[i, ·])` (arm-2 coordinate).
    pub(crate) fn map_rows(
        &self,
        op: impl Fn(Vec<Complex<T>>) -> Result<Vec<Complex<T>>> + Sync,
    ) -> Result<Self> {
        let n = self.n();
        let rows: Vec<Vec<Complex<T>>> = (0..n)
            .into_par_iter()
            .map(|i| op(self.row(i).to_vec()))
            .collect::<Result<_>>()?;
        Self::from_dense(&self.grid, rows.concat())
    }

    /// Physically scaled two-dimensional transform
    /// `B̃(k,k') = Δx²/(2π) Σ B(x,x') e^{-i(kx + k'x')}`, FFT-ordered in both
    /// indices.
    pub fn to_wavevector(&self) -> Result<Self> {
        let grid = self.grid.clone();
        let to_k = |v: Vec<Complex<T>>| -> Result<Vec<Complex<T>>> {
            Ok(Field::new(&grid, Domain::Position, v)?.to_wavevector().into_values())
        };
        self.map_rows(to_k)?.map_columns(to_k)
    }
}

/// Delta-correlated pair amplitude `β(x,x') = √π δ(x-x') e^{-x'²κ²/2}` with
/// the discrete delta `δ_ij/Δx`.
pub fn make_biphoton_delta_correlated<T: Real>(grid: &TransverseGrid<T>, kappa: T) -> Result<BiphotonField<T>> {
    let min_width = T::lit(2.0) * grid.spacing();
    let max_width = grid.extent() / T::lit(8.0);
    let width = T::one() / kappa;
    if !(kappa > T::zero()) || !(width >= min_width && width <= max_width) {
        return Err(Error::Unresolvable {
            what: "pump width 1/kappa",
            value: width.to_f64_lossy(),
            min: min_width.to_f64_lossy(),
            max: max_width.to_f64_lossy(),
        });
    }
    let n = grid.n();
    let scale = Float::sqrt(T::PI()) / grid.spacing();
    let half_k2 = kappa * kappa / T::lit(2.0);
    let mut values = vec![Complex::zero(); n * n];
    for i in 0..n {
        let x = grid.x(i);
        values[i * n + i] = Complex::new(scale * Float::exp(-x * x * half_k2), T::zero());
    }
    Ok(BiphotonField {
        grid: grid.clone(),
        values,
        structure: Structure::Diagonal,
    })
}

/// Projects the pair onto the retrodicted arm-1 profile:
/// `β₁[j] = Δx Σ_i conj(α₃[i]) B[i,j]`. The result is not normalized.
pub fn condition<T: Real>(b: &BiphotonField<T>, alpha3: &Field<T>) -> Result<Field<T>> {
    b.grid.check_same(alpha3.grid())?;
    let alpha3 = alpha3.to_position();
    let a = alpha3.values();
    let n = b.n();
    let dx = b.grid.spacing();
    let values: Vec<Complex<T>> = match b.structure {
        Structure::Diagonal => (0..n).map(|j| a[j].conj() * b.get(j, j) * dx).collect(),
        Structure::Dense => (0..n)
            .into_par_iter()
            .map(|j| {
                let mut acc = Complex::zero();
                for (i, ai) in a.iter().enumerate() {
                    acc += ai.conj() * b.values[i * n + j];
                }
                acc * dx
            })
            .collect(),
    };
    Field::new(&b.grid, Domain::Position, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    type C = Complex<f64>;

    fn random_values(n: usize, seed: u64) -> Vec<C> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect()
    }

    #[test]
    fn delta_source_is_diagonal_and_symmetric() {
        let g = make_grid(64, 16.0).unwrap();
        let b = make_biphoton_delta_correlated(&g, 1.0).unwrap();
        for i in 0..64 {
            for j in 0..64 {
                assert_eq!(b.get(i, j), b.get(j, i));
                if i != j {
                    assert_eq!(b.get(i, j), C::zero());
                }
            }
        }
        let centre = g.nearest_index(0.0);
        assert!((b.get(centre, centre).re - PI.sqrt() / g.spacing()).abs() < 1e-12);
    }

    #[test]
    fn resolution_bounds() {
        let g = make_grid(64, 16.0).unwrap();
        // 1/kappa must lie in [2Δx, L/8] = [0.5, 2]
        assert!(make_biphoton_delta_correlated(&g, 0.4).is_err());
        assert!(make_biphoton_delta_correlated(&g, 2.5).is_err());
        assert!(make_biphoton_delta_correlated(&g, 0.5).is_ok());
        assert!(make_biphoton_delta_correlated(&g, 2.0).is_ok());
    }

    #[test]
    fn conditioning_the_delta_source() {
        let g = make_grid(256, 16.0).unwrap();
        let kappa = 2.0;
        let b = make_biphoton_delta_correlated(&g, kappa).unwrap();
        let t = Field::from_position_fn(&g, |x| C::new(if x.abs() < 1.0 { 0.9 } else { 0.2 }, 0.1));
        let alpha1 = Field::new(&g, Domain::Position, random_values(256, 4)).unwrap();
        let alpha3 = Field::new(
            &g,
            Domain::Position,
            t.values().iter().zip(alpha1.values()).map(|(a, b)| a * b).collect(),
        )
        .unwrap();
        let beta1 = condition(&b, &alpha3).unwrap();
        for (i, v) in beta1.values().iter().enumerate() {
            let x = g.x(i);
            let expected = PI.sqrt() * t.values()[i].conj() * alpha1.values()[i].conj() * (-x * x * kappa * kappa / 2.0).exp();
            assert!((v - expected).norm() <= 1e-12);
        }
    }

    #[test]
    fn point_profile_sifts_a_row() {
        let g = make_grid(32, 8.0).unwrap();
        let b = BiphotonField::from_dense(&g, random_values(32 * 32, 7)).unwrap();
        let i0 = 20;
        let mut alpha = Field::zeros(&g, Domain::Position);
        alpha.values_mut()[i0] = C::new(1.0 / g.spacing().sqrt(), 0.0);
        let beta = condition(&b, &alpha).unwrap();
        let c = g.spacing().sqrt();
        for j in 0..32 {
            assert!((beta.values()[j] - b.get(i0, j) * c).norm() <= 1e-14);
        }
    }

    #[test]
    fn antilinear_in_profile_linear_in_source() {
        let g = make_grid(64, 8.0).unwrap();
        let b1 = BiphotonField::from_dense(&g, random_values(64 * 64, 1)).unwrap();
        let b2 = BiphotonField::from_dense(&g, random_values(64 * 64, 2)).unwrap();
        let a = Field::new(&g, Domain::Position, random_values(64, 3)).unwrap();
        let c = C::new(0.3, -1.7);
        let lhs = condition(&b1, &a.scaled(c)).unwrap();
        let rhs = condition(&b1, &a).unwrap().scaled(c.conj());
        assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);

        let sum = BiphotonField::from_dense(
            &g,
            b1.values().iter().zip(b2.values()).map(|(x, y)| x + y * c).collect(),
        )
        .unwrap();
        let lhs = condition(&sum, &a).unwrap();
        let r1 = condition(&b1, &a).unwrap();
        let r2 = condition(&b2, &a).unwrap();
        for j in 0..64 {
            let expected = r1.values()[j] + r2.values()[j] * c;
            assert!((lhs.values()[j] - expected).norm() <= 1e-12);
        }
    }

    #[test]
    fn diagonal_fast_path_matches_dense_sum() {
        let g = make_grid(128, 16.0).unwrap();
        let b = make_biphoton_delta_correlated(&g, 1.5).unwrap();
        let a = Field::new(&g, Domain::Position, random_values(128, 9)).unwrap();
        let fast = condition(&b, &a).unwrap();
        let dense = condition(&b.clone().into_dense(), &a).unwrap();
        assert!(fast.max_abs_diff(&dense).unwrap() <= 1e-12);
    }

    #[test]
    fn wavevector_form_of_the_delta_source() {
        let (n, kappa) = (256, 2.0);
        let g = make_grid(n, 16.0).unwrap();
        let dx = g.spacing();
        let b = make_biphoton_delta_correlated(&g, kappa).unwrap();
        let bt = b.to_wavevector().unwrap();
        let nyquist = PI / dx;
        let mut checked = 0;
        for m in (0..n).step_by(7) {
            for mp in (0..n).step_by(11) {
                let s = g.k(m) + g.k(mp);
                // direct double sum; only the diagonal of B is non-zero
                let mut direct = C::zero();
                for i in 0..n {
                    direct += b.get(i, i) * C::from_polar(1.0, -s * g.x(i));
                }
                direct *= dx * dx / (2.0 * PI);
                assert!((bt.get(m, mp) - direct).norm() <= 1e-12);
                if s.abs() <= nyquist {
                    let closed = (1.0 / (2.0 * kappa * kappa)).sqrt() * (-s * s / (2.0 * kappa * kappa)).exp();
                    assert!((bt.get(m, mp) - closed).norm() <= 1e-12, "k+k'={s}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 100);
    }
}
