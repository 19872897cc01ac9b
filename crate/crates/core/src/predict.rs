//! Predictive oracle: evolve the full pair amplitude forward through both
//! arms, tabulate the joint detection density, and recover conditionals and
//! marginals with Bayes' theorem.
//!
//! This is the expensive route the retrodictive pipeline avoids (`O(n³)` for
//! the joint table). It exists as an independent check.

use num_complex::Complex;
use num_traits::{Float, Zero};
use rayon::prelude::*;

use crate::elements::{apply_chain_forward, materialize_detector, DetectorProfile, Element};
use crate::error::{Error, Result};
use crate::grid::{Domain, Field, TransverseGrid};
use crate::retrodict::ConditionalDistribution;
use crate::scalar::Real;
use crate::source::BiphotonField;

/// Joint density `P(x₁, x₂)`, arm-1 index first, with `Σ P Δx² = 1`.
#[derive(Clone, Debug)]
pub struct JointDistribution<T: Real> {
    pub grid: TransverseGrid<T>,
    pub density: Vec<T>,
    /// Arm-1 detector family; row `i` uses this profile centred on `x_i`.
    pub detector1: DetectorProfile<T>,
}

impl<T: Real> JointDistribution<T> {
    pub fn n(&self) -> usize {
        self.grid.n()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.density[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let n = self.n();
        &self.density[i * n..(i + 1) * n]
    }

    /// `Σ P Δx²`.
    pub fn total(&self) -> T {
        let dx = self.grid.spacing();
        self.density.iter().fold(T::zero(), |a, &p| a + p) * dx * dx
    }

    /// Arm-1 marginal `P(x₁) = Σ_{x₂} P(x₁, x₂) Δx`.
    pub fn marginal_arm1(&self) -> Vec<T> {
        let dx = self.grid.spacing();
        (0..self.n())
            .map(|i| self.row(i).iter().fold(T::zero(), |a, &p| a + p) * dx)
            .collect()
    }

    /// Mutual information (bits) between `x₁` and `x₂` after pooling each
    /// axis into `bins` equal groups of samples.
    pub fn mutual_information_bits(&self, bins: usize) -> T {
        let n = self.n();
        let bins = bins.clamp(1, n);
        let bin_of = |i: usize| i * bins / n;
        let mut table = vec![T::zero(); bins * bins];
        for i in 0..n {
            for j in 0..n {
                table[bin_of(i) * bins + bin_of(j)] += self.get(i, j);
            }
        }
        let total = table.iter().fold(T::zero(), |a, &p| a + p);
        table.iter_mut().for_each(|p| *p /= total);
        let mut row = vec![T::zero(); bins];
        let mut col = vec![T::zero(); bins];
        for a in 0..bins {
            for b in 0..bins {
                row[a] += table[a * bins + b];
                col[b] += table[a * bins + b];
            }
        }
        let mut mi = T::zero();
        for a in 0..bins {
            for b in 0..bins {
                let p = table[a * bins + b];
                if p > T::zero() {
                    mi += p * Float::log2(p / (row[a] * col[b]));
                }
            }
        }
        Float::max(mi, T::zero())
    }
}

/// Forward-evolves both photons: `arm1` acts on the first coordinate,
/// `arm2` on the second. Chains are in physical (crystal-first) order.
pub fn evolve_joint<T: Real>(
    b: &BiphotonField<T>,
    arm1: &[Element<T>],
    arm2: &[Element<T>],
) -> Result<BiphotonField<T>> {
    let grid = b.grid().clone();
    for e in arm1.iter().chain(arm2) {
        e.validate(&grid)?;
    }
    let chain = |elements: &[Element<T>]| {
        let grid = grid.clone();
        let elements = elements.to_vec();
        move |v: Vec<Complex<T>>| -> Result<Vec<Complex<T>>> {
            let f = Field::new(&grid, Domain::Position, v)?;
            Ok(apply_chain_forward(&elements, &f)?.to_position().into_values())
        }
    };
    let mut out = b.clone().into_dense();
    if !arm1.is_empty() {
        out = out.map_columns(chain(arm1))?;
    }
    if !arm2.is_empty() {
        out = out.map_rows(chain(arm2))?;
    }
    Ok(out)
}

/// Tabulates `P(x₁, x₂) ∝ |Δx Σ_x conj(α_{x₁}(x)) Ψ(x, x₂)|²`, with one
/// arm-1 detector mode per grid centre and point detection in arm 2.
pub fn joint_distribution<T: Real>(
    psi: &BiphotonField<T>,
    detector1: DetectorProfile<T>,
) -> Result<JointDistribution<T>> {
    let grid = psi.grid().clone();
    let n = grid.n();
    let dx = grid.spacing();
    detector1.check_resolvable(&grid)?;

    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<T>> {
            let mode = materialize_detector(&detector1.centered_at(grid.x(i)), &grid)?;
            let weights: Vec<(usize, Complex<T>)> = mode
                .values()
                .iter()
                .enumerate()
                .filter(|(_, a)| !a.is_zero())
                .map(|(x, a)| (x, a.conj()))
                .collect();
            let mut amp = vec![Complex::<T>::zero(); n];
            for (x, a) in weights {
                for (acc, v) in amp.iter_mut().zip(psi.row(x)) {
                    *acc += a * v;
                }
            }
            Ok(amp.into_iter().map(|v| (v * dx).norm_sqr()).collect())
        })
        .collect::<Result<_>>()?;

    let mut density = rows.concat();
    let total = density.iter().fold(T::zero(), |a, &p| a + p) * dx * dx;
    if !(total > T::dark_floor()) || !total.is_finite() {
        return Err(Error::DarkConditional {
            x1: f64::NAN,
            weight: total.to_f64_lossy(),
        });
    }
    density.iter_mut().for_each(|p| *p /= total);
    Ok(JointDistribution {
        grid,
        density,
        detector1,
    })
}

/// Bayes' theorem on the joint table: `P(x₂|x₁) = P(x₁,x₂)/P(x₁)`, using the
/// row whose centre is nearest to `x1`.
pub fn conditional_from_joint<T: Real>(j: &JointDistribution<T>, x1: T) -> Result<ConditionalDistribution<T>> {
    let i = j.grid.nearest_index(x1);
    ConditionalDistribution::from_weights(&j.grid, j.row(i).to_vec(), Some(x1))
}

/// Arm-2 marginal `P(x₂) = Σ_{x₁} P(x₁, x₂) Δx`, renormalized.
pub fn marginal_arm2<T: Real>(j: &JointDistribution<T>) -> ConditionalDistribution<T> {
    let n = j.n();
    let dx = j.grid.spacing();
    let mut weights = vec![T::zero(); n];
    for i in 0..n {
        for (w, p) in weights.iter_mut().zip(j.row(i)) {
            *w += *p * dx;
        }
    }
    ConditionalDistribution::from_weights(&j.grid, weights, None)
        .expect("a normalized joint has a non-zero marginal")
}
