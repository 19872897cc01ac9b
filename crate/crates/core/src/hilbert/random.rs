//! Seeded random instances for the equivalence checks.

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{CMatrix, DensityOperator, Ensemble, MatrixReal, PomSet, UnitaryEvolution};

fn ginibre<T: MatrixReal, R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix<T> {
    CMatrix::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex::new(T::lit(re), T::lit(im))
    })
}

/// `G G† / Tr(G G†)` with `G` complex Ginibre: full rank almost surely.
pub fn random_density<T: MatrixReal>(d: usize, rng: &mut (impl Rng + ?Sized)) -> DensityOperator<T> {
    let g = ginibre::<T, _>(d, rng);
    let w = &g * g.adjoint();
    let tr = (0..d).fold(T::zero(), |acc, i| acc + w[(i, i)].re);
    let mut m = w.unscale(tr);
    // Force exact Hermiticity against round-off in the product.
    m = (&m + m.adjoint()).unscale(T::lit(2.0));
    DensityOperator::new(m).expect("Wishart matrix is a valid state")
}

/// Haar-distributed unitary: QR of a Ginibre matrix with the phases of
/// `R`'s diagonal absorbed into `Q`.
pub fn haar_unitary<T: MatrixReal>(d: usize, rng: &mut (impl Rng + ?Sized)) -> UnitaryEvolution<T> {
    let qr = ginibre::<T, _>(d, rng).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = rkk / Complex::new(rkk.norm(), T::zero());
        for i in 0..d {
            q[(i, k)] *= phase;
        }
    }
    UnitaryEvolution::new(q, T::zero()).expect("QR factor is unitary")
}

/// Projectors onto a Haar-random basis, grouped into `outcomes` non-empty
/// coarse-grained elements.
pub fn random_pom<T: MatrixReal>(d: usize, outcomes: usize, rng: &mut (impl Rng + ?Sized)) -> PomSet<T> {
    assert!((1..=d).contains(&outcomes), "need 1 <= outcomes <= d");
    let basis = haar_unitary::<T>(d, rng);
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut group = vec![0; d];
    for (slot, &k) in order.iter().enumerate() {
        group[k] = if slot < outcomes { slot } else { rng.random_range(0..outcomes) };
    }
    let mut elements = vec![CMatrix::zeros(d, d); outcomes];
    for k in 0..d {
        let v = basis.matrix().column(k);
        elements[group[k]] += v * v.adjoint();
    }
    for e in &mut elements {
        *e = (&*e + e.adjoint()).unscale(T::lit(2.0));
    }
    PomSet::new(elements).expect("coarse-grained projectors resolve the identity")
}

/// `members` Wishart states with strictly positive random priors.
pub fn random_ensemble<T: MatrixReal>(d: usize, members: usize, rng: &mut (impl Rng + ?Sized)) -> Ensemble<T> {
    let raw: Vec<f64> = (0..members).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut priors: Vec<T> = raw.iter().map(|p| T::lit(p / total)).collect();
    // Put the rounding residue on the last prior so the sum is exact to the ulp.
    let partial = priors[..members - 1].iter().fold(T::zero(), |acc, p| acc + *p);
    priors[members - 1] = T::one() - partial;
    let states = (0..members).map(|_| random_density(d, rng)).collect();
    Ensemble::new(priors, states).expect("random ensemble is valid")
}
