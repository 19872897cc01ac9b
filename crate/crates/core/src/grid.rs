//! Sampled transverse coordinates, complex fields, and the transforms
//! between position and transverse-wavevector representations.
//!
//! Positions are centred: `x_i = (i - n/2)·Δx`, so `x = 0` is sample `n/2`.
//! Wavevectors are stored in FFT-natural order (`k = 0` first); the
//! `*_monotone` accessors return ascending-k views.
//!
//! Boundary conditions are periodic. Callers are expected to keep amplitude
//! away from the window edges; [`edge_leakage`] measures how well they do.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{Float, Zero};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Fraction of the window (on each side) counted as "edge" by [`edge_leakage`].
pub const EDGE_BAND: f64 = 0.1;

/// Default ceiling on [`edge_leakage`] enforced by the imaging pipeline.
pub const EDGE_LEAKAGE_LIMIT: f64 = 1e-6;

struct Plans<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

/// Uniformly sampled 1-D transverse window shared by every field.
#[derive(Clone)]
pub struct TransverseGrid<T: Real> {
    n: usize,
    extent: T,
    plans: Arc<Plans<T>>,
}

impl<T: Real> fmt::Debug for TransverseGrid<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransverseGrid")
            .field("n", &self.n)
            .field("extent", &self.extent)
            .finish()
    }
}

impl<T: Real> PartialEq for TransverseGrid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.extent == other.extent
    }
}

/// Builds a grid of `n` points spanning a window of length `extent`.
pub fn make_grid<T: Real>(n: usize, extent: T) -> Result<TransverseGrid<T>> {
    TransverseGrid::new(n, extent)
}

impl<T: Real> TransverseGrid<T> {
    pub fn new(n: usize, extent: T) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGridSize { n });
        }
        if !(extent > T::zero()) || !extent.is_finite() {
            return Err(Error::InvalidExtent {
                extent: extent.to_f64_lossy(),
            });
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(Self {
            n,
            extent,
            plans: Arc::new(plans),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Window length `L`.
    pub fn extent(&self) -> T {
        self.extent
    }

    /// Sample spacing `Δx = L/n`.
    pub fn spacing(&self) -> T {
        self.extent / T::lit(self.n as f64)
    }

    /// Wavevector spacing `Δk = 2π/L`.
    pub fn k_spacing(&self) -> T {
        T::TAU() / self.extent
    }

    /// Position of sample `i`.
    pub fn x(&self, i: usize) -> T {
        T::lit(i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn positions(&self) -> Vec<T> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Signed frequency index of FFT bin `m` (`-n/2..n/2`).
    pub fn signed_index(&self, m: usize) -> isize {
        if m < self.n / 2 {
            m as isize
        } else {
            m as isize - self.n as isize
        }
    }

    /// Wavevector of FFT bin `m`.
    pub fn k(&self, m: usize) -> T {
        T::lit(self.signed_index(m) as f64) * self.k_spacing()
    }

    /// Wavevectors in FFT-natural order.
    pub fn k_values(&self) -> Vec<T> {
        (0..self.n).map(|m| self.k(m)).collect()
    }

    /// Wavevectors in ascending order.
    pub fn k_values_monotone(&self) -> Vec<T> {
        let mut ks = self.k_values();
        ks.rotate_left(self.n / 2);
        ks
    }

    /// Index of the grid point nearest to `x`, with periodic wrap.
    pub fn nearest_index(&self, x: T) -> usize {
        let offset = Float::round(x / self.spacing()).to_f64_lossy() as i64;
        let n = self.n as i64;
        (offset + n / 2).rem_euclid(n) as usize
    }

    /// Displacement `x - centre` folded into `[-L/2, L/2)`.
    pub fn wrapped_offset(&self, x: T, centre: T) -> T {
        let l = self.extent;
        let half = l / T::lit(2.0);
        let mut d = x - centre;
        d = d - Float::floor((d + half) / l) * l;
        d
    }

    /// Ensures two fields can be combined.
    pub fn check_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left_n: self.n,
                left_extent: self.extent.to_f64_lossy(),
                right_n: other.n,
                right_extent: other.extent.to_f64_lossy(),
            })
        }
    }

    /// Unnormalized forward FFT (`e^{-2πi mj/n}`) in place.
    pub fn fft_in_place(&self, buffer: &mut [Complex<T>]) {
        debug_assert_eq!(buffer.len(), self.n);
        self.plans.forward.process(buffer);
    }

    /// Unnormalized inverse FFT (`e^{+2πi mj/n}`) in place.
    pub fn ifft_in_place(&self, buffer: &mut [Complex<T>]) {
        debug_assert_eq!(buffer.len(), self.n);
        self.plans.inverse.process(buffer);
    }
}

/// Representation a [`Field`]'s samples are expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Samples `f(x_i)` at the grid positions.
    Position,
    /// Samples `f̃(k_m)` in FFT-natural order, with
    /// `f̃(k) = Δx/√(2π) · Σ f(x) e^{-ikx}`.
    Wavevector,
}

/// Complex one-photon transverse amplitude on a grid.
///
/// The same physical state can be held in either [`Domain`]; norms and inner
/// products are weighted by `Δx` or `Δk` accordingly, so they do not depend
/// on the representation.
#[derive(Clone, Debug)]
pub struct Field<T: Real> {
    grid: TransverseGrid<T>,
    domain: Domain,
    values: Vec<Complex<T>>,
}

impl<T: Real> Field<T> {
    pub fn new(grid: &TransverseGrid<T>, domain: Domain, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                actual: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            domain,
            values,
        })
    }

    pub fn zeros(grid: &TransverseGrid<T>, domain: Domain) -> Self {
        Self {
            grid: grid.clone(),
            domain,
            values: vec![Complex::zero(); grid.n()],
        }
    }

    /// Samples `f(x)` at every grid position.
    pub fn from_position_fn(grid: &TransverseGrid<T>, f: impl Fn(T) -> Complex<T>) -> Self {
        let values = (0..grid.n()).map(|i| f(grid.x(i))).collect();
        Self {
            grid: grid.clone(),
            domain: Domain::Position,
            values,
        }
    }

    /// Samples `f̃(k)` at every grid wavevector (stored in FFT order).
    pub fn from_wavevector_fn(grid: &TransverseGrid<T>, f: impl Fn(T) -> Complex<T>) -> Self {
        let values = (0..grid.n()).map(|m| f(grid.k(m))).collect();
        Self {
            grid: grid.clone(),
            domain: Domain::Wavevector,
            values,
        }
    }

    pub fn grid(&self) -> &TransverseGrid<T> {
        &self.grid
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    /// Coordinates matching `values()` (positions, or FFT-ordered wavevectors).
    pub fn coordinates(&self) -> Vec<T> {
        match self.domain {
            Domain::Position => self.grid.positions(),
            Domain::Wavevector => self.grid.k_values(),
        }
    }

    /// Samples in ascending-coordinate order.
    pub fn values_monotone(&self) -> Vec<Complex<T>> {
        match self.domain {
            Domain::Position => self.values.clone(),
            Domain::Wavevector => {
                let mut v = self.values.clone();
                v.rotate_left(self.grid.n() / 2);
                v
            }
        }
    }

    /// Quadrature weight of one sample in the current domain.
    pub fn measure(&self) -> T {
        match self.domain {
            Domain::Position => self.grid.spacing(),
            Domain::Wavevector => self.grid.k_spacing(),
        }
    }

    /// `Σ|f|² · (Δx or Δk)`.
    pub fn norm_sqr(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |acc, v| acc + v.norm_sqr())
            * self.measure()
    }

    /// `⟨self, other⟩ = Σ conj(self)·other` with the domain's quadrature weight.
    pub fn inner(&self, other: &Field<T>) -> Result<Complex<T>> {
        self.grid.check_same(&other.grid)?;
        let other = other.to_domain(self.domain);
        let sum = self
            .values
            .iter()
            .zip(other.values.iter())
            .fold(Complex::zero(), |acc: Complex<T>, (a, b)| acc + a.conj() * b);
        Ok(sum * self.measure())
    }

    pub fn to_domain(&self, domain: Domain) -> Field<T> {
        match domain {
            Domain::Position => self.to_position(),
            Domain::Wavevector => self.to_wavevector(),
        }
    }

    pub fn to_position(&self) -> Field<T> {
        match self.domain {
            Domain::Position => self.clone(),
            Domain::Wavevector => idft(self),
        }
    }

    pub fn to_wavevector(&self) -> Field<T> {
        match self.domain {
            Domain::Wavevector => self.clone(),
            Domain::Position => dft(self),
        }
    }

    pub fn scaled(&self, c: Complex<T>) -> Field<T> {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn conj(&self) -> Field<T> {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v = v.conj());
        out
    }

    /// Largest sample-wise `|a - b|` after bringing both into position space.
    pub fn max_abs_diff(&self, other: &Field<T>) -> Result<T> {
        self.grid.check_same(&other.grid)?;
        let a = self.to_position();
        let b = other.to_position();
        Ok(a.values
            .iter()
            .zip(b.values.iter())
            .fold(T::zero(), |m, (x, y)| Float::max(m, (x - y).norm())))
    }
}

/// Physically scaled forward transform `f̃(k) = Δx/√(2π) Σ f(x) e^{-ikx}`.
///
/// Input must be in position space; a wavevector-domain input is returned
/// unchanged.
pub fn dft<T: Real>(f: &Field<T>) -> Field<T> {
    if f.domain == Domain::Wavevector {
        return f.clone();
    }
    let grid = &f.grid;
    let mut buf = f.values.clone();
    grid.fft_in_place(&mut buf);
    // x_0 = -L/2 contributes e^{iπm} = (-1)^m
    let scale = grid.spacing() / Float::sqrt(T::TAU());
    for (m, v) in buf.iter_mut().enumerate() {
        let s = if m % 2 == 0 { scale } else { -scale };
        *v *= s;
    }
    Field {
        grid: grid.clone(),
        domain: Domain::Wavevector,
        values: buf,
    }
}

/// Inverse of [`dft`]: `f(x) = Δk/√(2π) Σ f̃(k) e^{ikx}`.
pub fn idft<T: Real>(f: &Field<T>) -> Field<T> {
    if f.domain == Domain::Position {
        return f.clone();
    }
    let grid = &f.grid;
    let mut buf: Vec<Complex<T>> = f
        .values
        .iter()
        .enumerate()
        .map(|(m, v)| if m % 2 == 0 { *v } else { -*v })
        .collect();
    grid.ifft_in_place(&mut buf);
    let scale = grid.k_spacing() / Float::sqrt(T::TAU());
    buf.iter_mut().for_each(|v| *v *= scale);
    Field {
        grid: grid.clone(),
        domain: Domain::Position,
        values: buf,
    }
}

/// Unitary DFT with kernel `e^{-2πi mj/n}/√n` on raw samples (any length).
pub fn unitary_dft<T: Real>(values: &[Complex<T>]) -> Vec<Complex<T>> {
    unitary_transform(values, false)
}

/// Inverse of [`unitary_dft`].
pub fn unitary_idft<T: Real>(values: &[Complex<T>]) -> Vec<Complex<T>> {
    unitary_transform(values, true)
}

fn unitary_transform<T: Real>(values: &[Complex<T>], inverse: bool) -> Vec<Complex<T>> {
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut buf = values.to_vec();
    plan.process(&mut buf);
    let scale = T::one() / Float::sqrt(T::lit(n as f64));
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Circular convolution `(f*h)(x) = Δx Σ f(x') h(x - x')`, evaluated through
/// the transform pair. Both inputs are read in position space.
pub fn convolve<T: Real>(f: &Field<T>, kernel: &Field<T>) -> Result<Field<T>> {
    f.grid.check_same(&kernel.grid)?;
    let grid = &f.grid;
    let n = grid.n();
    let mut a = f.to_position().values;
    let mut b = kernel.to_position().values;
    grid.fft_in_place(&mut a);
    grid.fft_in_place(&mut b);
    for (x, y) in a.iter_mut().zip(b.iter()) {
        *x *= y;
    }
    grid.ifft_in_place(&mut a);
    // kernel index for displacement d is d + n/2, hence the half-window roll
    a.rotate_left(n / 2);
    let scale = grid.spacing() / T::lit(n as f64);
    a.iter_mut().for_each(|v| *v *= scale);
    Ok(Field {
        grid: grid.clone(),
        domain: Domain::Position,
        values: a,
    })
}

/// Fraction of `Σ|f|²` held in the outer [`EDGE_BAND`] of the window on
/// either side (`|x| >= 0.4·L`). Zero fields report zero.
pub fn edge_leakage<T: Real>(f: &Field<T>) -> T {
    let f = f.to_position();
    let grid = &f.grid;
    let edge = T::lit(0.5 - EDGE_BAND) * grid.extent();
    let mut total = T::zero();
    let mut outer = T::zero();
    for (i, v) in f.values.iter().enumerate() {
        let p = v.norm_sqr();
        total += p;
        if Float::abs(grid.x(i)) >= edge {
            outer += p;
        }
    }
    if total > T::zero() {
        outer / total
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type C = Complex<f64>;

    fn random_field(grid: &TransverseGrid<f64>, seed: u64) -> Field<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..grid.n())
            .map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Field::new(grid, Domain::Position, values).unwrap()
    }

    fn direct_circular(f: &Field<f64>, h: &Field<f64>) -> Vec<C> {
        let g = f.grid();
        let n = g.n();
        (0..n)
            .map(|i| {
                let mut acc = C::zero();
                for j in 0..n {
                    // h evaluated at x_i - x_j, wrapped onto the window
                    let d = g.wrapped_offset(g.x(i), g.x(j));
                    acc += f.values()[j] * h.values()[g.nearest_index(d)];
                }
                acc * g.spacing()
            })
            .collect()
    }

    #[test]
    fn small_grid_arithmetic() {
        let g = make_grid(8, 8.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert!((g.k_spacing() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        assert_eq!(g.positions(), vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        assert_eq!(g.x(4), 0.0);
        assert_eq!(g.k(0), 0.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(make_grid(7, 8.0), Err(Error::InvalidGridSize { n: 7 })));
        assert!(matches!(make_grid(4, 8.0), Err(Error::InvalidGridSize { .. })));
        assert!(matches!(make_grid(8, 0.0), Err(Error::InvalidExtent { .. })));
        assert!(matches!(make_grid(8, -1.0), Err(Error::InvalidExtent { .. })));
    }

    #[test]
    fn reciprocity_identity() {
        let g = make_grid(512, 16.0).unwrap();
        let product = g.spacing() * g.k_spacing() * 512.0;
        assert!((product / std::f64::consts::TAU - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn monotone_k_view() {
        let g = make_grid(8, 8.0).unwrap();
        let ks = g.k_values_monotone();
        assert!(ks.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ks[4], 0.0);
        assert_eq!(g.signed_index(4), -4);
    }

    #[test]
    fn constant_unitary_dft() {
        let ones = vec![C::new(1.0, 0.0); 4];
        let out = unitary_dft(&ones);
        assert!((out[0] - C::new(2.0, 0.0)).norm() < 1e-15);
        for v in &out[1..] {
            assert!(v.norm() < 1e-15);
        }
    }

    #[test]
    fn transform_round_trip() {
        let g = make_grid(256, 12.0).unwrap();
        let f = random_field(&g, 3);
        let back = idft(&dft(&f));
        assert!(f.max_abs_diff(&back).unwrap() <= 1e-12);
        let raw = unitary_idft(&unitary_dft(f.values()));
        let err = raw
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-12);
    }

    #[test]
    fn gaussian_transform_closed_form() {
        let g = make_grid(512, 16.0).unwrap();
        let sigma = 1.0_f64;
        let pref = (1.0 / (std::f64::consts::PI * sigma * sigma)).powf(0.25);
        let f = Field::from_position_fn(&g, |x| C::new(pref * (-x * x / (2.0 * sigma * sigma)).exp(), 0.0));
        let ft = dft(&f);
        let kpref = (sigma * sigma / std::f64::consts::PI).powf(0.25);
        for (m, v) in ft.values().iter().enumerate() {
            let k = g.k(m);
            let expected = kpref * (-k * k * sigma * sigma / 2.0).exp();
            assert!((v - C::new(expected, 0.0)).norm() <= 1e-8, "k={k}");
        }
    }

    #[test]
    fn parseval() {
        let g = make_grid(128, 10.0).unwrap();
        let f = random_field(&g, 11);
        let a = f.norm_sqr();
        let b = dft(&f).norm_sqr();
        assert!(((a - b) / a).abs() <= 1e-10);
    }

    #[test]
    fn convolution_delta_identity() {
        let g = make_grid(64, 8.0).unwrap();
        let f = random_field(&g, 5);
        let mut delta = Field::zeros(&g, Domain::Position);
        delta.values_mut()[g.n() / 2] = C::new(1.0 / g.spacing(), 0.0);
        let out = convolve(&f, &delta).unwrap();
        assert!(out.max_abs_diff(&f).unwrap() <= 1e-12);
    }

    #[test]
    fn convolution_commutes_and_matches_direct_sum() {
        let g = make_grid(64, 8.0).unwrap();
        let f = random_field(&g, 1);
        let h = random_field(&g, 2);
        let fh = convolve(&f, &h).unwrap();
        let hf = convolve(&h, &f).unwrap();
        assert!(fh.max_abs_diff(&hf).unwrap() <= 1e-12);
        let direct = direct_circular(&f, &h);
        let err = fh
            .values()
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-10, "err={err}");
    }

    #[test]
    fn gaussian_convolution_widths_add_in_quadrature() {
        let g = make_grid(512, 32.0).unwrap();
        let gauss = |s: f64| {
            let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
            Field::from_position_fn(&g, move |x| C::new(norm * (-x * x / (2.0 * s * s)).exp(), 0.0))
        };
        let (sa, sb) = (0.7, 1.3);
        let out = convolve(&gauss(sa), &gauss(sb)).unwrap();
        let expected = gauss((sa * sa + sb * sb).sqrt());
        assert!(out.max_abs_diff(&expected).unwrap() <= 1e-8);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let a = Field::zeros(&make_grid(8, 8.0).unwrap(), Domain::Position);
        let b = Field::zeros(&make_grid(16, 8.0).unwrap(), Domain::Position);
        assert!(matches!(convolve(&a, &b), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn edge_leakage_of_centred_and_edge_fields() {
        let g = make_grid(256, 16.0).unwrap();
        let centred = Field::from_position_fn(&g, |x| C::new((-x * x).exp(), 0.0));
        assert!(edge_leakage(&centred) < 1e-12);
        let flat = Field::from_position_fn(&g, |_| C::new(1.0, 0.0));
        let frac = edge_leakage(&flat);
        assert!((frac - 0.2).abs() < 0.02);
    }

    #[test]
    fn operations_are_bit_reproducible() {
        let g = make_grid(128, 8.0).unwrap();
        let f = random_field(&g, 9);
        let a = dft(&f);
        let b = dft(&f);
        assert_eq!(a.values(), b.values());
    }
}
