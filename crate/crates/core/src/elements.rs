//! Optical elements and detector profiles.
//!
//! Every element has a forward (time-forward, photon-order) action and a
//! backward action that is its exact adjoint under the `Δx`-weighted inner
//! product. Retrodictive profiles travel through an arm with the backward
//! action; the predictive oracle uses the forward one.

use num_complex::Complex;
use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::grid::{Domain, Field, TransverseGrid};
use crate::scalar::Real;

/// Quadratic exponent used for free propagation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PropagationConvention {
    /// `e^{∓i k_x² z / k_z}`.
    #[default]
    Unhalved,
    /// Conventional Fresnel form `e^{∓i k_x² z / (2 k_z)}`.
    FresnelHalf,
}

impl PropagationConvention {
    pub fn from_half_factor(half: bool) -> Self {
        if half {
            Self::FresnelHalf
        } else {
            Self::Unhalved
        }
    }

    fn coefficient<T: Real>(self, distance: T, k_z: T) -> T {
        match self {
            Self::Unhalved => distance / k_z,
            Self::FresnelHalf => distance / (T::lit(2.0) * k_z),
        }
    }
}

/// One optical element acting on a one-photon transverse profile.
#[derive(Clone, Debug)]
pub enum Element<T: Real> {
    /// Free propagation over `distance`. The global phase `e^{i z k_z}` is
    /// dropped.
    Propagate {
        distance: T,
        k_z: T,
        convention: PropagationConvention,
    },
    /// Ideal lens in an f–f arrangement. Maps the transverse-wavevector
    /// content of the incoming profile onto transverse position with unit
    /// scale (kernel `e^{+ikx}/√(2π)`); its backward action is the forward
    /// transform.
    FourierLens,
    /// Thin-lens phase `e^{-i k_z x² / (2f)}`.
    QuadraticPhase { focal_length: T, k_z: T },
    /// Transmission mask `t(x)` with `|t| ≤ 1`.
    Mask { transmission: Field<T> },
}

impl<T: Real> Element<T> {
    pub fn propagate(distance: T, k_z: T) -> Self {
        Element::Propagate {
            distance,
            k_z,
            convention: PropagationConvention::Unhalved,
        }
    }

    pub fn propagate_with(distance: T, k_z: T, convention: PropagationConvention) -> Self {
        Element::Propagate {
            distance,
            k_z,
            convention,
        }
    }

    /// Builds a mask, checking passivity (`|t| ≤ 1 + 1e-12`).
    pub fn mask(transmission: Field<T>) -> Result<Self> {
        let t = transmission.to_position();
        let limit = T::one() + T::lit(1e-12);
        for (index, v) in t.values().iter().enumerate() {
            let modulus = v.norm();
            if !(modulus <= limit) {
                return Err(Error::MaskNotPassive {
                    index,
                    modulus: modulus.to_f64_lossy(),
                });
            }
        }
        Ok(Element::Mask { transmission: t })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Element::Propagate { .. } => "propagate",
            Element::FourierLens => "fourier_lens",
            Element::QuadraticPhase { .. } => "quadratic_phase",
            Element::Mask { .. } => "mask",
        }
    }

    /// Checks that the element can act on fields of `grid`.
    pub fn validate(&self, grid: &TransverseGrid<T>) -> Result<()> {
        match self {
            Element::Propagate {
                distance,
                k_z,
                convention,
            } => {
                if !(*k_z > T::zero()) {
                    return Err(Error::InvalidParameter {
                        what: "k_z",
                        value: k_z.to_f64_lossy(),
                        reason: "must be positive",
                    });
                }
                check_propagation_sampling(grid, *distance, *k_z, *convention)
            }
            Element::FourierLens => Ok(()),
            Element::QuadraticPhase { focal_length, k_z } => {
                if *focal_length == T::zero() || !focal_length.is_finite() {
                    return Err(Error::InvalidParameter {
                        what: "focal_length",
                        value: focal_length.to_f64_lossy(),
                        reason: "must be finite and non-zero",
                    });
                }
                if !(*k_z > T::zero()) {
                    return Err(Error::InvalidParameter {
                        what: "k_z",
                        value: k_z.to_f64_lossy(),
                        reason: "must be positive",
                    });
                }
                Ok(())
            }
            Element::Mask { transmission } => grid.check_same(transmission.grid()),
        }
    }
}

/// Largest phase change of `c·k²` between neighbouring wavevector samples.
///
/// The unpaired Nyquist bin is excluded: its sign is ambiguous, so the phase
/// it carries is not a sampled value of the smooth chirp.
pub fn propagation_phase_step<T: Real>(
    grid: &TransverseGrid<T>,
    distance: T,
    k_z: T,
    convention: PropagationConvention,
) -> T {
    let c = Float::abs(convention.coefficient(distance, k_z));
    let n = grid.n() as f64;
    let dk = grid.k_spacing();
    T::lit(n - 3.0) * dk * dk * c
}

fn check_propagation_sampling<T: Real>(
    grid: &TransverseGrid<T>,
    distance: T,
    k_z: T,
    convention: PropagationConvention,
) -> Result<()> {
    let step = propagation_phase_step(grid, distance, k_z, convention);
    if step < T::PI() {
        return Ok(());
    }
    // At fixed spacing the step falls like 1/n; find the first passing size.
    let dx = grid.spacing().to_f64_lossy();
    let c = Float::abs(convention.coefficient(distance, k_z)).to_f64_lossy();
    let mut required = grid.n();
    loop {
        required *= 2;
        let dk = std::f64::consts::TAU / (required as f64 * dx);
        if (required as f64 - 3.0) * dk * dk * c < std::f64::consts::PI || required >= 1 << 40 {
            break;
        }
    }
    Err(Error::SamplingGuard {
        distance: distance.to_f64_lossy(),
        k_z: k_z.to_f64_lossy(),
        phase_step: step.to_f64_lossy(),
        required_n: required,
    })
}

fn multiply_k_phase<T: Real>(f: &Field<T>, coefficient: T) -> Field<T> {
    let mut g = f.to_wavevector();
    let grid = g.grid().clone();
    for (m, v) in g.values_mut().iter_mut().enumerate() {
        let k = grid.k(m);
        *v *= Complex::cis(coefficient * k * k);
    }
    g
}

fn multiply_x<T: Real>(f: &Field<T>, factor: impl Fn(usize, T) -> Complex<T>) -> Field<T> {
    let mut g = f.to_position();
    let grid = g.grid().clone();
    for (i, v) in g.values_mut().iter_mut().enumerate() {
        *v *= factor(i, grid.x(i));
    }
    g
}

/// Time-forward action of `e` on `f`.
pub fn apply_forward<T: Real>(e: &Element<T>, f: &Field<T>) -> Result<Field<T>> {
    e.validate(f.grid())?;
    Ok(match e {
        Element::Propagate {
            distance,
            k_z,
            convention,
        } => multiply_k_phase(f, -convention.coefficient(*distance, *k_z)),
        Element::FourierLens => f.to_position(),
        Element::QuadraticPhase { focal_length, k_z } => {
            let a = *k_z / (T::lit(2.0) * *focal_length);
            multiply_x(f, |_, x| Complex::cis(-a * x * x))
        }
        Element::Mask { transmission } => {
            let t = transmission.values();
            multiply_x(f, |i, _| t[i])
        }
    })
}

/// Adjoint of [`apply_forward`]: the retrodictive, time-backward action.
pub fn apply_backward<T: Real>(e: &Element<T>, f: &Field<T>) -> Result<Field<T>> {
    e.validate(f.grid())?;
    Ok(match e {
        Element::Propagate {
            distance,
            k_z,
            convention,
        } => multiply_k_phase(f, convention.coefficient(*distance, *k_z)),
        Element::FourierLens => f.to_wavevector(),
        Element::QuadraticPhase { focal_length, k_z } => {
            let a = *k_z / (T::lit(2.0) * *focal_length);
            multiply_x(f, |_, x| Complex::cis(a * x * x))
        }
        Element::Mask { transmission } => {
            let t = transmission.values();
            multiply_x(f, |i, _| t[i].conj())
        }
    })
}

/// Applies `elements` left to right with their forward action.
pub fn apply_chain_forward<T: Real>(elements: &[Element<T>], f: &Field<T>) -> Result<Field<T>> {
    elements
        .iter()
        .try_fold(f.clone(), |acc, e| apply_forward(e, &acc))
}

/// Adjoint of [`apply_chain_forward`]: backward actions in reverse order.
pub fn apply_chain_backward<T: Real>(elements: &[Element<T>], f: &Field<T>) -> Result<Field<T>> {
    elements
        .iter()
        .rev()
        .try_fold(f.clone(), |acc, e| apply_backward(e, &acc))
}

/// Spatial response shape of a detector.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum DetectorShape<T> {
    Gaussian { sigma: T },
    TopHat { width: T },
    Point,
}

/// Detector response centred on `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorProfile<T> {
    pub shape: DetectorShape<T>,
    pub center: T,
}

impl<T: Real> DetectorProfile<T> {
    pub fn gaussian(sigma: T, center: T) -> Self {
        Self {
            shape: DetectorShape::Gaussian { sigma },
            center,
        }
    }

    pub fn top_hat(width: T, center: T) -> Self {
        Self {
            shape: DetectorShape::TopHat { width },
            center,
        }
    }

    pub fn point(center: T) -> Self {
        Self {
            shape: DetectorShape::Point,
            center,
        }
    }

    pub fn centered_at(self, center: T) -> Self {
        Self { center, ..self }
    }

    /// Checks the width against the grid: it must span at least two samples.
    pub fn check_resolvable(&self, grid: &TransverseGrid<T>) -> Result<()> {
        let min = T::lit(2.0) * grid.spacing();
        let (what, value) = match self.shape {
            DetectorShape::Gaussian { sigma } => ("detector sigma", sigma),
            DetectorShape::TopHat { width } => ("detector width", width),
            DetectorShape::Point => return Ok(()),
        };
        if value >= min && value.is_finite() {
            Ok(())
        } else {
            Err(Error::Unresolvable {
                what,
                value: value.to_f64_lossy(),
                min: min.to_f64_lossy(),
                max: f64::INFINITY,
            })
        }
    }
}

/// Samples the detector's mode function `α(x)` on `grid`.
///
/// Gaussian: `(1/πσ²)^{1/4} e^{-(x-x₁)²/2σ²}` with periodic distance,
/// renormalized so `Σ|α|²Δx = 1` (a relative change below 1e-15 for profiles
/// confined to the window). Top hat: constant on `[x₁ - w/2, x₁ + w/2)`.
/// Point: `1/√Δx` at the nearest sample.
pub fn materialize_detector<T: Real>(d: &DetectorProfile<T>, grid: &TransverseGrid<T>) -> Result<Field<T>> {
    d.check_resolvable(grid)?;
    let dx = grid.spacing();
    let mut field = match d.shape {
        DetectorShape::Gaussian { sigma } => {
            let pref = Float::powf(T::one() / (T::PI() * sigma * sigma), T::lit(0.25));
            let two_s2 = T::lit(2.0) * sigma * sigma;
            Field::from_position_fn(grid, |x| {
                let r = grid.wrapped_offset(x, d.center);
                Complex::new(pref * Float::exp(-r * r / two_s2), T::zero())
            })
        }
        DetectorShape::TopHat { width } => {
            let half = width / T::lit(2.0);
            let eps = T::lit(1e-9) * dx;
            Field::from_position_fn(grid, |x| {
                let r = grid.wrapped_offset(x, d.center);
                if r >= -half - eps && r < half - eps {
                    Complex::new(T::one(), T::zero())
                } else {
                    Complex::zero()
                }
            })
        }
        DetectorShape::Point => {
            let mut f = Field::zeros(grid, Domain::Position);
            let i = grid.nearest_index(d.center);
            f.values_mut()[i] = Complex::new(T::one() / Float::sqrt(dx), T::zero());
            return Ok(f);
        }
    };
    let norm = field.norm_sqr();
    if !(norm > T::zero()) {
        return Err(Error::Unresolvable {
            what: "detector profile norm",
            value: 0.0,
            min: f64::MIN_POSITIVE,
            max: f64::INFINITY,
        });
    }
    let scale = T::one() / Float::sqrt(norm);
    field.values_mut().iter_mut().for_each(|v| *v *= scale);
    Ok(field)
}
