//! Retrodictive pipeline: the arm-1 detection mode is evolved backward to the
//! crystal, conditions the pair amplitude, and the resulting arm-2 photon is
//! evolved forward to its detector.

use num_traits::Float;
use rayon::prelude::*;

use crate::elements::{apply_backward, apply_forward, materialize_detector, DetectorProfile, Element};
use crate::error::{Error, Result};
use crate::grid::{edge_leakage, Field, TransverseGrid, EDGE_LEAKAGE_LIMIT};
use crate::scalar::Real;
use crate::source::{condition, BiphotonField};

/// Complete description of one two-arm imaging experiment.
///
/// Both arms are listed in physical photon order, crystal first. The
/// retrodictive pass walks `arm1` from the detector end.
#[derive(Clone, Debug)]
pub struct ImagingSetup<T: Real> {
    pub grid: TransverseGrid<T>,
    pub arm1: Vec<Element<T>>,
    pub arm2: Vec<Element<T>>,
    pub source: BiphotonField<T>,
    pub detector1: DetectorProfile<T>,
    /// Ceiling on the edge leakage of the conditioned arm-2 stages; `None`
    /// only reports it.
    pub leakage_limit: Option<T>,
}

impl<T: Real> ImagingSetup<T> {
    pub fn new(
        grid: TransverseGrid<T>,
        arm1: Vec<Element<T>>,
        arm2: Vec<Element<T>>,
        source: BiphotonField<T>,
        detector1: DetectorProfile<T>,
    ) -> Result<Self> {
        let setup = Self {
            grid,
            arm1,
            arm2,
            source,
            detector1,
            leakage_limit: Some(T::lit(EDGE_LEAKAGE_LIMIT)),
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.check_same(self.source.grid())?;
        for e in self.arm1.iter().chain(self.arm2.iter()) {
            e.validate(&self.grid)?;
        }
        self.detector1.check_resolvable(&self.grid)
    }

    /// Same setup with the arm-1 detector moved to `x1`.
    pub fn with_detector_at(&self, x1: T) -> Self {
        Self {
            detector1: self.detector1.centered_at(x1),
            ..self.clone()
        }
    }

    pub fn with_leakage_limit(mut self, limit: T) -> Self {
        self.leakage_limit = Some(limit);
        self
    }

    /// Keeps computing stage leakage but never fails on it.
    pub fn without_leakage_guard(mut self) -> Self {
        self.leakage_limit = None;
        self
    }
}

/// Normalized detection density over one coordinate.
#[derive(Clone, Debug)]
pub struct ConditionalDistribution<T: Real> {
    pub grid: TransverseGrid<T>,
    /// Per-unit-length density at each grid position, `Σ density·Δx = 1`.
    pub density: Vec<T>,
    /// Arm-1 position conditioned on; `None` for marginals.
    pub conditioning_position: Option<T>,
}

impl<T: Real> ConditionalDistribution<T> {
    /// Normalizes `|amplitude|²`; `x1` is reported in the dark-conditional error.
    pub fn from_amplitude(field: &Field<T>, x1: T) -> Result<Self> {
        let field = field.to_position();
        let weights: Vec<T> = field.values().iter().map(|v| v.norm_sqr()).collect();
        Self::from_weights(field.grid(), weights, Some(x1))
    }

    pub(crate) fn from_weights(grid: &TransverseGrid<T>, weights: Vec<T>, x1: Option<T>) -> Result<Self> {
        let dx = grid.spacing();
        let total = weights.iter().fold(T::zero(), |a, &w| a + w) * dx;
        if !(total > T::dark_floor()) || !total.is_finite() {
            return Err(Error::DarkConditional {
                x1: x1.map(|v| v.to_f64_lossy()).unwrap_or(f64::NAN),
                weight: total.to_f64_lossy(),
            });
        }
        let density = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            grid: grid.clone(),
            density,
            conditioning_position: x1,
        })
    }

    /// `Σ density·Δx`.
    pub fn total(&self) -> T {
        self.density.iter().fold(T::zero(), |a, &d| a + d) * self.grid.spacing()
    }

    pub fn positions(&self) -> Vec<T> {
        self.grid.positions()
    }

    /// `Σ |p - q| Δx` over samples where `keep(x)` holds.
    pub fn l1_distance_where(&self, other: &[T], keep: impl Fn(T) -> bool) -> T {
        let dx = self.grid.spacing();
        self.density
            .iter()
            .zip(other)
            .enumerate()
            .filter(|(i, _)| keep(self.grid.x(*i)))
            .fold(T::zero(), |acc, (_, (p, q))| acc + Float::abs(*p - *q))
            * dx
    }

    pub fn l1_distance(&self, other: &[T]) -> T {
        self.l1_distance_where(other, |_| true)
    }

    pub fn max_abs_diff(&self, other: &ConditionalDistribution<T>) -> T {
        self.density
            .iter()
            .zip(&other.density)
            .fold(T::zero(), |m, (p, q)| Float::max(m, Float::abs(*p - *q)))
    }
}

/// Profile after one step of either arm, labelled for reports.
#[derive(Clone, Debug)]
pub struct Stage<T: Real> {
    pub label: String,
    pub field: Field<T>,
    pub edge_leakage: T,
}

impl<T: Real> Stage<T> {
    fn new(label: String, field: Field<T>) -> Self {
        let edge_leakage = edge_leakage(&field);
        Self {
            label,
            field,
            edge_leakage,
        }
    }
}

/// Every intermediate profile of one retrodictive run.
#[derive(Clone, Debug)]
pub struct RetrodictiveStages<T: Real> {
    /// Detector mode `α`.
    pub alpha: Stage<T>,
    /// Profile after each backward step, detector end first; the last is `α₃`.
    pub arm1: Vec<Stage<T>>,
    /// Conditioned arm-2 state at the crystal, `β₁`.
    pub beta1: Stage<T>,
    /// Profile after each forward arm-2 step; the last is `β₂`.
    pub arm2: Vec<Stage<T>>,
}

impl<T: Real> RetrodictiveStages<T> {
    pub fn alpha3(&self) -> &Field<T> {
        self.arm1.last().map(|s| &s.field).unwrap_or(&self.alpha.field)
    }

    pub fn beta2(&self) -> &Field<T> {
        self.arm2.last().map(|s| &s.field).unwrap_or(&self.beta1.field)
    }

    /// `β₁` and every arm-2 stage: the conditioned photon, whose leakage the
    /// guard checks.
    pub fn conditioned(&self) -> impl Iterator<Item = &Stage<T>> {
        std::iter::once(&self.beta1).chain(self.arm2.iter())
    }

    /// All stages in unfolded order: detector 1 → crystal → detector 2.
    pub fn unfolded(&self) -> Vec<&Stage<T>> {
        std::iter::once(&self.alpha)
            .chain(self.arm1.iter())
            .chain(std::iter::once(&self.beta1))
            .chain(self.arm2.iter())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct RetrodictiveRun<T: Real> {
    pub distribution: ConditionalDistribution<T>,
    pub stages: RetrodictiveStages<T>,
}

/// Conditional arm-2 density `P(x₂|x₁)` for the setup's arm-1 detector.
pub fn run_retrodictive<T: Real>(setup: &ImagingSetup<T>) -> Result<RetrodictiveRun<T>> {
    setup.validate()?;
    let x1 = setup.detector1.center;
    let alpha = materialize_detector(&setup.detector1, &setup.grid)?;

    let mut arm1 = Vec::with_capacity(setup.arm1.len());
    let mut current = alpha.clone();
    for (step, e) in setup.arm1.iter().rev().enumerate() {
        current = apply_backward(e, &current)?;
        arm1.push(Stage::new(format!("arm1[{step}]:{}", e.name()), current.clone()));
    }

    let beta1 = condition(&setup.source, &current)?;
    let mut arm2 = Vec::with_capacity(setup.arm2.len());
    let mut current = beta1.clone();
    for (step, e) in setup.arm2.iter().enumerate() {
        current = apply_forward(e, &current)?;
        arm2.push(Stage::new(format!("arm2[{step}]:{}", e.name()), current.clone()));
    }

    let stages = RetrodictiveStages {
        alpha: Stage::new("alpha".into(), alpha),
        arm1,
        beta1: Stage::new("beta1".into(), beta1),
        arm2,
    };

    let distribution = ConditionalDistribution::from_amplitude(stages.beta2(), x1)?;

    // Arm-1 profiles are unnormalized retrodictive modes and may legitimately
    // fill the window (a point detector behind a lens); the guard applies to
    // the conditioned photon.
    if let Some(limit) = setup.leakage_limit {
        for stage in stages.conditioned() {
            if stage.edge_leakage > limit {
                return Err(Error::EdgeLeakage {
                    stage: stage.label.clone(),
                    fraction: stage.edge_leakage.to_f64_lossy(),
                    threshold: limit.to_f64_lossy(),
                });
            }
        }
    }

    Ok(RetrodictiveRun { distribution, stages })
}

/// Fraction of the window (centred) in which conditioning positions may lie.
pub const CONDITIONING_WINDOW: f64 = 0.8;

/// Runs the pipeline once per arm-1 position, in parallel, returning results
/// in input order. Failures are collected with their positions.
pub fn sweep_conditioning<T: Real>(
    setup: &ImagingSetup<T>,
    positions: &[T],
) -> Result<Vec<RetrodictiveRun<T>>> {
    let limit = T::lit(CONDITIONING_WINDOW / 2.0) * setup.grid.extent();
    let results: Vec<Result<RetrodictiveRun<T>>> = positions
        .par_iter()
        .map(|&x1| {
            if !(Float::abs(x1) <= limit) {
                return Err(Error::PositionOutOfRange {
                    x1: x1.to_f64_lossy(),
                    limit: limit.to_f64_lossy(),
                });
            }
            run_retrodictive(&setup.with_detector_at(x1))
        })
        .collect();

    let mut out = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (x1, r) in positions.iter().zip(results) {
        match r {
            Ok(d) => out.push(d),
            Err(e) => failures.push((x1.to_f64_lossy(), e)),
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(Error::Sweep(failures))
    }
}
