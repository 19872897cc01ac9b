//! The `verify` suite: retrodictive vs. predictive equivalence on the
//! built-in geometries, the finite-dimensional equivalence on random
//! instances, and (informational) the imaging-limit metrics.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{build_setup, builtin, MaskSpec, ScenarioConfig, ScenarioKind};
use crate::elements::{DetectorProfile, DetectorShape};
use crate::error::Result;
use crate::hilbert::{self, random as hrand};
use crate::predict::{conditional_from_joint, evolve_joint, joint_distribution};
use crate::retrodict::run_retrodictive;

pub const EQUIVALENCE_TOLERANCE: f64 = 1e-8;
pub const HILBERT_TOLERANCE: f64 = 1e-12;
/// Bins per axis for the mutual-information washout metric.
pub const MI_BINS: usize = 16;

#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    /// Smaller grid and no limit metrics.
    pub fast: bool,
}

#[derive(Clone, Debug)]
pub struct EquivalenceReport {
    pub name: &'static str,
    pub n: usize,
    pub positions: Vec<f64>,
    pub max_abs_diff: f64,
    pub max_edge_leakage: f64,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.max_abs_diff <= EQUIVALENCE_TOLERANCE
    }
}

#[derive(Clone, Debug)]
pub struct HilbertReport {
    pub instances: usize,
    pub worst_gap: f64,
}

impl HilbertReport {
    pub fn passed(&self) -> bool {
        self.worst_gap <= HILBERT_TOLERANCE
    }
}

/// A reported quantity with the target it is compared against. Limits are
/// informational and never fail `verify`.
#[derive(Clone, Debug)]
pub struct LimitMetric {
    pub name: String,
    pub value: f64,
    pub target: String,
    pub met: bool,
}

#[derive(Clone, Debug)]
pub struct VerifyReport {
    pub scenarios: Vec<EquivalenceReport>,
    pub hilbert: HilbertReport,
    pub limits: Vec<LimitMetric>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.scenarios.iter().all(EquivalenceReport::passed) && self.hilbert.passed()
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "ok  "
    } else {
        "FAIL"
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "oracle equivalence (max |retrodictive - bayes|, tolerance {EQUIVALENCE_TOLERANCE:e})")?;
        for s in &self.scenarios {
            writeln!(
                f,
                "  {} {:<20} n={:<4} positions={:?} max_diff={:.3e} max_conditioned_edge_leakage={:.3e}",
                mark(s.passed()),
                s.name,
                s.n,
                s.positions,
                s.max_abs_diff,
                s.max_edge_leakage
            )?;
        }
        writeln!(f, "finite-dimensional equivalence (tolerance {HILBERT_TOLERANCE:e})")?;
        writeln!(
            f,
            "  {} {} seeded instances, worst gap {:.3e}",
            mark(self.hilbert.passed()),
            self.hilbert.instances,
            self.hilbert.worst_gap
        )?;
        if !self.limits.is_empty() {
            writeln!(f, "imaging limits (informational)")?;
            for m in &self.limits {
                writeln!(
                    f,
                    "  {} {:<40} {:.4e}  target {}",
                    if m.met { "met " } else { "miss" },
                    m.name,
                    m.value,
                    m.target
                )?;
            }
        }
        write!(f, "verify: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Geometries checked for equivalence, with their conditioning positions
/// (grid points at both supported sizes).
pub fn equivalence_suite(n: usize) -> Vec<(&'static str, ScenarioConfig, Vec<f64>)> {
    let base = ScenarioConfig {
        n,
        edge_leakage_limit: None,
        ..ScenarioConfig::default()
    };
    let positions = vec![-2.0, 0.0, 0.75, 1.5];
    vec![
        (
            "fig3-direct",
            ScenarioConfig {
                detector: DetectorShape::Gaussian { sigma: 0.3 },
                ..base.clone()
            },
            positions.clone(),
        ),
        (
            "fig3-double-slit",
            ScenarioConfig {
                mask: MaskSpec::DoubleSlit {
                    width: 0.4,
                    separation: 2.0,
                },
                detector: DetectorShape::Point,
                ..base.clone()
            },
            positions.clone(),
        ),
        (
            "fourier-2f",
            ScenarioConfig {
                scenario: ScenarioKind::Fourier2f,
                mask: MaskSpec::SingleSlit { width: 0.8 },
                detector: DetectorShape::Point,
                ..base
            },
            positions,
        ),
    ]
}

/// Max pointwise gap between the two routes over `positions`.
pub fn check_equivalence(name: &'static str, c: &ScenarioConfig, positions: &[f64]) -> Result<EquivalenceReport> {
    let setup = build_setup::<f64>(c)?;
    let psi = evolve_joint(&setup.source, &setup.arm1, &setup.arm2)?;
    let joint = joint_distribution(&psi, setup.detector1)?;
    let mut max_abs_diff = 0.0f64;
    let mut max_edge_leakage = 0.0f64;
    for &x1 in positions {
        let run = run_retrodictive(&setup.with_detector_at(x1))?;
        let oracle = conditional_from_joint(&joint, x1)?;
        max_abs_diff = max_abs_diff.max(run.distribution.max_abs_diff(&oracle));
        for s in run.stages.conditioned() {
            max_edge_leakage = max_edge_leakage.max(s.edge_leakage);
        }
    }
    Ok(EquivalenceReport {
        name,
        n: c.n,
        positions: positions.to_vec(),
        max_abs_diff,
        max_edge_leakage,
    })
}

/// Retrodictive vs. Bayes-inverted predictive conditionals on seeded random
/// instances of dimension 2–6.
pub fn hilbert_suite(instances: usize, seed: u64) -> Result<HilbertReport> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_gap = 0.0f64;
    for k in 0..instances {
        let d = 2 + k % 5;
        let members = rng.random_range(1..=5);
        let outcomes = rng.random_range(1..=d);
        let ens = hrand::random_ensemble::<f64>(d, members, &mut rng);
        let pom = hrand::random_pom::<f64>(d, outcomes, &mut rng);
        let u = hrand::haar_unitary::<f64>(d, &mut rng);
        worst_gap = worst_gap.max(hilbert::equivalence_gap(&ens, &pom, &u)?);
    }
    Ok(HilbertReport { instances, worst_gap })
}

fn normalized(weights: Vec<f64>, dx: f64) -> Vec<f64> {
    let total: f64 = weights.iter().sum::<f64>() * dx;
    weights.into_iter().map(|w| w / total).collect()
}

/// Ghost-image, Fourier-image and washout figures for the double-slit and
/// single-slit presets.
pub fn limit_metrics() -> Result<Vec<LimitMetric>> {
    let mut out = Vec::new();

    let slits = builtin("fig3-double-slit").expect("preset exists").config;
    // the ghost-image limit is stated for a broad pump spectrum
    let setup = build_setup::<f64>(&ScenarioConfig { kappa: 8.0, ..slits.clone() })?;
    let grid = setup.grid.clone();
    let dx = grid.spacing();
    let (w, sep) = match slits.mask {
        MaskSpec::DoubleSlit { width, separation } => (width, separation),
        _ => unreachable!(),
    };
    let t2 = normalized(
        grid.positions()
            .iter()
            .map(|&x| if (x.abs() - sep / 2.0).abs() < w / 2.0 { 1.0 } else { 0.0 })
            .collect(),
        dx,
    );
    let ghost = |shape: DetectorShape<f64>| -> Result<f64> {
        let mut s = setup.clone();
        s.detector1.shape = shape;
        let d = run_retrodictive(&s)?.distribution;
        Ok(d.l1_distance_where(&t2, |x| x.abs() <= 3.0))
    };
    let point = ghost(DetectorShape::Point)?;
    out.push(LimitMetric {
        name: "ghost image L1, point detector".into(),
        value: point,
        target: "<= 1e-2".into(),
        met: point <= 1e-2,
    });
    let sweep: Vec<f64> = [0.4, 0.2, 0.1]
        .iter()
        .map(|&sigma| ghost(DetectorShape::Gaussian { sigma }))
        .collect::<Result<_>>()?;
    for (sigma, l1) in [0.4, 0.2, 0.1].iter().zip(&sweep) {
        out.push(LimitMetric {
            name: format!("ghost image L1, sigma={sigma}"),
            value: *l1,
            target: "decreasing as sigma shrinks".into(),
            met: sweep.windows(2).all(|p| p[1] < p[0]),
        });
    }

    let fourier = builtin("fourier-2f").expect("preset exists").config;
    let setup = build_setup::<f64>(&fourier)?;
    let grid = setup.grid.clone();
    let width = match fourier.mask {
        MaskSpec::SingleSlit { width } => width,
        _ => unreachable!(),
    };
    // |∫ t(x) e^{-ikx} dx|² for a centred slit, evaluated at k = x₂.
    let sinc2 = normalized(
        grid.positions()
            .iter()
            .map(|&k| {
                let a = if k == 0.0 { width } else { 2.0 * (k * width / 2.0).sin() / k };
                a * a
            })
            .collect(),
        grid.spacing(),
    );
    let d = run_retrodictive(&setup)?.distribution;
    let l1 = d.l1_distance(&sinc2);
    out.push(LimitMetric {
        name: "fourier image L1, point detector".into(),
        value: l1,
        target: "<= 1e-2".into(),
        met: l1 <= 1e-2,
    });

    let setup = build_setup::<f64>(&slits)?;
    let psi = evolve_joint(&setup.source, &setup.arm1, &setup.arm2)?;
    let broad = setup.grid.extent() / 4.0;
    let mi: Vec<f64> = [broad, 0.1]
        .par_iter()
        .map(|&sigma| {
            joint_distribution(&psi, DetectorProfile::gaussian(sigma, 0.0))
                .map(|j| j.mutual_information_bits(MI_BINS))
        })
        .collect::<Result<_>>()?;
    out.push(LimitMetric {
        name: format!("washout MI bits, sigma=L/4 ({MI_BINS} bins)"),
        value: mi[0],
        target: "<= 0.01".into(),
        met: mi[0] <= 0.01,
    });
    out.push(LimitMetric {
        name: format!("washout MI bits, sigma=0.1 ({MI_BINS} bins)"),
        value: mi[1],
        target: ">= 0.5".into(),
        met: mi[1] >= 0.5,
    });
    Ok(out)
}

/// Runs the full suite.
pub fn run_verify(opts: VerifyOptions) -> Result<VerifyReport> {
    let n = if opts.fast { 128 } else { 256 };
    let scenarios = equivalence_suite(n)
        .iter()
        .map(|(name, c, positions)| check_equivalence(name, c, positions))
        .collect::<Result<_>>()?;
    let hilbert = hilbert_suite(if opts.fast { 100 } else { 500 }, 0x5eed)?;
    let limits = if opts.fast { Vec::new() } else { limit_metrics()? };
    Ok(VerifyReport {
        scenarios,
        hilbert,
        limits,
    })
}
