//! Flat `key = value` scenario files.
//!
//! ```text
//! # double slit, point detector
//! scenario = fig3-direct
//! mask = double-slit{0.4, 2.0}
//! detector = point
//! detector.x1 = -0.5, 0, 0.5
//! ```

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use num_complex::Complex;
use num_traits::Zero;

use crate::elements::{DetectorProfile, DetectorShape, Element, PropagationConvention};
use crate::error::{Error, Result};
use crate::grid::{make_grid, Field, TransverseGrid};
use crate::retrodict::ImagingSetup;
use crate::scalar::Real;
use crate::source::make_biphoton_delta_correlated;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScenarioKind {
    /// Lens at `f` from the crystal in both arms, mask at the crystal in arm 1.
    Fig3Direct,
    /// As `Fig3Direct`, but arm 2 is a 2f–2f single-lens system.
    Fourier2f,
    /// Arms listed explicitly with `arm1` / `arm2`.
    Custom,
}

impl ScenarioKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Fig3Direct => "fig3-direct",
            Self::Fourier2f => "fourier-2f",
            Self::Custom => "custom",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MaskSpec {
    None,
    /// Two slits of `width` centred at `±separation/2`.
    DoubleSlit { width: f64, separation: f64 },
    SingleSlit { width: f64 },
    /// Amplitude `e^{-x²/2σ²}`.
    GaussianAperture { sigma: f64 },
    /// Samples `x, re[, im]` read from a file, linearly interpolated, zero
    /// outside the tabulated range.
    Table { path: PathBuf },
}

/// Element of a custom arm. `Mask` refers to the configured `mask`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementSpec {
    Propagate { distance: f64 },
    Lens,
    QuadraticPhase { focal_length: f64 },
    Mask,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    /// CSV plus `stages.json` with every intermediate profile.
    CsvWithStages,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub n: usize,
    pub extent: f64,
    pub k_z: f64,
    pub f: f64,
    pub kappa: f64,
    pub fresnel_half_factor: bool,
    pub detector: DetectorShape<f64>,
    /// One position, or several for a sweep.
    pub x1: Vec<f64>,
    pub mask: MaskSpec,
    /// Physical order, crystal first (custom scenarios only).
    pub arm1: Vec<ElementSpec>,
    pub arm2: Vec<ElementSpec>,
    /// `None` reports edge leakage without enforcing it.
    pub edge_leakage_limit: Option<f64>,
    pub output_dir: PathBuf,
    pub output_format: OutputFormat,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: ScenarioKind::Fig3Direct,
            n: 512,
            extent: 16.0,
            k_z: 50.0,
            f: 2.0,
            kappa: 4.0,
            fresnel_half_factor: false,
            detector: DetectorShape::Gaussian { sigma: 0.1 },
            x1: vec![0.0],
            mask: MaskSpec::None,
            arm1: Vec::new(),
            arm2: Vec::new(),
            edge_leakage_limit: Some(crate::grid::EDGE_LEAKAGE_LIMIT),
            output_dir: PathBuf::from("out"),
            output_format: OutputFormat::Csv,
        }
    }
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

fn parse_f64(line: usize, key: &str, value: &str) -> Result<f64> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| config_err(line, format!("{key}: expected a finite number, got '{value}'")))
}

fn parse_positive(line: usize, key: &str, value: &str) -> Result<f64> {
    let v = parse_f64(line, key, value)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(config_err(line, format!("{key}: must be positive, got {v}")))
    }
}

/// Splits `name{a, b}` into `("name", ["a", "b"])`; a bare `name` has no
/// arguments.
fn parse_call(line: usize, value: &str) -> Result<(&str, Vec<&str>)> {
    let value = value.trim();
    match value.find('{') {
        None => Ok((value, Vec::new())),
        Some(open) => {
            let inner = value[open + 1..]
                .strip_suffix('}')
                .ok_or_else(|| config_err(line, format!("unbalanced braces in '{value}'")))?;
            let args = if inner.trim().is_empty() {
                Vec::new()
            } else {
                inner.split(',').map(str::trim).collect()
            };
            Ok((value[..open].trim(), args))
        }
    }
}

fn expect_args(line: usize, name: &str, args: &[&str], count: usize) -> Result<()> {
    if args.len() == count {
        Ok(())
    } else {
        Err(config_err(
            line,
            format!("{name} takes {count} argument(s), got {}", args.len()),
        ))
    }
}

fn parse_mask(line: usize, value: &str) -> Result<MaskSpec> {
    let (name, args) = parse_call(line, value)?;
    match name {
        "none" => {
            expect_args(line, name, &args, 0)?;
            Ok(MaskSpec::None)
        }
        "double-slit" => {
            expect_args(line, name, &args, 2)?;
            let width = parse_positive(line, "double-slit width", args[0])?;
            let separation = parse_positive(line, "double-slit separation", args[1])?;
            if separation <= width {
                return Err(config_err(line, "double-slit separation must exceed the slit width"));
            }
            Ok(MaskSpec::DoubleSlit { width, separation })
        }
        "single-slit" => {
            expect_args(line, name, &args, 1)?;
            Ok(MaskSpec::SingleSlit {
                width: parse_positive(line, "single-slit width", args[0])?,
            })
        }
        "gaussian-aperture" => {
            expect_args(line, name, &args, 1)?;
            Ok(MaskSpec::GaussianAperture {
                sigma: parse_positive(line, "gaussian-aperture sigma", args[0])?,
            })
        }
        "table" => {
            expect_args(line, name, &args, 1)?;
            if args[0].is_empty() {
                return Err(config_err(line, "table mask needs a path"));
            }
            Ok(MaskSpec::Table {
                path: PathBuf::from(args[0]),
            })
        }
        other => Err(config_err(
            line,
            format!("unknown mask '{other}' (none, double-slit, single-slit, gaussian-aperture, table)"),
        )),
    }
}

fn parse_detector(line: usize, value: &str) -> Result<DetectorShape<f64>> {
    let (name, args) = parse_call(line, value)?;
    match name {
        "gaussian" => {
            expect_args(line, name, &args, 1)?;
            Ok(DetectorShape::Gaussian {
                sigma: parse_positive(line, "detector sigma", args[0])?,
            })
        }
        "tophat" => {
            expect_args(line, name, &args, 1)?;
            Ok(DetectorShape::TopHat {
                width: parse_positive(line, "detector width", args[0])?,
            })
        }
        "point" => {
            expect_args(line, name, &args, 0)?;
            Ok(DetectorShape::Point)
        }
        other => Err(config_err(line, format!("unknown detector '{other}' (gaussian, tophat, point)"))),
    }
}

fn parse_arm(line: usize, value: &str) -> Result<Vec<ElementSpec>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    split_top_level(value)
        .into_iter()
        .map(|item| {
            let (name, args) = parse_call(line, item)?;
            match name {
                "propagate" => {
                    expect_args(line, name, &args, 1)?;
                    Ok(ElementSpec::Propagate {
                        distance: parse_f64(line, "propagation distance", args[0])?,
                    })
                }
                "lens" => {
                    expect_args(line, name, &args, 0)?;
                    Ok(ElementSpec::Lens)
                }
                "quadratic" => {
                    expect_args(line, name, &args, 1)?;
                    let focal_length = parse_f64(line, "focal length", args[0])?;
                    if focal_length == 0.0 {
                        return Err(config_err(line, "focal length must be non-zero"));
                    }
                    Ok(ElementSpec::QuadraticPhase { focal_length })
                }
                "mask" => {
                    expect_args(line, name, &args, 0)?;
                    Ok(ElementSpec::Mask)
                }
                other => Err(config_err(
                    line,
                    format!("unknown element '{other}' (propagate, lens, quadratic, mask)"),
                )),
            }
        })
        .collect()
}

/// Splits on commas that are not inside braces.
fn split_top_level(value: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0;
    for (i, ch) in value.char_indices() {
        match ch {
            '{' => depth += 1,
            '}' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(value[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(value[start..].trim());
    parts
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(config_err(line, format!("{key}: expected true or false, got '{other}'"))),
    }
}

/// Parses and validates a scenario file. Unset keys take their defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut c = ScenarioConfig::default();
    let mut seen: Vec<&str> = Vec::new();
    let mut scenario_line = 0;
    let mut arm_line = 0;
    let mut mask_line = 0;
    let mut arms_given = false;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected 'key = value', got '{content}'")))?;
        let key = key.trim();
        let value = value.trim();
        if seen.contains(&key) {
            return Err(config_err(line, format!("duplicate key '{key}'")));
        }
        match key {
            "scenario" => {
                scenario_line = line;
                c.scenario = match value {
                    "fig3-direct" => ScenarioKind::Fig3Direct,
                    "fourier-2f" => ScenarioKind::Fourier2f,
                    "custom" => ScenarioKind::Custom,
                    other => {
                        return Err(config_err(
                            line,
                            format!("unknown scenario '{other}' (fig3-direct, fourier-2f, custom)"),
                        ))
                    }
                };
            }
            "grid.n" => {
                let n: usize = value
                    .parse()
                    .map_err(|_| config_err(line, format!("grid.n: expected an integer, got '{value}'")))?;
                if n < 8 || !n.is_power_of_two() {
                    return Err(config_err(line, format!("grid.n = {n} must be a power of two and at least 8")));
                }
                c.n = n;
            }
            "grid.extent" => c.extent = parse_positive(line, key, value)?,
            "k_z" => c.k_z = parse_positive(line, key, value)?,
            "f" => c.f = parse_positive(line, key, value)?,
            "kappa" => c.kappa = parse_positive(line, key, value)?,
            "fresnel_half_factor" => c.fresnel_half_factor = parse_bool(line, key, value)?,
            "detector" => c.detector = parse_detector(line, value)?,
            "detector.x1" => {
                c.x1 = value
                    .split(',')
                    .map(|v| parse_f64(line, key, v))
                    .collect::<Result<_>>()?;
            }
            "mask" => {
                mask_line = line;
                c.mask = parse_mask(line, value)?;
            }
            "arm1" | "arm2" => {
                arm_line = arm_line.max(line);
                arms_given = true;
                let arm = parse_arm(line, value)?;
                if key == "arm1" {
                    c.arm1 = arm;
                } else {
                    c.arm2 = arm;
                }
            }
            "edge_leakage_limit" => {
                c.edge_leakage_limit = match value {
                    "off" => None,
                    v => Some(parse_positive(line, key, v)?),
                };
            }
            "output.dir" => {
                if value.is_empty() {
                    return Err(config_err(line, "output.dir must not be empty"));
                }
                c.output_dir = PathBuf::from(value);
            }
            "output.format" => {
                c.output_format = match value {
                    "csv" => OutputFormat::Csv,
                    "csv+stages" => OutputFormat::CsvWithStages,
                    other => {
                        return Err(config_err(line, format!("output.format: expected csv or csv+stages, got '{other}'")))
                    }
                };
            }
            other => return Err(config_err(line, format!("unknown key '{other}'"))),
        }
        seen.push(key);
    }

    match c.scenario {
        ScenarioKind::Custom => {
            if c.arm1.is_empty() && c.arm2.is_empty() {
                return Err(config_err(scenario_line, "custom scenario needs arm1 and/or arm2"));
            }
        }
        _ if arms_given => {
            return Err(config_err(
                arm_line,
                format!("arm1/arm2 are only allowed with scenario = custom (scenario is {})", c.scenario.as_str()),
            ))
        }
        _ => {}
    }
    let uses_mask = c.arm1.iter().chain(&c.arm2).any(|e| *e == ElementSpec::Mask);
    if c.scenario == ScenarioKind::Custom && c.mask != MaskSpec::None && !uses_mask {
        return Err(config_err(mask_line, "mask is set but no custom arm contains 'mask'"));
    }
    if c.scenario == ScenarioKind::Custom && uses_mask && c.mask == MaskSpec::None {
        return Err(config_err(arm_line, "arm uses 'mask' but mask = none"));
    }
    Ok(c)
}

/// Reads a config file. Relative table paths are resolved against the
/// file's directory.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("reading config {}", path.display()),
        source,
    })?;
    let mut c = parse_config(&text)?;
    if let MaskSpec::Table { path: table } = &mut c.mask {
        if table.is_relative() {
            if let Some(dir) = path.parent() {
                *table = dir.join(&*table);
            }
        }
    }
    Ok(c)
}

fn fmt_detector(d: &DetectorShape<f64>) -> String {
    match d {
        DetectorShape::Gaussian { sigma } => format!("gaussian{{{sigma}}}"),
        DetectorShape::TopHat { width } => format!("tophat{{{width}}}"),
        DetectorShape::Point => "point".into(),
    }
}

impl fmt::Display for MaskSpec {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskSpec::None => write!(out, "none"),
            MaskSpec::DoubleSlit { width, separation } => write!(out, "double-slit{{{width}, {separation}}}"),
            MaskSpec::SingleSlit { width } => write!(out, "single-slit{{{width}}}"),
            MaskSpec::GaussianAperture { sigma } => write!(out, "gaussian-aperture{{{sigma}}}"),
            MaskSpec::Table { path } => write!(out, "table{{{}}}", path.display()),
        }
    }
}

fn fmt_arm(arm: &[ElementSpec]) -> String {
    arm.iter()
        .map(|e| match e {
            ElementSpec::Propagate { distance } => format!("propagate{{{distance}}}"),
            ElementSpec::Lens => "lens".into(),
            ElementSpec::QuadraticPhase { focal_length } => format!("quadratic{{{focal_length}}}"),
            ElementSpec::Mask => "mask".into(),
        })
        .collect::<Vec<_>>()
        .join(", ")
}

impl ScenarioConfig {
    /// Serializes every field; `parse_config(to_text())` reproduces `self`
    /// exactly (floats use shortest round-trip formatting).
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let x1 = self.x1.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "scenario = {}", self.scenario.as_str());
        let _ = writeln!(s, "grid.n = {}", self.n);
        let _ = writeln!(s, "grid.extent = {}", self.extent);
        let _ = writeln!(s, "k_z = {}", self.k_z);
        let _ = writeln!(s, "f = {}", self.f);
        let _ = writeln!(s, "kappa = {}", self.kappa);
        let _ = writeln!(s, "fresnel_half_factor = {}", self.fresnel_half_factor);
        let _ = writeln!(s, "detector = {}", fmt_detector(&self.detector));
        let _ = writeln!(s, "detector.x1 = {x1}");
        let _ = writeln!(s, "mask = {}", self.mask);
        if self.scenario == ScenarioKind::Custom {
            let _ = writeln!(s, "arm1 = {}", fmt_arm(&self.arm1));
            let _ = writeln!(s, "arm2 = {}", fmt_arm(&self.arm2));
        }
        match self.edge_leakage_limit {
            Some(v) => {
                let _ = writeln!(s, "edge_leakage_limit = {v}");
            }
            None => {
                let _ = writeln!(s, "edge_leakage_limit = off");
            }
        }
        let _ = writeln!(s, "output.dir = {}", self.output_dir.display());
        let format = match self.output_format {
            OutputFormat::Csv => "csv",
            OutputFormat::CsvWithStages => "csv+stages",
        };
        let _ = writeln!(s, "output.format = {format}");
        s
    }

    pub fn convention(&self) -> PropagationConvention {
        PropagationConvention::from_half_factor(self.fresnel_half_factor)
    }

    /// Arm element lists in physical order, crystal first.
    pub fn arm_specs(&self) -> (Vec<ElementSpec>, Vec<ElementSpec>) {
        let f = self.f;
        let mut arm1 = Vec::new();
        match self.scenario {
            ScenarioKind::Custom => return (self.arm1.clone(), self.arm2.clone()),
            ScenarioKind::Fig3Direct | ScenarioKind::Fourier2f => {
                // No propagation between crystal and lens: the mask sits
                // directly against the crystal.
                if self.mask != MaskSpec::None {
                    arm1.push(ElementSpec::Mask);
                }
                arm1.push(ElementSpec::Lens);
                arm1.push(ElementSpec::Propagate { distance: f });
            }
        }
        let arm2 = match self.scenario {
            ScenarioKind::Fourier2f => vec![
                ElementSpec::Propagate { distance: 2.0 * f },
                ElementSpec::QuadraticPhase { focal_length: f },
                ElementSpec::Propagate { distance: 2.0 * f },
            ],
            _ => vec![ElementSpec::Propagate { distance: f }, ElementSpec::Lens],
        };
        (arm1, arm2)
    }
}

/// Samples the configured mask; `None` for an open aperture.
pub fn mask_transmission<T: Real>(spec: &MaskSpec, grid: &TransverseGrid<T>) -> Result<Option<Field<T>>> {
    let one = Complex::new(T::one(), T::zero());
    // Half-open windows so a slit edge falling on a sample is counted once.
    let slit = |x: T, centre: f64, width: f64| {
        let lo = T::lit(centre - width / 2.0);
        let hi = T::lit(centre + width / 2.0);
        if x >= lo && x < hi {
            one
        } else {
            Complex::zero()
        }
    };
    let min_width = 2.0 * grid.spacing().to_f64_lossy();
    let half_extent = grid.extent().to_f64_lossy() / 2.0;
    let check_width = |what: &'static str, width: f64, reach: f64| {
        if width >= min_width && reach < half_extent {
            Ok(())
        } else {
            Err(Error::Unresolvable {
                what,
                value: width,
                min: min_width,
                max: 2.0 * half_extent,
            })
        }
    };
    match spec {
        MaskSpec::SingleSlit { width } => check_width("slit width", *width, width / 2.0)?,
        MaskSpec::DoubleSlit { width, separation } => {
            check_width("slit width", *width, (separation + width) / 2.0)?
        }
        MaskSpec::GaussianAperture { sigma } => check_width("aperture sigma", *sigma, 0.0)?,
        _ => {}
    }
    let field = match spec {
        MaskSpec::None => return Ok(None),
        MaskSpec::SingleSlit { width } => Field::from_position_fn(grid, |x| slit(x, 0.0, *width)),
        MaskSpec::DoubleSlit { width, separation } => Field::from_position_fn(grid, |x| {
            slit(x, -separation / 2.0, *width) + slit(x, separation / 2.0, *width)
        }),
        MaskSpec::GaussianAperture { sigma } => {
            let s = T::lit(*sigma);
            Field::from_position_fn(grid, |x| Complex::new(num_traits::Float::exp(-x * x / (T::lit(2.0) * s * s)), T::zero()))
        }
        MaskSpec::Table { path } => {
            let samples = read_mask_table(path)?;
            Field::from_position_fn(grid, |x| {
                let v = interpolate(&samples, x.to_f64_lossy());
                Complex::new(T::lit(v.re), T::lit(v.im))
            })
        }
    };
    Ok(Some(field))
}

fn read_mask_table(path: &Path) -> Result<Vec<(f64, Complex<f64>)>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: format!("reading mask table {}", path.display()),
        source,
    })?;
    let mut rows: Vec<(f64, Complex<f64>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let cols: Vec<&str> = content.split(',').map(str::trim).collect();
        let numeric: Option<Vec<f64>> = cols.iter().map(|c| c.parse::<f64>().ok()).collect();
        let Some(numeric) = numeric else {
            if rows.is_empty() {
                continue; // header
            }
            return Err(config_err(line, format!("{}: non-numeric row '{content}'", path.display())));
        };
        let t = match numeric.as_slice() {
            [_, re] => Complex::new(*re, 0.0),
            [_, re, im] => Complex::new(*re, *im),
            _ => return Err(config_err(line, format!("{}: expected 'x, re[, im]'", path.display()))),
        };
        if !(t.norm() <= 1.0 + 1e-12) {
            return Err(config_err(line, format!("{}: |t| = {} exceeds 1", path.display(), t.norm())));
        }
        if let Some((prev, _)) = rows.last() {
            if !(numeric[0] > *prev) {
                return Err(config_err(line, format!("{}: x must increase strictly", path.display())));
            }
        }
        rows.push((numeric[0], t));
    }
    if rows.len() < 2 {
        return Err(config_err(0, format!("{}: mask table needs at least two rows", path.display())));
    }
    Ok(rows)
}

fn interpolate(samples: &[(f64, Complex<f64>)], x: f64) -> Complex<f64> {
    let first = samples[0].0;
    let last = samples[samples.len() - 1].0;
    if x < first || x > last {
        return Complex::zero();
    }
    let hi = samples.partition_point(|(xs, _)| *xs < x).max(1);
    let (x0, t0) = samples[hi - 1];
    let (x1, t1) = samples[hi.min(samples.len() - 1)];
    if x1 == x0 {
        return t0;
    }
    let w = (x - x0) / (x1 - x0);
    t0 * (1.0 - w) + t1 * w
}

fn to_element<T: Real>(
    spec: &ElementSpec,
    c: &ScenarioConfig,
    mask: &Option<Field<T>>,
) -> Result<Element<T>> {
    let k_z = T::lit(c.k_z);
    Ok(match spec {
        ElementSpec::Propagate { distance } => Element::propagate_with(T::lit(*distance), k_z, c.convention()),
        ElementSpec::Lens => Element::FourierLens,
        ElementSpec::QuadraticPhase { focal_length } => Element::QuadraticPhase {
            focal_length: T::lit(*focal_length),
            k_z,
        },
        ElementSpec::Mask => Element::mask(
            mask.clone()
                .ok_or_else(|| config_err(0, "arm uses 'mask' but mask = none"))?,
        )?,
    })
}

/// Builds the setup with the detector at the first configured position.
pub fn build_setup<T: Real>(c: &ScenarioConfig) -> Result<ImagingSetup<T>> {
    let grid = make_grid(c.n, T::lit(c.extent))?;
    let mask = mask_transmission(&c.mask, &grid)?;
    let (arm1, arm2) = c.arm_specs();
    let arm1 = arm1.iter().map(|e| to_element(e, c, &mask)).collect::<Result<Vec<_>>>()?;
    let arm2 = arm2.iter().map(|e| to_element(e, c, &mask)).collect::<Result<Vec<_>>>()?;
    let source = make_biphoton_delta_correlated(&grid, T::lit(c.kappa))?;
    let shape = match c.detector {
        DetectorShape::Gaussian { sigma } => DetectorShape::Gaussian { sigma: T::lit(sigma) },
        DetectorShape::TopHat { width } => DetectorShape::TopHat { width: T::lit(width) },
        DetectorShape::Point => DetectorShape::Point,
    };
    let x1 = T::lit(c.x1.first().copied().unwrap_or(0.0));
    let detector = DetectorProfile { shape, center: x1 };
    let setup = ImagingSetup::new(grid, arm1, arm2, source, detector)?;
    Ok(match c.edge_leakage_limit {
        Some(limit) => setup.with_leakage_limit(T::lit(limit)),
        None => setup.without_leakage_guard(),
    })
}

/// Named preset shipped with the binary.
#[derive(Clone, Debug)]
pub struct BuiltinScenario {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ScenarioConfig,
}

/// Presets for the configurations discussed alongside the model. Hard-edged
/// masks scatter some weight to the window edge at any grid size, so presets
/// with slits report edge leakage instead of rejecting the run.
pub fn builtin_scenarios() -> Vec<BuiltinScenario> {
    let base = ScenarioConfig::default();
    let double_slit = ScenarioConfig {
        mask: MaskSpec::DoubleSlit {
            width: 0.4,
            separation: 2.0,
        },
        detector: DetectorShape::Point,
        edge_leakage_limit: None,
        ..base.clone()
    };
    let mut out = vec![
        BuiltinScenario {
            name: "fig3-direct",
            description: "direct imaging geometry, open aperture, gaussian detector",
            config: base.clone(),
        },
        BuiltinScenario {
            name: "fig3-double-slit",
            description: "direct imaging geometry, double slit at the crystal, point detector",
            config: double_slit.clone(),
        },
        BuiltinScenario {
            name: "fourier-2f",
            description: "2f-2f lens in arm 2, single slit, point detector",
            config: ScenarioConfig {
                scenario: ScenarioKind::Fourier2f,
                n: 256,
                mask: MaskSpec::SingleSlit { width: 0.8 },
                detector: DetectorShape::Point,
                edge_leakage_limit: None,
                ..base.clone()
            },
        },
    ];
    for (name, sigma) in [
        ("fig3-double-slit-sigma0.4", 0.4),
        ("fig3-double-slit-sigma0.2", 0.2),
        ("fig3-double-slit-sigma0.1", 0.1),
    ] {
        out.push(BuiltinScenario {
            name,
            description: "detector-width sweep of the double-slit geometry",
            config: ScenarioConfig {
                detector: DetectorShape::Gaussian { sigma },
                ..double_slit.clone()
            },
        });
    }
    out
}

pub fn builtin(name: &str) -> Option<BuiltinScenario> {
    builtin_scenarios().into_iter().find(|b| b.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, ScenarioConfig::default());
        assert_eq!(c.n, 512);
        assert_eq!(c.extent, 16.0);
        assert_eq!(c.k_z, 50.0);
        assert_eq!(c.f, 2.0);
        assert_eq!(c.kappa, 4.0);
        assert_eq!(c.detector, DetectorShape::Gaussian { sigma: 0.1 });
        assert_eq!(c.x1, vec![0.0]);
        assert_eq!(c.mask, MaskSpec::None);
        assert!(!c.fresnel_half_factor);
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = parse_config("# header\n\nkappa = 2 # inline\n   \n").unwrap();
        assert_eq!(c.kappa, 2.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("# c\ngrid.n = 500\n", 2),
            ("kappa = 4\nbogus = 1\n", 2),
            ("\n\nk_z = -3\n", 3),
            ("f = two\n", 1),
            ("mask = double-slit{0.4}\n", 1),
            ("mask = double-slit{0.4, 0.2}\n", 1),
            ("detector = lorentzian{1}\n", 1),
            ("kappa = 1\nkappa = 2\n", 2),
            ("just some words\n", 1),
            ("fresnel_half_factor = yes\n", 1),
            ("detector.x1 = 0, nan\n", 1),
            ("scenario = fig3-direct\narm1 = lens\n", 2),
            ("scenario = custom\n", 1),
        ];
        for (text, line) in cases {
            match parse_config(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: expected config error, got {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip_double_slit() {
        let text = "scenario = fig3-direct\nmask = double-slit{0.4, 2.0}\ndetector = point\ndetector.x1 = -0.5, 0, 0.25\n";
        let c = parse_config(text).unwrap();
        assert_eq!(
            c.mask,
            MaskSpec::DoubleSlit {
                width: 0.4,
                separation: 2.0
            }
        );
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn round_trip_every_builtin_and_custom() {
        for b in builtin_scenarios() {
            assert_eq!(parse_config(&b.config.to_text()).unwrap(), b.config, "{}", b.name);
        }
        let text = "scenario = custom\nmask = gaussian-aperture{0.7}\narm1 = mask, propagate{1.5}, lens\narm2 = quadratic{-3}, propagate{0.1}\nfresnel_half_factor = true\nedge_leakage_limit = 0.001\noutput.format = csv+stages\ndetector = tophat{0.3}\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.arm1.len(), 3);
        assert_eq!(c.arm2[0], ElementSpec::QuadraticPhase { focal_length: -3.0 });
        assert_eq!(parse_config(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn fig3_construction() {
        let open = build_setup::<f64>(&ScenarioConfig::default()).unwrap();
        assert_eq!(open.arm1.len(), 2);
        assert!(open.arm1.iter().all(|e| e.name() != "mask"));
        assert_eq!(open.arm2.len(), 2);
        assert!(open.source.is_diagonal());

        let slits = build_setup::<f64>(&builtin("fig3-double-slit").unwrap().config).unwrap();
        assert_eq!(slits.arm1.len(), 3);
        match &slits.arm1[0] {
            Element::Mask { transmission } => {
                let mut open_samples = 0;
                for v in transmission.values() {
                    assert!(v.im == 0.0 && (v.re == 0.0 || v.re == 1.0));
                    open_samples += (v.re == 1.0) as usize;
                }
                // two slits of 0.4 at Δx = 1/32
                assert_eq!(open_samples, 2 * 13);
            }
            other => panic!("crystal-side element is {}", other.name()),
        }
    }

    #[test]
    fn fourier_2f_arm2() {
        let s = build_setup::<f64>(&builtin("fourier-2f").unwrap().config).unwrap();
        let names: Vec<&str> = s.arm2.iter().map(|e| e.name()).collect();
        assert_eq!(names, ["propagate", "quadratic_phase", "propagate"]);
        match s.arm2[0] {
            Element::Propagate { distance, .. } => assert_eq!(distance, 4.0),
            _ => unreachable!(),
        }
    }

    #[test]
    fn fourier_2f_at_default_grid_trips_the_sampling_guard() {
        let c = parse_config("scenario = fourier-2f\n").unwrap();
        assert!(matches!(build_setup::<f64>(&c), Err(Error::SamplingGuard { .. })));
    }

    #[test]
    fn unresolvable_detector_is_rejected() {
        let c = parse_config("grid.n = 64\ndetector = gaussian{0.1}\nkappa = 1\n").unwrap();
        assert!(matches!(build_setup::<f64>(&c), Err(Error::Unresolvable { .. })));
    }

    #[test]
    fn table_mask_interpolates() {
        let dir = tempfile::tempdir().unwrap();
        let table = dir.path().join("t.csv");
        std::fs::write(&table, "x,re,im\n-1,0,0\n0,1,0\n1,0,0.5\n").unwrap();
        let cfg = dir.path().join("s.conf");
        std::fs::write(&cfg, "scenario = custom\nmask = table{t.csv}\narm1 = mask\narm2 = lens\ngrid.n = 64\nkappa = 1\ndetector = point\n").unwrap();
        let c = load_config(&cfg).unwrap();
        let grid = make_grid::<f64>(64, 16.0).unwrap();
        let t = mask_transmission(&c.mask, &grid).unwrap().unwrap();
        let at = |x: f64| t.values()[grid.nearest_index(x)];
        assert_eq!(at(0.0), Complex::new(1.0, 0.0));
        assert!((at(0.5) - Complex::new(0.5, 0.25)).norm() < 1e-15);
        assert!((at(-0.5) - Complex::new(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(at(2.0), Complex::zero());
        assert!(build_setup::<f64>(&c).is_ok());

        std::fs::write(&table, "-1,0\n0,1.5\n").unwrap();
        assert!(mask_transmission::<f64>(&c.mask, &grid).is_err());
    }
}
