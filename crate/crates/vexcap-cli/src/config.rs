//! Flat experiment configuration: sections `grid`, `exponent`, `weight`,
//! `task`, `solver`, `output`, plus a top-level `seed`.

use serde::{Deserialize, Serialize};

use vexcap::field::{ExponentSpec, WeightSpec};
use vexcap::grid::GridDomain;
use vexcap::mask::{RegionKind, RegionMask};
use vexcap::solver::SolverOptions;
use vexcap::{Error, Result};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub grid: GridSection,
    pub exponent: ExponentSection,
    pub weight: WeightSection,
    pub task: TaskSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_seed() -> u64 {
    42
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub extent: Vec<f64>,
    pub nodes_per_axis: Vec<usize>,
}

impl GridSection {
    /// Builds the grid, refining each axis by `scale` (spacing divided by
    /// `scale`, node alignment preserved).
    pub fn build(&self, scale: usize) -> Result<GridDomain<f64>> {
        let nodes: Vec<usize> = self
            .nodes_per_axis
            .iter()
            .map(|&n| (n.max(1) - 1) * scale.max(1) + 1)
            .collect();
        vexcap::build_grid(self.dim, &self.origin, &self.extent, &nodes)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExponentSection {
    Constant {
        value: f64,
    },
    LogAffine {
        base: f64,
        amplitude: f64,
        center: Vec<f64>,
    },
    BumpBlend {
        p_center: f64,
        p_outside: f64,
        center: Vec<f64>,
        radius: f64,
    },
}

impl ExponentSection {
    pub fn to_spec(&self) -> ExponentSpec<f64> {
        match self {
            ExponentSection::Constant { value } => ExponentSpec::Constant(*value),
            ExponentSection::LogAffine {
                base,
                amplitude,
                center,
            } => ExponentSpec::LogAffine {
                base: *base,
                amplitude: *amplitude,
                center: center.clone(),
            },
            ExponentSection::BumpBlend {
                p_center,
                p_outside,
                center,
                radius,
            } => ExponentSpec::BumpBlend {
                p_center: *p_center,
                p_outside: *p_outside,
                center: center.clone(),
                radius: *radius,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSection {
    Constant {
        value: f64,
    },
    Power {
        center: Vec<f64>,
        alpha: f64,
    },
    Piecewise {
        default: f64,
        regions: Vec<WeightRegion>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub value: f64,
}

impl WeightSection {
    pub fn to_spec(&self) -> WeightSpec<f64> {
        match self {
            WeightSection::Constant { value } => WeightSpec::Constant(*value),
            WeightSection::Power { center, alpha } => WeightSpec::Power {
                center: center.clone(),
                alpha: *alpha,
            },
            WeightSection::Piecewise { default, regions } => WeightSpec::Piecewise {
                default: *default,
                regions: regions
                    .iter()
                    .map(|r| (r.lo.clone(), r.hi.clone(), r.value))
                    .collect(),
            },
        }
    }
}

/// Resolution-independent region description.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskSpec {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Annulus {
        center: Vec<f64>,
        r1: f64,
        r2: f64,
    },
    HalfSpace {
        normal: Vec<f64>,
        offset: f64,
    },
    Segment {
        from: Vec<f64>,
        to: Vec<f64>,
        thickness: Option<f64>,
    },
    Union {
        parts: Vec<MaskSpec>,
    },
    Full {},
}

impl MaskSpec {
    pub fn build(&self, grid: &GridDomain<f64>) -> Result<RegionMask> {
        match self {
            MaskSpec::Ball { center, radius } => vexcap::ball_mask(grid, center, *radius),
            MaskSpec::Box { lo, hi } => vexcap::box_mask(grid, lo, hi),
            MaskSpec::Annulus { center, r1, r2 } => vexcap::annulus_mask(grid, center, *r1, *r2),
            MaskSpec::HalfSpace { normal, offset } => {
                vexcap::half_space_mask(grid, normal, *offset)
            }
            MaskSpec::Segment {
                from,
                to,
                thickness,
            } => vexcap::segment_mask(grid, from, to, *thickness),
            MaskSpec::Union { parts } => {
                if parts.is_empty() {
                    return Err(Error::InvalidRegion("union needs at least one part".into()));
                }
                let mut acc = parts[0].build(grid)?;
                for part in &parts[1..] {
                    acc = acc.union(&part.build(grid)?)?;
                }
                Ok(acc)
            }
            MaskSpec::Full {} => Ok(RegionMask::full(grid, RegionKind::Open)),
        }
    }
}

/// Scalar-field description for modular and norm tasks.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant {
        value: f64,
    },
    /// `f(x) = x[axis]`.
    Coordinate {
        axis: usize,
    },
    Bump {
        center: Vec<f64>,
        sigma: f64,
        amplitude: f64,
    },
    /// Product of half-period sines over the box: vanishes on the
    /// boundary.
    SineProduct {},
}

impl FieldSpec {
    pub fn build(&self, grid: &GridDomain<f64>) -> Result<vexcap::ScalarField> {
        match self {
            FieldSpec::Constant { value } => {
                Ok(vexcap::field::ScalarField::constant(*grid, *value))
            }
            FieldSpec::Coordinate { axis } => {
                let axis = *axis;
                if axis >= grid.dim() {
                    return Err(Error::InvalidGrid(format!(
                        "coordinate axis {axis} out of range for dim {}",
                        grid.dim()
                    )));
                }
                vexcap::field::ScalarField::from_fn(*grid, |x| x[axis])
            }
            FieldSpec::Bump {
                center,
                sigma,
                amplitude,
            } => {
                if center.len() != grid.dim() {
                    return Err(Error::InvalidGrid("bump center has wrong dimension".into()));
                }
                let (c, s, a) = (center.clone(), *sigma, *amplitude);
                vexcap::field::ScalarField::from_fn(*grid, move |x| {
                    let d2: f64 = x
                        .iter()
                        .zip(&c)
                        .map(|(&xi, &ci)| (xi - ci) * (xi - ci))
                        .sum();
                    a * (-d2 / (2.0 * s * s)).exp()
                })
            }
            FieldSpec::SineProduct {} => {
                let g = *grid;
                vexcap::field::ScalarField::from_fn(g, move |x| {
                    (0..g.dim()).fold(1.0, |acc, a| {
                        let t = (x[a] - g.origin(a)) / g.extent(a);
                        acc * (std::f64::consts::PI * t).sin()
                    })
                })
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSection {
    /// Weighted modular of a field over a mask (full domain by default).
    Modular {
        field: FieldSpec,
        mask: Option<MaskSpec>,
    },
    /// Luxemburg and first-order norms of a field.
    Norm {
        field: FieldSpec,
    },
    SobolevCap {
        set: MaskSpec,
    },
    RelativeCap {
        inner: MaskSpec,
        outer: MaskSpec,
    },
    Wiener {
        set: MaskSpec,
        center: Vec<f64>,
        i_max: usize,
    },
    VerifyAll {},
    ConvergenceStudy {
        target: Box<TaskSection>,
        #[serde(default = "default_levels")]
        levels: usize,
        reference: Option<f64>,
    },
}

fn default_levels() -> usize {
    3
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub max_iterations: usize,
    pub tolerance: f64,
    #[serde(default)]
    pub record_energy_trace: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverOptions::<f64>::default();
        SolverSection {
            max_iterations: d.max_iterations,
            tolerance: d.tolerance,
            record_energy_trace: false,
        }
    }
}

impl SolverSection {
    pub fn to_options(&self) -> SolverOptions<f64> {
        SolverOptions {
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            record_energy_trace: self.record_energy_trace,
            ..SolverOptions::default()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    #[serde(default)]
    pub write_minimizer: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            write_minimizer: false,
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let dim = self.grid.dim;
        if dim == 0 || dim > 3 {
            return Err(format!("grid.dim: {dim} not in 1..=3"));
        }
        for (name, len) in [
            ("grid.origin", self.grid.origin.len()),
            ("grid.extent", self.grid.extent.len()),
            ("grid.nodes_per_axis", self.grid.nodes_per_axis.len()),
        ] {
            if len != dim {
                return Err(format!("{name}: expected {dim} entries, got {len}"));
            }
        }
        if self.grid.extent.iter().any(|&e| !(e > 0.0)) {
            return Err("grid.extent: entries must be positive".into());
        }
        if self.grid.nodes_per_axis.iter().any(|&n| n < 3) {
            return Err("grid.nodes_per_axis: at least 3 nodes per axis".into());
        }
        if !(self.solver.tolerance > 0.0) {
            return Err("solver.tolerance: must be positive".into());
        }
        if self.solver.max_iterations == 0 {
            return Err("solver.max_iterations: must be positive".into());
        }
        Ok(())
    }
}
