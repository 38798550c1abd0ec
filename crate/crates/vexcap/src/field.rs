//! Grid-sampled fields: scalar data, variable exponents, weights, and
//! finite-difference gradients.

use crate::error::{Error, Result};
use crate::grid::{GridDomain, MAX_DIM};
use crate::scalar::Scalar;

/// One real value per grid node, finite everywhere.
#[derive(Clone, Debug)]
pub struct ScalarField<T> {
    grid: GridDomain<T>,
    values: Vec<T>,
}

impl<T: Scalar> ScalarField<T> {
    pub fn new(grid: GridDomain<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field length {} does not match grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("field value at node {i}")));
        }
        Ok(ScalarField { grid, values })
    }

    /// Samples `f` at every node coordinate.
    pub fn from_fn<F: Fn(&[T]) -> T>(grid: GridDomain<T>, f: F) -> Result<Self> {
        let dim = grid.dim();
        let values = (0..grid.len())
            .map(|i| {
                let p = grid.point(i);
                f(&p[..dim])
            })
            .collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: GridDomain<T>, c: T) -> Self {
        ScalarField {
            values: vec![c; grid.len()],
            grid,
        }
    }

    pub fn zeros(grid: GridDomain<T>) -> Self {
        Self::constant(grid, T::zero())
    }

    pub fn grid(&self) -> &GridDomain<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise `min(1, f)`: the admissible-class truncation.
    pub fn truncate_at_one(&self) -> Self {
        self.map(|v| v.min(T::one()))
    }
}

/// Per-node gradient vectors, stored per axis.
#[derive(Clone, Debug)]
pub struct VectorField<T> {
    grid: GridDomain<T>,
    comps: Vec<Vec<T>>,
}

impl<T: Scalar> VectorField<T> {
    pub fn grid(&self) -> &GridDomain<T> {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[T] {
        &self.comps[axis]
    }

    /// Euclidean norm of the component vector at every node.
    pub fn magnitude(&self) -> ScalarField<T> {
        let n = self.grid.len();
        let mut values = vec![T::zero(); n];
        for comp in &self.comps {
            for (v, &c) in values.iter_mut().zip(comp) {
                *v = *v + c * c;
            }
        }
        for v in values.iter_mut() {
            *v = v.sqrt();
        }
        ScalarField {
            grid: self.grid,
            values,
        }
    }
}

/// Forward differences per axis, one-sided backward at the far face, so a
/// gradient vector exists at every node and affine fields are differenced
/// exactly at interior nodes.
pub fn gradient<T: Scalar>(f: &ScalarField<T>) -> VectorField<T> {
    let grid = f.grid;
    let dim = grid.dim();
    let n = grid.len();
    let vals = &f.values;
    let mut comps = Vec::with_capacity(dim);
    for a in 0..dim {
        let stride = grid.stride(a);
        let na = grid.nodes(a);
        let inv_h = T::one() / grid.spacing(a);
        let mut c = vec![T::zero(); n];
        for idx in 0..n {
            let ia = (idx / stride) % na;
            c[idx] = if ia + 1 < na {
                (vals[idx + stride] - vals[idx]) * inv_h
            } else {
                (vals[idx] - vals[idx - stride]) * inv_h
            };
        }
        comps.push(c);
    }
    VectorField { grid, comps }
}

/// Analytic exponent profiles that keep `p > 1` and a controlled
/// log-Hoelder modulus.
#[derive(Clone, Debug)]
pub enum ExponentSpec<T> {
    Constant(T),
    /// `p(x) = base + amplitude / (1 + |ln |x - center||)`; equals `base`
    /// at the center and `base + amplitude` on the unit sphere around it.
    LogAffine {
        base: T,
        amplitude: T,
        center: Vec<T>,
    },
    /// Smooth bump blend: `p_center` at the center decaying to `p_outside`
    /// at distance `radius` and beyond.
    BumpBlend {
        p_center: T,
        p_outside: T,
        center: Vec<T>,
        radius: T,
    },
}

impl<T: Scalar> ExponentSpec<T> {
    fn eval(&self, point: &[T]) -> T {
        match self {
            ExponentSpec::Constant(p) => *p,
            ExponentSpec::LogAffine {
                base,
                amplitude,
                center,
            } => {
                let r = dist(point, center);
                if r == T::zero() {
                    *base
                } else {
                    *base + *amplitude / (T::one() + r.ln().abs())
                }
            }
            ExponentSpec::BumpBlend {
                p_center,
                p_outside,
                center,
                radius,
            } => {
                let t = dist(point, center) / *radius;
                if t >= T::one() {
                    *p_outside
                } else {
                    let phi = (T::one() - T::one() / (T::one() - t * t)).exp();
                    *p_outside + (*p_center - *p_outside) * phi
                }
            }
        }
    }
}

fn dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(T::zero(), |s, d| s + d)
        .sqrt()
}

/// Variable exponent sampled on a grid, with its range and an estimated
/// log-Hoelder modulus.
#[derive(Clone, Debug)]
pub struct ExponentField<T> {
    field: ScalarField<T>,
    p_min: T,
    p_max: T,
    log_holder_c: T,
}

impl<T: Scalar> ExponentField<T> {
    pub fn field(&self) -> &ScalarField<T> {
        &self.field
    }

    pub fn grid(&self) -> &GridDomain<T> {
        self.field.grid()
    }

    pub fn values(&self) -> &[T] {
        self.field.values()
    }

    pub fn p_min(&self) -> T {
        self.p_min
    }

    pub fn p_max(&self) -> T {
        self.p_max
    }

    pub fn log_holder_c(&self) -> T {
        self.log_holder_c
    }

    /// Exponent at the node nearest to the given point.
    pub fn at_nearest_node(&self, point: &[T]) -> T {
        let grid = self.grid();
        let mut multi = [0usize; MAX_DIM];
        for a in 0..grid.dim() {
            let t = ((point[a] - grid.origin(a)) / grid.spacing(a)).round();
            let i = t.max(T::zero()).as_f64() as usize;
            multi[a] = i.min(grid.nodes(a) - 1);
        }
        self.values()[grid.index(&multi[..grid.dim()])]
    }

    /// Conjugate exponent field `q = p / (p - 1)`.
    pub fn conjugate(&self) -> ExponentField<T> {
        let vals = self
            .values()
            .iter()
            .map(|&p| p / (p - T::one()))
            .collect::<Vec<_>>();
        let q = ScalarField::new(*self.grid(), vals).expect("conjugate of p > 1 is finite");
        let q_min = q.min_value();
        let q_max = q.max_value();
        ExponentField {
            field: q,
            p_min: q_min,
            p_max: q_max,
            log_holder_c: self.log_holder_c,
        }
    }
}

/// Samples an exponent profile, recording its observed range and a
/// pairwise estimate of the log-Hoelder modulus. Rejects profiles that do
/// not stay strictly above 1.
pub fn sample_exponent<T: Scalar>(
    spec: &ExponentSpec<T>,
    grid: &GridDomain<T>,
) -> Result<ExponentField<T>> {
    let field = ScalarField::from_fn(*grid, |p| spec.eval(p))
        .map_err(|_| Error::InvalidExponent("profile produced non-finite values".into()))?;
    let p_min = field.min_value();
    let p_max = field.max_value();
    if !(p_min > T::one()) {
        return Err(Error::InvalidExponent(format!(
            "exponent must stay strictly above 1, observed minimum {p_min}"
        )));
    }
    let log_holder_c = match spec {
        ExponentSpec::Constant(_) => T::zero(),
        _ => estimate_log_holder(&field),
    };
    Ok(ExponentField {
        field,
        p_min,
        p_max,
        log_holder_c,
    })
}

/// Max of `|p(x) - p(y)| * (-ln |x - y|)` over a deterministic node
/// subsample restricted to `|x - y| <= 1/2`.
fn estimate_log_holder<T: Scalar>(field: &ScalarField<T>) -> T {
    let grid = field.grid();
    let n = grid.len();
    let step = (n / 256).max(1);
    let sample: Vec<usize> = (0..n).step_by(step).collect();
    let half = T::of(0.5);
    let mut worst = T::zero();
    for (k, &i) in sample.iter().enumerate() {
        let pi = grid.point(i);
        for &j in &sample[k + 1..] {
            let pj = grid.point(j);
            let r = dist(&pi[..grid.dim()], &pj[..grid.dim()]);
            if r <= T::zero() || r > half {
                continue;
            }
            let m = (field.values()[i] - field.values()[j]).abs() * (-r.ln());
            worst = worst.max(m);
        }
    }
    worst
}

/// Analytic weight profiles.
#[derive(Clone, Debug)]
pub enum WeightSpec<T> {
    Constant(T),
    /// `|x - center|^alpha`; the sample at a singular node is the average
    /// over its face neighbors so the field stays finite and positive.
    Power {
        center: Vec<T>,
        alpha: T,
    },
    /// Piecewise constant over axis-aligned boxes, first match wins.
    Piecewise {
        default: T,
        regions: Vec<(Vec<T>, Vec<T>, T)>,
    },
}

impl<T: Scalar> WeightSpec<T> {
    /// Evaluates the weight at a point; `h` is the local lattice spacing
    /// used to regularize singular nodes of power weights.
    fn eval(&self, point: &[T], h: &[T]) -> T {
        match self {
            WeightSpec::Constant(c) => *c,
            WeightSpec::Power { center, alpha } => {
                let r = dist(point, center);
                if r == T::zero() {
                    // average of the face-neighbor samples
                    let dim = point.len();
                    let mut acc = T::zero();
                    for (a, &ha) in h.iter().enumerate().take(dim) {
                        let _ = a;
                        acc = acc + T::of(2.0) * ha.powf(*alpha);
                    }
                    acc / T::of(2.0 * dim as f64)
                } else {
                    r.powf(*alpha)
                }
            }
            WeightSpec::Piecewise { default, regions } => {
                for (lo, hi, v) in regions {
                    let inside = point
                        .iter()
                        .zip(lo.iter().zip(hi))
                        .all(|(&x, (&l, &u))| x >= l && x <= u);
                    if inside {
                        return *v;
                    }
                }
                *default
            }
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            WeightSpec::Constant(c) => {
                if !(*c > T::zero()) {
                    return Err(Error::InvalidWeight(
                        "constant weight must be positive".into(),
                    ));
                }
            }
            WeightSpec::Power { center, .. } => {
                if center.len() != dim {
                    return Err(Error::InvalidWeight(
                        "power center has wrong dimension".into(),
                    ));
                }
            }
            WeightSpec::Piecewise { default, regions } => {
                if !(*default > T::zero()) {
                    return Err(Error::InvalidWeight(
                        "default weight must be positive".into(),
                    ));
                }
                for (lo, hi, v) in regions {
                    if lo.len() != dim || hi.len() != dim {
                        return Err(Error::InvalidWeight(
                            "region corner has wrong dimension".into(),
                        ));
                    }
                    if !(*v > T::zero()) {
                        return Err(Error::InvalidWeight(
                            "region weight must be positive".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Positive weight sampled on a grid together with the outcome of the dual
/// integrability check.
#[derive(Clone, Debug)]
pub struct WeightField<T> {
    field: ScalarField<T>,
    dual_integrable: bool,
}

impl<T: Scalar> WeightField<T> {
    pub fn field(&self) -> &ScalarField<T> {
        &self.field
    }

    pub fn grid(&self) -> &GridDomain<T> {
        self.field.grid()
    }

    pub fn values(&self) -> &[T] {
        self.field.values()
    }

    pub fn dual_integrable(&self) -> bool {
        self.dual_integrable
    }

    /// Wraps an existing positive field; the dual check is inherited from
    /// the caller (used by generic test harnesses, not by the samplers).
    pub fn from_field(field: ScalarField<T>, dual_integrable: bool) -> Result<Self> {
        if let Some(i) = field.values().iter().position(|&v| !(v > T::zero())) {
            return Err(Error::InvalidWeight(format!(
                "weight must be positive everywhere, node {i} is not"
            )));
        }
        Ok(WeightField {
            field,
            dual_integrable,
        })
    }
}

/// Samples a weight profile and runs the dual integrability check: the
/// quadrature of `w^(-1/(p-1))` must not diverge when the sampling lattice
/// is refined twice.
pub fn sample_weight<T: Scalar>(
    spec: &WeightSpec<T>,
    grid: &GridDomain<T>,
    p: &ExponentField<T>,
) -> Result<WeightField<T>> {
    spec.validate(grid.dim())?;
    let dim = grid.dim();
    let mut h = [T::zero(); MAX_DIM];
    for a in 0..dim {
        h[a] = grid.spacing(a);
    }
    let field = ScalarField::from_fn(*grid, |pt| spec.eval(pt, &h[..dim]))
        .map_err(|_| Error::InvalidWeight("weight produced non-finite values".into()))?;
    if let Some(i) = field.values().iter().position(|&v| !(v > T::zero())) {
        return Err(Error::InvalidWeight(format!(
            "weight must be positive everywhere, node {i} is not"
        )));
    }
    let dual_integrable = dual_check(spec, grid, p)?;
    if !dual_integrable {
        return Err(Error::InvalidWeight(
            "dual quadrature of w^(-1/(p-1)) diverges under refinement".into(),
        ));
    }
    Ok(WeightField {
        field,
        dual_integrable,
    })
}

/// Streams the dual quadrature at the base spacing and at two dyadic
/// refinements; the integral is declared divergent when the increments do
/// not shrink.
fn dual_check<T: Scalar>(
    spec: &WeightSpec<T>,
    grid: &GridDomain<T>,
    p: &ExponentField<T>,
) -> Result<bool> {
    let mut totals = [T::zero(); 3];
    for (level, total) in totals.iter_mut().enumerate() {
        *total = dual_quadrature(spec, grid, p, 1 << level)?;
    }
    let d1 = totals[1] - totals[0];
    let d2 = totals[2] - totals[1];
    let scale = totals[0].max(T::one());
    if d1 <= T::of(1e-8) * scale {
        return Ok(true);
    }
    Ok(d2 < T::of(0.9) * d1)
}

fn dual_quadrature<T: Scalar>(
    spec: &WeightSpec<T>,
    grid: &GridDomain<T>,
    p: &ExponentField<T>,
    refine: usize,
) -> Result<T> {
    let dim = grid.dim();
    let mut counts = [1usize; MAX_DIM];
    let mut h = [T::zero(); MAX_DIM];
    let mut vol = T::one();
    for a in 0..dim {
        counts[a] = (grid.nodes(a) - 1) * refine + 1;
        h[a] = grid.extent(a) / T::of((counts[a] - 1) as f64);
        vol = vol * h[a];
    }
    let total: usize = counts[..dim].iter().product();
    let mut acc = T::zero();
    let mut point = [T::zero(); MAX_DIM];
    for lin in 0..total {
        let mut rest = lin;
        for a in 0..dim {
            let ia = rest % counts[a];
            rest /= counts[a];
            point[a] = grid.origin(a) + T::of(ia as f64) * h[a];
        }
        let w = spec.eval(&point[..dim], &h[..dim]);
        if !w.is_finite() || w <= T::zero() {
            return Err(Error::InvalidWeight(
                "weight not positive and finite at a refinement sample".into(),
            ));
        }
        let pe = p.at_nearest_node(&point[..dim]);
        acc = acc + w.powf(-T::one() / (pe - T::one()));
    }
    Ok(acc * vol)
}
