//! Adaptive Gauss–Kronrod integration of complex (and vector-valued complex)
//! integrands on finite intervals, and truncated two-sided mode sums.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuadError {
    #[error("invalid interval [{lower}, {upper}]")]
    InvalidInterval { lower: f64, upper: f64 },
    #[error("split point {0} is not strictly inside the interval or not sorted")]
    InvalidSplit(f64),
    #[error("tolerances must be positive (rel_tol = {rel}, abs_tol = {abs})")]
    InvalidTolerance { rel: f64, abs: f64 },
    #[error("integrand returned a non-finite value at x = {0}")]
    NonFinite(f64),
    #[error("l_max must be at least 1")]
    InvalidTruncation,
    #[error("asymptotic tail needs a decay power above 1, got {0}")]
    InvalidTailPower(f64),
}

pub type Result<T> = std::result::Result<T, QuadError>;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationSpec {
    pub lower: f64,
    pub upper: f64,
    /// Interior breakpoints (branch points, kinks); sorted, strictly inside.
    pub splits: Vec<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Bisection depth limit; panels at this depth are no longer refined.
    pub max_depth: u32,
    /// Optional initial panel width, used to seed oscillatory integrands.
    pub seed_width: Option<f64>,
    /// Hard cap on the number of live panels.
    pub max_panels: usize,
}

impl IntegrationSpec {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let spec = IntegrationSpec {
            lower,
            upper,
            splits: Vec::new(),
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_depth: 200,
            seed_width: None,
            max_panels: 200_000,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_splits(mut self, mut splits: Vec<f64>) -> Result<Self> {
        splits.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        splits.dedup();
        self.splits = splits;
        self.validate()?;
        Ok(self)
    }

    pub fn with_tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Result<Self> {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_depth(mut self, max_depth: u32) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_seed_width(mut self, width: f64) -> Self {
        self.seed_width = (width.is_finite() && width > 0.0).then_some(width);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite() && self.lower < self.upper) {
            return Err(QuadError::InvalidInterval {
                lower: self.lower,
                upper: self.upper,
            });
        }
        let mut prev = self.lower;
        for &s in &self.splits {
            if !(s > prev && s < self.upper) {
                return Err(QuadError::InvalidSplit(s));
            }
            prev = s;
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(QuadError::InvalidTolerance {
                rel: self.rel_tol,
                abs: self.abs_tol,
            });
        }
        Ok(())
    }
}

/// Raised when the requested tolerance was not reached.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyWarning {
    pub error: f64,
    pub requested: f64,
    pub panels: usize,
}

impl std::fmt::Display for AccuracyWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "quadrature did not converge: error estimate {:.3e} > requested {:.3e} after {} panels",
            self.error, self.requested, self.panels
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: Complex64,
    pub error: f64,
    pub panels: usize,
    pub warning: Option<AccuracyWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VecEstimate {
    pub value: Vec<Complex64>,
    pub error: Vec<f64>,
    pub panels: usize,
    pub warning: Option<AccuracyWarning>,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
/// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Panel {
    a: f64,
    b: f64,
    depth: u32,
    value: Vec<Complex64>,
    error: Vec<f64>,
    priority: f64,
}

struct Ranked(f64, usize);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by panel index so the refinement order is deterministic
        self.0
            .total_cmp(&other.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

struct Workspace {
    fvals: Vec<Vec<Complex64>>,
}

fn gk15<F>(f: &mut F, a: f64, b: f64, dim: usize, ws: &mut Workspace) -> Result<(Vec<Complex64>, Vec<f64>)>
where
    F: FnMut(f64, &mut [Complex64]),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    // fvals[0] = centre, then pairs (center - h x_i, center + h x_i) for i = 0..7
    for (slot, x) in ws.fvals.iter_mut().zip(abscissae(center, half)) {
        slot.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        f(x, slot);
        if slot.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(QuadError::NonFinite(x));
        }
    }
    let mut value = vec![Complex64::new(0.0, 0.0); dim];
    let mut error = vec![0.0; dim];
    for d in 0..dim {
        let fc = ws.fvals[0][d];
        let mut resk = fc * WGK[7];
        let mut resg = fc * WG[3];
        let mut resabs = fc.norm() * WGK[7];
        for i in 0..7 {
            let f1 = ws.fvals[1 + 2 * i][d];
            let f2 = ws.fvals[2 + 2 * i][d];
            resk += (f1 + f2) * WGK[i];
            resabs += (f1.norm() + f2.norm()) * WGK[i];
            if i % 2 == 1 {
                resg += (f1 + f2) * WG[i / 2];
            }
        }
        let mean = resk * 0.5;
        let mut resasc = (fc - mean).norm() * WGK[7];
        for i in 0..7 {
            let f1 = ws.fvals[1 + 2 * i][d];
            let f2 = ws.fvals[2 + 2 * i][d];
            resasc += ((f1 - mean).norm() + (f2 - mean).norm()) * WGK[i];
        }
        let resabs = resabs * half.abs();
        let resasc = resasc * half.abs();
        let mut err = ((resk - resg) * half).norm();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
            err = err.max(50.0 * f64::EPSILON * resabs);
        }
        value[d] = resk * half;
        error[d] = err;
    }
    Ok((value, error))
}

fn abscissae(center: f64, half: f64) -> impl Iterator<Item = f64> {
    std::iter::once(center).chain(
        (0..7).flat_map(move |i| [center - half * XGK[i], center + half * XGK[i]]),
    )
}

/// Integrate a scalar complex function.
pub fn integrate<F>(mut f: F, spec: &IntegrationSpec) -> Result<Estimate>
where
    F: FnMut(f64) -> Complex64,
{
    let v = integrate_vec(|x, out: &mut [Complex64]| out[0] = f(x), 1, spec)?;
    Ok(Estimate {
        value: v.value[0],
        error: v.error[0],
        panels: v.panels,
        warning: v.warning,
    })
}

/// Integrate a vector-valued complex function with `dim` components. The
/// callback fills `out` for abscissa `x`. Convergence requires every component
/// to meet `max(abs_tol, rel_tol·|I_d|)`.
pub fn integrate_vec<F>(mut f: F, dim: usize, spec: &IntegrationSpec) -> Result<VecEstimate>
where
    F: FnMut(f64, &mut [Complex64]),
{
    spec.validate()?;
    let mut ws = Workspace {
        fvals: vec![vec![Complex64::new(0.0, 0.0); dim]; 15],
    };

    let mut edges = vec![spec.lower];
    edges.extend(spec.splits.iter().copied());
    edges.push(spec.upper);
    let mut seeds = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = match spec.seed_width {
            Some(h) => ((b - a) / h).ceil().clamp(1.0, 1e6) as usize,
            None => 1,
        };
        for p in 0..pieces {
            let pa = a + (b - a) * p as f64 / pieces as f64;
            let pb = if p + 1 == pieces {
                b
            } else {
                a + (b - a) * (p + 1) as f64 / pieces as f64
            };
            seeds.push((pa, pb));
        }
    }

    let mut panels: Vec<Option<Panel>> = Vec::with_capacity(seeds.len() * 4);
    let mut total = vec![Complex64::new(0.0, 0.0); dim];
    let mut total_err = vec![0.0; dim];
    for &(a, b) in &seeds {
        let (value, error) = gk15(&mut f, a, b, dim, &mut ws)?;
        for d in 0..dim {
            total[d] += value[d];
            total_err[d] += error[d];
        }
        panels.push(Some(Panel {
            a,
            b,
            depth: 0,
            value,
            error,
            priority: 0.0,
        }));
    }

    // Component weights for ranking panels, fixed from the seed pass.
    let weights: Vec<f64> = total
        .iter()
        .map(|v| 1.0 / spec.abs_tol.max(spec.rel_tol * v.norm()))
        .collect();
    let rank = |err: &[f64]| -> f64 {
        err.iter()
            .zip(&weights)
            .map(|(e, w)| e * w)
            .fold(0.0, f64::max)
    };

    let mut heap = BinaryHeap::new();
    for (i, p) in panels.iter_mut().enumerate() {
        let p = p.as_mut().unwrap();
        p.priority = rank(&p.error);
        if p.depth < spec.max_depth {
            heap.push(Ranked(p.priority, i));
        }
    }

    let converged = |total: &[Complex64], total_err: &[f64]| {
        total
            .iter()
            .zip(total_err)
            .all(|(v, e)| *e <= spec.abs_tol.max(spec.rel_tol * v.norm()))
    };

    // Error held by panels that may no longer be refined.
    let mut frozen_err = vec![0.0; dim];
    for p in panels.iter().flatten() {
        if p.depth >= spec.max_depth {
            frozen_err.iter_mut().zip(&p.error).for_each(|(f, e)| *f += e);
        }
    }
    let hopeless = |total: &[Complex64], frozen: &[f64]| {
        total
            .iter()
            .zip(frozen)
            .any(|(v, e)| *e > spec.abs_tol.max(spec.rel_tol * v.norm()))
    };

    let mut live = panels.len();
    while !converged(&total, &total_err)
        && !hopeless(&total, &frozen_err)
        && live < spec.max_panels
    {
        let Some(Ranked(_, idx)) = heap.pop() else {
            break;
        };
        let parent = panels[idx].take().unwrap();
        let mid = 0.5 * (parent.a + parent.b);
        if !(mid > parent.a && mid < parent.b) {
            // below floating-point resolution: treat as frozen
            frozen_err
                .iter_mut()
                .zip(&parent.error)
                .for_each(|(f, e)| *f += e);
            panels[idx] = Some(parent);
            continue;
        }
        for d in 0..dim {
            total[d] -= parent.value[d];
            total_err[d] -= parent.error[d];
        }
        for (a, b) in [(parent.a, mid), (mid, parent.b)] {
            let (value, error) = gk15(&mut f, a, b, dim, &mut ws)?;
            for d in 0..dim {
                total[d] += value[d];
                total_err[d] += error[d];
            }
            let depth = parent.depth + 1;
            let priority = rank(&error);
            let slot = if a == parent.a { idx } else { panels.len() };
            let panel = Panel {
                a,
                b,
                depth,
                value,
                error,
                priority,
            };
            if slot == idx {
                panels[idx] = Some(panel);
            } else {
                panels.push(Some(panel));
            }
            if depth < spec.max_depth {
                heap.push(Ranked(priority, slot));
            } else {
                for d in 0..dim {
                    frozen_err[d] += if slot == idx {
                        panels[idx].as_ref().unwrap().error[d]
                    } else {
                        panels[slot].as_ref().unwrap().error[d]
                    };
                }
            }
        }
        live += 1;
    }

    // Deterministic final reduction in interval order.
    let mut ordered: Vec<&Panel> = panels.iter().flatten().collect();
    ordered.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut value = Vec::with_capacity(dim);
    let mut error = Vec::with_capacity(dim);
    let mut buf_v = vec![Complex64::new(0.0, 0.0); ordered.len()];
    let mut buf_e = vec![0.0; ordered.len()];
    for d in 0..dim {
        for (k, p) in ordered.iter().enumerate() {
            buf_v[k] = p.value[d];
            buf_e[k] = p.error[d];
        }
        value.push(pairwise_sum(&buf_v));
        error.push(pairwise_sum_f64(&buf_e));
    }

    let mut worst: Option<(f64, f64)> = None;
    for (v, e) in value.iter().zip(&error) {
        let req = spec.abs_tol.max(spec.rel_tol * v.norm());
        if *e > req && worst.map_or(true, |(we, wr)| e / req > we / wr) {
            worst = Some((*e, req));
        }
    }
    let warning = worst.map(|(error, requested)| AccuracyWarning {
        error,
        requested,
        panels: ordered.len(),
    });
    Ok(VecEstimate {
        value,
        error,
        panels: ordered.len(),
        warning,
    })
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 8 {
        return xs.iter().fold(Complex64::new(0.0, 0.0), |acc, x| acc + x);
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum(l) + pairwise_sum(r)
}

fn pairwise_sum_f64(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (l, r) = xs.split_at(xs.len() / 2);
    pairwise_sum_f64(l) + pairwise_sum_f64(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Acceleration {
    None,
    /// The terms behave like `coefficient / |ℓ|^power` for large |ℓ| on both
    /// sides; the omitted tail is added as `2·c·∫_{l_max+1/2}^∞ x^(-p) dx`.
    AsymptoticTail { coefficient: Complex64, power: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSumSpec {
    pub l_max: usize,
    pub acceleration: Acceleration,
}

impl TailSumSpec {
    pub fn new(l_max: usize, acceleration: Acceleration) -> Result<Self> {
        if l_max < 1 {
            return Err(QuadError::InvalidTruncation);
        }
        if let Acceleration::AsymptoticTail { power, .. } = acceleration {
            if !(power > 1.0) {
                return Err(QuadError::InvalidTailPower(power));
            }
        }
        Ok(TailSumSpec { l_max, acceleration })
    }

    pub fn plain(l_max: usize) -> Result<Self> {
        Self::new(l_max, Acceleration::None)
    }
}

/// `Σ_{|ℓ| ≤ l_max} term(ℓ)`, accumulated from the outermost pair inwards.
pub fn mode_sum<F>(mut term: F, spec: &TailSumSpec) -> Complex64
where
    F: FnMut(i64) -> Complex64,
{
    let l_max = spec.l_max as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for l in (1..=l_max).rev() {
        acc += term(l) + term(-l);
    }
    acc += term(0);
    if let Acceleration::AsymptoticTail { coefficient, power } = spec.acceleration {
        let edge = l_max as f64 + 0.5;
        acc += coefficient * (2.0 * edge.powf(1.0 - power) / (power - 1.0));
    }
    acc
}
