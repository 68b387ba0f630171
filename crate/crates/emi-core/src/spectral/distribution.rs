//! Comparison of a computed spectrum with a symbol: rearranged quantiles,
//! Weyl averages over a fixed battery of test functions, outlier counts.

use std::f64::consts::PI;

use crate::error::{EmiError, Result};
use crate::spectral::symbol::{sample_grid, SymbolFunction};

pub const MAX_QUANTILES: usize = 1024;
pub const GRID_PER_AXIS: usize = 256;
/// Gauss–Legendre points per panel and panels per axis (256 points per axis).
pub const GAUSS_POINTS: usize = 16;
pub const GAUSS_PANELS: usize = 16;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Linear-interpolation quantiles at `p = (k + ½)/len` of an ascending sample.
pub fn quantiles(sorted: &[f64], len: usize) -> Vec<f64> {
    let n = sorted.len();
    if n == 0 {
        return Vec::new();
    }
    (0..len)
        .map(|k| {
            let pos = (k as f64 + 0.5) / len as f64 * n as f64 - 0.5;
            let pos = pos.clamp(0.0, (n - 1) as f64);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let t = pos - lo as f64;
            sorted[lo] * (1.0 - t) + sorted[hi] * t
        })
        .collect()
}

/// Quantiles of a weighted sample: each value carries mass `w`, positions are
/// the midpoints of the cumulative mass. Equal weights reproduce [`quantiles`].
pub fn weighted_quantiles(mut samples: Vec<(f64, f64)>, len: usize) -> Vec<f64> {
    if samples.is_empty() {
        return Vec::new();
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = samples.iter().map(|s| s.1).sum();
    let mut mids = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    for &(_, w) in &samples {
        mids.push((acc + 0.5 * w) / total);
        acc += w;
    }
    (0..len)
        .map(|k| {
            let p = (k as f64 + 0.5) / len as f64;
            let j = mids.partition_point(|&m| m <= p);
            if j == 0 {
                samples[0].0
            } else if j == samples.len() {
                samples[j - 1].0
            } else {
                let t = (p - mids[j - 1]) / (mids[j] - mids[j - 1]);
                samples[j - 1].0 * (1.0 - t) + samples[j].0 * t
            }
        })
        .collect()
}

pub fn quantile_distance(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Continuous compactly supported test function of the Weyl battery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFunction {
    /// `t^k · χ(t)` with `χ` a C¹ cutoff equal to one on `[lo + ramp, hi − ramp]`.
    Moment { k: u32, lo: f64, hi: f64, ramp: f64 },
    /// `(1 − u²)²` with `u = (t − center)/half_width`, zero for `|u| ≥ 1`.
    Bump { center: f64, half_width: f64 },
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

impl TestFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            TestFunction::Moment { k, lo, hi, ramp } => {
                let chi = smoothstep((t - lo) / ramp) * smoothstep((hi - t) / ramp);
                if chi == 0.0 {
                    0.0
                } else {
                    t.powi(k as i32) * chi
                }
            }
            TestFunction::Bump { center, half_width } => {
                let u = (t - center) / half_width;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - u * u).powi(2)
                }
            }
        }
    }

    pub fn id(&self) -> String {
        match *self {
            TestFunction::Moment { k, .. } => format!("moment{k}"),
            TestFunction::Bump { center, .. } => format!("bump@{center:.3}"),
        }
    }
}

/// `t^k·χ(t)` for `k = 0..4` with `χ` supported on `[−1, 1.25·fmax]`, plus
/// bumps at a quarter, half and three quarters of `fmax`.
pub fn weyl_battery(fmax: f64) -> Vec<TestFunction> {
    let hi = 1.25 * fmax.max(1e-3);
    let mut battery: Vec<TestFunction> = (0..=4)
        .map(|k| TestFunction::Moment {
            k,
            lo: -1.0,
            hi,
            ramp: 0.5,
        })
        .collect();
    let hw = 0.15 * fmax.max(1e-3);
    for frac in [0.25, 0.5, 0.75] {
        battery.push(TestFunction::Bump {
            center: frac * fmax,
            half_width: hw,
        });
    }
    battery
}

/// Target distribution against which a spectrum is compared.
pub trait SpectralTarget {
    /// Quantile function sampled at `p = (k + ½)/len`.
    fn quantiles(&self, len: usize) -> Vec<f64>;
    /// `(1/μ(D)) ∫_D F(f)`.
    fn average(&self, f: &TestFunction) -> f64;
    /// `(min, max)` of the symbol.
    fn range(&self) -> (f64, f64);
}

/// Composite Gauss–Legendre nodes and weights on `[−π, π]`, weights normalized to sum 1.
fn axis_rule() -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(GAUSS_POINTS);
    let width = 2.0 * PI / GAUSS_PANELS as f64;
    let mut nodes = Vec::with_capacity(GAUSS_POINTS * GAUSS_PANELS);
    let mut weights = Vec::with_capacity(GAUSS_POINTS * GAUSS_PANELS);
    for p in 0..GAUSS_PANELS {
        let mid = -PI + (p as f64 + 0.5) * width;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(mid + 0.5 * width * xi);
            weights.push(0.5 * wi / GAUSS_PANELS as f64);
        }
    }
    (nodes, weights)
}

/// Normalized tensor-product quadrature average over `[−π, π]^d`.
fn symbol_average(f: &SymbolFunction, test: &TestFunction) -> f64 {
    let (x, w) = axis_rule();
    let m = x.len();
    let d = f.arity();
    let total = m.pow(d as u32);
    let mut theta = vec![0.0; d];
    let mut sum = 0.0;
    for mut idx in 0..total {
        let mut weight = 1.0;
        for t in theta.iter_mut().rev() {
            let q = idx % m;
            idx /= m;
            *t = x[q];
            weight *= w[q];
        }
        sum += weight * test.eval(f.eval(&theta));
    }
    sum
}

impl SpectralTarget for SymbolFunction {
    fn quantiles(&self, len: usize) -> Vec<f64> {
        let mut s = sample_grid(self, grid_per_axis(self.arity()));
        s.sort_by(f64::total_cmp);
        quantiles(&s, len)
    }

    fn average(&self, f: &TestFunction) -> f64 {
        symbol_average(self, f)
    }

    fn range(&self) -> (f64, f64) {
        SymbolFunction::range(self, grid_per_axis(self.arity()))
    }
}

fn grid_per_axis(d: usize) -> usize {
    match d {
        1 => 1 << 16,
        2 => GRID_PER_AXIS,
        _ => 24,
    }
}

/// Piecewise symbol `g(x, t_0, …, t_N) = Σ f^i(t_i)·χ_{[r̂_{i−1}, r̂_i]}(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedSymbol {
    pieces: Vec<(SymbolFunction, f64)>,
}

impl CombinedSymbol {
    pub fn new(pieces: Vec<(SymbolFunction, f64)>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(EmiError::InvalidParameter("combined symbol needs at least one piece".into()));
        }
        if pieces.iter().any(|(_, r)| !(*r > 0.0 && *r <= 1.0)) {
            return Err(EmiError::InvalidParameter("weights must lie in (0, 1]".into()));
        }
        let total: f64 = pieces.iter().map(|(_, r)| r).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(EmiError::InvalidParameter(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { pieces })
    }

    /// Weights `r_i = n_i / n` from block sizes.
    pub fn from_block_sizes(symbols: Vec<SymbolFunction>, sizes: &[usize]) -> Result<Self> {
        if symbols.len() != sizes.len() {
            return Err(EmiError::DimensionMismatch("one symbol per block required".into()));
        }
        let n: usize = sizes.iter().sum();
        Self::new(symbols.into_iter().zip(sizes).map(|(f, &s)| (f, s as f64 / n as f64)).collect())
    }

    pub fn pieces(&self) -> &[(SymbolFunction, f64)] {
        &self.pieces
    }

    /// `r̂_{−1} = 0, r̂_i = r_0 + … + r_i`, ending at 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut out = vec![0.0];
        for (_, r) in &self.pieces {
            acc += r;
            out.push(acc);
        }
        *out.last_mut().expect("nonempty") = 1.0;
        out
    }

    /// Evaluates the piece selected by `x ∈ [0, 1]` at its own angles `t[i]`.
    pub fn eval(&self, x: f64, t: &[Vec<f64>]) -> f64 {
        let bp = self.breakpoints();
        let i = (bp.partition_point(|&b| b <= x).max(1) - 1).min(self.pieces.len() - 1);
        self.pieces[i].0.eval(&t[i])
    }
}

impl SpectralTarget for CombinedSymbol {
    fn quantiles(&self, len: usize) -> Vec<f64> {
        let mut all = Vec::new();
        for (f, r) in &self.pieces {
            let s = sample_grid(f, grid_per_axis(f.arity()));
            let w = r / s.len() as f64;
            all.extend(s.into_iter().map(|v| (v, w)));
        }
        weighted_quantiles(all, len)
    }

    fn average(&self, test: &TestFunction) -> f64 {
        self.pieces.iter().map(|(f, r)| r * symbol_average(f, test)).sum()
    }

    fn range(&self) -> (f64, f64) {
        self.pieces
            .iter()
            .map(|(f, _)| SpectralTarget::range(f))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (c, d)| (a.min(c), b.max(d)))
    }
}

/// The constant symbol `c` (e.g. `1` for a well-preconditioned operator).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSymbol(pub f64);

impl SpectralTarget for ConstantSymbol {
    fn quantiles(&self, len: usize) -> Vec<f64> {
        vec![self.0; len]
    }

    fn average(&self, f: &TestFunction) -> f64 {
        f.eval(self.0)
    }

    fn range(&self) -> (f64, f64) {
        (self.0, self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionReport {
    pub sorted_eigs: Vec<f64>,
    pub eig_quantiles: Vec<f64>,
    pub symbol_quantiles: Vec<f64>,
    pub quantile_distance: f64,
    /// `(test function id, |matrix average − symbol average|)`.
    pub test_function_gaps: Vec<(String, f64)>,
    pub delta: f64,
    /// Eigenvalues farther than `delta` from the symbol range.
    pub outlier_count: usize,
}

impl DistributionReport {
    pub fn outlier_fraction(&self) -> f64 {
        self.outlier_count as f64 / self.sorted_eigs.len().max(1) as f64
    }
}

pub fn distribution_distance(eigs: &[f64], target: &dyn SpectralTarget, delta: f64) -> Result<DistributionReport> {
    if eigs.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(EmiError::InvalidParameter("eigenvalues must be sorted ascending".into()));
    }
    let len = eigs.len().clamp(1, MAX_QUANTILES);
    let eig_quantiles = quantiles(eigs, len);
    let symbol_quantiles = target.quantiles(len);
    let quantile_distance = quantile_distance(&eig_quantiles, &symbol_quantiles);
    let (lo, hi) = target.range();
    let battery = weyl_battery(hi.max(lo.abs()));
    let test_function_gaps = battery
        .iter()
        .map(|f| {
            let avg = eigs.iter().map(|&l| f.eval(l)).sum::<f64>() / eigs.len().max(1) as f64;
            (f.id(), (avg - target.average(f)).abs())
        })
        .collect();
    let outlier_count = eigs.iter().filter(|&&l| l < lo - delta || l > hi + delta).count();
    Ok(DistributionReport {
        sorted_eigs: eigs.to_vec(),
        eig_quantiles,
        symbol_quantiles,
        quantile_distance,
        test_function_gaps,
        delta,
        outlier_count,
    })
}
