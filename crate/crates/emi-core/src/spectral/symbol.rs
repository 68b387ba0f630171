use crate::error::{EmiError, Result};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Real even trigonometric polynomial `f(θ) = Σ_k f_k e^{i k·θ}` in `d` angles.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFunction {
    arity: usize,
    coefficients: Vec<(Vec<i64>, f64)>,
}

impl SymbolFunction {
    /// Requires `f_{−k} = f_k` so the symbol is real and the Toeplitz matrices symmetric.
    pub fn from_coefficients(arity: usize, coefficients: Vec<(Vec<i64>, f64)>) -> Result<Self> {
        if arity == 0 {
            return Err(EmiError::InvalidParameter("symbol needs at least one angle".into()));
        }
        let mut merged: Vec<(Vec<i64>, f64)> = Vec::new();
        for (k, c) in coefficients {
            if k.len() != arity {
                return Err(EmiError::DimensionMismatch(format!("multi-index {k:?} for arity {arity}")));
            }
            if !c.is_finite() {
                return Err(EmiError::InvalidParameter(format!("coefficient at {k:?} is not finite")));
            }
            match merged.iter_mut().find(|(m, _)| *m == k) {
                Some((_, acc)) => *acc += c,
                None => merged.push((k, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        merged.sort_by(|a, b| a.0.cmp(&b.0));
        let f = Self {
            arity,
            coefficients: merged,
        };
        for (k, c) in &f.coefficients {
            let neg: Vec<i64> = k.iter().map(|x| -x).collect();
            if f.coefficient(&neg) != *c {
                return Err(EmiError::InvalidParameter(format!("symbol is not even at {k:?}")));
            }
        }
        Ok(f)
    }

    pub fn constant(arity: usize, c: f64) -> Self {
        Self::from_coefficients(arity, vec![(vec![0; arity], c)]).expect("constant symbol")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn coefficient(&self, k: &[i64]) -> f64 {
        self.coefficients.iter().find(|(m, _)| m == k).map_or(0.0, |(_, c)| *c)
    }

    pub fn coefficients(&self) -> &[(Vec<i64>, f64)] {
        &self.coefficients
    }

    /// Largest `|k_r|` over all nonzero coefficients.
    pub fn bandwidth(&self) -> usize {
        self.coefficients
            .iter()
            .flat_map(|(k, _)| k.iter().map(|x| x.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, theta: &[f64]) -> f64 {
        debug_assert_eq!(theta.len(), self.arity);
        self.coefficients
            .iter()
            .map(|(k, c)| c * k.iter().zip(theta).map(|(&ki, &t)| ki as f64 * t).sum::<f64>().cos())
            .sum()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            arity: self.arity,
            coefficients: self.coefficients.iter().map(|(k, c)| (k.clone(), alpha * c)).collect(),
        }
    }

    /// `(min, max)` over a uniform grid with `per_axis` points per angle.
    pub fn range(&self, per_axis: usize) -> (f64, f64) {
        let samples = sample_grid(self, per_axis);
        samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

/// `2 − 2 cos θ`.
pub fn laplacian_1d_symbol() -> SymbolFunction {
    SymbolFunction::from_coefficients(1, vec![(vec![0], 2.0), (vec![1], -1.0), (vec![-1], -1.0)]).expect("valid")
}

/// `4 − 2 cos θ₁ − 2 cos θ₂`: the interior five-point stencil of the P1 stiffness.
pub fn p1_laplacian_symbol() -> SymbolFunction {
    SymbolFunction::from_coefficients(
        2,
        vec![
            (vec![0, 0], 4.0),
            (vec![1, 0], -1.0),
            (vec![-1, 0], -1.0),
            (vec![0, 1], -1.0),
            (vec![0, -1], -1.0),
        ],
    )
    .expect("valid")
}

/// Symbol values on the midpoint grid of `[−π, π]^d`, unsorted.
pub fn sample_grid(f: &SymbolFunction, per_axis: usize) -> Vec<f64> {
    let d = f.arity();
    let step = 2.0 * std::f64::consts::PI / per_axis as f64;
    let total = per_axis.pow(d as u32);
    let mut theta = vec![0.0; d];
    (0..total)
        .map(|mut idx| {
            for t in theta.iter_mut().rev() {
                *t = -std::f64::consts::PI + (idx % per_axis) as f64 * step + 0.5 * step;
                idx /= per_axis;
            }
            f.eval(&theta)
        })
        .collect()
}

/// Multilevel Toeplitz matrix `[f_{k−ℓ}]` with multi-indices in lexicographic
/// order (the first index is the outermost block level).
pub fn toeplitz_from_symbol(f: &SymbolFunction, nu: &[usize]) -> Result<CsrMatrix<f64>> {
    if nu.len() != f.arity() {
        return Err(EmiError::DimensionMismatch(format!("{} sizes for a {}-level symbol", nu.len(), f.arity())));
    }
    if nu.iter().any(|&n| n == 0) {
        return Err(EmiError::InvalidParameter("Toeplitz sizes must be positive".into()));
    }
    let n: usize = nu.iter().product();
    let unravel = |mut idx: usize| -> Vec<i64> {
        let mut out = vec![0i64; nu.len()];
        for (o, &m) in out.iter_mut().zip(nu).rev() {
            *o = (idx % m) as i64;
            idx /= m;
        }
        out
    };
    let ravel = |k: &[i64]| -> Option<usize> {
        let mut idx = 0usize;
        for (&ki, &m) in k.iter().zip(nu) {
            if ki < 0 || ki as usize >= m {
                return None;
            }
            idx = idx * m + ki as usize;
        }
        Some(idx)
    };
    let mut tb = TripletBuilder::with_capacity(n, n, n * f.coefficients().len());
    for row in 0..n {
        let k = unravel(row);
        // entry (k, ℓ) = f_{k−ℓ}, so ℓ = k − m for each coefficient index m
        for (m, c) in f.coefficients() {
            let l: Vec<i64> = k.iter().zip(m).map(|(a, b)| a - b).collect();
            if let Some(col) = ravel(&l) {
                tb.push(row, col, *c);
            }
        }
    }
    Ok(tb.build_symmetric())
}

/// Closed-form spectrum of `T_ν(4 − 2cos θ₁ − 2cos θ₂)` (or its 1D analogue), ascending.
pub fn laplacian_toeplitz_eigenvalues(nu: &[usize]) -> Vec<f64> {
    let mut vals = vec![0.0];
    for &m in nu {
        let axis: Vec<f64> = (1..=m)
            .map(|j| 2.0 - 2.0 * (j as f64 * std::f64::consts::PI / (m as f64 + 1.0)).cos())
            .collect();
        vals = vals.iter().flat_map(|&v| axis.iter().map(move |&a| v + a)).collect();
    }
    vals.sort_by(f64::total_cmp);
    vals
}
