use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Grid1D;
use crate::seed::{stream, TAG_INCREMENTS};

/// Decay of the expansion coefficients `c_l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientProfile {
    /// `c_l = 1`: truncated space-time white noise.
    Unit,
    /// `c_l = l^{-s}`.
    Power { s: f64 },
}

impl CoefficientProfile {
    pub fn coefficient(self, l: usize) -> f64 {
        match self {
            CoefficientProfile::Unit => 1.0,
            CoefficientProfile::Power { s } => (l as f64).powf(-s),
        }
    }
}

/// How `σ^l_x` is tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeRule {
    /// Exact derivative of the basis function.
    #[default]
    Analytic,
    /// Analytic derivative of mode `m` scaled by `tan(κh/2)/(κh/2)`,
    /// `κ = 2πm/Λ`. The trapezoid sum of the scaled derivative, which is
    /// what the node-to-node frame transport applies to `q`, then returns
    /// `σ^l(x_j) − σ^l(x_a)` exactly instead of with an `O(h²)` error.
    TransportConsistent,
}

/// Truncated expansion `W^i(t,x) = Σ_l c_l σ^l(x) β^i_l(t)` for
/// `i ∈ {1, 2, 3}` over the real Fourier basis of the circle, orthonormal in
/// `L²(S¹)`:
///
/// ```text
/// σ¹ = 1/√Λ,  σ^{2m} = √(2/Λ) cos(2πmx/Λ),  σ^{2m+1} = √(2/Λ) sin(2πmx/Λ)
/// ```
///
/// Basis values and their analytic derivatives are tabulated on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    coeffs: Vec<f64>,
    master_seed: u64,
    basis: Vec<Vec<f64>>,
    basis_x: Vec<Vec<f64>>,
    derivative: DerivativeRule,
    coords: Vec<f64>,
    lambda: f64,
    h: f64,
}

/// Per-step Brownian increments `Δβ^i_l`, `i = 0, 1, 2` for `W¹, W², W³`.
#[derive(Debug, Clone, PartialEq)]
pub struct Increments {
    pub dbeta: [Vec<f64>; 3],
}

/// Noise increments evaluated on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseFields {
    /// `dW¹, dW², dW³`.
    pub dw: [Vec<f64>; 3],
    /// `d∂_x W¹, d∂_x W²`.
    pub ddw: [Vec<f64>; 2],
}

impl NoiseFields {
    pub fn zero(n: usize) -> Self {
        Self {
            dw: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            ddw: [vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.dw.iter().chain(&self.ddw).all(|f| f.iter().all(|&v| v == 0.0))
    }
}

/// Basis function `σ^l` (1-based) on a circle of circumference `lambda`,
/// returned with its derivative.
pub fn basis_function(l: usize, lambda: f64, x: f64) -> (f64, f64) {
    assert!(l >= 1, "basis index is 1-based");
    if l == 1 {
        return (1.0 / lambda.sqrt(), 0.0);
    }
    let m = (l / 2) as f64;
    let k = 2.0 * PI * m / lambda;
    let amp = (2.0 / lambda).sqrt();
    if l.is_multiple_of(2) {
        (amp * (k * x).cos(), -amp * k * (k * x).sin())
    } else {
        (amp * (k * x).sin(), amp * k * (k * x).cos())
    }
}

impl NoiseModel {
    /// `L` modes with coefficients `amplitude · profile(l)`.
    pub fn new(
        g: &Grid1D,
        modes: usize,
        profile: CoefficientProfile,
        amplitude: f64,
        master_seed: u64,
    ) -> Result<Self> {
        let coeffs = (1..=modes).map(|l| amplitude * profile.coefficient(l)).collect();
        Self::with_coeffs(g, coeffs, master_seed)
    }

    pub fn with_coeffs(g: &Grid1D, coeffs: Vec<f64>, master_seed: u64) -> Result<Self> {
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::Config(format!("noise coefficient {c} is not finite")));
        }
        if !coeffs.is_empty() && !g.is_periodic() {
            return Err(Error::Config(
                "spectral noise needs a periodic grid (the basis lives on the circle)".into(),
            ));
        }
        let mut model = Self {
            coeffs,
            master_seed,
            basis: Vec::new(),
            basis_x: Vec::new(),
            derivative: DerivativeRule::Analytic,
            coords: g.coords(),
            lambda: g.extent(),
            h: g.h(),
        };
        model.tabulate();
        Ok(model)
    }

    fn tabulate(&mut self) {
        let (lambda, h) = (self.lambda, self.h);
        self.basis.clear();
        self.basis_x.clear();
        for l in 1..=self.coeffs.len() {
            let scale = match self.derivative {
                DerivativeRule::Analytic => 1.0,
                DerivativeRule::TransportConsistent => {
                    let half = PI * (l / 2) as f64 / lambda * h;
                    if half == 0.0 {
                        1.0
                    } else {
                        half.tan() / half
                    }
                }
            };
            let (s, sx): (Vec<f64>, Vec<f64>) = self
                .coords
                .iter()
                .map(|&x| {
                    let (v, d) = basis_function(l, lambda, x);
                    (v, d * scale)
                })
                .unzip();
            self.basis.push(s);
            self.basis_x.push(sx);
        }
    }

    pub fn with_derivative(mut self, rule: DerivativeRule) -> Self {
        self.derivative = rule;
        self.tabulate();
        self
    }

    pub fn derivative(&self) -> DerivativeRule {
        self.derivative
    }

    /// No noise at all (`L = 0`); valid on any grid.
    pub fn zero(g: &Grid1D) -> Self {
        Self {
            coeffs: Vec::new(),
            master_seed: 0,
            basis: Vec::new(),
            basis_x: Vec::new(),
            derivative: DerivativeRule::Analytic,
            coords: g.coords(),
            lambda: g.extent(),
            h: g.h(),
        }
    }

    pub fn modes(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn with_seed(&self, master_seed: u64) -> Self {
        Self {
            master_seed,
            ..self.clone()
        }
    }

    /// `σ^l` at the nodes, `l` 1-based.
    pub fn basis(&self, l: usize) -> &[f64] {
        &self.basis[l - 1]
    }

    pub fn basis_x(&self, l: usize) -> &[f64] {
        &self.basis_x[l - 1]
    }

    pub fn is_silent(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// `Δβ^i_l ~ N(0, dt)`, a pure function of `(master_seed, step, i, l)`.
    pub fn sample_increments(&self, dt: f64, step: u64) -> Increments {
        let modes = self.modes();
        let mut rng = stream(self.master_seed, TAG_INCREMENTS, step);
        let sd = dt.sqrt();
        let mut draw = || -> Vec<f64> {
            (0..modes)
                .map(|_| sd * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng))
                .collect()
        };
        let d1 = draw();
        let d2 = draw();
        let d3 = draw();
        Increments { dbeta: [d1, d2, d3] }
    }

    /// `dW^i(x) = Σ c_l σ^l(x) Δβ^i_l` and `d∂W^i(x) = Σ c_l σ^l_x(x) Δβ^i_l`.
    pub fn noise_fields(&self, inc: &Increments) -> NoiseFields {
        let mut out = NoiseFields::zero(self.coords.len());
        for (l, &c) in self.coeffs.iter().enumerate() {
            for i in 0..3 {
                let a = c * inc.dbeta[i][l];
                if a == 0.0 {
                    continue;
                }
                for (dst, s) in out.dw[i].iter_mut().zip(&self.basis[l]) {
                    *dst += a * s;
                }
                if i < 2 {
                    for (dst, s) in out.ddw[i].iter_mut().zip(&self.basis_x[l]) {
                        *dst += a * s;
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::inner_real;

    #[test]
    fn basis_is_orthonormal_on_grid() {
        let g = Grid1D::periodic(3.0, 64).unwrap();
        let nm = NoiseModel::new(&g, 9, CoefficientProfile::Unit, 1.0, 0).unwrap();
        for k in 1..=9 {
            for l in 1..=9 {
                let ip = inner_real(nm.basis(k), nm.basis(l), &g).unwrap();
                let expected = if k == l { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-13, "k={k} l={l} ip={ip}");
            }
        }
    }

    #[test]
    fn analytic_derivatives() {
        let lambda = 2.5;
        for l in 1..8 {
            let x = 0.37;
            let d = 1e-6;
            let fd = (basis_function(l, lambda, x + d).0 - basis_function(l, lambda, x - d).0) / (2.0 * d);
            assert!((fd - basis_function(l, lambda, x).1).abs() < 1e-7, "l={l}");
        }
    }

    #[test]
    fn increments_are_reproducible() {
        let g = Grid1D::periodic(1.0, 16).unwrap();
        let nm = NoiseModel::new(&g, 4, CoefficientProfile::Unit, 1.0, 42).unwrap();
        assert_eq!(nm.sample_increments(0.01, 7), nm.sample_increments(0.01, 7));
        assert_ne!(nm.sample_increments(0.01, 7), nm.sample_increments(0.01, 8));
        assert_ne!(
            nm.sample_increments(0.01, 7),
            nm.with_seed(43).sample_increments(0.01, 7)
        );
    }

    #[test]
    fn increment_variance() {
        let g = Grid1D::periodic(1.0, 8).unwrap();
        let nm = NoiseModel::new(&g, 1, CoefficientProfile::Unit, 1.0, 3).unwrap();
        let dt = 0.02;
        let draws = 100_000u64;
        let var = (0..draws)
            .map(|s| nm.sample_increments(dt, s).dbeta[0][0].powi(2))
            .sum::<f64>()
            / draws as f64;
        assert!(var > 0.99 * dt && var < 1.01 * dt, "var/dt = {}", var / dt);
    }

    #[test]
    fn zero_modes_give_zero_fields() {
        let g = Grid1D::line(0.0, 1.0, 8).unwrap();
        let nm = NoiseModel::zero(&g);
        let f = nm.noise_fields(&nm.sample_increments(0.1, 0));
        assert!(f.is_zero());
        let gp = Grid1D::periodic(1.0, 8).unwrap();
        let silent = NoiseModel::with_coeffs(&gp, vec![0.0; 3], 1).unwrap();
        assert!(silent.noise_fields(&silent.sample_increments(0.1, 0)).is_zero());
        assert!(NoiseModel::new(&g, 2, CoefficientProfile::Unit, 1.0, 0).is_err());
    }

    #[test]
    fn consistent_derivative_telescopes() {
        let g = Grid1D::periodic(std::f64::consts::TAU, 32).unwrap();
        let nm = NoiseModel::new(&g, 5, CoefficientProfile::Unit, 1.0, 0)
            .unwrap()
            .with_derivative(DerivativeRule::TransportConsistent);
        for l in 1..=5 {
            let s = nm.basis(l);
            let sx = nm.basis_x(l);
            let mut acc = 0.0;
            for j in 1..32 {
                acc += 0.5 * g.h() * (sx[j - 1] + sx[j]);
                assert!((acc - (s[j] - s[0])).abs() < 1e-13, "l={l} j={j}");
            }
        }
    }

    #[test]
    fn power_profile() {
        assert_eq!(CoefficientProfile::Power { s: 1.0 }.coefficient(4), 0.25);
        assert_eq!(CoefficientProfile::Unit.coefficient(9), 1.0);
    }
}
