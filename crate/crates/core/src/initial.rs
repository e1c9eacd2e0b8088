//! Initial data families used by experiments and tests.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid1D, SphereField, Vec3};
use crate::hashimoto::reconstruct_frame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `u(x) = cos(k(x−a)) m + sin(k(x−a)) e0`.
    GreatCircle { k: f64, m: Vec3, e0: Vec3 },
    /// Sphere map whose curvature and torsion are both `sech` bumps:
    /// `Θ = A sech((x−c)/w)`, `η = τ sech((x−c)/w)`. Built by integrating
    /// the frame equation from the basepoint with `u(a) = e₃`, `e(a) = e₁`.
    LocalizedTwist {
        amplitude: f64,
        width: f64,
        torsion: f64,
        center: f64,
    },
    /// Explicit node values (normalized on load).
    Nodes(Vec<Vec3>),
}

impl InitialData {
    pub fn great_circle(k: f64) -> Self {
        InitialData::GreatCircle {
            k,
            m: Vec3::E1,
            e0: Vec3::E2,
        }
    }

    pub fn twist_default() -> Self {
        InitialData::LocalizedTwist {
            amplitude: 1.0,
            width: 1.0,
            torsion: 0.5,
            center: 0.0,
        }
    }

    /// Complex profile `q0` for the twist (its own Hashimoto image in the
    /// continuum limit).
    pub fn twist_profile(g: &Grid1D, amplitude: f64, width: f64, torsion: f64, center: f64) -> Vec<Complex64> {
        let xa = g.x_basepoint();
        // ∫_a^x τ sech((y−c)/w) dy = 2τw [atan(tanh((y−c)/2w))]_a^x
        let prim = |x: f64| 2.0 * torsion * width * (((x - center) / (2.0 * width)).tanh()).atan();
        g.coords()
            .iter()
            .map(|&x| {
                let s = 1.0 / ((x - center) / width).cosh();
                Complex64::from_polar(amplitude * s, prim(x) - prim(xa))
            })
            .collect()
    }

    pub fn sample(&self, g: &Grid1D) -> Result<SphereField> {
        match self {
            InitialData::GreatCircle { k, m, e0 } => {
                let xa = g.x_basepoint();
                SphereField::from_fn(g, |x| {
                    let s = k * (x - xa);
                    *m * s.cos() + *e0 * s.sin()
                })
            }
            InitialData::LocalizedTwist {
                amplitude,
                width,
                torsion,
                center,
            } => {
                if !(*width > 0.0) {
                    return Err(Error::Config(format!("twist width must be positive, got {width}")));
                }
                let q = Self::twist_profile(g, *amplitude, *width, *torsion, *center);
                reconstruct_frame(&q, g, Vec3::E3, Vec3::E1)?.sphere()
            }
            InitialData::Nodes(v) => {
                if v.len() != g.n() {
                    return Err(Error::ShapeMismatch {
                        expected: g.n(),
                        got: v.len(),
                    });
                }
                SphereField::from_normalized(v.clone())
            }
        }
    }
}
