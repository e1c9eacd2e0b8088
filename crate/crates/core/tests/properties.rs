use hasimoto_core::field::{cumint, diff1};
use hasimoto_core::hashimoto::{reconstruct_frame, transform, Regularization};
use hasimoto_core::llg::llg_rhs;
use hasimoto_core::rotation::{Frame, Generator};
use hasimoto_core::stochastic::{c_field, phase_increment, rotate_node};
use hasimoto_core::{Complex64, Grid1D, SphereField, Vec3};
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec3> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// Smooth complex field from a handful of Fourier coefficients on `[0, 2π)`.
fn smooth_q(g: &Grid1D, coef: &[(f64, f64)]) -> Vec<Complex64> {
    g.coords()
        .iter()
        .map(|&x| {
            coef.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (m, &(a, b))| {
                acc + Complex64::new(a, b) * Complex64::from_polar(1.0, m as f64 * x)
            })
        })
        .collect()
}

fn unit_field(g: &Grid1D, a: f64, b: f64) -> SphereField {
    SphereField::from_fn(g, |x| {
        let phi = a * (2.0 * x).sin() + b;
        Vec3::new(x.cos() * phi.cos(), x.sin() * phi.cos(), phi.sin())
    })
    .unwrap()
}

proptest! {
    #[test]
    fn lagrange_identity(a in vec3(), b in vec3()) {
        let lhs = a.norm_sq() * b.norm_sq();
        let rhs = a.cross(b).norm_sq() + a.dot(b).powi(2);
        prop_assert!((lhs - rhs).abs() <= 1e-14 * lhs.max(1e-300) + 1e-300);
    }

    #[test]
    fn node_rotation_keeps_frames_orthonormal(
        pr in -50.0..50.0f64, pi in -50.0..50.0f64, c in -50.0..50.0f64,
        w1 in -0.3..0.3f64, w2 in -0.3..0.3f64, psi in -0.3..0.3f64,
    ) {
        let mut f = Frame::new(Vec3::E3, Vec3::E1);
        for _ in 0..200 {
            f = rotate_node(f, Complex64::new(pr, pi), c, w1, w2, psi, 1e-3);
        }
        prop_assert!(f.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn exp_is_a_rotation(a in -10.0..10.0f64, b in -10.0..10.0f64, c in -10.0..10.0f64) {
        let r = Generator::new(a, b, c).exp();
        let rrt = r.mul(&r.transpose());
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                prop_assert!((rrt.0[i][j] - id).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn llg_rhs_is_tangent(a in -1.0..1.0f64, b in -1.0..1.0f64, alpha in 0.0..2.0f64, beta in -2.0..2.0f64) {
        let g = Grid1D::periodic(std::f64::consts::TAU, 64).unwrap();
        let u = unit_field(&g, a, b);
        let rhs = llg_rhs(u.values(), &g, alpha, beta).unwrap();
        for (v, r) in u.values().iter().zip(&rhs) {
            prop_assert!(v.dot(*r).abs() < 1e-12 * (1.0 + r.norm()));
        }
    }

    #[test]
    fn c_is_real_and_phase_vanishes_at_basepoint(
        coef in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1..5),
        alpha in 0.0..2.0f64, beta in -2.0..2.0f64,
    ) {
        let g = Grid1D::periodic(std::f64::consts::TAU, 48).unwrap();
        let q = smooth_q(&g, &coef);
        let (_, imag) = c_field(&q, &g, alpha, beta).unwrap();
        prop_assert!(imag <= 1e-12);
        let dw: Vec<f64> = g.coords().iter().map(|x| x.sin()).collect();
        let dpsi = phase_increment(&q, &g, &dw, &dw).unwrap();
        prop_assert_eq!(dpsi[g.basepoint()], 0.0);
    }

    #[test]
    fn cumint_inverts_diff1_on_linears(a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let g = Grid1D::line(-2.0, 3.0, 17).unwrap();
        let f: Vec<f64> = g.coords().iter().map(|x| a * x + b).collect();
        let back = cumint(&diff1(&f, &g).unwrap(), &g).unwrap();
        for (j, v) in back.iter().enumerate() {
            prop_assert!((v - (f[j] - f[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn transform_undoes_reconstruction(
        amp in 0.5..1.5f64, wobble in -0.3..0.3f64, twist in -0.5..0.5f64,
    ) {
        let g = Grid1D::line(0.0, 4.0, 257).unwrap();
        let q: Vec<Complex64> = g
            .coords()
            .iter()
            .map(|&x| Complex64::from_polar(amp + wobble * x.sin(), twist * (x - 0.5 * x * x / 4.0)))
            .collect();
        let frames = reconstruct_frame(&q, &g, Vec3::E3, Vec3::E1).unwrap();
        prop_assert!(frames.max_orthonormality_defect() < 1e-12);
        let back = transform(&frames.sphere().unwrap(), &g, Regularization::default()).unwrap();
        let err = q.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-2, "round trip error {err}");
    }
}
