use approx::assert_relative_eq;
use plap_core::energy::Functional;
use plap_core::grid_space::{diff, fourier_project, lp_norm, mean_zero_project, riesz_solve, w1p_norm};
use plap_core::spectrum::eigenvalue_formula;
use plap_core::{Builtin, GridFn64, Mesh64, ProblemSpec64, TimeFn64};
use proptest::prelude::*;

fn grid(m: usize, values: Vec<f64>) -> GridFn64 {
    GridFn64::new(Mesh64::new(2.0, m).unwrap(), 1, values).unwrap()
}

fn samples() -> impl Strategy<Value = Vec<f64>> {
    (8usize..40).prop_flat_map(|m| prop::collection::vec(-3.0f64..3.0, m))
}

fn even_samples() -> impl Strategy<Value = Vec<f64>> {
    (4usize..20).prop_flat_map(|m| prop::collection::vec(-3.0f64..3.0, 2 * m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn periodic_differences_sum_to_zero(v in samples()) {
        let x = grid(v.len(), v);
        let s: f64 = diff(&x).values().iter().sum();
        prop_assert!(s.abs() < 1e-9);
    }

    #[test]
    fn mean_split_reassembles(v in samples()) {
        let x = grid(v.len(), v.clone());
        let (mean, rest) = mean_zero_project(&x);
        let s: f64 = rest.values().iter().sum();
        prop_assert!(s.abs() < 1e-9);
        for (a, b) in rest.values().iter().zip(&v) {
            prop_assert!((a + mean[0] - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_projection_is_idempotent(v in even_samples(), k in 1usize..3) {
        let x = grid(v.len(), v);
        let once = fourier_project(&x, &[0, k]).unwrap();
        let twice = fourier_project(&once, &[0, k]).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn norms_are_absolutely_homogeneous(v in samples(), a in -4.0f64..4.0, p in 1.2f64..5.0) {
        let x = grid(v.len(), v);
        let ax = x.scaled(a);
        assert_relative_eq!(lp_norm(&ax, p).unwrap(), a.abs() * lp_norm(&x, p).unwrap(), epsilon = 1e-9, max_relative = 1e-9);
        assert_relative_eq!(w1p_norm(&ax, p).unwrap(), a.abs() * w1p_norm(&x, p).unwrap(), epsilon = 1e-9, max_relative = 1e-9);
    }

    #[test]
    fn riesz_map_inverts_its_operator(v in samples()) {
        let r = grid(v.len(), v);
        let y = riesz_solve(&r);
        let h2 = r.mesh().h().powi(2);
        let m = r.len();
        for i in 0..m {
            let (l, c, n) = (y.values()[(i + m - 1) % m], y.values()[i], y.values()[(i + 1) % m]);
            let back = c - (n - 2.0 * c + l) / h2;
            prop_assert!((back - r.values()[i]).abs() < 1e-8 * (1.0 + r.sup_norm()));
        }
    }

    #[test]
    fn csv_round_trip_is_exact(v in samples()) {
        let x = grid(v.len(), v);
        let back = GridFn64::read_csv(x.to_csv_string().unwrap().as_bytes()).unwrap();
        prop_assert_eq!(back.values(), x.values());
        prop_assert!(back.mesh().compatible(x.mesh()));
    }

    #[test]
    fn eigenvalues_scale_with_index(n in 1usize..6, p in 1.3f64..4.0, b in 0.5f64..8.0) {
        let l1 = eigenvalue_formula(1, p, b).unwrap();
        let ln = eigenvalue_formula(n, p, b).unwrap();
        assert_relative_eq!(ln, (n as f64).powf(p) * l1, max_relative = 1e-12);
    }

    #[test]
    fn smooth_energy_matches_its_gradient(v in samples(), w in samples(), p in 1.5f64..4.0) {
        let m = v.len().min(w.len());
        let x = grid(m, v[..m].to_vec());
        let d = grid(m, w[..m].to_vec());
        let spec = ProblemSpec64::base(p, 2.0, TimeFn64::Const(1.0));
        let model = Builtin::<f64>::quartic(1);
        let f = Functional::new(&spec, &model, *x.mesh(), 1).unwrap();
        let eps = 1e-6;
        let fd = (f.energy(&x.axpy(eps, &d).unwrap()) - f.energy(&x.axpy(-eps, &d).unwrap())) / (2.0 * eps);
        let g = f.gradient(&x);
        let an: f64 = g.values().iter().zip(d.values()).map(|(a, b)| a * b).sum::<f64>() * x.mesh().h();
        prop_assert!((fd - an).abs() <= 1e-4 * (1.0 + an.abs()), "fd {} vs {}", fd, an);
    }
}
