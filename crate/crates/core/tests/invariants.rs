use num_complex::Complex64;
use proptest::prelude::*;

use sparse_universality::cdkernel::{cd_kernel, cd_kernel_direct, kernel_ratio, KernelQuery};
use sparse_universality::chebyshev::{psi1, transfer_matrix};
use sparse_universality::harness::{convergence_table, sweep_spec};
use sparse_universality::jacobi::{eval_poly, eval_poly_with, JacobiParams, PolyRecurrence, Precision, SparseSpec};
use sparse_universality::mat2::Mat2;
use sparse_universality::sparsifier::{build_m_sequence_with, lobatto_grid, tilde_interval};
use sparse_universality::jacobi::EnvelopeRule;
use sparse_universality::varparam::{coeffs_from_poly, phi_step, step_a, step_a_back};

fn spec_strategy() -> impl Strategy<Value = SparseSpec> {
    prop::collection::btree_map(2u64..3000, -1.0f64..1.0, 0..5).prop_map(|m| {
        let (pos, v): (Vec<u64>, Vec<f64>) = m.into_iter().unzip();
        SparseSpec::explicit(v, pos).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_is_symmetric_and_conjugate(spec in spec_strategy(), x in -1.7f64..1.7, a in -3.0f64..3.0, b in -3.0f64..3.0, t in -1.0f64..1.0, n in 10u64..3000) {
        let p = JacobiParams::full(&spec);
        let q = KernelQuery::new(x, Complex64::new(a, t), Complex64::from(b), n).unwrap();
        let k = cd_kernel(&q, &p).unwrap();
        let swapped = cd_kernel(&q.swapped(), &p).unwrap();
        prop_assert!((k - swapped).norm() <= 1e-9 * k.norm().max(1.0));
        let conj = KernelQuery::new(x, Complex64::new(a, -t), Complex64::from(b), n).unwrap();
        let kc = cd_kernel(&conj, &p).unwrap();
        prop_assert!((k.conj() - kc).norm() <= 1e-9 * k.norm().max(1.0));
    }

    #[test]
    fn confluent_kernel_matches_sum(spec in spec_strategy(), x in -1.7f64..1.7, a in -3.0f64..3.0, n in 10u64..2000) {
        let p = JacobiParams::full(&spec);
        let q = KernelQuery::real(x, a, a, n).unwrap();
        let k = cd_kernel(&q, &p).unwrap();
        let direct = cd_kernel_direct(&q, &p).unwrap();
        prop_assert!((k - direct).norm() <= 1e-9 * direct.norm());
        prop_assert!(k.re > 0.0);
    }

    #[test]
    fn ratio_is_symmetric_and_bounded(spec in spec_strategy(), x in -1.7f64..1.7, a in -3.0f64..3.0, b in -3.0f64..3.0, n in 100u64..5000) {
        let p = JacobiParams::full(&spec);
        let r = kernel_ratio(&KernelQuery::real(x, a, b, n).unwrap(), &p).unwrap().ratio;
        let s = kernel_ratio(&KernelQuery::real(x, b, a, n).unwrap(), &p).unwrap().ratio;
        prop_assert!((r - s).norm() <= 1e-10);
        prop_assert!(r.im.abs() <= 1e-12);
        // Cauchy-Schwarz against the two diagonals.
        let ka = cd_kernel(&KernelQuery::real(x, a, a, n).unwrap(), &p).unwrap().re;
        let kb = cd_kernel(&KernelQuery::real(x, b, b, n).unwrap(), &p).unwrap().re;
        let kab = cd_kernel(&KernelQuery::real(x, a, b, n).unwrap(), &p).unwrap().re;
        prop_assert!(kab * kab <= ka * kb * (1.0 + 1e-9));
    }

    #[test]
    fn perturbation_is_nilpotent(site in 2u64..10_000, v in -2.0f64..2.0, x in -1.9f64..1.9, t in -1.0f64..1.0) {
        let spec = SparseSpec::explicit(vec![v], vec![site]).unwrap();
        let phi = phi_step(site - 1, Complex64::new(x, t / site as f64), &JacobiParams::full(&spec)).phi;
        let scale = phi.max_abs_entry().powi(2).max(1.0);
        prop_assert!((phi * phi).max_abs_entry() <= 1e-12 * scale);
        prop_assert!(phi.trace().norm() <= 1e-12 * scale);
        prop_assert!(((Mat2::IDENTITY + phi).det() - 1.0).norm() <= 1e-12 * scale);
    }

    #[test]
    fn transfer_is_unimodular_and_matches_psi(n in 0u64..20_000, x in -1.9f64..1.9) {
        let z = Complex64::from(x);
        let t = transfer_matrix(n, z);
        prop_assert!((t.det() - 1.0).norm() <= 1e-9);
        prop_assert!((t.psi1() - psi1(n as i64, z).unwrap()).norm() <= 1e-9 * t.norm());
    }

    #[test]
    fn step_back_inverts_step(spec in spec_strategy(), x in -1.7f64..1.7, extra in 0u64..20) {
        let p = JacobiParams::full(&spec);
        let n = spec.positions().first().map_or(10, |s| s - 1) + extra;
        let a = coeffs_from_poly(n, Complex64::from(x), &p).unwrap();
        let back = step_a_back(&step_a(&a, &p), &p).unwrap();
        prop_assert!((back.a1 - a.a1).norm() + (back.a2 - a.a2).norm() <= 1e-12 * a.norm_sqr().sqrt().max(1.0));
    }

    #[test]
    fn iterator_and_precision_agree(spec in spec_strategy(), x in -1.9f64..1.9, n in 1u64..4000) {
        let p = JacobiParams::full(&spec);
        let z = Complex64::from(x);
        let direct = eval_poly(n, z, &p).unwrap();
        let streamed = PolyRecurrence::new(z, &p).nth(n as usize).unwrap();
        prop_assert_eq!(streamed.p, direct.p);
        let comp = eval_poly_with(n, z, &p, Precision::Compensated).unwrap();
        let scale = direct.p.norm().max(direct.p_prev.norm()).max(1.0);
        prop_assert!((comp.p - direct.p).norm() <= 1e-8 * scale);
    }

    #[test]
    fn m_sequence_is_a_staircase(exponent in 0.3f64..3.0) {
        let env = EnvelopeRule::PowerLaw { amplitude: 1.0, exponent };
        let m = build_m_sequence_with(&env, 1_000_000_000, 8).unwrap();
        prop_assert!(m.breakpoints().windows(2).all(|w| w[0] <= w[1]));
        let mut last = 0;
        for k in 0..40 {
            let n = 1u64 << k;
            let v = m.m_at(n);
            prop_assert!(v >= last && v >= 1);
            last = v;
        }
    }

    #[test]
    fn grids_lie_in_the_interval(level in 0usize..10, m in 1u32..16, size in 1usize..20) {
        let iv = tilde_interval(level, m);
        let xs = lobatto_grid(iv, size);
        prop_assert!(xs.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(xs.iter().all(|&x| x >= iv[0] && x <= iv[1]));
        prop_assert!(xs.iter().zip(xs.iter().rev()).all(|(a, b)| (a + b).abs() <= 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn thresholds_are_tail_minimal(eps in 1e-5f64..1.0) {
        let free = SparseSpec::free();
        let ns = [10u64, 100, 1000, 10_000];
        let rows = sweep_spec(&free, &[0.0, 1.0], &[(0.0, 1.0), (-1.0, 2.0)], &ns, Precision::Double);
        let t = convergence_table(&rows, &ns, &[eps]);
        match t.thresholds[0].1 {
            Some(n0) => {
                prop_assert!(t.rows.iter().filter(|r| r.0 >= n0).all(|r| r.1 <= eps));
                let i = ns.iter().position(|&n| n == n0).unwrap();
                prop_assert!(i == 0 || t.rows[i - 1].1 > eps);
            }
            None => prop_assert!(t.rows.last().unwrap().1 > eps),
        }
    }
}
