use hotcs_core::datagen::{gen_audio, gen_channel_trace, gen_image, rng_from_seed, AudioParams, ChannelParams, ImageParams};
use hotcs_core::metrics::{domain_compare, energy_concentration, l0_norm, numerical_sparsity_odd, relative_error_bound};
use hotcs_core::solvers::{lasso, omp};
use hotcs_core::{construct_hot, construct_hot_multi, CMatrix, CVector, Pivot, Pivots, PosteriorTransform, PriorTransform, ReferenceSet, C64};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn vector(seed: u64, n: usize, real: bool) -> CVector {
    let mut r = rng_from_seed(seed);
    CVector::new(
        (0..n)
            .map(|_| C64::new(r.sample(StandardNormal), if real { 0.0 } else { r.sample(StandardNormal) }))
            .collect(),
    )
    .unwrap()
}

fn prior(kind: u8, n: usize) -> PriorTransform {
    match kind % 4 {
        0 => PriorTransform::dft(n).unwrap(),
        1 => PriorTransform::dct2(n).unwrap(),
        2 => PriorTransform::haar(n + n % 2, None).unwrap(),
        _ => PriorTransform::identity(n).unwrap(),
    }
}

fn gram_error(d: &CMatrix) -> f64 {
    let m = DMatrix::from_fn(d.rows(), d.cols(), |i, j| d.get(i, j));
    let g = m.adjoint() * &m - DMatrix::identity(d.cols(), d.cols());
    g.iter().fold(0.0, |a, z| a.max(z.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn posterior_is_unitary(kind in 0u8..4, n in 2usize..48, seed: u64, real: bool) {
        let p = prior(kind, n);
        let r = vector(seed, p.dim(), real && p.is_real());
        let t = construct_hot(&p, &r, Pivot::Auto).unwrap();
        prop_assert!(gram_error(&t.synthesis_matrix()) <= 1e-10);
    }

    #[test]
    fn single_reference_becomes_one_sparse(kind in 0u8..4, n in 2usize..48, seed: u64) {
        let p = prior(kind, n);
        let r = vector(seed, p.dim(), false);
        let t = construct_hot(&p, &r, Pivot::Auto).unwrap();
        let w = t.analyze(&r).unwrap();
        let j = t.pivots()[0];
        prop_assert!((w[j] - t.alphas()[0]).norm() <= 1e-10 * r.norm());
        prop_assert!((t.alphas()[0].norm() - r.norm()).abs() <= 1e-10 * r.norm());
        for (i, z) in w.iter().enumerate() {
            if i != j {
                prop_assert!(z.norm() <= 1e-10 * r.norm());
            }
        }
    }

    #[test]
    fn explicit_pivot_is_honoured(n in 2usize..40, seed: u64, pick in 0usize..1000) {
        let p = PriorTransform::dct2(n).unwrap();
        let r = vector(seed, n, true);
        let j = pick % n;
        let t = construct_hot(&p, &r, Pivot::Index(j)).unwrap();
        prop_assert_eq!(t.pivots(), vec![j]);
        prop_assert!(t.analyze(&r).unwrap().iter().enumerate().all(|(i, z)| i == j || z.norm() <= 1e-10 * r.norm()));
    }

    #[test]
    fn real_inputs_stay_real(kind in 1u8..4, n in 2usize..48, k in 1usize..4, seed: u64) {
        let p = prior(kind, n);
        let k = k.min(p.dim());
        let refs: Vec<CVector> = (0..k).map(|i| vector(seed.wrapping_add(i as u64), p.dim(), true)).collect();
        let t = construct_hot_multi(&p, &ReferenceSet::new(refs).unwrap(), &Pivots::Auto).unwrap();
        prop_assert!(t.synthesis_matrix().as_slice().iter().all(|z| z.im.abs() <= 1e-12));
    }

    #[test]
    fn prior_atom_reference_is_trivial(kind in 0u8..4, n in 2usize..48, pick in 0usize..1000, scale in 0.1f64..10.0) {
        let p = prior(kind, n);
        let j = pick % p.dim();
        let atom = p.atom(j).unwrap();
        let r = CVector::new(atom.iter().map(|z| z * scale).collect()).unwrap();
        let t = construct_hot(&p, &r, Pivot::Auto).unwrap();
        prop_assert_eq!(t.num_factors(), 0);
        prop_assert!(t.is_identity_correction());
        let cmp = domain_compare(&t.synthesis_matrix(), p.matrix()).unwrap();
        prop_assert!(cmp.relative_error <= 1e-12);
    }

    #[test]
    fn multi_reference_generalization_bound(kind in 0u8..4, n in 4usize..64, k in 1usize..6, seed: u64) {
        let p = prior(kind, n);
        let k = k.min(p.dim());
        let refs: Vec<CVector> = (0..k).map(|i| vector(seed ^ (i as u64 + 1), p.dim(), false)).collect();
        let t = construct_hot_multi(&p, &ReferenceSet::new(refs).unwrap(), &Pivots::Auto).unwrap();
        let cmp = domain_compare(&t.synthesis_matrix(), p.matrix()).unwrap();
        prop_assert!(cmp.relative_error <= relative_error_bound(p.dim(), k) + 1e-10);
    }

    #[test]
    fn transform_serde_roundtrip(kind in 0u8..4, n in 2usize..24, k in 1usize..3, seed: u64) {
        let p = prior(kind, n);
        let k = k.min(p.dim());
        let refs: Vec<CVector> = (0..k).map(|i| vector(seed.wrapping_mul(3).wrapping_add(i as u64), p.dim(), false)).collect();
        let t = construct_hot_multi(&p, &ReferenceSet::new(refs).unwrap(), &Pivots::Auto).unwrap();
        let text = serde_json::to_string(&t).unwrap();
        let back: PosteriorTransform = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.pivots(), t.pivots());
        prop_assert_eq!(back.synthesis_matrix(), t.synthesis_matrix());
    }

    #[test]
    fn analyze_synthesize_roundtrip(kind in 0u8..4, n in 2usize..48, seed: u64) {
        let p = prior(kind, n);
        let r = vector(seed, p.dim(), false);
        let x = vector(seed.wrapping_add(17), p.dim(), false);
        let t = construct_hot(&p, &r, Pivot::Auto).unwrap();
        let back = t.synthesize(&t.analyze(&x).unwrap()).unwrap();
        let err = back.iter().zip(x.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        prop_assert!(err <= 1e-10 * x.norm());
    }

    #[test]
    fn metric_bounds(n in 1usize..64, k in 1usize..8, seed: u64) {
        let k = k.min(n);
        let v = vector(seed, n, false);
        let odd = numerical_sparsity_odd(&v).unwrap();
        prop_assert!(odd >= 1.0 - 1e-12 && odd <= (n as f64).sqrt() + 1e-12);
        let g = energy_concentration(&v, k).unwrap();
        prop_assert!(g > 0.0 && g <= 1.0 + 1e-12);
        prop_assert!(g >= k as f64 / n as f64 - 1e-12);
        prop_assert!(l0_norm(&v) <= n);
    }

    #[test]
    fn omp_residual_nonincreasing(m in 6usize..16, extra in 1usize..16, seed: u64) {
        let n = m + extra;
        let mut r = rng_from_seed(seed);
        let a = CMatrix::from_fn(m, n, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal))).unwrap();
        let y = vector(seed.wrapping_add(1), m, false);
        let res = omp(&a, &y, m.min(5), 0.0).unwrap();
        prop_assert!(res.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn lasso_optimality(m in 4usize..12, extra in 1usize..12, scale in 0.05f64..0.9, seed: u64) {
        let n = m + extra;
        let mut r = rng_from_seed(seed);
        let a = CMatrix::from_fn(m, n, |_, _| C64::new(r.sample(StandardNormal), r.sample(StandardNormal))).unwrap();
        let y = vector(seed.wrapping_add(1), m, false);
        let lambda = scale * a.adjoint_apply(&y).unwrap().max_abs();
        let res = lasso(&a, &y, lambda, 100_000).unwrap();
        let g = a.adjoint_apply(&a.apply(&res.coeffs).unwrap().sub(&y).unwrap()).unwrap();
        for (gi, wi) in g.iter().zip(res.coeffs.iter()) {
            if wi.norm() == 0.0 {
                prop_assert!(gi.norm() <= lambda * (1.0 + 1e-4));
            } else {
                prop_assert!((gi + wi * (lambda / wi.norm())).norm() <= 1e-4 * lambda);
            }
        }
    }

    #[test]
    fn generators_are_deterministic(seed: u64) {
        let audio = AudioParams { n: 128, max_bin: 40.0, ..AudioParams::default() };
        prop_assert_eq!(gen_audio(&audio, seed).unwrap(), gen_audio(&audio, seed).unwrap());
        let ch = ChannelParams { n: 16, steps: 4, ..ChannelParams::default() };
        prop_assert_eq!(gen_channel_trace(&ch, seed).unwrap(), gen_channel_trace(&ch, seed).unwrap());
        let img = ImageParams { size: 16, ..ImageParams::default() };
        prop_assert_eq!(gen_image(&img, seed).unwrap(), gen_image(&img, seed).unwrap());
    }
}
