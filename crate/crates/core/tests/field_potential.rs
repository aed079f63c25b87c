mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use quasiwave::{
    arp_coefficients, evaluate_arp, evaluate_arp_batch, evaluate_arp_derivatives, evaluate_field,
    evaluate_field_batch, evaluate_field_derivatives, ArpCoefficients, ArpMode, Error, MaterialParams,
    WaveConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn one_pair(k: f64) -> WaveConfig {
    WaveConfig::new(k, &[vec![k, 0.0]], ones(1), ones(1)).unwrap()
}

#[test]
fn one_pair_antinode_value_is_four_a() {
    let m = MaterialParams::water_carbon();
    let cfg = one_pair(m.wavenumber());
    let co = arp_coefficients(&m, 2, ArpMode::Acoustic).unwrap();
    assert_eq!(evaluate_field(&cfg, &[0.0, 0.0]).unwrap(), c(2.0, 0.0));
    let psi = evaluate_arp(&cfg, &co, &[0.0, 0.0]).unwrap();
    assert!((psi - 4.0 * co.a()).abs() <= 1e-15 * co.a());
}

#[test]
fn one_pair_matches_closed_form() {
    // p = 2 cos(k x1), psi = 4 a cos^2 - 4 b k^2 sin^2
    let k = 3.0;
    let cfg = one_pair(k);
    let co = ArpCoefficients::isotropic(2, 0.7, 0.05, ArpMode::Acoustic).unwrap();
    for i in 0..50 {
        let x1 = -2.0 + 0.08 * i as f64;
        let (s, cs) = (k * x1).sin_cos();
        let expect = 4.0 * 0.7 * cs * cs - 4.0 * 0.05 * k * k * s * s;
        let psi = evaluate_arp(&cfg, &co, &[x1, 0.4]).unwrap();
        assert!((psi - expect).abs() < 1e-13, "x1 = {x1}");
    }
}

#[test]
fn optical_mode_is_intensity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = random_wave(&mut rng, 2, 4);
    let co = ArpCoefficients::isotropic(2, 1.3, 0.0, ArpMode::Optical).unwrap();
    for _ in 0..100 {
        let x = random_point(&mut rng, 2, 3.0 * cfg.wavelength());
        let p = p_direct(&cfg, &x);
        let psi = evaluate_arp(&cfg, &co, &x).unwrap();
        assert!((psi - 1.3 * p.norm_sqr()).abs() <= 1e-13 * 1.3 * amplitude_sum(&cfg).powi(2));
    }
}

#[test]
fn field_derivatives_match_reference_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for dim in [2, 3] {
        let cfg = random_wave(&mut rng, dim, 5);
        let k = cfg.wavenumber();
        let s = amplitude_sum(&cfg);
        for _ in 0..50 {
            let x = random_point(&mut rng, dim, 4.0 * cfg.wavelength());
            let d = evaluate_field_derivatives(&cfg, &x).unwrap();
            // gradient of each term is i k_j times the forward part minus the backward part
            let mut grad = vec![c(0.0, 0.0); dim];
            for j in 0..cfg.num_waves() {
                let phase: f64 = cfg.wavevector(j).iter().zip(&x).map(|(a, b)| a * b).sum();
                let diff = cfg.alpha()[j] * Complex64::from_polar(1.0, phase)
                    - cfg.beta()[j] * Complex64::from_polar(1.0, -phase);
                for a in 0..dim {
                    grad[a] += c(0.0, cfg.wavevector(j)[a]) * diff;
                }
            }
            assert!((d.value - p_direct(&cfg, &x)).norm() <= 1e-13 * s);
            for a in 0..dim {
                assert!((d.gradient[a] - grad[a]).norm() <= 1e-13 * k * s);
            }
            assert!(d.helmholtz_residual(k).norm() <= 1e-12 * k * k * s);
        }
    }
}

#[test]
fn batch_matches_pointwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cfg = random_wave(&mut rng, 3, 3);
    let co = random_coefficients(&mut rng, 3, cfg.wavenumber());
    let pts: Vec<f64> = (0..3 * 500).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect();
    let ps = evaluate_field_batch(&cfg, &pts).unwrap();
    let psis = evaluate_arp_batch(&cfg, &co, &pts).unwrap();
    for (i, x) in pts.chunks(3).enumerate() {
        assert_eq!(ps[i], evaluate_field(&cfg, x).unwrap());
        assert_eq!(psis[i], evaluate_arp(&cfg, &co, x).unwrap());
    }
    assert!(matches!(evaluate_field_batch(&cfg, &pts[..4]), Err(Error::Config(_))));
}

#[test]
fn invalid_inputs_are_rejected() {
    let k = 2.0;
    assert!(WaveConfig::new(k, &[vec![1.0, 0.0]], ones(1), ones(1)).is_err());
    assert!(matches!(
        WaveConfig::new(k, &[vec![2.0]], ones(1), ones(1)),
        Err(Error::UnsupportedDimension(1))
    ));
    assert!(matches!(
        WaveConfig::new(k, &[vec![2.0, 0.0, 0.0, 0.0]], ones(1), ones(1)),
        Err(Error::UnsupportedDimension(4))
    ));
    assert!(WaveConfig::new(k, &[vec![2.0, 0.0]], vec![c(0.0, 0.0)], vec![c(0.0, 0.0)]).is_err());
    let cfg = one_pair(k);
    assert!(evaluate_field(&cfg, &[0.0, 0.0, 0.0]).is_err());
    let co3 = ArpCoefficients::isotropic(3, 1.0, 1.0, ArpMode::Acoustic).unwrap();
    assert!(evaluate_arp(&cfg, &co3, &[0.0, 0.0]).is_err());
    assert!(ArpCoefficients::with_matrix(1.0, &[vec![1.0, 0.5], vec![0.4, 1.0]], ArpMode::Acoustic).is_err());
}

fn arb_config(dim: usize) -> impl Strategy<Value = (WaveConfig, ArpCoefficients, Vec<f64>)> {
    (any::<u64>(), 1usize..6).prop_map(move |(seed, waves)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = random_wave(&mut rng, dim, waves);
        let co = random_coefficients(&mut rng, dim, cfg.wavenumber());
        let x = random_point(&mut rng, dim, 6.0 * cfg.wavelength());
        (cfg, co, x)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_is_phase_invariant((cfg, co, x) in arb_config(2), theta in -3.2f64..3.2) {
        let rot = Complex64::from_polar(1.0, theta);
        let shifted = cfg
            .with_amplitudes(cfg.alpha().iter().map(|a| a * rot).collect(), cfg.beta().iter().map(|b| b * rot).collect())
            .unwrap();
        let s = psi_scale(&cfg, &co);
        let p = evaluate_field(&cfg, &x).unwrap();
        prop_assert!((evaluate_field(&shifted, &x).unwrap() - p * rot).norm() <= 1e-13 * amplitude_sum(&cfg));
        prop_assert!((evaluate_arp(&shifted, &co, &x).unwrap() - evaluate_arp(&cfg, &co, &x).unwrap()).abs() <= 1e-13 * s);
    }

    #[test]
    fn swapping_and_conjugating_amplitudes_conjugates_the_field((cfg, co, x) in arb_config(3)) {
        let flipped = cfg
            .with_amplitudes(cfg.beta().iter().map(|b| b.conj()).collect(), cfg.alpha().iter().map(|a| a.conj()).collect())
            .unwrap();
        let p = evaluate_field(&cfg, &x).unwrap();
        prop_assert!((evaluate_field(&flipped, &x).unwrap() - p.conj()).norm() <= 1e-13 * amplitude_sum(&cfg));
        let s = psi_scale(&cfg, &co);
        prop_assert!((evaluate_arp(&flipped, &co, &x).unwrap() - evaluate_arp(&cfg, &co, &x).unwrap()).abs() <= 1e-12 * s);
    }

    #[test]
    fn field_is_linear_in_amplitudes((cfg, _co, x) in arb_config(2), seed in any::<u64>(), w in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = cfg.num_waves();
        let other = cfg
            .with_amplitudes((0..n).map(|_| random_amplitude(&mut rng)).collect(), (0..n).map(|_| random_amplitude(&mut rng)).collect())
            .unwrap();
        let mix: Vec<Complex64> = cfg.alpha().iter().zip(other.alpha()).map(|(a, b)| a + b * w).collect();
        let mixb: Vec<Complex64> = cfg.beta().iter().zip(other.beta()).map(|(a, b)| a + b * w).collect();
        prop_assume!(mix.iter().zip(&mixb).all(|(a, b)| a.norm() + b.norm() > 1e-9));
        let combined = cfg.with_amplitudes(mix, mixb).unwrap();
        let lhs = evaluate_field(&combined, &x).unwrap();
        let rhs = evaluate_field(&cfg, &x).unwrap() + evaluate_field(&other, &x).unwrap() * w;
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (amplitude_sum(&cfg) + w.abs() * amplitude_sum(&other)));
    }

    #[test]
    fn translation_is_a_phase_change((cfg, co, x) in arb_config(2), t in prop::array::uniform2(-1.0f64..1.0)) {
        let t: Vec<f64> = t.iter().map(|v| v * cfg.wavelength()).collect();
        let phases: Vec<Complex64> = (0..cfg.num_waves())
            .map(|j| Complex64::from_polar(1.0, cfg.wavevector(j).iter().zip(&t).map(|(a, b)| a * b).sum()))
            .collect();
        let moved = cfg
            .with_amplitudes(
                cfg.alpha().iter().zip(&phases).map(|(a, e)| a * e).collect(),
                cfg.beta().iter().zip(&phases).map(|(b, e)| b / e).collect(),
            )
            .unwrap();
        let xt: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a + b).collect();
        let s = psi_scale(&cfg, &co);
        prop_assert!((evaluate_arp(&moved, &co, &x).unwrap() - evaluate_arp(&cfg, &co, &xt).unwrap()).abs() <= 1e-11 * s);
    }

    #[test]
    fn hessian_is_symmetric_and_matches_gradient_differences((cfg, co, x) in arb_config(3)) {
        let d = evaluate_arp_derivatives(&cfg, &co, &x).unwrap();
        let k = cfg.wavenumber();
        let s = psi_scale(&cfg, &co);
        let h = 1e-6 * cfg.wavelength();
        for a in 0..3 {
            for b in 0..3 {
                prop_assert_eq!(d.hessian[a][b], d.hessian[b][a]);
            }
            let (mut xp, mut xm) = (x.clone(), x.clone());
            xp[a] += h;
            xm[a] -= h;
            let gp = evaluate_arp_derivatives(&cfg, &co, &xp).unwrap().gradient;
            let gm = evaluate_arp_derivatives(&cfg, &co, &xm).unwrap().gradient;
            for b in 0..3 {
                prop_assert!(((gp[b] - gm[b]) / (2.0 * h) - d.hessian[a][b]).abs() <= 1e-5 * k * k * s);
            }
        }
        let f = evaluate_field_derivatives(&cfg, &x).unwrap();
        prop_assert!(f.helmholtz_residual(k).norm() <= 1e-10 * k * k * amplitude_sum(&cfg));
    }

    #[test]
    fn force_is_negative_gradient((cfg, co, x) in arb_config(2)) {
        let d = evaluate_arp_derivatives(&cfg, &co, &x).unwrap();
        let f = d.force();
        for a in 0..2 {
            prop_assert_eq!(f[a], -d.gradient[a]);
        }
    }
}
