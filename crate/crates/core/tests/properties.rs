use greenmask::fourier::{dft2, idft2};
use greenmask::maskgen::white_noise_mask;
use greenmask::metrics::{align_global_phase, sse_amplitude, sse_phase};
use greenmask::optics::{apply_sensor, forward_intensity, snr_of, truncate_high_freq, FullWell, SensorParams};
use greenmask::random::RandomStream;
use greenmask::{Complex64, ComplexImage, RealImage};
use proptest::prelude::*;

fn random_image(w: usize, h: usize, seed: u64) -> ComplexImage {
    let mut rng = RandomStream::new(seed, "prop/image");
    ComplexImage::from_fn(w, h, |_, _| Complex64::new(rng.uniform() - 0.5, rng.uniform() - 0.5))
}

fn positive_image(w: usize, h: usize, seed: u64) -> RealImage {
    let mut rng = RandomStream::new(seed, "prop/real");
    RealImage::new(w, h, (0..w * h).map(|_| rng.uniform()).collect()).unwrap()
}

#[test]
fn parseval_at_large_sizes() {
    for &(w, h) in &[(256, 256), (255, 129), (200, 200)] {
        let x = random_image(w, h, 1);
        let rel = (dft2(&x).unwrap().energy() - x.energy()).abs() / x.energy();
        assert!(rel < 1e-10, "{w}x{h}: {rel}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn parseval(w in 1usize..40, h in 1usize..40, seed in any::<u64>()) {
        let x = random_image(w, h, seed);
        let y = dft2(&x).unwrap();
        prop_assert!((y.energy() - x.energy()).abs() <= 1e-10 * x.energy().max(1e-300));
    }

    #[test]
    fn dft_is_linear(w in 1usize..24, h in 1usize..24, seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let x = random_image(w, h, seed);
        let y = random_image(w, h, seed ^ 0x55);
        let (ca, cb) = (Complex64::new(a, 0.5), Complex64::new(-0.25, b));
        let combo = ComplexImage::new(w, h, x.data().iter().zip(y.data()).map(|(p, q)| p * ca + q * cb).collect()).unwrap();
        let lhs = dft2(&combo).unwrap();
        let (fx, fy) = (dft2(&x).unwrap(), dft2(&y).unwrap());
        let rhs = ComplexImage::new(w, h, fx.data().iter().zip(fy.data()).map(|(p, q)| p * ca + q * cb).collect()).unwrap();
        prop_assert!(lhs.distance(&rhs).unwrap() < 1e-12 * (w * h) as f64);
    }

    #[test]
    fn dft_adjoint_is_inverse(w in 1usize..24, h in 1usize..24, seed in any::<u64>()) {
        let x = random_image(w, h, seed);
        let y = random_image(w, h, seed.wrapping_add(1));
        let lhs = dft2(&x).unwrap().inner(&y).unwrap();
        let rhs = x.inner(&idft2(&y).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-12 * (w * h) as f64);
        prop_assert!(idft2(&dft2(&x).unwrap()).unwrap().distance(&x).unwrap() < 1e-12 * x.norm().max(1.0));
    }

    #[test]
    fn forward_model_conserves_energy(n in 4usize..32, sigma in 0.0f64..=1.0, seed in any::<u64>()) {
        let u = random_image(n, n, seed);
        let mask = white_noise_mask(n, n, sigma, seed).unwrap();
        let y = forward_intensity(&u, &mask, None).unwrap();
        let direct: f64 = u.data().iter().zip(mask.bits()).map(|(z, &b)| z.norm_sqr() * b as f64).sum();
        prop_assert!((y.sum() - direct).abs() <= 1e-10 * direct.max(1e-300));
    }

    #[test]
    fn truncation_is_idempotent(n in 2usize..40, fraction in 0.0f64..0.95, seed in any::<u64>()) {
        let y = positive_image(n, n, seed);
        let once = truncate_high_freq(&y, fraction).unwrap();
        prop_assert_eq!(truncate_high_freq(&once, fraction).unwrap(), once.clone());
        prop_assert!(once.sum() <= y.sum());
    }

    #[test]
    fn sse_amplitude_ignores_global_phase(seed in any::<u64>(), phi in -4.0f64..4.0) {
        let r = random_image(8, 8, seed);
        let e = random_image(8, 8, seed ^ 7);
        let rotated = e.scale(Complex64::from_polar(1.0, phi));
        let (a, b) = (sse_amplitude(&r, &e).unwrap(), sse_amplitude(&r, &rotated).unwrap());
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn aligned_sse_phase_ignores_unit_constant(seed in any::<u64>(), phi in -4.0f64..4.0) {
        let r = random_image(8, 8, seed);
        let e = r.map(|z| z * Complex64::from_polar(1.0, 0.1));
        let e = ComplexImage::new(8, 8, e.data().iter().zip(random_image(8, 8, seed ^ 3).data()).map(|(a, b)| a + b * 0.2).collect()).unwrap();
        let rotated = e.scale(Complex64::from_polar(1.0, phi));
        let a = sse_phase(&r, &align_global_phase(&e, &r).unwrap()).unwrap();
        let b = sse_phase(&r, &align_global_phase(&rotated, &r).unwrap()).unwrap();
        prop_assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn sensor_statistics_follow_poisson() {
    let (n, c, s) = (64usize, 0.5, 200.0);
    let y = RealImage::constant(n, n, c).unwrap();
    let sensor = SensorParams {
        photon_scale: s,
        gaussian_sigma: 0.0,
        bit_depth: 16,
        full_well: FullWell::Photons(4.0 * c * s),
        seed: 5,
    };
    let out = apply_sensor(&y, &sensor).unwrap();
    let count = (n * n) as f64;
    let mean = out.sum() / count;
    let var = out.data().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1.0);
    assert!((mean - c).abs() < 3.0 * (c / (s * count)).sqrt(), "mean {mean}");
    assert!((var / (c / s) - 1.0).abs() < 0.1, "variance {var} vs {}", c / s);
}

#[test]
fn snr_rises_with_photon_scale() {
    let y = positive_image(64, 64, 8);
    let snrs: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
        .iter()
        .map(|&s| {
            let sensor = SensorParams {
                photon_scale: s,
                seed: 3,
                ..SensorParams::default()
            };
            snr_of(&y, &apply_sensor(&y, &sensor).unwrap()).unwrap()
        })
        .collect();
    assert!(snrs.windows(2).all(|p| p[1] > p[0]), "{snrs:?}");
}
