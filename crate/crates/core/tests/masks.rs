use greenmask::maskgen::{
    angular_sector_power, blue_noise_mask, fmedg_generate, high_freq_ratio, radial_power_spectrum, white_noise_mask,
    BinaryMask,
};

fn conserved(mask: &BinaryMask, sigma: f64) -> bool {
    let n = (mask.width() * mask.height()) as f64;
    (mask.ones() as f64 - sigma * n).abs() <= 0.005 * n
}

#[test]
fn all_generators_conserve_transmittance() {
    for seed in 0..20 {
        for &(w, h, sigma) in &[(64, 64, 0.5), (50, 37, 0.3), (33, 64, 0.7)] {
            let white = white_noise_mask(w, h, sigma, seed).unwrap();
            assert!((white.ones() as f64 - sigma * (w * h) as f64).abs() <= 1.0);
            assert!(conserved(&blue_noise_mask(w, h, sigma, seed).unwrap(), sigma));
            for r1 in [1.0, 1.5, 2.5] {
                let green = fmedg_generate(w, h, sigma, r1, seed).unwrap();
                assert!(conserved(&green, sigma), "seed {seed} {w}x{h} σ={sigma} r1={r1}: {}", green.ones());
            }
        }
    }
}

#[test]
fn spectral_ordering_over_seeds() {
    for seed in 0..10 {
        let green = high_freq_ratio(&fmedg_generate(200, 200, 0.5, 1.5, seed).unwrap());
        let white = high_freq_ratio(&white_noise_mask(200, 200, 0.5, seed).unwrap());
        let blue = high_freq_ratio(&blue_noise_mask(200, 200, 0.5, seed).unwrap());
        assert!(green < white && white < blue, "seed {seed}: {green} {white} {blue}");
        assert!((0.01..=0.11).contains(&green), "green η {green}");
        assert!((0.12..=0.25).contains(&white), "white η {white}");
        assert!((0.25..=0.45).contains(&blue), "blue η {blue}");
    }
}

#[test]
fn green_spectrum_is_isotropic_at_peak() {
    for seed in 0..3 {
        let mask = fmedg_generate(200, 200, 0.5, 1.5, seed).unwrap();
        let profile = radial_power_spectrum(&mask, 16).unwrap();
        let sectors = angular_sector_power(&mask, 16, profile.peak_bin(), 8);
        let mean = sectors.iter().sum::<f64>() / sectors.len() as f64;
        let var = sectors.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / sectors.len() as f64;
        let rsd = var.sqrt() / mean;
        assert!(rsd < 0.5, "seed {seed}: relative sd {rsd}");
    }
}

#[test]
fn white_spectrum_is_flat() {
    for seed in 0..10 {
        let profile = radial_power_spectrum(&white_noise_mask(200, 200, 0.5, seed).unwrap(), 16).unwrap();
        let inner = &profile.mean_power[..14];
        let max = inner.iter().cloned().fold(f64::MIN, f64::max);
        let min = inner.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max / min < 4.0, "seed {seed}: ratio {}", max / min);
    }
}

#[test]
fn green_spectrum_peaks_in_the_interior() {
    let profile = radial_power_spectrum(&fmedg_generate(200, 200, 0.5, 1.5, 3).unwrap(), 16).unwrap();
    let peak = profile.peak_bin();
    assert!(peak > 0 && peak < 15, "peak bin {peak}");
    assert!(profile.mean_power[0] < profile.mean_power[peak] / 4.0);
}

#[test]
fn principal_frequency_falls_with_cluster_radius() {
    let peaks: Vec<usize> = [1.0, 1.5, 2.0, 2.5]
        .iter()
        .map(|&r1| radial_power_spectrum(&fmedg_generate(64, 64, 0.5, r1, 0).unwrap(), 16).unwrap().peak_bin())
        .collect();
    assert!(peaks.windows(2).all(|p| p[1] <= p[0]), "{peaks:?}");
    assert!(peaks[3] < peaks[0]);
}

#[test]
fn generators_are_pure() {
    assert_eq!(fmedg_generate(40, 30, 0.4, 2.0, 9).unwrap(), fmedg_generate(40, 30, 0.4, 2.0, 9).unwrap());
    assert_eq!(blue_noise_mask(40, 30, 0.4, 9).unwrap(), blue_noise_mask(40, 30, 0.4, 9).unwrap());
    assert_eq!(white_noise_mask(40, 30, 0.4, 9).unwrap(), white_noise_mask(40, 30, 0.4, 9).unwrap());
    assert_ne!(fmedg_generate(40, 30, 0.4, 2.0, 9).unwrap(), fmedg_generate(40, 30, 0.4, 2.0, 10).unwrap());
}
