use gradcomp::compressors::{Compressor, CompressorSpec, NormOrder};
use gradcomp::stats::*;

const REFERENCE_TABLE: [(f64, usize, [f64; 4]); 4] = [
    (0.0, 3, [18.65, 31.10, 43.98, 57.08]),
    (0.0, 5, [27.14, 47.70, 69.07, 90.85]),
    (2.0, 3, [53.45, 75.27, 95.81, 115.53]),
    (2.0, 5, [81.60, 118.56, 153.13, 186.22]),
];

fn reference_value(mean: f64, k: usize, d: usize) -> f64 {
    let (_, _, row) = REFERENCE_TABLE.iter().find(|(m, kk, _)| *m == mean && *kk == k).unwrap();
    row[TABLE2_DIMS.iter().position(|&x| x == d).unwrap()]
}

#[test]
fn table2_magnitude_ordering_matches_every_cell() {
    for c in table2(OrderMode::Absolute).unwrap() {
        let Distribution::Gaussian { mean, .. } = c.distribution else { unreachable!() };
        let want = reference_value(mean, c.k, c.d);
        assert!((c.s_top / want - 1.0).abs() < 5e-4, "{c:?} vs {want}");
        assert_eq!(c.s_rnd, c.k as f64 * (1.0 + mean * mean));
    }
}

#[test]
fn table2_signed_ordering_misses_centered_rows() {
    let s = gaussian_top_k_savings(100, 3, 0.0, 1.0, OrderMode::Signed).unwrap();
    assert!((s / 18.65 - 1.0).abs() > 0.1, "{s}");
}

#[test]
fn quadrature_agrees_with_monte_carlo() {
    let g = Distribution::Gaussian { mean: 0.0, sigma: 1.0 };
    let mc = empirical_savings(g, 100, 3, 20_000, 7).unwrap();
    let quad = expected_savings(g, 100, 3).unwrap();
    let se = mc.std_errors.unwrap().1;
    assert!((mc.s_top - quad.s_top).abs() < 4.0 * se, "{} vs {} (se {se})", mc.s_top, quad.s_top);
}

#[test]
fn order_statistics_sum_rule_and_monotonicity() {
    let moments: Vec<f64> =
        (1..=20).map(|i| gaussian_order_stat_second_moment(20, i, 2.0, 1.0, OrderMode::Signed).unwrap()).collect();
    let total: f64 = moments.iter().sum();
    assert!((total / (20.0 * 5.0) - 1.0).abs() < 1e-4);
    // Upper order statistics of N(2,1) grow with i.
    assert!(moments[5..].windows(2).all(|w| w[0] < w[1]));
    let s: Vec<f64> =
        (1..=6).map(|k| gaussian_top_k_savings(100, k, 0.0, 1.0, OrderMode::Absolute).unwrap()).collect();
    assert!(s.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn uniform_monte_carlo_matches_closed_form() {
    let mc = empirical_savings(Distribution::Uniform01, 100, 10, 100_000, 1).unwrap();
    let (ratio, _) = uniform_ratio_closed_form(100, 10).unwrap();
    assert!((mc.variance_ratio() / ratio - 1.0).abs() < 0.01, "{} vs {ratio}", mc.variance_ratio());
    let mc1 = empirical_savings(Distribution::Uniform01, 50, 1, 100_000, 2).unwrap();
    let (_, saving) = uniform_ratio_closed_form(50, 1).unwrap();
    assert!((mc1.saving_ratio() / saving - 1.0).abs() < 0.01);
}

#[test]
fn exponential_monte_carlo_matches_harmonic_sums() {
    let mc = empirical_savings(Distribution::StdExponential, 2, 1, 200_000, 3).unwrap();
    assert!((mc.saving_ratio() / 1.75 - 1.0).abs() < 0.01, "{}", mc.saving_ratio());
    let r2 = exponential_saving_ratio(100).unwrap();
    let r3 = exponential_saving_ratio(1000).unwrap();
    let growth = r3 / r2;
    let log_sq = (1000f64.ln() / 100f64.ln()).powi(2);
    assert!(growth > 1.0 && (growth / log_sq - 1.0).abs() < 0.25, "{growth} vs {log_sq}");
}

#[test]
fn rand_k_saving_is_k_times_second_moment() {
    let g = Distribution::Gaussian { mean: 2.0, sigma: 1.0 };
    let mc = empirical_savings(g, 50, 5, 50_000, 4).unwrap();
    let se = mc.std_errors.unwrap().0;
    assert!((mc.s_rnd - 25.0).abs() < 4.0 * se, "{} (se {se})", mc.s_rnd);
    assert!((mc.s_rnd + mc.omega_rnd - mc.energy).abs() < 1e-9 * mc.energy);
    assert!((mc.s_top + mc.omega_top - mc.energy).abs() < 1e-9 * mc.energy);
}

#[test]
fn monte_carlo_is_reproducible() {
    let a = empirical_savings(Distribution::StdExponential, 30, 3, 5_000, 9).unwrap();
    let b = empirical_savings(Distribution::StdExponential, 30, 3, 5_000, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn variance_bits_curve_shapes() {
    let d = 1000;
    let rand_k = |k: usize| Compressor::scaled(CompressorSpec::RandK { k }, k as f64 / d as f64).unwrap();
    let points = variance_bits_curve(
        &[
            rand_k(50),
            rand_k(200),
            Compressor::new(CompressorSpec::TopK { k: 50 }),
            Compressor::new(CompressorSpec::TopKPlusDithering {
                k: 150,
                base: 2.0,
                levels: 8,
                norm: NormOrder::new(2.0).unwrap(),
            }),
            Compressor::new(CompressorSpec::Identity),
        ],
        d,
        5,
        0,
    )
    .unwrap();
    // Rescaled Rand-k keeps exactly k/d of the energy on average.
    for (p, k) in points[..2].iter().zip([50.0, 200.0]) {
        assert!((p.normalized_variance - (1.0 - k / d as f64)).abs() < 0.05, "{p:?}");
    }
    let (top, combo) = (&points[2], &points[3]);
    assert!(combo.bits_per_coord <= top.bits_per_coord * 1.05, "{combo:?} vs {top:?}");
    assert!(combo.delta < top.delta);
    assert_eq!((points[4].normalized_variance, points[4].bits_per_coord), (0.0, 32.0));
    let csv = curve_csv(&points);
    assert!(csv.starts_with("operator,bits_per_coord,value,metric\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * points.len());
}
