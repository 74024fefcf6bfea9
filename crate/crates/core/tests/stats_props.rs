use proptest::prelude::*;

use skinaudit_core::stats::{chi_square, chi_square_sf, mann_whitney_u, percent, t_test, ContingencyTable};

/// Regularized upper incomplete gamma Q(a, x), series below a + 1 and
/// Lentz continued fraction above.
fn gamma_q(a: f64, x: f64) -> f64 {
    let ln_gamma_a = ln_gamma(a);
    if x < a + 1.0 {
        let (mut term, mut sum, mut n) = (1.0 / a, 1.0 / a, a);
        for _ in 0..10_000 {
            n += 1.0;
            term *= x / n;
            sum += term;
            if term.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        1.0 - sum * (-x + a * x.ln() - ln_gamma_a).exp()
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-17 {
                break;
            }
        }
        (-x + a * x.ln() - ln_gamma_a).exp() * h
    }
}

/// Lanczos approximation (g = 7, n = 9).
fn ln_gamma(x: f64) -> f64 {
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    let x = x - 1.0;
    let t = x + 7.5;
    let s: f64 = C[0] + (1..9).map(|i| C[i] / (x + i as f64)).sum::<f64>();
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + s.ln()
}

#[test]
fn survival_function_matches_incomplete_gamma() {
    for df in 1..=10 {
        for &x in &[0.01, 0.5, 1.0, 2.5, 5.0, 10.0, 20.0, 40.0] {
            let want = gamma_q(df as f64 / 2.0, x / 2.0);
            let got = chi_square_sf(x, df as f64);
            assert!((got - want).abs() < 1e-8, "df {df}, x {x}: {got} vs {want}");
        }
    }
}

#[test]
fn percent_one_decimal() {
    assert_eq!(format!("{:.1}", percent(1499, 1600)), "93.7");
    assert_eq!(format!("{:.1}", percent(0, 10)), "0.0");
}

fn table() -> impl Strategy<Value = Vec<Vec<u64>>> {
    (2..5usize, 2..5usize).prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(1..500u64, c), r))
}

fn sample(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0..8u8).prop_map(f64::from), 1..max)
}

proptest! {
    #[test]
    fn chi_square_invariant_under_row_and_column_permutation(
        counts in table(),
        rot_r in 0..4usize,
        rot_c in 0..4usize,
    ) {
        let base = chi_square(&ContingencyTable::from_counts(counts.clone()).unwrap(), false).unwrap();
        let mut permuted = counts.clone();
        let nr = permuted.len();
        permuted.rotate_left(rot_r % nr);
        for row in &mut permuted {
            let nc = row.len();
            row.rotate_left(rot_c % nc);
        }
        let p = chi_square(&ContingencyTable::from_counts(permuted).unwrap(), false).unwrap();
        prop_assert!((base.statistic - p.statistic).abs() <= 1e-9 * base.statistic.max(1.0));
        prop_assert_eq!(base.df, p.df);
    }

    #[test]
    fn chi_square_invariant_under_transpose(counts in table()) {
        let t = ContingencyTable::from_counts(counts).unwrap();
        let a = chi_square(&t, false).unwrap();
        let b = chi_square(&t.transpose(), false).unwrap();
        prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * a.statistic.max(1.0));
    }

    #[test]
    fn yates_never_increases_the_statistic(counts in prop::collection::vec(prop::collection::vec(1..500u64, 2), 2)) {
        let t = ContingencyTable::from_counts(counts).unwrap();
        prop_assert!(chi_square(&t, true).unwrap().statistic <= chi_square(&t, false).unwrap().statistic + 1e-9);
    }

    #[test]
    fn u_statistics_sum_to_product(a in sample(80), b in sample(80)) {
        let r = mann_whitney_u(&a, &b).unwrap();
        prop_assert_eq!(r.u_a + r.u_b, (a.len() * b.len()) as f64);
        prop_assert!((0.0..=1.0).contains(&r.result.p_value));
    }

    #[test]
    fn mann_whitney_p_symmetric_in_samples(a in sample(40), b in sample(40)) {
        let x = mann_whitney_u(&a, &b).unwrap();
        let y = mann_whitney_u(&b, &a).unwrap();
        prop_assert_eq!(x.u_a, y.u_b);
        prop_assert!((x.result.p_value - y.result.p_value).abs() < 1e-9);
    }

    #[test]
    fn t_statistic_antisymmetric(
        a in prop::collection::vec(0.0..10.0f64, 2..40),
        b in prop::collection::vec(0.0..10.0f64, 2..40),
        welch in any::<bool>(),
    ) {
        let x = t_test(&a, &b, welch).unwrap();
        let y = t_test(&b, &a, welch).unwrap();
        prop_assert_eq!(x.statistic, -y.statistic);
        prop_assert!((x.p_value - y.p_value).abs() < 1e-12);
    }

    #[test]
    fn t_statistic_shift_invariant(
        a in prop::collection::vec(0.0..10.0f64, 2..30),
        b in prop::collection::vec(0.0..10.0f64, 2..30),
        shift in -50.0..50.0f64,
    ) {
        let x = t_test(&a, &b, true).unwrap();
        let sa: Vec<f64> = a.iter().map(|v| v + shift).collect();
        let sb: Vec<f64> = b.iter().map(|v| v + shift).collect();
        let y = t_test(&sa, &sb, true).unwrap();
        prop_assert!((x.statistic - y.statistic).abs() < 1e-6 * x.statistic.abs().max(1.0));
    }
}
