use qdioph::siegelmc::siegel_mc_check;

/// Doubling the sample count shrinks the standard error by about 1/√2.
/// The count has a heavy tail, so one pair of runs is noisy; the median
/// over independent seeds is compared instead.
#[test]
fn std_error_shrinks_with_sample_size() {
    let r = (2.0 / std::f64::consts::PI).sqrt();
    let mut ratios: Vec<f64> = (0..9u64)
        .map(|seed| {
            let a = siegel_mc_check(r, 10_000, seed).unwrap();
            let b = siegel_mc_check(r, 20_000, seed + 1000).unwrap();
            b.std_error / a.std_error
        })
        .collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    let expected = 0.5f64.sqrt();
    assert!((median / expected - 1.0).abs() <= 0.2, "median ratio {median}, ratios {ratios:?}");
}
