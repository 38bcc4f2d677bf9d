//! Simulation-scale checks of the null approximations and of power.

use vtest::asymptotics::{normal_test, null_mixture};
use vtest::sim::{
    estimate_fpr, estimate_power, replicate_p_values, Dataset, Model, NullKind, NullModelConfig,
    ScenarioConfig, TestKind, TestSpec,
};
use vtest::stats::{clopper_pearson, ks_distance, ks_two_sample};
use vtest::vstat::null_draws;
use vtest::{
    chi_square_test, permutation_test, BinaryMatrix, BlockPartition, PValueType, ResamplingPlan,
    TestInput,
};

fn null_binary(kind: NullKind, n: usize, p: usize, seed: u64) -> BinaryMatrix {
    match Model::Null(NullModelConfig::new(kind, n, p, seed))
        .replicate(0)
        .unwrap()
    {
        Dataset::Binary(m) => m,
        Dataset::Numeric(_) => unreachable!(),
    }
}

fn block_sup_norm(blocks: usize, seed: u64) -> f64 {
    let m = null_binary(NullKind::VaryingFreq, 10, blocks * 5, seed);
    let part = BlockPartition::new((0..blocks * 5).map(|j| j / 5).collect()).unwrap();
    let input = TestInput::binary_blocks(&m, &part).unwrap();
    let mix = null_mixture(&input).unwrap();
    let draws = null_draws(&input, 20_000, seed + 1).unwrap();
    ks_distance(&draws, |x| mix.cdf(x))
}

#[test]
fn mixture_improves_with_more_blocks() {
    let wins = (0..7)
        .filter(|&s| block_sup_norm(200, 40 + s) < block_sup_norm(20, 40 + s))
        .count();
    assert!(wins >= 5, "B=200 closer in only {wins} of 7 seeds");
}

#[test]
fn normal_and_chi_square_agree_at_large_scale() {
    for seed in 0..3 {
        let input = TestInput::Binary(null_binary(NullKind::VaryingFreq, 500, 500, 50 + seed));
        let a = normal_test(&input).unwrap().p_value;
        let b = chi_square_test(&input).unwrap().p_value;
        assert!(
            (a - b).abs() <= 0.01,
            "seed {seed}: normal {a}, chi-square {b}"
        );
    }
}

#[test]
fn chi_square_power_on_separated_populations() {
    let cfg = ScenarioConfig::new(vec![25, 25], 0.2, 1000, 60);
    let r = estimate_power(&cfg, &TestSpec::new(TestKind::ChiSquare), 0.05, 200).unwrap();
    assert!(r.rate >= 0.9, "power {}", r.rate);
}

#[test]
fn tw_power_on_separated_populations() {
    let cfg = ScenarioConfig::new(vec![25, 25], 0.2, 1000, 61);
    let r = estimate_power(&cfg, &TestSpec::new(TestKind::TracyWidom), 0.05, 200).unwrap();
    assert!(r.rate >= 0.9, "power {}", r.rate);
}

#[test]
fn identical_windows_hold_the_level() {
    let mut cfg = ScenarioConfig::new(vec![20, 30], 0.1, 80, 62);
    cfg.windows = Some(vec![(0.3, 0.5); 2]);
    let r = estimate_power(&cfg, &TestSpec::new(TestKind::Auto), 0.05, 600).unwrap();
    let (lo, hi) = clopper_pearson(r.rejections, r.reps, 0.99);
    assert!(lo <= 0.05 && 0.05 <= hi, "rate {} [{lo}, {hi}]", r.rate);
}

#[test]
fn permutation_p_values_hold_the_level() {
    let spec = TestSpec::new(TestKind::Permutation).with_resamples(500);
    let r = estimate_fpr(
        &NullModelConfig::new(NullKind::HighFreq, 30, 40, 63),
        &spec,
        0.05,
        600,
    )
    .unwrap();
    let (lo, hi) = clopper_pearson(r.rejections, r.reps, 0.99);
    assert!(lo <= 0.05 && 0.05 <= hi, "rate {} [{lo}, {hi}]", r.rate);
}

#[test]
fn complementing_every_column_leaves_p_unchanged() {
    let plan = ResamplingPlan::new(300, 9, PValueType::Valid).unwrap();
    for seed in 0..20 {
        let m = null_binary(NullKind::VaryingFreq, 24, 30, 70 + seed);
        let mut flipped = m.clone();
        (0..m.n_cols()).for_each(|j| flipped.flip_column(j));
        let a = permutation_test(&TestInput::Binary(m), &plan).unwrap();
        let b = permutation_test(&TestInput::Binary(flipped), &plan).unwrap();
        assert_eq!(a.statistic, b.statistic);
        assert_eq!(a.p_value, b.p_value);
    }
}

#[test]
fn flipped_scenarios_keep_the_p_value_distribution() {
    let mut plain = ScenarioConfig::new(vec![20, 20], 0.1, 60, 80);
    plain.windows = Some(vec![(0.2, 0.4); 2]);
    let mut flipped = plain.clone();
    flipped.flip_frac = 1.0;
    let spec = TestSpec::new(TestKind::Permutation).with_resamples(300);
    let a = replicate_p_values(&Model::Scenario(plain), &spec, 300).unwrap();
    let b = replicate_p_values(&Model::Scenario(flipped), &spec, 300).unwrap();
    let ks = ks_two_sample(&a, &b);
    assert!(ks.p_value > 0.01, "KS p {}", ks.p_value);
}
