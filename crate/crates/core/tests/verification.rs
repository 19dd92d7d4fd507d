use flightlab_core::rate::standard_rate_2d;
use flightlab_core::{
    convergence_race, estimate_tail, Family, FlightSpec, FlightTemplate, IsotropicDensity,
    RngStream, StandardLaw,
};

#[test]
fn z2_tail_matches_exact_exponential() {
    // P(|Z_2(t)| > r t) = exp(-t I_2(r)) for every t.
    let (t, r) = (10.0, 0.99);
    let exact = (-t * standard_rate_2d(1.0, 1.0, r)).exp();
    let law = StandardLaw::new(2, 1.0, 1.0, t).unwrap();
    assert!((law.tail_probability(r * t) - exact).abs() < 1e-8 * exact.max(1e-3));
    let spec = FlightSpec::standard(2, 1.0, 1.0, t).unwrap();
    let e = estimate_tail(&spec, r, 1_000_000, RngStream::new(8, 0)).unwrap();
    assert!(e.hits > 50);
    assert!(
        e.ci_low <= exact && exact <= e.ci_high,
        "{exact} not in [{}, {}]",
        e.ci_low,
        e.ci_high
    );
}

#[test]
fn x2_empirical_rate_near_analytic() {
    let template = FlightTemplate::conditional(Family::X, 2, 1.0, 1.0).unwrap();
    let spec = template.at_horizon(10.0).unwrap();
    let e = estimate_tail(&spec, 0.5, 200_000, RngStream::new(9, 0)).unwrap();
    let analytic = 0.143_841;
    assert!(
        (e.empirical_rate - analytic).abs() < 0.3 * analytic,
        "{}",
        e.empirical_rate
    );
    // the d = 2 tail with n turns is exactly (1 - r^2)^(n/2)
    let exact = 0.75f64.powi(5);
    assert!(e.ci_low <= exact && exact <= e.ci_high);
}

#[test]
fn faster_conditional_family_wins_race() {
    let a = FlightTemplate::conditional(Family::X, 2, 1.0, 2.0).unwrap();
    let b = FlightTemplate::standard(2, 1.0, 1.0).unwrap();
    let race = convergence_race(
        &a,
        &b,
        0.3,
        &[10.0, 20.0, 30.0, 40.0],
        100_000,
        RngStream::new(10, 0),
    )
    .unwrap();
    assert!(race.decreasing());
    assert!(race.predicted_slope < 0.0);
    assert!(race.rows.last().unwrap().ratio < race.rows[0].ratio);
}

#[test]
fn identical_families_tie() {
    let a = FlightTemplate::standard(2, 1.0, 1.0).unwrap();
    let race = convergence_race(
        &a,
        &a,
        0.3,
        &[5.0, 10.0, 15.0],
        200_000,
        RngStream::new(11, 0),
    )
    .unwrap();
    assert_eq!(race.predicted_slope, 0.0);
    for row in &race.rows {
        assert!((row.ratio - 1.0).abs() < 0.05, "t={}: {}", row.t, row.ratio);
    }
}

#[test]
fn slow_conditional_family_loses_race_inside_crossing() {
    let a = FlightTemplate::conditional(Family::Y, 4, 1.0, 0.6).unwrap();
    let b = FlightTemplate::standard(4, 1.0, 1.0).unwrap();
    let race = convergence_race(
        &a,
        &b,
        0.3,
        &[10.0, 20.0, 30.0, 40.0],
        100_000,
        RngStream::new(12, 0),
    )
    .unwrap();
    assert!(!race.decreasing());
    assert!(race.predicted_slope > 0.0);
}

#[test]
fn wilson_intervals_cover_exact_tail() {
    let h = IsotropicDensity::new(Family::X, 3, 3, 1.0, 1.0).unwrap();
    let r = 0.5;
    let exact = 1.0 - h.radial_cdf(r);
    let spec = FlightSpec::conditional(Family::X, 3, 1.0, 3, 1.0).unwrap();
    let covered = (0..100)
        .filter(|&seed| {
            let e = estimate_tail(&spec, r, 2_000, RngStream::new(1000 + seed, 0)).unwrap();
            e.ci_low <= exact && exact <= e.ci_high
        })
        .count();
    assert!(covered >= 95, "{covered}/100");
}
