use flightlab_core::stats::{
    ks_critical_1pct, ks_statistic, ks_two_sample, ks_two_sample_critical_1pct,
};
use flightlab_core::{simulate, Family, FlightSpec, RngStream, Tracer};
use statrs::distribution::{Beta, ContinuousCDF};

#[test]
fn first_duration_of_x2_is_beta_one_n() {
    // Durations of X_2 are uniform spacings, so tau_1 / t ~ Beta(1, n).
    let (n, t) = (5u64, 2.0);
    let spec = FlightSpec::conditional(Family::X, 2, 1.0, n, t).unwrap();
    let mut rng = RngStream::new(3, 0).rng();
    let mut xs: Vec<f64> = (0..20_000)
        .map(|_| {
            let p = simulate(&spec, &mut rng).unwrap();
            p.change_times()[0] / t
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    let beta = Beta::new(1.0, n as f64).unwrap();
    let ks = ks_statistic(&xs, |x| beta.cdf(x));
    assert!(ks < ks_critical_1pct(xs.len()), "KS {ks}");
}

#[test]
fn z2_given_turn_count_matches_x2() {
    let n = 3;
    let z = FlightSpec::standard(2, 1.0, 1.0, 3.0).unwrap();
    let mut rng = RngStream::new(4, 0).rng();
    let mut tracer = Tracer::new();
    let mut from_z = Vec::new();
    while from_z.len() < 20_000 {
        let s = tracer.summarize(&z, &mut rng);
        if s.n_changes == n {
            from_z.push(s.endpoint_norm);
        }
    }
    let x = FlightSpec::conditional(Family::X, 2, 1.0, n, 3.0).unwrap();
    let mut rng = RngStream::new(4, 1).rng();
    let mut from_x: Vec<f64> = (0..20_000)
        .map(|_| tracer.summarize(&x, &mut rng).endpoint_norm)
        .collect();
    from_z.sort_by(f64::total_cmp);
    from_x.sort_by(f64::total_cmp);
    let ks = ks_two_sample(&from_z, &from_x);
    assert!(
        ks < ks_two_sample_critical_1pct(from_z.len(), from_x.len()),
        "KS {ks}"
    );
}

#[test]
fn endpoint_direction_is_isotropic() {
    // In three dimensions a uniform direction has a uniform first coordinate.
    for (family, n) in [(Family::X, 2), (Family::Y, 3)] {
        let spec = FlightSpec::conditional(family, 3, 1.0, n, 1.0).unwrap();
        let mut rng = RngStream::new(5, n).rng();
        let mut cos: Vec<f64> = (0..20_000)
            .map(|_| {
                let p = simulate(&spec, &mut rng).unwrap();
                p.endpoint()[0] / p.endpoint_norm()
            })
            .collect();
        cos.sort_by(f64::total_cmp);
        let ks = ks_statistic(&cos, |x| (0.5 * (x + 1.0)).clamp(0.0, 1.0));
        assert!(ks < ks_critical_1pct(cos.len()), "{family}: KS {ks}");
    }
}

#[test]
fn running_maximum_dominates_endpoint() {
    let spec = FlightSpec::standard(4, 2.0, 1.5, 3.0).unwrap();
    let mut rng = RngStream::new(6, 0).rng();
    let mut tracer = Tracer::new();
    for _ in 0..10_000 {
        let s = tracer.summarize(&spec, &mut rng);
        assert!(s.max_norm >= s.endpoint_norm);
        assert!(s.max_norm <= 2.0 * 3.0);
    }
}
