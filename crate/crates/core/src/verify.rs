//! Monte Carlo checks of the large-deviation behaviour of flights.
//!
//! Every estimator splits its samples into fixed chunks of [`CHUNK`] paths;
//! chunk `k` draws from `stream.substream(k)` and only integer counts are
//! combined, so results do not depend on the rayon pool size.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::flight::{check_positive, check_standard_dimension, FlightSpec, Model, Tracer};
use crate::format::{fmt12, round12};
use crate::rate::{exit_rate_bound, rate_inf_over_tail, RateFunction};
use crate::sampling::RngStream;
use crate::stats::{wilson_interval, Z_99};

/// Paths per substream.
pub const CHUNK: u64 = 1 << 16;

/// Minimum sample count accepted by the estimators.
pub const MIN_SAMPLES: u64 = 1_000;

/// Expected number of tail hits required by the feasibility gate.
pub const MIN_EXPECTED_HITS: f64 = 50.0;

/// A flight family indexed by horizon: conditional flights make
/// `n_t = round(t w)` turns, standard flights keep their intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlightTemplate {
    Conditional {
        family: Family,
        d: usize,
        c: f64,
        w: f64,
    },
    Standard {
        d: usize,
        c: f64,
        lambda: f64,
    },
}

impl FlightTemplate {
    pub fn conditional(family: Family, d: usize, c: f64, w: f64) -> Result<Self> {
        family.check_dimension(d)?;
        check_positive("c", c)?;
        check_positive("w", w)?;
        Ok(Self::Conditional { family, d, c, w })
    }

    pub fn standard(d: usize, c: f64, lambda: f64) -> Result<Self> {
        check_standard_dimension(d)?;
        check_positive("c", c)?;
        check_positive("lambda", lambda)?;
        Ok(Self::Standard { d, c, lambda })
    }

    pub fn speed(&self) -> f64 {
        match *self {
            Self::Conditional { c, .. } | Self::Standard { c, .. } => c,
        }
    }

    pub fn dimension(&self) -> usize {
        match *self {
            Self::Conditional { d, .. } | Self::Standard { d, .. } => d,
        }
    }

    pub fn at_horizon(&self, t: f64) -> Result<FlightSpec> {
        match *self {
            Self::Conditional { family, d, c, w } => {
                let n = (t * w).round();
                if n < 1.0 {
                    return Err(Error::param(
                        "t",
                        format!("round(t w) = round({t} * {w}) must be at least one turn"),
                    ));
                }
                FlightSpec::conditional(family, d, c, n as u64, t)
            }
            Self::Standard { d, c, lambda } => FlightSpec::standard(d, c, lambda, t),
        }
    }

    /// Rate function of `Z(t)/t` for this family.
    pub fn rate(&self) -> Result<RateFunction> {
        match *self {
            Self::Conditional { family, d, c, w } => RateFunction::conditional(family, d, c, w),
            Self::Standard { d, c, lambda } => RateFunction::standard(d, lambda, c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub t: f64,
    pub r: f64,
    pub hits: u64,
    pub n_samples: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `-(1/t) ln p_hat`; infinite when no hit was observed.
    pub empirical_rate: f64,
}

impl TailEstimate {
    pub fn from_counts(t: f64, r: f64, hits: u64, n_samples: u64) -> Self {
        let p_hat = hits as f64 / n_samples as f64;
        let (ci_low, ci_high) = wilson_interval(hits, n_samples, Z_99);
        Self {
            t,
            r,
            hits,
            n_samples,
            p_hat,
            ci_low,
            ci_high,
            empirical_rate: empirical_rate(p_hat, t),
        }
    }

    /// 99% interval of the empirical rate, mapped through `-(1/t) ln p`.
    pub fn rate_interval(&self) -> (f64, f64) {
        (
            empirical_rate(self.ci_high, self.t),
            empirical_rate(self.ci_low, self.t),
        )
    }

    pub fn rate_half_width(&self) -> f64 {
        let (lo, hi) = self.rate_interval();
        0.5 * (hi - lo)
    }
}

fn empirical_rate(p: f64, t: f64) -> f64 {
    if p <= 0.0 {
        f64::INFINITY
    } else if p >= 1.0 {
        0.0
    } else {
        -p.ln() / t
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Counts {
    endpoint: u64,
    exit: u64,
    violations: u64,
}

impl std::ops::Add for Counts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            endpoint: self.endpoint + o.endpoint,
            exit: self.exit + o.exit,
            violations: self.violations + o.violations,
        }
    }
}

/// Counts paths whose endpoint, resp. running maximum, exceeds `r t`.
fn count_exceedances(spec: &FlightSpec, r: f64, n_samples: u64, stream: RngStream) -> Counts {
    let level = r * spec.t;
    let chunks = n_samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|k| {
            let size = CHUNK.min(n_samples - k * CHUNK);
            let mut rng = stream.substream(k).rng();
            let mut tracer = Tracer::new();
            let mut counts = Counts::default();
            for _ in 0..size {
                let s = tracer.summarize(spec, &mut rng);
                let end = r <= 0.0 || s.endpoint_norm > level;
                let exit = r <= 0.0 || s.max_norm > level;
                counts.endpoint += end as u64;
                counts.exit += exit as u64;
                counts.violations += (end && !exit) as u64;
            }
            counts
        })
        .reduce(Counts::default, |a, b| a + b)
}

fn check_threshold(r: f64) -> Result<()> {
    if r >= 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            "r",
            format!("threshold must be finite and >= 0, got {r}"),
        ))
    }
}

fn check_samples(n: u64) -> Result<()> {
    if n >= MIN_SAMPLES {
        Ok(())
    } else {
        Err(Error::param(
            "n_samples",
            format!("need at least {MIN_SAMPLES}, got {n}"),
        ))
    }
}

/// Estimates `P(|Z(t)| / t > r)` from `n_samples` simulated endpoints.
/// Thresholds at or beyond `c` are allowed and give (almost surely) zero hits.
pub fn estimate_tail(
    spec: &FlightSpec,
    r: f64,
    n_samples: u64,
    stream: RngStream,
) -> Result<TailEstimate> {
    spec.validate()?;
    check_threshold(r)?;
    check_samples(n_samples)?;
    let counts = count_exceedances(spec, r, n_samples, stream);
    Ok(TailEstimate::from_counts(
        spec.t,
        r,
        counts.endpoint,
        n_samples,
    ))
}

/// Rejects runs whose predicted tail probability `exp(-t rate)` is below
/// `50 / n_samples`.
pub fn check_feasibility(rate: f64, t: f64, n_samples: u64) -> Result<()> {
    let predicted = (-t * rate).exp();
    let floor = MIN_EXPECTED_HITS / n_samples as f64;
    if predicted >= floor {
        return Ok(());
    }
    let suggested_t_max = if rate > 0.0 && floor < 1.0 {
        (n_samples as f64 / MIN_EXPECTED_HITS).ln() / rate
    } else {
        0.0
    };
    Err(Error::Infeasible {
        t,
        predicted,
        floor,
        suggested_t_max,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub t_grid: Vec<f64>,
    pub estimates: Vec<TailEstimate>,
    /// Fitted decay rate: minus the OLS slope of `ln p_hat` on `t`.
    pub slope: f64,
    /// 99% interval for `slope` (Student t on the OLS standard error).
    pub slope_ci: (f64, f64),
    pub intercept: f64,
    /// Infimum of the analytic rate over the tail `{|z| >= r}`.
    pub analytic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
}

/// Ordinary least squares of `y` on `x` with intercept.
pub fn ols(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|xi| (xi - mx) * (xi - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(xi, yi)| (xi - mx) * (yi - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let e = yi - intercept - slope * xi;
            e * e
        })
        .sum();
    let slope_se = if x.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        f64::INFINITY
    };
    LineFit {
        slope,
        intercept,
        slope_se,
    }
}

fn check_grid(t_grid: &[f64], min_len: usize) -> Result<()> {
    if t_grid.len() < min_len {
        return Err(Error::param(
            "t_grid",
            format!("need at least {min_len} horizons, got {}", t_grid.len()),
        ));
    }
    if t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::param(
            "t_grid",
            "horizons must be positive and finite",
        ));
    }
    if t_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param(
            "t_grid",
            "horizons must be strictly increasing",
        ));
    }
    Ok(())
}

/// Estimates the tail at each horizon and regresses `ln p_hat` on `t`.
/// Horizon `i` uses `stream.substream(i)`.
pub fn fit_decay_rate(
    template: &FlightTemplate,
    r: f64,
    t_grid: &[f64],
    n_samples_per_t: u64,
    stream: RngStream,
) -> Result<RateFit> {
    check_grid(t_grid, 3)?;
    check_threshold(r)?;
    check_samples(n_samples_per_t)?;
    let analytic = rate_inf_over_tail(&template.rate()?, r);
    for &t in t_grid {
        check_feasibility(analytic, t, n_samples_per_t)?;
    }
    let estimates = t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            estimate_tail(
                &template.at_horizon(t)?,
                r,
                n_samples_per_t,
                stream.substream(i as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(e) = estimates.iter().find(|e| e.hits == 0) {
        return Err(Error::InsufficientSamples {
            t: e.t,
            n_samples: e.n_samples,
        });
    }
    let ys: Vec<f64> = estimates.iter().map(|e| e.p_hat.ln()).collect();
    let fit = ols(t_grid, &ys);
    let q = student_t_quantile(t_grid.len() - 2);
    let slope = -fit.slope;
    Ok(RateFit {
        t_grid: t_grid.to_vec(),
        estimates,
        slope,
        slope_ci: (slope - q * fit.slope_se, slope + q * fit.slope_se),
        intercept: fit.intercept,
        analytic,
    })
}

/// Two-sided 99% Student t quantile.
fn student_t_quantile(dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64)
        .map(|d| d.inverse_cdf(0.995))
        .unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitEstimate {
    /// Estimate of `Psi(t; r t) = P(sup_s |Z(s)| > r t)`.
    pub exit: TailEstimate,
    /// Endpoint tail `P(|Z(t)| > r t)` from the same paths.
    pub endpoint: TailEstimate,
    /// `l(d)`, the exponent of the asymptotic lower bound.
    pub bound: f64,
}

impl ExitEstimate {
    /// Empirical exit rate does not exceed `l(d)` plus twice the half-width
    /// of its 99% interval.
    pub fn within_bound(&self) -> bool {
        self.exit.empirical_rate <= self.bound + 2.0 * self.exit.rate_half_width()
    }
}

/// Estimates the exit probability of a standard flight from full paths.
/// Errors if any path ends beyond `r t` without its running maximum doing so.
pub fn estimate_exit_probability(
    spec: &FlightSpec,
    r: f64,
    n_samples: u64,
    stream: RngStream,
) -> Result<ExitEstimate> {
    spec.validate()?;
    let Model::Standard { lambda } = spec.model else {
        return Err(Error::UnsupportedModel(
            "exit probabilities need a standard (Z) flight".into(),
        ));
    };
    if !(r > 0.0 && r < spec.c) {
        return Err(Error::param(
            "r",
            format!("need 0 < r < c = {}, got {r}", spec.c),
        ));
    }
    check_samples(n_samples)?;
    let counts = count_exceedances(spec, r, n_samples, stream);
    if counts.violations > 0 || counts.exit < counts.endpoint {
        return Err(Error::InclusionViolated(counts.violations));
    }
    Ok(ExitEstimate {
        exit: TailEstimate::from_counts(spec.t, r, counts.exit, n_samples),
        endpoint: TailEstimate::from_counts(spec.t, r, counts.endpoint, n_samples),
        bound: exit_rate_bound(spec.d, lambda, spec.c, r)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaceRow {
    pub t: f64,
    pub a: TailEstimate,
    pub b: TailEstimate,
    /// `p_hat_a / p_hat_b`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaceTable {
    pub rows: Vec<RaceRow>,
    /// OLS slope of `ln ratio` on `t`.
    pub log_ratio_slope: f64,
    /// Analytic prediction of that slope: `rate_b(radius) - rate_a(radius)`.
    pub predicted_slope: f64,
}

impl RaceTable {
    /// The ratio shrinks with `t`, i.e. family `a` concentrates faster.
    pub fn decreasing(&self) -> bool {
        self.log_ratio_slope < 0.0
    }
}

/// Tail masses outside the ball of radius `radius` for two families on a
/// common grid, and their ratio. Family `a` uses `stream.substream(0)`,
/// family `b` uses `stream.substream(1)`.
pub fn convergence_race(
    a: &FlightTemplate,
    b: &FlightTemplate,
    radius: f64,
    t_grid: &[f64],
    n_samples: u64,
    stream: RngStream,
) -> Result<RaceTable> {
    if a.speed() != b.speed() {
        return Err(Error::param("c", "both families must share the speed"));
    }
    if !(radius > 0.0 && radius < a.speed()) {
        return Err(Error::param(
            "radius",
            format!("need 0 < radius < c, got {radius}"),
        ));
    }
    check_grid(t_grid, 2)?;
    check_samples(n_samples)?;
    let (sa, sb) = (stream.substream(0), stream.substream(1));
    let rows = t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| -> Result<RaceRow> {
            let ea = estimate_tail(&a.at_horizon(t)?, radius, n_samples, sa.substream(i as u64))?;
            let eb = estimate_tail(&b.at_horizon(t)?, radius, n_samples, sb.substream(i as u64))?;
            if let Some(e) = [ea, eb].into_iter().find(|e| e.hits == 0) {
                return Err(Error::InsufficientSamples {
                    t: e.t,
                    n_samples: e.n_samples,
                });
            }
            Ok(RaceRow {
                t,
                a: ea,
                b: eb,
                ratio: ea.p_hat / eb.p_hat,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ys: Vec<f64> = rows.iter().map(|row| row.ratio.ln()).collect();
    let predicted_slope =
        rate_inf_over_tail(&b.rate()?, radius) - rate_inf_over_tail(&a.rate()?, radius);
    Ok(RaceTable {
        log_ratio_slope: ols(t_grid, &ys).slope,
        predicted_slope,
        rows,
    })
}

/// What a verification run checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    /// Fitted decay rate of the endpoint tail against the analytic rate.
    #[default]
    Fit,
    /// Exit-probability lower bound at the largest horizon.
    Exit,
}

/// Experiment manifest for [`run_verification`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub model: String,
    pub d: usize,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    pub r: f64,
    pub t_grid: Vec<f64>,
    pub samples_per_t: u64,
    pub seed: u64,
    #[serde(default)]
    pub check: Check,
    /// Accepted interval for the fitted slope; defaults to the analytic
    /// rate +-30%.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accept: Option<(f64, f64)>,
}

impl VerifyConfig {
    pub fn template(&self) -> Result<FlightTemplate> {
        match self.model.as_str() {
            "Z" | "z" => {
                if self.w.is_some() {
                    return Err(Error::param("w", "standard (Z) flights take lambda, not w"));
                }
                let lambda = self
                    .lambda
                    .ok_or_else(|| Error::param("lambda", "required for model Z"))?;
                FlightTemplate::standard(self.d, self.c, lambda)
            }
            other => {
                let family: Family = other.parse().map_err(|_| {
                    Error::param("model", format!("expected X, Y or Z, got `{other}`"))
                })?;
                if self.lambda.is_some() {
                    return Err(Error::param(
                        "lambda",
                        "conditional flights take w, not lambda",
                    ));
                }
                let w = self
                    .w
                    .ok_or_else(|| Error::param("w", "required for models X and Y"))?;
                FlightTemplate::conditional(family, self.d, self.c, w)
            }
        }
    }

    /// Checks every field and the feasibility gate before any simulation.
    pub fn validate(&self) -> Result<FlightTemplate> {
        let template = self.template()?;
        if !(self.r > 0.0 && self.r < self.c) {
            return Err(Error::param(
                "r",
                format!("need 0 < r < c = {}, got {}", self.c, self.r),
            ));
        }
        match self.check {
            Check::Fit => check_grid(&self.t_grid, 3)?,
            Check::Exit => {
                check_grid(&self.t_grid, 1)?;
                if !matches!(template, FlightTemplate::Standard { .. }) {
                    return Err(Error::param("check", "exit checks need model Z"));
                }
            }
        }
        if self.samples_per_t < MIN_SAMPLES {
            return Err(Error::param(
                "samples_per_t",
                format!("need at least {MIN_SAMPLES}, got {}", self.samples_per_t),
            ));
        }
        if let Some((lo, hi)) = self.accept {
            if lo > hi || lo.is_nan() || hi.is_nan() {
                return Err(Error::param(
                    "accept",
                    format!("empty interval [{lo}, {hi}]"),
                ));
            }
        }
        for &t in &self.t_grid {
            template.at_horizon(t)?;
        }
        let rate = rate_inf_over_tail(&template.rate()?, self.r);
        for &t in &self.t_grid {
            check_feasibility(rate, t, self.samples_per_t)?;
        }
        Ok(template)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub config: VerifyConfig,
    /// Per-horizon estimates: endpoint tails for `fit`, exit
    /// probabilities for `exit`.
    pub rows: Vec<TailEstimate>,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub analytic_rate: f64,
    pub accept: (f64, f64),
    pub exit: Option<ExitEstimate>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// CSV `(t, p_hat, ci_low, ci_high, empirical_rate)`.
    pub fn write_csv<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "t,p_hat,ci_low,ci_high,empirical_rate")?;
        for e in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt12(e.t),
                fmt12(e.p_hat),
                fmt12(e.ci_low),
                fmt12(e.ci_high),
                fmt12(e.empirical_rate)
            )?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let mut v = json!({
            "check": self.config.check,
            "slope": json_num(self.slope),
            "slope_ci": [json_num(self.slope_ci.0), json_num(self.slope_ci.1)],
            "analytic_rate": json_num(self.analytic_rate),
            "accept": [json_num(self.accept.0), json_num(self.accept.1)],
            "verdict": self.verdict(),
        });
        if let Some(exit) = &self.exit {
            v["exit_t"] = json_num(exit.exit.t);
            v["exit_p_hat"] = json_num(exit.exit.p_hat);
            v["endpoint_p_hat"] = json_num(exit.endpoint.p_hat);
            v["exit_rate"] = json_num(exit.exit.empirical_rate);
            v["exit_rate_half_width"] = json_num(exit.exit.rate_half_width());
            v["exit_bound"] = json_num(exit.bound);
        }
        v
    }
}

/// Non-finite values become strings ("inf"), since JSON has no infinity.
fn json_num(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(round12(x))
    } else {
        json!(fmt12(x))
    }
}

/// Runs a validated experiment. Horizon `i` draws from
/// `RngStream::new(seed, 0).substream(i)`.
pub fn run_verification(config: &VerifyConfig) -> Result<VerificationReport> {
    let template = config.validate()?;
    let stream = RngStream::new(config.seed, 0);
    let analytic = rate_inf_over_tail(&template.rate()?, config.r);
    let accept = config.accept.unwrap_or((0.7 * analytic, 1.3 * analytic));
    match config.check {
        Check::Fit => {
            let fit = fit_decay_rate(
                &template,
                config.r,
                &config.t_grid,
                config.samples_per_t,
                stream,
            )?;
            let pass = accept.0 <= fit.slope && fit.slope <= accept.1;
            Ok(VerificationReport {
                config: config.clone(),
                rows: fit.estimates,
                slope: fit.slope,
                slope_ci: fit.slope_ci,
                analytic_rate: analytic,
                accept,
                exit: None,
                pass,
            })
        }
        Check::Exit => {
            let exits = config
                .t_grid
                .iter()
                .enumerate()
                .map(|(i, &t)| {
                    estimate_exit_probability(
                        &template.at_horizon(t)?,
                        config.r,
                        config.samples_per_t,
                        stream.substream(i as u64),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let rows: Vec<TailEstimate> = exits.iter().map(|e| e.exit).collect();
            let (slope, slope_ci) = if rows.len() >= 3 && rows.iter().all(|e| e.hits > 0) {
                let ys: Vec<f64> = rows.iter().map(|e| e.p_hat.ln()).collect();
                let fit = ols(&config.t_grid, &ys);
                let q = student_t_quantile(rows.len() - 2);
                (
                    -fit.slope,
                    (-fit.slope - q * fit.slope_se, -fit.slope + q * fit.slope_se),
                )
            } else {
                (f64::NAN, (f64::NAN, f64::NAN))
            };
            let last = *exits.last().expect("grid validated non-empty");
            Ok(VerificationReport {
                config: config.clone(),
                rows,
                slope,
                slope_ci,
                analytic_rate: last.bound,
                accept: (0.0, last.bound + 2.0 * last.exit.rate_half_width()),
                exit: Some(last),
                pass: last.within_bound(),
            })
        }
    }
}
