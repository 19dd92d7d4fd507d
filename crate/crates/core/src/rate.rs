//! Large-deviation rate functions of the rescaled endpoint `Z(t)/t`.
//!
//! Every rate here is radial, so functions take the radius `r = |z|`.
//! `f64::INFINITY` is the +infinity of the extended reals; comparisons and
//! infima treat it as absorbing.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::flight::check_positive;
use crate::format::fmt12;

/// `log(c / sqrt(c^2 - r^2))` for `r < c`.
#[inline]
fn log_speed_ratio(c: f64, r: f64) -> f64 {
    let u = r / c;
    -0.5 * (-(u * u)).ln_1p()
}

/// Limit of `beta(t w_t) / t` when `w_t -> w`: half the exponent growth
/// rate of the conditional density.
pub fn b_limit(family: Family, d: usize, w: f64) -> Result<f64> {
    family.check_dimension(d)?;
    check_positive("w", w)?;
    Ok(b_unchecked(family, d, w))
}

fn b_unchecked(family: Family, d: usize, w: f64) -> f64 {
    match family {
        Family::X => w * (d as f64 - 1.0) / 2.0,
        Family::Y => w * (d as f64 / 2.0 - 1.0),
    }
}

/// `I_d(r; w)` for family X, `J_d(r; w)` for family Y:
/// `2 b(w) log(c / sqrt(c^2 - r^2))` on `r < c`, `+inf` from `c` on.
pub fn conditional_rate(family: Family, d: usize, c: f64, w: f64, r: f64) -> f64 {
    if r >= c {
        return f64::INFINITY;
    }
    let coef = match family {
        Family::X => w * (d as f64 - 1.0),
        Family::Y => 2.0 * w * (d as f64 / 2.0 - 1.0),
    };
    coef * log_speed_ratio(c, r)
}

/// `I_2(r) = lambda (1 - sqrt(1 - r^2/c^2))` on `r <= c`.
pub fn standard_rate_2d(lambda: f64, c: f64, r: f64) -> f64 {
    if r > c {
        return f64::INFINITY;
    }
    let x = (r / c) * (r / c);
    // 1 - sqrt(1 - x) = x / (1 + sqrt(1 - x)), stable for small x
    lambda * x / (1.0 + (1.0 - x).sqrt())
}

/// `J_4(r) = lambda r^2 / c^2` on `r <= c`.
pub fn standard_rate_4d(lambda: f64, c: f64, r: f64) -> f64 {
    if r > c {
        return f64::INFINITY;
    }
    lambda / (c * c) * r * r
}

/// Rate of `B_d(sigma^2)/sqrt(t)` for Brownian motion: `r^2 / (2 sigma^2)`.
pub fn brownian_limit_rate(sigma2: f64, r: f64) -> f64 {
    r * r / (2.0 * sigma2)
}

/// Exponent `l(d)` in the lower bound `liminf (1/t) log Psi(t; r t) >= -l(d)`
/// for the exit probability of a standard flight.
pub fn exit_rate_bound(d: usize, lambda: f64, c: f64, r: f64) -> Result<f64> {
    match d {
        2 => Ok(standard_rate_2d(lambda, c, r)),
        4 => Ok(standard_rate_4d(lambda, c, r)),
        _ => Err(Error::UnsupportedModel(format!(
            "exit bound needs d in {{2, 4}}, got {d}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateFunction {
    Conditional {
        family: Family,
        d: usize,
        c: f64,
        w: f64,
    },
    Standard2d {
        lambda: f64,
        c: f64,
    },
    Standard4d {
        lambda: f64,
        c: f64,
    },
    BrownianLimit {
        sigma2: f64,
    },
}

impl RateFunction {
    pub fn conditional(family: Family, d: usize, c: f64, w: f64) -> Result<Self> {
        family.check_dimension(d)?;
        check_positive("c", c)?;
        check_positive("w", w)?;
        Ok(Self::Conditional { family, d, c, w })
    }

    pub fn standard(d: usize, lambda: f64, c: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        check_positive("c", c)?;
        match d {
            2 => Ok(Self::Standard2d { lambda, c }),
            4 => Ok(Self::Standard4d { lambda, c }),
            _ => Err(Error::UnsupportedModel(format!(
                "standard rates exist for d in {{2, 4}}, got {d}"
            ))),
        }
    }

    pub fn brownian(sigma2: f64) -> Result<Self> {
        check_positive("sigma2", sigma2)?;
        Ok(Self::BrownianLimit { sigma2 })
    }

    pub fn eval(&self, r: f64) -> f64 {
        let r = r.abs();
        match *self {
            Self::Conditional { family, d, c, w } => conditional_rate(family, d, c, w, r),
            Self::Standard2d { lambda, c } => standard_rate_2d(lambda, c, r),
            Self::Standard4d { lambda, c } => standard_rate_4d(lambda, c, r),
            Self::BrownianLimit { sigma2 } => brownian_limit_rate(sigma2, r),
        }
    }

    /// Speed `c`; `None` for the Brownian limit.
    pub fn speed(&self) -> Option<f64> {
        match *self {
            Self::Conditional { c, .. }
            | Self::Standard2d { c, .. }
            | Self::Standard4d { c, .. } => Some(c),
            Self::BrownianLimit { .. } => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Conditional {
                family: Family::X, ..
            } => "conditional_X",
            Self::Conditional {
                family: Family::Y, ..
            } => "conditional_Y",
            Self::Standard2d { .. } => "standard_2d",
            Self::Standard4d { .. } => "standard_4d",
            Self::BrownianLimit { .. } => "brownian_limit",
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match *self {
            Self::Conditional { d, .. } => Some(d),
            Self::Standard2d { .. } => Some(2),
            Self::Standard4d { .. } => Some(4),
            Self::BrownianLimit { .. } => None,
        }
    }

    /// `w` for conditional kinds, `lambda` for standard ones, `sigma^2` for
    /// the Brownian limit.
    pub fn parameter(&self) -> f64 {
        match *self {
            Self::Conditional { w, .. } => w,
            Self::Standard2d { lambda, .. } | Self::Standard4d { lambda, .. } => lambda,
            Self::BrownianLimit { sigma2 } => sigma2,
        }
    }
}

impl fmt::Display for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.dimension() {
            Some(d) => write!(f, "{}(d={d}, {})", self.kind(), self.parameter()),
            None => write!(f, "{}({})", self.kind(), self.parameter()),
        }
    }
}

/// `inf { rate(z) : |z| >= r }`. Every rate is nondecreasing in the radius,
/// so the infimum is the value at `r`.
pub fn rate_inf_over_tail(rate: &RateFunction, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    rate.eval(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Crossing radius as a multiple of `c`.
    pub gamma: f64,
    /// `sqrt(1 - w / lambda)`, a strict lower bound for `gamma`.
    pub xi: f64,
}

/// Radius multiple where `J_4(.; w)` and `J_4` exchange order when `w < lambda`.
///
/// With `u = (r/c)^2` the crossing solves `-w ln(1 - u) = lambda u`. The
/// difference `f(u) = -w ln(1 - u) - lambda u` is convex with `f(0) = 0` and
/// `f'(0) = w - lambda < 0`, so it has a single root in `(0, 1)`, and
/// `f(xi^2) < 0` puts it in `(xi^2, 1)`.
///
/// For small `w / lambda` the root is within `exp(-lambda / w)` of one, so
/// the bisection runs on `s = ln(1 - u)` over `(-700, ln(w / lambda))`,
/// where `f` is strictly decreasing in `s`. When `w / lambda < 1/700` the
/// root underflows and `gamma` rounds to one.
pub fn crossing_radius_4d(lambda: f64, c: f64, w: f64) -> Result<Crossing> {
    check_positive("lambda", lambda)?;
    check_positive("c", c)?;
    check_positive("w", w)?;
    if w >= lambda {
        return Err(Error::param(
            "w",
            format!("no crossing for w >= lambda ({w} >= {lambda}): J_4 <= J_4(.; w) everywhere"),
        ));
    }
    let xi = (1.0 - w / lambda).sqrt();
    // f expressed through s = ln(1 - u)
    let f = |s: f64| -w * s + lambda * s.exp_m1();
    let (mut lo, mut hi) = (-700.0, (w / lambda).ln());
    let f_hi = f(hi);
    if f_hi >= 0.0 || f_hi.is_nan() {
        return Err(Error::param(
            "w",
            format!("crossing bracket invalid: f(xi^2) = {f_hi} >= 0"),
        ));
    }
    if f(lo) <= 0.0 {
        return Ok(Crossing { gamma: 1.0, xi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
    }
    let v = (0.5 * (lo + hi)).exp();
    Ok(Crossing {
        gamma: (1.0 - v).sqrt(),
        xi,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Above,
    Equal,
    Below,
}

impl Order {
    pub fn symbol(self) -> &'static str {
        match self {
            Order::Above => ">",
            Order::Equal => "=",
            Order::Below => "<",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonPoint {
    pub r: f64,
    pub a: f64,
    pub b: f64,
    pub order: Order,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateComparison {
    pub a: RateFunction,
    pub b: RateFunction,
    pub points: Vec<ComparisonPoint>,
}

impl RateComparison {
    pub fn a_dominates(&self) -> bool {
        self.points.iter().all(|p| p.order != Order::Below)
    }

    pub fn b_dominates(&self) -> bool {
        self.points.iter().all(|p| p.order != Order::Above)
    }

    pub fn identical(&self) -> bool {
        self.points.iter().all(|p| p.order == Order::Equal)
    }

    /// Radii where the two rates coincide.
    pub fn equal_at(&self) -> Vec<f64> {
        self.points
            .iter()
            .filter(|p| p.order == Order::Equal)
            .map(|p| p.r)
            .collect()
    }

    /// Grid intervals `(r_i, r_{i+1})` across which the strict order flips
    /// (equal points are skipped).
    pub fn sign_changes(&self) -> Vec<(f64, f64)> {
        let strict: Vec<&ComparisonPoint> = self
            .points
            .iter()
            .filter(|p| p.order != Order::Equal)
            .collect();
        strict
            .windows(2)
            .filter(|w| w[0].order != w[1].order)
            .map(|w| (w[0].r, w[1].r))
            .collect()
    }

    /// Maximal runs of grid points sharing one order: `(from, to, order)`.
    pub fn regions(&self) -> Vec<(f64, f64, Order)> {
        let mut out: Vec<(f64, f64, Order)> = Vec::new();
        for p in &self.points {
            match out.last_mut() {
                Some(last) if last.2 == p.order => last.1 = p.r,
                _ => out.push((p.r, p.r, p.order)),
            }
        }
        out
    }
}

/// Tabulates two rates on `grid` with the sign of `a - b` (infinities
/// compare equal to each other).
pub fn compare_rates(a: &RateFunction, b: &RateFunction, grid: &[f64]) -> Result<RateComparison> {
    if let (Some(ca), Some(cb)) = (a.speed(), b.speed()) {
        if ca != cb {
            return Err(Error::param(
                "c",
                format!("rates must share the speed, got {ca} and {cb}"),
            ));
        }
    }
    let points = grid
        .iter()
        .map(|&r| {
            let (va, vb) = (a.eval(r), b.eval(r));
            let order = if va == vb {
                Order::Equal
            } else if va > vb {
                Order::Above
            } else {
                Order::Below
            };
            ComparisonPoint {
                r,
                a: va,
                b: vb,
                order,
            }
        })
        .collect();
    Ok(RateComparison {
        a: *a,
        b: *b,
        points,
    })
}

/// Writes rate grids as CSV `(kind, d, c, lambda_or_w, r, value)`.
pub fn write_rate_csv<W: Write>(
    out: &mut W,
    rates: &[RateFunction],
    grid: &[f64],
) -> std::io::Result<()> {
    writeln!(out, "kind,d,c,lambda_or_w,r,value")?;
    for rate in rates {
        let d = rate.dimension().map(|d| d.to_string()).unwrap_or_default();
        let c = rate.speed().map(fmt12).unwrap_or_default();
        for &r in grid {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                rate.kind(),
                d,
                c,
                fmt12(rate.parameter()),
                fmt12(r),
                fmt12(rate.eval(r))
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Bisection on the unreduced crossing equation in r.
    fn crossing_oracle(lambda: f64, c: f64, w: f64) -> f64 {
        let g = |r: f64| 2.0 * w * (c / (c * c - r * r).sqrt()).ln() - lambda * r * r / (c * c);
        // g < 0 near the origin when w < lambda, g -> +inf at c
        let (mut lo, mut hi) = (1e-6 * c, c * (1.0 - 1e-13));
        assert!(g(lo) < 0.0 && g(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi) / c
    }

    #[test]
    fn b_limit_values() {
        assert_eq!(b_limit(Family::X, 2, 2.0).unwrap(), 1.0);
        assert_eq!(b_limit(Family::Y, 4, 2.0).unwrap(), 2.0);
        assert!(b_limit(Family::X, 3, 0.0).is_err());
        assert!(b_limit(Family::Y, 2, 1.0).is_err());
    }

    #[test]
    fn conditional_values() {
        assert_eq!(conditional_rate(Family::X, 2, 1.0, 1.0, 0.0), 0.0);
        assert_relative_eq!(
            conditional_rate(Family::X, 2, 1.0, 1.0, 0.5),
            0.143_841_036_225_890_2,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            conditional_rate(Family::Y, 4, 1.0, 1.0, 0.5),
            0.287_682_072_451_780_4,
            max_relative = 1e-13
        );
        assert_eq!(conditional_rate(Family::X, 2, 1.0, 1.0, 1.0), f64::INFINITY);
        assert_eq!(conditional_rate(Family::Y, 3, 1.0, 1.0, 2.0), f64::INFINITY);
    }

    #[test]
    fn conditional_is_two_b_times_log() {
        for (family, d) in [
            (Family::X, 2),
            (Family::X, 5),
            (Family::Y, 3),
            (Family::Y, 6),
        ] {
            let b = b_limit(family, d, 0.7).unwrap();
            let r: f64 = 0.4;
            let want = 2.0 * b * (1.3 / (1.3f64 * 1.3 - r * r).sqrt()).ln();
            assert_relative_eq!(
                conditional_rate(family, d, 1.3, 0.7, r),
                want,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn standard_values() {
        assert_eq!(standard_rate_2d(1.0, 1.0, 1.0), 1.0);
        assert_relative_eq!(
            standard_rate_2d(1.0, 1.0, 0.5),
            1.0 - 0.75f64.sqrt(),
            max_relative = 1e-14
        );
        assert_eq!(standard_rate_2d(1.0, 1.0, 1.2), f64::INFINITY);
        assert_eq!(standard_rate_4d(1.0, 1.0, 0.5), 0.25);
        assert_eq!(standard_rate_4d(1.0, 1.0, 1.0), 1.0);
        assert_eq!(standard_rate_4d(3.0, 2.0, 1.0), 0.75);
        assert_eq!(standard_rate_4d(3.0, 2.0, 2.5), f64::INFINITY);
    }

    #[test]
    fn brownian_values_and_limit() {
        assert_eq!(brownian_limit_rate(1.0, 0.0), 0.0);
        assert_eq!(brownian_limit_rate(1.0, 1.0), 0.5);
        let lambda: f64 = 1e4;
        let c = lambda.sqrt();
        assert!((standard_rate_2d(lambda, c, 0.5) - brownian_limit_rate(1.0, 0.5)).abs() < 1e-4);
    }

    #[test]
    fn crossing_w06() {
        let x = crossing_radius_4d(1.0, 1.0, 0.6).unwrap();
        assert_relative_eq!(x.xi, 0.4f64.sqrt(), max_relative = 1e-15);
        let oracle = crossing_oracle(1.0, 1.0, 0.6);
        assert!((x.gamma - oracle).abs() < 1e-9, "{} vs {oracle}", x.gamma);
        assert!(x.gamma > 0.822 && x.gamma < 0.8225);
        assert!((x.gamma * x.gamma - 0.676).abs() < 1e-3);
    }

    #[test]
    fn crossing_for_small_w_ratio() {
        // root of -w ln v = lambda (1 - v) with v = 1 - u is about exp(-lambda / w)
        let x = crossing_radius_4d(1.0, 1.0, 0.1).unwrap();
        let v = 1.0 - x.gamma * x.gamma;
        // fixed point v = exp(-(1 - v) lambda / w), contracting since v is tiny
        let mut want = 0.0f64;
        for _ in 0..50 {
            want = (-(1.0 - want) / 0.1).exp();
        }
        assert!((v - want).abs() < 1e-9 * want, "{v} vs {want}");
        assert!(x.gamma > x.xi);
    }

    #[test]
    fn crossing_near_lambda_and_rejections() {
        let x = crossing_radius_4d(1.0, 1.0, 0.999).unwrap();
        assert!(x.gamma > x.xi && x.gamma < 1.0);
        assert!(crossing_radius_4d(1.0, 1.0, 1.5).is_err());
        assert!(crossing_radius_4d(1.0, 1.0, 1.0).is_err());
        let j = RateFunction::conditional(Family::Y, 4, 1.0, 1.5).unwrap();
        let s = RateFunction::standard(4, 1.0, 1.0).unwrap();
        for k in 1..=100 {
            let r = k as f64 / 100.0;
            assert!(j.eval(r) > s.eval(r));
        }
    }

    #[test]
    fn crossing_order_postcondition() {
        for (lambda, c, w) in [(1.0, 1.0, 0.6), (2.0, 0.5, 0.3), (5.0, 3.0, 4.9)] {
            let x = crossing_radius_4d(lambda, c, w).unwrap();
            let cond = RateFunction::conditional(Family::Y, 4, c, w).unwrap();
            let std = RateFunction::standard(4, lambda, c).unwrap();
            for k in 1..200 {
                let r = c * k as f64 / 200.0;
                if r < c * x.gamma * (1.0 - 1e-9) {
                    assert!(cond.eval(r) < std.eval(r), "r={r}");
                } else if r > c * x.gamma * (1.0 + 1e-9) {
                    assert!(cond.eval(r) > std.eval(r), "r={r}");
                }
            }
        }
    }

    #[test]
    fn tail_infimum() {
        let s = RateFunction::standard(2, 1.0, 1.0).unwrap();
        assert_relative_eq!(
            rate_inf_over_tail(&s, 0.5),
            0.133_974_596_215_561_4,
            max_relative = 1e-13
        );
        assert_eq!(rate_inf_over_tail(&s, 0.0), 0.0);
        let x = RateFunction::conditional(Family::X, 2, 1.0, 1.0).unwrap();
        assert_eq!(rate_inf_over_tail(&x, 1.5), f64::INFINITY);
        assert_eq!(rate_inf_over_tail(&x, 0.0), 0.0);
    }

    #[test]
    fn comparison_reports() {
        let grid: Vec<f64> = (0..=4).map(|k| k as f64 * 0.25).collect();
        let j4 = RateFunction::standard(4, 1.0, 1.0).unwrap();
        let i2 = RateFunction::standard(2, 1.0, 1.0).unwrap();
        let cmp = compare_rates(&j4, &i2, &grid).unwrap();
        assert!(cmp.a_dominates());
        assert_eq!(cmp.equal_at(), vec![0.0, 1.0]);

        let jw = RateFunction::conditional(Family::Y, 4, 1.0, 0.6).unwrap();
        let fine: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
        let cmp = compare_rates(&jw, &j4, &fine).unwrap();
        let flips = cmp.sign_changes();
        assert_eq!(flips.len(), 1);
        let gamma = crossing_radius_4d(1.0, 1.0, 0.6).unwrap().gamma;
        assert!(flips[0].0 < gamma && gamma < flips[0].1);
        assert_eq!(flips[0], (0.82, 0.83));
        let regions = cmp.regions();
        assert_eq!(regions.first().unwrap().2, Order::Equal);
        assert_eq!(regions.last().unwrap().2, Order::Above); // J_4(c; w) = inf, J_4(c) = lambda

        let other_c = RateFunction::standard(2, 1.0, 2.0).unwrap();
        assert!(compare_rates(&j4, &other_c, &grid).is_err());
    }

    #[test]
    fn csv_uses_inf() {
        let x = RateFunction::conditional(Family::X, 2, 1.0, 1.0).unwrap();
        let mut buf = Vec::new();
        write_rate_csv(&mut buf, &[x], &[0.0, 1.0]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "kind,d,c,lambda_or_w,r,value\nconditional_X,2,1,1,0,0\nconditional_X,2,1,1,1,inf\n"
        );
    }

    fn arb_rate() -> impl Strategy<Value = RateFunction> {
        prop_oneof![
            (any::<bool>(), 3usize..7, 0.1f64..3.0, 0.1f64..5.0).prop_map(|(x, d, c, w)| {
                RateFunction::conditional(if x { Family::X } else { Family::Y }, d, c, w).unwrap()
            }),
            (any::<bool>(), 0.1f64..5.0, 0.1f64..3.0).prop_map(|(four, l, c)| {
                RateFunction::standard(if four { 4 } else { 2 }, l, c).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn rates_are_monotone_and_vanish_at_zero(rate in arb_rate(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let c = rate.speed().unwrap();
            prop_assert_eq!(rate.eval(0.0), 0.0);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(rate.eval(lo * c) <= rate.eval(hi * c));
            if lo > 0.0 && hi < 1.0 && hi - lo > 1e-9 {
                prop_assert!(rate.eval(lo * c) < rate.eval(hi * c));
            }
            prop_assert_eq!(rate.eval(c * 1.01), f64::INFINITY);
        }

        #[test]
        fn conditional_rate_linear_in_w(w1 in 0.01f64..5.0, w2 in 0.01f64..5.0, r in 0.0f64..0.99, d in 3usize..6) {
            for family in [Family::X, Family::Y] {
                let sum = conditional_rate(family, d, 1.0, w1, r) + conditional_rate(family, d, 1.0, w2, r);
                let joint = conditional_rate(family, d, 1.0, w1 + w2, r);
                prop_assert!((sum - joint).abs() <= 1e-12 * joint.max(1e-300));
            }
        }

        #[test]
        fn crossing_lies_in_bracket(lambda in 0.1f64..10.0, frac in 0.05f64..0.99, c in 0.1f64..4.0) {
            let x = crossing_radius_4d(lambda, c, frac * lambda).unwrap();
            prop_assert!(x.xi < x.gamma && x.gamma < 1.0);
        }
    }
}
