//! Closed-form laws of flight endpoints.
//!
//! Conditional on `n` turns, both families have the isotropic density
//! `h_d(z) = alpha * t^(-gamma) * (c^2 t^2 - |z|^2)^beta` on the open ball of
//! radius `c t`. The standard flights `Z_2`, `Z_4` have an absolutely
//! continuous part on the ball plus an atom of mass `exp(-lambda t)` spread
//! on its boundary sphere (paths without a turn).
//!
//! All Gamma-function ratios go through `ln_gamma`; the normalizers
//! overflow f64 long before the densities do.

use std::f64::consts::PI;
use std::io::Write;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::family::Family;
use crate::flight::{check_positive, check_standard_dimension, norm};
use crate::format::fmt12;
use crate::quadrature::sin_substituted;

/// Default truncation of the Poisson mixture series.
pub const DEFAULT_N_MAX: u64 = 80;

/// Early-stop threshold for the mixture series, relative to the partial sum.
const SERIES_TOL: f64 = 1e-12;

/// Surface area of the unit sphere in R^d, `2 pi^(d/2) / Gamma(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

/// `(R - r)(R + r)`, the gap `R^2 - r^2` without cancellation.
#[inline]
fn gap(outer: f64, r: f64) -> f64 {
    (outer - r) * (outer + r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsotropicDensity {
    pub family: Family,
    pub d: usize,
    pub n: u64,
    pub c: f64,
    pub t: f64,
    /// `alpha(n)`; may under/overflow for large `n d`, see `ln_alpha`.
    pub alpha: f64,
    pub ln_alpha: f64,
    pub beta: f64,
    pub gamma_exp: f64,
}

impl IsotropicDensity {
    pub fn new(family: Family, d: usize, n: u64, c: f64, t: f64) -> Result<Self> {
        family.check_dimension(d)?;
        if n == 0 {
            return Err(Error::param("n", "the conditional densities need n >= 1"));
        }
        check_positive("c", c)?;
        check_positive("t", t)?;
        let (df, nf) = (d as f64, n as f64);
        let half_d_ln_pi = 0.5 * df * PI.ln();
        let (gamma_exp, beta, ln_ratio) = match family {
            Family::X => {
                let gamma_exp = (nf + 1.0) * (df - 1.0) - 1.0;
                let beta = 0.5 * nf * (df - 1.0) - 1.0;
                let ln_ratio =
                    ln_gamma(0.5 * (nf + 1.0) * (df - 1.0) + 0.5) - ln_gamma(0.5 * nf * (df - 1.0));
                (gamma_exp, beta, ln_ratio)
            }
            Family::Y => {
                let a = 0.5 * df - 1.0;
                let gamma_exp = 2.0 * (nf + 1.0) * a;
                let beta = nf * a - 1.0;
                let ln_ratio = ln_gamma((nf + 1.0) * a + 1.0) - ln_gamma(nf * a);
                (gamma_exp, beta, ln_ratio)
            }
        };
        let ln_alpha = ln_ratio - half_d_ln_pi - gamma_exp * c.ln();
        Ok(Self {
            family,
            d,
            n,
            c,
            t,
            alpha: ln_alpha.exp(),
            ln_alpha,
            beta,
            gamma_exp,
        })
    }

    pub fn radius(&self) -> f64 {
        self.c * self.t
    }

    /// Density at distance `r` from the origin; zero on and outside the
    /// boundary sphere (also where `beta < 0` makes the formula diverge).
    pub fn at_radius(&self, r: f64) -> f64 {
        let outer = self.radius();
        if r.abs() >= outer || r.is_nan() {
            return 0.0;
        }
        self.at_gap(gap(outer, r.abs()))
    }

    fn at_gap(&self, g: f64) -> f64 {
        (self.ln_alpha - self.gamma_exp * self.t.ln() + self.beta * g.ln()).exp()
    }

    fn marginal_from(&self, rho: f64, g: f64) -> f64 {
        self.at_gap(g) * sphere_area(self.d) * rho.powi(self.d as i32 - 1)
    }

    /// Probability that the endpoint norm lies in `[a, b]`.
    pub fn radial_mass(&self, a: f64, b: f64) -> f64 {
        let outer = self.radius();
        let (a, b) = (a.clamp(0.0, outer), b.clamp(0.0, outer));
        if b <= a {
            return 0.0;
        }
        let area = sphere_area(self.d);
        let k = self.ln_alpha - self.gamma_exp * self.t.ln();
        let beta = self.beta;
        let dm1 = self.d as i32 - 1;
        sin_substituted(outer, a, b, |rho, g| {
            (k + beta * g.ln()).exp() * area * rho.powi(dm1)
        })
    }

    pub fn radial_cdf(&self, rho: f64) -> f64 {
        self.radial_mass(0.0, rho)
    }
}

pub fn conditional_density(params: &IsotropicDensity, z: &[f64]) -> f64 {
    params.at_radius(norm(z))
}

/// Density of the endpoint norm at `rho`, `h_d(rho) * |S^{d-1}| * rho^(d-1)`.
pub fn radial_marginal(params: &IsotropicDensity, rho: f64) -> Result<f64> {
    let outer = params.radius();
    if !(0.0..outer).contains(&rho) {
        return Err(Error::Domain {
            value: rho,
            domain: format!("[0, {outer})"),
        });
    }
    Ok(params.marginal_from(rho, gap(outer, rho)))
}

/// Law of a standard flight `Z_d(t)`, `d in {2, 4}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardLaw {
    pub d: usize,
    pub lambda: f64,
    pub c: f64,
    pub t: f64,
}

impl StandardLaw {
    pub fn new(d: usize, lambda: f64, c: f64, t: f64) -> Result<Self> {
        check_standard_dimension(d)?;
        check_positive("lambda", lambda)?;
        check_positive("c", c)?;
        check_positive("t", t)?;
        Ok(Self { d, lambda, c, t })
    }

    pub fn radius(&self) -> f64 {
        self.c * self.t
    }

    /// Mass of the boundary atom, `exp(-lambda t)`.
    pub fn singular_weight(&self) -> f64 {
        (-self.lambda * self.t).exp()
    }

    /// Absolutely continuous density at distance `r`; zero for `r >= c t`.
    pub fn ac_at_radius(&self, r: f64) -> f64 {
        let outer = self.radius();
        if r.abs() >= outer || r.is_nan() {
            return 0.0;
        }
        self.ac_from(r * r, gap(outer, r.abs()))
    }

    fn ac_from(&self, r2: f64, g: f64) -> f64 {
        let (lambda, c, t) = (self.lambda, self.c, self.t);
        match self.d {
            2 => {
                let s = g.sqrt();
                lambda / (2.0 * PI * c) * (-lambda * t + lambda / c * s).exp() / s
            }
            _ => {
                let k = lambda / (c * c * t);
                lambda / (c.powi(4) * t.powi(3) * PI * PI) * (-k * r2).exp() * (2.0 + k * g)
            }
        }
    }

    pub fn radial_ac(&self, rho: f64) -> f64 {
        if !(0.0..self.radius()).contains(&rho) {
            return 0.0;
        }
        self.ac_at_radius(rho) * sphere_area(self.d) * rho.powi(self.d as i32 - 1)
    }

    /// Absolutely continuous mass with norm in `[a, b]`.
    pub fn ac_mass(&self, a: f64, b: f64) -> f64 {
        let outer = self.radius();
        let (a, b) = (a.clamp(0.0, outer), b.clamp(0.0, outer));
        if b <= a {
            return 0.0;
        }
        let area = sphere_area(self.d);
        let dm1 = self.d as i32 - 1;
        sin_substituted(outer, a, b, |rho, g| {
            self.ac_from(rho * rho, g) * area * rho.powi(dm1)
        })
    }

    /// `P(|Z_d(t)| > rho)`, atom included.
    pub fn tail_probability(&self, rho: f64) -> f64 {
        if rho >= self.radius() {
            return 0.0;
        }
        self.ac_mass(rho.max(0.0), self.radius()) + self.singular_weight()
    }
}

pub fn standard_ac_density_2d(lambda: f64, c: f64, t: f64, z: &[f64]) -> f64 {
    StandardLaw { d: 2, lambda, c, t }.ac_at_radius(norm(z))
}

pub fn standard_ac_density_4d(lambda: f64, c: f64, t: f64, z: &[f64]) -> f64 {
    StandardLaw { d: 4, lambda, c, t }.ac_at_radius(norm(z))
}

/// `sum_{n=1}^{n_max} P(N(t) = n) h_d(z, t; n)` with family X for `d = 2`
/// and Y for `d = 4`: the a.c. part of the standard law rebuilt from the
/// conditional laws.
///
/// Stops early once the remaining terms are certified below `1e-12` times
/// the partial sum. The certificate is the geometric bound
/// `term * q / (1 - q)`, valid once the term ratio `q` is below one and
/// non-increasing, which holds for both supported dimensions past the
/// Poisson mode.
pub fn poisson_mixture_density(
    d: usize,
    lambda: f64,
    c: f64,
    t: f64,
    z: &[f64],
    n_max: u64,
) -> Result<f64> {
    check_standard_dimension(d)?;
    check_positive("lambda", lambda)?;
    check_positive("c", c)?;
    check_positive("t", t)?;
    if n_max == 0 {
        return Err(Error::param("n_max", "need at least one term"));
    }
    let family = if d == 2 { Family::X } else { Family::Y };
    let r = norm(z);
    let outer = c * t;
    if r >= outer {
        return Ok(0.0);
    }
    let g = gap(outer, r);
    let lt = lambda * t;
    let mut sum = 0.0;
    let mut prev_term = f64::NAN;
    let mut prev_ratio = f64::INFINITY;
    for n in 1..=n_max {
        let h = IsotropicDensity::new(family, d, n, c, t)?;
        let ln_poisson = -lt + n as f64 * lt.ln() - ln_gamma(n as f64 + 1.0);
        let term = (ln_poisson + h.ln_alpha - h.gamma_exp * t.ln() + h.beta * g.ln()).exp();
        sum += term;
        let ratio = term / prev_term;
        if n as f64 >= lt
            && ratio < 1.0
            && ratio <= prev_ratio
            && term * ratio / (1.0 - ratio) < SERIES_TOL * sum
        {
            break;
        }
        prev_term = term;
        prev_ratio = ratio;
    }
    Ok(sum)
}

/// One row of a density grid export.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRow {
    pub model: &'static str,
    pub d: usize,
    pub n_or_lambda: f64,
    pub c: f64,
    pub t: f64,
    pub r: f64,
    pub density: f64,
    pub cumulative_mass: f64,
    pub mixture: Option<f64>,
}

/// Law whose density is tabulated by [`density_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridLaw {
    Conditional(IsotropicDensity),
    Standard(StandardLaw),
}

/// Tabulates the point density and the cumulative radial mass at
/// `r_k = c t k / points`, `k = 0..=points`. Standard laws also get the
/// mixture-series column. The cumulative mass of a standard law counts the
/// absolutely continuous part only.
pub fn density_grid(law: &GridLaw, points: usize) -> Result<Vec<DensityRow>> {
    if points == 0 {
        return Err(Error::param("points", "need at least one grid interval"));
    }
    let rows = (0..=points).map(|k| -> Result<DensityRow> {
        Ok(match law {
            GridLaw::Conditional(h) => {
                let r = h.radius() * k as f64 / points as f64;
                DensityRow {
                    model: if h.family == Family::X { "X" } else { "Y" },
                    d: h.d,
                    n_or_lambda: h.n as f64,
                    c: h.c,
                    t: h.t,
                    r,
                    density: h.at_radius(r),
                    cumulative_mass: if k == points {
                        h.radial_cdf(h.radius())
                    } else {
                        h.radial_cdf(r)
                    },
                    mixture: None,
                }
            }
            GridLaw::Standard(s) => {
                let r = s.radius() * k as f64 / points as f64;
                let mut z = vec![0.0; s.d];
                z[0] = r;
                DensityRow {
                    model: "Z",
                    d: s.d,
                    n_or_lambda: s.lambda,
                    c: s.c,
                    t: s.t,
                    r,
                    density: s.ac_at_radius(r),
                    cumulative_mass: s.ac_mass(0.0, r),
                    mixture: Some(poisson_mixture_density(
                        s.d,
                        s.lambda,
                        s.c,
                        s.t,
                        &z,
                        DEFAULT_N_MAX,
                    )?),
                }
            }
        })
    });
    rows.collect()
}

pub fn write_density_csv<W: Write>(out: &mut W, rows: &[DensityRow]) -> std::io::Result<()> {
    let with_mixture = rows.iter().any(|r| r.mixture.is_some());
    write!(out, "model,d,n_or_lambda,c,t,r,density,cumulative_mass")?;
    if with_mixture {
        write!(out, ",mixture")?;
    }
    writeln!(out)?;
    for row in rows {
        write!(
            out,
            "{},{},{},{},{},{},{},{}",
            row.model,
            row.d,
            fmt12(row.n_or_lambda),
            fmt12(row.c),
            fmt12(row.t),
            fmt12(row.r),
            fmt12(row.density),
            fmt12(row.cumulative_mass)
        )?;
        if with_mixture {
            write!(out, ",{}", row.mixture.map(fmt12).unwrap_or_default())?;
        }
        writeln!(out)?;
    }
    Ok(())
}
