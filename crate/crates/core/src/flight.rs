//! Piecewise-linear flight trajectories.
//!
//! A conditional flight (`X_d`, `Y_d`) makes exactly `n` turns with
//! Dirichlet-distributed displacement durations. A standard flight `Z_d`
//! turns at the epochs of a Poisson process of intensity `lambda`; it is
//! only supported for `d in {2, 4}`, the dimensions where its law is known
//! in closed form.

use std::io::Write;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::Family;
use crate::format::round12;
use crate::sampling::{check_partition_args, fill_partition, fill_unit_direction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Conditional { family: Family, n: u64 },
    Standard { lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightSpec {
    pub model: Model,
    pub d: usize,
    /// Speed.
    pub c: f64,
    /// Horizon.
    pub t: f64,
}

impl FlightSpec {
    pub fn conditional(family: Family, d: usize, c: f64, n: u64, t: f64) -> Result<Self> {
        let spec = Self {
            model: Model::Conditional { family, n },
            d,
            c,
            t,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn standard(d: usize, c: f64, lambda: f64, t: f64) -> Result<Self> {
        let spec = Self {
            model: Model::Standard { lambda },
            d,
            c,
            t,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("c", self.c)?;
        check_positive("t", self.t)?;
        match self.model {
            Model::Conditional { family, n } => check_partition_args(family, self.d, n, self.t),
            Model::Standard { lambda } => {
                check_positive("lambda", lambda)?;
                check_standard_dimension(self.d)
            }
        }
    }

    /// `"X"`, `"Y"` or `"Z"`.
    pub fn label(&self) -> &'static str {
        match self.model {
            Model::Conditional {
                family: Family::X, ..
            } => "X",
            Model::Conditional {
                family: Family::Y, ..
            } => "Y",
            Model::Standard { .. } => "Z",
        }
    }
}

pub(crate) fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

pub(crate) fn check_standard_dimension(d: usize) -> Result<()> {
    if d == 2 || d == 4 {
        Ok(())
    } else {
        Err(Error::UnsupportedModel(format!(
            "standard flights have closed-form laws only for d in {{2, 4}}, got d={d}"
        )))
    }
}

/// A sampled trajectory, stored as its vertices (origin, turning points,
/// endpoint) and turning times.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dim: usize,
    coords: Vec<f64>,
    change_times: Vec<f64>,
    c: f64,
    t: f64,
}

impl Path {
    /// Builds a path from explicit vertices. `vertices[0]` must be the origin
    /// and there must be one more change time than interior vertices.
    pub fn from_vertices(
        vertices: &[Vec<f64>],
        change_times: Vec<f64>,
        c: f64,
        t: f64,
    ) -> Result<Self> {
        let dim = vertices.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || vertices.iter().any(|v| v.len() != dim) {
            return Err(Error::param(
                "vertices",
                "need at least one vertex, all of the same dimension",
            ));
        }
        if vertices[0].iter().any(|&x| x != 0.0) {
            return Err(Error::param("vertices", "first vertex must be the origin"));
        }
        if vertices.len() != change_times.len() + 2 {
            return Err(Error::param(
                "change_times",
                format!(
                    "{} vertices need {} change times",
                    vertices.len(),
                    vertices.len().saturating_sub(2)
                ),
            ));
        }
        Ok(Self {
            dim,
            coords: vertices.concat(),
            change_times,
            c,
            t,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn speed(&self) -> f64 {
        self.c
    }

    pub fn horizon(&self) -> f64 {
        self.t
    }

    pub fn n_changes(&self) -> usize {
        self.change_times.len()
    }

    pub fn change_times(&self) -> &[f64] {
        &self.change_times
    }

    pub fn vertices(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn endpoint(&self) -> &[f64] {
        &self.coords[self.coords.len() - self.dim..]
    }

    pub fn endpoint_norm(&self) -> f64 {
        if self.n_changes() == 0 {
            return self.c * self.t;
        }
        norm(self.endpoint()).min(self.c * self.t)
    }

    /// Duration of every segment (change-time increments, closed by `t`).
    pub fn durations(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.change_times
            .iter()
            .chain(std::iter::once(&self.t))
            .map(|&s| {
                let d = s - prev;
                prev = s;
                d
            })
            .collect()
    }

    pub fn to_record(&self, model: &str) -> PathRecord {
        PathRecord {
            model: model.to_string(),
            d: self.dim,
            c: round12(self.c),
            t: round12(self.t),
            n: self.n_changes(),
            vertices: self
                .vertices()
                .map(|v| v.iter().copied().map(round12).collect())
                .collect(),
            change_times: self.change_times.iter().copied().map(round12).collect(),
        }
    }
}

/// One line of a path dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub model: String,
    pub d: usize,
    pub c: f64,
    pub t: f64,
    pub n: usize,
    pub vertices: Vec<Vec<f64>>,
    pub change_times: Vec<f64>,
}

/// Writes paths as JSON Lines, one object per path.
pub fn write_jsonl<'a, W: Write>(
    out: &mut W,
    spec: &FlightSpec,
    paths: impl IntoIterator<Item = &'a Path>,
) -> std::io::Result<()> {
    for path in paths {
        serde_json::to_writer(&mut *out, &path.to_record(spec.label()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Extremal statistics of one trajectory, computed without storing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSummary {
    pub endpoint_norm: f64,
    pub max_norm: f64,
    pub n_changes: u64,
}

/// Reusable buffers for trajectory generation. Both [`simulate`] and
/// [`Tracer::summarize`] walk through [`Tracer::trace`], so a given stream
/// yields the same trajectory through either route.
#[derive(Debug, Clone, Default)]
pub struct Tracer {
    pos: Vec<f64>,
    dir: Vec<f64>,
    tau: Vec<f64>,
}

impl Tracer {
    pub fn new() -> Self {
        Self::default()
    }

    /// Generates one trajectory of a validated spec, calling
    /// `on_vertex(time, position)` at each turn and at the endpoint.
    /// Returns the number of turns.
    pub fn trace<R, F>(&mut self, spec: &FlightSpec, rng: &mut R, mut on_vertex: F) -> u64
    where
        R: Rng + ?Sized,
        F: FnMut(f64, &[f64]),
    {
        let d = spec.d;
        self.pos.clear();
        self.pos.resize(d, 0.0);
        self.dir.resize(d, 0.0);
        match spec.model {
            Model::Conditional { family, n } => {
                self.tau.resize(n as usize + 1, 0.0);
                fill_partition(family.dirichlet_shape(d), spec.t, &mut self.tau, rng);
                let mut time = 0.0;
                let last = self.tau.len() - 1;
                for (j, &tau) in self.tau.iter().enumerate() {
                    fill_unit_direction(rng, &mut self.dir);
                    advance(&mut self.pos, &self.dir, spec.c * tau);
                    time = if j == last { spec.t } else { time + tau };
                    on_vertex(time, &self.pos);
                }
                n
            }
            Model::Standard { lambda } => {
                // Exponential inter-arrival gaps: the count on [0, t] is
                // Poisson(lambda t) and, given the count, the epochs are
                // uniform order statistics.
                let mut time = 0.0;
                let mut turns = 0;
                loop {
                    let gap: f64 = rng.sample::<f64, _>(Exp1) / lambda;
                    let next = time + gap;
                    fill_unit_direction(rng, &mut self.dir);
                    if next >= spec.t {
                        advance(&mut self.pos, &self.dir, spec.c * (spec.t - time));
                        on_vertex(spec.t, &self.pos);
                        return turns;
                    }
                    advance(&mut self.pos, &self.dir, spec.c * gap);
                    turns += 1;
                    time = next;
                    on_vertex(time, &self.pos);
                }
            }
        }
    }

    /// Endpoint norm, running maximum of the norm and turn count of one
    /// trajectory. Norms are capped at `c t`; a path without turns reports
    /// exactly `c t`.
    pub fn summarize<R: Rng + ?Sized>(&mut self, spec: &FlightSpec, rng: &mut R) -> PathSummary {
        let mut max_sq: f64 = 0.0;
        let mut end_sq = 0.0;
        let n_changes = self.trace(spec, rng, |_, p| {
            end_sq = p.iter().map(|x| x * x).sum::<f64>();
            max_sq = max_sq.max(end_sq);
        });
        let ct = spec.c * spec.t;
        if n_changes == 0 {
            return PathSummary {
                endpoint_norm: ct,
                max_norm: ct,
                n_changes,
            };
        }
        PathSummary {
            endpoint_norm: end_sq.sqrt().min(ct),
            max_norm: max_sq.sqrt().min(ct),
            n_changes,
        }
    }
}

#[inline]
fn advance(pos: &mut [f64], dir: &[f64], len: f64) {
    for (p, u) in pos.iter_mut().zip(dir) {
        *p += len * u;
    }
}

fn build_path<R: Rng + ?Sized>(spec: &FlightSpec, rng: &mut R) -> Path {
    let mut coords = vec![0.0; spec.d];
    let mut change_times = Vec::new();
    let n = Tracer::new().trace(spec, rng, |time, p| {
        coords.extend_from_slice(p);
        change_times.push(time);
    });
    // the last callback is the endpoint, not a turn
    change_times.pop();
    debug_assert_eq!(change_times.len() as u64, n);
    Path {
        dim: spec.d,
        coords,
        change_times,
        c: spec.c,
        t: spec.t,
    }
}

pub fn simulate_conditional<R: Rng + ?Sized>(spec: &FlightSpec, rng: &mut R) -> Result<Path> {
    spec.validate()?;
    match spec.model {
        Model::Conditional { .. } => Ok(build_path(spec, rng)),
        Model::Standard { .. } => Err(Error::UnsupportedModel(
            "simulate_conditional needs an X or Y spec".into(),
        )),
    }
}

pub fn simulate_standard<R: Rng + ?Sized>(spec: &FlightSpec, rng: &mut R) -> Result<Path> {
    spec.validate()?;
    match spec.model {
        Model::Standard { .. } => Ok(build_path(spec, rng)),
        Model::Conditional { .. } => Err(Error::UnsupportedModel(
            "simulate_standard needs a Z spec".into(),
        )),
    }
}

/// Dispatches on the model.
pub fn simulate<R: Rng + ?Sized>(spec: &FlightSpec, rng: &mut R) -> Result<Path> {
    spec.validate()?;
    Ok(build_path(spec, rng))
}

/// `sup_{s in [0,t]} |position(s)|`.
///
/// The squared norm is convex along every straight segment, so the supremum
/// over a segment sits at one of its ends and the maximum vertex norm is
/// exact.
pub fn running_max_norm(path: &Path) -> f64 {
    let ct = path.c * path.t;
    if path.n_changes() == 0 {
        return ct;
    }
    path.vertices().map(norm).fold(0.0, f64::max).min(ct)
}
