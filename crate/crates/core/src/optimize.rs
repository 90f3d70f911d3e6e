//! Derivative-free search over gait parameters.
//!
//! The objective is the steady per-cycle displacement of a short run. Search
//! happens in a normalized unit box (stiffnesses on a log scale) with a
//! bounded Nelder–Mead simplex and seeded random restarts.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::actuation::{GaitMode, GaitSchedule};
use crate::dynamics::{simulate, SimSettings};
use crate::error::{ConfigError, Result, SimError};
use crate::experiments::displacement_per_cycle;
use crate::kinematics::RobotConfig;

/// Cycles simulated per objective evaluation; the first is discarded.
pub const OBJECTIVE_CYCLES: usize = 6;
pub const MIN_BUDGET: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamName {
    KMin,
    KMax,
    Beta,
    Duty,
    PhaseOffset,
}

impl ParamName {
    pub const ALL: [ParamName; 5] = [
        ParamName::KMin,
        ParamName::KMax,
        ParamName::Beta,
        ParamName::Duty,
        ParamName::PhaseOffset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamName::KMin => "k_min",
            ParamName::KMax => "k_max",
            ParamName::Beta => "beta",
            ParamName::Duty => "duty",
            ParamName::PhaseOffset => "phase_offset",
        }
    }

    fn log_scaled(self) -> bool {
        matches!(self, ParamName::KMin | ParamName::KMax)
    }
}

impl fmt::Display for ParamName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamName {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ParamName::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                ConfigError::new(
                    "param",
                    format!(
                        "unknown parameter '{s}' (expected one of: {})",
                        ParamName::ALL.map(|p| p.name()).join(", ")
                    ),
                )
            })
    }
}

/// The tunable part of a [`GaitSchedule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    pub k_min: f64,
    pub k_max: f64,
    pub beta: f64,
    pub duty: f64,
    pub phase_offset: f64,
}

impl GaitParams {
    pub fn from_gait(gait: &GaitSchedule) -> Self {
        Self {
            k_min: gait.k_min,
            k_max: gait.k_max,
            beta: gait.beta,
            duty: gait.duty,
            phase_offset: gait.phase_offset,
        }
    }

    /// `base` with these parameters, always in the controlled-flexible mode.
    pub fn apply(&self, base: &GaitSchedule) -> GaitSchedule {
        GaitSchedule {
            k_min: self.k_min,
            k_max: self.k_max,
            beta: self.beta,
            duty: self.duty,
            phase_offset: self.phase_offset,
            mode: GaitMode::ControlledFlexible,
            ..*base
        }
    }

    pub fn get(&self, name: ParamName) -> f64 {
        match name {
            ParamName::KMin => self.k_min,
            ParamName::KMax => self.k_max,
            ParamName::Beta => self.beta,
            ParamName::Duty => self.duty,
            ParamName::PhaseOffset => self.phase_offset,
        }
    }

    pub fn set(&mut self, name: ParamName, value: f64) {
        match name {
            ParamName::KMin => self.k_min = value,
            ParamName::KMax => self.k_max = value,
            ParamName::Beta => self.beta = value,
            ParamName::Duty => self.duty = value,
            ParamName::PhaseOffset => self.phase_offset = value,
        }
    }

    pub fn with(mut self, name: ParamName, value: f64) -> Self {
        self.set(name, value);
        self
    }

    fn key(&self) -> [u64; 5] {
        ParamName::ALL.map(|p| self.get(p).to_bits())
    }
}

impl Default for GaitParams {
    fn default() -> Self {
        Self::from_gait(&GaitSchedule::default())
    }
}

/// Closed box of admissible parameters. A parameter whose bounds coincide is held fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamBounds {
    pub lower: GaitParams,
    pub upper: GaitParams,
}

impl ParamBounds {
    /// Every parameter pinned at `p`.
    pub fn point(p: GaitParams) -> Self {
        Self { lower: p, upper: p }
    }

    /// Frees `name` over `[lo, hi]`.
    pub fn with(mut self, name: ParamName, lo: f64, hi: f64) -> Self {
        self.lower.set(name, lo);
        self.upper.set(name, hi);
        self
    }

    pub fn free(&self) -> Vec<ParamName> {
        ParamName::ALL
            .into_iter()
            .filter(|&p| self.upper.get(p) > self.lower.get(p))
            .collect()
    }

    pub fn contains(&self, p: &GaitParams) -> bool {
        ParamName::ALL
            .into_iter()
            .all(|n| p.get(n) >= self.lower.get(n) && p.get(n) <= self.upper.get(n))
    }

    pub fn clamp(&self, p: &GaitParams) -> GaitParams {
        let mut out = *p;
        for n in ParamName::ALL {
            out.set(n, p.get(n).clamp(self.lower.get(n), self.upper.get(n)));
        }
        out
    }

    pub fn validate(&self) -> Result<Self, ConfigError> {
        for n in ParamName::ALL {
            let (lo, hi) = (self.lower.get(n), self.upper.get(n));
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(ConfigError::new(
                    format!("bounds.{n}"),
                    format!("needs finite lower <= upper, got [{lo}, {hi}]"),
                ));
            }
            if n.log_scaled() && lo <= 0.0 {
                return Err(ConfigError::new(format!("bounds.{n}"), "must be > 0"));
            }
        }
        Ok(*self)
    }

    fn to_unit(&self, name: ParamName, v: f64) -> f64 {
        let (lo, hi) = (self.lower.get(name), self.upper.get(name));
        if name.log_scaled() {
            (v / lo).ln() / (hi / lo).ln()
        } else {
            (v - lo) / (hi - lo)
        }
    }

    fn from_unit(&self, name: ParamName, u: f64) -> f64 {
        let (lo, hi) = (self.lower.get(name), self.upper.get(name));
        let u = u.clamp(0.0, 1.0);
        let v = if name.log_scaled() {
            lo * (hi / lo).powf(u)
        } else {
            lo + (hi - lo) * u
        };
        v.clamp(lo, hi)
    }
}

/// Steady mean per-cycle displacement (m/cycle) of the controlled-flexible
/// gait with `params`: cycles 2..6 of a 6-cycle run.
pub fn evaluate_objective(
    params: &GaitParams,
    base: &GaitSchedule,
    config: &RobotConfig,
    settings: &SimSettings,
) -> Result<f64> {
    let traj = simulate(config, &params.apply(base), OBJECTIVE_CYCLES, settings)?;
    Ok(displacement_per_cycle(&traj)?.mean)
}

/// One objective evaluation. A failed simulation keeps its error and has no objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub index: usize,
    pub params: GaitParams,
    pub objective: Option<f64>,
    pub error: Option<String>,
    /// Best objective among evaluations `0..=index`.
    pub best_so_far: Option<f64>,
}

fn run_one(
    params: &GaitParams,
    base: &GaitSchedule,
    config: &RobotConfig,
    settings: &SimSettings,
) -> (Option<f64>, Option<String>) {
    match evaluate_objective(params, base, config, settings) {
        Ok(v) if v.is_finite() => (Some(v), None),
        Ok(v) => (None, Some(format!("non-finite objective {v}"))),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// Values taken by each swept parameter; rows are their cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub axes: Vec<(ParamName, Vec<f64>)>,
}

impl GridSpec {
    /// `steps` evenly spaced values of `name` from `from` to `to` inclusive.
    pub fn linspace(name: ParamName, from: f64, to: f64, steps: usize) -> Self {
        let values = match steps {
            0 => vec![],
            1 => vec![from],
            _ => (0..steps)
                .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
                .collect(),
        };
        Self {
            axes: vec![(name, values)],
        }
    }

    pub fn and(mut self, name: ParamName, values: Vec<f64>) -> Self {
        self.axes.push((name, values));
        self
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points over `base`, last axis varying fastest.
    pub fn points(&self, base: &GaitParams) -> Vec<GaitParams> {
        let mut out = vec![*base];
        for (name, values) in &self.axes {
            out = out
                .iter()
                .flat_map(|p| values.iter().map(move |&v| p.with(*name, v)))
                .collect();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: GaitParams,
    /// m/cycle; absent when the run failed.
    pub objective: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub grid: GridSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Row with the largest objective.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.objective.is_some())
            .max_by(|a, b| a.objective.unwrap().total_cmp(&b.objective.unwrap()))
    }
}

/// Evaluates every grid point (concurrently); rows come back in grid order.
pub fn sweep_grid(
    grid: &GridSpec,
    base: &GaitSchedule,
    config: &RobotConfig,
    settings: &SimSettings,
) -> Result<SweepTable> {
    for (name, values) in &grid.axes {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ConfigError::new(format!("grid.{name}"), "values must be finite").into());
        }
    }
    let rows = grid
        .points(&GaitParams::from_gait(base))
        .par_iter()
        .map(|p| {
            let (objective, error) = run_one(p, base, config, settings);
            SweepRow {
                params: *p,
                objective,
                error,
            }
        })
        .collect();
    Ok(SweepTable {
        grid: grid.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_params: GaitParams,
    /// m/cycle
    pub best_objective: f64,
    pub history: Vec<Evaluation>,
    pub seed: u64,
    pub budget: usize,
    pub evaluations: usize,
    pub restarts: usize,
    pub bounds: ParamBounds,
}

/// Simplex moves (standard coefficients) and stopping size in unit coordinates.
const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const INITIAL_STEP: f64 = 0.25;
const X_TOL: f64 = 1e-3;

struct Search<'a> {
    bounds: ParamBounds,
    free: Vec<ParamName>,
    anchor: GaitParams,
    base: &'a GaitSchedule,
    config: &'a RobotConfig,
    settings: &'a SimSettings,
    budget: usize,
    cache: HashMap<[u64; 5], Option<f64>>,
    history: Vec<Evaluation>,
    best: Option<(f64, GaitParams)>,
}

impl Search<'_> {
    fn params(&self, u: &[f64]) -> GaitParams {
        let mut p = self.anchor;
        for (name, &x) in self.free.iter().zip(u) {
            p.set(*name, self.bounds.from_unit(*name, x));
        }
        p
    }

    fn remaining(&self) -> usize {
        self.budget - self.history.len()
    }

    /// Objective (to maximize) at each unit point, or `None` once the budget is
    /// gone. New points are evaluated concurrently and recorded in submission order.
    fn eval_batch(&mut self, us: &[Vec<f64>]) -> Option<Vec<f64>> {
        let ps: Vec<GaitParams> = us.iter().map(|u| self.params(u)).collect();
        let mut fresh: Vec<GaitParams> = Vec::new();
        for p in &ps {
            if !self.cache.contains_key(&p.key()) && !fresh.iter().any(|q| q.key() == p.key()) {
                fresh.push(*p);
            }
        }
        if fresh.len() > self.remaining() {
            return None;
        }
        let results: Vec<_> = fresh
            .par_iter()
            .map(|p| {
                assert!(self.bounds.contains(p), "evaluation outside bounds: {p:?}");
                run_one(p, self.base, self.config, self.settings)
            })
            .collect();
        for (p, (objective, error)) in fresh.into_iter().zip(results) {
            if let Some(v) = objective {
                if self.best.map_or(true, |(b, _)| v > b) {
                    self.best = Some((v, p));
                }
            }
            self.cache.insert(p.key(), objective);
            self.history.push(Evaluation {
                index: self.history.len(),
                params: p,
                objective,
                error,
                best_so_far: self.best.map(|(b, _)| b),
            });
        }
        Some(
            ps.iter()
                .map(|p| self.cache[&p.key()].unwrap_or(f64::NEG_INFINITY))
                .collect(),
        )
    }

    fn eval(&mut self, u: &[f64]) -> Option<f64> {
        self.eval_batch(std::slice::from_ref(&u.to_vec())).map(|v| v[0])
    }

    /// Bounded Nelder–Mead from `start`; stops when the simplex collapses or the budget runs out.
    fn nelder_mead(&mut self, start: Vec<f64>) {
        let d = start.len();
        let clip = |u: Vec<f64>| u.into_iter().map(|x| x.clamp(0.0, 1.0)).collect::<Vec<_>>();
        let mut simplex = vec![start.clone()];
        for i in 0..d {
            let mut v = start.clone();
            v[i] += if v[i] + INITIAL_STEP <= 1.0 { INITIAL_STEP } else { -INITIAL_STEP };
            simplex.push(v);
        }
        let Some(f) = self.eval_batch(&simplex) else { return };
        let mut pts: Vec<(Vec<f64>, f64)> = simplex.into_iter().zip(f).collect();
        loop {
            // best first; maximizing
            pts.sort_by(|a, b| b.1.total_cmp(&a.1));
            let size = pts[1..]
                .iter()
                .map(|(u, _)| u.iter().zip(&pts[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if size < X_TOL {
                return;
            }
            let centroid: Vec<f64> = (0..d)
                .map(|i| pts[..d].iter().map(|(u, _)| u[i]).sum::<f64>() / d as f64)
                .collect();
            let worst = pts[d].clone();
            let toward = |c: f64| {
                clip(
                    centroid
                        .iter()
                        .zip(&worst.0)
                        .map(|(m, w)| m + c * (m - w))
                        .collect(),
                )
            };
            let xr = toward(REFLECT);
            let Some(fr) = self.eval(&xr) else { return };
            if fr > pts[0].1 {
                let xe = toward(EXPAND);
                let Some(fe) = self.eval(&xe) else { return };
                pts[d] = if fe > fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr > pts[d - 1].1 {
                pts[d] = (xr, fr);
                continue;
            }
            let xc = if fr > worst.1 { toward(CONTRACT * REFLECT) } else { toward(-CONTRACT) };
            let Some(fc) = self.eval(&xc) else { return };
            if fc > fr.max(worst.1) {
                pts[d] = (xc, fc);
                continue;
            }
            let best = pts[0].0.clone();
            let shrunk: Vec<Vec<f64>> = pts[1..]
                .iter()
                .map(|(u, _)| best.iter().zip(u).map(|(b, x)| b + SHRINK * (x - b)).collect())
                .collect();
            let Some(f) = self.eval_batch(&shrunk) else { return };
            for (slot, (u, v)) in pts[1..].iter_mut().zip(shrunk.into_iter().zip(f)) {
                *slot = (u, v);
            }
        }
    }
}

/// Maximizes [`evaluate_objective`] inside `bounds` with at most `budget`
/// simulations. The first evaluation is at the defaults (clamped into the
/// box), later restarts begin at points drawn from a ChaCha stream seeded by `seed`.
pub fn optimize_gait(
    bounds: &ParamBounds,
    budget: usize,
    seed: u64,
    base: &GaitSchedule,
    config: &RobotConfig,
    settings: &SimSettings,
) -> Result<OptResult> {
    let bounds = bounds.validate()?;
    if budget < MIN_BUDGET {
        return Err(ConfigError::new("budget", format!("must be >= {MIN_BUDGET}")).into());
    }
    let anchor = bounds.clamp(&GaitParams::from_gait(base));
    let free = bounds.free();
    let mut search = Search {
        bounds,
        free: free.clone(),
        anchor,
        base,
        config,
        settings,
        budget,
        cache: HashMap::new(),
        history: Vec::new(),
        best: None,
    };
    let start: Vec<f64> = free.iter().map(|&n| bounds.to_unit(n, anchor.get(n))).collect();
    let mut restarts = 0;
    if free.is_empty() {
        search.eval(&start);
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        search.nelder_mead(start);
        while search.remaining() > free.len() {
            let before = search.history.len();
            let u: Vec<f64> = free.iter().map(|_| rng.gen::<f64>()).collect();
            search.nelder_mead(u);
            restarts += 1;
            if search.history.len() == before {
                // the simplex landed entirely on cached points
                break;
            }
        }
    }
    let Some((best_objective, best_params)) = search.best else {
        let last = search
            .history
            .iter()
            .rev()
            .find_map(|e| e.error.clone())
            .unwrap_or_default();
        return Err(SimError::AllEvaluationsFailed {
            count: search.history.len(),
            last,
        });
    };
    Ok(OptResult {
        best_params,
        best_objective,
        evaluations: search.history.len(),
        history: search.history,
        seed,
        budget,
        restarts,
        bounds,
    })
}
