//! Scans over the drive Rabi frequency and the coincidence window, and the
//! visibility/success-probability trade-off between them.

use std::io::Write;
use std::thread;

use crate::error::{ensure, Result};
use crate::scalar::{mhz_from_angular, Real};
use crate::scenario::Scenario;

/// What to optimize, with the constraint threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Objective<T> {
    /// Largest `P_succ` subject to `V ≥ threshold`.
    MaxPsuccAtV(T),
    /// Largest `V` subject to `P_succ ≥ threshold`.
    MaxVAtPsucc(T),
}

impl<T: Real> Objective<T> {
    fn threshold(&self) -> T {
        match *self {
            Objective::MaxPsuccAtV(t) | Objective::MaxVAtPsucc(t) => t,
        }
    }

    /// Objective value of a row, or `None` if the row violates the constraint.
    pub fn score(&self, row: &SweepRow<T>) -> Option<T> {
        let v = row.visibility?;
        match *self {
            Objective::MaxPsuccAtV(min_v) => (v >= min_v).then_some(row.p_succ),
            Objective::MaxVAtPsucc(min_p) => (row.p_succ >= min_p).then_some(v),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec<T> {
    pub scenario: Scenario<T>,
    pub omega_values: Vec<T>,
    pub window_values: Vec<T>,
    pub objective: Objective<T>,
}

impl<T: Real> SweepSpec<T> {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.omega_values.is_empty(), Config, "sweep needs at least one omega value");
        ensure!(!self.window_values.is_empty(), Config, "sweep needs at least one window");
        let t = self.objective.threshold();
        ensure!(t >= T::zero() && t < T::one(), Config, "objective threshold {t} outside [0, 1)");
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow<T> {
    pub omega: T,
    pub window: T,
    pub visibility: Option<T>,
    pub p_succ: T,
}

/// Rows for one Ω, ordered as `windows`.
pub fn evaluate_omega<T: Real>(scenario: &Scenario<T>, omega: T, windows: &[T]) -> Result<Vec<SweepRow<T>>> {
    let ev = scenario
        .with_omega(omega)
        .evaluate(windows)
        .map_err(|e| e.context(format_args!("omega/2pi = {} MHz", mhz_from_angular(omega))))?;
    Ok(ev
        .result
        .curve
        .iter()
        .map(|p| SweepRow { omega, window: p.window, visibility: p.visibility, p_succ: p.p_succ })
        .collect())
}

/// Evaluates `f` on every item with up to `jobs` threads; results keep input order.
fn parallel_map<I: Sync, R: Send>(items: &[I], jobs: usize, f: impl Fn(&I) -> R + Sync) -> Vec<R> {
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(jobs);
    thread::scope(|s| {
        let handles: Vec<_> = items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<_>>())).collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    })
}

/// One row per (Ω, T), ordered by Ω then T as given in the spec.
pub fn run_sweep<T: Real>(spec: &SweepSpec<T>, jobs: usize) -> Result<Vec<SweepRow<T>>> {
    spec.validate()?;
    let per_omega = parallel_map(&spec.omega_values, jobs, |&om| {
        evaluate_omega(&spec.scenario, om, &spec.window_values)
    });
    let mut rows = Vec::with_capacity(spec.omega_values.len() * spec.window_values.len());
    for r in per_omega {
        rows.extend(r?);
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Optimum<T> {
    Found(SweepRow<T>),
    /// No evaluated point satisfies the constraint.
    Infeasible,
}

fn best_row<T: Real>(rows: &[SweepRow<T>], objective: &Objective<T>) -> Option<(SweepRow<T>, T)> {
    let mut best: Option<(SweepRow<T>, T)> = None;
    for row in rows {
        if let Some(s) = objective.score(row) {
            if best.as_ref().is_none_or(|(_, b)| s > *b) {
                best = Some((*row, s));
            }
        }
    }
    best
}

/// Grid optimum of the objective, optionally refined by golden-section search over
/// Ω between the neighbours of the best grid value.
pub fn find_optimal_omega<T: Real>(spec: &SweepSpec<T>, refine: bool, jobs: usize) -> Result<Optimum<T>> {
    let rows = run_sweep(spec, jobs)?;
    optimum_from_rows(spec, &rows, refine)
}

/// As [`find_optimal_omega`], starting from rows already produced by [`run_sweep`].
pub fn optimum_from_rows<T: Real>(spec: &SweepSpec<T>, rows: &[SweepRow<T>], refine: bool) -> Result<Optimum<T>> {
    let Some((mut best, mut best_score)) = best_row(rows, &spec.objective) else {
        return Ok(Optimum::Infeasible);
    };
    if refine && spec.omega_values.len() > 1 {
        let mut omegas = spec.omega_values.clone();
        omegas.sort_by(|a, b| a.partial_cmp(b).expect("finite omega"));
        let i = omegas.iter().position(|&o| o == best.omega).unwrap_or(0);
        let mut lo = omegas[i.saturating_sub(1)];
        let mut hi = omegas[(i + 1).min(omegas.len() - 1)];
        let eval = |om: T| -> Result<Option<(SweepRow<T>, T)>> {
            Ok(best_row(&evaluate_omega(&spec.scenario, om, &spec.window_values)?, &spec.objective))
        };
        let score = |r: &Option<(SweepRow<T>, T)>| r.as_ref().map_or(T::neg_infinity(), |x| x.1);
        let ratio = (T::lit(5.0).sqrt() - T::one()) / T::lit(2.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let mut f1 = eval(x1)?;
        let mut f2 = eval(x2)?;
        for _ in 0..12 {
            for cand in [&f1, &f2] {
                if let Some((row, s)) = cand {
                    if *s > best_score {
                        best = *row;
                        best_score = *s;
                    }
                }
            }
            if score(&f1) >= score(&f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = eval(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = eval(x2)?;
            }
        }
        for (row, s) in [f1, f2].into_iter().flatten() {
            if s > best_score {
                best = row;
                best_score = s;
            }
        }
    }
    Ok(Optimum::Found(best))
}

/// Visibility against success probability for one Ω, traced by the window T.
#[derive(Clone, Debug, PartialEq)]
pub struct Frontier<T> {
    pub omega: T,
    /// `(P_succ, V)` in window order; `P_succ` is non-decreasing.
    pub points: Vec<(T, T)>,
}

/// Outcome of comparing one frontier against another at equal `P_succ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dominance<T> {
    pub compared: usize,
    pub violations: usize,
    /// Largest amount by which the other curve exceeds this one.
    pub worst_shortfall: T,
}

impl<T: Real> Frontier<T> {
    /// Groups sweep rows by Ω, dropping rows without a visibility.
    pub fn from_rows(rows: &[SweepRow<T>]) -> Vec<Self> {
        let mut out: Vec<Self> = Vec::new();
        for r in rows {
            let Some(v) = r.visibility else { continue };
            match out.last_mut() {
                Some(f) if f.omega == r.omega => f.points.push((r.p_succ, v)),
                _ => out.push(Self { omega: r.omega, points: vec![(r.p_succ, v)] }),
            }
        }
        out
    }

    /// Linearly interpolated V at success probability `p`; `None` outside the curve.
    /// On flat stretches of `P_succ` the value at the smallest window is used.
    pub fn visibility_at(&self, p: T) -> Option<T> {
        let pts = &self.points;
        let (first, last) = (pts.first()?, pts.last()?);
        if p < first.0 || p > last.0 {
            return None;
        }
        let i = pts.partition_point(|q| q.0 < p);
        if pts[i].0 == p || i == 0 {
            return Some(pts[i].1);
        }
        let (p0, v0) = pts[i - 1];
        let (p1, v1) = pts[i];
        Some(v0 + (v1 - v0) * (p - p0) / (p1 - p0))
    }

    /// Checks, at each of this curve's points with `V ≥ v_min` inside the other's
    /// `P_succ` range, that the other's interpolated V does not exceed this one.
    pub fn compare(&self, other: &Self, v_min: T) -> Dominance<T> {
        let mut d = Dominance { compared: 0, violations: 0, worst_shortfall: T::zero() };
        for &(p, v) in &self.points {
            if v < v_min {
                continue;
            }
            if let Some(w) = other.visibility_at(p) {
                d.compared += 1;
                if w > v {
                    d.violations += 1;
                    d.worst_shortfall = d.worst_shortfall.max(w - v);
                }
            }
        }
        d
    }
}

pub fn write_sweep_csv<T: Real, W: Write>(rows: &[SweepRow<T>], mut out: W) -> Result<()> {
    writeln!(out, "omega_over_2pi_MHz,T_us,V,P_succ")?;
    for r in rows {
        let v = r.visibility.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{:e}", mhz_from_angular(r.omega), r.window, v, r.p_succ)?;
    }
    Ok(())
}

impl<T: Real> std::fmt::Display for Optimum<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Optimum::Found(r) => write!(
                f,
                "omega/2pi = {} MHz, T = {} us, V = {}, P_succ = {:e}",
                mhz_from_angular(r.omega),
                r.window,
                r.visibility.map(|v| v.to_string()).unwrap_or_default(),
                r.p_succ
            ),
            Optimum::Infeasible => write!(f, "infeasible"),
        }
    }
}
