//! Uniform output grids and the piecewise-constant drive schedule.

use std::collections::HashMap;

use crate::error::{ensure, Error, Result};
use crate::qdyn::params::SourceParams;
use crate::scalar::Real;

/// Uniform grid `t_k = k·dt`, `k = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid<T> {
    dt: T,
    len: usize,
}

impl<T: Real> TimeGrid<T> {
    /// Grid covering `[0, horizon]`; the horizon must be a multiple of `dt`.
    pub fn covering(horizon: T, dt: T) -> Result<Self> {
        ensure!(dt > T::zero() && dt.is_finite(), Config, "dt must be positive and finite");
        ensure!(horizon >= T::zero(), Config, "horizon must be >= 0");
        let steps = (horizon / dt).round();
        let tol = T::lit(1e-9) * horizon.max(dt) + T::epsilon() * T::lit(16.0) * steps * dt;
        ensure!(
            (steps * dt - horizon).abs() <= tol,
            Config,
            "horizon {horizon} is not a multiple of dt {dt}"
        );
        let steps = steps
            .to_usize()
            .ok_or_else(|| Error::Config("grid too large".into()))?;
        Ok(Self { dt, len: steps + 1 })
    }

    pub fn with_len(dt: T, len: usize) -> Self {
        Self { dt, len }
    }

    #[inline]
    pub fn dt(&self) -> T {
        self.dt
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn t(&self, k: usize) -> T {
        T::from_index(k) * self.dt
    }

    pub fn end(&self) -> T {
        self.t(self.len.saturating_sub(1))
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len).map(|k| self.t(k)).collect()
    }

    /// Index of the first grid point at or after `t` (within rounding).
    pub fn ceil_index(&self, t: T) -> usize {
        let x = t / self.dt;
        let r = x.round();
        let k = if (x - r).abs() <= T::lit(1e-9) * r.max(T::one()) { r } else { x.ceil() };
        k.max(T::zero()).to_usize().unwrap_or(usize::MAX)
    }

    /// Same spacing and number of points.
    pub fn matches(&self, other: &Self) -> bool {
        self.len == other.len && (self.dt - other.dt).abs() <= T::epsilon() * T::lit(8.0) * self.dt
    }
}

/// Drive level of a constant segment: index 0 is "drive off", 1 is "drive on".
pub type Level = usize;
pub const DRIVE_OFF: Level = 0;
pub const DRIVE_ON: Level = 1;

/// One constant stretch of the generator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment<T> {
    pub start: T,
    pub end: T,
    pub level: Level,
}

/// Piecewise-constant drive schedule of a source over `[0, t_horizon]`.
#[derive(Clone, Debug)]
pub struct DriveSchedule<T> {
    segments: Vec<Segment<T>>,
    grid: TimeGrid<T>,
}

impl<T: Real> DriveSchedule<T> {
    pub fn new(p: &SourceParams<T>) -> Result<Self> {
        p.validate()?;
        let grid = TimeGrid::covering(p.t_horizon, p.dt)?;
        let raw = [
            Segment { start: T::zero(), end: p.pulse_on, level: DRIVE_OFF },
            Segment { start: p.pulse_on, end: p.pulse_off, level: DRIVE_ON },
            Segment { start: p.pulse_off, end: p.t_horizon, level: DRIVE_OFF },
        ];
        let segments: Vec<_> = raw.into_iter().filter(|s| s.end > s.start).collect();
        let slack = T::lit(1e-9) * p.dt;
        for s in &segments {
            ensure!(
                s.end - s.start + slack >= p.dt,
                Config,
                "drive segment [{}, {}) is shorter than dt = {}",
                s.start,
                s.end,
                p.dt
            );
        }
        Ok(Self { segments, grid })
    }

    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn segments(&self) -> &[Segment<T>] {
        &self.segments
    }

    /// Decomposes `[a, b]` into constant pieces `(level, duration)` in time order.
    pub fn pieces(&self, a: T, b: T) -> Vec<(Level, T)> {
        let mut out = Vec::new();
        if b <= a {
            return out;
        }
        // Boundaries within a relative 1e-9 of a grid point snap onto it.
        let snap = T::lit(1e-9) * self.grid.dt;
        for s in &self.segments {
            let lo = a.max(s.start);
            let hi = b.min(s.end);
            if hi - lo > snap {
                out.push((s.level, self.quantize(hi - lo)));
            }
        }
        if out.is_empty() {
            // Entirely past the last segment boundary (only at t_horizon itself).
            let level = self.segments.last().map_or(DRIVE_OFF, |s| s.level);
            out.push((level, self.quantize(b - a)));
        }
        out
    }

    /// Rounds a duration to 2⁻²⁴·dt so grid intervals that differ only by
    /// floating-point noise share one exponential.
    fn quantize(&self, h: T) -> T {
        let q = T::lit(16_777_216.0);
        let dt = self.grid.dt;
        (h / dt * q).round() * dt / q
    }
}

/// Memoizes per-(level, duration) objects such as matrix exponentials.
pub(crate) struct PieceCache<M> {
    map: HashMap<(Level, u64), M>,
}

impl<M: Clone> PieceCache<M> {
    pub fn new() -> Self {
        Self { map: HashMap::new() }
    }

    pub fn get<T: Real>(&mut self, level: Level, h: T, make: impl FnOnce(Level, T) -> M) -> M {
        self.map
            .entry((level, h.as_f64().to_bits()))
            .or_insert_with(|| make(level, h))
            .clone()
    }
}

/// Per-interval objects `[t_k, t_{k+1}]`, deduplicated: intervals that lie inside a
/// single segment share one entry.
#[derive(Clone, Debug)]
pub struct StepTable<M> {
    unique: Vec<M>,
    index: Vec<usize>,
}

impl<M> StepTable<M> {
    /// Table over the grid intervals `[t_k, t_{k+1}]`, calling `compose` once per
    /// distinct piece signature.
    pub fn build<T: Real>(schedule: &DriveSchedule<T>, compose: impl FnMut(&[(Level, T)]) -> M) -> Self {
        let grid = *schedule.grid();
        let n = grid.len().saturating_sub(1);
        Self::build_over(schedule, n, |k| (grid.t(k), grid.t(k + 1)), compose)
    }

    /// Table over `n` arbitrary intervals `interval(k) = (a, b)`.
    pub fn build_over<T: Real>(
        schedule: &DriveSchedule<T>,
        n: usize,
        interval: impl Fn(usize) -> (T, T),
        mut compose: impl FnMut(&[(Level, T)]) -> M,
    ) -> Self {
        let mut keys: HashMap<Vec<(Level, u64)>, usize> = HashMap::new();
        let mut unique = Vec::new();
        let mut index = Vec::with_capacity(n);
        for k in 0..n {
            let (a, b) = interval(k);
            let pieces = schedule.pieces(a, b);
            let key: Vec<_> = pieces.iter().map(|&(l, h)| (l, h.as_f64().to_bits())).collect();
            let idx = *keys.entry(key).or_insert_with(|| {
                unique.push(compose(&pieces));
                unique.len() - 1
            });
            index.push(idx);
        }
        Self { unique, index }
    }

    /// Object for the interval starting at grid point `k`.
    #[inline]
    pub fn step(&self, k: usize) -> &M {
        &self.unique[self.index[k]]
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn distinct(&self) -> usize {
        self.unique.len()
    }
}
