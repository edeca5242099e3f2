//! Trigger-framed histograms of detector clicks and coincidences.

use std::io::Write;
use std::thread;

use crate::error::{ensure, Error, Result};
use crate::scalar::Real;
use crate::timetag::stream::{Channel, TimeTagStream};

/// Half-open interval `[start, end)` in µs after the trigger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate<T> {
    pub start: T,
    pub end: T,
}

impl<T: Real> Gate<T> {
    pub fn new(start: T, end: T) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> T {
        self.end - self.start
    }

    fn to_ps(self) -> (i64, i64) {
        (us_to_ps(self.start), us_to_ps(self.end))
    }
}

fn us_to_ps<T: Real>(x: T) -> i64 {
    (x.as_f64() * 1e6).round() as i64
}

/// Software gates: the synchronous pair, then the early (long-path) and late
/// (short-path) photons of the asynchronous pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GateSpec<T> {
    pub sync: Gate<T>,
    pub async_v: Gate<T>,
    pub async_h: Gate<T>,
    /// Extra delay of the late asynchronous photon.
    pub t_wait: T,
    /// Histogram bin width Δ_t.
    pub bin: T,
    /// Number of attempts k; the trigger count when absent.
    pub trials: Option<u64>,
}

impl<T: Real> GateSpec<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, g) in [("sync", self.sync), ("async_v", self.async_v), ("async_h", self.async_h)] {
            ensure!(
                g.start >= T::zero() && g.end > g.start,
                Config,
                "{name} gate [{}, {}) must be non-empty and start at or after the trigger",
                g.start,
                g.end
            );
        }
        ensure!(
            self.sync.end <= self.async_v.start && self.async_v.end <= self.async_h.start,
            Config,
            "gates must be ordered sync < async_v < async_h without overlap"
        );
        ensure!(self.t_wait > T::zero(), Config, "t_wait must be > 0");
        ensure!(self.bin > T::zero(), Config, "bin width must be > 0");
        let ps = self.bin.as_f64() * 1e6;
        ensure!(
            (ps - ps.round()).abs() < 1e-6 && ps.round() >= 1.0,
            Config,
            "bin width {} is not a whole number of picoseconds",
            self.bin
        );
        Ok(())
    }
}

/// Counts on a regular set of bins with their densities `N/(kΔ)` and Poisson errors `√N/(kΔ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram<T> {
    pub centers: Vec<T>,
    pub width: T,
    pub counts: Vec<u64>,
    pub density: Vec<T>,
    pub sigma: Vec<T>,
}

impl<T: Real> Histogram<T> {
    fn from_counts(centers: Vec<T>, width: T, counts: Vec<u64>, trials: u64) -> Self {
        let norm = T::from_index(trials as usize) * width;
        let density = counts.iter().map(|&n| T::from_index(n as usize) / norm).collect();
        let sigma = counts.iter().map(|&n| T::from_index(n as usize).sqrt() / norm).collect();
        Self { centers, width, counts, density, sigma }
    }

    pub fn total_counts(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `Σ density·Δ` over all bins.
    pub fn integral(&self) -> T {
        self.density.iter().copied().sum::<T>() * self.width
    }
}

/// Bookkeeping of the framing step.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub triggers: u64,
    pub detector_events: u64,
    pub before_first_trigger: u64,
    /// Detector events in a frame but outside every gate.
    pub outside_gates: u64,
    /// Clicks per gate (sync, async_v, async_h) and detector (D1, D2).
    pub gate_singles: [[u64; 2]; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistogramSet<T> {
    pub trials: u64,
    pub gates: GateSpec<T>,
    /// Clicks of both detectors in the late asynchronous gate, against time since its start.
    pub rho_d_short: Histogram<T>,
    /// Same for the early asynchronous gate.
    pub rho_d_long: Histogram<T>,
    pub rho_c_parallel: Histogram<T>,
    /// Sum of both folded branches.
    pub rho_c_perp: Histogram<T>,
    /// D1 early, D2 late: originally at `τ ≈ +t_wait`.
    pub rho_c_perp_plus: Histogram<T>,
    /// D1 late, D2 early: originally at `τ ≈ −t_wait`.
    pub rho_c_perp_minus: Histogram<T>,
    pub diagnostics: Diagnostics,
}

#[derive(Clone, Debug)]
struct Layout {
    gates: [(i64, i64); 3],
    t_wait: i64,
    bin: i64,
    singles_bins: [usize; 2],
    half_sync: i64,
    half_perp: i64,
}

impl Layout {
    fn new<T: Real>(g: &GateSpec<T>) -> Self {
        let gates = [g.sync.to_ps(), g.async_v.to_ps(), g.async_h.to_ps()];
        let t_wait = us_to_ps(g.t_wait);
        let bin = us_to_ps(g.bin);
        let len = |(a, b): (i64, i64)| b - a;
        let n_bins = |l: i64| ((l + bin - 1) / bin) as usize;
        let half = |max_abs: i64| (max_abs + bin / 2) / bin + 1;
        let (v, h) = (gates[1], gates[2]);
        let plus = [h.0 - v.1 - t_wait, h.1 - v.0 - t_wait];
        let minus = [v.0 - h.1 + t_wait, v.1 - h.0 + t_wait];
        let max_perp = plus.iter().chain(&minus).map(|x| x.abs()).max().unwrap_or(0);
        Self {
            gates,
            t_wait,
            bin,
            singles_bins: [n_bins(len(h)), n_bins(len(v))],
            half_sync: half(len(gates[0])),
            half_perp: half(max_perp),
        }
    }

    fn gate_of(&self, t: i64) -> Option<usize> {
        self.gates.iter().position(|&(a, b)| t >= a && t < b)
    }

    fn tau_bin(&self, tau: i64, half: i64) -> Option<usize> {
        let m = (tau + self.bin / 2).div_euclid(self.bin);
        (m.abs() <= half).then(|| (m + half) as usize)
    }
}

#[derive(Clone, Debug)]
struct Counts {
    singles: [Vec<u64>; 2],
    parallel: Vec<u64>,
    plus: Vec<u64>,
    minus: Vec<u64>,
    diag: Diagnostics,
}

impl Counts {
    fn new(l: &Layout) -> Self {
        Self {
            singles: [vec![0; l.singles_bins[0]], vec![0; l.singles_bins[1]]],
            parallel: vec![0; 2 * l.half_sync as usize + 1],
            plus: vec![0; 2 * l.half_perp as usize + 1],
            minus: vec![0; 2 * l.half_perp as usize + 1],
            diag: Diagnostics::default(),
        }
    }

    fn merge(&mut self, o: &Counts) {
        let add = |a: &mut Vec<u64>, b: &Vec<u64>| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.singles[0], &o.singles[0]);
        add(&mut self.singles[1], &o.singles[1]);
        add(&mut self.parallel, &o.parallel);
        add(&mut self.plus, &o.plus);
        add(&mut self.minus, &o.minus);
        let (d, e) = (&mut self.diag, &o.diag);
        d.triggers += e.triggers;
        d.detector_events += e.detector_events;
        d.before_first_trigger += e.before_first_trigger;
        d.outside_gates += e.outside_gates;
        for g in 0..3 {
            for k in 0..2 {
                d.gate_singles[g][k] += e.gate_singles[g][k];
            }
        }
    }

    /// One trigger frame: `times[g][det]` are click times relative to the trigger.
    fn add_frame(&mut self, l: &Layout, times: &[[Vec<i64>; 2]; 3]) {
        for (g, per_det) in times.iter().enumerate() {
            for (d, ts) in per_det.iter().enumerate() {
                self.diag.gate_singles[g][d] += ts.len() as u64;
            }
        }
        // Singles: late gate is the short arm, early gate the long arm.
        for (arm, g) in [(0usize, 2usize), (1, 1)] {
            let start = l.gates[g].0;
            for ts in &times[g] {
                for &t in ts {
                    let i = ((t - start) / l.bin) as usize;
                    if let Some(c) = self.singles[arm].get_mut(i) {
                        *c += 1;
                    }
                }
            }
        }
        let [sync_d1, sync_d2] = &times[0];
        for &t1 in sync_d1 {
            for &t2 in sync_d2 {
                if let Some(i) = l.tau_bin(t2 - t1, l.half_sync) {
                    self.parallel[i] += 1;
                }
            }
        }
        let ([v1, v2], [h1, h2]) = (&times[1], &times[2]);
        for &t1 in v1 {
            for &t2 in h2 {
                if let Some(i) = l.tau_bin(t2 - t1 - l.t_wait, l.half_perp) {
                    self.plus[i] += 1;
                }
            }
        }
        for &t1 in h1 {
            for &t2 in v2 {
                if let Some(i) = l.tau_bin(t2 - t1 + l.t_wait, l.half_perp) {
                    self.minus[i] += 1;
                }
            }
        }
    }
}

fn accumulate(stream: &[crate::timetag::stream::Event], layout: &Layout, first_frame: bool) -> Counts {
    let mut counts = Counts::new(layout);
    let mut times: [[Vec<i64>; 2]; 3] = Default::default();
    let mut trigger: Option<u64> = None;
    let flush = |counts: &mut Counts, times: &mut [[Vec<i64>; 2]; 3]| {
        counts.add_frame(layout, times);
        times.iter_mut().flatten().for_each(Vec::clear);
    };
    for e in stream {
        match e.channel {
            Channel::Trig => {
                if trigger.is_some() {
                    flush(&mut counts, &mut times);
                }
                trigger = Some(e.timestamp_ps);
                counts.diag.triggers += 1;
            }
            Channel::D1 | Channel::D2 => {
                counts.diag.detector_events += 1;
                let Some(t0) = trigger else {
                    if first_frame {
                        counts.diag.before_first_trigger += 1;
                    }
                    continue;
                };
                let t = (e.timestamp_ps - t0) as i64;
                match layout.gate_of(t) {
                    Some(g) => times[g][(e.channel == Channel::D2) as usize].push(t),
                    None => counts.diag.outside_gates += 1,
                }
            }
        }
    }
    if trigger.is_some() {
        flush(&mut counts, &mut times);
    }
    counts
}

/// Frames the stream by trigger and histograms singles and coincidences.
pub fn build_histograms<T: Real>(stream: &TimeTagStream, gates: &GateSpec<T>) -> Result<HistogramSet<T>> {
    build_histograms_sharded(stream, gates, 1)
}

/// As [`build_histograms`], splitting the trigger frames over `shards` threads.
/// Integer counts are merged, so the result does not depend on `shards`.
pub fn build_histograms_sharded<T: Real>(
    stream: &TimeTagStream,
    gates: &GateSpec<T>,
    shards: usize,
) -> Result<HistogramSet<T>> {
    gates.validate()?;
    let events = stream.events();
    let trig_idx: Vec<usize> =
        events.iter().enumerate().filter(|(_, e)| e.channel == Channel::Trig).map(|(i, _)| i).collect();
    if trig_idx.is_empty() {
        return Err(Error::Data("no trigger events in stream".into()));
    }
    let layout = Layout::new(gates);
    let shards = shards.clamp(1, trig_idx.len());
    let per = trig_idx.len().div_ceil(shards);
    // Shard boundaries sit on trigger events; the first shard also owns events before the first trigger.
    let mut bounds: Vec<usize> = (0..shards).map(|s| if s == 0 { 0 } else { trig_idx[(s * per).min(trig_idx.len() - 1)] }).collect();
    bounds.dedup();
    bounds.push(events.len());
    let parts: Vec<Counts> = thread::scope(|sc| {
        let handles: Vec<_> = bounds
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let slice = &events[w[0]..w[1]];
                let layout = &layout;
                sc.spawn(move || accumulate(slice, layout, i == 0))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("histogram worker panicked")).collect()
    });
    let mut total = Counts::new(&layout);
    for p in &parts {
        total.merge(p);
    }
    let k = gates.trials.unwrap_or(total.diag.triggers);
    ensure!(k > 0, Data, "number of trials must be > 0");
    let bin = gates.bin;
    let singles_centers =
        |n: usize| (0..n).map(|i| (T::from_index(i) + T::lit(0.5)) * bin).collect::<Vec<T>>();
    let tau_centers =
        |half: i64| (-half..=half).map(|m| T::from_i64(m).expect("bin index") * bin).collect::<Vec<T>>();
    let perp_counts: Vec<u64> = total.plus.iter().zip(&total.minus).map(|(a, b)| a + b).collect();
    Ok(HistogramSet {
        trials: k,
        gates: *gates,
        rho_d_short: Histogram::from_counts(singles_centers(layout.singles_bins[0]), bin, total.singles[0].clone(), k),
        rho_d_long: Histogram::from_counts(singles_centers(layout.singles_bins[1]), bin, total.singles[1].clone(), k),
        rho_c_parallel: Histogram::from_counts(tau_centers(layout.half_sync), bin, total.parallel, k),
        rho_c_perp: Histogram::from_counts(tau_centers(layout.half_perp), bin, perp_counts, k),
        rho_c_perp_plus: Histogram::from_counts(tau_centers(layout.half_perp), bin, total.plus, k),
        rho_c_perp_minus: Histogram::from_counts(tau_centers(layout.half_perp), bin, total.minus, k),
        diagnostics: total.diag,
    })
}

/// Length of `{t1 ∈ a : t1 + τ ∈ b}`.
fn overlap<T: Real>(a: Gate<T>, b: Gate<T>, tau: T) -> T {
    let lo = a.start.max(b.start - tau);
    let hi = a.end.min(b.end - tau);
    (hi - lo).max(T::zero())
}

impl<T: Real> HistogramSet<T> {
    /// Removes the expected contribution of detector dark counts at `rate_hz` per detector.
    ///
    /// Singles lose `2r`. Coincidences lose dark-real accidentals `r·(s₁ + s₂)`, with
    /// `s` the per-trial click probability of the partner detector in its gate, plus
    /// dark-dark pairs `r²·overlap(τ)`. Poisson errors stay those of the raw counts,
    /// and corrected densities may become negative.
    pub fn subtract_dark(&self, rate_hz: T) -> Result<Self> {
        ensure!(rate_hz >= T::zero(), Domain, "dark count rate must be >= 0");
        let r = rate_hz * T::lit(1e-6);
        let k = T::from_index(self.trials as usize);
        let s = |g: usize, d: usize| T::from_index(self.diagnostics.gate_singles[g][d] as usize) / k;
        let g = &self.gates;
        let mut out = self.clone();
        for h in [&mut out.rho_d_short, &mut out.rho_d_long] {
            h.density.iter_mut().for_each(|x| *x -= r + r);
        }
        let sync_acc = r * (s(0, 0) + s(0, 1));
        for (x, &tau) in out.rho_c_parallel.density.iter_mut().zip(&self.rho_c_parallel.centers) {
            *x -= sync_acc + r * r * overlap(g.sync, g.sync, tau);
        }
        let plus_acc = r * (s(1, 0) + s(2, 1));
        let minus_acc = r * (s(2, 0) + s(1, 1));
        for (i, &tau) in self.rho_c_perp.centers.iter().enumerate() {
            let p = plus_acc + r * r * overlap(g.async_v, g.async_h, tau + g.t_wait);
            let m = minus_acc + r * r * overlap(g.async_h, g.async_v, tau - g.t_wait);
            out.rho_c_perp_plus.density[i] -= p;
            out.rho_c_perp_minus.density[i] -= m;
            out.rho_c_perp.density[i] -= p + m;
        }
        Ok(out)
    }

    pub fn write_coincidence_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "tau_center_us,p_parallel_per_us,sigma_parallel_per_us,p_perp_per_us,sigma_perp_per_us")?;
        let (par, perp) = (&self.rho_c_parallel, &self.rho_c_perp);
        let half_par = par.centers.len() / 2;
        let half_perp = perp.centers.len() / 2;
        let half = half_par.max(half_perp);
        for m in -(half as i64)..=(half as i64) {
            let pick = |h: &Histogram<T>, half: usize| {
                let i = m + half as i64;
                (i >= 0 && (i as usize) < h.centers.len()).then(|| (h.density[i as usize], h.sigma[i as usize]))
            };
            let (a, sa) = pick(par, half_par).unwrap_or((T::zero(), T::zero()));
            let (b, sb) = pick(perp, half_perp).unwrap_or((T::zero(), T::zero()));
            let tau = T::from_i64(m).expect("bin index") * par.width;
            writeln!(out, "{tau},{a:e},{sa:e},{b:e},{sb:e}")?;
        }
        Ok(())
    }

    pub fn write_singles_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "arm,t_center_us,rho_per_us,sigma_per_us")?;
        for (name, h) in [("short", &self.rho_d_short), ("long", &self.rho_d_long)] {
            for ((t, d), s) in h.centers.iter().zip(&h.density).zip(&h.sigma) {
                writeln!(out, "{name},{t},{d:e},{s:e}")?;
            }
        }
        Ok(())
    }
}

/// One row of the measured visibility curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExperimentalPoint<T> {
    pub window: T,
    /// Absent when `C⊥(T) = 0`.
    pub visibility: Option<T>,
    pub sigma: Option<T>,
    pub c_parallel: T,
    pub c_perp: T,
}

fn window_sum<T: Real>(h: &Histogram<T>, window: T) -> (T, T) {
    let half = h.centers.len() / 2;
    let m = ((window / h.width).round().to_usize().unwrap_or(usize::MAX)).min(half);
    let range = half - m..=half + m;
    let c = h.density[range.clone()].iter().copied().sum::<T>() * h.width;
    let var = h.sigma[range].iter().map(|&s| s * s).sum::<T>() * h.width * h.width;
    (c, var)
}

/// `V(T) = (C⊥ − C∥)/C⊥` with first-order propagation of independent Poisson errors.
pub fn experimental_visibility<T: Real>(h: &HistogramSet<T>, windows: &[T]) -> Result<Vec<ExperimentalPoint<T>>> {
    let bin = h.gates.bin;
    windows
        .iter()
        .map(|&w| {
            let m = (w / bin).round();
            ensure!(
                w >= T::zero() && (m * bin - w).abs() <= T::lit(1e-9) * bin.max(w),
                Config,
                "window {w} is not a non-negative multiple of the bin width {bin}"
            );
            let (a, va) = window_sum(&h.rho_c_parallel, w);
            let (b, vb) = window_sum(&h.rho_c_perp, w);
            let (visibility, sigma) = if b > T::zero() {
                let var = va / (b * b) + a * a * vb / (b * b * b * b);
                (Some((b - a) / b), Some(var.sqrt()))
            } else {
                (None, None)
            };
            Ok(ExperimentalPoint { window: w, visibility, sigma, c_parallel: a, c_perp: b })
        })
        .collect()
}

pub fn write_experimental_visibility_csv<T: Real, W: Write>(rows: &[ExperimentalPoint<T>], mut out: W) -> Result<()> {
    writeln!(out, "T_us,V,sigma_V,C_parallel,C_perp")?;
    for r in rows {
        let opt = |x: Option<T>| x.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{:e},{:e}", r.window, opt(r.visibility), opt(r.sigma), r.c_parallel, r.c_perp)?;
    }
    Ok(())
}
