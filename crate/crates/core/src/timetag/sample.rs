//! Synthetic detector streams drawn from the model densities.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{ensure, Error, Result};
use crate::hom::{ImperfectionParams, PairDensityMap};
use crate::photon::PhotonRecord;
use crate::scalar::Real;
use crate::timetag::histogram::{Gate, GateSpec};
use crate::timetag::stream::{Channel, Event, TimeTagStream};

/// Length of the delay line in µs.
pub const DELAY_LINE: f64 = 13.35;
/// Default extra delay of the late asynchronous photon in µs.
pub const DEFAULT_T_WAIT: f64 = 30.0;
/// Lattice stride of the sampled two-click map, in grid steps.
pub const DEFAULT_STRIDE: usize = 5;

/// Arrival offsets after the trigger, in µs, of emission time zero in each slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceTiming<T> {
    /// Trigger period.
    pub period: T,
    pub sync: T,
    pub async_v: T,
    pub async_h: T,
}

impl<T: Real> SequenceTiming<T> {
    /// Trigger with the first pulse; each wavepacket occupies `horizon` µs.
    pub fn standard(horizon: T) -> Self {
        let delay = T::lit(DELAY_LINE);
        let t_wait = T::lit(DEFAULT_T_WAIT).max(horizon);
        let sync = delay;
        let async_v = sync + horizon + delay;
        let async_h = async_v + t_wait;
        Self { period: async_h + horizon + delay, sync, async_v, async_h }
    }

    /// Gates that cover each slot for `horizon` µs.
    pub fn gates(&self, horizon: T, bin: T) -> GateSpec<T> {
        GateSpec {
            sync: Gate::new(self.sync, self.sync + horizon),
            async_v: Gate::new(self.async_v, self.async_v + horizon),
            async_h: Gate::new(self.async_h, self.async_h + horizon),
            t_wait: self.async_h - self.async_v,
            bin,
            trials: None,
        }
    }
}

/// Detection-time distribution of one photon.
struct Singles {
    p: f64,
    dist: Option<WeightedIndex<f64>>,
    dt: f64,
    horizon: f64,
}

impl Singles {
    fn new<T: Real>(r: &PhotonRecord<T>) -> Result<Self> {
        let dt = r.grid().dt().as_f64();
        let g: Vec<f64> = r.kernel_diagonal().iter().map(|x| x.as_f64().max(0.0)).collect();
        let p = g.iter().sum::<f64>() * dt;
        ensure!(p <= 1.0 + 1e-9, Config, "detection probability {p} exceeds 1");
        let dist = if p > 0.0 { Some(WeightedIndex::new(&g).map_err(|e| Error::Numeric(e.to_string()))?) } else { None };
        Ok(Self { p, dist, dt, horizon: r.grid().end().as_f64() })
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let k = self.dist.as_ref().expect("photon with zero detection probability").sample(rng);
        jitter(k as f64 * self.dt, self.dt, self.horizon, rng)
    }
}

fn jitter<R: Rng>(center: f64, cell: f64, horizon: f64, rng: &mut R) -> f64 {
    (center + (rng.gen::<f64>() - 0.5) * cell).clamp(0.0, horizon)
}

fn detector<R: Rng>(rng: &mut R) -> Channel {
    if rng.gen::<bool>() {
        Channel::D1
    } else {
        Channel::D2
    }
}

/// [`sample_synthetic_with`] using [`SequenceTiming::standard`] and [`DEFAULT_STRIDE`].
pub fn sample_synthetic<T: Real>(
    a: &PhotonRecord<T>,
    b: &PhotonRecord<T>,
    imp: &ImperfectionParams<T>,
    trials: u64,
    seed: u64,
) -> Result<TimeTagStream> {
    let timing = SequenceTiming::standard(a.grid().end());
    sample_synthetic_with(a, b, imp, &timing, trials, seed, DEFAULT_STRIDE)
}

/// Draws `trials` attempts of the four-photon sequence.
///
/// `a` is the short-path photon and `b` the long-path one. In the synchronous
/// slot a D1-D2 coincidence is drawn from the two-click map with mode mismatch,
/// two clicks on one detector with the remaining two-photon probability, and
/// single clicks from the marginals. In the asynchronous slots the photons are
/// drawn independently. The background floor is not sampled.
pub fn sample_synthetic_with<T: Real>(
    a: &PhotonRecord<T>,
    b: &PhotonRecord<T>,
    imp: &ImperfectionParams<T>,
    timing: &SequenceTiming<T>,
    trials: u64,
    seed: u64,
    stride: usize,
) -> Result<TimeTagStream> {
    let sa = Singles::new(a)?;
    let sb = Singles::new(b)?;
    let horizon = sa.horizon;
    let ps = |x: f64| (x * 1e6).round() as u64;
    let period = timing.period.as_f64();
    let offsets = [timing.sync.as_f64(), timing.async_v.as_f64(), timing.async_h.as_f64()];
    ensure!(
        offsets[0] >= 0.0 && offsets[0] + horizon <= offsets[1] && offsets[1] + horizon <= offsets[2],
        Config,
        "slots overlap for a {horizon} us wavepacket"
    );
    ensure!(offsets[2] + horizon < period, Config, "trigger period {period} us is shorter than one sequence");

    let both = sa.p * sb.p;
    let (pair, c_tot) = if both > 0.0 {
        let map = PairDensityMap::compute(a, b, imp, stride)?;
        let cell = map.cell().as_f64();
        let w: Vec<f64> = map.parallel.iter().map(|x| x.as_f64().max(0.0)).collect();
        let c_tot = w.iter().sum::<f64>() * cell * cell;
        ensure!(
            c_tot <= both * (1.0 + 1e-6),
            Config,
            "coincidence probability {c_tot} exceeds the two-photon probability {both}"
        );
        let dist = if c_tot > 0.0 { Some(WeightedIndex::new(&w).map_err(|e| Error::Numeric(e.to_string()))?) } else { None };
        (dist.map(|d| (d, map.size, cell)), c_tot.min(both))
    } else {
        (None, 0.0)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    for trial in 0..trials {
        let base = ps(trial as f64 * period);
        events.push(Event::new(Channel::Trig, base));
        let mut emit = |ch: Channel, slot: usize, t: f64| events.push(Event::new(ch, base + ps(offsets[slot] + t)));

        let u: f64 = rng.gen();
        if u < c_tot {
            let (dist, size, cell) = pair.as_ref().expect("coincidence map");
            let idx = dist.sample(&mut rng);
            let t1 = jitter((idx / size) as f64 * cell, *cell, horizon, &mut rng);
            let t2 = jitter((idx % size) as f64 * cell, *cell, horizon, &mut rng);
            emit(Channel::D1, 0, t1);
            emit(Channel::D2, 0, t2);
        } else if u < both {
            let ch = detector(&mut rng);
            let (t1, t2) = (sa.draw(&mut rng), sb.draw(&mut rng));
            emit(ch, 0, t1);
            emit(ch, 0, t2);
        } else if u < both + sa.p * (1.0 - sb.p) {
            let (ch, t) = (detector(&mut rng), sa.draw(&mut rng));
            emit(ch, 0, t);
        } else if u < sa.p + sb.p - both {
            let (ch, t) = (detector(&mut rng), sb.draw(&mut rng));
            emit(ch, 0, t);
        }

        if rng.gen::<f64>() < sb.p {
            let (ch, t) = (detector(&mut rng), sb.draw(&mut rng));
            emit(ch, 1, t);
        }
        if rng.gen::<f64>() < sa.p {
            let (ch, t) = (detector(&mut rng), sa.draw(&mut rng));
            emit(ch, 2, t);
        }
    }
    Ok(TimeTagStream::from_events(events))
}
