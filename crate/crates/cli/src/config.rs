//! Layered configuration: a preset, then a file, then `--set` overrides.
//!
//! Every key is checked against a fixed schema before anything is resolved, so a
//! misspelled key fails loudly instead of silently falling back to a default.

use std::path::Path;

use ionhom::hom::{sigma_from_drift, ImperfectionParams};
use ionhom::netlink::LinkSpec;
use ionhom::photon::RecordOptions;
use ionhom::qdyn::{effective_coupling, SourceParams, StarkShift};
use ionhom::scenario::{ArmSpec, Efficiency, Scenario};
use ionhom::sweep::{Objective, SweepSpec};
use ionhom::timetag::{Gate, GateSpec, SequenceTiming, DEFAULT_STRIDE, DELAY_LINE};
use toml::{Table, Value};

use crate::units;
use crate::CliError;

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2_basic", include_str!("../presets/fig2_basic.toml")),
    ("fig2_extended", include_str!("../presets/fig2_extended.toml")),
    ("fig3_extended", include_str!("../presets/fig3_extended.toml")),
    ("figA5", include_str!("../presets/figA5.toml")),
];

const SOURCE_KEYS: &[&str] = &[
    "omega",
    "pulse_on",
    "pulse_off",
    "delta",
    "delta_stark",
    "g0",
    "alpha",
    "beta_sq",
    "g",
    "kappa",
    "gamma_sp",
    "gamma_dp",
];

const ARM_KEYS: &[&str] = &["eta", "detection_probability"];

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["dt", "t_horizon", "bin_width", "windows"]),
    (
        "imperfections",
        &[
            "epsilon",
            "omega_offset",
            "drift_sqrt_v",
            "drift_t_bar",
            "sigma_drift",
            "tau_gen",
            "background_density",
            "background_on_perp",
        ],
    ),
    ("gates", &["sync", "async_v", "async_h", "t_wait", "bin", "trials"]),
    ("sample", &["trials", "seed", "stride", "period"]),
    ("sweep", &["omegas", "windows", "objective", "threshold", "frontier_v_min", "refine"]),
    (
        "link",
        &[
            "r_gen",
            "c_perp",
            "v",
            "window",
            "fiber_km",
            "atten_db_per_km",
            "attenuated_arms",
            "dark_rate",
            "proportionality",
        ],
    ),
    ("output", &["dir", "strict", "psi_stride", "kernel_stride"]),
];

const CONFIG_BEGIN: &str = "# config:";
const CONFIG_END: &str = "# end config";

fn err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

pub fn preset(name: &str) -> Result<Table, CliError> {
    let text = PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        err(format!("unknown preset {name:?} (known: {})", known.join(", ")))
    })?;
    text.parse::<Table>().map_err(|e| err(format!("preset {name}: {e}")))
}

/// Recursively overlays `top` on `base`.
pub fn merge(base: &mut Table, top: Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// The configuration block embedded in an output header, if `text` has one.
pub fn extract_embedded(text: &str) -> Option<String> {
    let mut lines = text.lines().skip_while(|l| l.trim_end() != CONFIG_BEGIN);
    lines.next()?;
    let mut out = String::new();
    for l in lines {
        if l.trim_end() == CONFIG_END {
            return Some(out);
        }
        let body = l.strip_prefix("# ").or_else(|| l.strip_prefix('#'))?;
        out.push_str(body);
        out.push('\n');
    }
    None
}

/// Reads a config file; output files with an embedded configuration are accepted too.
pub fn read_file(path: &Path) -> Result<Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
    let body = extract_embedded(&text).unwrap_or(text);
    body.parse::<Table>().map_err(|e| err(format!("{}: {e}", path.display())))
}

/// Parses `section.key=value`. The value is read as TOML when possible and as a
/// bare string otherwise, so `grid.dt=5ns` and `imperfections.epsilon=0.02` both work.
pub fn parse_assignment(s: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, raw) = s.split_once('=').ok_or_else(|| err(format!("--set {s:?} is not key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(err(format!("--set {s:?} has an empty key")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_owned()));
    Ok((path, value))
}

fn assign(table: &mut Table, path: &[String], value: Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("non-empty key path");
    let mut t = table;
    for p in parents {
        let entry = t.entry(p.clone()).or_insert_with(|| Value::Table(Table::new()));
        t = entry.as_table_mut().ok_or_else(|| err(format!("{} is not a section", path.join("."))))?;
    }
    t.insert(last.clone(), value);
    Ok(())
}

fn check_keys(table: &Table, allowed: &[&str], section: &str) -> Result<(), CliError> {
    for k in table.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(err(format!("unknown key {section}.{k}")));
        }
    }
    Ok(())
}

/// Rejects keys outside the schema.
pub fn check_schema(table: &Table) -> Result<(), CliError> {
    for (k, v) in table {
        fn section<'t>(k: &str, v: &'t Value) -> Result<&'t Table, CliError> {
            v.as_table().ok_or_else(|| err(format!("{k} must be a section")))
        }
        match k.as_str() {
            "source" => check_keys(section(k, v)?, SOURCE_KEYS, k)?,
            "arm" => {
                for (name, arm) in section(k, v)? {
                    if name != "short" && name != "long" {
                        return Err(err(format!("unknown arm {name:?} (expected short or long)")));
                    }
                    let arm = arm.as_table().ok_or_else(|| err(format!("arm.{name} must be a section")))?;
                    let allowed: Vec<&str> = SOURCE_KEYS.iter().chain(ARM_KEYS).copied().collect();
                    check_keys(arm, &allowed, &format!("arm.{name}"))?;
                }
            }
            _ => match SECTIONS.iter().find(|(s, _)| s == k) {
                Some((_, keys)) => check_keys(section(k, v)?, keys, k)?,
                None => return Err(err(format!("unknown key {k}"))),
            },
        }
    }
    Ok(())
}

/// Where the layers come from.
#[derive(Clone, Debug, Default)]
pub struct Layers<'a> {
    pub preset: Option<&'a str>,
    pub file: Option<&'a Path>,
    pub sets: &'a [String],
}

/// The merged configuration table.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub preset: Option<String>,
    pub table: Table,
}

impl Config {
    pub fn load(layers: &Layers) -> Result<Self, CliError> {
        let mut file = match layers.file {
            Some(p) => read_file(p)?,
            None => Table::new(),
        };
        let from_file = match file.remove("preset") {
            Some(Value::String(s)) => Some(s),
            Some(v) => return Err(err(format!("preset must be a string, found {v}"))),
            None => None,
        };
        let name = layers.preset.map(str::to_owned).or(from_file);
        let mut table = match &name {
            Some(n) => preset(n)?,
            None => Table::new(),
        };
        merge(&mut table, file);
        for s in layers.sets {
            let (path, value) = parse_assignment(s)?;
            assign(&mut table, &path, value)?;
        }
        check_schema(&table)?;
        Ok(Self { preset: name, table })
    }

    pub fn from_table(table: Table) -> Result<Self, CliError> {
        check_schema(&table)?;
        Ok(Self { preset: None, table })
    }

    /// Merges a sweep file; its keys may sit at the top level or under `[sweep]`.
    pub fn merge_sweep_file(&mut self, path: &Path) -> Result<(), CliError> {
        let mut t = read_file(path)?;
        let sweep = match t.remove("sweep") {
            Some(Value::Table(s)) if t.is_empty() => s,
            Some(_) => return Err(err(format!("{}: expected only sweep keys", path.display()))),
            None => t,
        };
        let mut wrapped = Table::new();
        wrapped.insert("sweep".into(), Value::Table(sweep));
        check_schema(&wrapped)?;
        merge(&mut self.table, wrapped);
        Ok(())
    }

    /// Canonical TOML of the merged table; feeding it back reproduces the run.
    /// The output directory is left out so that a re-run can be pointed elsewhere.
    pub fn to_toml(&self) -> String {
        let mut table = self.table.clone();
        if let Some(Value::Table(o)) = table.get_mut("output") {
            o.remove("dir");
            if o.is_empty() {
                table.remove("output");
            }
        }
        let body = toml::to_string(&table).expect("configuration tables serialize");
        match &self.preset {
            Some(p) => format!("preset = {}\n\n{body}", Value::String(p.clone())),
            None => body,
        }
    }

    fn get(&self, section: &str, key: &str) -> Option<&Value> {
        self.table.get(section)?.as_table()?.get(key)
    }

    fn arm_get(&self, arm: &str, key: &str) -> Option<&Value> {
        self.table
            .get("arm")
            .and_then(|a| a.get(arm))
            .and_then(|a| a.as_table())
            .and_then(|a| a.get(key))
            .or_else(|| self.get("source", key))
    }

    fn read<T>(&self, v: Option<&Value>, name: &str, f: fn(&Value) -> Result<T, String>) -> Result<Option<T>, CliError> {
        v.map(|v| f(v).map_err(|e| err(format!("{name}: {e}")))).transpose()
    }

    fn need<T>(&self, v: Option<T>, name: &str) -> Result<T, CliError> {
        v.ok_or_else(|| err(format!("missing key {name}")))
    }

    fn opt<T>(&self, section: &str, key: &str, f: fn(&Value) -> Result<T, String>) -> Result<Option<T>, CliError> {
        self.read(self.get(section, key), &format!("{section}.{key}"), f)
    }

    fn req<T>(&self, section: &str, key: &str, f: fn(&Value) -> Result<T, String>) -> Result<T, CliError> {
        let v = self.opt(section, key, f)?;
        self.need(v, &format!("{section}.{key}"))
    }

    fn arm_opt<T>(&self, arm: &str, key: &str, f: fn(&Value) -> Result<T, String>) -> Result<Option<T>, CliError> {
        self.read(self.arm_get(arm, key), &format!("arm.{arm}.{key}"), f)
    }

    fn arm_req<T>(&self, arm: &str, key: &str, f: fn(&Value) -> Result<T, String>) -> Result<T, CliError> {
        let v = self.arm_opt(arm, key, f)?;
        self.need(v, &format!("arm.{arm}.{key} (or source.{key})"))
    }

    pub fn dt(&self) -> Result<f64, CliError> {
        self.req("grid", "dt", units::time)
    }

    pub fn horizon(&self) -> Result<f64, CliError> {
        self.req("grid", "t_horizon", units::time)
    }

    pub fn bin_width(&self) -> Result<f64, CliError> {
        self.req("grid", "bin_width", units::time)
    }

    pub fn strict(&self) -> Result<bool, CliError> {
        Ok(self.opt("output", "strict", boolean)?.unwrap_or(false))
    }

    pub fn source(&self, arm: &str) -> Result<SourceParams<f64>, CliError> {
        let g = match self.arm_opt(arm, "g", units::frequency)? {
            Some(g) => g,
            None => {
                let g0 = self.arm_req(arm, "g0", units::frequency)?;
                let alpha = self.arm_opt(arm, "alpha", units::number)?.unwrap_or(1.0);
                let beta_sq = self.arm_opt(arm, "beta_sq", units::ratio)?.unwrap_or(1.0);
                if beta_sq < 0.0 {
                    return Err(err(format!("arm.{arm}.beta_sq = {beta_sq} must be >= 0")));
                }
                effective_coupling(alpha, beta_sq.sqrt(), g0)
            }
        };
        let delta_stark = match self.arm_get(arm, "delta_stark") {
            None => StarkShift::Auto,
            Some(Value::String(s)) if s.trim() == "auto" => StarkShift::Auto,
            Some(v) => StarkShift::Fixed(
                units::frequency(v).map_err(|e| err(format!("arm.{arm}.delta_stark: {e} (or \"auto\")")))?,
            ),
        };
        let p = SourceParams {
            omega_drive: self.arm_req(arm, "omega", units::frequency)?,
            pulse_on: self.arm_opt(arm, "pulse_on", units::time)?.unwrap_or(0.0),
            pulse_off: self.arm_req(arm, "pulse_off", units::time)?,
            delta: self.arm_req(arm, "delta", units::frequency)?,
            delta_stark,
            g_eff: g,
            kappa: self.arm_req(arm, "kappa", units::frequency)?,
            gamma_sp: self.arm_req(arm, "gamma_sp", units::frequency)?,
            gamma_dp: self.arm_req(arm, "gamma_dp", units::frequency)?,
            t_horizon: self.horizon()?,
            dt: self.dt()?,
        };
        p.validate().map_err(|e| CliError::Core(e.context(format_args!("{arm} arm"))))?;
        Ok(p)
    }

    pub fn efficiency(&self, arm: &str) -> Result<Efficiency<f64>, CliError> {
        let eta = self.arm_opt(arm, "eta", units::number)?;
        let det = self.arm_opt(arm, "detection_probability", units::number)?;
        match (eta, det) {
            (Some(_), Some(_)) => Err(err(format!("arm.{arm}: give eta or detection_probability, not both"))),
            (Some(e), None) => Ok(Efficiency::Fixed(e)),
            (None, Some(p)) => Ok(Efficiency::DetectionProbability(p)),
            (None, None) => Ok(Efficiency::Fixed(1.0)),
        }
    }

    pub fn imperfections(&self) -> Result<ImperfectionParams<f64>, CliError> {
        let s = "imperfections";
        let d = ImperfectionParams::<f64>::default();
        let sigma = match (self.opt(s, "sigma_drift", units::number)?, self.opt(s, "drift_sqrt_v", units::frequency)?) {
            (Some(_), Some(_)) => return Err(err("give imperfections.sigma_drift or drift_sqrt_v, not both")),
            (Some(x), None) => x,
            (None, Some(v)) => sigma_from_drift(v, self.req(s, "drift_t_bar", units::time)?)?,
            (None, None) => 0.0,
        };
        let imp = ImperfectionParams {
            epsilon: self.opt(s, "epsilon", units::number)?.unwrap_or(d.epsilon),
            omega_offset: self.opt(s, "omega_offset", units::frequency)?.unwrap_or(d.omega_offset),
            sigma_drift: sigma,
            tau_gen: self.opt(s, "tau_gen", units::time)?.unwrap_or(d.tau_gen),
            background_density: self.opt(s, "background_density", units::number)?.unwrap_or(d.background_density),
            background_on_perp: self.opt(s, "background_on_perp", boolean)?.unwrap_or(d.background_on_perp),
        };
        imp.validate()?;
        Ok(imp)
    }

    pub fn scenario(&self) -> Result<Scenario<f64>, CliError> {
        Ok(Scenario {
            short: ArmSpec { source: self.source("short")?, efficiency: self.efficiency("short")? },
            long: ArmSpec { source: self.source("long")?, efficiency: self.efficiency("long")? },
            imperfections: self.imperfections()?,
            bin_width: self.bin_width()?,
            options: RecordOptions { strict: self.strict()? },
        })
    }

    /// Reported windows; `None` means every multiple of the bin width.
    pub fn windows(&self) -> Result<Option<Vec<f64>>, CliError> {
        match self.get("grid", "windows") {
            None => Ok(None),
            Some(v) => window_list(v, "grid.windows"),
        }
    }

    pub fn gates(&self) -> Result<GateSpec<f64>, CliError> {
        let s = "gates";
        // Without a model grid the gates follow the standard 20 µs sequence.
        let horizon = self.opt("grid", "t_horizon", units::time)?.unwrap_or(20.0);
        let bin = match self.opt(s, "bin", units::time)? {
            Some(b) => b,
            None => self.opt("grid", "bin_width", units::time)?.unwrap_or(0.125),
        };
        let mut g = SequenceTiming::standard(horizon).gates(horizon, bin);
        let explicit_wait = self.opt(s, "t_wait", units::time)?;
        for (key, gate) in [("sync", &mut g.sync), ("async_v", &mut g.async_v), ("async_h", &mut g.async_h)] {
            if let Some(v) = self.get(s, key) {
                *gate = gate_value(v).map_err(|e| err(format!("gates.{key}: {e}")))?;
            }
        }
        g.t_wait = explicit_wait.unwrap_or(g.async_h.start - g.async_v.start);
        g.trials = self.opt(s, "trials", count)?;
        g.validate()?;
        Ok(g)
    }

    /// Slot offsets for the sampler, following the gate starts.
    pub fn timing(&self) -> Result<SequenceTiming<f64>, CliError> {
        let g = self.gates()?;
        let period = self.opt("sample", "period", units::time)?.unwrap_or(g.async_h.end + DELAY_LINE);
        Ok(SequenceTiming { period, sync: g.sync.start, async_v: g.async_v.start, async_h: g.async_h.start })
    }

    pub fn sample(&self) -> Result<SampleSettings, CliError> {
        Ok(SampleSettings {
            trials: self.opt("sample", "trials", count)?.unwrap_or(100_000),
            seed: self.opt("sample", "seed", count)?.unwrap_or(0),
            stride: self.opt("sample", "stride", count)?.map_or(DEFAULT_STRIDE, |s| s as usize),
        })
    }

    pub fn sweep(&self) -> Result<SweepSettings, CliError> {
        let s = "sweep";
        let omegas = match self.get(s, "omegas") {
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| units::frequency(v).map_err(|e| err(format!("sweep.omegas: {e}"))))
                .collect::<Result<Vec<_>, _>>()?,
            Some(_) => return Err(err("sweep.omegas must be a list of frequencies")),
            None => return Err(err("missing key sweep.omegas (use --sweep or --set)")),
        };
        let windows = match self.get(s, "windows") {
            Some(v) => window_list(v, "sweep.windows")?,
            None => self.windows()?,
        };
        let threshold = self.opt(s, "threshold", units::number)?.unwrap_or(0.99);
        let objective = match self.opt(s, "objective", string)?.as_deref() {
            None | Some("max_psucc_at_v") => Objective::MaxPsuccAtV(threshold),
            Some("max_v_at_psucc") => Objective::MaxVAtPsucc(threshold),
            Some(o) => return Err(err(format!("sweep.objective {o:?} (expected max_psucc_at_v or max_v_at_psucc)"))),
        };
        Ok(SweepSettings {
            omegas,
            windows,
            objective,
            frontier_v_min: self.opt(s, "frontier_v_min", units::number)?.unwrap_or(0.8),
            refine: self.opt(s, "refine", boolean)?.unwrap_or(false),
        })
    }

    /// Sweep over the configured scenario; `all_windows` fills in when no list is set.
    pub fn sweep_spec(&self, settings: &SweepSettings) -> Result<SweepSpec<f64>, CliError> {
        let windows = match &settings.windows {
            Some(w) => w.clone(),
            None => {
                let (bin, horizon) = (self.bin_width()?, self.horizon()?);
                let n = (horizon / bin).round() as usize;
                (0..=n).map(|i| i as f64 * bin).collect()
            }
        };
        let spec = SweepSpec {
            scenario: self.scenario()?,
            omega_values: settings.omegas.clone(),
            window_values: windows,
            objective: settings.objective,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Link inputs from `[link]`; `v` and `c_perp` may be absent.
    pub fn link(&self) -> Result<LinkSettings, CliError> {
        let s = "link";
        let d = LinkSpec::new(0.0, 0.0, 0.0);
        Ok(LinkSettings {
            r_gen: self.opt(s, "r_gen", units::number)?,
            c_perp: self.opt(s, "c_perp", units::number)?,
            v: self.opt(s, "v", units::number)?,
            window: self.opt(s, "window", units::time)?.unwrap_or(9.0),
            fiber_km: self.opt(s, "fiber_km", units::number)?.unwrap_or(d.fiber_km),
            atten_db_per_km: self.opt(s, "atten_db_per_km", units::number)?.unwrap_or(d.atten_db_per_km),
            attenuated_arms: self.opt(s, "attenuated_arms", count)?.map_or(d.attenuated_arms, |a| a as u32),
            dark_rate: self.opt(s, "dark_rate", units::number)?.unwrap_or(d.dark_rate),
            proportionality: self.opt(s, "proportionality", units::number)?.unwrap_or(d.proportionality),
        })
    }

    pub fn output_dir(&self) -> Result<Option<String>, CliError> {
        self.opt("output", "dir", string)
    }

    pub fn strides(&self) -> Result<(usize, usize), CliError> {
        let psi = self.opt("output", "psi_stride", count)?.unwrap_or(0) as usize;
        let kernel = self.opt("output", "kernel_stride", count)?.unwrap_or(0) as usize;
        Ok((psi, kernel))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleSettings {
    pub trials: u64,
    pub seed: u64,
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSettings {
    pub omegas: Vec<f64>,
    pub windows: Option<Vec<f64>>,
    pub objective: Objective<f64>,
    pub frontier_v_min: f64,
    pub refine: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkSettings {
    pub r_gen: Option<f64>,
    pub c_perp: Option<f64>,
    pub v: Option<f64>,
    pub window: f64,
    pub fiber_km: f64,
    pub atten_db_per_km: f64,
    pub attenuated_arms: u32,
    pub dark_rate: f64,
    pub proportionality: f64,
}

fn boolean(v: &Value) -> Result<bool, String> {
    v.as_bool().ok_or_else(|| format!("expected true or false, found {v}"))
}

fn count(v: &Value) -> Result<u64, String> {
    v.as_integer()
        .and_then(|i| u64::try_from(i).ok())
        .ok_or_else(|| format!("expected a non-negative integer, found {v}"))
}

fn string(v: &Value) -> Result<String, String> {
    v.as_str().map(str::to_owned).ok_or_else(|| format!("expected a string, found {v}"))
}

fn gate_value(v: &Value) -> Result<Gate<f64>, String> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([a, b]) => Ok(Gate::new(units::time(a)?, units::time(b)?)),
        _ => Err(format!("expected [start, end] times, found {v}")),
    }
}

/// `"all"`, a list of times, or `{ start, stop, step }`.
fn window_list(v: &Value, name: &str) -> Result<Option<Vec<f64>>, CliError> {
    let e = |m: String| err(format!("{name}: {m}"));
    match v {
        Value::String(s) if s.trim() == "all" => Ok(None),
        Value::Array(a) => a.iter().map(|w| units::time(w).map_err(e)).collect::<Result<Vec<_>, _>>().map(Some),
        Value::Table(t) => {
            let get = |k: &str| {
                t.get(k).ok_or_else(|| err(format!("{name}.{k} missing"))).and_then(|v| units::time(v).map_err(e))
            };
            if let Some(k) = t.keys().find(|k| !["start", "stop", "step"].contains(&k.as_str())) {
                return Err(err(format!("unknown key {name}.{k}")));
            }
            let (start, stop, step) = (get("start")?, get("stop")?, get("step")?);
            if step <= 0.0 || stop < start {
                return Err(err(format!("{name}: need step > 0 and stop >= start")));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok(Some((0..=n).map(|i| start + i as f64 * step).collect()))
        }
        _ => Err(err(format!("{name}: expected \"all\", a list of times or {{ start, stop, step }}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layers<'a>(preset: &'a str, sets: &'a [String]) -> Layers<'a> {
        Layers { preset: Some(preset), file: None, sets }
    }

    #[test]
    fn every_preset_resolves() {
        for (name, _) in PRESETS {
            let c = Config::load(&layers(name, &[])).unwrap();
            c.scenario().unwrap();
            c.gates().unwrap();
        }
    }

    #[test]
    fn overrides_replace_preset_values() {
        let sets = vec!["source.omega=\"40 MHz\"".to_string(), "grid.dt=10ns".to_string()];
        let c = Config::load(&layers("fig2_basic", &sets)).unwrap();
        let s = c.scenario().unwrap();
        assert!((s.short.source.omega_drive - 2.0 * std::f64::consts::PI * 40.0).abs() < 1e-12);
        assert!((s.long.source.dt - 0.01).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for bad in ["source.omegaa=\"1 MHz\"", "colour.x=1", "arm.middle.eta=0.5", "gates.sink=1"] {
            let sets = vec![bad.to_string()];
            assert!(matches!(Config::load(&layers("fig2_basic", &sets)), Err(CliError::Config(_))), "{bad}");
        }
    }

    #[test]
    fn coupling_follows_alpha_beta_g0() {
        let c = Config::load(&layers("fig2_basic", &[])).unwrap();
        let p = c.source("short").unwrap();
        let want = 0.75 * (4.0f64 / 15.0).sqrt() * 2.0 * std::f64::consts::PI * 1.53;
        assert!((p.g_eff - want).abs() < 1e-12);
    }

    #[test]
    fn default_gates_match_the_sequence() {
        let g = Config::load(&layers("fig2_basic", &[])).unwrap().gates().unwrap();
        assert!((g.sync.start - 13.35).abs() < 1e-12 && (g.sync.end - 33.35).abs() < 1e-12);
        assert!((g.async_v.start - 46.7).abs() < 1e-12);
        assert!((g.async_h.start - 76.7).abs() < 1e-12);
        assert!((g.t_wait - 30.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_text_round_trips() {
        let c = Config::load(&layers("fig3_extended", &[])).unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(file.path(), c.to_toml()).unwrap();
        let again = Config::load(&Layers { preset: None, file: Some(file.path()), sets: &[] }).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.scenario().unwrap(), c.scenario().unwrap());
    }

    #[test]
    fn embedded_block_is_extracted() {
        let text = "# ionhom\n# config:\n# [grid]\n# dt = \"5 ns\"\n#\n# end config\nT_us,V\n";
        assert_eq!(extract_embedded(text).unwrap(), "[grid]\ndt = \"5 ns\"\n\n");
        assert_eq!(extract_embedded("T_us,V\n"), None);
    }

    #[test]
    fn window_ranges() {
        let v: Value = "w = { start = \"0 us\", stop = \"1 us\", step = \"250 ns\" }".parse::<Table>().unwrap()["w"].clone();
        assert_eq!(window_list(&v, "w").unwrap().unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
