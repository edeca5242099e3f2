use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use ionhom::hom::{all_windows, single_click_density, visibility_curve};
use ionhom::netlink::{link_report, LinkSpec};
use ionhom::photon::PhotonRecord;
use ionhom::scenario::{Efficiency, Scenario};
use ionhom::sweep::{optimum_from_rows, run_sweep, write_sweep_csv, Frontier, Optimum};
use ionhom::timetag::{
    build_histograms_sharded, experimental_visibility, parse_timetags, sample_synthetic_with,
    write_experimental_visibility_csv,
};
use ionhom::mhz_from_angular;
use serde_json::{json, Value};

use crate::config::Config;
use crate::CliError;

const DEFAULT_DIR: &str = "out";

/// Provenance written at the top of every output.
pub struct Metadata {
    pub command: &'static str,
    pub preset: Option<String>,
    pub flags: Vec<String>,
    pub config: String,
}

impl Metadata {
    fn new(command: &'static str, cfg: &Config, flags: Vec<String>) -> Self {
        Self { command, preset: cfg.preset.clone(), flags, config: cfg.to_toml() }
    }

    /// `#`-prefixed header; the configuration block can be fed back with `--config`.
    pub fn header(&self) -> String {
        let mut s = format!("# ionhom {}\n# command: {}\n", env!("CARGO_PKG_VERSION"), self.command);
        if let Some(p) = &self.preset {
            let _ = writeln!(s, "# preset: {p}");
        }
        for f in &self.flags {
            let _ = writeln!(s, "# flag: {f}");
        }
        s.push_str("# config:\n");
        for line in self.config.lines() {
            if line.is_empty() {
                s.push_str("#\n");
            } else {
                let _ = writeln!(s, "# {line}");
            }
        }
        s.push_str("# end config\n");
        s
    }

    pub fn json(&self) -> Value {
        json!({
            "tool": "ionhom",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "preset": self.preset,
            "flags": self.flags,
            "config": self.config,
        })
    }
}

/// Output files, written only once every one of them has been produced.
#[derive(Default)]
struct Artifacts(Vec<(PathBuf, String)>);

impl Artifacts {
    fn csv(&mut self, path: PathBuf, meta: &Metadata, body: Vec<u8>) -> Result<(), CliError> {
        let body = String::from_utf8(body).map_err(|e| CliError::Config(e.to_string()))?;
        self.0.push((path, meta.header() + &body));
        Ok(())
    }

    fn json(&mut self, path: PathBuf, value: &Value) {
        let text = serde_json::to_string_pretty(value).expect("json values serialize");
        self.0.push((path, text + "\n"));
    }

    fn commit(self, out: &mut dyn Write) -> Result<(), CliError> {
        for (path, text) in &self.0 {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            }
            std::fs::write(path, text).map_err(|e| io_error(path, e))?;
            writeln!(out, "wrote {}", path.display())?;
        }
        Ok(())
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(ionhom::Error::Io(format!("{}: {e}", path.display())))
}

fn output_dir(cfg: &Config) -> Result<PathBuf, CliError> {
    Ok(PathBuf::from(cfg.output_dir()?.unwrap_or_else(|| DEFAULT_DIR.into())))
}

fn scenario_flags(s: &Scenario<f64>) -> Vec<String> {
    let eff = |e: &Efficiency<f64>| match e {
        Efficiency::Fixed(_) => "eta",
        Efficiency::DetectionProbability(_) => "detection_probability",
    };
    let stark = |p: &ionhom::qdyn::SourceParams<f64>| match p.delta_stark {
        ionhom::qdyn::StarkShift::Auto => "auto_per_segment",
        ionhom::qdyn::StarkShift::Fixed(_) => "fixed",
    };
    vec![
        "tau_bins=centered".into(),
        "carrier_phase=dropped".into(),
        format!("stark_shift={}", stark(&s.short.source)),
        format!("efficiency.short={}", eff(&s.short.efficiency)),
        format!("efficiency.long={}", eff(&s.long.efficiency)),
        format!(
            "background={}",
            if s.imperfections.background_on_perp { "both_curves" } else { "parallel_only" }
        ),
        "scatter_count.conditional=emission_weighted".into(),
        format!("strict={}", s.options.strict),
    ]
}

fn opt_json(x: Option<f64>) -> Value {
    x.map_or(Value::Null, |v| json!(v))
}

fn arm_json(r: &PhotonRecord<f64>) -> Value {
    let c = r.expected_scatter_count();
    json!({
        "eta": r.eta(),
        "emission_probability": 1.0 - r.p0(),
        "detection_probability": (1.0 - r.p0()) * r.eta(),
        "p0": r.p0(),
        "p0_direct": r.p0_direct(),
        "p_pure_at_zero": r.p_pure()[0],
        "normalization_sum": r.normalization_sum(),
        "residual_d1": r.scatter_profile().residual_d1,
        "scatter_count_unconditional": c.unconditional,
        "scatter_count_conditional": opt_json(c.conditional),
        "warnings": r.warnings(),
    })
}

fn singles_csv(a: &PhotonRecord<f64>, b: &PhotonRecord<f64>) -> Result<Vec<u8>, CliError> {
    let (pa, pb) = (single_click_density(a), single_click_density(b));
    let grid = a.grid();
    let mut out = Vec::new();
    writeln!(out, "t_us,p_S_short_per_us,p_S_long_per_us")?;
    for k in 0..grid.len() {
        writeln!(out, "{},{:e},{:e}", grid.t(k), pa[k], pb[k])?;
    }
    Ok(out)
}

pub fn simulate(cfg: &Config, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario = cfg.scenario()?;
    let windows = cfg.windows()?;
    let mut ev = scenario.evaluate(windows.as_deref().unwrap_or(&[]))?;
    if windows.is_none() {
        let d = &ev.result.densities;
        ev.result.curve = visibility_curve(&d.parallel, &d.perp, d.bin_width, &all_windows(d))?;
    }
    let meta = Metadata::new("simulate", cfg, scenario_flags(&scenario));
    let dir = output_dir(cfg)?;
    let mut files = Artifacts::default();
    files.csv(dir.join("singles.csv"), &meta, singles_csv(&ev.short, &ev.long)?)?;
    let mut buf = Vec::new();
    ev.result.write_densities_csv(&mut buf)?;
    files.csv(dir.join("coincidences.csv"), &meta, buf)?;
    let mut buf = Vec::new();
    ev.result.write_visibility_csv(&mut buf)?;
    files.csv(dir.join("visibility.csv"), &meta, buf)?;
    let (psi_stride, kernel_stride) = cfg.strides()?;
    for (name, r) in [("short", &ev.short), ("long", &ev.long)] {
        if psi_stride > 0 {
            let mut buf = Vec::new();
            r.write_psi_csv(&mut buf, psi_stride)?;
            files.csv(dir.join(format!("psi_{name}.csv")), &meta, buf)?;
        }
        if kernel_stride > 0 {
            let mut buf = Vec::new();
            r.write_kernel_csv(&mut buf, kernel_stride)?;
            files.csv(dir.join(format!("kernel_{name}.csv")), &meta, buf)?;
        }
    }
    let curve: Vec<Value> = ev
        .result
        .curve
        .iter()
        .map(|p| json!({ "T_us": p.window, "V": opt_json(p.visibility), "P_succ": p.p_succ }))
        .collect();
    files.json(
        dir.join("summary.json"),
        &json!({
            "metadata": meta.json(),
            "short": arm_json(&ev.short),
            "long": arm_json(&ev.long),
            "visibility": curve,
        }),
    );

    for (name, r) in [("short", &ev.short), ("long", &ev.long)] {
        let c = r.expected_scatter_count();
        writeln!(
            out,
            "{name}: eta {:.4}  P0 {:.6}  scatter count {:.4} (given emission {})",
            r.eta(),
            r.p0(),
            c.unconditional,
            c.conditional.map_or("n/a".into(), |x| format!("{x:.4}"))
        )?;
        for w in r.warnings() {
            writeln!(out, "warning ({name}): {w}")?;
        }
    }
    if windows.is_some() {
        writeln!(out, "{:>10} {:>10} {:>12}", "T_us", "V", "P_succ")?;
        for p in &ev.result.curve {
            let v = p.visibility.map_or("n/a".into(), |v| format!("{v:.5}"));
            writeln!(out, "{:>10} {:>10} {:>12.4e}", p.window, v, p.p_succ)?;
        }
    }
    files.commit(out)
}

pub fn sweep(cfg: &Config, jobs: usize, out: &mut dyn Write) -> Result<(), CliError> {
    let settings = cfg.sweep()?;
    let spec = cfg.sweep_spec(&settings)?;
    let rows = run_sweep(&spec, jobs)?;
    let optimum = optimum_from_rows(&spec, &rows, settings.refine)?;
    let curves = Frontier::from_rows(&rows);
    let v_min = settings.frontier_v_min;
    let mut dominance = Vec::new();
    for c in &curves {
        let mut dominated_by = Vec::new();
        let mut compared = 0;
        for o in curves.iter().filter(|o| o.omega != c.omega) {
            let d = c.compare(o, v_min);
            compared += d.compared;
            if d.violations > 0 {
                dominated_by.push(json!({
                    "omega_over_2pi_MHz": mhz_from_angular(o.omega),
                    "points": d.violations,
                    "worst_shortfall": d.worst_shortfall,
                }));
            }
        }
        dominance.push(json!({
            "omega_over_2pi_MHz": mhz_from_angular(c.omega),
            "points_compared": compared,
            "exceeded_by": dominated_by,
        }));
    }
    let optimum_json = match optimum {
        Optimum::Found(r) => json!({
            "feasible": true,
            "omega_over_2pi_MHz": mhz_from_angular(r.omega),
            "T_us": r.window,
            "V": opt_json(r.visibility),
            "P_succ": r.p_succ,
        }),
        Optimum::Infeasible => json!({ "feasible": false }),
    };
    let mut flags = scenario_flags(&spec.scenario);
    flags.push("frontier_interpolation=linear_in_P_succ".into());
    let meta = Metadata::new("sweep", cfg, flags);
    let dir = output_dir(cfg)?;
    let mut files = Artifacts::default();
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf)?;
    files.csv(dir.join("sweep.csv"), &meta, buf)?;
    files.json(
        dir.join("sweep_summary.json"),
        &json!({
            "metadata": meta.json(),
            "optimum": optimum_json,
            "frontier_v_min": v_min,
            "dominance": dominance,
        }),
    );
    writeln!(out, "optimum: {optimum}")?;
    files.commit(out)
}

pub fn analyze(
    cfg: &Config,
    input: &Path,
    dark_hz: Option<f64>,
    shards: usize,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let gates = cfg.gates()?;
    let stream = parse_timetags(input)?;
    let raw = build_histograms_sharded(&stream, &gates, shards)?;
    let h = match dark_hz {
        Some(r) => raw.subtract_dark(r)?,
        None => raw,
    };
    let windows = match cfg.windows()? {
        Some(w) => w,
        None => {
            let n = (gates.sync.len() / gates.bin).round() as usize;
            (0..=n).map(|i| i as f64 * gates.bin).collect()
        }
    };
    let rows = experimental_visibility(&h, &windows)?;
    let flags = vec![
        format!("input={}", input.display()),
        "singles=both_detectors".into(),
        "perp_branches=plus_and_minus_t_wait".into(),
        match dark_hz {
            Some(r) => format!("dark_subtraction={r} Hz"),
            None => "dark_subtraction=none".into(),
        },
    ];
    let meta = Metadata::new("analyze", cfg, flags);
    let dir = output_dir(cfg)?;
    let mut files = Artifacts::default();
    let mut buf = Vec::new();
    h.write_coincidence_csv(&mut buf)?;
    files.csv(dir.join("coincidence_histogram.csv"), &meta, buf)?;
    let mut buf = Vec::new();
    h.write_singles_csv(&mut buf)?;
    files.csv(dir.join("singles_histogram.csv"), &meta, buf)?;
    let mut buf = Vec::new();
    write_experimental_visibility_csv(&rows, &mut buf)?;
    files.csv(dir.join("experimental_visibility.csv"), &meta, buf)?;
    let d = &h.diagnostics;
    let vis: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "T_us": r.window, "V": opt_json(r.visibility), "sigma_V": opt_json(r.sigma) }))
        .collect();
    files.json(
        dir.join("analysis_summary.json"),
        &json!({
            "metadata": meta.json(),
            "trials": h.trials,
            "triggers": d.triggers,
            "detector_events": d.detector_events,
            "before_first_trigger": d.before_first_trigger,
            "outside_gates": d.outside_gates,
            "coincidences_parallel": h.rho_c_parallel.total_counts(),
            "coincidences_perp": h.rho_c_perp.total_counts(),
            "visibility": vis,
        }),
    );
    writeln!(
        out,
        "{} trials, {} detector events ({} outside gates), {} parallel / {} orthogonal coincidences",
        h.trials,
        d.detector_events,
        d.outside_gates,
        h.rho_c_parallel.total_counts(),
        h.rho_c_perp.total_counts()
    )?;
    files.commit(out)
}

/// Fidelity and rate; V and C⊥ come from the model when not given.
pub fn estimate(cfg: &Config, write_file: bool, out: &mut dyn Write) -> Result<(), CliError> {
    let link = cfg.link()?;
    let r_gen = link.r_gen.ok_or_else(|| CliError::Config("missing attempt rate (--rgen or link.r_gen)".into()))?;
    let mut flags = Vec::new();
    let (v, c_perp) = match (link.v, link.c_perp) {
        (Some(v), Some(c)) => (v, c),
        (v, c) => {
            let ev = cfg.scenario()?.evaluate(&[link.window])?;
            let p = ev.result.curve[0];
            let model_v = p.visibility.ok_or_else(|| {
                CliError::Core(ionhom::Error::Numeric(format!("no orthogonal coincidences within T = {} us", p.window)))
            })?;
            flags.push(format!("model_window={} us", link.window));
            (v.unwrap_or(model_v), c.unwrap_or(p.p_succ))
        }
    };
    let spec = LinkSpec {
        r_gen,
        c_perp,
        v,
        fiber_km: link.fiber_km,
        atten_db_per_km: link.atten_db_per_km,
        attenuated_arms: link.attenuated_arms,
        dark_rate: link.dark_rate,
        proportionality: link.proportionality,
    };
    let r = link_report(&spec)?;
    flags.push("fidelity=(1+V)/2".into());
    let meta = Metadata::new("estimate", cfg, flags);
    let report = json!({
        "metadata": meta.json(),
        "inputs": {
            "r_gen_per_s": spec.r_gen,
            "c_perp": spec.c_perp,
            "v": spec.v,
            "fiber_km": spec.fiber_km,
            "atten_db_per_km": spec.atten_db_per_km,
            "attenuated_arms": spec.attenuated_arms,
            "dark_rate_per_s": spec.dark_rate,
            "proportionality": spec.proportionality,
        },
        "fidelity": r.fidelity,
        "arm_transmission": r.arm_transmission,
        "c_perp_attenuated": r.c_perp_attenuated,
        "swap_rate_per_s": r.swap_rate,
        "snr": opt_json(r.snr),
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("json values serialize"))?;
    if write_file {
        let mut files = Artifacts::default();
        files.json(output_dir(cfg)?.join("link_report.json"), &report);
        files.commit(out)?;
    }
    Ok(())
}

pub fn sample(cfg: &Config, output: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let scenario = cfg.scenario()?;
    let settings = cfg.sample()?;
    let timing = cfg.timing()?;
    let (short, long) = scenario.records()?;
    let stream = sample_synthetic_with(
        &short,
        &long,
        &scenario.imperfections,
        &timing,
        settings.trials,
        settings.seed,
        settings.stride,
    )?;
    let mut flags = scenario_flags(&scenario);
    flags.extend([
        "sync_pairs=two_click_map".into(),
        "same_detector_pairs=independent_marginals".into(),
        "background=not_sampled".into(),
        format!("period={} us", timing.period),
    ]);
    let meta = Metadata::new("sample", cfg, flags);
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => output_dir(cfg)?.join("timetags.csv"),
    };
    let mut buf = Vec::new();
    stream.write(&mut buf)?;
    let mut files = Artifacts::default();
    files.csv(path, &meta, buf)?;
    writeln!(
        out,
        "{} trials, {} events, detection probabilities per trial {:.5} / {:.5}",
        settings.trials,
        stream.len(),
        (1.0 - short.p0()) * short.eta(),
        (1.0 - long.p0()) * long.eta()
    )?;
    files.commit(out)
}
