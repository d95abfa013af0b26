//! `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment, unknown keys are errors.
//! Powers and gains are written in dBm/dB, durations in µs or ms as the
//! key name says; they are converted to engine units once, when the
//! document is parsed. Optional settings accept `auto`. An explicit layout
//! is given by repeating `pair = sx, sy, dx, dy`, one line per pair.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use rpca::contention::{ContentionParams, DEFAULT_MAX_SLOTS};
use rpca::engine::{PhaseSchedule, SimParams, SweepAxis, DEFAULT_MAX_CONTENTIONS};
use rpca::geometry::{MobilityParams, NetworkGeometry, Pair, Position};
use rpca::optimizer::{SolverParams, TimingParams};
use rpca::strategies::StrategyKind;
use rpca::channel::ChannelParams;
use rpca::Nanos;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: `{key}`: {message}")]
    Key { line: usize, key: String, message: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Engine(String),
}

fn key_error(line: usize, key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Key {
        line,
        key: key.to_string(),
        message: message.into(),
    }
}

/// Everything needed for a sweep, in the units the document uses.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub k_pairs: usize,
    pub p0: f64,
    pub slot_idle_us: f64,
    pub t_rts_us: f64,
    pub t_cts_us: f64,
    pub max_slots: u64,
    pub t_data_ms: f64,

    pub p_source_dbm: f64,
    pub p_rsu_dbm: f64,
    pub noise_dbm: f64,
    pub alpha_v2v: f64,
    pub alpha_v2r: f64,
    pub ref_gain_db: f64,

    pub mobility: bool,
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub speed_min_kmh: f64,
    pub speed_max_kmh: f64,
    pub road_x_m: Option<f64>,
    pub road_y_m: Option<f64>,
    pub rsu_x_m: Option<f64>,
    pub rsu_y_m: Option<f64>,
    /// `[sx, sy, dx, dy]` per pair; empty means random placement.
    pub layout: Vec<[f64; 4]>,

    pub large_phases: usize,
    pub small_phases: usize,

    pub epsilon: f64,
    pub step: Option<f64>,
    pub max_iters: usize,
    pub quad_points: usize,
    pub mc_samples: usize,

    pub bandwidth_hz: f64,
    pub min_distance_m: f64,
    pub lut_step_m: f64,
    pub max_contentions: u64,
    pub mu_join_prob: Option<f64>,

    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub strategies: Vec<StrategyKind>,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            k_pairs: 8,
            p0: 0.3,
            slot_idle_us: 50.0,
            t_rts_us: 100.0,
            t_cts_us: 100.0,
            max_slots: DEFAULT_MAX_SLOTS,
            t_data_ms: 15.0,
            p_source_dbm: 24.0,
            p_rsu_dbm: 24.0,
            noise_dbm: -90.0,
            alpha_v2v: 3.0,
            alpha_v2r: 2.5,
            ref_gain_db: -30.0,
            mobility: true,
            area_width_m: 1000.0,
            area_height_m: 1000.0,
            speed_min_kmh: 20.0,
            speed_max_kmh: 80.0,
            road_x_m: None,
            road_y_m: None,
            rsu_x_m: None,
            rsu_y_m: None,
            layout: Vec::new(),
            large_phases: 100,
            small_phases: 300,
            epsilon: 1e-4,
            step: None,
            max_iters: 10_000,
            quad_points: 2_000,
            mc_samples: 1_000_000,
            bandwidth_hz: 1.0,
            min_distance_m: 1.0,
            lut_step_m: 1.0,
            max_contentions: DEFAULT_MAX_CONTENTIONS,
            mu_join_prob: None,
            sweep_axis: SweepAxis::PSource,
            sweep_values: vec![24.0],
            strategies: StrategyKind::ALL.to_vec(),
            seeds: (1..=10).collect(),
            output: PathBuf::from("out"),
        }
    }
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|_| key_error(line, key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(key_error(line, key, "must be finite"));
    }
    Ok(x)
}

fn parse_int<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ConfigError> {
    v.replace('_', "")
        .parse()
        .map_err(|_| key_error(line, key, format!("`{v}` is not a nonnegative integer")))
}

fn parse_auto(line: usize, key: &str, v: &str) -> Result<Option<f64>, ConfigError> {
    if v.eq_ignore_ascii_case("auto") {
        Ok(None)
    } else {
        parse_f64(line, key, v).map(Some)
    }
}

fn parse_bool(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(key_error(line, key, format!("`{v}` is not on/off"))),
    }
}

fn split_list(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_axis(line: usize, key: &str, v: &str) -> Result<SweepAxis, ConfigError> {
    [SweepAxis::PSource, SweepAxis::TData, SweepAxis::P0]
        .into_iter()
        .find(|a| a.name() == v)
        .ok_or_else(|| key_error(line, key, format!("unknown axis `{v}` (p_source_dbm, t_data_ms or p0)")))
}

/// `1,2,5` or the half-open range `1..11`.
pub fn parse_seeds(v: &str) -> Result<Vec<u64>, String> {
    let mut out = Vec::new();
    for part in split_list(v) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| format!("bad seed range `{part}`"))?;
            let b: u64 = b.trim().parse().map_err(|_| format!("bad seed range `{part}`"))?;
            if b <= a {
                return Err(format!("empty seed range `{part}`"));
            }
            out.extend(a..b);
        } else {
            out.push(part.parse().map_err(|_| format!("bad seed `{part}`"))?);
        }
    }
    if out.is_empty() {
        return Err("no seeds given".into());
    }
    Ok(out)
}

pub fn parse_strategies(v: &str) -> Result<Vec<StrategyKind>, String> {
    let out: Vec<StrategyKind> = if v.trim().eq_ignore_ascii_case("all") {
        StrategyKind::ALL.to_vec()
    } else {
        split_list(v)
            .map(|s| s.parse::<StrategyKind>().map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?
    };
    if out.is_empty() {
        return Err("no strategies given".into());
    }
    Ok(out)
}

impl ExperimentConfig {
    fn set(&mut self, line: usize, key: &str, v: &str) -> Result<(), ConfigError> {
        let f = |v: &str| parse_f64(line, key, v);
        match key {
            "k_pairs" => self.k_pairs = parse_int(line, key, v)?,
            "p0" => self.p0 = f(v)?,
            "slot_idle_us" => self.slot_idle_us = f(v)?,
            "t_rts_us" => self.t_rts_us = f(v)?,
            "t_cts_us" => self.t_cts_us = f(v)?,
            "max_slots" => self.max_slots = parse_int(line, key, v)?,
            "t_data_ms" => self.t_data_ms = f(v)?,
            "p_source_dbm" => self.p_source_dbm = f(v)?,
            "p_rsu_dbm" => self.p_rsu_dbm = f(v)?,
            "noise_dbm" => self.noise_dbm = f(v)?,
            "alpha_v2v" => self.alpha_v2v = f(v)?,
            "alpha_v2r" => self.alpha_v2r = f(v)?,
            "ref_gain_db" => self.ref_gain_db = f(v)?,
            "mobility" => self.mobility = parse_bool(line, key, v)?,
            "area_width_m" => self.area_width_m = f(v)?,
            "area_height_m" => self.area_height_m = f(v)?,
            "speed_min_kmh" => self.speed_min_kmh = f(v)?,
            "speed_max_kmh" => self.speed_max_kmh = f(v)?,
            "road_x_m" => self.road_x_m = parse_auto(line, key, v)?,
            "road_y_m" => self.road_y_m = parse_auto(line, key, v)?,
            "rsu_x_m" => self.rsu_x_m = parse_auto(line, key, v)?,
            "rsu_y_m" => self.rsu_y_m = parse_auto(line, key, v)?,
            "pair" => {
                let xs = split_list(v).map(f).collect::<Result<Vec<_>, _>>()?;
                let coords: [f64; 4] = xs
                    .try_into()
                    .map_err(|_| key_error(line, key, "expected `sx, sy, dx, dy`"))?;
                self.layout.push(coords);
            }
            "large_phases" => self.large_phases = parse_int(line, key, v)?,
            "small_phases" => self.small_phases = parse_int(line, key, v)?,
            "epsilon" => self.epsilon = f(v)?,
            "step" => self.step = parse_auto(line, key, v)?,
            "max_iters" => self.max_iters = parse_int(line, key, v)?,
            "quad_points" => self.quad_points = parse_int(line, key, v)?,
            "mc_samples" => self.mc_samples = parse_int(line, key, v)?,
            "bandwidth_hz" => self.bandwidth_hz = f(v)?,
            "min_distance_m" => self.min_distance_m = f(v)?,
            "lut_step_m" => self.lut_step_m = f(v)?,
            "max_contentions" => self.max_contentions = parse_int(line, key, v)?,
            "mu_join_prob" => self.mu_join_prob = parse_auto(line, key, v)?,
            "sweep_axis" => self.sweep_axis = parse_axis(line, key, v)?,
            "sweep_values" => {
                self.sweep_values = split_list(v).map(f).collect::<Result<_, _>>()?;
            }
            "strategies" => self.strategies = parse_strategies(v).map_err(|m| key_error(line, key, m))?,
            "seeds" => self.seeds = parse_seeds(v).map_err(|m| key_error(line, key, m))?,
            "output" => self.output = PathBuf::from(v),
            _ => return Err(key_error(line, key, "unknown key")),
        }
        Ok(())
    }

    /// Range checks on the document values; `lines` maps keys to the line
    /// that set them (0 for defaults).
    fn check(&self, lines: &HashMap<String, usize>) -> Result<(), ConfigError> {
        let at = |key: &str| lines.get(key).copied().unwrap_or(0);
        let require = |ok: bool, key: &str, message: &str| {
            if ok {
                Ok(())
            } else {
                Err(key_error(at(key), key, message))
            }
        };
        require(self.k_pairs >= 1, "k_pairs", "must be at least 1")?;
        require(self.p0 > 0.0 && self.p0 <= 1.0, "p0", "must lie in (0, 1]")?;
        require(self.slot_idle_us > 0.0, "slot_idle_us", "must be positive")?;
        require(self.t_rts_us > 0.0, "t_rts_us", "must be positive")?;
        require(self.t_cts_us > 0.0, "t_cts_us", "must be positive")?;
        require(self.max_slots >= 1, "max_slots", "must be positive")?;
        require(
            self.t_data_ms * 1000.0 > self.t_rts_us + self.t_cts_us,
            "t_data_ms",
            "must exceed the probe duration t_rts_us + t_cts_us",
        )?;
        require(self.alpha_v2v > 0.0, "alpha_v2v", "must be positive")?;
        require(self.alpha_v2r > 0.0, "alpha_v2r", "must be positive")?;
        require(self.area_width_m >= 0.0, "area_width_m", "must be nonnegative")?;
        require(self.area_height_m >= 0.0, "area_height_m", "must be nonnegative")?;
        require(self.speed_min_kmh >= 0.0, "speed_min_kmh", "must be nonnegative")?;
        require(
            self.speed_max_kmh >= self.speed_min_kmh,
            "speed_max_kmh",
            "must be at least speed_min_kmh",
        )?;
        require(
            self.rsu_x_m.is_some() == self.rsu_y_m.is_some(),
            "rsu_x_m",
            "rsu_x_m and rsu_y_m must be given together",
        )?;
        require(
            self.layout.is_empty() || self.layout.len() == self.k_pairs,
            "pair",
            "an explicit layout needs exactly k_pairs `pair` lines",
        )?;
        require(self.large_phases >= 1, "large_phases", "must be at least 1")?;
        require(self.small_phases >= 1, "small_phases", "must be at least 1")?;
        require(self.epsilon > 0.0 && self.epsilon < 2.0, "epsilon", "must lie in (0, 2)")?;
        require(self.step.is_none_or(|a| a > 0.0), "step", "must be positive")?;
        require(self.max_iters >= 1, "max_iters", "must be positive")?;
        require(self.quad_points >= 1, "quad_points", "must be positive")?;
        require(self.mc_samples >= 1, "mc_samples", "must be positive")?;
        require(self.bandwidth_hz > 0.0, "bandwidth_hz", "must be positive")?;
        require(self.min_distance_m > 0.0, "min_distance_m", "must be positive")?;
        require(self.lut_step_m > 0.0, "lut_step_m", "must be positive")?;
        require(self.max_contentions >= 1, "max_contentions", "must be positive")?;
        require(
            self.mu_join_prob.is_none_or(|p| (0.0..=1.0).contains(&p)),
            "mu_join_prob",
            "must lie in [0, 1]",
        )?;
        require(!self.sweep_values.is_empty(), "sweep_values", "needs at least one value")?;
        for &v in &self.sweep_values {
            let ok = match self.sweep_axis {
                SweepAxis::PSource => true,
                SweepAxis::TData => v * 1000.0 > self.t_rts_us + self.t_cts_us,
                SweepAxis::P0 => v > 0.0 && v <= 1.0,
            };
            require(ok, "sweep_values", "value outside the range of the sweep axis")?;
        }
        self.sim_params().map(|_| ())
    }

    /// Engine parameters at the document's base point (before the sweep).
    pub fn sim_params(&self) -> Result<SimParams, ConfigError> {
        let engine = |e: rpca::Error| ConfigError::Engine(e.to_string());
        let us = |name: &'static str, v: f64| Nanos::try_from_micros_f64(name, v).map_err(engine);
        let mut contention = ContentionParams::new(
            self.k_pairs,
            self.p0,
            us("slot_idle_us", self.slot_idle_us)?,
            us("t_rts_us", self.t_rts_us)?,
            us("t_cts_us", self.t_cts_us)?,
        )
        .map_err(engine)?;
        contention.max_slots = self.max_slots;
        let timing = TimingParams::new(us("t_data_ms", self.t_data_ms * 1000.0)?, contention.handshake()).map_err(engine)?;
        let rsu = match (self.rsu_x_m, self.rsu_y_m) {
            (Some(x), Some(y)) => Some(Position::new(x, y)),
            _ => None,
        };
        let area = MobilityParams {
            width_m: self.area_width_m,
            height_m: self.area_height_m,
            speed_min_kmh: self.speed_min_kmh,
            speed_max_kmh: self.speed_max_kmh,
            road_y: self.road_y_m,
            road_x: self.road_x_m,
            rsu,
        };
        let layout = if self.layout.is_empty() {
            None
        } else {
            let pairs = self
                .layout
                .iter()
                .map(|c| Pair {
                    source: Position::new(c[0], c[1]),
                    destination: Position::new(c[2], c[3]),
                })
                .collect();
            Some(NetworkGeometry::new(pairs, area.rsu_position()).map_err(engine)?)
        };
        let params = SimParams {
            channel: ChannelParams::from_db(
                self.p_source_dbm,
                self.p_rsu_dbm,
                self.noise_dbm,
                self.alpha_v2v,
                self.alpha_v2r,
                self.ref_gain_db,
            )
            .map_err(engine)?,
            contention,
            timing,
            schedule: PhaseSchedule {
                m_per_large: self.small_phases,
                n_large: self.large_phases,
            },
            mobility: self.mobility.then(|| area.clone()),
            area,
            layout,
            solver: SolverParams {
                epsilon: self.epsilon,
                step: self.step,
                max_iters: self.max_iters,
                quad_points: self.quad_points,
                mc_samples: self.mc_samples,
            },
            bandwidth_hz: self.bandwidth_hz,
            min_distance_m: self.min_distance_m,
            lut_step_m: self.lut_step_m,
            max_contentions: self.max_contentions,
            mu_join_prob: self.mu_join_prob,
            keep_records: false,
        };
        params.validate().map_err(engine)?;
        Ok(params)
    }

    pub fn to_text(&self) -> String {
        let auto = |v: Option<f64>| v.map_or_else(|| "auto".to_string(), |x| x.to_string());
        let list = |xs: &[f64]| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("k_pairs", self.k_pairs.to_string());
        kv("p0", self.p0.to_string());
        kv("slot_idle_us", self.slot_idle_us.to_string());
        kv("t_rts_us", self.t_rts_us.to_string());
        kv("t_cts_us", self.t_cts_us.to_string());
        kv("max_slots", self.max_slots.to_string());
        kv("t_data_ms", self.t_data_ms.to_string());
        kv("p_source_dbm", self.p_source_dbm.to_string());
        kv("p_rsu_dbm", self.p_rsu_dbm.to_string());
        kv("noise_dbm", self.noise_dbm.to_string());
        kv("alpha_v2v", self.alpha_v2v.to_string());
        kv("alpha_v2r", self.alpha_v2r.to_string());
        kv("ref_gain_db", self.ref_gain_db.to_string());
        kv("mobility", if self.mobility { "on" } else { "off" }.to_string());
        kv("area_width_m", self.area_width_m.to_string());
        kv("area_height_m", self.area_height_m.to_string());
        kv("speed_min_kmh", self.speed_min_kmh.to_string());
        kv("speed_max_kmh", self.speed_max_kmh.to_string());
        kv("road_x_m", auto(self.road_x_m));
        kv("road_y_m", auto(self.road_y_m));
        kv("rsu_x_m", auto(self.rsu_x_m));
        kv("rsu_y_m", auto(self.rsu_y_m));
        for p in &self.layout {
            kv("pair", list(p));
        }
        kv("large_phases", self.large_phases.to_string());
        kv("small_phases", self.small_phases.to_string());
        kv("epsilon", self.epsilon.to_string());
        kv("step", auto(self.step));
        kv("max_iters", self.max_iters.to_string());
        kv("quad_points", self.quad_points.to_string());
        kv("mc_samples", self.mc_samples.to_string());
        kv("bandwidth_hz", self.bandwidth_hz.to_string());
        kv("min_distance_m", self.min_distance_m.to_string());
        kv("lut_step_m", self.lut_step_m.to_string());
        kv("max_contentions", self.max_contentions.to_string());
        kv("mu_join_prob", auto(self.mu_join_prob));
        kv("sweep_axis", self.sweep_axis.name().to_string());
        kv("sweep_values", list(&self.sweep_values));
        kv(
            "strategies",
            self.strategies.iter().map(|k| k.name()).collect::<Vec<_>>().join(", "),
        );
        kv(
            "seeds",
            self.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(", "),
        );
        kv("output", self.output.display().to_string());
        s
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = ExperimentConfig::default();
    let mut lines: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: n,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key != "pair" {
            if let Some(prev) = lines.insert(key.to_string(), n) {
                return Err(key_error(n, key, format!("already set on line {prev}")));
            }
        } else {
            lines.entry(key.to_string()).or_insert(n);
        }
        cfg.set(n, key, value)?;
    }
    match (lines.contains_key("sweep_axis"), lines.contains_key("sweep_values")) {
        (true, false) => return Err(key_error(lines["sweep_axis"], "sweep_values", "sweep_axis given without values")),
        (false, true) => return Err(key_error(lines["sweep_values"], "sweep_axis", "sweep_values given without an axis")),
        _ => {}
    }
    cfg.check(&lines)?;
    Ok(cfg)
}
