//! TOML scenario and dielectric-model files.
//!
//! Scenario schema (all keys optional unless noted):
//!
//! ```toml
//! duration_s = 60.0
//! sample_period_s = 0.110
//! baseline_frequency_hz = 700e6
//! noise_sigma_hz = 200.0
//! seed = 0
//! mixing_time_constant_s = 3.0
//! liquid_ripple_ratio = 0.15
//! allow_out_of_band = false
//! calibration_path = "cal.csv"   # otherwise derived from [water]/[saline]/[resonator]
//!
//! [basin]
//! volume_ml = 4000.0
//! concentration_mol_per_l = 0.0
//!
//! [sweep]
//! depth_db = 20.0
//! q_factor = 50.0
//! half_span_hz = 5e6
//! n_points = 1001
//!
//! [[events]]
//! kind = "solid"                 # required
//! time_s = 10.0                  # required
//! mass_g = 50.0
//! ripple_frequency_hz = 2.2
//! ripple_amplitude_hz = 10e3
//! decay_time_s = 2.0
//! offset_hz = 5e3
//!
//! [[events]]
//! kind = "liquid"
//! start_time_s = 30.0            # required
//! concentration_mol_per_l = 0.125  # required
//! total_volume_ml = 220.0        # required
//! rate_ml_per_s = 17.0
//! ```
//!
//! The dielectric tables are shared with model files:
//!
//! ```toml
//! [water]
//! eps_static = 78.36
//! eps_inf = 5.2
//! tau_s = 8.27e-12
//!
//! [saline]
//! model = "stogryn1971"          # or "table"
//! table_path = "nacl.csv"        # required for "table"
//!
//! [resonator]
//! baseline_frequency_hz = 700e6
//! fill_factor = 0.1
//! temperature_c = 25.0
//! ```

use std::path::{Path, PathBuf};

use toml::{Table, Value};

use crate::dielectric::{SalinityModel, SalinityTable, WaterDebyeParams};
use crate::error::{Error, Result};
use crate::response::{
    default_concentration_grid, BasinState, CalibrationCurve, Injection, ResonatorModel,
};
use crate::simulate::{ScenarioConfig, ScenarioEvent, SolidEvent, SweepShape};

const SCENARIO_KEYS: &[&str] = &[
    "duration_s",
    "sample_period_s",
    "baseline_frequency_hz",
    "noise_sigma_hz",
    "seed",
    "mixing_time_constant_s",
    "liquid_ripple_ratio",
    "allow_out_of_band",
    "calibration_path",
    "basin",
    "sweep",
    "events",
    "water",
    "saline",
    "resonator",
];
const MODEL_KEYS: &[&str] = &["water", "saline", "resonator"];
const BASIN_KEYS: &[&str] = &["volume_ml", "concentration_mol_per_l"];
const SWEEP_KEYS: &[&str] = &["depth_db", "q_factor", "half_span_hz", "n_points"];
const SOLID_KEYS: &[&str] = &[
    "kind",
    "time_s",
    "mass_g",
    "ripple_frequency_hz",
    "ripple_amplitude_hz",
    "decay_time_s",
    "offset_hz",
];
const LIQUID_KEYS: &[&str] = &[
    "kind",
    "start_time_s",
    "concentration_mol_per_l",
    "total_volume_ml",
    "rate_ml_per_s",
];
const WATER_KEYS: &[&str] = &["eps_static", "eps_inf", "tau_s"];
const SALINE_KEYS: &[&str] = &["model", "table_path"];
const RESONATOR_KEYS: &[&str] = &["baseline_frequency_hz", "fill_factor", "temperature_c"];

/// Walks a table, recording every problem as `path.key: message`.
struct Reader<'a> {
    problems: &'a mut Vec<String>,
    prefix: String,
    table: &'a Table,
}

impl<'a> Reader<'a> {
    fn new(
        table: &'a Table,
        prefix: &str,
        allowed: &[&str],
        problems: &'a mut Vec<String>,
    ) -> Self {
        for key in table.keys() {
            if !allowed.contains(&key.as_str()) {
                problems.push(format!("{prefix}{key}: unknown key"));
            }
        }
        Self {
            problems,
            prefix: prefix.to_string(),
            table,
        }
    }

    fn complain(&mut self, key: &str, msg: &str) {
        self.problems.push(format!("{}{key}: {msg}", self.prefix));
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        match self.table.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.complain(key, "expected a number");
                None
            }
        }
    }

    fn f64_or(&mut self, key: &str, default: f64) -> f64 {
        self.f64(key).unwrap_or(default)
    }

    fn required_f64(&mut self, key: &str) -> f64 {
        if !self.table.contains_key(key) {
            self.complain(key, "required");
        }
        self.f64(key).unwrap_or(f64::NAN)
    }

    fn u64(&mut self, key: &str) -> Option<u64> {
        match self.table.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as u64),
            _ => {
                self.complain(key, "expected a non-negative integer");
                None
            }
        }
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        match self.table.get(key)? {
            Value::Boolean(b) => Some(*b),
            _ => {
                self.complain(key, "expected true or false");
                None
            }
        }
    }

    fn str(&mut self, key: &str) -> Option<&'a str> {
        match self.table.get(key)? {
            Value::String(s) => Some(s.as_str()),
            _ => {
                self.complain(key, "expected a string");
                None
            }
        }
    }

    fn subtable(&mut self, key: &str) -> Option<&'a Table> {
        match self.table.get(key)? {
            Value::Table(t) => Some(t),
            _ => {
                self.complain(key, "expected a table");
                None
            }
        }
    }
}

fn parse_toml(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.parse::<Table>()
        .map_err(|e| Error::parse(path, e.to_string()))
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn finish<T>(path: &Path, value: T, problems: Vec<String>) -> Result<T> {
    if problems.is_empty() {
        Ok(value)
    } else {
        Err(Error::Config(format!(
            "{}: {}",
            path.display(),
            problems.join("; ")
        )))
    }
}

/// Reads the `[water]`, `[saline]` and `[resonator]` tables of `root`.
fn read_model(
    root: &mut Reader,
    base: &Path,
    problems: &mut Vec<String>,
) -> Result<ResonatorModel> {
    let mut model = ResonatorModel::default();
    if let Some(t) = root.subtable("water") {
        let mut r = Reader::new(t, "water.", WATER_KEYS, problems);
        let d = WaterDebyeParams::DEFAULT;
        model.dielectric.water = WaterDebyeParams {
            eps_static: r.f64_or("eps_static", d.eps_static),
            eps_inf: r.f64_or("eps_inf", d.eps_inf),
            tau: r.f64_or("tau_s", d.tau),
        };
        if let Err(e) = model.dielectric.water.validate() {
            problems.push(format!("water: {e}"));
        }
    }
    if let Some(t) = root.subtable("saline") {
        let mut r = Reader::new(t, "saline.", SALINE_KEYS, problems);
        let table_path = r.str("table_path");
        match r.str("model").unwrap_or("stogryn1971") {
            "stogryn1971" => {
                if table_path.is_some() {
                    r.complain("table_path", "only used with model = \"table\"");
                }
            }
            "table" => match table_path {
                Some(p) => {
                    model.dielectric.salinity =
                        SalinityModel::Table(SalinityTable::from_csv(&resolve(base, p))?)
                }
                None => r.complain("table_path", "required when model = \"table\""),
            },
            other => r.complain(
                "model",
                &format!("expected stogryn1971 or table, got `{other}`"),
            ),
        }
    }
    if let Some(t) = root.subtable("resonator") {
        let mut r = Reader::new(t, "resonator.", RESONATOR_KEYS, problems);
        model.baseline_frequency = r.f64_or("baseline_frequency_hz", model.baseline_frequency);
        model.fill_factor = r.f64_or("fill_factor", model.fill_factor);
        model.temperature = r.f64_or("temperature_c", model.temperature);
    }
    Ok(model)
}

/// Loads a dielectric/resonator model file.
pub fn load_model(path: &Path) -> Result<ResonatorModel> {
    let table = parse_toml(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut problems = Vec::new();
    let mut extra = Vec::new();
    let model = {
        let mut root = Reader::new(&table, "", MODEL_KEYS, &mut extra);
        read_model(&mut root, base, &mut problems)?
    };
    extra.extend(problems);
    finish(path, model, extra)
}

/// Default model when no file is given.
pub fn model_or_default(path: Option<&Path>) -> Result<ResonatorModel> {
    path.map_or_else(|| Ok(ResonatorModel::default()), load_model)
}

fn read_event(t: &Table, k: usize, problems: &mut Vec<String>) -> Option<ScenarioEvent> {
    let prefix = format!("events[{k}].");
    let kind = match t.get("kind") {
        Some(Value::String(s)) => s.as_str(),
        Some(_) => {
            problems.push(format!("{prefix}kind: expected \"solid\" or \"liquid\""));
            return None;
        }
        None => {
            problems.push(format!("{prefix}kind: required"));
            return None;
        }
    };
    match kind {
        "solid" => {
            let mut r = Reader::new(t, &prefix, SOLID_KEYS, problems);
            let d = SolidEvent::default();
            Some(ScenarioEvent::Solid(SolidEvent {
                time: r.required_f64("time_s"),
                mass: r.f64_or("mass_g", d.mass),
                ripple_frequency: r.f64_or("ripple_frequency_hz", d.ripple_frequency),
                ripple_amplitude: r.f64_or("ripple_amplitude_hz", d.ripple_amplitude),
                decay_time: r.f64_or("decay_time_s", d.decay_time),
                offset: r.f64_or("offset_hz", d.offset),
            }))
        }
        "liquid" => {
            let mut r = Reader::new(t, &prefix, LIQUID_KEYS, problems);
            Some(ScenarioEvent::Liquid(Injection {
                start_time: r.required_f64("start_time_s"),
                concentration: r.required_f64("concentration_mol_per_l"),
                total_volume: r.required_f64("total_volume_ml"),
                rate: r.f64_or("rate_ml_per_s", crate::response::DEFAULT_INJECTION_RATE),
            }))
        }
        other => {
            problems.push(format!(
                "{prefix}kind: expected \"solid\" or \"liquid\", got `{other}`"
            ));
            None
        }
    }
}

/// A parsed scenario and where its calibration came from.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub calibration_path: Option<PathBuf>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let table = parse_toml(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_scenario(&table, base).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        e => e,
    })
}

/// Builds a scenario from parsed TOML; relative paths resolve against `base`.
pub fn parse_scenario(table: &Table, base: &Path) -> Result<Scenario> {
    let mut problems = Vec::new();
    let mut nested = Vec::new();
    let mut cfg = ScenarioConfig::default();
    let mut r = Reader::new(table, "", SCENARIO_KEYS, &mut problems);

    cfg.duration = r.f64_or("duration_s", cfg.duration);
    cfg.sample_period = r.f64_or("sample_period_s", cfg.sample_period);
    cfg.baseline_frequency = r.f64_or("baseline_frequency_hz", cfg.baseline_frequency);
    cfg.noise_sigma = r.f64_or("noise_sigma_hz", cfg.noise_sigma);
    cfg.seed = r.u64("seed").unwrap_or(cfg.seed);
    cfg.mixing_time_constant = r.f64_or("mixing_time_constant_s", cfg.mixing_time_constant);
    cfg.liquid_ripple_ratio = r.f64_or("liquid_ripple_ratio", cfg.liquid_ripple_ratio);
    cfg.allow_out_of_band = r.bool("allow_out_of_band").unwrap_or(false);
    let calibration_path = r.str("calibration_path").map(|p| resolve(base, p));

    if let Some(t) = r.subtable("basin") {
        let mut b = Reader::new(t, "basin.", BASIN_KEYS, &mut nested);
        let d = BasinState::default();
        cfg.basin = BasinState {
            volume: b.f64_or("volume_ml", d.volume),
            concentration: b.f64_or("concentration_mol_per_l", d.concentration),
        };
    }
    if let Some(t) = r.subtable("sweep") {
        let mut s = Reader::new(t, "sweep.", SWEEP_KEYS, &mut nested);
        let d = SweepShape::default();
        cfg.sweep = SweepShape {
            depth_db: s.f64_or("depth_db", d.depth_db),
            q_factor: s.f64_or("q_factor", d.q_factor),
            half_span: s.f64_or("half_span_hz", d.half_span),
            n_points: s.u64("n_points").map_or(d.n_points, |n| n as usize),
        };
    }
    match table.get("events") {
        None => {}
        Some(Value::Array(items)) => {
            for (k, item) in items.iter().enumerate() {
                match item {
                    Value::Table(t) => cfg.events.extend(read_event(t, k, &mut nested)),
                    _ => nested.push(format!("events[{k}]: expected a table")),
                }
            }
        }
        Some(_) => r.complain("events", "expected an array of tables"),
    }

    let has_model = MODEL_KEYS.iter().any(|k| table.contains_key(*k));
    let model = read_model(&mut r, base, &mut nested)?;
    if has_model && calibration_path.is_some() {
        r.complain(
            "calibration_path",
            "give either a calibration file or model tables, not both",
        );
    }

    problems.extend(nested);
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }

    cfg.calibration = match &calibration_path {
        Some(p) => CalibrationCurve::read_csv(p)?,
        None if has_model => model.calibration(&default_concentration_grid())?,
        None => cfg.calibration,
    };
    cfg.validate()?;
    Ok(Scenario {
        config: cfg,
        calibration_path,
    })
}
