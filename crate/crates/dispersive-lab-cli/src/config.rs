//! Experiment configuration: TOML file plus `--set key=value` overrides,
//! validated as a whole so every failure is reported at once.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use dispersive_lab::multiplier_ops::{DispersionFamily, FamilyKind};

/// The experiment commands the driver understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    ResonanceScan,
    LpCheck,
    TrilinearCheck,
    InflationScan,
    LimitCheck,
    ScalingCheck,
    Bench,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::ResonanceScan => "resonance-scan",
            Command::LpCheck => "lp-check",
            Command::TrilinearCheck => "trilinear-check",
            Command::InflationScan => "inflation-scan",
            Command::LimitCheck => "limit-check",
            Command::ScalingCheck => "scaling-check",
            Command::Bench => "bench",
        }
    }

    pub fn parse(s: &str) -> Option<Command> {
        Some(match s {
            "simulate" => Command::Simulate,
            "resonance-scan" => Command::ResonanceScan,
            "lp-check" => Command::LpCheck,
            "trilinear-check" => Command::TrilinearCheck,
            "inflation-scan" => Command::InflationScan,
            "limit-check" => Command::LimitCheck,
            "scaling-check" => Command::ScalingCheck,
            "bench" => Command::Bench,
            _ => return None,
        })
    }
}

/// Fully validated experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub command: Command,
    pub family: DispersionFamily,
    pub family_name: String,
    pub grid_n: usize,
    pub grid_l: f64,
    pub dt: Option<f64>,
    pub t_end: f64,
    pub s: f64,
    pub seed: u64,
    pub output_dir: String,
    pub plots: bool,
}

impl ExperimentConfig {
    /// Echo of the resolved configuration for the run manifest.
    pub fn echo_json(&self) -> String {
        let mut out = String::from("{");
        let _ = write!(
            out,
            "\"command\":\"{}\",\"family\":\"{}\",\"gamma\":{},\"delta\":{},\"alpha_disp\":{},\
             \"grid\":{{\"n\":{},\"L\":{}}},\"dt\":{},\"t_end\":{},\"s\":{},\"seed\":{},\
             \"output_dir\":{}",
            self.command.name(),
            self.family_name,
            self.family.gamma,
            self.family.delta,
            self.family.alpha,
            self.grid_n,
            self.grid_l,
            self.dt.map_or("null".to_string(), |v| v.to_string()),
            self.t_end,
            self.s,
            self.seed,
            json_string(&self.output_dir),
        );
        out.push('}');
        out
    }
}

pub fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// Raw scalar value from TOML or a `--set` override.
#[derive(Debug, Clone)]
enum Raw {
    Number(f64),
    Integer(i64),
    Text(String),
    Bool,
}

impl Raw {
    fn type_name(&self) -> &'static str {
        match self {
            Raw::Number(_) => "float",
            Raw::Integer(_) => "integer",
            Raw::Text(_) => "string",
            Raw::Bool => "boolean",
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "command",
    "family",
    "gamma",
    "delta",
    "alpha_disp",
    "grid.n",
    "grid.L",
    "dt",
    "t_end",
    "s",
    "seed",
    "output_dir",
];

/// Parse the config document and overrides into a validated
/// [`ExperimentConfig`], or the complete list of problems.
pub fn parse_config(
    command: Command,
    file_text: Option<&str>,
    overrides: &[String],
    plots: bool,
) -> Result<ExperimentConfig, Vec<String>> {
    let mut table: BTreeMap<String, Raw> = BTreeMap::new();
    let mut errors: Vec<String> = Vec::new();

    if let Some(text) = file_text {
        match text.parse::<toml::Table>() {
            Ok(doc) => flatten_toml(&doc, "", &mut table, &mut errors),
            Err(e) => return Err(vec![format!("config parse error: {e}")]),
        }
    }
    for ov in overrides {
        match ov.split_once('=') {
            Some((k, v)) => {
                table.insert(k.trim().to_string(), parse_override_value(v.trim()));
            }
            None => errors.push(format!("override '{ov}' is not of the form key=value")),
        }
    }

    for key in table.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            errors.push(format!("unknown key \"{key}\""));
        }
    }

    if let Some(cmd_raw) = table.get("command") {
        match cmd_raw {
            Raw::Text(s) if Command::parse(s) == Some(command) => {}
            Raw::Text(s) => errors.push(format!(
                "command \"{s}\" in config does not match the invoked subcommand \"{}\"",
                command.name()
            )),
            other => errors.push(format!("command must be a string, got {}", other.type_name())),
        }
    }

    let family_name = get_text(&table, "family", &mut errors).unwrap_or_else(|| {
        "rmbo".to_string()
    });
    let kind = match family_name.as_str() {
        "bo" => Some(FamilyKind::Bo),
        "rmbo" => Some(FamilyKind::Rmbo),
        "ilw" => Some(FamilyKind::Ilw),
        "rmilw" => Some(FamilyKind::Rmilw),
        "fracbo" => Some(FamilyKind::FracBo),
        other => {
            errors.push(format!(
                "family must be one of bo|rmbo|ilw|rmilw|fracbo, got \"{other}\""
            ));
            None
        }
    };

    let rotating = matches!(
        kind,
        Some(FamilyKind::Rmbo) | Some(FamilyKind::Rmilw) | Some(FamilyKind::FracBo)
    );
    let gamma = get_number(&table, "gamma", &mut errors)
        .unwrap_or(if rotating { 1.0 } else { 0.0 });
    if !(gamma >= 0.0) {
        errors.push("gamma must be >= 0".to_string());
    }
    if matches!(kind, Some(FamilyKind::Bo) | Some(FamilyKind::Ilw)) && gamma != 0.0 {
        errors.push(format!(
            "gamma must be 0 for family {family_name} (rotation-free kind)"
        ));
    }

    let delta = get_number(&table, "delta", &mut errors).unwrap_or(1.0);
    if !(delta > 0.0) {
        errors.push("delta must be > 0".to_string());
    }

    let alpha_disp = get_number(&table, "alpha_disp", &mut errors).unwrap_or(1.0);
    if !(1.0..=2.0).contains(&alpha_disp) {
        errors.push("alpha_disp must lie in [1, 2]".to_string());
    }

    let grid_n = match table.get("grid.n") {
        Some(Raw::Integer(n)) if *n >= 16 && (*n as u64).is_power_of_two() => *n as usize,
        Some(Raw::Integer(n)) => {
            errors.push(format!("grid.n must be a power of two >= 16, got {n}"));
            1024
        }
        Some(other) => {
            errors.push(format!("grid.n must be an integer, got {}", other.type_name()));
            1024
        }
        None => 1024,
    };

    let grid_l = match table.get("grid.L") {
        Some(Raw::Number(v)) if *v > 0.0 => *v,
        Some(Raw::Integer(v)) if *v > 0 => *v as f64,
        Some(Raw::Text(s)) => match parse_pi_length(s) {
            Some(v) => v,
            None => {
                errors.push(format!(
                    "grid.L must be a positive number or \"<k>pi\", got \"{s}\""
                ));
                16.0 * std::f64::consts::PI
            }
        },
        Some(_) => {
            errors.push("grid.L must be a positive number or \"<k>pi\"".to_string());
            16.0 * std::f64::consts::PI
        }
        None => 16.0 * std::f64::consts::PI,
    };

    let dt = match get_number(&table, "dt", &mut errors) {
        Some(v) if v > 0.0 => Some(v),
        Some(v) => {
            errors.push(format!("dt must be > 0, got {v}"));
            None
        }
        None => None,
    };

    let default_t_end = match command {
        Command::LimitCheck | Command::ScalingCheck => 0.1,
        _ => 1.0,
    };
    let t_end = get_number(&table, "t_end", &mut errors).unwrap_or(default_t_end);
    if !(t_end > 0.0 && t_end.is_finite()) {
        errors.push(format!("t_end must be positive and finite, got {t_end}"));
    }

    let default_s = match command {
        Command::InflationScan => 0.75,
        _ => 1.0,
    };
    let s = get_number(&table, "s", &mut errors).unwrap_or(default_s);
    if !s.is_finite() {
        errors.push("s must be finite".to_string());
    }

    let seed = match table.get("seed") {
        Some(Raw::Integer(v)) if *v >= 0 => *v as u64,
        Some(Raw::Integer(v)) => {
            errors.push(format!("seed must be a nonnegative integer, got {v}"));
            42
        }
        Some(other) => {
            errors.push(format!("seed must be an integer, got {}", other.type_name()));
            42
        }
        None => 42,
    };

    let output_dir = get_text(&table, "output_dir", &mut errors).unwrap_or_else(|| "out".into());
    if output_dir.is_empty() {
        errors.push("output_dir must not be empty".to_string());
    }

    let family = kind.and_then(|k| {
        let res = match k {
            FamilyKind::Bo => Ok(DispersionFamily::bo()),
            FamilyKind::Rmbo => DispersionFamily::rmbo(gamma),
            FamilyKind::Ilw => DispersionFamily::ilw(delta),
            FamilyKind::Rmilw => DispersionFamily::rmilw(delta, gamma),
            FamilyKind::FracBo => DispersionFamily::frac_bo(alpha_disp, gamma),
        };
        match res {
            Ok(f) => Some(f),
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        }
    });

    match (errors.is_empty(), family) {
        (true, Some(family)) => Ok(ExperimentConfig {
            command,
            family,
            family_name,
            grid_n,
            grid_l,
            dt,
            t_end,
            s,
            seed,
            output_dir,
            plots,
        }),
        _ => Err(errors),
    }
}

fn flatten_toml(
    doc: &toml::Table,
    prefix: &str,
    out: &mut BTreeMap<String, Raw>,
    errors: &mut Vec<String>,
) {
    for (key, value) in doc {
        let full = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match value {
            toml::Value::Float(v) => {
                out.insert(full, Raw::Number(*v));
            }
            toml::Value::Integer(v) => {
                out.insert(full, Raw::Integer(*v));
            }
            toml::Value::String(v) => {
                out.insert(full, Raw::Text(v.clone()));
            }
            toml::Value::Boolean(_) => {
                out.insert(full, Raw::Bool);
            }
            toml::Value::Table(t) if prefix.is_empty() => flatten_toml(t, &full, out, errors),
            _ => errors.push(format!(
                "key \"{full}\": only flat sections with scalar values are supported"
            )),
        }
    }
}

fn parse_override_value(v: &str) -> Raw {
    if let Ok(i) = v.parse::<i64>() {
        return Raw::Integer(i);
    }
    if let Ok(f) = v.parse::<f64>() {
        return Raw::Number(f);
    }
    match v {
        "true" | "false" => Raw::Bool,
        _ => Raw::Text(v.trim_matches('"').to_string()),
    }
}

fn parse_pi_length(s: &str) -> Option<f64> {
    let body = s.trim().strip_suffix("pi")?;
    let factor: f64 = if body.is_empty() { 1.0 } else { body.parse().ok()? };
    if factor > 0.0 {
        Some(factor * std::f64::consts::PI)
    } else {
        None
    }
}

fn get_number(table: &BTreeMap<String, Raw>, key: &str, errors: &mut Vec<String>) -> Option<f64> {
    match table.get(key) {
        Some(Raw::Number(v)) => Some(*v),
        Some(Raw::Integer(v)) => Some(*v as f64),
        Some(other) => {
            errors.push(format!("{key} must be a number, got {}", other.type_name()));
            None
        }
        None => None,
    }
}

fn get_text(table: &BTreeMap<String, Raw>, key: &str, errors: &mut Vec<String>) -> Option<String> {
    match table.get(key) {
        Some(Raw::Text(v)) => Some(v.clone()),
        Some(other) => {
            errors.push(format!("{key} must be a string, got {}", other.type_name()));
            None
        }
        None => None,
    }
}
