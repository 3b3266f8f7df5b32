//! TOML run configuration. Every key is validated before dispatch and all
//! problems are reported together.

use std::fmt;

use cqnls::solvers::{AnsatzFamily, Preconditioner};
use thiserror::Error;
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid configuration:\n{}", .0.iter().map(|e| format!("  {e}")).collect::<Vec<_>>().join("\n"))]
    Validation(Vec<ValidationError>),
}

impl ConfigError {
    pub fn mentions(&self, key: &str) -> bool {
        match self {
            ConfigError::Validation(errs) => errs.iter().any(|e| e.key == key),
            ConfigError::Parse { .. } => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsSection {
    pub alpha1: f64,
    pub alpha3: f64,
    pub alpha5: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSection {
    pub family: AnsatzFamily,
    pub amplitude: f64,
    /// Fixed ansatz width; `None` scans the default widths.
    pub width: Option<f64>,
    pub separation: f64,
    /// Fixed phase slope; `None` scans the default slopes.
    pub slope: Option<f64>,
    pub c: Option<f64>,
    pub a: Option<f64>,
    pub d: usize,
    pub n: f64,
    pub l: f64,
    pub n1: usize,
    pub nt: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub step0: f64,
    pub backtrack: f64,
    pub preconditioner: Preconditioner,
    pub newton_switch: f64,
    /// Start from the peak of the straight mountain-pass path.
    pub mountain_pass: bool,
    pub path_samples: usize,
    pub budget: usize,
    /// Solve at rest first and continue in `c` over this many solves.
    pub continuation_steps: usize,
    /// Amplitude of seeded noise added to the starting field.
    pub jitter: f64,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            family: AnsatzFamily::AmplitudeDip,
            amplitude: 1.0,
            width: None,
            separation: 4.0,
            slope: None,
            c: None,
            a: None,
            d: 2,
            n: 8.0,
            l: 20.0,
            n1: 81,
            nt: 128,
            tol: 1e-9,
            max_iters: 200,
            step0: 1.0,
            backtrack: 0.5,
            preconditioner: Preconditioner::InverseHelmholtz,
            newton_switch: 10.0,
            mountain_pass: true,
            path_samples: 41,
            budget: 10_000,
            continuation_steps: 1,
            jitter: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveSection {
    pub dt: f64,
    pub t_final: f64,
    pub stride: usize,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_final: 1.0,
            stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanSection {
    pub a_min: f64,
    pub a_max: f64,
    pub a_count: usize,
    pub c_min: f64,
    pub c_max: f64,
    pub c_count: usize,
    /// Interpret the `c` range as fractions of the sound speed of each `A`.
    pub c_relative: bool,
    pub s_max: f64,
    pub samples: usize,
}

impl Default for ScanSection {
    fn default() -> Self {
        Self {
            a_min: 0.05,
            a_max: 0.95,
            a_count: 10,
            c_min: 0.05,
            c_max: 0.95,
            c_count: 10,
            c_relative: true,
            s_max: 10.0,
            samples: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySection {
    pub delta: f64,
    pub pohozaev_tol: f64,
    pub lagrangian_tol: f64,
    pub identity_samples: usize,
    pub identity_tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            delta: 1e-6,
            pohozaev_tol: 1e-3,
            lagrangian_tol: 1e-3,
            identity_samples: 10_000,
            identity_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub seed: u64,
    pub params: Option<ParamsSection>,
    pub solve: SolveSection,
    pub evolve: EvolveSection,
    pub scan: ScanSection,
    pub verify: VerifySection,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, column)
}

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    errors: &'a mut Vec<ValidationError>,
    seen: Vec<&'static str>,
}

impl<'a> Section<'a> {
    fn key(&self, key: &str) -> String {
        if self.name.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.name)
        }
    }

    fn fail(&mut self, key: &str, message: impl Into<String>) {
        let key = self.key(key);
        self.errors.push(ValidationError {
            key,
            message: message.into(),
        });
    }

    fn raw(&mut self, key: &'static str) -> Option<&'a Value> {
        self.seen.push(key);
        self.table.and_then(|t| t.get(key))
    }

    fn opt_f64(&mut self, key: &'static str) -> Option<f64> {
        match self.raw(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.fail(key, format!("expected a number, found {}", other.type_str()));
                None
            }
        }
    }

    fn f64(&mut self, key: &'static str, default: f64) -> f64 {
        self.opt_f64(key).unwrap_or(default)
    }

    fn required_f64(&mut self, key: &'static str) -> Option<f64> {
        let present = self.table.is_some_and(|t| t.contains_key(key));
        let v = self.opt_f64(key);
        if !present {
            self.fail(key, "required key is missing");
        }
        v
    }

    fn count(&mut self, key: &'static str, default: usize) -> usize {
        match self.raw(key) {
            None => default,
            Some(Value::Integer(i)) if *i >= 0 => *i as usize,
            Some(Value::Integer(i)) => {
                let i = *i;
                self.fail(key, format!("must be a nonnegative integer, got {i}"));
                default
            }
            Some(other) => {
                let t = other.type_str();
                self.fail(key, format!("expected an integer, found {t}"));
                default
            }
        }
    }

    fn bool(&mut self, key: &'static str, default: bool) -> bool {
        match self.raw(key) {
            None => default,
            Some(Value::Boolean(b)) => *b,
            Some(other) => {
                let t = other.type_str();
                self.fail(key, format!("expected a boolean, found {t}"));
                default
            }
        }
    }

    fn parsed<T: std::str::FromStr<Err = String>>(&mut self, key: &'static str, default: T) -> T {
        match self.raw(key) {
            None => default,
            Some(Value::String(s)) => match s.parse() {
                Ok(v) => v,
                Err(e) => {
                    self.fail(key, e);
                    default
                }
            },
            Some(other) => {
                let t = other.type_str();
                self.fail(key, format!("expected a string, found {t}"));
                default
            }
        }
    }

    fn check(&mut self, key: &str, ok: bool, constraint: &str) {
        if !ok {
            self.fail(key, format!("must satisfy {constraint}"));
        }
    }

    fn finish(self, nested: &[&str]) {
        let Some(t) = self.table else { return };
        let mut unknown: Vec<&String> = t
            .keys()
            .filter(|k| !self.seen.contains(&k.as_str()) && !nested.contains(&k.as_str()))
            .collect();
        unknown.sort();
        for k in unknown {
            let key = if self.name.is_empty() {
                k.clone()
            } else {
                format!("{}.{k}", self.name)
            };
            self.errors.push(ValidationError {
                key,
                message: "unknown key".into(),
            });
        }
    }
}

const SECTIONS: [&str; 5] = ["params", "solve", "evolve", "scan", "verify"];

fn section<'a>(root: &'a Table, name: &'static str, errors: &'a mut Vec<ValidationError>) -> Section<'a> {
    let table = match root.get(name) {
        Some(Value::Table(t)) => Some(t),
        Some(_) => {
            errors.push(ValidationError {
                key: name.into(),
                message: "expected a table".into(),
            });
            None
        }
        None => None,
    };
    Section {
        name,
        table,
        errors,
        seen: Vec::new(),
    }
}

/// Parses and validates a configuration; an empty text yields all defaults.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let (line, column) = e.span().map_or((1, 1), |s| line_column(text, s.start));
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    let mut errors = Vec::new();
    let mut cfg = RunConfig::default();

    let mut top = Section {
        name: "",
        table: Some(&root),
        errors: &mut errors,
        seen: Vec::new(),
    };
    match top.raw("seed") {
        None => {}
        Some(Value::Integer(i)) if *i >= 0 => cfg.seed = *i as u64,
        Some(_) => top.fail("seed", "must be a nonnegative integer"),
    }
    top.finish(&SECTIONS);

    if root.contains_key("params") {
        let mut s = section(&root, "params", &mut errors);
        let alpha1 = s.required_f64("alpha1");
        let alpha3 = s.required_f64("alpha3");
        let alpha5 = s.required_f64("alpha5");
        let c = s.f64("c", 0.0);
        for (key, v) in [("alpha1", alpha1), ("alpha3", alpha3), ("alpha5", alpha5)] {
            if let Some(v) = v {
                s.check(key, v > 0.0 && v.is_finite(), "> 0");
            }
        }
        s.check("c", c >= 0.0 && c.is_finite(), "c >= 0 (speeds are nonnegative)");
        s.finish(&[]);
        if let (Some(alpha1), Some(alpha3), Some(alpha5)) = (alpha1, alpha3, alpha5) {
            cfg.params = Some(ParamsSection {
                alpha1,
                alpha3,
                alpha5,
                c,
            });
        }
    }

    {
        let d = SolveSection::default();
        let mut s = section(&root, "solve", &mut errors);
        let v = SolveSection {
            family: s.parsed("family", d.family),
            amplitude: s.f64("amplitude", d.amplitude),
            width: s.opt_f64("width"),
            separation: s.f64("separation", d.separation),
            slope: s.opt_f64("slope"),
            c: s.opt_f64("c"),
            a: s.opt_f64("A"),
            d: s.count("d", d.d),
            n: s.f64("N", d.n),
            l: s.f64("L", d.l),
            n1: s.count("n1", d.n1),
            nt: s.count("nt", d.nt),
            tol: s.f64("tol", d.tol),
            max_iters: s.count("max_iters", d.max_iters),
            step0: s.f64("step0", d.step0),
            backtrack: s.f64("backtrack", d.backtrack),
            preconditioner: s.parsed("preconditioner", d.preconditioner),
            newton_switch: s.f64("newton_switch", d.newton_switch),
            mountain_pass: s.bool("mountain_pass", d.mountain_pass),
            path_samples: s.count("path_samples", d.path_samples),
            budget: s.count("budget", d.budget),
            continuation_steps: s.count("continuation_steps", d.continuation_steps),
            jitter: s.f64("jitter", d.jitter),
        };
        s.check("amplitude", v.amplitude.is_finite(), "a finite value");
        if let Some(w) = v.width {
            s.check("width", w > 0.0 && w.is_finite(), "width > 0");
        }
        s.check("separation", v.separation > 0.0, "separation > 0");
        if let Some(c) = v.c {
            s.check("c", c >= 0.0 && c.is_finite(), "c >= 0 (speeds are nonnegative)");
        }
        if let Some(a) = v.a {
            s.check("A", a > 0.0 && a < 1.0, "0 < A < 1");
        }
        s.check("d", v.d == 2 || v.d == 3, "d = 2 or d = 3");
        if v.family == AnsatzFamily::VortexPair {
            s.check("family", v.d == 2, "vortex_pair requires d = 2");
        }
        s.check("N", v.n > 0.0 && v.n.is_finite(), "N > 0");
        s.check("L", v.l > 0.0 && v.l.is_finite(), "L > 0");
        s.check("n1", v.n1 >= 8, "n1 >= 8");
        s.check("nt", v.nt >= 8, "nt >= 8");
        s.check("tol", v.tol > 0.0, "tol > 0");
        s.check("step0", v.step0 > 0.0, "step0 > 0");
        s.check("backtrack", v.backtrack > 0.0 && v.backtrack < 1.0, "0 < backtrack < 1");
        s.check("newton_switch", v.newton_switch > 0.0, "newton_switch > 0");
        s.check("path_samples", v.path_samples >= 3, "path_samples >= 3");
        s.check(
            "continuation_steps",
            v.continuation_steps >= 1,
            "continuation_steps >= 1",
        );
        s.check("jitter", v.jitter >= 0.0 && v.jitter.is_finite(), "jitter >= 0");
        s.finish(&[]);
        cfg.solve = v;
    }

    {
        let d = EvolveSection::default();
        let mut s = section(&root, "evolve", &mut errors);
        let v = EvolveSection {
            dt: s.f64("dt", d.dt),
            t_final: s.f64("T", d.t_final),
            stride: s.count("stride", d.stride),
        };
        s.check("T", v.t_final > 0.0 && v.t_final.is_finite(), "T > 0");
        s.check("dt", v.dt > 0.0 && v.dt <= v.t_final, "0 < dt <= T");
        s.check("stride", v.stride >= 1, "stride >= 1");
        s.finish(&[]);
        cfg.evolve = v;
    }

    {
        let d = ScanSection::default();
        let mut s = section(&root, "scan", &mut errors);
        let v = ScanSection {
            a_min: s.f64("A_min", d.a_min),
            a_max: s.f64("A_max", d.a_max),
            a_count: s.count("A_count", d.a_count),
            c_min: s.f64("c_min", d.c_min),
            c_max: s.f64("c_max", d.c_max),
            c_count: s.count("c_count", d.c_count),
            c_relative: s.bool("c_relative", d.c_relative),
            s_max: s.f64("s_max", d.s_max),
            samples: s.count("samples", d.samples),
        };
        s.check("A_min", v.a_min > 0.0 && v.a_min < 1.0, "0 < A_min < 1");
        s.check(
            "A_max",
            v.a_max > 0.0 && v.a_max < 1.0 && v.a_max >= v.a_min,
            "A_min <= A_max < 1",
        );
        s.check("A_count", v.a_count >= 1, "A_count >= 1");
        s.check("c_min", v.c_min >= 0.0, "c_min >= 0 (speeds are nonnegative)");
        s.check("c_max", v.c_max >= v.c_min, "c_max >= c_min");
        s.check("c_count", v.c_count >= 1, "c_count >= 1");
        s.check("s_max", v.s_max > 0.0 && v.s_max.is_finite(), "s_max > 0");
        s.check("samples", v.samples >= 2, "samples >= 2");
        s.finish(&[]);
        cfg.scan = v;
    }

    {
        let d = VerifySection::default();
        let mut s = section(&root, "verify", &mut errors);
        let v = VerifySection {
            delta: s.f64("delta", d.delta),
            pohozaev_tol: s.f64("pohozaev_tol", d.pohozaev_tol),
            lagrangian_tol: s.f64("lagrangian_tol", d.lagrangian_tol),
            identity_samples: s.count("identity_samples", d.identity_samples),
            identity_tol: s.f64("identity_tol", d.identity_tol),
        };
        for (key, x) in [
            ("delta", v.delta),
            ("pohozaev_tol", v.pohozaev_tol),
            ("lagrangian_tol", v.lagrangian_tol),
            ("identity_tol", v.identity_tol),
        ] {
            s.check(key, x > 0.0, "> 0");
        }
        s.check("identity_samples", v.identity_samples >= 1, "identity_samples >= 1");
        s.finish(&[]);
        cfg.verify = v;
    }

    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Validation(errors))
    }
}
