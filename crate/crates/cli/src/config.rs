//! Experiment configuration: a small TOML schema with per-experiment
//! defaults, strict unknown-key rejection, and a deterministic serializer so
//! that parse -> serialize -> parse round-trips to an equal config.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use toml::Value;
use wjdot::{Activation, Error, LabelLoss, Result, ValidationKind, WjdotConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Fig1,
    RotationSweep,
    TargetShift,
    Custom,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Fig1 => "fig1",
            ExperimentKind::RotationSweep => "rotation-sweep",
            ExperimentKind::TargetShift => "target-shift",
            ExperimentKind::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fig1" => Ok(ExperimentKind::Fig1),
            "rotation-sweep" => Ok(ExperimentKind::RotationSweep),
            "target-shift" => Ok(ExperimentKind::TargetShift),
            "custom" => Ok(ExperimentKind::Custom),
            other => Err(Error::Config(format!(
                "key `kind`: unknown experiment kind '{other}' (expected fig1, \
                 rotation-sweep, target-shift or custom)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Wjdot,
    Cjdot,
    Mjdot,
    Baseline,
    Target,
    BaselineTarget,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Wjdot => "wjdot",
            Method::Cjdot => "cjdot",
            Method::Mjdot => "mjdot",
            Method::Baseline => "baseline",
            Method::Target => "target",
            Method::BaselineTarget => "baseline+target",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "wjdot" => Ok(Method::Wjdot),
            "cjdot" => Ok(Method::Cjdot),
            "mjdot" => Ok(Method::Mjdot),
            "baseline" => Ok(Method::Baseline),
            "target" => Ok(Method::Target),
            "baseline+target" => Ok(Method::BaselineTarget),
            other => Err(Error::Config(format!(
                "key `methods`: unknown method '{other}' (expected wjdot, cjdot, \
                 mjdot, baseline, target or baseline+target)"
            ))),
        }
    }
}

/// Feature-cost weight: a fixed value, or grid selection by the validation
/// criterion at run time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaChoice {
    Fixed(f64),
    Validate,
}

/// Target angle for fig1/custom rotation data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleChoice {
    Fixed(f64),
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataSection {
    pub n_sources: usize,
    pub n_per_source: usize,
    pub n_target: usize,
    pub sigma: f64,
    /// fig1 only.
    pub target_angle: AngleChoice,
    /// rotation-sweep only: number of target angles in the sweep grid.
    pub sweep_angles: usize,
    /// target-shift only: the target class-1 proportions to sweep.
    pub target_proportions: Vec<f64>,
    /// custom only.
    pub source_files: Vec<String>,
    /// custom only.
    pub target_file: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WjdotSection {
    pub beta: BetaChoice,
    pub step_alpha: f64,
    pub step_theta: f64,
    pub max_iters: usize,
    pub patience: usize,
    pub validation: ValidationKind,
    pub label_loss: LabelLoss,
    pub refresh: bool,
    pub alpha_decay: bool,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErmSection {
    pub steps: usize,
    pub learning_rate: f64,
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingKind {
    Identity,
    Mtl,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSection {
    pub kind: EmbeddingKind,
    pub hidden: Vec<usize>,
    pub steps: usize,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub methods: Vec<Method>,
    pub replications: usize,
    pub seed: u64,
    pub output: String,
    pub data: DataSection,
    pub wjdot: WjdotSection,
    pub erm: ErmSection,
    pub embedding: EmbeddingSection,
}

impl ExperimentConfig {
    /// The documented defaults for an experiment kind; the per-kind
    /// optimization settings are the tuned values for the bundled studies.
    pub fn defaults(kind: ExperimentKind) -> Self {
        let (n_sources, n_per_source, n_target, sigma) = match kind {
            ExperimentKind::Fig1 => (4, 300, 300, 0.8),
            ExperimentKind::RotationSweep => (30, 300, 300, 0.8),
            ExperimentKind::TargetShift => (20, 60, 60, 0.7),
            ExperimentKind::Custom => (0, 0, 0, 0.0),
        };
        let wjdot = match kind {
            ExperimentKind::Fig1 => WjdotSection {
                beta: BetaChoice::Fixed(1.0),
                step_alpha: 1.0,
                step_theta: 1.0,
                max_iters: 100,
                patience: 15,
                validation: ValidationKind::Sse,
                label_loss: LabelLoss::SquaredError,
                refresh: true,
                alpha_decay: true,
                hidden: Vec::new(),
                activation: Activation::Tanh,
            },
            ExperimentKind::RotationSweep => WjdotSection {
                beta: BetaChoice::Fixed(1.0),
                step_alpha: 1.0,
                step_theta: 1.0,
                max_iters: 50,
                patience: 50,
                validation: ValidationKind::Sse,
                label_loss: LabelLoss::SquaredError,
                refresh: false,
                alpha_decay: true,
                hidden: Vec::new(),
                activation: Activation::Tanh,
            },
            ExperimentKind::TargetShift => WjdotSection {
                beta: BetaChoice::Fixed(1.0),
                step_alpha: 0.05,
                step_theta: 1.0,
                max_iters: 200,
                patience: 200,
                validation: ValidationKind::None,
                label_loss: LabelLoss::SquaredError,
                refresh: false,
                alpha_decay: false,
                hidden: Vec::new(),
                activation: Activation::Tanh,
            },
            ExperimentKind::Custom => {
                let d = WjdotConfig::default();
                WjdotSection {
                    beta: BetaChoice::Fixed(d.beta),
                    step_alpha: d.step_alpha,
                    step_theta: d.step_theta,
                    max_iters: d.max_iters,
                    patience: d.patience,
                    validation: d.validation,
                    label_loss: d.label_loss,
                    refresh: d.refresh_between_updates,
                    alpha_decay: d.alpha_decay,
                    hidden: d.hidden,
                    activation: d.activation,
                }
            }
        };
        ExperimentConfig {
            kind,
            methods: vec![Method::Wjdot],
            replications: 1,
            seed: 0,
            output: String::from("results"),
            data: DataSection {
                n_sources,
                n_per_source,
                n_target,
                sigma,
                target_angle: AngleChoice::Fixed(0.75 * PI),
                sweep_angles: 20,
                target_proportions: wjdot_core_proportions(),
                source_files: Vec::new(),
                target_file: String::new(),
            },
            wjdot,
            erm: ErmSection {
                steps: 400,
                learning_rate: 1.0,
                hidden: Vec::new(),
                activation: Activation::Tanh,
            },
            embedding: EmbeddingSection {
                kind: EmbeddingKind::Identity,
                hidden: vec![8],
                steps: 200,
                learning_rate: 0.5,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Config("key `replications`: must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("key `methods`: must not be empty".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(Error::Config(format!(
                    "key `methods`: method '{}' listed twice",
                    m.name()
                )));
            }
        }
        match self.kind {
            ExperimentKind::Custom => {
                if self.data.source_files.is_empty() {
                    return Err(Error::Config(
                        "key `data.source_files`: custom experiments need at least \
                         one source file"
                            .into(),
                    ));
                }
                if self.data.target_file.is_empty() {
                    return Err(Error::Config(
                        "key `data.target_file`: custom experiments need a target file"
                            .into(),
                    ));
                }
                for f in self
                    .data
                    .source_files
                    .iter()
                    .chain(std::iter::once(&self.data.target_file))
                {
                    if !Path::new(f).is_file() {
                        return Err(Error::Config(format!("referenced file not found: {f}")));
                    }
                }
            }
            _ => {
                if self.data.n_sources == 0 {
                    return Err(Error::Config(
                        "key `data.n_sources`: must be at least 1".into(),
                    ));
                }
                if self.data.n_per_source == 0 || self.data.n_target == 0 {
                    return Err(Error::Config(
                        "key `data.n_per_source`/`data.n_target`: must be at least 1"
                            .into(),
                    ));
                }
                if !(self.data.sigma.is_finite() && self.data.sigma > 0.0) {
                    return Err(Error::Config(
                        "key `data.sigma`: must be positive".into(),
                    ));
                }
            }
        }
        if self.kind == ExperimentKind::RotationSweep && self.data.sweep_angles == 0 {
            return Err(Error::Config(
                "key `data.sweep_angles`: must be at least 1".into(),
            ));
        }
        if self.kind == ExperimentKind::TargetShift {
            if self.data.target_proportions.is_empty() {
                return Err(Error::Config(
                    "key `data.target_proportions`: must not be empty".into(),
                ));
            }
            for &p in &self.data.target_proportions {
                if !(0.1..=0.9).contains(&p) {
                    return Err(Error::Config(format!(
                        "key `data.target_proportions`: {p} is outside [0.1, 0.9]"
                    )));
                }
            }
        }
        if let BetaChoice::Fixed(b) = self.wjdot.beta {
            if !b.is_finite() || b < 0.0 {
                return Err(Error::Config(
                    "key `wjdot.beta`: must be finite and non-negative".into(),
                ));
            }
        }
        Ok(())
    }

    /// The core optimization settings for one run.
    pub fn wjdot_config(&self, beta: f64, seed: u64) -> WjdotConfig {
        WjdotConfig {
            beta,
            step_alpha: self.wjdot.step_alpha,
            step_theta: self.wjdot.step_theta,
            max_iters: self.wjdot.max_iters,
            validation: self.wjdot.validation,
            patience: self.wjdot.patience,
            alpha_decay: self.wjdot.alpha_decay,
            label_loss: self.wjdot.label_loss,
            refresh_between_updates: self.wjdot.refresh,
            seed,
            hidden: self.wjdot.hidden.clone(),
            activation: self.wjdot.activation,
        }
    }
}

fn wjdot_core_proportions() -> Vec<f64> {
    wjdot::shift_proportions(9)
}

pub fn parse_config_str(text: &str, origin: &str) -> Result<ExperimentConfig> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        Error::Config(format!("{origin}: {}", e.message()))
    })?;

    let kind = match table.get("kind") {
        Some(v) => ExperimentKind::parse(expect_str("kind", v)?)?,
        None => ExperimentKind::Custom,
    };
    let mut config = ExperimentConfig::defaults(kind);

    for (key, value) in &table {
        match key.as_str() {
            "kind" => {}
            "methods" => {
                let list = expect_array("methods", value)?;
                let mut methods = Vec::with_capacity(list.len());
                for v in list {
                    methods.push(Method::parse(expect_str("methods", v)?)?);
                }
                config.methods = methods;
            }
            "replications" => config.replications = expect_usize("replications", value)?,
            "seed" => config.seed = expect_u64("seed", value)?,
            "output" => config.output = expect_str("output", value)?.to_string(),
            "data" => parse_data(kind, expect_table("data", value)?, &mut config.data)?,
            "wjdot" => parse_wjdot(expect_table("wjdot", value)?, &mut config.wjdot)?,
            "erm" => parse_erm(expect_table("erm", value)?, &mut config.erm)?,
            "embedding" => {
                parse_embedding(expect_table("embedding", value)?, &mut config.embedding)?
            }
            other => return Err(Error::Config(format!("unknown key: {other}"))),
        }
    }
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, &path.display().to_string())
}

fn parse_data(
    kind: ExperimentKind,
    table: &toml::map::Map<String, Value>,
    data: &mut DataSection,
) -> Result<()> {
    for (key, value) in table {
        let qualified = format!("data.{key}");
        match (kind, key.as_str()) {
            (ExperimentKind::Custom, "source_files") => {
                let list = expect_array(&qualified, value)?;
                data.source_files = list
                    .iter()
                    .map(|v| expect_str(&qualified, v).map(str::to_string))
                    .collect::<Result<_>>()?;
            }
            (ExperimentKind::Custom, "target_file") => {
                data.target_file = expect_str(&qualified, value)?.to_string();
            }
            (ExperimentKind::Custom, _) => {
                return Err(Error::Config(format!("unknown key: {qualified}")))
            }
            (_, "n_sources") => data.n_sources = expect_usize(&qualified, value)?,
            (_, "n_per_source") => data.n_per_source = expect_usize(&qualified, value)?,
            (_, "n_target") => data.n_target = expect_usize(&qualified, value)?,
            (_, "sigma") => data.sigma = expect_float(&qualified, value)?,
            (ExperimentKind::Fig1, "target_angle") => {
                data.target_angle = match value {
                    Value::String(s) if s == "random" => AngleChoice::Random,
                    _ => AngleChoice::Fixed(expect_float(&qualified, value)?),
                };
            }
            (ExperimentKind::RotationSweep, "sweep_angles") => {
                data.sweep_angles = expect_usize(&qualified, value)?
            }
            (ExperimentKind::TargetShift, "target_proportions") => {
                let list = expect_array(&qualified, value)?;
                data.target_proportions = list
                    .iter()
                    .map(|v| expect_float(&qualified, v))
                    .collect::<Result<_>>()?;
            }
            _ => return Err(Error::Config(format!("unknown key: {qualified}"))),
        }
    }
    Ok(())
}

fn parse_wjdot(table: &toml::map::Map<String, Value>, w: &mut WjdotSection) -> Result<()> {
    for (key, value) in table {
        let qualified = format!("wjdot.{key}");
        match key.as_str() {
            "beta" => {
                w.beta = match value {
                    Value::String(s) if s == "validate" => BetaChoice::Validate,
                    _ => BetaChoice::Fixed(expect_float(&qualified, value)?),
                };
            }
            "step_alpha" => w.step_alpha = expect_float(&qualified, value)?,
            "step_theta" => w.step_theta = expect_float(&qualified, value)?,
            "max_iters" => w.max_iters = expect_usize(&qualified, value)?,
            "patience" => w.patience = expect_usize(&qualified, value)?,
            "validation" => {
                w.validation = ValidationKind::parse(expect_str(&qualified, value)?)?
            }
            "label_loss" => w.label_loss = LabelLoss::parse(expect_str(&qualified, value)?)?,
            "refresh" => w.refresh = expect_bool(&qualified, value)?,
            "alpha_decay" => w.alpha_decay = expect_bool(&qualified, value)?,
            "hidden" => w.hidden = expect_usize_list(&qualified, value)?,
            "activation" => {
                w.activation = Activation::parse(expect_str(&qualified, value)?)?
            }
            _ => return Err(Error::Config(format!("unknown key: {qualified}"))),
        }
    }
    Ok(())
}

fn parse_erm(table: &toml::map::Map<String, Value>, e: &mut ErmSection) -> Result<()> {
    for (key, value) in table {
        let qualified = format!("erm.{key}");
        match key.as_str() {
            "steps" => e.steps = expect_usize(&qualified, value)?,
            "learning_rate" => e.learning_rate = expect_float(&qualified, value)?,
            "hidden" => e.hidden = expect_usize_list(&qualified, value)?,
            "activation" => {
                e.activation = Activation::parse(expect_str(&qualified, value)?)?
            }
            _ => return Err(Error::Config(format!("unknown key: {qualified}"))),
        }
    }
    Ok(())
}

fn parse_embedding(
    table: &toml::map::Map<String, Value>,
    e: &mut EmbeddingSection,
) -> Result<()> {
    for (key, value) in table {
        let qualified = format!("embedding.{key}");
        match key.as_str() {
            "kind" => {
                e.kind = match expect_str(&qualified, value)? {
                    "identity" => EmbeddingKind::Identity,
                    "mtl" => EmbeddingKind::Mtl,
                    other => {
                        return Err(Error::Config(format!(
                            "key `{qualified}`: unknown embedding kind '{other}' \
                             (expected identity or mtl)"
                        )))
                    }
                };
            }
            "hidden" => e.hidden = expect_usize_list(&qualified, value)?,
            "steps" => e.steps = expect_usize(&qualified, value)?,
            "learning_rate" => e.learning_rate = expect_float(&qualified, value)?,
            _ => return Err(Error::Config(format!("unknown key: {qualified}"))),
        }
    }
    Ok(())
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::String(_) => "string",
        Value::Integer(_) => "integer",
        Value::Float(_) => "float",
        Value::Boolean(_) => "boolean",
        Value::Datetime(_) => "datetime",
        Value::Array(_) => "array",
        Value::Table(_) => "table",
    }
}

fn expect_str<'v>(key: &str, v: &'v Value) -> Result<&'v str> {
    v.as_str().ok_or_else(|| {
        Error::Config(format!("key `{key}`: expected string, found {}", type_name(v)))
    })
}

fn expect_bool(key: &str, v: &Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| {
        Error::Config(format!("key `{key}`: expected boolean, found {}", type_name(v)))
    })
}

fn expect_u64(key: &str, v: &Value) -> Result<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        Value::Integer(_) => Err(Error::Config(format!(
            "key `{key}`: expected non-negative integer"
        ))),
        _ => Err(Error::Config(format!(
            "key `{key}`: expected integer, found {}",
            type_name(v)
        ))),
    }
}

fn expect_usize(key: &str, v: &Value) -> Result<usize> {
    Ok(expect_u64(key, v)? as usize)
}

fn expect_float(key: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(Error::Config(format!(
            "key `{key}`: expected float, found {}",
            type_name(v)
        ))),
    }
}

fn expect_array<'v>(key: &str, v: &'v Value) -> Result<&'v Vec<Value>> {
    v.as_array().ok_or_else(|| {
        Error::Config(format!("key `{key}`: expected array, found {}", type_name(v)))
    })
}

fn expect_table<'v>(key: &str, v: &'v Value) -> Result<&'v toml::map::Map<String, Value>> {
    v.as_table().ok_or_else(|| {
        Error::Config(format!("key `{key}`: expected table, found {}", type_name(v)))
    })
}

fn expect_usize_list(key: &str, v: &Value) -> Result<Vec<usize>> {
    expect_array(key, v)?.iter().map(|x| expect_usize(key, x)).collect()
}

/// TOML floats must carry a decimal point or exponent.
fn toml_float(x: f64) -> String {
    let s = format!("{x}");
    if s.contains('.') || s.contains('e') || s.contains("inf") || s.contains("NaN") {
        s
    } else {
        format!("{s}.0")
    }
}

fn usize_list(xs: &[usize]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn float_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| toml_float(x)).collect();
    format!("[{}]", parts.join(", "))
}

fn string_list(xs: &[String]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", parts.join(", "))
}

impl ExperimentConfig {
    /// Deterministic TOML rendering of every effective value; parsing the
    /// output reproduces `self` exactly.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "kind = {:?}", self.kind.name());
        let methods: Vec<String> =
            self.methods.iter().map(|m| m.name().to_string()).collect();
        let _ = writeln!(s, "methods = {}", string_list(&methods));
        let _ = writeln!(s, "replications = {}", self.replications);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "output = {:?}", self.output);

        let _ = writeln!(s, "\n[data]");
        match self.kind {
            ExperimentKind::Custom => {
                let _ = writeln!(s, "source_files = {}", string_list(&self.data.source_files));
                let _ = writeln!(s, "target_file = {:?}", self.data.target_file);
            }
            kind => {
                let _ = writeln!(s, "n_sources = {}", self.data.n_sources);
                let _ = writeln!(s, "n_per_source = {}", self.data.n_per_source);
                let _ = writeln!(s, "n_target = {}", self.data.n_target);
                let _ = writeln!(s, "sigma = {}", toml_float(self.data.sigma));
                match kind {
                    ExperimentKind::Fig1 => {
                        let _ = match self.data.target_angle {
                            AngleChoice::Fixed(a) => {
                                writeln!(s, "target_angle = {}", toml_float(a))
                            }
                            AngleChoice::Random => writeln!(s, "target_angle = \"random\""),
                        };
                    }
                    ExperimentKind::RotationSweep => {
                        let _ = writeln!(s, "sweep_angles = {}", self.data.sweep_angles);
                    }
                    ExperimentKind::TargetShift => {
                        let _ = writeln!(
                            s,
                            "target_proportions = {}",
                            float_list(&self.data.target_proportions)
                        );
                    }
                    ExperimentKind::Custom => unreachable!(),
                }
            }
        }

        let _ = writeln!(s, "\n[wjdot]");
        let _ = match self.wjdot.beta {
            BetaChoice::Fixed(b) => writeln!(s, "beta = {}", toml_float(b)),
            BetaChoice::Validate => writeln!(s, "beta = \"validate\""),
        };
        let _ = writeln!(s, "step_alpha = {}", toml_float(self.wjdot.step_alpha));
        let _ = writeln!(s, "step_theta = {}", toml_float(self.wjdot.step_theta));
        let _ = writeln!(s, "max_iters = {}", self.wjdot.max_iters);
        let _ = writeln!(s, "patience = {}", self.wjdot.patience);
        let _ = writeln!(s, "validation = {:?}", self.wjdot.validation.name());
        let _ = writeln!(s, "label_loss = {:?}", self.wjdot.label_loss.name());
        let _ = writeln!(s, "refresh = {}", self.wjdot.refresh);
        let _ = writeln!(s, "alpha_decay = {}", self.wjdot.alpha_decay);
        let _ = writeln!(s, "hidden = {}", usize_list(&self.wjdot.hidden));
        let _ = writeln!(s, "activation = {:?}", self.wjdot.activation.name());

        let _ = writeln!(s, "\n[erm]");
        let _ = writeln!(s, "steps = {}", self.erm.steps);
        let _ = writeln!(s, "learning_rate = {}", toml_float(self.erm.learning_rate));
        let _ = writeln!(s, "hidden = {}", usize_list(&self.erm.hidden));
        let _ = writeln!(s, "activation = {:?}", self.erm.activation.name());

        let _ = writeln!(s, "\n[embedding]");
        let _ = writeln!(
            s,
            "kind = {:?}",
            match self.embedding.kind {
                EmbeddingKind::Identity => "identity",
                EmbeddingKind::Mtl => "mtl",
            }
        );
        let _ = writeln!(s, "hidden = {}", usize_list(&self.embedding.hidden));
        let _ = writeln!(s, "steps = {}", self.embedding.steps);
        let _ = writeln!(s, "learning_rate = {}", toml_float(self.embedding.learning_rate));
        s
    }
}
