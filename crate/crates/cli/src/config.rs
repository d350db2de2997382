//! Run configuration: flat `key = value` lines grouped under `[section]`
//! headers. Keys before the first header belong to `[train]`. `#` starts a
//! comment.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::str::FromStr;

use flatopt::flatness::{BallResolution, LandscapeConfig};
use flatopt::math::{AsamRule, FisherRule};
use flatopt::optim::StepSchedule;
use flatopt::pacbayes::{BoundInputs, GammaForm};
use flatopt::train::{DatasetSpec, EpochParity, TrainConfig};

use crate::error::ConfigError;

/// Section name to key/value pairs, both in sorted order.
pub type Sections = BTreeMap<String, BTreeMap<String, String>>;

const TRAIN_KEYS: &[&str] = &[
    "optimizer",
    "rho",
    "sigma0",
    "lr",
    "lr_sigma",
    "momentum",
    "weight_decay",
    "label_smoothing",
    "schedule",
    "epochs",
    "batch_size",
    "seed",
    "asam_rule",
    "fisher_rule",
    "fisher_damping",
    "epoch_parity",
    "hidden",
];
const DATASET_KEYS: &[&str] = &["generator", "n", "n_test", "noise", "k", "spread"];
const LANDSCAPE_KEYS: &[&str] = &[
    "rho",
    "grid_scale",
    "lo",
    "hi",
    "resolution",
    "mc_samples",
    "seed",
    "ball",
    "sharp_center",
    "flat_center",
    "sharp_depth",
    "flat_depth",
    "sharp_width",
    "flat_width",
    "confinement",
];
const BOUND_KEYS: &[&str] = &["p", "n", "delta", "empirical_sam_loss", "kl", "l_max", "c_cover", "gamma_form"];

const SECTIONS: &[(&str, &[&str])] = &[
    ("train", TRAIN_KEYS),
    ("dataset", DATASET_KEYS),
    ("landscape", LANDSCAPE_KEYS),
    ("bound", BOUND_KEYS),
];

pub fn parse_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut out = Sections::new();
    let mut section = "train";
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.split('#').next().unwrap_or("").trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line,
                message: format!("unterminated section header {s:?}"),
            })?;
            let name = name.trim();
            section = SECTIONS
                .iter()
                .map(|(n, _)| *n)
                .find(|n| *n == name)
                .ok_or_else(|| ConfigError::UnknownSection {
                    section: name.to_string(),
                    line,
                })?;
            continue;
        }
        let (key, value) = s.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line,
            message: format!("expected `key = value`, got {s:?}"),
        })?;
        let key = key.trim();
        let known = SECTIONS.iter().find(|(n, _)| *n == section).map_or(&[][..], |(_, k)| *k);
        if !known.contains(&key) {
            return Err(ConfigError::UnknownKey {
                key: key.to_string(),
                section: section.to_string(),
                line,
            });
        }
        let entries = out.entry(section.to_string()).or_default();
        if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(ConfigError::DuplicateKey {
                key: key.to_string(),
                section: section.to_string(),
                line,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundSettings {
    pub inputs: BoundInputs,
    pub c_cover: f64,
    pub gamma_form: GammaForm,
}

impl Default for BoundSettings {
    fn default() -> Self {
        Self {
            inputs: BoundInputs {
                p: 2,
                n: 100,
                delta: 0.05,
                empirical_sam_loss: 0.0,
                kl_value: 0.0,
                l_max: 1.0,
            },
            c_cover: 1.0,
            gamma_form: GammaForm::Main,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Config {
    pub train: TrainConfig,
    pub landscape: LandscapeConfig,
    pub bound: BoundSettings,
}

fn bad(key: &str, value: &str, reason: impl ToString) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

/// Typed lookups into one section, each error naming its key.
struct Fields<'a> {
    map: Option<&'a BTreeMap<String, String>>,
}

impl Fields<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.map.and_then(|m| m.get(key)).map(String::as_str)
    }

    fn with<T>(&self, key: &str, default: T, f: impl FnOnce(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => f(v).map_err(|reason| bad(key, v, reason)),
        }
    }

    fn parsed<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: ToString,
    {
        self.with(key, default, |v| v.parse::<T>().map_err(|e| e.to_string()))
    }

    fn real(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        self.with(key, default, |v| match v.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            Ok(_) => Err("must be finite".into()),
            Err(e) => Err(e.to_string()),
        })
    }

    fn pair(&self, key: &str, default: [f64; 2]) -> Result<[f64; 2], ConfigError> {
        self.with(key, default, |v| {
            let parts: Vec<f64> = v
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            match parts[..] {
                [x, y] if x.is_finite() && y.is_finite() => Ok([x, y]),
                _ => Err("expected two finite numbers `x,y`".into()),
            }
        })
    }

    fn choice<T: Copy>(&self, key: &str, default: T, options: &[(&str, T)]) -> Result<T, ConfigError> {
        self.with(key, default, |v| {
            options.iter().find(|(n, _)| *n == v).map(|(_, t)| *t).ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
                format!("expected one of {}", names.join(", "))
            })
        })
    }

    fn reject(&self, key: &str, reason: &str) -> Result<(), ConfigError> {
        match self.raw(key) {
            Some(v) => Err(bad(key, v, reason)),
            None => Ok(()),
        }
    }
}

const ASAM_RULES: &[(&str, AsamRule)] = &[("table1", AsamRule::InverseMagnitude), ("weight_squared", AsamRule::WeightSquared)];
const FISHER_RULES: &[(&str, FisherRule)] = &[("direct", FisherRule::Direct), ("inverse", FisherRule::Inverse)];
const GAMMA_FORMS: &[(&str, GammaForm)] = &[("main", GammaForm::Main), ("appendix", GammaForm::Linear)];

fn ball_resolutions() -> [(&'static str, BallResolution); 2] {
    [("coarse", BallResolution::coarse()), ("dense", BallResolution::dense())]
}

fn name_of<T: PartialEq + Debug>(options: &[(&'static str, T)], value: &T) -> String {
    options
        .iter()
        .find(|(_, t)| t == value)
        .map_or_else(|| format!("{value:?}"), |(n, _)| n.to_string())
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::from_sections(&parse_sections(text)?)
    }

    pub fn from_sections(sections: &Sections) -> Result<Self, ConfigError> {
        let get = |name: &str| Fields { map: sections.get(name) };
        let d = Config::default();

        let t = get("train");
        let mut train = d.train.clone();
        train.optimizer = t.parsed("optimizer", train.optimizer)?;
        let h = &mut train.hyper;
        h.rho = t.real("rho", h.rho)?;
        h.sigma0 = t.with("sigma0", h.sigma0, |v| match v {
            "auto" => Ok(None),
            _ => match v.parse::<f64>() {
                Ok(s) if s > 0.0 && s.is_finite() => Ok(Some(s)),
                Ok(_) => Err("must be positive".into()),
                Err(e) => Err(e.to_string()),
            },
        })?;
        h.lr = t.real("lr", h.lr)?;
        h.lr_sigma = t.real("lr_sigma", h.lr_sigma)?;
        h.momentum = t.real("momentum", h.momentum)?;
        h.weight_decay = t.real("weight_decay", h.weight_decay)?;
        h.schedule = t.parsed::<StepSchedule>("schedule", h.schedule.clone())?;
        h.seed = t.parsed("seed", h.seed)?;
        h.asam_rule = t.choice("asam_rule", h.asam_rule, ASAM_RULES)?;
        h.fisher_rule = t.choice("fisher_rule", h.fisher_rule, FISHER_RULES)?;
        h.fisher_damping = t.real("fisher_damping", h.fisher_damping)?;
        train.label_smoothing = t.real("label_smoothing", train.label_smoothing)?;
        train.epochs = t.parsed("epochs", train.epochs)?;
        train.batch_size = t.parsed("batch_size", train.batch_size)?;
        train.epoch_parity = t.parsed::<EpochParity>("epoch_parity", train.epoch_parity)?;
        train.hidden = t.with("hidden", train.hidden, |v| {
            v.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| match s.parse::<usize>() {
                    Ok(0) => Err("layer widths must be positive".to_string()),
                    Ok(w) => Ok(w),
                    Err(e) => Err(e.to_string()),
                })
                .collect()
        })?;
        for (key, ok) in [
            ("rho", h.rho >= 0.0),
            ("lr", h.lr >= 0.0),
            ("lr_sigma", h.lr_sigma >= 0.0),
            ("momentum", (0.0..1.0).contains(&h.momentum)),
            ("weight_decay", h.weight_decay >= 0.0),
            ("fisher_damping", h.fisher_damping > 0.0),
            ("label_smoothing", (0.0..1.0).contains(&train.label_smoothing)),
            ("epochs", train.epochs > 0),
            ("batch_size", train.batch_size > 0),
        ] {
            if !ok {
                return Err(bad(key, t.raw(key).unwrap_or(""), "out of range"));
            }
        }

        let ds = get("dataset");
        let generator = ds.choice("generator", "two_moons", &[("two_moons", "two_moons"), ("blobs", "blobs")])?;
        let n = ds.parsed("n", train.dataset.n())?;
        if n < 2 {
            return Err(bad("n", ds.raw("n").unwrap_or(""), "need at least 2 samples"));
        }
        train.n_test = ds.parsed("n_test", train.n_test)?;
        train.dataset = match generator {
            "two_moons" => {
                ds.reject("k", "only applies to generator = blobs")?;
                ds.reject("spread", "only applies to generator = blobs")?;
                DatasetSpec::TwoMoons {
                    n,
                    noise: ds.real("noise", 0.1)?,
                }
            }
            _ => {
                ds.reject("noise", "only applies to generator = two_moons")?;
                DatasetSpec::Blobs {
                    n,
                    k: ds.parsed("k", 3)?,
                    spread: ds.real("spread", 0.5)?,
                }
            }
        };

        let l = get("landscape");
        let mut landscape = d.landscape.clone();
        landscape.rho = l.real("rho", landscape.rho)?;
        landscape.grid_scale = l.real("grid_scale", landscape.grid_scale)?;
        landscape.lo = l.real("lo", landscape.lo)?;
        landscape.hi = l.real("hi", landscape.hi)?;
        landscape.resolution = l.parsed("resolution", landscape.resolution)?;
        landscape.mc_samples = l.parsed("mc_samples", landscape.mc_samples)?;
        landscape.seed = l.parsed("seed", landscape.seed)?;
        landscape.ball = l.choice("ball", landscape.ball, &ball_resolutions())?;
        let toy = &mut landscape.toy;
        toy.sharp_center = l.pair("sharp_center", toy.sharp_center)?;
        toy.flat_center = l.pair("flat_center", toy.flat_center)?;
        toy.sharp_depth = l.real("sharp_depth", toy.sharp_depth)?;
        toy.flat_depth = l.real("flat_depth", toy.flat_depth)?;
        toy.sharp_width = l.real("sharp_width", toy.sharp_width)?;
        toy.flat_width = l.real("flat_width", toy.flat_width)?;
        toy.confinement = l.real("confinement", toy.confinement)?;

        let b = get("bound");
        let mut bound = d.bound.clone();
        let inputs = &mut bound.inputs;
        inputs.p = b.parsed("p", inputs.p)?;
        inputs.n = b.parsed("n", inputs.n)?;
        inputs.delta = b.real("delta", inputs.delta)?;
        inputs.empirical_sam_loss = b.real("empirical_sam_loss", inputs.empirical_sam_loss)?;
        inputs.kl_value = b.real("kl", inputs.kl_value)?;
        inputs.l_max = b.real("l_max", inputs.l_max)?;
        bound.c_cover = b.real("c_cover", bound.c_cover)?;
        bound.gamma_form = b.choice("gamma_form", bound.gamma_form, GAMMA_FORMS)?;

        Ok(Config { train, landscape, bound })
    }

    /// Every resolved key, in a form [`Config::from_sections`] reads back
    /// to an equal config.
    pub fn to_sections(&self) -> Sections {
        fn real(x: f64) -> String {
            format!("{x:?}")
        }
        let mut out = Sections::new();
        let mut put = |section: &str, key: &str, value: String| {
            out.entry(section.to_string()).or_default().insert(key.to_string(), value);
        };

        let t = &self.train;
        let h = &t.hyper;
        put("train", "optimizer", t.optimizer.to_string());
        put("train", "rho", real(h.rho));
        put("train", "sigma0", h.sigma0.map_or_else(|| "auto".into(), real));
        put("train", "lr", real(h.lr));
        put("train", "lr_sigma", real(h.lr_sigma));
        put("train", "momentum", real(h.momentum));
        put("train", "weight_decay", real(h.weight_decay));
        put("train", "label_smoothing", real(t.label_smoothing));
        put("train", "schedule", h.schedule.to_string());
        put("train", "epochs", t.epochs.to_string());
        put("train", "batch_size", t.batch_size.to_string());
        put("train", "seed", h.seed.to_string());
        put("train", "asam_rule", name_of(ASAM_RULES, &h.asam_rule));
        put("train", "fisher_rule", name_of(FISHER_RULES, &h.fisher_rule));
        put("train", "fisher_damping", real(h.fisher_damping));
        put("train", "epoch_parity", t.epoch_parity.to_string());
        let hidden: Vec<String> = t.hidden.iter().map(|w| w.to_string()).collect();
        put("train", "hidden", hidden.join(","));

        put("dataset", "generator", t.dataset.name().to_string());
        put("dataset", "n", t.dataset.n().to_string());
        put("dataset", "n_test", t.n_test.to_string());
        match t.dataset {
            DatasetSpec::TwoMoons { noise, .. } => put("dataset", "noise", real(noise)),
            DatasetSpec::Blobs { k, spread, .. } => {
                put("dataset", "k", k.to_string());
                put("dataset", "spread", real(spread));
            }
        }

        let l = &self.landscape;
        let pair = |p: [f64; 2]| format!("{:?},{:?}", p[0], p[1]);
        put("landscape", "rho", real(l.rho));
        put("landscape", "grid_scale", real(l.grid_scale));
        put("landscape", "lo", real(l.lo));
        put("landscape", "hi", real(l.hi));
        put("landscape", "resolution", l.resolution.to_string());
        put("landscape", "mc_samples", l.mc_samples.to_string());
        put("landscape", "seed", l.seed.to_string());
        put("landscape", "ball", name_of(&ball_resolutions(), &l.ball));
        put("landscape", "sharp_center", pair(l.toy.sharp_center));
        put("landscape", "flat_center", pair(l.toy.flat_center));
        put("landscape", "sharp_depth", real(l.toy.sharp_depth));
        put("landscape", "flat_depth", real(l.toy.flat_depth));
        put("landscape", "sharp_width", real(l.toy.sharp_width));
        put("landscape", "flat_width", real(l.toy.flat_width));
        put("landscape", "confinement", real(l.toy.confinement));

        let b = &self.bound;
        put("bound", "p", b.inputs.p.to_string());
        put("bound", "n", b.inputs.n.to_string());
        put("bound", "delta", real(b.inputs.delta));
        put("bound", "empirical_sam_loss", real(b.inputs.empirical_sam_loss));
        put("bound", "kl", real(b.inputs.kl_value));
        put("bound", "l_max", real(b.inputs.l_max));
        put("bound", "c_cover", real(b.c_cover));
        put("bound", "gamma_form", name_of(GAMMA_FORMS, &b.gamma_form));
        out
    }

    /// Renders sections as config-file text.
    pub fn render(sections: &Sections) -> String {
        let mut s = String::new();
        for (name, entries) in sections {
            s.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                s.push_str(&format!("{k} = {v}\n"));
            }
            s.push('\n');
        }
        s
    }

    /// `--seed` override: applies to training and to the landscape.
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(seed) = seed {
            self.train.hyper.seed = seed;
            self.landscape.seed = seed;
        }
        self
    }
}
