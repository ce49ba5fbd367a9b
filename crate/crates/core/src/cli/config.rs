//! Flat `key = value` experiment files.
//!
//! ```text
//! # comment
//! kind = sweep
//! output = sweep.csv
//! quantizer = simvq
//! codebook_sizes = 64, 256, 1024
//! ```
//!
//! Every key is optional except `kind`. Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::{DatasetKind, DatasetSpec, ToySpec};
use crate::error::{Result, VqError};
use crate::quantizers::{CodebookInit, FsqLevels};
use crate::training::{BasisInit, OptimizerKind, QuantizerKind, TrainConfig};

pub const DEFAULT_EMA_DECAY: f64 = 0.99;

#[derive(Clone, Debug, PartialEq)]
pub enum Experiment {
    Train(TrainConfig),
    Toy(ToySpec),
    /// One training run per codebook size, otherwise sharing `base`.
    Sweep {
        base: TrainConfig,
        codebook_sizes: Vec<usize>,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Train(_) => "train",
            Experiment::Toy(_) => "toy",
            Experiment::Sweep { .. } => "sweep",
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        match self {
            Experiment::Train(cfg) | Experiment::Sweep { base: cfg, .. } => cfg.seed = seed,
            Experiment::Toy(spec) => spec.seed = seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentFile {
    pub experiment: Experiment,
    /// Output CSV. Sweeps insert `_K<size>` before the extension.
    pub output: PathBuf,
}

const TOY_KEYS: &[&str] = &["variant", "steps", "eta", "seed", "noise_std"];

const TRAIN_KEYS: &[&str] = &[
    "seed",
    "epochs",
    "eta",
    "optimizer",
    "beta_enc",
    "beta_code",
    "batch_size",
    "codebook_size",
    "latent_dim",
    "hidden_width",
    "quantizer",
    "ema_decay",
    "fsq_levels",
    "fc_dim",
    "codebook_init",
    "codebook_frozen",
    "basis_init",
    "rank_tol",
    "psnr_peak",
    "data_kind",
    "data_dim",
    "data_modes",
    "data_spread",
    "data_center_scale",
    "train_points",
    "val_points",
];

struct Entry {
    value: String,
    line: usize,
}

struct Fields<'a> {
    path: &'a str,
    entries: BTreeMap<String, Entry>,
}

impl Fields<'_> {
    fn err(&self, line: usize, msg: impl Into<String>) -> VqError {
        VqError::Config {
            path: self.path.to_string(),
            line,
            msg: msg.into(),
        }
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse()
                .map(Some)
                .map_err(|err| self.err(e.line, format!("bad value for `{key}`: {err}"))),
        }
    }

    fn set<T: FromStr>(&self, key: &str, slot: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = self.get(key)? {
            *slot = v;
        }
        Ok(())
    }

    fn list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|err| self.err(e.line, format!("bad list for `{key}`: {err}"))),
        }
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.line)
    }
}

/// Parses an experiment file. `path` only labels diagnostics.
pub fn parse_experiment(text: &str, path: &str) -> Result<ExperimentFile> {
    let mut fields = Fields {
        path,
        entries: BTreeMap::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(fields.err(line, format!("expected `key = value`, got `{content}`")));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(fields.err(line, "empty key"));
        }
        if let Some(prev) = fields.entries.get(key) {
            return Err(fields.err(
                line,
                format!("duplicate key `{key}` (first set on line {})", prev.line),
            ));
        }
        fields.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }

    let kind: String = fields
        .get("kind")?
        .ok_or_else(|| fields.err(0, "missing `kind` (train, toy or sweep)"))?;
    let allowed: Vec<&str> = match kind.as_str() {
        "toy" => TOY_KEYS.to_vec(),
        "train" => TRAIN_KEYS.to_vec(),
        "sweep" => TRAIN_KEYS
            .iter()
            .copied()
            .filter(|&k| k != "codebook_size")
            .chain(["codebook_sizes"])
            .collect(),
        other => {
            return Err(fields.err(
                fields.line("kind"),
                format!("unknown kind `{other}` (expected train, toy or sweep)"),
            ))
        }
    };
    for (key, e) in &fields.entries {
        if key != "kind" && key != "output" && !allowed.contains(&key.as_str()) {
            return Err(fields.err(e.line, format!("unknown key `{key}` for kind {kind}")));
        }
    }

    let output = fields
        .get::<String>("output")?
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(format!("{kind}.csv")));

    let experiment = match kind.as_str() {
        "toy" => {
            let mut spec = ToySpec::default();
            fields.set("variant", &mut spec.variant)?;
            fields.set("steps", &mut spec.steps)?;
            fields.set("eta", &mut spec.eta)?;
            fields.set("seed", &mut spec.seed)?;
            fields.set("noise_std", &mut spec.noise_std)?;
            spec.validate().map_err(|e| fields.err(0, e.to_string()))?;
            Experiment::Toy(spec)
        }
        "train" => Experiment::Train(parse_train(&fields)?),
        _ => {
            let base = parse_train(&fields)?;
            let codebook_sizes = fields
                .list("codebook_sizes")?
                .ok_or_else(|| fields.err(0, "sweep needs `codebook_sizes`"))?;
            if codebook_sizes.is_empty() || codebook_sizes.contains(&0) {
                return Err(fields.err(
                    fields.line("codebook_sizes"),
                    "codebook_sizes must be non-empty and >= 1",
                ));
            }
            Experiment::Sweep {
                base,
                codebook_sizes,
            }
        }
    };
    Ok(ExperimentFile { experiment, output })
}

fn parse_train(f: &Fields<'_>) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    f.set("seed", &mut cfg.seed)?;
    f.set("epochs", &mut cfg.epochs)?;
    f.set("eta", &mut cfg.eta)?;
    f.set::<OptimizerKind>("optimizer", &mut cfg.optimizer)?;
    f.set("beta_enc", &mut cfg.beta_enc)?;
    f.set("beta_code", &mut cfg.beta_code)?;
    f.set("batch_size", &mut cfg.batch_size)?;
    f.set("codebook_size", &mut cfg.codebook_size)?;
    f.set("latent_dim", &mut cfg.latent_dim)?;
    f.set("hidden_width", &mut cfg.hidden_width)?;
    f.set::<CodebookInit>("codebook_init", &mut cfg.codebook_init)?;
    f.set("codebook_frozen", &mut cfg.codebook_frozen)?;
    f.set::<BasisInit>("basis_init", &mut cfg.basis_init)?;
    f.set("rank_tol", &mut cfg.rank_tol)?;
    if let Some(peak) = f.get::<String>("psnr_peak")? {
        cfg.psnr_peak = match peak.as_str() {
            "auto" => None,
            v => Some(v.parse().map_err(|e| {
                f.err(
                    f.line("psnr_peak"),
                    format!("bad value for `psnr_peak`: {e}"),
                )
            })?),
        };
    }

    let mut data = DatasetSpec::default();
    f.set::<DatasetKind>("data_kind", &mut data.kind)?;
    f.set("data_dim", &mut data.dim)?;
    f.set("data_modes", &mut data.modes)?;
    f.set("data_spread", &mut data.spread)?;
    f.set("data_center_scale", &mut data.center_scale)?;
    f.set("train_points", &mut data.train_points)?;
    f.set("val_points", &mut data.val_points)?;
    cfg.dataset = data;

    let quantizer: String = f.get("quantizer")?.unwrap_or_else(|| "simvq".into());
    let only_for = |key: &str, q: &str| -> Result<()> {
        if f.entries.contains_key(key) && quantizer != q {
            return Err(f.err(f.line(key), format!("`{key}` requires quantizer = {q}")));
        }
        Ok(())
    };
    only_for("ema_decay", "ema")?;
    only_for("fsq_levels", "fsq")?;
    only_for("fc_dim", "fc")?;
    cfg.quantizer = match quantizer.as_str() {
        "vanilla" => QuantizerKind::Vanilla,
        "simvq" => QuantizerKind::SimVq,
        "ema" => QuantizerKind::Ema {
            decay: f.get("ema_decay")?.unwrap_or(DEFAULT_EMA_DECAY),
        },
        "fsq" => {
            let levels = f
                .list("fsq_levels")?
                .ok_or_else(|| f.err(f.line("quantizer"), "quantizer = fsq needs `fsq_levels`"))?;
            QuantizerKind::Fsq {
                levels: FsqLevels::new(levels)
                    .map_err(|e| f.err(f.line("fsq_levels"), e.to_string()))?,
            }
        }
        "lfq" => QuantizerKind::Lfq,
        "fc" => QuantizerKind::Fc {
            dim: f.get("fc_dim")?.unwrap_or(cfg.latent_dim),
        },
        other => return Err(f.err(f.line("quantizer"), format!("unknown quantizer `{other}`"))),
    };
    cfg.validate().map_err(|e| f.err(0, e.to_string()))?;
    Ok(cfg)
}

fn join(values: &[usize]) -> String {
    values
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

fn write_train(out: &mut String, cfg: &TrainConfig, codebook_sizes: Option<&[usize]>) {
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("seed", cfg.seed.to_string());
    kv("epochs", cfg.epochs.to_string());
    kv("eta", cfg.eta.to_string());
    kv("optimizer", cfg.optimizer.to_string());
    kv("beta_enc", cfg.beta_enc.to_string());
    kv("beta_code", cfg.beta_code.to_string());
    kv("batch_size", cfg.batch_size.to_string());
    match codebook_sizes {
        Some(sizes) => kv("codebook_sizes", join(sizes)),
        None => kv("codebook_size", cfg.codebook_size.to_string()),
    }
    kv("latent_dim", cfg.latent_dim.to_string());
    kv("hidden_width", cfg.hidden_width.to_string());
    kv("quantizer", cfg.quantizer.name().to_string());
    match &cfg.quantizer {
        QuantizerKind::Ema { decay } => kv("ema_decay", decay.to_string()),
        QuantizerKind::Fsq { levels } => kv("fsq_levels", join(levels.as_slice())),
        QuantizerKind::Fc { dim } => kv("fc_dim", dim.to_string()),
        _ => {}
    }
    kv("codebook_init", cfg.codebook_init.to_string());
    kv("codebook_frozen", cfg.codebook_frozen.to_string());
    kv("basis_init", cfg.basis_init.to_string());
    kv("rank_tol", cfg.rank_tol.to_string());
    kv(
        "psnr_peak",
        cfg.psnr_peak
            .map_or_else(|| "auto".to_string(), |p| p.to_string()),
    );
    let d = &cfg.dataset;
    kv("data_kind", d.kind.to_string());
    kv("data_dim", d.dim.to_string());
    kv("data_modes", d.modes.to_string());
    kv("data_spread", d.spread.to_string());
    kv("data_center_scale", d.center_scale.to_string());
    kv("train_points", d.train_points.to_string());
    kv("val_points", d.val_points.to_string());
}

impl ExperimentFile {
    /// Canonical text: every key spelled out, fixed order, no comments.
    /// Parsing it yields `self` again.
    pub fn to_canonical(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "kind = {}", self.experiment.kind());
        let _ = writeln!(out, "output = {}", self.output.display());
        match &self.experiment {
            Experiment::Toy(spec) => {
                let _ = writeln!(out, "variant = {}", spec.variant);
                let _ = writeln!(out, "steps = {}", spec.steps);
                let _ = writeln!(out, "eta = {}", spec.eta);
                let _ = writeln!(out, "seed = {}", spec.seed);
                let _ = writeln!(out, "noise_std = {}", spec.noise_std);
            }
            Experiment::Train(cfg) => write_train(&mut out, cfg, None),
            Experiment::Sweep {
                base,
                codebook_sizes,
            } => write_train(&mut out, base, Some(codebook_sizes)),
        }
        out
    }
}

/// Canonical form of experiment-file text.
pub fn canonicalize(text: &str) -> Result<String> {
    parse_experiment(text, "<text>").map(|f| f.to_canonical())
}

/// Reads an experiment file. A missing `path` falls back to `path.cfg`.
pub fn load_experiment(path: &Path) -> Result<(PathBuf, ExperimentFile)> {
    let resolved = if path.is_file() {
        path.to_path_buf()
    } else {
        let mut with_ext = path.as_os_str().to_owned();
        with_ext.push(".cfg");
        let with_ext = PathBuf::from(with_ext);
        if with_ext.is_file() {
            with_ext
        } else {
            return Err(VqError::io(
                path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "config file not found"),
            ));
        }
    };
    let text = std::fs::read_to_string(&resolved).map_err(|e| VqError::io(&resolved, e))?;
    let file = parse_experiment(&text, &resolved.display().to_string())?;
    Ok((resolved, file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ToyVariant;

    #[test]
    fn minimal_train_file_uses_defaults() {
        let f = parse_experiment("kind = train\n", "t").unwrap();
        assert_eq!(f.experiment, Experiment::Train(TrainConfig::default()));
        assert_eq!(f.output, PathBuf::from("train.csv"));
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# header\n\nkind = toy   # trailing\nvariant = joint\n";
        let f = parse_experiment(text, "t").unwrap();
        match f.experiment {
            Experiment::Toy(spec) => assert_eq!(spec.variant, ToyVariant::Joint),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_names_line() {
        let err = parse_experiment("kind = train\nlearning_rate = 0.1\n", "cfg").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cfg:2"), "{msg}");
        assert!(msg.contains("learning_rate"), "{msg}");
    }

    #[test]
    fn toy_rejects_train_keys() {
        assert!(parse_experiment("kind = toy\nepochs = 3\n", "t").is_err());
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(parse_experiment("kind = toy\nsteps = 1\nsteps = 2\n", "t").is_err());
    }

    #[test]
    fn missing_kind_rejected() {
        assert!(parse_experiment("steps = 1\n", "t").is_err());
    }

    #[test]
    fn quantizer_specific_keys() {
        assert!(parse_experiment("kind = train\nema_decay = 0.9\n", "t").is_err());
        assert!(parse_experiment("kind = train\nquantizer = fsq\n", "t").is_err());
        let f = parse_experiment(
            "kind = train\nquantizer = fsq\nfsq_levels = 3,3,3,3,3,3,3,3\n",
            "t",
        )
        .unwrap();
        match f.experiment {
            Experiment::Train(cfg) => assert_eq!(cfg.effective_codebook_size(), 6561),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sweep_requires_sizes() {
        assert!(parse_experiment("kind = sweep\n", "t").is_err());
        assert!(
            parse_experiment("kind = sweep\ncodebook_size = 4\ncodebook_sizes = 4\n", "t").is_err()
        );
        let f = parse_experiment("kind = sweep\ncodebook_sizes = 64, 256\n", "t").unwrap();
        match f.experiment {
            Experiment::Sweep { codebook_sizes, .. } => assert_eq!(codebook_sizes, vec![64, 256]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn canonical_is_fixed_point() {
        for text in [
            "kind = toy\nseed = 3\n",
            "kind = train\nquantizer = ema\nema_decay = 0.95\npsnr_peak = 2.5\n",
            "kind = sweep\ncodebook_sizes = 1,2\nquantizer = fc\nfc_dim = 4\n",
        ] {
            let c = canonicalize(text).unwrap();
            assert_eq!(canonicalize(&c).unwrap(), c);
            assert_eq!(
                parse_experiment(&c, "c").unwrap(),
                parse_experiment(text, "t").unwrap()
            );
        }
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(parse_experiment("kind = train\neta = -1\n", "t").is_err());
        assert!(parse_experiment("kind = toy\nnoise_std = fast\n", "t").is_err());
        assert!(parse_experiment("kind = train\nno equals sign\n", "t").is_err());
    }
}
