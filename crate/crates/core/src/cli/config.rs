//! Run configuration: defaults, then a `key = value` file, then flags.

use crate::align::MaskNorm;
use crate::error::{Error, Result};
use crate::quality::{DEFAULT_MIN_RUN, DEFAULT_SMOOTH_SIGMA};
use crate::templates::{build_library, default_scales, default_shapes, read_library_file, TemplateLibrary};
use crate::track::{PipelineConfig, StepRule, DEFAULT_ETA};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    /// Template library file; the built-in library when absent.
    pub templates: Option<PathBuf>,
    /// Rotation step of the built-in library, degrees.
    pub rotation_step: f64,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub svm_c: f64,
    pub smooth_sigma: f64,
    pub min_run: usize,
    pub unordered: bool,
    pub balance: bool,
    pub overlay: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            pipeline: PipelineConfig::default(),
            templates: None,
            rotation_step: 15.0,
            seed: None,
            jobs: None,
            svm_c: 1.0,
            smooth_sigma: DEFAULT_SMOOTH_SIGMA,
            min_run: DEFAULT_MIN_RUN,
            unordered: false,
            balance: false,
            overlay: false,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::invalid(format!("bad value {value:?} for {key}")))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = num(key, value)?;
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::invalid(format!("{key} must be positive")));
    }
    Ok(v)
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::invalid(format!("bad boolean {value:?} for {key}"))),
    }
}

impl RunConfig {
    /// Sets one configuration key.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.pipeline;
        match key {
            "lambda1" => p.align.lambda1 = positive(key, value)?,
            "lambda2" => p.align.lambda2 = positive(key, value)?,
            "lambda3" => p.align.lambda3 = positive(key, value)?,
            "c" => p.align.c = positive(key, value)?,
            "alpha1" => p.align.alpha1 = positive(key, value)?,
            "mask-norm" => {
                p.align.mask_norm = match value.trim() {
                    "frame" => MaskNorm::Frame,
                    v => MaskNorm::Area(positive(key, v)?),
                }
            }
            "mu1" => p.track.mu1 = positive(key, value)?,
            "mu2" => p.track.mu2 = positive(key, value)?,
            "alpha2" => p.track.alpha2 = positive(key, value)?,
            "max-iters" => p.track.max_iters = num(key, value)?,
            "conv-eps" => p.track.conv_eps = positive(key, value)?,
            "min-leaf-area" => p.track.min_leaf_area = num(key, value)?,
            "step-rule" => {
                p.track.step = match value.trim() {
                    "plain" => StepRule::Plain,
                    "preconditioned" => match p.track.step {
                        StepRule::Preconditioned { eta } => StepRule::Preconditioned { eta },
                        StepRule::Plain => StepRule::Preconditioned { eta: DEFAULT_ETA },
                    },
                    v => return Err(Error::invalid(format!("unknown step rule {v:?}"))),
                }
            }
            "eta" => {
                let eta = positive(key, value)?;
                if let StepRule::Preconditioned { .. } = p.track.step {
                    p.track.step = StepRule::Preconditioned { eta };
                } else {
                    log::warn!("eta ignored under the plain step rule");
                }
            }
            "overlap-min" => {
                let v: f64 = num(key, value)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::invalid("overlap-min must lie in [0, 1]"));
                }
                p.overlap_min = v;
            }
            "edge-threshold" => {
                let v: f64 = num(key, value)?;
                if !(v > 0.0 && v < 1.0) {
                    return Err(Error::invalid("edge-threshold must lie in (0, 1)"));
                }
                p.edge_threshold = v;
            }
            "templates" => self.templates = Some(PathBuf::from(value.trim())),
            "rotation-step" => self.rotation_step = positive(key, value)?,
            "seed" => self.seed = Some(num(key, value)?),
            "jobs" => {
                let j: usize = num(key, value)?;
                if j == 0 {
                    return Err(Error::invalid("jobs must be at least 1"));
                }
                self.jobs = Some(j);
            }
            "svm-c" => self.svm_c = positive(key, value)?,
            "smooth-sigma" => self.smooth_sigma = positive(key, value)?,
            "min-run" => self.min_run = num(key, value)?,
            "unordered" => self.unordered = boolean(key, value)?,
            "balance" => self.balance = boolean(key, value)?,
            "overlay" => self.overlay = boolean(key, value)?,
            _ => return Err(Error::invalid(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a `key = value` file. Blank lines and `#` comments are
    /// skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("cannot read config {}", path.display()), e))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::format(format!("{}:{}", path.display(), n + 1), "expected key = value")
            })?;
            self.apply(key.trim(), value.trim()).map_err(|e| match e {
                Error::InvalidArgument(m) => Error::format(format!("{}:{}", path.display(), n + 1), m),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn library(&self) -> Result<TemplateLibrary> {
        match &self.templates {
            Some(path) => read_library_file(path),
            None => build_library(default_shapes(), default_scales(), self.rotation_step),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let c = RunConfig::default().pipeline;
        assert_eq!((c.align.lambda1, c.align.lambda2, c.align.lambda3), (5.0, 10.0, 125.0));
        assert_eq!((c.align.c, c.align.alpha1), (3.0, 0.001));
        assert_eq!((c.track.mu1, c.track.mu2, c.track.alpha2), (1.0, 10.0, 0.001));
        assert_eq!((c.track.max_iters, c.track.min_leaf_area), (80, 64));
        assert_eq!(c.overlap_min, 0.85);
    }

    #[test]
    fn file_then_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# weights\nlambda1 = 2.5\nmask-norm = frame\n\nstep-rule = plain\n").unwrap();
        let mut c = RunConfig::default();
        c.apply_file(&path).unwrap();
        c.apply("lambda1", "7").unwrap();
        assert_eq!(c.pipeline.align.lambda1, 7.0);
        assert_eq!(c.pipeline.align.mask_norm, MaskNorm::Frame);
        assert_eq!(c.pipeline.track.step, StepRule::Plain);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = RunConfig::default();
        assert!(c.apply("lambda9", "1").is_err());
        assert!(c.apply("lambda1", "-1").is_err());
        assert!(c.apply("overlap-min", "1.5").is_err());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.conf");
        std::fs::write(&path, "lambda1 5\n").unwrap();
        assert_eq!(c.apply_file(&path).unwrap_err().exit_code(), 2);
    }
}
