//! Parsing of `--target` and `--dist` specification strings into core trait
//! objects.
//!
//! Distributions: `exp:<lambda>`, `uniform:<d>`, `twogauss:<d>`, `mixture`.
//! Targets: `mean`, `svm`, `svm:<C>`, `kde`, `kde:<bandwidth>,<k>`,
//! `extern:<path>`. The mean target infers its dimension from the
//! distribution's record width; svm and kde check it.

use sensikit::targets::{
    gen_exponential, gen_gaussian_mixture, gen_two_gaussians, gen_uniform_cube, kde_target,
    mean_target, svm_target, KdeConfig, SvmConfig,
};
use sensikit::{Error, RecordSampler, Result, TargetFunction};

use crate::extern_target::ExternTarget;

pub fn parse_dist(spec: &str) -> Result<Box<dyn RecordSampler>> {
    if let Some(lambda) = spec.strip_prefix("exp:") {
        let lambda = lambda
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("bad exp rate: {e}")))?;
        return Ok(Box::new(gen_exponential(lambda)?));
    }
    if let Some(d) = spec.strip_prefix("uniform:") {
        let d = d.parse::<usize>().map_err(|e| Error::Parse(format!("bad uniform dim: {e}")))?;
        return Ok(Box::new(gen_uniform_cube(d)?));
    }
    if let Some(d) = spec.strip_prefix("twogauss:") {
        let d = d.parse::<usize>().map_err(|e| Error::Parse(format!("bad twogauss dim: {e}")))?;
        return Ok(Box::new(gen_two_gaussians(d)?));
    }
    if spec == "mixture" {
        return Ok(Box::new(gen_gaussian_mixture()));
    }
    Err(Error::Parse(format!(
        "unknown distribution {spec:?} (expected exp:<lambda>, uniform:<d>, twogauss:<d> or mixture)"
    )))
}

/// Record width produced by a distribution spec (features plus any label).
pub fn dist_record_width(spec: &str) -> Result<usize> {
    let dist = parse_dist(spec)?;
    // Probe draw on a throwaway stream; all generators have fixed width.
    let mut rng = sensikit::substream(0, 0);
    Ok(dist.draw(&mut rng).len())
}

pub fn parse_target(spec: &str, n: usize, record_width: usize) -> Result<Box<dyn TargetFunction>> {
    if spec == "mean" {
        return Ok(Box::new(mean_target(record_width, n)));
    }
    if spec == "svm" || spec.starts_with("svm:") {
        let c = match spec.strip_prefix("svm:") {
            Some(c) => c.parse::<f64>().map_err(|e| Error::Parse(format!("bad svm C: {e}")))?,
            None => 3.0,
        };
        if record_width < 2 {
            return Err(Error::Domain("svm needs records of [features..., label]".into()));
        }
        let config = SvmConfig::new(c, record_width - 1)?;
        return Ok(Box::new(svm_target(config, n)));
    }
    if spec == "kde" || spec.starts_with("kde:") {
        let config = match spec.strip_prefix("kde:") {
            Some(rest) => {
                let (bw, k) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::Parse("kde spec is kde:<bandwidth>,<k>".into()))?;
                KdeConfig::new(
                    bw.parse::<f64>().map_err(|e| Error::Parse(format!("bad bandwidth: {e}")))?,
                    k.parse::<usize>().map_err(|e| Error::Parse(format!("bad lattice: {e}")))?,
                )?
            }
            None => KdeConfig::default(),
        };
        if record_width != 1 {
            return Err(Error::DimensionMismatch { expected: 1, got: record_width });
        }
        return Ok(Box::new(kde_target(config, n)));
    }
    if let Some(path) = spec.strip_prefix("extern:") {
        return Ok(Box::new(ExternTarget::new(path.into(), n)));
    }
    Err(Error::Parse(format!(
        "unknown target {spec:?} (expected mean, svm[:C], kde[:bw,k] or extern:<path>)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sensikit::OutputNorm;

    #[test]
    fn dist_widths() {
        assert_eq!(dist_record_width("exp:1").unwrap(), 1);
        assert_eq!(dist_record_width("uniform:3").unwrap(), 3);
        assert_eq!(dist_record_width("twogauss:2").unwrap(), 3);
        assert_eq!(dist_record_width("mixture").unwrap(), 1);
        assert!(dist_record_width("zipf:2").is_err());
        assert!(dist_record_width("exp:-1").is_err());
    }

    #[test]
    fn target_arities() {
        assert_eq!(parse_target("mean", 10, 2).unwrap().arity(), 10);
        let svm = parse_target("svm:0.5", 20, 3).unwrap();
        assert_eq!(svm.arity(), 20);
        assert_eq!(svm.output_norm(), OutputNorm::L1);
        let kde = parse_target("kde:0.1,5", 30, 1).unwrap();
        assert_eq!(kde.output_norm(), OutputNorm::LatticeSup);
        assert!(parse_target("kde", 30, 2).is_err());
        assert!(parse_target("median", 10, 1).is_err());
    }
}
