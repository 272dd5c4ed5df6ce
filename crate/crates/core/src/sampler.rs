//! The sensitivity sampler: draw databases of n+1 records, measure the
//! output-norm change between the two induced neighbours, and expose order
//! statistics and the empirical CDF of the measurements.

use std::io::{BufRead, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// A database record: a fixed-width vector of reals. For labelled targets
/// (e.g. the SVM) the label rides in the last coordinate.
pub type Record = Vec<f64>;

/// Norm applied to the difference of two target outputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputNorm {
    L1,
    L2,
    Linf,
    /// Sup over lattice points of a lattice-valued function; numerically the
    /// same as Linf on the flattened lattice vector.
    LatticeSup,
}

impl OutputNorm {
    pub fn id(&self) -> &'static str {
        match self {
            OutputNorm::L1 => "l1",
            OutputNorm::L2 => "l2",
            OutputNorm::Linf => "linf",
            OutputNorm::LatticeSup => "lattice_sup",
        }
    }

    pub fn from_id(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(OutputNorm::L1),
            "l2" => Ok(OutputNorm::L2),
            "linf" => Ok(OutputNorm::Linf),
            "lattice_sup" => Ok(OutputNorm::LatticeSup),
            other => Err(Error::Parse(format!("unknown norm {other:?}"))),
        }
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        match self {
            OutputNorm::L1 => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            OutputNorm::L2 => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            OutputNorm::Linf | OutputNorm::LatticeSup => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max),
        }
    }
}

/// A deterministic target function f mapping an n-record database to a
/// finite output vector measured under a declared norm.
///
/// Implementations must be pure: identical record lists must yield identical
/// outputs bit for bit, and concurrent read-only use must be safe.
pub trait TargetFunction: Sync {
    /// Number of records per database.
    fn arity(&self) -> usize;
    fn output_norm(&self) -> OutputNorm;
    /// Short label recorded in sample provenance.
    fn label(&self) -> String;
    fn eval(&self, records: &[Record]) -> Result<Vec<f64>>;
    /// Analytic global sensitivity bound, when one is known for the declared
    /// record domain. Sampled sensitivities never exceed it.
    fn global_bound(&self) -> Option<f64> {
        None
    }
}

/// An i.i.d. record distribution P, drawn through a caller-owned RNG stream.
pub trait RecordSampler: Sync {
    fn draw(&self, rng: &mut dyn RngCore) -> Record;
    fn description(&self) -> String;
}

/// Counter-based RNG substream: a pure function of (master seed, index), so
/// parallel scheduling cannot change which numbers an iteration sees.
pub fn substream(master_seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Sorted sensitivity measurements with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivitySample {
    values: Vec<f64>,
    n: usize,
    norm: OutputNorm,
    master_seed: u64,
    target_label: String,
}

impl SensitivitySample {
    /// Builds a sample from raw measurements, sorting them ascending.
    pub fn from_measurements(
        mut values: Vec<f64>,
        n: usize,
        norm: OutputNorm,
        master_seed: u64,
        target_label: String,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Domain("sample must hold at least one value".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: i });
        }
        if values.iter().any(|v| *v < 0.0) {
            return Err(Error::Domain("sensitivity values must be nonnegative".into()));
        }
        values.sort_by(f64::total_cmp);
        Ok(Self { values, n, norm, master_seed, target_label })
    }

    /// Sorted measurements G_(1) <= ... <= G_(m).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn norm(&self) -> OutputNorm {
        self.norm
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn target_label(&self) -> &str {
        &self.target_label
    }

    /// Serializes as a one-line header plus one shortest-representation
    /// decimal per line, ascending.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "sensikit-sample v1, n={}, m={}, norm={}, seed={}, target={}",
            self.n,
            self.m(),
            self.norm.id(),
            self.master_seed,
            self.target_label
        )?;
        for v in &self.values {
            writeln!(w, "{v}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty sample file".into()))??;
        let rest = header
            .strip_prefix("sensikit-sample v1, ")
            .ok_or_else(|| Error::Parse(format!("bad sample header: {header:?}")))?;
        // The target label is free text and may contain commas, so it is the
        // final field and runs to end of line.
        let (fields, target_label) = rest
            .split_once(", target=")
            .ok_or_else(|| Error::Parse("sample header missing target field".into()))?;
        let mut n = None;
        let mut m = None;
        let mut norm = None;
        let mut seed = None;
        for field in fields.split(", ") {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad header field {field:?}")))?;
            match key {
                "n" => n = Some(value.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?),
                "m" => m = Some(value.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?),
                "norm" => norm = Some(OutputNorm::from_id(value)?),
                "seed" => seed = Some(value.parse::<u64>().map_err(|e| Error::Parse(e.to_string()))?),
                other => return Err(Error::Parse(format!("unknown header field {other:?}"))),
            }
        }
        let n = n.ok_or_else(|| Error::Parse("sample header missing n".into()))?;
        let m = m.ok_or_else(|| Error::Parse("sample header missing m".into()))?;
        let norm = norm.ok_or_else(|| Error::Parse("sample header missing norm".into()))?;
        let seed = seed.ok_or_else(|| Error::Parse("sample header missing seed".into()))?;
        let mut values = Vec::with_capacity(m);
        for line in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            values.push(line.parse::<f64>().map_err(|e| Error::Parse(e.to_string()))?);
        }
        if values.len() != m {
            return Err(Error::Parse(format!(
                "sample file declares m={m} but holds {} values",
                values.len()
            )));
        }
        Self::from_measurements(values, n, norm, seed, target_label.to_string())
    }
}

/// One sensitivity observation: draw n+1 records from P, evaluate f on the
/// two neighbours sharing the first n-1 records, and measure the norm of the
/// output difference.
fn measure_one(
    target: &dyn TargetFunction,
    p: &dyn RecordSampler,
    master_seed: u64,
    index: usize,
) -> Result<f64> {
    let n = target.arity();
    let mut rng = substream(master_seed, index as u64);
    let records: Vec<Record> = (0..n + 1).map(|_| p.draw(&mut rng)).collect();
    let wrap = |e: Error| Error::Eval { iteration: index, source: Box::new(e) };
    let first = target.eval(&records[..n]).map_err(wrap)?;
    let mut neighbour: Vec<Record> = records[..n - 1].to_vec();
    neighbour.push(records[n].clone());
    let second = target.eval(&neighbour).map_err(wrap)?;
    if first.len() != second.len() {
        return Err(Error::DimensionMismatch { expected: first.len(), got: second.len() });
    }
    let g = target.output_norm().distance(&first, &second);
    if !g.is_finite() {
        return Err(Error::NonFinite { iteration: index });
    }
    Ok(g)
}

fn measure_many(
    target: &dyn TargetFunction,
    p: &dyn RecordSampler,
    m: u64,
    master_seed: u64,
) -> Result<Vec<f64>> {
    if m < 1 {
        return Err(Error::Domain("sample size m must be >= 1".into()));
    }
    if target.arity() < 1 {
        return Err(Error::Domain("target arity must be >= 1".into()));
    }
    (0..m as usize)
        .into_par_iter()
        .map(|i| measure_one(target, p, master_seed, i))
        .collect()
}

/// Algorithm-1 sampling: m independent sensitivity measurements, sorted.
///
/// The result is a pure function of `(target, p, m, master_seed)` regardless
/// of how iterations are scheduled across threads.
pub fn sample_sensitivity(
    target: &dyn TargetFunction,
    p: &dyn RecordSampler,
    m: u64,
    master_seed: u64,
) -> Result<SensitivitySample> {
    let values = measure_many(target, p, m, master_seed)?;
    SensitivitySample::from_measurements(
        values,
        target.arity(),
        target.output_norm(),
        master_seed,
        target.label(),
    )
}

/// The k-th smallest measurement (1-based); k = m gives the maximum.
pub fn estimate_delta(sample: &SensitivitySample, k: u64) -> Result<f64> {
    let m = sample.m();
    if k < 1 || k as usize > m {
        return Err(Error::IndexOutOfRange { k: k as usize, m });
    }
    Ok(sample.values[k as usize - 1])
}

/// Empirical CDF of the sample at g: the fraction of measurements <= g.
pub fn empirical_cdf(sample: &SensitivitySample, g: f64) -> f64 {
    let below = sample.values.partition_point(|v| *v <= g);
    below as f64 / sample.m() as f64
}

/// Empirical RDP coverage check: the fraction of `trials` fresh neighbouring
/// pairs from P^(n+1) whose sensitivity is at most `delta_hat`.
pub fn verify_rdp_coverage(
    target: &dyn TargetFunction,
    p: &dyn RecordSampler,
    delta_hat: f64,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    let values = measure_many(target, p, trials, seed)?;
    let covered = values.iter().filter(|g| **g <= delta_hat).count();
    Ok(covered as f64 / trials as f64)
}
