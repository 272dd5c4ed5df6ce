//! Black-box target protocol: an external program is run once per
//! evaluation. It receives the database as CSV record lines on standard
//! input (terminated by end-of-stream) and must print exactly one line of
//! space-separated decimals — the output vector. The program must be
//! deterministic; the first database is evaluated twice and any mismatch is
//! an error.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::Mutex;

use sensikit::{Error, OutputNorm, Record, Result, TargetFunction};

use crate::dataset::write_records;

pub struct ExternTarget {
    program: PathBuf,
    n: usize,
    norm: OutputNorm,
    /// Set once the determinism probe has passed.
    probed: Mutex<bool>,
}

impl ExternTarget {
    pub fn new(program: PathBuf, n: usize) -> Self {
        Self { program, n, norm: OutputNorm::L2, probed: Mutex::new(false) }
    }

    pub fn with_norm(mut self, norm: OutputNorm) -> Self {
        self.norm = norm;
        self
    }

    fn run_once(&self, records: &[Record]) -> Result<Vec<f64>> {
        let mut child = Command::new(&self.program)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", self.program.display()))))?;
        {
            let mut stdin = child.stdin.take().expect("piped stdin");
            let mut buf = Vec::new();
            write_records(&mut buf, records)?;
            stdin.write_all(&buf)?;
        }
        let output = child.wait_with_output()?;
        if !output.status.success() {
            return Err(Error::Domain(format!(
                "external target {} exited with {}",
                self.program.display(),
                output.status
            )));
        }
        let text = String::from_utf8(output.stdout)
            .map_err(|e| Error::Parse(format!("external target output not UTF-8: {e}")))?;
        let line = text
            .lines()
            .next()
            .ok_or_else(|| Error::Parse("external target printed no output".into()))?;
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("external target output: {e}"))))
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(Error::Parse("external target printed an empty vector".into()));
        }
        Ok(values)
    }
}

impl TargetFunction for ExternTarget {
    fn arity(&self) -> usize {
        self.n
    }

    fn output_norm(&self) -> OutputNorm {
        self.norm
    }

    fn label(&self) -> String {
        format!("extern:{}", self.program.display())
    }

    fn eval(&self, records: &[Record]) -> Result<Vec<f64>> {
        let first = self.run_once(records)?;
        let mut probed = self.probed.lock().expect("probe lock");
        if !*probed {
            // Determinism probe on the first database this process sees.
            let second = self.run_once(records)?;
            if second != first {
                return Err(Error::Domain(format!(
                    "external target {} is not deterministic: two evaluations of the same database disagreed",
                    self.program.display()
                )));
            }
            *probed = true;
        }
        Ok(first)
    }
}
