use std::fmt;
use std::time::Duration;

/// Summary printed to stderr after every run.
#[derive(Debug, Default)]
pub struct RunReport {
    pub command: &'static str,
    pub results: usize,
    pub candidates: usize,
    /// Total inverted-list entries touched.
    pub probed: u64,
    pub elapsed: Duration,
    pub params: Vec<(&'static str, String)>,
}

impl RunReport {
    pub fn new(command: &'static str) -> Self {
        RunReport { command, ..Default::default() }
    }

    pub fn param(&mut self, key: &'static str, value: impl ToString) {
        self.params.push((key, value.to_string()));
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "command={} results={} candidates={} probed={} time_ms={:.3}",
            self.command,
            self.results,
            self.candidates,
            self.probed,
            self.elapsed.as_secs_f64() * 1e3
        )?;
        for (k, v) in &self.params {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}
