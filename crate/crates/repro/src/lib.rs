//! Bookkeeping for reproduction checks: each criterion collects notes and a
//! verdict, and a [`Suite`] prints one line per criterion.

use std::time::Instant;

#[derive(Debug, Default)]
pub struct Check {
    ok: bool,
    notes: Vec<String>,
}

impl Check {
    pub fn new() -> Self {
        Self {
            ok: true,
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.ok
    }

    pub fn expect(&mut self, ok: bool, note: impl Into<String>) {
        let note = note.into();
        self.ok &= ok;
        self.notes
            .push(if ok { note } else { format!("{note} MISS") });
    }

    /// `value` within relative error `rel` of `target`.
    pub fn rel(&mut self, label: &str, value: f64, target: f64, rel: f64) {
        let ok = (value - target).abs() <= rel * target.abs();
        self.expect(
            ok,
            format!(
                "{label}={value:.4} (target {target} +/-{:.0}%)",
                rel * 100.0
            ),
        );
    }

    /// `value` within `abs` of `target`.
    pub fn abs(&mut self, label: &str, value: f64, target: f64, abs: f64) {
        let ok = (value - target).abs() <= abs;
        self.expect(ok, format!("{label}={value:.4} (target {target} +/-{abs})"));
    }

    pub fn line(&self, name: &str, seconds: f64) -> String {
        let tag = if self.ok { "PASS" } else { "FAIL" };
        format!("{tag} {name} [{seconds:.1}s]: {}", self.notes.join("; "))
    }
}

/// Runs criteria in order, printing a line for each.
#[derive(Debug, Default)]
pub struct Suite {
    failed: Vec<String>,
    total: usize,
}

impl Suite {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn run<T>(&mut self, name: &str, f: impl FnOnce() -> (Check, T)) -> T {
        let start = Instant::now();
        let (check, value) = f();
        println!("{}", check.line(name, start.elapsed().as_secs_f64()));
        self.total += 1;
        if !check.passed() {
            self.failed.push(name.to_string());
        }
        value
    }

    pub fn check(&mut self, name: &str, f: impl FnOnce() -> Check) {
        self.run(name, || (f(), ()));
    }

    pub fn failed(&self) -> &[String] {
        &self.failed
    }

    pub fn summary(&self) -> String {
        if self.failed.is_empty() {
            format!("acceptance: all {} criteria passed", self.total)
        } else {
            format!(
                "acceptance: {} of {} criteria failed ({})",
                self.failed.len(),
                self.total,
                self.failed.join(", ")
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerances() {
        let mut c = Check::new();
        c.rel("a", 0.104, 0.095, 0.10);
        assert!(c.passed());
        c.rel("b", 0.106, 0.095, 0.10);
        assert!(!c.passed());
        assert!(c.line("x", 0.0).starts_with("FAIL x"));
        assert!(c.line("x", 0.0).ends_with("MISS"));
    }

    #[test]
    fn suite_tallies_failures() {
        let mut s = Suite::new();
        s.check("good", Check::new);
        let v = s.run("bad", || {
            let mut c = Check::new();
            c.abs("x", 1.0, 0.0, 0.5);
            (c, 7)
        });
        assert_eq!(v, 7);
        assert_eq!(s.failed(), ["bad"]);
        assert!(s.summary().contains("1 of 2"));
    }
}
