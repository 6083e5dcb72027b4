#![allow(dead_code)]

pub mod criteria;
pub mod suites;

/// Result of one acceptance check.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }

    pub fn err(e: impl std::fmt::Display) -> Self {
        Outcome::new(false, format!("error: {e}"))
    }

    pub fn assert(&self) {
        assert!(self.pass, "{}", self.detail);
    }
}

pub const LOG3_2: f64 = 0.630_929_753_571_457_4;

pub fn log3_2() -> f64 {
    2f64.ln() / 3f64.ln()
}
