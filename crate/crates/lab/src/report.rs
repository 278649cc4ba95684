use serde::{Deserialize, Serialize};

/// One pass/fail check: `value` must lie in `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, upper: f64) -> Self {
        Check {
            name: name.into(),
            value,
            lower: None,
            upper: Some(upper),
            passed: value <= upper,
            detail: String::new(),
        }
    }

    pub fn within(name: impl Into<String>, value: f64, lower: f64, upper: f64) -> Self {
        Check {
            name: name.into(),
            value,
            lower: Some(lower),
            upper: Some(upper),
            passed: value >= lower && value <= upper,
            detail: String::new(),
        }
    }

    pub fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            value: f64::NAN,
            lower: None,
            upper: None,
            passed: false,
            detail: detail.into(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let bound = match (self.lower, self.upper) {
            (Some(l), Some(u)) => format!(" in [{l:e}, {u:e}]"),
            (None, Some(u)) => format!(" <= {u:e}"),
            (Some(l), None) => format!(" >= {l:e}"),
            (None, None) => String::new(),
        };
        let mut s = format!("{status} {}: {:e}{bound}", self.name, self.value);
        if !self.detail.is_empty() {
            s.push_str(&format!(" ({})", self.detail));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_never_passes() {
        assert!(!Check::at_most("x", f64::NAN, 1.0).passed);
        assert!(!Check::within("x", f64::NAN, 0.0, 1.0).passed);
    }

    #[test]
    fn line_format() {
        let c = Check::at_most("det", 1e-13, 1e-12);
        assert!(c.line().starts_with("PASS det"));
    }
}
