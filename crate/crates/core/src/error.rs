use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input was outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    /// The included joint angle left the open interval (0, pi).
    #[error("geometry out of range: included angle {phi} rad at theta = {theta} rad")]
    GeometryRange { theta: f64, phi: f64 },

    #[error("integration failed at t = {time} s: {reason}")]
    Integration { time: f64, reason: String },

    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),

    /// Malformed trial data. `line` is 1-based when known.
    #[error("parse error{}: {message}", fmt_location(*.line, .field.as_deref()))]
    Parse {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    #[error("objective returned non-finite value {value} at position {position:?}")]
    NonFiniteObjective { position: Vec<f64>, value: f64 },

    /// A failure while simulating one trial, tagged with its subject id.
    #[error("trial {trial}: {source}")]
    Trial {
        trial: String,
        #[source]
        source: Box<Error>,
    },
}

fn fmt_location(line: Option<usize>, field: Option<&str>) -> String {
    match (line, field) {
        (Some(l), Some(f)) => format!(" (line {l}, field `{f}`)"),
        (Some(l), None) => format!(" (line {l})"),
        (None, Some(f)) => format!(" (field `{f}`)"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: Option<usize>, field: Option<&str>, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field: field.map(str::to_owned),
            message: msg.into(),
        }
    }

    /// Attach the trial this error arose in.
    pub fn in_trial(self, trial: &str) -> Self {
        Error::Trial {
            trial: trial.to_owned(),
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Integration { .. } | Error::NoEquilibrium(_) | Error::NonFiniteObjective { .. } => true,
            Error::Trial { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numerical_failures_are_told_apart_from_input_errors() {
        let integ = Error::Integration {
            time: 0.1,
            reason: "x".into(),
        };
        assert!(integ.is_numerical());
        assert!(integ.in_trial("s1").is_numerical());
        assert!(!Error::domain("bad").in_trial("s1").is_numerical());
        assert!(!Error::GeometryRange { theta: 3.0, phi: 4.0 }.is_numerical());
        let msg = Error::parse(Some(4), Some("phase"), "non-monotone phase").to_string();
        assert!(msg.contains("line 4") && msg.contains("phase"), "{msg}");
    }
}
