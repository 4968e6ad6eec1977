//! Gait trials: CSV ingestion, validation, resampling, and the RMSE metric.
//!
//! A trial file carries `# key = value` metadata lines followed by a CSV
//! table with columns `phase,theta_rad,tau_ref` (or `time_s` in place of
//! `phase`). Angles are in radians, dorsiflexion positive. Torque is taken in
//! whatever unit the file declares through `torque_unit`.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of samples in a trial.
pub const MIN_SAMPLES: usize = 11;

/// Conventional 0..100% grid in 1% steps.
pub const DEFAULT_GRID: usize = 101;

pub const DEFAULT_TORQUE_UNIT: &str = "N*m";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    F,
    M,
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sex::F => "F",
            Sex::M => "M",
        })
    }
}

impl FromStr for Sex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "F" | "f" => Ok(Sex::F),
            "M" | "m" => Ok(Sex::M),
            other => Err(Error::parse(
                None,
                Some("sex"),
                format!("expected F or M, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitSample {
    pub phase: f64,
    /// Ankle angle, rad, dorsiflexion positive.
    pub theta: f64,
    pub tau_ref: f64,
}

/// One subject's representative gait cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitTrial {
    pub subject_id: String,
    pub sex: Sex,
    pub body_mass: f64,
    /// Metadata only; never used in computation.
    pub walking_speed: Option<f64>,
    pub cycle_duration: f64,
    pub torque_unit: String,
    samples: Vec<GaitSample>,
}

impl GaitTrial {
    pub fn new(
        subject_id: impl Into<String>,
        sex: Sex,
        body_mass: f64,
        cycle_duration: f64,
        samples: Vec<GaitSample>,
    ) -> Result<Self> {
        let trial = Self {
            subject_id: subject_id.into(),
            sex,
            body_mass,
            walking_speed: None,
            cycle_duration,
            torque_unit: DEFAULT_TORQUE_UNIT.to_owned(),
            samples,
        };
        trial.validate()?;
        Ok(trial)
    }

    pub fn with_walking_speed(mut self, speed: Option<f64>) -> Self {
        self.walking_speed = speed;
        self
    }

    pub fn with_torque_unit(mut self, unit: impl Into<String>) -> Self {
        self.torque_unit = unit.into();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.subject_id.trim().is_empty() {
            return Err(Error::parse(None, Some("subject_id"), "subject_id is empty"));
        }
        if !(self.body_mass > 0.0 && self.body_mass.is_finite()) {
            return Err(Error::parse(
                None,
                Some("body_mass_kg"),
                format!("body mass must be positive, got {}", self.body_mass),
            ));
        }
        if !(self.cycle_duration > 0.0 && self.cycle_duration.is_finite()) {
            return Err(Error::parse(
                None,
                Some("cycle_duration_s"),
                format!("cycle duration must be positive, got {}", self.cycle_duration),
            ));
        }
        if self.samples.len() < MIN_SAMPLES {
            return Err(Error::parse(
                None,
                None,
                format!(
                    "trial has {} samples, at least {MIN_SAMPLES} required",
                    self.samples.len()
                ),
            ));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if !(s.phase.is_finite() && s.theta.is_finite() && s.tau_ref.is_finite()) {
                return Err(Error::parse(None, None, format!("non-finite value in sample {i}")));
            }
        }
        for w in self.samples.windows(2) {
            if !(w[1].phase > w[0].phase) {
                return Err(Error::parse(
                    None,
                    Some("phase"),
                    format!("non-monotone phase: {} followed by {}", w[0].phase, w[1].phase),
                ));
            }
        }
        let first = self.samples[0].phase;
        let last = self.samples[self.samples.len() - 1].phase;
        if first != 0.0 || last != 1.0 {
            return Err(Error::parse(
                None,
                Some("phase"),
                format!("phase must run from 0 to 1, got {first}..{last}"),
            ));
        }
        Ok(())
    }

    pub fn samples(&self) -> &[GaitSample] {
        &self.samples
    }

    pub fn phases(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.phase).collect()
    }

    pub fn tau_ref(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.tau_ref).collect()
    }

    /// Ankle angle at `phase` by linear interpolation; phase wraps modulo 1.
    pub fn theta_at(&self, phase: f64) -> f64 {
        let p = wrap_phase(phase);
        interpolate(&self.samples, p, |s| s.theta)
    }

    /// Cycle-average ankle angle (trapezoidal in phase).
    pub fn mean_theta(&self) -> f64 {
        self.samples
            .windows(2)
            .map(|w| 0.5 * (w[0].theta + w[1].theta) * (w[1].phase - w[0].phase))
            .sum()
    }

    /// Replace the reference torque with values on the same phases.
    pub fn with_tau_ref(mut self, tau: &[f64]) -> Result<Self> {
        if tau.len() != self.samples.len() {
            return Err(Error::domain(format!(
                "expected {} torque values, got {}",
                self.samples.len(),
                tau.len()
            )));
        }
        for (s, &t) in self.samples.iter_mut().zip(tau) {
            s.tau_ref = t;
        }
        Ok(self)
    }
}

pub(crate) fn wrap_phase(phase: f64) -> f64 {
    if (0.0..=1.0).contains(&phase) {
        phase
    } else {
        phase.rem_euclid(1.0)
    }
}

/// Linear interpolation over samples sorted by phase; exact at sample phases.
fn interpolate(samples: &[GaitSample], p: f64, value: impl Fn(&GaitSample) -> f64) -> f64 {
    let idx = samples.partition_point(|s| s.phase <= p);
    if idx == 0 {
        return value(&samples[0]);
    }
    if idx == samples.len() {
        return value(&samples[idx - 1]);
    }
    let (s0, s1) = (&samples[idx - 1], &samples[idx]);
    let w = (p - s0.phase) / (s1.phase - s0.phase);
    if w == 0.0 {
        return value(s0);
    }
    (1.0 - w) * value(s0) + w * value(s1)
}

/// `n` uniformly spaced phases covering [0, 1], endpoints exact.
pub fn uniform_phases(n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n).map(|i| if i + 1 == n { 1.0 } else { i as f64 / last }).collect()
}

/// Resample onto `n` uniformly spaced phases by linear interpolation.
pub fn resample_trial(t: &GaitTrial, n: usize) -> Result<GaitTrial> {
    if n < 2 {
        return Err(Error::domain(format!("resample count must be >= 2, got {n}")));
    }
    let samples = uniform_phases(n)
        .into_iter()
        .map(|phase| GaitSample {
            phase,
            theta: interpolate(&t.samples, phase, |s| s.theta),
            tau_ref: interpolate(&t.samples, phase, |s| s.tau_ref),
        })
        .collect();
    Ok(GaitTrial { samples, ..t.clone() })
}

/// Root mean square difference of two equal-length traces.
pub fn rmse(pred: &[f64], reference: &[f64]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::domain("rmse of empty traces"));
    }
    if pred.len() != reference.len() {
        return Err(Error::domain(format!(
            "rmse length mismatch: {} vs {}",
            pred.len(),
            reference.len()
        )));
    }
    let sum: f64 = pred.iter().zip(reference).map(|(p, r)| (p - r) * (p - r)).sum();
    Ok((sum / pred.len() as f64).sqrt())
}

/// Training and test trials with disjoint subjects.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectSplit {
    pub train: Vec<GaitTrial>,
    pub test: Vec<GaitTrial>,
}

impl SubjectSplit {
    pub fn new(train: Vec<GaitTrial>, test: Vec<GaitTrial>) -> Result<Self> {
        let split = Self { train, test };
        split.validate()?;
        Ok(split)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train.is_empty() || self.test.is_empty() {
            return Err(Error::domain(format!(
                "split needs trials on both sides (train {}, test {})",
                self.train.len(),
                self.test.len()
            )));
        }
        if let Some(t) = self
            .test
            .iter()
            .find(|t| self.train.iter().any(|r| r.subject_id == t.subject_id))
        {
            return Err(Error::domain(format!(
                "subject `{}` appears in both train and test",
                t.subject_id
            )));
        }
        Ok(())
    }
}

const REQUIRED_KEYS: [&str; 4] = ["subject_id", "sex", "body_mass_kg", "cycle_duration_s"];

/// Parse a trial from CSV text. Entries in `meta` override `# key = value`
/// lines in the file.
pub fn load_trial<R: Read>(mut source: R, meta: &BTreeMap<String, String>) -> Result<GaitTrial> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::parse(None, None, format!("unreadable input: {e}")))?;
    if text.trim().is_empty() {
        return Err(Error::parse(None, None, "empty file"));
    }

    let mut header: BTreeMap<String, (String, Option<usize>)> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        if let Some((k, v)) = rest.split_once('=') {
            header.insert(k.trim().to_owned(), (v.trim().to_owned(), Some(i + 1)));
        }
    }
    for (k, v) in meta {
        header.insert(k.clone(), (v.clone(), None));
    }
    let get = |key: &str| header.get(key).map(|(v, l)| (v.as_str(), *l));
    for key in REQUIRED_KEYS {
        if get(key).is_none() {
            return Err(Error::parse(None, Some(key), format!("missing metadata key `{key}`")));
        }
    }
    let number = |key: &str| -> Result<Option<f64>> {
        match get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::parse(line, Some(key), format!("`{v}` is not a number"))),
        }
    };
    let subject_id = get("subject_id").map(|(v, _)| v.to_owned()).unwrap_or_default();
    let (sex_raw, sex_line) = get("sex").unwrap_or_default();
    let sex = sex_raw.parse::<Sex>().map_err(|e| match e {
        Error::Parse { field, message, .. } => Error::Parse {
            line: sex_line,
            field,
            message,
        },
        other => other,
    })?;
    let body_mass = number("body_mass_kg")?.unwrap_or_default();
    let cycle_duration = number("cycle_duration_s")?.unwrap_or_default();
    let walking_speed = number("walking_speed_mps")?;
    let torque_unit = get("torque_unit")
        .map(|(v, _)| v.to_owned())
        .unwrap_or_else(|| DEFAULT_TORQUE_UNIT.to_owned());

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(None, None, format!("bad header row: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(Error::parse(None, None, "empty file"));
    }
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (x_col, x_name, is_time) = match (column("phase"), column("time_s")) {
        (Some(c), _) => (c, "phase", false),
        (None, Some(c)) => (c, "time_s", true),
        (None, None) => {
            return Err(Error::parse(
                Some(1),
                Some("phase"),
                "missing column `phase` (or `time_s`)",
            ))
        }
    };
    let theta_col =
        column("theta_rad").ok_or_else(|| Error::parse(None, Some("theta_rad"), "missing column `theta_rad`"))?;
    let tau_col = column("tau_ref").ok_or_else(|| Error::parse(None, Some("tau_ref"), "missing column `tau_ref`"))?;

    let mut samples = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            Error::parse(line, None, format!("malformed row: {e}"))
        })?;
        let line = record.position().map(|p| p.line() as usize);
        let field = |col: usize, name: &str| -> Result<f64> {
            let raw = record
                .get(col)
                .ok_or_else(|| Error::parse(line, Some(name), "missing value"))?;
            let v: f64 = raw
                .parse()
                .map_err(|_| Error::parse(line, Some(name), format!("`{raw}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::parse(line, Some(name), format!("non-finite value `{raw}`")))
            }
        };
        samples.push(GaitSample {
            phase: field(x_col, x_name)?,
            theta: field(theta_col, "theta_rad")?,
            tau_ref: field(tau_col, "tau_ref")?,
        });
        lines.push(line);
    }
    if samples.is_empty() {
        return Err(Error::parse(None, None, "empty file: no data rows"));
    }

    for (w, line) in samples.windows(2).zip(lines.iter().skip(1)) {
        if !(w[1].phase > w[0].phase) {
            return Err(Error::parse(*line, Some(x_name), "non-monotone phase"));
        }
    }
    if is_time {
        if !(cycle_duration > 0.0) {
            return Err(Error::parse(
                None,
                Some("cycle_duration_s"),
                "cycle duration must be positive",
            ));
        }
        let t0 = samples[0].phase;
        for s in &mut samples {
            s.phase = (s.phase - t0) / cycle_duration;
        }
        let n = samples.len();
        let last = &mut samples[n - 1].phase;
        if (*last - 1.0).abs() <= 1e-6 {
            *last = 1.0;
        }
    }

    let trial = GaitTrial {
        subject_id,
        sex,
        body_mass,
        walking_speed,
        cycle_duration,
        torque_unit,
        samples,
    };
    trial.validate()?;
    Ok(trial)
}

/// Write a trial in the format read by [`load_trial`].
pub fn write_trial<W: Write>(t: &GaitTrial, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# subject_id = {}", t.subject_id)?;
    writeln!(w, "# sex = {}", t.sex)?;
    writeln!(w, "# body_mass_kg = {}", t.body_mass)?;
    if let Some(v) = t.walking_speed {
        writeln!(w, "# walking_speed_mps = {v}")?;
    }
    writeln!(w, "# cycle_duration_s = {}", t.cycle_duration)?;
    writeln!(w, "# torque_unit = {}", t.torque_unit)?;
    writeln!(w, "phase,theta_rad,tau_ref")?;
    for s in &t.samples {
        writeln!(w, "{},{},{}", s.phase, s.theta, s.tau_ref)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn uniform_trial(n: usize) -> GaitTrial {
        let samples = uniform_phases(n)
            .into_iter()
            .map(|p| GaitSample {
                phase: p,
                theta: 0.3 * p - 0.1,
                tau_ref: (6.0 * p).sin(),
            })
            .collect();
        GaitTrial::new("S1", Sex::F, 60.0, 1.1, samples).unwrap()
    }

    fn csv_text(rows: &[(f64, f64, f64)]) -> String {
        let mut s = String::from(
            "# subject_id = S9\n# sex = M\n# body_mass_kg = 80\n# cycle_duration_s = 1.2\nphase,theta_rad,tau_ref\n",
        );
        for r in rows {
            s.push_str(&format!("{},{},{}\n", r.0, r.1, r.2));
        }
        s
    }

    fn rows(n: usize) -> Vec<(f64, f64, f64)> {
        uniform_phases(n).into_iter().map(|p| (p, 0.1 * p, 2.0 * p)).collect()
    }

    #[test]
    fn loads_header_and_rows() {
        let t = load_trial(csv_text(&rows(21)).as_bytes(), &BTreeMap::new()).unwrap();
        assert_eq!(t.subject_id, "S9");
        assert_eq!(t.sex, Sex::M);
        assert_eq!(t.body_mass, 80.0);
        assert_eq!(t.samples().len(), 21);
        assert_eq!(t.torque_unit, DEFAULT_TORQUE_UNIT);
    }

    #[test]
    fn external_metadata_overrides_file() {
        let meta = BTreeMap::from([("body_mass_kg".to_owned(), "55".to_owned())]);
        let t = load_trial(csv_text(&rows(21)).as_bytes(), &meta).unwrap();
        assert_eq!(t.body_mass, 55.0);
    }

    #[test]
    fn missing_column_reported() {
        let text =
            "# subject_id = a\n# sex = F\n# body_mass_kg = 50\n# cycle_duration_s = 1\nphase,theta_rad\n0,0\n1,0\n";
        let err = load_trial(text.as_bytes(), &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("missing column"), "{err}");
    }

    #[test]
    fn non_monotone_phase_reported_with_line() {
        let text = csv_text(&[(0.0, 0.0, 0.0), (0.5, 0.0, 0.0), (0.4, 0.0, 0.0), (1.0, 0.0, 0.0)]);
        let err = load_trial(text.as_bytes(), &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("non-monotone phase"), "{err}");
        assert!(matches!(err, Error::Parse { line: Some(8), .. }), "{err:?}");
    }

    #[test]
    fn empty_and_missing_metadata_rejected() {
        assert!(load_trial("".as_bytes(), &BTreeMap::new())
            .unwrap_err()
            .to_string()
            .contains("empty"));
        let text = "# subject_id = a\n# sex = F\n# cycle_duration_s = 1\nphase,theta_rad,tau_ref\n0,0,0\n";
        let err = load_trial(text.as_bytes(), &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("body_mass_kg"), "{err}");
        let header_only = csv_text(&[]);
        assert!(load_trial(header_only.as_bytes(), &BTreeMap::new()).is_err());
    }

    #[test]
    fn non_finite_values_rejected() {
        let mut r = rows(21);
        r[4].2 = f64::NAN;
        let err = load_trial(csv_text(&r).as_bytes(), &BTreeMap::new()).unwrap_err();
        assert!(
            matches!(err, Error::Parse { field: Some(ref f), .. } if f == "tau_ref"),
            "{err:?}"
        );
        let text = csv_text(&rows(21)).replace("0.5,0.05,1\n", "0.5,inf,1\n");
        assert!(load_trial(text.as_bytes(), &BTreeMap::new()).is_err());
    }

    #[test]
    fn time_column_converted_to_phase() {
        let mut text = String::from(
            "# subject_id = T\n# sex = F\n# body_mass_kg = 60\n# cycle_duration_s = 2\n# torque_unit = N*m/kg\ntime_s,theta_rad,tau_ref\n",
        );
        for i in 0..=20 {
            text.push_str(&format!("{},{},0\n", 3.0 + 0.1 * i as f64, 0.01 * i as f64));
        }
        let t = load_trial(text.as_bytes(), &BTreeMap::new()).unwrap();
        assert_eq!(t.samples()[0].phase, 0.0);
        assert_eq!(t.samples()[20].phase, 1.0);
        assert!((t.samples()[10].phase - 0.5).abs() < 1e-12);
        assert_eq!(t.torque_unit, "N*m/kg");
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(load_trial(csv_text(&rows(5)).as_bytes(), &BTreeMap::new()).is_err());
    }

    #[test]
    fn resample_identity_linear_and_endpoints() {
        let t = uniform_trial(101);
        assert_eq!(resample_trial(&t, 101).unwrap(), t);

        let r = resample_trial(&t, 37).unwrap();
        for s in r.samples() {
            assert!((s.theta - (0.3 * s.phase - 0.1)).abs() < 1e-15);
        }
        assert_eq!(r.samples()[0].tau_ref, t.samples()[0].tau_ref);
        assert_eq!(r.samples()[36].tau_ref, t.samples()[100].tau_ref);
        assert!(resample_trial(&t, 1).is_err());
    }

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 2.0, 3.0], &[1.5, 2.5, 3.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!((rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap() - 3.535534).abs() < 1e-6);
        assert!(rmse(&[], &[]).is_err());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn split_requires_disjoint_nonempty_sides() {
        let a = uniform_trial(11);
        assert!(SubjectSplit::new(vec![a.clone()], vec![]).is_err());
        assert!(SubjectSplit::new(vec![a.clone()], vec![a.clone()]).is_err());
        let mut b = a.clone();
        b.subject_id = "S2".into();
        assert!(SubjectSplit::new(vec![a], vec![b]).is_ok());
    }

    proptest! {
        #[test]
        fn rmse_metric_properties(
            pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50),
            k in -10.0f64..10.0,
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let ab = rmse(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab, rmse(&b, &a).unwrap());
            prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
            let ka: Vec<f64> = a.iter().map(|x| k * x).collect();
            let kb: Vec<f64> = b.iter().map(|x| k * x).collect();
            prop_assert!((rmse(&ka, &kb).unwrap() - k.abs() * ab).abs() <= 1e-9 * (1.0 + k.abs() * ab));
        }

        #[test]
        fn write_then_load_is_identity(
            values in prop::collection::vec((-1.0f64..1.0, -500.0f64..500.0), 11..60),
            mass in 30.0f64..150.0,
            duration in 0.6f64..2.0,
            speed in prop::option::of(0.5f64..2.0),
        ) {
            let n = values.len();
            let samples = uniform_phases(n)
                .into_iter()
                .zip(values)
                .map(|(phase, (theta, tau_ref))| GaitSample { phase, theta, tau_ref })
                .collect();
            let t = GaitTrial::new("P-7", Sex::F, mass, duration, samples)
                .unwrap()
                .with_walking_speed(speed)
                .with_torque_unit("N*m");
            let mut buf = Vec::new();
            write_trial(&t, &mut buf).unwrap();
            let back = load_trial(buf.as_slice(), &BTreeMap::new()).unwrap();
            prop_assert_eq!(back, t);
        }
    }
}
