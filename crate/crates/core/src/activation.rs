//! Periodic activation templates over the gait cycle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::MusclePair;

/// Piecewise-linear activation over phase, with one adjustable node.
///
/// Nodes are `(phase, amplitude)` pairs. The first node sits at phase 0 and
/// the last at phase 1 with the same amplitude, so the curve is periodic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct ActivationCurve {
    nodes: Vec<(f64, f64)>,
    peak_index: usize,
}

#[derive(Serialize, Deserialize)]
struct RawCurve {
    nodes: Vec<(f64, f64)>,
    peak_index: usize,
}

impl TryFrom<RawCurve> for ActivationCurve {
    type Error = Error;
    fn try_from(raw: RawCurve) -> Result<Self> {
        ActivationCurve::new(raw.nodes, raw.peak_index)
    }
}

impl From<ActivationCurve> for RawCurve {
    fn from(c: ActivationCurve) -> Self {
        RawCurve {
            nodes: c.nodes,
            peak_index: c.peak_index,
        }
    }
}

impl ActivationCurve {
    pub fn new(nodes: Vec<(f64, f64)>, peak_index: usize) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::domain("activation curve needs at least two nodes"));
        }
        if peak_index >= nodes.len() {
            return Err(Error::domain(format!(
                "peak_index {peak_index} out of range for {} nodes",
                nodes.len()
            )));
        }
        let (first, last) = (nodes[0], nodes[nodes.len() - 1]);
        if first.0 != 0.0 || last.0 != 1.0 {
            return Err(Error::domain(
                "activation nodes must start at phase 0 and end at phase 1",
            ));
        }
        if first.1 != last.1 {
            return Err(Error::domain(format!(
                "activation curve is not periodic: value {} at phase 0, {} at phase 1",
                first.1, last.1
            )));
        }
        for w in nodes.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::domain(format!(
                    "activation node phases must strictly increase ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        if let Some(&(ph, a)) = nodes.iter().find(|(_, a)| !(0.0..=1.0).contains(a)) {
            return Err(Error::domain(format!(
                "activation amplitude {a} at phase {ph} outside [0, 1]"
            )));
        }
        Ok(Self { nodes, peak_index })
    }

    /// Swing-phase dorsiflexor burst peaking at 65% of the cycle.
    pub fn anterior_template(amplitude: f64) -> Result<Self> {
        Self::burst(&[0.55, 0.65, 0.75], amplitude)
    }

    /// Push-off burst peaking at 45% of the cycle.
    pub fn posterior_template(amplitude: f64) -> Result<Self> {
        Self::burst(&[0.30, 0.45, 0.60], amplitude)
    }

    fn burst(phases: &[f64; 3], amplitude: f64) -> Result<Self> {
        Self::new(
            vec![
                (0.0, 0.0),
                (phases[0], 0.0),
                (phases[1], amplitude),
                (phases[2], 0.0),
                (1.0, 0.0),
            ],
            2,
        )
    }

    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    pub fn peak_index(&self) -> usize {
        self.peak_index
    }

    /// Amplitude of the adjustable node.
    pub fn peak_amplitude(&self) -> f64 {
        self.nodes[self.peak_index].1
    }

    /// Activation at `phase`, wrapped into [0, 1].
    pub fn evaluate(&self, phase: f64) -> f64 {
        let p = if (0.0..=1.0).contains(&phase) {
            phase
        } else {
            phase.rem_euclid(1.0)
        };
        let idx = self.nodes.partition_point(|n| n.0 <= p);
        if idx == 0 {
            return self.nodes[0].1;
        }
        if idx == self.nodes.len() {
            return self.nodes[idx - 1].1;
        }
        let (p0, a0) = self.nodes[idx - 1];
        let (p1, a1) = self.nodes[idx];
        let w = (p - p0) / (p1 - p0);
        ((1.0 - w) * a0 + w * a1).clamp(0.0, 1.0)
    }

    /// Copy of this curve with the adjustable node set to `amplitude`.
    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&amplitude) {
            return Err(Error::domain(format!(
                "activation amplitude must lie in [0, 1], got {amplitude}"
            )));
        }
        let mut nodes = self.nodes.clone();
        nodes[self.peak_index].1 = amplitude;
        // an endpoint peak moves both ends to keep the curve periodic
        let last = nodes.len() - 1;
        if self.peak_index == 0 {
            nodes[last].1 = amplitude;
        } else if self.peak_index == last {
            nodes[0].1 = amplitude;
        }
        Ok(Self {
            nodes,
            peak_index: self.peak_index,
        })
    }
}

pub fn evaluate_activation(c: &ActivationCurve, phase: f64) -> f64 {
    c.evaluate(phase)
}

pub fn single_node_curve(template: &ActivationCurve, amplitude: f64) -> Result<ActivationCurve> {
    template.with_amplitude(amplitude)
}

impl MusclePair<ActivationCurve> {
    /// Both curves with their adjustable nodes set.
    pub fn with_amplitudes(&self, anterior: f64, posterior: f64) -> Result<Self> {
        Ok(Self {
            anterior: self.anterior.with_amplitude(anterior)?,
            posterior: self.posterior.with_amplitude(posterior)?,
        })
    }

    /// Default templates at the given peak amplitudes.
    pub fn templates(anterior: f64, posterior: f64) -> Result<Self> {
        Ok(Self {
            anterior: ActivationCurve::anterior_template(anterior)?,
            posterior: ActivationCurve::posterior_template(posterior)?,
        })
    }
}
