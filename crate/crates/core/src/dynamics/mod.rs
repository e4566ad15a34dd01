//! Heat and Schrödinger feature dynamics driven by fractional powers of the
//! normalized adjacency, and predictions of which frequency they amplify.

mod closed_form;
mod dominance;
mod euler;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use closed_form::{closed_form_solution, MAX_ORACLE_SIZE};
pub use dominance::{
    classify_trajectory, euler_step_size_guard, pow_alpha, predict_dominance, DominanceReport, GraphClass,
    Regime, StepGuard, Verdict, TIE_TOLERANCE,
};
pub use euler::{
    euler_heat_step, euler_schrodinger_step, evolve, gcn_evolve, integrate, EnergyRecord, EnergyTrajectory,
    EvolveParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Heat,
    Schrodinger,
}

/// Sign of the imaginary unit in the Schrödinger update `x ± i h S^α x W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    #[default]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Diagonal channel mixing matrix `W`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelMixer {
    pub diag_w: Vec<Complex64>,
    pub scheme: Scheme,
}

impl ChannelMixer {
    pub fn heat(diag: Vec<f64>) -> Self {
        Self {
            diag_w: diag.into_iter().map(|w| Complex64::new(w, 0.0)).collect(),
            scheme: Scheme::Heat,
        }
    }

    pub fn schrodinger(diag: Vec<Complex64>) -> Self {
        Self { diag_w: diag, scheme: Scheme::Schrodinger }
    }

    pub fn new(diag_w: Vec<Complex64>, scheme: Scheme) -> Result<Self> {
        let m = Self { diag_w, scheme };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.diag_w.iter().any(|w| !w.re.is_finite() || !w.im.is_finite()) {
            return Err(invalid("channel weights must be finite"));
        }
        if self.scheme == Scheme::Heat && self.diag_w.iter().any(|w| w.im != 0.0) {
            return Err(invalid("heat dynamics need a real channel mixer"));
        }
        Ok(())
    }

    pub fn channels(&self) -> usize {
        self.diag_w.len()
    }

    /// Spectral norm of the diagonal matrix.
    pub fn norm(&self) -> f64 {
        self.diag_w.iter().map(|w| w.norm()).fold(0.0, f64::max)
    }

    pub fn real_parts(&self) -> Vec<f64> {
        self.diag_w.iter().map(|w| w.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixer_validation() {
        assert!(ChannelMixer::new(vec![Complex64::new(1.0, 0.5)], Scheme::Heat).is_err());
        assert!(ChannelMixer::new(vec![Complex64::new(1.0, 0.5)], Scheme::Schrodinger).is_ok());
        assert!(ChannelMixer::new(vec![Complex64::new(f64::NAN, 0.0)], Scheme::Schrodinger).is_err());
        assert_eq!(ChannelMixer::heat(vec![-3.0, 2.0]).norm(), 3.0);
        assert_eq!(Sign::default(), Sign::Minus);
    }
}
