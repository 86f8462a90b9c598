//! Accelerated gradient schemes on `{x >= delta}`.
//!
//! Three sequences per step, with `alpha_k = (k + 1) / 2`:
//!
//! ```text
//! y^k = P(x^k - s(x^k) g^k / beta)
//! z^k = P(x^0 - s(x^0) (sum_{i<=k} alpha_i g^i) / beta)
//! x^{k+1} = tau_k z^k + (1 - tau_k) y^k
//! ```
//!
//! where `P` clamps at `delta`. The Euclidean variant (`ags`) uses `s = 1` and
//! `tau_k = 2 / (k + 3)`; the entropic variant (`ags2`) scales each coordinate
//! by its current value, `s(v) = v`, and mixes with a constant `tau`.

use nalgebra::DVector;

use crate::dissipation::gradient;
use crate::error::{Error, Result};
use crate::instance::BpInstance;
use crate::laplacian::WeightVector;

use super::scheme::{Scheme, SchemeState, StepParams};

pub const AGS_PRACTICAL_BETA: f64 = 3.5;
pub const AGS2_PRACTICAL_BETA: f64 = 1.1;
pub const AGS2_TAU: f64 = 1e-15;

/// Weight of the gradient at step `k` in the cumulative sum.
pub fn alpha(k: u64) -> f64 {
    (k as f64 + 1.0) / 2.0
}

/// Scheduled mixing weight `2 / (k + 3)`.
pub fn tau_schedule(k: u64) -> f64 {
    2.0 / (k as f64 + 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mixing {
    /// `tau_k = 2 / (k + 3)`.
    Schedule,
    Constant(f64),
}

impl Mixing {
    fn at(self, k: u64) -> f64 {
        match self {
            Mixing::Schedule => tau_schedule(k),
            Mixing::Constant(t) => t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgsState {
    pub x: WeightVector,
    pub y: WeightVector,
    pub z: WeightVector,
    /// `sum_{i<k} alpha_i grad f(x^i)`.
    pub cumulative_gradient: DVector<f64>,
    /// Completed steps.
    pub k: u64,
    pub x0: WeightVector,
}

impl AgsState {
    pub fn new(x0: WeightVector) -> Self {
        Self {
            cumulative_gradient: DVector::zeros(x0.len()),
            k: 0,
            x: x0.clone(),
            y: x0.clone(),
            z: x0.clone(),
            x0,
        }
    }

    /// Advances with the gradient `g` evaluated at `self.x`.
    pub fn advance(
        &mut self,
        g: &DVector<f64>,
        beta: f64,
        delta: f64,
        mixing: Mixing,
        entropic: bool,
    ) -> Result<()> {
        if g.len() != self.x.len() {
            return Err(Error::DimensionMismatch {
                what: "gradient length",
                expected: self.x.len(),
                found: g.len(),
            });
        }
        let inv = 1.0 / beta;
        let y = self.x.values().zip_map(g, |xj, gj| {
            let scale = if entropic { xj } else { 1.0 };
            (xj - scale * inv * gj).max(delta)
        });
        self.cumulative_gradient.axpy(alpha(self.k), g, 1.0);
        let z = self
            .x0
            .values()
            .zip_map(&self.cumulative_gradient, |x0j, cj| {
                let scale = if entropic { x0j } else { 1.0 };
                (x0j - scale * inv * cj).max(delta)
            });
        let tau = mixing.at(self.k);
        let x = z.zip_map(&y, |zj, yj| (tau * zj + (1.0 - tau) * yj).max(delta));
        self.y = WeightVector::with_floor(y, delta)?;
        self.z = WeightVector::with_floor(z, delta)?;
        self.x = WeightVector::with_floor(x, delta)?;
        self.k += 1;
        Ok(())
    }
}

/// One Euclidean accelerated step, evaluating the gradient at `state.x`.
pub fn ags_step(inst: &BpInstance, state: &AgsState, beta: f64, delta: f64) -> Result<AgsState> {
    let g = gradient(inst, &state.x)?;
    let mut next = state.clone();
    next.advance(&g, beta, delta, Mixing::Schedule, false)?;
    Ok(next)
}

/// One entropic accelerated step with constant mixing weight `tau`.
pub fn ags2_step(
    inst: &BpInstance,
    state: &AgsState,
    beta: f64,
    delta: f64,
    tau: f64,
) -> Result<AgsState> {
    let g = gradient(inst, &state.x)?;
    let mut next = state.clone();
    next.advance(&g, beta, delta, Mixing::Constant(tau), true)?;
    Ok(next)
}

/// Registry entry for `ags` and `ags2`.
#[derive(Debug, Clone, Copy)]
pub struct Accelerated {
    name: &'static str,
    entropic: bool,
    mixing: Mixing,
    practical_beta: f64,
}

impl Accelerated {
    pub fn euclidean() -> Self {
        Self {
            name: "ags",
            entropic: false,
            mixing: Mixing::Schedule,
            practical_beta: AGS_PRACTICAL_BETA,
        }
    }

    pub fn entropic() -> Self {
        Self {
            name: "ags2",
            entropic: true,
            mixing: Mixing::Constant(AGS2_TAU),
            practical_beta: AGS2_PRACTICAL_BETA,
        }
    }
}

impl Scheme for Accelerated {
    fn name(&self) -> &'static str {
        self.name
    }

    fn practical_beta(&self) -> f64 {
        self.practical_beta
    }

    /// `16 m^3 / (eps^3 sqrt(c))`. The entropic variant has no bound of its
    /// own and reuses this value.
    fn theoretical_beta(&self, m: usize, c: f64, eps: f64) -> f64 {
        let m = m as f64;
        16.0 * m.powi(3) / (eps.powi(3) * c.sqrt())
    }

    /// `ceil(24 m^2 / eps^2)`.
    fn theoretical_iters(&self, m: usize, eps: f64) -> u64 {
        let m = m as f64;
        (24.0 * m * m / (eps * eps)).ceil() as u64
    }

    fn start(&self, x0: WeightVector, params: &StepParams) -> Result<Box<dyn SchemeState>> {
        let mixing = params.tau.map(Mixing::Constant).unwrap_or(self.mixing);
        if let Mixing::Constant(t) = mixing {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidConfig(format!(
                    "tau must lie in [0, 1], got {t}"
                )));
            }
        }
        Ok(Box::new(AcceleratedRun {
            state: AgsState::new(x0),
            beta: params.beta,
            delta: params.delta,
            mixing,
            entropic: self.entropic,
        }))
    }
}

struct AcceleratedRun {
    state: AgsState,
    beta: f64,
    delta: f64,
    mixing: Mixing,
    entropic: bool,
}

impl SchemeState for AcceleratedRun {
    fn current(&self) -> &WeightVector {
        &self.state.x
    }

    fn steps(&self) -> u64 {
        self.state.k
    }

    fn advance(&mut self, gradient: &DVector<f64>) -> Result<()> {
        self.state
            .advance(gradient, self.beta, self.delta, self.mixing, self.entropic)
    }
}
