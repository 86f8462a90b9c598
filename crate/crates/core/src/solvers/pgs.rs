//! Primal gradient scheme: mirror descent with the negative entropy as
//! reference function, i.e. a multiplicative-weights update of the
//! conductances.

use nalgebra::DVector;

use crate::dissipation::gradient;
use crate::error::{Error, Result};
use crate::instance::BpInstance;
use crate::laplacian::WeightVector;

use super::scheme::{Scheme, SchemeState, StepParams};

pub const PGS_PRACTICAL_BETA: f64 = 3.5;

/// Largest admissible `|grad_j| / beta` in the exponent.
pub const EXP_GUARD: f64 = 700.0;

/// `x'_j = max(delta, x_j exp(-grad_j / beta))`.
pub fn pgs_update(
    x: &WeightVector,
    grad: &DVector<f64>,
    beta: f64,
    delta: f64,
) -> Result<WeightVector> {
    let exponent = grad.amax() / beta;
    if !(exponent <= EXP_GUARD) {
        return Err(Error::Overflow { exponent });
    }
    let next = x
        .values()
        .zip_map(grad, |xj, gj| (xj * (-gj / beta).exp()).max(delta));
    WeightVector::with_floor(next, delta)
}

/// One PGS step from `x`, evaluating the gradient afresh.
pub fn pgs_step(
    inst: &BpInstance,
    x: &WeightVector,
    beta: f64,
    delta: f64,
) -> Result<WeightVector> {
    let g = gradient(inst, x)?;
    pgs_update(x, &g, beta, delta)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PrimalGradient;

impl Scheme for PrimalGradient {
    fn name(&self) -> &'static str {
        "pgs"
    }

    fn practical_beta(&self) -> f64 {
        PGS_PRACTICAL_BETA
    }

    /// `8 m^2 / eps^2`.
    fn theoretical_beta(&self, m: usize, _c: f64, eps: f64) -> f64 {
        let m = m as f64;
        8.0 * m * m / (eps * eps)
    }

    /// `ceil(96 m^2 ln(m / eps) / eps^3)`.
    fn theoretical_iters(&self, m: usize, eps: f64) -> u64 {
        let mf = m as f64;
        (96.0 * mf * mf * (mf / eps).ln() / eps.powi(3)).ceil() as u64
    }

    fn start(&self, x0: WeightVector, params: &StepParams) -> Result<Box<dyn SchemeState>> {
        Ok(Box::new(PgsState {
            x: x0,
            beta: params.beta,
            delta: params.delta,
            steps: 0,
        }))
    }
}

struct PgsState {
    x: WeightVector,
    beta: f64,
    delta: f64,
    steps: u64,
}

impl SchemeState for PgsState {
    fn current(&self) -> &WeightVector {
        &self.x
    }

    fn steps(&self) -> u64 {
        self.steps
    }

    fn advance(&mut self, gradient: &DVector<f64>) -> Result<()> {
        self.x = pgs_update(&self.x, gradient, self.beta, self.delta)?;
        self.steps += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    fn two() -> BpInstance {
        BpInstance::new(
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_row_slice(&[1.0]),
        )
        .unwrap()
    }

    #[test]
    fn step_example() {
        let x = WeightVector::new(DVector::from_row_slice(&[1.0, 1.0])).unwrap();
        let next = pgs_step(&two(), &x, 1.0, 0.01).unwrap();
        let expected = (-0.75f64).exp();
        assert!((expected - 0.472_366_552_741_014_7).abs() < 1e-15);
        for v in next.values().iter() {
            assert!((v - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let x = WeightVector::new(DVector::from_row_slice(&[0.3, 2.0])).unwrap();
        let next = pgs_update(&x, &DVector::zeros(2), 3.5, 1e-15).unwrap();
        assert_eq!(next.values(), x.values());
    }

    #[test]
    fn floor_clamp() {
        let delta = 1e-3;
        let x = WeightVector::new(DVector::from_row_slice(&[delta, 1.0])).unwrap();
        let g = DVector::from_row_slice(&[50.0, 0.0]);
        let next = pgs_update(&x, &g, 1.0, delta).unwrap();
        assert_eq!(next.values().as_slice(), &[delta, 1.0]);
    }

    #[test]
    fn overflow_guard() {
        let x = WeightVector::ones(1);
        let err = pgs_update(&x, &DVector::from_row_slice(&[-800.0]), 1.0, 1e-15).unwrap_err();
        assert!(matches!(err, Error::Overflow { .. }));
    }

    #[test]
    fn theoretical_values() {
        assert_eq!(PrimalGradient.theoretical_beta(2, 1.0, 0.5), 128.0);
        assert_eq!(PrimalGradient.theoretical_iters(1, 0.5), 533);
        let b1 = PrimalGradient.theoretical_beta(3, 1.0, 0.1);
        let b2 = PrimalGradient.theoretical_beta(6, 1.0, 0.1);
        assert!((b2 / b1 - 4.0).abs() < 1e-12);
    }
}
