use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::laplacian::WeightVector;

use super::ags::Accelerated;
use super::pgs::PrimalGradient;

/// Step parameters resolved from a [`super::SolverConfig`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub beta: f64,
    pub delta: f64,
    /// Constant mixing weight for schemes that use one.
    pub tau: Option<f64>,
}

/// An iterative scheme for minimizing the dissipation potential over
/// `{x >= delta}`.
pub trait Scheme: Send + Sync {
    fn name(&self) -> &'static str;

    /// Step parameter used when the configuration does not set one.
    fn practical_beta(&self) -> f64;

    /// Smoothness constant for which the convergence theorem applies, given
    /// `m`, `c_{A,b}` and the relative error target.
    fn theoretical_beta(&self, m: usize, c: f64, eps: f64) -> f64;

    /// Iteration count after which the relative error is at most `eps`.
    fn theoretical_iters(&self, m: usize, eps: f64) -> u64;

    fn start(&self, x0: WeightVector, params: &StepParams) -> Result<Box<dyn SchemeState>>;
}

/// Per-run iteration state owned by the driver.
pub trait SchemeState: Send {
    /// The iterate at which the next gradient is evaluated.
    fn current(&self) -> &WeightVector;

    /// Number of completed steps.
    fn steps(&self) -> u64;

    /// Moves to the next iterate given `grad f` at [`SchemeState::current`].
    fn advance(&mut self, gradient: &DVector<f64>) -> Result<()>;
}

/// Schemes addressable by name.
#[derive(Clone, Default)]
pub struct SchemeRegistry {
    schemes: BTreeMap<&'static str, Arc<dyn Scheme>>,
}

impl SchemeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// `pgs`, `ags` and `ags2`.
    pub fn builtin() -> Self {
        Self::new()
            .with(Arc::new(PrimalGradient))
            .with(Arc::new(Accelerated::euclidean()))
            .with(Arc::new(Accelerated::entropic()))
    }

    pub fn with(mut self, scheme: Arc<dyn Scheme>) -> Self {
        self.register(scheme);
        self
    }

    /// Registers `scheme`, replacing any scheme with the same name.
    pub fn register(&mut self, scheme: Arc<dyn Scheme>) {
        self.schemes.insert(scheme.name(), scheme);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Scheme>> {
        let key = name.to_ascii_lowercase();
        self.schemes
            .get(key.as_str())
            .cloned()
            .ok_or_else(|| Error::UnknownScheme(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.schemes.keys().copied()
    }
}

impl fmt::Debug for SchemeRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names()).finish()
    }
}
