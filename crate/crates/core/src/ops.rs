//! Core alternating-minimization operators.
//!
//! The one-step map factors as T(x) = (A^* A)^{-1} g(x) with
//! g(x) = sum_i y_i * phase(a_i^* x) * a_i. The equivalent
//! measurement-space route P_S(P_A(Ax)) is kept as an independent
//! cross-check; the coefficient-space route is the default.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::measurement::{Observations, SensingEnsemble, Signal, C64};

/// A vector in observation space C^m.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSpaceVector(DVector<C64>);

impl MeasurementSpaceVector {
    pub fn new(entries: DVector<C64>) -> Self {
        Self(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.0
    }
}

/// Unit phase of a complex scalar; 0 maps to 1 so the projection stays
/// deterministic on the measure-zero set where a component vanishes.
fn unit_phase(c: C64) -> C64 {
    let r = c.norm();
    if r == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        c / r
    }
}

/// Orthogonal projection onto range(A): w -> Q Q^* w.
pub fn project_range(ensemble: &SensingEnsemble, w: &MeasurementSpaceVector) -> Result<MeasurementSpaceVector> {
    if w.len() != ensemble.m() {
        return Err(Error::Dimension("project_range: length mismatch".into()));
    }
    let coeffs = ensemble.q().ad_mul(w.as_vector());
    Ok(MeasurementSpaceVector(ensemble.q() * coeffs))
}

/// Projection onto the amplitude set: [P_A(w)]_i = y_i * phase(w_i).
pub fn project_amplitude(y: &Observations, w: &MeasurementSpaceVector) -> Result<MeasurementSpaceVector> {
    if w.len() != y.len() {
        return Err(Error::Dimension("project_amplitude: length mismatch".into()));
    }
    let out = DVector::from_iterator(
        w.len(),
        w.as_vector()
            .iter()
            .zip(y.values().iter())
            .map(|(&wi, &yi)| unit_phase(wi) * yi),
    );
    Ok(MeasurementSpaceVector(out))
}

/// g(x) = sum_i y_i * phase(a_i^* x) * a_i = A^* (y .* phase(A x)).
pub fn apply_g(ensemble: &SensingEnsemble, y: &Observations, x: &Signal) -> Result<Signal> {
    if x.dim() != ensemble.n() {
        return Err(Error::Dimension("apply_g: signal dimension mismatch".into()));
    }
    if y.len() != ensemble.m() {
        return Err(Error::Dimension("apply_g: observation length mismatch".into()));
    }
    if x.norm() == 0.0 {
        return Err(Error::DegenerateInput("apply_g requires x != 0".into()));
    }
    let ax = ensemble.apply(x.as_vector())?;
    let v = DVector::from_iterator(
        ensemble.m(),
        ax.iter().zip(y.values().iter()).map(|(&c, &yi)| unit_phase(c) * yi),
    );
    Signal::new(ensemble.apply_adjoint(&v)?)
}

/// One alternating-minimization step: T(x) = (A^* A)^{-1} g(x).
pub fn altmin_step(ensemble: &SensingEnsemble, y: &Observations, x: &Signal) -> Result<Signal> {
    let g = apply_g(ensemble, y, x)?;
    Signal::new(ensemble.solve_normal(g.as_vector())?)
}
