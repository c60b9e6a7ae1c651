//! Angle and distance functionals on signal pairs.

use crate::error::{Error, Result};
use crate::measurement::{Observations, SensingEnsemble, Signal};

/// Alignment angle theta(x) = arcsin(|x^* z| / (|x| |z|)), in [0, pi/2].
///
/// pi/2 means x is a scalar multiple of z; 0 means orthogonality. The
/// arcsin argument is clamped to [0, 1] against rounding overshoot.
pub fn theta(x: &Signal, z: &Signal) -> Result<f64> {
    if x.dim() != z.dim() {
        return Err(Error::Dimension("theta: dimension mismatch".into()));
    }
    let nx = x.norm();
    let nz = z.norm();
    if nx == 0.0 || nz == 0.0 {
        return Err(Error::DegenerateInput("theta is undefined for the zero vector".into()));
    }
    let corr = (x.inner(z).norm() / (nx * nz)).clamp(0.0, 1.0);
    Ok(corr.asin())
}

/// Distance up to a global phase: inf over phi of |e^{i phi} z - x|,
/// evaluated by the closed form sqrt(|x|^2 + |z|^2 - 2 |x^* z|).
pub fn dist_phase(x: &Signal, z: &Signal) -> Result<f64> {
    if x.dim() != z.dim() {
        return Err(Error::Dimension("dist_phase: dimension mismatch".into()));
    }
    let sq = x.norm().powi(2) + z.norm().powi(2) - 2.0 * x.inner(z).norm();
    Ok(sq.max(0.0).sqrt())
}

/// Relative amplitude residual | |Ax| - y | / |y|.
pub fn residual(ensemble: &SensingEnsemble, y: &Observations, x: &Signal) -> Result<f64> {
    if y.len() != ensemble.m() {
        return Err(Error::Dimension("residual: observation length mismatch".into()));
    }
    if x.dim() != ensemble.n() {
        return Err(Error::Dimension("residual: signal dimension mismatch".into()));
    }
    let ynorm = y.norm();
    if ynorm == 0.0 {
        return Err(Error::DegenerateObservations);
    }
    let ax = ensemble.apply(x.as_vector())?;
    let diff: f64 = ax
        .iter()
        .zip(y.values().iter())
        .map(|(c, &yi)| (c.norm() - yi).powi(2))
        .sum::<f64>()
        .sqrt();
    Ok(diff / ynorm)
}

/// Recovery test: dist_phase of the unit-normalized pair below `tol`.
pub fn success(x: &Signal, z: &Signal, tol: f64) -> Result<bool> {
    let xn = x.normalized()?;
    let zn = z.normalized()?;
    Ok(dist_phase(&xn, &zn)? <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{observe, sample_sensing, sample_signal, random_unit, C64};
    use crate::rng::RngStream;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use proptest::prelude::*;

    fn stream(id: u64) -> RngStream {
        RngStream::with_stream(11, id)
    }

    /// Unit vector orthogonal to z, deterministically derived.
    fn orthogonal_unit(z: &Signal, id: u64) -> Signal {
        let w = sample_signal(z.dim(), false, stream(id)).unwrap();
        let proj = z.inner(&w);
        let v = w.as_vector() - z.as_vector() * (proj / C64::new(z.norm().powi(2), 0.0));
        Signal::new(v).unwrap().normalized().unwrap()
    }

    #[test]
    fn theta_aligned_is_half_pi() {
        let z = random_unit(8, stream(0)).unwrap();
        assert_relative_eq!(theta(&z, &z).unwrap(), std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
    }

    #[test]
    fn theta_orthogonal_is_zero() {
        let z = random_unit(8, stream(1)).unwrap();
        let w = orthogonal_unit(&z, 2);
        assert!(theta(&w, &z).unwrap() < 1e-7);
    }

    #[test]
    fn theta_midway_is_quarter_pi() {
        let z = random_unit(8, stream(3)).unwrap();
        let w = orthogonal_unit(&z, 4);
        let s = 0.5f64.sqrt();
        let x = Signal::new(z.as_vector() * C64::new(s, 0.0) + w.as_vector() * C64::new(s, 0.0)).unwrap();
        assert_relative_eq!(theta(&x, &z).unwrap(), std::f64::consts::FRAC_PI_4, epsilon = 1e-9);
    }

    #[test]
    fn theta_zero_vector_rejected() {
        let z = random_unit(4, stream(5)).unwrap();
        let zero = Signal::from_slice(&[C64::new(0.0, 0.0); 4]).unwrap();
        assert!(theta(&zero, &z).is_err());
    }

    #[test]
    fn theta_clamps_overshoot() {
        // |x^* z| marginally above |x||z| must still land in [0, pi/2].
        let z = Signal::from_slice(&[C64::new(1.0 + 1e-16, 0.0)]).unwrap();
        let x = Signal::from_slice(&[C64::new(1.0, 0.0)]).unwrap();
        let t = theta(&x, &z).unwrap();
        assert!(t <= std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn dist_phase_examples() {
        let z = random_unit(6, stream(6)).unwrap();
        assert_relative_eq!(dist_phase(&z, &z).unwrap(), 0.0, epsilon = 1e-12);
        let iz = z.scale(C64::new(0.0, 1.0));
        assert!(dist_phase(&iz, &z).unwrap() < 1e-7);
        let w = orthogonal_unit(&z, 7);
        assert_relative_eq!(dist_phase(&w, &z).unwrap(), 2f64.sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn residual_examples() {
        let a = sample_sensing(32, 8, stream(8)).unwrap();
        let z = random_unit(8, stream(9)).unwrap();
        let y = observe(&a, &z).unwrap();
        assert!(residual(&a, &y, &z).unwrap() < 1e-12);
        let pz = z.scale(C64::new(0.0, 0.7).exp());
        assert!(residual(&a, &y, &pz).unwrap() < 1e-12);
        let zero = Signal::new(DVector::from_element(8, C64::new(0.0, 0.0))).unwrap();
        assert_relative_eq!(residual(&a, &y, &zero).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn residual_zero_observations_rejected() {
        let a = sample_sensing(8, 2, stream(10)).unwrap();
        let y = Observations::new(DVector::from_element(8, 0.0)).unwrap();
        let x = random_unit(2, stream(11)).unwrap();
        assert!(matches!(residual(&a, &y, &x), Err(Error::DegenerateObservations)));
    }

    #[test]
    fn success_examples() {
        let z = random_unit(8, stream(12)).unwrap();
        let x = z.scale(C64::new(0.0, 1.0).exp() * C64::new(5.0, 0.0));
        assert!(success(&x, &z, 1e-6).unwrap());
        let w = orthogonal_unit(&z, 13);
        assert!(!success(&w, &z, 0.1).unwrap());
        assert!(success(&w, &z, 2.0).unwrap());
    }

    proptest! {
        #[test]
        fn theta_invariant_under_phase_and_scale(seed in 0u64..500, phi in 0.0f64..6.28, c in 0.1f64..10.0) {
            let z = random_unit(8, stream(1000 + seed)).unwrap();
            let x = sample_signal(8, false, stream(2000 + seed)).unwrap();
            let t1 = theta(&x, &z).unwrap();
            let t2 = theta(&x.scale(C64::new(0.0, phi).exp() * C64::new(c, 0.0)), &z).unwrap();
            prop_assert!((t1 - t2).abs() < 1e-9);
        }

        #[test]
        fn dist_phase_theta_relation(seed in 0u64..500) {
            // For unit x, z: dist_phase^2 = 2 (1 - sin theta).
            let z = random_unit(8, stream(3000 + seed)).unwrap();
            let x = random_unit(8, stream(4000 + seed)).unwrap();
            let d = dist_phase(&x, &z).unwrap();
            let t = theta(&x, &z).unwrap();
            prop_assert!((d * d - 2.0 * (1.0 - t.sin())).abs() < 1e-12);
        }
    }
}
