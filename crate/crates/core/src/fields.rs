//! Log-uniform conductivity fields built by kernel convolution and the two
//! velocity families: a constant vector, and the divergence-free rotated
//! gradient of a log-uniform stream function.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Centers closer than this to an evaluation point make the stream-function
/// gradient singular.
const SINGULAR_RADIUS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum VelocityField<T> {
    /// Deterministic constant velocity.
    Constant([T; 2]),
    /// `a = (dS/dx2, -dS/dx1)` with `S = exp(sum_i w_i k(x - c_i))`, driven by
    /// the sample coordinates after the conductivity block.
    Stream { centers: Vec<[T; 2]> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldConfig<T> {
    centers: Vec<[T; 2]>,
    decay: T,
    velocity: VelocityField<T>,
}

/// `nx` by `ny` kernel centers spread uniformly over the closed unit square.
pub fn center_grid<T: Real>(nx: usize, ny: usize) -> Vec<[T; 2]> {
    let coord = |i: usize, n: usize| {
        if n == 1 {
            T::lit(0.5)
        } else {
            T::lit(i as f64) / T::lit((n - 1) as f64)
        }
    };
    let mut c = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            c.push([coord(i, nx), coord(j, ny)]);
        }
    }
    c
}

impl<T: Real> FieldConfig<T> {
    pub fn new(centers: Vec<[T; 2]>, decay: T, velocity: VelocityField<T>) -> Result<Self> {
        let inside = |c: &[T; 2]| c.iter().all(|&v| v >= T::zero() && v <= T::one());
        if !(decay > T::zero()) {
            return Err(Error::InvalidField(format!("decay must be positive, got {decay}")));
        }
        if !centers.iter().all(inside) {
            return Err(Error::InvalidField("conductivity center outside the unit square".into()));
        }
        if let VelocityField::Stream { centers: vc } = &velocity {
            if vc.is_empty() {
                return Err(Error::InvalidField("stream velocity needs at least one center".into()));
            }
            if !vc.iter().all(inside) {
                return Err(Error::InvalidField("velocity center outside the unit square".into()));
            }
        }
        if let VelocityField::Constant(a) = &velocity {
            if !a.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidField("non-finite constant velocity".into()));
            }
        }
        Ok(Self { centers, decay, velocity })
    }

    /// Conductivity on an `nx` by `ny` center grid with the given velocity.
    pub fn on_grid(nx: usize, ny: usize, decay: T, velocity: VelocityField<T>) -> Result<Self> {
        Self::new(center_grid(nx, ny), decay, velocity)
    }

    pub fn centers(&self) -> &[[T; 2]] {
        &self.centers
    }

    pub fn decay(&self) -> T {
        self.decay
    }

    pub fn velocity(&self) -> &VelocityField<T> {
        &self.velocity
    }

    pub fn s_kappa(&self) -> usize {
        self.centers.len()
    }

    pub fn s_velocity(&self) -> usize {
        match &self.velocity {
            VelocityField::Constant(_) => 0,
            VelocityField::Stream { centers } => centers.len(),
        }
    }

    /// Total stochastic dimension.
    pub fn dim(&self) -> usize {
        self.s_kappa() + self.s_velocity()
    }

    #[inline]
    fn kernel(&self, x: [T; 2], c: [T; 2]) -> (T, T) {
        let r = ((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)).sqrt();
        ((-self.decay * r).exp(), r)
    }
}

/// Point of the stochastic parameter domain `[0,1]^s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleVector<T = f64>(Vec<T>);

impl<T: Real> SampleVector<T> {
    pub fn new(omega: Vec<T>) -> Result<Self> {
        if let Some(bad) = omega.iter().find(|&&w| !(w >= T::zero() && w <= T::one())) {
            return Err(Error::InvalidInput(format!("sample coordinate {bad} outside [0, 1]")));
        }
        Ok(Self(omega))
    }

    pub fn zeros(s: usize) -> Self {
        Self(vec![T::zero(); s])
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// First `s` coordinates.
    pub fn truncated(&self, s: usize) -> Self {
        Self(self.0[..s.min(self.0.len())].to_vec())
    }

    pub fn cast<U: Real>(&self) -> SampleVector<U> {
        SampleVector(self.0.iter().map(|w| U::lit(w.as_f64())).collect())
    }
}

fn check_dim<T: Real>(cfg: &FieldConfig<T>, omega: &SampleVector<T>) -> Result<()> {
    if omega.len() != cfg.dim() {
        return Err(Error::DimensionMismatch { expected: cfg.dim(), got: omega.len() });
    }
    Ok(())
}

/// `kappa(x) = exp(sum_i w_i exp(-decay |x - c_i|))`.
pub fn eval_kappa<T: Real>(cfg: &FieldConfig<T>, omega: &SampleVector<T>, x: [T; 2]) -> Result<T> {
    check_dim(cfg, omega)?;
    Ok(kappa_unchecked(cfg, omega.as_slice(), x))
}

pub(crate) fn kappa_unchecked<T: Real>(cfg: &FieldConfig<T>, omega: &[T], x: [T; 2]) -> T {
    cfg.centers
        .iter()
        .zip(omega)
        .fold(T::zero(), |acc, (&c, &w)| acc + w * cfg.kernel(x, c).0)
        .exp()
}

/// Velocity at `x` for sample `omega`.
pub fn eval_velocity<T: Real>(cfg: &FieldConfig<T>, omega: &SampleVector<T>, x: [T; 2]) -> Result<[T; 2]> {
    check_dim(cfg, omega)?;
    velocity_unchecked(cfg, omega.as_slice(), x)
}

pub(crate) fn velocity_unchecked<T: Real>(cfg: &FieldConfig<T>, omega: &[T], x: [T; 2]) -> Result<[T; 2]> {
    match &cfg.velocity {
        VelocityField::Constant(a) => Ok(*a),
        VelocityField::Stream { centers } => {
            let weights = &omega[cfg.s_kappa()..];
            let mut log_s = T::zero();
            let mut grad = [T::zero(); 2];
            for (&c, &w) in centers.iter().zip(weights) {
                let (k, r) = cfg.kernel(x, c);
                if r.as_f64() < SINGULAR_RADIUS {
                    return Err(Error::SingularPoint { x: x[0].as_f64(), y: x[1].as_f64() });
                }
                log_s = log_s + w * k;
                let factor = -cfg.decay * w * k / r;
                grad[0] = grad[0] + factor * (x[0] - c[0]);
                grad[1] = grad[1] + factor * (x[1] - c[1]);
            }
            let s = log_s.exp();
            Ok([s * grad[1], -s * grad[0]])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(velocity: VelocityField<f64>) -> FieldConfig<f64> {
        FieldConfig::on_grid(5, 5, 12.5, velocity).unwrap()
    }

    #[test]
    fn zero_sample_gives_unit_conductivity() {
        let cfg = case(VelocityField::Constant([20.0, 0.0]));
        let w = SampleVector::zeros(25);
        for x in [[0.1, 0.2], [0.5, 0.5], [0.99, 0.01]] {
            assert_eq!(eval_kappa(&cfg, &w, x).unwrap(), 1.0);
        }
    }

    #[test]
    fn unit_weight_at_its_center_gives_e() {
        let cfg = case(VelocityField::Constant([20.0, 0.0]));
        let mut w = vec![0.0; 25];
        w[0] = 1.0;
        let w = SampleVector::new(w).unwrap();
        let k = eval_kappa(&cfg, &w, cfg.centers()[0]).unwrap();
        assert!((k - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn constant_velocity_ignores_sample_and_position() {
        let cfg = case(VelocityField::Constant([20.0, 0.0]));
        let w = SampleVector::new(vec![0.3; 25]).unwrap();
        assert_eq!(eval_velocity(&cfg, &w, [0.3, 0.7]).unwrap(), [20.0, 0.0]);
    }

    #[test]
    fn stream_velocity_vanishes_for_zero_weights() {
        let cfg = case(VelocityField::Stream { centers: center_grid(5, 5) });
        let mut w = vec![0.7; 50];
        w[25..].iter_mut().for_each(|v| *v = 0.0);
        let w = SampleVector::new(w).unwrap();
        assert_eq!(eval_velocity(&cfg, &w, [0.3, 0.6]).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn stream_velocity_rejects_kernel_centers() {
        let cfg = case(VelocityField::Stream { centers: center_grid(5, 5) });
        let w = SampleVector::new(vec![0.5; 50]).unwrap();
        assert!(matches!(
            eval_velocity(&cfg, &w, [0.25, 0.5]),
            Err(Error::SingularPoint { .. })
        ));
    }

    #[test]
    fn config_validation() {
        assert!(FieldConfig::on_grid(5, 5, -1.0, VelocityField::Constant([0.0, 0.0])).is_err());
        assert!(FieldConfig::new(vec![[1.5, 0.0]], 1.0, VelocityField::Constant([0.0, 0.0])).is_err());
        assert!(FieldConfig::<f64>::new(vec![], 1.0, VelocityField::Stream { centers: vec![] }).is_err());
        assert_eq!(FieldConfig::<f64>::new(vec![], 1.0, VelocityField::Constant([0.0, 0.0])).unwrap().dim(), 0);
        assert!(SampleVector::new(vec![0.5, 1.2]).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let cfg = case(VelocityField::Constant([0.0, 0.0]));
        assert!(matches!(
            eval_kappa(&cfg, &SampleVector::zeros(3), [0.5, 0.5]),
            Err(Error::DimensionMismatch { expected: 25, got: 3 })
        ));
    }
}
