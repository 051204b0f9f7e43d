//! Matérn 5/2 kernel with one lengthscale per input dimension.

const SQRT5: f64 = 2.236_067_977_499_79;

#[derive(Clone, Debug, PartialEq)]
pub struct KernelHyperparams {
    pub lengthscales: Vec<f64>,
    pub outputscale: f64,
    pub noise_variance: f64,
    pub mean_constant: f64,
}

impl KernelHyperparams {
    pub fn new(lengthscales: Vec<f64>, outputscale: f64, noise_variance: f64, mean_constant: f64) -> Self {
        Self {
            lengthscales,
            outputscale,
            noise_variance,
            mean_constant,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lengthscales.iter().all(|l| *l > 0.0 && l.is_finite())
            && self.outputscale > 0.0
            && self.outputscale.is_finite()
            && self.noise_variance >= 0.0
            && self.noise_variance.is_finite()
            && self.mean_constant.is_finite()
    }

    /// Scaled distance `r = ‖(a − b) / ℓ‖`.
    #[inline]
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for ((x, y), l) in a.iter().zip(b).zip(&self.lengthscales) {
            let t = (x - y) / l;
            s += t * t;
        }
        s.sqrt()
    }

    #[inline]
    pub fn k(&self, a: &[f64], b: &[f64]) -> f64 {
        matern52(self.distance(a, b), self.outputscale)
    }

    /// `∂k(a, b)/∂a` accumulated as `out += scale · ∂k/∂a`.
    #[inline]
    pub fn add_grad_a(&self, a: &[f64], b: &[f64], scale: f64, out: &mut [f64]) {
        if scale == 0.0 {
            return;
        }
        let r = self.distance(a, b);
        let c = -scale * (5.0 / 3.0) * self.outputscale * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp();
        for (((o, x), y), l) in out.iter_mut().zip(a).zip(b).zip(&self.lengthscales) {
            *o += c * (x - y) / (l * l);
        }
    }
}

#[inline]
pub fn matern52(r: f64, outputscale: f64) -> f64 {
    let sr = SQRT5 * r;
    outputscale * (1.0 + sr + sr * sr / 3.0) * (-sr).exp()
}

/// `(5/3) s (1 + √5 r) e^{−√5 r}`, the common factor of the derivatives with
/// respect to inputs and log-lengthscales.
#[inline]
pub(crate) fn matern52_radial_factor(r: f64, outputscale: f64) -> f64 {
    (5.0 / 3.0) * outputscale * (1.0 + SQRT5 * r) * (-SQRT5 * r).exp()
}
