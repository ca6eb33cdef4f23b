use crate::scalar::Real;

/// ADAM moments over a fixed set of coordinates.
#[derive(Debug, Clone)]
pub(crate) struct Adam<T> {
    beta1: T,
    beta2: T,
    eps: T,
    m: Vec<T>,
    v: Vec<T>,
    t: i32,
}

impl<T: Real> Adam<T> {
    pub(crate) fn new(len: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1: T::lit(beta1),
            beta2: T::lit(beta2),
            eps: T::lit(eps),
            m: vec![T::zero(); len],
            v: vec![T::zero(); len],
            t: 0,
        }
    }

    /// Folds `grad` into the moments and returns the bias-corrected direction
    /// `m̂ / (√v̂ + ε)`.
    pub(crate) fn direction(&mut self, grad: &[T]) -> Vec<T> {
        self.t += 1;
        let one = T::one();
        let c1 = one - self.beta1.powi(self.t);
        let c2 = one - self.beta2.powi(self.t);
        let mut dir = Vec::with_capacity(grad.len());
        for (k, &g) in grad.iter().enumerate() {
            self.m[k] = self.beta1 * self.m[k] + (one - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (one - self.beta2) * g * g;
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            dir.push(m_hat / (v_hat.sqrt() + self.eps));
        }
        dir
    }
}
