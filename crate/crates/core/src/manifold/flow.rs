//! Flows of vector fields and their Jacobian determinants.

use super::{trig::TrigFunction, Manifold, VectorField};

pub const DEFAULT_FLOW_STEP: f64 = 1e-3;

/// The flow `ψ^{w,t}` of a vector field together with `log det Dψ^{w,t}`.
///
/// Integration is classical RK4 on the augmented system
/// `ẋ = w(x)`, `ℓ̇ = div w(x)`. Constant fields are translated exactly
/// and divergence-free fields report `logdet = 0` exactly.
#[derive(Clone, Debug)]
pub struct Flow {
    field: VectorField,
    div: TrigFunction,
    constant: Option<Vec<f64>>,
    divergence_free: bool,
    step: f64,
    manifold: Manifold,
}

impl Flow {
    pub fn new(manifold: &Manifold, field: VectorField) -> Self {
        Flow::with_step(manifold, field, DEFAULT_FLOW_STEP)
    }

    pub fn with_step(manifold: &Manifold, field: VectorField, step: f64) -> Self {
        let div = field.divergence(manifold);
        let divergence_free = div.is_zero();
        let constant = field
            .is_constant()
            .then(|| field.components().iter().map(TrigFunction::mean).collect());
        Flow { field, div, constant, divergence_free, step, manifold: *manifold }
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn divergence(&self) -> &TrigFunction {
        &self.div
    }

    pub fn is_translation(&self) -> bool {
        self.constant.is_some()
    }

    pub fn is_measure_preserving(&self) -> bool {
        self.divergence_free
    }

    /// `(ψ^{w,t}(x), log det Dψ^{w,t}(x))`.
    pub fn map(&self, t: f64, x: &[f64]) -> (Vec<f64>, f64) {
        let m = &self.manifold;
        if let Some(v) = &self.constant {
            let mut y: Vec<f64> = x.iter().zip(v).map(|(a, b)| a + t * b).collect();
            m.wrap(&mut y);
            return (y, 0.0);
        }
        let n = (t.abs() / self.step).ceil().max(1.0) as usize;
        let h = t / n as f64;
        let d = x.len();
        let mut y = x.to_vec();
        let mut logdet = 0.0;
        let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
        let mut tmp = vec![0.0; d];
        for _ in 0..n {
            self.field.eval(m, &y, &mut k1);
            let l1 = self.div_at(&y);
            axpy(&y, 0.5 * h, &k1, &mut tmp);
            self.field.eval(m, &tmp, &mut k2);
            let l2 = self.div_at(&tmp);
            axpy(&y, 0.5 * h, &k2, &mut tmp);
            self.field.eval(m, &tmp, &mut k3);
            let l3 = self.div_at(&tmp);
            axpy(&y, h, &k3, &mut tmp);
            self.field.eval(m, &tmp, &mut k4);
            let l4 = self.div_at(&tmp);
            for j in 0..d {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            logdet += h / 6.0 * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        }
        m.wrap(&mut y);
        if self.divergence_free {
            logdet = 0.0;
        }
        (y, logdet)
    }

    /// Density of `ψ^{w,t}_♯ m` with respect to `m` at `x`, i.e.
    /// `1 / det Dψ^{w,t}(ψ^{w,-t} x) = det Dψ^{w,-t}(x)`.
    pub fn pushforward_density(&self, t: f64, x: &[f64]) -> f64 {
        if self.divergence_free {
            return 1.0;
        }
        self.map(-t, x).1.exp()
    }

    fn div_at(&self, x: &[f64]) -> f64 {
        if self.divergence_free {
            0.0
        } else {
            self.div.value(&self.manifold, x)
        }
    }
}

fn axpy(y: &[f64], a: f64, k: &[f64], out: &mut [f64]) {
    for ((o, &yi), &ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + a * ki;
    }
}
