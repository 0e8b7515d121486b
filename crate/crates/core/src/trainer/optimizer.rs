/// First-order update rule applied to the flattened `(θ, φ)` vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    PlainGradient,
    #[default]
    AdaptiveMoment,
}

impl OptimizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::PlainGradient => "plain-gradient",
            OptimizerKind::AdaptiveMoment => "adaptive-moment",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "plain-gradient" | "sgd" | "gd" => Some(Self::PlainGradient),
            "adaptive-moment" | "adam" => Some(Self::AdaptiveMoment),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) enum Optimizer {
    Plain {
        lr: f64,
    },
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
        m: Vec<f64>,
        v: Vec<f64>,
        t: i32,
    },
}

impl Optimizer {
    pub(crate) fn new(kind: OptimizerKind, lr: f64, n: usize) -> Self {
        match kind {
            OptimizerKind::PlainGradient => Optimizer::Plain { lr },
            OptimizerKind::AdaptiveMoment => Optimizer::Adam {
                lr,
                beta1: 0.9,
                beta2: 0.999,
                eps: 1e-8,
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
        }
    }

    pub(crate) fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        match self {
            Optimizer::Plain { lr } => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= *lr * g;
                }
            }
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
                m,
                v,
                t,
            } => {
                *t += 1;
                let bc1 = 1.0 - beta1.powi(*t);
                let bc2 = 1.0 - beta2.powi(*t);
                for i in 0..params.len() {
                    let g = grads[i];
                    m[i] = *beta1 * m[i] + (1.0 - *beta1) * g;
                    v[i] = *beta2 * v[i] + (1.0 - *beta2) * g * g;
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    params[i] -= *lr * m_hat / (v_hat.sqrt() + *eps);
                }
            }
        }
    }
}
