use serde::{Deserialize, Serialize};

/// Distribution of the iid driving noise `ε_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "kebab-case")]
pub enum Noise {
    Gaussian {
        #[serde(default = "one")]
        sigma: f64,
    },
    StudentT {
        nu: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Gaussian { sigma: 1.0 }
    }
}

impl Noise {
    pub fn variance(&self) -> f64 {
        match *self {
            Noise::Gaussian { sigma } => sigma * sigma,
            Noise::StudentT { nu, scale } if nu > 2.0 => scale * scale * nu / (nu - 2.0),
            Noise::StudentT { .. } => f64::INFINITY,
        }
    }

    /// Supremum of the finite absolute moment orders.
    pub fn moment_order(&self) -> f64 {
        match *self {
            Noise::Gaussian { .. } => f64::INFINITY,
            Noise::StudentT { nu, .. } => nu,
        }
    }
}

/// Causal short-memory innovation model `u_t = F(..., ε_{t-1}, ε_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InnovationModel {
    #[serde(alias = "iid-gauss")]
    IidGaussian {
        #[serde(default = "one")]
        sigma: f64,
    },
    #[serde(alias = "iid-t")]
    IidStudentT {
        nu: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `u_t = sum_k b_k ε_{t-k}`.
    #[serde(alias = "ma")]
    LinearMa {
        b: Vec<f64>,
        #[serde(default)]
        noise: Noise,
    },
    /// `u_t = σ_t ε_t`, `σ_t^2 = ω + α u_{t-1}^2 + β σ_{t-1}^2`.
    #[serde(alias = "garch")]
    Garch11 {
        omega: f64,
        alpha: f64,
        beta: f64,
        #[serde(default)]
        noise: Noise,
    },
    /// `u_t = (a + b ε_{t-1}) u_{t-1} + ε_t`, centred.
    Bilinear {
        a: f64,
        b: f64,
        #[serde(default)]
        noise: Noise,
    },
    /// `u_t = a⁺ max(u_{t-1}, 0) + a⁻ min(u_{t-1}, 0) + ε_t`, centred.
    #[serde(alias = "tar")]
    ThresholdAr {
        a_pos: f64,
        a_neg: f64,
        #[serde(default)]
        noise: Noise,
    },
    /// ARMA recursion driven by another innovation model:
    /// `u_t = sum φ_i u_{t-i} + v_t + sum θ_j v_{t-j}`.
    #[serde(alias = "arma")]
    ArmaFilter {
        #[serde(default)]
        ar: Vec<f64>,
        #[serde(default)]
        ma: Vec<f64>,
        inner: Box<InnovationSpec>,
    },
    /// Symmetric iid variables on the moment boundary, only valid in the
    /// moment-boundary demonstration.
    HeavyTailEta {
        q0: f64,
        #[serde(default = "default_v0")]
        v0: f64,
    },
    /// Deterministic constant sequence, for debugging filters.
    #[serde(alias = "const", alias = "const1")]
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
}

fn default_v0() -> f64 {
    std::f64::consts::E * std::f64::consts::E
}

/// Innovation model plus its declared moment order and warm-up length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnovationSpec {
    #[serde(flatten)]
    pub model: InnovationModel,
    /// Declared `q` with `E|u_t|^q < ∞`. Derived from the model when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_moment: Option<f64>,
    /// Warm-up draws discarded before `u_1`. Model default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
}

impl From<InnovationModel> for InnovationSpec {
    fn from(model: InnovationModel) -> Self {
        Self {
            model,
            q_moment: None,
            burn_in: None,
        }
    }
}

/// Default warm-up for recursive models.
pub const DEFAULT_BURN_IN: usize = 1000;

impl InnovationSpec {
    pub fn iid_gaussian(sigma: f64) -> Self {
        InnovationModel::IidGaussian { sigma }.into()
    }

    pub fn garch11(omega: f64, alpha: f64, beta: f64) -> Self {
        InnovationModel::Garch11 {
            omega,
            alpha,
            beta,
            noise: Noise::default(),
        }
        .into()
    }

    pub fn linear_ma(b: Vec<f64>) -> Self {
        InnovationModel::LinearMa {
            b,
            noise: Noise::default(),
        }
        .into()
    }

    pub fn name(&self) -> &'static str {
        match self.model {
            InnovationModel::IidGaussian { .. } => "iid-gaussian",
            InnovationModel::IidStudentT { .. } => "iid-student-t",
            InnovationModel::LinearMa { .. } => "linear-ma",
            InnovationModel::Garch11 { .. } => "garch11",
            InnovationModel::Bilinear { .. } => "bilinear",
            InnovationModel::ThresholdAr { .. } => "threshold-ar",
            InnovationModel::ArmaFilter { .. } => "arma-filter",
            InnovationModel::HeavyTailEta { .. } => "heavy-tail-eta",
            InnovationModel::Constant { .. } => "constant",
        }
    }

    pub fn burn_in(&self) -> usize {
        if let Some(b) = self.burn_in {
            return b;
        }
        match &self.model {
            InnovationModel::IidGaussian { .. }
            | InnovationModel::IidStudentT { .. }
            | InnovationModel::HeavyTailEta { .. }
            | InnovationModel::Constant { .. } => 0,
            InnovationModel::LinearMa { b, .. } => b.len().saturating_sub(1),
            InnovationModel::Garch11 { .. }
            | InnovationModel::Bilinear { .. }
            | InnovationModel::ThresholdAr { .. }
            | InnovationModel::ArmaFilter { .. } => DEFAULT_BURN_IN,
        }
    }

    /// Declared moment order, or the model's own when none was declared.
    pub fn q_moment(&self) -> f64 {
        if let Some(q) = self.q_moment {
            return q;
        }
        match &self.model {
            InnovationModel::IidGaussian { .. } | InnovationModel::Constant { .. } => f64::INFINITY,
            InnovationModel::IidStudentT { nu, .. } => *nu,
            InnovationModel::LinearMa { noise, .. }
            | InnovationModel::Bilinear { noise, .. }
            | InnovationModel::ThresholdAr { noise, .. } => noise.moment_order(),
            InnovationModel::Garch11 {
                alpha, beta, noise, ..
            } => {
                // Fourth moment of a Gaussian GARCH(1,1) exists iff β² + 2αβ + 3α² < 1.
                let gaussian = matches!(noise, Noise::Gaussian { .. });
                if gaussian && beta * beta + 2.0 * alpha * beta + 3.0 * alpha * alpha < 1.0 {
                    4.0
                } else {
                    2.0
                }
            }
            InnovationModel::ArmaFilter { inner, .. } => inner.q_moment(),
            InnovationModel::HeavyTailEta { q0, .. } => *q0,
        }
    }
}
