use serde::{Deserialize, Serialize};

/// A real function of one variable with a serializable description.
///
/// Closed forms cover the catalog; `Samples` holds tabulated values
/// (linear interpolation between abscissae) and is what mollification and
/// reconstruction produce.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// `coeff * x^exponent`
    Power { coeff: f64, exponent: f64 },
    /// `coeff * sin x`
    Sin { coeff: f64 },
    /// `coeff * cos x`
    Cos { coeff: f64 },
    /// `coeff * sin^2 x`
    SinSquared { coeff: f64 },
    /// `cos r + (n - 1)/r sin r - sin^2 r`
    RadialOscillating { n: u32 },
    /// `height * max(0, 1 - |x - center| / half_width)`
    Tent {
        center: f64,
        half_width: f64,
        height: f64,
    },
    Sum { terms: Vec<Profile> },
    Scaled { factor: f64, inner: Box<Profile> },
    Samples { abscissae: Vec<f64>, values: Vec<f64> },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn zero() -> Self {
        Profile::Constant { value: 0.0 }
    }

    pub fn power(coeff: f64, exponent: f64) -> Self {
        Profile::Power { coeff, exponent }
    }

    pub fn scaled(self, factor: f64) -> Self {
        match self {
            Profile::Constant { value } => Profile::Constant {
                value: factor * value,
            },
            Profile::Scaled { factor: f, inner } => Profile::Scaled {
                factor: f * factor,
                inner,
            },
            other => Profile::Scaled {
                factor,
                inner: Box::new(other),
            },
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Power { coeff, exponent } => {
                if *exponent == exponent.trunc() && exponent.abs() < 64.0 {
                    coeff * x.powi(*exponent as i32)
                } else {
                    coeff * x.powf(*exponent)
                }
            }
            Profile::Sin { coeff } => coeff * x.sin(),
            Profile::Cos { coeff } => coeff * x.cos(),
            Profile::SinSquared { coeff } => coeff * x.sin().powi(2),
            Profile::RadialOscillating { n } => {
                let s = x.sin();
                let radial = if *n > 1 { (*n as f64 - 1.0) / x * s } else { 0.0 };
                x.cos() + radial - s * s
            }
            Profile::Tent {
                center,
                half_width,
                height,
            } => height * (1.0 - (x - center).abs() / half_width).max(0.0),
            Profile::Sum { terms } => terms.iter().map(|t| t.eval(x)).sum(),
            Profile::Scaled { factor, inner } => factor * inner.eval(x),
            Profile::Samples { abscissae, values } => interpolate(abscissae, values, x),
        }
    }

    /// First derivative (one-sided slope for piecewise-linear profiles).
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Profile::Constant { .. } => 0.0,
            Profile::Power { coeff, exponent } => {
                if *exponent == 0.0 {
                    0.0
                } else {
                    coeff * exponent * x.powf(exponent - 1.0)
                }
            }
            Profile::Sin { coeff } => coeff * x.cos(),
            Profile::Cos { coeff } => -coeff * x.sin(),
            Profile::SinSquared { coeff } => coeff * (2.0 * x).sin(),
            Profile::RadialOscillating { n } => {
                let (s, c) = x.sin_cos();
                let radial = if *n > 1 {
                    (*n as f64 - 1.0) * (c / x - s / (x * x))
                } else {
                    0.0
                };
                -s + radial - 2.0 * s * c
            }
            Profile::Tent {
                center,
                half_width,
                height,
            } => {
                let d = x - center;
                if d.abs() >= *half_width {
                    0.0
                } else {
                    -height * d.signum() / half_width
                }
            }
            Profile::Sum { terms } => terms.iter().map(|t| t.derivative(x)).sum(),
            Profile::Scaled { factor, inner } => factor * inner.derivative(x),
            Profile::Samples { abscissae, values } => {
                let n = abscissae.len();
                if n < 2 || !(x >= abscissae[0] && x <= abscissae[n - 1]) {
                    return f64::NAN;
                }
                let i = abscissae.partition_point(|&a| a <= x).clamp(1, n - 1);
                (values[i] - values[i - 1]) / (abscissae[i] - abscissae[i - 1])
            }
        }
    }

    /// Whether the profile is identically zero by construction.
    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Constant { value } => *value == 0.0,
            Profile::Power { coeff, .. }
            | Profile::Sin { coeff }
            | Profile::Cos { coeff }
            | Profile::SinSquared { coeff } => *coeff == 0.0,
            Profile::Tent { height, .. } => *height == 0.0,
            Profile::Sum { terms } => terms.iter().all(Profile::is_zero),
            Profile::Scaled { factor, inner } => *factor == 0.0 || inner.is_zero(),
            Profile::Samples { values, .. } => values.iter().all(|v| *v == 0.0),
            Profile::RadialOscillating { .. } => false,
        }
    }

    /// Range on which the profile is defined (`Samples` only; closed forms
    /// are defined everywhere they are finite).
    pub fn support(&self) -> Option<(f64, f64)> {
        match self {
            Profile::Samples { abscissae, .. } => {
                Some((abscissae[0], abscissae[abscissae.len() - 1]))
            }
            Profile::Sum { terms } => terms.iter().filter_map(Profile::support).fold(None, |acc, (a, b)| {
                Some(match acc {
                    None => (a, b),
                    Some((lo, hi)) => (f64::max(lo, a), f64::min(hi, b)),
                })
            }),
            Profile::Scaled { inner, .. } => inner.support(),
            _ => None,
        }
    }
}

/// Piecewise-linear interpolation; `NaN` outside the sample range.
fn interpolate(abscissae: &[f64], values: &[f64], x: f64) -> f64 {
    let n = abscissae.len();
    if n == 0 || !(x >= abscissae[0] && x <= abscissae[n - 1]) {
        return f64::NAN;
    }
    if n == 1 {
        return values[0];
    }
    let i = abscissae.partition_point(|&a| a < x);
    if i < n && abscissae[i] == x {
        return values[i];
    }
    let i = i.clamp(1, n - 1);
    let (x0, x1) = (abscissae[i - 1], abscissae[i]);
    let t = (x - x0) / (x1 - x0);
    values[i - 1] * (1.0 - t) + values[i] * t
}
