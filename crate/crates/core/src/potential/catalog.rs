use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{Potential, Profile};
use crate::error::{Error, Result};
use crate::mesh::Weight;

/// Closed-form positive solutions of `-div(a grad u) = sigma u` (a = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClosedForm {
    /// `r^exponent`
    Power { exponent: f64 },
    /// `exp(cos r)`
    ExpCos,
    /// `cos(sqrt(q) (x - 1/2))`
    CenteredCosine { q: f64 },
}

impl ClosedForm {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            ClosedForm::Power { exponent } => x.powf(exponent),
            ClosedForm::ExpCos => x.cos().exp(),
            ClosedForm::CenteredCosine { q } => (q.sqrt() * (x - 0.5)).cos(),
        }
    }

    /// `log u`.
    pub fn log_eval(&self, x: f64) -> f64 {
        match *self {
            ClosedForm::Power { exponent } => exponent * x.ln(),
            ClosedForm::ExpCos => x.cos(),
            ClosedForm::CenteredCosine { .. } => self.eval(x).ln(),
        }
    }
}

/// Example 3D operator `A = I + B` with an antisymmetric coupling between
/// the first two coordinates, for which `u = 1 + |x|^2` is an explicit
/// solution while `A xi . xi = |xi|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonSymmetric3d {
    pub strength: f64,
    /// The Lipschitz profile `a(x_1)`.
    pub coupling: Profile,
}

impl NonSymmetric3d {
    /// Coefficient matrix acting as `(A grad u)_i = sum_j A_ij d_j u`.
    ///
    /// The coupling sits at `A_21 = C a(x_1)`, `A_12 = -C a(x_1)`; with this
    /// orientation `div(A grad u)` picks up `-2 C a'(x_1) x_2`, which is the
    /// sign carried by `sigma` below.
    pub fn matrix(&self, x: [f64; 3]) -> [[f64; 3]; 3] {
        let b = self.strength * self.coupling.eval(x[0]);
        [[1.0, -b, 0.0], [b, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    pub fn solution(&self, x: [f64; 3]) -> f64 {
        1.0 + x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
    }

    /// `(-6 + 2 x_2 C a'(x_1)) / (1 + |x|^2)`
    pub fn sigma(&self, x: [f64; 3]) -> f64 {
        (-6.0 + 2.0 * x[1] * self.strength * self.coupling.derivative(x[0])) / self.solution(x)
    }
}

/// A catalogued example with its closed-form companions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleSpec {
    pub name: String,
    pub id: String,
    pub dimension: u32,
    pub parameters: BTreeMap<String, f64>,
    pub weight: Weight,
    pub domain: (f64, f64),
    pub potential: Option<Potential>,
    pub solution: Option<ClosedForm>,
    /// Radial component `g` of a certificate field `Gamma = g(r) x/r`.
    pub certificate: Option<Profile>,
    /// `(alpha_+, alpha_-)` for inverse-square potentials.
    pub exponents: Option<(f64, f64)>,
    pub supercritical: bool,
    pub nonsymmetric: Option<NonSymmetric3d>,
    pub summary: String,
}

impl ExampleSpec {
    /// Maximum relative strong residual of the closed-form solution on
    /// `samples` interior points, by fourth-order central differences. Wide annuli are
    /// sampled geometrically and measured pointwise; otherwise the residual
    /// is relative to the largest term over all samples.
    pub fn solution_residual(&self, samples: usize) -> Option<f64> {
        let (solution, sigma) = match (&self.solution, &self.potential) {
            (Some(u), Some(Potential::Pointwise { density })) => (u, density),
            _ => return None,
        };
        let n = self.weight.dimension() as f64;
        let (a, b) = self.domain;
        let mut worst = 0.0f64;
        let mut scale = f64::EPSILON;
        let geometric = a > 0.0 && b / a > 100.0;
        for i in 1..=samples {
            let t = i as f64 / (samples + 1) as f64;
            let x = if geometric { a * (b / a).powf(t) } else { a + (b - a) * t };
            let step = if geometric { 1e-3 * x } else { 1e-3 };
            let f = |k: f64| solution.eval(x + k * step);
            let u0 = f(0.0);
            let second = (-f(2.0) + 16.0 * f(1.0) - 30.0 * u0 + 16.0 * f(-1.0) - f(-2.0))
                / (12.0 * step * step);
            let first = (-f(2.0) + 8.0 * f(1.0) - 8.0 * f(-1.0) + f(-2.0)) / (12.0 * step);
            let radial = if n > 1.0 { (n - 1.0) / x * first } else { 0.0 };
            let potential = sigma.eval(x) * u0;
            let residual = -second - radial - potential;
            // scales vary by orders of magnitude across wide annuli
            let local = second.abs() + radial.abs() + potential.abs();
            if geometric {
                worst = worst.max(residual.abs() / local.max(f64::MIN_POSITIVE));
            } else {
                worst = worst.max(residual.abs());
                scale = scale.max(local);
            }
        }
        Some(if geometric { worst } else { worst / scale })
    }
}

/// Catalog identifiers with their parameters.
pub fn catalog_names() -> &'static [&'static str] {
    &[
        "hardy(n, c)",
        "radial_oscillating(n)",
        "oscillating_1d",
        "constant(q)",
        "nonsym_3d(C)",
    ]
}

/// Tolerance of the construction-time self-test.
const SELF_TEST_TOLERANCE: f64 = 1e-5;

/// Looks up a catalog entry by name and parameters.
pub fn catalog(name: &str, params: &BTreeMap<String, f64>) -> Result<ExampleSpec> {
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    let dim = |key: &str, default: f64| -> Result<u32> {
        let n = get(key, default);
        if n < 1.0 || n != n.trunc() {
            return Err(Error::InvalidArgument(format!("dimension must be a positive integer, got {n}")));
        }
        Ok(n as u32)
    };
    let mut used = BTreeMap::new();
    let spec = match name {
        "hardy" => {
            let n = dim("n", 3.0)?;
            if n < 2 {
                return Err(Error::InvalidArgument("hardy needs n >= 2".into()));
            }
            let c = get("c", 0.1875);
            used.insert("n".into(), n as f64);
            used.insert("c".into(), c);
            let critical = (n as f64 - 2.0).powi(2) / 4.0;
            let disc = (n as f64 - 2.0).powi(2) - 4.0 * c;
            let supercritical = c > critical;
            let exponents = (!supercritical).then(|| {
                let root = 0.5 * disc.max(0.0).sqrt();
                let base = (2.0 - n as f64) / 2.0;
                (base + root, base - root)
            });
            ExampleSpec {
                name: "hardy".into(),
                id: String::new(),
                dimension: n,
                parameters: used,
                weight: Weight::Radial { n },
                domain: (1e-3, 1e3),
                potential: Some(Potential::pointwise(Profile::power(c, -2.0))),
                solution: exponents.map(|(plus, _)| ClosedForm::Power { exponent: plus }),
                certificate: exponents.map(|(plus, _)| Profile::power(-plus, -1.0)),
                exponents,
                supercritical,
                nonsymmetric: None,
                summary: "sigma = c/|x|^2; u = |x|^alpha with alpha = (2-n)/2 +- sqrt((n-2)^2 - 4c)/2; form bound 4c/(n-2)^2".into(),
            }
        }
        "radial_oscillating" => {
            let n = dim("n", 3.0)?;
            if n < 2 {
                return Err(Error::InvalidArgument(
                    "radial_oscillating needs n >= 2; use oscillating_1d".into(),
                ));
            }
            used.insert("n".into(), n as f64);
            ExampleSpec {
                name: "radial_oscillating".into(),
                id: String::new(),
                dimension: n,
                parameters: used,
                weight: Weight::Radial { n },
                domain: (1e-2, 20.0),
                potential: Some(Potential::pointwise(Profile::RadialOscillating { n })),
                solution: Some(ClosedForm::ExpCos),
                certificate: Some(Profile::Sin { coeff: 1.0 }),
                exponents: None,
                supercritical: false,
                nonsymmetric: None,
                summary: "sigma = cos r + (n-1)/r sin r - sin^2 r = div Gamma - |Gamma|^2 with Gamma = sin r x/r; u = exp(cos r)".into(),
            }
        }
        "oscillating_1d" => ExampleSpec {
            name: "oscillating_1d".into(),
            id: String::new(),
            dimension: 1,
            parameters: used,
            weight: Weight::Flat,
            domain: (0.0, 10.0),
            potential: Some(Potential::pointwise(Profile::RadialOscillating { n: 1 })),
            solution: Some(ClosedForm::ExpCos),
            certificate: Some(Profile::Sin { coeff: 1.0 }),
            exponents: None,
            supercritical: false,
            nonsymmetric: None,
            summary: "sigma = cos x - sin^2 x = Gamma' - Gamma^2 with Gamma = sin x; u = exp(cos x)".into(),
        },
        "constant" => {
            let q = get("q", PI * PI / 4.0);
            used.insert("q".into(), q);
            ExampleSpec {
                name: "constant".into(),
                id: String::new(),
                dimension: 1,
                parameters: used,
                weight: Weight::Flat,
                domain: (0.0, 1.0),
                potential: Some(Potential::pointwise(Profile::constant(q))),
                solution: (q >= 0.0 && q < PI * PI).then_some(ClosedForm::CenteredCosine { q }),
                certificate: None,
                exponents: None,
                supercritical: q >= PI * PI,
                nonsymmetric: None,
                summary: "sigma = q on (0,1); u = cos(sqrt(q)(x - 1/2)), form bound q/pi^2".into(),
            }
        }
        "nonsym_3d" => {
            let strength = params
                .get("C")
                .or_else(|| params.get("c"))
                .copied()
                .unwrap_or(1.0);
            used.insert("C".into(), strength);
            ExampleSpec {
                name: "nonsym_3d".into(),
                id: String::new(),
                dimension: 3,
                parameters: used,
                weight: Weight::Radial { n: 3 },
                domain: (0.0, 1.0),
                potential: None,
                solution: None,
                certificate: None,
                exponents: None,
                supercritical: false,
                nonsymmetric: Some(NonSymmetric3d {
                    strength,
                    coupling: Profile::power(1.0, 1.0),
                }),
                summary: "A = I + B, B antisymmetric with coupling C a(x_1) = C x_1; u = 1 + |x|^2, sigma = (-6 + 2 x_2 C a'(x_1))/(1 + |x|^2)".into(),
            }
        }
        other => return Err(Error::UnknownExample(other.to_string())),
    };
    let mut spec = spec;
    spec.id = format_id(&spec.name, &spec.parameters);
    if let Some(residual) = spec.solution_residual(64) {
        if residual > SELF_TEST_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "closed-form solution of {} fails its self-test (residual {residual})",
                spec.id
            )));
        }
    }
    Ok(spec)
}

fn format_id(name: &str, params: &BTreeMap<String, f64>) -> String {
    if params.is_empty() {
        return name.to_string();
    }
    let inner: Vec<String> = params.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("{name}({})", inner.join(","))
}

/// Parses `name` or `name(key=value, ...)`.
pub fn parse_example(text: &str) -> Result<ExampleSpec> {
    let text = text.trim();
    let (name, args) = match text.find('(') {
        Some(open) => {
            let close = text
                .rfind(')')
                .filter(|&c| c > open && c == text.len() - 1)
                .ok_or_else(|| Error::InvalidArgument(format!("unbalanced parentheses in `{text}`")))?;
            (&text[..open], &text[open + 1..close])
        }
        None => (text, ""),
    };
    let mut params = BTreeMap::new();
    for item in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got `{item}`")))?;
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad number in `{item}`")))?;
        params.insert(key.trim().to_string(), value);
    }
    catalog(name.trim(), &params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hardy_exponents() {
        let spec = parse_example("hardy(n=3, c=0.1875)").unwrap();
        let (plus, minus) = spec.exponents.unwrap();
        assert_relative_eq!(plus, -0.25, epsilon = 1e-15);
        assert_relative_eq!(minus, -0.75, epsilon = 1e-15);
        assert!(!spec.supercritical);
    }

    #[test]
    fn harmonic_degenerate_case() {
        let spec = parse_example("hardy(n=3,c=0)").unwrap();
        assert_eq!(spec.exponents, Some((0.0, -1.0)));
    }

    #[test]
    fn supercritical_hardy_is_flagged() {
        let spec = parse_example("hardy(n=3,c=0.3)").unwrap();
        assert!(spec.supercritical);
        assert!(spec.exponents.is_none());
    }

    #[test]
    fn oscillating_identity_holds_pointwise() {
        // div Gamma - |Gamma|^2 with Gamma = sin r x/r, n = 3
        let spec = parse_example("radial_oscillating(n=3)").unwrap();
        let sigma = match spec.potential.unwrap() {
            Potential::Pointwise { density } => density,
            _ => unreachable!(),
        };
        let g = spec.certificate.unwrap();
        for i in 1..200 {
            let r = 0.1 * i as f64;
            let div = g.derivative(r) + 2.0 / r * g.eval(r);
            assert!((div - g.eval(r).powi(2) - sigma.eval(r)).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_forms_pass_self_test() {
        for id in ["hardy(n=3,c=0.16)", "hardy(n=5,c=1)", "radial_oscillating(n=3)", "oscillating_1d", "constant(q=2)"] {
            let spec = parse_example(id).unwrap();
            assert!(spec.solution_residual(64).unwrap() < 1e-5, "{id}");
        }
    }

    #[test]
    fn unknown_and_malformed_names() {
        assert!(matches!(parse_example("airy"), Err(Error::UnknownExample(_))));
        assert!(parse_example("hardy(n=3").is_err());
        assert!(parse_example("hardy(n)").is_err());
    }

    #[test]
    fn nonsymmetric_example_form_is_identity() {
        let spec = parse_example("nonsym_3d(C=1)").unwrap();
        let ex = spec.nonsymmetric.unwrap();
        let a = ex.matrix([0.3, -0.2, 0.5]);
        let xi = [0.7, -1.3, 0.4];
        let mut q = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                q += xi[i] * a[i][j] * xi[j];
            }
        }
        assert_relative_eq!(q, xi.iter().map(|v| v * v).sum::<f64>(), epsilon = 1e-15);
    }
}
