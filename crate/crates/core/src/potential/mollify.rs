use serde::{Deserialize, Serialize};

use super::{Potential, Profile};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Weight};
use crate::quadrature::GAUSS4;

/// Panels of the composite rule used for convolution integrals on (-1, 1).
const PANELS: usize = 128;

/// Standard bump `c exp(-1/(1 - t^2))` scaled to radius `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub radius: f64,
}

fn bump(t: f64) -> f64 {
    let s = 1.0 - t * t;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn bump_derivative(t: f64) -> f64 {
    let s = 1.0 - t * t;
    if s <= 0.0 {
        0.0
    } else {
        bump(t) * (-2.0 * t / (s * s))
    }
}

/// Convolution stencil: offsets `t_k` with weights for the bump and for its
/// derivative, both normalized so the bump weights sum to one.
struct Stencil {
    offsets: Vec<f64>,
    weights: Vec<f64>,
    derivative_weights: Vec<f64>,
    mass: f64,
}

impl Stencil {
    fn new() -> Self {
        let rule = GAUSS4.composite(-1.0, 1.0, PANELS);
        let mass: f64 = rule.iter().map(|&(t, w)| w * bump(t)).sum();
        Self {
            offsets: rule.iter().map(|p| p.0).collect(),
            weights: rule.iter().map(|&(t, w)| w * bump(t) / mass).collect(),
            derivative_weights: rule.iter().map(|&(t, w)| w * bump_derivative(t) / mass).collect(),
            mass,
        }
    }
}

impl MollifierSpec {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "mollifier radius must be positive, got {radius}"
            )));
        }
        Ok(Self { radius })
    }

    /// `phi_eps(y) = phi(y / eps) / eps`, unit mass on the real line.
    pub fn kernel(&self, y: f64) -> f64 {
        let stencil_mass = Stencil::new().mass;
        bump(y / self.radius) / (self.radius * stencil_mass)
    }
}

/// `phi_eps * sigma` tabulated at the quadrature points of `mesh`.
///
/// Divergence potentials are smoothed through their field,
/// `phi_eps * div Gamma = div(phi_eps * Gamma)`, in the radial form
/// `g_eps' + (n - 1)/r g_eps`. Atoms become bumps whose mass against the
/// mesh measure is preserved.
pub fn mollify(sigma: &Potential, spec: &MollifierSpec, mesh: &Mesh) -> Result<Potential> {
    let eps = spec.radius;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("mollifier radius {eps}")));
    }
    let stencil = Stencil::new();
    let points: Vec<f64> = mesh.quadrature().map(|q| q.x).collect();
    let mut values = vec![0.0; points.len()];
    accumulate(sigma, eps, &stencil, mesh, &points, &mut values)?;
    Ok(Potential::pointwise(Profile::Samples {
        abscissae: points,
        values,
    }))
}

fn check_reach(profile: &Profile, eps: f64, mesh: &Mesh) -> Result<()> {
    let (lo, hi) = (mesh.start() - eps, mesh.end() + eps);
    if let Weight::Radial { .. } = mesh.weight() {
        if lo <= 0.0 {
            return Err(Error::MollifierTooWide {
                radius: eps,
                reason: format!("stencil reaches the origin from r = {}", mesh.start()),
            });
        }
    }
    if let Some((a, b)) = profile.support() {
        if lo < a || hi > b {
            return Err(Error::MollifierTooWide {
                radius: eps,
                reason: format!(
                    "stencil ({lo}, {hi}) leaves the tabulated range ({a}, {b})"
                ),
            });
        }
    }
    Ok(())
}

fn accumulate(
    sigma: &Potential,
    eps: f64,
    stencil: &Stencil,
    mesh: &Mesh,
    points: &[f64],
    out: &mut [f64],
) -> Result<()> {
    match sigma {
        Potential::Pointwise { density } => {
            check_reach(density, eps, mesh)?;
            for (x, slot) in points.iter().zip(out.iter_mut()) {
                let mut acc = 0.0;
                for (t, w) in stencil.offsets.iter().zip(&stencil.weights) {
                    acc += w * density.eval(x - eps * t);
                }
                *slot += checked(acc, *x, eps)?;
            }
        }
        Potential::Divergence { field } => {
            check_reach(field, eps, mesh)?;
            let radial_factor = match mesh.weight() {
                Weight::Flat => 0.0,
                Weight::Radial { n } => n as f64 - 1.0,
            };
            for (x, slot) in points.iter().zip(out.iter_mut()) {
                let mut smooth = 0.0;
                let mut slope = 0.0;
                for ((t, w), dw) in stencil
                    .offsets
                    .iter()
                    .zip(&stencil.weights)
                    .zip(&stencil.derivative_weights)
                {
                    let g = field.eval(x - eps * t);
                    smooth += w * g;
                    slope += dw * g;
                }
                let value = slope / eps + radial_factor / x * smooth;
                *slot += checked(value, *x, eps)?;
            }
        }
        Potential::Atomic { atoms } => {
            for a in atoms {
                if !(a.location - eps > mesh.start() && a.location + eps < mesh.end()) {
                    return Err(Error::MollifierTooWide {
                        radius: eps,
                        reason: format!("bump around atom at {} leaves the mesh", a.location),
                    });
                }
            }
            let weight = mesh.weight();
            for (x, slot) in points.iter().zip(out.iter_mut()) {
                for a in atoms {
                    let t = (x - a.location) / eps;
                    if t.abs() < 1.0 {
                        *slot += a.mass * bump(t) / (eps * stencil.mass) / weight.density(*x);
                    }
                }
            }
        }
        Potential::Sum { parts } => {
            for p in parts {
                accumulate(p, eps, stencil, mesh, points, out)?;
            }
        }
    }
    Ok(())
}

fn checked(value: f64, x: f64, eps: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::MollifierTooWide {
            radius: eps,
            reason: format!("non-finite convolution at x = {x}"),
        })
    }
}
