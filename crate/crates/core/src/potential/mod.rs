//! Representations of the potential `sigma`, its pairings with P1 functions,
//! mollification, and the catalog of closed-form examples.

mod catalog;
mod mollify;
mod profile;

pub use catalog::{catalog, catalog_names, parse_example, ClosedForm, ExampleSpec, NonSymmetric3d};
pub use mollify::{mollify, MollifierSpec};
pub use profile::Profile;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymTridiag;
use crate::mesh::{Field, Mesh};

/// A point mass `mass * delta_location`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub mass: f64,
}

/// A real-valued distribution on a (possibly radial) 1D mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// Locally integrable density.
    Pointwise { density: Profile },
    /// `div Gamma` for the radial field `Gamma = g(r) x/r`; paired as
    /// `<div Gamma, h> = -int g h' dmu`.
    Divergence { field: Profile },
    /// Finite sum of point masses.
    Atomic { atoms: Vec<Atom> },
    /// Sum of the listed parts.
    Sum { parts: Vec<Potential> },
}

impl Potential {
    pub fn pointwise(density: Profile) -> Self {
        Potential::Pointwise { density }
    }

    pub fn divergence(field: Profile) -> Self {
        Potential::Divergence { field }
    }

    pub fn atomic(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Potential::Atomic {
            atoms: atoms
                .into_iter()
                .map(|(location, mass)| Atom { location, mass })
                .collect(),
        }
    }

    pub fn zero() -> Self {
        Potential::pointwise(Profile::zero())
    }

    /// `t * sigma`.
    pub fn scaled(&self, t: f64) -> Self {
        match self {
            Potential::Pointwise { density } => Potential::pointwise(density.clone().scaled(t)),
            Potential::Divergence { field } => Potential::divergence(field.clone().scaled(t)),
            Potential::Atomic { atoms } => Potential::Atomic {
                atoms: atoms
                    .iter()
                    .map(|a| Atom {
                        location: a.location,
                        mass: t * a.mass,
                    })
                    .collect(),
            },
            Potential::Sum { parts } => Potential::Sum {
                parts: parts.iter().map(|p| p.scaled(t)).collect(),
            },
        }
    }

    pub fn is_pointwise(&self) -> bool {
        matches!(self, Potential::Pointwise { .. })
    }

    pub fn has_atoms(&self) -> bool {
        match self {
            Potential::Atomic { .. } => true,
            Potential::Sum { parts } => parts.iter().any(Potential::has_atoms),
            _ => false,
        }
    }

    fn check_atoms(&self, mesh: &Mesh) -> Result<()> {
        match self {
            Potential::Atomic { atoms } => {
                for a in atoms {
                    if !(a.location > mesh.start() && a.location < mesh.end()) || !a.mass.is_finite() {
                        return Err(Error::InvalidArgument(format!(
                            "atom {a:?} must have finite mass and lie inside ({}, {})",
                            mesh.start(),
                            mesh.end()
                        )));
                    }
                }
                Ok(())
            }
            Potential::Sum { parts } => parts.iter().try_for_each(|p| p.check_atoms(mesh)),
            _ => Ok(()),
        }
    }

    /// Matrix `<sigma, phi_i phi_j>` over all nodes (boundary included).
    pub fn product_matrix(&self, mesh: &Mesh) -> Result<SymTridiag> {
        self.check_atoms(mesh)?;
        let mut m = SymTridiag::zeros(mesh.node_count());
        self.add_products(mesh, &mut m)?;
        Ok(m)
    }

    fn add_products(&self, mesh: &Mesh, m: &mut SymTridiag) -> Result<()> {
        match self {
            Potential::Pointwise { density } => {
                for q in mesh.quadrature() {
                    let s = finite(density.eval(q.x), q.x)?;
                    let (p0, p1) = hats(mesh, q.element, q.x);
                    let e = q.element;
                    m.diag[e] += q.weight * s * p0 * p0;
                    m.diag[e + 1] += q.weight * s * p1 * p1;
                    m.off[e] += q.weight * s * p0 * p1;
                }
            }
            Potential::Divergence { field } => {
                for q in mesh.quadrature() {
                    let g = finite(field.eval(q.x), q.x)?;
                    let (p0, p1) = hats(mesh, q.element, q.x);
                    let h = mesh.element_length(q.element);
                    let (d0, d1) = (-1.0 / h, 1.0 / h);
                    let e = q.element;
                    m.diag[e] -= q.weight * g * 2.0 * p0 * d0;
                    m.diag[e + 1] -= q.weight * g * 2.0 * p1 * d1;
                    m.off[e] -= q.weight * g * (p0 * d1 + d0 * p1);
                }
            }
            Potential::Atomic { atoms } => {
                for a in atoms {
                    let e = mesh.locate(a.location).expect("checked atom location");
                    let (p0, p1) = hats(mesh, e, a.location);
                    m.diag[e] += a.mass * p0 * p0;
                    m.diag[e + 1] += a.mass * p1 * p1;
                    m.off[e] += a.mass * p0 * p1;
                }
            }
            Potential::Sum { parts } => {
                for p in parts {
                    p.add_products(mesh, m)?;
                }
            }
        }
        Ok(())
    }

    /// Load vector `<sigma, phi_i>` over all nodes.
    pub fn hat_pairings(&self, mesh: &Mesh) -> Result<Vec<f64>> {
        self.check_atoms(mesh)?;
        let mut out = vec![0.0; mesh.node_count()];
        self.add_hat_pairings(mesh, &mut out)?;
        Ok(out)
    }

    fn add_hat_pairings(&self, mesh: &Mesh, out: &mut [f64]) -> Result<()> {
        match self {
            Potential::Pointwise { density } => {
                for q in mesh.quadrature() {
                    let s = finite(density.eval(q.x), q.x)?;
                    let (p0, p1) = hats(mesh, q.element, q.x);
                    out[q.element] += q.weight * s * p0;
                    out[q.element + 1] += q.weight * s * p1;
                }
            }
            Potential::Divergence { field } => {
                for q in mesh.quadrature() {
                    let g = finite(field.eval(q.x), q.x)?;
                    let h = mesh.element_length(q.element);
                    out[q.element] += q.weight * g / h;
                    out[q.element + 1] -= q.weight * g / h;
                }
            }
            Potential::Atomic { atoms } => {
                for a in atoms {
                    let e = mesh.locate(a.location).expect("checked atom location");
                    let (p0, p1) = hats(mesh, e, a.location);
                    out[e] += a.mass * p0;
                    out[e + 1] += a.mass * p1;
                }
            }
            Potential::Sum { parts } => {
                for p in parts {
                    p.add_hat_pairings(mesh, out)?;
                }
            }
        }
        Ok(())
    }

    /// `<sigma, h^2>` for a P1 function vanishing at both mesh ends.
    pub fn pair_with_square(&self, h: &Field) -> Result<f64> {
        let mesh = h.mesh();
        let values = h.values();
        let scale = h.sup_norm().max(f64::MIN_POSITIVE);
        let boundary = values[0].abs().max(values[values.len() - 1].abs());
        if boundary > 1e-12 * scale {
            return Err(Error::NonzeroBoundary { value: boundary });
        }
        self.check_atoms(mesh)?;
        self.square_pairing(h)
    }

    fn square_pairing(&self, h: &Field) -> Result<f64> {
        let mesh = h.mesh();
        let mut total = 0.0;
        match self {
            Potential::Pointwise { density } => {
                for q in mesh.quadrature() {
                    let s = finite(density.eval(q.x), q.x)?;
                    total += q.weight * s * h.eval_in(q.element, q.x).powi(2);
                }
            }
            Potential::Divergence { field } => {
                for q in mesh.quadrature() {
                    let g = finite(field.eval(q.x), q.x)?;
                    let hv = h.eval_in(q.element, q.x);
                    total -= q.weight * g * 2.0 * hv * h.slope(q.element);
                }
            }
            Potential::Atomic { atoms } => {
                for a in atoms {
                    total += a.mass * h.eval(a.location).powi(2);
                }
            }
            Potential::Sum { parts } => {
                for p in parts {
                    total += p.square_pairing(h)?;
                }
            }
        }
        Ok(total)
    }

    /// Point value of a pointwise density (used by kernel quadratures).
    pub fn density_at(&self, x: f64) -> Option<f64> {
        match self {
            Potential::Pointwise { density } => Some(density.eval(x)),
            Potential::Sum { parts } => parts
                .iter()
                .try_fold(0.0, |acc, p| p.density_at(x).map(|v| acc + v)),
            _ => None,
        }
    }
}

/// Values of the two local hat functions of element `e` at `x`.
pub(crate) fn hats(mesh: &Mesh, e: usize, x: f64) -> (f64, f64) {
    let (lo, hi) = mesh.element(e);
    let t = (x - lo) / (hi - lo);
    (1.0 - t, t)
}

fn finite(value: f64, x: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { x, value })
    }
}
