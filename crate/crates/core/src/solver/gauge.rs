use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{assemble, estimate_upper_form_bound, EllipticCoeff};
use crate::linalg::solve_spd;
use crate::mesh::{Field, Mesh, Weight};
use crate::potential::{Atom, Potential};

/// Green kernel of `-d^2/dx^2` on `(0, 1)` with Dirichlet data.
pub fn green(x: f64, y: f64) -> f64 {
    if x <= y {
        x * (1.0 - y)
    } else {
        y * (1.0 - x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeMethod {
    /// `(K - S) w = s`, `u = 1 + w`.
    Fem,
    /// `u^{k+1} = 1 + G(sigma u^k)` from `u^0 = 1`.
    NeumannSeries,
    /// Direct solve of the discretized integral equation `u = 1 + G(sigma u)`.
    FixedPoint,
}

/// Stopping threshold on the sup-norm change of the Neumann iterates.
pub const GAUGE_TOLERANCE: f64 = 1e-8;
const MAX_SERIES_TERMS: usize = 100_000;
/// Node limit of the dense fixed-point solve.
const FIXED_POINT_LIMIT: usize = 4001;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeReport {
    pub method: GaugeMethod,
    pub u: Field,
    /// Value at the node nearest `1/2` after each Neumann iteration.
    pub partial_sums: Vec<f64>,
    /// Whether every nodal value was nondecreasing along the series.
    pub monotone: bool,
    /// `||u - 1 - G(sigma u)||_inf` with the kernel quadrature.
    pub fixed_point_residual: f64,
    /// Measured upper form bound of `sigma`.
    pub lambda: f64,
    pub min_u: f64,
}

impl GaugeReport {
    /// `u(1/2)` by interpolation.
    pub fn center_value(&self) -> f64 {
        self.u.eval(0.5)
    }
}

fn check_unit_interval(mesh: &Mesh) -> Result<()> {
    if mesh.weight() != Weight::Flat || mesh.start() != 0.0 || (mesh.end() - 1.0).abs() > 1e-14 {
        return Err(Error::InvalidMesh(
            "the gauge solver works on the flat unit interval".into(),
        ));
    }
    Ok(())
}

/// Kernel quadrature: `sigma` split into a density sampled at the mesh
/// quadrature points and point masses.
struct KernelData {
    points: Vec<(usize, f64, f64)>,
    atoms: Vec<Atom>,
}

fn kernel_data(sigma: &Potential, mesh: &Mesh) -> Result<KernelData> {
    let mut data = KernelData {
        points: Vec::new(),
        atoms: Vec::new(),
    };
    let mut density = vec![0.0; mesh.quadrature().count()];
    collect(sigma, mesh, &mut density, &mut data.atoms)?;
    data.points = mesh
        .quadrature()
        .zip(density)
        .map(|(q, s)| (q.element, q.x, q.weight * s))
        .collect();
    Ok(data)
}

fn collect(sigma: &Potential, mesh: &Mesh, density: &mut [f64], atoms: &mut Vec<Atom>) -> Result<()> {
    match sigma {
        Potential::Pointwise { density: profile } => {
            for (slot, q) in density.iter_mut().zip(mesh.quadrature()) {
                let value = profile.eval(q.x);
                if !value.is_finite() {
                    return Err(Error::NonFinite { x: q.x, value });
                }
                *slot += value;
            }
        }
        Potential::Atomic { atoms: list } => atoms.extend(list.iter().copied()),
        Potential::Sum { parts } => {
            for p in parts {
                collect(p, mesh, density, atoms)?;
            }
        }
        Potential::Divergence { .. } => {
            return Err(Error::UnsupportedPotential(
                "the gauge kernel needs a density or point masses".into(),
            ))
        }
    }
    Ok(())
}

impl KernelData {
    /// `(G(sigma f))(x_i)` at every node, in O(n) via prefix sums of
    /// `y sigma f` and suffix sums of `(1 - y) sigma f`.
    fn apply(&self, f: &Field) -> Vec<f64> {
        let mesh = f.mesh();
        let nodes = mesh.nodes();
        let elements = mesh.element_count();
        let mut left = vec![0.0; elements];
        let mut right = vec![0.0; elements];
        for &(e, y, w) in &self.points {
            let m = w * f.eval_in(e, y);
            left[e] += y * m;
            right[e] += (1.0 - y) * m;
        }
        let mut out = vec![0.0; nodes.len()];
        // node i splits the elements into 0..i and i..elements
        let mut prefix = 0.0;
        let mut suffix: f64 = right.iter().sum();
        for (i, &x) in nodes.iter().enumerate() {
            out[i] = (1.0 - x) * prefix + x * suffix;
            if i < elements {
                prefix += left[i];
                suffix -= right[i];
            }
        }
        for atom in &self.atoms {
            let m = atom.mass * f.eval(atom.location);
            for (slot, &x) in out.iter_mut().zip(nodes) {
                *slot += green(x, atom.location) * m;
            }
        }
        out
    }
}

fn fixed_point_residual(data: &KernelData, u: &Field) -> f64 {
    data.apply(u)
        .iter()
        .zip(u.values())
        .fold(0.0f64, |m, (g, v)| m.max((v - 1.0 - g).abs()))
}

/// Gauge `u_1 = 1 + G(sigma u_1)` on the unit interval.
pub fn solve_gauge(sigma: &Potential, mesh: &Arc<Mesh>, method: GaugeMethod) -> Result<GaugeReport> {
    check_unit_interval(mesh)?;
    let data = kernel_data(sigma, mesh)?;
    let lambda = estimate_upper_form_bound(&assemble(mesh, &EllipticCoeff::identity(), sigma)?)?.bound;
    let centre = mesh.nearest_node(0.5);
    let mut partial_sums = Vec::new();
    let mut monotone = true;
    let u = match method {
        GaugeMethod::Fem => {
            if !(lambda < 1.0) {
                return Err(Error::CoercivityLost { lambda });
            }
            let mats = assemble(mesh, &EllipticCoeff::identity(), sigma)?;
            let load = sigma.hat_pairings(mesh)?;
            let system = mats.stiffness.combine(1.0, &mats.potential, -1.0);
            let (w, _) = solve_spd(&system, &load[1..load.len() - 1])?;
            let mut values = vec![1.0];
            values.extend(w.iter().map(|w| 1.0 + w));
            values.push(1.0);
            Field::new(mesh.clone(), values)?
        }
        GaugeMethod::NeumannSeries => {
            let mut u = Field::constant(mesh.clone(), 1.0)?;
            partial_sums.push(1.0);
            let mut converged = false;
            for _ in 0..MAX_SERIES_TERMS {
                let next: Vec<f64> = data.apply(&u).iter().map(|g| 1.0 + g).collect();
                let mut change = 0.0f64;
                for (new, old) in next.iter().zip(u.values()) {
                    change = change.max((new - old).abs());
                    if *new < *old - 1e-14 * old.abs().max(1.0) {
                        monotone = false;
                    }
                }
                let finite = next.iter().all(|v| v.is_finite() && v.abs() < 1e150);
                if !finite {
                    break;
                }
                u = Field::new(mesh.clone(), next)?;
                partial_sums.push(u.values()[centre]);
                if change < GAUGE_TOLERANCE {
                    converged = true;
                    break;
                }
            }
            if !converged {
                let keep = partial_sums.len().min(16);
                return Err(Error::SeriesDivergence {
                    lambda,
                    partial_sums: partial_sums[partial_sums.len() - keep..].to_vec(),
                });
            }
            u
        }
        GaugeMethod::FixedPoint => {
            let n = mesh.node_count();
            if n > FIXED_POINT_LIMIT {
                return Err(Error::InvalidArgument(format!(
                    "dense fixed-point solve limited to {FIXED_POINT_LIMIT} nodes, got {n}"
                )));
            }
            // column j of G Sigma is the kernel applied to the j-th hat
            let mut matrix = DMatrix::<f64>::identity(n, n);
            for j in 0..n {
                let mut hat = vec![0.0; n];
                hat[j] = 1.0;
                let column = data.apply(&Field::new(mesh.clone(), hat)?);
                for (i, g) in column.into_iter().enumerate() {
                    matrix[(i, j)] -= g;
                }
            }
            let rhs = DVector::from_element(n, 1.0);
            let solution = matrix
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::SolveFailed("integral equation is singular".into()))?;
            Field::new(mesh.clone(), solution.iter().copied().collect())?
        }
    };
    Ok(GaugeReport {
        method,
        fixed_point_residual: fixed_point_residual(&data, &u),
        min_u: u.min(),
        u,
        partial_sums,
        monotone,
        lambda,
    })
}

/// FEM and Neumann-series gauges and their sup-norm distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeComparison {
    pub fem: GaugeReport,
    pub series: GaugeReport,
    pub difference: f64,
}

/// Runs both paths and fails with `MethodDisagreement` beyond `tolerance`.
pub fn cross_check_gauge(sigma: &Potential, mesh: &Arc<Mesh>, tolerance: f64) -> Result<GaugeComparison> {
    let fem = solve_gauge(sigma, mesh, GaugeMethod::Fem)?;
    let series = solve_gauge(sigma, mesh, GaugeMethod::NeumannSeries)?;
    let difference = fem
        .u
        .values()
        .iter()
        .zip(series.u.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if difference > tolerance {
        return Err(Error::MethodDisagreement {
            difference,
            tolerance,
        });
    }
    Ok(GaugeComparison {
        fem,
        series,
        difference,
    })
}

/// Value of `int m(x) exp(c (int m dsigma) / m(x)) dsigma(x)` with
/// `m = min(1, G(., x0))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeCondition {
    pub value: f64,
    pub finite: bool,
    /// `int m dsigma`.
    pub inner: f64,
    pub reading: String,
    pub alternative: String,
}

/// Evaluates the gauge condition under its literal reading by quadrature at
/// the mesh quadrature points (and exactly at atoms). For `c > 0` and mass
/// near the boundary the integrand blows up like `exp(C/x)`, so the value
/// may be astronomically large or overflow; `finite` records which.
pub fn check_gauge_condition(sigma: &Potential, c: f64, x0: f64, mesh: &Arc<Mesh>) -> Result<GaugeCondition> {
    check_unit_interval(mesh)?;
    if !(x0 > 0.0 && x0 < 1.0) || !c.is_finite() {
        return Err(Error::InvalidArgument(format!("need 0 < x0 < 1 and finite c, got ({x0}, {c})")));
    }
    let data = kernel_data(sigma, mesh)?;
    for &(_, x, w) in &data.points {
        if w < 0.0 {
            return Err(Error::NegativePotential { x, value: w });
        }
    }
    for atom in &data.atoms {
        if atom.mass < 0.0 {
            return Err(Error::NegativePotential {
                x: atom.location,
                value: atom.mass,
            });
        }
    }
    let m = |x: f64| green(x, x0).min(1.0);
    let masses = data
        .points
        .iter()
        .map(|&(_, x, w)| (x, w))
        .chain(data.atoms.iter().map(|a| (a.location, a.mass)));
    let inner: f64 = masses.clone().map(|(x, w)| w * m(x)).sum();
    let value: f64 = masses
        .filter(|(_, w)| *w != 0.0)
        .map(|(x, w)| w * m(x) * (c * inner / m(x)).exp())
        .sum();
    Ok(GaugeCondition {
        finite: value.is_finite(),
        value,
        inner,
        reading: "literal: exp(c * (int m dsigma) / m(x))".into(),
        alternative: "not evaluated: exp(c / m(x)) * int m dsigma".into(),
    })
}
