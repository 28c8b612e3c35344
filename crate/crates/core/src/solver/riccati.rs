use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::exhaustion::{ball_mean_square, solve_level};
use crate::diagnostics::doubling_constant;
use crate::error::{Error, Result};
use crate::forms::{assemble, estimate_lower_form_bound, estimate_upper_form_bound, multiplier_norm, EllipticCoeff};
use crate::mesh::{enumerate_balls, Ball, Field, Mesh, Weight};
use crate::potential::{Potential, Profile};

/// `int_lo^hi |u'|^2 / u^2 dmu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubdomainEnergy {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogTransform {
    pub v: Field,
    pub energies: Vec<SubdomainEnergy>,
}

/// `v = log u` nodewise, with the log energies of `u` on each subdomain.
pub fn log_transform(u: &Field, subdomains: &[(f64, f64)]) -> Result<LogTransform> {
    if let Some((node, &value)) = u.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::Nonpositive { node, value });
    }
    let v = u.map(f64::ln)?;
    let mesh = u.mesh();
    let mut energies = Vec::with_capacity(subdomains.len());
    for &(lo, hi) in subdomains {
        let value = mesh.integrate_over(lo, hi, |x| {
            let e = mesh.locate(x).expect("point inside mesh");
            (u.slope(e) / u.eval_in(e, x)).powi(2)
        })?;
        energies.push(SubdomainEnergy { lo, hi, value });
    }
    Ok(LogTransform { v, energies })
}

/// Weak residual of `-div(a v') = a v'^2 + sigma` against interior hats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiccatiResidual {
    /// `R_i` per interior node.
    pub residuals: Vec<f64>,
    /// Sum of the absolute values of the three terms of `R_i`.
    pub scales: Vec<f64>,
    pub max_abs: f64,
    /// `max_i |R_i| / scale_i`.
    pub relative: f64,
}

/// `R_i = int a v' phi_i' - int a v'^2 phi_i(mid) - <sigma, phi_i>`, with the
/// quadratic term using element-midpoint values of the hats.
pub fn riccati_residual(v: &Field, a: &EllipticCoeff, sigma: &Potential) -> Result<RiccatiResidual> {
    let mesh = v.mesh();
    a.check(mesh)?;
    let n = mesh.node_count();
    let mut flux = vec![0.0; n];
    let mut quadratic = vec![0.0; n];
    for e in 0..mesh.element_count() {
        let slope = v.slope(e);
        let h = mesh.element_length(e);
        let (mut fa, mut qa) = (0.0, 0.0);
        for q in mesh.element_quadrature(e) {
            let av = a.eval(q.x);
            fa += q.weight * av * slope / h;
            qa += q.weight * av * slope * slope;
        }
        flux[e] -= fa;
        flux[e + 1] += fa;
        quadratic[e] += 0.5 * qa;
        quadratic[e + 1] += 0.5 * qa;
    }
    let load = sigma.hat_pairings(mesh)?;
    let mut residuals = Vec::with_capacity(n.saturating_sub(2));
    let mut scales = Vec::with_capacity(n.saturating_sub(2));
    let (mut max_abs, mut relative) = (0.0f64, 0.0f64);
    for i in 1..n - 1 {
        let r = flux[i] - quadratic[i] - load[i];
        let s = flux[i].abs() + quadratic[i].abs() + load[i].abs();
        max_abs = max_abs.max(r.abs());
        if s > 0.0 {
            relative = relative.max(r.abs() / s);
        }
        residuals.push(r);
        scales.push(s);
    }
    Ok(RiccatiResidual {
        residuals,
        scales,
        max_abs,
        relative,
    })
}

/// Per-element slope of `v` sampled at the mesh quadrature points, scaled by `f(x)`.
fn slope_samples(v: &Field, f: impl Fn(f64, f64) -> f64) -> Profile {
    let mesh = v.mesh();
    let mut abscissae = Vec::new();
    let mut values = Vec::new();
    for q in mesh.quadrature() {
        abscissae.push(q.x);
        values.push(f(q.x, v.slope(q.element)));
    }
    Profile::Samples { abscissae, values }
}

/// `sigma = -div(a grad v) - a |grad v|^2` as a divergence plus a density.
pub fn reconstruct_potential(v: &Field, a: &EllipticCoeff) -> Potential {
    Potential::Sum {
        parts: vec![
            Potential::divergence(slope_samples(v, |x, s| -a.eval(x) * s)),
            Potential::pointwise(slope_samples(v, |x, s| -a.eval(x) * s * s)),
        ],
    }
}

/// Form bounds implied by a Riccati solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiccatiBounds {
    pub lambda_upper: f64,
    pub lambda_lower: f64,
    /// Squared multiplier norm of `|grad v|`.
    pub multiplier: f64,
    /// `1` for the scalar (symmetric) coefficient.
    pub upper_limit: f64,
    /// `2 sqrt(k C1) + k C1` with `k = M/m`.
    pub lower_limit: f64,
    pub upper_holds: bool,
    pub lower_holds: bool,
}

/// Reconstructs `sigma` from `v`, measures both form bounds and compares
/// them with `lambda <= 1` and `Lambda <= 2 sqrt(k C1) + k C1`.
pub fn form_bounds_from_riccati(v: &Field, a: &EllipticCoeff, tolerance: f64) -> Result<RiccatiBounds> {
    let mesh = v.mesh();
    let sigma = reconstruct_potential(v, a);
    let mats = assemble(mesh, a, &sigma)?;
    let upper = estimate_upper_form_bound(&mats)?;
    let lower = estimate_lower_form_bound(&mats)?;
    let multiplier = multiplier_norm(&slope_samples(v, |_, s| s.abs()), mesh)?;
    let k = a.contrast();
    let lower_limit = 2.0 * (k * multiplier).sqrt() + k * multiplier;
    Ok(RiccatiBounds {
        lambda_upper: upper.bound,
        lambda_lower: lower.bound,
        multiplier,
        upper_limit: 1.0,
        lower_limit,
        upper_holds: upper.bound <= 1.0 + tolerance,
        lower_holds: lower.bound <= lower_limit + tolerance,
    })
}

/// Fixed data of a critical sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub ball: Ball,
    /// Fixed annulus on which Dirichlet energies are tracked.
    pub energy_domain: (f64, f64),
}

/// `t_j = 1 - 2^{-j}` for `j = 1..=levels`.
pub fn default_sweep_parameters(levels: usize) -> Vec<f64> {
    (1..=levels).map(|j| 1.0 - 0.5f64.powi(j as i32)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepLevel {
    pub t: f64,
    /// Measured upper bound of `t sigma`.
    pub lambda: f64,
    pub sup_norm: f64,
    pub min_u: f64,
    pub energy: f64,
    pub doubling_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    /// Measured upper bound of `sigma` itself.
    pub lambda: f64,
    /// Whether `lambda` is within 2% of 1.
    pub near_critical: bool,
    pub energy_domain: (f64, f64),
    pub levels: Vec<SweepLevel>,
    /// Last energy over the first.
    pub energy_growth: f64,
    /// `|S^{n-1}| ((n-2)/2)^2 log(hi/lo)`: energy of `r^{(2-n)/2}` on the
    /// energy annulus (radial meshes with `n >= 3`).
    pub reference_energy: Option<f64>,
    /// The same for `r^{(2-n)/2}` normalized on the ball.
    pub reference_normalized: Option<f64>,
    #[serde(skip)]
    pub fields: Vec<Field>,
}

/// Solves with `t_j sigma` for each `t_j` and tracks sup norms, Dirichlet
/// energies on a fixed annulus and doubling constants of `u^2`.
pub fn critical_sweep(
    sigma: &Potential,
    a: &EllipticCoeff,
    mesh: &Arc<Mesh>,
    parameters: &[f64],
    options: &SweepOptions,
) -> Result<SweepReport> {
    if parameters.is_empty() {
        return Err(Error::InvalidArgument("sweep needs at least one parameter".into()));
    }
    let lambda = estimate_upper_form_bound(&assemble(mesh, a, sigma)?)?.bound;
    let (lo, hi) = options.energy_domain;
    let scan = enumerate_balls(mesh, (lo, hi), 4, 16)?;
    let mut levels = Vec::with_capacity(parameters.len());
    let mut fields = Vec::with_capacity(parameters.len());
    for &t in parameters {
        let solved = solve_level(mesh, a, &sigma.scaled(t), &options.ball)?;
        let energy = solved.u.dirichlet_energy(lo, hi)?;
        let (doubling, _) = doubling_constant(&solved.u.map(|v| v * v)?, &scan)?;
        levels.push(SweepLevel {
            t,
            lambda: solved.lambda,
            sup_norm: solved.u.sup_norm(),
            min_u: solved.min_u,
            energy,
            doubling_constant: doubling,
        });
        fields.push(solved.u);
    }
    let first = levels[0].energy;
    let last = levels[levels.len() - 1].energy;
    let energy_growth = if first > 0.0 {
        last / first
    } else if last == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let (reference_energy, reference_normalized) = match mesh.weight() {
        Weight::Radial { n } if n >= 3 => {
            let alpha = (2.0 - n as f64) / 2.0;
            let raw = Weight::sphere_area(n) * alpha * alpha * (hi / lo).ln();
            let profile = Field::from_fn(mesh.clone(), |r| r.powf(alpha))?;
            let mean = ball_mean_square(&profile, &options.ball)?;
            (Some(raw), Some(raw / mean))
        }
        _ => (None, None),
    };
    Ok(SweepReport {
        lambda,
        near_critical: (lambda - 1.0).abs() <= 0.02,
        energy_domain: options.energy_domain,
        levels,
        energy_growth,
        reference_energy,
        reference_normalized,
        fields,
    })
}
