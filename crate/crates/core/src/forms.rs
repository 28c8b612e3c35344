//! Discrete Dirichlet and potential forms, and the sharp constants in
//! `<sigma, h^2> <= lambda int a |h'|^2` and `<sigma, h^2> >= -Lambda int a |h'|^2`
//! as extreme eigenvalues of tridiagonal pencils.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pencil_extreme, EigenPair, Extreme, SymTridiag};
use crate::mesh::{Field, Mesh};
use crate::potential::{Potential, Profile};

/// Scalar coefficient `a` with declared ellipticity bounds `m <= a <= M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticCoeff {
    pub profile: Profile,
    pub lower: f64,
    pub upper: f64,
}

impl Default for EllipticCoeff {
    fn default() -> Self {
        Self::identity()
    }
}

impl EllipticCoeff {
    pub fn new(profile: Profile, lower: f64, upper: f64) -> Result<Self> {
        if !(lower > 0.0 && lower <= upper && upper.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "ellipticity bounds must satisfy 0 < m <= M < inf, got ({lower}, {upper})"
            )));
        }
        Ok(Self {
            profile,
            lower,
            upper,
        })
    }

    /// `a = 1`.
    pub fn identity() -> Self {
        Self {
            profile: Profile::constant(1.0),
            lower: 1.0,
            upper: 1.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.profile.eval(x)
    }

    /// `M / m`.
    pub fn contrast(&self) -> f64 {
        self.upper / self.lower
    }

    /// Checks `m <= a <= M` at every quadrature point of `mesh`.
    pub fn check(&self, mesh: &Mesh) -> Result<()> {
        for q in mesh.quadrature() {
            let a = self.eval(q.x);
            if !a.is_finite() {
                return Err(Error::NonFinite { x: q.x, value: a });
            }
            if a < self.lower * (1.0 - 1e-12) || a > self.upper * (1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!(
                    "coefficient {a} at x = {} outside declared bounds [{}, {}]",
                    q.x, self.lower, self.upper
                )));
            }
        }
        Ok(())
    }
}

/// Stiffness, potential and flat stiffness matrices on the interior nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormMatrices {
    pub mesh: Arc<Mesh>,
    /// `K_ij = int a phi_i' phi_j' dmu`
    pub stiffness: SymTridiag,
    /// `S_ij = <sigma, phi_i phi_j>`
    pub potential: SymTridiag,
    /// `K0_ij = int phi_i' phi_j' dmu`
    pub flat_stiffness: SymTridiag,
}

/// Full-node matrix `int f phi_i' phi_j' dmu`.
pub fn stiffness_matrix(mesh: &Mesh, f: impl Fn(f64) -> f64) -> Result<SymTridiag> {
    let mut k = SymTridiag::zeros(mesh.node_count());
    for q in mesh.quadrature() {
        let value = f(q.x);
        if !value.is_finite() {
            return Err(Error::NonFinite { x: q.x, value });
        }
        let h = mesh.element_length(q.element);
        let c = q.weight * value / (h * h);
        k.diag[q.element] += c;
        k.diag[q.element + 1] += c;
        k.off[q.element] -= c;
    }
    Ok(k)
}

/// Full-node matrix `int f phi_i phi_j dmu`.
pub fn mass_matrix(mesh: &Mesh, f: impl Fn(f64) -> f64) -> Result<SymTridiag> {
    let mut m = SymTridiag::zeros(mesh.node_count());
    for q in mesh.quadrature() {
        let value = f(q.x);
        if !value.is_finite() {
            return Err(Error::NonFinite { x: q.x, value });
        }
        let (lo, hi) = mesh.element(q.element);
        let t = (q.x - lo) / (hi - lo);
        let (p0, p1) = (1.0 - t, t);
        m.diag[q.element] += q.weight * value * p0 * p0;
        m.diag[q.element + 1] += q.weight * value * p1 * p1;
        m.off[q.element] += q.weight * value * p0 * p1;
    }
    Ok(m)
}

/// Drops the first and last rows/columns (homogeneous Dirichlet data).
pub fn interior(full: &SymTridiag) -> SymTridiag {
    let n = full.len();
    if n <= 2 {
        return SymTridiag::zeros(0);
    }
    SymTridiag {
        diag: full.diag[1..n - 1].to_vec(),
        off: full.off[1..n - 2].to_vec(),
    }
}

/// Nodal field from interior values, zero at both ends.
pub fn extend_by_zero(mesh: &Arc<Mesh>, interior: &[f64]) -> Result<Field> {
    let mut values = Vec::with_capacity(interior.len() + 2);
    values.push(0.0);
    values.extend_from_slice(interior);
    values.push(0.0);
    Field::new(mesh.clone(), values)
}

pub fn assemble(mesh: &Arc<Mesh>, a: &EllipticCoeff, sigma: &Potential) -> Result<FormMatrices> {
    if mesh.interior_count() == 0 {
        return Err(Error::InvalidMesh("no interior nodes".into()));
    }
    a.check(mesh)?;
    let stiffness = interior(&stiffness_matrix(mesh, |x| a.eval(x))?);
    let flat_stiffness = interior(&stiffness_matrix(mesh, |_| 1.0)?);
    let potential = interior(&sigma.product_matrix(mesh)?);
    Ok(FormMatrices {
        mesh: mesh.clone(),
        stiffness,
        potential,
        flat_stiffness,
    })
}

/// Which one-sided bound a report carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Upper,
    Lower,
}

/// One extreme pencil eigenpair and the bound derived from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormBoundReport {
    pub kind: BoundKind,
    /// `lambda` for the upper bound, `Lambda = max(0, -mu_min)` for the lower.
    pub bound: f64,
    /// The extreme pencil eigenvalue itself.
    pub eigenvalue: f64,
    /// Extremal test function, zero at both ends, K-normalized.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub bisection_steps: usize,
    pub residual: f64,
    pub mesh_size: f64,
}

impl FormBoundReport {
    fn from_pair(kind: BoundKind, pair: EigenPair, mesh: &Mesh) -> Self {
        let bound = match kind {
            BoundKind::Upper => pair.value,
            BoundKind::Lower => (-pair.value).max(0.0),
        };
        let mut vector = Vec::with_capacity(pair.vector.len() + 2);
        vector.push(0.0);
        vector.extend(pair.vector);
        vector.push(0.0);
        Self {
            kind,
            bound,
            eigenvalue: pair.value,
            vector,
            iterations: pair.iterations,
            bisection_steps: pair.bisection_steps,
            residual: pair.residual,
            mesh_size: mesh.max_element_length(),
        }
    }

    pub fn extremal_field(&self, mesh: &Arc<Mesh>) -> Result<Field> {
        Field::new(mesh.clone(), self.vector.clone())
    }
}

/// Sharp upper constant: the largest eigenvalue of `S h = lambda K h`.
pub fn estimate_upper_form_bound(mats: &FormMatrices) -> Result<FormBoundReport> {
    let pair = pencil_extreme(&mats.potential, &mats.stiffness, Extreme::Largest)?;
    Ok(FormBoundReport::from_pair(BoundKind::Upper, pair, &mats.mesh))
}

/// Sharp lower constant from the smallest pencil eigenvalue.
pub fn estimate_lower_form_bound(mats: &FormMatrices) -> Result<FormBoundReport> {
    let pair = pencil_extreme(&mats.potential, &mats.stiffness, Extreme::Smallest)?;
    Ok(FormBoundReport::from_pair(BoundKind::Lower, pair, &mats.mesh))
}

/// Both constants with the data of one sweep row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormBounds {
    pub h: f64,
    pub lambda_upper: f64,
    pub lambda_lower: f64,
    pub iterations: usize,
}

pub fn form_bounds(mats: &FormMatrices) -> Result<FormBounds> {
    let upper = estimate_upper_form_bound(mats)?;
    let lower = estimate_lower_form_bound(mats)?;
    Ok(FormBounds {
        h: mats.mesh.max_element_length(),
        lambda_upper: upper.bound,
        lambda_lower: lower.bound,
        iterations: upper.iterations + lower.iterations,
    })
}

/// Writes `h, lambda_upper, lambda_lower, iterations` rows.
pub fn write_sweep_csv<W: Write>(rows: &[FormBounds], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

/// Squared multiplier norm `C1`: the best constant in
/// `int h^2 g^2 dmu <= C1 int |h'|^2 dmu` for the field `Gamma = g x/r`.
pub fn multiplier_norm(g: &Profile, mesh: &Arc<Mesh>) -> Result<f64> {
    if mesh.interior_count() == 0 {
        return Err(Error::InvalidMesh("no interior nodes".into()));
    }
    let m = interior(&mass_matrix(mesh, |x| g.eval(x).powi(2))?);
    let k0 = interior(&stiffness_matrix(mesh, |_| 1.0)?);
    Ok(pencil_extreme(&m, &k0, Extreme::Largest)?.value.max(0.0))
}

/// Weak residual of `div(a Gamma) - a |Gamma|^2 - sigma >= 0` against hats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    /// `<r, phi_i>` for each interior node.
    pub pairings: Vec<f64>,
    pub min_pairing: f64,
    /// `max_i |<r, phi_i>|` relative to `scale`.
    pub equality_residual: f64,
    /// Largest per-hat sum of the absolute values of the three terms.
    pub scale: f64,
    pub passed: bool,
}

/// Relative slack allowed below zero in the certificate check.
pub const CERTIFICATE_TOLERANCE: f64 = 1e-6;

/// Checks the semiboundedness certificate `sigma <= div(A Gamma) - (A Gamma).Gamma`
/// in the weak radial form against every interior hat function.
pub fn check_semibound_certificate(
    sigma: &Potential,
    g: &Profile,
    a: &EllipticCoeff,
    mesh: &Arc<Mesh>,
) -> Result<CertificateReport> {
    a.check(mesh)?;
    let n = mesh.node_count();
    let mut divergence = vec![0.0; n];
    let mut quadratic = vec![0.0; n];
    for q in mesh.quadrature() {
        let (av, gv) = (a.eval(q.x), g.eval(q.x));
        if !gv.is_finite() {
            return Err(Error::NonFinite { x: q.x, value: gv });
        }
        let (lo, hi) = mesh.element(q.element);
        let h = hi - lo;
        let t = (q.x - lo) / h;
        // <div(a g), phi> = -int a g phi' dmu
        divergence[q.element] += q.weight * av * gv / h;
        divergence[q.element + 1] -= q.weight * av * gv / h;
        quadratic[q.element] += q.weight * av * gv * gv * (1.0 - t);
        quadratic[q.element + 1] += q.weight * av * gv * gv * t;
    }
    let load = sigma.hat_pairings(mesh)?;
    let mut pairings = Vec::with_capacity(n.saturating_sub(2));
    let mut scale = 0.0f64;
    for i in 1..n - 1 {
        pairings.push(divergence[i] - quadratic[i] - load[i]);
        scale = scale.max(divergence[i].abs() + quadratic[i].abs() + load[i].abs());
    }
    let scale = scale.max(f64::MIN_POSITIVE);
    let min_pairing = pairings.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = pairings.iter().fold(0.0f64, |m, p| m.max(p.abs()));
    Ok(CertificateReport {
        passed: min_pairing >= -CERTIFICATE_TOLERANCE * scale,
        min_pairing,
        equality_residual: worst / scale,
        scale,
        pairings,
    })
}

/// `C1`, the implied bound `2 sqrt(C1)` and the measured bound of `div Gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SufficiencyReport {
    pub c1: f64,
    pub implied_lambda: f64,
    pub measured_lambda: f64,
    pub holds: bool,
}

/// Slack in `lambda <= 2 sqrt(C1)`.
pub const SUFFICIENCY_SLACK: f64 = 1e-3;

pub fn verify_sufficiency_constant(g: &Profile, mesh: &Arc<Mesh>) -> Result<SufficiencyReport> {
    let c1 = multiplier_norm(g, mesh)?;
    let implied_lambda = 2.0 * c1.sqrt();
    let mats = assemble(mesh, &EllipticCoeff::identity(), &Potential::divergence(g.clone()))?;
    let measured_lambda = estimate_upper_form_bound(&mats)?.bound;
    Ok(SufficiencyReport {
        c1,
        implied_lambda,
        measured_lambda,
        holds: measured_lambda <= implied_lambda + SUFFICIENCY_SLACK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense_pencil_eigenvalues;
    use crate::mesh::Weight;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform(0.0, 1.0, n, Weight::Flat).unwrap())
    }

    #[test]
    fn textbook_stiffness_and_mass() {
        let mesh = unit(10);
        let h = 0.1;
        let mats = assemble(&mesh, &EllipticCoeff::identity(), &Potential::pointwise(Profile::constant(1.0))).unwrap();
        assert_eq!(mats.stiffness.len(), 9);
        for i in 0..9 {
            assert_relative_eq!(mats.stiffness.diag[i], 2.0 / h, max_relative = 1e-13);
            assert_relative_eq!(mats.potential.diag[i], 2.0 * h / 3.0, max_relative = 1e-13);
        }
        for i in 0..8 {
            assert_relative_eq!(mats.stiffness.off[i], -1.0 / h, max_relative = 1e-13);
            assert_relative_eq!(mats.potential.off[i], h / 6.0, max_relative = 1e-13);
        }
    }

    #[test]
    fn zero_potential_gives_zero_bounds() {
        let mats = assemble(&unit(20), &EllipticCoeff::identity(), &Potential::zero()).unwrap();
        assert_eq!(mats.potential.max_abs(), 0.0);
        let b = form_bounds(&mats).unwrap();
        assert_eq!((b.lambda_upper, b.lambda_lower), (0.0, 0.0));
    }

    #[test]
    fn constant_potential_against_dirichlet_eigenvalue() {
        let q = PI * PI / 4.0;
        let mats = assemble(&unit(1000), &EllipticCoeff::identity(), &Potential::pointwise(Profile::constant(q))).unwrap();
        let report = estimate_upper_form_bound(&mats).unwrap();
        assert!((report.bound - 0.25).abs() < 0.0025, "{}", report.bound);
        assert!(report.residual <= 1e-8);
    }

    #[test]
    fn negative_constant_gives_unit_lower_bound() {
        let mats = assemble(&unit(500), &EllipticCoeff::identity(), &Potential::pointwise(Profile::constant(-PI * PI))).unwrap();
        let lower = estimate_lower_form_bound(&mats).unwrap();
        assert!((lower.bound - 1.0).abs() < 1e-4, "{}", lower.bound);
    }

    #[test]
    fn pencil_bounds_match_dense_route() {
        let mesh = Arc::new(Mesh::geometric(1e-2, 20.0, 150, Weight::Radial { n: 3 }).unwrap());
        let sigma = Potential::pointwise(Profile::RadialOscillating { n: 3 });
        let mats = assemble(&mesh, &EllipticCoeff::identity(), &sigma).unwrap();
        let dense = dense_pencil_eigenvalues(&mats.potential, &mats.stiffness).unwrap();
        let b = form_bounds(&mats).unwrap();
        assert_relative_eq!(b.lambda_upper, dense[dense.len() - 1], max_relative = 1e-8);
        assert_relative_eq!(b.lambda_lower, -dense[0], max_relative = 1e-8);
        assert!(b.lambda_lower > 0.0);
    }

    #[test]
    fn flat_multiplier_norm() {
        let c1 = multiplier_norm(&Profile::constant(1.0), &unit(1000)).unwrap();
        assert!((c1 - 1.0 / (PI * PI)).abs() < 1e-5 / (PI * PI) * 10.0);
        assert_eq!(multiplier_norm(&Profile::zero(), &unit(10)).unwrap(), 0.0);
    }

    #[test]
    fn certificate_fails_for_positive_constant_without_field() {
        let report = check_semibound_certificate(
            &Potential::pointwise(Profile::constant(1.0)),
            &Profile::zero(),
            &EllipticCoeff::identity(),
            &unit(20),
        )
        .unwrap();
        assert!(!report.passed);
        assert!(report.min_pairing < 0.0);
    }

    #[test]
    fn coefficient_bounds_are_checked() {
        let a = EllipticCoeff::new(Profile::power(1.0, 1.0), 0.5, 2.0).unwrap();
        assert!(a.check(&unit(4)).is_err());
        let b = EllipticCoeff::new(Profile::power(1.0, 1.0), 0.5, 2.0).unwrap();
        let mesh = Mesh::uniform(0.5, 2.0, 4, Weight::Flat).unwrap();
        assert!(b.check(&mesh).is_ok());
        assert!(EllipticCoeff::new(Profile::constant(1.0), 0.0, 1.0).is_err());
    }

    #[test]
    fn sweep_csv_has_header_and_rows() {
        let rows = [FormBounds { h: 0.1, lambda_upper: 0.2, lambda_lower: 0.0, iterations: 3 }];
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("h,lambda_upper,lambda_lower,iterations\n0.1,0.2,0.0,3"));
    }
}
