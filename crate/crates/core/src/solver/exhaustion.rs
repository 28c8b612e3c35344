use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnose, DiagnosticsReport};
use crate::error::{Error, Result};
use crate::forms::{assemble, estimate_upper_form_bound, stiffness_matrix, EllipticCoeff};
use crate::linalg::{solve_spd, SolveStats};
use crate::mesh::{Ball, ExhaustionSpec, Field, Mesh};
use crate::potential::{mollify, MollifierSpec, Potential};

/// Nodal values below `-NEGATIVITY_TOLERANCE` count as a maximum-principle
/// violation.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-10;

/// Level-to-level drift below which the exhaustion is declared converged.
pub const DRIFT_TOLERANCE: f64 = 1e-4;

/// `mean_B u^2` with respect to the mesh measure.
pub fn ball_mean_square(u: &Field, ball: &Ball) -> Result<f64> {
    let mesh = u.mesh();
    let total = mesh.integrate_over(ball.lo(), ball.hi(), |x| u.eval(x).powi(2))?;
    Ok(total / mesh.integrate_over(ball.lo(), ball.hi(), |_| 1.0)?)
}

/// Output of one Lax-Milgram solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSolution {
    pub u: Field,
    /// Measured upper form bound of the level potential.
    pub lambda: f64,
    pub stats: SolveStats,
    pub min_u: f64,
    /// `mean_B u^2` after normalization.
    pub normalization: f64,
    /// Largest relative row residual of `(K - S) u = 0` at interior nodes.
    pub weak_residual: f64,
}

/// Solves `int a w' h' - <sigma w, h> = <sigma, h>` for `w` vanishing at the
/// ends, sets `v = w + 1` and normalizes to `mean_B u^2 = 1`.
pub fn solve_level(mesh: &Arc<Mesh>, a: &EllipticCoeff, sigma: &Potential, ball: &Ball) -> Result<LevelSolution> {
    if sigma.has_atoms() {
        return Err(Error::UnsupportedPotential(
            "point masses must be mollified before the level solve".into(),
        ));
    }
    if !ball.inside(mesh.start(), mesh.end()) || !(ball.radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "normalization ball {ball:?} is not inside ({}, {})",
            mesh.start(),
            mesh.end()
        )));
    }
    let mats = assemble(mesh, a, sigma)?;
    let lambda = estimate_upper_form_bound(&mats)?.bound;
    if !(lambda < 1.0) {
        return Err(Error::CoercivityLost { lambda });
    }
    let load = sigma.hat_pairings(mesh)?;
    let system = mats.stiffness.combine(1.0, &mats.potential, -1.0);
    let (w, stats) = solve_spd(&system, &load[1..load.len() - 1])?;

    let mut values = Vec::with_capacity(mesh.node_count());
    values.push(1.0);
    values.extend(w.iter().map(|w| w + 1.0));
    values.push(1.0);
    let v = Field::new(mesh.clone(), values)?;
    let mean = ball_mean_square(&v, ball)?;
    if !(mean > 0.0) {
        return Err(Error::SolveFailed("solution vanishes on the normalization ball".into()));
    }
    let u = v.map(|x| x / mean.sqrt())?;
    let min_u = u.min();
    if min_u < -NEGATIVITY_TOLERANCE {
        return Err(Error::NegativeSolution { min: min_u });
    }
    let normalization = ball_mean_square(&u, ball)?;
    let weak_residual = homogeneous_residual(&u, a, sigma)?;
    Ok(LevelSolution {
        u,
        lambda,
        stats,
        min_u,
        normalization,
        weak_residual,
    })
}

/// `max_i |((K - S) u)_i| / sum_j |K_ij u_j| + |S_ij u_j|` over interior rows.
fn homogeneous_residual(u: &Field, a: &EllipticCoeff, sigma: &Potential) -> Result<f64> {
    let mesh = u.mesh();
    let k = stiffness_matrix(mesh, |x| a.eval(x))?;
    let s = sigma.product_matrix(mesh)?;
    let x = u.values();
    let n = x.len();
    let mut worst = 0.0f64;
    for i in 1..n - 1 {
        let terms = [
            (k.off[i - 1] - s.off[i - 1]) * x[i - 1],
            (k.diag[i] - s.diag[i]) * x[i],
            (k.off[i] - s.off[i]) * x[i + 1],
        ];
        let scale = k.off[i - 1].abs() * x[i - 1].abs()
            + k.diag[i].abs() * x[i].abs()
            + k.off[i].abs() * x[i + 1].abs()
            + s.off[i - 1].abs() * x[i - 1].abs()
            + s.diag[i].abs() * x[i].abs()
            + s.off[i].abs() * x[i + 1].abs();
        if scale > 0.0 {
            worst = worst.max(terms.iter().sum::<f64>().abs() / scale);
        }
    }
    Ok(worst)
}

/// Knobs of the exhaustion run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionOptions {
    /// Mollify `sigma` at radius `eps_j` on level `j`.
    pub mollify: bool,
    /// Normalization ball; defaults to the midpoint of the first level with
    /// radius `|O_1| / 16`.
    pub ball: Option<Ball>,
    /// Subdomain for the per-level diagnostics; defaults to the first level.
    pub diagnostics_domain: Option<(f64, f64)>,
    /// Reverse Holder exponent for the diagnostics.
    pub wrh_exponent: f64,
}

impl Default for ExhaustionOptions {
    fn default() -> Self {
        Self {
            mollify: true,
            ball: None,
            diagnostics_domain: None,
            wrh_exponent: 2.0,
        }
    }
}

/// Trend of the level drifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    /// Last drift below the tolerance.
    Converged,
    /// Not yet below the tolerance, but not growing either.
    Pending,
    /// Drift above tolerance and non-decreasing over three consecutive levels.
    Diverging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub lo: f64,
    pub hi: f64,
    pub epsilon: f64,
    pub elements: usize,
    pub lambda: f64,
    pub min_u: f64,
    pub normalization: f64,
    /// `||u_j - u_{j-1}||_{L^2(O_{j-1})}`; absent on the first level.
    pub drift: Option<f64>,
    pub caccioppoli_ratio: f64,
    pub log_caccioppoli_ratio: f64,
    pub wrh_constant: f64,
    pub bmo_constant: f64,
    pub doubling_constant: f64,
    pub iterations: usize,
    pub weak_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustionSolveReport {
    pub ball: Ball,
    pub diagnostics_domain: (f64, f64),
    pub levels: Vec<LevelReport>,
    #[serde(skip)]
    pub fields: Vec<Field>,
    #[serde(skip)]
    pub diagnostics: Vec<DiagnosticsReport>,
    pub convergence: Convergence,
    /// Minimum nodal value over all levels.
    pub positivity_margin: f64,
}

impl ExhaustionSolveReport {
    /// Solution on the largest level.
    pub fn solution(&self) -> &Field {
        self.fields.last().expect("at least one level")
    }

    pub fn drifts(&self) -> Vec<f64> {
        self.levels.iter().filter_map(|l| l.drift).collect()
    }

    /// `max / median` of the log-Caccioppoli ratios over the levels.
    pub fn log_caccioppoli_spread(&self) -> f64 {
        spread(self.levels.iter().map(|l| l.log_caccioppoli_ratio).collect())
    }

    /// `max / median` of the doubling constants over the levels.
    pub fn doubling_spread(&self) -> f64 {
        spread(self.levels.iter().map(|l| l.doubling_constant).collect())
    }

    /// Fails with the drift history unless the run converged.
    pub fn ensure_converged(&self) -> Result<()> {
        match self.convergence {
            Convergence::Converged => Ok(()),
            _ => Err(Error::NonConvergence {
                drifts: self.drifts(),
            }),
        }
    }
}

fn spread(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n == 0 {
        return f64::NAN;
    }
    let median = if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    };
    let max = values[n - 1];
    if max == 0.0 {
        1.0
    } else {
        max / median
    }
}

fn classify(drifts: &[f64]) -> Convergence {
    match drifts.last() {
        Some(&d) if d < DRIFT_TOLERANCE => Convergence::Converged,
        Some(_) if drifts.len() >= 3 => {
            let tail = &drifts[drifts.len() - 3..];
            if tail[0] <= tail[1] && tail[1] <= tail[2] {
                Convergence::Diverging
            } else {
                Convergence::Pending
            }
        }
        _ => Convergence::Pending,
    }
}

/// Runs `solve_level` on every level of `spec`, each level living on the
/// sub-mesh of `mesh` whose end nodes are nearest to the level endpoints.
pub fn solve_exhaustion(
    mesh: &Arc<Mesh>,
    spec: &ExhaustionSpec,
    a: &EllipticCoeff,
    sigma: &Potential,
    options: &ExhaustionOptions,
) -> Result<ExhaustionSolveReport> {
    spec.validate()?;
    if spec.levels.is_empty() {
        return Err(Error::InvalidArgument("exhaustion has no levels".into()));
    }
    if sigma.has_atoms() && !options.mollify {
        return Err(Error::UnsupportedPotential(
            "point masses need mollification before the exhaustion solve".into(),
        ));
    }
    let mut ranges: Vec<(usize, usize)> = Vec::with_capacity(spec.levels.len());
    for (j, level) in spec.levels.iter().enumerate() {
        let (first, last) = (snap(mesh, level.lo, false), snap(mesh, level.hi, true));
        let nested = match ranges.last() {
            Some(&(pf, pl)) => first < pf && last > pl,
            None => true,
        };
        if !nested || last < first + 2 {
            return Err(Error::InvalidArgument(format!(
                "mesh too coarse to resolve exhaustion level {}",
                j + 1
            )));
        }
        ranges.push((first, last));
    }
    let nodes = mesh.nodes();
    let first_level = (nodes[ranges[0].0], nodes[ranges[0].1]);
    let ball = options.ball.unwrap_or(Ball {
        center: 0.5 * (first_level.0 + first_level.1),
        radius: (first_level.1 - first_level.0) / 16.0,
    });
    let domain = options.diagnostics_domain.unwrap_or(first_level);

    let mut levels = Vec::with_capacity(ranges.len());
    let mut fields: Vec<Field> = Vec::with_capacity(ranges.len());
    let mut diagnostics = Vec::with_capacity(ranges.len());
    let mut drifts = Vec::new();
    for (j, (&(first, last), level)) in ranges.iter().zip(&spec.levels).enumerate() {
        let level_mesh = Arc::new(mesh.submesh(first, last)?);
        let sigma_j = if options.mollify {
            mollify(sigma, &MollifierSpec::new(level.epsilon)?, &level_mesh)?
        } else {
            sigma.clone()
        };
        let solved = solve_level(&level_mesh, a, &sigma_j, &ball)?;
        let report = diagnose(&solved.u, domain, options.wrh_exponent)?;
        let drift = match (fields.last(), ranges.get(j.wrapping_sub(1))) {
            (Some(prev), Some(&(pf, _))) => {
                let restricted = solved.u.restrict(prev.mesh().clone(), pf - first)?;
                Some(l2_distance(&restricted, prev))
            }
            _ => None,
        };
        if let Some(d) = drift {
            drifts.push(d);
        }
        levels.push(LevelReport {
            level: j + 1,
            lo: level_mesh.start(),
            hi: level_mesh.end(),
            epsilon: level.epsilon,
            elements: level_mesh.element_count(),
            lambda: solved.lambda,
            min_u: solved.min_u,
            normalization: solved.normalization,
            drift,
            caccioppoli_ratio: report.caccioppoli_ratio,
            log_caccioppoli_ratio: report.log_caccioppoli_ratio,
            wrh_constant: report.wrh_constant,
            bmo_constant: report.bmo_constant,
            doubling_constant: report.doubling_constant,
            iterations: solved.stats.iterations,
            weak_residual: solved.weak_residual,
        });
        diagnostics.push(report);
        fields.push(solved.u);
    }
    let positivity_margin = levels.iter().map(|l| l.min_u).fold(f64::INFINITY, f64::min);
    Ok(ExhaustionSolveReport {
        ball,
        diagnostics_domain: domain,
        levels,
        fields,
        diagnostics,
        convergence: classify(&drifts),
        positivity_margin,
    })
}

/// Nearest node to `x`; near-ties (up to rounding in the element length)
/// go to the upper node when `upward`, the lower one otherwise, so that
/// symmetric levels stay symmetric.
fn snap(mesh: &Mesh, x: f64, upward: bool) -> usize {
    let i = mesh.nearest_node(x);
    let nodes = mesh.nodes();
    let neighbour = if nodes[i] <= x { i + 1 } else { i.wrapping_sub(1) };
    let Some(&other) = nodes.get(neighbour) else { return i };
    let (di, dn) = ((x - nodes[i]).abs(), (x - other).abs());
    let tie = (di - dn).abs() <= 1e-9 * (nodes[i] - other).abs();
    if tie && (other > nodes[i]) == upward {
        neighbour
    } else {
        i
    }
}

fn l2_distance(f: &Field, g: &Field) -> f64 {
    let mesh = f.mesh();
    mesh.quadrature()
        .map(|q| q.weight * (f.eval_in(q.element, q.x) - g.eval_in(q.element, q.x)).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Writes one row per level.
pub fn write_level_csv<W: Write>(levels: &[LevelReport], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in levels {
        writer
            .serialize(row)
            .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    }
    writer
        .flush()
        .map_err(|e| Error::InvalidArgument(format!("csv: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_exhaustion, Weight};
    use crate::potential::Profile;
    use std::f64::consts::PI;

    fn unit(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform(0.0, 1.0, n, Weight::Flat).unwrap())
    }

    fn centre_ball() -> Ball {
        Ball { center: 0.5, radius: 1.0 / 32.0 }
    }

    #[test]
    fn zero_potential_gives_unit_solution() {
        let sol = solve_level(&unit(50), &EllipticCoeff::identity(), &Potential::zero(), &centre_ball()).unwrap();
        assert!(sol.u.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!((sol.normalization - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_potential_matches_cosine() {
        let q = PI * PI / 4.0;
        let mesh = unit(1000);
        let ball = centre_ball();
        let sol = solve_level(&mesh, &EllipticCoeff::identity(), &Potential::pointwise(Profile::constant(q)), &ball).unwrap();
        let exact = Field::from_fn(mesh.clone(), |x| (q.sqrt() * (x - 0.5)).cos() / (q.sqrt() / 2.0).cos()).unwrap();
        let c = ball_mean_square(&exact, &ball).unwrap().sqrt();
        let err = sol.u.values().iter().zip(exact.values()).fold(0.0f64, |m, (a, b)| m.max((a - b / c).abs()));
        assert!(err < 1e-4, "{err}");
        assert!(sol.weak_residual < 1e-8);
    }

    #[test]
    fn supercritical_level_is_refused() {
        let sigma = Potential::pointwise(Profile::constant(1.2 * PI * PI));
        let err = solve_level(&unit(200), &EllipticCoeff::identity(), &sigma, &centre_ball());
        assert!(matches!(err, Err(Error::CoercivityLost { .. })));
    }

    #[test]
    fn atoms_need_mollification() {
        let sigma = Potential::atomic([(0.5, 1.0)]);
        assert!(matches!(
            solve_level(&unit(20), &EllipticCoeff::identity(), &sigma, &centre_ball()),
            Err(Error::UnsupportedPotential(_))
        ));
        let spec = build_exhaustion((0.0, 1.0), 3).unwrap();
        let options = ExhaustionOptions { mollify: false, ..Default::default() };
        assert!(solve_exhaustion(&unit(200), &spec, &EllipticCoeff::identity(), &sigma, &options).is_err());
    }

    #[test]
    fn zero_potential_exhaustion_has_no_drift() {
        let spec = build_exhaustion((0.0, 1.0), 4).unwrap();
        let report = solve_exhaustion(&unit(400), &spec, &EllipticCoeff::identity(), &Potential::zero(), &Default::default()).unwrap();
        assert!(report.drifts().iter().all(|d| *d < 1e-12));
        assert_eq!(report.convergence, Convergence::Converged);
    }

    #[test]
    fn drift_classification() {
        assert_eq!(classify(&[1e-3, 2e-3, 3e-3]), Convergence::Diverging);
        assert_eq!(classify(&[1e-3, 5e-4, 3e-3]), Convergence::Pending);
        assert_eq!(classify(&[1e-3, 5e-5]), Convergence::Converged);
        assert_eq!(classify(&[]), Convergence::Pending);
    }
}
