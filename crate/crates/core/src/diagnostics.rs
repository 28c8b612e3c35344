//! Estimators for the inequality constants: Caccioppoli and logarithmic
//! Caccioppoli ratios, weak reverse Holder (`B_U`), squared-oscillation BMO
//! (`D_U`) and doubling (`A_U`) constants over deterministic ball scans, and
//! a finite-difference residual checker for pointwise 3D problems.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{enumerate_balls, Ball, BallScan, Field, Mesh, MAX_CENTERS};

fn check_same_mesh(u: &Field, psi: &Field) -> Result<()> {
    if u.mesh().nodes() != psi.mesh().nodes() || u.mesh().weight() != psi.mesh().weight() {
        return Err(Error::InvalidField("fields live on different meshes".into()));
    }
    Ok(())
}

fn check_cutoff(psi: &Field) -> Result<()> {
    let v = psi.values();
    let scale = psi.sup_norm();
    if scale == 0.0 {
        return Err(Error::InvalidArgument("cutoff psi vanishes identically".into()));
    }
    let boundary = v[0].abs().max(v[v.len() - 1].abs());
    if boundary > 1e-12 * scale {
        return Err(Error::NonzeroBoundary { value: boundary });
    }
    Ok(())
}

/// `int |u'|^2 psi^2 dmu / int u^2 |psi'|^2 dmu`.
pub fn caccioppoli_ratio(u: &Field, psi: &Field) -> Result<f64> {
    check_same_mesh(u, psi)?;
    check_cutoff(psi)?;
    let mesh = u.mesh();
    let (mut num, mut den) = (0.0, 0.0);
    for q in mesh.quadrature() {
        let e = q.element;
        num += q.weight * u.slope(e).powi(2) * psi.eval_in(e, q.x).powi(2);
        den += q.weight * u.eval_in(e, q.x).powi(2) * psi.slope(e).powi(2);
    }
    if !(den > 0.0) {
        return Err(Error::InvalidArgument(
            "u vanishes where the cutoff varies".into(),
        ));
    }
    Ok(num / den)
}

/// `int (|u'|/u)^2 psi^2 dmu / int |psi'|^2 dmu`.
pub fn log_caccioppoli_ratio(u: &Field, psi: &Field) -> Result<f64> {
    check_same_mesh(u, psi)?;
    check_cutoff(psi)?;
    let mesh = u.mesh();
    let (uv, pv) = (u.values(), psi.values());
    for e in 0..mesh.element_count() {
        if pv[e] != 0.0 || pv[e + 1] != 0.0 {
            for node in [e, e + 1] {
                if !(uv[node] > 0.0) {
                    return Err(Error::Nonpositive {
                        node,
                        value: uv[node],
                    });
                }
            }
        }
    }
    let (mut num, mut den) = (0.0, 0.0);
    for q in mesh.quadrature() {
        let e = q.element;
        let p = psi.eval_in(e, q.x);
        if p != 0.0 {
            num += q.weight * (u.slope(e) / u.eval_in(e, q.x)).powi(2) * p * p;
        }
        den += q.weight * psi.slope(e).powi(2);
    }
    Ok(num / den)
}

/// Tent cutoff of unit height supported on `(lo, hi)`, as a nodal field.
pub fn tent(mesh: &std::sync::Arc<Mesh>, lo: f64, hi: f64) -> Result<Field> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument(format!("empty tent support ({lo}, {hi})")));
    }
    let mid = 0.5 * (lo + hi);
    Field::from_fn(mesh.clone(), |x| {
        if x <= lo || x >= hi {
            0.0
        } else if x <= mid {
            (x - lo) / (mid - lo)
        } else {
            (hi - x) / (hi - mid)
        }
    })
}

/// Mean of `f(w(x))` over a ball with respect to the mesh measure, integrated
/// exactly element by element with the ball endpoints as split points.
pub fn ball_mean(w: &Field, ball: &Ball, f: impl Fn(f64) -> f64) -> Result<f64> {
    let mesh = w.mesh();
    // same rule for the mass, so constants average to themselves exactly
    let measure = mesh.integrate_over(ball.lo(), ball.hi(), |_| 1.0)?;
    if !(measure > 0.0) {
        return Err(Error::InvalidArgument(format!("ball {ball:?} has no mass")));
    }
    let total = mesh.integrate_over(ball.lo(), ball.hi(), |x| f(w.eval(x)))?;
    Ok(total / measure)
}

/// Which constant a scan evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanKind {
    /// `(mean_B w^q)^{1/q} / mean_{2B} w`
    ReverseHolder { q: f64 },
    /// `mean_B |f - mean_B f|^2`
    Oscillation,
    /// `mean_{2B} w / mean_B w`
    Doubling,
}

impl ScanKind {
    pub fn enlargement(&self) -> u32 {
        match self {
            ScanKind::Doubling => 4,
            _ => 2,
        }
    }

    /// Value of the constant's quotient on a single ball; `None` when the
    /// quotient is undefined (zero mean on the reference ball). A ball of
    /// radius zero stands for the small-ball limit at its center: 1 for the
    /// two weight ratios wherever `f` is positive, 0 for the oscillation.
    pub fn evaluate(&self, f: &Field, ball: &Ball) -> Result<Option<f64>> {
        if ball.radius == 0.0 {
            return Ok(match self {
                ScanKind::Oscillation => Some(0.0),
                _ => (f.eval(ball.center) > 0.0).then_some(1.0),
            });
        }
        match *self {
            ScanKind::ReverseHolder { q } => {
                let top = ball_mean(f, ball, |v| v.max(0.0).powf(q))?.powf(1.0 / q);
                let bottom = ball_mean(f, &ball.enlarged(2.0), |v| v)?;
                Ok((bottom > 0.0).then(|| top / bottom))
            }
            ScanKind::Oscillation => {
                let mean = ball_mean(f, ball, |v| v)?;
                Ok(Some(ball_mean(f, ball, |v| (v - mean).powi(2))?))
            }
            ScanKind::Doubling => {
                let small = ball_mean(f, ball, |v| v)?;
                let large = ball_mean(f, &ball.enlarged(2.0), |v| v)?;
                Ok((small > 0.0).then(|| large / small))
            }
        }
    }
}

/// A ball and the quotient it produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub center: f64,
    pub radius: f64,
    pub value: f64,
}

impl Witness {
    pub fn ball(&self) -> Ball {
        Ball {
            center: self.center,
            radius: self.radius,
        }
    }
}

/// Quotient on every ball of the scan (undefined quotients are skipped).
pub fn scan_table(f: &Field, scan: &BallScan, kind: ScanKind) -> Result<Vec<Witness>> {
    if scan.is_empty() {
        return Err(Error::EmptyScan {
            lo: scan.lo,
            hi: scan.hi,
        });
    }
    if scan.enlargement != kind.enlargement() {
        return Err(Error::InvalidArgument(format!(
            "{kind:?} needs a scan with enlargement {}, got {}",
            kind.enlargement(),
            scan.enlargement
        )));
    }
    let mut rows = Vec::with_capacity(scan.len());
    for ball in &scan.balls {
        if let Some(value) = kind.evaluate(f, ball)? {
            rows.push(Witness {
                center: ball.center,
                radius: ball.radius,
                value,
            });
        }
    }
    Ok(rows)
}

/// Maximum over the scan; the first maximal ball is the witness.
pub fn scan_maximum(f: &Field, scan: &BallScan, kind: ScanKind) -> Result<Witness> {
    let rows = scan_table(f, scan, kind)?;
    let mut best: Option<Witness> = None;
    for row in rows {
        if best.map_or(true, |b| row.value > b.value) {
            best = Some(row);
        }
    }
    best.ok_or(Error::EmptyScan {
        lo: scan.lo,
        hi: scan.hi,
    })
}

/// Writes `center, radius, value` rows.
pub fn write_scan_csv<W: Write>(rows: &[Witness], out: W) -> Result<()> {
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

/// For a continuous weight both ratios tend to 1 on shrinking balls around
/// any point where it is positive, so the supremum is at least 1 even when
/// every scanned ball gives less (concave weights under doubling, convex
/// ones under reverse Holder).
fn with_small_ball_limit(w: &Field, best: Witness) -> Witness {
    if best.value < 1.0 && w.eval(best.center) > 0.0 {
        Witness {
            center: best.center,
            radius: 0.0,
            value: 1.0,
        }
    } else {
        best
    }
}

fn check_nonnegative(w: &Field) -> Result<()> {
    match w.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
        Some((node, &value)) => Err(Error::Nonpositive { node, value }),
        None => Ok(()),
    }
}

/// Weak reverse Holder constant `B_U` at exponent `q`.
pub fn wrh_constant(w: &Field, q: f64, scan: &BallScan) -> Result<(f64, Witness)> {
    if !(q > 1.0) {
        return Err(Error::InvalidArgument(format!("exponent q = {q} must exceed 1")));
    }
    check_nonnegative(w)?;
    let best = with_small_ball_limit(w, scan_maximum(w, scan, ScanKind::ReverseHolder { q })?);
    Ok((best.value, best))
}

/// Squared mean oscillation constant `D_U`.
pub fn bmo_constant(f: &Field, scan: &BallScan) -> Result<(f64, Witness)> {
    let best = scan_maximum(f, scan, ScanKind::Oscillation)?;
    Ok((best.value, best))
}

/// Doubling constant `A_U` over a scan with enlargement 4.
pub fn doubling_constant(w: &Field, scan: &BallScan) -> Result<(f64, Witness)> {
    check_nonnegative(w)?;
    let best = with_small_ball_limit(w, scan_maximum(w, scan, ScanKind::Doubling)?);
    Ok((best.value, best))
}

/// `(B_U, D_U of log w, A_U)` on one subdomain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingPipeline {
    pub lo: f64,
    pub hi: f64,
    pub q: f64,
    pub wrh: Witness,
    pub bmo: Witness,
    pub doubling: Witness,
}

impl DoublingPipeline {
    pub fn triple(&self) -> (f64, f64, f64) {
        (self.wrh.value, self.bmo.value, self.doubling.value)
    }
}

/// Computes `B_U`, `D_U` of `log w` and `A_U` on `(lo, hi)` for a positive weight.
pub fn wrh_bmo_implies_doubling_check(w: &Field, (lo, hi): (f64, f64), q: f64) -> Result<DoublingPipeline> {
    let mesh = w.mesh();
    for (node, (&x, &value)) in mesh.nodes().iter().zip(w.values()).enumerate() {
        if x >= lo && x <= hi && !(value > 0.0) {
            return Err(Error::Nonpositive { node, value });
        }
    }
    let scan2 = enumerate_balls(mesh, (lo, hi), 2, MAX_CENTERS)?;
    let scan4 = enumerate_balls(mesh, (lo, hi), 4, MAX_CENTERS)?;
    let (_, wrh) = wrh_constant(w, q, &scan2)?;
    // log w is only needed where w > 0, i.e. inside U
    let log_w = w.map(|v| if v > 0.0 { v.ln() } else { 0.0 })?;
    let (_, bmo) = bmo_constant(&log_w, &scan2)?;
    let (_, doubling) = doubling_constant(w, &scan4)?;
    Ok(DoublingPipeline {
        lo,
        hi,
        q,
        wrh,
        bmo,
        doubling,
    })
}

/// All constants for a positive solution `u` on a subdomain `U`, with the
/// weight `w = u^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub lo: f64,
    pub hi: f64,
    pub caccioppoli_ratio: f64,
    pub log_caccioppoli_ratio: f64,
    pub wrh_exponent: f64,
    pub wrh_constant: f64,
    pub bmo_constant: f64,
    pub doubling_constant: f64,
    pub wrh_witness: Witness,
    pub bmo_witness: Witness,
    pub doubling_witness: Witness,
}

/// Runs every estimator for `u` on `(lo, hi)`, with the tent on `(lo, hi)`
/// as cutoff and `w = u^2`.
pub fn diagnose(u: &Field, (lo, hi): (f64, f64), q: f64) -> Result<DiagnosticsReport> {
    let psi = tent(u.mesh(), lo, hi)?;
    let w = u.map(|v| v * v)?;
    let pipeline = wrh_bmo_implies_doubling_check(&w, (lo, hi), q)?;
    Ok(DiagnosticsReport {
        lo,
        hi,
        caccioppoli_ratio: caccioppoli_ratio(u, &psi)?,
        log_caccioppoli_ratio: log_caccioppoli_ratio(u, &psi)?,
        wrh_exponent: q,
        wrh_constant: pipeline.wrh.value,
        bmo_constant: pipeline.bmo.value,
        doubling_constant: pipeline.doubling.value,
        wrh_witness: pipeline.wrh,
        bmo_witness: pipeline.bmo,
        doubling_witness: pipeline.doubling,
    })
}

/// Point in `R^3`.
pub type Point3 = [f64; 3];

/// Maximum of `|-div(A grad u) - sigma u|` over `samples`, with the flux
/// `(A grad u)_i = sum_j A_ij d_j u` differenced centrally twice (step `h`).
/// Every stencil point must lie in the closed ball of radius `reach`.
pub fn pointwise_residual_3d(
    u: impl Fn(Point3) -> f64,
    a: impl Fn(Point3) -> [[f64; 3]; 3],
    sigma: impl Fn(Point3) -> f64,
    samples: &[Point3],
    h: f64,
    reach: f64,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step {h} must be positive")));
    }
    let shift = |x: Point3, i: usize, t: f64| {
        let mut y = x;
        y[i] += t;
        y
    };
    let gradient = |x: Point3| -> Point3 {
        let mut g = [0.0; 3];
        for (j, gj) in g.iter_mut().enumerate() {
            *gj = (u(shift(x, j, h)) - u(shift(x, j, -h))) / (2.0 * h);
        }
        g
    };
    let flux = |x: Point3, i: usize| -> f64 {
        let (m, g) = (a(x), gradient(x));
        (0..3).map(|j| m[i][j] * g[j]).sum()
    };
    let mut worst = 0.0f64;
    for &x in samples {
        // the nested stencil reaches x +- h e_i +- h e_j
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        if r + 2.0 * h > reach {
            return Err(Error::StencilOutOfDomain { point: x });
        }
        let div: f64 = (0..3)
            .map(|i| (flux(shift(x, i, h), i) - flux(shift(x, i, -h), i)) / (2.0 * h))
            .sum();
        let residual = -div - sigma(x) * u(x);
        if !residual.is_finite() {
            return Err(Error::NonFinite { x: r, value: residual });
        }
        worst = worst.max(residual.abs());
    }
    Ok(worst)
}

/// Quadrature form `sum_k w_k (A(x_k) g_k) . g_k` for gradients `g_k`.
pub fn quadratic_form_3d(a: impl Fn(Point3) -> [[f64; 3]; 3], points: &[Point3], gradients: &[Point3], weights: &[f64]) -> f64 {
    points
        .iter()
        .zip(gradients)
        .zip(weights)
        .map(|((&x, g), w)| {
            let m = a(x);
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    s += m[i][j] * g[j] * g[i];
                }
            }
            w * s
        })
        .sum()
}

fn radical_inverse(mut index: usize, base: usize) -> f64 {
    let (mut value, mut scale) = (0.0, 1.0 / base as f64);
    while index > 0 {
        value += (index % base) as f64 * scale;
        index /= base;
        scale /= base as f64;
    }
    value
}

/// First `count` Halton points (bases 2, 3, 5) inside the ball of `radius`.
pub fn halton_ball_points(count: usize, radius: f64) -> Vec<Point3> {
    let mut out = Vec::with_capacity(count);
    let mut index = 1;
    while out.len() < count {
        let p = [2, 3, 5].map(|b| radius * (2.0 * radical_inverse(index, b) - 1.0));
        if p.iter().map(|v| v * v).sum::<f64>() < radius * radius {
            out.push(p);
        }
        index += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Weight;
    use crate::potential::parse_example;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn unit(n: usize) -> Arc<Mesh> {
        Arc::new(Mesh::uniform(0.0, 1.0, n, Weight::Flat).unwrap())
    }

    #[test]
    fn constant_weight_gives_trivial_constants() {
        let mesh = unit(64);
        let w = Field::constant(mesh.clone(), 3.0).unwrap();
        let pipeline = wrh_bmo_implies_doubling_check(&w, (0.0, 1.0), 2.0).unwrap();
        let (b, d, a) = pipeline.triple();
        assert_relative_eq!(b, 1.0, epsilon = 1e-14);
        assert!(d.abs() < 1e-28);
        assert_relative_eq!(a, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_solution_has_zero_ratios() {
        let mesh = unit(20);
        let u = Field::constant(mesh.clone(), 2.0).unwrap();
        let psi = tent(&mesh, 0.25, 0.75).unwrap();
        assert_eq!(caccioppoli_ratio(&u, &psi).unwrap(), 0.0);
        assert_eq!(log_caccioppoli_ratio(&u, &psi).unwrap(), 0.0);
    }

    #[test]
    fn caccioppoli_of_sine_against_trig_integrals() {
        // int_{1/4}^{3/4} pi^2 cos^2(pi x) psi^2 / int sin^2(pi x) psi'^2, psi tent
        let mesh = unit(4000);
        let u = Field::from_fn(mesh.clone(), |x| (PI * x).sin()).unwrap();
        let psi = tent(&mesh, 0.25, 0.75).unwrap();
        let oracle_mesh = Mesh::uniform(0.25, 0.75, 2, Weight::Flat).unwrap();
        let psi_exact = |x: f64| 1.0 - (x - 0.5).abs() * 4.0;
        let num = oracle_mesh
            .integrate_over(0.25, 0.75, |x| (PI * (PI * x).cos() * psi_exact(x)).powi(2))
            .unwrap();
        let den = oracle_mesh
            .integrate_over(0.25, 0.75, |x| 16.0 * (PI * x).sin().powi(2))
            .unwrap();
        assert_relative_eq!(caccioppoli_ratio(&u, &psi).unwrap(), num / den, max_relative = 1e-5);
    }

    #[test]
    fn log_caccioppoli_rejects_nonpositive_u() {
        let mesh = unit(8);
        let u = Field::from_fn(mesh.clone(), |x| x - 0.5).unwrap();
        let psi = tent(&mesh, 0.25, 0.75).unwrap();
        assert!(matches!(log_caccioppoli_ratio(&u, &psi), Err(Error::Nonpositive { .. })));
    }

    #[test]
    fn witness_reproduces_constant() {
        let mesh = unit(200);
        let w = Field::from_fn(mesh.clone(), |x| (1.0 + x).powi(3)).unwrap();
        let scan = enumerate_balls(&mesh, (0.0, 1.0), 4, 16).unwrap();
        let (a, witness) = doubling_constant(&w, &scan).unwrap();
        assert_eq!(ScanKind::Doubling.evaluate(&w, &witness.ball()).unwrap(), Some(a));
    }

    #[test]
    fn scan_table_round_trips_through_csv() {
        let mesh = unit(32);
        let w = Field::from_fn(mesh.clone(), |x| 1.0 + x).unwrap();
        let scan = enumerate_balls(&mesh, (0.0, 1.0), 2, 4).unwrap();
        let rows = scan_table(&w, &scan, ScanKind::ReverseHolder { q: 2.0 }).unwrap();
        let mut buf = Vec::new();
        write_scan_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("center,radius,value\n"));
        assert_eq!(text.lines().count(), rows.len() + 1);
    }

    #[test]
    fn wrong_enlargement_is_rejected() {
        let mesh = unit(32);
        let w = Field::constant(mesh.clone(), 1.0).unwrap();
        let scan = enumerate_balls(&mesh, (0.0, 1.0), 2, 4).unwrap();
        assert!(doubling_constant(&w, &scan).is_err());
    }

    #[test]
    fn identity_matrix_residual_for_example_without_coupling() {
        let spec = parse_example("nonsym_3d(C=0)").unwrap();
        let ex = spec.nonsymmetric.unwrap();
        let samples = halton_ball_points(50, 1.0);
        let r = pointwise_residual_3d(|x| ex.solution(x), |x| ex.matrix(x), |x| ex.sigma(x), &samples, 1e-3, 1.01).unwrap();
        assert!(r < 1e-6, "{r}");
    }

    #[test]
    fn transposed_coupling_flips_the_drift_sign() {
        // with A_12 = +C a, A_21 = -C a the same u solves the equation whose
        // potential carries -2 x_2 C a' instead
        let spec = parse_example("nonsym_3d(C=1)").unwrap();
        let ex = spec.nonsymmetric.unwrap();
        let transposed = |x: Point3| {
            let m = ex.matrix(x);
            [[m[0][0], m[1][0], m[2][0]], [m[0][1], m[1][1], m[2][1]], [m[0][2], m[1][2], m[2][2]]]
        };
        let flipped = |x: Point3| (-6.0 - 2.0 * x[1]) / ex.solution(x);
        let samples = halton_ball_points(100, 1.0);
        let good = pointwise_residual_3d(|x| ex.solution(x), transposed, flipped, &samples, 1e-3, 1.01).unwrap();
        assert!(good < 1e-6);
        let bad = pointwise_residual_3d(|x| ex.solution(x), transposed, |x| ex.sigma(x), &samples, 1e-3, 1.01).unwrap();
        assert!(bad > 0.1);
    }

    #[test]
    fn stencil_must_stay_in_region() {
        let r = pointwise_residual_3d(|_| 1.0, |_| [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], |_| 0.0, &[[0.0, 0.0, 0.9999]], 1e-3, 1.0);
        assert!(matches!(r, Err(Error::StencilOutOfDomain { .. })));
    }

    #[test]
    fn halton_points_are_deterministic_and_inside() {
        let a = halton_ball_points(100, 1.0);
        assert_eq!(a, halton_ball_points(100, 1.0));
        assert!(a.iter().all(|p| p.iter().map(|v| v * v).sum::<f64>() < 1.0));
    }
}
