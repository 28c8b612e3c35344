//! Gauss-Legendre rules on the reference interval [-1, 1].

/// A fixed Gauss-Legendre rule.
#[derive(Debug, Clone, Copy)]
pub struct GaussRule {
    pub points: &'static [f64],
    pub weights: &'static [f64],
}

/// Four points, exact for polynomials of degree 7.
pub const GAUSS4: GaussRule = GaussRule {
    points: &[
        -0.861_136_311_594_052_6,
        -0.339_981_043_584_856_3,
        0.339_981_043_584_856_3,
        0.861_136_311_594_052_6,
    ],
    weights: &[
        0.347_854_845_137_453_9,
        0.652_145_154_862_546_1,
        0.652_145_154_862_546_1,
        0.347_854_845_137_453_9,
    ],
};

/// Eight points, exact for polynomials of degree 15.
pub const GAUSS8: GaussRule = GaussRule {
    points: &[
        -0.960_289_856_497_536_3,
        -0.796_666_477_413_626_7,
        -0.525_532_409_916_329_0,
        -0.183_434_642_495_649_8,
        0.183_434_642_495_649_8,
        0.525_532_409_916_329_0,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ],
    weights: &[
        0.101_228_536_290_376_3,
        0.222_381_034_453_374_5,
        0.313_706_645_877_887_3,
        0.362_683_783_378_362_0,
        0.362_683_783_378_362_0,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ],
};

impl GaussRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nodes and weights mapped to `[lo, hi]`.
    pub fn mapped(&self, lo: f64, hi: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        self.points
            .iter()
            .zip(self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    /// Composite rule with `panels` equal panels on `[lo, hi]`.
    pub fn composite(&self, lo: f64, hi: f64, panels: usize) -> Vec<(f64, f64)> {
        let step = (hi - lo) / panels as f64;
        (0..panels)
            .flat_map(|p| {
                let a = lo + step * p as f64;
                let b = if p + 1 == panels { hi } else { a + step };
                self.mapped(a, b).collect::<Vec<_>>()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_integrate_their_degree_exactly() {
        for (rule, degree) in [(GAUSS4, 7), (GAUSS8, 15)] {
            for k in 0..=degree {
                let approx: f64 = rule.mapped(0.0, 2.0).map(|(x, w)| w * x.powi(k)).sum();
                let exact = 2f64.powi(k + 1) / (k + 1) as f64;
                assert!((approx - exact).abs() < 1e-12 * exact, "k = {k}");
            }
        }
    }

    #[test]
    fn weights_sum_to_interval_length() {
        let total: f64 = GAUSS4.composite(-3.0, 5.0, 7).iter().map(|p| p.1).sum();
        assert!((total - 8.0).abs() < 1e-13);
    }
}
