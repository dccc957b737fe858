//! Similarity-score density model: a pair of truncated, renormalised
//! normal densities on [0, 1] for true-positive and false-positive
//! candidates, with the posterior, its monotonicity cases, and the
//! threshold-bias integrals (gap / risk) evaluated by adaptive quadrature.
//!
//! Scores of true positives follow `f+` (mean `mu_pos`, spread
//! `sigma_pos`); scores of false positives follow `f-`. Both densities
//! are normal densities restricted to [0, 1] and renormalised to unit
//! mass. `n_pos` and `n_neg` are the candidate-set cardinalities the
//! bias integrals weight the densities by.

use serde::{Deserialize, Serialize};

use crate::analysis::quad;
use crate::error::{Error, Result};
use crate::par;

/// Quadrature tolerance for the internal integrals; tighter than the
/// 1e-10 the reported quantities are promised to.
const QUAD_TOL: f64 = 1e-12;

/// Bisection width at which threshold root-finding stops.
const BISECT_TOL: f64 = 1e-12;

fn std_normal_cdf(x: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).expect("valid parameters").cdf(x)
}

/// Truncated renormalised normal pair with candidate cardinalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityModel {
    mu_pos: f64,
    sigma_pos: f64,
    mu_neg: f64,
    sigma_neg: f64,
    n_pos: f64,
    n_neg: f64,
    z_pos: f64,
    z_neg: f64,
}

impl DensityModel {
    /// Build and validate a model. Requires positive spreads, strictly
    /// separated means (`mu_neg < mu_pos`), nonnegative cardinalities,
    /// and both truncated densities integrating to 1 within 1e-9.
    pub fn new(
        mu_pos: f64,
        sigma_pos: f64,
        mu_neg: f64,
        sigma_neg: f64,
        n_pos: f64,
        n_neg: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("mu_pos", mu_pos),
            ("sigma_pos", sigma_pos),
            ("mu_neg", mu_neg),
            ("sigma_neg", sigma_neg),
            ("n_pos", n_pos),
            ("n_neg", n_neg),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        if !(sigma_pos > 0.0) || !(sigma_neg > 0.0) {
            return Err(Error::InvalidArgument(
                "spreads must be strictly positive".into(),
            ));
        }
        if !(mu_neg < mu_pos) {
            return Err(Error::InvalidArgument(format!(
                "means must satisfy mu_neg < mu_pos, got {mu_neg} >= {mu_pos}"
            )));
        }
        if n_pos < 0.0 || n_neg < 0.0 {
            return Err(Error::InvalidArgument(
                "cardinalities must be nonnegative".into(),
            ));
        }
        let z_pos = std_normal_cdf((1.0 - mu_pos) / sigma_pos) - std_normal_cdf(-mu_pos / sigma_pos);
        let z_neg = std_normal_cdf((1.0 - mu_neg) / sigma_neg) - std_normal_cdf(-mu_neg / sigma_neg);
        if !(z_pos > 0.0) || !(z_neg > 0.0) {
            return Err(Error::InvalidArgument(
                "a density has no mass on [0, 1]".into(),
            ));
        }
        let dm = Self {
            mu_pos,
            sigma_pos,
            mu_neg,
            sigma_neg,
            n_pos,
            n_neg,
            z_pos,
            z_neg,
        };
        for (name, total) in [
            ("positive", dm.integral(|x| dm.f_pos(x), 0.0, 1.0)?),
            ("negative", dm.integral(|x| dm.f_neg(x), 0.0, 1.0)?),
        ] {
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!(
                    "{name} density integrates to {total}, expected 1"
                )));
            }
        }
        Ok(dm)
    }

    pub fn mu_pos(&self) -> f64 {
        self.mu_pos
    }

    pub fn sigma_pos(&self) -> f64 {
        self.sigma_pos
    }

    pub fn mu_neg(&self) -> f64 {
        self.mu_neg
    }

    pub fn sigma_neg(&self) -> f64 {
        self.sigma_neg
    }

    pub fn n_pos(&self) -> f64 {
        self.n_pos
    }

    pub fn n_neg(&self) -> f64 {
        self.n_neg
    }

    fn truncated(x: f64, mu: f64, sigma: f64, z: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let t = (x - mu) / sigma;
        (-0.5 * t * t).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt() * z)
    }

    /// True-positive score density at `x` (zero outside [0, 1]).
    pub fn f_pos(&self, x: f64) -> f64 {
        Self::truncated(x, self.mu_pos, self.sigma_pos, self.z_pos)
    }

    /// False-positive score density at `x` (zero outside [0, 1]).
    pub fn f_neg(&self, x: f64) -> f64 {
        Self::truncated(x, self.mu_neg, self.sigma_neg, self.z_neg)
    }

    /// Posterior probability that a candidate with score `x` is a true
    /// positive, `f+(x) / (f+(x) + f-(x))`. Defined for `x` in [0, 1];
    /// outside, both densities vanish and the ratio is NaN.
    pub fn posterior_positive(&self, x: f64) -> f64 {
        let p = self.f_pos(x);
        p / (p + self.f_neg(x))
    }

    /// The interval on which the posterior is non-decreasing, with its
    /// case label. The spread comparison uses exact float equality; the
    /// unequal-spread boundaries are where the density log-ratio turns.
    pub fn monotone_interval(&self) -> MonotoneInterval {
        let (sp2, sn2) = (self.sigma_pos * self.sigma_pos, self.sigma_neg * self.sigma_neg);
        if self.sigma_pos == self.sigma_neg {
            MonotoneInterval {
                case: MonotoneCase::EqualSpread,
                lo: 0.0,
                hi: 1.0,
            }
        } else if self.sigma_pos < self.sigma_neg {
            let boundary = (sn2 * self.mu_pos - sp2 * self.mu_neg) / (sn2 - sp2);
            MonotoneInterval {
                case: MonotoneCase::TighterPositive,
                lo: 0.0,
                hi: boundary.min(1.0),
            }
        } else {
            let boundary = (sp2 * self.mu_neg - sn2 * self.mu_pos) / (sp2 - sn2);
            MonotoneInterval {
                case: MonotoneCase::WiderPositive,
                lo: boundary.max(0.0),
                hi: 1.0,
            }
        }
    }

    fn integral(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64> {
        Ok(quad::integrate(f, a, b, QUAD_TOL)?.value)
    }

    /// `totsim(t)`: the expected similarity mass above threshold `t`,
    /// `n_pos * int_t^1 x f+ + n_neg * int_t^1 x f-`.
    fn totsim_at(&self, t: f64) -> Result<f64> {
        let pos = self.integral(|x| x * self.f_pos(x), t, 1.0)?;
        let neg = self.integral(|x| x * self.f_neg(x), t, 1.0)?;
        Ok(self.n_pos * pos + self.n_neg * neg)
    }

    /// The admissibility threshold: the unique root of
    /// `t * n_pos = totsim(t)`, found by bisection to 1e-12. Above it,
    /// every surviving score satisfies `x / totsim > 1 / n_pos`, so the
    /// gap integrand loses its absolute-value kink.
    pub fn tau3(&self) -> Result<f64> {
        if !(self.n_pos > 0.0) {
            return Err(Error::InvalidArgument(
                "positive cardinality must be positive to solve for the admissibility threshold"
                    .into(),
            ));
        }
        // g(t) = t * n_pos - totsim(t) is strictly increasing with
        // g(0) < 0 and g(1) = n_pos > 0.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > BISECT_TOL {
            let mid = 0.5 * (lo + hi);
            if mid * self.n_pos - self.totsim_at(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Threshold-bias decomposition at threshold `tau`, which must lie
    /// strictly between [`Self::tau3`] and 1 (the error reports the
    /// boundary). All integrals are adaptive quadrature to within 1e-10.
    pub fn gap_risk(&self, tau: f64) -> Result<GapRisk> {
        let tau3 = self.tau3()?;
        if !tau.is_finite() || tau <= tau3 || tau >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "threshold {tau} outside the admissible range ({tau3:.12}, 1)"
            )));
        }
        let below_pos = self.integral(|x| self.f_pos(x), 0.0, tau)?;
        let above_pos = self.integral(|x| self.f_pos(x), tau, 1.0)?;
        let above_x_pos = self.integral(|x| x * self.f_pos(x), tau, 1.0)?;
        let above_x_neg = self.integral(|x| x * self.f_neg(x), tau, 1.0)?;
        let totsim = self.n_pos * above_x_pos + self.n_neg * above_x_neg;
        if !(totsim > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "no similarity mass above threshold {tau}"
            )));
        }
        // Direct bias: excluded true-positive mass, plus the sampling-rate
        // deviation on surviving true positives (integrated with the
        // absolute value in place), plus the rate mass on false positives.
        let deviation = self.integral(
            |x| (x / totsim - 1.0 / self.n_pos).abs() * self.f_pos(x),
            tau,
            1.0,
        )?;
        let bias_direct =
            below_pos + self.n_pos * deviation + self.n_neg * above_x_neg / totsim;
        Ok(GapRisk {
            tau,
            tau3,
            totsim,
            gap_gt: below_pos - above_pos,
            gap_sim: self.n_pos * above_x_pos / totsim,
            gap: below_pos - above_pos + self.n_pos * above_x_pos / totsim,
            risk: self.n_neg * above_x_neg / totsim,
            bias_direct,
        })
    }
}

/// Which spread relationship holds, naming the monotonicity case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MonotoneCase {
    /// Equal spreads: the posterior is non-decreasing on all of [0, 1].
    EqualSpread,
    /// Tighter positive spread: non-decreasing from 0 up to the turning
    /// boundary.
    TighterPositive,
    /// Wider positive spread: non-decreasing from the turning boundary
    /// up to 1.
    WiderPositive,
}

impl MonotoneCase {
    pub fn label(&self) -> &'static str {
        match self {
            Self::EqualSpread => "equal-spread",
            Self::TighterPositive => "tighter-positive",
            Self::WiderPositive => "wider-positive",
        }
    }
}

/// Closed interval (clipped to [0, 1]) on which the posterior is
/// non-decreasing, with its case label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotoneInterval {
    pub case: MonotoneCase,
    pub lo: f64,
    pub hi: f64,
}

/// One row of the threshold-bias decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRisk {
    pub tau: f64,
    pub tau3: f64,
    pub totsim: f64,
    /// Signed under/over-threshold imbalance of true-positive mass; can
    /// be negative at small thresholds and is reported as computed.
    pub gap_gt: f64,
    /// Rate mass placed on surviving true positives.
    pub gap_sim: f64,
    /// `gap_gt + gap_sim`.
    pub gap: f64,
    /// Rate mass placed on surviving false positives.
    pub risk: f64,
    /// The direct deviation integral; equals `gap + risk` above the
    /// admissibility threshold.
    pub bias_direct: f64,
}

/// Evaluate the posterior on an evenly spaced grid over [0, 1]
/// (parallel, ordered). Returns `(x, posterior)` pairs.
pub fn posterior_grid(dm: &DensityModel, points: usize) -> Result<Vec<(f64, f64)>> {
    if points < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid needs at least 2 points, got {points}"
        )));
    }
    Ok(par::map_range(points, |i| {
        let x = i as f64 / (points - 1) as f64;
        (x, dm.posterior_positive(x))
    }))
}

/// Evaluate the bias decomposition on a threshold grid (parallel,
/// ordered). Every threshold must be admissible.
pub fn gap_risk_grid(dm: &DensityModel, taus: &[f64]) -> Result<Vec<GapRisk>> {
    par::map_slice(taus, |&tau| dm.gap_risk(tau))
        .into_iter()
        .collect()
}

pub fn posterior_grid_to_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("x,posterior\n");
    for (x, p) in rows {
        out.push_str(&format!("{x},{p}\n"));
    }
    out
}

pub fn gap_risk_to_csv(rows: &[GapRisk]) -> String {
    let mut out = String::from("tau,gap,risk,gap_gt,gap_sim,totsim,bias_direct,tau3\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.tau, r.gap, r.risk, r.gap_gt, r.gap_sim, r.totsim, r.bias_direct, r.tau3
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn symmetric() -> DensityModel {
        DensityModel::new(0.7, 0.1, 0.3, 0.1, 10.0, 10.0).unwrap()
    }

    fn assert_non_decreasing(dm: &DensityModel, lo: f64, hi: f64) {
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=1000 {
            let x = lo + (hi - lo) * i as f64 / 1000.0;
            let p = dm.posterior_positive(x);
            assert!((0.0..=1.0).contains(&p), "posterior {p} out of range");
            assert!(p >= prev - 1e-12, "posterior dips at x = {x}");
            prev = p;
        }
    }

    #[test]
    fn densities_integrate_to_one() {
        for dm in [symmetric(), DensityModel::new(0.9, 0.25, 0.2, 0.05, 3.0, 252.0).unwrap()] {
            let pos = quad::integrate(|x| dm.f_pos(x), 0.0, 1.0, 1e-13).unwrap().value;
            let neg = quad::integrate(|x| dm.f_neg(x), 0.0, 1.0, 1e-13).unwrap().value;
            assert!((pos - 1.0).abs() < 1e-9);
            assert!((neg - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(DensityModel::new(0.7, 0.0, 0.3, 0.1, 1.0, 1.0).is_err());
        assert!(DensityModel::new(0.3, 0.1, 0.7, 0.1, 1.0, 1.0).is_err());
        assert!(DensityModel::new(0.7, 0.1, 0.3, 0.1, -1.0, 1.0).is_err());
        assert!(DensityModel::new(f64::NAN, 0.1, 0.3, 0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn symmetric_posterior_crosses_half_at_the_midpoint() {
        let dm = symmetric();
        assert!((dm.posterior_positive(0.5) - 0.5).abs() < 1e-12);
        let m = dm.monotone_interval();
        assert_eq!(m.case, MonotoneCase::EqualSpread);
        assert_eq!((m.lo, m.hi), (0.0, 1.0));
        assert_non_decreasing(&dm, 0.0, 1.0);
    }

    #[test]
    fn tighter_positive_boundary_matches_the_turning_point() {
        // Log-ratio turning point: (0.0225*0.7 - 0.0025*0.3) / 0.02 = 0.75.
        let dm = DensityModel::new(0.7, 0.05, 0.3, 0.15, 1.0, 1.0).unwrap();
        let m = dm.monotone_interval();
        assert_eq!(m.case, MonotoneCase::TighterPositive);
        assert_eq!(m.lo, 0.0);
        assert!((m.hi - 0.75).abs() < 1e-12);
        assert_non_decreasing(&dm, 0.0, m.hi);
    }

    #[test]
    fn wider_positive_boundary_matches_the_turning_point() {
        // Turning point: (0.0225*0.3 - 0.0025*0.7) / 0.02 = 0.25.
        let dm = DensityModel::new(0.7, 0.15, 0.3, 0.05, 1.0, 1.0).unwrap();
        let m = dm.monotone_interval();
        assert_eq!(m.case, MonotoneCase::WiderPositive);
        assert!((m.lo - 0.25).abs() < 1e-12);
        assert_eq!(m.hi, 1.0);
        assert_non_decreasing(&dm, m.lo, 1.0);
    }

    #[test]
    fn admissibility_threshold_solves_its_equation() {
        let dm = DensityModel::new(0.7, 0.1, 0.3, 0.1, 5.0, 250.0).unwrap();
        let tau3 = dm.tau3().unwrap();
        assert!((0.0..1.0).contains(&tau3));
        assert!((tau3 * dm.n_pos() - dm.totsim_at(tau3).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn balance_and_recomposition_hold_above_the_threshold() {
        let dm = DensityModel::new(0.7, 0.1, 0.3, 0.1, 1e4, 1e4).unwrap();
        let gr = dm.gap_risk(0.7).unwrap();
        assert!((gr.gap_sim + gr.risk - 1.0).abs() < 1e-9, "balance broke");
        assert!(
            (gr.bias_direct - (gr.gap + gr.risk)).abs() < 1e-9,
            "recomposition broke: {} vs {}",
            gr.bias_direct,
            gr.gap + gr.risk
        );
        assert_eq!(gr.gap, gr.gap_gt + gr.gap_sim);
    }

    #[test]
    fn zero_negative_cardinality_zeroes_the_risk() {
        let dm = DensityModel::new(0.7, 0.1, 0.3, 0.1, 100.0, 0.0).unwrap();
        for tau in [0.75, 0.85, 0.95] {
            let gr = dm.gap_risk(tau).unwrap();
            assert_eq!(gr.risk, 0.0);
            assert!((gr.gap_sim - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inadmissible_thresholds_report_the_boundary() {
        let dm = DensityModel::new(0.7, 0.1, 0.3, 0.1, 1e4, 1e4).unwrap();
        let tau3 = dm.tau3().unwrap();
        for tau in [0.0, tau3 * 0.5, tau3, 1.0, 1.5] {
            match dm.gap_risk(tau) {
                Err(Error::InvalidArgument(msg)) => {
                    assert!(msg.contains(&format!("{tau3:.12}")), "message: {msg}");
                }
                other => panic!("expected a range error, got {other:?}"),
            }
        }
    }

    #[test]
    fn risk_falls_as_the_threshold_rises_under_equal_spreads() {
        // With equal spreads the density ratio f+/f- increases in x, so
        // the surviving tail is ever more dominated by true positives;
        // the false-positive rate mass must fall as tau rises. This pins
        // the implemented integrals to that forced direction.
        let dm = DensityModel::new(0.7, 0.1, 0.3, 0.1, 1e4, 1e4).unwrap();
        let tau3 = dm.tau3().unwrap();
        let lo = tau3 + 0.02 * (1.0 - tau3);
        let taus: Vec<f64> = (0..20).map(|i| lo + (0.99 - lo) * i as f64 / 19.0).collect();
        let rows = gap_risk_grid(&dm, &taus).unwrap();
        for pair in rows.windows(2) {
            assert!(
                pair[1].risk < pair[0].risk,
                "risk rose from {} to {} at tau {}",
                pair[0].risk,
                pair[1].risk,
                pair[1].tau
            );
        }
    }

    #[test]
    fn grids_match_pointwise_evaluation() {
        let dm = symmetric();
        let grid = posterior_grid(&dm, 11).unwrap();
        assert_eq!(grid.len(), 11);
        assert_eq!(grid[0].0, 0.0);
        assert_eq!(grid[10].0, 1.0);
        for (x, p) in &grid {
            assert_eq!(*p, dm.posterior_positive(*x));
        }
        let csv = posterior_grid_to_csv(&grid);
        assert!(csv.starts_with("x,posterior\n"));
        assert_eq!(csv.lines().count(), 12);

        let taus = [0.7, 0.75, 0.8];
        let rows = gap_risk_grid(&dm, &taus).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, tau) in rows.iter().zip(taus) {
            assert_eq!(*row, dm.gap_risk(tau).unwrap());
        }
        let csv = gap_risk_to_csv(&rows);
        assert!(csv.starts_with("tau,gap,risk,"));
        assert_eq!(csv.lines().count(), 4);
    }
}
