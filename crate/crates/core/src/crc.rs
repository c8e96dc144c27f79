//! Sum-rate evaluation and covariance optimization for the two-user MIMO
//! cognitive radio channel.
//!
//! Signals: the primary transmitter sends `X1`; the cognitive transmitter
//! splits `X2 = X21 + X22`, where `X21` relays the primary message (jointly
//! Gaussian with `X1`) and `X22 = T2 X22'` carries the cognitive message,
//! dirty-paper coded against the known interference `[X1; X21]` with
//! inflation factor `W`. With `Sigma = T1 T1^*` the covariance of
//! `[X1; X21]` and `Sigma22 = T2 T2^*`, the sum rate is a Monte Carlo
//! expectation of two log-det ratios over the four fading links
//! `H11, H21, H12, H22` (see [`CrcProblem::sum_rate`]).
//!
//! Three optimizers are provided:
//!
//! * [`CrcProblem::joint_optimize_alg1`] — fixed-point iteration on the
//!   stationarity maps `T1 = diag(lp I, lc I) g1`, `T2 = lc g2`, with the
//!   Lagrange multipliers solved by bisection so the power constraints hold
//!   with equality, and the inflation factor refreshed through the
//!   equivalent G-FDPC seen by the cognitive receiver.
//! * [`CrcProblem::greedy_optimize_alg2`] — the greedy lower bound: fix the
//!   power split at `Pc/2` and alternate projected-gradient maximizations of
//!   the primary and cognitive terms.
//! * [`CrcProblem::optimize_perfect_cancellation`] — the comparison upper
//!   curve that assumes the cognitive receiver sees no interference.

use crate::ensemble::{mean_stderr, EnsembleConfig, SampleSet};
use crate::error::{Error, Result};
use crate::gfdpc::{collect_indexed, GfdpcCore, InflationOpts, WSearch};
use crate::linalg;
use crate::matrix::{ComplexMatrix, HermitianPsd};
use crate::scalar::Scalar;
use num_complex::Complex;
use rayon::prelude::*;

/// Four-link MIMO cognitive radio channel with power budgets.
///
/// The ensemble's links are, in order, `H11 (r1 x t1)`, `H21 (r1 x t2)`,
/// `H12 (r2 x t1)`, `H22 (r2 x t2)`.
#[derive(Clone, Debug)]
pub struct CrcProblem<T> {
    t1: usize,
    t2: usize,
    r1: usize,
    r2: usize,
    p_p: T,
    p_c: T,
    ensemble: EnsembleConfig<T>,
}

/// The per-sample Hermitian blocks of the rate expression and stationarity
/// maps: `N1, D1` for the primary term and `N2, D2` for the cognitive term.
#[derive(Clone, Debug)]
pub struct CrcSampleBlocks<T> {
    pub n1: HermitianPsd<T>,
    pub d1: HermitianPsd<T>,
    pub n2: HermitianPsd<T>,
    pub d2: HermitianPsd<T>,
}

/// Monte Carlo rate estimates in nats.
///
/// `r_c` is floored at zero (silence is always available to the cognitive
/// user); the raw signed estimate is kept in `r_c_raw`.
#[derive(Clone, Copy, Debug)]
pub struct CrcRates<T> {
    pub r_p: T,
    pub r_c: T,
    pub r_sum: T,
    pub r_c_raw: T,
    pub stderr_p: T,
    pub stderr_c: T,
    pub stderr_sum: T,
}

impl<T: Scalar> CrcRates<T> {
    /// Aggregate per-sample primary/cognitive values.
    pub fn from_values(rp: &[T], rc: &[T]) -> Self {
        let (r_p, stderr_p) = mean_stderr(rp);
        let (r_c_raw, stderr_c) = mean_stderr(rc);
        if r_c_raw < T::zero() {
            Self {
                r_p,
                r_c: T::zero(),
                r_sum: r_p,
                r_c_raw,
                stderr_p,
                stderr_c,
                stderr_sum: stderr_p,
            }
        } else {
            let sums: Vec<T> = rp.iter().zip(rc).map(|(&a, &b)| a + b).collect();
            let (r_sum, stderr_sum) = mean_stderr(&sums);
            Self { r_p, r_c: r_c_raw, r_sum, r_c_raw, stderr_p, stderr_c, stderr_sum }
        }
    }
}

/// Which optimizer produced a [`Solution`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptMethod {
    Joint,
    Greedy,
    PerfectCancellation,
}

/// Optimizer output: the covariance factors, inflation factor, multipliers
/// (joint optimizer only), achieved rates, and diagnostics.
#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub t1: ComplexMatrix<T>,
    pub t2: ComplexMatrix<T>,
    pub w: ComplexMatrix<T>,
    pub lambda_p: Option<T>,
    pub lambda_c: Option<T>,
    pub rates: CrcRates<T>,
    pub converged: bool,
    pub restarts_used: usize,
    /// Relative fixed-point residuals of the stationarity maps at the
    /// returned point (joint optimizer only).
    pub residuals: Option<(T, T)>,
    pub method: OptMethod,
}

/// Multiplier handling for the joint optimizer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaMode {
    /// Solve both power constraints as strict equalities (the convention the
    /// numerical results use).
    StrictEquality,
    /// Exploratory mode: scan a `divisions x divisions` grid of fractions of
    /// the strict-equality multipliers and keep the best sum rate; returned
    /// points may then use less than the full power budgets.
    GridSearch { divisions: usize },
}

/// Configuration of the joint fixed-point optimizer.
#[derive(Clone, Debug)]
pub struct Alg1Config<T> {
    pub restarts: usize,
    /// Relative sum-rate stall tolerance ending the outer loop.
    pub tol: T,
    pub max_outer: usize,
    /// Relative tolerance of the power equalities solved by bisection.
    pub multiplier_tol: T,
    /// Fixed-point residual bound required to report convergence.
    pub residual_tol: T,
    pub lambda_mode: LambdaMode,
    pub w_opts: InflationOpts<T>,
}

impl<T: Scalar> Default for Alg1Config<T> {
    fn default() -> Self {
        Self {
            restarts: 5,
            tol: T::of(1e-4),
            max_outer: 50,
            multiplier_tol: T::of(1e-10),
            residual_tol: T::of(1e-4),
            lambda_mode: LambdaMode::StrictEquality,
            w_opts: InflationOpts { max_iter: 150, ..Default::default() },
        }
    }
}

/// Configuration of the greedy optimizer.
#[derive(Clone, Debug)]
pub struct Alg2Config<T> {
    /// Relative rate stall tolerance ending the alternation.
    pub tol: T,
    pub max_rounds: usize,
    /// Projected-gradient iterations per inner maximization.
    pub pga_iters: usize,
    pub w_opts: InflationOpts<T>,
}

impl<T: Scalar> Default for Alg2Config<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-4),
            max_rounds: 20,
            pga_iters: 120,
            w_opts: InflationOpts { max_iter: 150, ..Default::default() },
        }
    }
}

struct LinkViews<'a, T> {
    h11: &'a ComplexMatrix<T>,
    h21: &'a ComplexMatrix<T>,
    h12: &'a ComplexMatrix<T>,
    h22: &'a ComplexMatrix<T>,
}

fn views<T: Scalar>(links: &[ComplexMatrix<T>]) -> LinkViews<'_, T> {
    LinkViews { h11: &links[0], h21: &links[1], h12: &links[2], h22: &links[3] }
}

impl<'a, T: Scalar> LinkViews<'a, T> {
    fn hbar1(&self) -> ComplexMatrix<T> {
        self.h11.hcat(self.h21)
    }

    fn hbar2(&self) -> ComplexMatrix<T> {
        self.h12.hcat(self.h22)
    }
}

impl<T: Scalar> CrcProblem<T> {
    pub fn new(p_p: T, p_c: T, ensemble: EnsembleConfig<T>) -> Result<Self> {
        ensemble.validate()?;
        if !(p_p > T::zero()) || !(p_c > T::zero()) {
            return Err(Error::InvalidParameter("powers must be positive".into()));
        }
        if ensemble.links.len() != 4 {
            return Err(Error::dim(
                "CrcProblem::new",
                "4 links (H11, H21, H12, H22)",
                format!("{}", ensemble.links.len()),
            ));
        }
        let (r1, t1) = (ensemble.links[0].rows, ensemble.links[0].cols);
        let (r1b, t2) = (ensemble.links[1].rows, ensemble.links[1].cols);
        let (r2, t1b) = (ensemble.links[2].rows, ensemble.links[2].cols);
        let (r2b, t2b) = (ensemble.links[3].rows, ensemble.links[3].cols);
        if r1 != r1b || r2 != r2b || t1 != t1b || t2 != t2b {
            return Err(Error::dim(
                "CrcProblem::new",
                "links shaped (r1,t1),(r1,t2),(r2,t1),(r2,t2)",
                format!("({r1},{t1}),({r1b},{t2}),({r2},{t1b}),({r2b},{t2b})"),
            ));
        }
        Ok(Self { t1, t2, r1, r2, p_p, p_c, ensemble })
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.t1, self.t2, self.r1, self.r2)
    }

    pub fn powers(&self) -> (T, T) {
        (self.p_p, self.p_c)
    }

    pub fn ensemble(&self) -> &EnsembleConfig<T> {
        &self.ensemble
    }

    pub fn materialize(&self) -> SampleSet<T> {
        self.ensemble.materialize()
    }

    fn check_factors(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
    ) -> Result<()> {
        let kt = self.t1 + self.t2;
        if t1f.rows() != kt {
            return Err(Error::dim("T1", format!("{kt} rows"), format!("{}", t1f.rows())));
        }
        if t2f.rows() != self.t2 {
            return Err(Error::dim("T2", format!("{} rows", self.t2), format!("{}", t2f.rows())));
        }
        if w.rows() != self.t2 || w.cols() != kt {
            return Err(Error::dim(
                "W",
                format!("{}x{kt}", self.t2),
                format!("{}x{}", w.rows(), w.cols()),
            ));
        }
        Ok(())
    }

    /// Assemble the per-sample blocks of the rate expression.
    pub fn blocks(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
        links: &[ComplexMatrix<T>],
    ) -> Result<CrcSampleBlocks<T>> {
        self.check_factors(t1f, t2f, w)?;
        let sigma = t1f.matmul(&t1f.adjoint()).hermitize();
        let sigma22 = t2f.matmul(&t2f.adjoint()).hermitize();
        Ok(self.blocks_inner(&sigma, &sigma22, t2f, w, &views(links)))
    }

    fn blocks_inner(
        &self,
        sigma: &ComplexMatrix<T>,
        sigma22: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
        v: &LinkViews<'_, T>,
    ) -> CrcSampleBlocks<T> {
        let hbar1 = v.hbar1();
        let hbar2 = v.hbar2();
        let i_r1 = ComplexMatrix::identity(self.r1);
        let i_r2 = ComplexMatrix::identity(self.r2);
        let i_t2 = ComplexMatrix::identity(self.t2);

        let rx21 = v.h21.matmul(sigma22).matmul(&v.h21.adjoint()).hermitize();
        let d1 = (&i_r1 + &rx21).hermitize();
        let n1 = (&d1 + &hbar1.matmul(sigma).matmul(&hbar1.adjoint())).hermitize();

        let rx22 = v.h22.matmul(sigma22).matmul(&v.h22.adjoint()).hermitize();
        let cross = hbar2.matmul(sigma).matmul(&hbar2.adjoint()).hermitize();
        let n2 = (&(&i_r2 + &rx22) + &cross).hermitize();

        // D2 = [[I + W Sigma W^*, T2^* H22^* + W Sigma Hbar2^*], [., N2]]
        let a2 = (&i_t2 + &w.matmul(sigma).matmul(&w.adjoint())).hermitize();
        let b2 = &t2f.adjoint().matmul(&v.h22.adjoint())
            + &w.matmul(sigma).matmul(&hbar2.adjoint());
        let d2 = ComplexMatrix::block2x2_hermitian(&a2, &b2, &n2);

        CrcSampleBlocks {
            n1: HermitianPsd::from_hermitian_unchecked(n1),
            d1: HermitianPsd::from_hermitian_unchecked(d1),
            n2: HermitianPsd::from_hermitian_unchecked(n2),
            d2: HermitianPsd::from_hermitian_unchecked(d2),
        }
    }

    /// Per-sample primary and cognitive rate values (raw, unfloored) on an
    /// explicit sample set.
    pub fn rate_values_on(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
        set: &SampleSet<T>,
    ) -> Result<(Vec<T>, Vec<T>)> {
        self.check_factors(t1f, t2f, w)?;
        let sigma = t1f.matmul(&t1f.adjoint()).hermitize();
        let sigma22 = t2f.matmul(&t2f.adjoint()).hermitize();
        let vals: Vec<Result<(T, T)>> = set
            .par_iter()
            .map(|links| {
                let b = self.blocks_inner(&sigma, &sigma22, t2f, w, &views(links));
                let rp = linalg::logdet_hpd_ridged(&b.n1)? - linalg::logdet_hpd_ridged(&b.d1)?;
                let rc = linalg::logdet_hpd_ridged(&b.n2)? - linalg::logdet_hpd_ridged(&b.d2)?;
                Ok((rp, rc))
            })
            .collect();
        let vals = collect_indexed(vals)?;
        Ok(vals.into_iter().unzip())
    }

    /// Monte Carlo sum rate for the given factors, on the problem ensemble.
    pub fn sum_rate(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
    ) -> Result<CrcRates<T>> {
        self.sum_rate_on(t1f, t2f, w, &self.materialize())
    }

    /// Monte Carlo sum rate on an explicit sample set.
    pub fn sum_rate_on(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
        set: &SampleSet<T>,
    ) -> Result<CrcRates<T>> {
        let (rp, rc) = self.rate_values_on(t1f, t2f, w, set)?;
        Ok(CrcRates::from_values(&rp, &rc))
    }

    /// Primary rate plus the perfect-cancellation cognitive rate
    /// `E log |I + H22 Sigma22 H22^*|` at the given covariances.
    pub fn perfect_cancellation_rates_on(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        set: &SampleSet<T>,
    ) -> Result<CrcRates<T>> {
        let sigma = t1f.matmul(&t1f.adjoint()).hermitize();
        let sigma22 = t2f.matmul(&t2f.adjoint()).hermitize();
        let i_r1 = ComplexMatrix::identity(self.r1);
        let i_r2 = ComplexMatrix::identity(self.r2);
        let vals: Vec<Result<(T, T)>> = set
            .par_iter()
            .map(|links| {
                let v = views(links);
                let hbar1 = v.hbar1();
                let rx21 = v.h21.matmul(&sigma22).matmul(&v.h21.adjoint()).hermitize();
                let d1 = HermitianPsd::from_hermitian_unchecked((&i_r1 + &rx21).hermitize());
                let n1 = HermitianPsd::from_hermitian_unchecked(
                    (&(d1.as_matrix().clone()) + &hbar1.matmul(&sigma).matmul(&hbar1.adjoint()))
                        .hermitize(),
                );
                let npc = HermitianPsd::from_hermitian_unchecked(
                    (&i_r2 + &v.h22.matmul(&sigma22).matmul(&v.h22.adjoint())).hermitize(),
                );
                let rp = linalg::logdet_hpd_ridged(&n1)? - linalg::logdet_hpd_ridged(&d1)?;
                let rc = linalg::logdet_hpd_ridged(&npc)?;
                Ok((rp, rc))
            })
            .collect();
        let vals = collect_indexed(vals)?;
        let (rp, rc): (Vec<T>, Vec<T>) = vals.into_iter().unzip();
        Ok(CrcRates::from_values(&rp, &rc))
    }

    /// Sample-averaged stationarity map for `T1` (Eq.-(3) bracket applied to
    /// `T1`): `g1 = E[Hb1^* N1^-1 Hb1 + Hb2^* N2^-1 Hb2 - G^* D2^-1 G] T1`
    /// with `G = [W; Hb2]`. The trailing factors are not conjugated; this is
    /// the layout certified by the finite-difference Lagrangian check.
    pub fn g1_on(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
        set: &SampleSet<T>,
    ) -> Result<ComplexMatrix<T>> {
        self.check_factors(t1f, t2f, w)?;
        let sigma = t1f.matmul(&t1f.adjoint()).hermitize();
        let sigma22 = t2f.matmul(&t2f.adjoint()).hermitize();
        let kt = self.t1 + self.t2;
        let brackets: Vec<Result<ComplexMatrix<T>>> = set
            .par_iter()
            .map(|links| {
                let v = views(links);
                let hbar1 = v.hbar1();
                let hbar2 = v.hbar2();
                let b = self.blocks_inner(&sigma, &sigma22, t2f, w, &v);
                let x1 = linalg::cholesky_ridged(&b.n1)?.solve(&hbar1);
                let x2 = linalg::cholesky_ridged(&b.n2)?.solve(&hbar2);
                let g = w.vcat(&hbar2);
                let x3 = linalg::cholesky_ridged(&b.d2)?.solve(&g);
                let t = &(&hbar1.adjoint().matmul(&x1) + &hbar2.adjoint().matmul(&x2))
                    - &g.adjoint().matmul(&x3);
                Ok(t.hermitize())
            })
            .collect();
        let brackets = collect_indexed(brackets)?;
        let mut acc = ComplexMatrix::zeros(kt, kt);
        for b in &brackets {
            acc = &acc + b;
        }
        Ok(acc.scale(T::one() / T::of(set.len() as f64)).matmul(t1f))
    }

    /// Sample-averaged stationarity map for `T2` (Eq.-(4) expression).
    pub fn g2_on(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
        set: &SampleSet<T>,
    ) -> Result<ComplexMatrix<T>> {
        self.check_factors(t1f, t2f, w)?;
        let sigma = t1f.matmul(&t1f.adjoint()).hermitize();
        let sigma22 = t2f.matmul(&t2f.adjoint()).hermitize();
        let i_t2 = ComplexMatrix::identity(self.t2);
        let zero_t2 = ComplexMatrix::zeros(self.t2, self.t2);
        let terms: Vec<Result<(ComplexMatrix<T>, ComplexMatrix<T>)>> = set
            .par_iter()
            .map(|links| {
                let v = views(links);
                let b = self.blocks_inner(&sigma, &sigma22, t2f, w, &v);
                let n1_h21 = linalg::cholesky_ridged(&b.n1)?.solve(v.h21);
                let d1_h21 = linalg::cholesky_ridged(&b.d1)?.solve(v.h21);
                let n2_h22 = linalg::cholesky_ridged(&b.n2)?.solve(v.h22);
                // bracket applied to T2 on the right
                let a = &(&v.h21.adjoint().matmul(&n1_h21) - &v.h21.adjoint().matmul(&d1_h21))
                    + &v.h22.adjoint().matmul(&n2_h22);
                // [0 H22^*] D2^{-1} [I_t2 ; H22 T2]
                let left = zero_t2.hcat(&v.h22.adjoint());
                let right = i_t2.vcat(&v.h22.matmul(t2f));
                let solved = linalg::cholesky_ridged(&b.d2)?.solve(&right);
                Ok((a.hermitize(), left.matmul(&solved)))
            })
            .collect();
        let terms = collect_indexed(terms)?;
        let inv_n = T::one() / T::of(set.len() as f64);
        let mut a_mean = ComplexMatrix::zeros(self.t2, self.t2);
        let mut last_mean = ComplexMatrix::zeros(self.t2, self.t2);
        for (a, l) in &terms {
            a_mean = &a_mean + a;
            last_mean = &last_mean + l;
        }
        a_mean = a_mean.scale(inv_n);
        last_mean = last_mean.scale(inv_n);
        Ok(&a_mean.matmul(t2f) - &last_mean)
    }

    /// Transmitted powers of the updated factors as a function of the
    /// multipliers: the fixed-point update is `T1 <- diag(lp I, lc I) g1`,
    /// `T2 <- lc g2`, so primary power is `lp^2 |g1_top|^2` and cognitive
    /// power is `lc^2 (|g1_bot|^2 + |g2|^2)`.
    fn multiplier_coefficients(
        &self,
        g1: &ComplexMatrix<T>,
        g2: &ComplexMatrix<T>,
    ) -> (T, T) {
        let a = g1.row_block_norm_sqr(0, self.t1);
        let b = g1.row_block_norm_sqr(self.t1, self.t1 + self.t2);
        let c = g2.frobenius_norm();
        (a, b + c * c)
    }

    /// Solve the Lagrange multipliers at the given state so the fixed-point
    /// update meets both power constraints with equality, by alternating
    /// scalar bisection on the monotone transmitted-power maps.
    pub fn solve_multipliers(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
        set: &SampleSet<T>,
        tol: T,
    ) -> Result<(T, T)> {
        let g1 = self.g1_on(t1f, t2f, w, set)?;
        let g2 = self.g2_on(t1f, t2f, w, set)?;
        self.solve_multipliers_from_maps(&g1, &g2, tol)
    }

    fn solve_multipliers_from_maps(
        &self,
        g1: &ComplexMatrix<T>,
        g2: &ComplexMatrix<T>,
        tol: T,
    ) -> Result<(T, T)> {
        let (coef_p, coef_c) = self.multiplier_coefficients(g1, g2);
        let primary_power = |lp: T, _lc: T| lp * lp * coef_p;
        let cognitive_power = |_lp: T, lc: T| lc * lc * coef_c;

        let mut lp = T::one();
        let mut lc = T::one();
        for _ in 0..8 {
            lp = bisect_power(|l| primary_power(l, lc), self.p_p, tol, "lambda_p")?;
            lc = bisect_power(|l| cognitive_power(lp, l), self.p_c, tol, "lambda_c")?;
            let ok_p = (primary_power(lp, lc) - self.p_p).abs() <= tol * self.p_p;
            let ok_c = (cognitive_power(lp, lc) - self.p_c).abs() <= tol * self.p_c;
            if ok_p && ok_c {
                break;
            }
        }
        Ok((lp, lc))
    }

    fn apply_multipliers(
        &self,
        g1: &ComplexMatrix<T>,
        g2: &ComplexMatrix<T>,
        lp: T,
        lc: T,
    ) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
        let kt = self.t1 + self.t2;
        let t1 = ComplexMatrix::from_fn(kt, g1.cols(), |i, j| {
            if i < self.t1 {
                g1.get(i, j).scale(lp)
            } else {
                g1.get(i, j).scale(lc)
            }
        });
        (t1, g2.scale(lc))
    }

    /// Convex combination of the new and previous iterates, rescaled so both
    /// power equalities hold exactly (the top block of `T1` to `Pp`, the
    /// relay block of `T1` jointly with `T2` to `Pc`).
    fn damped_state(
        &self,
        alpha: T,
        t1_new: &ComplexMatrix<T>,
        t2_new: &ComplexMatrix<T>,
        t1_old: &ComplexMatrix<T>,
        t2_old: &ComplexMatrix<T>,
    ) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
        let kt = self.t1 + self.t2;
        let beta = T::one() - alpha;
        let mut t1 = &t1_new.scale(alpha) + &t1_old.scale(beta);
        let mut t2 = &t2_new.scale(alpha) + &t2_old.scale(beta);
        scale_row_block(&mut t1, 0, self.t1, self.p_p);
        let relay = t1.row_block_norm_sqr(self.t1, kt);
        let own = t2.frobenius_norm().powi(2);
        let total = relay + own;
        if total > T::of(1e-200) {
            let s = (self.p_c / total).sqrt();
            for i in self.t1..kt {
                for j in 0..t1.cols() {
                    let v = t1.get(i, j).scale(s);
                    t1.set(i, j, v);
                }
            }
            t2 = t2.scale(s);
        } else {
            scale_row_block(&mut t1, self.t1, kt, self.p_c / T::of(2.0));
            scale_row_block(&mut t2, 0, self.t2, self.p_c / T::of(2.0));
        }
        (t1, t2)
    }

    /// Fixed-point update with the multiplier magnitudes from bisection and
    /// the factor signs chosen freely.
    ///
    /// The strict power equalities determine the multipliers only up to
    /// sign (transmitted power is quadratic in them, and an equality
    /// constraint's stationary point may carry a negative multiplier).
    /// `T1` flips as a whole (same `Sigma`, same rate: tie broken toward the
    /// previous iterate); the `T2` sign is picked by the sum rate under the
    /// current inflation factor, which collapses the antipodal two-cycle the
    /// positive-sign map falls into at such points.
    #[allow(clippy::too_many_arguments)]
    fn signed_update(
        &self,
        g1: &ComplexMatrix<T>,
        g2: &ComplexMatrix<T>,
        lp: T,
        lc: T,
        t1_prev: &ComplexMatrix<T>,
        t2_prev: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
        set: &SampleSet<T>,
    ) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
        let (t1_pos, t2_pos) = self.apply_multipliers(g1, g2, lp, lc);
        let t1_neg = t1_pos.scale(-T::one());
        let t2_neg = t2_pos.scale(-T::one());

        let t1 = if (&t1_pos - t1_prev).frobenius_norm() <= (&t1_neg - t1_prev).frobenius_norm() {
            t1_pos
        } else {
            t1_neg
        };

        let r_pos = self.sum_rate_on(&t1, &t2_pos, w, set)?.r_sum;
        let r_neg = self.sum_rate_on(&t1, &t2_neg, w, set)?.r_sum;
        let tie = (r_pos - r_neg).abs() <= T::of(1e-12) * T::one().max(r_pos.abs());
        let t2 = if tie {
            if (&t2_pos - t2_prev).frobenius_norm() <= (&t2_neg - t2_prev).frobenius_norm() {
                t2_pos
            } else {
                t2_neg
            }
        } else if r_pos >= r_neg {
            t2_pos
        } else {
            t2_neg
        };
        Ok((t1, t2))
    }

    /// Achieved block powers `(tr Sigma1, tr Sigma21 + tr Sigma22)`.
    pub fn achieved_powers(&self, t1f: &ComplexMatrix<T>, t2f: &ComplexMatrix<T>) -> (T, T) {
        let pp = t1f.row_block_norm_sqr(0, self.t1);
        let pc = t1f.row_block_norm_sqr(self.t1, self.t1 + self.t2)
            + t2f.frobenius_norm().powi(2);
        (pp, pc)
    }

    /// The G-FDPC the cognitive receiver sees for fixed factors:
    /// `Sx = I_t2`, signal channel `H22 T2`, interference `[X1; X21]` with
    /// covariance `Sigma` through `Hbar2`, unit noise.
    fn w_problem(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        set: &SampleSet<T>,
    ) -> (GfdpcCore<T>, SampleSet<T>) {
        let sigma = t1f.matmul(&t1f.adjoint()).hermitize();
        let core = GfdpcCore {
            sigma_x: HermitianPsd::identity(self.t2),
            sigma_s: HermitianPsd::from_hermitian_unchecked(sigma),
            sigma_z: HermitianPsd::identity(self.r2),
        };
        let mapped = set.map_links(|links| {
            let v = views(links);
            vec![v.h22.matmul(t2f), v.hbar2()]
        });
        (core, mapped)
    }

    fn refresh_w(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        warm: Option<&ComplexMatrix<T>>,
        opts: &InflationOpts<T>,
        set: &SampleSet<T>,
    ) -> Result<ComplexMatrix<T>> {
        let (core, mapped) = self.w_problem(t1f, t2f, set);
        let mut opts = opts.clone();
        if let Some(w) = warm {
            opts.extra_inits.push(w.clone());
        }
        let res: WSearch<T> = core.optimize_inflation(&opts, &mapped)?;
        Ok(res.w.into_matrix())
    }

    /// Initialization menu: isotropic, primary-favoring, all-relay, and
    /// seeded random PSD draws beyond that.
    fn init_menu(&self, index: usize) -> (ComplexMatrix<T>, ComplexMatrix<T>) {
        let kt = self.t1 + self.t2;
        let half_pc = self.p_c / T::of(2.0);
        let iso_t2 = scaled_block_identity(self.t2, self.t2, half_pc);
        match index {
            // (a) isotropic, power split evenly between relaying and own signal
            0 => {
                let mut t1 = ComplexMatrix::zeros(kt, kt);
                set_scaled_identity_rows(&mut t1, 0, self.t1, self.p_p);
                set_scaled_identity_rows(&mut t1, self.t1, kt, half_pc);
                (t1, iso_t2)
            }
            // (b) primary-favoring: no relaying, all cognitive power on X22
            1 => {
                let mut t1 = ComplexMatrix::zeros(kt, kt);
                set_scaled_identity_rows(&mut t1, 0, self.t1, self.p_p);
                (t1, scaled_block_identity(self.t2, self.t2, self.p_c))
            }
            // (c) all-relay: X21 correlated with X1, small X22
            2 => {
                let mut t1 = ComplexMatrix::zeros(kt, kt);
                set_scaled_identity_rows(&mut t1, 0, self.t1, self.p_p);
                for i in 0..self.t2 {
                    for j in 0..self.t1 {
                        t1.set(self.t1 + i, j, Complex::new(T::one(), T::zero()));
                    }
                }
                scale_row_block(&mut t1, self.t1, kt, self.p_c * T::of(0.9));
                (t1, scaled_block_identity(self.t2, self.t2, self.p_c * T::of(0.1)))
            }
            // (d), (e), ... random draws
            _ => {
                let mut state = self
                    .ensemble
                    .seed
                    .wrapping_mul(0x9e3779b97f4a7c15)
                    .wrapping_add(index as u64);
                let mut next = move || {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
                };
                let mut t1 = ComplexMatrix::zeros(kt, kt);
                for i in 0..kt {
                    for j in 0..kt {
                        t1.set(i, j, Complex::new(T::of(next()), T::of(next())));
                    }
                }
                scale_row_block(&mut t1, 0, self.t1, self.p_p);
                scale_row_block(&mut t1, self.t1, kt, half_pc);
                let mut t2 = ComplexMatrix::zeros(self.t2, self.t2);
                for i in 0..self.t2 {
                    for j in 0..self.t2 {
                        t2.set(i, j, Complex::new(T::of(next()), T::of(next())));
                    }
                }
                scale_row_block(&mut t2, 0, self.t2, half_pc);
                (t1, t2)
            }
        }
    }

    /// Joint optimization: fixed-point covariance updates with multipliers
    /// solved for strict power equality and the inflation factor refreshed
    /// per iteration; the best of `restarts` initializations by sum rate on
    /// common samples is returned.
    pub fn joint_optimize_alg1(&self, cfg: &Alg1Config<T>) -> Result<Solution<T>> {
        self.joint_optimize_alg1_on(cfg, &self.materialize())
    }

    pub fn joint_optimize_alg1_on(
        &self,
        cfg: &Alg1Config<T>,
        set: &SampleSet<T>,
    ) -> Result<Solution<T>> {
        let mut best: Option<Solution<T>> = None;
        for restart in 0..cfg.restarts.max(1) {
            let sol = self.alg1_single(cfg, set, restart)?;
            let better = match &best {
                Some(b) => sol.rates.r_sum > b.rates.r_sum,
                None => true,
            };
            if better {
                best = Some(sol);
            }
        }
        let mut sol = best.expect("at least one restart");
        sol.restarts_used = cfg.restarts.max(1);
        Ok(sol)
    }

    fn alg1_single(
        &self,
        cfg: &Alg1Config<T>,
        set: &SampleSet<T>,
        restart: usize,
    ) -> Result<Solution<T>> {
        let (mut t1, mut t2) = self.init_menu(restart);
        let mut w = self.refresh_w(&t1, &t2, None, &cfg.w_opts, set)?;
        let mut rates = self.sum_rate_on(&t1, &t2, &w, set)?;
        let mut lambda = (T::one(), T::one());
        let mut stalled = false;

        for _outer in 0..cfg.max_outer {
            let g1 = self.g1_on(&t1, &t2, &w, set)?;
            let g2 = self.g2_on(&t1, &t2, &w, set)?;
            let (lp, lc) = match self.solve_multipliers_from_maps(&g1, &g2, cfg.multiplier_tol) {
                Ok(l) => l,
                // Degenerate state (a power became unreachable): abandon
                // this trajectory and let the restart menu cover it.
                Err(Error::NoBracket { .. }) => break,
                Err(e) => return Err(e),
            };

            let (next_t1, next_t2) = match cfg.lambda_mode {
                LambdaMode::StrictEquality => self.signed_update(&g1, &g2, lp, lc, &t1, &t2, &w, set)?,
                LambdaMode::GridSearch { divisions } => {
                    let d = divisions.max(1);
                    let mut pick = self.signed_update(&g1, &g2, lp, lc, &t1, &t2, &w, set)?;
                    let mut pick_rate = self.sum_rate_on(&pick.0, &pick.1, &w, set)?.r_sum;
                    for ip in 1..=d {
                        for ic in 1..=d {
                            let fp = T::of(ip as f64 / d as f64);
                            let fc = T::of(ic as f64 / d as f64);
                            let cand =
                                self.signed_update(&g1, &g2, lp * fp, lc * fc, &t1, &t2, &w, set)?;
                            let r = self.sum_rate_on(&cand.0, &cand.1, &w, set)?.r_sum;
                            if r > pick_rate {
                                pick_rate = r;
                                pick = cand;
                            }
                        }
                    }
                    pick
                }
            };
            // The raw fixed-point step can overshoot and settle into a
            // two-cycle; relax toward the previous iterate when it would
            // lower the rate. Damped states are rescaled back onto the
            // power spheres, so at alpha = 1/2 the damped map has exactly
            // the raw map's fixed points.
            let mut chosen: Option<(ComplexMatrix<T>, ComplexMatrix<T>)> = None;
            let mut chosen_rate = T::neg_infinity();
            for &alpha in &[T::one(), T::of(0.5), T::of(0.25)] {
                let cand = self.damped_state(alpha, &next_t1, &next_t2, &t1, &t2);
                let r = self.sum_rate_on(&cand.0, &cand.1, &w, set)?.r_sum;
                if r > chosen_rate {
                    chosen_rate = r;
                    chosen = Some(cand);
                }
                if r >= rates.r_sum - cfg.tol {
                    chosen = Some(self.damped_state(alpha, &next_t1, &next_t2, &t1, &t2));
                    break;
                }
            }
            let (nt1, nt2) = chosen.expect("at least one damping candidate");
            let step_t1 = (&nt1 - &t1).frobenius_norm();
            let step_t2 = (&nt2 - &t2).frobenius_norm();
            t1 = nt1;
            t2 = nt2;
            lambda = (lp, lc);
            w = self.refresh_w(&t1, &t2, Some(&w), &cfg.w_opts, set)?;
            let new_rates = self.sum_rate_on(&t1, &t2, &w, set)?;
            let gain = new_rates.r_sum - rates.r_sum;
            rates = new_rates;
            if std::env::var_os("COGDPC_TRACE").is_some() {
                eprintln!(
                    "  outer {_outer}: r_sum={:?} gain={:?} |dT1|={:?} |dT2|={:?} lam=({:?},{:?})",
                    rates.r_sum, gain, step_t1, step_t2, lp, lc
                );
            }
            if gain.abs() < cfg.tol * T::one().max(rates.r_sum.abs())
                && (step_t1 + step_t2)
                    < cfg.tol.sqrt() * (t1.frobenius_norm() + t2.frobenius_norm())
            {
                stalled = true;
                break;
            }
        }

        let (bt1, bt2, bw, brates, blambda) = (t1, t2, w, rates, lambda);
        // Fixed-point residuals at the returned point.
        let g1 = self.g1_on(&bt1, &bt2, &bw, set)?;
        let g2 = self.g2_on(&bt1, &bt2, &bw, set)?;
        let residuals = match self.solve_multipliers_from_maps(&g1, &g2, cfg.multiplier_tol) {
            Ok((lp, lc)) => {
                // Stationarity holds up to the sign of each factor (the
                // equality-constraint multiplier sign); measure modulo it.
                // Norms are floored at the power scale so a factor that has
                // converged to carrying no power (e.g. an all-relay T2 -> 0)
                // is not judged by its own vanishing norm.
                let (u1, u2) = self.apply_multipliers(&g1, &g2, lp, lc);
                let r1 = (&bt1 - &u1)
                    .frobenius_norm()
                    .min((&bt1 + &u1).frobenius_norm())
                    / bt1.frobenius_norm().max(self.p_p.sqrt());
                let r2 = (&bt2 - &u2)
                    .frobenius_norm()
                    .min((&bt2 + &u2).frobenius_norm())
                    / bt2.frobenius_norm().max(self.p_c.sqrt());
                Some((r1, r2))
            }
            Err(_) => None,
        };
        let (pp, pc) = self.achieved_powers(&bt1, &bt2);
        let powers_ok = (pp - self.p_p).abs() <= T::of(1e-6) * self.p_p
            && (pc - self.p_c).abs() <= T::of(1e-6) * self.p_c;
        let res_ok = residuals
            .map(|(a, b)| a <= cfg.residual_tol && b <= cfg.residual_tol)
            .unwrap_or(false);
        let strict = matches!(cfg.lambda_mode, LambdaMode::StrictEquality);

        Ok(Solution {
            t1: bt1,
            t2: bt2,
            w: bw,
            lambda_p: Some(blambda.0),
            lambda_c: Some(blambda.1),
            rates: brates,
            converged: stalled && res_ok && (powers_ok || !strict),
            restarts_used: 1,
            residuals,
            method: OptMethod::Joint,
        })
    }

    /// Greedy optimization: cognitive-first power split at `Pc/2`, then
    /// alternating projected-gradient maximizations of the primary and
    /// cognitive rate terms.
    pub fn greedy_optimize_alg2(&self, cfg: &Alg2Config<T>) -> Result<Solution<T>> {
        self.greedy_optimize_alg2_on(cfg, &self.materialize())
    }

    pub fn greedy_optimize_alg2_on(
        &self,
        cfg: &Alg2Config<T>,
        set: &SampleSet<T>,
    ) -> Result<Solution<T>> {
        let kt = self.t1 + self.t2;
        let half_pc = self.p_c / T::of(2.0);

        // Step 1: T1 = 0, maximize R_c over T2 with tr(Sigma22) = Pc/2.
        // With T1 = 0 the cognitive term is W-independent.
        let t1_zero = ComplexMatrix::zeros(kt, kt);
        let mut t2 = scaled_block_identity(self.t2, self.t2, half_pc);
        t2 = self.pga_t2_step1(t2, cfg, set)?;

        // Step 2 init: isotropic T1 meeting both trace equalities.
        let mut t1 = ComplexMatrix::zeros(kt, kt);
        set_scaled_identity_rows(&mut t1, 0, self.t1, self.p_p);
        set_scaled_identity_rows(&mut t1, self.t1, kt, half_pc);
        let mut w = self.refresh_w(&t1_zero, &t2, None, &cfg.w_opts, set)?;

        let mut prev_sum = T::neg_infinity();
        let mut converged = false;
        for _round in 0..cfg.max_rounds {
            // Step 2: maximize R_p over T1, tr(Sigma1) = Pp, tr(Sigma21) = Pc/2.
            t1 = self.pga_t1_primary(t1, &t2, cfg, set)?;
            // Step 3: maximize R_c over (T2, W), tr(Sigma22) = Pc/2.
            for _ in 0..3 {
                w = self.refresh_w(&t1, &t2, Some(&w), &cfg.w_opts, set)?;
                t2 = self.pga_t2_cognitive(t2, &t1, &w, cfg, set)?;
            }
            w = self.refresh_w(&t1, &t2, Some(&w), &cfg.w_opts, set)?;
            let rates = self.sum_rate_on(&t1, &t2, &w, set)?;
            if rates.r_sum - prev_sum < cfg.tol * T::one().max(rates.r_sum.abs()) {
                converged = true;
                break;
            }
            prev_sum = rates.r_sum;
        }

        let rates = self.sum_rate_on(&t1, &t2, &w, set)?;
        Ok(Solution {
            t1,
            t2,
            w,
            lambda_p: None,
            lambda_c: None,
            rates,
            converged,
            restarts_used: 1,
            residuals: None,
            method: OptMethod::Greedy,
        })
    }

    /// Comparison curve: optimize covariances assuming the interference is
    /// perfectly canceled at the cognitive receiver (`R_c = E log |I + H22
    /// Sigma22 H22^*|`), with the same strict power equalities.
    pub fn optimize_perfect_cancellation(&self, cfg: &Alg1Config<T>) -> Result<Solution<T>> {
        self.optimize_perfect_cancellation_on(cfg, &self.materialize())
    }

    pub fn optimize_perfect_cancellation_on(
        &self,
        cfg: &Alg1Config<T>,
        set: &SampleSet<T>,
    ) -> Result<Solution<T>> {
        let kt = self.t1 + self.t2;
        let mut best: Option<(ComplexMatrix<T>, ComplexMatrix<T>, CrcRates<T>)> = None;
        for restart in 0..cfg.restarts.max(1) {
            let (mut t1, mut t2) = self.init_menu(restart);
            let mut rates = self.perfect_cancellation_rates_on(&t1, &t2, set)?;
            let mut local_best = (t1.clone(), t2.clone(), rates);
            for _outer in 0..cfg.max_outer {
                let (g1, g2) = self.pc_maps(&t1, &t2, set)?;
                let (lp, lc) = match self.solve_multipliers_from_maps(&g1, &g2, cfg.multiplier_tol)
                {
                    Ok(l) => l,
                    Err(Error::NoBracket { .. }) => break,
                    Err(e) => return Err(e),
                };
                let (nt1, nt2) = self.apply_multipliers(&g1, &g2, lp, lc);
                t1 = nt1;
                t2 = nt2;
                let new_rates = self.perfect_cancellation_rates_on(&t1, &t2, set)?;
                if new_rates.r_sum > local_best.2.r_sum {
                    local_best = (t1.clone(), t2.clone(), new_rates);
                }
                let gain = new_rates.r_sum - rates.r_sum;
                rates = new_rates;
                if gain < cfg.tol * T::one().max(rates.r_sum.abs()) {
                    break;
                }
            }
            let better = match &best {
                Some(b) => local_best.2.r_sum > b.2.r_sum,
                None => true,
            };
            if better {
                best = Some(local_best);
            }
        }
        let (t1, t2, rates) = best.expect("at least one restart");
        Ok(Solution {
            t1,
            t2,
            w: ComplexMatrix::zeros(self.t2, kt),
            lambda_p: None,
            lambda_c: None,
            rates,
            converged: true,
            restarts_used: cfg.restarts.max(1),
            residuals: None,
            method: OptMethod::PerfectCancellation,
        })
    }

    /// Stationarity maps of the perfect-cancellation objective.
    fn pc_maps(
        &self,
        t1f: &ComplexMatrix<T>,
        t2f: &ComplexMatrix<T>,
        set: &SampleSet<T>,
    ) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
        let sigma = t1f.matmul(&t1f.adjoint()).hermitize();
        let sigma22 = t2f.matmul(&t2f.adjoint()).hermitize();
        let kt = self.t1 + self.t2;
        let i_r1 = ComplexMatrix::identity(self.r1);
        let i_r2 = ComplexMatrix::identity(self.r2);
        let terms: Vec<Result<(ComplexMatrix<T>, ComplexMatrix<T>)>> = set
            .par_iter()
            .map(|links| {
                let v = views(links);
                let hbar1 = v.hbar1();
                let rx21 = v.h21.matmul(&sigma22).matmul(&v.h21.adjoint()).hermitize();
                let d1 = HermitianPsd::from_hermitian_unchecked((&i_r1 + &rx21).hermitize());
                let n1 = HermitianPsd::from_hermitian_unchecked(
                    (&(d1.as_matrix().clone())
                        + &hbar1.matmul(&sigma).matmul(&hbar1.adjoint()))
                    .hermitize(),
                );
                let npc = HermitianPsd::from_hermitian_unchecked(
                    (&i_r2 + &v.h22.matmul(&sigma22).matmul(&v.h22.adjoint())).hermitize(),
                );
                let b1 = hbar1
                    .adjoint()
                    .matmul(&linalg::cholesky_ridged(&n1)?.solve(&hbar1))
                    .hermitize();
                let b2 = &(&v
                    .h21
                    .adjoint()
                    .matmul(&linalg::cholesky_ridged(&n1)?.solve(v.h21))
                    - &v
                        .h21
                        .adjoint()
                        .matmul(&linalg::cholesky_ridged(&d1)?.solve(v.h21)))
                    + &v
                        .h22
                        .adjoint()
                        .matmul(&linalg::cholesky_ridged(&npc)?.solve(v.h22));
                Ok((b1, b2.hermitize()))
            })
            .collect();
        let terms = collect_indexed(terms)?;
        let inv_n = T::one() / T::of(set.len() as f64);
        let mut b1_mean = ComplexMatrix::zeros(kt, kt);
        let mut b2_mean = ComplexMatrix::zeros(self.t2, self.t2);
        for (a, b) in &terms {
            b1_mean = &b1_mean + a;
            b2_mean = &b2_mean + b;
        }
        Ok((
            b1_mean.scale(inv_n).matmul(t1f),
            b2_mean.scale(inv_n).matmul(t2f),
        ))
    }

    // --- projected-gradient inner maximizations for the greedy optimizer ---

    fn pga_t2_step1(
        &self,
        t2: ComplexMatrix<T>,
        cfg: &Alg2Config<T>,
        set: &SampleSet<T>,
    ) -> Result<ComplexMatrix<T>> {
        let half_pc = self.p_c / T::of(2.0);
        let i_r2 = ComplexMatrix::identity(self.r2);
        let value = |t: &ComplexMatrix<T>| -> Result<T> {
            let s22 = t.matmul(&t.adjoint()).hermitize();
            let vals: Vec<Result<T>> = set
                .par_iter()
                .map(|links| {
                    let v = views(links);
                    let npc = HermitianPsd::from_hermitian_unchecked(
                        (&i_r2 + &v.h22.matmul(&s22).matmul(&v.h22.adjoint())).hermitize(),
                    );
                    linalg::logdet_hpd_ridged(&npc)
                })
                .collect();
            Ok(mean_stderr(&collect_indexed(vals)?).0)
        };
        let grad = |t: &ComplexMatrix<T>| -> Result<ComplexMatrix<T>> {
            let s22 = t.matmul(&t.adjoint()).hermitize();
            let gs: Vec<Result<ComplexMatrix<T>>> = set
                .par_iter()
                .map(|links| {
                    let v = views(links);
                    let npc = HermitianPsd::from_hermitian_unchecked(
                        (&i_r2 + &v.h22.matmul(&s22).matmul(&v.h22.adjoint())).hermitize(),
                    );
                    let x = linalg::cholesky_ridged(&npc)?.solve(v.h22);
                    Ok(v.h22.adjoint().matmul(&x).matmul(t))
                })
                .collect();
            mean_matrix(collect_indexed(gs)?)
        };
        pga_ascend(t2, value, grad, |t| scale_row_block(t, 0, self.t2, half_pc), cfg.pga_iters)
    }

    fn pga_t1_primary(
        &self,
        t1: ComplexMatrix<T>,
        t2: &ComplexMatrix<T>,
        cfg: &Alg2Config<T>,
        set: &SampleSet<T>,
    ) -> Result<ComplexMatrix<T>> {
        let kt = self.t1 + self.t2;
        let half_pc = self.p_c / T::of(2.0);
        let sigma22 = t2.matmul(&t2.adjoint()).hermitize();
        let i_r1 = ComplexMatrix::identity(self.r1);
        let value = |t: &ComplexMatrix<T>| -> Result<T> {
            let sigma = t.matmul(&t.adjoint()).hermitize();
            let vals: Vec<Result<T>> = set
                .par_iter()
                .map(|links| {
                    let v = views(links);
                    let hbar1 = v.hbar1();
                    let rx21 = v.h21.matmul(&sigma22).matmul(&v.h21.adjoint()).hermitize();
                    let n1 = HermitianPsd::from_hermitian_unchecked(
                        (&(&i_r1 + &rx21) + &hbar1.matmul(&sigma).matmul(&hbar1.adjoint()))
                            .hermitize(),
                    );
                    linalg::logdet_hpd_ridged(&n1)
                })
                .collect();
            Ok(mean_stderr(&collect_indexed(vals)?).0)
        };
        let grad = |t: &ComplexMatrix<T>| -> Result<ComplexMatrix<T>> {
            let sigma = t.matmul(&t.adjoint()).hermitize();
            let gs: Vec<Result<ComplexMatrix<T>>> = set
                .par_iter()
                .map(|links| {
                    let v = views(links);
                    let hbar1 = v.hbar1();
                    let rx21 = v.h21.matmul(&sigma22).matmul(&v.h21.adjoint()).hermitize();
                    let n1 = HermitianPsd::from_hermitian_unchecked(
                        (&(&i_r1 + &rx21) + &hbar1.matmul(&sigma).matmul(&hbar1.adjoint()))
                            .hermitize(),
                    );
                    let x = linalg::cholesky_ridged(&n1)?.solve(&hbar1);
                    Ok(hbar1.adjoint().matmul(&x).matmul(t))
                })
                .collect();
            mean_matrix(collect_indexed(gs)?)
        };
        let t1_blocks = self.t1;
        pga_ascend(
            t1,
            value,
            grad,
            |t| {
                scale_row_block(t, 0, t1_blocks, self.p_p);
                scale_row_block(t, t1_blocks, kt, half_pc);
            },
            cfg.pga_iters,
        )
    }

    fn pga_t2_cognitive(
        &self,
        t2: ComplexMatrix<T>,
        t1: &ComplexMatrix<T>,
        w: &ComplexMatrix<T>,
        cfg: &Alg2Config<T>,
        set: &SampleSet<T>,
    ) -> Result<ComplexMatrix<T>> {
        let half_pc = self.p_c / T::of(2.0);
        let sigma = t1.matmul(&t1.adjoint()).hermitize();
        let i_t2 = ComplexMatrix::identity(self.t2);
        let zero_t2 = ComplexMatrix::zeros(self.t2, self.t2);
        let value = |t: &ComplexMatrix<T>| -> Result<T> {
            let (_, rc) = self.rate_values_on(t1, t, w, set)?;
            Ok(mean_stderr(&rc).0)
        };
        let grad = |t: &ComplexMatrix<T>| -> Result<ComplexMatrix<T>> {
            let sigma22 = t.matmul(&t.adjoint()).hermitize();
            let gs: Vec<Result<ComplexMatrix<T>>> = set
                .par_iter()
                .map(|links| {
                    let v = views(links);
                    let b = self.blocks_inner(&sigma, &sigma22, t, w, &v);
                    let n2_h22 = linalg::cholesky_ridged(&b.n2)?.solve(v.h22);
                    let first = v.h22.adjoint().matmul(&n2_h22).matmul(t);
                    let left = zero_t2.hcat(&v.h22.adjoint());
                    let right = i_t2.vcat(&v.h22.matmul(t));
                    let solved = linalg::cholesky_ridged(&b.d2)?.solve(&right);
                    Ok(&first - &left.matmul(&solved))
                })
                .collect();
            mean_matrix(collect_indexed(gs)?)
        };
        pga_ascend(t2, value, grad, |t| scale_row_block(t, 0, self.t2, half_pc), cfg.pga_iters)
    }
}

fn mean_matrix<T: Scalar>(mats: Vec<ComplexMatrix<T>>) -> Result<ComplexMatrix<T>> {
    let n = mats.len();
    let mut acc = ComplexMatrix::zeros(mats[0].rows(), mats[0].cols());
    for m in &mats {
        acc = &acc + m;
    }
    Ok(acc.scale(T::one() / T::of(n as f64)))
}

/// Scale rows `[r0, r1)` so their squared Frobenius norm equals `target`;
/// a (numerically) zero block is replaced by a scaled identity pattern so
/// the constraint stays satisfiable.
fn scale_row_block<T: Scalar>(t: &mut ComplexMatrix<T>, r0: usize, r1: usize, target: T) {
    let norm_sq = t.row_block_norm_sqr(r0, r1);
    if norm_sq > T::of(1e-200) {
        let s = (target / norm_sq).sqrt();
        for i in r0..r1 {
            for j in 0..t.cols() {
                let v = t.get(i, j).scale(s);
                t.set(i, j, v);
            }
        }
    } else {
        let rows = r1 - r0;
        let s = (target / T::of(rows as f64)).sqrt();
        for i in r0..r1 {
            for j in 0..t.cols() {
                let v = if j == (r0 + i) % t.cols() { s } else { T::zero() };
                t.set(i, j, Complex::new(v, T::zero()));
            }
        }
    }
}

fn set_scaled_identity_rows<T: Scalar>(
    t: &mut ComplexMatrix<T>,
    r0: usize,
    r1: usize,
    target: T,
) {
    let rows = r1 - r0;
    let s = (target / T::of(rows as f64)).sqrt();
    for (k, i) in (r0..r1).enumerate() {
        t.set(i, r0 + k, Complex::new(s, T::zero()));
    }
}

fn scaled_block_identity<T: Scalar>(rows: usize, cols: usize, target: T) -> ComplexMatrix<T> {
    let mut m = ComplexMatrix::zeros(rows, cols);
    let s = (target / T::of(rows.min(cols) as f64)).sqrt();
    for i in 0..rows.min(cols) {
        m.set(i, i, Complex::new(s, T::zero()));
    }
    m
}

/// Monotone projected ascent with step halving; stops once no improving step
/// is found at float resolution or the iteration budget runs out.
fn pga_ascend<T, V, G, P>(
    init: ComplexMatrix<T>,
    value: V,
    grad: G,
    project: P,
    max_iter: usize,
) -> Result<ComplexMatrix<T>>
where
    T: Scalar,
    V: Fn(&ComplexMatrix<T>) -> Result<T>,
    G: Fn(&ComplexMatrix<T>) -> Result<ComplexMatrix<T>>,
    P: Fn(&mut ComplexMatrix<T>),
{
    let mut t = init;
    project(&mut t);
    let mut fv = value(&t)?;
    let mut step = T::one();
    for _ in 0..max_iter {
        let g = grad(&t)?;
        let gnorm = g.frobenius_norm();
        if gnorm < T::of(1e-14) {
            break;
        }
        // Normalize so the step length is relative to the iterate scale.
        let scale = t.frobenius_norm().max(T::one()) / gnorm;
        let mut accepted = false;
        let mut s = step;
        for _ in 0..40 {
            let mut cand = &t + &g.scale(s * scale);
            project(&mut cand);
            let fc = value(&cand)?;
            if fc > fv {
                t = cand;
                fv = fc;
                accepted = true;
                break;
            }
            s = s * T::of(0.5);
        }
        if !accepted {
            break;
        }
        // Warm-start the next line search a little above the accepted step.
        step = (s * T::of(2.0)).min(T::one());
    }
    Ok(t)
}

/// High-SNR sum-rate scaling search result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScalingResult {
    pub gamma_sum: usize,
    pub gamma_p: usize,
    pub gamma_c: usize,
    /// All maximizing `(rank Sigma', rank Sigma22)` pairs, sorted.
    pub argmax: Vec<(usize, usize)>,
}

/// Exhaustive search of the high-SNR sum-rate scaling factor over the rank
/// pair `(rank Sigma', rank Sigma22)` with
/// `gamma_p = min(r1, rank S') - min(r1, rank S22)` and
/// `gamma_c = min(r2, rank S') - min(r2, rank S' - rank S22)`.
pub fn crc_scaling(t1: usize, t2: usize, r1: usize, r2: usize) -> Result<ScalingResult> {
    if t1 == 0 || t2 == 0 || r1 == 0 || r2 == 0 {
        return Err(Error::InvalidParameter(
            "crc_scaling requires positive antenna counts".into(),
        ));
    }
    let mut best = 0usize;
    let mut argmax: Vec<(usize, usize)> = Vec::new();
    for rank_prime in 1..=(t1 + t2) {
        for rank_22 in 0..=t2.min(rank_prime) {
            let gamma_p = r1.min(rank_prime) - r1.min(rank_22);
            let gamma_c = r2.min(rank_prime) - r2.min(rank_prime - rank_22);
            let g = gamma_p + gamma_c;
            if g > best {
                best = g;
                argmax.clear();
            }
            if g == best {
                argmax.push((rank_prime, rank_22));
            }
        }
    }
    argmax.sort();
    // Report the decomposition at the smallest maximizing rank Sigma', and
    // among those at the largest rank Sigma22 (the relaying-free split the
    // high-SNR argument constructs).
    let min_prime = argmax.iter().map(|p| p.0).min().unwrap();
    let &(rp, r22) = argmax
        .iter()
        .filter(|p| p.0 == min_prime)
        .max_by_key(|p| p.1)
        .unwrap();
    let gamma_p = r1.min(rp) - r1.min(r22);
    let gamma_c = r2.min(rp) - r2.min(rp - r22);
    Ok(ScalingResult { gamma_sum: best, gamma_p, gamma_c, argmax })
}

/// Scalar bisection for `power(lambda) = target` on `[1e-8, 1e8]`, relying
/// on monotonicity of the transmitted power in the multiplier.
fn bisect_power<T: Scalar>(
    power: impl Fn(T) -> T,
    target: T,
    tol: T,
    name: &'static str,
) -> Result<T> {
    let mut lo = T::of(1e-8);
    let mut hi = T::of(1e8);
    let f_lo = power(lo) - target;
    let f_hi = power(hi) - target;
    if f_lo > T::zero() || f_hi < T::zero() || !f_lo.is_finite() || !f_hi.is_finite() {
        return Err(Error::NoBracket { multiplier: name, lo: 1e-8, hi: 1e8 });
    }
    for _ in 0..200 {
        let mid = (lo + hi) / T::of(2.0);
        let fm = power(mid) - target;
        if fm.abs() <= tol * target {
            return Ok(mid);
        }
        if fm < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= T::epsilon() * hi {
            break;
        }
    }
    Ok((lo + hi) / T::of(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_single_antenna() {
        let s = crc_scaling(1, 1, 1, 1).unwrap();
        assert_eq!(s.gamma_sum, 1);
        assert_eq!(s.gamma_p + s.gamma_c, 1);
        // 4 feasible pairs at these dims
        let mut count = 0;
        for rp in 1..=2usize {
            for _r22 in 0..=1usize.min(rp) {
                count += 1;
            }
        }
        assert_eq!(count, 4);
    }

    #[test]
    fn scaling_two_by_two_reports_gamma_p_zero() {
        let s = crc_scaling(2, 2, 2, 2).unwrap();
        assert_eq!(s.gamma_sum, 2);
        assert_eq!(s.gamma_p, 0);
        assert_eq!(s.gamma_c, 2);
        assert!(s.argmax.contains(&(2, 2)));
    }

    #[test]
    fn scaling_rejects_degenerate_dims() {
        assert!(crc_scaling(1, 1, 0, 0).is_err());
        assert!(crc_scaling(0, 1, 1, 1).is_err());
    }

    #[test]
    fn bisect_power_finds_root_and_reports_no_bracket() {
        let lam = bisect_power(|l: f64| l * l * 4.0, 9.0, 1e-12, "test").unwrap();
        assert!((lam - 1.5).abs() < 1e-9);
        assert!(matches!(
            bisect_power(|_: f64| 0.0, 1.0, 1e-12, "test"),
            Err(Error::NoBracket { .. })
        ));
    }
}
