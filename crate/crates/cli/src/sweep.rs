//! Sweep execution: one row per grid point, every compared quantity
//! evaluated on common random numbers (the channel ensemble is seeded per
//! config, not per grid point).

use crate::config::{
    CrcAlgorithm, CrcSweepConfig, CsitConfig, ExperimentConfig, GfdpcScalingConfig,
    GfdpcSweepConfig, ScalingConfig,
};
use cogdpc_core::crc::{crc_scaling, Alg1Config, Alg2Config, CrcProblem, CrcRates, Solution};
use cogdpc_core::ensemble::{
    mean_stderr, rated_with_csit, CsitModel, EnsembleConfig, LinkSpec, SampleSet,
};
use cogdpc_core::gfdpc::{gfdpc_scaling, GfdpcProblem, InflationFactor, InflationOpts, WAlgorithm};
use cogdpc_core::matrix::{ComplexMatrix, HermitianPsd};
use cogdpc_core::{db_to_linear, nats_to_bits, Error};
use std::time::Instant;

/// One G-FDPC sweep row; rates in bits.
#[derive(Clone, Debug)]
pub struct GfdpcRow {
    pub snr_db: f64,
    pub rate_lb: f64,
    pub rate_lb_stderr: f64,
    pub rate_opt: f64,
    pub rate_opt_stderr: f64,
    pub rate_nos: f64,
    pub rate_nos_stderr: f64,
    pub wall_time_s: f64,
}

/// One algorithm-by-CSIT cell of a CRC sweep row; rates in bits.
#[derive(Clone, Debug)]
pub struct CrcCell {
    pub label: String,
    pub r_p: f64,
    pub r_c: f64,
    pub r_sum: f64,
    pub stderr: f64,
    pub restarts: usize,
    /// Perfect-cancellation sum rate at this cell's covariances (bits);
    /// pooled into the ub column.
    pub pc_sum: f64,
    pub pc_stderr: f64,
}

/// One CRC sweep row.
#[derive(Clone, Debug)]
pub struct CrcRow {
    pub pp_db: f64,
    pub cells: Vec<CrcCell>,
    pub ub: f64,
    pub ub_stderr: f64,
    pub wall_time_s: f64,
}

fn diag_psd(dim: usize, weights: Option<&Vec<f64>>, total: f64) -> HermitianPsd<f64> {
    match weights {
        Some(ws) => {
            let sum: f64 = ws.iter().sum();
            let diag: Vec<f64> = ws.iter().map(|w| w / sum * total).collect();
            HermitianPsd::from_diag(&diag)
        }
        None => HermitianPsd::scaled_identity(dim, total / dim as f64),
    }
}

fn gfdpc_problem_at(
    cfg: &ExperimentConfig,
    g: &GfdpcSweepConfig,
    snr_db: f64,
) -> Result<GfdpcProblem<f64>, Error> {
    let (h1_spec, h2_spec) = g
        .fading
        .link_specs()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let noise = g.r as f64;
    let p = db_to_linear(snr_db) * noise;
    let q = g.q_over_p * p;
    let sigma_x = diag_psd(g.t_x, g.sigma_x_weights.as_ref(), p);
    let sigma_s = if q > 0.0 {
        diag_psd(g.t_s, g.sigma_s_weights.as_ref(), q)
    } else {
        HermitianPsd::zeros(g.t_s)
    };
    let ensemble = EnsembleConfig::new(
        cfg.seed,
        cfg.samples,
        vec![
            LinkSpec::new(g.r, g.t_x, h1_spec),
            LinkSpec::new(g.r, g.t_s, h2_spec),
        ],
        CsitModel::None,
    )?;
    GfdpcProblem::new(sigma_x, sigma_s, HermitianPsd::identity(g.r), ensemble)
}

fn gfdpc_w_opts(g: &GfdpcSweepConfig) -> InflationOpts<f64> {
    InflationOpts {
        algorithm: g.algorithm.to_core(),
        tol: g.w_tol,
        max_outer: g.w_max_outer,
        max_iter: g.w_max_iter,
        ..Default::default()
    }
}

/// Rate-vs-SNR sweep of the G-FDPC: treat-as-noise (`W = 0`), optimized
/// inflation factor, and the no-interference bound, on common samples.
pub fn run_gfdpc_sweep(cfg: &ExperimentConfig) -> Result<Vec<GfdpcRow>, Error> {
    let g = cfg.gfdpc.as_ref().expect("validated gfdpc config");
    let opts = gfdpc_w_opts(g);
    let mut rows = Vec::with_capacity(cfg.grid_db.len());
    for &snr_db in &cfg.grid_db {
        let start = Instant::now();
        let problem = gfdpc_problem_at(cfg, g, snr_db)?;
        let core = problem.core();
        let set = problem.materialize();
        let lb_vals = core.rate_dpc_values(&InflationFactor::zero(g.t_x, g.t_s), &set)?;
        let nos_vals = core.rate_nos_values(&set)?;
        let search = core.optimize_inflation(&opts, &set)?;
        let opt_vals = core.rate_dpc_values(&search.w, &set)?;
        let (lb, lb_se) = mean_stderr(&lb_vals);
        let (opt, opt_se) = mean_stderr(&opt_vals);
        let (nos, nos_se) = mean_stderr(&nos_vals);
        rows.push(GfdpcRow {
            snr_db,
            rate_lb: nats_to_bits(lb),
            rate_lb_stderr: nats_to_bits(lb_se),
            rate_opt: nats_to_bits(opt),
            rate_opt_stderr: nats_to_bits(opt_se),
            rate_nos: nats_to_bits(nos),
            rate_nos_stderr: nats_to_bits(nos_se),
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

fn crc_ensemble(
    cfg: &ExperimentConfig,
    c: &CrcSweepConfig,
    csit: &CsitConfig,
) -> Result<EnsembleConfig<f64>, Error> {
    let specs = c.fading.link_specs();
    let shapes = [(c.r1, c.t1), (c.r1, c.t2), (c.r2, c.t1), (c.r2, c.t2)];
    let links = shapes
        .iter()
        .zip(specs)
        .map(|(&(r, t), f)| LinkSpec::new(r, t, f))
        .collect();
    let model = csit
        .to_core()
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    EnsembleConfig::new(cfg.seed, cfg.samples, links, model)
}

fn alg1_config(c: &CrcSweepConfig) -> Alg1Config<f64> {
    Alg1Config {
        restarts: c.restarts,
        tol: c.tol,
        max_outer: c.max_outer,
        w_opts: InflationOpts {
            algorithm: WAlgorithm::Stationary,
            max_iter: c.w_max_iter,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn alg2_config(c: &CrcSweepConfig) -> Alg2Config<f64> {
    Alg2Config {
        tol: c.tol,
        w_opts: InflationOpts {
            algorithm: WAlgorithm::Stationary,
            max_iter: c.w_max_iter,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn run_crc_algorithm(
    problem: &CrcProblem<f64>,
    alg: CrcAlgorithm,
    c: &CrcSweepConfig,
    set: &SampleSet<f64>,
) -> Result<Solution<f64>, Error> {
    match alg {
        CrcAlgorithm::Alg1 => problem.joint_optimize_alg1_on(&alg1_config(c), set),
        CrcAlgorithm::Alg2 => problem.greedy_optimize_alg2_on(&alg2_config(c), set),
    }
}

/// Per-sample `[r_p, r_c, r_c under perfect cancellation]` of a solution on
/// one true channel draw.
fn rate_triple(
    problem: &CrcProblem<f64>,
    sol: &(ComplexMatrix<f64>, ComplexMatrix<f64>, ComplexMatrix<f64>),
    links: &[ComplexMatrix<f64>],
) -> Result<Vec<f64>, Error> {
    let single = SampleSet::from_samples(vec![links.to_vec()]);
    let (rp, rc) = problem.rate_values_on(&sol.0, &sol.1, &sol.2, &single)?;
    let pc = problem.perfect_cancellation_rates_on(&sol.0, &sol.1, &single)?;
    Ok(vec![rp[0], rc[0], pc.r_c_raw])
}

fn cell_from_triples(label: String, restarts: usize, triples: &[Vec<f64>]) -> CrcCell {
    let rp: Vec<f64> = triples.iter().map(|t| t[0]).collect();
    let rc: Vec<f64> = triples.iter().map(|t| t[1]).collect();
    let pc_sums: Vec<f64> = triples.iter().map(|t| t[0] + t[2]).collect();
    let rates = CrcRates::from_values(&rp, &rc);
    let (pc_sum, pc_se) = mean_stderr(&pc_sums);
    CrcCell {
        label,
        r_p: nats_to_bits(rates.r_p),
        r_c: nats_to_bits(rates.r_c),
        r_sum: nats_to_bits(rates.r_sum),
        stderr: nats_to_bits(rates.stderr_sum),
        restarts,
        pc_sum: nats_to_bits(pc_sum),
        pc_stderr: nats_to_bits(pc_se),
    }
}

/// Sum-rate-vs-Pp sweep of the CRC over the configured algorithm and CSIT
/// variants, plus the pooled perfect-cancellation upper bound column.
pub fn run_crc_sweep(cfg: &ExperimentConfig) -> Result<Vec<CrcRow>, Error> {
    let c = cfg.crc.as_ref().expect("validated crc config");
    let mut rows = Vec::with_capacity(cfg.grid_db.len());
    for &pp_db in &cfg.grid_db {
        let start = Instant::now();
        let p_p = db_to_linear(pp_db);
        let p_c = c.pc_over_pp * p_p;

        let mut cells = Vec::new();
        let mut ub_candidates: Vec<(f64, f64)> = Vec::new();

        for csit in &c.csit {
            let ensemble = crc_ensemble(cfg, c, csit)?;
            let problem = CrcProblem::new(p_p, p_c, ensemble.clone())?;
            for &alg in &c.algorithms {
                let label = format!("{}_{}", alg.label(), csit.label());
                let triples: Vec<Vec<f64>> = match csit {
                    CsitConfig::None => {
                        let set = problem.materialize();
                        let sol = run_crc_algorithm(&problem, alg, c, &set)?;
                        let key = (sol.t1.clone(), sol.t2.clone(), sol.w.clone());
                        (0..set.len())
                            .map(|i| rate_triple(&problem, &key, set.get(i)))
                            .collect::<Result<_, _>>()?
                    }
                    CsitConfig::Quantized { .. } => rated_with_csit(
                        &ensemble,
                        c.inner_samples,
                        |cond: &SampleSet<f64>| {
                            run_crc_algorithm(&problem, alg, c, cond)
                                .map(|s| (s.t1, s.t2, s.w))
                        },
                        |sol, _i, links| rate_triple(&problem, sol, links),
                    )?,
                };
                let restarts = match alg {
                    CrcAlgorithm::Alg1 => c.restarts,
                    CrcAlgorithm::Alg2 => 1,
                };
                let cell = cell_from_triples(label, restarts, &triples);
                ub_candidates.push((cell.pc_sum, cell.pc_stderr));
                cells.push(cell);
            }
        }

        let (mut ub, mut ub_se) = (f64::NEG_INFINITY, 0.0);
        if c.include_ub {
            // Dedicated optimizer of the perfect-cancellation objective on
            // the no-CSIT ensemble, pooled with the per-cell candidates.
            let ensemble = crc_ensemble(cfg, c, &CsitConfig::None)?;
            let problem = CrcProblem::new(p_p, p_c, ensemble)?;
            let set = problem.materialize();
            let sol = problem.optimize_perfect_cancellation_on(&alg1_config(c), &set)?;
            ub = nats_to_bits(sol.rates.r_sum);
            ub_se = nats_to_bits(sol.rates.stderr_sum);
        }
        for &(cand, cand_se) in &ub_candidates {
            if cand > ub {
                ub = cand;
                ub_se = cand_se;
            }
        }

        rows.push(CrcRow {
            pp_db,
            cells,
            ub,
            ub_stderr: ub_se,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

/// Empirical high-SNR slope of the G-FDPC rate between two SNR points, in
/// rate-doublings per SNR-doubling (bits per log2 SNR).
fn empirical_slopes(
    cfg: &ExperimentConfig,
    g: &GfdpcScalingConfig,
) -> Result<(f64, f64), Error> {
    let sweep_cfg = GfdpcSweepConfig {
        r: g.r,
        t_x: g.rank_x.max(1),
        t_s: g.rank_s.max(1),
        q_over_p: if g.rank_s == 0 { 0.0 } else { 1.0 },
        sigma_x_weights: None,
        sigma_s_weights: None,
        fading: crate::config::GfdpcFadingConfig::Rayleigh,
        algorithm: crate::config::WAlgorithmConfig::Both,
        w_tol: 1e-6,
        w_max_outer: 50,
        w_max_iter: 200,
    };
    let mut local = cfg.clone();
    local.samples = g.slope_samples;
    local.grid_db = g.slope_snr_db.to_vec();
    local.gfdpc = Some(sweep_cfg);
    let rows = run_gfdpc_sweep(&local)?;
    let dlog2 = (db_to_linear(g.slope_snr_db[1]) / db_to_linear(g.slope_snr_db[0])).log2();
    let slope_lb = (rows[1].rate_lb - rows[0].rate_lb) / dlog2;
    let slope_opt = (rows[1].rate_opt - rows[0].rate_opt) / dlog2;
    Ok((slope_lb, slope_opt))
}

/// Scaling-factor report: formula values, maximizing rank pairs, and
/// (optionally) empirical slopes from two high-SNR rate evaluations.
pub fn run_scaling_table(cfg: &ExperimentConfig, s: &ScalingConfig) -> Result<String, Error> {
    let mut out = String::new();
    if let Some(g) = &s.gfdpc {
        let gamma = gfdpc_scaling(g.r, g.rank_x, g.rank_s);
        out.push_str(&format!(
            "g-fdpc scaling: r={} rank_x={} rank_s={} -> gamma={}\n",
            g.r, g.rank_x, g.rank_s, gamma
        ));
        if g.measure_slope {
            let (lb, opt) = empirical_slopes(cfg, g)?;
            out.push_str(&format!(
                "  empirical slope {:.1} dB -> {:.1} dB (bits per log2 SNR): w=0: {lb:.3}, optimized: {opt:.3}\n",
                g.slope_snr_db[0], g.slope_snr_db[1]
            ));
        }
    }
    for dims in &s.crc_dims {
        let [t1, t2, r1, r2] = *dims;
        let res = crc_scaling(t1, t2, r1, r2)?;
        out.push_str(&format!(
            "crc scaling: (t1,t2,r1,r2)=({t1},{t2},{r1},{r2}) -> gamma_sum={} (gamma_p={}, gamma_c={})\n",
            res.gamma_sum, res.gamma_p, res.gamma_c
        ));
        let pairs: Vec<String> = res
            .argmax
            .iter()
            .map(|(a, b)| format!("({a},{b})"))
            .collect();
        out.push_str(&format!("  argmax (rank Sigma', rank Sigma22): {}\n", pairs.join(" ")));
    }
    Ok(out)
}
