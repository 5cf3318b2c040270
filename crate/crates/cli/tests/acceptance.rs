//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! A criterion that misses its tolerance prints FAIL without failing the
//! process; only an error that stops a check from running does. Select a
//! subset with `XVA_ACCEPTANCE=1,2,4`. Training outputs are kept under the
//! cargo target directory in `acceptance/`.

use std::path::PathBuf;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde_json::json;
use xva_pinn_cli::config::Mode;
use xva_pinn_cli::run::{self, Oracle};
use xva_pinn_cli::ExperimentConfig;
use xva_pinn_core::autodiff::{input_jet, Jet2};
use xva_pinn_core::geometry::{build_grid_1d, tensor_grid, DomainBox, RegionId};
use xva_pinn_core::loss::{assemble, assemble_field, assemble_with_gradient};
use xva_pinn_core::metrics::{clamped_error, relative_norms};
use xva_pinn_core::models::{presets, BsParams, HestonParams, Market, ModelSpec, OptionType, XvaParams};
use xva_pinn_core::network::{Architecture, NetworkParams};
use xva_pinn_core::reference::{
    bs_price, fd_solve_1d, fd_solve_2d, normal_cdf, risky_bs_greeks, risky_bs_price, SolutionSurface,
};

type Checked = Result<Verdict, String>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Checked {
    Ok(Verdict { pass, detail })
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

struct Uniform(ChaCha8Rng);

impl Uniform {
    fn new(seed: u64) -> Self {
        Uniform(ChaCha8Rng::seed_from_u64(seed))
    }

    fn next(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * ((self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64)
    }
}

fn max_rel(approx: &[f64], reference: &[f64], floor: f64) -> f64 {
    approx
        .iter()
        .zip(reference)
        .filter(|(_, r)| r.abs() > floor)
        .map(|(a, r)| (a - r).abs() / r.abs())
        .fold(0.0, f64::max)
}

fn out_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name)
}

fn quiet(_: &str) {}

// 1. Closed-form oracle identities.
const ORACLE_TOL: f64 = 1e-12;
const CDF_TOL: f64 = 1e-15;

fn oracle_identities() -> Checked {
    let put = presets::bs1d_put(0.0).with_xva(XvaParams::with_default_funding(0.0, 0.0, 0.4, 0.4, 0.03));
    let call = ModelSpec { option: OptionType::Call, ..put.clone() };
    let (r, q) = (0.03, 0.03 - 0.015);
    let mut rng = Uniform::new(1);
    let (mut risky_gap, mut parity_gap) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let (t, s) = (rng.next(1e-3, 5.0), rng.next(0.1, 60.0));
        for spec in [&put, &call] {
            risky_gap =
                risky_gap.max((risky_bs_price(spec, t, s).map_err(err)? - bs_price(spec, t, s).map_err(err)?).abs());
        }
        let lhs = bs_price(&call, t, s).map_err(err)? - bs_price(&put, t, s).map_err(err)?;
        let rhs = s * (-q * t).exp() - 15.0 * (-r * t).exp();
        parity_gap = parity_gap.max((lhs - rhs).abs() / s.max(1.0));
    }

    // reference values of the standard normal distribution function
    let known = [
        (0.0, 0.5),
        (1.0, 0.841_344_746_068_542_9),
        (-1.0, 0.158_655_253_931_457_05),
        (1.959_963_984_540_054, 0.975),
        (-3.0, 0.001_349_898_031_630_094_6),
        (2.5, 0.993_790_334_674_223_8),
    ];
    let mut cdf_gap = known.iter().map(|&(x, p)| (normal_cdf(x) - p).abs()).fold(0.0, f64::max);
    let mut monotone = true;
    let mut prev = 0.0;
    for i in 0..=4000 {
        let x = -20.0 + i as f64 * 0.01;
        let p = normal_cdf(x);
        cdf_gap = cdf_gap.max((p + normal_cdf(-x) - 1.0).abs());
        monotone &= p >= prev && (0.0..=1.0).contains(&p);
        prev = p;
    }

    let mut dirichlet_gap = 0.0f64;
    for lambda_b in [0.0, 0.02, 0.04, 0.06, 0.08, 0.1] {
        let spec = presets::bs1d_put(lambda_b);
        let rate = spec.xva.r + spec.xva.adjustment_rate();
        for k in 0..=50 {
            let t = 5.0 * k as f64 / 50.0;
            let mut j = Jet2::zero(1);
            j.value = spec.left_dirichlet(t);
            j.d_t = -rate * j.value;
            j.d_x[0] = rng.next(-10.0, 10.0);
            j.d_xx[0][0] = rng.next(-10.0, 10.0);
            let res = spec.residual(RegionId::Lower(0), &[t, 0.0], &j).map_err(err)?;
            dirichlet_gap = dirichlet_gap.max(res.abs());
        }
    }
    verdict(
        risky_gap <= ORACLE_TOL && parity_gap <= ORACLE_TOL && cdf_gap <= CDF_TOL && monotone && dirichlet_gap <= ORACLE_TOL,
        format!(
            "risky(0,0)-classical {risky_gap:.1e}, put-call parity {parity_gap:.1e}, normal cdf {cdf_gap:.1e} (monotone {monotone}), \
             lower-face residual of the Dirichlet value {dirichlet_gap:.1e}"
        ),
    )
}

// 2. Automatic differentiation against finite differences.
const JET_FIRST_TOL: f64 = 1e-6;
const JET_SECOND_TOL: f64 = 1e-4;
const LOSS_GRADIENT_TOL: f64 = 1e-5;

fn fd_jet(net: &NetworkParams, p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), String> {
    let f = |q: &[f64]| net.forward(q).map_err(err);
    let (h1, h2) = (1e-4, 1e-3);
    let shifted = |moves: &[(usize, f64)]| {
        let mut q = p.to_vec();
        for &(i, dx) in moves {
            q[i] += dx;
        }
        f(&q)
    };
    let mut first = Vec::new();
    for i in 0..p.len() {
        first.push((shifted(&[(i, h1)])? - shifted(&[(i, -h1)])?) / (2.0 * h1));
    }
    let mut second = Vec::new();
    for i in 1..p.len() {
        for j in i..p.len() {
            second.push(if i == j {
                (shifted(&[(i, h2)])? - 2.0 * f(p)? + shifted(&[(i, -h2)])?) / (h2 * h2)
            } else {
                (shifted(&[(i, h2), (j, h2)])? - shifted(&[(i, h2), (j, -h2)])? - shifted(&[(i, -h2), (j, h2)])?
                    + shifted(&[(i, -h2), (j, -h2)])?)
                    / (4.0 * h2 * h2)
            });
        }
    }
    Ok((first, second))
}

fn ad_correctness() -> Checked {
    let mut rng = Uniform::new(7);
    let (mut worst1, mut worst2) = (0.0f64, 0.0f64);
    for case in 0..100u64 {
        let input_dim = 2 + (case % 2) as usize;
        let arch = Architecture::new(input_dim, 1 + (case % 3) as usize, 4 + (case % 5) as usize * 3).map_err(err)?;
        let net = NetworkParams::init(arch, case).map_err(err)?;
        let p: Vec<f64> = (0..input_dim).map(|_| rng.next(-1.0, 1.0)).collect();
        let jet = input_jet(&net, &p).map_err(err)?;
        let mut ad1 = vec![jet.d_t];
        ad1.extend_from_slice(&jet.d_x[..jet.dim]);
        let mut ad2 = Vec::new();
        for i in 0..jet.dim {
            for j in i..jet.dim {
                ad2.push(jet.d_xx[i][j]);
            }
        }
        let (fd1, fd2) = fd_jet(&net, &p)?;
        worst1 = worst1.max(max_rel(&ad1, &fd1, 1e-8));
        worst2 = worst2.max(max_rel(&ad2, &fd2, 1e-8));
    }

    let mut worst_grad = 0.0f64;
    for lambda_b in [0.0, 0.04, 0.1] {
        let spec = presets::bs1d_put(lambda_b);
        let grid = build_grid_1d(&spec.domain, 4, 4).map_err(err)?;
        let arch = Architecture::new(2, 1, 4)
            .and_then(|a| a.with_unit_box_scaling(&spec.domain.input_bounds()))
            .map_err(err)?;
        let net = NetworkParams::init(arch, 2).map_err(err)?;
        let (_, grad) = assemble_with_gradient(&spec, &net, &grid).map_err(err)?;
        let h = 1e-6;
        let mut fd = Vec::new();
        for i in 0..net.len() {
            let mut up = net.clone();
            up.flat_mut()[i] += h;
            let mut down = net.clone();
            down.flat_mut()[i] -= h;
            fd.push(
                (assemble(&spec, &up, &grid).map_err(err)?.total - assemble(&spec, &down, &grid).map_err(err)?.total)
                    / (2.0 * h),
            );
        }
        worst_grad = worst_grad.max(max_rel(&grad, &fd, 1e-8));
    }
    verdict(
        worst1 <= JET_FIRST_TOL && worst2 <= JET_SECOND_TOL && worst_grad <= LOSS_GRADIENT_TOL,
        format!(
            "input jets over 100 nets: first order {worst1:.1e} (tol {JET_FIRST_TOL:.0e}), second order {worst2:.1e} \
             (tol {JET_SECOND_TOL:.0e}); loss gradient of a [2,4,1] net {worst_grad:.1e} (tol {LOSS_GRADIENT_TOL:.0e})"
        ),
    )
}

// 3. The exact solution annihilates the residuals.
const INTERIOR_RESIDUAL_TOL: f64 = 1e-6;
const REGION_TERM_TOL: f64 = 1e-10;

fn closed_form_jet(spec: &ModelSpec, p: &[f64]) -> Jet2 {
    let g = risky_bs_greeks(spec, p[0], p[1]).expect("valid point");
    let mut j = Jet2::zero(1);
    j.value = g.price;
    j.d_t = g.theta;
    j.d_x[0] = g.delta;
    j.d_xx[0][0] = g.gamma;
    j
}

fn residual_annihilation() -> Checked {
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda_b in [0.0, 0.04, 0.1] {
        let spec = presets::bs1d_put(lambda_b);
        let grid = build_grid_1d(&spec.domain, 100, 110).map_err(err)?;
        let mut worst = 0.0f64;
        for (p, _) in grid.region(RegionId::Interior).ok_or("no interior region")?.iter() {
            let r = spec.residual(RegionId::Interior, p, &closed_form_jet(&spec, p)).map_err(err)?;
            worst = worst.max(r.abs());
        }
        let loss = assemble_field(&spec, &grid, |p| closed_form_jet(&spec, p)).map_err(err)?;
        let terms: Vec<String> = loss
            .terms
            .iter()
            .map(|(id, t)| {
                pass &= *t <= REGION_TERM_TOL;
                format!("{id} {t:.1e}")
            })
            .collect();
        pass &= worst <= INTERIOR_RESIDUAL_TOL;
        parts.push(format!("lambda_b {lambda_b}: max |interior residual| {worst:.1e}, terms [{}]", terms.join(", ")));
    }
    verdict(pass, format!("{} (tol {INTERIOR_RESIDUAL_TOL:.0e} / {REGION_TERM_TOL:.0e})", parts.join("; ")))
}

// 4. Finite-difference convergence.
const FD_RATIO: (f64, f64) = (3.5, 4.5);
const FD_L2_TOL: f64 = 1e-3;

/// Relative L2 over `S in [0.5K, 1.5K]` and `t >= t_min`, away from the
/// first-order damped start-up near the kink.
fn windowed_error(spec: &ModelSpec, s: &SolutionSurface, t_min: f64) -> Result<f64, String> {
    let (mut approx, mut exact) = (Vec::new(), Vec::new());
    for (n, &t) in s.axes[0].iter().enumerate().skip(1).filter(|(_, &t)| t >= t_min) {
        for (i, &x) in s.axes[1].iter().enumerate() {
            if (0.5 * spec.strike..=1.5 * spec.strike).contains(&x) {
                approx.push(s.at(&[n, i]));
                exact.push(risky_bs_price(spec, t, x).map_err(err)?);
            }
        }
    }
    Ok(relative_norms(&approx, &exact, None).map_err(err)?.rel_l2)
}

fn fd_convergence() -> Checked {
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda_b in [0.0, 0.04, 0.1] {
        let spec = presets::bs1d_put(lambda_b);
        let mut errors = Vec::new();
        let mut full = 0.0;
        for n in [100, 200, 400] {
            let s = fd_solve_1d(&spec, n, n, 1e-10, 50).map_err(err)?;
            pass &= s.meta.converged;
            errors.push(windowed_error(&spec, &s, 0.1 * spec.domain.maturity)?);
            if n == 400 {
                let exact: Vec<f64> = (0..s.values.len())
                    .map(|i| {
                        let p = s.point(i);
                        risky_bs_price(&spec, p[0], p[1])
                    })
                    .collect::<Result<_, _>>()
                    .map_err(err)?;
                let w = run::tensor_weights(&s.axes).map_err(err)?;
                full = relative_norms(&s.values, &exact, Some(&w)).map_err(err)?.rel_l2;
            }
        }
        let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
        pass &= ratios.iter().all(|r| (FD_RATIO.0..=FD_RATIO.1).contains(r)) && full <= FD_L2_TOL;
        parts.push(format!(
            "lambda_b {lambda_b}: ratios {:.2}/{:.2}, rel_L2 at 400x400 {full:.1e}",
            ratios[0], ratios[1]
        ));
    }
    verdict(
        pass,
        format!("{} (ratio in [{}, {}], rel_L2 <= {FD_L2_TOL:.0e})", parts.join("; "), FD_RATIO.0, FD_RATIO.1),
    )
}

// Shared by the training criteria.
fn bs1d_config(lambda_b: f64, lambda_c: f64, training: serde_json::Value) -> Result<ExperimentConfig, String> {
    let v = json!({
        "model": {
            "kind": "bs1d", "strike": 15.0, "maturity": 5.0, "r": 0.03,
            "bs": { "sigma": 0.25, "r_repo": 0.015 },
            "xva": { "lambda_b": [lambda_b], "lambda_c": lambda_c, "recovery_b": 0.4, "recovery_c": 0.4 }
        },
        "grid": { "steps": [100, 110] },
        "network": { "hidden_layers": 4, "width": 40 },
        "training": training
    });
    ExperimentConfig::from_json(&v.to_string()).map_err(err)
}

fn train_case(cfg: &ExperimentConfig, name: &str) -> Result<run::CaseOutcome, String> {
    let mut log = quiet;
    let mut summary = run::run_train(cfg, &out_dir(name), &mut log).map_err(err)?;
    Ok(summary.cases.remove(0))
}

// 5. One-asset risk-free put at full schedule.
const HEADLINE_LOG10: [f64; 3] = [-2.8, -2.5, -2.3];
const NEAR_STRIKE_PRICE_TOL: f64 = 5e-3;

fn headline_1d() -> Checked {
    let cfg = bs1d_config(0.0, 0.0, json!({ "adam_steps": 10000, "lbfgs_steps": 2500, "n_trials": 3 }))?;
    let case = train_case(&cfg, "c5_risk_free")?;
    let e = &case.evaluation.whole;
    // diagnostics only: where the max error sits
    let spec = cfg.spec(0.0).map_err(err)?;
    let domain = cfg.domain().map_err(err)?;
    let linf = |steps: &[usize], t_min: f64| -> Result<f64, String> {
        let (points, _) = tensor_grid(&domain, steps).map_err(err)?;
        let (mut a, mut r) = (Vec::new(), Vec::new());
        for p in points.chunks(2).filter(|p| p[0] >= t_min) {
            a.push(case.best.params.forward(p).map_err(err)?);
            r.push(risky_bs_price(&spec, p[0], p[1]).map_err(err)?);
        }
        Ok(relative_norms(&a, &r, None).map_err(err)?.log10_linf)
    };
    let on_nodes = linf(&cfg.grid.steps, 0.0)?;
    let after_payoff = linf(&cfg.evaluation_steps(), 1e-9)?;
    let worst_price = case.evaluation.table.iter().map(|r| r.price_rel_err).fold(0.0, f64::max);
    let losses: Vec<String> =
        case.trials.iter().map(|t| t.final_loss.map_or("failed".into(), |l| format!("{l:.2e}"))).collect();
    verdict(
        e.log10_l1 <= HEADLINE_LOG10[0] && e.log10_l2 <= HEADLINE_LOG10[1] && e.log10_linf <= HEADLINE_LOG10[2]
            && worst_price <= NEAR_STRIKE_PRICE_TOL,
        format!(
            "best of seeds (final losses {}): seed {}, log10 rel L1/L2/Linf {:.3}/{:.3}/{:.3} (tol {}/{}/{}), \
             max near-strike price error {worst_price:.1e} (tol {NEAR_STRIKE_PRICE_TOL:.0e}); \
             log10 rel Linf on the training nodes {on_nodes:.3}, on the evaluation grid without t = 0 {after_payoff:.3}",
            losses.join(", "),
            case.best_seed,
            e.log10_l1,
            e.log10_l2,
            e.log10_linf,
            HEADLINE_LOG10[0],
            HEADLINE_LOG10[1],
            HEADLINE_LOG10[2]
        ),
    )
}

// 6. One-asset risky sweep.
const SWEEP_PRICE_TOL: f64 = 5e-3;
const SWEEP_DELTA_TOL: f64 = 1e-2;

fn risky_sweep() -> Checked {
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda_b in [0.02, 0.06, 0.1] {
        let cfg = bs1d_config(lambda_b, 0.05, json!({ "adam_steps": 10000, "lbfgs_steps": 2500 }))?;
        let case = train_case(&cfg, &format!("c6_lambda_b_{lambda_b}"))?;
        let price = case.evaluation.table.iter().map(|r| r.price_rel_err).fold(0.0, f64::max);
        let delta = case.evaluation.table.iter().map(|r| r.delta_rel_err.unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
        // deep in the money the put moves one for one against the spot
        let deep = case.best.params.input_jet(&[5.0, 1.5]).map_err(err)?.d_x[0];
        pass &= price <= SWEEP_PRICE_TOL && delta <= SWEEP_DELTA_TOL;
        parts.push(format!("lambda_b {lambda_b}: price {price:.1e}, delta {delta:.1e} (deep ITM delta {deep:.3})"));
    }
    verdict(
        pass,
        format!("max near-strike errors {} (tol {SWEEP_PRICE_TOL:.0e} / {SWEEP_DELTA_TOL:.0e})", parts.join("; ")),
    )
}

// 7. Average basket at reduced scale.
const BASKET_NEAR_ATM_LOG10: f64 = -1.5;

fn basket_reduced() -> Checked {
    let v = json!({
        "model": {
            "kind": "basket_average", "strike": 50.0, "maturity": 1.0, "r": 0.03,
            "basket": { "sigma": [0.25, 0.15], "r_repo": [0.015, 0.022], "rho": -0.65 },
            "xva": { "lambda_b": [0.02], "lambda_c": 0.07, "recovery_b": 0.5, "recovery_c": 0.3 }
        },
        "grid": { "steps": [11, 21, 21] },
        "network": { "hidden_layers": 4, "width": 60 },
        "training": { "adam_steps": 5000, "lbfgs_steps": 500 },
        "reference": { "steps": [100, 160, 160] }
    });
    let cfg = ExperimentConfig::from_json(&v.to_string()).map_err(err)?;
    let case = train_case(&cfg, "c7_basket")?;
    let near = case.evaluation.near_strike.as_ref().ok_or("no evaluation node near the strike")?;
    verdict(
        near.log10_l2 <= BASKET_NEAR_ATM_LOG10,
        format!(
            "near-ATM log10 rel_L2 {:.3} over {} nodes (tol {BASKET_NEAR_ATM_LOG10}); whole domain {:.3}",
            near.log10_l2, near.points, case.evaluation.whole.log10_l2
        ),
    )
}

// 8. Heston properties.
const HESTON_DEGENERATE_TOL: f64 = 1e-2;
const HESTON_CLAMPED_TOL: f64 = 0.1;

fn heston_properties() -> Checked {
    let feller = presets::heston_put(0.0).feller_check().map_err(err)?;

    let base = presets::heston_put(0.02);
    let h = HestonParams { r_repo: 0.025, kappa: 1.5, eta: 0.04, sigma: 1e-6, rho: -0.9 };
    let flat = ModelSpec { market: Market::Heston(h), ..base.clone() };
    let surface = fd_solve_2d(&flat, 80, 75, 50, 1e-10, 50).map_err(err)?;
    let one = ModelSpec::new(
        Market::Bs1d(BsParams { sigma: 0.2, r_repo: 0.025 }),
        OptionType::Put,
        1.0,
        flat.xva,
        DomainBox::new(2.0, vec![flat.domain.axes[0].clone()]).map_err(err)?,
    )
    .map_err(err)?;
    let (mut approx, mut exact) = (Vec::new(), Vec::new());
    for &t in surface.axes[0].iter().skip(1) {
        for &s in surface.axes[1].iter().filter(|&&s| (0.5..=1.5).contains(&s)) {
            approx.push(surface.interpolate(&[t, s, 0.04]));
            exact.push(risky_bs_price(&one, t, s).map_err(err)?);
        }
    }
    let degenerate = relative_norms(&approx, &exact, None).map_err(err)?.rel_l2;

    let v = json!({
        "model": {
            "kind": "heston", "strike": 1.0, "maturity": 2.0, "r": 0.025,
            "heston": { "r_repo": 0.025, "kappa": 1.5, "eta": 0.04, "sigma": 0.3, "rho": -0.9 },
            "xva": { "lambda_b": [0.02], "lambda_c": 0.04, "recovery_b": 0.3, "recovery_c": 0.3 }
        },
        "grid": { "steps": [21, 40, 30], "nu_max": 3.0 },
        "network": { "hidden_layers": 4, "width": 40 },
        "training": { "adam_steps": 12000, "lbfgs_steps": 1500, "decay": { "delta": 0.5, "a": 10000 } },
        "reference": { "steps": [100, 160, 120] }
    });
    let cfg = ExperimentConfig::from_json(&v.to_string()).map_err(err)?;
    let case = train_case(&cfg, "c8_heston")?;
    let oracle = Oracle::for_spec(&cfg.spec(0.02).map_err(err)?, &cfg.reference_config()).map_err(err)?;
    let (k, t) = (cfg.model.strike, cfg.model.maturity);
    let mut worst = 0.0f64;
    for nu in [0.1, 0.3] {
        for m in 0..=8 {
            let p = [t, k * (0.8 + 0.05 * m as f64), nu];
            let a = case.best.params.forward(&p).map_err(err)?;
            worst = worst.max(clamped_error(a, oracle.value(&p).map_err(err)?, cfg.evaluation.clamp_threshold));
        }
    }
    verdict(
        feller && degenerate <= HESTON_DEGENERATE_TOL && worst <= HESTON_CLAMPED_TOL,
        format!(
            "feller {feller}; vol-of-vol -> 0 against the one-asset closed form rel_L2 {degenerate:.1e} (tol {HESTON_DEGENERATE_TOL:.0e}); \
             max clamped error at maturity, S in [0.8K, 1.2K], nu in {{0.1, 0.3}}: {worst:.1e} (tol {HESTON_CLAMPED_TOL})"
        ),
    )
}

// 9. Boundary treatment A/B.
const INIT_SPREAD_DECADES: f64 = 3.0;

fn boundary_ab() -> Checked {
    let lambda_b = 0.04;
    let budget = json!({ "adam_steps": 3000, "lbfgs_steps": 500 });
    let cfg = bs1d_config(lambda_b, 0.05, budget)?;
    let spec = cfg.spec(lambda_b).map_err(err)?;
    let grid = build_grid_1d(&spec.domain, 100, 110).map_err(err)?;
    let init = NetworkParams::init(cfg.architecture().map_err(err)?, 0).map_err(err)?;
    let loss = assemble(&spec, &init, &grid).map_err(err)?;
    let (lo, hi) = loss.terms.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &(_, t)| (lo.min(t), hi.max(t)));
    let spread = (hi / lo).log10();
    let terms: Vec<String> = loss.terms.iter().map(|(id, t)| format!("{id} {t:.1e}")).collect();

    let mut l2 = Vec::new();
    for mode in [Mode::PdeBoundary, Mode::Classic] {
        let mut c = cfg.clone();
        c.apply_overrides(None, None, Some(mode)).map_err(err)?;
        let name = if mode == Mode::Classic { "c9_classic" } else { "c9_pde_boundary" };
        l2.push(train_case(&c, name)?.evaluation.whole.rel_l2);
    }
    verdict(
        spread <= INIT_SPREAD_DECADES && l2[0] <= l2[1],
        format!(
            "initial terms [{}] span {spread:.2} decades (tol {INIT_SPREAD_DECADES}); rel_L2 after the same budget: \
             pde-boundary {:.2e}, classic {:.2e}",
            terms.join(", "),
            l2[0],
            l2[1]
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Checked); 9] = [
        (1, "oracle identities", oracle_identities),
        (2, "automatic differentiation", ad_correctness),
        (3, "residual annihilation", residual_annihilation),
        (4, "finite-difference convergence", fd_convergence),
        (5, "one-asset risk-free accuracy", headline_1d),
        (6, "one-asset risky sweep", risky_sweep),
        (7, "average basket, reduced scale", basket_reduced),
        (8, "heston properties", heston_properties),
        (9, "boundary treatment comparison", boundary_ab),
    ];
    let selected: Option<Vec<u32>> =
        std::env::var("XVA_ACCEPTANCE").ok().map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut broken = false;
    for (n, name, check) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(v) => {
                println!("criterion {n}: {} {name}: {} [{secs:.0} s]", if v.pass { "PASS" } else { "FAIL" }, v.detail)
            }
            Err(e) => {
                broken = true;
                println!("criterion {n}: FAIL {name}: could not run: {e} [{secs:.0} s]");
            }
        }
    }
    if broken {
        std::process::exit(1);
    }
}
