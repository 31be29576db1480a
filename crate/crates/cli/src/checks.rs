//! The verification suite: identity, bound, minimizer, and log-domain
//! checks, each reported as a named residual against a pinned tolerance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use piblab::bounds::{combined_upper_bound, optimum_joint, variational_objective};
use piblab::demo::perturb_channel;
use piblab::finite_info::{conditional_mutual_information, mutual_information};
use piblab::posterior::{log_partition_validated, posterior_channel, q_model_joint, Temperatures};
use piblab::world::{
    build_joint, data_joint, decode_tuple, information_report, VAR_XF, VAR_XP, VAR_XV,
};

use crate::config::Experiment;
use crate::AppError;

const IDENTITY_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-12;
const GAP_SIGN_TOL: f64 = 1e-10;
const GAP_FORMULA_TOL: f64 = 1e-9;
const KL_OPTIMUM_TOL: f64 = 1e-12;
const LOG_DOMAIN_TOL: f64 = 1e-12;

const PERTURBATIONS: usize = 20;

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
    pub all_passed: bool,
}

fn check(name: impl Into<String>, residual: f64, tolerance: f64) -> CheckResult {
    CheckResult {
        name: name.into(),
        residual,
        tolerance,
        pass: residual <= tolerance,
    }
}

pub fn run_verify(exp: &Experiment) -> Result<VerifyReport, AppError> {
    let w = &exp.world;
    let f = &exp.family;
    let mut checks = Vec::new();

    // Identity suite at the Bayes point.
    let c1 = posterior_channel(f, w, 1.0, 1.0).map_err(AppError::check)?;
    let j1 = build_joint(w, &c1).map_err(AppError::check)?;
    let report = information_report(&j1).map_err(AppError::check)?;
    checks.push(check("chain_rule", report.chain_residual, IDENTITY_TOL));
    checks.push(check(
        "rearrangement",
        report.rearrangement_residual,
        IDENTITY_TOL,
    ));
    checks.push(check("markov", report.markov_residual, IDENTITY_TOL));

    let dj = data_joint(w).map_err(AppError::check)?;
    let ceiling = mutual_information(&dj, &[VAR_XP, VAR_XV], &[VAR_XF]).map_err(AppError::check)?;
    checks.push(check(
        "data_processing",
        (report.i_theta_xf - ceiling).max(0.0),
        IDENTITY_TOL,
    ));
    let i_theta_phi =
        conditional_mutual_information(j1.joint(), &["theta"], &["phi"], &[VAR_XP, VAR_XV])
            .map_err(AppError::check)?;
    checks.push(check("markov_phi", i_theta_phi, IDENTITY_TOL));

    // Bayes / validated-Bayes consistency against the explicit model joint.
    let qj = q_model_joint(f, w).map_err(AppError::check)?;
    let mut consistency = 0.0f64;
    for a in 0..w.xp_alphabet().size() {
        for b in 0..w.xv_alphabet().size() {
            let cond = qj
                .condition(&["theta"], &[(VAR_XP, a), (VAR_XV, b)])
                .map_err(AppError::check)?
                .into_distribution()
                .map_err(AppError::check)?;
            let row = c1.row_for(&[a, b]);
            for t in 0..row.probs().len() {
                consistency = consistency.max((row.prob(t) - cond.prob(t)).abs());
            }
        }
    }
    checks.push(check("bayes_consistency", consistency, CONSISTENCY_TOL));

    // Bound and minimizer suites at two temperature pairs.
    let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
    for (beta, gamma) in [(1.0, 1.0), (2.0, 2.0)] {
        let t = Temperatures::new(beta, gamma).map_err(AppError::check)?;
        let tag = format!("beta={beta},gamma={gamma}");
        let fj = optimum_joint(w, f, t).map_err(AppError::check)?;

        let up = piblab::bounds::upper_bound_conditional_mi(&fj, f.q_theta())
            .map_err(AppError::check)?;
        checks.push(check(
            format!("upper_bound_gap_nonneg({tag})"),
            (-up.gap).max(0.0),
            GAP_SIGN_TOL,
        ));
        checks.push(check(
            format!("upper_bound_gap_formula({tag})"),
            (up.gap - up.gap_formula_value).abs(),
            GAP_FORMULA_TOL,
        ));

        let train = piblab::bounds::lower_bound_mi_train(&fj, f).map_err(AppError::check)?;
        checks.push(check(
            format!("train_bound_gap_nonneg({tag})"),
            (-train.gap).max(0.0),
            GAP_SIGN_TOL,
        ));
        checks.push(check(
            format!("train_bound_gap_formula({tag})"),
            (train.gap - train.gap_formula_value).abs(),
            GAP_FORMULA_TOL,
        ));

        let val = piblab::bounds::lower_bound_mi_validation(&fj, f).map_err(AppError::check)?;
        checks.push(check(
            format!("validation_bound_gap_nonneg({tag})"),
            (-val.gap).max(0.0),
            GAP_SIGN_TOL,
        ));
        checks.push(check(
            format!("validation_bound_gap_formula({tag})"),
            (val.gap - val.gap_formula_value).abs(),
            GAP_FORMULA_TOL,
        ));

        let combined = combined_upper_bound(&fj, f, t).map_err(AppError::check)?;
        checks.push(check(
            format!("combined_bound_gap_nonneg({tag})"),
            (-combined.report.gap).max(0.0),
            GAP_SIGN_TOL,
        ));
        checks.push(check(
            format!("combined_bound_gap_formula({tag})"),
            (combined.report.gap - combined.report.gap_formula_value).abs(),
            GAP_FORMULA_TOL,
        ));
        checks.push(check(
            format!("combined_bound_forms_agree({tag})"),
            (combined.bound_conditional_form - combined.bound_expanded_form).abs(),
            IDENTITY_TOL,
        ));

        // Minimizer: zero KL at the optimum, no perturbation scores lower.
        let opt_channel = posterior_channel(f, w, beta, gamma).map_err(AppError::check)?;
        let at_opt = variational_objective(w, f, t, &opt_channel).map_err(AppError::check)?;
        checks.push(check(
            format!("minimizer_kl_zero({tag})"),
            at_opt.kl_form.abs(),
            KL_OPTIMUM_TOL,
        ));
        let mut domination = 0.0f64;
        let mut identity = (at_opt.raw - (at_opt.kl_form - at_opt.log_partition_mean)).abs();
        for _ in 0..PERTURBATIONS {
            let perturbed = perturb_channel(&opt_channel, 0.25, &mut rng);
            let v = variational_objective(w, f, t, &perturbed).map_err(AppError::check)?;
            domination = domination.max(at_opt.raw - v.raw);
            identity = identity.max((v.raw - (v.kl_form - v.log_partition_mean)).abs());
        }
        checks.push(check(
            format!("minimizer_dominates({tag})"),
            domination.max(0.0),
            GAP_SIGN_TOL,
        ));
        checks.push(check(
            format!("variational_identity({tag})"),
            identity,
            GAP_FORMULA_TOL,
        ));
    }

    // Log-domain partition versus two linear-domain routes.
    let xs = w.x_alphabet().size();
    let q_data = qj.marginalize(&[VAR_XP, VAR_XV]).map_err(AppError::check)?;
    let mut log_domain = 0.0f64;
    for a in 0..w.xp_alphabet().size() {
        let xp = decode_tuple(a, w.m(), xs);
        for b in 0..w.xv_alphabet().size() {
            let xv = decode_tuple(b, w.v(), xs);
            let lz = log_partition_validated(f, &xp, &xv, 1.0, 1.0).map_err(AppError::check)?;
            let direct = q_data.prob(&[a, b]);
            if direct > 0.0 {
                log_domain = log_domain.max((lz.exp() - direct).abs() / direct);
            }
            let lz2 = log_partition_validated(f, &xp, &xv, 1.7, 1.3).map_err(AppError::check)?;
            let mut direct2 = 0.0;
            for t in 0..f.theta_alphabet().size() {
                let lik: f64 = xp
                    .iter()
                    .map(|&x| f.q_lik().row_for(&[t]).prob(x))
                    .product();
                let val: f64 = xv
                    .iter()
                    .map(|&x| f.q_val_lik().row_for(&[a, t]).prob(x))
                    .product();
                direct2 += f.q_theta().prob(t) * lik.powf(1.7) * val.powf(1.3);
            }
            if direct2 > 0.0 {
                log_domain = log_domain.max((lz2.exp() - direct2).abs() / direct2);
            }
        }
    }
    checks.push(check("log_domain_partition", log_domain, LOG_DOMAIN_TOL));

    let all_passed = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { checks, all_passed })
}
