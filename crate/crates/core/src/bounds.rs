//! Exact bottleneck objectives and their variational bounds, each returned
//! together with its gap so every inequality is checkable as an equality
//! plus a nonnegative Kullback-Leibler term.
//!
//! Expectations are exact sums over the full joint, never Monte Carlo.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_info::{self, Channel, FiniteDistribution, JointTable};
use crate::posterior::{
    log_partition_validated, validated_posterior, Temperatures, VariationalFamily,
};
use crate::world::{
    build_joint, data_marginal, decode_tuple, FullJoint, World, VAR_THETA, VAR_XF, VAR_XP, VAR_XV,
};
use crate::Nats;

/// A bound evaluation: the exact quantity, the bound, the measured gap
/// (oriented so that a valid bound gives a nonnegative gap), and the gap
/// recomputed from its closed-form KL expression.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub exact_value: Nats,
    pub bound_value: Nats,
    pub gap: Nats,
    pub gap_formula_value: Nats,
}

/// The combined objective bound together with both expansions of its
/// channel-independent constant, which must agree numerically.
#[derive(Debug, Clone, Serialize)]
pub struct CombinedBoundReport {
    pub report: BoundReport,
    /// Constant written with the conditional entropy `-gamma H(x_v|x_p)`.
    pub bound_conditional_form: Nats,
    /// Constant expanded as `-gamma H(x_v) + gamma I(x_p;x_v)`.
    pub bound_expanded_form: Nats,
}

/// Value of the variational objective for an arbitrary channel.
#[derive(Debug, Clone, Serialize)]
pub struct VariationalValue {
    /// Expectation of `ln c/q - beta ln q_lik - gamma ln q_val_lik`.
    pub raw: Nats,
    /// Expected KL from the channel to the optimum tempered row.
    pub kl_form: Nats,
    /// Expected log partition `E[ln Z_{beta,gamma}(x_p,x_v)]`; the identity
    /// `raw = kl_form - log_partition_mean` holds up to roundoff.
    pub log_partition_mean: Nats,
}

/// The exact objective
/// `I(theta; x_p, x_v | x_f) - beta I(theta; x_p) - gamma I(theta; x_v | x_p)`.
/// With V = 0 this reduces to the plain two-set objective for every gamma.
pub fn exact_objective(fj: &FullJoint, t: Temperatures) -> Result<Nats> {
    let j = fj.joint();
    let i_cond =
        finite_info::conditional_mutual_information(j, &[VAR_THETA], &[VAR_XP, VAR_XV], &[VAR_XF])?;
    let i_train = finite_info::mutual_information(j, &[VAR_THETA], &[VAR_XP])?;
    let i_val = finite_info::conditional_mutual_information(j, &[VAR_THETA], &[VAR_XV], &[VAR_XP])?;
    Ok(i_cond - t.beta * i_train - t.gamma * i_val)
}

/// Upper bound `I(theta; x_p, x_v | x_f) <= E[ln p(theta|x_p,x_v) / q(theta)]`,
/// with gap `E[KL(p(theta|x_f) || q)]`.
pub fn upper_bound_conditional_mi(
    fj: &FullJoint,
    q_theta: &FiniteDistribution,
) -> Result<BoundReport> {
    if q_theta.alphabet() != fj.theta_alphabet() {
        return Err(Error::AlphabetMismatch {
            expected: fj.theta_alphabet().name().into(),
            got: q_theta.alphabet().name().into(),
        });
    }
    let j = fj.joint();
    let exact =
        finite_info::conditional_mutual_information(j, &[VAR_THETA], &[VAR_XP, VAR_XV], &[VAR_XF])?;
    let bound = expected_log_posterior_ratio(j, q_theta)?;
    let gap_formula = expected_kl_future_posterior(j, q_theta)?;
    Ok(BoundReport {
        exact_value: exact,
        bound_value: bound,
        gap: bound - exact,
        gap_formula_value: gap_formula,
    })
}

/// `E[ln p(theta|x_p,x_v) / q(theta)]` under the true joint.
fn expected_log_posterior_ratio(j: &JointTable, q_theta: &FiniteDistribution) -> Result<Nats> {
    let pdt = j.marginalize(&[VAR_XP, VAR_XV, VAR_THETA])?;
    let pd = pdt.marginalize(&[VAR_XP, VAR_XV])?;
    let (na, nb, nt) = (
        pdt.variables()[0].alphabet.size(),
        pdt.variables()[1].alphabet.size(),
        pdt.variables()[2].alphabet.size(),
    );
    let mut total = 0.0;
    for a in 0..na {
        for b in 0..nb {
            let mass = pd.prob(&[a, b]);
            if mass <= 0.0 {
                continue;
            }
            for t in 0..nt {
                let p = pdt.prob(&[a, b, t]);
                if p > 0.0 {
                    let q = q_theta.prob(t);
                    if q <= 0.0 {
                        return Err(support_violation_theta(q_theta, t));
                    }
                    total += p * ((p / mass) / q).ln();
                }
            }
        }
    }
    Ok(total)
}

/// `E_{x_f}[KL(p(theta|x_f) || q)]`.
fn expected_kl_future_posterior(j: &JointTable, q_theta: &FiniteDistribution) -> Result<Nats> {
    let pft = j.marginalize(&[VAR_XF, VAR_THETA])?;
    let pf = pft.marginalize(&[VAR_XF])?;
    let (nf, nt) = (
        pft.variables()[0].alphabet.size(),
        pft.variables()[1].alphabet.size(),
    );
    let mut total = 0.0;
    for f in 0..nf {
        let mass = pf.prob(&[f]);
        if mass <= 0.0 {
            continue;
        }
        for t in 0..nt {
            let p = pft.prob(&[f, t]);
            if p > 0.0 {
                let q = q_theta.prob(t);
                if q <= 0.0 {
                    return Err(support_violation_theta(q_theta, t));
                }
                total += p * ((p / mass) / q).ln();
            }
        }
    }
    Ok(total)
}

fn support_violation_theta(q_theta: &FiniteDistribution, t: usize) -> Error {
    Error::SupportViolation(format!(
        "q(theta = {}) = 0 where the posterior has positive mass",
        q_theta.alphabet().symbol(t)
    ))
}

/// Lower bound `I(theta; x_p) >= H(x_p) + E[ln q(x_p|theta)]`, with gap
/// `E[KL(p(x_p|theta) || q(x_p|theta))]`.
pub fn lower_bound_mi_train(fj: &FullJoint, f: &VariationalFamily) -> Result<BoundReport> {
    check_family(fj, f)?;
    let j = fj.joint();
    let w = fj.world();
    let exact = finite_info::mutual_information(j, &[VAR_THETA], &[VAR_XP])?;
    let h_xp = finite_info::entropy_of(j, &[VAR_XP])?;

    let pat = j.marginalize(&[VAR_XP, VAR_THETA])?;
    let pt = pat.marginalize(&[VAR_THETA])?;
    let (na, nt) = (
        pat.variables()[0].alphabet.size(),
        pat.variables()[1].alphabet.size(),
    );
    let xs = w.x_alphabet().size();
    let mut e_loglik = 0.0;
    let mut gap_formula = 0.0;
    for a in 0..na {
        let tuple = decode_tuple(a, w.m(), xs);
        for t in 0..nt {
            let p = pat.prob(&[a, t]);
            if p > 0.0 {
                let ll = f.log_lik_tuple(t, &tuple);
                if !ll.is_finite() {
                    return Err(Error::SupportViolation(format!(
                        "q(x_p = {} | theta = {}) = 0 on the support of p",
                        w.xp_alphabet().symbol(a),
                        f.theta_alphabet().symbol(t)
                    )));
                }
                e_loglik += p * ll;
                // p(x_p|theta) ln [ p(x_p|theta) / q(x_p|theta) ], weighted by p(theta)
                gap_formula += p * ((p / pt.prob(&[t])).ln() - ll);
            }
        }
    }
    let bound = h_xp + e_loglik;
    Ok(BoundReport {
        exact_value: exact,
        bound_value: bound,
        gap: exact - bound,
        gap_formula_value: gap_formula,
    })
}

/// Lower bound `I(theta; x_v | x_p) >= H(x_v|x_p) + E[ln q(x_v|x_p,theta)]`,
/// with gap `E[KL(p(x_v|x_p,theta) || q(x_v|x_p,theta))]`.
pub fn lower_bound_mi_validation(fj: &FullJoint, f: &VariationalFamily) -> Result<BoundReport> {
    check_family(fj, f)?;
    let j = fj.joint();
    let w = fj.world();
    let exact = finite_info::conditional_mutual_information(j, &[VAR_THETA], &[VAR_XV], &[VAR_XP])?;
    let h_val = finite_info::conditional_entropy(j, &[VAR_XV], &[VAR_XP])?;

    let pabt = j.marginalize(&[VAR_XP, VAR_XV, VAR_THETA])?;
    let pat = pabt.marginalize(&[VAR_XP, VAR_THETA])?;
    let (na, nb, nt) = (
        pabt.variables()[0].alphabet.size(),
        pabt.variables()[1].alphabet.size(),
        pabt.variables()[2].alphabet.size(),
    );
    let xs = w.x_alphabet().size();
    let mut e_loglik = 0.0;
    let mut gap_formula = 0.0;
    for a in 0..na {
        let xp = decode_tuple(a, w.m(), xs);
        for b in 0..nb {
            let xv = decode_tuple(b, w.v(), xs);
            for t in 0..nt {
                let p = pabt.prob(&[a, b, t]);
                if p > 0.0 {
                    let ll = f.log_val_lik_tuple(&xp, t, &xv);
                    if !ll.is_finite() {
                        return Err(Error::SupportViolation(format!(
                            "q(x_v = {} | x_p = {}, theta = {}) = 0 on the support of p",
                            w.xv_alphabet().symbol(b),
                            w.xp_alphabet().symbol(a),
                            f.theta_alphabet().symbol(t)
                        )));
                    }
                    e_loglik += p * ll;
                    gap_formula += p * ((p / pat.prob(&[a, t])).ln() - ll);
                }
            }
        }
    }
    let bound = h_val + e_loglik;
    Ok(BoundReport {
        exact_value: exact,
        bound_value: bound,
        gap: exact - bound,
        gap_formula_value: gap_formula,
    })
}

/// Upper bound on the full objective for temperatures `t`, combining the
/// conditional-information upper bound with the two likelihood lower bounds.
pub fn combined_upper_bound(
    fj: &FullJoint,
    f: &VariationalFamily,
    t: Temperatures,
) -> Result<CombinedBoundReport> {
    let exact = exact_objective(fj, t)?;
    let up = upper_bound_conditional_mi(fj, f.q_theta())?;
    let train = lower_bound_mi_train(fj, f)?;
    let val = lower_bound_mi_validation(fj, f)?;

    let j = fj.joint();
    let h_xp = finite_info::entropy_of(j, &[VAR_XP])?;
    let h_xv = finite_info::entropy_of(j, &[VAR_XV])?;
    let h_xv_given_xp = finite_info::conditional_entropy(j, &[VAR_XV], &[VAR_XP])?;
    let i_xp_xv = finite_info::mutual_information(j, &[VAR_XP], &[VAR_XV])?;

    // bound = E[ln p/q] - beta E[ln q(x_p|theta)] - gamma E[ln q(x_v|x_p,theta)]
    //         - beta H(x_p) - {constant}
    let e_loglik_train = train.bound_value - h_xp;
    let e_loglik_val = val.bound_value - h_xv_given_xp;
    let common = up.bound_value - t.beta * e_loglik_train - t.gamma * e_loglik_val - t.beta * h_xp;
    let bound_conditional_form = common - t.gamma * h_xv_given_xp;
    let bound_expanded_form = common - t.gamma * h_xv + t.gamma * i_xp_xv;

    let gap = bound_conditional_form - exact;
    let gap_formula =
        up.gap_formula_value + t.beta * train.gap_formula_value + t.gamma * val.gap_formula_value;
    Ok(CombinedBoundReport {
        report: BoundReport {
            exact_value: exact,
            bound_value: bound_conditional_form,
            gap,
            gap_formula_value: gap_formula,
        },
        bound_conditional_form,
        bound_expanded_form,
    })
}

/// Evaluates the variational objective for an arbitrary channel
/// `c(theta|x_p,x_v)` against the optimum tempered rows.
pub fn variational_objective(
    w: &World,
    f: &VariationalFamily,
    t: Temperatures,
    c: &Channel,
) -> Result<VariationalValue> {
    let pd = data_marginal(w)?;
    let xs = w.x_alphabet().size();
    let (na, nb) = (
        pd.variables()[0].alphabet.size(),
        pd.variables()[1].alphabet.size(),
    );
    let expected_inputs = [w.xp_alphabet(), w.xv_alphabet()];
    if c.inputs().len() != 2
        || c.inputs()[0].alphabet != expected_inputs[0]
        || c.inputs()[1].alphabet != expected_inputs[1]
    {
        return Err(Error::InvalidChannel(
            "variational objective requires a channel on (x_p, x_v)".into(),
        ));
    }
    if c.output() != f.theta_alphabet() {
        return Err(Error::AlphabetMismatch {
            expected: f.theta_alphabet().name().into(),
            got: c.output().name().into(),
        });
    }

    let mut raw = 0.0;
    let mut kl_form = 0.0;
    let mut log_partition_mean = 0.0;
    for a in 0..na {
        let xp = decode_tuple(a, w.m(), xs);
        for b in 0..nb {
            let mass = pd.prob(&[a, b]);
            if mass <= 0.0 {
                continue;
            }
            let xv = decode_tuple(b, w.v(), xs);
            let row = c.row_for(&[a, b]);
            let opt = validated_posterior(f, &xp, &xv, t.beta, t.gamma)?;
            let log_z = log_partition_validated(f, &xp, &xv, t.beta, t.gamma)?;
            log_partition_mean += mass * log_z;
            for ti in 0..row.probs().len() {
                let ct = row.prob(ti);
                if ct <= 0.0 {
                    continue;
                }
                let q = f.q_theta().prob(ti);
                if q <= 0.0 {
                    return Err(support_violation_theta(f.q_theta(), ti));
                }
                let mut term = (ct / q).ln();
                if t.beta > 0.0 {
                    let ll = f.log_lik_tuple(ti, &xp);
                    if !ll.is_finite() {
                        return Err(Error::SupportViolation(format!(
                            "q(x_p = {} | theta = {}) = 0 where the channel puts mass",
                            w.xp_alphabet().symbol(a),
                            f.theta_alphabet().symbol(ti)
                        )));
                    }
                    term -= t.beta * ll;
                }
                if t.gamma > 0.0 && !xv.is_empty() {
                    let lv = f.log_val_lik_tuple(&xp, ti, &xv);
                    if !lv.is_finite() {
                        return Err(Error::SupportViolation(format!(
                            "q(x_v = {} | x_p = {}, theta = {}) = 0 where the channel puts mass",
                            w.xv_alphabet().symbol(b),
                            w.xp_alphabet().symbol(a),
                            f.theta_alphabet().symbol(ti)
                        )));
                    }
                    term -= t.gamma * lv;
                }
                raw += mass * ct * term;
                let o = opt.prob(ti);
                if o <= 0.0 {
                    return Err(Error::SupportViolation(format!(
                        "channel puts mass on theta = {} outside the tempered row's support",
                        f.theta_alphabet().symbol(ti)
                    )));
                }
                kl_form += mass * ct * (ct / o).ln();
            }
        }
    }
    Ok(VariationalValue {
        raw,
        kl_form,
        log_partition_mean,
    })
}

fn check_family(fj: &FullJoint, f: &VariationalFamily) -> Result<()> {
    if f.theta_alphabet() != fj.theta_alphabet() {
        return Err(Error::AlphabetMismatch {
            expected: fj.theta_alphabet().name().into(),
            got: f.theta_alphabet().name().into(),
        });
    }
    if f.x_alphabet() != fj.world().x_alphabet() {
        return Err(Error::AlphabetMismatch {
            expected: fj.world().x_alphabet().name().into(),
            got: f.x_alphabet().name().into(),
        });
    }
    if f.m() != fj.world().m() {
        return Err(Error::InvalidChannel(format!(
            "family is built for train tuples of length {}, world has M = {}",
            f.m(),
            fj.world().m()
        )));
    }
    Ok(())
}

/// Convenience: full joint under the optimum channel for `(f, t)`.
pub fn optimum_joint(w: &World, f: &VariationalFamily, t: Temperatures) -> Result<FullJoint> {
    let c = crate::posterior::posterior_channel(f, w, t.beta, t.gamma)?;
    build_joint(w, &c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::demo;
    use crate::finite_info::{Alphabet, Variable};
    use crate::posterior::posterior_channel;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ignoring_joint() -> (World, FullJoint, FiniteDistribution) {
        let w = demo::bernoulli_world();
        let theta = Alphabet::indexed("theta", 2).unwrap();
        let row = FiniteDistribution::new(theta.clone(), vec![0.25, 0.75]).unwrap();
        let chan = Channel::constant(
            vec![
                Variable::new(VAR_XP, w.xp_alphabet()),
                Variable::new(VAR_XV, w.xv_alphabet()),
            ],
            row.clone(),
        )
        .unwrap();
        let fj = build_joint(&w, &chan).unwrap();
        (w, fj, row)
    }

    #[test]
    fn ignoring_channel_scores_zero() {
        let (_, fj, row) = ignoring_joint();
        for (beta, gamma) in [(0.0, 0.0), (1.0, 1.0), (2.5, 0.5)] {
            let t = Temperatures::new(beta, gamma).unwrap();
            let obj = exact_objective(&fj, t).unwrap();
            assert!(obj.abs() < 1e-12, "objective {obj} at beta={beta}");
        }
        let up = upper_bound_conditional_mi(&fj, &row).unwrap();
        assert!(up.exact_value.abs() < 1e-12);
        assert!(up.bound_value.abs() < 1e-12);
        assert!(up.gap.abs() < 1e-12);
        assert!(up.gap_formula_value.abs() < 1e-12);
    }

    #[test]
    fn exact_objective_beta_one_rearranges() {
        // V = 0, beta = 1: objective equals -I(theta; x_f).
        let w = demo::bernoulli_world_no_validation();
        let f = demo::bernoulli_family(&w);
        let c = posterior_channel(&f, &w, 1.0, 1.0).unwrap();
        let fj = build_joint(&w, &c).unwrap();
        let t = Temperatures::new(1.0, 1.0).unwrap();
        let obj = exact_objective(&fj, t).unwrap();
        let i_theta_xf =
            finite_info::mutual_information(fj.joint(), &[VAR_THETA], &[VAR_XF]).unwrap();
        assert!((obj + i_theta_xf).abs() < 1e-10);
    }

    #[test]
    fn upper_bound_with_marginal_q() {
        let w = demo::bernoulli_world();
        let f = demo::bernoulli_family(&w);
        let c = posterior_channel(&f, &w, 1.5, 1.0).unwrap();
        let fj = build_joint(&w, &c).unwrap();
        let p_theta = fj
            .joint()
            .marginalize(&[VAR_THETA])
            .unwrap()
            .into_distribution()
            .unwrap();
        let rep = upper_bound_conditional_mi(&fj, &p_theta).unwrap();
        assert!(rep.gap >= -1e-10);
        assert!((rep.gap - rep.gap_formula_value).abs() < 1e-9);
    }

    #[test]
    fn lower_bound_train_uniform_family_closed_form() {
        let w = demo::bernoulli_world();
        let f = demo::bernoulli_family(&w);
        let c = posterior_channel(&f, &w, 1.0, 1.0).unwrap();
        let fj = build_joint(&w, &c).unwrap();
        let x = w.x_alphabet().clone();
        let theta = f.theta_alphabet().clone();
        let uniform_rows = vec![FiniteDistribution::uniform(x.clone()); theta.size()];
        let q_lik = Channel::new(vec![Variable::new("theta", theta)], x, uniform_rows).unwrap();
        let uf = VariationalFamily::factorized_for(&w, f.q_theta().clone(), q_lik).unwrap();
        let rep = lower_bound_mi_train(&fj, &uf).unwrap();
        let h_xp = finite_info::entropy_of(fj.joint(), &[VAR_XP]).unwrap();
        let expect = h_xp - w.m() as f64 * (w.x_alphabet().size() as f64).ln();
        assert!((rep.bound_value - expect).abs() < 1e-10);
        assert!(rep.exact_value >= rep.bound_value - 1e-10);
        assert!((rep.gap - rep.gap_formula_value).abs() < 1e-9);
    }

    #[test]
    fn lower_bound_validation_empty_split_is_zero() {
        let w = demo::bernoulli_world_no_validation();
        let f = demo::bernoulli_family(&w);
        let c = posterior_channel(&f, &w, 1.0, 1.0).unwrap();
        let fj = build_joint(&w, &c).unwrap();
        let rep = lower_bound_mi_validation(&fj, &f).unwrap();
        assert!(rep.exact_value.abs() < 1e-12);
        assert!(rep.bound_value.abs() < 1e-12);
        assert!(rep.gap_formula_value.abs() < 1e-12);
    }

    #[test]
    fn random_families_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let w = demo::bernoulli_world();
        for trial in 0..25 {
            let f = demo::random_family(&w, 2 + trial % 2, &mut rng);
            let beta = rng.random::<f64>() * 2.0;
            let gamma = rng.random::<f64>() * 2.0;
            let c = posterior_channel(&f, &w, beta, gamma).unwrap();
            let fj = build_joint(&w, &c).unwrap();

            let up = upper_bound_conditional_mi(&fj, f.q_theta()).unwrap();
            assert!(up.gap >= -1e-10, "trial {trial}");
            assert!((up.gap - up.gap_formula_value).abs() < 1e-9);

            let train = lower_bound_mi_train(&fj, &f).unwrap();
            assert!(train.gap >= -1e-10);
            assert!((train.gap - train.gap_formula_value).abs() < 1e-9);

            let val = lower_bound_mi_validation(&fj, &f).unwrap();
            assert!(val.gap >= -1e-10);
            assert!((val.gap - val.gap_formula_value).abs() < 1e-9);
        }
    }

    #[test]
    fn combined_bound_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let w = demo::bernoulli_world();
        for _ in 0..10 {
            let f = demo::random_family(&w, 3, &mut rng);
            let t =
                Temperatures::new(1.0 + rng.random::<f64>(), 1.0 + rng.random::<f64>()).unwrap();
            let fj = optimum_joint(&w, &f, t).unwrap();
            let rep = combined_upper_bound(&fj, &f, t).unwrap();
            assert!((rep.bound_conditional_form - rep.bound_expanded_form).abs() < 1e-10);
            assert!(rep.report.gap >= -1e-10);
            assert!((rep.report.gap - rep.report.gap_formula_value).abs() < 1e-9);
        }
    }

    #[test]
    fn combined_bound_tight_case() {
        // Single-phi world with M = 1, V = 0: the future is independent of
        // everything, so q_theta = p(theta) kills the upper-bound gap, and
        // with one-symbol train tuples q(x|theta) = p(x|theta) kills the
        // likelihood gap. The bound is then tight at a nonzero objective.
        let phi = Alphabet::new("phi", vec!["only".into()]).unwrap();
        let x = Alphabet::new("x", vec!["0".into(), "1".into()]).unwrap();
        let prior = FiniteDistribution::point_mass(phi.clone(), 0);
        let emission = Channel::new(
            vec![Variable::new("phi", phi)],
            x.clone(),
            vec![FiniteDistribution::new(x.clone(), vec![0.35, 0.65]).unwrap()],
        )
        .unwrap();
        let w = World::new(prior, emission, 1, 0, 1).unwrap();

        let theta = Alphabet::indexed("theta", 2).unwrap();
        let chan = Channel::new(
            vec![
                Variable::new(VAR_XP, w.xp_alphabet()),
                Variable::new(VAR_XV, w.xv_alphabet()),
            ],
            theta.clone(),
            vec![
                FiniteDistribution::new(theta.clone(), vec![0.9, 0.1]).unwrap(),
                FiniteDistribution::new(theta.clone(), vec![0.2, 0.8]).unwrap(),
            ],
        )
        .unwrap();
        let fj = build_joint(&w, &chan).unwrap();
        let j = fj.joint();

        let q_theta = j
            .marginalize(&[VAR_THETA])
            .unwrap()
            .into_distribution()
            .unwrap();
        // q(x|theta) = p(x_p|theta), recovered from the joint.
        let lik_rows: Vec<FiniteDistribution> = (0..2)
            .map(|t| {
                j.condition(&[VAR_XP], &[(VAR_THETA, t)])
                    .unwrap()
                    .into_distribution()
                    .unwrap()
                    .probs()
                    .to_vec()
            })
            .map(|probs| FiniteDistribution::new(w.x_alphabet().clone(), probs).unwrap())
            .collect();
        let q_lik = Channel::new(
            vec![Variable::new("theta", theta)],
            w.x_alphabet().clone(),
            lik_rows,
        )
        .unwrap();
        let f = VariationalFamily::factorized_for(&w, q_theta, q_lik).unwrap();

        let t = Temperatures::new(2.0, 1.0).unwrap();
        let rep = combined_upper_bound(&fj, &f, t).unwrap();
        assert!(
            rep.report.exact_value.abs() > 0.01,
            "case should be nontrivial"
        );
        assert!(rep.report.gap.abs() < 1e-9, "gap {}", rep.report.gap);
        assert!(rep.report.gap_formula_value.abs() < 1e-9);
    }

    #[test]
    fn variational_objective_optimum_is_minimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(4242);
        let w = demo::bernoulli_world();
        let f = demo::bernoulli_family(&w);
        let t = Temperatures::new(1.5, 1.25).unwrap();
        let opt = posterior_channel(&f, &w, t.beta, t.gamma).unwrap();
        let at_opt = variational_objective(&w, &f, t, &opt).unwrap();
        assert!(at_opt.kl_form.abs() <= 1e-12);
        assert!((at_opt.raw + at_opt.log_partition_mean).abs() < 1e-9);
        for _ in 0..20 {
            let perturbed = demo::perturb_channel(&opt, 0.3, &mut rng);
            let v = variational_objective(&w, &f, t, &perturbed).unwrap();
            assert!(v.raw >= at_opt.raw - 1e-10);
            assert!((v.raw - (v.kl_form - v.log_partition_mean)).abs() < 1e-9);
        }
    }

    #[test]
    fn variational_objective_zero_temperatures_at_prior_rows() {
        let w = demo::bernoulli_world();
        let f = demo::bernoulli_family(&w);
        let t = Temperatures::new(0.0, 0.0).unwrap();
        let prior_rows = Channel::constant(
            vec![
                Variable::new(VAR_XP, w.xp_alphabet()),
                Variable::new(VAR_XV, w.xv_alphabet()),
            ],
            f.q_theta().clone(),
        )
        .unwrap();
        let v = variational_objective(&w, &f, t, &prior_rows).unwrap();
        assert!(v.raw.abs() < 1e-12);
        assert!(v.kl_form.abs() < 1e-12);
    }
}
