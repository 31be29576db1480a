//! Variational family and its closed-form optimum channels: the tempered
//! posterior `q(theta) q(x_p|theta)^beta / Z_beta` and its validation-set
//! extension `q(theta) q(x_p|theta)^beta q(x_v|x_p,theta)^gamma / Z_{beta,gamma}`.
//!
//! Partition functions are evaluated in the log domain with max-shifted
//! exponential summation; everything else stays linear.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::finite_info::{Alphabet, Channel, FiniteDistribution, Variable};
use crate::world::{encode_tuple, World, VAR_XP, VAR_XV};

/// The `(q(theta), q(x|theta), q(x|x_p,theta))` triple. Tuple likelihoods
/// are per-symbol products: `q(x_p|theta) = prod_i q(x_i|theta)` and
/// `q(x_v|x_p,theta) = prod_j q(v_j|x_p,theta)`.
#[derive(Debug, Clone, Serialize)]
pub struct VariationalFamily {
    q_theta: FiniteDistribution,
    q_lik: Channel,
    q_val_lik: Channel,
    /// Train-tuple length implied by the q_val_lik input axis.
    m: usize,
}

impl VariationalFamily {
    pub fn new(q_theta: FiniteDistribution, q_lik: Channel, q_val_lik: Channel) -> Result<Self> {
        let theta = q_theta.alphabet();
        if q_lik.inputs().len() != 1 || q_lik.inputs()[0].alphabet != *theta {
            return Err(Error::InvalidChannel(
                "q_lik must condition on theta alone".into(),
            ));
        }
        if q_val_lik.inputs().len() != 2 {
            return Err(Error::InvalidChannel(
                "q_val_lik must condition on (x_p, theta)".into(),
            ));
        }
        if q_val_lik.inputs()[1].alphabet != *theta {
            return Err(Error::InvalidChannel(
                "q_val_lik second input must be theta".into(),
            ));
        }
        if q_val_lik.output() != q_lik.output() {
            return Err(Error::AlphabetMismatch {
                expected: q_lik.output().name().into(),
                got: q_val_lik.output().name().into(),
            });
        }
        let xs = q_lik.output().size();
        let xp_size = q_val_lik.inputs()[0].alphabet.size();
        let mut m = 0usize;
        let mut n = 1usize;
        while n < xp_size {
            n *= xs;
            m += 1;
        }
        if n != xp_size {
            return Err(Error::InvalidChannel(format!(
                "q_val_lik x_p axis has {xp_size} tuples, not a power of |x| = {xs}"
            )));
        }
        Ok(Self {
            q_theta,
            q_lik,
            q_val_lik,
            m,
        })
    }

    /// Family whose validation likelihood ignores `x_p`: every row of
    /// `q(x|x_p,theta)` is a copy of `q(x|theta)`.
    pub fn factorized_for(w: &World, q_theta: FiniteDistribution, q_lik: Channel) -> Result<Self> {
        let theta = q_theta.alphabet().clone();
        let xp_alpha = w.xp_alphabet();
        let mut rows = Vec::with_capacity(xp_alpha.size() * theta.size());
        for _a in 0..xp_alpha.size() {
            for t in 0..theta.size() {
                rows.push(q_lik.row_for(&[t]).clone());
            }
        }
        let q_val_lik = Channel::new(
            vec![
                Variable::new(VAR_XP, xp_alpha),
                Variable::new("theta", theta),
            ],
            q_lik.output().clone(),
            rows,
        )?;
        Self::new(q_theta, q_lik, q_val_lik)
    }

    pub fn q_theta(&self) -> &FiniteDistribution {
        &self.q_theta
    }

    pub fn q_lik(&self) -> &Channel {
        &self.q_lik
    }

    pub fn q_val_lik(&self) -> &Channel {
        &self.q_val_lik
    }

    pub fn theta_alphabet(&self) -> &Alphabet {
        self.q_theta.alphabet()
    }

    pub fn x_alphabet(&self) -> &Alphabet {
        self.q_lik.output()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// `ln q(x_p|theta)` for a train tuple; `-inf` when a factor is zero.
    pub fn log_lik_tuple(&self, theta: usize, tuple: &[usize]) -> f64 {
        let row = self.q_lik.row_for(&[theta]);
        tuple.iter().map(|&x| safe_ln(row.prob(x))).sum()
    }

    /// `ln q(x_v|x_p,theta)` for a validation tuple; `-inf` on zero factors.
    pub fn log_val_lik_tuple(&self, xp: &[usize], theta: usize, tuple: &[usize]) -> f64 {
        let a = encode_tuple(xp, self.x_alphabet().size());
        let row = self.q_val_lik.row_for(&[a, theta]);
        tuple.iter().map(|&x| safe_ln(row.prob(x))).sum()
    }

    fn check_train_tuple(&self, xp: &[usize]) -> Result<()> {
        if xp.len() != self.m {
            return Err(Error::TupleLengthMismatch {
                expected: self.m,
                got: xp.len(),
            });
        }
        Ok(())
    }
}

fn safe_ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln()
    } else {
        f64::NEG_INFINITY
    }
}

/// Temperatures applied to the train and validation likelihoods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Temperatures {
    pub beta: f64,
    pub gamma: f64,
}

impl Temperatures {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        for (name, value) in [("beta", beta), ("gamma", gamma)] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::TemperatureOutOfRange {
                    name,
                    value,
                    reason: "must be finite and nonnegative".into(),
                });
            }
        }
        Ok(Self { beta, gamma })
    }

    /// Multiplier-form temperatures; rejects values below 1 instead of
    /// clamping, since `beta = 1 + mu` and `gamma = 1 + nu` with `mu, nu >= 0`.
    pub fn kkt(beta: f64, gamma: f64) -> Result<Self> {
        let t = Self::new(beta, gamma)?;
        for (name, value) in [("beta", beta), ("gamma", gamma)] {
            if value < 1.0 {
                return Err(Error::TemperatureOutOfRange {
                    name,
                    value,
                    reason: "multiplier form requires a value of at least 1".into(),
                });
            }
        }
        Ok(t)
    }
}

/// Per-theta log weights `ln[q(theta) q(x_p|theta)^beta q(x_v|x_p,theta)^gamma]`.
///
/// A zero likelihood raised to the power zero contributes a factor of one,
/// so zero temperatures skip their likelihood term entirely.
fn log_weights(
    f: &VariationalFamily,
    xp: &[usize],
    xv: &[usize],
    beta: f64,
    gamma: f64,
) -> Vec<f64> {
    let n = f.theta_alphabet().size();
    let mut lw = Vec::with_capacity(n);
    for t in 0..n {
        let mut w = safe_ln(f.q_theta().prob(t));
        if beta > 0.0 && w > f64::NEG_INFINITY {
            w += beta * f.log_lik_tuple(t, xp);
        }
        if gamma > 0.0 && !xv.is_empty() && w > f64::NEG_INFINITY {
            w += gamma * f.log_val_lik_tuple(xp, t, xv);
        }
        lw.push(w);
    }
    lw
}

fn log_sum_exp(lw: &[f64]) -> Option<f64> {
    let max = lw
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let sum: f64 = lw
        .iter()
        .filter(|v| v.is_finite())
        .map(|&v| (v - max).exp())
        .sum();
    Some(max + sum.ln())
}

/// `ln Z_beta(x_p) = ln sum_psi q(psi) q(x_p|psi)^beta`.
pub fn log_partition(f: &VariationalFamily, xp: &[usize], beta: f64) -> Result<f64> {
    log_partition_validated(f, xp, &[], beta, 0.0)
}

/// `ln Z_{beta,gamma}(x_p, x_v) = ln sum_psi q(psi) q(x_p|psi)^beta q(x_v|x_p,psi)^gamma`.
pub fn log_partition_validated(
    f: &VariationalFamily,
    xp: &[usize],
    xv: &[usize],
    beta: f64,
    gamma: f64,
) -> Result<f64> {
    check_temps(beta, gamma)?;
    f.check_train_tuple(xp)?;
    let lw = log_weights(f, xp, xv, beta, gamma);
    log_sum_exp(&lw).ok_or_else(|| degenerate(f, xp, xv))
}

/// The tempered posterior `q(theta) q(x_p|theta)^beta / Z_beta(x_p)`.
/// At `beta = 1` this is the Bayes posterior for the family.
pub fn tempered_posterior(
    f: &VariationalFamily,
    xp: &[usize],
    beta: f64,
) -> Result<FiniteDistribution> {
    validated_posterior(f, xp, &[], beta, 0.0)
}

/// The validation-augmented tempered posterior
/// `q(theta) q(x_p|theta)^beta q(x_v|x_p,theta)^gamma / Z_{beta,gamma}`.
/// At `beta = gamma = 1` this is Bayesian inference on both data sets.
pub fn validated_posterior(
    f: &VariationalFamily,
    xp: &[usize],
    xv: &[usize],
    beta: f64,
    gamma: f64,
) -> Result<FiniteDistribution> {
    check_temps(beta, gamma)?;
    f.check_train_tuple(xp)?;
    if beta == 0.0 && (gamma == 0.0 || xv.is_empty()) {
        return Ok(f.q_theta().clone());
    }
    let lw = log_weights(f, xp, xv, beta, gamma);
    let log_z = log_sum_exp(&lw).ok_or_else(|| degenerate(f, xp, xv))?;
    let mut probs: Vec<f64> = lw
        .iter()
        .map(|&w| {
            if w.is_finite() {
                (w - log_z).exp()
            } else {
                0.0
            }
        })
        .collect();
    let mass: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= mass;
    }
    FiniteDistribution::new(f.theta_alphabet().clone(), probs)
}

fn check_temps(beta: f64, gamma: f64) -> Result<()> {
    Temperatures::new(beta, gamma).map(|_| ())
}

fn degenerate(f: &VariationalFamily, xp: &[usize], xv: &[usize]) -> Error {
    let xp_label: Vec<&str> = xp.iter().map(|&i| f.x_alphabet().symbol(i)).collect();
    let xv_label: Vec<&str> = xv.iter().map(|&i| f.x_alphabet().symbol(i)).collect();
    Error::DegenerateSupport(format!(
        "every theta has zero weight at x_p = ({}), x_v = ({})",
        xp_label.join(","),
        xv_label.join(",")
    ))
}

/// The explicit model joint `q(theta) q(x_p|theta) q(x_v|x_p,theta)` as a
/// linear-domain table over `(theta, x_p, x_v)`. Conditioning it on the data
/// gives an independent route to the `beta = gamma = 1` posterior.
pub fn q_model_joint(f: &VariationalFamily, w: &World) -> Result<crate::finite_info::JointTable> {
    if f.x_alphabet() != w.x_alphabet() || f.m() != w.m() {
        return Err(Error::AlphabetMismatch {
            expected: w.x_alphabet().name().into(),
            got: f.x_alphabet().name().into(),
        });
    }
    let xs = w.x_alphabet().size();
    let variables = vec![
        Variable::new("theta", f.theta_alphabet().clone()),
        Variable::new(VAR_XP, w.xp_alphabet()),
        Variable::new(VAR_XV, w.xv_alphabet()),
    ];
    crate::finite_info::JointTable::from_fn(variables, |idx| {
        let (t, a, b) = (idx[0], idx[1], idx[2]);
        let xp = crate::world::decode_tuple(a, w.m(), xs);
        let xv = crate::world::decode_tuple(b, w.v(), xs);
        let lik: f64 = xp
            .iter()
            .map(|&x| f.q_lik().row_for(&[t]).prob(x))
            .product();
        let val: f64 = xv
            .iter()
            .map(|&x| f.q_val_lik().row_for(&[a, t]).prob(x))
            .product();
        f.q_theta().prob(t) * lik * val
    })
}

/// Tabulates the optimum posterior for every `(x_p, x_v)` tuple of `w`,
/// producing the channel consumed by `world::build_joint`.
pub fn posterior_channel(
    f: &VariationalFamily,
    w: &World,
    beta: f64,
    gamma: f64,
) -> Result<Channel> {
    if f.x_alphabet() != w.x_alphabet() {
        return Err(Error::AlphabetMismatch {
            expected: w.x_alphabet().name().into(),
            got: f.x_alphabet().name().into(),
        });
    }
    if f.m() != w.m() {
        return Err(Error::InvalidChannel(format!(
            "family is built for train tuples of length {}, world has M = {}",
            f.m(),
            w.m()
        )));
    }
    let xp_alpha = w.xp_alphabet();
    let xv_alpha = w.xv_alphabet();
    let xs = w.x_alphabet().size();
    let mut rows = Vec::with_capacity(xp_alpha.size() * xv_alpha.size());
    for a in 0..xp_alpha.size() {
        let xp = crate::world::decode_tuple(a, w.m(), xs);
        for b in 0..xv_alpha.size() {
            let xv = crate::world::decode_tuple(b, w.v(), xs);
            let row = validated_posterior(f, &xp, &xv, beta, gamma).map_err(|e| match e {
                Error::DegenerateSupport(msg) => Error::DegenerateSupport(format!(
                    "row (x_p = {:?}, x_v = {:?}): {msg}",
                    xp_alpha.symbol(a),
                    xv_alpha.symbol(b)
                )),
                other => other,
            })?;
            rows.push(row);
        }
    }
    Channel::new(
        vec![
            Variable::new(VAR_XP, xp_alpha),
            Variable::new(VAR_XV, xv_alpha),
        ],
        f.theta_alphabet().clone(),
        rows,
    )
}
