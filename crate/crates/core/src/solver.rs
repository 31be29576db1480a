//! Temperature sweeps of the optimum channels, complementary-slackness
//! reports against information thresholds, and a best-effort direct search
//! over channels for desk-scale cross-checks.

// Index-style loops are kept in the numeric kernels: the arrays are tiny and
// the subscripts mirror the summation indices.
#![allow(clippy::needless_range_loop)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bounds::{exact_objective, variational_objective};
use crate::error::{Error, Result};
use crate::finite_info::{Alphabet, Channel, FiniteDistribution, Variable};
use crate::posterior::{posterior_channel, Temperatures, VariationalFamily};
use crate::world::{build_joint, data_joint, information_report, World, VAR_XP, VAR_XV};
use crate::Nats;

/// One grid point of a temperature sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub beta: f64,
    pub gamma: f64,
    pub i_theta_xp: Nats,
    pub i_theta_xv_given_xp: Nats,
    pub i_theta_xf: Nats,
    pub exact_objective: Nats,
    pub variational_value: Nats,
}

/// Outcome of one grid point; errors are recorded without aborting the sweep.
#[derive(Debug)]
pub struct SweepRecord {
    pub beta: f64,
    pub gamma: f64,
    pub outcome: Result<SweepPoint>,
}

/// Default temperature grid `{1.0, 1.25, ..., 5.0}`.
pub fn default_grid() -> Vec<f64> {
    (0..=16).map(|i| 1.0 + 0.25 * i as f64).collect()
}

/// Evaluates the optimum channel at every `(beta, gamma)` pair, in grid
/// order. Per-point failures are recorded in the corresponding record.
pub fn sweep(
    w: &World,
    f: &VariationalFamily,
    beta_grid: &[f64],
    gamma_grid: &[f64],
) -> Result<Vec<SweepRecord>> {
    if beta_grid.is_empty() || gamma_grid.is_empty() {
        return Err(Error::InvalidWorld(
            "temperature grids must be nonempty".into(),
        ));
    }
    for &b in beta_grid.iter().chain(gamma_grid) {
        Temperatures::new(b, 0.0)?;
    }
    let mut records = Vec::with_capacity(beta_grid.len() * gamma_grid.len());
    for &beta in beta_grid {
        for &gamma in gamma_grid {
            let outcome = sweep_point(w, f, beta, gamma);
            records.push(SweepRecord {
                beta,
                gamma,
                outcome,
            });
        }
    }
    Ok(records)
}

fn sweep_point(w: &World, f: &VariationalFamily, beta: f64, gamma: f64) -> Result<SweepPoint> {
    let t = Temperatures::new(beta, gamma)?;
    let channel = posterior_channel(f, w, beta, gamma)?;
    let fj = build_joint(w, &channel)?;
    let report = information_report(&fj)?;
    let objective = exact_objective(&fj, t)?;
    let variational = variational_objective(w, f, t, &channel)?;
    Ok(SweepPoint {
        beta,
        gamma,
        i_theta_xp: report.i_theta_xp,
        i_theta_xv_given_xp: report.i_theta_xv_given_xp,
        i_theta_xf: report.i_theta_xf,
        exact_objective: objective,
        variational_value: variational.raw,
    })
}

/// CSV serialization of a sweep: fixed column set, 12 significant digits,
/// LF line endings, one `error` column that is empty on success.
pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(
        "beta,gamma,i_theta_xp,i_theta_xv_given_xp,i_theta_xf,exact_objective,variational_value,error\n",
    );
    for r in records {
        match &r.outcome {
            Ok(p) => {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},\n",
                    fmt(p.beta),
                    fmt(p.gamma),
                    fmt(p.i_theta_xp),
                    fmt(p.i_theta_xv_given_xp),
                    fmt(p.i_theta_xf),
                    fmt(p.exact_objective),
                    fmt(p.variational_value),
                ));
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                out.push_str(&format!("{},{},,,,,,{}\n", fmt(r.beta), fmt(r.gamma), msg));
            }
        }
    }
    out
}

/// 12 significant digits, '.' decimal separator.
pub fn fmt(v: f64) -> String {
    format!("{v:.11e}")
}

/// How a constraint was resolved against the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSelection {
    /// Strictly satisfied at the base point beta = gamma = 1; the KKT
    /// multiplier is zero.
    SlackAtBase,
    /// Not met at the base point; the smallest grid temperature whose
    /// achieved information meets the threshold.
    ActiveAt { temperature: f64 },
    /// No grid point meets the threshold.
    NotAchievable,
}

/// Complementary-slackness report for the two information thresholds.
#[derive(Debug, Clone, Serialize)]
pub struct KktReport {
    pub threshold_train: Nats,
    pub threshold_val: Nats,
    pub achieved_train: Nats,
    pub achieved_val: Nats,
    pub mu: f64,
    pub nu: f64,
    pub slackness_train: Nats,
    pub slackness_val: Nats,
    pub success: bool,
    pub train_selection: ConstraintSelection,
    pub val_selection: ConstraintSelection,
    pub selected_beta: f64,
    pub selected_gamma: f64,
}

/// Builds the KKT report from sweep points. Success means both thresholds
/// are strictly exceeded at beta = gamma = 1, in which case both multipliers
/// vanish and the Bayes channel is selected. Otherwise each unmet constraint
/// selects the smallest eligible grid temperature meeting it (lexicographic
/// beta then gamma), with multiplier `temperature - 1`.
pub fn kkt_report(points: &[SweepPoint], i0_train: Nats, i0_val: Nats) -> Result<KktReport> {
    let base = points
        .iter()
        .find(|p| p.beta == 1.0 && p.gamma == 1.0)
        .ok_or(Error::MissingBasePoint)?;

    let mut eligible: Vec<&SweepPoint> = points
        .iter()
        .filter(|p| p.beta >= 1.0 && p.gamma >= 1.0)
        .collect();
    eligible.sort_by(|a, b| {
        (a.beta, a.gamma)
            .partial_cmp(&(b.beta, b.gamma))
            .expect("grid temperatures are finite")
    });

    let train_ok = base.i_theta_xp > i0_train;
    let val_ok = base.i_theta_xv_given_xp > i0_val;
    let success = train_ok && val_ok;

    let (train_selection, mu, achieved_train, selected_beta) = if train_ok {
        (ConstraintSelection::SlackAtBase, 0.0, base.i_theta_xp, 1.0)
    } else {
        match eligible.iter().find(|p| p.i_theta_xp >= i0_train) {
            Some(p) => (
                ConstraintSelection::ActiveAt {
                    temperature: p.beta,
                },
                p.beta - 1.0,
                p.i_theta_xp,
                p.beta,
            ),
            None => (
                ConstraintSelection::NotAchievable,
                0.0,
                base.i_theta_xp,
                1.0,
            ),
        }
    };
    let (val_selection, nu, achieved_val, selected_gamma) = if val_ok {
        (
            ConstraintSelection::SlackAtBase,
            0.0,
            base.i_theta_xv_given_xp,
            1.0,
        )
    } else {
        match eligible.iter().find(|p| p.i_theta_xv_given_xp >= i0_val) {
            Some(p) => (
                ConstraintSelection::ActiveAt {
                    temperature: p.gamma,
                },
                p.gamma - 1.0,
                p.i_theta_xv_given_xp,
                p.gamma,
            ),
            None => (
                ConstraintSelection::NotAchievable,
                0.0,
                base.i_theta_xv_given_xp,
                1.0,
            ),
        }
    };

    Ok(KktReport {
        threshold_train: i0_train,
        threshold_val: i0_val,
        achieved_train,
        achieved_val,
        mu,
        nu,
        slackness_train: zero_normalize(mu * (i0_train - achieved_train)),
        slackness_val: zero_normalize(nu * (i0_val - achieved_val)),
        success,
        train_selection,
        val_selection,
        selected_beta,
        selected_gamma,
    })
}

fn zero_normalize(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Result of a direct channel search.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub channel: Channel,
    /// Achieved `I(theta;x_f) + mu I(theta;x_p) + nu I(theta;x_v|x_p)`.
    pub objective: Nats,
}

/// Search hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct SearchConfig {
    pub restarts: usize,
    pub steps: usize,
    pub initial_step: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            steps: 500,
            initial_step: 0.1,
        }
    }
}

/// Projected-gradient ascent with random restarts over the product of row
/// simplices, maximizing `I(theta;x_f) + mu I(theta;x_p) + nu I(theta;x_v|x_p)`.
/// The first restart starts from the deterministic relabeling channel
/// `theta = d mod |theta|`; the rest start from random interior points.
/// Deterministic given the seed; best-effort, no convergence guarantee.
pub fn search_channels(
    w: &World,
    theta: &Alphabet,
    mu: f64,
    nu: f64,
    cfg: SearchConfig,
    seed: u64,
) -> Result<SearchResult> {
    if mu < 0.0 || nu < 0.0 {
        return Err(Error::TemperatureOutOfRange {
            name: if mu < 0.0 { "mu" } else { "nu" },
            value: if mu < 0.0 { mu } else { nu },
            reason: "multipliers must be nonnegative".into(),
        });
    }
    let problem = SearchProblem::new(w, theta.size(), mu, nu)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = problem.p_d.len();
    let nt = theta.size();

    let mut best_rows: Option<Vec<Vec<f64>>> = None;
    let mut best_obj = f64::NEG_INFINITY;
    for restart in 0..cfg.restarts.max(1) {
        let mut rows: Vec<Vec<f64>> = if restart == 0 {
            (0..nd)
                .map(|d| {
                    let mut row = vec![0.0; nt];
                    row[d % nt] = 1.0;
                    row
                })
                .collect()
        } else {
            (0..nd)
                .map(|_| {
                    let mut row: Vec<f64> = (0..nt)
                        .map(|_| -rng.random::<f64>().max(1e-12).ln())
                        .collect();
                    let mass: f64 = row.iter().sum();
                    row.iter_mut().for_each(|v| *v /= mass);
                    row
                })
                .collect()
        };
        let mut obj = problem.objective(&rows);
        let mut step = cfg.initial_step;
        for _ in 0..cfg.steps {
            if step < 1e-12 {
                break;
            }
            let grad = problem.gradient(&rows);
            let mut proposal = rows.clone();
            for d in 0..nd {
                for t in 0..nt {
                    proposal[d][t] += step * grad[d][t];
                }
                project_to_simplex(&mut proposal[d]);
            }
            let new_obj = problem.objective(&proposal);
            if new_obj > obj {
                rows = proposal;
                obj = new_obj;
            } else {
                step *= 0.5;
            }
        }
        if obj > best_obj {
            best_obj = obj;
            best_rows = Some(rows);
        }
    }

    let rows = best_rows.expect("at least one restart");
    let dists: Vec<FiniteDistribution> = rows
        .into_iter()
        .map(|row| FiniteDistribution::normalized(theta.clone(), row))
        .collect::<Result<_>>()?;
    let channel = Channel::new(
        vec![
            Variable::new(VAR_XP, w.xp_alphabet()),
            Variable::new(VAR_XV, w.xv_alphabet()),
        ],
        theta.clone(),
        dists,
    )?;
    Ok(SearchResult {
        channel,
        objective: best_obj,
    })
}

/// Precomputed world marginals for the search objective.
struct SearchProblem {
    /// p(d) over flattened data tuples d = (x_p, x_v).
    p_d: Vec<f64>,
    /// p(d, x_f).
    p_df: Vec<Vec<f64>>,
    /// p(x_f).
    p_f: Vec<f64>,
    /// p(x_p).
    p_a: Vec<f64>,
    /// x_p index of each d.
    a_of_d: Vec<usize>,
    nt: usize,
    mu: f64,
    nu: f64,
}

impl SearchProblem {
    fn new(w: &World, nt: usize, mu: f64, nu: f64) -> Result<Self> {
        let dj = data_joint(w)?;
        let na = w.xp_alphabet().size();
        let nb = w.xv_alphabet().size();
        let nf = w.xf_alphabet().size();
        let nd = na * nb;
        let mut p_d = vec![0.0; nd];
        let mut p_df = vec![vec![0.0; nf]; nd];
        let mut p_f = vec![0.0; nf];
        let mut p_a = vec![0.0; na];
        let mut a_of_d = vec![0usize; nd];
        for a in 0..na {
            for b in 0..nb {
                let d = a * nb + b;
                a_of_d[d] = a;
                for fut in 0..nf {
                    let p = dj.prob(&[a, b, fut]);
                    p_df[d][fut] += p;
                    p_d[d] += p;
                    p_f[fut] += p;
                    p_a[a] += p;
                }
            }
        }
        Ok(Self {
            p_d,
            p_df,
            p_f,
            p_a,
            a_of_d,
            nt,
            mu,
            nu,
        })
    }

    /// Exact objective by enumeration of the induced marginals.
    fn objective(&self, rows: &[Vec<f64>]) -> f64 {
        let (tm, am, fm) = self.marginals(rows);
        let nd = self.p_d.len();
        let na = self.p_a.len();
        let nf = self.p_f.len();
        let mut i_f = 0.0;
        for t in 0..self.nt {
            for fut in 0..nf {
                let p = fm[t][fut];
                if p > 0.0 {
                    i_f += p * (p / (tm[t] * self.p_f[fut])).ln();
                }
            }
        }
        let mut i_a = 0.0;
        for t in 0..self.nt {
            for a in 0..na {
                let p = am[t][a];
                if p > 0.0 {
                    i_a += p * (p / (tm[t] * self.p_a[a])).ln();
                }
            }
        }
        let mut i_d = 0.0;
        for (d, row) in rows.iter().enumerate().take(nd) {
            for (t, &c) in row.iter().enumerate() {
                let p = self.p_d[d] * c;
                if p > 0.0 {
                    i_d += p * (c / tm[t]).ln();
                }
            }
        }
        i_f + self.mu * i_a + self.nu * (i_d - i_a)
    }

    /// Ascent direction; row-constant shifts are irrelevant after projection.
    fn gradient(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let (tm, am, fm) = self.marginals(rows);
        let nd = self.p_d.len();
        let nf = self.p_f.len();
        let mut g = vec![vec![0.0; self.nt]; nd];
        for d in 0..nd {
            let a = self.a_of_d[d];
            for t in 0..self.nt {
                if tm[t] <= 0.0 {
                    continue;
                }
                let mut v = 0.0;
                for fut in 0..nf {
                    if self.p_df[d][fut] > 0.0 {
                        v += self.p_df[d][fut] * safe_ratio_ln(fm[t][fut], tm[t] * self.p_f[fut]);
                    }
                }
                let coef = self.mu - self.nu;
                if coef != 0.0 && self.p_d[d] > 0.0 {
                    v += coef * self.p_d[d] * safe_ratio_ln(am[t][a], tm[t] * self.p_a[a]);
                }
                if self.nu != 0.0 && self.p_d[d] > 0.0 {
                    v += self.nu * self.p_d[d] * safe_ratio_ln(rows[d][t], tm[t]);
                }
                g[d][t] = v;
            }
        }
        g
    }

    #[allow(clippy::type_complexity)]
    fn marginals(&self, rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let nd = self.p_d.len();
        let na = self.p_a.len();
        let nf = self.p_f.len();
        let mut tm = vec![0.0; self.nt];
        let mut am = vec![vec![0.0; na]; self.nt];
        let mut fm = vec![vec![0.0; nf]; self.nt];
        for d in 0..nd {
            let a = self.a_of_d[d];
            for t in 0..self.nt {
                let w = rows[d][t];
                if w <= 0.0 {
                    continue;
                }
                tm[t] += self.p_d[d] * w;
                am[t][a] += self.p_d[d] * w;
                for fut in 0..nf {
                    fm[t][fut] += self.p_df[d][fut] * w;
                }
            }
        }
        (tm, am, fm)
    }
}

fn safe_ratio_ln(num: f64, den: f64) -> f64 {
    (num.max(1e-300) / den.max(1e-300)).ln()
}

/// Euclidean projection onto the probability simplex.
pub fn project_to_simplex(v: &mut [f64]) {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut cumsum = 0.0;
    let mut rho = 0usize;
    let mut tau = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (j + 1) as f64;
        if u - candidate > 0.0 {
            rho = j + 1;
            tau = candidate;
        }
    }
    debug_assert!(rho > 0);
    for x in v.iter_mut() {
        *x = (*x - tau).max(0.0);
    }
}
