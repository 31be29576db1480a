//! Exact information-theory kernel over finite joint tables: entropies,
//! divergences, mutual informations, marginals, and conditionals.
//!
//! All quantities are in nats. The convention `0 * ln 0 = 0` applies
//! throughout, and every expectation is an exact sum over table cells.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::Nats;

/// Tolerance on the total mass of a `FiniteDistribution`.
pub const DIST_MASS_TOL: f64 = 1e-12;
/// Tolerance on the total mass of a `JointTable`.
pub const JOINT_MASS_TOL: f64 = 1e-10;

/// A named finite alphabet with ordered, distinct symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    name: String,
    symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, symbols: Vec<String>) -> Result<Self> {
        let name = name.into();
        if symbols.is_empty() {
            return Err(Error::InvalidAlphabet {
                name,
                reason: "must have at least one symbol".into(),
            });
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidAlphabet {
                    name,
                    reason: format!("duplicate symbol {s:?}"),
                });
            }
        }
        Ok(Self { name, symbols })
    }

    /// Alphabet with symbols `"0"`, `"1"`, ..., `"n-1"`.
    pub fn indexed(name: impl Into<String>, size: usize) -> Result<Self> {
        Self::new(name, (0..size).map(|i| i.to_string()).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol(&self, idx: usize) -> &str {
        &self.symbols[idx]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == label)
    }
}

/// A named variable together with its alphabet.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Variable {
    pub name: String,
    pub alphabet: Alphabet,
}

impl Variable {
    pub fn new(name: impl Into<String>, alphabet: Alphabet) -> Self {
        Self {
            name: name.into(),
            alphabet,
        }
    }
}

/// A probability vector over a finite alphabet.
///
/// Entries are nonnegative and sum to one within [`DIST_MASS_TOL`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteDistribution {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl FiniteDistribution {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alphabet.size() {
            return Err(Error::InvalidDistribution {
                alphabet: alphabet.name().into(),
                reason: format!(
                    "probability vector has length {}, alphabet has {} symbols",
                    probs.len(),
                    alphabet.size()
                ),
            });
        }
        for (i, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution {
                    alphabet: alphabet.name().into(),
                    reason: format!("entry {i} is {p}"),
                });
            }
        }
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > DIST_MASS_TOL {
            return Err(Error::InvalidDistribution {
                alphabet: alphabet.name().into(),
                reason: format!("mass is {mass}, expected 1"),
            });
        }
        Ok(Self { alphabet, probs })
    }

    /// Normalizes a nonnegative weight vector into a distribution.
    pub fn normalized(alphabet: Alphabet, weights: Vec<f64>) -> Result<Self> {
        let mass: f64 = weights.iter().sum();
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::InvalidDistribution {
                alphabet: alphabet.name().into(),
                reason: format!("weights have total mass {mass}"),
            });
        }
        let probs = weights.iter().map(|w| w / mass).collect();
        Self::new(alphabet, probs)
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let n = alphabet.size();
        Self {
            alphabet,
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn point_mass(alphabet: Alphabet, idx: usize) -> Self {
        let mut probs = vec![0.0; alphabet.size()];
        probs[idx] = 1.0;
        Self { alphabet, probs }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, idx: usize) -> f64 {
        self.probs[idx]
    }
}

/// Shannon entropy `-sum p ln p` in nats, with `0 ln 0 = 0`.
pub fn entropy(d: &FiniteDistribution) -> Nats {
    neg_sum_p_ln_p(d.probs())
}

fn neg_sum_p_ln_p(probs: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in probs {
        if p > 0.0 {
            h -= p * p.ln();
        }
    }
    // Exact point masses produce -1*ln(1) = -0.0; normalize the sign.
    if h == 0.0 {
        0.0
    } else {
        h
    }
}

/// Kullback-Leibler divergence `sum p ln(p/q)` in nats.
///
/// Fails with `SupportViolation` when some symbol has `p > 0` and `q = 0`
/// rather than silently returning an infinite value.
pub fn kl_divergence(p: &FiniteDistribution, q: &FiniteDistribution) -> Result<Nats> {
    if p.alphabet() != q.alphabet() {
        return Err(Error::AlphabetMismatch {
            expected: p.alphabet().name().into(),
            got: q.alphabet().name().into(),
        });
    }
    let mut kl = 0.0;
    for (i, (&pi, &qi)) in p.probs().iter().zip(q.probs()).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::SupportViolation(format!(
                    "p({sym}) = {pi} but q({sym}) = 0",
                    sym = p.alphabet().symbol(i)
                )));
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl)
}

/// Dense joint probability tensor over named variables, row-major with the
/// last declared variable varying fastest.
#[derive(Debug, Clone, Serialize)]
pub struct JointTable {
    variables: Vec<Variable>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn new(variables: Vec<Variable>, probs: Vec<f64>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidJoint("no variables".into()));
        }
        for (i, v) in variables.iter().enumerate() {
            if variables[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::InvalidJoint(format!(
                    "duplicate variable name {:?}",
                    v.name
                )));
            }
        }
        let cells: usize = variables.iter().map(|v| v.alphabet.size()).product();
        if probs.len() != cells {
            return Err(Error::InvalidJoint(format!(
                "tensor has {} cells, axis sizes require {}",
                probs.len(),
                cells
            )));
        }
        for &p in &probs {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidJoint(format!(
                    "negative or non-finite cell {p}"
                )));
            }
        }
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > JOINT_MASS_TOL {
            return Err(Error::InvalidJoint(format!(
                "total mass is {mass}, expected 1"
            )));
        }
        Ok(Self { variables, probs })
    }

    /// Builds a table by evaluating `f` at every multi-index.
    pub fn from_fn(variables: Vec<Variable>, f: impl FnMut(&[usize]) -> f64) -> Result<Self> {
        let sizes: Vec<usize> = variables.iter().map(|v| v.alphabet.size()).collect();
        let mut probs = Vec::with_capacity(sizes.iter().product());
        let mut f = f;
        for_each_index(&sizes, |idx| probs.push(f(idx)));
        Self::new(variables, probs)
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.into()))
    }

    fn positions(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.variables
                    .iter()
                    .position(|v| v.name == *n)
                    .ok_or_else(|| Error::UnknownVariable((*n).into()))
            })
            .collect()
    }

    fn sizes(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.alphabet.size()).collect()
    }

    fn strides(&self) -> Vec<usize> {
        strides_of(&self.sizes())
    }

    /// Flat offset of a full multi-index.
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.variables.len());
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }

    pub fn prob(&self, idx: &[usize]) -> f64 {
        self.probs[self.offset(idx)]
    }

    /// Sums out every variable not in `keep`. Kept variables stay in their
    /// declared order regardless of the order of `keep`.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointTable> {
        if keep.is_empty() {
            return Err(Error::EmptyVariableSet);
        }
        self.positions(keep)?; // validate names
        let kept: Vec<usize> = (0..self.variables.len())
            .filter(|&i| keep.contains(&self.variables[i].name.as_str()))
            .collect();
        if kept.len() == self.variables.len() {
            return Ok(self.clone());
        }
        let out_vars: Vec<Variable> = kept.iter().map(|&i| self.variables[i].clone()).collect();
        let out_sizes: Vec<usize> = out_vars.iter().map(|v| v.alphabet.size()).collect();
        let out_strides = strides_of(&out_sizes);
        let mut out = vec![0.0; out_sizes.iter().product()];
        let sizes = self.sizes();
        let mut flat = 0usize;
        for_each_index(&sizes, |idx| {
            let mut o = 0usize;
            for (k, &vi) in kept.iter().enumerate() {
                o += idx[vi] * out_strides[k];
            }
            out[o] += self.probs[flat];
            flat += 1;
        });
        Ok(JointTable {
            variables: out_vars,
            probs: out,
        })
    }

    /// Conditions on `given` (pairs of variable name and symbol index) and
    /// returns the renormalized table over `target`. Variables outside
    /// `target` and `given` are summed out.
    pub fn condition(&self, target: &[&str], given: &[(&str, usize)]) -> Result<JointTable> {
        if target.is_empty() {
            return Err(Error::EmptyVariableSet);
        }
        let target_pos = self.positions(target)?;
        let given_names: Vec<&str> = given.iter().map(|(n, _)| *n).collect();
        let given_pos = self.positions(&given_names)?;
        for (p, (n, s)) in given_pos.iter().zip(given) {
            if target_pos.contains(p) {
                return Err(Error::OverlappingSets((*n).into()));
            }
            if *s >= self.variables[*p].alphabet.size() {
                return Err(Error::InvalidJoint(format!(
                    "symbol index {s} out of range for variable {n:?}"
                )));
            }
        }
        let mut fixed: Vec<Option<usize>> = vec![None; self.variables.len()];
        for (p, (_, s)) in given_pos.iter().zip(given) {
            fixed[*p] = Some(*s);
        }
        let kept: Vec<usize> = (0..self.variables.len())
            .filter(|&i| target_pos.contains(&i))
            .collect();
        let out_vars: Vec<Variable> = kept.iter().map(|&i| self.variables[i].clone()).collect();
        let out_sizes: Vec<usize> = out_vars.iter().map(|v| v.alphabet.size()).collect();
        let out_strides = strides_of(&out_sizes);
        let mut out = vec![0.0; out_sizes.iter().product()];
        let sizes = self.sizes();
        let mut flat = 0usize;
        let mut mass = 0.0;
        for_each_index(&sizes, |idx| {
            let matches = fixed
                .iter()
                .enumerate()
                .all(|(i, f)| f.is_none_or(|s| idx[i] == s));
            if matches {
                let mut o = 0usize;
                for (k, &vi) in kept.iter().enumerate() {
                    o += idx[vi] * out_strides[k];
                }
                out[o] += self.probs[flat];
                mass += self.probs[flat];
            }
            flat += 1;
        });
        if mass <= 0.0 {
            let desc = given
                .iter()
                .map(|(n, s)| format!("{n}={s}"))
                .collect::<Vec<_>>()
                .join(", ");
            return Err(Error::ZeroProbabilityEvent(desc));
        }
        for p in &mut out {
            *p /= mass;
        }
        Ok(JointTable {
            variables: out_vars,
            probs: out,
        })
    }

    /// Views a single-variable table as a distribution.
    pub fn into_distribution(self) -> Result<FiniteDistribution> {
        if self.variables.len() != 1 {
            return Err(Error::InvalidJoint(format!(
                "table has {} variables, expected exactly 1",
                self.variables.len()
            )));
        }
        let var = self.variables.into_iter().next().unwrap();
        FiniteDistribution::new(var.alphabet, self.probs)
    }
}

/// Entropy of the marginal over `vars`, in nats.
pub fn entropy_of(j: &JointTable, vars: &[&str]) -> Result<Nats> {
    let m = j.marginalize(vars)?;
    Ok(neg_sum_p_ln_p(m.probs()))
}

/// Conditional entropy `H(x|y) = -sum p(x,y) ln p(x|y)` in nats.
pub fn conditional_entropy(j: &JointTable, x: &[&str], y: &[&str]) -> Result<Nats> {
    check_disjoint(x, y)?;
    if y.is_empty() {
        return entropy_of(j, x);
    }
    let union: Vec<&str> = x.iter().chain(y.iter()).copied().collect();
    let xy = j.marginalize(&union)?;
    let py = xy.marginalize(y)?;
    // Positions inside xy of py's variables, in py's declared order.
    let y_pos = marginal_positions(&xy, &py);
    let py_strides = py.strides();
    let sizes = xy.sizes();
    let mut h = 0.0;
    let mut flat = 0usize;
    for_each_index(&sizes, |idx| {
        let p = xy.probs[flat];
        if p > 0.0 {
            let mut yo = 0usize;
            for (k, &vp) in y_pos.iter().enumerate() {
                yo += idx[vp] * py_strides[k];
            }
            let pyv = py.probs[yo];
            h -= p * (p / pyv).ln();
        }
        flat += 1;
    });
    Ok(if h == 0.0 { 0.0 } else { h })
}

/// Mutual information `I(a;b) = D_KL(p(a,b) || p(a) p(b))` in nats.
pub fn mutual_information(j: &JointTable, a: &[&str], b: &[&str]) -> Result<Nats> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyVariableSet);
    }
    check_disjoint(a, b)?;
    let union: Vec<&str> = a.iter().chain(b.iter()).copied().collect();
    let ab = j.marginalize(&union)?;
    let pa = ab.marginalize(a)?;
    let pb = ab.marginalize(b)?;
    let a_pos = marginal_positions(&ab, &pa);
    let b_pos = marginal_positions(&ab, &pb);
    let a_strides = pa.strides();
    let b_strides = pb.strides();
    let sizes = ab.sizes();
    let mut mi = 0.0;
    let mut flat = 0usize;
    for_each_index(&sizes, |idx| {
        let p = ab.probs[flat];
        if p > 0.0 {
            let mut ao = 0usize;
            for (k, &vp) in a_pos.iter().enumerate() {
                ao += idx[vp] * a_strides[k];
            }
            let mut bo = 0usize;
            for (k, &vp) in b_pos.iter().enumerate() {
                bo += idx[vp] * b_strides[k];
            }
            mi += p * (p / (pa.probs[ao] * pb.probs[bo])).ln();
        }
        flat += 1;
    });
    Ok(if mi == 0.0 { 0.0 } else { mi })
}

/// Conditional mutual information `I(a;b|c)` in nats, computed as the
/// expectation over `c` of the mutual information of the conditioned table.
/// An empty `c` reduces to [`mutual_information`].
pub fn conditional_mutual_information(
    j: &JointTable,
    a: &[&str],
    b: &[&str],
    c: &[&str],
) -> Result<Nats> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyVariableSet);
    }
    check_disjoint(a, b)?;
    check_disjoint(a, c)?;
    check_disjoint(b, c)?;
    if c.is_empty() {
        return mutual_information(j, a, b);
    }
    let union: Vec<&str> = a.iter().chain(b.iter()).chain(c.iter()).copied().collect();
    let abc = j.marginalize(&union)?;
    let pc = abc.marginalize(c)?;
    let c_sizes = pc.sizes();
    let mut cmi = 0.0;
    let mut c_flat = 0usize;
    let mut result = Ok(());
    for_each_index(&c_sizes, |c_idx| {
        if result.is_err() {
            return;
        }
        let w = pc.probs[c_flat];
        c_flat += 1;
        if w > 0.0 {
            let given: Vec<(&str, usize)> = c.iter().copied().zip(c_idx.iter().copied()).collect();
            let ab: Vec<&str> = a.iter().chain(b.iter()).copied().collect();
            match abc
                .condition(&ab, &given)
                .and_then(|cond| mutual_information(&cond, a, b))
            {
                Ok(mi) => cmi += w * mi,
                Err(e) => result = Err(e),
            }
        }
    });
    result?;
    Ok(if cmi == 0.0 { 0.0 } else { cmi })
}

/// Positions inside `outer` of `inner`'s variables, in `inner`'s order.
fn marginal_positions(outer: &JointTable, inner: &JointTable) -> Vec<usize> {
    inner
        .variables
        .iter()
        .map(|v| {
            outer
                .variables
                .iter()
                .position(|w| w.name == v.name)
                .expect("marginal variable present in source table")
        })
        .collect()
}

fn check_disjoint(a: &[&str], b: &[&str]) -> Result<()> {
    for n in a {
        if b.contains(n) {
            return Err(Error::OverlappingSets((*n).into()));
        }
    }
    Ok(())
}

/// A conditional distribution table: one output distribution per input tuple,
/// rows stored row-major over the input alphabets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Channel {
    inputs: Vec<Variable>,
    output: Alphabet,
    rows: Vec<FiniteDistribution>,
}

impl Channel {
    pub fn new(
        inputs: Vec<Variable>,
        output: Alphabet,
        rows: Vec<FiniteDistribution>,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::InvalidChannel("no input variables".into()));
        }
        let expected: usize = inputs.iter().map(|v| v.alphabet.size()).product();
        if rows.len() != expected {
            return Err(Error::InvalidChannel(format!(
                "has {} rows, input tuples require {}",
                rows.len(),
                expected
            )));
        }
        for row in &rows {
            if row.alphabet() != &output {
                return Err(Error::AlphabetMismatch {
                    expected: output.name().into(),
                    got: row.alphabet().name().into(),
                });
            }
        }
        Ok(Self {
            inputs,
            output,
            rows,
        })
    }

    /// Channel whose every row equals `dist`.
    pub fn constant(inputs: Vec<Variable>, dist: FiniteDistribution) -> Result<Self> {
        let n: usize = inputs.iter().map(|v| v.alphabet.size()).product();
        let output = dist.alphabet().clone();
        Self::new(inputs, output, vec![dist; n])
    }

    pub fn inputs(&self) -> &[Variable] {
        &self.inputs
    }

    pub fn output(&self) -> &Alphabet {
        &self.output
    }

    pub fn rows(&self) -> &[FiniteDistribution] {
        &self.rows
    }

    pub fn input_sizes(&self) -> Vec<usize> {
        self.inputs.iter().map(|v| v.alphabet.size()).collect()
    }

    /// Row for a flat input index.
    pub fn row(&self, flat: usize) -> &FiniteDistribution {
        &self.rows[flat]
    }

    /// Row for a full input multi-index.
    pub fn row_for(&self, idx: &[usize]) -> &FiniteDistribution {
        let strides = strides_of(&self.input_sizes());
        let flat: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
        &self.rows[flat]
    }
}

/// Row-major strides for the given axis sizes (last axis fastest).
pub fn strides_of(sizes: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; sizes.len()];
    for i in (0..sizes.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    strides
}

/// Calls `f` with every multi-index over `sizes`, last axis fastest.
pub fn for_each_index(sizes: &[usize], mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; sizes.len()];
    loop {
        f(&idx);
        let mut axis = sizes.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < sizes[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}
