//! Progressive disclosure as a finite-horizon POMDP with paid reveal actions.
//!
//! Actions come in two kinds. An *execute* action ends the episode and pays
//! `R[s, a]` in latent state `s`. A *reveal* action costs `reveal_cost`,
//! moves the latent state through `T[a]` and emits an observation drawn from
//! `Ω[a]`, after which the agent decides again. With `h` reveals remaining
//! the optimal value is
//!
//! ```text
//! V_0(b)     = max_e  R_e · b
//! V_{h+1}(b) = max( V_0(b),  max_r [ -c + Σ_o P(o | b, r) · V_h(b'_{r,o}) ] )
//! ```
//!
//! and every `V_h` is the upper envelope of a finite set of alpha vectors.
//! [`value_iteration`] computes those sets exactly, pruning only vectors that
//! are pointwise dominated.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Row-sum tolerance for stochastic matrices and beliefs.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Upper bound on alpha vectors generated during one backup, before pruning.
pub const MAX_GENERATED_VECTORS: usize = 1_000_000;
/// Slack allowed when testing pointwise dominance.
const DOMINANCE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PomdpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("invalid belief: {0}")]
    InvalidBelief(String),
    #[error("observation {observation} has zero probability under action {action}")]
    ImpossibleObservation { action: usize, observation: usize },
    #[error("action {0} is not a reveal action")]
    NotReveal(usize),
    #[error("exact backup would generate more than {limit} alpha vectors (reached {generated})")]
    StateSpaceTooLarge { generated: usize, limit: usize },
    #[error("model file: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Reveal,
    Execute,
}

/// One action and the kernels it needs.
///
/// Reveal actions carry `transition[s][s']` and `observation[s'][o]`;
/// execute actions carry `reward[s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Action {
    pub name: String,
    pub kind: ActionKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observation: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<Vec<f64>>,
}

impl Action {
    pub fn execute(name: impl Into<String>, reward: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            kind: ActionKind::Execute,
            transition: None,
            observation: None,
            reward: Some(reward),
        }
    }

    pub fn reveal(name: impl Into<String>, transition: Vec<Vec<f64>>, observation: Vec<Vec<f64>>) -> Self {
        Self {
            name: name.into(),
            kind: ActionKind::Reveal,
            transition: Some(transition),
            observation: Some(observation),
            reward: None,
        }
    }
}

/// A validated POMDP. Construct with [`PomdpModel::new`] or [`PomdpModel::from_json`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct PomdpModel {
    states: Vec<String>,
    observations: Vec<String>,
    actions: Vec<Action>,
    reveal_cost: f64,
    horizon: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawModel {
    states: Vec<String>,
    observations: Vec<String>,
    actions: Vec<Action>,
    reveal_cost: f64,
    horizon: usize,
}

impl TryFrom<RawModel> for PomdpModel {
    type Error = PomdpError;

    fn try_from(raw: RawModel) -> Result<Self, Self::Error> {
        PomdpModel::new(raw.states, raw.observations, raw.actions, raw.reveal_cost, raw.horizon)
    }
}

impl From<PomdpModel> for RawModel {
    fn from(m: PomdpModel) -> Self {
        RawModel {
            states: m.states,
            observations: m.observations,
            actions: m.actions,
            reveal_cost: m.reveal_cost,
            horizon: m.horizon,
        }
    }
}

fn check_distribution(row: &[f64], width: usize, what: &str) -> Result<(), PomdpError> {
    if row.len() != width {
        return Err(PomdpError::InvalidModel(format!(
            "{what} has {} entries, expected {width}",
            row.len()
        )));
    }
    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(PomdpError::InvalidModel(format!(
            "{what} has a negative or non-finite entry"
        )));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(PomdpError::InvalidModel(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

impl PomdpModel {
    pub fn new(
        states: Vec<String>,
        observations: Vec<String>,
        actions: Vec<Action>,
        reveal_cost: f64,
        horizon: usize,
    ) -> Result<Self, PomdpError> {
        let ns = states.len();
        let no = observations.len();
        if ns == 0 {
            return Err(PomdpError::InvalidModel("no states".into()));
        }
        if !(reveal_cost.is_finite() && reveal_cost >= 0.0) {
            return Err(PomdpError::InvalidModel("reveal_cost must be finite and >= 0".into()));
        }
        if !actions.iter().any(|a| a.kind == ActionKind::Execute) {
            return Err(PomdpError::InvalidModel(
                "at least one execute action is required".into(),
            ));
        }
        for (ai, a) in actions.iter().enumerate() {
            let label = format!("action {ai} ({})", a.name);
            match a.kind {
                ActionKind::Execute => {
                    let r = a
                        .reward
                        .as_ref()
                        .ok_or_else(|| PomdpError::InvalidModel(format!("{label}: execute action needs `reward`")))?;
                    if r.len() != ns || r.iter().any(|x| !x.is_finite()) {
                        return Err(PomdpError::InvalidModel(format!(
                            "{label}: reward must have {ns} finite entries"
                        )));
                    }
                }
                ActionKind::Reveal => {
                    if no == 0 {
                        return Err(PomdpError::InvalidModel("reveal actions need observations".into()));
                    }
                    let t = a.transition.as_ref().ok_or_else(|| {
                        PomdpError::InvalidModel(format!("{label}: reveal action needs `transition`"))
                    })?;
                    let o = a.observation.as_ref().ok_or_else(|| {
                        PomdpError::InvalidModel(format!("{label}: reveal action needs `observation`"))
                    })?;
                    if t.len() != ns || o.len() != ns {
                        return Err(PomdpError::InvalidModel(format!(
                            "{label}: transition and observation need {ns} rows"
                        )));
                    }
                    for (s, row) in t.iter().enumerate() {
                        check_distribution(row, ns, &format!("{label}: transition row {s}"))?;
                    }
                    for (s, row) in o.iter().enumerate() {
                        check_distribution(row, no, &format!("{label}: observation row {s}"))?;
                    }
                }
            }
        }
        Ok(Self {
            states,
            observations,
            actions,
            reveal_cost,
            horizon,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, PomdpError> {
        serde_json::from_str(text).map_err(|e| PomdpError::Json(e.to_string()))
    }

    /// Two latent states, one reveal action with identity transition and
    /// symmetric observation accuracy `p`, and one execute action per state
    /// paying 1 when it matches the state. Actions are ordered
    /// `[execute-0, execute-1, reveal]`.
    pub fn symmetric_toy(p: f64, reveal_cost: f64, horizon: usize) -> Result<Self, PomdpError> {
        Self::new(
            vec!["s0".into(), "s1".into()],
            vec!["o0".into(), "o1".into()],
            vec![
                Action::execute("execute-0", vec![1.0, 0.0]),
                Action::execute("execute-1", vec![0.0, 1.0]),
                Action::reveal(
                    "reveal",
                    vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                    vec![vec![p, 1.0 - p], vec![1.0 - p, p]],
                ),
            ],
            reveal_cost,
            horizon,
        )
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn reveal_cost(&self) -> f64 {
        self.reveal_cost
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn with_reveal_cost(mut self, c: f64) -> Result<Self, PomdpError> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(PomdpError::InvalidModel("reveal_cost must be finite and >= 0".into()));
        }
        self.reveal_cost = c;
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }

    /// Multiplies every reward and the reveal cost by `k > 0`.
    pub fn scaled(&self, k: f64) -> Result<Self, PomdpError> {
        if !(k.is_finite() && k > 0.0) {
            return Err(PomdpError::InvalidModel("scale factor must be positive".into()));
        }
        let mut m = self.clone();
        for a in &mut m.actions {
            if let Some(r) = &mut a.reward {
                r.iter_mut().for_each(|x| *x *= k);
            }
        }
        m.reveal_cost *= k;
        Ok(m)
    }

    pub fn execute_actions(&self) -> impl Iterator<Item = usize> + '_ {
        self.actions
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind == ActionKind::Execute)
            .map(|(i, _)| i)
    }

    pub fn reveal_actions(&self) -> impl Iterator<Item = usize> + '_ {
        self.actions
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind == ActionKind::Reveal)
            .map(|(i, _)| i)
    }

    fn reveal_kernels(&self, action: usize) -> Result<(&[Vec<f64>], &[Vec<f64>]), PomdpError> {
        let a = self.actions.get(action).ok_or(PomdpError::NotReveal(action))?;
        match (a.kind, &a.transition, &a.observation) {
            (ActionKind::Reveal, Some(t), Some(o)) => Ok((t, o)),
            _ => Err(PomdpError::NotReveal(action)),
        }
    }

    fn reward(&self, action: usize) -> &[f64] {
        self.actions[action]
            .reward
            .as_deref()
            .expect("execute action has reward")
    }
}

/// A probability vector over latent states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BeliefState(Vec<f64>);

impl BeliefState {
    pub fn new(probs: Vec<f64>) -> Result<Self, PomdpError> {
        if probs.is_empty() {
            return Err(PomdpError::InvalidBelief("empty".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(PomdpError::InvalidBelief("negative or non-finite entry".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(PomdpError::InvalidBelief(format!("sums to {sum}")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![1.0 / n as f64; n])
    }

    /// Point mass on `state`.
    pub fn certain(n: usize, state: usize) -> Self {
        let mut v = vec![0.0; n];
        v[state] = 1.0;
        Self(v)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    fn check_dims(&self, m: &PomdpModel) -> Result<(), PomdpError> {
        if self.0.len() != m.n_states() {
            return Err(PomdpError::InvalidBelief(format!(
                "belief has {} entries, model has {} states",
                self.0.len(),
                m.n_states()
            )));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Unnormalised posterior `Ω(o|s',a) · Σ_s T(s'|s,a) b(s)`.
fn joint_after(m: &PomdpModel, b: &BeliefState, action: usize, observation: usize) -> Result<Vec<f64>, PomdpError> {
    let (t, o) = m.reveal_kernels(action)?;
    if observation >= m.n_observations() {
        return Err(PomdpError::InvalidModel(format!("unknown observation {observation}")));
    }
    let n = m.n_states();
    Ok((0..n)
        .map(|next| {
            let predicted: f64 = (0..n).map(|s| t[s][next] * b.0[s]).sum();
            o[next][observation] * predicted
        })
        .collect())
}

/// `P(o | b, a)` for a reveal action.
pub fn observation_probability(
    m: &PomdpModel,
    b: &BeliefState,
    action: usize,
    observation: usize,
) -> Result<f64, PomdpError> {
    b.check_dims(m)?;
    Ok(joint_after(m, b, action, observation)?.iter().sum())
}

/// Bayes filter: the posterior after taking reveal `action` and seeing `observation`.
pub fn update_belief(
    m: &PomdpModel,
    b: &BeliefState,
    action: usize,
    observation: usize,
) -> Result<BeliefState, PomdpError> {
    b.check_dims(m)?;
    let joint = joint_after(m, b, action, observation)?;
    let z: f64 = joint.iter().sum();
    if z <= 0.0 {
        return Err(PomdpError::ImpossibleObservation { action, observation });
    }
    Ok(BeliefState(joint.into_iter().map(|x| x / z).collect()))
}

/// Best immediate execute action and its expected reward. Ties go to the lowest index.
pub fn value_execute_now(m: &PomdpModel, b: &BeliefState) -> (f64, usize) {
    let mut best: Option<(f64, usize)> = None;
    for a in m.execute_actions() {
        let v = dot(m.reward(a), &b.0);
        if best.is_none_or(|(bv, _)| v > bv) {
            best = Some((v, a));
        }
    }
    best.expect("model has an execute action")
}

/// One-step lookahead gain of a reveal, net of its cost:
/// `Σ_o P(o|b,a) · V_exec(b'_o) − V_exec(b) − c`.
pub fn value_of_information(m: &PomdpModel, b: &BeliefState, action: usize) -> Result<f64, PomdpError> {
    b.check_dims(m)?;
    m.reveal_kernels(action)?;
    let mut expected = 0.0;
    for o in 0..m.n_observations() {
        let joint = joint_after(m, b, action, o)?;
        let z: f64 = joint.iter().sum();
        if z <= 0.0 {
            continue;
        }
        let posterior = BeliefState(joint.into_iter().map(|x| x / z).collect());
        expected += z * value_execute_now(m, &posterior).0;
    }
    Ok(expected - value_execute_now(m, b).0 - m.reveal_cost)
}

/// Reveal when some reveal action has positive value of information,
/// otherwise execute. Returns the chosen action index.
pub fn decide(m: &PomdpModel, b: &BeliefState) -> Result<usize, PomdpError> {
    b.check_dims(m)?;
    let mut best_reveal: Option<(f64, usize)> = None;
    for a in m.reveal_actions() {
        let voi = value_of_information(m, b, a)?;
        if best_reveal.is_none_or(|(bv, _)| voi > bv) {
            best_reveal = Some((voi, a));
        }
    }
    match best_reveal {
        Some((voi, a)) if voi > 0.0 => Ok(a),
        _ => Ok(value_execute_now(m, b).1),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaVector {
    pub values: Vec<f64>,
    /// The first action of the plan this vector certifies.
    pub action: usize,
}

/// Alpha-vector sets for horizons `0..=H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueFunction {
    layers: Vec<Vec<AlphaVector>>,
}

impl ValueFunction {
    pub fn horizon(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn alpha_vectors(&self, h: usize) -> &[AlphaVector] {
        &self.layers[h]
    }

    fn best(&self, h: usize, b: &BeliefState) -> &AlphaVector {
        let mut best = &self.layers[h][0];
        let mut best_v = dot(&best.values, &b.0);
        for alpha in &self.layers[h][1..] {
            let v = dot(&alpha.values, &b.0);
            if v > best_v {
                best = alpha;
                best_v = v;
            }
        }
        best
    }

    /// `V_h(b) = max_α α·b`.
    pub fn value(&self, h: usize, b: &BeliefState) -> f64 {
        dot(&self.best(h, b).values, &b.0)
    }

    /// The root action of the maximising alpha vector.
    pub fn best_action(&self, h: usize, b: &BeliefState) -> usize {
        self.best(h, b).action
    }
}

/// Removes duplicates and pointwise-dominated vectors, keeping earlier ones on ties.
fn prune(vectors: Vec<AlphaVector>) -> Vec<AlphaVector> {
    let dominated_by =
        |u: &AlphaVector, v: &AlphaVector| u.values.iter().zip(&v.values).all(|(a, b)| *a <= *b + DOMINANCE_TOL);
    let mut kept: Vec<AlphaVector> = Vec::with_capacity(vectors.len());
    for candidate in vectors {
        if kept.iter().any(|k| dominated_by(&candidate, k)) {
            continue;
        }
        kept.retain(|k| !dominated_by(k, &candidate));
        kept.push(candidate);
    }
    kept
}

/// Exact finite-horizon value iteration up to the model's horizon.
pub fn value_iteration(m: &PomdpModel) -> Result<ValueFunction, PomdpError> {
    value_iteration_to(m, m.horizon())
}

/// Exact finite-horizon value iteration up to `horizon`.
pub fn value_iteration_to(m: &PomdpModel, horizon: usize) -> Result<ValueFunction, PomdpError> {
    let n = m.n_states();
    let execute: Vec<AlphaVector> = m
        .execute_actions()
        .map(|a| AlphaVector {
            values: m.reward(a).to_vec(),
            action: a,
        })
        .collect();
    let mut layers = vec![execute.clone()];

    for _ in 0..horizon {
        let previous = layers.last().expect("layer 0 exists");
        let mut next = execute.clone();
        let mut generated = 0usize;

        for a in m.reveal_actions() {
            let (t, o) = m.reveal_kernels(a)?;
            // Start from the constant -c vector and add one observation at a time.
            let mut partial: Vec<Vec<f64>> = vec![vec![-m.reveal_cost; n]];
            for obs in 0..m.n_observations() {
                let projected: Vec<Vec<f64>> = previous
                    .iter()
                    .map(|alpha| {
                        (0..n)
                            .map(|s| (0..n).map(|s2| t[s][s2] * o[s2][obs] * alpha.values[s2]).sum())
                            .collect()
                    })
                    .collect();
                generated += partial.len() * projected.len();
                if generated > MAX_GENERATED_VECTORS {
                    return Err(PomdpError::StateSpaceTooLarge {
                        generated,
                        limit: MAX_GENERATED_VECTORS,
                    });
                }
                let sums: Vec<AlphaVector> = partial
                    .iter()
                    .flat_map(|p| {
                        projected.iter().map(move |g| AlphaVector {
                            values: p.iter().zip(g).map(|(x, y)| x + y).collect(),
                            action: a,
                        })
                    })
                    .collect();
                partial = prune(sums).into_iter().map(|v| v.values).collect();
            }
            next.extend(partial.into_iter().map(|values| AlphaVector { values, action: a }));
        }
        layers.push(prune(next));
    }
    Ok(ValueFunction { layers })
}

/// All beliefs whose entries are multiples of `1/steps`, in lexicographic
/// order of the first coordinates (largest first).
pub fn belief_grid(n_states: usize, steps: usize) -> Vec<BeliefState> {
    fn fill(remaining: usize, slots: usize, steps: usize, prefix: &mut Vec<usize>, out: &mut Vec<BeliefState>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(BeliefState(prefix.iter().map(|&k| k as f64 / steps as f64).collect()));
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            fill(remaining - k, slots - 1, steps, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n_states == 0 || steps == 0 {
        if n_states == 1 {
            out.push(BeliefState(vec![1.0]));
        }
        return out;
    }
    fill(steps, n_states, steps, &mut Vec::with_capacity(n_states), &mut out);
    out
}

/// `b0,…,b{n-1},value,action` rows of `V_h` over [`belief_grid`].
pub fn value_grid_csv(m: &PomdpModel, vf: &ValueFunction, h: usize, steps: usize) -> String {
    let mut out = String::new();
    let header: Vec<String> = (0..m.n_states()).map(|i| format!("b{i}")).collect();
    let _ = writeln!(out, "{},value,action", header.join(","));
    for b in belief_grid(m.n_states(), steps) {
        let coords: Vec<String> = b.probs().iter().map(|p| format!("{p}")).collect();
        let action = &m.actions()[vf.best_action(h, &b)].name;
        let _ = writeln!(out, "{},{},{}", coords.join(","), vf.value(h, &b), action);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(c: f64) -> PomdpModel {
        PomdpModel::symmetric_toy(0.9, c, 3).unwrap()
    }

    const REVEAL: usize = 2;

    #[test]
    fn belief_update_symmetric() {
        let b = update_belief(&toy(0.2), &BeliefState::uniform(2), REVEAL, 0).unwrap();
        assert!((b.probs()[0] - 0.9).abs() < 1e-15);
        assert!((b.probs()[1] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn uninformative_observation_keeps_belief() {
        let m = PomdpModel::symmetric_toy(0.5, 0.1, 1).unwrap();
        let b0 = BeliefState::new(vec![0.3, 0.7]).unwrap();
        let b1 = update_belief(&m, &b0, REVEAL, 1).unwrap();
        assert!(b0.probs().iter().zip(b1.probs()).all(|(x, y)| (x - y).abs() < 1e-15));
    }

    #[test]
    fn impossible_observation() {
        let m = PomdpModel::symmetric_toy(1.0, 0.1, 1).unwrap();
        let err = update_belief(&m, &BeliefState::certain(2, 0), REVEAL, 1).unwrap_err();
        assert_eq!(
            err,
            PomdpError::ImpossibleObservation {
                action: REVEAL,
                observation: 1
            }
        );
    }

    #[test]
    fn execute_value_examples() {
        let m = toy(0.2);
        assert_eq!(value_execute_now(&m, &BeliefState::certain(2, 0)), (1.0, 0));
        assert_eq!(value_execute_now(&m, &BeliefState::uniform(2)), (0.5, 0));
        let m = PomdpModel::new(
            vec!["a".into(), "b".into()],
            vec![],
            vec![
                Action::execute("x", vec![2.0, 0.0]),
                Action::execute("y", vec![0.0, 1.0]),
            ],
            0.0,
            0,
        )
        .unwrap();
        let (v, a) = value_execute_now(&m, &BeliefState::new(vec![0.7, 0.3]).unwrap());
        assert!((v - 1.4).abs() < 1e-15);
        assert_eq!(a, 0);
    }

    #[test]
    fn voi_examples() {
        let u = BeliefState::uniform(2);
        assert!((value_of_information(&toy(0.2), &u, REVEAL).unwrap() - 0.2).abs() < 1e-12);
        assert!((value_of_information(&toy(0.5), &u, REVEAL).unwrap() + 0.1).abs() < 1e-12);
        let certain = BeliefState::certain(2, 0);
        for c in [0.0, 0.3, 1.0] {
            assert!((value_of_information(&toy(c), &certain, REVEAL).unwrap() + c).abs() < 1e-12);
        }
        assert_eq!(value_of_information(&toy(0.2), &u, 0), Err(PomdpError::NotReveal(0)));
    }

    #[test]
    fn decide_examples() {
        let u = BeliefState::uniform(2);
        assert_eq!(decide(&toy(0.2), &u).unwrap(), REVEAL);
        assert_eq!(decide(&toy(0.5), &u).unwrap(), 0);
        assert_eq!(decide(&toy(0.2), &BeliefState::certain(2, 1)).unwrap(), 1);
    }

    #[test]
    fn base_layer_is_reward_rows() {
        let vf = value_iteration_to(&toy(0.2), 0).unwrap();
        let rows: Vec<(Vec<f64>, usize)> = vf
            .alpha_vectors(0)
            .iter()
            .map(|a| (a.values.clone(), a.action))
            .collect();
        assert_eq!(rows, vec![(vec![1.0, 0.0], 0), (vec![0.0, 1.0], 1)]);
    }

    #[test]
    fn first_backup_matches_hand_derivation() {
        // Γ1 = {(1,0), (0,1), (0.9 - c, 0.9 - c)}.
        let vf = value_iteration_to(&toy(0.2), 1).unwrap();
        let layer = vf.alpha_vectors(1);
        assert_eq!(layer.len(), 3);
        let reveal = layer.iter().find(|a| a.action == REVEAL).unwrap();
        assert!(reveal.values.iter().all(|v| (v - 0.7).abs() < 1e-12));
    }

    #[test]
    fn model_validation() {
        let bad_row = PomdpModel::symmetric_toy(1.2, 0.1, 1);
        assert!(matches!(bad_row, Err(PomdpError::InvalidModel(_))));
        assert!(PomdpModel::symmetric_toy(0.9, -0.1, 1).is_err());
        let no_exec = PomdpModel::new(vec!["s".into()], vec!["o".into()], vec![], 0.0, 0);
        assert!(no_exec.is_err());
        assert!(BeliefState::new(vec![0.5, 0.6]).is_err());
        assert!(BeliefState::new(vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = toy(0.25);
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(PomdpModel::from_json(&text).unwrap(), m);
        let broken = text.replace("0.9", "0.95");
        assert!(matches!(PomdpModel::from_json(&broken), Err(PomdpError::Json(_))));
    }

    #[test]
    fn grid_shape() {
        assert_eq!(belief_grid(2, 100).len(), 101);
        assert_eq!(belief_grid(3, 10).len(), 66);
        assert!(belief_grid(3, 7)
            .iter()
            .all(|b| (b.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12));
        let csv = value_grid_csv(&toy(0.2), &value_iteration(&toy(0.2)).unwrap(), 3, 2);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "b0,b1,value,action");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "0.5,0.5,0.7,reveal");
    }

    #[test]
    fn too_large_is_reported() {
        // 8 observations make Γ1 → Γ2 generate far more than the guard allows.
        let n_obs = 8;
        let obs_row = vec![1.0 / n_obs as f64; n_obs];
        let mut actions: Vec<Action> = (0..6)
            .map(|i| {
                let mut r = vec![0.0; 6];
                r[i] = 1.0;
                Action::execute(format!("e{i}"), r)
            })
            .collect();
        for k in 0..3 {
            let t: Vec<Vec<f64>> = (0..6)
                .map(|s| {
                    let mut row = vec![0.0; 6];
                    row[(s + k) % 6] = 1.0;
                    row
                })
                .collect();
            let o: Vec<Vec<f64>> = (0..6)
                .map(|s| {
                    let mut row = vec![0.0; n_obs];
                    row[s] = 0.5;
                    for (j, x) in obs_row.iter().enumerate() {
                        row[j] += 0.5 * x;
                    }
                    row
                })
                .collect();
            actions.push(Action::reveal(format!("r{k}"), t, o));
        }
        let states = (0..6).map(|i| format!("s{i}")).collect();
        let observations = (0..n_obs).map(|i| format!("o{i}")).collect();
        let m = PomdpModel::new(states, observations, actions, 0.01, 4).unwrap();
        assert!(matches!(
            value_iteration(&m),
            Err(PomdpError::StateSpaceTooLarge { .. })
        ));
    }
}
