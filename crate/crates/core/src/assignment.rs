//! Distribution of component instances over variates.
//!
//! Each attachment picks a variate with probability proportional to
//! `(s_v + 1)^-p`, where `s_v` counts the components (signal and noise)
//! already attached to variate `v`. The shift by one keeps fresh variates
//! finite and maximally likely. Every instance is attached to `multiplicity`
//! distinct variates.
//!
//! Coverage: seasonal components always reach every variate, and trend or
//! noise components do too when the census asks for it. Once the attachments
//! left in a group equal the variates still lacking that group, draws are
//! restricted to those variates, so the attachment total never changes.

use serde::{Deserialize, Serialize};
use serde_with::{serde_as, DisplayFromStr};

use crate::components::{
    ComponentId, ComponentKind, ComponentParams, ComponentSpec, DependentKind, DependentNoiseSpec,
};
use crate::error::{Error, Result};
use crate::prng::{RandomStream, StreamPath};
use crate::synthesis::{sample_snr, sample_weights, SnrSpec};

/// Per-variate attachment counts plus the penalty exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentState {
    counts: Vec<u64>,
    penalty: f64,
}

impl AssignmentState {
    pub fn new(variates: usize, penalty: f64) -> Self {
        assert!(variates >= 1, "need at least one variate");
        assert!(penalty >= 0.0 && penalty.is_finite(), "penalty must be finite and >= 0");
        AssignmentState { counts: vec![0; variates], penalty }
    }

    pub fn with_counts(counts: Vec<u64>, penalty: f64) -> Self {
        assert!(!counts.is_empty(), "need at least one variate");
        assert!(penalty >= 0.0 && penalty.is_finite(), "penalty must be finite and >= 0");
        AssignmentState { counts, penalty }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn record(&mut self, variate: usize) {
        self.counts[variate] += 1;
    }

    pub fn selection_probabilities(&self) -> Vec<f64> {
        selection_probabilities(&self.counts, self.penalty)
    }
}

pub fn selection_probabilities(counts: &[u64], penalty: f64) -> Vec<f64> {
    let raw: Vec<f64> = counts.iter().map(|&s| ((s + 1) as f64).powf(-penalty)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// What an instance becomes once attached.
#[derive(Debug, Clone, PartialEq)]
pub enum ComponentTemplate {
    /// Fully sampled; identical on every variate it is attached to.
    Fixed(ComponentParams),
    /// Bound per attachment to one matching signal component of the variate.
    Dependent(DependentKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CensusItem {
    pub id: ComponentId,
    pub template: ComponentTemplate,
    pub stream: StreamPath,
    pub multiplicity: usize,
}

impl CensusItem {
    pub fn kind(&self) -> ComponentKind {
        match &self.template {
            ComponentTemplate::Fixed(p) => p.kind(),
            ComponentTemplate::Dependent(d) => d.component_kind(),
        }
    }

    fn group(&self) -> Group {
        match self.kind() {
            ComponentKind::Seasonal => Group::Seasonal,
            ComponentKind::Trend => Group::Trend,
            _ => Group::Noise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Group {
    Seasonal,
    Trend,
    Noise,
}

/// Component instances to distribute, with coverage requirements.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Census {
    pub items: Vec<CensusItem>,
    pub cover_trend: bool,
    pub cover_noise: bool,
}

impl Census {
    pub fn total_attachments(&self) -> usize {
        self.items.iter().map(|i| i.multiplicity).sum()
    }

    fn group_attachments(&self, group: Group) -> usize {
        self.items.iter().filter(|i| i.group() == group).map(|i| i.multiplicity).sum()
    }

    fn has_kind(&self, kind: ComponentKind) -> bool {
        self.items.iter().any(|i| i.kind() == kind)
    }

    pub fn validate(&self, variates: usize) -> Result<()> {
        if variates == 0 {
            return Err(Error::invalid("variates", "need at least one variate"));
        }
        if !self.has_kind(ComponentKind::Seasonal) {
            return Err(Error::InfeasibleCensus("no seasonal components".into()));
        }
        for item in &self.items {
            if item.multiplicity == 0 || item.multiplicity > variates {
                return Err(Error::InfeasibleCensus(format!(
                    "{} has multiplicity {} but there are {} variates",
                    item.id, item.multiplicity, variates
                )));
            }
            if let ComponentTemplate::Dependent(kind) = item.template {
                if !self.has_kind(kind.modulator_kind()) {
                    return Err(Error::InfeasibleCensus(format!(
                        "{} needs {} components but the census has none",
                        item.id,
                        kind.modulator_kind().tag()
                    )));
                }
            }
        }
        let need = |group, name: &str| -> Result<()> {
            let have = self.group_attachments(group);
            if have < variates {
                return Err(Error::InfeasibleCensus(format!(
                    "{name} attachments {have} cannot cover {variates} variates"
                )));
            }
            Ok(())
        };
        need(Group::Seasonal, "seasonal")?;
        if self.cover_trend {
            need(Group::Trend, "trend")?;
        }
        if self.cover_noise {
            need(Group::Noise, "noise")?;
        }
        Ok(())
    }
}

#[serde_as]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binding {
    pub modulator: ComponentId,
    #[serde_as(as = "DisplayFromStr")]
    pub sign: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VariateAttachments {
    /// Census item indices.
    pub signal: Vec<usize>,
    pub noise: Vec<(usize, Option<Binding>)>,
}

impl VariateAttachments {
    fn len(&self) -> usize {
        self.signal.len() + self.noise.len()
    }

    fn holds(&self, item: usize) -> bool {
        self.signal.contains(&item) || self.noise.iter().any(|(i, _)| *i == item)
    }
}

/// Attaches every census item to `multiplicity` distinct variates.
pub fn assign_components(
    census: &Census,
    variates: usize,
    penalty: f64,
    stream: &mut RandomStream,
) -> Result<Vec<VariateAttachments>> {
    census.validate(variates)?;
    let mut state = AssignmentState::new(variates, penalty);
    let mut out = vec![VariateAttachments::default(); variates];

    let mut order: Vec<usize> = (0..census.items.len()).collect();
    order.sort_by_key(|&i| census.items[i].group());

    for group in [Group::Seasonal, Group::Trend, Group::Noise] {
        let cover = match group {
            Group::Seasonal => true,
            Group::Trend => census.cover_trend,
            Group::Noise => census.cover_noise,
        };
        let mut remaining = census.group_attachments(group);
        let mut member = vec![false; variates];

        for &idx in order.iter().filter(|&&i| census.items[i].group() == group) {
            let item = &census.items[idx];
            let modulator_kind = match item.template {
                ComponentTemplate::Dependent(kind) => Some(kind.modulator_kind()),
                ComponentTemplate::Fixed(_) => None,
            };
            let eligible = |v: usize, att: &[VariateAttachments]| -> bool {
                if att[v].holds(idx) {
                    return false;
                }
                match modulator_kind {
                    Some(kind) => att[v].signal.iter().any(|&s| census.items[s].kind() == kind),
                    None => true,
                }
            };

            for _ in 0..item.multiplicity {
                let mut mask: Vec<bool> = (0..variates).map(|v| eligible(v, &out)).collect();
                if cover {
                    let lacking: Vec<bool> = (0..variates).map(|v| mask[v] && !member[v]).collect();
                    let n_lacking = lacking.iter().filter(|&&b| b).count();
                    if n_lacking > 0 && remaining <= n_lacking {
                        mask = lacking;
                    }
                }
                let v = draw_masked(&state.selection_probabilities(), &mask, stream).ok_or_else(|| {
                    Error::InfeasibleCensus(format!(
                        "no eligible variate left for {} (multiplicity {})",
                        item.id, item.multiplicity
                    ))
                })?;

                match modulator_kind {
                    None if group != Group::Noise => out[v].signal.push(idx),
                    None => out[v].noise.push((idx, None)),
                    Some(kind) => {
                        let candidates: Vec<usize> = out[v]
                            .signal
                            .iter()
                            .copied()
                            .filter(|&s| census.items[s].kind() == kind)
                            .collect();
                        let pick = candidates[stream.index(candidates.len())];
                        let binding = Binding { modulator: census.items[pick].id, sign: stream.sign() };
                        out[v].noise.push((idx, Some(binding)));
                    }
                }
                state.record(v);
                member[v] = true;
                remaining -= 1;
            }
        }

        if cover {
            if let Some(v) = member.iter().position(|m| !m) {
                return Err(Error::InfeasibleCensus(format!("variate {v} received no {group:?} component")));
            }
        }
    }
    debug_assert_eq!(out.iter().map(VariateAttachments::len).sum::<usize>(), census.total_attachments());
    Ok(out)
}

fn draw_masked(probs: &[f64], mask: &[bool], stream: &mut RandomStream) -> Option<usize> {
    let total: f64 = probs.iter().zip(mask).filter(|(_, &m)| m).map(|(p, _)| p).sum();
    if total <= 0.0 {
        return None;
    }
    let target = stream.uniform(0.0, total);
    let mut acc = 0.0;
    let mut last = None;
    for (v, (&p, &m)) in probs.iter().zip(mask).enumerate() {
        if !m {
            continue;
        }
        acc += p;
        last = Some(v);
        if target < acc {
            return Some(v);
        }
    }
    last
}

/// Everything needed to regenerate one variate.
#[serde_as]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariateRecipe {
    #[serde_as(as = "DisplayFromStr")]
    pub variate_id: usize,
    pub signal_components: Vec<ComponentSpec>,
    pub noise_components: Vec<ComponentSpec>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub signal_weights: Vec<f64>,
    #[serde_as(as = "Vec<DisplayFromStr>")]
    pub noise_weights: Vec<f64>,
    /// Realized SNR; `inf` for noise-free variates.
    #[serde_as(as = "DisplayFromStr")]
    pub snr: f64,
    pub stream_path: StreamPath,
}

impl VariateRecipe {
    pub fn validate(&self) -> Result<()> {
        let ctx = |m: String| Error::invalid("recipe", m).in_variate(self.variate_id);
        if self.signal_weights.len() != self.signal_components.len()
            || self.noise_weights.len() != self.noise_components.len()
        {
            return Err(ctx("weight and component counts differ".into()));
        }
        if !self.signal_components.iter().any(|c| c.id.kind == ComponentKind::Seasonal) {
            return Err(ctx("no seasonal component".into()));
        }
        for (name, ws) in [("signal", &self.signal_weights), ("noise", &self.noise_weights)] {
            if ws.is_empty() {
                continue;
            }
            let sum: f64 = ws.iter().sum();
            if (sum - 1.0).abs() > 1e-12 || ws.iter().any(|w| !(*w > 0.0)) {
                return Err(ctx(format!("{name} weights {ws:?} are not a positive partition of one")));
            }
        }
        for c in &self.noise_components {
            if let ComponentParams::Dependent(d) = &c.params {
                let ok = self
                    .signal_components
                    .iter()
                    .any(|s| s.id == d.modulator_ref && s.id.kind == d.kind.modulator_kind());
                if !ok {
                    return Err(ctx(format!("{} references missing modulator {}", c.id, d.modulator_ref)));
                }
            }
        }
        if !(self.snr > 0.0) {
            return Err(ctx(format!("snr {} must be positive", self.snr)));
        }
        if self.snr.is_finite() && self.noise_components.is_empty() {
            return Err(ctx(format!("finite snr {} without noise components", self.snr)));
        }
        Ok(())
    }
}

/// Stream every variate's weights and SNR are drawn from.
pub fn variate_stream_path(data_seed: u64, variate: usize) -> StreamPath {
    StreamPath::new(data_seed, "variate", variate as u64)
}

/// Samples weights and SNR for `path` and assembles the recipe.
pub fn recipe_for(
    census: &Census,
    variate: usize,
    attachments: &VariateAttachments,
    snr: SnrSpec,
    path: StreamPath,
) -> Result<VariateRecipe> {
    let signal_components: Vec<ComponentSpec> =
        attachments.signal.iter().map(|&i| fixed_spec(&census.items[i])).collect::<Result<_>>()?;
    let noise_components: Vec<ComponentSpec> = attachments
        .noise
        .iter()
        .map(|(i, binding)| {
            let item = &census.items[*i];
            match (&item.template, binding) {
                (ComponentTemplate::Dependent(kind), Some(b)) => Ok(ComponentSpec {
                    id: item.id,
                    params: ComponentParams::Dependent(DependentNoiseSpec {
                        kind: *kind,
                        sign: b.sign,
                        modulator_ref: b.modulator,
                    }),
                    stream: item.stream.clone(),
                }),
                _ => fixed_spec(item),
            }
        })
        .collect::<Result<_>>()?;

    let mut stream = path.derive();
    let signal_weights = sample_weights(signal_components.len(), &mut stream);
    let noise_weights = if noise_components.is_empty() {
        Vec::new()
    } else {
        sample_weights(noise_components.len(), &mut stream)
    };
    let snr = sample_snr(snr, &mut stream);
    let recipe = VariateRecipe {
        variate_id: variate,
        signal_components,
        noise_components,
        signal_weights,
        noise_weights,
        snr,
        stream_path: path,
    };
    recipe.validate()?;
    Ok(recipe)
}

fn fixed_spec(item: &CensusItem) -> Result<ComponentSpec> {
    match &item.template {
        ComponentTemplate::Fixed(params) => {
            Ok(ComponentSpec { id: item.id, params: params.clone(), stream: item.stream.clone() })
        }
        ComponentTemplate::Dependent(_) => {
            Err(Error::InfeasibleCensus(format!("{} attached without a modulator binding", item.id)))
        }
    }
}

/// One recipe per variate from completed attachments.
pub fn build_recipes(
    census: &Census,
    attachments: &[VariateAttachments],
    snr: SnrSpec,
    data_seed: u64,
) -> Result<Vec<VariateRecipe>> {
    attachments
        .iter()
        .enumerate()
        .map(|(v, att)| recipe_for(census, v, att, snr, variate_stream_path(data_seed, v)))
        .collect()
}
