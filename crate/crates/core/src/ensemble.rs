//! Highest-confidence voting over scored member classifiers.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Diagnosis};
use crate::error::{Error, Result};

/// A fitted model that emits a label with a confidence in (0, 1].
pub trait Classifier {
    fn name(&self) -> &str;
    fn schema(&self) -> &[String];
    fn predict(&self, features: &[f64]) -> Result<(Diagnosis, f64)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Conflicting labels at equal top confidence resolve to A.
    #[default]
    PreferA,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPrediction {
    pub label: Diagnosis,
    pub confidence: f64,
    pub member: String,
}

/// Picks the winning vote. Among equally confident winners the label comes
/// from the tie policy and the reported member is the lexicographically
/// smallest name, so the result never depends on member order.
pub fn vote(votes: &[ScoredPrediction], tie_policy: TiePolicy) -> Option<ScoredPrediction> {
    let top = votes.iter().map(|v| v.confidence).fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<&ScoredPrediction> = votes.iter().filter(|v| v.confidence == top).collect();
    let label = match tie_policy {
        TiePolicy::PreferA => {
            if winners.iter().any(|v| v.label == Diagnosis::A) {
                Diagnosis::A
            } else {
                Diagnosis::N
            }
        }
    };
    winners
        .into_iter()
        .filter(|v| v.label == label)
        .min_by(|a, b| a.member.cmp(&b.member))
        .cloned()
}

pub struct EnsembleModel<'a> {
    members: Vec<&'a dyn Classifier>,
    tie_policy: TiePolicy,
}

impl<'a> EnsembleModel<'a> {
    pub fn new(members: Vec<&'a dyn Classifier>, tie_policy: TiePolicy) -> Result<Self> {
        if members.len() < 2 {
            return Err(Error::InvalidArgument("an ensemble needs at least two members".into()));
        }
        let schema = members[0].schema();
        if let Some(m) = members.iter().find(|m| m.schema() != schema) {
            return Err(Error::Member {
                member: m.name().to_string(),
                source: Box::new(Error::SchemaMismatch {
                    expected: schema.to_vec(),
                    found: m.schema().to_vec(),
                }),
            });
        }
        Ok(Self { members, tie_policy })
    }

    pub fn schema(&self) -> &[String] {
        self.members[0].schema()
    }

    pub fn tie_policy(&self) -> TiePolicy {
        self.tie_policy
    }

    pub fn member_votes(&self, features: &[f64]) -> Result<Vec<ScoredPrediction>> {
        self.members
            .iter()
            .map(|m| {
                let wrap = |e| Error::Member { member: m.name().to_string(), source: Box::new(e) };
                let (label, confidence) = m.predict(features).map_err(wrap)?;
                if !(confidence > 0.0 && confidence <= 1.0) {
                    return Err(wrap(Error::NonFinite(format!("confidence {confidence} outside (0, 1]"))));
                }
                Ok(ScoredPrediction { label, confidence, member: m.name().to_string() })
            })
            .collect()
    }

    pub fn predict(&self, features: &[f64]) -> Result<ScoredPrediction> {
        let votes = self.member_votes(features)?;
        Ok(vote(&votes, self.tie_policy).expect("at least two votes"))
    }

    pub fn evaluate(&self, test: &Dataset) -> Result<Vec<EvaluatedPrediction>> {
        evaluate_with(test, self.schema(), |x| self.predict(x))
    }
}

/// A prediction paired with the sample's true label.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedPrediction {
    pub id: String,
    pub actual: Diagnosis,
    pub prediction: ScoredPrediction,
}

/// Runs any predictor over a labeled dataset after checking its schema.
pub fn evaluate_with<F>(test: &Dataset, schema: &[String], mut predict: F) -> Result<Vec<EvaluatedPrediction>>
where
    F: FnMut(&[f64]) -> Result<ScoredPrediction>,
{
    test.ensure_schema(schema)?;
    test.samples()
        .iter()
        .map(|s| {
            Ok(EvaluatedPrediction {
                id: s.id.clone(),
                actual: s.diagnosis,
                prediction: predict(&s.features)?,
            })
        })
        .collect()
}

/// Evaluates a single member as if it were an ensemble of one.
pub fn evaluate_member(member: &dyn Classifier, test: &Dataset) -> Result<Vec<EvaluatedPrediction>> {
    evaluate_with(test, member.schema(), |x| {
        let (label, confidence) = member.predict(x)?;
        Ok(ScoredPrediction { label, confidence, member: member.name().to_string() })
    })
}
