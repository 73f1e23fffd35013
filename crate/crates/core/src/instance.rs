//! JSON instance files.
//!
//! ```json
//! {
//!   "n": 2,
//!   "items": 2,
//!   "distributions": [{"atoms": [["1", "1/2"], ["2", "1/2"]]}, {"atoms": [["3", "1"]]}],
//!   "matroid": {"variant": "uniform", "k": 1},
//!   "ex_ante": ["1/4", "1/4"]
//! }
//! ```
//!
//! `distributions`, `matroid` and `ex_ante` are either shared by every agent
//! or given as one entry per agent.

use serde::{Deserialize, Serialize};

use crate::dist::{ProductDist, ValueDist};
use crate::error::{Error, Result};
use crate::matroid::{Matroid, MatroidSpec};
use crate::mechanism::{Agent, ExAnteConstraint};
use crate::rational::Rational;
use crate::symmetric::SymmetricInstance;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerAgent<T> {
    Shared(T),
    Each(Vec<T>),
}

impl<T: Clone> PerAgent<T> {
    fn expand(&self, n: usize, what: &'static str) -> Result<Vec<T>> {
        match self {
            PerAgent::Shared(x) => Ok(vec![x.clone(); n]),
            PerAgent::Each(xs) if xs.len() == n => Ok(xs.clone()),
            PerAgent::Each(xs) => Err(Error::DimensionMismatch { what, expected: n, got: xs.len() }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps(#[serde(with = "crate::rational::serde_rational_vec")] pub Vec<Rational>);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub items: usize,
    pub distributions: PerAgent<Vec<ValueDist>>,
    pub matroid: PerAgent<MatroidSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ex_ante: Option<PerAgent<Caps>>,
    /// Submatroid every buyer is restricted to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_limit: Option<MatroidSpec>,
}

/// A validated instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub agents: Vec<Agent>,
    pub ex_ante: Option<Vec<ExAnteConstraint>>,
    pub demand_limit: Option<Matroid>,
    /// Every agent shares one distribution and one matroid.
    pub symmetric: bool,
}

impl Instance {
    /// Parses and validates. Errors name the offending field and position.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: InstanceFile = serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Parse(format!("at `{}`: {}", e.path(), e.inner())))?;
        file.build()
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    pub fn m(&self) -> usize {
        self.agents[0].dist.m()
    }

    /// Caps for agent `i`, unconstrained when the file has none.
    pub fn constraint(&self, i: usize) -> ExAnteConstraint {
        match &self.ex_ante {
            Some(c) => c[i].clone(),
            None => ExAnteConstraint::unconstrained(&self.agents[i].dist),
        }
    }

    pub fn to_symmetric(&self) -> Result<SymmetricInstance> {
        if !self.symmetric {
            return Err(Error::Precondition("agents are not identical".into()));
        }
        let a = &self.agents[0];
        let inst = SymmetricInstance::new(self.n(), a.dist.clone(), a.constraint.clone())?;
        match &self.demand_limit {
            Some(l) => inst.with_demand_limit(l.clone()),
            None => Ok(inst),
        }
    }
}

impl InstanceFile {
    pub fn build(&self) -> Result<Instance> {
        let (n, m) = (self.n, self.items);
        if n == 0 || m == 0 {
            return Err(Error::Parse("`n` and `items` must be positive".into()));
        }
        let dists = self.distributions.expand(n, "per-agent distributions")?;
        let specs = self.matroid.expand(n, "per-agent matroids")?;
        let mut agents = Vec::with_capacity(n);
        for (i, (d, s)) in dists.into_iter().zip(&specs).enumerate() {
            if d.len() != m {
                return Err(Error::Parse(format!("agent {i}: {} distributions for {m} items", d.len())));
            }
            let f = s.build(m).map_err(|e| Error::Parse(format!("agent {i}: matroid: {e}")))?;
            agents.push(Agent::new(ProductDist::new(d)?, f)?);
        }
        let ex_ante = match &self.ex_ante {
            None => None,
            Some(caps) => {
                let caps = caps.expand(n, "per-agent ex ante caps")?;
                let c = caps
                    .into_iter()
                    .zip(&agents)
                    .enumerate()
                    .map(|(i, (q, a))| {
                        ExAnteConstraint::new(&a.dist, q.0).map_err(|e| Error::Parse(format!("agent {i}: ex_ante: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(c)
            }
        };
        let demand_limit = self
            .demand_limit
            .as_ref()
            .map(|s| s.build(m).map_err(|e| Error::Parse(format!("demand_limit: {e}"))))
            .transpose()?;
        if let Some(l) = &demand_limit {
            for a in &agents {
                if !l.is_submatroid_of(&a.constraint)? {
                    return Err(Error::ConstraintMismatch);
                }
            }
        }
        let symmetric = agents.windows(2).all(|w| w[0] == w[1]);
        Ok(Instance { agents, ex_ante, demand_limit, symmetric })
    }
}
