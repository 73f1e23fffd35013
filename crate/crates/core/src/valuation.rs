//! Constrained additive buyers and their demand at a two-part tariff.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::matroid::{items, ItemSet, Matroid};
use crate::mechanism::TwoPartTariff;
use crate::rational::Rational;

/// A realized buyer: item values plus the feasibility constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuyerType {
    pub values: Vec<Rational>,
    pub constraint: Matroid,
}

/// Outcome of one buyer facing a tariff.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Demand {
    pub participates: bool,
    pub bundle: ItemSet,
    pub payment: Rational,
    /// Buyer utility; 0 when not participating.
    pub surplus: Rational,
}

impl Demand {
    fn decline() -> Self {
        Demand {
            participates: false,
            bundle: 0,
            payment: Rational::zero(),
            surplus: Rational::zero(),
        }
    }
}

impl BuyerType {
    pub fn new(values: Vec<Rational>, constraint: Matroid) -> Result<Self> {
        if values.len() != constraint.m() {
            return Err(Error::DimensionMismatch {
                what: "buyer values",
                expected: constraint.m(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| v.is_negative()) {
            return Err(Error::InvalidDistribution("negative buyer value".into()));
        }
        Ok(Self { values, constraint })
    }

    pub fn m(&self) -> usize {
        self.values.len()
    }

    /// `v(S)`: the best independent subset of `s`.
    pub fn set_value(&self, s: ItemSet) -> Rational {
        let basis = self.constraint.max_weight_basis(&self.values, s);
        items(basis).fold(Rational::zero(), |acc, j| acc + &self.values[j])
    }

    /// Utility-maximizing response with full knowledge of `available`. A
    /// buyer whose best surplus is exactly 0 declines.
    pub fn demand_response(
        &self,
        tariff: &TwoPartTariff,
        available: ItemSet,
        limit: Option<&Matroid>,
    ) -> Result<Demand> {
        self.respond(tariff, available, limit, false)
    }

    pub(crate) fn respond(
        &self,
        tariff: &TwoPartTariff,
        available: ItemSet,
        limit: Option<&Matroid>,
        accept_ties: bool,
    ) -> Result<Demand> {
        if tariff.prices.len() != self.m() {
            return Err(Error::DimensionMismatch {
                what: "tariff prices",
                expected: self.m(),
                got: tariff.prices.len(),
            });
        }
        let effective = self.effective_constraint(limit.or(tariff.demand_limit.as_ref()))?;
        let weights: Vec<Rational> = self
            .values
            .iter()
            .zip(&tariff.prices)
            .map(|(v, p)| v - p)
            .collect();
        let bundle = effective.max_weight_basis(&weights, available);
        let gain = items(bundle).fold(Rational::zero(), |acc, j| acc + &weights[j]);
        let surplus = gain - &tariff.entry_fee;
        let joins = surplus.is_positive() || (accept_ties && surplus.is_zero());
        if !joins {
            return Ok(Demand::decline());
        }
        let payment = items(bundle).fold(tariff.entry_fee.clone(), |acc, j| acc + &tariff.prices[j]);
        Ok(Demand {
            participates: true,
            bundle,
            payment,
            surplus,
        })
    }

    /// The demand limit if it refines the buyer's own constraint.
    pub fn effective_constraint<'a>(&'a self, limit: Option<&'a Matroid>) -> Result<&'a Matroid> {
        match limit {
            None => Ok(&self.constraint),
            Some(l) => {
                if !l.is_submatroid_of(&self.constraint)? {
                    return Err(Error::ConstraintMismatch);
                }
                Ok(l)
            }
        }
    }
}
