//! Finite categorical distributions.

use std::collections::HashMap;
use std::hash::Hash;

use thiserror::Error;

/// Tolerance on total mass for a distribution to count as normalized.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Probability values closer than this are merged in nested-belief supports.
pub const MERGE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DistError {
    #[error("distribution has empty support")]
    Empty,
    #[error("mass at position {index} is {mass}, expected a finite non-negative value")]
    BadMass { index: usize, mass: f64 },
    #[error("total mass is zero")]
    ZeroTotal,
    #[error("element at position {index} is duplicated")]
    Duplicate { index: usize },
    #[error("masses sum to {total}, expected 1")]
    NotNormalized { total: f64 },
}

/// A finite, normalized categorical distribution with an ordered support.
///
/// Masses are non-negative and sum to one within [`MASS_TOLERANCE`]; zero
/// masses are allowed so that marginals can list every domain value. The
/// support order is the construction order and is preserved by every
/// operation, which keeps output reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct Dist<T> {
    support: Vec<(T, f64)>,
}

fn check_mass(index: usize, mass: f64) -> Result<(), DistError> {
    if mass.is_finite() && mass >= 0.0 {
        Ok(())
    } else {
        Err(DistError::BadMass { index, mass })
    }
}

impl<T> Dist<T> {
    /// Wraps an already-normalized support, rejecting duplicates.
    pub fn new(support: Vec<(T, f64)>) -> Result<Self, DistError>
    where
        T: PartialEq,
    {
        if support.is_empty() {
            return Err(DistError::Empty);
        }
        let mut total = 0.0;
        for (index, (item, mass)) in support.iter().enumerate() {
            check_mass(index, *mass)?;
            if support[..index].iter().any(|(other, _)| other == item) {
                return Err(DistError::Duplicate { index });
            }
            total += mass;
        }
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(DistError::NotNormalized { total });
        }
        Ok(Dist { support })
    }

    /// Normalizes unnormalized weights, merging repeated elements in
    /// first-seen order.
    pub fn from_weights<I>(weights: I) -> Result<Self, DistError>
    where
        I: IntoIterator<Item = (T, f64)>,
        T: Eq + Hash + Clone,
    {
        let mut position: HashMap<T, usize> = HashMap::new();
        let mut support: Vec<(T, f64)> = Vec::new();
        for (index, (item, weight)) in weights.into_iter().enumerate() {
            check_mass(index, weight)?;
            match position.get(&item) {
                Some(&at) => support[at].1 += weight,
                None => {
                    position.insert(item.clone(), support.len());
                    support.push((item, weight));
                }
            }
        }
        normalize(support)
    }

    /// Normalizes weights whose elements are known to be distinct.
    pub(crate) fn from_distinct_weights(support: Vec<(T, f64)>) -> Result<Self, DistError> {
        for (index, (_, weight)) in support.iter().enumerate() {
            check_mass(index, *weight)?;
        }
        normalize(support)
    }

    pub fn point(item: T) -> Self {
        Dist {
            support: vec![(item, 1.0)],
        }
    }

    pub fn uniform(items: Vec<T>) -> Result<Self, DistError>
    where
        T: Eq + Hash + Clone,
    {
        Self::from_weights(items.into_iter().map(|item| (item, 1.0)))
    }

    pub fn support(&self) -> &[(T, f64)] {
        &self.support
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, f64)> {
        self.support.iter().map(|(item, mass)| (item, *mass))
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    /// Always false; kept for API symmetry with collections.
    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.support.iter().map(|(_, mass)| mass).sum()
    }

    pub fn mass_of(&self, item: &T) -> f64
    where
        T: PartialEq,
    {
        self.support
            .iter()
            .find(|(other, _)| other == item)
            .map_or(0.0, |(_, mass)| *mass)
    }

    /// First element with the largest mass, in support order.
    pub fn argmax(&self) -> &T {
        let mut best = &self.support[0];
        for entry in &self.support[1..] {
            if entry.1 > best.1 {
                best = entry;
            }
        }
        &best.0
    }

    /// Pushes the distribution forward through `f`, merging equal images.
    pub fn map<U, F>(&self, mut f: F) -> Dist<U>
    where
        U: Eq + Hash + Clone,
        F: FnMut(&T) -> U,
    {
        Dist::from_weights(self.support.iter().map(|(item, mass)| (f(item), *mass)))
            .expect("pushforward of a valid distribution is valid")
    }

    pub fn into_support(self) -> Vec<(T, f64)> {
        self.support
    }
}

impl Dist<f64> {
    /// Builds a distribution over probability values from weighted samples,
    /// merging values that lie within [`MERGE_TOLERANCE`] of a group's
    /// smallest member. The support is sorted ascending.
    pub fn over_values<I>(weighted: I) -> Result<Self, DistError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut items: Vec<(f64, f64)> = Vec::new();
        for (index, (value, weight)) in weighted.into_iter().enumerate() {
            check_mass(index, weight)?;
            if !value.is_finite() {
                return Err(DistError::BadMass { index, mass: value });
            }
            items.push((value, weight));
        }
        items.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (value, weight) in items {
            match merged.last_mut() {
                Some((anchor, mass)) if value - *anchor < MERGE_TOLERANCE => *mass += weight,
                _ => merged.push((value, weight)),
            }
        }
        normalize(merged)
    }

    pub fn expectation(&self) -> f64 {
        expectation(self)
    }
}

/// Mean of a numeric distribution.
pub fn expectation(dist: &Dist<f64>) -> f64 {
    dist.iter().map(|(value, mass)| value * mass).sum()
}

fn normalize<T>(mut support: Vec<(T, f64)>) -> Result<Dist<T>, DistError> {
    if support.is_empty() {
        return Err(DistError::Empty);
    }
    let total: f64 = support.iter().map(|(_, w)| w).sum();
    if total <= 0.0 {
        return Err(DistError::ZeroTotal);
    }
    for entry in &mut support {
        entry.1 /= total;
    }
    Ok(Dist { support })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_weights_merges_and_normalizes() {
        let d = Dist::from_weights(vec![("a", 1.0), ("b", 2.0), ("a", 1.0)]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.mass_of(&"a"), 0.5);
        assert_eq!(d.mass_of(&"b"), 0.5);
        assert_eq!(d.support()[0].0, "a");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(Dist::<u8>::new(vec![]), Err(DistError::Empty));
        assert!(matches!(
            Dist::new(vec![(1u8, 0.5), (1u8, 0.5)]),
            Err(DistError::Duplicate { index: 1 })
        ));
        assert!(matches!(
            Dist::new(vec![(1u8, 0.5)]),
            Err(DistError::NotNormalized { .. })
        ));
        assert!(matches!(
            Dist::from_weights(vec![(1u8, -1.0)]),
            Err(DistError::BadMass { .. })
        ));
        assert_eq!(
            Dist::from_weights(vec![(1u8, 0.0)]),
            Err(DistError::ZeroTotal)
        );
    }

    #[test]
    fn expectation_examples() {
        assert_eq!(Dist::point(0.9).expectation(), 0.9);
        let d = Dist::over_values(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert_eq!(d.expectation(), 0.5);
    }

    #[test]
    fn over_values_merges_near_equal_probabilities() {
        let d = Dist::over_values(vec![(0.3, 1.0), (0.3 + 1e-12, 1.0), (0.7, 2.0)]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.support()[0], (0.3, 0.5));
    }

    #[test]
    fn argmax_prefers_first_on_ties() {
        let d = Dist::new(vec![('x', 0.4), ('y', 0.4), ('z', 0.2)]).unwrap();
        assert_eq!(*d.argmax(), 'x');
    }
}
