use alloc::string::String;
use alloc::vec::Vec;

/// One named scalar of an environment observation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservationVar {
    pub name: String,
    pub low: f64,
    pub high: f64,
    pub unit: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ObservationSpecError {
    #[error("duplicate observation variable `{0}`")]
    DuplicateName(String),
    #[error("observation variable `{0}` has low >= high")]
    EmptyRange(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidName(String),
}

/// Ordered list of named, bounded observation variables.
///
/// The order is significant: observations are passed around as `&[f64]`
/// slices laid out in this order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ObservationSpec {
    variables: Vec<ObservationVar>,
}

impl ObservationSpec {
    pub fn new(variables: Vec<ObservationVar>) -> Result<Self, ObservationSpecError> {
        for (i, var) in variables.iter().enumerate() {
            if !crate::dsl::is_valid_identifier(&var.name) {
                return Err(ObservationSpecError::InvalidName(var.name.clone()));
            }
            // NaN bounds fail this check too.
            if !(var.low < var.high) {
                return Err(ObservationSpecError::EmptyRange(var.name.clone()));
            }
            if variables[..i].iter().any(|v| v.name == var.name) {
                return Err(ObservationSpecError::DuplicateName(var.name.clone()));
            }
        }
        Ok(Self { variables })
    }

    pub fn variables(&self) -> &[ObservationVar] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.variables.iter().map(|v| v.name.as_str())
    }

    /// Lays out a name/value list in spec order. Returns `None` if a
    /// variable is missing.
    pub fn ordered<'a, I>(&self, pairs: I) -> Option<Vec<f64>>
    where
        I: IntoIterator<Item = (&'a str, f64)> + Clone,
    {
        self.variables
            .iter()
            .map(|var| {
                pairs
                    .clone()
                    .into_iter()
                    .find(|(name, _)| *name == var.name)
                    .map(|(_, value)| value)
            })
            .collect()
    }
}
