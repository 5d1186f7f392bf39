use serde::Serialize;

/// Violations found by a validator. Violations are data, not faults: an empty report means valid.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport<V> {
    violations: Vec<V>,
}

impl<V> Default for ValidationReport<V> {
    fn default() -> Self {
        ValidationReport {
            violations: Vec::new(),
        }
    }
}

impl<V> ValidationReport<V> {
    pub fn push(&mut self, violation: V) {
        self.violations.push(violation);
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations(&self) -> &[V] {
        &self.violations
    }

    pub fn into_violations(self) -> Vec<V> {
        self.violations
    }
}

impl<V> FromIterator<V> for ValidationReport<V> {
    fn from_iter<T: IntoIterator<Item = V>>(iter: T) -> Self {
        ValidationReport {
            violations: iter.into_iter().collect(),
        }
    }
}
