//! Finite, ordered state spaces.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Index of a state within its [`StateSpace`].
pub type State = usize;

#[derive(Clone, PartialEq, Eq)]
pub struct StateSpace {
    names: Vec<String>,
    index: HashMap<String, State>,
}

impl StateSpace {
    pub fn new<I, S>(names: I) -> Result<Arc<StateSpace>>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::StateSpace("state space must be non-empty".into()));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::StateSpace(format!("duplicate state `{n}`")));
            }
        }
        Ok(Arc::new(StateSpace { names, index }))
    }

    /// States named `0`, `1`, ..., `n-1`.
    pub fn numbered(n: usize) -> Result<Arc<StateSpace>> {
        StateSpace::new((0..n).map(|i| i.to_string()))
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, s: State) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Result<State> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::StateSpace(format!("unknown state `{name}`")))
    }

    pub fn states(&self) -> std::ops::Range<State> {
        0..self.names.len()
    }
}

impl fmt::Debug for StateSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.names).finish()
    }
}

pub fn same_space(a: &Arc<StateSpace>, b: &Arc<StateSpace>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

pub(crate) fn check_same(a: &Arc<StateSpace>, b: &Arc<StateSpace>) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::StateSpace("operands live over different state spaces".into()))
    }
}
