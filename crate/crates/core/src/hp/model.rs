use std::collections::BTreeMap;

use super::ast::{Formula, Program};

/// A parsed model file: symbol table, domain of interest and named definitions.
#[derive(Clone, Debug, Default)]
pub struct Model {
    pub state_vars: Vec<String>,
    pub logical_vars: Vec<String>,
    /// Mode variables and their named values, in declaration order.
    pub mode_vars: BTreeMap<String, Vec<(String, f64)>>,
    pub constants: BTreeMap<String, f64>,
    /// Declared domain of interest per variable.
    pub domain: BTreeMap<String, (f64, f64)>,
    pub programs: Vec<(String, Program)>,
    pub formulas: Vec<(String, Formula)>,
}

impl Model {
    pub fn is_state_var(&self, name: &str) -> bool {
        self.state_vars.iter().any(|v| v == name)
    }

    pub fn is_logical_var(&self, name: &str) -> bool {
        self.logical_vars.iter().any(|v| v == name)
    }

    pub fn program(&self, name: &str) -> Option<&Program> {
        self.programs.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn formula(&self, name: &str) -> Option<&Formula> {
        self.formulas.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }

    pub fn program_names(&self) -> Vec<&str> {
        self.programs.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Value of a symbolic mode name.
    pub fn mode_value(&self, name: &str) -> Option<f64> {
        self.mode_vars
            .values()
            .flat_map(|vals| vals.iter())
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    /// Symbolic name of a mode value, for display.
    pub fn mode_name(&self, var: &str, value: f64) -> Option<&str> {
        self.mode_vars
            .get(var)?
            .iter()
            .find(|(_, v)| *v == value)
            .map(|(n, _)| n.as_str())
    }

    pub fn is_mode_var(&self, name: &str) -> bool {
        self.mode_vars.contains_key(name)
    }

    /// Domain of interest of a variable. Mode variables default to the hull of
    /// their values; ghost copies (`x#k`) inherit the domain of `x`.
    pub fn domain_of(&self, name: &str) -> Option<(f64, f64)> {
        if let Some(d) = self.domain.get(name) {
            return Some(*d);
        }
        if let Some(vals) = self.mode_vars.get(name) {
            let lo = vals.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
            let hi = vals.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
            return Some((lo, hi));
        }
        if let Some((base, _)) = name.split_once('#') {
            return self.domain_of(base);
        }
        None
    }

    /// Last formula definition containing a box modality.
    pub fn default_goal(&self) -> Option<(&str, &Formula)> {
        self.formulas
            .iter()
            .rev()
            .find(|(_, f)| !f.is_modality_free())
            .map(|(n, f)| (n.as_str(), f))
    }
}
