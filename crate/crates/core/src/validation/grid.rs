//! Hyperparameter grids from TOML.
//!
//! ```toml
//! [[model]]
//! family = "lstm"
//! d_y = [7, 14]
//! d_c = 14
//! learning_rate = [0.01, 0.001]
//! ```
//!
//! Every `[[model]]` block expands to the cartesian product of its lists, the
//! first-declared key varying slowest. Scalars count as one-element lists.

use std::path::Path;

use super::spec::{Candidate, ModelSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub candidates: Vec<Candidate>,
}

impl Grid {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: toml::Table = text.parse().map_err(|e| Error::Config(format!("grid is not valid TOML: {e}")))?;
        if let Some(key) = doc.keys().find(|k| *k != "model") {
            return Err(Error::Config(format!("unexpected top-level key `{key}` in grid")));
        }
        let blocks = match doc.get("model") {
            Some(toml::Value::Array(a)) => a,
            _ => return Err(Error::Config("grid needs at least one [[model]] block".into())),
        };
        let mut candidates = Vec::new();
        for (b, block) in blocks.iter().enumerate() {
            let table = block
                .as_table()
                .ok_or_else(|| Error::Config(format!("model block {b} is not a table")))?;
            candidates.extend(expand(b, table)?);
        }
        if candidates.is_empty() {
            return Err(Error::Config("grid expands to no candidates".into()));
        }
        Ok(Self { candidates })
    }
}

fn expand(b: usize, table: &toml::Table) -> Result<Vec<Candidate>> {
    let family = table
        .get("family")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Config(format!("model block {b} needs a string `family`")))?;
    let allowed = ModelSpec::keys(family).ok_or_else(|| {
        Error::Config(format!(
            "unknown model family `{family}`; expected naive, logistic, tree, forest, mlp or lstm"
        ))
    })?;
    let mut axes: Vec<(&str, Vec<toml::Value>)> = Vec::new();
    for (key, value) in table {
        if key == "family" {
            continue;
        }
        if key != "d_y" && key != "d_c" && !allowed.contains(&key.as_str()) {
            return Err(Error::Config(format!("`{key}` is not a {family} hyperparameter")));
        }
        let values = match value {
            toml::Value::Array(a) if a.is_empty() => {
                return Err(Error::Config(format!("`{key}` lists no values")));
            }
            toml::Value::Array(a) => a.clone(),
            v => vec![v.clone()],
        };
        axes.push((key, values));
    }
    let mut combos: Vec<toml::Table> = vec![toml::Table::new()];
    for (key, values) in &axes {
        combos = combos
            .into_iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut next = c.clone();
                    next.insert(key.to_string(), v.clone());
                    next
                })
            })
            .collect();
    }
    combos
        .into_iter()
        .map(|mut c| {
            c.insert("family".into(), toml::Value::String(family.into()));
            let cand: Candidate = toml::Value::Table(c.clone())
                .try_into()
                .map_err(|e| Error::Config(format!("model block {b}: {e}")))?;
            cand.validate()?;
            Ok(cand)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Precision;

    #[test]
    fn cartesian_product_in_declaration_order() {
        let g = Grid::from_toml_str(
            r#"
            [[model]]
            family = "forest"
            n_trees = [10, 20]
            max_depth = [2, 3, 4]
            d_y = 7
            [[model]]
            family = "naive"
            "#,
        )
        .unwrap();
        assert_eq!(g.candidates.len(), 7);
        let trees: Vec<(usize, usize)> = g.candidates[..6]
            .iter()
            .map(|c| match c.model {
                ModelSpec::Forest { n_trees, max_depth } => (n_trees, max_depth),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(trees, vec![(10, 2), (10, 3), (10, 4), (20, 2), (20, 3), (20, 4)]);
        assert_eq!(g.candidates[0].d_y, 7);
        assert_eq!(g.candidates[6].model, ModelSpec::Naive);
    }

    #[test]
    fn lstm_block_with_defaults() {
        let g = Grid::from_toml_str(
            "[[model]]\nfamily = \"lstm\"\nlearning_rate = 0.01\nhidden_units = 32\nlayers = 2\nepochs = 50\nbatch_size = 32\nprecision = \"f64\"\n",
        )
        .unwrap();
        let ModelSpec::Lstm { training, precision } = &g.candidates[0].model else { panic!() };
        assert_eq!((training.hidden_units, training.layers, training.epochs), (32, 2, 50));
        assert_eq!(*precision, Precision::F64);
        assert_eq!((g.candidates[0].d_y, g.candidates[0].d_c), (14, 14));
    }

    #[test]
    fn rejects_bad_grids() {
        for text in [
            "",
            "[[model]]\nfamily = \"svm\"\n",
            "[[model]]\nfamily = \"tree\"\nmax_depth = 2\nn_trees = 3\n",
            "[[model]]\nfamily = \"tree\"\nmax_depth = []\n",
            "[[model]]\nfamily = \"tree\"\nmax_depth = 0\n",
            "[[model]]\nfamily = \"mlp\"\nseed = 3\n",
            "other = 1\n",
        ] {
            assert!(matches!(Grid::from_toml_str(text), Err(Error::Config(_))), "{text}");
        }
    }
}
