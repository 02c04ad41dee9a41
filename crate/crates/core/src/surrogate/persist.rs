//! Line-oriented text format for fitted regressors.
//!
//! ```text
//! KILNOPT-MODEL 1
//! spec family=GBT n_rounds=400 ... seed=0
//! features <p>
//! <one feature name per line>
//! linear <p>            | forest <n_trees>      | gbt <base> <lr> <n_trees>
//! coef <p values>       | tree <n_nodes>        | loss <n_rounds + 1 values>
//! intercept <value>     | L <value>             | tree ...
//!                       | S <feat> <thr> <l> <r>
//! end
//! ```
//!
//! Floats are written in Rust's shortest round-trip form, so a save/load
//! cycle reproduces predictions bit for bit.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::ensemble::{Forest, Gbt};
use super::linear::LinearModel;
use super::regressor::{FittedModel, Regressor};
use super::spec::RegressorSpec;
use super::tree::{Node, Tree};
use crate::error::{Error, Result};

pub const FORMAT_MAGIC: &str = "KILNOPT-MODEL";
pub const FORMAT_VERSION: u32 = 1;

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}

fn write_tree(out: &mut String, tree: &Tree) {
    out.push_str(&format!("tree {}\n", tree.nodes.len()));
    for node in &tree.nodes {
        match node {
            Node::Leaf { value } => out.push_str(&format!("L {value}\n")),
            Node::Split { feature, threshold, left, right } => {
                out.push_str(&format!("S {feature} {threshold} {left} {right}\n"))
            }
        }
    }
}

pub fn to_text(model: &Regressor) -> String {
    let mut out = format!("{FORMAT_MAGIC} {FORMAT_VERSION}\n");
    let pairs: Vec<String> = model.spec.to_pairs().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
    out.push_str(&format!("spec {}\n", pairs.join(" ")));
    out.push_str(&format!("features {}\n", model.schema.len()));
    for name in &model.schema {
        out.push_str(name);
        out.push('\n');
    }
    match &model.model {
        FittedModel::Linear(m) => {
            out.push_str(&format!("linear {}\ncoef {}\nintercept {}\n", m.coef.len(), join(&m.coef), m.intercept));
        }
        FittedModel::Forest(f) => {
            out.push_str(&format!("forest {}\n", f.trees.len()));
            f.trees.iter().for_each(|t| write_tree(&mut out, t));
        }
        FittedModel::Gbt(g) => {
            out.push_str(&format!("gbt {} {} {}\n", g.base_score, g.learning_rate, g.trees.len()));
            out.push_str(&format!("loss {}\n", join(&g.training_loss)));
            g.trees.iter().for_each(|t| write_tree(&mut out, t));
        }
    }
    out.push_str("end\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse { line: self.line, msg: msg.into() }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        let (i, l) = self.inner.next().ok_or_else(|| Error::Parse { line: self.line + 1, msg: "unexpected end of model file".into() })?;
        self.line = i + 1;
        Ok(l)
    }

    /// Next line split into its keyword and the remaining fields.
    fn record(&mut self, keyword: &str) -> Result<Vec<&'a str>> {
        let line = self.next_line()?;
        let mut fields = line.split_ascii_whitespace();
        match fields.next() {
            Some(k) if k == keyword => Ok(fields.collect()),
            other => Err(self.err(format!("expected `{keyword}`, found `{}`", other.unwrap_or("")))),
        }
    }

    fn parse<T: FromStr>(&self, field: &str) -> Result<T> {
        field.parse().map_err(|_| self.err(format!("cannot parse `{field}`")))
    }

    fn one<T: FromStr>(&mut self, keyword: &str) -> Result<T> {
        let f = self.record(keyword)?;
        if f.len() != 1 {
            return Err(self.err(format!("`{keyword}` takes one value")));
        }
        self.parse(f[0])
    }

    fn floats(&mut self, keyword: &str, count: usize) -> Result<Vec<f64>> {
        let f = self.record(keyword)?;
        if f.len() != count {
            return Err(self.err(format!("`{keyword}` expects {count} values, found {}", f.len())));
        }
        f.iter().map(|v| self.parse(v)).collect()
    }

    fn tree(&mut self, n_features: usize) -> Result<Tree> {
        let n: usize = self.one("tree")?;
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let line = self.next_line()?;
            let f: Vec<&str> = line.split_ascii_whitespace().collect();
            let node = match f.as_slice() {
                ["L", v] => Node::Leaf { value: self.parse(v)? },
                ["S", feat, thr, l, r] => Node::Split {
                    feature: self.parse(feat)?,
                    threshold: self.parse(thr)?,
                    left: self.parse(l)?,
                    right: self.parse(r)?,
                },
                _ => return Err(self.err("malformed tree node")),
            };
            if let Node::Split { feature, left, right, .. } = node {
                if feature >= n_features || left >= n || right >= n || left <= nodes.len() || right <= nodes.len() {
                    return Err(self.err("tree node references out of range"));
                }
            }
            nodes.push(node);
        }
        if nodes.is_empty() {
            return Err(self.err("empty tree"));
        }
        Ok(Tree { nodes })
    }
}

pub fn from_text(text: &str) -> Result<Regressor> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    let header = lines.record(FORMAT_MAGIC)?;
    let version: u32 = match header.as_slice() {
        [v] => lines.parse(v)?,
        _ => return Err(lines.err("malformed header")),
    };
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("model format version {version} is not supported (expected {FORMAT_VERSION})")));
    }
    let spec_fields = lines.record("spec")?;
    let pairs = spec_fields
        .iter()
        .map(|f| f.split_once('=').ok_or_else(|| lines.err(format!("spec field `{f}` is not key=value"))))
        .collect::<Result<Vec<_>>>()?;
    let spec = RegressorSpec::from_pairs(pairs)?;
    let p: usize = lines.one("features")?;
    let schema = (0..p).map(|_| lines.next_line().map(str::to_string)).collect::<Result<Vec<_>>>()?;

    let kind_line = lines.next_line()?;
    let fields: Vec<&str> = kind_line.split_ascii_whitespace().collect();
    let model = match fields.as_slice() {
        ["linear", n] => {
            let n: usize = lines.parse(n)?;
            if n != p {
                return Err(lines.err("coefficient count differs from feature count"));
            }
            let coef = lines.floats("coef", n)?;
            let intercept = lines.one("intercept")?;
            FittedModel::Linear(LinearModel { coef, intercept })
        }
        ["forest", n] => {
            let n: usize = lines.parse(n)?;
            let trees = (0..n).map(|_| lines.tree(p)).collect::<Result<Vec<_>>>()?;
            FittedModel::Forest(Forest { trees })
        }
        ["gbt", base, lr, n] => {
            let base_score = lines.parse(base)?;
            let learning_rate = lines.parse(lr)?;
            let n: usize = lines.parse(n)?;
            let training_loss = lines.floats("loss", n + 1)?;
            let trees = (0..n).map(|_| lines.tree(p)).collect::<Result<Vec<_>>>()?;
            FittedModel::Gbt(Gbt { base_score, learning_rate, trees, training_loss })
        }
        _ => return Err(lines.err(format!("unknown model block `{kind_line}`"))),
    };
    lines.record("end")?;
    Ok(Regressor { spec, schema, model })
}

pub fn save_model(model: &Regressor, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_text(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Regressor> {
    from_text(&fs::read_to_string(path)?)
}
