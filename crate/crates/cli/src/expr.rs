//! Scalar fields given as expressions in `x1..xd` and `r = |x|`.

use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};

use dunkl_annulus::ScalarField;

#[derive(Debug, Clone)]
pub struct Expr {
    tree: Node<DefaultNumericTypes>,
    dim: usize,
}

impl Expr {
    /// Parses `text` and evaluates it once to catch unknown names.
    pub fn parse(text: &str, dim: usize) -> Result<Self, String> {
        let tree = build_operator_tree::<DefaultNumericTypes>(text).map_err(|e| format!("cannot parse `{text}`: {e}"))?;
        let e = Self { tree, dim };
        let probe: Vec<f64> = (0..dim).map(|j| 0.3 + 0.1 * j as f64).collect();
        e.try_eval(&probe).map_err(|m| format!("cannot evaluate `{text}`: {m}"))?;
        Ok(e)
    }

    pub fn try_eval(&self, x: &[f64]) -> Result<f64, String> {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        for (j, v) in x.iter().take(self.dim).enumerate() {
            ctx.set_value(format!("x{}", j + 1), Value::Float(*v)).map_err(|e| e.to_string())?;
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        ctx.set_value("r".into(), Value::Float(r)).map_err(|e| e.to_string())?;
        self.tree.eval_number_with_context(&ctx).map_err(|e| e.to_string())
    }
}

impl ScalarField for Expr {
    /// NaN when evaluation fails; parsing already checked the names.
    fn eval(&self, x: &[f64]) -> f64 {
        self.try_eval(x).unwrap_or(f64::NAN)
    }
}
