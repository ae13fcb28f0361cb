//! Small-step semantics.

use num_traits::{One, Zero};
use serde_json::{Map, Value};

use super::program::{Expr, Instr, Loc, Operand, Program};
use super::TermError;
use crate::nat::{self, Nat};

/// A location together with a value for every declared variable, in
/// declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub location: Loc,
    pub env: Vec<Nat>,
}

impl State {
    pub fn new(location: Loc, env: Vec<Nat>) -> Self {
        State { location, env }
    }
}

impl Program {
    pub fn is_final(&self, s: &State) -> bool {
        s.location >= self.final_location()
    }

    /// Location 0, the given variables set, all others zero.
    pub fn initial_state(&self, inputs: &[(&str, Nat)]) -> Result<State, TermError> {
        let mut env = vec![Nat::zero(); self.vars().len()];
        for (name, v) in inputs {
            let i = self
                .var_index(name)
                .ok_or_else(|| TermError::UnknownVariable(name.to_string()))?;
            env[i] = v.clone();
        }
        Ok(State::new(0, env))
    }

    pub fn value<'a>(&self, s: &'a State, name: &str) -> Option<&'a Nat> {
        self.var_index(name).map(|i| &s.env[i])
    }

    pub fn state_to_json(&self, s: &State) -> Value {
        let env: Map<String, Value> = self
            .vars()
            .iter()
            .zip(&s.env)
            .map(|(k, v)| (k.clone(), nat::serialize(v, serde_json::value::Serializer).unwrap()))
            .collect();
        serde_json::json!({ "location": s.location, "env": env })
    }

    pub fn state_from_json(&self, v: &Value) -> Result<State, TermError> {
        let bad = |m: &str| TermError::Serialization(m.to_string());
        let location = v
            .get("location")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("state needs a numeric `location`"))? as Loc;
        let env = v
            .get("env")
            .and_then(Value::as_object)
            .ok_or_else(|| bad("state needs an `env` object"))?;
        if env.len() != self.vars().len() {
            return Err(bad("env must bind exactly the declared variables"));
        }
        let mut out = vec![Nat::zero(); self.vars().len()];
        for (k, val) in env {
            let i = self
                .var_index(k)
                .ok_or_else(|| TermError::UnknownVariable(k.clone()))?;
            out[i] = nat::deserialize(val).map_err(|e| bad(&e.to_string()))?;
        }
        Ok(State::new(location, out))
    }

    pub fn trace_to_json(&self, trace: &[State]) -> Value {
        Value::Array(trace.iter().map(|s| self.state_to_json(s)).collect())
    }

    pub fn trace_from_json(&self, v: &Value) -> Result<Vec<State>, TermError> {
        v.as_array()
            .ok_or_else(|| TermError::Serialization("trace must be a list".into()))?
            .iter()
            .map(|s| self.state_from_json(s))
            .collect()
    }
}

fn operand<'a>(o: &'a Operand, env: &'a [Nat]) -> &'a Nat {
    match o {
        Operand::Var(v) => &env[*v],
        Operand::Const(c) => c,
    }
}

/// One step; final states map to themselves.
pub fn step(p: &Program, s: &State) -> State {
    let Some(ins) = p.instrs().get(s.location) else {
        return s.clone();
    };
    match ins {
        Instr::Assign { var, expr, next } => {
            let v = match expr {
                Expr::Const(c) => c.clone(),
                Expr::Var(x) => s.env[*x].clone(),
                Expr::Succ(x) => &s.env[*x] + Nat::one(),
                Expr::Pred(x) if s.env[*x].is_zero() => Nat::zero(),
                Expr::Pred(x) => &s.env[*x] - Nat::one(),
            };
            let mut env = s.env.clone();
            env[*var] = v;
            State::new(*next, env)
        }
        Instr::Branch { cond, then, els } => {
            let taken = cond.op.holds(operand(&cond.lhs, &s.env), operand(&cond.rhs, &s.env));
            State::new(if taken { *then } else { *els }, s.env.clone())
        }
    }
}

/// The trace from `s0` up to and including the first final state, or at most
/// `max_steps` steps. The flag tells whether a final state was reached.
pub fn run_prefix(p: &Program, s0: &State, max_steps: u64) -> (Vec<State>, bool) {
    let mut trace = vec![s0.clone()];
    let mut steps = 0;
    loop {
        let cur = trace.last().unwrap();
        if p.is_final(cur) {
            return (trace, true);
        }
        if steps == max_steps {
            return (trace, false);
        }
        let next = step(p, cur);
        trace.push(next);
        steps += 1;
    }
}

/// `⟨s0, t(s0), …⟩` up to the first final state.
pub fn run_trace(p: &Program, s0: &State, max_steps: u64) -> Result<Vec<State>, TermError> {
    match run_prefix(p, s0, max_steps) {
        (trace, true) => Ok(trace),
        (_, false) => Err(TermError::BudgetExceeded { steps: max_steps }),
    }
}
