//! Per-partition reduction slots folded at the barrier.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceOp {
    Max,
    Min,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    I64(i64),
    F64(f64),
}

impl Value {
    pub fn as_i64(self) -> i64 {
        match self {
            Value::I64(v) => v,
            Value::F64(v) => v as i64,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Value::I64(v) => v as f64,
            Value::F64(v) => v,
        }
    }
}

/// Declares one slot: its operator and the numeric kind of its values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reduction {
    pub op: ReduceOp,
    pub identity: Value,
}

impl Reduction {
    pub fn new_i64(op: ReduceOp) -> Self {
        let identity = match op {
            ReduceOp::Max => i64::MIN,
            ReduceOp::Min => i64::MAX,
            ReduceOp::Sum => 0,
        };
        Reduction {
            op,
            identity: Value::I64(identity),
        }
    }

    pub fn new_f64(op: ReduceOp) -> Self {
        let identity = match op {
            ReduceOp::Max => f64::NEG_INFINITY,
            ReduceOp::Min => f64::INFINITY,
            ReduceOp::Sum => 0.0,
        };
        Reduction {
            op,
            identity: Value::F64(identity),
        }
    }

    pub(crate) fn fold(&self, acc: &mut Value, v: Value) -> Result<()> {
        match (acc, v) {
            (Value::I64(a), Value::I64(b)) => {
                *a = match self.op {
                    ReduceOp::Max => (*a).max(b),
                    ReduceOp::Min => (*a).min(b),
                    ReduceOp::Sum => a.wrapping_add(b),
                }
            }
            (Value::F64(a), Value::F64(b)) => {
                *a = match self.op {
                    ReduceOp::Max => a.max(b),
                    ReduceOp::Min => a.min(b),
                    ReduceOp::Sum => *a + b,
                }
            }
            (a, b) => {
                return Err(Error::Config(format!(
                    "reduction value {b:?} does not match slot kind {a:?}"
                )))
            }
        }
        Ok(())
    }
}

/// Folds worker-local accumulators, in worker order, into final values.
pub(crate) fn combine(slots: &[Reduction], locals: &[Vec<Value>]) -> Vec<Value> {
    slots
        .iter()
        .enumerate()
        .map(|(i, slot)| {
            let mut acc = slot.identity;
            for l in locals {
                slot.fold(&mut acc, l[i]).expect("accumulators share slot kinds");
            }
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_of_three() {
        let s = Reduction::new_i64(ReduceOp::Max);
        let mut acc = s.identity;
        for v in [3, 1, 2] {
            s.fold(&mut acc, Value::I64(v)).unwrap();
        }
        assert_eq!(acc, Value::I64(3));
    }

    #[test]
    fn identities() {
        let slots = [
            Reduction::new_f64(ReduceOp::Max),
            Reduction::new_f64(ReduceOp::Sum),
            Reduction::new_i64(ReduceOp::Min),
        ];
        let out = combine(&slots, &[]);
        assert_eq!(out[0], Value::F64(f64::NEG_INFINITY));
        assert_eq!(out[1], Value::F64(0.0));
        assert_eq!(out[2], Value::I64(i64::MAX));
    }

    #[test]
    fn kind_mismatch_is_an_error() {
        let s = Reduction::new_i64(ReduceOp::Sum);
        let mut acc = s.identity;
        assert!(s.fold(&mut acc, Value::F64(1.0)).is_err());
    }
}
