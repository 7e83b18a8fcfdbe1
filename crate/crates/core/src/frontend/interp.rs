//! Direct AST interpretation of one reactive step. The executor runs steps
//! over the lowered CFG; this walker is the reference it is checked against.

use super::ast::{Program, Stmt};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepOutcome {
    Completed,
    Error(i64),
    Rejected,
}

/// Executes the step body once, mutating `globals` and appending to `outputs`.
pub fn interpret_step(program: &Program, globals: &mut [i64], input: i64, outputs: &mut Vec<i64>) -> StepOutcome {
    match exec_block(&program.body, globals, input, outputs) {
        Some(outcome) => outcome,
        None => StepOutcome::Completed,
    }
}

fn exec_block(body: &[Stmt], globals: &mut [i64], input: i64, outputs: &mut Vec<i64>) -> Option<StepOutcome> {
    for stmt in body {
        match stmt {
            Stmt::Assign { target, value } => globals[*target] = value.eval(globals, input),
            Stmt::Emit(v) => outputs.push(*v),
            Stmt::Error(k) => return Some(StepOutcome::Error(*k)),
            Stmt::Reject => return Some(StepOutcome::Rejected),
            Stmt::If { cond, then_body, else_body } => {
                let exit = if cond.eval(globals, input) != 0 {
                    exec_block(then_body, globals, input, outputs)
                } else if let Some(else_body) = else_body {
                    exec_block(else_body, globals, input, outputs)
                } else {
                    None
                };
                if exit.is_some() {
                    return exit;
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    #[test]
    fn two_branch_example() {
        let p = parse_program(
            "inputs 1..5; var a = 1; step(in){ if (in == 3) { a = 2; emit 20; } else { reject; } }",
        )
        .unwrap();
        let mut g = p.initial_state();
        let mut out = Vec::new();
        assert_eq!(interpret_step(&p, &mut g, 3, &mut out), StepOutcome::Completed);
        assert_eq!((g.as_slice(), out.as_slice()), ([2].as_slice(), [20].as_slice()));
        assert_eq!(interpret_step(&p, &mut g, 1, &mut out), StepOutcome::Rejected);
    }

    #[test]
    fn wrapping_arithmetic() {
        let p = parse_program("inputs 0..0; var a = 9223372036854775807; step(i){ a = a + 1; }").unwrap();
        let mut g = p.initial_state();
        interpret_step(&p, &mut g, 0, &mut Vec::new());
        assert_eq!(g[0], i64::MIN);
    }
}
