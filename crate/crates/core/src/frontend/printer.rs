use std::fmt::Write;

use super::ast::{Expr, Program, Stmt, UnOp};

/// Renders a program as canonical RRP source that reparses to an identical AST.
pub fn pretty_print(program: &Program) -> String {
    let mut out = String::new();
    writeln!(out, "inputs {}..{};", program.alphabet.lo, program.alphabet.hi).unwrap();
    for g in &program.globals {
        writeln!(out, "var {} = {};", g.name, g.init).unwrap();
    }
    writeln!(out, "step({}) {{", program.input_name).unwrap();
    for stmt in &program.body {
        write_stmt(&mut out, program, stmt, 1);
    }
    out.push_str("}\n");
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_stmt(out: &mut String, program: &Program, stmt: &Stmt, depth: usize) {
    indent(out, depth);
    match stmt {
        Stmt::Assign { target, value } => {
            writeln!(out, "{} = {};", program.globals[*target].name, expr_to_string(program, value))
                .unwrap();
        }
        Stmt::Emit(v) => writeln!(out, "emit {v};").unwrap(),
        Stmt::Error(k) => writeln!(out, "error {k};").unwrap(),
        Stmt::Reject => out.push_str("reject;\n"),
        Stmt::If { .. } => {
            write_if(out, program, stmt, depth);
            out.push('\n');
        }
    }
}

fn write_if(out: &mut String, program: &Program, stmt: &Stmt, depth: usize) {
    let Stmt::If { cond, then_body, else_body } = stmt else { unreachable!() };
    // Binary conditions already carry their own parentheses.
    let cond = match cond {
        Expr::Binary(..) => expr_to_string(program, cond),
        _ => format!("({})", expr_to_string(program, cond)),
    };
    writeln!(out, "if {cond} {{").unwrap();
    for s in then_body {
        write_stmt(out, program, s, depth + 1);
    }
    indent(out, depth);
    out.push('}');
    match else_body.as_deref() {
        None => {}
        Some([nested @ Stmt::If { .. }]) => {
            out.push_str(" else ");
            write_if(out, program, nested, depth);
        }
        Some(body) => {
            out.push_str(" else {\n");
            for s in body {
                write_stmt(out, program, s, depth + 1);
            }
            indent(out, depth);
            out.push('}');
        }
    }
}

pub fn expr_to_string(program: &Program, expr: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, program, expr);
    out
}

fn write_expr(out: &mut String, program: &Program, expr: &Expr) {
    match expr {
        Expr::Int(v) => write!(out, "{v}").unwrap(),
        Expr::Global(g) => out.push_str(&program.globals[*g].name),
        Expr::Input => out.push_str(&program.input_name),
        Expr::Unary(op, e) => {
            out.push_str(match op {
                UnOp::Neg => "-(",
                UnOp::Not => "!(",
            });
            write_expr(out, program, e);
            out.push(')');
        }
        Expr::Binary(op, l, r) => {
            out.push('(');
            write_expr(out, program, l);
            write!(out, " {} ", op.symbol()).unwrap();
            write_expr(out, program, r);
            out.push(')');
        }
    }
}
