//! CPLEX LP text format writer, for checking compiled programs with
//! external solvers.

use std::fmt::Write;

use resplan_core::lp::{LpProblem, Sense};

fn term(out: &mut String, first: bool, coeff: f64, name: &str) {
    let _ = if coeff < 0.0 {
        write!(out, " - {} {name}", -coeff)
    } else if first {
        write!(out, " {coeff} {name}")
    } else {
        write!(out, " + {coeff} {name}")
    };
}

/// Renders `problem` with one name per column.
pub fn write_lp(problem: &LpProblem, names: &[String], comment: &str) -> String {
    assert_eq!(names.len(), problem.num_vars(), "one name per column");
    let mut out = String::new();
    for line in comment.lines() {
        let _ = writeln!(out, "\\ {line}");
    }
    out.push_str("Minimize\n obj:");
    let mut first = true;
    for (j, &c) in problem.objective.iter().enumerate() {
        if c != 0.0 {
            term(&mut out, first, c, &names[j]);
            first = false;
        }
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for (r, row) in problem.rows.iter().enumerate() {
        let _ = write!(out, " c{r}:");
        let mut first = true;
        for &(j, a) in &row.coeffs {
            term(&mut out, first, a, &names[j]);
            first = false;
        }
        if first {
            out.push_str(" 0 ");
            out.push_str(&names[0]);
        }
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let _ = writeln!(out, " {op} {}", row.rhs + 0.0);
    }
    out.push_str("Bounds\n");
    for (j, b) in problem.bounds.iter().enumerate() {
        let name = &names[j];
        match (b.lower.is_finite(), b.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            (true, false) => {
                if b.lower != 0.0 {
                    let _ = writeln!(out, " {name} >= {}", b.lower);
                }
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", b.upper);
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {name} <= {}", b.lower, b.upper);
            }
        }
    }
    out.push_str("End\n");
    out
}
