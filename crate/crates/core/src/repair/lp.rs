use super::model::{LinearModel, Sense, VarKind};
use std::fmt::Write;

const TERMS_PER_LINE: usize = 8;

fn write_terms(out: &mut String, names: &[String], terms: &[(usize, f64)]) {
    for (k, &(i, c)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        if k == 0 && c >= 0.0 {
            write!(out, " {} {}", c, names[i]).unwrap();
        } else {
            write!(out, " {} {} {}", sign, c.abs(), names[i]).unwrap();
        }
    }
}

/// Writes the model in CPLEX LP format. The objective constant is not part
/// of the format and is recorded in a leading comment.
pub fn export_lp(model: &LinearModel) -> String {
    let mut out = String::new();
    writeln!(out, "\\ objective constant {}", model.objective_constant).unwrap();
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, &model.names, &model.objective);
    out.push_str("\nSubject To\n");
    for r in &model.rows {
        write!(out, " {}:", r.name).unwrap();
        write_terms(&mut out, &model.names, &r.terms);
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        writeln!(out, " {} {}", op, r.rhs).unwrap();
    }
    let binaries: Vec<&str> = model
        .names
        .iter()
        .zip(&model.kinds)
        .filter(|(_, &k)| k == VarKind::Binary)
        .map(|(n, _)| n.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for chunk in binaries.chunks(TERMS_PER_LINE) {
            writeln!(out, " {}", chunk.join(" ")).unwrap();
        }
    }
    out.push_str("End\n");
    out
}
