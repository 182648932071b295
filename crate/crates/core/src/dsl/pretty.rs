use super::Term;

fn level(t: &Term) -> u8 {
    match t {
        Term::Par(..) => 1,
        Term::Choice(..) => 2,
        Term::PChoice(..) => 3,
        Term::Seq(..) => 4,
        _ => 5,
    }
}

fn wrap(t: &Term, min: u8, out: &mut String) {
    if level(t) < min {
        out.push('(');
        go(t, out);
        out.push(')');
    } else {
        go(t, out);
    }
}

fn binary(l: &Term, op: &str, r: &Term, lv: u8, out: &mut String) {
    wrap(l, lv, out);
    out.push_str(op);
    wrap(r, lv + 1, out);
}

fn go(t: &Term, out: &mut String) {
    match t {
        Term::Atom(n) => out.push_str(&n.text),
        Term::Skip => out.push_str("skip"),
        Term::Abort => out.push_str("abort"),
        Term::Par(a, b) => binary(a, " || ", b, 1, out),
        Term::Choice(a, b) => binary(a, " + ", b, 2, out),
        Term::PChoice(p, a, b) => binary(a, &format!(" [{p}] "), b, 3, out),
        Term::Seq(a, b) => binary(a, " ; ", b, 4, out),
        Term::If(g, a, b) => {
            out.push_str(&format!("if {} {{ ", g.text));
            go(a, out);
            out.push_str(" } else { ");
            go(b, out);
            out.push_str(" }");
        }
        Term::Star(a, b, d) => {
            out.push_str("star(");
            go(a, out);
            out.push_str(", ");
            go(b, out);
            out.push_str(&format!(", {d})"));
        }
    }
}

/// Concrete syntax with the fewest parentheses that parse back to `t`.
pub fn pretty(t: &Term) -> String {
    let mut out = String::new();
    go(t, &mut out);
    out
}
