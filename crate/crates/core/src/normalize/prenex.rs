//! Prenex normal form for conjunctive formulas.

use crate::ast::{Form, FormKind, Span, Vars};

/// Lifts all binders to one leading block and flattens the conjunction,
/// dropping `true` conjuncts. Formulas outside the `true`/`and`/`:=`/`exists`
/// fragment are returned unchanged.
pub fn prenex(f: &Form) -> Form {
    match prenex_parts(f) {
        Ok((binders, conjuncts)) => {
            let body = Form::conj(conjuncts.into_iter().filter(|c| c.kind != FormKind::Top).cloned());
            Form::exists(binders, body)
        }
        Err(_) => f.clone(),
    }
}

/// Binder block and conjunct list; fails with the span of the first
/// disjunction, `false` or definedness test.
pub(crate) fn prenex_parts(f: &Form) -> Result<(Vars, Vec<&Form>), Span> {
    let mut binders = Vec::new();
    let mut conjuncts = Vec::new();
    fn go<'a>(f: &'a Form, binders: &mut Vars, out: &mut Vec<&'a Form>) -> Result<(), Span> {
        match &f.kind {
            FormKind::And(l, r) => {
                go(l, binders, out)?;
                go(r, binders, out)
            }
            FormKind::Exists(vs, body) => {
                binders.extend(vs.iter().cloned());
                go(body, binders, out)
            }
            FormKind::Top | FormKind::Assign { .. } => {
                out.push(f);
                Ok(())
            }
            _ => Err(f.span),
        }
    }
    go(f, &mut binders, &mut conjuncts)?;
    Ok((binders, conjuncts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{vars, Expr, Ident};

    fn asg(t: &str, s: &str) -> Form {
        Form::assign1(&Ident::new(t), Expr::var(&Ident::new(s)))
    }

    #[test]
    fn lifts_quantifiers_out_of_conjunction() {
        let f = Form::and(Form::exists(vars(&["a"]), asg("a", "x")), Form::exists(vars(&["b"]), asg("b", "a")));
        let expected = Form::exists(vars(&["a", "b"]), Form::and(asg("a", "x"), asg("b", "a")));
        assert_eq!(prenex(&f), expected);
    }

    #[test]
    fn true_is_neutral() {
        assert_eq!(prenex(&Form::and(Form::top(), asg("y", "x"))), asg("y", "x"));
        assert_eq!(prenex(&Form::top()), Form::top());
    }

    #[test]
    fn prenex_is_idempotent() {
        let f = Form::and(Form::exists(vars(&["a"]), Form::and(asg("a", "x"), Form::top())), asg("y", "a"));
        let once = prenex(&f);
        assert_eq!(prenex(&once), once);
    }
}
