//! Minimal s-expression reader shared by the textual formats (formulas,
//! rules, bases, argument structures, construction terms).

use std::fmt;

use thiserror::Error;

/// Byte offset into the source text.
pub type Pos = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Symbol(String, Pos),
    List(Vec<Sexp>, Pos),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {pos}: {message}")]
pub struct SyntaxError {
    pub pos: Pos,
    pub message: String,
}

impl SyntaxError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        SyntaxError {
            pos,
            message: message.into(),
        }
    }
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Symbol(_, p) | Sexp::List(_, p) => *p,
        }
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            Sexp::Symbol(s, _) => Some(s),
            Sexp::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List(items, _) => Some(items),
            Sexp::Symbol(..) => None,
        }
    }

    /// Returns the items of a list whose head symbol is `head`.
    pub fn tagged(&self, head: &str) -> Option<&[Sexp]> {
        match self.as_list() {
            Some([Sexp::Symbol(h, _), rest @ ..]) if h == head => Some(rest),
            _ => None,
        }
    }

    pub fn expect_symbol(&self, what: &str) -> Result<&str, SyntaxError> {
        self.as_symbol()
            .ok_or_else(|| SyntaxError::new(self.pos(), format!("expected {what}")))
    }

    /// Lists wider than `width` are broken before each list item, one per
    /// line; leading symbols stay on the opening line. Reads back the same.
    pub fn pretty(&self, width: usize) -> String {
        let mut out = String::new();
        self.pretty_into(width, 0, &mut out);
        out
    }

    fn pretty_into(&self, width: usize, indent: usize, out: &mut String) {
        let flat = self.to_string();
        let items = match self {
            Sexp::List(items, _) if indent + flat.len() > width => items,
            _ => {
                out.push_str(&flat);
                return;
            }
        };
        out.push('(');
        let mut broke = false;
        for (i, item) in items.iter().enumerate() {
            if broke || matches!(item, Sexp::List(..)) {
                broke = true;
                out.push('\n');
                out.push_str(&" ".repeat(indent + 2));
            } else if i > 0 {
                out.push(' ');
            }
            item.pretty_into(width, indent + 2, out);
        }
        out.push(')');
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexp], SyntaxError> {
        self.as_list()
            .ok_or_else(|| SyntaxError::new(self.pos(), format!("expected {what}")))
    }
}

impl fmt::Display for Sexp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sexp::Symbol(s, _) => f.write_str(s),
            Sexp::List(items, _) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || c == '(' || c == ')' || c == ';'
}

/// Parses every top-level expression in `text`. `;` starts a line comment.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, SyntaxError> {
    let mut stack: Vec<(Vec<Sexp>, Pos)> = Vec::new();
    let mut top = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == ';' {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
            }
        } else if c == '(' {
            chars.next();
            stack.push((Vec::new(), pos));
        } else if c == ')' {
            chars.next();
            let (items, start) = stack
                .pop()
                .ok_or_else(|| SyntaxError::new(pos, "unbalanced ')'"))?;
            let list = Sexp::List(items, start);
            match stack.last_mut() {
                Some((parent, _)) => parent.push(list),
                None => top.push(list),
            }
        } else {
            let mut sym = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if is_delimiter(c) {
                    break;
                }
                sym.push(c);
                chars.next();
            }
            let atom = Sexp::Symbol(sym, pos);
            match stack.last_mut() {
                Some((parent, _)) => parent.push(atom),
                None => top.push(atom),
            }
        }
    }
    if let Some((_, start)) = stack.pop() {
        return Err(SyntaxError::new(start, "unclosed '('"));
    }
    Ok(top)
}

/// Parses exactly one expression.
pub fn parse_one(text: &str) -> Result<Sexp, SyntaxError> {
    let mut all = parse_all(text)?;
    match all.len() {
        1 => Ok(all.pop().expect("length checked")),
        0 => Err(SyntaxError::new(0, "empty input")),
        _ => Err(SyntaxError::new(
            all[1].pos(),
            "trailing input after expression",
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_lists_and_comments() {
        let all = parse_all("(a (b c)) ; note\n d").unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].to_string(), "(a (b c))");
        assert_eq!(all[1].as_symbol(), Some("d"));
    }

    #[test]
    fn reports_unbalanced_positions() {
        assert_eq!(parse_all("(a").unwrap_err().pos, 0);
        assert_eq!(parse_all("a )").unwrap_err().pos, 2);
        assert!(parse_one("a b").is_err());
    }

    #[test]
    fn pretty_breaks_only_wide_lists() {
        let s = parse_one("(node q ((node p :assume 1) (node (imp p q) :axiom)) :bind 1)").unwrap();
        assert_eq!(s.pretty(80), s.to_string());
        let narrow = s.pretty(20);
        assert!(narrow.lines().count() > 1, "{narrow}");
        assert!(narrow.lines().all(|l| l.len() <= 34), "{narrow}");
        assert_eq!(parse_one(&narrow).unwrap().to_string(), s.to_string());
    }
}
