use super::{Pos, SpecError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Number(String),
    /// `--` opening a positive premise or conclusion arrow.
    ArrowOpen,
    /// `-->`
    ArrowClose,
    /// `-/` opening a negative premise.
    NegOpen,
    /// `->`
    NegClose,
    /// three or more dashes
    Separator,
    Punct(char),
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::ArrowOpen => f.write_str("`--`"),
            Tok::ArrowClose => f.write_str("`-->`"),
            Tok::NegOpen => f.write_str("`-/`"),
            Tok::NegClose => f.write_str("`->`"),
            Tok::Separator => f.write_str("`---`"),
            Tok::Punct(c) => write!(f, "`{c}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

pub(crate) fn tokenize(text: &str) -> Result<Vec<(Tok, Pos)>, SpecError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' || (c == '/' && chars.get(i + 1) == Some(&'/')) {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                j += 1;
            }
            out.push((Tok::Ident(chars[start..j].iter().collect()), pos));
            advance(&mut i, &mut line, &mut col, j - start);
            continue;
        }
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let start = i;
            let mut j = i;
            while j < chars.len() && chars[j].is_ascii_digit() {
                j += 1;
            }
            if j < chars.len() && chars[j] == '.' {
                j += 1;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
            }
            out.push((Tok::Number(chars[start..j].iter().collect()), pos));
            advance(&mut i, &mut line, &mut col, j - start);
            continue;
        }
        if c == '-' {
            let mut n = 0;
            while chars.get(i + n) == Some(&'-') {
                n += 1;
            }
            let next = chars.get(i + n).copied();
            let (tok, len) = match (n, next) {
                (1, Some('/')) => (Tok::NegOpen, 2),
                (1, Some('>')) => (Tok::NegClose, 2),
                (2, Some('>')) => (Tok::ArrowClose, 3),
                (2, _) => (Tok::ArrowOpen, 2),
                (n, Some('>')) if n >= 3 => {
                    return Err(SpecError::Syntax { pos, msg: "arrow has too many dashes".into() })
                }
                (n, _) if n >= 3 => (Tok::Separator, n),
                _ => return Err(SpecError::Syntax { pos, msg: "unexpected `-`".into() }),
            };
            out.push((tok, pos));
            advance(&mut i, &mut line, &mut col, len);
            continue;
        }
        if "(){},;:=*+\\|[]/@".contains(c) {
            out.push((Tok::Punct(c), pos));
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        return Err(SpecError::Syntax { pos, msg: format!("unexpected character `{c}`") });
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn arrows() {
        assert_eq!(
            kinds("x1 --a--> mu1 x2 -/b-> ----"),
            vec![
                Tok::Ident("x1".into()),
                Tok::ArrowOpen,
                Tok::Ident("a".into()),
                Tok::ArrowClose,
                Tok::Ident("mu1".into()),
                Tok::Ident("x2".into()),
                Tok::NegOpen,
                Tok::Ident("b".into()),
                Tok::NegClose,
                Tok::Separator,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("# c\n  op // more\n9/10 0.5").unwrap();
        assert_eq!(toks[0], (Tok::Ident("op".into()), Pos { line: 2, col: 3 }));
        assert_eq!(toks[1].0, Tok::Number("9".into()));
        assert_eq!(toks[2].0, Tok::Punct('/'));
        assert_eq!(toks[4], (Tok::Number("0.5".into()), Pos { line: 3, col: 6 }));
    }

    #[test]
    fn stray_character() {
        assert!(matches!(tokenize("op $"), Err(SpecError::Syntax { pos: Pos { line: 1, col: 4 }, .. })));
    }
}
