//! Minimal s-expression reader for solver responses.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    /// Integer value of `5`, `(- 5)`, `true`/`false` (as 1/0).
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Sexp::Atom(a) if a == "true" => Some(1),
            Sexp::Atom(a) if a == "false" => Some(0),
            Sexp::Atom(a) => a.parse().ok(),
            Sexp::List(items) => match items.as_slice() {
                [Sexp::Atom(m), x] if m == "-" => x.as_int().map(|v| -v),
                _ => None,
            },
        }
    }
}

/// Parses every top-level s-expression in `text`.
pub fn parse_all(text: &str) -> Result<Vec<Sexp>, String> {
    let chars: Vec<char> = text.chars().collect();
    let mut pos = 0;
    let mut out = Vec::new();
    loop {
        skip_ws(&chars, &mut pos);
        if pos >= chars.len() {
            return Ok(out);
        }
        out.push(parse_one(&chars, &mut pos)?);
    }
}

fn skip_ws(c: &[char], pos: &mut usize) {
    while *pos < c.len() {
        if c[*pos].is_whitespace() {
            *pos += 1;
        } else if c[*pos] == ';' {
            while *pos < c.len() && c[*pos] != '\n' {
                *pos += 1;
            }
        } else {
            break;
        }
    }
}

fn parse_one(c: &[char], pos: &mut usize) -> Result<Sexp, String> {
    skip_ws(c, pos);
    match c.get(*pos) {
        None => Err("unexpected end of input".into()),
        Some('(') => {
            *pos += 1;
            let mut items = Vec::new();
            loop {
                skip_ws(c, pos);
                match c.get(*pos) {
                    None => return Err("unclosed list".into()),
                    Some(')') => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    _ => items.push(parse_one(c, pos)?),
                }
            }
        }
        Some(')') => Err(format!("unexpected ')' at {}", *pos)),
        Some('|') => {
            let start = *pos + 1;
            let end = c[start..].iter().position(|&x| x == '|').ok_or("unclosed quoted symbol")? + start;
            *pos = end + 1;
            Ok(Sexp::Atom(c[start..end].iter().collect()))
        }
        Some('"') => {
            let mut s = String::new();
            *pos += 1;
            while *pos < c.len() {
                if c[*pos] == '"' {
                    if c.get(*pos + 1) == Some(&'"') {
                        s.push('"');
                        *pos += 2;
                        continue;
                    }
                    *pos += 1;
                    return Ok(Sexp::Atom(s));
                }
                s.push(c[*pos]);
                *pos += 1;
            }
            Err("unclosed string".into())
        }
        Some(_) => {
            let start = *pos;
            while *pos < c.len() && !c[*pos].is_whitespace() && c[*pos] != '(' && c[*pos] != ')' {
                *pos += 1;
            }
            Ok(Sexp::Atom(c[start..*pos].iter().collect()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_a_value_list() {
        let v = parse_all("sat\n((|r!dp[i][j]| 1) (|c!n| (- 3)) (b true))").unwrap();
        assert_eq!(v[0], Sexp::Atom("sat".into()));
        let Sexp::List(pairs) = &v[1] else { panic!() };
        let vals: Vec<(String, i64)> = pairs
            .iter()
            .map(|p| match p {
                Sexp::List(kv) => (kv[0].as_atom().unwrap().to_string(), kv[1].as_int().unwrap()),
                _ => panic!(),
            })
            .collect();
        assert_eq!(vals, vec![("r!dp[i][j]".into(), 1), ("c!n".into(), -3), ("b".into(), 1)]);
    }

    #[test]
    fn rejects_unbalanced() {
        assert!(parse_all("((a)").is_err());
    }
}
