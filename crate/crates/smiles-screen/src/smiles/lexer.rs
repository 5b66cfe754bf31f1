//! The lexer shared by the parser and the tokenizer. Bracket atoms are fully
//! validated here so a bracket token always carries a complete atom payload.

use super::{Atom, BondOrder, DiagnosticKind, Element, ParseDiagnostic};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LexemeData {
    Atom(Atom),
    Bond(BondOrder),
    /// Ring-closure label 1..=99.
    Ring(u16),
    BranchOpen,
    BranchClose,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Lexeme<'a> {
    pub text: &'a str,
    pub offset: usize,
    pub data: LexemeData,
}

fn err(pos: usize, kind: DiagnosticKind, msg: impl Into<String>) -> ParseDiagnostic {
    ParseDiagnostic::new(pos, kind, msg)
}

/// Lexes a whole (already trimmed) SMILES string. Structural balance of
/// branches and ring digits is the parser's job; everything lexical,
/// including bracket contents, is validated here.
pub(crate) fn lex(text: &str) -> Result<Vec<Lexeme<'_>>, ParseDiagnostic> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let data = match c {
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                i += 1;
                let element = Element::from_symbol(&(c as char).to_ascii_uppercase().to_string())
                    .expect("aromatic subset symbol");
                LexemeData::Atom(Atom::organic(element, true))
            }
            b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I' => {
                // Two-letter organic elements take priority: Cl, Br.
                let two = match (c, bytes.get(i + 1)) {
                    (b'C', Some(b'l')) => Some(Element::Cl),
                    (b'B', Some(b'r')) => Some(Element::Br),
                    _ => None,
                };
                let element = match two {
                    Some(e) => {
                        i += 2;
                        e
                    }
                    None => {
                        i += 1;
                        Element::from_symbol(&(c as char).to_string()).expect("organic symbol")
                    }
                };
                LexemeData::Atom(Atom::organic(element, false))
            }
            b'*' => {
                i += 1;
                LexemeData::Atom(Atom::organic(Element::Wildcard, false))
            }
            b'[' => {
                let (atom, end) = lex_bracket(text, i)?;
                i = end;
                LexemeData::Atom(atom)
            }
            b'-' => {
                i += 1;
                LexemeData::Bond(BondOrder::Single)
            }
            b'=' => {
                i += 1;
                LexemeData::Bond(BondOrder::Double)
            }
            b'#' => {
                i += 1;
                LexemeData::Bond(BondOrder::Triple)
            }
            b':' => {
                i += 1;
                LexemeData::Bond(BondOrder::Aromatic)
            }
            // Directional bonds are accepted but recorded as single.
            b'/' | b'\\' => {
                i += 1;
                LexemeData::Bond(BondOrder::Single)
            }
            b'1'..=b'9' => {
                i += 1;
                LexemeData::Ring((c - b'0') as u16)
            }
            b'%' => {
                let d1 = bytes.get(i + 1).filter(|b| b.is_ascii_digit());
                let d2 = bytes.get(i + 2).filter(|b| b.is_ascii_digit());
                match (d1, d2) {
                    (Some(&d1), Some(&d2)) => {
                        i += 3;
                        let label = (d1 - b'0') as u16 * 10 + (d2 - b'0') as u16;
                        if label == 0 {
                            return Err(err(
                                start,
                                DiagnosticKind::UnexpectedChar,
                                "ring-closure label %00 is not allowed",
                            ));
                        }
                        LexemeData::Ring(label)
                    }
                    _ => {
                        return Err(err(
                            start,
                            DiagnosticKind::UnexpectedChar,
                            "'%' must be followed by two digits",
                        ))
                    }
                }
            }
            b'(' => {
                i += 1;
                LexemeData::BranchOpen
            }
            b')' => {
                i += 1;
                LexemeData::BranchClose
            }
            b'.' => {
                return Err(err(
                    start,
                    DiagnosticKind::MultiFragment,
                    "multi-fragment input ('.') is not supported",
                ))
            }
            b'0' => {
                return Err(err(
                    start,
                    DiagnosticKind::UnexpectedChar,
                    "ring-closure digits run 1-9; use %nn for two-digit labels",
                ))
            }
            _ => {
                return Err(err(
                    start,
                    DiagnosticKind::UnexpectedChar,
                    format!("unexpected character {:?}", bytes[start] as char),
                ))
            }
        };
        out.push(Lexeme {
            text: &text[start..i],
            offset: start,
            data,
        });
    }
    Ok(out)
}

/// Lexes one bracket atom starting at the `[` in position `start`.
/// Field order is `[isotope? element chirality? hcount? charge?]`.
fn lex_bracket(text: &str, start: usize) -> Result<(Atom, usize), ParseDiagnostic> {
    let bytes = text.as_bytes();
    let unclosed = || {
        err(
            start,
            DiagnosticKind::UnclosedBracket,
            "bracket atom is never closed",
        )
    };
    let mut i = start + 1;

    let mut isotope: Option<u32> = None;
    let digits_start = i;
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        let d = (bytes[i] - b'0') as u32;
        let acc = isotope.unwrap_or(0) * 10 + d;
        if acc > 9999 {
            return Err(err(
                digits_start,
                DiagnosticKind::UnexpectedChar,
                "isotope number too large",
            ));
        }
        isotope = Some(acc);
        i += 1;
    }
    if isotope == Some(0) {
        return Err(err(
            digits_start,
            DiagnosticKind::UnexpectedChar,
            "isotope number must be positive",
        ));
    }

    let (element, aromatic) = match bytes.get(i) {
        None => return Err(unclosed()),
        Some(b'*') => {
            i += 1;
            (Element::Wildcard, false)
        }
        Some(&c @ (b'b' | b'c' | b'n' | b'o' | b'p' | b's')) => {
            i += 1;
            let sym = (c as char).to_ascii_uppercase().to_string();
            (Element::from_symbol(&sym).expect("aromatic subset"), true)
        }
        Some(&c) if c.is_ascii_uppercase() => {
            let mut sym = String::from(c as char);
            i += 1;
            if let Some(&c2) = bytes.get(i) {
                // 'H' never acts as a second element letter: it is uppercase.
                if c2.is_ascii_lowercase() {
                    sym.push(c2 as char);
                    i += 1;
                }
            }
            match Element::from_symbol(&sym) {
                Some(e) => (e, false),
                None => {
                    return Err(err(
                        i - sym.len(),
                        DiagnosticKind::UnexpectedChar,
                        format!("unknown element symbol {:?}", sym),
                    ))
                }
            }
        }
        Some(_) => {
            return Err(err(
                i,
                DiagnosticKind::UnexpectedChar,
                "expected an element symbol inside brackets",
            ))
        }
    };

    // Chirality is parsed and discarded; it affects nothing downstream.
    if bytes.get(i) == Some(&b'@') {
        i += 1;
        if bytes.get(i) == Some(&b'@') {
            i += 1;
        }
    }

    let mut explicit_h: Option<u8> = None;
    if bytes.get(i) == Some(&b'H') {
        i += 1;
        let mut count: Option<u32> = None;
        while i < bytes.len() && bytes[i].is_ascii_digit() && count.unwrap_or(0) < 10 {
            count = Some(count.unwrap_or(0) * 10 + (bytes[i] - b'0') as u32);
            i += 1;
        }
        explicit_h = Some(count.unwrap_or(1) as u8);
    }

    let mut charge: i32 = 0;
    if let Some(&c @ (b'+' | b'-')) = bytes.get(i) {
        let sign: i32 = if c == b'+' { 1 } else { -1 };
        i += 1;
        let mut magnitude: Option<i32> = None;
        while i < bytes.len() && bytes[i].is_ascii_digit() && magnitude.unwrap_or(0) < 10 {
            magnitude = Some(magnitude.unwrap_or(0) * 10 + (bytes[i] - b'0') as i32);
            i += 1;
        }
        let mut magnitude = magnitude.unwrap_or(1);
        if magnitude == 1 {
            // The classic repeated-sign form: ++ is +2, --- is -3.
            while bytes.get(i) == Some(&c) {
                magnitude += 1;
                i += 1;
            }
        }
        charge = sign * magnitude;
    }

    match bytes.get(i) {
        Some(b']') => i += 1,
        None => return Err(unclosed()),
        Some(_) => {
            return Err(err(
                i,
                DiagnosticKind::UnexpectedChar,
                "unexpected character inside bracket atom",
            ))
        }
    }

    Ok((
        Atom {
            element,
            aromatic,
            charge,
            isotope,
            explicit_h,
            bracket: true,
        },
        i,
    ))
}
