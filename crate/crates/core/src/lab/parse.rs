//! Space and weight descriptors: JSON, or a compact shorthand such as
//! `rosenthal_woo(inf, 1, power:0.4)` and `power:0.4`.

use crate::error::{Error, Result};
use crate::spaces::{Exponent, SpaceSpec};
use crate::weights::Weight;

fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse(msg.into()))
}

fn number(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().or_else(|_| parse_err(format!("expected a number, got {:?}", s.trim())))
}

fn exponent(s: &str) -> Result<Exponent> {
    match s.trim() {
        "inf" | "infinity" | "∞" => Ok(Exponent::INFINITY),
        other => number(other).map(Exponent),
    }
}

/// Parses a weight: JSON, `counting`, `constant:c`, `power:θ`,
/// `geometric:r`, or `explicit:v1|v2|...` (the last value repeats).
pub fn parse_weight(text: &str) -> Result<Weight> {
    let t = text.trim();
    let w = if t.starts_with('{') {
        serde_json::from_str(t)?
    } else {
        let (kind, arg) = t.split_once(':').unwrap_or((t, ""));
        match kind.trim() {
            "counting" | "one" => Weight::counting(),
            "constant" => Weight::Constant { c: number(arg)? },
            "power" => Weight::Power { theta: number(arg)? },
            "geometric" => Weight::Geometric { r: number(arg)? },
            "explicit" => {
                let values = arg.split(['|', ',', ';']).map(number).collect::<Result<Vec<f64>>>()?;
                let Some(&tail) = values.last() else { return parse_err("explicit weight needs values") };
                Weight::Explicit { values, tail }
            }
            other => return parse_err(format!("unknown weight kind {other:?}")),
        }
    };
    w.validate()?;
    Ok(w)
}

/// Splits at commas that are not nested inside parentheses.
fn split_args(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out
}

/// Parses a space: JSON (the serialized [`SpaceSpec`]) or shorthand.
pub fn parse_spec(text: &str) -> Result<SpaceSpec> {
    let t = text.trim();
    if t.starts_with('{') {
        return Ok(serde_json::from_str(t)?);
    }
    let (name, args) = match t.find('(') {
        Some(i) if t.ends_with(')') => (&t[..i], split_args(&t[i + 1..t.len() - 1])),
        Some(_) => return parse_err(format!("unbalanced parentheses in {t:?}")),
        None => (t, Vec::new()),
    };
    let want = |n: usize| -> Result<()> {
        if args.len() == n {
            Ok(())
        } else {
            parse_err(format!("{name} takes {n} argument(s), got {}", args.len()))
        }
    };
    let spec = match name.trim() {
        "lp" => {
            want(1)?;
            SpaceSpec::Lp { p: exponent(args[0])? }
        }
        "weighted_lp" => {
            want(2)?;
            SpaceSpec::WeightedLp { p: exponent(args[0])?, weight: parse_weight(args[1])? }
        }
        "schreier" => {
            want(0)?;
            SpaceSpec::Schreier
        }
        "ebasis" => {
            want(0)?;
            SpaceSpec::Ebasis
        }
        "james" => {
            want(1)?;
            SpaceSpec::James { q: exponent(args[0])? }
        }
        "f1q" => {
            want(2)?;
            let levels = args[1]
                .split('|')
                .map(|l| l.trim().parse::<u32>().or_else(|_| parse_err(format!("bad level {l:?}"))))
                .collect::<Result<Vec<u32>>>()?;
            SpaceSpec::F1q { q: exponent(args[0])?, levels }
        }
        "pathological" => {
            want(2)?;
            let blocks = args[1].parse::<usize>().or_else(|_| parse_err(format!("bad block count {:?}", args[1])))?;
            SpaceSpec::pathological(exponent(args[0])?.value(), blocks)
        }
        "rosenthal_woo" => {
            want(3)?;
            SpaceSpec::RosenthalWoo { q: exponent(args[0])?, p: exponent(args[1])?, weight: parse_weight(args[2])? }
        }
        "rw_summing" => {
            want(2)?;
            SpaceSpec::RwSumming { q: exponent(args[0])?, weight: parse_weight(args[1])? }
        }
        other => return parse_err(format!("unknown space {other:?}")),
    };
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shorthand_matches_constructors() {
        assert_eq!(parse_spec("lp(1)").unwrap(), SpaceSpec::lp(1.0));
        assert_eq!(
            parse_spec("rosenthal_woo(inf, 1, power:0.4)").unwrap(),
            SpaceSpec::rosenthal_woo(f64::INFINITY, 1.0, Weight::power(0.4))
        );
        assert_eq!(parse_spec("pathological(2, 3)").unwrap(), SpaceSpec::pathological(2.0, 3));
        assert_eq!(parse_spec(" schreier ").unwrap(), SpaceSpec::Schreier);
        assert_eq!(parse_spec(r#"{"kind":"james","q":2}"#).unwrap(), SpaceSpec::James { q: Exponent(2.0) });
    }

    #[test]
    fn weights() {
        assert_eq!(parse_weight("counting").unwrap(), Weight::counting());
        assert_eq!(
            parse_weight("explicit:1|3|2").unwrap(),
            Weight::Explicit { values: vec![1.0, 3.0, 2.0], tail: 2.0 }
        );
        assert!(parse_weight("power:-1").is_err());
        assert!(parse_weight("zigzag:1").is_err());
    }

    #[test]
    fn bad_shapes_are_parse_errors() {
        for bad in ["lp", "lp(1,2)", "lp(x)", "nosuch(1)", "james(2"] {
            assert!(matches!(parse_spec(bad), Err(Error::Parse(_))), "{bad}");
        }
    }
}
