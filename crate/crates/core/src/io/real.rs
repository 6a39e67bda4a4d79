//! Real numbers in configuration files: plain JSON numbers or strings such as
//! `"3pi"`, `"-pi/2"`, `"2.5*pi"` and `"1e-8"`.

use std::f64::consts::PI;

use serde::de::{self, Deserializer, Visitor};

pub fn parse(text: &str) -> Result<f64, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => {
            let d: f64 = d.parse().map_err(|_| format!("bad denominator in {text:?}"))?;
            (n.to_string(), d)
        }
        None => (s.clone(), 1.0),
    };
    let value = if let Some(coef) = num.strip_suffix("pi").or_else(|| num.strip_suffix('π')) {
        let coef = coef.strip_suffix('*').unwrap_or(coef);
        let c = match coef {
            "" | "+" => 1.0,
            "-" => -1.0,
            c => c.parse::<f64>().map_err(|_| format!("bad coefficient in {text:?}"))?,
        };
        c * PI
    } else {
        num.parse::<f64>().map_err(|_| format!("cannot read {text:?} as a real number"))?
    };
    let v = value / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{text:?} is not finite"))
    }
}

struct RealVisitor;

impl Visitor<'_> for RealVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
        f.write_str("a number or a string like \"3pi\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        parse(v).map_err(E::custom)
    }
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    d.deserialize_any(RealVisitor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forms() {
        assert_eq!(parse("3pi").unwrap(), 3.0 * PI);
        assert_eq!(parse("3 * pi").unwrap(), 3.0 * PI);
        assert_eq!(parse("-pi/2").unwrap(), -PI / 2.0);
        assert_eq!(parse("pi").unwrap(), PI);
        assert_eq!(parse("1e-8").unwrap(), 1e-8);
        assert_eq!(parse("2.5").unwrap(), 2.5);
        assert!(parse("three").is_err());
        assert!(parse("1/0").is_err());
    }
}
