//! Complex numbers on the wire are `{"re": .., "im": ..}`.

use crate::C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct ReIm {
    re: f64,
    #[serde(default)]
    im: f64,
}

pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
    ReIm { re: z.re, im: z.im }.serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
    let r = ReIm::deserialize(d)?;
    Ok(C64::new(r.re, r.im))
}

pub mod vec {
    use super::ReIm;
    use crate::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        let w: Vec<ReIm> = v.iter().map(|z| ReIm { re: z.re, im: z.im }).collect();
        w.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let w = Vec::<ReIm>::deserialize(d)?;
        Ok(w.into_iter().map(|r| C64::new(r.re, r.im)).collect())
    }
}

/// Parse `"1.5"`, `"2i"`, `"-0.3+1.2i"`, `"0.5-i"`.
pub fn parse(s: &str) -> Option<C64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return None;
    }
    if let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) {
        // split at the last sign that is not the leading one and not an exponent sign
        let bytes = body.as_bytes();
        let mut split = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                split = Some(k);
                break;
            }
        }
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => 1.0,
            "-" => -1.0,
            x => x.parse().ok()?,
        };
        Some(C64::new(re.parse().ok()?, im))
    } else {
        Some(C64::new(t.parse().ok()?, 0.0))
    }
}

pub fn format(z: C64) -> String {
    if z.im >= 0.0 {
        format!("{}+{}i", z.re, z.im)
    } else {
        format!("{}{}i", z.re, z.im)
    }
}
