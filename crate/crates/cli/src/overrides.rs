//! `--set key=value` handling.
//!
//! Overrides are applied to the TOML image of a config, so every
//! serde-visible field is reachable by its dotted path (`rfd.seed`,
//! `spawns.0.rate_per_s`) and the final value still passes through the
//! config's own deserializer, which re-checks types and rejects unknown
//! field names.

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use toml::Value;

/// Returns `base` with each `key=value` override applied in order.
pub fn apply<T>(base: &T, sets: &[String]) -> Result<T>
where
    T: Serialize + DeserializeOwned,
{
    let mut image = Value::try_from(base).context("serializing config")?;
    for set in sets {
        let (path, raw) = set
            .split_once('=')
            .ok_or_else(|| anyhow!("--set '{set}' is not key=value"))?;
        set_path(&mut image, path, raw).with_context(|| format!("--set '{set}'"))?;
    }
    image.try_into().context("applying overrides")
}

fn set_path(root: &mut Value, path: &str, raw: &str) -> Result<()> {
    if path.is_empty() {
        bail!("empty key");
    }
    let mut cur = root;
    let mut segments = path.split('.').peekable();
    while let Some(seg) = segments.next() {
        let last = segments.peek().is_none();
        match cur {
            Value::Table(t) => {
                if last {
                    // Absent keys are allowed here: optional fields are
                    // omitted from the image when unset. Typos still fail
                    // when the deserializer rejects the unknown name.
                    let parsed = typed_value(t.get(seg), raw)?;
                    t.insert(seg.to_owned(), parsed);
                    return Ok(());
                }
                cur = t
                    .get_mut(seg)
                    .ok_or_else(|| anyhow!("unknown key segment '{seg}'"))?;
            }
            Value::Array(items) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| anyhow!("'{seg}' is not an array index"))?;
                let len = items.len();
                let slot = items
                    .get_mut(idx)
                    .ok_or_else(|| anyhow!("index {idx} out of bounds (len {len})"))?;
                if last {
                    *slot = typed_value(Some(&*slot), raw)?;
                    return Ok(());
                }
                cur = slot;
            }
            other => bail!("'{seg}' cannot index into a {}", other.type_str()),
        }
    }
    unreachable!("loop returns on the last segment");
}

/// Parses `raw` with the type of the value it replaces; a fresh key falls
/// back to bool/integer/float inference, then string.
fn typed_value(existing: Option<&Value>, raw: &str) -> Result<Value> {
    let v = match existing {
        Some(Value::String(_)) => Value::String(raw.to_owned()),
        Some(Value::Integer(_)) => Value::Integer(
            raw.parse()
                .map_err(|_| anyhow!("'{raw}' is not an integer"))?,
        ),
        Some(Value::Float(_)) => Value::Float(
            raw.parse()
                .map_err(|_| anyhow!("'{raw}' is not a number"))?,
        ),
        Some(Value::Boolean(_)) => Value::Boolean(
            raw.parse()
                .map_err(|_| anyhow!("'{raw}' is not true or false"))?,
        ),
        Some(other) => bail!("cannot replace a {} with a scalar", other.type_str()),
        None => {
            if let Ok(b) = raw.parse::<bool>() {
                Value::Boolean(b)
            } else if let Ok(i) = raw.parse::<i64>() {
                Value::Integer(i)
            } else if let Ok(f) = raw.parse::<f64>() {
                Value::Float(f)
            } else {
                Value::String(raw.to_owned())
            }
        }
    };
    Ok(v)
}
