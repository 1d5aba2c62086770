use rand::Rng as _;

use super::ProductGraph;
use crate::error::{Error, Result};
use crate::rng::Rng;

const MAX_REJECTIONS: usize = 64;

/// Draw `k` replacement values for triple `index`, uniformly and with replacement
/// from all values except the observed one. With `filtered`, every value already
/// observed for the same (title, attribute) pair is excluded too.
///
/// Returns value ids into [`ProductGraph::values`].
pub fn sample_negatives(
    graph: &ProductGraph,
    index: usize,
    k: usize,
    rng: &mut Rng,
    filtered: bool,
) -> Result<Vec<u32>> {
    let n_values = graph.values().len() as u32;
    let (title_id, value_id) = graph.entity_ids(index);
    if n_values < 2 {
        return Err(Error::SamplingExhausted { triple: index });
    }
    if !filtered {
        return Ok((0..k)
            .map(|_| {
                let v = rng.gen_range(0..n_values - 1);
                if v >= value_id {
                    v + 1
                } else {
                    v
                }
            })
            .collect());
    }

    let attribute = graph.triples()[index].attribute;
    let excluded = graph.known_values(title_id, attribute);
    let mut out = Vec::with_capacity(k);
    let mut pool: Option<Vec<u32>> = None;
    for _ in 0..k {
        if let Some(pool) = &pool {
            out.push(pool[rng.gen_range(0..pool.len())]);
            continue;
        }
        let mut drawn = None;
        for _ in 0..MAX_REJECTIONS {
            let v = rng.gen_range(0..n_values);
            if v != value_id && !excluded.contains(&v) {
                drawn = Some(v);
                break;
            }
        }
        match drawn {
            Some(v) => out.push(v),
            None => {
                // Dense exclusions: switch to sampling from the explicit pool.
                let p: Vec<u32> = (0..n_values)
                    .filter(|v| *v != value_id && !excluded.contains(v))
                    .collect();
                if p.is_empty() {
                    return Err(Error::SamplingExhausted { triple: index });
                }
                out.push(p[rng.gen_range(0..p.len())]);
                pool = Some(p);
            }
        }
    }
    Ok(out)
}
