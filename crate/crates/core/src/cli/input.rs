use std::fmt;
use std::str::FromStr;

use crate::engine::place_colors;
use crate::protocols::Color;

/// How agents receive their input colors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputSpec {
    /// `0,1,1,0`: one color per node.
    Explicit(Vec<Color>),
    /// `0:5,1:3`: color counts, placed by seed.
    Counts(Vec<(Color, usize)>),
    /// `half`: `n/2` red agents, the rest color 1.
    Half,
    /// `red:r`: `r` red agents, the rest color 1.
    Red(usize),
}

impl FromStr for InputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("unparsable input spec {s:?}");
        if s == "half" {
            return Ok(InputSpec::Half);
        }
        if let Some(r) = s.strip_prefix("red:") {
            return r.parse().map(InputSpec::Red).map_err(|_| bad());
        }
        if s.contains(':') {
            let counts = s
                .split(',')
                .map(|pair| {
                    let (c, k) = pair.split_once(':').ok_or_else(bad)?;
                    Ok((c.trim().parse().map_err(|_| bad())?, k.trim().parse().map_err(|_| bad())?))
                })
                .collect::<Result<Vec<(Color, usize)>, String>>()?;
            return Ok(InputSpec::Counts(counts));
        }
        s.split(',')
            .map(|c| c.trim().parse().map_err(|_| bad()))
            .collect::<Result<Vec<Color>, String>>()
            .map(InputSpec::Explicit)
    }
}

impl fmt::Display for InputSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSpec::Explicit(colors) => {
                let parts: Vec<String> = colors.iter().map(ToString::to_string).collect();
                f.write_str(&parts.join(","))
            }
            InputSpec::Counts(counts) => {
                let parts: Vec<String> = counts.iter().map(|(c, k)| format!("{c}:{k}")).collect();
                f.write_str(&parts.join(","))
            }
            InputSpec::Half => f.write_str("half"),
            InputSpec::Red(r) => write!(f, "red:{r}"),
        }
    }
}

impl InputSpec {
    /// Node-indexed colors for `n` nodes; count specs are shuffled with
    /// `seed`.
    pub fn realize(&self, n: usize, seed: u64) -> Result<Vec<Color>, String> {
        let counts = match self {
            InputSpec::Explicit(colors) => {
                if colors.len() != n {
                    return Err(format!("input lists {} colors for {n} nodes", colors.len()));
                }
                return Ok(colors.clone());
            }
            InputSpec::Counts(counts) => counts.clone(),
            InputSpec::Half => vec![(0, n / 2), (1, n - n / 2)],
            InputSpec::Red(r) => {
                if *r > n {
                    return Err(format!("{r} red agents do not fit in {n} nodes"));
                }
                vec![(0, *r), (1, n - r)]
            }
        };
        let total: usize = counts.iter().map(|&(_, k)| k).sum();
        if total != n {
            return Err(format!("input counts sum to {total} but the graph has {n} nodes"));
        }
        Ok(place_colors(&counts, seed))
    }
}

/// Parses `a..b` (exclusive), `a..=b`, or a comma list.
pub fn parse_range_list(s: &str) -> Result<Vec<u64>, String> {
    let bad = || format!("expected a..b or a comma list, got {s:?}");
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..=") {
        let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        return Ok((a..=b).collect());
    }
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
        return Ok((a..b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}
