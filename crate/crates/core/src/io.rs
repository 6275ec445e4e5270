//! Text formats for groups, subsets and planting specs.
//!
//! All three are `key: value` lines; `#` starts a comment. A table group
//! lists its `n` rows of the Cayley table after a bare `table:` line.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::group::{make_cyclic, make_from_table, make_product, make_s3, GroupModel};
use crate::plant::PlantSpec;
use crate::subset::Subset;

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// `(line number, key, value)` for every non-empty line.
fn fields(text: &str) -> Vec<(usize, &str, &str)> {
    text.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                return None;
            }
            Some(match line.split_once(':') {
                Some((k, v)) => (i + 1, k.trim(), v.trim()),
                None => (i + 1, "", line),
            })
        })
        .collect()
}

fn list(line: usize, v: &str) -> Result<Vec<String>> {
    let inner = v.strip_prefix('[').and_then(|x| x.strip_suffix(']')).ok_or_else(|| perr(line, "expected [..]"))?;
    Ok(inner.split(',').map(|t| t.trim().to_string()).filter(|t| !t.is_empty()).collect())
}

fn num(line: usize, v: &str) -> Result<usize> {
    v.parse().map_err(|_| perr(line, format!("expected a non-negative integer, got {v:?}")))
}

fn factor(line: usize, tok: &str) -> Result<GroupModel> {
    if tok.eq_ignore_ascii_case("s3") {
        return Ok(make_s3());
    }
    let n = num(line, tok)?;
    if n == 0 {
        return Err(perr(line, "cyclic factor of order 0"));
    }
    Ok(make_cyclic(n))
}

pub fn parse_group(text: &str) -> Result<GroupModel> {
    let f = fields(text);
    let (mut kind, mut label, mut n, mut factors) = (None, None, None, None);
    let mut rows: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut in_table = false;
    for &(line, k, v) in &f {
        if in_table && k.is_empty() {
            let row = v.split_whitespace().map(|t| num(line, t)).collect::<Result<Vec<_>>>()?;
            rows.push((line, row));
            continue;
        }
        in_table = false;
        match k {
            "kind" => kind = Some((line, v)),
            "label" => label = Some(v.to_string()),
            "n" => n = Some(num(line, v)?),
            "factors" => factors = Some((line, list(line, v)?)),
            "table" => {
                if !v.is_empty() {
                    return Err(perr(line, "table rows start on the next line"));
                }
                in_table = true;
            }
            "" => return Err(perr(line, format!("unexpected line {v:?}"))),
            other => return Err(perr(line, format!("unknown key {other:?}"))),
        }
    }
    let (kline, kind) = kind.ok_or_else(|| perr(1, "missing kind"))?;
    let g = match kind {
        "cyclic" => {
            let n = n.ok_or_else(|| perr(kline, "cyclic group needs n"))?;
            if n == 0 {
                return Err(perr(kline, "n must be positive"));
            }
            make_cyclic(n)
        }
        "product" => {
            let (fline, toks) = factors.ok_or_else(|| perr(kline, "product needs factors"))?;
            let mut it = toks.iter();
            let first = it.next().ok_or_else(|| perr(fline, "empty factor list"))?;
            let mut g = factor(fline, first)?;
            for t in it {
                g = make_product(&g, &factor(fline, t)?)?;
            }
            g
        }
        "table" => {
            let n = n.unwrap_or(rows.len());
            if rows.len() != n {
                return Err(perr(rows.last().map(|r| r.0).unwrap_or(kline), format!("expected {n} table rows, found {}", rows.len())));
            }
            if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != n) {
                return Err(perr(*line, format!("row has {} entries, expected {n}", r.len())));
            }
            make_from_table(rows.into_iter().map(|r| r.1).collect())?
        }
        other => return Err(perr(kline, format!("unknown kind {other:?}"))),
    };
    Ok(match label {
        Some(l) => g.with_label(l),
        None => g,
    })
}

fn factor_tokens(g: &GroupModel) -> Option<Vec<String>> {
    if let Some((a, b)) = g.factors() {
        let mut v = factor_tokens(a)?;
        v.extend(factor_tokens(b)?);
        return Some(v);
    }
    if g.is_cyclic_model() {
        return Some(vec![g.order().to_string()]);
    }
    (*g == make_s3()).then(|| vec!["s3".to_string()])
}

pub fn group_to_text(g: &GroupModel) -> String {
    let mut out = String::new();
    if g.is_cyclic_model() {
        out.push_str(&format!("kind: cyclic\nn: {}\n", g.order()));
    } else if let Some(toks) = factor_tokens(g).filter(|_| !g.is_table_model()) {
        out.push_str(&format!("kind: product\nfactors: [{}]\n", toks.join(", ")));
    } else {
        out.push_str(&format!("kind: table\nn: {}\ntable:\n", g.order()));
        for a in 0..g.order() {
            let row: Vec<String> = (0..g.order()).map(|b| g.mul(a, b).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    out.push_str(&format!("label: {}\n", g.label()));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubsetFormat {
    Indices,
    Mask,
}

pub fn subset_to_text(s: &Subset, fmt: SubsetFormat) -> String {
    match fmt {
        SubsetFormat::Indices => {
            let idx: Vec<String> = s.iter().map(|x| x.to_string()).collect();
            format!("n: {}\nindices: [{}]\n", s.universe(), idx.join(", "))
        }
        SubsetFormat::Mask => format!("n: {}\nmask: {}\n", s.universe(), s.to_hex()),
    }
}

pub fn parse_subset(text: &str) -> Result<Subset> {
    let (mut n, mut body) = (None, None);
    for (line, k, v) in fields(text) {
        match k {
            "n" => n = Some(num(line, v)?),
            "indices" | "mask" => {
                if body.is_some() {
                    return Err(perr(line, "both indices and mask given"));
                }
                body = Some((line, k, v));
            }
            other => return Err(perr(line, format!("unknown key {other:?}"))),
        }
    }
    let (line, k, v) = body.ok_or_else(|| perr(1, "missing indices or mask"))?;
    let n = n.ok_or_else(|| perr(line, "missing n"))?;
    if k == "mask" {
        return Subset::from_hex(n, v).ok_or_else(|| perr(line, format!("mask does not fit in {n} bits")));
    }
    let idx = list(line, v)?.iter().map(|t| num(line, t)).collect::<Result<Vec<_>>>()?;
    if let Some(bad) = idx.iter().find(|&&x| x >= n) {
        return Err(perr(line, format!("index {bad} out of range for n = {n}")));
    }
    Ok(Subset::from_indices(n, idx))
}

/// `dims`, `len_a`, `len_b` and optional `noise`.
pub fn parse_plant_spec(text: &str) -> Result<PlantSpec> {
    let (mut dims, mut la, mut lb, mut noise) = (None, None, None, 0);
    let mut last = 1;
    for (line, k, v) in fields(text) {
        last = line;
        match k {
            "dims" => dims = Some(list(line, v)?.iter().map(|t| num(line, t)).collect::<Result<Vec<_>>>()?),
            "len_a" => la = Some(num(line, v)?),
            "len_b" => lb = Some(num(line, v)?),
            "noise" => noise = num(line, v)?,
            other => return Err(perr(line, format!("unknown key {other:?}"))),
        }
    }
    Ok(PlantSpec {
        dims: dims.ok_or_else(|| perr(last, "missing dims"))?,
        len_a: la.ok_or_else(|| perr(last, "missing len_a"))?,
        len_b: lb.ok_or_else(|| perr(last, "missing len_b"))?,
        noise,
    })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_group(path: &Path) -> Result<GroupModel> {
    parse_group(&read_to_string(path)?)
}

pub fn load_subset(path: &Path, g: &GroupModel) -> Result<Subset> {
    let s = parse_subset(&read_to_string(path)?)?;
    g.check_subset(&s)?;
    Ok(s)
}

pub fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::make_torus;
    use proptest::prelude::*;

    #[test]
    fn group_round_trips() {
        for g in [
            make_cyclic(7),
            make_torus(&[48, 5]).unwrap(),
            make_product(&make_s3(), &make_cyclic(4)).unwrap(),
            make_s3(),
        ] {
            let text = group_to_text(&g);
            let back = parse_group(&text).unwrap();
            assert_eq!(back, g, "{text}");
            assert_eq!(back.label(), g.label());
            assert_eq!(back.torus_factors(), g.torus_factors());
        }
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = parse_group("kind: table\nn: 2\ntable:\n0 1\n1\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 5, msg: "row has 1 entries, expected 2".into() });
        assert!(matches!(parse_group("kind: cyclic\nsize: 3\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_subset("n: 4\nindices: [1, 9]\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_plant_spec("dims: [48, 5]\nlen_a: x\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(parse_group("kind: table\ntable:\n0 1\n1 1\n"), Err(Error::AxiomViolation { .. })));
    }

    #[test]
    fn plant_spec() {
        let s = parse_plant_spec("# planted\ndims: [48, 5]\nlen_a: 10\nlen_b: 12\nnoise: 2\n").unwrap();
        assert_eq!(s, PlantSpec { dims: vec![48, 5], len_a: 10, len_b: 12, noise: 2 });
    }

    proptest! {
        #[test]
        fn subset_round_trip(n in 1usize..300, seed in any::<u64>()) {
            let s = Subset::from_fn(n, |i| (i as u64).wrapping_mul(seed | 1).rotate_left(17) % 3 == 0);
            for fmt in [SubsetFormat::Indices, SubsetFormat::Mask] {
                let back = parse_subset(&subset_to_text(&s, fmt)).unwrap();
                prop_assert_eq!(back.words(), s.words());
                prop_assert_eq!(back.universe(), n);
            }
        }
    }
}
