//! Line-oriented instance format:
//!
//! ```text
//! n m lambda
//! sources k s1 ... sk
//! u v w_uv w_vu        (one line per undirected edge, u < v, sorted)
//! ```
//!
//! Files ending in `.gz` are gzip-compressed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use thiserror::Error;

use crate::graph::{Topology, WeightedInstance};
use crate::NodeId;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

fn bad(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Malformed {
        line,
        msg: msg.into(),
    }
}

pub fn serialize_instance(inst: &WeightedInstance) -> String {
    let topo = inst.topology();
    let mut out = String::new();
    out.push_str(&format!(
        "{} {} {}\n",
        topo.n(),
        topo.edge_count(),
        inst.lambda()
    ));
    out.push_str(&format!("sources {}", inst.sources().len()));
    for s in inst.sources() {
        out.push_str(&format!(" {s}"));
    }
    out.push('\n');
    for c in 0..topo.channels() as u32 {
        let (u, v) = topo.endpoints(c);
        if u < v {
            out.push_str(&format!(
                "{u} {v} {} {}\n",
                inst.weight_of_channel(c),
                inst.weight_of_channel(topo.reverse(c))
            ));
        }
    }
    out
}

pub fn parse_instance(text: &str) -> Result<WeightedInstance, ParseError> {
    let mut lines = text.lines().enumerate();
    let (ln, header) = lines
        .next()
        .ok_or_else(|| bad(1, "empty input, expected 'n m lambda' header"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    if head.len() != 3 {
        return Err(bad(ln + 1, "header must be 'n m lambda'"));
    }
    let n: usize = head[0]
        .parse()
        .map_err(|_| bad(ln + 1, "bad node count"))?;
    let m: usize = head[1]
        .parse()
        .map_err(|_| bad(ln + 1, "bad edge count"))?;
    let lambda: u64 = head[2].parse().map_err(|_| bad(ln + 1, "bad lambda"))?;

    let (ln, src_line) = lines
        .next()
        .ok_or_else(|| bad(2, "missing 'sources' line"))?;
    let toks: Vec<&str> = src_line.split_whitespace().collect();
    if toks.first() != Some(&"sources") || toks.len() < 2 {
        return Err(bad(ln + 1, "expected 'sources k s1 ... sk'"));
    }
    let k: usize = toks[1]
        .parse()
        .map_err(|_| bad(ln + 1, "bad source count"))?;
    if toks.len() != 2 + k {
        return Err(bad(ln + 1, format!("expected {k} source ids")));
    }
    let sources: Vec<NodeId> = toks[2..]
        .iter()
        .map(|t| t.parse().map_err(|_| bad(ln + 1, "bad source id")))
        .collect::<Result<_, _>>()?;

    let mut edges = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(bad(ln + 1, "edge line must be 'u v w_uv w_vu'"));
        }
        let parse = |i: usize| -> Result<u64, ParseError> {
            f[i].parse()
                .map_err(|_| bad(ln + 1, format!("bad integer '{}'", f[i])))
        };
        let u = parse(0)? as NodeId;
        let v = parse(1)? as NodeId;
        edges.push((u, v));
        weights.push((parse(2)?, parse(3)?));
    }
    if edges.len() != m {
        return Err(bad(
            text.lines().count(),
            format!("expected {m} edge lines, found {}", edges.len()),
        ));
    }

    let topo =
        Arc::new(Topology::new(n, &edges).map_err(|e| bad(1, format!("bad topology: {e}")))?);
    let mut w = vec![0u64; topo.channels()];
    for (&(u, v), &(wf, wb)) in edges.iter().zip(&weights) {
        let c = topo.channel_between(u, v).expect("edge exists");
        w[c as usize] = wf;
        w[topo.reverse(c) as usize] = wb;
    }
    WeightedInstance::new_input(topo, w, lambda, sources).map_err(|e| bad(1, e))
}

pub fn save_instance(inst: &WeightedInstance, path: &Path) -> Result<(), ParseError> {
    let text = serialize_instance(inst);
    let file = File::create(path)?;
    if path.extension().is_some_and(|e| e == "gz") {
        let mut enc = GzEncoder::new(BufWriter::new(file), flate2::Compression::default());
        enc.write_all(text.as_bytes())?;
        enc.finish()?;
    } else {
        BufWriter::new(file).write_all(text.as_bytes())?;
    }
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<WeightedInstance, ParseError> {
    let file = File::open(path)?;
    let mut text = String::new();
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(BufReader::new(file)).read_to_string(&mut text)?;
    } else {
        BufReader::new(file).read_to_string(&mut text)?;
    }
    parse_instance(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, GeneratorSpec};

    #[test]
    fn header_only_single_node_round_trips() {
        let topo = Arc::new(Topology::new(1, &[]).unwrap());
        let inst = WeightedInstance::new_input(topo, vec![], 1, vec![0]).unwrap();
        let text = serialize_instance(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn two_node_fixed_weights_round_trip() {
        let topo = Arc::new(Topology::new(2, &[(0, 1)]).unwrap());
        let inst = WeightedInstance::new_input(topo, vec![3, 9], 10, vec![0]).unwrap();
        let text = serialize_instance(&inst);
        assert!(text.contains("0 1 3 9"));
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn generated_instance_round_trips() {
        let inst = generate(&GeneratorSpec::new(Family::ErdosRenyiConnected, 50, 20, 5)).unwrap();
        let text = serialize_instance(&inst);
        assert_eq!(parse_instance(&text).unwrap(), inst);
    }

    #[test]
    fn parse_error_carries_line_number() {
        let err = parse_instance("2 1 5\nsources 1 0\n0 1 x 2\n").unwrap_err();
        match err {
            ParseError::Malformed { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn gzip_round_trip() {
        let dir = std::env::temp_dir().join(format!("csssp-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let inst = generate(&GeneratorSpec::new(Family::Cycle, 8, 5, 2)).unwrap();
        let path = dir.join("inst.txt.gz");
        save_instance(&inst, &path).unwrap();
        assert_eq!(load_instance(&path).unwrap(), inst);
        std::fs::remove_dir_all(&dir).ok();
    }
}
