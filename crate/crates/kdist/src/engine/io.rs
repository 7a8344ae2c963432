//! Binary serialization of index artifacts.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "LKDI" | version u8 | k_max u64 |
//! section: z-score        (u64 length, then payload)
//! section: k-distance norm(u64 length, then payload)
//! section: model          (u64 length, then payload)
//! section: bounds         (u64 length, then payload)
//! section: fingerprint    (u64 length, then 32 bytes)
//! ```
//!
//! Optional sections (z-score, normalization, bounds on baseline
//! artifacts) are written with length zero. Model payloads begin with a
//! 4-byte family tag: `TRE1` (tree, 64-bit parameters), `MLP1` (network,
//! 32-bit parameters), `COP1` (baseline lines, 64-bit parameters).
//! Normalization parameters and bound deltas are 64-bit. Floats are stored
//! as raw IEEE-754 bits, so a save/load round trip is bit-exact.

use std::fs;
use std::path::Path;

use crate::bounds::{BoundDeltas, BoundFlags, BoundSet};
use crate::cop::{CopLine, CopModel};
use crate::error::{Error, Result};
use crate::normalize::{KDistNormParams, ZScoreParams};
use crate::regress::mlp::{Layer, Mlp};
use crate::regress::tree::{Node, TreeModel};
use crate::regress::{KDistModel, TrainedModel};
use crate::Real;

use super::{IndexArtifact, IndexModel};

const MAGIC: &[u8; 4] = b"LKDI";
const VERSION: u8 = 1;

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptArtifact(msg.into())
}

// ---------------------------------------------------------------- writing

fn put_u8(out: &mut Vec<u8>, v: u8) {
    out.push(v);
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, v: f64) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f64_slice(out: &mut Vec<u8>, vs: &[f64]) {
    for &v in vs {
        put_f64(out, v);
    }
}

fn zscore_bytes(z: &ZScoreParams) -> Vec<u8> {
    let mut out = Vec::new();
    put_u64(&mut out, z.dim() as u64);
    put_f64_slice(&mut out, &z.mean);
    put_f64_slice(&mut out, &z.std);
    out
}

fn norm_bytes(n: &KDistNormParams) -> Vec<u8> {
    let mut out = Vec::new();
    put_u64(&mut out, n.k_max() as u64);
    put_f64_slice(&mut out, &n.min);
    put_f64_slice(&mut out, &n.max);
    out
}

fn tree_bytes(tree: &TreeModel<Real>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"TRE1");
    put_u64(&mut out, tree.input_dim() as u64);
    put_u64(&mut out, tree.k_max() as u64);
    put_u64(&mut out, tree.nodes.len() as u64);
    put_u32(&mut out, tree.root);
    for node in &tree.nodes {
        match node {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                put_u8(&mut out, 0);
                put_u32(&mut out, *feature);
                put_f64(&mut out, *threshold);
                put_u32(&mut out, *left);
                put_u32(&mut out, *right);
            }
            Node::Leaf { values } => {
                put_u8(&mut out, 1);
                put_f64_slice(&mut out, values);
            }
        }
    }
    out
}

fn mlp_bytes(mlp: &Mlp<f32>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"MLP1");
    put_u64(&mut out, mlp.input_dim() as u64);
    put_u64(&mut out, mlp.k_max() as u64);
    put_u64(&mut out, mlp.layers.len() as u64);
    for layer in &mlp.layers {
        put_u64(&mut out, layer.fan_in as u64);
        put_u64(&mut out, layer.fan_out as u64);
        for &w in &layer.w {
            put_f32(&mut out, w);
        }
        for &b in &layer.b {
            put_f32(&mut out, b);
        }
    }
    out
}

fn cop_bytes(cop: &CopModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"COP1");
    put_u64(&mut out, cop.n() as u64);
    put_u64(&mut out, cop.k_max() as u64);
    put_u8(&mut out, cop.restore_monotone as u8);
    for line in cop.lines() {
        put_f64(&mut out, line.slope_lo);
        put_f64(&mut out, line.icept_lo);
        put_f64(&mut out, line.slope_hi);
        put_f64(&mut out, line.icept_hi);
    }
    out
}

fn bounds_bytes(b: &BoundSet) -> Vec<u8> {
    let mut out = Vec::new();
    let mode_tag = match &b.deltas {
        BoundDeltas::OverPoints { .. } => 0u8,
        BoundDeltas::OverK { .. } => 1,
        BoundDeltas::Combined { .. } => 2,
    };
    put_u8(&mut out, mode_tag);
    let flags = (b.flags.clip_nonneg as u8) | ((b.flags.restore_monotone as u8) << 1);
    put_u8(&mut out, flags);
    put_u64(&mut out, b.n as u64);
    put_u64(&mut out, b.k_max as u64);
    match &b.deltas {
        BoundDeltas::OverPoints { lo, hi } | BoundDeltas::OverK { lo, hi } => {
            put_f64_slice(&mut out, lo);
            put_f64_slice(&mut out, hi);
        }
        BoundDeltas::Combined {
            lo_per_k,
            hi_per_k,
            lo_per_p,
            hi_per_p,
        } => {
            put_f64_slice(&mut out, lo_per_k);
            put_f64_slice(&mut out, hi_per_k);
            put_f64_slice(&mut out, lo_per_p);
            put_f64_slice(&mut out, hi_per_p);
        }
    }
    out
}

fn put_section(out: &mut Vec<u8>, payload: &[u8]) {
    put_u64(out, payload.len() as u64);
    out.extend_from_slice(payload);
}

/// Serializes the artifact to `path`.
pub fn save_index(artifact: &IndexArtifact, path: &Path) -> Result<()> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u8(&mut out, VERSION);
    put_u64(&mut out, artifact.k_max as u64);
    put_section(
        &mut out,
        &artifact
            .zscore
            .as_ref()
            .map(zscore_bytes)
            .unwrap_or_default(),
    );
    put_section(
        &mut out,
        &artifact
            .kdist_norm
            .as_ref()
            .map(norm_bytes)
            .unwrap_or_default(),
    );
    let model = match &artifact.model {
        IndexModel::Learned(TrainedModel::Tree(t)) => tree_bytes(t),
        IndexModel::Learned(TrainedModel::Mlp(m)) => mlp_bytes(m),
        IndexModel::Cop(c) => cop_bytes(c),
    };
    put_section(&mut out, &model);
    put_section(
        &mut out,
        &artifact
            .bounds
            .as_ref()
            .map(bounds_bytes)
            .unwrap_or_default(),
    );
    put_section(&mut out, &artifact.fingerprint);
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------- reading

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| corrupt("unexpected end of data"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64_as_usize(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| corrupt("count overflows this platform"))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| corrupt("length overflow"))?)?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn f32_vec(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| corrupt("length overflow"))?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn done(&self, what: &str) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(corrupt(format!("trailing bytes in {what}")));
        }
        Ok(())
    }
}

fn finite_f64(vs: &[f64], what: &str) -> Result<()> {
    if vs.iter().any(|v| !v.is_finite()) {
        return Err(corrupt(format!("non-finite value in {what}")));
    }
    Ok(())
}

fn read_zscore(buf: &[u8]) -> Result<ZScoreParams> {
    let mut r = Reader::new(buf);
    let d = r.u64_as_usize()?;
    let mean = r.f64_vec(d)?;
    let std = r.f64_vec(d)?;
    r.done("z-score section")?;
    finite_f64(&mean, "z-score means")?;
    finite_f64(&std, "z-score stds")?;
    if std.iter().any(|&s| s <= 0.0) {
        return Err(corrupt("non-positive z-score std"));
    }
    Ok(ZScoreParams { mean, std })
}

fn read_norm(buf: &[u8]) -> Result<KDistNormParams> {
    let mut r = Reader::new(buf);
    let k_max = r.u64_as_usize()?;
    let min = r.f64_vec(k_max)?;
    let max = r.f64_vec(k_max)?;
    r.done("normalization section")?;
    finite_f64(&min, "normalization mins")?;
    finite_f64(&max, "normalization maxs")?;
    if min.iter().zip(&max).any(|(lo, hi)| lo > hi) {
        return Err(corrupt("normalization min above max"));
    }
    Ok(KDistNormParams { min, max })
}

fn read_tree(r: &mut Reader) -> Result<TreeModel<Real>> {
    let input_dim = r.u64_as_usize()?;
    let k_max = r.u64_as_usize()?;
    let node_count = r.u64_as_usize()?;
    let root = r.u32()?;
    if input_dim == 0 || k_max == 0 || node_count == 0 {
        return Err(corrupt("empty tree"));
    }
    let mut nodes = Vec::with_capacity(node_count.min(1 << 20));
    for _ in 0..node_count {
        let node = match r.u8()? {
            0 => Node::Split {
                feature: r.u32()?,
                threshold: r.f64()?,
                left: r.u32()?,
                right: r.u32()?,
            },
            1 => Node::Leaf {
                values: r.f64_vec(k_max)?,
            },
            t => return Err(corrupt(format!("unknown tree node tag {t}"))),
        };
        nodes.push(node);
    }
    // Structural check: every node reachable from the root exactly once —
    // rules out cycles, shared subtrees, orphans, and bad indices, so
    // prediction can walk the tree without further checks.
    let mut visited = vec![false; node_count];
    let mut stack = vec![root];
    let mut seen = 0usize;
    while let Some(i) = stack.pop() {
        let i = i as usize;
        if i >= node_count || visited[i] {
            return Err(corrupt("malformed tree topology"));
        }
        visited[i] = true;
        seen += 1;
        match &nodes[i] {
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature as usize >= input_dim || !threshold.is_finite() {
                    return Err(corrupt("invalid tree split"));
                }
                stack.push(*left);
                stack.push(*right);
            }
            Node::Leaf { values } => finite_f64(values, "tree leaf")?,
        }
    }
    if seen != node_count {
        return Err(corrupt("unreachable tree nodes"));
    }
    Ok(TreeModel::from_parts(nodes, root, input_dim, k_max))
}

fn read_mlp(r: &mut Reader) -> Result<Mlp<f32>> {
    let input_dim = r.u64_as_usize()?;
    let k_max = r.u64_as_usize()?;
    let layer_count = r.u64_as_usize()?;
    if input_dim == 0 || k_max == 0 || layer_count == 0 {
        return Err(corrupt("empty network"));
    }
    let mut layers = Vec::with_capacity(layer_count.min(64));
    let mut prev = input_dim;
    for _ in 0..layer_count {
        let fan_in = r.u64_as_usize()?;
        let fan_out = r.u64_as_usize()?;
        if fan_in != prev || fan_out == 0 {
            return Err(corrupt("network layer dimensions do not chain"));
        }
        let w = r.f32_vec(
            fan_in
                .checked_mul(fan_out)
                .ok_or_else(|| corrupt("layer too large"))?,
        )?;
        let b = r.f32_vec(fan_out)?;
        if w.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(corrupt("non-finite network weight"));
        }
        layers.push(Layer {
            w,
            b,
            fan_in,
            fan_out,
        });
        prev = fan_out;
    }
    if prev != k_max {
        return Err(corrupt("network output width differs from k_max"));
    }
    Ok(Mlp::from_layers(layers, input_dim, k_max))
}

fn read_cop(r: &mut Reader) -> Result<CopModel> {
    let n = r.u64_as_usize()?;
    let k_max = r.u64_as_usize()?;
    let restore_monotone = match r.u8()? {
        0 => false,
        1 => true,
        v => return Err(corrupt(format!("bad baseline flag byte {v}"))),
    };
    if n == 0 || k_max == 0 {
        return Err(corrupt("empty baseline model"));
    }
    let mut lines = Vec::with_capacity(n.min(1 << 20));
    for _ in 0..n {
        let line = CopLine {
            slope_lo: r.f64()?,
            icept_lo: r.f64()?,
            slope_hi: r.f64()?,
            icept_hi: r.f64()?,
        };
        let vals = [line.slope_lo, line.icept_lo, line.slope_hi, line.icept_hi];
        finite_f64(&vals, "baseline line")?;
        lines.push(line);
    }
    Ok(CopModel::from_parts(lines, k_max, restore_monotone))
}

fn read_model(buf: &[u8]) -> Result<IndexModel> {
    let mut r = Reader::new(buf);
    let tag = r.take(4)?;
    let model = match tag {
        b"TRE1" => IndexModel::Learned(TrainedModel::Tree(read_tree(&mut r)?)),
        b"MLP1" => IndexModel::Learned(TrainedModel::Mlp(read_mlp(&mut r)?)),
        b"COP1" => IndexModel::Cop(read_cop(&mut r)?),
        t => {
            return Err(corrupt(format!(
                "unknown model tag {:?}",
                String::from_utf8_lossy(t)
            )))
        }
    };
    r.done("model section")?;
    Ok(model)
}

fn read_bounds(buf: &[u8]) -> Result<BoundSet> {
    let mut r = Reader::new(buf);
    let mode_tag = r.u8()?;
    let flag_bits = r.u8()?;
    if flag_bits > 3 {
        return Err(corrupt(format!("bad bound flag byte {flag_bits}")));
    }
    let flags = BoundFlags {
        clip_nonneg: flag_bits & 1 != 0,
        restore_monotone: flag_bits & 2 != 0,
    };
    let n = r.u64_as_usize()?;
    let k_max = r.u64_as_usize()?;
    if n == 0 || k_max == 0 {
        return Err(corrupt("empty bound set"));
    }
    let deltas = match mode_tag {
        0 => BoundDeltas::OverPoints {
            lo: r.f64_vec(k_max)?,
            hi: r.f64_vec(k_max)?,
        },
        1 => BoundDeltas::OverK {
            lo: r.f64_vec(n)?,
            hi: r.f64_vec(n)?,
        },
        2 => BoundDeltas::Combined {
            lo_per_k: r.f64_vec(k_max)?,
            hi_per_k: r.f64_vec(k_max)?,
            lo_per_p: r.f64_vec(n)?,
            hi_per_p: r.f64_vec(n)?,
        },
        t => return Err(corrupt(format!("unknown bound mode tag {t}"))),
    };
    r.done("bounds section")?;
    match &deltas {
        BoundDeltas::OverPoints { lo, hi } | BoundDeltas::OverK { lo, hi } => {
            finite_f64(lo, "bound deltas")?;
            finite_f64(hi, "bound deltas")?;
        }
        BoundDeltas::Combined {
            lo_per_k,
            hi_per_k,
            lo_per_p,
            hi_per_p,
        } => {
            for v in [lo_per_k, hi_per_k, lo_per_p, hi_per_p] {
                finite_f64(v, "bound deltas")?;
            }
        }
    }
    Ok(BoundSet {
        deltas,
        flags,
        n,
        k_max,
    })
}

/// Reads an artifact back; every float is restored bit-exactly.
pub fn load_index(path: &Path) -> Result<IndexArtifact> {
    let data = fs::read(path)?;
    let mut r = Reader::new(&data);
    if r.take(4)? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = r.u8()?;
    if version != VERSION {
        return Err(Error::VersionUnsupported(version));
    }
    let k_max = r.u64_as_usize()?;

    fn section<'a>(r: &mut Reader<'a>) -> Result<&'a [u8]> {
        let len = r.u64_as_usize()?;
        r.take(len)
    }
    let zscore_buf = section(&mut r)?;
    let norm_buf = section(&mut r)?;
    let model_buf = section(&mut r)?;
    let bounds_buf = section(&mut r)?;
    let fp_buf = section(&mut r)?;
    r.done("artifact")?;

    let zscore = if zscore_buf.is_empty() {
        None
    } else {
        Some(read_zscore(zscore_buf)?)
    };
    let kdist_norm = if norm_buf.is_empty() {
        None
    } else {
        Some(read_norm(norm_buf)?)
    };
    let model = read_model(model_buf)?;
    let bounds = if bounds_buf.is_empty() {
        None
    } else {
        Some(read_bounds(bounds_buf)?)
    };
    let fingerprint: [u8; 32] = fp_buf
        .try_into()
        .map_err(|_| corrupt("fingerprint must be 32 bytes"))?;

    let artifact = IndexArtifact {
        zscore,
        kdist_norm,
        model,
        bounds,
        k_max,
        fingerprint,
    };
    artifact.validate()?;
    Ok(artifact)
}
