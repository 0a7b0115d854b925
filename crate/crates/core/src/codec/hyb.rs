//! Fixed-rate block coding against the sliding windows of one database.

use super::{check_message, BitWriter, Bitstream, BlockParams, EncodeReport, HybParams};
use crate::error::{Error, Result};
use crate::matcher::{Candidates, Database};
use crate::model::DistortionSpec;
use crate::source::{generate_database, generate_packed_database, Sampler, Seed, SymbolBlock};

/// Materializes the first `m` symbols of the reproduction stream.
pub(crate) fn build_database(
    q_star: &[f64],
    m: usize,
    seed: Seed,
    dist: &DistortionSpec,
    cap: u64,
) -> Result<Database> {
    let db = if Database::packs(dist) {
        Database::from_packed(generate_packed_database(q_star, m, seed, cap)?, dist)?
    } else {
        Database::new(generate_database(q_star, m, seed, cap)?, dist)?
    };
    debug_assert_eq!(db.len(), m);
    Ok(db)
}

pub fn encode(x: &SymbolBlock, p: &HybParams) -> Result<(Bitstream, EncodeReport)> {
    let count = p.codewords as usize;
    encode_over(x, p, p.db_len() as usize, Candidates::Sliding { count })
}

/// Block coding over a database of `db_len` symbols with an arbitrary
/// candidate set. With `Strided { stride: l, count: W }` over `l * W`
/// symbols this is exactly the GVW encoder.
pub fn encode_over(
    x: &SymbolBlock,
    p: &BlockParams,
    db_len: usize,
    candidates: Candidates,
) -> Result<(Bitstream, EncodeReport)> {
    check_message(&p.model, x, p.settings.n)?;
    if candidates.count() as u64 > p.codewords {
        return Err(Error::ParamMismatch(format!(
            "{} candidates cannot be indexed with {} bits",
            candidates.count(),
            p.index_bits
        )));
    }
    let db = build_database(
        &p.point.q_star,
        db_len,
        p.settings.seed,
        &p.model.dist,
        p.limits.symbol_cap,
    )?;
    let blocks: Vec<&[u8]> = x.symbols().chunks(p.settings.ell).collect();
    let best = db.nearest_windows(&blocks, candidates, p.search)?;

    let mut w = BitWriter::new();
    let mut recon = Vec::with_capacity(x.len());
    for (r, b) in best.iter().zip(&blocks) {
        let idx = r.position - 1;
        w.write(idx as u64, p.index_bits);
        recon.extend(db.slice(candidates.start(idx), b.len()));
    }
    let stream = w.finish();
    let report = EncodeReport::new(&p.model, x, &stream, recon, Vec::new(), db.len() as u64);
    Ok((stream, report))
}

pub fn decode(stream: &Bitstream, p: &HybParams) -> Result<SymbolBlock> {
    if stream.bit_length() != p.total_bits() {
        return Err(Error::StreamLengthMismatch {
            expected: p.total_bits(),
            actual: stream.bit_length(),
        });
    }
    let (n, ell) = (p.settings.n, p.settings.ell);
    let sampler = Sampler::new(&p.point.q_star)?;
    let mut r = stream.reader();
    let mut out = vec![0u8; n];
    for b in 0..p.blocks {
        let idx = r.read(p.index_bits)?;
        if idx >= p.codewords {
            return Err(Error::IndexOutOfRange {
                index: idx,
                count: p.codewords,
            });
        }
        let lo = b * ell;
        let hi = n.min(lo + ell);
        // Window `idx` is stream symbols idx .. idx + l.
        sampler.fill(p.settings.seed, idx, &mut out[lo..hi]);
    }
    Ok(SymbolBlock::from_raw(
        out,
        p.model.dist.repro_alphabet_size(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{gvw, GvwParams, Limits, Settings};
    use crate::model::Model;
    use crate::source::sample_block;

    fn params(seed: u64, n: usize) -> HybParams {
        let m = Model::bernoulli_hamming(0.4).unwrap();
        let s = Settings::new(n, 9, 0.1, 0.002, Seed(seed)).unwrap();
        HybParams::new(&m, s, Limits::default()).unwrap()
    }

    #[test]
    fn roundtrip() {
        let p = params(11, 50);
        let x = sample_block(&[0.6, 0.4], 50, Seed(12)).unwrap();
        let (s, rep) = encode(&x, &p).unwrap();
        assert_eq!(s.bit_length(), p.total_bits());
        assert_eq!(decode(&s, &p).unwrap(), rep.reconstruction);
        assert_eq!(rep.memory_symbols, p.db_len());
    }

    #[test]
    fn window_blocks_are_exact() {
        let p = params(4, 18);
        let db = build_database(
            &p.point.q_star,
            p.db_len() as usize,
            Seed(4),
            &p.model.dist,
            u64::MAX,
        )
        .unwrap();
        let mut msg = db.slice(7, 9);
        msg.extend(db.slice(2, 9));
        let x = SymbolBlock::new(msg, 2).unwrap();
        let (_, rep) = encode(&x, &p).unwrap();
        assert_eq!(rep.achieved_distortion, 0.0);
    }

    #[test]
    fn zero_indices() {
        let p = params(2, 20);
        let bits = p.total_bits();
        let s = Bitstream::from_parts(vec![0; (bits as usize).div_ceil(8)], bits).unwrap();
        let out = decode(&s, &p).unwrap();
        let mut head = vec![0u8; 9];
        Sampler::new(&p.point.q_star)
            .unwrap()
            .fill(Seed(2), 0, &mut head);
        let expect: Vec<u8> = head.iter().cycle().take(20).copied().collect();
        assert_eq!(out.symbols(), &expect[..]);
    }

    #[test]
    fn bad_index() {
        let p = params(2, 9);
        let mut w = BitWriter::new();
        w.write((1 << p.index_bits) - 1, p.index_bits);
        assert!(matches!(
            decode(&w.finish(), &p),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn strided_equals_gvw() {
        let m = Model::bernoulli_hamming(0.4).unwrap();
        let s = Settings::new(40, 9, 0.1, 0.002, Seed(21)).unwrap();
        let g = GvwParams::new(&m, s, Limits::default()).unwrap();
        let x = sample_block(&[0.6, 0.4], 40, Seed(5)).unwrap();
        let (gs, grep) = gvw::encode(&x, &g).unwrap();
        let ell = 9;
        let w = g.codewords as usize;
        let (hs, hrep) = encode_over(
            &x,
            &g.0,
            ell * w,
            Candidates::Strided {
                stride: ell,
                count: w,
            },
        )
        .unwrap();
        assert_eq!(gs, hs);
        assert_eq!(grep.reconstruction, hrep.reconstruction);
    }
}
