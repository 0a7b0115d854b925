//! Variable-rate greedy parsing against a fixed random database.
//!
//! Each phrase is the longest message prefix (at most `cap` symbols) that
//! some database window reproduces within the working distortion. A phrase
//! is described by its length minus one in `F` bits, followed either by a
//! `ceil(log2 m)`-bit pointer or, when strictly shorter, by the phrase
//! itself mapped letter by letter to zero-distortion reproductions and
//! packed as one base-`|A^|` number (first letter most significant).

use super::{
    check_message, literal_bits, BitWriter, Bitstream, EncodeReport, LlzParams, Phrase, PhraseMode,
};
use crate::error::{Error, Result};
use crate::source::SymbolBlock;

use super::hyb::build_database;

pub fn encode(x: &SymbolBlock, p: &LlzParams) -> Result<(Bitstream, EncodeReport)> {
    let n = p.settings.n;
    check_message(&p.model, x, n)?;
    let db = build_database(
        &p.point.q_star,
        p.db_len as usize,
        p.settings.seed,
        &p.model.dist,
        p.limits.symbol_cap,
    )?;
    let k = p.repro_alphabet as u64;
    let dist = &p.model.dist;
    let xs = x.symbols();

    let mut w = BitWriter::new();
    let mut recon = Vec::with_capacity(n);
    let mut log = Vec::new();
    let mut pos = 0;
    while pos < n {
        let found = db.longest_match(&xs[pos..], p.point.d_bar, p.cap, p.search)?;
        let len = found.length.max(1);
        w.write((len - 1) as u64, p.length_bits);
        if found.length == 0 || p.is_literal(len) {
            debug_assert!(p.is_literal(len), "fallback phrase must be literal");
            let mut value = 0u64;
            for &a in &xs[pos..pos + len] {
                let y = dist.zero_map(a as usize);
                value = value * k + y as u64;
                recon.push(y as u8);
            }
            w.write(value, literal_bits(len, p.repro_alphabet));
            log.push(Phrase {
                length: len,
                mode: PhraseMode::Literal,
                position: 0,
            });
        } else {
            w.write((found.position - 1) as u64, p.pointer_bits);
            recon.extend(db.slice(found.position - 1, len));
            log.push(Phrase {
                length: len,
                mode: PhraseMode::Pointer,
                position: found.position,
            });
        }
        pos += len;
    }
    let stream = w.finish();
    let report = EncodeReport::new(&p.model, x, &stream, recon, log, db.len() as u64);
    Ok((stream, report))
}

pub fn decode(stream: &Bitstream, p: &LlzParams) -> Result<SymbolBlock> {
    let n = p.settings.n;
    let sampler = p.sampler();
    let k = p.repro_alphabet as u64;
    let mut r = stream.reader();
    let mut out = Vec::with_capacity(n);
    let mut digits = Vec::new();
    while out.len() < n {
        let len = r.read(p.length_bits)? as usize + 1;
        if len > p.cap || out.len() + len > n {
            return Err(Error::MalformedContainer(format!(
                "phrase of length {len} at offset {} overruns the message or cap",
                out.len()
            )));
        }
        if p.is_literal(len) {
            let mut value = r.read(literal_bits(len, p.repro_alphabet))?;
            digits.clear();
            for _ in 0..len {
                digits.push((value % k) as u8);
                value /= k;
            }
            if value != 0 {
                return Err(Error::MalformedContainer(
                    "literal value out of range".into(),
                ));
            }
            out.extend(digits.iter().rev());
        } else {
            let start = r.read(p.pointer_bits)?;
            if start + len as u64 > p.db_len {
                return Err(Error::PointerOutOfRange {
                    position: start + 1,
                    length: len as u64,
                    m: p.db_len,
                });
            }
            let at = out.len();
            out.resize(at + len, 0);
            sampler.fill(p.settings.seed, start, &mut out[at..]);
        }
    }
    if r.remaining() != 0 {
        return Err(Error::StreamLengthMismatch {
            expected: r.position(),
            actual: stream.bit_length(),
        });
    }
    Ok(SymbolBlock::from_raw(out, p.repro_alphabet))
}

/// Description length recomputed from a phrase log.
pub fn description_length(p: &LlzParams, log: &[Phrase]) -> u64 {
    log.iter().map(|ph| p.phrase_bits(ph.length)).sum()
}
