//! Fixed-rate block coding against `W` independent random codewords.
//!
//! Codeword `j` is symbols `j*l .. (j+1)*l` of the reproduction stream, so
//! the encoder regenerates codewords while scanning and the codebook is
//! never held in memory.

use super::{check_message, BitWriter, Bitstream, EncodeReport, GvwParams};
use crate::error::{Error, Result};
use crate::matcher::{nearest_batch, Kernel, Query, WindowSource};
use crate::source::{fill_packed, PackedSymbols, Sampler, Seed, SymbolBlock};

pub(crate) struct StreamedCodebook<'a> {
    sampler: &'a Sampler,
    seed: Seed,
    ell: usize,
    count: usize,
    bits: u32,
}

impl<'a> StreamedCodebook<'a> {
    pub(crate) fn new(sampler: &'a Sampler, seed: Seed, ell: usize, count: usize) -> Self {
        Self {
            sampler,
            seed,
            ell,
            count,
            bits: PackedSymbols::slot_bits(sampler.alphabet_size()),
        }
    }
}

impl WindowSource for StreamedCodebook<'_> {
    fn count(&self) -> usize {
        self.count
    }

    fn packed(&self, i: usize, out: &mut [u64]) {
        let per_word = (64 / self.bits) as usize;
        let len = self.ell.min(out.len() * per_word);
        fill_packed(
            self.sampler,
            self.seed,
            (i * self.ell) as u64,
            len,
            self.bits,
            out,
        );
    }

    fn plain(&self, i: usize, len: usize, buf: &mut Vec<u8>) {
        buf.clear();
        buf.resize(len, 0);
        self.sampler.fill(self.seed, (i * self.ell) as u64, buf);
    }
}

pub fn encode(x: &SymbolBlock, p: &GvwParams) -> Result<(Bitstream, EncodeReport)> {
    check_message(&p.model, x, p.settings.n)?;
    let ell = p.settings.ell;
    let sampler = p.sampler();
    let kernel = Kernel::for_distortion(&p.model.dist);
    let queries: Vec<Query> = x
        .symbols()
        .chunks(ell)
        .map(|b| Query::new(b, &kernel))
        .collect();
    let book = StreamedCodebook::new(&sampler, p.settings.seed, ell, p.codewords as usize);
    let best = nearest_batch(&kernel, &queries, &book, p.search);

    let mut w = BitWriter::new();
    let mut recon = Vec::with_capacity(x.len());
    let mut word = Vec::with_capacity(ell);
    for (r, q) in best.iter().zip(&queries) {
        let idx = r.position - 1;
        w.write(idx as u64, p.index_bits);
        book.plain(idx, q.len(), &mut word);
        recon.extend_from_slice(&word);
    }
    let stream = w.finish();
    debug_assert_eq!(stream.bit_length(), p.total_bits());
    let report = EncodeReport::new(&p.model, x, &stream, recon, Vec::new(), p.memory_symbols());
    Ok((stream, report))
}

pub fn decode(stream: &Bitstream, p: &GvwParams) -> Result<SymbolBlock> {
    if stream.bit_length() != p.total_bits() {
        return Err(Error::StreamLengthMismatch {
            expected: p.total_bits(),
            actual: stream.bit_length(),
        });
    }
    let (n, ell) = (p.settings.n, p.settings.ell);
    let sampler = p.sampler();
    let book = StreamedCodebook::new(&sampler, p.settings.seed, ell, p.codewords as usize);
    let mut r = stream.reader();
    let mut out = Vec::with_capacity(n);
    let mut word = Vec::with_capacity(ell);
    for b in 0..p.blocks {
        let idx = r.read(p.index_bits)?;
        if idx >= p.codewords {
            return Err(Error::IndexOutOfRange {
                index: idx,
                count: p.codewords,
            });
        }
        let len = ell.min(n - b * ell);
        book.plain(idx as usize, len, &mut word);
        out.extend_from_slice(&word);
    }
    Ok(SymbolBlock::from_raw(
        out,
        p.model.dist.repro_alphabet_size(),
    ))
}
