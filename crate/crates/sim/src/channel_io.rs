//! Channel dump and load in CSV.
//!
//! One row per complex entry with header
//! `link,tone,node_a,node_b,row,col,re,im`. Rows are tone-major; within a
//! tone come the BS–user links (BS-major, then user), the BS–IRS links
//! (BS-major, then IRS) and the IRS–user links (IRS-major, then user), each
//! matrix row-major. `link` is `direct`, `bs_irs` or `irs_user`. Values use
//! the shortest decimal form that round-trips exactly.

use std::io::{Read, Write};

use cellfree_core::channel::ChannelSet;
use cellfree_core::linalg::{CMat, C64};
use cellfree_core::scenario::Dims;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    link: String,
    tone: usize,
    node_a: usize,
    node_b: usize,
    row: usize,
    col: usize,
    re: f64,
    im: f64,
}

/// Link name, node counts, index function and matrices of one link group.
type LinkGroup<'a> = (&'static str, usize, usize, &'a dyn Fn(usize, usize) -> usize, &'a Vec<CMat>);

pub fn write_channels<W: Write>(chan: &ChannelSet, out: W) -> Result<()> {
    let d = chan.dims;
    let mut w = csv::Writer::from_writer(out);
    for m in 0..d.n_tones {
        let groups: [LinkGroup; 3] = [
            ("direct", d.n_bs, d.n_users, &|a, b| chan.direct_index(a, b, m), &chan.direct),
            ("bs_irs", d.n_bs, d.n_irs, &|a, b| chan.bs_irs_index(a, b, m), &chan.bs_irs),
            ("irs_user", d.n_irs, d.n_users, &|a, b| chan.irs_user_index(a, b, m), &chan.irs_user),
        ];
        for (link, na, nb, index, mats) in groups {
            for a in 0..na {
                for b in 0..nb {
                    let mat: &cellfree_core::linalg::CMat = &mats[index(a, b)];
                    for r in 0..mat.nrows() {
                        for c in 0..mat.ncols() {
                            let z = mat[(r, c)];
                            w.serialize(Entry {
                                link: link.to_string(),
                                tone: m,
                                node_a: a,
                                node_b: b,
                                row: r,
                                col: c,
                                re: z.re,
                                im: z.im,
                            })?;
                        }
                    }
                }
            }
        }
    }
    w.flush().map_err(|e| SimError::Csv(e.into()))?;
    Ok(())
}

/// Reads a dump written for `dims`; the entry count must match exactly.
pub fn read_channels<R: Read>(dims: Dims, input: R) -> Result<ChannelSet> {
    let mut chan = ChannelSet::zeros(dims);
    let d = dims;
    let total = d.n_tones
        * (d.n_bs * d.n_users * d.n_tx * d.n_rx
            + d.n_bs * d.n_irs * d.n_elems * d.n_tx
            + d.n_irs * d.n_users * d.n_elems * d.n_rx);
    let mut seen = 0usize;
    let bad = |msg: String| SimError::ChannelFile(msg);
    for rec in csv::Reader::from_reader(input).deserialize::<Entry>() {
        let e = rec?;
        if e.tone >= d.n_tones {
            return Err(bad(format!("tone {} out of range", e.tone)));
        }
        let (na, nb, idx, mat) = match e.link.as_str() {
            "direct" => (d.n_bs, d.n_users, chan.direct_index(e.node_a, e.node_b, e.tone), 0),
            "bs_irs" => (d.n_bs, d.n_irs, chan.bs_irs_index(e.node_a, e.node_b, e.tone), 1),
            "irs_user" => (d.n_irs, d.n_users, chan.irs_user_index(e.node_a, e.node_b, e.tone), 2),
            other => return Err(bad(format!("unknown link {other:?}"))),
        };
        if e.node_a >= na || e.node_b >= nb {
            return Err(bad(format!("{} node index out of range", e.link)));
        }
        let m = match mat {
            0 => &mut chan.direct[idx],
            1 => &mut chan.bs_irs[idx],
            _ => &mut chan.irs_user[idx],
        };
        if e.row >= m.nrows() || e.col >= m.ncols() {
            return Err(bad(format!("{} entry ({}, {}) out of range", e.link, e.row, e.col)));
        }
        m[(e.row, e.col)] = C64::new(e.re, e.im);
        seen += 1;
    }
    if seen != total {
        return Err(bad(format!("expected {total} entries, found {seen}")));
    }
    chan.validate()?;
    Ok(chan)
}
