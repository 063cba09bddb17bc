//! Greedy collapse decoding: per-frame argmax, then duplicate/blank
//! collapse. No search, no score — the fastest sanity-check decoder.

use alloc::format;
use alloc::vec::Vec;

use crate::backend::ctc::ctc_collapse;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Argmax each frame (ties broken toward the lowest class id), then
/// collapse repeats and remove blanks.
pub fn greedy_ctc(logp: &Tensor, blank: usize) -> Result<Vec<u16>> {
    if logp.rank() != 2 {
        return Err(Error::shape(format!(
            "greedy decode expects T×C log-probs, got {:?}",
            logp.shape()
        )));
    }
    if blank >= logp.cols() {
        return Err(Error::config(format!(
            "blank id {blank} outside {} classes",
            logp.cols()
        )));
    }
    let mut path = Vec::with_capacity(logp.rows());
    for t in 0..logp.rows() {
        let row = logp.row(t);
        let mut best = 0usize;
        for (k, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = k;
            }
        }
        path.push(best as u16);
    }
    Ok(ctc_collapse(&path, blank))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// 3-class frames (ids 0=a, 1=b, 2=blank) with the argmax forced by a
    /// single large entry.
    fn frames(argmaxes: &[usize]) -> Tensor {
        let mut t = Tensor::full([argmaxes.len(), 3], -5.0);
        for (i, &k) in argmaxes.iter().enumerate() {
            t.row_mut(i)[k] = -0.1;
        }
        t
    }

    #[test]
    fn repeats_collapse_and_blanks_vanish() {
        let logp = frames(&[0, 0, 2, 1]);
        assert_eq!(greedy_ctc(&logp, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn all_blank_frames_decode_to_empty() {
        let logp = frames(&[2, 2, 2]);
        assert_eq!(greedy_ctc(&logp, 2).unwrap(), Vec::<u16>::new());
    }

    #[test]
    fn single_frame_decodes_to_its_argmax() {
        let logp = frames(&[0]);
        assert_eq!(greedy_ctc(&logp, 2).unwrap(), vec![0]);
    }

    #[test]
    fn argmax_ties_prefer_the_lowest_id() {
        // Every class equally likely: frame argmax is id 0 on all frames,
        // which then collapses to a single token.
        let logp = Tensor::full([3, 3], -1.0986);
        assert_eq!(greedy_ctc(&logp, 2).unwrap(), vec![0]);
    }

    #[test]
    fn bad_inputs_are_rejected() {
        assert!(greedy_ctc(&Tensor::zeros([4]), 0).is_err());
        assert!(greedy_ctc(&Tensor::zeros([2, 3]), 3).is_err());
    }
}
