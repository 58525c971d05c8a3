use crate::error::{Error, Result};
use crate::imgcore::BinaryMask;

/// Dice coefficient of two masks, `None` when both masks are empty.
///
/// A pair where only one side is empty is well defined and scores 0.
pub fn dsc(x: &BinaryMask, y: &BinaryMask) -> Result<Option<f64>> {
    x.ensure_same_dims(y)?;
    let (mut both, mut total) = (0usize, 0usize);
    for (&a, &b) in x.data().iter().zip(y.data()) {
        both += usize::from(a && b);
        total += usize::from(a) + usize::from(b);
    }
    if total == 0 {
        return Ok(None);
    }
    Ok(Some(2.0 * both as f64 / total as f64))
}

/// Summary of an averaged Dice computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiceSummary {
    pub mean: f64,
    /// Pairs contributing to the mean.
    pub defined: usize,
    /// Pairs skipped because neither mask marks any pixel.
    pub excluded: usize,
}

/// Mean Dice over pairs, skipping pairs where neither mask has a positive pixel.
pub fn average_dsc<'a, I>(pairs: I) -> Result<DiceSummary>
where
    I: IntoIterator<Item = (&'a BinaryMask, &'a BinaryMask)>,
{
    let mut sum = 0.0;
    let (mut defined, mut excluded) = (0usize, 0usize);
    for (x, y) in pairs {
        match dsc(x, y)? {
            Some(v) => {
                sum += v;
                defined += 1;
            }
            None => excluded += 1,
        }
    }
    if defined == 0 {
        return Err(Error::EmptySample);
    }
    Ok(DiceSummary {
        mean: sum / defined as f64,
        defined,
        excluded,
    })
}

/// Mean of already computed per-pair scores with the same exclusion rule.
pub fn mean_defined(scores: &[Option<f64>]) -> Result<f64> {
    let defined: Vec<f64> = scores.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}
