//! `start:stop:third` range arguments.

use anyhow::{bail, Context, Result};
use mpsqvm::ThetaGrid;

fn fields(s: &str) -> Vec<&str> {
    s.split(':').map(str::trim).collect()
}

/// `start:stop:step` over integers, inclusive. A bare number is one value.
pub fn int_range(s: &str) -> Result<Vec<usize>> {
    let f = fields(s);
    let num = |x: &str| x.parse::<usize>().with_context(|| format!("`{x}` is not a non-negative integer"));
    let (start, stop, step) = match f.as_slice() {
        [one] => {
            let v = num(one)?;
            (v, v, 1)
        }
        [a, b] => (num(a)?, num(b)?, 1),
        [a, b, c] => (num(a)?, num(b)?, num(c)?),
        _ => bail!("expected start:stop:step, got `{s}`"),
    };
    if step == 0 {
        bail!("step must be positive in `{s}`");
    }
    if stop < start {
        bail!("empty range `{s}`");
    }
    Ok((start..=stop).step_by(step).collect())
}

/// `start:stop:count` over reals, inclusive.
pub fn theta_grid(s: &str) -> Result<ThetaGrid> {
    let f = fields(s);
    let [a, b, c] = f.as_slice() else {
        bail!("expected start:stop:count, got `{s}`");
    };
    let real = |x: &str| x.parse::<f64>().with_context(|| format!("`{x}` is not a number"));
    let count = c.parse::<usize>().with_context(|| format!("`{c}` is not a point count"))?;
    let (start, stop) = (real(a)?, real(b)?);
    if !start.is_finite() || !stop.is_finite() {
        bail!("grid ends must be finite");
    }
    Ok(ThetaGrid::new(start, stop, count)?)
}
