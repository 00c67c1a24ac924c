//! PAM symbol generation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LinkError;

/// PAM-`m` levels `{−(m−1), …, −1, 1, …, m−1}` scaled to unit mean power,
/// in ascending order.
pub fn pam_levels(m: usize) -> Result<Vec<f64>, LinkError> {
    if ![2, 4, 8].contains(&m) {
        return Err(LinkError::Config(format!("constellation order {m} not in {{2, 4, 8}}")));
    }
    let mean_power = ((m * m - 1) as f64) / 3.0;
    let scale = mean_power.sqrt().recip();
    Ok((0..m).map(|i| (2.0 * i as f64 - (m as f64 - 1.0)) * scale).collect())
}

/// `n` i.i.d. uniform PAM-`m` symbols from a seeded ChaCha stream.
pub fn draw_pam_symbols(m: usize, n: usize, seed: u64) -> Result<Vec<f64>, LinkError> {
    draw_pam_symbols_from(m, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn draw_pam_symbols_from<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Result<Vec<f64>, LinkError> {
    if n == 0 {
        return Err(LinkError::Config("symbol count must be at least 1".into()));
    }
    let levels = pam_levels(m)?;
    Ok((0..n).map(|_| levels[rng.random_range(0..m)]).collect())
}
