use super::IndexError;

pub const MIN_POOL: usize = 200;
pub const MAX_POOL: usize = 800;
pub const POOL_PER_RESULT: usize = 12;
/// Candidates rescored by a cross-encoder.
pub const RERANK_DEPTH: usize = 100;

/// `clamp(max(200, 12k), 200, 800)`
pub fn candidate_pool_size(k: usize) -> Result<usize, IndexError> {
    if k == 0 {
        return Err(IndexError::InvalidK(k));
    }
    Ok(MIN_POOL
        .max(POOL_PER_RESULT.saturating_mul(k))
        .clamp(MIN_POOL, MAX_POOL))
}

/// `cosine + lambda * ln(max(citations, 1))`
pub fn composite_score(cosine: f64, citations: u64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return cosine;
    }
    cosine + lambda * (citations.max(1) as f64).ln()
}

pub(crate) fn norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| x as f64 * x as f64).sum::<f64>().sqrt()
}

pub(crate) fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum()
}

/// Cosine similarity accumulated in f64.
pub fn cosine(u: &[f32], v: &[f32]) -> Result<f64, IndexError> {
    if u.len() != v.len() {
        return Err(IndexError::DimensionMismatch {
            expected: u.len(),
            got: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(IndexError::ZeroVector);
    }
    Ok(dot(u, v) / (nu * nv))
}
