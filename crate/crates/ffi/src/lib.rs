//! C ABI over `matrix_bayes`.
//!
//! Every function returns an [`MbStatus`]; results come back through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`mb_last_error_message`]. Strings returned by the library must be
//! released with [`mb_string_free`]; handles with their matching `_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use matrix_bayes::compositions;
use matrix_bayes::conjugate::{
    adaptation_ratio, dirichlet_posterior, dirichlet_predictive, posterior_mean, BetaParams,
    CountVector, DirichletParams,
};
use matrix_bayes::density::BuiltinDensity;
use matrix_bayes::embedding::EmbeddingMap;
use matrix_bayes::entropy::{cross_entropy, entropy, ProbVector};
use matrix_bayes::icl::{run_icl, IclOptions, Scorer, TokenCorpus, TokenPrior};
use matrix_bayes::mixture::{approximate_prior, monte_carlo_approximate, DirichletMixture};
use matrix_bayes::sequence::{ln_generative_probability, AlphaTotal, TokenSet};
use matrix_bayes::trace::{parse_trace, render_html, Palette};
use matrix_bayes::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Capacity = 3,
    Parse = 4,
    InvalidUtf8 = 5,
    Panic = 6,
}

/// Opaque finite Dirichlet mixture.
pub struct MbMixture(DirichletMixture);

/// Opaque embedding map.
pub struct MbEmbeddingMap(EmbeddingMap);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> MbStatus {
    match e {
        Error::Capacity { .. } => MbStatus::Capacity,
        Error::Parse { .. } | Error::Document(_) | Error::InvalidCorpus(_) => MbStatus::Parse,
        _ => MbStatus::InvalidArgument,
    }
}

struct Fail(MbStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> Fail {
    Fail(MbStatus::NullPointer, format!("{name} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MbStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside matrix-bayes".into());
            MbStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn string<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(MbStatus::InvalidUtf8, format!("{name}: {e}")))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .expect("no interior nul")
        .into_raw()
}

/// Message for the last failure on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn mb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Posterior mean `(alpha + x) / (alpha + beta + n)`.
///
/// # Safety
/// `out_mean` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mb_beta_posterior_mean(
    alpha: f64,
    beta: f64,
    x: u64,
    n: u64,
    out_mean: *mut f64,
) -> MbStatus {
    guard(|| {
        let o = out(out_mean, "out_mean")?;
        *o = posterior_mean(BetaParams::new(alpha, beta)?, x, n)?;
        Ok(())
    })
}

/// `1 / (1 + n / (alpha + beta))`.
///
/// # Safety
/// `out_ratio` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mb_adaptation_ratio(
    alpha: f64,
    beta: f64,
    n: u64,
    out_ratio: *mut f64,
) -> MbStatus {
    guard(|| {
        let o = out(out_ratio, "out_ratio")?;
        *o = adaptation_ratio(BetaParams::new(alpha, beta)?, n);
        Ok(())
    })
}

/// Posterior predictive after adding `counts` to `alphas`; writes `m` values.
///
/// # Safety
/// `alphas`, `counts` and `out_probs` must each point to `m` elements.
#[no_mangle]
pub unsafe extern "C" fn mb_dirichlet_predictive(
    alphas: *const f64,
    counts: *const u64,
    m: usize,
    out_probs: *mut f64,
) -> MbStatus {
    guard(|| {
        let prior = DirichletParams::new(slice(alphas, m, "alphas")?.to_vec())?;
        let obs = CountVector::new(slice(counts, m, "counts")?.to_vec());
        let pred = dirichlet_predictive(&dirichlet_posterior(&prior, &obs)?);
        slice_mut(out_probs, m, "out_probs")?.copy_from_slice(&pred);
        Ok(())
    })
}

/// `ln P(T* | T)` for distinct token indices under `Dir(alphas)`.
///
/// # Safety
/// Array arguments must point to the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn mb_ln_generative_probability(
    alphas: *const f64,
    m: usize,
    tstar: *const usize,
    tstar_len: usize,
    t: *const usize,
    t_len: usize,
    out_ln_p: *mut f64,
) -> MbStatus {
    guard(|| {
        let prior = DirichletParams::new(slice(alphas, m, "alphas")?.to_vec())?;
        let ts = TokenSet::new(slice(tstar, tstar_len, "tstar")?.iter().copied())?;
        let tt = TokenSet::new(slice(t, t_len, "t")?.iter().copied())?;
        *out(out_ln_p, "out_ln_p")? =
            ln_generative_probability(&prior, &ts, &tt, AlphaTotal::FullVocabulary)?;
        Ok(())
    })
}

/// Shannon entropy in nats.
///
/// # Safety
/// `p` must point to `len` elements.
#[no_mangle]
pub unsafe extern "C" fn mb_entropy(p: *const f64, len: usize, out_h: *mut f64) -> MbStatus {
    guard(|| {
        let pv = ProbVector::new(slice(p, len, "p")?.to_vec())?;
        *out(out_h, "out_h")? = entropy(&pv);
        Ok(())
    })
}

/// `-sum p_i ln q_i`; fails when `q` is zero where `p` is not.
///
/// # Safety
/// `p` and `q` must point to `len` elements.
#[no_mangle]
pub unsafe extern "C" fn mb_cross_entropy(
    p: *const f64,
    q: *const f64,
    len: usize,
    out_ce: *mut f64,
) -> MbStatus {
    guard(|| {
        let pv = ProbVector::new(slice(p, len, "p")?.to_vec())?;
        let qv = ProbVector::new(slice(q, len, "q")?.to_vec())?;
        *out(out_ce, "out_ce")? = cross_entropy(&pv, &qv)?;
        Ok(())
    })
}

fn boxed<T>(v: T, dst: *mut *mut T) -> Result<(), Fail> {
    if dst.is_null() {
        return Err(null("out handle"));
    }
    unsafe { *dst = Box::into_raw(Box::new(v)) };
    Ok(())
}

/// Loads a mixture from its JSON document.
///
/// # Safety
/// `json` must be a nul-terminated string; `out_mix` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mb_mixture_from_json(
    json: *const c_char,
    out_mix: *mut *mut MbMixture,
) -> MbStatus {
    guard(|| {
        let mix = DirichletMixture::from_json(string(json, "json")?)?;
        boxed(MbMixture(mix), out_mix)
    })
}

/// Grid (`samples == 0`) or Monte Carlo approximation of a built-in density
/// such as `"beta-product(2,1)"`. The grid respects `MATRIX_BAYES_CAP`.
///
/// # Safety
/// `density` must be a nul-terminated string; `out_mix` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mb_mixture_approximate(
    density: *const c_char,
    n: u32,
    m: usize,
    samples: usize,
    seed: u64,
    out_mix: *mut *mut MbMixture,
) -> MbStatus {
    guard(|| {
        let u = BuiltinDensity::parse(string(density, "density")?, &[])?.on_simplex(m)?;
        let mix = if samples == 0 {
            approximate_prior(&u, n, m, compositions::cap_from_env()?)?
        } else {
            monte_carlo_approximate(&u, n, m, samples, seed)?
        };
        boxed(MbMixture(mix), out_mix)
    })
}

/// Number of components.
///
/// # Safety
/// `mix` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mb_mixture_len(mix: *const MbMixture, out_len: *mut usize) -> MbStatus {
    guard(|| {
        let m = mix.as_ref().ok_or_else(|| null("mix"))?;
        *out(out_len, "out_len")? = m.0.len();
        Ok(())
    })
}

/// Vocabulary size `m`.
///
/// # Safety
/// `mix` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn mb_mixture_dim(mix: *const MbMixture, out_dim: *mut usize) -> MbStatus {
    guard(|| {
        let m = mix.as_ref().ok_or_else(|| null("mix"))?;
        *out(out_dim, "out_dim")? = m.0.dim();
        Ok(())
    })
}

/// Updates the mixture in place on token `j`; writes the marginal
/// probability of `j` before the update.
///
/// # Safety
/// `mix` must be a live handle; `out_marginal` may be null.
#[no_mangle]
pub unsafe extern "C" fn mb_mixture_observe(
    mix: *mut MbMixture,
    j: usize,
    out_marginal: *mut f64,
) -> MbStatus {
    guard(|| {
        let m = mix.as_mut().ok_or_else(|| null("mix"))?;
        let (next, marginal) = m.0.observe(j)?;
        m.0 = next;
        if let Some(o) = out_marginal.as_mut() {
            *o = marginal;
        }
        Ok(())
    })
}

/// Predictive next-token distribution; writes `m` values.
///
/// # Safety
/// `out_probs` must point to `m` elements.
#[no_mangle]
pub unsafe extern "C" fn mb_mixture_predictive(
    mix: *const MbMixture,
    out_probs: *mut f64,
    m: usize,
) -> MbStatus {
    guard(|| {
        let mx = mix.as_ref().ok_or_else(|| null("mix"))?;
        let pred = mx.0.predictive();
        if pred.len() != m {
            return Err(Error::LengthMismatch {
                expected: pred.len(),
                got: m,
            }
            .into());
        }
        slice_mut(out_probs, m, "out_probs")?.copy_from_slice(&pred);
        Ok(())
    })
}

/// Mixture density at a simplex point.
///
/// # Safety
/// `p` must point to `m` elements.
#[no_mangle]
pub unsafe extern "C" fn mb_mixture_density(
    mix: *const MbMixture,
    p: *const f64,
    m: usize,
    out_density: *mut f64,
) -> MbStatus {
    guard(|| {
        let mx = mix.as_ref().ok_or_else(|| null("mix"))?;
        *out(out_density, "out_density")? = mx.0.density(slice(p, m, "p")?)?;
        Ok(())
    })
}

/// Serializes the mixture; free the result with [`mb_string_free`].
///
/// # Safety
/// `out_json` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mb_mixture_to_json(
    mix: *const MbMixture,
    out_json: *mut *mut c_char,
) -> MbStatus {
    guard(|| {
        let mx = mix.as_ref().ok_or_else(|| null("mix"))?;
        *out(out_json, "out_json")? = into_c_string(mx.0.to_json());
        Ok(())
    })
}

/// # Safety
/// `mix` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mb_mixture_free(mix: *mut MbMixture) {
    if !mix.is_null() {
        drop(Box::from_raw(mix));
    }
}

/// Loads an embedding map from JSON.
///
/// # Safety
/// `json` must be a nul-terminated string; `out_map` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mb_embedding_map_from_json(
    json: *const c_char,
    out_map: *mut *mut MbEmbeddingMap,
) -> MbStatus {
    guard(|| {
        let map = EmbeddingMap::from_json(string(json, "json")?)?;
        boxed(MbEmbeddingMap(map), out_map)
    })
}

/// Embedding dimension `r` and vocabulary size `m`.
///
/// # Safety
/// Out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mb_embedding_map_dims(
    map: *const MbEmbeddingMap,
    out_r: *mut usize,
    out_m: *mut usize,
) -> MbStatus {
    guard(|| {
        let mp = map.as_ref().ok_or_else(|| null("map"))?;
        *out(out_r, "out_r")? = mp.0.embedding_dim();
        *out(out_m, "out_m")? = mp.0.vocab_size();
        Ok(())
    })
}

/// Inverse-distance interpolation from the `k` nearest anchors.
///
/// # Safety
/// `query` must point to `r` elements and `out_probs` to `m`.
#[no_mangle]
pub unsafe extern "C" fn mb_embedding_map_interpolate(
    map: *const MbEmbeddingMap,
    query: *const f64,
    r: usize,
    k: usize,
    out_probs: *mut f64,
    m: usize,
) -> MbStatus {
    guard(|| {
        let mp = map.as_ref().ok_or_else(|| null("map"))?;
        let d = mp.0.interpolate(slice(query, r, "query")?, k)?;
        if d.len() != m {
            return Err(Error::LengthMismatch {
                expected: d.len(),
                got: m,
            }
            .into());
        }
        slice_mut(out_probs, m, "out_probs")?.copy_from_slice(&d);
        Ok(())
    })
}

/// # Safety
/// `map` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn mb_embedding_map_free(map: *mut MbEmbeddingMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Renders a JSON-lines trace as a standalone HTML page.
///
/// # Safety
/// `jsonl` must be a nul-terminated string; `out_html` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mb_trace_render_html(
    jsonl: *const c_char,
    out_html: *mut *mut c_char,
) -> MbStatus {
    guard(|| {
        let trace = parse_trace(string(jsonl, "jsonl")?)?;
        *out(out_html, "out_html")? = into_c_string(render_html(&trace, &Palette::default()));
        Ok(())
    })
}

/// Runs the in-context decomposition and returns the full report as JSON.
/// `query` may be null to use the corpus' own query. `scorer` is 0 for the
/// generative score and 1 for the embedding score.
///
/// # Safety
/// String arguments must be nul-terminated; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn mb_icl_run(
    corpus_json: *const c_char,
    query: *const c_char,
    alpha: f64,
    scorer: u32,
    out_json: *mut *mut c_char,
) -> MbStatus {
    guard(|| {
        let corpus = TokenCorpus::from_json(string(corpus_json, "corpus_json")?)?;
        let q = if query.is_null() {
            corpus
                .default_query()
                .ok_or_else(|| {
                    Fail(
                        MbStatus::InvalidArgument,
                        "corpus has no default query".into(),
                    )
                })?
                .to_string()
        } else {
            string(query, "query")?.to_string()
        };
        let scorer = match scorer {
            0 => Scorer::Generative,
            1 => Scorer::Embedding,
            other => {
                return Err(Fail(
                    MbStatus::InvalidArgument,
                    format!("unknown scorer {other}"),
                ))
            }
        };
        let opts = IclOptions {
            prior: TokenPrior::symmetric(alpha),
            scorer,
            ..Default::default()
        };
        let report = run_icl(&q, &corpus, &opts)?;
        let json = serde_json::to_string(&report).expect("report serializes");
        *out(out_json, "out_json")? = into_c_string(json);
        Ok(())
    })
}
