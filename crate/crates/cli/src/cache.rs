//! Building Koopman models, with an on-disk cache keyed by everything that
//! determines the model.

use std::path::{Path, PathBuf};
use std::time::Instant;

use koopman_lambert::basis::{basis_size, DomainBox, DEFAULT_MAX_BASIS_SIZE};
use koopman_lambert::elements::{GravityModel, ELEMENT_COUNT};
use koopman_lambert::koopman::{KoopmanModel, MODEL_FORMAT_VERSION};
use koopman_lambert::lambert::{j2_domain_for, wide_element_domain, OrbitModel};
use nalgebra::Vector3;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{hex, Scenario};
use crate::error::{CliError, CliResult};

pub const CACHE_DIR_VAR: &str = "KOLAMBERT_CACHE_DIR";
/// Models with more basis functions than this need `--allow-large-model`.
pub const LARGE_MODEL: usize = 1000;
/// Models larger than this are not written to the cache: the JSON would run
/// to gigabytes.
pub const MAX_CACHED_MODEL: usize = 2000;

pub struct AcquiredModel {
    pub orbit: OrbitModel,
    /// Departure velocity of the unperturbed transfer, for J2 models.
    pub seed: Option<Vector3<f64>>,
    pub key: String,
    pub from_cache: bool,
    /// Assembly plus decomposition; zero on a cache hit.
    pub build_seconds: f64,
}

#[derive(Serialize)]
struct KeyFields<'a> {
    version: u32,
    gravity: &'a GravityModel,
    order: usize,
    domain: &'a DomainBox,
}

pub fn cache_dir(scenario: &Scenario) -> PathBuf {
    std::env::var_os(CACHE_DIR_VAR)
        .map(PathBuf::from)
        .unwrap_or_else(|| scenario.out.join("model-cache"))
}

pub fn model_key(gravity: &GravityModel, order: usize, domain: &DomainBox) -> String {
    let fields = KeyFields {
        version: MODEL_FORMAT_VERSION,
        gravity,
        order,
        domain,
    };
    let json = serde_json::to_string(&fields).expect("key fields serialize");
    hex(&Sha256::digest(json.as_bytes()))[..16].to_string()
}

/// Rough peak memory of a build, from dense `m × m` real and complex
/// matrices and the eigensolver workspace.
pub fn estimated_bytes(m: usize) -> f64 {
    12.0 * 8.0 * (m * m) as f64
}

fn check_size(order: usize, allow_large: bool) -> CliResult<usize> {
    let m = basis_size(ELEMENT_COUNT, order);
    let limit = if allow_large {
        DEFAULT_MAX_BASIS_SIZE
    } else {
        LARGE_MODEL
    };
    if m > limit as u128 {
        let m = usize::try_from(m).unwrap_or(usize::MAX);
        let hint = if allow_large {
            ""
        } else {
            "; pass --allow-large-model to build it anyway"
        };
        return Err(CliError::ResourceCap(format!(
            "order {order} needs {m} basis functions (limit {limit}), about {:.1} GB of dense matrices{hint}",
            estimated_bytes(m) / 1e9
        )));
    }
    Ok(m as usize)
}

/// Domain and seed for the scenario: the configured box if any, otherwise
/// the wide box for unperturbed models and the inflated unperturbed-transfer
/// envelope for J2 models.
fn domain_and_seed(scenario: &Scenario) -> CliResult<(DomainBox, Option<Vector3<f64>>)> {
    let p = &scenario.problem;
    if !p.gravity.j2_enabled {
        return Ok((scenario.domain.clone().unwrap_or_else(wide_element_domain), None));
    }
    let (auto, seed) = j2_domain_for(p, &scenario.solver)?;
    Ok((scenario.domain.clone().unwrap_or(auto), Some(seed)))
}

pub fn acquire(scenario: &Scenario, allow_large: bool) -> CliResult<AcquiredModel> {
    let m = check_size(scenario.order, allow_large)?;
    let (domain, seed) = domain_and_seed(scenario)?;
    let gravity = scenario.problem.gravity;
    let key = model_key(&gravity, scenario.order, &domain);
    let path = cache_dir(scenario).join(format!("model-{key}.json"));
    if path.exists() {
        match load_matching(&path, scenario.order, &domain) {
            Ok(model) => {
                return Ok(AcquiredModel {
                    orbit: OrbitModel { model, gravity },
                    seed,
                    key,
                    from_cache: true,
                    build_seconds: 0.0,
                })
            }
            Err(e) => eprintln!("warning: cached model {} is unusable ({e}); rebuilding", path.display()),
        }
    }
    let start = Instant::now();
    let orbit = OrbitModel::build_with_cap(gravity, scenario.order, domain, DEFAULT_MAX_BASIS_SIZE)?;
    let build_seconds = start.elapsed().as_secs_f64();
    if m <= MAX_CACHED_MODEL {
        if let Err(e) = store(&path, &orbit.model) {
            eprintln!("warning: could not write model cache {}: {e}", path.display());
        }
    }
    Ok(AcquiredModel {
        orbit,
        seed,
        key,
        from_cache: false,
        build_seconds,
    })
}

fn load_matching(path: &Path, order: usize, domain: &DomainBox) -> Result<KoopmanModel, String> {
    let model = KoopmanModel::load(path).map_err(|e| e.to_string())?;
    let basis = model.basis();
    if basis.dimension() != ELEMENT_COUNT || basis.max_order() != order || basis.domain() != domain {
        return Err("basis does not match the scenario".into());
    }
    Ok(model)
}

fn store(path: &Path, model: &KoopmanModel) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    // write-then-rename so a crash never leaves a truncated cache entry
    let tmp = path.with_extension("json.tmp");
    std::fs::write(&tmp, model.to_json().map_err(std::io::Error::other)?)?;
    std::fs::rename(tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_models_need_the_flag() {
        assert_eq!(check_size(3, false).unwrap(), 165);
        let err = check_size(5, false).unwrap_err();
        assert!(matches!(&err, CliError::ResourceCap(m) if m.contains("1287") && m.contains("--allow-large-model")));
        assert_eq!(check_size(7, true).unwrap(), 6435);
        assert!(matches!(check_size(9, true), Err(CliError::ResourceCap(_))));
    }

    #[test]
    fn key_depends_on_model_inputs() {
        let d = wide_element_domain();
        let g = GravityModel::earth(false);
        let k = model_key(&g, 1, &d);
        assert_eq!(k, model_key(&g, 1, &d));
        assert_ne!(k, model_key(&g, 2, &d));
        assert_ne!(k, model_key(&GravityModel::earth(true), 1, &d));
        assert_eq!(k.len(), 16);
    }
}
