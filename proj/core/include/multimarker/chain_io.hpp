#pragma once

#include <string>

#include "multimarker/state.hpp"

namespace multimarker {

/// Chain persistence, format "mmchain v1": a single JSON manifest line
/// (seed, sampler config, dataset fingerprint, dimensions, food-quantity
/// levels, scaling transform, hyperparameters, draw count) followed by raw
/// little-endian doubles, one record per retained draw with layout
///   alpha[P] beta[P] sigma2[P] mu_alpha mu_beta sigma_beta2
///   theta2[D] gamma[D-1] eta[P] z[n] c[n]
/// Weight rows are not persisted (they are recomputable from gamma/eta and
/// the biomarkers); reloaded states carry uniform placeholder rows.
void save_chain(const std::string& path, const PosteriorChain& chain);

PosteriorChain load_chain(const std::string& path);

}  // namespace multimarker
