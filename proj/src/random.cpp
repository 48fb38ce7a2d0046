#include "rmsd/random.hpp"

#include <cmath>

#include "rmsd/error.hpp"

namespace rmsd {

CategoricalSampler::CategoricalSampler(std::span<const double> probs) {
  require(!probs.empty(), "CategoricalSampler: empty distribution");
  cumulative_.reserve(probs.size());
  double total = 0.0;
  bool any_positive = false;
  for (std::size_t k = 0; k < probs.size(); ++k) {
    require(probs[k] >= 0.0 && std::isfinite(probs[k]),
            "CategoricalSampler: probabilities must be finite and non-negative");
    total += probs[k];
    cumulative_.push_back(total);
    if (probs[k] > 0.0) {
      last_positive_ = k;
      any_positive = true;
    }
  }
  require(any_positive, "CategoricalSampler: all probabilities are zero");
  for (auto& c : cumulative_) c /= total;
}

std::size_t CategoricalSampler::operator()(Rng& rng) const {
  const double u = uniform01(rng);
  // First index whose cumulative mass strictly exceeds u; a zero-mass entry
  // never does because its cumulative value equals its predecessor's.
  double prev = 0.0;
  for (std::size_t k = 0; k < cumulative_.size(); ++k) {
    if (cumulative_[k] > prev && u < cumulative_[k]) return k;
    prev = cumulative_[k];
  }
  return last_positive_;
}

}  // namespace rmsd
