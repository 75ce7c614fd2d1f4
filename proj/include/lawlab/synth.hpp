#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "lawlab/flops.hpp"
#include "lawlab/law_forms.hpp"
#include "lawlab/objectives.hpp"
#include "lawlab/run_ledger.hpp"

namespace lawlab {

/// Standard normal draws by Box-Muller over a 64-bit Mersenne twister, so a
/// seed gives the same stream on every standard library.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : engine_(seed) {}
  double uniform();  ///< in (0, 1)
  double normal();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Observations on the Cartesian product of `ns` and `ds`, with loss
/// multiplied by exp(sigma * z).
std::vector<Observation> synthetic_observations(LawForm form, const Vector& theta, const std::vector<double>& ns,
                                                const std::vector<double>& ds, double sigma, std::uint64_t seed);

/// `count` log-spaced values from lo to hi inclusive.
std::vector<double> logspace(double lo, double hi, std::size_t count);

/// A lab-style dataset: every architecture of `arch` trained at several
/// tokens-per-parameter ratios and three peak learning rates, ten
/// checkpoints per run. Loss follows a chinchilla law in non-embedding
/// parameters, inflated before the end of the schedule and away from the
/// best learning rate.
Dataset synthetic_lab_dataset(const ArchTable& arch, std::uint64_t seed);

/// Final-checkpoint runs over a grid of sizes and D/N ratios whose
/// compute-optimal D/N is 20 at every budget, from a law whose curvature in
/// ln(D/N) is asymmetric around the optimum. Noiseless.
Dataset synthetic_ratio_dataset();

/// One run per size in `ns`, each with `checkpoints` log-spaced token counts
/// from min_ratio*n to max_ratio*n and loss read off the law at every
/// checkpoint. Noiseless; n_total = n and no arch ids.
Dataset synthetic_learning_curves(LawForm form, const Vector& theta, const std::vector<double>& ns, double min_ratio,
                                  double max_ratio, std::size_t checkpoints);

/// Chinchilla parameters of the lab dataset's loss.
ChinchillaParams synthetic_lab_truth();

}  // namespace lawlab
