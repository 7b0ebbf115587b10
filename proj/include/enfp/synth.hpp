#pragma once

// Synthetic single-endpoint trial corpus for exercising the fitting
// pipeline: exact results reported as two-sided p-values with a direction,
// plus a block of negative trials known only to have p >= p0.

#include "enfp/trial.hpp"

#include <cstdint>
#include <vector>

namespace enfp {

struct SynthConfig
{
  std::size_t exact = 1221;
  std::size_t censored = 172;
  // Null mass, spread over theta = 0, -0.5, -1 with weights 0.4, 0.3, 0.3.
  double rho = 0.09;
  // Alternative component: N(mean, sd) restricted to theta > 0.
  double alt_mean = 2.5;
  double alt_sd = 1.2;
  double p0 = 0.05;
  double alpha = 0.025;
  std::uint64_t seed = 1;
};

struct SynthCorpus
{
  std::vector<TrialRecord> records;
  std::vector<double> theta;
};

// Draws exact + censored trials; the censored ones are chosen at random
// among the draws with p >= p0. Throws if too few such draws exist.
SynthCorpus make_synthetic_corpus(const SynthConfig& cfg);

} // namespace enfp
