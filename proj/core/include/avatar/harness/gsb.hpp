#pragma once

#include <stdexcept>

namespace avatar::harness {

/// Pairwise preference tally from a Good/Same/Bad study.
struct GsbTally {
  long long wins = 0;
  long long loses = 0;
  long long ties = 0;
};

struct UndefinedScoreError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// (Wins - Loses) / (Wins + Loses + Ties), exact and antisymmetric under
/// swapping wins/loses. Throws UndefinedScoreError on an empty tally and
/// std::invalid_argument on negative counts.
double gsb(const GsbTally& tally);

}  // namespace avatar::harness
