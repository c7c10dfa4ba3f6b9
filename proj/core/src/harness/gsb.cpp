#include "avatar/harness/gsb.hpp"

namespace avatar::harness {

double gsb(const GsbTally& tally) {
  if (tally.wins < 0 || tally.loses < 0 || tally.ties < 0)
    throw std::invalid_argument("gsb: negative tally count");
  const long long total = tally.wins + tally.loses + tally.ties;
  if (total == 0) throw UndefinedScoreError("gsb: empty tally");
  return static_cast<double>(tally.wins - tally.loses) / static_cast<double>(total);
}

}  // namespace avatar::harness
