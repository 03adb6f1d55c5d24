#pragma once

#include <cstdint>
#include <optional>

#include "lerw/geometry.hpp"
#include "lerw/rng.hpp"

namespace lerw {

// Composable stopping rule for simple random walk. Components combine as
// "whichever fires first":
//   exit_domain  - stop at the first point outside the domain (kept as the
//                  final path point)
//   hit_set      - stop at the first point in the set (index 0 counts)
//   max_steps    - alone: a plain step budget, the walk just ends there;
//                  combined with either rule above: a safety budget, and
//                  exhausting it raises StoppingBudgetExceeded carrying the
//                  partial path
struct StopRule {
  const Domain* exit_domain = nullptr;
  const PointSet* hit_set = nullptr;
  std::optional<std::uint64_t> max_steps;
};

enum class StopCause { ExitedDomain, HitSet, BudgetSpent };

struct WalkResult {
  LatticePath path;
  StopCause cause = StopCause::BudgetSpent;
};

class StoppingBudgetError : public Error {
 public:
  StoppingBudgetError(LatticePath partial, std::uint64_t budget)
      : Error(Err::StoppingBudgetExceeded,
              "walk spent " + std::to_string(budget) +
                  " steps without meeting its stop rule"),
        partial_path(std::move(partial)) {}
  LatticePath partial_path;
};

// Nearest-neighbor SRW from start under the given rule. With exit_domain set,
// start must lie inside the domain (NotInDomain otherwise). A rule with no
// component at all is rejected (InvalidParams): the walk would never stop.
WalkResult sample_srw(Vec3i start, const StopRule& rule, RngStream& rng,
                      int mesh = 0);

// First index k with path[k] outside the domain; NeverExits if none.
std::size_t first_exit_index(const LatticePath& path, const Domain& domain);

// Last index k with path[k] in the set; NeverHits if none.
std::size_t last_hit_index(const LatticePath& path, const PointSet& set);

}  // namespace lerw
