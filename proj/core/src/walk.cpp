#include "lerw/walk.hpp"

namespace lerw {

WalkResult sample_srw(Vec3i start, const StopRule& rule, RngStream& rng,
                      int mesh) {
  require(rule.exit_domain || rule.hit_set || rule.max_steps.has_value(),
          Err::InvalidParams, "stop rule has no stopping component");
  if (rule.exit_domain) {
    require(rule.exit_domain->contains(start), Err::NotInDomain,
            "walk start lies outside the exit domain");
  }

  WalkResult res;
  res.path.mesh = mesh;
  auto& pts = res.path.pts;
  pts.push_back(start);

  // budget semantics: a bare MaxSteps(k) walk ends normally after k steps;
  // a budget guarding another rule raises if that rule never fired
  bool budget_is_guard = (rule.exit_domain || rule.hit_set);
  std::uint64_t budget =
      rule.max_steps.value_or(budget_is_guard ? std::uint64_t(1) << 40 : 0);

  if (rule.hit_set && rule.hit_set->contains(start)) {
    res.cause = StopCause::HitSet;
    return res;
  }

  Vec3i cur = start;
  for (std::uint64_t step = 0; step < budget; ++step) {
    cur = cur + kSteps[rng.step_direction()];
    pts.push_back(cur);
    if (rule.hit_set && rule.hit_set->contains(cur)) {
      res.cause = StopCause::HitSet;
      if (path_validation_enabled()) res.path.validate();
      return res;
    }
    if (rule.exit_domain && !rule.exit_domain->contains(cur)) {
      res.cause = StopCause::ExitedDomain;
      if (path_validation_enabled()) res.path.validate();
      return res;
    }
  }

  if (budget_is_guard) throw StoppingBudgetError(std::move(res.path), budget);
  res.cause = StopCause::BudgetSpent;
  if (path_validation_enabled()) res.path.validate();
  return res;
}

std::size_t first_exit_index(const LatticePath& path, const Domain& domain) {
  require(!path.pts.empty(), Err::EmptyPath, "first_exit_index on empty path");
  for (std::size_t k = 0; k < path.pts.size(); ++k) {
    if (!domain.contains(path.pts[k])) return k;
  }
  raise(Err::NeverExits, "path never leaves the domain");
}

std::size_t last_hit_index(const LatticePath& path, const PointSet& set) {
  require(!path.pts.empty(), Err::EmptyPath, "last_hit_index on empty path");
  for (std::size_t k = path.pts.size(); k-- > 0;) {
    if (set.contains(path.pts[k])) return k;
  }
  raise(Err::NeverHits, "path never meets the set");
}

}  // namespace lerw
