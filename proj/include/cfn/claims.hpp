#pragma once

// Randomized property checks for the algebra of q(x, y) = (x + y) / (1 + x y)
// and of the two- and four-term products that bound off-diagonal Hessian
// entries. Each check draws its inputs from a counter RNG, mixing interior
// points with interval endpoints, and records the smallest margin
// (bound side minus value side; negative means the inequality failed).

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cfn/blocks.hpp"

namespace cfn {

struct ClaimCheck {
  std::string name;
  std::size_t trials = 0;
  std::size_t failures = 0;
  double worst_margin = 0.0;
  // Whether the check gates a pass/fail decision. Informational checks record
  // statements that do not hold as written.
  bool asserted = true;

  bool passed() const { return failures == 0; }
};

// Roundoff allowance for inequalities that are tight at interval endpoints.
inline constexpr double kClaimSlack = 1e-14;

// 1 - eps <= s, t <= 1 with eps in [0, 1/2):
// q(s, t) >= 1 - (4/5) eps^2 and q(-s, -t) <= -1 + (4/5) eps^2.
ClaimCheck check_two_strong_signals(std::size_t trials, std::uint64_t seed);

// s1 in [-1 + a d, 1], s2, s3 in [1 - A d, 1], t1, t2 in [1 - B d, 1] under
// a < A/2, d < a/2, K d < 1/2 with K = 2 A^2 / a + B:
// t2 q(t1 q(s1, s2), s3) >= 1 - K d.
ClaimCheck check_corruption_distance3(std::size_t trials, std::uint64_t seed);
// Follow-on step with s4 in [1 - A d, 1]: q(t2 q(t1 q(s1, s2), s3), s4) >= 1 - (4/5) K^2 d^2,
// which is the two-strong-signals bound applied with eps = K d.
ClaimCheck check_corruption_distance3_squared(std::size_t trials, std::uint64_t seed);
// The same step against 1 - (4/5) K d^2. Not asserted: it fails for K > 1.
ClaimCheck check_corruption_distance3_unsquared(std::size_t trials, std::uint64_t seed);

// s, t in [1 - A d, 1 - a d]: |q(s, -t)| <= 1 - a / A; and for t in that range
// and |s| <= 1 - a d: q(t, s) >= -1 + a / A.
ClaimCheck check_opposite_signs(std::size_t trials, std::uint64_t seed);

// With xi2 = th q(eta1, xi1), eta~2 = eta2 and eta~1 = q(th eta~2, eta1):
// (1 + xi2 eta2)(1 + xi1 eta1) = (1 + th eta1 eta~2)(1 + xi1 eta~1) and
// (1 + th eta1 eta~2)^2 (1 - eta~1^2) = (1 - eta1^2)(1 - (th eta~2)^2), to 1e-12.
ClaimCheck check_swap_identities(std::size_t trials, std::uint64_t seed);

// th in [1 - A d, 1 - a d], |eta_j| <= 1 - a d:
// sup_{|xi1| <= 1 - a d} F <= (16 v 8/a) / d.
ClaimCheck check_pair_generic(std::size_t trials, std::uint64_t seed, const SupSearch& search);
// As above with |eta_j| in [1 - B d, 1 - a d], B > a: sup F <= 4 B^4 / (a^2 (B - a)^2).
ClaimCheck check_pair_strong(std::size_t trials, std::uint64_t seed, const SupSearch& search);

// Four-term block with |eta_j| <= 1 - 2 c d and th_j in [1 - 2 C d, 1 - 2 c d]:
// W_4 <= (2 c d)^-2 prod (1 - eta_j^2) / prod_{j=1..3} (1 + th_j eta_j eta~_{j+1})^2.
ClaimCheck check_four_term(std::size_t trials, std::uint64_t seed, const SupSearch& search);

// Everything above with the grid sup search.
std::vector<ClaimCheck> run_claim_suite(std::size_t trials, std::uint64_t seed);

}  // namespace cfn
