#pragma once

// Experiments on the shape of the likelihood landscape in the short-branch
// regime: reconstruction tiers at a node, the four-term block bound on
// off-diagonal Hessian entries and its W tiers, expected Hessian scaling and
// concavity, and Steel's two-maximum quartet.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfn/blocks.hpp"
#include "cfn/likelihood.hpp"
#include "cfn/linalg.hpp"
#include "cfn/model.hpp"
#include "cfn/tree.hpp"

namespace cfn {

// ---- shared knobs ----------------------------------------------------------

enum class EvalMode { kExact, kMc };
EvalMode parse_eval_mode(const std::string& name);
const char* eval_mode_name(EvalMode m);

// theta-hat is either theta* itself or an independent draw from the estimate box.
enum class ThetaHatMode { kTruth, kBox };
ThetaHatMode parse_theta_hat_mode(const std::string& name);
const char* theta_hat_mode_name(ThetaHatMode m);

struct ParamDraw {
  EdgeParams truth;
  EdgeParams estimate;
};
// Uses one seed for every delta, so draws at different deltas share their
// uniforms and differ only by the box scale.
ParamDraw draw_params(const Tree& tree, const RegimeBox& box, ThetaHatMode mode,
                      std::uint64_t seed);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  bool valid = false;  // false when fewer than two positive points
};
// Least squares of log y on log x over points with x, y > 0.
SlopeFit loglog_slope(std::span<const double> x, std::span<const double> y);
// Least squares of log y on x over points with y > 0.
SlopeFit semilog_slope(std::span<const double> x, std::span<const double> y);

// ---- reconstruction tiers --------------------------------------------------

enum class Tier { kGood, kModerate, kSevere };
const char* tier_name(Tier t);

struct TierThresholds {
  double k_good = 10.0;
  double c_severe = 0.5;
  // Good iff signed magnetization >= 1 - good_multiplier * k_good * delta^2.
  double good_multiplier = 1.0;
};

Tier classify_tier(double signed_mag, double delta, const TierThresholds& t = {});

struct TierReport {
  double delta = 0.0;
  TierThresholds thresholds;
  std::size_t m = 0;
  VertexId node = -1;
  std::array<std::size_t, 3> counts{};     // good, moderate, severe
  std::array<double, 3> frequency{};
  std::array<double, 2> child_negative{};  // P(sigma_u Z_x < 0), P(sigma_u Z_y < 0)
  double joint_negative = 0.0;             // P(both)
};

struct ReconstructionConfig {
  RegimeBox box;                     // delta is overridden per sweep entry
  std::vector<double> deltas{0.04, 0.02, 0.01};
  std::size_t m = 100000;
  std::uint64_t seed = 1;
  TierThresholds thresholds;
  ThetaHatMode theta_hat = ThetaHatMode::kTruth;
};

// node must be internal; parent is its neighbor on the non-descendant side.
// Z_u is the magnetization of the subtree below node, and the two children are
// node's other neighbors.
std::vector<TierReport> reconstruction_experiment(const Tree& tree, VertexId node,
                                                  VertexId parent,
                                                  const ReconstructionConfig& cfg);

// ---- block bound -----------------------------------------------------------

BlockTerms block_decomposition(const Tree& tree, std::span<const double> theta_hat,
                               const LeafConfig& cfg, EdgeId e, EdgeId f, const RegimeBox& box,
                               const SupSearch& search = {});

struct DominanceReport {
  std::size_t samples = 0;
  std::size_t pairs = 0;        // pairs with distance >= min_distance
  std::size_t checks = 0;       // samples * pairs
  std::size_t violations = 0;   // product < |entry|
  double worst_ratio = 0.0;     // max |entry| / product
  std::size_t w_blocks = 0;
  std::size_t ceiling_violations = 0;  // W_i above ((16 v 8/(2 c-hat)) / delta)^2
  double max_w_over_ceiling = 0.0;
};

struct DominanceConfig {
  RegimeBox box;
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  int min_distance = 3;
  SupSearch search;
  ThetaHatMode theta_hat = ThetaHatMode::kBox;
};

// Simulates configs under theta*, then for every pair with N >= min_distance
// checks W~_N prod W_i R_r >= |per-sample off-diagonal entry|.
DominanceReport dominance_experiment(const Tree& tree, const DominanceConfig& cfg);

double w_ceiling(const RegimeBox& box);

// ---- W tiers ---------------------------------------------------------------

struct WTierRow {
  double delta = 0.0;
  std::size_t count = 0;               // W values pooled over blocks and samples
  std::array<std::size_t, 5> band{};   // <= K d^2, <= K, <= K/d, <= K/d^2, above
  std::array<double, 4> exceed{};      // P(W > K d^2), P(W > K), P(W > K/d), P(W > K/d^2)
  double mean = 0.0;
  double max = 0.0;
  double median_over_d2 = 0.0;         // median of W / delta^2
};

struct WTierReport {
  EdgeId e = -1;
  EdgeId f = -1;
  int distance = 0;
  std::vector<int> w_index;  // block end indices i = 3..N
  double k = 0.0;            // band constant (fitted unless given)
  bool k_fitted = false;
  double k_mean = 0.0;       // smallest K' with mean W <= K'^2 delta at every delta
  std::vector<WTierRow> rows;
  std::array<SlopeFit, 4> exceed_slope{};  // slope in delta of each exceedance
  SlopeFit mean_slope;
};

struct WTierConfig {
  RegimeBox box;
  std::vector<double> deltas{0.04, 0.02, 0.01};
  std::size_t m = 100000;
  std::uint64_t seed = 1;
  std::optional<double> k;  // fixed band constant; fitted when empty
  SupSearch search;
  ThetaHatMode theta_hat = ThetaHatMode::kTruth;
};

// The fitted band constant is kWBandFraction times the largest delta * max W,
// which puts K / delta inside the top (order 1/delta) tier and K below the
// order-one atoms left by a single sign flip.
inline constexpr double kWBandFraction = 0.25;

WTierReport w_tier_experiment(const Tree& tree, EdgeId e, EdgeId f, const WTierConfig& cfg);

// ---- expected Hessian ------------------------------------------------------

struct HessianConfig {
  RegimeBox box;
  EvalMode mode = EvalMode::kExact;
  std::size_t m = 100000;
  std::uint64_t seed = 1;
  ThetaHatMode theta_hat = ThetaHatMode::kTruth;
};

struct DistanceGroup {
  int distance = 0;
  int envelope_index = 0;  // floor(max(N - 1, 0) / 4)
  std::size_t count = 0;
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

struct HessianReport {
  double delta = 0.0;
  EvalMode mode = EvalMode::kExact;
  std::vector<double> theta_star;
  std::vector<double> theta_hat;
  Matrix h;
  Matrix se;  // zeros in exact mode
  GershgorinBounds gershgorin;
  std::vector<double> eigenvalues;
  bool diagonally_dominant = false;  // sum_{f != e} |H_ef| < |H_ee| for every row
  bool eigen_in_disks = false;
  std::vector<DistanceGroup> groups;
  SlopeFit envelope;            // log max|H_ef| against the envelope index
  double envelope_base = 0.0;   // exp(envelope.slope)
  double max_offdiag = 0.0;
  double min_abs_diag = 0.0;
  // lambda_max <= -C / delta + 26 and lambda_min >= -C~ / delta - 26 hold with
  // these (tightest) values.
  double c_upper = 0.0;
  double c_lower = 0.0;
};

inline constexpr double kEnvelopeFloor = 1e-13;

HessianReport hessian_report(const Tree& tree, const HessianConfig& cfg);

struct DiagRow {
  double delta = 0.0;
  std::vector<double> neg_diag;  // -H_ee
  std::vector<double> neg_diag_se;
  double min_neg = 0.0;
  double max_neg = 0.0;
  bool all_negative = false;
};

struct DiagReport {
  std::vector<DiagRow> rows;
  std::vector<SlopeFit> edge_slope;  // per edge, log(-H_ee) against log delta
  double min_slope = 0.0;
  double max_slope = 0.0;
};

DiagReport diag_scaling_experiment(const Tree& tree, const HessianConfig& cfg,
                                   std::span<const double> deltas);

// ---- Steel's quartet -------------------------------------------------------

struct SteelFixture {
  Tree tree;
  SampleBatch batch;
  std::vector<double> theta1;
  std::vector<double> theta2;
};
// Leaves a (top left), b (bottom left), c (top right), d (bottom right); the
// cherries are {a, b} and {c, d}. Edge order: a, b, c, d, internal. Sample 1
// has the top leaves +1 and the bottom leaves -1; sample 2 is its negation.
SteelFixture steel_fixture();

struct SteelReport {
  double loglik1 = 0.0;
  double loglik2 = 0.0;
  double grid_step = 0.0;
  double grid_max = 0.0;
  std::vector<double> grid_argmax;
  double polished_max = 0.0;
  std::vector<std::vector<double>> maximizers;  // distinct polished points within 1e-9 of the max
  bool maximizers_on_boundary = false;
};

SteelReport steel_example(double grid_step = 0.05, int polish_starts = 32);

}  // namespace cfn
