#pragma once

// CFN parameterization, regime boxes, simulation and exact leaf probabilities.
//
// An edge carries theta = 1 - 2p = exp(-2 l), where p is the flip probability
// and l the branch length.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfn/tree.hpp"

namespace cfn {

enum class Role { kTruth, kEstimate };

const char* role_name(Role role);

struct EdgeParams {
  std::vector<double> theta;  // indexed by edge id
  Role role = Role::kTruth;

  std::size_t size() const { return theta.size(); }
  double operator[](EdgeId e) const { return theta[e]; }
  operator std::span<const double>() const { return theta; }
};

// Throws ValidationError on out-of-range input.
double convert_edge_parameter(double value, ParamKind kind);
double theta_to_p(double theta);

// Truth box: p in [truth_lo, truth_hi] * delta.
// Estimate box: p in [estimate_lo, estimate_hi] * delta.
struct RegimeBox {
  double delta = 0.01;
  double truth_lo = 1.0;     // c_p
  double truth_hi = 2.0;     // C_p
  double estimate_lo = 0.5;  // c-hat
  double estimate_hi = 4.0;  // C-hat

  // Throws ValidationError unless
  // estimate_hi > truth_hi > truth_lo > estimate_lo > 0, estimate_hi >= 2 estimate_lo,
  // and every p stays below 1/2.
  void validate() const;
  std::pair<double, double> p_interval(Role role) const;
  std::pair<double, double> theta_interval(Role role) const;
};

EdgeParams sample_edge_params(const Tree& tree, const RegimeBox& box, Role role,
                              std::uint64_t seed);

struct BoxCheck {
  bool inside = true;
  std::vector<EdgeId> violations;
};
BoxCheck check_box_membership(std::span<const double> theta, const RegimeBox& box, Role role);

// Broadcast from vertex 0. Sample `index` reads uniforms (index, e) for the flip
// on edge e and (index, E) for the root spin, so draws are independent of the
// order in which samples are generated. A forced root spin reuses the same
// flips, giving the globally negated configuration.
SpinConfig sample_spins(const Tree& tree, std::span<const double> theta, std::uint64_t seed,
                        std::uint64_t index = 0, std::optional<Spin> root_spin = std::nullopt);
LeafConfig restrict_to_leaves(const Tree& tree, const SpinConfig& spins);

struct SampleBatch {
  int leaf_count = 0;
  std::uint64_t seed = 0;
  std::vector<LeafConfig> samples;

  std::size_t size() const { return samples.size(); }
};

// Samples 0..m-1 of sample_spins, restricted to the leaves. Parallel over samples.
SampleBatch sample_batch(const Tree& tree, std::span<const double> theta, std::size_t m,
                         std::uint64_t seed);

// Sum-product over a rooting. table[v] holds (L+, L-) for the subtree below v,
// normalized to sum to 1; log_scale[v] is the log of the factor removed, so
// the unnormalized value is table[v] * exp(log_scale[v]).
struct PruningTables {
  VertexId root = -1;
  std::vector<std::array<double, 2>> table;
  std::vector<double> log_scale;
  double log_probability = 0.0;  // -inf when the pattern is impossible
};
PruningTables prune(const Tree& tree, std::span<const double> theta, const LeafConfig& cfg,
                    VertexId root = -1);

double leaf_config_log_probability(const Tree& tree, std::span<const double> theta,
                                   const LeafConfig& cfg, VertexId root = -1);
double leaf_config_probability(const Tree& tree, std::span<const double> theta,
                               const LeafConfig& cfg, VertexId root = -1);

// Text: header "m n seed", then one row of +1/-1 per sample. Rows written as
// "+-+-" strings are also accepted. CSV: header leaf labels, one row per sample.
void write_sample_batch(std::ostream& out, const SampleBatch& batch);
void write_sample_batch_csv(std::ostream& out, const Tree& tree, const SampleBatch& batch);
SampleBatch read_sample_batch(const std::string& text);
SampleBatch read_sample_batch_csv(const std::string& text, int leaf_count);

}  // namespace cfn
