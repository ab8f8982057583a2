#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "benfrag/density.hpp"
#include "benfrag/rng.hpp"

namespace benfrag {

enum class FragMode { full, sample };

/// Full enumeration is limited to (2^m)^N <= 2^24 leaves, i.e. N m <= 24.
inline constexpr int kMaxFullCutSteps = 24;

/// Configuration of one unrestricted fragmentation run.
///
/// Each iteration cuts every piece once along each of the m axes. Cut steps
/// are numbered t = 1..N m; step t cuts axis axis_order[(t - 1) mod m] and
/// uses proportions p_{2^{t-1}} .. p_{2^t - 1}, assigned left to right. A
/// piece therefore draws its cut from heap index k and hands k' = 2k + b to
/// its child on side b (0 keeps p, 1 keeps 1 - p).
struct FragConfig {
  int m = 1;
  int N = 1;
  /// Empty means a unit cube.
  std::vector<double> initial_edges;
  Density density = Density::uniform();
  RngSpec rng;
  FragMode mode = FragMode::full;
  /// Leaves drawn in sample mode.
  std::size_t sample_leaves = 0;
  /// Which axis each within-iteration step cuts; empty means 0, 1, ..., m - 1.
  std::vector<int> axis_order;
  /// Explicit p_1 .. p_{2^{Nm} - 1} (element 0 holds p_1) replacing random draws.
  std::optional<std::vector<double>> forced_cuts;
  unsigned threads = 1;

  int cut_steps() const { return N * m; }
  std::vector<double> edges() const;
  double log10_initial_volume() const;
  int axis_of_step(int t) const;

  static FragConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

void validate(const FragConfig& cfg);

/// Cut-side record of a leaf: bit t (0-based step) is 0 when the leaf kept the
/// p side of that cut and 1 for the 1 - p side.
class CutPath {
 public:
  CutPath() = default;
  explicit CutPath(int length);

  static CutPath from_string(const std::string& bits);
  /// Path of leaf `index` in a full run: the binary digits of the index, first
  /// cut most significant.
  static CutPath from_leaf_index(std::uint64_t index, int length);

  int length() const noexcept { return length_; }
  bool bit(int step) const;
  void set(int step, bool value);
  std::string to_string() const;
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool operator==(const CutPath&) const = default;

 private:
  std::vector<std::uint64_t> words_;
  int length_ = 0;
};

/// Number of leading cuts two leaves share before their paths diverge.
int shared_factor_count(const CutPath& a, const CutPath& b);

/// One leaf of the fragmentation tree.
struct BoxPiece {
  std::vector<double> log_edges;  // log10 of each edge
  CutPath path;

  double log10_volume() const;
};

int shared_factor_count(const BoxPiece& a, const BoxPiece& b);

/// Leaves of a run, stored column-wise. Full runs list leaves in path order.
class FragmentationRun {
 public:
  FragmentationRun(FragConfig config, std::size_t leaves);

  const FragConfig& config() const noexcept { return config_; }
  std::size_t size() const noexcept { return log_volumes_.size(); }
  int m() const noexcept { return config_.m; }
  int path_length() const noexcept { return config_.cut_steps(); }

  std::span<const double> log10_volumes() const noexcept { return log_volumes_; }
  double log10_volume(std::size_t i) const { return log_volumes_[i]; }
  std::span<const double> log_edges(std::size_t i) const;
  CutPath path(std::size_t i) const;
  BoxPiece piece(std::size_t i) const;

  /// log10 of each leaf's d-dimensional content.
  std::vector<double> log10_contents(int d) const;

 private:
  friend FragmentationRun fragment_full(const FragConfig& cfg);
  friend FragmentationRun fragment_sample(const FragConfig& cfg);

  FragConfig config_;
  std::size_t words_per_path_;
  std::vector<double> log_edges_;
  std::vector<double> log_volumes_;
  std::vector<std::uint64_t> path_words_;
};

/// The cut proportion at heap index k (1-based).
double cut_proportion(const FragConfig& cfg, std::uint64_t k);

/// p_1 .. p_{2^{Nm}-1} as a full run would use them (element 0 holds p_1).
std::vector<double> draw_cuts(const FragConfig& cfg);

/// All (2^m)^N leaves, in path order.
FragmentationRun fragment_full(const FragConfig& cfg);

/// K independent root-to-leaf walks with fresh cuts and a fair side choice at
/// every step; each leaf is distributed as a uniformly chosen leaf of a full tree.
FragmentationRun fragment_sample(const FragConfig& cfg);

/// fragment_full or fragment_sample according to cfg.mode.
FragmentationRun fragment(const FragConfig& cfg);

/// One sampled leaf; `cuts_used`, when given, receives the proportion drawn at each step.
BoxPiece sample_leaf(const FragConfig& cfg, std::uint64_t leaf, std::vector<double>* cuts_used);

/// Walks `path` through an explicit cut table and returns V times the product
/// of the selected factors. Brute-force counterpart of fragment_full.
double closed_form_leaf(const FragConfig& cfg, std::span<const double> cuts,
                        const CutPath& path);

/// log10 of C_d = 2^{m-d} e_d(edges), the total d-dimensional face content
/// of the box, evaluated with a log-sum-exp recurrence.
double log10_lower_dim_content(std::span<const double> log_edges, int d);
double lower_dim_content(const BoxPiece& piece, int d);

}  // namespace benfrag
