#include "benfrag/fragmentation.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "benfrag/error.hpp"
#include "benfrag/parallel.hpp"

namespace benfrag {

namespace {

constexpr std::uint64_t kSampleStreamTag = 0x73616d706c65ULL;
constexpr int kMaxCutSteps = 1 << 20;
const double kLn10 = std::numbers::ln10;

double log10_complement(double p) { return std::log1p(-p) / kLn10; }

double log10_sum_exp(double a, double b) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log10(1.0 + std::pow(10.0, lo - hi));
}

std::size_t words_for(int length) { return static_cast<std::size_t>((length + 63) / 64); }

}  // namespace

// ---------------------------------------------------------------------------
// FragConfig

std::vector<double> FragConfig::edges() const {
  if (initial_edges.empty()) return std::vector<double>(static_cast<std::size_t>(m), 1.0);
  return initial_edges;
}

double FragConfig::log10_initial_volume() const {
  double v = 0.0;
  for (double e : edges()) v += std::log10(e);
  return v;
}

int FragConfig::axis_of_step(int t) const {
  const int slot = (t - 1) % m;
  return axis_order.empty() ? slot : axis_order[static_cast<std::size_t>(slot)];
}

void validate(const FragConfig& cfg) {
  if (cfg.m < 1) throw ValidationError("dimension m must be at least 1");
  if (cfg.N < 1) throw ValidationError("iteration count N must be at least 1");
  if (static_cast<long long>(cfg.m) * cfg.N > kMaxCutSteps)
    throw ValidationError("N * m is too large");
  if (!cfg.initial_edges.empty()) {
    if (cfg.initial_edges.size() != static_cast<std::size_t>(cfg.m))
      throw ValidationError("initial_edges must have exactly m entries");
    for (double e : cfg.initial_edges)
      if (!std::isfinite(e) || !(e > 0.0))
        throw ValidationError("initial edges must be finite and positive");
  }
  if (!cfg.axis_order.empty()) {
    if (cfg.axis_order.size() != static_cast<std::size_t>(cfg.m))
      throw ValidationError("axis_order must list each of the m axes once");
    std::set<int> seen(cfg.axis_order.begin(), cfg.axis_order.end());
    if (seen.size() != cfg.axis_order.size() || *seen.begin() != 0 || *seen.rbegin() != cfg.m - 1)
      throw ValidationError("axis_order must be a permutation of 0..m-1");
  }
  if (cfg.mode == FragMode::full) {
    if (cfg.cut_steps() > kMaxFullCutSteps)
      throw ValidationError("full mode is capped at (2^m)^N <= 2^24 pieces; got m=" +
                            std::to_string(cfg.m) + ", N=" + std::to_string(cfg.N) +
                            " (use sample mode)");
    if (cfg.forced_cuts) {
      const std::size_t need = (std::size_t{1} << cfg.cut_steps()) - 1;
      if (cfg.forced_cuts->size() != need)
        throw ValidationError("forced_cuts must hold exactly 2^(Nm) - 1 proportions");
      for (double p : *cfg.forced_cuts)
        if (!(p > 0.0 && p < 1.0)) throw ValidationError("forced cuts must lie strictly in (0, 1)");
    }
  } else {
    if (cfg.sample_leaves < 1) throw ValidationError("sample mode needs at least one leaf");
    if (cfg.forced_cuts) throw ValidationError("forced cuts apply to full mode only");
  }
}

FragConfig FragConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("fragmentation config must be a JSON object");
  static const std::set<std::string> known{"m",      "N",    "initial_edges", "density",
                                           "seed",   "stream", "mode",        "leaves",
                                           "axis_order", "threads"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ValidationError("unknown fragmentation key '" + key + "'");
  FragConfig cfg;
  try {
    if (j.contains("m")) cfg.m = j.at("m").get<int>();
    if (j.contains("N")) cfg.N = j.at("N").get<int>();
    if (j.contains("initial_edges"))
      cfg.initial_edges = j.at("initial_edges").get<std::vector<double>>();
    if (j.contains("density")) cfg.density = Density::from_json(j.at("density"));
    if (j.contains("seed")) cfg.rng.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("stream")) cfg.rng.stream = j.at("stream").get<std::uint64_t>();
    if (j.contains("mode")) {
      const auto mode = j.at("mode").get<std::string>();
      if (mode == "full")
        cfg.mode = FragMode::full;
      else if (mode == "sample")
        cfg.mode = FragMode::sample;
      else
        throw ValidationError("mode must be \"full\" or \"sample\"");
    }
    if (j.contains("leaves")) cfg.sample_leaves = j.at("leaves").get<std::size_t>();
    if (j.contains("axis_order")) cfg.axis_order = j.at("axis_order").get<std::vector<int>>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<unsigned>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad fragmentation config: ") + e.what());
  }
  return cfg;
}

nlohmann::json FragConfig::to_json() const {
  nlohmann::json j;
  j["m"] = m;
  j["N"] = N;
  j["initial_edges"] = edges();
  j["density"] = density.to_json();
  j["seed"] = rng.seed;
  j["stream"] = rng.stream;
  j["mode"] = mode == FragMode::full ? "full" : "sample";
  if (mode == FragMode::sample) j["leaves"] = sample_leaves;
  if (!axis_order.empty()) j["axis_order"] = axis_order;
  return j;
}

// ---------------------------------------------------------------------------
// CutPath

CutPath::CutPath(int length) : words_(words_for(length), 0), length_(length) {
  if (length < 0) throw ValidationError("path length must be non-negative");
}

CutPath CutPath::from_string(const std::string& bits) {
  CutPath p(static_cast<int>(bits.size()));
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') throw ValidationError("path must be a 0/1 string");
    p.set(static_cast<int>(i), bits[i] == '1');
  }
  return p;
}

CutPath CutPath::from_leaf_index(std::uint64_t index, int length) {
  if (length > 64) throw ValidationError("leaf index paths are limited to 64 steps");
  CutPath p(length);
  if (length > 0) p.words_[0] = index << (64 - length);
  return p;
}

bool CutPath::bit(int step) const {
  if (step < 0 || step >= length_) throw ValidationError("path step out of range");
  return (words_[static_cast<std::size_t>(step / 64)] >> (63 - step % 64)) & 1U;
}

void CutPath::set(int step, bool value) {
  if (step < 0 || step >= length_) throw ValidationError("path step out of range");
  const std::uint64_t mask = std::uint64_t{1} << (63 - step % 64);
  auto& w = words_[static_cast<std::size_t>(step / 64)];
  w = value ? (w | mask) : (w & ~mask);
}

std::string CutPath::to_string() const {
  std::string s(static_cast<std::size_t>(length_), '0');
  for (int t = 0; t < length_; ++t)
    if (bit(t)) s[static_cast<std::size_t>(t)] = '1';
  return s;
}

int shared_factor_count(const CutPath& a, const CutPath& b) {
  if (a.length() != b.length())
    throw ValidationError("pieces come from different runs (path lengths differ)");
  const auto wa = a.words();
  const auto wb = b.words();
  for (std::size_t w = 0; w < wa.size(); ++w) {
    const std::uint64_t diff = wa[w] ^ wb[w];
    if (diff != 0)
      return std::min(a.length(), static_cast<int>(w * 64) + std::countl_zero(diff));
  }
  return a.length();
}

// ---------------------------------------------------------------------------
// BoxPiece / FragmentationRun

double BoxPiece::log10_volume() const {
  double v = 0.0;
  for (double e : log_edges) v += e;
  return v;
}

int shared_factor_count(const BoxPiece& a, const BoxPiece& b) {
  return shared_factor_count(a.path, b.path);
}

FragmentationRun::FragmentationRun(FragConfig config, std::size_t leaves)
    : config_(std::move(config)),
      words_per_path_(words_for(config_.cut_steps())),
      log_edges_(leaves * static_cast<std::size_t>(config_.m)),
      log_volumes_(leaves),
      path_words_(leaves * words_per_path_) {}

std::span<const double> FragmentationRun::log_edges(std::size_t i) const {
  const std::size_t m = static_cast<std::size_t>(config_.m);
  return std::span<const double>(log_edges_).subspan(i * m, m);
}

CutPath FragmentationRun::path(std::size_t i) const {
  CutPath p(path_length());
  for (int t = 0; t < path_length(); ++t) {
    const std::uint64_t w = path_words_[i * words_per_path_ + static_cast<std::size_t>(t / 64)];
    p.set(t, (w >> (63 - t % 64)) & 1U);
  }
  return p;
}

BoxPiece FragmentationRun::piece(std::size_t i) const {
  const auto e = log_edges(i);
  return BoxPiece{std::vector<double>(e.begin(), e.end()), path(i)};
}

std::vector<double> FragmentationRun::log10_contents(int d) const {
  std::vector<double> out(size());
  parallel_for(size(), config_.threads,
               [&](std::size_t i) { out[i] = log10_lower_dim_content(log_edges(i), d); });
  return out;
}

// ---------------------------------------------------------------------------
// Cut proportions

double cut_proportion(const FragConfig& cfg, std::uint64_t k) {
  if (k < 1) throw ValidationError("cut indices start at 1");
  if (cfg.forced_cuts) {
    if (k > cfg.forced_cuts->size()) throw ValidationError("cut index out of range");
    return (*cfg.forced_cuts)[k - 1];
  }
  CounterRng gen(derive(cfg.rng, k));
  return cfg.density.draw(gen);
}

std::vector<double> draw_cuts(const FragConfig& cfg) {
  if (cfg.cut_steps() > kMaxFullCutSteps)
    throw ValidationError("cut tables are limited to N m <= 24");
  const std::size_t count = (std::size_t{1} << cfg.cut_steps()) - 1;
  std::vector<double> cuts(count);
  parallel_for(count, cfg.threads, [&](std::size_t i) { cuts[i] = cut_proportion(cfg, i + 1); });
  return cuts;
}

// ---------------------------------------------------------------------------
// Enumeration and sampling

FragmentationRun fragment_full(const FragConfig& cfg) {
  validate(cfg);
  if (cfg.mode != FragMode::full) throw ValidationError("fragment_full needs a full-mode config");
  const int steps = cfg.cut_steps();
  const std::size_t m = static_cast<std::size_t>(cfg.m);

  std::vector<double> level;
  for (double e : cfg.edges()) level.push_back(std::log10(e));
  std::vector<double> next;
  for (int t = 1; t <= steps; ++t) {
    const std::size_t pieces = std::size_t{1} << (t - 1);
    const std::size_t axis = static_cast<std::size_t>(cfg.axis_of_step(t));
    next.assign(2 * pieces * m, 0.0);
    parallel_for(pieces, cfg.threads, [&](std::size_t j) {
      const double p = cut_proportion(cfg, pieces + j);
      const double* src = level.data() + j * m;
      double* left = next.data() + (2 * j) * m;
      double* right = left + m;
      std::copy(src, src + m, left);
      std::copy(src, src + m, right);
      left[axis] += std::log10(p);
      right[axis] += log10_complement(p);
    });
    level.swap(next);
  }

  const std::size_t leaves = std::size_t{1} << steps;
  FragmentationRun run(cfg, leaves);
  run.log_edges_ = std::move(level);
  bool finite = true;
  for (std::size_t i = 0; i < leaves; ++i) {
    double v = 0.0;
    for (std::size_t a = 0; a < m; ++a) v += run.log_edges_[i * m + a];
    run.log_volumes_[i] = v;
    finite = finite && std::isfinite(v);
    if (steps > 0) run.path_words_[i] = static_cast<std::uint64_t>(i) << (64 - steps);
  }
  if (!finite) throw NumericalError("non-finite log edge: density sampler produced a 0 or 1 cut", 0.0);
  return run;
}

BoxPiece sample_leaf(const FragConfig& cfg, std::uint64_t leaf, std::vector<double>* cuts_used) {
  const int steps = cfg.cut_steps();
  CounterRng gen(derive(derive(cfg.rng, kSampleStreamTag), leaf));
  BoxPiece piece;
  for (double e : cfg.edges()) piece.log_edges.push_back(std::log10(e));
  piece.path = CutPath(steps);
  if (cuts_used) cuts_used->clear();
  for (int t = 1; t <= steps; ++t) {
    const double p = cfg.density.draw(gen);
    const bool side = (gen.next_u64() >> 63) != 0;
    const std::size_t axis = static_cast<std::size_t>(cfg.axis_of_step(t));
    piece.log_edges[axis] += side ? log10_complement(p) : std::log10(p);
    piece.path.set(t - 1, side);
    if (cuts_used) cuts_used->push_back(p);
  }
  return piece;
}

FragmentationRun fragment_sample(const FragConfig& cfg) {
  validate(cfg);
  if (cfg.mode != FragMode::sample)
    throw ValidationError("fragment_sample needs a sample-mode config");
  const std::size_t m = static_cast<std::size_t>(cfg.m);
  FragmentationRun run(cfg, cfg.sample_leaves);
  parallel_for(cfg.sample_leaves, cfg.threads, [&](std::size_t i) {
    const BoxPiece piece = sample_leaf(cfg, i, nullptr);
    std::copy(piece.log_edges.begin(), piece.log_edges.end(), run.log_edges_.begin() + i * m);
    run.log_volumes_[i] = piece.log10_volume();
    const auto words = piece.path.words();
    std::copy(words.begin(), words.end(), run.path_words_.begin() + i * run.words_per_path_);
  });
  for (double v : run.log_volumes_)
    if (!std::isfinite(v))
      throw NumericalError("non-finite log edge: density sampler produced a 0 or 1 cut", 0.0);
  return run;
}

FragmentationRun fragment(const FragConfig& cfg) {
  return cfg.mode == FragMode::full ? fragment_full(cfg) : fragment_sample(cfg);
}

double closed_form_leaf(const FragConfig& cfg, std::span<const double> cuts,
                        const CutPath& path) {
  if (path.length() != cfg.cut_steps())
    throw ValidationError("path length must equal N * m");
  double volume = 1.0;
  for (double e : cfg.edges()) volume *= e;
  std::uint64_t k = 1;
  for (int t = 0; t < path.length(); ++t) {
    if (k > cuts.size()) throw ValidationError("cut index out of range");
    const double p = cuts[k - 1];
    const bool side = path.bit(t);
    volume *= side ? (1.0 - p) : p;
    k = 2 * k + (side ? 1 : 0);
  }
  return volume;
}

double log10_lower_dim_content(std::span<const double> log_edges, int d) {
  const int m = static_cast<int>(log_edges.size());
  if (d < 1 || d > m) throw ValidationError("content dimension d must satisfy 1 <= d <= m");
  // e_k over the edges seen so far, in log10.
  std::vector<double> e(static_cast<std::size_t>(d) + 1, -std::numeric_limits<double>::infinity());
  e[0] = 0.0;
  for (int i = 0; i < m; ++i) {
    const double l = log_edges[static_cast<std::size_t>(i)];
    for (int k = std::min(i + 1, d); k >= 1; --k) {
      const auto ku = static_cast<std::size_t>(k);
      e[ku] = log10_sum_exp(e[ku], e[ku - 1] + l);
    }
  }
  return e[static_cast<std::size_t>(d)] + (m - d) * std::log10(2.0);
}

double lower_dim_content(const BoxPiece& piece, int d) {
  return std::pow(10.0, log10_lower_dim_content(piece.log_edges, d));
}

}  // namespace benfrag
