#pragma once

// Audience expansion: universe members within Euclidean distance delta of any
// original member. Gaussian-projection LSH proposes candidates and an exact
// distance check decides membership, so there are no false positives.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "noah/common.hpp"

namespace noah {

struct LshParams {
  std::size_t tables = 16;
  std::size_t hashes_per_table = 2;
  double width_factor = 2.0;  // bucket width w = width_factor * delta
  std::uint64_t seed = 1;

  void check() const {
    if (tables < 1 || hashes_per_table < 1) throw ValidationError("lsh: tables and hashes_per_table must be >= 1");
    if (!(width_factor > 0.0)) throw ValidationError("lsh: width_factor must be positive");
  }
};

class EmbeddingIndex {
 public:
  EmbeddingIndex(std::vector<std::string> ids, std::vector<std::vector<double>> points, LshParams params = {},
                 unsigned workers = 1)
      : ids_(std::move(ids)), params_(params), workers_(workers) {
    params_.check();
    if (ids_.size() != points.size()) throw DimensionError("index: id count differs from point count");
    if (points.empty()) throw ValidationError("index: no points");
    dim_ = points.front().size();
    if (dim_ == 0) throw ValidationError("index: zero-dimensional points");
    data_.reserve(points.size() * dim_);
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].size() != dim_) throw DimensionError("index: point " + ids_[i] + " has the wrong dimension");
      if (!all_finite(points[i])) throw ValidationError("index: point " + ids_[i] + " is not finite");
      data_.insert(data_.end(), points[i].begin(), points[i].end());
      if (!lookup_.emplace(ids_[i], i).second) throw ValidationError("index: duplicate member id " + ids_[i]);
    }
    // Projection directions and offsets; offsets are fractions of the width.
    Rng rng = make_stream(params_.seed, 0x15a);
    std::normal_distribution<double> stdn(0.0, 1.0);
    const std::size_t n_hash = params_.tables * params_.hashes_per_table;
    proj_.resize(n_hash * dim_);
    offset_.resize(n_hash);
    for (auto& v : proj_) v = stdn(rng);
    for (auto& o : offset_) o = uniform01(rng);
    // Raw projections are width independent; bucketing happens per query width.
    raw_.assign(size() * n_hash, 0.0);
    Executor(workers_).parallel_for(size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i)
        for (std::size_t h = 0; h < n_hash; ++h)
          raw_[i * n_hash + h] = dot(point(i), std::span<const double>(proj_.data() + h * dim_, dim_));
    });
  }

  std::size_t size() const { return ids_.size(); }
  std::size_t dim() const { return dim_; }
  const LshParams& params() const { return params_; }
  const std::string& id(std::size_t i) const { return ids_[i]; }
  std::span<const double> point(std::size_t i) const { return {data_.data() + i * dim_, dim_}; }

  std::size_t index_of(const std::string& member) const {
    auto it = lookup_.find(member);
    if (it == lookup_.end()) throw ValidationError("index: unknown member id " + member);
    return it->second;
  }

  double distance(std::size_t i, std::size_t j) const {
    double s = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      const double d = data_[i * dim_ + k] - data_[j * dim_ + k];
      s += d * d;
    }
    return std::sqrt(s);
  }

  /// Non-original points sharing a bucket with some original point in at
  /// least one table, for bucket width w. Sorted ascending.
  std::vector<std::size_t> candidates(std::span<const std::size_t> original, double width) const {
    if (!(width > 0.0)) return {};
    const std::size_t k = params_.hashes_per_table;
    const std::size_t n_hash = params_.tables * k;
    std::vector<char> is_orig(size(), 0), hit(size(), 0);
    for (auto o : original) is_orig[o] = 1;
    for (std::size_t t = 0; t < params_.tables; ++t) {
      std::unordered_map<std::uint64_t, char> orig_keys;
      for (auto o : original) orig_keys.emplace(bucket_key(o, t, width, k, n_hash), 1);
      std::vector<char> table_hit(size(), 0);
      Executor(workers_).parallel_for(size(), [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i)
          if (!is_orig[i] && orig_keys.count(bucket_key(i, t, width, k, n_hash))) table_hit[i] = 1;
      });
      for (std::size_t i = 0; i < size(); ++i) hit[i] |= table_hit[i];
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i)
      if (hit[i]) out.push_back(i);
    return out;
  }

  /// Candidates within delta of some original, by exact distance.
  std::vector<std::size_t> filter(std::span<const std::size_t> cands, std::span<const std::size_t> original,
                                  double delta) const {
    std::vector<char> keep(cands.size(), 0);
    Executor(workers_).parallel_for(cands.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t c = lo; c < hi; ++c)
        for (auto o : original)
          if (distance(cands[c], o) <= delta) {
            keep[c] = 1;
            break;
          }
    });
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < cands.size(); ++c)
      if (keep[c]) out.push_back(cands[c]);
    return out;
  }

  std::vector<std::size_t> resolve(std::span<const std::string> members) const {
    std::vector<std::size_t> out;
    out.reserve(members.size());
    for (const auto& m : members) out.push_back(index_of(m));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

 private:
  std::uint64_t bucket_key(std::size_t i, std::size_t table, double width, std::size_t k, std::size_t n_hash) const {
    std::uint64_t key = 0x9e3779b97f4a7c15ULL ^ table;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t h = table * k + j;
      const auto b = static_cast<std::int64_t>(std::floor(raw_[i * n_hash + h] / width + offset_[h]));
      key = mix64(key ^ static_cast<std::uint64_t>(b));
    }
    return key;
  }

  std::vector<std::string> ids_;
  std::vector<double> data_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> lookup_;
  LshParams params_;
  unsigned workers_;
  std::vector<double> proj_, offset_, raw_;
};

/// Member ids of the expansion audience, sorted.
inline std::vector<std::string> expand(const EmbeddingIndex& index, std::span<const std::string> original,
                                       double delta) {
  if (!(delta >= 0.0) || !std::isfinite(delta)) throw ValidationError("expand: delta must be nonnegative and finite");
  const auto orig = index.resolve(original);
  const auto cands = index.candidates(orig, index.params().width_factor * delta);
  const auto kept = index.filter(cands, orig, delta);
  std::vector<std::string> out;
  for (auto i : kept) out.push_back(index.id(i));
  std::sort(out.begin(), out.end());
  return out;
}

/// All non-original members within delta of some original, by brute force.
inline std::vector<std::string> expand_exact(const EmbeddingIndex& index, std::span<const std::string> original,
                                             double delta) {
  const auto orig = index.resolve(original);
  std::vector<std::size_t> rest;
  std::size_t k = 0;
  for (std::size_t i = 0; i < index.size(); ++i) {
    while (k < orig.size() && orig[k] < i) ++k;
    if (k < orig.size() && orig[k] == i) continue;
    rest.push_back(i);
  }
  std::vector<std::string> out;
  for (auto i : index.filter(rest, orig, delta)) out.push_back(index.id(i));
  std::sort(out.begin(), out.end());
  return out;
}

struct DeltaRow {
  double delta = 0.0;
  std::size_t expansion_size = 0;
  std::size_t candidate_count = 0;
  double wall_seconds = 0.0;
};

/// Candidates are generated once at the largest delta and filtered for each
/// delta, so the expansion sets are nested.
inline std::vector<DeltaRow> measure_delta_tradeoff(const EmbeddingIndex& index, std::span<const std::string> original,
                                                    std::span<const double> deltas) {
  if (deltas.empty()) return {};
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] >= 0.0) || !std::isfinite(deltas[i]))
      throw ValidationError("measure_delta_tradeoff: deltas must be nonnegative and finite");
    if (i > 0 && deltas[i] < deltas[i - 1]) throw ValidationError("measure_delta_tradeoff: deltas must be ascending");
  }
  const auto orig = index.resolve(original);
  const auto t0 = std::chrono::steady_clock::now();
  const auto cands = index.candidates(orig, index.params().width_factor * deltas.back());
  const double gen_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::vector<DeltaRow> rows;
  for (double d : deltas) {
    const auto t1 = std::chrono::steady_clock::now();
    const auto kept = index.filter(cands, orig, d);
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t1).count();
    rows.push_back({d, kept.size(), cands.size(), gen_seconds + s});
  }
  return rows;
}

/// Wall time is left out unless asked for, so reports are reproducible byte for byte.
inline void write_delta_table_csv(std::ostream& os, std::span<const DeltaRow> rows, bool with_timing = false) {
  os << "delta,expansion_size,candidate_count" << (with_timing ? ",wall_seconds" : "") << '\n';
  for (const auto& r : rows) {
    os << fmt_double(r.delta) << ',' << r.expansion_size << ',' << r.candidate_count;
    if (with_timing) os << ',' << fmt_double(r.wall_seconds);
    os << '\n';
  }
}

struct Embeddings {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> points;
};

/// `member_id,v1,...,vd` rows; a first line starting with `member_id` is a header.
inline Embeddings load_embeddings(std::istream& in) {
  Embeddings e;
  std::string line;
  std::size_t lineno = 0, dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty()) continue;
    auto f = split(t, ',');
    if (lineno == 1 && trim(f[0]) == "member_id") continue;
    if (f.size() < 2) throw ParseError("embeddings line " + std::to_string(lineno) + ": need an id and coordinates");
    if (dim == 0) dim = f.size() - 1;
    if (f.size() - 1 != dim)
      throw ParseError("embeddings line " + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                       " coordinates, got " + std::to_string(f.size() - 1));
    std::vector<double> v(dim);
    for (std::size_t k = 0; k < dim; ++k) v[k] = parse_double(f[k + 1], "embeddings line " + std::to_string(lineno));
    e.ids.push_back(trim(f[0]));
    e.points.push_back(std::move(v));
  }
  if (e.ids.empty()) throw ParseError("embeddings: no rows");
  return e;
}

/// Gaussian clusters: centers ~ N(0, spread^2 I), points ~ center + N(0, I).
inline Embeddings generate_clustered(std::uint64_t seed, std::size_t n, std::size_t dim, std::size_t clusters,
                                     double spread) {
  if (n < 1 || dim < 1 || clusters < 1) throw ValidationError("generate_clustered: sizes must be positive");
  Rng rng = make_stream(seed, 0xa0d);
  std::normal_distribution<double> stdn(0.0, 1.0);
  std::vector<std::vector<double>> centers(clusters, std::vector<double>(dim));
  for (auto& c : centers)
    for (auto& v : c) v = spread * stdn(rng);
  Embeddings e;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centers[i % clusters];
    std::vector<double> p(dim);
    for (std::size_t k = 0; k < dim; ++k) p[k] = c[k] + stdn(rng);
    e.ids.push_back("u" + std::to_string(i));
    e.points.push_back(std::move(p));
  }
  return e;
}

}  // namespace noah
