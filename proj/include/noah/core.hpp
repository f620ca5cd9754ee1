#pragma once

// Domain model for the email-campaign decision problem: problem instances,
// synthetic generation, file I/O and construction of the relaxed LP.

#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "noah/common.hpp"

namespace noah {

enum class ProductType { B2B, B2C };

inline std::string to_string(ProductType t) { return t == ProductType::B2B ? "2B" : "2C"; }

inline ProductType parse_product_type(std::string_view s, const std::string& where) {
  if (s == "2B") return ProductType::B2B;
  if (s == "2C") return ProductType::B2C;
  throw ValidationError(where + ": unknown product_type '" + std::string(s) + "'");
}

struct Member {
  std::string id;
  std::vector<double> features;
};

struct Campaign {
  std::string id;
  std::string product_id;
  ProductType type = ProductType::B2C;
};

struct Score {
  std::size_t member = 0;
  std::size_t campaign = 0;
  double y_conv = 0.0;
  double y_unsub = 0.0;
};

struct Budgets {
  double c_unsub = 0.0;
  std::int64_t c_2b = 0;
  std::int64_t c_2c = 0;
  std::int64_t c_fcap = 1;
};

/// Scored (member, campaign) pairs plus budgets. Scores are grouped by member
/// (member-major); a pair that is not eligible simply has no score entry.
struct ProblemInstance {
  std::vector<Member> members;
  std::vector<Campaign> campaigns;
  std::vector<Score> scores;
  std::map<std::pair<std::size_t, std::string>, double> ltv;  // (member, product) -> ltv
  Budgets budgets;

  double ltv_of(const Score& s) const {
    auto it = ltv.find({s.member, campaigns.at(s.campaign).product_id});
    if (it == ltv.end()) {
      throw ValidationError("missing ltv for member '" + members.at(s.member).id + "' product '" +
                            campaigns.at(s.campaign).product_id + "'");
    }
    return it->second;
  }
};

inline void validate(const ProblemInstance& inst) {
  const auto& b = inst.budgets;
  if (!(b.c_unsub >= 0.0) || b.c_2b < 0 || b.c_2c < 0) throw ValidationError("budgets must be nonnegative");
  if (b.c_fcap < 1) throw ValidationError("c_fcap must be at least 1");
  std::size_t prev_member = 0;
  for (std::size_t i = 0; i < inst.scores.size(); ++i) {
    const auto& s = inst.scores[i];
    const std::string where = "score row " + std::to_string(i + 1);
    if (s.member >= inst.members.size() || s.campaign >= inst.campaigns.size())
      throw ValidationError(where + ": index out of range");
    if (s.member < prev_member) throw ValidationError(where + ": scores not grouped by member");
    prev_member = s.member;
    if (!(s.y_conv >= 0.0 && s.y_conv <= 1.0))
      throw ValidationError(where + ": y_conv " + fmt_double(s.y_conv) + " outside [0,1]");
    if (!(s.y_unsub >= 0.0 && s.y_unsub <= 1.0))
      throw ValidationError(where + ": y_unsub " + fmt_double(s.y_unsub) + " outside [0,1]");
    const double v = inst.ltv_of(s);
    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError(where + ": ltv must be finite and >= 0");
  }
}

// ---------------------------------------------------------------------------
// Synthetic instances
// ---------------------------------------------------------------------------

struct GeneratorConfig {
  double conv_mean = 0.05;
  double conv_concentration = 20.0;  // alpha + beta of the Beta score law
  double unsub_mean = 0.01;
  double unsub_concentration = 200.0;
  double ltv_log_mean = 1.0;  // ltv ~ LogNormal(ltv_log_mean, ltv_log_sd)
  double ltv_log_sd = 1.0;
  double frac_2b = 0.5;
  double eligibility = 1.0;  // probability a (member, campaign) pair is scored
  std::size_t feature_dim = 8;
  std::size_t clusters = 4;
  std::int64_t c_fcap = 2;
  // Budgets, relative to a reference of sending c_fcap uniformly random emails.
  double unsub_budget_ratio = 0.3;
  double min_2b_ratio = 0.5;  // C_2B = floor(ratio * U)
  double min_2c_ratio = 0.3;

  void check() const {
    auto in01 = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!(conv_mean > 0.0 && conv_mean < 1.0) || !(unsub_mean > 0.0 && unsub_mean < 1.0))
      throw ValidationError("generator: score means must lie in (0,1)");
    if (!(conv_concentration > 0.0) || !(unsub_concentration > 0.0))
      throw ValidationError("generator: concentrations must be positive");
    if (!(ltv_log_sd >= 0.0)) throw ValidationError("generator: ltv_log_sd must be nonnegative");
    if (!in01(frac_2b) || !in01(eligibility)) throw ValidationError("generator: fractions must lie in [0,1]");
    if (c_fcap < 1) throw ValidationError("generator: c_fcap must be at least 1");
    if (unsub_budget_ratio < 0.0 || min_2b_ratio < 0.0 || min_2c_ratio < 0.0)
      throw ValidationError("generator: budget ratios must be nonnegative");
  }
};

namespace detail {
inline double draw_beta(Rng& rng, double mean, double concentration) {
  std::gamma_distribution<double> ga(mean * concentration, 1.0);
  std::gamma_distribution<double> gb((1.0 - mean) * concentration, 1.0);
  const double x = ga(rng);
  const double y = gb(rng);
  return x / (x + y);
}
}  // namespace detail

inline ProblemInstance generate_instance(std::uint64_t seed, std::int64_t num_members, std::int64_t num_campaigns,
                                         const GeneratorConfig& cfg = {}) {
  if (num_members < 1 || num_campaigns < 1) throw ValidationError("generator: U and J must be at least 1");
  cfg.check();
  const auto U = static_cast<std::size_t>(num_members);
  const auto J = static_cast<std::size_t>(num_campaigns);
  Rng rng(derive_seed(seed, 0));

  ProblemInstance inst;
  inst.campaigns.resize(J);
  const auto n2b = static_cast<std::size_t>(std::llround(cfg.frac_2b * static_cast<double>(J)));
  for (std::size_t j = 0; j < J; ++j) {
    inst.campaigns[j].id = "c" + std::to_string(j);
    inst.campaigns[j].product_id = inst.campaigns[j].id;
    inst.campaigns[j].type = j < n2b ? ProductType::B2B : ProductType::B2C;
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<std::vector<double>> centers(std::max<std::size_t>(cfg.clusters, 1),
                                           std::vector<double>(cfg.feature_dim));
  for (auto& c : centers)
    for (auto& v : c) v = 3.0 * normal(rng);

  inst.members.resize(U);
  double ref_unsub = 0.0;
  for (std::size_t u = 0; u < U; ++u) {
    auto& m = inst.members[u];
    m.id = "m" + std::to_string(u);
    const auto& c = centers[u % centers.size()];
    m.features.resize(cfg.feature_dim);
    for (std::size_t d = 0; d < cfg.feature_dim; ++d) m.features[d] = c[d] + normal(rng);

    double member_unsub = 0.0;
    std::size_t eligible = 0;
    for (std::size_t j = 0; j < J; ++j) {
      if (cfg.eligibility < 1.0 && uniform01(rng) >= cfg.eligibility) continue;
      Score s;
      s.member = u;
      s.campaign = j;
      s.y_conv = detail::draw_beta(rng, cfg.conv_mean, cfg.conv_concentration);
      s.y_unsub = detail::draw_beta(rng, cfg.unsub_mean, cfg.unsub_concentration);
      const double ltv = std::exp(cfg.ltv_log_mean + cfg.ltv_log_sd * normal(rng));
      inst.ltv[{u, inst.campaigns[j].product_id}] = ltv;
      inst.scores.push_back(s);
      member_unsub += s.y_unsub;
      ++eligible;
    }
    if (eligible > 0) {
      const double sends = std::min<double>(static_cast<double>(cfg.c_fcap), static_cast<double>(eligible));
      ref_unsub += sends * member_unsub / static_cast<double>(eligible);
    }
  }

  inst.budgets.c_fcap = cfg.c_fcap;
  inst.budgets.c_unsub = cfg.unsub_budget_ratio * ref_unsub;
  inst.budgets.c_2b = static_cast<std::int64_t>(std::floor(cfg.min_2b_ratio * static_cast<double>(U)));
  inst.budgets.c_2c = static_cast<std::int64_t>(std::floor(cfg.min_2c_ratio * static_cast<double>(U)));
  if (n2b == 0) inst.budgets.c_2b = 0;
  if (n2b == J) inst.budgets.c_2c = 0;
  return inst;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

enum class InstanceFormat { Columnar, Json };

inline constexpr std::string_view kColumnarHeader = "member_id,campaign_id,y_conv,y_unsub,ltv,product_type";

namespace detail {

struct RowSink {
  ProblemInstance inst;
  std::unordered_map<std::string, std::size_t> member_index;
  std::unordered_map<std::string, std::size_t> campaign_index;
  std::vector<std::pair<std::size_t, std::size_t>> seen;  // guards duplicate pairs

  void add(const std::string& where, const std::string& mid, const std::string& cid, double conv, double unsub,
           double ltv, ProductType type, const std::string& pid) {
    if (mid.empty() || cid.empty()) throw ParseError(where + ": empty id");
    if (!(conv >= 0.0 && conv <= 1.0))
      throw ValidationError(where + ": y_conv " + fmt_double(conv) + " outside [0,1]");
    if (!(unsub >= 0.0 && unsub <= 1.0))
      throw ValidationError(where + ": y_unsub " + fmt_double(unsub) + " outside [0,1]");
    if (!(ltv >= 0.0) || !std::isfinite(ltv)) throw ValidationError(where + ": ltv must be finite and >= 0");
    auto [mit, mnew] = member_index.try_emplace(mid, inst.members.size());
    if (mnew) inst.members.push_back({mid, {}});
    auto [cit, cnew] = campaign_index.try_emplace(cid, inst.campaigns.size());
    if (cnew) {
      inst.campaigns.push_back({cid, pid, type});
    } else {
      const auto& c = inst.campaigns[cit->second];
      if (c.type != type || c.product_id != pid)
        throw ValidationError(where + ": campaign '" + cid + "' redefined with a different product");
    }
    Score s{mit->second, cit->second, conv, unsub};
    auto key = std::make_pair(s.member, pid);
    auto [lit, lnew] = inst.ltv.try_emplace(key, ltv);
    if (!lnew && lit->second != ltv)
      throw ValidationError(where + ": conflicting ltv for member '" + mid + "' product '" + pid + "'");
    inst.scores.push_back(s);
  }

  ProblemInstance finish(const Budgets& budgets) {
    std::vector<std::pair<std::size_t, std::size_t>> keys;
    keys.reserve(inst.scores.size());
    for (const auto& s : inst.scores) keys.emplace_back(s.member, s.campaign);
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end())
      throw ValidationError("duplicate (member_id, campaign_id) row");
    // Group by member while keeping the file order inside each member.
    std::stable_sort(inst.scores.begin(), inst.scores.end(),
                     [](const Score& a, const Score& b) { return a.member < b.member; });
    inst.budgets = budgets;
    validate(inst);
    return std::move(inst);
  }
};

}  // namespace detail

/// Reads an instance. Columnar files carry no budgets, so those come from the
/// caller (the run configuration); a JSON file may override them.
inline ProblemInstance load_instance(std::istream& in, InstanceFormat format, const Budgets& budgets = {}) {
  detail::RowSink sink;
  if (format == InstanceFormat::Columnar) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty instance file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line, ',');
    const bool has_pid = header.size() == 7 && header[6] == "product_id";
    std::string expect(kColumnarHeader);
    std::string got;
    for (std::size_t i = 0; i < std::min<std::size_t>(header.size(), 6); ++i) got += (i ? "," : "") + header[i];
    if (got != expect || (header.size() != 6 && !has_pid))
      throw ParseError("bad header; expected '" + expect + "[,product_id]'");
    std::size_t row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      const std::string where = "row " + std::to_string(row);
      const auto f = split(line, ',');
      if (f.size() != header.size())
        throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                         std::to_string(f.size()));
      const std::string pid = has_pid ? f[6] : f[1];
      sink.add(where, f[0], f[1], parse_double(f[2], where), parse_double(f[3], where), parse_double(f[4], where),
               parse_product_type(f[5], where), pid);
    }
    return sink.finish(budgets);
  }

  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("json: ") + e.what());
  }
  try {
    std::size_t row = 0;
    for (const auto& r : doc.at("rows")) {
      ++row;
      const std::string where = "row " + std::to_string(row);
      const std::string cid = r.at("campaign_id").get<std::string>();
      const std::string pid = r.contains("product_id") ? r.at("product_id").get<std::string>() : cid;
      sink.add(where, r.at("member_id").get<std::string>(), cid, r.at("y_conv").get<double>(),
               r.at("y_unsub").get<double>(), r.at("ltv").get<double>(),
               parse_product_type(r.at("product_type").get<std::string>(), where), pid);
    }
    Budgets b = budgets;
    if (doc.contains("budgets")) {
      const auto& jb = doc.at("budgets");
      b.c_unsub = jb.at("c_unsub").get<double>();
      b.c_2b = jb.at("c_2b").get<std::int64_t>();
      b.c_2c = jb.at("c_2c").get<std::int64_t>();
      b.c_fcap = jb.at("c_fcap").get<std::int64_t>();
    }
    if (doc.contains("members")) {
      for (const auto& jm : doc.at("members")) {
        const auto id = jm.at("id").get<std::string>();
        auto [it, inserted] = sink.member_index.try_emplace(id, sink.inst.members.size());
        if (inserted) sink.inst.members.push_back({id, {}});
        sink.inst.members[it->second].features = jm.at("features").get<std::vector<double>>();
      }
    }
    return sink.finish(b);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("json schema: ") + e.what());
  }
}

inline ProblemInstance load_instance(const std::string& path, InstanceFormat format, const Budgets& budgets = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open instance file '" + path + "'");
  return load_instance(in, format, budgets);
}

inline void save_instance(std::ostream& out, const ProblemInstance& inst, InstanceFormat format) {
  const bool need_pid = std::any_of(inst.campaigns.begin(), inst.campaigns.end(),
                                    [](const Campaign& c) { return c.product_id != c.id; });
  if (format == InstanceFormat::Columnar) {
    out << kColumnarHeader << (need_pid ? ",product_id" : "") << '\n';
    for (const auto& s : inst.scores) {
      const auto& c = inst.campaigns[s.campaign];
      out << inst.members[s.member].id << ',' << c.id << ',' << fmt_double(s.y_conv) << ','
          << fmt_double(s.y_unsub) << ',' << fmt_double(inst.ltv_of(s)) << ',' << to_string(c.type);
      if (need_pid) out << ',' << c.product_id;
      out << '\n';
    }
    return;
  }
  nlohmann::ordered_json doc;
  auto& rows = doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& s : inst.scores) {
    const auto& c = inst.campaigns[s.campaign];
    nlohmann::ordered_json r;
    r["member_id"] = inst.members[s.member].id;
    r["campaign_id"] = c.id;
    r["y_conv"] = s.y_conv;
    r["y_unsub"] = s.y_unsub;
    r["ltv"] = inst.ltv_of(s);
    r["product_type"] = to_string(c.type);
    if (need_pid) r["product_id"] = c.product_id;
    rows.push_back(std::move(r));
  }
  doc["budgets"] = {{"c_unsub", inst.budgets.c_unsub},
                    {"c_2b", inst.budgets.c_2b},
                    {"c_2c", inst.budgets.c_2c},
                    {"c_fcap", inst.budgets.c_fcap}};
  auto& members = doc["members"] = nlohmann::ordered_json::array();
  for (const auto& m : inst.members) members.push_back({{"id", m.id}, {"features", m.features}});
  out << doc.dump(1) << '\n';
}

inline std::string serialize_instance(const ProblemInstance& inst, InstanceFormat format) {
  std::ostringstream os;
  save_instance(os, inst, format);
  return os.str();
}

// ---------------------------------------------------------------------------
// Constraint system
// ---------------------------------------------------------------------------

/// Row-compressed sparse matrix.
struct SparseRows {
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> vals;

  std::size_t rows() const { return row_ptr.size() - 1; }

  void append_row(std::span<const std::size_t> idx, std::span<const double> v) {
    if (idx.size() != v.size()) throw DimensionError("append_row: index/value length mismatch");
    for (auto c : idx)
      if (c >= cols) throw DimensionError("append_row: column out of range");
    col_idx.insert(col_idx.end(), idx.begin(), idx.end());
    vals.insert(vals.end(), v.begin(), v.end());
    row_ptr.push_back(col_idx.size());
  }

  double row_dot(std::size_t r, std::span<const double> x) const {
    CompensatedSum s;
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s.add(vals[k] * x[col_idx[k]]);
    return s.value();
  }

  double row_norm(std::size_t r) const {
    double s = 0.0;
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) s += vals[k] * vals[k];
    return std::sqrt(s);
  }

  std::vector<double> multiply(std::span<const double> x) const {
    if (x.size() != cols) throw DimensionError("multiply: length mismatch");
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < rows(); ++r) out[r] = row_dot(r, x);
    return out;
  }

  /// out = D^T lambda (accumulated in row order).
  std::vector<double> transpose_multiply(std::span<const double> lambda) const {
    if (lambda.size() != rows()) throw DimensionError("transpose_multiply: length mismatch");
    std::vector<double> out(cols, 0.0);
    for (std::size_t r = 0; r < rows(); ++r) {
      const double l = lambda[r];
      if (l == 0.0) continue;
      for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) out[col_idx[k]] += vals[k] * l;
    }
    return out;
  }
};

/// min y^T a  s.t.  D a <= b,  a_u in {0 <= a_u <= 1, sum(a_u) <= cap} for each member block u.
struct ConstraintSystem {
  std::vector<double> y;
  SparseRows D;
  std::vector<double> b;
  std::vector<std::size_t> member_offsets{0};  // block u spans [offsets[u], offsets[u+1])
  double cap = 1.0;
  std::vector<std::string> row_labels;
  // Optional provenance of columns (empty for hand-built systems).
  std::vector<std::string> member_ids;
  std::vector<std::size_t> column_member;
  std::vector<std::size_t> column_campaign;
  std::vector<std::string> campaign_ids;
  std::string fingerprint;

  std::size_t num_cols() const { return y.size(); }
  std::size_t num_rows() const { return b.size(); }
  std::size_t num_members() const { return member_offsets.size() - 1; }

  void check() const {
    if (D.cols != y.size()) throw DimensionError("system: D column count differs from |y|");
    if (D.rows() != b.size()) throw DimensionError("system: |b| differs from D row count");
    if (row_labels.size() != b.size()) throw DimensionError("system: row label count differs from |b|");
    if (member_offsets.empty() || member_offsets.front() != 0 || member_offsets.back() != y.size() ||
        !std::is_sorted(member_offsets.begin(), member_offsets.end()))
      throw DimensionError("system: member blocks must tile the columns");
    if (!(cap > 0.0)) throw ValidationError("system: cap must be positive");
  }

  /// Hash of row order, column order and dimensions.
  std::string compute_fingerprint() const {
    Fnv1a h;
    h.add(static_cast<std::uint64_t>(num_rows()));
    h.add(static_cast<std::uint64_t>(num_cols()));
    h.add(static_cast<std::uint64_t>(num_members()));
    for (const auto& l : row_labels) h.add(l);
    for (auto o : member_offsets) h.add(static_cast<std::uint64_t>(o));
    if (!column_member.empty()) {
      for (std::size_t c = 0; c < num_cols(); ++c) {
        h.add(member_ids[column_member[c]]);
        h.add(campaign_ids[column_campaign[c]]);
      }
    }
    return h.hex();
  }

  void finalize() {
    check();
    fingerprint = compute_fingerprint();
  }

  /// Builds a system from dense rows; blocks are given as sizes.
  static ConstraintSystem from_dense(std::vector<double> y, const std::vector<std::vector<double>>& dense_rows,
                                     std::vector<double> b, const std::vector<std::size_t>& block_sizes, double cap,
                                     std::vector<std::string> labels = {}) {
    ConstraintSystem s;
    s.y = std::move(y);
    s.D.cols = s.y.size();
    for (const auto& row : dense_rows) {
      if (row.size() != s.y.size()) throw DimensionError("from_dense: row length differs from |y|");
      std::vector<std::size_t> idx;
      std::vector<double> v;
      for (std::size_t c = 0; c < row.size(); ++c)
        if (row[c] != 0.0) {
          idx.push_back(c);
          v.push_back(row[c]);
        }
      s.D.append_row(idx, v);
    }
    s.b = std::move(b);
    for (auto sz : block_sizes) s.member_offsets.push_back(s.member_offsets.back() + sz);
    s.cap = cap;
    if (labels.empty())
      for (std::size_t i = 0; i < s.b.size(); ++i) labels.push_back("row" + std::to_string(i));
    s.row_labels = std::move(labels);
    s.finalize();
    return s;
  }
};

inline constexpr std::string_view kRowUnsub = "unsub";
inline constexpr std::string_view kRow2B = "min_2b";
inline constexpr std::string_view kRow2C = "min_2c";

/// The relaxed email LP in minimization form: y = -conv * ltv, three coupling
/// rows (unsubscribe budget, 2B minimum volume, 2C minimum volume) and the
/// per-member frequency cap as box-cut blocks.
inline ConstraintSystem build_email_lp(const ProblemInstance& inst) {
  validate(inst);
  ConstraintSystem sys;
  const std::size_t n = inst.scores.size();
  sys.y.resize(n);
  sys.column_member.resize(n);
  sys.column_campaign.resize(n);
  std::vector<std::size_t> idx_all(n), idx_2b, idx_2c;
  std::vector<double> unsub(n);
  for (std::size_t c = 0; c < n; ++c) {
    const auto& s = inst.scores[c];
    sys.y[c] = -s.y_conv * inst.ltv_of(s);
    sys.column_member[c] = s.member;
    sys.column_campaign[c] = s.campaign;
    idx_all[c] = c;
    unsub[c] = s.y_unsub;
    (inst.campaigns[s.campaign].type == ProductType::B2B ? idx_2b : idx_2c).push_back(c);
  }
  sys.D.cols = n;
  sys.D.append_row(idx_all, unsub);
  sys.D.append_row(idx_2b, std::vector<double>(idx_2b.size(), -1.0));
  sys.D.append_row(idx_2c, std::vector<double>(idx_2c.size(), -1.0));
  sys.b = {inst.budgets.c_unsub, -static_cast<double>(inst.budgets.c_2b), -static_cast<double>(inst.budgets.c_2c)};
  sys.row_labels = {std::string(kRowUnsub), std::string(kRow2B), std::string(kRow2C)};

  sys.member_offsets.assign(inst.members.size() + 1, 0);
  for (const auto& s : inst.scores) ++sys.member_offsets[s.member + 1];
  std::partial_sum(sys.member_offsets.begin(), sys.member_offsets.end(), sys.member_offsets.begin());
  sys.cap = static_cast<double>(inst.budgets.c_fcap);
  for (const auto& m : inst.members) sys.member_ids.push_back(m.id);
  for (const auto& c : inst.campaigns) sys.campaign_ids.push_back(c.id);
  sys.finalize();
  return sys;
}

// ---------------------------------------------------------------------------
// Primal solutions
// ---------------------------------------------------------------------------

struct PrimalSolution {
  std::vector<double> a;
  double objective = 0.0;    // y^T a (minimization form)
  double feasibility = 0.0;  // max normalized coupling violation
  std::vector<double> per_row_slack;  // b - D a
};

/// Maximum normalized violation max_i max{0, (d_i^T a - b_i) / (1 + |b_i|)}.
inline double feasibility_score(const ConstraintSystem& sys, std::span<const double> a) {
  if (a.size() != sys.num_cols()) throw DimensionError("feasibility_score: length mismatch");
  double worst = 0.0;
  for (std::size_t r = 0; r < sys.num_rows(); ++r) {
    const double v = (sys.D.row_dot(r, a) - sys.b[r]) / (1.0 + std::abs(sys.b[r]));
    worst = std::max(worst, v);
  }
  return worst;
}

inline PrimalSolution evaluate_primal(const ConstraintSystem& sys, std::vector<double> a) {
  if (a.size() != sys.num_cols()) throw DimensionError("evaluate_primal: length mismatch");
  PrimalSolution p;
  p.objective = dot(sys.y, a);
  const auto Da = sys.D.multiply(a);
  p.per_row_slack.resize(sys.num_rows());
  for (std::size_t r = 0; r < sys.num_rows(); ++r) p.per_row_slack[r] = sys.b[r] - Da[r];
  p.feasibility = feasibility_score(sys, a);
  p.a = std::move(a);
  return p;
}

}  // namespace noah
