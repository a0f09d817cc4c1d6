#ifndef LCJM_IO_HPP
#define LCJM_IO_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <system_error>
#include <tuple>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "lcjm/data.hpp"
#include "lcjm/error.hpp"
#include "lcjm/model.hpp"
#include "lcjm/relabel.hpp"
#include "lcjm/sampler.hpp"
#include "lcjm/selection.hpp"

namespace lcjm {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; identical values always print identically.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Inf" : "-Inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_number(const std::string& text, const std::string& where) {
  std::string s = text;
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == ' ') ++start;
  s = s.substr(start);
  if (s == "NaN" || s == "nan" || s == "NA") return std::numeric_limits<double>::quiet_NaN();
  if (s == "Inf" || s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-Inf" || s == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), value);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError("not a number '" + text + "' at " + where);
  }
  return value;
}

// CSV ---------------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    const char c = line[k];
    if (quoted) {
      if (c == '"' && k + 1 < line.size() && line[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(std::move(field));
  return out;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  bool first = true;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (first && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw DataError(path.filename().string() + " line " + std::to_string(line_no) + ": expected " +
                      std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  if (first) throw DataError("'" + path.string() + "' is empty");
  return table;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << text;
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

/// FNV-1a 64-bit digest of a file's bytes, hex encoded.
inline std::string file_digest(const std::filesystem::path& path) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : read_text(path)) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h;
  return out.str();
}

// Data files ------------------------------------------------------------------------

namespace detail {

inline void expect_header(const CsvTable& t, const std::vector<std::string>& leading, const std::string& file) {
  if (t.header.size() < leading.size()) throw DataError(file + ": header must start with " + leading.front());
  for (std::size_t k = 0; k < leading.size(); ++k) {
    if (t.header[k] != leading[k]) {
      throw DataError(file + ": header column " + std::to_string(k + 1) + " must be '" + leading[k] + "', found '" +
                      t.header[k] + "'");
    }
  }
}

inline std::string where(const std::string& file, std::size_t row, const std::string& column) {
  return file + " row " + std::to_string(row + 1) + ", column " + column;
}

}  // namespace detail

inline Dataset read_dataset(const std::filesystem::path& long_path, const std::filesystem::path& surv_path) {
  const CsvTable lt = read_csv(long_path);
  const CsvTable st = read_csv(surv_path);
  const std::string lname = long_path.filename().string(), sname = surv_path.filename().string();
  detail::expect_header(lt, {"subject_id", "time", "y"}, lname);
  detail::expect_header(st, {"subject_id", "event_time", "event_indicator"}, sname);
  std::vector<LongRecord> longitudinal;
  for (std::size_t r = 0; r < lt.rows.size(); ++r) {
    const auto& f = lt.rows[r];
    LongRecord rec;
    rec.subject_id = f[0];
    rec.time = parse_number(f[1], detail::where(lname, r, "time"));
    rec.y = parse_number(f[2], detail::where(lname, r, "y"));
    for (std::size_t c = 3; c < f.size(); ++c) rec.x_covariates.push_back(parse_number(f[c], detail::where(lname, r, lt.header[c])));
    longitudinal.push_back(std::move(rec));
  }
  std::vector<SurvRecord> survival;
  for (std::size_t r = 0; r < st.rows.size(); ++r) {
    const auto& f = st.rows[r];
    SurvRecord rec;
    rec.subject_id = f[0];
    rec.event_time = parse_number(f[1], detail::where(sname, r, "event_time"));
    const double d = parse_number(f[2], detail::where(sname, r, "event_indicator"));
    rec.event_indicator = d == 0.0 ? 0 : d == 1.0 ? 1 : -1;
    for (std::size_t c = 3; c < f.size(); ++c) rec.w_covariates.push_back(parse_number(f[c], detail::where(sname, r, st.header[c])));
    survival.push_back(std::move(rec));
  }
  return validate_dataset(longitudinal, survival, {lt.header.begin() + 3, lt.header.end()},
                          {st.header.begin() + 3, st.header.end()});
}

inline std::string longitudinal_csv(const Dataset& data) {
  std::string out = "subject_id,time,y";
  for (const auto& c : data.long_covariates) out += "," + csv_escape(c);
  out += "\n";
  for (const auto& s : data.subjects) {
    for (std::size_t j = 0; j < s.n_obs(); ++j) {
      out += csv_escape(s.id) + "," + format_number(s.times[j]) + "," + format_number(s.y[j]);
      for (double x : s.x[j]) out += "," + format_number(x);
      out += "\n";
    }
  }
  return out;
}

inline std::string survival_csv(const Dataset& data) {
  std::string out = "subject_id,event_time,event_indicator";
  for (const auto& c : data.surv_covariates) out += "," + csv_escape(c);
  out += "\n";
  for (const auto& s : data.subjects) {
    out += csv_escape(s.id) + "," + format_number(s.event_time) + "," + std::to_string(s.event);
    for (double w : s.w) out += "," + format_number(w);
    out += "\n";
  }
  return out;
}

inline void write_dataset(const Dataset& data, const std::filesystem::path& long_path,
                          const std::filesystem::path& surv_path) {
  write_text(long_path, longitudinal_csv(data));
  write_text(surv_path, survival_csv(data));
}

// Draws -------------------------------------------------------------------------------

/// Scalar parameter names in draws-CSV order. Classes and vector entries are
/// 1-based; gamma_h0[g][0] is the hazard intercept. Sigma_b lists the lower triangle.
inline std::vector<std::string> parameter_names(const ModelSpec& spec) {
  std::vector<std::string> names;
  const int G = spec.G;
  const auto cls = [](int g) { return "[" + std::to_string(g + 1) + "]"; };
  for (int g = 0; g < G; ++g) {
    for (std::size_t j = 0; j < spec.fixed_dim(); ++j) names.push_back("beta" + cls(g) + "[" + std::to_string(j + 1) + "]");
  }
  names.push_back("sigma_y2");
  for (int g = 0; g < G; ++g) {
    for (std::size_t r = 0; r < spec.random_dim(); ++r) {
      for (std::size_t c = 0; c <= r; ++c) {
        names.push_back("Sigma_b" + cls(g) + "[" + std::to_string(r + 1) + "][" + std::to_string(c + 1) + "]");
      }
    }
  }
  for (int g = 0; g < G; ++g) {
    for (std::size_t k = 0; k < spec.surv_dim(); ++k) names.push_back("gamma" + cls(g) + "[" + std::to_string(k + 1) + "]");
  }
  for (int g = 0; g < G; ++g) names.push_back("alpha" + cls(g));
  for (int g = 0; g < G; ++g) {
    for (std::size_t k = 0; k <= spec.hazard_dim(); ++k) names.push_back("gamma_h0" + cls(g) + "[" + std::to_string(k) + "]");
  }
  for (int g = 0; g < G; ++g) names.push_back("pi" + cls(g));
  return names;
}

/// Values of one state in parameter_names order.
inline std::vector<double> parameter_values(const ParameterState& s) {
  std::vector<double> out;
  const auto G = static_cast<std::size_t>(s.G());
  for (std::size_t g = 0; g < G; ++g) out.insert(out.end(), s.beta[g].data(), s.beta[g].data() + s.beta[g].size());
  out.push_back(s.sigma_y2);
  for (std::size_t g = 0; g < G; ++g) {
    for (Eigen::Index r = 0; r < s.Sigma_b[g].rows(); ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) out.push_back(s.Sigma_b[g](r, c));
    }
  }
  for (std::size_t g = 0; g < G; ++g) out.insert(out.end(), s.gamma[g].data(), s.gamma[g].data() + s.gamma[g].size());
  for (std::size_t g = 0; g < G; ++g) out.push_back(s.alpha[g]);
  for (std::size_t g = 0; g < G; ++g) {
    out.insert(out.end(), s.gamma_h0[g].data(), s.gamma_h0[g].data() + s.gamma_h0[g].size());
  }
  for (std::size_t g = 0; g < G; ++g) out.push_back(s.pi(static_cast<Eigen::Index>(g)));
  return out;
}

/// Inverse of parameter_values for a given spec (indicators and random effects are not restored).
inline ParameterState state_from_values(const ModelSpec& spec, const std::vector<double>& values) {
  ParameterState s = ParameterState::zeros(spec, 0);
  s.b.clear();
  std::size_t k = 0;
  const auto next = [&] {
    if (k >= values.size()) throw DataError("draw row has too few values for the model");
    return values[k++];
  };
  const auto G = static_cast<std::size_t>(spec.G);
  for (std::size_t g = 0; g < G; ++g) {
    for (Eigen::Index j = 0; j < s.beta[g].size(); ++j) s.beta[g](j) = next();
  }
  s.sigma_y2 = next();
  for (std::size_t g = 0; g < G; ++g) {
    for (Eigen::Index r = 0; r < s.Sigma_b[g].rows(); ++r) {
      for (Eigen::Index c = 0; c <= r; ++c) s.Sigma_b[g](r, c) = s.Sigma_b[g](c, r) = next();
    }
  }
  for (std::size_t g = 0; g < G; ++g) {
    for (Eigen::Index j = 0; j < s.gamma[g].size(); ++j) s.gamma[g](j) = next();
  }
  for (std::size_t g = 0; g < G; ++g) s.alpha[g] = next();
  for (std::size_t g = 0; g < G; ++g) {
    for (Eigen::Index j = 0; j < s.gamma_h0[g].size(); ++j) s.gamma_h0[g](j) = next();
  }
  for (std::size_t g = 0; g < G; ++g) s.pi(static_cast<Eigen::Index>(g)) = next();
  if (k != values.size()) throw DataError("draw row has too many values for the model");
  return s;
}

inline std::string draws_csv(const ModelSpec& spec, const ChainOutput& out) {
  std::string text = "iteration";
  for (const auto& n : parameter_names(spec)) text += "," + n;
  text += "\n";
  for (std::size_t k = 0; k < out.draws.size(); ++k) {
    text += std::to_string(out.draw_iterations[k]);
    for (double v : parameter_values(out.draws[k])) text += "," + format_number(v);
    text += "\n";
  }
  return text;
}

/// A draws CSV read back by name: column names plus one row of values per draw.
struct DrawTable {
  std::vector<std::string> names;  // parameter columns (iteration excluded)
  std::vector<long> iterations;
  std::vector<std::vector<double>> rows;

  std::ptrdiff_t column(const std::string& name) const { return covariate_index(names, name); }

  /// Number of classes implied by the pi[g] columns.
  int classes() const {
    int G = 0;
    for (const auto& n : names) {
      if (n.rfind("pi[", 0) == 0) ++G;
    }
    return G;
  }
};

inline DrawTable read_draws(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.empty() || t.header[0] != "iteration") throw DataError(path.filename().string() + ": first column must be 'iteration'");
  DrawTable d;
  d.names.assign(t.header.begin() + 1, t.header.end());
  const std::string file = path.filename().string();
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    d.iterations.push_back(static_cast<long>(parse_number(t.rows[r][0], detail::where(file, r, "iteration"))));
    std::vector<double> row;
    for (std::size_t c = 1; c < t.rows[r].size(); ++c) row.push_back(parse_number(t.rows[r][c], detail::where(file, r, t.header[c])));
    d.rows.push_back(std::move(row));
  }
  return d;
}

/// Splits "name[g]rest" into (name, g, rest); g is 1-based. Columns without a
/// class index (sigma_y2) give g = 0.
inline std::tuple<std::string, int, std::string> split_parameter_name(const std::string& name) {
  const auto open = name.find('[');
  if (open == std::string::npos) return {name, 0, ""};
  const auto close = name.find(']', open);
  if (close == std::string::npos) throw DataError("malformed parameter name '" + name + "'");
  const int g = static_cast<int>(parse_number(name.substr(open + 1, close - open - 1), "parameter name " + name));
  return {name.substr(0, open), g, name.substr(close + 1)};
}

/// Relabels a draws table read from disk: the same ordering rule as
/// relabel_draws, applied through the column names.
inline std::pair<DrawTable, RelabelResult> relabel_table(const DrawTable& d, RelabelStatistic stat) {
  const int G = d.classes();
  if (G == 0) throw DataError("draws table has no pi[g] columns");
  std::vector<std::ptrdiff_t> key_col(static_cast<std::size_t>(G));
  for (int g = 0; g < G; ++g) {
    const std::string name = stat == RelabelStatistic::intercept ? "beta[" + std::to_string(g + 1) + "][1]"
                                                                 : "alpha[" + std::to_string(g + 1) + "]";
    key_col[static_cast<std::size_t>(g)] = d.column(name);
    if (key_col[static_cast<std::size_t>(g)] < 0) throw DataError("draws table lacks column " + name);
  }
  // column index of (base, g, rest) for remapping
  std::map<std::tuple<std::string, int, std::string>, std::size_t> where;
  for (std::size_t c = 0; c < d.names.size(); ++c) where[split_parameter_name(d.names[c])] = c;

  DrawTable out = d;
  RelabelResult r;
  for (std::size_t k = 0; k < d.rows.size(); ++k) {
    std::vector<int> perm(static_cast<std::size_t>(G));
    std::iota(perm.begin(), perm.end(), 0);
    const auto key = [&](int g) { return d.rows[k][static_cast<std::size_t>(key_col[static_cast<std::size_t>(g)])]; };
    std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) { return key(a) < key(b); });
    bool tied = false;
    for (std::size_t j = 1; j < perm.size(); ++j) tied = tied || key(perm[j]) == key(perm[j - 1]);
    for (std::size_t c = 0; c < d.names.size(); ++c) {
      const auto [base, g, rest] = split_parameter_name(d.names[c]);
      if (g == 0) continue;
      const int old = perm[static_cast<std::size_t>(g - 1)] + 1;
      out.rows[k][c] = d.rows[k][where.at({base, old, rest})];
    }
    if (tied) r.tied_draws.push_back(k);
    r.permutations.push_back(std::move(perm));
  }
  r.output.draw_iterations = d.iterations;
  return {out, r};
}

inline std::string draws_csv(const DrawTable& d) {
  std::string text = "iteration";
  for (const auto& n : d.names) text += "," + n;
  text += "\n";
  for (std::size_t k = 0; k < d.rows.size(); ++k) {
    text += std::to_string(d.iterations[k]);
    for (double v : d.rows[k]) text += "," + format_number(v);
    text += "\n";
  }
  return text;
}

inline std::string occupancy_csv(const ChainOutput& out) {
  std::string text = "iteration";
  const std::size_t G = out.occupancy.empty() ? 0 : out.occupancy.front().size();
  for (std::size_t g = 0; g < G; ++g) text += ",n_" + std::to_string(g + 1);
  text += "\n";
  for (std::size_t k = 0; k < out.occupancy.size(); ++k) {
    text += std::to_string(k + 1);
    for (int c : out.occupancy[k]) text += "," + std::to_string(c);
    text += "\n";
  }
  return text;
}

inline std::string permutation_csv(const RelabelResult& r) {
  std::string text = "iteration";
  const std::size_t G = r.permutations.empty() ? 0 : r.permutations.front().size();
  for (std::size_t k = 0; k < G; ++k) text += ",class_" + std::to_string(k + 1);
  text += ",tied\n";
  std::size_t t = 0;
  for (std::size_t k = 0; k < r.permutations.size(); ++k) {
    text += std::to_string(r.output.draw_iterations[k]);
    for (int old : r.permutations[k]) text += "," + std::to_string(old + 1);
    const bool tied = t < r.tied_draws.size() && r.tied_draws[t] == k;
    if (tied) ++t;
    text += tied ? ",1\n" : ",0\n";
  }
  return text;
}

/// Posterior mean, sd and 95% central interval of every column of a draws table.
struct ParameterSummary {
  std::string name;
  double mean = 0.0, sd = 0.0, lower = 0.0, upper = 0.0;
};

inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline std::vector<ParameterSummary> summarize_draws(const DrawTable& d) {
  std::vector<ParameterSummary> out;
  for (std::size_t c = 0; c < d.names.size(); ++c) {
    std::vector<double> col;
    for (const auto& row : d.rows) col.push_back(row[c]);
    ParameterSummary s;
    s.name = d.names[c];
    double sum = 0.0;
    for (double v : col) sum += v;
    const double n = static_cast<double>(col.size());
    s.mean = col.empty() ? std::numeric_limits<double>::quiet_NaN() : sum / n;
    double ss = 0.0;
    for (double v : col) ss += (v - s.mean) * (v - s.mean);
    s.sd = col.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::sort(col.begin(), col.end());
    s.lower = quantile_sorted(col, 0.025);
    s.upper = quantile_sorted(col, 0.975);
    out.push_back(s);
  }
  return out;
}

inline std::string summary_csv(const std::vector<ParameterSummary>& rows) {
  std::string text = "parameter,mean,sd,q2.5,q97.5\n";
  for (const auto& s : rows) {
    text += s.name + "," + format_number(s.mean) + "," + format_number(s.sd) + "," + format_number(s.lower) + "," +
            format_number(s.upper) + "\n";
  }
  return text;
}

inline DrawTable draw_table(const ModelSpec& spec, const ChainOutput& out) {
  DrawTable d;
  d.names = parameter_names(spec);
  d.iterations = out.draw_iterations;
  for (const auto& s : out.draws) d.rows.push_back(parameter_values(s));
  return d;
}

// JSON helpers ---------------------------------------------------------------------

inline json acceptance_json(const ChainOutput& out) {
  json j = json::object();
  for (const auto& [name, a] : out.acceptance) {
    j[name] = {{"proposed", a.proposed}, {"accepted", a.accepted}, {"rate", a.rate()}};
  }
  return j;
}

inline json selection_json(const SelectionResult& r) {
  json j;
  j["G_max"] = r.chain.occupancy.empty() ? 0 : r.chain.occupancy.front().size();
  j["psi"] = r.psi;
  j["mode"] = r.G_opt;
  j["dirichlet_a"] = r.a;
  j["class_specific_parameters"] = r.d;
  json sweep = json::array();
  for (const auto& s : r.sweep) {
    json dist = json::object();
    long total = 0;
    for (const auto& [g, c] : s.distribution) total += c;
    for (const auto& [g, c] : s.distribution) dist[std::to_string(g)] = c;
    json row;
    row["psi"] = s.psi;
    row["mode"] = s.mode;
    row["distribution"] = dist;
    row["iterations"] = total;
    sweep.push_back(row);
  }
  j["sweep"] = sweep;
  return j;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace lcjm

#endif  // LCJM_IO_HPP
