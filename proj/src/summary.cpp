#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "boolattn/experiments.hpp"
#include "boolattn/format.hpp"
#include "boolattn/hardness.hpp"
#include "boolattn/verify.hpp"

namespace boolattn::experiments {

namespace {

struct Schema {
  std::vector<std::string> metrics;
  std::string flag;
  bool group_by_p = false;
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<Schema> schema_for(const std::string& header) {
  if (header == recovery_csv_header()) return Schema{{"inf_error"}, "exact_match", true};
  if (header == hardness_csv_header()) {
    return Schema{{"frac_all_zero", "floor", "estimator_loss"}, "", false};
  }
  if (header == concentration_csv_header()) return Schema{{"kappa", "max_deviation"}, "pass", false};
  if (header == "d,t,n,trial,max_rel_error,pass") return Schema{{"max_rel_error"}, "pass", false};
  return std::nullopt;
}

// Hyndman-Fan type 7: linear interpolation between order statistics.
double quantile(const std::vector<double>& sorted, double q) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

MetricStats stats_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  MetricStats s;
  s.count = v.size();
  s.min = v.front();
  s.q10 = quantile(v, 0.10);
  s.q25 = quantile(v, 0.25);
  s.median = quantile(v, 0.50);
  s.q75 = quantile(v, 0.75);
  s.q90 = quantile(v, 0.90);
  s.max = v.back();
  return s;
}

struct Accumulator {
  std::size_t d = 0;
  double p = 0.0;
  std::size_t rows = 0;
  std::size_t hits = 0;
  std::map<std::string, std::vector<double>> values;
};

}  // namespace

Summary summarize_stream(std::istream& in, const std::string& source) {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(1, "empty file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  const auto schema = schema_for(header);
  if (!schema) throw ParseError(1, "unrecognised header '" + header + "'");
  const std::vector<std::string> columns = split_csv(header);
  auto index_of = [&columns](const std::string& name) {
    return static_cast<std::size_t>(std::find(columns.begin(), columns.end(), name) - columns.begin());
  };

  std::map<std::pair<std::size_t, double>, Accumulator> groups;
  std::string line;
  std::size_t line_no = 1;
  std::size_t body_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv(line);
    if (cells.size() != columns.size()) {
      throw ParseError(line_no, "expected " + std::to_string(columns.size()) + " fields, got " +
                                    std::to_string(cells.size()));
    }
    auto number = [&](const std::string& name) {
      try {
        return parse_double(cells[index_of(name)]);
      } catch (const std::invalid_argument&) {
        throw ParseError(line_no, "column " + name + ": not a number '" + cells[index_of(name)] + "'");
      }
    };
    const double d_val = number("d");
    if (d_val < 1.0 || d_val != std::floor(d_val)) throw ParseError(line_no, "column d: not a positive integer");
    const double p_val = schema->group_by_p ? number("p") : 0.0;
    Accumulator& acc = groups[{static_cast<std::size_t>(d_val), p_val}];
    acc.d = static_cast<std::size_t>(d_val);
    acc.p = p_val;
    ++acc.rows;
    for (const std::string& m : schema->metrics) acc.values[m].push_back(number(m));
    if (!schema->flag.empty()) {
      const std::string& f = cells[index_of(schema->flag)];
      if (f != "true" && f != "false") {
        throw ParseError(line_no, "column " + schema->flag + ": expected true or false");
      }
      acc.hits += f == "true" ? 1 : 0;
    }
    ++body_rows;
  }
  if (body_rows == 0) throw ParseError(line_no, "no data rows");

  Summary s;
  s.source = source;
  s.flag_column = schema->flag;
  for (auto& [key, acc] : groups) {
    SummaryGroup g;
    g.d = acc.d;
    g.key = "d=" + std::to_string(acc.d);
    if (schema->group_by_p) g.key += ",p=" + format_double(acc.p);
    g.rows = acc.rows;
    for (auto& [name, vals] : acc.values) g.metrics[name] = stats_of(std::move(vals));
    if (!schema->flag.empty()) g.frequency = static_cast<double>(acc.hits) / static_cast<double>(acc.rows);
    s.groups.push_back(std::move(g));
  }
  return s;
}

Summary summarize(const std::filesystem::path& csv_path) {
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("cannot open " + csv_path.string());
  return summarize_stream(in, csv_path.string());
}

std::string Summary::to_text() const {
  std::ostringstream out;
  out << source << '\n';
  for (const SummaryGroup& g : groups) {
    out << "  " << g.key << "  rows=" << g.rows;
    if (g.frequency) out << "  " << flag_column << "_freq=" << format_double(*g.frequency);
    out << '\n';
    for (const auto& [name, st] : g.metrics) {
      out << "    " << name << ": min=" << format_double(st.min) << " q10=" << format_double(st.q10)
          << " q25=" << format_double(st.q25) << " median=" << format_double(st.median)
          << " q75=" << format_double(st.q75) << " q90=" << format_double(st.q90)
          << " max=" << format_double(st.max) << '\n';
    }
  }
  return out.str();
}

nlohmann::json Summary::to_json() const {
  nlohmann::json j;
  j["source"] = source;
  j["flag_column"] = flag_column;
  j["groups"] = nlohmann::json::array();
  for (const SummaryGroup& g : groups) {
    nlohmann::json jg{{"key", g.key}, {"d", g.d}, {"rows", g.rows}};
    jg["frequency"] = g.frequency ? nlohmann::json(*g.frequency) : nlohmann::json(nullptr);
    for (const auto& [name, st] : g.metrics) {
      jg["metrics"][name] = {{"count", st.count}, {"min", st.min},       {"q10", st.q10},
                             {"q25", st.q25},     {"median", st.median}, {"q75", st.q75},
                             {"q90", st.q90},     {"max", st.max}};
    }
    j["groups"].push_back(std::move(jg));
  }
  return j;
}

}  // namespace boolattn::experiments
