#include "boolattn/experiments.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "boolattn/attention.hpp"
#include "boolattn/format.hpp"
#include "boolattn/hardness.hpp"
#include "boolattn/rng.hpp"
#include "boolattn/verify.hpp"

namespace boolattn::experiments {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kOracleSeedTag = 0x6f72;
constexpr std::string_view kGradcheckHeader = "d,t,n,trial,max_rel_error,pass";

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::uint64_t parse_count(const std::string& field, const std::string& text) {
  std::uint64_t v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc{} || ptr != last) {
    throw ConfigError(field, "expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

double parse_real(const std::string& field, const std::string& text) {
  try {
    const double v = parse_double(text);
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
    return v;
  } catch (const std::invalid_argument&) {
    throw ConfigError(field, "expected a number, got '" + text + "'");
  }
}

template <typename F>
auto with_field(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(field, e.what());
  }
}

std::string csv_file_for(Subcommand sub) { return std::string(to_string(sub)) + ".csv"; }

struct Experiment {
  std::size_t d = 0;
  double p = 0.0;
  std::uint64_t index = 0;
};

std::vector<Experiment> enumerate(const RunConfig& c) {
  std::vector<Experiment> out;
  const std::vector<double> ps = c.noise_p.empty() ? std::vector<double>{0.0} : c.noise_p;
  if (c.subcommand == Subcommand::Gradcheck) {
    for (std::size_t d : c.d_list) {
      for (std::uint64_t trial = 0; trial < c.trials; ++trial) out.push_back({d, 0.0, trial});
    }
    return out;
  }
  for (std::size_t d : c.d_list) {
    for (double p : ps) {
      for (std::uint64_t s : c.seeds) out.push_back({d, p, s});
    }
  }
  return out;
}

// Rows for one experiment; concentration produces one row per output file.
std::vector<std::string> run_one(const RunConfig& c, const Experiment& ex) {
  const std::uint64_t seed = experiment_seed(c.master_seed, ex.d, ex.index);
  const std::size_t k = c.k_for(ex.d);
  const std::size_t n = c.n_for(ex.d);
  switch (c.subcommand) {
    case Subcommand::TeacherForced:
    case Subcommand::Noisy:
    case Subcommand::Majority: {
      const TaskSpec task = make_task(ex.d, k, c.mode, ex.p, seed);
      const Batch batch = sample_batch(task, n, seed);
      const GradientOracleSpec oracle =
          c.rho ? GradientOracleSpec::perturbed(*c.rho, derive_seed({seed, kOracleSeedTag}))
                : GradientOracleSpec::exact();
      const RecoveryReport r = c.subcommand == Subcommand::Majority
                                   ? run_majority(batch, c.train, oracle, ex.index)
                                   : run_teacher_forced(batch, c.train, oracle, ex.index);
      return {to_csv_row(r)};
    }
    case Subcommand::Hardness:
      return {to_csv_row(run_hardness(ex.d, k, n, c.trials, c.subsets, c.steps, c.lr, seed))};
    case Subcommand::Concentration: {
      const Batch bits = sample_batch(make_task(ex.d, k, Mode::And, 0.0, seed), n, seed);
      const Batch signs = sample_batch(make_task(ex.d, k, Mode::Majority, 0.0, seed), n, seed);
      return {to_csv_row(check_interaction_concentration(bits.x, c.fail_prob)),
              to_csv_row(check_majority_concentration(signs.x, signs.pairing, c.fail_prob))};
    }
    case Subcommand::Gradcheck: {
      Engine rng(seed);
      std::vector<double> w(ex.d * c.t), x(n * ex.d), e(n * c.t);
      for (double& v : w) v = uniform(rng, -2.0, 2.0);
      BitSource bits(rng);
      for (double& v : x) v = bits.next() ? 1.0 : 0.0;
      for (double& v : e) v = uniform01(rng);
      const WeightMatrix wm{Matrix(ex.d, c.t, std::move(w))};
      const Matrix xm(n, ex.d, std::move(x));
      const Matrix em(n, c.t, std::move(e));
      const Matrix ga = analytic_gradient(wm, xm, em);
      const Matrix gf = fd_gradient(wm, xm, em, c.h);
      double worst = 0.0;
      for (std::size_t i = 0; i < ga.data().size(); ++i) {
        const double a = ga.data()[i];
        worst = std::max(worst, std::abs(a - gf.data()[i]) / std::max(1.0, std::abs(a)));
      }
      return {std::to_string(ex.d) + ',' + std::to_string(c.t) + ',' + std::to_string(n) + ',' +
              std::to_string(ex.index) + ',' + format_double(worst) + ',' +
              (worst <= 1e-6 ? "true" : "false")};
    }
  }
  return {};
}

std::vector<std::pair<std::string, std::string>> outputs_for(Subcommand sub) {
  switch (sub) {
    case Subcommand::TeacherForced:
    case Subcommand::Noisy:
    case Subcommand::Majority: return {{csv_file_for(sub), recovery_csv_header()}};
    case Subcommand::Hardness: return {{csv_file_for(sub), hardness_csv_header()}};
    case Subcommand::Concentration:
      return {{"concentration-bits.csv", concentration_csv_header()},
              {"concentration-majority.csv", concentration_csv_header()}};
    case Subcommand::Gradcheck: return {{csv_file_for(sub), std::string(kGradcheckHeader)}};
  }
  return {};
}

}  // namespace

std::string_view to_string(Subcommand sub) {
  switch (sub) {
    case Subcommand::TeacherForced: return "teacher-forced";
    case Subcommand::Noisy: return "noisy";
    case Subcommand::Majority: return "majority";
    case Subcommand::Hardness: return "hardness";
    case Subcommand::Concentration: return "concentration";
    case Subcommand::Gradcheck: return "gradcheck";
  }
  return "?";
}

Subcommand parse_subcommand(std::string_view text) {
  for (Subcommand s : {Subcommand::TeacherForced, Subcommand::Noisy, Subcommand::Majority,
                       Subcommand::Hardness, Subcommand::Concentration, Subcommand::Gradcheck}) {
    if (text == to_string(s)) return s;
  }
  throw ConfigError("subcommand", "unknown subcommand '" + std::string(text) + "'");
}

ConfigMap parse_config_text(std::istream& in, const std::string& source) {
  ConfigMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config", source + ":" + std::to_string(line_no) + ": expected key=value");
    }
    out[trim(std::string_view(body).substr(0, eq))] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

ConfigMap read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  return parse_config_text(in, path.string());
}

ConfigMap default_config(Subcommand sub) {
  ConfigMap m{
      {"subcommand", std::string(to_string(sub))},
      {"d", "64,128,256"},
      {"k-rule", "half"},
      {"n-rule", "4x"},
      {"eps", "8"},
      {"eta-const", "8"},
      {"eta-rule", "theorem"},
      {"mode", "AND"},
      {"p", "0"},
      {"seeds", "100"},
      {"seed-list", ""},
      {"master-seed", "0"},
      {"oracle", "exact"},
      {"decode", "GAP_SPLIT"},
      {"output-dir", "results"},
      {"trials", "100"},
      {"subsets", "200"},
      {"steps", "100"},
      {"lr", "0.5"},
      {"t", "2"},
      {"h", "1e-05"},
      {"fail-prob", "0.01"},
      {"jobs", "1"},
  };
  switch (sub) {
    case Subcommand::TeacherForced: break;
    case Subcommand::Noisy:
      m["d"] = "256";
      m["mode"] = "NOISY_AND";
      m["p"] = "0.1,0.2,0.3";
      break;
    case Subcommand::Majority:
      m["d"] = "128";
      m["mode"] = "MAJORITY";
      m["eta-rule"] = "linear";
      m["eta-const"] = "1";
      break;
    case Subcommand::Hardness:
      m["d"] = "40";
      m["n-rule"] = "10000";
      m["seeds"] = "1";
      break;
    case Subcommand::Concentration:
      m["d"] = "64";
      m["n-rule"] = "4096";
      break;
    case Subcommand::Gradcheck:
      m["d"] = "8";
      m["n-rule"] = "16";
      break;
  }
  return m;
}

std::size_t RunConfig::n_for(std::size_t d) const {
  if (n_multiplier > 0.0) {
    return static_cast<std::size_t>(std::llround(n_multiplier * static_cast<double>(d)));
  }
  return n_absolute;
}

std::uint64_t experiment_seed(std::uint64_t master, std::size_t d, std::uint64_t index) {
  return derive_seed({master, static_cast<std::uint64_t>(d), index});
}

RunConfig parse_run_config(const ConfigMap& values) {
  const auto sub_it = values.find("subcommand");
  if (sub_it == values.end()) throw ConfigError("subcommand", "missing");
  RunConfig c;
  c.subcommand = parse_subcommand(sub_it->second);
  ConfigMap merged = default_config(c.subcommand);
  for (const auto& [key, value] : values) {
    if (!merged.contains(key)) throw ConfigError(key, "unknown key");
    merged[key] = value;
  }
  c.echo = merged;
  auto get = [&merged](const std::string& k) -> const std::string& { return merged.at(k); };

  for (const std::string& tok : split(get("d"), ',')) {
    const std::size_t d = parse_count("d", tok);
    if (d < 1) throw ConfigError("d", "dimensions must be >= 1");
    c.d_list.push_back(d);
  }
  if (get("k-rule") != "half") c.k_fixed = parse_count("k-rule", get("k-rule"));

  const std::string& n_rule = get("n-rule");
  if (!n_rule.empty() && n_rule.back() == 'x') {
    c.n_multiplier = parse_real("n-rule", n_rule.substr(0, n_rule.size() - 1));
    if (!(c.n_multiplier > 0.0)) throw ConfigError("n-rule", "multiplier must be > 0");
  } else {
    c.n_absolute = parse_count("n-rule", n_rule);
  }

  c.train.eps = parse_real("eps", get("eps"));
  c.train.eta_const = parse_real("eta-const", get("eta-const"));
  c.train.eta_rule = with_field("eta-rule", [&] { return parse_eta_rule(get("eta-rule")); });
  c.train.decode_mode = with_field("decode", [&] { return parse_decode_mode(get("decode")); });
  if (!(c.train.eps > 0.0)) throw ConfigError("eps", "must be > 0");
  if (!(c.train.eta_const > 0.0)) throw ConfigError("eta-const", "must be > 0");

  c.mode = with_field("mode", [&] { return parse_mode(get("mode")); });
  for (const std::string& tok : split(get("p"), ',')) c.noise_p.push_back(parse_real("p", tok));

  if (!get("seed-list").empty()) {
    for (const std::string& tok : split(get("seed-list"), ',')) {
      c.seeds.push_back(parse_count("seed-list", tok));
    }
  } else {
    const std::uint64_t count = parse_count("seeds", get("seeds"));
    if (count == 0) throw ConfigError("seeds", "must be >= 1");
    for (std::uint64_t s = 0; s < count; ++s) c.seeds.push_back(s);
  }
  c.master_seed = parse_count("master-seed", get("master-seed"));

  if (get("oracle") != "exact") {
    c.rho = parse_real("oracle", get("oracle"));
    if (*c.rho < 0.0) throw ConfigError("oracle", "rho must be >= 0");
  }
  c.output_dir = get("output-dir");
  if (c.output_dir.empty()) throw ConfigError("output-dir", "must not be empty");
  c.trials = parse_count("trials", get("trials"));
  c.subsets = parse_count("subsets", get("subsets"));
  c.steps = parse_count("steps", get("steps"));
  c.lr = parse_real("lr", get("lr"));
  c.t = parse_count("t", get("t"));
  c.h = parse_real("h", get("h"));
  c.fail_prob = parse_real("fail-prob", get("fail-prob"));
  c.jobs = parse_count("jobs", get("jobs"));
  if (c.jobs == 0) throw ConfigError("jobs", "must be >= 1");

  // Preconditions of the modules each subcommand drives, checked per d.
  for (std::size_t d : c.d_list) {
    const std::size_t n = c.n_for(d);
    if (n == 0) throw ConfigError("n-rule", "gives n = 0 at d = " + std::to_string(d));
    switch (c.subcommand) {
      case Subcommand::TeacherForced:
      case Subcommand::Noisy:
      case Subcommand::Majority:
        with_field("k-rule", [&] { return make_task(d, c.k_for(d), Mode::And, 0.0, 0); });
        for (double p : c.noise_p) {
          with_field("p", [&] { return make_task(d, c.k_for(d), c.mode, p, 0); });
        }
        if (c.subcommand == Subcommand::Majority && c.mode != Mode::Majority) {
          throw ConfigError("mode", "majority runs need mode MAJORITY");
        }
        if (c.subcommand != Subcommand::Majority && c.mode == Mode::Majority) {
          throw ConfigError("mode", "use the majority subcommand for MAJORITY");
        }
        break;
      case Subcommand::Hardness:
        with_field("k-rule", [&] { return hardness_floor(d, c.k_for(d)); });
        if (c.k_for(d) % 2 != 0) throw ConfigError("k-rule", "k must be even");
        if (c.trials == 0) throw ConfigError("trials", "must be >= 1");
        if (c.subsets == 0) throw ConfigError("subsets", "must be >= 1");
        if (!(c.lr >= 0.0)) throw ConfigError("lr", "must be >= 0");
        break;
      case Subcommand::Concentration:
        with_field("fail-prob", [&] { return kappa(d, c.fail_prob, n); });
        with_field("k-rule", [&] { return make_task(d, c.k_for(d), Mode::Majority, 0.0, 0); });
        break;
      case Subcommand::Gradcheck:
        if (c.t == 0) throw ConfigError("t", "must be >= 1");
        if (c.trials == 0) throw ConfigError("trials", "must be >= 1");
        if (!(c.h > 0.0)) throw ConfigError("h", "must be > 0");
        break;
    }
  }
  return c;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["tool"] = "boolattn";
  j["version"] = version;
  j["config"] = config;
  j["result_files"] = result_files;
  j["experiments"] = nlohmann::json::array();
  for (const auto& t : timings) j["experiments"].push_back({{"label", t.label}, {"wall_ms", t.wall_ms}});
  j["summary"] = nlohmann::json::array();
  for (const auto& s : summaries) j["summary"].push_back(s.to_json());
  return j;
}

RunManifest run(const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(config.output_dir, ec);
  if (ec || !fs::is_directory(config.output_dir)) {
    throw std::runtime_error("cannot create output directory " + config.output_dir.string());
  }

  const std::vector<Experiment> exps = enumerate(config);
  std::vector<std::vector<std::string>> rows(exps.size());
  std::vector<double> wall(exps.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= exps.size() || failed.load()) return;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        rows[i] = run_one(config, exps[i]);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
      wall[i] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    }
  };
  const std::size_t n_threads = std::min<std::size_t>(config.jobs, std::max<std::size_t>(exps.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);

  RunManifest manifest;
  manifest.config = config.echo;
  manifest.version = std::string(kToolVersion);
  const auto outputs = outputs_for(config.subcommand);
  for (std::size_t o = 0; o < outputs.size(); ++o) {
    std::string body = outputs[o].second + '\n';
    for (const auto& r : rows) body += r.at(o) + '\n';
    const fs::path path = config.output_dir / outputs[o].first;
    write_file_atomic(path, body);
    manifest.result_files.push_back(path.string());
    manifest.summaries.push_back(summarize(path));
  }
  for (std::size_t i = 0; i < exps.size(); ++i) {
    std::string label = "d=" + std::to_string(exps[i].d);
    if (config.subcommand == Subcommand::Noisy) label += ",p=" + format_double(exps[i].p);
    label += (config.subcommand == Subcommand::Gradcheck ? ",trial=" : ",seed=") +
             std::to_string(exps[i].index);
    manifest.timings.push_back({label, wall[i]});
  }
  write_file_atomic(config.output_dir / "manifest.json", manifest.to_json().dump(2) + '\n');
  return manifest;
}

RunManifest replay(const fs::path& manifest_path, std::optional<fs::path> output_dir) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest_path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  ConfigMap values = j.at("config").get<ConfigMap>();
  if (output_dir) values["output-dir"] = output_dir->string();
  return run(parse_run_config(values));
}

std::vector<std::string> assert_thresholds(const RunConfig& config, const RunManifest& manifest) {
  std::vector<std::string> failures;
  auto need = [&failures](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  for (const Summary& s : manifest.summaries) {
    for (const SummaryGroup& g : s.groups) {
      const std::string where = s.source + " [" + g.key + "]";
      switch (config.subcommand) {
        case Subcommand::TeacherForced:
        case Subcommand::Majority:
          need(g.frequency.value_or(0.0) >= 0.95, where + ": exact recovery below 0.95");
          break;
        case Subcommand::Noisy:
          need(g.frequency.value_or(0.0) >= 0.90, where + ": exact recovery below 0.90");
          break;
        case Subcommand::Hardness:
          need(g.metrics.at("frac_all_zero").min >= 0.98, where + ": all-zero fraction below 0.98");
          need(g.metrics.at("estimator_loss").min >= 0.45, where + ": support loss below 0.45");
          break;
        case Subcommand::Concentration:
          need(g.frequency.value_or(0.0) >= 0.99, where + ": pass rate below 0.99");
          break;
        case Subcommand::Gradcheck:
          need(g.metrics.at("max_rel_error").max <= 1e-6, where + ": relative error above 1e-6");
          break;
      }
    }
    if (config.subcommand == Subcommand::TeacherForced) {
      for (std::size_t i = 1; i < s.groups.size(); ++i) {
        need(s.groups[i].metrics.at("inf_error").median < s.groups[i - 1].metrics.at("inf_error").median,
             s.source + ": median inf_error not strictly decreasing at " + s.groups[i].key);
      }
    }
  }
  return failures;
}

}  // namespace boolattn::experiments
