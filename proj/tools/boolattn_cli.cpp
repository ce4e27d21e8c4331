// Command-line front end for the experiments.
//
// Exit codes: 0 success, 1 an --assert threshold failed, 2 bad usage or
// configuration, 3 runtime or I/O failure.

#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "boolattn/experiments.hpp"
#include "boolattn/format.hpp"
#include "boolattn/taskgen.hpp"
#include "boolattn/trainer.hpp"

namespace ex = boolattn::experiments;

namespace {

constexpr int kExitAssert = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunCommand {
  ex::Subcommand sub;
  CLI::App* app = nullptr;
  std::string config_path;
  bool assert_thresholds = false;
  std::map<std::string, std::string> flags;  // only flags the user actually passed
};

const std::vector<std::pair<std::string, std::string>> kRunFlags = {
    {"d", "comma-separated input dimensions"},
    {"k-rule", "'half' for k = d/2, or a fixed k"},
    {"n-rule", "sample count: '<m>x' for m*d, or an absolute n"},
    {"eps", "exponent parameter epsilon"},
    {"eta-const", "learning-rate constant"},
    {"eta-rule", "theorem | linear"},
    {"mode", "AND | OR | NOISY_AND | NOISY_OR | MAJORITY"},
    {"p", "comma-separated noise levels"},
    {"seeds", "number of seeds per configuration"},
    {"seed-list", "explicit comma-separated seed indices (overrides --seeds)"},
    {"master-seed", "master seed"},
    {"oracle", "'exact' or a perturbation bound rho"},
    {"decode", "GAP_SPLIT | PAPER_THRESHOLD"},
    {"output-dir", "directory for CSVs and manifest.json"},
    {"trials", "trials (hardness) or random instances (gradcheck)"},
    {"subsets", "Monte-Carlo subsets for the support loss"},
    {"steps", "end-to-end gradient steps"},
    {"lr", "end-to-end learning rate"},
    {"t", "teacher columns for gradcheck"},
    {"h", "finite-difference step"},
    {"fail-prob", "concentration failure probability"},
    {"jobs", "worker threads"},
};

int execute(const RunCommand& cmd) {
  ex::ConfigMap values;
  if (!cmd.config_path.empty()) values = ex::read_config_file(cmd.config_path);
  values["subcommand"] = std::string(ex::to_string(cmd.sub));
  if (const char* env = std::getenv(std::string(ex::kOutputDirEnv).c_str()); env && *env) {
    values["output-dir"] = env;
  }
  for (const auto& [k, v] : cmd.flags) values[k] = v;
  const ex::RunConfig config = ex::parse_run_config(values);
  const ex::RunManifest manifest = ex::run(config);
  for (const ex::Summary& s : manifest.summaries) std::cout << s.to_text();
  std::cout << "manifest: " << (config.output_dir / "manifest.json").string() << '\n';
  if (cmd.assert_thresholds) {
    const auto failures = ex::assert_thresholds(config, manifest);
    for (const auto& f : failures) std::cerr << "threshold: " << f << '\n';
    if (!failures.empty()) return kExitAssert;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-step attention learner for sparse Boolean functions"};
  app.set_version_flag("--version", std::string(ex::kToolVersion));
  app.require_subcommand(1);

  std::vector<std::unique_ptr<RunCommand>> runs;
  for (ex::Subcommand sub : {ex::Subcommand::TeacherForced, ex::Subcommand::Noisy,
                             ex::Subcommand::Majority, ex::Subcommand::Hardness,
                             ex::Subcommand::Concentration, ex::Subcommand::Gradcheck}) {
    auto cmd = std::make_unique<RunCommand>();
    cmd->sub = sub;
    cmd->app = app.add_subcommand(std::string(ex::to_string(sub)), "run the " +
                                                                        std::string(ex::to_string(sub)) +
                                                                        " sweep");
    cmd->app->set_help_flag("--help", "print this help message and exit");
    cmd->app->add_option("--config", cmd->config_path, "key = value config file")->check(CLI::ExistingFile);
    cmd->app->add_flag("--assert", cmd->assert_thresholds, "exit 1 when a threshold fails");
    for (const auto& [name, help] : kRunFlags) {
      RunCommand* raw = cmd.get();
      const std::string key = name;
      cmd->app->add_option_function<std::string>(
          "--" + name, [raw, key](const std::string& v) { raw->flags[key] = v; }, help);
    }
    RunCommand* raw = cmd.get();
    cmd->app->add_option_function<std::string>(
        "--n", [raw](const std::string& v) { raw->flags["n-rule"] = v; }, "absolute sample count");
    runs.push_back(std::move(cmd));
  }

  auto* summarize_cmd = app.add_subcommand("summarize", "per-d quantiles of a result CSV");
  std::string summarize_path;
  bool summarize_json = false;
  summarize_cmd->add_option("csv", summarize_path, "result CSV")->required();
  summarize_cmd->add_flag("--json", summarize_json, "emit JSON");

  auto* replay_cmd = app.add_subcommand("replay", "re-run the config stored in a manifest");
  std::string replay_path;
  std::string replay_out;
  replay_cmd->add_option("manifest", replay_path, "manifest.json")->required()->check(CLI::ExistingFile);
  replay_cmd->add_option("--output-dir", replay_out, "write results here instead");

  auto* sample_cmd = app.add_subcommand("sample", "write one batch in the text batch format");
  std::size_t s_d = 16, s_k = 4, s_n = 64;
  std::uint64_t s_seed = 0;
  std::string s_mode = "AND", s_out;
  double s_p = 0.0;
  sample_cmd->add_option("--d", s_d)->capture_default_str();
  sample_cmd->add_option("--k", s_k)->capture_default_str();
  sample_cmd->add_option("--n", s_n)->capture_default_str();
  sample_cmd->add_option("--mode", s_mode)->capture_default_str();
  sample_cmd->add_option("--p", s_p)->capture_default_str();
  sample_cmd->add_option("--seed", s_seed)->capture_default_str();
  sample_cmd->add_option("--out", s_out, "output path (stdout if omitted)");

  auto* fit_cmd = app.add_subcommand("fit", "one teacher-forced step on a batch file");
  std::string f_batch;
  boolattn::TrainConfig f_train;
  std::string f_decode = "GAP_SPLIT", f_rule;
  fit_cmd->add_option("--batch", f_batch, "batch file")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--eps", f_train.eps)->capture_default_str();
  fit_cmd->add_option("--eta-const", f_train.eta_const)->capture_default_str();
  fit_cmd->add_option("--eta-rule", f_rule, "theorem | linear (default: linear for MAJORITY)");
  fit_cmd->add_option("--decode", f_decode)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    for (const auto& cmd : runs) {
      if (cmd->app->parsed()) return execute(*cmd);
    }
    if (summarize_cmd->parsed()) {
      const ex::Summary s = ex::summarize(summarize_path);
      std::cout << (summarize_json ? s.to_json().dump(2) + "\n" : s.to_text());
      return 0;
    }
    if (replay_cmd->parsed()) {
      const auto m = ex::replay(replay_path, replay_out.empty() ? std::nullopt
                                                                : std::optional<std::filesystem::path>(replay_out));
      for (const ex::Summary& s : m.summaries) std::cout << s.to_text();
      return 0;
    }
    if (sample_cmd->parsed()) {
      const auto task = boolattn::make_task(s_d, s_k, boolattn::parse_mode(s_mode), s_p, s_seed);
      const auto batch = boolattn::sample_batch(task, s_n, s_seed);
      if (s_out.empty()) {
        boolattn::write_batch(std::cout, batch);
      } else {
        std::ofstream out(s_out);
        if (!out) throw std::runtime_error("cannot write " + s_out);
        boolattn::write_batch(out, batch);
      }
      return 0;
    }
    if (fit_cmd->parsed()) {
      std::ifstream in(f_batch);
      const boolattn::Batch batch = boolattn::read_batch(in);
      f_train.decode_mode = boolattn::parse_decode_mode(f_decode);
      const bool majority = batch.task.mode == boolattn::Mode::Majority;
      if (!f_rule.empty()) {
        f_train.eta_rule = boolattn::parse_eta_rule(f_rule);
      } else if (majority) {
        f_train.eta_rule = boolattn::EtaRule::Linear;
        if (fit_cmd->count("--eta-const") == 0) f_train.eta_const = 1.0;
      }
      const auto oracle = boolattn::GradientOracleSpec::exact();
      const auto r = majority ? boolattn::run_majority(batch, f_train, oracle, batch.task.seed)
                              : boolattn::run_teacher_forced(batch, f_train, oracle, batch.task.seed);
      std::cout << boolattn::recovery_csv_header() << '\n' << boolattn::to_csv_row(r) << '\n';
      return 0;
    }
  } catch (const ex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ex::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitConfig;
}
