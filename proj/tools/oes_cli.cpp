// Command-line driver over the oes C API.

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oes/oes.h"

namespace {

// Exit codes: 0 ok, 1 usage and everything else, 2 corrupt data,
// 3 unreachable tuning target.
int exit_code(oes_status s) {
  switch (s) {
    case OES_OK: return 0;
    case OES_ERR_CORRUPT: return 2;
    case OES_ERR_UNREACHABLE: return 3;
    default: return 1;
  }
}

int report_failure(oes_status s) {
  std::fprintf(stderr, "error: %s\n", oes_last_error());
  return exit_code(s);
}

struct ConfigDeleter {
  void operator()(oes_config* c) const { oes_config_free(c); }
};
struct ReportDeleter {
  void operator()(oes_report* r) const { oes_report_free(r); }
};
using ConfigPtr = std::unique_ptr<oes_config, ConfigDeleter>;
using ReportPtr = std::unique_ptr<oes_report, ReportDeleter>;

std::string take(char* s) {
  std::string out = s ? s : "";
  oes_string_free(s);
  return out;
}

// Loads --config (or defaults) and applies --set key=value overrides.
oes_status load_config(const std::string& path, const std::vector<std::string>& sets,
                       ConfigPtr& out) {
  oes_config* raw = nullptr;
  oes_status s = path.empty() ? oes_config_new(&raw) : oes_config_load(path.c_str(), &raw);
  if (s != OES_OK) return s;
  out.reset(raw);
  for (const std::string& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return OES_ERR_USAGE;
    }
    auto trim = [](std::string v) {
      const auto b = v.find_first_not_of(" \t");
      const auto e = v.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    s = oes_config_set(out.get(), trim(kv.substr(0, eq)).c_str(),
                       trim(kv.substr(eq + 1)).c_str());
    if (s != OES_OK) return s;
  }
  return oes_config_validate(out.get());
}

std::string config_help() {
  return "key = value run configuration (see README); defaults when omitted";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online event selection for three-electron decay searches on toy "
               "pixel-tracker data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(oes_version()));

  std::string config_path;
  std::vector<std::string> sets;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, config_help())->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "override one config key, e.g. gen.muon_rate=1e9");
  };

  // gen
  auto* gen = app.add_subcommand("gen", "generate toy frames and their truth");
  add_config(gen);
  std::uint64_t frames = 0;
  std::string out_path, truth_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> capacity;
  gen->add_option("--frames", frames, "number of frames")->required();
  gen->add_option("--out", out_path, "chunk file to write")->required();
  gen->add_option("--truth", truth_path, "truth sidecar to write")->required();
  gen->add_option("--seed", seed, "random seed (overrides gen.seed)");
  gen->add_option("--capacity", capacity,
                  "chunk size in bytes (overrides pipeline.chunk_capacity)");

  // tune
  auto* tune = app.add_subcommand("tune", "scan thresholds on truth-labelled data");
  add_config(tune);
  std::string in_path, tuned_path;
  double retention = 0.985;
  double track_retention = -1.0;
  double signal_retention = 0.94;
  tune->add_option("--in", in_path, "chunk file")->required()->check(CLI::ExistingFile);
  tune->add_option("--truth", truth_path, "truth sidecar")->required()->check(
      CLI::ExistingFile);
  tune->add_option("--retention", retention, "true-triplet retention of the cuts")
      ->capture_default_str();
  tune->add_option("--track-retention", track_retention,
                   "truth-matched track retention of the fit chi2 (default: keep "
                   "fit.chi2_max)");
  tune->add_option("--signal-retention", signal_retention,
                   "signal-frame retention of the vertex chi2")
      ->capture_default_str();
  tune->add_option("--out", tuned_path, "write the tuned config here (default stdout)");

  // run
  auto* run = app.add_subcommand("run", "filter a chunk file");
  add_config(run);
  std::string report_path;
  std::optional<std::size_t> workers;
  run->add_option("--in", in_path, "chunk file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_path, "kept-frame chunk file");
  run->add_option("--report", report_path, "JSON-lines report");
  run->add_option("--truth", truth_path, "truth sidecar for efficiency figures")
      ->check(CLI::ExistingFile);
  run->add_option("--workers", workers, "worker threads (overrides pipeline.worker_count)");

  // bench
  auto* bench = app.add_subcommand("bench", "measure filter throughput");
  add_config(bench);
  std::vector<std::size_t> worker_list{1, 2, 4, 8};
  std::size_t repeat = 3;
  bench->add_option("--in", in_path, "chunk file")->required()->check(CLI::ExistingFile);
  bench->add_option("--workers", worker_list, "worker counts to compare")
      ->delimiter(',')
      ->capture_default_str();
  bench->add_option("--repeat", repeat, "runs per worker count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // inspect
  auto* inspect = app.add_subcommand("inspect", "explain the decision for one frame");
  add_config(inspect);
  std::uint64_t frame_id = 0;
  inspect->add_option("--in", in_path, "chunk file")->required()->check(CLI::ExistingFile);
  inspect->add_option("--frame", frame_id, "frame id")->required();
  inspect->add_option("--truth", truth_path, "truth sidecar")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  ConfigPtr config;
  if (oes_status s = load_config(config_path, sets, config); s != OES_OK)
    return report_failure(s);

  if (gen->parsed()) {
    if (seed) oes_config_set(config.get(), "gen.seed", std::to_string(*seed).c_str());
    if (capacity) {
      oes_config_set(config.get(), "pipeline.chunk_capacity",
                     std::to_string(*capacity).c_str());
    }
    if (oes_status s = oes_config_validate(config.get()); s != OES_OK)
      return report_failure(s);
    if (oes_status s = oes_generate(config.get(), frames, out_path.c_str(),
                                    truth_path.c_str());
        s != OES_OK) {
      return report_failure(s);
    }
    std::printf("wrote %llu frames to %s\n", static_cast<unsigned long long>(frames),
                out_path.c_str());
    return 0;
  }

  if (tune->parsed()) {
    oes_config* raw = nullptr;
    char* summary = nullptr;
    const oes_status s =
        oes_tune(config.get(), in_path.c_str(), truth_path.c_str(), retention,
                 track_retention, signal_retention, &raw, &summary);
    ConfigPtr tuned(raw);
    if (summary) std::fputs(take(summary).c_str(), stderr);
    if (s != OES_OK && s != OES_ERR_UNREACHABLE) return report_failure(s);
    if (tuned) {
      if (tuned_path.empty()) {
        char* text = nullptr;
        oes_config_to_string(tuned.get(), &text);
        std::fputs(take(text).c_str(), stdout);
      } else if (oes_status w = oes_config_save(tuned.get(), tuned_path.c_str());
                 w != OES_OK) {
        return report_failure(w);
      }
    }
    if (s == OES_ERR_UNREACHABLE) {
      std::fprintf(stderr, "error: %s\n", oes_last_error());
      return exit_code(s);
    }
    return 0;
  }

  if (run->parsed()) {
    if (workers) {
      oes_config_set(config.get(), "pipeline.worker_count",
                     std::to_string(*workers).c_str());
      if (oes_status s = oes_config_validate(config.get()); s != OES_OK)
        return report_failure(s);
    }
    oes_report* raw = nullptr;
    const oes_status s =
        oes_run(config.get(), in_path.c_str(), out_path.empty() ? nullptr : out_path.c_str(),
                truth_path.empty() ? nullptr : truth_path.c_str(), &raw);
    if (s != OES_OK) return report_failure(s);
    ReportPtr report(raw);
    if (!report_path.empty()) {
      if (oes_status w = oes_report_write(report.get(), config.get(), report_path.c_str());
          w != OES_OK) {
        return report_failure(w);
      }
    }
    char* table = nullptr;
    oes_report_summary(report.get(), &table);
    std::fputs(take(table).c_str(), stdout);
    return 0;
  }

  if (bench->parsed()) {
    char* table = nullptr;
    const oes_status s = oes_bench(config.get(), in_path.c_str(), worker_list.data(),
                                   worker_list.size(), repeat, nullptr, &table);
    if (s != OES_OK) return report_failure(s);
    std::fputs(take(table).c_str(), stdout);
    return 0;
  }

  if (inspect->parsed()) {
    char* text = nullptr;
    const oes_status s =
        oes_inspect(config.get(), in_path.c_str(),
                    truth_path.empty() ? nullptr : truth_path.c_str(), frame_id, &text);
    if (s != OES_OK) return report_failure(s);
    std::fputs(take(text).c_str(), stdout);
    return 0;
  }
  return 1;
}
