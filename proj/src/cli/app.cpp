#include "chartloom/cli/app.hpp"

#include <functional>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "chartloom/cli/config.hpp"
#include "chartloom/eval/eval.hpp"
#include "chartloom/util/strings.hpp"

namespace fs = std::filesystem;

namespace chartloom::cli {

namespace {

// Maps the error hierarchy onto the documented exit codes. `phase` is the
// code for errors that are neither usage nor gateway problems.
int guarded(int phase, const std::function<void()>& body) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const gateway::GatewayError& e) {
    spdlog::error("gateway: {}", e.what());
    return kExitGateway;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return phase;
  }
}

void require_dir(const fs::path& dir, const char* what) {
  if (!fs::is_directory(dir)) throw ConfigError(std::string(what) + " not found: " + dir.string());
}

ingest::Dataset load_dataset_or_usage(const fs::path& dir) {
  try {
    return ingest::load_dataset(dir);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
}

struct GenerateOutcome {
  int code = kExitOk;
  std::string summary;
};

GenerateOutcome generate_one(const RunConfig& config, const fs::path& data_dir, const fs::path& out_dir) {
  GenerateOutcome outcome;
  outcome.code = guarded(kExitGeneration, [&] {
    auto dataset = load_dataset_or_usage(data_dir);
    ingest::validate_dataset(dataset);
    auto gw = make_gateway(config);
    auto renderer = make_renderer(config);
    fs::create_directories(out_dir);
    auto doc = writer::run(dataset, writer_config(config, out_dir), *gw, *renderer);
    doc.config_snapshot = config.snapshot;
    writer::render_markdown(doc, out_dir);
    outcome.summary = dataset.source_id + ": figures=" + std::to_string(doc.figure_count()) +
                      " steps=" + std::to_string(doc.steps) + " termination=" + doc.termination +
                      " api_calls=" + std::to_string(doc.api_calls) +
                      " model_latency_ms=" + util::format_fixed2(doc.total_latency_ms) +
                      " wall_clock_s=" + util::format_fixed2(doc.wall_clock_s) + " out=" + out_dir.string();
  });
  return outcome;
}

std::string instance_id_for(const std::vector<eval::ReportBundle>& bundles, std::size_t index) {
  const auto meta = bundles.front().dir / "run_meta.json";
  if (fs::is_regular_file(meta)) {
    try {
      auto j = nlohmann::json::parse(util::read_file(meta.string()));
      auto id = j.value("source_id", std::string{});
      if (!id.empty()) return id;
    } catch (const nlohmann::json::exception&) {
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "instance_%03zu", index + 1);
  return buf;
}

std::vector<eval::ReportBundle> parse_bundles(const std::string& spec) {
  std::vector<eval::ReportBundle> bundles;
  for (const auto& item : util::split(spec, ',')) {
    auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == item.size()) {
      throw ConfigError("--reports expects METHOD=DIR[,METHOD=DIR...], got '" + item + "'");
    }
    eval::ReportBundle b{std::string(util::trim(item.substr(0, eq))), fs::path(std::string(util::trim(item.substr(eq + 1))))};
    require_dir(b.dir, "report directory");
    if (!fs::is_regular_file(b.dir / "report.md")) throw ConfigError("no report.md in " + b.dir.string());
    bundles.push_back(std::move(b));
  }
  return bundles;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"chartloom: text-chart interleaved data reports"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")->capture_default_str();

  // overview
  auto* overview = app.add_subcommand("overview", "Profile a dataset and print its data overview");
  std::string ov_data, ov_config, ov_out = "overview.json";
  overview->add_option("--data", ov_data, "Dataset directory")->required();
  overview->add_option("--config", ov_config, "Run config (JSON)")->required();
  overview->add_option("--out", ov_out, "Where to write overview.json")->capture_default_str();

  // generate
  auto* generate = app.add_subcommand("generate", "Generate a report for each dataset");
  std::vector<std::string> gen_data;
  std::string gen_out, gen_config;
  int gen_parallel = 1;
  bool gen_keep = false;
  generate->add_option("--data", gen_data, "Dataset directory (repeatable)")->required();
  generate->add_option("--out", gen_out, "Output directory")->required();
  generate->add_option("--config", gen_config, "Run config (JSON)")->required();
  generate->add_option("--parallel", gen_parallel, "Concurrent runs")->check(CLI::PositiveNumber)->capture_default_str();
  generate->add_flag("--keep-candidates", gen_keep, "Also write every refinement candidate");

  // stats
  auto* stats = app.add_subcommand("stats", "Figure and word counts of generated reports");
  std::vector<std::string> st_reports;
  bool st_richness = false;
  std::string st_config, st_out;
  stats->add_option("--report", st_reports, "Report directory (repeatable)")->required();
  stats->add_flag("--richness", st_richness, "Also measure content richness (needs --config)");
  stats->add_option("--config", st_config, "Run config (JSON)");
  stats->add_option("--out", st_out, "Write stats.csv here");

  // judge
  auto* judge = app.add_subcommand("judge", "Rank reports from several methods with a vision judge");
  std::vector<std::string> jd_reports, jd_metrics;
  std::string jd_out = "ranks.json", jd_config;
  judge->add_option("--reports", jd_reports, "One instance: METHOD=DIR,METHOD=DIR,... (repeatable)")->required();
  judge->add_option("--metric", jd_metrics, "Metric id, or 'all' (repeatable)")->required();
  judge->add_option("--out", jd_out, "ranks.json path; rank_summary.csv goes next to it")->capture_default_str();
  judge->add_option("--config", jd_config, "Run config (JSON)")->required();

  // cost
  auto* cost = app.add_subcommand("cost", "Mean API calls and latency over runs");
  std::vector<std::string> cs_runs;
  cost->add_option("--runs", cs_runs, "run_meta.json files or run directories (repeatable)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto logger = spdlog::stderr_color_mt("chartloom-cli-" + std::to_string(reinterpret_cast<std::uintptr_t>(&app)));
  auto previous = spdlog::default_logger();
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));
  struct Restore {
    std::shared_ptr<spdlog::logger> prev;
    std::string name;
    ~Restore() {
      spdlog::set_default_logger(prev);
      spdlog::drop(name);
    }
  } restore{previous, logger->name()};

  if (*overview) {
    return guarded(kExitUsage, [&] {
      auto config = load_run_config(ov_config);
      require_dir(ov_data, "dataset directory");
      auto dataset = load_dataset_or_usage(ov_data);
      auto gw = make_gateway(config);
      agent::AgentConfig ac;
      ac.sample_rows = config.sample_rows;
      agent::AnalysisAgent agent(dataset, *gw, ac);
      const auto& ov = agent.build_overview();
      std::cout << ov.full_text << "\n\nprobe findings: " << ov.probe_findings.size() << "\n";
      if (!fs::path(ov_out).parent_path().empty()) fs::create_directories(fs::path(ov_out).parent_path());
      util::write_file(ov_out, agent::to_json(ov).dump(2) + "\n");
    });
  }

  if (*generate) {
    RunConfig config;
    int code = guarded(kExitGeneration, [&] {
      config = load_run_config(gen_config);
      if (gen_keep) config.keep_candidates = true;
    });
    if (code != kExitOk) return code;

    std::vector<std::pair<fs::path, fs::path>> jobs;  // data dir, out dir
    code = guarded(kExitUsage, [&] {
      std::set<std::string> names;
      for (const auto& d : gen_data) {
        require_dir(d, "dataset directory");
        fs::path out = gen_out;
        if (gen_data.size() > 1) {
          auto name = fs::path(d).lexically_normal().filename().string();
          if (name.empty()) name = fs::path(d).lexically_normal().parent_path().filename().string();
          if (!names.insert(name).second) throw ConfigError("two datasets share the directory name '" + name + "'");
          out /= name;
        }
        jobs.emplace_back(d, out);
      }
    });
    if (code != kExitOk) return code;

    std::vector<GenerateOutcome> outcomes(jobs.size());
    std::size_t next = 0;
    std::mutex mutex;
    auto worker = [&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(mutex);
          if (next >= jobs.size()) return;
          i = next++;
        }
        outcomes[i] = generate_one(config, jobs[i].first, jobs[i].second);
      }
    };
    std::vector<std::thread> threads;
    const auto n = std::min<std::size_t>(static_cast<std::size_t>(gen_parallel), jobs.size());
    for (std::size_t t = 1; t < n; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    int result = kExitOk;
    for (const auto& o : outcomes) {
      if (o.code == kExitOk) std::cout << o.summary << "\n";
      if (result == kExitOk) result = o.code;
    }
    return result;
  }

  if (*stats) {
    return guarded(kExitEvaluation, [&] {
      std::unique_ptr<gateway::Gateway> gw;
      if (st_richness) {
        if (st_config.empty()) throw ConfigError("--richness needs --config");
        gw = make_gateway(load_run_config(st_config));
      }
      std::vector<std::pair<std::string, eval::ReportStats>> rows;
      for (const auto& dir : st_reports) {
        require_dir(dir, "report directory");
        if (!fs::is_regular_file(fs::path(dir) / "report.md")) throw ConfigError("no report.md in " + dir);
      }
      for (const auto& dir : st_reports) {
        auto s = eval::report_stats(dir);
        if (gw) s.content_score = eval::content_richness(dir, *gw);
        rows.emplace_back(dir, s);
      }
      auto line = [](const eval::ReportStats& s) {
        return std::to_string(s.figure_count) + "," + std::to_string(s.word_count) +
               (s.content_score ? "," + std::to_string(*s.content_score) : "");
      };
      if (rows.size() == 1) {
        std::cout << line(rows.front().second) << "\n";
      } else {
        std::cout << "report_dir,figures,words" << (st_richness ? ",content" : "") << "\n";
        for (const auto& [dir, s] : rows) std::cout << dir << "," << line(s) << "\n";
      }
      if (!st_out.empty()) eval::write_stats_csv(rows, st_out);
    });
  }

  if (*judge) {
    return guarded(kExitEvaluation, [&] {
      std::vector<eval::MetricId> metrics;
      for (const auto& m : jd_metrics) {
        if (m == "all") {
          metrics = eval::all_metrics();
          break;
        }
        auto id = eval::parse_metric(m);
        if (!id) throw ConfigError("unknown metric '" + m + "'; valid ids: " + eval::metric_ids());
        metrics.push_back(*id);
      }
      auto config = load_run_config(jd_config);
      std::vector<std::vector<eval::ReportBundle>> instances;
      for (const auto& spec : jd_reports) instances.push_back(parse_bundles(spec));

      auto gw = make_gateway(config);
      std::vector<eval::RankingRecord> records;
      std::set<std::string> ids;
      for (std::size_t i = 0; i < instances.size(); ++i) {
        auto id = instance_id_for(instances[i], i);
        if (!ids.insert(id).second) {
          char buf[32];
          std::snprintf(buf, sizeof buf, "#%03zu", i + 1);
          id += buf;
          ids.insert(id);
        }
        for (const auto& metric : metrics) records.push_back(eval::judge_rank(id, instances[i], metric, *gw, config.seed));
      }
      const fs::path out(jd_out);
      if (!out.parent_path().empty()) fs::create_directories(out.parent_path());
      eval::write_ranks_json(records, out);
      auto rows = eval::summarize(records);
      eval::write_rank_summary_csv(rows, out.parent_path() / "rank_summary.csv");
      for (const auto& r : rows) std::cout << r.metric << "," << r.method << "," << util::format_number(r.mean_rank) << "\n";
    });
  }

  if (*cost) {
    return guarded(kExitEvaluation, [&] {
      std::vector<fs::path> paths;
      for (const auto& r : cs_runs) {
        fs::path p(r);
        if (fs::is_directory(p)) p /= "run_meta.json";
        if (!fs::is_regular_file(p)) throw ConfigError("missing " + p.string());
        paths.push_back(p);
      }
      auto s = eval::cost_summary(paths);
      std::cout << "runs=" << s.runs << " mean_api_calls=" << util::format_fixed2(s.mean_api_calls)
                << " mean_latency_s=" << util::format_fixed2(s.mean_latency_s) << "\n";
    });
  }
  return kExitUsage;
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  for (auto& a : copy) argv.push_back(a.data());
  argv.push_back(nullptr);
  return run_cli(static_cast<int>(copy.size()), argv.data());
}

}  // namespace chartloom::cli
