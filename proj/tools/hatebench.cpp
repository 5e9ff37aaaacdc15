#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "hatebench/commands.hpp"

namespace hb = hatebench;

namespace {

std::optional<hb::CorpusFormat> parse_format(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "jsonl") return hb::CorpusFormat::jsonl;
  if (s == "csv") return hb::CorpusFormat::csv;
  throw hb::ConfigError("--format must be jsonl or csv");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hatebench: embedding + detector benchmark for hate speech corpora"};
  app.require_subcommand(1);

  std::string config_path;
  std::size_t jobs = 0;
  std::string out_dir;
  std::uint64_t seed = 0;

  auto* preprocess = app.add_subcommand("preprocess", "normalize a corpus and write it as JSONL");
  std::string pre_in, pre_out, pre_format, pre_report;
  preprocess->add_option("input", pre_in, "corpus (.jsonl or .csv)")->required();
  preprocess->add_option("output", pre_out, "normalized corpus (.jsonl)")->required();
  preprocess->add_option("--format", pre_format, "input format, default from extension");
  preprocess->add_option("--report", pre_report, "report path, default <output>.report.json");

  auto* check = app.add_subcommand("check", "validate a config and embedding checksums");
  check->add_option("--config", config_path, "run config (JSON)")->required();

  auto* bench = app.add_subcommand("benchmark", "run every embedding x model x compression cell");
  bench->add_option("--config", config_path, "run config (JSON)")->required();
  auto* jobs_opt = bench->add_option("--jobs", jobs, "worker threads, default available parallelism");
  auto* out_opt = bench->add_option("--out", out_dir, "output directory (overrides config)");
  auto* seed_opt = bench->add_option("--seed", seed, "seed (overrides config)");

  auto* report = app.add_subcommand("report", "re-render tables and curves from stored reports");
  std::string report_dir;
  report->add_option("--out", report_dir, "benchmark output directory")->required();

  auto* fit = app.add_subcommand("fit", "train one detector on the whole corpus");
  std::string fit_embedding, fit_model = "2c", fit_compression = "orig";
  fit->add_option("--config", config_path, "run config (JSON)")->required();
  fit->add_option("--embedding", fit_embedding, "embedding name from the config")->required();
  fit->add_option("--model", fit_model, "1c or 2c")->check(CLI::IsMember({"1c", "2c"}));
  fit->add_option("--compression", fit_compression, "orig or pca")->check(CLI::IsMember({"orig", "pca"}));
  fit->add_option("--out", out_dir, "bundle directory")->required();
  auto* fit_seed_opt = fit->add_option("--seed", seed, "seed (overrides config)");

  auto* score = app.add_subcommand("score", "apply a fitted bundle to an embedding file");
  std::string bundle_dir, score_emb, score_out;
  score->add_option("--model", bundle_dir, "bundle directory written by fit")->required();
  score->add_option("--embeddings", score_emb, "EMB1 file")->required();
  score->add_option("--out", score_out, "scores CSV")->required();

  CLI11_PARSE(app, argc, argv);

  if (*preprocess) {
    return hb::detail::guarded(std::cerr, [&] {
      std::optional<std::filesystem::path> rp;
      if (!pre_report.empty()) rp = pre_report;
      return hb::cmd_preprocess(pre_in, pre_out, parse_format(pre_format), rp);
    });
  }
  if (*report) return hb::cmd_report(report_dir);
  if (*score) return hb::cmd_score(bundle_dir, score_emb, score_out);

  return hb::detail::guarded(std::cerr, [&] {
    auto config = hb::load_run_config(config_path);
    if (*check) return hb::cmd_check(config);
    if (*bench) {
      hb::BenchmarkOptions opts;
      if (*jobs_opt) opts.jobs = jobs;
      if (*out_opt) opts.out_dir = out_dir;
      if (*seed_opt) opts.seed = seed;
      return hb::cmd_benchmark(std::move(config), opts);
    }
    if (*fit_seed_opt) config.seed = seed;
    hb::FitOptions opts;
    opts.embedding = fit_embedding;
    opts.kind = hb::model_kind_from_string(fit_model);
    opts.compressed = fit_compression == "pca";
    opts.out_dir = out_dir;
    return hb::cmd_fit(config, opts);
  });
}
