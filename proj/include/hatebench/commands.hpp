#pragma once

// Subcommands behind the hatebench CLI: preprocess, check, benchmark,
// report, fit, score. Each returns a process exit code.

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "hatebench/corpus.hpp"
#include "hatebench/cv.hpp"
#include "hatebench/embedstore.hpp"
#include "hatebench/error.hpp"
#include "hatebench/report.hpp"

namespace hatebench {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 2;
inline constexpr int partial_failure = 3;
inline constexpr int io = 4;
}  // namespace exit_code

inline constexpr int kRunConfigSchemaVersion = 1;

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct EmbeddingSource {
  std::string name;
  std::filesystem::path path;
};

struct RunConfig {
  std::filesystem::path corpus_path;
  CorpusFormat corpus_format = CorpusFormat::jsonl;
  std::string language;
  std::vector<EmbeddingSource> embeddings;
  std::vector<ModelKind> models{ModelKind::one_class_hbos, ModelKind::two_class_gbdt};
  std::vector<bool> compression{false, true};
  std::size_t pca_k = 64;
  std::size_t k_folds = 10;
  std::uint64_t seed = 0;
  HbosConfig hbos;
  GbdtConfig gbdt;
  std::filesystem::path output_dir = "results";

  CvConfig cv_config(ModelKind kind, bool compressed) const {
    CvConfig c;
    c.k_folds = k_folds;
    c.seed = seed;
    c.model_kind = kind;
    c.use_pca = compressed;
    c.pca_k = pca_k;
    c.hbos = hbos;
    c.gbdt = gbdt;
    return c;
  }
};

// Relative paths are resolved against the directory holding the config file.
inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  RunConfig c;
  auto resolve = [&](const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  try {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != kRunConfigSchemaVersion) {
      throw ConfigError("config schema_version must be " + std::to_string(kRunConfigSchemaVersion));
    }
    if (!j.contains("seed")) throw ConfigError("config needs an explicit \"seed\"");
    c.seed = j.at("seed").get<std::uint64_t>();

    const auto& corpus = j.at("corpus");
    c.corpus_path = resolve(corpus.at("path").get<std::string>());
    if (corpus.contains("format")) {
      const auto f = corpus.at("format").get<std::string>();
      if (f == "jsonl") c.corpus_format = CorpusFormat::jsonl;
      else if (f == "csv") c.corpus_format = CorpusFormat::csv;
      else throw ConfigError("corpus.format must be jsonl or csv");
    } else {
      c.corpus_format = format_from_path(c.corpus_path);
    }
    c.language = corpus.value("language", std::string{});

    for (const auto& e : j.at("embeddings")) {
      EmbeddingSource src{e.at("name").get<std::string>(), resolve(e.at("path").get<std::string>())};
      if (src.name.empty() || src.name.find_first_of("/\\ ") != std::string::npos) {
        throw ConfigError("embedding name \"" + src.name + "\" must be non-empty without spaces or slashes");
      }
      for (const auto& prev : c.embeddings) {
        if (prev.name == src.name) throw ConfigError("duplicate embedding name \"" + src.name + "\"");
      }
      c.embeddings.push_back(std::move(src));
    }
    if (c.embeddings.empty()) throw ConfigError("config lists no embeddings");

    if (j.contains("models")) {
      c.models.clear();
      for (const auto& m : j.at("models")) c.models.push_back(model_kind_from_string(m.get<std::string>()));
    }
    if (j.contains("compression")) {
      c.compression.clear();
      for (const auto& m : j.at("compression")) {
        const auto s = m.get<std::string>();
        if (s == "orig") c.compression.push_back(false);
        else if (s == "pca") c.compression.push_back(true);
        else throw ConfigError("compression entries must be \"orig\" or \"pca\"");
      }
    }
    if (c.models.empty() || c.compression.empty()) throw ConfigError("models and compression must be non-empty");
    c.pca_k = j.value("pca_k", c.pca_k);
    if (j.contains("cv")) c.k_folds = j.at("cv").value("k_folds", c.k_folds);
    if (j.contains("hbos")) {
      c.hbos.n_bins = j.at("hbos").value("n_bins", c.hbos.n_bins);
      c.hbos.contamination = j.at("hbos").value("contamination", c.hbos.contamination);
    }
    if (j.contains("gbdt")) c.gbdt = gbdt_config_from_json(j.at("gbdt"), c.gbdt);
    if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config invalid: ") + e.what());
  }
  if (c.k_folds < 2) throw ConfigError("cv.k_folds must be at least 2");
  if (c.pca_k < 1) throw ConfigError("pca_k must be at least 1");
  try {
    c.gbdt.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  if (c.hbos.n_bins < 1 || !(c.hbos.contamination > 0 && c.hbos.contamination <= 0.5)) {
    throw ConfigError("hbos.n_bins must be positive and hbos.contamination in (0, 0.5]");
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  auto config = parse_run_config(j, path.parent_path());
  if (!std::filesystem::exists(config.corpus_path)) {
    throw ConfigError("config references missing corpus " + config.corpus_path.string());
  }
  for (const auto& e : config.embeddings) {
    if (!std::filesystem::exists(e.path)) throw ConfigError("config references missing embeddings " + e.path.string());
  }
  return config;
}

namespace detail {

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::validation;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::validation;
  } catch (const EmbeddingFileError& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == EmbeddingFileError::Kind::io ? exit_code::io : exit_code::validation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::io;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::validation;
  }
}

inline LabeledCorpus load_config_corpus(const RunConfig& c) {
  if (!std::filesystem::exists(c.corpus_path)) throw IoError("corpus not found: " + c.corpus_path.string());
  return load_corpus(c.corpus_path, c.corpus_format, c.language);
}

inline std::string cell_dir_name(const CellKey& k) {
  return k.embedding + "__" + to_string(k.kind) + "__" + (k.compressed ? "pca" : "orig");
}

inline nlohmann::ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

}  // namespace detail

// Normalizes every text; writes the corpus as JSONL and the counts as JSON.
inline int cmd_preprocess(const std::filesystem::path& in, const std::filesystem::path& out,
                          std::optional<CorpusFormat> format, std::optional<std::filesystem::path> report_path,
                          std::ostream& log = std::cerr, NormalizationReport* report_out = nullptr) {
  return detail::guarded(log, [&] {
    if (!std::filesystem::exists(in)) throw IoError("corpus not found: " + in.string());
    const auto corpus = load_corpus(in, format.value_or(format_from_path(in)));
    NormalizationReport report;
    const auto normalized = normalize_corpus(corpus, &report);
    write_file_atomic(out, serialize_jsonl(normalized));
    auto rp = report_path.value_or(std::filesystem::path(out.string() + ".report.json"));
    write_file_atomic(rp, to_json(report).dump(2) + "\n");
    log << "normalized " << report.records << " records from " << in.string() << " -> " << out.string()
        << " (checksum " << checksum_hex(corpus_checksum(normalized)) << ")\n";
    if (report_out != nullptr) *report_out = report;
    return exit_code::ok;
  });
}

// Loads the corpus and verifies every embedding file against it.
inline int cmd_check(const RunConfig& config, std::ostream& log = std::cerr) {
  return detail::guarded(log, [&] {
    const auto corpus = detail::load_config_corpus(config);
    const auto expect = expectations_for(corpus);
    for (const auto& src : config.embeddings) {
      if (!std::filesystem::exists(src.path)) throw IoError("embedding file not found: " + src.path.string());
      const auto m = read_embeddings(src.path, expect);
      if (config.compression.end() != std::find(config.compression.begin(), config.compression.end(), true) &&
          config.pca_k > std::min(m.dim(), corpus.size() - 1)) {
        throw ConfigError("pca_k=" + std::to_string(config.pca_k) + " exceeds the dimension of " + src.name);
      }
      log << "ok " << src.name << ": " << m.count() << "x" << m.dim() << " model=" << m.model_name << '\n';
    }
    log << "corpus " << corpus.name << ": " << corpus.size() << " records, " << corpus.positives()
        << " positive, checksum " << checksum_hex(corpus_checksum(corpus)) << '\n';
    return exit_code::ok;
  });
}

inline void write_grid_tables(const BenchmarkGrid& grid, const std::filesystem::path& out_dir) {
  write_file_atomic(out_dir / "results.md", render_results_table(grid, TableFormat::markdown));
  write_file_atomic(out_dir / "results.csv", render_results_table(grid, TableFormat::csv));
}

struct BenchmarkOptions {
  std::size_t jobs = 0;  // 0 = hardware concurrency
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
};

// Runs every (embedding x model x compression) cell. Checksums are verified
// for all embedding files before any cell trains.
inline int cmd_benchmark(RunConfig config, const BenchmarkOptions& opts, std::ostream& log = std::cerr,
                         BenchmarkGrid* grid_out = nullptr) {
  return detail::guarded(log, [&] {
    if (opts.out_dir) config.output_dir = *opts.out_dir;
    if (opts.seed) config.seed = *opts.seed;
    const auto corpus = detail::load_config_corpus(config);
    const auto expect = expectations_for(corpus);
    std::map<std::string, Matrix> features;
    for (const auto& src : config.embeddings) {
      if (!std::filesystem::exists(src.path)) throw IoError("embedding file not found: " + src.path.string());
      features.emplace(src.name, read_embeddings(src.path, expect).as_double());
    }
    const Labels labels = corpus.labels();
    std::vector<std::string> ids;
    for (const auto& r : corpus.records) ids.push_back(r.id);

    std::vector<CellKey> keys;
    for (const auto& src : config.embeddings) {
      for (auto kind : config.models) {
        for (bool compressed : config.compression) keys.push_back({src.name, kind, compressed});
      }
    }

    std::vector<std::optional<EvaluationReport>> results(keys.size());
    std::vector<std::string> failures(keys.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < keys.size(); i = next.fetch_add(1)) {
        const auto& key = keys[i];
        const std::string name = detail::cell_dir_name(key);
        try {
          auto report = run_cv(features.at(key.embedding), labels, config.cv_config(key.kind, key.compressed));
          report.dataset = corpus.name;
          report.embedding = key.embedding;
          const auto dir = config.output_dir / "cells" / name;
          write_file_atomic(dir / "report.json", to_json(report).dump(1) + "\n");
          write_file_atomic(dir / "scores.csv", scores_csv(report, ids));
          emit_curves(report, dir, corpus.name + " " + to_string(key.kind) + " " + key.embedding +
                                       (key.compressed ? " PCA" : " original"));
          std::lock_guard lock(log_mutex);
          log << "cell " << name << ": accuracy " << format_percent(report.accuracy) << "% kappa "
              << format_metric(report.kappa) << " auc_roc " << format_metric(report.auc_roc) << " auc_prc "
              << format_metric(report.auc_prc) << '\n';
          results[i] = std::move(report);
        } catch (const std::exception& e) {
          std::lock_guard lock(log_mutex);
          log << "cell " << name << " failed: " << e.what() << '\n';
          failures[i] = e.what();
        }
      }
    };
    std::size_t jobs = opts.jobs == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opts.jobs;
    jobs = std::min(jobs, keys.size());
    {
      std::vector<std::jthread> pool;
      for (std::size_t t = 1; t < jobs; ++t) pool.emplace_back(worker);
      worker();
    }

    BenchmarkGrid grid;
    grid.dataset_name = corpus.name;
    nlohmann::ordered_json manifest;
    manifest["schema_version"] = kRunConfigSchemaVersion;
    manifest["dataset"] = corpus.name;
    manifest["corpus_checksum"] = checksum_hex(corpus_checksum(corpus));
    manifest["seed"] = config.seed;
    auto& cells = manifest["cells"] = nlohmann::ordered_json::array();
    auto& failed = manifest["failures"] = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < keys.size(); ++i) {
      const std::string name = detail::cell_dir_name(keys[i]);
      if (results[i]) {
        grid.add(keys[i], std::move(*results[i]));
        cells.push_back({{"embedding", keys[i].embedding},
                         {"model_kind", to_string(keys[i].kind)},
                         {"compression", keys[i].compressed ? "pca" : "orig"},
                         {"dir", "cells/" + name}});
      } else {
        failed.push_back({{"cell", name}, {"error", failures[i]}});
      }
    }
    write_file_atomic(config.output_dir / "manifest.json", manifest.dump(2) + "\n");
    if (!grid.cells.empty()) write_grid_tables(grid, config.output_dir);
    const bool any_failed = !failed.empty();
    if (grid_out != nullptr) *grid_out = std::move(grid);
    return any_failed ? exit_code::partial_failure : exit_code::ok;
  });
}

inline BenchmarkGrid load_grid(const std::filesystem::path& out_dir) {
  const auto manifest = detail::read_json_file(out_dir / "manifest.json");
  BenchmarkGrid grid;
  grid.dataset_name = manifest.at("dataset").get<std::string>();
  for (const auto& cell : manifest.at("cells")) {
    const auto report = report_from_json(detail::read_json_file(out_dir / cell.at("dir").get<std::string>() / "report.json"));
    grid.add({cell.at("embedding").get<std::string>(), model_kind_from_string(cell.at("model_kind").get<std::string>()),
              cell.at("compression").get<std::string>() == "pca"},
             report);
  }
  return grid;
}

// Re-renders the tables (and curves) from the stored per-cell reports.
inline int cmd_report(const std::filesystem::path& out_dir, std::ostream& log = std::cerr) {
  return detail::guarded(log, [&] {
    const BenchmarkGrid grid = load_grid(out_dir);
    for (const auto& [key, report] : grid.cells) {
      emit_curves(report, out_dir / "cells" / detail::cell_dir_name(key),
                  grid.dataset_name + " " + to_string(key.kind) + " " + key.embedding +
                      (key.compressed ? " PCA" : " original"));
    }
    write_grid_tables(grid, out_dir);
    log << render_results_table(grid, TableFormat::markdown);
    return exit_code::ok;
  });
}

// ---- single fitted models ------------------------------------------------

struct FitOptions {
  std::string embedding;
  ModelKind kind = ModelKind::two_class_gbdt;
  bool compressed = false;
  std::filesystem::path out_dir;
};

// Trains one detector on every row (no cross-validation) and stores it as a
// bundle directory: bundle.json, detector.json and, when compressed, pca.bin.
inline int cmd_fit(const RunConfig& config, const FitOptions& opts, std::ostream& log = std::cerr) {
  return detail::guarded(log, [&] {
    const auto corpus = detail::load_config_corpus(config);
    const auto it = std::find_if(config.embeddings.begin(), config.embeddings.end(),
                                 [&](const auto& e) { return e.name == opts.embedding; });
    if (it == config.embeddings.end()) throw ConfigError("no embedding named \"" + opts.embedding + "\" in config");
    const auto emb = read_embeddings(it->path, expectations_for(corpus));
    Matrix x = emb.as_double();
    const Labels y = corpus.labels();

    nlohmann::ordered_json bundle;
    bundle["schema_version"] = kRunConfigSchemaVersion;
    bundle["model_kind"] = to_string(opts.kind);
    bundle["compressed"] = opts.compressed;
    bundle["embedding_model"] = emb.model_name;
    bundle["dim"] = emb.dim();
    std::filesystem::create_directories(opts.out_dir);
    if (opts.compressed) {
      const PcaModel pca = pca_fit(x, config.pca_k);
      x = pca_transform(pca, x);
      write_file_atomic(opts.out_dir / "pca.bin", encode_pca(pca));
    }
    if (opts.kind == ModelKind::one_class_hbos) {
      std::vector<std::size_t> target;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == 1) target.push_back(i);
      }
      write_file_atomic(opts.out_dir / "detector.json", to_json(hbos_fit(select_rows(x, target), config.hbos)).dump(1) + "\n");
    } else {
      GbdtConfig gc = config.gbdt;
      gc.seed = derive_seed(config.seed, "gbdt-final");
      const auto model = gbdt_train(x, y, gc);
      log << "gbdt best iteration " << model.best_iteration << '\n';
      write_file_atomic(opts.out_dir / "detector.json", to_json(model).dump(1) + "\n");
    }
    write_file_atomic(opts.out_dir / "bundle.json", bundle.dump(2) + "\n");
    log << "wrote model bundle " << opts.out_dir.string() << '\n';
    return exit_code::ok;
  });
}

// Target-class scores for every row of an embedding file, as CSV "row,score".
inline std::vector<double> score_with_bundle(const std::filesystem::path& bundle_dir, const EmbeddingMatrix& emb) {
  const auto bundle = detail::read_json_file(bundle_dir / "bundle.json");
  const auto kind = model_kind_from_string(bundle.at("model_kind").get<std::string>());
  const bool compressed = bundle.at("compressed").get<bool>();
  const auto dim = bundle.at("dim").get<std::size_t>();
  if (emb.dim() != dim) {
    throw EmbeddingFileError(EmbeddingFileError::Kind::dimension_mismatch,
                             "dimension mismatch: embeddings have dim " + std::to_string(emb.dim()) +
                                 ", model expects " + std::to_string(dim));
  }
  Matrix x = emb.as_double();
  if (compressed) {
    std::ifstream in(bundle_dir / "pca.bin", std::ios::binary);
    if (!in) throw IoError("cannot open " + (bundle_dir / "pca.bin").string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    x = pca_transform(decode_pca(bytes), x);
  }
  const auto detector = detail::read_json_file(bundle_dir / "detector.json");
  std::vector<double> scores;
  if (kind == ModelKind::one_class_hbos) {
    for (double raw : hbos_raw_scores(hbos_from_json(detector), x)) scores.push_back(one_class_target_score(raw, compressed));
  } else {
    scores = gbdt_predict_proba(gbdt_from_json(detector), x);
  }
  return scores;
}

inline int cmd_score(const std::filesystem::path& bundle_dir, const std::filesystem::path& embeddings,
                     const std::filesystem::path& out_csv, std::ostream& log = std::cerr) {
  return detail::guarded(log, [&] {
    if (!std::filesystem::exists(embeddings)) throw IoError("embedding file not found: " + embeddings.string());
    const auto emb = read_embeddings(embeddings);
    const auto scores = score_with_bundle(bundle_dir, emb);
    std::string out = "row,score\n";
    for (std::size_t i = 0; i < scores.size(); ++i) out += std::to_string(i) + "," + format_double(scores[i]) + "\n";
    write_file_atomic(out_csv, out);
    log << "scored " << scores.size() << " rows -> " << out_csv.string() << '\n';
    return exit_code::ok;
  });
}

}  // namespace hatebench
