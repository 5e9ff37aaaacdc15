#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hatebench/corpus.hpp"
#include "hatebench/embedstore.hpp"
#include "hatebench/matrix.hpp"
#include "hatebench/rng.hpp"

namespace fixtures {

using hatebench::Labels;
using hatebench::Matrix;

// Mean shift giving Bayes AUC Phi(delta / sqrt(2)) = 0.9 for unit variance.
inline const double kBayes90Shift = std::sqrt(2.0) * 1.2815515655446004;

struct Dataset {
  Matrix x;
  Labels y;
};

// Balanced two-class sample; class 1 has its mean shifted by `shift` along
// feature 0, every other feature is N(0, 1).
inline Dataset isotropic_gaussians(std::size_t n, std::size_t d, double shift, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset ds{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)), Labels(n)};
  for (std::size_t i = 0; i < n; ++i) {
    ds.y[i] = static_cast<std::uint8_t>(i % 2);
    for (std::size_t j = 0; j < d; ++j) {
      double v = hatebench::standard_normal(rng);
      if (j == 0 && ds.y[i] == 1) v += shift;
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return ds;
}

// The first `strong` features have standard deviation `strong_sd`, the rest
// `weak_sd`. The class shift lives on feature 0 (a strong one) and is
// sized for Bayes AUC 0.9.
inline Dataset anisotropic_gaussians(std::size_t n, std::size_t d, std::size_t strong, double strong_sd, double weak_sd,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dataset ds{Matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d)), Labels(n)};
  for (std::size_t i = 0; i < n; ++i) {
    ds.y[i] = static_cast<std::uint8_t>(i % 2);
    for (std::size_t j = 0; j < d; ++j) {
      double v = hatebench::standard_normal(rng) * (j < strong ? strong_sd : weak_sd);
      if (j == 0 && ds.y[i] == 1) v += kBayes90Shift * strong_sd;
      ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
    }
  }
  return ds;
}

inline Matrix random_matrix(std::size_t n, std::size_t d, std::mt19937_64& rng) {
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = hatebench::standard_normal(rng);
  }
  return x;
}

// Corpus with one text per row; texts are distinct so the checksum binds.
inline hatebench::LabeledCorpus synthetic_corpus(const Labels& y, const std::string& name = "synthetic") {
  hatebench::LabeledCorpus c;
  c.name = name;
  for (std::size_t i = 0; i < y.size(); ++i) {
    c.records.push_back({"r" + std::to_string(i), "tekstas numeris " + std::to_string(i), y[i], false});
  }
  return c;
}

inline hatebench::EmbeddingMatrix embeddings_for(const hatebench::LabeledCorpus& c, const Matrix& x,
                                                 const std::string& model) {
  hatebench::EmbeddingMatrix m;
  m.data = x.cast<float>();
  m.model_name = model;
  m.corpus_name = c.name;
  m.corpus_checksum = hatebench::corpus_checksum(c);
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("hatebench-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace fixtures
