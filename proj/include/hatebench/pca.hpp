#pragma once

// PCA by thin SVD of the row-centred data matrix. Explained variances use
// the 1/(n-1) sample-covariance convention. No whitening.

#include <Eigen/SVD>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "hatebench/embedstore.hpp"
#include "hatebench/error.hpp"
#include "hatebench/matrix.hpp"

namespace hatebench {

struct PcaModel {
  Vector mean;                // d
  Matrix components;          // k x d, rows orthonormal, descending variance
  Vector explained_variance;  // k
  double total_variance = 0;  // trace of the sample covariance
  std::size_t n_samples = 0;

  std::size_t k() const { return static_cast<std::size_t>(components.rows()); }
  std::size_t d() const { return static_cast<std::size_t>(components.cols()); }

  Vector explained_variance_ratio() const {
    if (total_variance <= 0) return Vector::Zero(explained_variance.size());
    return explained_variance / total_variance;
  }
};

inline PcaModel pca_fit(const Matrix& x, std::size_t k) {
  const auto n = static_cast<std::size_t>(x.rows());
  const auto d = static_cast<std::size_t>(x.cols());
  if (n < 2) throw DimensionError("PCA needs at least 2 rows, got " + std::to_string(n));
  if (k < 1 || k > std::min(n - 1, d)) {
    throw DimensionError("PCA k=" + std::to_string(k) + " outside [1, min(n-1, d)] = [1, " +
                         std::to_string(std::min(n - 1, d)) + "]");
  }

  PcaModel model;
  model.n_samples = n;
  model.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - model.mean.transpose();
  const double denom = static_cast<double>(n - 1);
  model.total_variance = centered.squaredNorm() / denom;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const Eigen::MatrixXd& v = svd.matrixV();

  const auto kk = static_cast<Eigen::Index>(k);
  model.components.resize(kk, static_cast<Eigen::Index>(d));
  model.explained_variance.resize(kk);
  for (Eigen::Index i = 0; i < kk; ++i) {
    Eigen::VectorXd axis = v.col(i);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    model.components.row(i) = axis.transpose();
    model.explained_variance(i) = sv(i) * sv(i) / denom;
  }
  return model;
}

inline Matrix pca_transform(const PcaModel& model, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != model.d()) {
    throw DimensionError("PCA transform: input has " + std::to_string(x.cols()) + " columns, model expects " +
                         std::to_string(model.d()));
  }
  return (x.rowwise() - model.mean.transpose()) * model.components.transpose();
}

inline Matrix pca_inverse_transform(const PcaModel& model, const Matrix& z) {
  if (static_cast<std::size_t>(z.cols()) != model.k()) {
    throw DimensionError("PCA inverse transform: input has " + std::to_string(z.cols()) +
                         " columns, model has k=" + std::to_string(model.k()));
  }
  return (z * model.components).rowwise() + model.mean.transpose();
}

// Cached per-fold models: magic "PCA1", u32 LE header length, JSON header
// {"k","d","n_samples","total_variance","explained_variance"}, then f32 LE
// mean (d values) followed by the k x d components, row-major.
inline std::string encode_pca(const PcaModel& m) {
  nlohmann::ordered_json header;
  header["k"] = m.k();
  header["d"] = m.d();
  header["n_samples"] = m.n_samples;
  header["total_variance"] = m.total_variance;
  header["explained_variance"] = std::vector<double>(m.explained_variance.data(),
                                                     m.explained_variance.data() + m.explained_variance.size());
  const std::string text = header.dump();
  std::string out = "PCA1";
  detail::put_u32_le(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  const Eigen::VectorXf mean = m.mean.cast<float>();
  const MatrixF comps = m.components.cast<float>();
  detail::append_f32_le(out, mean.data(), static_cast<std::size_t>(mean.size()));
  detail::append_f32_le(out, comps.data(), static_cast<std::size_t>(comps.size()));
  return out;
}

inline PcaModel decode_pca(std::string_view bytes) {
  if (bytes.size() < 8 || bytes.substr(0, 4) != "PCA1") throw Error("not a PCA1 model (bad magic)");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t header_len = detail::get_u32_le(p + 4);
  if (bytes.size() < 8 + header_len) throw Error("PCA1 header truncated");
  PcaModel m;
  std::size_t k = 0, d = 0;
  std::vector<double> ev;
  try {
    const auto header = nlohmann::json::parse(bytes.substr(8, header_len));
    k = header.at("k").get<std::size_t>();
    d = header.at("d").get<std::size_t>();
    m.n_samples = header.at("n_samples").get<std::size_t>();
    m.total_variance = header.at("total_variance").get<double>();
    ev = header.at("explained_variance").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("PCA1 header invalid: ") + e.what());
  }
  if (ev.size() != k) throw Error("PCA1 explained_variance length differs from k");
  if (bytes.size() - 8 - header_len != 4 * (d + k * d)) throw Error("PCA1 payload length mismatch");
  Eigen::VectorXf mean(static_cast<Eigen::Index>(d));
  MatrixF comps(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  detail::read_f32_le(p + 8 + header_len, mean.data(), d);
  detail::read_f32_le(p + 8 + header_len + 4 * d, comps.data(), k * d);
  m.mean = mean.cast<double>();
  m.components = comps.cast<double>();
  m.explained_variance = Eigen::Map<const Vector>(ev.data(), static_cast<Eigen::Index>(k));
  return m;
}

inline void save_pca(const PcaModel& m, const std::filesystem::path& path) {
  const std::string bytes = encode_pca(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline PcaModel load_pca(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_pca(bytes);
}

}  // namespace hatebench
