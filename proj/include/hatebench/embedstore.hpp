#pragma once

// EMB1 embedding files, the interchange format between the encoder sidecar
// and the pipeline:
//
//   bytes 0..3   "EMB1"
//   bytes 4..7   header length H, unsigned 32-bit little-endian
//   next H bytes UTF-8 JSON {"model","dim","count","dtype":"f32","corpus","corpus_checksum", ...}
//   remainder    count*dim float32 values, row-major, little-endian
//
// Unknown header keys written by other tools are kept and written back after
// the standard ones.

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>

#include "hatebench/corpus.hpp"
#include "hatebench/error.hpp"
#include "hatebench/matrix.hpp"

namespace hatebench {

inline constexpr std::string_view kEmbMagic = "EMB1";

struct EmbeddingMatrix {
  MatrixF data;
  std::string model_name;
  std::string corpus_name;
  std::uint64_t corpus_checksum = 0;
  nlohmann::ordered_json extra_header = nlohmann::ordered_json::object();

  std::size_t count() const { return static_cast<std::size_t>(data.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(data.cols()); }

  Matrix as_double() const { return data.cast<double>(); }

  bool operator==(const EmbeddingMatrix& o) const {
    return model_name == o.model_name && corpus_name == o.corpus_name &&
           corpus_checksum == o.corpus_checksum && extra_header == o.extra_header &&
           data.rows() == o.data.rows() && data.cols() == o.data.cols() &&
           std::memcmp(data.data(), o.data.data(), sizeof(float) * static_cast<std::size_t>(data.size())) == 0;
  }
};

class EmbeddingFileError : public Error {
 public:
  enum class Kind {
    io,
    bad_magic,
    bad_header,
    payload_length_mismatch,
    checksum_mismatch,
    dimension_mismatch,
    count_mismatch,
    non_finite,
  };

  EmbeddingFileError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

// Optional cross-checks applied while reading.
struct EmbeddingExpectations {
  std::optional<std::size_t> dim;
  std::optional<std::size_t> count;
  std::optional<std::uint64_t> corpus_checksum;
};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void append_f32_le(std::string& out, const float* values, std::size_t n) {
  const std::size_t offset = out.size();
  out.resize(offset + 4 * n);
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(out.data() + offset, values, 4 * n);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(values[i]);
      for (int b = 0; b < 4; ++b) out[offset + 4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  }
}

inline void read_f32_le(const unsigned char* src, float* dst, std::size_t n) {
  if constexpr (std::endian::native == std::endian::little) {
    std::memcpy(dst, src, 4 * n);
  } else {
    for (std::size_t i = 0; i < n; ++i) dst[i] = std::bit_cast<float>(get_u32_le(src + 4 * i));
  }
}

inline std::uint64_t parse_checksum_hex(const std::string& hex) {
  if (hex.size() != 16) throw EmbeddingFileError(EmbeddingFileError::Kind::bad_header, "corpus_checksum must be 16 hex digits");
  std::uint64_t v = 0;
  for (char c : hex) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint64_t>(c - 'A' + 10);
    else throw EmbeddingFileError(EmbeddingFileError::Kind::bad_header, "corpus_checksum is not hex");
  }
  return v;
}

}  // namespace detail

inline bool all_finite(const MatrixF& m) { return m.allFinite(); }

inline std::string encode_embeddings(const EmbeddingMatrix& m) {
  if (m.data.rows() < 1 || m.data.cols() < 1) {
    throw EmbeddingFileError(EmbeddingFileError::Kind::bad_header, "embedding matrix must be at least 1x1");
  }
  if (!all_finite(m.data)) {
    throw EmbeddingFileError(EmbeddingFileError::Kind::non_finite,
                             "refusing to write embeddings containing NaN or Inf");
  }
  nlohmann::ordered_json header;
  header["model"] = m.model_name;
  header["dim"] = m.dim();
  header["count"] = m.count();
  header["dtype"] = "f32";
  header["corpus"] = m.corpus_name;
  header["corpus_checksum"] = checksum_hex(m.corpus_checksum);
  for (const auto& [key, value] : m.extra_header.items()) {
    if (!header.contains(key)) header[key] = value;
  }
  const std::string header_text = header.dump();

  std::string out;
  out.reserve(8 + header_text.size() + 4 * static_cast<std::size_t>(m.data.size()));
  out.append(kEmbMagic);
  detail::put_u32_le(out, static_cast<std::uint32_t>(header_text.size()));
  out.append(header_text);
  detail::append_f32_le(out, m.data.data(), static_cast<std::size_t>(m.data.size()));
  return out;
}

inline EmbeddingMatrix decode_embeddings(std::string_view bytes, const EmbeddingExpectations& expect = {}) {
  using Kind = EmbeddingFileError::Kind;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 8 || bytes.substr(0, 4) != kEmbMagic) {
    throw EmbeddingFileError(Kind::bad_magic, "not an EMB1 file (bad magic)");
  }
  const std::size_t header_len = detail::get_u32_le(p + 4);
  if (bytes.size() < 8 + header_len) throw EmbeddingFileError(Kind::bad_header, "header truncated");

  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(bytes.substr(8, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw EmbeddingFileError(Kind::bad_header, std::string("header is not valid JSON: ") + e.what());
  }

  EmbeddingMatrix m;
  std::size_t dim = 0, count = 0;
  try {
    if (header.at("dtype").get<std::string>() != "f32") {
      throw EmbeddingFileError(Kind::bad_header, "unsupported dtype " + header.at("dtype").dump());
    }
    dim = header.at("dim").get<std::size_t>();
    count = header.at("count").get<std::size_t>();
    m.model_name = header.at("model").get<std::string>();
    m.corpus_name = header.at("corpus").get<std::string>();
    m.corpus_checksum = detail::parse_checksum_hex(header.at("corpus_checksum").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw EmbeddingFileError(Kind::bad_header, std::string("header field missing or mistyped: ") + e.what());
  }
  if (dim < 1 || count < 1) throw EmbeddingFileError(Kind::bad_header, "dim and count must be positive");
  for (const auto& [key, value] : header.items()) {
    if (key != "model" && key != "dim" && key != "count" && key != "dtype" && key != "corpus" &&
        key != "corpus_checksum") {
      m.extra_header[key] = value;
    }
  }

  const std::size_t payload = bytes.size() - 8 - header_len;
  if (payload != count * dim * 4) {
    throw EmbeddingFileError(Kind::payload_length_mismatch,
                             "payload length mismatch: header declares " + std::to_string(count) + "x" +
                                 std::to_string(dim) + " f32 (" + std::to_string(count * dim * 4) +
                                 " bytes), file has " + std::to_string(payload));
  }
  if (expect.dim && *expect.dim != dim) {
    throw EmbeddingFileError(Kind::dimension_mismatch, "dimension mismatch: file has dim " + std::to_string(dim) +
                                                           ", expected " + std::to_string(*expect.dim));
  }
  if (expect.count && *expect.count != count) {
    throw EmbeddingFileError(Kind::count_mismatch, "row count mismatch: file has " + std::to_string(count) +
                                                       " rows, corpus has " + std::to_string(*expect.count));
  }
  if (expect.corpus_checksum && *expect.corpus_checksum != m.corpus_checksum) {
    throw EmbeddingFileError(Kind::checksum_mismatch, "corpus checksum mismatch: file " +
                                                          checksum_hex(m.corpus_checksum) + ", corpus " +
                                                          checksum_hex(*expect.corpus_checksum));
  }

  m.data.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  detail::read_f32_le(p + 8 + header_len, m.data.data(), count * dim);
  if (!all_finite(m.data)) throw EmbeddingFileError(Kind::non_finite, "embedding payload contains NaN or Inf");
  return m;
}

inline void write_embeddings(const EmbeddingMatrix& m, const std::filesystem::path& path) {
  const std::string bytes = encode_embeddings(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EmbeddingFileError(EmbeddingFileError::Kind::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw EmbeddingFileError(EmbeddingFileError::Kind::io, "write failed for " + path.string());
}

inline EmbeddingMatrix read_embeddings(const std::filesystem::path& path, const EmbeddingExpectations& expect = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmbeddingFileError(EmbeddingFileError::Kind::io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_embeddings(bytes, expect);
}

// Expectations that bind an embedding file to a loaded corpus.
inline EmbeddingExpectations expectations_for(const LabeledCorpus& corpus) {
  return {std::nullopt, corpus.size(), corpus_checksum(corpus)};
}

}  // namespace hatebench
