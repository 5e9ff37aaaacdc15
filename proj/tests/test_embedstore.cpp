#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "hatebench/embedstore.hpp"
#include "support/fixtures.hpp"

using namespace hatebench;
using Kind = EmbeddingFileError::Kind;

namespace {

EmbeddingMatrix sample(Eigen::Index n, Eigen::Index d, std::uint64_t seed, const std::string& model = "potion") {
  std::mt19937_64 rng(seed);
  EmbeddingMatrix m;
  m.data.resize(n, d);
  for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = static_cast<float>(standard_normal(rng));
  m.model_name = model;
  m.corpus_name = "lthate";
  m.corpus_checksum = 0x0123456789abcdefULL;
  return m;
}

Kind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const EmbeddingFileError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no EmbeddingFileError thrown";
  return Kind::io;
}

}  // namespace

TEST(Emb1, ZeroMatrixLayout) {
  EmbeddingMatrix m;
  m.data = MatrixF::Zero(2, 3);
  m.model_name = "zeros";
  m.corpus_name = "c";
  m.corpus_checksum = 0;
  const std::string bytes = encode_embeddings(m);
  ASSERT_EQ(bytes.substr(0, 4), "EMB1");
  const std::uint32_t hlen = detail::get_u32_le(reinterpret_cast<const unsigned char*>(bytes.data()) + 4);
  const std::string header = bytes.substr(8, hlen);
  EXPECT_EQ(header,
            "{\"model\":\"zeros\",\"dim\":3,\"count\":2,\"dtype\":\"f32\",\"corpus\":\"c\",\"corpus_checksum\":"
            "\"0000000000000000\"}");
  ASSERT_EQ(bytes.size(), 8 + hlen + 24u);
  for (std::size_t i = 8 + hlen; i < bytes.size(); ++i) EXPECT_EQ(bytes[i], '\0');
}

TEST(Emb1, HeaderCarriesDimension) {
  const auto m = sample(2, 1024, 1, "e5");
  const std::string bytes = encode_embeddings(m);
  const std::uint32_t hlen = detail::get_u32_le(reinterpret_cast<const unsigned char*>(bytes.data()) + 4);
  EXPECT_NE(bytes.substr(8, hlen).find("\"dim\":1024"), std::string::npos);
}

TEST(Emb1, PayloadIsLittleEndian) {
  EmbeddingMatrix m;
  m.data.resize(1, 2);
  m.data << 1.0f, -2.5f;
  m.model_name = "m";
  const std::string bytes = encode_embeddings(m);
  const std::string payload = bytes.substr(bytes.size() - 8);
  EXPECT_EQ(payload, std::string("\x00\x00\x80\x3f\x00\x00\x20\xc0", 8));
}

TEST(Emb1, RefusesNonFinite) {
  auto m = sample(3, 4, 2);
  m.data(1, 2) = std::numeric_limits<float>::quiet_NaN();
  EXPECT_EQ(kind_of([&] { encode_embeddings(m); }), Kind::non_finite);
  m.data(1, 2) = std::numeric_limits<float>::infinity();
  EXPECT_EQ(kind_of([&] { encode_embeddings(m); }), Kind::non_finite);
}

TEST(Emb1, FileRoundTripIsBitIdentical) {
  fixtures::TempDir dir("emb");
  auto m = sample(5, 256, 3);
  m.extra_header["normalized"] = false;
  write_embeddings(m, dir / "x.emb");
  const auto back = read_embeddings(dir / "x.emb");
  EXPECT_TRUE(back == m);
  EXPECT_EQ(back.model_name, "potion");
  EXPECT_EQ(back.corpus_checksum, m.corpus_checksum);
  EXPECT_EQ(back.extra_header, m.extra_header);
  EXPECT_EQ(std::memcmp(back.data.data(), m.data.data(), 5 * 256 * sizeof(float)), 0);
  EXPECT_EQ(encode_embeddings(back), encode_embeddings(m));
}

TEST(Emb1, TruncatedPayload) {
  std::string bytes = encode_embeddings(sample(5, 8, 4));
  bytes.resize(bytes.size() - 7);
  EXPECT_EQ(kind_of([&] { decode_embeddings(bytes); }), Kind::payload_length_mismatch);
  bytes += std::string(20, '\0');
  EXPECT_EQ(kind_of([&] { decode_embeddings(bytes); }), Kind::payload_length_mismatch);
}

TEST(Emb1, DimensionMismatchAgainstPipeline) {
  const std::string bytes = encode_embeddings(sample(3, 256, 5));
  EmbeddingExpectations expect;
  expect.dim = 1024;
  EXPECT_EQ(kind_of([&] { decode_embeddings(bytes, expect); }), Kind::dimension_mismatch);
}

TEST(Emb1, CorruptionKinds) {
  const std::string good = encode_embeddings(sample(3, 4, 6));
  std::string bad = good;
  bad[0] = 'X';
  EXPECT_EQ(kind_of([&] { decode_embeddings(bad); }), Kind::bad_magic);
  EXPECT_EQ(kind_of([&] { decode_embeddings("EMB"); }), Kind::bad_magic);
  bad = good;
  bad[8] = '[';
  EXPECT_EQ(kind_of([&] { decode_embeddings(bad); }), Kind::bad_header);
  bad = good;
  bad[4] = '\xff';
  EXPECT_EQ(kind_of([&] { decode_embeddings(bad); }), Kind::bad_header);

  EmbeddingExpectations expect;
  expect.corpus_checksum = 1;
  EXPECT_EQ(kind_of([&] { decode_embeddings(good, expect); }), Kind::checksum_mismatch);
  expect = {};
  expect.count = 4;
  EXPECT_EQ(kind_of([&] { decode_embeddings(good, expect); }), Kind::count_mismatch);

  // NaN smuggled into the payload by another writer
  bad = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bad.data() + bad.size() - 4, &nan, 4);
  EXPECT_EQ(kind_of([&] { decode_embeddings(bad); }), Kind::non_finite);
  EXPECT_EQ(kind_of([&] { read_embeddings("/nonexistent/x.emb"); }), Kind::io);
}

TEST(Emb1, BindsToCorpus) {
  const Labels y{0, 1, 0, 1};
  const auto corpus = fixtures::synthetic_corpus(y);
  Matrix x = Matrix::Ones(4, 3);
  const auto m = fixtures::embeddings_for(corpus, x, "m");
  EXPECT_NO_THROW(decode_embeddings(encode_embeddings(m), expectations_for(corpus)));
  auto other = corpus;
  other.records[2].text += " ";
  EXPECT_EQ(kind_of([&] { decode_embeddings(encode_embeddings(m), expectations_for(other)); }), Kind::checksum_mismatch);
}
