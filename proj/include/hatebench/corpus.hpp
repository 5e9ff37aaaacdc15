#pragma once

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hatebench/error.hpp"
#include "hatebench/matrix.hpp"
#include "hatebench/rng.hpp"
#include "hatebench/text.hpp"

namespace hatebench {

enum class CorpusFormat { jsonl, csv };

struct CorpusRecord {
  std::string id;
  std::string text;
  std::uint8_t label = 0;  // 0 = neutral, 1 = hate/toxic
  // Set when the text is empty (on load or after normalization). Such rows
  // stay in the corpus so pooled cross-validation still scores every row.
  bool flagged_empty = false;

  bool operator==(const CorpusRecord&) const = default;
};

struct LabeledCorpus {
  std::string name;
  std::string language_tag;
  std::vector<CorpusRecord> records;

  std::size_t size() const { return records.size(); }

  std::size_t positives() const {
    return static_cast<std::size_t>(
        std::count_if(records.begin(), records.end(), [](const auto& r) { return r.label == 1; }));
  }

  Labels labels() const {
    Labels y;
    y.reserve(records.size());
    for (const auto& r : records) y.push_back(r.label);
    return y;
  }

  bool operator==(const LabeledCorpus&) const = default;
};

struct NormalizationReport {
  std::string corpus;
  std::size_t records = 0;
  std::size_t flagged_empty = 0;
  NormalizationCounts counts;
};

inline nlohmann::ordered_json to_json(const NormalizationReport& r) {
  nlohmann::ordered_json j;
  j["corpus"] = r.corpus;
  j["records"] = r.records;
  j["flagged_empty"] = r.flagged_empty;
  j["exclamations_removed"] = r.counts.exclamations_removed;
  j["urls_removed"] = r.counts.urls_removed;
  j["punctuation_runs_collapsed"] = r.counts.punctuation_runs_collapsed;
  j["emojis_replaced"] = r.counts.emojis_replaced;
  j["encoding_fixes"] = r.counts.encoding_fixes;
  return j;
}

// 64-bit FNV-1a over the concatenated record texts, in record order.
// Binds an embedding file to the exact (normalized) corpus it encodes.
inline std::uint64_t corpus_checksum(const LabeledCorpus& corpus) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& r : corpus.records) h = fnv1a64(r.text, h);
  return h;
}

inline std::string checksum_hex(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

namespace detail {

inline std::uint8_t coerce_label(const nlohmann::json& v, std::size_t line) {
  if (v.is_boolean()) return v.get<bool>() ? 1 : 0;
  if (v.is_number_integer() || v.is_number_unsigned()) {
    const auto x = v.get<std::int64_t>();
    if (x == 0 || x == 1) return static_cast<std::uint8_t>(x);
    throw ParseError("label " + std::to_string(x) + " is not 0 or 1", line);
  }
  if (v.is_number_float()) {
    const auto x = v.get<double>();
    if (x == 0.0 || x == 1.0) return static_cast<std::uint8_t>(x);
    throw ParseError("label " + v.dump() + " is not 0 or 1", line);
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "0") return 0;
    if (s == "1") return 1;
    throw ParseError("label \"" + s + "\" is not 0 or 1", line);
  }
  throw ParseError("label has unsupported type " + std::string(v.type_name()), line);
}

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

struct CsvRow {
  std::vector<std::string> fields;
  std::size_t line = 0;  // physical line where the row starts, 1-based
};

// RFC 4180: comma separated, double-quote quoting, "" escapes, quoted
// fields may span lines. CRLF and LF both end a row.
inline std::vector<CsvRow> parse_csv(std::string_view data) {
  std::vector<CsvRow> rows;
  CsvRow row;
  std::string field;
  std::size_t line = 1;
  row.line = 1;
  bool quoted = false;
  bool field_started = false;
  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.fields.size() == 1 && row.fields[0].empty())) rows.push_back(std::move(row));
    row = CsvRow{};
    row.line = line;
  };
  for (std::size_t i = 0; i < data.size(); ++i) {
    const char c = data[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < data.size() && data[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started) throw ParseError("unexpected quote inside unquoted field", line);
        quoted = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < data.size() && data[i + 1] == '\n') break;
        ++line;
        end_row();
        break;
      case '\n':
        ++line;
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", row.line);
  if (field_started || !row.fields.empty()) end_row();
  return rows;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void check_unique_ids(const LabeledCorpus& corpus, const std::vector<std::size_t>& lines) {
  std::unordered_set<std::string_view> seen;
  for (std::size_t i = 0; i < corpus.records.size(); ++i) {
    if (!seen.insert(corpus.records[i].id).second) {
      throw ParseError("duplicate id \"" + corpus.records[i].id + "\"", lines[i]);
    }
  }
}

}  // namespace detail

inline LabeledCorpus parse_jsonl_corpus(std::string_view data, std::string name,
                                        std::string language_tag = {}) {
  LabeledCorpus corpus{std::move(name), std::move(language_tag), {}};
  std::vector<std::size_t> lines;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= data.size()) {
    auto end = data.find('\n', start);
    if (end == std::string_view::npos) end = data.size();
    ++line_no;
    std::string_view line = data.substr(start, end - start);
    start = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == data.size()) break;
      continue;
    }
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("record is not a JSON object", line_no);
    if (!obj.contains("text") || !obj["text"].is_string()) {
      throw ParseError("missing string field \"text\"", line_no);
    }
    if (!obj.contains("labels")) throw ParseError("missing field \"labels\"", line_no);

    CorpusRecord rec;
    rec.text = obj["text"].get<std::string>();
    rec.label = detail::coerce_label(obj["labels"], line_no);
    if (obj.contains("id") && !obj["id"].is_null()) {
      const auto& id = obj["id"];
      rec.id = id.is_string() ? id.get<std::string>() : id.dump();
    } else {
      rec.id = std::to_string(corpus.records.size());
    }
    rec.flagged_empty = rec.text.empty();
    corpus.records.push_back(std::move(rec));
    lines.push_back(line_no);
    if (end == data.size()) break;
  }
  detail::check_unique_ids(corpus, lines);
  return corpus;
}

inline LabeledCorpus parse_csv_corpus(std::string_view data, std::string name,
                                      std::string language_tag = {}) {
  auto rows = detail::parse_csv(data);
  if (rows.empty()) throw ParseError("missing CSV header row", 1);
  std::optional<std::size_t> text_col, label_col, id_col;
  for (std::size_t c = 0; c < rows[0].fields.size(); ++c) {
    auto key = detail::lower(rows[0].fields[c]);
    if (key.starts_with("\xEF\xBB\xBF")) key.erase(0, 3);
    if (key == "text") text_col = c;
    if (key == "labels") label_col = c;
    if (key == "id") id_col = c;
  }
  if (!text_col || !label_col) throw ParseError("header needs \"text\" and \"labels\" columns", 1);

  LabeledCorpus corpus{std::move(name), std::move(language_tag), {}};
  std::vector<std::size_t> lines;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != rows[0].fields.size()) {
      throw ParseError("expected " + std::to_string(rows[0].fields.size()) + " fields, got " +
                           std::to_string(row.fields.size()),
                       row.line);
    }
    CorpusRecord rec;
    rec.text = row.fields[*text_col];
    rec.label = detail::coerce_label(nlohmann::json(row.fields[*label_col]), row.line);
    rec.id = (id_col && !row.fields[*id_col].empty()) ? row.fields[*id_col]
                                                       : std::to_string(corpus.records.size());
    rec.flagged_empty = rec.text.empty();
    corpus.records.push_back(std::move(rec));
    lines.push_back(row.line);
  }
  detail::check_unique_ids(corpus, lines);
  return corpus;
}

inline CorpusFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = detail::lower(path.extension().string());
  if (ext == ".csv") return CorpusFormat::csv;
  if (ext == ".jsonl" || ext == ".json" || ext == ".ndjson") return CorpusFormat::jsonl;
  throw Error("cannot infer corpus format from " + path.string());
}

inline LabeledCorpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                                 std::string language_tag = {}) {
  const std::string data = detail::read_file(path);
  std::string name = path.stem().string();
  return format == CorpusFormat::jsonl ? parse_jsonl_corpus(data, std::move(name), std::move(language_tag))
                                       : parse_csv_corpus(data, std::move(name), std::move(language_tag));
}

inline std::string serialize_jsonl(const LabeledCorpus& corpus) {
  std::string out;
  for (const auto& r : corpus.records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["text"] = r.text;
    j["labels"] = r.label;
    out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

inline void save_corpus(const LabeledCorpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_jsonl(corpus);
  if (!out) throw IoError("write failed for " + path.string());
}

// Applies fix_punctuation to every record.
inline LabeledCorpus normalize_corpus(const LabeledCorpus& corpus, NormalizationReport* report = nullptr) {
  LabeledCorpus out{corpus.name, corpus.language_tag, {}};
  out.records.reserve(corpus.records.size());
  NormalizationReport rep;
  rep.corpus = corpus.name;
  rep.records = corpus.records.size();
  for (const auto& r : corpus.records) {
    CorpusRecord n = r;
    n.text = fix_punctuation(r.text, &rep.counts);
    n.flagged_empty = n.text.empty();
    if (n.flagged_empty) ++rep.flagged_empty;
    out.records.push_back(std::move(n));
  }
  if (report != nullptr) *report = rep;
  return out;
}

}  // namespace hatebench
