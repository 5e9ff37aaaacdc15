#pragma once

// Results tables (Accuracy %, Kappa, AUC ROC, AUC PRC, each for original and
// PCA-compressed embeddings) and ROC/PRC curve files.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "hatebench/cv.hpp"
#include "hatebench/error.hpp"

namespace hatebench {

inline constexpr std::string_view kMissingCell = "\xE2\x80\x94";  // em dash

struct CellKey {
  std::string embedding;
  ModelKind kind;
  bool compressed;

  auto operator<=>(const CellKey&) const = default;
};

struct BenchmarkGrid {
  std::string dataset_name;
  std::vector<std::string> embedding_order;
  std::map<CellKey, EvaluationReport> cells;

  void add(const CellKey& key, EvaluationReport report) {
    if (cells.contains(key)) {
      throw Error("duplicate grid cell " + to_string(key.kind) + " " + key.embedding +
                  (key.compressed ? " pca" : " orig"));
    }
    if (std::find(embedding_order.begin(), embedding_order.end(), key.embedding) == embedding_order.end()) {
      embedding_order.push_back(key.embedding);
    }
    cells.emplace(key, std::move(report));
  }

  const EvaluationReport* find(const std::string& embedding, ModelKind kind, bool compressed) const {
    const auto it = cells.find({embedding, kind, compressed});
    return it == cells.end() ? nullptr : &it->second;
  }
};

// Decimal rounding with ties to even, applied to the shortest round-trip
// decimal form of `value` after shifting the decimal point `shift` places
// right (shift = 2 turns a fraction into a percentage without any binary
// multiplication error).
inline std::string format_decimal(double value, int decimals, int shift = 0) {
  if (!std::isfinite(value)) return std::isnan(value) ? "nan" : (value > 0 ? "inf" : "-inf");
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed);
  std::string s(buf, res.ptr);
  bool negative = false;
  if (!s.empty() && s[0] == '-') {
    negative = true;
    s.erase(0, 1);
  }
  const auto dot = s.find('.');
  std::string int_part = dot == std::string::npos ? s : s.substr(0, dot);
  std::string frac_part = dot == std::string::npos ? "" : s.substr(dot + 1);
  for (int i = 0; i < shift; ++i) {
    if (frac_part.empty()) {
      int_part.push_back('0');
    } else {
      int_part.push_back(frac_part.front());
      frac_part.erase(0, 1);
    }
  }
  const auto d = static_cast<std::size_t>(decimals);
  if (frac_part.size() < d + 1) frac_part.append(d + 1 - frac_part.size(), '0');

  std::string digits = int_part + frac_part.substr(0, d);
  const char next = frac_part[d];
  const bool rest_nonzero = frac_part.find_first_not_of('0', d + 1) != std::string::npos;
  bool round_up = next > '5' || (next == '5' && rest_nonzero);
  if (next == '5' && !rest_nonzero) round_up = ((digits.back() - '0') % 2) == 1;
  if (round_up) {
    int i = static_cast<int>(digits.size()) - 1;
    while (i >= 0 && digits[static_cast<std::size_t>(i)] == '9') digits[static_cast<std::size_t>(i--)] = '0';
    if (i < 0) {
      digits.insert(digits.begin(), '1');
    } else {
      ++digits[static_cast<std::size_t>(i)];
    }
  }
  std::string ip = digits.substr(0, digits.size() - d);
  const auto first = ip.find_first_not_of('0');
  ip = first == std::string::npos ? "0" : ip.substr(first);
  std::string out = ip;
  if (d > 0) out += "." + digits.substr(digits.size() - d);
  if (negative && out.find_first_not_of("0.") != std::string::npos) out.insert(out.begin(), '-');
  return out;
}

inline std::string format_percent(double fraction) { return format_decimal(fraction, 2, 2); }
inline std::string format_metric(double value) { return format_decimal(value, 3); }

enum class TableFormat { markdown, csv };

inline std::string render_results_table(const BenchmarkGrid& grid, TableFormat format) {
  if (grid.cells.empty()) throw Error("cannot render an empty benchmark grid");

  struct Column {
    std::string title;
    std::string csv_name;
    std::string (*render)(const EvaluationReport&);
  };
  const std::vector<Column> metrics = {
      {"Accuracy (%)", "accuracy", [](const EvaluationReport& r) { return format_percent(r.accuracy); }},
      {"Kappa", "kappa", [](const EvaluationReport& r) { return format_metric(r.kappa); }},
      {"AUC ROC", "auc_roc", [](const EvaluationReport& r) { return format_metric(r.auc_roc); }},
      {"AUC PRC", "auc_prc", [](const EvaluationReport& r) { return format_metric(r.auc_prc); }},
  };

  std::vector<std::vector<std::string>> rows;
  for (ModelKind kind : {ModelKind::one_class_hbos, ModelKind::two_class_gbdt}) {
    for (const auto& emb : grid.embedding_order) {
      const auto* orig = grid.find(emb, kind, false);
      const auto* pca = grid.find(emb, kind, true);
      if (orig == nullptr && pca == nullptr) continue;
      std::vector<std::string> row{to_string(kind) + " " + emb};
      for (const auto& m : metrics) {
        row.push_back(orig ? m.render(*orig) : std::string(kMissingCell));
        row.push_back(pca ? m.render(*pca) : std::string(kMissingCell));
      }
      rows.push_back(std::move(row));
    }
  }

  std::ostringstream out;
  if (format == TableFormat::csv) {
    out << "method";
    for (const auto& m : metrics) out << ',' << m.csv_name << "_orig," << m.csv_name << "_pca";
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << '\n';
    }
    return out.str();
  }
  out << "| Method |";
  for (const auto& m : metrics) out << ' ' << m.title << " Orig. | " << m.title << " PCA |";
  out << "\n|:--|";
  for (std::size_t i = 0; i < 2 * metrics.size(); ++i) out << "--:|";
  out << '\n';
  for (const auto& row : rows) {
    out << '|';
    for (const auto& cell : row) out << ' ' << cell << " |";
    out << '\n';
  }
  return out.str();
}

// ---- files -------------------------------------------------------------------

// Writes through a temporary sibling and renames, so concurrent writers never
// leave interleaved contents.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  static std::atomic<std::uint64_t> counter{0};
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "." +
         std::to_string(counter.fetch_add(1));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string curve_csv(const std::vector<CurvePoint>& pts) {
  std::string out = "threshold,x,y\n";
  for (const auto& p : pts) out += format_double(p.threshold) + "," + format_double(p.x) + "," + format_double(p.y) + "\n";
  return out;
}

inline std::vector<CurvePoint> parse_curve_csv(std::string_view text) {
  std::vector<CurvePoint> pts;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "threshold,x,y") throw Error("curve CSV header must be threshold,x,y");
  auto parse = [](const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{}) throw Error("bad number in curve CSV: " + s);
    return v;
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto a = line.find(','), b = line.rfind(',');
    if (a == std::string::npos || a == b) throw Error("curve CSV row needs three fields: " + line);
    pts.push_back({parse(line.substr(0, a)), parse(line.substr(a + 1, b - a - 1)), parse(line.substr(b + 1))});
  }
  return pts;
}

inline std::string scores_csv(const EvaluationReport& r, const std::vector<std::string>& ids) {
  if (ids.size() != r.pooled_scores.size()) throw DimensionError("ids and pooled scores differ in length");
  std::string out = "id,label,score,fold\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::string id = ids[i];
    if (id.find_first_of(",\"\n\r") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : id) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      id = quoted + "\"";
    }
    out += id + "," + std::to_string(r.pooled_labels[i]) + "," + format_double(r.pooled_scores[i]) + "," +
           std::to_string(r.fold_of_row[i]) + "\n";
  }
  return out;
}

enum class CurveKind { roc, prc };

// Fixed 800x600 plot with axes, ticks, the curve, a reference line (chance
// diagonal for ROC, prevalence for PRC) and a two-entry legend.
inline std::string curve_svg(const std::vector<CurvePoint>& pts, CurveKind kind, double area, double prevalence,
                             const std::string& title) {
  constexpr double left = 80, top = 50, width = 680, height = 480;
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return std::string(buf);
  };
  auto px = [&](double x) { return fmt(left + std::clamp(x, 0.0, 1.0) * width); };
  auto py = [&](double y) { return fmt(top + (1.0 - std::clamp(y, 0.0, 1.0)) * height); };
  auto escape = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  };

  const bool roc = kind == CurveKind::roc;
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"800\" height=\"600\" fill=\"white\"/>\n";
  s << "<text x=\"400\" y=\"30\" font-family=\"sans-serif\" font-size=\"18\" text-anchor=\"middle\">"
    << escape(title) << "</text>\n";
  s << "<rect x=\"" << fmt(left) << "\" y=\"" << fmt(top) << "\" width=\"" << fmt(width) << "\" height=\""
    << fmt(height) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    s << "<line x1=\"" << px(v) << "\" y1=\"" << py(0) << "\" x2=\"" << px(v) << "\" y2=\"" << fmt(top + height + 6)
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << px(v) << "\" y=\"" << fmt(top + height + 22)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" << fmt(v) << "</text>\n";
    s << "<line x1=\"" << fmt(left - 6) << "\" y1=\"" << py(v) << "\" x2=\"" << px(0) << "\" y2=\"" << py(v)
      << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << fmt(left - 10) << "\" y=\"" << fmt(top + (1.0 - v) * height + 4)
      << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">" << fmt(v) << "</text>\n";
  }
  s << "<text x=\"400\" y=\"" << fmt(top + height + 45)
    << "\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">"
    << (roc ? "False positive rate" : "Recall") << "</text>\n";
  s << "<text x=\"25\" y=\"" << fmt(top + height / 2) << "\" font-family=\"sans-serif\" font-size=\"14\" "
    << "text-anchor=\"middle\" transform=\"rotate(-90 25 " << fmt(top + height / 2) << ")\">"
    << (roc ? "True positive rate" : "Precision") << "</text>\n";

  if (roc) {
    s << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
      << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  } else {
    s << "<line x1=\"" << px(0) << "\" y1=\"" << py(prevalence) << "\" x2=\"" << px(1) << "\" y2=\""
      << py(prevalence) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  }

  s << "<polyline fill=\"none\" stroke=\"#1f5fbf\" stroke-width=\"2\" points=\"";
  std::string last;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::string p = px(pts[i].x) + "," + py(pts[i].y);
    if (p == last) continue;
    s << (i ? " " : "") << p;
    last = std::move(p);
  }
  s << "\"/>\n";

  const double lx = roc ? 480 : 120, ly = roc ? 470 : 470;
  s << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly) << "\" x2=\"" << fmt(lx + 30) << "\" y2=\"" << fmt(ly)
    << "\" stroke=\"#1f5fbf\" stroke-width=\"2\"/>\n";
  s << "<text x=\"" << fmt(lx + 38) << "\" y=\"" << fmt(ly + 4) << "\" font-family=\"sans-serif\" font-size=\"13\">"
    << (roc ? "AUC ROC = " : "AUC PRC = ") << format_metric(area) << "</text>\n";
  s << "<line x1=\"" << fmt(lx) << "\" y1=\"" << fmt(ly + 22) << "\" x2=\"" << fmt(lx + 30) << "\" y2=\""
    << fmt(ly + 22) << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  s << "<text x=\"" << fmt(lx + 38) << "\" y=\"" << fmt(ly + 26) << "\" font-family=\"sans-serif\" font-size=\"13\">"
    << (roc ? "chance" : "prevalence = " + format_metric(prevalence)) << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

struct CurveFiles {
  std::filesystem::path roc_csv, prc_csv, roc_svg, prc_svg;
};

inline CurveFiles emit_curves(const EvaluationReport& r, const std::filesystem::path& out_dir,
                              const std::string& title = {}) {
  if (r.roc_points.empty() || r.prc_points.empty()) throw Error("report has no curve points");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::size_t pos = 0;
  for (auto v : r.pooled_labels) pos += v;
  const double prevalence = r.pooled_labels.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(r.pooled_labels.size());
  CurveFiles files{out_dir / "roc.csv", out_dir / "prc.csv", out_dir / "roc.svg", out_dir / "prc.svg"};
  write_file_atomic(files.roc_csv, curve_csv(r.roc_points));
  write_file_atomic(files.prc_csv, curve_csv(r.prc_points));
  write_file_atomic(files.roc_svg, curve_svg(r.roc_points, CurveKind::roc, r.auc_roc, prevalence, title.empty() ? "ROC" : title + " ROC"));
  write_file_atomic(files.prc_svg, curve_svg(r.prc_points, CurveKind::prc, r.auc_prc, prevalence, title.empty() ? "PRC" : title + " PRC"));
  return files;
}

}  // namespace hatebench
