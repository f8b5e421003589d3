#include "spcgen/annotate.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "spcgen/csv.hpp"
#include "spcgen/error.hpp"
#include "spcgen/text.hpp"

namespace spcgen {
namespace {

std::size_t index_of(OverlapLabel label) { return static_cast<std::size_t>(label); }

std::string upper_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

std::string format_score(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", s);
  return buf;
}

}  // namespace

std::string_view code(OverlapLabel label) {
  switch (label) {
    case OverlapLabel::kEqual: return "EQUAL";
    case OverlapLabel::kGnSubsetGt: return "GN_SUBSET_GT";
    case OverlapLabel::kGtSubsetGn: return "GT_SUBSET_GN";
    case OverlapLabel::kPartial: return "PARTIAL";
    case OverlapLabel::kDisjoint: return "DISJOINT";
  }
  return "DISJOINT";
}

std::optional<OverlapLabel> parse_overlap_label(std::string_view token) {
  const std::string t = upper_ascii(text::trim(token));
  if (t.empty() || t == "SKIP" || t == "SKIPPED") return OverlapLabel::kDisjoint;
  for (auto label : kAllLabels) {
    if (t == code(label)) return label;
  }
  return std::nullopt;
}

AnnotationSheet parse_annotation_csv(std::string_view csv_text, std::string annotator_id) {
  const auto records = csv::parse(csv_text);
  std::size_t first = 0;
  while (first < records.size() && records[first].size() == 1 && text::trim(records[first][0]).empty()) ++first;
  if (first == records.size()) throw Error(Errc::kBadHeader, "annotation file has no header");
  const auto& header = records[first];
  auto col = [&](std::size_t k) { return text::to_lower(text::trim(k < header.size() ? header[k] : "")); };
  if (header.size() < 3 || col(0) != "gn_id" || col(1) != "gt_id" || col(2) != "label") {
    throw Error(Errc::kBadHeader, "annotation header must start with gn_id,gt_id,label");
  }
  const bool has_note = header.size() > 3 && col(3) == "note";

  AnnotationSheet sheet;
  sheet.annotator_id = std::move(annotator_id);
  std::set<std::pair<std::string, std::string>> seen;
  bool all_labelled = true;
  for (std::size_t r = first + 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    bool blank = true;
    for (const auto& f : rec) blank = blank && text::trim(f).empty();
    if (blank) continue;
    AnnotationEntry e;
    e.gn_id = std::string(text::trim(rec[0]));
    e.gt_id = rec.size() > 1 ? std::string(text::trim(rec[1])) : std::string();
    if (e.gn_id.empty() || e.gt_id.empty()) {
      throw Error(Errc::kInvalidArgument, "line " + std::to_string(r + 1) + ": gn_id and gt_id are required");
    }
    const std::string raw = rec.size() > 2 ? rec[2] : std::string();
    const auto label = parse_overlap_label(raw);
    if (!label) {
      throw Error(Errc::kInvalidArgument, "line " + std::to_string(r + 1) + ": unknown label '" + raw + "'");
    }
    if (text::trim(raw).empty()) all_labelled = false;
    e.label = *label;
    if (has_note && rec.size() > 3) e.note = rec[3];
    if (!seen.emplace(e.gn_id, e.gt_id).second) {
      throw Error(Errc::kInvalidArgument, "duplicate pair (" + e.gn_id + ", " + e.gt_id + ")");
    }
    sheet.entries.push_back(std::move(e));
  }
  sheet.completed = all_labelled && !sheet.entries.empty();
  return sheet;
}

AnnotationSheet load_annotation_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_annotation_csv(buf.str(), path.stem().string());
}

std::string render_annotation_csv(const AnnotationSheet& sheet) {
  bool notes = false;
  for (const auto& e : sheet.entries) notes = notes || !e.note.empty();
  std::string out = notes ? "gn_id,gt_id,label,note\r\n" : "gn_id,gt_id,label\r\n";
  for (const auto& e : sheet.entries) {
    std::vector<std::string> fields{e.gn_id, e.gt_id, std::string(code(e.label))};
    if (notes) fields.push_back(e.note);
    out += csv::format_row(fields);
    out += "\r\n";
  }
  return out;
}

AgreementStats agreement_from_confusion(const std::vector<std::vector<std::size_t>>& confusion) {
  const std::size_t k = confusion.size();
  for (const auto& row : confusion) {
    if (row.size() != k) throw Error(Errc::kInvalidArgument, "confusion matrix must be square");
  }
  std::vector<double> rows(k, 0.0), cols(k, 0.0);
  double n = 0.0, trace = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      const auto c = static_cast<double>(confusion[a][b]);
      rows[a] += c;
      cols[b] += c;
      n += c;
      if (a == b) trace += c;
    }
  }
  if (n == 0.0) throw Error(Errc::kEmpty, "no annotated items");
  AgreementStats stats;
  stats.n_items = static_cast<std::size_t>(n);
  for (std::size_t a = 0; a < k && a < 5; ++a) {
    for (std::size_t b = 0; b < k && b < 5; ++b) stats.confusion[a][b] = confusion[a][b];
  }
  const double p_o = trace / n;
  double p_e = 0.0;
  for (std::size_t a = 0; a < k; ++a) p_e += rows[a] * cols[a];
  p_e /= n * n;
  stats.percent_agreement = p_o;
  if (p_e < 1.0) stats.kappa = (p_o - p_e) / (1.0 - p_e);
  return stats;
}

AgreementStats compute_agreement(const AnnotationSheet& a, const AnnotationSheet& b) {
  using Key = std::pair<std::string, std::string>;
  std::map<Key, OverlapLabel> left, right;
  for (const auto& e : a.entries) left.emplace(Key{e.gn_id, e.gt_id}, e.label);
  for (const auto& e : b.entries) right.emplace(Key{e.gn_id, e.gt_id}, e.label);

  std::vector<std::string> offending;
  for (const auto& [key, _] : left) {
    if (!right.count(key)) offending.push_back("(" + key.first + ", " + key.second + ") only in first sheet");
  }
  for (const auto& [key, _] : right) {
    if (!left.count(key)) offending.push_back("(" + key.first + ", " + key.second + ") only in second sheet");
  }
  if (!offending.empty()) {
    std::string msg = std::to_string(offending.size()) + " unpaired item(s): ";
    for (std::size_t i = 0; i < offending.size() && i < 20; ++i) {
      if (i) msg += "; ";
      msg += offending[i];
    }
    if (offending.size() > 20) msg += "; ...";
    throw Error(Errc::kMisaligned, msg);
  }

  std::vector<std::vector<std::size_t>> confusion(5, std::vector<std::size_t>(5, 0));
  for (const auto& [key, label] : left) ++confusion[index_of(label)][index_of(right.at(key))];
  return agreement_from_confusion(confusion);
}

std::vector<ReviewQueue> build_review_queue(const SpcCatalog& gn, const SpcCatalog& gt, Scorer& scorer,
                                            bool aa_filter) {
  if (gn.rows.empty()) throw Error(Errc::kEmptyCatalog, "generated catalog has no rows");
  if (gt.rows.empty()) throw Error(Errc::kEmptyCatalog, "reference catalog has no rows");
  std::vector<ReviewQueue> queues;
  queues.reserve(gn.rows.size());
  for (const auto& row : gn.rows) {
    ReviewQueue q;
    q.gn_id = row.criterion_id;
    q.candidates = rank_candidates(row, gt, scorer, aa_filter);
    q.empty_after_filter = q.candidates.empty();
    queues.push_back(std::move(q));
  }
  return queues;
}

std::string render_review_csv(const std::vector<ReviewQueue>& queues) {
  std::string out = "gn_id,gt_id,label,note\r\n";
  for (const auto& q : queues) {
    for (const auto& c : q.candidates) {
      out += csv::format_row({q.gn_id, c.criterion_id, "", "score=" + format_score(c.score)});
      out += "\r\n";
    }
  }
  return out;
}

}  // namespace spcgen
