#include "spcgen/catalog.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "spcgen/error.hpp"
#include "spcgen/text.hpp"

namespace spcgen {

std::string_view code(Sector s) {
  switch (s) {
    case Sector::kNT: return "NT";
    case Sector::kFN: return "FN";
    case Sector::kLM: return "LM";
    case Sector::kTS: return "TS";
    case Sector::kCS: return "CS";
    case Sector::kPS: return "PS";
    case Sector::kCD: return "CD";
  }
  return "NT";
}

std::string_view display_name(Sector s) {
  switch (s) {
    case Sector::kNT: return "food";
    case Sector::kFN: return "furniture";
    case Sector::kLM: return "lighting";
    case Sector::kTS: return "transport (excluding railway)";
    case Sector::kCS: return "construction";
    case Sector::kPS: return "print services";
    case Sector::kCD: return "communication devices";
  }
  return "food";
}

std::string_view display_name(Sector s, std::string_view language) {
  if (!text::iequals_ascii(language, "de")) return display_name(s);
  switch (s) {
    case Sector::kNT: return "Lebensmittel";
    case Sector::kFN: return "Möbel";
    case Sector::kLM: return "Leuchtmittel";
    case Sector::kTS: return "Transport (ohne Schienenverkehr)";
    case Sector::kCS: return "Bauwesen";
    case Sector::kPS: return "Druckdienstleistungen";
    case Sector::kCD: return "Kommunikationsgeräte";
  }
  return display_name(s);
}

std::optional<Sector> parse_sector(std::string_view token) {
  token = text::trim(token);
  for (Sector s : kAllSectors) {
    if (text::iequals_ascii(token, code(s))) return s;
  }
  return std::nullopt;
}

std::string_view code(Category c) {
  switch (c) {
    case Category::kTS: return "TS";
    case Category::kZK: return "ZK";
    case Category::kEK: return "EK";
    case Category::kTB: return "TB";
  }
  return "TS";
}

std::optional<Category> parse_category(std::string_view token) {
  token = text::trim(token);
  for (Category c : {Category::kTS, Category::kZK, Category::kEK, Category::kTB}) {
    if (token == code(c)) return c;
  }
  return std::nullopt;
}

std::string_view code(CatalogSource s) {
  switch (s) {
    case CatalogSource::kEuGpp: return "EU_GPP";
    case CatalogSource::kToolbox: return "TOOLBOX";
    case CatalogSource::kExpert: return "EXPERT";
    case CatalogSource::kGenerated: return "GENERATED";
  }
  return "GENERATED";
}

std::optional<CatalogSource> parse_catalog_source(std::string_view token) {
  token = text::trim(token);
  for (CatalogSource s : {CatalogSource::kEuGpp, CatalogSource::kToolbox,
                          CatalogSource::kExpert, CatalogSource::kGenerated}) {
    if (text::iequals_ascii(token, code(s))) return s;
  }
  return std::nullopt;
}

std::size_t SpcCatalog::distinct_area_count() const {
  std::set<std::string_view> ids;
  for (const auto& row : rows) ids.insert(row.area_id);
  return ids.size();
}

bool ValidationReport::has_error(std::string_view rule_id) const {
  return std::any_of(errors.begin(), errors.end(),
                     [&](const ValidationIssue& e) { return e.rule_id == rule_id; });
}

bool ValidationReport::has_warning(std::string_view rule_id) const {
  return std::any_of(warnings.begin(), warnings.end(),
                     [&](const ValidationWarning& w) { return w.rule_id == rule_id; });
}

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && s.size() <= 9 &&
         std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Splits "<prefix>-<digits>" with a case-insensitive prefix match.
std::optional<std::string_view> digits_after(std::string_view id, std::string_view prefix) {
  if (id.size() <= prefix.size() + 1) return std::nullopt;
  if (!text::iequals_ascii(id.substr(0, prefix.size()), prefix)) return std::nullopt;
  if (id[prefix.size()] != '-') return std::nullopt;
  auto digits = id.substr(prefix.size() + 1);
  if (!all_digits(digits)) return std::nullopt;
  return digits;
}

long to_number(std::string_view digits) {
  long v = 0;
  for (char c : digits) v = v * 10 + (c - '0');
  return v;
}

bool is_host_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c == '-' || c == '.' || c == '_' ||
         static_cast<unsigned char>(c) >= 0x80;
}

}  // namespace

bool is_canonical_area_id(std::string_view id) {
  if (id.size() < 4 || id.substr(0, 3) != "AA-") return false;
  auto digits = id.substr(3);
  return all_digits(digits) && to_number(digits) > 0;
}

bool is_canonical_criterion_id(std::string_view id) {
  if (id.size() < 3 || id.substr(0, 2) != "C-") return false;
  return all_digits(id.substr(2));
}

bool is_absolute_http_url(std::string_view url) {
  std::size_t scheme_len = 0;
  if (url.size() > 7 && text::iequals_ascii(url.substr(0, 7), "http://")) {
    scheme_len = 7;
  } else if (url.size() > 8 && text::iequals_ascii(url.substr(0, 8), "https://")) {
    scheme_len = 8;
  } else {
    return false;
  }
  for (char c : url) {
    if (static_cast<unsigned char>(c) <= 0x20 || c == '"' || c == '<' || c == '>' ||
        c == '\\' || c == '{' || c == '}' || c == '|' || c == '^' || c == '`') {
      return false;
    }
  }
  auto rest = url.substr(scheme_len);
  auto authority = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = authority.rfind('@'); at != std::string_view::npos) {
    authority = authority.substr(at + 1);
  }
  auto host = authority;
  if (auto colon = authority.rfind(':'); colon != std::string_view::npos &&
                                         authority.front() != '[') {
    auto port = authority.substr(colon + 1);
    if (!port.empty() && !all_digits(port)) return false;
    host = authority.substr(0, colon);
  }
  if (host.empty()) return false;
  if (host.front() == '[') return host.back() == ']' && host.size() > 2;
  if (host.front() == '.' || host.front() == '-' || host.back() == '-') return false;
  if (host.find("..") != std::string_view::npos) return false;
  return std::all_of(host.begin(), host.end(), is_host_char);
}

ValidationReport validate_catalog(const SpcCatalog& catalog) {
  ValidationReport report;
  const bool expert = catalog.source == CatalogSource::kExpert;
  std::set<std::string> seen_criteria;
  std::map<std::string, std::string> area_names;
  std::size_t empty_ambition_rows = 0;

  auto error = [&](std::size_t row, std::string_view rule, std::string message) {
    report.errors.push_back({row, std::string(rule), std::move(message)});
  };

  for (std::size_t i = 0; i < catalog.rows.size(); ++i) {
    const SpcRow& row = catalog.rows[i];
    const std::string label = "row " + std::to_string(i);

    const bool area_named = !text::trim(row.area_of_action).empty();
    if (!area_named) error(i, rules::kEmptyArea, label + ": area of action is empty");

    const bool area_id_ok = is_canonical_area_id(row.area_id);
    if (!area_id_ok) {
      error(i, rules::kBadAreaId, label + ": area id '" + row.area_id + "' is not AA-<n>");
    }
    if (!is_canonical_criterion_id(row.criterion_id)) {
      error(i, rules::kBadCriterionId,
            label + ": criterion id '" + row.criterion_id + "' is not C-<nn>");
    } else if (!seen_criteria.insert(row.criterion_id).second) {
      error(i, rules::kDuplicateCriterionId,
            label + ": criterion id '" + row.criterion_id + "' already used");
    }
    if (!parse_category(row.category)) {
      error(i, rules::kBadCategory,
            label + ": category '" + row.category + "' is not one of TS, ZK, EK, TB");
    }
    if (text::trim(row.criterion_text).empty()) {
      error(i, rules::kEmptyCriterion, label + ": criterion text is empty");
    }
    const auto& al = row.ambition;
    if (text::trim(al.basis).empty() || text::trim(al.good_practice).empty() ||
        text::trim(al.exemplary).empty()) {
      if (expert) {
        ++empty_ambition_rows;
      } else {
        error(i, rules::kEmptyAmbition, label + ": an ambition level is empty");
      }
    }
    if (text::trim(row.source_url).empty()) {
      error(i, rules::kMissingSource, label + ": source URL is missing");
    } else if (!is_absolute_http_url(row.source_url)) {
      error(i, rules::kBadSourceUrl,
            label + ": source '" + row.source_url + "' is not an absolute http(s) URL");
    }
    if (area_id_ok && area_named) {
      auto [it, inserted] = area_names.emplace(row.area_id, row.area_of_action);
      if (!inserted && it->second != row.area_of_action) {
        error(i, rules::kAreaNameMismatch,
              label + ": " + row.area_id + " is named '" + row.area_of_action +
                  "' but earlier '" + it->second + "'");
      }
    }
  }

  report.distinct_area_count = catalog.distinct_area_count();
  if (report.distinct_area_count < kMinDistinctAreas) {
    report.warnings.push_back(
        {std::string(rules::kMinAreasWarning),
         std::to_string(report.distinct_area_count) + " distinct areas of action, expected at least " +
             std::to_string(kMinDistinctAreas)});
  }
  if (empty_ambition_rows > 0) {
    report.warnings.push_back({std::string(rules::kEmptyAmbitionWarning),
                               std::to_string(empty_ambition_rows) +
                                   " rows with an empty ambition level"});
  }
  return report;
}

std::string normalize_area_id(std::string_view raw) {
  const auto id = text::trim(raw);
  if (is_canonical_area_id(id)) return std::string(id);
  for (std::string_view prefix : {"HF", "AA"}) {
    if (auto digits = digits_after(id, prefix); digits && to_number(*digits) > 0) {
      return "AA-" + std::to_string(to_number(*digits));
    }
  }
  throw Error(Errc::kUnparseableId, "area id '" + std::string(raw) + "'");
}

std::string normalize_criterion_id(std::string_view raw) {
  const auto id = text::trim(raw);
  if (is_canonical_criterion_id(id)) return std::string(id);
  for (std::string_view prefix : {"K", "C"}) {
    if (auto digits = digits_after(id, prefix)) {
      auto n = std::to_string(to_number(*digits));
      if (n.size() < 2) n.insert(0, 2 - n.size(), '0');
      return "C-" + n;
    }
  }
  throw Error(Errc::kUnparseableId, "criterion id '" + std::string(raw) + "'");
}

SpcCatalog normalize_ids(SpcCatalog catalog) {
  for (auto& row : catalog.rows) {
    row.area_id = normalize_area_id(row.area_id);
    row.criterion_id = normalize_criterion_id(row.criterion_id);
  }
  return catalog;
}

}  // namespace spcgen
