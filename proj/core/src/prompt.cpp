#include "spcgen/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "spcgen/error.hpp"
#include "spcgen/table_io.hpp"
#include "spcgen/text.hpp"

namespace spcgen::detail {
std::size_t bundled_template_count();
std::pair<std::string_view, std::string_view> bundled_template(std::size_t i);
}  // namespace spcgen::detail

namespace spcgen {
namespace {

bool ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool ident_char(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }

// Length of a `{name}` token at `i`, or 0.
std::size_t placeholder_at(std::string_view s, std::size_t i) {
  if (s[i] != '{' || i + 1 >= s.size() || !ident_start(s[i + 1])) return 0;
  std::size_t j = i + 2;
  while (j < s.size() && ident_char(s[j])) ++j;
  return j < s.size() && s[j] == '}' ? j + 1 - i : 0;
}

std::optional<std::string> section_header(std::string_view line) {
  line = text::trim(line);
  if (line.size() < 6 || line.substr(0, 2) != "==" || line.substr(line.size() - 2) != "==") {
    return std::nullopt;
  }
  auto name = text::trim(line.substr(2, line.size() - 4));
  if (name.empty()) return std::nullopt;
  return std::string(name);
}

std::string join_trimmed_lines(const std::vector<std::string>& lines) {
  std::size_t first = 0;
  std::size_t last = lines.size();
  while (first < last && text::trim(lines[first]).empty()) ++first;
  while (last > first && text::trim(lines[last - 1]).empty()) --last;
  std::string body;
  for (std::size_t i = first; i < last; ++i) {
    if (i > first) body += '\n';
    body += lines[i];
  }
  return body;
}

struct InputLabels {
  std::string_view references;
  std::string_view attached;
  std::string_view example;
};

InputLabels labels_for(std::string_view language) {
  if (text::iequals_ascii(language, "de")) {
    return {"Referenzdokumente", "angehängte Datei", "Beispiel aus einem Expertenkatalog"};
  }
  return {"Reference documents", "attached file", "Example from an expert catalog"};
}

}  // namespace

const PromptSection* PromptTemplate::find_section(std::string_view section) const {
  for (const auto& s : sections) {
    if (s.name == section) return &s;
  }
  return nullptr;
}

PromptTemplate parse_template(std::string_view input) {
  PromptTemplate tmpl;
  std::vector<std::string> lines;
  {
    std::string current;
    for (char c : input) {
      if (c == '\n') {
        if (!current.empty() && current.back() == '\r') current.pop_back();
        lines.push_back(std::move(current));
        current.clear();
      } else {
        current += c;
      }
    }
    if (!current.empty()) lines.push_back(std::move(current));
  }

  std::size_t i = 0;
  for (; i < lines.size(); ++i) {
    const auto line = text::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    if (section_header(line)) break;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(Errc::kBadTemplate, "line " + std::to_string(i + 1) +
                                          ": expected 'key: value' or a section header");
    }
    const auto key = text::trim(line.substr(0, colon));
    const std::string value(text::trim(line.substr(colon + 1)));
    if (key == "name") {
      tmpl.name = value;
    } else if (key == "version") {
      tmpl.version = value;
    } else if (key == "language") {
      tmpl.language = value;
    } else {
      throw Error(Errc::kBadTemplate, "line " + std::to_string(i + 1) + ": unknown key '" +
                                          std::string(key) + "'");
    }
  }

  std::optional<std::string> current;
  std::vector<std::string> body;
  auto flush = [&] {
    if (!current) return;
    if (tmpl.find_section(*current)) {
      throw Error(Errc::kBadTemplate, "duplicate section '" + *current + "'");
    }
    tmpl.sections.push_back({*current, join_trimmed_lines(body)});
    body.clear();
  };
  for (; i < lines.size(); ++i) {
    if (auto header = section_header(lines[i])) {
      flush();
      current = std::move(header);
    } else {
      body.push_back(lines[i]);
    }
  }
  flush();
  if (tmpl.sections.empty()) throw Error(Errc::kBadTemplate, "template defines no sections");

  for (const auto& s : tmpl.sections) {
    for (auto& p : find_placeholders(s.body)) tmpl.placeholders.insert(std::move(p));
  }
  return tmpl;
}

PromptTemplate load_template(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIo, "cannot open template '" + path.string() + "'");
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto tmpl = parse_template(text);
  if (tmpl.name.empty()) tmpl.name = path.stem().string();
  return tmpl;
}

std::vector<std::string> bundled_template_names() {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < detail::bundled_template_count(); ++i) {
    names.emplace_back(detail::bundled_template(i).first);
  }
  return names;
}

PromptTemplate bundled_template(std::string_view name) {
  for (std::size_t i = 0; i < detail::bundled_template_count(); ++i) {
    const auto [n, body] = detail::bundled_template(i);
    if (n == name) {
      auto tmpl = parse_template(body);
      if (tmpl.name.empty()) tmpl.name = std::string(n);
      return tmpl;
    }
  }
  throw Error(Errc::kNotFound, "no bundled template named '" + std::string(name) + "'");
}

PromptTemplate resolve_template(std::string_view name_or_path) {
  const auto names = bundled_template_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return bundled_template(name_or_path);
  }
  return load_template(std::filesystem::path(std::string(name_or_path)));
}

PromptTemplate default_generation_template(std::string_view language) {
  return bundled_template(text::iequals_ascii(language, "en") ? "generation_en" : "generation_de");
}

PromptTemplate default_judge_template(std::string_view language) {
  return bundled_template(text::iequals_ascii(language, "de") ? "judge_de" : "judge_en");
}

void require_generation_sections(const PromptTemplate& tmpl) {
  for (auto name : kGenerationSections) {
    if (!tmpl.find_section(name)) {
      throw Error(Errc::kBadTemplate, "template '" + tmpl.name + "' lacks section '" +
                                          std::string(name) + "'");
    }
  }
}

std::vector<std::string> find_placeholders(std::string_view body) {
  std::vector<std::string> names;
  for (std::size_t i = 0; i < body.size();) {
    if ((body[i] == '{' || body[i] == '}') && i + 1 < body.size() && body[i + 1] == body[i]) {
      i += 2;
      continue;
    }
    if (const auto len = placeholder_at(body, i)) {
      std::string name(body.substr(i + 1, len - 2));
      if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
      i += len;
      continue;
    }
    ++i;
  }
  return names;
}

std::string render_text(std::string_view body, const std::map<std::string, std::string>& bindings) {
  std::string out;
  out.reserve(body.size());
  for (std::size_t i = 0; i < body.size();) {
    if ((body[i] == '{' || body[i] == '}') && i + 1 < body.size() && body[i + 1] == body[i]) {
      out += body[i];
      i += 2;
      continue;
    }
    if (const auto len = placeholder_at(body, i)) {
      const std::string name(body.substr(i + 1, len - 2));
      auto it = bindings.find(name);
      if (it == bindings.end()) {
        throw Error(Errc::kUnboundPlaceholder, "placeholder {" + name + "} has no value");
      }
      out += it->second;
      i += len;
      continue;
    }
    out += body[i++];
  }
  return out;
}

std::string render_template(const PromptTemplate& tmpl,
                            const std::map<std::string, std::string>& bindings) {
  std::string out;
  for (const auto& section : tmpl.sections) {
    if (!out.empty()) out += "\n\n";
    out += "== " + section.name + " ==\n";
    out += render_text(section.body, bindings);
  }
  out += '\n';
  return out;
}

std::string_view code(ReferenceSource s) {
  switch (s) {
    case ReferenceSource::kEuGpp: return "EU_GPP";
    case ReferenceSource::kToolbox: return "TOOLBOX";
    case ReferenceSource::kExpert: return "EXPERT";
    case ReferenceSource::kWeb: return "WEB";
  }
  return "EU_GPP";
}

std::optional<ReferenceSource> parse_reference_source(std::string_view token) {
  for (auto s : {ReferenceSource::kEuGpp, ReferenceSource::kToolbox, ReferenceSource::kExpert,
                 ReferenceSource::kWeb}) {
    if (text::iequals_ascii(text::trim(token), code(s))) return s;
  }
  if (text::iequals_ascii(text::trim(token), "EU-GPP")) return ReferenceSource::kEuGpp;
  return std::nullopt;
}

void check_reference(const ReferenceDoc& doc) {
  if (text::trim(doc.title).empty()) {
    throw Error(Errc::kInvalidArgument, "reference '" + doc.id + "' has an empty title");
  }
  if (doc.content.has_value() == doc.provider_file_id.has_value()) {
    throw Error(Errc::kInvalidArgument,
                "reference '" + doc.id + "' must carry exactly one of content and provider_file_id");
  }
}

bool is_short_output_model(std::string_view model_id) {
  if (model_id == "gpt-4o") return true;
  // Dated snapshots such as gpt-4o-2024-08-06; gpt-4o-mini is not affected.
  return model_id.size() > 7 && model_id.substr(0, 7) == "gpt-4o-" && model_id[7] >= '0' &&
         model_id[7] <= '9';
}

std::size_t default_sample_count(std::string_view model_id) {
  return is_short_output_model(model_id) ? 10 : 1;
}

std::size_t GenerationRequest::effective_sample_count() const {
  return sample_count.value_or(default_sample_count(model_id));
}

void check_request(const GenerationRequest& req) {
  if (req.effective_sample_count() == 0) throw Error(Errc::kInvalidArgument, "sample_count must be at least 1");
  if (req.max_attempts == 0) throw Error(Errc::kInvalidArgument, "max_attempts must be at least 1");
  for (const auto& ref : req.references) check_reference(ref);
}

std::map<std::string, std::string> generation_bindings(const GenerationRequest& req) {
  std::map<std::string, std::string> bindings;
  if (req.sector) {
    bindings["sector"] = std::string(display_name(*req.sector, req.prompt_template.language));
    bindings["sector_code"] = std::string(code(*req.sector));
  }
  bindings["min_areas"] = std::to_string(kMinDistinctAreas);
  for (const auto& [k, v] : req.variables) bindings[k] = v;
  return bindings;
}

std::string build_generation_prompt(const GenerationRequest& req) {
  const auto& tmpl = req.prompt_template;
  require_generation_sections(tmpl);
  const auto bindings = generation_bindings(req);
  const auto labels = labels_for(tmpl.language);

  std::string inputs;
  auto append_block = [&](const std::string& block) {
    if (!inputs.empty()) inputs += "\n\n";
    inputs += block;
  };
  if (!req.references.empty()) {
    std::string block = std::string(labels.references) + ":";
    for (const auto& ref : req.references) {
      check_reference(ref);
      block += "\n- [" + std::string(code(ref.source_tag)) + "] " + ref.title;
      if (ref.is_attachment()) block += " (" + std::string(labels.attached) + ")";
    }
    append_block(block);
    for (const auto& ref : req.references) {
      if (ref.is_attachment()) continue;
      append_block("--- " + ref.title + " ---\n" + std::string(text::trim(*ref.content)));
    }
  }
  if (req.one_shot_examples && !req.one_shot_examples->rows.empty()) {
    SpcCatalog excerpt = *req.one_shot_examples;
    if (excerpt.rows.size() > req.max_example_rows) excerpt.rows.resize(req.max_example_rows);
    append_block(std::string(labels.example) + ":\n" + render_latex_table(excerpt));
  }

  std::string out;
  for (const auto& section : tmpl.sections) {
    if (!out.empty()) out += "\n\n";
    out += "== " + section.name + " ==\n";
    std::string body = render_text(section.body, bindings);
    if (section.name == "Inputs" && !inputs.empty()) {
      if (!body.empty()) body += "\n\n";
      body += inputs;
    }
    out += body;
  }
  out += '\n';
  return out;
}

std::string serialize_row(const SpcRow& row) {
  SpcCatalog one;
  one.rows.push_back(row);
  one.rows.back().extras.clear();
  return render_latex_table(one);
}

std::string build_judge_prompt(const SpcRow& row, const PromptTemplate& tmpl) {
  return render_template(tmpl, {{"row", serialize_row(row)}});
}

}  // namespace spcgen
