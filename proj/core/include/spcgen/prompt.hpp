#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "spcgen/catalog.hpp"

namespace spcgen {

struct PromptSection {
  std::string name;
  std::string body;

  bool operator==(const PromptSection&) const = default;
};

/// A parsed template file. Bodies carry `{name}` placeholders; `{{` and `}}`
/// stand for literal braces.
struct PromptTemplate {
  std::string name;
  std::string version = "0";
  std::string language = "de";
  std::vector<PromptSection> sections;
  std::set<std::string> placeholders;

  const PromptSection* find_section(std::string_view section) const;

  bool operator==(const PromptTemplate&) const = default;
};

/// Sections every generation template must define.
inline constexpr std::array<std::string_view, 5> kGenerationSections{
    "Background", "Problem", "Task", "Requirement", "Inputs"};

/// Parses the template file format:
///
///   # comment
///   name: generation_de
///   version: 1.2
///   language: de
///   == Background ==
///   body text with {placeholders}
///
/// Throws Error(kBadTemplate) on malformed input.
PromptTemplate parse_template(std::string_view text);
PromptTemplate load_template(const std::filesystem::path& path);

/// Templates compiled into the library: generation_de, generation_en,
/// judge_en, judge_de.
std::vector<std::string> bundled_template_names();
PromptTemplate bundled_template(std::string_view name);

/// Bundled template for a name or a file path.
PromptTemplate resolve_template(std::string_view name_or_path);

PromptTemplate default_generation_template(std::string_view language = "de");
PromptTemplate default_judge_template(std::string_view language = "en");

/// Throws Error(kBadTemplate) naming the first missing required section.
void require_generation_sections(const PromptTemplate& tmpl);

/// Placeholder names in order of first appearance.
std::vector<std::string> find_placeholders(std::string_view body);

/// Substitutes placeholders in one pass; substituted values are not
/// rescanned. Throws Error(kUnboundPlaceholder) naming the first unbound one.
std::string render_text(std::string_view body, const std::map<std::string, std::string>& bindings);

/// Renders all sections in template order, each under a `== Name ==` line.
std::string render_template(const PromptTemplate& tmpl,
                            const std::map<std::string, std::string>& bindings);

enum class ReferenceSource { kEuGpp, kToolbox, kExpert, kWeb };

std::string_view code(ReferenceSource s);
std::optional<ReferenceSource> parse_reference_source(std::string_view token);

/// Reference material for grounding. Exactly one of `content` (extracted
/// text, embedded in the prompt) and `provider_file_id` (passed to the
/// provider as an attachment) is set.
struct ReferenceDoc {
  std::string id;
  std::string title;
  ReferenceSource source_tag = ReferenceSource::kEuGpp;
  std::optional<std::string> content;
  std::optional<std::string> provider_file_id;

  bool is_attachment() const { return provider_file_id.has_value(); }

  bool operator==(const ReferenceDoc&) const = default;
};

/// Throws Error(kInvalidArgument) when the one-of or title invariant fails.
void check_reference(const ReferenceDoc& doc);

/// Models known to emit truncated tables; they are sampled repeatedly.
bool is_short_output_model(std::string_view model_id);
std::size_t default_sample_count(std::string_view model_id);

struct GenerationRequest {
  std::optional<Sector> sector;
  PromptTemplate prompt_template = default_generation_template();
  std::vector<ReferenceDoc> references;
  std::optional<SpcCatalog> one_shot_examples;
  std::size_t max_example_rows = 5;
  std::string model_id;
  /// Unset means default_sample_count(model_id).
  std::optional<std::size_t> sample_count;
  std::size_t max_attempts = 5;
  /// Appends the previous attempt's failure to the prompt on retry.
  bool retry_with_feedback = false;
  /// Extra bindings; they override the derived ones.
  std::map<std::string, std::string> variables;

  std::size_t effective_sample_count() const;
};

/// Throws Error(kInvalidArgument) on zero counts or a bad reference.
void check_request(const GenerationRequest& req);

/// Bindings derived from the request: sector, sector_code, min_areas,
/// then `variables`.
std::map<std::string, std::string> generation_bindings(const GenerationRequest& req);

/// Renders the generation prompt: template sections with bindings, then the
/// Inputs section extended by inline references, attachment titles, and the
/// one-shot example table.
std::string build_generation_prompt(const GenerationRequest& req);

/// One-row LaTeX table with the catalog header; parse_latex_table recovers
/// the row.
std::string serialize_row(const SpcRow& row);

std::string build_judge_prompt(const SpcRow& row,
                               const PromptTemplate& tmpl = default_judge_template());

}  // namespace spcgen
