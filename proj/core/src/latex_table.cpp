#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "spcgen/error.hpp"
#include "spcgen/table_io.hpp"
#include "spcgen/text.hpp"

namespace spcgen {
namespace {

using std::size_t;
using std::string;
using std::string_view;

constexpr std::array<string_view, 7> kTabularEnvs{
    "tabular", "tabular*", "tabularx", "tabulary", "longtable", "longtable*", "tblr"};

bool is_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

size_t skip_ws(string_view s, size_t i) {
  while (i < s.size() && is_ws(s[i])) ++i;
  return i;
}

// Index one past the group opened at `i` (s[i] is `open`). Escaped
// delimiters are ignored. Unterminated groups run to the end.
size_t skip_group(string_view s, size_t i, char open, char close) {
  int depth = 0;
  for (; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '\\') {
      ++i;
      continue;
    }
    if (c == open) {
      ++depth;
    } else if (c == close) {
      if (--depth == 0) return i + 1;
    }
  }
  return s.size();
}

size_t skip_optional_arg(string_view s, size_t i) {
  size_t j = skip_ws(s, i);
  if (j < s.size() && s[j] == '[') return skip_group(s, j, '[', ']');
  return i;
}

// Skips one mandatory argument: a brace group, or a single token.
size_t skip_required_arg(string_view s, size_t i) {
  size_t j = skip_ws(s, i);
  if (j >= s.size()) return j;
  if (s[j] == '{') return skip_group(s, j, '{', '}');
  if (s[j] == '\\') {
    ++j;
    while (j < s.size() && is_letter(s[j])) ++j;
    return j;
  }
  return j + 1;
}

// Content of the brace group at `i` (after whitespace), or empty.
string_view group_content(string_view s, size_t i, size_t* end = nullptr) {
  size_t j = skip_ws(s, i);
  if (j >= s.size() || s[j] != '{') {
    if (end) *end = i;
    return {};
  }
  const size_t close = skip_group(s, j, '{', '}');
  if (end) *end = close;
  const size_t stop = (close > j + 1 && close <= s.size() && s[close - 1] == '}') ? close - 1 : close;
  return s.substr(j + 1, stop - (j + 1));
}

struct Accent {
  char mark;
  char base;
  char32_t result;
};

constexpr Accent kAccents[] = {
    {'"', 'a', U'ä'}, {'"', 'o', U'ö'}, {'"', 'u', U'ü'}, {'"', 'A', U'Ä'},
    {'"', 'O', U'Ö'}, {'"', 'U', U'Ü'}, {'"', 'e', U'ë'}, {'"', 'i', U'ï'},
    {'\'', 'e', U'é'}, {'\'', 'a', U'á'}, {'\'', 'o', U'ó'}, {'\'', 'E', U'É'},
    {'`', 'e', U'è'}, {'`', 'a', U'à'}, {'^', 'e', U'ê'}, {'^', 'a', U'â'},
    {'^', 'o', U'ô'}, {'^', 'i', U'î'}, {'~', 'n', U'ñ'}, {'c', 'c', U'ç'},
};

const std::map<string_view, string_view>& symbol_commands() {
  static const std::map<string_view, string_view> m{
      {"textbackslash", "\\"}, {"textasciitilde", "~"}, {"textasciicircum", "^"},
      {"textbar", "|"},        {"textless", "<"},        {"textgreater", ">"},
      {"textunderscore", "_"}, {"textdollar", "$"},      {"textpercent", "%"},
      {"ss", "ß"},             {"SS", "SS"},             {"euro", "€"},
      {"texteuro", "€"},       {"EUR", "€"},             {"ldots", "..."},
      {"dots", "..."},         {"textellipsis", "..."},  {"textendash", "–"},
      {"textemdash", "—"},     {"geq", "≥"},             {"ge", "≥"},
      {"leq", "≤"},            {"le", "≤"},              {"times", "×"},
      {"pm", "±"},             {"approx", "≈"},          {"cdot", "·"},
      {"textdegree", "°"},     {"degree", "°"},          {"circ", "°"},
      {"newline", " "},        {"linebreak", " "},       {"par", " "},
      {"quad", " "},           {"qquad", " "},           {"LaTeX", "LaTeX"},
      {"TeX", "TeX"},          {"textquotedblleft", "\""}, {"textquotedblright", "\""},
  };
  return m;
}

// Commands whose arguments are dropped entirely: name -> (optional args
// before, mandatory args).
struct DropSpec {
  int optional_args;
  int required_args;
};

const std::map<string_view, DropSpec>& dropped_commands() {
  static const std::map<string_view, DropSpec> m{
      {"label", {0, 1}},     {"cite", {1, 1}},      {"ref", {0, 1}},
      {"footnote", {1, 1}},  {"cellcolor", {1, 1}}, {"rowcolor", {1, 1}},
      {"color", {1, 1}},     {"hspace", {0, 1}},    {"vspace", {0, 1}},
      {"rule", {1, 2}},      {"caption", {1, 1}},   {"hline", {0, 0}},
      {"toprule", {1, 0}},   {"midrule", {1, 0}},   {"bottomrule", {1, 0}},
      {"cline", {0, 1}},     {"specialrule", {0, 3}}, {"addlinespace", {1, 0}},
      {"endhead", {0, 0}},   {"endfirsthead", {0, 0}}, {"endfoot", {0, 0}},
      {"endlastfoot", {0, 0}}, {"morecmidrules", {0, 0}}, {"centering", {0, 0}},
      {"raggedright", {0, 0}}, {"raggedleft", {0, 0}}, {"arraybackslash", {0, 0}},
      {"noindent", {0, 0}},  {"small", {0, 0}},     {"footnotesize", {0, 0}},
      {"scriptsize", {0, 0}}, {"tiny", {0, 0}},     {"normalsize", {0, 0}},
      {"large", {0, 0}},     {"Large", {0, 0}},     {"bfseries", {0, 0}},
      {"itshape", {0, 0}},   {"ttfamily", {0, 0}},  {"normalfont", {0, 0}},
      {"strut", {0, 0}},     {"selectfont", {0, 0}}, {"fontsize", {0, 2}},
      {"setlength", {0, 2}}, {"renewcommand", {0, 2}}, {"arraystretch", {0, 0}},
  };
  return m;
}

// Skips `\cmidrule(lr){3-5}` style trimming specs.
size_t skip_cmidrule(string_view s, size_t i) {
  size_t j = skip_ws(s, i);
  if (j < s.size() && s[j] == '(') j = skip_group(s, j, '(', ')');
  return skip_required_arg(s, j);
}

class TextConverter {
 public:
  explicit TextConverter(string_view s) : s_(s) {}

  string run() {
    size_t i = 0;
    while (i < s_.size()) i = step(i);
    return text::collapse_whitespace(out_);
  }

 private:
  size_t step(size_t i) {
    const char c = s_[i];
    switch (c) {
      case '\\':
        return command(i);
      case '{':
      case '}':
        return i + 1;
      case '$':
        math_ = !math_;
        return i + 1;
      case '~':
        out_ += ' ';
        return i + 1;
      case '^':
      case '_':
        if (!math_) out_ += c;
        return i + 1;
      case '\n':
      case '\r':
      case '\t':
        out_ += ' ';
        return i + 1;
      default:
        out_ += c;
        return i + 1;
    }
  }

  size_t command(size_t i) {
    if (i + 1 >= s_.size()) return i + 1;
    const char next = s_[i + 1];
    if (!is_letter(next)) return control_symbol(i + 1);
    size_t j = i + 1;
    while (j < s_.size() && is_letter(s_[j])) ++j;
    const string_view name = s_.substr(i + 1, j - i - 1);
    if (j < s_.size() && s_[j] == '*') ++j;

    if (name == "c" && j < s_.size()) return accent('c', j);
    if (auto it = symbol_commands().find(name); it != symbol_commands().end()) {
      out_ += it->second;
      return skip_ws(s_, j);
    }
    if (auto it = dropped_commands().find(name); it != dropped_commands().end()) {
      for (int k = 0; k < it->second.optional_args; ++k) j = skip_optional_arg(s_, j);
      for (int k = 0; k < it->second.required_args; ++k) j = skip_required_arg(s_, j);
      return j;
    }
    if (name == "cmidrule") return skip_cmidrule(s_, j);
    if (name == "multirow") {
      j = skip_optional_arg(s_, j);
      j = skip_required_arg(s_, j);  // rows
      j = skip_optional_arg(s_, j);  // bigstruts
      j = skip_required_arg(s_, j);  // width
      return skip_optional_arg(s_, j);  // fixup
    }
    if (name == "multicolumn") {
      j = skip_required_arg(s_, j);
      return skip_required_arg(s_, j);
    }
    if (name == "makecell" || name == "shortstack" || name == "parbox") {
      j = skip_optional_arg(s_, j);
      if (name == "parbox") j = skip_required_arg(s_, j);
      return j;
    }
    if (name == "href") return skip_required_arg(s_, j);
    if (name == "textcolor" || name == "colorbox") {
      j = skip_optional_arg(s_, j);
      return skip_required_arg(s_, j);
    }
    if (name == "tabularnewline") {
      out_ += ' ';
      return j;
    }
    // Unknown or formatting command: drop the name, keep its arguments.
    return skip_ws(s_, j);
  }

  // `pos` indexes the character after the backslash.
  size_t control_symbol(size_t pos) {
    const char c = s_[pos];
    switch (c) {
      case '%':
      case '&':
      case '_':
      case '#':
      case '$':
      case '{':
      case '}':
        out_ += c;
        return pos + 1;
      case ' ':
      case ',':
      case ';':
      case ':':
      case '\n':
        out_ += ' ';
        return pos + 1;
      case '\\': {
        out_ += ' ';
        size_t j = pos + 1;
        if (j < s_.size() && s_[j] == '*') ++j;
        return skip_optional_arg(s_, j);
      }
      case '"':
      case '\'':
      case '`':
      case '^':
      case '~':
        return accent(c, pos + 1);
      default:
        return pos + 1;  // \- \! \@ \/ and friends
    }
  }

  // Accent command: base letter directly, in braces, or after a space.
  size_t accent(char mark, size_t j) {
    size_t k = j;
    if (mark == 'c') k = skip_ws(s_, k);
    bool braced = false;
    if (k < s_.size() && s_[k] == '{') {
      braced = true;
      ++k;
    }
    if (k >= s_.size() || !is_letter(s_[k])) return braced ? k : j;
    const char base = s_[k];
    ++k;
    if (braced && k < s_.size() && s_[k] == '}') ++k;
    char32_t result = static_cast<unsigned char>(base);
    for (const auto& a : kAccents) {
      if (a.mark == mark && a.base == base) result = a.result;
    }
    text::append_utf8(out_, result);
    return k;
  }

  string_view s_;
  string out_;
  bool math_ = false;
};

// Removes comments. A `%` counts as a comment only when nothing printable
// precedes it on the line or it follows a row terminator; elsewhere model
// output uses raw percent signs in prose ("70% of the wood").
string strip_comments(string_view s) {
  string out;
  out.reserve(s.size());
  size_t line_start = 0;
  while (line_start <= s.size()) {
    size_t line_end = s.find('\n', line_start);
    if (line_end == string_view::npos) line_end = s.size();
    string_view line = s.substr(line_start, line_end - line_start);
    size_t cut = line.size();
    for (size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '\\') {
        ++i;
        continue;
      }
      if (line[i] != '%') continue;
      const string_view before = text::trim(line.substr(0, i));
      const bool after_terminator = before.size() >= 2 && before.substr(before.size() - 2) == "\\\\";
      if (before.empty() || after_terminator || latex_to_text(before).empty()) {
        cut = i;
        break;
      }
    }
    out.append(line.substr(0, cut));
    if (line_end < s.size()) out.push_back('\n');
    line_start = line_end + 1;
  }
  return out;
}

struct Environment {
  string_view body;
};

std::optional<Environment> find_first_tabular(string_view s) {
  size_t best = string_view::npos;
  string_view best_env;
  size_t pos = 0;
  while ((pos = s.find("\\begin", pos)) != string_view::npos) {
    size_t j = skip_ws(s, pos + 6);
    if (j < s.size() && s[j] == '{') {
      const size_t close = s.find('}', j);
      if (close != string_view::npos) {
        const string_view env = text::trim(s.substr(j + 1, close - j - 1));
        if (std::find(kTabularEnvs.begin(), kTabularEnvs.end(), env) != kTabularEnvs.end()) {
          best = close + 1;
          best_env = env;
          break;
        }
      }
    }
    pos += 6;
  }
  if (best == string_view::npos) return std::nullopt;

  size_t j = best;
  const bool has_width = best_env == "tabular*" || best_env == "tabularx" || best_env == "tabulary";
  if (has_width) j = skip_required_arg(s, j);
  j = skip_optional_arg(s, j);
  j = skip_required_arg(s, j);  // column spec
  if (j > s.size()) j = s.size();

  const string end_tag_a = "\\end{" + string(best_env) + "}";
  size_t end = s.find(end_tag_a, j);
  if (end == string_view::npos) end = s.size();
  return Environment{s.substr(j, end - j)};
}

// Splits at depth-0 row terminators (`\\`, `\tabularnewline`).
std::vector<string_view> split_rows(string_view body) {
  std::vector<string_view> rows;
  int depth = 0;
  size_t start = 0;
  size_t i = 0;
  while (i < body.size()) {
    const char c = body[i];
    if (c == '\\') {
      if (i + 1 < body.size() && body[i + 1] == '\\') {
        if (depth == 0) {
          rows.push_back(body.substr(start, i - start));
          size_t j = i + 2;
          if (j < body.size() && body[j] == '*') ++j;
          j = skip_optional_arg(body, j);
          start = i = j;
          continue;
        }
        i += 2;
        continue;
      }
      constexpr string_view kNewline = "\\tabularnewline";
      if (depth == 0 && body.substr(i, kNewline.size()) == kNewline) {
        rows.push_back(body.substr(start, i - start));
        start = i = i + kNewline.size();
        continue;
      }
      i += 2;
      continue;
    }
    if (c == '{') ++depth;
    if (c == '}' && depth > 0) --depth;
    ++i;
  }
  rows.push_back(body.substr(start));
  return rows;
}

std::vector<string_view> split_cells(string_view row) {
  std::vector<string_view> cells;
  int depth = 0;
  size_t start = 0;
  for (size_t i = 0; i < row.size(); ++i) {
    const char c = row[i];
    if (c == '\\') {
      ++i;
      continue;
    }
    if (c == '{') ++depth;
    if (c == '}' && depth > 0) --depth;
    if (c == '&' && depth == 0) {
      cells.push_back(row.substr(start, i - start));
      start = i + 1;
    }
  }
  cells.push_back(row.substr(start));
  return cells;
}

struct Cell {
  string text;
  string_view raw;
  int span = 1;  // multirow rows; negative spans extend upward
};

// Reads a leading `\name` at the start of trimmed `raw`.
bool starts_with_command(string_view raw, string_view name, size_t* after) {
  const string_view t = text::trim(raw);
  if (t.size() <= name.size() || t[0] != '\\' || t.substr(1, name.size()) != name) return false;
  const size_t j = 1 + name.size();
  if (j < t.size() && is_letter(t[j])) return false;
  *after = static_cast<size_t>(t.data() - raw.data()) + j;
  return true;
}

int parse_span(string_view arg) {
  const string buf(text::trim(arg));
  char* end = nullptr;
  const double v = std::strtod(buf.c_str(), &end);
  if (end == buf.c_str() || !std::isfinite(v)) return 1;
  const double clamped = std::clamp(v, -1000.0, 1000.0);
  const int n = static_cast<int>(clamped);
  return n == 0 ? 1 : n;
}

// Expands one raw cell; multicolumn yields placeholder cells.
void expand_cell(string_view raw, std::vector<Cell>& out) {
  size_t after = 0;
  if (starts_with_command(raw, "multicolumn", &after)) {
    size_t end = after;
    const string_view count = group_content(raw, after, &end);
    const int n = std::clamp(parse_span(count), 1, 64);
    out.push_back({latex_to_text(raw), raw, 1});
    for (int k = 1; k < n; ++k) out.push_back({string(), string_view(), 1});
    return;
  }
  Cell cell{latex_to_text(raw), raw, 1};
  if (starts_with_command(raw, "multirow", &after)) {
    const size_t j = skip_optional_arg(raw, after);
    cell.span = parse_span(group_content(raw, j));
  }
  out.push_back(std::move(cell));
}

string extract_url(string_view raw) {
  for (string_view cmd : {"\\url", "\\href"}) {
    const size_t at = raw.find(cmd);
    if (at == string_view::npos) continue;
    const size_t after = at + cmd.size();
    if (after < raw.size() && is_letter(raw[after])) continue;
    return latex_to_text(group_content(raw, after));
  }
  return latex_to_text(raw);
}

bool is_blank_row(string_view row) {
  return text::trim(latex_to_text(row)).empty() &&
         row.find('&') == string_view::npos;
}

}  // namespace

string latex_to_text(string_view latex) { return TextConverter(latex).run(); }

string latex_escape(string_view in) {
  string out;
  out.reserve(in.size() + 8);
  for (char c : in) {
    switch (c) {
      case '\\': out += "\\textbackslash{}"; break;
      case '{': out += "\\{"; break;
      case '}': out += "\\}"; break;
      case '&': out += "\\&"; break;
      case '%': out += "\\%"; break;
      case '$': out += "\\$"; break;
      case '#': out += "\\#"; break;
      case '_': out += "\\_"; break;
      case '~': out += "\\textasciitilde{}"; break;
      case '^': out += "\\textasciicircum{}"; break;
      case '\n':
      case '\r':
      case '\t': out += ' '; break;
      default: out += c;
    }
  }
  return out;
}

string render_latex_table(const SpcCatalog& catalog, bool include_source) {
  const size_t columns = include_source ? 9 : 8;
  string out = include_source ? "\\begin{tabular}{lcllp{6cm}p{4cm}p{4cm}p{4cm}l}\n"
                              : "\\begin{tabular}{lcllp{6cm}p{4cm}p{4cm}p{4cm}}\n";
  out += "\\toprule\n";
  for (size_t c = 0; c < columns; ++c) {
    out += "\\textbf{";
    out += kCatalogHeader[c];
    out += c + 1 < columns ? "} & " : "} \\\\\n";
  }
  out += "\\midrule\n";
  for (const auto& row : catalog.rows) {
    const std::array<const string*, 9> cells{
        &row.area_of_action,        &row.area_id,
        &row.criterion_id,          &row.category,
        &row.criterion_text,        &row.ambition.basis,
        &row.ambition.good_practice, &row.ambition.exemplary,
        &row.source_url};
    for (size_t c = 0; c < columns; ++c) {
      out += latex_escape(*cells[c]);
      out += c + 1 < columns ? " & " : " \\\\\n";
    }
  }
  out += "\\bottomrule\n\\end{tabular}\n";
  return out;
}

TableParseResult parse_latex_table(string_view input, Sector sector, CatalogSource source) {
  const auto env = find_first_tabular(input);
  if (!env) throw Error(Errc::kNoTable, "no tabular environment found");

  const string body = strip_comments(env->body);
  const auto raw_rows = split_rows(body);

  TableParseResult result;
  result.catalog.sector = sector;
  result.catalog.source = source;

  std::vector<string> header;
  struct SpanState {
    string value;
    int remaining = 0;
  };
  std::vector<SpanState> spans;
  // Catalog row index per column for upward (negative) multirow fills.
  size_t body_index = 0;

  for (string_view raw_row : raw_rows) {
    if (is_blank_row(raw_row)) continue;

    std::vector<Cell> cells;
    for (string_view raw_cell : split_cells(raw_row)) expand_cell(raw_cell, cells);

    if (header.empty()) {
      if (cells.size() != 9 && cells.size() != 8) {
        throw Error(Errc::kBadHeader, "expected 9 (or 8) columns, header has " +
                                          std::to_string(cells.size()));
      }
      for (auto& c : cells) header.push_back(c.text);
      spans.assign(cells.size(), {});
      result.has_source_column = cells.size() == 9;
      continue;
    }

    const bool repeated_header =
        cells.size() == header.size() &&
        std::equal(cells.begin(), cells.end(), header.begin(),
                   [](const Cell& c, const string& h) { return c.text == h; });
    if (repeated_header) continue;

    const size_t index = body_index++;
    if (cells.size() != header.size()) {
      result.diagnostics.row_failures.push_back(
          {index, "row " + std::to_string(index) + ": expected " + std::to_string(header.size()) +
                      " cells, found " + std::to_string(cells.size())});
      continue;
    }

    for (size_t c = 0; c < cells.size(); ++c) {
      Cell& cell = cells[c];
      if (cell.span > 1) {
        spans[c] = {cell.text, cell.span - 1};
      } else if (cell.span < -1) {
        // Content sits at the bottom of the span; fill rows above.
        const size_t up = static_cast<size_t>(-cell.span - 1);
        auto& rows = result.catalog.rows;
        for (size_t k = 0; k < up && k < rows.size(); ++k) {
          SpcRow& prev = rows[rows.size() - 1 - k];
          std::array<string*, 9> fields{
              &prev.area_of_action, &prev.area_id, &prev.criterion_id,
              &prev.category, &prev.criterion_text, &prev.ambition.basis,
              &prev.ambition.good_practice, &prev.ambition.exemplary,
              &prev.source_url};
          if (fields[c]->empty()) *fields[c] = cell.text;
        }
        spans[c].remaining = 0;
      } else if (cell.text.empty() && spans[c].remaining > 0) {
        cell.text = spans[c].value;
        --spans[c].remaining;
      } else {
        spans[c].remaining = 0;
      }
    }

    SpcRow row;
    row.area_of_action = cells[0].text;
    row.area_id = cells[1].text;
    row.criterion_id = cells[2].text;
    row.category = cells[3].text;
    row.criterion_text = cells[4].text;
    row.ambition.basis = cells[5].text;
    row.ambition.good_practice = cells[6].text;
    row.ambition.exemplary = cells[7].text;
    if (cells.size() == 9) {
      row.source_url = cells[8].raw.empty() ? cells[8].text : extract_url(cells[8].raw);
      if (row.source_url.empty()) row.source_url = cells[8].text;
    }
    result.catalog.rows.push_back(std::move(row));
    ++result.diagnostics.rows_parsed;
  }

  if (header.empty()) throw Error(Errc::kBadHeader, "tabular has no header row");
  return result;
}

}  // namespace spcgen
