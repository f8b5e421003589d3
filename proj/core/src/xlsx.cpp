#include "spcgen/xlsx.hpp"

#include <expat.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <unordered_map>

#include "detail/zip.hpp"
#include "spcgen/error.hpp"

namespace spcgen::xlsx {
namespace {

// --- writing ---------------------------------------------------------------

bool is_xml_char(unsigned char c) { return c >= 0x20 || c == '\t' || c == '\n' || c == '\r'; }

// OOXML stores characters XML cannot carry as _xHHHH_; a literal "_x" that
// would be misread is protected by escaping its underscore.
std::string ooxml_escape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    char buf[8];
    if (!is_xml_char(c)) {
      std::snprintf(buf, sizeof buf, "_x%04X_", c);
      out += buf;
    } else if (c == '_' && s.size() - i >= 7 && s[i + 1] == 'x' && s[i + 6] == '_' &&
               std::all_of(s.begin() + i + 2, s.begin() + i + 6,
                           [](char h) { return std::isxdigit(static_cast<unsigned char>(h)); })) {
      out += "_x005F_";
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::string ooxml_unescape(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '_' && s.size() - i >= 7 && s[i + 1] == 'x' && s[i + 6] == '_') {
      const std::string hex(s.substr(i + 2, 4));
      if (std::all_of(hex.begin(), hex.end(),
                      [](char h) { return std::isxdigit(static_cast<unsigned char>(h)); })) {
        const unsigned long cp = std::stoul(hex, nullptr, 16);
        if (cp < 0x80) {
          out += static_cast<char>(cp);
        } else {
          // Only control characters are produced by the writer; others are
          // passed through as UTF-8.
          char32_t c = static_cast<char32_t>(cp);
          if (c < 0x800) {
            out += static_cast<char>(0xC0 | (c >> 6));
            out += static_cast<char>(0x80 | (c & 0x3F));
          } else {
            out += static_cast<char>(0xE0 | (c >> 12));
            out += static_cast<char>(0x80 | ((c >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (c & 0x3F));
          }
        }
        i += 6;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\r': out += "&#13;"; break;
      case '\t': out += "&#9;"; break;
      case '\n': out += "&#10;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr std::string_view kXmlDecl = "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"yes\"?>\n";

std::string content_types() {
  return std::string(kXmlDecl) +
         "<Types xmlns=\"http://schemas.openxmlformats.org/package/2006/content-types\">"
         "<Default Extension=\"rels\" ContentType=\"application/vnd.openxmlformats-package.relationships+xml\"/>"
         "<Default Extension=\"xml\" ContentType=\"application/xml\"/>"
         "<Override PartName=\"/xl/workbook.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.sheet.main+xml\"/>"
         "<Override PartName=\"/xl/worksheets/sheet1.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.worksheet+xml\"/>"
         "<Override PartName=\"/xl/sharedStrings.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.sharedStrings+xml\"/>"
         "<Override PartName=\"/xl/styles.xml\" ContentType=\"application/vnd.openxmlformats-officedocument.spreadsheetml.styles+xml\"/>"
         "<Override PartName=\"/docProps/core.xml\" ContentType=\"application/vnd.openxmlformats-package.core-properties+xml\"/>"
         "</Types>";
}

std::string root_rels() {
  return std::string(kXmlDecl) +
         "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">"
         "<Relationship Id=\"rId1\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument\" Target=\"xl/workbook.xml\"/>"
         "<Relationship Id=\"rId2\" Type=\"http://schemas.openxmlformats.org/package/2006/relationships/metadata/core-properties\" Target=\"docProps/core.xml\"/>"
         "</Relationships>";
}

std::string core_props(const DocumentProperties& p) {
  return std::string(kXmlDecl) +
         "<cp:coreProperties xmlns:cp=\"http://schemas.openxmlformats.org/package/2006/metadata/core-properties\" "
         "xmlns:dc=\"http://purl.org/dc/elements/1.1/\">"
         "<dc:subject>" + xml_escape(p.subject) + "</dc:subject>"
         "<cp:category>" + xml_escape(p.category) + "</cp:category>"
         "</cp:coreProperties>";
}

std::string workbook_xml(std::string_view sheet_name) {
  return std::string(kXmlDecl) +
         "<workbook xmlns=\"http://schemas.openxmlformats.org/spreadsheetml/2006/main\" "
         "xmlns:r=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships\">"
         "<sheets><sheet name=\"" + xml_escape(sheet_name) + "\" sheetId=\"1\" r:id=\"rId1\"/></sheets>"
         "</workbook>";
}

std::string workbook_rels() {
  return std::string(kXmlDecl) +
         "<Relationships xmlns=\"http://schemas.openxmlformats.org/package/2006/relationships\">"
         "<Relationship Id=\"rId1\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/worksheet\" Target=\"worksheets/sheet1.xml\"/>"
         "<Relationship Id=\"rId2\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/sharedStrings\" Target=\"sharedStrings.xml\"/>"
         "<Relationship Id=\"rId3\" Type=\"http://schemas.openxmlformats.org/officeDocument/2006/relationships/styles\" Target=\"styles.xml\"/>"
         "</Relationships>";
}

std::string styles_xml() {
  return std::string(kXmlDecl) +
         "<styleSheet xmlns=\"http://schemas.openxmlformats.org/spreadsheetml/2006/main\">"
         "<fonts count=\"2\"><font><sz val=\"11\"/><name val=\"Calibri\"/></font>"
         "<font><b/><sz val=\"11\"/><name val=\"Calibri\"/></font></fonts>"
         "<fills count=\"2\"><fill><patternFill patternType=\"none\"/></fill>"
         "<fill><patternFill patternType=\"gray125\"/></fill></fills>"
         "<borders count=\"1\"><border><left/><right/><top/><bottom/><diagonal/></border></borders>"
         "<cellStyleXfs count=\"1\"><xf numFmtId=\"0\" fontId=\"0\" fillId=\"0\" borderId=\"0\"/></cellStyleXfs>"
         "<cellXfs count=\"3\">"
         "<xf numFmtId=\"0\" fontId=\"0\" fillId=\"0\" borderId=\"0\" xfId=\"0\"/>"
         "<xf numFmtId=\"0\" fontId=\"1\" fillId=\"0\" borderId=\"0\" xfId=\"0\" applyFont=\"1\"/>"
         "<xf numFmtId=\"0\" fontId=\"0\" fillId=\"0\" borderId=\"0\" xfId=\"0\" applyAlignment=\"1\"><alignment wrapText=\"1\" vertical=\"top\"/></xf>"
         "</cellXfs>"
         "</styleSheet>";
}

// --- reading ---------------------------------------------------------------

std::string_view local_name(const XML_Char* name) {
  std::string_view n(name);
  const auto bar = n.rfind('|');
  return bar == std::string_view::npos ? n : n.substr(bar + 1);
}

const char* attribute(const XML_Char** attrs, std::string_view wanted) {
  for (int i = 0; attrs[i]; i += 2) {
    if (local_name(attrs[i]) == wanted) return attrs[i + 1];
  }
  return nullptr;
}

// Thin expat driver dispatching to callbacks by local element name.
class XmlReader {
 public:
  std::function<void(std::string_view, const XML_Char**)> on_start;
  std::function<void(std::string_view)> on_end;
  std::function<void(std::string_view)> on_text;

  void parse(std::string_view xml, std::string_view part) {
    std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
        XML_ParserCreateNS("UTF-8", '|'), &XML_ParserFree);
    if (!parser) throw Error(Errc::kIo, "cannot create XML parser");
    XML_SetUserData(parser.get(), this);
    XML_SetElementHandler(
        parser.get(),
        [](void* self, const XML_Char* name, const XML_Char** attrs) {
          auto* r = static_cast<XmlReader*>(self);
          if (r->on_start) r->on_start(local_name(name), attrs);
        },
        [](void* self, const XML_Char* name) {
          auto* r = static_cast<XmlReader*>(self);
          if (r->on_end) r->on_end(local_name(name));
        });
    XML_SetCharacterDataHandler(parser.get(), [](void* self, const XML_Char* s, int len) {
      auto* r = static_cast<XmlReader*>(self);
      if (r->on_text) r->on_text(std::string_view(s, static_cast<std::size_t>(len)));
    });
    if (XML_Parse(parser.get(), xml.data(), static_cast<int>(xml.size()), 1) == XML_STATUS_ERROR) {
      throw Error(Errc::kIo, std::string("malformed XML in ") + std::string(part) + ": " +
                                 XML_ErrorString(XML_GetErrorCode(parser.get())));
    }
  }
};

std::string resolve_target(std::string_view base_dir, std::string_view target) {
  if (!target.empty() && target.front() == '/') return std::string(target.substr(1));
  std::string path(base_dir);
  std::string_view t = target;
  while (t.substr(0, 3) == "../") {
    t.remove_prefix(3);
    if (!path.empty()) path.pop_back();
    const auto slash = path.rfind('/');
    path = slash == std::string::npos ? std::string() : path.substr(0, slash + 1);
  }
  return path + std::string(t);
}

std::map<std::string, std::string> read_rels(const std::map<std::string, std::string>& files,
                                             const std::string& part) {
  std::map<std::string, std::string> rels;
  auto it = files.find(part);
  if (it == files.end()) return rels;
  XmlReader reader;
  reader.on_start = [&](std::string_view name, const XML_Char** attrs) {
    if (name != "Relationship") return;
    const char* id = attribute(attrs, "Id");
    const char* target = attribute(attrs, "Target");
    if (id && target) rels[id] = target;
  };
  reader.parse(it->second, part);
  return rels;
}

std::vector<std::string> read_shared_strings(std::string_view xml) {
  std::vector<std::string> strings;
  XmlReader reader;
  bool in_si = false;
  bool in_t = false;
  int phonetic_depth = 0;
  reader.on_start = [&](std::string_view name, const XML_Char**) {
    if (name == "si") {
      in_si = true;
      strings.emplace_back();
    } else if (name == "rPh") {
      ++phonetic_depth;
    } else if (name == "t" && in_si && phonetic_depth == 0) {
      in_t = true;
    }
  };
  reader.on_end = [&](std::string_view name) {
    if (name == "si") in_si = false;
    if (name == "rPh") --phonetic_depth;
    if (name == "t") in_t = false;
  };
  reader.on_text = [&](std::string_view text) {
    if (in_t) strings.back() += text;
  };
  reader.parse(xml, "sharedStrings.xml");
  for (auto& s : strings) s = ooxml_unescape(s);
  return strings;
}

}  // namespace

bool parse_cell_ref(std::string_view ref, std::size_t& row, std::size_t& col) {
  std::size_t i = 0;
  std::size_t c = 0;
  while (i < ref.size() && ref[i] >= 'A' && ref[i] <= 'Z') {
    c = c * 26 + static_cast<std::size_t>(ref[i] - 'A' + 1);
    if (c > 16384) return false;
    ++i;
  }
  if (i == 0 || i == ref.size()) return false;
  std::size_t r = 0;
  for (; i < ref.size(); ++i) {
    if (ref[i] < '0' || ref[i] > '9') return false;
    r = r * 10 + static_cast<std::size_t>(ref[i] - '0');
    if (r > 1048576) return false;
  }
  if (r == 0) return false;
  row = r - 1;
  col = c - 1;
  return true;
}

std::string cell_ref(std::size_t row, std::size_t col) {
  std::string letters;
  std::size_t c = col + 1;
  while (c > 0) {
    letters.insert(letters.begin(), static_cast<char>('A' + (c - 1) % 26));
    c = (c - 1) / 26;
  }
  return letters + std::to_string(row + 1);
}

std::string write_workbook(const Sheet& sheet, const DocumentProperties& properties) {
  std::vector<std::string> shared;
  std::unordered_map<std::string, std::size_t> index;
  std::string cells;
  for (std::size_t r = 0; r < sheet.rows.size(); ++r) {
    cells += "<row r=\"" + std::to_string(r + 1) + "\">";
    for (std::size_t c = 0; c < sheet.rows[r].size(); ++c) {
      const std::string& value = sheet.rows[r][c];
      if (value.empty()) continue;
      auto [it, inserted] = index.emplace(value, shared.size());
      if (inserted) shared.push_back(value);
      const char* style = r < sheet.bold_rows ? "1" : "2";
      cells += "<c r=\"" + cell_ref(r, c) + "\" s=\"" + style + "\" t=\"s\"><v>" +
               std::to_string(it->second) + "</v></c>";
    }
    cells += "</row>";
  }

  std::string sheet_xml = std::string(kXmlDecl) +
                          "<worksheet xmlns=\"http://schemas.openxmlformats.org/spreadsheetml/2006/main\">";
  if (sheet.bold_rows > 0) {
    sheet_xml += "<sheetViews><sheetView workbookViewId=\"0\"><pane ySplit=\"" +
                 std::to_string(sheet.bold_rows) + "\" topLeftCell=\"" + cell_ref(sheet.bold_rows, 0) +
                 "\" activePane=\"bottomLeft\" state=\"frozen\"/></sheetView></sheetViews>";
  }
  sheet_xml += "<sheetData>" + cells + "</sheetData>";
  if (!sheet.merges.empty()) {
    sheet_xml += "<mergeCells count=\"" + std::to_string(sheet.merges.size()) + "\">";
    for (const auto& m : sheet.merges) {
      sheet_xml += "<mergeCell ref=\"" + cell_ref(m.first_row, m.first_col) + ":" +
                   cell_ref(m.last_row, m.last_col) + "\"/>";
    }
    sheet_xml += "</mergeCells>";
  }
  sheet_xml += "</worksheet>";

  std::string sst = std::string(kXmlDecl) +
                    "<sst xmlns=\"http://schemas.openxmlformats.org/spreadsheetml/2006/main\" count=\"" +
                    std::to_string(shared.size()) + "\" uniqueCount=\"" + std::to_string(shared.size()) + "\">";
  for (const auto& s : shared) {
    sst += "<si><t xml:space=\"preserve\">" + xml_escape(ooxml_escape(s)) + "</t></si>";
  }
  sst += "</sst>";

  return detail::zip::write_archive({
      {"[Content_Types].xml", content_types()},
      {"_rels/.rels", root_rels()},
      {"docProps/core.xml", core_props(properties)},
      {"xl/workbook.xml", workbook_xml(sheet.name)},
      {"xl/_rels/workbook.xml.rels", workbook_rels()},
      {"xl/styles.xml", styles_xml()},
      {"xl/sharedStrings.xml", sst},
      {"xl/worksheets/sheet1.xml", sheet_xml},
  });
}

Workbook read_workbook(std::string_view bytes) {
  const auto files = detail::zip::read_archive(bytes);
  Workbook book;

  // Locate the workbook part through the package relationships.
  std::string workbook_part = "xl/workbook.xml";
  for (const auto& [id, target] : read_rels(files, "_rels/.rels")) {
    if (target.find("workbook") != std::string::npos) workbook_part = resolve_target("", target);
  }
  auto wb = files.find(workbook_part);
  if (wb == files.end()) throw Error(Errc::kIo, "workbook part missing; not an XLSX file");
  const std::string base_dir = workbook_part.substr(0, workbook_part.rfind('/') + 1);
  const std::string rels_part = base_dir + "_rels/" + workbook_part.substr(base_dir.size()) + ".rels";
  const auto rels = read_rels(files, rels_part);

  std::optional<std::string> sheet_rid;
  {
    XmlReader reader;
    reader.on_start = [&](std::string_view name, const XML_Char** attrs) {
      if (name != "sheet" || sheet_rid) return;
      if (const char* n = attribute(attrs, "name")) book.sheet.name = n;
      if (const char* id = attribute(attrs, "id")) sheet_rid = id;
    };
    reader.parse(wb->second, workbook_part);
  }
  std::string sheet_part = base_dir + "worksheets/sheet1.xml";
  if (sheet_rid) {
    if (auto it = rels.find(*sheet_rid); it != rels.end()) sheet_part = resolve_target(base_dir, it->second);
  }
  auto sheet_it = files.find(sheet_part);
  if (sheet_it == files.end()) throw Error(Errc::kIo, "worksheet part '" + sheet_part + "' missing");

  std::vector<std::string> shared;
  for (const auto& [id, target] : rels) {
    if (target.find("sharedStrings") == std::string::npos) continue;
    if (auto it = files.find(resolve_target(base_dir, target)); it != files.end()) {
      shared = read_shared_strings(it->second);
    }
  }

  {
    XmlReader reader;
    std::size_t row = 0;
    std::size_t col = 0;
    std::string type;
    std::string value;
    bool capture = false;
    bool have_row = false;
    bool in_inline = false;
    reader.on_start = [&](std::string_view name, const XML_Char** attrs) {
      if (name == "row") {
        const char* r = attribute(attrs, "r");
        row = (r && std::atol(r) > 0) ? static_cast<std::size_t>(std::atol(r)) - 1 : (have_row ? row + 1 : 0);
        have_row = true;
        col = 0;
      } else if (name == "c") {
        const char* ref = attribute(attrs, "r");
        std::size_t rr = 0;
        std::size_t cc = 0;
        if (ref && parse_cell_ref(ref, rr, cc)) {
          row = rr;
          col = cc;
        }
        const char* t = attribute(attrs, "t");
        type = t ? t : "n";
        value.clear();
      } else if (name == "v") {
        capture = true;
      } else if (name == "is") {
        in_inline = true;
      } else if (name == "t" && in_inline) {
        capture = true;
      } else if (name == "rPh") {
        in_inline = false;
      } else if (name == "mergeCell") {
        const char* ref = attribute(attrs, "ref");
        if (!ref) return;
        std::string_view span(ref);
        const auto colon = span.find(':');
        CellRange range;
        if (colon != std::string_view::npos &&
            parse_cell_ref(span.substr(0, colon), range.first_row, range.first_col) &&
            parse_cell_ref(span.substr(colon + 1), range.last_row, range.last_col)) {
          book.sheet.merges.push_back(range);
        }
      }
    };
    reader.on_text = [&](std::string_view text) {
      if (capture) value += text;
    };
    reader.on_end = [&](std::string_view name) {
      if (name == "v" || name == "t") {
        capture = false;
      } else if (name == "is") {
        in_inline = false;
      } else if (name == "c") {
        std::string text;
        if (type == "s") {
          char* end = nullptr;
          const unsigned long idx = std::strtoul(value.c_str(), &end, 10);
          if (end != value.c_str() && idx < shared.size()) text = shared[idx];
        } else if (type == "b") {
          text = value == "1" ? "TRUE" : "FALSE";
        } else if (type == "inlineStr" || type == "str") {
          text = ooxml_unescape(value);
        } else {
          text = value;
        }
        if (row > 1048576 || col > 16384) return;
        auto& rows = book.sheet.rows;
        if (rows.size() <= row) rows.resize(row + 1);
        if (rows[row].size() <= col) rows[row].resize(col + 1);
        rows[row][col] = std::move(text);
        ++col;
      }
    };
    reader.parse(sheet_it->second, sheet_part);
  }

  if (auto core = files.find("docProps/core.xml"); core != files.end()) {
    XmlReader reader;
    std::string* target = nullptr;
    reader.on_start = [&](std::string_view name, const XML_Char**) {
      if (name == "subject") target = &book.properties.subject;
      if (name == "category") target = &book.properties.category;
    };
    reader.on_end = [&](std::string_view) { target = nullptr; };
    reader.on_text = [&](std::string_view text) {
      if (target) *target += text;
    };
    reader.parse(core->second, "docProps/core.xml");
  }
  return book;
}

}  // namespace spcgen::xlsx
