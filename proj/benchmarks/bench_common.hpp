#pragma once

#include <random>
#include <string>

#include "spcgen/catalog.hpp"

namespace spcgen::bench {

inline std::string words(std::mt19937_64& rng, int n) {
  static const char* vocab[] = {"Holz",      "Energie", "Recycling", "Nachweis", "Lieferkette", "Emission",
                                "Verpackung", "Wasser", "Label",     "Zertifikat", "Transport",  "Möbel"};
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += vocab[rng() % 12];
  }
  return out;
}

inline SpcCatalog catalog(std::size_t rows, unsigned seed) {
  std::mt19937_64 rng(seed);
  SpcCatalog c;
  c.sector = Sector::kFN;
  for (std::size_t i = 0; i < rows; ++i) {
    SpcRow r;
    r.area_id = "AA-" + std::to_string(i + 1);
    r.area_of_action = words(rng, 3);
    r.criterion_id = "C-" + std::string(i < 9 ? "0" : "") + std::to_string(i + 1);
    r.category = "TS";
    r.criterion_text = words(rng, 25);
    r.ambition.basis = words(rng, 12);
    r.ambition.good_practice = words(rng, 12);
    r.source_url = "https://example.org/" + std::to_string(i);
    c.rows.push_back(std::move(r));
  }
  return c;
}

}  // namespace spcgen::bench
