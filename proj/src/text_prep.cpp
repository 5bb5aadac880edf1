#include "ctxrescore/text_prep.hpp"

#include <cctype>

namespace ctxrescore {

Ordering parse_ordering(std::string_view name) {
  if (name == "conv" || name == "conversational") return Ordering::kConversational;
  if (name == "spkr" || name == "speaker") return Ordering::kSpeakerConditioned;
  throw ValidationError("unknown ordering '" + std::string(name) + "' (expected conv or spkr)");
}

std::string_view to_string(Ordering ordering) {
  return ordering == Ordering::kConversational ? "conv" : "spkr";
}

std::string normalize_sentence(std::string_view text, const PrepConfig& cfg) {
  std::string out(text);
  while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back()))) out.pop_back();
  if (out.empty()) return out;
  if (cfg.capitalize_first) {
    for (char& c : out) {
      if (std::isalpha(static_cast<unsigned char>(c))) {
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        break;
      }
    }
  }
  if (cfg.add_period) {
    const char last = out.back();
    if (last != '.' && last != '?' && last != '!') out.push_back('.');
  }
  return out;
}

}  // namespace ctxrescore
