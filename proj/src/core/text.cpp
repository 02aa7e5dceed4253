#include "cfgen/core/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "cfgen/core/errors.hpp"

namespace cfgen {

namespace {

icu::UnicodeString to_nfc_unicode(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(Error::Category::kInternal, "ICU NFC unavailable");
  icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString out = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw Error(Error::Category::kInternal, "NFC normalization failed");
  return out;
}

std::string to_utf8(const icu::UnicodeString& text) {
  std::string out;
  text.toUTF8String(out);
  return out;
}

}  // namespace

std::string nfc(std::string_view text) { return to_utf8(to_nfc_unicode(text)); }

std::string fold_case(std::string_view text) {
  icu::UnicodeString u = to_nfc_unicode(text);
  u.foldCase();
  return to_utf8(u);
}

std::vector<std::string> normalized_word_tokens(std::string_view text) {
  const icu::UnicodeString u = to_nfc_unicode(text);
  std::vector<std::string> words;
  int32_t start = -1;
  int32_t i = 0;
  while (i < u.length()) {
    const UChar32 c = u.char32At(i);
    const int32_t next = u.moveIndex32(i, 1);
    if (u_isUWhiteSpace(c)) {
      if (start >= 0) {
        words.push_back(to_utf8(icu::UnicodeString(u, start, i - start)));
        start = -1;
      }
    } else if (start < 0) {
      start = i;
    }
    i = next;
  }
  if (start >= 0) words.push_back(to_utf8(icu::UnicodeString(u, start, u.length() - start)));
  return words;
}

std::string join_words(std::span<const std::string> words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::string_view trim(std::string_view text) {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

bool occurs_verbatim(std::string_view word, std::string_view text) {
  if (word.empty()) return false;
  return fold_case(text).find(fold_case(word)) != std::string::npos;
}

}  // namespace cfgen
