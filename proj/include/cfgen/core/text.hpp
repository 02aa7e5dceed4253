#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cfgen {

// Unicode NFC form of UTF-8 text. Invalid UTF-8 sequences become U+FFFD.
std::string nfc(std::string_view text);

// Full Unicode case folding of UTF-8 text (after NFC).
std::string fold_case(std::string_view text);

// The word contract shared by textual similarity, word alignment and
// perturbation: NFC, then split on maximal runs of Unicode white space.
std::vector<std::string> normalized_word_tokens(std::string_view text);

std::string join_words(std::span<const std::string> words);

// Trim Unicode-agnostic ASCII white space from both ends.
std::string_view trim(std::string_view text);

// Case-insensitive substring test on NFC-normalized inputs.
bool occurs_verbatim(std::string_view word, std::string_view text);

}  // namespace cfgen
