#include "menucsi/text.hpp"

#include <stdexcept>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace menucsi::text {

std::u32string decode(std::string_view utf8) {
  std::u32string out;
  out.reserve(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  const auto n = static_cast<int32_t>(utf8.size());
  int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(s, i, n, c);
    if (c < 0) {
      throw std::invalid_argument("malformed UTF-8 at byte " + std::to_string(i));
    }
    out.push_back(static_cast<char32_t>(c));
  }
  return out;
}

std::string encode(char32_t scalar) {
  return encode(std::u32string_view(&scalar, 1));
}

std::string encode(std::u32string_view scalars) {
  std::string out;
  out.reserve(scalars.size() * 3);
  for (char32_t c : scalars) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool error = false;
    U8_APPEND(buf, len, U8_MAX_LENGTH, static_cast<UChar32>(c), error);
    if (error) {
      throw std::invalid_argument("invalid scalar value");
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
  }
  return out;
}

namespace {

const icu::Normalizer2& nfc_instance() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || norm == nullptr) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  return *norm;
}

icu::UnicodeString to_unicode(std::string_view utf8) {
  // Validates first so that ICU never silently substitutes U+FFFD.
  decode(utf8);
  return icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
}

}  // namespace

std::string nfc(std::string_view utf8) {
  const auto& norm = nfc_instance();
  icu::UnicodeString src = to_unicode(utf8);
  UErrorCode status = U_ZERO_ERROR;
  if (norm.isNormalized(src, status) && U_SUCCESS(status)) {
    return std::string(utf8);
  }
  status = U_ZERO_ERROR;
  icu::UnicodeString dst = norm.normalize(src, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("NFC normalization failed");
  }
  std::string out;
  dst.toUTF8String(out);
  return out;
}

bool is_nfc(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  bool ok = nfc_instance().isNormalized(to_unicode(utf8), status);
  return U_SUCCESS(status) && ok;
}

std::size_t length(std::string_view utf8) {
  return decode(utf8).size();
}

std::string slice(std::string_view utf8, std::size_t start, std::size_t end) {
  const std::u32string s = decode(utf8);
  if (start > end || end > s.size()) {
    throw std::out_of_range("slice [" + std::to_string(start) + ", " + std::to_string(end) +
                            ") outside text of length " + std::to_string(s.size()));
  }
  return encode(std::u32string_view(s).substr(start, end - start));
}

bool is_space(char32_t c) {
  return u_isUWhiteSpace(static_cast<UChar32>(c));
}

bool is_word_char(char32_t c) {
  return u_isalnum(static_cast<UChar32>(c));
}

bool is_han(char32_t c) {
  UErrorCode status = U_ZERO_ERROR;
  return uscript_getScript(static_cast<UChar32>(c), &status) == USCRIPT_HAN && U_SUCCESS(status);
}

bool is_latin(char32_t c) {
  UErrorCode status = U_ZERO_ERROR;
  return uscript_getScript(static_cast<UChar32>(c), &status) == USCRIPT_LATIN && U_SUCCESS(status);
}

std::string trim(std::string_view utf8) {
  const std::u32string s = decode(utf8);
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return encode(std::u32string_view(s).substr(b, e - b));
}

bool has_word_char(std::string_view utf8) {
  for (char32_t c : decode(utf8)) {
    if (is_word_char(c)) return true;
  }
  return false;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

}  // namespace menucsi::text
