#include "logsieve/tokenizer.hpp"

#include <fstream>
#include <istream>
#include <regex>

#include <json.hpp>

namespace logsieve {

const char* to_string(LogClass c) {
  switch (c) {
    case LogClass::kInformation: return "normal";
    case LogClass::kOperationError: return "operation";
    case LogClass::kSystemError: return "system";
  }
  return "?";
}

std::optional<LogClass> log_class_from_string(const std::string& s) {
  if (s == "normal") return LogClass::kInformation;
  if (s == "operation") return LogClass::kOperationError;
  if (s == "system") return LogClass::kSystemError;
  return std::nullopt;
}

namespace tok {
namespace {

inline bool is_space_b(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' ||
         c == '\f';
}
inline bool is_digit_b(unsigned char c) { return c >= '0' && c <= '9'; }
inline bool is_alpha_b(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_hex_b(unsigned char c) {
  return is_digit_b(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}
inline bool is_hex_alpha_b(unsigned char c) {
  return (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}
// Identifier bytes: ASCII alnum, underscore, and all high bytes (UTF-8).
inline bool is_ident_b(unsigned char c) {
  return is_digit_b(c) || is_alpha_b(c) || c == '_' || c >= 0x80;
}
inline char lower_b(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                : static_cast<char>(c);
}

// A value span must end where identifier bytes stop, otherwise it is part
// of a larger identifier ("48213xyz" stays a word).
inline bool ends_at(const std::string& s, std::size_t pos) {
  return pos >= s.size() || !is_ident_b(static_cast<unsigned char>(s[pos]));
}

std::size_t count_digits(const std::string& s, std::size_t i,
                         std::size_t max_run) {
  std::size_t n = 0;
  while (i + n < s.size() && n < max_run &&
         is_digit_b(static_cast<unsigned char>(s[i + n])))
    ++n;
  return n;
}

// yyyy-mm-dd or yyyy/mm/dd, same separator on both sides. Returns length
// consumed or 0. End boundary is checked by the caller because a trailing
// 'T' may glue an ISO time onto the date.
std::size_t parse_date(const std::string& s, std::size_t i) {
  if (count_digits(s, i, 5) != 4) return 0;
  std::size_t p = i + 4;
  if (p >= s.size() || (s[p] != '-' && s[p] != '/')) return 0;
  const char sep = s[p++];
  std::size_t d = count_digits(s, p, 3);
  if (d < 1 || d > 2) return 0;
  p += d;
  if (p >= s.size() || s[p] != sep) return 0;
  ++p;
  d = count_digits(s, p, 3);
  if (d < 1 || d > 2) return 0;
  return p + d - i;
}

// hh:mm:ss with optional .fraction or ,fraction and optional trailing Z.
std::size_t parse_time(const std::string& s, std::size_t i) {
  std::size_t d = count_digits(s, i, 3);
  if (d < 1 || d > 2) return 0;
  std::size_t p = i + d;
  for (int part = 0; part < 2; ++part) {
    if (p >= s.size() || s[p] != ':') return 0;
    ++p;
    if (count_digits(s, p, 3) != 2) return 0;
    p += 2;
  }
  if (p < s.size() && (s[p] == '.' || s[p] == ',')) {
    std::size_t f = count_digits(s, p + 1, 10);
    if (f >= 1 && f <= 9) p += 1 + f;
  }
  if (p < s.size() && (s[p] == 'Z' || s[p] == 'z')) ++p;
  if (!ends_at(s, p)) return 0;
  return p - i;
}

std::size_t parse_ip(const std::string& s, std::size_t i) {
  std::size_t p = i;
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p >= s.size() || s[p] != '.') return 0;
      ++p;
    }
    std::size_t d = count_digits(s, p, 4);
    if (d < 1 || d > 3) return 0;
    p += d;
  }
  if (!ends_at(s, p)) return 0;
  return p - i;
}

// 0x-prefixed hex of any length, or a bare hex run of length >= 4 mixing
// digits and letters. Pure-letter runs stay words so that ordinary terms
// like "cafe" or "decade" are not swallowed.
std::size_t parse_hex(const std::string& s, std::size_t i) {
  if (s[i] == '0' && i + 1 < s.size() && (s[i + 1] == 'x' || s[i + 1] == 'X')) {
    std::size_t p = i + 2;
    while (p < s.size() && is_hex_b(static_cast<unsigned char>(s[p]))) ++p;
    if (p > i + 2 && ends_at(s, p)) return p - i;
    return 0;
  }
  std::size_t p = i;
  bool digit = false, alpha = false;
  while (p < s.size() && is_hex_b(static_cast<unsigned char>(s[p]))) {
    if (is_digit_b(static_cast<unsigned char>(s[p]))) digit = true;
    else alpha = true;
    ++p;
  }
  if (p - i >= 4 && digit && alpha && ends_at(s, p)) return p - i;
  return 0;
}

std::size_t parse_num(const std::string& s, std::size_t i) {
  std::size_t d = count_digits(s, i, s.size());
  if (d == 0) return 0;
  std::size_t p = i + d;
  if (p + 1 < s.size() && s[p] == '.' &&
      is_digit_b(static_cast<unsigned char>(s[p + 1]))) {
    std::size_t f = count_digits(s, p + 1, s.size());
    p += 1 + f;
  }
  if (!ends_at(s, p)) return 0;
  return p - i;
}

// <name> spans are atomic so placeholders survive re-tokenization.
std::size_t parse_placeholder(const std::string& s, std::size_t i) {
  if (i >= s.size() || s[i] != '<') return 0;
  std::size_t p = i + 1;
  if (p >= s.size() || !(s[p] >= 'a' && s[p] <= 'z')) return 0;
  ++p;
  while (p < s.size() &&
         ((s[p] >= 'a' && s[p] <= 'z') || is_digit_b(s[p]) || s[p] == '_'))
    ++p;
  if (p < s.size() && s[p] == '>') return p + 1 - i;
  return 0;
}

// Valid UTF-8 sequence length at i, or 0. Rejects overlongs, surrogates
// and values past U+10FFFF.
std::size_t utf8_len(const std::string& s, std::size_t i) {
  const auto b = [&](std::size_t k) -> unsigned {
    return static_cast<unsigned char>(s[i + k]);
  };
  unsigned b0 = b(0);
  if (b0 < 0x80) return 1;
  std::size_t need;
  unsigned lo = 0x80, hi = 0xBF;
  if (b0 >= 0xC2 && b0 <= 0xDF) need = 1;
  else if (b0 >= 0xE0 && b0 <= 0xEF) {
    need = 2;
    if (b0 == 0xE0) lo = 0xA0;
    if (b0 == 0xED) hi = 0x9F;
  } else if (b0 >= 0xF0 && b0 <= 0xF4) {
    need = 3;
    if (b0 == 0xF0) lo = 0x90;
    if (b0 == 0xF4) hi = 0x8F;
  } else {
    return 0;
  }
  if (i + need >= s.size()) return 0;
  for (std::size_t k = 1; k <= need; ++k) {
    unsigned bk = b(k);
    unsigned klo = (k == 1) ? lo : 0x80, khi = (k == 1) ? hi : 0xBF;
    if (bk < klo || bk > khi) return 0;
  }
  return need + 1;
}

constexpr const char* kReplacementChar = "\xEF\xBF\xBD";  // U+FFFD

// Consumes an identifier starting at i: alnum/underscore/UTF-8 runs,
// '.' joins two identifier characters. Lowercases ASCII; invalid UTF-8
// bytes are replaced with U+FFFD.
std::string scan_identifier(const std::string& s, std::size_t& i) {
  std::string out;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (c >= 0x80) {
      std::size_t len = utf8_len(s, i);
      if (len == 0) {
        out += kReplacementChar;
        ++i;
      } else {
        out.append(s, i, len);
        i += len;
      }
    } else if (is_ident_b(c)) {
      out += lower_b(c);
      ++i;
    } else if (c == '.' && !out.empty() && i + 1 < s.size() &&
               is_ident_b(static_cast<unsigned char>(s[i + 1]))) {
      out += '.';
      ++i;
    } else {
      break;
    }
  }
  return out;
}

// The splitting pass shared by both rule paths. detect_values enables the
// built-in value patterns; the custom-regex path has already substituted
// its placeholders and only needs splitting.
void scan_line(const std::string& s, bool detect_values,
               std::size_t max_tokens, std::vector<std::string>& tokens) {
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n && tokens.size() <= max_tokens) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (is_space_b(c)) {
      ++i;
      continue;
    }
    if (c == '<') {
      if (std::size_t len = parse_placeholder(s, i)) {
        tokens.push_back(s.substr(i, len));
        i += len;
        continue;
      }
    }
    if (detect_values && is_digit_b(c)) {
      if (std::size_t len = parse_date(s, i)) {
        // A 'T' glue joins an ISO timestamp: <date> then <time>.
        if (ends_at(s, i + len)) {
          tokens.push_back("<date>");
          i += len;
          continue;
        }
        if (s[i + len] == 'T' || s[i + len] == 't') {
          if (std::size_t tlen = parse_time(s, i + len + 1)) {
            tokens.push_back("<date>");
            tokens.push_back("<time>");
            i += len + 1 + tlen;
            continue;
          }
        }
      }
      if (std::size_t len = parse_time(s, i)) {
        tokens.push_back("<time>");
        i += len;
        continue;
      }
      if (std::size_t len = parse_ip(s, i)) {
        tokens.push_back("<ip>");
        i += len;
        continue;
      }
      if (std::size_t len = parse_hex(s, i)) {
        tokens.push_back("<hex>");
        i += len;
        continue;
      }
      if (std::size_t len = parse_num(s, i)) {
        tokens.push_back("<num>");
        i += len;
        continue;
      }
    } else if (detect_values && is_hex_alpha_b(c)) {
      if (std::size_t len = parse_hex(s, i)) {
        tokens.push_back("<hex>");
        i += len;
        continue;
      }
    }
    if (is_ident_b(c)) {
      tokens.push_back(scan_identifier(s, i));
      continue;
    }
    ++i;  // punctuation / control byte: boundary only
  }
}

}  // namespace

NormalizationRules NormalizationRules::defaults() { return {}; }

NormalizationRules NormalizationRules::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open rule file: " + path);
  NormalizationRules rules;
  rules.custom_ = true;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::size_t sp = line.find_first_of(" \t", start);
    if (sp == std::string::npos)
      throw Error("rule file line " + std::to_string(line_no) +
                  ": expected '<placeholder> regex'");
    std::string ph = line.substr(start, sp - start);
    std::size_t rx_start = line.find_first_not_of(" \t", sp);
    if (rx_start == std::string::npos)
      throw Error("rule file line " + std::to_string(line_no) +
                  ": missing regex");
    std::string rx = line.substr(rx_start);
    while (!rx.empty() && (rx.back() == '\r' || rx.back() == ' ')) rx.pop_back();
    if (parse_placeholder(ph, 0) != ph.size())
      throw Error("rule file line " + std::to_string(line_no) +
                  ": placeholder must look like <name>");
    try {
      rules.compiled_.emplace_back(ph, std::regex(rx));
    } catch (const std::regex_error& e) {
      throw Error("rule file line " + std::to_string(line_no) +
                  ": bad regex: " + e.what());
    }
    rules.rules_.emplace_back(ph, rx);
  }
  return rules;
}

std::optional<TokenSequence> try_tokenize(const RawRecord& record,
                                          const NormalizationRules& rules) {
  TokenSequence seq;
  seq.record_line_no = record.line_no;
  const std::size_t cap = rules.max_tokens();
  if (!rules.is_custom()) {
    scan_line(record.text, true, cap, seq.tokens);
  } else {
    std::string line = record.text;
    for (const auto& [ph, re] : rules.compiled())
      line = std::regex_replace(line, re, ph);
    scan_line(line, false, cap, seq.tokens);
  }
  if (seq.tokens.empty()) return std::nullopt;
  if (seq.tokens.size() > cap) {
    seq.tokens.resize(cap - 1);
    seq.tokens.push_back("<trunc>");
  }
  return seq;
}

TokenSequence tokenize(const RawRecord& record,
                       const NormalizationRules& rules) {
  auto seq = try_tokenize(record, rules);
  if (!seq) throw EmptyRecordError();
  return std::move(*seq);
}

std::optional<RecordFormat> record_format_from_string(const std::string& s) {
  if (s == "lines") return RecordFormat::kLines;
  if (s == "jsonl") return RecordFormat::kJsonl;
  return std::nullopt;
}

RecordReader::RecordReader(std::istream& in, RecordFormat format)
    : in_(in), format_(format) {}

std::optional<RawRecord> RecordReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;  // no record can carry empty text
    RawRecord rec;
    rec.line_no = line_no_;
    if (format_ == RecordFormat::kLines) {
      rec.text = std::move(line);
      return rec;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw RecordParseError(line_no_, std::string("invalid json: ") + e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j["text"].is_string())
      throw RecordParseError(line_no_, "missing string field \"text\"");
    rec.text = j["text"].get<std::string>();
    if (rec.text.empty()) throw RecordParseError(line_no_, "empty \"text\"");
    // preset_label wins when both are present; a bare "label" field is
    // taken as the label the producing system attached.
    for (const char* key : {"preset_label", "label"}) {
      if (j.contains(key)) {
        if (!j[key].is_string())
          throw RecordParseError(line_no_, std::string(key) + " must be a string");
        auto cls = log_class_from_string(j[key].get<std::string>());
        if (!cls)
          throw RecordParseError(line_no_, "unknown label '" +
                                               j[key].get<std::string>() + "'");
        rec.preset_label = *cls;
        break;
      }
    }
    return rec;
  }
  return std::nullopt;
}

}  // namespace tok
}  // namespace logsieve
