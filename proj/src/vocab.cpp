#include "logsieve/vocab.hpp"

#include <stdexcept>

#include "logsieve/binio.hpp"

namespace logsieve {

Vocabulary::Vocabulary() {
  intern("<s>");
  intern("</s>");
  intern("<unk>");
}

TokenId Vocabulary::intern(const std::string& token) {
  auto it = ids_.find(token);
  if (it != ids_.end()) return it->second;
  TokenId id = static_cast<TokenId>(tokens_.size());
  tokens_.push_back(token);
  ids_.emplace(token, id);
  return id;
}

std::optional<TokenId> Vocabulary::id_of(const std::string& token) const {
  auto it = ids_.find(token);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id_or_unk(const std::string& token) const {
  auto it = ids_.find(token);
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  if (id >= tokens_.size()) throw std::out_of_range("token id out of range");
  return tokens_[id];
}

void Vocabulary::save(BinWriter& w) const {
  w.u32(static_cast<std::uint32_t>(tokens_.size()));
  for (const auto& t : tokens_) w.str(t);
}

Vocabulary Vocabulary::load(BinReader& r) {
  std::uint32_t n = r.u32();
  if (n < 3) throw ModelFormatError("vocabulary missing reserved tokens");
  Vocabulary v;
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string t = r.str();
    if (i < 3) {
      if (t != v.tokens_[i])
        throw ModelFormatError("reserved token slot " + std::to_string(i) +
                               " holds '" + t + "'");
      continue;
    }
    if (v.ids_.count(t))
      throw ModelFormatError("duplicate vocabulary entry '" + t + "'");
    v.intern(t);
  }
  return v;
}

}  // namespace logsieve
