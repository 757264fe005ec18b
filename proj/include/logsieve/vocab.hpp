#ifndef LOGSIEVE_VOCAB_HPP
#define LOGSIEVE_VOCAB_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace logsieve {

class BinWriter;
class BinReader;

using TokenId = std::uint32_t;

// Token <-> id bijection. Ids 0..2 are reserved and always present:
// <s> pads contexts, </s> marks sequence end, <unk> absorbs OOV tokens.
class Vocabulary {
 public:
  static constexpr TokenId kBos = 0;  // <s>
  static constexpr TokenId kEos = 1;  // </s>
  static constexpr TokenId kUnk = 2;  // <unk>

  Vocabulary();

  // Returns the id, adding the token if unseen.
  TokenId intern(const std::string& token);
  // Lookup without insertion.
  std::optional<TokenId> id_of(const std::string& token) const;
  // OOV surface tokens map to <unk>.
  TokenId id_or_unk(const std::string& token) const;
  const std::string& token_of(TokenId id) const;

  std::size_t size() const { return tokens_.size(); }

  void save(BinWriter& w) const;
  static Vocabulary load(BinReader& r);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace logsieve

#endif  // LOGSIEVE_VOCAB_HPP
