#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "visattn/model.hpp"

namespace visattn {

enum class Relation { left, right, on, under, behind, front };

inline constexpr std::array<Relation, 6> kAllRelations{Relation::left,  Relation::right,
                                                       Relation::on,    Relation::under,
                                                       Relation::behind, Relation::front};

std::string_view to_string(Relation r) noexcept;
/// Case-insensitive.
std::optional<Relation> parse_relation(std::string_view s) noexcept;
/// left<->right, on<->under, behind<->front.
Relation inverse(Relation r) noexcept;

/// Closed word-level vocabulary shared by the prompt builder and both model
/// kinds. Answer words have fixed ids so greedy tie-breaks are stable:
/// left < right < on < under < behind < front < true < false.
class Vocabulary {
 public:
  static constexpr TokenId kEnd = 0;
  static constexpr TokenId kBegin = 1;
  static constexpr TokenId kImage = 2;
  static constexpr TokenId kUnknown = 3;

  static const Vocabulary& standard();

  std::size_t size() const noexcept { return words_.size(); }
  /// Lower-cased lookup; unknown words map to kUnknown.
  TokenId id(std::string_view word) const;
  const std::string& word(TokenId id) const;
  TokenId relation_token(Relation r) const;

  /// Splits on whitespace and detaches '?', ',' and '.'.
  std::vector<TokenId> encode(std::string_view text) const;

  const std::vector<std::string>& object_names() const noexcept { return objects_; }

 private:
  Vocabulary();

  std::vector<std::string> words_;
  std::vector<std::string> objects_;
};

}  // namespace visattn
