#include "visattn/vocab.hpp"

#include <algorithm>
#include <cctype>

#include "visattn/error.hpp"

namespace visattn {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::string_view to_string(Relation r) noexcept {
  switch (r) {
    case Relation::left: return "left";
    case Relation::right: return "right";
    case Relation::on: return "on";
    case Relation::under: return "under";
    case Relation::behind: return "behind";
    case Relation::front: return "front";
  }
  return "left";
}

std::optional<Relation> parse_relation(std::string_view s) noexcept {
  const std::string l = lower(s);
  for (Relation r : kAllRelations) {
    if (l == to_string(r)) return r;
  }
  return std::nullopt;
}

Relation inverse(Relation r) noexcept {
  switch (r) {
    case Relation::left: return Relation::right;
    case Relation::right: return Relation::left;
    case Relation::on: return Relation::under;
    case Relation::under: return Relation::on;
    case Relation::behind: return Relation::front;
    case Relation::front: return Relation::behind;
  }
  return r;
}

Vocabulary::Vocabulary() {
  words_ = {"<eos>", "<bos>", "<image>", "<unk>",
            "left",  "right", "on",      "under", "behind", "front", "true", "false",
            "user:", "assistant:", "where", "is", "the", "in", "relation", "to", "?",
            "answer", "with", "or", ",", ".", "a", "of"};
  objects_ = {"mug",   "plate", "book",  "bowl",   "cup",    "candle", "knife",  "phone",
              "table", "chair", "shelf", "box",    "lamp",   "bottle", "remote", "sofa"};
  words_.insert(words_.end(), objects_.begin(), objects_.end());
}

const Vocabulary& Vocabulary::standard() {
  static const Vocabulary vocab;
  return vocab;
}

TokenId Vocabulary::id(std::string_view word) const {
  const std::string l = lower(word);
  auto it = std::find(words_.begin(), words_.end(), l);
  return it == words_.end() ? kUnknown : static_cast<TokenId>(it - words_.begin());
}

const std::string& Vocabulary::word(TokenId id) const {
  if (id >= words_.size()) throw ContractViolation("vocabulary: token id out of range");
  return words_[id];
}

TokenId Vocabulary::relation_token(Relation r) const { return 4 + static_cast<TokenId>(r); }

std::vector<TokenId> Vocabulary::encode(std::string_view text) const {
  std::vector<TokenId> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(id(cur));
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else if (c == '?' || c == ',' || c == '.') {
      flush();
      out.push_back(id(std::string_view(&c, 1)));
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

}  // namespace visattn
