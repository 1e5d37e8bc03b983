#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace pima::encoders {

/// Dense token -> id map with reserved PAD and UNK ids.
class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();

  /// Returns the id of `token`, inserting it if new.
  int add(std::string_view token);
  /// Id of `token`, or kUnk.
  int id(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }

  /// "token<TAB>id" lines in id order.
  std::string to_tsv() const;
  static Vocabulary from_tsv(std::string_view text);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

/// Lowercases and whitespace-splits `text`; unknown words map to UNK and
/// empty text to a single PAD.
std::vector<int> tokenize(std::string_view text, const Vocabulary& vocab);

/// Lowercased whitespace-separated words of `text`.
std::vector<std::string> split_words(std::string_view text);

}  // namespace pima::encoders
