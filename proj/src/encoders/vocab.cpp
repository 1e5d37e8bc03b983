#include "pima/encoders/vocab.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "pima/error.hpp"

namespace pima::encoders {

Vocabulary::Vocabulary() {
  add(kPadToken);
  add(kUnkToken);
}

int Vocabulary::add(std::string_view token) {
  if (auto it = ids_.find(std::string(token)); it != ids_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.emplace_back(token);
  ids_.emplace(tokens_.back(), id);
  return id;
}

int Vocabulary::id(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.contains(std::string(token)); }

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw Error("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::string Vocabulary::to_tsv() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    out += tokens_[i];
    out += '\t';
    out += std::to_string(i);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::from_tsv(std::string_view text) {
  Vocabulary vocab;
  vocab.tokens_.clear();
  vocab.ids_.clear();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.rfind('\t');
    if (tab == std::string::npos || tab == 0) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": expected token<TAB>id");
    }
    const std::string token = line.substr(0, tab);
    int id = -1;
    try {
      std::size_t used = 0;
      id = std::stoi(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) id = -1;
    } catch (const std::exception&) {
      id = -1;
    }
    if (id != static_cast<int>(vocab.tokens_.size())) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": id must be " +
                       std::to_string(vocab.tokens_.size()));
    }
    if (vocab.ids_.contains(token)) {
      throw ParseError("vocabulary line " + std::to_string(line_no) + ": duplicate token '" + token + "'");
    }
    vocab.add(token);
  }
  if (vocab.size() < 2 || vocab.token(kPad) != kPadToken || vocab.token(kUnk) != kUnkToken) {
    throw ParseError("vocabulary: missing reserved <pad>/<unk> entries");
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_tsv();
  if (!out) throw Error("write failed: " + path.string());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_tsv(buffer.str());
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      if (!current.empty()) words.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

std::vector<int> tokenize(std::string_view text, const Vocabulary& vocab) {
  std::vector<int> ids;
  for (const std::string& w : split_words(text)) ids.push_back(vocab.id(w));
  if (ids.empty()) ids.push_back(Vocabulary::kPad);
  return ids;
}

}  // namespace pima::encoders
