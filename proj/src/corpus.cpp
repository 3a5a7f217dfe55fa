// Copyright 2026 The Topicmine Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "topicmine/corpus.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "topicmine/common.hpp"

namespace topicmine::corpus {

namespace {

using nlohmann::json;

std::string require_string(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw std::invalid_argument(std::string("missing key '") + key + "'");
  if (!it->is_string()) throw std::invalid_argument(std::string("key '") + key + "' is not a string");
  return it->get<std::string>();
}

// Multi-byte punctuation detached by the tokenizer: curly quotes, dashes, ellipsis.
std::size_t utf8_punct_at(std::string_view s, std::size_t pos) {
  if (pos + 3 > s.size()) return 0;
  if (static_cast<unsigned char>(s[pos]) != 0xE2 || static_cast<unsigned char>(s[pos + 1]) != 0x80) return 0;
  switch (static_cast<unsigned char>(s[pos + 2])) {
    case 0x93: case 0x94: case 0x98: case 0x99: case 0x9C: case 0x9D: case 0xA6:
      return 3;
    default:
      return 0;
  }
}

std::size_t utf8_punct_before(std::string_view s, std::size_t end) {
  if (end < 3) return 0;
  return utf8_punct_at(s, end - 3);
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) { return c == ')' || c == ']' || c == '"' || c == '\''; }

std::size_t closer_len(std::string_view s, std::size_t pos) {
  if (pos >= s.size()) return 0;
  if (is_closer(s[pos])) return 1;
  const std::size_t n = utf8_punct_at(s, pos);
  if (n && (static_cast<unsigned char>(s[pos + 2]) == 0x9D || static_cast<unsigned char>(s[pos + 2]) == 0x99)) return n;
  return 0;
}

// The whitespace-delimited word that ends right before `dot`, without leading
// brackets or quotes.
std::string_view word_before(std::string_view s, std::size_t dot) {
  std::size_t begin = dot;
  while (begin > 0 && !text::is_space(s[begin - 1])) --begin;
  std::string_view w = s.substr(begin, dot - begin);
  while (!w.empty()) {
    if (const std::size_t n = utf8_punct_at(w, 0)) {
      w.remove_prefix(n);
    } else if (w.front() == '(' || w.front() == '[' || w.front() == '"' || w.front() == '\'') {
      w.remove_prefix(1);
    } else {
      break;
    }
  }
  return w;
}

// Blank line: newline, optional horizontal whitespace, newline.
bool blank_line_at(std::string_view s, std::size_t pos) {
  if (s[pos] != '\n') return false;
  std::size_t k = pos + 1;
  while (k < s.size() && (s[k] == ' ' || s[k] == '\t' || s[k] == '\r')) ++k;
  return k < s.size() && s[k] == '\n';
}

}  // namespace

Document parse_document(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
  }
  if (!obj.is_object()) throw std::invalid_argument("record is not a JSON object");

  Document doc;
  doc.doc_id = require_string(obj, "doc_id");
  doc.title = require_string(obj, "title");
  doc.body = require_string(obj, "body");
  doc.author_id = require_string(obj, "author_id");
  auto ts = obj.find("timestamp");
  if (ts == obj.end()) throw std::invalid_argument("missing key 'timestamp'");
  if (!ts->is_number_integer()) throw std::invalid_argument("key 'timestamp' is not an integer");
  doc.timestamp = ts->get<std::int64_t>();
  if (doc.timestamp < 0) throw std::invalid_argument("key 'timestamp' is negative");
  if (doc.doc_id.empty()) throw std::invalid_argument("empty doc_id");
  if (auto del = obj.find("deleted"); del != obj.end()) {
    if (!del->is_boolean()) throw std::invalid_argument("key 'deleted' is not a boolean");
    doc.deleted = del->get<bool>();
  }
  return doc;
}

JsonlReader::JsonlReader(const std::filesystem::path& path) : in_(path) {
  if (!in_) throw std::runtime_error("cannot open corpus file " + path.string());
}

std::optional<Document> JsonlReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    try {
      return parse_document(line);
    } catch (const std::invalid_argument& e) {
      errors_.push_back({line_no_, e.what()});
    }
  }
  return std::nullopt;
}

IngestResult ingest_jsonl(const std::filesystem::path& path) {
  JsonlReader reader(path);
  IngestResult result;
  std::unordered_map<std::string, std::size_t> position;
  while (auto doc = reader.next()) {
    auto [it, inserted] = position.emplace(doc->doc_id, result.documents.size());
    if (inserted) {
      result.documents.push_back(std::move(*doc));
    } else {
      result.documents[it->second] = std::move(*doc);
    }
  }
  result.errors = reader.errors();
  return result;
}

AbbreviationList AbbreviationList::defaults() {
  return AbbreviationList({"Dr", "Mr", "Mrs", "Ms", "Prof", "Inc", "Corp", "etc", "e.g", "i.e", "vs"});
}

AbbreviationList AbbreviationList::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open abbreviation list " + path.string());
  std::vector<std::string> entries;
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.back() == '.') t.remove_suffix(1);
    entries.emplace_back(t);
  }
  return AbbreviationList(std::move(entries));
}

AbbreviationList::AbbreviationList(std::vector<std::string> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end());
}

bool AbbreviationList::contains(std::string_view word) const {
  if (word.size() == 1 && text::is_upper(word[0])) return true;
  return std::binary_search(entries_.begin(), entries_.end(), word);
}

std::vector<Sentence> split_sentences(const Document& doc, const AbbreviationList& abbreviations) {
  std::vector<Sentence> out;

  const std::string_view title = doc.title;
  const std::string_view title_trimmed = text::trim(title);
  if (!title_trimmed.empty()) {
    const std::size_t begin = static_cast<std::size_t>(title_trimmed.data() - title.data());
    out.push_back({doc.doc_id, 0, {begin, begin + title_trimmed.size()}, std::string(title_trimmed), true});
  }

  const std::string_view body = doc.body;
  const std::size_t n = body.size();
  std::size_t i = 0;
  while (i < n) {
    while (i < n && text::is_space(body[i])) ++i;
    if (i == n) break;
    const std::size_t start = i;
    std::size_t end = n;
    std::size_t j = start;
    while (j < n) {
      const char c = body[j];
      if (c == '\n' && blank_line_at(body, j)) {
        end = j;
        break;
      }
      if (!is_terminator(c)) {
        ++j;
        continue;
      }
      std::size_t k = j + 1;
      while (k < n && is_terminator(body[k])) ++k;
      const bool single_dot = c == '.' && k == j + 1;
      while (const std::size_t len = closer_len(body, k)) k += len;
      if (k < n && !text::is_space(body[k])) {
        j = k;
        continue;
      }
      if (single_dot && abbreviations.contains(word_before(body, j))) {
        j = k;
        continue;
      }
      end = k;
      break;
    }
    std::size_t stop = end;
    while (stop > start && text::is_space(body[stop - 1])) --stop;
    out.push_back({doc.doc_id, out.size(), {start, stop}, std::string(body.substr(start, stop - start)), false});
    i = end;
  }
  return out;
}

std::vector<Token> tokenize(const Sentence& sentence) {
  const std::string_view s = sentence.text;
  std::vector<Token> out;
  auto emit = [&](std::size_t b, std::size_t e) {
    out.push_back({sentence.index, out.size(), {b, e}, std::string(s.substr(b, e - b))});
  };

  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && text::is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !text::is_space(s[j])) ++j;
    if (j == i) break;

    std::size_t a = i;
    std::size_t b = j;
    while (a < b) {
      std::size_t len = utf8_punct_at(s, a);
      if (!len && text::is_punct(s[a])) len = 1;
      if (!len || a + len > b) break;
      emit(a, a + len);
      a += len;
    }
    std::vector<Span> trailing;
    while (b > a) {
      std::size_t len = utf8_punct_before(s, b);
      if (len && b - len < a) len = 0;
      if (!len && text::is_punct(s[b - 1])) len = 1;
      if (!len) break;
      trailing.push_back({b - len, b});
      b -= len;
    }
    if (b > a) emit(a, b);
    for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) emit(it->begin, it->end);
    i = j;
  }
  return out;
}

std::vector<Token> tokenize(std::string_view text) {
  Sentence s;
  s.text = std::string(text);
  s.span = {0, text.size()};
  return tokenize(s);
}

std::vector<std::string> surfaces(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

}  // namespace topicmine::corpus
