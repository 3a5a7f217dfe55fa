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

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace topicmine::corpus {

/// Half-open byte range [begin, end).
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool operator==(const Span&) const = default;
};

struct Document {
  std::string doc_id;
  std::string title;
  std::string body;
  std::string author_id;
  std::int64_t timestamp = 0;
  bool deleted = false;

  bool operator==(const Document&) const = default;
};

/// A sentence of a document. Title sentences index into the title, the rest
/// into the body.
struct Sentence {
  std::string doc_id;
  std::size_t index = 0;
  Span span;
  std::string text;
  bool from_title = false;

  bool operator==(const Sentence&) const = default;
};

struct Token {
  std::size_t sentence_index = 0;
  std::size_t word_index = 0;
  Span span;  // into Sentence::text
  std::string surface;

  bool operator==(const Token&) const = default;
};

struct IngestError {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

/// Parses one JSONL record. Throws std::invalid_argument with a reason on a
/// malformed object or a missing/ill-typed key.
Document parse_document(std::string_view line);

/// Streaming reader over a JSONL corpus. Bad lines become IngestError records
/// and reading continues. Duplicate ids are not resolved here.
class JsonlReader {
 public:
  explicit JsonlReader(const std::filesystem::path& path);

  /// Next well-formed document in file order, or nullopt at end of file.
  std::optional<Document> next();

  const std::vector<IngestError>& errors() const { return errors_; }

 private:
  std::ifstream in_;
  std::size_t line_no_ = 0;
  std::vector<IngestError> errors_;
};

struct IngestResult {
  std::vector<Document> documents;
  std::vector<IngestError> errors;
};

/// Reads a whole corpus. A later record with an already seen doc_id replaces
/// the earlier one in place.
IngestResult ingest_jsonl(const std::filesystem::path& path);

/// Abbreviations that do not end a sentence when followed by '.'.
class AbbreviationList {
 public:
  /// Dr, Mr, Mrs, Ms, Prof, Inc, Corp, etc, e.g, i.e, vs.
  static AbbreviationList defaults();
  /// One entry per line; blank lines and lines starting with '#' are skipped.
  static AbbreviationList load(const std::filesystem::path& path);

  explicit AbbreviationList(std::vector<std::string> entries);

  /// True for listed entries and for any single capital letter.
  bool contains(std::string_view word) const;

 private:
  std::vector<std::string> entries_;
};

std::vector<Sentence> split_sentences(const Document& doc,
                                      const AbbreviationList& abbreviations = AbbreviationList::defaults());

std::vector<Token> tokenize(const Sentence& sentence);

/// Tokenizes a bare string (sentence index 0).
std::vector<Token> tokenize(std::string_view text);

std::vector<std::string> surfaces(const std::vector<Token>& tokens);

}  // namespace topicmine::corpus
